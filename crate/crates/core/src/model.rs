//! Parametrized statistical models.
//!
//! A model is a probe state, a set of traceless generators, a depolarizing
//! noise specification and an evaluation point `θ`. Encoding produces
//! `ρ_θ = U_θ Λ(ρ) U_θ†` with `U_θ = exp(i Σ θ_j H_j)` together with the
//! exact parameter derivatives `∂_j ρ_θ = i U_θ [H_j^eff(θ), Λ(ρ)] U_θ†`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::matcore::{
    anticommutator, averaged_conjugation, eig_hermitian, embed_identity, expm_i, fidelity, kron, partial_trace, pauli, real, CMatrix,
    CVector, HermitianMatrix, I,
};
use crate::numerics::numerics;

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let tol = numerics().trace_tol;
        let tr = m.trace();
        if (tr - 1.0).abs() > tol {
            return invalid(format!("density matrix trace is {tr}, expected 1"));
        }
        let eig = eig_hermitian(&m)?;
        let min = eig.eigenvalues[0];
        if min < -numerics().psd_clamp * eig.max_abs().max(1.0) {
            return invalid(format!("density matrix is not positive semidefinite (min eigenvalue {min:.3e})"));
        }
        let d = DensityMatrix(m);
        let purity = d.purity();
        let dim = d.dim() as f64;
        if purity < 1.0 / dim - tol || purity > 1.0 + tol {
            return invalid(format!("purity {purity} outside [1/D, 1]"));
        }
        Ok(d)
    }

    /// `|ψ⟩⟨ψ|` for a non-zero vector, normalized.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || !norm.is_finite() || norm == 0.0 {
            return invalid("pure state vector must be non-empty, finite and non-zero");
        }
        let v = psi / real(norm);
        Self::new(HermitianMatrix::new(&v * v.adjoint())?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn purity(&self) -> f64 {
        let m = self.0.matrix();
        m.component_mul(&m.transpose()).sum().re
    }

    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        fidelity(&self.0, &other.0)
    }
}

/// Traceless Hermitian generators `H_1, …, H_d` on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet(Vec<HermitianMatrix>);

impl GeneratorSet {
    pub fn new(generators: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return invalid("generator set is empty");
        };
        let dim = first.dim();
        if generators.iter().any(|h| h.dim() != dim) {
            return invalid("generators have different dimensions");
        }
        for (j, h) in generators.iter().enumerate() {
            if h.trace().abs() > numerics().trace_tol {
                return invalid(format!("generator {j} has trace {:.3e}; generators must be traceless", h.trace()));
            }
        }
        if generators.len() > dim * dim - 1 {
            return invalid(format!("{} parameters exceed D^2 - 1 = {}", generators.len(), dim * dim - 1));
        }
        Ok(GeneratorSet(generators))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    pub fn as_slice(&self) -> &[HermitianMatrix] {
        &self.0
    }

    /// `Σ_j θ_j H_j`.
    pub fn combination(&self, theta: &[f64]) -> Result<HermitianMatrix> {
        if theta.len() != self.len() {
            return invalid(format!("theta has {} entries, expected {}", theta.len(), self.len()));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return invalid("theta must be finite");
        }
        let mut h = HermitianMatrix::zeros(self.dim());
        for (t, g) in theta.iter().zip(&self.0) {
            h = h.add(&g.scale(*t));
        }
        Ok(h)
    }
}

/// Depolarizing noise applied to the probe.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    None,
    /// `ρ ↦ λρ + (1-λ) 1/D` on the whole space.
    GlobalDepolarizing {
        lambda: f64,
    },
    /// The qubit depolarizing channel applied to every site.
    LocalDepolarizing {
        lambda: f64,
        site_dims: Vec<usize>,
    },
}

impl NoiseSpec {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            NoiseSpec::None => None,
            NoiseSpec::GlobalDepolarizing { lambda } | NoiseSpec::LocalDepolarizing { lambda, .. } => Some(*lambda),
        }
    }

    /// Same kind and sites, new strength.
    pub fn with_lambda(&self, lambda: f64) -> NoiseSpec {
        match self {
            NoiseSpec::None => NoiseSpec::GlobalDepolarizing { lambda },
            NoiseSpec::GlobalDepolarizing { .. } => NoiseSpec::GlobalDepolarizing { lambda },
            NoiseSpec::LocalDepolarizing { site_dims, .. } => NoiseSpec::LocalDepolarizing { lambda, site_dims: site_dims.clone() },
        }
    }

    /// Admissible `λ` interval on a space of dimension `dim`.
    pub fn admissible_range(&self, dim: usize) -> (f64, f64) {
        match self {
            NoiseSpec::None => (1.0, 1.0),
            NoiseSpec::GlobalDepolarizing { .. } => global_lambda_range(dim),
            NoiseSpec::LocalDepolarizing { .. } => (-1.0 / 3.0, 1.0),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::GlobalDepolarizing { lambda } => check_lambda(*lambda, global_lambda_range(dim)),
            NoiseSpec::LocalDepolarizing { lambda, site_dims } => {
                check_local_sites(site_dims, dim)?;
                check_lambda(*lambda, (-1.0 / 3.0, 1.0))
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            NoiseSpec::None => Ok(rho.clone()),
            NoiseSpec::GlobalDepolarizing { lambda } => apply_depolarizing(rho, *lambda),
            NoiseSpec::LocalDepolarizing { lambda, site_dims } => apply_local_depolarizing(rho, *lambda, site_dims),
        }
    }
}

fn global_lambda_range(dim: usize) -> (f64, f64) {
    (-1.0 / ((dim * dim) as f64 - 1.0), 1.0)
}

const LAMBDA_SLACK: f64 = 1e-12;

fn check_lambda(lambda: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !lambda.is_finite() || lambda < lo - LAMBDA_SLACK || lambda > hi + LAMBDA_SLACK {
        return invalid(format!("lambda = {lambda} outside the admissible interval [{lo}, {hi}]"));
    }
    Ok(())
}

fn check_local_sites(site_dims: &[usize], dim: usize) -> Result<()> {
    if site_dims.is_empty() || site_dims.iter().any(|&d| d != 2) {
        return invalid("local depolarizing noise is defined on qubit sites only");
    }
    let product: usize = site_dims.iter().product();
    if product != dim {
        return invalid(format!("site dims multiply to {product}, state dimension is {dim}"));
    }
    Ok(())
}

/// `Λ_λ(ρ) = λρ + (1-λ) 1/D`.
pub fn apply_depolarizing(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    let dim = rho.dim();
    check_lambda(lambda, global_lambda_range(dim))?;
    let out = rho.as_hermitian().scale(lambda).add(&HermitianMatrix::identity(dim).scale((1.0 - lambda) / dim as f64));
    DensityMatrix::new(out)
}

/// Qubit depolarizing channel on each site in turn.
pub fn apply_local_depolarizing(rho: &DensityMatrix, lambda: f64, site_dims: &[usize]) -> Result<DensityMatrix> {
    check_local_sites(site_dims, rho.dim())?;
    check_lambda(lambda, (-1.0 / 3.0, 1.0))?;
    let mut m = rho.matrix().clone();
    for site in 0..site_dims.len() {
        let reduced = partial_trace(&m, site_dims, site)?;
        let mixed = embed_identity(&reduced, site_dims, site)? * real(0.5);
        m = m * real(lambda) + mixed * real(1.0 - lambda);
    }
    DensityMatrix::new(HermitianMatrix::new(m)?)
}

/// `U_θ = exp(i Σ θ_j H_j)`.
pub fn build_unitary(g: &GeneratorSet, theta: &[f64]) -> Result<CMatrix> {
    expm_i(&g.combination(theta)?)
}

/// `H_j^eff(θ) = ∫_0^1 e^{-isH} H_j e^{isH} ds` with `H = Σ θ_k H_k`, so that
/// `∂_j U_θ = U_θ (i H_j^eff)`.
pub fn effective_generators(g: &GeneratorSet, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
    let h = g.combination(theta)?;
    g.as_slice().iter().map(|k| averaged_conjugation(&h, k)).collect()
}

/// `H_j^total = Σ_sites 1 ⊗ … ⊗ H_j ⊗ … ⊗ 1`.
pub fn lift_local_generators(local: &GeneratorSet, n_sites: usize) -> Result<GeneratorSet> {
    if n_sites < 1 {
        return invalid("n_sites must be at least 1");
    }
    let d = local.dim();
    let lifted = local
        .as_slice()
        .iter()
        .map(|h| {
            let mut total = CMatrix::zeros(d.pow(n_sites as u32), d.pow(n_sites as u32));
            for site in 0..n_sites {
                let left = CMatrix::identity(d.pow(site as u32), d.pow(site as u32));
                let right = CMatrix::identity(d.pow((n_sites - site - 1) as u32), d.pow((n_sites - site - 1) as u32));
                total += kron(&kron(&left, h.matrix()), &right);
            }
            HermitianMatrix::new(total)
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratorSet::new(lifted)
}

/// Probe, generators, noise and evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalModel {
    pub probe: DensityMatrix,
    pub generators: GeneratorSet,
    pub noise: NoiseSpec,
    pub theta: Vec<f64>,
}

impl StatisticalModel {
    pub fn new(probe: DensityMatrix, generators: GeneratorSet, noise: NoiseSpec, theta: Vec<f64>) -> Result<Self> {
        if probe.dim() != generators.dim() {
            return invalid(format!("probe dimension {} differs from generator dimension {}", probe.dim(), generators.dim()));
        }
        if theta.len() != generators.len() {
            return invalid(format!("theta has {} entries, expected {}", theta.len(), generators.len()));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return invalid("theta must be finite");
        }
        noise.validate(probe.dim())?;
        Ok(StatisticalModel { probe, generators, noise, theta })
    }

    pub fn dim(&self) -> usize {
        self.probe.dim()
    }

    pub fn n_params(&self) -> usize {
        self.generators.len()
    }

    pub fn with_noise(&self, noise: NoiseSpec) -> Result<Self> {
        Self::new(self.probe.clone(), self.generators.clone(), noise, self.theta.clone())
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.probe.clone(), self.generators.clone(), self.noise.clone(), theta)
    }

    pub fn encode(&self) -> Result<EncodedModel> {
        encode(self)
    }
}

/// `ρ_θ` with its parameter derivatives and the effective generators at `θ`.
#[derive(Debug, Clone)]
pub struct EncodedModel {
    pub rho_theta: DensityMatrix,
    pub drho: Vec<HermitianMatrix>,
    pub effective_generators: Vec<HermitianMatrix>,
}

impl EncodedModel {
    pub fn dim(&self) -> usize {
        self.rho_theta.dim()
    }

    pub fn n_params(&self) -> usize {
        self.drho.len()
    }

    /// The model in new coordinates `θ = θ(η)` with Jacobian
    /// `J_kj = ∂θ_k/∂η_j`: `∂ρ/∂η_j = Σ_k J_kj ∂ρ/∂θ_k`.
    pub fn reparametrized(&self, jacobian: &DMatrix<f64>) -> Result<EncodedModel> {
        let d = self.n_params();
        if jacobian.nrows() != d || jacobian.ncols() != d {
            return invalid(format!("Jacobian must be {d}x{d}"));
        }
        if jacobian.determinant().abs() < 1e-14 {
            return Err(Error::SingularMatrix);
        }
        let mix = |ops: &[HermitianMatrix]| -> Vec<HermitianMatrix> {
            (0..d)
                .map(|j| {
                    let mut acc = HermitianMatrix::zeros(self.dim());
                    for (k, op) in ops.iter().enumerate() {
                        acc = acc.add(&op.scale(jacobian[(k, j)]));
                    }
                    acc
                })
                .collect()
        };
        Ok(EncodedModel { rho_theta: self.rho_theta.clone(), drho: mix(&self.drho), effective_generators: mix(&self.effective_generators) })
    }
}

pub fn encode(model: &StatisticalModel) -> Result<EncodedModel> {
    let noisy = model.noise.apply(&model.probe)?;
    let u = build_unitary(&model.generators, &model.theta)?;
    let heff = effective_generators(&model.generators, &model.theta)?;
    let rho_theta = DensityMatrix::new(noisy.as_hermitian().conjugate_by(&u))?;
    let drho = heff
        .iter()
        .map(|h| {
            let comm = (h.matrix() * noisy.matrix() - noisy.matrix() * h.matrix()) * I;
            HermitianMatrix::new(&u * comm * u.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedModel { rho_theta, drho, effective_generators: heff })
}

/// Orthogonalized, normalized pair of qubit effective generators together
/// with the Jacobian of the induced reparametrization.
#[derive(Debug, Clone)]
pub struct OrthonormalQubitFrame {
    /// `H̃_1 ∝ H_1^eff`, `H̃_2 ∝ H_2^eff - x H_1^eff`, each with unit Bloch vector.
    pub generators: GeneratorSet,
    /// `δθ' = J δθ`, so that `Σ δθ_j H_j^eff = Σ δθ'_j H̃_j`.
    pub jacobian: DMatrix<f64>,
}

fn bloch(h: &HermitianMatrix) -> [f64; 3] {
    let m = h.matrix();
    [(m * pauli::x().matrix()).trace().re / 2.0, (m * pauli::y().matrix()).trace().re / 2.0, (m * pauli::z().matrix()).trace().re / 2.0]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Gram-Schmidt on the two effective generators of a two-parameter qubit
/// model at `θ`.
pub fn orthonormalize_generators_qubit(g: &GeneratorSet, theta: &[f64]) -> Result<OrthonormalQubitFrame> {
    if g.dim() != 2 || g.len() != 2 {
        return invalid("qubit orthonormalization needs two generators on a qubit");
    }
    let heff = effective_generators(g, theta)?;
    let a = bloch(&heff[0]);
    let b = bloch(&heff[1]);
    let n1 = dot3(&a, &a).sqrt();
    if n1 < 1e-12 {
        return Err(Error::DegenerateModel("first effective generator vanishes".into()));
    }
    let x = dot3(&a, &b) / (n1 * n1);
    let perp = heff[1].sub(&heff[0].scale(x));
    let bp = bloch(&perp);
    let n2 = dot3(&bp, &bp).sqrt();
    if n2 < 1e-12 * n1.max(1.0) {
        return Err(Error::DegenerateModel("second effective generator is parallel to the first".into()));
    }
    let h1 = heff[0].scale(1.0 / n1);
    let h2 = perp.scale(1.0 / n2);
    let anti = anticommutator(h1.matrix(), h2.matrix());
    debug_assert!(anti.iter().all(|z| z.norm() < 1e-9));
    let jacobian = DMatrix::from_row_slice(2, 2, &[n1, n1 * x, 0.0, n2]);
    Ok(OrthonormalQubitFrame { generators: GeneratorSet::new(vec![h1, h2])?, jacobian })
}
