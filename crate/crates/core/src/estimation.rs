//! SLDs, quantum Fisher information, the commutator matrix and the scalar
//! bounds built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::matcore::{eig_hermitian, operator_norm, real, trace_abs, CMatrix, EigenDecomposition, HermitianMatrix};
use crate::model::{DensityMatrix, EncodedModel};
use crate::numerics::numerics;

/// SLDs with the QFI matrix `F_ij = Re Tr[ρ L_i L_j]` and the commutator
/// matrix `A_ij = Im Tr[ρ L_i L_j] = Tr[ρ [L_i, L_j]] / 2i`.
#[derive(Debug, Clone)]
pub struct InfoBundle {
    pub slds: Vec<HermitianMatrix>,
    pub fisher: DMatrix<f64>,
    pub commutator: DMatrix<f64>,
    pub support_rank: usize,
}

impl InfoBundle {
    pub fn n_params(&self) -> usize {
        self.fisher.nrows()
    }

    pub fn commutator_norm(&self) -> f64 {
        self.commutator.norm()
    }

    /// `F⁻¹`, or `SingularFisher` if `λ_min(F) ≤ singular_fisher · ‖F‖`.
    pub fn fisher_inverse(&self) -> Result<DMatrix<f64>> {
        fisher_inverse(&self.fisher)
    }
}

fn check_fisher(f: &DMatrix<f64>) -> Result<()> {
    let norm = f.norm();
    let min = f.clone().symmetric_eigenvalues().min();
    if min.is_nan() || min <= numerics().singular_fisher * norm {
        return Err(Error::SingularFisher { min, norm });
    }
    Ok(())
}

fn fisher_inverse(f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_fisher(f)?;
    let inv = f.clone().cholesky().ok_or(Error::SingularMatrix)?.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Real symmetric positive semidefinite weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return invalid("weight matrix must be square and non-empty");
        }
        if g.iter().any(|v| !v.is_finite()) {
            return invalid("weight matrix has non-finite entries");
        }
        let scale = g.abs().max().max(1.0);
        if (&g - g.transpose()).abs().max() > 1e-10 * scale {
            return invalid("weight matrix is not symmetric");
        }
        let g = (&g + g.transpose()) * 0.5;
        let min = g.clone().symmetric_eigenvalues().min();
        if min < -1e-12 * scale {
            return invalid(format!("weight matrix is not positive semidefinite (min eigenvalue {min:.3e})"));
        }
        Ok(WeightMatrix(g))
    }

    pub fn identity(d: usize) -> Self {
        WeightMatrix(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Rescaled to unit trace (unchanged if the trace vanishes).
    pub fn normalized(&self) -> Self {
        let tr = self.0.trace();
        if tr > 0.0 {
            WeightMatrix(&self.0 / tr)
        } else {
            self.clone()
        }
    }

    fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::from_real(&self.0).expect("weight matrices are symmetric")
    }
}

struct Support {
    eig: EigenDecomposition,
    tau: f64,
}

impl Support {
    fn of(rho: &DensityMatrix) -> Result<Self> {
        let eig = eig_hermitian(rho.as_hermitian())?;
        let tau = numerics().support_rel * eig.max_abs();
        Ok(Support { eig, tau })
    }

    fn rank(&self) -> usize {
        self.eig.eigenvalues.iter().filter(|&&p| p > self.tau).count()
    }

    fn sld(&self, drho: &HermitianMatrix) -> Result<HermitianMatrix> {
        let v = &self.eig.eigenvectors;
        let p = &self.eig.eigenvalues;
        let dim = p.len();
        let d = v.adjoint() * drho.matrix() * v;
        let mut off = 0.0;
        let l = CMatrix::from_fn(dim, dim, |a, b| {
            if p[a] > self.tau || p[b] > self.tau {
                d[(a, b)] * (2.0 / (p[a] + p[b]))
            } else {
                off += d[(a, b)].norm_sqr();
                real(0.0)
            }
        });
        let off = off.sqrt();
        if off > numerics().off_support {
            return Err(Error::ModelNotDifferentiable(off));
        }
        HermitianMatrix::new(v * l * v.adjoint())
    }
}

/// Symmetric logarithmic derivative: the solution of `ρL + Lρ = 2∂ρ` on
/// the support of `ρ`, zero elsewhere.
pub fn sld(rho: &DensityMatrix, drho: &HermitianMatrix) -> Result<HermitianMatrix> {
    if rho.dim() != drho.dim() {
        return invalid("state and derivative have different dimensions");
    }
    Support::of(rho)?.sld(drho)
}

/// `‖ρL + Lρ - 2∂ρ‖_F`.
pub fn lyapunov_residual(rho: &DensityMatrix, l: &HermitianMatrix, drho: &HermitianMatrix) -> f64 {
    let r = rho.matrix();
    let m = l.matrix();
    (r * m + m * r - drho.matrix() * real(2.0)).norm()
}

/// SLDs, `F` and `A` without the nonsingularity check on `F`.
pub fn info_bundle_unchecked(enc: &EncodedModel) -> Result<InfoBundle> {
    let support = Support::of(&enc.rho_theta)?;
    let slds = enc.drho.iter().map(|dr| support.sld(dr)).collect::<Result<Vec<_>>>()?;
    let d = slds.len();
    let rho = enc.rho_theta.matrix();
    let rl: Vec<CMatrix> = slds.iter().map(|l| rho * l.matrix()).collect();
    let mut fisher = DMatrix::zeros(d, d);
    let mut commutator = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            // Tr[ρ L_i L_j] = Σ_ab (ρL_i)_ab (L_j)_ba
            let z = rl[i].component_mul(&slds[j].matrix().transpose()).sum();
            fisher[(i, j)] = z.re;
            fisher[(j, i)] = z.re;
            commutator[(i, j)] = z.im;
            commutator[(j, i)] = -z.im;
        }
    }
    Ok(InfoBundle { slds, fisher, commutator, support_rank: support.rank() })
}

/// [`info_bundle_unchecked`] followed by the check `λ_min(F) > singular_fisher · ‖F‖`.
pub fn info_bundle(enc: &EncodedModel) -> Result<InfoBundle> {
    let b = info_bundle_unchecked(enc)?;
    check_fisher(&b.fisher)?;
    Ok(b)
}

fn check_weight(g: &WeightMatrix, d: usize) -> Result<()> {
    if g.dim() != d {
        return invalid(format!("weight matrix is {}x{}, model has {d} parameters", g.dim(), g.dim()));
    }
    Ok(())
}

/// `C_S(G) = Tr[G F⁻¹]`.
pub fn c_s(g: &WeightMatrix, fisher: &DMatrix<f64>) -> Result<f64> {
    check_weight(g, fisher.nrows())?;
    Ok((g.matrix() * fisher_inverse(fisher)?).trace())
}

/// `C_Z(G) = Tr[G F⁻¹] + TrAbs[G F⁻¹ A F⁻¹]`.
pub fn c_z(g: &WeightMatrix, bundle: &InfoBundle) -> Result<f64> {
    check_weight(g, bundle.n_params())?;
    let finv = bundle.fisher_inverse()?;
    let cs = (g.matrix() * &finv).trace();
    let r = &finv * &bundle.commutator * &finv;
    Ok(cs + trace_abs(&g.as_hermitian(), &r.map(real))?)
}

/// `F^{-1/2} A F^{-1/2}`.
fn whitened_commutator(bundle: &InfoBundle) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_fisher(&bundle.fisher)?;
    let eig = bundle.fisher.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let half = v * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * v.transpose();
    let inv_half = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt())) * v.transpose();
    Ok((&inv_half * &bundle.commutator * &inv_half, half))
}

/// `I* = ‖F^{-1/2} A F^{-1/2}‖`.
pub fn istar(bundle: &InfoBundle) -> Result<f64> {
    let (a, _) = whitened_commutator(bundle)?;
    operator_norm(&a.map(real))
}

/// A weight matrix attaining `TrAbs[G F⁻¹AF⁻¹] / Tr[G F⁻¹] = I*`: half the
/// projector onto the leading canonical plane of `F^{-1/2} A F^{-1/2}`,
/// pulled back through `F^{1/2}`.
pub fn optimal_weight_istar(bundle: &InfoBundle) -> Result<WeightMatrix> {
    let (a, half) = whitened_commutator(bundle)?;
    if bundle.commutator_norm() <= numerics().a_zero {
        return Err(Error::NoIncompatibility);
    }
    let herm = HermitianMatrix::new(a.map(|x| real(x) * crate::matcore::I))?;
    let eig = eig_hermitian(&herm)?;
    let d = a.nrows();
    let top = eig.eigenvectors.column(d - 1);
    let re = DVector::from_iterator(d, top.iter().map(|z| z.re));
    let im = DVector::from_iterator(d, top.iter().map(|z| z.im));
    // The leading eigenvector of iA' is (e1 + i e2)/√2 for an orthonormal pair spanning the plane.
    let projector = (&re * re.transpose() + &im * im.transpose()) * 2.0;
    let gp = projector * 0.5;
    WeightMatrix::new(&half * gp * &half)
}

/// `G = Σ_i g_i ∇f_i ∇f_iᵀ`.
pub fn weight_from_functions(d: usize, grads: &[Vec<f64>], weights: &[f64]) -> Result<WeightMatrix> {
    if d == 0 {
        return invalid("number of parameters must be positive");
    }
    if grads.len() != weights.len() {
        return invalid("one weight per function gradient is required");
    }
    let mut g = DMatrix::zeros(d, d);
    for (grad, &w) in grads.iter().zip(weights) {
        if !w.is_finite() || w < 0.0 {
            return invalid(format!("weight {w} must be finite and nonnegative"));
        }
        if grad.len() != d || grad.iter().any(|v| !v.is_finite()) {
            return invalid(format!("gradients must have {d} finite entries"));
        }
        let v = DVector::from_column_slice(grad);
        g += &v * v.transpose() * w;
    }
    WeightMatrix::new(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableBound {
    pub value: f64,
    /// True when `value` is the exact separable figure rather than a lower bound.
    pub exact: bool,
}

/// Separable-measurement figure: exactly `d` on a qubit, at least `d/(D-1)` otherwise.
pub fn separable_bound(d: usize, dim: usize) -> Result<SeparableBound> {
    if d < 1 || dim < 2 || d > dim * dim - 1 {
        return invalid(format!("separable bound needs 1 <= d <= D^2 - 1 and D >= 2 (got d = {d}, D = {dim})"));
    }
    Ok(if dim == 2 {
        SeparableBound { value: d as f64, exact: true }
    } else {
        SeparableBound { value: d as f64 / (dim as f64 - 1.0), exact: false }
    })
}

/// `I = √(2 Tr ρ² - 1) |λ|` for any two-phase qubit model; `purity` is
/// that of the probe before the noise.
pub fn qubit_closed_form(purity: f64, lambda: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&purity) {
        return invalid(format!("qubit purity {purity} outside [1/2, 1]"));
    }
    if !(-1.0 / 3.0..=1.0).contains(&lambda) {
        return invalid(format!("lambda = {lambda} outside [-1/3, 1]"));
    }
    Ok((2.0 * purity - 1.0).sqrt() * lambda.abs())
}

fn check_global_lambda(dim: usize, lambda: f64) -> Result<()> {
    if dim < 2 {
        return invalid("dimension must be at least 2");
    }
    let lo = -1.0 / ((dim * dim) as f64 - 1.0);
    if !(lo..=1.0).contains(&lambda) {
        return invalid(format!("lambda = {lambda} outside [{lo}, 1]"));
    }
    Ok(())
}

/// `I*(λ) = |λ| D / (2 + λ(D-2)) · I*(1)` for pure probes under global depolarizing.
pub fn ddim_scaling(dim: usize, lambda: f64, istar0: f64) -> Result<f64> {
    check_global_lambda(dim, lambda)?;
    let den = 2.0 + lambda * (dim as f64 - 2.0);
    assert!(den > 0.0);
    Ok(lambda.abs() * dim as f64 / den * istar0)
}

/// `κ*(λ) = |I*(λ) - I*(-λ)| / I*(λ) = 2|λ|(D-2) / (2 - λ(D-2))`, defined
/// where both `λ` and `-λ` are admissible, i.e. `|λ| ≤ 1/(D²-1)`.
pub fn kappa_star(dim: usize, lambda: f64) -> Result<f64> {
    check_global_lambda(dim, lambda)?;
    check_global_lambda(dim, -lambda)?;
    let den = 2.0 - lambda * (dim as f64 - 2.0);
    assert!(den > 0.0);
    Ok(2.0 * lambda.abs() * (dim as f64 - 2.0) / den)
}
