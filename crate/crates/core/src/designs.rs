//! Probe constructions with a vanishing commutator matrix, and
//! compatibility certificates.

use crate::error::{invalid, Error, Result};
use crate::estimation::info_bundle;
use crate::holevo::{r_value, HolevoOptions};
use crate::matcore::{c, commutator, eig_hermitian, kron, real, CMatrix, CVector, HermitianMatrix, C64, I};
use crate::model::{effective_generators, lift_local_generators, DensityMatrix, GeneratorSet, NoiseSpec, StatisticalModel};
use crate::numerics::numerics;

/// Band above `r = 1` inside which the SDP cannot decide either way.
const R_COMPATIBLE: f64 = 1e-6;
const R_INCOMPATIBLE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CompatibleByA,
    CompatibleBySdp,
    Incompatible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityCertificate {
    /// `‖A(θ)‖_F`.
    pub a_norm: f64,
    pub sdp_r: Option<f64>,
    pub verdict: Verdict,
}

/// `A = 0` is sufficient for compatibility; otherwise the SDP value of `r`
/// decides when solver options are given.
pub fn certify(model: &StatisticalModel, sdp: Option<&HolevoOptions>) -> Result<CompatibilityCertificate> {
    let enc = model.encode()?;
    let bundle = info_bundle(&enc)?;
    let a_norm = bundle.commutator_norm();
    let sdp_r = match sdp {
        Some(opts) => Some(r_value(&enc, opts)?.r),
        None => None,
    };
    let verdict = if a_norm <= numerics().a_zero {
        Verdict::CompatibleByA
    } else {
        match sdp_r {
            Some(r) if r <= 1.0 + R_COMPATIBLE => Verdict::CompatibleBySdp,
            Some(r) if r > 1.0 + R_INCOMPATIBLE => Verdict::Incompatible,
            _ => Verdict::Inconclusive,
        }
    };
    Ok(CompatibilityCertificate { a_norm, sdp_r, verdict })
}

/// `(1/√D) Σ_i |i⟩ ⊗ |i⟩`.
pub fn max_entangled_state(dim: usize) -> Result<CVector> {
    if dim < 2 {
        return invalid("maximally entangled state needs D >= 2");
    }
    let mut v = CVector::zeros(dim * dim);
    for i in 0..dim {
        v[i * dim + i] = real(1.0 / (dim as f64).sqrt());
    }
    Ok(v)
}

fn entangled_model(generators: Vec<HermitianMatrix>, dim: usize, theta: &[f64], noise: NoiseSpec) -> Result<StatisticalModel> {
    let probe = DensityMatrix::pure(&max_entangled_state(dim)?)?;
    StatisticalModel::new(probe, GeneratorSet::new(generators)?, noise, theta.to_vec())
}

/// Maximally entangled probe with the encoding acting on the second factor only
/// (`1 ⊗ U_θ`).
pub fn ancilla_model(gens: &GeneratorSet, theta: &[f64], noise: NoiseSpec) -> Result<StatisticalModel> {
    entangled_model(ancilla_generators(gens)?.as_slice().to_vec(), gens.dim(), theta, noise)
}

/// `1 ⊗ H_j` on ancilla ⊗ system.
pub fn ancilla_generators(gens: &GeneratorSet) -> Result<GeneratorSet> {
    let id = CMatrix::identity(gens.dim(), gens.dim());
    GeneratorSet::new(gens.as_slice().iter().map(|h| HermitianMatrix::new(kron(&id, h.matrix()))).collect::<Result<Vec<_>>>()?)
}

/// Maximally entangled probe under `U_θ ⊗ U_θ`.
pub fn double_model(gens: &GeneratorSet, theta: &[f64], noise: NoiseSpec) -> Result<StatisticalModel> {
    let lifted = lift_local_generators(gens, 2)?;
    entangled_model(lifted.as_slice().to_vec(), gens.dim(), theta, noise)
}

/// Choice of eigen-pairs, signs and phases for [`antiparallel_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct AntiparallelSpec {
    /// 1-based pair indices, pairs ordered by decreasing eigenvalue magnitude.
    pub subset: Vec<usize>,
    /// `true` swaps which state receives the positive member of the pair.
    pub signs: Vec<bool>,
    pub phases1: Vec<f64>,
    pub phases2: Vec<f64>,
    /// Mix the null eigenvector (odd `D`) into both states.
    pub zero_mode: bool,
}

impl AntiparallelSpec {
    /// Given pairs, no sign flips, zero phases.
    pub fn new(subset: Vec<usize>) -> Self {
        let k = subset.len();
        AntiparallelSpec { subset, signs: vec![false; k], phases1: vec![0.0; k], phases2: vec![0.0; k], zero_mode: false }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let k = self.subset.len();
        if k == 0 {
            return invalid("anti-parallel subset is empty");
        }
        if self.signs.len() != k || self.phases1.len() != k || self.phases2.len() != k {
            return invalid("signs and phases need one entry per subset index");
        }
        if self.subset.iter().any(|&j| j == 0 || j > dim / 2) {
            return invalid(format!("subset indices must lie in 1..={}", dim / 2));
        }
        let mut sorted = self.subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k {
            return invalid("subset indices must be distinct");
        }
        if self.phases1.iter().chain(&self.phases2).any(|p| !p.is_finite()) {
            return invalid("phases must be finite");
        }
        Ok(())
    }
}

/// First component of non-negligible modulus made real and positive.
fn fix_phase(v: CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => {
            let phase = z.conj() / z.norm();
            v * phase
        }
        None => v,
    }
}

/// Two states whose expectations of `[H_1, H_2]` cancel.
///
/// Eigenvalues `μ` of `-i[H_1, H_2]` are split into positive and negative
/// parts and paired by decreasing magnitude. For a pair `(p, -q)` the two
/// states receive vectors of the pair's plane with expectations `±min(p, q)`;
/// when `p = q` these are the bare eigenvectors.
pub fn antiparallel_pair(h1: &HermitianMatrix, h2: &HermitianMatrix, spec: &AntiparallelSpec) -> Result<(CVector, CVector)> {
    let dim = h1.dim();
    if h2.dim() != dim {
        return invalid("generators have different dimensions");
    }
    spec.validate(dim)?;
    let comm = commutator(h1.matrix(), h2.matrix());
    if comm.norm() <= numerics().a_zero {
        return Err(Error::NoConstructionNeeded);
    }
    let eig = eig_hermitian(&HermitianMatrix::new(comm * (-I))?)?;
    let thr = 1e-10 * eig.max_abs();
    let mu = &eig.eigenvalues;
    let vec_of = |a: usize| fix_phase(eig.eigenvectors.column(a).into_owned());
    let positive: Vec<usize> = (0..dim).rev().filter(|&a| mu[a] > thr).collect();
    let negative: Vec<usize> = (0..dim).filter(|&a| mu[a] < -thr).collect();
    let pairs = positive.len().min(negative.len());
    if let Some(&j) = spec.subset.iter().find(|&&j| j > pairs) {
        return invalid(format!("pair {j} requested but the commutator has only {pairs} eigenvalue pairs"));
    }
    let norm = 1.0 / (spec.subset.len() as f64).sqrt();
    let mut psi1 = CVector::zeros(dim);
    let mut psi2 = CVector::zeros(dim);
    for (slot, &j) in spec.subset.iter().enumerate() {
        let (ap, an) = (positive[j - 1], negative[j - 1]);
        let (p, q) = (mu[ap], -mu[an]);
        let (vp, vn) = (vec_of(ap), vec_of(an));
        let (mut u1, mut u2) = if p >= q {
            let cos = (2.0 * q / (p + q)).sqrt();
            (&vp * real(cos) + &vn * real((1.0 - cos * cos).max(0.0).sqrt()), vn)
        } else {
            let cos = (2.0 * p / (p + q)).sqrt();
            (vp.clone(), &vn * real(cos) + &vp * real((1.0 - cos * cos).max(0.0).sqrt()))
        };
        if spec.signs[slot] {
            std::mem::swap(&mut u1, &mut u2);
        }
        psi1 += u1 * (C64::from_polar(norm, spec.phases1[slot]));
        psi2 += u2 * (C64::from_polar(norm, spec.phases2[slot]));
    }
    if spec.zero_mode {
        let Some(a0) = (0..dim).find(|&a| mu[a].abs() <= thr) else {
            return invalid("the commutator has no null eigenvector");
        };
        let k = spec.subset.len() as f64;
        let keep = (k / (k + 1.0)).sqrt();
        let v0 = vec_of(a0) * real(1.0 / (k + 1.0).sqrt());
        psi1 = psi1 * real(keep) + &v0;
        psi2 = psi2 * real(keep) + v0;
    }
    Ok((psi1, psi2))
}

/// Kronecker product of state vectors, first factor outermost.
pub fn product_state(states: &[CVector]) -> CVector {
    let mut out = CMatrix::from_element(1, 1, c(1.0, 0.0));
    for s in states {
        out = kron(&out, &CMatrix::from_column_slice(s.len(), 1, s.as_slice()));
    }
    CVector::from_column_slice(out.as_slice())
}

/// `ψ_1 ⊗ ψ_2` under `U_θ ⊗ U_θ`, built from the effective generators at `θ`.
pub fn antiparallel_model(gens: &GeneratorSet, theta: &[f64], spec: &AntiparallelSpec, noise: NoiseSpec) -> Result<StatisticalModel> {
    if gens.len() != 2 {
        return invalid("the anti-parallel construction needs exactly two generators");
    }
    let heff = effective_generators(gens, theta)?;
    let (psi1, psi2) = antiparallel_pair(&heff[0], &heff[1], spec)?;
    let probe = DensityMatrix::pure(&product_state(&[psi1, psi2]))?;
    StatisticalModel::new(probe, lift_local_generators(gens, 2)?, noise, theta.to_vec())
}

/// `ψ_1 ⊗ … ⊗ ψ_D` under `U_θ^{⊗D}` for an orthonormal basis `{ψ_i}`.
pub fn basis_product_model(states: &[CVector], gens: &GeneratorSet, theta: &[f64]) -> Result<StatisticalModel> {
    let dim = gens.dim();
    if states.len() != dim || states.iter().any(|s| s.len() != dim) {
        return invalid(format!("need {dim} states of dimension {dim}"));
    }
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (a.dotc(b) - real(want)).norm() > 1e-10 {
                return invalid(format!("states {i} and {j} are not orthonormal"));
            }
        }
    }
    let probe = DensityMatrix::pure(&product_state(states))?;
    StatisticalModel::new(probe, lift_local_generators(gens, dim)?, NoiseSpec::None, theta.to_vec())
}

/// `A`-only certificate for [`basis_product_model`].
pub fn basis_product_compatibility(states: &[CVector], gens: &GeneratorSet, theta: &[f64]) -> Result<CompatibilityCertificate> {
    certify(&basis_product_model(states, gens, theta)?, None)
}
