//! Small dense semidefinite programs.
//!
//! A problem is a linear objective over real unknowns (scalars and the
//! upper triangles of symmetric matrix variables), a list of affine blocks
//! that must be positive semidefinite and a list of linear equalities.
//! [`solve`] runs a primal-dual interior point method and reports the
//! complementarity gap together with both objectives.

mod solver;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::matcore::{CMatrix, C64};
use crate::numerics::numerics;

pub use solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        let n = numerics();
        SdpOptions { gap_tol: n.gap_tol, feas_tol: n.feas_tol, max_iter: n.max_iter }
    }
}

/// Handle to a scalar unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scalar(pub usize);

/// Handle to a symmetric `n × n` matrix variable; its `n(n+1)/2` unknowns
/// are stored row by row over the upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymVar {
    offset: usize,
    n: usize,
}

impl SymVar {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Unknown holding entry `(i, j)` (and `(j, i)`).
    pub fn at(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.offset + i * self.n - i * (i + 1) / 2 + j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarKind {
    Scalar,
    Symmetric(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
}

/// Real symmetric affine map `M(x) = M_0 + Σ_k x_k M_k`.
///
/// Entries are added symmetrically: `(i, j)` also sets `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAffine {
    size: usize,
    constant: DMatrix<f64>,
    terms: BTreeMap<usize, Vec<(usize, usize, f64)>>,
}

impl SymmetricAffine {
    pub fn new(size: usize) -> Self {
        SymmetricAffine { size, constant: DMatrix::zeros(size, size), terms: BTreeMap::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn add_constant(&mut self, i: usize, j: usize, v: f64) {
        self.constant[(i, j)] += v;
        if i != j {
            self.constant[(j, i)] += v;
        }
    }

    pub fn add_term(&mut self, var: usize, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.terms.entry(var).or_default().push((i, j, v));
        }
    }

    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// Coefficient entries per unknown.
    pub fn terms(&self) -> &BTreeMap<usize, Vec<(usize, usize, f64)>> {
        &self.terms
    }

    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (&var, entries) in &self.terms {
            for &(i, j, v) in entries {
                m[(i, j)] += x[var] * v;
                if i != j {
                    m[(j, i)] += x[var] * v;
                }
            }
        }
        m
    }
}

/// Complex Hermitian affine map. An entry `(i, j) = z` also sets
/// `(j, i) = z̄`; diagonal entries must be real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianAffine {
    size: usize,
    constant: CMatrix,
    terms: BTreeMap<usize, Vec<(usize, usize, C64)>>,
}

impl HermitianAffine {
    pub fn new(size: usize) -> Self {
        HermitianAffine { size, constant: CMatrix::zeros(size, size), terms: BTreeMap::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn add_constant(&mut self, i: usize, j: usize, z: C64) {
        self.constant[(i, j)] += z;
        if i != j {
            self.constant[(j, i)] += z.conj();
        }
    }

    pub fn add_term(&mut self, var: usize, i: usize, j: usize, z: C64) {
        if z != C64::new(0.0, 0.0) {
            self.terms.entry(var).or_default().push((i, j, z));
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> CMatrix {
        let mut m = self.constant.clone();
        for (&var, entries) in &self.terms {
            for &(i, j, z) in entries {
                m[(i, j)] += z * x[var];
                if i != j {
                    m[(j, i)] += z.conj() * x[var];
                }
            }
        }
        m
    }
}

/// `M ↦ [[Re M, -Im M], [Im M, Re M]]`, which is positive semidefinite
/// exactly when `M` is.
pub fn realify_hermitian_psd(m: &HermitianAffine) -> SymmetricAffine {
    let n = m.size;
    let mut out = SymmetricAffine::new(2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m.constant[(i, j)];
            out.constant[(i, j)] = z.re;
            out.constant[(n + i, n + j)] = z.re;
            out.constant[(n + i, j)] = z.im;
            out.constant[(i, n + j)] = -z.im;
        }
    }
    for (&var, entries) in &m.terms {
        for &(i, j, z) in entries {
            out.add_term(var, i, j, z.re);
            out.add_term(var, n + i, n + j, z.re);
            if i != j {
                out.add_term(var, n + i, j, z.im);
                out.add_term(var, i, n + j, -z.im);
            }
        }
    }
    out
}

/// Linear objective (minimized), PSD blocks and equalities over real unknowns.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    vars: Vec<VarInfo>,
    n_unknowns: usize,
    objective: Vec<(usize, f64)>,
    blocks: Vec<SymmetricAffine>,
    equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_scalar(&mut self, name: &str) -> Scalar {
        let offset = self.n_unknowns;
        self.vars.push(VarInfo { name: name.to_string(), kind: VarKind::Scalar, offset });
        self.n_unknowns += 1;
        Scalar(offset)
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> SymVar {
        let offset = self.n_unknowns;
        self.vars.push(VarInfo { name: name.to_string(), kind: VarKind::Symmetric(n), offset });
        self.n_unknowns += n * (n + 1) / 2;
        SymVar { offset, n }
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn variables(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn blocks(&self) -> &[SymmetricAffine] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[(Vec<(usize, f64)>, f64)] {
        &self.equalities
    }

    /// Minimize `Σ c_k x_k`; repeated unknowns accumulate.
    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>) {
        self.objective = terms;
    }

    pub fn add_psd(&mut self, block: SymmetricAffine) {
        self.blocks.push(block);
    }

    pub fn add_hermitian_psd(&mut self, block: &HermitianAffine) {
        self.blocks.push(realify_hermitian_psd(block));
    }

    pub fn add_equality(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push((terms, rhs));
    }

    /// Structural checks, plus symmetry of every block at a random point.
    pub fn validate(&self) -> Result<()> {
        if self.n_unknowns == 0 {
            return invalid("SDP has no unknowns");
        }
        if self.blocks.is_empty() {
            return invalid("SDP has no PSD constraint");
        }
        let in_range = |terms: &[(usize, f64)]| terms.iter().all(|&(k, v)| k < self.n_unknowns && v.is_finite());
        if !in_range(&self.objective) {
            return invalid("objective refers to an unknown unknown or is not finite");
        }
        for (terms, rhs) in &self.equalities {
            if !in_range(terms) || !rhs.is_finite() {
                return invalid("malformed equality constraint");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5d9);
        let x: Vec<f64> = (0..self.n_unknowns).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (b, block) in self.blocks.iter().enumerate() {
            if block.size == 0 {
                return invalid(format!("block {b} is empty"));
            }
            for (&var, entries) in &block.terms {
                if var >= self.n_unknowns {
                    return invalid(format!("block {b} refers to unknown {var}"));
                }
                if entries.iter().any(|&(i, j, v)| i >= block.size || j >= block.size || !v.is_finite()) {
                    return invalid(format!("block {b} has an out-of-range or non-finite entry"));
                }
            }
            if block.constant.iter().any(|v| !v.is_finite()) {
                return invalid(format!("block {b} has a non-finite constant"));
            }
            let m = block.evaluate(&x);
            let asym = (&m - m.transpose()).abs().max();
            if asym > 1e-10 * m.abs().max().max(1.0) {
                return invalid(format!("block {b} is not symmetric-valued (asymmetry {asym:.3e})"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Value of every unknown.
    pub x: Vec<f64>,
    /// Objective of the stated (minimization) problem.
    pub primal_objective: f64,
    /// Objective of its Lagrangian dual.
    pub dual_objective: f64,
    /// `⟨Z, S⟩ / (1 + |primal| + |dual|)` at termination. The objectives
    /// themselves differ additionally by the dual residual times `|x|`.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Smallest eigenvalue over all blocks evaluated at `x`.
    pub min_block_eigenvalue: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn scalar(&self, s: Scalar) -> f64 {
        self.x[s.0]
    }

    pub fn symmetric(&self, v: SymVar) -> DMatrix<f64> {
        DMatrix::from_fn(v.n, v.n, |i, j| self.x[v.at(i, j)])
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c;

    #[test]
    fn symvar_indexing_is_dense_and_symmetric() {
        let mut p = SdpProblem::new();
        let _t = p.add_scalar("t");
        let v = p.add_symmetric("V", 3);
        let mut seen: Vec<usize> = (0..3).flat_map(|i| (i..3).map(move |j| (i, j))).map(|(i, j)| v.at(i, j)).collect();
        seen.sort();
        assert_eq!(seen, (1..7).collect::<Vec<_>>());
        assert_eq!(v.at(2, 0), v.at(0, 2));
        assert_eq!(p.n_unknowns(), 7);
    }

    #[test]
    fn realify_real_input_is_block_diagonal_copy() {
        let mut h = HermitianAffine::new(2);
        h.add_constant(0, 0, c(2.0, 0.0));
        h.add_constant(0, 1, c(0.5, 0.0));
        let r = realify_hermitian_psd(&h).evaluate(&[]);
        let expect = DMatrix::from_row_slice(4, 4, &[2.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.5, 0.0, 0.0, 0.5, 0.0]);
        assert_eq!(r, expect);
    }

    fn eigs(m: DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn realify_psd_example() {
        let mut h = HermitianAffine::new(2);
        h.add_constant(0, 0, c(1.0, 0.0));
        h.add_constant(1, 1, c(1.0, 0.0));
        h.add_constant(0, 1, c(0.0, 1.0));
        let e = eigs(realify_hermitian_psd(&h).evaluate(&[]));
        for (got, want) in e.iter().zip([0.0, 0.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn realify_keeps_indefiniteness() {
        let mut h = HermitianAffine::new(2);
        h.add_term(0, 0, 1, c(0.0, 1.0));
        let e = eigs(realify_hermitian_psd(&h).evaluate(&[1.0]));
        assert!((e[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn realify_terms_match_realified_evaluation() {
        let mut h = HermitianAffine::new(3);
        h.add_constant(0, 2, c(0.3, -0.2));
        h.add_term(0, 1, 2, c(0.7, 1.1));
        h.add_term(1, 0, 0, c(2.0, 0.0));
        h.add_term(1, 2, 1, c(-0.4, 0.5));
        let x = [0.8, -1.3];
        let hm = h.evaluate(&x);
        let direct = DMatrix::from_fn(6, 6, |a, b| {
            let z = hm[(a % 3, b % 3)];
            match (a < 3, b < 3) {
                (true, true) | (false, false) => z.re,
                (false, true) => z.im,
                (true, false) => -z.im,
            }
        });
        assert!((realify_hermitian_psd(&h).evaluate(&x) - direct).abs().max() < 1e-15);
    }

    #[test]
    fn validate_rejects_malformed_problems() {
        let mut p = SdpProblem::new();
        assert!(p.validate().is_err());
        let t = p.add_scalar("t");
        assert!(p.validate().is_err());
        let mut b = SymmetricAffine::new(1);
        b.add_term(t.0 + 5, 0, 0, 1.0);
        p.add_psd(b);
        assert!(p.validate().is_err());
    }
}
