//! Holevo-Cramér-Rao bound and the incompatibility figure `r(θ)`.
//!
//! Estimator operators `X_i = Σ_k X_ki λ_k` are expanded in an orthonormal
//! Hermitian basis. With `ρ_θ = R†R`, the Holevo bound is
//!
//! ```text
//! C_H(G) = min Tr[G V]  s.t.  [[V, W†], [W, 1]] ⪰ 0,  Xᵀ ∂s/∂θ = 1,  Tr[ρ X_i] = 0
//! ```
//!
//! where column `i` of `W` is `vec(R X_i)`, so that `W†W = Tr[ρ X_j X_i]`.
//! `r(θ)` replaces the objective by the spectral norm of `F^{1/2} V F^{1/2}`.
//! Both programs are solved in coordinates where `F = 1`, which keeps the
//! SDP well scaled when the state is close to maximally mixed.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::estimation::{c_s, c_z, info_bundle, istar, separable_bound, InfoBundle, SeparableBound, WeightMatrix};
use crate::matcore::{c, eig_hermitian, real, CMatrix, HermitianMatrix, C64};
use crate::model::{DensityMatrix, EncodedModel};
use crate::numerics::numerics;
use crate::sdp::{solve, HermitianAffine, Scalar, SdpOptions, SdpProblem, SdpSolution, SdpStatus, SymVar, SymmetricAffine};

/// Orthonormal Hermitian basis of `D × D` matrices: `1/√D` first, then the
/// generalized Gell-Mann matrices scaled to unit Hilbert-Schmidt norm.
pub fn hermitian_basis(dim: usize) -> Vec<HermitianMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![HermitianMatrix::identity(dim).scale(1.0 / (dim as f64).sqrt())];
    let unit = |entries: &[(usize, usize, C64)]| {
        let mut m = CMatrix::zeros(dim, dim);
        for &(i, j, z) in entries {
            m[(i, j)] = z;
        }
        HermitianMatrix::new(m).expect("basis elements are Hermitian")
    };
    for j in 0..dim {
        for k in j + 1..dim {
            out.push(unit(&[(j, k, c(s, 0.0)), (k, j, c(s, 0.0))]));
            out.push(unit(&[(j, k, c(0.0, -s)), (k, j, c(0.0, s))]));
        }
    }
    for l in 1..dim {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; dim];
        diag[..l].iter_mut().for_each(|x| *x = 1.0 / norm);
        diag[l] = -(l as f64) / norm;
        out.push(HermitianMatrix::diagonal(&diag));
    }
    out
}

/// Factor `R` (rank × D) with `R†R = ρ`; rows `√p_a ⟨a|` by decreasing `p_a`
/// over the support of `ρ`.
pub fn r_factor(rho: &DensityMatrix) -> Result<(CMatrix, usize)> {
    let eig = eig_hermitian(rho.as_hermitian())?;
    let tau = numerics().support_rel * eig.max_abs();
    let dim = rho.dim();
    let support: Vec<usize> = (0..dim).rev().filter(|&a| eig.eigenvalues[a] > tau).collect();
    let mut r = CMatrix::zeros(support.len(), dim);
    for (row, &a) in support.iter().enumerate() {
        let w = eig.eigenvalues[a].sqrt();
        for h in 0..dim {
            r[(row, h)] = eig.eigenvectors[(h, a)].conj() * w;
        }
    }
    Ok((r, support.len()))
}

/// Ingredients of the Holevo programs for one encoded model.
#[derive(Debug, Clone)]
pub struct HolevoAssembly {
    pub basis: Vec<HermitianMatrix>,
    pub r: CMatrix,
    pub rank: usize,
    /// `Tr[λ_k ∂_j ρ]`, one row per basis element.
    pub dsdtheta: DMatrix<f64>,
    /// `Tr[λ_k ρ]`.
    pub mean: Vec<f64>,
}

impl HolevoAssembly {
    pub fn new(enc: &EncodedModel) -> Result<Self> {
        let dim = enc.dim();
        let basis = hermitian_basis(dim);
        let (r, rank) = r_factor(&enc.rho_theta)?;
        let tol = numerics().trace_tol;
        let trace_with = |a: &HermitianMatrix, b: &CMatrix| -> Result<f64> {
            let z: C64 = a.matrix().component_mul(&b.transpose()).sum();
            if z.im.abs() > tol * b.norm().max(1.0) {
                return invalid(format!("Tr[λ M] has imaginary part {:.3e}", z.im));
            }
            Ok(z.re)
        };
        let mut dsdtheta = DMatrix::zeros(basis.len(), enc.n_params());
        for (k, l) in basis.iter().enumerate() {
            for (j, dr) in enc.drho.iter().enumerate() {
                dsdtheta[(k, j)] = trace_with(l, dr.matrix())?;
            }
        }
        let mean = basis.iter().map(|l| trace_with(l, enc.rho_theta.matrix())).collect::<Result<Vec<_>>>()?;
        Ok(HolevoAssembly { basis, r, rank, dsdtheta, mean })
    }

    /// `vec(R λ_k)` as columns, column-major over (support index, Hilbert index).
    fn r_images(&self) -> CMatrix {
        let rows = self.rank * self.r.ncols();
        let mut out = CMatrix::zeros(rows, self.basis.len());
        for (k, l) in self.basis.iter().enumerate() {
            let img = &self.r * l.matrix();
            for (idx, z) in img.iter().enumerate() {
                out[(idx, k)] = *z;
            }
        }
        out
    }
}

/// Coefficients of the equalities `Σ_k X_ki Tr[λ_k ρ] = 0`, one per parameter.
pub fn mean_zero_rows(assembly: &HolevoAssembly) -> Vec<Vec<f64>> {
    let d = assembly.dsdtheta.ncols();
    vec![assembly.mean.clone(); d]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoOptions {
    /// Pin `Tr[ρ X_i] = 0`.
    pub mean_zero: bool,
    pub sdp: SdpOptions,
}

impl Default for HolevoOptions {
    fn default() -> Self {
        HolevoOptions { mean_zero: true, sdp: SdpOptions::default() }
    }
}

/// Estimator program in whitened coordinates, over the estimator
/// directions that the program can see.
struct Program {
    problem: SdpProblem,
    v: SymVar,
    coeffs: Vec<usize>,
    reduced: DMatrix<f64>,
    d: usize,
}

impl Program {
    fn build(asm: &HolevoAssembly, whiten: &DMatrix<f64>, mean_zero: bool) -> Program {
        let d = asm.dsdtheta.ncols();
        let nb = asm.basis.len();
        let images = asm.r_images();
        let ds = &asm.dsdtheta * whiten;
        let rows = images.nrows();

        // Directions of X_i invisible to every constraint are dropped.
        let n_feat = 2 * rows + d + usize::from(mean_zero);
        let mut feat = DMatrix::zeros(n_feat, nb);
        for k in 0..nb {
            for a in 0..rows {
                feat[(a, k)] = images[(a, k)].re;
                feat[(rows + a, k)] = images[(a, k)].im;
            }
            for j in 0..d {
                feat[(2 * rows + j, k)] = ds[(k, j)];
            }
            if mean_zero {
                feat[(2 * rows + d, k)] = asm.mean[k];
            }
        }
        let svd = feat.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-12 * smax).collect();
        let q = keep.len();
        let reduced = DMatrix::from_fn(nb, q, |k, a| vt[(keep[a], k)]);
        let w_img = &images * reduced.map(|x| c(x, 0.0));
        let ds_red = reduced.transpose() * &ds;
        let mean_red = reduced.transpose() * DMatrix::from_column_slice(nb, 1, &asm.mean);

        let mut problem = SdpProblem::new();
        let v = problem.add_symmetric("V", d);
        let coeffs: Vec<usize> = (0..q * d).map(|idx| problem.add_scalar(&format!("X[{idx}]")).0).collect();
        let z = |a: usize, i: usize| coeffs[a * d + i];

        let mut block = HermitianAffine::new(d + rows);
        for i in 0..d {
            for j in i..d {
                block.add_term(v.at(i, j), i, j, c(1.0, 0.0));
            }
        }
        for rho in 0..rows {
            block.add_constant(d + rho, d + rho, c(1.0, 0.0));
            for a in 0..q {
                for i in 0..d {
                    block.add_term(z(a, i), d + rho, i, w_img[(rho, a)]);
                }
            }
        }
        problem.add_hermitian_psd(&block);

        for i in 0..d {
            for j in 0..d {
                let terms = (0..q).map(|a| (z(a, i), ds_red[(a, j)])).collect();
                problem.add_equality(terms, if i == j { 1.0 } else { 0.0 });
            }
            if mean_zero {
                let terms = (0..q).map(|a| (z(a, i), mean_red[(a, 0)])).collect();
                problem.add_equality(terms, 0.0);
            }
        }
        Program { problem, v, coeffs, reduced, d }
    }

    /// Estimator coefficients `X_ki` in the whitened frame.
    fn estimator(&self, sol: &SdpSolution) -> DMatrix<f64> {
        let q = self.reduced.ncols();
        let zm = DMatrix::from_fn(q, self.d, |a, i| sol.x[self.coeffs[a * self.d + i]]);
        &self.reduced * zm
    }
}

/// `F^{-1/2}`.
fn whitening(bundle: &InfoBundle) -> DMatrix<f64> {
    let eig = bundle.fisher.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt())) * v.transpose()
}

#[derive(Debug, Clone)]
pub struct HolevoResult {
    pub c_h: f64,
    /// Optimal `X_ki` (basis element `k`, parameter `i`).
    pub estimator: DMatrix<f64>,
    /// Optimal `V`.
    pub v: DMatrix<f64>,
    pub solution: SdpSolution,
}

impl HolevoResult {
    /// Estimator operators `X_i = Σ_k X_ki B_k`.
    pub fn operators(&self) -> Vec<HermitianMatrix> {
        let dim = (self.estimator.nrows() as f64).sqrt().round() as usize;
        let basis = hermitian_basis(dim);
        self.estimator
            .column_iter()
            .map(|col| {
                let m = basis.iter().zip(col.iter()).fold(CMatrix::zeros(dim, dim), |acc, (b, &x)| acc + b.matrix() * real(x));
                HermitianMatrix::new(m).expect("real combination of Hermitian matrices")
            })
            .collect()
    }
}

fn check_status(sol: &SdpSolution) -> Result<()> {
    match sol.status {
        SdpStatus::Optimal => Ok(()),
        s => Err(Error::Solver(s)),
    }
}

/// `C_H(G)` and an optimal estimator.
pub fn holevo_bound(g: &WeightMatrix, enc: &EncodedModel) -> Result<HolevoResult> {
    holevo_bound_with(g, enc, &HolevoOptions::default())
}

pub fn holevo_bound_with(g: &WeightMatrix, enc: &EncodedModel, opts: &HolevoOptions) -> Result<HolevoResult> {
    let bundle = info_bundle(enc)?;
    if g.dim() != bundle.n_params() {
        return invalid(format!("weight matrix is {}x{}, model has {} parameters", g.dim(), g.dim(), bundle.n_params()));
    }
    let asm = HolevoAssembly::new(enc)?;
    holevo_from_parts(g, &bundle, &asm, opts)
}

fn holevo_from_parts(g: &WeightMatrix, bundle: &InfoBundle, asm: &HolevoAssembly, opts: &HolevoOptions) -> Result<HolevoResult> {
    let inv_half = whitening(bundle);
    let mut prog = Program::build(asm, &inv_half, opts.mean_zero);
    let gw = &inv_half * g.matrix() * &inv_half;
    let d = prog.d;
    let objective = (0..d)
        .flat_map(|i| (i..d).map(move |j| (i, j)))
        .map(|(i, j)| (prog.v.at(i, j), if i == j { gw[(i, i)] } else { gw[(i, j)] + gw[(j, i)] }))
        .collect();
    prog.problem.set_objective(objective);
    let sol = solve(&prog.problem, &opts.sdp)?;
    check_status(&sol)?;
    let estimator = prog.estimator(&sol) * &inv_half;
    let v = &inv_half * sol.symmetric(prog.v) * &inv_half;
    Ok(HolevoResult { c_h: sol.primal_objective, estimator, v, solution: sol })
}

/// Solution of the `r(θ)` program.
#[derive(Debug, Clone)]
pub struct RResult {
    pub r: f64,
    pub solution: SdpSolution,
}

fn r_from_parts(bundle: &InfoBundle, asm: &HolevoAssembly, opts: &HolevoOptions) -> Result<RResult> {
    let inv_half = whitening(bundle);
    let mut prog = Program::build(asm, &inv_half, opts.mean_zero);
    let d = prog.d;
    let t: Scalar = prog.problem.add_scalar("t");
    let mut schur = SymmetricAffine::new(2 * d);
    for i in 0..d {
        schur.add_term(t.0, i, i, 1.0);
        schur.add_term(t.0, d + i, d + i, 1.0);
        for j in 0..d {
            schur.add_term(prog.v.at(i, j), d + i, j, 1.0);
        }
    }
    prog.problem.add_psd(schur);
    prog.problem.set_objective(vec![(t.0, 1.0)]);
    let sol = solve(&prog.problem, &opts.sdp)?;
    check_status(&sol)?;
    Ok(RResult { r: sol.primal_objective, solution: sol })
}

/// `r(θ) = sup_G C_H(G)/C_S(G)` through its spectral-norm program.
pub fn r_value(enc: &EncodedModel, opts: &HolevoOptions) -> Result<RResult> {
    let bundle = info_bundle(enc)?;
    let asm = HolevoAssembly::new(enc)?;
    r_from_parts(&bundle, &asm, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompatReport {
    pub c_s_identity: f64,
    pub c_h_identity: f64,
    pub c_z_identity: f64,
    pub r: f64,
    /// `I = r - 1`.
    pub incompat: f64,
    pub istar: f64,
    pub separable: SeparableBound,
    /// Purity of `ρ_θ`.
    pub purity: f64,
    pub sdp_status: SdpStatus,
    pub sdp_gap: f64,
    pub sdp_iterations: usize,
}

/// Full report at `G = 1` with `r`, `I`, `I*` and the separable bound.
pub fn r_figure(enc: &EncodedModel) -> Result<IncompatReport> {
    r_figure_with(enc, &HolevoOptions::default())
}

pub fn r_figure_with(enc: &EncodedModel, opts: &HolevoOptions) -> Result<IncompatReport> {
    let bundle = info_bundle(enc)?;
    let asm = HolevoAssembly::new(enc)?;
    let d = bundle.n_params();
    let id = WeightMatrix::identity(d);
    let rr = r_from_parts(&bundle, &asm, opts)?;
    let ch = holevo_from_parts(&id, &bundle, &asm, opts)?;
    Ok(IncompatReport {
        c_s_identity: c_s(&id, &bundle.fisher)?,
        c_h_identity: ch.c_h,
        c_z_identity: c_z(&id, &bundle)?,
        r: rr.r,
        incompat: rr.r - 1.0,
        istar: istar(&bundle)?,
        separable: separable_bound(d, enc.dim())?,
        purity: enc.rho_theta.purity(),
        sdp_status: rr.solution.status,
        sdp_gap: rr.solution.gap.max(ch.solution.gap),
        sdp_iterations: rr.solution.iterations + ch.solution.iterations,
    })
}
