//! Infeasible-start primal-dual interior point method (HKM direction with
//! Mehrotra predictor-corrector).
//!
//! With `A_k` the coefficient matrix of unknown `x_k` (all blocks stacked
//! block-diagonally) and `C` minus the constant part, the stated problem is
//!
//! ```text
//! minimize c·x  s.t.  S = Σ x_k A_k - C ⪰ 0,  B x = b
//! ```
//!
//! and its dual is `maximize ⟨C, Z⟩ + b·w  s.t.  ⟨A_k, Z⟩ + (Bᵀw)_k = c_k, Z ⪰ 0`.
//!
//! Each `A_k` is stored as a sum `Σ_t (u_t e_{c_t}ᵀ + e_{c_t} u_tᵀ)` with
//! sparse `u_t`, found by a greedy vertex cover of its nonzero pattern.
//! Coefficient matrices of the Holevo programs are low rank in this form,
//! so the Schur matrix `H_kl = ⟨A_k, Z A_l S⁻¹⟩` costs a few dense products
//! rather than one per pair of unknowns.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{SdpOptions, SdpProblem, SdpSolution, SdpStatus};
use crate::error::{invalid, Result};

struct Term {
    var: usize,
    col: usize,
    u: Vec<(usize, f64)>,
}

struct Data {
    n: usize,
    m: usize,
    c: DVector<f64>,
    cmat: DMatrix<f64>,
    terms: Vec<Term>,
    var_terms: Vec<Vec<usize>>,
    u: DMatrix<f64>,
    b_eq: DMatrix<f64>,
    b_rhs: DVector<f64>,
    a_norms: Vec<f64>,
    /// Pseudo-inverse of `⟨A_k, A_l⟩`.
    gram_pinv: DMatrix<f64>,
}

/// Split the symmetric pattern `entries` into `(col, u)` terms.
fn cover(entries: &BTreeMap<(usize, usize), f64>) -> Vec<(usize, Vec<(usize, f64)>)> {
    let mut uncovered: Vec<((usize, usize), f64)> = entries.iter().map(|(&k, &v)| (k, v)).filter(|(_, v)| *v != 0.0).collect();
    let mut out = Vec::new();
    while !uncovered.is_empty() {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &((i, j), _) in &uncovered {
            *degree.entry(i).or_default() += 1;
            if i != j {
                *degree.entry(j).or_default() += 1;
            }
        }
        let (&col, _) = degree.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
        let mut u = Vec::new();
        uncovered.retain(|&((i, j), v)| {
            if i == col && j == col {
                u.push((col, v / 2.0));
                false
            } else if i == col || j == col {
                u.push((if i == col { j } else { i }, v));
                false
            } else {
                true
            }
        });
        out.push((col, u));
    }
    out
}

impl Data {
    fn build(p: &SdpProblem) -> Data {
        let mut offsets = Vec::with_capacity(p.blocks().len());
        let mut n = 0;
        for b in p.blocks() {
            offsets.push(n);
            n += b.size();
        }
        let m = p.n_unknowns();
        let mut cmat = DMatrix::zeros(n, n);
        let mut per_var: Vec<BTreeMap<(usize, usize), f64>> = vec![BTreeMap::new(); m];
        for (b, &off) in p.blocks().iter().zip(&offsets) {
            let s = b.size();
            cmat.view_mut((off, off), (s, s)).copy_from(&(-b.constant()));
            for (&var, entries) in b.terms() {
                for &(i, j, v) in entries {
                    let (i, j) = (off + i.min(j), off + i.max(j));
                    *per_var[var].entry((i, j)).or_default() += v;
                }
            }
        }
        let a_norms =
            per_var.iter().map(|e| e.iter().map(|(&(i, j), v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>().sqrt()).collect();
        let mut terms = Vec::new();
        let mut var_terms = vec![Vec::new(); m];
        for (var, entries) in per_var.iter().enumerate() {
            for (col, u) in cover(entries) {
                var_terms[var].push(terms.len());
                terms.push(Term { var, col, u });
            }
        }
        let mut u = DMatrix::zeros(n, terms.len());
        for (t, term) in terms.iter().enumerate() {
            for &(a, v) in &term.u {
                u[(a, t)] += v;
            }
        }
        let mut c = DVector::zeros(m);
        for &(k, v) in p.objective() {
            c[k] += v;
        }
        let neq = p.equalities().len();
        let mut b_eq = DMatrix::zeros(neq, m);
        let mut b_rhs = DVector::zeros(neq);
        for (r, (row, rhs)) in p.equalities().iter().enumerate() {
            for &(k, v) in row {
                b_eq[(r, k)] += v;
            }
            b_rhs[r] = *rhs;
        }
        let mut data = Data { n, m, c, cmat, terms, var_terms, u, b_eq, b_rhs, a_norms, gram_pinv: DMatrix::zeros(m, m) };
        let mut gram = DMatrix::zeros(m, m);
        for l in 0..m {
            let mut e = DVector::zeros(m);
            e[l] = 1.0;
            gram.set_column(l, &data.op(&data.adjoint(&e)));
        }
        let tol = 1e-12 * gram.diagonal().amax().max(1e-300);
        data.gram_pinv = gram.pseudo_inverse(tol).unwrap_or_else(|_| DMatrix::zeros(m, m));
        data
    }

    /// `Σ_k x_k A_k`.
    fn adjoint(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for t in &self.terms {
            let a = x[t.var];
            if a == 0.0 {
                continue;
            }
            for &(r, v) in &t.u {
                out[(r, t.col)] += a * v;
                out[(t.col, r)] += a * v;
            }
        }
        out
    }

    /// `k ↦ ⟨A_k, M⟩` (only the symmetric part of `M` contributes).
    fn op(&self, mat: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for t in &self.terms {
            out[t.var] += t.u.iter().map(|&(r, v)| v * (mat[(t.col, r)] + mat[(r, t.col)])).sum::<f64>();
        }
        out
    }

    /// `H_kl = ⟨A_k, Z A_l Y⟩` with `Y = S⁻¹`.
    fn schur(&self, z: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        let zu = z * &self.u;
        let yu = y * &self.u;
        let uzu = self.u.transpose() * &zu;
        let uyu = self.u.transpose() * &yu;
        let mut h = DMatrix::zeros(self.m, self.m);
        for k in 0..self.m {
            for l in k..self.m {
                let mut acc = 0.0;
                for &t in &self.var_terms[k] {
                    let ct = self.terms[t].col;
                    for &s in &self.var_terms[l] {
                        let cs = self.terms[s].col;
                        acc +=
                            zu[(ct, s)] * yu[(cs, t)] + z[(ct, cs)] * uyu[(s, t)] + uzu[(t, s)] * y[(cs, ct)] + zu[(cs, t)] * yu[(ct, s)];
                    }
                }
                h[(k, l)] = acc;
                h[(l, k)] = acc;
            }
        }
        h
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Largest `α` with `M + α dM ⪰ 0`, for `M ≻ 0`.
fn max_step(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> Option<f64> {
    let l = m.clone().cholesky()?.l();
    let linv = l.solve_lower_triangular(&DMatrix::identity(m.nrows(), m.nrows()))?;
    let scaled = sym(&linv * dm * linv.transpose());
    let min = scaled.symmetric_eigenvalues().min();
    Some(if min >= 0.0 { f64::INFINITY } else { -1.0 / min })
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym(m.clone()).symmetric_eigenvalues().min()
}

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    m: usize,
}

impl Kkt {
    fn new(h: DMatrix<f64>, b: &DMatrix<f64>) -> Option<Kkt> {
        let m = h.nrows();
        let p = b.nrows();
        let scale = h.diagonal().amax().max(1e-300);
        let mut k = DMatrix::zeros(m + p, m + p);
        k.view_mut((0, 0), (m, m)).copy_from(&h);
        for i in 0..m {
            k[(i, i)] += 1e-14 * scale;
        }
        k.view_mut((0, m), (m, p)).copy_from(&(-b.transpose()));
        k.view_mut((m, 0), (p, m)).copy_from(b);
        let lu = k.lu();
        lu.is_invertible().then_some(Kkt { lu, m })
    }

    fn solve(&self, g: &DVector<f64>, rb: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let rhs = DVector::from_iterator(g.len() + rb.len(), g.iter().chain(rb.iter()).copied());
        let sol = self.lu.solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((sol.rows(0, self.m).into_owned(), sol.rows(self.m, rb.len()).into_owned()))
    }
}

struct Direction {
    dx: DVector<f64>,
    dw: DVector<f64>,
    ds: DMatrix<f64>,
    dz: DMatrix<f64>,
}

/// Solve `p`; a non-optimal outcome is reported through the status, not as an error.
pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    p.validate()?;
    if !(opts.gap_tol > 0.0 && opts.feas_tol > 0.0 && opts.max_iter > 0) {
        return invalid("SDP tolerances must be positive and max_iter at least 1");
    }
    let data = Data::build(p);
    let plain = run(&data, opts, false);
    if matches!(plain.status, SdpStatus::Optimal | SdpStatus::Infeasible) {
        return Ok(plain);
    }
    let corrected = run(&data, opts, true);
    Ok(if corrected.status == SdpStatus::Optimal { corrected } else { plain })
}

/// With `project`, each dual step is projected back onto the linearized dual equations.
fn run(d: &Data, opts: &SdpOptions, project: bool) -> SdpSolution {
    let n = d.n;
    let sqrt_n = (n as f64).sqrt();
    let c_norm = d.c.norm();
    let cmat_norm = d.cmat.norm();
    let b_norm = d.b_rhs.norm();
    let max_a = d.a_norms.iter().copied().fold(0.0, f64::max);
    let xi = d.a_norms.iter().zip(d.c.iter()).map(|(a, c)| sqrt_n * (1.0 + c.abs()) / (1.0 + a)).fold(10f64.max(sqrt_n), f64::max);
    let eta = 10f64.max(sqrt_n).max(max_a).max(cmat_norm);

    let mut z = DMatrix::identity(n, n) * xi;
    let mut s = DMatrix::identity(n, n) * eta;
    let mut x = DVector::zeros(d.m);
    let mut w = DVector::zeros(d.b_rhs.len());

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut report = (0.0, 0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let Some(y) = s.clone().cholesky().map(|ch| ch.inverse()) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let rd = &d.c - d.op(&z) - d.b_eq.transpose() * &w;
        let rs = d.adjoint(&x) - &d.cmat - &s;
        let rb = &d.b_rhs - &d.b_eq * &x;
        let pobj = d.c.dot(&x);
        let dobj = inner(&d.cmat, &z) + d.b_rhs.dot(&w);
        let mu = inner(&z, &s) / n as f64;
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = inner(&z, &s).abs() / denom;
        let pinf = (rs.norm() / (1.0 + cmat_norm)).max(rb.norm() / (1.0 + b_norm));
        let dinf = rd.norm() / (1.0 + c_norm);
        report = (pobj, dobj, gap, pinf, dinf);

        if gap <= opts.gap_tol && pinf <= opts.feas_tol && dinf <= opts.feas_tol {
            let slack = d.adjoint(&x) - &d.cmat;
            if min_eigenvalue(&slack) >= -opts.feas_tol {
                status = SdpStatus::Optimal;
                break;
            }
        }
        let certificate = &d.c - &rd;
        if dobj > 0.0 && certificate.norm() <= opts.feas_tol * dobj && z.trace() > 1e8 * xi {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(kkt) = Kkt::new(d.schur(&z, &y), &d.b_eq) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let zrsy = &z * &rs * &y;
        let direction = |target: &DMatrix<f64>| -> Option<Direction> {
            let g = d.op(&(target - &zrsy)) - &rd;
            let (dx, dw) = kkt.solve(&g, &rb)?;
            let ds = d.adjoint(&dx) + &rs;
            let dz = sym(target - &z * &ds * &y);
            let dz = if project {
                let miss = &rd - d.op(&dz) - d.b_eq.transpose() * &dw;
                dz + d.adjoint(&(&d.gram_pinv * miss))
            } else {
                dz
            };
            Some(Direction { dx, dw, ds, dz })
        };

        // predictor
        let Some(pred) = direction(&(-&z)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&z, &pred.dz), max_step(&s, &pred.ds)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = inner(&(&z + &pred.dz * ap), &(&s + &pred.ds * ad)) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let target = &y * (sigma * mu) - &z - &pred.dz * &pred.ds * &y;
        let Some(corr) = direction(&target) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&z, &corr.dz), max_step(&s, &corr.ds)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let (ap, ad) = ((gamma * ap).min(1.0), (gamma * ad).min(1.0));
        if ap < 1e-12 && ad < 1e-12 {
            status = SdpStatus::NumericalFailure;
            break;
        }
        z = sym(&z + &corr.dz * ap);
        w += &corr.dw * ap;
        x += &corr.dx * ad;
        s = sym(&s + &corr.ds * ad);
    }

    let slack = d.adjoint(&x) - &d.cmat;
    let (pobj, dobj, gap, pinf, dinf) = report;
    SdpSolution {
        status,
        x: x.iter().copied().collect(),
        primal_objective: pobj,
        dual_objective: dobj,
        gap,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        min_block_eigenvalue: min_eigenvalue(&slack),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::SymmetricAffine;

    #[test]
    fn cover_rebuilds_the_matrix() {
        let mut e = BTreeMap::new();
        e.insert((0, 0), 2.0);
        e.insert((0, 3), 1.5);
        e.insert((1, 3), -0.5);
        e.insert((2, 2), 4.0);
        e.insert((3, 3), 1.0);
        let mut m = DMatrix::<f64>::zeros(4, 4);
        for (col, u) in cover(&e) {
            for (r, v) in u {
                m[(r, col)] += v;
                m[(col, r)] += v;
            }
        }
        let expect = DMatrix::from_row_slice(4, 4, &[2.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 4.0, 0.0, 1.5, -0.5, 0.0, 1.0]);
        assert_eq!(m, expect);
    }

    #[test]
    fn schur_matches_dense_definition() {
        let mut p = SdpProblem::new();
        let v = p.add_symmetric("V", 2);
        let t = p.add_scalar("t");
        let mut b = SymmetricAffine::new(4);
        b.add_term(v.at(0, 0), 0, 0, 1.0);
        b.add_term(v.at(0, 1), 0, 1, 1.0);
        b.add_term(v.at(1, 1), 1, 1, 1.0);
        b.add_term(t.0, 2, 0, 0.7);
        b.add_term(t.0, 3, 1, -0.3);
        b.add_term(t.0, 3, 3, 2.0);
        p.add_psd(b);
        let d = Data::build(&p);
        let z = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64)) + DMatrix::identity(4, 4);
        let y = DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.1 * (i + j) as f64 });
        let h = d.schur(&z, &y);
        let basis = |k: usize| {
            let mut e = DVector::zeros(d.m);
            e[k] = 1.0;
            d.adjoint(&e)
        };
        for k in 0..d.m {
            for l in 0..d.m {
                let direct = (basis(k) * &z * basis(l) * &y).trace();
                assert!((h[(k, l)] - direct).abs() < 1e-12, "{k} {l}");
            }
        }
    }
}
