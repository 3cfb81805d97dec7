//! Independent oracles and random model generators shared by the integration tests.
#![allow(dead_code)]

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use qincompat::estimation::{info_bundle, WeightMatrix};
use qincompat::holevo::hermitian_basis;
use qincompat::matcore::{c, expm_i, pauli, psd_power, real, CMatrix, CVector, HermitianMatrix, C64};
use qincompat::model::{lift_local_generators, DensityMatrix, EncodedModel, GeneratorSet, NoiseSpec, StatisticalModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_traceless(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let m = random_complex_matrix(rng, n);
    let h = (&m + m.adjoint()) * real(0.5);
    let shift = h.trace() / real(n as f64);
    HermitianMatrix::new(h - CMatrix::identity(n, n) * shift).unwrap()
}

pub fn random_generators(rng: &mut ChaCha8Rng, dim: usize, d: usize) -> GeneratorSet {
    GeneratorSet::new((0..d).map(|_| random_traceless(rng, dim)).collect()).unwrap()
}

pub fn random_ket(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / real(norm)
}

/// Ginibre mixed state.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let w = random_complex_matrix(rng, n);
    let m = &w * w.adjoint();
    let t = m.trace();
    DensityMatrix::new(HermitianMatrix::new(m / t).unwrap()).unwrap()
}

/// Qubit probe with purity uniform in `[1/2, 1]`; returns the purity as drawn.
pub fn random_qubit_probe(rng: &mut ChaCha8Rng) -> (DensityMatrix, f64) {
    let purity = uniform(rng, 0.5, 1.0);
    let len = (2.0 * purity - 1.0).sqrt();
    let (z, phi) = (uniform(rng, -1.0, 1.0), uniform(rng, 0.0, std::f64::consts::TAU));
    let s = (1.0 - z * z).sqrt();
    let n = [s * phi.cos(), s * phi.sin(), z];
    let m = CMatrix::identity(2, 2) * real(0.5)
        + (pauli::x().matrix() * real(n[0]) + pauli::y().matrix() * real(n[1]) + pauli::z().matrix() * real(n[2])) * real(0.5 * len);
    (DensityMatrix::new(HermitianMatrix::new(m).unwrap()).unwrap(), purity)
}

/// Two-phase qubit model `exp[i(θ_1 σ_y + θ_2 σ_z)]` with random probe, `θ` and `λ`.
pub struct QubitCase {
    pub model: StatisticalModel,
    pub purity: f64,
    pub lambda: f64,
}

pub fn qubit_corpus(seed: u64, n: usize) -> Vec<QubitCase> {
    let mut r = rng(seed);
    let g = GeneratorSet::new(vec![pauli::y(), pauli::z()]).unwrap();
    (0..n)
        .map(|_| {
            let (probe, purity) = random_qubit_probe(&mut r);
            let theta = vec![uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0)];
            let mut lambda: f64 = 0.0;
            while lambda.abs() < 1e-3 {
                lambda = uniform(&mut r, -1.0 / 3.0, 1.0);
            }
            let noise = NoiseSpec::GlobalDepolarizing { lambda };
            QubitCase { model: StatisticalModel::new(probe, g.clone(), noise, theta).unwrap(), purity, lambda }
        })
        .collect()
}

/// Random probe (pure or Ginibre), generators, `θ` and global noise on `C^dim`.
/// Pure probes carry at most `2(D-1)` parameters, so larger `d` gets a mixed one.
pub fn random_model(rng: &mut ChaCha8Rng, dim: usize, d: usize) -> StatisticalModel {
    let probe = if d <= 2 * (dim - 1) && rng.random_bool(0.5) {
        DensityMatrix::pure(&random_ket(rng, dim)).unwrap()
    } else {
        random_density(rng, dim)
    };
    let theta = (0..d).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let lo = -1.0 / ((dim * dim) as f64 - 1.0);
    let lambda = uniform(rng, 0.3, 1.0).max(lo);
    StatisticalModel::new(probe, random_generators(rng, dim, d), NoiseSpec::GlobalDepolarizing { lambda }, theta).unwrap()
}

/// Random model whose Fisher matrix has condition number at most `max_cond`.
pub fn random_conditioned_model(rng: &mut ChaCha8Rng, dim: usize, d: usize, max_cond: f64) -> StatisticalModel {
    loop {
        let model = random_model(rng, dim, d);
        let Ok(enc) = model.encode() else { continue };
        let Ok(bundle) = info_bundle(&enc) else { continue };
        let ev = bundle.fisher.symmetric_eigen().eigenvalues;
        if ev.min() > 0.0 && ev.max() / ev.min() <= max_cond {
            return model;
        }
    }
}

pub fn random_weight(rng: &mut ChaCha8Rng, d: usize) -> WeightMatrix {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    WeightMatrix::new(&m * m.transpose() + DMatrix::identity(d, d) * 0.05).unwrap()
}

/// Invertible matrix with condition number bounded away from singular.
pub fn random_jacobian(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    loop {
        let j = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
        let sv = j.singular_values();
        if sv.min() > 0.2 {
            return j;
        }
    }
}

/// `∫_0^1 e^{-isH} K e^{isH} ds` by 128-point Gauss-Legendre quadrature.
pub fn quadrature_averaged_conjugation(h: &HermitianMatrix, k: &HermitianMatrix) -> CMatrix {
    let rule = GaussLegendre::new(NonZeroUsize::new(128).unwrap());
    let mut acc = CMatrix::zeros(h.dim(), h.dim());
    for &(x, w) in rule.as_node_weight_pairs() {
        let s = 0.5 * (x + 1.0);
        let u = expm_i(&h.scale(s)).unwrap();
        acc += u.adjoint() * k.matrix() * &u * real(0.5 * w);
    }
    acc
}

/// Central difference of `ρ_θ` along parameter `j`.
pub fn finite_difference_drho(model: &StatisticalModel, j: usize, h: f64) -> CMatrix {
    let shifted = |s: f64| {
        let mut theta = model.theta.clone();
        theta[j] += s;
        model.with_theta(theta).unwrap().encode().unwrap().rho_theta.matrix().clone()
    };
    (shifted(h) - shifted(-h)) / real(2.0 * h)
}

/// `Tr[G Re Z] + ‖√G Im Z √G‖_1` with `Z_ij = Tr[ρ X_i X_j]`.
pub fn holevo_function(g: &WeightMatrix, rho: &CMatrix, xs: &[CMatrix]) -> f64 {
    let d = xs.len();
    let mut re = DMatrix::zeros(d, d);
    let mut im = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let z = (rho * &xs[i] * &xs[j]).trace();
            re[(i, j)] = z.re;
            im[(i, j)] = z.im;
        }
    }
    let sqrt_g = psd_power(&HermitianMatrix::from_real(g.matrix()).unwrap(), 0.5).unwrap().real_part();
    (g.matrix() * re).trace() + (&sqrt_g * im * &sqrt_g).singular_values().sum()
}

/// `C_H(G)` for two parameters, independent of the SDP. The trace-norm term is
/// `2 sqrt(det G) |Im Z_12|`, so `C_H = max_{|t| <= 1} min_X Tr[G Re Z] + t 2 sqrt(det G) Im Z_12`,
/// an inner equality-constrained quadratic program and an outer concave scalar maximization.
pub fn holevo_two_parameter(g: &WeightMatrix, enc: &EncodedModel) -> f64 {
    assert_eq!(enc.n_params(), 2);
    let d = 2;
    let dim = enc.dim();
    let basis = hermitian_basis(dim);
    let nb = basis.len();
    let rho = enc.rho_theta.matrix();
    // rows: Tr[∂_j ρ X_i] = δ_ij, Tr[ρ X_i] = 0
    let mut m = DMatrix::zeros(d * d + d, d * nb);
    let mut b = nalgebra::DVector::zeros(d * d + d);
    for i in 0..d {
        for j in 0..d {
            for (a, e) in basis.iter().enumerate() {
                m[(i * d + j, i * nb + a)] = (enc.drho[j].matrix() * e.matrix()).trace().re;
            }
            b[i * d + j] = if i == j { 1.0 } else { 0.0 };
        }
        for (a, e) in basis.iter().enumerate() {
            m[(d * d + i, i * nb + a)] = (rho * e.matrix()).trace().re;
        }
    }
    let x0 = m.clone().pseudo_inverse(1e-12).unwrap() * &b;
    assert!((&m * &x0 - &b).norm() < 1e-8, "unbiasedness constraints are inconsistent");
    let rank = m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-10).count();
    let eig = (m.transpose() * &m).symmetric_eigen();
    let mut order: Vec<usize> = (0..d * nb).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let null = DMatrix::from_columns(&order[..d * nb - rank].iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());

    let t_ab = DMatrix::from_fn(nb, nb, |a, b| (rho * basis[a].matrix() * basis[b].matrix()).trace());
    let gm = g.matrix();
    let kappa = 2.0 * gm.determinant().sqrt();
    let inner = |t: f64| -> f64 {
        let mut p = DMatrix::zeros(d * nb, d * nb);
        for i in 0..d {
            for j in 0..d {
                for a in 0..nb {
                    for bb in 0..nb {
                        p[(i * nb + a, j * nb + bb)] = gm[(i, j)] * t_ab[(a, bb)].re;
                    }
                }
            }
        }
        for a in 0..nb {
            for bb in 0..nb {
                let v = 0.5 * kappa * t * t_ab[(a, bb)].im;
                p[(a, nb + bb)] += v;
                p[(nb + bb, a)] += v;
            }
        }
        let h = null.transpose() * &p * &null;
        let rhs = -(null.transpose() * &p * &x0);
        let y = h.pseudo_inverse(1e-12).unwrap() * rhs;
        let x = &x0 + &null * y;
        (x.transpose() * &p * &x)[(0, 0)]
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..80 {
        let a = hi - phi * (hi - lo);
        let bb = lo + phi * (hi - lo);
        if inner(a) > inner(bb) {
            hi = bb;
        } else {
            lo = a;
        }
    }
    inner(0.5 * (lo + hi)).max(inner(-1.0)).max(inner(1.0))
}

/// Qutrit with an `su(2)` pair on the first two levels and probe `(|0> - |1>)/√2`.
pub fn qutrit_model(lambda: f64) -> StatisticalModel {
    let h1 = HermitianMatrix::new(CMatrix::from_row_slice(
        3,
        3,
        &[real(0.0), c(0.0, -1.0), real(0.0), c(0.0, 1.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.0)],
    ))
    .unwrap();
    let h2 = HermitianMatrix::diagonal(&[1.0, -1.0, 0.0]);
    let probe = DensityMatrix::pure(&CVector::from_vec(vec![real(1.0), real(-1.0), real(0.0)])).unwrap();
    StatisticalModel::new(probe, GeneratorSet::new(vec![h1, h2]).unwrap(), NoiseSpec::GlobalDepolarizing { lambda }, vec![0.0, 0.0])
        .unwrap()
}

/// Three qubits, collective `σ_y, σ_z` rotations, GHZ-type probe `∝ ψ_z + ψ_y`, local depolarizing noise.
pub fn three_qubit_model(lambda: f64) -> StatisticalModel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |a: C64, b: C64| CVector::from_vec(vec![a, b]);
    let ghz = |k: &CVector, l: &CVector| {
        let mut v = qincompat::designs::product_state(&[k.clone(), k.clone(), k.clone()]);
        v += qincompat::designs::product_state(&[l.clone(), l.clone(), l.clone()]);
        v * real(s)
    };
    let psi_z = ghz(&ket(real(1.0), real(0.0)), &ket(real(0.0), real(1.0)));
    let psi_y = ghz(&ket(real(s), c(0.0, s)), &ket(real(s), c(0.0, -s)));
    let probe = DensityMatrix::pure(&(psi_z + psi_y).normalize()).unwrap();
    let gens = lift_local_generators(&GeneratorSet::new(vec![pauli::y(), pauli::z()]).unwrap(), 3).unwrap();
    let noise = NoiseSpec::LocalDepolarizing { lambda, site_dims: vec![2, 2, 2] };
    StatisticalModel::new(probe, gens, noise, vec![0.0, 0.0]).unwrap()
}
