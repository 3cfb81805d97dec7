//! Dense complex-matrix kernel.
//!
//! Hermitian eigendecompositions, spectral matrix functions, norms, tensor
//! products and the averaged-conjugation transform used for effective
//! generators. Everything here is a pure function of its inputs.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::numerics::numerics;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Complex square matrix that is Hermitian by construction.
///
/// Construction symmetrizes `(M + M†)/2`; inputs whose asymmetry exceeds
/// the configured maximum are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return invalid(format!("Hermitian matrix must be square and non-empty, got {}x{}", m.nrows(), m.ncols()));
        }
        ensure_finite(&m)?;
        let adj = m.adjoint();
        let asym = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > numerics().hermitian_max {
            return invalid(format!("matrix is not Hermitian (asymmetry {asym:.3e})"));
        }
        Ok(HermitianMatrix((m + adj) * real(0.5)))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(real))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        HermitianMatrix(CMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| real(v)))))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * real(s))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(&self.0 - &other.0)
    }

    /// `U M U†` for an arbitrary square `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        let m = u * &self.0 * u.adjoint();
        HermitianMatrix((&m + m.adjoint()) * real(0.5))
    }

    /// Real part, which is symmetric for a Hermitian matrix.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= real(f(self.eigenvalues[k]));
        }
        scaled * v.adjoint()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        invalid("matrix has non-finite entries")
    }
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    ensure_finite(&m.0)?;
    let eig = m.0.clone().symmetric_eigen();
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Spectral power `V Λ^p V†` of a positive semidefinite matrix.
///
/// Eigenvalues inside the clamping window below zero are set to zero. For
/// negative `p` the matrix must be strictly positive.
pub fn psd_power(m: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(m)?;
    let scale = eig.max_abs();
    let clamp = numerics().psd_clamp * scale;
    let min = eig.eigenvalues[0];
    if min < -clamp {
        return invalid(format!("matrix is not positive semidefinite (min eigenvalue {min:.3e})"));
    }
    if p < 0.0 && (scale == 0.0 || min <= m.dim() as f64 * numerics().psd_clamp * scale) {
        return Err(Error::SingularMatrix);
    }
    let out = eig.apply(|x| x.max(0.0).powf(p));
    Ok(HermitianMatrix((&out + out.adjoint()) * real(0.5)))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.singular_values().max())
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    m.singular_values().sum()
}

/// `Tr |√G R √G|` for `G ⪰ 0`.
///
/// `R` may be any square matrix of matching size; for Hermitian `R` the
/// value is the sum of absolute eigenvalues of `√G R √G`.
pub fn trace_abs(g: &HermitianMatrix, r: &CMatrix) -> Result<f64> {
    if r.nrows() != g.dim() || r.ncols() != g.dim() {
        return invalid("trace_abs: dimension mismatch");
    }
    let sqrt_g = psd_power(g, 0.5)?;
    let k = sqrt_g.matrix() * r * sqrt_g.matrix();
    Ok(nuclear_norm(&k))
}

/// `exp(iH) = V e^{iΛ} V†`.
pub fn expm_i(h: &HermitianMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(h)?;
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, eig.eigenvalues[k]);
    }
    Ok(scaled * v.adjoint())
}

/// `(e^z - 1)/z`, continuous at zero.
pub fn phi(z: C64) -> C64 {
    if z.norm() < numerics().phi_taylor {
        // 1 + z/2 + z^2/6 + z^3/24
        real(1.0) + z * (real(0.5) + z * (real(1.0 / 6.0) + z * real(1.0 / 24.0)))
    } else {
        (z.exp() - real(1.0)) / z
    }
}

/// `∫_0^1 e^{-isH} K e^{isH} ds`, evaluated in the eigenbasis of `H`.
pub fn averaged_conjugation(h: &HermitianMatrix, k: &HermitianMatrix) -> Result<HermitianMatrix> {
    if h.dim() != k.dim() {
        return invalid(format!("averaged_conjugation: dims {} and {} differ", h.dim(), k.dim()));
    }
    let eig = eig_hermitian(h)?;
    let v = &eig.eigenvectors;
    let mut kk = v.adjoint() * k.matrix() * v;
    let n = h.dim();
    for a in 0..n {
        for b in 0..n {
            let omega = eig.eigenvalues[b] - eig.eigenvalues[a];
            kk[(a, b)] *= phi(I * omega);
        }
    }
    HermitianMatrix::new(v * kk * v.adjoint())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn site_layout(total: usize, dims: &[usize], site: usize) -> Result<(usize, usize, usize)> {
    if dims.is_empty() || dims.contains(&0) {
        return invalid("subsystem dims must be non-empty and positive");
    }
    if site >= dims.len() {
        return invalid(format!("site {site} out of range for {} subsystems", dims.len()));
    }
    let product: usize = dims.iter().product();
    if product != total {
        return invalid(format!("subsystem dims multiply to {product}, matrix dim is {total}"));
    }
    let left = dims[..site].iter().product();
    let right = dims[site + 1..].iter().product();
    Ok((left, dims[site], right))
}

/// Trace out subsystem `site` of a square matrix on `⊗ dims` (site 0 is the
/// most significant tensor factor).
pub fn partial_trace(m: &CMatrix, dims: &[usize], site: usize) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return invalid("partial_trace needs a square matrix");
    }
    let (left, mid, right) = site_layout(m.nrows(), dims, site)?;
    let out_dim = left * right;
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for l in 0..left {
        for r in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..mid {
                        acc += m[((l * mid + k) * right + r, (l2 * mid + k) * right + r2)];
                    }
                    out[(l * right + r, l2 * right + r2)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Inverse placement of [`partial_trace`]: `reduced` lives on all sites but
/// `site`; the output is `reduced` with the identity inserted at `site`.
pub fn embed_identity(reduced: &CMatrix, dims: &[usize], site: usize) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    let (left, mid, right) = site_layout(total, dims, site)?;
    if reduced.nrows() != left * right || reduced.ncols() != left * right {
        return invalid("embed_identity: reduced matrix has the wrong size");
    }
    let mut out = CMatrix::zeros(total, total);
    for l in 0..left {
        for r in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    let v = reduced[(l * right + r, l2 * right + r2)];
                    for k in 0..mid {
                        out[((l * mid + k) * right + r, (l2 * mid + k) * right + r2)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Uhlmann fidelity `[Tr √(√ρ σ √ρ)]²` between two positive semidefinite matrices.
pub fn fidelity(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return invalid("fidelity: dimension mismatch");
    }
    let sqrt_rho = psd_power(rho, 0.5)?;
    // rejects non-PSD sigma
    psd_power(sigma, 1.0)?;
    let inner = HermitianMatrix::new(sqrt_rho.matrix() * sigma.matrix() * sqrt_rho.matrix())?;
    let eig = eig_hermitian(&inner)?;
    let root: f64 = eig.eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok(root * root)
}

/// Pauli matrices.
pub mod pauli {
    use super::{c, real, CMatrix, HermitianMatrix};

    pub fn x() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)])).unwrap()
    }

    pub fn y() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[real(0.0), c(0.0, -1.0), c(0.0, 1.0), real(0.0)])).unwrap()
    }

    pub fn z() -> HermitianMatrix {
        HermitianMatrix::diagonal(&[1.0, -1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    // Truncated power series, independent of the eigensolver.
    fn expm_series(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * a / real(k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn eig_of_simple_matrices() {
        let e = eig_hermitian(&HermitianMatrix::identity(2)).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);

        let e = eig_hermitian(&pauli::z()).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[-1.0, 1.0]);

        let e = eig_hermitian(&pauli::x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let v0 = e.eigenvectors.column(0);
        // (1, -1)/sqrt 2 up to phase
        assert!(((v0[0] + v0[1]).norm()) < 1e-12);
        assert!((v0[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_finite() {
        let m = CMatrix::from_element(2, 2, real(f64::NAN));
        assert!(HermitianMatrix::new(m).is_err());
    }

    #[test]
    fn hermitian_construction_tolerances() {
        let mut m = pauli::x().into_inner();
        m[(0, 1)] += real(1e-13);
        let h = HermitianMatrix::new(m.clone()).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        m[(0, 1)] += real(1e-3);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn psd_power_examples() {
        let m = HermitianMatrix::diagonal(&[4.0, 9.0]);
        let p = psd_power(&m, -0.5).unwrap();
        assert!(close(p.matrix(), HermitianMatrix::diagonal(&[0.5, 1.0 / 3.0]).matrix(), 1e-14));

        let id = HermitianMatrix::identity(3);
        for p in [-2.0, -0.5, 0.3, 1.0, 7.0] {
            assert!(close(psd_power(&id, p).unwrap().matrix(), id.matrix(), 1e-13));
        }

        let sing = HermitianMatrix::diagonal(&[4.0, 0.0]);
        assert_eq!(psd_power(&sing, -0.5), Err(Error::SingularMatrix));
        assert!(psd_power(&HermitianMatrix::diagonal(&[1.0, -0.5]), 0.5).is_err());
    }

    #[test]
    fn psd_power_clamps_tiny_negative_eigenvalues() {
        let m = HermitianMatrix::diagonal(&[1.0, -1e-14]);
        let s = psd_power(&m, 0.5).unwrap();
        assert_eq!(s.matrix()[(1, 1)], real(0.0));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(HermitianMatrix::diagonal(&[1.0, -3.0]).matrix()).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(operator_norm(&CMatrix::zeros(3, 3)).unwrap(), 0.0);
        let anti = CMatrix::from_row_slice(2, 2, &[real(0.0), real(-4.0), real(4.0), real(0.0)]);
        assert!((operator_norm(&anti).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn trace_abs_examples() {
        let r = HermitianMatrix::diagonal(&[1.0, -1.0]);
        assert!((trace_abs(&HermitianMatrix::identity(2), r.matrix()).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(trace_abs(&HermitianMatrix::zeros(2), r.matrix()).unwrap(), 0.0);
        let g = HermitianMatrix::diagonal(&[1.0, 0.0]);
        assert!(trace_abs(&g, pauli::x().matrix()).unwrap().abs() < 1e-14);
        assert!(trace_abs(&HermitianMatrix::diagonal(&[1.0, -1.0]), r.matrix()).is_err());
    }

    #[test]
    fn expm_examples() {
        let u = expm_i(&HermitianMatrix::zeros(2)).unwrap();
        assert!(close(&u, &CMatrix::identity(2, 2), 1e-14));

        let u = expm_i(&pauli::z().scale(PI / 2.0)).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![I, -I]));
        assert!(close(&u, &expect, 1e-14));

        let h = pauli::x().scale(PI / 2.0);
        let u = expm_i(&h).unwrap();
        let series = expm_series(&(h.matrix() * I));
        let expect = pauli::x().into_inner() * I;
        assert!(close(&series, &expect, 1e-12));
        assert!(close(&u, &expect, 1e-12));
    }

    #[test]
    fn averaged_conjugation_examples() {
        let out = averaged_conjugation(&HermitianMatrix::zeros(2), &pauli::y()).unwrap();
        assert!(close(out.matrix(), pauli::y().matrix(), 1e-15));

        let out = averaged_conjugation(&pauli::z(), &pauli::z()).unwrap();
        assert!(close(out.matrix(), pauli::z().matrix(), 1e-14));

        // ∫_0^1 e^{-is(π/4)σy} σz e^{is(π/4)σy} ds = (2/π)(σz + σx)
        let out = averaged_conjugation(&pauli::y().scale(PI / 4.0), &pauli::z()).unwrap();
        let expect = pauli::z().add(&pauli::x()).scale(2.0 / PI);
        assert!(close(out.matrix(), expect.matrix(), 1e-13));

        assert!(averaged_conjugation(&HermitianMatrix::zeros(2), &HermitianMatrix::zeros(3)).is_err());
    }

    #[test]
    fn phi_is_continuous_across_taylor_switch() {
        let t = numerics().phi_taylor;
        let below = phi(I * (t * 0.999));
        let above = phi(I * (t * 1.001));
        assert!((below - above).norm() < 1e-6);
        assert_eq!(phi(real(0.0)), real(1.0));
    }

    #[test]
    fn kron_examples() {
        let i2 = CMatrix::identity(2, 2);
        assert!(close(&kron(&i2, &i2), &CMatrix::identity(4, 4), 0.0));
        let zi = kron(pauli::z().matrix(), &i2);
        assert!(close(&zi, HermitianMatrix::diagonal(&[1.0, 1.0, -1.0, -1.0]).matrix(), 0.0));
        let p0 = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let out = kron(p0.matrix(), pauli::x().matrix());
        let mut expect = CMatrix::zeros(4, 4);
        expect.view_mut((0, 0), (2, 2)).copy_from(pauli::x().matrix());
        assert!(close(&out, &expect, 0.0));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = HermitianMatrix::diagonal(&[0.25, 0.75]).into_inner();
        let sigma = CMatrix::from_row_slice(2, 2, &[real(0.5), c(0.1, 0.2), c(0.1, -0.2), real(0.5)]);
        let prod = kron(&rho, &sigma);
        assert!(close(&partial_trace(&prod, &[2, 2], 1).unwrap(), &rho, 1e-15));
        assert!(close(&partial_trace(&prod, &[2, 2], 0).unwrap(), &sigma, 1e-15));

        let mixed = CMatrix::identity(4, 4) / real(4.0);
        assert!(close(&partial_trace(&mixed, &[2, 2], 0).unwrap(), &(CMatrix::identity(2, 2) / real(2.0)), 1e-15));

        let s = 0.5f64.sqrt();
        let bell = CVector::from_vec(vec![real(s), real(0.0), real(0.0), real(s)]);
        let bell_rho = &bell * bell.adjoint();
        assert!(close(&partial_trace(&bell_rho, &[2, 2], 1).unwrap(), &(CMatrix::identity(2, 2) / real(2.0)), 1e-15));

        assert!(partial_trace(&mixed, &[2, 3], 0).is_err());
        assert!(partial_trace(&mixed, &[2, 2], 2).is_err());
    }

    #[test]
    fn embed_identity_inverts_partial_trace_on_products() {
        let a = HermitianMatrix::diagonal(&[0.3, 0.7]).into_inner();
        let b = CMatrix::from_row_slice(
            3,
            3,
            &[real(0.2), c(0.0, 0.1), real(0.0), c(0.0, -0.1), real(0.5), real(0.05), real(0.0), real(0.05), real(0.3)],
        );
        let out = embed_identity(&b, &[2, 3], 0).unwrap();
        assert!(close(&out, &kron(&CMatrix::identity(2, 2), &b), 0.0));
        let out = embed_identity(&a, &[2, 3], 1).unwrap();
        assert!(close(&out, &kron(&a, &CMatrix::identity(3, 3)), 0.0));
    }

    #[test]
    fn fidelity_examples() {
        let rho = HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[real(0.7), c(0.1, 0.2), c(0.1, -0.2), real(0.3)])).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);

        let p0 = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let p1 = HermitianMatrix::diagonal(&[0.0, 1.0]);
        assert!(fidelity(&p0, &p1).unwrap().abs() < 1e-14);

        let half = HermitianMatrix::identity(2).scale(0.5);
        assert!((fidelity(&half, &p0).unwrap() - 0.5).abs() < 1e-14);
        assert!((fidelity(&p0, &half).unwrap() - 0.5).abs() < 1e-14);

        assert!(fidelity(&HermitianMatrix::diagonal(&[1.5, -0.5]), &p0).is_err());
    }
}
