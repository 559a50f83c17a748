//! Small dense complex linear algebra.
//!
//! Everything downstream works with 2x2 Bloch Hamiltonians, the 3x3 effective
//! probe Hamiltonian, or the 6x6 open-system Hamiltonian, so matrices are
//! fixed to those dimensions and stored row-major in a flat `Vec`. No general
//! linear algebra dependency is warranted for three hardcoded sizes.

use crate::{Error, Result};
use num_complex::Complex64 as C64;

/// Dimensions the crate's physics actually uses.
const ALLOWED_DIMS: [usize; 3] = [2, 3, 6];

/// Dense square complex matrix, row-major, dimension 2, 3, or 6.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    /// Zero matrix of dimension `dim` (2, 3, or 6).
    pub fn zeros(dim: usize) -> Result<Self> {
        if !ALLOWED_DIMS.contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "matrix dimension must be 2, 3, or 6, got {dim}"
            )));
        }
        Ok(Self { dim, data: vec![C64::ZERO; dim * dim] })
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = C64::ONE;
        }
        Ok(m)
    }

    /// Build from a row-major element slice of length `dim * dim`.
    pub fn from_rows(dim: usize, elements: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        if elements.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} elements for a {dim}x{dim} matrix, got {}",
                dim * dim,
                elements.len()
            )));
        }
        m.data.copy_from_slice(elements);
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self { dim: n, data: vec![C64::ZERO; n * n] };
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-C64::ONE))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut out = Self { dim: n, data: vec![C64::ZERO; n * n] };
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.data[r * n + c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &CVec) -> Result<CVec> {
        if self.dim != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to length-{} vector",
                self.dim,
                self.dim,
                v.dim()
            )));
        }
        let n = self.dim;
        let mut out = vec![C64::ZERO; n];
        for r in 0..n {
            let mut acc = C64::ZERO;
            for c in 0..n {
                acc += self.data[r * n + c] * v.data[c];
            }
            out[r] = acc;
        }
        Ok(CVec { data: out })
    }
}

/// Complex column vector of dimension 2, 3, or 6.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec {
    data: Vec<C64>,
}

impl CVec {
    pub fn from_slice(elements: &[C64]) -> Result<Self> {
        if !ALLOWED_DIMS.contains(&elements.len()) {
            return Err(Error::InvalidInput(format!(
                "vector dimension must be 2, 3, or 6, got {}",
                elements.len()
            )));
        }
        Ok(Self { data: elements.to_vec() })
    }

    /// Standard basis vector `e_index` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = Self::from_slice(&vec![C64::ZERO; dim])?;
        v.data[index] = C64::ONE;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn get(&self, index: usize) -> C64 {
        self.data[index]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn dot(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product between lengths {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Order a pair of complex energies: descending real part, ties broken by
/// descending imaginary part.
///
/// This single convention is shared by the closed-form energies, the 2x2
/// eigensolver, and the fit-to-energy conversion so that band labels agree
/// across the pipeline.
pub fn order_pair(a: C64, b: C64) -> (C64, C64) {
    if a.re > b.re || (a.re == b.re && a.im >= b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Closed-form eigenvalues of a 2x2 complex matrix, ordered by [`order_pair`].
///
/// Uses the numerically stable quadratic form: the root with the larger
/// magnitude is taken as `q/2` and the other as `det / (q/2)`, avoiding
/// cancellation when the discriminant nearly equals the trace.
pub fn eig2(m: &CMat) -> Result<(C64, C64)> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "eig2 requires a 2x2 matrix, got {0}x{0}",
            m.dim()
        )));
    }
    let tr = m.get(0, 0) + m.get(1, 1);
    let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    let disc = (tr * tr - 4.0 * det).sqrt();
    let q_plus = tr + disc;
    let q_minus = tr - disc;
    let q = if q_plus.norm() >= q_minus.norm() { q_plus } else { q_minus };
    if q == C64::ZERO {
        // tr = det = 0: both eigenvalues vanish.
        return Ok((C64::ZERO, C64::ZERO));
    }
    let lambda1 = 0.5 * q;
    let lambda2 = det / lambda1;
    if !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::NumericRange("eig2 produced non-finite eigenvalues".into()));
    }
    Ok(order_pair(lambda1, lambda2))
}

/// Threshold for the scaled infinity norm in the exponential's Taylor stage.
const EXPM_THETA: f64 = 0.25;
/// Taylor truncation order; with the scaled norm below `EXPM_THETA` the
/// remainder is below 1e-28.
const EXPM_ORDER: usize = 18;

/// Matrix exponential `exp(A)` by scaling-and-squaring with a truncated
/// Taylor series.
///
/// The argument is scaled by `2^-s` until its infinity norm drops below
/// 0.25, the series is summed to order 18, and the result is squared `s`
/// times. Inputs needing `s > 63` (infinity norm beyond ~4e18) are rejected
/// as out of numeric range, as are non-finite inputs.
pub fn expm(a: &CMat) -> Result<CMat> {
    let norm = a.norm_inf();
    if !norm.is_finite() {
        return Err(Error::NumericRange("expm input has non-finite entries".into()));
    }
    let s = if norm > EXPM_THETA {
        (norm / EXPM_THETA).log2().ceil() as i64
    } else {
        0
    };
    if s > 63 {
        return Err(Error::NumericRange(format!(
            "expm scaling exponent {s} exceeds 63 (norm {norm:.3e})"
        )));
    }
    let dim = a.dim();
    let factor = C64::new(0.5f64.powi(s as i32), 0.0);
    let scaled: Vec<C64> = a.as_slice().iter().map(|z| z * factor).collect();

    // The Taylor and squaring loops run on flat buffers; this routine sits
    // in the innermost loop of the line fitter, where per-call allocations
    // dominate the cost of 3x3 work.
    let mut sum = vec![C64::ZERO; dim * dim];
    let mut term = vec![C64::ZERO; dim * dim];
    let mut product = vec![C64::ZERO; dim * dim];
    for i in 0..dim {
        sum[i * dim + i] = C64::ONE;
        term[i * dim + i] = C64::ONE;
    }
    for j in 1..=EXPM_ORDER {
        mul_slices(dim, &term, &scaled, &mut product);
        let inv = C64::new(1.0 / j as f64, 0.0);
        for (t, p) in term.iter_mut().zip(&product) {
            *t = p * inv;
        }
        for (acc, t) in sum.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    for _ in 0..s {
        mul_slices(dim, &sum, &sum, &mut product);
        sum.copy_from_slice(&product);
    }
    if !sum.iter().all(|z| z.is_finite()) {
        return Err(Error::NumericRange("expm result has non-finite entries".into()));
    }
    CMat::from_rows(dim, &sum)
}

fn mul_slices(dim: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = C64::ZERO;
            for k in 0..dim {
                acc += a[r * dim + k] * b[k * dim + c];
            }
            out[r * dim + c] = acc;
        }
    }
}

/// Propagate `psi0` under a (generally non-Hermitian) Hamiltonian for time
/// `t`: returns `exp(-i H t) psi0`. The norm is not renormalized; for
/// non-Hermitian `H` its decay carries the physics.
pub fn evolve(h: &CMat, psi0: &CVec, t: f64) -> Result<CVec> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("evolution time must be finite, got {t}")));
    }
    let generator = h.scale(C64::new(0.0, -t));
    expm(&generator)?.matvec(psi0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_mat(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> CMat {
        let elems: Vec<C64> = (0..dim * dim)
            .map(|_| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
            .collect();
        CMat::from_rows(dim, &elems).unwrap()
    }

    #[test]
    fn rejects_unsupported_dimensions() {
        assert!(CMat::zeros(4).is_err());
        assert!(CMat::zeros(1).is_err());
        assert!(CVec::from_slice(&[C64::ONE; 5]).is_err());
        for dim in [2, 3, 6] {
            assert!(CMat::zeros(dim).is_ok());
        }
    }

    #[test]
    fn eig2_matches_trace_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_mat(&mut rng, 2, 2.0);
            let (l1, l2) = eig2(&m).unwrap();
            let tr = m.trace();
            let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
            assert!((l1 + l2 - tr).norm() < 1e-12, "trace mismatch");
            assert!((l1 * l2 - det).norm() < 1e-12, "determinant mismatch");
            // Ordering convention.
            assert!(l1.re > l2.re || (l1.re == l2.re && l1.im >= l2.im));
        }
    }

    #[test]
    fn eig2_known_values() {
        let diag = CMat::from_rows(2, &[c(3.0, 0.0), C64::ZERO, C64::ZERO, c(-1.0, 0.0)]).unwrap();
        let (l1, l2) = eig2(&diag).unwrap();
        assert_eq!(l1, c(3.0, 0.0));
        assert_eq!(l2, c(-1.0, 0.0));

        // Defective nilpotent matrix: double eigenvalue zero.
        let nil = CMat::from_rows(2, &[C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO]).unwrap();
        let (l1, l2) = eig2(&nil).unwrap();
        assert_eq!(l1, C64::ZERO);
        assert_eq!(l2, C64::ZERO);

        // Pure loss on one site: eigenvalues 0 and -i.
        let lossy = CMat::from_rows(2, &[C64::ZERO, C64::ZERO, C64::ZERO, c(0.0, -1.0)]).unwrap();
        let (l1, l2) = eig2(&lossy).unwrap();
        assert_eq!((l1, l2), (C64::ZERO, c(0.0, -1.0)));
    }

    #[test]
    fn eig2_stable_near_cancellation() {
        // Large trace with tiny determinant: the naive (tr - disc)/2 branch
        // would lose all significant digits on the small root.
        let m = CMat::from_rows(2, &[c(1e8, 0.0), c(1.0, 0.0), c(1e-8, 0.0), c(1.0, 0.0)]).unwrap();
        let (l1, l2) = eig2(&m).unwrap();
        assert!((l1.re - 1e8).abs() / 1e8 < 1e-12);
        assert!((l2.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn order_pair_breaks_real_ties_by_imag() {
        let (a, b) = order_pair(c(0.0, -0.3), c(0.0, 0.2));
        assert_eq!(a, c(0.0, 0.2));
        assert_eq!(b, c(0.0, -0.3));
    }

    #[test]
    fn expm_zero_is_identity() {
        for dim in [2, 3, 6] {
            let e = expm(&CMat::zeros(dim).unwrap()).unwrap();
            let id = CMat::identity(dim).unwrap();
            let diff = e.sub(&id).unwrap();
            assert!(diff.norm_inf() < 1e-15);
        }
    }

    #[test]
    fn expm_diagonal() {
        let m = CMat::from_rows(
            3,
            &[
                c(0.3, -0.2),
                C64::ZERO,
                C64::ZERO,
                C64::ZERO,
                c(-1.5, 0.9),
                C64::ZERO,
                C64::ZERO,
                C64::ZERO,
                c(4.0, 0.0),
            ],
        )
        .unwrap();
        let e = expm(&m).unwrap();
        for i in 0..3 {
            let expected = m.get(i, i).exp();
            assert!((e.get(i, i) - expected).norm() < 1e-13 * expected.norm().max(1.0));
        }
        assert!(e.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn expm_semigroup_property() {
        // exp(A (t1 + t2)) = exp(A t1) exp(A t2) for commuting scalings of
        // one matrix; seeded loop over random matrices and step splits.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_mat(&mut rng, 3, 1.0);
            let t1 = rng.gen_range(0.1..2.0);
            let t2 = rng.gen_range(0.1..2.0);
            let whole = expm(&a.scale(c(t1 + t2, 0.0))).unwrap();
            let split = expm(&a.scale(c(t1, 0.0)))
                .unwrap()
                .mul(&expm(&a.scale(c(t2, 0.0))).unwrap())
                .unwrap();
            let err = whole.sub(&split).unwrap().norm_inf();
            assert!(err < 1e-11 * whole.norm_inf().max(1.0), "semigroup error {err}");
        }
    }

    #[test]
    fn expm_triggers_scaling_for_large_norms() {
        // Norm far above theta exercises the squaring stage.
        let a = CMat::from_rows(2, &[c(0.0, 40.0), C64::ZERO, C64::ZERO, c(0.0, -40.0)]).unwrap();
        let e = expm(&a).unwrap();
        let expected0 = c(0.0, 40.0).exp();
        assert!((e.get(0, 0) - expected0).norm() < 1e-10);
    }

    #[test]
    fn expm_rejects_absurd_norms() {
        let a = CMat::from_rows(2, &[c(1e20, 0.0), C64::ZERO, C64::ZERO, C64::ZERO]).unwrap();
        assert!(matches!(expm(&a), Err(Error::NumericRange(_))));
    }

    #[test]
    fn evolve_preserves_norm_for_hermitian_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let raw = random_mat(&mut rng, 3, 1.5);
            let h = raw.add(&raw.adjoint()).unwrap().scale(c(0.5, 0.0));
            let psi = CVec::from_slice(&[c(0.6, 0.1), c(-0.3, 0.4), c(0.2, -0.5)]).unwrap();
            let out = evolve(&h, &psi, rng.gen_range(0.0..10.0)).unwrap();
            assert!((out.norm() - psi.norm()).abs() < 1e-11);
        }
    }

    #[test]
    fn evolve_decays_under_uniform_loss() {
        // H = -i gamma I shrinks every amplitude by exp(-gamma t).
        let gamma = 0.3;
        let h = CMat::identity(2).unwrap().scale(c(0.0, -gamma));
        let psi = CVec::basis(2, 0).unwrap();
        let out = evolve(&h, &psi, 2.0).unwrap();
        assert!((out.norm() - (-gamma * 2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn matvec_and_dot_dimension_checks() {
        let m = CMat::identity(3).unwrap();
        let v2 = CVec::basis(2, 0).unwrap();
        assert!(m.matvec(&v2).is_err());
        let v3 = CVec::basis(3, 1).unwrap();
        assert!(v2.dot(&v3).is_err());
        assert_eq!(v3.dot(&v3).unwrap(), C64::ONE);
    }

    #[test]
    fn adjoint_involution_and_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_mat(&mut rng, 6, 1.0);
        let b = random_mat(&mut rng, 6, 1.0);
        assert_eq!(a.adjoint().adjoint(), a);
        let lhs = a.mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().mul(&a.adjoint()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm_inf() < 1e-12);
    }
}
