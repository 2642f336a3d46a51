//! Small dense complex matrices.
//!
//! Everything in this crate lives in dimension n ≤ 16 or so, so storage is a
//! flat row-major `Vec` and the kernels are plain loops. Equality between
//! matrices is always tolerance based, measured by [`ComplexMatrix::max_abs_diff`].

use std::fmt;
use std::ops::{Index, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex scalar used for every matrix entry.
pub type ComplexScalar = Complex64;

/// Library-wide default equality tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Checked scalar constructor; rejects NaN and infinities.
pub fn scalar(re: f64, im: f64) -> Result<ComplexScalar> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(Error::NonFinite(format!("({re}, {im})")))
    }
}

/// `e^{iφ}`.
#[inline]
pub fn phase(angle: f64) -> ComplexScalar {
    Complex64::from_polar(1.0, angle)
}

/// Square complex matrix in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<ComplexScalar>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        let entries = raw
            .entries
            .iter()
            .map(|[re, im]| scalar(*re, *im))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::new(raw.dim, entries)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            dim: m.dim,
            entries: m.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<ComplexScalar>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != dim * dim {
            return Err(Error::EntryCount {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if let Some(z) = entries.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!("{z}")));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ComplexScalar) -> Self {
        assert!(dim > 0, "matrix dimension must be at least 1");
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let z = f(r, c);
                assert!(z.re.is_finite() && z.im.is_finite(), "non-finite entry at ({r}, {c})");
                entries.push(z);
            }
        }
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn diagonal(diag: &[ComplexScalar]) -> Self {
        Self::from_fn(diag.len(), |r, c| {
            if r == c {
                diag[r]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<_> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&d)
    }

    /// Diagonal phase matrix `diag(e^{iφ_1}, ..., e^{iφ_n})`.
    pub fn phases(angles: &[f64]) -> Self {
        let d: Vec<_> = angles.iter().map(|&a| phase(a)).collect();
        Self::diagonal(&d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[ComplexScalar] {
        &self.entries
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (o, b) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { dim: n, entries: out })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |(A·A†) - I| ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self * &self.adjoint();
        prod.max_abs_diff(&Self::identity(self.dim))
            .expect("square product has matching dimension")
    }

    /// `max |A - A†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
            .expect("adjoint has matching dimension")
    }

    pub fn trace(&self) -> ComplexScalar {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    /// `A·B - B·A`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let herm = DMatrix::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5);
        let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Right-multiplies in place by the rotation block `[[c, s], [-s, c]]`
    /// embedded at rows/columns `(lo, hi)`.
    pub(crate) fn rotate_columns(&mut self, lo: usize, hi: usize, c: f64, s: f64) {
        let n = self.dim;
        for r in 0..n {
            let a = self.entries[r * n + lo];
            let b = self.entries[r * n + hi];
            self.entries[r * n + lo] = a * c - b * s;
            self.entries[r * n + hi] = a * s + b * c;
        }
    }

    /// Left-multiplies in place by the transpose of the rotation block at `(lo, hi)`.
    pub(crate) fn rotate_rows_transposed(&mut self, lo: usize, hi: usize, c: f64, s: f64) {
        let n = self.dim;
        for col in 0..n {
            let a = self.entries[lo * n + col];
            let b = self.entries[hi * n + col];
            self.entries[lo * n + col] = a * c - b * s;
            self.entries[hi * n + col] = a * s + b * c;
        }
    }

    pub(crate) fn scale_column(&mut self, col: usize, z: ComplexScalar) {
        let n = self.dim;
        for r in 0..n {
            self.entries[r * n + col] *= z;
        }
    }

    pub(crate) fn scale_row(&mut self, row: usize, z: ComplexScalar) {
        let n = self.dim;
        for e in &mut self.entries[row * n..(row + 1) * n] {
            *e *= z;
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = ComplexScalar;

    fn index(&self, (r, c): (usize, usize)) -> &ComplexScalar {
        assert!(r < self.dim && c < self.dim, "index ({r}, {c}) out of range");
        &self.entries[r * self.dim + c]
    }
}

/// Panics on dimension mismatch; use [`ComplexMatrix::multiply`] for the checked form.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.multiply(rhs).expect("matrix product dimension mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Haar-distributed unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n > 0);
    loop {
        let mut cols: Vec<Vec<ComplexScalar>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            })
            .collect();
        let mut degenerate = false;
        for k in 0..n {
            // two passes of modified Gram-Schmidt keep orthogonality at machine precision
            for _ in 0..2 {
                for j in 0..k {
                    let (done, rest) = cols.split_at_mut(k);
                    let proj: ComplexScalar =
                        done[j].iter().zip(&rest[0]).map(|(q, v)| q.conj() * v).sum();
                    for (v, q) in rest[0].iter_mut().zip(&done[j]) {
                        *v -= proj * q;
                    }
                }
            }
            let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            for v in &mut cols[k] {
                *v /= norm;
            }
        }
        if !degenerate {
            return ComplexMatrix::from_fn(n, |r, c| cols[c][r]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> ComplexScalar {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn naive_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Vec<ComplexScalar> {
        let n = a.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for k in 0..n {
                    acc += a[(i, k)] * b[(k, j)];
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(3, &mut rng);
        let p = ComplexMatrix::identity(3).multiply(&m).unwrap();
        assert_eq!(p.max_abs_diff(&m).unwrap(), 0.0);
    }

    #[test]
    fn inverse_phases_multiply_to_identity() {
        let a = ComplexMatrix::diagonal(&[c(0.0, 1.0), c(1.0, 0.0)]);
        let b = ComplexMatrix::diagonal(&[c(0.0, -1.0), c(1.0, 0.0)]);
        let p = a.multiply(&b).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn multiply_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(4, &mut rng);
        let b = random_matrix(4, &mut rng);
        let fast = a.multiply(&b).unwrap();
        let slow = ComplexMatrix::new(4, naive_product(&a, &b)).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-14);
    }

    #[test]
    fn multiply_rejects_mismatch() {
        let err = ComplexMatrix::identity(2).multiply(&ComplexMatrix::identity(3));
        assert_eq!(err, Err(Error::DimensionMismatch { left: 2, right: 3 }));
        assert!(ComplexMatrix::identity(2)
            .max_abs_diff(&ComplexMatrix::identity(3))
            .is_err());
    }

    #[test]
    fn adjoint_cases() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(id.adjoint(), id);
        let d = ComplexMatrix::phases(&[0.3, -1.1, 2.0]);
        let expected = ComplexMatrix::phases(&[-0.3, 1.1, -2.0]);
        assert!(d.adjoint().max_abs_diff(&expected).unwrap() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(5, &mut rng);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn max_abs_diff_direct() {
        let m = ComplexMatrix::real_diagonal(&[1.0, 1.0 + 1e-13]);
        let d = ComplexMatrix::identity(2).max_abs_diff(&m).unwrap();
        assert!((d - 1e-13).abs() < 1e-16);
    }

    #[test]
    fn unitarity_checks() {
        assert!(ComplexMatrix::identity(3).is_unitary(1e-12));
        assert!(!ComplexMatrix::real_diagonal(&[2.0, 1.0]).is_unitary(1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            assert!(random_unitary(n, &mut rng).is_unitary(1e-13));
        }
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(ComplexMatrix::new(0, vec![]), Err(Error::EmptyMatrix));
        assert!(matches!(
            ComplexMatrix::new(2, vec![c(1.0, 0.0)]),
            Err(Error::EntryCount { expected: 4, found: 1 })
        ));
        assert!(matches!(
            ComplexMatrix::new(1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite(_))
        ));
        assert!(scalar(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn hermitian_spectrum() {
        let m = ComplexMatrix::real_diagonal(&[0.5, -0.25, 0.75]);
        let ev = m.hermitian_eigenvalues();
        assert!((ev[0] + 0.25).abs() < 1e-14 && (ev[2] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn json_shape() {
        let m = ComplexMatrix::diagonal(&[c(1.0, 0.5), c(0.0, -1.0)]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dim":2,"entries":[[1.0,0.5],[0.0,0.0],[0.0,0.0],[0.0,-1.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"dim":2,"entries":[[1,0]]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit_matrix(n: usize, seed: u64) -> ComplexMatrix {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(n, &mut rng);
            let norm = m.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            ComplexMatrix::from_fn(n, |r, cc| m[(r, cc)] / norm)
        }

        proptest! {
            #[test]
            fn multiply_is_associative(n in 1usize..=8, seed in any::<u64>()) {
                let a = unit_matrix(n, seed);
                let b = unit_matrix(n, seed.wrapping_add(1));
                let cm = unit_matrix(n, seed.wrapping_add(2));
                let left = &(&a * &b) * &cm;
                let right = &a * &(&b * &cm);
                prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-13);
            }

            #[test]
            fn adjoint_reverses_products(n in 1usize..=8, seed in any::<u64>()) {
                let a = unit_matrix(n, seed);
                let b = unit_matrix(n, seed ^ 0x5555);
                let lhs = (&a * &b).adjoint();
                let rhs = &b.adjoint() * &a.adjoint();
                prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-14);
            }
        }
    }
}
