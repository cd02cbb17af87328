//! Dense complex linear algebra sized for few-qubit work.
//!
//! Matrices are row-major over [`ComplexScalar`] and stay small (the rest
//! of the crate never exceeds dimension 64), so a hand-rolled kernel with
//! explicit shape errors beats pulling in a general linear-algebra stack.
//! No decompositions live here: every unitary and projector in the crate
//! is constructed analytically and then checked against its defining
//! algebraic identities.

use num_complex::Complex64;
use thiserror::Error;

/// Scalar type used throughout the crate.
pub type ComplexScalar = Complex64;

/// Largest eps accepted by [`Tolerance::new`].
pub const MAX_EPS: f64 = 1e-3;

/// Default eps for all approximate comparisons.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Errors raised by matrix construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    /// Operand shapes do not line up for the named operation.
    #[error("{op}: dimension mismatch, left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    DimensionMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    /// A square matrix was required.
    #[error("{op}: matrix is {rows}x{cols}, expected square")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    /// Entry storage does not match the declared shape.
    #[error("matrix storage holds {len} entries, expected {rows}x{cols} = {expected}")]
    StorageMismatch {
        rows: usize,
        cols: usize,
        len: usize,
        expected: usize,
    },
    /// A NaN or infinite entry was rejected.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    /// Tolerance outside the accepted open interval.
    #[error("tolerance eps must satisfy 0 < eps < {MAX_EPS}, got {eps}")]
    BadTolerance { eps: f64 },
    /// An index fell outside the matrix.
    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Comparison tolerance, constrained to the open interval (0, 1e-3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
}

impl Tolerance {
    /// Builds a tolerance, rejecting values outside (0, [`MAX_EPS`]).
    pub fn new(eps: f64) -> Result<Self, NumericsError> {
        if !(eps > 0.0 && eps < MAX_EPS) {
            return Err(NumericsError::BadTolerance { eps });
        }
        Ok(Tolerance { eps })
    }

    /// The raw eps value.
    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: DEFAULT_EPS }
    }
}

/// Dense row-major complex matrix.
///
/// Entry `(r, c)` lives at `entries[r * cols + c]`. Construction rejects
/// NaN and infinite entries, so downstream code can assume finite data.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ComplexScalar>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major storage.
    pub fn new(
        rows: usize,
        cols: usize,
        entries: Vec<ComplexScalar>,
    ) -> Result<Self, NumericsError> {
        let expected = rows * cols;
        if entries.len() != expected {
            return Err(NumericsError::StorageMismatch {
                rows,
                cols,
                len: entries.len(),
                expected,
            });
        }
        for (i, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NumericsError::NonFinite {
                    row: i.checked_div(cols).unwrap_or(0),
                    col: i.checked_rem(cols).unwrap_or(0),
                });
            }
        }
        Ok(ComplexMatrix {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from nested rows, checking that rows are equal length.
    pub fn from_rows(rows: &[Vec<ComplexScalar>]) -> Result<Self, NumericsError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(NumericsError::StorageMismatch {
                    rows: nrows,
                    cols: ncols,
                    len: row.len(),
                    expected: ncols * (r + 1),
                });
            }
            entries.extend_from_slice(row);
        }
        ComplexMatrix::new(nrows, ncols, entries)
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Column vector from a list of amplitudes.
    pub fn column(entries: Vec<ComplexScalar>) -> Result<Self, NumericsError> {
        let n = entries.len();
        ComplexMatrix::new(n, 1, entries)
    }

    /// Standard basis column `e_index` in the given dimension.
    pub fn basis_column(dim: usize, index: usize) -> Result<Self, NumericsError> {
        if index >= dim {
            return Err(NumericsError::OutOfBounds {
                row: index,
                col: 0,
                rows: dim,
                cols: 1,
            });
        }
        let mut m = ComplexMatrix::zeros(dim, 1);
        m.entries[index] = Complex64::new(1.0, 0.0);
        Ok(m)
    }

    /// Square matrix with the given diagonal and zeros elsewhere.
    pub fn diagonal(diag: &[ComplexScalar]) -> Result<Self, NumericsError> {
        let dim = diag.len();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (i, z) in diag.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NumericsError::NonFinite { row: i, col: i });
            }
            m.entries[i * dim + i] = *z;
        }
        Ok(m)
    }

    /// Unitary rotation acting in the plane of basis states `i` and `j`.
    ///
    /// The 2x2 block is `[[cos t, -e^{-i phase} sin t], [e^{i phase} sin t,
    /// cos t]]`; all other basis states are fixed. Products of these give
    /// arbitrary-dimension unitaries without any decomposition.
    pub fn plane_rotation(
        dim: usize,
        i: usize,
        j: usize,
        theta: f64,
        phase: f64,
    ) -> Result<Self, NumericsError> {
        if i >= dim || j >= dim || i == j {
            return Err(NumericsError::OutOfBounds {
                row: i,
                col: j,
                rows: dim,
                cols: dim,
            });
        }
        if !theta.is_finite() || !phase.is_finite() {
            return Err(NumericsError::NonFinite { row: i, col: j });
        }
        let mut m = ComplexMatrix::identity(dim);
        let c = Complex64::new(theta.cos(), 0.0);
        let s = theta.sin();
        m.entries[i * dim + i] = c;
        m.entries[j * dim + j] = c;
        m.entries[i * dim + j] = -Complex64::from_polar(s, -phase);
        m.entries[j * dim + i] = Complex64::from_polar(s, phase);
        Ok(m)
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the matrix is square.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry at `(row, col)`; panics on out-of-bounds access.
    pub fn get(&self, row: usize, col: usize) -> ComplexScalar {
        assert!(
            row < self.rows && col < self.cols,
            "index ({row}, {col}) out of bounds for {}x{} matrix",
            self.rows,
            self.cols
        );
        self.entries[row * self.cols + col]
    }

    /// Replaces the entry at `(row, col)`.
    pub fn set(&mut self, row: usize, col: usize, value: ComplexScalar) {
        assert!(
            row < self.rows && col < self.cols,
            "index ({row}, {col}) out of bounds for {}x{} matrix",
            self.rows,
            self.cols
        );
        self.entries[row * self.cols + col] = value;
    }

    /// Row-major view of the raw entries.
    pub fn entries(&self) -> &[ComplexScalar] {
        &self.entries
    }

    /// Matrix product `self * other`.
    pub fn mat_mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch {
                op: "mat_mul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.entries[r * other.cols + c] += a * other.entries[k * other.cols + c];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[c * self.rows + r] = self.entries[r * self.cols + c].conj();
            }
        }
        out
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> Result<ComplexScalar, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::NotSquare {
                op: "trace",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            t += self.entries[i * self.cols + i];
        }
        Ok(t)
    }

    /// Kronecker (tensor) product `self (x) other`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for ar in 0..self.rows {
            for ac in 0..self.cols {
                let a = self.entries[ar * self.cols + ac];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for br in 0..other.rows {
                    for bc in 0..other.cols {
                        let r = ar * other.rows + br;
                        let c = ac * other.cols + bc;
                        out.entries[r * cols + c] = a * other.entries[br * other.cols + bc];
                    }
                }
            }
        }
        out
    }

    /// Entrywise sum.
    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        self.zip_check("add", other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
        self.zip_check("sub", other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: ComplexScalar) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference in modulus.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64, NumericsError> {
        self.zip_check("max_abs_diff", other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// True when every entry of `self` is within `tol` of `other`.
    pub fn approx_eq(&self, other: &ComplexMatrix, tol: Tolerance) -> Result<bool, NumericsError> {
        Ok(self.max_abs_diff(other)? <= tol.eps())
    }

    /// Inner product of two column vectors, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexMatrix) -> Result<ComplexScalar, NumericsError> {
        if self.cols != 1 || other.cols != 1 || self.rows != other.rows {
            return Err(NumericsError::DimensionMismatch {
                op: "inner",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }

    /// Euclidean norm of a column vector (Frobenius norm in general).
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// True when `self` is square and within `tol` of Hermitian.
    pub fn is_hermitian(&self, tol: Tolerance) -> bool {
        self.is_square()
            && self
                .max_abs_diff(&self.adjoint())
                .is_ok_and(|d| d <= tol.eps())
    }

    /// True when `self` is square and satisfies the unitarity identity.
    pub fn is_unitary(&self, tol: Tolerance) -> bool {
        if !self.is_square() {
            return false;
        }
        let gram = self
            .adjoint()
            .mat_mul(self)
            .expect("adjoint shape matches");
        gram.max_abs_diff(&ComplexMatrix::identity(self.rows))
            .is_ok_and(|d| d <= tol.eps())
    }

    fn zip_check(&self, op: &'static str, other: &ComplexMatrix) -> Result<(), NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimensionMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        Ok(())
    }
}

/// Convenience free function mirroring [`ComplexMatrix::mat_mul`].
pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    a.mat_mul(b)
}

/// Convenience free function mirroring [`ComplexMatrix::adjoint`].
pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Convenience free function mirroring [`ComplexMatrix::trace`].
pub fn trace(a: &ComplexMatrix) -> Result<ComplexScalar, NumericsError> {
    a.trace()
}

/// Convenience free function mirroring [`ComplexMatrix::kron`].
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Convenience free function mirroring [`ComplexMatrix::approx_eq`].
pub fn approx_eq(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: Tolerance,
) -> Result<bool, NumericsError> {
    a.approx_eq(b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_storage_shape_mismatch() {
        let err = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0); 3]).unwrap_err();
        assert!(matches!(err, NumericsError::StorageMismatch { len: 3, .. }));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = ComplexMatrix::new(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, NumericsError::NonFinite { row: 0, col: 1 });
        let err = ComplexMatrix::new(2, 1, vec![c(1.0, 0.0), c(0.0, f64::INFINITY)]).unwrap_err();
        assert_eq!(err, NumericsError::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn tolerance_rejects_out_of_range() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1e-9).is_err());
        assert!(Tolerance::new(1e-3).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert_eq!(Tolerance::new(1e-9).unwrap().eps(), 1e-9);
        assert_eq!(Tolerance::default().eps(), 1e-9);
    }

    #[test]
    fn mat_mul_matches_hand_product() {
        // (1/2) [[1,1],[1,1]] * [[1,0],[0,0]] = (1/2) [[1,0],[1,0]]
        let half = c(0.5, 0.0);
        let a = ComplexMatrix::from_rows(&[vec![half, half], vec![half, half]]).unwrap();
        let b = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let prod = a.mat_mul(&b).unwrap();
        let expected = ComplexMatrix::from_rows(&[
            vec![half, c(0.0, 0.0)],
            vec![half, c(0.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn mat_mul_rejects_inner_dim_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 2);
        let err = a.mat_mul(&b).unwrap_err();
        assert_eq!(
            err,
            NumericsError::DimensionMismatch {
                op: "mat_mul",
                lhs_rows: 2,
                lhs_cols: 3,
                rhs_rows: 2,
                rhs_cols: 2,
            }
        );
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(3.0, -1.0)],
            vec![c(0.0, 1.0), c(4.0, 0.0)],
        ])
        .unwrap();
        let a = m.adjoint();
        assert_eq!(a.get(0, 0), c(1.0, -2.0));
        assert_eq!(a.get(0, 1), c(0.0, -1.0));
        assert_eq!(a.get(1, 0), c(3.0, 1.0));
        assert_eq!(a.get(1, 1), c(4.0, 0.0));
        // Involution: (M†)† = M.
        assert_eq!(a.adjoint(), m);
    }

    #[test]
    fn trace_requires_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            m.trace().unwrap_err(),
            NumericsError::NotSquare { op: "trace", .. }
        ));
        let id = ComplexMatrix::identity(4);
        assert_eq!(id.trace().unwrap(), c(4.0, 0.0));
    }

    #[test]
    fn kron_has_block_structure() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let b = ComplexMatrix::from_rows(&[
            vec![c(0.0, 1.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, -1.0)],
        ])
        .unwrap();
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k.cols(), 4);
        assert_eq!(k.get(0, 0), c(0.0, 1.0));
        assert_eq!(k.get(0, 2), c(0.0, 2.0));
        assert_eq!(k.get(1, 3), c(0.0, -2.0));
        assert_eq!(k.get(2, 2), c(0.0, 1.0));
        // Trace is multiplicative over the tensor product.
        let ta = a.trace().unwrap();
        let tb = b.trace().unwrap();
        assert_eq!(k.trace().unwrap(), ta * tb);
    }

    #[test]
    fn approx_eq_uses_max_entry_distance() {
        let tol = Tolerance::default();
        let a = ComplexMatrix::identity(2);
        let mut b = ComplexMatrix::identity(2);
        b.set(0, 1, c(0.5e-9, 0.0));
        assert!(a.approx_eq(&b, tol).unwrap());
        b.set(0, 1, c(2e-9, 0.0));
        assert!(!a.approx_eq(&b, tol).unwrap());
        let wide = ComplexMatrix::zeros(2, 3);
        assert!(a.approx_eq(&wide, tol).is_err());
    }

    #[test]
    fn plane_rotation_is_unitary() {
        let tol = Tolerance::default();
        let u = ComplexMatrix::plane_rotation(4, 1, 3, 0.7, 1.3).unwrap();
        assert!(u.is_unitary(tol));
        assert!(ComplexMatrix::plane_rotation(3, 1, 1, 0.5, 0.0).is_err());
        assert!(ComplexMatrix::plane_rotation(3, 1, 5, 0.5, 0.0).is_err());
    }

    #[test]
    fn inner_product_is_conjugate_linear_on_the_left() {
        let x = ComplexMatrix::column(vec![c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        let y = ComplexMatrix::column(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(x.inner(&y).unwrap(), c(0.0, -1.0));
        assert_eq!(y.inner(&x).unwrap(), c(0.0, 1.0));
        assert_eq!(x.inner(&x).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn basis_column_and_diagonal_helpers() {
        let e2 = ComplexMatrix::basis_column(4, 2).unwrap();
        assert_eq!(e2.get(2, 0), c(1.0, 0.0));
        assert_eq!(e2.norm(), 1.0);
        assert!(ComplexMatrix::basis_column(4, 4).is_err());
        let d = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(d.get(1, 1), c(0.0, 1.0));
        assert_eq!(d.get(0, 1), c(0.0, 0.0));
    }
}
