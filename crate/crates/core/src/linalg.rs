//! Dense matrices and LU factorization with partial pivoting, on top of
//! `nalgebra`.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `||A||_inf` count as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parameter("ragged rows".into()));
        }
        let n = rows.len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(Self {
            inner: DMatrix::from_row_slice(n, cols, &data),
        })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.inner.is_square()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.inner
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.inner
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols(), "dimension mismatch");
        (&self.inner * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.inner[idx]
    }
}

/// `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: LU<f64, Dyn, Dyn>,
}

impl LuFactors {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Parameter(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(Error::Parameter("matrix has non-finite entries".into()));
        }
        let tol = SINGULAR_PIVOT_RATIO * a.norm_inf();
        let lu = a.inner.clone().lu();
        let u = lu.u();
        if let Some(k) = (0..a.rows()).find(|&k| !(u[(k, k)].abs() > tol)) {
            return Err(Error::Singular {
                column: k,
                pivot: u[(k, k)],
            });
        }
        Ok(Self { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.l().nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let x = self
            .lu
            .solve(&DVector::from_column_slice(b))
            .expect("pivots checked at factorization");
        x.as_slice().to_vec()
    }

    /// `||A^{-1}||_inf` with the inverse formed from the factors.
    pub fn inverse_norm_inf(&self) -> f64 {
        let inv = self
            .lu
            .try_inverse()
            .expect("pivots checked at factorization");
        inv.row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
