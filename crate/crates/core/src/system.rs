use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, Matrix};

/// The pair `(A, C)` of `ẋ = Ax`, `w = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSystem {
    a: Matrix,
    c: Matrix,
}

impl ObservedSystem {
    pub fn new(a: Matrix, c: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if c.ncols() != a.nrows() {
            return Err(Error::Shape(format!(
                "C must have {} columns to match A, got {}",
                a.nrows(),
                c.ncols()
            )));
        }
        if c.nrows() == 0 {
            return Err(Error::Shape("C must have at least one row".into()));
        }
        if !is_finite(&a) || !is_finite(&c) {
            return Err(Error::Value("system matrices must be finite".into()));
        }
        Ok(Self { a, c })
    }

    /// Build from row slices; panics on invalid input. Meant for fixtures and tests.
    pub fn from_rows(a: &[&[f64]], c: &[&[f64]]) -> Self {
        let n = a.len();
        let a = Matrix::from_fn(n, n, |i, j| a[i][j]);
        let c = Matrix::from_fn(c.len(), n, |i, j| c[i][j]);
        Self::new(a, c).expect("valid fixture")
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `(R⁻¹AR, CR)`.
    pub fn transformed(&self, r: &Matrix) -> Result<Self> {
        let r_inv = crate::linalg::inverse(r)?;
        Self::new(&r_inv * &self.a * r, &self.c * r)
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.a, self.c)
    }
}

/// Plain row-major form used for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemData {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}
