//! Dense real matrix engine.
//!
//! Matrices are plain `nalgebra::DMatrix<f64>` values. Everything that needs a
//! numerical threshold takes a [`ToleranceConfig`]; nothing here mutates shared
//! state, and randomness only enters through the seeded generator returned by
//! [`ToleranceConfig::rng`].

mod affine;
mod expm;
mod schur;
mod svd;
mod sylvester;

pub use affine::{solve_affine_matrix_equation, AffineSolution};
pub use expm::expm;
pub use schur::{real_schur, reorder_schur, RealSchurForm, SchurBlock};
pub use sylvester::solve_sylvester;
pub(crate) use svd::svd;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical thresholds shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative threshold on |Re λ| below which an eigenvalue counts as center.
    pub tol_spec: f64,
    /// Relative singular-value cutoff used for numerical rank.
    pub tol_rank: f64,
    /// Residual acceptance for matrix equations and witnesses.
    pub tol_residual: f64,
    /// Number of random draws when searching for a nonsingular witness.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            tol_spec: 1e-9,
            tol_rank: 1e-10,
            tol_residual: 1e-9,
            samples: 64,
            seed: 0,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_spec", self.tol_spec),
            ("tol_rank", self.tol_rank),
            ("tol_residual", self.tol_residual),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Value(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::Value("samples must be >= 1".into()));
        }
        Ok(())
    }

    /// Deterministic generator for one independent stream of this configuration.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Absolute threshold on |Re λ| for a matrix of the given spectral norm.
    pub fn spec_threshold(&self, norm: f64) -> f64 {
        self.tol_spec * norm.max(1.0)
    }
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd::svd(m).sigma
}

/// Full SVD with singular values sorted descending. `v` is always `cols x cols`
/// (short-and-wide inputs are padded with zero rows), so its trailing columns
/// span the null space.
pub(crate) fn sorted_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let (r, c) = m.shape();
    if c == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let work = if r < c {
        let mut padded = Matrix::zeros(c, c);
        padded.view_mut((0, 0), (r, c)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let s = svd::svd(&work);
    (s.sigma, s.v)
}

/// Cutoff below which a singular value is treated as zero.
pub(crate) fn rank_cutoff(sigma_max: f64, rows: usize, cols: usize, cfg: &ToleranceConfig) -> f64 {
    cfg.tol_rank * sigma_max * rows.max(cols) as f64
}

/// Number of singular values above `tol_rank * σ_max * max(rows, cols)`.
pub fn rank_with_tolerance(m: &Matrix, cfg: &ToleranceConfig) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let cut = rank_cutoff(smax, m.nrows(), m.ncols(), cfg);
    s.iter().filter(|&&x| x > cut).count()
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!("cannot invert a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularWitness { det: 0.0, threshold: 0.0 })
}

pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Horizontal concatenation; every block must share `rows`.
pub fn hcat(rows: usize, blocks: &[&Matrix]) -> Matrix {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; every block must share `cols`.
pub fn vcat(cols: usize, blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Build a matrix from row slices. Panics on ragged input; intended for fixtures.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    Matrix::from_fn(r, c, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_identity_and_zero() {
        let cfg = ToleranceConfig::default();
        assert_eq!(rank_with_tolerance(&Matrix::identity(3, 3), &cfg), 3);
        assert_eq!(rank_with_tolerance(&Matrix::zeros(2, 3), &cfg), 0);
        assert_eq!(rank_with_tolerance(&Matrix::zeros(0, 0), &cfg), 0);
    }

    /// Fraction-free elimination over integers, independent of the SVD path.
    fn integer_rank(rows: &[Vec<i64>]) -> usize {
        let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let ncols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..ncols {
            let Some(piv) = (rank..m.len()).find(|&i| m[i][col] != 0) else { continue };
            m.swap(rank, piv);
            for i in 0..m.len() {
                if i != rank && m[i][col] != 0 {
                    let (a, b) = (m[rank][col], m[i][col]);
                    for j in 0..ncols {
                        m[i][j] = a * m[i][j] - b * m[rank][j];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn rank_deficient_two_by_two() {
        let cfg = ToleranceConfig::default();
        let expected = integer_rank(&[vec![1, 2], vec![2, 4]]);
        assert_eq!(expected, 1);
        let m = from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(rank_with_tolerance(&m, &cfg), expected);
    }

    #[test]
    fn sorted_svd_pads_wide_input() {
        let m = from_rows(&[&[1.0, 0.0, 0.0]]);
        let (s, v) = sorted_svd(&m);
        assert_eq!(v.shape(), (3, 3));
        assert!((s[0] - 1.0).abs() < 1e-15);
        assert!(s[1].abs() < 1e-15 && s[2].abs() < 1e-15);
        assert!((v.column(0)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        let bad = ToleranceConfig { samples: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ToleranceConfig { tol_rank: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn concatenation_helpers_accept_empty_blocks() {
        let a = Matrix::identity(2, 2);
        let e = Matrix::zeros(0, 0);
        let d = block_diag(&[&e, &a, &e]);
        assert_eq!(d, a);
        let h = hcat(1, &[&Matrix::zeros(1, 0), &from_rows(&[&[1.0, 2.0]])]);
        assert_eq!(h.shape(), (1, 2));
    }
}
