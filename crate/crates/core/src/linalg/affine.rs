//! Solution space of `{A₁P − PA₂ = 0, C₁P = C₂}`.

use super::svd::{svd, Svd};
use super::{rank_cutoff, sylvester::kron_operator, Matrix, ToleranceConfig, Vector};
use crate::error::{Error, Result};

/// Affine parameterization `P₀ + span(N₁, …, N_k)` of all solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSolution {
    /// Least-squares particular solution, present only when it satisfies the
    /// equations to within `tol_residual`.
    pub particular: Option<Matrix>,
    /// Frobenius-orthonormal basis of `{X : A₁X = XA₂, C₁X = 0}`.
    pub null_basis: Vec<Matrix>,
    /// Relative residual of the least-squares particular solution.
    pub residual: f64,
}

impl AffineSolution {
    /// `P₀ + Σ αᵢ Nᵢ`; a missing particular solution is treated as zero.
    pub fn combine(&self, coeffs: &[f64]) -> Option<Matrix> {
        let mut p = self.particular.clone()?;
        for (c, n) in coeffs.iter().zip(&self.null_basis) {
            p += n * *c;
        }
        Some(p)
    }
}

/// Parameterize every `P` (`n₁ × n₂`) with `A₁P = PA₂` and `C₁P = C₂`.
pub fn solve_affine_matrix_equation(
    a1: &Matrix,
    a2: &Matrix,
    c1: &Matrix,
    c2: &Matrix,
    cfg: &ToleranceConfig,
) -> Result<AffineSolution> {
    let (n1, n2) = (a1.nrows(), a2.nrows());
    let p = c1.nrows();
    if !a1.is_square() || !a2.is_square() || c1.ncols() != n1 || c2.shape() != (p, n2) {
        return Err(Error::DimensionMismatch(format!(
            "affine equation: A1 {:?}, A2 {:?}, C1 {:?}, C2 {:?}",
            a1.shape(),
            a2.shape(),
            c1.shape(),
            c2.shape()
        )));
    }
    let unknowns = n1 * n2;
    if unknowns == 0 {
        return Ok(AffineSolution { particular: Some(Matrix::zeros(n1, n2)), null_basis: Vec::new(), residual: 0.0 });
    }

    // Balance the two constraint families so neither dominates the rank
    // decision. Scales below 1 count as 1, so that blocks of rounding noise
    // are not blown up into genuine constraints.
    let wa = 1.0 / (a1.norm() + a2.norm()).max(1.0);
    let wc = 1.0 / c1.norm().max(1.0);

    let sylv = kron_operator(a2, a1);
    let rows = unknowns + p * n2;
    let mut k = Matrix::zeros(rows, unknowns);
    k.view_mut((0, 0), (unknowns, unknowns)).copy_from(&(sylv * wa));
    // vec(C₁P) = (I ⊗ C₁) vec P
    for j in 0..n2 {
        for r in 0..p {
            for c in 0..n1 {
                k[(unknowns + j * p + r, j * n1 + c)] = wc * c1[(r, c)];
            }
        }
    }
    let mut b = Vector::zeros(rows);
    for j in 0..n2 {
        for r in 0..p {
            b[unknowns + j * p + r] = wc * c2[(r, j)];
        }
    }

    let Svd { u, sigma, v } = svd(&k);
    let smax = sigma.first().copied().unwrap_or(0.0);
    // Both constraint families are weighted to size at most about 1, so the
    // cutoff is floored there too: a system made only of noise stays singular.
    let cut = rank_cutoff(smax.max(1.0), rows, unknowns, cfg);

    let mut x = Vector::zeros(unknowns);
    let mut null_basis = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        let v = v.column(i);
        if s > cut {
            x += v * (u.column(i).dot(&b) / s);
        } else {
            null_basis.push(Matrix::from_column_slice(n1, n2, v.as_slice()));
        }
    }

    let b_norm = b.norm();
    let abs_residual = (&k * &x - &b).norm();
    let residual = abs_residual / b_norm.max(1.0);
    let particular = (residual <= cfg.tol_residual).then(|| Matrix::from_column_slice(n1, n2, x.as_slice()));
    Ok(AffineSolution { particular, null_basis, residual })
}
