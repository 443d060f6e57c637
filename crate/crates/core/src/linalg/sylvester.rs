//! Bartels–Stewart solver for `S₂X − XS₁ = Q`.

use super::{norm2, real_schur, Matrix, ToleranceConfig};
use crate::error::{Error, Result};

/// Column-major Kronecker operator of `X ↦ S₂X − XS₁`.
pub(crate) fn kron_operator(s1: &Matrix, s2: &Matrix) -> Matrix {
    let (m1, m2) = (s1.nrows(), s2.nrows());
    let dim = m1 * m2;
    let mut k = Matrix::zeros(dim, dim);
    // vec(S₂X) = (I ⊗ S₂) vec X ; vec(XS₁) = (S₁ᵀ ⊗ I) vec X
    for j in 0..m1 {
        for r in 0..m2 {
            for c in 0..m2 {
                k[(j * m2 + r, j * m2 + c)] += s2[(r, c)];
            }
        }
    }
    for j in 0..m1 {
        for l in 0..m1 {
            let coeff = s1[(l, j)];
            if coeff != 0.0 {
                for r in 0..m2 {
                    k[(j * m2 + r, l * m2 + r)] -= coeff;
                }
            }
        }
    }
    k
}

/// Direct solve of a tiny Sylvester system (block sizes ≤ 2), also returning
/// the condition number of its Kronecker operator.
pub(crate) fn small_sylvester_with_condition(s1: &Matrix, s2: &Matrix, q: &Matrix) -> (Matrix, f64) {
    let (m1, m2) = (s1.nrows(), s2.nrows());
    let k = kron_operator(s1, s2);
    let sv = super::singular_values(&k);
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    let x = solve_small(&k, q, m1, m2);
    (x, condition)
}

fn solve_small(k: &Matrix, q: &Matrix, m1: usize, m2: usize) -> Matrix {
    let rhs = super::Vector::from_column_slice(q.as_slice());
    let sol = k.clone().lu().solve(&rhs).unwrap_or_else(|| super::Vector::zeros(m1 * m2));
    Matrix::from_column_slice(m2, m1, sol.as_slice())
}

fn block_ranges(blocks: &[super::SchurBlock]) -> Vec<(usize, usize)> {
    blocks.iter().map(|b| (b.offset, b.size)).collect()
}

/// Solve `S₂X − XS₁ = Q` for `X` (`m₂ × m₁`).
///
/// Fails with [`Error::SpectraOverlap`] when some eigenvalue of `S₁` lies
/// within `tol_spec · max(1, ‖S₁‖, ‖S₂‖)` of an eigenvalue of `S₂`, i.e. when the
/// solution is not unique.
pub fn solve_sylvester(s1: &Matrix, s2: &Matrix, q: &Matrix, cfg: &ToleranceConfig) -> Result<Matrix> {
    let (m1, m2) = (s1.nrows(), s2.nrows());
    if !s1.is_square() || !s2.is_square() || q.shape() != (m2, m1) {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: S1 {:?}, S2 {:?}, Q {:?}",
            s1.shape(),
            s2.shape(),
            q.shape()
        )));
    }
    if m1 == 0 || m2 == 0 {
        return Ok(Matrix::zeros(m2, m1));
    }
    let f1 = real_schur(s1)?;
    let f2 = real_schur(s2)?;

    let scale = norm2(s1).max(norm2(s2)).max(1.0);
    let tolerance = cfg.tol_spec * scale;
    let mut distance = f64::INFINITY;
    for (a, b) in f1.eigenvalues() {
        for (c, d) in f2.eigenvalues() {
            distance = distance.min((a - c).hypot(b - d));
        }
    }
    if distance <= tolerance {
        return Err(Error::SpectraOverlap { distance, tolerance });
    }

    // T₂Y − YT₁ = U₂ᵀ Q U₁ with S_i = U_i T_i U_iᵀ
    let (t1, t2) = (&f1.t, &f2.t);
    let f = f2.q.transpose() * q * &f1.q;
    let mut y = Matrix::zeros(m2, m1);
    let cols = block_ranges(&f1.blocks);
    let rows = block_ranges(&f2.blocks);
    for &(cj, sj) in &cols {
        for &(rk, sk) in rows.iter().rev() {
            let mut rhs = f.view((rk, cj), (sk, sj)).into_owned();
            if cj > 0 {
                rhs += y.view((rk, 0), (sk, cj)) * t1.view((0, cj), (cj, sj));
            }
            let below = rk + sk;
            if below < m2 {
                rhs -= t2.view((rk, below), (sk, m2 - below)) * y.view((below, cj), (m2 - below, sj));
            }
            let s1b = t1.view((cj, cj), (sj, sj)).into_owned();
            let s2b = t2.view((rk, rk), (sk, sk)).into_owned();
            let k = kron_operator(&s1b, &s2b);
            let block = solve_small(&k, &rhs, sj, sk);
            y.view_mut((rk, cj), (sk, sj)).copy_from(&block);
        }
    }
    Ok(&f2.q * y * f1.q.transpose())
}
