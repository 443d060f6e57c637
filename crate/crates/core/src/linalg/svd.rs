//! Thin SVD with a reconstruction check.
//!
//! nalgebra's bidiagonal SVD occasionally returns a factorization that does not
//! reproduce its input (seen on tall Kronecker stacks with an exact null
//! space). Each result is checked, and a failed one is recomputed by one-sided
//! Jacobi, which is slow but reliably accurate at these sizes.

use super::Matrix;

/// `m = u · diag(sigma) · vᵀ` with `sigma` descending; `u` is `rows × k`,
/// `v` is `cols × k`, `k = min(rows, cols)`.
pub(crate) struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

pub(crate) fn svd(m: &Matrix) -> Svd {
    let (r, c) = m.shape();
    if r < c {
        let t = svd(&m.transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let fast = m.clone().svd(true, true);
    let out = match (fast.u, fast.v_t) {
        (Some(u), Some(v_t)) => sorted(u, fast.singular_values.iter().copied().collect(), v_t.transpose()),
        _ => return jacobi(m),
    };
    if accurate(m, &out) {
        out
    } else {
        jacobi(m)
    }
}

fn accurate(m: &Matrix, s: &Svd) -> bool {
    let k = s.sigma.len();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let rec = &s.u * Matrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * s.v.transpose();
    let orth = (s.v.transpose() * &s.v - Matrix::identity(k, k)).norm();
    let tol = 1e3 * f64::EPSILON * (m.nrows() + m.ncols()) as f64;
    (rec - m).norm() <= tol * scale && orth <= tol
}

fn sorted(u: Matrix, sigma: Vec<f64>, v: Matrix) -> Svd {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    Svd {
        u: u.select_columns(order.iter()),
        sigma: order.iter().map(|&i| sigma[i]).collect(),
        v: v.select_columns(order.iter()),
    }
}

/// One-sided (Hestenes) Jacobi for `rows ≥ cols`.
fn jacobi(m: &Matrix) -> Svd {
    let c = m.ncols();
    let mut w = m.clone();
    let mut v = Matrix::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let (x, y) = (mat[(r, i)], mat[(r, j)]);
                        mat[(r, i)] = cs * x - sn * y;
                        mat[(r, j)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..c).map(|j| w.column(j).norm()).collect();
    let mut u = w;
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            u.column_mut(j).unscale_mut(s);
        }
    }
    sorted(u, sigma, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_values() {
        let m = Matrix::from_row_slice(3, 2, &[3.0, 0.0, 0.0, 4.0, 0.0, 0.0]);
        let s = jacobi(&m);
        assert!((s.sigma[0] - 4.0).abs() < 1e-15 && (s.sigma[1] - 3.0).abs() < 1e-15);
        assert!(accurate(&m, &s));
    }

    #[test]
    fn wide_input_is_transposed() {
        let m = Matrix::from_row_slice(1, 3, &[1.0, 2.0, 2.0]);
        let s = svd(&m);
        assert_eq!(s.v.shape(), (3, 1));
        assert!((s.sigma[0] - 3.0).abs() < 1e-14);
    }
}
