#![allow(dead_code)]

use lticlass::linalg::{block_diag, singular_values, Matrix, Vector};
use lticlass::ObservedSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i32) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound) as f64)
}

pub fn condition(m: &Matrix) -> f64 {
    let s = singular_values(m);
    s[0] / s[s.len() - 1]
}

/// Random similarity `I + noise` with condition number at most `max_cond`.
pub fn well_conditioned(rng: &mut ChaCha8Rng, n: usize, max_cond: f64) -> Matrix {
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    loop {
        let r = Matrix::identity(n, n) + random_matrix(rng, n, n, 0.8);
        if condition(&r) <= max_cond {
            return r;
        }
    }
}

pub fn conjugate(sys: &ObservedSystem, r: &Matrix) -> ObservedSystem {
    sys.transformed(r).expect("nonsingular similarity")
}

/// Lower Jordan block: `λ` on the diagonal, ones on the subdiagonal.
pub fn lower_jordan(n: usize, lambda: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            lambda
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn row(v: &[f64]) -> Matrix {
    Matrix::from_row_slice(1, v.len(), v)
}

pub fn sys(a: Matrix, c: Matrix) -> ObservedSystem {
    ObservedSystem::new(a, c).unwrap()
}

/// Which spectral classes a generated block may come from.
#[derive(Clone, Copy)]
pub struct Mix {
    pub center: bool,
    pub hyperbolic: bool,
}

pub const ANY: Mix = Mix { center: true, hyperbolic: true };
pub const HYPERBOLIC: Mix = Mix { center: false, hyperbolic: true };
pub const CENTER: Mix = Mix { center: true, hyperbolic: false };

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn random_block(rng: &mut ChaCha8Rng, mix: Mix, room: usize) -> Matrix {
    loop {
        let kind = rng.random_range(0..6);
        let center = matches!(kind, 3 | 4 | 5);
        if (center && !mix.center) || (!center && !mix.hyperbolic) {
            continue;
        }
        let size = match kind {
            0 | 3 => 1,
            _ => 2,
        };
        if size > room {
            continue;
        }
        return match kind {
            // real hyperbolic eigenvalue
            0 => Matrix::from_element(1, 1, sign(rng) * rng.random_range(0.5..3.0)),
            // hyperbolic complex pair
            1 => {
                let (a, b) = (sign(rng) * rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
                Matrix::from_row_slice(2, 2, &[a, b, -b, a])
            }
            // hyperbolic Jordan block
            2 => lower_jordan(2, sign(rng) * rng.random_range(0.5..2.0)),
            // zero eigenvalue
            3 => Matrix::zeros(1, 1),
            // rotation
            4 => {
                let b = rng.random_range(0.5..2.0);
                Matrix::from_row_slice(2, 2, &[0.0, b, -b, 0.0])
            }
            // nilpotent Jordan block
            _ => lower_jordan(2, 0.0),
        };
    }
}

/// Block-diagonal system with random blocks; each block is left unobserved
/// with probability `hide`. Returned before any similarity is applied.
pub fn block_system(rng: &mut ChaCha8Rng, n: usize, p: usize, mix: Mix, hide: f64) -> ObservedSystem {
    let mut blocks = Vec::new();
    let mut used = 0;
    while used < n {
        let b = random_block(rng, mix, n - used);
        used += b.nrows();
        blocks.push(b);
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    let a = block_diag(&refs);
    let mut c = random_int_matrix(rng, p, n, 2);
    let mut col = 0;
    for b in &blocks {
        if rng.random_bool(hide) {
            for j in col..col + b.nrows() {
                c.column_mut(j).fill(0.0);
            }
        }
        col += b.nrows();
    }
    sys(a, c)
}

/// `block_system` conjugated by a random well-conditioned similarity.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, p: usize, mix: Mix, hide: f64) -> ObservedSystem {
    let s = block_system(rng, n, p, mix, hide);
    let r = well_conditioned(rng, n, 20.0);
    conjugate(&s, &r)
}

// ---- independent oracles -------------------------------------------------

/// Solve `S₂X − XS₁ = Q` by an explicit Kronecker system (row-major vec).
pub fn kronecker_sylvester(s1: &Matrix, s2: &Matrix, q: &Matrix) -> Matrix {
    let (m1, m2) = (s1.nrows(), s2.nrows());
    let dim = m1 * m2;
    // unknown index: X[i][j] -> i * m1 + j
    let mut k = Matrix::zeros(dim, dim);
    let mut rhs = Vector::zeros(dim);
    for i in 0..m2 {
        for j in 0..m1 {
            let eq = i * m1 + j;
            rhs[eq] = q[(i, j)];
            for l in 0..m2 {
                k[(eq, l * m1 + j)] += s2[(i, l)];
            }
            for l in 0..m1 {
                k[(eq, i * m1 + l)] -= s1[(l, j)];
            }
        }
    }
    let x = k.full_piv_lu().solve(&rhs).expect("nonsingular Kronecker system");
    Matrix::from_fn(m2, m1, |i, j| x[i * m1 + j])
}

/// Truncated Taylor series; only meant for small norms.
pub fn taylor_expm(a: &Matrix, terms: usize) -> Matrix {
    let n = a.nrows();
    let mut sum = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=terms {
        term = &term * a / k as f64;
        sum += &term;
    }
    sum
}

/// Classical RK4 with step doubling, integrating `ẋ = Ax` to each requested time.
pub fn rk4_trajectory(a: &Matrix, x0: &Vector, times: &[f64], tol: f64) -> Vec<Vector> {
    let step = |x: &Vector, h: f64| {
        let k1 = a * x;
        let k2 = a * (x + &k1 * (h / 2.0));
        let k3 = a * (x + &k2 * (h / 2.0));
        let k4 = a * (x + &k3 * h);
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut x, mut h) = (0.0f64, x0.clone(), 1e-2f64);
    for &target in times {
        while t < target {
            let hh = h.min(target - t);
            let full = step(&x, hh);
            let half = step(&step(&x, hh / 2.0), hh / 2.0);
            let err = (&full - &half).amax() / 15.0;
            if err <= tol * (1.0 + half.amax()) || hh < 1e-9 {
                // Richardson extrapolation of the two estimates.
                x = &half + (&half - &full) / 15.0;
                t += hh;
                if err < tol * 1e-2 {
                    h = (hh * 2.0).min(0.1);
                }
            } else {
                h = hh / 2.0;
            }
        }
        out.push(x.clone());
    }
    out
}

/// Naive observability stack by repeated multiplication, row by row.
pub fn naive_observability(a: &Matrix, c: &Matrix) -> Matrix {
    let (n, p) = (a.nrows(), c.nrows());
    let mut out = Matrix::zeros(n * p, n);
    for k in 0..n {
        for i in 0..p {
            let mut r: Vec<f64> = c.row(i).iter().copied().collect();
            for _ in 0..k {
                r = (0..n).map(|j| (0..n).map(|l| r[l] * a[(l, j)]).sum()).collect();
            }
            for j in 0..n {
                out[(k * p + i, j)] = r[j];
            }
        }
    }
    out
}
