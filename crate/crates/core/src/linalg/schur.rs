//! Real Schur factorization `A = Q T Qᵀ` and reordering of its diagonal blocks.

use serde::{Deserialize, Serialize};

use super::{sylvester::small_sylvester_with_condition, Matrix};
use crate::error::{Error, Result};

/// One diagonal block of a quasi-upper-triangular matrix. Two-by-two blocks
/// carry a complex-conjugate pair `re ± i·im` with `im > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurBlock {
    pub offset: usize,
    pub size: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSchurForm {
    pub q: Matrix,
    pub t: Matrix,
    pub blocks: Vec<SchurBlock>,
}

impl RealSchurForm {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Eigenvalues as `(re, im)` pairs, conjugates listed explicitly.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            if b.size == 1 {
                out.push((b.re, 0.0));
            } else {
                out.push((b.re, b.im));
                out.push((b.re, -b.im));
            }
        }
        out
    }

    /// `Q T Qᵀ`.
    pub fn reassemble(&self) -> Matrix {
        &self.q * &self.t * self.q.transpose()
    }
}

const EPS: f64 = f64::EPSILON;
const SAFE_MIN: f64 = f64::MIN_POSITIVE;

/// Householder reflector `I - beta v vᵀ` mapping `x` onto a multiple of e₁.
fn reflector(x: &[f64]) -> ([f64; 3], f64) {
    let mut v = [0.0; 3];
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (v, 0.0);
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    v[..x.len()].copy_from_slice(x);
    v[0] -= alpha;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if vv == 0.0 {
        return (v, 0.0);
    }
    (v, 2.0 / vv)
}

/// Apply the reflector from the left to rows `r0..r0+len`, columns `cols`.
fn apply_left(m: &mut Matrix, v: &[f64], beta: f64, r0: usize, cols: std::ops::Range<usize>) {
    if beta == 0.0 {
        return;
    }
    for j in cols {
        let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * m[(r0 + i, j)]).sum();
        for (i, vi) in v.iter().enumerate() {
            m[(r0 + i, j)] -= beta * s * vi;
        }
    }
}

/// Apply the reflector from the right to columns `c0..c0+len`, rows `rows`.
fn apply_right(m: &mut Matrix, v: &[f64], beta: f64, c0: usize, rows: std::ops::Range<usize>) {
    if beta == 0.0 {
        return;
    }
    for i in rows {
        let s: f64 = v.iter().enumerate().map(|(j, vj)| vj * m[(i, c0 + j)]).sum();
        for (j, vj) in v.iter().enumerate() {
            m[(i, c0 + j)] -= beta * s * vj;
        }
    }
}

fn hessenberg(h: &mut Matrix, q: &mut Matrix) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let tail = (k + 2..n).map(|i| h[(i, k)].abs()).fold(0.0, f64::max);
        if tail == 0.0 {
            continue;
        }
        let x: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|a| a * a).sum::<f64>();
        apply_left(h, &v, beta, k + 1, k..n);
        apply_right(h, &v, beta, k + 1, 0..n);
        apply_right(q, &v, beta, k + 1, 0..n);
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Rotate a 2x2 diagonal block with real eigenvalues into upper-triangular
/// form. Returns false (and leaves the block alone) for a complex pair.
fn split_real_pair(h: &mut Matrix, q: &mut Matrix, i: usize) -> bool {
    let n = h.nrows();
    let (a, b, c, d) = (h[(i, i)], h[(i, i + 1)], h[(i + 1, i)], h[(i + 1, i + 1)]);
    if c == 0.0 {
        return true;
    }
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    if disc < 0.0 {
        return false;
    }
    let mean = 0.5 * (a + d);
    let root = disc.sqrt();
    let lambda = if p >= 0.0 { mean + root } else { mean - root };
    // Eigenvector of the block for `lambda`, whichever representation is larger.
    let (v1, v2) = {
        let (x1, y1) = (b, lambda - a);
        let (x2, y2) = (lambda - d, c);
        if x1.hypot(y1) >= x2.hypot(y2) {
            (x1, y1)
        } else {
            (x2, y2)
        }
    };
    let r = v1.hypot(v2);
    if r == 0.0 {
        return true;
    }
    let (cs, sn) = (v1 / r, v2 / r);
    // G = [[cs, -sn], [sn, cs]]; T <- Gᵀ T G.
    for j in i..n {
        let (x, y) = (h[(i, j)], h[(i + 1, j)]);
        h[(i, j)] = cs * x + sn * y;
        h[(i + 1, j)] = -sn * x + cs * y;
    }
    for r in 0..n {
        let (x, y) = (h[(r, i)], h[(r, i + 1)]);
        h[(r, i)] = cs * x + sn * y;
        h[(r, i + 1)] = -sn * x + cs * y;
        let (x, y) = (q[(r, i)], q[(r, i + 1)]);
        q[(r, i)] = cs * x + sn * y;
        q[(r, i + 1)] = -sn * x + cs * y;
    }
    h[(i + 1, i)] = 0.0;
    true
}

/// Small-subdiagonal test with the Ahues–Kressner refinement. Anything below
/// `ε‖H‖` also counts: dropping it is within the backward error already
/// committed, and without it a near-multiple of the identity can stall the
/// iteration (its shifts carry no information).
fn negligible_subdiagonal(h: &Matrix, k: usize, lo: usize, hi: usize, hnorm: f64) -> bool {
    let sub = h[(k, k - 1)].abs();
    if sub <= SAFE_MIN.max(EPS * hnorm) {
        return true;
    }
    let mut tst = h[(k - 1, k - 1)].abs() + h[(k, k)].abs();
    if tst == 0.0 {
        if k >= lo + 2 {
            tst += h[(k - 1, k - 2)].abs();
        }
        if k < hi {
            tst += h[(k + 1, k)].abs();
        }
    }
    if sub > EPS * tst {
        return false;
    }
    let sup = h[(k - 1, k)].abs();
    let ab = sub.max(sup);
    let ba = sub.min(sup);
    let diff = (h[(k - 1, k - 1)] - h[(k, k)]).abs();
    let aa = h[(k, k)].abs().max(diff);
    let bb = h[(k, k)].abs().min(diff);
    let s = aa + ab;
    ba * (ab / s) <= SAFE_MIN.max(EPS * (bb * (aa / s)))
}

fn francis_qr(h: &mut Matrix, q: &mut Matrix) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let cap = 40 * n;
    let hnorm = h.norm();
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    loop {
        // Locate the start of the unreduced window ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            if negligible_subdiagonal(h, lo, 0, hi, hnorm) {
                h[(lo, lo - 1)] = 0.0;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            its = 0;
            continue;
        }
        if lo + 1 == hi {
            split_real_pair(h, q, lo);
            if hi < 2 {
                break;
            }
            hi -= 2;
            its = 0;
            continue;
        }

        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::NonConvergence { n, cap });
        }

        let m = hi;
        let (mut s, mut t);
        if its % 10 == 0 {
            let w = h[(m, m - 1)].abs() + h[(m - 1, m - 2)].abs();
            let h11 = 0.75 * w + h[(m, m)];
            let h12 = -0.4375 * w;
            s = 2.0 * h11;
            t = h11 * h11 - h12 * w;
        } else {
            s = h[(m - 1, m - 1)] + h[(m, m)];
            t = h[(m - 1, m - 1)] * h[(m, m)] - h[(m - 1, m)] * h[(m, m - 1)];
        }
        if !s.is_finite() || !t.is_finite() {
            s = 0.0;
            t = 0.0;
        }

        let mut x = h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - s * h[(lo, lo)] + t;
        let mut y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - s);
        let mut z = h[(lo + 1, lo)] * h[(lo + 2, lo + 1)];
        for k in lo..=hi - 2 {
            let (v, beta) = reflector(&[x, y, z]);
            let c0 = if k > lo { k - 1 } else { lo };
            apply_left(h, &v, beta, k, c0..n);
            let r1 = (k + 3).min(hi);
            apply_right(h, &v, beta, k, 0..r1 + 1);
            apply_right(q, &v, beta, k, 0..n);
            if k > lo {
                h[(k + 1, k - 1)] = 0.0;
                h[(k + 2, k - 1)] = 0.0;
            }
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            if k + 3 <= hi {
                z = h[(k + 3, k)];
            }
        }
        let (v, beta) = reflector(&[x, y]);
        let v2 = &v[..2];
        apply_left(h, v2, beta, hi - 1, (hi - 2)..n);
        apply_right(h, v2, beta, hi - 1, 0..hi + 1);
        apply_right(q, v2, beta, hi - 1, 0..n);
        h[(hi, hi - 2)] = 0.0;
    }
    Ok(())
}

fn block_of(t: &Matrix, offset: usize, size: usize) -> SchurBlock {
    if size == 1 {
        return SchurBlock { offset, size, re: t[(offset, offset)], im: 0.0 };
    }
    let (a, b, c, d) = (t[(offset, offset)], t[(offset, offset + 1)], t[(offset + 1, offset)], t[(offset + 1, offset + 1)]);
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    SchurBlock { offset, size, re: 0.5 * (a + d), im: (-disc).max(0.0).sqrt() }
}

fn scan_blocks(t: &Matrix) -> Vec<SchurBlock> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        blocks.push(block_of(t, i, size));
        i += size;
    }
    blocks
}

/// Clear everything below the block structure.
fn clean_lower(t: &mut Matrix, blocks: &[SchurBlock]) {
    let n = t.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let inside = blocks.iter().any(|b| b.size == 2 && i == b.offset + 1 && j == b.offset);
            if !inside {
                t[(i, j)] = 0.0;
            }
        }
    }
}

/// Real Schur form via Householder–Hessenberg reduction and Francis double-shift QR.
pub fn real_schur(a: &Matrix) -> Result<RealSchurForm> {
    if !a.is_square() {
        return Err(Error::Shape(format!("real_schur needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if !super::is_finite(a) {
        return Err(Error::Value("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    let mut t = a.clone();
    let mut q = Matrix::identity(n, n);
    hessenberg(&mut t, &mut q);
    francis_qr(&mut t, &mut q)?;
    let blocks = scan_blocks(&t);
    clean_lower(&mut t, &blocks);
    Ok(RealSchurForm { q, t, blocks })
}

/// Largest accepted condition number for an adjacent block exchange.
pub(crate) fn swap_condition_cap() -> f64 {
    1.0 / EPS.sqrt()
}

/// Exchange the adjacent diagonal blocks starting at `j` (sizes `n1`, `n2`).
/// Exchange the adjacent diagonal blocks of sizes `n1` and `n2` at `j`.
/// Returns, for each block in its new position, whether a 2x2 block came out
/// with real eigenvalues and was split into two 1x1 blocks.
fn swap_adjacent(t: &mut Matrix, q: &mut Matrix, j: usize, n1: usize, n2: usize) -> Result<[bool; 2]> {
    let m = n1 + n2;
    let t11 = t.view((j, j), (n1, n1)).into_owned();
    let t22 = t.view((j + n1, j + n1), (n2, n2)).into_owned();
    let t12 = t.view((j, j + n1), (n1, n2)).into_owned();
    let cap = swap_condition_cap();
    // T11 X - X T22 = T12
    let (x, condition) = small_sylvester_with_condition(&t22, &t11, &t12);
    if !(condition <= cap) {
        return Err(Error::SwapIllConditioned { condition, cap });
    }
    let mut basis = Matrix::zeros(m, m);
    basis.view_mut((0, 0), (n1, n2)).copy_from(&(-x));
    basis.view_mut((n1, 0), (n2, n2)).fill_with_identity();
    for k in 0..n1 {
        basis[(k, n2 + k)] = 1.0;
    }
    let g = basis.qr().q();

    let dnorm = t.view((j, j), (m, m)).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rows = t.rows(j, m).into_owned();
    t.rows_mut(j, m).copy_from(&(g.transpose() * rows));
    let cols = t.columns(j, m).into_owned();
    t.columns_mut(j, m).copy_from(&(cols * &g));
    let qcols = q.columns(j, m).into_owned();
    q.columns_mut(j, m).copy_from(&(qcols * &g));

    let residual = t.view((j + n2, j), (n1, n2)).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let thresh = (10.0 * EPS * dnorm).max(SAFE_MIN);
    if residual > thresh {
        return Err(Error::SwapIllConditioned { condition: residual / (EPS * dnorm.max(SAFE_MIN)), cap });
    }
    t.view_mut((j + n2, j), (n1, n2)).fill(0.0);
    // A 2x2 block holding a nearly defective real pair may come out of the
    // exchange with real eigenvalues; it is then triangularized in place.
    let mut split = [false; 2];
    for (k, (off, size)) in [(j, n2), (j + n2, n1)].into_iter().enumerate() {
        if size == 2 && split_real_pair(t, q, off) {
            t[(off + 1, off)] = 0.0;
            split[k] = true;
        }
    }
    Ok(split)
}

/// Stable sort of the diagonal blocks by `key_of` using adjacent exchanges.
pub fn reorder_schur<K, F>(s: &RealSchurForm, key_of: F) -> Result<RealSchurForm>
where
    K: PartialOrd + Clone,
    F: Fn(&SchurBlock) -> K,
{
    let mut t = s.t.clone();
    let mut q = s.q.clone();
    let mut keyed: Vec<(K, SchurBlock)> = s.blocks.iter().map(|b| (key_of(b), *b)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..keyed.len().saturating_sub(1) {
            if keyed[i + 1].0 < keyed[i].0 {
                let (a, b) = (keyed[i].1, keyed[i + 1].1);
                let split = swap_adjacent(&mut t, &mut q, a.offset, a.size, b.size)?;
                keyed.swap(i, i + 1);
                let first = a.offset;
                let pieces = |off: usize, size: usize, split: bool| {
                    if split {
                        vec![block_of(&t, off, 1), block_of(&t, off + 1, 1)]
                    } else {
                        vec![block_of(&t, off, size)]
                    }
                };
                let lead = pieces(first, b.size, split[0]);
                let trail = pieces(first + b.size, a.size, split[1]);
                let (kb, ka) = (keyed[i].0.clone(), keyed[i + 1].0.clone());
                let replacement: Vec<(K, SchurBlock)> = lead
                    .into_iter()
                    .map(|blk| (kb.clone(), blk))
                    .chain(trail.into_iter().map(|blk| (ka.clone(), blk)))
                    .collect();
                keyed.splice(i..i + 2, replacement);
                changed = true;
                break;
            }
        }
    }
    let blocks: Vec<SchurBlock> = keyed.into_iter().map(|(_, b)| b).collect();
    clean_lower(&mut t, &blocks);
    Ok(RealSchurForm { q, t, blocks })
}
