//! Canonical forms up to linear and topological equivalence.

use serde::{Deserialize, Serialize};

use crate::equivalence::linear_equivalent;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, hcat, norm2, real_schur, Matrix, ToleranceConfig};
use crate::observability::{
    kalman_decompose_with_reference, observability_info_with_reference, split_scale, RankScale, sub_ranks,
};
use crate::spectral::spectral_split;
use crate::system::ObservedSystem;

/// Diagonal `diag(+1 × d_plus, −1 × d_minus)`.
pub fn ehat(d_plus: usize, d_minus: usize) -> Matrix {
    let d = d_plus + d_minus;
    Matrix::from_fn(d, d, |i, j| match (i == j, i < d_plus) {
        (false, _) => 0.0,
        (true, true) => 1.0,
        (true, false) => -1.0,
    })
}

/// Observable canonical pair `Â = T A T⁻¹`, `Ĉ = C T⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableCanonical {
    pub a: Matrix,
    pub c: Matrix,
    /// Rows are the selected rows `cᵢAʲ` of the observability matrix, grouped by output.
    pub transform: Matrix,
    /// Observability index of each output.
    pub indices: Vec<usize>,
}

/// Luenberger echelon form. Rows `c₁, …, c_p, c₁A, …, c_pA, …` are scanned in
/// order and kept when independent of those already kept; once `cᵢAʲ` is
/// dependent, output `i` drops out of the scan.
pub fn observable_canonical_mimo(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<ObservableCanonical> {
    observable_canonical_with_reference(sys, RankScale::default(), cfg)
}

/// Rows whose size is noise next to `‖C‖₂` (first level) or `‖A‖₂` (later
/// levels, rows normalized), widened by `reference`, never count.
fn observable_canonical_with_reference(
    sys: &ObservedSystem,
    reference: RankScale,
    cfg: &ToleranceConfig,
) -> Result<ObservableCanonical> {
    let (n, p) = (sys.n(), sys.p());
    let rank = observability_info_with_reference(sys, reference, cfg).k_obs;
    if rank < n {
        return Err(Error::NotObservable { rank, n });
    }
    let a = sys.a();
    let threshold = 1e2 * n.max(1) as f64 * cfg.tol_rank;
    let a_floor = norm2(a).max(reference.a);
    let c_floor = norm2(sys.c()).max(reference.c);

    // Scanned rows are kept at unit length: rescaling a row does not change
    // which rows are independent, and it keeps powers of A from decaying or
    // overflowing.
    let mut current: Vec<Matrix> = (0..p).map(|i| sys.c().rows(i, 1).into_owned()).collect();
    let mut floor = c_floor;
    let mut active = vec![true; p];
    let mut indices = vec![0usize; p];
    let mut ortho: Vec<Matrix> = Vec::with_capacity(n);
    let mut found = 0;
    'scan: for _ in 0..n {
        for i in 0..p {
            if !active[i] {
                continue;
            }
            let size = current[i].norm();
            if size == 0.0 || size <= threshold * floor {
                active[i] = false;
                continue;
            }
            current[i] /= size;
            let mut res = current[i].clone();
            for _ in 0..2 {
                for q in &ortho {
                    let proj = res.dot(q);
                    res -= q * proj;
                }
            }
            if res.norm() <= threshold {
                active[i] = false;
                continue;
            }
            let len = res.norm();
            ortho.push(res / len);
            indices[i] += 1;
            found += 1;
            if found == n {
                break 'scan;
            }
        }
        for (i, row) in current.iter_mut().enumerate() {
            if active[i] {
                *row = &*row * a;
            }
        }
        floor = a_floor;
    }
    if found < n {
        return Err(Error::NotObservable { rank: found, n });
    }

    let mut t = Matrix::zeros(n, n);
    let mut r = 0;
    for (i, &nu) in indices.iter().enumerate() {
        let mut row = sys.c().rows(i, 1).into_owned();
        for _ in 0..nu {
            t.set_row(r, &row.row(0));
            row = &row * a;
            r += 1;
        }
    }
    let lu = t.transpose().lu();
    let a_hat = lu
        .solve(&(&t * a).transpose())
        .ok_or(Error::NotObservable { rank: found, n })?
        .transpose();
    let c_hat = lu.solve(&sys.c().transpose()).ok_or(Error::NotObservable { rank: found, n })?.transpose();
    let (mut a_hat, mut c_hat) = (a_hat, c_hat);

    // Structural entries are exact by construction; remove rounding noise.
    let mut offset = 0;
    for (i, &nu) in indices.iter().enumerate() {
        if nu > 0 {
            c_hat.row_mut(i).fill(0.0);
            c_hat[(i, offset)] = 1.0;
        }
        for j in 0..nu.saturating_sub(1) {
            let row = offset + j;
            a_hat.row_mut(row).fill(0.0);
            a_hat[(row, row + 1)] = 1.0;
        }
        offset += nu;
    }
    Ok(ObservableCanonical { a: a_hat, c: c_hat, transform: t, indices })
}

/// Companion form with ones on the superdiagonal, last row `[μ_n … μ₁]`
/// and `Ĉ = [1 0 … 0]`.
pub fn observable_canonical_siso(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<ObservableCanonical> {
    if sys.p() != 1 {
        return Err(Error::NotSiso { p: sys.p() });
    }
    observable_canonical_mimo(sys, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedBlock {
    pub lhat: Matrix,
    pub that: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub nhat: Matrix,
    pub khat: Matrix,
    pub bhat: Matrix,
    pub dhat: Matrix,
    pub ehat: Matrix,
    pub assembled_a: Matrix,
    pub assembled_c: Matrix,
    /// False when the center pair is not completely observable and `(N̂, K̂)`
    /// is only a representative.
    pub center_is_canonical: bool,
    /// Set by [`merged_observable_canonical`]; the assembled pair is then
    /// `blockdiag(L̂, Ê)`, `[T̂ 0]`.
    pub merged: Option<MergedBlock>,
}

impl CanonicalForm {
    pub fn assembled(&self) -> Result<ObservedSystem> {
        ObservedSystem::new(self.assembled_a.clone(), self.assembled_c.clone())
    }
}

fn canonical_or_empty(sys: &ObservedSystem, reference: RankScale, cfg: &ToleranceConfig) -> Result<(Matrix, Matrix)> {
    if sys.n() == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(sys.p(), 0)));
    }
    let form = observable_canonical_with_reference(sys, reference, cfg)?;
    Ok((form.a, form.c))
}

pub fn topological_canonical(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<CanonicalForm> {
    let p = sys.p();
    // Step 1: center vs hyperbolic.
    let split = spectral_split(sys, cfg)?;
    let ranks = sub_ranks(sys, &split, cfg)?;
    let counts = split.counts;
    let reference = split_scale(&split);

    // Step 2: observable part of the hyperbolic subsystem.
    let hyperbolic = split.hyperbolic()?;
    let decomposition = kalman_decompose_with_reference(&hyperbolic, reference, cfg);
    let k = ranks.k_plus + ranks.k_minus;
    if decomposition.k != k {
        return Err(Error::AdditivityViolation {
            k0: ranks.k0,
            k_plus: ranks.k_plus,
            k_minus: ranks.k_minus,
            k_obs: decomposition.k + ranks.k0,
        });
    }

    // Step 3: unobservable hyperbolic dynamics collapse to ±1.
    let e = ehat(counts.n_plus - ranks.k_plus, counts.n_minus - ranks.k_minus);

    // Step 4: canonical blocks.
    let (bhat, dhat) = canonical_or_empty(&decomposition.observable_part()?, reference, cfg)?;
    let center = split.center()?;
    let center_is_canonical = counts.n0 == 0 || ranks.k0 == counts.n0;
    let (nhat, khat) = if center_is_canonical {
        canonical_or_empty(&center, reference, cfg)?
    } else {
        let schur = real_schur(center.a())?;
        (schur.t.clone(), center.c() * &schur.q)
    };

    let assembled_a = block_diag(&[&nhat, &bhat, &e]);
    let assembled_c = hcat(p, &[&khat, &dhat, &Matrix::zeros(p, e.nrows())]);
    Ok(CanonicalForm {
        nhat,
        khat,
        bhat,
        dhat,
        ehat: e,
        assembled_a,
        assembled_c,
        center_is_canonical,
        merged: None,
    })
}

/// Canonical form with the center and the observable hyperbolic blocks merged
/// into one observable canonical pair `(L̂, T̂)`. Requires `k⁰ = n⁰`.
pub fn merged_observable_canonical(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<CanonicalForm> {
    let split = spectral_split(sys, cfg)?;
    let ranks = sub_ranks(sys, &split, cfg)?;
    if ranks.k0 < split.counts.n0 {
        return Err(Error::CenterNotObservable { k0: ranks.k0, n0: split.counts.n0 });
    }
    let mut form = topological_canonical(sys, cfg)?;
    let p = sys.p();
    let reference = split_scale(&split);
    let hyperbolic_obs = kalman_decompose_with_reference(&split.hyperbolic()?, reference, cfg);
    let combined = ObservedSystem::new(
        block_diag(&[&split.a0, &hyperbolic_obs.ao]),
        hcat(p, &[&split.c0, &hyperbolic_obs.co]),
    )?;
    let (lhat, that) = canonical_or_empty(&combined, reference, cfg)?;
    form.assembled_a = block_diag(&[&lhat, &form.ehat]);
    form.assembled_c = hcat(p, &[&that, &Matrix::zeros(p, form.ehat.nrows())]);
    form.merged = Some(MergedBlock { lhat, that });
    Ok(form)
}

/// One family of the 3-dimensional single-output catalog with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog3DEntry {
    /// `center-1` … `center-13`, or `3=0+3+0`, `3=0+2+1`, `3=0+1+2`, `3=0+0+3`.
    pub family: String,
    /// Real parameters: `μ` for the rotation centers, `(μ₁, μ₂, μ₃)`, `(μ₁, μ₂)` or `μ`.
    pub mu: Vec<f64>,
    /// Signs `ι`, in non-increasing order.
    pub iota: Vec<i8>,
}

const ZERO: [[f64; 3]; 3] = [[0.0; 3]; 3];
const SHIFT1: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
const SHIFT2: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

/// Center catalog in listed order; entries 10–13 carry `μ`.
fn center_entry(index: usize, mu: f64) -> ([[f64; 3]; 3], [f64; 3]) {
    let rot = [[0.0, 1.0, 0.0], [mu, 0.0, 0.0], [0.0, 0.0, 0.0]];
    match index {
        1 => (ZERO, [0.0, 0.0, 0.0]),
        2 => (ZERO, [0.0, 0.0, 1.0]),
        3 => (SHIFT1, [0.0, 0.0, 0.0]),
        4 => (SHIFT1, [0.0, 1.0, 0.0]),
        5 => (SHIFT1, [0.0, 0.0, 1.0]),
        6 => (SHIFT2, [0.0, 0.0, 0.0]),
        7 => (SHIFT2, [1.0, 0.0, 0.0]),
        8 => (SHIFT2, [0.0, 1.0, 0.0]),
        9 => (SHIFT2, [0.0, 0.0, 1.0]),
        10 => (rot, [0.0, 0.0, 0.0]),
        11 => (rot, [0.0, 1.0, 0.0]),
        12 => (rot, [0.0, 0.0, 1.0]),
        13 => (rot, [0.0, 1.0, 1.0]),
        _ => unreachable!("center catalog has 13 entries"),
    }
}

pub const CENTER_FAMILIES: usize = 13;
pub const HYPERBOLIC_FAMILIES: [&str; 4] = ["3=0+3+0", "3=0+2+1", "3=0+1+2", "3=0+0+3"];

fn system3(a: [[f64; 3]; 3], c: [f64; 3]) -> ObservedSystem {
    let a = Matrix::from_fn(3, 3, |i, j| a[i][j]);
    let c = Matrix::from_row_slice(1, 3, &c);
    ObservedSystem::new(a, c).expect("catalog entries are valid")
}

impl Catalog3DEntry {
    /// The canonical representative `(A, C)` of this family and parameter set.
    pub fn representative(&self) -> Result<ObservedSystem> {
        let bad = || Error::Value(format!("invalid catalog entry {self:?}"));
        let iota = |i: usize| self.iota.get(i).map(|&s| s as f64).ok_or_else(bad);
        let mu = |i: usize| self.mu.get(i).copied().ok_or_else(bad);
        let e1 = [1.0, 0.0, 0.0];
        if let Some(index) = self.family.strip_prefix("center-") {
            let index: usize = index.parse().map_err(|_| bad())?;
            if !(1..=CENTER_FAMILIES).contains(&index) {
                return Err(bad());
            }
            let m = if index >= 10 { mu(0)? } else { 0.0 };
            let (a, c) = center_entry(index, m);
            return Ok(system3(a, c));
        }
        match self.family.as_str() {
            "3=0+3+0" => Ok(system3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [mu(2)?, mu(1)?, mu(0)?]], e1)),
            "3=0+2+1" => Ok(system3([[0.0, 1.0, 0.0], [mu(1)?, mu(0)?, 0.0], [0.0, 0.0, iota(0)?]], e1)),
            "3=0+1+2" => Ok(system3([[mu(0)?, 0.0, 0.0], [0.0, iota(0)?, 0.0], [0.0, 0.0, iota(1)?]], e1)),
            "3=0+0+3" => Ok(system3(
                [[iota(0)?, 0.0, 0.0], [0.0, iota(1)?, 0.0], [0.0, 0.0, iota(2)?]],
                [0.0, 0.0, 0.0],
            )),
            _ => Err(bad()),
        }
    }
}

fn signs(e: &Matrix) -> Vec<i8> {
    (0..e.nrows()).map(|i| if e[(i, i)] > 0.0 { 1 } else { -1 }).collect()
}

/// Place a 3-dimensional single-output system in the catalog.
pub fn classify_3d_siso(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<Catalog3DEntry> {
    if sys.n() != 3 {
        return Err(Error::DimensionMismatch(format!("catalog covers n = 3, got n = {}", sys.n())));
    }
    if sys.p() != 1 {
        return Err(Error::NotSiso { p: sys.p() });
    }
    let split = spectral_split(sys, cfg)?;
    let n0 = split.counts.n0;
    if n0 == 3 {
        return classify_center(sys, cfg);
    }
    if n0 != 0 {
        return Err(Error::MixedSpectrum { n0 });
    }
    let form = topological_canonical(sys, cfg)?;
    let b = &form.bhat;
    let (family, mu) = match b.nrows() {
        3 => (HYPERBOLIC_FAMILIES[0], vec![b[(2, 2)], b[(2, 1)], b[(2, 0)]]),
        2 => (HYPERBOLIC_FAMILIES[1], vec![b[(1, 1)], b[(1, 0)]]),
        1 => (HYPERBOLIC_FAMILIES[2], vec![b[(0, 0)]]),
        _ => (HYPERBOLIC_FAMILIES[3], vec![]),
    };
    Ok(Catalog3DEntry { family: family.to_string(), mu, iota: signs(&form.ehat) })
}

fn classify_center(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<Catalog3DEntry> {
    // For [[0,1],[μ,0]] ⊕ 0 the trace of A² is 2μ, and it is a similarity invariant.
    let a = sys.a();
    let mu = (a * a).trace() / 2.0;
    let rotation = mu < -cfg.spec_threshold(norm2(a).powi(2));
    for index in 1..=CENTER_FAMILIES {
        let uses_mu = index >= 10;
        if uses_mu != rotation {
            continue;
        }
        let (ra, rc) = center_entry(index, mu);
        let candidate = system3(ra, rc);
        if linear_equivalent(sys, &candidate, cfg)?.equivalent {
            return Ok(Catalog3DEntry {
                family: format!("center-{index}"),
                mu: if uses_mu { vec![mu] } else { vec![] },
                iota: vec![],
            });
        }
    }
    Err(Error::NotInCatalog)
}
