//! Kalman observability: stacked matrix, rank, sub-ranks and decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, rank_cutoff, sorted_svd, svd, Matrix, ToleranceConfig, Vector};
use crate::spectral::SpectralSplit;
use crate::system::ObservedSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityInfo {
    /// `[C; CA; …; CA^{n−1}]`.
    pub obs_matrix: Matrix,
    pub k_obs: usize,
    /// Orthonormal basis of the observable row space, as columns (`n × k_obs`).
    pub obs_basis: Matrix,
}

/// `T⁻¹AT = [[Ao, 0], [Am, Au]]`, `CT = [Co 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityDecomposition {
    pub t: Matrix,
    pub ao: Matrix,
    pub am: Matrix,
    pub au: Matrix,
    pub co: Matrix,
    pub k: usize,
}

impl ObservabilityDecomposition {
    pub fn observable_part(&self) -> Result<ObservedSystem> {
        ObservedSystem::new(self.ao.clone(), self.co.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubRanks {
    pub k0: usize,
    pub k_plus: usize,
    pub k_minus: usize,
}

fn stack(a: &Matrix, c: &Matrix) -> Matrix {
    let (n, p) = (a.nrows(), c.nrows());
    let mut out = Matrix::zeros(p * n, n);
    let mut row = c.clone();
    for k in 0..n {
        out.view_mut((k * p, 0), (p, n)).copy_from(&row);
        if k + 1 < n {
            row = &row * a;
        }
    }
    out
}

pub fn observability_matrix(sys: &ObservedSystem) -> Matrix {
    stack(sys.a(), sys.c())
}

/// Scales that rank decisions are measured against. A subsystem cut out of a
/// larger system passes the sizes of the whole system here, so that blocks of
/// rounding noise are not mistaken for observed directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankScale {
    pub a: f64,
    pub c: f64,
}

/// Rank and row-space basis, computed by an orthogonal staircase: the rows of
/// `C` are orthonormalized, then the newest orthonormal rows are multiplied by
/// `A` and reduced against everything found so far. Each step only decides
/// rank on rows of size `‖A‖`, so a large `‖A‖` relative to the spectrum does
/// not push slow modes under the cutoff the way the raw powers `CAᵏ` would.
pub fn observability_info(sys: &ObservedSystem, cfg: &ToleranceConfig) -> ObservabilityInfo {
    observability_info_with_reference(sys, RankScale::default(), cfg)
}

/// As [`observability_info`], with cutoffs relative to at least `reference`.
pub fn observability_info_with_reference(
    sys: &ObservedSystem,
    reference: RankScale,
    cfg: &ToleranceConfig,
) -> ObservabilityInfo {
    let obs_matrix = observability_matrix(sys);
    let obs_basis = staircase(sys.a(), sys.c(), reference, cfg);
    ObservabilityInfo { obs_matrix, k_obs: obs_basis.ncols(), obs_basis }
}

fn staircase(a: &Matrix, c: &Matrix, reference: RankScale, cfg: &ToleranceConfig) -> Matrix {
    let n = a.nrows();
    let p = c.nrows();
    let dims = (p * n).max(n);
    let (a_scale, c_scale) = (norm2(a).max(reference.a), norm2(c).max(reference.c));
    let mut cut = rank_cutoff(c_scale, dims, n, cfg);
    let mut level_scale = c_scale;
    // Normalizing a weak direction magnifies the rounding it carries; `growth`
    // follows that magnification so later steps do not mistake it for signal.
    let mut growth = 1.0f64;
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    let mut candidates = c.clone();
    while basis.len() < n && candidates.nrows() > 0 {
        for _ in 0..2 {
            for q in &basis {
                let proj = &candidates * q;
                candidates -= proj * q.transpose();
            }
        }
        let s = svd(&candidates);
        let kept: Vec<(f64, Vector)> = s
            .sigma
            .iter()
            .zip(s.v.column_iter())
            .filter(|(&sigma, _)| sigma > cut)
            .map(|(&sigma, v)| (sigma, v.into_owned()))
            .take(n - basis.len())
            .collect();
        let Some(weakest) = kept.last().map(|k| k.0) else { break };
        growth *= (level_scale / weakest).max(1.0);
        level_scale = a_scale;
        let noise = dims as f64 * f64::EPSILON * a_scale * growth;
        cut = rank_cutoff(a_scale, dims, n, cfg).max(noise);
        candidates = Matrix::from_fn(kept.len(), n, |i, j| kept[i].1[j]) * a;
        basis.extend(kept.into_iter().map(|k| k.1));
    }
    Matrix::from_fn(n, basis.len(), |i, j| basis[j][i])
}

pub fn kalman_rank(sys: &ObservedSystem, cfg: &ToleranceConfig) -> usize {
    observability_info(sys, cfg).k_obs
}

/// Reference scales for ranks of the split blocks: `‖[C⁰ C⁺ C⁻]‖₂` and the
/// largest diagonal block norm.
pub fn split_scale(split: &SpectralSplit) -> RankScale {
    let p = split.c0.nrows();
    RankScale {
        a: norm2(&split.a0).max(norm2(&split.a_plus)).max(norm2(&split.a_minus)),
        c: norm2(&crate::linalg::hcat(p, &[&split.c0, &split.c_plus, &split.c_minus])),
    }
}

pub fn sub_ranks(sys: &ObservedSystem, split: &SpectralSplit, cfg: &ToleranceConfig) -> Result<SubRanks> {
    let reference = split_scale(split);
    let rank = |s: ObservedSystem| observability_info_with_reference(&s, reference, cfg).k_obs;
    let k0 = rank(split.center()?);
    let k_plus = rank(split.unstable()?);
    let k_minus = rank(split.stable()?);
    let k_obs = kalman_rank(sys, cfg);
    if k0 + k_plus + k_minus != k_obs {
        return Err(Error::AdditivityViolation { k0, k_plus, k_minus, k_obs });
    }
    Ok(SubRanks { k0, k_plus, k_minus })
}

/// Orthogonal Kalman decomposition, observable coordinates first.
pub fn kalman_decompose(sys: &ObservedSystem, cfg: &ToleranceConfig) -> ObservabilityDecomposition {
    kalman_decompose_with_reference(sys, RankScale::default(), cfg)
}

/// Kalman decomposition with the rank judged as in [`observability_info_with_reference`].
pub fn kalman_decompose_with_reference(
    sys: &ObservedSystem,
    reference: RankScale,
    cfg: &ToleranceConfig,
) -> ObservabilityDecomposition {
    let n = sys.n();
    let basis = observability_info_with_reference(sys, reference, cfg).obs_basis;
    let k = basis.ncols();
    let mut t = Matrix::zeros(n, n);
    if n > 0 {
        // Complete the observable basis with the orthogonal complement.
        let complement = sorted_svd(&basis.transpose()).1;
        t.columns_mut(0, k).copy_from(&basis);
        t.columns_mut(k, n - k).copy_from(&complement.columns(k, n - k));
    }
    // T is orthogonal, so T⁻¹ = Tᵀ.
    let at = t.transpose() * sys.a() * &t;
    let ct = sys.c() * &t;
    ObservabilityDecomposition {
        ao: at.view((0, 0), (k, k)).into_owned(),
        am: at.view((k, 0), (n - k, k)).into_owned(),
        au: at.view((k, k), (n - k, n - k)).into_owned(),
        co: ct.columns(0, k).into_owned(),
        t,
        k,
    }
}
