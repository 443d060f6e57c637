//! Invariant signature and the linear / topological equivalence deciders.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{norm2, solve_affine_matrix_equation, AffineSolution, Matrix, ToleranceConfig};
use crate::observability::{kalman_decompose_with_reference, kalman_rank, split_scale, sub_ranks};
use crate::spectral::{spectral_split, SpectralSplit};
use crate::system::ObservedSystem;

/// `(n⁰, n⁺, n⁻, k_obs, k⁰, k⁺, k⁻)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantSignature {
    pub n0: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub k_obs: usize,
    pub k0: usize,
    pub k_plus: usize,
    pub k_minus: usize,
}

impl InvariantSignature {
    pub fn as_tuple(&self) -> [usize; 7] {
        [self.n0, self.n_plus, self.n_minus, self.k_obs, self.k0, self.k_plus, self.k_minus]
    }

    /// First index (by name) where the two signatures differ.
    pub fn first_difference(&self, other: &Self) -> Option<(&'static str, usize, usize)> {
        const NAMES: [&str; 7] = ["n0", "n_plus", "n_minus", "k_obs", "k0", "k_plus", "k_minus"];
        let (a, b) = (self.as_tuple(), other.as_tuple());
        (0..7).find(|&i| a[i] != b[i]).map(|i| (NAMES[i], a[i], b[i]))
    }
}

impl fmt::Display for InvariantSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.as_tuple();
        write!(f, "({},{},{},{},{},{},{})", t[0], t[1], t[2], t[3], t[4], t[5], t[6])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Linear,
    Topological,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Confidence {
    Deterministic,
    /// Negative answer from random search; `failure_bound` bounds the chance
    /// that a nonsingular solution exists but was missed.
    Randomized { failure_bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    WitnessFound,
    /// Signatures, center pairs and observable hyperbolic parts all match.
    ConditionsHold,
    DimensionMismatch { n: (usize, usize), p: (usize, usize) },
    NotSimilar,
    OutputConstraintInfeasible,
    NoNonsingularSolution,
    SignatureMismatch { index: String, left: usize, right: usize },
    CenterPairNotEquivalent { cause: Box<Reason> },
    ObservablePartNotEquivalent { cause: Box<Reason> },
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::WitnessFound => write!(f, "witness found"),
            Reason::ConditionsHold => write!(f, "signature, center pairs and observable parts agree"),
            Reason::DimensionMismatch { n, p } => {
                write!(f, "dimension mismatch: n = {} vs {}, p = {} vs {}", n.0, n.1, p.0, p.1)
            }
            Reason::NotSimilar => write!(f, "A matrices not similar"),
            Reason::OutputConstraintInfeasible => write!(f, "no similarity maps C1 to C2"),
            Reason::NoNonsingularSolution => write!(f, "solution space contains no nonsingular matrix"),
            Reason::SignatureMismatch { index, left, right } => {
                write!(f, "signature mismatch at {index}: {left} vs {right}")
            }
            Reason::CenterPairNotEquivalent { cause } => write!(f, "center pairs not linearly equivalent ({cause})"),
            Reason::ObservablePartNotEquivalent { cause } => {
                write!(f, "observable hyperbolic parts not linearly equivalent ({cause})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceVerdict {
    pub relation: Relation,
    pub equivalent: bool,
    /// `P` with `A₁P = PA₂`, `C₁P = C₂` for positive linear verdicts.
    pub witness: Option<Matrix>,
    pub reason: Reason,
    pub confidence: Confidence,
}

impl EquivalenceVerdict {
    fn negative(relation: Relation, reason: Reason, confidence: Confidence) -> Self {
        Self { relation, equivalent: false, witness: None, reason, confidence }
    }
}

fn signature_with_split(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<(InvariantSignature, SpectralSplit)> {
    let split = spectral_split(sys, cfg)?;
    let ranks = sub_ranks(sys, &split, cfg)?;
    let c = split.counts;
    let signature = InvariantSignature {
        n0: c.n0,
        n_plus: c.n_plus,
        n_minus: c.n_minus,
        k_obs: kalman_rank(sys, cfg),
        k0: ranks.k0,
        k_plus: ranks.k_plus,
        k_minus: ranks.k_minus,
    };
    Ok((signature, split))
}

pub fn invariant_signature(sys: &ObservedSystem, cfg: &ToleranceConfig) -> Result<InvariantSignature> {
    signature_with_split(sys, cfg).map(|(s, _)| s)
}

/// Half-width of the integer grid the random coefficients are drawn from.
const GRID: i64 = 1000;

/// `|det P| > 1e-10 · ‖P‖₂ⁿ`.
pub fn is_nonsingular(p: &Matrix) -> bool {
    let n = p.nrows();
    if n == 0 {
        return true;
    }
    let det = p.clone().lu().determinant().abs();
    det > 1e-10 * norm2(p).powi(n as i32)
}

/// Residual checks of the witness equations.
pub fn witness_residuals_ok(
    a1: &Matrix,
    a2: &Matrix,
    c1: &Matrix,
    c2: &Matrix,
    p: &Matrix,
    cfg: &ToleranceConfig,
) -> bool {
    if p.is_empty() {
        return true;
    }
    let pn = norm2(p);
    let ra = norm2(&(a1 * p - p * a2));
    let rc = norm2(&(c1 * p - c2));
    // Scales below 1 count as 1, as in the spectral threshold.
    let sa = (norm2(a1) + norm2(a2)).max(1.0);
    let sc = (norm2(c1) * pn + norm2(c2)).max(1.0);
    ra <= cfg.tol_residual * sa * pn && rc <= cfg.tol_residual * sc
}

enum Search {
    Found(Matrix),
    Missed(Confidence),
}

/// Look for a nonsingular element of `P₀ + span(N)`: `P₀` itself, then
/// `samples` random integer-grid combinations.
fn search_nonsingular(
    sol: &AffineSolution,
    check: impl Fn(&Matrix) -> bool,
    n: usize,
    cfg: &ToleranceConfig,
    stream: u64,
) -> Search {
    let Some(p0) = &sol.particular else {
        return Search::Missed(Confidence::Deterministic);
    };
    if check(p0) {
        return Search::Found(p0.clone());
    }
    if sol.null_basis.is_empty() {
        return Search::Missed(Confidence::Deterministic);
    }
    let scale = p0.norm().max(1.0) / GRID as f64;
    let mut rng = cfg.rng(stream);
    for _ in 0..cfg.samples {
        let coeffs: Vec<f64> = (0..sol.null_basis.len())
            .map(|_| rng.random_range(-GRID..=GRID) as f64 * scale)
            .collect();
        let p = sol.combine(&coeffs).expect("particular solution present");
        if check(&p) {
            return Search::Found(p);
        }
    }
    // det is a polynomial of degree ≤ n in the coefficients; each draw misses a
    // nonzero one with probability ≤ n / (2G + 1).
    let per_draw = (n as f64 / (2 * GRID + 1) as f64).min(1.0);
    Search::Missed(Confidence::Randomized { failure_bound: per_draw.powi(cfg.samples as i32) })
}

/// Decide whether `A₂ = P⁻¹A₁P`, `C₂ = C₁P` for some nonsingular `P`.
pub fn linear_equivalent(s1: &ObservedSystem, s2: &ObservedSystem, cfg: &ToleranceConfig) -> Result<EquivalenceVerdict> {
    cfg.validate()?;
    let relation = Relation::Linear;
    if s1.n() != s2.n() || s1.p() != s2.p() {
        let reason = Reason::DimensionMismatch { n: (s1.n(), s2.n()), p: (s1.p(), s2.p()) };
        return Ok(EquivalenceVerdict::negative(relation, reason, Confidence::Deterministic));
    }
    let n = s1.n();
    let (a1, a2, c1, c2) = (s1.a(), s2.a(), s1.c(), s2.c());
    let full = solve_affine_matrix_equation(a1, a2, c1, c2, cfg)?;
    let check = |p: &Matrix| is_nonsingular(p) && witness_residuals_ok(a1, a2, c1, c2, p, cfg);
    let full_miss = match search_nonsingular(&full, check, n, cfg, 0) {
        Search::Found(p) => {
            return Ok(EquivalenceVerdict {
                relation,
                equivalent: true,
                witness: Some(p),
                reason: Reason::WitnessFound,
                confidence: Confidence::Deterministic,
            })
        }
        Search::Missed(conf) => conf,
    };

    // Explain the failure: are the A's similar at all?
    let none = Matrix::zeros(0, n);
    let similar = solve_affine_matrix_equation(a1, a2, &none, &none, cfg)?;
    let check_a = |p: &Matrix| is_nonsingular(p) && witness_residuals_ok(a1, a2, &none, &none, p, cfg);
    Ok(match search_nonsingular(&similar, check_a, n, cfg, 1) {
        Search::Found(_) if full.particular.is_none() => {
            EquivalenceVerdict::negative(relation, Reason::OutputConstraintInfeasible, Confidence::Deterministic)
        }
        Search::Found(_) => EquivalenceVerdict::negative(relation, Reason::NoNonsingularSolution, full_miss),
        Search::Missed(conf) => EquivalenceVerdict::negative(relation, Reason::NotSimilar, conf),
    })
}

/// Decide topological equivalence: equal signatures, linearly equivalent
/// center pairs and linearly equivalent observable hyperbolic parts.
pub fn topologically_equivalent(
    s1: &ObservedSystem,
    s2: &ObservedSystem,
    cfg: &ToleranceConfig,
) -> Result<EquivalenceVerdict> {
    cfg.validate()?;
    let relation = Relation::Topological;
    if s1.n() != s2.n() || s1.p() != s2.p() {
        let reason = Reason::DimensionMismatch { n: (s1.n(), s2.n()), p: (s1.p(), s2.p()) };
        return Ok(EquivalenceVerdict::negative(relation, reason, Confidence::Deterministic));
    }
    let (sig1, split1) = signature_with_split(s1, cfg)?;
    let (sig2, split2) = signature_with_split(s2, cfg)?;
    if let Some((index, left, right)) = sig1.first_difference(&sig2) {
        let reason = Reason::SignatureMismatch { index: index.to_string(), left, right };
        return Ok(EquivalenceVerdict::negative(relation, reason, Confidence::Deterministic));
    }

    let center = linear_equivalent(&split1.center()?, &split2.center()?, cfg)?;
    if !center.equivalent {
        let reason = Reason::CenterPairNotEquivalent { cause: Box::new(center.reason) };
        return Ok(EquivalenceVerdict::negative(relation, reason, center.confidence));
    }

    let observable_part = |split: &SpectralSplit| {
        kalman_decompose_with_reference(&split.hyperbolic()?, split_scale(split), cfg).observable_part()
    };
    let (o1, o2) = (observable_part(&split1)?, observable_part(&split2)?);
    let observable = linear_equivalent(&o1, &o2, cfg)?;
    if !observable.equivalent {
        let reason = Reason::ObservablePartNotEquivalent { cause: Box::new(observable.reason) };
        return Ok(EquivalenceVerdict::negative(relation, reason, observable.confidence));
    }
    Ok(EquivalenceVerdict {
        relation,
        equivalent: true,
        witness: None,
        reason: Reason::ConditionsHold,
        confidence: Confidence::Deterministic,
    })
}
