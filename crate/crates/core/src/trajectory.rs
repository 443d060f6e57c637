//! Output trajectories `w(t) = C e^{At} x₀` and witness cross-checks.

use serde::Serialize;

use crate::equivalence::is_nonsingular;
use crate::error::{Error, Result};
use crate::linalg::{expm, inverse, Matrix, ToleranceConfig, Vector};
use crate::system::ObservedSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub outputs: Vec<Vector>,
}

/// `count` evenly spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|i| t_max * i as f64 / (count - 1) as f64).collect(),
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Value("sample times must be finite".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Value("sample times must be ascending".into()));
    }
    Ok(())
}

pub fn simulate_observation(sys: &ObservedSystem, x0: &Vector, times: &[f64]) -> Result<TrajectorySample> {
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, expected {}", x0.len(), sys.n())));
    }
    if !x0.iter().all(|x| x.is_finite()) {
        return Err(Error::Value("x0 must be finite".into()));
    }
    check_times(times)?;
    let states: Vec<Vector> = times.iter().map(|&t| expm(sys.a(), t) * x0).collect();
    let outputs = states.iter().map(|x| sys.c() * x).collect();
    Ok(TrajectorySample { times: times.to_vec(), states, outputs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub passed: bool,
    /// Largest `‖w(t) − z(t)‖∞` over all initial states and times.
    pub max_abs_discrepancy: f64,
    /// Largest `‖w(t) − z(t)‖∞ / (1 + ‖w(t)‖∞)`.
    pub max_rel_discrepancy: f64,
    pub initial_states: usize,
    pub time_points: usize,
}

/// Simulate `S₁` from `x₀` and `S₂` from `P⁻¹x₀` and compare outputs.
pub fn check_linear_witness(
    s1: &ObservedSystem,
    s2: &ObservedSystem,
    p: &Matrix,
    x0s: &[Vector],
    times: &[f64],
    cfg: &ToleranceConfig,
) -> Result<WitnessCheck> {
    if p.shape() != (s1.n(), s2.n()) || s1.n() != s2.n() || s1.p() != s2.p() {
        return Err(Error::DimensionMismatch(format!(
            "witness {:?} for systems with n = {}, {} and p = {}, {}",
            p.shape(),
            s1.n(),
            s2.n(),
            s1.p(),
            s2.p()
        )));
    }
    if !is_nonsingular(p) {
        let det = if p.is_empty() { 1.0 } else { p.clone().lu().determinant() };
        let threshold = 1e-10 * crate::linalg::norm2(p).powi(p.nrows() as i32);
        return Err(Error::SingularWitness { det, threshold });
    }
    let p_inv = inverse(p)?;
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    for x0 in x0s {
        let w = simulate_observation(s1, x0, times)?;
        let z = simulate_observation(s2, &(&p_inv * x0), times)?;
        for (wi, zi) in w.outputs.iter().zip(&z.outputs) {
            let diff = (wi - zi).amax();
            max_abs = max_abs.max(diff);
            max_rel = max_rel.max(diff / (1.0 + wi.amax()));
        }
    }
    Ok(WitnessCheck {
        passed: max_rel <= cfg.tol_residual,
        max_abs_discrepancy: max_abs,
        max_rel_discrepancy: max_rel,
        initial_states: x0s.len(),
        time_points: times.len(),
    })
}
