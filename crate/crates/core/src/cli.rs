//! Command-line surface: file parsing, command dispatch and reports.
//!
//! Every run produces one report with the fields `command`, `inputs`,
//! `config`, `warnings` and `result`, in that order. Exit codes: 0 success or
//! equivalent, 1 well-formed negative verdict, 2 input or numerical error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::{classify_3d_siso, merged_observable_canonical, topological_canonical, CanonicalForm};
use crate::equivalence::{
    invariant_signature, linear_equivalent, topologically_equivalent, Confidence, EquivalenceVerdict,
};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, ToleranceConfig, Vector};
use crate::observability::{kalman_decompose, observability_info, sub_ranks};
use crate::spectral::spectral_split;
use crate::system::{ObservedSystem, SystemData};
use crate::trajectory::{check_linear_witness, simulate_observation, uniform_grid};

#[derive(Debug, Parser)]
#[command(name = "lticlass", version, about = "Classify observed LTI systems up to linear and topological equivalence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub tol_spec: f64,
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub tol_rank: f64,
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 64, global = true)]
    pub samples: usize,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

impl ToleranceArgs {
    fn config(&self) -> ToleranceConfig {
        ToleranceConfig {
            tol_spec: self.tol_spec,
            tol_rank: self.tol_rank,
            tol_residual: self.tol_residual,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Linear,
    Topological,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant signature (n0, n+, n-, k_obs, k0, k+, k-)
    Invariants { #[arg(required = true)] files: Vec<PathBuf> },
    /// Center / unstable / stable block split
    Split { #[arg(required = true)] files: Vec<PathBuf> },
    /// Observability matrix, rank, sub-ranks and Kalman decomposition
    Kalman { #[arg(required = true)] files: Vec<PathBuf> },
    /// Topological canonical form
    Canonical {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Merge the center and observable hyperbolic blocks (needs k0 = n0)
        #[arg(long)]
        merged: bool,
    },
    /// Place 3-dimensional single-output systems in the catalog
    Catalog3d { #[arg(required = true)] files: Vec<PathBuf> },
    /// Decide equivalence of two systems
    Equiv {
        #[arg(long, value_enum)]
        mode: Mode,
        first: PathBuf,
        second: PathBuf,
    },
    /// Sample w(t) = C e^{At} x0
    Simulate {
        file: PathBuf,
        /// Comma-separated initial state
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        #[arg(long, default_value_t = 33)]
        points: usize,
    },
    /// Check that a witness P preserves outputs along trajectories
    CheckWitness {
        first: PathBuf,
        second: PathBuf,
        /// JSON file holding P as {"P": [[...]]} or a bare array of rows
        #[arg(long)]
        witness: PathBuf,
        /// Initial states, n comma-separated values each (repeatable); defaults to the standard basis
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        #[arg(long, default_value_t = 33)]
        points: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Invariants { .. } => "invariants",
            Command::Split { .. } => "split",
            Command::Kalman { .. } => "kalman",
            Command::Canonical { .. } => "canonical",
            Command::Catalog3d { .. } => "catalog3d",
            Command::Equiv { .. } => "equiv",
            Command::Simulate { .. } => "simulate",
            Command::CheckWitness { .. } => "check-witness",
        }
    }

    fn paths(&self) -> Vec<&Path> {
        match self {
            Command::Invariants { files }
            | Command::Split { files }
            | Command::Kalman { files }
            | Command::Canonical { files, .. }
            | Command::Catalog3d { files } => files.iter().map(|f| f.as_path()).collect(),
            Command::Equiv { first, second, .. } => vec![first, second],
            Command::Simulate { file, .. } => vec![file],
            Command::CheckWitness { first, second, witness, .. } => vec![first, second, witness],
        }
    }
}

/// Row-major matrix as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixOut {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&Matrix> for MatrixOut {
    fn from(m: &Matrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl MatrixOut {
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.data[i][j])
    }
}

fn mat(m: &Matrix) -> Value {
    serde_json::to_value(MatrixOut::from(m)).expect("matrix serializes")
}

fn vector(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

/// The full report; `result` holds the command-specific payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: ToleranceConfig,
    pub warnings: Vec<String>,
    pub result: Value,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{what} has ragged rows")));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Parse a system from its JSON text; returns the system and its optional label.
pub fn parse_system_str(text: &str) -> Result<(ObservedSystem, Option<String>)> {
    let data: SystemData = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let a = rows_to_matrix(&data.a, "A")?;
    let c = rows_to_matrix(&data.c, "C")?;
    Ok((ObservedSystem::new(a, c)?, data.label))
}

pub fn parse_system(path: &Path) -> Result<ObservedSystem> {
    load_system(path).map(|(s, _)| s)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<(ObservedSystem, String)> {
    let (sys, label) = parse_system_str(&read(path)?)?;
    Ok((sys, label.unwrap_or_else(|| path.display().to_string())))
}

fn load_witness(path: &Path) -> Result<Matrix> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum WitnessFile {
        Wrapped {
            #[serde(rename = "P")]
            p: Vec<Vec<f64>>,
        },
        Bare(Vec<Vec<f64>>),
    }
    let rows = match serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))? {
        WitnessFile::Wrapped { p } | WitnessFile::Bare(p) => p,
    };
    let p = rows_to_matrix(&rows, "P")?;
    if !crate::linalg::is_finite(&p) {
        return Err(Error::Value("witness entries must be finite".into()));
    }
    Ok(p)
}

fn confidence_warning(conf: &Confidence, warnings: &mut Vec<String>) {
    if let Confidence::Randomized { failure_bound } = conf {
        warnings.push(format!(
            "negative verdict from randomized witness search (failure bound {failure_bound:.3e})"
        ));
    }
}

fn verdict_value(v: &EquivalenceVerdict) -> Value {
    let summary = if v.equivalent { "equivalent".to_string() } else { format!("not equivalent: {}", v.reason) };
    json!({
        "summary": summary,
        "relation": v.relation,
        "equivalent": v.equivalent,
        "witness": v.witness.as_ref().map(mat),
        "reason": v.reason,
        "confidence": v.confidence,
    })
}

fn canonical_value(f: &CanonicalForm) -> Value {
    let mut v = json!({
        "Nhat": mat(&f.nhat),
        "Khat": mat(&f.khat),
        "Bhat": mat(&f.bhat),
        "Dhat": mat(&f.dhat),
        "Ehat": mat(&f.ehat),
        "assembled_A": mat(&f.assembled_a),
        "assembled_C": mat(&f.assembled_c),
        "center_is_canonical": f.center_is_canonical,
    });
    if let Some(m) = &f.merged {
        v["merged"] = json!({ "Lhat": mat(&m.lhat), "That": mat(&m.that) });
    }
    v
}

struct Outcome {
    result: Value,
    warnings: Vec<String>,
    negative: bool,
}

fn per_file<F>(paths: &[PathBuf], inputs: &mut Vec<String>, mut f: F) -> Result<Outcome>
where
    F: FnMut(&ObservedSystem, &mut Vec<String>) -> Result<Value>,
{
    let mut warnings = Vec::new();
    let mut items = Vec::new();
    for path in paths {
        let (sys, label) = load_system(path)?;
        inputs.push(label.clone());
        let mut local = Vec::new();
        let value = f(&sys, &mut local)?;
        warnings.extend(local.into_iter().map(|w| format!("{label}: {w}")));
        items.push(json!({ "input": label, "value": value }));
    }
    Ok(Outcome { result: Value::Array(items), warnings, negative: false })
}

fn execute(command: &Command, cfg: &ToleranceConfig, inputs: &mut Vec<String>) -> Result<Outcome> {
    cfg.validate()?;
    match command {
        Command::Invariants { files } => per_file(files, inputs, |sys, _| {
            let s = invariant_signature(sys, cfg)?;
            Ok(json!({ "signature": s, "tuple": s.as_tuple() }))
        }),
        Command::Split { files } => per_file(files, inputs, |sys, _| {
            let s = spectral_split(sys, cfg)?;
            Ok(json!({
                "counts": s.counts,
                "P": mat(&s.p),
                "P_inv": mat(&s.p_inv),
                "A0": mat(&s.a0),
                "A_plus": mat(&s.a_plus),
                "A_minus": mat(&s.a_minus),
                "C0": mat(&s.c0),
                "C_plus": mat(&s.c_plus),
                "C_minus": mat(&s.c_minus),
            }))
        }),
        Command::Kalman { files } => per_file(files, inputs, |sys, _| {
            let info = observability_info(sys, cfg);
            let split = spectral_split(sys, cfg)?;
            let ranks = sub_ranks(sys, &split, cfg)?;
            let d = kalman_decompose(sys, cfg);
            Ok(json!({
                "obs_matrix": mat(&info.obs_matrix),
                "k_obs": info.k_obs,
                "obs_basis": mat(&info.obs_basis),
                "sub_ranks": ranks,
                "decomposition": {
                    "k": d.k,
                    "T": mat(&d.t),
                    "Ao": mat(&d.ao),
                    "Am": mat(&d.am),
                    "Au": mat(&d.au),
                    "Co": mat(&d.co),
                },
            }))
        }),
        Command::Canonical { files, merged } => per_file(files, inputs, |sys, warnings| {
            let form = if *merged { merged_observable_canonical(sys, cfg)? } else { topological_canonical(sys, cfg)? };
            if !form.center_is_canonical {
                warnings.push("center pair is not completely observable; (Nhat, Khat) is a representative only".into());
            }
            Ok(canonical_value(&form))
        }),
        Command::Catalog3d { files } => per_file(files, inputs, |sys, _| {
            let entry = classify_3d_siso(sys, cfg)?;
            Ok(json!({ "entry": entry }))
        }),
        Command::Equiv { mode, first, second } => {
            let (s1, l1) = load_system(first)?;
            let (s2, l2) = load_system(second)?;
            inputs.extend([l1, l2]);
            let verdict = match mode {
                Mode::Linear => linear_equivalent(&s1, &s2, cfg)?,
                Mode::Topological => topologically_equivalent(&s1, &s2, cfg)?,
            };
            let mut warnings = Vec::new();
            if !verdict.equivalent {
                confidence_warning(&verdict.confidence, &mut warnings);
            }
            let signatures = match (invariant_signature(&s1, cfg), invariant_signature(&s2, cfg)) {
                (Ok(a), Ok(b)) => json!([a, b]),
                _ => Value::Null,
            };
            Ok(Outcome {
                result: json!({ "verdict": verdict_value(&verdict), "signatures": signatures }),
                warnings,
                negative: !verdict.equivalent,
            })
        }
        Command::Simulate { file, x0, t_max, points } => {
            let (sys, label) = load_system(file)?;
            inputs.push(label);
            if !t_max.is_finite() || *t_max < 0.0 {
                return Err(Error::Value(format!("t-max must be finite and >= 0, got {t_max}")));
            }
            let x0 = Vector::from_column_slice(x0);
            let sample = simulate_observation(&sys, &x0, &uniform_grid(*t_max, *points))?;
            Ok(Outcome {
                result: json!({
                    "times": sample.times,
                    "states": sample.states.iter().map(vector).collect::<Vec<_>>(),
                    "outputs": sample.outputs.iter().map(vector).collect::<Vec<_>>(),
                }),
                warnings: Vec::new(),
                negative: false,
            })
        }
        Command::CheckWitness { first, second, witness, x0, t_max, points } => {
            let (s1, l1) = load_system(first)?;
            let (s2, l2) = load_system(second)?;
            inputs.extend([l1, l2, witness.display().to_string()]);
            let p = load_witness(witness)?;
            let n = s1.n();
            let x0s: Vec<Vector> = if x0.is_empty() {
                (0..n).map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect()
            } else {
                if n == 0 || x0.len() % n != 0 {
                    return Err(Error::DimensionMismatch(format!("x0 values ({}) are not a multiple of n = {n}", x0.len())));
                }
                x0.chunks(n).map(Vector::from_column_slice).collect()
            };
            let check = check_linear_witness(&s1, &s2, &p, &x0s, &uniform_grid(*t_max, *points), cfg)?;
            Ok(Outcome {
                negative: !check.passed,
                result: json!({ "check": check }),
                warnings: Vec::new(),
            })
        }
    }
}

/// Run a parsed command; returns the report and the exit code.
pub fn run(cli: &Cli) -> (Report, i32) {
    let cfg = cli.tolerances.config();
    let mut inputs = Vec::new();
    let (result, warnings, code) = match execute(&cli.command, &cfg, &mut inputs) {
        Ok(out) => (out.result, out.warnings, if out.negative { 1 } else { 0 }),
        Err(e) => {
            if inputs.is_empty() {
                inputs = cli.command.paths().iter().map(|p| p.display().to_string()).collect();
            }
            (json!({ "error": { "kind": e.kind(), "message": e.to_string() } }), Vec::new(), 2)
        }
    };
    let report = Report { command: cli.command.name().to_string(), inputs, config: cfg, warnings, result };
    (report, code)
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Text => render_text(report),
    }
}

fn is_matrix(v: &Value) -> bool {
    v.as_object().is_some_and(|o| o.len() == 3 && o.contains_key("rows") && o.contains_key("data"))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) if is_matrix(v) => {
            let rows = o["data"].as_array().cloned().unwrap_or_default();
            let dims = format!("{}x{}", o["rows"], o["cols"]);
            out.push((prefix.to_string(), dims));
            for (i, r) in rows.iter().enumerate() {
                let cells: Vec<String> = r
                    .as_array()
                    .map(|c| c.iter().map(|x| format!("{:>12.6}", x.as_f64().unwrap_or(f64::NAN))).collect())
                    .unwrap_or_default();
                out.push((format!("{prefix}[{i}]"), cells.join(" ")));
            }
        }
        Value::Object(o) => {
            for (k, x) in o {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            out.push((prefix.to_string(), a.iter().map(scalar).collect::<Vec<_>>().join(", ")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn render_text(report: &Report) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    let mut lines = Vec::new();
    flatten("", &value, &mut lines);
    let width = lines.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in lines {
        s.push_str(&format!("{k:<width$}  {v}\n"));
    }
    s
}

/// What the process should print and return.
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parse arguments and run. Argument errors are rendered by clap to stderr
/// and mapped to exit code 2.
pub fn main_with_args<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let (report, code) = run(&cli);
            Invocation { stdout: render(&report, cli.output), stderr: String::new(), code }
        }
        Err(e) if e.use_stderr() => Invocation { stdout: String::new(), stderr: e.render().to_string(), code: 2 },
        Err(e) => Invocation { stdout: e.render().to_string(), stderr: String::new(), code: 0 },
    }
}
