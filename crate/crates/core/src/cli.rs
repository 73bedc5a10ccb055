//! Command-line front end. Every subcommand builds a [`Report`] that renders
//! to CSV or JSON with the same fields and values.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bounds::{BoundReport, BoundValue, COMPARISON_TOLERANCE};
use crate::collision::{analytic_accept_probability, build_collision_algorithm};
use crate::error::{Error, Result};
use crate::model::{
    compact_widths, random_algorithm, ConstantAlgorithm, MemoryProfile, StreamAlgorithm, RANDOM_TABLE_CAP,
};
use crate::monte_carlo::{estimate_accept, Estimate, Source};
use crate::oracle::{bottleneck_steps, decomposition, enumerate_distributions, OracleResult, ENUMERATION_CAP};
use crate::properties::{run_all, DEFAULT_GRID, DEFAULT_STIRLING_MAX};

/// Sigma multiple used when comparing sampled estimates with exact values.
pub const SIGMA_BAND: f64 = 5.0;

#[derive(Parser, Debug)]
#[command(
    name = "switchlab",
    version,
    about = "Distinguishing sampling with and without replacement under streaming memory limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the analytic upper and lower bounds for memory profiles.
    Bounds(BoundsArgs),
    /// Exhaustively enumerate a small instance and check the information inequalities.
    Oracle(OracleArgs),
    /// Estimate acceptance probabilities by sampling.
    Simulate(SimulateArgs),
    /// Grid-check the analytic properties of the entropy functions.
    VerifyFunctions(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Alphabet sizes (comma-separated for a sweep).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// Stream lengths (comma-separated); optional for explicit width lists.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<usize>,
    /// `const:<s>` or `s1,s2,...`; repeat for several profiles.
    #[arg(long, required = true)]
    pub memory: Vec<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmKind {
    Collision,
    Constant,
    Random,
}

impl AlgorithmKind {
    fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Collision => "collision",
            AlgorithmKind::Constant => "constant",
            AlgorithmKind::Random => "random",
        }
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub memory: String,
    #[arg(long, value_enum, default_value_t = AlgorithmKind::Collision)]
    pub algorithm: AlgorithmKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run this many random algorithms with seeds `seed, seed+1, ...`.
    #[arg(long)]
    pub suite: Option<u64>,
    /// Largest `N^q` that will be enumerated.
    #[arg(long, default_value_t = ENUMERATION_CAP)]
    pub cap: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    P,
    Q,
    Both,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub memory: String,
    #[arg(long, value_enum, default_value_t = AlgorithmKind::Collision)]
    pub algorithm: AlgorithmKind,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SourceArg::Both)]
    pub source: SourceArg,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = DEFAULT_STIRLING_MAX)]
    pub stirling_max: u64,
}

/// A named pass/fail outcome attached to a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub type Row = Vec<(&'static str, Value)>;

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let results: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Object(row.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()))
            .collect();
        let verdicts: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"check": c.name, "passed": c.passed, "detail": c.detail}))
            .collect();
        let doc = json!({
            "schema": 1,
            "command": self.command,
            "config": self.config,
            "results": results,
            "verdicts": verdicts,
            "passed": self.passed(),
        });
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(first) = self.rows.first() {
            w.write_record(first.iter().map(|(k, _)| *k))
                .map_err(|e| Error::Internal(e.to_string()))?;
        }
        for row in &self.rows {
            w.write_record(row.iter().map(|(_, v)| csv_cell(v)))
                .map_err(|e| Error::Internal(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(self.to_json() + "\n"),
            Format::Csv => self.to_csv(),
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    Value::from(x)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn opt_bool(x: Option<bool>) -> Value {
    x.map_or(Value::Null, Value::Bool)
}

fn joined(xs: &[f64]) -> Value {
    Value::String(xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
}

fn bound_cells(row: &mut Row, names: [&'static str; 3], b: Option<&BoundValue>) {
    row.push((names[0], opt_num(b.map(|b| b.value))));
    row.push((names[1], b.map_or(Value::Null, |b| b.unit.as_str().into())));
    row.push((names[2], b.map_or(Value::Null, |b| b.flags().into())));
}

/// Collapses per-row outcomes into one check per name.
struct CheckTally {
    checks: Vec<(String, usize, usize, Option<String>)>,
}

impl CheckTally {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn record(&mut self, name: &str, passed: bool, context: impl FnOnce() -> String) {
        let idx = match self.checks.iter().position(|c| c.0 == name) {
            Some(i) => i,
            None => {
                self.checks.push((name.to_string(), 0, 0, None));
                self.checks.len() - 1
            }
        };
        let entry = &mut self.checks[idx];
        entry.2 += 1;
        if passed {
            entry.1 += 1;
        } else if entry.3.is_none() {
            entry.3 = Some(context());
        }
    }

    fn finish(self) -> Vec<Check> {
        self.checks
            .into_iter()
            .map(|(name, ok, total, first_fail)| Check {
                passed: ok == total,
                detail: match first_fail {
                    None => format!("{ok}/{total} passed"),
                    Some(ctx) => format!("{ok}/{total} passed; first failure: {ctx}"),
                },
                name,
            })
            .collect()
    }
}

pub fn configure_workers(workers: Option<usize>) -> Result<()> {
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Precondition("--workers must be at least 1".into()));
        }
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Report> {
    configure_workers(cli.workers)?;
    match &cli.command {
        Command::Bounds(a) => run_bounds(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Simulate(a) => run_simulate(a),
        Command::VerifyFunctions(a) => run_verify(a),
    }
}

/// Parses `args` (including the program name), runs, and writes the report
/// to `out`. Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli).and_then(|r| Ok((r.render(cli.format)?, r.passed()))) {
        Ok((text, passed)) => {
            let _ = out.write_all(text.as_bytes());
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn run_bounds(a: &BoundsArgs) -> Result<Report> {
    let qs: Vec<Option<usize>> = if a.q.is_empty() {
        vec![None]
    } else {
        a.q.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    let mut tally = CheckTally::new();
    for &n in &a.n {
        for &q in &qs {
            for memory in &a.memory {
                let profile = MemoryProfile::parse(n, q, memory)?;
                let r = BoundReport::evaluate(&profile, a.epsilon)?;
                let mut row: Row = vec![
                    ("n", n.into()),
                    ("q", r.q.into()),
                    ("memory", memory.as_str().into()),
                    ("profile", compact_widths(r.profile.widths()).into()),
                    ("normalized", compact_widths(r.normalized.widths()).into()),
                    ("chain_bound", num(r.chain_bound)),
                    ("chain_bound_unit", "nats".into()),
                ];
                bound_cells(
                    &mut row,
                    ["leading_upper", "leading_upper_unit", "leading_upper_flags"],
                    Some(&r.leading_upper),
                );
                bound_cells(
                    &mut row,
                    ["leading_upper_eps", "leading_upper_eps_unit", "leading_upper_eps_flags"],
                    r.leading_upper_eps.as_ref(),
                );
                if a.epsilon.is_some() && r.leading_upper_eps.is_none() {
                    // q > N^(1-eps) at this grid point
                    row.last_mut().unwrap().1 = "inapplicable".into();
                }
                bound_cells(
                    &mut row,
                    [
                        "construction_lower",
                        "construction_lower_unit",
                        "construction_lower_flags",
                    ],
                    r.construction_lower.as_ref(),
                );
                row.push((
                    "construction_lower_normalized",
                    opt_num(r.construction_lower_normalized.map(|b| b.value)),
                ));
                row.push((
                    "collision_capacities",
                    r.capacities
                        .as_ref()
                        .map_or(Value::Null, |k| compact_widths(k.as_slice()).into()),
                ));
                row.push(("collision_exact_kl", opt_num(r.collision_exact_kl)));
                row.push(("collision_exact_kl_unit", "nats".into()));
                row.push(("lower_bound_holds", opt_bool(r.lower_bound_holds())));
                row.push(("raw_lower_bound_holds", opt_bool(r.raw_lower_bound_holds())));
                if let Some(ok) = r.lower_bound_holds() {
                    tally.record("lower_bound_holds", ok, || format!("N={n}, memory={memory}"));
                }
                rows.push(row);
            }
        }
    }
    let mut config = Map::new();
    config.insert("n".into(), json!(a.n));
    config.insert("q".into(), json!(a.q));
    config.insert("memory".into(), json!(a.memory));
    config.insert("epsilon".into(), json!(a.epsilon));
    Ok(Report {
        command: "bounds",
        config,
        rows,
        checks: tally.finish(),
    })
}

/// Builds the requested algorithm. The detector runs on the profile as
/// given; random tables are drawn on the normalized profile.
pub fn build_algorithm(kind: AlgorithmKind, profile: &MemoryProfile, seed: u64) -> Result<Box<dyn StreamAlgorithm>> {
    Ok(match kind {
        AlgorithmKind::Collision => Box::new(build_collision_algorithm(profile)?),
        AlgorithmKind::Constant => Box::new(ConstantAlgorithm::new(profile.clone())),
        AlgorithmKind::Random => Box::new(random_algorithm(&profile.normalized(), seed, RANDOM_TABLE_CAP)?),
    })
}

fn oracle_row(result: &OracleResult, kind: AlgorithmKind, seed: Option<u64>, tally: &mut CheckTally) -> Result<Row> {
    let n = result.n();
    let ctx = || format!("{} seed={seed:?}", result.describe());
    let dec = decomposition(result);
    let steps = bottleneck_steps(result)?;
    let min_slack = steps.iter().map(|s| s.slack()).fold(f64::INFINITY, f64::min);
    let min_memory_slack = steps.iter().map(|s| s.memory_slack()).fold(f64::INFINITY, f64::min);
    let chain = crate::bounds::chain_bound(&result.profile.normalized())?;
    let decision_kl = result.decision_kl()?;
    let tv = result.total_variation();

    let dec_ok = dec.slack >= -COMPARISON_TOLERANCE;
    let steps_ok = min_slack >= -COMPARISON_TOLERANCE && min_memory_slack >= -COMPARISON_TOLERANCE;
    let chain_ok = result.kl_exact <= chain + COMPARISON_TOLERANCE;
    let dpi_ok = decision_kl <= result.kl_exact + COMPARISON_TOLERANCE;
    let pinsker_ok = tv <= (result.kl_exact / 2.0).sqrt() + COMPARISON_TOLERANCE;
    tally.record("kl_decomposition", dec_ok, ctx);
    tally.record("per_step_bound", steps_ok, ctx);
    tally.record("chain_bound", chain_ok, ctx);
    tally.record("data_processing", dpi_ok, ctx);
    tally.record("pinsker", pinsker_ok, ctx);

    let (analytic, analytic_ok, collision_kl) = if kind == AlgorithmKind::Collision {
        let k = crate::collision::derive_capacities(&result.profile)?;
        let a = analytic_accept_probability(n, &k)?;
        let exact = crate::bounds::collision_exact_kl(n, k.checked_prefix())?;
        let ok = (a - result.q_accept()).abs() <= COMPARISON_TOLERANCE
            && result.p_accept_count.0 == 0
            && (exact - result.kl_exact).abs() <= COMPARISON_TOLERANCE;
        tally.record("collision_closed_form", ok, ctx);
        (Some(a), Some(ok), Some(exact))
    } else {
        (None, None, None)
    };

    Ok(vec![
        ("algorithm", kind.as_str().into()),
        ("seed", seed.map_or(Value::Null, Value::from)),
        ("n", n.into()),
        ("q", result.q().into()),
        ("profile", compact_widths(result.profile.widths()).into()),
        ("kl_exact", num(result.kl_exact)),
        ("mi_per_step", joined(&result.mi_per_step)),
        ("mi_state", joined(&result.mi_state)),
        ("mi_sum", num(result.mi_sum())),
        ("decomposition_slack", num(dec.slack)),
        ("decomposition_holds", dec_ok.into()),
        ("step_bound_min_slack", num(min_slack)),
        ("step_bound_memory_min_slack", num(min_memory_slack)),
        ("step_bound_holds", steps_ok.into()),
        ("chain_bound", num(chain)),
        ("chain_bound_holds", chain_ok.into()),
        ("p_accept", num(result.p_accept())),
        ("q_accept", num(result.q_accept())),
        ("decision_kl", num(decision_kl)),
        ("data_processing_holds", dpi_ok.into()),
        ("total_variation", num(tv)),
        ("pinsker_holds", pinsker_ok.into()),
        ("analytic_q_accept", opt_num(analytic)),
        ("collision_exact_kl", opt_num(collision_kl)),
        ("closed_form_holds", opt_bool(analytic_ok)),
    ])
}

fn too_large(e: Error) -> Error {
    match e {
        Error::CapExceeded { what, size, cap } => Error::Precondition(format!(
            "{what} has {size} entries, above the cap of {cap}; use `simulate` for instances this large"
        )),
        other => other,
    }
}

fn run_oracle(a: &OracleArgs) -> Result<Report> {
    let profile = MemoryProfile::parse(a.n, a.q, &a.memory)?;
    let mut rows = Vec::new();
    let mut tally = CheckTally::new();
    match a.suite {
        Some(count) => {
            if a.algorithm != AlgorithmKind::Random {
                return Err(Error::Precondition(
                    "--suite runs random algorithms; pass --algorithm random".into(),
                ));
            }
            for seed in a.seed..a.seed + count {
                let alg = build_algorithm(a.algorithm, &profile, seed).map_err(too_large)?;
                let result = enumerate_distributions(alg.as_ref(), a.cap).map_err(too_large)?;
                rows.push(oracle_row(&result, a.algorithm, Some(seed), &mut tally)?);
            }
        }
        None => {
            let alg = build_algorithm(a.algorithm, &profile, a.seed).map_err(too_large)?;
            let result = enumerate_distributions(alg.as_ref(), a.cap).map_err(too_large)?;
            let seed = (a.algorithm == AlgorithmKind::Random).then_some(a.seed);
            rows.push(oracle_row(&result, a.algorithm, seed, &mut tally)?);
        }
    }
    let mut config = Map::new();
    config.insert("n".into(), json!(a.n));
    config.insert("q".into(), json!(profile.q()));
    config.insert("memory".into(), json!(a.memory));
    config.insert("algorithm".into(), json!(a.algorithm.as_str()));
    config.insert("seed".into(), json!(a.seed));
    config.insert("suite".into(), json!(a.suite));
    config.insert("cap".into(), json!(a.cap.to_string()));
    Ok(Report {
        command: "oracle",
        config,
        rows,
        checks: tally.finish(),
    })
}

fn estimate_row(source: &str, e: &Estimate, analytic: Option<f64>) -> Row {
    let within = analytic.map(|t| e.within(t, SIGMA_BAND));
    vec![
        ("source", source.into()),
        ("value", num(e.value)),
        ("stderr", num(e.stderr)),
        ("samples", e.samples.into()),
        ("seed", e.seed.into()),
        ("analytic", opt_num(analytic)),
        ("within_5_sigma", opt_bool(within)),
    ]
}

fn run_simulate(a: &SimulateArgs) -> Result<Report> {
    let profile = MemoryProfile::parse(a.n, a.q, &a.memory)?;
    let alg = build_algorithm(a.algorithm, &profile, a.seed).map_err(too_large)?;
    // Closed forms exist for the detector and the constant algorithm.
    let (p_exact, q_exact) = match a.algorithm {
        AlgorithmKind::Collision => {
            let k = crate::collision::derive_capacities(&profile)?;
            (Some(0.0), Some(analytic_accept_probability(profile.n(), &k)?))
        }
        AlgorithmKind::Constant => (Some(0.0), Some(0.0)),
        AlgorithmKind::Random => (None, None),
    };
    let mut rows = Vec::new();
    let mut tally = CheckTally::new();
    let want_p = a.source != SourceArg::Q;
    let want_q = a.source != SourceArg::P;
    let p = want_p
        .then(|| estimate_accept(alg.as_ref(), Source::WithoutReplacement, a.samples, a.seed))
        .transpose()?;
    let q = want_q
        .then(|| estimate_accept(alg.as_ref(), Source::WithReplacement, a.samples, a.seed))
        .transpose()?;
    if let Some(p) = &p {
        rows.push(estimate_row("P", p, p_exact));
        if let Some(t) = p_exact {
            tally.record("p_accept_exact", p.value == t, || format!("P[A=1] = {}", p.value));
        }
    }
    if let Some(q) = &q {
        rows.push(estimate_row("Q", q, q_exact));
        if let Some(t) = q_exact {
            tally.record("q_accept_within_5_sigma", q.within(t, SIGMA_BAND), || {
                format!("Q[A=1] = {} +- {}, expected {t}", q.value, q.stderr)
            });
        }
    }
    if let (Some(p), Some(q)) = (&p, &q) {
        let tv = Estimate {
            value: (p.value - q.value).abs(),
            stderr: p.stderr.hypot(q.stderr),
            samples: a.samples,
            seed: a.seed,
        };
        let exact = p_exact.zip(q_exact).map(|(x, y)| (x - y).abs());
        rows.push(estimate_row("TV", &tv, exact));
        if let Some(t) = exact {
            tally.record("tv_within_5_sigma", tv.within(t, SIGMA_BAND), || {
                format!("TV = {} +- {}, expected {t}", tv.value, tv.stderr)
            });
        }
    }
    let mut config = Map::new();
    config.insert("n".into(), json!(a.n));
    config.insert("q".into(), json!(profile.q()));
    config.insert("memory".into(), json!(a.memory));
    config.insert("algorithm".into(), json!(a.algorithm.as_str()));
    config.insert("samples".into(), json!(a.samples));
    config.insert("seed".into(), json!(a.seed));
    config.insert(
        "source".into(),
        json!(match a.source {
            SourceArg::P => "p",
            SourceArg::Q => "q",
            SourceArg::Both => "both",
        }),
    );
    Ok(Report {
        command: "simulate",
        config,
        rows,
        checks: tally.finish(),
    })
}

fn run_verify(a: &VerifyArgs) -> Result<Report> {
    let checks = run_all(a.grid, a.stirling_max)?;
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                ("property", c.name.into()),
                ("points", c.points.into()),
                ("tolerance", num(c.tolerance)),
                ("worst_slack", num(c.worst_slack)),
                ("worst_at", c.worst_at.as_str().into()),
                ("passed", c.passed().into()),
            ]
        })
        .collect();
    let verdicts = checks
        .iter()
        .map(|c| Check {
            name: c.name.to_string(),
            passed: c.passed(),
            detail: format!("worst slack {} at {}", c.worst_slack, c.worst_at),
        })
        .collect();
    let mut config = Map::new();
    config.insert("grid".into(), json!(a.grid));
    config.insert("stirling_max".into(), json!(a.stirling_max));
    Ok(Report {
        command: "verify-functions",
        config,
        rows,
        checks: verdicts,
    })
}
