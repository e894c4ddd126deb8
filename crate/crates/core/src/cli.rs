//! Command line front end: argument model, dispatch and artifact emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cores::{enumerate_cores, extract_core, n_score, CoreParams};
use crate::error::{domain, Error, Result};
use crate::extremal::{bound_inducibility, max_induced_c4};
use crate::graph::{choose2, exact_tail_probability, expected_induced_c4, SimpleGraph};
use crate::meanfield::{gap_report, solve_ansatz, solve_general, MeanfieldSolution};
use crate::montecarlo::estimate_tail;
use crate::rates::{
    m_k, phi_bounds, plant_sizes, planting_log_prob_lower, rate_theorem, regime_midpoint,
    PlantFamily, RegimeLabel,
};
use crate::subcube::phi_bruteforce;
use crate::varsolve::solve_discrete;

#[derive(Debug, Parser)]
#[command(
    name = "c4tail",
    version,
    about = "Upper tails of induced 4-cycle counts in G(n,p)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Ansatz,
    General,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate report for (n, p, delta).
    Rate(RateArgs),
    /// Phase-diagram table over a log-spaced p grid.
    Sweep(SweepArgs),
    /// Brute-force Phi_X at tiny n.
    Phi(PhiArgs),
    /// Plant sizes and planting lower bounds.
    Plant(PlantArgs),
    /// Extremal induced-C4 counts against the inducibility bound.
    Extremal(ExtremalArgs),
    /// Core extraction and census.
    #[command(subcommand)]
    Core(CoreCommand),
    /// Discrete variational solver.
    Varsolve(VarsolveArgs),
    /// Mean-field solvers.
    Meanfield(MeanfieldArgs),
    /// Family rate against the mean-field rate.
    Gap(GapArgs),
    /// Monte Carlo tail estimate.
    Tail(TailArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// `lo:hi:steps`; bounds are probabilities or `n^e` exponents.
    #[arg(long = "p-grid")]
    pub p_grid: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PhiArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    /// Restrict to planted subgraphs.
    #[arg(long)]
    pub one_supcube: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PlantArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Largest family index reported.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtremalArgs {
    #[arg(long)]
    pub n: usize,
    /// Edge count; all of `n..=min(12, C(n,2))` when omitted.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_degree: usize,
}

#[derive(Debug, Subcommand)]
pub enum CoreCommand {
    /// Run the deletion procedure on an edge-list file.
    Extract(ExtractArgs),
    /// Count core isomorphism classes.
    Census(CensusArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CensusArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: f64,
    #[arg(long)]
    pub p: f64,
    /// Override for Phi_X(delta+eps); defaults to the upper bracket value.
    #[arg(long)]
    pub phi_hat: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct VarsolveArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Ansatz)]
    pub method: MethodArg,
}

#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    /// Regime index; p defaults to the geometric midpoint of its interval.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TailArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add the exhaustive oracle value (n <= 7).
    #[arg(long)]
    pub exact: bool,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_format: Format,
    pub output_path: Option<PathBuf>,
}

/// A finished artifact before formatting.
#[derive(Debug, Clone)]
pub enum Artifact {
    Json(Value),
    Table {
        header: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    Graph(SimpleGraph),
}

/// Rounds every non-integral number to 12 significant digits.
pub fn round12(v: Value) -> Value {
    match v {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
            json!(r)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round12).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round12(v))).collect()),
        other => other,
    }
}

fn csv_cell(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Renders an artifact in the requested format with the config echoed.
pub fn render(config: &RunConfig, artifact: &Artifact) -> String {
    let cfg = to_value(config);
    match (config.output_format, artifact) {
        (Format::Json, a) => {
            let result = match a {
                Artifact::Json(v) => v.clone(),
                Artifact::Table { header, rows } => Value::Array(
                    rows.iter()
                        .map(|r| {
                            Value::Object(header.iter().cloned().zip(r.iter().cloned()).collect())
                        })
                        .collect(),
                ),
                Artifact::Graph(g) => to_value(g),
            };
            let doc = json!({ "config": cfg, "result": round12(result) });
            let mut s = serde_json::to_string_pretty(&doc).expect("json renders");
            s.push('\n');
            s
        }
        (Format::Csv, a) => {
            let mut s = format!(
                "# config: {}\n",
                serde_json::to_string(&cfg).expect("json renders")
            );
            match a {
                Artifact::Table { header, rows } => {
                    s.push_str(&header.join(","));
                    s.push('\n');
                    for r in rows {
                        let cells: Vec<String> =
                            r.iter().map(|v| csv_cell(&round12(v.clone()))).collect();
                        s.push_str(&cells.join(","));
                        s.push('\n');
                    }
                }
                Artifact::Json(v) => {
                    let flat: Map<String, Value> = match round12(v.clone()) {
                        Value::Object(o) => o,
                        other => std::iter::once(("value".to_string(), other)).collect(),
                    };
                    let keys: Vec<&String> = flat.keys().collect();
                    s.push_str(
                        &keys
                            .iter()
                            .map(|k| k.as_str())
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    s.push('\n');
                    let cells: Vec<String> = flat
                        .values()
                        .map(|v| match v {
                            Value::Array(_) | Value::Object(_) => {
                                csv_cell(&Value::String(v.to_string()))
                            }
                            other => csv_cell(other),
                        })
                        .collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                Artifact::Graph(g) => s.push_str(&g.to_edge_list()),
            }
            s
        }
    }
}

/// Parses a grid bound: a probability or `n^e`.
pub fn parse_p_token(tok: &str, n: usize) -> Result<f64> {
    let t = tok.trim();
    let v = if let Some(e) = t.strip_prefix("n^") {
        let e: f64 = e
            .trim_matches(|c| c == '(' || c == ')')
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in {t:?}")))?;
        (n as f64).powf(e)
    } else {
        t.parse()
            .map_err(|_| Error::Parse(format!("bad grid bound {t:?}")))?
    };
    Ok(v)
}

/// Parses `lo:hi:steps` into log-spaced probabilities.
pub fn parse_grid(spec: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(Error::Parse(format!(
            "grid must be lo:hi:steps, got {spec:?}"
        )));
    };
    let lo = parse_p_token(lo, n)?;
    let hi = parse_p_token(hi, n)?;
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad step count in {spec:?}")))?;
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) || steps == 0 {
        return Err(Error::Parse(format!(
            "grid needs 0 < lo <= hi < 1 and steps >= 1, got {spec:?}"
        )));
    }
    Ok(log_grid(lo, hi, steps))
}

pub fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / (steps - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub regime: String,
    pub k: Option<usize>,
    pub normalized_rate: f64,
    pub planting_bound_norm: Option<f64>,
    pub meanfield_norm: f64,
    pub ratio: f64,
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "p",
    "regime",
    "k",
    "normalized_rate",
    "planting_bound_norm",
    "meanfield_norm",
    "ratio",
];

pub fn sweep_point(n: usize, p: f64, delta: f64, eps: f64) -> Result<SweepRow> {
    let report = rate_theorem(n, p, delta, eps)?;
    let nn = n as f64;
    let norm = nn * nn * p * p * -p.ln();
    let (planting, mf, ratio) = match report.regime.label {
        RegimeLabel::SparseK(k) => {
            let g = gap_report(n, p, delta)?;
            let b = planting_log_prob_lower(n, p, delta, eps, PlantFamily::Bipartite(k))
                .ok()
                .map(|v| -v / norm);
            (b, g.meanfield_norm, g.ratio)
        }
        RegimeLabel::SparseDense => {
            let ex = expected_induced_c4(n, p)?;
            let b = (1.0 + eps) * m_k(0, delta, eps, ex) * -p.ln() / norm;
            (Some(b), (delta / 2.0).sqrt(), 1.0)
        }
        RegimeLabel::Dense => {
            let b = planting_log_prob_lower(n, p, delta, eps, PlantFamily::Hub)?;
            (Some(-b / norm), report.normalized_rate, 1.0)
        }
    };
    Ok(SweepRow {
        p,
        regime: report.regime.label.to_string(),
        k: report.regime.k,
        normalized_rate: report.normalized_rate,
        planting_bound_norm: planting,
        meanfield_norm: mf,
        ratio,
    })
}

/// One row per grid point, in grid order.
pub fn sweep(n: usize, delta: f64, eps: f64, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&p| sweep_point(n, p, delta, eps))
        .collect()
}

fn sweep_table(rows: &[SweepRow]) -> Artifact {
    let header = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                json!(r.p),
                json!(r.regime),
                json!(r.k),
                json!(r.normalized_rate),
                json!(r.planting_bound_norm),
                json!(r.meanfield_norm),
                json!(r.ratio),
            ]
        })
        .collect();
    Artifact::Table { header, rows }
}

fn solution_value(s: &MeanfieldSolution) -> Value {
    let mut v = to_value(s);
    if let Value::Object(o) = &mut v {
        o.insert("normalized_cost".into(), json!(s.normalized_cost()));
    }
    v
}

fn params_of<T: Serialize>(args: &T) -> BTreeMap<String, Value> {
    match to_value(args) {
        Value::Object(o) => o.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

/// Runs one parsed command and returns its config and artifact.
pub fn execute(cli: &Cli) -> Result<(RunConfig, Artifact)> {
    let (name, params, seed, default_format, artifact) = match &cli.command {
        Command::Rate(a) => {
            let r = rate_theorem(a.n, a.p, a.delta, a.eps)?;
            (
                "rate",
                params_of(a),
                0,
                Format::Json,
                Artifact::Json(to_value(&r)),
            )
        }
        Command::Sweep(a) => {
            let grid = parse_grid(&a.p_grid, a.n)?;
            let rows = sweep(a.n, a.delta, a.eps, &grid)?;
            ("sweep", params_of(a), 0, Format::Csv, sweep_table(&rows))
        }
        Command::Phi(a) => {
            let v = phi_bruteforce(a.n, a.p, a.delta, a.one_supcube)?;
            let phi = if v.is_finite() {
                json!(v)
            } else {
                json!("inf")
            };
            let (lo, hi, _) = phi_bounds(a.n, a.p, a.delta, 0.0)?;
            let out = json!({
                "phi": phi,
                "expected": expected_induced_c4(a.n, a.p)?,
                "asymptotic_bracket": [lo, hi],
                "mode": if a.one_supcube { "one-supcube" } else { "general" },
            });
            ("phi", params_of(a), 0, Format::Json, Artifact::Json(out))
        }
        Command::Plant(a) => {
            let sizes = plant_sizes(a.n, a.p, a.delta, a.eps, a.k)?;
            let mut families = Vec::new();
            for k in 2..=a.k.max(2) {
                let entry = match planting_log_prob_lower(
                    a.n,
                    a.p,
                    a.delta,
                    a.eps,
                    PlantFamily::Bipartite(k),
                ) {
                    Ok(v) => json!({ "k": k, "log_prob_lower": v }),
                    Err(e) => json!({ "k": k, "error": e.to_string() }),
                };
                families.push(entry);
            }
            let hub = planting_log_prob_lower(a.n, a.p, a.delta, a.eps, PlantFamily::Hub)?;
            let out = json!({ "sizes": sizes, "families": families, "hub_log_prob_lower": hub });
            ("plant", params_of(a), 0, Format::Json, Artifact::Json(out))
        }
        Command::Extremal(a) => {
            let ms: Vec<usize> = match a.m {
                Some(m) => vec![m],
                None => (a.n..=12.min(choose2(a.n))).collect(),
            };
            let mut rows = Vec::new();
            for m in ms {
                let rec = max_induced_c4(a.n, m, a.min_degree)?;
                let bound = bound_inducibility(a.n, m)?;
                rows.push(vec![
                    json!(a.n),
                    json!(m),
                    json!(a.min_degree),
                    json!(rec.max_count),
                    json!(bound),
                    json!(rec.max_count as f64 == bound),
                ]);
            }
            let header = ["n", "m", "min_degree", "max_count", "bound", "tight"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            (
                "extremal",
                params_of(a),
                0,
                Format::Csv,
                Artifact::Table { header, rows },
            )
        }
        Command::Core(CoreCommand::Extract(a)) => {
            let text = fs::read_to_string(&a.graph)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", a.graph.display())))?;
            let g = SimpleGraph::parse_edge_list(&text)?;
            let core = extract_core(&g, a.s, a.p)?;
            let art = match cli.format {
                Some(Format::Json) => Artifact::Json(json!({
                    "graph": core,
                    "n_score_before": n_score(&g, a.p),
                    "n_score_after": n_score(&core, a.p),
                })),
                _ => Artifact::Graph(core),
            };
            ("core extract", params_of(a), 0, Format::Csv, art)
        }
        Command::Core(CoreCommand::Census(a)) => {
            let params = match a.phi_hat {
                Some(phi_hat) => {
                    let params = CoreParams {
                        eps: a.eps,
                        delta: a.delta,
                        k: a.k,
                        n: a.n,
                        p: a.p,
                        phi_hat,
                    };
                    params.validate()?;
                    params
                }
                None => CoreParams::with_default_phi(a.eps, a.delta, a.k, a.n, a.p)?,
            };
            let report = enumerate_cores(a.n, a.m, &params)?;
            let out = json!({ "params": params, "report": report });
            (
                "core census",
                params_of(a),
                0,
                Format::Json,
                Artifact::Json(out),
            )
        }
        Command::Varsolve(a) => {
            let s = solve_discrete(a.n, a.p, a.delta, a.eps, a.r)?;
            (
                "varsolve",
                params_of(a),
                0,
                Format::Json,
                Artifact::Json(to_value(&s)),
            )
        }
        Command::Meanfield(a) => {
            let out = match a.method {
                MethodArg::Ansatz => solution_value(&solve_ansatz(a.n, a.p, a.delta)?),
                MethodArg::General => solution_value(&solve_general(a.n, a.p, a.delta, a.seed)?),
                MethodArg::Both => json!({
                    "ansatz": solution_value(&solve_ansatz(a.n, a.p, a.delta)?),
                    "general": solution_value(&solve_general(a.n, a.p, a.delta, a.seed)?),
                }),
            };
            (
                "meanfield",
                params_of(a),
                a.seed,
                Format::Json,
                Artifact::Json(out),
            )
        }
        Command::Gap(a) => {
            let p = match (a.p, a.k) {
                (Some(p), _) => p,
                (None, Some(k)) if k >= 2 => regime_midpoint(a.n, k),
                (None, Some(k)) => return domain(format!("regime index must be >= 2, got {k}")),
                (None, None) => return Err(Error::Parse("gap needs --k or --p".into())),
            };
            let g = gap_report(a.n, p, a.delta)?;
            let mut v = to_value(&g);
            if let Value::Object(o) = &mut v {
                o.insert("p".into(), json!(p));
            }
            ("gap", params_of(a), 0, Format::Json, Artifact::Json(v))
        }
        Command::Tail(a) => {
            let est = estimate_tail(a.n, a.p, a.delta, a.trials, a.seed)?;
            let mut v = to_value(&est);
            if a.exact {
                let exact = exact_tail_probability(a.n, a.p, est.threshold)?;
                if let Value::Object(o) = &mut v {
                    o.insert("exact".into(), json!(exact.probability));
                    o.insert(
                        "exact_in_ci".into(),
                        json!(est.ci_low <= exact.probability && exact.probability <= est.ci_high),
                    );
                }
            }
            (
                "tail",
                params_of(a),
                a.seed,
                Format::Json,
                Artifact::Json(v),
            )
        }
    };
    let config = RunConfig {
        subcommand: name.to_string(),
        parameters: params,
        seed,
        output_format: cli.format.unwrap_or(default_format),
        output_path: cli.out.clone(),
    };
    Ok((config, artifact))
}

/// Parses `args`, runs the command and writes the artifact; returns the exit status.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok((config, artifact)) => {
            let text = render(&config, &artifact);
            match &config.output_path {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                        return 1;
                    }
                }
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
