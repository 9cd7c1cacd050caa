//! Instance documents, deterministic instance generation, an ASCII
//! timeline renderer, and the command dispatch behind the `linepatrol`
//! binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use linepatrol::continuous::{solve_continuous, ContinuousSolution};
use linepatrol::equilibrium::{self, EquilibriumResult};
use linepatrol::model::{
    format_rational, parse_rational, InstanceError, Mode, MixedStrategy, ProblemInstance,
    TargetTrack,
};
use linepatrol::partition::build_partitions;
use linepatrol::scalar::{Rational, Scalar};
use linepatrol::verify;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("document error at line {line}, column {column}: {message}")]
    Document {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field {field}: `{text}` is not a decimal or p/q number")]
    Number { field: String, text: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("solver failed: {0}")]
    Solve(#[from] equilibrium::EquilibriumError),
    #[error("{0}")]
    Oracle(#[from] verify::VerifyError),
    #[error("verification failed:\n{0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

// ---------------------------------------------------------------------------
// Instance documents

/// A number in a document: a decimal string, `"p/q"`, or a bare integer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberDoc {
    Int(i64),
    Text(String),
}

impl NumberDoc {
    fn parse(&self, field: &str) -> Result<Rational, CliError> {
        let text = match self {
            NumberDoc::Text(s) => s.clone(),
            NumberDoc::Int(v) => v.to_string(),
        };
        parse_rational(&text).ok_or_else(|| CliError::Number {
            field: field.to_string(),
            text,
        })
    }

    fn exact(r: &Rational) -> Self {
        NumberDoc::Text(format_rational(r))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetDoc {
    pub positions: Vec<NumberDoc>,
    pub weights: Vec<NumberDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub mode: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M")]
    pub space_max: NumberDoc,
    #[serde(rename = "K")]
    pub patrols: usize,
    #[serde(rename = "D")]
    pub speed: NumberDoc,
    #[serde(rename = "R")]
    pub radius: NumberDoc,
    pub targets: Vec<TargetDoc>,
}

impl InstanceDoc {
    pub fn to_instance(&self) -> Result<ProblemInstance, CliError> {
        let mode = match self.mode.as_str() {
            "discrete" => Mode::Discrete,
            "continuous" => Mode::Continuous,
            other => {
                return Err(CliError::Document {
                    line: 0,
                    column: 0,
                    message: format!("unknown mode `{other}` (discrete|continuous)"),
                })
            }
        };
        let mut targets = Vec::with_capacity(self.targets.len());
        for (id, t) in self.targets.iter().enumerate() {
            let positions = t
                .positions
                .iter()
                .map(|n| n.parse(&format!("targets[{id}].positions")))
                .collect::<Result<Vec<_>, _>>()?;
            let weights = t
                .weights
                .iter()
                .map(|n| n.parse(&format!("targets[{id}].weights")))
                .collect::<Result<Vec<_>, _>>()?;
            targets.push(TargetTrack { id, positions, weights });
        }
        Ok(ProblemInstance::new(
            self.horizon,
            self.space_max.parse("M")?,
            self.patrols,
            self.speed.parse("D")?,
            self.radius.parse("R")?,
            targets,
            mode,
        )?)
    }

    pub fn from_instance(instance: &ProblemInstance) -> Self {
        Self {
            mode: match instance.mode {
                Mode::Discrete => "discrete".to_string(),
                Mode::Continuous => "continuous".to_string(),
            },
            horizon: instance.horizon,
            space_max: NumberDoc::exact(&instance.space_max),
            patrols: instance.patrol_count,
            speed: NumberDoc::exact(&instance.speed),
            radius: NumberDoc::exact(&instance.radius),
            targets: instance
                .targets
                .iter()
                .map(|t| TargetDoc {
                    positions: t.positions.iter().map(NumberDoc::exact).collect(),
                    weights: t.weights.iter().map(NumberDoc::exact).collect(),
                })
                .collect(),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance, CliError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| CliError::Document {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_instance()
}

pub fn serialize_instance(instance: &ProblemInstance) -> String {
    let doc = InstanceDoc::from_instance(instance);
    serde_json::to_string_pretty(&doc).expect("instance documents always serialize")
}

// ---------------------------------------------------------------------------
// Random instance generation

#[derive(Debug, Clone, Args)]
pub struct GenParams {
    /// RNG seed; equal seeds give byte-identical documents.
    #[arg(long)]
    pub seed: u64,
    /// Number of rounds.
    #[arg(long = "T", default_value_t = 3)]
    pub horizon: usize,
    /// Largest patrol position.
    #[arg(long = "M", default_value_t = 10)]
    pub space_max: u64,
    /// Number of patrols.
    #[arg(long = "K", default_value_t = 1)]
    pub patrols: usize,
    /// Number of targets.
    #[arg(long = "n", default_value_t = 2)]
    pub targets: usize,
    /// Speed is drawn uniformly from 0..=d-max.
    #[arg(long, default_value_t = 3)]
    pub d_max: u64,
    /// Radius is drawn uniformly from 0..=r-max.
    #[arg(long, default_value_t = 2)]
    pub r_max: u64,
    /// Weights are drawn uniformly from 1..=w-max.
    #[arg(long, default_value_t = 3)]
    pub w_max: u64,
    /// Denominator bound for target positions (1 = integers).
    #[arg(long, default_value_t = 1)]
    pub denominator: u64,
    /// Emit a continuous-mode instance.
    #[arg(long, default_value_t = false)]
    pub continuous: bool,
}

/// Deterministic random instance; positions stay inside `[0, M]`.
pub fn generate_instance(params: &GenParams) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let horizon = params.horizon.max(1);
    let space = params.space_max;
    let denominator = params.denominator.max(1);
    let targets = (0..params.targets.max(1))
        .map(|id| {
            let positions = (0..horizon)
                .map(|_| {
                    let den = rng.gen_range(1..=denominator);
                    let num = rng.gen_range(0..=space * den);
                    Rational::new(num.into(), den.into())
                })
                .collect();
            let weights = (0..horizon)
                .map(|_| Rational::from_integer(rng.gen_range(1..=params.w_max.max(1)).into()))
                .collect();
            TargetTrack { id, positions, weights }
        })
        .collect();
    let speed = Rational::from_integer(rng.gen_range(0..=params.d_max).into());
    let radius = Rational::from_integer(rng.gen_range(0..=params.r_max).into());
    ProblemInstance::new(
        horizon,
        Rational::from_integer(space.into()),
        params.patrols.max(1),
        speed,
        radius,
        targets,
        if params.continuous { Mode::Continuous } else { Mode::Discrete },
    )
    .expect("generated instances are always valid")
}

// ---------------------------------------------------------------------------
// Result documents

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportDoc {
    pub probability: String,
    /// `paths[k][t-1]` is patrol `k`'s position at round `t`.
    pub paths: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowEdgeDoc {
    pub from: String,
    pub to: String,
    pub flow: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDoc {
    pub round: usize,
    pub edges: Vec<FlowEdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDoc {
    pub value: String,
    pub support: Vec<SupportDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<FlowDoc>>,
}

fn scalar_str<S: Scalar>(v: &S) -> String {
    if S::EXACT {
        format_rational(&v.to_rat())
    } else {
        let f = v.to_rat().to_f64().unwrap_or(f64::NAN);
        format!("{f:.12}")
    }
}

fn vertex_name(v: linepatrol::daygraph::Vertex) -> String {
    match v {
        linepatrol::daygraph::Vertex::Source => "source".to_string(),
        linepatrol::daygraph::Vertex::Sink => "sink".to_string(),
        linepatrol::daygraph::Vertex::Grid { col, row } => format!("v({},{})", col + 1, row + 1),
    }
}

pub fn solve_doc<S: Scalar>(
    instance: &ProblemInstance,
    result: &EquilibriumResult<S>,
    with_flows: bool,
) -> SolveDoc {
    let support = result
        .strategy
        .support
        .iter()
        .map(|(s, p)| SupportDoc {
            probability: scalar_str(p),
            paths: s
                .paths
                .iter()
                .map(|path| path.iter().map(|m| m.to_string()).collect())
                .collect(),
        })
        .collect();
    let flows = with_flows.then(|| {
        let partitions = build_partitions(instance);
        (1..=instance.horizon)
            .map(|t| {
                let g = linepatrol::daygraph::build_day_graph(instance, &partitions, t);
                let edges = g
                    .edges
                    .iter()
                    .zip(&result.flows[t - 1].values)
                    .filter(|(_, v)| v.is_pos())
                    .map(|(e, v)| FlowEdgeDoc {
                        from: vertex_name(e.from),
                        to: vertex_name(e.to),
                        flow: scalar_str(v),
                    })
                    .collect();
                FlowDoc { round: t, edges }
            })
            .collect()
    });
    SolveDoc {
        value: scalar_str(&result.value),
        support,
        flows,
    }
}

pub fn continuous_doc<S: Scalar>(sol: &ContinuousSolution<S>) -> SolveDoc {
    SolveDoc {
        value: scalar_str(&sol.value),
        support: sol
            .support
            .iter()
            .map(|(paths, p)| SupportDoc {
                probability: scalar_str(p),
                paths: paths
                    .iter()
                    .map(|path| path.iter().map(format_rational).collect())
                    .collect(),
            })
            .collect(),
        flows: None,
    }
}

// ---------------------------------------------------------------------------
// ASCII timeline

/// A T-column chart of the schedule: `*` marks targets, digits mark the
/// patrols of each support strategy, `+` labels rows that start an interval
/// in some round.
pub fn render_timeline(instance: &ProblemInstance, doc: &SolveDoc) -> String {
    let partitions = build_partitions(instance);
    let horizon = instance.horizon;
    let mut levels: Vec<i64> = Vec::new();
    let mut boundary: Vec<i64> = Vec::new();
    for t in 1..=horizon {
        for iv in &partitions.round(t).intervals {
            if let Ok(v) = i64::try_from(&iv.lo_int) {
                levels.push(v);
                boundary.push(v);
            }
        }
    }
    let clamp_hi = i64::try_from(&instance.space_max_int()).unwrap_or(i64::MAX);
    for track in &instance.targets {
        for pos in &track.positions {
            let v = pos.floor().to_integer();
            if let Ok(v) = i64::try_from(&v) {
                levels.push(v.clamp(0, clamp_hi));
            }
        }
    }
    for s in &doc.support {
        for path in &s.paths {
            for m in path {
                if let Some(r) = parse_rational(m) {
                    if let Ok(v) = i64::try_from(&r.floor().to_integer()) {
                        levels.push(v.clamp(0, clamp_hi));
                    }
                }
            }
        }
    }
    levels.push(0);
    levels.push(clamp_hi);
    levels.sort_unstable();
    levels.dedup();
    while levels.len() > 24 {
        // Thin out interior rows, keeping both ends.
        let last = levels.len() - 1;
        let mut thinned = Vec::with_capacity(levels.len() / 2 + 2);
        for (i, v) in levels.iter().enumerate() {
            if i == 0 || i == last || i % 2 == 0 {
                thinned.push(*v);
            }
        }
        thinned.dedup();
        if thinned.len() == levels.len() {
            break;
        }
        levels = thinned;
    }
    levels.reverse();

    let cell_width = (2 + doc.support.len().min(9)).max(4);
    let mut out = String::new();
    let _ = write!(out, "{:>8} ", "pos");
    for t in 1..=horizon {
        let _ = write!(out, "|{:^cell_width$}", format!("t={t}"));
    }
    out.push_str("|\n");
    for &level in &levels {
        let marker = if boundary.contains(&level) { '+' } else { ' ' };
        let _ = write!(out, "{level:>7}{marker} ");
        for t in 1..=horizon {
            let mut cell = String::new();
            let here_target = instance.targets.iter().any(|track| {
                track.positions[t - 1].floor().to_integer() == level.into()
                    && !track.weights[t - 1].is_zero()
            });
            if here_target {
                cell.push('*');
            }
            for (i, s) in doc.support.iter().enumerate() {
                let on_level = s.paths.iter().any(|path| {
                    parse_rational(&path[t - 1])
                        .map(|r| r.floor().to_integer() == level.into())
                        .unwrap_or(false)
                });
                if on_level {
                    let c = char::from_digit((i % 10) as u32, 10).unwrap();
                    cell.push(c);
                }
            }
            if cell.is_empty() {
                cell.push('.');
            }
            if cell.len() > cell_width {
                cell.truncate(cell_width);
            }
            let _ = write!(out, "|{cell:^cell_width$}");
        }
        out.push_str("|\n");
    }
    out.push('\n');
    if doc.support.is_empty() {
        out.push_str("(empty support)\n");
    }
    for (i, s) in doc.support.iter().enumerate() {
        let _ = writeln!(out, "  strategy {i}: p={}", s.probability);
    }
    let _ = writeln!(out, "  value: {}", doc.value);
    out
}

// ---------------------------------------------------------------------------
// Command dispatch

#[derive(Debug, Parser)]
#[command(name = "linepatrol", version, about = "Minimax patrol schedules on a line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print value and support.
    Solve {
        file: PathBuf,
        /// Solve the LP in floating point instead of exact rationals.
        #[arg(long)]
        float: bool,
        /// Write the assembled LP in CPLEX LP text format to this path.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Include per-round positive flows in the output document.
        #[arg(long)]
        flows: bool,
    },
    /// Solve, then replay the result against the attacker's best response
    /// (and the brute-force oracle when the instance is small enough).
    Verify {
        file: PathBuf,
        #[arg(long)]
        float: bool,
        /// Gap tolerance for float-mode verification.
        #[arg(long, default_value = "0.000001")]
        tolerance: String,
        /// Enumeration cap for the brute-force oracle.
        #[arg(long, default_value_t = 50_000)]
        cap: usize,
    },
    /// Brute-force game value (small instances only).
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        cap: usize,
    },
    /// Emit a random instance document.
    Gen(GenParams),
    /// Solve and draw an ASCII timeline of the schedule.
    Render { file: PathBuf },
}

fn read_instance(path: &PathBuf) -> Result<ProblemInstance, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

fn dump_lp(instance: &ProblemInstance, path: &PathBuf) -> Result<(), CliError> {
    let partitions = build_partitions(instance);
    let graphs: Vec<_> = (1..=instance.horizon)
        .map(|t| linepatrol::daygraph::build_day_graph(instance, &partitions, t))
        .collect();
    let (model, layout) = equilibrium::assemble_lp(instance, &partitions, &graphs);
    let mut names = vec![String::new(); model.num_vars];
    for (ti, g) in graphs.iter().enumerate() {
        for e in 0..g.edges.len() {
            names[layout.round_offsets[ti] + e] = format!("f{}_e{}", ti + 1, e);
        }
    }
    names[layout.u] = "u".to_string();
    fs::write(path, model.to_lp_format(&names)).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn solve_any(
    instance: &ProblemInstance,
    float: bool,
    flows: bool,
) -> Result<(SolveDoc, Option<MixedStrategy<Rational>>), CliError> {
    match (instance.mode, float) {
        (Mode::Discrete, false) => {
            let result = equilibrium::solve::<Rational>(instance)?;
            let strategy = result.strategy.clone();
            Ok((solve_doc(instance, &result, flows), Some(strategy)))
        }
        (Mode::Discrete, true) => {
            let result = equilibrium::solve::<f64>(instance)?;
            let strategy = result.strategy.to_exact();
            Ok((solve_doc(instance, &result, flows), Some(strategy)))
        }
        (Mode::Continuous, false) => {
            let sol = solve_continuous::<Rational>(instance)?;
            Ok((continuous_doc(&sol), None))
        }
        (Mode::Continuous, true) => {
            let sol = solve_continuous::<f64>(instance)?;
            Ok((continuous_doc(&sol), None))
        }
    }
}

fn verification_report(doc: &SolveDoc, check: &verify::EquilibriumCheck) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "value {}", doc.value);
    let _ = writeln!(
        s,
        "probability sum {} [{}]",
        format_rational(&check.probability_sum),
        if check.probability_ok { "ok" } else { "FAIL" }
    );
    let _ = writeln!(
        s,
        "support feasibility [{}]",
        if check.feasible_ok { "ok" } else { "FAIL" }
    );
    for d in &check.feasibility_details {
        let _ = writeln!(s, "  - {d}");
    }
    let _ = writeln!(
        s,
        "best response {} gap {} [{}]",
        format_rational(&check.best_response),
        format_rational(&check.best_response_gap),
        if check.best_response_ok { "ok" } else { "FAIL" }
    );
    match (&check.oracle_value, &check.oracle_gap, check.oracle_ok) {
        (Some(v), Some(gap), Some(ok)) => {
            let _ = writeln!(
                s,
                "oracle {} gap {} [{}]",
                format_rational(v),
                format_rational(gap),
                if ok { "ok" } else { "FAIL" }
            );
        }
        _ => {
            let _ = writeln!(s, "oracle skipped (instance above enumeration cap)");
        }
    }
    let _ = write!(s, "{}", if check.passed() { "PASS" } else { "FAIL" });
    s
}

fn run_command_inner(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { file, float, dump_lp: dump, flows } => {
            let instance = read_instance(&file)?;
            if let Some(path) = &dump {
                let target = if instance.mode == Mode::Continuous {
                    linepatrol::continuous::scale_instance(&instance).0
                } else {
                    instance.clone()
                };
                dump_lp(&target, path)?;
            }
            let (doc, _) = solve_any(&instance, float, flows)?;
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }
        Command::Verify { file, float, tolerance, cap } => {
            let instance = read_instance(&file)?;
            let tol = parse_rational(&tolerance).ok_or_else(|| CliError::Number {
                field: "--tolerance".into(),
                text: tolerance.clone(),
            })?;
            let tol = if float { tol } else { Rational::zero() };
            match instance.mode {
                Mode::Discrete => {
                    let (doc, strategy) = solve_any(&instance, float, false)?;
                    let strategy = strategy.expect("discrete solve returns a strategy");
                    let value = parse_rational(&doc.value).expect("solver emits numbers");
                    let check =
                        verify::check_equilibrium(&instance, &value, &strategy, cap, &tol);
                    let report = verification_report(&doc, &check);
                    let _ = writeln!(out, "{report}");
                    if check.passed() {
                        Ok(())
                    } else {
                        Err(CliError::VerificationFailed(report))
                    }
                }
                Mode::Continuous => {
                    let sol = solve_continuous::<Rational>(&instance)?;
                    let support: verify::RationalSupport = sol
                        .support
                        .iter()
                        .map(|(paths, p)| (paths.clone(), p.clone()))
                        .collect();
                    let report = verify::attacker_best_response(&instance, &support);
                    let gap = (report.value.clone() - &sol.value).abs();
                    let ok = gap <= tol;
                    let _ = writeln!(
                        out,
                        "value {}\nbest response {}\ngap {}\n{}",
                        format_rational(&sol.value),
                        format_rational(&report.value),
                        format_rational(&gap),
                        if ok { "PASS" } else { "FAIL" },
                    );
                    if ok {
                        Ok(())
                    } else {
                        Err(CliError::VerificationFailed(format!(
                            "best response gap {}",
                            format_rational(&gap)
                        )))
                    }
                }
            }
        }
        Command::Oracle { file, cap } => {
            let instance = read_instance(&file)?;
            let instance = if instance.mode == Mode::Continuous {
                linepatrol::continuous::scale_instance(&instance).0
            } else {
                instance
            };
            let value = verify::matrix_game_value(&instance, cap)?;
            let _ = writeln!(out, "{}", format_rational(&value));
            Ok(())
        }
        Command::Gen(params) => {
            let instance = generate_instance(&params);
            let _ = writeln!(out, "{}", serialize_instance(&instance));
            Ok(())
        }
        Command::Render { file } => {
            let instance = read_instance(&file)?;
            let rendered = match instance.mode {
                Mode::Discrete => {
                    let (doc, _) = solve_any(&instance, false, false)?;
                    render_timeline(&instance, &doc)
                }
                Mode::Continuous => {
                    let scaled = linepatrol::continuous::scale_instance(&instance).0;
                    let (sdoc, _) = solve_any(&scaled, false, false)?;
                    render_timeline(&scaled, &sdoc)
                }
            };
            let _ = write!(out, "{rendered}");
            Ok(())
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 usage, 2 failure.
pub fn run_command<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run_command_inner(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
