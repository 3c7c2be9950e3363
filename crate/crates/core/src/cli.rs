//! Command-line front end: a TOML run configuration naming bodies, a
//! measure and role assignments, plus subcommands that print values or
//! write CSV/JSON.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 a failed
//! verification or a contradictory comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    comparison_check, default_t_grid, log_grid, rate_sweep_first, rate_sweep_gaussian_second, rate_sweep_second,
    tail_rate, RateSweep,
};
use crate::bodies2d::{inradius, minkowski_combine, Descriptor, SupportBody2D, Vec2};
use crate::densities::{normalization_constant, MeasureSpec, PhiFunction, PhiKind};
use crate::error::Error;
use crate::log_value::LogValue;
use crate::mixed::{gaussian_second, mixed_first, mixed_second, MixedValue};
use crate::oracles::{cross_check, test_matrix, StepSchedule, TestCase};

/// Shipped configuration, used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

const DEFAULT_VERIFY_TOL: f64 = 1e-4;
/// The second-order oracle differences twice, so it gets ten times the slack.
const SECOND_TOL_FACTOR: f64 = 10.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodyDoc {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Minkowski combination of other named bodies.
    Sum {
        terms: Vec<TermDoc>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coef: f64,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub phi: PhiKind,
    /// Name of the gauge body `L`.
    pub gauge: String,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Permits `phi = { kind = "zero" }` (Lebesgue measure).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub debug_zero: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolesDoc {
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepArg {
    First,
    Second,
    Gauss,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SweepArg>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// The document as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub bodies: BTreeMap<String, BodyDoc>,
    pub measure: MeasureDoc,
    #[serde(default)]
    pub roles: RolesDoc,
    #[serde(default)]
    pub params: ParamsDoc,
}

/// A validated configuration: every body constructed, the measure built.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub doc: ConfigDoc,
    pub bodies: BTreeMap<String, SupportBody2D>,
    pub measure: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Syntax(String),
    /// Semantic error with the offending key path.
    Invalid { path: String, message: String },
    Compute(Error),
    Assertion(String),
    Io(String),
}

impl CliError {
    fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Invalid {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax(_) | CliError::Invalid { .. } | CliError::Io(_) => EXIT_INPUT,
            CliError::Assertion(_) | CliError::Compute(Error::InvariantViolation(_)) => EXIT_ASSERTION,
            CliError::Compute(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Compute(_) => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Syntax(m) => write!(f, "config syntax error: {m}"),
            CliError::Invalid { path, message } => write!(f, "{path}: {message}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Assertion(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn positive(path: &str, v: Option<f64>) -> CliResult<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::invalid(path, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let doc: ConfigDoc = toml::from_str(text).map_err(|e| CliError::Syntax(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: ConfigDoc) -> CliResult<Self> {
        let mut bodies = BTreeMap::new();
        for name in doc.bodies.keys() {
            build_body(&doc.bodies, name, &mut bodies, &mut BTreeSet::new())?;
        }
        let m = &doc.measure;
        let gauge = bodies
            .get(&m.gauge)
            .cloned()
            .ok_or_else(|| CliError::invalid("measure.gauge", format!("unknown body '{}'", m.gauge)))?;
        let phi = match m.phi {
            PhiKind::Zero if m.debug_zero => PhiFunction::debug_zero(),
            PhiKind::Zero => {
                return Err(CliError::invalid("measure.phi", "kind 'zero' needs measure.debug_zero = true"))
            }
            kind => PhiFunction::from_kind(kind).map_err(|e| CliError::invalid("measure.phi", e))?,
        };
        let measure = match (m.normalized, m.c0) {
            (true, Some(_)) => return Err(CliError::invalid("measure.c0", "conflicts with normalized = true")),
            (true, None) => MeasureSpec::normalized(phi, gauge).map_err(|e| match e {
                Error::NumericalFailure { .. } => CliError::Compute(e),
                e => CliError::invalid("measure", e),
            })?,
            (false, c0) => MeasureSpec::new(phi, gauge, c0.unwrap_or(1.0)).map_err(|e| CliError::invalid("measure.c0", e))?,
        };
        let roles = [
            ("roles.K", &doc.roles.k),
            ("roles.M", &doc.roles.m),
            ("roles.A", &doc.roles.a),
            ("roles.B", &doc.roles.b),
            ("roles.C", &doc.roles.c),
        ];
        for (path, name) in roles {
            if let Some(n) = name {
                if !bodies.contains_key(n) {
                    return Err(CliError::invalid(path, format!("unknown body '{n}'")));
                }
            }
        }
        let p = &doc.params;
        positive("params.t", p.t)?;
        positive("params.t_min", p.t_min)?;
        positive("params.t_max", p.t_max)?;
        positive("params.R", p.r_factor)?;
        positive("params.tolerance", p.tolerance)?;
        if let (Some(a), Some(b)) = (p.t_min, p.t_max) {
            if a >= b {
                return Err(CliError::invalid("params.t_max", "must exceed params.t_min"));
            }
        }
        if matches!(p.points, Some(n) if n < 2) {
            return Err(CliError::invalid("params.points", "need at least two points"));
        }
        Ok(RunConfig { doc, bodies, measure })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.doc).expect("config documents serialize")
    }

    fn role(&self, path: &str, name: &Option<String>) -> CliResult<SupportBody2D> {
        let n = name
            .as_ref()
            .ok_or_else(|| CliError::invalid(path, "role is not assigned"))?;
        Ok(self.bodies[n].clone())
    }
}

fn build_body(
    docs: &BTreeMap<String, BodyDoc>,
    name: &str,
    built: &mut BTreeMap<String, SupportBody2D>,
    visiting: &mut BTreeSet<String>,
) -> CliResult<SupportBody2D> {
    if let Some(b) = built.get(name) {
        return Ok(b.clone());
    }
    let path = format!("bodies.{name}");
    if !visiting.insert(name.to_string()) {
        return Err(CliError::invalid(path, "cyclic sum definition"));
    }
    let descriptor = match &docs[name] {
        BodyDoc::Disk { radius } => Descriptor::Disk { radius: *radius },
        BodyDoc::Ellipse { a, b } => Descriptor::Ellipse { a: *a, b: *b },
        BodyDoc::Fourier { a0, cos, sin } => Descriptor::Fourier {
            a0: *a0,
            cos: cos.clone(),
            sin: sin.clone(),
        },
        BodyDoc::Polygon { vertices } => Descriptor::Polygon {
            vertices: vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect(),
        },
        BodyDoc::Sum { terms } => {
            let mut parts = Vec::with_capacity(terms.len());
            for (i, term) in terms.iter().enumerate() {
                if !docs.contains_key(&term.body) {
                    return Err(CliError::invalid(
                        format!("{path}.terms[{i}].body"),
                        format!("unknown body '{}'", term.body),
                    ));
                }
                parts.push((term.coef, build_body(docs, &term.body, built, visiting)?));
            }
            let body = minkowski_combine(&parts).map_err(|e| CliError::invalid(&path, e))?;
            visiting.remove(name);
            built.insert(name.to_string(), body.clone());
            return Ok(body);
        }
    };
    let body = SupportBody2D::new(descriptor).map_err(|e| CliError::invalid(&path, e))?;
    visiting.remove(name);
    built.insert(name.to_string(), body.clone());
    Ok(body)
}

#[derive(Parser, Debug)]
#[command(name = "mixmeas", about = "Mixed measures of planar convex bodies and their decay rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML); the shipped default when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file for CSV/JSON results; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long = "t-min", global = true)]
    pub t_min: Option<f64>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<SweepArg>,
    /// Scale factor for `compare`.
    #[arg(long = "R", global = true)]
    pub r_factor: Option<f64>,
    /// Relative tolerance for `verify`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// μ(tK; M)
    First,
    /// μ(tA; B, C)
    Second,
    /// Gaussian γ(tA; B, C)
    Gauss,
    /// Rate sweep of the first, second or Gaussian second-order measure
    Sweep,
    /// Rate sweep of the tail μ((tK)^c)
    Tail,
    /// r(K, L)
    Inradius,
    /// Compare μ(tRL; M) with μ(tK; M) and check R·L ⊆ K
    Compare,
    /// Cross-check closed forms against definition oracles
    Verify,
    /// Print the normalization constant Z
    Normalize,
}

impl Cli {
    /// Flags override `[params]`.
    fn merge(&self, p: &ParamsDoc) -> ParamsDoc {
        ParamsDoc {
            t: self.t.or(p.t),
            t_min: self.t_min.or(p.t_min),
            t_max: self.t_max.or(p.t_max),
            points: self.points.or(p.points),
            kind: self.kind.or(p.kind),
            r_factor: self.r_factor.or(p.r_factor),
            tolerance: self.tolerance.or(p.tolerance),
            out: self
                .out
                .as_ref()
                .map(|o| o.to_string_lossy().into_owned())
                .or_else(|| p.out.clone()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut config = RunConfig::parse(&text)?;
    config.doc.params = cli.merge(&config.doc.params);
    // re-validate merged flags with the same key paths
    RunConfig::from_doc(config.doc)
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cfg = load(cli)?;
    let p = cfg.doc.params.clone();
    let roles = &cfg.doc.roles;
    let t = || p.t.ok_or_else(|| CliError::invalid("params.t", "missing (use --t)"));
    let text = match cli.command {
        Command::First => {
            let (k, m) = (cfg.role("roles.K", &roles.k)?, cfg.role("roles.M", &roles.m)?);
            format_value(&mixed_first(&k, &m, &cfg.measure, t()?)?)
        }
        Command::Second => {
            let (a, b, c) = abc(&cfg)?;
            format_value(&mixed_second(&a, &b, &c, &cfg.measure, t()?)?)
        }
        Command::Gauss => {
            let (a, b, c) = abc(&cfg)?;
            format_value(&gaussian_second(&a, &b, &c, t()?)?)
        }
        Command::Sweep => {
            let grid = grid(&cfg, &p)?;
            let sweep = match p.kind.unwrap_or(SweepArg::First) {
                SweepArg::First => {
                    let (k, m) = (cfg.role("roles.K", &roles.k)?, cfg.role("roles.M", &roles.m)?);
                    rate_sweep_first(&k, &m, &cfg.measure, &grid)?
                }
                SweepArg::Second => {
                    let (a, b, c) = abc(&cfg)?;
                    rate_sweep_second(&a, &b, &c, &cfg.measure, &grid)?
                }
                SweepArg::Gauss => {
                    let (a, b, c) = abc(&cfg)?;
                    rate_sweep_gaussian_second(&a, &b, &c, &grid)?
                }
            };
            warn(err, &sweep);
            sweep_csv(&sweep)
        }
        Command::Tail => {
            let k = cfg.role("roles.K", &roles.k)?;
            let sweep = tail_rate(&k, &cfg.measure, &grid(&cfg, &p)?)?;
            warn(err, &sweep);
            sweep_csv(&sweep)
        }
        Command::Inradius => {
            let k = cfg.role("roles.K", &roles.k)?;
            let res = inradius(&k, &cfg.measure.gauge_body)?;
            let angles: Vec<String> = res
                .tangency_angles
                .iter()
                .map(|a| format!("{:.16e}", a.radians()))
                .collect();
            format!("r = {:.16e}\ntangency_angles = [{}]\n", res.r, angles.join(", "))
        }
        Command::Compare => {
            let (k, m) = (cfg.role("roles.K", &roles.k)?, cfg.role("roles.M", &roles.m)?);
            let r = p
                .r_factor
                .ok_or_else(|| CliError::invalid("params.R", "missing (use --R)"))?;
            let report = comparison_check(&k, &cfg.measure.gauge_body, r, &m, &cfg.measure, &grid(&cfg, &p)?)?;
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Command::Verify => verify(&cfg, p.tolerance.unwrap_or(DEFAULT_VERIFY_TOL))?,
        Command::Normalize => {
            let z = normalization_constant(&cfg.measure)?;
            format!("Z = {z:.16e}\nc0 = {:.16e}\n", 1.0 / z)
        }
    };
    emit(&p, out, &text)
}

fn abc(cfg: &RunConfig) -> CliResult<(SupportBody2D, SupportBody2D, SupportBody2D)> {
    let r = &cfg.doc.roles;
    Ok((cfg.role("roles.A", &r.a)?, cfg.role("roles.B", &r.b)?, cfg.role("roles.C", &r.c)?))
}

fn grid(cfg: &RunConfig, p: &ParamsDoc) -> CliResult<Vec<f64>> {
    match (p.t_min, p.t_max) {
        (None, None) if p.points.is_none() => Ok(default_t_grid(&cfg.measure.phi)),
        (Some(a), Some(b)) => log_grid(a, b, p.points.unwrap_or(16)).map_err(|e| CliError::invalid("params", e)),
        _ => Err(CliError::invalid("params", "t_min and t_max must be given together")),
    }
}

fn emit(p: &ParamsDoc, out: &mut dyn Write, text: &str) -> CliResult<()> {
    match &p.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn warn(err: &mut dyn Write, sweep: &RateSweep) {
    for w in &sweep.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn format_value(v: &MixedValue) -> String {
    let mut s = format!("sign = {}\nlog_abs = {:.16e}\n", v.value.sign(), v.value.log_abs());
    let x = v.value.to_f64();
    if x != 0.0 || v.value.is_zero() {
        let _ = writeln!(s, "value = {x:.16e}");
    }
    let _ = writeln!(s, "nodes_used = {}", v.quad.nodes_used);
    if v.piecewise_inputs {
        s.push_str("note = B or C is only piecewise smooth; the representation assumes C2 inputs\n");
    }
    s
}

pub const CSV_HEADER: &str = "t,sign,log_abs,ratio,phi_rt,nodes";

/// One row per grid point; an undefined ratio is written as `nan`.
pub fn sweep_csv(sweep: &RateSweep) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for i in 0..sweep.t_grid.len() {
        let v: LogValue = sweep.log_values[i];
        let ratio = sweep.ratios[i].map_or("nan".to_string(), |r| format!("{r:.16e}"));
        let _ = writeln!(
            s,
            "{:.16e},{},{:.16e},{},{:.16e},{}",
            sweep.t_grid[i],
            v.sign(),
            v.log_abs(),
            ratio,
            sweep.phi_rt[i],
            sweep.nodes[i]
        );
    }
    s
}

/// Built-in matrix plus the configured roles, each within `tol` (first
/// order) and `10·tol` (second order).
fn verify(cfg: &RunConfig, tol: f64) -> CliResult<String> {
    let mut cases = test_matrix();
    let r = &cfg.doc.roles;
    if let (Some(a), Some(b), Some(c)) = (&r.a, &r.b, &r.c) {
        let a = cfg.bodies[a].clone();
        if a.is_c2plus() && cfg.measure.gauge_body.is_c2plus() {
            cases.push(TestCase {
                name: "configured roles",
                a,
                b: cfg.bodies[b].clone(),
                c: cfg.bodies[c].clone(),
                measure: cfg.measure.clone(),
                t: cfg.doc.params.t.unwrap_or(2.0),
            });
        }
    }
    let schedule = StepSchedule::default();
    let mut report = String::new();
    let mut failures = Vec::new();
    for case in &cases {
        let cc = cross_check(case, &schedule)?;
        let ok = cc.first_rel <= tol && cc.second_rel <= SECOND_TOL_FACTOR * tol;
        let _ = writeln!(
            report,
            "{} {}: first rel {:.2e}, second rel {:.2e}",
            if ok { "PASS" } else { "FAIL" },
            cc.name,
            cc.first_rel,
            cc.second_rel
        );
        if !ok {
            failures.push(cc.name);
        }
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Assertion(format!("{report}failing cases: {}", failures.join(", "))))
    }
}
