//! Command-line front end.
//!
//! Every invocation is first turned into a [`RunConfig`], which is what gets
//! executed and what each artifact embeds. A config can also be loaded from a
//! JSON file with `frialab run --config FILE`; unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::alpha::{psi_dickman, psi_ht, solve_alpha, AlphaState};
use crate::beta::{solve_beta, taylor_bj, v_range, v_supremum, BetaConfig, BetaState, TaylorCoeffs};
use crate::dickman::dickman_rho;
use crate::error::{FriaError, Result};
use crate::friable::{primes_up_to, psi_exact};
use crate::law::{compare_with, CompareOptions, ComparisonRow};
use crate::report::{emit_csv, emit_json, write_artifact, Cell, Tabular};
use crate::series::{extract_xi_coeffs, fejer_identity, lemma8_suite, perron_indicator};

/// Above this x the `psi` command skips exact enumeration unless asked.
pub const EXACT_PSI_DEFAULT_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Alpha,
    Psi,
    Rho,
    Beta,
    Bj,
    Dlaw,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma8,
    Fejer,
    Perron,
    Coeffs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Newton residual for the two-variable saddle, relative to log x.
    pub residual_rel: f64,
    /// `v_range = beta_c √ū`.
    pub beta_c: f64,
    /// Coordinate ceiling for the saddle pair in `beta` and `bj`.
    pub beta_ceiling: f64,
    /// Coordinate ceiling for the exact-R prediction in `dlaw` and `sweep`.
    pub prop1_ceiling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let b = BetaConfig::default();
        Tolerances { residual_rel: b.residual_rel, beta_c: b.c, beta_ceiling: b.ceiling, prop1_ceiling: 64.0 }
    }
}

impl Tolerances {
    fn beta_config(&self, ceiling: f64) -> BetaConfig {
        BetaConfig { c: self.beta_c, ceiling, residual_rel: self.residual_rel, ..BetaConfig::default() }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub u: Option<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    /// x values for `sweep`.
    #[serde(default)]
    pub xs: Vec<f64>,
    /// y values for `sweep`.
    #[serde(default)]
    pub ys: Vec<f64>,
    #[serde(default)]
    pub suite: Option<Suite>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Force exact enumeration in `psi` on or off.
    #[serde(default)]
    pub exact: Option<bool>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_k() -> usize {
    2
}

fn default_samples() -> usize {
    10_000
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            x: None,
            y: None,
            u: None,
            v: Vec::new(),
            k: default_k(),
            xs: Vec::new(),
            ys: Vec::new(),
            suite: None,
            samples: default_samples(),
            seed: 0,
            exact: None,
            tolerances: Tolerances::default(),
            format: None,
            output: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FriaError::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| FriaError::domain(format!("bad config {}: {e}", path.display())))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            CommandKind::Beta | CommandKind::Dlaw | CommandKind::Sweep => Format::Csv,
            _ => Format::Json,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, val) in [
            ("residual_rel", t.residual_rel),
            ("beta_c", t.beta_c),
            ("beta_ceiling", t.beta_ceiling),
            ("prop1_ceiling", t.prop1_ceiling),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(FriaError::domain(format!("tolerance {name} must be positive, got {val}")));
            }
        }
        let need = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(FriaError::domain(format!("command {:?} needs {field}", self.command)))
            }
        };
        use CommandKind::*;
        match self.command {
            Alpha | Psi | Beta | Bj | Dlaw => {
                need("x", self.x.is_some())?;
                need("y", self.y.is_some())?;
            }
            Rho => need("u", self.u.is_some())?,
            Verify => need("suite", self.suite.is_some())?,
            Sweep => {
                need("xs", !self.xs.is_empty())?;
                need("ys", !self.ys.is_empty())?;
            }
        }
        if matches!(self.command, Beta | Dlaw | Sweep) {
            need("v", !self.v.is_empty())?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "frialab", version, about = "Saddle points, divisor laws and exact enumeration for friable integers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format (defaults: csv for beta, dlaw, sweep; json otherwise).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub residual_rel: Option<f64>,
    #[arg(long)]
    pub beta_c: Option<f64>,
    #[arg(long)]
    pub beta_ceiling: Option<f64>,
    #[arg(long)]
    pub prop1_ceiling: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Point {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Saddle point α(x, y) and its moments.
    Alpha {
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        common: Common,
    },
    /// Ψ(x, y): exact count, saddle-point and Dickman approximations.
    Psi {
        #[command(flatten)]
        point: Point,
        /// Force exact enumeration on or off.
        #[arg(long)]
        exact: Option<bool>,
        #[command(flatten)]
        common: Common,
    },
    /// Dickman's ρ(u).
    Rho {
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Two-variable saddle states along a v grid.
    Beta {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        v: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Even Taylor coefficients b_0..b_{k-1} of R(v).
    Bj {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Exact D(x, y; v) against the Gaussian and corrected predictions.
    Dlaw {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_delimiter = ',', required = true)]
        v: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Numerical verification suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// `dlaw` over a grid of (x, y).
    Sweep {
        #[arg(long = "x", value_delimiter = ',', required = true)]
        xs: Vec<f64>,
        #[arg(long = "y", value_delimiter = ',', required = true)]
        ys: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        v: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Execute a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn apply_common(cfg: &mut RunConfig, c: Common) {
    cfg.format = c.format;
    cfg.output = c.output;
    cfg.seed = c.seed;
    let t = &mut cfg.tolerances;
    if let Some(v) = c.residual_rel {
        t.residual_rel = v;
    }
    if let Some(v) = c.beta_c {
        t.beta_c = v;
    }
    if let Some(v) = c.beta_ceiling {
        t.beta_ceiling = v;
    }
    if let Some(v) = c.prop1_ceiling {
        t.prop1_ceiling = v;
    }
}

impl Command {
    pub fn into_config(self) -> Result<RunConfig> {
        let (mut cfg, common) = match self {
            Command::Alpha { point, common } => (with_point(CommandKind::Alpha, point), common),
            Command::Psi { point, exact, common } => {
                let mut c = with_point(CommandKind::Psi, point);
                c.exact = exact;
                (c, common)
            }
            Command::Rho { u, common } => {
                let mut c = RunConfig::new(CommandKind::Rho);
                c.u = Some(u);
                (c, common)
            }
            Command::Beta { point, v, common } => {
                let mut c = with_point(CommandKind::Beta, point);
                c.v = v;
                (c, common)
            }
            Command::Bj { point, k, common } => {
                let mut c = with_point(CommandKind::Bj, point);
                c.k = k;
                (c, common)
            }
            Command::Dlaw { point, v, k, common } => {
                let mut c = with_point(CommandKind::Dlaw, point);
                c.v = v;
                c.k = k;
                (c, common)
            }
            Command::Verify { suite, samples, common } => {
                let mut c = RunConfig::new(CommandKind::Verify);
                c.suite = Some(suite);
                c.samples = samples;
                (c, common)
            }
            Command::Sweep { xs, ys, v, k, common } => {
                let mut c = RunConfig::new(CommandKind::Sweep);
                c.xs = xs;
                c.ys = ys;
                c.v = v;
                c.k = k;
                (c, common)
            }
            Command::Run { config } => return RunConfig::from_json_file(&config),
        };
        apply_common(&mut cfg, common);
        Ok(cfg)
    }
}

fn with_point(kind: CommandKind, p: Point) -> RunConfig {
    let mut c = RunConfig::new(kind);
    c.x = Some(p.x);
    c.y = Some(p.y);
    c
}

/// Rendered artifact plus whether every check in it passed.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub psi_exact: Option<u64>,
    pub psi_saddle: f64,
    pub psi_dickman: f64,
}

impl Tabular for PsiReport {
    fn header() -> Vec<&'static str> {
        vec!["x", "y", "u", "psi_exact", "psi_saddle", "psi_dickman"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Real(self.x),
            Cell::Real(self.y),
            Cell::Real(self.u),
            self.psi_exact.map_or(Cell::Text(String::new()), Cell::Count),
            Cell::Real(self.psi_saddle),
            Cell::Real(self.psi_dickman),
        ]
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoReport {
    pub u: f64,
    pub rho: f64,
}

impl Tabular for RhoReport {
    fn header() -> Vec<&'static str> {
        vec!["u", "rho"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Real(self.u), Cell::Real(self.rho)]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaReport {
    pub alpha: AlphaState,
    pub v_range: f64,
    pub v_supremum: f64,
    pub states: Vec<BetaState>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BjRow {
    pub j: usize,
    pub b: f64,
    pub error_estimate: f64,
}

impl Tabular for BjRow {
    fn header() -> Vec<&'static str> {
        vec!["j", "b", "error_estimate"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Count(self.j as u64), Cell::Real(self.b), Cell::Real(self.error_estimate)]
    }
}

/// One check of a verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    /// Amount by which the check clears its bound; negative means violated.
    pub slack: f64,
}

impl Tabular for CheckRow {
    fn header() -> Vec<&'static str> {
        vec!["check", "passed", "slack"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Text(self.check.clone()), Cell::Flag(self.passed), Cell::Real(self.slack)]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport<T: Serialize> {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<CheckRow>,
    pub detail: T,
}

const FEJER_POINTS: [(f64, f64); 6] =
    [(2.0, 50.0), (2.0, 200.0), (0.5, 50.0), (0.5, 200.0), (1.01, 50.0), (1.01, 200.0)];
const FEJER_TOL: f64 = 1e-10;
const COEFF_ORDER: usize = 8;

fn render<T: Tabular, R: Serialize>(cfg: &RunConfig, rows: &[T], result: &R) -> Result<Vec<u8>> {
    match cfg.format() {
        Format::Csv => emit_csv(rows, cfg),
        Format::Json => emit_json(cfg, result),
    }
}

fn point(cfg: &RunConfig) -> (f64, f64) {
    (cfg.x.unwrap_or(f64::NAN), cfg.y.unwrap_or(f64::NAN))
}

fn verify(cfg: &RunConfig, suite: Suite) -> Result<Artifact> {
    let passed_of = |c: &[CheckRow]| c.iter().all(|r| r.passed);
    let bytes_and_pass = |checks: Vec<CheckRow>, detail: serde_json::Result<serde_json::Value>| -> Result<Artifact> {
        let detail = detail.map_err(|e| FriaError::io(e.to_string()))?;
        let passed = passed_of(&checks);
        let report = VerifyReport { suite, passed, checks: checks.clone(), detail };
        Ok(Artifact { bytes: render(cfg, &checks, &report)?, passed })
    };
    match suite {
        Suite::Lemma8 => {
            let rep = lemma8_suite(cfg.samples, cfg.seed)?;
            let mut checks: Vec<CheckRow> = rep
                .checks
                .iter()
                .map(|c| CheckRow {
                    check: format!("{}: {}", c.name, c.bound),
                    passed: c.passed,
                    slack: -c.worst_margin,
                })
                .collect();
            let r2 = rep.r_at_minus_two;
            checks.push(CheckRow {
                check: "r(-2) = -0.0997 +- 1e-3".into(),
                passed: (r2 + 0.0997).abs() <= 1e-3,
                slack: 1e-3 - (r2 + 0.0997).abs(),
            });
            bytes_and_pass(checks, serde_json::to_value(&rep))
        }
        Suite::Fejer => {
            let mut checks = Vec::new();
            let mut pairs = Vec::new();
            for (z, t) in FEJER_POINTS {
                let p = fejer_identity(z, t)?;
                let gap = (p.integral - p.closed).abs();
                checks.push(CheckRow {
                    check: format!("z = {z}, T = {t}"),
                    passed: gap <= FEJER_TOL,
                    slack: FEJER_TOL - gap,
                });
                pairs.push(p);
            }
            bytes_and_pass(checks, serde_json::to_value(&pairs))
        }
        Suite::Perron => {
            let mut checks = Vec::new();
            let mut values = Vec::new();
            for (z, t) in FEJER_POINTS {
                let p = perron_indicator(z, 1.0, t)?;
                let gap = (p.value - p.indicator).abs();
                checks.push(CheckRow {
                    check: format!("z = {z}, T = {t}"),
                    passed: gap <= p.bound,
                    slack: p.bound - gap,
                });
                values.push(p);
            }
            bytes_and_pass(checks, serde_json::to_value(&values))
        }
        Suite::Coeffs => {
            let table = extract_xi_coeffs(COEFF_ORDER)?;
            let mut checks = Vec::new();
            for (k, l) in [(1, 0), (0, 1)] {
                let gap = (table.get(k, l).unwrap_or(f64::NAN) - 0.5).abs();
                checks.push(CheckRow { check: format!("d[{k}][{l}] = 1/2"), passed: gap <= 1e-8, slack: 1e-8 - gap });
            }
            let min = (0..=COEFF_ORDER)
                .flat_map(|k| (0..=COEFF_ORDER - k).map(move |l| (k, l)))
                .filter(|&(k, l)| k + l >= 1)
                .filter_map(|(k, l)| table.get(k, l))
                .fold(f64::INFINITY, f64::min);
            checks.push(CheckRow { check: "d[k][l] >= -1e-8".into(), passed: min >= -1e-8, slack: min + 1e-8 });
            bytes_and_pass(checks, serde_json::to_value(&table))
        }
    }
}

fn comparison(cfg: &RunConfig, x: f64, y: f64) -> Result<Vec<ComparisonRow>> {
    let opts = CompareOptions {
        k: cfg.k,
        taylor_beta: cfg.tolerances.beta_config(cfg.tolerances.beta_ceiling),
        prop1_beta: cfg.tolerances.beta_config(cfg.tolerances.prop1_ceiling),
        v_m: None,
    };
    compare_with(x, y, &cfg.v, &opts)
}

/// Computes the artifact for `cfg` without writing it.
pub fn execute(cfg: &RunConfig) -> Result<Artifact> {
    cfg.validate()?;
    let ok = |bytes| Ok(Artifact { bytes, passed: true });
    let (x, y) = point(cfg);
    match cfg.command {
        CommandKind::Alpha => {
            let st = solve_alpha(x, primes_up_to(y)?)?;
            ok(render(cfg, std::slice::from_ref(&st), &st)?)
        }
        CommandKind::Psi => {
            let basis = primes_up_to(y)?;
            let exact = match cfg.exact.unwrap_or(x <= EXACT_PSI_DEFAULT_LIMIT) {
                true => Some(psi_exact(x, &basis)?),
                false => None,
            };
            let st = solve_alpha(x, basis)?;
            let rep =
                PsiReport { x, y, u: st.u, psi_exact: exact, psi_saddle: psi_ht(&st), psi_dickman: psi_dickman(x, y)? };
            ok(render(cfg, std::slice::from_ref(&rep), &rep)?)
        }
        CommandKind::Rho => {
            let u = cfg.u.unwrap_or(f64::NAN);
            let rep = RhoReport { u, rho: dickman_rho(u)? };
            ok(render(cfg, &[rep], &rep)?)
        }
        CommandKind::Beta => {
            let st = solve_alpha(x, primes_up_to(y)?)?;
            let bc = cfg.tolerances.beta_config(cfg.tolerances.beta_ceiling);
            let states = cfg.v.iter().map(|&v| solve_beta(&st, v, &bc)).collect::<Result<Vec<_>>>()?;
            let rep = BetaReport { v_range: v_range(&st, bc.c), v_supremum: v_supremum(&st), alpha: st, states };
            ok(render(cfg, &rep.states, &rep)?)
        }
        CommandKind::Bj => {
            let st = solve_alpha(x, primes_up_to(y)?)?;
            let bc = cfg.tolerances.beta_config(cfg.tolerances.beta_ceiling);
            let coeffs: TaylorCoeffs = taylor_bj(&st, cfg.k, &bc)?;
            let rows: Vec<BjRow> = coeffs
                .b
                .iter()
                .zip(&coeffs.error_estimates)
                .enumerate()
                .map(|(j, (&b, &e))| BjRow { j, b, error_estimate: e })
                .collect();
            ok(render(cfg, &rows, &coeffs)?)
        }
        CommandKind::Dlaw => {
            let rows = comparison(cfg, x, y)?;
            ok(render(cfg, &rows, &rows)?)
        }
        CommandKind::Sweep => {
            let mut rows = Vec::new();
            for &xi in &cfg.xs {
                for &yi in &cfg.ys {
                    rows.extend(comparison(cfg, xi, yi)?);
                }
            }
            ok(render(cfg, &rows, &rows)?)
        }
        CommandKind::Verify => verify(cfg, cfg.suite.expect("validated")),
    }
}

/// Sizes the global thread pool from `FRIALAB_THREADS` (unset or 0 = auto).
pub fn init_threads() -> Result<()> {
    let n = match std::env::var("FRIALAB_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse::<usize>()
            .map_err(|_| FriaError::domain(format!("FRIALAB_THREADS must be a non-negative integer, got {s:?}")))?,
        _ => 0,
    };
    // A pool that already exists (repeated calls in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn report_error(e: &FriaError) -> i32 {
    let kind = match e {
        FriaError::Domain(_) => "domain",
        FriaError::Capacity(_) => "capacity",
        FriaError::Solver { .. } => "solver",
        FriaError::Numeric { .. } => "numeric",
        FriaError::Io(_) => "io",
    };
    let code = e.exit_code();
    let msg = serde_json::json!({ "error": { "kind": kind, "message": e.to_string(), "exit_code": code } });
    eprintln!("{msg}");
    code
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = init_threads().and_then(|_| cli.command.into_config()).and_then(|cfg| {
        let art = execute(&cfg)?;
        write_artifact(cfg.output.as_deref(), &art.bytes)?;
        Ok(art.passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => report_error(&FriaError::numeric("verification suite reported failing checks", f64::NAN)),
        Err(e) => report_error(&e),
    }
}
