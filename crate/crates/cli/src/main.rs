use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hermite_quad::gauss_hermite::{apply_product_rule, gh_rule, product_rule};
use hermite_quad::hermite_space::{regime_summary, SpaceConfig, WeightedSpace};
use hermite_quad::json::{format_f64, to_json_string};
use hermite_quad::lower_bounds::{all_ones_bound, best_lower_bound, ecwt_necessity_diagnostic, lower_bound};
use hermite_quad::rule_builder::{build_plan, information_complexity_upper, rate_estimate, AConstant, Scheme};
use hermite_quad::testfns::TestFunction;
use hermite_quad::wce::{general_wce, product_gh_wce, product_upper_bound};
use hermite_quad::Error;

mod grid;

use grid::{parse_eps_grid, parse_n_grid, parse_usize_list};

const THREADS_ENV: &str = "HERMITE_QUAD_THREADS";

#[derive(Parser)]
#[command(name = "hermite-quad", version, about = "Gauss-Hermite product rules and their worst-case errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the n-point Gauss-Hermite rule.
    Nodes {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Worst-case error of a product rule or of an arbitrary rule file.
    Wce {
        #[arg(long)]
        space: PathBuf,
        /// Orders m_1,...,m_s (a single value is used for every coordinate).
        #[arg(long, conflicts_with = "rule")]
        m: Option<String>,
        /// JSON file with `nodes` (list of points) and `weights`.
        #[arg(long)]
        rule: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Build a certified order vector.
    Plan {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        schedule: Schedule,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Tabulate plans over an epsilon grid, or product rules over an n grid.
    Sweep {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        schedule: Schedule,
        /// `e1,e2,...` or `start:stop:count` (log-spaced).
        #[arg(long, conflicts_with = "n")]
        eps: Option<String>,
        /// `n1,n2,...` or `lo..hi`; every coordinate uses order n.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[arg(long, default_value_t = 64)]
        t_cap: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Apply a rule to a named test function and compare with its integral.
    Integrate {
        #[arg(long)]
        space: PathBuf,
        /// `appendixB`, `hermite:k[,k...]` or `monomial:d[,d...]`.
        #[arg(long)]
        function: String,
        #[arg(long, conflicts_with_all = ["plan", "eps"])]
        m: Option<String>,
        /// A plan file written by `plan`.
        #[arg(long, conflicts_with = "eps")]
        plan: Option<PathBuf>,
        #[command(flatten)]
        schedule: Schedule,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Lower bound on the n-th minimal error.
    LowerBound {
        #[arg(long)]
        space: PathBuf,
        /// Explicit t_1,...,t_s.
        #[arg(long, conflicts_with = "n")]
        t: Option<String>,
        /// Maximize over t for this n.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 64)]
        t_cap: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Summarize the weights: B(s), growth of a_j 2^{b_j}, weak-tractability obstruction.
    Regime {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, requires = "eta")]
        beta: Option<f64>,
        #[arg(long, requires = "beta")]
        eta: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Schedule {
    #[arg(long, value_parser = parse_scheme, default_value = "uexp")]
    scheme: Scheme,
    /// Use the greedy search instead of a closed-form schedule.
    #[arg(long)]
    greedy: bool,
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    /// The constant A of the ecwt schedule.
    #[arg(long, conflicts_with_all = ["beta", "eta"])]
    a_const: Option<f64>,
    /// Derive A from a_j 2^{b_j} >= beta j^{1+eta}.
    #[arg(long, requires = "eta")]
    beta: Option<f64>,
    #[arg(long, requires = "beta")]
    eta: Option<f64>,
}

impl Schedule {
    fn a_constant(&self) -> Option<AConstant> {
        match (self.a_const, self.beta, self.eta) {
            (Some(a), _, _) => Some(AConstant::Given(a)),
            (None, Some(beta), Some(eta)) => Some(AConstant::FromGrowth { beta, eta }),
            _ => None,
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. } | Error::InvalidArgument(_) | Error::OrderOutOfRange(_) => 2,
            Error::Budget { .. } | Error::Convergence(_) => 3,
            Error::Certification(_) | Error::Numerical(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("malformed {what} file {}: {e}", path.display())))
}

fn load_space(path: &Path) -> CliResult<WeightedSpace> {
    let cfg: SpaceConfig = read_json(path, "space")?;
    Ok(WeightedSpace::from_config(&cfg)?)
}

fn orders(text: &str, s: usize) -> CliResult<Vec<usize>> {
    let m = parse_usize_list(text).map_err(Failure::validation)?;
    match m.len() {
        1 => Ok(vec![m[0]; s]),
        n if n == s => Ok(m),
        n => Err(Failure::validation(format!("expected {s} orders, got {n}"))),
    }
}

fn emit(out: &Output, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::validation(format!("cannot write output: {e}")))
        }
    }
}

fn emit_json<T: Serialize>(out: &Output, value: &T) -> CliResult<()> {
    if out.format == Some(Format::Csv) {
        return Err(Failure::validation("this command only writes JSON"));
    }
    let mut text = to_json_string(value).map_err(|e| Failure::validation(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn write_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::validation(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

fn cmd_nodes(n: usize, out: &Output) -> CliResult<()> {
    let rule = gh_rule(n)?;
    match out.format {
        Some(Format::Csv) => {
            let rows = (0..n)
                .map(|i| vec![i.to_string(), format_f64(rule.nodes[i]), format_f64(rule.weights[i])])
                .collect();
            let text = write_csv(vec!["i".into(), "node".into(), "weight".into()], rows)?;
            emit(out, &text)
        }
        _ => emit_json(out, &rule),
    }
}

#[derive(Deserialize)]
struct RuleFile {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn cmd_wce(space: &Path, m: Option<&str>, rule: Option<&Path>, tol: f64, out: &Output) -> CliResult<()> {
    let space = load_space(space)?;
    let report = match (m, rule) {
        (Some(m), _) => product_gh_wce(&space, &orders(m, space.s())?, tol)?,
        (None, Some(path)) => {
            let rule: RuleFile = read_json(path, "rule")?;
            general_wce(&space, &rule.nodes, &rule.weights, tol)?
        }
        (None, None) => return Err(Failure::validation("wce needs --m or --rule")),
    };
    emit_json(out, &report)
}

/// A plan from either a closed-form schedule or the greedy search.
#[derive(Serialize)]
struct PlanOutput {
    scheme: String,
    epsilon: f64,
    m: Vec<usize>,
    n_total: u64,
    measured_e: f64,
    /// Closed-form bound on `e` for these orders.
    guaranteed_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    master_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<usize>,
}

fn make_plan(space: &WeightedSpace, schedule: &Schedule, eps: f64) -> CliResult<PlanOutput> {
    if schedule.greedy {
        let g = information_complexity_upper(space, eps, schedule.budget)?;
        let bound = product_upper_bound(space, &g.m)?;
        return Ok(PlanOutput {
            scheme: "greedy".into(),
            epsilon: eps,
            n_total: g.n_total,
            guaranteed_e: bound.sqrt(),
            measured_e: g.measured_e,
            m: g.m,
            b_s: None,
            master_order: None,
            a_constant: None,
            evaluations: Some(g.evaluations),
        });
    }
    let p = build_plan(space, schedule.scheme, eps, schedule.a_constant())?;
    Ok(PlanOutput {
        scheme: p.scheme.to_string(),
        epsilon: p.epsilon,
        m: p.m,
        n_total: p.n_total,
        measured_e: p.measured_e,
        guaranteed_e: p.guaranteed_e,
        b_s: p.b_s,
        master_order: p.master_order,
        a_constant: p.a_constant,
        evaluations: None,
    })
}

fn cmd_plan(space: &Path, schedule: &Schedule, eps: f64, out: &Output) -> CliResult<()> {
    let space = load_space(space)?;
    emit_json(out, &make_plan(&space, schedule, eps)?)
}

#[derive(Serialize)]
struct SweepRow {
    s: usize,
    epsilon_or_n: f64,
    m: Vec<usize>,
    n_total: u64,
    e_measured: f64,
    e_bound: f64,
    lower_bound: Option<f64>,
    p_hat: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    space: &Path,
    schedule: &Schedule,
    eps: Option<&str>,
    n: Option<&str>,
    tol: f64,
    t_cap: u32,
    out: &Output,
) -> CliResult<()> {
    let space = load_space(space)?;
    let s = space.s();
    let mut rows = Vec::new();
    match (eps, n) {
        (Some(grid), _) => {
            for e in parse_eps_grid(grid).map_err(Failure::validation)? {
                let plan = make_plan(&space, schedule, e)?;
                rows.push(SweepRow {
                    s,
                    epsilon_or_n: e,
                    m: plan.m,
                    n_total: plan.n_total,
                    e_measured: plan.measured_e,
                    e_bound: plan.guaranteed_e,
                    lower_bound: None,
                    p_hat: None,
                });
            }
        }
        (None, Some(grid)) => {
            for k in parse_n_grid(grid).map_err(Failure::validation)? {
                let m = vec![k; s];
                let report = product_gh_wce(&space, &m, tol)?;
                rows.push(SweepRow {
                    s,
                    epsilon_or_n: k as f64,
                    n_total: m.iter().map(|&x| x as u64).product(),
                    e_measured: report.e(),
                    e_bound: product_upper_bound(&space, &m)?.sqrt(),
                    m,
                    lower_bound: None,
                    p_hat: None,
                });
            }
        }
        (None, None) => return Err(Failure::validation("sweep needs --eps or --n")),
    }
    for row in &mut rows {
        row.lower_bound = best_lower_bound(&space, row.n_total, t_cap).ok().map(|r| r.bound);
    }
    let fit_data: Vec<(f64, f64)> = rows.iter().map(|r| (r.n_total as f64, r.e_measured)).collect();
    let p_hat = rate_estimate(&fit_data).ok().map(|f| f.p_hat);
    for row in &mut rows {
        row.p_hat = p_hat;
    }

    match out.format {
        Some(Format::Json) => emit_json(out, &rows),
        _ => {
            let mut header = vec!["s".to_string(), "epsilon_or_n".to_string()];
            header.extend((1..=s).map(|j| format!("m{j}")));
            header.extend(
                ["n_total", "e_measured", "e_bound", "lower_bound", "p_hat"]
                    .iter()
                    .map(|h| h.to_string()),
            );
            let n_grid = n.is_some();
            let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
            let records = rows
                .iter()
                .map(|r| {
                    let mut rec = vec![
                        r.s.to_string(),
                        if n_grid {
                            (r.epsilon_or_n as u64).to_string()
                        } else {
                            format_f64(r.epsilon_or_n)
                        },
                    ];
                    rec.extend(r.m.iter().map(usize::to_string));
                    rec.push(r.n_total.to_string());
                    rec.push(format_f64(r.e_measured));
                    rec.push(format_f64(r.e_bound));
                    rec.push(opt(r.lower_bound));
                    rec.push(opt(r.p_hat));
                    rec
                })
                .collect();
            emit(out, &write_csv(header, records)?)
        }
    }
}

#[derive(Serialize)]
struct IntegrationReport {
    function: String,
    m: Vec<usize>,
    n_total: u64,
    value: f64,
    exact: f64,
    error: f64,
    e_measured: f64,
    /// `e_upper * ||f||` when the norm is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_bound: Option<bool>,
}

#[derive(Deserialize)]
struct PlanFile {
    m: Vec<usize>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_integrate(
    space: &Path,
    function: &str,
    m: Option<&str>,
    plan: Option<&Path>,
    schedule: &Schedule,
    eps: Option<f64>,
    tol: f64,
    out: &Output,
) -> CliResult<()> {
    let space = load_space(space)?;
    let f = TestFunction::parse(function, space.s())?;
    let m = match (m, plan, eps) {
        (Some(m), _, _) => orders(m, space.s())?,
        (None, Some(path), _) => read_json::<PlanFile>(path, "plan")?.m,
        (None, None, Some(eps)) => make_plan(&space, schedule, eps)?.m,
        (None, None, None) => return Err(Failure::validation("integrate needs --m, --plan or --eps")),
    };
    let rule = product_rule(&m)?;
    let value = apply_product_rule(&rule, |x| f.eval(x).expect("dimension checked"));
    let exact = f.exact_integral();
    let report = product_gh_wce(&space, &m, tol)?;
    let norm = f.norm_squared(&space).ok().map(f64::sqrt);
    let certified_bound = norm.map(|nf| report.e_upper() * nf);
    let error = (value - exact).abs();
    emit_json(
        out,
        &IntegrationReport {
            function: f.to_string(),
            n_total: rule.total_points().unwrap_or(u64::MAX),
            m,
            value,
            exact,
            error,
            e_measured: report.e(),
            norm,
            certified_bound,
            within_bound: certified_bound.map(|b| error <= b),
        },
    )
}

#[derive(Serialize)]
struct LowerBoundReport {
    lower_bound: hermite_quad::lower_bounds::LowerBoundResult,
    all_ones: hermite_quad::lower_bounds::LowerBoundResult,
}

fn cmd_lower_bound(space: &Path, t: Option<&str>, n: Option<u64>, t_cap: u32, out: &Output) -> CliResult<()> {
    let space = load_space(space)?;
    let result = match (t, n) {
        (Some(t), _) => {
            let t: Vec<u32> = parse_usize_list(t)
                .map_err(Failure::validation)?
                .into_iter()
                .map(|x| u32::try_from(x).map_err(|_| Failure::validation("t entry too large")))
                .collect::<CliResult<_>>()?;
            lower_bound(&space, &t)?
        }
        (None, Some(n)) => best_lower_bound(&space, n, t_cap)?,
        (None, None) => return Err(Failure::validation("lower-bound needs --t or --n")),
    };
    emit_json(
        out,
        &LowerBoundReport {
            lower_bound: result,
            all_ones: all_ones_bound(&space),
        },
    )
}

#[derive(Serialize)]
struct RegimeReport {
    summary: hermite_quad::hermite_space::RegimeSummary,
    necessity: hermite_quad::lower_bounds::NecessityReport,
}

fn cmd_regime(space: &Path, beta: Option<f64>, eta: Option<f64>, out: &Output) -> CliResult<()> {
    let space = load_space(space)?;
    let params = beta.zip(eta);
    emit_json(
        out,
        &RegimeReport {
            summary: regime_summary(&space, params)?,
            necessity: ecwt_necessity_diagnostic(&space),
        },
    )
}

fn configure_threads() -> CliResult<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Failure::validation(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Nodes { n, out } => cmd_nodes(*n, out),
        Command::Wce { space, m, rule, tol, out } => cmd_wce(space, m.as_deref(), rule.as_deref(), *tol, out),
        Command::Plan {
            space,
            schedule,
            eps,
            out,
        } => cmd_plan(space, schedule, *eps, out),
        Command::Sweep {
            space,
            schedule,
            eps,
            n,
            tol,
            t_cap,
            out,
        } => cmd_sweep(space, schedule, eps.as_deref(), n.as_deref(), *tol, *t_cap, out),
        Command::Integrate {
            space,
            function,
            m,
            plan,
            schedule,
            eps,
            tol,
            out,
        } => cmd_integrate(space, function, m.as_deref(), plan.as_deref(), schedule, *eps, *tol, out),
        Command::LowerBound { space, t, n, t_cap, out } => cmd_lower_bound(space, t.as_deref(), *n, *t_cap, out),
        Command::Regime { space, beta, eta, out } => cmd_regime(space, *beta, *eta, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
