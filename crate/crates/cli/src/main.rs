mod report;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use dioexp::error::Error;
use dioexp::exponents::{omega_mult_records, omega_records, sigma_records, SearchOptions};
use dioexp::exterior::Multivector;
use dioexp::flows::{excursion_trace, gamma_estimate, geometric_grid, omega_from_gamma_estimate};
use dioexp::lattices::{subgroup_from_plucker, SublatticeBasis};
use dioexp::nondiv::{
    marking_inclusion_check, theorem22_verify, BaseMeasure, GoodnessParams, MarkingConfig, PolyMap, SpaceParams,
    Theorem22Config,
};
use dioexp::rational::{parse_matrix, parse_rational, parse_vector, Q};
use dioexp::records::{Budget, Exponent, RecordCurve};
use dioexp::subspaces::{
    omega2_closed_form_records, question61_search, subspace_exponent, AffineSubspaceParam, GapSearchOptions,
    GapStrategy, TwoByTwoCriterion,
};

use report::{EstimateKind, Run};

const OUT_DIR_ENV: &str = "DIOEXP_OUT_DIR";

#[derive(Parser)]
#[command(name = "dioexp", version, about = "Diophantine exponent searches and nondivergence checks")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stop after roughly this many enumeration nodes.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,
    /// Stop starting new work after this many seconds.
    #[arg(long, global = true)]
    budget_seconds: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record curve of the exponent of a matrix (or vector).
    Exponent(ExponentArgs),
    /// Order-by-order exponents of the affine subspace parametrized by A.
    Subspace(SubspaceArgs),
    /// Excursion trace of a vector under the diagonal flow.
    Flow(FlowArgs),
    /// Nondivergence checks.
    Nondiv {
        #[command(subcommand)]
        command: NondivCommand,
    },
    /// Exact-identity suites.
    Selftest(OutArg),
    /// Random search for 2x2 matrices with a large order-two gap.
    SearchGap(SearchGapArgs),
}

#[derive(Args)]
struct OutArg {
    /// Report path; defaults to `<command>.json` in $DIOEXP_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    height: u64,
    /// Multiplicative exponent of a vector.
    #[arg(long, conflicts_with = "simult")]
    mult: bool,
    /// Simultaneous exponent of a vector.
    #[arg(long)]
    simult: bool,
    #[arg(long, default_value_t = 1)]
    start_height: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SubspaceArgs {
    #[arg(long = "A")]
    a: PathBuf,
    #[arg(long)]
    height: u64,
    /// Comma-separated orders; defaults to 1..=n-s.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    /// Also compute orders above n-s (they never change the exponent).
    #[arg(long)]
    allow_high_orders: bool,
    /// Cross-check order two with the 2x2 closed form.
    #[arg(long)]
    closed_form_2x2: bool,
    /// Run the gap search alongside.
    #[arg(long)]
    search_gap: bool,
    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Mixed)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    gap_height: u64,
    #[arg(long, default_value_t = 12)]
    bits: u32,
}

#[derive(Args)]
struct SearchGapArgs {
    #[command(flatten)]
    gap: GapArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    DetZero,
    Mixed,
}

#[derive(Args)]
struct FlowArgs {
    /// Single-line vector file.
    #[arg(long)]
    vector: PathBuf,
    #[arg(long, default_value = "2")]
    lambda_start: String,
    #[arg(long, default_value = "2")]
    ratio: String,
    #[arg(long)]
    lambda_max: String,
    /// Declared distance of the vector from the exact target.
    #[arg(long)]
    eta: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand)]
enum NondivCommand {
    /// Monte-Carlo escape measure against the nondivergence bound.
    Verify(VerifyArgs),
    /// Marked points have no short vectors, on a grid.
    Marking(MarkingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Lebesgue,
    Cantor,
}

#[derive(Args)]
struct VerifyArgs {
    /// Polynomial map as JSON: {"dim_in": d, "components": [[[coeff, [exponents]], ...], ...]}.
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long, value_delimiter = ',')]
    eps_grid: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Ball center, one value per input coordinate (default 1/2 each).
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, value_enum, default_value_t = MeasureArg::Lebesgue)]
    measure: MeasureArg,
    /// Goodness constant of the coordinate functions of h.
    #[arg(long = "C", default_value_t = 2.0 * std::f64::consts::SQRT_2)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Besicovitch constant (required for d > 1).
    #[arg(long)]
    besicovitch: Option<f64>,
    /// HNF height cutoff for the subgroups used to estimate rho.
    #[arg(long, default_value_t = 8)]
    rho_height: u64,
    #[arg(long, default_value_t = 64)]
    rho_grid: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct MarkingArgs {
    /// Identity map file fixing k = d + 1; `--k` can be given instead.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "4")]
    lambda: String,
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    rho: String,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<String>,
    #[command(flatten)]
    out: OutArg,
}

/// Failure with an exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn input(msg: impl Into<String>) -> Self {
        Fail { code: 2, msg: msg.into() }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded(_) | Error::TimeBudgetExhausted => 3,
            _ => 2,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail { code: 2, msg: e.to_string() }
    }
}

type CmdResult = Result<bool, Fail>;

fn read_input(run: &mut Run, path: &Path) -> Result<String, Fail> {
    run.read_input(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: dioexp::error::Result<T>) -> Result<T, Fail> {
    r.map_err(|e| match e {
        Error::Parse { line, msg } => Fail::input(format!("{}:{line}: {msg}", path.display())),
        other => Fail::from(other),
    })
}

fn rational_arg(name: &str, s: &str) -> Result<Q, Fail> {
    parse_rational(s).map_err(|m| Fail::input(format!("--{name}: {m}")))
}

fn out_path(arg: &OutArg, command: &str) -> PathBuf {
    arg.out.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join(format!("{command}.json"))
    })
}

fn budget(cli: &Cli, started: Instant) -> Budget {
    Budget {
        max_nodes: cli.budget_nodes,
        deadline: cli.budget_seconds.map(|s| started + Duration::from_secs_f64(s.max(0.0))),
    }
}

/// Witnesses of subspace records as HNF bases of the subgroup they span.
#[derive(Clone, Serialize)]
#[serde(untagged)]
enum SubgroupWitness {
    Basis(SublatticeBasis),
    Plucker(Multivector),
}

fn hnf_witnesses(c: &RecordCurve<Multivector>) -> RecordCurve<SubgroupWitness> {
    c.map_witness(|w| match subgroup_from_plucker(w) {
        Ok(b) => SubgroupWitness::Basis(b),
        Err(_) => SubgroupWitness::Plucker(w.clone()),
    })
}

fn estimate_json(e: Option<Exponent>) -> serde_json::Value {
    serde_json::to_value(e).unwrap_or_default()
}

fn gap_options(g: &GapArgs, seed: u64, budget: Budget) -> GapSearchOptions {
    GapSearchOptions {
        strategy: match g.strategy {
            StrategyArg::Random => GapStrategy::Random,
            StrategyArg::DetZero => GapStrategy::DetZero,
            StrategyArg::Mixed => GapStrategy::Mixed,
        },
        trials: g.trials,
        height: g.gap_height,
        bits: g.bits,
        seed,
        budget,
    }
}

fn run_exponent(cli: &Cli, args: &ExponentArgs, mut run: Run, started: Instant) -> CmdResult {
    run.param("height", args.height);
    run.param("start_height", args.start_height);
    run.param("mode", if args.mult { "mult" } else if args.simult { "simult" } else { "matrix" });
    let text = read_input(&mut run, &args.matrix)?;
    let a = in_file(&args.matrix, parse_matrix(&text))?;
    let opts = SearchOptions { start_height: args.start_height, budget: budget(cli, started) };
    let curve = if args.mult || args.simult {
        let y: Vec<Q> = if a.len() == 1 {
            a[0].clone()
        } else if a.iter().all(|r| r.len() == 1) {
            a.iter().map(|r| r[0].clone()).collect()
        } else {
            return Err(Fail::input(format!("{}: --mult/--simult need a vector", args.matrix.display())));
        };
        if args.mult {
            omega_mult_records(&y, args.height, &opts)?
        } else {
            sigma_records(&y, args.height, &opts)?
        }
    } else {
        omega_records(&a, args.height, &opts)?
    };
    let complete = curve.complete;
    let curve_infinite = curve.estimate().is_some_and(Exponent::is_infinite);
    let summary = json!({ "estimate": curve.estimate(), "records": curve.records.len(), "exhausted_height": curve.exhausted_height });
    let payload = json!({ "estimate": estimate_json(curve.estimate()), "curve": curve });
    // a zero residual proves the exponent infinite
    let kind = if curve_infinite { EstimateKind::Exact } else { EstimateKind::LowerBound };
    run.finish(&out_path(&args.out, "exponent"), kind, complete, payload, summary)?;
    Ok(complete)
}

fn run_subspace(cli: &Cli, args: &SubspaceArgs, mut run: Run, started: Instant) -> CmdResult {
    run.param("height", args.height);
    run.param("orders", &args.orders);
    run.param("allow_high_orders", args.allow_high_orders);
    run.param("closed_form_2x2", args.closed_form_2x2);
    let text = read_input(&mut run, &args.a)?;
    let a = in_file(&args.a, parse_matrix(&text))?;
    let p = AffineSubspaceParam::new(a.clone())?;
    let opts = SearchOptions { start_height: 1, budget: budget(cli, started) };
    let rep = subspace_exponent(&p, args.height, args.orders.as_deref(), args.allow_high_orders, &opts)?;
    let mut complete = rep.complete;
    let orders: Vec<_> = rep
        .orders
        .iter()
        .map(|o| json!({ "j": o.j, "estimate": estimate_json(o.estimate), "curve": hnf_witnesses(&o.curve) }))
        .collect();
    let mut payload = json!({
        "param": rep.param,
        "height": rep.height,
        "orders": orders,
        "combined": rep.combined,
        "equality": rep.equality,
        "annotations": rep.annotations,
    });
    if args.closed_form_2x2 {
        if a.len() != 2 || a[0].len() != 2 {
            return Err(Fail::input(format!("{}: --closed-form-2x2 needs a 2x2 matrix", args.a.display())));
        }
        let six = omega2_closed_form_records(&a, args.height, TwoByTwoCriterion::Six, &opts)?;
        let five = omega2_closed_form_records(&a, args.height, TwoByTwoCriterion::Five, &opts)?;
        complete &= six.complete && five.complete;
        let general = rep.orders.iter().find(|o| o.j == 2).map(|o| o.curve.skeleton());
        payload["closed_form_2x2"] = json!({
            "six_value": { "estimate": estimate_json(six.estimate()), "curve": hnf_witnesses(&six) },
            "five_value": { "estimate": estimate_json(five.estimate()), "curve": hnf_witnesses(&five) },
            "matches_general": general.map(|g| g == six.skeleton()),
        });
    }
    if args.search_gap {
        run.param("gap", json!({ "trials": args.gap.trials, "height": args.gap.gap_height, "bits": args.gap.bits }));
        run.param("strategy", args.gap.strategy as u8);
        let g = question61_search(&gap_options(&args.gap, run.seed, budget(cli, started)))?;
        complete &= g.complete;
        payload["gap_search"] = serde_json::to_value(g).unwrap_or_default();
    }
    let summary = json!({ "combined": rep.combined, "applies": rep.equality.applies });
    run.finish(&out_path(&args.out, "subspace"), EstimateKind::LowerBound, complete, payload, summary)?;
    Ok(complete)
}

fn run_flow(cli: &Cli, args: &FlowArgs, mut run: Run) -> CmdResult {
    run.param("lambda_start", &args.lambda_start);
    run.param("ratio", &args.ratio);
    run.param("lambda_max", &args.lambda_max);
    run.param("eta", &args.eta);
    let text = read_input(&mut run, &args.vector)?;
    let y = in_file(&args.vector, parse_vector(&text))?;
    let grid = geometric_grid(
        &rational_arg("lambda-start", &args.lambda_start)?,
        &rational_arg("ratio", &args.ratio)?,
        &rational_arg("lambda-max", &args.lambda_max)?,
    )?;
    let eta = args.eta.as_deref().map(|e| rational_arg("eta", e)).transpose()?;
    let node_budget = cli.budget_nodes.unwrap_or(dioexp::lattices::DEFAULT_NODE_BUDGET);
    let mut trace = excursion_trace(&y, &grid, eta.as_ref(), node_budget)?;
    trace.grid_ratio = Some(args.ratio.clone());
    let gamma = gamma_estimate(&trace);
    let omega = gamma.estimate.map(|g| omega_from_gamma_estimate(g, y.len()));
    let out = out_path(&args.out, "flow");
    std::fs::create_dir_all(out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")))?;
    std::fs::write(out.with_extension("tsv"), trace.to_table())?;
    let summary = json!({ "gamma": gamma.estimate, "points": trace.points.len() });
    let payload = json!({
        "trace": trace,
        "gamma": gamma,
        "omega_from_gamma": omega.map(|(e, clamped)| json!({ "value": e, "clamped": clamped })),
    });
    run.finish(&out, EstimateKind::LowerBound, true, payload, summary)?;
    Ok(true)
}

fn read_map(run: &mut Run, path: &Path) -> Result<PolyMap, Fail> {
    let text = read_input(run, path)?;
    let map: PolyMap = serde_json::from_str(&text)
        .map_err(|e| Fail::input(format!("{}:{}: {e}", path.display(), e.line())))?;
    map.validate()?;
    Ok(map)
}

fn run_verify(args: &VerifyArgs, mut run: Run) -> CmdResult {
    let map = read_map(&mut run, &args.map)?;
    let center = args.center.clone().unwrap_or_else(|| vec![0.5; map.dim_in]);
    let goodness = GoodnessParams::new(args.c, args.alpha)?;
    let space = SpaceParams::lebesgue(map.dim_in, args.besicovitch)?;
    if args.eps_grid.is_empty() {
        return Err(Fail::input("--eps-grid is empty"));
    }
    for (k, v) in [
        ("t", json!(args.t)),
        ("eps_grid", json!(args.eps_grid)),
        ("samples", json!(args.samples)),
        ("center", json!(center)),
        ("radius", json!(args.radius)),
        ("measure", json!(matches!(args.measure, MeasureArg::Cantor).then_some("cantor").unwrap_or("lebesgue"))),
        ("C", json!(args.c)),
        ("alpha", json!(args.alpha)),
        ("besicovitch", json!(space.n_besicovitch)),
        ("rho_height", json!(args.rho_height)),
        ("rho_grid", json!(args.rho_grid)),
    ] {
        run.param(k, v);
    }
    let cfg = Theorem22Config {
        map,
        center,
        radius: args.radius,
        measure: match args.measure {
            MeasureArg::Lebesgue => BaseMeasure::Lebesgue,
            MeasureArg::Cantor => BaseMeasure::Cantor,
        },
        t: args.t,
        eps: args.eps_grid.clone(),
        samples: args.samples,
        seed: run.seed,
        goodness,
        space,
        rho_height: args.rho_height,
        rho_grid: args.rho_grid,
    };
    let rep = theorem22_verify(&cfg)?;
    let summary = json!({ "bound_ok": rep.bound_ok, "slope": rep.slope, "slope_ok": rep.slope_ok, "rho": rep.rho.rho });
    let ok = rep.bound_ok;
    run.finish(&out_path(&args.out, "nondiv-verify"), EstimateKind::MonteCarloWithCi, true, rep, summary)?;
    if !ok {
        eprintln!("escape fraction exceeds the bound beyond 3 sigma");
    }
    Ok(true)
}

fn run_marking(cli: &Cli, args: &MarkingArgs, mut run: Run) -> CmdResult {
    let k = match (&args.map, args.k) {
        (Some(path), _) => {
            let map = read_map(&mut run, path)?;
            if map != PolyMap::identity(map.dim_in) {
                return Err(Fail::input(format!("{}: marking checks support the identity map only", path.display())));
            }
            map.dim_in + 1
        }
        (None, Some(k)) => k,
        (None, None) => return Err(Fail::input("give --map or --k")),
    };
    let eps = args.eps.iter().map(|e| rational_arg("eps", e)).collect::<Result<Vec<_>, _>>()?;
    run.param("k", k);
    run.param("lambda", &args.lambda);
    run.param("grid", args.grid);
    run.param("rho", &args.rho);
    run.param("eps", &args.eps);
    let cfg = MarkingConfig {
        k,
        lambda: rational_arg("lambda", &args.lambda)?,
        grid_per_axis: args.grid,
        rho: rational_arg("rho", &args.rho)?,
        eps,
        budget: cli.budget_nodes.unwrap_or(dioexp::lattices::DEFAULT_NODE_BUDGET),
    };
    let rep = marking_inclusion_check(&cfg)?;
    let summary = json!({ "checks": rep.checks, "marked": rep.marked, "violations": rep.violations.len() });
    let clean = rep.violations.is_empty();
    run.finish(&out_path(&args.out, "nondiv-marking"), EstimateKind::Verification, true, rep, summary)?;
    if !clean {
        return Err(Fail { code: 1, msg: "marked point with a short vector: implementation bug".into() });
    }
    Ok(true)
}

fn run_selftest(args: &OutArg, run: Run) -> CmdResult {
    let suites = selftest::run_all(run.seed);
    for s in &suites {
        println!("{}: {} cases, {} failures", s.name, s.cases, s.failures);
    }
    let failures: usize = suites.iter().map(|s| s.failures).sum();
    let summary = json!({ "failures": failures });
    run.finish(&out_path(args, "selftest"), EstimateKind::Verification, true, &suites, summary)?;
    if failures > 0 {
        return Err(Fail { code: 1, msg: format!("{failures} identity failures") });
    }
    Ok(true)
}

fn run_search_gap(cli: &Cli, args: &SearchGapArgs, mut run: Run, started: Instant) -> CmdResult {
    run.param("trials", args.gap.trials);
    run.param("height", args.gap.gap_height);
    run.param("bits", args.gap.bits);
    run.param("strategy", args.gap.strategy as u8);
    let rep = question61_search(&gap_options(&args.gap, run.seed, budget(cli, started)))?;
    let complete = rep.complete;
    let summary = json!({ "trials_run": rep.trials_run, "best_gap": rep.best.as_ref().map(|b| b.gap) });
    run.finish(&out_path(&args.out, "search-gap"), EstimateKind::LowerBound, complete, rep, summary)?;
    Ok(complete)
}

fn dispatch(cli: &Cli) -> CmdResult {
    let started = Instant::now();
    let mut run = Run {
        seed: cli.seed,
        workers: rayon::current_num_threads(),
        started: report::now_ms(),
        ..Run::default()
    };
    if let Some(n) = cli.budget_nodes {
        run.param("budget_nodes", n);
    }
    if let Some(s) = cli.budget_seconds {
        run.param("budget_seconds", s);
    }
    match &cli.command {
        Command::Exponent(a) => {
            run.command = "exponent".into();
            run_exponent(cli, a, run, started)
        }
        Command::Subspace(a) => {
            run.command = "subspace".into();
            run_subspace(cli, a, run, started)
        }
        Command::Flow(a) => {
            run.command = "flow".into();
            run_flow(cli, a, run)
        }
        Command::Nondiv { command: NondivCommand::Verify(a) } => {
            run.command = "nondiv verify".into();
            run_verify(a, run)
        }
        Command::Nondiv { command: NondivCommand::Marking(a) } => {
            run.command = "nondiv marking".into();
            run_marking(cli, a, run)
        }
        Command::Selftest(a) => {
            run.command = "selftest".into();
            run_selftest(a, run)
        }
        Command::SearchGap(a) => {
            run.command = "search-gap".into();
            run_search_gap(cli, a, run, started)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("budget exhausted; partial results written");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
