//! Command-line front end: experiment registry, JSON run-configs, CSV/JSON
//! report emission.
//!
//! Exit codes: 0 all assertions passed, 1 an assertion failed (the trend
//! table is printed), 2 configuration error, 3 I/O error.

use clap::{Args, Parser, Subcommand};
use dgheat::lab::{
    run_convergence_study, run_maxreg_scan, run_monotonicity_check, run_projection_bound_check,
    run_resolvent_scan, run_smoothing_scan, ConvergeConfig, Forcing, InitialData, MaxregConfig,
    MonotonicityConfig, ProjBoundConfig, RefineMode, ResolventConfig, SmoothingConfig,
};
use dgheat::norms::NormSpec;
use dgheat::rational::derive_family;
use dgheat::report::ExperimentReport;
use dgheat::spatial::ops::Exponent;
use dgheat::spatial::{build_space, DomainKind, FeSpace};
use dgheat::stepper::{dg_solve, Quantity};
use dgheat::time_partition::TimePartition;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser)]
#[command(name = "dgheat", about = "dG(q)cG(r) heat solver and estimate-verification harness")]
struct Cli {
    /// Worker threads for the drivers (grid points run in parallel).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base path for the CSV + JSON report (extension is added).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every randomized input.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpaceArgs {
    /// Spatial dimension (1 or 2).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Elements per side.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Polynomial degree r.
    #[arg(long, default_value_t = 1)]
    degree: usize,
}

impl SpaceArgs {
    fn build(&self) -> dgheat::Result<Arc<FeSpace>> {
        Ok(Arc::new(build_space(domain_of(self.dim)?, self.n, self.degree)?))
    }
}

fn domain_of(dim: usize) -> dgheat::Result<DomainKind> {
    match dim {
        1 => Ok(DomainKind::UnitInterval),
        2 => Ok(DomainKind::UnitSquare),
        d => Err(dgheat::Error::Capability(format!(
            "dimension {d} not supported (1 or 2)"
        ))),
    }
}

#[derive(Args, Clone)]
struct TimeArgs {
    /// Horizon T.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Number of time steps.
    #[arg(long = "M", default_value_t = 8)]
    steps: usize,
    /// Graded mesh exponent; 1 gives the uniform mesh.
    #[arg(long = "grading-alpha")]
    grading_alpha: Option<f64>,
}

impl TimeArgs {
    fn build(&self) -> dgheat::Result<TimePartition> {
        match self.grading_alpha {
            Some(alpha) => TimePartition::graded(self.horizon, self.steps, alpha),
            None => TimePartition::uniform(self.horizon, self.steps),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and optionally dump nodal snapshots as CSV.
    Solve {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, default_value_t = 0)]
        q: usize,
        /// Manufactured problem id (sin_heat_1d, sin_heat_2d).
        #[arg(long, default_value = "sin_heat_1d")]
        problem: String,
        /// CSV path for nodal snapshots at the time nodes.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Base path for coordinate-format dumps of the assembled mass and
        /// stiffness operators (`<base>.mass.txt`, `<base>.stiffness.txt`).
        #[arg(long)]
        dump_operators: Option<PathBuf>,
    },
    /// Print the one-step rational kernels as exact fractions and decimals.
    Rational {
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
    /// Non-growth of the homogeneous dG(0) solution.
    Monotonic {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Homogeneous smoothing-constant scan over time refinements.
    Smoothing {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0)]
        q: usize,
        /// bump | random_signs | eigenmode:IDX
        #[arg(long, default_value = "bump")]
        u0: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 8)]
        base_m: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Maximal-regularity ratio scan for the forced problem.
    Maxreg {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0)]
        q: usize,
        /// polynomial | alternating_mode:IDX | random_constants | eigenmode_constant:IDX
        #[arg(long, default_value = "polynomial")]
        forcing: String,
        /// Comma-separated time exponents, e.g. "1,2,inf".
        #[arg(long, default_value = "1,2,inf")]
        s: String,
        /// Comma-separated space exponents.
        #[arg(long, default_value = "1,2,inf")]
        p: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 64)]
        base_m: usize,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sectorial resolvent-bound scan over meshes.
    Resolvent {
        /// Comma-separated dim:n mesh list, e.g. "1:32,1:64,2:8".
        #[arg(long, default_value = "1:32,1:64,2:8")]
        meshes: String,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// Sector half-angle.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-2)]
        abs_lo: f64,
        #[arg(long, default_value_t = 1e4)]
        abs_hi: f64,
        #[arg(long, default_value_t = 13)]
        points_per_ray: usize,
        #[arg(long, default_value = "1,2,inf")]
        p: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Convergence-order study against a manufactured solution.
    Converge {
        #[arg(long, default_value = "sin_heat_1d")]
        problem: String,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// k | h | both
        #[arg(long, default_value = "k")]
        mode: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 64)]
        base_m: usize,
        #[arg(long, default_value_t = 32)]
        base_n: usize,
        #[arg(long, default_value = "2")]
        s: String,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Assert the fitted slope against this value (+- slope-tol).
        #[arg(long)]
        expected_slope: Option<f64>,
        #[arg(long, default_value_t = 0.15)]
        slope_tol: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Error-vs-projection-defect boundedness check.
    Projbound {
        #[arg(long, default_value = "sin_heat_1d")]
        problem: String,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 64)]
        base_m: usize,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "1,2")]
        s: String,
        #[arg(long, default_value = "1,2")]
        p: String,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dispatch an experiment from a JSON run-config file.
    Run {
        config: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("config error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // ignore the error when a pool exists already (tests call run() twice)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", render_error(&e));
            error_code(&e)
        }
    }
}

fn error_code(e: &dgheat::Error) -> i32 {
    use dgheat::Error as E;
    match e {
        E::Io(_) => EXIT_IO,
        E::Domain { .. } | E::MeshCondition { .. } | E::Capability(_) | E::Usage(_)
        | E::Config(_) => EXIT_CONFIG,
        _ => EXIT_ASSERTION,
    }
}

fn render_error(e: &dgheat::Error) -> String {
    match error_code(e) {
        EXIT_CONFIG => format!("config error: {e}"),
        EXIT_IO => format!("i/o error: {e}"),
        _ => format!("error: {e}"),
    }
}

fn dispatch(cli: &Cli) -> dgheat::Result<i32> {
    match &cli.command {
        Command::Solve {
            space,
            time,
            q,
            problem,
            dump,
            dump_operators,
        } => {
            let sp = space.build()?;
            let part = time.build()?;
            let prob = problem_by_id(problem)?;
            if prob.domain != sp.domain {
                return Err(dgheat::Error::Config(format!(
                    "problem {} lives on {:?}, space is {:?}",
                    prob.id, prob.domain, sp.domain
                )));
            }
            let u0 = prob.u0();
            let sol = dg_solve(&sp, &part, *q, Some(&u0), Some(&prob.f))?;
            println!(
                "solved {}: dim={} n={} r={} q={} M={} (T={})",
                prob.id,
                space.dim,
                space.n,
                space.degree,
                q,
                part.num_intervals(),
                part.horizon()
            );
            if let Some(path) = dump {
                dump_snapshots(&sol, path)?;
                println!("snapshots written to {}", path.display());
            }
            if let Some(base) = dump_operators {
                let write = |suffix: &str, m: &dgheat::band::BandMatrix| -> dgheat::Result<()> {
                    let mut out = String::new();
                    for (i, j, v) in m.triplets() {
                        out.push_str(&format!("{i} {j} {v}\n"));
                    }
                    std::fs::write(with_suffix(base, suffix), out)?;
                    Ok(())
                };
                write("mass.txt", &sp.mass)?;
                write("stiffness.txt", &sp.stiffness)?;
                println!("operators written to {}.{{mass,stiffness}}.txt", base.display());
            }
            Ok(EXIT_OK)
        }
        Command::Rational { q } => {
            let fam = derive_family(*q)?;
            print!("{}", fam.pretty());
            if let Some(out) = &cli.out {
                let path = out.with_extension("json");
                std::fs::write(&path, serde_json::to_string_pretty(&fam.to_json()).unwrap())?;
                println!("family written to {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Monotonic {
            space,
            time,
            q,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let sp = space.build()?;
            let part = time.build()?;
            let cfg = MonotonicityConfig {
                q: *q,
                seed: cli.seed,
                ..Default::default()
            };
            finish(run_monotonicity_check(&sp, &part, &cfg)?, cli.out.as_deref())
        }
        Command::Smoothing {
            space,
            q,
            u0,
            levels,
            base_m,
            horizon,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let sp = space.build()?;
            let cfg = SmoothingConfig {
                q: *q,
                u0: parse_initial(u0)?,
                levels: *levels,
                base_m: *base_m,
                horizon: *horizon,
                seed: cli.seed,
                ..Default::default()
            };
            finish(run_smoothing_scan(&sp, &cfg)?, cli.out.as_deref())
        }
        Command::Maxreg {
            space,
            q,
            forcing,
            s,
            p,
            levels,
            base_m,
            horizon,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let sp = space.build()?;
            let cfg = MaxregConfig {
                q: *q,
                grid: exponent_grid(s, p)?,
                forcing: parse_forcing(forcing)?,
                levels: *levels,
                base_m: *base_m,
                horizon: *horizon,
                seed: cli.seed,
                lowered_log: true,
            };
            finish(run_maxreg_scan(&sp, &cfg)?, cli.out.as_deref())
        }
        Command::Resolvent {
            meshes,
            degree,
            gamma,
            abs_lo,
            abs_hi,
            points_per_ray,
            p,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let spaces = parse_meshes(meshes, *degree)?;
            let cfg = ResolventConfig {
                gamma: *gamma,
                abs_range: (*abs_lo, *abs_hi),
                points_per_ray: *points_per_ray,
                ps: parse_exponents(p)?,
                seed: cli.seed,
                ..Default::default()
            };
            finish(run_resolvent_scan(&spaces, &cfg)?, cli.out.as_deref())
        }
        Command::Converge {
            problem,
            q,
            r,
            mode,
            levels,
            base_m,
            base_n,
            s,
            p,
            horizon,
            expected_slope,
            slope_tol,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let prob = problem_by_id(problem)?;
            let cfg = ConvergeConfig {
                q: *q,
                r: *r,
                spec: NormSpec::new(parse_exponent(s)?, parse_exponent(p)?),
                mode: parse_mode(mode)?,
                levels: *levels,
                base_m: *base_m,
                base_n: *base_n,
                horizon: *horizon,
                expected_slope: expected_slope.map(|e| (e, *slope_tol)),
            };
            finish(run_convergence_study(&prob, &cfg)?, cli.out.as_deref())
        }
        Command::Projbound {
            problem,
            q,
            r,
            levels,
            base_m,
            n,
            s,
            p,
            horizon,
            config,
        } => {
            if let Some(path) = config {
                return run_config(path, cli.out.as_deref());
            }
            let prob = problem_by_id(problem)?;
            let cfg = ProjBoundConfig {
                q: *q,
                r: *r,
                grid: exponent_grid(s, p)?,
                levels: *levels,
                base_m: *base_m,
                n: *n,
                horizon: *horizon,
            };
            finish(run_projection_bound_check(&prob, &cfg)?, cli.out.as_deref())
        }
        Command::Run { config } => run_config(config, cli.out.as_deref()),
    }
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    base.with_file_name(name)
}

fn problem_by_id(id: &str) -> dgheat::Result<dgheat::problems::ManufacturedProblem> {
    dgheat::problems::by_id(id).ok_or_else(|| {
        dgheat::Error::Config(format!(
            "unknown problem {id:?}; available: {}",
            dgheat::problems::ALL_IDS.join(", ")
        ))
    })
}

fn parse_exponent(s: &str) -> dgheat::Result<Exponent> {
    Exponent::parse(s.trim())
}

fn parse_exponents(s: &str) -> dgheat::Result<Vec<Exponent>> {
    s.split(',').map(parse_exponent).collect()
}

fn exponent_grid(s: &str, p: &str) -> dgheat::Result<Vec<(Exponent, Exponent)>> {
    let ss = parse_exponents(s)?;
    let ps = parse_exponents(p)?;
    let mut grid = Vec::new();
    for a in &ss {
        for b in &ps {
            grid.push((*a, *b));
        }
    }
    Ok(grid)
}

fn parse_initial(s: &str) -> dgheat::Result<InitialData> {
    match s.split_once(':') {
        None => match s {
            "bump" => Ok(InitialData::Bump),
            "random_signs" => Ok(InitialData::RandomSigns),
            "zero" => Ok(InitialData::Zero),
            other => Err(dgheat::Error::Config(format!(
                "unknown initial data {other:?}"
            ))),
        },
        Some(("eigenmode", idx)) => idx
            .parse()
            .map(InitialData::Eigenmode)
            .map_err(|e| dgheat::Error::Config(format!("eigenmode index: {e}"))),
        Some((other, _)) => Err(dgheat::Error::Config(format!(
            "unknown initial data {other:?}"
        ))),
    }
}

fn parse_forcing(s: &str) -> dgheat::Result<Forcing> {
    match s.split_once(':') {
        None => match s {
            "polynomial" => Ok(Forcing::Polynomial),
            "random_constants" => Ok(Forcing::RandomConstants),
            other => Err(dgheat::Error::Config(format!("unknown forcing {other:?}"))),
        },
        Some(("alternating_mode", idx)) => idx
            .parse()
            .map(Forcing::AlternatingMode)
            .map_err(|e| dgheat::Error::Config(format!("mode index: {e}"))),
        Some(("eigenmode_constant", idx)) => idx
            .parse()
            .map(Forcing::EigenmodeConstant)
            .map_err(|e| dgheat::Error::Config(format!("mode index: {e}"))),
        Some((other, _)) => Err(dgheat::Error::Config(format!("unknown forcing {other:?}"))),
    }
}

fn parse_mode(s: &str) -> dgheat::Result<RefineMode> {
    match s {
        "k" | "refine_k" => Ok(RefineMode::RefineK),
        "h" | "refine_h" => Ok(RefineMode::RefineH),
        "both" | "refine_both" => Ok(RefineMode::RefineBoth),
        other => Err(dgheat::Error::Config(format!(
            "unknown refinement mode {other:?} (k | h | both)"
        ))),
    }
}

fn parse_meshes(s: &str, degree: usize) -> dgheat::Result<Vec<(String, Arc<FeSpace>)>> {
    s.split(',')
        .map(|item| {
            let (dim, n) = item.trim().split_once(':').ok_or_else(|| {
                dgheat::Error::Config(format!("mesh spec {item:?} is not dim:n"))
            })?;
            let dim: usize = dim
                .parse()
                .map_err(|e| dgheat::Error::Config(format!("mesh dim: {e}")))?;
            let n: usize = n
                .parse()
                .map_err(|e| dgheat::Error::Config(format!("mesh n: {e}")))?;
            let space = Arc::new(build_space(domain_of(dim)?, n, degree)?);
            Ok((format!("dim{dim}_n{n}"), space))
        })
        .collect()
}

fn dump_snapshots(sol: &dgheat::stepper::DgSolution, path: &Path) -> dgheat::Result<()> {
    use std::io::Write;
    let mut out = String::from("m,t,dof,x,y,value\n");
    let space = sol.space();
    let part = sol.partition();
    for m in 1..=part.num_intervals() {
        let values = sol.evaluate(part.node(m), Quantity::Value)?.values;
        for g in 0..space.num_dofs() {
            let xy = space.dof_coord(g);
            let v = space.interior_index(g).map_or(0.0, |i| values[i]);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m,
                part.node(m),
                g,
                xy[0],
                xy[1],
                v
            ));
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Print the per-assertion verdicts, emit reports, map to the exit code.
fn finish(report: ExperimentReport, out: Option<&Path>) -> dgheat::Result<i32> {
    for a in &report.assertions {
        println!(
            "[{}] {}: value {:.6e} vs bound {:.6e}",
            if a.passed { "pass" } else { "FAIL" },
            a.name,
            a.value,
            a.bound
        );
    }
    if !report.all_passed() {
        println!("-- trend table --");
        print!("{}", report.to_csv_string());
    }
    if let Some(base) = out {
        let (csv, json) = report.emit(base)?;
        println!("report: {} / {}", csv.display(), json.display());
    }
    println!(
        "{}: {} assertions, {}",
        report.experiment,
        report.assertions.len(),
        if report.all_passed() { "all passed" } else { "FAILURES" }
    );
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    })
}

// ---- JSON run-configs ------------------------------------------------------

#[derive(Deserialize)]
struct ExperimentTag {
    experiment: String,
}

fn config_err(e: impl std::fmt::Display) -> dgheat::Error {
    dgheat::Error::Config(e.to_string())
}

/// Dispatch a JSON run-config; unknown keys are rejected.
pub fn run_config(path: &Path, out_flag: Option<&Path>) -> dgheat::Result<i32> {
    let text = std::fs::read_to_string(path)?;
    let tag: ExperimentTag = serde_json::from_str(&text).map_err(config_err)?;
    let out_of = |o: &Option<String>| -> Option<PathBuf> {
        out_flag
            .map(Path::to_path_buf)
            .or_else(|| o.as_ref().map(PathBuf::from))
    };
    match tag.experiment.as_str() {
        "rational" => {
            let c: RationalJson = serde_json::from_str(&text).map_err(config_err)?;
            let fam = derive_family(c.q)?;
            print!("{}", fam.pretty());
            if let Some(out) = out_of(&c.out) {
                std::fs::write(
                    out.with_extension("json"),
                    serde_json::to_string_pretty(&fam.to_json()).unwrap(),
                )?;
            }
            Ok(EXIT_OK)
        }
        "monotonic" => {
            let c: MonotonicJson = serde_json::from_str(&text).map_err(config_err)?;
            let space = Arc::new(build_space(domain_of(c.dim)?, c.n, c.degree)?);
            let part = TimePartition::uniform(c.t, c.m)?;
            let mut cfg = MonotonicityConfig {
                q: c.q,
                seed: c.seed,
                ..Default::default()
            };
            if let Some(ps) = &c.p {
                cfg.ps = ps.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            }
            if let Some(u0s) = &c.u0 {
                cfg.u0s = u0s.clone();
            }
            finish(run_monotonicity_check(&space, &part, &cfg)?, out_of(&c.out).as_deref())
        }
        "smoothing" => {
            let c: SmoothingJson = serde_json::from_str(&text).map_err(config_err)?;
            let space = Arc::new(build_space(domain_of(c.dim)?, c.n, c.degree)?);
            let mut cfg = SmoothingConfig {
                q: c.q,
                u0: c.u0,
                levels: c.levels,
                base_m: c.base_m,
                horizon: c.t,
                seed: c.seed,
                ..Default::default()
            };
            if let Some(ps) = &c.p {
                cfg.ps = ps.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            }
            finish(run_smoothing_scan(&space, &cfg)?, out_of(&c.out).as_deref())
        }
        "maxreg" => {
            let c: MaxregJson = serde_json::from_str(&text).map_err(config_err)?;
            let space = Arc::new(build_space(domain_of(c.dim)?, c.n, c.degree)?);
            let ss: Vec<Exponent> = c.s.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            let ps: Vec<Exponent> = c.p.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            let mut grid = Vec::new();
            for a in &ss {
                for b in &ps {
                    grid.push((*a, *b));
                }
            }
            let cfg = MaxregConfig {
                q: c.q,
                grid,
                forcing: c.forcing,
                levels: c.levels,
                base_m: c.base_m,
                horizon: c.t,
                seed: c.seed,
                lowered_log: c.lowered_log,
            };
            finish(run_maxreg_scan(&space, &cfg)?, out_of(&c.out).as_deref())
        }
        "resolvent" => {
            let c: ResolventJson = serde_json::from_str(&text).map_err(config_err)?;
            let spaces = c
                .meshes
                .iter()
                .map(|(dim, n)| {
                    let space = Arc::new(build_space(domain_of(*dim)?, *n, c.degree)?);
                    Ok((format!("dim{dim}_n{n}"), space))
                })
                .collect::<dgheat::Result<Vec<_>>>()?;
            let cfg = ResolventConfig {
                gamma: c.gamma,
                abs_range: (c.abs_lo, c.abs_hi),
                points_per_ray: c.points_per_ray,
                ps: c.p.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?,
                seed: c.seed,
                ..Default::default()
            };
            finish(run_resolvent_scan(&spaces, &cfg)?, out_of(&c.out).as_deref())
        }
        "converge" => {
            let c: ConvergeJson = serde_json::from_str(&text).map_err(config_err)?;
            let prob = problem_by_id(&c.problem)?;
            let cfg = ConvergeConfig {
                q: c.q,
                r: c.r,
                spec: NormSpec::new(Exponent::parse(&c.s)?, Exponent::parse(&c.p)?),
                mode: parse_mode(&c.mode)?,
                levels: c.levels,
                base_m: c.base_m,
                base_n: c.base_n,
                horizon: c.t,
                expected_slope: c.expected_slope.map(|e| (e, c.slope_tol)),
            };
            finish(run_convergence_study(&prob, &cfg)?, out_of(&c.out).as_deref())
        }
        "projbound" => {
            let c: ProjBoundJson = serde_json::from_str(&text).map_err(config_err)?;
            let prob = problem_by_id(&c.problem)?;
            let ss: Vec<Exponent> = c.s.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            let ps: Vec<Exponent> = c.p.iter().map(|x| Exponent::parse(x)).collect::<dgheat::Result<_>>()?;
            let mut grid = Vec::new();
            for a in &ss {
                for b in &ps {
                    grid.push((*a, *b));
                }
            }
            let cfg = ProjBoundConfig {
                q: c.q,
                r: c.r,
                grid,
                levels: c.levels,
                base_m: c.base_m,
                n: c.n,
                horizon: c.t,
            };
            finish(run_projection_bound_check(&prob, &cfg)?, out_of(&c.out).as_deref())
        }
        other => Err(dgheat::Error::Config(format!(
            "unknown experiment {other:?}"
        ))),
    }
}

fn default_seed() -> u64 {
    0
}
fn default_t() -> f64 {
    1.0
}
fn default_degree() -> usize {
    1
}
fn default_levels() -> usize {
    4
}
fn default_true() -> bool {
    true
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct RationalJson {
    #[allow(dead_code)]
    experiment: String,
    q: usize,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct MonotonicJson {
    #[allow(dead_code)]
    experiment: String,
    #[serde(default = "default_seed")]
    seed: u64,
    dim: usize,
    n: usize,
    #[serde(default = "default_degree")]
    degree: usize,
    #[serde(default = "default_t")]
    t: f64,
    m: usize,
    #[serde(default)]
    q: usize,
    #[serde(default)]
    p: Option<Vec<String>>,
    #[serde(default)]
    u0: Option<Vec<InitialData>>,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct SmoothingJson {
    #[allow(dead_code)]
    experiment: String,
    #[serde(default = "default_seed")]
    seed: u64,
    dim: usize,
    n: usize,
    #[serde(default = "default_degree")]
    degree: usize,
    #[serde(default)]
    q: usize,
    u0: InitialData,
    #[serde(default)]
    p: Option<Vec<String>>,
    #[serde(default = "default_levels")]
    levels: usize,
    base_m: usize,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct MaxregJson {
    #[allow(dead_code)]
    experiment: String,
    #[serde(default = "default_seed")]
    seed: u64,
    dim: usize,
    n: usize,
    #[serde(default = "default_degree")]
    degree: usize,
    #[serde(default)]
    q: usize,
    forcing: Forcing,
    s: Vec<String>,
    p: Vec<String>,
    #[serde(default = "default_levels")]
    levels: usize,
    base_m: usize,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default = "default_true")]
    lowered_log: bool,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct ResolventJson {
    #[allow(dead_code)]
    experiment: String,
    #[serde(default = "default_seed")]
    seed: u64,
    meshes: Vec<(usize, usize)>,
    #[serde(default = "default_degree")]
    degree: usize,
    gamma: f64,
    abs_lo: f64,
    abs_hi: f64,
    points_per_ray: usize,
    p: Vec<String>,
    #[serde(default)]
    out: Option<String>,
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct ConvergeJson {
    #[allow(dead_code)]
    experiment: String,
    problem: String,
    q: usize,
    r: usize,
    mode: String,
    s: String,
    p: String,
    #[serde(default = "default_levels")]
    levels: usize,
    base_m: usize,
    base_n: usize,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default)]
    expected_slope: Option<f64>,
    #[serde(default = "default_slope_tol")]
    slope_tol: f64,
    #[serde(default)]
    out: Option<String>,
}

fn default_slope_tol() -> f64 {
    0.15
}

#[derive(Deserialize, serde::Serialize, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
struct ProjBoundJson {
    #[allow(dead_code)]
    experiment: String,
    problem: String,
    q: usize,
    r: usize,
    s: Vec<String>,
    p: Vec<String>,
    #[serde(default = "default_levels")]
    levels: usize,
    base_m: usize,
    n: usize,
    #[serde(default = "default_t")]
    t: f64,
    #[serde(default)]
    out: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_configs_round_trip() {
        let samples = [
            r#"{"experiment":"rational","q":2}"#,
            r#"{"experiment":"monotonic","dim":1,"n":32,"m":8,"seed":3}"#,
            r#"{"experiment":"smoothing","dim":1,"n":64,"q":1,"u0":{"kind":"eigenmode","index":2},"base_m":8}"#,
            r#"{"experiment":"maxreg","dim":1,"n":64,"q":0,"forcing":{"kind":"polynomial"},"s":["1","inf"],"p":["2"],"base_m":64}"#,
            r#"{"experiment":"resolvent","meshes":[[1,32],[2,8]],"gamma":0.785,"abs_lo":0.01,"abs_hi":10000.0,"points_per_ray":13,"p":["1","2","inf"]}"#,
            r#"{"experiment":"converge","problem":"sin_heat_1d","q":1,"r":1,"mode":"k","s":"2","p":"2","base_m":64,"base_n":64}"#,
            r#"{"experiment":"projbound","problem":"sin_heat_1d","q":0,"r":1,"s":["1","2"],"p":["1","2"],"base_m":64,"n":128}"#,
        ];
        fn round_trip<T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug>(
            text: &str,
        ) {
            let a: T = serde_json::from_str(text).unwrap();
            let b: T = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            assert_eq!(a, b);
        }
        round_trip::<RationalJson>(samples[0]);
        round_trip::<MonotonicJson>(samples[1]);
        round_trip::<SmoothingJson>(samples[2]);
        round_trip::<MaxregJson>(samples[3]);
        round_trip::<ResolventJson>(samples[4]);
        round_trip::<ConvergeJson>(samples[5]);
        round_trip::<ProjBoundJson>(samples[6]);
    }

    #[test]
    fn exponent_and_descriptor_parsers() {
        assert!(matches!(parse_exponent("inf"), Ok(Exponent::Inf)));
        assert!(parse_exponent("0.5").is_err());
        assert!(matches!(parse_initial("eigenmode:4"), Ok(InitialData::Eigenmode(4))));
        assert!(matches!(parse_forcing("alternating_mode:2"), Ok(Forcing::AlternatingMode(2))));
        assert!(parse_forcing("bogus").is_err());
        assert!(matches!(parse_mode("both"), Ok(RefineMode::RefineBoth)));
    }
}
