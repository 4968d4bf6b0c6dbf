use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lorentz_core::geodesic::{integrate_geodesic, EventSpec, SpacetimePoint, TangentVector};
use lorentz_core::metric_space::{build_net, estimate_diameter};
use lorentz_core::FiberPoint;
use lorentz_lab::error::Context;
use lorentz_lab::report::collect_reports;
use lorentz_lab::{emit_report, run_suite, LabError, RunConfig, Suite, DEFAULT_OUT, OUT_ENV};

#[derive(Parser)]
#[command(name = "lorentz-lab", version, about = "Numerical checks on Lorentzian products R x F")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `jobs` from the config.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite, or `all` for the config's suite list.
    Verify {
        suite: String,
        #[command(flatten)]
        common: Common,
        /// Output directory; overrides the config and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one geodesic and write it as CSV.
    Geodesic {
        #[command(flatten)]
        common: Common,
        /// Start point `t,x1,...` in chart 0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        /// Initial velocity `dt,dx1,...`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        velocity: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        chart: u8,
        /// Affine length to integrate.
        #[arg(long, default_value_t = 5.0)]
        length: f64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an ε-net of F_T and print the diameter estimate as JSON.
    Diameter {
        #[command(flatten)]
        common: Common,
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
        #[arg(long)]
        epsilon: f64,
        /// Also write nodes.csv and edges.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the reports under a directory.
    Report { dir: PathBuf },
}

fn load(common: &Common) -> Result<RunConfig, LabError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = Some(jobs);
    }
    cfg.validate()?;
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn verify(suite: &str, common: &Common, out: Option<PathBuf>) -> Result<bool, LabError> {
    let selected: Vec<Suite> = if suite == "all" {
        let cfg = RunConfig::load(&common.config)?;
        if cfg.suites.is_empty() {
            return Err(LabError::Config("`verify all` needs a non-empty `suites` list".into()));
        }
        cfg.suites.iter().map(|s| Suite::parse(s)).collect::<Result<_, _>>()?
    } else {
        vec![Suite::parse(suite)?]
    };
    let mut cfg = load(common)?;
    let root = out_dir(out, &cfg);
    cfg.out = None;
    let mut all_passed = true;
    for s in selected {
        let report = run_suite(&cfg, s)?;
        let dir = if suite == "all" { root.join(s.name()) } else { root.clone() };
        emit_report(&report, &dir)?;
        println!("{} {} ({} ms) -> {}", if report.passed { "PASS" } else { "FAIL" }, s.name(), report.wall_ms, dir.display());
        all_passed &= report.passed;
    }
    Ok(all_passed)
}

fn geodesic(
    common: &Common,
    point: &[f64],
    velocity: &[f64],
    chart: u8,
    length: f64,
    out: Option<&Path>,
) -> Result<bool, LabError> {
    let cfg = load(common)?;
    let family = cfg.family();
    let n = family.dim();
    if point.len() != n + 1 || velocity.len() != n + 1 {
        return Err(LabError::Usage(format!("--point and --velocity need {} components", n + 1)));
    }
    let p = SpacetimePoint::new(point[0], FiberPoint::new(chart, point[1..].to_vec()));
    let v = TangentVector::new(velocity[0], velocity[1..].to_vec());
    let opts = cfg.tolerances.integration();
    let traj = integrate_geodesic(&family, &p, &v, length, &EventSpec::none(), &opts).context("geodesic")?;
    match out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
            traj.write_csv(std::io::BufWriter::new(f)).map_err(|e| LabError::io(path, e))?;
        }
        None => traj.write_csv(std::io::stdout().lock()).map_err(|e| LabError::io("<stdout>", e))?,
    }
    eprintln!(
        "causal={:?} h0={:e} drift={:e} span={} valid={}",
        traj.causal,
        traj.h0,
        traj.norm_drift,
        traj.affine_span(),
        traj.valid
    );
    Ok(traj.valid)
}

fn diameter(common: &Common, t: f64, epsilon: f64, out: Option<&Path>) -> Result<bool, LabError> {
    let cfg = load(common)?;
    let family = cfg.family();
    let net = build_net(&family, t, epsilon).context("net")?;
    let est = estimate_diameter(&net);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        let nodes = dir.join("nodes.csv");
        let f = std::fs::File::create(&nodes).map_err(|e| LabError::io(&nodes, e))?;
        net.write_nodes_csv(std::io::BufWriter::new(f)).map_err(|e| LabError::io(&nodes, e))?;
        let edges = dir.join("edges.csv");
        let f = std::fs::File::create(&edges).map_err(|e| LabError::io(&edges, e))?;
        net.write_edges_csv(std::io::BufWriter::new(f)).map_err(|e| LabError::io(&edges, e))?;
    }
    let v = serde_json::json!({
        "T": t,
        "epsilon": epsilon,
        "nodes": net.len(),
        "lower": est.lower,
        "upper": est.upper,
        "exact": est.exact,
    });
    println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
    Ok(true)
}

fn report(dir: &Path) -> Result<bool, LabError> {
    let rows = collect_reports(dir)?;
    if rows.is_empty() {
        return Err(LabError::Usage(format!("no report.json under {}", dir.display())));
    }
    let mut stdout = std::io::stdout().lock();
    for r in &rows {
        writeln!(stdout, "{} {:<13} {:<40} {}", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.family, r.path.display())
            .map_err(|e| LabError::io("<stdout>", e))?;
    }
    Ok(rows.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { suite, common, out } => verify(suite, common, out.clone()),
        Command::Geodesic { common, point, velocity, chart, length, out } => {
            geodesic(common, point, velocity, *chart, *length, out.as_deref())
        }
        Command::Diameter { common, t, epsilon, out } => diameter(common, *t, *epsilon, out.as_deref()),
        Command::Report { dir } => report(dir),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("lorentz-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
