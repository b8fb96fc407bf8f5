mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nearsym_core::contour::PANEL_TIMES;
use nearsym_core::models::{ModelKind, ModelSpec};
use nearsym_core::obstruction::{example_manifolds, ManifoldInvariants};
use nearsym_core::parity::Parity;

use commands::{MoserArgs, TraceArgs};
use config::Config;
use report::{OutDir, Report};

/// Verification suites for near-symplectic model forms.
#[derive(Parser)]
#[command(name = "nearsym", version)]
struct Cli {
    /// Root directory for all written files.
    #[arg(long, global = true, default_value = "nearsym-out")]
    out: PathBuf,
    /// `key = value` file with defaults for the chosen command; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closedness, near-positivity and model-specific identities.
    Verify(VerifyArgs),
    /// Trace the zero set along the model's path.
    Trace(TraceCli),
    /// Parity of the zero circle of a quotient model.
    Parity(ParityCli),
    /// Contour panels of the handle family.
    Contours(ContoursCli),
    /// Moser flow for the straightening path.
    Moser(MoserCli),
    /// Hopf invariant of a map S3 -> S2.
    Hopf(HopfCli),
    /// Plane-field classes and the even-circle ledger.
    Obstruction(ObstructionCli),
    /// Run every suite with default parameters.
    ReportAll(ReportAllCli),
}

#[derive(Args)]
struct ModelArgs {
    /// theta, theta-ev, theta-odd, birth, surgery, omega-f, omega-delta-t, morse
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Points per axis of the near-positivity grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Points per axis of the estimate grid (omega-delta-t).
    #[arg(long)]
    estimate_grid: Option<usize>,
}

#[derive(Args)]
struct TraceCli {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Seeds per axis of the initial search grid.
    #[arg(long)]
    seeds: Option<usize>,
    /// Continuation step length.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct ParityCli {
    /// theta-ev, theta-odd or glued
    model: String,
    #[arg(long)]
    samples: Option<usize>,
    /// Traverse the circle backwards.
    #[arg(long)]
    reverse: bool,
}

#[derive(Args)]
struct ContoursCli {
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated parameter values.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Grid cells per axis.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct MoserCli {
    #[arg(long)]
    samples: Option<usize>,
    /// Adaptive integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Step count of the convergence reference solution.
    #[arg(long)]
    reference_steps: Option<usize>,
}

#[derive(Args)]
struct HopfCli {
    /// hopf, conjugate-hopf, constant or lemma-f
    #[arg(long)]
    map: Option<String>,
    /// Radius parameter of lemma-f.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct ObstructionCli {
    /// cp2, s1xs3cp2 or k3; sets the Betti numbers and c^2.
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    b1: Option<u32>,
    #[arg(long)]
    b2plus: Option<u32>,
    #[arg(long)]
    b2minus: Option<u32>,
    /// Comma-separated `even`/`odd` list of zero circles.
    #[arg(long)]
    parities: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<i64>,
}

#[derive(Args)]
struct ReportAllCli {
    /// Smaller grids and sample counts.
    #[arg(long)]
    quick: bool,
}

/// An error caused by the user's input rather than by a computation.
fn is_usage_error(e: &anyhow::Error) -> bool {
    use nearsym_core::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::InvalidParameter(_) | E::UnknownModel(_) | E::UnsupportedIndex(_) | E::FamilyInvalid(_)) => true,
        Some(_) => false,
        None => e.downcast_ref::<std::io::Error>().is_none(),
    }
}

fn slug(name: &str) -> String {
    name.chars().filter(char::is_ascii_alphanumeric).collect::<String>().to_lowercase()
}

fn model_spec(cfg: &Config, m: &ModelArgs, t: Option<f64>) -> Result<ModelSpec> {
    let kind = ModelKind::from_name(&m.model)?;
    let mut spec = ModelSpec::new(kind);
    spec.delta = cfg.or(m.delta, "delta", spec.delta)?;
    spec.t = cfg.or(t, "t", spec.t)?;
    let eps = cfg.pick(m.epsilon, "epsilon")?;
    spec.epsilon = match (eps, kind) {
        (Some(e), _) => e,
        (None, ModelKind::OmegaDeltaT) => commands::handle_epsilon(spec.delta)?,
        (None, _) => spec.epsilon,
    };
    if !(spec.epsilon > 0.0 && spec.delta > 0.0) {
        bail!("epsilon and delta must be positive");
    }
    Ok(spec)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        bail!("{name} must be positive");
    }
    Ok(v)
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize> {
    if v < min {
        bail!("{name} must be at least {min}");
    }
    Ok(v)
}

fn obstruction_inputs(cfg: &Config, a: &ObstructionCli) -> Result<(ManifoldInvariants, Vec<Parity>, Option<i64>)> {
    let mut inv = ManifoldInvariants::new(0, 1, 0);
    let mut c2 = None;
    if let Some(name) = cfg.pick(a.manifold.clone(), "manifold")? {
        let (_, i, c) = example_manifolds()
            .into_iter()
            .find(|(n, _, _)| slug(n) == slug(&name))
            .ok_or_else(|| nearsym_core::Error::InvalidParameter(format!("unknown manifold `{name}`")))?;
        inv = i;
        c2 = Some(c);
    }
    let inv = ManifoldInvariants::new(
        cfg.or(a.b1, "b1", inv.b1)?,
        cfg.or(a.b2plus, "b2plus", inv.b2_plus)?,
        cfg.or(a.b2minus, "b2minus", inv.b2_minus)?,
    );
    let parities = commands::parse_parities(&cfg.or(a.parities.clone(), "parities", String::new())?)?;
    Ok((inv, parities, cfg.pick(a.c2, "c2")?.or(c2)))
}

fn run(cli: &Cli, out: &OutDir) -> Result<Report> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Verify(a) => {
            cfg.check_keys(&["epsilon", "delta", "t", "grid", "estimate-grid"])?;
            let spec = model_spec(&cfg, &a.model, a.t)?;
            let grid = at_least("grid", cfg.or(a.grid, "grid", 9)?, 2)?;
            let est = at_least("estimate-grid", cfg.or(a.estimate_grid, "estimate-grid", 41)?, 2)?;
            commands::verify(&spec, grid, est)
        }
        Command::Trace(a) => {
            cfg.check_keys(&["epsilon", "delta", "t-min", "t-max", "steps", "seeds", "step"])?;
            let spec = model_spec(&cfg, &a.model, None)?;
            let args = TraceArgs {
                t_min: cfg.pick(a.t_min, "t-min")?,
                t_max: cfg.pick(a.t_max, "t-max")?,
                steps: at_least("steps", cfg.or(a.steps, "steps", 101)?, 2)?,
                seeds: at_least("seeds", cfg.or(a.seeds, "seeds", 14)?, 2)?,
                step: positive("step", cfg.or(a.step, "step", 0.05)?)?,
            };
            commands::trace(&spec, &args, out)
        }
        Command::Parity(a) => {
            cfg.check_keys(&["samples", "reverse"])?;
            let samples = at_least("samples", cfg.or(a.samples, "samples", 64)?, 8)?;
            let reverse = a.reverse || cfg.or(None, "reverse", false)?;
            commands::parity(&a.model, samples, reverse)
        }
        Command::Contours(a) => {
            cfg.check_keys(&["delta", "t", "cells"])?;
            let delta = cfg.or(a.delta, "delta", 0.1)?;
            let times = match a.t.clone() {
                Some(t) => t,
                None => match cfg.pick::<String>(None, "t")? {
                    Some(s) => s
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| anyhow::anyhow!("config key `t`: {e}"))?,
                    None => PANEL_TIMES.to_vec(),
                },
            };
            let cells = at_least("cells", cfg.or(a.cells, "cells", 200)?, 2)?;
            commands::contours(delta, &times, cells, out)
        }
        Command::Moser(a) => {
            cfg.check_keys(&["samples", "tol", "reference-steps"])?;
            commands::moser(&MoserArgs {
                samples: at_least("samples", cfg.or(a.samples, "samples", 100)?, 1)?,
                tol: positive("tol", cfg.or(a.tol, "tol", 1e-10)?)?,
                reference_steps: at_least("reference-steps", cfg.or(a.reference_steps, "reference-steps", 512)?, 16)?,
            })
        }
        Command::Hopf(a) => {
            cfg.check_keys(&["map", "r", "samples"])?;
            let map = cfg.or(a.map.clone(), "map", "hopf".to_string())?;
            let r = cfg.or(a.r, "r", 10.0)?;
            let samples = at_least("samples", cfg.or(a.samples, "samples", 100_000)?, 16)?;
            commands::hopf(&map, r, samples)
        }
        Command::Obstruction(a) => {
            cfg.check_keys(&["manifold", "b1", "b2plus", "b2minus", "parities", "c2"])?;
            let (inv, parities, c2) = obstruction_inputs(&cfg, a)?;
            commands::obstruction(inv, &parities, c2)
        }
        Command::ReportAll(a) => {
            cfg.check_keys(&["quick"])?;
            report_all(a.quick || cfg.or(None, "quick", false)?, out)
        }
    }
}

/// Every suite once; each sub-report is written next to the summary.
fn report_all(quick: bool, out: &OutDir) -> Result<Report> {
    let mut all = Report::new("report-all", None);
    all.param("quick", quick);
    let (grid, est, steps, seeds, samples, cells, hopf_samples) = if quick {
        (5, 9, 21, 9, 32, 80, 20_000)
    } else {
        (9, 41, 101, 14, 64, 200, 100_000)
    };
    let mut subs: Vec<(String, Report)> = Vec::new();

    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::new(kind);
        if kind == ModelKind::OmegaDeltaT {
            spec.epsilon = commands::handle_epsilon(spec.delta)?;
        }
        subs.push((format!("verify-{}", kind.name()), commands::verify(&spec, grid, est)?));
    }
    for kind in [ModelKind::Birth, ModelKind::Surgery] {
        let args = TraceArgs {
            t_min: None,
            t_max: None,
            steps,
            seeds,
            step: 0.05,
        };
        let spec = ModelSpec::new(kind);
        subs.push((format!("trace-{}", kind.name()), commands::trace(&spec, &args, out)?));
    }
    for name in ["theta-ev", "theta-odd", "glued"] {
        subs.push((format!("parity-{name}"), commands::parity(name, samples, false)?));
    }
    subs.push(("contours".into(), commands::contours(0.1, &PANEL_TIMES, cells, out)?));
    let moser = MoserArgs {
        samples: if quick { 20 } else { 100 },
        tol: 1e-10,
        reference_steps: 512,
    };
    subs.push(("moser".into(), commands::moser(&moser)?));
    for map in ["hopf", "conjugate-hopf", "constant", "lemma-f"] {
        subs.push((format!("hopf-{map}"), commands::hopf(map, 10.0, hopf_samples)?));
    }
    for (name, inv, c2) in example_manifolds() {
        // One even circle exactly when β is odd keeps the ledger consistent.
        let parities = if inv.beta() % 2 == 0 { vec![] } else { vec![Parity::Even] };
        subs.push((format!("obstruction-{}", slug(name)), commands::obstruction(inv, &parities, Some(c2))?));
    }

    for (name, r) in &subs {
        let rel = format!("report-all/{name}.json");
        out.write_report(r, &rel)?;
        let failed: Vec<_> = r.verdicts.iter().filter(|v| !v.pass).map(|v| v.name.clone()).collect();
        all.verdict(name, failed.is_empty(), json!({ "report": rel, "failed": failed }));
        all.artifacts.push(rel);
        all.artifacts.extend(r.artifacts.iter().cloned());
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Ok(n) = std::env::var("NEARSYM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: NEARSYM_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let result = OutDir::new(&cli.out).and_then(|out| {
        let r = run(&cli, &out)?;
        let name = match &cli.command {
            Command::ReportAll(_) => "report-all.json".to_string(),
            _ => match &r.model {
                Some(m) => format!("{}-{}.json", r.command, m),
                None => format!("{}.json", r.command),
            },
        };
        out.write_report(&r, &name)?;
        Ok(r)
    });
    match result {
        Ok(r) => {
            print!("{}", r.render());
            if r.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}
