//! `quadlab`: seeded experiments on integer points of `Q(x) = m` near
//! boundary directions.
//!
//! Tables go to stdout or `--out`, logs to stderr. Exit status is 0 on
//! success, 2 on an invariant failure and 3 on budget exhaustion.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{error, info, warn};

use quadlab_core::approx::{sample_boundary, Direction};
use quadlab_core::experiment::{
    gamma_csv, run_dichotomy, run_examples, run_gamma, run_selfcheck, ExperimentConfig,
};
use quadlab_core::geometry::{divergence_classifier, Chart, CoordinateRegion, Predicate};
use quadlab_core::lattice_points::{enumerate_ball, enumerate_in_cusp, EnumConfig};
use quadlab_core::{rng, Error, Execution};

#[derive(Parser, Debug)]
#[command(name = "quadlab", version, about = "Integer points of indefinite quadrics in shrinking cusps")]
struct Cli {
    /// JSON configuration file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// ψ as `powerlaw:eps=2,s=1`, `logpower:eps=1,a=0.5` or `const:eps=0.1`.
    #[arg(long, global = true)]
    psi: Option<String>,
    /// Norm checkpoints, comma separated; the last one bounds single searches.
    #[arg(long = "T", global = true, value_delimiter = ',')]
    big_t: Option<Vec<f64>>,
    /// Number of boundary directions.
    #[arg(long = "N", global = true)]
    n_directions: Option<usize>,
    /// Candidate budget per enumeration.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Every integer point of X with t_min ≤ ‖x‖ ≤ T.
    Enumerate {
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
    },
    /// Integer points in the cusp around one boundary direction.
    CuspHits {
        /// Direction as a JSON array; sampled from the seed when absent.
        #[arg(long)]
        direction: Option<String>,
        /// Stream index of the sampled direction.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Hit counts per direction and checkpoint, with predicted volumes.
    Dichotomy,
    /// Volumes of the coordinate regions at the given times.
    Volume {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0])]
        t_values: Vec<f64>,
        /// Monte-Carlo samples per region; 0 skips the estimate.
        #[arg(long, default_value_t = 0)]
        mc: u64,
    },
    /// Divergence verdict for ψ.
    Classify {
        /// Dimension d; taken from the form when absent.
        #[arg(long)]
        d: Option<usize>,
    },
    /// The Pell construction and the rational-direction obstruction.
    Examples,
    /// Form, chart and group suites as JSON.
    Selfcheck {
        /// Replace every floating-point tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Integer automorphisms of Q in the box at each t.
    GammaCount {
        #[arg(long, value_delimiter = ',')]
        t_values: Option<Vec<f64>>,
    },
}

/// How a successful run ended.
enum Status {
    Ok,
    Invariant,
    Budget,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let s = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_json(&s)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.psi {
        cfg.psi = p.clone();
    }
    if let Some(t) = &cli.big_t {
        cfg.checkpoints = t.clone();
    }
    if let Some(n) = cli.n_directions {
        cfg.n_directions = n;
    }
    if let Some(b) = cli.budget {
        cfg.budget = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn table<F>(header: Vec<String>, fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    fill(&mut w)?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn coord_header(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn run(cli: &Cli) -> Result<(String, Status)> {
    let cfg = load_config(cli)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let t_max = *cfg.checkpoints.last().expect("validated");
    match &cli.command {
        Command::Enumerate { t_min } => {
            let form = cfg.form.build()?;
            let ecfg = EnumConfig { budget: cfg.budget, ..EnumConfig::with_exec(exec) };
            let pts = enumerate_ball(&form, *t_min, t_max, &ecfg)?;
            info!("{} points with {t_min} ≤ ‖x‖ ≤ {t_max} on {form}", pts.len());
            let mut h = coord_header(form.dim());
            h.push("norm".into());
            let out = table(h, |w| {
                for p in &pts {
                    let mut rec: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
                    rec.push(p.norm.to_string());
                    w.write_record(&rec)?;
                }
                Ok(())
            })?;
            Ok((out, Status::Ok))
        }
        Command::CuspHits { direction, index } => {
            let (form, _) = cfg.form.build_with_basis()?;
            let psi = cfg.psi_spec()?;
            let v = match direction {
                Some(js) => {
                    let v: Vec<f64> = serde_json::from_str(js).context("direction must be a JSON array")?;
                    Direction::boundary(v, &form)?
                }
                None => sample_boundary(&form, &mut rng::stream(cfg.seed, *index))?,
            };
            info!("direction {}", serde_json::to_string(v.as_slice())?);
            let ecfg = EnumConfig { budget: cfg.budget, margin: cfg.margin, ..EnumConfig::with_exec(exec) };
            let hits = enumerate_in_cusp(&form, &v, &psi, cfg.t_min, t_max, &ecfg)?;
            info!("{} hits with {} ≤ ‖x‖ ≤ {t_max}", hits.len(), cfg.t_min);
            let mut h = coord_header(form.dim());
            h.extend(["norm", "direction_error", "psi"].map(String::from));
            let out = table(h, |w| {
                for r in &hits {
                    let mut rec: Vec<String> = r.point.coords.iter().map(|c| c.to_string()).collect();
                    rec.push(r.point.norm.to_string());
                    rec.push(r.direction_error.to_string());
                    rec.push(r.psi_value.to_string());
                    w.write_record(&rec)?;
                }
                Ok(())
            })?;
            Ok((out, Status::Ok))
        }
        Command::Dichotomy => {
            info!("{} directions, ψ = {}, checkpoints {:?}", cfg.n_directions, cfg.psi, cfg.checkpoints);
            let rep = run_dichotomy(&cfg, exec)?;
            info!("verdict: {} ({})", rep.classification.criterion, rep.classification.rule);
            info!("median hits per checkpoint: {:?}", rep.medians());
            info!("directions gaining hits after the first checkpoint: {:.0}%", 100.0 * rep.fraction_gaining());
            let status = if rep.any_partial() {
                warn!("budget exhausted for some directions; their rows are flagged partial");
                Status::Budget
            } else {
                Status::Ok
            };
            Ok((rep.to_csv(), status))
        }
        Command::Volume { t_values, mc } => {
            let (form, basis) = cfg.form.build_with_basis()?;
            let chart = Chart::new(&form, &basis)?;
            let psi = cfg.psi_spec()?;
            let h = ["t", "radius", "volume", "method", "mc_volume", "mc_stderr"].map(String::from).to_vec();
            let out = table(h, |w| {
                for (i, &t) in t_values.iter().enumerate() {
                    let region = CoordinateRegion::for_chart(&chart, t, psi.clone())?;
                    let (vol, method) = region.volume()?;
                    let (mv, me) = if *mc > 0 {
                        let seed = cfg.seed.wrapping_add(i as u64);
                        let est = region.mc_volume(seed, *mc, Predicate::Full, exec)?;
                        (est.value.to_string(), est.stderr.to_string())
                    } else {
                        (String::new(), String::new())
                    };
                    let rec = [t.to_string(), region.radius().to_string(), vol.to_string(), method.to_string(), mv, me];
                    w.write_record(&rec)?;
                }
                Ok(())
            })?;
            Ok((out, Status::Ok))
        }
        Command::Classify { d } => {
            let d = match d {
                Some(d) => *d,
                None => cfg.form.build()?.d(),
            };
            let c = divergence_classifier(&cfg.psi_spec()?, d)?;
            let h = ["psi", "d", "verdict", "rule"].map(String::from).to_vec();
            let out = table(h, |w| {
                w.write_record([cfg.psi.clone(), d.to_string(), c.criterion.to_string(), c.rule.clone()])?;
                Ok(())
            })?;
            Ok((out, Status::Ok))
        }
        Command::Examples => {
            let rep = run_examples(&cfg, exec)?;
            for c in &rep.claims {
                info!("{}", c.line());
            }
            let h = ["claim", "pass", "detail"].map(String::from).to_vec();
            let out = table(h, |w| {
                for c in &rep.claims {
                    w.write_record([c.name.clone(), c.pass.to_string(), c.detail.clone()])?;
                }
                Ok(())
            })?;
            Ok((out, if rep.all_pass() { Status::Ok } else { Status::Invariant }))
        }
        Command::Selfcheck { tolerance } => {
            let mut cfg = cfg;
            if tolerance.is_some() {
                cfg.selfcheck.tolerance = *tolerance;
            }
            let rep = run_selfcheck(&cfg);
            for c in &rep.suites {
                info!("{}", c.line());
            }
            let mut out = rep.to_json();
            out.push('\n');
            Ok((out, if rep.all_pass() { Status::Ok } else { Status::Invariant }))
        }
        Command::GammaCount { t_values } => {
            let mut cfg = cfg;
            if let Some(t) = t_values {
                cfg.gamma.t_values = t.clone();
            }
            let rows = run_gamma(&cfg, exec)?;
            for r in &rows {
                info!("t = {}: {} elements ({} evaluations)", r.t, r.count, r.evaluations);
            }
            Ok((gamma_csv(&rows), Status::Ok))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, status)) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display())),
                None => {
                    print!("{out}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                error!("{e:#}");
                return ExitCode::from(2);
            }
            match status {
                Status::Ok => ExitCode::SUCCESS,
                Status::Invariant => ExitCode::from(2),
                Status::Budget => ExitCode::from(3),
            }
        }
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
