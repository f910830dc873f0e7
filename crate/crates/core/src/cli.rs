//! The `incentive` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::catalog::{builtin, builtin_catalog, resolve_game};
use crate::dynamics::{integrate, DriftPolicy, IntegratorConfig, Method, TerminalStatus};
use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::incentive::{parse_spec, Incentive};
use crate::io::{format_profile, load_game_str, parse_profile, save_game, RunManifest};
use crate::search::{
    enumerate_pure, equilibrium_residual, find_equilibria, find_symmetric_equilibrium,
    nash_residual, reports_to_csv, EquilibriumReport, SearchConfig,
};
use crate::symmetry::SymmetryMap;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SIMPLEX: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "incentive", version, about = "Incentive dynamics and equilibria of finite games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the incentive dynamics or iterate the revision map.
    Simulate(SimulateArgs),
    /// Search for incentive equilibria.
    Solve(SolveArgs),
    /// Check whether a profile is an incentive equilibrium.
    Verify(VerifyArgs),
    /// List the built-in games, or print one as a game file.
    Catalog { name: Option<String> },
    /// Check every built-in game and a few known results.
    SelfTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Map,
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Renormalize,
    Reject,
}

#[derive(Debug, Args)]
struct Common {
    /// Game file, `-` for standard input, or a catalog name.
    #[arg(long)]
    game: String,
    /// Incentive spec, e.g. `nash`, `logit:eta=0.5`, `replicator:g=const:7`.
    #[arg(long)]
    incentive: String,
    #[arg(long, value_enum, default_value = "csv")]
    output_format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "rk4")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Integration horizon; the step budget is `ceil(t_max / dt)`, or
    /// `t_max` iterations for the map.
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    drift_tol: f64,
    #[arg(long, value_enum, default_value = "renormalize")]
    drift_policy: PolicyArg,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Profile literal, `uniform` or `random`.
    #[arg(long, default_value = "uniform")]
    start: String,
    /// Seed for `--start random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Also scan every pure profile.
    #[arg(long)]
    enumerate_pure: bool,
    /// Search the symmetric region only.
    #[arg(long)]
    symmetric: bool,
    /// Permutations for `--symmetric`: one per player, `;`-separated,
    /// 0-based images (default: identity for everyone).
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    dedup: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Profile literal: players separated by `;`, coordinates by `,`.
    #[arg(long)]
    profile: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Catalog { name } => catalog(name),
        Command::SelfTest => self_test(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Hypothesis { .. } => EXIT_VERIFY_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn load(common: &Common) -> Result<(Game, Box<dyn Incentive>)> {
    let incentive = parse_spec(&common.incentive)?;
    let game = resolve_game(&common.game)?;
    Ok((game, incentive))
}

fn emit(common: &Common, body: &str) -> Result<()> {
    match &common.output {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

/// JSON output embeds the manifest; CSV output puts it next to the file
/// as `<output>.manifest.json`, or on standard error without a file.
fn emit_with_manifest(
    common: &Common,
    manifest: &RunManifest,
    key: &str,
    payload: &impl Serialize,
    csv: impl FnOnce() -> String,
) -> Result<()> {
    match common.output_format {
        Format::Json => {
            let doc = json!({ "manifest": manifest, key: payload });
            emit(common, &(serde_json::to_string_pretty(&doc)? + "\n"))
        }
        Format::Csv => {
            let m = serde_json::to_string_pretty(manifest)? + "\n";
            match &common.output {
                Some(p) => {
                    let mut side = p.clone().into_os_string();
                    side.push(".manifest.json");
                    std::fs::write(side, m)?;
                }
                None => eprint!("{m}"),
            }
            emit(common, &csv())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let (game, incentive) = load(&a.common)?;
    let method = match a.method {
        MethodArg::Map => Method::DiscreteMap,
        MethodArg::Euler => Method::Euler,
        MethodArg::Rk4 => Method::Rk4,
    };
    if !(a.t_max >= 0.0 && a.t_max.is_finite()) {
        return Err(Error::Config(format!("t-max must be nonnegative, got {}", a.t_max)));
    }
    let max_steps = match method {
        Method::DiscreteMap => a.t_max.ceil() as usize,
        _ => (a.t_max / a.dt - 1e-9).ceil().max(0.0) as usize,
    };
    let cfg = IntegratorConfig {
        method,
        dt: a.dt,
        max_steps,
        tolerance: a.tol,
        drift_tolerance: a.drift_tol,
        drift_policy: match a.drift_policy {
            PolicyArg::Renormalize => DriftPolicy::Renormalize,
            PolicyArg::Reject => DriftPolicy::Reject,
        },
        record_every: a.record_every,
    };
    let counts = game.strategy_counts().to_vec();
    let x0 = match a.start.as_str() {
        "uniform" => Profile::uniform(&counts),
        "random" => Profile::random_dirichlet(&counts, &mut ChaCha8Rng::seed_from_u64(a.seed)),
        lit => parse_profile(lit)?,
    };
    let traj = integrate(&game, incentive.as_ref(), &x0, &cfg)?;
    let config = json!({ "integrator": cfg, "start": a.start });
    let manifest = RunManifest::new(&a.common.game, &incentive.spec(), &config, Some(a.seed));
    emit_with_manifest(&a.common, &manifest, "trajectory", &traj, || traj.to_csv())?;
    Ok(match traj.status {
        TerminalStatus::SimplexViolation { detail } | TerminalStatus::EvaluationError { detail } => {
            eprintln!("simulation stopped: {detail}");
            EXIT_SIMPLEX
        }
        _ => EXIT_OK,
    })
}

fn parse_sigma(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(';')
        .map(|perm| {
            perm.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad strategy index `{}` in sigma", t.trim())))
                })
                .collect()
        })
        .collect()
}

fn solve(a: SolveArgs) -> Result<i32> {
    let (game, incentive) = load(&a.common)?;
    let cfg = SearchConfig {
        random_starts: a.starts,
        vertex_starts: true,
        seed: a.seed,
        max_iterations: a.max_iter,
        tolerance: a.tol,
        dedup_radius: a.dedup,
    };
    let reports: Vec<EquilibriumReport> = if a.symmetric {
        let sym = match &a.sigma {
            Some(s) => SymmetryMap::new(game.strategy_counts(), parse_sigma(s)?)?,
            None => SymmetryMap::identity(game.strategy_counts())?,
        };
        vec![find_symmetric_equilibrium(&game, incentive.as_ref(), &sym, &cfg)?]
    } else if a.enumerate_pure {
        // Pure scan plus the interior equilibria from the multistart search.
        let mut reps = enumerate_pure(&game, incentive.as_ref(), cfg.tolerance)?;
        reps.extend(
            find_equilibria(&game, incentive.as_ref(), &cfg)?
                .into_iter()
                .filter(|r| r.converged && r.is_interior),
        );
        reps
    } else {
        find_equilibria(&game, incentive.as_ref(), &cfg)?
    };
    let config = json!({
        "search": cfg,
        "enumerate_pure": a.enumerate_pure,
        "symmetric": a.symmetric,
        "sigma": a.sigma,
    });
    let manifest = RunManifest::new(&a.common.game, &incentive.spec(), &config, Some(a.seed));
    emit_with_manifest(&a.common, &manifest, "reports", &reports, || reports_to_csv(&reports))?;
    Ok(if reports.iter().any(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let (game, incentive) = load(&a.common)?;
    let x = parse_profile(&a.profile)?;
    game.check_profile(&x)?;
    let report = EquilibriumReport::at(&game, incentive.as_ref(), x, 0, 0, a.tol)?;
    let body = match a.common.output_format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "profile": format_profile(&report.profile),
                "parallel_residual": report.parallel_residual,
                "map_residual": report.map_residual,
                "nash_residual": report.nash_residual,
                "equilibrium": report.converged,
            }))? + "\n"
        }
        Format::Csv => {
            let map = report.map_residual.map_or(String::new(), |v| v.to_string());
            format!(
                "quantity,value\nparallel_residual,{}\nmap_residual,{}\nnash_residual,{}\nequilibrium,{}\n",
                report.parallel_residual, map, report.nash_residual, report.converged
            )
        }
    };
    emit(&a.common, &body)?;
    Ok(if report.converged { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn catalog(name: Option<String>) -> Result<i32> {
    match name {
        None => {
            for (n, g) in builtin_catalog() {
                println!("{n}\t{:?}", g.strategy_counts());
            }
        }
        Some(n) => {
            let g = builtin(&n).ok_or_else(|| Error::Config(format!("no catalog game `{n}`")))?;
            println!("{}", save_game(&g));
        }
    }
    Ok(EXIT_OK)
}

fn self_test() -> Result<i32> {
    let mut failures = 0;
    for (name, g) in builtin_catalog() {
        let round_trip = load_game_str(&save_game(&g)).map(|back| back == g).unwrap_or(false);
        let finite = (0..g.n_players()).all(|i| g.payoffs(i).iter().all(|v| v.is_finite()));
        let ok = round_trip && finite && g.num_profiles() > 0;
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        failures += usize::from(!ok);
    }
    let pd = crate::catalog::prisoners_dilemma();
    let dd = Profile::pure(&[2, 2], &[1, 1])?;
    let nash = parse_spec("nash")?;
    let ok = equilibrium_residual(&pd, nash.as_ref(), &dd)? == 0.0 && nash_residual(&pd, &dd)? == 0.0;
    println!("{} prisoners_dilemma (D,D) is a Nash-incentive equilibrium", if ok { "ok  " } else { "FAIL" });
    failures += usize::from(!ok);
    Ok(if failures == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
