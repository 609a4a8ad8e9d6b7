//! Command-line front end. Exit codes: 0 pass or determinate, 1 check
//! failure or error, 2 undetermined classification, 64 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Args, Parser, Subcommand};

use crate::config::{parse_resolution, GeodesicSpec, JobConfig};
use crate::connection::TangentPoint;
use crate::metrize::metrize;
use crate::pipeline::{self, Stage};
use crate::report::{Outcome, Report, Status};
use crate::tolerances::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNDETERMINED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "berwald",
    version,
    about = "Metrizability analysis for spherically symmetric affine connections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Grid resolution, overriding the config.
    #[arg(long, global = true, value_name = "NxM", value_parser = grid_arg)]
    grid: Option<(usize, usize)>,
    /// Sampling seed, overriding the config.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Replace a named tolerance; repeatable.
    #[arg(long = "tol-override", global = true, value_name = "NAME=VALUE", value_parser = override_arg)]
    tol_override: Vec<(String, f64)>,
    /// Write the JSON report here.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Suppress the human-readable table.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide Finsler and Riemann metrizability and the class.
    Classify(ConfigArg),
    /// Build and certify the metrizing forms.
    Metrize(ConfigArg),
    /// Certify and add Berwald, quadratic-fit and geodesic checks.
    Verify(ConfigArg),
    /// Integrate autoparallels, optionally also Finsler geodesics.
    Geodesic(GeodesicArgs),
    /// Full pipeline including trajectories.
    Report(ConfigArg),
}

#[derive(Debug, Args)]
struct ConfigArg {
    config: PathBuf,
}

#[derive(Debug, Args)]
struct GeodesicArgs {
    config: PathBuf,
    /// Initial position `t,r,theta,phi`.
    #[arg(long, value_parser = four_arg, allow_hyphen_values = true)]
    position: Option<[f64; 4]>,
    /// Initial velocity `tdot,rdot,thetadot,phidot`.
    #[arg(long, value_parser = four_arg, allow_hyphen_values = true)]
    velocity: Option<[f64; 4]>,
    /// Parameter length.
    #[arg(long = "T", value_name = "T")]
    t_end: Option<f64>,
    /// Number of output samples.
    #[arg(long)]
    n_out: Option<usize>,
    /// Autoparallel trajectory file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also integrate the Finsler geodesic of the built form and write it here.
    #[arg(long, value_name = "PATH")]
    finsler_out: Option<PathBuf>,
}

fn grid_arg(s: &str) -> Result<(usize, usize), String> {
    parse_resolution(s).ok_or_else(|| format!("expected NxM with N, M >= 2, got `{s}`"))
}

fn override_arg(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number"))?;
    if !Tolerances::NAMES.contains(&k.trim()) {
        return Err(format!(
            "unknown tolerance `{k}`; known: {}",
            Tolerances::NAMES.join(", ")
        ));
    }
    Ok((k.trim().to_string(), v))
}

fn four_arg(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{x}` is not a number"))
        })
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected four comma-separated numbers".to_string())
}

/// Parses `args` (including the program name) and runs the command.
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
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut tol = Tolerances::default();
    for (k, v) in &cli.tol_override {
        if let Err(e) = tol.set(k, *v) {
            let _ = writeln!(err, "error: --tol-override {k}={v}: {e}");
            return EXIT_USAGE;
        }
    }
    let path = match &cli.command {
        Command::Classify(c) | Command::Metrize(c) | Command::Verify(c) | Command::Report(c) => {
            &c.config
        }
        Command::Geodesic(g) => &g.config,
    };
    let mut cfg = match JobConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_FAIL;
        }
    };
    if let Some((n, m)) = cli.grid {
        cfg.grid = cfg.grid.with_resolution(n, m);
    }
    if let Some(s) = cli.seed {
        cfg.samples.seed = s;
    }
    let name = path.display().to_string();
    let report = match &cli.command {
        Command::Classify(_) => pipeline::run(&cfg, &name, Stage::Classify, &tol),
        Command::Metrize(_) => pipeline::run(&cfg, &name, Stage::Metrize, &tol),
        Command::Verify(_) => pipeline::run(&cfg, &name, Stage::Verify, &tol),
        Command::Report(_) => pipeline::run(&cfg, &name, Stage::Report, &tol),
        Command::Geodesic(g) => match geodesic_command(&mut cfg, &name, g, &tol) {
            Ok(r) => r,
            Err(msg) => {
                let _ = writeln!(err, "error: {msg}");
                return EXIT_FAIL;
            }
        },
    };
    emit(&report, cli.json.as_deref(), cli.quiet, out, err)
}

fn emit(
    report: &Report,
    json: Option<&Path>,
    quiet: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if let Some(p) = json {
        if let Err(e) = std::fs::write(p, report.to_json()) {
            let _ = writeln!(err, "error: writing {}: {e}", p.display());
            return EXIT_FAIL;
        }
    }
    if !quiet {
        let _ = write!(out, "{}", report.to_table());
    }
    if report.outcome.status != Status::Pass {
        let _ = writeln!(
            err,
            "{:?}: {}",
            report.outcome.status, report.outcome.message
        );
    }
    report.outcome.exit_code
}

fn write_file(p: &Path, text: &str) -> Result<(), String> {
    std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display()))
}

fn geodesic_command(
    cfg: &mut JobConfig,
    name: &str,
    g: &GeodesicArgs,
    tol: &Tolerances,
) -> Result<Report, String> {
    let mut spec = cfg.geodesic.unwrap_or(GeodesicSpec {
        start: TangentPoint::new([0.0; 4], [0.0; 4]),
        t_end: 0.5,
        n_out: 100,
    });
    if cfg.geodesic.is_none() && (g.position.is_none() || g.velocity.is_none()) {
        return Err("no [geodesic] block: pass --position and --velocity".into());
    }
    if let Some(x) = g.position {
        spec.start = spec.start.with_position(x);
    }
    if let Some(v) = g.velocity {
        spec.start = spec.start.with_velocity(v);
    }
    if let Some(t) = g.t_end {
        spec.t_end = t;
    }
    if let Some(n) = g.n_out {
        spec.n_out = n;
    }
    cfg.geodesic = Some(spec);

    let mut report = pipeline::run(cfg, name, Stage::Classify, tol);
    report.command = "geodesic".into();
    let built = if g.finsler_out.is_some() {
        let class = report
            .classification
            .as_ref()
            .ok_or_else(|| report.outcome.message.clone())
            .and_then(|c| pipeline::class_to_build(cfg, c).map_err(|o| o.message))?;
        Some(
            metrize(&cfg.connection, &cfg.grid, class, &cfg.task.build, tol)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    let (a, b, summary) =
        match pipeline::geodesics(cfg, built.as_ref().map(|m| m.lagrangian()), tol) {
            Ok(x) => x,
            Err(e) => {
                report.outcome = Outcome::new(Status::Fail, e.to_string());
                return Ok(report);
            }
        };
    if let Some(p) = &g.out {
        write_file(p, &a.to_columns())?;
    }
    if let (Some(p), Some(b)) = (&g.finsler_out, &b) {
        write_file(p, &b.to_columns())?;
    }
    report.outcome = match summary.discrepancy {
        Some(d) if !(d <= tol.geodesic) => Outcome::new(
            Status::Fail,
            format!(
                "trajectories differ by {d:e} (tolerance {:e})",
                tol.geodesic
            ),
        ),
        Some(d) => Outcome::new(Status::Pass, format!("trajectories agree to {d:e}")),
        None => Outcome::new(Status::Pass, "autoparallel integrated"),
    };
    report.geodesic = Some(summary);
    Ok(report)
}
