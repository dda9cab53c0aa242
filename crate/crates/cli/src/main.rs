use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kslab_core::config::{ExperimentKind, DEFAULT_ENTROPY_LEVELS, DEFAULT_TOL};
use kslab_core::diagnostics::{
    intermediate_fraction, kruzkov_residual, max_positive, plateau_count, steady_state_residuals,
    EntropyPair, ResidualForm,
};
use kslab_core::elliptic::{elliptic_residual, face_gradient, solve_potential};
use kslab_core::experiments::run_study;
use kslab_core::hyperbolic::{cfl_time_step, hyperbolic_step};
use kslab_core::io::{
    atomic_write, read_config, read_snapshot, serialize_config, write_snapshot, write_timeseries,
    RunManifest, VERSION,
};
use kslab_core::kinetic::{lemma41_check, lift_indicator, XiGrid};
use kslab_core::solver::advance;
use kslab_core::{Error, SimConfig};

/// Tolerance for the pass/fail audits of `check`.
const CHECK_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "kslab", about = "Aggregation-equation solvers and studies")]
struct Cli {
    /// Suppress progress output on standard output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named study: vanishing-viscosity, rigidity, long-time, metastability.
    Study {
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Audit a snapshot file.
    Check {
        snapshot: PathBuf,
        /// Supplies entropy levels and the elliptic tolerance.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the version.
    Version,
}

enum Failure {
    Usage(String),
    Gate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter { .. }
            | Error::Config(_)
            | Error::UnknownPreset(_)
            | Error::Grid(_)
            | Error::BoxSize(_)
            | Error::Snapshot(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Gate(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Gate(msg)) => {
            eprintln!("kslab: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("kslab: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let say = |line: &str| {
        if !cli.quiet {
            println!("{line}");
        }
    };
    match &cli.command {
        Command::Version => {
            println!("kslab {VERSION}");
            Ok(())
        }
        Command::Run { config, out } => run(&read_config(config)?, out, &say),
        Command::Study { name, config, out } => {
            let kind = ExperimentKind::from_name(name)
                .filter(|k| *k != ExperimentKind::None)
                .ok_or_else(|| Failure::Usage(format!("unknown study `{name}`")))?;
            study(kind, &read_config(config)?, out, &say)
        }
        Command::Check { snapshot, config } => {
            let cfg = config.as_deref().map(read_config).transpose()?;
            check(snapshot, cfg.as_ref(), &say)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

fn run(cfg: &SimConfig, out: &Path, say: &dyn Fn(&str)) -> Result<(), Failure> {
    create_dir(out)?;
    let traj = advance(cfg)?;
    let mut manifest = RunManifest::new(cfg);
    atomic_write(&out.join("config.toml"), serialize_config(cfg)?.as_bytes())?;
    manifest.add("config.toml", "config");
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:04}.txt");
        write_snapshot(&out.join(&name), snap.t, &snap.u, &snap.s)?;
        manifest.add(name, "snapshot");
    }
    write_timeseries(
        &out.join("timeseries.csv"),
        &traj.records,
        &cfg.output.entropy_levels,
    )?;
    manifest.add("timeseries.csv", "timeseries");
    manifest.write(&out.join("manifest.json"))?;
    say(&format!(
        "{} steps, {} snapshots, max mass drift {:.3e}, written to {}",
        traj.audit.steps,
        traj.snapshots.len(),
        traj.audit.max_mass_drift,
        out.display()
    ));
    Ok(())
}

fn study(
    kind: ExperimentKind,
    cfg: &SimConfig,
    out: &Path,
    say: &dyn Fn(&str),
) -> Result<(), Failure> {
    let dir = out.join(kind.name());
    create_dir(&dir)?;
    let report = run_study(kind, cfg)?;
    let mut manifest = RunManifest::new(cfg);
    for table in &report.tables {
        let name = format!("{}.csv", table.name);
        atomic_write(&dir.join(&name), table.csv().as_bytes())?;
        manifest.add(name, "table");
    }
    let text = report.to_text();
    atomic_write(&dir.join("report.txt"), text.as_bytes())?;
    manifest.add("report.txt", "report");
    manifest.write(&dir.join("manifest.json"))?;
    say(&text);
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .gates
            .iter()
            .filter(|g| !g.passed)
            .map(|g| g.name.as_str())
            .collect();
        Err(Failure::Gate(format!(
            "study {} failed gates: {}",
            kind.name(),
            failed.join(", ")
        )))
    }
}

fn check(path: &Path, cfg: Option<&SimConfig>, say: &dyn Fn(&str)) -> Result<(), Failure> {
    let snap = read_snapshot(path)?;
    let levels = cfg.map_or(DEFAULT_ENTROPY_LEVELS.to_vec(), |c| {
        c.output.entropy_levels.clone()
    });
    let tol = cfg.map_or(DEFAULT_TOL, |c| c.numerics.tol);
    let u = &snap.u;
    let stored = elliptic_residual(u, &snap.s)?
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let (s, _) = solve_potential(u, tol)?;
    let steady = steady_state_residuals(u, &s)?;
    let bound = u.unit_interval_violation().max(s.unit_interval_violation());

    let xi = XiGrid::new(cfg.map_or(64, |c| c.numerics.xi_bins))?;
    let lemma = lemma41_check(&lift_indicator(u, xi), 1.0)?.worst();

    let a = face_gradient(&s);
    let dt = cfl_time_step(&a, 0.0, 0.9)?;
    let mut entropy = 0.0_f64;
    if dt.is_finite() {
        let scheme = cfg.map_or(Default::default(), |c| c.numerics.flux);
        let (next, _) = hyperbolic_step(u, &a, dt, scheme)?;
        for &k in &levels {
            let r = kruzkov_residual(
                u,
                &next,
                &a,
                dt,
                EntropyPair::new(k)?,
                ResidualForm::Discrete,
            )?;
            entropy = entropy.max(max_positive(&r));
        }
    }

    say(&format!("t                      {}", snap.t));
    say(&format!("stored elliptic resid  {stored:.3e}"));
    say(&format!("transport residual     {:.3e}", steady.transport));
    say(&format!("elliptic residual      {:.3e}", steady.elliptic));
    say(&format!("support residual       {:.3e}", steady.support));
    say(&format!(
        "max face flux          {:.3e}",
        steady.max_face_flux
    ));
    say(&format!(
        "intermediate fraction  {}",
        intermediate_fraction(u)
    ));
    say(&format!("plateaus               {}", plateau_count(u)));
    let audits = [
        ("bounds", bound),
        ("rho-bound", lemma),
        ("entropy", entropy),
    ];
    let mut failed = Vec::new();
    for (name, value) in audits {
        // Adding zero maps a negative zero to +0 for display.
        let value = value + 0.0;
        let pass = value <= CHECK_TOL;
        say(&format!(
            "{} {name:<20} {value:.3e}",
            if pass { "PASS" } else { "FAIL" }
        ));
        if !pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gate(format!(
            "check failed: {}",
            failed.join(", ")
        )))
    }
}
