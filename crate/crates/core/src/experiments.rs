//! Scripted studies built from the public solver and diagnostics API. Each
//! returns a [`StudyReport`] with measured tables and pass/fail gates.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentKind, SimConfig};
use crate::diagnostics::{
    energy_identity_check, intermediate_fraction, plateau_count, steady_state_residuals,
};
use crate::error::{Error, Result};
use crate::field::{field_integral, l1_distance, CellField};
use crate::grid::Grid;
use crate::io::config_hash;
use crate::kinetic::{box_average, lemma41_check, XiGrid};
use crate::solver::{advance, Trajectory};

/// Relative slack allowed by the monotone-trend gates.
pub const TREND_SLACK: f64 = 0.1;
/// Minimum `R(b)/R(b/2)` at the smallest viscosity.
pub const BOX_RATIO: f64 = 1.3;
/// Plateau-structure threshold on the intermediate-value fraction.
pub const PLATEAU_FRACTION: f64 = 0.05;
/// Steady-state threshold on `D` and `R_support`.
pub const STEADY_TOL: f64 = 1e-6;
/// Tolerance on `0 ≤ ρ − u·f ≤ C·f(1−f)` for averaged fields.
pub const LEMMA_TOL: f64 = 1e-12;
/// Largest face flux tolerated across a stationary interface.
pub const INTERFACE_FLUX_TOL: f64 = 1e-9;
/// Largest single-step drop of `E` tolerated on hyperbolic runs.
pub const ENERGY_DROP_TOL: f64 = 1e-12;
/// Distance to the constant state for the diffusive regime.
pub const CONSTANT_STATE_TOL: f64 = 1e-3;
/// L¹ radius around the frozen plateau profile.
pub const DWELL_RADIUS: f64 = 0.05;
/// Required dwell time in units of the formation time.
pub const DWELL_RATIO: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Gate {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured >= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub study: String,
    pub config_hash: String,
    pub tables: Vec<Table>,
    pub gates: Vec<Gate>,
    pub artifacts: Vec<PathBuf>,
}

impl StudyReport {
    fn new(study: &str, config: &SimConfig) -> Self {
        Self {
            study: study.into(),
            config_hash: config_hash(config),
            tables: Vec::new(),
            gates: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("study {}\nconfig {}\n", self.study, self.config_hash);
        for g in &self.gates {
            let _ = writeln!(
                out,
                "{} {:<28} measured {:<12.4e} threshold {:<10.3e} {}",
                if g.passed { "PASS" } else { "FAIL" },
                g.name,
                g.measured,
                g.threshold,
                g.detail
            );
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n[{}]\n{}", t.name, t.csv().trim_end());
        }
        out
    }
}

/// One rung of a viscosity ladder.
#[derive(Clone, Debug)]
pub struct LadderRun {
    pub epsilon: f64,
    pub trajectory: Trajectory,
}

fn quiet(mut cfg: SimConfig) -> SimConfig {
    cfg.output.entropy_levels.clear();
    cfg.output.timeseries_every = usize::MAX;
    cfg
}

/// Runs `config` once per rung of its ε-ladder, in parallel.
pub fn ladder_runs(config: &SimConfig) -> Result<Vec<LadderRun>> {
    config.validate()?;
    config
        .experiment
        .epsilon_ladder
        .par_iter()
        .map(|&epsilon| {
            let cfg = quiet(config.clone().with_epsilon(epsilon));
            Ok(LadderRun {
                epsilon,
                trajectory: advance(&cfg)?,
            })
        })
        .collect()
}

fn bounds_gate(runs: &[&Trajectory], volume: f64) -> Vec<Gate> {
    let violation = runs
        .iter()
        .map(|t| t.audit.max_u_violation.max(t.audit.max_s_violation))
        .fold(0.0, f64::max);
    let drift = runs
        .iter()
        .map(|t| t.audit.max_mass_drift)
        .fold(0.0, f64::max);
    vec![
        Gate::at_most(
            "bounds",
            violation,
            1e-12,
            "max excursion of u, S outside [0,1]",
        ),
        Gate::at_most("mass", drift, 1e-10 * volume, "max |mass(t) - mass(0)|"),
    ]
}

/// Cauchy distances `d(ε) = ‖u^ε(T) − u^{ε/2}(T)‖_{L¹}` along the ladder and
/// the time-integrated defect `∫ε‖∇u^ε‖² dt`.
pub fn vanishing_viscosity_study(config: &SimConfig) -> Result<StudyReport> {
    let runs = ladder_runs(config)?;
    vanishing_viscosity_from_runs(config, &runs)
}

pub fn vanishing_viscosity_from_runs(
    config: &SimConfig,
    runs: &[LadderRun],
) -> Result<StudyReport> {
    if runs.len() < 3 {
        return Err(Error::param(
            "experiment.epsilon_ladder",
            "needs at least three rungs",
        ));
    }
    let mut report = StudyReport::new("vanishing-viscosity", config);
    let mut table = Table::new(
        "ladder",
        &["epsilon", "cauchy_distance", "integrated_defect"],
    );
    let mut distances = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let d = match runs.get(i + 1) {
            Some(next) => l1_distance(run.trajectory.final_u(), next.trajectory.final_u())?,
            None => f64::NAN,
        };
        if d.is_finite() {
            distances.push(d);
        }
        table
            .rows
            .push(vec![run.epsilon, d, run.trajectory.audit.integrated_defect]);
    }
    let worst_growth = distances
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    report.gates.push(Gate::at_most(
        "cauchy-nonincreasing",
        worst_growth,
        1.0 + TREND_SLACK,
        "max d(eps/2)/d(eps) along the ladder",
    ));
    let defects: Vec<f64> = runs
        .iter()
        .map(|r| r.trajectory.audit.integrated_defect)
        .collect();
    let growth = defects.iter().fold(0.0_f64, |m, &v| m.max(v)) / defects[0];
    report.gates.push(Gate::at_most(
        "defect-bounded",
        growth,
        2.0,
        "max integrated defect relative to the first rung",
    ));
    let trajs: Vec<&Trajectory> = runs.iter().map(|r| &r.trajectory).collect();
    report
        .gates
        .extend(bounds_gate(&trajs, config.build_grid()?.volume()));
    report.tables.push(table);
    Ok(report)
}

/// Alternating 0/1 cells: the worst case for rigidity.
pub fn checkerboard(grid: &Grid) -> CellField {
    let values = (0..grid.n_cells())
        .map(|c| {
            let [i, j] = grid.coords(c);
            ((i + j) % 2) as f64
        })
        .collect();
    CellField::new(grid, values).expect("0/1 values are valid")
}

fn rigidity_snapshots(traj: &Trajectory, per_box: usize) -> Vec<CellField> {
    let mut snaps: Vec<CellField> = traj
        .snapshots
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| s.u.clone())
        .collect();
    snaps.truncate(snaps.len() - snaps.len() % per_box);
    snaps
}

/// Rigidity defects `R(ε, b)` of space-time box averages of the ladder's
/// indicator lifts, plus a checkerboard negative control.
pub fn rigidity_study(config: &SimConfig) -> Result<StudyReport> {
    let runs = ladder_runs(config)?;
    rigidity_from_runs(config, &runs)
}

pub fn rigidity_from_runs(config: &SimConfig, runs: &[LadderRun]) -> Result<StudyReport> {
    let x = &config.experiment;
    let xi = XiGrid::new(config.numerics.xi_bins)?;
    let grid = config.build_grid()?;
    let mut boxes = x.box_cells.clone();
    boxes.sort_unstable_by(|a, b| b.cmp(a));
    let mut report = StudyReport::new("rigidity", config);
    let mut cols = vec!["epsilon".to_string()];
    cols.extend(boxes.iter().map(|b| format!("R_b{b}")));
    let mut table = Table {
        name: "rigidity".into(),
        columns: cols,
        rows: Vec::new(),
    };
    let mut lemma_worst = 0.0_f64;
    let mut r = vec![vec![0.0; boxes.len()]; runs.len()];
    for (i, run) in runs.iter().enumerate() {
        let snaps = rigidity_snapshots(&run.trajectory, x.box_snapshots);
        if snaps.is_empty() {
            return Err(Error::param(
                "experiment.box_snapshots",
                "more than the stored snapshots",
            ));
        }
        for (j, &b) in boxes.iter().enumerate() {
            let avg = box_average(&snaps, b, x.box_snapshots, xi)?;
            r[i][j] = avg.rigidity_defect();
            for slab in &avg.slabs {
                lemma_worst = lemma_worst.max(lemma41_check(slab, avg.max_sample)?.worst());
            }
        }
        let mut row = vec![run.epsilon];
        row.extend(&r[i]);
        table.rows.push(row);
    }
    let trend = (0..boxes.len())
        .flat_map(|j| r.windows(2).map(move |w| w[1][j] / w[0][j]))
        .fold(0.0, f64::max);
    report.gates.push(Gate::at_most(
        "a:ladder-nonincreasing",
        trend,
        1.0 + TREND_SLACK,
        "max R(eps/2,b)/R(eps,b) over boxes",
    ));
    let last = r.last().cloned().unwrap_or_default();
    let box_ratio = last
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min);
    report.gates.push(Gate::at_least(
        "b:box-ratio",
        box_ratio,
        BOX_RATIO,
        "min R(b)/R(b/2) at the smallest eps",
    ));
    report.gates.push(Gate::at_most(
        "c:rho-bound",
        lemma_worst,
        LEMMA_TOL,
        "max violation of 0 <= rho - u f <= C f(1-f)",
    ));
    let board = checkerboard(&grid);
    let target = grid.volume() / 4.0;
    let mut control = Table::new("checkerboard", &["box", "R"]);
    let mut control_err = 0.0_f64;
    for &b in boxes.iter().filter(|b| *b % 2 == 0) {
        let snaps = vec![board.clone(); x.box_snapshots];
        let rb = box_average(&snaps, b, x.box_snapshots, xi)?.rigidity_defect();
        control_err = control_err.max((rb - target).abs());
        control.rows.push(vec![b as f64, rb]);
    }
    report.gates.push(Gate::at_most(
        "control:checkerboard",
        control_err,
        1e-12,
        "|R - |Omega|/4| for the alternating field (must stay away from 0)",
    ));
    report.tables.push(table);
    report.tables.push(control);
    Ok(report)
}

/// Long hyperbolic run: plateau formation and steady-state gates.
pub fn long_time_study(config: &SimConfig) -> Result<StudyReport> {
    let traj = advance(config)?;
    long_time_from_run(config, &traj)
}

pub fn long_time_from_run(config: &SimConfig, traj: &Trajectory) -> Result<StudyReport> {
    let mut report = StudyReport::new("long-time", config);
    let fin = &traj.final_state;
    let steady = steady_state_residuals(&fin.u, &fin.s)?;
    let energy = energy_identity_check(&traj.energy);
    let d_final = traj.energy.last().map_or(0.0, |r| r.d);
    let volume = fin.u.grid().volume();
    report
        .gates
        .push(Gate::at_most("a:dissipation", d_final, STEADY_TOL, "D(T)"));
    report.gates.push(Gate::at_most(
        "b:plateaus",
        intermediate_fraction(&fin.u),
        PLATEAU_FRACTION,
        "fraction of cells with u in (0.05, 0.95)",
    ));
    report.gates.push(Gate::at_most(
        "c:mass",
        traj.audit.max_mass_drift,
        1e-10 * volume,
        "max |mass(t) - mass(0)|",
    ));
    report.gates.push(Gate::at_most(
        "d:energy-monotone",
        energy.max_decrease,
        ENERGY_DROP_TOL,
        "largest single-step drop of E",
    ));
    report.gates.push(Gate::at_most(
        "e:support",
        steady.support,
        STEADY_TOL,
        "R_support(T)",
    ));
    report.gates.push(Gate::at_most(
        "f:interface-flux",
        steady.max_face_flux,
        INTERFACE_FLUX_TOL,
        "max |Godunov face flux| at T",
    ));
    report.gates.push(Gate::at_most(
        "cumulative-dissipation",
        energy.cumulative_d,
        0.5 * volume + 0.02,
        "sum dt D",
    ));
    let mut table = Table::new(
        "snapshots",
        &["t", "E", "D", "intermediate_fraction", "plateaus"],
    );
    for s in &traj.snapshots {
        let e = crate::diagnostics::free_energy(&s.u, &s.s)?;
        let d = crate::diagnostics::dissipation_rate(&s.u, &s.s)?;
        table.rows.push(vec![
            s.t,
            e,
            d,
            intermediate_fraction(&s.u),
            plateau_count(&s.u) as f64,
        ]);
    }
    report.tables.push(table);
    Ok(report)
}

/// Formation time and dwell of a trajectory near its first quasi-steady profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dwell {
    pub formation_time: f64,
    pub dwell_time: f64,
}

/// Formation is the first snapshot after which the L¹ change rate drops
/// below `1e-3·|Ω|` per unit time; dwell is the contiguous time from there
/// spent within [`DWELL_RADIUS`] of that frozen profile.
pub fn measure_dwell(traj: &Trajectory) -> Result<Option<Dwell>> {
    let snaps = &traj.snapshots;
    let volume = traj.final_state.u.grid().volume();
    let mut formed = None;
    for w in snaps.windows(2) {
        let rate = l1_distance(&w[0].u, &w[1].u)? / (w[1].t - w[0].t);
        if rate <= 1e-3 * volume {
            formed = Some(w[0].clone());
            break;
        }
    }
    let Some(frozen) = formed else {
        return Ok(None);
    };
    let mut end = frozen.t;
    for s in snaps.iter().filter(|s| s.t > frozen.t) {
        if l1_distance(&s.u, &frozen.u)? > DWELL_RADIUS * volume {
            break;
        }
        end = s.t;
    }
    Ok(Some(Dwell {
        formation_time: frozen.t,
        dwell_time: end - frozen.t,
    }))
}

/// Constant-state regime (`ε > 1/4`), its hyperbolic control, and the
/// metastable regime at small `ε`, all from the configured initial data.
pub fn metastability_study(config: &SimConfig) -> Result<StudyReport> {
    config.validate()?;
    if config.grid.cells.len() != 1 {
        return Err(Error::param(
            "grid.cells",
            "the metastability study is one-dimensional",
        ));
    }
    let x = &config.experiment;
    let mut diffusive = quiet(config.clone().with_epsilon(x.diffusive_epsilon));
    diffusive.grid.cells = vec![x.diffusive_cells];
    let control = quiet(config.clone().with_epsilon(0.0));
    let mut metastable = quiet(config.clone().with_epsilon(x.metastable_epsilon));
    metastable.numerics.final_time = x.metastable_horizon;
    metastable.output.cadence = Some(x.metastable_horizon / 400.0);
    let configs = [diffusive, control, metastable];
    let mut runs: Vec<Trajectory> = configs.par_iter().map(advance).collect::<Result<_>>()?;
    let meta = runs.pop().expect("three runs");
    let ctrl = runs.pop().expect("three runs");
    let diff = runs.pop().expect("three runs");

    let mut report = StudyReport::new("metastability", config);
    let u = diff.final_u();
    let mean = field_integral(u) / u.grid().volume();
    let dev = u
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    report.gates.push(Gate::at_most(
        "constant-state",
        dev,
        CONSTANT_STATE_TOL,
        format!("||u(T) - mean||_inf at eps = {}", x.diffusive_epsilon),
    ));
    report.gates.push(Gate::at_most(
        "control:plateaus",
        intermediate_fraction(ctrl.final_u()),
        PLATEAU_FRACTION,
        "eps = 0 intermediate-value fraction at T",
    ));
    report.gates.push(Gate::at_most(
        "control:dissipation",
        ctrl.energy.last().map_or(0.0, |r| r.d),
        STEADY_TOL,
        "eps = 0 D(T)",
    ));
    let dwell = measure_dwell(&meta)?;
    let (ratio, detail) = match dwell {
        Some(d) if d.formation_time > 0.0 => (
            d.dwell_time / d.formation_time,
            format!(
                "formation {:.3}, dwell {:.3}",
                d.formation_time, d.dwell_time
            ),
        ),
        Some(d) => (
            f64::INFINITY,
            format!("formed at t = 0, dwell {:.3}", d.dwell_time),
        ),
        None => (0.0, "no quasi-steady profile formed".to_string()),
    };
    report
        .gates
        .push(Gate::at_least("dwell-ratio", ratio, DWELL_RATIO, detail));
    report.gates.extend(bounds_gate(
        &[&diff, &ctrl, &meta],
        config.build_grid()?.volume(),
    ));
    let mut table = Table::new(
        "metastable",
        &["t", "plateaus", "intermediate_fraction", "D"],
    );
    for s in meta.snapshots.iter().step_by(10) {
        table.rows.push(vec![
            s.t,
            plateau_count(&s.u) as f64,
            intermediate_fraction(&s.u),
            crate::diagnostics::dissipation_rate(&s.u, &s.s)?,
        ]);
    }
    report.tables.push(table);
    Ok(report)
}

/// Runs the study named by `kind` on `config`.
pub fn run_study(kind: ExperimentKind, config: &SimConfig) -> Result<StudyReport> {
    match kind {
        ExperimentKind::VanishingViscosity => vanishing_viscosity_study(config),
        ExperimentKind::Rigidity => rigidity_study(config),
        ExperimentKind::LongTime => long_time_study(config),
        ExperimentKind::Metastability => metastability_study(config),
        ExperimentKind::None => Err(Error::param("experiment.name", "no study selected")),
    }
}
