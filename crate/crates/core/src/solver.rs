//! The coupled time loop: per step, solve for `S`, take the face gradient,
//! choose `dt`, transport (finite-volume or kinetic), diffuse when `ε > 0`,
//! then audit bounds, mass, energy and entropy.

use crate::config::{Backend, SimConfig};
use crate::diagnostics::{
    defect_mass, dissipation_rate, free_energy, kruzkov_residual, max_positive, positive_integral,
    viscous_energy_rate, DiagnosticsRecord, EnergyRecord, EntropyPair, ResidualForm,
};
use crate::elliptic::{face_gradient, solve_potential};
use crate::error::{Error, Result};
use crate::field::{field_integral, CellField, FaceField};
use crate::hyperbolic::{cfl_time_step, diffusion_step, hyperbolic_step};
use crate::initial::initial_data;
use crate::kinetic::{kinetic_step, kinetic_time_limit, lift_indicator, KineticField, XiGrid};

/// States beyond this distance from `[0, 1]` abort the run.
pub const ABORT_VIOLATION: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: CellField,
    pub s: CellField,
}

/// Where the transport velocity comes from.
#[derive(Clone, Debug, Default)]
pub enum Velocity {
    /// `a = ∇_h S` with `S` re-solved every step.
    #[default]
    Coupled,
    /// A fixed face velocity (`S` is still solved for diagnostics).
    Imposed(FaceField),
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub velocity: Velocity,
    /// Extra snapshot times besides the cadence grid.
    pub extra_snapshot_times: Vec<f64>,
}

/// Per-level entropy audit across a run.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyAudit {
    pub k: f64,
    /// Largest cellwise positive part of the discrete cell-entropy residual.
    pub max_discrete: f64,
    /// Same for the interface-state residual.
    pub max_interface: f64,
    /// `Σ_n dt·∫ r⁺ dy` of the interface-state residual.
    pub interface_integral: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunAudit {
    pub steps: usize,
    pub max_u_violation: f64,
    pub max_s_violation: f64,
    /// `max_n |∫uⁿ − ∫u⁰|`.
    pub max_mass_drift: f64,
    pub min_dissipation: f64,
    /// `Σ dt·ε‖∇_h u‖²`.
    pub integrated_defect: f64,
    /// Smallest collapse defect increment (kinetic backend; 0 otherwise).
    pub min_collapse_defect: f64,
    pub max_dt: f64,
    pub entropy: Vec<EntropyAudit>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
    pub energy: Vec<EnergyRecord>,
    pub audit: RunAudit,
    pub final_state: Snapshot,
}

impl Trajectory {
    pub fn final_u(&self) -> &CellField {
        &self.final_state.u
    }
}

/// Runs `config` from its configured initial data.
pub fn advance(config: &SimConfig) -> Result<Trajectory> {
    advance_with(config, RunOptions::default())
}

pub fn advance_with(config: &SimConfig, options: RunOptions) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.build_grid()?;
    let u0 = initial_data(&config.initial, &grid)?;
    advance_from(u0, config, options)
}

enum State {
    Volume(CellField),
    Kinetic(KineticField),
}

/// Runs `config` starting from `u0` (the configured initial preset is ignored).
pub fn advance_from(u0: CellField, config: &SimConfig, options: RunOptions) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.build_grid()?;
    grid.check_same(u0.grid())?;
    u0.check_unit_interval("initial data")?;
    let eps = config.physics.epsilon;
    let num = &config.numerics;
    let xi = XiGrid::new(num.xi_bins)?;
    if num.backend == Backend::Kinetic && eps > 0.0 {
        return Err(Error::param(
            "numerics.backend",
            "the kinetic backend solves the hyperbolic system only (physics.epsilon must be 0)",
        ));
    }
    if let Velocity::Imposed(a) = &options.velocity {
        grid.check_same(a.grid())?;
    }
    let pairs = config
        .output
        .entropy_levels
        .iter()
        .map(|&k| EntropyPair::new(k))
        .collect::<Result<Vec<_>>>()?;
    let final_time = num.final_time;
    let cadence = config.cadence();
    let mut stops: Vec<f64> = (1..)
        .map(|k| k as f64 * cadence)
        .take_while(|&t| t < final_time * (1.0 - 1e-12))
        .chain(
            options
                .extra_snapshot_times
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < final_time),
        )
        .chain(std::iter::once(final_time))
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * final_time);

    let mass0 = field_integral(&u0);
    let mut state = match num.backend {
        Backend::FiniteVolume => State::Volume(u0),
        Backend::Kinetic => State::Kinetic(lift_indicator(&u0, xi)),
    };
    let mut audit = RunAudit {
        steps: 0,
        max_u_violation: 0.0,
        max_s_violation: 0.0,
        max_mass_drift: 0.0,
        min_dissipation: f64::INFINITY,
        integrated_defect: 0.0,
        min_collapse_defect: 0.0,
        max_dt: 0.0,
        entropy: pairs
            .iter()
            .map(|p| EntropyAudit {
                k: p.level(),
                max_discrete: 0.0,
                max_interface: 0.0,
                interface_integral: 0.0,
            })
            .collect(),
    };
    let mut snapshots = Vec::new();
    let mut records = Vec::new();
    let mut energy = Vec::new();
    let mut t = 0.0;
    let mut cumulative_d = 0.0;
    let mut next_stop = 0;
    let mut snapshot_due = true;
    let mut last_entropy = vec![0.0; pairs.len()];
    let gate = |dt: f64| 5.0 * (grid.min_spacing() + dt);

    loop {
        let u = match &state {
            State::Volume(u) => u.clone(),
            State::Kinetic(f) => f.density(),
        };
        let (s, _) = solve_potential(&u, num.tol)?;
        let s_violation = s.unit_interval_violation();
        audit.max_s_violation = audit.max_s_violation.max(s_violation);
        if s_violation > ABORT_VIOLATION {
            return Err(Error::BoundViolation {
                t,
                violation: s_violation,
            });
        }
        let e = free_energy(&u, &s)?;
        let d = dissipation_rate(&u, &s)?;
        let viscous = viscous_energy_rate(&u, &s, eps)?;
        audit.min_dissipation = audit.min_dissipation.min(d);
        energy.push(EnergyRecord {
            t,
            e,
            d,
            viscous,
            cumulative_d,
        });
        let dmass = defect_mass(&u, eps);
        let done = next_stop == stops.len();
        if audit.steps.is_multiple_of(config.output.timeseries_every) || done {
            records.push(DiagnosticsRecord {
                t,
                mass: field_integral(&u),
                e,
                d,
                cumulative_d,
                entropy: last_entropy.clone(),
                defect_mass: dmass,
                bound_violation: audit.max_u_violation,
            });
        }
        if snapshot_due {
            snapshot_due = false;
            snapshots.push(Snapshot {
                t,
                u: u.clone(),
                s: s.clone(),
            });
        }
        if done {
            let final_state = Snapshot { t, u, s };
            if audit.min_dissipation == f64::INFINITY {
                audit.min_dissipation = 0.0;
            }
            return Ok(Trajectory {
                snapshots,
                records,
                energy,
                audit,
                final_state,
            });
        }

        let a = match &options.velocity {
            Velocity::Coupled => face_gradient(&s),
            Velocity::Imposed(a) => a.clone(),
        };
        let mut dt = match &state {
            State::Volume(_) => cfl_time_step(&a, eps, num.cfl)?,
            State::Kinetic(_) => num.cfl * kinetic_time_limit(&s, xi),
        };
        let target = stops[next_stop];
        let mut reached = false;
        if t + dt >= target * (1.0 - 1e-14) {
            dt = target - t;
            reached = true;
        }

        let next = match &mut state {
            State::Volume(u_old) => {
                let (u_hyp, _) = hyperbolic_step(u_old, &a, dt, num.flux)?;
                for (i, p) in pairs.iter().enumerate() {
                    let disc = kruzkov_residual(u_old, &u_hyp, &a, dt, *p, ResidualForm::Discrete)?;
                    let intf =
                        kruzkov_residual(u_old, &u_hyp, &a, dt, *p, ResidualForm::Interface)?;
                    let md = max_positive(&disc);
                    let entry = &mut audit.entropy[i];
                    entry.max_discrete = entry.max_discrete.max(md);
                    entry.max_interface = entry.max_interface.max(max_positive(&intf));
                    entry.interface_integral += dt * positive_integral(&intf);
                    last_entropy[i] = md;
                    if config.output.strict_entropy && md > gate(dt) {
                        return Err(Error::EntropyGate {
                            t,
                            k: p.level(),
                            residual: md,
                            limit: gate(dt),
                        });
                    }
                }
                let u_new = if eps > 0.0 {
                    diffusion_step(&u_hyp, eps, dt)?
                } else {
                    u_hyp
                };
                *u_old = u_new.clone();
                u_new
            }
            State::Kinetic(f) => {
                let step = kinetic_step(f, &s, dt)?;
                audit.min_collapse_defect = audit.min_collapse_defect.min(step.defect.min());
                *f = step.f;
                step.u
            }
        };
        cumulative_d += dt * d;
        audit.integrated_defect += dt * dmass;
        audit.max_dt = audit.max_dt.max(dt);
        audit.steps += 1;
        t = if reached { target } else { t + dt };
        if reached {
            next_stop += 1;
            snapshot_due = true;
        }
        let violation = next.unit_interval_violation();
        audit.max_u_violation = audit.max_u_violation.max(violation);
        if violation > ABORT_VIOLATION {
            return Err(Error::BoundViolation { t, violation });
        }
        audit.max_mass_drift = audit
            .max_mass_drift
            .max((field_integral(&next) - mass0).abs());
    }
}
