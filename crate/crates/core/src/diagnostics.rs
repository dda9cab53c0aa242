//! Diagnostics on computed states: Kruzkov entropy residuals with the
//! space-dependent correction term, the viscous defect measure, free energy
//! and dissipation, and steady-state residuals.

use serde::{Deserialize, Serialize};

use crate::elliptic::{elliptic_residual, face_gradient};
use crate::error::{Error, Result};
use crate::field::{compensated_sum, face_differences, field_integral, CellField, FaceField};
use crate::hyperbolic::{face_map, godunov_state, FluxLaw};
use crate::kinetic::{DefectDensity, XiGrid};

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kruzkov entropy `η_k(u) = |u − k|` with flux `q_k(u) = sign(u − k)(g(u) − g(k))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyPair {
    k: f64,
}

impl EntropyPair {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::param(
                "output.entropy_levels",
                format!("{k} is not in [0, 1]"),
            ));
        }
        Ok(Self { k })
    }

    pub fn level(&self) -> f64 {
        self.k
    }

    pub fn eta(&self, u: f64) -> f64 {
        (u - self.k).abs()
    }

    pub fn deta(&self, u: f64) -> f64 {
        sign(u - self.k)
    }

    pub fn q(&self, u: f64) -> f64 {
        sign(u - self.k) * (FluxLaw::g(u) - FluxLaw::g(self.k))
    }

    /// `(u − S)·[q_k − g·η_k′](u) = −(u − S)·sign(u − k)·g(k)`.
    pub fn correction(&self, u: f64, s: f64) -> f64 {
        -(u - s) * sign(u - self.k) * FluxLaw::g(self.k)
    }

    /// Crandall–Majda entropy flux of the Godunov scheme,
    /// `F(uL∨k, uR∨k, a) − F(uL∧k, uR∧k, a)`.
    pub fn numerical_flux(&self, ul: f64, ur: f64, a: f64) -> f64 {
        let k = self.k;
        let flux = |l: f64, r: f64| a * FluxLaw::g(godunov_state(l, r, a));
        flux(ul.max(k), ur.max(k)) - flux(ul.min(k), ur.min(k))
    }
}

/// How the discrete entropy balance is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualForm {
    /// Numerical entropy flux of the scheme and the sign of the new state:
    /// the cell entropy inequality, nonpositive up to round-off for Godunov
    /// steps under CFL.
    #[default]
    Discrete,
    /// Exact entropy flux at the Godunov interface state and the sign of the
    /// old state: a consistency residual of size O(Δx + dt) near shocks.
    Interface,
}

/// Per-cell entropy residual
/// `[η(uⁿ⁺¹) − η(uⁿ)]/dt + div_h(Q) + c_k`, where the correction uses
/// `div_h(a)` of the face velocity in place of `S − u` (equal for the
/// coupled system, and correct for imposed velocities).
pub fn kruzkov_residual(
    u_old: &CellField,
    u_new: &CellField,
    face_vel: &FaceField,
    dt: f64,
    pair: EntropyPair,
    form: ResidualForm,
) -> Result<CellField> {
    let grid = u_old.grid();
    grid.check_same(u_new.grid())?;
    grid.check_same(face_vel.grid())?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let flux = match form {
        ResidualForm::Discrete => {
            face_map(u_old, face_vel, |l, r, a| pair.numerical_flux(l, r, a))?
        }
        ResidualForm::Interface => face_map(u_old, face_vel, |l, r, a| {
            a * pair.q(godunov_state(l, r, a))
        })?,
    };
    let div_q = flux.divergence();
    let div_a = face_vel.divergence();
    let gk = FluxLaw::g(pair.level());
    let values = (0..grid.n_cells())
        .map(|i| {
            let (old, new) = (u_old.values()[i], u_new.values()[i]);
            let s = match form {
                ResidualForm::Discrete => pair.deta(new),
                ResidualForm::Interface => pair.deta(old),
            };
            (pair.eta(new) - pair.eta(old)) / dt + div_q.values()[i] + s * gk * div_a.values()[i]
        })
        .collect();
    Ok(CellField::from_vec_unchecked(grid, values))
}

/// Largest positive part of a residual field.
pub fn max_positive(r: &CellField) -> f64 {
    r.values().iter().fold(0.0_f64, |m, v| m.max(*v))
}

/// `∫ r⁺ dy`.
pub fn positive_integral(r: &CellField) -> f64 {
    compensated_sum(r.values().iter().map(|v| v.max(0.0))) * r.grid().cell_volume()
}

fn squared_face_sum(faces: &FaceField) -> f64 {
    let grid = faces.grid();
    (0..grid.dim())
        .map(|a| compensated_sum(faces.axis(a).iter().map(|v| v * v)))
        .sum::<f64>()
        * grid.cell_volume()
}

/// `ε·Σ_faces |∇_h u|²·vol`.
pub fn defect_mass(u: &CellField, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    epsilon * squared_face_sum(&face_differences(u))
}

/// `ε|∇u|² δ(ξ = u)`: each cell takes half of every adjacent face term and
/// deposits it in the ξ-bin containing `u_i`. The total equals [`defect_mass`].
pub fn defect_density(u: &CellField, epsilon: f64, xi: XiGrid) -> DefectDensity {
    let grid = u.grid();
    let mut out = DefectDensity::zeros(grid, xi);
    if epsilon == 0.0 {
        return out;
    }
    let grad = face_differences(u);
    let mut per_cell = vec![0.0; grid.n_cells()];
    for axis in 0..grid.dim() {
        let faces = grad.axis(axis);
        for (face, g) in faces.iter().enumerate() {
            if let Some((l, r)) = grid.face_cells(axis, face) {
                let half = 0.5 * g * g;
                per_cell[l] += half;
                per_cell[r] += half;
            }
        }
    }
    for (c, e) in per_cell.into_iter().enumerate() {
        let bin = xi.bin_of(u.values()[c]);
        out.cell_mut(c)[bin] = epsilon * e / xi.width();
    }
    out
}

/// `E = ∫uS`.
pub fn free_energy(u: &CellField, s: &CellField) -> Result<f64> {
    u.grid().check_same(s.grid())?;
    Ok(
        compensated_sum(u.values().iter().zip(s.values()).map(|(a, b)| a * b))
            * u.grid().cell_volume(),
    )
}

/// `‖S‖²_{H¹,h} = Σ S²·vol + Σ_faces |∇_h S|²·vol`, equal to `∫uS` up to the
/// elliptic residual (summation by parts is exact on the grid).
pub fn h1_norm_sq(s: &CellField) -> f64 {
    compensated_sum(s.values().iter().map(|v| v * v)) * s.grid().cell_volume()
        + squared_face_sum(&face_gradient(s))
}

/// `D = 2·Σ_faces a·F(uL, uR, a)·vol` with `a = ∇_h S·n` and the Godunov
/// flux, i.e. `2·Σ a²·g(w)` at the interface state `w`. Nonnegative term by
/// term; it is the rate at which the Godunov transport step raises `E`.
pub fn dissipation_rate(u: &CellField, s: &CellField) -> Result<f64> {
    Ok(2.0 * support_residual(u, &face_gradient(s))?)
}

fn support_residual(u: &CellField, a: &FaceField) -> Result<f64> {
    let terms = face_map(u, a, |l, r, a| a * a * FluxLaw::g(godunov_state(l, r, a)))?;
    let grid = u.grid();
    Ok((0..grid.dim())
        .map(|ax| compensated_sum(terms.axis(ax).iter().copied()))
        .sum::<f64>()
        * grid.cell_volume())
}

/// Viscous contribution `−2ε·Σ_faces ∇_h S·∇_h u·vol` to `dE/dt`.
pub fn viscous_energy_rate(u: &CellField, s: &CellField, epsilon: f64) -> Result<f64> {
    u.grid().check_same(s.grid())?;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let gs = face_gradient(s);
    let gu = face_differences(u);
    let grid = u.grid();
    let sum: f64 = (0..grid.dim())
        .map(|a| compensated_sum(gs.axis(a).iter().zip(gu.axis(a)).map(|(x, y)| x * y)))
        .sum();
    Ok(-2.0 * epsilon * sum * grid.cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub e: f64,
    /// Transport dissipation `D`.
    pub d: f64,
    /// Viscous rate (zero for hyperbolic runs).
    pub viscous: f64,
    /// `Σ dt·D` up to `t`.
    pub cumulative_d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyAudit {
    /// `max_n |E(tⁿ⁺¹) − E(tⁿ) − dt·(D + V)(tⁿ)| / dt`.
    pub max_deviation: f64,
    /// Largest single-step drop of `E` (0 when nondecreasing).
    pub max_decrease: f64,
    pub cumulative_d: f64,
    pub min_d: f64,
}

/// Audits consecutive energy records of one trajectory.
pub fn energy_identity_check(records: &[EnergyRecord]) -> EnergyAudit {
    let mut audit = EnergyAudit {
        max_deviation: 0.0,
        max_decrease: 0.0,
        cumulative_d: records.last().map_or(0.0, |r| r.cumulative_d),
        min_d: records.iter().map(|r| r.d).fold(f64::INFINITY, f64::min),
    };
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let dev = (w[1].e - w[0].e - dt * (w[0].d + w[0].viscous)).abs() / dt;
        audit.max_deviation = audit.max_deviation.max(dev);
        audit.max_decrease = audit.max_decrease.max(w[0].e - w[1].e);
    }
    audit
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyResiduals {
    /// `Σ |div_h F|·vol` with Godunov fluxes and `a = ∇_h S`.
    pub transport: f64,
    /// `‖(I − Δ_h)S − u‖_∞`.
    pub elliptic: f64,
    /// `Σ_faces |∇_h S|²·g(w)·vol`.
    pub support: f64,
    /// Largest `|F|` over faces.
    pub max_face_flux: f64,
}

pub fn steady_state_residuals(u: &CellField, s: &CellField) -> Result<SteadyResiduals> {
    let a = face_gradient(s);
    let flux = face_map(u, &a, |l, r, a| a * FluxLaw::g(godunov_state(l, r, a)))?;
    let div = flux.divergence();
    let r = elliptic_residual(u, s)?;
    Ok(SteadyResiduals {
        transport: compensated_sum(div.values().iter().map(|v| v.abs())) * u.grid().cell_volume(),
        elliptic: r.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        support: support_residual(u, &a)?,
        max_face_flux: flux.max_abs(),
    })
}

/// Fraction of cells with `u ∈ (0.05, 0.95)`.
pub fn intermediate_fraction(u: &CellField) -> f64 {
    let n = u.values().iter().filter(|&&v| v > 0.05 && v < 0.95).count();
    n as f64 / u.len() as f64
}

/// Number of maximal runs of cells with `u ≥ 0.5` (wrapping on periodic grids, 1D).
pub fn plateau_count(u: &CellField) -> usize {
    let high: Vec<bool> = u.values().iter().map(|&v| v >= 0.5).collect();
    let n = high.len();
    let mut count = (1..n).filter(|&i| high[i] && !high[i - 1]).count();
    if high[0] && !(u.grid().is_periodic() && high[n - 1]) {
        count += 1;
    }
    if count == 0 && high.iter().all(|&h| h) {
        count = 1;
    }
    count
}

/// One row of the diagnostics time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub e: f64,
    pub d: f64,
    pub cumulative_d: f64,
    /// Largest positive Kruzkov residual per configured level.
    pub entropy: Vec<f64>,
    pub defect_mass: f64,
    pub bound_violation: f64,
}

impl DiagnosticsRecord {
    pub fn mass_of(u: &CellField) -> f64 {
        field_integral(u)
    }
}
