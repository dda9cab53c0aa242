//! Flux law `g(u) = u(1 − u)`, entropic face fluxes, and the explicit
//! transport and diffusion sub-steps.

use crate::config::FluxScheme;
use crate::error::{Error, Result};
use crate::field::{field_integral, laplacian, CellField, FaceField, BOUND_SLACK};

/// The quorum-sensing flux law.
pub struct FluxLaw;

impl FluxLaw {
    /// Sonic point, where `g′` vanishes.
    pub const SONIC: f64 = 0.5;
    /// `g(SONIC)`.
    pub const PEAK: f64 = 0.25;
    /// Bound on `|g′|` over `[0, 1]`.
    pub const MAX_SPEED: f64 = 1.0;

    #[inline]
    pub fn g(u: f64) -> f64 {
        u * (1.0 - u)
    }

    #[inline]
    pub fn dg(u: f64) -> f64 {
        1.0 - 2.0 * u
    }
}

fn check_state(u: f64) -> Result<()> {
    if (-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&u) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            value: u,
            location: "face state".into(),
        })
    }
}

/// Interface state `w` of the exact Riemann solution for `h(u) = a·g(u)`:
/// the minimiser of `h` over `[uL, uR]` when `uL ≤ uR`, the maximiser over
/// `[uR, uL]` otherwise. Candidates are the endpoints and the sonic point.
#[inline]
pub fn godunov_state(ul: f64, ur: f64, a: f64) -> f64 {
    let h = |u: f64| a * FluxLaw::g(u);
    let (lo, hi) = if ul <= ur { (ul, ur) } else { (ur, ul) };
    let minimise = ul <= ur;
    let better = |x: f64, y: f64| if minimise { h(x) < h(y) } else { h(x) > h(y) };
    let mut w = ul;
    if better(ur, w) {
        w = ur;
    }
    if lo < FluxLaw::SONIC && FluxLaw::SONIC < hi && better(FluxLaw::SONIC, w) {
        w = FluxLaw::SONIC;
    }
    w
}

#[inline]
fn godunov_unchecked(ul: f64, ur: f64, a: f64) -> f64 {
    a * FluxLaw::g(godunov_state(ul, ur, a))
}

/// Godunov flux for `h(u) = a·u(1 − u)` with `a = ∇S·n` on the face.
pub fn godunov_face_flux(ul: f64, ur: f64, a: f64) -> Result<f64> {
    check_state(ul)?;
    check_state(ur)?;
    Ok(godunov_unchecked(ul, ur, a))
}

/// Local Lax–Friedrichs flux with dissipation `|a|·max|g′|`.
pub fn lax_friedrichs_flux(ul: f64, ur: f64, a: f64) -> f64 {
    0.5 * a * (FluxLaw::g(ul) + FluxLaw::g(ur)) - 0.5 * a.abs() * FluxLaw::MAX_SPEED * (ur - ul)
}

impl FluxScheme {
    #[inline]
    pub fn flux(self, ul: f64, ur: f64, a: f64) -> f64 {
        match self {
            FluxScheme::Godunov => godunov_unchecked(ul, ur, a),
            FluxScheme::LaxFriedrichs => lax_friedrichs_flux(ul, ur, a),
        }
    }
}

/// Numerical fluxes `F(u_left, u_right, a)` on every face. Neumann boundary
/// faces carry zero flux.
pub fn face_fluxes(u: &CellField, face_vel: &FaceField, scheme: FluxScheme) -> Result<FaceField> {
    face_map(u, face_vel, |ul, ur, a| scheme.flux(ul, ur, a))
}

/// Applies `op(u_left, u_right, a)` on every face that joins two cells.
pub fn face_map(
    u: &CellField,
    face_vel: &FaceField,
    op: impl Fn(f64, f64, f64) -> f64,
) -> Result<FaceField> {
    let grid = u.grid();
    grid.check_same(face_vel.grid())?;
    let vals = u.values();
    let mut out = FaceField::zeros(grid);
    for axis in 0..grid.dim() {
        let a = face_vel.axis(axis);
        let faces = out.axis_mut(axis);
        for (face, slot) in faces.iter_mut().enumerate() {
            if let Some((l, r)) = grid.face_cells(axis, face) {
                *slot = op(vals[l], vals[r], a[face]);
            }
        }
    }
    Ok(out)
}

/// Stable explicit step for transport with face velocity `face_vel` plus
/// diffusion `ε`:
/// `dt = ν / (max|a|·max|g′|/Δx_min + 2·dim·ε/Δx_min²)`.
///
/// Returns `f64::INFINITY` when nothing moves; callers cap it by the output
/// cadence and the remaining time.
pub fn cfl_time_step(face_vel: &FaceField, epsilon: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= crate::config::MAX_CFL) {
        return Err(Error::param(
            "numerics.cfl",
            format!("{cfl} must lie in (0, 0.95]"),
        ));
    }
    let grid = face_vel.grid();
    let dx = grid.min_spacing();
    let rate = transport_rate(face_vel) + 2.0 * grid.dim() as f64 * epsilon / (dx * dx);
    Ok(if rate > 0.0 {
        cfl / rate
    } else {
        f64::INFINITY
    })
}

/// Largest per-cell wave rate `Σ_axis s_axis / Δx_axis`. A cell whose two
/// faces carry velocities of opposite sign can lose (or gain) mass through
/// both at once, so their speeds add; otherwise only the larger one counts.
/// Keeping `dt·rate ≤ 1` makes the Godunov update monotone.
fn transport_rate(face_vel: &FaceField) -> f64 {
    let grid = face_vel.grid();
    let mut rate = vec![0.0; grid.n_cells()];
    for axis in 0..grid.dim() {
        let nf = grid.faces_per_line(axis);
        let inv_dx = 1.0 / grid.spacing(axis);
        let faces = face_vel.axis(axis);
        for line in 0..grid.n_lines(axis) {
            let (start, stride) = grid.line_layout(axis, line);
            for i in 0..grid.cells_along(axis) {
                let l = faces[line * nf + i];
                let r = faces[line * nf + grid.right_face(axis, i)];
                let s = if l * r < 0.0 {
                    l.abs() + r.abs()
                } else {
                    l.abs().max(r.abs())
                };
                rate[start + i * stride] += s * inv_dx;
            }
        }
    }
    rate.into_iter().fold(0.0, f64::max) * FluxLaw::MAX_SPEED
}

/// Largest `dt` the transport sub-step accepts for `face_vel`.
pub fn transport_limit(face_vel: &FaceField) -> f64 {
    let rate = transport_rate(face_vel);
    if rate > 0.0 {
        crate::config::MAX_CFL / rate
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub max_face_speed: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    /// Largest excursion of the new state outside `[0, 1]`.
    pub bound_violation: f64,
}

/// Conservative update `u_i ← u_i − dt·div_h F` with the face velocity
/// frozen over the step.
pub fn hyperbolic_step(
    u: &CellField,
    face_vel: &FaceField,
    dt: f64,
    scheme: FluxScheme,
) -> Result<(CellField, StepReport)> {
    let limit = transport_limit(face_vel);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            limit,
            kind: "transport",
        });
    }
    u.check_unit_interval("u")?;
    let fluxes = face_fluxes(u, face_vel, scheme)?;
    let div = fluxes.divergence();
    let values: Vec<f64> = u
        .values()
        .iter()
        .zip(div.values())
        .map(|(u, d)| u - dt * d)
        .collect();
    let next = CellField::from_vec_unchecked(u.grid(), values);
    let report = StepReport {
        dt,
        max_face_speed: face_vel.max_abs(),
        mass_before: field_integral(u),
        mass_after: field_integral(&next),
        bound_violation: next.unit_interval_violation(),
    };
    Ok((next, report))
}

/// Explicit diffusion `u ← u + ε·dt·Δ_h u` (mirrored ghosts / wraparound).
pub fn diffusion_step(u: &CellField, epsilon: f64, dt: f64) -> Result<CellField> {
    let grid = u.grid();
    let dx = grid.min_spacing();
    let number = 2.0 * grid.dim() as f64 * epsilon * dt / (dx * dx);
    if epsilon < 0.0 || number > crate::config::MAX_CFL * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            limit: crate::config::MAX_CFL * dx * dx / (2.0 * grid.dim() as f64 * epsilon),
            kind: "diffusion",
        });
    }
    if epsilon == 0.0 {
        return Ok(u.clone());
    }
    let lap = laplacian(u);
    let values = u
        .values()
        .iter()
        .zip(lap.values())
        .map(|(u, l)| u + epsilon * dt * l)
        .collect();
    Ok(CellField::from_vec_unchecked(grid, values))
}
