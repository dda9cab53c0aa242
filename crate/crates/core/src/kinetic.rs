//! The kinetic variable ξ: indicator lifts `f = 𝟏_{ξ<u}`, the collapse
//! (projection back onto indicators) with its defect measure, the `ρ`
//! functional, rigidity defects of averaged fields, and a semi-Lagrangian
//! transport-collapse solver for the kinetic equation
//!
//! ```text
//! ∂f/∂t + (ξ − S) g(ξ) ∂f/∂ξ + g′(ξ) ∇S·∇f = ∂m/∂ξ.
//! ```
//!
//! `f` is stored on ξ ∈ [0, 1] only; below 0 it is 1 and above 1 it is 0.

use crate::error::{Error, Result};
use crate::field::{compensated_sum, field_integral, CellField, FaceField};
use crate::grid::Grid;
use crate::hyperbolic::FluxLaw;

/// Uniform partition of `[0, 1]` into `n` bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XiGrid {
    bins: usize,
}

impl XiGrid {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < crate::config::MIN_XI_BINS {
            return Err(Error::param(
                "numerics.xi_bins",
                format!(
                    "{bins} is below the minimum of {}",
                    crate::config::MIN_XI_BINS
                ),
            ));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        1.0 / self.bins as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.bins as f64
    }

    /// Bin holding `value` (values at or above 1 go to the last bin).
    pub fn bin_of(&self, value: f64) -> usize {
        ((value * self.bins as f64).floor().max(0.0) as usize).min(self.bins - 1)
    }
}

/// Values `f(cell, bin)` stored cell-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticField {
    grid: Grid,
    xi: XiGrid,
    values: Vec<f64>,
}

impl KineticField {
    pub fn new(grid: &Grid, xi: XiGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() * xi.bins() {
            return Err(Error::Shape(format!(
                "{} values for {} cells x {} bins",
                values.len(),
                grid.n_cells(),
                xi.bins()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            xi,
            values,
        })
    }

    pub fn constant(grid: &Grid, xi: XiGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            xi,
            values: vec![c; grid.n_cells() * xi.bins()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn xi(&self) -> XiGrid {
        self.xi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        let n = self.xi.bins();
        &self.values[cell * n..(cell + 1) * n]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [f64] {
        let n = self.xi.bins();
        &mut self.values[cell * n..(cell + 1) * n]
    }

    /// `u_i = Δξ · Σ_j f(i, j)`.
    pub fn density(&self) -> CellField {
        let dxi = self.xi.width();
        let values = (0..self.grid.n_cells())
            .map(|c| dxi * self.cell(c).iter().sum::<f64>())
            .collect();
        CellField::from_vec_unchecked(&self.grid, values)
    }

    /// First `(cell, bin)` where `f` increases with ξ by more than `slack`.
    pub fn monotonicity_violation(&self, slack: f64) -> Option<(usize, usize)> {
        (0..self.grid.n_cells()).find_map(|c| {
            self.cell(c)
                .windows(2)
                .position(|w| w[1] > w[0] + slack)
                .map(|j| (c, j + 1))
        })
    }
}

/// Defect measure `m(cell, bin) ≥ 0`, stored per unit ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectDensity {
    grid: Grid,
    xi: XiGrid,
    values: Vec<f64>,
}

impl DefectDensity {
    pub fn zeros(grid: &Grid, xi: XiGrid) -> Self {
        Self {
            grid: grid.clone(),
            xi,
            values: vec![0.0; grid.n_cells() * xi.bins()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        let n = self.xi.bins();
        &self.values[cell * n..(cell + 1) * n]
    }

    pub(crate) fn cell_mut(&mut self, cell: usize) -> &mut [f64] {
        let n = self.xi.bins();
        &mut self.values[cell * n..(cell + 1) * n]
    }

    /// `∫∫ m dξ dy`.
    pub fn total(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.xi.width() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn accumulate(&mut self, other: &DefectDensity) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }
}

/// Writes the bin-unit lift of `units = u/Δξ` into `out`.
fn lift_units(units: f64, out: &mut [f64]) {
    let n = out.len();
    let units = units.clamp(0.0, n as f64);
    let full = (units.floor() as usize).min(n);
    let frac = units - full as f64;
    for (j, v) in out.iter_mut().enumerate() {
        *v = match j.cmp(&full) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => frac,
            std::cmp::Ordering::Greater => 0.0,
        };
    }
}

/// `f(i, j) = 𝟏_{ξ<u_i}` averaged over each bin: full bins below `u_i`,
/// one fractional straddle bin, zeros above. `Δξ·Σ_j f(i, j) = u_i`.
pub fn lift_indicator(u: &CellField, xi: XiGrid) -> KineticField {
    let grid = u.grid();
    let mut f = KineticField::constant(grid, xi, 0.0);
    let n = xi.bins() as f64;
    for (c, &uc) in u.values().iter().enumerate() {
        lift_units(uc * n, f.cell_mut(c));
    }
    f
}

pub struct Collapse {
    pub u: CellField,
    pub f: KineticField,
    pub defect: DefectDensity,
}

/// Projects `f` onto indicator profiles with the same ξ-integral, returning
/// the defect `m(i, j) = Δξ·Σ_{k≤j} (f′ − f)(i, k)` at the upper bin edges.
///
/// `m ≥ 0` holds exactly in floating point for any `0 ≤ f ≤ 1`: the partial
/// sums of `f′` are `min(j + 1, U)` and both bound the partial sums of `f`.
pub fn collapse_to_indicator(f: &KineticField) -> Collapse {
    let grid = f.grid();
    let xi = f.xi();
    let n = xi.bins();
    let dxi = xi.width();
    let mut lifted = KineticField::constant(grid, xi, 0.0);
    let mut defect = DefectDensity::zeros(grid, xi);
    let mut u = Vec::with_capacity(grid.n_cells());
    let mut partial = vec![0.0; n];
    for c in 0..grid.n_cells() {
        let mut acc = 0.0;
        for (p, &v) in partial.iter_mut().zip(f.cell(c)) {
            acc += v;
            *p = acc;
        }
        let units = acc;
        u.push(dxi * units);
        lift_units(units, lifted.cell_mut(c));
        for (j, (m, &p)) in defect.cell_mut(c).iter_mut().zip(&partial).enumerate() {
            *m = dxi * (((j + 1) as f64).min(units) - p);
        }
    }
    Collapse {
        u: CellField::from_vec_unchecked(grid, u),
        f: lifted,
        defect,
    }
}

/// `ρ(i, j) = ξ̂_j f(i, j) + Δξ·Σ_{k>j} f(i, k)`, evaluated at the bin's
/// front position `ξ̂_j = (j + f(i, j))·Δξ` so that `ρ = u·f` holds exactly
/// for every lifted indicator, straddle bins included.
pub fn rho_from_f(f: &KineticField) -> KineticField {
    let xi = f.xi();
    let dxi = xi.width();
    let mut rho = KineticField::constant(f.grid(), xi, 0.0);
    for c in 0..f.grid().n_cells() {
        let src = f.cell(c);
        let dst = rho.cell_mut(c);
        let mut tail = 0.0;
        for j in (0..src.len()).rev() {
            let v = src[j];
            dst[j] = (j as f64 + v) * dxi * v + dxi * tail;
            tail += v;
        }
    }
    rho
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma41Report {
    /// `max(0, (ρ − ūf) − C·f(1 − f))` over cells and bins.
    pub upper: f64,
    /// `max(0, −(ρ − ūf))`.
    pub lower: f64,
}

impl Lemma41Report {
    pub fn worst(&self) -> f64 {
        self.upper.max(self.lower)
    }
}

/// Checks `0 ≤ ρ − ū f ≤ C·f(1 − f)` pointwise, with `ū` the ξ-integral of
/// each cell and `C = csup`. Requires `f` nonincreasing in ξ.
pub fn lemma41_check(f: &KineticField, csup: f64) -> Result<Lemma41Report> {
    if let Some((cell, bin)) = f.monotonicity_violation(1e-14) {
        return Err(Error::NotMonotone { cell, bin });
    }
    let rho = rho_from_f(f);
    let u = f.density();
    let mut report = Lemma41Report {
        upper: 0.0,
        lower: 0.0,
    };
    for c in 0..f.grid().n_cells() {
        let uc = u.values()[c];
        for (&fv, &r) in f.cell(c).iter().zip(rho.cell(c)) {
            let d = r - uc * fv;
            report.upper = report.upper.max(d - csup * fv * (1.0 - fv));
            report.lower = report.lower.max(-d);
        }
    }
    Ok(report)
}

/// `∫∫ (f − f²) dξ dy ≥ 0`, zero exactly on {0,1}-valued fields.
pub fn rigidity_defect(f: &KineticField) -> f64 {
    compensated_sum(f.values().iter().map(|v| v - v * v)) * f.xi().width() * f.grid().cell_volume()
}

/// Space-time box averages of indicator lifts.
#[derive(Clone, Debug)]
pub struct BoxAverage {
    /// One averaged field per time slab, on the coarsened grid.
    pub slabs: Vec<KineticField>,
    /// Largest density among the averaged samples.
    pub max_sample: f64,
}

impl BoxAverage {
    /// Slab-averaged [`rigidity_defect`].
    pub fn rigidity_defect(&self) -> f64 {
        self.slabs.iter().map(rigidity_defect).sum::<f64>() / self.slabs.len() as f64
    }
}

/// Averages `lift_indicator(snapshot)` over boxes of `box_cells` cells per
/// axis and `box_steps` consecutive snapshots.
pub fn box_average(
    snapshots: &[CellField],
    box_cells: usize,
    box_steps: usize,
    xi: XiGrid,
) -> Result<BoxAverage> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::BoxSize("no snapshots".into()))?;
    let fine = first.grid();
    if snapshots.iter().any(|s| s.grid() != fine) {
        return Err(Error::Shape("snapshots live on different grids".into()));
    }
    if box_cells == 0 || box_steps == 0 {
        return Err(Error::BoxSize("box sizes must be positive".into()));
    }
    if !snapshots.len().is_multiple_of(box_steps) {
        return Err(Error::BoxSize(format!(
            "{} snapshots are not a multiple of {box_steps}",
            snapshots.len()
        )));
    }
    let mut coarse_cells = Vec::new();
    for axis in 0..fine.dim() {
        let n = fine.cells_along(axis);
        if n % box_cells != 0 {
            return Err(Error::BoxSize(format!(
                "{box_cells} does not divide {n} cells"
            )));
        }
        coarse_cells.push(n / box_cells);
    }
    let mut spec = fine.spec();
    spec.cells = coarse_cells;
    let coarse = Grid::new(&spec).map_err(|e| Error::BoxSize(e.to_string()))?;
    let n = xi.bins();
    let per_box = (box_cells.pow(fine.dim() as u32) * box_steps) as f64;
    let mut lift = vec![0.0; n];
    let mut slabs = Vec::new();
    let mut max_sample = 0.0_f64;
    for chunk in snapshots.chunks(box_steps) {
        let mut avg = KineticField::constant(&coarse, xi, 0.0);
        for snap in chunk {
            for (c, &uc) in snap.values().iter().enumerate() {
                max_sample = max_sample.max(uc);
                let coords = fine.coords(c);
                let target = coarse.index(&[coords[0] / box_cells, coords[1] / box_cells]);
                lift_units(uc * n as f64, &mut lift);
                avg.cell_mut(target)
                    .iter_mut()
                    .zip(&lift)
                    .for_each(|(a, l)| *a += l);
            }
        }
        avg.values.iter_mut().for_each(|v| *v /= per_box);
        slabs.push(avg);
    }
    Ok(BoxAverage { slabs, max_sample })
}

pub struct KineticStep {
    /// Collapsed kinetic state.
    pub f: KineticField,
    pub u: CellField,
    pub defect: DefectDensity,
    /// `∫u_new − ∫u_old` (the advective form does not conserve mass).
    pub mass_drift: f64,
}

/// Cell-centred `∇S`, averaging the two adjacent face gradients per axis.
fn centered_gradient(face_grad: &FaceField) -> Vec<[f64; 2]> {
    let grid = face_grad.grid();
    let mut out = vec![[0.0; 2]; grid.n_cells()];
    for axis in 0..grid.dim() {
        let nf = grid.faces_per_line(axis);
        let faces = face_grad.axis(axis);
        for line in 0..grid.n_lines(axis) {
            let (start, stride) = grid.line_layout(axis, line);
            for i in 0..grid.cells_along(axis) {
                let l = faces[line * nf + i];
                let r = faces[line * nf + grid.right_face(axis, i)];
                out[start + i * stride][axis] = 0.5 * (l + r);
            }
        }
    }
    out
}

/// Largest `dt` keeping every backtraced foot within one cell and one bin.
pub fn kinetic_time_limit(s: &CellField, xi: XiGrid) -> f64 {
    let grid = s.grid();
    let grad = centered_gradient(&crate::elliptic::face_gradient(s));
    let mut rate = 0.0_f64;
    for (c, g) in grad.iter().enumerate() {
        for axis in 0..grid.dim() {
            rate = rate.max(g[axis].abs() * FluxLaw::MAX_SPEED / grid.spacing(axis));
        }
        let sc = s.values()[c];
        for j in 0..xi.bins() {
            let z = xi.center(j);
            rate = rate.max(((z - sc) * FluxLaw::g(z)).abs() / xi.width());
        }
    }
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Linear-interpolation stencil along one axis: `[(index, weight); 2]`.
fn axis_stencil(pos: f64, n: usize, periodic: bool) -> [(usize, f64); 2] {
    if periodic {
        let base = pos.floor();
        let w = pos - base;
        let i0 = (base as i64).rem_euclid(n as i64) as usize;
        [(i0, 1.0 - w), ((i0 + 1) % n, w)]
    } else {
        let p = pos.clamp(0.0, (n - 1) as f64);
        let i0 = (p.floor() as usize).min(n - 2);
        let w = p - i0 as f64;
        [(i0, 1.0 - w), (i0 + 1, w)]
    }
}

/// Linear interpolation in ξ between bin centres. Feet inside the end
/// half-bins take the end-bin value (ξ = 0 and ξ = 1 are fixed points of
/// the ξ-characteristics); the constants 1 below and 0 above apply to feet
/// outside `[0, 1]`.
fn sample_xi(row: &[f64], foot: f64, dxi: f64) -> f64 {
    if foot < 0.0 {
        return 1.0;
    }
    if foot > 1.0 {
        return 0.0;
    }
    let n = row.len();
    let q = (foot / dxi - 0.5).clamp(0.0, (n - 1) as f64);
    let j = (q.floor() as usize).min(n - 2);
    let w = q - j as f64;
    (1.0 - w) * row[j] + w * row[j + 1]
}

/// One transport-collapse step: backtrace each `(cell, bin)` along
/// `ẏ = g′(ξ)∇S(y)`, `ξ̇ = (ξ − S(y)) g(ξ)` (velocities frozen at the
/// arrival point), interpolate `f` multilinearly, clamp to `[0, 1]`, then collapse.
pub fn kinetic_step(f: &KineticField, s: &CellField, dt: f64) -> Result<KineticStep> {
    let grid = f.grid();
    grid.check_same(s.grid())?;
    let xi = f.xi();
    let limit = kinetic_time_limit(s, xi);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            limit,
            kind: "kinetic characteristics",
        });
    }
    let grad = centered_gradient(&crate::elliptic::face_gradient(s));
    let nb = xi.bins();
    let dxi = xi.width();
    let periodic = grid.is_periodic();
    let dim = grid.dim();
    let mut transported = KineticField::constant(grid, xi, 0.0);
    for c in 0..grid.n_cells() {
        let coords = grid.coords(c);
        let sc = s.values()[c];
        for j in 0..nb {
            let z = xi.center(j);
            let dgz = FluxLaw::dg(z);
            let mut stencils = [[(0usize, 1.0f64); 2]; 2];
            for axis in 0..dim {
                let pos = coords[axis] as f64 - dt * dgz * grad[c][axis] / grid.spacing(axis);
                stencils[axis] = axis_stencil(pos, grid.cells_along(axis), periodic);
            }
            let foot = z - dt * (z - sc) * FluxLaw::g(z);
            let mut value = 0.0;
            let second = if dim == 2 { 2 } else { 1 };
            for &(ix, wx) in &stencils[0] {
                for &(iy, wy) in stencils[1].iter().take(second) {
                    let w = if dim == 2 { wx * wy } else { wx };
                    if w == 0.0 {
                        continue;
                    }
                    let cell = if dim == 2 { grid.index(&[ix, iy]) } else { ix };
                    value += w * sample_xi(&f.values[cell * nb..(cell + 1) * nb], foot, dxi);
                }
            }
            transported.values[c * nb + j] = value.clamp(0.0, 1.0);
        }
    }
    let mass_before = field_integral(&f.density());
    let Collapse { u, f, defect } = collapse_to_indicator(&transported);
    let mass_drift = field_integral(&u) - mass_before;
    Ok(KineticStep {
        f,
        u,
        defect,
        mass_drift,
    })
}
