//! Cell- and face-centred scalar fields and the discrete integrals over them.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Slack allowed on the `[0, 1]` bounds of densities and potentials.
pub const BOUND_SLACK: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// One scalar per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Shape(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value at cell {i}")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.n_cells())
            .map(|c| f(grid.cell_center(c)))
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest excursion outside `[0, 1]` (0 when in bounds).
    pub fn unit_interval_violation(&self) -> f64 {
        (-self.min()).max(self.max() - 1.0).max(0.0)
    }

    /// Checks the density/potential invariant `0 ≤ v ≤ 1` up to [`BOUND_SLACK`].
    pub fn check_unit_interval(&self, what: &str) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if !(-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&v) {
                return Err(Error::OutOfRange {
                    value: v,
                    location: format!("{what}[{i}]"),
                });
            }
        }
        Ok(())
    }

    /// Pointwise `self - other`.
    pub fn difference(&self, other: &CellField) -> Result<CellField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_vec_unchecked(&self.grid, values))
    }
}

/// Discrete `∫_Ω f dy`, compensated.
pub fn field_integral(f: &CellField) -> f64 {
    compensated_sum(f.values.iter().copied()) * f.grid.cell_volume()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn field_norms(f: &CellField) -> Norms {
    let vol = f.grid.cell_volume();
    let l1 = compensated_sum(f.values.iter().map(|v| v.abs())) * vol;
    let l2 = (compensated_sum(f.values.iter().map(|v| v * v)) * vol).sqrt();
    let linf = f.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Norms { l1, l2, linf }
}

/// `‖a − b‖_{L¹}`.
pub fn l1_distance(a: &CellField, b: &CellField) -> Result<f64> {
    Ok(field_norms(&a.difference(b)?).l1)
}

/// One scalar per face, grouped by axis (see [`crate::grid`] for the layout).
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    grid: Grid,
    axes: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        let axes = (0..grid.dim())
            .map(|a| vec![0.0; grid.n_faces(a)])
            .collect();
        Self {
            grid: grid.clone(),
            axes,
        }
    }

    /// Uniform value on every face that joins two cells; Neumann boundary
    /// faces stay 0.
    pub fn uniform(grid: &Grid, per_axis: &[f64]) -> Self {
        let mut out = Self::zeros(grid);
        for axis in 0..grid.dim() {
            for face in 0..grid.n_faces(axis) {
                if grid.face_cells(axis, face).is_some() {
                    out.axes[axis][face] = per_axis[axis];
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn axis_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.axes[axis]
    }

    pub fn max_abs(&self) -> f64 {
        self.axes
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete divergence `Σ_axis (F_{i+½} − F_{i−½}) / Δx_axis` per cell.
    pub fn divergence(&self) -> CellField {
        let grid = &self.grid;
        let mut div = vec![0.0; grid.n_cells()];
        for axis in 0..grid.dim() {
            let n = grid.cells_along(axis);
            let nf = grid.faces_per_line(axis);
            let inv_dx = 1.0 / grid.spacing(axis);
            let faces = &self.axes[axis];
            for line in 0..grid.n_lines(axis) {
                let (start, stride) = grid.line_layout(axis, line);
                let base = line * nf;
                for i in 0..n {
                    let left = faces[base + i];
                    let right = faces[base + grid.right_face(axis, i)];
                    div[start + i * stride] += (right - left) * inv_dx;
                }
            }
        }
        CellField::from_vec_unchecked(grid, div)
    }
}

/// Differences `(v_right − v_left)/Δx` on every face; Neumann boundary faces
/// are exactly 0.
pub fn face_differences(v: &CellField) -> FaceField {
    let grid = v.grid();
    let mut out = FaceField::zeros(grid);
    let vals = v.values();
    for axis in 0..grid.dim() {
        let n = grid.cells_along(axis);
        let nf = grid.faces_per_line(axis);
        let inv_dx = 1.0 / grid.spacing(axis);
        let faces = out.axis_mut(axis);
        for line in 0..grid.n_lines(axis) {
            let (start, stride) = grid.line_layout(axis, line);
            let base = line * nf;
            if grid.is_periodic() {
                for f in 0..n {
                    let l = start + ((f + n - 1) % n) * stride;
                    let r = start + f * stride;
                    faces[base + f] = (vals[r] - vals[l]) * inv_dx;
                }
            } else {
                for f in 1..n {
                    let l = start + (f - 1) * stride;
                    let r = start + f * stride;
                    faces[base + f] = (vals[r] - vals[l]) * inv_dx;
                }
            }
        }
    }
    out
}

/// Second-order Laplacian (3-point / 5-point) with mirrored ghosts on
/// Neumann grids and wraparound on periodic grids.
pub fn laplacian(v: &CellField) -> CellField {
    face_differences(v).divergence()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Grid {
        Grid::new(&GridSpec::line(1.0, n, Boundary::Neumann)).unwrap()
    }

    #[test]
    fn integral_of_constants() {
        let g = line(100);
        assert_eq!(field_integral(&CellField::constant(&g, 1.0)), 1.0);
        assert_eq!(field_integral(&CellField::constant(&g, 0.0)), 0.0);
    }

    #[test]
    fn integral_of_half_indicator() {
        let g = line(100);
        let f = CellField::from_fn(&g, |y| if y[0] < 0.5 { 1.0 } else { 0.0 });
        let brute: f64 = f.values().iter().map(|v| v * 0.01).sum();
        assert!((field_integral(&f) - brute).abs() < 1e-14);
        assert!((field_integral(&f) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = line(100);
        let n = field_norms(&CellField::constant(&g, -0.3));
        assert!((n.l1 - 0.3).abs() < 1e-15);
        assert_eq!(n.linf, 0.3);
        let mut spike = CellField::constant(&g, 0.0);
        spike.values_mut()[17] = 1.0;
        let n = field_norms(&spike);
        assert!((n.l1 - 0.01).abs() < 1e-16);
        assert!((n.l2 - 0.1).abs() < 1e-15);
        assert_eq!(n.linf, 1.0);
    }

    #[test]
    fn norms_match_brute_force_loop() {
        let g = Grid::new(&GridSpec::square(2.0, 16, Boundary::Periodic)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = CellField::new(&g, (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let vol = 2.0 / 16.0 * 2.0 / 16.0;
        let (mut l1, mut l2, mut linf) = (0.0_f64, 0.0_f64, 0.0_f64);
        for &v in f.values() {
            l1 += v.abs() * vol;
            l2 += v * v * vol;
            linf = linf.max(v.abs());
        }
        let n = field_norms(&f);
        assert!((n.l1 - l1).abs() < 1e-13);
        assert!((n.l2 - l2.sqrt()).abs() < 1e-13);
        assert_eq!(n.linf, linf);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = line(10);
        assert!(CellField::new(&g, vec![0.0; 9]).is_err());
        assert!(CellField::new(&g, vec![f64::NAN; 10]).is_err());
        let other = line(12);
        assert!(CellField::constant(&g, 0.0)
            .difference(&CellField::constant(&other, 0.0))
            .is_err());
    }

    #[test]
    fn laplacian_telescopes() {
        for boundary in [Boundary::Neumann, Boundary::Periodic] {
            let g = Grid::new(&GridSpec::square(1.0, 12, boundary)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let f = CellField::new(&g, (0..144).map(|_| rng.gen::<f64>()).collect()).unwrap();
            assert!(field_integral(&laplacian(&f)).abs() < 1e-12);
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
