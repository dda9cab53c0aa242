//! Uniform Cartesian cell grids in one or two dimensions.
//!
//! Cells are stored row-major with the x axis fastest. Faces normal to an
//! axis are grouped by *line*: a line is a row of cells along that axis, and
//! face `f` on a line sits between cell `f - 1` and cell `f` of the line.
//! Neumann lines carry `n + 1` faces (faces `0` and `n` are boundary faces);
//! periodic lines carry `n` faces and face `0` joins cell `n - 1` to cell `0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of cells along any axis.
pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Reflecting wall: zero normal flux, mirrored ghost cells.
    Neumann,
    /// Torus: wraparound neighbours.
    Periodic,
}

/// Geometric description of a grid, as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn line(length: f64, cells: usize, boundary: Boundary) -> Self {
        Self {
            lengths: vec![length],
            cells: vec![cells],
            boundary,
        }
    }

    pub fn square(length: f64, cells: usize, boundary: Boundary) -> Self {
        Self {
            lengths: vec![length, length],
            cells: vec![cells, cells],
            boundary,
        }
    }
}

/// A face on the domain boundary of a Neumann grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    pub axis: usize,
    /// Flat face index within the axis' face array.
    pub face: usize,
    /// Cell the face belongs to.
    pub cell: usize,
    /// Sign of the outward normal along `axis` (-1 or +1).
    pub outward: i8,
}

/// A face of a periodic grid that joins the last cell of a line to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WrapFace {
    pub axis: usize,
    pub face: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lengths: Vec<f64>,
    cells: Vec<usize>,
    spacing: Vec<f64>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let dim = spec.lengths.len();
        if dim == 0 || dim > 2 {
            return Err(Error::Grid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if spec.cells.len() != dim {
            return Err(Error::Grid(format!(
                "{} lengths but {} cell counts",
                dim,
                spec.cells.len()
            )));
        }
        for (axis, (&len, &n)) in spec.lengths.iter().zip(&spec.cells).enumerate() {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Grid(format!(
                    "axis {axis}: length {len} must be positive"
                )));
            }
            if n < MIN_CELLS_PER_AXIS {
                return Err(Error::Grid(format!(
                    "axis {axis}: {n} cells is below the minimum of {MIN_CELLS_PER_AXIS}"
                )));
            }
        }
        let spacing = spec
            .lengths
            .iter()
            .zip(&spec.cells)
            .map(|(&l, &n)| l / n as f64)
            .collect();
        Ok(Self {
            lengths: spec.lengths.clone(),
            cells: spec.cells.clone(),
            spacing,
            boundary: spec.boundary,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lengths: self.lengths.clone(),
            cells: self.cells.clone(),
            boundary: self.boundary,
        }
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// |Ω|, the product of the axis lengths.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Flat index of the cell with per-axis indices `idx`.
    pub fn index(&self, idx: &[usize]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] + self.cells[0] * idx[1],
        }
    }

    /// Per-axis indices of a flat cell index (unused axes are 0).
    pub fn coords(&self, cell: usize) -> [usize; 2] {
        match self.dim() {
            1 => [cell, 0],
            _ => [cell % self.cells[0], cell / self.cells[0]],
        }
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let c = self.coords(cell);
        let mut out = [0.0; 2];
        for axis in 0..self.dim() {
            out[axis] = (c[axis] as f64 + 0.5) * self.spacing[axis];
        }
        out
    }

    /// Number of cell lines running along `axis`.
    pub fn n_lines(&self, axis: usize) -> usize {
        self.n_cells() / self.cells[axis]
    }

    /// First cell and stride of line `line` along `axis`.
    pub fn line_layout(&self, axis: usize, line: usize) -> (usize, usize) {
        match (self.dim(), axis) {
            (1, _) => (0, 1),
            (_, 0) => (line * self.cells[0], 1),
            _ => (line, self.cells[0]),
        }
    }

    /// Faces per line along `axis`.
    pub fn faces_per_line(&self, axis: usize) -> usize {
        match self.boundary {
            Boundary::Neumann => self.cells[axis] + 1,
            Boundary::Periodic => self.cells[axis],
        }
    }

    pub fn n_faces(&self, axis: usize) -> usize {
        self.faces_per_line(axis) * self.n_lines(axis)
    }

    pub fn n_faces_total(&self) -> usize {
        (0..self.dim()).map(|a| self.n_faces(a)).sum()
    }

    /// Index of the face on the right (high) side of position `i` in a line.
    #[inline]
    pub fn right_face(&self, axis: usize, i: usize) -> usize {
        match self.boundary {
            Boundary::Neumann => i + 1,
            Boundary::Periodic => (i + 1) % self.cells[axis],
        }
    }

    /// The two cells adjacent to a face, or `None` for a Neumann boundary face.
    pub fn face_cells(&self, axis: usize, face: usize) -> Option<(usize, usize)> {
        let nf = self.faces_per_line(axis);
        let n = self.cells[axis];
        let (line, f) = (face / nf, face % nf);
        let (start, stride) = self.line_layout(axis, line);
        match self.boundary {
            Boundary::Neumann if f == 0 || f == n => None,
            Boundary::Neumann => Some((start + (f - 1) * stride, start + f * stride)),
            Boundary::Periodic => {
                let left = (f + n - 1) % n;
                Some((start + left * stride, start + f * stride))
            }
        }
    }

    /// Outward-normal boundary faces (empty on periodic grids).
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        if self.is_periodic() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for axis in 0..self.dim() {
            let nf = self.faces_per_line(axis);
            let n = self.cells[axis];
            for line in 0..self.n_lines(axis) {
                let (start, stride) = self.line_layout(axis, line);
                out.push(BoundaryFace {
                    axis,
                    face: line * nf,
                    cell: start,
                    outward: -1,
                });
                out.push(BoundaryFace {
                    axis,
                    face: line * nf + n,
                    cell: start + (n - 1) * stride,
                    outward: 1,
                });
            }
        }
        out
    }

    /// Wraparound faces (empty on Neumann grids).
    pub fn wrap_faces(&self) -> Vec<WrapFace> {
        if !self.is_periodic() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for axis in 0..self.dim() {
            let nf = self.faces_per_line(axis);
            let n = self.cells[axis];
            for line in 0..self.n_lines(axis) {
                let (start, stride) = self.line_layout(axis, line);
                out.push(WrapFace {
                    axis,
                    face: line * nf,
                    left: start + (n - 1) * stride,
                    right: start,
                });
            }
        }
        out
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape("fields live on different grids".into()))
        }
    }
}
