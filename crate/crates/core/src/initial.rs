//! Named initial densities `u₀` with `0 ≤ u₀ ≤ 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialPreset {
    /// `u₀ ≡ value`.
    Constant { value: f64 },
    /// `left` for `x < x0`, `right` otherwise (x is the first axis).
    Riemann { left: f64, right: f64, x0: f64 },
    /// `base + height · Σ_c exp(−|y − c|² / (2 width²))`, clamped.
    /// Centres are given as x coordinates; in 2D the bumps are centred on
    /// the mid-line of the second axis.
    SmoothBumps {
        base: f64,
        height: f64,
        width: f64,
        centers: Vec<f64>,
    },
    /// `mean + amplitude · Π_axis cos(2π·mode·y_axis / L_axis)`.
    CosinePerturbation {
        mean: f64,
        amplitude: f64,
        mode: u32,
    },
    /// Independent uniform values in `[low, high]` per cell.
    RandomCellwise { low: f64, high: f64, seed: u64 },
}

impl InitialPreset {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Riemann { .. } => "riemann",
            Self::SmoothBumps { .. } => "smooth-bumps",
            Self::CosinePerturbation { .. } => "cosine-perturbation",
            Self::RandomCellwise { .. } => "random-cellwise",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(key, format!("{v} is not in [0, 1]")))
            }
        };
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(key, "must be finite"))
            }
        };
        match self {
            Self::Constant { value } => unit("initial.value", *value),
            Self::Riemann { left, right, x0 } => {
                unit("initial.left", *left)?;
                unit("initial.right", *right)?;
                finite("initial.x0", *x0)
            }
            Self::SmoothBumps {
                base,
                height,
                width,
                centers,
            } => {
                unit("initial.base", *base)?;
                finite("initial.height", *height)?;
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::param("initial.width", "must be positive"));
                }
                centers
                    .iter()
                    .try_for_each(|&c| finite("initial.centers", c))
            }
            Self::CosinePerturbation {
                mean, amplitude, ..
            } => {
                unit("initial.mean", *mean)?;
                finite("initial.amplitude", *amplitude)
            }
            Self::RandomCellwise { low, high, seed } => {
                unit("initial.low", *low)?;
                unit("initial.high", *high)?;
                if low > high {
                    return Err(Error::param("initial.low", "must not exceed initial.high"));
                }
                // Config files store integers as signed 64-bit.
                if i64::try_from(*seed).is_err() {
                    return Err(Error::param("initial.seed", "must be below 2^63"));
                }
                Ok(())
            }
        }
    }
}

impl Default for InitialPreset {
    fn default() -> Self {
        Self::CosinePerturbation {
            mean: 0.5,
            amplitude: 0.1,
            mode: 1,
        }
    }
}

/// Builds `u₀` on `grid`. Every value is clamped into `[0, 1]`.
pub fn initial_data(preset: &InitialPreset, grid: &Grid) -> Result<CellField> {
    preset.validate()?;
    let dim = grid.dim();
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let field = match preset {
        InitialPreset::Constant { value } => CellField::constant(grid, *value),
        InitialPreset::Riemann { left, right, x0 } => {
            CellField::from_fn(grid, |y| if y[0] < *x0 { *left } else { *right })
        }
        InitialPreset::SmoothBumps {
            base,
            height,
            width,
            centers,
        } => {
            let mid = if dim == 2 { 0.5 * grid.length(1) } else { 0.0 };
            CellField::from_fn(grid, |y| {
                let bumps: f64 = centers
                    .iter()
                    .map(|&c| {
                        let r2 =
                            (y[0] - c).powi(2) + if dim == 2 { (y[1] - mid).powi(2) } else { 0.0 };
                        (-r2 / (2.0 * width * width)).exp()
                    })
                    .sum();
                clamp(base + height * bumps)
            })
        }
        InitialPreset::CosinePerturbation {
            mean,
            amplitude,
            mode,
        } => CellField::from_fn(grid, |y| {
            let wave: f64 = (0..dim)
                .map(|a| (2.0 * PI * *mode as f64 * y[a] / grid.length(a)).cos())
                .product();
            clamp(mean + amplitude * wave)
        }),
        InitialPreset::RandomCellwise { low, high, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let values = (0..grid.n_cells())
                .map(|_| {
                    if low == high {
                        *low
                    } else {
                        rng.gen_range(*low..=*high)
                    }
                })
                .collect();
            CellField::new(grid, values)?
        }
    };
    Ok(field)
}

/// Parses a bare preset name with its default parameters.
pub fn preset_by_name(name: &str) -> Result<InitialPreset> {
    Ok(match name {
        "constant" => InitialPreset::Constant { value: 0.5 },
        "riemann" => InitialPreset::Riemann {
            left: 1.0,
            right: 0.0,
            x0: 0.5,
        },
        "smooth-bumps" => InitialPreset::SmoothBumps {
            base: 0.2,
            height: 0.6,
            width: 0.08,
            centers: vec![0.3, 0.7],
        },
        "cosine-perturbation" => InitialPreset::default(),
        "random-cellwise" => InitialPreset::RandomCellwise {
            low: 0.0,
            high: 1.0,
            seed: 0,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}
