//! Uniform cell-centred grids in one to three dimensions and the centred
//! difference stencils used by the solver and the energy diagnostics.
//!
//! Fields are flat `Vec<f64>` in x-fastest order. Neighbour lookups either
//! wrap (periodic test mode) or clamp to the nearest interior cell
//! (truncated-support mode, i.e. zeroth-order extrapolation).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Compactly supported density inside a box with a vacuum collar.
    TruncatedSupport,
    /// Periodic wrap; used for verification runs without a background flow.
    PeriodicTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Cells per axis; unused axes hold 1.
    pub cells: [usize; 3],
    pub spacing: f64,
    /// Lower corner of the box; cell `i` is centred at `lower + (i + ½) h`.
    pub lower: [f64; 3],
    pub boundary: BoundaryMode,
}

impl Grid {
    /// Cube `[-half_width, half_width]^d` with `cells` cells per axis.
    pub fn centered(dim: usize, cells: usize, half_width: f64, boundary: BoundaryMode) -> Result<Self> {
        Self::new(dim, cells, -half_width, 2.0 * half_width, boundary)
    }

    /// Cube `[lower, lower + length]^d`.
    pub fn new(dim: usize, cells: usize, lower: f64, length: f64, boundary: BoundaryMode) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Grid(format!("dimension {dim} not in 1..=3")));
        }
        if cells < 8 {
            return Err(Error::Grid(format!("need at least 8 cells per axis, got {cells}")));
        }
        if !(length > 0.0) || !lower.is_finite() {
            return Err(Error::Grid("box length must be positive".into()));
        }
        let mut c = [1usize; 3];
        let mut lo = [0.0; 3];
        for a in 0..dim {
            c[a] = cells;
            lo[a] = lower;
        }
        Ok(Self { dim, cells: c, spacing: length / cells as f64, lower: lo, boundary })
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.cells[0] * (i[1] + self.cells[1] * i[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.cells[0];
        let rest = idx / self.cells[0];
        [i, rest % self.cells[1], rest / self.cells[1]]
    }

    /// Physical position of a cell centre; unused axes are 0.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.lower[a] + (c[a] as f64 + 0.5) * self.spacing;
        }
        x
    }

    /// Index of the cell `offset` steps from `idx` along `axis`.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.cells[axis] as isize;
        let k = c[axis] as isize + offset;
        let k = match self.boundary {
            BoundaryMode::PeriodicTest => k.rem_euclid(n),
            BoundaryMode::TruncatedSupport => k.clamp(0, n - 1),
        };
        c[axis] = k as usize;
        self.index(c)
    }

    /// Distance in cells from `idx` to the nearest box face (over active axes).
    pub fn boundary_distance(&self, idx: usize) -> usize {
        let c = self.coords(idx);
        (0..self.dim).map(|a| c[a].min(self.cells[a] - 1 - c[a])).min().unwrap_or(0)
    }

    /// Whether a stencil reaching `reach` cells in each direction fits inside
    /// the box at `idx`. Always true on periodic grids.
    pub fn has_full_stencil(&self, idx: usize, reach: usize) -> bool {
        self.boundary == BoundaryMode::PeriodicTest || self.boundary_distance(idx) >= reach
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Same box with each active axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let mut g = self.clone();
        for a in 0..self.dim {
            g.cells[a] *= factor;
        }
        g.spacing /= factor as f64;
        g
    }

    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.position(i))).collect()
    }

    /// Whether the spatial dimension is below the physical three.
    pub fn qualitative_mode(&self) -> bool {
        self.dim < 3
    }
}

/// Centred first difference `(f[i+1] − f[i−1]) / 2h` along `axis`.
pub fn diff(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let inv = 0.5 / grid.spacing;
    (0..grid.len())
        .map(|i| (f[grid.neighbor(i, axis, 1)] - f[grid.neighbor(i, axis, -1)]) * inv)
        .collect()
}

/// Centred first difference at a single cell.
#[inline]
pub fn diff_at(grid: &Grid, f: &[f64], idx: usize, axis: usize) -> f64 {
    (f[grid.neighbor(idx, axis, 1)] - f[grid.neighbor(idx, axis, -1)]) * (0.5 / grid.spacing)
}

/// Second derivative `∂_a ∂_b f` at one cell: the compact three-point stencil
/// on the diagonal, the four-point cross stencil off it.
#[inline]
pub fn second_at(grid: &Grid, f: &[f64], idx: usize, a: usize, b: usize) -> f64 {
    let h = grid.spacing;
    if a == b {
        (f[grid.neighbor(idx, a, 1)] - 2.0 * f[idx] + f[grid.neighbor(idx, a, -1)]) / (h * h)
    } else {
        let pp = grid.neighbor(grid.neighbor(idx, a, 1), b, 1);
        let pm = grid.neighbor(grid.neighbor(idx, a, 1), b, -1);
        let mp = grid.neighbor(grid.neighbor(idx, a, -1), b, 1);
        let mm = grid.neighbor(grid.neighbor(idx, a, -1), b, -1);
        (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * h * h)
    }
}

/// Undivided fourth difference `f[i−2] − 4f[i−1] + 6f[i] − 4f[i+1] + f[i+2]`.
#[inline]
pub fn fourth_undivided_at(grid: &Grid, f: &[f64], idx: usize, axis: usize) -> f64 {
    f[grid.neighbor(idx, axis, -2)] - 4.0 * f[grid.neighbor(idx, axis, -1)] + 6.0 * f[idx]
        - 4.0 * f[grid.neighbor(idx, axis, 1)]
        + f[grid.neighbor(idx, axis, 2)]
}

/// Sorted multi-indices of length `k` over `dim` axes, each with its count
/// among ordered multi-indices (the multinomial coefficient).
pub fn multi_indices(dim: usize, k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(dim: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in start..dim {
            cur.push(a);
            rec(dim, k, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, 0, &mut Vec::new(), &mut out);
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    out.into_iter()
        .map(|mi| {
            let mut denom = 1.0;
            for a in 0..dim {
                denom *= fact(mi.iter().filter(|&&x| x == a).count());
            }
            (mi, fact(k) / denom)
        })
        .collect()
}

/// Squared discrete seminorm `|∇^k f|₂²` built from repeated centred first
/// differences, summed over cells whose stencil of reach `k` lies inside the
/// box. The weight `w` (if given) multiplies the derivative pointwise before
/// squaring. Summation runs in cell order.
pub fn seminorm_sq(grid: &Grid, f: &[f64], k: usize, w: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    for (mi, count) in multi_indices(grid.dim, k) {
        let mut g = f.to_vec();
        for &axis in &mi {
            g = diff(grid, &g, axis);
        }
        let mut s = 0.0;
        for (i, v) in g.iter().enumerate() {
            if grid.has_full_stencil(i, k) {
                let v = match w {
                    Some(w) => v * w[i],
                    None => *v,
                };
                s += v * v;
            }
        }
        total += count * s;
    }
    total * grid.cell_volume()
}

/// Deterministic discrete integral `Σ f h^d`.
pub fn integrate(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().sum::<f64>() * grid.cell_volume()
}
