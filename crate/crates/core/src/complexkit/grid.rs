//! Rectangular chart grids and finite-difference stencils.

use super::C64;
use serde::{Deserialize, Serialize};

/// Uniform grid `x_i = x0 + i·hx`, `y_j = y0 + j·hy` in the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ChartGrid {
    /// Grid covering `[x0, x1] × [y0, y1]` with `nx × ny` nodes.
    pub fn spanning(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Self {
        Self {
            x0,
            y0,
            hx: (x1 - x0) / (nx - 1) as f64,
            hy: (y1 - y0) / (ny - 1) as f64,
            nx,
            ny,
        }
    }

    /// Same rectangle with spacing halved.
    pub fn refined(&self) -> Self {
        Self { hx: self.hx / 2.0, hy: self.hy / 2.0, nx: 2 * self.nx - 1, ny: 2 * self.ny - 1, ..*self }
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(self.x0 + self.hx * i as f64, self.y0 + self.hy * j as f64)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn sample<T>(&self, f: impl Fn(C64) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(f(self.point(i, j)));
            }
        }
        out
    }
}

// fourth-order first-derivative weights: centred, and one-sided for the first two/last two nodes
const C4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const F4: [f64; 5] = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0];
const F4B: [f64; 5] = [-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0];

fn diff1d(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len();
    assert!(n >= 5, "fourth-order stencils need at least five nodes");
    (0..n)
        .map(|i| {
            let s: C64 = if i >= 2 && i + 2 < n {
                (0..5).map(|k| v[i + k - 2] * C4[k]).sum()
            } else if i == 0 {
                (0..5).map(|k| v[k] * F4[k]).sum()
            } else if i == 1 {
                (0..5).map(|k| v[k] * F4B[k]).sum()
            } else if i == n - 1 {
                -(0..5).map(|k| v[n - 1 - k] * F4[k]).sum::<C64>()
            } else {
                -(0..5).map(|k| v[n - 1 - k] * F4B[k]).sum::<C64>()
            };
            s / h
        })
        .collect()
}

/// ∂/∂x on the grid, fourth order.
pub fn d_dx(g: &ChartGrid, v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    for j in 0..g.ny {
        let row: Vec<C64> = (0..g.nx).map(|i| v[g.index(i, j)]).collect();
        for (i, d) in diff1d(&row, g.hx).into_iter().enumerate() {
            out[g.index(i, j)] = d;
        }
    }
    out
}

/// ∂/∂y on the grid, fourth order.
pub fn d_dy(g: &ChartGrid, v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    for i in 0..g.nx {
        let col: Vec<C64> = (0..g.ny).map(|j| v[g.index(i, j)]).collect();
        for (j, d) in diff1d(&col, g.hy).into_iter().enumerate() {
            out[g.index(i, j)] = d;
        }
    }
    out
}

/// (∂_z, ∂_z̄) = ½(∂_x ∓ i∂_y).
pub fn d_dz(g: &ChartGrid, v: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let (dx, dy) = (d_dx(g, v), d_dy(g, v));
    let i = C64::new(0.0, 1.0);
    let dz = dx.iter().zip(&dy).map(|(a, b)| 0.5 * (a - i * b)).collect();
    let dzb = dx.iter().zip(&dy).map(|(a, b)| 0.5 * (a + i * b)).collect();
    (dz, dzb)
}

/// Second-order five-point Laplacian at interior node (i, j).
pub fn laplacian5(g: &ChartGrid, v: &[C64], i: usize, j: usize) -> C64 {
    let c = v[g.index(i, j)];
    (v[g.index(i + 1, j)] - 2.0 * c + v[g.index(i - 1, j)]) / (g.hx * g.hx)
        + (v[g.index(i, j + 1)] - 2.0 * c + v[g.index(i, j - 1)]) / (g.hy * g.hy)
}

/// Fourth-order nine-point-per-axis Laplacian at node (i, j), needs two neighbours each side.
pub fn laplacian4(g: &ChartGrid, v: &[C64], i: usize, j: usize) -> C64 {
    let w = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    let mut sx = C64::new(0.0, 0.0);
    let mut sy = C64::new(0.0, 0.0);
    for k in 0..5 {
        sx += v[g.index(i + k - 2, j)] * w[k];
        sy += v[g.index(i, j + k - 2)] * w[k];
    }
    sx / (g.hx * g.hx) + sy / (g.hy * g.hy)
}
