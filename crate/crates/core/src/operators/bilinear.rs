use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linear::DenseMatrix;
use crate::error::{LabError, Result};
use crate::grid::{Grid, GridFn};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BilinearKind {
    /// Periodic, symmetrically truncated at `N/2 − 1`.
    Bht,
    /// `N^{-s} (|i−j| + |i−k|)^{s−2}`, only `j = k = i` excluded.
    BiS { s: f64 },
    /// `K(u, v) = (u + v) / (u² + v²)^{3/2}` with `u = i−j`, `v = i−k`.
    BilinearCz,
}

/// Kernel realization of a bilinear operator on a 1D grid, evaluated on the fly.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearKernelOp {
    pub kind: BilinearKind,
    pub grid: Grid,
}

impl BilinearKernelOp {
    pub fn new(kind: BilinearKind, grid: Grid) -> Result<Self> {
        if grid.dim != 1 {
            return Err(LabError::Unsupported("bilinear operators are 1D only".into()));
        }
        if let BilinearKind::BiS { s } = kind {
            if !(s > 0.0 && s < 2.0) {
                return Err(LabError::domain(format!("s = {s} outside (0, 2)")));
            }
        }
        Ok(BilinearKernelOp { kind, grid })
    }

    pub fn bht(grid: Grid) -> Result<Self> {
        Self::new(BilinearKind::Bht, grid)
    }

    pub fn name(&self) -> String {
        match self.kind {
            BilinearKind::Bht => "bht".into(),
            BilinearKind::BiS { s } => format!("bi_s({s})"),
            BilinearKind::BilinearCz => "bilinear_cz".into(),
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n_points
    }

    /// Calls `visit(j, k, K(i, j, k))` for every nonzero kernel term at output `i`.
    #[inline]
    pub fn for_each_term(&self, i: usize, mut visit: impl FnMut(usize, usize, f64)) {
        let n = self.n();
        match self.kind {
            BilinearKind::Bht => {
                for t in 1..n / 2 {
                    let lo = (i + n - t) % n;
                    let hi = (i + t) % n;
                    let c = 1.0 / t as f64;
                    visit(lo, hi, c);
                    visit(hi, lo, -c);
                }
            }
            BilinearKind::BiS { s } => {
                let scale = (n as f64).powf(-s);
                for j in 0..n {
                    let dj = (i as f64 - j as f64).abs();
                    for k in 0..n {
                        if j == i && k == i {
                            continue;
                        }
                        let d = dj + (i as f64 - k as f64).abs();
                        visit(j, k, scale * d.powf(s - 2.0));
                    }
                }
            }
            BilinearKind::BilinearCz => {
                for j in 0..n {
                    let u = i as f64 - j as f64;
                    for k in 0..n {
                        if j == i && k == i {
                            continue;
                        }
                        let v = i as f64 - k as f64;
                        let r2 = u * u + v * v;
                        visit(j, k, (u + v) / (r2 * r2.sqrt()));
                    }
                }
            }
        }
    }

    pub fn apply_slices(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let mut acc = 0.0;
                self.for_each_term(i, |j, k, c| acc += c * f[j] * g[k]);
                acc
            })
            .collect()
    }

    pub fn apply_complex(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        (0..self.n())
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_term(i, |j, k, c| acc += f[j] * g[k] * c);
                acc
            })
            .collect()
    }

    pub fn apply(&self, f: &GridFn, g: &GridFn) -> Result<GridFn> {
        if f.grid != self.grid || g.grid != self.grid {
            return Err(LabError::domain("operator and inputs on different grids"));
        }
        GridFn::new(self.grid, self.apply_slices(&f.values, &g.values))
    }
}

pub fn bht(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    BilinearKernelOp::bht(f.grid)?.apply(f, g)
}

pub fn bi_s(f: &GridFn, g: &GridFn, s: f64) -> Result<GridFn> {
    BilinearKernelOp::new(BilinearKind::BiS { s }, f.grid)?.apply(f, g)
}

/// Bilinear map on `ℝ^N × ℝ^N` with materializable slot matrices.
pub trait BilinearForm: Sync {
    fn n(&self) -> usize;
    fn apply(&self, f: &[f64], g: &[f64]) -> Vec<f64>;
    /// Matrix `A` with `A f = T(f, g)`.
    fn slot1(&self, g: &[f64]) -> DenseMatrix;
    /// Matrix `B` with `B g = T(f, g)`.
    fn slot2(&self, f: &[f64]) -> DenseMatrix;
}

impl BilinearForm for BilinearKernelOp {
    fn n(&self) -> usize {
        self.grid.n_points
    }
    fn apply(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        self.apply_slices(f, g)
    }
    fn slot1(&self, g: &[f64]) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            self.for_each_term(i, |j, k, c| m.data[i * n + j] += c * g[k]);
        }
        m
    }
    fn slot2(&self, f: &[f64]) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            self.for_each_term(i, |j, k, c| m.data[i * n + k] += c * f[j]);
        }
        m
    }
}

/// `(F, G) ↦ v · T(u₁F, u₂G)`: the counting-norm form of a weighted estimate.
pub struct WeightedBilinear<'a, B: BilinearForm> {
    pub inner: &'a B,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub v: Vec<f64>,
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

impl<B: BilinearForm> BilinearForm for WeightedBilinear<'_, B> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn apply(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        mul(&self.v, &self.inner.apply(&mul(&self.u1, f), &mul(&self.u2, g)))
    }
    fn slot1(&self, g: &[f64]) -> DenseMatrix {
        self.inner.slot1(&mul(&self.u2, g)).scaled(&self.v, &self.u1)
    }
    fn slot2(&self, f: &[f64]) -> DenseMatrix {
        self.inner.slot2(&mul(&self.u1, f)).scaled(&self.v, &self.u2)
    }
}
