//! Uniform torus grids, cube families and prefix-sum averaging.
//!
//! Cells are half-open with left endpoints `x_i = i/N`. Cubes never wrap
//! around the period. A 1D grid is stored as an `N × 1` array so the same
//! prefix tables serve both dimensions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::DD;

/// Largest side length accepted for 2D grids.
pub const MAX_SIDE_2D: usize = 256;
/// Largest side length for the full rectangle family (O(N⁴) members).
pub const MAX_SIDE_ALL_RECT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n_points: usize,
}

impl Grid {
    pub fn new(dim: usize, n_points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::domain(format!("dimension {dim} not in {{1,2}}")));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(LabError::domain(format!(
                "n_points = {n_points} must be a power of two and at least 2"
            )));
        }
        if dim == 2 && n_points > MAX_SIDE_2D {
            return Err(LabError::domain(format!(
                "2D grids are capped at {MAX_SIDE_2D} points per axis"
            )));
        }
        Ok(Grid { dim, n_points })
    }

    pub fn d1(n: usize) -> Result<Self> {
        Grid::new(1, n)
    }

    pub fn d2(n: usize) -> Result<Self> {
        Grid::new(2, n)
    }

    pub fn cells(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_points as f64
    }

    /// Array shape `[nx, ny]`; 1D grids have `ny = 1`.
    pub fn shape(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.n_points, 1]
        } else {
            [self.n_points, self.n_points]
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.shape()[1] + iy
    }

    /// The whole grid as a single cube.
    pub fn whole(&self) -> Cube {
        let s = self.shape();
        Cube {
            start: [0, 0],
            len: s,
        }
    }
}

/// Index box: `start[a] .. start[a] + len[a]` along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub start: [usize; 2],
    pub len: [usize; 2],
}

impl Cube {
    pub fn interval(start: usize, len: usize) -> Self {
        Cube {
            start: [start, 0],
            len: [len, 1],
        }
    }

    pub fn rect(x0: usize, lx: usize, y0: usize, ly: usize) -> Self {
        Cube {
            start: [x0, y0],
            len: [lx, ly],
        }
    }

    pub fn volume(&self) -> usize {
        self.len[0] * self.len[1]
    }

    pub fn end(&self, axis: usize) -> usize {
        self.start[axis] + self.len[axis]
    }

    pub fn contains(&self, ix: usize, iy: usize) -> bool {
        ix >= self.start[0] && ix < self.end(0) && iy >= self.start[1] && iy < self.end(1)
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        let s = grid.shape();
        for a in 0..2 {
            if self.len[a] == 0 || self.end(a) > s[a] {
                return Err(LabError::domain(format!("cube {self} outside grid of shape {s:?}")));
            }
        }
        Ok(())
    }

    /// Flat indices of the cells, row-major.
    pub fn cell_indices(&self, grid: &Grid) -> impl Iterator<Item = usize> + '_ {
        let ny = grid.shape()[1];
        (self.start[0]..self.end(0))
            .flat_map(move |ix| (self.start[1]..self.end(1)).map(move |iy| ix * ny + iy))
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len[1] == 1 && self.start[1] == 0 {
            write!(f, "[{},{})", self.start[0], self.end(0))
        } else {
            write!(
                f,
                "[{},{})x[{},{})",
                self.start[0],
                self.end(0),
                self.start[1],
                self.end(1)
            )
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    AllIntervals,
    DyadicIntervals,
    DyadicSquares,
    DyadicRectangles,
    /// Every axis-parallel rectangle; gated to N ≤ 64.
    AllRectangles,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::AllIntervals => "all_intervals",
            FamilyKind::DyadicIntervals => "dyadic_intervals",
            FamilyKind::DyadicSquares => "dyadic_squares",
            FamilyKind::DyadicRectangles => "dyadic_rectangles",
            FamilyKind::AllRectangles => "all_rectangles",
        }
    }

    fn dim(&self) -> usize {
        match self {
            FamilyKind::AllIntervals | FamilyKind::DyadicIntervals => 1,
            _ => 2,
        }
    }
}

impl FromStr for FamilyKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all_intervals" => FamilyKind::AllIntervals,
            "dyadic_intervals" => FamilyKind::DyadicIntervals,
            "dyadic_squares" => FamilyKind::DyadicSquares,
            "dyadic_rectangles" => FamilyKind::DyadicRectangles,
            "all_rectangles" => FamilyKind::AllRectangles,
            other => return Err(LabError::Config(format!("unknown family '{other}'"))),
        })
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeFamily {
    pub kind: FamilyKind,
    pub grid: Grid,
}

fn dyadic_axis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(2 * n - 1);
    let mut len = 1;
    while len <= n {
        for k in 0..n / len {
            out.push((k * len, len));
        }
        len *= 2;
    }
    out
}

fn all_axis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for len in 1..=n {
        for s in 0..=n - len {
            out.push((s, len));
        }
    }
    out
}

impl CubeFamily {
    pub fn new(kind: FamilyKind, grid: Grid) -> Result<Self> {
        if kind.dim() != grid.dim {
            return Err(LabError::domain(format!(
                "family {kind} needs a {}D grid, got {}D",
                kind.dim(),
                grid.dim
            )));
        }
        if kind == FamilyKind::AllRectangles && grid.n_points > MAX_SIDE_ALL_RECT {
            return Err(LabError::domain(format!(
                "all_rectangles is limited to N <= {MAX_SIDE_ALL_RECT}"
            )));
        }
        Ok(CubeFamily { kind, grid })
    }

    /// Number of members, without enumerating.
    pub fn count(&self) -> usize {
        let n = self.grid.n_points;
        match self.kind {
            FamilyKind::AllIntervals => n * (n + 1) / 2,
            FamilyKind::DyadicIntervals => 2 * n - 1,
            FamilyKind::DyadicSquares => (4 * n * n - 1) / 3,
            FamilyKind::DyadicRectangles => (2 * n - 1) * (2 * n - 1),
            FamilyKind::AllRectangles => (n * (n + 1) / 2).pow(2),
        }
    }

    /// [`CubeFamily::enumerate`], memoized per family for the process.
    pub fn members(&self) -> Arc<Vec<Cube>> {
        static CACHE: OnceLock<Mutex<HashMap<CubeFamily, Arc<Vec<Cube>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap().get(self) {
            return v.clone();
        }
        let v = Arc::new(self.enumerate());
        cache.lock().unwrap().insert(*self, v.clone());
        v
    }

    /// Deterministic, duplicate-free list of members, smallest first.
    pub fn enumerate(&self) -> Vec<Cube> {
        let n = self.grid.n_points;
        match self.kind {
            FamilyKind::AllIntervals => all_axis(n)
                .into_iter()
                .map(|(s, l)| Cube::interval(s, l))
                .collect(),
            FamilyKind::DyadicIntervals => dyadic_axis(n)
                .into_iter()
                .map(|(s, l)| Cube::interval(s, l))
                .collect(),
            FamilyKind::DyadicSquares => {
                let mut out = Vec::with_capacity(self.count());
                let mut len = 1;
                while len <= n {
                    for i in 0..n / len {
                        for j in 0..n / len {
                            out.push(Cube::rect(i * len, len, j * len, len));
                        }
                    }
                    len *= 2;
                }
                out
            }
            FamilyKind::DyadicRectangles => product(&dyadic_axis(n)),
            FamilyKind::AllRectangles => product(&all_axis(n)),
        }
    }
}

fn product(axis: &[(usize, usize)]) -> Vec<Cube> {
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &(x0, lx) in axis {
        for &(y0, ly) in axis {
            out.push(Cube::rect(x0, lx, y0, ly));
        }
    }
    out
}

/// Real-valued function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(LabError::domain(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::domain(format!("non-finite value at cell {i}")));
        }
        Ok(GridFn { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFn {
            grid,
            values: vec![c; grid.cells()],
        }
    }

    /// Samples `f(x, y)` at left endpoints; `y = 0` in 1D.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let [nx, ny] = grid.shape();
        let h = grid.spacing();
        let mut v = Vec::with_capacity(grid.cells());
        for i in 0..nx {
            for j in 0..ny {
                let y = if grid.dim == 1 { 0.0 } else { j as f64 * h };
                v.push(f(i as f64 * h, y));
            }
        }
        GridFn::new(grid, v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFn::new(self.grid, self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max_abs(&self) -> f64 {
        crate::numeric::max_abs(&self.values)
    }

    /// Normalized L^p norm `(N^{-n} Σ |f|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let raw = crate::numeric::lp_norm(&self.values, p);
        if p.is_infinite() {
            raw
        } else {
            raw * (self.grid.cells() as f64).powf(-1.0 / p)
        }
    }

    pub fn average(&self, q: &Cube) -> Result<f64> {
        average(self, q)
    }
}

#[derive(Serialize, Deserialize)]
struct GridFnRepr {
    dim: usize,
    n_points: usize,
    values: Vec<f64>,
}

impl Serialize for GridFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFnRepr {
            dim: self.grid.dim,
            n_points: self.grid.n_points,
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GridFnRepr::deserialize(d)?;
        let grid = Grid::new(r.dim, r.n_points).map_err(serde::de::Error::custom)?;
        GridFn::new(grid, r.values).map_err(serde::de::Error::custom)
    }
}

/// 2D table of double-double partial sums; `O(1)` box sums.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    grid: Grid,
    stride: usize,
    table: Vec<DD>,
}

impl PrefixSums {
    pub fn new(grid: Grid, values: &[f64]) -> Self {
        let [nx, ny] = grid.shape();
        let stride = ny + 1;
        let mut table = vec![DD::ZERO; (nx + 1) * stride];
        for i in 0..nx {
            let mut row = DD::ZERO;
            for j in 0..ny {
                row = row.add_f64(values[i * ny + j]);
                table[(i + 1) * stride + j + 1] = table[i * stride + j + 1].add(row);
            }
        }
        PrefixSums {
            grid,
            stride,
            table,
        }
    }

    pub fn of(f: &GridFn) -> Self {
        PrefixSums::new(f.grid, &f.values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Box sum; the caller guarantees the cube lies in the grid.
    #[inline]
    pub fn sum(&self, q: &Cube) -> f64 {
        let (x0, x1) = (q.start[0], q.end(0));
        let (y0, y1) = (q.start[1], q.end(1));
        let s = self.stride;
        let t = &self.table;
        t[x1 * s + y1]
            .sub(t[x0 * s + y1])
            .sub(t[x1 * s + y0])
            .add(t[x0 * s + y0])
            .to_f64()
    }

    #[inline]
    pub fn avg(&self, q: &Cube) -> f64 {
        self.sum(q) / q.volume() as f64
    }
}

/// `(1/|Q|) Σ_{Q} f`.
pub fn average(f: &GridFn, q: &Cube) -> Result<f64> {
    q.check(&f.grid)?;
    Ok(PrefixSums::of(f).avg(q))
}

/// Range maximum over boxes: a sparse table along axis 0 for each column.
#[derive(Clone, Debug)]
pub struct RangeMax {
    ny: usize,
    levels: Vec<Vec<f64>>,
}

impl RangeMax {
    pub fn new(grid: Grid, values: &[f64]) -> Self {
        let [nx, ny] = grid.shape();
        let mut levels = vec![values.to_vec()];
        let mut span = 1;
        while 2 * span <= nx {
            let prev = levels.last().unwrap();
            let mut next = vec![f64::NEG_INFINITY; nx * ny];
            for i in 0..=nx - 2 * span {
                for j in 0..ny {
                    next[i * ny + j] = prev[i * ny + j].max(prev[(i + span) * ny + j]);
                }
            }
            levels.push(next);
            span *= 2;
        }
        RangeMax { ny, levels }
    }

    pub fn max(&self, q: &Cube) -> f64 {
        let len = q.len[0];
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let lvl = &self.levels[k];
        let a = q.start[0];
        let b = q.end(0) - (1 << k);
        let mut m = f64::NEG_INFINITY;
        for j in q.start[1]..q.end(1) {
            m = m.max(lvl[a * self.ny + j]).max(lvl[b * self.ny + j]);
        }
        m
    }
}

/// Supremum of a per-cube quantity with its maximizing cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub cube: Cube,
}

/// Parallel supremum with a deterministic outcome: NaN beats everything,
/// ties go to the lowest enumeration index.
pub fn sup_over<F>(cubes: &[Cube], f: F) -> Extremum
where
    F: Fn(&Cube) -> f64 + Sync,
{
    assert!(!cubes.is_empty(), "empty cube family");
    let pick = |a: (f64, usize), b: (f64, usize)| -> (f64, usize) {
        let better = |x: (f64, usize), y: (f64, usize)| {
            if x.0.is_nan() != y.0.is_nan() {
                x.0.is_nan()
            } else if x.0.is_nan() || x.0 == y.0 {
                x.1 < y.1
            } else {
                x.0 > y.0
            }
        };
        if better(a, b) {
            a
        } else {
            b
        }
    };
    let (value, idx) = cubes
        .par_iter()
        .enumerate()
        .map(|(i, c)| (f(c), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick);
    Extremum {
        value,
        cube: cubes[idx],
    }
}
