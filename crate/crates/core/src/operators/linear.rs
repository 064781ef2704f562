use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{CubeFamily, Grid, GridFn};

/// Square or rectangular row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += a * yi;
                }
            }
        }
        out
    }

    pub fn matvec_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let (mut re, mut im) = (0.0, 0.0);
                for (a, z) in self.row(i).iter().zip(x) {
                    re += a * z.re;
                    im += a * z.im;
                }
                Complex64::new(re, im)
            })
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, o: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = DenseMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0.0 {
                    let orow = o.row(k);
                    let dst = &mut out.data[i * o.cols..(i + 1) * o.cols];
                    for (d, b) in dst.iter_mut().zip(orow) {
                        *d += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, o: &DenseMatrix) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, o: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `diag(l) · self · diag(r)`.
    pub fn scaled(&self, l: &[f64], r: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| l[i] * self.get(i, j) * r[j])
    }
}

/// Square linear map given by its action and its transpose action.
pub trait LinearMap: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_t(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearMap for DenseMatrix {
    fn size(&self) -> usize {
        assert_eq!(self.rows, self.cols);
        self.rows
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        self.matvec_t(y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearKind {
    Hilbert,
    Riesz { alpha: f64 },
    DoubleHilbert,
    Custom,
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(Arc<DenseMatrix>),
    /// `K = F ⊗ F` acting on an `N × N` grid.
    Separable(Arc<DenseMatrix>),
}

/// Matrix realization of a linear operator on a grid.
#[derive(Clone, Debug)]
pub struct LinearKernelOp {
    pub kind: LinearKind,
    pub grid: Grid,
    repr: Repr,
}

/// Largest grid side for a dense 2D kernel (N⁴ entries).
pub const MAX_DENSE_2D: usize = 64;

fn hilbert_matrix(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            1.0 / (i as f64 - j as f64)
        }
    })
}

impl LinearKernelOp {
    /// Non-periodic p.v. kernel `K[i][j] = 1/(i − j)`, zero diagonal.
    pub fn hilbert(grid: Grid) -> Result<Self> {
        if grid.dim != 1 {
            return Err(LabError::domain("hilbert needs a 1D grid"));
        }
        Ok(LinearKernelOp {
            kind: LinearKind::Hilbert,
            grid,
            repr: Repr::Dense(Arc::new(hilbert_matrix(grid.n_points))),
        })
    }

    /// `I_α` with `c_α = 1`: `K = N^{-α} |i − j|^{α−n}` off the diagonal.
    pub fn riesz(grid: Grid, alpha: f64) -> Result<Self> {
        let nd = grid.dim as f64;
        if !(alpha > 0.0 && alpha < nd) {
            return Err(LabError::domain(format!("alpha = {alpha} outside (0, {nd})")));
        }
        if grid.dim == 2 && grid.n_points > MAX_DENSE_2D {
            return Err(LabError::domain(format!(
                "dense 2D Riesz kernel limited to N <= {MAX_DENSE_2D}"
            )));
        }
        let n = grid.n_points;
        let scale = (n as f64).powf(-alpha);
        let [_, ny] = grid.shape();
        let cells = grid.cells();
        let m = DenseMatrix::from_fn(cells, cells, |a, b| {
            if a == b {
                return 0.0;
            }
            let (ax, ay) = (a / ny, a % ny);
            let (bx, by) = (b / ny, b % ny);
            let dx = ax as f64 - bx as f64;
            let dy = ay as f64 - by as f64;
            scale * (dx * dx + dy * dy).sqrt().powf(alpha - nd)
        });
        Ok(LinearKernelOp {
            kind: LinearKind::Riesz { alpha },
            grid,
            repr: Repr::Dense(Arc::new(m)),
        })
    }

    /// `H₁H₂` as the tensor square of the 1D kernel.
    pub fn double_hilbert(grid: Grid) -> Result<Self> {
        if grid.dim != 2 {
            return Err(LabError::domain("double_hilbert needs a 2D grid"));
        }
        Ok(LinearKernelOp {
            kind: LinearKind::DoubleHilbert,
            grid,
            repr: Repr::Separable(Arc::new(hilbert_matrix(grid.n_points))),
        })
    }

    pub fn custom(grid: Grid, m: DenseMatrix) -> Result<Self> {
        if m.rows != grid.cells() || m.cols != grid.cells() {
            return Err(LabError::domain("custom kernel has the wrong shape"));
        }
        Ok(LinearKernelOp {
            kind: LinearKind::Custom,
            grid,
            repr: Repr::Dense(Arc::new(m)),
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            LinearKind::Hilbert => "hilbert".into(),
            LinearKind::Riesz { alpha } => format!("riesz({alpha})"),
            LinearKind::DoubleHilbert => "double_hilbert".into(),
            LinearKind::Custom => "custom".into(),
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.repr, Repr::Separable(_))
    }

    /// Dense kernel, if the operator is stored densely.
    pub fn dense(&self) -> Option<&DenseMatrix> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            Repr::Separable(_) => None,
        }
    }

    /// Kernel entry between flat cell indices.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.get(i, j),
            Repr::Separable(f) => {
                let n = self.grid.n_points;
                f.get(i / n, j / n) * f.get(i % n, j % n)
            }
        }
    }

    /// Materializes the full kernel (Kronecker product for separable ops).
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.repr {
            Repr::Dense(m) => (**m).clone(),
            Repr::Separable(_) => {
                let c = self.grid.cells();
                DenseMatrix::from_fn(c, c, |i, j| self.entry(i, j))
            }
        }
    }

    fn separable_apply<T>(&self, f: &DenseMatrix, x: &[T], transpose: bool) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.grid.n_points;
        let k = |a: usize, b: usize| if transpose { f.get(b, a) } else { f.get(a, b) };
        // axis 0 then axis 1
        let mut tmp = vec![T::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                let c = k(i, j);
                if c != 0.0 {
                    for y in 0..n {
                        tmp[i * n + y] = tmp[i * n + y] + x[j * n + y] * c;
                    }
                }
            }
        }
        let mut out = vec![T::default(); n * n];
        for xrow in 0..n {
            for i in 0..n {
                let mut acc = T::default();
                for j in 0..n {
                    let c = k(i, j);
                    if c != 0.0 {
                        acc = acc + tmp[xrow * n + j] * c;
                    }
                }
                out[xrow * n + i] = acc;
            }
        }
        out
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(m) => m.matvec(x),
            Repr::Separable(f) => self.separable_apply(f, x, false),
        }
    }

    pub fn apply_t_slice(&self, y: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(m) => m.matvec_t(y),
            Repr::Separable(f) => self.separable_apply(f, y, true),
        }
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.repr {
            Repr::Dense(m) => m.matvec_c(x),
            Repr::Separable(f) => self.separable_apply(f, x, false),
        }
    }

    pub fn apply(&self, f: &GridFn) -> Result<GridFn> {
        if f.grid != self.grid {
            return Err(LabError::domain("operator and function on different grids"));
        }
        GridFn::new(self.grid, self.apply_slice(&f.values))
    }
}

impl LinearMap for LinearKernelOp {
    fn size(&self) -> usize {
        self.grid.cells()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_slice(x)
    }
    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        self.apply_t_slice(y)
    }
}

/// Hilbert transform through a zero-padded FFT convolution, `O(N log N)`.
pub fn hilbert(f: &GridFn) -> Result<GridFn> {
    if f.grid.dim != 1 {
        return Err(LabError::domain("hilbert needs a 1D grid"));
    }
    let n = f.grid.n_points;
    let l = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(l);
    let inv = planner.plan_fft_inverse(l);
    let mut ker = vec![Complex64::new(0.0, 0.0); l];
    for d in 1..n {
        ker[d] = Complex64::new(1.0 / d as f64, 0.0);
        ker[l - d] = Complex64::new(-1.0 / d as f64, 0.0);
    }
    let mut x: Vec<Complex64> = f
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)).take(n))
        .collect();
    fwd.process(&mut ker);
    fwd.process(&mut x);
    for (a, b) in x.iter_mut().zip(&ker) {
        *a *= b;
    }
    inv.process(&mut x);
    GridFn::new(f.grid, x[..n].iter().map(|z| z.re / l as f64).collect())
}

/// Hilbert transform by direct summation, `O(N²)`, no matrix stored.
pub fn hilbert_direct(f: &GridFn) -> Result<GridFn> {
    if f.grid.dim != 1 {
        return Err(LabError::domain("hilbert needs a 1D grid"));
    }
    let n = f.grid.n_points;
    let v = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| f.values[j] / (i as f64 - j as f64))
                .sum()
        })
        .collect();
    GridFn::new(f.grid, v)
}

pub fn riesz(f: &GridFn, alpha: f64) -> Result<GridFn> {
    LinearKernelOp::riesz(f.grid, alpha)?.apply(f)
}

pub fn double_hilbert(f: &GridFn) -> Result<GridFn> {
    LinearKernelOp::double_hilbert(f.grid)?.apply(f)
}

/// `Mf(x) = max` over family members containing `x` of `avg |f|`.
pub fn maximal(f: &GridFn, family: &CubeFamily) -> Result<GridFn> {
    if f.grid != family.grid {
        return Err(LabError::domain("function and family on different grids"));
    }
    let abs = f.map(f64::abs)?;
    let ps = crate::grid::PrefixSums::of(&abs);
    let mut out = vec![0.0f64; f.grid.cells()];
    for q in family.enumerate() {
        let a = ps.avg(&q);
        for i in q.cell_indices(&f.grid) {
            if a > out[i] {
                out[i] = a;
            }
        }
    }
    GridFn::new(f.grid, out)
}
