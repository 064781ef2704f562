use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bilinear::BilinearForm;
use super::linear::{LinearKernelOp, LinearMap};
use crate::error::{LabError, Result};
use crate::numeric::{conj, lp_norm};
use crate::weights::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Largest singular value of the similarity-transformed matrix.
    ExactSpectralP2,
    /// Boyd's nonlinear power method from several starts; a lower bound.
    PowerIteration,
    /// Best ratio over probe functions with alternating ascent; a lower bound.
    RandomProbeLowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
    pub lower_bound: bool,
}

/// Relative residual target of the spectral path.
pub const SPECTRAL_TOL: f64 = 1e-10;
const LANCZOS_DIM: usize = 160;
const LANCZOS_RESTARTS: usize = 12;
/// Above this size the dense fallback is refused.
const DENSE_FALLBACK_MAX: usize = 1024;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `diag(left) · inner · diag(right)`.
struct Scaled<'a> {
    inner: &'a dyn LinearMap,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl LinearMap for Scaled<'_> {
    fn size(&self) -> usize {
        self.inner.size()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.right).map(|(a, b)| a * b).collect();
        let z = self.inner.apply(&y);
        z.iter().zip(&self.left).map(|(a, b)| a * b).collect()
    }
    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = y.iter().zip(&self.left).map(|(a, b)| a * b).collect();
        let z = self.inner.apply_t(&x);
        z.iter().zip(&self.right).map(|(a, b)| a * b).collect()
    }
}

fn gram(a: &dyn LinearMap, x: &[f64]) -> Vec<f64> {
    a.apply_t(&a.apply(x))
}

/// Outcome of [`top_singular_value`]. When `converged` is false, `sigma` is
/// the best Ritz value seen, which is still a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectral {
    pub sigma: f64,
    pub matvecs: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Largest singular value by Lanczos on `AᵀA` with full reorthogonalization
/// and explicit restarts; dense SVD for sizes up to 1024 if that stalls.
pub fn top_singular_value(a: &dyn LinearMap, tol: f64) -> Spectral {
    let n = a.size();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_6e_67);
    let mut v0 = normal_vec(&mut rng, n);
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);
    let mut matvecs = 0;
    let mut best = (0.0f64, f64::INFINITY);
    let m_max = n.min(LANCZOS_DIM);
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut scale = 0.0f64;
        for j in 0..m_max {
            let mut w = gram(a, &basis[j]);
            matvecs += 1;
            let aj = dot(&w, &basis[j]);
            alpha.push(aj);
            scale = scale.max(aj.abs());
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let bj = norm2(&w);
            if j + 1 == m_max || bj <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            beta.push(bj);
            w.iter_mut().for_each(|x| *x /= bj);
            basis.push(w);
        }
        let m = alpha.len();
        if scale == 0.0 {
            return Spectral { sigma: 0.0, matvecs, residual: 0.0, converged: true };
        }
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        let s = eig.eigenvectors.column(k);
        let mut y = vec![0.0; n];
        for (c, v) in s.iter().zip(&basis) {
            y.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        }
        let ny = norm2(&y);
        y.iter_mut().for_each(|x| *x /= ny);
        let sy = gram(a, &y);
        matvecs += 1;
        let rq = dot(&sy, &y);
        let r: Vec<f64> = sy.iter().zip(&y).map(|(a, b)| a - rq * b).collect();
        let res = if rq > 0.0 { norm2(&r) / rq } else { 0.0 };
        if rq.max(0.0).sqrt() >= best.0 {
            best = (rq.max(0.0).sqrt(), res);
        }
        if res <= tol || theta <= 0.0 {
            return Spectral { sigma: rq.max(0.0).sqrt(), matvecs, residual: res, converged: true };
        }
        v0 = y;
    }
    if n > DENSE_FALLBACK_MAX {
        return Spectral { sigma: best.0, matvecs, residual: best.1, converged: false };
    }
    // dense fallback
    let mut cols = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.extend(a.apply(&e));
    }
    matvecs += n;
    let m = DMatrix::from_column_slice(n, n, &cols);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    Spectral { sigma: smax, matvecs, residual: 0.0, converged: true }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoydOptions {
    pub starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for BoydOptions {
    fn default() -> Self {
        BoydOptions {
            starts: 32,
            max_iter: 200,
            tol: 1e-10,
            seed: 0xB0_1D,
        }
    }
}

/// `sign(x)|x|^{r−1} / ‖x‖_r^{r−1}`: the norming functional of `x` in ℓ^r.
/// For `r = ∞` (dual of ℓ¹ input) returns a signed unit vector at the peak.
fn dual_map(x: &[f64], r: f64) -> Vec<f64> {
    if r.is_infinite() {
        let k = (0..x.len())
            .max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(j.cmp(&i)))
            .unwrap();
        let mut e = vec![0.0; x.len()];
        e[k] = x[k].signum();
        return e;
    }
    if r == 1.0 {
        return x.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
    }
    let nr = lp_norm(x, r);
    if nr == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter()
        .map(|v| v.signum() * (v.abs() / nr).powf(r - 1.0))
        .collect()
}

fn normalize_p(x: &mut [f64], p: f64) {
    let n = lp_norm(x, p);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// One Boyd ascent from `x` for `‖A‖_{ℓ^p → ℓ^q}`. Returns `(value, x, iters, last rel. change)`.
fn boyd_single(
    a: &dyn LinearMap,
    mut x: Vec<f64>,
    p: f64,
    q: f64,
    max_iter: usize,
    tol: f64,
) -> (f64, Vec<f64>, usize, f64) {
    normalize_p(&mut x, p);
    let mut val = lp_norm(&a.apply(&x), q);
    let mut change = f64::INFINITY;
    let pp = conj(p);
    for it in 1..=max_iter {
        let y = a.apply(&x);
        if lp_norm(&y, q) == 0.0 {
            return (0.0, x, it, 0.0);
        }
        let z = a.apply_t(&dual_map(&y, q));
        let mut xn = dual_map(&z, pp);
        normalize_p(&mut xn, p);
        let vn = lp_norm(&a.apply(&xn), q);
        if vn <= val {
            return (val, x, it, 0.0);
        }
        change = (vn - val) / vn;
        val = vn;
        x = xn;
        if change <= tol {
            return (val, x, it, change);
        }
    }
    (val, x, max_iter, change)
}

/// Lower bound for `‖A‖_{ℓ^p → ℓ^q}` by Boyd's method from `starts` seeded starts
/// (the first start is the constant vector).
pub fn boyd_lower_bound(a: &dyn LinearMap, p: f64, q: f64, opts: &BoydOptions) -> (f64, usize, f64) {
    let n = a.size();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = (0.0f64, 0usize, 0.0f64);
    let mut iters = 0;
    for s in 0..opts.starts.max(1) {
        let x0 = if s == 0 { vec![1.0; n] } else { normal_vec(&mut rng, n) };
        let (v, _, it, ch) = boyd_single(a, x0, p, q, opts.max_iter, opts.tol);
        iters += it;
        if v > best.0 {
            best = (v, 0, ch);
        }
    }
    (best.0, iters, best.2)
}

/// `‖A‖` from `L^p(w^p)` to `L^q(w^q)` for any square map on the weight's grid.
pub fn weighted_operator_norm(
    a: &dyn LinearMap,
    w: &Weight,
    p: f64,
    q: f64,
) -> Result<WeightedNormEstimate> {
    weighted_operator_norm_with(a, w, p, q, &BoydOptions::default())
}

/// [`weighted_operator_norm`] with explicit settings for the `(p, q) ≠ (2, 2)` path.
pub fn weighted_operator_norm_with(
    a: &dyn LinearMap,
    w: &Weight,
    p: f64,
    q: f64,
    opts: &BoydOptions,
) -> Result<WeightedNormEstimate> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return Err(LabError::domain(format!("need 1 < p, q < inf (got {p}, {q})")));
    }
    if a.size() != w.grid().cells() {
        return Err(LabError::domain("operator and weight sizes differ"));
    }
    let scaled = Scaled {
        inner: a,
        left: w.values().to_vec(),
        right: w.values().iter().map(|v| 1.0 / v).collect(),
    };
    let factor = (w.grid().cells() as f64).powf(1.0 / p - 1.0 / q);
    if p == 2.0 && q == 2.0 {
        let sp = top_singular_value(&scaled, SPECTRAL_TOL);
        if !sp.converged {
            return Err(LabError::numerical("spectral norm not converged", sp.residual));
        }
        return Ok(WeightedNormEstimate {
            value: sp.sigma,
            method: NormMethod::ExactSpectralP2,
            iterations: sp.matvecs,
            residual: sp.residual,
            lower_bound: false,
        });
    }
    let (v, it, res) = boyd_lower_bound(&scaled, p, q, opts);
    Ok(WeightedNormEstimate {
        value: factor * v,
        method: NormMethod::PowerIteration,
        iterations: it,
        residual: res,
        lower_bound: true,
    })
}

/// `‖T‖_{L^p(w^p) → L^q(w^q)}`.
pub fn weighted_norm(t: &LinearKernelOp, w: &Weight, p: f64, q: f64) -> Result<WeightedNormEstimate> {
    if t.grid != w.grid() {
        return Err(LabError::domain("operator and weight on different grids"));
    }
    weighted_operator_norm(t, w, p, q)
}

/// Lower bound for `sup ‖T(F,G)‖_p / (‖F‖_{p1} ‖G‖_{p2})` in counting norms,
/// by alternating Boyd steps in each slot from the given starting pairs.
pub fn bilinear_norm_lower_bound(
    form: &dyn BilinearForm,
    p1: f64,
    p2: f64,
    p: f64,
    starts: &[(Vec<f64>, Vec<f64>)],
    rounds: usize,
) -> WeightedNormEstimate {
    let ratio = |f: &[f64], g: &[f64]| {
        let d = lp_norm(f, p1) * lp_norm(g, p2);
        if d == 0.0 {
            0.0
        } else {
            lp_norm(&form.apply(f, g), p) / d
        }
    };
    let mut best = 0.0f64;
    let mut iters = 0;
    let mut last_change = 0.0;
    for (f0, g0) in starts {
        let (mut f, mut g) = (f0.clone(), g0.clone());
        let mut val = ratio(&f, &g);
        best = best.max(val);
        for _ in 0..rounds {
            let a = form.slot1(&g);
            let (_, fx, it1, _) = boyd_single(&a, f.clone(), p1, p, 8, 1e-9);
            let b = form.slot2(&fx);
            let (_, gx, it2, _) = boyd_single(&b, g.clone(), p2, p, 8, 1e-9);
            iters += it1 + it2;
            let vn = ratio(&fx, &gx);
            f = fx;
            g = gx;
            best = best.max(vn);
            last_change = (vn - val).abs() / vn.max(f64::MIN_POSITIVE);
            if last_change <= 1e-8 {
                break;
            }
            val = vn;
        }
    }
    WeightedNormEstimate {
        value: best,
        method: NormMethod::RandomProbeLowerBound,
        iterations: iters,
        residual: last_change,
        lower_bound: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operators::DenseMatrix;

    #[test]
    fn zero_operator() {
        let m = DenseMatrix::zeros(8, 8);
        assert_eq!(top_singular_value(&m, 1e-10).sigma, 0.0);
    }

    #[test]
    fn boyd_on_diagonal() {
        // ℓ^2 → ℓ^2 of diag(3, 1, 2) is 3
        let m = DenseMatrix::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let (v, _, _) = boyd_lower_bound(&m, 2.0, 2.0, &BoydOptions::default());
        assert!((v - 3.0).abs() < 1e-8);
        // ℓ^1 → ℓ^1 norm is the max column sum
        let m = DenseMatrix::from_fn(2, 2, |i, j| [[1.0, -4.0], [2.0, 1.0]][i][j]);
        let (v, _, _) = boyd_lower_bound(&m, 1.5, 1.5, &BoydOptions::default());
        assert!(v > 3.0 && v <= 5.0);
    }

    #[test]
    fn weighted_identity_has_norm_one() {
        let g = Grid::d1(16).unwrap();
        let w = Weight::from_values(g, (0..16).map(|i| 1.0 + i as f64).collect()).unwrap();
        let id = DenseMatrix::identity(16);
        let e = weighted_operator_norm(&id, &w, 2.0, 2.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.method, NormMethod::ExactSpectralP2);
    }
}
