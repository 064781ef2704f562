//! Iterated and bilinear commutators, by direct kernel modification and by
//! trapezoidal quadrature of the Cauchy integral of `Ψ(z) = e^{−zb} T(e^{zb}·)`.
//!
//! Symbols are shifted to their midrange inside `Ψ`; this leaves `Ψ`
//! unchanged and keeps `e^{zb}` balanced around 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::GridFn;
use crate::numeric::{binomial, conj, factorial, l2_norm};
use crate::operators::{BilinearForm, BilinearKernelOp, DenseMatrix, LinearKernelOp, LinearMap};
use crate::oscillation::BmoFn;
use crate::weights::ExponentProfile;

/// Bound on `|Re z|·max|b − mid(b)|` inside `Ψ`.
pub const PSI_GUARD: f64 = 50.0;
/// Imaginary residue that triggers a numerical warning.
pub const RESIDUE_WARN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub delta: f64,
    pub m_nodes: usize,
}

impl ContourSpec {
    pub fn new(delta: f64, m_nodes: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(LabError::domain(format!("contour radius {delta} must be positive")));
        }
        if m_nodes < 8 || m_nodes % 2 != 0 {
            return Err(LabError::domain(format!("m_nodes = {m_nodes} must be even and >= 8")));
        }
        Ok(ContourSpec { delta, m_nodes })
    }

    pub fn with_default_nodes(delta: f64) -> Result<Self> {
        Self::new(delta, 64)
    }

    /// `e^{i 2π m / M}` for `m = 0..M`.
    pub fn roots(&self) -> Vec<Complex64> {
        let m = self.m_nodes as f64;
        (0..self.m_nodes)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m))
            .collect()
    }
}

fn check_grid(t: &crate::grid::Grid, f: &GridFn) -> Result<()> {
    if *t != f.grid {
        return Err(LabError::domain("operator and function on different grids"));
    }
    Ok(())
}

/// Kernel of `T_b^k`: `K[i][j] (b_j − b_i)^k`.
pub fn commutator_matrix(t: &LinearKernelOp, b: &BmoFn, k: usize) -> Result<DenseMatrix> {
    check_grid(&t.grid, b.as_gridfn())?;
    let c = t.grid.cells();
    let bv = b.values();
    Ok(match t.dense() {
        Some(m) => DenseMatrix::from_fn(c, c, |i, j| m.get(i, j) * (bv[j] - bv[i]).powi(k as i32)),
        None => DenseMatrix::from_fn(c, c, |i, j| t.entry(i, j) * (bv[j] - bv[i]).powi(k as i32)),
    })
}

/// `T_b^k` as a linear map. Dense kernels are modified entrywise once;
/// separable kernels use `Σ_m C(k,m) (−b)^{k−m} T(b^m ·)`.
pub struct CommutatorOp<'a> {
    op: &'a LinearKernelOp,
    b: Vec<f64>,
    k: usize,
    dense: Option<DenseMatrix>,
}

impl<'a> CommutatorOp<'a> {
    pub fn new(op: &'a LinearKernelOp, b: &BmoFn, k: usize) -> Result<Self> {
        check_grid(&op.grid, b.as_gridfn())?;
        let dense = if op.dense().is_some() {
            Some(commutator_matrix(op, b, k)?)
        } else {
            None
        };
        Ok(CommutatorOp {
            op,
            b: b.values().to_vec(),
            k,
            dense,
        })
    }

    fn binomial_apply(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        let k = self.k;
        let mut out = vec![0.0; x.len()];
        for m in 0..=k {
            let c = binomial(k, m);
            // kernel K_ij b_j^m (−b_i)^{k−m}
            let (inner_pow, outer_pow, inner_sign, outer_sign) = if transpose {
                (k - m, m, -1.0f64, 1.0f64)
            } else {
                (m, k - m, 1.0, -1.0)
            };
            let y: Vec<f64> = x
                .iter()
                .zip(&self.b)
                .map(|(v, bb)| v * (inner_sign * bb).powi(inner_pow as i32))
                .collect();
            let ty = if transpose {
                self.op.apply_t_slice(&y)
            } else {
                self.op.apply_slice(&y)
            };
            for ((o, t), bb) in out.iter_mut().zip(&ty).zip(&self.b) {
                *o += c * (outer_sign * bb).powi(outer_pow as i32) * t;
            }
        }
        out
    }
}

impl LinearMap for CommutatorOp<'_> {
    fn size(&self) -> usize {
        self.op.grid.cells()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.dense {
            Some(m) => m.matvec(x),
            None => self.binomial_apply(x, false),
        }
    }
    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        match &self.dense {
            Some(m) => m.matvec_t(y),
            None => self.binomial_apply(y, true),
        }
    }
}

/// `T_b^k f(x) = T((b(·) − b(x))^k f)(x)`; `k = 0` gives `Tf`.
pub fn commutator_direct(t: &LinearKernelOp, b: &BmoFn, k: usize, f: &GridFn) -> Result<GridFn> {
    check_grid(&t.grid, f)?;
    check_grid(&t.grid, b.as_gridfn())?;
    if k == 0 {
        return t.apply(f);
    }
    let bv = b.values();
    let out = match t.dense() {
        Some(m) => {
            let n = t.grid.cells();
            (0..n)
                .map(|i| {
                    let row = m.row(i);
                    (0..n)
                        .map(|j| row[j] * (bv[j] - bv[i]).powi(k as i32) * f.values[j])
                        .sum()
                })
                .collect()
        }
        None => CommutatorOp::new(t, b, k)?.binomial_apply(&f.values, false),
    };
    GridFn::new(t.grid, out)
}

/// `T_b^k = [T_b^{k−1}, b]` unrolled by composition.
pub fn commutator_recursive(t: &LinearKernelOp, b: &BmoFn, k: usize, f: &GridFn) -> Result<GridFn> {
    check_grid(&t.grid, f)?;
    if k == 0 {
        return t.apply(f);
    }
    let bf = GridFn::new(f.grid, f.values.iter().zip(b.values()).map(|(x, y)| x * y).collect())?;
    let a = commutator_recursive(t, b, k - 1, &bf)?;
    let c = commutator_recursive(t, b, k - 1, f)?;
    GridFn::new(
        f.grid,
        a.values
            .iter()
            .zip(&c.values)
            .zip(b.values())
            .map(|((x, y), bb)| x - bb * y)
            .collect(),
    )
}

/// `[T, b]_α` with kernel `Π_j (b_j(x) − b_j(y_j))^{α_j} K(x, y_1, y_2)`.
pub struct MultiCommutator<'a> {
    pub op: &'a BilinearKernelOp,
    b1: Vec<f64>,
    b2: Vec<f64>,
    alpha: [usize; 2],
}

impl<'a> MultiCommutator<'a> {
    pub fn new(op: &'a BilinearKernelOp, b: (&BmoFn, &BmoFn), alpha: [usize; 2]) -> Result<Self> {
        check_grid(&op.grid, b.0.as_gridfn())?;
        check_grid(&op.grid, b.1.as_gridfn())?;
        Ok(MultiCommutator {
            op,
            b1: b.0.values().to_vec(),
            b2: b.1.values().to_vec(),
            alpha,
        })
    }

    #[inline]
    fn factor(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.b1[i] - self.b1[j]).powi(self.alpha[0] as i32)
            * (self.b2[i] - self.b2[k]).powi(self.alpha[1] as i32)
    }
}

impl BilinearForm for MultiCommutator<'_> {
    fn n(&self) -> usize {
        self.op.n()
    }
    fn apply(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let mut acc = 0.0;
                self.op
                    .for_each_term(i, |j, k, c| acc += c * self.factor(i, j, k) * f[j] * g[k]);
                acc
            })
            .collect()
    }
    fn slot1(&self, g: &[f64]) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            self.op
                .for_each_term(i, |j, k, c| m.data[i * n + j] += c * self.factor(i, j, k) * g[k]);
        }
        m
    }
    fn slot2(&self, f: &[f64]) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            self.op
                .for_each_term(i, |j, k, c| m.data[i * n + k] += c * self.factor(i, j, k) * f[j]);
        }
        m
    }
}

pub fn commutator_multilinear_direct(
    t: &BilinearKernelOp,
    b: (&BmoFn, &BmoFn),
    alpha: [usize; 2],
    f: &GridFn,
    g: &GridFn,
) -> Result<GridFn> {
    check_grid(&t.grid, f)?;
    check_grid(&t.grid, g)?;
    let mc = MultiCommutator::new(t, b, alpha)?;
    GridFn::new(t.grid, mc.apply(&f.values, &g.values))
}

/// Symbol shifted to its midrange, and its resulting sup norm.
fn centered(b: &[f64]) -> (Vec<f64>, f64) {
    let (lo, hi) = b
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mid = 0.5 * (lo + hi);
    (b.iter().map(|v| v - mid).collect(), 0.5 * (hi - lo))
}

fn guard(z: &[Complex64], radii: &[f64]) -> Result<()> {
    let load: f64 = z.iter().zip(radii).map(|(z, r)| z.re.abs() * r).sum();
    if !(load <= PSI_GUARD) {
        return Err(LabError::Range(format!(
            "|Re z|*max|b| = {load:.3e} exceeds the guard {PSI_GUARD}"
        )));
    }
    Ok(())
}

fn to_complex(f: &GridFn) -> Vec<Complex64> {
    f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `Ψ(z) f = e^{−zb} T(e^{zb} f)`.
pub fn psi_conjugate(t: &LinearKernelOp, b: &BmoFn, z: Complex64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.len() != t.grid.cells() || b.grid() != t.grid {
        return Err(LabError::domain("operator, symbol and input sizes differ"));
    }
    let (bc, r) = centered(b.values());
    guard(&[z], &[r])?;
    Ok(psi_centered(t, &bc, z, f))
}

fn psi_centered(t: &LinearKernelOp, bc: &[f64], z: Complex64, f: &[Complex64]) -> Vec<Complex64> {
    let e: Vec<Complex64> = bc.iter().map(|&v| (z * v).exp()).collect();
    let x: Vec<Complex64> = f.iter().zip(&e).map(|(a, b)| a * b).collect();
    let y = t.apply_complex(&x);
    y.iter().zip(&e).map(|(a, b)| a / b).collect()
}

/// `Ψ(z)(f, g) = e^{−z₁b₁−z₂b₂} T(e^{z₁b₁} f, e^{z₂b₂} g)`.
pub fn psi_conjugate_multi(
    t: &BilinearKernelOp,
    b: (&BmoFn, &BmoFn),
    z: [Complex64; 2],
    f: &[Complex64],
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = t.n();
    if f.len() != n || g.len() != n || b.0.grid() != t.grid || b.1.grid() != t.grid {
        return Err(LabError::domain("operator, symbols and inputs sizes differ"));
    }
    let (b1, r1) = centered(b.0.values());
    let (b2, r2) = centered(b.1.values());
    guard(&z, &[r1, r2])?;
    Ok(psi_multi_centered(t, (&b1, &b2), z, f, g))
}

fn psi_multi_centered(
    t: &BilinearKernelOp,
    b: (&[f64], &[f64]),
    z: [Complex64; 2],
    f: &[Complex64],
    g: &[Complex64],
) -> Vec<Complex64> {
    let e1: Vec<Complex64> = b.0.iter().map(|&v| (z[0] * v).exp()).collect();
    let e2: Vec<Complex64> = b.1.iter().map(|&v| (z[1] * v).exp()).collect();
    let x: Vec<Complex64> = f.iter().zip(&e1).map(|(a, e)| a * e).collect();
    let y: Vec<Complex64> = g.iter().zip(&e2).map(|(a, e)| a * e).collect();
    let out = t.apply_complex(&x, &y);
    out.iter()
        .zip(e1.iter().zip(&e2))
        .map(|(o, (a, c))| o / (a * c))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourResult {
    pub values: GridFn,
    /// `‖Im‖₂ / ‖Re‖₂` of the raw quadrature sum.
    pub imag_residue: f64,
    pub warning: bool,
    pub delta: Vec<f64>,
    pub m_nodes: Vec<usize>,
}

fn finish(grid: crate::grid::Grid, acc: Vec<Complex64>, delta: Vec<f64>, m_nodes: Vec<usize>) -> Result<ContourResult> {
    let re: Vec<f64> = acc.iter().map(|z| z.re).collect();
    let im: Vec<f64> = acc.iter().map(|z| z.im).collect();
    let (nr, ni) = (l2_norm(&re), l2_norm(&im));
    let imag_residue = if nr > 0.0 { ni / nr } else if ni > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(ContourResult {
        values: GridFn::new(grid, re)?,
        imag_residue,
        warning: imag_residue > RESIDUE_WARN,
        delta,
        m_nodes,
    })
}

/// Fixed-order sum of per-node vectors.
fn ordered_sum(parts: Vec<Vec<Complex64>>, n: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

/// `(k!/(M δ^k)) Σ_m e^{−ik2πm/M} Ψ(δ e^{i2πm/M}) f`, real part kept.
pub fn commutator_contour(
    t: &LinearKernelOp,
    b: &BmoFn,
    k: usize,
    f: &GridFn,
    spec: &ContourSpec,
) -> Result<ContourResult> {
    check_grid(&t.grid, f)?;
    check_grid(&t.grid, b.as_gridfn())?;
    let (bc, r) = centered(b.values());
    guard(&[Complex64::new(spec.delta, 0.0)], &[r])?;
    let roots = spec.roots();
    let m = spec.m_nodes;
    let fc = to_complex(f);
    let parts: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let w = roots[(m - (k * j) % m) % m];
            psi_centered(t, &bc, roots[j] * spec.delta, &fc)
                .into_iter()
                .map(|v| v * w)
                .collect()
        })
        .collect();
    let scale = factorial(k) / (m as f64 * spec.delta.powi(k as i32));
    let acc = ordered_sum(parts, fc.len()).into_iter().map(|v| v * scale).collect();
    finish(t.grid, acc, vec![spec.delta], vec![m])
}

/// Polydisc version for `[T, b]_α`. The raw Cauchy coefficient equals
/// `(−1)^{|α|} [T, b]_α`; the sign is undone here.
pub fn commutator_contour_multi(
    t: &BilinearKernelOp,
    b: (&BmoFn, &BmoFn),
    alpha: [usize; 2],
    f: &GridFn,
    g: &GridFn,
    spec: [ContourSpec; 2],
) -> Result<ContourResult> {
    check_grid(&t.grid, f)?;
    check_grid(&t.grid, g)?;
    let (b1, r1) = centered(b.0.values());
    let (b2, r2) = centered(b.1.values());
    guard(
        &[Complex64::new(spec[0].delta, 0.0), Complex64::new(spec[1].delta, 0.0)],
        &[r1, r2],
    )?;
    let (ro1, ro2) = (spec[0].roots(), spec[1].roots());
    let (m1, m2) = (spec[0].m_nodes, spec[1].m_nodes);
    let (fc, gc) = (to_complex(f), to_complex(g));
    let parts: Vec<Vec<Complex64>> = (0..m1 * m2)
        .into_par_iter()
        .map(|idx| {
            let (j1, j2) = (idx / m2, idx % m2);
            let w = ro1[(m1 - (alpha[0] * j1) % m1) % m1] * ro2[(m2 - (alpha[1] * j2) % m2) % m2];
            let z = [ro1[j1] * spec[0].delta, ro2[j2] * spec[1].delta];
            psi_multi_centered(t, (&b1, &b2), z, &fc, &gc)
                .into_iter()
                .map(|v| v * w)
                .collect()
        })
        .collect();
    let sign = if (alpha[0] + alpha[1]) % 2 == 0 { 1.0 } else { -1.0 };
    let scale = sign * factorial(alpha[0]) * factorial(alpha[1])
        / ((m1 * m2) as f64
            * spec[0].delta.powi(alpha[0] as i32)
            * spec[1].delta.powi(alpha[1] as i32));
    let acc = ordered_sum(parts, fc.len()).into_iter().map(|v| v * scale).collect();
    finish(
        t.grid,
        acc,
        vec![spec[0].delta, spec[1].delta],
        vec![m1, m2],
    )
}

/// `δ = min{1, s−1} / (θ η′)`, divided by `‖b‖`.
pub fn default_delta(profile: &ExponentProfile, b_norm: f64) -> Result<f64> {
    if !(b_norm > 0.0 && b_norm.is_finite()) {
        return Err(LabError::domain("symbol norm must be positive"));
    }
    profile.validate()?;
    Ok((profile.s - 1.0).min(1.0) / (profile.theta * profile.eta_prime()) / b_norm)
}

/// Per-slot radii driven by `[w]_{A_P}`:
/// `δ_j = min{1, p_j − 1} / (p_j r′) / ‖b_j‖` where `r` is the smallest
/// reverse-Hölder exponent among `ν_w ∈ A_{2p}` and `σ_j ∈ A_{2p_j′}`, using
/// `[ν_w]_{A_{2p}} ≤ [w]^p` and `[σ_j]_{A_{2p_j′}} ≤ [w]^{p_j′}`.
pub fn default_delta_vector(profile: &ExponentProfile, b_norms: &[f64], w_constant: f64) -> Result<Vec<f64>> {
    if b_norms.len() != profile.m() {
        return Err(LabError::domain("one symbol norm per slot required"));
    }
    if !(w_constant >= 1.0 && w_constant.is_finite()) {
        return Err(LabError::domain("vector weight constant must be finite and >= 1"));
    }
    let n = profile.dim as f64;
    let rho_inv = |s: f64, c: f64| 2f64.powf(2.0 * s + n + 1.0) * c;
    let p = profile.p;
    let mut worst = rho_inv(2.0 * p, w_constant.powf(p));
    for &pj in &profile.p_list {
        let pjp = conj(pj);
        worst = worst.max(rho_inv(2.0 * pjp, w_constant.powf(pjp)));
    }
    // ρ = 1 + 1/worst, so ρ' = 1 + worst
    let rho_prime = 1.0 + worst;
    profile
        .p_list
        .iter()
        .zip(b_norms)
        .map(|(&pj, &bn)| {
            if !(bn > 0.0) {
                return Err(LabError::domain("symbol norm must be positive"));
            }
            Ok((pj - 1.0).min(1.0) / (pj * rho_prime) / bn)
        })
        .collect()
}

/// `Σ_{k ≤ K} T_b^k f · z^k / k!`.
pub fn taylor_reconstruct(
    t: &LinearKernelOp,
    b: &BmoFn,
    f: &GridFn,
    z: Complex64,
    k_max: usize,
) -> Result<Vec<Complex64>> {
    let mut acc = vec![Complex64::new(0.0, 0.0); f.values.len()];
    let mut zk = Complex64::new(1.0, 0.0);
    for k in 0..=k_max {
        let c = commutator_direct(t, b, k, f)?;
        let w = zk / factorial(k);
        for (a, v) in acc.iter_mut().zip(&c.values) {
            *a += w * v;
        }
        zk *= z;
    }
    Ok(acc)
}
