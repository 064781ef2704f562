//! Oscillation norms: BMO (L¹ averages), the localized exp-L norm and its
//! supremum over a family, little bmo, and test-symbol generators.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{sup_over, Cube, CubeFamily, Extremum, FamilyKind, Grid, GridFn, PrefixSums};

pub const EXPL_TOL: f64 = 1e-12;
pub const EXPL_MAX_ITER: usize = 200;

/// Real symbol with lazily built prefix sums for cube means.
#[derive(Clone, Debug)]
pub struct BmoFn {
    base: GridFn,
    prefix: Arc<OnceLock<PrefixSums>>,
}

impl BmoFn {
    pub fn new(base: GridFn) -> Self {
        BmoFn {
            base,
            prefix: Arc::new(OnceLock::new()),
        }
    }

    pub fn grid(&self) -> Grid {
        self.base.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.base.values
    }

    pub fn as_gridfn(&self) -> &GridFn {
        &self.base
    }

    pub fn mean(&self, q: &Cube) -> f64 {
        self.prefix
            .get_or_init(|| PrefixSums::of(&self.base))
            .avg(q)
    }

    pub fn scaled(&self, t: f64) -> BmoFn {
        BmoFn::new(GridFn {
            grid: self.base.grid,
            values: self.base.values.iter().map(|v| t * v).collect(),
        })
    }

    pub fn shifted(&self, c: f64) -> BmoFn {
        BmoFn::new(GridFn {
            grid: self.base.grid,
            values: self.base.values.iter().map(|v| v + c).collect(),
        })
    }

    /// `|b − b_Q|` on the cells of `q`.
    pub fn oscillation(&self, q: &Cube) -> Vec<f64> {
        let m = self.mean(q);
        q.cell_indices(&self.base.grid)
            .map(|i| (self.base.values[i] - m).abs())
            .collect()
    }
}

impl From<GridFn> for BmoFn {
    fn from(f: GridFn) -> Self {
        BmoFn::new(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpLNormResult {
    pub lambda_star: f64,
    pub iterations: usize,
    /// Relative size of the last step (or bracket) in `1/λ`.
    pub residual: f64,
}

/// Solves `avg e^{a_i/λ} = 2` for `a_i ≥ 0`.
///
/// Works in `μ = 1/λ` on `h(μ) = log avg e^{μ a} − log 2`, which is convex and
/// increasing. Newton steps from the right end of the bracket stay to the
/// right of the root; bisection takes over if a step leaves the bracket.
pub fn expl_solve(a: &[f64], tol: f64) -> Result<ExpLNormResult> {
    if !(tol > 0.0) {
        return Err(LabError::domain("tolerance must be positive"));
    }
    let n = a.len();
    let amax = a.iter().fold(0.0f64, |m, &x| m.max(x));
    if n == 0 || amax == 0.0 {
        return Ok(ExpLNormResult {
            lambda_star: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mean = a.iter().sum::<f64>() / n as f64;
    let ln2 = std::f64::consts::LN_2;
    let mut lo = ln2 / amax;
    // Jensen: avg e^{μa} ≥ e^{μ·mean a}
    let mut hi = ((2.0 * n as f64).ln() / amax).min(ln2 / mean);
    if hi <= lo * (1.0 + tol) {
        return Ok(ExpLNormResult {
            lambda_star: 1.0 / lo,
            iterations: 0,
            residual: (hi - lo) / hi,
        });
    }
    let eval = |mu: f64| {
        let (mut s0, mut s1) = (0.0, 0.0);
        for &x in a {
            let t = (mu * (x - amax)).exp();
            s0 += t;
            s1 += x * t;
        }
        (mu * amax + (s0 / n as f64).ln() - ln2, s1 / s0)
    };
    let mut mu = hi;
    for it in 1..=EXPL_MAX_ITER {
        let (h, dh) = eval(mu);
        if h == 0.0 {
            return Ok(ExpLNormResult {
                lambda_star: 1.0 / mu,
                iterations: it,
                residual: 0.0,
            });
        }
        if h > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let mut next = mu - h / dh;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - mu).abs() / next;
        if step <= tol || (hi - lo) <= tol * hi {
            return Ok(ExpLNormResult {
                lambda_star: 1.0 / next,
                iterations: it,
                residual: step.min((hi - lo) / hi),
            });
        }
        mu = next;
    }
    Err(LabError::numerical(
        "exp-L solve did not converge",
        (hi - lo) / hi,
    ))
}

/// `‖f‖_{exp L, Q}` of `f` itself (no centering).
pub fn expl_norm(f: &BmoFn, q: &Cube, tol: f64) -> Result<ExpLNormResult> {
    q.check(&f.grid())?;
    let a: Vec<f64> = q.cell_indices(&f.grid()).map(|i| f.values()[i].abs()).collect();
    expl_solve(&a, tol)
}

/// `sup_Q avg_Q |f − f_Q|`.
pub fn bmo_norm(f: &BmoFn, family: &CubeFamily) -> Result<Extremum> {
    if f.grid() != family.grid {
        return Err(LabError::domain("function and family on different grids"));
    }
    let cubes = family.members();
    Ok(sup_over(&cubes, |q| {
        let a = f.oscillation(q);
        a.iter().sum::<f64>() / a.len() as f64
    }))
}

/// `sup_Q ‖f − f_Q‖_{exp L, Q}`.
pub fn script_bmo_norm(b: &BmoFn, family: &CubeFamily) -> Result<Extremum> {
    if b.grid() != family.grid {
        return Err(LabError::domain("function and family on different grids"));
    }
    let cubes = family.members();
    let failed = std::sync::atomic::AtomicBool::new(false);
    let e = sup_over(&cubes, |q| match expl_solve(&b.oscillation(q), EXPL_TOL) {
        Ok(r) => r.lambda_star,
        Err(_) => {
            failed.store(true, std::sync::atomic::Ordering::Relaxed);
            f64::NAN
        }
    });
    if failed.into_inner() {
        return Err(LabError::numerical("exp-L solve failed on some cube", f64::NAN));
    }
    Ok(e)
}

/// BMO over dyadic rectangles.
pub fn little_bmo_norm(f: &BmoFn) -> Result<Extremum> {
    if f.grid().dim != 2 {
        return Err(LabError::domain("little bmo needs a 2D grid"));
    }
    bmo_norm(f, &CubeFamily::new(FamilyKind::DyadicRectangles, f.grid())?)
}

fn default_eps() -> f64 {
    1.0
}

/// Generators for test symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BmoKind {
    /// `log |x − c|` clipped at half a cell, `c` the grid center.
    LogSingularity,
    /// `Σ ε r_I h_I` over dyadic cubes of the first `depth` levels.
    DyadicMartingale {
        seed: u64,
        depth: usize,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    /// 0 on the left half, `a` on the right half (first axis).
    TwoValue { a: f64 },
}

pub fn generate_bmo(kind: &BmoKind, grid: Grid) -> Result<BmoFn> {
    let n = grid.n_points;
    let h = grid.spacing();
    let f = match kind {
        BmoKind::LogSingularity => GridFn::from_fn(grid, |x, y| {
            let r = if grid.dim == 1 {
                (x - 0.5).abs()
            } else {
                ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt()
            };
            r.max(0.5 * h).ln()
        })?,
        BmoKind::TwoValue { a } => GridFn::from_fn(grid, |x, _| if x < 0.5 { 0.0 } else { *a })?,
        BmoKind::DyadicMartingale { seed, depth, eps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let levels = (*depth).min(n.trailing_zeros() as usize);
            let ny = grid.shape()[1];
            let mut v = vec![0.0; grid.cells()];
            for l in 0..levels {
                let side = n >> l;
                let half = side / 2;
                let count = 1usize << l;
                if grid.dim == 1 {
                    for k in 0..count {
                        let c = if rng.random::<bool>() { *eps } else { -*eps };
                        for i in k * side..(k + 1) * side {
                            v[i] += if i < k * side + half { c } else { -c };
                        }
                    }
                } else {
                    for kx in 0..count {
                        for ky in 0..count {
                            let c = if rng.random::<bool>() { *eps } else { -*eps };
                            let kind = rng.random_range(0..3u8);
                            for i in kx * side..(kx + 1) * side {
                                for j in ky * side..(ky + 1) * side {
                                    let sx = if i < kx * side + half { 1.0 } else { -1.0 };
                                    let sy = if j < ky * side + half { 1.0 } else { -1.0 };
                                    let hv = match kind {
                                        0 => sx,
                                        1 => sy,
                                        _ => sx * sy,
                                    };
                                    v[i * ny + j] += c * hv;
                                }
                            }
                        }
                    }
                }
            }
            GridFn::new(grid, v)?
        }
    };
    Ok(BmoFn::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_constant_modulus() {
        let r = expl_solve(&[3.0; 5], 1e-12).unwrap();
        assert!((r.lambda_star - 3.0 / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn solve_with_zeros_matches_bisection() {
        let a = [0.0, 0.1, 2.0, 5.0, 0.3, 0.0, 7.5];
        let r = expl_solve(&a, 1e-13).unwrap();
        // plain bisection oracle on λ
        let g = |lam: f64| a.iter().map(|x| (x / lam).exp()).sum::<f64>() / a.len() as f64 - 2.0;
        let (mut lo, mut hi) = (1e-3, 7.5 / std::f64::consts::LN_2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((r.lambda_star - hi).abs() < 1e-10 * hi, "{} vs {}", r.lambda_star, hi);
        assert!(r.residual <= 1e-13);
    }

    #[test]
    fn solve_survives_huge_ratio() {
        let mut a = vec![0.0; 1000];
        a[0] = 1e4;
        let r = expl_solve(&a, 1e-12).unwrap();
        // avg = 2 ⇔ (999 + e^{1e4/λ})/1000 = 2 ⇔ λ = 1e4 / ln 1001
        assert!((r.lambda_star - 1e4 / 1001f64.ln()).abs() < 1e-8 * r.lambda_star);
    }

    #[test]
    fn martingale_depth_zero_is_constant() {
        let g = Grid::d1(16).unwrap();
        let b = generate_bmo(&BmoKind::DyadicMartingale { seed: 3, depth: 0, eps: 1.0 }, g).unwrap();
        assert!(b.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn martingale_is_seeded() {
        let g = Grid::d2(16).unwrap();
        let k = BmoKind::DyadicMartingale { seed: 9, depth: 3, eps: 0.5 };
        assert_eq!(generate_bmo(&k, g).unwrap().values(), generate_bmo(&k, g).unwrap().values());
    }

    #[test]
    fn little_bmo_needs_2d() {
        let b = BmoFn::new(GridFn::constant(Grid::d1(4).unwrap(), 1.0));
        assert!(little_bmo_norm(&b).is_err());
    }
}
