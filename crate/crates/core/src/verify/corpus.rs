//! Seeded test corpora. Instance `i` depends only on `(seed, i)`, so a
//! smaller corpus is a prefix of a larger one.

use crate::grid::{CubeFamily, Grid, GridFn};
use crate::oscillation::{generate_bmo, script_bmo_norm, BmoFn, BmoKind};
use crate::weights::{exp_of, Weight};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn instance_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(i as u64);
    rng
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// `1` on the left half, `a` on the right half.
pub fn two_value_weight(grid: Grid, a: f64) -> Result<Weight> {
    Weight::new(GridFn::from_fn(grid, |x, _| if x < 0.5 { 1.0 } else { a })?)
}

/// `|x − ½|^a`, clipped at half a cell.
pub fn power_weight(grid: Grid, a: f64) -> Result<Weight> {
    let h = grid.spacing();
    Weight::new(GridFn::from_fn(grid, |x, _| (x - 0.5).abs().max(0.5 * h).powf(a))?)
}

/// The `a ≥ 1` with `(1 + a)² / (4a) = c`, so that the two-value weight has
/// `[u]_{A_2} = c` over all intervals.
pub fn weight_for_a2(c: f64) -> f64 {
    2.0 * c - 1.0 + 2.0 * (c * c - c).max(0.0).sqrt()
}

#[derive(Clone, Debug)]
pub struct WeightCorpus {
    pub grid: Grid,
    pub seed: u64,
    /// Cap on martingale depth; 5 keeps instances comparable across N.
    pub max_depth: usize,
    /// Exponent range for power weights.
    pub power_range: f64,
    /// `log a` range for two-value weights.
    pub jump_range: f64,
}

impl WeightCorpus {
    pub fn new(grid: Grid, seed: u64) -> Self {
        WeightCorpus { grid, seed, max_depth: 12, power_range: 0.9, jump_range: 4.0 }
    }

    /// Parameters chosen so the continuum limit exists.
    pub fn continuum(grid: Grid, seed: u64) -> Self {
        WeightCorpus { grid, seed, max_depth: 5, power_range: 0.45, jump_range: 3.0 }
    }

    /// Instance `i` with a short description. Cycles through `exp` of a
    /// dyadic martingale, a two-value jump and a power singularity.
    pub fn get(&self, i: usize) -> Result<(Weight, String)> {
        let mut rng = instance_rng(self.seed, 1, i);
        match i % 3 {
            0 => {
                let top = log2(self.grid.n_points).min(self.max_depth).max(1);
                let depth = rng.random_range(1..=top);
                let eps = rng.random_range(0.05..0.6);
                let seed: u64 = rng.random();
                let b = generate_bmo(&BmoKind::DyadicMartingale { seed, depth, eps }, self.grid)?;
                Ok((exp_of(b.as_gridfn(), 1.0)?, format!("w{i}:exp-martingale(d={depth},eps={eps:.3})")))
            }
            1 => {
                let a = rng.random_range(-self.jump_range..self.jump_range).exp();
                Ok((two_value_weight(self.grid, a)?, format!("w{i}:two-value(a={a:.4})")))
            }
            _ => {
                let a = rng.random_range(-self.power_range..self.power_range);
                Ok((power_weight(self.grid, a)?, format!("w{i}:power(a={a:.3})")))
            }
        }
    }

    pub fn take(&self, count: usize) -> Result<Vec<(Weight, String)>> {
        (0..count).map(|i| self.get(i)).collect()
    }
}

/// A symbol with its exponential-Orlicz norm over a fixed family.
#[derive(Clone, Debug)]
pub struct Symbol {
    pub b: BmoFn,
    pub desc: String,
    pub norm: f64,
}

impl Symbol {
    pub fn new(b: BmoFn, desc: String, family: &CubeFamily) -> Result<Self> {
        let norm = script_bmo_norm(&b, family)?.value;
        Ok(Symbol { b, desc, norm })
    }
}

#[derive(Clone, Debug)]
pub struct SymbolCorpus {
    pub grid: Grid,
    pub seed: u64,
    pub max_depth: usize,
}

impl SymbolCorpus {
    pub fn new(grid: Grid, seed: u64) -> Self {
        SymbolCorpus { grid, seed, max_depth: 12 }
    }

    pub fn continuum(grid: Grid, seed: u64) -> Self {
        SymbolCorpus { grid, seed, max_depth: 5 }
    }

    /// Raw instance `i`. 1D cycles martingale / scaled log / two-value;
    /// 2D adds a separable `g(x) + h(y)` kind.
    pub fn get(&self, i: usize) -> Result<(BmoFn, String)> {
        let mut rng = instance_rng(self.seed, 2, i);
        let top = log2(self.grid.n_points).min(self.max_depth).max(1);
        let kinds = if self.grid.dim == 1 { 3 } else { 4 };
        match i % kinds {
            0 => {
                let depth = rng.random_range(1..=top);
                let eps = if self.grid.dim == 1 { rng.random_range(0.2..1.0) } else { rng.random_range(0.1..0.6) };
                let seed: u64 = rng.random();
                let b = generate_bmo(&BmoKind::DyadicMartingale { seed, depth, eps }, self.grid)?;
                Ok((b, format!("b{i}:martingale(d={depth},eps={eps:.3})")))
            }
            1 => {
                let c = rng.random_range(0.25..2.0);
                let b = generate_bmo(&BmoKind::LogSingularity, self.grid)?.scaled(c);
                Ok((b, format!("b{i}:log(c={c:.3})")))
            }
            2 if self.grid.dim == 2 => {
                let line = Grid::d1(self.grid.n_points)?;
                let (d1, d2) = (rng.random_range(1..=top), rng.random_range(1..=top));
                let (s1, s2): (u64, u64) = (rng.random(), rng.random());
                let g = generate_bmo(&BmoKind::DyadicMartingale { seed: s1, depth: d1, eps: 0.5 }, line)?;
                let h = generate_bmo(&BmoKind::DyadicMartingale { seed: s2, depth: d2, eps: 0.5 }, line)?;
                let n = self.grid.n_points;
                let (gv, hv) = (g.values(), h.values());
                let v = (0..n * n).map(|k| gv[k / n] + hv[k % n]).collect();
                Ok((BmoFn::new(GridFn::new(self.grid, v)?), format!("b{i}:separable(d={d1},{d2})")))
            }
            _ => {
                let mut a = rng.random_range(-3.0..3.0);
                if f64::abs(a) < 0.1 {
                    a = 0.1f64.copysign(a);
                }
                let b = generate_bmo(&BmoKind::TwoValue { a }, self.grid)?;
                Ok((b, format!("b{i}:two-value(a={a:.3})")))
            }
        }
    }

    /// Instances with their norms over `family`.
    pub fn take(&self, count: usize, family: &CubeFamily) -> Result<Vec<Symbol>> {
        (0..count)
            .map(|i| {
                let (b, d) = self.get(i)?;
                Symbol::new(b, d, family)
            })
            .collect()
    }
}

/// Fixed test functions followed by seeded Gaussian vectors.
pub fn probes(grid: Grid, count: usize, seed: u64) -> Result<Vec<GridFn>> {
    let n = grid.cells();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let f = match i {
            0 => GridFn::constant(grid, 1.0),
            1 => {
                let mut v = vec![0.0; n];
                v[grid.index(grid.n_points / 2, if grid.dim == 2 { grid.n_points / 2 } else { 0 })] = 1.0;
                GridFn::new(grid, v)?
            }
            2 => GridFn::from_fn(grid, |x, _| if x < 0.5 { 1.0 } else { 0.0 })?,
            3 => GridFn::from_fn(grid, |x, y| if (x < 0.5) == (y < 0.5) { 1.0 } else { -1.0 })?,
            4 => GridFn::from_fn(grid, |x, _| (2.0 * std::f64::consts::PI * x).sin())?,
            _ => {
                let mut rng = instance_rng(seed, 3, i);
                GridFn::new(grid, (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())?
            }
        };
        out.push(f);
    }
    Ok(out)
}

/// Grid-independent probes: indicators, Haar functions, smooth bumps and
/// 16-piece random steps, all sampled at cell left endpoints.
pub fn continuum_probes(grid: Grid, count: usize, seed: u64) -> Result<Vec<GridFn>> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let f = match i {
            0 => GridFn::constant(grid, 1.0),
            1 => GridFn::from_fn(grid, |x, _| if (0.25..0.75).contains(&x) { 1.0 } else { 0.0 })?,
            2 => GridFn::from_fn(grid, |x, _| if x < 0.5 { 1.0 } else { -1.0 })?,
            3 => GridFn::from_fn(grid, |x, _| if (x * 4.0) as usize % 2 == 0 { 1.0 } else { -1.0 })?,
            4 => GridFn::from_fn(grid, |x, _| (PI * x).sin().powi(2))?,
            5 => GridFn::from_fn(grid, |x, _| (2.0 * PI * x).cos())?,
            _ => {
                let mut rng = instance_rng(seed, 4, i);
                let steps: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut rng)).collect();
                GridFn::from_fn(grid, |x, _| steps[((x * 16.0) as usize).min(15)])?
            }
        };
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FamilyKind;
    use crate::weights::ap_constant;

    #[test]
    fn corpora_are_prefix_stable() {
        let g = Grid::d1(64).unwrap();
        let c = WeightCorpus::new(g, 7);
        let a = c.take(5).unwrap();
        let b = c.take(9).unwrap();
        for i in 0..5 {
            assert_eq!(a[i].0.values(), b[i].0.values());
        }
        let s = SymbolCorpus::new(g, 7);
        assert_eq!(s.get(4).unwrap().0.values(), s.get(4).unwrap().0.values());
    }

    #[test]
    fn two_value_constant_is_hit() {
        let g = Grid::d1(64).unwrap();
        let fam = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
        for c in [1.0, 2.0, 10.0, 100.0] {
            let w = two_value_weight(g, weight_for_a2(c)).unwrap();
            let got = ap_constant(&w, 2.0, &fam).unwrap().value;
            assert!((got - c).abs() < 1e-9 * c, "{got} vs {c}");
        }
    }

    #[test]
    fn probes_have_requested_count() {
        let g = Grid::d2(16).unwrap();
        assert_eq!(probes(g, 12, 1).unwrap().len(), 12);
        assert_eq!(continuum_probes(Grid::d1(32).unwrap(), 20, 1).unwrap().len(), 20);
    }
}
