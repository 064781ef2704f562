//! Weights, exponent profiles and every weight-class constant.
//!
//! All constants are suprema over a declared [`CubeFamily`] and therefore
//! lower-bound the continuum constants. A_1 is deliberately absent.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{sup_over, Cube, CubeFamily, Extremum, Grid, GridFn, PrefixSums, RangeMax};
use crate::numeric::conj;

/// Largest |λ|·max|b| accepted by [`exp_of`].
pub const EXP_GUARD: f64 = 700.0;

/// Strictly positive grid function with cached prefix tables of its powers.
#[derive(Clone, Debug)]
pub struct Weight {
    base: GridFn,
    powers: Arc<Mutex<HashMap<u64, Arc<PrefixSums>>>>,
    range_max: Arc<OnceLock<RangeMax>>,
}

impl Weight {
    pub fn new(base: GridFn) -> Result<Self> {
        if let Some(i) = base.values.iter().position(|&v| v <= 0.0) {
            return Err(LabError::domain(format!(
                "weight must be strictly positive; cell {i} holds {}",
                base.values[i]
            )));
        }
        Ok(Weight {
            base,
            powers: Arc::new(Mutex::new(HashMap::new())),
            range_max: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Weight::new(GridFn::new(grid, values)?)
    }

    pub fn ones(grid: Grid) -> Self {
        Weight::new(GridFn::constant(grid, 1.0)).unwrap()
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

    /// Prefix table of `w^t`, built once per exponent.
    pub fn prefix_pow(&self, t: f64) -> Result<Arc<PrefixSums>> {
        let key = t.to_bits();
        if let Some(p) = self.powers.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let vals: Vec<f64> = if t == 1.0 {
            self.base.values.clone()
        } else {
            self.base.values.iter().map(|v| v.powf(t)).collect()
        };
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(LabError::Range(format!("w^{t} leaves the double range")));
        }
        let p = Arc::new(PrefixSums::new(self.grid(), &vals));
        self.powers.lock().unwrap().insert(key, p.clone());
        Ok(p)
    }

    pub fn range_max(&self) -> &RangeMax {
        self.range_max
            .get_or_init(|| RangeMax::new(self.grid(), &self.base.values))
    }
}

fn check_family(w: &Weight, family: &CubeFamily) -> Result<()> {
    if w.grid() != family.grid {
        return Err(LabError::domain("weight and family live on different grids"));
    }
    Ok(())
}

/// `[w]_{A_p}` over the family.
pub fn ap_constant(w: &Weight, p: f64, family: &CubeFamily) -> Result<Extremum> {
    if p.is_nan() || p <= 1.0 {
        return Err(LabError::Unsupported(format!(
            "A_p needs p > 1 (got {p}); A_1 is not implemented"
        )));
    }
    if p.is_infinite() {
        return Err(LabError::domain("A_infinity has no finite-exponent form here"));
    }
    check_family(w, family)?;
    let s1 = w.prefix_pow(1.0)?;
    let s2 = w.prefix_pow(1.0 - conj(p))?;
    let cubes = family.members();
    if p == 2.0 {
        return Ok(sup_over(&cubes, |q| s1.avg(q) * s2.avg(q)));
    }
    Ok(sup_over(&cubes, |q| s1.avg(q) * s2.avg(q).powf(p - 1.0)))
}

/// Per-cube A_p ratio, exposed for slice and sandwich checks.
pub fn ap_ratio(w: &Weight, p: f64, q: &Cube) -> Result<f64> {
    let s1 = w.prefix_pow(1.0)?;
    let s2 = w.prefix_pow(1.0 - conj(p))?;
    Ok(s1.avg(q) * s2.avg(q).powf(p - 1.0))
}

/// `[w]_{RH_q}`; `q = ∞` uses the cell maximum over the cube.
pub fn rh_constant(w: &Weight, q: f64, family: &CubeFamily) -> Result<Extremum> {
    if q.is_nan() || q <= 1.0 {
        return Err(LabError::domain(format!("RH_q needs q > 1 (got {q})")));
    }
    check_family(w, family)?;
    let s1 = w.prefix_pow(1.0)?;
    let cubes = family.members();
    if q.is_infinite() {
        let rm = w.range_max();
        return Ok(sup_over(&cubes, |c| rm.max(c) / s1.avg(c)));
    }
    let sq = w.prefix_pow(q)?;
    Ok(sup_over(&cubes, |c| sq.avg(c).powf(1.0 / q) / s1.avg(c)))
}

/// `[w]_{A_{p,q}} = sup (avg w^q)(avg w^{-p'})^{q/p'}`.
pub fn apq_constant(w: &Weight, p: f64, q: f64, family: &CubeFamily) -> Result<Extremum> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return Err(LabError::domain(format!("A_(p,q) needs 1 < p, q < inf (got {p}, {q})")));
    }
    check_family(w, family)?;
    let pp = conj(p);
    let s1 = w.prefix_pow(q)?;
    let s2 = w.prefix_pow(-pp)?;
    let cubes = family.members();
    Ok(sup_over(&cubes, |c| s1.avg(c) * s2.avg(c).powf(q / pp)))
}

/// Exponent bundle shared by the weight classes and the theorems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentProfile {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub theta: f64,
    pub eta: f64,
    /// Fractional order; 0 for singular integrals.
    pub alpha: f64,
    /// Ambient dimension n.
    pub dim: usize,
    /// Multilinear exponents p_1..p_m (empty for linear profiles).
    pub p_list: Vec<f64>,
    /// r_1..r_{m+1} for A_{P,R} (empty if unused).
    pub r_list: Vec<f64>,
}

impl ExponentProfile {
    /// Linear profile for estimates `L^p(w^p) → L^q(w^q)` under `w^θ ∈ A_s`.
    pub fn linear(p: f64, q: f64, s: f64, theta: f64, eta: f64) -> Result<Self> {
        let pr = ExponentProfile {
            p,
            q,
            s,
            theta,
            eta,
            alpha: 0.0,
            dim: 1,
            p_list: vec![],
            r_list: vec![],
        };
        pr.validate()?;
        Ok(pr)
    }

    /// Fractional profile: `1/q = 1/p − α/n`, `s = q(n−α)/n`, `θ = q`.
    pub fn fractional(dim: usize, alpha: f64, p: f64, eta: f64) -> Result<Self> {
        let n = dim as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(LabError::domain(format!("alpha = {alpha} outside (0, {n})")));
        }
        let inv_q = 1.0 / p - alpha / n;
        if inv_q <= 0.0 {
            return Err(LabError::domain("1/p - alpha/n must be positive"));
        }
        let q = 1.0 / inv_q;
        let pr = ExponentProfile {
            p,
            q,
            s: q * (n - alpha) / n,
            theta: q,
            eta,
            alpha,
            dim,
            p_list: vec![],
            r_list: vec![],
        };
        pr.validate()?;
        Ok(pr)
    }

    /// Multilinear profile with `1/p = Σ 1/p_j`.
    pub fn multilinear(p_list: Vec<f64>) -> Result<Self> {
        if p_list.is_empty() {
            return Err(LabError::domain("empty exponent list"));
        }
        if let Some(pj) = p_list.iter().find(|&&pj| !(pj > 1.0 && pj.is_finite())) {
            return Err(LabError::domain(format!("p_j = {pj} must lie in (1, inf)")));
        }
        let p = 1.0 / p_list.iter().map(|pj| 1.0 / pj).sum::<f64>();
        Ok(ExponentProfile {
            p,
            q: p,
            s: 2.0,
            theta: 1.0,
            eta: 2.0,
            alpha: 0.0,
            dim: 1,
            p_list,
            r_list: vec![],
        })
    }

    pub fn with_r(mut self, r_list: Vec<f64>) -> Result<Self> {
        if r_list.len() != self.p_list.len() + 1 {
            return Err(LabError::domain("R must have m + 1 entries"));
        }
        self.r_list = r_list;
        self.deltas()?;
        Ok(self)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn m(&self) -> usize {
        self.p_list.len()
    }

    pub fn p_prime(&self) -> f64 {
        conj(self.p)
    }

    pub fn q_prime(&self) -> f64 {
        conj(self.q)
    }

    pub fn s_prime(&self) -> f64 {
        conj(self.s)
    }

    pub fn eta_prime(&self) -> f64 {
        conj(self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 1.0;
        if !ok(self.p) || !ok(self.q) {
            return Err(LabError::domain(format!(
                "p = {}, q = {} must be finite and at least 1",
                self.p, self.q
            )));
        }
        if !(self.s > 1.0 && self.s.is_finite()) {
            return Err(LabError::domain(format!("s = {} must lie in (1, inf)", self.s)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(LabError::domain("theta must be positive"));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(LabError::domain("eta must lie in (1, inf)"));
        }
        Ok(())
    }

    /// Δ_1..Δ_{m+1} of the A_{P,R} class; `r = 1` entries give the A_P exponents.
    pub fn deltas(&self) -> Result<Vec<f64>> {
        let m = self.m();
        if self.r_list.len() != m + 1 {
            return Err(LabError::domain("profile carries no R vector"));
        }
        let mut d = Vec::with_capacity(m + 1);
        for j in 0..m {
            let (rj, pj) = (self.r_list[j], self.p_list[j]);
            if !(rj >= 1.0 && rj < pj) {
                return Err(LabError::domain(format!("need 1 <= r_{} < p_{} (got {rj}, {pj})", j + 1, j + 1)));
            }
            d.push(1.0 / (1.0 / rj - 1.0 / pj));
        }
        let rl = self.r_list[m];
        let rlp = conj(rl);
        if !(rl >= 1.0 && rlp > self.p) {
            return Err(LabError::domain(format!(
                "need r'_(m+1) > p (got r' = {rlp}, p = {})",
                self.p
            )));
        }
        d.push(1.0 / (1.0 / self.p - 1.0 / rlp));
        Ok(d)
    }
}

/// Tuple of weights sharing one grid, with the multilinear profile.
#[derive(Clone, Debug)]
pub struct VectorWeight {
    pub components: Vec<Weight>,
    pub profile: ExponentProfile,
}

impl VectorWeight {
    pub fn new(components: Vec<Weight>, profile: ExponentProfile) -> Result<Self> {
        if components.len() != profile.m() {
            return Err(LabError::domain(format!(
                "{} components for a profile with m = {}",
                components.len(),
                profile.m()
            )));
        }
        let g = components[0].grid();
        if components.iter().any(|w| w.grid() != g) {
            return Err(LabError::domain("vector weight components on different grids"));
        }
        Ok(VectorWeight {
            components,
            profile,
        })
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    /// `ν_w = Π w_j^{p/p_j}`, formed in log space.
    pub fn nu(&self) -> Result<Weight> {
        let p = self.profile.p;
        let n = self.grid().cells();
        let mut logs = vec![0.0; n];
        for (w, &pj) in self.components.iter().zip(&self.profile.p_list) {
            for (l, v) in logs.iter_mut().zip(w.values()) {
                *l += (p / pj) * v.ln();
            }
        }
        Weight::from_values(self.grid(), logs.into_iter().map(f64::exp).collect())
    }

    /// `σ_j = w_j^{1−p_j'}`.
    pub fn sigma(&self, j: usize) -> Result<Weight> {
        power(&self.components[j], 1.0 - conj(self.profile.p_list[j]))
    }
}

/// `[w]_{A_P}`.
pub fn a_vector_constant(w: &VectorWeight, family: &CubeFamily) -> Result<Extremum> {
    check_family(&w.components[0], family)?;
    let p = w.profile.p;
    let nu = w.nu()?;
    let snu = nu.prefix_pow(1.0)?;
    let parts = w
        .components
        .iter()
        .zip(&w.profile.p_list)
        .map(|(wj, &pj)| {
            let pjp = conj(pj);
            Ok((wj.prefix_pow(1.0 - pjp)?, 1.0 / pjp))
        })
        .collect::<Result<Vec<_>>>()?;
    let cubes = family.members();
    Ok(sup_over(&cubes, |c| {
        parts
            .iter()
            .fold(snu.avg(c).powf(1.0 / p), |acc, (s, e)| acc * s.avg(c).powf(*e))
    }))
}

/// `[w]_{A_{P,q}} = sup (avg Π w_j^q) Π (avg w_j^{-p_j'})^{q/p_j'}`.
pub fn a_pq_vector_constant(w: &VectorWeight, q: f64, family: &CubeFamily) -> Result<Extremum> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(LabError::domain(format!("q = {q} must be positive")));
    }
    check_family(&w.components[0], family)?;
    let n = w.grid().cells();
    let mut logs = vec![0.0; n];
    for wj in &w.components {
        for (l, v) in logs.iter_mut().zip(wj.values()) {
            *l += q * v.ln();
        }
    }
    let prod = Weight::from_values(w.grid(), logs.into_iter().map(f64::exp).collect())?;
    let sp = prod.prefix_pow(1.0)?;
    let parts = w
        .components
        .iter()
        .zip(&w.profile.p_list)
        .map(|(wj, &pj)| {
            let pjp = conj(pj);
            Ok((wj.prefix_pow(-pjp)?, q / pjp))
        })
        .collect::<Result<Vec<_>>>()?;
    let cubes = family.members();
    Ok(sup_over(&cubes, |c| {
        parts
            .iter()
            .fold(sp.avg(c), |acc, (s, e)| acc * s.avg(c).powf(*e))
    }))
}

/// `[w]_{A_{P,R}}`. With `R = (1, …, 1)` the exponents reduce to those of A_P.
pub fn a_pr_constant(w: &VectorWeight, family: &CubeFamily) -> Result<Extremum> {
    check_family(&w.components[0], family)?;
    let pr = &w.profile;
    let d = pr.deltas()?;
    let m = pr.m();
    let nu = w.nu()?;
    let snu = nu.prefix_pow(d[m] / pr.p)?;
    let parts = (0..m)
        .map(|j| {
            Ok((
                w.components[j].prefix_pow(-d[j] / pr.p_list[j])?,
                1.0 / d[j],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let cubes = family.members();
    let e_nu = 1.0 / d[m];
    Ok(sup_over(&cubes, |c| {
        parts
            .iter()
            .fold(snu.avg(c).powf(e_nu), |acc, (s, e)| acc * s.avg(c).powf(*e))
    }))
}

/// The admissibility condition `Σ 1/min{r_i, 2} < 2` for the BHT range.
pub fn check_bht_admissible(r: [f64; 3]) -> bool {
    r.iter().map(|ri| 1.0 / ri.min(2.0)).sum::<f64>() < 2.0
}

/// Both sides of the restricted-class membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    /// Class flag from the single-constant form; discrete constants of strictly
    /// positive weights are always finite, so this is false only on overflow.
    pub member: bool,
    /// `[w^s]_{A_{s(q−1)+1}}` with `q = p/r−`, `s = (r+/p)'`.
    pub constant: f64,
    /// Flag from the joint A_q ∩ RH_s computation.
    pub member_direct: bool,
    pub a_constant: f64,
    /// `[w]_{RH_s}`; 1 when `r+ = ∞`.
    pub rh_constant: f64,
    pub q: f64,
    pub s: f64,
}

impl Membership {
    /// Per-cube identity gives `max(A, RH)^s ≤ constant ≤ (A·RH)^s`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        let lo = self.a_constant.max(self.rh_constant).powf(self.s);
        let hi = (self.a_constant * self.rh_constant).powf(self.s);
        crate::numeric::le_rel(lo, self.constant, tol) && crate::numeric::le_rel(self.constant, hi, tol)
    }
}

/// Membership in `A_{p/r−} ∩ RH_{(r+/p)'}` computed as a single A-constant
/// and, independently, as the pair of constants.
pub fn membership_restricted(
    w: &Weight,
    p: f64,
    r_minus: f64,
    r_plus: f64,
    family: &CubeFamily,
) -> Result<Membership> {
    if !(r_minus >= 1.0 && r_minus < p && p < r_plus) {
        return Err(LabError::domain(format!(
            "need 1 <= r- < p < r+ (got {r_minus}, {p}, {r_plus})"
        )));
    }
    let q = p / r_minus;
    let a = ap_constant(w, q, family)?.value;
    if r_plus.is_infinite() {
        return Ok(Membership {
            member: a.is_finite(),
            constant: a,
            member_direct: a.is_finite(),
            a_constant: a,
            rh_constant: 1.0,
            q,
            s: 1.0,
        });
    }
    let s = conj(r_plus / p);
    let rh = rh_constant(w, s, family)?.value;
    let ws = power(w, s)?;
    let c = ap_constant(&ws, s * (q - 1.0) + 1.0, family)?.value;
    Ok(Membership {
        member: c.is_finite(),
        constant: c,
        member_direct: a.is_finite() && rh.is_finite(),
        a_constant: a,
        rh_constant: rh,
        q,
        s,
    })
}

pub fn power(w: &Weight, t: f64) -> Result<Weight> {
    if t == 1.0 {
        return Ok(w.clone());
    }
    let v: Vec<f64> = w.values().iter().map(|x| x.powf(t)).collect();
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(LabError::Range(format!("w^{t} leaves the double range")));
    }
    Weight::from_values(w.grid(), v)
}

pub fn product(w1: &Weight, w2: &Weight) -> Result<Weight> {
    if w1.grid() != w2.grid() {
        return Err(LabError::domain("product of weights on different grids"));
    }
    let v: Vec<f64> = w1.values().iter().zip(w2.values()).map(|(a, b)| a * b).collect();
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(LabError::Range("product leaves the double range".into()));
    }
    Weight::from_values(w1.grid(), v)
}

/// `e^{λ b}`, rejected when `|λ|·max|b| > 700`.
pub fn exp_of(b: &GridFn, lambda: f64) -> Result<Weight> {
    let m = lambda.abs() * b.max_abs();
    if !(m <= EXP_GUARD) {
        return Err(LabError::Range(format!(
            "|lambda|*max|b| = {m:.3e} exceeds the guard {EXP_GUARD}"
        )));
    }
    Weight::from_values(b.grid, b.values.iter().map(|v| (lambda * v).exp()).collect())
}
