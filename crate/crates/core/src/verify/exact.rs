//! Checks that must hold to floating-point tolerance on every grid.

use super::corpus::Symbol;
use super::{CheckOutcome, Classification, Tracker};
use crate::grid::{CubeFamily, FamilyKind, Grid, GridFn};
use crate::numeric::conj;
use crate::oscillation::{bmo_norm, little_bmo_norm, script_bmo_norm, BmoFn};
use crate::weights::{
    a_pr_constant, a_pq_vector_constant, a_vector_constant, ap_constant, apq_constant, exp_of,
    membership_restricted, power, product, rh_constant, ExponentProfile, VectorWeight, Weight,
};
use crate::Result;

/// Relative slack allowed on exact inequalities.
pub const EXACT_TOL: f64 = 1e-9;

fn centered(b: &BmoFn) -> BmoFn {
    b.shifted(-b.mean(&b.grid().whole()))
}

/// `[e^{λb}]_{A_p} ≤ 4^{|λ|‖b‖}`, both at `p = 1 + |λ|‖b‖` and at fixed
/// `p` with `|λ|‖b‖ ≤ min{1, p − 1}`.
pub fn check_lemma_bmo_to_ap(symbols: &[Symbol], family: &CubeFamily, factors: &[f64]) -> CheckOutcome {
    let mut tr = Tracker::new("lemma_bmo_to_ap", Classification::Exact, EXACT_TOL);
    for s in symbols {
        if s.norm == 0.0 {
            continue;
        }
        let b = centered(&s.b);
        for &t in factors {
            if t == 0.0 {
                continue;
            }
            let mut cases = vec![(1.0 + t.abs(), t / s.norm)];
            for p in [1.5, 2.0, 3.0] {
                cases.push((p, t * f64::min(1.0, p - 1.0) / s.norm));
            }
            for (p, lambda) in cases {
                let desc = || format!("{} lambda={lambda:.4} p={p}", s.desc);
                match exp_of(b.as_gridfn(), lambda).and_then(|w| ap_constant(&w, p, family)) {
                    Ok(e) => tr.bound(e.value, 4f64.powf(lambda.abs() * s.norm), desc),
                    Err(e) => tr.error(&e, desc),
                }
            }
        }
    }
    tr.finish()
}

/// `[w e^{λb}]_{A_r} ≤ [w^η]^{1/η}_{A_r} 4^{|λ|‖b‖}` for
/// `|λ| ≤ min{1, r − 1}/(η′‖b‖)`; weight `i` is paired with symbol `i mod S`.
pub fn check_lemma_product(
    weights: &[(Weight, String)],
    symbols: &[Symbol],
    family: &CubeFamily,
    r_list: &[f64],
    eta_list: &[f64],
    factors: &[f64],
) -> CheckOutcome {
    let mut tr = Tracker::new("lemma_product", Classification::Exact, EXACT_TOL);
    if symbols.is_empty() {
        return tr.finish();
    }
    for (i, (w, wd)) in weights.iter().enumerate() {
        let s = &symbols[i % symbols.len()];
        let b = centered(&s.b);
        for &r in r_list {
            for &eta in eta_list {
                let base = power(w, eta).and_then(|we| ap_constant(&we, r, family));
                let base = match base {
                    Ok(e) => e.value.powf(1.0 / eta),
                    Err(e) => {
                        tr.error(&e, || format!("{wd} eta={eta}"));
                        continue;
                    }
                };
                for &t in factors {
                    let lambda = if s.norm > 0.0 {
                        t * f64::min(1.0, r - 1.0) / (conj(eta) * s.norm)
                    } else {
                        0.0
                    };
                    let desc = || format!("{wd} {} r={r} eta={eta:.4} lambda={lambda:.4}", s.desc);
                    let lhs = exp_of(b.as_gridfn(), lambda)
                        .and_then(|e| product(w, &e))
                        .and_then(|we| ap_constant(&we, r, family));
                    match lhs {
                        Ok(e) => tr.bound(e.value, base * 4f64.powf(lambda.abs() * s.norm), desc),
                        Err(e) => tr.error(&e, desc),
                    }
                }
            }
        }
    }
    tr.finish()
}

/// Consequences of `[w]_{A_P}` for the parts of a vector weight, the Hölder
/// inclusion, and two identities linking the vector constants.
pub fn check_ap_algebra(weights: &[(Weight, String)], family: &CubeFamily, p_lists: &[[f64; 2]]) -> CheckOutcome {
    let mut tr = Tracker::new("ap_algebra", Classification::Exact, EXACT_TOL);
    for pair in weights.chunks_exact(2) {
        let (w1, d1) = &pair[0];
        let (w2, d2) = &pair[1];
        for pl in p_lists {
            let desc = |what: &str| format!("({d1}, {d2}) P=({}, {}) {what}", pl[0], pl[1]);
            let r = (|| -> Result<()> {
                let prof = ExponentProfile::multilinear(pl.to_vec())?;
                let p = prof.p;
                let vw = VectorWeight::new(vec![w1.clone(), w2.clone()], prof.clone())?;
                let a = a_vector_constant(&vw, family)?.value;
                let nu = ap_constant(&vw.nu()?, 2.0 * p, family)?.value;
                tr.bound(nu, a.powf(p), || desc("nu in A_2p"));
                for j in 0..2 {
                    let pj = conj(pl[j]);
                    let sj = ap_constant(&vw.sigma(j)?, 2.0 * pj, family)?.value;
                    tr.bound(sj, a.powf(pj), || desc(&format!("sigma_{} in A_2p'", j + 1)));
                }
                let mut holder = 1.0;
                for (j, wj) in [w1, w2].iter().enumerate() {
                    if pl[j] > 1.0 {
                        holder *= ap_constant(wj, pl[j], family)?.value.powf(1.0 / pl[j]);
                    } else {
                        holder = f64::INFINITY;
                    }
                }
                if holder.is_finite() {
                    tr.bound(a, holder, || desc("Holder inclusion"));
                }
                let apr = a_pr_constant(
                    &VectorWeight::new(vec![w1.clone(), w2.clone()], prof.clone().with_r(vec![1.0, 1.0, 1.0])?)?,
                    family,
                )?.value;
                tr.equal(apr, a, || desc("A_(P,R) at R=1"));
                let lifted = VectorWeight::new(
                    vec![power(w1, 1.0 / pl[0])?, power(w2, 1.0 / pl[1])?],
                    prof.clone(),
                )?;
                let apq = a_pq_vector_constant(&lifted, p, family)?.value;
                tr.equal(apq, a.powf(p), || desc("A_(P,p) of w^(1/p_j)"));
                Ok(())
            })();
            if let Err(e) = r {
                tr.error(&e, || desc("setup"));
            }
        }
    }
    tr.finish()
}

/// Monotonicity in `p`, reverse-Hölder monotonicity, the duality identity
/// and the restricted-class sandwich.
pub fn check_prop21(weights: &[(Weight, String)], family: &CubeFamily) -> CheckOutcome {
    let mut tr = Tracker::new("prop_ap_rh", Classification::Exact, EXACT_TOL);
    let ps = [1.25, 1.5, 2.0, 3.0, 4.0];
    let qs = [1.5, 2.0, 4.0, f64::INFINITY];
    for (w, wd) in weights {
        let r = (|| -> Result<()> {
            let a: Vec<f64> = ps.iter().map(|&p| ap_constant(w, p, family).map(|e| e.value)).collect::<Result<_>>()?;
            for k in 1..ps.len() {
                tr.bound(a[k], a[k - 1], || format!("{wd} A_{} <= A_{}", ps[k], ps[k - 1]));
            }
            let rh: Vec<f64> = qs.iter().map(|&q| rh_constant(w, q, family).map(|e| e.value)).collect::<Result<_>>()?;
            for k in 1..qs.len() {
                tr.bound(rh[k - 1], rh[k], || format!("{wd} RH_{} <= RH_{}", qs[k - 1], qs[k]));
            }
            for &p in &[1.5, 2.0, 3.0] {
                let pp = conj(p);
                let dual = ap_constant(&power(w, 1.0 - pp)?, pp, family)?.value.powf(p - 1.0);
                let direct = ap_constant(w, p, family)?.value;
                tr.equal(direct, dual, || format!("{wd} duality p={p}"));
            }
            for &(p, rm, rp) in &[(3.0, 1.5, 6.0), (2.0, 1.0, 4.0), (4.0, 2.0, 12.0)] {
                let m = membership_restricted(w, p, rm, rp, family)?;
                let lo = m.a_constant.max(m.rh_constant).powf(m.s);
                let hi = (m.a_constant * m.rh_constant).powf(m.s);
                tr.bound(lo, m.constant, || format!("{wd} sandwich low p={p} r=({rm},{rp})"));
                tr.bound(m.constant, hi, || format!("{wd} sandwich high p={p} r=({rm},{rp})"));
            }
            Ok(())
        })();
        if let Err(e) = r {
            tr.error(&e, || wd.clone());
        }
    }
    tr.finish()
}

/// `‖b‖_BMO ≤ ‖b‖_𝓑𝓜𝓞` (from `e^x ≥ 1 + x`).
pub fn check_bmo_vs_script(symbols: &[Symbol], family: &CubeFamily) -> CheckOutcome {
    let mut tr = Tracker::new("bmo_le_exp_bmo", Classification::Exact, EXACT_TOL);
    for s in symbols {
        match bmo_norm(&s.b, family) {
            Ok(e) => tr.bound(e.value, s.norm, || s.desc.clone()),
            Err(e) => tr.error(&e, || s.desc.clone()),
        }
    }
    tr.finish()
}

/// `[w]_{A_{p,q}} = [w^q]_{A_s}` with `s = 1 + q/p′`.
pub fn check_fractional_identity(weights: &[(Weight, String)], family: &CubeFamily, alpha: f64, p: f64) -> CheckOutcome {
    let mut tr = Tracker::new("fractional_identity", Classification::Exact, 1e-10);
    let prof = match ExponentProfile::fractional(family.grid.dim, alpha, p, 2.0) {
        Ok(v) => v,
        Err(e) => {
            tr.error(&e, || "profile".into());
            return tr.finish();
        }
    };
    for (w, wd) in weights {
        let r = (|| -> Result<(f64, f64)> {
            let a = apq_constant(w, p, prof.q, family)?.value;
            let b = ap_constant(&power(w, prof.q)?, prof.s, family)?.value;
            Ok((a, b))
        })();
        match r {
            Ok((a, b)) => tr.equal(a, b, || wd.clone()),
            Err(e) => tr.error(&e, || wd.clone()),
        }
    }
    tr.finish()
}

/// Row `x` (fixed first coordinate) or column of a 2D function.
fn slice(f: &GridFn, axis: usize, k: usize) -> Vec<f64> {
    let n = f.grid.n_points;
    (0..n).map(|t| if axis == 0 { f.get(k, t) } else { f.get(t, k) }).collect()
}

/// Relations between the rectangle-family quantities of 2D symbols:
/// `bmo ≤ 𝓑𝓜𝓞`, `𝓑𝓜𝓞 ≤ 1 + log₂[e^b]_{A₂}`,
/// `[e^{b/λ}]_{A₂} ≤ 4^{𝓑𝓜𝓞/λ}` for `λ ∈ {1,2,4}·𝓑𝓜𝓞`, and slice
/// quantities bounded by the rectangle ones.
pub fn check_bmo_rect_equivalence(symbols: &[BmoFn], names: &[String]) -> CheckOutcome {
    let mut tr = Tracker::new("bmo_rect_equivalence", Classification::Exact, EXACT_TOL);
    for (b, name) in symbols.iter().zip(names) {
        let r = (|| -> Result<()> {
            let grid = b.grid();
            if grid.dim != 2 {
                return Err(crate::LabError::domain("rectangle checks need a 2D grid"));
            }
            let rects = CubeFamily::new(FamilyKind::DyadicRectangles, grid)?;
            let b = centered(b);
            let little = little_bmo_norm(&b)?.value;
            let big = script_bmo_norm(&b, &rects)?.value;
            tr.bound(little, big, || format!("{name} bmo <= exp-bmo"));
            let a2 = ap_constant(&exp_of(b.as_gridfn(), 1.0)?, 2.0, &rects)?.value;
            tr.bound(big, 1.0 + a2.log2(), || format!("{name} exp-bmo <= 1 + log2 A2"));
            if big > 0.0 {
                for m in [1.0, 2.0, 4.0] {
                    let lam = m * big;
                    let c = ap_constant(&exp_of(b.as_gridfn(), 1.0 / lam)?, 2.0, &rects)?.value;
                    tr.bound(c, 4f64.powf(big / lam), || format!("{name} A2 of e^(b/{m}N)"));
                }
            }
            let line = Grid::d1(grid.n_points)?;
            let dyadic = CubeFamily::new(FamilyKind::DyadicIntervals, line)?;
            let w = exp_of(b.as_gridfn(), 1.0)?;
            for axis in 0..2 {
                for k in 0..grid.n_points {
                    let wv = slice(w.as_gridfn(), axis, k);
                    let ws = Weight::from_values(line, wv)?;
                    let c = ap_constant(&ws, 2.0, &dyadic)?.value;
                    tr.bound(c, a2, || format!("{name} slice axis={axis} k={k} A2"));
                    let bs = BmoFn::new(GridFn::new(line, slice(b.as_gridfn(), axis, k))?);
                    let o = bmo_norm(&bs, &dyadic)?.value;
                    tr.bound(o, little, || format!("{name} slice axis={axis} k={k} bmo"));
                }
            }
            Ok(())
        })();
        if let Err(e) = r {
            tr.error(&e, || name.clone());
        }
    }
    tr.finish()
}
