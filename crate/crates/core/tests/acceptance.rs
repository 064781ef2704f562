//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Runs at the documented default sizes, so it takes a few minutes.

use std::time::Instant;

use commlab::commutators::{commutator_contour, commutator_direct, default_delta, ContourSpec};
use commlab::grid::{CubeFamily, FamilyKind, Grid, GridFn};
use commlab::numeric::{ls_slope, rel_err};
use commlab::operators::{bht, BilinearKernelOp, LinearKernelOp};
use commlab::verify::{
    check_converse_linear, check_crw_quantitative, check_fractional_identity, check_multilinear, check_perez_rh,
    run_suite, CheckOutcome, CrwConfig, MultilinearConfig, SuiteConfig, SuiteKind, SuiteSize, SymbolCorpus,
    WeightCorpus,
};
use commlab::weights::ExponentProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn show(o: &CheckOutcome) -> String {
    o.summary_line().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn c1_exact_suite() -> Verdict {
    let cfg = SuiteConfig::new(SuiteKind::Exact, SuiteSize::Default, SEED);
    let t = Instant::now();
    let rep = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("suite error: {e}")),
    };
    let secs = t.elapsed().as_secs_f64();
    for o in &rep.outcomes {
        println!("    {}", o.summary_line());
    }
    let sized = cfg.weights == 200 && cfg.symbols == 50 && cfg.n_1d == 512 && cfg.n_2d == 64;
    verdict(
        sized && rep.exact_violations == 0 && secs <= 300.0,
        format!("{} exact violations, {secs:.0} s (limit 300 s)", rep.exact_violations),
    )
}

fn c2_contour() -> Verdict {
    let n = 128;
    let m = 64;
    let g = Grid::d1(n).unwrap();
    let fam = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
    let syms = SymbolCorpus::new(g, SEED).take(20, &fam).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let fs: Vec<GridFn> = (0..20)
        .map(|_| GridFn::new(g, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let prof = ExponentProfile::linear(2.0, 2.0, 2.0, 1.0, 2.0).unwrap();
    let ops = [LinearKernelOp::hilbert(g).unwrap(), LinearKernelOp::riesz(g, 0.5).unwrap()];
    let mut worst: f64 = 0.0;
    let mut min_slope = f64::INFINITY;
    let mut failures = 0;
    for op in &ops {
        for (s, f) in syms.iter().zip(&fs) {
            if s.norm == 0.0 {
                continue;
            }
            let v = s.b.values();
            let tau = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
            let delta = default_delta(&prof, s.norm).unwrap();
            for k in 1..=3 {
                let d = commutator_direct(op, &s.b, k, f).unwrap();
                match commutator_contour(op, &s.b, k, f, &ContourSpec::new(delta, m).unwrap()) {
                    Ok(c) => worst = worst.max(rel_err(&c.values.values, &d.values, 1e-300)),
                    Err(_) => failures += 1,
                }
                // τδ₀/4 ≈ 25 keeps all three radii above the rounding floor
                let d0 = 98.0 / tau;
                let (mut x, mut y) = (Vec::new(), Vec::new());
                for r in [d0, d0 / 2.0, d0 / 4.0] {
                    match commutator_contour(op, &s.b, k, f, &ContourSpec::new(r, m).unwrap()) {
                        Ok(c) => {
                            x.push(r.ln());
                            y.push(rel_err(&c.values.values, &d.values, 1e-300).ln());
                        }
                        Err(_) => failures += 1,
                    }
                }
                if x.len() == 3 {
                    min_slope = min_slope.min(ls_slope(&x, &y));
                }
            }
        }
    }
    let need = 0.9 * m as f64;
    verdict(
        failures == 0 && worst <= 1e-8 && min_slope >= need,
        format!("max rel. error {worst:.2e} (limit 1e-8), min slope {min_slope:.2} (need {need:.1}), {failures} errors"),
    )
}

fn c3_perez() -> Verdict {
    let g = Grid::d1(1024).unwrap();
    let fam = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
    let ws = WeightCorpus::new(g, SEED).take(100).unwrap();
    let o = check_perez_rh(&ws, &fam, 2.0);
    let deficit = o.metrics.get("max_deficit").copied().unwrap_or(f64::NAN);
    verdict(
        o.violations == 0 && o.nonfinite == 0 && o.instances_run == 100,
        format!("{}; max deficit {deficit:.3e}", show(&o)),
    )
}

fn c4_crw() -> Verdict {
    let cfg = CrwConfig::default();
    let o = check_crw_quantitative(&cfg);
    let mut ok = o.violations == 0 && o.nonfinite == 0;
    let mut exps = Vec::new();
    for &k in &cfg.k_list {
        let e = o.metrics.get(&format!("exponent_k{k}")).copied().unwrap_or(f64::NAN);
        ok &= e <= k as f64 + 1.25;
        exps.push(format!("k={k}: {e:.3} (limit {})", k as f64 + 1.25));
    }
    let c = o.metrics.get("fitted_C").copied().unwrap_or(f64::NAN);
    let sharp = o.metrics.get("sharp_form_slack").copied().unwrap_or(f64::NAN);
    ok &= c.is_finite() && sharp.is_finite();
    verdict(
        ok,
        format!(
            "{}; fitted C {c:.3}; exponents {}; bare C[w]^(k+1) slack {sharp:.3}",
            show(&o),
            exps.join(", ")
        ),
    )
}

fn c5_fractional_identity() -> Verdict {
    let g = Grid::d1(512).unwrap();
    let fam = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
    let ws = WeightCorpus::new(g, SEED).take(200).unwrap();
    let o = check_fractional_identity(&ws, &fam, 0.25, 2.0);
    verdict(o.violations == 0 && o.nonfinite == 0, show(&o))
}

fn c6_converse() -> Verdict {
    let g = Grid::d1(256).unwrap();
    let fam = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let syms = SymbolCorpus::new(g, SEED).take(20, &fam).unwrap();
    let outs = check_converse_linear(&h, &syms, 0.5, 8, &[0.0, 0.1, 0.2, 0.3, 0.4]);
    match outs.iter().find(|o| o.check_id == "converse_linear_b") {
        Some(o) => verdict(o.violations == 0 && o.nonfinite == 0 && o.instances_run > 0, show(o)),
        None => verdict(false, "direction (b) missing"),
    }
}

fn c7_bht() -> Verdict {
    let n = 64;
    let g = Grid::d1(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut rand_fn = || GridFn::new(g, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let (f, h) = (rand_fn(), rand_fn());
    let got = bht(&f, &h).unwrap();
    let mut oracle_err: f64 = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for t in 1..n / 2 {
            let (lo, hi) = ((i + n - t) % n, (i + t) % n);
            acc += (f.values[lo] * h.values[hi] - f.values[hi] * h.values[lo]) / t as f64;
        }
        oracle_err = oracle_err.max((got.values[i] - acc).abs());
    }
    let one = GridFn::constant(g, 1.0);
    let zero = BilinearKernelOp::bht(g).unwrap().apply(&one, &one).unwrap().max_abs();

    let mut ratios = Vec::new();
    let mut lines = Vec::new();
    for size in [64, 128, 256] {
        let o = check_multilinear(&MultilinearConfig { n: size, ..MultilinearConfig::default() });
        lines.push(format!("N={size}: {:.4} ({} nonfinite)", o.max_ratio, o.nonfinite));
        ratios.push(if o.nonfinite == 0 { o.max_ratio } else { f64::NAN });
    }
    let stable = ratios.iter().all(|r| r.is_finite() && *r > 0.0)
        && ratios.windows(2).all(|w| w[0].max(w[1]) / w[0].min(w[1]) <= 2.0);
    verdict(
        oracle_err <= 1e-12 && zero == 0.0 && stable,
        format!("oracle error {oracle_err:.1e}, |BHT(1,1)| = {zero:e}, max ratios {}", lines.join("; ")),
    )
}

fn c8_determinism() -> Verdict {
    let cfg = SuiteConfig::new(SuiteKind::All, SuiteSize::Smoke, SEED);
    let (a, b) = match (run_suite(&cfg), run_suite(&cfg)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return verdict(false, "suite error"),
    };
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    verdict(
        ja == jb && a.to_csv() == b.to_csv(),
        format!("{} checks, {} bytes of JSON compared", a.outcomes.len(), ja.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("exact suite, default corpus", c1_exact_suite),
        ("contour vs direct, error scaling", c2_contour),
        ("Perez reverse Holder", c3_perez),
        ("quantitative domination, Hilbert", c4_crw),
        ("fractional class identity", c5_fractional_identity),
        ("converse bridge", c6_converse),
        ("BHT pipeline", c7_bht),
        ("determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<34} {}  [{:.1} s] {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
