use approx::assert_relative_eq;
use commlab::commutators::{
    commutator_contour, commutator_contour_multi, commutator_direct, commutator_matrix, commutator_multilinear_direct,
    commutator_recursive, default_delta, psi_conjugate, psi_conjugate_multi, taylor_reconstruct, ContourSpec,
};
use commlab::grid::{Grid, GridFn};
use commlab::numeric::rel_err;
use commlab::operators::{BilinearKernelOp, DenseMatrix, LinearKernelOp};
use commlab::oscillation::BmoFn;
use commlab::weights::ExponentProfile;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_fn(g: Grid, seed: u64) -> GridFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridFn::new(g, (0..g.cells()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_b(g: Grid, seed: u64) -> BmoFn {
    BmoFn::new(random_fn(g, seed ^ 0xABCD))
}

fn cplx(f: &GridFn) -> Vec<Complex64> {
    f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn constant_symbol_commutes() {
    let g = Grid::d1(32).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let b = BmoFn::new(GridFn::constant(g, 2.5));
    let f = random_fn(g, 1);
    for k in 1..=3 {
        assert!(commutator_direct(&h, &b, k, &f).unwrap().values.iter().all(|&v| v == 0.0));
    }
    let c = commutator_contour(&h, &b, 2, &f, &ContourSpec::new(0.5, 64).unwrap()).unwrap();
    assert!(c.values.max_abs() <= 1e-13);
    assert_eq!(commutator_direct(&h, &b, 0, &f).unwrap().values, h.apply(&f).unwrap().values);
}

#[test]
fn first_order_is_composition() {
    let g = Grid::d1(64).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let (b, f) = (random_b(g, 2), random_fn(g, 3));
    let bf = GridFn::new(g, b.values().iter().zip(&f.values).map(|(x, y)| x * y).collect()).unwrap();
    let t_bf = h.apply(&bf).unwrap();
    let tf = h.apply(&f).unwrap();
    let want: Vec<f64> = (0..64).map(|i| t_bf.values[i] - b.values()[i] * tf.values[i]).collect();
    let got = commutator_direct(&h, &b, 1, &f).unwrap();
    assert!(max_diff(&got.values, &want) <= 1e-12);

    let m = commutator_matrix(&h, &b, 1).unwrap();
    let t = h.dense().unwrap();
    let mb = DenseMatrix::from_fn(64, 64, |i, j| if i == j { b.values()[i] } else { 0.0 });
    let comm = t.matmul(&mb).sub(&mb.matmul(t));
    assert!(m.max_abs_diff(&comm) <= 1e-12);
}

#[test]
fn recursion_agrees_with_direct() {
    let g = Grid::d1(64).unwrap();
    for op in [LinearKernelOp::hilbert(g).unwrap(), LinearKernelOp::riesz(g, 0.5).unwrap()] {
        let (b, f) = (random_b(g, 4), random_fn(g, 5));
        for k in 0..=3 {
            let d = commutator_direct(&op, &b, k, &f).unwrap();
            let r = commutator_recursive(&op, &b, k, &f).unwrap();
            assert!(rel_err(&r.values, &d.values, 1e-300) <= 1e-10, "k = {k}");
        }
    }
}

#[test]
fn multilinear_first_slot_and_oracle() {
    let n = 16;
    let g = Grid::d1(n).unwrap();
    let t = BilinearKernelOp::bht(g).unwrap();
    let (b1, b2) = (random_b(g, 6), random_b(g, 7));
    let (f, h) = (random_fn(g, 8), random_fn(g, 9));
    let b1f = GridFn::new(g, b1.values().iter().zip(&f.values).map(|(x, y)| x * y).collect()).unwrap();
    let tfg = t.apply(&f, &h).unwrap();
    let tbf = t.apply(&b1f, &h).unwrap();
    let want: Vec<f64> = (0..n).map(|i| b1.values()[i] * tfg.values[i] - tbf.values[i]).collect();
    let got = commutator_multilinear_direct(&t, (&b1, &b2), [1, 0], &f, &h).unwrap();
    assert!(max_diff(&got.values, &want) <= 1e-12);

    let got = commutator_multilinear_direct(&t, (&b1, &b2), [2, 1], &f, &h).unwrap();
    let (bv1, bv2) = (b1.values(), b2.values());
    for i in 0..n {
        let mut acc = 0.0;
        for s in 1..n / 2 {
            let (lo, hi) = ((i + n - s) % n, (i + s) % n);
            let c = 1.0 / s as f64;
            acc += c * (bv1[i] - bv1[lo]).powi(2) * (bv2[i] - bv2[hi]) * f.values[lo] * h.values[hi];
            acc -= c * (bv1[i] - bv1[hi]).powi(2) * (bv2[i] - bv2[lo]) * f.values[hi] * h.values[lo];
        }
        assert_relative_eq!(got.values[i], acc, epsilon = 1e-12);
    }

    let c1 = BmoFn::new(GridFn::constant(g, 1.0));
    let z = commutator_multilinear_direct(&t, (&c1, &c1), [1, 1], &f, &h).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
}

#[test]
fn psi_identities() {
    let g = Grid::d1(32).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let (b, f) = (random_b(g, 10), random_fn(g, 11));
    let tf = h.apply(&f).unwrap();
    let p0 = psi_conjugate(&h, &b, Complex64::new(0.0, 0.0), &cplx(&f)).unwrap();
    assert!(p0.iter().zip(&tf.values).all(|(a, b)| (a.re - b).abs() <= 1e-13 && a.im == 0.0));
    let zero = BmoFn::new(GridFn::constant(g, 0.0));
    let pz = psi_conjugate(&h, &zero, Complex64::new(0.3, 1.1), &cplx(&f)).unwrap();
    assert!(pz.iter().zip(&tf.values).all(|(a, b)| (a.re - b).abs() <= 1e-13 && a.im.abs() <= 1e-13));

    let z = Complex64::new(0.4, -0.7);
    let x: Vec<Complex64> = f.values.iter().enumerate().map(|(i, &v)| Complex64::new(v, 0.1 * i as f64)).collect();
    let xc: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
    let a = psi_conjugate(&h, &b, z.conj(), &x).unwrap();
    let c = psi_conjugate(&h, &b, z, &xc).unwrap();
    assert!(a.iter().zip(&c).all(|(u, v)| (u - v.conj()).norm() <= 1e-12));

    let big = BmoFn::new(GridFn::from_fn(g, |x, _| 400.0 * x).unwrap());
    assert!(psi_conjugate(&h, &big, Complex64::new(1.0, 0.0), &cplx(&f)).is_err());

    let t = BilinearKernelOp::bht(g).unwrap();
    let q = psi_conjugate_multi(&t, (&b, &b), [Complex64::new(0.0, 0.0); 2], &cplx(&f), &cplx(&f)).unwrap();
    assert!(q.iter().all(|v| v.norm() <= 1e-12));
}

#[test]
fn contour_matches_direct_and_is_radius_free() {
    let g = Grid::d1(64).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let (b, f) = (random_b(g, 12), random_fn(g, 13));
    for k in 1..=3 {
        let d = commutator_direct(&h, &b, k, &f).unwrap();
        for delta in [0.25, 0.5, 1.0] {
            let c = commutator_contour(&h, &b, k, &f, &ContourSpec::new(delta, 64).unwrap()).unwrap();
            assert!(rel_err(&c.values.values, &d.values, 1e-300) <= 1e-9, "k={k} delta={delta}");
            assert!(!c.warning);
        }
    }
}

#[test]
fn multilinear_contour_matches_direct() {
    let g = Grid::d1(32).unwrap();
    let t = BilinearKernelOp::bht(g).unwrap();
    let (b1, b2) = (random_b(g, 14), random_b(g, 15));
    let (f, h) = (random_fn(g, 16), random_fn(g, 17));
    for alpha in [[1, 0], [0, 1], [1, 1], [2, 0], [2, 1]] {
        let d = commutator_multilinear_direct(&t, (&b1, &b2), alpha, &f, &h).unwrap();
        let spec = [ContourSpec::new(0.5, 32).unwrap(), ContourSpec::new(0.5, 32).unwrap()];
        let c = commutator_contour_multi(&t, (&b1, &b2), alpha, &f, &h, spec).unwrap();
        assert!(rel_err(&c.values.values, &d.values, 1e-300) <= 1e-9, "{alpha:?}");
    }
}

#[test]
fn default_radius_formula() {
    let prof = ExponentProfile::linear(2.0, 2.0, 2.0, 1.0, 2.0).unwrap();
    assert_relative_eq!(default_delta(&prof, 1.0).unwrap(), 0.5, max_relative = 1e-15);
    assert_relative_eq!(default_delta(&prof, 2.0).unwrap(), 0.25, max_relative = 1e-15);
    let prof = ExponentProfile::linear(2.0, 2.0, 1.5, 1.0, 2.0).unwrap();
    assert_relative_eq!(default_delta(&prof, 1.0).unwrap(), 0.25, max_relative = 1e-15);
    assert!(default_delta(&prof, 0.0).is_err());
}

#[test]
fn taylor_series_converges_to_psi() {
    let g = Grid::d1(32).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let (b, f) = (random_b(g, 18), random_fn(g, 19));
    let t0 = taylor_reconstruct(&h, &b, &f, Complex64::new(0.0, 0.0), 5).unwrap();
    let tf = h.apply(&f).unwrap();
    assert!(t0.iter().zip(&tf.values).all(|(a, b)| (a.re - b).abs() <= 1e-13));

    let z = Complex64::new(0.15, 0.1);
    let psi = psi_conjugate(&h, &b, z, &cplx(&f)).unwrap();
    let scale = psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let errs: Vec<f64> = (1..=12)
        .map(|k| {
            let t = taylor_reconstruct(&h, &b, &f, z, k).unwrap();
            t.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
        })
        .collect();
    assert!(errs[11] < 1e-8, "{errs:?}");
    assert!(errs.windows(4).all(|w| w[3] < w[0]), "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn commutators_are_linear_in_f(a in -3.0f64..3.0, seed in 0u64..500, k in 0usize..4) {
        let g = Grid::d1(32).unwrap();
        let h = LinearKernelOp::hilbert(g).unwrap();
        let b = random_b(g, seed);
        let (f1, f2) = (random_fn(g, seed + 1), random_fn(g, seed + 2));
        let comb = GridFn::new(g, f1.values.iter().zip(&f2.values).map(|(x, y)| a * x + y).collect()).unwrap();
        let l = commutator_direct(&h, &b, k, &comb).unwrap();
        let (r1, r2) = (commutator_direct(&h, &b, k, &f1).unwrap(), commutator_direct(&h, &b, k, &f2).unwrap());
        for i in 0..32 {
            prop_assert!((l.values[i] - a * r1.values[i] - r2.values[i]).abs() <= 1e-10 * (1.0 + l.values[i].abs()));
        }
    }

    #[test]
    fn contour_agrees_for_any_admissible_radius(delta in 0.05f64..1.5, seed in 0u64..500) {
        let g = Grid::d1(32).unwrap();
        let h = LinearKernelOp::hilbert(g).unwrap();
        let (b, f) = (random_b(g, seed), random_fn(g, seed + 7));
        let d = commutator_direct(&h, &b, 1, &f).unwrap();
        let c = commutator_contour(&h, &b, 1, &f, &ContourSpec::new(delta, 64).unwrap()).unwrap();
        prop_assert!(rel_err(&c.values.values, &d.values, 1e-300) <= 1e-9);
    }
}
