use approx::assert_relative_eq;
use commlab::grid::{CubeFamily, FamilyKind, Grid, GridFn};
use commlab::operators::{
    bht, bi_s, boyd_lower_bound, double_hilbert, hilbert, hilbert_direct, maximal, riesz, top_singular_value,
    weighted_norm, BilinearKernelOp, BilinearKind, BoydOptions, DenseMatrix, LinearKernelOp, NormMethod,
};
use commlab::weights::Weight;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_fn(g: Grid, seed: u64) -> GridFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridFn::new(g, (0..g.cells()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn svd_max(m: &DenseMatrix) -> f64 {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data).singular_values().max()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn hilbert_two_point_oracle() {
    let g = Grid::d1(2).unwrap();
    let h = hilbert(&GridFn::new(g, vec![1.0, 0.0]).unwrap()).unwrap();
    assert_relative_eq!(h.values[0], 0.0, epsilon = 1e-15);
    assert_relative_eq!(h.values[1], 1.0, max_relative = 1e-14);
}

#[test]
fn hilbert_fft_matches_direct_and_is_antisymmetric() {
    let g = Grid::d1(256).unwrap();
    let (f, k) = (random_fn(g, 1), random_fn(g, 2));
    let a = hilbert(&f).unwrap();
    let b = hilbert_direct(&f).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }
    let hk = hilbert_direct(&k).unwrap();
    assert_relative_eq!(dot(&b.values, &k.values), -dot(&f.values, &hk.values), epsilon = 1e-12);
}

#[test]
fn hilbert_of_constant_is_boundary_artifact() {
    let g = Grid::d1(8).unwrap();
    let h = hilbert_direct(&GridFn::constant(g, 1.0)).unwrap();
    for i in 0..8 {
        let want: f64 = (0..8).filter(|&j| j != i).map(|j| 1.0 / (i as f64 - j as f64)).sum();
        assert_relative_eq!(h.values[i], want, epsilon = 1e-14);
    }
    assert!(h.values[0] < 0.0 && h.values[7] > 0.0);
}

#[test]
fn riesz_oracles() {
    let g = Grid::d1(4).unwrap();
    let one = riesz(&GridFn::constant(g, 1.0), 0.5).unwrap();
    for i in 0..4 {
        let want: f64 = (0..4)
            .filter(|&j| j != i)
            .map(|j| 4f64.powf(-0.5) * ((i as f64 - j as f64).abs()).powf(-0.5))
            .sum();
        assert_relative_eq!(one.values[i], want, max_relative = 1e-14);
    }
    let op = LinearKernelOp::riesz(g, 0.5).unwrap();
    let mut e = vec![0.0; 4];
    e[0] = 1.0;
    let col = op.apply(&GridFn::new(g, e).unwrap()).unwrap();
    for i in 0..4 {
        assert_eq!(col.values[i], op.entry(i, 0));
    }
    assert!(riesz(&GridFn::constant(g, 1.0), 1.0).is_err());
    let g2 = Grid::d2(8).unwrap();
    assert!(riesz(&GridFn::constant(g2, 1.0), 1.5).unwrap().values.iter().all(|&v| v > 0.0));
}

#[test]
fn double_hilbert_factorizes() {
    let g2 = Grid::d2(16).unwrap();
    let g1 = Grid::d1(16).unwrap();
    let (u, v) = (random_fn(g1, 3), random_fn(g1, 4));
    let f = GridFn::from_fn(g2, |x, y| u.values[(x * 16.0) as usize] * v.values[(y * 16.0) as usize]).unwrap();
    let (hu, hv) = (hilbert_direct(&u).unwrap(), hilbert_direct(&v).unwrap());
    let got = double_hilbert(&f).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            assert!((got.get(i, j) - hu.values[i] * hv.values[j]).abs() <= 1e-12);
        }
    }
}

fn bht_oracle(f: &[f64], g: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for t in 1..n / 2 {
            let lo = (i + n - t) % n;
            let hi = (i + t) % n;
            out[i] += (f[lo] * g[hi] - f[hi] * g[lo]) / t as f64;
        }
    }
    out
}

#[test]
fn bht_matches_double_loop() {
    for n in [8, 64] {
        let g = Grid::d1(n).unwrap();
        let (f, h) = (random_fn(g, 5), random_fn(g, 6));
        let got = bht(&f, &h).unwrap();
        for (a, b) in got.values.iter().zip(bht_oracle(&f.values, &h.values)) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
    let one = GridFn::constant(Grid::d1(64).unwrap(), 1.0);
    assert!(bht(&one, &one).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn bi_s_and_cz_match_nested_loops() {
    let n = 16;
    let g = Grid::d1(n).unwrap();
    let (f, h) = (random_fn(g, 7), random_fn(g, 8));
    let s = 0.7;
    let got = bi_s(&f, &h, s).unwrap();
    let cz = BilinearKernelOp::new(BilinearKind::BilinearCz, g).unwrap().apply(&f, &h).unwrap();
    for i in 0..n {
        let (mut a, mut c) = (0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                if j == i && k == i {
                    continue;
                }
                let (u, v) = (i as f64 - j as f64, i as f64 - k as f64);
                a += (n as f64).powf(-s) * (u.abs() + v.abs()).powf(s - 2.0) * f.values[j] * h.values[k];
                c += (u + v) / (u * u + v * v).powf(1.5) * f.values[j] * h.values[k];
            }
        }
        assert_relative_eq!(got.values[i], a, epsilon = 1e-12);
        assert_relative_eq!(cz.values[i], c, epsilon = 1e-12);
    }
    assert!(bi_s(&f, &h, 2.0).is_err());
}

#[test]
fn maximal_oracles() {
    let g = Grid::d1(16).unwrap();
    let all = CubeFamily::new(FamilyKind::AllIntervals, g).unwrap();
    let m = maximal(&GridFn::constant(g, -2.0), &all).unwrap();
    assert!(m.values.iter().all(|&v| (v - 2.0).abs() < 1e-15));
    let f = random_fn(g, 9);
    let mf = maximal(&f, &all).unwrap();
    assert!(mf.values.iter().zip(&f.values).all(|(m, v)| *m >= v.abs() - 1e-15));
    // w = (1, 4): M w = (2.5, 4), so max Mw/w = 2.5
    let g2 = Grid::d1(2).unwrap();
    let w = GridFn::new(g2, vec![1.0, 4.0]).unwrap();
    let mw = maximal(&w, &CubeFamily::new(FamilyKind::AllIntervals, g2).unwrap()).unwrap();
    assert_eq!(mw.values, vec![2.5, 4.0]);
}

#[test]
fn spectral_norm_matches_svd() {
    let n = 16;
    let g = Grid::d1(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = DenseMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    let op = LinearKernelOp::custom(g, m.clone()).unwrap();
    let est = weighted_norm(&op, &Weight::ones(g), 2.0, 2.0).unwrap();
    assert_eq!(est.method, NormMethod::ExactSpectralP2);
    assert!(!est.lower_bound);
    assert_relative_eq!(est.value, svd_max(&m), max_relative = 1e-8);

    let wv: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let w = Weight::from_values(g, wv.clone()).unwrap();
    let inv: Vec<f64> = wv.iter().map(|v| 1.0 / v).collect();
    let est = weighted_norm(&op, &w, 2.0, 2.0).unwrap();
    assert_relative_eq!(est.value, svd_max(&m.scaled(&wv, &inv)), max_relative = 1e-8);
}

#[test]
fn lanczos_on_hilbert_matches_svd() {
    let g = Grid::d1(512).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let sp = top_singular_value(&h, 1e-10);
    assert!(sp.converged);
    assert_relative_eq!(sp.sigma, svd_max(h.dense().unwrap()), max_relative = 1e-8);
    assert!(sp.sigma < std::f64::consts::PI);
}

#[test]
fn boyd_is_a_lower_bound() {
    let g = Grid::d1(64).unwrap();
    let h = LinearKernelOp::hilbert(g).unwrap();
    let exact = svd_max(h.dense().unwrap());
    let (v, _, _) = boyd_lower_bound(&h, 2.0, 2.0, &BoydOptions::default());
    assert!(v <= exact * (1.0 + 1e-12));
    assert!(v >= 0.9 * exact);
    let est = weighted_norm(&h, &Weight::ones(g), 3.0, 3.0).unwrap();
    assert!(est.lower_bound && est.value > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bilinear_ops_are_bilinear(a in -2.0f64..2.0, seed in 0u64..1000) {
        let g = Grid::d1(16).unwrap();
        let (f1, f2, h) = (random_fn(g, seed), random_fn(g, seed + 1), random_fn(g, seed + 2));
        let comb = GridFn::new(g, f1.values.iter().zip(&f2.values).map(|(x, y)| a * x + y).collect()).unwrap();
        let lhs = bht(&comb, &h).unwrap();
        let (r1, r2) = (bht(&f1, &h).unwrap(), bht(&f2, &h).unwrap());
        for i in 0..16 {
            prop_assert!((lhs.values[i] - (a * r1.values[i] + r2.values[i])).abs() <= 1e-12);
        }
        // odd kernel: swapping the slots flips the sign
        let sw = bht(&h, &f1).unwrap();
        for i in 0..16 {
            prop_assert!((sw.values[i] + r1.values[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn riesz_is_positive(v in prop::collection::vec(0.0f64..5.0, 32), alpha in 0.05f64..0.95) {
        let g = Grid::d1(32).unwrap();
        let out = riesz(&GridFn::new(g, v).unwrap(), alpha).unwrap();
        prop_assert!(out.values.iter().all(|&x| x >= 0.0));
    }
}
