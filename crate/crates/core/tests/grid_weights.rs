use approx::assert_relative_eq;
use commlab::grid::{average, sup_over, Cube, CubeFamily, FamilyKind, Grid, GridFn, PrefixSums};
use commlab::verify::{two_value_weight, weight_for_a2, WeightCorpus};
use commlab::weights::{
    a_pq_vector_constant, a_pr_constant, a_vector_constant, ap_constant, apq_constant, check_bht_admissible,
    membership_restricted, power, rh_constant, ExponentProfile, VectorWeight, Weight,
};

fn w14() -> Weight {
    Weight::from_values(Grid::d1(2).unwrap(), vec![1.0, 4.0]).unwrap()
}

fn all(n: usize) -> CubeFamily {
    CubeFamily::new(FamilyKind::AllIntervals, Grid::d1(n).unwrap()).unwrap()
}

/// Brute-force `sup_Q avg(w) avg(w^{1/(1-p)})^{p-1}` over all intervals.
fn ap_oracle(w: &[f64], p: f64) -> f64 {
    let n = w.len();
    let mut best = 0.0f64;
    for s in 0..n {
        for e in s + 1..=n {
            let len = (e - s) as f64;
            let a: f64 = w[s..e].iter().sum::<f64>() / len;
            let b: f64 = w[s..e].iter().map(|v| v.powf(1.0 / (1.0 - p))).sum::<f64>() / len;
            best = best.max(a * b.powf(p - 1.0));
        }
    }
    best
}

#[test]
fn averages() {
    let g = Grid::d1(2).unwrap();
    let f = GridFn::new(g, vec![1.0, 4.0]).unwrap();
    assert_eq!(average(&f, &g.whole()).unwrap(), 2.5);
    let g8 = Grid::d1(8).unwrap();
    let ind = GridFn::from_fn(g8, |x, _| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
    assert_eq!(average(&ind, &g8.whole()).unwrap(), 0.5);
    let c = GridFn::constant(g8, 3.25);
    for q in all(8).enumerate() {
        assert_relative_eq!(average(&c, &q).unwrap(), 3.25, max_relative = 1e-15);
    }
    assert!(average(&c, &Cube::interval(6, 4)).is_err());
}

#[test]
fn family_counts() {
    assert_eq!(all(4).enumerate().len(), 10);
    let dy = CubeFamily::new(FamilyKind::DyadicIntervals, Grid::d1(4).unwrap()).unwrap();
    assert_eq!(dy.enumerate().len(), 7);
    let dr = CubeFamily::new(FamilyKind::DyadicRectangles, Grid::d2(2).unwrap()).unwrap();
    assert_eq!(dr.enumerate().len(), 9);
    let sq = CubeFamily::new(FamilyKind::DyadicSquares, Grid::d2(4).unwrap()).unwrap();
    assert_eq!(sq.enumerate().len(), 16 + 4 + 1);
    assert_eq!(all(64).count(), 64 * 65 / 2);
}

#[test]
fn prefix_sums_beat_naive_cancellation() {
    let g = Grid::d1(4).unwrap();
    let ps = PrefixSums::new(g, &[1e16, 1.0, -1e16, 1.0]);
    assert_eq!(ps.sum(&Cube::interval(0, 4)), 2.0);
    assert_eq!(ps.sum(&Cube::interval(1, 1)), 1.0);
}

#[test]
fn sup_is_deterministic_with_nan() {
    let cubes = all(8).enumerate();
    let e = sup_over(&cubes, |q| if q.volume() == 3 { f64::NAN } else { 1.0 });
    assert!(e.value.is_nan());
    assert_eq!(e.cube.volume(), 3);
    assert_eq!(e.cube, cubes.iter().copied().find(|q| q.volume() == 3).unwrap());
}

#[test]
fn ap_two_point_oracle() {
    assert_relative_eq!(ap_constant(&w14(), 2.0, &all(2)).unwrap().value, 1.5625, max_relative = 1e-14);
    assert_eq!(ap_constant(&Weight::ones(Grid::d1(16).unwrap()), 3.0, &all(16)).unwrap().value, 1.0);
}

#[test]
fn ap_matches_brute_force() {
    let corpus = WeightCorpus::new(Grid::d1(32).unwrap(), 3);
    for (w, _) in corpus.take(12).unwrap() {
        for p in [1.5, 2.0, 3.0] {
            let got = ap_constant(&w, p, &all(32)).unwrap().value;
            assert_relative_eq!(got, ap_oracle(w.values(), p), max_relative = 1e-11);
        }
    }
}

#[test]
fn rh_oracles() {
    assert_relative_eq!(rh_constant(&w14(), 2.0, &all(2)).unwrap().value, 8.5f64.sqrt() / 2.5, max_relative = 1e-14);
    assert_relative_eq!(rh_constant(&w14(), f64::INFINITY, &all(2)).unwrap().value, 1.6, max_relative = 1e-14);
}

#[test]
fn apq_two_point_oracle() {
    // p = q = 2: sup avg(w^2) avg(w^{-2})
    let whole = (8.5f64).sqrt() * ((1.0 + 1.0 / 16.0) / 2.0f64).sqrt();
    let got = apq_constant(&w14(), 2.0, 2.0, &all(2)).unwrap().value;
    assert_relative_eq!(got, whole * whole, max_relative = 1e-14);
}

#[test]
fn two_value_hits_target_a2() {
    let g = Grid::d1(64).unwrap();
    for c in [1.0, 3.0, 50.0] {
        let w = two_value_weight(g, weight_for_a2(c)).unwrap();
        assert_relative_eq!(ap_constant(&w, 2.0, &all(64)).unwrap().value, c, max_relative = 1e-10);
    }
}

#[test]
fn vector_constant_oracle_and_holder() {
    let prof = ExponentProfile::multilinear(vec![2.0, 2.0]).unwrap();
    let vw = VectorWeight::new(vec![w14(), w14()], prof.clone()).unwrap();
    // p = 1, nu = w, sigma_j = w^{-1} with exponent 1/2 each: avg(w) avg(w^{-1}).
    let mut oracle = 0.0f64;
    for (s, e) in [(0usize, 1usize), (1, 2), (0, 2)] {
        let v = &[1.0, 4.0][s..e];
        let l = v.len() as f64;
        let a = v.iter().sum::<f64>() / l;
        let b = v.iter().map(|x| 1.0 / x).sum::<f64>() / l;
        oracle = oracle.max(a * b);
    }
    let got = a_vector_constant(&vw, &all(2)).unwrap().value;
    assert_relative_eq!(got, oracle, max_relative = 1e-14);

    let corpus = WeightCorpus::new(Grid::d1(32).unwrap(), 9).take(8).unwrap();
    for pair in corpus.chunks(2) {
        let vw = VectorWeight::new(vec![pair[0].0.clone(), pair[1].0.clone()], prof.clone()).unwrap();
        let lhs = a_vector_constant(&vw, &all(32)).unwrap().value;
        let rhs = ap_constant(&pair[0].0, 2.0, &all(32)).unwrap().value.sqrt()
            * ap_constant(&pair[1].0, 2.0, &all(32)).unwrap().value.sqrt();
        assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }
}

#[test]
fn apr_degenerates_to_ap() {
    let corpus = WeightCorpus::new(Grid::d1(32).unwrap(), 4).take(6).unwrap();
    for pair in corpus.chunks(2) {
        let prof = ExponentProfile::multilinear(vec![3.0, 4.0]).unwrap();
        let vw = VectorWeight::new(vec![pair[0].0.clone(), pair[1].0.clone()], prof.clone()).unwrap();
        let a = a_vector_constant(&vw, &all(32)).unwrap().value;
        let vr = VectorWeight::new(vec![pair[0].0.clone(), pair[1].0.clone()], prof.with_r(vec![1.0, 1.0, 1.0]).unwrap())
            .unwrap();
        let r = a_pr_constant(&vr, &all(32)).unwrap().value;
        assert_relative_eq!(r, a, max_relative = 1e-9);
    }
}

#[test]
fn apq_vector_is_finite() {
    let corpus = WeightCorpus::new(Grid::d1(16).unwrap(), 1).take(2).unwrap();
    let prof = ExponentProfile::multilinear(vec![2.0, 2.0]).unwrap();
    let vw = VectorWeight::new(corpus.into_iter().map(|(w, _)| w).collect(), prof).unwrap();
    let v = a_pq_vector_constant(&vw, 2.0, &all(16)).unwrap().value;
    assert!(v.is_finite() && v > 0.0);
}

#[test]
fn bht_admissible_region() {
    assert!(check_bht_admissible([2.0, 2.0, 2.0]));
    assert!(!check_bht_admissible([1.01, 1.01, 1.01]));
    assert!(check_bht_admissible([4.0, 4.0, 1.5]));
}

#[test]
fn membership_forms_agree() {
    let fam = all(64);
    for (w, d) in WeightCorpus::new(Grid::d1(64).unwrap(), 2).take(50).unwrap() {
        let m = membership_restricted(&w, 3.0, 1.5, 6.0, &fam).unwrap();
        assert!(m.member && m.member_direct, "{d}");
        assert!(m.sandwich_holds(1e-9), "{d}: {m:?}");
        let inf = membership_restricted(&w, 3.0, 1.5, f64::INFINITY, &fam).unwrap();
        assert_eq!(inf.constant, ap_constant(&w, 2.0, &fam).unwrap().value);
    }
    assert!(membership_restricted(&w14(), 2.0, 2.0, 4.0, &all(2)).is_err());
}

#[test]
fn power_weight_composes() {
    let w = w14();
    let w2 = power(&w, 2.0).unwrap();
    assert_eq!(w2.values(), &[1.0, 16.0]);
}
