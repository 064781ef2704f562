//! Small numeric helpers: error-free transformations, compensated sums and
//! exponent arithmetic.

/// Double-double value `hi + lo` with |lo| ≤ ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DD { hi, lo }
    }

    #[inline]
    pub fn add(self, o: DD) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Self {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, o: DD) -> Self {
        self.add(o.neg())
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().fold(DD::ZERO, |acc, &x| acc.add_f64(x)).to_f64()
}

/// Compensated sum of an iterator.
pub fn sum_iter<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().fold(DD::ZERO, |acc, x| acc.add_f64(x)).to_f64()
}

/// Hölder conjugate; `conj(1) = ∞`, `conj(∞) = 1`.
pub fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Counting-measure ℓ^p norm (not normalized).
pub fn lp_norm(xs: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    let m = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    // scale by the max to keep powers in range
    let s = sum_iter(xs.iter().map(|x| (x.abs() / m).powf(p)));
    m * s.powf(1.0 / p)
}

pub fn l2_norm(xs: &[f64]) -> f64 {
    lp_norm(xs, 2.0)
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Relative error ‖a − b‖₂ / max(‖b‖₂, floor).
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(&d) / l2_norm(b).max(floor)
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `a ≤ b` up to relative slack `tol`.
pub fn le_rel(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * b.abs().max(a.abs())
}
