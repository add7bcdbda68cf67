/// Compensated (Kahan) summation; the 1e-10 norm checks on 2^18-point
/// grids leave no room for naive accumulation error.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in iter {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Least-squares parabola through 5 equally spaced samples centered on
/// index 2; returns (a, b, c) of y = a + b*u + c*u^2 with u in {-2..2}.
pub(crate) fn quad_fit5(y: &[f64; 5]) -> (f64, f64, f64) {
    let m1: f64 = y.iter().sum();
    let mu = -2.0 * y[0] - y[1] + y[3] + 2.0 * y[4];
    let m2 = 4.0 * y[0] + y[1] + y[3] + 4.0 * y[4];
    // S0=5, S2=10, S4=34; denominator S0*S4 - S2^2 = 70
    let c = (5.0 * m2 - 10.0 * m1) / 70.0;
    let a = (34.0 * m1 - 10.0 * m2) / 70.0;
    let b = mu / 10.0;
    (a, b, c)
}

/// Vertex refinement of a 5-point window: returns (offset, value) with the
/// offset in sample units relative to the center, clamped to the window.
pub(crate) fn refine_extremum(y: &[f64; 5]) -> (f64, f64) {
    let (a, b, c) = quad_fit5(y);
    if c == 0.0 {
        return (0.0, y[2]);
    }
    let mut u = -b / (2.0 * c);
    if !(-2.0..=2.0).contains(&u) {
        u = u.clamp(-2.0, 2.0);
    }
    (u, a + b * u + c * u * u)
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = kahan_sum(a.iter().copied()) / n;
    let mb = kahan_sum(b.iter().copied()) / n;
    let cov = kahan_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let va = kahan_sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let vb = kahan_sum(b.iter().map(|y| (y - mb) * (y - mb)));
    cov / (va * vb).sqrt()
}
