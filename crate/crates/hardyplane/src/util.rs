//! Small numeric helpers shared across the crate.

/// Signed power: |x|^e * sign(x). Total on all of R for e > 0.
pub fn spow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// Relative equality with the boundary tolerance used for regime detection.
pub fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Least-squares line fit y = slope*x + intercept.
/// Returns (slope, intercept, max_abs_residual).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut max_r: f64 = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        max_r = max_r.max((y - slope * x - intercept).abs());
    }
    (slope, intercept, max_r)
}
