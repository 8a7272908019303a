//! Small numerical kernels shared by the modules: extrapolation, finite
//! differences, convergence-order fits and Gauss-Legendre rules.

use crate::{Error, Result};

/// Polynomial (Neville) extrapolation of samples `values[i] = g(steps[i])`
/// to `g(0)`.
///
/// Returns the extrapolated value and the difference to the extrapolation
/// that drops the coarsest sample, which serves as an error estimate.
pub fn extrapolate_to_zero(steps: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if steps.len() != values.len() || steps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "extrapolation needs at least two matched samples, got {} steps and {} values",
            steps.len(),
            values.len()
        )));
    }
    let full = neville_at_zero(steps, values);
    let reduced = neville_at_zero(&steps[1..], &values[1..]);
    Ok((full, (full - reduced).abs()))
}

fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Second-order central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Eighth-order central-difference weights for the first derivative,
/// offsets 1..=4 (the stencil is antisymmetric).
pub const D1_ORDER8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Least-squares slope of `ln y` against `ln x`.
///
/// Non-positive `y` values are rejected since the fit is meaningless there.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(
            "a log-log fit needs at least two points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Argument(
            "log-log fit requires finite positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("log-log fit with identical abscissae".into()));
    }
    Ok(sxy / sxx)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomials_exactly() {
        let g = |h: f64| 3.0 - 2.0 * h + 0.5 * h * h;
        let hs = [0.4, 0.2, 0.1];
        let vs: Vec<f64> = hs.iter().map(|&h| g(h)).collect();
        let (v, err) = extrapolate_to_zero(&hs, &vs).unwrap();
        assert!((v - 3.0).abs() < 1e-13);
        // the two-point fit on {0.2, 0.1} misses g(0) by 0.5 * 0.2 * 0.1
        assert!((err - 0.01).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_to_degree_2n_minus_1() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powf(-1.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn order8_stencil_is_exact_on_degree_8() {
        let f = |x: f64| x.powi(8) - 3.0 * x.powi(5) + x;
        let df = |x: f64| 8.0 * x.powi(7) - 15.0 * x.powi(4) + 1.0;
        let (x, h) = (0.7, 0.1);
        let d: f64 = D1_ORDER8
            .iter()
            .enumerate()
            .map(|(i, c)| c * (f(x + (i + 1) as f64 * h) - f(x - (i + 1) as f64 * h)))
            .sum::<f64>()
            / h;
        assert!((d - df(x)).abs() < 1e-10);
    }
}
