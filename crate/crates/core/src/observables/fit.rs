//! Least-squares line fits behind the correlation length and power-law
//! exponents.

use crate::error::{Error, Result};

/// Straight-line least squares fit `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the samples from the line.
    pub rms: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<Line> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::dim(format_args!("{} abscissae for {} values", n, ys.len())));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(Line {
        slope,
        intercept,
        rms,
        points: n,
    })
}

/// Fit of a correlator over a window of separations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    /// Correlation length, `-1/slope` of `ln C` against `R`. Infinite when
    /// the fit was a power law.
    pub xi: f64,
    /// Power-law exponent, `-slope` of `ln C` against `ln R`.
    pub eta: f64,
    /// Prefactor of the fitted form.
    pub amplitude: f64,
    pub window: (f64, f64),
    pub residual: f64,
}

fn window_points(samples: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    if !(window.0 <= window.1) {
        return Err(Error::InvalidArgument(format!("empty fit window {window:?}")));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(r, _)| r >= window.0 && r <= window.1)
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "fit window {window:?} holds {} samples, need 3",
            pts.len()
        )));
    }
    if let Some(&(r, c)) = pts.iter().find(|&&(_, c)| !(c > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "non-positive correlator {c:e} at R={r} in fit window"
        )));
    }
    Ok(pts)
}

/// `C(R) ~ A exp(-R/xi)` over `window` (inclusive).
pub fn fit_correlation_length(samples: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = window_points(samples, window)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    if !(line.slope < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correlator does not decay (slope {:e})",
            line.slope
        )));
    }
    Ok(FitResult {
        xi: -1.0 / line.slope,
        eta: f64::NAN,
        amplitude: line.intercept.exp(),
        window,
        residual: line.rms,
    })
}

/// `C(R) ~ A R^{-eta}` over `window` (inclusive, `R > 0`).
pub fn fit_power_law(samples: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = window_points(samples, window)?;
    if pts.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::InvalidArgument("power-law window must exclude R <= 0".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(FitResult {
        xi: f64::INFINITY,
        eta: -line.slope,
        amplitude: line.intercept.exp(),
        window,
        residual: line.rms,
    })
}

/// Default windows from an estimate of the correlation length: exponential
/// tail on `[2 xi, 4 xi]`, power law on `[3, xi / 3]`.
pub fn default_windows(xi_est: f64) -> ((f64, f64), (f64, f64)) {
    ((2.0 * xi_est, 4.0 * xi_est), (3.0, xi_est / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64) -> f64, rs: std::ops::RangeInclusive<usize>) -> Vec<(f64, f64)> {
        rs.map(|r| (r as f64, f(r as f64))).collect()
    }

    #[test]
    fn pure_exponential() {
        let s = table(|r| (-r / 50.0).exp(), 0..=300);
        let f = fit_correlation_length(&s, (100.0, 200.0)).unwrap();
        assert!((f.xi - 50.0).abs() < 1e-9);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn amplitude_is_ignored() {
        let s = table(|r| 3.0 * (-r / 7.0).exp(), 0..=40);
        let f = fit_correlation_length(&s, (14.0, 28.0)).unwrap();
        assert!((f.xi - 7.0).abs() < 1e-9);
        assert!((f.amplitude - 3.0).abs() < 1e-9);
    }

    #[test]
    fn pure_power_law() {
        let s = table(|r| r.powf(-0.25), 1..=100);
        let f = fit_power_law(&s, (3.0, 30.0)).unwrap();
        assert!((f.eta - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows() {
        let s = table(|r| (-r).exp(), 0..=10);
        assert!(fit_correlation_length(&s, (0.0, 1.0)).is_err());
        assert!(fit_correlation_length(&s, (5.0, 2.0)).is_err());
        let neg = table(|r| 1.0 - r / 5.0, 0..=10);
        assert!(fit_correlation_length(&neg, (0.0, 10.0)).is_err());
    }
}
