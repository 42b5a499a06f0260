//! Least-squares fit of `C(σ) = a·exp(−b·σ)` and coefficients of determination.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 50;
const CONVERGENCE: f64 = 1e-10;

/// Fitted exponential law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    /// `1 − SS_res / SS_tot` on the original scale.
    pub r_squared: f64,
    /// The same statistic for `ln C` against `ln a − b·σ`.
    pub r_squared_log: f64,
    /// Gauss–Newton iterations spent refining the log-linear seed.
    pub iterations: usize,
    /// Set when refinement failed and the log-linear solution was kept.
    pub degraded: bool,
}

impl ExpFit {
    pub fn predict(&self, sigma: f64) -> f64 {
        self.a * (-self.b * sigma).exp()
    }
}

fn validate(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "exponential fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && *y > 0.0))
    {
        return Err(Error::domain(format!(
            "point ({x}, {y}) is not finite with positive C"
        )));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("duplicate sigma values"));
    }
    Ok(())
}

/// Ordinary least squares of `ln C` on `σ`; returns `(a, b)`.
pub fn log_linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    validate(points)?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        let dx = x - mx;
        (sxy + dx * (y.ln() - my), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok((intercept.exp(), -slope))
}

fn sum_sq_residuals(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points
        .iter()
        .map(|&(x, y)| {
            let r = y - a * (-b * x).exp();
            r * r
        })
        .sum()
}

/// Log-linear seed followed by Gauss–Newton on the original scale.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExpFit> {
    let (a0, b0) = log_linear_fit(points)?;
    let seed_sse = sum_sq_residuals(points, a0, b0);

    let (mut a, mut b) = (a0, b0);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // J^T J and J^T r for residual r = y - a e^{-bx}
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in points {
            let e = (-b * x).exp();
            let da = e;
            let db = -a * x * e;
            let r = y - a * e;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let det = jaa * jbb - jab * jab;
        if !(det.is_finite() && det != 0.0) {
            break;
        }
        let step_a = (jbb * ga - jab * gb) / det;
        let step_b = (jaa * gb - jab * ga) / det;
        a += step_a;
        b += step_b;
        if !(a.is_finite() && b.is_finite()) {
            break;
        }
        if step_a.abs() <= CONVERGENCE * a.abs().max(f64::MIN_POSITIVE)
            && step_b.abs() <= CONVERGENCE * b.abs().max(f64::MIN_POSITIVE)
        {
            converged = true;
            break;
        }
    }

    let refined_ok = converged
        && a > 0.0
        && sum_sq_residuals(points, a, b) <= seed_sse * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let (a, b, degraded) = if refined_ok {
        (a, b, false)
    } else {
        (a0, b0, true)
    };

    Ok(ExpFit {
        a,
        b,
        r_squared: r_squared(points, a, b)?,
        r_squared_log: r_squared_log(points, a, b)?,
        iterations,
        degraded,
    })
}

/// `1 − Σ(y − ŷ)² / Σ(y − ȳ)²` with arbitrary predictions.
pub fn r_squared_with<F>(points: &[(f64, f64)], predict: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if points.len() < 2 {
        return Err(Error::domain("R² needs at least 2 points"));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedRSquared);
    }
    let ss_res: f64 = points.iter().map(|&(x, y)| (y - predict(x)).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Original-scale R² of `a·exp(−b·x)` against the points.
pub fn r_squared(points: &[(f64, f64)], a: f64, b: f64) -> Result<f64> {
    r_squared_with(points, |x| a * (-b * x).exp())
}

/// R² of `ln a − b·x` against `ln y`.
pub fn r_squared_log(points: &[(f64, f64)], a: f64, b: f64) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y.ln())).collect();
    let ln_a = a.ln();
    r_squared_with(&logs, |x| ln_a - b * x)
}
