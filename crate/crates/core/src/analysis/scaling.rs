//! Sweep-level fits: energy against |log ε| and observed convergence orders.

use crate::error::AnalysisError;
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingFit<S> {
    pub slope: S,
    pub intercept: S,
    /// Root-mean-square misfit of the linear model.
    pub residual: S,
}

/// Least-squares fit of `energy ≈ slope·|log ε| + intercept`.
pub fn energy_scaling<S: Scalar>(points: &[(S, S)]) -> Result<ScalingFit<S>, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewSweepPoints(points.len()));
    }
    let n = S::from_index(points.len());
    let xs: Vec<S> = points.iter().map(|&(e, _)| e.ln().abs()).collect();
    let ys: Vec<S> = points.iter().map(|&(_, y)| y).collect();
    let sx: S = xs.iter().copied().sum();
    let sy: S = ys.iter().copied().sum();
    let sxx: S = xs.iter().map(|&x| x * x).sum();
    let sxy: S = xs.iter().zip(&ys).map(|(&x, &y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ss = S::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - slope * x - intercept;
        ss = ss + r * r;
    }
    Ok(ScalingFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Observed orders from consecutive (ε, error) pairs:
/// `order = ln(e_i/e_{i+1}) / ln(ε_i/ε_{i+1})`.
pub fn observed_orders<S: Scalar>(errors: &[(S, S)]) -> Vec<S> {
    errors
        .windows(2)
        .map(|w| {
            let (eps0, e0) = w[0];
            let (eps1, e1) = w[1];
            (e0 / e1).ln() / (eps0 / eps1).ln()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.ln().abs() + 0.7))
            .collect();
        let fit = energy_scaling(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 0.7).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(
            energy_scaling(&[(0.1f64, 1.0), (0.05, 2.0)]),
            Err(AnalysisError::TooFewSweepPoints(2))
        ));
    }

    #[test]
    fn orders_from_halving() {
        let orders = observed_orders(&[(0.1f64, 4.0e-2), (0.05, 1.0e-2), (0.025, 0.25e-2)]);
        assert_eq!(orders.len(), 2);
        assert!((orders[0] - 2.0).abs() < 1e-12);
        assert!((orders[1] - 2.0).abs() < 1e-12);
    }
}
