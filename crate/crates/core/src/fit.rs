//! Ordinary least squares on a single regressor, used for log–log rate fits.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(x, y)`. Needs at least two distinct `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need matching samples, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx })
}

/// Fits `value ≈ C · scale^rate` by regressing `ln value` on `ln scale`.
/// Returns `(rate, C)`.
pub fn power_law_fit(scale: &[f64], value: &[f64]) -> Result<(f64, f64)> {
    if scale.iter().chain(value).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("power-law fit needs positive samples".into()));
    }
    let lx: Vec<f64> = scale.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = value.iter().map(|v| v.ln()).collect();
    let line = linear_fit(&lx, &ly)?;
    Ok((line.slope, line.intercept.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(power_law_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    proptest! {
        // Scaling every value by c shifts the intercept by ln c and leaves the slope.
        #[test]
        fn scaling_changes_intercept_only(c in 1e-3f64..1e3, v in proptest::collection::vec(1e-6f64..1.0, 4)) {
            let eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let (s0, c0) = power_law_fit(&eps, &v).unwrap();
            let (s1, c1) = power_law_fit(&eps, &scaled).unwrap();
            prop_assert!((s0 - s1).abs() < 1e-9);
            prop_assert!((c1 / c0 / c - 1.0).abs() < 1e-9);
        }
    }
}
