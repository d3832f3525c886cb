//! One-dimensional quadrature helpers.

use crate::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Quadrature { a, b })
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫₀ᵗ (1+s)^p ds`, with the logarithmic case at `p = −1`.
pub fn power_integral(p: f64, t: f64) -> f64 {
    if p == -1.0 {
        (1.0 + t).ln()
    } else {
        ((1.0 + t).powf(p + 1.0) - 1.0) / (p + 1.0)
    }
}

/// `∫₀ᵗ (1+s)^p ln(1+s) ds` in closed form.
pub fn power_log_integral(p: f64, t: f64) -> f64 {
    let l = (1.0 + t).ln();
    if p == -1.0 {
        0.5 * l * l
    } else {
        let q = p + 1.0;
        (1.0 + t).powf(q) * (l / q - 1.0 / (q * q)) + 1.0 / (q * q)
    }
}

/// Improper integral `∫₀^∞ f` for a nonnegative integrand with a known tail
/// enclosure. The half-line is cut into geometric panels `[2^k − 1, 2^{k+1} − 1]`;
/// `tail(S)` must return lower and upper bounds on `∫_S^∞ f`. Panels are added
/// until the enclosure is narrower than `tol`, and the midpoint of the final
/// enclosure is used for the remainder.
pub fn improper_integral<F, T>(f: F, tail: T, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> (f64, f64),
{
    let mut total = 0.0;
    let mut lo = 0.0;
    for k in 0..1000 {
        let hi = 2f64.powi(k + 1) - 1.0;
        total += adaptive_simpson(&f, lo, hi, tol * 1e-3)?;
        lo = hi;
        let (tail_lo, tail_hi) = tail(lo);
        if tail_hi - tail_lo < tol {
            return Ok(total + 0.5 * (tail_lo + tail_hi));
        }
    }
    Err(Error::Quadrature { a: 0.0, b: f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_exp() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn power_integrals_match_quadrature() {
        for &p in &[-2.1, -1.0, -0.5, 0.0, 1.3] {
            let exact = power_integral(p, 3.0);
            let q = adaptive_simpson(|s| (1.0 + s).powf(p), 0.0, 3.0, 1e-13).unwrap();
            assert!((exact - q).abs() < 1e-10, "p={p}");
            let exact = power_log_integral(p, 3.0);
            let q = adaptive_simpson(|s| (1.0 + s).powf(p) * (1.0 + s).ln(), 0.0, 3.0, 1e-13)
                .unwrap();
            assert!((exact - q).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn improper_power_law() {
        let p = -2.1;
        let v = improper_integral(
            |s| (1.0 + s).powf(p),
            |s| {
                let t = (1.0 + s).powf(p + 1.0) / (-p - 1.0);
                (t, t)
            },
            1e-12,
        )
        .unwrap();
        assert!((v - 1.0 / 1.1).abs() < 1e-10);
    }
}
