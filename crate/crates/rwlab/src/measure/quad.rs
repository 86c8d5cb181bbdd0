//! Small numerical helpers: adaptive Simpson quadrature and `ln Γ`.

use crate::error::{Result, RwError};

/// Adaptive Simpson integration of `f` over `[a, b]` to the requested
/// relative tolerance (with a small absolute floor for integrals near zero).
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(RwError::Numeric {
            context: "adaptive_simpson".into(),
            message: format!("bad interval [{a}, {b}]"),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut err_budget = rel_tol * whole.abs().max(1e-300);
    if err_budget == 0.0 {
        err_budget = 1e-300;
    }
    let v = recurse(f, a, b, fa, fm, fb, whole, err_budget.max(1e-16 * whole.abs()), 60);
    if v.is_nan() {
        return Err(RwError::Numeric {
            context: "adaptive_simpson".into(),
            message: "quadrature did not converge".into(),
        });
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 {
        return f64::NAN;
    }
    if delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    let l = recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1);
    let r = recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
    l + r
}

/// Integrate `exp(log_f(x))` over `[a, b]` stably by factoring out the peak
/// of `log_f`.  Returns the integral's natural logarithm (or `-inf` when the
/// integral vanishes).
pub fn log_integral_exp(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    // probe for the maximum of log_f on a coarse grid
    let n = 64;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        peak = peak.max(log_f(x));
    }
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let g = |x: f64| (log_f(x) - peak).exp();
    let v = adaptive_simpson(&g, a, b, rel_tol)?;
    if v <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(peak + v.ln())
}

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7, double precision).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}
