//! Moment functions ρ, strong and weak ρ-moments, and the functional
//! `M_{p,ρ}(t) = t^p / ∫_0^t s^{p-1}/ρ(s) ds`.

use super::quad::adaptive_simpson;
use super::SparseMeasure;
use crate::error::{Result, RwError};

/// A non-decreasing continuous moment function `ρ : [0,∞) → [1,∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentFunction {
    /// `ρ_α(s) = (1+s)^α`, `α ≥ 0`.
    Power { alpha: f64 },
    /// `ρ(s) = log_[k](s)^ε` with `log_[1](s) = 1 + log(1+s)` and
    /// `log_[k] = 1 + log ∘ log_[k-1]`.
    IteratedLog { k: u32, epsilon: f64 },
    /// Tabulated ρ, piecewise linear between sample points, clamped flat
    /// beyond the last sample.
    Custom { points: Vec<(f64, f64)> },
}

impl MomentFunction {
    pub fn power(alpha: f64) -> Self {
        assert!(alpha >= 0.0, "power moment needs alpha >= 0");
        MomentFunction::Power { alpha }
    }

    pub fn iterated_log(k: u32, epsilon: f64) -> Self {
        assert!(k >= 1 && epsilon > 0.0);
        MomentFunction::IteratedLog { k, epsilon }
    }

    /// Tabulated ρ; points must be sorted in `s`, non-decreasing in value,
    /// with `ρ(0) ≥ 1`.
    pub fn custom(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(RwError::Domain("custom moment function needs sample points".into()));
        }
        if points[0].0 != 0.0 || points[0].1 < 1.0 {
            return Err(RwError::Domain("custom moment function must start at (0, >=1)".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 < w[0].1 {
                return Err(RwError::Domain("custom moment function must be non-decreasing".into()));
            }
        }
        Ok(MomentFunction::Custom { points })
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            MomentFunction::Power { alpha } => (1.0 + s).powf(*alpha),
            MomentFunction::IteratedLog { k, epsilon } => {
                iterated_log(*k, s).powf(*epsilon)
            }
            MomentFunction::Custom { points } => {
                if s <= points[0].0 {
                    return points[0].1;
                }
                match points.binary_search_by(|(x, _)| x.partial_cmp(&s).unwrap()) {
                    Ok(i) => points[i].1,
                    Err(i) => {
                        if i >= points.len() {
                            points.last().unwrap().1
                        } else {
                            let (x0, y0) = points[i - 1];
                            let (x1, y1) = points[i];
                            y0 + (y1 - y0) * (s - x0) / (x1 - x0)
                        }
                    }
                }
            }
        }
    }
}

/// `log_[k](s)` from the iterated-logarithm ladder.
pub fn iterated_log(k: u32, s: f64) -> f64 {
    let mut v = 1.0 + (1.0 + s).ln();
    for _ in 1..k {
        v = 1.0 + v.ln();
    }
    v
}

/// A moment value; `exact` is cleared when some word length could only be
/// bounded from above, making the value an upper estimate.
#[derive(Debug, Clone, Copy)]
pub struct MomentValue {
    pub value: f64,
    pub exact: bool,
}

/// Strong ρ-moment `Σ ρ(|g|) μ(g)` as an exact finite sum over the support.
/// The truncation deficit contributes reported uncertainty, not a value.
pub fn rho_moment(mu: &SparseMeasure, rho: &MomentFunction) -> Result<MomentValue> {
    let mut total = 0.0;
    let mut exact = true;
    for (g, w) in mu.atoms() {
        let wl = mu.group().word_length(g)?;
        exact &= wl.exact;
        total += rho.eval(wl.value as f64) * w;
    }
    Ok(MomentValue { value: total, exact })
}

/// Weak ρ-moment `W(ρ, μ) = sup_{s>0} s·μ({g : ρ(|g|) > s})`.
///
/// For finitely supported μ the sup over `s` of the piecewise-linear map is
/// attained at one of the jump levels `s = ρ(|g|)`, so scanning the levels
/// realized on the support is exact.
pub fn weak_rho_moment(mu: &SparseMeasure, rho: &MomentFunction) -> Result<MomentValue> {
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(mu.support_len());
    let mut exact = true;
    for (g, w) in mu.atoms() {
        let wl = mu.group().word_length(g)?;
        exact &= wl.exact;
        levels.push((rho.eval(wl.value as f64), *w));
    }
    levels.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut best = 0.0f64;
    let mut cum = 0.0;
    let mut i = 0;
    while i < levels.len() {
        let level = levels[i].0;
        while i < levels.len() && levels[i].0 == level {
            cum += levels[i].1;
            i += 1;
        }
        best = best.max(level * cum);
    }
    Ok(MomentValue { value: best, exact })
}

/// `M_{p,ρ}(t) = t^p (∫_0^t s^{p-1}/ρ(s) ds)^{-1}`, by adaptive quadrature
/// with relative error at most `1e-8`.  Satisfies `M_{p,ρ}(t) ≤ p·ρ(t)`.
pub fn m_p_rho(rho: &MomentFunction, p: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(RwError::Domain(format!("m_p_rho needs t > 0, got {t}")));
    }
    if p < 1.0 {
        return Err(RwError::Domain(format!("m_p_rho needs p >= 1, got {p}")));
    }
    let integrand = move |s: f64| s.powf(p - 1.0) / rho.eval(s);
    let integral = adaptive_simpson(&integrand, 0.0, t, 1e-9)?;
    if integral <= 0.0 {
        return Err(RwError::Numeric {
            context: "m_p_rho".into(),
            message: format!("vanishing integral at t={t}"),
        });
    }
    Ok(t.powf(p) / integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Group, GroupDescriptor};
    use crate::measure::{uniform_ball, uniform_generator, SparseMeasure};

    #[test]
    fn rho_moment_five_term_sum() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let u2 = uniform_ball(&z, 2).unwrap();
        let m = rho_moment(&u2, &MomentFunction::power(2.0)).unwrap();
        assert!(m.exact);
        assert!((m.value - 5.4).abs() < 1e-12);
    }

    #[test]
    fn weak_moment_of_point_mass_is_rho_at_zero() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let d = SparseMeasure::delta(z);
        let rho = MomentFunction::power(2.0);
        let w = weak_rho_moment(&d, &rho).unwrap();
        assert!((w.value - rho.eval(0.0)).abs() < 1e-15);
    }

    #[test]
    fn weak_moment_jump_levels_on_u1() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&z);
        // rho_1: levels {1, 2}; W = max(1*1, 2*(2/3)) = 4/3
        let w = weak_rho_moment(&u, &MomentFunction::power(1.0)).unwrap();
        assert!((w.value - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn m_p_rho_constant_rho() {
        let one = MomentFunction::power(0.0);
        assert!((m_p_rho(&one, 2.0, 7.0).unwrap() - 2.0).abs() < 1e-8);
        assert!((m_p_rho(&one, 1.0, 3.5).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn m_p_rho_closed_form_crosscheck() {
        // rho(s) = (1+s)^2, p = 2, t = 100
        let rho = MomentFunction::power(2.0);
        let got = m_p_rho(&rho, 2.0, 100.0).unwrap();
        let integral = 101f64.ln() + 1.0 / 101.0 - 1.0;
        let want = 1e4 / integral;
        assert!((got - want).abs() < 1e-6 * want);
    }

    #[test]
    fn m_p_rho_upper_bound_property() {
        for rho in [
            MomentFunction::power(0.7),
            MomentFunction::power(2.0),
            MomentFunction::iterated_log(1, 1.5),
            MomentFunction::iterated_log(2, 0.5),
        ] {
            for p in [1.0, 2.0, 3.0] {
                for t in [0.5, 4.0, 64.0, 1e4] {
                    let m = m_p_rho(&rho, p, t).unwrap();
                    assert!(
                        m <= p * rho.eval(t) * (1.0 + 1e-8),
                        "M={m} exceeds p*rho={}",
                        p * rho.eval(t)
                    );
                }
            }
        }
    }

    #[test]
    fn custom_moment_interpolates() {
        let rho = MomentFunction::custom(vec![(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]).unwrap();
        assert_eq!(rho.eval(0.0), 1.0);
        assert!((rho.eval(1.0) - 2.0).abs() < 1e-15);
        assert_eq!(rho.eval(10.0), 5.0);
    }
}
