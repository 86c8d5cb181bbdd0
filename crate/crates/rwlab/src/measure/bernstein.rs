//! Bernstein functions, their subordination coefficients and subordinated
//! measures.
//!
//! A Bernstein function with `a = 0` is `f(s) = b·s + ∫ (1 - e^{-st}) ν(dt)`
//! with drift `b ≥ 0` and Lévy measure ν.  When `f(0) = 0` and `f(1) = 1`,
//! replacing the generator of a walk by `f` of it produces the subordinated
//! measure `φ_f = Σ_{n≥1} c(f,n) φ^{(n)}`, where the coefficients come from
//! the Taylor series `1 - f(1-x) = Σ c(f,n) x^n`, i.e.
//! `c(f,1) = b + ∫ t e^{-t} ν(dt)` and `c(f,n) = (1/n!) ∫ t^n e^{-t} ν(dt)`.

use super::quad::{adaptive_simpson, ln_factorial, ln_gamma, log_integral_exp};
use super::SparseMeasure;
use crate::conv::{convolve, TruncationPolicy};
use crate::error::{Result, RwError};
use crate::group::GroupElement;
use std::collections::BTreeMap;

/// Specification of a Bernstein function with `f(0) = 0`, `f(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum BernsteinSpec {
    /// `f(s) = s` (pure drift, `b = 1`, `ν = 0`).
    Identity,
    /// `f(s) = s^α`, `α ∈ (0,1)`, with Lévy density `α/Γ(1-α) · t^{-1-α}`.
    Power { alpha: f64 },
    /// Localized power: Lévy measure `κ(α,t)·1_{(t,2t)}(s)·s^{-α-1} ds` with
    /// `κ(α,t) = α (1 - 2^{-α})^{-1} t^α` and matching drift `b_t^α`.
    Localized { alpha: f64, t: f64 },
    /// Normalized tail `ν_t = ν|_{(t,∞)} / ν((t,∞))` of the base spec's Lévy
    /// measure, with drift `∫ e^{-τ} ν_t(dτ)`.
    TailNormalized { base: Box<BernsteinSpec>, cutoff: f64 },
}

impl BernsteinSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(RwError::Domain(format!("power Bernstein needs alpha in (0,1), got {alpha}")));
        }
        Ok(BernsteinSpec::Power { alpha })
    }

    pub fn localized(alpha: f64, t: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) || !(t > 0.0) {
            return Err(RwError::Domain(format!(
                "localized Bernstein needs alpha in (0,1) and t > 0, got ({alpha}, {t})"
            )));
        }
        Ok(BernsteinSpec::Localized { alpha, t })
    }

    pub fn tail_normalized(base: BernsteinSpec, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(RwError::Domain("tail cutoff must be positive".into()));
        }
        if matches!(base, BernsteinSpec::Identity) {
            return Err(RwError::Domain("identity subordinator has no Lévy tail".into()));
        }
        Ok(BernsteinSpec::TailNormalized { base: Box::new(base), cutoff })
    }

    /// Lévy density at `s` (zero outside the support interval).
    fn levy_density(&self, s: f64) -> f64 {
        match self {
            BernsteinSpec::Identity => 0.0,
            BernsteinSpec::Power { alpha } => {
                if s <= 0.0 {
                    0.0
                } else {
                    alpha / (ln_gamma(1.0 - alpha)).exp() * s.powf(-1.0 - alpha)
                }
            }
            BernsteinSpec::Localized { alpha, t } => {
                if s > *t && s < 2.0 * t {
                    let kappa = alpha * t.powf(*alpha) / (1.0 - 2f64.powf(-alpha));
                    kappa * s.powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            BernsteinSpec::TailNormalized { base, cutoff } => {
                if s <= *cutoff {
                    0.0
                } else {
                    base.levy_density(s) / base.levy_tail_mass(*cutoff)
                }
            }
        }
    }

    /// `ν((t, ∞))` for the underlying Lévy measure.
    fn levy_tail_mass(&self, t: f64) -> f64 {
        match self {
            BernsteinSpec::Identity => 0.0,
            BernsteinSpec::Power { alpha } => t.powf(-alpha) / (ln_gamma(1.0 - alpha)).exp(),
            BernsteinSpec::Localized { alpha, t: t0 } => {
                let lo = t.max(*t0);
                let hi = 2.0 * t0;
                if lo >= hi {
                    return 0.0;
                }
                let kappa = alpha * t0.powf(*alpha) / (1.0 - 2f64.powf(-alpha));
                kappa * (lo.powf(-alpha) - hi.powf(-alpha)) / alpha
            }
            BernsteinSpec::TailNormalized { base, cutoff } => {
                base.levy_tail_mass(t.max(*cutoff)) / base.levy_tail_mass(*cutoff)
            }
        }
    }

    /// Support interval of the Lévy measure (for quadrature limits).
    fn levy_support(&self) -> (f64, f64) {
        match self {
            BernsteinSpec::Identity => (0.0, 0.0),
            BernsteinSpec::Power { .. } => (0.0, f64::INFINITY),
            BernsteinSpec::Localized { t, .. } => (*t, 2.0 * t),
            BernsteinSpec::TailNormalized { base, cutoff } => {
                let (lo, hi) = base.levy_support();
                (lo.max(*cutoff), hi)
            }
        }
    }

    /// Drift coefficient `b`.
    fn drift(&self) -> Result<f64> {
        match self {
            BernsteinSpec::Identity => Ok(1.0),
            BernsteinSpec::Power { .. } => Ok(0.0),
            BernsteinSpec::Localized { alpha, t } => {
                // b_t^alpha = kappa * \int_t^{2t} e^{-u} u^{-alpha-1} du
                let kappa = alpha * t.powf(*alpha) / (1.0 - 2f64.powf(-alpha));
                let v = adaptive_simpson(&|u: f64| (-u).exp() * u.powf(-1.0 - alpha), *t, 2.0 * t, 1e-11)?;
                Ok(kappa * v)
            }
            BernsteinSpec::TailNormalized { .. } => {
                // b = \int e^{-tau} nu_t(dtau)
                let (lo, hi) = self.levy_support();
                let hi = finite_upper(lo, hi, 0.0);
                adaptive_simpson(&|u: f64| (-u).exp() * self.levy_density(u), lo, hi, 1e-11)
            }
        }
    }

    /// Evaluate `f(s) = b s + ∫ (1 - e^{-su}) ν(du)` (quadrature where no
    /// closed form exists).
    pub fn eval(&self, s: f64) -> Result<f64> {
        match self {
            BernsteinSpec::Identity => Ok(s),
            BernsteinSpec::Power { alpha } => Ok(s.powf(*alpha)),
            _ => {
                let b = self.drift()?;
                let (lo, hi) = self.levy_support();
                let hi = finite_upper(lo, hi, 0.0);
                if s == 0.0 {
                    return Ok(0.0);
                }
                let v = adaptive_simpson(
                    &|u: f64| (-(-s * u).exp_m1()) * self.levy_density(u),
                    lo,
                    hi,
                    1e-11,
                )?;
                Ok(b * s + v)
            }
        }
    }

    /// Numeric verification of `f(0) = 0`, `f(1) = 1` to `1e-10`.
    pub fn verify_normalization(&self) -> Result<()> {
        let f1 = self.eval(1.0)?;
        if (f1 - 1.0).abs() > 1e-10 {
            return Err(RwError::Numeric {
                context: "bernstein normalization".into(),
                message: format!("f(1) = {f1}, expected 1"),
            });
        }
        Ok(())
    }
}

/// Quadrature cutoff for `∫ ... e^{-u} ν(du)`-type integrals: beyond
/// `max(hi_needed, 60 + 4n)` the integrand is below 1e-260 of the peak.
fn finite_upper(lo: f64, hi: f64, n: f64) -> f64 {
    if hi.is_finite() {
        hi
    } else {
        (lo + 60.0 + 4.0 * n).max(8.0 * n).max(120.0)
    }
}

/// Subordination coefficients `c(f, 1..N)` with the reported tail
/// `1 - Σ_{n<=N} c(f,n)`.
#[derive(Debug, Clone)]
pub struct BernsteinCoefficients {
    /// `c[i]` is `c(f, i+1)`.
    pub c: Vec<f64>,
    /// Coefficient mass beyond `N` (non-negative since `Σ c = 1`).
    pub tail: f64,
}

impl BernsteinCoefficients {
    pub fn coefficient(&self, n: usize) -> f64 {
        self.c[n - 1]
    }
}

/// Coefficients by the closed-form binomial recursion when available
/// (power / identity), by quadrature otherwise.
pub fn bernstein_coefficients(spec: &BernsteinSpec, n_terms: usize) -> Result<BernsteinCoefficients> {
    if n_terms == 0 {
        return Err(RwError::Domain("need at least one coefficient".into()));
    }
    match spec {
        BernsteinSpec::Identity => {
            let mut c = vec![0.0; n_terms];
            c[0] = 1.0;
            Ok(BernsteinCoefficients { c, tail: 0.0 })
        }
        BernsteinSpec::Power { alpha } => {
            // 1 - (1-x)^alpha = sum c_n x^n, c_1 = alpha,
            // c_{n+1} = c_n (n - alpha) / (n + 1): all non-negative.
            let mut c = Vec::with_capacity(n_terms);
            let mut cur = *alpha;
            for n in 1..=n_terms {
                c.push(cur);
                cur *= (n as f64 - alpha) / (n as f64 + 1.0);
            }
            let sum: f64 = c.iter().sum();
            Ok(BernsteinCoefficients { c, tail: (1.0 - sum).max(0.0) })
        }
        _ => bernstein_coefficients_quadrature(spec, n_terms),
    }
}

/// Coefficients by direct quadrature of `c(f,n) = (1/n!) ∫ t^n e^{-t} ν(dt)`
/// (plus the drift in `c(f,1)`).  Exercised as the independent cross-check
/// of the closed form; integrals are evaluated in log space so large `n`
/// stays finite.
pub fn bernstein_coefficients_quadrature(
    spec: &BernsteinSpec,
    n_terms: usize,
) -> Result<BernsteinCoefficients> {
    if n_terms == 0 {
        return Err(RwError::Domain("need at least one coefficient".into()));
    }
    if matches!(spec, BernsteinSpec::Identity) {
        return bernstein_coefficients(spec, n_terms);
    }
    let (lo, hi) = spec.levy_support();
    let mut c = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let nf = n as f64;
        let upper = finite_upper(lo, hi, nf);
        let integral = if lo == 0.0 {
            // split the endpoint singularity of power-law densities:
            // on (0,1] substitute u = tau^{1-alpha} for n = 1
            let alpha = match spec {
                BernsteinSpec::Power { alpha } => *alpha,
                _ => unreachable!("only the power spec has support down to 0"),
            };
            let head = if n == 1 {
                // \int_0^1 tau^{-alpha} e^{-tau} dtau * alpha/Gamma(1-alpha)
                let g = ln_gamma(1.0 - alpha).exp();
                let sub = adaptive_simpson(
                    &|u: f64| (-(u.powf(1.0 / (1.0 - alpha)))).exp(),
                    0.0,
                    1.0,
                    1e-12,
                )?;
                alpha / g * sub / (1.0 - alpha)
            } else {
                adaptive_simpson(
                    &|tau: f64| tau.powf(nf) * (-tau).exp() * spec.levy_density(tau),
                    0.0,
                    1.0,
                    1e-12,
                )?
            };
            let tail_part = log_integral_exp(
                &|tau: f64| nf * tau.ln() - tau + spec.levy_density(tau).max(1e-300).ln(),
                1.0,
                upper,
                1e-11,
            )?;
            head + tail_part.exp()
        } else {
            let l = log_integral_exp(
                &|tau: f64| {
                    let d = spec.levy_density(tau);
                    if d <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        nf * tau.ln() - tau + d.ln()
                    }
                },
                lo,
                upper,
                1e-11,
            )?;
            l.exp()
        };
        let mut coeff = (integral.ln() - ln_factorial(n as u64)).exp();
        if integral == 0.0 {
            coeff = 0.0;
        }
        if n == 1 {
            coeff += spec.drift()?;
        }
        if coeff < -1e-12 {
            return Err(RwError::Numeric {
                context: "bernstein_coefficients".into(),
                message: format!("negative coefficient c({n}) = {coeff}"),
            });
        }
        c.push(coeff.max(0.0));
    }
    let sum: f64 = c.iter().sum();
    if sum > 1.0 + 1e-8 {
        return Err(RwError::Numeric {
            context: "bernstein_coefficients".into(),
            message: format!("partial coefficient sum {sum} exceeds 1"),
        });
    }
    Ok(BernsteinCoefficients { c, tail: (1.0 - sum).max(0.0) })
}

/// Subordinated measure `φ_f = Σ_{n<=N} c(f,n) μ^{(n)}`.
///
/// Renormalization is withheld: the deficit accumulates the coefficient
/// tail plus the truncation deficits of the convolution powers.  Symmetric
/// when μ is symmetric.
pub fn subordinate(
    mu: &SparseMeasure,
    spec: &BernsteinSpec,
    n_terms: usize,
    policy: &TruncationPolicy,
) -> Result<SparseMeasure> {
    let coeffs = bernstein_coefficients(spec, n_terms)?;
    let mut acc: BTreeMap<GroupElement, f64> = BTreeMap::new();
    let mut deficit = coeffs.tail;
    let mut power = mu.clone();
    for n in 1..=n_terms {
        if n > 1 {
            power = convolve(&power, mu, policy)?;
        }
        let cn = coeffs.coefficient(n);
        deficit += cn * power.deficit();
        if cn > 0.0 {
            for (g, w) in power.atoms() {
                *acc.entry(g.clone()).or_insert(0.0) += cn * w;
            }
        }
    }
    let atoms: Vec<(GroupElement, f64)> = acc.into_iter().filter(|(_, w)| *w > 0.0).collect();
    let mut out = SparseMeasure::from_sorted_atoms(mu.group().clone(), atoms, deficit, false);
    out.set_symmetric(mu.is_symmetric());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Group, GroupDescriptor};
    use crate::measure::uniform_generator;

    #[test]
    fn sqrt_coefficients_closed_form() {
        let spec = BernsteinSpec::power(0.5).unwrap();
        let c = bernstein_coefficients(&spec, 4).unwrap();
        let want = [0.5, 0.125, 1.0 / 16.0, 5.0 / 128.0];
        for (got, want) in c.c.iter().zip(want.iter()) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn identity_subordinator_coefficients() {
        let c = bernstein_coefficients(&BernsteinSpec::Identity, 5).unwrap();
        assert_eq!(c.c[0], 1.0);
        assert!(c.c[1..].iter().all(|x| *x == 0.0));
        assert_eq!(c.tail, 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form_for_sqrt() {
        let spec = BernsteinSpec::power(0.5).unwrap();
        let exact = bernstein_coefficients(&spec, 12).unwrap();
        let quad = bernstein_coefficients_quadrature(&spec, 12).unwrap();
        for (a, b) in exact.c.iter().zip(quad.c.iter()) {
            assert!((a - b).abs() < 1e-8 * a.max(1e-3), "closed {a} vs quadrature {b}");
        }
    }

    #[test]
    fn localized_coefficients_sum_to_one() {
        let spec = BernsteinSpec::localized(0.5, 3.0).unwrap();
        spec.verify_normalization().unwrap();
        let c = bernstein_coefficients(&spec, 96).unwrap();
        assert!(c.c.iter().all(|x| *x >= 0.0));
        let sum: f64 = c.c.iter().sum();
        // support (3,6): coefficient mass concentrates near n ~ 4..6 and the
        // partial sum reaches 1 quickly
        assert!((sum + c.tail - 1.0).abs() < 1e-12);
        assert!(sum > 1.0 - 1e-8, "sum {sum}");
    }

    #[test]
    fn localized_coefficients_match_riemann_oracle() {
        // cross-check the adaptive quadrature against a brute Riemann sum
        let alpha = 0.5;
        let t = 3.0;
        let spec = BernsteinSpec::localized(alpha, t).unwrap();
        let c = bernstein_coefficients(&spec, 8).unwrap();
        let kappa = alpha * t.powf(alpha) / (1.0 - 2f64.powf(-alpha));
        let m = 1_000_000usize;
        for n in [2usize, 5, 8] {
            let mut riemann = 0.0;
            for i in 0..m {
                let u = t + (i as f64 + 0.5) * t / m as f64;
                riemann += u.powi(n as i32) * (-u).exp() * kappa * u.powf(-1.0 - alpha) * t / m as f64;
            }
            let want = riemann * (-ln_factorial(n as u64)).exp();
            let got = c.coefficient(n);
            assert!((got - want).abs() < 1e-6 * want, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn tail_normalized_is_normalized() {
        let base = BernsteinSpec::power(0.5).unwrap();
        let spec = BernsteinSpec::tail_normalized(base, 2.0).unwrap();
        spec.verify_normalization().unwrap();
        let c = bernstein_coefficients(&spec, 64).unwrap();
        let sum: f64 = c.c.iter().sum();
        assert!(sum > 1.0 - 1e-6, "sum {sum}");
    }

    #[test]
    fn subordinate_identity_returns_mu() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&z);
        let phi = subordinate(&u, &BernsteinSpec::Identity, 8, &TruncationPolicy::None).unwrap();
        assert_eq!(phi.support_len(), u.support_len());
        for (g, w) in u.atoms() {
            assert!((phi.weight(g) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn subordinate_point_mass_is_point_mass() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let d = SparseMeasure::delta(z);
        let spec = BernsteinSpec::power(0.5).unwrap();
        let phi = subordinate(&d, &spec, 16, &TruncationPolicy::None).unwrap();
        assert_eq!(phi.support_len(), 1);
        let retained = phi.weight_at_identity();
        assert!((retained + phi.deficit() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subordinate_sqrt_of_uniform_on_z() {
        let z = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&z);
        let spec = BernsteinSpec::power(0.5).unwrap();
        let phi = subordinate(&u, &spec, 4, &TruncationPolicy::None).unwrap();
        // term-by-term oracle from the polynomial expansion of (1+x+x^2)^n / 3^n
        let powers_at_zero = [1.0 / 3.0, 3.0 / 9.0, 7.0 / 27.0, 19.0 / 81.0];
        let c = bernstein_coefficients(&spec, 4).unwrap();
        let want: f64 = c.c.iter().zip(powers_at_zero.iter()).map(|(a, b)| a * b).sum();
        assert!((phi.weight_at_identity() - want).abs() < 1e-14);
        assert!(phi.is_symmetric());
        assert!((phi.total_mass() + phi.deficit() - 1.0).abs() < 1e-12);
    }
}
