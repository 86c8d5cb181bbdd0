//! Continuous-time kernel, Dirichlet energies, entropy and displacement
//! diagnostics.

use super::{convolve, TruncationPolicy};
use crate::error::{Result, RwError};
use crate::group::GroupElement;
use crate::measure::{MomentValue, SparseMeasure};
use std::collections::BTreeMap;

/// Value of the continuous-time kernel at the identity together with the
/// Poisson tail remainder of the truncated series.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    /// `e^{-t} Σ_{k<=K} t^k/k! · φ^{(k)}(e)` (a lower bound).
    pub value: f64,
    /// `Σ_{k>K} e^{-t} t^k / k!`; since each `φ^{(k)}(e) ≤ 1`, the true
    /// kernel lies in `[value, value + remainder]`.
    pub remainder: f64,
}

impl KernelValue {
    pub fn upper(&self) -> f64 {
        self.value + self.remainder
    }
}

/// Continuous-time kernel `h_t^φ(e) = e^{-t} Σ_k t^k/k! · φ^{(k)}(e)`
/// truncated at `K` series terms.
pub fn continuous_kernel(
    mu: &SparseMeasure,
    t: f64,
    terms: usize,
    policy: &TruncationPolicy,
) -> Result<KernelValue> {
    if t < 0.0 {
        return Err(RwError::Domain(format!("continuous kernel needs t >= 0, got {t}")));
    }
    // Poisson weights by the stable recurrence w_0 = e^{-t}, w_k = w_{k-1} t/k
    let mut weight = (-t).exp();
    let mut acc = weight * 1.0; // phi^(0)(e) = 1
    let mut weight_sum = weight;
    let mut cur: Option<SparseMeasure> = None;
    for k in 1..=terms {
        weight *= t / k as f64;
        weight_sum += weight;
        let next = match &cur {
            None => mu.clone(),
            Some(m) => convolve(m, mu, policy)?,
        };
        acc += weight * next.weight_at_identity();
        cur = Some(next);
    }
    Ok(KernelValue { value: acc, remainder: (1.0 - weight_sum).max(0.0) })
}

/// A finitely supported real function on a group, used as a Dirichlet test
/// function.
#[derive(Debug, Clone, Default)]
pub struct FiniteFunction {
    map: BTreeMap<GroupElement, f64>,
}

impl FiniteFunction {
    pub fn new() -> Self {
        FiniteFunction { map: BTreeMap::new() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (GroupElement, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (g, v) in pairs {
            if v != 0.0 {
                map.insert(g, v);
            }
        }
        FiniteFunction { map }
    }

    /// Indicator of a set.
    pub fn indicator(set: impl IntoIterator<Item = GroupElement>) -> Self {
        Self::from_pairs(set.into_iter().map(|g| (g, 1.0)))
    }

    pub fn value(&self, g: &GroupElement) -> f64 {
        self.map.get(g).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, g: GroupElement, v: f64) {
        if v == 0.0 {
            self.map.remove(&g);
        } else {
            self.map.insert(g, v);
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.map.keys()
    }

    pub fn support_len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, f64)> {
        self.map.iter().map(|(g, v)| (g, *v))
    }

    pub fn norm_p(&self, p: f64) -> f64 {
        self.map.values().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    pub fn norm_p_pow(&self, p: f64) -> f64 {
        self.map.values().map(|v| v.abs().powf(p)).sum::<f64>()
    }
}

/// Dirichlet energy `E_{p,φ}(f) = ½ Σ_{x,y} |f(xy) - f(x)|^p φ(y)`.
///
/// The double sum is exact: only pairs with `x` or `xy` in the support of
/// `f` can contribute, so `x` ranges over `support(f) ∪ support(f)·S^{-1}`.
pub fn dirichlet_energy(mu: &SparseMeasure, f: &FiniteFunction, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(RwError::Domain(format!("dirichlet energy needs p >= 1, got {p}")));
    }
    let d = mu.group().descriptor();
    // candidate x's: support(f) and support(f)·y^{-1} for y in support(mu)
    let mut xs: Vec<GroupElement> = f.support().cloned().collect();
    for (y, _) in mu.atoms() {
        let y_inv = d.inv(y);
        for z in f.support() {
            xs.push(d.mul(z, &y_inv));
        }
    }
    xs.sort_unstable();
    xs.dedup();
    let mut acc = 0.0;
    for x in &xs {
        let fx = f.value(x);
        for (y, w) in mu.atoms() {
            let diff = (f.value(&d.mul(x, y)) - fx).abs();
            if diff != 0.0 {
                acc += diff.powf(p) * w;
            }
        }
    }
    Ok(0.5 * acc)
}

/// Shannon entropy `H(μ) = Σ -w log w` of the retained atoms.  The
/// truncation deficit biases this down; callers report the deficit next to
/// the value.
pub fn entropy_of(mu: &SparseMeasure) -> f64 {
    mu.atoms().iter().map(|(_, w)| if *w > 0.0 { -w * w.ln() } else { 0.0 }).sum()
}

/// Displacement `L(μ) = Σ |g| μ(g)`; the `exact` flag clears when a word
/// length was only certified as an upper bound.
pub fn displacement_of(mu: &SparseMeasure) -> Result<MomentValue> {
    let mut total = 0.0;
    let mut exact = true;
    for (g, w) in mu.atoms() {
        let wl = mu.group().word_length(g)?;
        exact &= wl.exact;
        total += wl.value as f64 * w;
    }
    Ok(MomentValue { value: total, exact })
}
