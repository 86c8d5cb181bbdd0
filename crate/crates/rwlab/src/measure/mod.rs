//! Finitely supported probability measures with truncation-deficit
//! accounting, and the moment functionals used to classify them.

mod bernstein;
mod moment;
mod parse;
pub(crate) mod quad;
mod radial;

pub use bernstein::{bernstein_coefficients, bernstein_coefficients_quadrature, subordinate, BernsteinCoefficients, BernsteinSpec};
pub use moment::{m_p_rho, rho_moment, weak_rho_moment, MomentFunction, MomentValue};
pub use parse::MeasureSpec;
pub use radial::{radial_log_law, radial_power_law, RadialFlavor, RadialReport};

use crate::error::{Result, RwError};
use crate::group::{Group, GroupElement};
use std::io::Write;
use std::sync::Arc;

/// Absolute tolerance for the mass bookkeeping invariant
/// `sum(weights) + deficit = 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finitely supported (sub-)probability measure on a group.
///
/// `deficit` is probability mass dropped by truncation: retained mass plus
/// deficit is one.  When `symmetric` is set, `weight(x) == weight(x^{-1})`
/// holds exactly for every atom.
#[derive(Clone)]
pub struct SparseMeasure {
    group: Arc<Group>,
    /// Atoms sorted by canonical element order; all weights strictly positive.
    atoms: Vec<(GroupElement, f64)>,
    deficit: f64,
    symmetric: bool,
}

impl SparseMeasure {
    /// Build from raw `(element, weight)` pairs.  Elements are
    /// canonicalized, duplicates merged, non-positive weights rejected, and
    /// the mass invariant is enforced.
    pub fn from_weights(
        group: Arc<Group>,
        weights: Vec<(GroupElement, f64)>,
        deficit: f64,
    ) -> Result<Self> {
        let mut atoms: Vec<(GroupElement, f64)> = Vec::with_capacity(weights.len());
        for (g, w) in weights {
            if !w.is_finite() || w <= 0.0 {
                return Err(RwError::Domain(format!("non-positive weight {w} at {g}")));
            }
            if !group.descriptor().contains(&g) {
                return Err(RwError::mismatch(group.descriptor().to_string(), g.to_string()));
            }
            atoms.push((group.descriptor().canonicalize(&g), w));
        }
        atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        atoms.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let m = SparseMeasure { group, atoms, deficit, symmetric: false };
        let total = m.total_mass() + m.deficit;
        if (total - 1.0).abs() > 1e-8 {
            return Err(RwError::Domain(format!("mass + deficit = {total}, expected 1")));
        }
        Ok(m)
    }

    /// Internal constructor for atoms already canonical, sorted and merged.
    pub(crate) fn from_sorted_atoms(
        group: Arc<Group>,
        atoms: Vec<(GroupElement, f64)>,
        deficit: f64,
        symmetric: bool,
    ) -> Self {
        debug_assert!(atoms.windows(2).all(|p| p[0].0 < p[1].0));
        SparseMeasure { group, atoms, deficit, symmetric }
    }

    /// The point mass at the identity.
    pub fn delta(group: Arc<Group>) -> Self {
        let e = group.identity();
        SparseMeasure { group, atoms: vec![(e, 1.0)], deficit: 0.0, symmetric: true }
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub(crate) fn set_deficit(&mut self, d: f64) {
        self.deficit = d;
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub(crate) fn set_symmetric(&mut self, s: bool) {
        self.symmetric = s;
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| *w).fold(0.0, f64::max)
    }

    /// Weight of `g` (zero off the support).
    pub fn weight(&self, g: &GroupElement) -> f64 {
        match self.atoms.binary_search_by(|(h, _)| h.cmp(g)) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn weight_at_identity(&self) -> f64 {
        self.weight(&self.group.identity())
    }

    /// Exact check that `weight(x) == weight(x^{-1})` for every atom.
    pub fn verify_symmetry(&self) -> bool {
        self.atoms.iter().all(|(g, w)| self.weight(&self.group.inverse(g)) == *w)
    }

    /// Mark the measure symmetric after an exact verification.
    pub fn with_verified_symmetry(mut self) -> Self {
        self.symmetric = self.verify_symmetry();
        self
    }

    pub fn same_group(&self, other: &SparseMeasure) -> Result<()> {
        if self.group.descriptor() != other.group.descriptor() {
            return Err(RwError::mismatch(
                self.group.descriptor().to_string(),
                other.group.descriptor().to_string(),
            ));
        }
        Ok(())
    }

    /// Two-column text export: one `element<TAB>weight` row per atom after a
    /// deficit header line.
    pub fn export_text(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# deficit {:e}", self.deficit)?;
        for (g, v) in &self.atoms {
            writeln!(w, "{g}\t{v:e}")?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for SparseMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SparseMeasure({} atoms on {}, deficit {:e}{})",
            self.atoms.len(),
            self.group.descriptor(),
            self.deficit,
            if self.symmetric { ", symmetric" } else { "" }
        )
    }
}

/// Uniform probability measure on the symmetric generating set `S*`
/// (identity included).
pub fn uniform_generator(group: &Arc<Group>) -> SparseMeasure {
    let gens = group.sym_generators();
    let w = 1.0 / gens.len() as f64;
    let atoms = gens.into_iter().map(|g| (g, w)).collect();
    SparseMeasure::from_sorted_atoms(group.clone(), atoms, 0.0, true)
}

/// Uniform probability measure on the ball `B(r)`.
pub fn uniform_ball(group: &Arc<Group>, r: u32) -> Result<SparseMeasure> {
    let ball = group.ball(r)?;
    let w = 1.0 / ball.volume() as f64;
    let atoms = ball.elements().iter().map(|g| (g.clone(), w)).collect();
    Ok(SparseMeasure::from_sorted_atoms(group.clone(), atoms, 0.0, true))
}

/// Switch-or-walk measure `½(μ_lamp + μ_base)` on a wreath product, with
/// both factors pushed through the natural embeddings.  Mass that lands on
/// the same element (the identity) adds up.
pub fn split_measure(
    mu_lamp: &SparseMeasure,
    mu_base: &SparseMeasure,
    wreath: &Arc<Group>,
) -> Result<SparseMeasure> {
    let (lamp_d, base_d) = match wreath.descriptor().kind() {
        crate::group::GroupKind::Wreath { lamp, base } => (lamp.as_ref(), base.as_ref()),
        _ => {
            return Err(RwError::mismatch(wreath.descriptor().to_string(), "wreath(..)"));
        }
    };
    if mu_lamp.group().descriptor() != lamp_d {
        return Err(RwError::mismatch(mu_lamp.group().descriptor().to_string(), lamp_d.to_string()));
    }
    if mu_base.group().descriptor() != base_d {
        return Err(RwError::mismatch(mu_base.group().descriptor().to_string(), base_d.to_string()));
    }
    let mut weights = Vec::with_capacity(mu_lamp.support_len() + mu_base.support_len());
    for (k, w) in mu_lamp.atoms() {
        weights.push((wreath.descriptor().embed_lamp(k), 0.5 * w));
    }
    for (h, w) in mu_base.atoms() {
        weights.push((wreath.descriptor().embed_base(h), 0.5 * w));
    }
    let deficit = 0.5 * (mu_lamp.deficit() + mu_base.deficit());
    let mut m = SparseMeasure::from_weights(wreath.clone(), weights, deficit)?;
    m.symmetric = mu_lamp.is_symmetric() && mu_base.is_symmetric();
    Ok(m)
}

/// Switch-walk-switch measure `μ_K * μ_H * μ_K` on a wreath product.
pub fn sws_measure(
    mu_lamp: &SparseMeasure,
    mu_base: &SparseMeasure,
    wreath: &Arc<Group>,
) -> Result<SparseMeasure> {
    use crate::conv::{convolve, TruncationPolicy};
    let (lamp_d, base_d) = match wreath.descriptor().kind() {
        crate::group::GroupKind::Wreath { lamp, base } => (lamp.as_ref(), base.as_ref()),
        _ => {
            return Err(RwError::mismatch(wreath.descriptor().to_string(), "wreath(..)"));
        }
    };
    if mu_lamp.group().descriptor() != lamp_d {
        return Err(RwError::mismatch(mu_lamp.group().descriptor().to_string(), lamp_d.to_string()));
    }
    if mu_base.group().descriptor() != base_d {
        return Err(RwError::mismatch(mu_base.group().descriptor().to_string(), base_d.to_string()));
    }
    let embed = |m: &SparseMeasure, is_lamp: bool| -> SparseMeasure {
        let weights = m
            .atoms()
            .iter()
            .map(|(g, w)| {
                let e = if is_lamp {
                    wreath.descriptor().embed_lamp(g)
                } else {
                    wreath.descriptor().embed_base(g)
                };
                (e, *w)
            })
            .collect::<Vec<_>>();
        let mut out = SparseMeasure::from_weights(wreath.clone(), weights, m.deficit()).unwrap();
        out.symmetric = m.is_symmetric();
        out
    };
    let k = embed(mu_lamp, true);
    let h = embed(mu_base, false);
    let kh = convolve(&k, &h, &TruncationPolicy::None)?;
    let mut khk = convolve(&kh, &k, &TruncationPolicy::None)?;
    // palindromic word in symmetric factors, hence symmetric
    khk.symmetric = mu_lamp.is_symmetric() && mu_base.is_symmetric();
    Ok(khk)
}
