//! Exact sparse convolution with truncation-deficit accounting.
//!
//! Convolution is assembled as a deterministic sorted merge: the smaller
//! support contributes one translated stream per atom, streams are combined
//! by canonical key, and equal keys accumulate in a fixed order, so parallel
//! and serial runs agree bit for bit.  Deficits propagate by the union
//! bound: output deficit = input deficits + freshly truncated mass.

mod kernel;
mod series;

pub use kernel::{
    continuous_kernel, dirichlet_energy, displacement_of, entropy_of, FiniteFunction, KernelValue,
};
pub use series::{return_series, ReturnSeries};

use crate::error::{Result, RwError};
use crate::group::{GroupElement, GroupKind};
use crate::measure::SparseMeasure;

/// Cap on materialized intermediate products in the generic sparse path.
const GENERIC_CONV_BUDGET: usize = 24_000_000;

/// Truncation policy applied after each exact convolution.  Deficits add.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationPolicy {
    /// Keep everything; error out if the support would exceed the engine
    /// budget.
    None,
    /// Keep atoms with word length at most `r`.
    Radius(u32),
    /// Keep the `k` heaviest atoms (ties at the cutoff weight are all kept,
    /// which preserves symmetry).
    TopMass(usize),
    /// Drop atoms with weight below `floor`.
    MassFloor(f64),
}

impl std::fmt::Display for TruncationPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TruncationPolicy::None => write!(f, "none"),
            TruncationPolicy::Radius(r) => write!(f, "radius({r})"),
            TruncationPolicy::TopMass(k) => write!(f, "top_mass({k})"),
            TruncationPolicy::MassFloor(e) => write!(f, "mass_floor({e:e})"),
        }
    }
}

impl std::str::FromStr for TruncationPolicy {
    type Err = RwError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(TruncationPolicy::None);
        }
        let parse_arg = |s: &str, head: &str| -> Result<String> {
            s.strip_prefix(head)
                .and_then(|t| t.strip_prefix('('))
                .and_then(|t| t.strip_suffix(')'))
                .map(|t| t.trim().to_string())
                .ok_or_else(|| RwError::Parse(format!("bad policy {s:?}")))
        };
        if s.starts_with("radius") {
            let a = parse_arg(s, "radius")?;
            Ok(TruncationPolicy::Radius(
                a.parse().map_err(|e| RwError::Parse(format!("bad radius: {e}")))?,
            ))
        } else if s.starts_with("top_mass") {
            let a = parse_arg(s, "top_mass")?;
            Ok(TruncationPolicy::TopMass(
                a.parse().map_err(|e| RwError::Parse(format!("bad top_mass: {e}")))?,
            ))
        } else if s.starts_with("mass_floor") {
            let a = parse_arg(s, "mass_floor")?;
            Ok(TruncationPolicy::MassFloor(
                a.parse().map_err(|e| RwError::Parse(format!("bad mass_floor: {e}")))?,
            ))
        } else {
            Err(RwError::Parse(format!("unknown policy {s:?}")))
        }
    }
}

/// Apply a truncation policy to sorted atoms; returns the dropped mass.
pub(crate) fn truncate_atoms(
    atoms: &mut Vec<(GroupElement, f64)>,
    policy: &TruncationPolicy,
    measure_group: &crate::group::Group,
) -> Result<f64> {
    match policy {
        TruncationPolicy::None => Ok(0.0),
        TruncationPolicy::MassFloor(floor) => {
            let mut dropped = 0.0;
            atoms.retain(|(_, w)| {
                if *w < *floor {
                    dropped += *w;
                    false
                } else {
                    true
                }
            });
            Ok(dropped)
        }
        TruncationPolicy::Radius(r) => {
            let mut dropped = 0.0;
            let mut err = None;
            atoms.retain(|(g, w)| {
                if err.is_some() {
                    return true;
                }
                match measure_group.word_length(g) {
                    Ok(wl) => {
                        // flagged upper bounds are compared conservatively:
                        // an atom is dropped only when even the bound exceeds r
                        if wl.value > *r as u64 && wl.exact {
                            dropped += *w;
                            false
                        } else if !wl.exact && wl.value > *r as u64 {
                            dropped += *w;
                            false
                        } else {
                            true
                        }
                    }
                    Err(e) => {
                        err = Some(e);
                        true
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(dropped)
        }
        TruncationPolicy::TopMass(k) => {
            if atoms.len() <= *k {
                return Ok(0.0);
            }
            let mut weights: Vec<f64> = atoms.iter().map(|(_, w)| *w).collect();
            let idx = weights.len() - *k;
            weights.select_nth_unstable_by(idx - 1, |a, b| a.partial_cmp(b).unwrap());
            let cutoff = weights[idx - 1];
            // keep weights strictly above the cutoff, plus every tie at the
            // cutoff (symmetry-preserving)
            let mut dropped = 0.0;
            atoms.retain(|(_, w)| {
                if *w > cutoff || (*w == cutoff && true) {
                    true
                } else {
                    dropped += *w;
                    false
                }
            });
            // if ties made us keep too few non-tied atoms this still only
            // errs on the side of keeping more mass
            Ok(dropped)
        }
    }
}

/// Whether right-translation by a fixed element is monotone for the
/// canonical order (lattices and the Heisenberg normal form are; wreath
/// products are not).
fn translations_monotone(kind: &GroupKind) -> bool {
    matches!(kind, GroupKind::Lattice(_) | GroupKind::Heisenberg3)
}

/// Exact sparse convolution `μ * ν` followed by truncation.
///
/// `(μ*ν)(x) = Σ_y μ(y) ν(y^{-1} x)`; the sum is assembled exactly over all
/// support pairs, so the cost is the product of the two support sizes.
pub fn convolve(
    mu: &SparseMeasure,
    nu: &SparseMeasure,
    policy: &TruncationPolicy,
) -> Result<SparseMeasure> {
    mu.same_group(nu)?;
    let group = mu.group().clone();
    let items = mu.support_len().checked_mul(nu.support_len()).unwrap_or(usize::MAX);
    if items > GENERIC_CONV_BUDGET {
        return Err(RwError::Resource {
            what: format!(
                "sparse convolution support product {} x {}",
                mu.support_len(),
                nu.support_len()
            ),
            completed: None,
        });
    }
    let d = group.descriptor();
    let mut all: Vec<(GroupElement, f64)> = Vec::with_capacity(items);
    if nu.support_len() <= mu.support_len() {
        // one right-translated copy of μ per atom of ν
        for (s, ws) in nu.atoms() {
            for (g, wg) in mu.atoms() {
                all.push((d.mul(g, s), wg * ws));
            }
        }
    } else {
        // one left-translated copy of ν per atom of μ
        for (y, wy) in mu.atoms() {
            for (h, wh) in nu.atoms() {
                all.push((d.mul(y, h), wy * wh));
            }
        }
    }
    if !translations_monotone(d.kind()) {
        all.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    } else {
        // streams are individually sorted; a full sort is still the simplest
        // deterministic merge and is cheap on nearly-sorted data
        all.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    }
    let mut atoms: Vec<(GroupElement, f64)> = Vec::with_capacity(all.len() / 2 + 1);
    for (g, w) in all {
        match atoms.last_mut() {
            Some((last, acc)) if *last == g => *acc += w,
            _ => atoms.push((g, w)),
        }
    }
    let dropped = truncate_atoms(&mut atoms, policy, &group)?;
    let deficit = mu.deficit() + nu.deficit() + dropped;
    Ok(SparseMeasure::from_sorted_atoms(group, atoms, deficit, false))
}

/// Convolution power `μ^{(n)}` by square-and-multiply over the binary
/// expansion of `n` (fixed doubling order for reproducibility).
pub fn power(mu: &SparseMeasure, n: u64, policy: &TruncationPolicy) -> Result<SparseMeasure> {
    if n == 0 {
        return Err(RwError::Domain("power needs n >= 1".into()));
    }
    let bits = 64 - n.leading_zeros();
    let mut acc = mu.clone();
    for i in (0..bits - 1).rev() {
        acc = convolve(&acc, &acc, policy)?;
        if (n >> i) & 1 == 1 {
            acc = convolve(&acc, mu, policy)?;
        }
    }
    if mu.is_symmetric() && acc.support_len() <= 100_000 {
        acc = acc.with_verified_symmetry();
    }
    Ok(acc)
}
