//! Concrete finitely generated groups with canonical element forms.
//!
//! Supported kinds: the integer lattices `Z^d`, finite cyclic groups `Z/m`,
//! the discrete Heisenberg group in its `(a, b, c)` normal form, and wreath
//! products `lamp ≀ base` built recursively from the other kinds.  Every
//! element is stored in a unique canonical form, so payload equality is group
//! equality, and the canonical `Ord` gives deterministic iteration orders
//! everywhere downstream.

mod ball;
mod parse;

pub use ball::{Ball, WordLength};

use crate::error::{Result, RwError};
use smallvec::SmallVec;
use std::fmt;
use std::sync::{Arc, Mutex};

/// Default cap on the number of elements any single BFS enumeration may hold.
pub const DEFAULT_BALL_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// `Z^d` with the standard generators `±e_i`.
    Lattice(usize),
    /// `Z/m` with generators `±1`.
    Cyclic(u64),
    /// Discrete Heisenberg group; normal form `(a, b, c)` with
    /// `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')` and generators
    /// `a = (1,0,0)`, `b = (0,1,0)`.
    Heisenberg3,
    /// Wreath product `lamp ≀ base`: finitely supported lamp configurations
    /// over the base, with the base acting by translation.
    Wreath { lamp: Box<GroupDescriptor>, base: Box<GroupDescriptor> },
}

/// A group descriptor: the kind plus the derived symmetric generating set
/// `S* = {e, s_1^{±1}, ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupDescriptor {
    kind: GroupKind,
}

/// Canonical group element.  The payload layout per kind is documented on
/// [`GroupKind`]; wreath lamp maps never store identity lamp values and are
/// sorted by base element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Lattice(SmallVec<[i64; 4]>),
    Cyclic(i64),
    Heisenberg([i64; 3]),
    Wreath(Box<WreathElem>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElem {
    /// Sorted `(base position, lamp value)` pairs; lamp values are never the
    /// lamp identity.
    pub lamps: Vec<(GroupElement, GroupElement)>,
    pub cursor: GroupElement,
}

impl GroupDescriptor {
    pub fn lattice(d: usize) -> Self {
        assert!(d >= 1, "lattice dimension must be at least 1");
        GroupDescriptor { kind: GroupKind::Lattice(d) }
    }

    pub fn cyclic(m: u64) -> Self {
        assert!(m >= 1, "cyclic order must be at least 1");
        GroupDescriptor { kind: GroupKind::Cyclic(m) }
    }

    pub fn heisenberg3() -> Self {
        GroupDescriptor { kind: GroupKind::Heisenberg3 }
    }

    /// Wreath-product combinator: generators are the embedded generators of
    /// the lamp group (placed at the base identity) and of the base group.
    pub fn wreath(lamp: GroupDescriptor, base: GroupDescriptor) -> Self {
        GroupDescriptor { kind: GroupKind::Wreath { lamp: Box::new(lamp), base: Box::new(base) } }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Lattice(d) => GroupElement::Lattice(SmallVec::from_iter(std::iter::repeat(0).take(*d))),
            GroupKind::Cyclic(_) => GroupElement::Cyclic(0),
            GroupKind::Heisenberg3 => GroupElement::Heisenberg([0, 0, 0]),
            GroupKind::Wreath { base, .. } => GroupElement::Wreath(Box::new(WreathElem {
                lamps: Vec::new(),
                cursor: base.identity(),
            })),
        }
    }

    /// The symmetric generating set `S*`, identity included, deduplicated and
    /// sorted canonically.
    pub fn sym_generators(&self) -> Vec<GroupElement> {
        let mut out = vec![self.identity()];
        match &self.kind {
            GroupKind::Lattice(d) => {
                for i in 0..*d {
                    for sign in [1i64, -1] {
                        let mut v = SmallVec::from_iter(std::iter::repeat(0).take(*d));
                        v[i] = sign;
                        out.push(GroupElement::Lattice(v));
                    }
                }
            }
            GroupKind::Cyclic(m) => {
                let m = *m as i64;
                for sign in [1i64, -1] {
                    out.push(GroupElement::Cyclic(sign.rem_euclid(m)));
                }
            }
            GroupKind::Heisenberg3 => {
                for g in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                    out.push(GroupElement::Heisenberg(g));
                }
            }
            GroupKind::Wreath { lamp, base } => {
                for k in lamp.sym_generators() {
                    if k != lamp.identity() {
                        out.push(self.embed_lamp(&k));
                    }
                }
                for h in base.sym_generators() {
                    if h != base.identity() {
                        out.push(self.embed_base(&h));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Embed a lamp-group element at the base identity.
    pub fn embed_lamp(&self, k: &GroupElement) -> GroupElement {
        match &self.kind {
            GroupKind::Wreath { lamp, base } => {
                let mut lamps = Vec::new();
                if *k != lamp.identity() {
                    lamps.push((base.identity(), k.clone()));
                }
                GroupElement::Wreath(Box::new(WreathElem { lamps, cursor: base.identity() }))
            }
            _ => panic!("embed_lamp on non-wreath descriptor"),
        }
    }

    /// Embed a base-group element (empty lamp configuration).
    pub fn embed_base(&self, h: &GroupElement) -> GroupElement {
        match &self.kind {
            GroupKind::Wreath { base, .. } => GroupElement::Wreath(Box::new(WreathElem {
                lamps: Vec::new(),
                cursor: base.canonicalize(h),
            })),
            _ => panic!("embed_base on non-wreath descriptor"),
        }
    }

    /// Check that the payload shape of `g` matches this descriptor.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (&self.kind, g) {
            (GroupKind::Lattice(d), GroupElement::Lattice(v)) => v.len() == *d,
            (GroupKind::Cyclic(m), GroupElement::Cyclic(r)) => (0..*m as i64).contains(r),
            (GroupKind::Heisenberg3, GroupElement::Heisenberg(_)) => true,
            (GroupKind::Wreath { lamp, base }, GroupElement::Wreath(w)) => {
                base.contains(&w.cursor)
                    && w.lamps.windows(2).all(|p| p[0].0 < p[1].0)
                    && w.lamps.iter().all(|(p, k)| {
                        base.contains(p) && lamp.contains(k) && *k != lamp.identity()
                    })
            }
            _ => false,
        }
    }

    /// Bring an arbitrary payload of the right shape into canonical form.
    /// Canonicalization is idempotent.
    pub fn canonicalize(&self, g: &GroupElement) -> GroupElement {
        match (&self.kind, g) {
            (GroupKind::Lattice(_), GroupElement::Lattice(v)) => GroupElement::Lattice(v.clone()),
            (GroupKind::Cyclic(m), GroupElement::Cyclic(r)) => {
                GroupElement::Cyclic(r.rem_euclid(*m as i64))
            }
            (GroupKind::Heisenberg3, GroupElement::Heisenberg(t)) => GroupElement::Heisenberg(*t),
            (GroupKind::Wreath { lamp, base }, GroupElement::Wreath(w)) => {
                let mut lamps: Vec<(GroupElement, GroupElement)> = w
                    .lamps
                    .iter()
                    .map(|(p, k)| (base.canonicalize(p), lamp.canonicalize(k)))
                    .filter(|(_, k)| *k != lamp.identity())
                    .collect();
                lamps.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                GroupElement::Wreath(Box::new(WreathElem {
                    lamps,
                    cursor: base.canonicalize(&w.cursor),
                }))
            }
            _ => panic!("canonicalize: element does not belong to this group"),
        }
    }

    /// Group law.  Panics on payload shape mismatch only in debug paths; use
    /// [`Group::multiply`] for the checked variant.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (&self.kind, a, b) {
            (GroupKind::Lattice(_), GroupElement::Lattice(x), GroupElement::Lattice(y)) => {
                GroupElement::Lattice(x.iter().zip(y.iter()).map(|(p, q)| p + q).collect())
            }
            (GroupKind::Cyclic(m), GroupElement::Cyclic(x), GroupElement::Cyclic(y)) => {
                GroupElement::Cyclic((x + y).rem_euclid(*m as i64))
            }
            (
                GroupKind::Heisenberg3,
                GroupElement::Heisenberg([a1, b1, c1]),
                GroupElement::Heisenberg([a2, b2, c2]),
            ) => GroupElement::Heisenberg([a1 + a2, b1 + b2, c1 + c2 + a1 * b2]),
            (GroupKind::Wreath { lamp, base }, GroupElement::Wreath(u), GroupElement::Wreath(v)) => {
                // (f, h)(f', h') = (f · τ_l(h) f', h h'): the second lamp
                // configuration is shifted by h before pointwise composition.
                let mut lamps = u.lamps.clone();
                for (pos, k2) in &v.lamps {
                    let shifted = base.mul(&u.cursor, pos);
                    match lamps.binary_search_by(|(p, _)| p.cmp(&shifted)) {
                        Ok(i) => {
                            let combined = lamp.mul(&lamps[i].1, k2);
                            if combined == lamp.identity() {
                                lamps.remove(i);
                            } else {
                                lamps[i].1 = combined;
                            }
                        }
                        Err(i) => lamps.insert(i, (shifted, k2.clone())),
                    }
                }
                GroupElement::Wreath(Box::new(WreathElem {
                    lamps,
                    cursor: base.mul(&u.cursor, &v.cursor),
                }))
            }
            _ => panic!("mul: mixed element kinds"),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> GroupElement {
        match (&self.kind, g) {
            (GroupKind::Lattice(_), GroupElement::Lattice(v)) => {
                GroupElement::Lattice(v.iter().map(|x| -x).collect())
            }
            (GroupKind::Cyclic(m), GroupElement::Cyclic(r)) => {
                GroupElement::Cyclic((-r).rem_euclid(*m as i64))
            }
            (GroupKind::Heisenberg3, GroupElement::Heisenberg([a, b, c])) => {
                GroupElement::Heisenberg([-a, -b, -c + a * b])
            }
            (GroupKind::Wreath { lamp, base }, GroupElement::Wreath(w)) => {
                let inv_cursor = base.inv(&w.cursor);
                let mut lamps: Vec<(GroupElement, GroupElement)> = w
                    .lamps
                    .iter()
                    .map(|(p, k)| (base.mul(&inv_cursor, p), lamp.inv(k)))
                    .collect();
                lamps.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                GroupElement::Wreath(Box::new(WreathElem { lamps, cursor: inv_cursor }))
            }
            _ => panic!("inv: element does not belong to this group"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.kind {
            GroupKind::Lattice(_) | GroupKind::Heisenberg3 => false,
            GroupKind::Cyclic(_) => true,
            GroupKind::Wreath { lamp, base } => lamp.is_finite() && base.is_finite(),
        }
    }

    /// Exact word length where a closed form exists (lattice, cyclic).
    fn closed_form_length(&self, g: &GroupElement) -> Option<u64> {
        match (&self.kind, g) {
            (GroupKind::Lattice(_), GroupElement::Lattice(v)) => {
                Some(v.iter().map(|x| x.unsigned_abs()).sum())
            }
            (GroupKind::Cyclic(m), GroupElement::Cyclic(r)) => {
                let r = *r as u64;
                Some(r.min(m - r))
            }
            _ => None,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            GroupElement::Cyclic(r) => write!(f, "{r}"),
            GroupElement::Heisenberg([a, b, c]) => write!(f, "({a},{b},{c})"),
            GroupElement::Wreath(w) => {
                write!(f, "{{")?;
                for (i, (p, k)) in w.lamps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{p}:{k}")?;
                }
                write!(f, "}}@{}", w.cursor)
            }
        }
    }
}

/// A group descriptor together with its enumeration caches.  All operations
/// are pure; the BFS cache behind [`Group::ball`] and [`Group::word_length`]
/// is single-writer, many-reader (construction is serialized per group, reads
/// of finished balls are lock-free through `Arc`).
pub struct Group {
    descriptor: GroupDescriptor,
    ball_budget: usize,
    bfs: Mutex<ball::BfsState>,
}

impl Group {
    pub fn new(descriptor: GroupDescriptor) -> Arc<Self> {
        Self::with_budget(descriptor, DEFAULT_BALL_BUDGET)
    }

    pub fn with_budget(descriptor: GroupDescriptor, ball_budget: usize) -> Arc<Self> {
        let bfs = ball::BfsState::new(&descriptor);
        Arc::new(Group { descriptor, ball_budget, bfs: Mutex::new(bfs) })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn ball_budget(&self) -> usize {
        self.ball_budget
    }

    pub fn identity(&self) -> GroupElement {
        self.descriptor.identity()
    }

    pub fn sym_generators(&self) -> Vec<GroupElement> {
        self.descriptor.sym_generators()
    }

    /// Checked multiplication: canonical product of canonical inputs.
    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        if !self.descriptor.contains(a) {
            return Err(RwError::mismatch(self.descriptor.to_string(), a.to_string()));
        }
        if !self.descriptor.contains(b) {
            return Err(RwError::mismatch(self.descriptor.to_string(), b.to_string()));
        }
        Ok(self.descriptor.mul(a, b))
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        self.descriptor.inv(g)
    }

    /// Exact ball `B(r)` by breadth-first search over `S*`, cached.
    pub fn ball(&self, r: u32) -> Result<Arc<Ball>> {
        let mut bfs = self.bfs.lock().unwrap();
        bfs.ball(&self.descriptor, r, self.ball_budget)
    }

    /// Word length of `g`.  Exact via closed form or BFS within the budget;
    /// outside the budget a certified upper bound is returned with the
    /// `exact` flag cleared.
    pub fn word_length(&self, g: &GroupElement) -> Result<WordLength> {
        if let Some(v) = self.descriptor.closed_form_length(g) {
            return Ok(WordLength { value: v, exact: true });
        }
        let mut bfs = self.bfs.lock().unwrap();
        bfs.word_length(&self.descriptor, g, self.ball_budget)
    }

    /// Volume `V(r) = |B(r)|`.
    pub fn volume(&self, r: u32) -> Result<u64> {
        Ok(self.ball(r)?.volume() as u64)
    }
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.descriptor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elem_lat(xs: &[i64]) -> GroupElement {
        GroupElement::Lattice(SmallVec::from_slice(xs))
    }

    #[test]
    fn lattice_product_is_componentwise() {
        let g = Group::new(GroupDescriptor::lattice(2));
        let p = g.multiply(&elem_lat(&[1, 2]), &elem_lat(&[3, -1])).unwrap();
        assert_eq!(p, elem_lat(&[4, 1]));
    }

    #[test]
    fn heisenberg_defining_relation() {
        let g = Group::new(GroupDescriptor::heisenberg3());
        let a = GroupElement::Heisenberg([1, 0, 0]);
        let b = GroupElement::Heisenberg([0, 1, 0]);
        assert_eq!(g.multiply(&a, &b).unwrap(), GroupElement::Heisenberg([1, 1, 1]));
        // associativity spot check
        let c = GroupElement::Heisenberg([2, -1, 3]);
        let ab_c = g.descriptor().mul(&g.descriptor().mul(&a, &b), &c);
        let a_bc = g.descriptor().mul(&a, &g.descriptor().mul(&b, &c));
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn heisenberg_inverse() {
        let g = Group::new(GroupDescriptor::heisenberg3());
        let x = GroupElement::Heisenberg([3, -2, 7]);
        assert_eq!(g.descriptor().mul(&x, &g.inverse(&x)), g.identity());
        assert_eq!(g.descriptor().mul(&g.inverse(&x), &x), g.identity());
    }

    #[test]
    fn wreath_base_translation_leaves_lamps_fixed() {
        let ll = GroupDescriptor::wreath(GroupDescriptor::cyclic(2), GroupDescriptor::lattice(1));
        let g = Group::new(ll.clone());
        let lamp_on_at_0 = ll.embed_lamp(&GroupElement::Cyclic(1));
        let step = ll.embed_base(&elem_lat(&[1]));
        let prod = g.multiply(&lamp_on_at_0, &step).unwrap();
        match &prod {
            GroupElement::Wreath(w) => {
                assert_eq!(w.lamps, vec![(elem_lat(&[0]), GroupElement::Cyclic(1))]);
                assert_eq!(w.cursor, elem_lat(&[1]));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn wreath_of_z_over_z_lamp_then_base() {
        // multiply embedded lamp generator then base generator on Z wr Z
        let d = GroupDescriptor::wreath(GroupDescriptor::lattice(1), GroupDescriptor::lattice(1));
        let g = Group::new(d.clone());
        let lamp = d.embed_lamp(&elem_lat(&[1]));
        let base = d.embed_base(&elem_lat(&[1]));
        let prod = g.multiply(&lamp, &base).unwrap();
        match &prod {
            GroupElement::Wreath(w) => {
                assert_eq!(w.cursor, elem_lat(&[1]));
                assert_eq!(w.lamps, vec![(elem_lat(&[0]), elem_lat(&[1]))]);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn wreath_inverse_roundtrip() {
        let d = GroupDescriptor::wreath(GroupDescriptor::cyclic(2), GroupDescriptor::lattice(1));
        let g = Group::new(d.clone());
        // built by a few generator multiplications
        let gens = d.sym_generators();
        let mut x = g.identity();
        for s in gens.iter().cycle().take(7) {
            x = g.descriptor().mul(&x, s);
        }
        assert_eq!(g.descriptor().mul(&x, &g.inverse(&x)), g.identity());
    }

    #[test]
    fn descriptor_mismatch_is_an_error() {
        let g = Group::new(GroupDescriptor::lattice(2));
        let err = g.multiply(&elem_lat(&[1, 2]), &elem_lat(&[1])).unwrap_err();
        assert!(matches!(err, RwError::DescriptorMismatch { .. }));
    }

    #[test]
    fn lamplighter_has_four_element_sym_generating_set() {
        let d = GroupDescriptor::wreath(GroupDescriptor::cyclic(2), GroupDescriptor::lattice(1));
        assert_eq!(d.sym_generators().len(), 4); // e, lamp flip, base +-1
    }

    #[test]
    fn canonicalize_is_idempotent_on_wreath() {
        let lamp = GroupDescriptor::cyclic(2);
        let base = GroupDescriptor::lattice(1);
        let d = GroupDescriptor::wreath(lamp, base);
        let raw = GroupElement::Wreath(Box::new(WreathElem {
            lamps: vec![
                (elem_lat(&[2]), GroupElement::Cyclic(1)),
                (elem_lat(&[-1]), GroupElement::Cyclic(0)), // identity lamp, must drop
                (elem_lat(&[0]), GroupElement::Cyclic(3)),  // canonicalizes to 1
            ],
            cursor: elem_lat(&[1]),
        }));
        let c1 = d.canonicalize(&raw);
        let c2 = d.canonicalize(&c1);
        assert_eq!(c1, c2);
        assert!(d.contains(&c1));
    }
}
