//! Return-probability series `n ↦ μ^{(2n)}(e)`.
//!
//! For symmetric μ the even return probability is the squared `ℓ²` norm of
//! the half-time measure, `μ^{(2n)}(e) = Σ_x μ^{(n)}(x)²`, so the series to
//! index `N` only needs the walk evolved for `N` steps.  Truncation keeps
//! every computed measure a pointwise lower bound of the true one, hence
//! every reported value is a valid lower bound; the per-`n` slack bound
//! `d·(2·max + d)` (with `d` the accumulated mass deficit and `max` the
//! largest retained atom) is an upper bound on the missing amount.
//!
//! Lattice and Heisenberg walks run on dense coordinate boxes (flat `f64`
//! arrays) instead of the generic sorted-merge path; radial ball-mixture
//! measures on `Z` additionally collapse to one windowed prefix-sum pass per
//! mixture shell.

use super::{convolve, truncate_atoms, TruncationPolicy};
use crate::error::{Result, RwError};
use crate::group::{GroupElement, GroupKind};
use crate::measure::SparseMeasure;

/// Cap on dense-field cells.
const DENSE_BUDGET: usize = 260_000_000;

/// Lower-bound values for `μ^{(2n)}(e)`, `n = 1..=N`, with deficit
/// accounting.  True value lies in `[value, value + slack]`.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    values: Vec<f64>,
    slack: Vec<f64>,
    mass_deficit: Vec<f64>,
    descriptor: String,
    policy: String,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `μ^{(2n)}(e)` lower bound.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    /// Upper slack: the true value is at most `value(n) + slack(n)`.
    pub fn slack(&self, n: usize) -> f64 {
        self.slack[n - 1]
    }

    /// Accumulated truncation deficit of the underlying measure at
    /// half-time `n`.
    pub fn mass_deficit(&self, n: usize) -> f64 {
        self.mass_deficit[n - 1]
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn policy(&self) -> &str {
        &self.policy
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.values
            .iter()
            .zip(self.slack.iter())
            .enumerate()
            .map(|(i, (v, s))| (i + 1, *v, *s))
    }

    /// CSV export with columns `n,value,deficit_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,deficit_bound\n");
        for (n, v, s) in self.iter() {
            out.push_str(&format!("{n},{v:e},{s:e}\n"));
        }
        out
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }
}

/// Compute the return series of μ to index `n_max` under the policy.
pub fn return_series(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<ReturnSeries> {
    if n_max == 0 {
        return Err(RwError::Domain("return series needs N >= 1".into()));
    }
    let descriptor = format!("{:?}", mu);
    let policy_str = policy.to_string();
    let (values, slack, mass_deficit) = if mu.is_symmetric() {
        half_time_route(mu, n_max, policy)?
    } else {
        direct_route(mu, n_max, policy)?
    };
    Ok(ReturnSeries { values, slack, mass_deficit, descriptor, policy: policy_str })
}

fn slack_bound(deficit: f64, max_atom: f64) -> f64 {
    (deficit * (2.0 * max_atom + deficit)).min(1.0)
}

fn half_time_route(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    match mu.group().descriptor().kind() {
        GroupKind::Lattice(1) => dense_line(mu, n_max, policy),
        GroupKind::Lattice(2) if mu.support_len() <= 32 => dense_plane(mu, n_max, policy),
        GroupKind::Heisenberg3
            if mu.support_len() <= 16 && !matches!(policy, TruncationPolicy::Radius(_)) =>
        {
            dense_heisenberg(mu, n_max, policy)
        }
        _ => sparse_half_route(mu, n_max, policy),
    }
}

fn sparse_half_route(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut values = Vec::with_capacity(n_max);
    let mut slacks = Vec::with_capacity(n_max);
    let mut deficits = Vec::with_capacity(n_max);
    let mut cur = mu.clone();
    for _ in 1..=n_max {
        let value: f64 = cur.atoms().iter().map(|(_, w)| w * w).sum();
        values.push(value);
        slacks.push(slack_bound(cur.deficit(), cur.max_weight()));
        deficits.push(cur.deficit());
        if values.len() < n_max {
            cur = convolve(&cur, mu, policy)?;
        }
    }
    Ok((values, slacks, deficits))
}

fn direct_route(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut values = Vec::with_capacity(n_max);
    let mut slacks = Vec::with_capacity(n_max);
    let mut deficits = Vec::with_capacity(n_max);
    let mut cur = convolve(mu, mu, policy)?;
    for n in 1..=n_max {
        values.push(cur.weight_at_identity());
        slacks.push(cur.deficit().min(1.0));
        deficits.push(cur.deficit());
        if n < n_max {
            cur = convolve(&cur, mu, policy)?;
            cur = convolve(&cur, mu, policy)?;
        }
    }
    Ok((values, slacks, deficits))
}

/// Policy parameters digested for the dense paths.
struct DensePolicy {
    floor: f64,
    radius: Option<u32>,
}

impl DensePolicy {
    fn from(policy: &TruncationPolicy) -> Result<Self> {
        match policy {
            TruncationPolicy::None => Ok(DensePolicy { floor: 0.0, radius: None }),
            TruncationPolicy::MassFloor(e) => Ok(DensePolicy { floor: *e, radius: None }),
            TruncationPolicy::Radius(r) => Ok(DensePolicy { floor: 0.0, radius: Some(*r) }),
            TruncationPolicy::TopMass(_) => Err(RwError::Domain(
                "top_mass policy is not supported by the dense return-series path".into(),
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// dense 1-d path (any measure on Z)
// ---------------------------------------------------------------------------

struct LineMeasure {
    /// (offset, weight), sorted by offset.
    atoms: Vec<(i64, f64)>,
    /// Windowed mixture decomposition when the measure is radial and
    /// non-increasing: (radius, coefficient) with
    /// `μ = Σ coeff_r · 1_{[-r,r]}`.
    windows: Option<Vec<(i64, f64)>>,
    total: f64,
}

impl LineMeasure {
    fn digest(mu: &SparseMeasure) -> Self {
        let atoms: Vec<(i64, f64)> = mu
            .atoms()
            .iter()
            .map(|(g, w)| match g {
                GroupElement::Lattice(v) => (v[0], *w),
                _ => unreachable!("dense line path on non-lattice element"),
            })
            .collect();
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        let windows = Self::radial_windows(&atoms);
        LineMeasure { atoms, windows, total }
    }

    /// Detect a symmetric, radially non-increasing measure with contiguous
    /// support and decompose it into centered windows.
    fn radial_windows(atoms: &[(i64, f64)]) -> Option<Vec<(i64, f64)>> {
        if atoms.len() < 16 {
            return None; // per-atom passes are already cheap
        }
        let r = atoms.last()?.0;
        if atoms.first()?.0 != -r || atoms.len() as i64 != 2 * r + 1 {
            return None;
        }
        let w = |x: i64| atoms[(x + r) as usize].1;
        for x in 0..=r {
            if atoms[(x + r) as usize].0 != x || w(-x) != w(x) {
                return None;
            }
            if x > 0 && w(x) > w(x - 1) {
                return None;
            }
        }
        let mut windows = Vec::new();
        for x in 0..=r {
            let next = if x == r { 0.0 } else { w(x + 1) };
            let c = w(x) - next;
            if c > 0.0 {
                windows.push((x, c));
            }
        }
        Some(windows)
    }
}

struct LineField {
    lo: i64,
    vals: Vec<f64>,
}

impl LineField {
    fn sweep(&mut self, pol: &DensePolicy) -> f64 {
        let mut dropped = 0.0;
        if pol.floor > 0.0 {
            for v in self.vals.iter_mut() {
                if *v != 0.0 && *v < pol.floor {
                    dropped += *v;
                    *v = 0.0;
                }
            }
        }
        if let Some(r) = pol.radius {
            let r = r as i64;
            for (i, v) in self.vals.iter_mut().enumerate() {
                let x = self.lo + i as i64;
                if (x < -r || x > r) && *v != 0.0 {
                    dropped += *v;
                    *v = 0.0;
                }
            }
        }
        // shrink to the nonzero extent
        let first = self.vals.iter().position(|v| *v != 0.0).unwrap_or(0);
        let last = self.vals.iter().rposition(|v| *v != 0.0).unwrap_or(0);
        if first > 0 || last + 1 < self.vals.len() {
            self.lo += first as i64;
            self.vals.drain(..first);
            self.vals.truncate(last + 1 - first);
        }
        dropped
    }

    fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    fn l2(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    fn max(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::max)
    }
}

fn dense_line(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let pol = DensePolicy::from(policy)?;
    let m = LineMeasure::digest(mu);
    let min_s = m.atoms.first().unwrap().0;
    let max_s = m.atoms.last().unwrap().0;
    let mut field = LineField { lo: 0, vals: vec![1.0] };
    let mut deficit = mu.deficit();
    let mut values = Vec::with_capacity(n_max);
    let mut slacks = Vec::with_capacity(n_max);
    let mut deficits = Vec::with_capacity(n_max);
    for step in 1..=n_max {
        let in_total = field.total();
        let new_lo = field.lo + min_s;
        let new_len = field.vals.len() + (max_s - min_s) as usize;
        if new_len > DENSE_BUDGET {
            return Err(RwError::Resource {
                what: "dense line field".into(),
                completed: Some(step as u64 - 1),
            });
        }
        let mut out = vec![0.0f64; new_len];
        if let Some(windows) = &m.windows {
            // prefix sums of the input field
            let mut prefix = vec![0.0f64; field.vals.len() + 1];
            for (i, v) in field.vals.iter().enumerate() {
                prefix[i + 1] = prefix[i] + v;
            }
            let n_in = field.vals.len() as i64;
            let psum = |i: i64| -> f64 {
                // total of input cells with index <= i (input coordinates)
                let i = i.clamp(-1, n_in - 1);
                prefix[(i + 1) as usize]
            };
            for (idx, o) in out.iter_mut().enumerate() {
                let x = new_lo + idx as i64; // output coordinate
                let mut acc = 0.0;
                for (r, c) in windows {
                    // sum of in[x-r ..= x+r] in input coordinates
                    let a = x - r - field.lo;
                    let b = x + r - field.lo;
                    acc += c * (psum(b) - psum(a - 1));
                }
                *o = acc;
            }
        } else {
            for (s, w) in &m.atoms {
                // out[x] += w * in[x - s]
                let shift = (s - min_s) as usize;
                let dst = &mut out[shift..shift + field.vals.len()];
                for (d, v) in dst.iter_mut().zip(field.vals.iter()) {
                    *d += w * v;
                }
            }
        }
        field = LineField { lo: new_lo, vals: out };
        let mut dropped = field.sweep(&pol);
        let out_total = field.total();
        dropped += (in_total * m.total - out_total - dropped).max(0.0);
        deficit += in_total * mu.deficit() + dropped;
        values.push(field.l2());
        slacks.push(slack_bound(deficit, field.max()));
        deficits.push(deficit);
    }
    Ok((values, slacks, deficits))
}

// ---------------------------------------------------------------------------
// dense 2-d path (small-support measures on Z^2)
// ---------------------------------------------------------------------------

struct PlaneField {
    lo: [i64; 2],
    n: [usize; 2],
    vals: Vec<f64>, // row-major: (x - lo0) * n1 + (y - lo1)
}

impl PlaneField {
    fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    fn l2(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    fn max(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::max)
    }

    fn sweep(&mut self, pol: &DensePolicy) -> f64 {
        let mut dropped = 0.0;
        if pol.floor > 0.0 {
            for v in self.vals.iter_mut() {
                if *v != 0.0 && *v < pol.floor {
                    dropped += *v;
                    *v = 0.0;
                }
            }
        }
        if let Some(r) = pol.radius {
            let r = r as i64;
            for i in 0..self.n[0] {
                for j in 0..self.n[1] {
                    let x = self.lo[0] + i as i64;
                    let y = self.lo[1] + j as i64;
                    if x.abs() + y.abs() > r {
                        let v = &mut self.vals[i * self.n[1] + j];
                        if *v != 0.0 {
                            dropped += *v;
                            *v = 0.0;
                        }
                    }
                }
            }
        }
        // shrink rows/cols
        let nonzero_row = |field: &Self, i: usize| {
            field.vals[i * field.n[1]..(i + 1) * field.n[1]].iter().any(|v| *v != 0.0)
        };
        let mut i0 = 0;
        while i0 + 1 < self.n[0] && !nonzero_row(self, i0) {
            i0 += 1;
        }
        let mut i1 = self.n[0];
        while i1 > i0 + 1 && !nonzero_row(self, i1 - 1) {
            i1 -= 1;
        }
        let nonzero_col = |field: &Self, j: usize| {
            (i0..i1).any(|i| field.vals[i * field.n[1] + j] != 0.0)
        };
        let mut j0 = 0;
        while j0 + 1 < self.n[1] && !nonzero_col(self, j0) {
            j0 += 1;
        }
        let mut j1 = self.n[1];
        while j1 > j0 + 1 && !nonzero_col(self, j1 - 1) {
            j1 -= 1;
        }
        if i0 > 0 || i1 < self.n[0] || j0 > 0 || j1 < self.n[1] {
            let mut vals = vec![0.0; (i1 - i0) * (j1 - j0)];
            for i in i0..i1 {
                let src = &self.vals[i * self.n[1] + j0..i * self.n[1] + j1];
                vals[(i - i0) * (j1 - j0)..(i - i0 + 1) * (j1 - j0)].copy_from_slice(src);
            }
            self.lo = [self.lo[0] + i0 as i64, self.lo[1] + j0 as i64];
            self.n = [i1 - i0, j1 - j0];
            self.vals = vals;
        }
        dropped
    }
}

fn dense_plane(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let pol = DensePolicy::from(policy)?;
    let atoms: Vec<([i64; 2], f64)> = mu
        .atoms()
        .iter()
        .map(|(g, w)| match g {
            GroupElement::Lattice(v) => ([v[0], v[1]], *w),
            _ => unreachable!(),
        })
        .collect();
    let mu_total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let min0 = atoms.iter().map(|(a, _)| a[0]).min().unwrap();
    let max0 = atoms.iter().map(|(a, _)| a[0]).max().unwrap();
    let min1 = atoms.iter().map(|(a, _)| a[1]).min().unwrap();
    let max1 = atoms.iter().map(|(a, _)| a[1]).max().unwrap();
    let mut field = PlaneField { lo: [0, 0], n: [1, 1], vals: vec![1.0] };
    let mut deficit = mu.deficit();
    let mut values = Vec::with_capacity(n_max);
    let mut slacks = Vec::with_capacity(n_max);
    let mut deficits = Vec::with_capacity(n_max);
    for step in 1..=n_max {
        let in_total = field.total();
        let lo = [field.lo[0] + min0, field.lo[1] + min1];
        let n = [
            field.n[0] + (max0 - min0) as usize,
            field.n[1] + (max1 - min1) as usize,
        ];
        if n[0].saturating_mul(n[1]) > DENSE_BUDGET {
            return Err(RwError::Resource {
                what: "dense plane field".into(),
                completed: Some(step as u64 - 1),
            });
        }
        let mut out = vec![0.0f64; n[0] * n[1]];
        for (s, w) in &atoms {
            let di = (s[0] - min0) as usize;
            let dj = (s[1] - min1) as usize;
            for i in 0..field.n[0] {
                let src = &field.vals[i * field.n[1]..(i + 1) * field.n[1]];
                let dst_row = (i + di) * n[1] + dj;
                let dst = &mut out[dst_row..dst_row + field.n[1]];
                for (d, v) in dst.iter_mut().zip(src.iter()) {
                    *d += w * v;
                }
            }
        }
        field = PlaneField { lo, n, vals: out };
        let mut dropped = field.sweep(&pol);
        let out_total = field.total();
        dropped += (in_total * mu_total - out_total - dropped).max(0.0);
        deficit += in_total * mu.deficit() + dropped;
        values.push(field.l2());
        slacks.push(slack_bound(deficit, field.max()));
        deficits.push(deficit);
    }
    Ok((values, slacks, deficits))
}

// ---------------------------------------------------------------------------
// dense 3-d path (small-support measures on the Heisenberg group)
// ---------------------------------------------------------------------------

struct BoxField {
    lo: [i64; 3],
    n: [usize; 3],
    vals: Vec<f64>, // (a,b,c) -> ((a-lo0)*n1 + (b-lo1))*n2 + (c-lo2)
}

impl BoxField {
    fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    fn l2(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    fn max(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::max)
    }

    /// Floor sweep plus shrink of the bounding box.
    fn sweep(&mut self, floor: f64) -> f64 {
        let mut dropped = 0.0;
        if floor > 0.0 {
            for v in self.vals.iter_mut() {
                if *v != 0.0 && *v < floor {
                    dropped += *v;
                    *v = 0.0;
                }
            }
        }
        let (n1, n2) = (self.n[1], self.n[2]);
        let plane = n1 * n2;
        let nonzero_a = |f: &Self, i: usize| f.vals[i * plane..(i + 1) * plane].iter().any(|v| *v != 0.0);
        let mut a0 = 0;
        while a0 + 1 < self.n[0] && !nonzero_a(self, a0) {
            a0 += 1;
        }
        let mut a1 = self.n[0];
        while a1 > a0 + 1 && !nonzero_a(self, a1 - 1) {
            a1 -= 1;
        }
        let nonzero_b = |f: &Self, j: usize| {
            (a0..a1).any(|i| f.vals[i * plane + j * n2..i * plane + (j + 1) * n2].iter().any(|v| *v != 0.0))
        };
        let mut b0 = 0;
        while b0 + 1 < self.n[1] && !nonzero_b(self, b0) {
            b0 += 1;
        }
        let mut b1 = self.n[1];
        while b1 > b0 + 1 && !nonzero_b(self, b1 - 1) {
            b1 -= 1;
        }
        let nonzero_c = |f: &Self, k: usize| {
            (a0..a1).any(|i| (b0..b1).any(|j| f.vals[i * plane + j * n2 + k] != 0.0))
        };
        let mut c0 = 0;
        while c0 + 1 < self.n[2] && !nonzero_c(self, c0) {
            c0 += 1;
        }
        let mut c1 = self.n[2];
        while c1 > c0 + 1 && !nonzero_c(self, c1 - 1) {
            c1 -= 1;
        }
        if a0 > 0 || a1 < self.n[0] || b0 > 0 || b1 < self.n[1] || c0 > 0 || c1 < self.n[2] {
            let (ma, mb, mc) = (a1 - a0, b1 - b0, c1 - c0);
            let mut vals = vec![0.0f64; ma * mb * mc];
            for i in 0..ma {
                for j in 0..mb {
                    let src_base = (i + a0) * plane + (j + b0) * n2 + c0;
                    let dst_base = (i * mb + j) * mc;
                    vals[dst_base..dst_base + mc]
                        .copy_from_slice(&self.vals[src_base..src_base + mc]);
                }
            }
            self.lo = [self.lo[0] + a0 as i64, self.lo[1] + b0 as i64, self.lo[2] + c0 as i64];
            self.n = [ma, mb, mc];
            self.vals = vals;
        }
        dropped
    }
}

fn dense_heisenberg(
    mu: &SparseMeasure,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let pol = DensePolicy::from(policy)?;
    let atoms: Vec<([i64; 3], f64)> = mu
        .atoms()
        .iter()
        .map(|(g, w)| match g {
            GroupElement::Heisenberg(t) => (*t, *w),
            _ => unreachable!(),
        })
        .collect();
    let mu_total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let mut field = BoxField { lo: [0, 0, 0], n: [1, 1, 1], vals: vec![1.0] };
    let mut deficit = mu.deficit();
    let mut values = Vec::with_capacity(n_max);
    let mut slacks = Vec::with_capacity(n_max);
    let mut deficits = Vec::with_capacity(n_max);
    let pmin = atoms.iter().map(|(s, _)| s[0]).min().unwrap();
    let pmax = atoms.iter().map(|(s, _)| s[0]).max().unwrap();
    let qmin = atoms.iter().map(|(s, _)| s[1]).min().unwrap();
    let qmax = atoms.iter().map(|(s, _)| s[1]).max().unwrap();
    for step in 1..=n_max {
        let in_total = field.total();
        // output bounds: (a,b,c)·(p,q,r) = (a+p, b+q, c+r+a·q)
        let a_lo = field.lo[0] + pmin;
        let a_hi = field.lo[0] + field.n[0] as i64 - 1 + pmax;
        let b_lo = field.lo[1] + qmin;
        let b_hi = field.lo[1] + field.n[1] as i64 - 1 + qmax;
        let in_a_lo = field.lo[0];
        let in_a_hi = field.lo[0] + field.n[0] as i64 - 1;
        let in_c_lo = field.lo[2];
        let in_c_hi = field.lo[2] + field.n[2] as i64 - 1;
        let mut c_lo = i64::MAX;
        let mut c_hi = i64::MIN;
        for (s, _) in &atoms {
            for a in [in_a_lo, in_a_hi] {
                c_lo = c_lo.min(in_c_lo + s[2] + a * s[1]);
                c_hi = c_hi.max(in_c_hi + s[2] + a * s[1]);
            }
        }
        let n = [
            (a_hi - a_lo + 1) as usize,
            (b_hi - b_lo + 1) as usize,
            (c_hi - c_lo + 1) as usize,
        ];
        if n[0].saturating_mul(n[1]).saturating_mul(n[2]) > DENSE_BUDGET {
            return Err(RwError::Resource {
                what: "dense heisenberg field".into(),
                completed: Some(step as u64 - 1),
            });
        }
        let mut out = vec![0.0f64; n[0] * n[1] * n[2]];
        let in_plane = field.n[1] * field.n[2];
        let out_plane = n[1] * n[2];
        for (s, w) in &atoms {
            let [p, q, r] = *s;
            for ia in 0..field.n[0] {
                let a = field.lo[0] + ia as i64;
                // source row (a, b, c) lands at (a+p, b+q, c + r + a*q)
                let oa = (a + p - a_lo) as usize;
                let c_shift = r + a * q;
                for ib in 0..field.n[1] {
                    let b = field.lo[1] + ib as i64;
                    let ob = (b + q - b_lo) as usize;
                    let src = &field.vals[ia * in_plane + ib * field.n[2]
                        ..ia * in_plane + (ib + 1) * field.n[2]];
                    let dst_c0 = (field.lo[2] + c_shift - c_lo) as usize;
                    let dst_base = oa * out_plane + ob * n[2] + dst_c0;
                    let dst = &mut out[dst_base..dst_base + field.n[2]];
                    for (d, v) in dst.iter_mut().zip(src.iter()) {
                        *d += w * v;
                    }
                }
            }
        }
        field = BoxField { lo: [a_lo, b_lo, c_lo], n, vals: out };
        let mut dropped = field.sweep(pol.floor);
        let out_total = field.total();
        dropped += (in_total * mu_total - out_total - dropped).max(0.0);
        deficit += in_total * mu.deficit() + dropped;
        values.push(field.l2());
        slacks.push(slack_bound(deficit, field.max()));
        deficits.push(deficit);
    }
    Ok((values, slacks, deficits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Group, GroupDescriptor};
    use crate::measure::{radial_power_law, uniform_generator, RadialFlavor, SparseMeasure};

    #[test]
    fn z_walk_first_values() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&g);
        let s = return_series(&u, 4, &TruncationPolicy::None).unwrap();
        assert!((s.value(1) - 1.0 / 3.0).abs() < 1e-14);
        assert!((s.value(2) - 19.0 / 81.0).abs() < 1e-14);
        assert_eq!(s.slack(2), 0.0);
        assert!(s.is_nonincreasing());
    }

    #[test]
    fn delta_series_is_constant_one() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let d = SparseMeasure::delta(g);
        let s = return_series(&d, 5, &TruncationPolicy::None).unwrap();
        for n in 1..=5 {
            assert_eq!(s.value(n), 1.0);
            assert_eq!(s.slack(n), 0.0);
        }
    }

    #[test]
    fn lamplighter_split_one_step_by_pair_enumeration() {
        let lamp = Group::new(GroupDescriptor::cyclic(2));
        let base = Group::new(GroupDescriptor::lattice(1));
        let w = Group::new(GroupDescriptor::wreath(
            lamp.descriptor().clone(),
            base.descriptor().clone(),
        ));
        let mu = crate::measure::split_measure(
            &uniform_generator(&lamp),
            &uniform_generator(&base),
            &w,
        )
        .unwrap();
        let s = return_series(&mu, 1, &TruncationPolicy::None).unwrap();
        // brute-force pair enumeration of mu * mu at the identity
        let mut want = 0.0;
        for (a, wa) in mu.atoms() {
            for (b, wb) in mu.atoms() {
                if w.descriptor().mul(a, b) == w.identity() {
                    want += wa * wb;
                }
            }
        }
        assert!((s.value(1) - want).abs() < 1e-15);
    }

    #[test]
    fn dense_and_sparse_routes_agree_on_z2() {
        let g = Group::new(GroupDescriptor::lattice(2));
        let u = uniform_generator(&g);
        let dense = dense_plane(&u, 6, &TruncationPolicy::None).unwrap();
        let sparse = sparse_half_route(&u, 6, &TruncationPolicy::None).unwrap();
        for i in 0..6 {
            assert!(
                (dense.0[i] - sparse.0[i]).abs() < 1e-14,
                "n={} dense {} sparse {}",
                i + 1,
                dense.0[i],
                sparse.0[i]
            );
        }
    }

    #[test]
    fn dense_and_sparse_routes_agree_on_heisenberg() {
        let g = Group::new(GroupDescriptor::heisenberg3());
        let u = uniform_generator(&g);
        let dense = dense_heisenberg(&u, 5, &TruncationPolicy::None).unwrap();
        let sparse = sparse_half_route(&u, 5, &TruncationPolicy::None).unwrap();
        for i in 0..5 {
            assert!(
                (dense.0[i] - sparse.0[i]).abs() < 1e-14,
                "n={} dense {} sparse {}",
                i + 1,
                dense.0[i],
                sparse.0[i]
            );
        }
    }

    #[test]
    fn window_path_matches_atom_path_on_radial_measure() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let (m, _) = radial_power_law(&g, 1.2, RadialFlavor::Smooth, 24).unwrap();
        let via_dense = dense_line(&m, 4, &TruncationPolicy::None).unwrap();
        let via_sparse = sparse_half_route(&m, 4, &TruncationPolicy::None).unwrap();
        for i in 0..4 {
            assert!(
                (via_dense.0[i] - via_sparse.0[i]).abs() < 1e-12,
                "n={} {} vs {}",
                i + 1,
                via_dense.0[i],
                via_sparse.0[i]
            );
        }
    }

    #[test]
    fn truncated_series_is_a_lower_bound_with_valid_slack() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&g);
        let exact = return_series(&u, 16, &TruncationPolicy::None).unwrap();
        let truncated = return_series(&u, 16, &TruncationPolicy::Radius(4)).unwrap();
        for n in 1..=16 {
            assert!(truncated.value(n) <= exact.value(n) + 1e-15);
            assert!(
                exact.value(n) <= truncated.value(n) + truncated.slack(n) + 1e-15,
                "slack too small at n={n}"
            );
        }
    }

    #[test]
    fn mass_floor_deficit_grows_monotonically() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let u = uniform_generator(&g);
        let s = return_series(&u, 32, &TruncationPolicy::MassFloor(1e-6)).unwrap();
        for n in 2..=32 {
            assert!(s.mass_deficit(n) >= s.mass_deficit(n - 1));
        }
        assert!(s.mass_deficit(32) > 0.0);
        assert!(s.is_nonincreasing());
    }
}
