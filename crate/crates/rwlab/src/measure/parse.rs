//! Declarative measure descriptor grammar.
//!
//! ```text
//! measure := "delta" | "uniform_gen" | "uniform"            // aliases
//!          | "uniform_ball(r=R)"
//!          | "radial_power(alpha=A, flavor=smooth|dyadic [, horizon=R])"
//!          | "radial_log(k=K, epsilon=E [, horizon=R])"
//!          | "split(lamp=MEASURE, base=MEASURE)"
//!          | "sws(lamp=MEASURE, base=MEASURE)"
//!          | "subordinate(base=MEASURE, f=BERNSTEIN, terms=N)"
//! bernstein := "identity" | "power(A)" | "localized(alpha=A, t=T)"
//!            | "tail(f=BERNSTEIN, cutoff=T)"
//! ```

use super::{
    radial_log_law, radial_power_law, split_measure, subordinate, sws_measure, uniform_ball,
    uniform_generator, BernsteinSpec, RadialFlavor, SparseMeasure,
};
use crate::conv::TruncationPolicy;
use crate::error::{Result, RwError};
use crate::group::{Group, GroupKind};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub const DEFAULT_HORIZON: u32 = 256;

/// Parsed measure descriptor; build against a concrete group with
/// [`MeasureSpec::build`].
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Delta,
    UniformGen,
    UniformBall { r: u32 },
    RadialPower { alpha: f64, flavor: RadialFlavor, horizon: u32 },
    RadialLog { k: u32, epsilon: f64, horizon: u32 },
    Split { lamp: Box<MeasureSpec>, base: Box<MeasureSpec> },
    Sws { lamp: Box<MeasureSpec>, base: Box<MeasureSpec> },
    Subordinate { base: Box<MeasureSpec>, f: BernsteinSpec, terms: u32 },
}

impl MeasureSpec {
    /// Construct the measure on the given group.
    pub fn build(&self, group: &Arc<Group>) -> Result<SparseMeasure> {
        match self {
            MeasureSpec::Delta => Ok(SparseMeasure::delta(group.clone())),
            MeasureSpec::UniformGen => Ok(uniform_generator(group)),
            MeasureSpec::UniformBall { r } => uniform_ball(group, *r),
            MeasureSpec::RadialPower { alpha, flavor, horizon } => {
                Ok(radial_power_law(group, *alpha, *flavor, *horizon)?.0)
            }
            MeasureSpec::RadialLog { k, epsilon, horizon } => {
                Ok(radial_log_law(group, *k, *epsilon, *horizon)?.0)
            }
            MeasureSpec::Split { lamp, base } => {
                let (lg, bg) = wreath_factors(group)?;
                let ml = lamp.build(&lg)?;
                let mb = base.build(&bg)?;
                split_measure(&ml, &mb, group)
            }
            MeasureSpec::Sws { lamp, base } => {
                let (lg, bg) = wreath_factors(group)?;
                let ml = lamp.build(&lg)?;
                let mb = base.build(&bg)?;
                sws_measure(&ml, &mb, group)
            }
            MeasureSpec::Subordinate { base, f, terms } => {
                let mu = base.build(group)?;
                f.verify_normalization()?;
                subordinate(&mu, f, *terms as usize, &TruncationPolicy::None)
            }
        }
    }
}

fn wreath_factors(group: &Arc<Group>) -> Result<(Arc<Group>, Arc<Group>)> {
    match group.descriptor().kind() {
        GroupKind::Wreath { lamp, base } => Ok((
            Group::with_budget((**lamp).clone(), group.ball_budget()),
            Group::with_budget((**base).clone(), group.ball_budget()),
        )),
        _ => Err(RwError::mismatch(group.descriptor().to_string(), "wreath(..)")),
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Delta => write!(f, "delta"),
            MeasureSpec::UniformGen => write!(f, "uniform_gen"),
            MeasureSpec::UniformBall { r } => write!(f, "uniform_ball(r={r})"),
            MeasureSpec::RadialPower { alpha, flavor, horizon } => {
                let fl = match flavor {
                    RadialFlavor::Smooth => "smooth",
                    RadialFlavor::Dyadic => "dyadic",
                };
                write!(f, "radial_power(alpha={alpha}, flavor={fl}, horizon={horizon})")
            }
            MeasureSpec::RadialLog { k, epsilon, horizon } => {
                write!(f, "radial_log(k={k}, epsilon={epsilon}, horizon={horizon})")
            }
            MeasureSpec::Split { lamp, base } => write!(f, "split(lamp={lamp}, base={base})"),
            MeasureSpec::Sws { lamp, base } => write!(f, "sws(lamp={lamp}, base={base})"),
            MeasureSpec::Subordinate { base, f: bf, terms } => {
                write!(f, "subordinate(base={base}, f={}, terms={terms})", display_bernstein(bf))
            }
        }
    }
}

fn display_bernstein(b: &BernsteinSpec) -> String {
    match b {
        BernsteinSpec::Identity => "identity".into(),
        BernsteinSpec::Power { alpha } => format!("power({alpha})"),
        BernsteinSpec::Localized { alpha, t } => format!("localized(alpha={alpha}, t={t})"),
        BernsteinSpec::TailNormalized { base, cutoff } => {
            format!("tail(f={}, cutoff={cutoff})", display_bernstein(base))
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = RwError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Cursor { s, i: 0 };
        let spec = parse_measure(&mut p)?;
        p.skip_ws();
        if p.i != s.len() {
            return Err(RwError::Parse(format!("trailing input in measure: {:?}", &s[p.i..])));
        }
        Ok(spec)
    }
}

struct Cursor<'a> {
    s: &'a str,
    i: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.s[self.i..].starts_with(|c: char| c.is_whitespace()) {
            self.i += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> Result<()> {
        self.skip_ws();
        if self.s[self.i..].starts_with(tok) {
            self.i += tok.len();
            Ok(())
        } else {
            Err(RwError::Parse(format!(
                "expected {tok:?} at {:?}",
                &self.s[self.i..self.s.len().min(self.i + 24)]
            )))
        }
    }

    fn try_eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.i..].starts_with(tok) {
            self.i += tok.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.s[self.i..];
        let end = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E'))
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(RwError::Parse(format!("expected number at {rest:?}")));
        }
        let v = rest[..end]
            .parse::<f64>()
            .map_err(|e| RwError::Parse(format!("bad number {:?}: {e}", &rest[..end])))?;
        self.i += end;
        Ok(v)
    }

    fn integer(&mut self) -> Result<u64> {
        let v = self.number()?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(RwError::Parse(format!("expected non-negative integer, got {v}")));
        }
        Ok(v as u64)
    }

    fn key(&mut self, name: &str) -> Result<()> {
        self.eat(name)?;
        self.eat("=")
    }
}

fn parse_measure(p: &mut Cursor) -> Result<MeasureSpec> {
    p.skip_ws();
    let rest = &p.s[p.i..];
    if rest.starts_with("delta") {
        p.eat("delta")?;
        Ok(MeasureSpec::Delta)
    } else if rest.starts_with("uniform_gen") {
        p.eat("uniform_gen")?;
        Ok(MeasureSpec::UniformGen)
    } else if rest.starts_with("uniform_ball") {
        p.eat("uniform_ball")?;
        p.eat("(")?;
        p.key("r")?;
        let r = p.integer()? as u32;
        p.eat(")")?;
        Ok(MeasureSpec::UniformBall { r })
    } else if rest.starts_with("uniform") {
        p.eat("uniform")?;
        Ok(MeasureSpec::UniformGen)
    } else if rest.starts_with("radial_power") {
        p.eat("radial_power")?;
        p.eat("(")?;
        p.key("alpha")?;
        let alpha = p.number()?;
        p.eat(",")?;
        p.key("flavor")?;
        let flavor = if p.try_eat("smooth") {
            RadialFlavor::Smooth
        } else if p.try_eat("dyadic") {
            RadialFlavor::Dyadic
        } else {
            return Err(RwError::Parse("flavor must be smooth or dyadic".into()));
        };
        let horizon = if p.try_eat(",") {
            p.key("horizon")?;
            p.integer()? as u32
        } else {
            DEFAULT_HORIZON
        };
        p.eat(")")?;
        if alpha <= 0.0 {
            return Err(RwError::Parse("radial_power needs alpha > 0".into()));
        }
        Ok(MeasureSpec::RadialPower { alpha, flavor, horizon })
    } else if rest.starts_with("radial_log") {
        p.eat("radial_log")?;
        p.eat("(")?;
        p.key("k")?;
        let k = p.integer()? as u32;
        p.eat(",")?;
        p.key("epsilon")?;
        let epsilon = p.number()?;
        let horizon = if p.try_eat(",") {
            p.key("horizon")?;
            p.integer()? as u32
        } else {
            DEFAULT_HORIZON
        };
        p.eat(")")?;
        if k < 1 || epsilon <= 0.0 {
            return Err(RwError::Parse("radial_log needs k >= 1 and epsilon > 0".into()));
        }
        Ok(MeasureSpec::RadialLog { k, epsilon, horizon })
    } else if rest.starts_with("split") || rest.starts_with("sws") {
        let is_split = rest.starts_with("split");
        p.eat(if is_split { "split" } else { "sws" })?;
        p.eat("(")?;
        p.key("lamp")?;
        let lamp = parse_measure(p)?;
        p.eat(",")?;
        p.key("base")?;
        let base = parse_measure(p)?;
        p.eat(")")?;
        Ok(if is_split {
            MeasureSpec::Split { lamp: Box::new(lamp), base: Box::new(base) }
        } else {
            MeasureSpec::Sws { lamp: Box::new(lamp), base: Box::new(base) }
        })
    } else if rest.starts_with("subordinate") {
        p.eat("subordinate")?;
        p.eat("(")?;
        p.key("base")?;
        let base = parse_measure(p)?;
        p.eat(",")?;
        p.key("f")?;
        let f = parse_bernstein(p)?;
        p.eat(",")?;
        p.key("terms")?;
        let terms = p.integer()? as u32;
        p.eat(")")?;
        if terms == 0 {
            return Err(RwError::Parse("subordinate needs terms >= 1".into()));
        }
        Ok(MeasureSpec::Subordinate { base: Box::new(base), f, terms })
    } else {
        Err(RwError::Parse(format!("unknown measure descriptor at {rest:?}")))
    }
}

fn parse_bernstein(p: &mut Cursor) -> Result<BernsteinSpec> {
    p.skip_ws();
    let rest = &p.s[p.i..];
    if rest.starts_with("identity") {
        p.eat("identity")?;
        Ok(BernsteinSpec::Identity)
    } else if rest.starts_with("power") {
        p.eat("power")?;
        p.eat("(")?;
        let alpha = p.number()?;
        p.eat(")")?;
        BernsteinSpec::power(alpha).map_err(|e| RwError::Parse(e.to_string()))
    } else if rest.starts_with("localized") {
        p.eat("localized")?;
        p.eat("(")?;
        p.key("alpha")?;
        let alpha = p.number()?;
        p.eat(",")?;
        p.key("t")?;
        let t = p.number()?;
        p.eat(")")?;
        BernsteinSpec::localized(alpha, t).map_err(|e| RwError::Parse(e.to_string()))
    } else if rest.starts_with("tail") {
        p.eat("tail")?;
        p.eat("(")?;
        p.key("f")?;
        let base = parse_bernstein(p)?;
        p.eat(",")?;
        p.key("cutoff")?;
        let cutoff = p.number()?;
        p.eat(")")?;
        BernsteinSpec::tail_normalized(base, cutoff).map_err(|e| RwError::Parse(e.to_string()))
    } else {
        Err(RwError::Parse(format!("unknown Bernstein spec at {rest:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;

    #[test]
    fn roundtrip_specs() {
        for s in [
            "uniform_gen",
            "delta",
            "uniform_ball(r=3)",
            "radial_power(alpha=0.8, flavor=smooth, horizon=4096)",
            "radial_log(k=2, epsilon=0.5, horizon=64)",
            "split(lamp=uniform_gen, base=radial_power(alpha=1.5, flavor=dyadic, horizon=256))",
            "sws(lamp=uniform_gen, base=uniform_gen)",
            "subordinate(base=uniform_gen, f=power(0.5), terms=256)",
            "subordinate(base=uniform_gen, f=localized(alpha=0.5, t=3), terms=64)",
            "subordinate(base=uniform_gen, f=tail(f=power(0.5), cutoff=2), terms=64)",
        ] {
            let spec: MeasureSpec = s.parse().unwrap();
            let printed = spec.to_string();
            let reparsed: MeasureSpec = printed.parse().unwrap();
            assert_eq!(spec, reparsed, "roundtrip failed for {s}");
        }
    }

    #[test]
    fn uniform_alias_and_default_horizon() {
        let spec: MeasureSpec = "split(lamp=uniform, base=radial_power(alpha=1.5, flavor=smooth))"
            .parse()
            .unwrap();
        match spec {
            MeasureSpec::Split { base, .. } => match *base {
                MeasureSpec::RadialPower { horizon, .. } => assert_eq!(horizon, DEFAULT_HORIZON),
                _ => panic!("wrong base"),
            },
            _ => panic!("wrong spec"),
        }
    }

    #[test]
    fn build_split_on_lamplighter() {
        let g = Group::new(GroupDescriptor::wreath(
            GroupDescriptor::cyclic(2),
            GroupDescriptor::lattice(1),
        ));
        let spec: MeasureSpec = "split(lamp=uniform_gen, base=uniform_gen)".parse().unwrap();
        let m = spec.build(&g).unwrap();
        assert!(m.is_symmetric());
        assert_eq!(m.support_len(), 4);
    }

    #[test]
    fn build_split_on_non_wreath_is_an_error() {
        let g = Group::new(GroupDescriptor::lattice(1));
        let spec: MeasureSpec = "split(lamp=uniform_gen, base=uniform_gen)".parse().unwrap();
        assert!(spec.build(&g).is_err());
    }
}
