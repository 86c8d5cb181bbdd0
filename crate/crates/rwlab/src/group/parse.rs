//! Declarative group descriptor grammar.
//!
//! ```text
//! group := "lattice(" dim ")" | "cyclic(" order ")" | "heisenberg3"
//!        | "wreath(" group "," group ")"          // wreath(lamp, base)
//! ```

use super::{GroupDescriptor, GroupKind};
use crate::error::{Result, RwError};
use std::fmt;
use std::str::FromStr;

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GroupKind::Lattice(d) => write!(f, "lattice({d})"),
            GroupKind::Cyclic(m) => write!(f, "cyclic({m})"),
            GroupKind::Heisenberg3 => write!(f, "heisenberg3"),
            GroupKind::Wreath { lamp, base } => write!(f, "wreath({lamp}, {base})"),
        }
    }
}

impl FromStr for GroupDescriptor {
    type Err = RwError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { input: s, pos: 0 };
        let d = p.parse_group()?;
        p.skip_ws();
        if p.pos != p.input.len() {
            return Err(RwError::Parse(format!(
                "trailing input after group descriptor: {:?}",
                &p.input[p.pos..]
            )));
        }
        Ok(d)
    }
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.input[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> Result<()> {
        self.skip_ws();
        if self.input[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            Ok(())
        } else {
            Err(RwError::Parse(format!(
                "expected {tok:?} at {:?}",
                &self.input[self.pos..self.input.len().min(self.pos + 16)]
            )))
        }
    }

    fn parse_u64(&mut self) -> Result<u64> {
        self.skip_ws();
        let rest = &self.input[self.pos..];
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if end == 0 {
            return Err(RwError::Parse(format!("expected integer at {rest:?}")));
        }
        let v = rest[..end]
            .parse::<u64>()
            .map_err(|e| RwError::Parse(format!("bad integer: {e}")))?;
        self.pos += end;
        Ok(v)
    }

    fn parse_group(&mut self) -> Result<GroupDescriptor> {
        self.skip_ws();
        let rest = &self.input[self.pos..];
        if rest.starts_with("lattice") {
            self.eat("lattice")?;
            self.eat("(")?;
            let d = self.parse_u64()?;
            self.eat(")")?;
            if d == 0 {
                return Err(RwError::Parse("lattice dimension must be >= 1".into()));
            }
            Ok(GroupDescriptor::lattice(d as usize))
        } else if rest.starts_with("cyclic") {
            self.eat("cyclic")?;
            self.eat("(")?;
            let m = self.parse_u64()?;
            self.eat(")")?;
            if m == 0 {
                return Err(RwError::Parse("cyclic order must be >= 1".into()));
            }
            Ok(GroupDescriptor::cyclic(m))
        } else if rest.starts_with("heisenberg3") {
            self.eat("heisenberg3")?;
            Ok(GroupDescriptor::heisenberg3())
        } else if rest.starts_with("wreath") {
            self.eat("wreath")?;
            self.eat("(")?;
            let lamp = self.parse_group()?;
            self.eat(",")?;
            let base = self.parse_group()?;
            self.eat(")")?;
            Ok(GroupDescriptor::wreath(lamp, base))
        } else {
            Err(RwError::Parse(format!("unknown group descriptor at {rest:?}")))
        }
    }
}
