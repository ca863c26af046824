//! Modelling layer: named variable slices, affine rows and cones.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Affine expression `Σ coef·x[var] + constant`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn var(index: usize) -> Self {
        Self {
            terms: vec![(index, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn term(mut self, index: usize, coef: f64) -> Self {
        self.add_term(index, coef);
        self
    }

    pub fn plus_constant(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn add_term(&mut self, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
    }

    /// Adds `scale * other` to `self`.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        for &(i, c) in &other.terms {
            self.add_term(i, scale * c);
        }
        self.constant += scale * other.constant;
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = LinExpr::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn has_variables(&self) -> bool {
        self.terms.iter().any(|&(_, c)| c != 0.0)
    }
}

/// Identifies the physical origin of a row (constraint family and grid
/// index) so residuals can be reported per family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTag {
    pub family: String,
    pub index: usize,
}

impl RowTag {
    pub fn new(family: impl Into<String>, index: usize) -> Self {
        Self {
            family: family.into(),
            index,
        }
    }
}

/// `expr = 0`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equality {
    pub expr: LinExpr,
    pub tag: RowTag,
}

/// `lower ≤ expr ≤ upper`; a missing side is unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub expr: LinExpr,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub tag: RowTag,
}

/// `entries[0] ≥ ‖entries[1..]‖`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocConstraint {
    pub entries: Vec<LinExpr>,
    pub tag: RowTag,
}

/// `x[var] = value`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pinned {
    pub var: usize,
    pub value: f64,
    pub tag: RowTag,
}

/// A contiguous named slice of the decision vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBlock {
    pub name: String,
    pub index: Option<usize>,
    pub offset: usize,
    pub len: usize,
}

impl VarBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// A second-order cone program `min objective` over affine rows and cones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub blocks: Vec<VarBlock>,
    pub objective: LinExpr,
    pub equalities: Vec<Equality>,
    pub bounds: Vec<Bound>,
    pub socs: Vec<SocConstraint>,
    pub pinned: Vec<Pinned>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a named slice of `len` fresh variables.
    pub fn add_block(&mut self, name: &str, index: Option<usize>, len: usize) -> Range<usize> {
        let offset = self.num_vars;
        self.num_vars += len;
        self.blocks.push(VarBlock {
            name: name.to_string(),
            index,
            offset,
            len,
        });
        offset..offset + len
    }

    pub fn block(&self, name: &str, index: Option<usize>) -> Option<&VarBlock> {
        self.blocks
            .iter()
            .find(|b| b.name == name && b.index == index)
    }

    pub fn add_equality(&mut self, expr: LinExpr, tag: RowTag) {
        self.equalities.push(Equality { expr, tag });
    }

    pub fn add_bound(&mut self, expr: LinExpr, lower: Option<f64>, upper: Option<f64>, tag: RowTag) {
        self.bounds.push(Bound {
            expr,
            lower,
            upper,
            tag,
        });
    }

    pub fn add_soc(&mut self, entries: Vec<LinExpr>, tag: RowTag) {
        self.socs.push(SocConstraint { entries, tag });
    }

    pub fn pin(&mut self, var: usize, value: f64, tag: RowTag) {
        self.pinned.push(Pinned { var, value, tag });
    }

    /// Number of decision scalars left once pinned variables are removed.
    pub fn free_scalar_count(&self) -> usize {
        let mut pinned: Vec<usize> = self.pinned.iter().map(|p| p.var).collect();
        pinned.sort_unstable();
        pinned.dedup();
        self.num_vars - pinned.len()
    }

    /// Values of the named slice inside a full decision vector.
    pub fn extract<'a>(&self, x: &'a [f64], name: &str, index: Option<usize>) -> Option<&'a [f64]> {
        self.block(name, index).map(|b| &x[b.range()])
    }

    /// Writes `values` into the named slice of `x`.
    pub fn assemble(&self, x: &mut [f64], name: &str, index: Option<usize>, values: &[f64]) -> Result<()> {
        let block = self
            .block(name, index)
            .ok_or_else(|| Error::Dimension(format!("no variable block {name}[{index:?}]")))?;
        if block.len != values.len() {
            return Err(Error::Dimension(format!(
                "block {name} has {} entries, got {}",
                block.len,
                values.len()
            )));
        }
        x[block.range()].copy_from_slice(values);
        Ok(())
    }

    /// Checks variable indices and block layout.
    pub fn validate(&self) -> Result<()> {
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            for &(i, c) in &e.terms {
                if i >= self.num_vars {
                    return Err(Error::Dimension(format!(
                        "{what} references variable {i} but the program has {}",
                        self.num_vars
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::Dimension(format!("{what} has a non-finite coefficient")));
                }
            }
            if !e.constant.is_finite() {
                return Err(Error::Dimension(format!("{what} has a non-finite constant")));
            }
            Ok(())
        };
        for b in &self.blocks {
            if b.offset + b.len > self.num_vars {
                return Err(Error::Dimension(format!("block {} exceeds the variable count", b.name)));
            }
        }
        check(&self.objective, "objective")?;
        for (k, e) in self.equalities.iter().enumerate() {
            check(&e.expr, &format!("equality {k}"))?;
        }
        for (k, b) in self.bounds.iter().enumerate() {
            check(&b.expr, &format!("bound {k}"))?;
        }
        for (k, s) in self.socs.iter().enumerate() {
            for e in &s.entries {
                check(e, &format!("cone {k}"))?;
            }
            if s.entries.is_empty() || !s.entries.iter().any(LinExpr::has_variables) {
                return Err(Error::EmptyCone { index: k });
            }
        }
        for p in &self.pinned {
            if p.var >= self.num_vars {
                return Err(Error::Dimension(format!("pinned variable {} out of range", p.var)));
            }
        }
        Ok(())
    }
}

const DUMP_FORMAT: &str = "topp-conic-program";
const DUMP_VERSION: u32 = 1;

/// Versioned on-disk representation of a [`ConicProgram`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProgramDump {
    pub format: String,
    pub version: u32,
    pub program: ConicProgram,
}

impl ProgramDump {
    pub fn new(program: ConicProgram) -> Self {
        Self {
            format: DUMP_FORMAT.to_string(),
            version: DUMP_VERSION,
            program,
        }
    }

    /// True when a parsed JSON value looks like a program dump.
    pub fn is_dump(value: &serde_json::Value) -> bool {
        value.get("format").and_then(|f| f.as_str()) == Some(DUMP_FORMAT)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let dump: ProgramDump = serde_json::from_value(value)?;
        dump.check()?;
        Ok(dump)
    }

    fn check(&self) -> Result<()> {
        if self.format != DUMP_FORMAT {
            return Err(Error::Format(format!("unknown format {:?}", self.format)));
        }
        if self.version != DUMP_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        self.program.validate()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dump: ProgramDump = serde_json::from_str(&text)?;
        dump.check()?;
        Ok(dump)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_round_trip() {
        let mut p = ConicProgram::new();
        p.add_block("b", None, 1);
        p.add_block("a", Some(0), 2);
        p.add_block("a", Some(1), 2);
        let mut x = vec![0.0; p.num_vars];
        p.assemble(&mut x, "a", Some(1), &[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 0.0, 3.0, 4.0]);
        assert_eq!(p.extract(&x, "a", Some(1)).unwrap(), &[3.0, 4.0]);
        assert!(p.assemble(&mut x, "a", Some(1), &[1.0]).is_err());
    }

    #[test]
    fn empty_cone_is_rejected() {
        let mut p = ConicProgram::new();
        p.add_block("x", None, 1);
        p.add_soc(vec![LinExpr::constant(1.0), LinExpr::constant(0.0)], RowTag::new("c", 0));
        assert!(matches!(p.validate(), Err(Error::EmptyCone { index: 0 })));
    }

    #[test]
    fn dump_round_trip() {
        let mut p = ConicProgram::new();
        p.add_block("x", None, 2);
        p.objective = LinExpr::var(0).term(1, 2.0);
        p.add_bound(LinExpr::var(0), Some(0.0), None, RowTag::new("lb", 0));
        p.pin(1, 1.5, RowTag::new("pin", 0));
        let dump = ProgramDump::new(p.clone());
        let value = serde_json::to_value(&dump).unwrap();
        assert!(ProgramDump::is_dump(&value));
        let back = ProgramDump::from_value(value).unwrap();
        assert_eq!(back.program, p);
        assert_eq!(back.program.free_scalar_count(), 1);
    }
}
