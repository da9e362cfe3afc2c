//! TLSF specification frontend: parsing of the supported subset, metadata
//! stripping, parameter instantiation, and expansion of the six-section
//! structure into a ground LTL problem.
//!
//! The grammar of the supported subset is documented in `docs/tlsf-subset.md`
//! at the repository root.

mod ground;
#[cfg(test)]
mod tests;
mod lexer;
mod parser;
mod render;
mod strip;

pub use ground::{expand_semantics, instantiate, GroundSpec, InstantiateError};
pub use parser::parse_tlsf;
pub use render::render_tlsf;
pub use strip::strip_metadata;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Interpretation convention for the six semantic sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Semantics {
    Mealy,
    Moore,
    MealyStrict,
    MooreStrict,
}

impl Semantics {
    pub fn is_strict(self) -> bool {
        matches!(self, Semantics::MealyStrict | Semantics::MooreStrict)
    }

    pub fn name(self) -> &'static str {
        match self {
            Semantics::Mealy => "Mealy",
            Semantics::Moore => "Moore",
            Semantics::MealyStrict => "Mealy,Strict",
            Semantics::MooreStrict => "Moore,Strict",
        }
    }
}

/// The six semantic sections of a TLSF MAIN block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SectionKind {
    Initially,
    Preset,
    Require,
    Assert,
    Assume,
    Guarantee,
}

impl SectionKind {
    pub const ALL: [SectionKind; 6] = [
        SectionKind::Initially,
        SectionKind::Preset,
        SectionKind::Require,
        SectionKind::Assert,
        SectionKind::Assume,
        SectionKind::Guarantee,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            SectionKind::Initially => "INITIALLY",
            SectionKind::Preset => "PRESET",
            SectionKind::Require => "REQUIRE",
            SectionKind::Assert => "ASSERT",
            SectionKind::Assume => "ASSUME",
            SectionKind::Guarantee => "GUARANTEE",
        }
    }
}

/// A declared input or output signal. `width` is `None` for a scalar single
/// bit, otherwise an arithmetic expression over parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalDecl {
    pub name: String,
    pub width: Option<SpecExpr>,
}

/// A non-recursive macro from the DEFINITIONS block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    pub body: SpecExpr,
}

/// Expression tree used uniformly for section bodies, signal widths, range
/// bounds, and macro arguments. Whether a subtree is Boolean or arithmetic
/// is decided by context during instantiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecExpr {
    True,
    False,
    Num(i64),
    Ident(String),
    /// `sig[e]` — one bit of a declared vector signal.
    Index(String, alloc::boxed::Box<SpecExpr>),
    /// `name(arg, ...)` — macro application.
    Call(String, Vec<SpecExpr>),
    Not(alloc::boxed::Box<SpecExpr>),
    And(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Or(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Implies(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Iff(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Next(alloc::boxed::Box<SpecExpr>),
    Globally(alloc::boxed::Box<SpecExpr>),
    Eventually(alloc::boxed::Box<SpecExpr>),
    Until(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    WeakUntil(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Release(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Add(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Sub(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Mul(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    Div(alloc::boxed::Box<SpecExpr>, alloc::boxed::Box<SpecExpr>),
    /// `&&[lo <= var < hi] body`
    RangeAnd {
        var: String,
        lo: alloc::boxed::Box<SpecExpr>,
        hi: alloc::boxed::Box<SpecExpr>,
        body: alloc::boxed::Box<SpecExpr>,
    },
    /// `||[lo <= var < hi] body`
    RangeOr {
        var: String,
        lo: alloc::boxed::Box<SpecExpr>,
        hi: alloc::boxed::Box<SpecExpr>,
        body: alloc::boxed::Box<SpecExpr>,
    },
}

/// A parsed TLSF specification, before parameter instantiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TlsfSpec {
    pub parameters: Vec<(String, i64)>,
    pub definitions: Vec<Definition>,
    pub inputs: Vec<SignalDecl>,
    pub outputs: Vec<SignalDecl>,
    pub sections: BTreeMap<SectionKind, Vec<SpecExpr>>,
    pub semantics: Semantics,
    /// Whether a semantics declaration was present in the source (absent
    /// declarations default to Mealy and are flagged in run records).
    pub semantics_declared: bool,
}

impl TlsfSpec {
    pub fn section(&self, kind: SectionKind) -> &[SpecExpr] {
        self.sections.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parameter(&self, name: &str) -> Option<i64> {
        self.parameters
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Parse failure with source position, formatted as
/// `line:col: expected <set>, found <token>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        for (i, e) in self.expected.iter().enumerate() {
            if i > 0 {
                f.write_str(if i + 1 == self.expected.len() {
                    " or "
                } else {
                    ", "
                })?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ", found {}", self.found)
    }
}
