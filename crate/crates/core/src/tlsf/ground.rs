//! Parameter instantiation and expansion into a ground LTL problem.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Definition, SectionKind, Semantics, SpecExpr, TlsfSpec};
use crate::ltl::{LtlFormula, LtlProblem, ProblemPrefix};

/// A specification after parameter instantiation: no parameters, no ranged
/// operators, no indexed atoms, no macro calls. Bit `i` of a vector signal
/// `sig` becomes the atom `sig_i`; scalars keep their name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSpec {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub sections: BTreeMap<SectionKind, Vec<LtlFormula>>,
    pub semantics: Semantics,
}

impl GroundSpec {
    pub fn section(&self, kind: SectionKind) -> &[LtlFormula] {
        self.sections.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstantiateError {
    MissingParameter(String),
    NegativeParameter(String, i64),
    BadWidth { signal: String, value: i64 },
    IndexOutOfRange { signal: String, index: i64, width: i64 },
    NonTerminatingDefinition(String),
    ArityMismatch { definition: String, expected: usize, got: usize },
    ArithmeticOverflow,
    DivisionByZero,
    /// An identifier or subexpression used with the wrong type, e.g. a
    /// parameter in a Boolean position.
    TypeMismatch(String),
}

impl fmt::Display for InstantiateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstantiateError::MissingParameter(p) => write!(f, "no binding for parameter `{p}`"),
            InstantiateError::NegativeParameter(p, v) => {
                write!(f, "parameter `{p}` bound to negative value {v}")
            }
            InstantiateError::BadWidth { signal, value } => {
                write!(f, "width of signal `{signal}` evaluates to {value}, expected >= 1")
            }
            InstantiateError::IndexOutOfRange { signal, index, width } => {
                write!(f, "index {index} out of range [0, {width}) for signal `{signal}`")
            }
            InstantiateError::NonTerminatingDefinition(d) => {
                write!(f, "expansion of definition `{d}` exceeds the depth limit")
            }
            InstantiateError::ArityMismatch { definition, expected, got } => {
                write!(f, "definition `{definition}` takes {expected} arguments, got {got}")
            }
            InstantiateError::ArithmeticOverflow => write!(f, "64-bit arithmetic overflow"),
            InstantiateError::DivisionByZero => write!(f, "division by zero"),
            InstantiateError::TypeMismatch(what) => write!(f, "type mismatch: {what}"),
        }
    }
}

const MACRO_DEPTH_LIMIT: usize = 64;

/// Values bound to a macro formal at a call site.
#[derive(Clone)]
enum Bound {
    Int(i64),
    Formula(LtlFormula),
}

struct Env<'a> {
    /// Parameters, range indices, and integer-bound formals.
    ints: BTreeMap<String, i64>,
    /// Formula-bound macro formals.
    formulas: BTreeMap<String, LtlFormula>,
    /// Declared signal widths; `None` marks a scalar.
    signals: BTreeMap<&'a str, Option<i64>>,
    definitions: &'a [Definition],
}

/// Instantiate all parameters, expand ranged operators and macros, and
/// rewrite indexed atoms to their `sig_i` ground names. `bindings` overrides
/// declared parameter defaults.
pub fn instantiate(
    spec: &TlsfSpec,
    bindings: &BTreeMap<String, i64>,
) -> Result<GroundSpec, InstantiateError> {
    let mut ints = BTreeMap::new();
    for (name, default) in &spec.parameters {
        let v = bindings.get(name).copied().unwrap_or(*default);
        if v < 0 {
            return Err(InstantiateError::NegativeParameter(name.clone(), v));
        }
        ints.insert(name.clone(), v);
    }
    for name in bindings.keys() {
        if !spec.parameters.iter().any(|(n, _)| n == name) {
            return Err(InstantiateError::MissingParameter(name.clone()));
        }
    }

    let mut env = Env {
        ints,
        formulas: BTreeMap::new(),
        signals: BTreeMap::new(),
        definitions: &spec.definitions,
    };

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (decls, ground) in [(&spec.inputs, &mut inputs), (&spec.outputs, &mut outputs)] {
        for decl in decls.iter() {
            match &decl.width {
                None => {
                    env.signals.insert(&decl.name, None);
                    ground.push(decl.name.clone());
                }
                Some(w) => {
                    let width = eval_int(w, &env, MACRO_DEPTH_LIMIT)?;
                    if width < 1 {
                        return Err(InstantiateError::BadWidth {
                            signal: decl.name.clone(),
                            value: width,
                        });
                    }
                    env.signals.insert(&decl.name, Some(width));
                    for i in 0..width {
                        ground.push(format!("{}_{i}", decl.name));
                    }
                }
            }
        }
    }

    let mut sections = BTreeMap::new();
    for (kind, exprs) in &spec.sections {
        let mut ground_exprs = Vec::with_capacity(exprs.len());
        for e in exprs {
            ground_exprs.push(eval_bool(e, &env, MACRO_DEPTH_LIMIT)?);
        }
        sections.insert(*kind, ground_exprs);
    }

    Ok(GroundSpec {
        inputs,
        outputs,
        sections,
        semantics: spec.semantics,
    })
}

fn eval_int(e: &SpecExpr, env: &Env, depth: usize) -> Result<i64, InstantiateError> {
    match e {
        SpecExpr::Num(n) => Ok(*n),
        SpecExpr::Ident(name) => env
            .ints
            .get(name)
            .copied()
            .ok_or_else(|| InstantiateError::TypeMismatch(format!("`{name}` is not an integer"))),
        SpecExpr::Add(a, b) => eval_int(a, env, depth)?
            .checked_add(eval_int(b, env, depth)?)
            .ok_or(InstantiateError::ArithmeticOverflow),
        SpecExpr::Sub(a, b) => eval_int(a, env, depth)?
            .checked_sub(eval_int(b, env, depth)?)
            .ok_or(InstantiateError::ArithmeticOverflow),
        SpecExpr::Mul(a, b) => eval_int(a, env, depth)?
            .checked_mul(eval_int(b, env, depth)?)
            .ok_or(InstantiateError::ArithmeticOverflow),
        SpecExpr::Div(a, b) => {
            let d = eval_int(b, env, depth)?;
            if d == 0 {
                return Err(InstantiateError::DivisionByZero);
            }
            eval_int(a, env, depth)?
                .checked_div(d)
                .ok_or(InstantiateError::ArithmeticOverflow)
        }
        other => Err(InstantiateError::TypeMismatch(format!(
            "expected an arithmetic expression, found {other:?}"
        ))),
    }
}

/// Whether an expression can only be arithmetic, used to type macro
/// arguments at call sites.
fn is_arith(e: &SpecExpr, env: &Env) -> bool {
    match e {
        SpecExpr::Num(_) => true,
        SpecExpr::Ident(name) => env.ints.contains_key(name),
        SpecExpr::Add(a, b) | SpecExpr::Sub(a, b) | SpecExpr::Mul(a, b) | SpecExpr::Div(a, b) => {
            is_arith(a, env) && is_arith(b, env)
        }
        _ => false,
    }
}

fn eval_bool(e: &SpecExpr, env: &Env, depth: usize) -> Result<LtlFormula, InstantiateError> {
    match e {
        SpecExpr::True => Ok(LtlFormula::True),
        SpecExpr::False => Ok(LtlFormula::False),
        SpecExpr::Ident(name) => {
            if let Some(f) = env.formulas.get(name) {
                return Ok(f.clone());
            }
            match env.signals.get(name.as_str()) {
                Some(None) => Ok(LtlFormula::atom(name.clone())),
                Some(Some(w)) => Err(InstantiateError::TypeMismatch(format!(
                    "vector signal `{name}` of width {w} used without an index"
                ))),
                None => {
                    // Zero-argument definitions may be referenced bare.
                    if env.definitions.iter().any(|d| d.name == *name) {
                        expand_call(name, &[], env, depth)
                    } else {
                        Err(InstantiateError::TypeMismatch(format!(
                            "`{name}` is not usable as a Boolean atom"
                        )))
                    }
                }
            }
        }
        SpecExpr::Index(name, idx) => {
            let width = match env.signals.get(name.as_str()) {
                Some(Some(w)) => *w,
                Some(None) => {
                    return Err(InstantiateError::TypeMismatch(format!(
                        "scalar signal `{name}` used with an index"
                    )))
                }
                None => {
                    return Err(InstantiateError::TypeMismatch(format!(
                        "`{name}` is not an indexable signal"
                    )))
                }
            };
            let k = eval_int(idx, env, depth)?;
            if k < 0 || k >= width {
                return Err(InstantiateError::IndexOutOfRange {
                    signal: name.clone(),
                    index: k,
                    width,
                });
            }
            Ok(LtlFormula::atom(format!("{name}_{k}")))
        }
        SpecExpr::Call(name, args) => expand_call(name, args, env, depth),
        SpecExpr::Not(x) => Ok(LtlFormula::not(eval_bool(x, env, depth)?)),
        SpecExpr::Next(x) => Ok(LtlFormula::next(eval_bool(x, env, depth)?)),
        SpecExpr::Globally(x) => Ok(LtlFormula::globally(eval_bool(x, env, depth)?)),
        SpecExpr::Eventually(x) => Ok(LtlFormula::eventually(eval_bool(x, env, depth)?)),
        SpecExpr::And(a, b) => Ok(LtlFormula::and(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::Or(a, b) => Ok(LtlFormula::or(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::Implies(a, b) => Ok(LtlFormula::implies(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::Iff(a, b) => Ok(LtlFormula::iff(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::Until(a, b) => Ok(LtlFormula::until(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::WeakUntil(a, b) => Ok(LtlFormula::weak_until(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::Release(a, b) => Ok(LtlFormula::release(
            eval_bool(a, env, depth)?,
            eval_bool(b, env, depth)?,
        )),
        SpecExpr::RangeAnd { var, lo, hi, body } => {
            expand_range(var, lo, hi, body, env, depth, true)
        }
        SpecExpr::RangeOr { var, lo, hi, body } => {
            expand_range(var, lo, hi, body, env, depth, false)
        }
        SpecExpr::Num(n) => Err(InstantiateError::TypeMismatch(format!(
            "integer {n} used in a Boolean position"
        ))),
        SpecExpr::Add(..) | SpecExpr::Sub(..) | SpecExpr::Mul(..) | SpecExpr::Div(..) => {
            Err(InstantiateError::TypeMismatch(
                "arithmetic expression used in a Boolean position".into(),
            ))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn expand_range(
    var: &str,
    lo: &SpecExpr,
    hi: &SpecExpr,
    body: &SpecExpr,
    env: &Env,
    depth: usize,
    conjunctive: bool,
) -> Result<LtlFormula, InstantiateError> {
    let lo = eval_int(lo, env, depth)?;
    let hi = eval_int(hi, env, depth)?;
    let mut acc: Option<LtlFormula> = None;
    for i in lo..hi {
        let mut inner = Env {
            ints: env.ints.clone(),
            formulas: env.formulas.clone(),
            signals: env.signals.clone(),
            definitions: env.definitions,
        };
        inner.ints.insert(var.into(), i);
        let f = eval_bool(body, &inner, depth)?;
        acc = Some(match acc {
            None => f,
            Some(a) if conjunctive => LtlFormula::and(a, f),
            Some(a) => LtlFormula::or(a, f),
        });
    }
    // Empty ranges fold to the neutral element.
    Ok(acc.unwrap_or(if conjunctive {
        LtlFormula::True
    } else {
        LtlFormula::False
    }))
}

fn expand_call(
    name: &str,
    args: &[SpecExpr],
    env: &Env,
    depth: usize,
) -> Result<LtlFormula, InstantiateError> {
    if depth == 0 {
        return Err(InstantiateError::NonTerminatingDefinition(name.into()));
    }
    let def = env
        .definitions
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| InstantiateError::TypeMismatch(format!("`{name}` is not a definition")))?;
    if def.params.len() != args.len() {
        return Err(InstantiateError::ArityMismatch {
            definition: name.into(),
            expected: def.params.len(),
            got: args.len(),
        });
    }
    let mut bound = Vec::with_capacity(args.len());
    for a in args {
        bound.push(if is_arith(a, env) {
            Bound::Int(eval_int(a, env, depth)?)
        } else {
            Bound::Formula(eval_bool(a, env, depth)?)
        });
    }
    // The macro body sees parameters and signals plus its own formals;
    // enclosing range indices are not captured (lexical scoping).
    let mut inner = Env {
        ints: env.ints.clone(),
        formulas: BTreeMap::new(),
        signals: env.signals.clone(),
        definitions: env.definitions,
    };
    for (formal, value) in def.params.iter().zip(bound) {
        match value {
            Bound::Int(v) => {
                inner.ints.insert(formal.clone(), v);
            }
            Bound::Formula(f) => {
                inner.formulas.insert(formal.clone(), f);
            }
        }
    }
    eval_bool(&def.body, &inner, depth - 1)
}

/// Expand the six sections under the declared semantics.
///
/// Non-strict: `f_initially -> (f_preset & (G f_require & f_assume ->
/// G f_assert & f_guarantee))`. Strict: `f_initially -> (f_preset &
/// (f_assert W !f_require) & (G f_require & f_assume -> f_guarantee))`,
/// where the weak-until conjunct appears exactly when REQUIRE or ASSERT is
/// nonempty. Each `f_X` is the raw conjunction of its section's expressions
/// with `true` for an empty section; no simplification is applied beyond
/// the strict-conjunct omission.
pub fn expand_semantics(ground: &GroundSpec) -> LtlProblem {
    let conj = |kind: SectionKind| LtlFormula::conjoin(ground.section(kind));
    let f_initially = conj(SectionKind::Initially);
    let f_preset = conj(SectionKind::Preset);
    let f_require = conj(SectionKind::Require);
    let f_assert = conj(SectionKind::Assert);
    let f_assume = conj(SectionKind::Assume);
    let f_guarantee = conj(SectionKind::Guarantee);

    let has_require = !ground.section(SectionKind::Require).is_empty();
    let has_assert = !ground.section(SectionKind::Assert).is_empty();

    let antecedent = LtlFormula::and(LtlFormula::globally(f_require.clone()), f_assume.clone());

    let (phi, strict_conjunct) = if ground.semantics.is_strict() {
        let implication = LtlFormula::implies(antecedent, f_guarantee.clone());
        let strict = (has_require || has_assert).then(|| {
            LtlFormula::weak_until(f_assert.clone(), LtlFormula::not(f_require.clone()))
        });
        let body = match &strict {
            Some(w) => LtlFormula::and(w.clone(), implication),
            None => implication,
        };
        (
            LtlFormula::implies(f_initially.clone(), LtlFormula::and(f_preset.clone(), body)),
            strict,
        )
    } else {
        let consequent = LtlFormula::and(LtlFormula::globally(f_assert.clone()), f_guarantee);
        (
            LtlFormula::implies(
                f_initially.clone(),
                LtlFormula::and(
                    f_preset.clone(),
                    LtlFormula::implies(antecedent, consequent),
                ),
            ),
            None,
        )
    };

    let mut assumptions = Vec::new();
    if has_require {
        assumptions.push(LtlFormula::globally(f_require));
    }
    assumptions.extend(ground.section(SectionKind::Assume).iter().cloned());

    let mut guarantees = Vec::new();
    if !ground.semantics.is_strict() && has_assert {
        guarantees.push(LtlFormula::globally(f_assert));
    }
    guarantees.extend(ground.section(SectionKind::Guarantee).iter().cloned());

    LtlProblem {
        inputs: ground.inputs.clone(),
        outputs: ground.outputs.clone(),
        phi,
        assumptions,
        guarantees,
        prefix: ProblemPrefix {
            initially: f_initially,
            preset: f_preset,
            strict: strict_conjunct,
        },
    }
}
