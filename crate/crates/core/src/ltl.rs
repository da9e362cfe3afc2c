//! LTL formulas, rendering in tool dialects, lasso-trace evaluation, bounded
//! inequivalence search, and assumption/guarantee decomposition.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// An LTL formula over named atomic propositions.
///
/// Structural equality is syntactic; no simplification happens on
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Iff(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    WeakUntil(Box<LtlFormula>, Box<LtlFormula>),
    Release(Box<LtlFormula>, Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        LtlFormula::Atom(name.into())
    }

    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Iff(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    pub fn globally(f: LtlFormula) -> Self {
        LtlFormula::Globally(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn release(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Release(Box::new(a), Box::new(b))
    }

    /// Conjunction that folds the neutral element instead of keeping it.
    pub fn and_fold(a: LtlFormula, b: LtlFormula) -> Self {
        match (a, b) {
            (LtlFormula::True, b) => b,
            (a, LtlFormula::True) => a,
            (a, b) => LtlFormula::and(a, b),
        }
    }

    /// Implication that folds a `true` antecedent away.
    pub fn implies_fold(a: LtlFormula, b: LtlFormula) -> Self {
        match a {
            LtlFormula::True => b,
            a => LtlFormula::implies(a, b),
        }
    }

    /// Left-associated conjunction of a list; the empty list is `true`.
    pub fn conjoin(fs: &[LtlFormula]) -> Self {
        let mut it = fs.iter().cloned();
        match it.next() {
            None => LtlFormula::True,
            Some(first) => it.fold(first, LtlFormula::and),
        }
    }

    /// The set of atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            LtlFormula::True | LtlFormula::False => {}
            LtlFormula::Atom(a) => {
                out.insert(a.clone());
            }
            LtlFormula::Not(f)
            | LtlFormula::Next(f)
            | LtlFormula::Globally(f)
            | LtlFormula::Eventually(f) => f.collect_atoms(out),
            LtlFormula::And(a, b)
            | LtlFormula::Or(a, b)
            | LtlFormula::Implies(a, b)
            | LtlFormula::Iff(a, b)
            | LtlFormula::Until(a, b)
            | LtlFormula::WeakUntil(a, b)
            | LtlFormula::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => 1,
            LtlFormula::Not(f)
            | LtlFormula::Next(f)
            | LtlFormula::Globally(f)
            | LtlFormula::Eventually(f) => 1 + f.size(),
            LtlFormula::And(a, b)
            | LtlFormula::Or(a, b)
            | LtlFormula::Implies(a, b)
            | LtlFormula::Iff(a, b)
            | LtlFormula::Until(a, b)
            | LtlFormula::WeakUntil(a, b)
            | LtlFormula::Release(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Output dialect for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// SMV `LTLSPEC` expression syntax (no W, no R).
    Smv,
    /// Spot formula syntax as accepted by ltlfilt.
    Spot,
    /// TLSF expression syntax, used when quoting formulas in feedback.
    TlsfExpr,
}

/// Render a formula in the given dialect, parenthesizing only where the
/// dialect's precedence requires it; binary temporal operators are always
/// parenthesized as subterms since their precedence differs across tools.
/// Dialects lacking W get the definitional rewrite `a W b = (a U b) | G a`;
/// R is rewritten by duality (`a R b = !(!a U !b)`) where absent.
pub fn render(f: &LtlFormula, dialect: Dialect) -> String {
    let mut out = String::new();
    render_prec(f, dialect, LEVEL_TOP, &mut out);
    out
}

// Binding strengths, loosest to tightest. Binary temporal operators get a
// level below everything so they are parenthesized in any subterm position.
const LEVEL_TOP: i8 = -2;
const LEVEL_TEMPORAL_BIN: i8 = -1;
const LEVEL_IFF: i8 = 0;
const LEVEL_IMPLIES: i8 = 1;
const LEVEL_OR: i8 = 2;
const LEVEL_AND: i8 = 3;
const LEVEL_UNARY: i8 = 5;
const LEVEL_ATOM: i8 = 6;

fn level(f: &LtlFormula) -> i8 {
    match f {
        LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => LEVEL_ATOM,
        LtlFormula::Not(_)
        | LtlFormula::Next(_)
        | LtlFormula::Globally(_)
        | LtlFormula::Eventually(_) => LEVEL_UNARY,
        LtlFormula::And(..) => LEVEL_AND,
        LtlFormula::Or(..) => LEVEL_OR,
        LtlFormula::Implies(..) => LEVEL_IMPLIES,
        LtlFormula::Iff(..) => LEVEL_IFF,
        LtlFormula::Until(..) | LtlFormula::WeakUntil(..) | LtlFormula::Release(..) => {
            LEVEL_TEMPORAL_BIN
        }
    }
}

fn render_prec(f: &LtlFormula, d: Dialect, required: i8, out: &mut String) {
    if level(f) < required {
        out.push('(');
        render_prec(f, d, LEVEL_TOP, out);
        out.push(')');
        return;
    }
    let (t, ff, and, or) = match d {
        Dialect::Smv => ("TRUE", "FALSE", " & ", " | "),
        Dialect::Spot => ("1", "0", " & ", " | "),
        Dialect::TlsfExpr => ("true", "false", " && ", " || "),
    };
    match f {
        LtlFormula::True => out.push_str(t),
        LtlFormula::False => out.push_str(ff),
        LtlFormula::Atom(a) => out.push_str(a),
        LtlFormula::Not(x) => {
            out.push('!');
            render_prec(x, d, LEVEL_UNARY, out);
        }
        LtlFormula::Next(x) => render_un("X ", x, d, out),
        LtlFormula::Globally(x) => render_un("G ", x, d, out),
        LtlFormula::Eventually(x) => render_un("F ", x, d, out),
        LtlFormula::And(a, b) => {
            render_prec(a, d, LEVEL_AND, out);
            out.push_str(and);
            render_prec(b, d, LEVEL_AND, out);
        }
        LtlFormula::Or(a, b) => {
            render_prec(a, d, LEVEL_OR, out);
            out.push_str(or);
            render_prec(b, d, LEVEL_OR, out);
        }
        LtlFormula::Implies(a, b) => {
            // Right-associative: nested implications on the left are wrapped.
            render_prec(a, d, LEVEL_OR, out);
            out.push_str(" -> ");
            render_prec(b, d, LEVEL_IMPLIES, out);
        }
        LtlFormula::Iff(a, b) => {
            render_prec(a, d, LEVEL_IMPLIES, out);
            out.push_str(" <-> ");
            render_prec(b, d, LEVEL_IFF, out);
        }
        LtlFormula::Until(a, b) => render_temporal_bin(a, " U ", b, d, out),
        LtlFormula::WeakUntil(a, b) => match d {
            // SMV has no weak until: a W b = (a U b) | G a
            Dialect::Smv => {
                let rewritten = LtlFormula::or(
                    LtlFormula::until((**a).clone(), (**b).clone()),
                    LtlFormula::globally((**a).clone()),
                );
                render_prec(&rewritten, d, required.max(LEVEL_TOP), out);
            }
            Dialect::Spot | Dialect::TlsfExpr => render_temporal_bin(a, " W ", b, d, out),
        },
        LtlFormula::Release(a, b) => match d {
            // Keep one rewrite path for all R-less dialects: a R b = !(!a U !b).
            Dialect::Smv => {
                let rewritten = LtlFormula::not(LtlFormula::until(
                    LtlFormula::not((**a).clone()),
                    LtlFormula::not((**b).clone()),
                ));
                render_prec(&rewritten, d, required, out);
            }
            Dialect::Spot | Dialect::TlsfExpr => render_temporal_bin(a, " R ", b, d, out),
        },
    }
}

fn render_temporal_bin(a: &LtlFormula, op: &str, b: &LtlFormula, d: Dialect, out: &mut String) {
    render_prec(a, d, LEVEL_UNARY, out);
    out.push_str(op);
    render_prec(b, d, LEVEL_UNARY, out);
}

fn render_un(op: &str, x: &LtlFormula, d: Dialect, out: &mut String) {
    out.push_str(op);
    render_prec(x, d, LEVEL_UNARY, out);
}

/// One step of a trace: a total assignment for the problem's atoms.
pub type Valuation = BTreeMap<String, bool>;

/// A finite stem followed by a repeated loop, denoting the ultimately
/// periodic word `stem . loop^omega`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoTrace {
    pub stem: Vec<Valuation>,
    pub looped: Vec<Valuation>,
}

impl LassoTrace {
    pub fn new(stem: Vec<Valuation>, looped: Vec<Valuation>) -> Self {
        assert!(!looped.is_empty(), "loop must be nonempty");
        LassoTrace { stem, looped }
    }

    pub fn len(&self) -> usize {
        self.stem.len() + self.looped.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Valuation at an absolute position of the infinite word.
    pub fn at(&self, pos: usize) -> &Valuation {
        if pos < self.stem.len() {
            &self.stem[pos]
        } else {
            &self.looped[(pos - self.stem.len()) % self.looped.len()]
        }
    }

    /// Union of atoms assigned in any step.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for v in self.stem.iter().chain(self.looped.iter()) {
            out.extend(v.keys().cloned());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnknownAtom(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnknownAtom(a) => write!(f, "atom `{a}` is not assigned by the trace"),
        }
    }
}

/// Whether `stem . loop^omega` satisfies `f` under standard LTL semantics.
pub fn eval_lasso(f: &LtlFormula, t: &LassoTrace) -> Result<bool, EvalError> {
    Ok(eval_lasso_positions(f, t)?[0])
}

/// Satisfaction of `f` at every position of the lasso's canonical
/// `stem + loop` window. Position 0 is the start of the word.
pub fn eval_lasso_positions(f: &LtlFormula, t: &LassoTrace) -> Result<Vec<bool>, EvalError> {
    let trace_atoms = t.atoms();
    for a in f.atoms() {
        if !trace_atoms.contains(&a) {
            return Err(EvalError::UnknownAtom(a));
        }
    }
    let compiled = CompiledFormula::compile(f);
    let letters: Vec<u64> = (0..t.len())
        .map(|p| compiled.letter_bits(t.at(p)))
        .collect();
    let vals = compiled.eval(&letters, t.stem.len());
    Ok(vals[compiled.roots[0]].clone())
}

// ---------------------------------------------------------------------------
// Compiled evaluation
// ---------------------------------------------------------------------------

/// Flattened operator nodes; children are indices into the node list, which
/// is in postorder (children before parents).
#[derive(Debug, Clone, Copy)]
enum Node {
    True,
    False,
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Iff(usize, usize),
    Next(usize),
    Globally(usize),
    Eventually(usize),
    Until(usize, usize),
    WeakUntil(usize, usize),
    Release(usize, usize),
}

/// One or more formulas flattened to a shared postorder node list with
/// structural sharing, plus the atom vocabulary in first-seen order.
pub(crate) struct CompiledFormula {
    nodes: Vec<Node>,
    pub(crate) atoms: Vec<String>,
    pub(crate) roots: Vec<usize>,
}

impl CompiledFormula {
    pub(crate) fn compile(f: &LtlFormula) -> Self {
        Self::compile_many(&[f])
    }

    pub(crate) fn compile_many(fs: &[&LtlFormula]) -> Self {
        let mut c = CompiledFormula {
            nodes: Vec::new(),
            atoms: Vec::new(),
            roots: Vec::new(),
        };
        let mut memo: BTreeMap<LtlFormula, usize> = BTreeMap::new();
        for f in fs {
            let r = c.intern(f, &mut memo);
            c.roots.push(r);
        }
        c
    }

    fn intern(&mut self, f: &LtlFormula, memo: &mut BTreeMap<LtlFormula, usize>) -> usize {
        if let Some(&i) = memo.get(f) {
            return i;
        }
        let node = match f {
            LtlFormula::True => Node::True,
            LtlFormula::False => Node::False,
            LtlFormula::Atom(a) => {
                let ai = match self.atoms.iter().position(|x| x == a) {
                    Some(i) => i,
                    None => {
                        self.atoms.push(a.clone());
                        self.atoms.len() - 1
                    }
                };
                Node::Atom(ai)
            }
            LtlFormula::Not(x) => Node::Not(self.intern(x, memo)),
            LtlFormula::Next(x) => Node::Next(self.intern(x, memo)),
            LtlFormula::Globally(x) => Node::Globally(self.intern(x, memo)),
            LtlFormula::Eventually(x) => Node::Eventually(self.intern(x, memo)),
            LtlFormula::And(a, b) => Node::And(self.intern(a, memo), self.intern(b, memo)),
            LtlFormula::Or(a, b) => Node::Or(self.intern(a, memo), self.intern(b, memo)),
            LtlFormula::Implies(a, b) => Node::Implies(self.intern(a, memo), self.intern(b, memo)),
            LtlFormula::Iff(a, b) => Node::Iff(self.intern(a, memo), self.intern(b, memo)),
            LtlFormula::Until(a, b) => Node::Until(self.intern(a, memo), self.intern(b, memo)),
            LtlFormula::WeakUntil(a, b) => {
                Node::WeakUntil(self.intern(a, memo), self.intern(b, memo))
            }
            LtlFormula::Release(a, b) => Node::Release(self.intern(a, memo), self.intern(b, memo)),
        };
        self.nodes.push(node);
        let i = self.nodes.len() - 1;
        memo.insert(f.clone(), i);
        i
    }

    pub(crate) fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Encode a named valuation as an atom bitmask in vocabulary order.
    fn letter_bits(&self, v: &Valuation) -> u64 {
        let mut bits = 0u64;
        for (i, a) in self.atoms.iter().enumerate() {
            if v.get(a).copied().unwrap_or(false) {
                bits |= 1 << i;
            }
        }
        bits
    }

    /// Per-node satisfaction vectors over the positions `0..letters.len()`,
    /// where positions `stem_len..` form the loop.
    ///
    /// Temporal operators are resolved bottom-up: each node does two backward
    /// sweeps over the loop (least fixpoints start at false, greatest at
    /// true), then one backward pass over the stem.
    pub(crate) fn eval(&self, letters: &[u64], stem_len: usize) -> Vec<Vec<bool>> {
        let n = letters.len();
        debug_assert!(stem_len < n);
        let mut vals: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        let succ = |p: usize| if p + 1 < n { p + 1 } else { stem_len };
        for node in &self.nodes {
            let v = match *node {
                Node::True => vec![true; n],
                Node::False => vec![false; n],
                Node::Atom(ai) => (0..n).map(|p| letters[p] >> ai & 1 == 1).collect(),
                Node::Not(x) => vals[x].iter().map(|b| !b).collect(),
                Node::And(a, b) => (0..n).map(|p| vals[a][p] && vals[b][p]).collect(),
                Node::Or(a, b) => (0..n).map(|p| vals[a][p] || vals[b][p]).collect(),
                Node::Implies(a, b) => (0..n).map(|p| !vals[a][p] || vals[b][p]).collect(),
                Node::Iff(a, b) => (0..n).map(|p| vals[a][p] == vals[b][p]).collect(),
                Node::Next(x) => (0..n).map(|p| vals[x][succ(p)]).collect(),
                Node::Globally(x) => {
                    Self::fixpoint(n, stem_len, true, |p, nxt| vals[x][p] && nxt)
                }
                Node::Eventually(x) => {
                    Self::fixpoint(n, stem_len, false, |p, nxt| vals[x][p] || nxt)
                }
                Node::Until(a, b) => Self::fixpoint(n, stem_len, false, |p, nxt| {
                    vals[b][p] || (vals[a][p] && nxt)
                }),
                Node::WeakUntil(a, b) => Self::fixpoint(n, stem_len, true, |p, nxt| {
                    vals[b][p] || (vals[a][p] && nxt)
                }),
                Node::Release(a, b) => Self::fixpoint(n, stem_len, true, |p, nxt| {
                    vals[b][p] && (vals[a][p] || nxt)
                }),
            };
            vals.push(v);
        }
        vals
    }

    fn fixpoint(
        n: usize,
        stem_len: usize,
        init: bool,
        step: impl Fn(usize, bool) -> bool,
    ) -> Vec<bool> {
        let mut v = vec![init; n];
        // Two backward sweeps over the loop reach the fixpoint: a flip
        // propagates backward at most one full loop length per sweep.
        for _ in 0..2 {
            for p in (stem_len..n).rev() {
                let nxt = if p + 1 < n { v[p + 1] } else { v[stem_len] };
                v[p] = step(p, nxt);
            }
        }
        for p in (0..stem_len).rev() {
            let nxt = v[p + 1];
            v[p] = step(p, nxt);
        }
        v
    }

    /// Column (bitset over nodes) at the start of the loop, after resolving
    /// the loop itself; used by the stem-extension search.
    fn loop_column(&self, loop_letters: &[u64]) -> u64 {
        let vals = self.eval(loop_letters, 0);
        let mut col = 0u64;
        for (i, v) in vals.iter().enumerate() {
            if v[0] {
                col |= 1 << i;
            }
        }
        col
    }

    /// Column at a stem position given its letter and the successor column.
    fn prepend_column(&self, letter: u64, succ: u64) -> u64 {
        let mut col = 0u64;
        for (i, node) in self.nodes.iter().enumerate() {
            let bit = |j: usize| col >> j & 1 == 1;
            let nxt = |j: usize| succ >> j & 1 == 1;
            let v = match *node {
                Node::True => true,
                Node::False => false,
                Node::Atom(ai) => letter >> ai & 1 == 1,
                Node::Not(x) => !bit(x),
                Node::And(a, b) => bit(a) && bit(b),
                Node::Or(a, b) => bit(a) || bit(b),
                Node::Implies(a, b) => !bit(a) || bit(b),
                Node::Iff(a, b) => bit(a) == bit(b),
                Node::Next(x) => nxt(x),
                Node::Globally(x) => bit(x) && nxt(i),
                Node::Eventually(x) => bit(x) || nxt(i),
                Node::Until(a, b) => bit(b) || (bit(a) && nxt(i)),
                Node::WeakUntil(a, b) => bit(b) || (bit(a) && nxt(i)),
                Node::Release(a, b) => bit(b) && (bit(a) || nxt(i)),
            };
            if v {
                col |= 1 << i;
            }
        }
        col
    }
}

// ---------------------------------------------------------------------------
// Bounded inequivalence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InequivError {
    /// The lasso/atom enumeration space exceeds the configured cap.
    BudgetExceeded { lassos: u128, cap: u128 },
    TooManyAtoms { atoms: usize, max_atoms: usize },
    TooManyNodes(usize),
}

impl fmt::Display for InequivError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InequivError::BudgetExceeded { lassos, cap } => {
                write!(f, "enumeration space of {lassos} lassos exceeds cap {cap}")
            }
            InequivError::TooManyAtoms { atoms, max_atoms } => {
                write!(f, "{atoms} atoms exceed the configured maximum {max_atoms}")
            }
            InequivError::TooManyNodes(n) => write!(f, "{n} formula nodes exceed 64"),
        }
    }
}

/// Result of the bounded search: either a first differing trace or the fact
/// that none was found within the bounds (which is not an equivalence proof).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InequivResult {
    Witness(LassoTrace),
    NoneFound,
}

pub const DEFAULT_INEQUIV_CAP: u128 = 1 << 26;

/// Exhaustively enumerate all lassos with `|stem| + |loop| <= max_len` over
/// the joint atom set of `f` and `g` and return the first trace on which they
/// disagree. Enumeration order is: shorter total length first, then the
/// combined stem-loop word lexicographically with atoms in declared
/// (first-seen) order, then longer stems first among equal words.
pub fn bounded_inequiv(
    f: &LtlFormula,
    g: &LtlFormula,
    max_atoms: usize,
    max_len: usize,
    cap: u128,
) -> Result<InequivResult, InequivError> {
    let compiled = CompiledFormula::compile_many(&[f, g]);
    if compiled.nodes.len() > 64 {
        return Err(InequivError::TooManyNodes(compiled.nodes.len()));
    }
    let k = compiled.num_atoms();
    if k > max_atoms || k > 16 {
        return Err(InequivError::TooManyAtoms {
            atoms: k,
            max_atoms,
        });
    }
    let letters_per_step: u128 = 1u128 << k;
    let mut total: u128 = 0;
    for t in 1..=max_len {
        let words = letters_per_step.saturating_pow(t as u32);
        total = total.saturating_add(words.saturating_mul(t as u128));
    }
    if total > cap {
        return Err(InequivError::BudgetExceeded { lassos: total, cap });
    }

    let rf = compiled.roots[0];
    let rg = compiled.roots[1];
    let num_letters = 1u64 << k;

    // Best witness under the documented enumeration order, keyed by
    // (total length, word letters, loop length).
    let mut best: Option<((usize, Vec<u64>, usize), LassoTrace)> = None;

    // Loop-major traversal for speed; the ordering key restores the
    // documented order when picking the witness.
    for loop_len in 1..=max_len {
        let mut loop_word = vec![0u64; loop_len];
        'loops: loop {
            let col0 = compiled.loop_column(&loop_word);
            if (col0 >> rf & 1) != (col0 >> rg & 1) {
                consider_witness(&compiled, &loop_word, &[], col0, rf, rg, &mut best);
            }
            // Prepend stems depth-first; `stack` holds (letter, column).
            let max_stem = max_len - loop_len;
            if max_stem > 0 {
                let mut stem_rev: Vec<u64> = Vec::new();
                extend_stems(
                    &compiled,
                    &loop_word,
                    col0,
                    num_letters,
                    max_stem,
                    rf,
                    rg,
                    &mut stem_rev,
                    &mut best,
                );
            }
            // next loop word, lexicographic
            let mut i = loop_len;
            loop {
                if i == 0 {
                    break 'loops;
                }
                i -= 1;
                loop_word[i] += 1;
                if loop_word[i] < num_letters {
                    break;
                }
                loop_word[i] = 0;
            }
        }
    }

    Ok(match best {
        Some((_, w)) => InequivResult::Witness(w),
        None => InequivResult::NoneFound,
    })
}

#[allow(clippy::too_many_arguments)]
fn extend_stems(
    compiled: &CompiledFormula,
    loop_word: &[u64],
    succ_col: u64,
    num_letters: u64,
    depth_left: usize,
    rf: usize,
    rg: usize,
    stem_rev: &mut Vec<u64>,
    best: &mut Option<((usize, Vec<u64>, usize), LassoTrace)>,
) {
    for letter in 0..num_letters {
        let col = compiled.prepend_column(letter, succ_col);
        stem_rev.push(letter);
        if (col >> rf & 1) != (col >> rg & 1) {
            let stem: Vec<u64> = stem_rev.iter().rev().copied().collect();
            consider_witness(compiled, loop_word, &stem, col, rf, rg, best);
        }
        if depth_left > 1 {
            extend_stems(
                compiled,
                loop_word,
                col,
                num_letters,
                depth_left - 1,
                rf,
                rg,
                stem_rev,
                best,
            );
        }
        stem_rev.pop();
    }
}

fn consider_witness(
    compiled: &CompiledFormula,
    loop_word: &[u64],
    stem: &[u64],
    _col: u64,
    _rf: usize,
    _rg: usize,
    best: &mut Option<((usize, Vec<u64>, usize), LassoTrace)>,
) {
    let total = stem.len() + loop_word.len();
    let mut word: Vec<u64> = stem.to_vec();
    word.extend_from_slice(loop_word);
    let key = (total, word, loop_word.len());
    if best.as_ref().is_none_or(|(k, _)| key < *k) {
        let to_val = |letter: u64| -> Valuation {
            compiled
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), letter >> i & 1 == 1))
                .collect()
        };
        let trace = LassoTrace::new(
            stem.iter().copied().map(to_val).collect(),
            loop_word.iter().copied().map(to_val).collect(),
        );
        *best = Some((key, trace));
    }
}

// ---------------------------------------------------------------------------
// Problems and decomposition
// ---------------------------------------------------------------------------

/// The prefix replicated into every decomposed subproblem: the initial
/// condition, the preset conjunct, and (for strict semantics) the
/// weak-until safety conjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemPrefix {
    pub initially: LtlFormula,
    pub preset: LtlFormula,
    pub strict: Option<LtlFormula>,
}

impl ProblemPrefix {
    pub fn trivial() -> Self {
        ProblemPrefix {
            initially: LtlFormula::True,
            preset: LtlFormula::True,
            strict: None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.initially == LtlFormula::True
            && self.preset == LtlFormula::True
            && self.strict.is_none()
    }

    /// Wrap a subproblem body in the prefix; neutral elements are folded so
    /// a trivial prefix is the identity.
    pub fn fold(&self, body: LtlFormula) -> LtlFormula {
        let mut inner = body;
        if let Some(s) = &self.strict {
            inner = LtlFormula::and_fold(s.clone(), inner);
        }
        inner = LtlFormula::and_fold(self.preset.clone(), inner);
        LtlFormula::implies_fold(self.initially.clone(), inner)
    }
}

/// A ground synthesis problem: the monolithic formula plus its
/// assumption/guarantee bundles for decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtlProblem {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub phi: LtlFormula,
    pub assumptions: Vec<LtlFormula>,
    pub guarantees: Vec<LtlFormula>,
    pub prefix: ProblemPrefix,
}

impl LtlProblem {
    /// All atoms, inputs first, in declaration order.
    pub fn atom_order(&self) -> Vec<String> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .cloned()
            .collect()
    }
}

/// Subproblems for a claimed solution: one per guarantee, each of the shape
/// `prefix-fold(a_1 & ... & a_n -> g_j)`. An empty guarantee list yields the
/// single vacuous formula `prefix-fold(true)`.
pub fn decompose_realizable(p: &LtlProblem) -> Vec<LtlFormula> {
    let ant = LtlFormula::conjoin(&p.assumptions);
    if p.guarantees.is_empty() {
        return vec![p.prefix.fold(LtlFormula::True)];
    }
    p.guarantees
        .iter()
        .map(|g| p.prefix.fold(LtlFormula::implies(ant.clone(), g.clone())))
        .collect()
}

/// Subproblems for a claimed environment strategy: one per assumption, each
/// `!(prefix-fold(a_i -> g_1 & ... & g_m))`. An empty assumption list yields
/// the single formula `!(prefix-fold(true -> /\\g))`.
pub fn decompose_unrealizable(p: &LtlProblem) -> Vec<LtlFormula> {
    let cons = LtlFormula::conjoin(&p.guarantees);
    if p.assumptions.is_empty() {
        return vec![LtlFormula::not(
            p.prefix
                .fold(LtlFormula::implies(LtlFormula::True, cons)),
        )];
    }
    p.assumptions
        .iter()
        .map(|a| {
            LtlFormula::not(
                p.prefix
                    .fold(LtlFormula::implies(a.clone(), cons.clone())),
            )
        })
        .collect()
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, Dialect::TlsfExpr))
    }
}

/// Format a trace for human-readable diagnostics: one line per atom in the
/// given order, stem columns then loop columns.
pub fn format_trace_table(t: &LassoTrace, atom_order: &[String]) -> String {
    let mut out = String::new();
    let total = t.len();
    let width = atom_order.iter().map(|a| a.len()).max().unwrap_or(4).max(4);
    out.push_str(&format!("{:>width$} |", "step", width = width));
    for p in 0..total {
        out.push_str(&format!(" {p:>2}"));
    }
    out.push('\n');
    for a in atom_order {
        out.push_str(&format!("{a:>width$} |", width = width));
        for p in 0..total {
            let v = t.at(p).get(a).copied().unwrap_or(false);
            out.push_str(&format!(" {:>2}", if v { 1 } else { 0 }));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:>width$} |", "loop", width = width));
    for p in 0..total {
        out.push_str(if p >= t.stem.len() { "  ^" } else { "   " });
    }
    out.push('\n');
    out
}
