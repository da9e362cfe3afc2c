//! ASCII AIGER circuits: parsing, step simulation, and a small-scale
//! explicit-state falsifier used as the built-in verification oracle.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ltl::{eval_lasso, CompiledFormula, LassoTrace, LtlFormula, Valuation};

/// An and-inverter graph in the ASCII (`aag`) AIGER encoding, restricted to
/// the inputs/latches/outputs/and-gates subset: no bad, constraint, justice,
/// or fairness lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AigerCircuit {
    pub max_var: u32,
    /// Input literals in declaration order (always even).
    pub inputs: Vec<u32>,
    pub latches: Vec<Latch>,
    /// Output literals; may be constants or negated.
    pub outputs: Vec<u32>,
    /// And-gates in file order; evaluation uses a topological order.
    pub gates: Vec<AndGate>,
    pub input_names: Vec<String>,
    pub latch_names: Vec<Option<String>>,
    pub output_names: Vec<String>,
    /// Gate indices in a dependency-respecting evaluation order.
    eval_order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latch {
    /// Current-state literal (even).
    pub current: u32,
    /// Next-state literal, sampled at the end of each step.
    pub next: u32,
    /// Reset value; latches without an explicit reset start at 0.
    pub reset: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AndGate {
    pub lhs: u32,
    pub rhs0: u32,
    pub rhs1: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AigerError {
    /// Malformed or inconsistent header/body, including the binary `aig`
    /// format, which this parser deliberately rejects.
    HeaderMismatch(String),
    /// A variable-defining position (input, latch state, gate output) held
    /// an odd or constant literal.
    OddVariableLiteral(u32),
    /// A referenced literal has no defining input, latch, or gate — also
    /// raised for combinational cycles, where a gate's operand is never
    /// available.
    DanglingLiteral(u32),
}

impl fmt::Display for AigerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AigerError::HeaderMismatch(msg) => write!(f, "header mismatch: {msg}"),
            AigerError::OddVariableLiteral(l) => {
                write!(f, "literal {l} cannot define a variable")
            }
            AigerError::DanglingLiteral(l) => write!(f, "literal {l} is never defined"),
        }
    }
}

pub fn parse_aiger(text: &str) -> Result<AigerCircuit, AigerError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AigerError::HeaderMismatch("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() == Some(&"aig") {
        return Err(AigerError::HeaderMismatch(
            "binary AIGER (aig) is not supported; provide the ASCII aag format".into(),
        ));
    }
    if fields.len() != 6 || fields[0] != "aag" {
        return Err(AigerError::HeaderMismatch(format!(
            "expected `aag M I L O A`, found `{header}`"
        )));
    }
    let nums: Vec<u32> = fields[1..]
        .iter()
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| AigerError::HeaderMismatch(format!("bad header count `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    let (max_var, ni, nl, no, na) = (nums[0], nums[1], nums[2], nums[3], nums[4]);

    let mut body = |what: &str| {
        lines
            .next()
            .ok_or_else(|| AigerError::HeaderMismatch(format!("missing {what} line")))
    };
    let parse_lits = |line: &str, n: usize, what: &str| -> Result<Vec<u32>, AigerError> {
        let lits: Vec<u32> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| AigerError::HeaderMismatch(format!("bad literal `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        if lits.len() != n {
            return Err(AigerError::HeaderMismatch(format!(
                "{what} line `{line}` should hold {n} literals"
            )));
        }
        Ok(lits)
    };

    let mut inputs = Vec::with_capacity(ni as usize);
    for _ in 0..ni {
        inputs.push(parse_lits(body("input")?, 1, "input")?[0]);
    }
    let mut latches = Vec::with_capacity(nl as usize);
    for _ in 0..nl {
        let line = body("latch")?;
        let lits: Vec<u32> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| AigerError::HeaderMismatch(format!("bad literal `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        let (current, next, reset) = match lits.as_slice() {
            [c, n] => (*c, *n, false),
            [c, n, r] if *r == 0 || *r == 1 => (*c, *n, *r == 1),
            _ => {
                return Err(AigerError::HeaderMismatch(format!(
                    "latch line `{line}` should be `current next [reset]`"
                )))
            }
        };
        latches.push(Latch { current, next, reset });
    }
    let mut outputs = Vec::with_capacity(no as usize);
    for _ in 0..no {
        outputs.push(parse_lits(body("output")?, 1, "output")?[0]);
    }
    let mut gates = Vec::with_capacity(na as usize);
    for _ in 0..na {
        let lits = parse_lits(body("and-gate")?, 3, "and-gate")?;
        gates.push(AndGate {
            lhs: lits[0],
            rhs0: lits[1],
            rhs1: lits[2],
        });
    }

    // Symbol table, terminated by EOF or a comment section.
    let mut input_names: Vec<String> = (0..ni).map(|k| format!("i{k}")).collect();
    let mut latch_names: Vec<Option<String>> = vec![None; nl as usize];
    let mut output_names: Vec<String> = (0..no).map(|k| format!("o{k}")).collect();
    for line in lines {
        if line == "c" {
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (tag, rest) = line
            .split_once(' ')
            .ok_or_else(|| AigerError::HeaderMismatch(format!("bad symbol line `{line}`")))?;
        let parse_pos = |s: &str, n: u32| -> Result<usize, AigerError> {
            let k: u32 = s
                .parse()
                .map_err(|_| AigerError::HeaderMismatch(format!("bad symbol line `{line}`")))?;
            if k >= n {
                return Err(AigerError::HeaderMismatch(format!(
                    "symbol position {k} out of range"
                )));
            }
            Ok(k as usize)
        };
        match tag.split_at(1) {
            ("i", pos) => input_names[parse_pos(pos, ni)?] = rest.to_string(),
            ("l", pos) => latch_names[parse_pos(pos, nl)?] = Some(rest.to_string()),
            ("o", pos) => output_names[parse_pos(pos, no)?] = rest.to_string(),
            _ => {
                return Err(AigerError::HeaderMismatch(format!(
                    "bad symbol line `{line}`"
                )))
            }
        }
    }

    // Variable definitions: even, non-constant, unique, within max_var.
    let mut defined = BTreeSet::new();
    for &lit in inputs
        .iter()
        .chain(latches.iter().map(|l| &l.current))
        .chain(gates.iter().map(|g| &g.lhs))
    {
        if lit < 2 || lit % 2 != 0 {
            return Err(AigerError::OddVariableLiteral(lit));
        }
        if lit / 2 > max_var {
            return Err(AigerError::HeaderMismatch(format!(
                "literal {lit} exceeds declared maximum variable {max_var}"
            )));
        }
        if !defined.insert(lit) {
            return Err(AigerError::HeaderMismatch(format!(
                "variable literal {lit} defined twice"
            )));
        }
    }
    for &lit in outputs
        .iter()
        .chain(latches.iter().map(|l| &l.next))
        .chain(gates.iter().flat_map(|g| [&g.rhs0, &g.rhs1]))
    {
        if lit >= 2 && !defined.contains(&(lit & !1)) {
            return Err(AigerError::DanglingLiteral(lit));
        }
    }

    let eval_order = topo_order(&gates, &inputs, &latches)?;

    Ok(AigerCircuit {
        max_var,
        inputs,
        latches,
        outputs,
        gates,
        input_names,
        latch_names,
        output_names,
        eval_order,
    })
}

/// Order gate indices so every operand is an input, latch, or
/// earlier-evaluated gate. Cycles surface as a dangling operand.
fn topo_order(
    gates: &[AndGate],
    inputs: &[u32],
    latches: &[Latch],
) -> Result<Vec<usize>, AigerError> {
    let mut ready: BTreeSet<u32> = inputs.iter().map(|l| l / 2).collect();
    ready.extend(latches.iter().map(|l| l.current / 2));

    let mut order = Vec::with_capacity(gates.len());
    let mut placed = vec![false; gates.len()];
    // Kahn-style repeated sweep; quadratic worst case is fine at this scale.
    loop {
        let mut progressed = false;
        for (k, g) in gates.iter().enumerate() {
            if placed[k] {
                continue;
            }
            let avail = |lit: u32| lit < 2 || ready.contains(&(lit / 2));
            if avail(g.rhs0) && avail(g.rhs1) {
                placed[k] = true;
                ready.insert(g.lhs / 2);
                order.push(k);
                progressed = true;
            }
        }
        if order.len() == gates.len() {
            return Ok(order);
        }
        if !progressed {
            let stuck = gates
                .iter()
                .enumerate()
                .find(|(k, _)| !placed[*k])
                .map(|(_, g)| g)
                .unwrap();
            let lit = if stuck.rhs0 >= 2 && !ready.contains(&(stuck.rhs0 / 2)) {
                stuck.rhs0
            } else {
                stuck.rhs1
            };
            return Err(AigerError::DanglingLiteral(lit));
        }
    }
}

impl AigerCircuit {
    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    fn initial_state(&self) -> Vec<bool> {
        self.latches.iter().map(|l| l.reset).collect()
    }

    /// Advance one step from `state` with the given input bits (declaration
    /// order). Returns the output bits and the successor state.
    fn step(&self, state: &[bool], input_bits: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let mut vals = vec![false; self.max_var as usize + 1];
        for (lit, bit) in self.inputs.iter().zip(input_bits) {
            vals[(lit / 2) as usize] = *bit;
        }
        for (latch, bit) in self.latches.iter().zip(state) {
            vals[(latch.current / 2) as usize] = *bit;
        }
        let lit_val = |vals: &[bool], lit: u32| -> bool {
            if lit < 2 {
                lit == 1
            } else {
                vals[(lit / 2) as usize] ^ (lit % 2 == 1)
            }
        };
        for &k in &self.eval_order {
            let g = &self.gates[k];
            let v = lit_val(&vals, g.rhs0) && lit_val(&vals, g.rhs1);
            vals[(g.lhs / 2) as usize] = v;
        }
        let outputs = self.outputs.iter().map(|&l| lit_val(&vals, l)).collect();
        let next = self.latches.iter().map(|l| lit_val(&vals, l.next)).collect();
        (outputs, next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulateError {
    MissingInput(String),
}

impl fmt::Display for SimulateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulateError::MissingInput(name) => {
                write!(f, "valuation is missing circuit input `{name}`")
            }
        }
    }
}

/// Run the circuit from reset over the given input valuations, returning one
/// full valuation (inputs and outputs by symbol name) per step.
pub fn simulate(
    c: &AigerCircuit,
    inputs: &[Valuation],
) -> Result<Vec<Valuation>, SimulateError> {
    let mut state = c.initial_state();
    let mut out = Vec::with_capacity(inputs.len());
    for step_inputs in inputs {
        let mut bits = Vec::with_capacity(c.inputs.len());
        for name in &c.input_names {
            bits.push(
                *step_inputs
                    .get(name)
                    .ok_or_else(|| SimulateError::MissingInput(name.clone()))?,
            );
        }
        let (outputs, next) = c.step(&state, &bits);
        let mut valuation = Valuation::new();
        for (name, bit) in c.input_names.iter().zip(&bits) {
            valuation.insert(name.clone(), *bit);
        }
        for (name, bit) in c.output_names.iter().zip(&outputs) {
            valuation.insert(name.clone(), *bit);
        }
        out.push(valuation);
        state = next;
    }
    Ok(out)
}

/// Search limits for [`falsify_small`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FalsifyLimits {
    /// Bound on 2^latches · 2^inputs; searches beyond it are refused.
    pub state_input_budget: u64,
    /// Longest stem-plus-loop length explored.
    pub max_total_len: usize,
    /// Cap on enumerated input words, guarding against exponential blowup
    /// when many inputs are within budget.
    pub word_cap: u64,
}

impl Default for FalsifyLimits {
    fn default() -> Self {
        FalsifyLimits {
            state_input_budget: 1 << 12,
            max_total_len: 6,
            word_cap: 1 << 22,
        }
    }
}

/// How much of the lasso space a `NoneFound` verdict covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Every simple lasso — a stem of distinct latch states closed by one
    /// repeated state — fits within the explored length, so the reachable
    /// lasso space was covered in full.
    Complete,
    /// Only lassos up to the recorded total length were explored.
    Bounded { max_total_len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FalsifyResult {
    Fail(LassoTrace),
    NoneFound(Coverage),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FalsifyError {
    /// 2^latches · 2^inputs exceeds the configured budget.
    BudgetExceeded { latches: usize, inputs: usize, budget: u64 },
    /// The property mentions an atom that is not a circuit input or output.
    UnknownAtom(String),
}

impl fmt::Display for FalsifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FalsifyError::BudgetExceeded { latches, inputs, budget } => write!(
                f,
                "2^{latches} states x 2^{inputs} inputs exceeds the search budget {budget}"
            ),
            FalsifyError::UnknownAtom(a) => {
                write!(f, "property atom `{a}` is not a circuit input or output")
            }
        }
    }
}

/// Explicit-state falsification: enumerate reachable lassos in order of
/// total length (iterative deepening), input choices in lexicographic order
/// within a length, and return the first lasso whose induced input/output
/// trace violates `f`. A lasso closes when the latch state reached after a
/// step repeats the state reached after some earlier step; the earlier steps
/// form the stem and the remainder the loop. Every returned trace is
/// re-validated through [`simulate`] and [`eval_lasso`] before it escapes.
pub fn falsify_small(
    c: &AigerCircuit,
    f: &LtlFormula,
    limits: FalsifyLimits,
) -> Result<FalsifyResult, FalsifyError> {
    let nl = c.num_latches();
    let ni = c.num_inputs();
    let over = |bits: usize| bits >= 64 || (1u64 << bits) > limits.state_input_budget;
    if over(nl) || over(ni) || (1u64 << nl).saturating_mul(1 << ni) > limits.state_input_budget {
        return Err(FalsifyError::BudgetExceeded {
            latches: nl,
            inputs: ni,
            budget: limits.state_input_budget,
        });
    }

    let compiled = CompiledFormula::compile(f);
    // Map each formula atom to its bit in the per-step signal word.
    let mut atom_signal = Vec::with_capacity(compiled.atoms.len());
    for atom in &compiled.atoms {
        let idx = c
            .input_names
            .iter()
            .chain(c.output_names.iter())
            .position(|n| n == atom)
            .ok_or_else(|| FalsifyError::UnknownAtom(atom.clone()))?;
        atom_signal.push(idx);
    }

    let mut search = Search {
        circuit: c,
        compiled: &compiled,
        atom_signal: &atom_signal,
        words_left: limits.word_cap,
        truncated: false,
        path: Vec::new(),
    };
    for total_len in 1..=limits.max_total_len {
        if let Some(trace) = search.dfs(total_len, c.initial_state(), 0) {
            validate(c, f, &trace);
            return Ok(FalsifyResult::Fail(trace));
        }
    }

    // All simple lassos have total length ≤ #reachable-states + 1, so a
    // deep-enough bound covers the space in full.
    let simple_bound = if nl >= 16 {
        usize::MAX
    } else {
        (1usize << nl) + 1
    };
    let coverage = if !search.truncated && limits.max_total_len >= simple_bound {
        Coverage::Complete
    } else {
        Coverage::Bounded {
            max_total_len: limits.max_total_len,
        }
    };
    Ok(FalsifyResult::NoneFound(coverage))
}

struct PathStep {
    input_bits: u64,
    /// Combined input/output signal word for this position.
    signals: u64,
    /// Latch state reached after the step, packed into bits.
    post_state: u64,
}

struct Search<'a> {
    circuit: &'a AigerCircuit,
    compiled: &'a CompiledFormula,
    atom_signal: &'a [usize],
    words_left: u64,
    truncated: bool,
    path: Vec<PathStep>,
}

impl Search<'_> {
    /// Extend the current path to exactly `total_len` steps, checking every
    /// closure at the final position.
    fn dfs(&mut self, total_len: usize, state: Vec<bool>, depth: usize) -> Option<LassoTrace> {
        if depth == total_len {
            return self.close();
        }
        let ni = self.circuit.num_inputs();
        for choice in 0u64..(1 << ni) {
            if self.words_left == 0 {
                self.truncated = true;
                return None;
            }
            self.words_left -= 1;
            let bits: Vec<bool> = (0..ni).map(|k| choice >> k & 1 == 1).collect();
            let (outputs, next) = self.circuit.step(&state, &bits);
            let mut signals = choice;
            for (k, bit) in outputs.iter().enumerate() {
                if *bit {
                    signals |= 1 << (ni + k);
                }
            }
            let post_state = next
                .iter()
                .enumerate()
                .fold(0u64, |acc, (k, b)| acc | (u64::from(*b) << k));
            self.path.push(PathStep {
                input_bits: choice,
                signals,
                post_state,
            });
            let found = self.dfs(total_len, next, depth + 1);
            if found.is_some() {
                return found;
            }
            self.path.pop();
        }
        None
    }

    /// The path has reached the target length; try every split where the
    /// final post-state repeats an earlier one.
    fn close(&mut self) -> Option<LassoTrace> {
        let last = self.path.last()?.post_state;
        let letters: Vec<u64> = self
            .path
            .iter()
            .map(|s| {
                self.atom_signal
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (bit, sig)| acc | (s.signals >> sig & 1) << bit)
            })
            .collect();
        for j in 0..self.path.len() - 1 {
            if self.path[j].post_state != last {
                continue;
            }
            let values = self.compiled.eval(&letters, j + 1);
            if !values[self.compiled.roots[0]][0] {
                return Some(self.trace(j + 1));
            }
        }
        None
    }

    fn trace(&self, stem_len: usize) -> LassoTrace {
        let c = self.circuit;
        let valuation = |s: &PathStep| {
            let mut v = Valuation::new();
            let ni = c.num_inputs();
            for (k, name) in c.input_names.iter().enumerate() {
                v.insert(name.clone(), s.input_bits >> k & 1 == 1);
            }
            for (k, name) in c.output_names.iter().enumerate() {
                v.insert(name.clone(), s.signals >> (ni + k) & 1 == 1);
            }
            v
        };
        LassoTrace::new(
            self.path[..stem_len].iter().map(valuation).collect(),
            self.path[stem_len..].iter().map(valuation).collect(),
        )
    }
}

/// Soundness gate on every returned counterexample: the trace must replay
/// under [`simulate`] to the same valuations and falsify the property.
fn validate(c: &AigerCircuit, f: &LtlFormula, trace: &LassoTrace) {
    let steps: Vec<Valuation> = trace.stem.iter().chain(trace.looped.iter()).cloned().collect();
    let replay = simulate(c, &steps).expect("counterexample inputs cover the circuit");
    for (expected, got) in steps.iter().zip(&replay) {
        assert_eq!(expected, got, "counterexample does not replay on the circuit");
    }
    assert_eq!(
        eval_lasso(f, trace),
        Ok(false),
        "counterexample does not falsify the property"
    );
}

/// Render a circuit back to ASCII AIGER text; primarily a test utility and
/// fixture generator.
pub fn render_aiger(c: &AigerCircuit) -> String {
    let mut out = format!(
        "aag {} {} {} {} {}\n",
        c.max_var,
        c.inputs.len(),
        c.latches.len(),
        c.outputs.len(),
        c.gates.len()
    );
    for lit in &c.inputs {
        out.push_str(&format!("{lit}\n"));
    }
    for latch in &c.latches {
        if latch.reset {
            out.push_str(&format!("{} {} 1\n", latch.current, latch.next));
        } else {
            out.push_str(&format!("{} {}\n", latch.current, latch.next));
        }
    }
    for lit in &c.outputs {
        out.push_str(&format!("{lit}\n"));
    }
    for g in &c.gates {
        out.push_str(&format!("{} {} {}\n", g.lhs, g.rhs0, g.rhs1));
    }
    for (k, name) in c.input_names.iter().enumerate() {
        out.push_str(&format!("i{k} {name}\n"));
    }
    for (k, name) in c.latch_names.iter().enumerate() {
        if let Some(name) = name {
            out.push_str(&format!("l{k} {name}\n"));
        }
    }
    for (k, name) in c.output_names.iter().enumerate() {
        out.push_str(&format!("o{k} {name}\n"));
    }
    out
}
