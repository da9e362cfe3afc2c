//! The synthesis workflows: counterexample-guided synthesis, parameterized
//! synthesis over a value ladder, and natural-language synthesis via
//! autoformalization or direct generation.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cegsyn_core::aiger::{falsify_small, AigerCircuit, Coverage, FalsifyLimits, FalsifyResult};
use cegsyn_core::ltl::{
    decompose_realizable, decompose_unrealizable, eval_lasso_positions, format_trace_table,
    render, Dialect, LtlFormula, LtlProblem,
};
use cegsyn_core::tlsf::{expand_semantics, instantiate, parse_tlsf, strip_metadata, TlsfSpec};
use cegsyn_core::verilog::{extract_verilog, lint_ports_bound, parse_module, Role, VerilogModule};

use crate::backend::{
    build_autoformalization_prompt, build_autoformalize_repair_prompt, build_directnl_prompt,
    build_param_prompt, build_repair_prompt, build_synthesis_prompt, spec_hash, Backend,
    ReasoningLevel,
};
use crate::toolchain::{
    check_properties, equivalence_check, translate_to_aiger, CheckVerdict, EquivVerdict,
    ToolLimits, ToolPaths,
};

// ---------------------------------------------------------------------------
// Pipeline plumbing: translators and checkers
// ---------------------------------------------------------------------------

/// Turns a Verilog module into an AIGER circuit.
pub trait Translator: Send + Sync {
    fn translate(&self, m: &VerilogModule) -> Result<AigerCircuit, String>;
}

/// External-tool translator.
pub struct ToolchainTranslator {
    pub paths: ToolPaths,
    pub limits: ToolLimits,
    pub workdir: PathBuf,
}

impl Translator for ToolchainTranslator {
    fn translate(&self, m: &VerilogModule) -> Result<AigerCircuit, String> {
        translate_to_aiger(m, &self.paths, self.limits, &self.workdir)
            .map(|(c, _)| c)
            .map_err(|e| e.to_string())
    }
}

/// Offline translator replaying pre-translated circuits from a directory of
/// `<key>.aag` files, keyed by a hash of the module source.
pub struct FixtureTranslator {
    pub dir: PathBuf,
}

impl FixtureTranslator {
    /// Fixture file stem for a module source.
    pub fn key(source: &str) -> String {
        spec_hash(source)
    }
}

impl Translator for FixtureTranslator {
    fn translate(&self, m: &VerilogModule) -> Result<AigerCircuit, String> {
        let path = self.dir.join(format!("{}.aag", Self::key(&m.source)));
        let text = std::fs::read_to_string(&path)
            .map_err(|_| format!("no translated circuit fixture at {}", path.display()))?;
        cegsyn_core::aiger::parse_aiger(&text).map_err(|e| e.to_string())
    }
}

/// How decomposed subproperties are verified.
pub enum Checker {
    /// External model checker.
    External {
        paths: ToolPaths,
        limits: ToolLimits,
        workdir: PathBuf,
    },
    /// Built-in explicit-state falsifier. A `Pass` from a bounded (not
    /// exhaustive) search is recorded with a coverage note in the outcome.
    BuiltIn { limits: FalsifyLimits },
}

impl Checker {
    fn check(
        &self,
        c: &AigerCircuit,
        props: &[LtlFormula],
    ) -> Result<(Vec<CheckVerdict>, Vec<String>), String> {
        match self {
            Checker::External {
                paths,
                limits,
                workdir,
            } => check_properties(c, props, paths, *limits, workdir)
                .map(|v| (v, Vec::new()))
                .map_err(|e| e.to_string()),
            Checker::BuiltIn { limits } => {
                let mut verdicts = Vec::with_capacity(props.len());
                let mut notes = Vec::new();
                for (k, prop) in props.iter().enumerate() {
                    match falsify_small(c, prop, *limits) {
                        Ok(FalsifyResult::Fail(trace)) => verdicts.push(CheckVerdict::Fail(trace)),
                        Ok(FalsifyResult::NoneFound(Coverage::Complete)) => {
                            verdicts.push(CheckVerdict::Pass)
                        }
                        Ok(FalsifyResult::NoneFound(Coverage::Bounded { max_total_len })) => {
                            notes.push(format!(
                                "subproperty {}: no counterexample among lassos of total \
                                 length <= {max_total_len} (bounded, not a proof)",
                                k + 1
                            ));
                            verdicts.push(CheckVerdict::Pass);
                        }
                        Err(e) => verdicts.push(CheckVerdict::ToolError(e.to_string())),
                    }
                }
                Ok((verdicts, notes))
            }
        }
    }
}

/// Everything a workflow needs besides its inputs.
pub struct Pipeline<'a> {
    pub backend: &'a dyn Backend,
    pub translator: &'a dyn Translator,
    pub checker: Checker,
    pub level: ReasoningLevel,
    /// Tool locations for equivalence checks; the bounded fallback applies
    /// when the filter tool is missing.
    pub tools: ToolPaths,
    /// Per-instance wall-clock ceiling; the loop aborts cleanly with
    /// `Unsolved` when it is exceeded.
    pub instance_ceiling: Duration,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        backend: &'a dyn Backend,
        translator: &'a dyn Translator,
        checker: Checker,
        level: ReasoningLevel,
    ) -> Self {
        Pipeline {
            backend,
            translator,
            checker,
            level,
            tools: ToolPaths::default(),
            instance_ceiling: Duration::from_secs(3600),
        }
    }
}

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Status {
    Solved,
    Unsolved,
    Error,
}

/// Result of one counterexample-guided synthesis run.
#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    /// The role the backend's module claimed, when one was extracted.
    pub role: Option<Role>,
    pub iterations_used: u32,
    /// One verdict vector per checked module; length is `iterations_used + 1`
    /// whenever checking was reached.
    pub verdict_history: Vec<Vec<CheckVerdict>>,
    pub final_module: Option<String>,
    pub reasoning_tokens: u64,
    pub output_tokens: u64,
    /// For `Error`, names the failing stage.
    pub error: Option<String>,
    /// Coverage caveats and other audit notes.
    pub notes: Vec<String>,
}

impl Outcome {
    fn error(stage: &str, message: impl std::fmt::Display) -> Outcome {
        Outcome {
            status: Status::Error,
            role: None,
            iterations_used: 0,
            verdict_history: Vec::new(),
            final_module: None,
            reasoning_tokens: 0,
            output_tokens: 0,
            error: Some(format!("{stage}: {message}")),
            notes: Vec::new(),
        }
    }
}

/// Flag carried on every parameterized outcome: per-value verification is
/// not a universal correctness proof.
pub const PARAM_SOUNDNESS: &str = "verified-per-instance, not universally";

#[derive(Debug)]
pub struct ParamOutcome {
    pub outcome: Outcome,
    /// Values tested, ascending.
    pub values: Vec<i64>,
    pub first_failing_value: Option<i64>,
    pub soundness: &'static str,
}

#[derive(Debug)]
pub struct AutoformalizeAttempt {
    pub raw: String,
    /// Parser diagnostic when the attempt was rejected.
    pub syntax_error: Option<String>,
}

#[derive(Debug)]
pub struct AutoformalizeResult {
    /// Raw text of the very first attempt; downstream synthesis uses this
    /// even when later attempts fixed the syntax.
    pub first_attempt: String,
    /// First syntactically valid attempt, kept as a verification target.
    pub repaired: Option<String>,
    pub attempts: Vec<AutoformalizeAttempt>,
    pub reasoning_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TargetVerdict {
    Solved,
    Unsolved,
    /// No parseable autoformalized specification to verify against.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NaturalRoute {
    ViaAutoformalization,
    Direct,
}

#[derive(Debug)]
pub struct NaturalOutcome {
    pub route: NaturalRoute,
    pub autoformalization: AutoformalizeResult,
    /// Equivalence of ground truth vs the repaired autoformalization, when
    /// the latter parses.
    pub equivalence: Option<EquivVerdict>,
    /// The synthesis outcome, verified against the ground-truth expansion.
    pub outcome: Outcome,
    /// Independent verdict of the final module against the syntax-repaired
    /// autoformalized specification.
    pub autoformalized_verdict: TargetVerdict,
}

// ---------------------------------------------------------------------------
// Core loop
// ---------------------------------------------------------------------------

fn expand_with(spec: &TlsfSpec, bindings: &BTreeMap<String, i64>) -> Result<LtlProblem, String> {
    let ground = instantiate(spec, bindings).map_err(|e| e.to_string())?;
    Ok(expand_semantics(&ground))
}

fn decompose_for(role: Role, problem: &LtlProblem) -> Vec<LtlFormula> {
    match role {
        Role::Solution => decompose_realizable(problem),
        Role::Environment => decompose_unrealizable(problem),
    }
}

impl Pipeline<'_> {
    /// Run the counterexample-guided loop on one specification.
    pub fn run_instance(&self, spec_text: &str, cex_budget: u32) -> Outcome {
        let stripped = strip_metadata(spec_text);
        let spec = match parse_tlsf(&stripped) {
            Ok(spec) => spec,
            Err(e) => return Outcome::error("parse", e),
        };
        let problem = match expand_with(&spec, &BTreeMap::new()) {
            Ok(p) => p,
            Err(e) => return Outcome::error("instantiate", e),
        };
        let first = match build_synthesis_prompt(&stripped) {
            Ok(p) => p,
            Err(e) => return Outcome::error("prompt", e),
        };
        self.cex_loop(&stripped, first, cex_budget, |m| {
            let problem = problem.clone();
            Ok(vec![CheckTarget {
                problem: problem.clone(),
                props: decompose_for(m.role, &problem),
                module: m.clone(),
                label: None,
            }])
        })
    }

    /// Run the parameterized workflow: one parameterized module is requested
    /// and its instantiations are verified for every value in the ladder.
    pub fn run_parameterized(
        &self,
        spec_text: &str,
        values: &[i64],
        cex_budget: u32,
    ) -> ParamOutcome {
        let wrap_err = |outcome: Outcome| ParamOutcome {
            outcome,
            values: values.to_vec(),
            first_failing_value: None,
            soundness: PARAM_SOUNDNESS,
        };
        if values.is_empty() {
            return wrap_err(Outcome::error("config", "empty parameter value list"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return wrap_err(Outcome::error(
                "config",
                "parameter values must be strictly ascending",
            ));
        }
        let stripped = strip_metadata(spec_text);
        let spec = match parse_tlsf(&stripped) {
            Ok(spec) => spec,
            Err(e) => return wrap_err(Outcome::error("parse", e)),
        };
        let Some((param, _)) = spec.parameters.first().cloned() else {
            return wrap_err(Outcome::error("config", "specification has no parameters"));
        };
        let first = match build_param_prompt(&stripped) {
            Ok(p) => p,
            Err(e) => return wrap_err(Outcome::error("prompt", e)),
        };

        let values_owned = values.to_vec();
        let outcome = self.cex_loop(&stripped, first, cex_budget, |m| {
            let mut targets = Vec::with_capacity(values_owned.len());
            for &v in &values_owned {
                let bindings: BTreeMap<String, i64> = [(param.clone(), v)].into_iter().collect();
                let problem = expand_with(&spec, &bindings)?;
                let wrapped = wrap_parameterized(m, &param, v)?;
                targets.push(CheckTarget {
                    props: decompose_for(wrapped.role, &problem),
                    problem,
                    module: wrapped,
                    label: Some(format!("{param} = {v}")),
                });
            }
            Ok(targets)
        });

        let first_failing_value = outcome
            .verdict_history
            .last()
            .and_then(|verdicts| first_fail_index(verdicts))
            .and_then(|_| {
                // The loop stops targets at the first failing value; recover
                // it from the recorded notes.
                outcome
                    .notes
                    .iter()
                    .rev()
                    .find_map(|n| n.strip_prefix("first failing value: "))
                    .and_then(|s| s.parse().ok())
            });
        ParamOutcome {
            outcome,
            values: values.to_vec(),
            first_failing_value,
            soundness: PARAM_SOUNDNESS,
        }
    }

    /// Autoformalize a natural-language description, repairing syntax with
    /// the parser diagnostic for up to `max_attempts` completions.
    pub fn autoformalize(&self, nl_text: &str, max_attempts: u32) -> AutoformalizeResult {
        let mut result = AutoformalizeResult {
            first_attempt: String::new(),
            repaired: None,
            attempts: Vec::new(),
            reasoning_tokens: 0,
            output_tokens: 0,
        };
        let mut previous: Option<(String, String)> = None; // (raw, diagnostic)
        for _ in 0..max_attempts {
            let prompt = match &previous {
                None => build_autoformalization_prompt(nl_text),
                Some((raw, diag)) => build_autoformalize_repair_prompt(nl_text, raw, diag),
            };
            let Ok(prompt) = prompt else { break };
            let response = match self.backend.complete(&prompt, self.level) {
                Ok(r) => r,
                Err(e) => {
                    result.attempts.push(AutoformalizeAttempt {
                        raw: String::new(),
                        syntax_error: Some(format!("backend: {e}")),
                    });
                    break;
                }
            };
            result.reasoning_tokens += response.reasoning_tokens;
            result.output_tokens += response.output_tokens;
            let raw = extract_fenced(&response.text, "tlsf")
                .unwrap_or_else(|| response.text.clone());
            if result.first_attempt.is_empty() {
                result.first_attempt = raw.clone();
            }
            match parse_tlsf(&strip_metadata(&raw)) {
                Ok(_) => {
                    result.attempts.push(AutoformalizeAttempt {
                        raw: raw.clone(),
                        syntax_error: None,
                    });
                    result.repaired = Some(raw);
                    break;
                }
                Err(e) => {
                    let diag = e.to_string();
                    result.attempts.push(AutoformalizeAttempt {
                        raw: raw.clone(),
                        syntax_error: Some(diag.clone()),
                    });
                    previous = Some((raw, diag));
                }
            }
        }
        result
    }

    /// Run the natural-language workflow on one instance, verifying the
    /// final module against both the ground truth and the autoformalized
    /// specification.
    pub fn run_natural(
        &self,
        nl_text: &str,
        ground_truth_spec: &str,
        route: NaturalRoute,
        cex_budget: u32,
    ) -> NaturalOutcome {
        let autoformalization = self.autoformalize(nl_text, 3);

        let outcome = match route {
            NaturalRoute::ViaAutoformalization => {
                // Synthesis consumes the first-try autoformalization, even
                // when a later attempt fixed its syntax; verification always
                // targets the ground truth here.
                self.run_guided_by(
                    &autoformalization.first_attempt,
                    ground_truth_spec,
                    cex_budget,
                )
            }
            NaturalRoute::Direct => self.run_direct(nl_text, ground_truth_spec, cex_budget),
        };

        let repaired_problem = autoformalization.repaired.as_deref().and_then(|text| {
            let spec = parse_tlsf(&strip_metadata(text)).ok()?;
            expand_with(&spec, &BTreeMap::new()).ok()
        });

        let equivalence = repaired_problem.as_ref().and_then(|auto_problem| {
            let truth = parse_tlsf(&strip_metadata(ground_truth_spec)).ok()?;
            let truth_problem = expand_with(&truth, &BTreeMap::new()).ok()?;
            Some(equivalence_check(
                &truth_problem.phi,
                &auto_problem.phi,
                &self.tools,
                ToolLimits::equivalence(),
            ))
        });

        let autoformalized_verdict = match (&repaired_problem, &outcome.final_module) {
            (Some(problem), Some(source)) => self.verify_against(source, problem),
            _ => TargetVerdict::Unavailable,
        };

        NaturalOutcome {
            route,
            autoformalization,
            equivalence,
            outcome,
            autoformalized_verdict,
        }
    }

    /// Synthesize from `prompt_spec_text` but verify against
    /// `target_spec_text` (the ground truth).
    fn run_guided_by(
        &self,
        prompt_spec_text: &str,
        target_spec_text: &str,
        cex_budget: u32,
    ) -> Outcome {
        let target = match parse_tlsf(&strip_metadata(target_spec_text)) {
            Ok(spec) => spec,
            Err(e) => return Outcome::error("parse ground truth", e),
        };
        let problem = match expand_with(&target, &BTreeMap::new()) {
            Ok(p) => p,
            Err(e) => return Outcome::error("instantiate ground truth", e),
        };
        let first = match build_synthesis_prompt(prompt_spec_text) {
            Ok(p) => p,
            Err(e) => return Outcome::error("prompt", e),
        };
        self.cex_loop(prompt_spec_text, first, cex_budget, |m| {
            let problem = problem.clone();
            Ok(vec![CheckTarget {
                props: decompose_for(m.role, &problem),
                problem,
                module: m.clone(),
                label: None,
            }])
        })
    }

    fn run_direct(&self, nl_text: &str, target_spec_text: &str, cex_budget: u32) -> Outcome {
        let target = match parse_tlsf(&strip_metadata(target_spec_text)) {
            Ok(spec) => spec,
            Err(e) => return Outcome::error("parse ground truth", e),
        };
        let problem = match expand_with(&target, &BTreeMap::new()) {
            Ok(p) => p,
            Err(e) => return Outcome::error("instantiate ground truth", e),
        };
        let first = match build_directnl_prompt(nl_text) {
            Ok(p) => p,
            Err(e) => return Outcome::error("prompt", e),
        };
        self.cex_loop(nl_text, first, cex_budget, |m| {
            let problem = problem.clone();
            Ok(vec![CheckTarget {
                props: decompose_for(m.role, &problem),
                problem,
                module: m.clone(),
                label: None,
            }])
        })
    }

    /// One extra verification of a module source against a problem, used
    /// for the second (autoformalized) target of the natural workflow.
    fn verify_against(&self, module_source: &str, problem: &LtlProblem) -> TargetVerdict {
        let Ok(module) = parse_module(module_source) else {
            return TargetVerdict::Unavailable;
        };
        let Ok(circuit) = self.translator.translate(&module) else {
            return TargetVerdict::Unavailable;
        };
        let props = decompose_for(module.role, problem);
        match self.checker.check(&circuit, &props) {
            Ok((verdicts, _)) if verdicts.iter().all(CheckVerdict::is_pass) => {
                TargetVerdict::Solved
            }
            Ok(_) => TargetVerdict::Unsolved,
            Err(_) => TargetVerdict::Unavailable,
        }
    }

    /// The shared prompt → extract → lint → translate → check → repair loop.
    /// `make_targets` maps an extracted module to the (possibly several)
    /// instantiated verification targets; checking stops at the first target
    /// with a failure so feedback names one parameter value at a time.
    fn cex_loop(
        &self,
        spec_text: &str,
        first_prompt: crate::backend::PromptBundle,
        cex_budget: u32,
        make_targets: impl Fn(&VerilogModule) -> Result<Vec<CheckTarget>, String>,
    ) -> Outcome {
        let started = Instant::now();
        let mut outcome = Outcome {
            status: Status::Unsolved,
            role: None,
            iterations_used: 0,
            verdict_history: Vec::new(),
            final_module: None,
            reasoning_tokens: 0,
            output_tokens: 0,
            error: None,
            notes: Vec::new(),
        };
        let mut prompt = first_prompt;

        for attempt in 0..=cex_budget {
            outcome.iterations_used = attempt;
            if started.elapsed() > self.instance_ceiling {
                outcome.notes.push("instance wall-clock ceiling reached".into());
                return outcome;
            }

            let response = match self.backend.complete(&prompt, self.level) {
                Ok(r) => r,
                Err(e) => return stage_error(outcome, "backend", e),
            };
            outcome.reasoning_tokens += response.reasoning_tokens;
            outcome.output_tokens += response.output_tokens;

            let module = match extract_verilog(&response.text) {
                Ok(m) => m,
                Err(e) => return stage_error(outcome, "extract", e),
            };
            outcome.role = Some(module.role);
            outcome.final_module = Some(module.source.clone());

            let targets = match make_targets(&module) {
                Ok(t) => t,
                Err(e) => return stage_error(outcome, "instantiate", e),
            };

            let mut iteration_verdicts: Vec<CheckVerdict> = Vec::new();
            let mut feedback: Option<String> = None;
            let mut hard_stop = false;
            for target in &targets {
                let issues = lint_ports_bound(
                    &target.module,
                    &target.problem,
                    &target.module.parameters.iter().cloned().collect(),
                );
                if !issues.is_empty() {
                    let listing: Vec<String> =
                        issues.iter().map(|i| i.to_string()).collect();
                    return stage_error(outcome, "lint", listing.join("; "));
                }
                let circuit = match self.translator.translate(&target.module) {
                    Ok(c) => c,
                    Err(e) => return stage_error(outcome, "translate", e),
                };
                let (verdicts, notes) = match self.checker.check(&circuit, &target.props) {
                    Ok(pair) => pair,
                    Err(e) => return stage_error(outcome, "check", e),
                };
                outcome.notes.extend(notes);
                let failed = first_fail_index(&verdicts).is_some();
                let errored = verdicts
                    .iter()
                    .any(|v| matches!(v, CheckVerdict::ToolError(_)));
                let timed_out = verdicts.iter().any(|v| matches!(v, CheckVerdict::Timeout));
                if failed {
                    let mut text = format_feedback(&verdicts, &target.problem);
                    if let Some(label) = &target.label {
                        text = format!("For parameter value {label}:\n\n{text}");
                        if let Some((_, v)) = label.split_once(" = ") {
                            outcome.notes.push(format!("first failing value: {v}"));
                        }
                    }
                    feedback = Some(text);
                }
                iteration_verdicts.extend(verdicts);
                if errored {
                    return stage_error(outcome, "check", "checker reported a tool error");
                }
                if timed_out {
                    hard_stop = true;
                }
                if failed {
                    break; // later targets are re-checked after the repair
                }
            }

            let solved = feedback.is_none()
                && !hard_stop
                && iteration_verdicts.iter().all(CheckVerdict::is_pass);
            outcome.verdict_history.push(iteration_verdicts);
            if solved {
                outcome.status = Status::Solved;
                return outcome;
            }
            let Some(feedback) = feedback else {
                return outcome; // timeouts leave nothing to repair
            };
            if attempt == cex_budget {
                return outcome;
            }
            prompt = match build_repair_prompt(spec_text, &module.source, &feedback) {
                Ok(p) => p,
                Err(e) => return stage_error(outcome, "prompt", e),
            };
        }
        outcome
    }
}

struct CheckTarget {
    problem: LtlProblem,
    props: Vec<LtlFormula>,
    module: VerilogModule,
    label: Option<String>,
}

fn stage_error(mut outcome: Outcome, stage: &str, message: impl std::fmt::Display) -> Outcome {
    outcome.status = Status::Error;
    outcome.error = Some(format!("{stage}: {message}"));
    outcome
}

fn first_fail_index(verdicts: &[CheckVerdict]) -> Option<usize> {
    verdicts
        .iter()
        .position(|v| matches!(v, CheckVerdict::Fail(_)))
}

// ---------------------------------------------------------------------------
// Feedback formatting
// ---------------------------------------------------------------------------

/// Render failed verdicts as repair feedback: the violated subformula, a
/// step table of the counterexample with the loop region marked, and — for
/// invariant-shaped subformulas — the first violating step.
pub fn format_feedback(verdicts: &[CheckVerdict], problem: &LtlProblem) -> String {
    let atom_order = problem.atom_order();
    let mut out = String::new();
    let props = verdicts.len();
    for (j, verdict) in verdicts.iter().enumerate() {
        let CheckVerdict::Fail(trace) = verdict else {
            continue;
        };
        let formula = subproblem_formula(problem, j, props);
        out.push_str(&format!(
            "Violated sub-specification {} of {}:\n\n    {}\n\n",
            j + 1,
            props,
            formula
                .as_ref()
                .map(|f| render(f, Dialect::TlsfExpr))
                .unwrap_or_else(|| "(unavailable)".to_string()),
        ));
        out.push_str("Counterexample execution of your module (the loop section repeats forever):\n\n");
        out.push_str(&format_trace_table(trace, &atom_order));
        if let Some(step) = formula.as_ref().and_then(|f| violation_step(f, trace)) {
            out.push_str(&format!(
                "\nThe invariant inside the G operator is first violated at step {step}.\n"
            ));
        }
        out.push('\n');
    }
    out
}

/// Recover the j-th decomposed formula for feedback rendering. The verdict
/// list length disambiguates which decomposition produced it.
fn subproblem_formula(problem: &LtlProblem, j: usize, props: usize) -> Option<LtlFormula> {
    let realizable = decompose_realizable(problem);
    if realizable.len() == props {
        return realizable.into_iter().nth(j);
    }
    let unrealizable = decompose_unrealizable(problem);
    if unrealizable.len() == props {
        return unrealizable.into_iter().nth(j);
    }
    None
}

/// For a G-rooted safety property (possibly behind implications), the
/// 1-based step at which the invariant body first fails on the trace.
fn violation_step(f: &LtlFormula, trace: &cegsyn_core::ltl::LassoTrace) -> Option<usize> {
    let mut cursor = f;
    while let LtlFormula::Implies(_, rhs) = cursor {
        cursor = rhs;
    }
    let LtlFormula::Globally(body) = cursor else {
        return None;
    };
    let values = eval_lasso_positions(body, trace).ok()?;
    values.iter().position(|holds| !holds).map(|k| k + 1)
}

// ---------------------------------------------------------------------------
// Parameterized instantiation wrapper
// ---------------------------------------------------------------------------

/// Wrap a parameterized module in a generated top-level of the same name
/// that instantiates it with `value` for `param`. The inner module is
/// renamed with an `_inner` suffix; ports are replicated with their widths
/// evaluated under the binding.
pub fn wrap_parameterized(
    m: &VerilogModule,
    param: &str,
    value: i64,
) -> Result<VerilogModule, String> {
    if !m.parameters.iter().any(|(name, _)| name == param) {
        return Err(format!("module declares no parameter `{param}`"));
    }
    let mut bindings: BTreeMap<String, i64> = m.parameters.iter().cloned().collect();
    bindings.insert(param.to_string(), value);

    let inner_name = format!("{}_inner", m.name);
    let marker = format!("module {}", m.name);
    if !m.source.contains(&marker) {
        return Err("cannot locate the module header for renaming".to_string());
    }
    let inner_source = m.source.replacen(&marker, &format!("module {inner_name}"), 1);

    let mut ports = String::new();
    let mut connections = String::new();
    for (k, port) in m.ports.iter().enumerate() {
        let dir = match port.direction {
            cegsyn_core::verilog::Direction::Input => "input",
            cegsyn_core::verilog::Direction::Output => "output",
        };
        let width = port.width(&bindings).map_err(|e| format!("port {}: {e}", port.name))?;
        let range = if port.range.is_some() {
            format!("[{}:0] ", width - 1)
        } else {
            String::new()
        };
        let sep = if k + 1 < m.ports.len() { "," } else { "" };
        ports.push_str(&format!("    {dir} {range}{name}{sep}\n", name = port.name));
        connections.push_str(&format!(
            "        .{name}({name}){sep}\n",
            name = port.name,
            sep = sep
        ));
    }

    let source = format!(
        "module {top} (\n{ports});\n    {inner} #(.{param}({value})) instantiated (\n{connections}    );\nendmodule\n\n{inner_source}",
        top = m.name,
        inner = inner_name,
    );
    parse_module(&source).map_err(|e| format!("generated wrapper does not parse: {e}"))
}

/// First fenced code block tagged `tag` (case-insensitive), if any.
pub fn extract_fenced(text: &str, tag: &str) -> Option<String> {
    let mut rest = text;
    loop {
        let fence = rest.find("```")?;
        let after = &rest[fence + 3..];
        let line_end = after.find('\n')?;
        let found = after[..line_end].trim();
        let body_start = line_end + 1;
        let close = after[body_start..].find("```")?;
        let body = &after[body_start..body_start + close];
        if found.eq_ignore_ascii_case(tag) {
            return Some(body.to_string());
        }
        rest = &after[body_start + close + 3..];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendError, BackendResponse, PromptBundle};
    use crate::toolchain::CheckVerdict;
    use cegsyn_core::ltl::LassoTrace;
    use std::sync::Mutex;

    const SPEC: &str = "MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { G (a -> X b); } }";

    const GOOD_MODULE: &str = "module solution (input clk, input a, output b);\n    reg mem = 1'b0;\n    always @(posedge clk) mem <= a;\n    assign b = mem;\nendmodule\n";
    const GOOD_AAG: &str = "aag 2 1 1 1 0\n2\n4 2\n4\ni0 a\nl0 mem\no0 b\n";

    const BAD_MODULE: &str = "module solution (input clk, input a, output b);\n    assign b = 1'b0;\nendmodule\n";
    const BAD_AAG: &str = "aag 1 1 0 1 0\n2\n0\ni0 a\no0 b\n";

    fn fence(module: &str) -> String {
        format!("Here is the implementation:\n\n```verilog\n{module}```\n")
    }

    /// Delegating backend that records every prompt it forwards.
    struct Recording<'a> {
        inner: &'a dyn Backend,
        prompts: Mutex<Vec<PromptBundle>>,
    }

    impl<'a> Recording<'a> {
        fn new(inner: &'a dyn Backend) -> Self {
            Recording {
                inner,
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl Backend for Recording<'_> {
        fn id(&self) -> &str {
            self.inner.id()
        }
        fn complete(
            &self,
            prompt: &PromptBundle,
            level: ReasoningLevel,
        ) -> Result<BackendResponse, BackendError> {
            self.prompts.lock().unwrap().push(prompt.clone());
            self.inner.complete(prompt, level)
        }
    }

    /// Write a scripted response and its pre-translated circuit for the
    /// module it contains.
    fn add_fixture(dir: &std::path::Path, stem: &str, module: &str, aag: &str) {
        std::fs::write(dir.join(format!("{stem}.txt")), fence(module)).unwrap();
        let key = FixtureTranslator::key(module);
        std::fs::write(dir.join(format!("{key}.aag")), aag).unwrap();
    }

    fn offline_pipeline<'a>(
        backend: &'a dyn Backend,
        translator: &'a FixtureTranslator,
    ) -> Pipeline<'a> {
        Pipeline::new(
            backend,
            translator,
            Checker::BuiltIn {
                limits: FalsifyLimits::default(),
            },
            ReasoningLevel::None,
        )
    }

    #[test]
    fn extract_fenced_selects_the_tagged_block() {
        let text = "intro\n```text\nnot this\n```\nthen\n```tlsf\nMAIN {}\n```\n";
        assert_eq!(extract_fenced(text, "tlsf").unwrap(), "MAIN {}\n");
        assert_eq!(extract_fenced(text, "verilog"), None);
        assert_eq!(extract_fenced("no fences", "tlsf"), None);
    }

    #[test]
    fn run_instance_solves_a_correct_first_attempt() {
        let dir = tempfile::tempdir().unwrap();
        let hash = crate::backend::spec_hash(SPEC);
        add_fixture(dir.path(), &format!("synthesis-{hash}-0"), GOOD_MODULE, GOOD_AAG);

        let scripted = crate::backend::ScriptedBackend::new("replay", dir.path());
        let translator = FixtureTranslator {
            dir: dir.path().to_path_buf(),
        };
        let pipeline = offline_pipeline(&scripted, &translator);
        let outcome = pipeline.run_instance(SPEC, 2);

        assert_eq!(outcome.status, Status::Solved, "{:?}", outcome.error);
        assert_eq!(outcome.iterations_used, 0);
        assert_eq!(outcome.verdict_history.len(), 1);
        assert!(outcome.verdict_history[0].iter().all(CheckVerdict::is_pass));
        assert_eq!(outcome.role, Some(Role::Solution));
        assert_eq!(outcome.final_module.as_deref(), Some(GOOD_MODULE));
    }

    #[test]
    fn run_instance_repairs_with_counterexample_feedback() {
        let dir = tempfile::tempdir().unwrap();
        let hash = crate::backend::spec_hash(SPEC);
        add_fixture(dir.path(), &format!("synthesis-{hash}-0"), BAD_MODULE, BAD_AAG);
        add_fixture(dir.path(), &format!("repair-{hash}-0"), GOOD_MODULE, GOOD_AAG);

        let scripted = crate::backend::ScriptedBackend::new("replay", dir.path());
        let recording = Recording::new(&scripted);
        let translator = FixtureTranslator {
            dir: dir.path().to_path_buf(),
        };
        let pipeline = offline_pipeline(&recording, &translator);
        let outcome = pipeline.run_instance(SPEC, 2);

        assert_eq!(outcome.status, Status::Solved, "{:?}", outcome.error);
        assert_eq!(outcome.iterations_used, 1);
        assert_eq!(outcome.verdict_history.len(), 2);
        assert!(matches!(outcome.verdict_history[0][0], CheckVerdict::Fail(_)));
        assert!(outcome.verdict_history[1].iter().all(CheckVerdict::is_pass));

        // The second prompt is the repair prompt and embeds the violated
        // subformula, the trace table, and the violation step.
        let prompts = recording.prompts.lock().unwrap();
        assert_eq!(prompts.len(), 2);
        let repair = &prompts[1];
        assert_eq!(repair.kind, crate::backend::PromptKind::Repair);
        assert!(repair.text.contains("Violated sub-specification 1 of 1"));
        assert!(repair.text.contains("step |"));
        assert!(repair.text.contains("loop |"));
        assert!(repair.text.contains("first violated at step 2"));
        assert!(repair.text.contains(BAD_MODULE.trim_end()));
    }

    #[test]
    fn run_instance_exhausts_the_budget_and_reports_unsolved() {
        let dir = tempfile::tempdir().unwrap();
        let hash = crate::backend::spec_hash(SPEC);
        add_fixture(dir.path(), &format!("synthesis-{hash}-0"), BAD_MODULE, BAD_AAG);
        // The repair attempt produces the same broken module.
        std::fs::write(
            dir.path().join(format!("repair-{hash}-0.txt")),
            fence(BAD_MODULE),
        )
        .unwrap();

        let scripted = crate::backend::ScriptedBackend::new("replay", dir.path());
        let translator = FixtureTranslator {
            dir: dir.path().to_path_buf(),
        };
        let pipeline = offline_pipeline(&scripted, &translator);
        let outcome = pipeline.run_instance(SPEC, 1);

        assert_eq!(outcome.status, Status::Unsolved);
        assert_eq!(outcome.iterations_used, 1);
        assert_eq!(outcome.verdict_history.len(), 2);
        for verdicts in &outcome.verdict_history {
            assert!(matches!(verdicts[0], CheckVerdict::Fail(_)));
        }
    }

    #[test]
    fn run_instance_stage_errors_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let scripted = crate::backend::ScriptedBackend::new("replay", dir.path());
        let translator = FixtureTranslator {
            dir: dir.path().to_path_buf(),
        };
        let pipeline = offline_pipeline(&scripted, &translator);

        // No fixture at all: the backend stage fails.
        let outcome = pipeline.run_instance(SPEC, 0);
        assert_eq!(outcome.status, Status::Error);
        assert!(outcome.error.as_deref().unwrap().starts_with("backend:"));

        // Unparseable specification.
        let outcome = pipeline.run_instance("MAIN { nonsense", 0);
        assert_eq!(outcome.status, Status::Error);
        assert!(outcome.error.as_deref().unwrap().starts_with("parse:"));

        // A response without any code block: the extract stage fails.
        let hash = crate::backend::spec_hash(SPEC);
        std::fs::write(
            dir.path().join(format!("synthesis-{hash}-0.txt")),
            "I could not produce a module.",
        )
        .unwrap();
        scripted.reset();
        let outcome = pipeline.run_instance(SPEC, 0);
        assert_eq!(outcome.status, Status::Error);
        assert!(outcome.error.as_deref().unwrap().starts_with("extract:"));

        // A module whose ports do not match the specification.
        std::fs::write(
            dir.path().join(format!("synthesis-{hash}-0.txt")),
            fence("module solution (input clk, input wrong, output b);\nassign b = 1'b0;\nendmodule\n"),
        )
        .unwrap();
        scripted.reset();
        let outcome = pipeline.run_instance(SPEC, 0);
        assert_eq!(outcome.status, Status::Error);
        assert!(outcome.error.as_deref().unwrap().starts_with("lint:"));

        // A clean module with no pre-translated circuit.
        std::fs::write(
            dir.path().join(format!("synthesis-{hash}-0.txt")),
            fence(GOOD_MODULE),
        )
        .unwrap();
        scripted.reset();
        let outcome = pipeline.run_instance(SPEC, 0);
        assert_eq!(outcome.status, Status::Error);
        assert!(outcome.error.as_deref().unwrap().starts_with("translate:"));
    }

    #[test]
    fn wrap_parameterized_instantiates_a_concrete_top() {
        let source = "module solution #(parameter n = 27) (\n    input clk,\n    input [n-1:0] finished,\n    output allFinished\n);\n    assign allFinished = &finished;\nendmodule\n";
        let m = parse_module(source).unwrap();
        let wrapped = wrap_parameterized(&m, "n", 3).unwrap();
        assert_eq!(wrapped.name, "solution");
        assert!(wrapped.parameters.is_empty());
        assert!(wrapped.source.contains("solution_inner #(.n(3))"));
        assert!(wrapped.source.contains("module solution_inner"));
        assert!(wrapped.source.contains("input [2:0] finished"));
        // The wrapper's ports are concrete.
        let finished = wrapped.ports.iter().find(|p| p.name == "finished").unwrap();
        assert_eq!(finished.width(&BTreeMap::new()), Ok(3));

        assert!(wrap_parameterized(&m, "m", 3).is_err());
    }

    #[test]
    fn feedback_reports_subformula_trace_and_step() {
        let spec = parse_tlsf(SPEC).unwrap();
        let problem = expand_with(&spec, &BTreeMap::new()).unwrap();
        let trace = LassoTrace::new(
            Vec::new(),
            vec![[("a".to_string(), true), ("b".to_string(), false)]
                .into_iter()
                .collect()],
        );
        let text = format_feedback(&[CheckVerdict::Fail(trace)], &problem);
        assert!(text.contains("Violated sub-specification 1 of 1"));
        assert!(text.contains("G (a -> X b)"));
        assert!(text.contains("   a |  1"));
        assert!(text.contains("   b |  0"));
        assert!(text.contains("loop |  ^"));
        assert!(text.contains("first violated at step 1"));
    }

    #[test]
    fn bounded_passes_are_recorded_as_notes() {
        // Three latches: complete falsification coverage would need lassos
        // of total length 9, beyond the default bound of 6.
        let aag = "aag 4 1 3 1 0\n2\n4 2\n6 4\n8 6\n8\ni0 a\nl0 s0\nl1 s1\nl2 s2\no0 b\n";
        let circuit = cegsyn_core::aiger::parse_aiger(aag).unwrap();
        let checker = Checker::BuiltIn {
            limits: FalsifyLimits::default(),
        };
        // b is a three-step delayed a, so G (a -> X b) fails; a property the
        // circuit satisfies within the bound still reports bounded coverage.
        let holds = LtlFormula::globally(LtlFormula::implies(
            LtlFormula::atom("b"),
            LtlFormula::eventually(LtlFormula::atom("b")),
        ));
        let (verdicts, notes) = checker.check(&circuit, &[holds]).unwrap();
        assert!(verdicts[0].is_pass());
        assert_eq!(notes.len(), 1);
        assert!(notes[0].contains("bounded, not a proof"));
    }
}
