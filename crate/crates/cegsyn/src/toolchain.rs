//! Drivers for the external tools: Verilog→AIGER translation, AIGER→SMV
//! translation, LTL model checking, and formula equivalence. All tools run
//! as subprocesses under wall-clock and memory limits; their outputs are
//! parsed back into verdicts whose counterexample traces are re-validated
//! against the circuit before they leave this module.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use cegsyn_core::aiger::{parse_aiger, render_aiger, simulate, AigerCircuit};
use cegsyn_core::ltl::{
    bounded_inequiv, eval_lasso, render, Dialect, InequivResult, LassoTrace, LtlFormula, Valuation,
    DEFAULT_INEQUIV_CAP,
};
use cegsyn_core::verilog::VerilogModule;

/// Resource limits for one subprocess invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToolLimits {
    pub wall_timeout: Duration,
    /// Address-space cap applied via `setrlimit` in the child.
    pub memory_cap: u64,
}

impl ToolLimits {
    /// Model-checking limits: 600 s wall clock, 32 GiB.
    pub fn checking() -> Self {
        ToolLimits {
            wall_timeout: Duration::from_secs(600),
            memory_cap: 32 << 30,
        }
    }

    /// Equivalence-checking limits: 30 minutes, 32 GiB.
    pub fn equivalence() -> Self {
        ToolLimits {
            wall_timeout: Duration::from_secs(1800),
            memory_cap: 32 << 30,
        }
    }
}

/// Locations of the external executables. `None` entries fall back to a
/// `$PATH` search for the conventional name.
#[derive(Debug, Clone, Default)]
pub struct ToolPaths {
    pub yosys: Option<PathBuf>,
    pub aigtosmv: Option<PathBuf>,
    pub nuxmv: Option<PathBuf>,
    pub ltlfilt: Option<PathBuf>,
}

impl ToolPaths {
    fn resolve(&self, explicit: &Option<PathBuf>, name: &str) -> Result<PathBuf, ToolError> {
        if let Some(p) = explicit {
            return Ok(p.clone());
        }
        let path = std::env::var_os("PATH").unwrap_or_default();
        for dir in std::env::split_paths(&path) {
            let candidate = dir.join(name);
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
        Err(ToolError::ToolMissing(name.to_string()))
    }

    /// True when the translation and checking tools are all locatable.
    pub fn checking_available(&self) -> bool {
        self.resolve(&self.yosys, "yosys").is_ok()
            && self.resolve(&self.aigtosmv, "aigtosmv").is_ok()
            && self.resolve(&self.nuxmv, "nuXmv").is_ok()
    }
}

/// Verbatim record of one subprocess run, kept in the run ledger for audit.
#[derive(Debug, Clone)]
pub struct ToolReport {
    pub program: String,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub wall_time: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("required tool `{0}` was not found on the configured paths")]
    ToolMissing(String),
    #[error("tool failed: {0}")]
    ToolFailed(String),
    #[error("tool exceeded the wall-clock limit")]
    Timeout,
}

/// Per-subproperty model-checking verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckVerdict {
    Pass,
    Fail(LassoTrace),
    Timeout,
    ToolError(String),
}

impl CheckVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckVerdict::Pass)
    }
}

impl fmt::Display for CheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckVerdict::Pass => write!(f, "pass"),
            CheckVerdict::Fail(_) => write!(f, "fail"),
            CheckVerdict::Timeout => write!(f, "timeout"),
            CheckVerdict::ToolError(msg) => write!(f, "tool error: {msg}"),
        }
    }
}

/// Synthesis-tool recipe translating a read Verilog design into ASCII AIGER.
/// The command order is normative; `output` receives the `aag` text.
pub fn yosys_script(module_name: &str, output: &Path) -> String {
    format!(
        "hierarchy -check -top {module_name}\n\
         proc\n\
         flatten\n\
         opt\n\
         memory\n\
         opt\n\
         techmap\n\
         opt\n\
         dffunmap\n\
         abc -g AND\n\
         delete -port {module_name}/clk\n\
         write_aiger -ascii -symbols {}\n",
        output.display()
    )
}

/// Model-checker command script: flatten, encode, build the Boolean model,
/// run the IC3 LTL routine, and quit.
pub fn nuxmv_script() -> String {
    "read_model\n\
     flatten_hierarchy\n\
     encode_variables\n\
     build_boolean_model\n\
     check_ltlspec_ic3\n\
     quit\n"
        .to_string()
}

/// Run one subprocess with `stdin_data` piped in, enforcing the limits.
/// Returns `Timeout` when the wall clock expires (the child is killed).
pub fn run_tool(
    program: &Path,
    args: &[&str],
    stdin_data: &str,
    limits: ToolLimits,
) -> Result<ToolReport, ToolError> {
    let mut cmd = Command::new(program);
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        let cap = limits.memory_cap;
        // Applied in the child between fork and exec; only async-signal-safe
        // calls are permitted here.
        unsafe {
            cmd.pre_exec(move || {
                let rlim = libc::rlimit {
                    rlim_cur: cap as libc::rlim_t,
                    rlim_max: cap as libc::rlim_t,
                };
                libc::setrlimit(libc::RLIMIT_AS, &rlim);
                Ok(())
            });
        }
    }

    let start = Instant::now();
    let mut child = cmd.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ToolError::ToolMissing(program.display().to_string())
        } else {
            ToolError::ToolFailed(format!("failed to start {}: {e}", program.display()))
        }
    })?;

    if let Some(mut stdin) = child.stdin.take() {
        // The child may exit without reading; a broken pipe is not an error.
        let _ = stdin.write_all(stdin_data.as_bytes());
    }

    // Drain pipes on helper threads so a chatty child cannot deadlock.
    let stdout = child.stdout.take().expect("stdout piped");
    let stderr = child.stderr.take().expect("stderr piped");
    let out_thread = std::thread::spawn(move || read_all(stdout));
    let err_thread = std::thread::spawn(move || read_all(stderr));

    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if start.elapsed() > limits.wall_timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ToolError::Timeout);
                }
                std::thread::sleep(Duration::from_millis(20));
            }
            Err(e) => return Err(ToolError::ToolFailed(format!("wait failed: {e}"))),
        }
    };

    Ok(ToolReport {
        program: program.display().to_string(),
        exit_code: status.code(),
        stdout: out_thread.join().unwrap_or_default(),
        stderr: err_thread.join().unwrap_or_default(),
        wall_time: start.elapsed(),
    })
}

fn read_all(mut r: impl std::io::Read) -> String {
    let mut buf = String::new();
    let _ = std::io::Read::read_to_string(&mut r, &mut buf);
    buf
}

/// Translate a Verilog module to an AIGER circuit with the external
/// synthesis tool. Artifacts are written under `workdir`.
pub fn translate_to_aiger(
    m: &VerilogModule,
    paths: &ToolPaths,
    limits: ToolLimits,
    workdir: &Path,
) -> Result<(AigerCircuit, ToolReport), ToolError> {
    let yosys = paths.resolve(&paths.yosys, "yosys")?;
    fs::create_dir_all(workdir)
        .map_err(|e| ToolError::ToolFailed(format!("cannot create workdir: {e}")))?;
    let src = workdir.join(format!("{}.v", m.name));
    let aag = workdir.join(format!("{}.aag", m.name));
    fs::write(&src, &m.source)
        .map_err(|e| ToolError::ToolFailed(format!("cannot write module: {e}")))?;

    let script = format!(
        "read_verilog {}\n{}",
        src.display(),
        yosys_script(&m.name, &aag)
    );
    let report = run_tool(&yosys, &["-q", "-s", "-"], &script, limits)?;
    if report.exit_code != Some(0) {
        return Err(ToolError::ToolFailed(report.stderr.clone()));
    }
    let text = fs::read_to_string(&aag)
        .map_err(|e| ToolError::ToolFailed(format!("no AIGER output: {e}")))?;
    let circuit = parse_aiger(&text)
        .map_err(|e| ToolError::ToolFailed(format!("unparseable AIGER output: {e}")))?;
    Ok((circuit, report))
}

/// Model-check each property against the circuit, one checker invocation
/// per property. Fail traces are parsed from the counterexample listing and
/// re-validated against the circuit; a trace that does not replay or does
/// not falsify its property is demoted to `ToolError`.
pub fn check_properties(
    c: &AigerCircuit,
    props: &[LtlFormula],
    paths: &ToolPaths,
    limits: ToolLimits,
    workdir: &Path,
) -> Result<Vec<CheckVerdict>, ToolError> {
    let aigtosmv = paths.resolve(&paths.aigtosmv, "aigtosmv")?;
    let nuxmv = paths.resolve(&paths.nuxmv, "nuXmv")?;
    fs::create_dir_all(workdir)
        .map_err(|e| ToolError::ToolFailed(format!("cannot create workdir: {e}")))?;

    let aag_path = workdir.join("circuit.aag");
    fs::write(&aag_path, render_aiger(c))
        .map_err(|e| ToolError::ToolFailed(format!("cannot write AIGER: {e}")))?;
    let report = run_tool(
        &aigtosmv,
        &[aag_path.to_str().unwrap_or_default()],
        "",
        limits,
    )?;
    if report.exit_code != Some(0) {
        return Err(ToolError::ToolFailed(report.stderr));
    }
    let base_model = report.stdout;

    let script_path = workdir.join("check.cmd");
    fs::write(&script_path, nuxmv_script())
        .map_err(|e| ToolError::ToolFailed(format!("cannot write script: {e}")))?;

    let mut verdicts = Vec::with_capacity(props.len());
    for (k, prop) in props.iter().enumerate() {
        let model_path = workdir.join(format!("prop{k}.smv"));
        let model = format!("{base_model}\nLTLSPEC {}\n", render(prop, Dialect::Smv));
        if fs::write(&model_path, model).is_err() {
            verdicts.push(CheckVerdict::ToolError("cannot write model file".into()));
            continue;
        }
        let run = run_tool(
            &nuxmv,
            &[
                "-source",
                script_path.to_str().unwrap_or_default(),
                model_path.to_str().unwrap_or_default(),
            ],
            "",
            limits,
        );
        verdicts.push(match run {
            Err(ToolError::Timeout) => CheckVerdict::Timeout,
            Err(e) => return Err(e),
            Ok(report) if report.stdout.contains("is true") => CheckVerdict::Pass,
            Ok(report) if report.stdout.contains("is false") => {
                let atoms: Vec<String> = c
                    .input_names
                    .iter()
                    .chain(c.output_names.iter())
                    .cloned()
                    .collect();
                match parse_counterexample(&report.stdout, &atoms) {
                    Ok(trace) => validate_trace(c, prop, trace),
                    Err(msg) => CheckVerdict::ToolError(msg),
                }
            }
            Ok(report) => CheckVerdict::ToolError(format!(
                "no verdict in checker output (exit {:?}): {}",
                report.exit_code,
                report.stderr.trim()
            )),
        });
    }
    Ok(verdicts)
}

fn validate_trace(c: &AigerCircuit, prop: &LtlFormula, trace: LassoTrace) -> CheckVerdict {
    let steps: Vec<Valuation> = trace
        .stem
        .iter()
        .chain(trace.looped.iter())
        .cloned()
        .collect();
    let replay = match simulate(c, &steps) {
        Ok(replay) => replay,
        Err(e) => return CheckVerdict::ToolError(format!("trace does not drive circuit: {e}")),
    };
    if replay != steps {
        return CheckVerdict::ToolError("counterexample does not replay on the circuit".into());
    }
    match eval_lasso(prop, &trace) {
        Ok(false) => CheckVerdict::Fail(trace),
        Ok(true) => CheckVerdict::ToolError("counterexample does not falsify the property".into()),
        Err(e) => CheckVerdict::ToolError(format!("counterexample trace incomplete: {e}")),
    }
}

/// Parse a model-checker counterexample listing into a lasso trace over the
/// given atoms. State blocks start at `-> State:` lines; assignments are
/// `name = TRUE|FALSE|0|1`; variables not reassigned inherit the previous
/// state's value; the loop begins at the state following the loop-start
/// line. Unknown trace shapes are errors, never guesses.
pub fn parse_counterexample(output: &str, atoms: &[String]) -> Result<LassoTrace, String> {
    let mut states: Vec<Valuation> = Vec::new();
    let mut loop_start: Option<usize> = None;
    for line in output.lines() {
        let t = line.trim();
        if t.contains("Loop starts here") {
            loop_start = Some(states.len());
        } else if t.starts_with("-> State:") {
            let inherited = states.last().cloned().unwrap_or_default();
            states.push(inherited);
        } else if let Some((name, value)) = t.split_once('=') {
            let Some(state) = states.last_mut() else {
                continue; // header noise before the first state block
            };
            let name = name.trim();
            if !atoms.iter().any(|a| a == name) {
                continue; // internal checker variable, not a circuit signal
            }
            let bit = match value.trim() {
                "TRUE" | "1" => true,
                "FALSE" | "0" => false,
                other => return Err(format!("unrecognized value `{other}` for `{name}`")),
            };
            state.insert(name.to_string(), bit);
        }
    }
    if states.is_empty() {
        return Err("counterexample contains no state blocks".to_string());
    }
    let loop_start = loop_start.ok_or_else(|| "counterexample has no loop marker".to_string())?;
    if loop_start >= states.len() {
        return Err("loop marker is not followed by a state".to_string())?;
    }
    for (k, state) in states.iter().enumerate() {
        for atom in atoms {
            if !state.contains_key(atom) {
                return Err(format!("state {} does not assign `{atom}`", k + 1));
            }
        }
    }
    Ok(LassoTrace::new(
        states[..loop_start].to_vec(),
        states[loop_start..].to_vec(),
    ))
}

/// Outcome of a formula-equivalence query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    Equivalent,
    /// The witness is present when the bounded fallback produced one.
    Inequivalent(Option<LassoTrace>),
    /// Bounded fallback found no witness; not a proof of equivalence.
    Unknown { max_len: usize },
    Timeout,
}

/// Check `f ≡ g` with the external LTL filter; when the tool is absent,
/// fall back to bounded lasso enumeration.
pub fn equivalence_check(
    f: &LtlFormula,
    g: &LtlFormula,
    paths: &ToolPaths,
    limits: ToolLimits,
) -> EquivVerdict {
    match paths.resolve(&paths.ltlfilt, "ltlfilt") {
        Ok(ltlfilt) => {
            let run = run_tool(
                &ltlfilt,
                &[
                    "-f",
                    &render(f, Dialect::Spot),
                    "--equivalent-to",
                    &render(g, Dialect::Spot),
                ],
                "",
                limits,
            );
            match run {
                Err(ToolError::Timeout) => EquivVerdict::Timeout,
                Err(_) => bounded_fallback(f, g),
                Ok(report) if !report.stdout.trim().is_empty() => EquivVerdict::Equivalent,
                Ok(_) => EquivVerdict::Inequivalent(None),
            }
        }
        Err(_) => bounded_fallback(f, g),
    }
}

fn bounded_fallback(f: &LtlFormula, g: &LtlFormula) -> EquivVerdict {
    const MAX_LEN: usize = 6;
    match bounded_inequiv(f, g, 4, MAX_LEN, DEFAULT_INEQUIV_CAP) {
        Ok(InequivResult::Witness(trace)) => EquivVerdict::Inequivalent(Some(trace)),
        Ok(InequivResult::NoneFound) | Err(_) => EquivVerdict::Unknown { max_len: MAX_LEN },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cegsyn_core::aiger::parse_aiger;

    fn val(pairs: &[(&str, bool)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn atoms(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn yosys_script_order_is_fixed() {
        let script = yosys_script("solution", Path::new("out.aag"));
        assert_eq!(
            script,
            "hierarchy -check -top solution\nproc\nflatten\nopt\nmemory\nopt\n\
             techmap\nopt\ndffunmap\nabc -g AND\ndelete -port solution/clk\n\
             write_aiger -ascii -symbols out.aag\n"
        );
    }

    #[test]
    fn nuxmv_script_is_fixed() {
        assert_eq!(
            nuxmv_script(),
            "read_model\nflatten_hierarchy\nencode_variables\nbuild_boolean_model\n\
             check_ltlspec_ic3\nquit\n"
        );
    }

    #[test]
    fn tool_limits_defaults() {
        assert_eq!(ToolLimits::checking().wall_timeout, Duration::from_secs(600));
        assert_eq!(ToolLimits::equivalence().wall_timeout, Duration::from_secs(1800));
        assert_eq!(ToolLimits::checking().memory_cap, 32 << 30);
    }

    const CEX: &str = "\
Trace Description: LTL Counterexample
Trace Type: Counterexample
  -> State: 1.1 <-
    a = TRUE
    b = FALSE
  -> State: 1.2 <-
    b = TRUE
  -- Loop starts here
  -> State: 1.3 <-
    a = FALSE
";

    #[test]
    fn parse_counterexample_inherits_sparse_assignments() {
        let trace = parse_counterexample(CEX, &atoms(&["a", "b"])).unwrap();
        // The state after the loop marker opens the loop.
        assert_eq!(
            trace.stem,
            vec![val(&[("a", true), ("b", false)]), val(&[("a", true), ("b", true)])]
        );
        assert_eq!(trace.looped, vec![val(&[("a", false), ("b", true)])]);
    }

    #[test]
    fn parse_counterexample_loop_can_cover_whole_trace() {
        let text = "  -- Loop starts here\n  -> State: 1.1 <-\n    a = 1\n";
        let trace = parse_counterexample(text, &atoms(&["a"])).unwrap();
        assert!(trace.stem.is_empty());
        assert_eq!(trace.looped, vec![val(&[("a", true)])]);
    }

    #[test]
    fn parse_counterexample_skips_internal_variables() {
        let text = "  -> State: 1.1 <-\n    a = TRUE\n    __checker_aux = TRUE\n\
                    -- Loop starts here\n  -> State: 1.2 <-\n    a = FALSE\n";
        let trace = parse_counterexample(text, &atoms(&["a"])).unwrap();
        assert!(!trace.at(0).contains_key("__checker_aux"));
    }

    #[test]
    fn parse_counterexample_rejects_unknown_shapes() {
        // No loop marker: the word is finite, not a lasso.
        let no_loop = "-> State: 1.1 <-\n  a = TRUE\n";
        assert!(parse_counterexample(no_loop, &atoms(&["a"]))
            .unwrap_err()
            .contains("loop marker"));
        // No states at all.
        assert!(parse_counterexample("nothing here", &atoms(&["a"]))
            .unwrap_err()
            .contains("no state blocks"));
        // Trailing loop marker with no state after it.
        let dangling = "-> State: 1.1 <-\n  a = TRUE\n-- Loop starts here\n";
        assert!(parse_counterexample(dangling, &atoms(&["a"])).is_err());
        // First state never assigns a required atom.
        let missing = "-> State: 1.1 <-\n-- Loop starts here\n-> State: 1.2 <-\n  a = TRUE\n";
        assert!(parse_counterexample(missing, &atoms(&["a"]))
            .unwrap_err()
            .contains("does not assign"));
        // Unrecognized truth value.
        let bad = "-> State: 1.1 <-\n  a = MAYBE\n-- Loop starts here\n-> State: 1.2 <-\n";
        assert!(parse_counterexample(bad, &atoms(&["a"]))
            .unwrap_err()
            .contains("MAYBE"));
    }

    // A single toggle latch driving the only output: out is 0, 1, 0, 1, ...
    const TOGGLE: &str = "aag 1 0 1 1 0\n2 3\n2\nl0 state\no0 out\n";

    #[test]
    fn validate_trace_accepts_genuine_counterexamples() {
        let c = parse_aiger(TOGGLE).unwrap();
        let prop = LtlFormula::globally(LtlFormula::not(LtlFormula::atom("out")));
        let trace = LassoTrace::new(
            vec![val(&[("out", false)])],
            vec![val(&[("out", true)]), val(&[("out", false)])],
        );
        assert!(matches!(
            validate_trace(&c, &prop, trace),
            CheckVerdict::Fail(_)
        ));
    }

    #[test]
    fn validate_trace_demotes_bogus_counterexamples() {
        let c = parse_aiger(TOGGLE).unwrap();
        let prop = LtlFormula::globally(LtlFormula::not(LtlFormula::atom("out")));
        // Does not replay: the circuit starts with out = 0.
        let wrong_replay = LassoTrace::new(Vec::new(), vec![val(&[("out", true)])]);
        assert!(matches!(
            validate_trace(&c, &prop, wrong_replay),
            CheckVerdict::ToolError(_)
        ));
        // Replays, but satisfies the property it is supposed to falsify.
        let satisfied = LassoTrace::new(
            vec![val(&[("out", false)])],
            vec![val(&[("out", true)]), val(&[("out", false)])],
        );
        let weaker = LtlFormula::eventually(LtlFormula::atom("out"));
        assert!(matches!(
            validate_trace(&c, &weaker, satisfied),
            CheckVerdict::ToolError(_)
        ));
    }

    #[test]
    fn missing_tools_are_reported_not_guessed() {
        let paths = ToolPaths {
            yosys: None,
            aigtosmv: None,
            nuxmv: None,
            ltlfilt: None,
        };
        if paths.checking_available() {
            return; // a real toolchain is installed; nothing to assert here
        }
        let module = cegsyn_core::verilog::parse_module(
            "module solution (input clk, input a, output b);\nassign b = a;\nendmodule\n",
        )
        .unwrap();
        let err = translate_to_aiger(
            &module,
            &paths,
            ToolLimits::checking(),
            &std::env::temp_dir(),
        )
        .unwrap_err();
        assert!(matches!(err, ToolError::ToolMissing(name) if name == "yosys"));
    }

    #[test]
    fn run_tool_failure_on_unspawnable_program() {
        let err = run_tool(
            Path::new("/nonexistent/cegsyn-no-such-tool"),
            &[],
            "",
            ToolLimits::checking(),
        )
        .unwrap_err();
        assert!(matches!(err, ToolError::ToolMissing(_)));
    }

    #[test]
    fn run_tool_times_out_and_kills() {
        let limits = ToolLimits {
            wall_timeout: Duration::from_millis(100),
            memory_cap: 32 << 30,
        };
        let started = Instant::now();
        let err = run_tool(Path::new("/bin/sleep"), &["5"], "", limits).unwrap_err();
        assert!(matches!(err, ToolError::Timeout));
        assert!(started.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn run_tool_captures_stdout_and_exit_code() {
        let report = run_tool(
            Path::new("/bin/cat"),
            &[],
            "hello toolchain\n",
            ToolLimits::checking(),
        )
        .unwrap();
        assert_eq!(report.stdout, "hello toolchain\n");
        assert_eq!(report.exit_code, Some(0));
    }

    #[test]
    fn equivalence_falls_back_to_bounded_search() {
        // Point the filter at a path that cannot spawn so the fallback runs.
        let paths = ToolPaths {
            yosys: None,
            aigtosmv: None,
            nuxmv: None,
            ltlfilt: Some(PathBuf::from("/nonexistent/ltlfilt")),
        };
        let f = LtlFormula::globally(LtlFormula::atom("a"));
        let g = LtlFormula::atom("a");
        let verdict = equivalence_check(&f, &g, &paths, ToolLimits::equivalence());
        let EquivVerdict::Inequivalent(Some(witness)) = verdict else {
            panic!("expected a bounded inequivalence witness, got {verdict:?}");
        };
        // Smallest witness by the enumeration order: a holds once, then
        // never again.
        assert_eq!(witness.stem, vec![val(&[("a", true)])]);
        assert_eq!(witness.looped, vec![val(&[("a", false)])]);

        let same = equivalence_check(&f, &f, &paths, ToolLimits::equivalence());
        assert!(matches!(same, EquivVerdict::Unknown { max_len: 6 }));
    }

    #[test]
    fn verdict_display_is_stable() {
        assert_eq!(CheckVerdict::Pass.to_string(), "pass");
        assert_eq!(CheckVerdict::Timeout.to_string(), "timeout");
        assert_eq!(
            CheckVerdict::ToolError("x".into()).to_string(),
            "tool error: x"
        );
    }
}
