//! Prompt construction and synthesizer backends: a remote chat-completion
//! backend and a deterministic scripted backend that replays fixture files
//! for offline tests.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use cegsyn_core::tlsf::{parse_tlsf, strip_metadata};
use sha2::{Digest, Sha256};

/// The role a prompt plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PromptKind {
    Synthesis,
    Repair,
    ParamSynthesis,
    Autoformalize,
    AutoformalizeRepair,
    DirectNL,
}

impl PromptKind {
    /// Stable slug used in fixture file names and ledger records.
    pub fn slug(self) -> &'static str {
        match self {
            PromptKind::Synthesis => "synthesis",
            PromptKind::Repair => "repair",
            PromptKind::ParamSynthesis => "param-synthesis",
            PromptKind::Autoformalize => "autoformalize",
            PromptKind::AutoformalizeRepair => "autoformalize-repair",
            PromptKind::DirectNL => "direct-nl",
        }
    }
}

/// A fully substituted prompt, plus the provenance needed to key fixtures
/// and audit the ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub text: String,
    pub template_id: &'static str,
    /// Hash of the driving input (TLSF source or NL description) so repair
    /// prompts for one instance share a key with its synthesis prompt.
    pub spec_hash: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("specification text is empty")]
    EmptySpec,
    #[error("natural-language description is empty")]
    EmptyDescription,
    #[error("specification declares no parameters")]
    NoParameters,
    #[error("specification does not parse: {0}")]
    UnparseableSpec(String),
}

/// Short content hash identifying a specification or description.
pub fn spec_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

const SYNTHESIS_TEMPLATE: &str = r#"Your task is to translate the following temporal logic specification in Temporal Logic Synthesis Format (TLSF) into a Verilog module that satisfies the specification if realizable, or represents an environment strategy if unrealizable.

The TLSF format builds upon standard Linear Temporal Logic (LTL) and breaks the specification down into up to six sections: INITIALLY, PRESET, REQUIRE, ASSERT/INVARIANTS, ASSUME/ASSUMPTIONS, and GUARANTEE/GUARANTEES. If the semantics are "Mealy" or "Moore", the sections are interpreted as the formula f_initially \rightarrow (f_preset \land (G f_require \land f_assume \rightarrow G f_assert \land f_guarantee)). If the semantics are "Mealy,Strict" or "Moore,Strict", the sections are interpreted as the formula f_initially \rightarrow (f_preset \land (f_assert W \neg f_require) \land (G f_require \land f_assume \rightarrow f_guarantee)).

Follow these guidelines for the translation from TLSF to Verilog:

- If the specification is unrealizable, swap the roles of inputs and outputs: the module's inputs become the specification's outputs, and the module's outputs become the specification's inputs. The implementation should demonstrate an environment strategy that violates the specification for every possible system response.
- When the TLSF specification contains a PARAMETERS subsection, do not generate a parameterized Verilog module, but instead directly instantiate the parameters with their given values.
- In addition to inputs and outputs, include a single clock input named "clk" in the Verilog module and nothing else.
- Make sure the code can be processed by Yosys. For example, do not declare variables inside procedural blocks like initial or always.
- Name the module simply "solution" if the specification is realizable and "environment" if the specification is unrealizable.
- Enclose the Verilog code within triple backticks (```) and specify "verilog" right after the opening set of backticks.

Here is the TLSF specification:

{specification}
"#;

/// The parameterized variant replaces the fixed-instantiation guideline; the
/// other guidelines are unchanged.
const PARAM_GUIDELINE_FIXED: &str = "- When the TLSF specification contains a PARAMETERS subsection, do not generate a parameterized Verilog module, but instead directly instantiate the parameters with their given values.";
const PARAM_GUIDELINE_PARAMETERIZED: &str = "- The TLSF specification contains a PARAMETERS subsection. Generate a parameterized Verilog module with a matching parameter declaration in the module's header list (for example, `module solution #(parameter n = 27)`), keeping the declared default values. The module must be correct for every positive parameter value, not only the default.";

/// Grammar summary embedded in autoformalization prompts. Mirrors
/// `docs/tlsf-subset.md`.
const TLSF_GRAMMAR: &str = r#"spec        := [info] [global] main
info        := "INFO" "{" { "SEMANTICS" ":" semantics ";" } "}"
semantics   := "Mealy" | "Moore" | "Mealy,Strict" | "Moore,Strict"
global      := "GLOBAL" "{" [params] [defs] "}"
params      := "PARAMETERS" "{" { ident "=" integer ";" } "}"
defs        := "DEFINITIONS" "{" { ident "(" ident { "," ident } ")" "=" expr ";" } "}"
main        := "MAIN" "{" "INPUTS" "{" { signal ";" } "}"
                          "OUTPUTS" "{" { signal ";" } "}"
                          { section "{" { expr ";" } "}" } "}"
section     := "INITIALLY" | "PRESET" | "REQUIRE" | "ASSERT" | "ASSUME" | "GUARANTEE"
             | "REQUIREMENTS" | "INVARIANTS" | "ASSUMPTIONS" | "GUARANTEES"
signal      := ident [ "[" arith "]" ]          // bit-vector width, else scalar
expr        := "true" | "false" | ident [ "[" arith "]" ]
             | "!" expr | "X" expr | "G" expr | "F" expr
             | expr ("&&" | "||" | "->" | "<->" | "U" | "W" | "R") expr
             | ("&&" | "||") "[" arith "<=" ident "<" arith "]" expr
             | ident "(" args ")" | "(" expr ")"
arith       := integer | ident | arith ("+" | "-" | "*" | "/") arith | "(" arith ")""#;

const SIGNAL_CONVENTIONS: &str = "Conventions for parameterized signals: declare a bit-vector input or output as `name[n]` where `n` is a parameter; refer to bit `i` as `name[i]`; quantify over bits with the ranged operators, e.g. `&&[0<=i<n] (request[i] -> F grant[i])`. Scalars take no width.";

const LTL_GLOSSARY: &str = "LTL operators: X (next step), G (always), F (eventually), U (until), W (weak until, no obligation that the right side ever holds), R (release); Boolean connectives !, &&, ||, ->, <->.";

/// Build the reactive-synthesis prompt for a stripped TLSF specification.
pub fn build_synthesis_prompt(spec_text: &str) -> Result<PromptBundle, PromptError> {
    if spec_text.trim().is_empty() {
        return Err(PromptError::EmptySpec);
    }
    Ok(PromptBundle {
        kind: PromptKind::Synthesis,
        text: SYNTHESIS_TEMPLATE.replace("{specification}", spec_text),
        template_id: "synthesis-v1",
        spec_hash: spec_hash(spec_text),
    })
}

/// Build the repair prompt: the original specification, the prior module,
/// and the formatted counterexample feedback, under the same output rules
/// as the synthesis prompt.
pub fn build_repair_prompt(
    spec_text: &str,
    module_source: &str,
    feedback: &str,
) -> Result<PromptBundle, PromptError> {
    if spec_text.trim().is_empty() {
        return Err(PromptError::EmptySpec);
    }
    let text = format!(
        "{}\nYour previous Verilog module did not satisfy the specification. \
         Here is the module you produced:\n\n```verilog\n{}\n```\n\n\
         Model checking found the following counterexample executions of \
         your module, each violating a part of the specification:\n\n{}\n\
         Repair the module so that it satisfies the full specification. \
         All of the guidelines above still apply: keep the module name, the \
         clock input, the port list, and the triple-backtick verilog fencing.\n",
        SYNTHESIS_TEMPLATE.replace("{specification}", spec_text),
        module_source.trim_end(),
        feedback.trim_end(),
    );
    Ok(PromptBundle {
        kind: PromptKind::Repair,
        text,
        template_id: "repair-v1",
        spec_hash: spec_hash(spec_text),
    })
}

/// Build the parameterized-synthesis prompt. The specification must declare
/// at least one parameter.
pub fn build_param_prompt(spec_text: &str) -> Result<PromptBundle, PromptError> {
    if spec_text.trim().is_empty() {
        return Err(PromptError::EmptySpec);
    }
    let spec = parse_tlsf(&strip_metadata(spec_text))
        .map_err(|e| PromptError::UnparseableSpec(e.to_string()))?;
    if spec.parameters.is_empty() {
        return Err(PromptError::NoParameters);
    }
    Ok(PromptBundle {
        kind: PromptKind::ParamSynthesis,
        text: SYNTHESIS_TEMPLATE
            .replace(PARAM_GUIDELINE_FIXED, PARAM_GUIDELINE_PARAMETERIZED)
            .replace("{specification}", spec_text),
        template_id: "param-synthesis-v1",
        spec_hash: spec_hash(spec_text),
    })
}

/// Build the autoformalization prompt: NL description plus the supported
/// TLSF grammar, signal conventions, and operator glossary.
pub fn build_autoformalization_prompt(nl_text: &str) -> Result<PromptBundle, PromptError> {
    if nl_text.trim().is_empty() {
        return Err(PromptError::EmptyDescription);
    }
    let text = format!(
        "Your task is to formalize the following natural language \
         description of a reactive system as a specification in Temporal \
         Logic Synthesis Format (TLSF).\n\n\
         The supported TLSF grammar is:\n\n```\n{TLSF_GRAMMAR}\n```\n\n\
         {SIGNAL_CONVENTIONS}\n\n{LTL_GLOSSARY}\n\n\
         Output only the TLSF specification, enclosed within triple \
         backticks (```) with \"tlsf\" right after the opening set of \
         backticks.\n\n\
         Here is the natural language description:\n\n{nl_text}\n"
    );
    Ok(PromptBundle {
        kind: PromptKind::Autoformalize,
        text,
        template_id: "autoformalize-v1",
        spec_hash: spec_hash(nl_text),
    })
}

/// Build the syntax-repair prompt for a rejected autoformalization attempt,
/// quoting the parser diagnostic verbatim.
pub fn build_autoformalize_repair_prompt(
    nl_text: &str,
    previous_attempt: &str,
    parser_error: &str,
) -> Result<PromptBundle, PromptError> {
    let base = build_autoformalization_prompt(nl_text)?;
    let text = format!(
        "{}\nYour previous attempt was not syntactically valid TLSF. The \
         parser reported:\n\n    {}\n\nHere is the attempt:\n\n```tlsf\n{}\n```\n\n\
         Produce a corrected TLSF specification with the same fencing.\n",
        base.text,
        parser_error.trim(),
        previous_attempt.trim_end(),
    );
    Ok(PromptBundle {
        kind: PromptKind::AutoformalizeRepair,
        text,
        template_id: "autoformalize-repair-v1",
        spec_hash: base.spec_hash,
    })
}

/// Build the direct natural-language synthesis prompt: the synthesis
/// guidelines applied straight to the NL description.
pub fn build_directnl_prompt(nl_text: &str) -> Result<PromptBundle, PromptError> {
    if nl_text.trim().is_empty() {
        return Err(PromptError::EmptyDescription);
    }
    let text = SYNTHESIS_TEMPLATE
        .replace(
            "translate the following temporal logic specification in Temporal Logic Synthesis Format (TLSF)",
            "translate the following natural language specification of a reactive system",
        )
        .replace(
            "Follow these guidelines for the translation from TLSF to Verilog:",
            "Follow these guidelines for the translation to Verilog:",
        )
        .replace(
            "Here is the TLSF specification:\n\n{specification}",
            &format!("Here is the natural language specification:\n\n{nl_text}"),
        );
    Ok(PromptBundle {
        kind: PromptKind::DirectNL,
        text,
        template_id: "direct-nl-v1",
        spec_hash: spec_hash(nl_text),
    })
}

/// How much reasoning budget to request from a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum ReasoningLevel {
    None,
    Low,
    Medium,
    High,
    XHigh,
}

impl ReasoningLevel {
    pub const ALL: [ReasoningLevel; 5] = [
        ReasoningLevel::None,
        ReasoningLevel::Low,
        ReasoningLevel::Medium,
        ReasoningLevel::High,
        ReasoningLevel::XHigh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningLevel::None => "none",
            ReasoningLevel::Low => "low",
            ReasoningLevel::Medium => "medium",
            ReasoningLevel::High => "high",
            ReasoningLevel::XHigh => "xhigh",
        }
    }
}

impl std::str::FromStr for ReasoningLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ReasoningLevel::None),
            "low" => Ok(ReasoningLevel::Low),
            "medium" => Ok(ReasoningLevel::Medium),
            "high" => Ok(ReasoningLevel::High),
            "xhigh" => Ok(ReasoningLevel::XHigh),
            other => Err(format!("unknown reasoning level `{other}`")),
        }
    }
}

impl fmt::Display for ReasoningLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One completion from a backend, with token accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendResponse {
    pub text: String,
    pub reasoning_tokens: u64,
    pub output_tokens: u64,
    pub latency: Duration,
    pub backend_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited; retry after {retry_after:?}")]
    RateLimited { retry_after: Option<Duration> },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no fixture for this request: {0}")]
    FixtureMissing(PathBuf),
}

/// A synthesizer that turns prompts into completions.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(
        &self,
        prompt: &PromptBundle,
        level: ReasoningLevel,
    ) -> Result<BackendResponse, BackendError>;
}

/// Deterministic offline backend replaying canned responses from a fixture
/// directory. Responses are keyed `<kind>-<spec-hash>-<attempt>.txt` where
/// the attempt index counts completions requested for that (kind, hash)
/// pair; an optional `.json` sidecar carries token counts.
pub struct ScriptedBackend {
    id: String,
    dir: PathBuf,
    attempts: Mutex<HashMap<(PromptKind, String), u32>>,
}

#[derive(serde::Deserialize, Default)]
struct FixtureMeta {
    #[serde(default)]
    reasoning_tokens: u64,
    #[serde(default)]
    output_tokens: u64,
}

impl ScriptedBackend {
    pub fn new(id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        ScriptedBackend {
            id: id.into(),
            dir: dir.into(),
            attempts: Mutex::new(HashMap::new()),
        }
    }

    /// Forget attempt counters, replaying fixtures from index 0 again.
    pub fn reset(&self) {
        self.attempts.lock().unwrap().clear();
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(
        &self,
        prompt: &PromptBundle,
        _level: ReasoningLevel,
    ) -> Result<BackendResponse, BackendError> {
        let attempt = {
            let mut attempts = self.attempts.lock().unwrap();
            let counter = attempts
                .entry((prompt.kind, prompt.spec_hash.clone()))
                .or_insert(0);
            let current = *counter;
            *counter += 1;
            current
        };
        let stem = format!("{}-{}-{attempt}", prompt.kind.slug(), prompt.spec_hash);
        let body_path = self.dir.join(format!("{stem}.txt"));
        let text =
            std::fs::read_to_string(&body_path).map_err(|_| BackendError::FixtureMissing(body_path))?;
        let meta: FixtureMeta = std::fs::read_to_string(self.dir.join(format!("{stem}.json")))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or_default();
        Ok(BackendResponse {
            text,
            reasoning_tokens: meta.reasoning_tokens,
            output_tokens: meta.output_tokens,
            latency: Duration::ZERO,
            backend_id: self.id.clone(),
        })
    }
}

/// Remote chat-completion backend speaking a minimal JSON protocol:
/// request `{"model", "reasoning_level", "prompt"}`, response
/// `{"text", "reasoning_tokens", "output_tokens"}`.
pub struct HttpBackend {
    id: String,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    /// Base delay for exponential backoff between transport retries.
    backoff_base: Duration,
    client: reqwest::blocking::Client,
}

#[derive(serde::Serialize)]
struct HttpRequest<'a> {
    model: &'a str,
    reasoning_level: &'a str,
    prompt: &'a str,
}

#[derive(serde::Deserialize)]
struct HttpResponse {
    text: String,
    #[serde(default)]
    reasoning_tokens: u64,
    #[serde(default)]
    output_tokens: u64,
}

impl HttpBackend {
    /// `credential_var` names the environment variable holding the API key;
    /// the key itself is never logged.
    pub fn new(
        id: impl Into<String>,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        credential_var: Option<&str>,
    ) -> Self {
        HttpBackend {
            id: id.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: credential_var.and_then(|v| std::env::var(v).ok()),
            backoff_base: Duration::from_millis(250),
            client: reqwest::blocking::Client::new(),
        }
    }

    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn attempt_once(
        &self,
        prompt: &PromptBundle,
        level: ReasoningLevel,
    ) -> Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let mut req = self.client.post(&self.endpoint).json(&HttpRequest {
            model: &self.model,
            reasoning_level: level.as_str(),
            prompt: &prompt.text,
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|s| s.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(BackendError::RateLimited { retry_after });
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::Auth(format!("server returned {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Transport(format!("server returned {status}")));
        }
        let body: HttpResponse = resp
            .json()
            .map_err(|e| BackendError::Transport(format!("bad response body: {e}")))?;
        Ok(BackendResponse {
            text: body.text,
            reasoning_tokens: body.reasoning_tokens,
            output_tokens: body.output_tokens,
            latency: start.elapsed(),
            backend_id: self.id.clone(),
        })
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(
        &self,
        prompt: &PromptBundle,
        level: ReasoningLevel,
    ) -> Result<BackendResponse, BackendError> {
        const MAX_TRIES: u32 = 3;
        let mut last = None;
        for try_index in 0..MAX_TRIES {
            match self.attempt_once(prompt, level) {
                Ok(resp) => return Ok(resp),
                // Auth failures are not transient; surface immediately.
                Err(e @ BackendError::Auth(_)) => return Err(e),
                Err(e) => {
                    let delay = match &e {
                        BackendError::RateLimited {
                            retry_after: Some(hint),
                        } => *hint,
                        _ => self.backoff_base * 2u32.pow(try_index),
                    };
                    last = Some(e);
                    if try_index + 1 < MAX_TRIES {
                        std::thread::sleep(delay);
                    }
                }
            }
        }
        Err(last.expect("at least one attempt was made"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    const MINI_SPEC: &str = "MAIN { INPUTS { a; } OUTPUTS { b; } GUARANTEE { G (a -> X b); } }";
    const PARAM_SPEC: &str =
        "GLOBAL { PARAMETERS { n = 3; } }\nMAIN { INPUTS { r[n]; } OUTPUTS { g; } }";

    #[test]
    fn spec_hash_is_short_and_stable() {
        let h = spec_hash("hello");
        assert_eq!(h.len(), 16);
        assert_eq!(h, spec_hash("hello"));
        assert_ne!(h, spec_hash("hello "));
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn synthesis_prompt_is_byte_stable() {
        let a = build_synthesis_prompt(MINI_SPEC).unwrap();
        let b = build_synthesis_prompt(MINI_SPEC).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(a.kind, PromptKind::Synthesis);
        assert_eq!(a.template_id, "synthesis-v1");
        assert!(a.text.ends_with(&format!("{MINI_SPEC}\n")));
        assert!(!a.text.contains("{specification}"));
        // The fixed wording the loop depends on.
        assert!(a.text.contains("swap the roles of inputs and outputs"));
        assert!(a.text.contains("single clock input named \"clk\""));
        assert!(a
            .text
            .contains("\"solution\" if the specification is realizable"));
        assert!(a.text.contains(PARAM_GUIDELINE_FIXED));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(
            build_synthesis_prompt("  \n"),
            Err(PromptError::EmptySpec)
        ));
        assert!(matches!(
            build_repair_prompt("", "module solution; endmodule", "feedback"),
            Err(PromptError::EmptySpec)
        ));
        assert!(matches!(
            build_autoformalization_prompt(""),
            Err(PromptError::EmptyDescription)
        ));
        assert!(matches!(
            build_directnl_prompt("\t"),
            Err(PromptError::EmptyDescription)
        ));
    }

    #[test]
    fn param_prompt_swaps_the_parameter_guideline() {
        let p = build_param_prompt(PARAM_SPEC).unwrap();
        assert!(!p.text.contains(PARAM_GUIDELINE_FIXED));
        assert!(p.text.contains(PARAM_GUIDELINE_PARAMETERIZED));
        assert!(matches!(
            build_param_prompt(MINI_SPEC),
            Err(PromptError::NoParameters)
        ));
        assert!(matches!(
            build_param_prompt("MAIN { OOPS"),
            Err(PromptError::UnparseableSpec(_))
        ));
    }

    #[test]
    fn repair_prompt_embeds_module_and_feedback() {
        let p = build_repair_prompt(MINI_SPEC, "module solution;\nendmodule", "step 2 fails").unwrap();
        assert_eq!(p.kind, PromptKind::Repair);
        assert!(p.text.contains("```verilog\nmodule solution;\nendmodule\n```"));
        assert!(p.text.contains("step 2 fails"));
        // Repair targets the same artifact family as the original request.
        assert_eq!(p.spec_hash, build_synthesis_prompt(MINI_SPEC).unwrap().spec_hash);
    }

    #[test]
    fn autoformalization_prompts_carry_the_grammar() {
        let p = build_autoformalization_prompt("a simple arbiter").unwrap();
        assert!(p.text.contains(TLSF_GRAMMAR));
        assert!(p.text.contains("\"tlsf\""));
        assert!(p.text.contains("a simple arbiter"));
        let r =
            build_autoformalize_repair_prompt("a simple arbiter", "MAIN { ???", "1:8: expected")
                .unwrap();
        assert_eq!(r.kind, PromptKind::AutoformalizeRepair);
        assert!(r.text.contains("1:8: expected"));
        assert!(r.text.contains("```tlsf\nMAIN { ???\n```"));
        assert_eq!(r.spec_hash, p.spec_hash);
    }

    #[test]
    fn directnl_prompt_replaces_the_tlsf_framing() {
        let p = build_directnl_prompt("two clients share a printer").unwrap();
        assert!(!p.text.contains("{specification}"));
        assert!(!p.text.contains("Here is the TLSF specification"));
        assert!(p.text.contains("two clients share a printer"));
        assert!(p.text.contains("natural language specification"));
    }

    #[test]
    fn reasoning_levels_round_trip() {
        for level in ReasoningLevel::ALL {
            assert_eq!(level.as_str().parse::<ReasoningLevel>().unwrap(), level);
        }
        assert!("extreme".parse::<ReasoningLevel>().is_err());
    }

    #[test]
    fn scripted_backend_replays_in_attempt_order() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = build_synthesis_prompt(MINI_SPEC).unwrap();
        let stem = format!("synthesis-{}", prompt.spec_hash);
        std::fs::write(dir.path().join(format!("{stem}-0.txt")), "first").unwrap();
        std::fs::write(
            dir.path().join(format!("{stem}-0.json")),
            r#"{"reasoning_tokens": 7, "output_tokens": 3}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join(format!("{stem}-1.txt")), "second").unwrap();

        let backend = ScriptedBackend::new("replay", dir.path());
        let r0 = backend.complete(&prompt, ReasoningLevel::None).unwrap();
        assert_eq!(r0.text, "first");
        assert_eq!(r0.reasoning_tokens, 7);
        assert_eq!(r0.output_tokens, 3);
        let r1 = backend.complete(&prompt, ReasoningLevel::None).unwrap();
        assert_eq!(r1.text, "second");
        assert_eq!(r1.reasoning_tokens, 0); // no sidecar

        // Third request has no fixture.
        let err = backend.complete(&prompt, ReasoningLevel::None).unwrap_err();
        assert!(matches!(err, BackendError::FixtureMissing(p)
            if p.file_name().unwrap().to_str().unwrap() == format!("{stem}-2.txt")));

        // Reset rewinds the attempt counters.
        backend.reset();
        assert_eq!(
            backend.complete(&prompt, ReasoningLevel::None).unwrap().text,
            "first"
        );
    }

    #[test]
    fn scripted_backend_keys_fixtures_by_prompt_kind() {
        let dir = tempfile::tempdir().unwrap();
        let synth = build_synthesis_prompt(MINI_SPEC).unwrap();
        let repair = build_repair_prompt(MINI_SPEC, "module solution; endmodule", "f").unwrap();
        std::fs::write(
            dir.path().join(format!("synthesis-{}-0.txt", synth.spec_hash)),
            "synth",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(format!("repair-{}-0.txt", repair.spec_hash)),
            "fix",
        )
        .unwrap();
        let backend = ScriptedBackend::new("replay", dir.path());
        assert_eq!(backend.complete(&synth, ReasoningLevel::Low).unwrap().text, "synth");
        assert_eq!(backend.complete(&repair, ReasoningLevel::Low).unwrap().text, "fix");
    }

    /// Minimal single-threaded HTTP stub: serves one canned response per
    /// entry, in order, recording each request body.
    fn stub_server(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/complete", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for response in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                let body_start;
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(k) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        body_start = k + 4;
                        break;
                    }
                }
                let head = String::from_utf8_lossy(&buf[..body_start]).into_owned();
                let content_length: usize = head
                    .lines()
                    .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:")
                        .map(|v| v.trim().parse().unwrap()))
                    .unwrap_or(0);
                while buf.len() < body_start + content_length {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                }
                seen.push(head + &String::from_utf8_lossy(&buf[body_start..]));
                stream.write_all(response.as_bytes()).unwrap();
            }
            seen
        });
        (endpoint, handle)
    }

    fn ok_response(json: &str) -> String {
        format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{json}",
            json.len()
        )
    }

    #[test]
    fn http_backend_round_trips_the_json_protocol() {
        let body = r#"{"text":"```verilog\nmodule solution;\nendmodule\n```","reasoning_tokens":42,"output_tokens":9}"#;
        let (endpoint, server) = stub_server(vec![ok_response(body)]);
        std::env::set_var("CEGSYN_TEST_KEY_A", "sk-test");
        let backend = HttpBackend::new("remote", endpoint, "lrm-1", Some("CEGSYN_TEST_KEY_A"));
        let prompt = build_synthesis_prompt(MINI_SPEC).unwrap();
        let resp = backend.complete(&prompt, ReasoningLevel::High).unwrap();
        assert_eq!(resp.reasoning_tokens, 42);
        assert_eq!(resp.output_tokens, 9);
        assert!(resp.text.contains("module solution"));
        let seen = server.join().unwrap();
        assert_eq!(seen.len(), 1);
        assert!(seen[0].contains("authorization: Bearer sk-test")
            || seen[0].contains("Authorization: Bearer sk-test"));
        assert!(seen[0].contains("\"model\":\"lrm-1\""));
        assert!(seen[0].contains("\"reasoning_level\":\"high\""));
    }

    #[test]
    fn http_backend_retries_rate_limits_then_succeeds() {
        let limited =
            "HTTP/1.1 429 Too Many Requests\r\nretry-after: 0\r\ncontent-length: 0\r\nconnection: close\r\n\r\n".to_string();
        let body = r#"{"text":"ok"}"#;
        let (endpoint, server) = stub_server(vec![limited, ok_response(body)]);
        let backend = HttpBackend::new("remote", endpoint, "lrm-1", None)
            .with_backoff_base(Duration::from_millis(1));
        let prompt = build_synthesis_prompt(MINI_SPEC).unwrap();
        let resp = backend.complete(&prompt, ReasoningLevel::None).unwrap();
        assert_eq!(resp.text, "ok");
        assert_eq!(server.join().unwrap().len(), 2);
    }

    #[test]
    fn http_backend_fails_fast_on_auth_errors() {
        let denied =
            "HTTP/1.1 401 Unauthorized\r\ncontent-length: 0\r\nconnection: close\r\n\r\n".to_string();
        let (endpoint, server) = stub_server(vec![denied]);
        let backend = HttpBackend::new("remote", endpoint, "lrm-1", None)
            .with_backoff_base(Duration::from_millis(1));
        let prompt = build_synthesis_prompt(MINI_SPEC).unwrap();
        let err = backend.complete(&prompt, ReasoningLevel::None).unwrap_err();
        assert!(matches!(err, BackendError::Auth(_)));
        // Exactly one request reached the server: no retries on auth.
        assert_eq!(server.join().unwrap().len(), 1);
    }

    #[test]
    fn http_backend_gives_up_after_three_transport_failures() {
        // A listener that closes every connection without answering.
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/complete", listener.local_addr().unwrap());
        let server = std::thread::spawn(move || {
            let mut n = 0;
            while n < 3 {
                let (stream, _) = listener.accept().unwrap();
                drop(stream);
                n += 1;
            }
            n
        });
        let backend = HttpBackend::new("remote", endpoint, "lrm-1", None)
            .with_backoff_base(Duration::from_millis(1));
        let prompt = build_synthesis_prompt(MINI_SPEC).unwrap();
        let err = backend.complete(&prompt, ReasoningLevel::None).unwrap_err();
        assert!(matches!(err, BackendError::Transport(_)));
        assert_eq!(server.join().unwrap(), 3);
    }
}
