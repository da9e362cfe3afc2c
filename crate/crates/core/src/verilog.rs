//! Shallow handling of synthesizer-emitted Verilog: extract the first
//! fenced code block, tokenize the module header and ANSI port list, and
//! lint ports against an LTL problem. All elaboration beyond the port list
//! is delegated to the external synthesis tool.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ltl::LtlProblem;

/// Which side of the game the module claims to implement. A module named
/// `solution` realizes the specification; one named `environment` plays the
/// adversary with inputs and outputs swapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Solution,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub direction: Direction,
    pub name: String,
    /// Raw `[msb:lsb]` bound expressions; `None` for scalar ports.
    pub range: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerilogModule {
    /// Verbatim text of the extracted code block.
    pub source: String,
    pub name: String,
    pub role: Role,
    pub ports: Vec<Port>,
    pub has_clk: bool,
    /// `#(parameter name = default)` declarations in header order.
    pub parameters: Vec<(String, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    /// No fenced ```verilog block in the response.
    NoCodeBlock,
    /// The module is missing or not named `solution` or `environment`.
    BadModuleName(String),
    /// No input port named `clk`.
    MissingClock,
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::NoCodeBlock => {
                write!(f, "response contains no fenced verilog code block")
            }
            ExtractError::BadModuleName(n) => write!(
                f,
                "module must be named `solution` or `environment`, found `{n}`"
            ),
            ExtractError::MissingClock => {
                write!(f, "module has no input named `clk`")
            }
        }
    }
}

/// Pull the first ```verilog fenced block out of a model response and read
/// its module header with a shallow tokenizer.
pub fn extract_verilog(response: &str) -> Result<VerilogModule, ExtractError> {
    let source = fenced_block(response).ok_or(ExtractError::NoCodeBlock)?;
    parse_module(&source)
}

fn fenced_block(response: &str) -> Option<String> {
    let mut rest = response;
    loop {
        let fence = rest.find("```")?;
        let after = &rest[fence + 3..];
        let line_end = after.find('\n')?;
        let tag = after[..line_end].trim();
        let body_start = line_end + 1;
        let close = after[body_start..].find("```")?;
        let body = &after[body_start..body_start + close];
        if tag.eq_ignore_ascii_case("verilog") {
            return Some(body.to_string());
        }
        rest = &after[body_start + close + 3..];
    }
}

/// Parse the module header out of stripped source text.
pub fn parse_module(source: &str) -> Result<VerilogModule, ExtractError> {
    let code = strip_verilog_comments(source);
    let module_kw = find_keyword(&code, "module")
        .ok_or_else(|| ExtractError::BadModuleName("<none>".to_string()))?;
    let mut rest = &code[module_kw + "module".len()..];

    let name = take_identifier(&mut rest)
        .ok_or_else(|| ExtractError::BadModuleName("<none>".to_string()))?;
    let role = match name.as_str() {
        "solution" => Role::Solution,
        "environment" => Role::Environment,
        other => return Err(ExtractError::BadModuleName(other.to_string())),
    };

    rest = rest.trim_start();
    let mut parameters = Vec::new();
    if let Some(stripped) = rest.strip_prefix("#") {
        let inner = balanced_parens(stripped.trim_start())
            .ok_or_else(|| ExtractError::BadModuleName(name.clone()))?;
        parameters = parse_parameters(inner.0);
        rest = inner.1;
    }

    rest = rest.trim_start();
    let (port_text, _) =
        balanced_parens(rest).ok_or_else(|| ExtractError::BadModuleName(name.clone()))?;
    let ports = parse_ports(port_text);

    let has_clk = ports
        .iter()
        .any(|p| p.direction == Direction::Input && p.name == "clk" && p.range.is_none());
    if !has_clk {
        return Err(ExtractError::MissingClock);
    }

    Ok(VerilogModule {
        source: source.to_string(),
        name,
        role,
        ports,
        has_clk,
        parameters,
    })
}

fn strip_verilog_comments(code: &str) -> String {
    let bytes = code.as_bytes();
    let mut out = String::with_capacity(code.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if bytes[i] == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < bytes.len() && !(bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/')) {
                i += 1;
            }
            i = (i + 2).min(bytes.len());
            out.push(' ');
        } else {
            out.push(bytes[i] as char);
            i += 1;
        }
    }
    out
}

/// Find `word` at an identifier boundary.
fn find_keyword(code: &str, word: &str) -> Option<usize> {
    let bytes = code.as_bytes();
    let mut from = 0;
    while let Some(k) = code[from..].find(word) {
        let at = from + k;
        let before_ok = at == 0 || !is_ident_char(bytes[at - 1]);
        let after = at + word.len();
        let after_ok = after >= bytes.len() || !is_ident_char(bytes[after]);
        if before_ok && after_ok {
            return Some(at);
        }
        from = at + word.len();
    }
    None
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

fn take_identifier(rest: &mut &str) -> Option<String> {
    let trimmed = rest.trim_start();
    let end = trimmed
        .find(|c: char| !is_ident_char(c as u8))
        .unwrap_or(trimmed.len());
    if end == 0 {
        return None;
    }
    let name = trimmed[..end].to_string();
    *rest = &trimmed[end..];
    Some(name)
}

/// Return the text inside a leading `( ... )` group and the remainder.
fn balanced_parens(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if !s.starts_with('(') {
        return None;
    }
    let mut depth = 0usize;
    for (k, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&s[1..k], &s[k + 1..]));
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_parameters(text: &str) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    for item in split_top_level(text) {
        let Some((lhs, rhs)) = item.split_once('=') else {
            continue;
        };
        let name = lhs
            .split_whitespace()
            .filter(|w| !matches!(*w, "parameter" | "integer" | "signed"))
            .next_back();
        if let (Some(name), Ok(value)) = (name, rhs.trim().parse::<i64>()) {
            out.push((name.to_string(), value));
        }
    }
    out
}

fn parse_ports(text: &str) -> Vec<Port> {
    let mut ports = Vec::new();
    let mut direction = None;
    for item in split_top_level(text) {
        let mut range = None;
        let mut name = None;
        let mut rest = item;
        while !rest.trim_start().is_empty() {
            let trimmed = rest.trim_start();
            if let Some(after) = trimmed.strip_prefix('[') {
                if let Some(close) = after.find(']') {
                    if let Some((msb, lsb)) = after[..close].split_once(':') {
                        range = Some((msb.trim().to_string(), lsb.trim().to_string()));
                    }
                    rest = &after[close + 1..];
                    continue;
                }
            }
            let mut cursor = trimmed;
            match take_identifier(&mut cursor) {
                Some(word) => {
                    match word.as_str() {
                        "input" => direction = Some(Direction::Input),
                        "output" => direction = Some(Direction::Output),
                        "wire" | "reg" | "logic" | "signed" | "integer" => {}
                        _ => name = Some(word),
                    }
                    rest = cursor;
                }
                None => {
                    rest = &trimmed[1..];
                }
            }
        }
        if let (Some(direction), Some(name)) = (direction, name) {
            ports.push(Port { direction, name, range });
        }
    }
    ports
}

fn split_top_level(text: &str) -> Vec<&str> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (k, c) in text.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                items.push(&text[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    items.push(&text[start..]);
    items.retain(|s| !s.trim().is_empty());
    items
}

impl Port {
    /// Bit width under the given parameter bindings; scalar ports are 1.
    pub fn width(&self, params: &BTreeMap<String, i64>) -> Result<usize, String> {
        match &self.range {
            None => Ok(1),
            Some((msb, lsb)) => {
                let hi = eval_arith(msb, params)?;
                let lo = eval_arith(lsb, params)?;
                if lo > hi {
                    return Err(format!("descending range [{msb}:{lsb}] unsupported"));
                }
                Ok((hi - lo + 1) as usize)
            }
        }
    }
}

/// Evaluate a constant expression over `+ - * /`, parentheses, numbers, and
/// parameter names.
fn eval_arith(expr: &str, params: &BTreeMap<String, i64>) -> Result<i64, String> {
    let mut rest = expr.trim();
    let v = eval_sum(&mut rest, params)?;
    if !rest.trim().is_empty() {
        return Err(format!("trailing text in expression `{expr}`"));
    }
    Ok(v)
}

fn eval_sum(rest: &mut &str, params: &BTreeMap<String, i64>) -> Result<i64, String> {
    let mut acc = eval_product(rest, params)?;
    loop {
        let t = rest.trim_start();
        if let Some(r) = t.strip_prefix('+') {
            *rest = r;
            acc += eval_product(rest, params)?;
        } else if let Some(r) = t.strip_prefix('-') {
            *rest = r;
            acc -= eval_product(rest, params)?;
        } else {
            *rest = t;
            return Ok(acc);
        }
    }
}

fn eval_product(rest: &mut &str, params: &BTreeMap<String, i64>) -> Result<i64, String> {
    let mut acc = eval_atom(rest, params)?;
    loop {
        let t = rest.trim_start();
        if let Some(r) = t.strip_prefix('*') {
            *rest = r;
            acc *= eval_atom(rest, params)?;
        } else if let Some(r) = t.strip_prefix('/') {
            *rest = r;
            let d = eval_atom(rest, params)?;
            if d == 0 {
                return Err("division by zero".to_string());
            }
            acc /= d;
        } else {
            *rest = t;
            return Ok(acc);
        }
    }
}

fn eval_atom(rest: &mut &str, params: &BTreeMap<String, i64>) -> Result<i64, String> {
    let t = rest.trim_start();
    if let Some(r) = t.strip_prefix('(') {
        let mut inner = r;
        let v = eval_sum(&mut inner, params)?;
        let inner = inner.trim_start();
        let Some(r) = inner.strip_prefix(')') else {
            return Err("unbalanced parentheses".to_string());
        };
        *rest = r;
        return Ok(v);
    }
    if let Some(r) = t.strip_prefix('-') {
        *rest = r;
        return Ok(-eval_atom(rest, params)?);
    }
    let end = t
        .find(|c: char| !is_ident_char(c as u8))
        .unwrap_or(t.len());
    if end == 0 {
        return Err(format!("expected a number or name, found `{t}`"));
    }
    let word = &t[..end];
    *rest = &t[end..];
    if let Ok(n) = word.parse::<i64>() {
        return Ok(n);
    }
    params
        .get(word)
        .copied()
        .ok_or_else(|| format!("unknown parameter `{word}`"))
}

/// A single discrepancy between the module's ports and the specification's
/// signals. Issues are data, not errors: an empty list means conformant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortIssue {
    /// The specification expects this signal but the module has no port.
    MissingPort { name: String },
    /// The module declares a port no specification signal accounts for.
    ExtraPort { name: String },
    WidthMismatch { name: String, expected: usize, got: usize },
    /// The port exists but faces the wrong way for the module's role.
    RoleMismatch { name: String },
    /// The port's width expression could not be evaluated.
    BadWidth { name: String, reason: String },
}

impl fmt::Display for PortIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortIssue::MissingPort { name } => write!(f, "missing port `{name}`"),
            PortIssue::ExtraPort { name } => write!(f, "unexpected port `{name}`"),
            PortIssue::WidthMismatch { name, expected, got } => {
                write!(f, "port `{name}` has width {got}, expected {expected}")
            }
            PortIssue::RoleMismatch { name } => {
                write!(f, "port `{name}` has the wrong direction for this module's role")
            }
            PortIssue::BadWidth { name, reason } => {
                write!(f, "port `{name}` width: {reason}")
            }
        }
    }
}

/// Check the module's ports against the problem's signals under the
/// module's claimed role, evaluating widths with its parameter defaults.
pub fn lint_ports(m: &VerilogModule, p: &LtlProblem) -> Vec<PortIssue> {
    let params = m.parameters.iter().cloned().collect();
    lint_ports_bound(m, p, &params)
}

/// Like [`lint_ports`] with explicit parameter bindings, for instantiated
/// parametric modules.
pub fn lint_ports_bound(
    m: &VerilogModule,
    p: &LtlProblem,
    params: &BTreeMap<String, i64>,
) -> Vec<PortIssue> {
    // A Solution consumes the problem's inputs; an Environment produces them.
    let (expect_in, expect_out) = match m.role {
        Role::Solution => (&p.inputs, &p.outputs),
        Role::Environment => (&p.outputs, &p.inputs),
    };
    let expected_in = group_signals(expect_in);
    let expected_out = group_signals(expect_out);

    let mut issues = Vec::new();
    let mut seen = alloc::collections::BTreeSet::new();
    for port in &m.ports {
        if port.name == "clk" && port.direction == Direction::Input {
            continue;
        }
        seen.insert(port.name.clone());
        let (same_side, other_side) = match port.direction {
            Direction::Input => (&expected_in, &expected_out),
            Direction::Output => (&expected_out, &expected_in),
        };
        match (same_side.get(&port.name), other_side.get(&port.name)) {
            (Some(expected), _) => match port.width(params) {
                Ok(got) if got == *expected => {}
                Ok(got) => issues.push(PortIssue::WidthMismatch {
                    name: port.name.clone(),
                    expected: *expected,
                    got,
                }),
                Err(reason) => issues.push(PortIssue::BadWidth {
                    name: port.name.clone(),
                    reason,
                }),
            },
            (None, Some(_)) => issues.push(PortIssue::RoleMismatch {
                name: port.name.clone(),
            }),
            (None, None) => issues.push(PortIssue::ExtraPort {
                name: port.name.clone(),
            }),
        }
    }
    for name in expected_in.keys().chain(expected_out.keys()) {
        if !seen.contains(name) {
            issues.push(PortIssue::MissingPort { name: name.clone() });
        }
    }
    issues
}

/// Fold ground atoms back into named signals: atoms `base_0 .. base_{w-1}`
/// with contiguous indices from zero form a vector `base` of width `w`;
/// everything else stays scalar.
fn group_signals(atoms: &[String]) -> BTreeMap<String, usize> {
    let mut groups: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut scalars = Vec::new();
    for atom in atoms {
        match atom.rsplit_once('_') {
            Some((base, idx)) if !base.is_empty() && idx.parse::<u32>().is_ok() => {
                groups
                    .entry(base.to_string())
                    .or_default()
                    .push(idx.parse().unwrap());
            }
            _ => scalars.push(atom.clone()),
        }
    }
    let mut out = BTreeMap::new();
    for (base, mut indices) in groups {
        indices.sort_unstable();
        indices.dedup();
        let contiguous = indices
            .iter()
            .enumerate()
            .all(|(k, v)| *v == k as u32);
        if contiguous {
            out.insert(base, indices.len());
        } else {
            for idx in indices {
                out.insert(format!("{base}_{idx}"), 1);
            }
        }
    }
    for s in scalars {
        out.insert(s, 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::LtlProblem;
    use crate::tlsf::{expand_semantics, instantiate, parse_tlsf};
    use alloc::vec;

    const DETECTOR_SOLUTION: &str = "module solution (
    input clk,
    input [26:0] finished,
    output allFinished
);
    reg [26:0] seen = 27'b0;
    wire [26:0] next;
    wire complete;
    assign next = seen | finished;
    assign complete = &next;
    assign allFinished = complete;
    always @(posedge clk) begin
        if (complete) seen <= 27'b0;
        else seen <= next;
    end
endmodule
";

    fn detector_problem(n: i64) -> LtlProblem {
        let spec = parse_tlsf(
            "GLOBAL { PARAMETERS { n = 27; } }
             MAIN {
               INPUTS { finished[n]; }
               OUTPUTS { allFinished; }
               ASSERT { &&[0<=i<n] (allFinished -> X (!allFinished W finished[i])); }
             }",
        )
        .unwrap();
        let bindings = [("n".to_string(), n)].into_iter().collect();
        expand_semantics(&instantiate(&spec, &bindings).unwrap())
    }

    #[test]
    fn extract_first_verilog_block() {
        let response = alloc::format!(
            "Some prose first.\n\n```text\nnot this one\n```\n\n```verilog\n{DETECTOR_SOLUTION}```\nTrailing commentary.\n"
        );
        let m = extract_verilog(&response).unwrap();
        assert_eq!(m.name, "solution");
        assert_eq!(m.role, Role::Solution);
        assert!(m.has_clk);
        assert_eq!(m.source, DETECTOR_SOLUTION);
        assert_eq!(
            m.ports,
            vec![
                Port {
                    direction: Direction::Input,
                    name: "clk".to_string(),
                    range: None
                },
                Port {
                    direction: Direction::Input,
                    name: "finished".to_string(),
                    range: Some(("26".to_string(), "0".to_string()))
                },
                Port {
                    direction: Direction::Output,
                    name: "allFinished".to_string(),
                    range: None
                },
            ]
        );
    }

    #[test]
    fn extract_errors() {
        assert_eq!(
            extract_verilog("No code here, just an explanation."),
            Err(ExtractError::NoCodeBlock)
        );
        assert_eq!(
            extract_verilog("```verilog\nmodule adder (input clk, input a, output b);\nendmodule\n```"),
            Err(ExtractError::BadModuleName("adder".to_string()))
        );
        assert_eq!(
            extract_verilog("```verilog\nmodule solution (input a, output b);\nendmodule\n```"),
            Err(ExtractError::MissingClock)
        );
    }

    #[test]
    fn environment_role_and_parameters() {
        let m = parse_module(
            "module environment #(parameter n = 4) (
                 input clk,
                 input allFinished,
                 output reg [n-1:0] finished
             );
             endmodule",
        )
        .unwrap();
        assert_eq!(m.role, Role::Environment);
        assert_eq!(m.parameters, vec![("n".to_string(), 4)]);
        let finished = m.ports.iter().find(|p| p.name == "finished").unwrap();
        assert_eq!(
            finished.range,
            Some(("n-1".to_string(), "0".to_string()))
        );
        let params = m.parameters.iter().cloned().collect();
        assert_eq!(finished.width(&params), Ok(4));
    }

    #[test]
    fn width_arithmetic() {
        let params: BTreeMap<String, i64> =
            [("n".to_string(), 5)].into_iter().collect();
        let port = |msb: &str, lsb: &str| Port {
            direction: Direction::Input,
            name: "p".to_string(),
            range: Some((msb.to_string(), lsb.to_string())),
        };
        assert_eq!(port("2*n - 1", "0").width(&params), Ok(10));
        assert_eq!(port("(n + 3) / 2", "1").width(&params), Ok(4));
        assert!(port("m - 1", "0").width(&params).is_err());
        assert!(port("0", "3").width(&params).is_err());
    }

    #[test]
    fn lint_accepts_conformant_solution() {
        let m = parse_module(DETECTOR_SOLUTION).unwrap();
        assert_eq!(lint_ports(&m, &detector_problem(27)), vec![]);
    }

    #[test]
    fn lint_flags_missing_port_and_width() {
        let m = parse_module(
            "module solution (input clk, input [12:0] finished);\nendmodule",
        )
        .unwrap();
        let issues = lint_ports(&m, &detector_problem(27));
        assert!(issues.contains(&PortIssue::WidthMismatch {
            name: "finished".to_string(),
            expected: 27,
            got: 13
        }));
        assert!(issues.contains(&PortIssue::MissingPort {
            name: "allFinished".to_string()
        }));
        assert_eq!(issues.len(), 2);
    }

    #[test]
    fn lint_environment_swaps_directions() {
        // Correct environment interface: drives the spec's inputs.
        let good = parse_module(
            "module environment (input clk, input allFinished, output [26:0] finished);\nendmodule",
        )
        .unwrap();
        assert_eq!(lint_ports(&good, &detector_problem(27)), vec![]);

        // Solution-shaped interface under the environment role is all wrong.
        let swapped = parse_module(
            "module environment (input clk, input [26:0] finished, output allFinished);\nendmodule",
        )
        .unwrap();
        let issues = lint_ports(&swapped, &detector_problem(27));
        assert!(issues.contains(&PortIssue::RoleMismatch {
            name: "finished".to_string()
        }));
        assert!(issues.contains(&PortIssue::RoleMismatch {
            name: "allFinished".to_string()
        }));
    }

    #[test]
    fn lint_extra_port() {
        let m = parse_module(
            "module solution (input clk, input [26:0] finished, output allFinished, output debug);\nendmodule",
        )
        .unwrap();
        assert_eq!(
            lint_ports(&m, &detector_problem(27)),
            vec![PortIssue::ExtraPort {
                name: "debug".to_string()
            }]
        );
    }

    #[test]
    fn lint_parametric_module_with_bindings() {
        let m = parse_module(
            "module solution #(parameter n = 2) (input clk, input [n-1:0] finished, output allFinished);\nendmodule",
        )
        .unwrap();
        let p3 = detector_problem(3);
        let bound = [("n".to_string(), 3)].into_iter().collect();
        assert_eq!(lint_ports_bound(&m, &p3, &bound), vec![]);
        // Defaults (n = 2) no longer match the instantiated width.
        assert_eq!(
            lint_ports(&m, &p3),
            vec![PortIssue::WidthMismatch {
                name: "finished".to_string(),
                expected: 3,
                got: 2
            }]
        );
    }

    #[test]
    fn group_signals_folds_vectors() {
        let atoms: Vec<String> = ["finished_0", "finished_1", "finished_2", "go", "x_0", "x_2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let grouped = group_signals(&atoms);
        assert_eq!(grouped.get("finished"), Some(&3));
        assert_eq!(grouped.get("go"), Some(&1));
        // Non-contiguous indices stay scalar.
        assert_eq!(grouped.get("x_0"), Some(&1));
        assert_eq!(grouped.get("x_2"), Some(&1));
        assert_eq!(grouped.len(), 4);
    }

    #[test]
    fn comments_do_not_confuse_the_header() {
        let m = parse_module(
            "// a /* tricky */ header\nmodule /* name soon */ solution (\n  input clk, // clock\n  output done\n);\nendmodule",
        )
        .unwrap();
        assert_eq!(m.name, "solution");
        assert_eq!(m.ports.len(), 2);
    }
}
