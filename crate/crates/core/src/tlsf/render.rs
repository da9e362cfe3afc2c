//! Deterministic pretty-printer. Rendering is a fixpoint: parsing the output
//! and rendering again reproduces the same text byte for byte.

use alloc::string::String;
use alloc::vec::Vec;

use super::{SectionKind, SpecExpr, TlsfSpec};

pub fn render_tlsf(spec: &TlsfSpec) -> String {
    let mut out = String::new();
    out.push_str("INFO {\n");
    out.push_str("  SEMANTICS: ");
    out.push_str(spec.semantics.name());
    out.push_str(";\n");
    out.push_str("}\n");

    if !spec.parameters.is_empty() || !spec.definitions.is_empty() {
        out.push_str("\nGLOBAL {\n");
        if !spec.parameters.is_empty() {
            out.push_str("  PARAMETERS {\n");
            for (name, value) in &spec.parameters {
                push_line(&mut out, 4, &alloc::format!("{name} = {value};"));
            }
            out.push_str("  }\n");
        }
        if !spec.definitions.is_empty() {
            out.push_str("  DEFINITIONS {\n");
            for def in &spec.definitions {
                let mut head = String::new();
                head.push_str(&def.name);
                if !def.params.is_empty() {
                    head.push('(');
                    head.push_str(&def.params.join(", "));
                    head.push(')');
                }
                push_line(
                    &mut out,
                    4,
                    &alloc::format!("{head} = {};", render_expr(&def.body)),
                );
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }

    out.push_str("\nMAIN {\n");
    out.push_str("  INPUTS {\n");
    for decl in &spec.inputs {
        match &decl.width {
            None => push_line(&mut out, 4, &alloc::format!("{};", decl.name)),
            Some(w) => push_line(
                &mut out,
                4,
                &alloc::format!("{}[{}];", decl.name, render_expr(w)),
            ),
        }
    }
    out.push_str("  }\n");
    out.push_str("  OUTPUTS {\n");
    for decl in &spec.outputs {
        match &decl.width {
            None => push_line(&mut out, 4, &alloc::format!("{};", decl.name)),
            Some(w) => push_line(
                &mut out,
                4,
                &alloc::format!("{}[{}];", decl.name, render_expr(w)),
            ),
        }
    }
    out.push_str("  }\n");

    for kind in SectionKind::ALL {
        let exprs = spec.section(kind);
        if exprs.is_empty() {
            continue;
        }
        out.push_str("  ");
        out.push_str(kind.keyword());
        out.push_str(" {\n");
        for expr in exprs {
            push_line(&mut out, 4, &alloc::format!("{};", render_expr(expr)));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn push_line(out: &mut String, indent: usize, line: &str) {
    for _ in 0..indent {
        out.push(' ');
    }
    out.push_str(line);
    out.push('\n');
}

/// Render an expression with explicit parentheses around every binary and
/// range operator, so operator precedence never matters on re-parse.
pub fn render_expr(e: &SpecExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(out: &mut String, e: &SpecExpr) {
    match e {
        SpecExpr::True => out.push_str("true"),
        SpecExpr::False => out.push_str("false"),
        SpecExpr::Num(n) => out.push_str(&alloc::format!("{n}")),
        SpecExpr::Ident(name) => out.push_str(name),
        SpecExpr::Index(name, idx) => {
            out.push_str(name);
            out.push('[');
            write_expr(out, idx);
            out.push(']');
        }
        SpecExpr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            let rendered: Vec<String> = args.iter().map(render_expr).collect();
            out.push_str(&rendered.join(", "));
            out.push(')');
        }
        SpecExpr::Not(x) => write_unary(out, "!", x),
        SpecExpr::Next(x) => write_unary(out, "X ", x),
        SpecExpr::Globally(x) => write_unary(out, "G ", x),
        SpecExpr::Eventually(x) => write_unary(out, "F ", x),
        SpecExpr::And(a, b) => write_binary(out, a, "&&", b),
        SpecExpr::Or(a, b) => write_binary(out, a, "||", b),
        SpecExpr::Implies(a, b) => write_binary(out, a, "->", b),
        SpecExpr::Iff(a, b) => write_binary(out, a, "<->", b),
        SpecExpr::Until(a, b) => write_binary(out, a, "U", b),
        SpecExpr::WeakUntil(a, b) => write_binary(out, a, "W", b),
        SpecExpr::Release(a, b) => write_binary(out, a, "R", b),
        SpecExpr::Add(a, b) => write_binary(out, a, "+", b),
        SpecExpr::Sub(a, b) => write_binary(out, a, "-", b),
        SpecExpr::Mul(a, b) => write_binary(out, a, "*", b),
        SpecExpr::Div(a, b) => write_binary(out, a, "/", b),
        SpecExpr::RangeAnd { var, lo, hi, body } => write_range(out, "&&", var, lo, hi, body),
        SpecExpr::RangeOr { var, lo, hi, body } => write_range(out, "||", var, lo, hi, body),
    }
}

// Binary and range forms emit their own parentheses, unary operators chain,
// and atoms are unambiguous, so no extra grouping is needed here.
fn write_unary(out: &mut String, op: &str, x: &SpecExpr) {
    out.push_str(op);
    write_expr(out, x);
}

fn write_binary(out: &mut String, a: &SpecExpr, op: &str, b: &SpecExpr) {
    out.push('(');
    write_expr(out, a);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    write_expr(out, b);
    out.push(')');
}

fn write_range(out: &mut String, op: &str, var: &str, lo: &SpecExpr, hi: &SpecExpr, body: &SpecExpr) {
    out.push_str(op);
    out.push('[');
    write_expr(out, lo);
    out.push_str(" <= ");
    out.push_str(var);
    out.push_str(" < ");
    write_expr(out, hi);
    out.push_str("] ");
    write_expr(out, body);
}
