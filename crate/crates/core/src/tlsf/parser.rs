//! Recursive-descent parser for the TLSF subset.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{lex, Tok, Token};
use super::{Definition, SectionKind, Semantics, SignalDecl, SpecExpr, SyntaxError, TlsfSpec};

/// Parse TLSF source text. Trailing input after the MAIN block is an error.
pub fn parse_tlsf(text: &str) -> Result<TlsfSpec, SyntaxError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let spec = p.spec()?;
    validate(&spec)?;
    Ok(spec)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let (line, col) = self.here();
        SyntaxError {
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&[&format!("`{kw}`")])),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn spec(&mut self) -> Result<TlsfSpec, SyntaxError> {
        let mut semantics = Semantics::Mealy;
        let mut semantics_declared = false;
        if self.at_keyword("INFO") {
            self.bump();
            self.expect(Tok::LBrace, "`{`")?;
            while !matches!(self.peek(), Tok::RBrace) {
                let field = self.ident("INFO field")?;
                self.expect(Tok::Colon, "`:`")?;
                match field.as_str() {
                    "TITLE" | "DESCRIPTION" => match self.peek() {
                        Tok::Str(_) => {
                            self.bump();
                        }
                        _ => return Err(self.error(&["string literal"])),
                    },
                    "SEMANTICS" | "TARGET" => {
                        let s = self.semantics_value()?;
                        if field == "SEMANTICS" {
                            semantics = s;
                            semantics_declared = true;
                        }
                    }
                    _ => {
                        return Err(self.error(&[
                            "`TITLE`",
                            "`DESCRIPTION`",
                            "`SEMANTICS`",
                            "`TARGET`",
                        ]))
                    }
                }
                if matches!(self.peek(), Tok::Semi) {
                    self.bump();
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
        }

        let mut parameters = Vec::new();
        let mut definitions = Vec::new();
        if self.at_keyword("GLOBAL") {
            self.bump();
            self.expect(Tok::LBrace, "`{`")?;
            while !matches!(self.peek(), Tok::RBrace) {
                if self.at_keyword("PARAMETERS") {
                    self.bump();
                    self.expect(Tok::LBrace, "`{`")?;
                    while !matches!(self.peek(), Tok::RBrace) {
                        let name = self.ident("parameter name")?;
                        self.expect(Tok::Assign, "`=`")?;
                        let value = match self.peek().clone() {
                            Tok::Num(n) => {
                                self.bump();
                                n
                            }
                            _ => return Err(self.error(&["a nonnegative integer"])),
                        };
                        self.expect(Tok::Semi, "`;`")?;
                        parameters.push((name, value));
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                } else if self.at_keyword("DEFINITIONS") {
                    self.bump();
                    self.expect(Tok::LBrace, "`{`")?;
                    while !matches!(self.peek(), Tok::RBrace) {
                        let name = self.ident("definition name")?;
                        let mut params = Vec::new();
                        if matches!(self.peek(), Tok::LParen) {
                            self.bump();
                            while !matches!(self.peek(), Tok::RParen) {
                                params.push(self.ident("formal parameter")?);
                                if matches!(self.peek(), Tok::Comma) {
                                    self.bump();
                                }
                            }
                            self.expect(Tok::RParen, "`)`")?;
                        }
                        self.expect(Tok::Assign, "`=`")?;
                        let body = self.expr()?;
                        self.expect(Tok::Semi, "`;`")?;
                        definitions.push(Definition { name, params, body });
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                } else {
                    return Err(self.error(&["`PARAMETERS`", "`DEFINITIONS`"]));
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
        }

        self.keyword("MAIN")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut sections: BTreeMap<SectionKind, Vec<SpecExpr>> = BTreeMap::new();
        while !matches!(self.peek(), Tok::RBrace) {
            let (line, col) = self.here();
            let kw = self.ident("a MAIN section keyword")?;
            match kw.as_str() {
                "INPUTS" => inputs.extend(self.signal_block()?),
                "OUTPUTS" => outputs.extend(self.signal_block()?),
                other => {
                    let kind = section_kind(other).ok_or(SyntaxError {
                        line,
                        col,
                        expected: vec![
                            "`INPUTS`".to_string(),
                            "`OUTPUTS`".to_string(),
                            "a semantic section keyword".to_string(),
                        ],
                        found: format!("`{other}`"),
                    })?;
                    if sections.contains_key(&kind) {
                        return Err(SyntaxError {
                            line,
                            col,
                            expected: vec!["a unique section kind".to_string()],
                            found: format!("duplicate `{other}` section"),
                        });
                    }
                    let exprs = self.expr_block()?;
                    sections.insert(kind, exprs);
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.error(&["end of input"]));
        }
        Ok(TlsfSpec {
            parameters,
            definitions,
            inputs,
            outputs,
            sections,
            semantics,
            semantics_declared,
        })
    }

    fn semantics_value(&mut self) -> Result<Semantics, SyntaxError> {
        let base = self.ident("`Mealy` or `Moore`")?;
        let strict = if matches!(self.peek(), Tok::Comma) {
            self.bump();
            self.keyword("Strict")?;
            true
        } else {
            false
        };
        match (base.as_str(), strict) {
            ("Mealy", false) => Ok(Semantics::Mealy),
            ("Moore", false) => Ok(Semantics::Moore),
            ("Mealy", true) => Ok(Semantics::MealyStrict),
            ("Moore", true) => Ok(Semantics::MooreStrict),
            _ => Err(self.error(&["`Mealy`", "`Moore`"])),
        }
    }

    fn signal_block(&mut self) -> Result<Vec<SignalDecl>, SyntaxError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::RBrace) {
            let name = self.ident("signal name")?;
            let width = if matches!(self.peek(), Tok::LBracket) {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RBracket, "`]`")?;
                Some(e)
            } else {
                None
            };
            self.expect(Tok::Semi, "`;`")?;
            out.push(SignalDecl { name, width });
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    fn expr_block(&mut self) -> Result<Vec<SpecExpr>, SyntaxError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::RBrace) {
            let e = self.expr()?;
            self.expect(Tok::Semi, "`;`")?;
            out.push(e);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    // Precedence, loosest to tightest:
    //   <->  |  ->  |  ||  |  &&  |  U/W/R (right)  |  unary ! X G F
    //   |  + -  |  * /  |  primary
    fn expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        self.iff_expr()
    }

    fn iff_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let mut lhs = self.imp_expr()?;
        while matches!(self.peek(), Tok::Iff) {
            self.bump();
            let rhs = self.imp_expr()?;
            lhs = SpecExpr::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn imp_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let lhs = self.or_expr()?;
        if matches!(self.peek(), Tok::Arrow) {
            self.bump();
            let rhs = self.imp_expr()?;
            Ok(SpecExpr::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while matches!(self.peek(), Tok::OrOr) && !matches!(self.peek2(), Tok::LBracket) {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = SpecExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let mut lhs = self.until_expr()?;
        while matches!(self.peek(), Tok::AndAnd) && !matches!(self.peek2(), Tok::LBracket) {
            self.bump();
            let rhs = self.until_expr()?;
            lhs = SpecExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn until_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let lhs = self.unary_expr()?;
        let op = match self.peek() {
            Tok::Ident(s) if s == "U" || s == "W" || s == "R" => s.clone(),
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.until_expr()?;
        Ok(match op.as_str() {
            "U" => SpecExpr::Until(Box::new(lhs), Box::new(rhs)),
            "W" => SpecExpr::WeakUntil(Box::new(lhs), Box::new(rhs)),
            _ => SpecExpr::Release(Box::new(lhs), Box::new(rhs)),
        })
    }

    fn unary_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(SpecExpr::Not(Box::new(self.unary_expr()?)))
            }
            Tok::Ident(s) if s == "X" && starts_operand(self.peek2()) => {
                self.bump();
                Ok(SpecExpr::Next(Box::new(self.unary_expr()?)))
            }
            Tok::Ident(s) if s == "G" && starts_operand(self.peek2()) => {
                self.bump();
                Ok(SpecExpr::Globally(Box::new(self.unary_expr()?)))
            }
            Tok::Ident(s) if s == "F" && starts_operand(self.peek2()) => {
                self.bump();
                Ok(SpecExpr::Eventually(Box::new(self.unary_expr()?)))
            }
            Tok::AndAnd | Tok::OrOr if matches!(self.peek2(), Tok::LBracket) => self.range_expr(),
            _ => self.add_expr(),
        }
    }

    fn range_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let is_and = matches!(self.peek(), Tok::AndAnd);
        self.bump();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.add_expr()?;
        self.expect(Tok::Le, "`<=`")?;
        let var = self.ident("range index variable")?;
        match self.peek() {
            Tok::Lt => {
                self.bump();
            }
            _ => return Err(self.error(&["`<`"])),
        }
        let hi = self.add_expr()?;
        self.expect(Tok::RBracket, "`]`")?;
        let body = self.unary_expr()?;
        Ok(if is_and {
            SpecExpr::RangeAnd {
                var,
                lo: Box::new(lo),
                hi: Box::new(hi),
                body: Box::new(body),
            }
        } else {
            SpecExpr::RangeOr {
                var,
                lo: Box::new(lo),
                hi: Box::new(hi),
                body: Box::new(body),
            }
        })
    }

    fn add_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let mut lhs = self.mul_expr()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.mul_expr()?;
                    lhs = SpecExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.mul_expr()?;
                    lhs = SpecExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn mul_expr(&mut self) -> Result<SpecExpr, SyntaxError> {
        let mut lhs = self.primary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.primary()?;
                    lhs = SpecExpr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.primary()?;
                    lhs = SpecExpr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn primary(&mut self) -> Result<SpecExpr, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(SpecExpr::Num(n))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(SpecExpr::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(SpecExpr::False)
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LBracket => {
                        self.bump();
                        let idx = self.expr()?;
                        self.expect(Tok::RBracket, "`]`")?;
                        Ok(SpecExpr::Index(name, Box::new(idx)))
                    }
                    Tok::LParen => {
                        self.bump();
                        let mut args = Vec::new();
                        while !matches!(self.peek(), Tok::RParen) {
                            args.push(self.expr()?);
                            if matches!(self.peek(), Tok::Comma) {
                                self.bump();
                            }
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(SpecExpr::Call(name, args))
                    }
                    _ => Ok(SpecExpr::Ident(name)),
                }
            }
            _ => Err(self.error(&["an expression"])),
        }
    }
}

/// Whether a token can begin an operand, used to tell the temporal prefix
/// operators X/G/F (which are reserved in the subset) from binary contexts.
fn starts_operand(tok: &Tok) -> bool {
    matches!(
        tok,
        Tok::Ident(_) | Tok::Num(_) | Tok::LParen | Tok::Bang | Tok::AndAnd | Tok::OrOr
    )
}

fn section_kind(kw: &str) -> Option<SectionKind> {
    Some(match kw {
        "INITIALLY" => SectionKind::Initially,
        "PRESET" => SectionKind::Preset,
        "REQUIRE" | "REQUIREMENTS" => SectionKind::Require,
        "ASSERT" | "INVARIANTS" => SectionKind::Assert,
        "ASSUME" | "ASSUMPTIONS" => SectionKind::Assume,
        "GUARANTEE" | "GUARANTEES" => SectionKind::Guarantee,
        _ => return None,
    })
}

/// Post-parse checks: unique declarations and every identifier resolvable to
/// a signal, parameter, definition, or in-scope range variable.
fn validate(spec: &TlsfSpec) -> Result<(), SyntaxError> {
    let mut declared: BTreeSet<&str> = BTreeSet::new();
    for (name, value) in &spec.parameters {
        if *value < 0 {
            return Err(semantic_error(format!(
                "negative value for parameter `{name}`"
            )));
        }
        if !declared.insert(name) {
            return Err(semantic_error(format!("duplicate declaration of `{name}`")));
        }
    }
    for d in &spec.definitions {
        if !declared.insert(&d.name) {
            return Err(semantic_error(format!(
                "duplicate declaration of `{}`",
                d.name
            )));
        }
    }
    for s in spec.inputs.iter().chain(spec.outputs.iter()) {
        if !declared.insert(&s.name) {
            return Err(semantic_error(format!(
                "duplicate declaration of `{}`",
                s.name
            )));
        }
    }
    for d in &spec.definitions {
        let mut scope: Vec<&str> = d.params.iter().map(String::as_str).collect();
        check_idents(&d.body, &declared, &mut scope)?;
    }
    for exprs in spec.sections.values() {
        for e in exprs {
            check_idents(e, &declared, &mut Vec::new())?;
        }
    }
    for s in spec.inputs.iter().chain(spec.outputs.iter()) {
        if let Some(w) = &s.width {
            check_idents(w, &declared, &mut Vec::new())?;
        }
    }
    Ok(())
}

fn semantic_error(found: String) -> SyntaxError {
    SyntaxError {
        line: 0,
        col: 0,
        expected: vec!["a well-formed specification".to_string()],
        found,
    }
}

fn check_idents<'a>(
    e: &'a SpecExpr,
    declared: &BTreeSet<&str>,
    scope: &mut Vec<&'a str>,
) -> Result<(), SyntaxError> {
    match e {
        SpecExpr::True | SpecExpr::False | SpecExpr::Num(_) => Ok(()),
        SpecExpr::Ident(name) => {
            if declared.contains(name.as_str()) || scope.contains(&name.as_str()) {
                Ok(())
            } else {
                Err(semantic_error(format!("undeclared identifier `{name}`")))
            }
        }
        SpecExpr::Index(name, idx) => {
            if !declared.contains(name.as_str()) {
                return Err(semantic_error(format!("undeclared signal `{name}`")));
            }
            check_idents(idx, declared, scope)
        }
        SpecExpr::Call(name, args) => {
            if !declared.contains(name.as_str()) {
                return Err(semantic_error(format!("undeclared definition `{name}`")));
            }
            for a in args {
                check_idents(a, declared, scope)?;
            }
            Ok(())
        }
        SpecExpr::Not(x) | SpecExpr::Next(x) | SpecExpr::Globally(x) | SpecExpr::Eventually(x) => {
            check_idents(x, declared, scope)
        }
        SpecExpr::And(a, b)
        | SpecExpr::Or(a, b)
        | SpecExpr::Implies(a, b)
        | SpecExpr::Iff(a, b)
        | SpecExpr::Until(a, b)
        | SpecExpr::WeakUntil(a, b)
        | SpecExpr::Release(a, b)
        | SpecExpr::Add(a, b)
        | SpecExpr::Sub(a, b)
        | SpecExpr::Mul(a, b)
        | SpecExpr::Div(a, b) => {
            check_idents(a, declared, scope)?;
            check_idents(b, declared, scope)
        }
        SpecExpr::RangeAnd { var, lo, hi, body } | SpecExpr::RangeOr { var, lo, hi, body } => {
            check_idents(lo, declared, scope)?;
            check_idents(hi, declared, scope)?;
            scope.push(var);
            let r = check_idents(body, declared, scope);
            scope.pop();
            r
        }
    }
}
