//! Metadata removal: comments and the free-text INFO fields.

use alloc::string::String;
use alloc::vec::Vec;

/// Remove `//` and `/* */` comments and the TITLE / DESCRIPTION fields from
/// specification text. Lines left whitespace-only by a removal are dropped
/// entirely; all other bytes pass through untouched, so input with nothing
/// to strip is returned byte for byte.
pub fn strip_metadata(text: &str) -> String {
    // First pass: remove content, recording for each emitted line whether
    // anything was stripped from it.
    let bytes = text.as_bytes();
    let mut lines: Vec<(String, bool)> = Vec::new();
    let mut line = String::new();
    let mut touched = false;
    let mut i = 0;

    let commit = |line: &mut String, touched: &mut bool, lines: &mut Vec<(String, bool)>| {
        lines.push((core::mem::take(line), core::mem::take(touched)));
    };

    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '\n' => {
                commit(&mut line, &mut touched, &mut lines);
                i += 1;
            }
            '"' => {
                line.push('"');
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\n' {
                        commit(&mut line, &mut touched, &mut lines);
                    } else {
                        line.push(bytes[i] as char);
                    }
                    i += 1;
                }
                if i < bytes.len() {
                    line.push('"');
                    i += 1;
                }
            }
            '/' if bytes.get(i + 1) == Some(&b'/') => {
                touched = true;
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '/' if bytes.get(i + 1) == Some(&b'*') => {
                touched = true;
                i += 2;
                loop {
                    match bytes.get(i) {
                        None => break,
                        Some(b'*') if bytes.get(i + 1) == Some(&b'/') => {
                            i += 2;
                            break;
                        }
                        Some(b'\n') => {
                            commit(&mut line, &mut touched, &mut lines);
                            touched = true;
                            i += 1;
                        }
                        Some(_) => i += 1,
                    }
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric()
                        || bytes[i] == b'_'
                        || bytes[i] == b'\'')
                {
                    i += 1;
                }
                let word = &text[start..i];
                if word == "TITLE" || word == "DESCRIPTION" {
                    touched = true;
                    i = skip_field_value(bytes, i, &mut lines, &mut touched, &mut line);
                } else {
                    line.push_str(word);
                }
            }
            _ => {
                // Multi-byte UTF-8 sequences only occur inside strings or
                // comments in well-formed input; copy raw bytes otherwise.
                line.push(c);
                i += 1;
            }
        }
    }
    if !line.is_empty() || touched {
        commit(&mut line, &mut touched, &mut lines);
    }
    let last_has_newline = text.ends_with('\n');

    // Second pass: drop lines a removal left whitespace-only.
    let mut out = String::new();
    let kept: Vec<&String> = lines
        .iter()
        .filter(|(l, touched)| !(*touched && l.trim().is_empty()))
        .map(|(l, _)| l)
        .collect();
    for (k, l) in kept.iter().enumerate() {
        out.push_str(l);
        if k + 1 < kept.len() || last_has_newline {
            out.push('\n');
        }
    }
    out
}

/// Consume `: "..."` (colon optional, trailing semicolon optional) after a
/// TITLE or DESCRIPTION keyword.
fn skip_field_value(
    bytes: &[u8],
    mut i: usize,
    lines: &mut Vec<(String, bool)>,
    touched: &mut bool,
    line: &mut String,
) -> usize {
    let skip_ws = |i: &mut usize| {
        while *i < bytes.len() && (bytes[*i] == b' ' || bytes[*i] == b'\t') {
            *i += 1;
        }
    };
    skip_ws(&mut i);
    if bytes.get(i) == Some(&b':') {
        i += 1;
    }
    skip_ws(&mut i);
    if bytes.get(i) == Some(&b'"') {
        i += 1;
        while i < bytes.len() && bytes[i] != b'"' {
            if bytes[i] == b'\n' {
                lines.push((core::mem::take(line), true));
                *touched = true;
            }
            i += 1;
        }
        if i < bytes.len() {
            i += 1;
        }
    }
    skip_ws(&mut i);
    if bytes.get(i) == Some(&b';') {
        i += 1;
    }
    i
}
