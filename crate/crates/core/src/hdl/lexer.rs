// SPDX-License-Identifier: Apache-2.0

use super::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Integer literal with an optional explicit size.
    Number {
        value: u128,
        size: Option<u32>,
    },
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

// Longest first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "'{", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~&", "~|", "~^", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "#", "@", "=", "<", ">", "+",
    "-", "*", "&", "|", "^", "~", "!", "?",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if bytes[*i] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if text[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if text[i..].starts_with("/*") {
            let (l0, c0) = (line, col);
            match text[i + 2..].find("*/") {
                Some(end) => advance(&mut i, &mut line, &mut col, end + 4),
                None => return Err(ParseError::syntax(l0, c0, "unterminated block comment")),
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'\'' && i + 1 < bytes.len() && bytes[i + 1] != b'{') {
            let (tok, len) = lex_number(&text[i..]).map_err(|m| ParseError::syntax(tl, tc, m))?;
            advance(&mut i, &mut line, &mut col, len);
            out.push(Token { tok, line: tl, column: tc });
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.len());
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    column: tc,
                });
            }
            None => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(tl, tc, format!("unexpected character '{ch}'")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Lexes `123`, `8'hA5`, `'b1010`, `4'd9`; returns the token and its byte length.
fn lex_number(s: &str) -> Result<(Tok, usize), String> {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
        i += 1;
    }
    let lead: String = s[..i].chars().filter(|c| *c != '_').collect();
    if i < b.len() && b[i] == b'\'' {
        let size = if lead.is_empty() {
            None
        } else {
            let n: u32 = lead.parse().map_err(|_| format!("bad literal size '{lead}'"))?;
            if n == 0 || n > 128 {
                return Err(format!("literal size {n} outside 1..=128"));
            }
            Some(n)
        };
        i += 1;
        let radix = match b.get(i).map(|c| c.to_ascii_lowercase()) {
            Some(b'h') => 16,
            Some(b'd') => 10,
            Some(b'b') => 2,
            Some(b'o') => 8,
            _ => return Err("expected base letter after '".into()),
        };
        i += 1;
        let start = i;
        while i < b.len() && (b[i].is_ascii_hexdigit() || b[i] == b'_') {
            i += 1;
        }
        let digits: String = s[start..i].chars().filter(|c| *c != '_').collect();
        if digits.is_empty() {
            return Err("literal has no digits".into());
        }
        let value = u128::from_str_radix(&digits, radix).map_err(|_| format!("bad digits '{digits}' for base {radix}"))?;
        Ok((Tok::Number { value, size }, i))
    } else {
        let value: u128 = lead.parse().map_err(|_| format!("bad integer '{lead}'"))?;
        Ok((Tok::Number { value, size: None }, i))
    }
}
