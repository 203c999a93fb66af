use crate::program::Pos;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// Keywords and punctuation.
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const KEYWORDS: &[&str] = &[
    "let", "rec", "in", "fun", "if", "then", "else", "match", "with", "promise", "as", "await", "until", "send",
    "run", "interrupt", "into", "return", "when", "process", "signal", "effect", "type", "true", "false", "inl",
    "inr", "mod", "or",
];

/// Longest first.
const SYMBOLS: &[&str] = &[
    "|->", "||", "&&", "->", "<<", ">>", "::", ":=", "<>", "<=", ">=", "|", "=", "<", ">", "+", "-", "*", "/", "^",
    "@", "!", "(", ")", "[", "]", "{", "}", ",", ";", ":", "#", "\\", "↑", "↓",
];

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    'outer: while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            while i < chars.len() {
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, 2);
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, 2);
                    if depth == 0 {
                        continue 'outer;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col, 1);
                }
            }
            return Err(ParseError::new(pos, "unterminated comment"));
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError::new(pos, "integer literal out of range"))?;
            out.push(Token { tok: Tok::Int(n), pos });
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '\'' | '$')) {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Sym(k),
                None => Tok::Ident(text),
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, 1);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(pos, "unterminated string literal")),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, 1);
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err(ParseError::new(Pos { line, col }, "unknown escape sequence")),
                        };
                        s.push(esc);
                        advance(&mut i, &mut line, &mut col, 2);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col, 1);
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        for sym in SYMBOLS {
            let n = sym.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(sym.chars()) {
                advance(&mut i, &mut line, &mut col, n);
                out.push(Token { tok: Tok::Sym(sym), pos });
                continue 'outer;
            }
        }
        return Err(ParseError::new(pos, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

/// Largest `$n` temporary already in the source, so generated ones avoid it.
pub fn max_temporary(tokens: &[Token]) -> usize {
    tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(s) => s.strip_prefix('$').and_then(|d| d.parse::<usize>().ok()),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_handler_syntax() {
        let toks: Vec<Tok> = lex("promise (op x |-> return <<x>>) as p in p'").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks[0], Tok::Sym("promise"));
        assert!(toks.contains(&Tok::Sym("|->")));
        assert!(toks.contains(&Tok::Sym("<<")));
        assert!(toks.contains(&Tok::Ident("p'".into())));
    }

    #[test]
    fn nested_comments_and_positions() {
        let toks = lex("(* a (* b *) *)\n  x").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x".into()));
        assert_eq!(toks[0].pos, Pos { line: 2, col: 3 });
    }
}
