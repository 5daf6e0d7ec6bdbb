//! Tokenizer and shared expression parsing for the automaton and formula
//! surface syntaxes. Errors carry line:column positions.

use crate::logic::{CmpOp, GuardExpr, Int, LinearTerm, ThetaAtom, XAtom};
use std::fmt;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(Int),
    // punctuation and operators
    LParen,
    RParen,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Amp,
    Pipe,
    Bang,
    Arrow,   // ->
    Eq,      // =
    Lt,
    Le,
    Gt,
    Ge,
    ModLe(Int), // =mod[a]<=
    ModGe(Int), // =mod[a]>=
    Dot,
    Comma,
    Newline,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn err(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, col, message: message.into() }
}

/// Tokenize input. Newlines are significant when `keep_newlines` is set
/// (automaton files are line oriented); `#` starts a comment to end of line.
pub fn tokenize(input: &str, keep_newlines: bool) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok| out.push(Spanned { tok, line: tl, col: tc });
        match c {
            '\n' => {
                if keep_newlines {
                    push(Tok::Newline);
                }
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => push(Tok::LParen),
            ')' => push(Tok::RParen),
            '[' => push(Tok::LBracket),
            ']' => push(Tok::RBracket),
            '+' => push(Tok::Plus),
            '*' => push(Tok::Star),
            '&' => push(Tok::Amp),
            '|' => push(Tok::Pipe),
            '!' => push(Tok::Bang),
            '.' => push(Tok::Dot),
            ',' => push(Tok::Comma),
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    push(Tok::Arrow);
                    i += 1;
                    col += 1;
                } else {
                    push(Tok::Minus);
                }
            }
            '<' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push(Tok::Le);
                    i += 1;
                    col += 1;
                } else {
                    push(Tok::Lt);
                }
            }
            '>' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    push(Tok::Ge);
                    i += 1;
                    col += 1;
                } else {
                    push(Tok::Gt);
                }
            }
            '=' => {
                // possible =mod[a]<= / =mod[a]>=
                let rest: String = chars[i..].iter().take(5).collect();
                if rest.starts_with("=mod(") || rest.starts_with("=mod[") {
                    let mut j = i + 5;
                    let mut digits = String::new();
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        digits.push(chars[j]);
                        j += 1;
                    }
                    let closing = if rest.starts_with("=mod(") { ')' } else { ']' };
                    if digits.is_empty() || j >= chars.len() || chars[j] != closing {
                        return Err(err(tl, tc, "malformed modular operator, expected =mod[a]<= or =mod[a]>="));
                    }
                    j += 1;
                    let tail: String = chars[j..].iter().take(2).collect();
                    let a: Int = digits
                        .parse()
                        .map_err(|_| err(tl, tc, "modulus out of range"))?;
                    if a < 1 {
                        return Err(err(tl, tc, "modulus must be at least 1"));
                    }
                    if tail.starts_with("<=") {
                        push(Tok::ModLe(a));
                    } else if tail.starts_with(">=") {
                        push(Tok::ModGe(a));
                    } else {
                        return Err(err(tl, tc, "modular operator must end with <= or >="));
                    }
                    let consumed = j + 2 - i;
                    i += consumed;
                    col += consumed;
                    continue;
                }
                push(Tok::Eq);
            }
            _ if c.is_ascii_digit() => {
                let mut digits = String::new();
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    digits.push(chars[j]);
                    j += 1;
                }
                let n: Int = digits.parse().map_err(|_| err(tl, tc, "number out of range"))?;
                push(Tok::Num(n));
                col += j - i;
                i = j;
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    name.push(chars[j]);
                    j += 1;
                }
                push(Tok::Ident(name));
                col += j - i;
                i = j;
                continue;
            }
            _ => return Err(err(tl, tc, format!("unexpected character '{c}'"))),
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

/// Cursor over a token stream.
pub struct Cursor<'a> {
    toks: &'a [Spanned],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned]) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn loc(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self
                .toks
                .last()
                .map(|s| (s.line, s.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    pub fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(want) {
            Ok(())
        } else {
            let (l, c) = self.loc();
            Err(err(l, c, format!("expected {what}")))
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let (l, c) = self.loc();
        err(l, c, message)
    }
}

/// Linear term over identifiers, e.g. `2*t1 + t2 - 3`. `x` is treated as an
/// ordinary identifier here; guard parsing separates it out.
pub fn parse_term(cur: &mut Cursor) -> Result<LinearTerm, ParseError> {
    let mut acc = LinearTerm::constant(0);
    let mut sign: Int = 1;
    let mut first = true;
    loop {
        if !first {
            if cur.eat(&Tok::Plus) {
                sign = 1;
            } else if cur.eat(&Tok::Minus) {
                sign = -1;
            } else {
                break;
            }
        } else if cur.eat(&Tok::Minus) {
            sign = -1;
        }
        first = false;
        // one summand: NUM, NUM*IDENT, or IDENT
        match cur.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                cur.next();
                if cur.eat(&Tok::Star) {
                    match cur.next() {
                        Some(Tok::Ident(name)) => {
                            acc = acc.add(&LinearTerm::var(name).scale(sign * n));
                        }
                        _ => return Err(cur.error("expected identifier after '*'")),
                    }
                } else {
                    acc = acc.add(&LinearTerm::constant(sign * n));
                }
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                cur.next();
                acc = acc.add(&LinearTerm::var(&name).scale(sign));
            }
            _ => return Err(cur.error("expected a term")),
        }
        sign = 1;
    }
    Ok(acc)
}

fn cmp_from_tok(t: &Tok) -> Option<CmpOp> {
    match t {
        Tok::Eq => Some(CmpOp::Eq),
        Tok::Lt => Some(CmpOp::Lt),
        Tok::Le => Some(CmpOp::Le),
        Tok::Gt => Some(CmpOp::Gt),
        Tok::Ge => Some(CmpOp::Ge),
        Tok::ModLe(a) => Some(CmpOp::ModLe(*a)),
        Tok::ModGe(a) => Some(CmpOp::ModGe(*a)),
        _ => None,
    }
}

/// Guard expression grammar: `|` lowest, then `&`, then `!` and atoms.
/// Atoms are comparisons between terms; an occurrence of the identifier `x`
/// on exactly one side makes a clock atom.
pub fn parse_guard(cur: &mut Cursor) -> Result<GuardExpr, ParseError> {
    parse_or(cur)
}

fn parse_or(cur: &mut Cursor) -> Result<GuardExpr, ParseError> {
    let mut parts = vec![parse_and(cur)?];
    while cur.eat(&Tok::Pipe) {
        parts.push(parse_and(cur)?);
    }
    Ok(GuardExpr::or(parts))
}

fn parse_and(cur: &mut Cursor) -> Result<GuardExpr, ParseError> {
    let mut parts = vec![parse_unary(cur)?];
    while cur.eat(&Tok::Amp) {
        parts.push(parse_unary(cur)?);
    }
    Ok(GuardExpr::and(parts))
}

fn parse_unary(cur: &mut Cursor) -> Result<GuardExpr, ParseError> {
    if cur.eat(&Tok::Bang) {
        return Ok(GuardExpr::not(parse_unary(cur)?));
    }
    if cur.eat(&Tok::LParen) {
        let inner = parse_or(cur)?;
        cur.expect(&Tok::RParen, "')'")?;
        return Ok(inner);
    }
    if let Some(Tok::Ident(name)) = cur.peek() {
        match name.as_str() {
            "true" => {
                cur.next();
                return Ok(GuardExpr::True);
            }
            "false" => {
                cur.next();
                return Ok(GuardExpr::False);
            }
            _ => {}
        }
    }
    parse_comparison(cur)
}

fn parse_comparison(cur: &mut Cursor) -> Result<GuardExpr, ParseError> {
    let (l, c) = cur.loc();
    let lhs = parse_term(cur)?;
    let op = match cur.peek().and_then(cmp_from_tok) {
        Some(op) => {
            cur.next();
            op
        }
        None => return Err(cur.error("expected comparison operator")),
    };
    let rhs = parse_term(cur)?;
    guard_from_comparison(lhs, op, rhs).map_err(|m| err(l, c, m))
}

/// Classify a parsed comparison as a clock atom or a parameter atom. The
/// clock may carry coefficient 1 on one side only.
pub fn guard_from_comparison(lhs: LinearTerm, op: CmpOp, rhs: LinearTerm) -> Result<GuardExpr, String> {
    let lc = lhs.coeffs.get("x").copied().unwrap_or(0);
    let rc = rhs.coeffs.get("x").copied().unwrap_or(0);
    let strip = |t: &LinearTerm| {
        let mut t = t.clone();
        t.coeffs.remove("x");
        t
    };
    match (lc, rc) {
        (0, 0) => Ok(GuardExpr::Theta(ThetaAtom::new(lhs, op, rhs))),
        (1, 0) => {
            // x + rest op rhs  =>  x op rhs - rest
            Ok(GuardExpr::X(XAtom::new(op, rhs.sub(&strip(&lhs)))))
        }
        (0, 1) => {
            // lhs op x + rest  =>  x flipped(op) lhs - rest
            let flipped = match op {
                CmpOp::Eq => CmpOp::Eq,
                CmpOp::Lt => CmpOp::Gt,
                CmpOp::Le => CmpOp::Ge,
                CmpOp::Gt => CmpOp::Lt,
                CmpOp::Ge => CmpOp::Le,
                CmpOp::ModLe(a) => CmpOp::ModGe(a),
                CmpOp::ModGe(a) => CmpOp::ModLe(a),
            };
            Ok(GuardExpr::X(XAtom::new(flipped, lhs.sub(&strip(&rhs)))))
        }
        _ => Err("the clock x may appear on one side only, with coefficient 1".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Valuation;

    fn guard(s: &str) -> GuardExpr {
        let toks = tokenize(s, false).unwrap();
        let mut cur = Cursor::new(&toks);
        let g = parse_guard(&mut cur).unwrap();
        assert!(cur.peek().is_none(), "trailing input in {s:?}");
        g
    }

    #[test]
    fn parses_terms_and_comparisons() {
        let g = guard("x <= 2*t1 + t2 - 1");
        let mut v = Valuation::new();
        v.insert("t1".into(), 2);
        v.insert("t2".into(), 1);
        assert!(g.eval(4, &v));
        assert!(!g.eval(5, &v));
    }

    #[test]
    fn clock_on_right_side_flips() {
        let g = guard("t1 <= x");
        let mut v = Valuation::new();
        v.insert("t1".into(), 3);
        assert!(g.eval(3, &v));
        assert!(!g.eval(2, &v));
    }

    #[test]
    fn modular_operator_tokens() {
        let g = guard("x =mod[2]>= t1 + 1 | t1 =mod[3]<= 7");
        let mut v = Valuation::new();
        v.insert("t1".into(), 2);
        // left disjunct needs x = 3 mod 2 and x >= 3; right is false at t1=2.
        assert!(g.eval(5, &v));
        assert!(!g.eval(4, &v));
    }

    #[test]
    fn rejects_clock_on_both_sides_with_bad_coefficient() {
        let toks = tokenize("2*x <= t1", false).unwrap();
        let mut cur = Cursor::new(&toks);
        assert!(parse_guard(&mut cur).is_err());
    }

    #[test]
    fn error_positions() {
        let e = tokenize("x <= $", false).unwrap_err();
        assert_eq!((e.line, e.col), (1, 6));
        let toks = tokenize("x <=\n& t1", true).unwrap();
        let mut cur = Cursor::new(&toks);
        let e = parse_guard(&mut cur).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("x <= 3 # a comment\n", false).unwrap();
        assert_eq!(toks.len(), 3);
    }
}
