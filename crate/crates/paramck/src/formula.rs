//! Temporal formulas: surface syntax with the usual derived operators, the
//! fragment gate, and the rewrite into the internal operator set handled by
//! the symbolic construction (EX, existential until, EG, bounded EG).

use crate::logic::{CmpOp, LinearTerm, ThetaAtom};
use crate::text::{parse_term, tokenize, Cursor, ParseError, Tok};
use std::fmt;

/// Quantifier in the parameter prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quant {
    Exists,
    Forall,
}

/// Parsed query: an optional quantifier prefix over parameters and a body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub prefix: Vec<(Quant, String)>,
    pub body: Formula,
}

pub type Bound = (CmpOp, LinearTerm);

/// Surface formulas after desugaring of ->, &, and the derived temporal
/// operators (EF, AF, EG, AG and their bounded forms).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Cmp(ThetaAtom),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    EX(Box<Formula>),
    EU { l: Box<Formula>, bound: Option<Bound>, r: Box<Formula> },
    AU { l: Box<Formula>, bound: Option<Bound>, r: Box<Formula> },
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, x) | (x, Formula::False) => x,
            (a, b) => Formula::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    pub fn params(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => {}
            Formula::Cmp(a) => {
                out.extend(a.lhs.vars().cloned());
                out.extend(a.rhs.vars().cloned());
            }
            Formula::Not(f) | Formula::EX(f) => f.params(out),
            Formula::Or(a, b) => {
                a.params(out);
                b.params(out);
            }
            Formula::EU { l, bound, r } | Formula::AU { l, bound, r } => {
                l.params(out);
                r.params(out);
                if let Some((_, t)) = bound {
                    out.extend(t.vars().cloned());
                }
            }
        }
    }
}

fn fmt_bound(b: &Option<Bound>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if let Some((op, t)) = b {
        write!(f, "[{op} {t}]")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Cmp(a) => write!(f, "{a}"),
            Formula::Not(e) => write!(f, "!({e})"),
            Formula::Or(a, b) => write!(f, "({a}) | ({b})"),
            Formula::EX(e) => write!(f, "EX ({e})"),
            Formula::EU { l, bound, r } => {
                write!(f, "E(({l}) U")?;
                fmt_bound(bound, f)?;
                write!(f, " ({r}))")
            }
            Formula::AU { l, bound, r } => {
                write!(f, "A(({l}) U")?;
                fmt_bound(bound, f)?;
                write!(f, " ({r}))")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse a query. Grammar, loosest first: `->` (right associative), `|`,
/// `&`, then `!` and the temporal operators. Until takes the form
/// `E(phi U[<= e] psi)`; EF/AF/EG/AG accept the same optional bound.
pub fn parse_query(input: &str) -> Result<Query, ParseError> {
    let toks = tokenize(input, false)?;
    let mut cur = Cursor::new(&toks);
    let mut prefix = Vec::new();
    loop {
        match cur.peek() {
            Some(Tok::Ident(w)) if w == "forall" || w == "exists" => {
                let q = if w == "forall" { Quant::Forall } else { Quant::Exists };
                cur.next();
                let name = match cur.next() {
                    Some(Tok::Ident(n)) => n.clone(),
                    _ => return Err(cur.error("expected parameter name after quantifier")),
                };
                cur.expect(&Tok::Dot, "'.' after quantified parameter")?;
                prefix.push((q, name));
            }
            _ => break,
        }
    }
    let body = parse_impl(&mut cur)?;
    if cur.peek().is_some() {
        return Err(cur.error("trailing input after formula"));
    }
    Ok(Query { prefix, body })
}

pub fn parse_formula(input: &str) -> Result<Formula, ParseError> {
    let q = parse_query(input)?;
    Ok(q.body)
}

fn parse_impl(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let lhs = parse_or(cur)?;
    if cur.eat(&Tok::Arrow) {
        let rhs = parse_impl(cur)?;
        Ok(Formula::or(Formula::not(lhs), rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_or(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut acc = parse_and(cur)?;
    while cur.eat(&Tok::Pipe) {
        acc = Formula::or(acc, parse_and(cur)?);
    }
    Ok(acc)
}

fn parse_and(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut acc = parse_unary(cur)?;
    while cur.eat(&Tok::Amp) {
        acc = Formula::and(acc, parse_unary(cur)?);
    }
    Ok(acc)
}

fn nat_term(cur: &Cursor, t: &LinearTerm) -> Result<(), ParseError> {
    if t.constant < 0 || t.coeffs.values().any(|c| *c < 0) {
        Err(cur.error("formula terms must have nonnegative coefficients"))
    } else {
        Ok(())
    }
}

fn parse_bound(cur: &mut Cursor) -> Result<Option<Bound>, ParseError> {
    if !cur.eat(&Tok::LBracket) {
        return Ok(None);
    }
    let op = match cur.next() {
        Some(Tok::Eq) => CmpOp::Eq,
        Some(Tok::Lt) => CmpOp::Lt,
        Some(Tok::Le) => CmpOp::Le,
        Some(Tok::Gt) => CmpOp::Gt,
        Some(Tok::Ge) => CmpOp::Ge,
        _ => return Err(cur.error("expected comparison operator in bound")),
    };
    let t = parse_term(cur)?;
    nat_term(cur, &t)?;
    cur.expect(&Tok::RBracket, "']'")?;
    Ok(Some((op, t)))
}

fn parse_until(cur: &mut Cursor, universal: bool) -> Result<Formula, ParseError> {
    cur.expect(&Tok::LParen, "'(' after path quantifier")?;
    let l = parse_impl(cur)?;
    match cur.next() {
        Some(Tok::Ident(w)) if w == "U" => {}
        _ => return Err(cur.error("expected 'U' in until formula")),
    }
    let bound = parse_bound(cur)?;
    let r = parse_impl(cur)?;
    cur.expect(&Tok::RParen, "')'")?;
    let (l, r) = (Box::new(l), Box::new(r));
    Ok(if universal { Formula::AU { l, bound, r } } else { Formula::EU { l, bound, r } })
}

fn parse_unary(cur: &mut Cursor) -> Result<Formula, ParseError> {
    if cur.eat(&Tok::Bang) {
        return Ok(Formula::not(parse_unary(cur)?));
    }
    if cur.eat(&Tok::LParen) {
        let inner = parse_impl(cur)?;
        cur.expect(&Tok::RParen, "')'")?;
        return Ok(inner);
    }
    if let Some(Tok::Ident(w)) = cur.peek() {
        let w = w.clone();
        match w.as_str() {
            "true" => {
                cur.next();
                return Ok(Formula::True);
            }
            "false" => {
                cur.next();
                return Ok(Formula::False);
            }
            "EX" => {
                cur.next();
                return Ok(Formula::EX(Box::new(parse_unary(cur)?)));
            }
            "E" => {
                cur.next();
                return parse_until(cur, false);
            }
            "A" => {
                cur.next();
                return parse_until(cur, true);
            }
            "EF" => {
                cur.next();
                let bound = parse_bound(cur)?;
                let f = parse_unary(cur)?;
                return Ok(Formula::EU { l: Box::new(Formula::True), bound, r: Box::new(f) });
            }
            "AF" => {
                cur.next();
                let bound = parse_bound(cur)?;
                let f = parse_unary(cur)?;
                return Ok(Formula::AU { l: Box::new(Formula::True), bound, r: Box::new(f) });
            }
            "EG" => {
                cur.next();
                let bound = parse_bound(cur)?;
                let f = parse_unary(cur)?;
                return Ok(Formula::not(Formula::AU {
                    l: Box::new(Formula::True),
                    bound,
                    r: Box::new(Formula::not(f)),
                }));
            }
            "AG" => {
                cur.next();
                let bound = parse_bound(cur)?;
                let f = parse_unary(cur)?;
                return Ok(Formula::not(Formula::EU {
                    l: Box::new(Formula::True),
                    bound,
                    r: Box::new(Formula::not(f)),
                }));
            }
            _ => {}
        }
    }
    // proposition or parameter comparison
    parse_atom(cur)
}

fn parse_atom(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let t = parse_term(cur)?;
    let op = match cur.peek() {
        Some(Tok::Eq) => Some(CmpOp::Eq),
        Some(Tok::Lt) => Some(CmpOp::Lt),
        Some(Tok::Le) => Some(CmpOp::Le),
        Some(Tok::Gt) => Some(CmpOp::Gt),
        Some(Tok::Ge) => Some(CmpOp::Ge),
        Some(Tok::ModLe(a)) => Some(CmpOp::ModLe(*a)),
        Some(Tok::ModGe(a)) => Some(CmpOp::ModGe(*a)),
        _ => None,
    };
    match op {
        Some(op) => {
            cur.next();
            let rhs = parse_term(cur)?;
            nat_term(cur, &t)?;
            nat_term(cur, &rhs)?;
            Ok(Formula::Cmp(ThetaAtom::new(t, op, rhs)))
        }
        None => {
            // a bare identifier is a proposition
            if t.constant == 0 && t.coeffs.len() == 1 && t.coeffs.values().all(|c| *c == 1) {
                Ok(Formula::Prop(t.coeffs.keys().next().unwrap().clone()))
            } else {
                Err(cur.error("expected proposition or comparison"))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Fragment gate
// ---------------------------------------------------------------------------

/// Check membership in the decidable fragment: no `=` bound on either until,
/// and universal until only unbounded or bounded by `<` / `<=`.
pub fn check_fragment(f: &Formula) -> Result<(), String> {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) | Formula::Cmp(_) => Ok(()),
        Formula::Not(e) | Formula::EX(e) => check_fragment(e),
        Formula::Or(a, b) => {
            check_fragment(a)?;
            check_fragment(b)
        }
        Formula::EU { l, bound, r } => {
            if let Some((CmpOp::Eq, t)) = bound {
                return Err(format!("existential until with '= {t}' bound is outside the fragment"));
            }
            check_fragment(l)?;
            check_fragment(r)
        }
        Formula::AU { l, bound, r } => {
            match bound {
                None | Some((CmpOp::Lt, _)) | Some((CmpOp::Le, _)) => {}
                Some((op, t)) => {
                    return Err(format!(
                        "universal until with '{op} {t}' bound is outside the fragment"
                    ));
                }
            }
            check_fragment(l)?;
            check_fragment(r)
        }
    }
}

// ---------------------------------------------------------------------------
// Internal form
// ---------------------------------------------------------------------------

/// Operator set handled directly by the symbolic construction. All temporal
/// operators use strict-future semantics: the witness position is at least
/// one step along the path, and the left argument of until is checked at the
/// strictly intermediate positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Internal {
    True,
    False,
    Prop(String),
    Cmp(ThetaAtom),
    Not(Box<Internal>),
    Or(Box<Internal>, Box<Internal>),
    EX(Box<Internal>),
    /// Some path reaches r at a position i >= 1 with accumulated duration
    /// D_i satisfying `D_i op bound`, l holding at positions 1..i-1.
    EU { op: CmpOp, bound: LinearTerm, l: Box<Internal>, r: Box<Internal> },
    /// Some infinite path satisfies the argument at every position i >= 1.
    EG(Box<Internal>),
    /// Some path satisfies the argument at every position whose duration
    /// stays below the bound: there is j >= 1 with D_j >= bound and the
    /// argument true at positions 1..j-1.
    EGLt(LinearTerm, Box<Internal>),
}

impl Internal {
    pub fn not(f: Internal) -> Internal {
        match f {
            Internal::True => Internal::False,
            Internal::False => Internal::True,
            Internal::Not(inner) => *inner,
            other => Internal::Not(Box::new(other)),
        }
    }

    pub fn or(a: Internal, b: Internal) -> Internal {
        match (a, b) {
            (Internal::True, _) | (_, Internal::True) => Internal::True,
            (Internal::False, x) | (x, Internal::False) => x,
            (a, b) => Internal::Or(Box::new(a), Box::new(b)),
        }
    }
}

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Internal::True => write!(f, "true"),
            Internal::False => write!(f, "false"),
            Internal::Prop(p) => write!(f, "{p}"),
            Internal::Cmp(a) => write!(f, "{a}"),
            Internal::Not(e) => write!(f, "!({e})"),
            Internal::Or(a, b) => write!(f, "({a}) | ({b})"),
            Internal::EX(e) => write!(f, "EX ({e})"),
            Internal::EU { op, bound, l, r } => write!(f, "E(({l}) U[{op} {bound}] ({r}))"),
            Internal::EG(e) => write!(f, "EG ({e})"),
            Internal::EGLt(b, e) => write!(f, "EG[< {b}] ({e})"),
        }
    }
}

/// Rewrite a fragment formula into the internal operator set. Universal
/// untils go through the dual identity
/// !A(l U r) = EG !r  |  E(!r U (!l & !r)),
/// with the bounded EG operator absorbing the duration constraint of the
/// bounded universal cases.
pub fn rewrite_to_internal(f: &Formula) -> Internal {
    match f {
        Formula::True => Internal::True,
        Formula::False => Internal::False,
        Formula::Prop(p) => Internal::Prop(p.clone()),
        Formula::Cmp(a) => Internal::Cmp(a.clone()),
        Formula::Not(e) => Internal::not(rewrite_to_internal(e)),
        Formula::Or(a, b) => Internal::or(rewrite_to_internal(a), rewrite_to_internal(b)),
        Formula::EX(e) => Internal::EX(Box::new(rewrite_to_internal(e))),
        Formula::EU { l, bound, r } => {
            let (op, bound) = match bound {
                None => (CmpOp::Ge, LinearTerm::constant(0)),
                Some((op, t)) => (*op, t.clone()),
            };
            Internal::EU {
                op,
                bound,
                l: Box::new(rewrite_to_internal(l)),
                r: Box::new(rewrite_to_internal(r)),
            }
        }
        Formula::AU { l, bound, r } => {
            let nl = Internal::not(rewrite_to_internal(l));
            let nr = Internal::not(rewrite_to_internal(r));
            let neither = Internal::not(Internal::or(
                Internal::not(nl.clone()),
                Internal::not(nr.clone()),
            ));
            match bound {
                None => Internal::not(Internal::or(
                    Internal::EG(Box::new(nr.clone())),
                    Internal::EU {
                        op: CmpOp::Ge,
                        bound: LinearTerm::constant(0),
                        l: Box::new(nr),
                        r: Box::new(neither),
                    },
                )),
                Some((CmpOp::Le, t)) => Internal::not(Internal::or(
                    Internal::EGLt(t.plus_const(1), Box::new(nr.clone())),
                    Internal::EU {
                        op: CmpOp::Le,
                        bound: t.clone(),
                        l: Box::new(nr),
                        r: Box::new(neither),
                    },
                )),
                Some((CmpOp::Lt, t)) => Internal::not(Internal::or(
                    Internal::EGLt(t.clone(), Box::new(nr.clone())),
                    Internal::EU {
                        op: CmpOp::Lt,
                        bound: t.clone(),
                        l: Box::new(nr),
                        r: Box::new(neither),
                    },
                )),
                Some((op, t)) => panic!("universal until bound {op} {t} outside the fragment"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_derived_operators() {
        let f = parse_formula("AG (sigma -> AF[<= t3] sigma)").unwrap();
        // AG a = !EF !a = !E(true U !a)
        match &f {
            Formula::Not(inner) => match inner.as_ref() {
                Formula::EU { l, bound, r } => {
                    assert_eq!(**l, Formula::True);
                    assert!(bound.is_none());
                    match r.as_ref() {
                        Formula::Not(body) => match body.as_ref() {
                            Formula::Or(_, au) => {
                                assert!(matches!(au.as_ref(), Formula::AU { .. }));
                            }
                            other => panic!("unexpected body {other}"),
                        },
                        other => panic!("unexpected EU target {other}"),
                    }
                }
                other => panic!("unexpected inner {other}"),
            },
            other => panic!("unexpected parse {other}"),
        }
    }

    #[test]
    fn parses_until_with_bounds() {
        let f = parse_formula("E(p U[< 2*t1 + 1] q)").unwrap();
        match f {
            Formula::EU { bound: Some((CmpOp::Lt, t)), .. } => {
                assert_eq!(t, LinearTerm::var("t1").scale(2).plus_const(1));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parses_quantifier_prefix() {
        let q = parse_query("exists t1. forall t2. EF (t1 <= t2)").unwrap();
        assert_eq!(q.prefix, vec![(Quant::Exists, "t1".into()), (Quant::Forall, "t2".into())]);
    }

    #[test]
    fn rejects_negative_coefficients() {
        assert!(parse_formula("EF[<= t1 - 1] p").is_err());
        assert!(parse_formula("t1 - t2 <= 3").is_err());
    }

    #[test]
    fn fragment_gate() {
        let ok = parse_formula("A(p U[<= t1] q)").unwrap();
        assert!(check_fragment(&ok).is_ok());
        let bad = parse_formula("A(p U[>= t1] q)").unwrap();
        assert!(check_fragment(&bad).is_err());
        let bad = parse_formula("E(p U[= 3] q)").unwrap();
        assert!(check_fragment(&bad).is_err());
        let bad = parse_formula("AG E(p U[= t1] q)").unwrap();
        assert!(check_fragment(&bad).is_err());
        // AF with <= stays inside
        let ok = parse_formula("AF[< 4] p").unwrap();
        assert!(check_fragment(&ok).is_ok());
        // EG[<= a] desugars to an AU with a <= bound: inside
        let ok = parse_formula("EG[<= 3] p").unwrap();
        assert!(check_fragment(&ok).is_ok());
    }

    #[test]
    fn unbounded_au_rewrite_shape() {
        let f = parse_formula("A(p U q)").unwrap();
        let i = rewrite_to_internal(&f);
        match i {
            Internal::Not(inner) => match *inner {
                Internal::Or(a, b) => {
                    assert!(matches!(*a, Internal::EG(_)));
                    assert!(matches!(*b, Internal::EU { op: CmpOp::Ge, .. }));
                }
                other => panic!("unexpected {other}"),
            },
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bounded_au_rewrite_uses_bounded_eg() {
        let f = parse_formula("AF[<= t3] sigma").unwrap();
        let i = rewrite_to_internal(&f);
        match i {
            Internal::Not(inner) => match *inner {
                Internal::Or(a, b) => {
                    match *a {
                        Internal::EGLt(t, _) => assert_eq!(t, LinearTerm::var("t3").plus_const(1)),
                        other => panic!("unexpected {other}"),
                    }
                    assert!(matches!(*b, Internal::EU { op: CmpOp::Le, .. }));
                }
                other => panic!("unexpected {other}"),
            },
            other => panic!("unexpected {other}"),
        }
    }
}
