//! Presburger arithmetic over the naturals: formula representation,
//! evaluation, quantifier elimination (Cooper's method) and sentence
//! decision. Coefficients are big integers because elimination multiplies
//! coefficients up by least common multiples.

use crate::logic::{CmpOp, Conjunct, GuardExpr, Int, LinearTerm, Valuation};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Linear term with big integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PTerm {
    pub coeffs: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl PTerm {
    pub fn constant(c: impl Into<BigInt>) -> Self {
        PTerm { coeffs: BTreeMap::new(), constant: c.into() }
    }

    pub fn var(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), BigInt::one());
        PTerm { coeffs, constant: BigInt::zero() }
    }

    pub fn from_linear(t: &LinearTerm) -> Self {
        PTerm {
            coeffs: t
                .coeffs
                .iter()
                .filter(|(_, c)| **c != 0)
                .map(|(v, c)| (v.clone(), BigInt::from(*c)))
                .collect(),
            constant: BigInt::from(t.constant),
        }
    }

    pub fn add(&self, other: &PTerm) -> PTerm {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(BigInt::zero);
            *e += c;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &BigInt) -> PTerm {
        if k.is_zero() {
            return PTerm::default();
        }
        PTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn sub(&self, other: &PTerm) -> PTerm {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn coeff(&self, v: &str) -> BigInt {
        self.coeffs.get(v).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Drop the variable and return its coefficient.
    pub fn without(&self, v: &str) -> (BigInt, PTerm) {
        let mut out = self.clone();
        let c = out.coeffs.remove(v).unwrap_or_else(BigInt::zero);
        (c, out)
    }

    pub fn eval(&self, v: &BTreeMap<String, BigInt>) -> BigInt {
        let mut acc = self.constant.clone();
        for (name, c) in &self.coeffs {
            acc += c * v.get(name).unwrap_or_else(|| panic!("unbound variable {name}"));
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl fmt::Display for PTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_one() {
                    write!(f, "{v}")?;
                } else if (-c).is_one() {
                    write!(f, "-{v}")?;
                } else {
                    write!(f, "{c}*{v}")?;
                }
                first = false;
            } else if c.is_positive() {
                if c.is_one() {
                    write!(f, "+{v}")?;
                } else {
                    write!(f, "+{c}*{v}")?;
                }
            } else if (-c).is_one() {
                write!(f, "-{v}")?;
            } else {
                write!(f, "{c}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant.is_positive() {
            write!(f, "+{}", self.constant)?;
        } else if self.constant.is_negative() {
            write!(f, "{}", self.constant)?;
        }
        Ok(())
    }
}

/// Presburger formulas. Atoms are kept in the normalized shapes term <= 0,
/// term = 0 and d | term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pres {
    True,
    False,
    /// term <= 0
    Le(PTerm),
    /// term = 0
    Eq(PTerm),
    /// d divides term (d >= 1)
    Div(BigInt, PTerm),
    Not(Box<Pres>),
    And(Vec<Pres>),
    Or(Vec<Pres>),
    Exists(String, Box<Pres>),
    Forall(String, Box<Pres>),
}

impl Pres {
    pub fn and(parts: Vec<Pres>) -> Pres {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Pres::True => {}
                Pres::False => return Pres::False,
                Pres::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => Pres::True,
            1 => out.pop().unwrap(),
            _ => Pres::And(out),
        }
    }

    pub fn or(parts: Vec<Pres>) -> Pres {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Pres::False => {}
                Pres::True => return Pres::True,
                Pres::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => Pres::False,
            1 => out.pop().unwrap(),
            _ => Pres::Or(out),
        }
    }

    pub fn not(p: Pres) -> Pres {
        match p {
            Pres::True => Pres::False,
            Pres::False => Pres::True,
            Pres::Not(inner) => *inner,
            other => Pres::Not(Box::new(other)),
        }
    }

    pub fn exists(v: &str, body: Pres) -> Pres {
        Pres::Exists(v.to_string(), Box::new(body))
    }

    pub fn forall(v: &str, body: Pres) -> Pres {
        Pres::Forall(v.to_string(), Box::new(body))
    }

    /// cmp as a Pres atom over two terms.
    pub fn cmp(lhs: &PTerm, op: CmpOp, rhs: &PTerm) -> Pres {
        let d = lhs.sub(rhs);
        match op {
            CmpOp::Eq => Pres::Eq(d),
            CmpOp::Le => Pres::Le(d),
            CmpOp::Lt => Pres::Le(d.add(&PTerm::constant(1))),
            CmpOp::Ge => Pres::Le(d.scale(&BigInt::from(-1))),
            CmpOp::Gt => Pres::Le(d.scale(&BigInt::from(-1)).add(&PTerm::constant(1))),
            CmpOp::ModLe(a) => Pres::and(vec![Pres::Div(BigInt::from(a), d.clone()), Pres::Le(d)]),
            CmpOp::ModGe(a) => Pres::and(vec![
                Pres::Div(BigInt::from(a), d.clone()),
                Pres::Le(d.scale(&BigInt::from(-1))),
            ]),
        }
    }

    /// Translate a guard expression; the clock, if present, becomes the free
    /// variable named `x`.
    pub fn from_guard(g: &GuardExpr) -> Pres {
        match g {
            GuardExpr::True => Pres::True,
            GuardExpr::False => Pres::False,
            GuardExpr::X(a) => Pres::cmp(&PTerm::var("x"), a.op, &PTerm::from_linear(&a.rhs)),
            GuardExpr::Theta(a) => {
                Pres::cmp(&PTerm::from_linear(&a.lhs), a.op, &PTerm::from_linear(&a.rhs))
            }
            GuardExpr::Not(e) => Pres::not(Pres::from_guard(e)),
            GuardExpr::And(es) => Pres::and(es.iter().map(Pres::from_guard).collect()),
            GuardExpr::Or(es) => Pres::or(es.iter().map(Pres::from_guard).collect()),
        }
    }

    pub fn from_conjunct(c: &Conjunct) -> Pres {
        Pres::from_guard(&c.to_guard())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(p: &Pres, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match p {
                Pres::True | Pres::False => {}
                Pres::Le(t) | Pres::Eq(t) | Pres::Div(_, t) => {
                    for v in t.coeffs.keys() {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
                Pres::Not(e) => go(e, bound, out),
                Pres::And(es) | Pres::Or(es) => {
                    for e in es {
                        go(e, bound, out);
                    }
                }
                Pres::Exists(v, e) | Pres::Forall(v, e) => {
                    bound.push(v.clone());
                    go(e, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Evaluate under a full assignment of the free variables (naturals).
    /// Quantifiers enumerate 0..=bound, so this is exact only for formulas
    /// whose quantifiers are known to be witnessed within the bound; it is
    /// used as a test oracle.
    pub fn eval_bounded(&self, v: &BTreeMap<String, BigInt>, bound: u64) -> bool {
        match self {
            Pres::True => true,
            Pres::False => false,
            Pres::Le(t) => !t.eval(v).is_positive(),
            Pres::Eq(t) => t.eval(v).is_zero(),
            Pres::Div(d, t) => t.eval(v).mod_floor(d).is_zero(),
            Pres::Not(e) => !e.eval_bounded(v, bound),
            Pres::And(es) => es.iter().all(|e| e.eval_bounded(v, bound)),
            Pres::Or(es) => es.iter().any(|e| e.eval_bounded(v, bound)),
            Pres::Exists(name, e) => (0..=bound).any(|k| {
                let mut v2 = v.clone();
                v2.insert(name.clone(), BigInt::from(k));
                e.eval_bounded(&v2, bound)
            }),
            Pres::Forall(name, e) => (0..=bound).all(|k| {
                let mut v2 = v.clone();
                v2.insert(name.clone(), BigInt::from(k));
                e.eval_bounded(&v2, bound)
            }),
        }
    }

    /// Evaluate a quantifier-free formula.
    pub fn eval_qf(&self, v: &Valuation) -> bool {
        let big: BTreeMap<String, BigInt> =
            v.iter().map(|(k, x)| (k.clone(), BigInt::from(*x))).collect();
        self.eval_bounded(&big, 0)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Pres::True | Pres::False | Pres::Le(_) | Pres::Eq(_) | Pres::Div(_, _) => true,
            Pres::Not(e) => e.is_quantifier_free(),
            Pres::And(es) | Pres::Or(es) => es.iter().all(|e| e.is_quantifier_free()),
            Pres::Exists(_, _) | Pres::Forall(_, _) => false,
        }
    }
}

impl fmt::Display for Pres {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pres::True => write!(f, "true"),
            Pres::False => write!(f, "false"),
            Pres::Le(t) => write!(f, "{t} <= 0"),
            Pres::Eq(t) => write!(f, "{t} = 0"),
            Pres::Div(d, t) => write!(f, "div({d}, {t})"),
            Pres::Not(e) => write!(f, "!({e})"),
            Pres::And(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" & "))
            }
            Pres::Or(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" | "))
            }
            Pres::Exists(v, e) => write!(f, "exists {v}. ({e})"),
            Pres::Forall(v, e) => write!(f, "forall {v}. ({e})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Quantifier elimination (Cooper's method, adapted to natural-number
// variables by conjoining v >= 0 before eliminating v).
// ---------------------------------------------------------------------------

/// Literals in negation normal form.
#[derive(Clone, Debug)]
enum Lit {
    Le(PTerm),          // t <= 0
    Eq(PTerm),          // t = 0
    Neq(PTerm),         // t != 0
    Div(BigInt, PTerm, bool), // d | t (true) or d !| t (false)
}

#[derive(Clone, Debug)]
enum NnfP {
    Lit(Lit),
    And(Vec<NnfP>),
    Or(Vec<NnfP>),
    True,
    False,
}

fn nnf(p: &Pres, neg: bool) -> NnfP {
    match (p, neg) {
        (Pres::True, false) | (Pres::False, true) => NnfP::True,
        (Pres::True, true) | (Pres::False, false) => NnfP::False,
        (Pres::Le(t), false) => NnfP::Lit(Lit::Le(t.clone())),
        // !(t <= 0)  <=>  -t + 1 <= 0
        (Pres::Le(t), true) => {
            NnfP::Lit(Lit::Le(t.scale(&BigInt::from(-1)).add(&PTerm::constant(1))))
        }
        (Pres::Eq(t), false) => NnfP::Lit(Lit::Eq(t.clone())),
        (Pres::Eq(t), true) => NnfP::Lit(Lit::Neq(t.clone())),
        (Pres::Div(d, t), n) => NnfP::Lit(Lit::Div(d.clone(), t.clone(), !n)),
        (Pres::Not(e), n) => nnf(e, !n),
        (Pres::And(es), false) | (Pres::Or(es), true) => {
            NnfP::And(es.iter().map(|e| nnf(e, neg)).collect())
        }
        (Pres::Or(es), false) | (Pres::And(es), true) => {
            NnfP::Or(es.iter().map(|e| nnf(e, neg)).collect())
        }
        (Pres::Exists(_, _), _) | (Pres::Forall(_, _), _) => {
            panic!("nnf expects a quantifier-free body")
        }
    }
}

fn nnf_to_pres(n: &NnfP) -> Pres {
    match n {
        NnfP::True => Pres::True,
        NnfP::False => Pres::False,
        NnfP::And(es) => Pres::and(es.iter().map(nnf_to_pres).collect()),
        NnfP::Or(es) => Pres::or(es.iter().map(nnf_to_pres).collect()),
        NnfP::Lit(Lit::Le(t)) => Pres::Le(t.clone()),
        NnfP::Lit(Lit::Eq(t)) => Pres::Eq(t.clone()),
        NnfP::Lit(Lit::Neq(t)) => Pres::not(Pres::Eq(t.clone())),
        NnfP::Lit(Lit::Div(d, t, true)) => Pres::Div(d.clone(), t.clone()),
        NnfP::Lit(Lit::Div(d, t, false)) => Pres::not(Pres::Div(d.clone(), t.clone())),
    }
}

fn lcm_of_coeffs(n: &NnfP, v: &str, acc: &mut BigInt) {
    match n {
        NnfP::True | NnfP::False => {}
        NnfP::And(es) | NnfP::Or(es) => {
            for e in es {
                lcm_of_coeffs(e, v, acc);
            }
        }
        NnfP::Lit(l) => {
            let t = match l {
                Lit::Le(t) | Lit::Eq(t) | Lit::Neq(t) | Lit::Div(_, t, _) => t,
            };
            let c = t.coeff(v).abs();
            if !c.is_zero() {
                *acc = acc.lcm(&c);
            }
        }
    }
}

/// Multiply out so v appears with coefficient ±1, recording d | v via an
/// extra divisibility on a fresh view: we follow the standard trick of
/// replacing c*v by v' (= lambda/|c| scaling) and conjoining lambda | v'.
fn unitize(n: &NnfP, v: &str, lambda: &BigInt) -> NnfP {
    match n {
        NnfP::True => NnfP::True,
        NnfP::False => NnfP::False,
        NnfP::And(es) => NnfP::And(es.iter().map(|e| unitize(e, v, lambda)).collect()),
        NnfP::Or(es) => NnfP::Or(es.iter().map(|e| unitize(e, v, lambda)).collect()),
        NnfP::Lit(l) => {
            // Multiply the atom through by lambda/|c| (positive, so Le keeps
            // its direction) and stand in lambda*v for v, leaving v with
            // coefficient +-1.
            let scale_lit = |t: &PTerm| -> Option<PTerm> {
                let (c, rest) = t.without(v);
                if c.is_zero() {
                    return None;
                }
                let k = lambda / c.abs();
                let mut scaled = rest.scale(&k);
                let sign = if c.is_positive() { BigInt::one() } else { BigInt::from(-1) };
                scaled.coeffs.insert(v.to_string(), sign);
                Some(scaled)
            };
            match l {
                Lit::Le(t) => match scale_lit(t) {
                    None => NnfP::Lit(Lit::Le(t.clone())),
                    Some(s) => NnfP::Lit(Lit::Le(s)),
                },
                Lit::Eq(t) => match scale_lit(t) {
                    None => NnfP::Lit(Lit::Eq(t.clone())),
                    Some(s) => NnfP::Lit(Lit::Eq(s)),
                },
                Lit::Neq(t) => match scale_lit(t) {
                    None => NnfP::Lit(Lit::Neq(t.clone())),
                    Some(s) => NnfP::Lit(Lit::Neq(s)),
                },
                Lit::Div(d, t, pos) => {
                    let (c, rest) = t.without(v);
                    if c.is_zero() {
                        NnfP::Lit(Lit::Div(d.clone(), t.clone(), *pos))
                    } else {
                        let k = lambda / c.abs();
                        let mut scaled = rest.scale(&k);
                        let sign = if c.is_positive() { BigInt::one() } else { BigInt::from(-1) };
                        scaled.coeffs.insert(v.to_string(), sign);
                        NnfP::Lit(Lit::Div(d * &k, scaled, *pos))
                    }
                }
            }
        }
    }
}

/// Substitute v := value (a term) into a unitized body where v has
/// coefficient +1 or -1.
fn subst(n: &NnfP, v: &str, value: &PTerm) -> NnfP {
    match n {
        NnfP::True => NnfP::True,
        NnfP::False => NnfP::False,
        NnfP::And(es) => NnfP::And(es.iter().map(|e| subst(e, v, value)).collect()),
        NnfP::Or(es) => NnfP::Or(es.iter().map(|e| subst(e, v, value)).collect()),
        NnfP::Lit(l) => {
            let do_subst = |t: &PTerm| -> PTerm {
                let (c, rest) = t.without(v);
                rest.add(&value.scale(&c))
            };
            NnfP::Lit(match l {
                Lit::Le(t) => Lit::Le(do_subst(t)),
                Lit::Eq(t) => Lit::Eq(do_subst(t)),
                Lit::Neq(t) => Lit::Neq(do_subst(t)),
                Lit::Div(d, t, pos) => Lit::Div(d.clone(), do_subst(t), *pos),
            })
        }
    }
}

/// Collect lower-bound terms b such that some literal reads v >= b (i.e.
/// b - v <= 0 with v coefficient -1, or rearrangements), plus equality and
/// disequality contributions, following Cooper's B-set.
fn b_set(n: &NnfP, v: &str, out: &mut BTreeSet<PTerm>) {
    match n {
        NnfP::True | NnfP::False => {}
        NnfP::And(es) | NnfP::Or(es) => {
            for e in es {
                b_set(e, v, out);
            }
        }
        NnfP::Lit(l) => match l {
            Lit::Le(t) => {
                let (c, rest) = t.without(v);
                if c == BigInt::from(-1) {
                    // rest - v <= 0  =>  v >= rest, B gets rest
                    out.insert(rest);
                }
            }
            Lit::Eq(t) => {
                let (c, rest) = t.without(v);
                if c.is_one() {
                    // v + rest = 0 => v = -rest; B gets -rest - 1... Cooper
                    // uses b-1 for equalities on the lower side; simpler to
                    // add both -rest and -rest - 1.
                    let m = rest.scale(&BigInt::from(-1));
                    out.insert(m.add(&PTerm::constant(-1)));
                    out.insert(m);
                } else if c == BigInt::from(-1) {
                    out.insert(rest.add(&PTerm::constant(-1)));
                    out.insert(rest.clone());
                }
            }
            Lit::Neq(t) => {
                let (c, rest) = t.without(v);
                if c.is_one() {
                    let m = rest.scale(&BigInt::from(-1));
                    out.insert(m.clone());
                    out.insert(m.add(&PTerm::constant(1)));
                } else if c == BigInt::from(-1) {
                    out.insert(rest.clone());
                    out.insert(rest.add(&PTerm::constant(1)));
                }
            }
            Lit::Div(_, _, _) => {}
        },
    }
}

fn delta_lcm(n: &NnfP, v: &str, acc: &mut BigInt) {
    match n {
        NnfP::True | NnfP::False => {}
        NnfP::And(es) | NnfP::Or(es) => {
            for e in es {
                delta_lcm(e, v, acc);
            }
        }
        NnfP::Lit(Lit::Div(d, t, _)) => {
            if !t.coeff(v).is_zero() {
                *acc = acc.lcm(d);
            }
        }
        NnfP::Lit(_) => {}
    }
}

/// Eliminate one existential over a natural-number variable from a
/// quantifier-free body.
fn eliminate_exists(v: &str, body: &Pres) -> Pres {
    // v ranges over naturals: conjoin 0 <= v.
    let mut lower = PTerm::default();
    lower.coeffs.insert(v.to_string(), BigInt::from(-1));
    let body = Pres::and(vec![Pres::Le(lower), body.clone()]);
    let n = nnf(&body, false);

    let mut lambda = BigInt::one();
    lcm_of_coeffs(&n, v, &mut lambda);
    let mut n = unitize(&n, v, &lambda);
    if lambda > BigInt::one() {
        // after scaling, v stands for lambda * (old v): require lambda | v.
        n = NnfP::And(vec![n, NnfP::Lit(Lit::Div(lambda.clone(), PTerm::var(v), true))]);
    }

    let mut bs = BTreeSet::new();
    b_set(&n, v, &mut bs);
    let mut delta = BigInt::one();
    delta_lcm(&n, v, &mut delta);

    // Because 0 <= v contributes the lower bound 0, the minus-infinity
    // disjunct of Cooper's theorem is identically false and every satisfying
    // value is b + j for a lower bound b and 0 <= j < delta.
    let mut disjuncts = Vec::new();
    let delta_u: u64 = delta
        .clone()
        .try_into()
        .expect("divisibility moduli exceed u64; formula too large");
    for b in &bs {
        for j in 0..delta_u {
            let value = b.add(&PTerm::constant(BigInt::from(j)));
            disjuncts.push(nnf_to_pres(&subst(&n, v, &value)));
        }
    }
    simplify(&Pres::or(disjuncts))
}

/// Full quantifier elimination: returns an equivalent quantifier-free
/// formula over the remaining free variables.
pub fn eliminate(p: &Pres) -> Pres {
    match p {
        Pres::True | Pres::False | Pres::Le(_) | Pres::Eq(_) | Pres::Div(_, _) => simplify(p),
        Pres::Not(e) => simplify(&Pres::not(eliminate(e))),
        Pres::And(es) => simplify(&Pres::and(es.iter().map(eliminate).collect())),
        Pres::Or(es) => simplify(&Pres::or(es.iter().map(eliminate).collect())),
        Pres::Exists(v, e) => {
            let inner = eliminate(e);
            eliminate_exists(v, &inner)
        }
        Pres::Forall(v, e) => {
            let inner = eliminate(e);
            simplify(&Pres::not(eliminate_exists(v, &Pres::not(inner))))
        }
    }
}

/// Decide a sentence (formula with no free variables).
pub fn decide_sentence(p: &Pres) -> bool {
    let fv = p.free_vars();
    assert!(fv.is_empty(), "decide_sentence on open formula (free: {fv:?})");
    match simplify(&eliminate(p)) {
        Pres::True => true,
        Pres::False => false,
        other => other.eval_bounded(&BTreeMap::new(), 0),
    }
}

/// Syntactic simplification: constant folding, gcd reduction of atoms,
/// flattening. Keeps the formula quantifier-free if it was.
pub fn simplify(p: &Pres) -> Pres {
    match p {
        Pres::True => Pres::True,
        Pres::False => Pres::False,
        Pres::Le(t) => {
            if t.is_constant() {
                return if t.constant.is_positive() { Pres::False } else { Pres::True };
            }
            // divide by gcd of coefficients, flooring the constant
            let g = t
                .coeffs
                .values()
                .fold(BigInt::zero(), |acc, c| acc.gcd(c));
            if g > BigInt::one() {
                let mut out = PTerm {
                    coeffs: t.coeffs.iter().map(|(v, c)| (v.clone(), c / &g)).collect(),
                    constant: t.constant.div_floor(&g),
                };
                // t <= 0 with all variable parts divisible by g:
                // sum + c <= 0 <=> g*sum' <= -c <=> sum' <= floor(-c/g)
                // i.e. sum' - floor(-c/g) <= 0
                out.constant = -((-&t.constant).div_floor(&g));
                Pres::Le(out)
            } else {
                Pres::Le(t.clone())
            }
        }
        Pres::Eq(t) => {
            if t.is_constant() {
                return if t.constant.is_zero() { Pres::True } else { Pres::False };
            }
            let g = t.coeffs.values().fold(BigInt::zero(), |acc, c| acc.gcd(c));
            if g > BigInt::one() {
                if !t.constant.mod_floor(&g).is_zero() {
                    return Pres::False;
                }
                Pres::Eq(PTerm {
                    coeffs: t.coeffs.iter().map(|(v, c)| (v.clone(), c / &g)).collect(),
                    constant: &t.constant / &g,
                })
            } else {
                Pres::Eq(t.clone())
            }
        }
        Pres::Div(d, t) => {
            if d.is_one() {
                return Pres::True;
            }
            if t.is_constant() {
                return if t.constant.mod_floor(d).is_zero() { Pres::True } else { Pres::False };
            }
            // reduce content: gcd of variable coefficients that also divides d
            let g = t.coeffs.values().fold(d.clone(), |acc, c| acc.gcd(c));
            if !t.constant.mod_floor(&g).is_zero() && g == *d {
                // d | t with all coefficients divisible by d but constant not
                return Pres::False;
            }
            // normalize coefficients mod d
            let mut coeffs: BTreeMap<String, BigInt> = BTreeMap::new();
            for (v, c) in &t.coeffs {
                let r = c.mod_floor(d);
                if !r.is_zero() {
                    coeffs.insert(v.clone(), r);
                }
            }
            let constant = t.constant.mod_floor(d);
            if coeffs.is_empty() {
                return if constant.is_zero() { Pres::True } else { Pres::False };
            }
            Pres::Div(d.clone(), PTerm { coeffs, constant })
        }
        Pres::Not(e) => Pres::not(simplify(e)),
        Pres::And(es) => Pres::and(es.iter().map(simplify).collect()),
        Pres::Or(es) => Pres::or(es.iter().map(simplify).collect()),
        Pres::Exists(v, e) => Pres::exists(v, simplify(e)),
        Pres::Forall(v, e) => Pres::forall(v, simplify(e)),
    }
}

/// Check that two quantifier-free formulas agree on all assignments of their
/// free variables drawn from 0..=bound. Test helper.
pub fn agree_on_grid(a: &Pres, b: &Pres, bound: Int) -> Option<Valuation> {
    let mut vars: BTreeSet<String> = a.free_vars();
    vars.extend(b.free_vars());
    let vars: Vec<String> = vars.into_iter().collect();
    let mut v = Valuation::new();
    fn go(
        vars: &[String],
        i: usize,
        bound: Int,
        v: &mut Valuation,
        a: &Pres,
        b: &Pres,
    ) -> Option<Valuation> {
        if i == vars.len() {
            return if a.eval_qf(v) != b.eval_qf(v) { Some(v.clone()) } else { None };
        }
        for k in 0..=bound {
            v.insert(vars[i].clone(), k);
            if let Some(w) = go(vars, i + 1, bound, v, a, b) {
                return Some(w);
            }
        }
        v.remove(&vars[i]);
        None
    }
    go(&vars, 0, bound, &mut v, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tvar(n: &str) -> PTerm {
        PTerm::var(n)
    }

    #[test]
    fn decides_simple_sentences() {
        // exists y. 2y = 6  -- true over naturals
        let p = Pres::exists("y", Pres::Eq(tvar("y").scale(&BigInt::from(2)).sub(&PTerm::constant(6))));
        assert!(decide_sentence(&p));
        // exists y. 2y = 7 -- false
        let p = Pres::exists("y", Pres::Eq(tvar("y").scale(&BigInt::from(2)).sub(&PTerm::constant(7))));
        assert!(!decide_sentence(&p));
        // forall y. y >= 0 -- true over naturals
        let p = Pres::forall("y", Pres::Le(tvar("y").scale(&BigInt::from(-1))));
        assert!(decide_sentence(&p));
        // forall y. y <= 5 -- false
        let p = Pres::forall("y", Pres::Le(tvar("y").sub(&PTerm::constant(5))));
        assert!(!decide_sentence(&p));
        // exists y. y >= 3 & 3 | y
        let p = Pres::exists(
            "y",
            Pres::and(vec![
                Pres::Le(PTerm::constant(3).sub(&tvar("y"))),
                Pres::Div(BigInt::from(3), tvar("y")),
            ]),
        );
        assert!(decide_sentence(&p));
    }

    #[test]
    fn eliminates_to_equivalent_open_formula() {
        // exists y. (y <= t & y >= 2)  <=>  t >= 2
        let body = Pres::and(vec![
            Pres::Le(tvar("y").sub(&tvar("t"))),
            Pres::Le(PTerm::constant(2).sub(&tvar("y"))),
        ]);
        let elim = eliminate(&Pres::exists("y", body));
        assert!(elim.is_quantifier_free());
        let expect = Pres::Le(PTerm::constant(2).sub(&tvar("t")));
        assert_eq!(agree_on_grid(&elim, &expect, 8), None);
    }

    #[test]
    fn handles_coefficients_and_divisibility() {
        // exists y. (3y = t)  <=>  3 | t
        let body = Pres::Eq(tvar("y").scale(&BigInt::from(3)).sub(&tvar("t")));
        let elim = eliminate(&Pres::exists("y", body));
        let expect = Pres::Div(BigInt::from(3), tvar("t"));
        assert_eq!(agree_on_grid(&elim, &expect, 12), None);
    }

    #[test]
    fn forall_via_duality() {
        // forall y. (y >= 1 -> y + t >= 2): at t = 0, y = 1 is a
        // counterexample, so the formula is equivalent to t >= 1.
        let body = Pres::or(vec![
            Pres::Le(tvar("y")), // y <= 0, i.e. !(y >= 1)
            Pres::Le(PTerm::constant(2).sub(&tvar("y")).sub(&tvar("t"))),
        ]);
        let elim = eliminate(&Pres::forall("y", body));
        let expect = Pres::Le(PTerm::constant(1).sub(&tvar("t")));
        assert_eq!(agree_on_grid(&elim, &expect, 8), None);
    }

    #[test]
    fn simplify_folds_constants() {
        assert_eq!(simplify(&Pres::Le(PTerm::constant(-3))), Pres::True);
        assert_eq!(simplify(&Pres::Le(PTerm::constant(1))), Pres::False);
        assert_eq!(simplify(&Pres::Div(BigInt::from(4), PTerm::constant(8))), Pres::True);
        assert_eq!(simplify(&Pres::Div(BigInt::from(4), PTerm::constant(9))), Pres::False);
        // 2t - 3 <= 0 simplifies to t - 1 <= 0 over integers
        let s = simplify(&Pres::Le(tvar("t").scale(&BigInt::from(2)).sub(&PTerm::constant(3))));
        assert_eq!(s, Pres::Le(tvar("t").sub(&PTerm::constant(1))));
    }

    /// Randomized cross-check of elimination against bounded enumeration.
    #[test]
    fn random_formulas_match_bounded_oracle() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let f = random_formula(&mut rng, 2);
            let q = Pres::exists("y", f.clone());
            let elim = eliminate(&q);
            assert!(elim.is_quantifier_free());
            // witnesses for these shapes are bounded well under 40
            for t in 0..6 {
                for u in 0..6 {
                    let mut v: BTreeMap<String, BigInt> = BTreeMap::new();
                    v.insert("t".into(), BigInt::from(t));
                    v.insert("u".into(), BigInt::from(u));
                    let want = q.eval_bounded(&v, 40);
                    let got = elim.eval_bounded(&v, 0);
                    assert_eq!(want, got, "mismatch on {q} at t={t}, u={u}: got {elim}");
                }
            }
        }
    }

    fn random_term(rng: &mut impl rand::Rng) -> PTerm {
        let mut t = PTerm::constant(rng.gen_range(-4..=4));
        for name in ["y", "t", "u"] {
            if rng.gen_bool(0.5) {
                t = t.add(&PTerm::var(name).scale(&BigInt::from(rng.gen_range(-2i64..=2))));
            }
        }
        t
    }

    fn random_formula(rng: &mut impl rand::Rng, depth: u32) -> Pres {
        if depth == 0 || rng.gen_bool(0.4) {
            return match rng.gen_range(0..3) {
                0 => Pres::Le(random_term(rng)),
                1 => Pres::Eq(random_term(rng)),
                _ => Pres::Div(BigInt::from(rng.gen_range(2..=4)), random_term(rng)),
            };
        }
        match rng.gen_range(0..3) {
            0 => Pres::and(vec![random_formula(rng, depth - 1), random_formula(rng, depth - 1)]),
            1 => Pres::or(vec![random_formula(rng, depth - 1), random_formula(rng, depth - 1)]),
            _ => Pres::not(random_formula(rng, depth - 1)),
        }
    }
}
