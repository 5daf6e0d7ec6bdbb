//! Linear terms, clock/parameter atoms and guard expressions, together with
//! the rewriting into the disjunctive normal form over the restricted
//! comparison set {=, <=, >=, =mod[a]<=, =mod[a]>=} that the rest of the
//! pipeline consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Int = i64;

/// Assignment of natural numbers to parameter names.
pub type Valuation = BTreeMap<String, Int>;

/// Linear term over parameters with integer coefficients and constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinearTerm {
    pub coeffs: BTreeMap<String, Int>,
    pub constant: Int,
}

impl LinearTerm {
    pub fn constant(c: Int) -> Self {
        LinearTerm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), 1);
        LinearTerm { coeffs, constant: 0 }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinearTerm) -> LinearTerm {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert(0);
            *e += c;
            if *e == 0 {
                out.coeffs.remove(v);
            }
        }
        out.constant += other.constant;
        out
    }

    pub fn neg(&self) -> LinearTerm {
        self.scale(-1)
    }

    pub fn sub(&self, other: &LinearTerm) -> LinearTerm {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: Int) -> LinearTerm {
        if k == 0 {
            return LinearTerm::constant(0);
        }
        LinearTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn plus_const(&self, c: Int) -> LinearTerm {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub fn eval(&self, v: &Valuation) -> Int {
        let mut acc = self.constant;
        for (name, c) in &self.coeffs {
            let val = v.get(name).copied().unwrap_or_else(|| panic!("unbound parameter {name}"));
            acc += c * val;
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }
}

impl fmt::Display for LinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if *c == 0 {
                continue;
            }
            if first {
                if *c == 1 {
                    write!(f, "{v}")?;
                } else if *c == -1 {
                    write!(f, "-{v}")?;
                } else {
                    write!(f, "{c}*{v}")?;
                }
                first = false;
            } else if *c > 0 {
                if *c == 1 {
                    write!(f, "+{v}")?;
                } else {
                    write!(f, "+{c}*{v}")?;
                }
            } else if *c == -1 {
                write!(f, "-{v}")?;
            } else {
                write!(f, "{c}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant > 0 {
            write!(f, "+{}", self.constant)?;
        } else if self.constant < 0 {
            write!(f, "{}", self.constant)?;
        }
        Ok(())
    }
}

/// Comparison operators, including the bounded congruences =mod[a]<= and
/// =mod[a]>= (congruent modulo a, and on the small/large side of the bound).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    ModLe(Int),
    ModGe(Int),
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Eq => write!(f, "="),
            CmpOp::Lt => write!(f, "<"),
            CmpOp::Le => write!(f, "<="),
            CmpOp::Gt => write!(f, ">"),
            CmpOp::Ge => write!(f, ">="),
            CmpOp::ModLe(a) => write!(f, "=mod[{a}]<="),
            CmpOp::ModGe(a) => write!(f, "=mod[{a}]>="),
        }
    }
}

pub fn eval_cmp(lhs: Int, op: CmpOp, rhs: Int) -> bool {
    match op {
        CmpOp::Eq => lhs == rhs,
        CmpOp::Lt => lhs < rhs,
        CmpOp::Le => lhs <= rhs,
        CmpOp::Gt => lhs > rhs,
        CmpOp::Ge => lhs >= rhs,
        CmpOp::ModLe(a) => (lhs - rhs).rem_euclid(a) == 0 && lhs <= rhs,
        CmpOp::ModGe(a) => (lhs - rhs).rem_euclid(a) == 0 && lhs >= rhs,
    }
}

/// Clock atom `x op rhs` with the clock on the left.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct XAtom {
    pub op: CmpOp,
    pub rhs: LinearTerm,
}

impl XAtom {
    pub fn new(op: CmpOp, rhs: LinearTerm) -> Self {
        XAtom { op: collapse_mod1(op), rhs }
    }

    pub fn eval(&self, x: Int, v: &Valuation) -> bool {
        eval_cmp(x, self.op, self.rhs.eval(v))
    }

    /// Substitute x := x + tau. All supported operators are shift invariant,
    /// so the shift moves to the right-hand side.
    pub fn shift_clock(&self, tau: Int) -> XAtom {
        XAtom { op: self.op, rhs: self.rhs.plus_const(-tau) }
    }

    /// Substitute x := term, turning the clock atom into a parameter atom.
    pub fn subst_clock(&self, term: &LinearTerm) -> ThetaAtom {
        ThetaAtom { lhs: term.clone(), op: self.op, rhs: self.rhs.clone() }
    }

    /// Truth value holding for every clock value and parameter valuation over
    /// the naturals, when one can be read off the atom's shape.
    pub fn known(&self) -> Option<bool> {
        // with nonpositive coefficients the bound is at most its constant
        let bound_le = self.rhs.coeffs.values().all(|c| *c <= 0);
        match self.op {
            CmpOp::Ge => (bound_le && self.rhs.constant <= 0).then_some(true),
            CmpOp::Gt => (bound_le && self.rhs.constant < 0).then_some(true),
            CmpOp::Le | CmpOp::Eq | CmpOp::ModLe(_) => {
                (bound_le && self.rhs.constant < 0).then_some(false)
            }
            CmpOp::Lt => (bound_le && self.rhs.constant <= 0).then_some(false),
            CmpOp::ModGe(_) => None,
        }
    }
}

impl fmt::Display for XAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x {} {}", self.op, self.rhs)
    }
}

/// Parameter atom `lhs op rhs` (no clock on either side).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaAtom {
    pub lhs: LinearTerm,
    pub op: CmpOp,
    pub rhs: LinearTerm,
}

impl ThetaAtom {
    pub fn new(lhs: LinearTerm, op: CmpOp, rhs: LinearTerm) -> Self {
        ThetaAtom { lhs, op: collapse_mod1(op), rhs }
    }

    pub fn eval(&self, v: &Valuation) -> bool {
        eval_cmp(self.lhs.eval(v), self.op, self.rhs.eval(v))
    }

    /// Truth value holding for every parameter valuation over the naturals,
    /// when one can be read off the atom's shape. Every operator depends only
    /// on the difference lhs - rhs, whose range is one-sided whenever its
    /// coefficients share a sign.
    pub fn known(&self) -> Option<bool> {
        let d = self.lhs.sub(&self.rhs);
        if d.is_constant() {
            return Some(eval_cmp(d.constant, self.op, 0));
        }
        let d_ge = d.coeffs.values().all(|c| *c >= 0);
        let d_le = d.coeffs.values().all(|c| *c <= 0);
        let at_const = eval_cmp(d.constant, self.op, 0);
        match self.op {
            CmpOp::Le | CmpOp::Lt => {
                if d_le && at_const {
                    Some(true)
                } else if d_ge && !at_const {
                    Some(false)
                } else {
                    None
                }
            }
            CmpOp::Ge | CmpOp::Gt => {
                if d_ge && at_const {
                    Some(true)
                } else if d_le && !at_const {
                    Some(false)
                } else {
                    None
                }
            }
            CmpOp::Eq => {
                if (d_ge && d.constant > 0) || (d_le && d.constant < 0) {
                    Some(false)
                } else {
                    None
                }
            }
            CmpOp::ModLe(_) => (d_ge && d.constant > 0).then_some(false),
            CmpOp::ModGe(_) => (d_le && d.constant < 0).then_some(false),
        }
    }
}

impl fmt::Display for ThetaAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

fn collapse_mod1(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::ModLe(1) => CmpOp::Le,
        CmpOp::ModGe(1) => CmpOp::Ge,
        other => other,
    }
}

/// Duration atoms appearing in duration formula clauses. The first type pins
/// the duration exactly or to an arithmetic progression, optionally offset by
/// -x; the second type bounds it from above by term - x.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TAtom {
    /// t = term
    EqTerm(LinearTerm),
    /// t congruent to term mod a and t >= term
    ModGeTerm(Int, LinearTerm),
    /// t = term - x
    EqTermMinusX(LinearTerm),
    /// t congruent to (term - x) mod a and t >= term - x
    ModGeTermMinusX(Int, LinearTerm),
    /// t <= term - x
    LeTermMinusX(LinearTerm),
}

/// Result of substituting t := alpha - x into a first-type duration atom: the
/// constraint stops mentioning t and becomes a clock or parameter atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubstResult {
    X(XAtom),
    Theta(ThetaAtom),
}

impl TAtom {
    pub fn eval(&self, t: Int, x: Int, v: &Valuation) -> bool {
        match self {
            TAtom::EqTerm(a) => t == a.eval(v),
            TAtom::ModGeTerm(m, a) => eval_cmp(t, CmpOp::ModGe(*m), a.eval(v)),
            TAtom::EqTermMinusX(a) => t == a.eval(v) - x,
            TAtom::ModGeTermMinusX(m, a) => eval_cmp(t, CmpOp::ModGe(*m), a.eval(v) - x),
            TAtom::LeTermMinusX(a) => t <= a.eval(v) - x,
        }
    }

    /// Substitute t := alpha - x (first-type atoms only).
    pub fn subst_t_alpha_minus_x(&self, alpha: &LinearTerm) -> SubstResult {
        match self {
            TAtom::EqTerm(a1) => SubstResult::X(XAtom::new(CmpOp::Eq, alpha.sub(a1))),
            TAtom::ModGeTerm(m, a1) => SubstResult::X(XAtom::new(CmpOp::ModLe(*m), alpha.sub(a1))),
            TAtom::EqTermMinusX(a1) => {
                SubstResult::Theta(ThetaAtom::new(alpha.clone(), CmpOp::Eq, a1.clone()))
            }
            TAtom::ModGeTermMinusX(m, a1) => {
                SubstResult::Theta(ThetaAtom::new(alpha.clone(), CmpOp::ModGe(*m), a1.clone()))
            }
            TAtom::LeTermMinusX(_) => panic!("t := alpha - x applies to first-type atoms only"),
        }
    }

    /// Substitute x := alpha inside the atom (first-type atoms only).
    pub fn subst_x_alpha(&self, alpha: &LinearTerm) -> TAtom {
        match self {
            TAtom::EqTermMinusX(a1) => TAtom::EqTerm(a1.sub(alpha)),
            TAtom::ModGeTermMinusX(m, a1) => TAtom::ModGeTerm(*m, a1.sub(alpha)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for TAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TAtom::EqTerm(a) => write!(f, "t = {a}"),
            TAtom::ModGeTerm(m, a) => write!(f, "t =mod[{m}]>= {a}"),
            TAtom::EqTermMinusX(a) => write!(f, "t = ({a})-x"),
            TAtom::ModGeTermMinusX(m, a) => write!(f, "t =mod[{m}]>= ({a})-x"),
            TAtom::LeTermMinusX(a) => write!(f, "t <= ({a})-x"),
        }
    }
}

/// Boolean combination of clock and parameter atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    True,
    False,
    X(XAtom),
    Theta(ThetaAtom),
    Not(Box<GuardExpr>),
    And(Vec<GuardExpr>),
    Or(Vec<GuardExpr>),
}

impl GuardExpr {
    pub fn and(parts: Vec<GuardExpr>) -> GuardExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                GuardExpr::True => {}
                GuardExpr::False => return GuardExpr::False,
                GuardExpr::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => GuardExpr::True,
            1 => out.pop().unwrap(),
            _ => GuardExpr::And(out),
        }
    }

    pub fn or(parts: Vec<GuardExpr>) -> GuardExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                GuardExpr::False => {}
                GuardExpr::True => return GuardExpr::True,
                GuardExpr::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => GuardExpr::False,
            1 => out.pop().unwrap(),
            _ => GuardExpr::Or(out),
        }
    }

    pub fn not(e: GuardExpr) -> GuardExpr {
        match e {
            GuardExpr::True => GuardExpr::False,
            GuardExpr::False => GuardExpr::True,
            GuardExpr::Not(inner) => *inner,
            other => GuardExpr::Not(Box::new(other)),
        }
    }

    pub fn eval(&self, x: Int, v: &Valuation) -> bool {
        match self {
            GuardExpr::True => true,
            GuardExpr::False => false,
            GuardExpr::X(a) => a.eval(x, v),
            GuardExpr::Theta(a) => a.eval(v),
            GuardExpr::Not(e) => !e.eval(x, v),
            GuardExpr::And(es) => es.iter().all(|e| e.eval(x, v)),
            GuardExpr::Or(es) => es.iter().any(|e| e.eval(x, v)),
        }
    }

    /// Substitute x := x + tau.
    pub fn shift_clock(&self, tau: Int) -> GuardExpr {
        self.map_atoms(&|a: &XAtom| GuardExpr::X(a.shift_clock(tau)))
    }

    /// Substitute x := term; the result has no clock atoms.
    pub fn subst_clock(&self, term: &LinearTerm) -> GuardExpr {
        self.map_atoms(&|a: &XAtom| GuardExpr::Theta(a.subst_clock(term)))
    }

    fn map_atoms(&self, f: &dyn Fn(&XAtom) -> GuardExpr) -> GuardExpr {
        match self {
            GuardExpr::True => GuardExpr::True,
            GuardExpr::False => GuardExpr::False,
            GuardExpr::X(a) => f(a),
            GuardExpr::Theta(a) => GuardExpr::Theta(a.clone()),
            GuardExpr::Not(e) => GuardExpr::not(e.map_atoms(f)),
            GuardExpr::And(es) => GuardExpr::and(es.iter().map(|e| e.map_atoms(f)).collect()),
            GuardExpr::Or(es) => GuardExpr::or(es.iter().map(|e| e.map_atoms(f)).collect()),
        }
    }

    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            GuardExpr::True | GuardExpr::False => {}
            GuardExpr::X(a) => out.extend(a.rhs.vars().cloned()),
            GuardExpr::Theta(a) => {
                out.extend(a.lhs.vars().cloned());
                out.extend(a.rhs.vars().cloned());
            }
            GuardExpr::Not(e) => e.params(out),
            GuardExpr::And(es) | GuardExpr::Or(es) => {
                for e in es {
                    e.params(out);
                }
            }
        }
    }

    /// Guard mentions the clock somewhere.
    pub fn mentions_clock(&self) -> bool {
        match self {
            GuardExpr::True | GuardExpr::False | GuardExpr::Theta(_) => false,
            GuardExpr::X(_) => true,
            GuardExpr::Not(e) => e.mentions_clock(),
            GuardExpr::And(es) | GuardExpr::Or(es) => es.iter().any(|e| e.mentions_clock()),
        }
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardExpr::True => write!(f, "true"),
            GuardExpr::False => write!(f, "false"),
            GuardExpr::X(a) => write!(f, "{a}"),
            GuardExpr::Theta(a) => write!(f, "{a}"),
            GuardExpr::Not(e) => write!(f, "!({e})"),
            GuardExpr::And(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" & "))
            }
            GuardExpr::Or(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", parts.join(" | "))
            }
        }
    }
}

/// Conjunction of clock and parameter atoms with operators restricted to
/// {=, <=, >=, =mod<=, =mod>=}, one disjunct of a normal form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Conjunct {
    pub xs: Vec<XAtom>,
    pub thetas: Vec<ThetaAtom>,
}

fn gcd(a: Int, b: Int) -> Int {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// One-dimensional constraint summary for atoms sharing a variable part:
/// interval bounds and congruences on the constant offset.
#[derive(Default)]
struct Group {
    lo: Option<Int>,
    hi: Option<Int>,
    congs: Vec<(Int, Int)>,
}

impl Group {
    fn record(&mut self, op: CmpOp, c: Int) {
        match op {
            CmpOp::Eq => {
                self.lo = Some(self.lo.map_or(c, |v| v.max(c)));
                self.hi = Some(self.hi.map_or(c, |v| v.min(c)));
            }
            CmpOp::Lt => self.hi = Some(self.hi.map_or(c - 1, |v| v.min(c - 1))),
            CmpOp::Le => self.hi = Some(self.hi.map_or(c, |v| v.min(c))),
            CmpOp::Gt => self.lo = Some(self.lo.map_or(c + 1, |v| v.max(c + 1))),
            CmpOp::Ge => self.lo = Some(self.lo.map_or(c, |v| v.max(c))),
            CmpOp::ModLe(m) => {
                self.hi = Some(self.hi.map_or(c, |v| v.min(c)));
                self.congs.push((m, c));
            }
            CmpOp::ModGe(m) => {
                self.lo = Some(self.lo.map_or(c, |v| v.max(c)));
                self.congs.push((m, c));
            }
        }
    }

    /// The recorded constraints force `value op c`. Only sound on groups
    /// read off normalized conjuncts (at most one congruence, snapped
    /// bounds); an empty group constrains nothing and implies nothing.
    fn implies(&self, op: CmpOp, c: Int) -> bool {
        let cong_ok = |m: Int| {
            if self.lo.is_some() && self.lo == self.hi {
                return (self.lo.unwrap() - c).rem_euclid(m) == 0;
            }
            self.congs.iter().any(|&(m2, c2)| m2 % m == 0 && (c2 - c).rem_euclid(m) == 0)
        };
        match op {
            CmpOp::Le => self.hi.is_some_and(|h| h <= c),
            CmpOp::Lt => self.hi.is_some_and(|h| h < c),
            CmpOp::Ge => self.lo.is_some_and(|l| l >= c),
            CmpOp::Gt => self.lo.is_some_and(|l| l > c),
            CmpOp::Eq => self.lo == Some(c) && self.hi == Some(c),
            CmpOp::ModLe(m) => self.hi.is_some_and(|h| h <= c) && cong_ok(m),
            CmpOp::ModGe(m) => self.lo.is_some_and(|l| l >= c) && cong_ok(m),
        }
    }

    /// Minimal set of atoms (as operator and offset) equivalent to the
    /// recorded constraints, or None when they contradict each other.
    fn solve(self) -> Option<Vec<(CmpOp, Int)>> {
        // merge the congruences by CRT
        let mut cong: Option<(Int, Int)> = None;
        for (m, c) in self.congs {
            cong = match cong {
                None => Some((m, c.rem_euclid(m))),
                Some((m1, c1)) => {
                    let g = gcd(m1, m);
                    if (c1 - c).rem_euclid(g) != 0 {
                        return None;
                    }
                    let l = m1 / g * m;
                    let mut merged = None;
                    for k in 0..(l / m1) {
                        let cand = c1 + m1 * k;
                        if (cand - c).rem_euclid(m) == 0 {
                            merged = Some((l, cand.rem_euclid(l)));
                            break;
                        }
                    }
                    merged
                }
            };
            if cong.is_none() {
                return None;
            }
        }
        if let Some((1, _)) = cong {
            cong = None;
        }
        // snap the bounds onto the congruence class
        let (mut lo, mut hi) = (self.lo, self.hi);
        if let Some((m, c)) = cong {
            lo = lo.map(|l| l + (c - l).rem_euclid(m));
            hi = hi.map(|h| h - (h - c).rem_euclid(m));
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return None;
            }
        }
        let mut out = Vec::new();
        match (cong, lo, hi) {
            (None, Some(l), Some(h)) if l == h => out.push((CmpOp::Eq, l)),
            (None, l, h) => {
                if let Some(l) = l {
                    out.push((CmpOp::Ge, l));
                }
                if let Some(h) = h {
                    out.push((CmpOp::Le, h));
                }
            }
            (Some(_), Some(l), Some(h)) if l == h => out.push((CmpOp::Eq, l)),
            (Some((m, _)), Some(l), h) => {
                out.push((CmpOp::ModGe(m), l));
                if let Some(h) = h {
                    out.push((CmpOp::Le, h));
                }
            }
            (Some((m, _)), None, Some(h)) => out.push((CmpOp::ModLe(m), h)),
            (Some(_), None, None) => unreachable!("congruence without a bound"),
        }
        Some(out)
    }
}

impl Conjunct {
    pub fn eval(&self, x: Int, v: &Valuation) -> bool {
        self.xs.iter().all(|a| a.eval(x, v)) && self.thetas.iter().all(|a| a.eval(v))
    }

    pub fn to_guard(&self) -> GuardExpr {
        let mut parts: Vec<GuardExpr> = self.xs.iter().cloned().map(GuardExpr::X).collect();
        parts.extend(self.thetas.iter().cloned().map(GuardExpr::Theta));
        GuardExpr::and(parts)
    }

    /// A conjunct no valuation satisfies.
    fn impossible() -> Conjunct {
        Conjunct {
            xs: vec![],
            thetas: vec![ThetaAtom::new(
                LinearTerm::constant(0),
                CmpOp::Eq,
                LinearTerm::constant(1),
            )],
        }
    }

    /// Canonicalize: atoms sharing the same variable part collapse into the
    /// tightest interval plus at most one congruence (merged by CRT), atoms
    /// true over the whole domain are dropped, and detected contradictions
    /// turn the conjunct into an impossible one.
    pub(crate) fn normalize(&mut self) {
        if self.tighten().is_none() {
            *self = Conjunct::impossible();
        }
    }

    fn tighten(&mut self) -> Option<()> {
        if self.xs.iter().any(|a| a.known() == Some(false))
            || self.thetas.iter().any(|a| a.known() == Some(false))
        {
            return None;
        }
        // clock atoms compare x against a bound term; group by the bound's
        // variable part with its constant offset as the one-dimensional value
        let mut xg: BTreeMap<BTreeMap<String, Int>, Group> = BTreeMap::new();
        for a in &self.xs {
            xg.entry(a.rhs.coeffs.clone()).or_default().record(a.op, a.rhs.constant);
        }
        let mut xs = Vec::new();
        for (key, g) in xg {
            for (op, c) in g.solve()? {
                let a = XAtom::new(op, LinearTerm { coeffs: key.clone(), constant: c });
                if a.known() != Some(true) {
                    if a.known() == Some(false) {
                        return None;
                    }
                    xs.push(a);
                }
            }
        }
        // parameter atoms constrain the variable part of lhs - rhs; all
        // operators are translation invariant, so (value + c) op 0 reads as
        // value op -c
        let mut tg: BTreeMap<BTreeMap<String, Int>, Group> = BTreeMap::new();
        for a in &self.thetas {
            let d = a.lhs.sub(&a.rhs);
            tg.entry(d.coeffs.clone()).or_default().record(a.op, -d.constant);
        }
        let mut thetas = Vec::new();
        for (key, g) in tg {
            for (op, c) in g.solve()? {
                let a = ThetaAtom::new(
                    LinearTerm { coeffs: key.clone(), constant: 0 },
                    op,
                    LinearTerm::constant(c),
                );
                match a.known() {
                    Some(true) => {}
                    Some(false) => return None,
                    None => thetas.push(a),
                }
            }
        }
        xs.sort();
        xs.dedup();
        thetas.sort();
        thetas.dedup();
        self.xs = xs;
        self.thetas = thetas;
        Some(())
    }

    /// Cheap syntactic unsatisfiability detection on normalized conjuncts.
    pub(crate) fn obviously_false(&self) -> bool {
        self.xs.iter().any(|a| a.known() == Some(false))
            || self.thetas.iter().any(|a| a.known() == Some(false))
    }

    /// Group summaries of all atoms, keyed by variable part, for fast
    /// repeated implication checks.
    fn summaries(&self) -> (BTreeMap<BTreeMap<String, Int>, Group>, BTreeMap<BTreeMap<String, Int>, Group>) {
        let mut xg: BTreeMap<BTreeMap<String, Int>, Group> = BTreeMap::new();
        for a in &self.xs {
            xg.entry(a.rhs.coeffs.clone()).or_default().record(a.op, a.rhs.constant);
        }
        let mut tg: BTreeMap<BTreeMap<String, Int>, Group> = BTreeMap::new();
        for a in &self.thetas {
            let d = a.lhs.sub(&a.rhs);
            tg.entry(d.coeffs).or_default().record(a.op, -d.constant);
        }
        (xg, tg)
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.xs.iter().map(|a| a.to_string()).collect();
        parts.extend(self.thetas.iter().map(|a| a.to_string()));
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(" & "))
        }
    }
}

/// Disjunctive normal form: a list of conjuncts, empty list meaning false.
pub type DnfGuard = Vec<Conjunct>;

enum Nnf {
    X(XAtom),
    Theta(ThetaAtom),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn pos_x(op: CmpOp, rhs: LinearTerm) -> Nnf {
    match op {
        CmpOp::Lt => Nnf::X(XAtom::new(CmpOp::Le, rhs.plus_const(-1))),
        CmpOp::Gt => Nnf::X(XAtom::new(CmpOp::Ge, rhs.plus_const(1))),
        other => Nnf::X(XAtom::new(other, rhs)),
    }
}

fn neg_x(op: CmpOp, rhs: LinearTerm) -> Nnf {
    match op {
        CmpOp::Eq => Nnf::Or(vec![
            Nnf::X(XAtom::new(CmpOp::Le, rhs.plus_const(-1))),
            Nnf::X(XAtom::new(CmpOp::Ge, rhs.plus_const(1))),
        ]),
        CmpOp::Le => Nnf::X(XAtom::new(CmpOp::Ge, rhs.plus_const(1))),
        CmpOp::Ge => Nnf::X(XAtom::new(CmpOp::Le, rhs.plus_const(-1))),
        CmpOp::Lt => Nnf::X(XAtom::new(CmpOp::Ge, rhs)),
        CmpOp::Gt => Nnf::X(XAtom::new(CmpOp::Le, rhs)),
        CmpOp::ModLe(a) => {
            let mut parts = vec![Nnf::X(XAtom::new(CmpOp::Ge, rhs.plus_const(1)))];
            for b in 1..a {
                parts.push(Nnf::X(XAtom::new(CmpOp::ModLe(a), rhs.plus_const(-b))));
            }
            Nnf::Or(parts)
        }
        CmpOp::ModGe(a) => {
            let mut parts = vec![Nnf::X(XAtom::new(CmpOp::Le, rhs.plus_const(-1)))];
            for b in 1..a {
                parts.push(Nnf::X(XAtom::new(CmpOp::ModGe(a), rhs.plus_const(b))));
            }
            Nnf::Or(parts)
        }
    }
}

fn pos_theta(lhs: LinearTerm, op: CmpOp, rhs: LinearTerm) -> Nnf {
    match op {
        CmpOp::Lt => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Le, rhs.plus_const(-1))),
        CmpOp::Gt => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Ge, rhs.plus_const(1))),
        other => Nnf::Theta(ThetaAtom::new(lhs, other, rhs)),
    }
}

fn neg_theta(lhs: LinearTerm, op: CmpOp, rhs: LinearTerm) -> Nnf {
    match op {
        CmpOp::Eq => Nnf::Or(vec![
            Nnf::Theta(ThetaAtom::new(lhs.clone(), CmpOp::Le, rhs.plus_const(-1))),
            Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Ge, rhs.plus_const(1))),
        ]),
        CmpOp::Le => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Ge, rhs.plus_const(1))),
        CmpOp::Ge => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Le, rhs.plus_const(-1))),
        CmpOp::Lt => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Ge, rhs)),
        CmpOp::Gt => Nnf::Theta(ThetaAtom::new(lhs, CmpOp::Le, rhs)),
        CmpOp::ModLe(a) => {
            let mut parts = vec![Nnf::Theta(ThetaAtom::new(lhs.clone(), CmpOp::Ge, rhs.plus_const(1)))];
            for b in 1..a {
                parts.push(Nnf::Theta(ThetaAtom::new(lhs.clone(), CmpOp::ModLe(a), rhs.plus_const(-b))));
            }
            Nnf::Or(parts)
        }
        CmpOp::ModGe(a) => {
            let mut parts = vec![Nnf::Theta(ThetaAtom::new(lhs.clone(), CmpOp::Le, rhs.plus_const(-1)))];
            for b in 1..a {
                parts.push(Nnf::Theta(ThetaAtom::new(lhs.clone(), CmpOp::ModGe(a), rhs.plus_const(b))));
            }
            Nnf::Or(parts)
        }
    }
}

fn to_nnf(e: &GuardExpr, negated: bool) -> Option<Nnf> {
    match (e, negated) {
        (GuardExpr::True, false) | (GuardExpr::False, true) => Some(Nnf::And(vec![])),
        (GuardExpr::True, true) | (GuardExpr::False, false) => None,
        (GuardExpr::X(a), false) => Some(pos_x(a.op, a.rhs.clone())),
        (GuardExpr::X(a), true) => Some(neg_x(a.op, a.rhs.clone())),
        (GuardExpr::Theta(a), false) => Some(pos_theta(a.lhs.clone(), a.op, a.rhs.clone())),
        (GuardExpr::Theta(a), true) => Some(neg_theta(a.lhs.clone(), a.op, a.rhs.clone())),
        (GuardExpr::Not(inner), n) => to_nnf(inner, !n),
        (GuardExpr::And(es), false) | (GuardExpr::Or(es), true) => {
            let mut parts = Vec::new();
            for x in es {
                match to_nnf(x, negated) {
                    Some(p) => parts.push(p),
                    None => return None,
                }
            }
            Some(Nnf::And(parts))
        }
        (GuardExpr::Or(es), false) | (GuardExpr::And(es), true) => {
            let mut parts = Vec::new();
            for x in es {
                if let Some(p) = to_nnf(x, negated) {
                    parts.push(p);
                }
            }
            Some(Nnf::Or(parts))
        }
    }
}

fn distribute(n: &Nnf) -> DnfGuard {
    match n {
        Nnf::X(a) => vec![Conjunct { xs: vec![a.clone()], thetas: vec![] }],
        Nnf::Theta(a) => vec![Conjunct { xs: vec![], thetas: vec![a.clone()] }],
        Nnf::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(distribute(p));
            }
            out
        }
        Nnf::And(parts) => {
            let mut acc = vec![Conjunct::default()];
            for p in parts {
                let d = distribute(p);
                let mut next = Vec::new();
                for c in &acc {
                    for dc in &d {
                        let mut merged = c.clone();
                        merged.xs.extend(dc.xs.iter().cloned());
                        merged.thetas.extend(dc.thetas.iter().cloned());
                        merged.normalize();
                        if !merged.obviously_false() {
                            next.push(merged);
                        }
                    }
                }
                acc = prune_dnf(next);
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
    }
}

/// Rewrite an arbitrary guard expression into disjunctive normal form over the
/// restricted operator set. Negations of equalities split into strict bounds
/// (then tightened to non-strict), negated congruences enumerate the nonzero
/// residue shifts.
/// Canonicalize a guard through its pruned disjunctive normal form. Keeps
/// formulas produced by the symbolic constructions small enough to negate.
pub fn canon_guard(e: &GuardExpr) -> GuardExpr {
    let dnf = to_normal_form(e);
    GuardExpr::or(dnf.iter().map(Conjunct::to_guard).collect())
}

pub fn to_normal_form(e: &GuardExpr) -> DnfGuard {
    let nnf = match to_nnf(e, false) {
        Some(n) => n,
        None => return vec![],
    };
    let mut dnf = distribute(&nnf);
    for c in &mut dnf {
        c.normalize();
    }
    prune_dnf(dnf)
}

/// Join disjuncts that agree everywhere except in one variable-part group
/// whose interval constraints overlap or touch; the union of such a run of
/// intervals is a single conjunct again. Atoms shared by the whole bucket
/// (including congruences on the merge group) stay untouched, which is
/// sound by distributivity. One pass; returns whether anything was joined.
fn merge_pass(dnf: DnfGuard) -> (bool, DnfGuard) {
    type Iv = (usize, Option<Int>, Option<Int>);
    let plain = |op: CmpOp| matches!(op, CmpOp::Ge | CmpOp::Le | CmpOp::Eq);
    // bucket index: (clock group?, merge key, conjunct minus the group's
    // interval atoms) -> intervals of that group across the disjuncts
    let mut buckets: BTreeMap<(bool, BTreeMap<String, Int>, Conjunct), Vec<Iv>> = BTreeMap::new();
    for (i, c) in dnf.iter().enumerate() {
        let xkeys: BTreeSet<_> =
            c.xs.iter().filter(|a| plain(a.op)).map(|a| a.rhs.coeffs.clone()).collect();
        for key in xkeys {
            let mut sig = c.clone();
            let mut g = Group::default();
            sig.xs.retain(|a| {
                let hit = plain(a.op) && a.rhs.coeffs == key;
                if hit {
                    g.record(a.op, a.rhs.constant);
                }
                !hit
            });
            buckets.entry((true, key, sig)).or_default().push((i, g.lo, g.hi));
        }
        let tkeys: BTreeSet<_> = c
            .thetas
            .iter()
            .filter(|a| plain(a.op))
            .map(|a| a.lhs.sub(&a.rhs).coeffs)
            .collect();
        for key in tkeys {
            let mut sig = c.clone();
            let mut g = Group::default();
            sig.thetas.retain(|a| {
                let d = a.lhs.sub(&a.rhs);
                let hit = plain(a.op) && d.coeffs == key;
                if hit {
                    g.record(a.op, -d.constant);
                }
                !hit
            });
            buckets.entry((false, key, sig)).or_default().push((i, g.lo, g.hi));
        }
    }
    let mut consumed = vec![false; dnf.len()];
    let mut out = Vec::new();
    let mut changed = false;
    for ((clock, key, sig), mut iv) in buckets {
        iv.retain(|&(i, _, _)| !consumed[i]);
        if iv.len() < 2 {
            continue;
        }
        iv.sort_by_key(|&(_, lo, _)| (lo.is_some(), lo));
        let mut runs: Vec<(Vec<usize>, Option<Int>, Option<Int>)> = Vec::new();
        for (i, lo, hi) in iv {
            if let Some((idxs, _, rhi)) = runs.last_mut() {
                let touch = match (*rhi, lo) {
                    (None, _) | (_, None) => true,
                    (Some(h), Some(l)) => l <= h + 1,
                };
                if touch {
                    idxs.push(i);
                    *rhi = match (*rhi, hi) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    };
                    continue;
                }
            }
            runs.push((vec![i], lo, hi));
        }
        for (idxs, lo, hi) in runs {
            if idxs.len() < 2 {
                continue;
            }
            changed = true;
            for &i in &idxs {
                consumed[i] = true;
            }
            let mut m = sig.clone();
            for (op, c) in [(CmpOp::Ge, lo), (CmpOp::Le, hi)] {
                if let Some(c) = c {
                    if clock {
                        m.xs.push(XAtom::new(op, LinearTerm { coeffs: key.clone(), constant: c }));
                    } else {
                        m.thetas.push(ThetaAtom::new(
                            LinearTerm { coeffs: key.clone(), constant: 0 },
                            op,
                            LinearTerm::constant(c),
                        ));
                    }
                }
            }
            m.normalize();
            out.push(m);
        }
    }
    for (i, c) in dnf.into_iter().enumerate() {
        if !consumed[i] {
            out.push(c);
        }
    }
    (changed, out)
}

/// Dedup, drop disjuncts subsumed by a weaker one, and join disjuncts
/// differing only in adjacent intervals, to a fixed point.
pub fn prune_dnf(mut dnf: DnfGuard) -> DnfGuard {
    loop {
        dnf.sort();
        dnf.dedup();
        let sums: Vec<_> = dnf.iter().map(Conjunct::summaries).collect();
        // dnf[j] implies dnf[i] when j's group on each atom's variable part
        // forces the atom
        let implies = |j: usize, i: usize| {
            dnf[i].xs.iter().all(|a| {
                sums[j].0.get(&a.rhs.coeffs).is_some_and(|g| g.implies(a.op, a.rhs.constant))
            }) && dnf[i].thetas.iter().all(|a| {
                let d = a.lhs.sub(&a.rhs);
                sums[j].1.get(&d.coeffs).is_some_and(|g| g.implies(a.op, -d.constant))
            })
        };
        let mut keep = vec![true; dnf.len()];
        for i in 0..dnf.len() {
            if !keep[i] {
                continue;
            }
            for j in 0..dnf.len() {
                if i != j && keep[j] && implies(j, i) && (!implies(i, j) || i < j) {
                    keep[j] = false;
                }
            }
        }
        drop(sums);
        let pruned: DnfGuard =
            dnf.into_iter().zip(keep).filter_map(|(c, k)| k.then_some(c)).collect();
        let (changed, next) = merge_pass(pruned);
        if !changed {
            return next;
        }
        dnf = next;
    }
}

pub fn dnf_to_guard(dnf: &DnfGuard) -> GuardExpr {
    GuardExpr::or(dnf.iter().map(|c| c.to_guard()).collect())
}

pub fn dnf_true() -> DnfGuard {
    vec![Conjunct::default()]
}

pub fn dnf_and(a: &DnfGuard, b: &DnfGuard) -> DnfGuard {
    let mut out = Vec::new();
    for c1 in a {
        for c2 in b {
            let mut m = c1.clone();
            m.xs.extend(c2.xs.iter().cloned());
            m.thetas.extend(c2.thetas.iter().cloned());
            m.normalize();
            if !m.obviously_false() {
                out.push(m);
            }
        }
    }
    prune_dnf(out)
}

pub fn dnf_or(parts: Vec<DnfGuard>) -> DnfGuard {
    prune_dnf(parts.into_iter().flatten().collect())
}

/// Substitute x := term throughout, turning clock atoms into parameter atoms.
pub fn dnf_subst_clock(d: &DnfGuard, term: &LinearTerm) -> DnfGuard {
    let mut out = Vec::new();
    for c in d {
        let mut m = Conjunct {
            xs: Vec::new(),
            thetas: c
                .thetas
                .iter()
                .cloned()
                .chain(c.xs.iter().map(|a| a.subst_clock(term)))
                .collect(),
        };
        m.normalize();
        if !m.obviously_false() {
            out.push(m);
        }
    }
    prune_dnf(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(pairs: &[(&str, Int)]) -> Valuation {
        pairs.iter().map(|(n, x)| (n.to_string(), *x)).collect()
    }

    #[test]
    fn term_arithmetic_and_eval() {
        let t = LinearTerm::var("t1").scale(2).add(&LinearTerm::constant(3));
        assert_eq!(t.eval(&v(&[("t1", 5)])), 13);
        assert_eq!(t.to_string(), "2*t1+3");
        let s = t.sub(&LinearTerm::var("t1"));
        assert_eq!(s.eval(&v(&[("t1", 5)])), 8);
    }

    #[test]
    fn modular_atom_semantics() {
        // x =mod[3]<= t1 at x=2, t1=8: 2 = 8 mod 3 and 2 <= 8.
        let a = XAtom::new(CmpOp::ModLe(3), LinearTerm::var("t1"));
        assert!(a.eval(2, &v(&[("t1", 8)])));
        assert!(!a.eval(3, &v(&[("t1", 8)])));
        assert!(!a.eval(11, &v(&[("t1", 8)])));
        let b = XAtom::new(CmpOp::ModGe(3), LinearTerm::var("t1"));
        assert!(b.eval(11, &v(&[("t1", 8)])));
        assert!(!b.eval(2, &v(&[("t1", 8)])));
    }

    #[test]
    fn mod1_collapses_to_plain_bound() {
        let a = XAtom::new(CmpOp::ModLe(1), LinearTerm::constant(4));
        assert_eq!(a.op, CmpOp::Le);
        let b = ThetaAtom::new(LinearTerm::var("t1"), CmpOp::ModGe(1), LinearTerm::constant(0));
        assert_eq!(b.op, CmpOp::Ge);
    }

    /// Exhaustive pointwise check that the normal form preserves truth.
    #[test]
    fn normal_form_preserves_semantics() {
        let t1 = LinearTerm::var("t1");
        let atoms = vec![
            GuardExpr::X(XAtom::new(CmpOp::Lt, t1.clone())),
            GuardExpr::X(XAtom::new(CmpOp::Eq, LinearTerm::constant(2))),
            GuardExpr::X(XAtom::new(CmpOp::ModGe(3), t1.plus_const(-1))),
            GuardExpr::Theta(ThetaAtom::new(t1.clone(), CmpOp::Gt, LinearTerm::constant(1))),
            GuardExpr::Theta(ThetaAtom::new(t1.clone(), CmpOp::ModLe(2), LinearTerm::constant(6))),
        ];
        let mut exprs = Vec::new();
        for a in &atoms {
            exprs.push(GuardExpr::not(a.clone()));
        }
        exprs.push(GuardExpr::not(GuardExpr::and(vec![atoms[0].clone(), atoms[3].clone()])));
        exprs.push(GuardExpr::or(vec![
            GuardExpr::not(GuardExpr::or(vec![atoms[1].clone(), atoms[2].clone()])),
            atoms[4].clone(),
        ]));
        exprs.push(GuardExpr::and(vec![
            GuardExpr::not(atoms[2].clone()),
            GuardExpr::or(vec![atoms[0].clone(), GuardExpr::not(atoms[4].clone())]),
        ]));
        for e in &exprs {
            let dnf = to_normal_form(e);
            for op in &dnf {
                for a in &op.xs {
                    assert!(matches!(
                        a.op,
                        CmpOp::Eq | CmpOp::Le | CmpOp::Ge | CmpOp::ModLe(_) | CmpOp::ModGe(_)
                    ));
                }
            }
            for x in 0..12 {
                for t in 0..12 {
                    let val = v(&[("t1", t)]);
                    let lhs = e.eval(x, &val);
                    let rhs = dnf.iter().any(|c| c.eval(x, &val));
                    assert_eq!(lhs, rhs, "mismatch for {e} at x={x}, t1={t}");
                }
            }
        }
    }

    #[test]
    fn t_atom_substitutions() {
        let alpha = LinearTerm::var("t1");
        // t = 2 under t := t1 - x becomes x = t1 - 2.
        let r = TAtom::EqTerm(LinearTerm::constant(2)).subst_t_alpha_minus_x(&alpha);
        assert_eq!(r, SubstResult::X(XAtom::new(CmpOp::Eq, alpha.plus_const(-2))));
        // t =mod[3]>= 1 becomes x =mod[3]<= t1 - 1.
        let r = TAtom::ModGeTerm(3, LinearTerm::constant(1)).subst_t_alpha_minus_x(&alpha);
        assert_eq!(r, SubstResult::X(XAtom::new(CmpOp::ModLe(3), alpha.plus_const(-1))));
        // t = t2 - x becomes the parameter equation t1 = t2.
        let r = TAtom::EqTermMinusX(LinearTerm::var("t2")).subst_t_alpha_minus_x(&alpha);
        assert_eq!(
            r,
            SubstResult::Theta(ThetaAtom::new(alpha.clone(), CmpOp::Eq, LinearTerm::var("t2")))
        );
        // x := t1 in t = t2 - x gives t = t2 - t1.
        let r = TAtom::EqTermMinusX(LinearTerm::var("t2")).subst_x_alpha(&alpha);
        assert_eq!(r, TAtom::EqTerm(LinearTerm::var("t2").sub(&alpha)));
    }

    #[test]
    fn guard_clock_substitutions() {
        let g = GuardExpr::X(XAtom::new(CmpOp::Le, LinearTerm::var("t1")));
        let shifted = g.shift_clock(1);
        // x+1 <= t1 iff x <= t1-1
        assert_eq!(shifted, GuardExpr::X(XAtom::new(CmpOp::Le, LinearTerm::var("t1").plus_const(-1))));
        let closed = g.subst_clock(&LinearTerm::constant(3));
        assert!(closed.eval(0, &v(&[("t1", 3)])));
        assert!(!closed.eval(0, &v(&[("t1", 2)])));
    }
}
