//! Duration and progress formulas over a normalized automaton. Runs between
//! two states factor at reset edges into reset-free segments; each segment's
//! durations are a duration formula (one clause per letter), and the ways the
//! segments chain form a rational language over those letters. Recursing over
//! union-free pieces of that language yields quantifier-free formulas for run
//! existence, unbounded duration (an infinite run exists), and comparisons of
//! achievable durations against a bound.

use crate::automaton::NormPta;
use crate::logic::{
    dnf_and, dnf_or, dnf_subst_clock, dnf_to_guard, dnf_true, to_normal_form, CmpOp, Conjunct,
    DnfGuard, GuardExpr, Int, LinearTerm, TAtom, ThetaAtom, XAtom,
};
use crate::resetfree::{duration_formula, simplify, Clause, Seg};
use crate::semilinear::{path_regex, Rx};
use std::collections::{BTreeMap, HashMap};

/// One letter of the segment alphabet: a duration clause for runs between
/// two cut states. For reset letters the segment starts with clock 0, so the
/// clause is evaluated at x = 0 and its formulas lose the clock.
#[derive(Clone, Debug)]
pub struct Letter {
    pub clause: Clause,
    pub reset: bool,
}

/// Reset-free segment between cut states `p` and `pp` of the normalized
/// automaton: a fresh entry copy of p, a fresh exit copy of pp, and all
/// non-reset states in between with their incoming guards folded into the
/// invariants. When the exit is a reset state its invariant applies to the
/// post-reset clock while the incoming guard still reads the segment clock.
pub fn build_segment(pta: &NormPta, p: usize, pp: usize, start_free: bool) -> Seg {
    let qr = pta.reset_states();
    let zero = LinearTerm::constant(0);
    let mut seg = Seg::default();

    let interior_inv = |q: usize| -> Conjunct {
        let mut inv = pta.states[q].inv.clone();
        if let Some((g, reset)) = &pta.states[q].incoming {
            debug_assert!(!reset);
            inv.xs.extend(g.xs.iter().cloned());
            inv.thetas.extend(g.thetas.iter().cloned());
        }
        inv
    };

    let mut interior = vec![usize::MAX; pta.states.len()];
    for q in 0..pta.states.len() {
        if !qr.contains(&q) {
            interior[q] = seg.push(interior_inv(q), false, false);
        }
    }

    let mut entry_inv = pta.states[p].inv.clone();
    if !start_free {
        entry_inv.xs.push(XAtom::new(CmpOp::Eq, zero.clone()));
    }
    let entry = seg.push(entry_inv, true, false);

    let exit_inv = if qr.contains(&pp) {
        // invariant read after the reset, guard before it
        let mut inv = Conjunct::default();
        let inv_pp = &pta.states[pp].inv;
        inv.thetas.extend(inv_pp.thetas.iter().cloned());
        inv.thetas.extend(inv_pp.xs.iter().map(|a| a.subst_clock(&zero)));
        if let Some((g, _)) = &pta.states[pp].incoming {
            inv.xs.extend(g.xs.iter().cloned());
            inv.thetas.extend(g.thetas.iter().cloned());
        }
        inv
    } else {
        interior_inv(pp)
    };
    let exit = seg.push(exit_inv, false, true);

    for e in &pta.edges {
        let si = interior[e.src];
        let ti = interior[e.tgt];
        if si != usize::MAX && ti != usize::MAX {
            seg.edges.push((si, e.tau, ti));
        }
        if e.src == p {
            if ti != usize::MAX {
                seg.edges.push((entry, e.tau, ti));
            }
            if e.tgt == pp {
                seg.edges.push((entry, e.tau, exit));
            }
        }
        if e.tgt == pp && si != usize::MAX {
            seg.edges.push((si, e.tau, exit));
        }
    }
    seg.edges.sort();
    seg.edges.dedup();
    seg.prune()
}

/// Pieces of the language of runs from q to qp: the empty run, a single
/// segment, or a head segment followed by a rational language of reset
/// letters.
pub enum Elem {
    Eps(GuardExpr),
    Single(Letter),
    Headed(Letter, Rx),
}

pub struct Decomp {
    pub elems: Vec<Elem>,
    pub reset_letters: Vec<Letter>,
}

/// Context caching segment letters per cut pair; the segment construction,
/// simplification and duration formula are by far the dominant cost.
pub struct DurCtx<'a> {
    pub pta: &'a NormPta,
    letters: HashMap<(usize, usize, bool), Vec<Clause>>,
    linfos: HashMap<(Clause, bool), Info>,
    runs: HashMap<usize, GuardExpr>,
    constraints: HashMap<(usize, usize, CmpOp, LinearTerm), GuardExpr>,
}

impl<'a> DurCtx<'a> {
    pub fn new(pta: &'a NormPta) -> Self {
        DurCtx {
            pta,
            letters: HashMap::new(),
            linfos: HashMap::new(),
            runs: HashMap::new(),
            constraints: HashMap::new(),
        }
    }

    pub fn letters(&mut self, p: usize, pp: usize, start_free: bool) -> Vec<Clause> {
        if let Some(c) = self.letters.get(&(p, pp, start_free)) {
            return c.clone();
        }
        let t0 = std::time::Instant::now();
        let seg = simplify(&build_segment(self.pta, p, pp, start_free));
        let t1 = t0.elapsed();
        eprintln!("letters({p},{pp},{start_free}) states={} edges={} simplify={t1:?}", seg.states.len(), seg.edges.len(), );
        let out = duration_formula(&seg);
        eprintln!("letters({p},{pp},{start_free}) durf={:?} clauses={}", t0.elapsed(), out.len());
        self.letters.insert((p, pp, start_free), out.clone());
        out
    }

    pub fn decompose(&mut self, q: usize, qp: usize) -> Decomp {
        // dead-end reset states can only be run targets, never cut points,
        // so they stay out of the reset-letter graph
        let qr: Vec<usize> = self
            .pta
            .reset_states()
            .into_iter()
            .filter(|&p| self.pta.out_edges(p).next().is_some())
            .collect();
        let end = qr.len();
        let mut elems = Vec::new();
        if q == qp {
            elems.push(Elem::Eps(self.pta.states[q].inv.to_guard()));
        }
        // reset-letter graph among the reset states, plus a sink for qp
        let mut reset_letters: Vec<Letter> = Vec::new();
        let mut redges: Vec<(usize, usize, usize)> = Vec::new();
        for (pi, &p) in qr.iter().enumerate() {
            for (pj, &p2) in qr.iter().enumerate() {
                for c in self.letters(p, p2, false) {
                    let id = reset_letters.len();
                    reset_letters.push(Letter { clause: c, reset: true });
                    redges.push((pi, pj, id));
                    if p2 == qp {
                        redges.push((pi, end, id));
                    }
                }
            }
            if !qr.contains(&qp) {
                for c in self.letters(p, qp, false) {
                    let id = reset_letters.len();
                    reset_letters.push(Letter { clause: c, reset: true });
                    redges.push((pi, end, id));
                }
            }
        }
        // head letters leave q with the clock free
        eprintln!("decompose({q},{qp}) qr={qr:?} redges={}", redges.len());
        for (pi, &p2) in qr.iter().enumerate() {
            let t0 = std::time::Instant::now();
            let k = path_regex(end + 1, &redges, pi, end);
            eprintln!("  regex pi={pi} t={:?} size={}", t0.elapsed(), k.size());
            for c in self.letters(q, p2, true) {
                let head = Letter { clause: c, reset: false };
                if p2 == qp {
                    elems.push(Elem::Single(head.clone()));
                }
                if k != Rx::Empty {
                    elems.push(Elem::Headed(head, k.clone()));
                }
            }
        }
        if !qr.contains(&qp) {
            for c in self.letters(q, qp, true) {
                elems.push(Elem::Single(Letter { clause: c, reset: false }));
            }
        }
        Decomp { elems, reset_letters }
    }

    /// An infinite run starts at (q, x): some target admits finite runs of
    /// unbounded duration.
    pub fn run_formula(&mut self, q: usize) -> GuardExpr {
        if let Some(f) = self.runs.get(&q) {
            return f.clone();
        }
        let mut parts = Vec::new();
        for qp in 0..self.pta.states.len() {
            let d = self.decompose(q, qp);
            let infos: Vec<Info> =
                d.reset_letters.iter().map(|l| cached_info(&mut self.linfos, l)).collect();
            let mut memo = BTreeMap::new();
            for e in &d.elems {
                parts.push(elem_info(e, &infos, false, &mut memo, &mut self.linfos).nz);
            }
        }
        let f = dnf_to_guard(&dnf_or(parts));
        self.runs.insert(q, f.clone());
        f
    }

    /// Some run from q to qp has duration `op gamma` (as a constraint on the
    /// entry clock x and the parameters).
    pub fn duration_constraint(
        &mut self,
        q: usize,
        qp: usize,
        op: CmpOp,
        gamma: &LinearTerm,
    ) -> GuardExpr {
        let key = (q, qp, op, gamma.clone());
        if let Some(f) = self.constraints.get(&key) {
            return f.clone();
        }
        let d = self.decompose(q, qp);
        eprintln!("dc({q},{qp}) letters={} elems={}", d.reset_letters.len(), d.elems.len());
        let infos: Vec<Info> =
            d.reset_letters.iter().map(|l| cached_info(&mut self.linfos, l)).collect();
        let mut parts = Vec::new();
        let mut memo = BTreeMap::new();
        for e in &d.elems {
            let t0 = std::time::Instant::now();
            let info = elem_info(e, &infos, true, &mut memo, &mut self.linfos);
            eprintln!("  elem t={:?} mins={} maxs={}", t0.elapsed(), info.mins.len(), info.maxs.len());
            match op {
                CmpOp::Le | CmpOp::Lt => {
                    // the minimal duration meets an upper bound
                    for m in &info.mins {
                        let cmp = if m.minus_x {
                            let off = if op == CmpOp::Lt { 1 } else { 0 };
                            GuardExpr::X(XAtom::new(CmpOp::Ge, m.alpha.sub(gamma).plus_const(off)))
                        } else {
                            GuardExpr::Theta(ThetaAtom::new(m.alpha.clone(), op, gamma.clone()))
                        };
                        parts.push(dnf_and(&to_normal_form(&cmp), &m.guard));
                    }
                }
                CmpOp::Ge | CmpOp::Gt => {
                    // the maximal duration meets a lower bound
                    for m in &info.maxs {
                        let cmp = match &m.bound {
                            None => GuardExpr::True,
                            Some((term, true)) => {
                                let off = if op == CmpOp::Gt { -1 } else { 0 };
                                GuardExpr::X(XAtom::new(CmpOp::Le, term.sub(gamma).plus_const(off)))
                            }
                            Some((term, false)) => {
                                GuardExpr::Theta(ThetaAtom::new(term.clone(), op, gamma.clone()))
                            }
                        };
                        parts.push(dnf_and(&to_normal_form(&cmp), &m.guard));
                    }
                }
                other => unreachable!("duration constraint with operator {other}"),
            }
        }
        let f = dnf_to_guard(&dnf_or(parts));
        self.constraints.insert(key, f.clone());
        f
    }
}

// ---------------------------------------------------------------------------
// Letter and language formulas.
// ---------------------------------------------------------------------------

/// One branch of the minimal duration: min = alpha (or alpha - x) under the
/// guard.
#[derive(Clone, Debug)]
struct MinF {
    alpha: LinearTerm,
    minus_x: bool,
    guard: DnfGuard,
}

/// One branch of the maximal duration: None is unbounded, Some((term, true))
/// reads term - x.
#[derive(Clone, Debug)]
struct MaxF {
    bound: Option<(LinearTerm, bool)>,
    guard: DnfGuard,
}

/// Formulas about one union-free language of letters, all kept in pruned
/// disjunctive normal form so that combining them stays canonical; the raw
/// guard expressions would duplicate subtrees at every concatenation.
#[derive(Clone, Debug)]
struct Info {
    ne: DnfGuard, // some duration exists
    nn: DnfGuard, // some positive duration exists
    nz: DnfGuard, // durations are unbounded
    mins: Vec<MinF>,
    maxs: Vec<MaxF>,
}

fn x_le(b: &LinearTerm) -> GuardExpr {
    GuardExpr::X(XAtom::new(CmpOp::Le, b.clone()))
}

fn th(lhs: &LinearTerm, op: CmpOp, rhs: &LinearTerm) -> GuardExpr {
    GuardExpr::Theta(ThetaAtom::new(lhs.clone(), op, rhs.clone()))
}

/// term = c mod a, with the term value on either side of the representative.
fn residue_is(term: &LinearTerm, a: Int, c: Int) -> GuardExpr {
    GuardExpr::or(vec![
        th(term, CmpOp::ModGe(a), &LinearTerm::constant(c)),
        th(term, CmpOp::ModLe(a), &LinearTerm::constant(c - a)),
    ])
}

/// Minimal-duration branches of one letter, over a free clock. Bound terms
/// may evaluate below zero, hence the residue case splits for the
/// progression atoms.
fn min_branches(c: &Clause) -> Vec<MinF> {
    let common = GuardExpr::and(
        c.xs.iter()
            .cloned()
            .map(GuardExpr::X)
            .chain(c.thetas.iter().cloned().map(GuardExpr::Theta))
            .collect(),
    );
    let bounds_on = |t: &LinearTerm| -> Vec<GuardExpr> {
        // t <= beta - x for every upper bound beta
        c.le.iter().map(|b| x_le(&b.sub(t))).collect()
    };
    let zero = LinearTerm::constant(0);
    let mut out = Vec::new();
    match &c.t {
        TAtom::EqTerm(a) => {
            let mut g = vec![common.clone(), th(a, CmpOp::Ge, &zero)];
            g.extend(bounds_on(a));
            out.push(MinF { alpha: a.clone(), minus_x: false, guard: to_normal_form(&GuardExpr::and(g)) });
        }
        TAtom::EqTermMinusX(a) => {
            let mut g = vec![common.clone(), x_le(a)];
            g.extend(c.le.iter().map(|b| th(a, CmpOp::Le, b)));
            out.push(MinF { alpha: a.clone(), minus_x: true, guard: to_normal_form(&GuardExpr::and(g)) });
        }
        TAtom::ModGeTerm(m, a) => {
            let mut g = vec![common.clone(), th(a, CmpOp::Ge, &zero)];
            g.extend(bounds_on(a));
            out.push(MinF { alpha: a.clone(), minus_x: false, guard: to_normal_form(&GuardExpr::and(g)) });
            for r in 0..*m {
                let rep = LinearTerm::constant(r);
                let mut g = vec![
                    common.clone(),
                    th(a, CmpOp::ModLe(*m), &LinearTerm::constant(r - m)),
                ];
                g.extend(bounds_on(&rep));
                out.push(MinF { alpha: rep, minus_x: false, guard: to_normal_form(&GuardExpr::and(g)) });
            }
        }
        TAtom::ModGeTermMinusX(m, a) => {
            let mut g = vec![common.clone(), x_le(a)];
            g.extend(c.le.iter().map(|b| th(a, CmpOp::Le, b)));
            out.push(MinF { alpha: a.clone(), minus_x: true, guard: to_normal_form(&GuardExpr::and(g)) });
            for r in 0..*m {
                // clock past the term with residue a - r: minimum is r
                let rep = LinearTerm::constant(r);
                let mut g = vec![
                    common.clone(),
                    GuardExpr::X(XAtom::new(CmpOp::ModGe(*m), a.plus_const(*m - r))),
                ];
                g.extend(bounds_on(&rep));
                out.push(MinF { alpha: rep, minus_x: false, guard: to_normal_form(&GuardExpr::and(g)) });
            }
        }
        TAtom::LeTermMinusX(_) => unreachable!("upper bound as the leading duration atom"),
    }
    out
}

/// Some duration of the letter is strictly positive.
fn nonnull_letter(c: &Clause) -> DnfGuard {
    let common = GuardExpr::and(
        c.xs.iter()
            .cloned()
            .map(GuardExpr::X)
            .chain(c.thetas.iter().cloned().map(GuardExpr::Theta))
            .collect(),
    );
    let one = LinearTerm::constant(1);
    let bounds_on = |t: &LinearTerm| -> Vec<GuardExpr> {
        c.le.iter().map(|b| x_le(&b.sub(t))).collect()
    };
    let parts = match &c.t {
        TAtom::EqTerm(a) => {
            let mut g = vec![th(a, CmpOp::Ge, &one)];
            g.extend(bounds_on(a));
            vec![GuardExpr::and(g)]
        }
        TAtom::EqTermMinusX(a) => {
            let mut g = vec![x_le(&a.plus_const(-1))];
            g.extend(c.le.iter().map(|b| th(a, CmpOp::Le, b)));
            vec![GuardExpr::and(g)]
        }
        TAtom::ModGeTerm(m, a) => {
            let mut parts = Vec::new();
            let mut g = vec![th(a, CmpOp::Ge, &one)];
            g.extend(bounds_on(a));
            parts.push(GuardExpr::and(g));
            for r in 1..=*m {
                let rep = LinearTerm::constant(r);
                let mut g = vec![th(a, CmpOp::ModLe(*m), &LinearTerm::constant(r - m))];
                g.extend(bounds_on(&rep));
                parts.push(GuardExpr::and(g));
            }
            parts
        }
        TAtom::ModGeTermMinusX(m, a) => {
            let mut parts = Vec::new();
            let mut g = vec![x_le(&a.plus_const(-1))];
            g.extend(c.le.iter().map(|b| th(a, CmpOp::Le, b)));
            parts.push(GuardExpr::and(g));
            for r in 1..=*m {
                // duration r feasible: clock at residue of term - r, at
                // least term - r
                let rep = LinearTerm::constant(r);
                let mut g = vec![GuardExpr::X(XAtom::new(CmpOp::ModGe(*m), a.plus_const(-r)))];
                g.extend(bounds_on(&rep));
                parts.push(GuardExpr::and(g));
            }
            parts
        }
        TAtom::LeTermMinusX(_) => unreachable!(),
    };
    to_normal_form(&GuardExpr::and(vec![common, GuardExpr::or(parts)]))
}

/// Maximal-duration branches of one letter.
fn max_branches(c: &Clause) -> Vec<MaxF> {
    let common = GuardExpr::and(
        c.xs.iter()
            .cloned()
            .map(GuardExpr::X)
            .chain(c.thetas.iter().cloned().map(GuardExpr::Theta))
            .collect(),
    );
    let mins = min_branches(c);
    match &c.t {
        TAtom::EqTerm(_) | TAtom::EqTermMinusX(_) => mins
            .into_iter()
            .map(|m| MaxF { bound: Some((m.alpha, m.minus_x)), guard: m.guard })
            .collect(),
        TAtom::ModGeTerm(..) | TAtom::ModGeTermMinusX(..) if c.le.is_empty() => {
            vec![MaxF { bound: None, guard: to_normal_form(&common) }]
        }
        TAtom::ModGeTerm(m, a) => {
            // max = (smallest bound) minus the residue gap down to the
            // progression of a
            let mut out = Vec::new();
            for bp in &c.le {
                for b in 0..*m {
                    for cc in 0..*m {
                        let d = (b - cc).rem_euclid(*m);
                        let bound = bp.plus_const(-d);
                        let mut g = vec![common.clone()];
                        g.extend(c.le.iter().map(|beta| th(bp, CmpOp::Le, beta)));
                        // bound term minus clock has residue b
                        g.push(GuardExpr::X(XAtom::new(CmpOp::ModLe(*m), bp.plus_const(-b))));
                        g.push(residue_is(a, *m, cc));
                        // the maximum is a real duration: >= a and >= 0
                        g.push(x_le(&bound.sub(a)));
                        g.push(x_le(&bound));
                        out.push(MaxF {
                            bound: Some((bound, true)),
                            guard: to_normal_form(&GuardExpr::and(g)),
                        });
                    }
                }
            }
            out
        }
        TAtom::ModGeTermMinusX(m, a) => {
            let mut out = Vec::new();
            for bp in &c.le {
                for e in 0..*m {
                    let bound = bp.plus_const(-e);
                    let mut g = vec![common.clone()];
                    g.extend(c.le.iter().map(|beta| th(bp, CmpOp::Le, beta)));
                    g.push(residue_is(&bp.sub(a), *m, e));
                    g.push(th(&bound, CmpOp::Ge, a));
                    g.push(x_le(&bound));
                    out.push(MaxF { bound: Some((bound, true)), guard: to_normal_form(&GuardExpr::and(g)) });
                }
            }
            out
        }
        TAtom::LeTermMinusX(_) => unreachable!(),
    }
}

/// Merge branches sharing the same bound term; keeps products of branch
/// lists across concatenations from exploding.
fn group_mins(mins: Vec<MinF>) -> Vec<MinF> {
    let mut by_key: BTreeMap<(LinearTerm, bool), Vec<DnfGuard>> = Default::default();
    for m in mins {
        if m.guard.is_empty() {
            continue;
        }
        by_key.entry((m.alpha, m.minus_x)).or_default().push(m.guard);
    }
    by_key
        .into_iter()
        .map(|((alpha, minus_x), gs)| MinF { alpha, minus_x, guard: dnf_or(gs) })
        .collect()
}

fn group_maxs(maxs: Vec<MaxF>) -> Vec<MaxF> {
    let mut by_key: BTreeMap<Option<(LinearTerm, bool)>, Vec<DnfGuard>> = Default::default();
    for m in maxs {
        if m.guard.is_empty() {
            continue;
        }
        by_key.entry(m.bound).or_default().push(m.guard);
    }
    by_key
        .into_iter()
        .map(|(bound, gs)| MaxF { bound, guard: dnf_or(gs) })
        .collect()
}

fn letter_info(l: &Letter) -> Info {
    let mins = min_branches(&l.clause);
    let ne = dnf_or(mins.iter().map(|m| m.guard.clone()).collect());
    let nn = nonnull_letter(&l.clause);
    let nz = match &l.clause.t {
        TAtom::ModGeTerm(..) | TAtom::ModGeTermMinusX(..) if l.clause.le.is_empty() => {
            to_normal_form(&GuardExpr::and(
                l.clause
                    .xs
                    .iter()
                    .cloned()
                    .map(GuardExpr::X)
                    .chain(l.clause.thetas.iter().cloned().map(GuardExpr::Theta))
                    .collect(),
            ))
        }
        _ => Vec::new(),
    };
    let maxs = group_maxs(max_branches(&l.clause));
    let info = Info { ne, nn, nz, mins: group_mins(mins), maxs };
    if l.reset {
        subst_info(&info, &LinearTerm::constant(0))
    } else {
        info
    }
}

/// Evaluate an info at a fixed clock value; used for reset letters, whose
/// segments start at clock 0.
fn subst_info(info: &Info, x: &LinearTerm) -> Info {
    Info {
        ne: dnf_subst_clock(&info.ne, x),
        nn: dnf_subst_clock(&info.nn, x),
        nz: dnf_subst_clock(&info.nz, x),
        mins: info
            .mins
            .iter()
            .map(|m| MinF {
                alpha: m.alpha.clone(),
                minus_x: false,
                guard: dnf_subst_clock(&m.guard, x),
            })
            .collect(),
        maxs: info
            .maxs
            .iter()
            .map(|m| MaxF {
                bound: m.bound.clone().map(|(t, _)| (t, false)),
                guard: dnf_subst_clock(&m.guard, x),
            })
            .collect(),
    }
}

fn cat_info(a: &Info, b: &Info, bounds: bool) -> Info {
    let ne = dnf_and(&a.ne, &b.ne);
    let nn = dnf_or(vec![dnf_and(&a.nn, &b.ne), dnf_and(&a.ne, &b.nn)]);
    let nz = dnf_or(vec![dnf_and(&a.nz, &b.ne), dnf_and(&a.ne, &b.nz)]);
    let mut mins = Vec::new();
    for m1 in if bounds { a.mins.as_slice() } else { &[] } {
        for m2 in &b.mins {
            debug_assert!(!m2.minus_x);
            mins.push(MinF {
                alpha: m1.alpha.add(&m2.alpha),
                minus_x: m1.minus_x,
                guard: dnf_and(&m1.guard, &m2.guard),
            });
        }
    }
    let mut maxs = Vec::new();
    for m1 in if bounds { a.maxs.as_slice() } else { &[] } {
        for m2 in &b.maxs {
            let bound = match (&m1.bound, &m2.bound) {
                (Some((t1, mx)), Some((t2, mx2))) => {
                    debug_assert!(!mx2);
                    Some((t1.add(t2), *mx))
                }
                _ => None,
            };
            maxs.push(MaxF { bound, guard: dnf_and(&m1.guard, &m2.guard) });
        }
    }
    Info { ne, nn, nz, mins: group_mins(mins), maxs: group_maxs(maxs) }
}

fn eps_info(guard: DnfGuard) -> Info {
    Info {
        ne: guard.clone(),
        nn: Vec::new(),
        nz: Vec::new(),
        mins: vec![MinF { alpha: LinearTerm::constant(0), minus_x: false, guard: guard.clone() }],
        maxs: vec![MaxF { bound: Some((LinearTerm::constant(0), false)), guard }],
    }
}

/// Lemma formulas over a rational language of reset letters. All the tracked
/// properties are witnessed by single words, so unions turn into
/// disjunctions and no union-free normalization is needed.
fn rx_info(rx: &Rx, letters: &[Info], bounds: bool, memo: &mut BTreeMap<Rx, Info>) -> Info {
    if let Some(i) = memo.get(rx) {
        return i.clone();
    }
    let info = rx_info_uncached(rx, letters, bounds, memo);
    memo.insert(rx.clone(), info.clone());
    info
}

fn rx_info_uncached(
    rx: &Rx,
    letters: &[Info],
    bounds: bool,
    memo: &mut BTreeMap<Rx, Info>,
) -> Info {
    match rx {
        Rx::Empty => Info {
            ne: Vec::new(),
            nn: Vec::new(),
            nz: Vec::new(),
            mins: Vec::new(),
            maxs: Vec::new(),
        },
        Rx::Eps => eps_info(dnf_true()),
        Rx::Letter(b) => letters[*b].clone(),
        Rx::Cat(x, y) => cat_info(
            &rx_info(x, letters, bounds, memo),
            &rx_info(y, letters, bounds, memo),
            bounds,
        ),
        Rx::Union(parts) => {
            let infos: Vec<Info> =
                parts.iter().map(|p| rx_info(p, letters, bounds, memo)).collect();
            Info {
                ne: dnf_or(infos.iter().map(|i| i.ne.clone()).collect()),
                nn: dnf_or(infos.iter().map(|i| i.nn.clone()).collect()),
                nz: dnf_or(infos.iter().map(|i| i.nz.clone()).collect()),
                mins: group_mins(infos.iter().flat_map(|i| i.mins.iter().cloned()).collect()),
                maxs: group_maxs(infos.iter().flat_map(|i| i.maxs.iter().cloned()).collect()),
            }
        }
        Rx::Star(u) => {
            let i = rx_info(u, letters, bounds, memo);
            Info {
                ne: dnf_true(),
                nn: i.nn.clone(),
                // a pumpable positive duration diverges
                nz: i.nn.clone(),
                mins: vec![MinF {
                    alpha: LinearTerm::constant(0),
                    minus_x: false,
                    guard: dnf_true(),
                }],
                maxs: vec![
                    MaxF { bound: None, guard: i.nn.clone() },
                    MaxF {
                        bound: Some((LinearTerm::constant(0), false)),
                        guard: to_normal_form(&GuardExpr::not(dnf_to_guard(&i.nn))),
                    },
                ],
            }
        }
    }
}

/// Letter infos are pure functions of the clause, so they are shared across
/// every decomposition that mentions the clause.
fn cached_info(cache: &mut HashMap<(Clause, bool), Info>, l: &Letter) -> Info {
    if let Some(i) = cache.get(&(l.clause.clone(), l.reset)) {
        return i.clone();
    }
    let info = letter_info(l);
    cache.insert((l.clause.clone(), l.reset), info.clone());
    info
}

fn elem_info(
    e: &Elem,
    reset_infos: &[Info],
    bounds: bool,
    memo: &mut BTreeMap<Rx, Info>,
    cache: &mut HashMap<(Clause, bool), Info>,
) -> Info {
    match e {
        Elem::Eps(g) => eps_info(to_normal_form(g)),
        Elem::Single(l) => cached_info(cache, l),
        Elem::Headed(l, rx) => {
            cat_info(&cached_info(cache, l), &rx_info(rx, reset_infos, bounds, memo), bounds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{normalize, Pta};
    use crate::formula::parse_formula;
    use crate::logic::Valuation;
    use crate::oracle;
    use std::collections::BTreeSet;

    fn v(pairs: &[(&str, Int)]) -> Valuation {
        pairs.iter().map(|(n, x)| (n.to_string(), *x)).collect()
    }

    /// Durations of nonempty-or-trivial runs between two normalized states,
    /// by explicit search.
    fn norm_durations(
        pta: &NormPta,
        q: usize,
        qp: usize,
        val: &Valuation,
        x0: Int,
        dmax: Int,
    ) -> BTreeSet<Int> {
        let mut out = BTreeSet::new();
        if !pta.inv_holds(q, x0, val) {
            return out;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![(q, x0, 0)];
        seen.insert((q, x0, 0));
        if q == qp {
            out.insert(0);
        }
        while let Some((s, x, d)) = stack.pop() {
            for e in pta.out_edges(s) {
                let d2 = d + e.tau;
                if d2 > dmax || !e.guard.eval(x + e.tau, val) {
                    continue;
                }
                let x2 = if e.reset { 0 } else { x + e.tau };
                if !pta.inv_holds(e.tgt, x2, val) {
                    continue;
                }
                if e.tgt == qp {
                    out.insert(d2);
                }
                if seen.insert((e.tgt, x2, d2)) {
                    stack.push((e.tgt, x2, d2));
                }
            }
        }
        out
    }

    const CYCLE: &str = "\
params t1
state q0 init
state q1 inv x <= t1
edge q0 -> 0 q1 reset
edge q1 -> 1 q1
edge q1 -> 1 q0 guard x = t1
";

    #[test]
    fn run_formula_matches_infinite_run_oracle() {
        let pta = Pta::parse(CYCLE).unwrap();
        let n = normalize(&pta);
        let mut ctx = DurCtx::new(&n);
        let eg_true = parse_formula("EG true").unwrap();
        for t1 in 0..=4 {
            let val = v(&[("t1", t1)]);
            for x0 in 0..=4 {
                for q in 0..pta.states.len() {
                    let want = oracle::check(&pta, q, x0, &val, &eg_true).unwrap();
                    let got = n.copies[q].iter().any(|&c| {
                        n.inv_holds(c, x0, &val) && {
                            let f = ctx.run_formula(c);
                            f.eval(x0, &val)
                        }
                    });
                    assert_eq!(got, want, "q={q} t1={t1} x0={x0}");
                }
            }
        }
    }

    #[test]
    fn duration_constraint_matches_search() {
        let pta = Pta::parse(CYCLE).unwrap();
        let n = normalize(&pta);
        let mut ctx = DurCtx::new(&n);
        for t1 in 0..=3 {
            let val = v(&[("t1", t1)]);
            for x0 in 0..=3 {
                for q in 0..n.states.len() {
                    for qp in 0..n.states.len() {
                        if !n.inv_holds(q, x0, &val) {
                            continue;
                        }
                        let durs = norm_durations(&n, q, qp, &val, x0, 40);
                        for gamma in 0..=5 {
                            let g = LinearTerm::constant(gamma);
                            for op in [CmpOp::Le, CmpOp::Lt, CmpOp::Ge, CmpOp::Gt] {
                                let f = ctx.duration_constraint(q, qp, op, &g);
                                let want = durs.iter().any(|&d| crate::logic::eval_cmp(d, op, gamma));
                                assert_eq!(
                                    f.eval(x0, &val),
                                    want,
                                    "q={q} qp={qp} t1={t1} x0={x0} {op} {gamma}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    /// Reset-free lower-bound automaton: from q0 the only infinite run keeps
    /// the clock growing, so the progress formula must be clock-independent
    /// truth here, and false once an upper-bounded trap is entered.
    #[test]
    fn run_formula_without_resets() {
        let src = "\
params t1
state q0 init
state q1 inv x <= t1
edge q0 -> 1 q0
edge q0 -> 1 q1
edge q1 -> 1 q1
";
        let pta = Pta::parse(src).unwrap();
        let n = normalize(&pta);
        let mut ctx = DurCtx::new(&n);
        let eg_true = parse_formula("EG true").unwrap();
        for t1 in 0..=4 {
            let val = v(&[("t1", t1)]);
            for x0 in 0..=5 {
                for q in 0..pta.states.len() {
                    let want = oracle::check(&pta, q, x0, &val, &eg_true).unwrap();
                    let got = n.copies[q].iter().any(|&c| {
                        n.inv_holds(c, x0, &val) && ctx.run_formula(c).eval(x0, &val)
                    });
                    assert_eq!(got, want, "q={q} t1={t1} x0={x0}");
                }
            }
        }
    }
}
