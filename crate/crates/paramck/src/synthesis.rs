//! Symbolic model checking: compile a formula over a normalized automaton
//! into a quantifier-free constraint on the start clock and the parameters.
//!
//! Each temporal operator reduces to run and duration formulas on a derived
//! automaton. Propositions and comparisons hold where an infinite non-zeno
//! run exists; EX steps an edge and requires the target configuration to
//! satisfy the argument and keep running; EU builds an automaton whose
//! interior states additionally satisfy the left argument and whose final
//! state folds the right argument and the progress formula into its
//! invariant, then asks for a run duration meeting the bound; EG is a run
//! formula over the left-augmented automaton. Since the subformula
//! constraints are themselves quantifier-free guards, conjoining them into
//! invariants stays inside the normalized shape after a DNF split.

use crate::automaton::{normalize, NormEdge, NormPta, NormState, Pta};
use crate::durations::DurCtx;
use crate::formula::{check_fragment, rewrite_to_internal, Formula, Internal, Quant, Query};
use crate::logic::{canon_guard, to_normal_form, CmpOp, GuardExpr, Int, LinearTerm, Valuation};
use crate::presburger::{self, Pres};
use std::collections::{BTreeSet, HashMap};

pub struct Engine<'a> {
    pub pta: &'a NormPta,
    base: DurCtx<'a>,
    memo: HashMap<(usize, Internal), GuardExpr>,
}

impl<'a> Engine<'a> {
    pub fn new(pta: &'a NormPta) -> Self {
        Engine { pta, base: DurCtx::new(pta), memo: HashMap::new() }
    }

    /// Constraint on the clock x and the parameters under which the
    /// configuration (q, x) satisfies `f`, assuming the invariant of q holds
    /// at x. Callers conjoin the invariant themselves.
    pub fn delta(&mut self, q: usize, f: &Internal) -> GuardExpr {
        let key = (q, f.clone());
        if let Some(g) = self.memo.get(&key) {
            return g.clone();
        }
        let _t0 = std::time::Instant::now();
        eprintln!("> delta q{q} {f}");
        let out = match f {
            Internal::True => GuardExpr::True,
            Internal::False => GuardExpr::False,
            Internal::Prop(p) => {
                if self.pta.states[q].labels.contains(p) {
                    self.base.run_formula(q)
                } else {
                    GuardExpr::False
                }
            }
            Internal::Cmp(a) => {
                GuardExpr::and(vec![GuardExpr::Theta(a.clone()), self.base.run_formula(q)])
            }
            Internal::Not(e) => GuardExpr::not(self.delta(q, e)),
            Internal::Or(a, b) => GuardExpr::or(vec![self.delta(q, a), self.delta(q, b)]),
            Internal::EX(e) => {
                let edges: Vec<NormEdge> = self.pta.out_edges(q).cloned().collect();
                let mut parts = Vec::new();
                for edge in edges {
                    // target configuration: valid, satisfies e, keeps running
                    let tgt = GuardExpr::and(vec![
                        self.pta.states[edge.tgt].inv.to_guard(),
                        self.delta(edge.tgt, e),
                        self.base.run_formula(edge.tgt),
                    ]);
                    let at_entry = if edge.reset {
                        tgt.subst_clock(&LinearTerm::constant(0))
                    } else {
                        tgt.shift_clock(edge.tau)
                    };
                    parts.push(GuardExpr::and(vec![
                        edge.guard.to_guard().shift_clock(edge.tau),
                        at_entry,
                    ]));
                }
                GuardExpr::or(parts)
            }
            Internal::EU { op, bound, l, r } => {
                let dl: Vec<GuardExpr> =
                    (0..self.pta.states.len()).map(|p| self.delta(p, l)).collect();
                let mut parts = Vec::new();
                for qp in 0..self.pta.states.len() {
                    // the witness holds r and admits an infinite continuation;
                    // its invariant is checked by the derived automaton
                    let w = GuardExpr::and(vec![
                        self.delta(qp, r),
                        self.base.run_formula(qp),
                    ]);
                    if w == GuardExpr::False {
                        continue;
                    }
                    let (aug, start, wits) = augment(self.pta, q, &dl, Some((qp, &w)));
                    let mut ctx = DurCtx::new(&aug);
                    for wc in wits {
                        parts.push(ctx.duration_constraint(start, wc, *op, bound));
                    }
                }
                GuardExpr::or(parts)
            }
            Internal::EG(e) => {
                let dl: Vec<GuardExpr> =
                    (0..self.pta.states.len()).map(|p| self.delta(p, e)).collect();
                let (aug, start, _) = augment(self.pta, q, &dl, None);
                let mut ctx = DurCtx::new(&aug);
                ctx.run_formula(start)
            }
            Internal::EGLt(bound, e) => {
                let eu = Internal::EU {
                    op: CmpOp::Ge,
                    bound: bound.clone(),
                    l: e.clone(),
                    r: Box::new(Internal::True),
                };
                self.delta(q, &eu)
            }
        };
        eprintln!("< delta q{q} {f} raw={:?}", _t0.elapsed());
        let out = canon_guard(&out);
        eprintln!("= delta q{q} {f} canon={:?} len={}", _t0.elapsed(), format!("{out}").len());
        self.memo.insert(key, out.clone());
        out
    }

    /// Disjunction over the copies of an original state: the configuration
    /// (orig, x) is valid and satisfies `f`.
    pub fn state_guard(&mut self, orig: usize, f: &Internal) -> GuardExpr {
        let mut parts = Vec::new();
        for q in 0..self.pta.states.len() {
            if self.pta.states[q].orig == orig {
                let inv = self.pta.states[q].inv.to_guard();
                parts.push(GuardExpr::and(vec![inv, self.delta(q, f)]));
            }
        }
        GuardExpr::or(parts)
    }
}

/// Derived automaton for EU / EG at start state `q`: every state p is
/// replaced by copies whose invariants conjoin `dl[p]` (the interior
/// positions of a witnessing run must satisfy the left argument), `q` gets a
/// fresh start copy that is exempt from the left argument and has no
/// incoming edges, and an optional witness state carries a formula folded
/// into its invariant and has no outgoing edges. Incoming guard and reset
/// classes are inherited from the originals, so the result is normalized.
fn augment(
    pta: &NormPta,
    q: usize,
    dl: &[GuardExpr],
    witness: Option<(usize, &GuardExpr)>,
) -> (NormPta, usize, Vec<usize>) {
    let n = pta.states.len();
    let mut states: Vec<NormState> = Vec::new();
    let mut copies: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        let inv = GuardExpr::and(vec![pta.states[p].inv.to_guard(), dl[p].clone()]);
        for (k, c) in to_normal_form(&inv).into_iter().enumerate() {
            copies[p].push(states.len());
            states.push(NormState {
                orig: pta.states[p].orig,
                name: format!("{}~{k}", pta.states[p].name),
                labels: pta.states[p].labels.clone(),
                inv: c,
                init: false,
                fin: false,
                incoming: pta.states[p].incoming.clone(),
            });
        }
    }
    let start = states.len();
    states.push(NormState {
        orig: pta.states[q].orig,
        name: format!("{}^", pta.states[q].name),
        labels: pta.states[q].labels.clone(),
        inv: pta.states[q].inv.clone(),
        init: true,
        fin: false,
        incoming: None,
    });
    let mut wits = Vec::new();
    if let Some((qp, w)) = witness {
        let inv = GuardExpr::and(vec![pta.states[qp].inv.to_guard(), (*w).clone()]);
        for (k, c) in to_normal_form(&inv).into_iter().enumerate() {
            wits.push(states.len());
            states.push(NormState {
                orig: pta.states[qp].orig,
                name: format!("{}!{k}", pta.states[qp].name),
                labels: pta.states[qp].labels.clone(),
                inv: c,
                init: false,
                fin: true,
                incoming: pta.states[qp].incoming.clone(),
            });
        }
    }
    let mut edges = Vec::new();
    for e in &pta.edges {
        let mut srcs = copies[e.src].clone();
        if e.src == q {
            srcs.push(start);
        }
        let mut tgts = copies[e.tgt].clone();
        if let Some((qp, _)) = witness {
            if e.tgt == qp {
                tgts.extend(wits.iter().copied());
            }
        }
        for &s in &srcs {
            for &t in &tgts {
                edges.push(NormEdge {
                    src: s,
                    tau: e.tau,
                    guard: e.guard.clone(),
                    reset: e.reset,
                    tgt: t,
                });
            }
        }
    }
    let aug = NormPta { params: pta.params.clone(), states, edges, copies };
    (aug, start, wits)
}

fn atom_params(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => {}
        Formula::Cmp(a) => {
            out.extend(a.lhs.coeffs.keys().cloned());
            out.extend(a.rhs.coeffs.keys().cloned());
        }
        Formula::Not(e) | Formula::EX(e) => atom_params(e, out),
        Formula::Or(a, b) => {
            atom_params(a, out);
            atom_params(b, out);
        }
        Formula::EU { l, bound, r } | Formula::AU { l, bound, r } => {
            atom_params(l, out);
            atom_params(r, out);
            if let Some((_, t)) = bound {
                out.extend(t.coeffs.keys().cloned());
            }
        }
    }
}

/// Compile a query at configuration (state, x0) into a Presburger formula
/// over the parameters, with the query's quantifier prefix applied.
pub fn compile(pta: &Pta, state: &str, x0: Int, query: &Query) -> Result<Pres, String> {
    check_fragment(&query.body)?;
    let sid = pta
        .state_id(state)
        .ok_or_else(|| format!("unknown state {state}"))?;
    let mut used = BTreeSet::new();
    atom_params(&query.body, &mut used);
    for p in &used {
        let quantified = query.prefix.iter().any(|(_, n)| n == p);
        if !pta.params.contains(p) && !quantified {
            return Err(format!("undeclared parameter {p}"));
        }
    }
    let internal = rewrite_to_internal(&query.body);
    let norm = normalize(pta);
    let mut eng = Engine::new(&norm);
    let g = eng.state_guard(sid, &internal);
    let g0 = g.subst_clock(&LinearTerm::constant(x0));
    let mut p = Pres::from_guard(&g0);
    for (quant, name) in query.prefix.iter().rev() {
        p = match quant {
            Quant::Exists => Pres::exists(name, p),
            Quant::Forall => Pres::forall(name, p),
        };
    }
    Ok(p)
}

/// Quantifier-free constraint on the free parameters under which the query
/// holds at (state, x0).
pub fn synthesize(pta: &Pta, state: &str, x0: Int, query: &Query) -> Result<Pres, String> {
    let p = compile(pta, state, x0, query)?;
    Ok(presburger::simplify(&presburger::eliminate(&p)))
}

/// Decide the query at (state, x0) under explicit parameter bindings. Every
/// parameter left free by the quantifier prefix must be bound.
pub fn model_check(
    pta: &Pta,
    state: &str,
    x0: Int,
    bindings: &Valuation,
    query: &Query,
) -> Result<bool, String> {
    let p = compile(pta, state, x0, query)?;
    let mut sentence = p;
    for var in sentence.free_vars() {
        match bindings.get(&var) {
            Some(val) => {
                let eq = Pres::cmp(
                    &crate::presburger::PTerm::var(&var),
                    CmpOp::Eq,
                    &crate::presburger::PTerm::constant(*val),
                );
                sentence = Pres::exists(&var, Pres::and(vec![eq, sentence]));
            }
            None => return Err(format!("parameter {var} is not bound")),
        }
    }
    Ok(presburger::decide_sentence(&sentence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_query};
    use crate::oracle;

    fn v(pairs: &[(&str, Int)]) -> Valuation {
        pairs.iter().map(|(k, x)| (k.to_string(), *x)).collect()
    }

    /// Compare the compiled guard against the explicit oracle on every
    /// configuration of a small grid.
    fn cross_check(src: &str, formulas: &[&str], tmax: Int, xmax: Int) {
        let pta = Pta::parse(src).unwrap();
        let norm = normalize(&pta);
        let mut eng = Engine::new(&norm);
        let grids: Vec<Valuation> = match pta.params.len() {
            1 => (0..=tmax).map(|a| v(&[(&pta.params[0], a)])).collect(),
            2 => (0..=tmax)
                .flat_map(|a| {
                    (0..=tmax).map(move |b| (a, b))
                })
                .map(|(a, b)| v(&[(&pta.params[0], a), (&pta.params[1], b)]))
                .collect(),
            n => panic!("unsupported param count {n}"),
        };
        for text in formulas {
            let f = parse_formula(text).unwrap();
            let internal = rewrite_to_internal(&f);
            let guards: Vec<GuardExpr> =
                (0..pta.states.len()).map(|s| eng.state_guard(s, &internal)).collect();
            for val in &grids {
                for x0 in 0..=xmax {
                    for s in 0..pta.states.len() {
                        let want = oracle::check(&pta, s, x0, val, &f).unwrap();
                        let got = guards[s].eval(x0, val);
                        assert_eq!(got, want, "{text} at q{s} x0={x0} {val:?}");
                    }
                }
            }
        }
    }

    const CYCLE: &str = "\
params t1
state q0 init label sigma
state q1 inv x <= t1
edge q0 -> 0 q1 reset
edge q1 -> 1 q1
edge q1 -> 1 q0 guard x = t1
";

    #[test]
    fn matches_oracle_on_reset_cycle() {
        cross_check(
            CYCLE,
            &[
                "sigma",
                "!sigma",
                "EX sigma",
                "EX EX sigma",
                "EF sigma",
                "EF[<= t1] sigma",
                "EF[> 2] sigma",
                "EG !sigma",
                "AF sigma",
                "AF[<= 3] sigma",
                "AG (sigma -> EX !sigma)",
                "E(!sigma U[>= 2] sigma)",
                "A(true U[< t1] sigma)",
            ],
            4,
            4,
        );
    }

    const BRANCH: &str = "\
params t1 t2
state q0 init
state q1 label good inv x <= t1
state q2 label bad inv x <= t2
edge q0 -> 1 q0
edge q0 -> 0 q1 reset guard x >= t2
edge q1 -> 1 q1
edge q1 -> 0 q2 guard x = t1
edge q2 -> 1 q2
edge q2 -> 1 q0 reset
";

    #[test]
    fn matches_oracle_on_branching_automaton() {
        cross_check(
            BRANCH,
            &[
                "EF good",
                "EF bad",
                "EF[<= t2] bad",
                "EG !bad",
                "E(!bad U[>= t1] good)",
                "AF[<= 4] (good | bad)",
                "AG (good -> AF bad)",
                "t1 >= t2 & EX good",
            ],
            3,
            3,
        );
    }

    #[test]
    fn synthesized_constraint_matches_oracle_pointwise() {
        let pta = Pta::parse(CYCLE).unwrap();
        let q = parse_query("AG (sigma -> AF[<= 5] sigma)").unwrap();
        let synth = synthesize(&pta, "q0", 0, &q).unwrap();
        assert!(synth.is_quantifier_free());
        let f = q.body.clone();
        for t1 in 0..=8 {
            let val = v(&[("t1", t1)]);
            let want = oracle::check(&pta, 0, 0, &val, &f).unwrap();
            assert_eq!(synth.eval_qf(&val), want, "t1={t1}");
        }
    }

    #[test]
    fn quantified_queries_decide() {
        let pta = Pta::parse(CYCLE).unwrap();
        // some parameter value recycles within 3 time units
        let q = parse_query("exists t1. AG (sigma -> AF[<= 3] sigma)").unwrap();
        assert!(model_check(&pta, "q0", 0, &Valuation::new(), &q).unwrap());
        // but not every value does
        let q = parse_query("forall t1. AG (sigma -> AF[<= 3] sigma)").unwrap();
        assert!(!model_check(&pta, "q0", 0, &Valuation::new(), &q).unwrap());
        // explicit bindings
        let q = parse_query("AF[<= 3] sigma").unwrap();
        assert!(model_check(&pta, "q1", 0, &v(&[("t1", 2)]), &q).unwrap());
        assert!(!model_check(&pta, "q1", 0, &v(&[("t1", 7)]), &q).unwrap());
        assert!(model_check(&pta, "q1", 0, &Valuation::new(), &q).is_err());
    }

    #[test]
    fn rejects_formulas_outside_the_fragment() {
        let pta = Pta::parse(CYCLE).unwrap();
        for text in ["E(true U[= t1] sigma)", "A(true U[>= t1] sigma)"] {
            let q = parse_query(text).unwrap();
            let err = compile(&pta, "q0", 0, &q).unwrap_err();
            assert!(err.contains("outside the fragment"), "{err}");
        }
    }
}
