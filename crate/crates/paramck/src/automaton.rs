//! Parametric timed automata with a single clock over discrete time: surface
//! syntax, validation, and normalization into the shape the symbolic
//! constructions expect (conjunctive invariants, conjunctive edge guards, and
//! per-state uniform incoming guard/reset).

use crate::logic::{Conjunct, GuardExpr, Int, Valuation};
use crate::text::{err, parse_guard, tokenize, Cursor, ParseError, Tok};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct State {
    pub name: String,
    pub labels: BTreeSet<String>,
    pub inv: GuardExpr,
    pub init: bool,
    pub fin: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub src: usize,
    pub tau: Int,
    pub guard: GuardExpr,
    pub reset: bool,
    pub tgt: usize,
}

/// Parametric timed automaton as written, before normalization.
#[derive(Clone, Debug)]
pub struct Pta {
    pub params: Vec<String>,
    pub states: Vec<State>,
    pub edges: Vec<Edge>,
    index: BTreeMap<String, usize>,
}

impl Pta {
    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Parse the line-oriented description:
    ///
    /// ```text
    /// params t1 t2
    /// state q0 init final label sigma inv x <= t1
    /// edge q0 -> 1 q1 reset guard x = t1 + 1
    /// ```
    ///
    /// `inv` and `guard` run to end of line, so they come last. `#` starts a
    /// comment.
    pub fn parse(input: &str) -> Result<Pta, ParseError> {
        let toks = tokenize(input, true)?;
        let mut cur = Cursor::new(&toks);
        let mut params: Vec<String> = Vec::new();
        let mut states: Vec<State> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        // edges as (src name, tau, guard, reset, tgt name, loc)
        let mut raw_edges = Vec::new();

        while cur.peek().is_some() {
            if cur.eat(&Tok::Newline) {
                continue;
            }
            let (line, col) = cur.loc();
            let head = match cur.next() {
                Some(Tok::Ident(w)) => w.clone(),
                _ => return Err(err(line, col, "expected 'params', 'state' or 'edge'")),
            };
            match head.as_str() {
                "params" => {
                    while let Some(Tok::Ident(p)) = cur.peek() {
                        let p = p.clone();
                        if p == "x" {
                            return Err(cur.error("'x' is the clock and cannot be a parameter"));
                        }
                        if params.contains(&p) {
                            return Err(cur.error(format!("duplicate parameter {p}")));
                        }
                        params.push(p);
                        cur.next();
                    }
                }
                "state" => {
                    let name = match cur.next() {
                        Some(Tok::Ident(n)) => n.clone(),
                        _ => return Err(cur.error("expected state name")),
                    };
                    if index.contains_key(&name) {
                        return Err(err(line, col, format!("duplicate state {name}")));
                    }
                    let mut st = State {
                        name: name.clone(),
                        labels: BTreeSet::new(),
                        inv: GuardExpr::True,
                        init: false,
                        fin: false,
                    };
                    loop {
                        match cur.peek() {
                            None | Some(Tok::Newline) => break,
                            Some(Tok::Ident(w)) if w == "init" => {
                                cur.next();
                                st.init = true;
                            }
                            Some(Tok::Ident(w)) if w == "final" => {
                                cur.next();
                                st.fin = true;
                            }
                            Some(Tok::Ident(w)) if w == "label" => {
                                cur.next();
                                let mut any = false;
                                while let Some(Tok::Ident(l)) = cur.peek() {
                                    if matches!(l.as_str(), "init" | "final" | "label" | "inv") {
                                        break;
                                    }
                                    st.labels.insert(l.clone());
                                    cur.next();
                                    any = true;
                                }
                                if !any {
                                    return Err(cur.error("expected at least one label"));
                                }
                            }
                            Some(Tok::Ident(w)) if w == "inv" => {
                                cur.next();
                                st.inv = parse_guard(&mut cur)?;
                                match cur.peek() {
                                    None | Some(Tok::Newline) => break,
                                    _ => return Err(cur.error("invariant must end the line")),
                                }
                            }
                            _ => return Err(cur.error("expected 'init', 'final', 'label' or 'inv'")),
                        }
                    }
                    index.insert(name, states.len());
                    states.push(st);
                }
                "edge" => {
                    let src = match cur.next() {
                        Some(Tok::Ident(n)) => n.clone(),
                        _ => return Err(cur.error("expected source state")),
                    };
                    cur.expect(&Tok::Arrow, "'->'")?;
                    let tau = match cur.next() {
                        Some(Tok::Num(n)) if *n == 0 || *n == 1 => *n,
                        _ => return Err(cur.error("expected duration 0 or 1 after '->'")),
                    };
                    let tgt = match cur.next() {
                        Some(Tok::Ident(n)) => n.clone(),
                        _ => return Err(cur.error("expected target state")),
                    };
                    let mut guard = GuardExpr::True;
                    let mut reset = false;
                    loop {
                        match cur.peek() {
                            None | Some(Tok::Newline) => break,
                            Some(Tok::Ident(w)) if w == "reset" => {
                                cur.next();
                                reset = true;
                            }
                            Some(Tok::Ident(w)) if w == "guard" => {
                                cur.next();
                                guard = parse_guard(&mut cur)?;
                                match cur.peek() {
                                    None | Some(Tok::Newline) => break,
                                    _ => return Err(cur.error("guard must end the line")),
                                }
                            }
                            _ => return Err(cur.error("expected 'reset' or 'guard'")),
                        }
                    }
                    raw_edges.push((src, tau, guard, reset, tgt, (line, col)));
                }
                other => {
                    return Err(err(line, col, format!("unknown directive '{other}'")));
                }
            }
        }

        let mut edges = Vec::new();
        for (src, tau, guard, reset, tgt, (l, c)) in raw_edges {
            let src = *index
                .get(&src)
                .ok_or_else(|| err(l, c, format!("unknown state {src}")))?;
            let tgt = *index
                .get(&tgt)
                .ok_or_else(|| err(l, c, format!("unknown state {tgt}")))?;
            edges.push(Edge { src, tau, guard, reset, tgt });
        }

        let pta = Pta { params, states, edges, index };
        pta.check_params()?;
        Ok(pta)
    }

    fn check_params(&self) -> Result<(), ParseError> {
        let declared: BTreeSet<&String> = self.params.iter().collect();
        let mut used = BTreeSet::new();
        for s in &self.states {
            s.inv.params(&mut used);
        }
        for e in &self.edges {
            e.guard.params(&mut used);
        }
        for u in &used {
            if !declared.contains(u) {
                return Err(err(1, 1, format!("undeclared parameter {u}")));
            }
        }
        Ok(())
    }
}

/// State copy in the normalized automaton.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormState {
    pub orig: usize,
    pub name: String,
    pub labels: BTreeSet<String>,
    pub inv: Conjunct,
    pub init: bool,
    pub fin: bool,
    /// Uniform (guard, reset) carried by every incoming edge, if any edge
    /// enters this copy.
    pub incoming: Option<(Conjunct, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormEdge {
    pub src: usize,
    pub tau: Int,
    pub guard: Conjunct,
    pub reset: bool,
    pub tgt: usize,
}

/// Normalized automaton: invariants and guards are plain conjunctions of
/// restricted atoms, and each state's incoming edges agree on guard and
/// reset. Original states may split into several copies; `copies` maps each
/// original state to its copy ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormPta {
    pub params: Vec<String>,
    pub states: Vec<NormState>,
    pub edges: Vec<NormEdge>,
    pub copies: Vec<Vec<usize>>,
}

impl NormPta {
    /// Copies of a state that carry a reset on entry.
    pub fn reset_states(&self) -> BTreeSet<usize> {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match &s.incoming {
                Some((_, true)) => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn out_edges(&self, q: usize) -> impl Iterator<Item = &NormEdge> {
        self.edges.iter().filter(move |e| e.src == q)
    }

    pub fn in_edges(&self, q: usize) -> impl Iterator<Item = &NormEdge> {
        self.edges.iter().filter(move |e| e.tgt == q)
    }

    /// Configuration satisfies the invariant of a copy.
    pub fn inv_holds(&self, q: usize, x: Int, v: &Valuation) -> bool {
        self.states[q].inv.eval(x, v)
    }
}

/// Split invariants and guards into DNF and refine states so that all edges
/// entering a copy share one (guard, reset) pair.
pub fn normalize(pta: &Pta) -> NormPta {
    use crate::logic::to_normal_form;

    // pass 1: one intermediate state per invariant disjunct
    struct Mid {
        orig: usize,
        inv: Conjunct,
    }
    let mut mids: Vec<Mid> = Vec::new();
    let mut mid_of: Vec<Vec<usize>> = vec![Vec::new(); pta.states.len()];
    for (i, s) in pta.states.iter().enumerate() {
        for c in to_normal_form(&s.inv) {
            mid_of[i].push(mids.len());
            mids.push(Mid { orig: i, inv: c });
        }
    }

    // pass 2: split edge guards and duplicate across copies
    struct MidEdge {
        src: usize,
        tau: Int,
        guard: Conjunct,
        reset: bool,
        tgt: usize,
    }
    let mut mid_edges: Vec<MidEdge> = Vec::new();
    for e in &pta.edges {
        for g in to_normal_form(&e.guard) {
            for &ms in &mid_of[e.src] {
                for &mt in &mid_of[e.tgt] {
                    mid_edges.push(MidEdge {
                        src: ms,
                        tau: e.tau,
                        guard: g.clone(),
                        reset: e.reset,
                        tgt: mt,
                    });
                }
            }
        }
    }

    // pass 3: per intermediate state, one final copy per incoming
    // (guard, reset) class, or a single classless copy when no edge enters.
    // Start roles ignore the incoming class, so any copy can begin a run.
    let mut states: Vec<NormState> = Vec::new();
    let mut copies: Vec<Vec<usize>> = vec![Vec::new(); pta.states.len()];
    // map mid id -> (class -> final id), plus optional classless id
    let mut class_map: Vec<BTreeMap<(Conjunct, bool), usize>> = vec![BTreeMap::new(); mids.len()];
    let mut plain_map: Vec<Option<usize>> = vec![None; mids.len()];

    for (mi, m) in mids.iter().enumerate() {
        let orig = &pta.states[m.orig];
        let mut classes: BTreeSet<(Conjunct, bool)> = BTreeSet::new();
        for e in &mid_edges {
            if e.tgt == mi {
                classes.insert((e.guard.clone(), e.reset));
            }
        }
        let mut add = |incoming: Option<(Conjunct, bool)>, states: &mut Vec<NormState>| -> usize {
            let id = states.len();
            states.push(NormState {
                orig: m.orig,
                name: format!("{}#{}", orig.name, copies[m.orig].len()),
                labels: orig.labels.clone(),
                inv: m.inv.clone(),
                init: orig.init,
                fin: orig.fin,
                incoming,
            });
            copies[m.orig].push(id);
            id
        };
        if classes.is_empty() {
            plain_map[mi] = Some(add(None, &mut states));
        } else {
            for cl in classes {
                let id = add(Some(cl.clone()), &mut states);
                class_map[mi].insert(cl, id);
            }
        }
    }

    let mut edges: Vec<NormEdge> = Vec::new();
    for e in &mid_edges {
        let tgt = class_map[e.tgt][&(e.guard.clone(), e.reset)];
        // outgoing edges live on every copy of the source
        let srcs: Vec<usize> = class_map[e.src]
            .values()
            .copied()
            .chain(plain_map[e.src])
            .collect();
        for src in srcs {
            let ne = NormEdge { src, tau: e.tau, guard: e.guard.clone(), reset: e.reset, tgt };
            if !edges.contains(&ne) {
                edges.push(ne);
            }
        }
    }

    NormPta { params: pta.params.clone(), states, edges, copies }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{CmpOp, LinearTerm, XAtom};

    const SAMPLE: &str = "\
params t1 t2
state q0 init label sigma
state q1 inv x <= t1
state q2 inv x <= t1 + t2
edge q0 -> 0 q1 reset
edge q1 -> 1 q1
edge q1 -> 0 q2
edge q2 -> 1 q2
edge q2 -> 1 q0 guard x = t1 + t2 + 1
";

    #[test]
    fn parses_sample() {
        let pta = Pta::parse(SAMPLE).unwrap();
        assert_eq!(pta.params, vec!["t1", "t2"]);
        assert_eq!(pta.states.len(), 3);
        assert_eq!(pta.edges.len(), 5);
        assert!(pta.states[0].init);
        assert!(pta.states[0].labels.contains("sigma"));
        let e = &pta.edges[4];
        assert_eq!(e.tau, 1);
        assert_eq!(
            e.guard,
            GuardExpr::X(XAtom::new(
                CmpOp::Eq,
                LinearTerm::var("t1").add(&LinearTerm::var("t2")).plus_const(1)
            ))
        );
    }

    #[test]
    fn rejects_undeclared_parameter() {
        let bad = "params t1\nstate q0 inv x <= t9\n";
        assert!(Pta::parse(bad).is_err());
    }

    #[test]
    fn rejects_bad_tau() {
        let bad = "state q0\nedge q0 -> 2 q0\n";
        assert!(Pta::parse(bad).is_err());
    }

    #[test]
    fn normalize_splits_incoming_classes() {
        // q1 receives a reset edge and a plain edge: two copies expected.
        let src = "\
params t1
state q0 init
state q1 inv x <= t1
edge q0 -> 0 q1 reset
edge q0 -> 1 q1
edge q1 -> 1 q0
";
        let pta = Pta::parse(src).unwrap();
        let n = normalize(&pta);
        let q1 = pta.state_id("q1").unwrap();
        assert_eq!(n.copies[q1].len(), 2);
        let rs = n.reset_states();
        assert_eq!(rs.len(), 1);
        // both q1 copies keep the outgoing edge back to q0
        for &c in &n.copies[q1] {
            assert_eq!(n.out_edges(c).count(), 1);
        }
        // incoming uniformity
        for (i, _) in n.states.iter().enumerate() {
            let mut seen: BTreeSet<(Conjunct, bool)> = BTreeSet::new();
            for e in n.in_edges(i) {
                seen.insert((e.guard.clone(), e.reset));
            }
            assert!(seen.len() <= 1, "state {i} has mixed incoming classes");
        }
    }

    #[test]
    fn normalize_splits_disjunctive_guards_and_invariants() {
        let src = "\
params t1
state q0 init inv x <= t1 | x >= t1 + 2
state q1
edge q0 -> 1 q1 guard x = 1 | x = 3
";
        let pta = Pta::parse(src).unwrap();
        let n = normalize(&pta);
        let q0 = pta.state_id("q0").unwrap();
        let q1 = pta.state_id("q1").unwrap();
        assert_eq!(n.copies[q0].len(), 2);
        // q1 splits into one copy per incoming guard disjunct
        assert_eq!(n.copies[q1].len(), 2);
        // every final guard/invariant uses restricted operators only
        for s in &n.states {
            for a in &s.inv.xs {
                assert!(!matches!(a.op, CmpOp::Lt | CmpOp::Gt));
            }
        }
        for e in &n.edges {
            for a in &e.guard.xs {
                assert!(!matches!(a.op, CmpOp::Lt | CmpOp::Gt));
            }
        }
    }

    #[test]
    fn unsatisfiable_invariant_drops_state() {
        let src = "\
state q0 init inv false
state q1
edge q0 -> 1 q1
";
        let pta = Pta::parse(src).unwrap();
        let n = normalize(&pta);
        assert!(n.copies[pta.state_id("q0").unwrap()].is_empty());
        assert!(n.edges.is_empty());
    }
}
