//! Explicit-state reference checker. For a fixed parameter valuation the
//! clock is quotiented at one past the largest constant it is compared to,
//! giving a finite graph on which the temporal operators are evaluated
//! directly (saturating duration counters for the bounded ones). Completely
//! independent of the symbolic pipeline, so the two can be cross-checked.

use crate::automaton::Pta;
use crate::formula::{Formula, Internal};
use crate::logic::{eval_cmp, CmpOp, GuardExpr, Int, Valuation, XAtom};

/// Clock quotient of an automaton at a fixed valuation. Cell `m` is
/// saturated: it stands for every clock value >= m, which is sound because
/// no comparison distinguishes values beyond the largest constant.
pub struct Quotient<'a> {
    pta: &'a Pta,
    v: Valuation,
    m: Int,
    valid: Vec<bool>,
    succs: Vec<Vec<(usize, Int)>>,
    infrun: Vec<bool>,
}

fn clock_atom_at_cell(a: &XAtom, c: Int, m: Int, v: &Valuation) -> bool {
    if c < m {
        return a.eval(c, v);
    }
    // saturated cell: the clock is at least m, larger than every constant
    match a.op {
        CmpOp::Le | CmpOp::Lt | CmpOp::Eq => false,
        CmpOp::Ge | CmpOp::Gt => true,
        CmpOp::ModLe(_) | CmpOp::ModGe(_) => {
            unreachable!("modular clock atoms are rejected before quotienting")
        }
    }
}

fn guard_at_cell(g: &GuardExpr, c: Int, m: Int, v: &Valuation) -> bool {
    match g {
        GuardExpr::True => true,
        GuardExpr::False => false,
        GuardExpr::X(a) => clock_atom_at_cell(a, c, m, v),
        GuardExpr::Theta(a) => a.eval(v),
        GuardExpr::Not(e) => !guard_at_cell(e, c, m, v),
        GuardExpr::And(es) => es.iter().all(|e| guard_at_cell(e, c, m, v)),
        GuardExpr::Or(es) => es.iter().any(|e| guard_at_cell(e, c, m, v)),
    }
}

fn guard_has_modular_clock_atom(g: &GuardExpr) -> bool {
    match g {
        GuardExpr::True | GuardExpr::False | GuardExpr::Theta(_) => false,
        GuardExpr::X(a) => matches!(a.op, CmpOp::ModLe(_) | CmpOp::ModGe(_)),
        GuardExpr::Not(e) => guard_has_modular_clock_atom(e),
        GuardExpr::And(es) | GuardExpr::Or(es) => es.iter().any(guard_has_modular_clock_atom),
    }
}

fn clock_constants(g: &GuardExpr, v: &Valuation, out: &mut Int) {
    match g {
        GuardExpr::True | GuardExpr::False | GuardExpr::Theta(_) => {}
        GuardExpr::X(a) => *out = (*out).max(a.rhs.eval(v).abs()),
        GuardExpr::Not(e) => clock_constants(e, v, out),
        GuardExpr::And(es) | GuardExpr::Or(es) => {
            for e in es {
                clock_constants(e, v, out);
            }
        }
    }
}

impl<'a> Quotient<'a> {
    pub fn new(pta: &'a Pta, v: &Valuation, x0: Int) -> Result<Quotient<'a>, String> {
        for s in &pta.states {
            if guard_has_modular_clock_atom(&s.inv) {
                return Err(format!("state {} has a modular clock atom; the explicit oracle cannot quotient it", s.name));
            }
        }
        for e in &pta.edges {
            if guard_has_modular_clock_atom(&e.guard) {
                return Err("an edge guard has a modular clock atom; the explicit oracle cannot quotient it".into());
            }
        }
        let mut c = x0;
        for s in &pta.states {
            clock_constants(&s.inv, v, &mut c);
        }
        for e in &pta.edges {
            clock_constants(&e.guard, v, &mut c);
        }
        let m = c + 1;
        let width = (m + 1) as usize;
        let n = pta.states.len() * width;
        let mut valid = vec![false; n];
        for (q, s) in pta.states.iter().enumerate() {
            for cell in 0..=m {
                valid[q * width + cell as usize] = guard_at_cell(&s.inv, cell, m, v);
            }
        }
        let mut succs = vec![Vec::new(); n];
        for e in &pta.edges {
            for cell in 0..=m {
                let src = e.src * width + cell as usize;
                if !valid[src] {
                    continue;
                }
                let moved = (cell + e.tau).min(m);
                if !guard_at_cell(&e.guard, moved, m, v) {
                    continue;
                }
                let entry = if e.reset { 0 } else { moved };
                let tgt = e.tgt * width + entry as usize;
                if !valid[tgt] {
                    continue;
                }
                let step = (tgt, e.tau);
                if !succs[src].contains(&step) {
                    succs[src].push(step);
                }
            }
        }
        let mut q = Quotient { pta, v: v.clone(), m, valid, succs, infrun: Vec::new() };
        q.infrun = q.nonzeno_survivors(&q.valid.clone());
        Ok(q)
    }

    pub fn node(&self, state: usize, x: Int) -> usize {
        let width = (self.m + 1) as usize;
        state * width + x.min(self.m) as usize
    }

    /// Nodes admitting an infinite run with infinitely many duration-1 steps,
    /// restricted to `allowed` nodes throughout.
    fn nonzeno_survivors(&self, allowed: &[bool]) -> Vec<bool> {
        let n = self.valid.len();
        let edge_ok = |u: usize, w: usize| allowed[u] && allowed[w];
        // Kosaraju: order by finish time, then assign components on the
        // transposed graph.
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] || !allowed[start] {
                continue;
            }
            // iterative DFS with explicit post-order
            let mut stack = vec![(start, 0usize)];
            seen[start] = true;
            while let Some((u, i)) = stack.pop() {
                if i < self.succs[u].len() {
                    stack.push((u, i + 1));
                    let (w, _) = self.succs[u][i];
                    if edge_ok(u, w) && !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(u);
                }
            }
        }
        let mut rev = vec![Vec::new(); n];
        for u in 0..n {
            for &(w, _) in &self.succs[u] {
                if edge_ok(u, w) {
                    rev[w].push(u);
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        for &start in order.iter().rev() {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = ncomp;
            while let Some(u) = stack.pop() {
                for &w in &rev[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = ncomp;
                        stack.push(w);
                    }
                }
            }
            ncomp += 1;
        }
        // a component is good if it contains an internal duration-1 edge
        let mut good = vec![false; ncomp];
        for u in 0..n {
            for &(w, tau) in &self.succs[u] {
                if tau == 1 && edge_ok(u, w) && comp[u] == comp[w] && comp[u] != usize::MAX {
                    good[comp[u]] = true;
                }
            }
        }
        // nodes that reach a good component (backward closure on rev graph
        // from good-component members)
        let mut out = vec![false; n];
        let mut stack = Vec::new();
        for u in 0..n {
            if comp[u] != usize::MAX && good[comp[u]] {
                out[u] = true;
                stack.push(u);
            }
        }
        while let Some(u) = stack.pop() {
            for &w in &rev[u] {
                if !out[w] {
                    out[w] = true;
                    stack.push(w);
                }
            }
        }
        out
    }

    fn label_set(&self, prop: &str) -> Vec<bool> {
        let width = (self.m + 1) as usize;
        let mut out = vec![false; self.valid.len()];
        for (q, s) in self.pta.states.iter().enumerate() {
            if s.labels.contains(prop) {
                for cell in 0..width {
                    let id = q * width + cell;
                    out[id] = self.valid[id] && self.infrun[id];
                }
            }
        }
        out
    }

    fn const_set(&self, b: bool, needs_infrun: bool) -> Vec<bool> {
        self.valid
            .iter()
            .zip(&self.infrun)
            .map(|(va, ir)| b && *va && (!needs_infrun || *ir))
            .collect()
    }

    fn ex_set(&self, arg: &[bool]) -> Vec<bool> {
        (0..self.valid.len())
            .map(|u| self.valid[u] && self.succs[u].iter().any(|&(w, _)| arg[w]))
            .collect()
    }

    /// Product exploration for the existential until with strict-future
    /// semantics: some position i >= 1 satisfies r and the duration bound,
    /// all strictly earlier positions past the start satisfy l.
    fn eu_set(&self, op: CmpOp, gamma: Int, l: &[bool], r: &[bool]) -> Vec<bool> {
        let cap = (gamma + 1).max(0);
        let hit = |node: usize, d: Int| -> bool {
            if !r[node] || !self.infrun[node] {
                return false;
            }
            if d < cap {
                eval_cmp(d, op, gamma)
            } else {
                // saturated: the true duration is at least gamma + 1
                matches!(op, CmpOp::Ge | CmpOp::Gt)
            }
        };
        let width = (cap + 1) as usize;
        let pid = |node: usize, d: Int| node * width + d as usize;
        let n = self.valid.len() * width;
        // backward closure: in G if hit, or l holds and some product
        // successor is in G
        let mut ingo = vec![false; n];
        let mut rev = vec![Vec::new(); n];
        for u in 0..self.valid.len() {
            for d in 0..=cap {
                for &(w, tau) in &self.succs[u] {
                    rev[pid(w, (d + tau).min(cap))].push(pid(u, d));
                }
            }
        }
        let mut stack = Vec::new();
        for u in 0..self.valid.len() {
            for d in 0..=cap {
                if hit(u, d) {
                    ingo[pid(u, d)] = true;
                    stack.push(pid(u, d));
                }
            }
        }
        while let Some(p) = stack.pop() {
            for &q in &rev[p] {
                let node = q / width;
                if !ingo[q] && l[node] {
                    ingo[q] = true;
                    stack.push(q);
                }
            }
        }
        (0..self.valid.len())
            .map(|u| {
                self.valid[u]
                    && self.succs[u].iter().any(|&(w, tau)| ingo[pid(w, tau.min(cap))])
            })
            .collect()
    }

    /// Universal until, strict-future, evaluated directly: a node satisfies
    /// it when no infinite non-Zeno path from it avoids every witness
    /// position. Nodes without such paths satisfy it vacuously.
    fn au_set(&self, bound: Option<(CmpOp, Int)>, l: &[bool], r: &[bool]) -> Vec<bool> {
        let (op, gamma) = bound.unwrap_or((CmpOp::Ge, 0));
        let cap = (gamma + 1).max(0);
        let width = (cap + 1) as usize;
        let pid = |node: usize, d: Int| node * width + d as usize;
        let n = self.valid.len() * width;
        let hit = |node: usize, d: Int| -> bool {
            if !r[node] {
                return false;
            }
            if d < cap {
                eval_cmp(d, op, gamma)
            } else {
                matches!(op, CmpOp::Ge | CmpOp::Gt)
            }
        };
        // nh: not yet discharged, left argument still holding
        let nh = |node: usize, d: Int| -> bool { !hit(node, d) && l[node] };
        // immediate failure: not discharged, left broken, and the path can
        // continue forever
        let b1 = |node: usize, d: Int| -> bool { !hit(node, d) && !l[node] && self.infrun[node] };

        // good cycles inside nh: product SCCs with an internal duration-1
        // edge, restricted to nh nodes
        let mut comp = vec![usize::MAX; n];
        let mut order = Vec::new();
        let mut seen = vec![false; n];
        let psuccs = |p: usize| -> Vec<(usize, Int)> {
            let node = p / width;
            let d = (p % width) as Int;
            if !nh(node, d) {
                return Vec::new();
            }
            self.succs[node]
                .iter()
                .filter(|&&(w, tau)| nh(w, (d + tau).min(cap)))
                .map(|&(w, tau)| (pid(w, (d + tau).min(cap)), tau))
                .collect()
        };
        for start in 0..n {
            if seen[start] || !nh(start / width, (start % width) as Int) {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            seen[start] = true;
            while let Some((u, i)) = stack.pop() {
                let su = psuccs(u);
                if i < su.len() {
                    stack.push((u, i + 1));
                    let (w, _) = su[i];
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(u);
                }
            }
        }
        let mut prev = vec![Vec::new(); n];
        for u in 0..n {
            for (w, tau) in psuccs(u) {
                prev[w].push((u, tau));
            }
        }
        let mut ncomp = 0;
        for &start in order.iter().rev() {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = ncomp;
            while let Some(u) = stack.pop() {
                for &(w, _) in &prev[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = ncomp;
                        stack.push(w);
                    }
                }
            }
            ncomp += 1;
        }
        let mut good = vec![false; ncomp];
        for u in 0..n {
            for (w, tau) in psuccs(u) {
                if tau == 1 && comp[u] != usize::MAX && comp[u] == comp[w] {
                    good[comp[u]] = true;
                }
            }
        }
        // bad set: backward closure through nh of (b1 nodes and good cycles)
        let mut bad = vec![false; n];
        let mut stack = Vec::new();
        for u in 0..n {
            let node = u / width;
            let d = (u % width) as Int;
            if b1(node, d) || (comp[u] != usize::MAX && good[comp[u]]) {
                bad[u] = true;
                stack.push(u);
            }
        }
        // full product reverse edges (closure passes only through nh parents)
        let mut prev_all = vec![Vec::new(); n];
        for u in 0..self.valid.len() {
            for d in 0..=cap {
                for &(w, tau) in &self.succs[u] {
                    prev_all[pid(w, (d + tau).min(cap))].push(pid(u, d));
                }
            }
        }
        while let Some(p) = stack.pop() {
            for &q in &prev_all[p] {
                let node = q / width;
                let d = (q % width) as Int;
                if !bad[q] && nh(node, d) {
                    bad[q] = true;
                    stack.push(q);
                }
            }
        }
        (0..self.valid.len())
            .map(|u| {
                self.valid[u]
                    && !self.succs[u].iter().any(|&(w, tau)| {
                        let p = pid(w, tau.min(cap));
                        bad[p]
                    })
            })
            .collect()
    }

    /// Infinite non-Zeno path whose every position from 1 on satisfies the
    /// argument.
    fn eg_set(&self, arg: &[bool]) -> Vec<bool> {
        let allowed: Vec<bool> = self
            .valid
            .iter()
            .zip(arg)
            .map(|(va, a)| *va && *a)
            .collect();
        let surv = self.nonzeno_survivors(&allowed);
        (0..self.valid.len())
            .map(|u| self.valid[u] && self.succs[u].iter().any(|&(w, _)| surv[w]))
            .collect()
    }

    pub fn sat_surface(&self, f: &Formula) -> Vec<bool> {
        match f {
            Formula::True => self.const_set(true, false),
            Formula::False => self.const_set(false, false),
            Formula::Prop(p) => self.label_set(p),
            Formula::Cmp(a) => self.const_set(a.eval(&self.v), true),
            Formula::Not(e) => {
                let inner = self.sat_surface(e);
                self.valid.iter().zip(inner).map(|(va, s)| *va && !s).collect()
            }
            Formula::Or(a, b) => {
                let sa = self.sat_surface(a);
                let sb = self.sat_surface(b);
                sa.into_iter().zip(sb).map(|(x, y)| x || y).collect()
            }
            Formula::EX(e) => {
                let inner = self.sat_surface(e);
                let inner: Vec<bool> =
                    inner.iter().zip(&self.infrun).map(|(s, ir)| *s && *ir).collect();
                self.ex_set(&inner)
            }
            Formula::EU { l, bound, r } => {
                let sl = self.sat_surface(l);
                let sr = self.sat_surface(r);
                let (op, gamma) = match bound {
                    None => (CmpOp::Ge, 0),
                    Some((op, t)) => (*op, t.eval(&self.v)),
                };
                self.eu_set(op, gamma, &sl, &sr)
            }
            Formula::AU { l, bound, r } => {
                let sl = self.sat_surface(l);
                let sr = self.sat_surface(r);
                let bound = bound.as_ref().map(|(op, t)| (*op, t.eval(&self.v)));
                self.au_set(bound, &sl, &sr)
            }
        }
    }

    pub fn sat_internal(&self, f: &Internal) -> Vec<bool> {
        match f {
            Internal::True => self.const_set(true, false),
            Internal::False => self.const_set(false, false),
            Internal::Prop(p) => self.label_set(p),
            Internal::Cmp(a) => self.const_set(a.eval(&self.v), true),
            Internal::Not(e) => {
                let inner = self.sat_internal(e);
                self.valid.iter().zip(inner).map(|(va, s)| *va && !s).collect()
            }
            Internal::Or(a, b) => {
                let sa = self.sat_internal(a);
                let sb = self.sat_internal(b);
                sa.into_iter().zip(sb).map(|(x, y)| x || y).collect()
            }
            Internal::EX(e) => {
                let inner = self.sat_internal(e);
                let inner: Vec<bool> =
                    inner.iter().zip(&self.infrun).map(|(s, ir)| *s && *ir).collect();
                self.ex_set(&inner)
            }
            Internal::EU { op, bound, l, r } => {
                let sl = self.sat_internal(l);
                let sr = self.sat_internal(r);
                self.eu_set(*op, bound.eval(&self.v), &sl, &sr)
            }
            Internal::EG(e) => {
                let inner = self.sat_internal(e);
                self.eg_set(&inner)
            }
            Internal::EGLt(t, e) => {
                let inner = self.sat_internal(e);
                let all = self.const_set(true, false);
                self.eu_set(CmpOp::Ge, t.eval(&self.v), &inner, &all)
            }
        }
    }
}

/// Check a surface formula at a configuration for a concrete valuation.
pub fn check(pta: &Pta, state: usize, x0: Int, v: &Valuation, f: &Formula) -> Result<bool, String> {
    let q = Quotient::new(pta, v, x0)?;
    let node = q.node(state, x0);
    let sat = q.sat_surface(f);
    Ok(sat[node])
}

/// Check an internal-form formula at a configuration.
pub fn check_internal(
    pta: &Pta,
    state: usize,
    x0: Int,
    v: &Valuation,
    f: &Internal,
) -> Result<bool, String> {
    let q = Quotient::new(pta, v, x0)?;
    let node = q.node(state, x0);
    let sat = q.sat_internal(f);
    Ok(sat[node])
}

/// Enumerate the valuations in [0, bound]^params satisfying the formula at
/// the configuration.
pub fn enumerate_satisfying(
    pta: &Pta,
    state: usize,
    x0: Int,
    f: &Formula,
    bound: Int,
) -> Result<Vec<Valuation>, String> {
    let params = pta.params.clone();
    let mut out = Vec::new();
    let mut v = Valuation::new();
    fn go(
        pta: &Pta,
        state: usize,
        x0: Int,
        f: &Formula,
        params: &[String],
        i: usize,
        bound: Int,
        v: &mut Valuation,
        out: &mut Vec<Valuation>,
    ) -> Result<(), String> {
        if i == params.len() {
            if check(pta, state, x0, v, f)? {
                out.push(v.clone());
            }
            return Ok(());
        }
        for k in 0..=bound {
            v.insert(params[i].clone(), k);
            go(pta, state, x0, f, params, i + 1, bound, v, out)?;
        }
        v.remove(&params[i]);
        Ok(())
    }
    go(pta, state, x0, f, &params, 0, bound, &mut v, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn val(pairs: &[(&str, Int)]) -> Valuation {
        pairs.iter().map(|(n, x)| (n.to_string(), *x)).collect()
    }

    /// Two states ping-ponging with duration 1: from q0, sigma recurs every
    /// 2 time units.
    const PING: &str = "\
state q0 label sigma
state q1
edge q0 -> 1 q1
edge q1 -> 1 q0
";

    #[test]
    fn strict_future_af_measures_the_loop() {
        let pta = Pta::parse(PING).unwrap();
        let q0 = pta.state_id("q0").unwrap();
        let v = Valuation::new();
        // with strict semantics the next sigma is 2 away, not 0
        let f = parse_formula("AF[<= 1] sigma").unwrap();
        assert!(!check(&pta, q0, 0, &v, &f).unwrap());
        let f = parse_formula("AF[<= 2] sigma").unwrap();
        assert!(check(&pta, q0, 0, &v, &f).unwrap());
        // and AG(sigma -> AF[<=b] sigma) needs b >= 2
        let f = parse_formula("AG (sigma -> AF[<= 1] sigma)").unwrap();
        assert!(!check(&pta, q0, 0, &v, &f).unwrap());
        let f = parse_formula("AG (sigma -> AF[<= 2] sigma)").unwrap();
        assert!(check(&pta, q0, 0, &v, &f).unwrap());
    }

    #[test]
    fn zeno_only_states_fail_props() {
        // q0 can only loop with duration 0: no non-Zeno run
        let src = "\
state q0 label sigma
edge q0 -> 0 q0
";
        let pta = Pta::parse(src).unwrap();
        let q0 = pta.state_id("q0").unwrap();
        let v = Valuation::new();
        let f = parse_formula("sigma").unwrap();
        assert!(!check(&pta, q0, 0, &v, &f).unwrap());
        // but its negation holds (no run, so the positive atom fails)
        let f = parse_formula("!sigma").unwrap();
        assert!(check(&pta, q0, 0, &v, &f).unwrap());
        // universal until is vacuously true without any infinite run
        let f = parse_formula("AF sigma").unwrap();
        assert!(check(&pta, q0, 0, &v, &f).unwrap());
    }

    #[test]
    fn invariant_bounds_runs() {
        // q0 must leave by t1 (invariant), going to a sink loop
        let src = "\
params t1
state q0 label sigma inv x <= t1
state q1 label done
edge q0 -> 1 q0
edge q0 -> 0 q1 guard x = t1
edge q1 -> 1 q1
";
        let pta = Pta::parse(src).unwrap();
        let q0 = pta.state_id("q0").unwrap();
        let f = parse_formula("AF[<= t1] done").unwrap();
        assert!(check(&pta, q0, 0, &val(&[("t1", 3)]), &f).unwrap());
        let f = parse_formula("AF[<= 2] done").unwrap();
        assert!(!check(&pta, q0, 0, &val(&[("t1", 3)]), &f).unwrap());
        // EX done only once the guard x = t1 is enabled right away
        let f = parse_formula("EX done").unwrap();
        assert!(check(&pta, q0, 3, &val(&[("t1", 3)]), &f).unwrap());
        assert!(!check(&pta, q0, 2, &val(&[("t1", 3)]), &f).unwrap());
        assert!(!check(&pta, q0, 0, &val(&[("t1", 3)]), &f).unwrap());
    }

    #[test]
    fn eu_duration_bounds() {
        let src = "\
state q0 label a
state q1 label a
state q2 label b
edge q0 -> 1 q1
edge q1 -> 1 q2
edge q2 -> 1 q2
";
        let pta = Pta::parse(src).unwrap();
        let q0 = pta.state_id("q0").unwrap();
        let v = Valuation::new();
        assert!(check(&pta, q0, 0, &v, &parse_formula("E(a U[<= 2] b)").unwrap()).unwrap());
        assert!(!check(&pta, q0, 0, &v, &parse_formula("E(a U[< 2] b)").unwrap()).unwrap());
        assert!(check(&pta, q0, 0, &v, &parse_formula("E(a U[>= 2] b)").unwrap()).unwrap());
        // at duration 3 the intermediate position 2 is q2, which lacks a
        assert!(!check(&pta, q0, 0, &v, &parse_formula("E(a U[> 2] b)").unwrap()).unwrap());
        // the left argument is not checked at position 0
        assert!(check(&pta, q0, 0, &v, &parse_formula("E(!a U[>= 0] a)").unwrap()).unwrap());
    }

    #[test]
    fn modular_guards_are_refused() {
        let src = "\
state q0 inv x =mod[2]<= 6
edge q0 -> 1 q0
";
        let pta = Pta::parse(src).unwrap();
        let v = Valuation::new();
        assert!(Quotient::new(&pta, &v, 0).is_err());
    }

    #[test]
    fn internal_rewrites_agree_with_surface() {
        use crate::formula::rewrite_to_internal;
        let pta = Pta::parse(PING).unwrap();
        let q0 = pta.state_id("q0").unwrap();
        let v = Valuation::new();
        for s in [
            "AF[<= 2] sigma",
            "AF[< 2] sigma",
            "AF sigma",
            "A(sigma U !sigma)",
            "A(!sigma U[<= 3] sigma)",
            "AG (sigma -> AF[<= 2] sigma)",
        ] {
            let f = parse_formula(s).unwrap();
            let i = rewrite_to_internal(&f);
            for x0 in 0..3 {
                assert_eq!(
                    check(&pta, q0, x0, &v, &f).unwrap(),
                    check_internal(&pta, q0, x0, &v, &i).unwrap(),
                    "disagreement on {s} at x0={x0}"
                );
            }
        }
    }
}
