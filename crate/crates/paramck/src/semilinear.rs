//! One-dimensional semilinear sets of durations, plus the rational-expression
//! toolkit used to extract them from automata: state elimination into regular
//! expressions and normalization into finite unions of union-free expressions
//! built from letters, concatenation and positive iteration. The union-free
//! rewriting is only sound up to commuting letters, which is all the duration
//! pipeline needs (durations add up and constraints conjoin idempotently).

use num_integer::gcd;
use std::collections::BTreeSet;

/// Subset of the naturals given as finite elements plus arithmetic
/// progressions `{start + k*period : k >= 0}`. Not canonical; `normalize`
/// prunes parts covered by others.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SemiSet {
    pub elems: BTreeSet<u64>,
    /// (start, period), period >= 1
    pub aps: BTreeSet<(u64, u64)>,
}

impl SemiSet {
    pub fn empty() -> SemiSet {
        SemiSet::default()
    }

    pub fn singleton(n: u64) -> SemiSet {
        let mut s = SemiSet::default();
        s.elems.insert(n);
        s
    }

    pub fn ap(start: u64, period: u64) -> SemiSet {
        assert!(period >= 1);
        let mut s = SemiSet::default();
        s.aps.insert((start, period));
        s
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty() && self.aps.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.elems.contains(&n)
            || self.aps.iter().any(|&(s, p)| n >= s && (n - s) % p == 0)
    }

    pub fn union(&self, other: &SemiSet) -> SemiSet {
        let mut out = self.clone();
        out.elems.extend(other.elems.iter().copied());
        out.aps.extend(other.aps.iter().copied());
        out.normalize();
        out
    }

    /// All pairwise sums {a + b : a in self, b in other}. Exact: the sumset of
    /// two progressions is eventually the full progression of their gcd, and
    /// everything below that threshold is enumerated.
    pub fn sum(&self, other: &SemiSet) -> SemiSet {
        let mut out = SemiSet::default();
        for a in self.parts() {
            for b in other.parts() {
                part_sum(a, b, &mut out);
            }
        }
        out.normalize();
        out
    }

    /// Positive closure under addition: all finite sums of one or more
    /// members. This is the additive semigroup generated by the set, so it is
    /// eventually periodic with period the gcd of all members; membership
    /// below the conductor is computed by dynamic programming.
    pub fn plus(&self) -> SemiSet {
        if self.is_empty() {
            return SemiSet::empty();
        }
        let mut g: u64 = 0;
        let mut m0: u64 = 0;
        for (s, p) in self.parts() {
            g = gcd(g, gcd(s, p));
            m0 = m0.max(s + p);
        }
        if g == 0 {
            // only the element 0
            return SemiSet::singleton(0);
        }
        // Every multiple of g at or above m0^2/g is a sum of generators; keep
        // a little slack and check the tail window as a sanity condition.
        let thresh = (m0 * m0).div_ceil(g) * g;
        let horizon = (thresh + m0 + 2 * g) as usize;
        let mut gen = vec![false; horizon + 1];
        for (s, p) in self.parts() {
            if p == 0 {
                if s as usize <= horizon {
                    gen[s as usize] = true;
                }
            } else {
                let mut n = s;
                while n as usize <= horizon {
                    gen[n as usize] = true;
                    n += p;
                }
            }
        }
        let gens: Vec<usize> = (1..=horizon).filter(|&n| gen[n]).collect();
        let mut member = vec![false; horizon + 1];
        member[0] = gen[0];
        for n in 1..=horizon {
            member[n] = gen[n] || gens.iter().take_while(|&&m| m <= n).any(|&m| member[n - m]);
        }
        let mut out = SemiSet::default();
        for n in 0..thresh {
            if member[n as usize] {
                out.elems.insert(n);
            }
        }
        for n in (thresh..=horizon as u64).step_by(g as usize) {
            debug_assert!(member[n as usize], "period detection failed at {n}");
        }
        out.aps.insert((thresh, g));
        out.normalize();
        out
    }

    /// Parts as (start, period) with period 0 for single elements.
    fn parts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.elems
            .iter()
            .map(|&e| (e, 0))
            .chain(self.aps.iter().copied())
    }

    fn normalize(&mut self) {
        let aps = self.aps.clone();
        self.elems
            .retain(|&e| !aps.iter().any(|&(s, p)| s <= e && (e - s) % p == 0));
        // a progression is redundant when a coarser one covers it; mutual
        // coverage forces equality, so no pair deletes each other
        self.aps.retain(|&(s2, p2)| {
            !aps.iter().any(|&(s1, p1)| {
                (s1, p1) != (s2, p2) && s1 <= s2 && (s2 - s1) % p1 == 0 && p2 % p1 == 0
            })
        });
    }
}

fn part_sum(a: (u64, u64), b: (u64, u64), out: &mut SemiSet) {
    let (s1, p1) = a;
    let (s2, p2) = b;
    let base = s1 + s2;
    match (p1, p2) {
        (0, 0) => {
            out.elems.insert(base);
        }
        (0, p) | (p, 0) => {
            out.aps.insert((base, p));
        }
        (p1, p2) => {
            let g = gcd(p1, p2);
            // Multiples of g at or above p1*p2/g are sums k*p1 + m*p2; the
            // Frobenius number of the coprime pair p1/g, p2/g is below their
            // product. Smaller sums are enumerated explicitly.
            let bound = p1 * p2 / g;
            let mut k = 0;
            while k * p1 < bound {
                let mut m = 0;
                while k * p1 + m * p2 < bound {
                    out.elems.insert(base + k * p1 + m * p2);
                    m += 1;
                }
                k += 1;
            }
            out.aps.insert((base + bound, g));
        }
    }
}

// ---------------------------------------------------------------------------
// Rational expressions over an abstract alphabet of letter ids.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rx {
    Empty,
    Eps,
    Letter(usize),
    Cat(Box<Rx>, Box<Rx>),
    Union(Vec<Rx>),
    Star(Box<Rx>),
}

impl Rx {
    pub fn size(&self) -> usize {
        match self {
            Rx::Empty | Rx::Eps | Rx::Letter(_) => 1,
            Rx::Cat(a, b) => 1 + a.size() + b.size(),
            Rx::Union(ps) => 1 + ps.iter().map(Rx::size).sum::<usize>(),
            Rx::Star(a) => 1 + a.size(),
        }
    }

    pub fn cat(a: Rx, b: Rx) -> Rx {
        match (a, b) {
            (Rx::Empty, _) | (_, Rx::Empty) => Rx::Empty,
            (Rx::Eps, x) | (x, Rx::Eps) => x,
            (a, b) => Rx::Cat(Box::new(a), Box::new(b)),
        }
    }

    pub fn union(parts: Vec<Rx>) -> Rx {
        let mut out: Vec<Rx> = Vec::new();
        for p in parts {
            match p {
                Rx::Empty => {}
                Rx::Union(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Rx::Empty,
            1 => out.pop().unwrap(),
            _ => Rx::Union(out),
        }
    }

    pub fn star(a: Rx) -> Rx {
        match a {
            Rx::Empty | Rx::Eps => Rx::Eps,
            Rx::Star(inner) => Rx::Star(inner),
            other => Rx::Star(Box::new(other)),
        }
    }
}

/// Regular expression for the paths from `init` to `fin` in a graph with
/// `n` nodes and letter-labelled edges, by state elimination.
pub fn path_regex(n: usize, edges: &[(usize, usize, usize)], init: usize, fin: usize) -> Rx {
    let mut m = vec![vec![Rx::Empty; n]; n];
    for &(src, tgt, letter) in edges {
        m[src][tgt] = Rx::union(vec![m[src][tgt].clone(), Rx::Letter(letter)]);
    }
    let mut alive: Vec<usize> = (0..n).filter(|&k| k != init && k != fin).collect();
    // eliminating low-degree nodes first keeps the expression small
    while let Some(pos) = {
        let deg = |k: usize| {
            (0..n)
                .filter(|&i| m[i][k] != Rx::Empty || m[k][i] != Rx::Empty)
                .count()
        };
        alive
            .iter()
            .enumerate()
            .min_by_key(|(_, &k)| deg(k))
            .map(|(i, _)| i)
    } {
        let k = alive.swap_remove(pos);
        let keep: Vec<usize> = (0..n)
            .filter(|&i| i != k && (i == init || i == fin || alive.contains(&i)))
            .collect();
        let loop_k = Rx::star(m[k][k].clone());
        for &i in &keep {
            for &j in &keep {
                let through = Rx::cat(m[i][k].clone(), Rx::cat(loop_k.clone(), m[k][j].clone()));
                m[i][j] = Rx::union(vec![m[i][j].clone(), through]);
            }
        }
        for i in 0..n {
            m[i][k] = Rx::Empty;
            m[k][i] = Rx::Empty;
        }
    }
    if init == fin {
        Rx::star(m[init][init].clone())
    } else {
        // (ii | if ff* fi)* if ff*
        let ff = Rx::star(m[fin][fin].clone());
        let back = Rx::cat(m[init][fin].clone(), Rx::cat(ff.clone(), m[fin][init].clone()));
        let front = Rx::star(Rx::union(vec![m[init][init].clone(), back]));
        Rx::cat(front, Rx::cat(m[init][fin].clone(), ff))
    }
}

/// Union-free expression: letters, concatenation and positive iteration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Uf {
    Eps,
    Letter(usize),
    Cat(Box<Uf>, Box<Uf>),
    Plus(Box<Uf>),
}

impl Uf {
    fn plus(u: Uf) -> Uf {
        match u {
            Uf::Plus(inner) => Uf::Plus(inner),
            other => Uf::Plus(Box::new(other)),
        }
    }
}

/// Rewrite a rational expression as a finite union of union-free expressions.
/// Valid up to commuting letters: a star splits into epsilon plus a positive
/// iteration, and the positive iteration of a union becomes the union, over
/// nonempty subsets, of concatenations of positive iterations.
pub fn normalize_union_free(rx: &Rx) -> BTreeSet<Uf> {
    match rx {
        Rx::Empty => BTreeSet::new(),
        Rx::Eps => [Uf::Eps].into(),
        Rx::Letter(b) => [Uf::Letter(*b)].into(),
        Rx::Union(parts) => parts.iter().flat_map(normalize_union_free).collect(),
        Rx::Cat(a, b) => {
            let ua = normalize_union_free(a);
            let ub = normalize_union_free(b);
            let mut out = BTreeSet::new();
            for x in &ua {
                for y in &ub {
                    out.insert(match (x, y) {
                        (Uf::Eps, y) => y.clone(),
                        (x, Uf::Eps) => x.clone(),
                        (x, y) => Uf::Cat(Box::new(x.clone()), Box::new(y.clone())),
                    });
                }
            }
            out
        }
        Rx::Star(a) => {
            let mut out = plus_of_union(&normalize_union_free(a));
            out.insert(Uf::Eps);
            out
        }
    }
}

fn plus_of_union(parts: &BTreeSet<Uf>) -> BTreeSet<Uf> {
    let comps: Vec<&Uf> = parts.iter().filter(|u| !matches!(u, Uf::Eps)).collect();
    let mut out: BTreeSet<Uf> = BTreeSet::new();
    // nonempty subsets; each subset contributes the concatenation of the
    // positive iterations of its components
    for mask in 1u32..(1 << comps.len()) {
        let mut acc: Option<Uf> = None;
        for (i, u) in comps.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let p = Uf::plus((*u).clone());
                acc = Some(match acc {
                    None => p,
                    Some(a) => Uf::Cat(Box::new(a), Box::new(p)),
                });
            }
        }
        if let Some(a) = acc {
            out.insert(a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_sum(a: &SemiSet, b: &SemiSet, bound: u64) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for x in 0..=bound {
            for y in 0..=bound {
                if x + y <= bound && a.contains(x) && b.contains(y) {
                    out.insert(x + y);
                }
            }
        }
        out
    }

    #[test]
    fn sum_matches_enumeration() {
        let a = SemiSet::singleton(2).union(&SemiSet::ap(3, 4));
        let b = SemiSet::ap(1, 6).union(&SemiSet::singleton(0));
        let s = a.sum(&b);
        let bound = 120;
        let brute = brute_sum(&a, &b, bound);
        for n in 0..=bound {
            assert_eq!(s.contains(n), brute.contains(&n), "mismatch at {n}");
        }
    }

    #[test]
    fn plus_is_generated_semigroup() {
        for gens in [
            SemiSet::singleton(3).union(&SemiSet::singleton(5)),
            SemiSet::ap(4, 6),
            SemiSet::singleton(0).union(&SemiSet::singleton(2)),
            SemiSet::ap(2, 2).union(&SemiSet::singleton(7)),
        ] {
            let p = gens.plus();
            // brute force: closure under addition up to a window
            let bound = 160u64;
            let mut member = vec![false; bound as usize + 1];
            for n in 0..=bound {
                if gens.contains(n) {
                    member[n as usize] = true;
                }
            }
            for n in 0..=bound {
                for m in 1..n {
                    if member[m as usize] && member[(n - m) as usize] {
                        member[n as usize] = true;
                    }
                }
            }
            for n in 0..=bound {
                assert_eq!(p.contains(n), member[n as usize], "mismatch at {n} for {gens:?}");
            }
        }
    }

    /// Enumerate (duration, letter set) pairs of words up to a length bound;
    /// letters have weights. Used to compare the union-free normalization
    /// with the raw path language under the commutative interpretation.
    fn uf_words(u: &Uf, weights: &[u64], max_len: usize) -> BTreeSet<(usize, u64, BTreeSet<usize>)> {
        match u {
            Uf::Eps => [(0, 0, BTreeSet::new())].into(),
            Uf::Letter(b) => [(1, weights[*b], [*b].into())].into(),
            Uf::Cat(a, b) => {
                let wa = uf_words(a, weights, max_len);
                let wb = uf_words(b, weights, max_len);
                let mut out = BTreeSet::new();
                for (la, da, sa) in &wa {
                    for (lb, db, sb) in &wb {
                        if la + lb <= max_len {
                            let mut s = sa.clone();
                            s.extend(sb.iter().copied());
                            out.insert((la + lb, da + db, s));
                        }
                    }
                }
                out
            }
            Uf::Plus(a) => {
                let wa = uf_words(a, weights, max_len);
                let mut out = wa.clone();
                loop {
                    let mut grown = false;
                    for (la, da, sa) in out.clone() {
                        for (lb, db, sb) in &wa {
                            if la + lb <= max_len {
                                let mut s = sa.clone();
                                s.extend(sb.iter().copied());
                                grown |= out.insert((la + lb, da + db, s));
                            }
                        }
                    }
                    if !grown {
                        break;
                    }
                }
                out
            }
        }
    }

    #[test]
    fn normalization_preserves_commutative_language() {
        // two-node graph with a loop on each node and parallel letters
        let edges = vec![(0, 0, 0), (0, 1, 1), (1, 1, 2), (1, 0, 3), (0, 1, 4)];
        let weights = vec![1, 0, 1, 2, 3];
        let max_len = 5;
        let rx = path_regex(2, &edges, 0, 1);
        let ufs = normalize_union_free(&rx);

        let mut from_uf = BTreeSet::new();
        for u in &ufs {
            for (len, d, s) in uf_words(u, &weights, max_len) {
                from_uf.insert((len, d, s));
            }
        }

        // raw path enumeration
        let mut from_paths = BTreeSet::new();
        let mut frontier = vec![(0usize, 0usize, 0u64, BTreeSet::<usize>::new())];
        while let Some((node, len, d, s)) = frontier.pop() {
            if node == 1 {
                from_paths.insert((len, d, s.clone()));
            }
            if len == max_len {
                continue;
            }
            for &(src, tgt, b) in &edges {
                if src == node {
                    let mut s2 = s.clone();
                    s2.insert(b);
                    frontier.push((tgt, len + 1, d + weights[b], s2));
                }
            }
        }
        assert_eq!(from_uf, from_paths);
    }

    #[test]
    fn path_regex_same_node_includes_epsilon() {
        let edges = vec![(0, 1, 0), (1, 0, 1)];
        let rx = path_regex(2, &edges, 0, 0);
        let ufs = normalize_union_free(&rx);
        assert!(ufs.contains(&Uf::Eps));
    }
}
