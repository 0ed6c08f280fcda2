//! Roots of the symplectic group of rank `n` and the hyperbolic index set.
//!
//! Indices run over `I = (1, …, n, −n, …, −1)` in that order; the storage
//! position of `k` is `k − 1` for `k > 0` and `2n − |k|` for `k < 0`. Roots
//! are integer vectors in the ε-basis: short roots `±ε_i ± ε_j` (i < j) and
//! long roots `±2ε_k`. A matrix position pair `(i, j)`, `i ≠ j`, determines
//! the root `p(i, j) = w(i) − w(j)` where `w(i) = ε_i` for `i > 0` and
//! `w(i) = −ε_{|i|}` for `i < 0`; the fiber of a short root has exactly the
//! two pairs `(i, j)` and `(−j, −i)`, and the fiber of a long root one pair.

use thiserror::Error;

use crate::ring::{Ring, RingElt};

/// Largest supported rank; the canonical 128-bit matrix encoding and the
/// `[i8; 4]` root representation both assume it.
pub const MAX_N: usize = 4;

/// Storage position of index `k ∈ I`.
pub fn pos(n: usize, k: i8) -> usize {
    debug_assert!(k != 0 && (k.unsigned_abs() as usize) <= n);
    if k > 0 {
        (k - 1) as usize
    } else {
        2 * n - k.unsigned_abs() as usize
    }
}

/// Index stored at position `p`.
pub fn idx_at(n: usize, p: usize) -> i8 {
    debug_assert!(p < 2 * n);
    if p < n {
        (p + 1) as i8
    } else {
        -((2 * n - p) as i8)
    }
}

/// Indices of `I` in storage order: `1, …, n, −n, …, −1`.
pub fn index_order(n: usize) -> impl Iterator<Item = i8> {
    (0..2 * n).map(move |p| idx_at(n, p))
}

/// Successor of `h` in the order of `I`. Panics past the last index.
pub fn succ(n: usize, h: i8) -> i8 {
    let p = pos(n, h);
    assert!(p + 1 < 2 * n, "index {h} has no successor");
    idx_at(n, p + 1)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RootKind {
    Short,
    Long,
}

/// A root, stored as its ε-coefficients (`c[k]` multiplies `ε_{k+1}`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Root {
    c: [i8; MAX_N],
}

impl std::fmt::Debug for Root {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Root({})", self.render())
    }
}

impl Root {
    /// Short root `s_i ε_i + s_j ε_j` with `1 ≤ i < j ≤ n`, signs `±1`.
    pub fn short(i: usize, si: i8, j: usize, sj: i8) -> Root {
        assert!(1 <= i && i < j && j <= MAX_N && si.abs() == 1 && sj.abs() == 1);
        let mut c = [0i8; MAX_N];
        c[i - 1] = si;
        c[j - 1] = sj;
        Root { c }
    }

    /// Long root `sign · 2ε_k`.
    pub fn long(k: usize, sign: i8) -> Root {
        assert!(1 <= k && k <= MAX_N && sign.abs() == 1);
        let mut c = [0i8; MAX_N];
        c[k - 1] = 2 * sign;
        Root { c }
    }

    fn from_vec(c: [i8; MAX_N]) -> Option<Root> {
        let r = Root { c };
        r.classify().map(|_| r)
    }

    fn classify(&self) -> Option<RootKind> {
        let mut ones = 0;
        let mut twos = 0;
        for &x in &self.c {
            match x.abs() {
                0 => {}
                1 => ones += 1,
                2 => twos += 1,
                _ => return None,
            }
        }
        match (ones, twos) {
            (2, 0) => Some(RootKind::Short),
            (0, 1) => Some(RootKind::Long),
            _ => None,
        }
    }

    pub fn kind(&self) -> RootKind {
        self.classify().expect("malformed root")
    }

    pub fn is_short(&self) -> bool {
        self.kind() == RootKind::Short
    }

    pub fn is_long(&self) -> bool {
        self.kind() == RootKind::Long
    }

    pub fn neg(&self) -> Root {
        let mut c = self.c;
        for x in &mut c {
            *x = -*x;
        }
        Root { c }
    }

    /// Sum if it is again a root.
    pub fn try_add(&self, other: &Root) -> Option<Root> {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(&other.c) {
            *x += y;
        }
        Root::from_vec(c)
    }

    /// `self + 2·other` if it is a root.
    pub fn try_add_twice(&self, other: &Root) -> Option<Root> {
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(&other.c) {
            *x += 2 * y;
        }
        Root::from_vec(c)
    }

    fn dot(&self, other: &Root) -> i32 {
        self.c.iter().zip(&other.c).map(|(&a, &b)| a as i32 * b as i32).sum()
    }

    /// Reflection of `beta` in the hyperplane orthogonal to `self`.
    pub fn reflect(&self, beta: &Root) -> Root {
        let coeff = 2 * self.dot(beta) / self.dot(self);
        let mut c = beta.c;
        for (x, &d) in c.iter_mut().zip(&self.c) {
            *x -= (coeff * d as i32) as i8;
        }
        Root::from_vec(c).expect("reflection preserves the root system")
    }

    /// All `2n²` roots in a fixed deterministic order: for each pair
    /// `i < j` the four short roots, then for each `k` the two long ones.
    pub fn all(n: usize) -> Vec<Root> {
        assert!((1..=MAX_N).contains(&n), "rank {n} outside 1..={MAX_N}");
        let mut v = Vec::with_capacity(2 * n * n);
        for i in 1..=n {
            for j in i + 1..=n {
                v.push(Root::short(i, 1, j, -1));
                v.push(Root::short(i, -1, j, 1));
                v.push(Root::short(i, 1, j, 1));
                v.push(Root::short(i, -1, j, -1));
            }
        }
        for k in 1..=n {
            v.push(Root::long(k, 1));
            v.push(Root::long(k, -1));
        }
        v
    }

    pub fn live_in_rank(&self, n: usize) -> bool {
        self.c[n..].iter().all(|&x| x == 0)
    }

    /// The root `p(i, j) = w(i) − w(j)` of a matrix position pair.
    pub fn of_positions(i: i8, j: i8) -> Root {
        assert!(i != j && i != 0 && j != 0, "bad position pair ({i},{j})");
        let mut c = [0i8; MAX_N];
        c[(i.unsigned_abs() - 1) as usize] += i.signum();
        c[(j.unsigned_abs() - 1) as usize] -= j.signum();
        Root::from_vec(c).expect("p(i,j) is a root for i != j")
    }

    /// The fiber of the root under `p`: two position pairs for a short root
    /// (each other's anti-transpose), twice the same pair for a long one.
    pub fn fiber(&self) -> [(i8, i8); 2] {
        let support: Vec<(usize, i8)> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(k, &x)| (k + 1, x))
            .collect();
        match self.kind() {
            RootKind::Long => {
                let (k, x) = support[0];
                let k = k as i8;
                if x > 0 {
                    [(k, -k), (k, -k)]
                } else {
                    [(-k, k), (-k, k)]
                }
            }
            RootKind::Short => {
                let (a, xa) = support[0];
                let (b, xb) = support[1];
                let (a, b) = (a as i8, b as i8);
                let first = match (xa > 0, xb > 0) {
                    (true, false) => (a, b),
                    (false, true) => (b, a),
                    (true, true) => (a, -b),
                    (false, false) => (-a, b),
                };
                [first, (-first.1, -first.0)]
            }
        }
    }

    /// Rendering like `e1-e2`, `e1+e3`, `2e2`, `-2e1`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, &x) in self.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            if x > 0 && !s.is_empty() {
                s.push('+');
            }
            match x {
                1 => {}
                -1 => s.push('-'),
                2 => s.push('2'),
                -2 => s.push_str("-2"),
                _ => unreachable!("malformed root"),
            }
            s.push('e');
            s.push_str(&(k + 1).to_string());
        }
        s
    }

    pub fn parse(s: &str) -> Result<Root, String> {
        let mut c = [0i8; MAX_N];
        let mut rest = s.trim();
        let mut any = false;
        while !rest.is_empty() {
            let mut sign = 1i8;
            if let Some(r) = rest.strip_prefix('-') {
                sign = -1;
                rest = r;
            } else if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            }
            let mut mag = 1i8;
            if let Some(r) = rest.strip_prefix('2') {
                mag = 2;
                rest = r;
            }
            let r = rest.strip_prefix('e').ok_or_else(|| format!("bad root syntax {s:?}"))?;
            let (digit, r) = r.split_at(1);
            let k: usize = digit.parse().map_err(|_| format!("bad root syntax {s:?}"))?;
            if k == 0 || k > MAX_N {
                return Err(format!("axis e{k} out of range in {s:?}"));
            }
            c[k - 1] += sign * mag;
            rest = r;
            any = true;
        }
        if !any {
            return Err("empty root expression".into());
        }
        Root::from_vec(c).ok_or_else(|| format!("{s:?} is not a root"))
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CommutatorError {
    #[error("commutator formula undefined for proportional roots {0} and {1}")]
    ProportionalRoots(String, String),
}

/// The commutator `[x_α(λ), x_β(μ)]` as a product of root elements, in
/// characteristic 2. Each case of the Chevalley formula:
///
/// * `α + β` not a root (or zero after the proportional-pair exclusion):
///   empty product;
/// * both short, sum short: single factor `x_{α+β}(λμ)`;
/// * both short, sum long: single factor with scalar `2λμ = 0`, kept in the
///   output to mark the case;
/// * `α` long, `β` short (sum a root): `x_{α+β}(λμ) · x_{α+2β}(λμ²)`;
/// * `α` short, `β` long (sum a root): `x_{α+β}(λμ) · x_{2α+β}(λ²μ)`.
///
/// Proportional pairs (`β = ±α`) are outside the formula's domain.
pub fn chevalley_commutator(
    ring: &Ring,
    alpha: &Root,
    lambda: RingElt,
    beta: &Root,
    mu: RingElt,
) -> Result<Vec<(Root, RingElt)>, CommutatorError> {
    if alpha == beta || *alpha == beta.neg() {
        return Err(CommutatorError::ProportionalRoots(alpha.render(), beta.render()));
    }
    let sum = match alpha.try_add(beta) {
        Some(s) => s,
        None => return Ok(Vec::new()),
    };
    let lm = ring.mul(lambda, mu);
    match (alpha.kind(), beta.kind()) {
        (RootKind::Short, RootKind::Short) => match sum.kind() {
            RootKind::Short => Ok(vec![(sum, lm)]),
            // coefficient 2 vanishes in characteristic 2
            RootKind::Long => Ok(vec![(sum, ring.zero())]),
        },
        (RootKind::Long, RootKind::Short) => {
            let second = alpha.try_add_twice(beta).expect("α+2β is a root in this case");
            Ok(vec![(sum, lm), (second, ring.mul(lm, mu))])
        }
        (RootKind::Short, RootKind::Long) => {
            let second = beta.try_add_twice(alpha).expect("2α+β is a root in this case");
            Ok(vec![(sum, lm), (second, ring.mul(lm, lambda))])
        }
        (RootKind::Long, RootKind::Long) => {
            unreachable!("sum of distinct non-opposite long roots is never a root")
        }
    }
}

/// Shortest reflection chain carrying `from` to `to`, as the sequence of
/// reflecting roots in application order: `s_{δ_m}(⋯ s_{δ_1}(from)) = to`.
/// Both roots must have the same length; the Weyl group acts transitively on
/// each length class, so a chain always exists.
pub fn weyl_route(n: usize, from: &Root, to: &Root) -> Vec<Root> {
    assert_eq!(from.kind(), to.kind(), "no Weyl route between different lengths");
    assert!(from.live_in_rank(n) && to.live_in_rank(n));
    if from == to {
        return Vec::new();
    }
    let all = Root::all(n);
    let mut prev: std::collections::BTreeMap<Root, (Root, Root)> = Default::default();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(*from);
    while let Some(cur) = queue.pop_front() {
        for delta in &all {
            let next = delta.reflect(&cur);
            if next == *from || prev.contains_key(&next) {
                continue;
            }
            prev.insert(next, (cur, *delta));
            if next == *to {
                let mut chain = Vec::new();
                let mut at = next;
                while at != *from {
                    let (p, d) = prev[&at];
                    chain.push(d);
                    at = p;
                }
                chain.reverse();
                return chain;
            }
            queue.push_back(next);
        }
    }
    unreachable!("Weyl group acts transitively on roots of a fixed length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn index_positions_round_trip() {
        for n in 1..=MAX_N {
            let order: Vec<i8> = index_order(n).collect();
            assert_eq!(order.len(), 2 * n);
            for (p, &k) in order.iter().enumerate() {
                assert_eq!(pos(n, k), p);
                assert_eq!(idx_at(n, p), k);
            }
        }
        assert_eq!(index_order(3).collect::<Vec<_>>(), vec![1, 2, 3, -3, -2, -1]);
        assert_eq!(succ(3, 3), -3);
        assert_eq!(succ(3, -3), -2);
    }

    #[test]
    fn root_counts_match_two_n_squared() {
        for n in 1..=MAX_N {
            let all = Root::all(n);
            assert_eq!(all.len(), 2 * n * n);
            let shorts = all.iter().filter(|r| r.is_short()).count();
            let longs = all.iter().filter(|r| r.is_long()).count();
            assert_eq!(shorts, 2 * n * (n - 1));
            assert_eq!(longs, 2 * n);
        }
    }

    #[test]
    fn fiber_pairs_are_anti_transposes_and_invert_p() {
        for n in 2..=MAX_N {
            for root in Root::all(n) {
                let [a, b] = root.fiber();
                assert_eq!((a.1, a.0), (-b.0, -b.1));
                assert_eq!(Root::of_positions(a.0, a.1), root);
                assert_eq!(Root::of_positions(b.0, b.1), root);
            }
            // conversely p is onto the root system
            for i in index_order(n) {
                for j in index_order(n) {
                    if i == j {
                        continue;
                    }
                    let r = Root::of_positions(i, j);
                    assert!(Root::all(n).contains(&r));
                    let [a, b] = r.fiber();
                    assert!((a == (i, j)) || (b == (i, j)));
                }
            }
        }
    }

    #[test]
    fn long_root_fibers_are_the_antidiagonal_pairs() {
        assert_eq!(Root::long(1, 1).fiber(), [(1, -1), (1, -1)]);
        assert_eq!(Root::long(2, -1).fiber(), [(-2, 2), (-2, 2)]);
        assert_eq!(Root::short(1, 1, 2, -1).fiber(), [(1, 2), (-2, -1)]);
        assert_eq!(Root::short(1, 1, 2, 1).fiber(), [(1, -2), (2, -1)]);
    }

    #[test]
    fn reflections_preserve_the_root_system_and_are_involutions() {
        let all = Root::all(3);
        for d in &all {
            for r in &all {
                let s = d.reflect(r);
                assert!(all.contains(&s));
                assert_eq!(d.reflect(&s), *r);
                assert_eq!(s.kind(), r.kind());
            }
        }
    }

    #[test]
    fn weyl_route_lands_on_target() {
        for n in 2..=3 {
            let all = Root::all(n);
            for from in &all {
                for to in &all {
                    if from.kind() != to.kind() {
                        continue;
                    }
                    let chain = weyl_route(n, from, to);
                    let mut cur = *from;
                    for d in &chain {
                        cur = d.reflect(&cur);
                    }
                    assert_eq!(cur, *to);
                    assert!(chain.len() <= 3, "route {} -> {} uses {} reflections",
                        from.render(), to.render(), chain.len());
                }
            }
        }
    }

    #[test]
    fn commutator_formula_cases_frozen_instances() {
        let ring = Catalog::default_catalog().unwrap().take("F2eps").unwrap();
        let e = ring.one();
        let eps = ring.parse_elt("eps").unwrap();
        let ee = ring.parse_elt("e+eps").unwrap();

        // both short, sum short
        let a = Root::parse("e1-e2").unwrap();
        let b = Root::parse("e2-e3").unwrap();
        let terms = chevalley_commutator(&ring, &a, ee, &b, eps).unwrap();
        assert_eq!(terms, vec![(Root::parse("e1-e3").unwrap(), ring.mul(ee, eps))]);

        // both short, sum long: scalar 2λμ = 0
        let b2 = Root::parse("e1+e2").unwrap();
        let terms = chevalley_commutator(&ring, &a, e, &b2, e).unwrap();
        assert_eq!(terms, vec![(Root::parse("2e1").unwrap(), ring.zero())]);

        // long, short
        let long = Root::parse("2e1").unwrap();
        let sh = Root::parse("-e1+e2").unwrap();
        let terms = chevalley_commutator(&ring, &long, ee, &sh, eps).unwrap();
        assert_eq!(
            terms,
            vec![
                (Root::parse("e1+e2").unwrap(), ring.mul(ee, eps)),
                (Root::parse("2e2").unwrap(), ring.mul(ring.mul(ee, eps), eps)),
            ]
        );

        // short, long mirror case
        let terms = chevalley_commutator(&ring, &sh, eps, &long, e).unwrap();
        assert_eq!(
            terms,
            vec![
                (Root::parse("e1+e2").unwrap(), eps),
                (Root::parse("2e2").unwrap(), ring.zero()), // eps² = 0
            ]
        );

        // sum not a root
        let far = Root::parse("e2+e3").unwrap();
        assert!(chevalley_commutator(&ring, &long, e, &far, e).unwrap().is_empty());

        // proportional pairs rejected
        assert!(chevalley_commutator(&ring, &a, e, &a, e).is_err());
        assert!(chevalley_commutator(&ring, &a, e, &a.neg(), e).is_err());
    }

    #[test]
    fn root_render_parse_round_trip() {
        for r in Root::all(MAX_N) {
            assert_eq!(Root::parse(&r.render()).unwrap(), r);
        }
        assert!(Root::parse("e1+e2+e3").is_err());
        assert!(Root::parse("3e1").is_err());
    }
}
