//! Certified classification of intermediate subgroups.
//!
//! The input is an ambient ring `A`, a rank `n`, a base subring `K`
//! (containing 1), and extra generators; together they present the subgroup
//! `H = ⟨ elementary letters over (K, K), extras ⟩`. The classifier looks
//! for the form ring `(R, Λ)` squeezing `H` between the elementary group
//! `Ep(R, Λ)` and its normalizer, and it proves both inclusions rather than
//! asserting them:
//!
//! * lower inclusion: for every elementary generator of `(R, Λ)` a word in
//!   `H`'s generators is produced and re-evaluated to the exact matrix;
//! * upper inclusion: every generator of `H` is conjugated against every
//!   elementary generator of `(R, Λ)`, both ways, and the result is checked
//!   blockwise for membership in the Bak group.
//!
//! Levels are harvested by three mechanisms: direct shape recognition on a
//! growing pool of words (transvections, unipotent-radical members, and
//! commuting two-factor products, the latter two unraveled into per-root
//! certificates), bounded commutator/conjugate pool growth, and, when the
//! ambient ring splits as `K ⊕ N` with `N` the nilradical and `N² = 0`, an
//! exact linear-algebra pass over the congruence kernel.
//!
//! Rank at least 3 is assumed by the word-extraction machinery; rank-2 runs
//! are marked exploratory and may come back inconclusive.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::engine::{eval_word, GroupClosure, Membership, Word, DEFAULT_CAP};
use crate::matrix::{
    ep_generators, in_bak_sp, in_u1, transvection, u1_coordinates, x_root, SpMatrix,
};
use crate::ring::{
    enumerate_form_params, enumerate_subrings, form_param_from_set, form_param_generated,
    subring_from_set, subring_generated, EltSet, FormRing, Ring, RingElt, Subring,
};
use crate::roots::{pos, succ, weyl_route, Root, RootKind};

pub const DEFAULT_HARVEST_DEPTH: usize = 3;
pub const DEFAULT_MAX_DEPTH: usize = 6;

/// Ceiling on the recognition pool per classification run.
const POOL_WIDTH: usize = 4096;

#[derive(Error, Debug)]
pub enum SandwichError {
    #[error("normalizer checks need 1 in the form parameter")]
    UnitNotInParameter,
    #[error("word extraction needs rank at least 3, got {0}")]
    RankTooSmall(usize),
    #[error("unexpected shape: {0}")]
    PatternMismatch(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

/// Whether `g` normalizes `Sp(R, Λ)`: both conjugates of every elementary
/// generator must satisfy the blockwise membership test. Over a finite
/// coefficient ring the elementary group and the full Bak group coincide
/// when `1 ∈ Λ`, which makes the generator sweep conclusive; without 1 the
/// check is unsupported.
pub fn normalizes(ring: &Ring, fr: &FormRing, g: &SpMatrix) -> Result<bool, SandwichError> {
    if !fr.lambda().contains_coords(ring.unit_coords()) {
        return Err(SandwichError::UnitNotInParameter);
    }
    let gi = g.inverse_symplectic();
    for gen in ep_generators(ring, fr, g.n()) {
        let c = g.mul(ring, &gen.mat).mul(ring, &gi);
        if !in_bak_sp(ring, fr, &c) {
            return Ok(false);
        }
        let c2 = gi.mul(ring, &gen.mat).mul(ring, g);
        if !in_bak_sp(ring, fr, &c2) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Subring generated by `K` and all pairwise entry products of the given
/// matrices and their inverses. Any subgroup containing the elementary
/// letters over `K` and these matrices has its ring of levels at least this
/// large, so it is a sound lower bound for deciding when to deepen a search.
pub fn entry_product_ring(ring: &Ring, k: &Subring, gens: &[SpMatrix]) -> Subring {
    let mut seeds: Vec<RingElt> = k.elements(ring).collect();
    for g in gens {
        for m in [g.clone(), g.inverse_symplectic()] {
            let ent = m.coords();
            for &a in ent {
                for &b in ent {
                    if a != 0 && b != 0 {
                        seeds.push(ring.elt(ring.mul_raw(a, b)));
                    }
                }
            }
        }
    }
    subring_generated(ring, seeds)
}

/// A matrix together with a word over a fixed generator list evaluating to
/// it.
#[derive(Clone, Debug)]
pub struct WordElt {
    pub mat: SpMatrix,
    pub word: Word,
}

/// Fixed alphabet for certificate words: the elementary letters over
/// `(K, K)` first, then the extra generators.
pub struct LetterCtx<'a> {
    ring: &'a Ring,
    n: usize,
    k: Subring,
    letters: Vec<SpMatrix>,
    ep_count: usize,
    by_root_scalar: BTreeMap<(Root, u8), u32>,
}

impl<'a> LetterCtx<'a> {
    pub fn new(ring: &'a Ring, n: usize, k: Subring, extras: &[SpMatrix]) -> LetterCtx<'a> {
        assert!(k.ring_id() == ring.id(), "base subring of a different ring");
        let lam = form_param_generated(ring, &k, k.elements(ring));
        debug_assert_eq!(lam.elems(), k.elems());
        let fr = FormRing::new(k, lam).expect("K with itself is a form ring");
        let ep = ep_generators(ring, &fr, n);
        let ep_count = ep.len();
        let mut letters = Vec::with_capacity(ep_count + extras.len());
        let mut by_root_scalar = BTreeMap::new();
        for (i, gen) in ep.into_iter().enumerate() {
            by_root_scalar.insert((gen.root, gen.scalar.coords()), i as u32);
            letters.push(gen.mat);
        }
        for x in extras {
            assert!(x.ring_id() == ring.id() && x.n() == n, "extra over a different setup");
            assert!(x.is_symplectic(ring), "extra generators must be symplectic");
            letters.push(x.clone());
        }
        LetterCtx { ring, n, k, letters, ep_count, by_root_scalar }
    }

    pub fn ring(&self) -> &Ring {
        self.ring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> &Subring {
        &self.k
    }

    pub fn letters(&self) -> &[SpMatrix] {
        &self.letters
    }

    pub fn ep_letter_count(&self) -> usize {
        self.ep_count
    }

    pub fn eval(&self, w: &Word) -> SpMatrix {
        eval_word(self.ring, self.n, &self.letters, w)
    }

    /// Single-letter word for `x_root(root, scalar)`, when that is a letter.
    fn letter_word(&self, root: &Root, scalar: u8) -> Option<Word> {
        self.by_root_scalar.get(&(*root, scalar)).map(|&i| Word::letter(i))
    }

    /// Word for the root-relabeling element of `delta` (three letters).
    fn weyl_word(&self, delta: &Root) -> Word {
        let one = self.ring.unit_coords();
        let a = self.letter_word(delta, one).expect("unit letters always exist");
        let b = self.letter_word(&delta.neg(), one).expect("unit letters always exist");
        Word::concat(&[&a, &b, &a])
    }

    /// Wraps `word` (a certificate for `x_from(s)`) into a certificate for
    /// `x_to(s)` by conjugating along a reflection chain.
    fn route_wrap(&self, word: &Word, from: &Root, to: &Root) -> Word {
        let chain = weyl_route(self.n, from, to);
        if chain.is_empty() {
            return word.clone();
        }
        // the chain applies left to right, so the conjugator multiplies
        // in reverse order
        let parts: Vec<Word> = chain.iter().rev().map(|d| self.weyl_word(d)).collect();
        let refs: Vec<&Word> = parts.iter().collect();
        let w = Word::concat(&refs);
        Word::concat(&[&w, word, &w.inverse()])
    }
}

fn fiber_scalar(g: &SpMatrix, n: usize, root: &Root) -> u8 {
    let [(i, j), _] = root.fiber();
    g.get_pos(pos(n, i), pos(n, j))
}

/// Splits off the short factor of `g = x_alpha(μ) · (part commuting with the
/// probe)`: a probe `x_γ(1)` is chosen with `α + γ` short and `γ + beta_ctx`
/// not a root, so `[g, x_γ(1)] = x_{α+γ}(μ)`, which is then routed back to
/// `α`. Returns the scalar and the certificate word.
fn isolate_short(
    cx: &LetterCtx,
    g: &WordElt,
    alpha: &Root,
    beta_ctx: &Root,
) -> Result<(u8, Word), SandwichError> {
    let gamma = Root::all(cx.n)
        .into_iter()
        .filter(|r| r.is_short())
        .find(|r| {
            r != alpha
                && *r != alpha.neg()
                && alpha.try_add(r).map(|s| s.is_short()).unwrap_or(false)
                && *r != beta_ctx.neg()
                && r.try_add(beta_ctx).is_none()
        })
        .ok_or_else(|| {
            SandwichError::PatternMismatch(format!(
                "no probe root for ({}, {}) at rank {}",
                alpha.render(),
                beta_ctx.render(),
                cx.n
            ))
        })?;
    let probe_word = cx.letter_word(&gamma, cx.ring.unit_coords()).expect("unit letter");
    let probe = x_root(cx.ring, cx.n, &gamma, cx.ring.one());
    let target = alpha.try_add(&gamma).expect("checked short sum");
    let c_mat = g
        .mat
        .mul(cx.ring, &probe)
        .mul(cx.ring, &g.mat.inverse_symplectic())
        .mul(cx.ring, &probe.inverse_symplectic());
    let mu = fiber_scalar(&c_mat, cx.n, &target);
    if c_mat != x_root(cx.ring, cx.n, &target, cx.ring.elt(mu)) {
        return Err(SandwichError::PatternMismatch(format!(
            "probe commutator at {} is not a single root element",
            target.render()
        )));
    }
    let c_word = Word::commutator(&g.word, &probe_word);
    let word = cx.route_wrap(&c_word, &target, alpha);
    debug_assert_eq!(cx.eval(&word), x_root(cx.ring, cx.n, alpha, cx.ring.elt(mu)));
    Ok((mu, word))
}

/// Certificates for the two factors of `g = x_alpha(μ) x_beta(λ)` with
/// `alpha` short, `beta` long, and `alpha + beta` not a root. Needs rank 3.
pub struct Uncoupled {
    pub mu: u8,
    pub lambda: u8,
    pub short_word: Word,
    pub long_word: Word,
}

pub fn uncouple(
    cx: &LetterCtx,
    g: &WordElt,
    alpha: &Root,
    beta: &Root,
) -> Result<Uncoupled, SandwichError> {
    if cx.n < 3 {
        return Err(SandwichError::RankTooSmall(cx.n));
    }
    assert!(alpha.is_short() && beta.is_long(), "uncouple takes a short/long pair");
    assert!(alpha.try_add(beta).is_none(), "factors must commute");
    let ring = cx.ring;
    let mu = fiber_scalar(&g.mat, cx.n, alpha);
    let lambda = fiber_scalar(&g.mat, cx.n, beta);
    let expected = x_root(ring, cx.n, alpha, ring.elt(mu))
        .mul(ring, &x_root(ring, cx.n, beta, ring.elt(lambda)));
    if g.mat != expected {
        return Err(SandwichError::PatternMismatch(format!(
            "not a two-factor product over {} and {}",
            alpha.render(),
            beta.render()
        )));
    }

    let (mu2, short_word) = isolate_short(cx, g, alpha, beta)?;
    if mu2 != mu {
        return Err(SandwichError::PatternMismatch("short factor scalar drifted".into()));
    }

    // peel: x_alpha(μ)⁻¹ g = x_beta(λ)
    let peel = Word::concat(&[&short_word.inverse(), &g.word]);
    let x_beta = x_root(ring, cx.n, beta, ring.elt(lambda));
    debug_assert_eq!(cx.eval(&peel), x_beta);

    // split the long factor against a short probe: [x_δ(1), x_beta(λ)] =
    // x_{δ+β}(λ) x_{2δ+β}(λ)
    let delta = Root::all(cx.n)
        .into_iter()
        .filter(|r| r.is_short())
        .find(|r| r.try_add(beta).is_some())
        .expect("every long root has short neighbours");
    let a_root = delta.try_add(beta).expect("chosen to be a root");
    let b_root = beta.try_add_twice(&delta).expect("β+2δ is a root here");
    debug_assert!(a_root.is_short() && b_root.is_long());
    let probe = x_root(ring, cx.n, &delta, ring.one());
    let probe_word = cx.letter_word(&delta, ring.unit_coords()).expect("unit letter");
    let h_mat = probe
        .mul(ring, &x_beta)
        .mul(ring, &probe.inverse_symplectic())
        .mul(ring, &x_beta.inverse_symplectic());
    let h_expected = x_root(ring, cx.n, &a_root, ring.elt(lambda))
        .mul(ring, &x_root(ring, cx.n, &b_root, ring.elt(lambda)));
    if h_mat != h_expected {
        return Err(SandwichError::PatternMismatch("long factor did not split as expected".into()));
    }
    let h = WordElt { mat: h_mat, word: Word::commutator(&probe_word, &peel) };
    let (lam2, w_a) = isolate_short(cx, &h, &a_root, &b_root)?;
    if lam2 != lambda {
        return Err(SandwichError::PatternMismatch("long factor scalar drifted".into()));
    }
    let w_b = Word::concat(&[&w_a.inverse(), &h.word]);
    debug_assert_eq!(cx.eval(&w_b), x_root(ring, cx.n, &b_root, ring.elt(lambda)));
    let long_word = cx.route_wrap(&w_b, &b_root, beta);
    debug_assert_eq!(cx.eval(&long_word), x_beta);
    Ok(Uncoupled { mu, lambda, short_word, long_word })
}

/// Per-coordinate certificates for a member of the unipotent radical:
/// returns `(j, μ_j, word)` for every `j ∈ I ∖ {1}` in index order, the word
/// evaluating to `T_{1j}(μ_j)`. Words are over the letters plus `g` itself
/// (through `g.word`). Needs rank 3.
pub fn u1_factorize(
    cx: &LetterCtx,
    g: &WordElt,
) -> Result<Vec<(i8, u8, Word)>, SandwichError> {
    if cx.n < 3 {
        return Err(SandwichError::RankTooSmall(cx.n));
    }
    if !in_u1(cx.ring, &g.mat) {
        return Err(SandwichError::PatternMismatch("not a unipotent-radical member".into()));
    }
    let mut found: BTreeMap<i8, (u8, Word)> = BTreeMap::new();
    extract_u1(cx, g, &mut found)?;
    let mut out = Vec::new();
    for (j, mu) in u1_coordinates(cx.ring, &g.mat) {
        let (coords, word) = match found.remove(&j) {
            Some((c, w)) => (c, w),
            None => (0, Word::empty()),
        };
        if coords != mu.coords() {
            return Err(SandwichError::PatternMismatch(format!(
                "coordinate at {j} extracted incorrectly"
            )));
        }
        let expect = transvection(cx.ring, cx.n, 1, j, mu);
        if cx.eval(&word) != expect {
            return Err(SandwichError::PatternMismatch(format!(
                "certificate at {j} does not evaluate"
            )));
        }
        out.push((j, coords, word));
    }
    Ok(out)
}

fn extract_u1(
    cx: &LetterCtx,
    g: &WordElt,
    out: &mut BTreeMap<i8, (u8, Word)>,
) -> Result<(), SandwichError> {
    let ring = cx.ring;
    let n = cx.n;
    let coords = u1_coordinates(ring, &g.mat);
    let first = coords.iter().find(|(_, mu)| !mu.is_zero());
    let (h, mu_h) = match first {
        None => return Ok(()),
        Some(&(h, mu)) => (h, mu),
    };
    if h == -1 {
        out.insert(-1, (mu_h.coords(), g.word.clone()));
        return Ok(());
    }
    if h == -2 {
        // g = x_{e1+e2}(μ_{-2}) x_{2e1}(μ_{-1}); both certificates at once
        let alpha = Root::of_positions(1, -2);
        let beta = Root::of_positions(1, -1);
        let parts = uncouple(cx, g, &alpha, &beta)?;
        out.insert(-2, (parts.mu, parts.short_word));
        if parts.lambda != 0 {
            out.insert(-1, (parts.lambda, parts.long_word));
        }
        return Ok(());
    }
    // push the leading coordinate one slot later with a fixed probe:
    // c = [T_{h,i}(1), g] lands in the radical with leading coordinate μ_h
    // at i = succ(h)
    let i = succ(n, h);
    let probe_root = Root::of_positions(h, i);
    let probe_word = cx
        .letter_word(&probe_root, ring.unit_coords())
        .expect("unit letters always exist");
    let probe = transvection(ring, n, h, i, ring.one());
    let c_mat = probe
        .mul(ring, &g.mat)
        .mul(ring, &probe.inverse_symplectic())
        .mul(ring, &g.mat.inverse_symplectic());
    if !in_u1(ring, &c_mat) {
        return Err(SandwichError::PatternMismatch("probe left the radical".into()));
    }
    let c_coords = u1_coordinates(ring, &c_mat);
    let lead = c_coords.iter().find(|(_, m)| !m.is_zero());
    if lead.map(|&(j, m)| (j, m.coords())) != Some((i, mu_h.coords())) {
        return Err(SandwichError::PatternMismatch(
            "probe commutator has the wrong leading coordinate".into(),
        ));
    }
    let c = WordElt { mat: c_mat, word: Word::commutator(&probe_word, &g.word) };
    let mut inner: BTreeMap<i8, (u8, Word)> = BTreeMap::new();
    extract_u1(cx, &c, &mut inner)?;
    let (_, v_i) = inner.remove(&i).expect("leading coordinate was just checked nonzero");
    let from = Root::of_positions(1, i);
    let to = Root::of_positions(1, h);
    let v_h = cx.route_wrap(&v_i, &from, &to);
    let t_h = transvection(ring, n, 1, h, mu_h);
    if cx.eval(&v_h) != t_h {
        return Err(SandwichError::PatternMismatch("routed coordinate word drifted".into()));
    }
    // peel the certified factor and recurse on the strictly later support
    let rest = WordElt {
        mat: t_h.inverse_symplectic().mul(ring, &g.mat),
        word: Word::concat(&[&v_h.inverse(), &g.word]),
    };
    debug_assert_eq!(cx.eval(&rest.word), rest.mat);
    out.insert(h, (mu_h.coords(), v_h));
    extract_u1(cx, &rest, out)
}

/// Accumulated levels at the canonical roots, each scalar carrying a word
/// certificate.
struct LevelAcc {
    short: BTreeMap<u8, Word>,
    long: BTreeMap<u8, Word>,
}

fn canonical_short() -> Root {
    Root::short(1, 1, 2, -1)
}

fn canonical_long() -> Root {
    Root::long(1, 1)
}

impl LevelAcc {
    fn new(cx: &LetterCtx) -> LevelAcc {
        let mut acc = LevelAcc { short: BTreeMap::new(), long: BTreeMap::new() };
        // the base letters provide every K-scalar directly
        for c in cx.k.elems().iter().filter(|&c| c != 0) {
            acc.short.insert(c, cx.letter_word(&canonical_short(), c).expect("K letter"));
            acc.long.insert(c, cx.letter_word(&canonical_long(), c).expect("K letter"));
        }
        acc
    }

    fn insert_short(&mut self, cx: &LetterCtx, root: &Root, scalar: u8, word: Word) {
        debug_assert!(root.is_short());
        if scalar == 0 || self.short.contains_key(&scalar) {
            return;
        }
        let routed = cx.route_wrap(&word, root, &canonical_short());
        debug_assert_eq!(
            cx.eval(&routed),
            x_root(cx.ring, cx.n, &canonical_short(), cx.ring.elt(scalar))
        );
        self.short.insert(scalar, routed);
    }

    fn insert_long(&mut self, cx: &LetterCtx, root: &Root, scalar: u8, word: Word) {
        debug_assert!(root.is_long());
        if scalar == 0 || self.long.contains_key(&scalar) {
            return;
        }
        let routed = cx.route_wrap(&word, root, &canonical_long());
        debug_assert_eq!(
            cx.eval(&routed),
            x_root(cx.ring, cx.n, &canonical_long(), cx.ring.elt(scalar))
        );
        self.long.insert(scalar, routed);
    }

    /// Closes the level sets into a form ring, composing certificates for
    /// every derived scalar: sums concatenate; short products go through a
    /// two-short commutator; `λμ²` and the containment of long levels in the
    /// short ones go through a long–short commutator and an uncoupling.
    /// Rank 2 only gets the additive steps.
    fn close(&mut self, cx: &LetterCtx) {
        let ring = cx.ring;
        let a0 = canonical_short();
        loop {
            let mut grew = false;
            let shorts: Vec<(u8, Word)> =
                self.short.iter().map(|(c, w)| (*c, w.clone())).collect();
            let longs: Vec<(u8, Word)> =
                self.long.iter().map(|(c, w)| (*c, w.clone())).collect();

            for (s, ws) in &shorts {
                for (t, wt) in &shorts {
                    let sum = s ^ t;
                    if sum != 0 && !self.short.contains_key(&sum) {
                        self.short.insert(sum, Word::concat(&[ws, wt]));
                        grew = true;
                    }
                }
            }
            for (s, ws) in &longs {
                for (t, wt) in &longs {
                    let sum = s ^ t;
                    if sum != 0 && !self.long.contains_key(&sum) {
                        self.long.insert(sum, Word::concat(&[ws, wt]));
                        grew = true;
                    }
                }
            }

            if cx.n >= 3 {
                // products of short levels: [x_{e1-e2}(s), x_{e2-e3}(t)] =
                // x_{e1-e3}(st)
                let mid = Root::short(2, 1, 3, -1);
                let far = Root::short(1, 1, 3, -1);
                for (s, ws) in &shorts {
                    for (t, wt) in &shorts {
                        let st = ring.mul_raw(*s, *t);
                        if st == 0 || self.short.contains_key(&st) {
                            continue;
                        }
                        let wt_mid = cx.route_wrap(wt, &a0, &mid);
                        let w = Word::commutator(ws, &wt_mid);
                        debug_assert_eq!(cx.eval(&w), x_root(ring, cx.n, &far, ring.elt(st)));
                        self.insert_short(cx, &far, st, w);
                        grew = true;
                    }
                }

                // λμ² into the long level, λμ into the short level, and
                // λ itself into the short level at μ = 1:
                // [x_{2e1}(λ), x_{e2-e1}(μ)] = x_{e1+e2}(λμ) x_{2e2}(λμ²)
                let down = Root::short(1, -1, 2, 1);
                let mixed = Root::short(1, 1, 2, 1);
                let opp = Root::long(2, 1);
                for (l, wl) in &longs {
                    for (m, wm) in &shorts {
                        let lm = ring.mul_raw(*l, *m);
                        let lm2 = ring.mul_raw(lm, *m);
                        let need_short = lm != 0 && !self.short.contains_key(&lm);
                        let need_long = lm2 != 0 && !self.long.contains_key(&lm2);
                        if !need_short && !need_long {
                            continue;
                        }
                        let wm_down = cx.route_wrap(wm, &a0, &down);
                        let c_word = Word::commutator(wl, &wm_down);
                        let c_mat = cx.eval(&c_word);
                        let expected = x_root(ring, cx.n, &mixed, ring.elt(lm))
                            .mul(ring, &x_root(ring, cx.n, &opp, ring.elt(lm2)));
                        assert_eq!(c_mat, expected, "long-short commutator shape");
                        let parts = uncouple(cx, &WordElt { mat: c_mat, word: c_word }, &mixed, &opp)
                            .expect("two-factor shape was just verified");
                        if need_short {
                            self.insert_short(cx, &mixed, lm, parts.short_word);
                            grew = true;
                        }
                        if need_long {
                            self.insert_long(cx, &opp, lm2, parts.long_word);
                            grew = true;
                        }
                    }
                }
            }

            if !grew {
                break;
            }
        }
        debug_assert!(
            cx.n < 3 || self.long.keys().all(|c| self.short.contains_key(c)),
            "long levels embed in short levels via μ = 1"
        );
    }

    fn short_set(&self) -> EltSet {
        let mut s = EltSet::default();
        s.insert(0);
        for &c in self.short.keys() {
            s.insert(c);
        }
        s
    }

    fn long_set(&self) -> EltSet {
        let mut s = EltSet::default();
        s.insert(0);
        for &c in self.long.keys() {
            s.insert(c);
        }
        s
    }
}

/// How the congruence-kernel pass went.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RouteC {
    Applied { rank: usize },
    NotApplicable(String),
}

/// Decomposition `A = K ⊕ N` with `N` the nilradical, `N² = 0`.
struct Retraction {
    /// π(c) for every coordinate vector, the K-component.
    proj: Vec<u8>,
    nil: EltSet,
}

impl Retraction {
    fn build(ring: &Ring, k: &Subring) -> Result<Retraction, String> {
        let nil = ring.nilradical();
        for a in nil.iter() {
            for b in nil.iter() {
                if ring.mul_raw(a, b) != 0 {
                    return Err("the nilradical does not square to zero".into());
                }
            }
        }
        if k.len() * nil.len() != ring.card() {
            return Err("the base subring does not complement the nilradical".into());
        }
        for c in k.elems().iter() {
            if c != 0 && nil.contains(c) {
                return Err("the base subring meets the nilradical".into());
            }
        }
        let mut proj = vec![0u8; ring.card()];
        for c in 0..ring.card() as u16 {
            let c = c as u8;
            let mut hit = None;
            for kk in k.elems().iter() {
                if nil.contains(c ^ kk) {
                    hit = Some(kk);
                    break;
                }
            }
            match hit {
                Some(kk) => proj[c as usize] = kk,
                None => return Err("an element fails to split across K and the nilradical".into()),
            }
        }
        Ok(Retraction { proj, nil })
    }

    fn project(&self, ring: &Ring, g: &SpMatrix) -> SpMatrix {
        let ent = g.coords().iter().map(|&c| self.proj[c as usize]).collect();
        SpMatrix::from_coords(ring, g.n(), ent)
    }
}

/// F₂-span of congruence-kernel residues with word tracking. Each generator
/// is kept verbatim; solving expresses a target as a subset sum and returns
/// the concatenation of the chosen generators' words (the kernel is abelian
/// when `N² = 0`, so order is immaterial).
struct CongruenceSpan {
    gens: Vec<(Vec<u64>, Word)>,
    /// echelon rows: reduced vector plus the generator subset producing it
    rows: Vec<(Vec<u64>, Vec<u64>)>,
}

impl CongruenceSpan {
    fn new() -> CongruenceSpan {
        CongruenceSpan { gens: Vec::new(), rows: Vec::new() }
    }

    fn reduce(&self, vec: &mut [u64], mask: &mut [u64]) {
        for (rv, rm) in &self.rows {
            let lead = rv.iter().rposition(|&w| w != 0).map(|i| (i, 63 - rv[i].leading_zeros()));
            if let Some((wi, bi)) = lead {
                if vec[wi] >> bi & 1 == 1 {
                    for (v, r) in vec.iter_mut().zip(rv) {
                        *v ^= r;
                    }
                    for (m, r) in mask.iter_mut().zip(rm) {
                        *m ^= r;
                    }
                }
            }
        }
    }

    /// Adds a generator if it enlarges the span; returns whether it did.
    fn try_add(&mut self, vec: Vec<u64>, word: Word) -> bool {
        let mut v = vec.clone();
        let mut mask = vec![0u64; self.gens.len() / 64 + 1];
        self.reduce(&mut v, &mut mask);
        if v.iter().all(|&w| w == 0) {
            return false;
        }
        let gi = self.gens.len();
        self.gens.push((vec, word));
        if mask.len() <= gi / 64 {
            mask.resize(gi / 64 + 1, 0);
        }
        mask[gi / 64] |= 1 << (gi % 64);
        for (_, rm) in &mut self.rows {
            if rm.len() < mask.len() {
                rm.resize(mask.len(), 0);
            }
        }
        self.rows.push((v, mask));
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Word for the target vector, if it lies in the span.
    fn solve(&self, target: &[u64]) -> Option<Word> {
        let mut v = target.to_vec();
        let mut mask = vec![0u64; self.gens.len() / 64 + 1];
        self.reduce(&mut v, &mut mask);
        if v.iter().any(|&w| w != 0) {
            return None;
        }
        let mut parts: Vec<&Word> = Vec::new();
        for (gi, (_, w)) in self.gens.iter().enumerate() {
            if mask.get(gi / 64).map(|&m| m >> (gi % 64) & 1 == 1).unwrap_or(false) {
                parts.push(w);
            }
        }
        Some(Word::concat(&parts))
    }
}

/// Classification request: ambient ring, rank, base subring, extra
/// generators of `H`.
pub struct ClassifyInput<'a> {
    pub ring: &'a Ring,
    pub n: usize,
    pub k: Subring,
    pub extras: Vec<SpMatrix>,
}

/// Search knobs. `base` shares a previously enumerated closure of the
/// elementary letters over `(K, K)` with the congruence pass (it is
/// validated against the letters before use); `uniqueness_cap` bounds the
/// subgroup enumeration behind the uniqueness cross-check, `None` skipping
/// it outright.
pub struct ClassifyOptions<'a> {
    pub harvest_depth: usize,
    pub max_depth: usize,
    pub uniqueness_cap: Option<usize>,
    pub base: Option<&'a GroupClosure>,
}

impl Default for ClassifyOptions<'static> {
    fn default() -> Self {
        ClassifyOptions {
            harvest_depth: DEFAULT_HARVEST_DEPTH,
            max_depth: DEFAULT_MAX_DEPTH,
            uniqueness_cap: Some(DEFAULT_CAP),
            base: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassifyStatus {
    Certified,
    Inconclusive { reason: String },
}

#[derive(Clone, Debug)]
pub struct LowerCert {
    pub root: Root,
    pub scalar: u8,
    pub word: Word,
}

#[derive(Clone, Debug)]
pub enum UniquenessCheck {
    Verified { pairs_tested: usize },
    Skipped { reason: String },
}

pub struct ClassifyOutcome {
    pub status: ClassifyStatus,
    pub r: Subring,
    pub lambda_elems: EltSet,
    pub depth_used: usize,
    pub exploratory: bool,
    pub route_c: RouteC,
    /// word for every elementary generator of the certified pair
    pub lower: Vec<LowerCert>,
    /// per H-generator outcome of the normalizer check
    pub upper: Vec<bool>,
    pub uniqueness: UniquenessCheck,
    pub diagnostics: Vec<String>,
}

/// Running classification state; deepen as needed and read the outcome.
pub struct Session<'a> {
    cx: LetterCtx<'a>,
    pool: Vec<WordElt>,
    pool_keys: HashSet<u128>,
    scanned: usize,
    levels: LevelAcc,
    route_c: RouteC,
    depth: usize,
}

impl<'a> Session<'a> {
    pub fn new(input: &ClassifyInput<'a>) -> Session<'a> {
        Session::with_base(input, None)
    }

    pub fn with_base(input: &ClassifyInput<'a>, base: Option<&GroupClosure>) -> Session<'a> {
        let cx = LetterCtx::new(input.ring, input.n, input.k, &input.extras);
        let levels = LevelAcc::new(&cx);
        let mut s = Session {
            pool: Vec::new(),
            pool_keys: HashSet::new(),
            scanned: 0,
            levels,
            route_c: RouteC::NotApplicable("not attempted".into()),
            cx,
            depth: 0,
        };
        let dim = input.ring.dim();
        let id_key = SpMatrix::identity(input.ring, input.n).encode(dim);
        s.pool_keys.insert(id_key);
        for (i, m) in s.cx.letters.iter().enumerate() {
            for (mat, word) in [
                (m.clone(), Word::letter(i as u32)),
                (m.inverse_symplectic(), Word::letter_inv(i as u32)),
            ] {
                let key = mat.encode(dim);
                if s.pool_keys.insert(key) {
                    s.pool.push(WordElt { mat, word });
                }
            }
        }
        s.route_c = s.run_route_c(base);
        s
    }

    pub fn ctx(&self) -> &LetterCtx<'a> {
        &self.cx
    }

    /// Exact congruence-kernel harvest, available when the ambient ring is
    /// the base subring plus a square-zero nilradical.
    fn run_route_c(&mut self, shared_base: Option<&GroupClosure>) -> RouteC {
        let ring = self.cx.ring;
        let n = self.cx.n;
        if self.cx.k.is_whole(ring) {
            return RouteC::NotApplicable("base subring is the whole ring".into());
        }
        let retract = match Retraction::build(ring, &self.cx.k) {
            Ok(r) => r,
            Err(reason) => return RouteC::NotApplicable(reason),
        };
        let base_letters = &self.cx.letters[..self.cx.ep_count];
        // a caller-supplied enumeration is only trusted after it is checked
        // against the letters it claims to enumerate
        let usable = |b: &GroupClosure| {
            b.is_complete()
                && b.n() == n
                && b.gens().len() == base_letters.len()
                && b.gens().iter().zip(base_letters).all(|(a, b)| a == b)
        };
        let computed;
        let base: &GroupClosure = match shared_base {
            Some(b) if usable(b) => b,
            _ => {
                computed = match GroupClosure::closure(ring, n, base_letters, DEFAULT_CAP) {
                    Ok(b) => b,
                    Err(e) => return RouteC::NotApplicable(e.to_string()),
                };
                if !computed.is_complete() {
                    return RouteC::NotApplicable("base closure exceeded the element cap".into());
                }
                &computed
            }
        };

        let dim = ring.dim();
        let bits = 4 * n * n * dim;
        let mut span = CongruenceSpan::new();
        let id = SpMatrix::identity(ring, n);
        let vec_of = |m: &SpMatrix| -> Vec<u64> {
            let mut v = vec![0u64; bits.div_ceil(64)];
            for (k, (&c, &i)) in m.coords().iter().zip(id.coords()).enumerate() {
                let x = c ^ i;
                for b in 0..dim {
                    if x >> b & 1 == 1 {
                        let bit = k * dim + b;
                        v[bit / 64] |= 1 << (bit % 64);
                    }
                }
            }
            v
        };

        // seed: each extra letter, reduced by the witness of its projection
        let mut worklist: Vec<(SpMatrix, Word)> = Vec::new();
        for i in self.cx.ep_count..self.cx.letters.len() {
            let y = &self.cx.letters[i];
            let ybar = retract.project(ring, y);
            let wit = match base.witness(&ybar) {
                Some(w) => w,
                None => {
                    return RouteC::NotApplicable(
                        "a projected generator escaped the base closure".into(),
                    )
                }
            };
            let z_word = Word::concat(&[&wit.inverse(), &Word::letter(i as u32)]);
            let z = ybar.inverse_symplectic().mul(ring, y);
            debug_assert_eq!(retract.project(ring, &z), id, "congruence element");
            if span.try_add(vec_of(&z), z_word.clone()) {
                worklist.push((z, z_word));
            }
        }

        // close the span under conjugation by every letter (the kernel is an
        // abelian module; conjugation acts through the quotient)
        let mut at = 0;
        while at < worklist.len() {
            let (zm, zw) = worklist[at].clone();
            at += 1;
            for (i, l) in self.cx.letters.iter().enumerate() {
                let li = l.inverse_symplectic();
                for (mat, word) in [
                    (
                        li.mul(ring, &zm).mul(ring, l),
                        Word::concat(&[&Word::letter_inv(i as u32), &zw, &Word::letter(i as u32)]),
                    ),
                    (
                        l.mul(ring, &zm).mul(ring, &li),
                        Word::concat(&[&Word::letter(i as u32), &zw, &Word::letter_inv(i as u32)]),
                    ),
                ] {
                    if span.try_add(vec_of(&mat), word.clone()) {
                        worklist.push((mat, word));
                    }
                }
            }
        }

        // harvest: solve for each nilpotent scalar at the canonical roots
        for root in [canonical_short(), canonical_long()] {
            for b in retract.nil.iter().filter(|&b| b != 0) {
                let target = x_root(ring, n, &root, ring.elt(b));
                if let Some(word) = span.solve(&vec_of(&target)) {
                    assert_eq!(self.cx.eval(&word), target, "solved certificate evaluates");
                    match root.kind() {
                        RootKind::Short => self.levels.insert_short(&self.cx, &root, b, word),
                        RootKind::Long => self.levels.insert_long(&self.cx, &root, b, word),
                    }
                }
            }
        }
        RouteC::Applied { rank: span.rank() }
    }

    /// Scans any unscanned pool entries for recognizable shapes and closes
    /// the levels.
    fn harvest_scan(&mut self) {
        let ring = self.cx.ring;
        let n = self.cx.n;
        while self.scanned < self.pool.len() {
            let we = self.pool[self.scanned].clone();
            self.scanned += 1;
            if we.mat.is_identity(ring) {
                continue;
            }
            // exact root element?
            let mut matched = false;
            for root in Root::all(n) {
                let s = fiber_scalar(&we.mat, n, &root);
                if s != 0 && we.mat == x_root(ring, n, &root, ring.elt(s)) {
                    match root.kind() {
                        RootKind::Short => {
                            self.levels.insert_short(&self.cx, &root, s, we.word.clone())
                        }
                        RootKind::Long => {
                            self.levels.insert_long(&self.cx, &root, s, we.word.clone())
                        }
                    }
                    matched = true;
                    break;
                }
            }
            if matched || n < 3 {
                continue;
            }
            // unipotent-radical member?
            if in_u1(ring, &we.mat) {
                if let Ok(parts) = u1_factorize(&self.cx, &we) {
                    for (j, c, word) in parts {
                        if c == 0 {
                            continue;
                        }
                        let root = Root::of_positions(1, j);
                        match root.kind() {
                            RootKind::Short => self.levels.insert_short(&self.cx, &root, c, word),
                            RootKind::Long => self.levels.insert_long(&self.cx, &root, c, word),
                        }
                    }
                }
                continue;
            }
            // commuting short/long two-factor product?
            'pairs: for alpha in Root::all(n) {
                if !alpha.is_short() {
                    continue;
                }
                for beta in Root::all(n) {
                    if !beta.is_long() || alpha.try_add(&beta).is_some() {
                        continue;
                    }
                    let s = fiber_scalar(&we.mat, n, &alpha);
                    let t = fiber_scalar(&we.mat, n, &beta);
                    if s == 0 || t == 0 {
                        continue;
                    }
                    let expect = x_root(ring, n, &alpha, ring.elt(s))
                        .mul(ring, &x_root(ring, n, &beta, ring.elt(t)));
                    if we.mat == expect {
                        if let Ok(parts) = uncouple(&self.cx, &we, &alpha, &beta) {
                            self.levels.insert_short(&self.cx, &alpha, parts.mu, parts.short_word);
                            self.levels.insert_long(&self.cx, &beta, parts.lambda, parts.long_word);
                        }
                        break 'pairs;
                    }
                }
            }
        }
        self.levels.close(&self.cx);
    }

    /// One round of bounded pool growth: commutators and conjugates of the
    /// current pool against every letter, deduplicated, in deterministic
    /// order.
    fn grow_pool(&mut self) {
        let ring = self.cx.ring;
        let dim = ring.dim();
        let snapshot = self.pool.len();
        for pi in 0..snapshot {
            if self.pool.len() >= POOL_WIDTH {
                break;
            }
            let p = self.pool[pi].clone();
            let p_inv = p.mat.inverse_symplectic();
            for (li, l) in self.cx.letters.iter().enumerate() {
                if self.pool.len() >= POOL_WIDTH {
                    break;
                }
                let li_u = li as u32;
                let l_inv = l.inverse_symplectic();
                let comm = p.mat.mul(ring, l).mul(ring, &p_inv).mul(ring, &l_inv);
                let conj_a = l_inv.mul(ring, &p.mat).mul(ring, l);
                let conj_b = l.mul(ring, &p.mat).mul(ring, &l_inv);
                let candidates = [
                    (comm, Word::commutator(&p.word, &Word::letter(li_u))),
                    (
                        conj_a,
                        Word::concat(&[&Word::letter_inv(li_u), &p.word, &Word::letter(li_u)]),
                    ),
                    (
                        conj_b,
                        Word::concat(&[&Word::letter(li_u), &p.word, &Word::letter_inv(li_u)]),
                    ),
                ];
                for (mat, word) in candidates {
                    if self.pool_keys.insert(mat.encode(dim)) {
                        self.pool.push(WordElt { mat, word });
                    }
                }
            }
        }
    }

    fn candidate(&self) -> Option<(Subring, EltSet)> {
        let ring = self.cx.ring;
        let r = subring_from_set(ring, self.levels.short_set())?;
        let lam_set = self.levels.long_set();
        form_param_from_set(ring, &r, lam_set)?;
        Some((r, lam_set))
    }
}

/// Full classification loop with certificates.
pub fn classify(
    input: &ClassifyInput,
    opts: &ClassifyOptions,
) -> Result<ClassifyOutcome, SandwichError> {
    let (harvest_depth, max_depth) = (opts.harvest_depth, opts.max_depth);
    let ring = input.ring;
    let n = input.n;
    let mut session = Session::with_base(input, opts.base);
    let exploratory = n < 3;
    let mut diagnostics = Vec::new();

    let targets = entry_product_ring(ring, &input.k, &input.extras);
    let mut last_candidate: Option<(Subring, EltSet)> = None;
    let mut depth = 0;
    let mut failing_gen = None;

    while depth < max_depth.max(harvest_depth) {
        depth += 1;
        if depth > 1 {
            session.grow_pool();
        }
        session.harvest_scan();
        session.depth = depth;

        let (r, lam_set) = match session.candidate() {
            Some(c) => c,
            None => {
                diagnostics.push(format!("depth {depth}: levels not yet closed into a form ring"));
                continue;
            }
        };
        last_candidate = Some((r, lam_set));
        if !targets.elems().is_subset(r.elems()) {
            diagnostics.push(format!(
                "depth {depth}: entry products escape the candidate ring ({} of {} elements)",
                r.len(),
                targets.len()
            ));
            continue;
        }
        let lam = form_param_from_set(ring, &r, lam_set).expect("validated by candidate()");
        let fr = FormRing::new(r, lam).expect("parameter constructed within r");
        let mut all_ok = true;
        failing_gen = None;
        let mut upper = Vec::with_capacity(session.cx.letters.len());
        for (gi, g) in session.cx.letters.iter().enumerate() {
            let ok = normalizes(ring, &fr, g)?;
            upper.push(ok);
            if !ok {
                all_ok = false;
                failing_gen = Some(gi);
            }
        }
        if !all_ok {
            diagnostics.push(format!(
                "depth {depth}: generator {} does not normalize the candidate",
                failing_gen.unwrap()
            ));
            continue;
        }

        // certified: build the complete lower certificates
        let lower = build_lower_certs(&session, &fr)?;
        let uniqueness = match opts.uniqueness_cap {
            Some(cap) => check_uniqueness(&session, &fr, cap),
            None => UniquenessCheck::Skipped { reason: "disabled by caller".into() },
        };
        return Ok(ClassifyOutcome {
            status: ClassifyStatus::Certified,
            r,
            lambda_elems: lam_set,
            depth_used: depth,
            exploratory,
            route_c: session.route_c.clone(),
            lower,
            upper,
            uniqueness,
            diagnostics,
        });
    }

    let (r, lambda_elems) = last_candidate.unwrap_or_else(|| {
        (input.k, {
            let mut s = EltSet::default();
            s.insert(0);
            s
        })
    });
    let reason = match failing_gen {
        Some(gi) => format!("generator {gi} still fails the normalizer check at depth {depth}"),
        None => format!("no stable candidate after depth {depth}"),
    };
    Ok(ClassifyOutcome {
        status: ClassifyStatus::Inconclusive { reason },
        r,
        lambda_elems,
        depth_used: depth,
        exploratory,
        route_c: session.route_c.clone(),
        lower: Vec::new(),
        upper: Vec::new(),
        uniqueness: UniquenessCheck::Skipped { reason: "classification inconclusive".into() },
        diagnostics,
    })
}

fn build_lower_certs(
    session: &Session,
    fr: &FormRing,
) -> Result<Vec<LowerCert>, SandwichError> {
    let cx = &session.cx;
    let ring = cx.ring;
    let mut out = Vec::new();
    for gen in ep_generators(ring, fr, cx.n) {
        let sc = gen.scalar.coords();
        let (canon, word) = match gen.root.kind() {
            RootKind::Short => (canonical_short(), session.levels.short.get(&sc)),
            RootKind::Long => (canonical_long(), session.levels.long.get(&sc)),
        };
        let word = word.ok_or_else(|| {
            SandwichError::PatternMismatch(format!(
                "missing level certificate for scalar {}",
                ring.fmt_coords(sc)
            ))
        })?;
        let routed = cx.route_wrap(word, &canon, &gen.root);
        if cx.eval(&routed) != gen.mat {
            return Err(SandwichError::PatternMismatch(format!(
                "certificate for {}({}) does not evaluate",
                gen.root.render(),
                ring.fmt_coords(sc)
            )));
        }
        out.push(LowerCert { root: gen.root, scalar: sc, word: routed });
    }
    Ok(out)
}

/// Enumerates every form ring between `K` and the ambient ring (parameter
/// containing 1) and counts how many satisfy both inclusions; feasible only
/// for small ambients with an enumerable `H`.
fn check_uniqueness(session: &Session, certified: &FormRing, cap: usize) -> UniquenessCheck {
    let cx = &session.cx;
    let ring = cx.ring;
    if ring.card() > 16 {
        return UniquenessCheck::Skipped { reason: "ambient ring larger than 16 elements".into() };
    }
    let h = match GroupClosure::closure(ring, cx.n, &cx.letters, cap) {
        Ok(h) if h.is_complete() => h,
        Ok(_) => {
            return UniquenessCheck::Skipped {
                reason: "subgroup exceeds the enumeration cap".into(),
            }
        }
        Err(e) => return UniquenessCheck::Skipped { reason: e.to_string() },
    };
    let mut matches = 0usize;
    let mut tested = 0usize;
    for r in enumerate_subrings(ring) {
        if !cx.k.elems().is_subset(r.elems()) {
            continue;
        }
        for lam in enumerate_form_params(ring, &r) {
            if !lam.contains_coords(ring.unit_coords()) {
                continue;
            }
            let fr = FormRing::new(r, lam).expect("enumerated in place");
            tested += 1;
            let lower_ok = ep_generators(ring, &fr, cx.n)
                .iter()
                .all(|g| h.contains(ring, &g.mat) == Membership::In);
            if !lower_ok {
                continue;
            }
            let upper_ok = cx
                .letters
                .iter()
                .all(|g| normalizes(ring, &fr, g).unwrap_or(false));
            if upper_ok {
                matches += 1;
                if fr.r().elems() != certified.r().elems()
                    || fr.lambda().elems() != certified.lambda().elems()
                {
                    return UniquenessCheck::Skipped {
                        reason: "a different sandwiched pair exists".into(),
                    };
                }
            }
        }
    }
    if matches == 1 {
        UniquenessCheck::Verified { pairs_tested: tested }
    } else {
        UniquenessCheck::Skipped { reason: format!("{matches} sandwiched pairs found") }
    }
}
