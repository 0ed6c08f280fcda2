//! Deterministic group enumeration by breadth-first closure.
//!
//! Elements are stored as canonical 128-bit keys (entries row-major, one
//! coordinate vector per `dim` bits), so a run supports `4n²·dim ≤ 128`.
//! Each discovered element records the generator letter and parent element
//! that produced it; witness words fall out of the parent chain, with the
//! invariant that an element equals the left-to-right product of its word's
//! letters over the generator list.
//!
//! Enumeration is single-threaded and processes elements in discovery order
//! with a fixed generator order, so identical inputs yield identical element
//! numbering, not just identical sets.

use std::collections::{HashMap, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};
use std::io::{Read, Write as IoWrite};
use std::path::Path;

use thiserror::Error;

use crate::matrix::{encoding_bits, x_root, SpMatrix};
use crate::ring::{EltSet, Ring, RingId};
use crate::roots::Root;

/// Default ceiling on enumerated elements.
pub const DEFAULT_CAP: usize = 2_000_000;

#[derive(Error, Debug)]
pub enum EngineError {
    #[error(
        "canonical key needs {bits} bits, more than the 128 available \
         (rank {n}, ring dimension {dim})"
    )]
    EncodingTooWide { n: usize, dim: usize, bits: usize },
    #[error("cache file {path:?}: {msg}")]
    BadCache { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Word over a generator list: letters `(index, exponent)`, exponent `±1`,
/// multiplied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Word(pub Vec<(u32, i8)>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn letter(i: u32) -> Word {
        Word(vec![(i, 1)])
    }

    pub fn letter_inv(i: u32) -> Word {
        Word(vec![(i, -1)])
    }

    pub fn concat(parts: &[&Word]) -> Word {
        let mut v = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
        for p in parts {
            v.extend_from_slice(&p.0);
        }
        Word(v)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(i, e)| (i, -e)).collect())
    }

    /// `[a, b] = a b a⁻¹ b⁻¹`.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        Word::concat(&[a, b, &a.inverse(), &b.inverse()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Left-to-right product of the word's letters.
pub fn eval_word(ring: &Ring, n: usize, gens: &[SpMatrix], w: &Word) -> SpMatrix {
    let mut acc = SpMatrix::identity(ring, n);
    for &(i, e) in &w.0 {
        let g = &gens[i as usize];
        match e {
            1 => acc = acc.mul(ring, g),
            -1 => acc = acc.mul(ring, &g.inverse_symplectic()),
            _ => panic!("word exponent must be ±1"),
        }
    }
    acc
}

/// Three-valued membership: definite only when enumeration completed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Membership {
    In,
    Out,
    Unknown,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClosureStatus {
    Complete,
    CapExceeded { cap: usize },
}

/// How a generator entered the run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GenOrigin {
    Input(u32),
    /// `by · base · by⁻¹` (or with the conjugator inverted) for a seed
    /// conjugated during normal closure; `by` indexes the conjugator list.
    Conjugate { base: u32, by: u32, inv: bool },
}

#[derive(Clone, Copy)]
struct ElemRec {
    key: u128,
    parent: u32,
    /// `±(generator index + 1)`; 0 marks the identity.
    via: i32,
}

#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, _bytes: &[u8]) {
        unreachable!("only u128 keys are hashed");
    }

    fn write_u128(&mut self, v: u128) {
        let mut x = (v as u64) ^ ((v >> 64) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        x ^= x >> 30;
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 27;
        x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
        self.0 = x;
    }
}

type KeyMap = HashMap<u128, u32, BuildHasherDefault<KeyHasher>>;

/// Enumerated subgroup closure with parent-chain witnesses.
pub struct GroupClosure {
    ring: RingId,
    dim: usize,
    n: usize,
    gens: Vec<SpMatrix>,
    origins: Vec<GenOrigin>,
    elems: Vec<ElemRec>,
    index: KeyMap,
    status: ClosureStatus,
}

struct Expansion {
    /// Generator matrices paired with their inverses (`None` when the
    /// generator is an involution, halving the work).
    pairs: Vec<(SpMatrix, Option<SpMatrix>)>,
}

impl Expansion {
    fn of(ring: &Ring, gens: &[SpMatrix]) -> Expansion {
        let pairs = gens
            .iter()
            .map(|g| {
                let gi = g.inverse_symplectic();
                let inv = if gi == *g { None } else { Some(gi) };
                (g.clone(), inv)
            })
            .collect();
        debug_assert!(gens.iter().all(|g| g.is_symplectic(ring)));
        Expansion { pairs }
    }
}

impl GroupClosure {
    /// Enumerates `⟨gens⟩` (identity first), stopping at `cap` elements.
    /// Generators must be symplectic; the caller's indexing is preserved for
    /// word letters.
    pub fn closure(
        ring: &Ring,
        n: usize,
        gens: &[SpMatrix],
        cap: usize,
    ) -> Result<GroupClosure, EngineError> {
        let origins = (0..gens.len() as u32).map(GenOrigin::Input).collect();
        Self::run(ring, n, gens.to_vec(), origins, None, cap)
    }

    /// Enumerates the smallest subgroup containing `seed` and stable under
    /// conjugation by the `conjugators` (and their inverses). Conjugates
    /// that fall outside the current set are adjoined as fresh generators
    /// with a [`GenOrigin::Conjugate`] record.
    pub fn normal_closure(
        ring: &Ring,
        n: usize,
        seed: &[SpMatrix],
        conjugators: &[SpMatrix],
        cap: usize,
    ) -> Result<GroupClosure, EngineError> {
        let origins = (0..seed.len() as u32).map(GenOrigin::Input).collect();
        Self::run(ring, n, seed.to_vec(), origins, Some(conjugators), cap)
    }

    fn run(
        ring: &Ring,
        n: usize,
        mut gens: Vec<SpMatrix>,
        mut origins: Vec<GenOrigin>,
        conjugators: Option<&[SpMatrix]>,
        cap: usize,
    ) -> Result<GroupClosure, EngineError> {
        let dim = ring.dim();
        let bits = encoding_bits(n, dim);
        if bits > 128 {
            return Err(EngineError::EncodingTooWide { n, dim, bits });
        }
        for g in &gens {
            assert!(g.ring_id() == ring.id(), "generator over a different ring");
            assert_eq!(g.n(), n, "generator of a different rank");
        }

        let mut elems: Vec<ElemRec> = Vec::new();
        let mut index: KeyMap = KeyMap::default();
        let id = SpMatrix::identity(ring, n);
        elems.push(ElemRec { key: id.encode(dim), parent: 0, via: 0 });
        index.insert(elems[0].key, 0);

        let mut expansion = Expansion::of(ring, &gens);
        // tasks: (element index, generator index) still to be multiplied out
        let mut tasks: VecDeque<(u32, u32)> = VecDeque::new();
        let enqueue_elem = |tasks: &mut VecDeque<(u32, u32)>, e: u32, gen_count: usize| {
            for gi in 0..gen_count as u32 {
                tasks.push_back((e, gi));
            }
        };
        enqueue_elem(&mut tasks, 0, gens.len());

        let mut capped = false;
        let conj_pairs: Vec<(SpMatrix, SpMatrix)> = conjugators
            .unwrap_or(&[])
            .iter()
            .map(|c| (c.clone(), c.inverse_symplectic()))
            .collect();
        // conjugation progress: next (gen, conjugator) pair to examine
        let mut conj_done = 0usize;

        'outer: loop {
            while let Some((ei, gi)) = tasks.pop_front() {
                let x = SpMatrix::decode(ring, n, elems[ei as usize].key);
                let (g, ginv) = &expansion.pairs[gi as usize];
                let mut step = |prod: SpMatrix, exp: i8| -> bool {
                    let key = prod.encode(dim);
                    if !index.contains_key(&key) {
                        if elems.len() >= cap {
                            return true;
                        }
                        let idx = elems.len() as u32;
                        elems.push(ElemRec {
                            key,
                            parent: ei,
                            via: (gi as i32 + 1) * exp as i32,
                        });
                        index.insert(key, idx);
                        enqueue_elem(&mut tasks, idx, expansion.pairs.len());
                    }
                    false
                };
                // left multiplication; the new word is the letter, then the
                // parent's word
                if step(g.mul(ring, &x), 1) {
                    capped = true;
                    break 'outer;
                }
                if let Some(gi_mat) = ginv {
                    if step(gi_mat.mul(ring, &x), -1) {
                        capped = true;
                        break 'outer;
                    }
                }
            }

            // closure under conjugation, for the normal-closure variant:
            // adjoin any conjugate of a generator that escapes the set
            let mut grew = false;
            while conj_done < gens.len() * conj_pairs.len() {
                let gi = conj_done / conj_pairs.len();
                let ci = conj_done % conj_pairs.len();
                conj_done += 1;
                let (c, cinv) = &conj_pairs[ci];
                for (inv, conj) in [
                    (false, c.mul(ring, &gens[gi]).mul(ring, cinv)),
                    (true, cinv.mul(ring, &gens[gi]).mul(ring, c)),
                ] {
                    let key = conj.encode(dim);
                    if !index.contains_key(&key) {
                        gens.push(conj.clone());
                        origins.push(GenOrigin::Conjugate {
                            base: gi as u32,
                            by: ci as u32,
                            inv,
                        });
                        expansion.pairs.push({
                            let gi_mat = conj.inverse_symplectic();
                            let inv_mat = if gi_mat == conj { None } else { Some(gi_mat) };
                            (conj, inv_mat)
                        });
                        // the new generator must hit every known element
                        let new_gi = (gens.len() - 1) as u32;
                        for e in 0..elems.len() as u32 {
                            tasks.push_back((e, new_gi));
                        }
                        grew = true;
                    }
                }
                if grew {
                    break;
                }
            }
            if !grew {
                break;
            }
        }

        let status = if capped {
            ClosureStatus::CapExceeded { cap }
        } else {
            ClosureStatus::Complete
        };
        Ok(GroupClosure { ring: ring.id(), dim, n, gens, origins, elems, index, status })
    }

    pub fn status(&self) -> ClosureStatus {
        self.status
    }

    pub fn is_complete(&self) -> bool {
        self.status == ClosureStatus::Complete
    }

    /// Number of enumerated elements; the group order when complete.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the identity is always present
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gens(&self) -> &[SpMatrix] {
        &self.gens
    }

    pub fn gen_origins(&self) -> &[GenOrigin] {
        &self.origins
    }

    pub fn contains_key(&self, key: u128) -> bool {
        self.index.contains_key(&key)
    }

    pub fn index_of(&self, g: &SpMatrix) -> Option<u32> {
        self.index.get(&g.encode(self.dim)).copied()
    }

    pub fn contains(&self, ring: &Ring, g: &SpMatrix) -> Membership {
        assert!(g.ring_id() == self.ring && ring.id() == self.ring, "different ring");
        if self.index_of(g).is_some() {
            Membership::In
        } else if self.is_complete() {
            Membership::Out
        } else {
            Membership::Unknown
        }
    }

    pub fn element(&self, ring: &Ring, i: u32) -> SpMatrix {
        SpMatrix::decode(ring, self.n, self.elems[i as usize].key)
    }

    pub fn keys(&self) -> impl Iterator<Item = u128> + '_ {
        self.elems.iter().map(|e| e.key)
    }

    /// Witness word over this run's generator list (see [`GenOrigin`] for
    /// generators added by normal closure).
    pub fn witness(&self, g: &SpMatrix) -> Option<Word> {
        let mut i = self.index_of(g)?;
        let mut letters = Vec::new();
        while self.elems[i as usize].via != 0 {
            let rec = self.elems[i as usize];
            let gi = rec.via.unsigned_abs() - 1;
            letters.push((gi, rec.via.signum() as i8));
            i = rec.parent;
        }
        Some(Word(letters))
    }

    /// Rewrites a witness over the original inputs: letters of conjugate
    /// generators expand to `by · base · by⁻¹` with conjugator letters
    /// offset to follow the seed letters.
    pub fn witness_over_inputs(&self, g: &SpMatrix, seed_count: usize) -> Option<Word> {
        let w = self.witness(g)?;
        let mut out = Vec::new();
        for (i, e) in w.0 {
            self.expand_letter(i, e, seed_count, &mut out);
        }
        Some(Word(out))
    }

    fn expand_letter(&self, i: u32, e: i8, seed_count: usize, out: &mut Vec<(u32, i8)>) {
        match self.origins[i as usize] {
            GenOrigin::Input(k) => out.push((k, e)),
            GenOrigin::Conjugate { base, by, inv } => {
                let c = seed_count as u32 + by;
                let (pre, post) = if inv { (-1, 1) } else { (1, -1) };
                out.push((c, pre));
                self.expand_letter(base, e, seed_count, out);
                out.push((c, post));
            }
        }
    }

    /// Scalars `t` with `x_α(t)` in the enumerated set. Requires a complete
    /// closure.
    pub fn level_set(&self, ring: &Ring, alpha: &Root) -> EltSet {
        assert!(self.is_complete(), "level sets need a complete closure");
        let mut s = EltSet::default();
        for t in ring.elements() {
            if self.index.contains_key(&x_root(ring, self.n, alpha, t).encode(self.dim)) {
                s.insert(t.coords());
            }
        }
        s
    }

    /// Derived subgroup: normal closure of the pairwise generator
    /// commutators under the original generators.
    pub fn derived_subgroup(&self, ring: &Ring, cap: usize) -> Result<GroupClosure, EngineError> {
        let mut comms = Vec::new();
        let id = SpMatrix::identity(ring, self.n);
        for i in 0..self.gens.len() {
            for j in i + 1..self.gens.len() {
                let (a, b) = (&self.gens[i], &self.gens[j]);
                let c = a
                    .mul(ring, b)
                    .mul(ring, &a.inverse_symplectic())
                    .mul(ring, &b.inverse_symplectic());
                if c != id && !comms.contains(&c) {
                    comms.push(c);
                }
            }
        }
        GroupClosure::normal_closure(ring, self.n, &comms, &self.gens, cap)
    }

    /// Writes the run to a versioned little-endian binary file.
    pub fn save(&self, ring: &Ring, path: &Path) -> Result<(), EngineError> {
        let mut buf: Vec<u8> = Vec::with_capacity(32 + self.elems.len() * 24);
        buf.extend_from_slice(b"SP2C");
        buf.extend_from_slice(&1u32.to_le_bytes());
        let name = ring.name().as_bytes();
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.push(self.dim as u8);
        buf.push(self.n as u8);
        buf.extend_from_slice(&(self.gens.len() as u32).to_le_bytes());
        for (g, o) in self.gens.iter().zip(&self.origins) {
            buf.extend_from_slice(&g.encode(self.dim).to_le_bytes());
            match o {
                GenOrigin::Input(k) => {
                    buf.push(0);
                    buf.extend_from_slice(&k.to_le_bytes());
                    buf.extend_from_slice(&0u32.to_le_bytes());
                }
                GenOrigin::Conjugate { base, by, inv } => {
                    buf.push(if *inv { 2 } else { 1 });
                    buf.extend_from_slice(&base.to_le_bytes());
                    buf.extend_from_slice(&by.to_le_bytes());
                }
            }
        }
        match self.status {
            ClosureStatus::Complete => {
                buf.push(0);
                buf.extend_from_slice(&0u64.to_le_bytes());
            }
            ClosureStatus::CapExceeded { cap } => {
                buf.push(1);
                buf.extend_from_slice(&(cap as u64).to_le_bytes());
            }
        }
        buf.extend_from_slice(&(self.elems.len() as u64).to_le_bytes());
        for e in &self.elems {
            buf.extend_from_slice(&e.key.to_le_bytes());
            buf.extend_from_slice(&e.parent.to_le_bytes());
            buf.extend_from_slice(&e.via.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Reads a run back; the header must match the given ring and rank.
    pub fn load(ring: &Ring, n: usize, path: &Path) -> Result<GroupClosure, EngineError> {
        let bad = |msg: &str| EngineError::BadCache {
            path: path.display().to_string(),
            msg: msg.to_string(),
        };
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let mut at = 0usize;
        let mut take = |k: usize| -> Result<&[u8], EngineError> {
            if at + k > buf.len() {
                return Err(EngineError::BadCache {
                    path: path.display().to_string(),
                    msg: "truncated".into(),
                });
            }
            let s = &buf[at..at + k];
            at += k;
            Ok(s)
        };
        if take(4)? != b"SP2C" {
            return Err(bad("bad magic"));
        }
        if u32::from_le_bytes(take(4)?.try_into().unwrap()) != 1 {
            return Err(bad("unsupported version"));
        }
        let name_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(name_len)?).map_err(|_| bad("bad ring name"))?;
        if name != ring.name() {
            return Err(bad("ring name mismatch"));
        }
        if take(1)?[0] as usize != ring.dim() {
            return Err(bad("ring dimension mismatch"));
        }
        if take(1)?[0] as usize != n {
            return Err(bad("rank mismatch"));
        }
        let gen_count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut gens = Vec::with_capacity(gen_count);
        let mut origins = Vec::with_capacity(gen_count);
        for _ in 0..gen_count {
            let key = u128::from_le_bytes(take(16)?.try_into().unwrap());
            gens.push(SpMatrix::decode(ring, n, key));
            let tag = take(1)?[0];
            let a = u32::from_le_bytes(take(4)?.try_into().unwrap());
            let b = u32::from_le_bytes(take(4)?.try_into().unwrap());
            origins.push(match tag {
                0 => GenOrigin::Input(a),
                1 => GenOrigin::Conjugate { base: a, by: b, inv: false },
                2 => GenOrigin::Conjugate { base: a, by: b, inv: true },
                _ => return Err(bad("bad generator origin")),
            });
        }
        let status = match take(1)?[0] {
            0 => {
                take(8)?;
                ClosureStatus::Complete
            }
            1 => {
                let cap = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
                ClosureStatus::CapExceeded { cap }
            }
            _ => return Err(bad("bad status")),
        };
        let elem_count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut elems = Vec::with_capacity(elem_count);
        let mut index: KeyMap = KeyMap::default();
        for i in 0..elem_count {
            let key = u128::from_le_bytes(take(16)?.try_into().unwrap());
            let parent = u32::from_le_bytes(take(4)?.try_into().unwrap());
            let via = i32::from_le_bytes(take(4)?.try_into().unwrap());
            if via == 0 && i != 0 {
                return Err(bad("identity record out of place"));
            }
            if parent as usize >= elem_count || via.unsigned_abs() as usize > gen_count {
                return Err(bad("parent or letter out of range"));
            }
            elems.push(ElemRec { key, parent, via });
            if index.insert(key, i as u32).is_some() {
                return Err(bad("duplicate element key"));
            }
        }
        if at != buf.len() {
            return Err(bad("trailing bytes"));
        }
        if elems.is_empty() {
            return Err(bad("empty element list"));
        }
        Ok(GroupClosure { ring: ring.id(), dim: ring.dim(), n, gens, origins, elems, index, status })
    }
}

/// Order of the full symplectic group over a field with `q` elements:
/// `q^{n²} · ∏_{i=1..n} (q^{2i} − 1)`.
pub fn sp_order_over_field(q: u64, n: u32) -> u64 {
    let mut order = q.pow(n * n);
    for i in 1..=n {
        order *= q.pow(2 * i) - 1;
    }
    order
}
