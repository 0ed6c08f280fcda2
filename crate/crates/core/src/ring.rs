//! Finite commutative unital F₂-algebras presented by a basis and a
//! multiplication table, together with their subrings and form parameters.
//!
//! Every ring here has characteristic 2: an element is a coordinate
//! bit-vector over the basis (stored in a `u8`, so dimension is capped at 8),
//! addition is XOR, and multiplication is the bilinear extension of the basis
//! table. Squaring is therefore a ring endomorphism, and the set of squares
//! is itself a subring.
//!
//! Rings are identified by a process-unique [`RingId`]; elements carry the id
//! of the ring they belong to and mixing parents is a usage error (panic).

use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

/// Maximum supported basis dimension; elements are `u8` coordinate vectors.
pub const MAX_DIM: usize = 8;

/// Process-unique identity of a constructed [`Ring`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct RingId(u32);

static NEXT_RING_ID: AtomicU32 = AtomicU32::new(1);

/// Element of a [`Ring`]: coordinates over the basis plus the parent id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct RingElt {
    ring: RingId,
    coords: u8,
}

impl RingElt {
    pub fn coords(&self) -> u8 {
        self.coords
    }

    pub fn ring_id(&self) -> RingId {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.coords == 0
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("ring {name:?}: dimension {dim} outside supported range 1..={MAX_DIM}")]
    BadDimension { name: String, dim: usize },
    #[error("ring {name:?}: basis id {id:?} duplicated or empty")]
    BadBasisId { name: String, id: String },
    #[error("ring {name:?}: unit coordinates {unit:#04x} out of range")]
    BadUnit { name: String, unit: u8 },
    #[error("ring {name:?}: table entry for {i}*{j} out of range")]
    BadTableEntry { name: String, i: usize, j: usize },
    #[error("ring {name:?}: commutativity fails at basis pair ({i},{j})")]
    NotCommutative { name: String, i: usize, j: usize },
    #[error("ring {name:?}: associativity fails at basis triple ({i},{j},{k})")]
    NotAssociative { name: String, i: usize, j: usize, k: usize },
    #[error("ring {name:?}: unit law fails at element {elt}")]
    UnitLaw { name: String, elt: String },
}

/// Finite commutative F₂-algebra with unit.
#[derive(Clone, Debug)]
pub struct Ring {
    id: RingId,
    name: String,
    dim: usize,
    basis_names: Vec<String>,
    unit: u8,
    /// Products of basis pairs, row-major `dim × dim`.
    basis_mul: Vec<u8>,
    /// Full multiplication table over all `2^dim × 2^dim` coordinate pairs.
    table: Vec<u8>,
}

impl Ring {
    /// Builds and validates a ring from basis names, the unit's coordinates,
    /// and the `dim × dim` table of basis products. Commutativity,
    /// associativity, and the unit law are checked exhaustively; the failing
    /// instance is named in the error.
    pub fn new(
        name: &str,
        basis_names: Vec<String>,
        unit: u8,
        basis_mul: Vec<u8>,
    ) -> Result<Ring, RingError> {
        let dim = basis_names.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(RingError::BadDimension { name: name.into(), dim });
        }
        for (i, id) in basis_names.iter().enumerate() {
            if id.is_empty() || basis_names[..i].contains(id) {
                return Err(RingError::BadBasisId { name: name.into(), id: id.clone() });
            }
        }
        let mask_end: u16 = 1u16 << dim;
        if unit == 0 || u16::from(unit) >= mask_end {
            return Err(RingError::BadUnit { name: name.into(), unit });
        }
        if basis_mul.len() != dim * dim {
            return Err(RingError::BadTableEntry { name: name.into(), i: basis_mul.len(), j: 0 });
        }
        for i in 0..dim {
            for j in 0..dim {
                if u16::from(basis_mul[i * dim + j]) >= mask_end {
                    return Err(RingError::BadTableEntry { name: name.into(), i, j });
                }
                if basis_mul[i * dim + j] != basis_mul[j * dim + i] {
                    return Err(RingError::NotCommutative { name: name.into(), i, j });
                }
            }
        }

        let count = 1usize << dim;
        let mut table = vec![0u8; count * count];
        for a in 0..count {
            for b in 0..count {
                let mut acc = 0u8;
                for i in 0..dim {
                    if a >> i & 1 == 0 {
                        continue;
                    }
                    for j in 0..dim {
                        if b >> j & 1 == 1 {
                            acc ^= basis_mul[i * dim + j];
                        }
                    }
                }
                table[a << dim | b] = acc;
            }
        }

        let ring = Ring {
            id: RingId(NEXT_RING_ID.fetch_add(1, Ordering::Relaxed)),
            name: name.into(),
            dim,
            basis_names,
            unit,
            basis_mul,
            table,
        };

        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let bi = 1u8 << i;
                    let bj = 1u8 << j;
                    let bk = 1u8 << k;
                    let left = ring.mul_raw(ring.mul_raw(bi, bj), bk);
                    let right = ring.mul_raw(bi, ring.mul_raw(bj, bk));
                    if left != right {
                        return Err(RingError::NotAssociative { name: ring.name, i, j, k });
                    }
                }
            }
        }
        for a in 0..count as u8 {
            if ring.mul_raw(ring.unit, a) != a {
                let elt = ring.fmt_coords(a);
                return Err(RingError::UnitLaw { name: ring.name, elt });
            }
        }
        Ok(ring)
    }

    pub fn id(&self) -> RingId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn basis_mul(&self) -> &[u8] {
        &self.basis_mul
    }

    /// Number of elements, `2^dim`.
    pub fn card(&self) -> usize {
        1 << self.dim
    }

    pub fn zero(&self) -> RingElt {
        RingElt { ring: self.id, coords: 0 }
    }

    pub fn one(&self) -> RingElt {
        RingElt { ring: self.id, coords: self.unit }
    }

    pub fn unit_coords(&self) -> u8 {
        self.unit
    }

    /// Element with the given coordinates; panics if out of range.
    pub fn elt(&self, coords: u8) -> RingElt {
        assert!(
            (coords as usize) < self.card(),
            "coordinates {coords:#04x} out of range for ring {}",
            self.name
        );
        RingElt { ring: self.id, coords }
    }

    pub fn elements(&self) -> impl Iterator<Item = RingElt> + '_ {
        (0..self.card() as u16).map(|c| RingElt { ring: self.id, coords: c as u8 })
    }

    fn check_parent(&self, e: RingElt) {
        assert!(
            e.ring == self.id,
            "element of a different ring (id {:?}) used with ring {} (id {:?})",
            e.ring,
            self.name,
            self.id
        );
    }

    pub(crate) fn mul_raw(&self, a: u8, b: u8) -> u8 {
        self.table[(a as usize) << self.dim | b as usize]
    }

    pub fn add(&self, a: RingElt, b: RingElt) -> RingElt {
        self.check_parent(a);
        self.check_parent(b);
        RingElt { ring: self.id, coords: a.coords ^ b.coords }
    }

    pub fn mul(&self, a: RingElt, b: RingElt) -> RingElt {
        self.check_parent(a);
        self.check_parent(b);
        RingElt { ring: self.id, coords: self.mul_raw(a.coords, b.coords) }
    }

    pub fn square(&self, a: RingElt) -> RingElt {
        self.mul(a, a)
    }

    /// Multiplicative inverse, when one exists.
    pub fn inverse(&self, a: RingElt) -> Option<RingElt> {
        self.check_parent(a);
        (0..self.card() as u16)
            .map(|c| c as u8)
            .find(|&c| self.mul_raw(a.coords, c) == self.unit)
            .map(|c| RingElt { ring: self.id, coords: c })
    }

    pub fn is_nilpotent(&self, a: RingElt) -> bool {
        self.check_parent(a);
        let mut p = a.coords;
        for _ in 0..self.dim {
            p = self.mul_raw(p, p);
        }
        // a nilpotent element of a dim-d algebra has index at most d, and
        // repeated squaring d times reaches exponent 2^d >= d
        p == 0
    }

    /// Set of nilpotent elements. For a finite commutative ring this is the
    /// nilradical, an ideal.
    pub fn nilradical(&self) -> EltSet {
        let mut s = EltSet::default();
        for a in self.elements() {
            if self.is_nilpotent(a) {
                s.insert(a.coords);
            }
        }
        s
    }

    /// Renders coordinates as a sum of basis names, `0` for zero.
    pub fn fmt_coords(&self, coords: u8) -> String {
        if coords == 0 {
            return "0".into();
        }
        let mut parts = Vec::new();
        for i in 0..self.dim {
            if coords >> i & 1 == 1 {
                parts.push(self.basis_names[i].as_str());
            }
        }
        parts.join("+")
    }

    pub fn fmt_elt(&self, e: RingElt) -> String {
        self.check_parent(e);
        self.fmt_coords(e.coords)
    }

    /// Parses a sum of basis names (`e+eps`) or `0`.
    pub fn parse_elt(&self, s: &str) -> Result<RingElt, String> {
        let s = s.trim();
        if s == "0" {
            return Ok(self.zero());
        }
        let mut coords = 0u8;
        for part in s.split('+') {
            let part = part.trim();
            let i = self
                .basis_names
                .iter()
                .position(|b| b == part)
                .ok_or_else(|| format!("unknown basis id {part:?} in ring {}", self.name))?;
            if coords >> i & 1 == 1 {
                return Err(format!("basis id {part:?} repeated in element expression"));
            }
            coords |= 1 << i;
        }
        Ok(RingElt { ring: self.id, coords })
    }

    /// Renders coordinates as a bit-string, one character per basis element
    /// in basis order (`"10"` is the first basis vector of a 2-dim ring).
    pub fn bitstr(&self, coords: u8) -> String {
        (0..self.dim).map(|i| if coords >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn parse_bitstr(&self, s: &str) -> Result<u8, String> {
        if s.len() != self.dim {
            return Err(format!(
                "bit-string {s:?} has length {}, ring {} has dimension {}",
                s.len(),
                self.name,
                self.dim
            ));
        }
        let mut coords = 0u8;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '1' => coords |= 1 << i,
                '0' => {}
                _ => return Err(format!("bit-string {s:?} contains {ch:?}")),
            }
        }
        Ok(coords)
    }
}

/// Set of ring elements, stored as a 256-bit mask over coordinate vectors.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EltSet {
    words: [u64; 4],
}

impl EltSet {
    pub fn insert(&mut self, coords: u8) -> bool {
        let w = &mut self.words[(coords >> 6) as usize];
        let bit = 1u64 << (coords & 63);
        let fresh = *w & bit == 0;
        *w |= bit;
        fresh
    }

    pub fn contains(&self, coords: u8) -> bool {
        self.words[(coords >> 6) as usize] >> (coords & 63) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &EltSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &EltSet) -> EltSet {
        let mut words = self.words;
        for (w, o) in words.iter_mut().zip(&other.words) {
            *w |= o;
        }
        EltSet { words }
    }

    /// Coordinates in ascending numeric order.
    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(|&c| self.contains(c))
    }

    pub fn from_coords<I: IntoIterator<Item = u8>>(it: I) -> EltSet {
        let mut s = EltSet::default();
        for c in it {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for EltSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Subring (containing 0 and 1) of a parent ring, as an explicit element set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Subring {
    ring: RingId,
    elems: EltSet,
}

impl Subring {
    pub fn ring_id(&self) -> RingId {
        self.ring
    }

    pub fn elems(&self) -> &EltSet {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always contains 0 and 1
    }

    pub fn contains(&self, e: RingElt) -> bool {
        assert!(e.ring == self.ring, "element from a different ring");
        self.elems.contains(e.coords)
    }

    pub fn contains_coords(&self, coords: u8) -> bool {
        self.elems.contains(coords)
    }

    pub fn is_whole(&self, ring: &Ring) -> bool {
        assert!(ring.id == self.ring, "subring of a different ring");
        self.elems.len() == ring.card()
    }

    pub fn elements<'r>(&self, ring: &'r Ring) -> impl Iterator<Item = RingElt> + 'r {
        assert!(ring.id == self.ring, "subring of a different ring");
        let elems = self.elems;
        ring.elements().filter(move |e| elems.contains(e.coords))
    }
}

/// Form parameter: an additive subgroup of a subring `R` that contains
/// `2R = {0}` and is closed under `λ ↦ μ²λ` for every `μ ∈ R`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FormParameter {
    within: Subring,
    elems: EltSet,
}

impl FormParameter {
    pub fn within(&self) -> &Subring {
        &self.within
    }

    pub fn elems(&self) -> &EltSet {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn contains_coords(&self, coords: u8) -> bool {
        self.elems.contains(coords)
    }

    pub fn contains(&self, e: RingElt) -> bool {
        assert!(e.ring == self.within.ring, "element from a different ring");
        self.elems.contains(e.coords)
    }
}

/// Form ring: a subring together with a form parameter inside it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FormRing {
    r: Subring,
    lambda: FormParameter,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FormRingError {
    #[error("form parameter does not live in the given subring")]
    ParameterOutsideRing,
    #[error("element set is not a subring: missing {missing}")]
    NotASubring { missing: String },
    #[error("element set is not a form parameter: fails at {instance}")]
    NotAFormParameter { instance: String },
}

impl FormRing {
    pub fn new(r: Subring, lambda: FormParameter) -> Result<FormRing, FormRingError> {
        if lambda.within != r {
            return Err(FormRingError::ParameterOutsideRing);
        }
        Ok(FormRing { r, lambda })
    }

    pub fn r(&self) -> &Subring {
        &self.r
    }

    pub fn lambda(&self) -> &FormParameter {
        &self.lambda
    }

    pub fn ring_id(&self) -> RingId {
        self.r.ring
    }

    /// The maximal form ring `(A, A)` over the whole ring.
    pub fn full(ring: &Ring) -> FormRing {
        let r = whole_subring(ring);
        let lambda = FormParameter { within: r, elems: *r.elems() };
        FormRing { r, lambda }
    }

    pub fn describe(&self, ring: &Ring) -> String {
        let r: Vec<String> = self.r.elems.iter().map(|c| ring.fmt_coords(c)).collect();
        let l: Vec<String> = self.lambda.elems.iter().map(|c| ring.fmt_coords(c)).collect();
        format!("R = {{{}}}, Lambda = {{{}}}", r.join(", "), l.join(", "))
    }
}

pub fn whole_subring(ring: &Ring) -> Subring {
    Subring { ring: ring.id, elems: EltSet::from_coords(ring.elements().map(|e| e.coords)) }
}

/// Smallest subring containing the generators (and always 0, 1).
pub fn subring_generated<I: IntoIterator<Item = RingElt>>(ring: &Ring, gens: I) -> Subring {
    let mut set = EltSet::default();
    set.insert(0);
    set.insert(ring.unit);
    for g in gens {
        ring.check_parent(g);
        set.insert(g.coords);
    }
    loop {
        let mut grew = false;
        let cur: Vec<u8> = set.iter().collect();
        for &a in &cur {
            for &b in &cur {
                grew |= set.insert(a ^ b);
                grew |= set.insert(ring.mul_raw(a, b));
            }
        }
        if !grew {
            break;
        }
    }
    Subring { ring: ring.id, elems: set }
}

pub fn is_subring_set(ring: &Ring, set: &EltSet) -> bool {
    if !set.contains(0) || !set.contains(ring.unit) {
        return false;
    }
    let elems: Vec<u8> = set.iter().collect();
    for &a in &elems {
        for &b in &elems {
            if !set.contains(a ^ b) || !set.contains(ring.mul_raw(a, b)) {
                return false;
            }
        }
    }
    true
}

/// The subring of squares `{ξ² : ξ ∈ R}`; squaring is a ring endomorphism in
/// characteristic 2, so the image is closed as-is.
pub fn squares_subring(ring: &Ring) -> Subring {
    let set = EltSet::from_coords(ring.elements().map(|e| ring.mul_raw(e.coords, e.coords)));
    debug_assert!(is_subring_set(ring, &set));
    Subring { ring: ring.id, elems: set }
}

/// Smallest form parameter of `within` containing the generators.
/// Panics if a generator lies outside `within`.
pub fn form_param_generated<I: IntoIterator<Item = RingElt>>(
    ring: &Ring,
    within: &Subring,
    gens: I,
) -> FormParameter {
    assert!(within.ring == ring.id, "subring of a different ring");
    let mut set = EltSet::default();
    set.insert(0);
    for g in gens {
        ring.check_parent(g);
        assert!(
            within.elems.contains(g.coords),
            "form parameter generator {} outside the subring",
            ring.fmt_coords(g.coords)
        );
        set.insert(g.coords);
    }
    let mu_sq: Vec<u8> = within.elems.iter().map(|m| ring.mul_raw(m, m)).collect();
    loop {
        let mut grew = false;
        let cur: Vec<u8> = set.iter().collect();
        for &a in &cur {
            for &b in &cur {
                grew |= set.insert(a ^ b);
            }
            for &m2 in &mu_sq {
                grew |= set.insert(ring.mul_raw(m2, a));
            }
        }
        if !grew {
            break;
        }
    }
    FormParameter { within: *within, elems: set }
}

pub fn is_form_param_set(ring: &Ring, within: &Subring, set: &EltSet) -> bool {
    if !set.contains(0) || !set.is_subset(&within.elems) {
        return false;
    }
    let elems: Vec<u8> = set.iter().collect();
    for &a in &elems {
        for &b in &elems {
            if !set.contains(a ^ b) {
                return false;
            }
        }
        for m in within.elems.iter() {
            if !set.contains(ring.mul_raw(ring.mul_raw(m, m), a)) {
                return false;
            }
        }
    }
    true
}

/// All subrings of the ring, canonically ordered by (size, element mask).
///
/// Generated lattice walk: every subring is reachable from the prime subring
/// by repeatedly adjoining one element, so extending each discovered subring
/// by each outside element finds them all.
pub fn enumerate_subrings(ring: &Ring) -> Vec<Subring> {
    let mut found: Vec<Subring> = vec![subring_generated(ring, [])];
    let mut i = 0;
    while i < found.len() {
        let cur = found[i];
        for a in ring.elements() {
            if cur.elems.contains(a.coords) {
                continue;
            }
            let bigger = subring_generated(ring, cur.elems.iter().map(|c| ring.elt(c)).chain([a]));
            if !found.iter().any(|s| s.elems == bigger.elems) {
                found.push(bigger);
            }
        }
        i += 1;
    }
    found.sort_by_key(|s| (s.len(), s.elems.words));
    found
}

/// All form parameters of `within`, canonically ordered.
pub fn enumerate_form_params(ring: &Ring, within: &Subring) -> Vec<FormParameter> {
    let mut found: Vec<FormParameter> = vec![form_param_generated(ring, within, [])];
    let mut i = 0;
    while i < found.len() {
        let cur = found[i];
        for c in within.elems.iter() {
            if cur.elems.contains(c) {
                continue;
            }
            let bigger = form_param_generated(
                ring,
                within,
                cur.elems.iter().chain([c]).map(|x| ring.elt(x)),
            );
            if !found.iter().any(|p| p.elems == bigger.elems) {
                found.push(bigger);
            }
        }
        i += 1;
    }
    found.sort_by_key(|p| (p.len(), p.elems.words));
    found
}

/// Wraps an element set as a [`Subring`] after checking closure.
pub fn subring_from_set(ring: &Ring, set: EltSet) -> Option<Subring> {
    is_subring_set(ring, &set).then_some(Subring { ring: ring.id(), elems: set })
}

/// Wraps an element set as a [`FormParameter`] of `within` after checking
/// the closure laws.
pub fn form_param_from_set(
    ring: &Ring,
    within: &Subring,
    set: EltSet,
) -> Option<FormParameter> {
    assert!(within.ring == ring.id(), "subring of a different ring");
    is_form_param_set(ring, within, &set).then_some(FormParameter { within: *within, elems: set })
}

/// Every nonzero element of the subring invertible within it.
pub fn is_field(ring: &Ring, sub: &Subring) -> bool {
    assert!(sub.ring == ring.id, "subring of a different ring");
    sub.elems.iter().filter(|&c| c != 0).all(|c| {
        sub.elems.iter().any(|d| ring.mul_raw(c, d) == ring.unit)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn f2eps() -> Ring {
        Catalog::default_catalog().unwrap().take("F2eps").unwrap()
    }

    fn f4() -> Ring {
        Catalog::default_catalog().unwrap().take("F4").unwrap()
    }

    #[test]
    fn axioms_hold_exhaustively_for_catalog_rings() {
        let cat = Catalog::default_catalog().unwrap();
        for ring in cat.rings() {
            for a in ring.elements() {
                assert_eq!(ring.add(a, a), ring.zero(), "char 2 in {}", ring.name());
                assert_eq!(ring.mul(ring.one(), a), a);
                for b in ring.elements() {
                    assert_eq!(ring.add(a, b), ring.add(b, a));
                    assert_eq!(ring.mul(a, b), ring.mul(b, a));
                    for c in ring.elements() {
                        assert_eq!(ring.mul(ring.mul(a, b), c), ring.mul(a, ring.mul(b, c)));
                        assert_eq!(
                            ring.mul(a, ring.add(b, c)),
                            ring.add(ring.mul(a, b), ring.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn f4_arithmetic_matches_the_field_of_four_elements() {
        let r = f4();
        let x = r.parse_elt("x").unwrap();
        let x1 = r.parse_elt("e+x").unwrap();
        // x and x+1 are the two roots of t² + t + 1
        assert_eq!(r.mul(x, x), x1);
        assert_eq!(r.mul(x, x1), r.one());
        assert_eq!(r.inverse(x), Some(x1));
    }

    #[test]
    fn eps_squares_to_zero_and_one_plus_eps_is_a_unit() {
        let r = f2eps();
        let eps = r.parse_elt("eps").unwrap();
        let u = r.parse_elt("e+eps").unwrap();
        assert_eq!(r.mul(eps, eps), r.zero());
        assert!(r.is_nilpotent(eps));
        assert_eq!(r.mul(u, u), r.one());
        assert_eq!(r.inverse(u), Some(u));
    }

    #[test]
    fn squares_subring_is_exactly_the_square_image() {
        let r = f2eps();
        let sq = squares_subring(&r);
        assert_eq!(sq.len(), 2); // {0, 1}
        assert!(sq.contains(r.one()));
        let f4 = f4();
        assert_eq!(squares_subring(&f4).len(), 4); // Frobenius is onto
    }

    #[test]
    fn form_params_of_f2eps_are_the_five_subspaces() {
        let r = f2eps();
        let whole = whole_subring(&r);
        let params = enumerate_form_params(&r, &whole);
        assert_eq!(params.len(), 5);
        let sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![1, 2, 2, 2, 4]);
    }

    #[test]
    fn form_params_of_f4_containing_one_exclude_f2() {
        // μ²λ closure forces any form parameter containing 1 to be all of F₄
        let r = f4();
        let whole = whole_subring(&r);
        let with_one: Vec<_> = enumerate_form_params(&r, &whole)
            .into_iter()
            .filter(|p| p.contains_coords(r.unit_coords()))
            .collect();
        assert_eq!(with_one.len(), 1);
        assert_eq!(with_one[0].len(), 4);
    }

    #[test]
    fn form_param_generated_by_one_in_f2eps_is_f2() {
        let r = f2eps();
        let whole = whole_subring(&r);
        let p = form_param_generated(&r, &whole, [r.one()]);
        assert_eq!(p.len(), 2);
        assert!(p.contains(r.one()));
    }

    #[test]
    fn subring_enumeration_catalog_counts() {
        let cat = Catalog::default_catalog().unwrap();
        for (name, expect) in [("F2", 1), ("F4", 2), ("F2eps", 2), ("F2xF2", 2), ("F2t3", 3)] {
            let ring = cat.get(name).unwrap();
            let subs = enumerate_subrings(ring);
            assert_eq!(subs.len(), expect, "subring count of {name}");
            for s in &subs {
                assert!(is_subring_set(ring, s.elems()), "closure of a subring of {name}");
            }
        }
    }

    #[test]
    fn nilradical_of_catalog_rings() {
        let cat = Catalog::default_catalog().unwrap();
        assert_eq!(cat.get("F2eps").unwrap().nilradical().len(), 2);
        assert_eq!(cat.get("F4").unwrap().nilradical().len(), 1);
        assert_eq!(cat.get("F2t3").unwrap().nilradical().len(), 4);
        assert_eq!(cat.get("F2xF2").unwrap().nilradical().len(), 1);
    }

    #[test]
    fn subring_generated_is_monotone_and_idempotent() {
        let r = f2eps();
        let eps = r.parse_elt("eps").unwrap();
        let small = subring_generated(&r, []);
        let big = subring_generated(&r, [eps]);
        assert!(small.elems().is_subset(big.elems()));
        let again = subring_generated(&r, big.elements(&r));
        assert_eq!(again.elems(), big.elems());
    }

    #[test]
    #[should_panic(expected = "different ring")]
    fn mixing_parents_is_a_usage_error() {
        let a = f2eps();
        let b = f4();
        let _ = a.add(a.one(), b.one());
    }

    #[test]
    fn rejects_table_violating_the_unit_law() {
        let err = Ring::new(
            "bad",
            vec!["e".into(), "b".into()],
            0b01,
            vec![0b01, 0b00, 0b00, 0b10], // e*b = 0 breaks the unit law
        );
        match err {
            Err(RingError::UnitLaw { .. }) => {}
            other => panic!("expected unit-law failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_associative_table() {
        // dim 3, basis e, b, c with b*b = c, b*c = e, c*c = 0:
        // (b*b)*c = c*c = 0 but b*(b*c) = b*e = b
        let err = Ring::new(
            "bad",
            vec!["e".into(), "b".into(), "c".into()],
            0b001,
            vec![
                0b001, 0b010, 0b100, // e row
                0b010, 0b100, 0b001, // b row
                0b100, 0b001, 0b000, // c row
            ],
        );
        match err {
            Err(RingError::NotAssociative { .. }) => {}
            other => panic!("expected associativity failure, got {other:?}"),
        }
    }

    #[test]
    fn is_field_distinguishes_f4_from_f2eps() {
        let r4 = f4();
        let re = f2eps();
        assert!(is_field(&r4, &whole_subring(&r4)));
        assert!(!is_field(&re, &whole_subring(&re)));
        assert!(is_field(&re, &subring_generated(&re, [])));
    }
}
