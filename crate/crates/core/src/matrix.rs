//! Symplectic matrices over a finite characteristic-2 ring.
//!
//! A `2n × 2n` matrix is indexed by the hyperbolic index set `I` (see
//! [`crate::roots`]); rows and columns are stored by position. The bilinear
//! form has Gram matrix with a 1 exactly at each `(k, −k)`, so `g` is
//! symplectic iff `Σ_k g_{k,i} g_{−k,j} = [j = −i]`, and the inverse of a
//! symplectic matrix is its reflection in the antidiagonal:
//! `(g⁻¹)_{ij} = g_{−j,−i}`.

use crate::ring::{FormParameter, FormRing, Ring, RingElt, RingId, Subring};
use crate::roots::{idx_at, index_order, pos, Root, RootKind};

/// Square matrix of size `2n` over a ring, indexed by the hyperbolic set.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SpMatrix {
    ring: RingId,
    n: u8,
    /// Row-major entries by storage position, each a coordinate vector.
    ent: Vec<u8>,
}

impl SpMatrix {
    pub fn identity(ring: &Ring, n: usize) -> SpMatrix {
        let mut m = SpMatrix { ring: ring.id(), n: n as u8, ent: vec![0; 4 * n * n] };
        for p in 0..2 * n {
            m.ent[p * 2 * n + p] = ring.unit_coords();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn ring_id(&self) -> RingId {
        self.ring
    }

    pub fn from_coords(ring: &Ring, n: usize, ent: Vec<u8>) -> SpMatrix {
        assert_eq!(ent.len(), 4 * n * n, "entry count for a 2n x 2n matrix");
        assert!(ent.iter().all(|&c| (c as usize) < ring.card()), "entry out of range");
        SpMatrix { ring: ring.id(), n: n as u8, ent }
    }

    pub fn coords(&self) -> &[u8] {
        &self.ent
    }

    fn check(&self, ring: &Ring) {
        assert!(self.ring == ring.id(), "matrix used with a different ring");
    }

    pub(crate) fn get_pos(&self, r: usize, c: usize) -> u8 {
        self.ent[r * 2 * self.n() + c]
    }

    /// Entry at hyperbolic indices `(i, j)`.
    pub fn get(&self, ring: &Ring, i: i8, j: i8) -> RingElt {
        self.check(ring);
        let n = self.n();
        ring.elt(self.get_pos(pos(n, i), pos(n, j)))
    }

    pub fn is_identity(&self, ring: &Ring) -> bool {
        self.check(ring);
        let w = 2 * self.n();
        self.ent
            .iter()
            .enumerate()
            .all(|(k, &v)| v == if k / w == k % w { ring.unit_coords() } else { 0 })
    }

    pub fn mul(&self, ring: &Ring, other: &SpMatrix) -> SpMatrix {
        self.check(ring);
        other.check(ring);
        assert_eq!(self.n, other.n, "size mismatch");
        let w = 2 * self.n();
        let mut ent = vec![0u8; w * w];
        for r in 0..w {
            for k in 0..w {
                let a = self.ent[r * w + k];
                if a == 0 {
                    continue;
                }
                let row = &other.ent[k * w..(k + 1) * w];
                for (c, &b) in row.iter().enumerate() {
                    if b != 0 {
                        ent[r * w + c] ^= ring.mul_raw(a, b);
                    }
                }
            }
        }
        SpMatrix { ring: self.ring, n: self.n, ent }
    }

    /// Inverse of a *symplectic* matrix: reflection in the antidiagonal.
    /// Callers must ensure the precondition; the result is garbage otherwise.
    pub fn inverse_symplectic(&self) -> SpMatrix {
        let w = 2 * self.n();
        let mut ent = vec![0u8; w * w];
        for r in 0..w {
            for c in 0..w {
                ent[r * w + c] = self.ent[(w - 1 - c) * w + (w - 1 - r)];
            }
        }
        SpMatrix { ring: self.ring, n: self.n, ent }
    }

    /// Whether `g` preserves the form: `Σ_k g_{k,i} g_{−k,j} = [j = −i]`.
    pub fn is_symplectic(&self, ring: &Ring) -> bool {
        self.check(ring);
        let w = 2 * self.n();
        for ci in 0..w {
            for cj in 0..w {
                let mut acc = 0u8;
                for r in 0..w {
                    let a = self.ent[r * w + ci];
                    let b = self.ent[(w - 1 - r) * w + cj];
                    if a != 0 && b != 0 {
                        acc ^= ring.mul_raw(a, b);
                    }
                }
                let expect = if cj == w - 1 - ci { ring.unit_coords() } else { 0 };
                if acc != expect {
                    return false;
                }
            }
        }
        true
    }

    pub fn entries_in(&self, sub: &Subring) -> bool {
        assert!(sub.ring_id() == self.ring, "subring of a different ring");
        self.ent.iter().all(|&c| sub.contains_coords(c))
    }

    /// Canonical 128-bit key: entries row-major, `dim` bits each, little
    /// end first. Requires `4n²·dim ≤ 128`; see [`encoding_bits`].
    pub fn encode(&self, dim: usize) -> u128 {
        let mut key = 0u128;
        for (k, &c) in self.ent.iter().enumerate() {
            key |= (c as u128) << (k * dim);
        }
        key
    }

    pub fn decode(ring: &Ring, n: usize, key: u128) -> SpMatrix {
        let dim = ring.dim();
        let mask = (1u128 << dim) - 1;
        let ent = (0..4 * n * n).map(|k| ((key >> (k * dim)) & mask) as u8).collect();
        SpMatrix { ring: ring.id(), n: n as u8, ent }
    }
}

/// Bits needed by the canonical matrix encoding.
pub fn encoding_bits(n: usize, dim: usize) -> usize {
    4 * n * n * dim
}

/// The transvection `T_{ij}(ξ) = e + ξe_{ij} + ξe_{−j,−i}` (`i ≠ ±j`), or
/// `T_{i,−i}(ξ) = e + ξe_{i,−i}`. Symmetric in the mirror pair:
/// `T_{ij} = T_{−j,−i}`. Always symplectic; lies in a Bak group iff the
/// scalar of a long transvection lies in the form parameter.
pub fn transvection(ring: &Ring, n: usize, i: i8, j: i8, xi: RingElt) -> SpMatrix {
    assert!(i != j && i != 0 && j != 0, "transvection needs i != j");
    assert!((i.unsigned_abs() as usize) <= n && (j.unsigned_abs() as usize) <= n);
    let mut m = SpMatrix::identity(ring, n);
    let v = xi.coords();
    let w = 2 * n;
    let (r1, c1) = (pos(n, i), pos(n, j));
    m.ent[r1 * w + c1] ^= v;
    if i != -j {
        let (r2, c2) = (pos(n, -j), pos(n, -i));
        m.ent[r2 * w + c2] ^= v;
    }
    m
}

/// Root element `x_α(ξ)`: the transvection at the first fiber pair of `α`.
pub fn x_root(ring: &Ring, n: usize, alpha: &Root, xi: RingElt) -> SpMatrix {
    let [(i, j), _] = alpha.fiber();
    transvection(ring, n, i, j, xi)
}

/// `w_α = x_α(1) x_{−α}(1) x_α(1)`; conjugation by it carries `x_β(ξ)` to
/// `x_{s_α(β)}(ξ)` exactly (characteristic 2 leaves no sign corrections).
pub fn weyl_element(ring: &Ring, n: usize, alpha: &Root) -> SpMatrix {
    let a = x_root(ring, n, alpha, ring.one());
    let b = x_root(ring, n, &alpha.neg(), ring.one());
    a.mul(ring, &b).mul(ring, &a)
}

/// `n × n` block over a ring, 0-based.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SquareMat {
    ring: RingId,
    n: u8,
    ent: Vec<u8>,
}

impl SquareMat {
    pub fn zero(ring: &Ring, n: usize) -> SquareMat {
        SquareMat { ring: ring.id(), n: n as u8, ent: vec![0; n * n] }
    }

    pub fn identity(ring: &Ring, n: usize) -> SquareMat {
        let mut m = SquareMat::zero(ring, n);
        for i in 0..n {
            m.ent[i * n + i] = ring.unit_coords();
        }
        m
    }

    pub fn from_coords(ring: &Ring, n: usize, ent: Vec<u8>) -> SquareMat {
        assert_eq!(ent.len(), n * n);
        assert!(ent.iter().all(|&c| (c as usize) < ring.card()));
        SquareMat { ring: ring.id(), n: n as u8, ent }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.ent[r * self.n() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        let n = self.n();
        self.ent[r * n + c] = v;
    }

    pub fn add(&self, other: &SquareMat) -> SquareMat {
        assert!(self.ring == other.ring && self.n == other.n);
        let ent = self.ent.iter().zip(&other.ent).map(|(a, b)| a ^ b).collect();
        SquareMat { ring: self.ring, n: self.n, ent }
    }

    pub fn mul(&self, ring: &Ring, other: &SquareMat) -> SquareMat {
        assert!(self.ring == ring.id() && other.ring == ring.id() && self.n == other.n);
        let n = self.n();
        let mut ent = vec![0u8; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.ent[r * n + k];
                if a == 0 {
                    continue;
                }
                for c in 0..n {
                    let b = other.ent[k * n + c];
                    if b != 0 {
                        ent[r * n + c] ^= ring.mul_raw(a, b);
                    }
                }
            }
        }
        SquareMat { ring: self.ring, n: self.n, ent }
    }

    /// The involution `a ↦ a*`: reflection in the antidiagonal,
    /// `(a*)_{rc} = a_{n−1−c, n−1−r}` (0-based).
    pub fn star(&self) -> SquareMat {
        let n = self.n();
        let mut ent = vec![0u8; n * n];
        for r in 0..n {
            for c in 0..n {
                ent[r * n + c] = self.ent[(n - 1 - c) * n + (n - 1 - r)];
            }
        }
        SquareMat { ring: self.ring, n: self.n, ent }
    }

    pub fn is_zero(&self) -> bool {
        self.ent.iter().all(|&c| c == 0)
    }

    /// Entries `(n−k+1, k)` in 1-based terms: the antidiagonal.
    pub fn antidiagonal(&self) -> Vec<u8> {
        let n = self.n();
        (0..n).map(|k| self.ent[(n - 1 - k) * n + k]).collect()
    }
}

/// The four `n × n` blocks of a `2n × 2n` matrix, row order `(a b; c d)`.
pub fn blocks(ring: &Ring, g: &SpMatrix) -> (SquareMat, SquareMat, SquareMat, SquareMat) {
    g.check(ring);
    let n = g.n();
    let w = 2 * n;
    let cut = |r0: usize, c0: usize| -> SquareMat {
        let mut ent = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                ent.push(g.ent[(r0 + r) * w + (c0 + c)]);
            }
        }
        SquareMat { ring: g.ring, n: g.n, ent }
    };
    (cut(0, 0), cut(0, n), cut(n, 0), cut(n, n))
}

/// Membership in `M_n(·, Λ)`: fixed by `*` with antidiagonal inside `Λ`.
/// Entry membership in a subring is the caller's concern.
pub fn in_mn_form(m: &SquareMat, lambda: &FormParameter) -> bool {
    m.star() == *m && m.antidiagonal().iter().all(|&c| lambda.contains_coords(c))
}

/// Membership in `Min`: fixed by `*` with zero antidiagonal.
pub fn in_min(m: &SquareMat) -> bool {
    m.star() == *m && m.antidiagonal().iter().all(|&c| c == 0)
}

/// Equality modulo `Min`.
pub fn eq_mod_min(x: &SquareMat, y: &SquareMat) -> bool {
    in_min(&x.add(y))
}

/// Symmetric matrix with constrained antidiagonal; the carrier of the
/// `a ∘ b = a b a*` action.
#[derive(Clone, Debug)]
pub struct MnFormMatrix {
    mat: SquareMat,
    lambda: FormParameter,
}

impl MnFormMatrix {
    pub fn new(mat: SquareMat, lambda: FormParameter) -> Option<MnFormMatrix> {
        in_mn_form(&mat, &lambda).then_some(MnFormMatrix { mat, lambda })
    }

    pub fn mat(&self) -> &SquareMat {
        &self.mat
    }
}

/// `a ∘ b = a b a*`. The result stays in `M_n(·, Λ)`: symmetry is preserved
/// by conjugation with `*`, and in characteristic 2 the antidiagonal of
/// `a b a*` is a `μ²λ`-combination of `b`'s antidiagonal.
pub fn circle_action(ring: &Ring, a: &SquareMat, b: &MnFormMatrix) -> MnFormMatrix {
    let raw = a.mul(ring, &b.mat).mul(ring, &a.star());
    MnFormMatrix::new(raw, b.lambda).expect("circle action preserves the form constraints")
}

/// Membership in the Bak group: all entries in `R` and, blockwise,
/// `a*d + c*b = e`, `c*a ∈ M_n(R,Λ)`, `d*b ∈ M_n(R,Λ)`. These conditions
/// together imply the matrix is symplectic.
pub fn in_bak_sp(ring: &Ring, fr: &FormRing, g: &SpMatrix) -> bool {
    g.check(ring);
    assert!(fr.ring_id() == ring.id(), "form ring over a different ring");
    if !g.entries_in(fr.r()) {
        return false;
    }
    let (a, b, c, d) = blocks(ring, g);
    let astar = a.star();
    let cstar = c.star();
    let dstar = d.star();
    let mut lhs = astar.mul(ring, &d).add(&cstar.mul(ring, &b));
    let idm = SquareMat::identity(ring, g.n());
    if lhs != idm {
        return false;
    }
    lhs = cstar.mul(ring, &a);
    if !in_mn_form(&lhs, fr.lambda()) {
        return false;
    }
    lhs = dstar.mul(ring, &b);
    in_mn_form(&lhs, fr.lambda())
}

/// Stabilizer conditions of the first hyperbolic line: column 1 supported on
/// row 1 and row −1 supported on column −1. Input must be symplectic.
pub fn in_p1(ring: &Ring, g: &SpMatrix) -> bool {
    assert!(g.is_symplectic(ring), "parabolic predicates need a symplectic input");
    let n = g.n();
    let c1 = pos(n, 1);
    let rm1 = pos(n, -1);
    let w = 2 * n;
    for p in 0..w {
        if p != c1 && g.ent[p * w + c1] != 0 {
            return false;
        }
        if p != pos(n, -1) && g.ent[rm1 * w + p] != 0 {
            return false;
        }
    }
    true
}

/// Levi conditions on top of [`in_p1`]: row 1 supported on column 1 and
/// column −1 on row −1.
pub fn in_l1(ring: &Ring, g: &SpMatrix) -> bool {
    if !in_p1(ring, g) {
        return false;
    }
    let n = g.n();
    let r1 = pos(n, 1);
    let cm1 = pos(n, -1);
    let w = 2 * n;
    for p in 0..w {
        if p != r1 && g.ent[r1 * w + p] != 0 {
            return false;
        }
        if p != cm1 && g.ent[p * w + cm1] != 0 {
            return false;
        }
    }
    true
}

/// The unipotent radical of the line stabilizer: identity diagonal, free row
/// 1, column −1 mirroring it (`g_{−j,−1} = g_{1,j}`), zero elsewhere.
/// Input must be symplectic.
pub fn in_u1(ring: &Ring, g: &SpMatrix) -> bool {
    assert!(g.is_symplectic(ring), "parabolic predicates need a symplectic input");
    let n = g.n();
    let w = 2 * n;
    let r1 = pos(n, 1);
    let cm1 = pos(n, -1);
    for r in 0..w {
        for c in 0..w {
            let v = g.ent[r * w + c];
            if r == c {
                if v != ring.unit_coords() {
                    return false;
                }
                continue;
            }
            if r == r1 {
                continue; // row 1 is free
            }
            if c == cm1 {
                // mirror of row 1: g_{i,−1} = g_{1,−i} for |i| ≥ 2 (rows 1
                // and −1 were already consumed above)
                let i = idx_at(n, r);
                if v != g.ent[r1 * w + pos(n, -i)] {
                    return false;
                }
                continue;
            }
            if v != 0 {
                return false;
            }
        }
    }
    true
}

/// Coordinates `(j, μ_j)` of a member of the unipotent radical, listed for
/// `j ∈ I ∖ {1}` in index order. They satisfy
/// `g = ∏_j T_{1j}(μ_j)` (same order): `μ_j = g_{1,j}` except that the long
/// coordinate corrects for the cross products,
/// `μ_{−1} = g_{1,−1} + Σ_{j=2..n} g_{1,j} g_{1,−j}`.
pub fn u1_coordinates(ring: &Ring, g: &SpMatrix) -> Vec<(i8, RingElt)> {
    assert!(in_u1(ring, g), "coordinates need a unipotent-radical member");
    let n = g.n();
    let mut out = Vec::with_capacity(2 * n - 1);
    for j in index_order(n).skip(1) {
        if j == -1 {
            let mut c = g.get(ring, 1, -1);
            for k in 2..=n as i8 {
                c = ring.add(c, ring.mul(g.get(ring, 1, k), g.get(ring, 1, -k)));
            }
            out.push((j, c));
        } else {
            out.push((j, g.get(ring, 1, j)));
        }
    }
    out
}

/// Product `∏_j T_{1j}(μ_j)` over `j ∈ I ∖ {1}` in index order.
pub fn u1_from_coordinates(ring: &Ring, n: usize, coords: &[(i8, RingElt)]) -> SpMatrix {
    let mut g = SpMatrix::identity(ring, n);
    for &(j, mu) in coords {
        g = g.mul(ring, &transvection(ring, n, 1, j, mu));
    }
    g
}

/// Labeled elementary generator.
#[derive(Clone, Debug)]
pub struct EpGen {
    pub root: Root,
    pub scalar: RingElt,
    pub mat: SpMatrix,
}

/// Elementary generators of `Ep(R, Λ)`: `x_α(μ)` for short `α` and nonzero
/// `μ ∈ R`, `x_β(λ)` for long `β` and nonzero `λ ∈ Λ`, in the deterministic
/// root-then-scalar order.
pub fn ep_generators(ring: &Ring, fr: &FormRing, n: usize) -> Vec<EpGen> {
    assert!(fr.ring_id() == ring.id(), "form ring over a different ring");
    let mut out = Vec::new();
    for root in Root::all(n) {
        let scalars: Vec<u8> = match root.kind() {
            RootKind::Short => fr.r().elems().iter().filter(|&c| c != 0).collect(),
            RootKind::Long => fr.lambda().elems().iter().filter(|&c| c != 0).collect(),
        };
        for c in scalars {
            let scalar = ring.elt(c);
            out.push(EpGen { root, scalar, mat: x_root(ring, n, &root, scalar) });
        }
    }
    out
}
