//! Structure of the congruence kernel {g = e + eps*X} of the dual-number
//! ring inside the elementary closure. The first-order parts X form linear
//! subspaces; comparing the span reachable by conjugates of generator parts
//! with the span admitted by the block criterion pins down exactly which
//! scaling directions elementary products can reach. With the two-element
//! parameter {0, 1} the spans differ by one dimension (the unit-scaling
//! direction diag(1, 0, .., 0, 1)), and at rank 2 exhaustive enumeration
//! confirms the matching group-level index of 2.

use sp2::catalog::Catalog;
use sp2::engine::{GroupClosure, Membership, DEFAULT_CAP};
use sp2::matrix::{ep_generators, in_bak_sp, x_root, SpMatrix};
use sp2::ring::{form_param_generated, whole_subring, FormRing, Ring};
use sp2::roots::Root;

fn ring(name: &str) -> Ring {
    Catalog::default_catalog().expect("builtin catalog").take(name).expect("catalog ring")
}

/// F2 matrix of degree 2n as a bit row, one bit per entry.
fn mat_bits(g: &SpMatrix) -> u64 {
    let d = 2 * g.n();
    let mut v = 0u64;
    for (k, &c) in g.coords().iter().enumerate() {
        debug_assert!(c <= 1);
        v |= (c as u64) << k;
    }
    debug_assert!(d * d <= 64);
    v
}

fn bits_mat(r: &Ring, n: usize, bits: u64) -> SpMatrix {
    let d = 2 * n;
    let ent: Vec<u8> = (0..d * d).map(|k| (bits >> k & 1) as u8).collect();
    SpMatrix::from_coords(r, n, ent)
}

/// Row space over F2 with distinct leading bits, kept sorted descending.
#[derive(Default)]
struct Span {
    rows: Vec<u64>,
}

impl Span {
    fn reduce(&self, mut v: u64) -> u64 {
        for &r in &self.rows {
            if (v ^ r) < v {
                v ^= r;
            }
        }
        v
    }

    fn insert(&mut self, v: u64) -> bool {
        let v = self.reduce(v);
        if v == 0 {
            return false;
        }
        let at = self.rows.partition_point(|&r| r > v);
        self.rows.insert(at, v);
        true
    }

    fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }
}

/// Smallest subspace containing `seeds` and stable under conjugation by
/// every degree-2n elementary generator over F2.
fn conjugation_module(r: &Ring, n: usize, seeds: &[u64]) -> Span {
    let gens: Vec<(SpMatrix, SpMatrix)> = Root::all(n)
        .iter()
        .map(|a| {
            let g = x_root(r, n, a, r.one());
            let gi = g.inverse_symplectic();
            (g, gi)
        })
        .collect();
    let mut span = Span::default();
    let mut queue: Vec<u64> = Vec::new();
    for &s in seeds {
        if span.insert(s) {
            queue.push(s);
        }
    }
    while let Some(v) = queue.pop() {
        let x = bits_mat(r, n, v);
        for (g, gi) in &gens {
            let w = mat_bits(&g.mul(r, &x).mul(r, gi));
            if span.insert(w) {
                queue.push(w);
            }
        }
    }
    span
}

/// First-order parts of the elementary generators that are congruent to
/// the identity: one bit row per root, X with x_root(1) = e + X.
fn root_vectors(r: &Ring, n: usize, shorts_only: bool) -> Vec<u64> {
    let d = 2 * n;
    let ident: u64 = (0..d).fold(0u64, |acc, i| acc | 1 << (i * d + i));
    Root::all(n)
        .iter()
        .filter(|a| !shorts_only || a.is_short())
        .map(|a| mat_bits(&x_root(r, n, a, r.one())) ^ ident)
        .collect()
}

/// Whether e + eps*X satisfies the block criterion over the dual numbers.
fn in_criterion_kernel(reps: &Ring, fr: &FormRing, n: usize, bits: u64) -> bool {
    let d = 2 * n;
    let unit = reps.unit_coords();
    let eps = reps.parse_elt("eps").expect("eps in the dual numbers").coords();
    let mut ent = vec![0u8; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut c = if i == j { unit } else { 0 };
            if bits >> (i * d + j) & 1 == 1 {
                c ^= eps;
            }
            ent[i * d + j] = c;
        }
    }
    in_bak_sp(reps, fr, &SpMatrix::from_coords(reps, n, ent))
}

fn bit(d: usize, row: usize, col: usize) -> u64 {
    1 << (row * d + col)
}

/// Basis of the first-order criterion kernel with parameter {0, 1}:
/// top-left block free (mirrored into the bottom-right), off-antidiagonal
/// star-symmetric pairs in the corner blocks. Complement within the full
/// symplectic condition: the antidiagonal corner entries, one per index.
fn kernel_basis(n: usize) -> (Vec<u64>, Vec<u64>) {
    let d = 2 * n;
    let mut basis = Vec::new();
    let mut complement = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // a-block e_ij forces d-block e at the star-mirrored spot
            basis.push(bit(d, i, j) | bit(d, n + (n - 1 - j), n + (n - 1 - i)));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let (mi, mj) = (n - 1 - j, n - 1 - i);
            if i == mi && j == mj {
                // antidiagonal fixed points carry the parameter constraint
                complement.push(bit(d, i, n + j));
                complement.push(bit(d, n + i, j));
            } else if (i, j) < (mi, mj) {
                basis.push(bit(d, i, n + j) | bit(d, mi, n + mj));
                basis.push(bit(d, n + i, j) | bit(d, n + mi, mj));
            }
        }
    }
    (basis, complement)
}

fn all_combinations(vectors: &[u64]) -> impl Iterator<Item = u64> + '_ {
    (1u64..1 << vectors.len()).map(move |mask| {
        vectors
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .fold(0u64, |acc, (_, &v)| acc ^ v)
    })
}

/// diag(1, 0, .., 0, 1): the direction of the unit-scaling matrices
/// diag(u, 1, .., 1, 1/u) with u = 1 + eps.
fn unit_scaling_direction(n: usize) -> u64 {
    let d = 2 * n;
    bit(d, 0, 0) | bit(d, d - 1, d - 1)
}

fn minimal_form_ring(r: &Ring) -> FormRing {
    let whole = whole_subring(r);
    let lam = form_param_generated(r, &whole, [r.one()]);
    FormRing::new(whole, lam).expect("parameter inside the whole ring")
}

#[test]
fn unit_scaling_coset_at_rank_2() {
    let r = ring("F2eps");
    let fr = minimal_form_ring(&r);
    let n = 2;

    let gens: Vec<SpMatrix> =
        ep_generators(&r, &fr, n).into_iter().map(|g| g.mat).collect();
    let ep = GroupClosure::closure(&r, n, &gens, DEFAULT_CAP).expect("elementary closure");
    assert!(ep.is_complete());
    assert_eq!(ep.len(), 23_040);

    // h = diag(1+eps, 1, 1, 1+eps) preserves the quadratic refinement
    // exactly (u * 1/u = 1) yet no elementary word reaches it: long-root
    // generators only carry scalars from the parameter {0, 1}.
    let unit = r.unit_coords();
    let ueps = unit ^ r.parse_elt("eps").unwrap().coords();
    let d = 2 * n;
    let mut ent = vec![0u8; d * d];
    for i in 0..d {
        ent[i * d + i] = if i == 0 || i == d - 1 { ueps } else { unit };
    }
    let h = SpMatrix::from_coords(&r, n, ent);
    assert!(h.is_symplectic(&r));
    assert!(in_bak_sp(&r, &fr, &h));
    assert_eq!(ep.contains(&r, &h), Membership::Out);

    let mut extended = gens.clone();
    extended.push(h);
    let ext = GroupClosure::closure(&r, n, &extended, DEFAULT_CAP).expect("extended closure");
    assert!(ext.is_complete());
    assert_eq!(ext.len(), 46_080);

    // Sweep the ambient group: the block-criterion set coincides with the
    // extended closure, hence is a group containing the elementary closure
    // with index exactly 2.
    let full: Vec<SpMatrix> =
        ep_generators(&r, &FormRing::full(&r), n).into_iter().map(|g| g.mat).collect();
    let sp = GroupClosure::closure(&r, n, &full, DEFAULT_CAP).expect("ambient closure");
    assert!(sp.is_complete());
    assert_eq!(sp.len(), 737_280);
    let mut set_count = 0usize;
    for i in 0..sp.len() as u32 {
        let g = sp.element(&r, i);
        let in_set = in_bak_sp(&r, &fr, &g);
        let in_ext = ext.contains(&r, &g) == Membership::In;
        assert_eq!(in_set, in_ext, "criterion set and extended closure differ at element {i}");
        set_count += in_set as usize;
    }
    assert_eq!(set_count, 46_080);
}

#[test]
fn first_order_kernel_misses_the_unit_scaling_direction() {
    let f2 = ring("F2");
    let reps = ring("F2eps");
    let fr = minimal_form_ring(&reps);

    for n in [2usize, 3] {
        let (basis, complement) = kernel_basis(n);
        let expected_dim = 2 * n * n - n;
        assert_eq!(basis.len(), expected_dim);
        assert_eq!(complement.len(), 2 * n);
        for &v in &basis {
            assert!(in_criterion_kernel(&reps, &fr, n, v));
        }
        // The basis really is a basis and nothing in the complement span
        // sneaks in, so the criterion kernel has dimension exactly 2n^2 - n.
        let mut span = Span::default();
        for &v in &basis {
            assert!(span.insert(v));
        }
        for w in all_combinations(&complement) {
            assert!(!in_criterion_kernel(&reps, &fr, n, w));
            assert!(!span.contains(w));
        }

        // Conjugates of short-root parts span one dimension less: every
        // coordinate-mixing direction, but not the unit scaling itself.
        let shorts = root_vectors(&f2, n, true);
        let module = conjugation_module(&f2, n, &shorts);
        assert_eq!(module.dim(), expected_dim - 1);
        for &row in &module.rows {
            assert!(span.contains(row));
            assert!(in_criterion_kernel(&reps, &fr, n, row));
        }
        let scaling = unit_scaling_direction(n);
        assert!(span.contains(scaling));
        assert!(in_criterion_kernel(&reps, &fr, n, scaling));
        assert!(!module.contains(scaling));
        let mut closed = module;
        assert!(closed.insert(scaling));
        for &v in &basis {
            assert!(closed.contains(v), "gap is wider than the scaling direction at rank {n}");
        }

        // With the whole ring as parameter the long-root parts join the
        // seeds and the module fills the entire symplectic condition.
        let full_fr = FormRing::full(&reps);
        let everything = conjugation_module(&f2, n, &root_vectors(&f2, n, false));
        assert_eq!(everything.dim(), 2 * n * n + n);
        for &v in basis.iter().chain(&complement) {
            assert!(everything.contains(v));
            assert!(in_criterion_kernel(&reps, &full_fr, n, v));
        }
        assert!(everything.contains(scaling));
    }
}
