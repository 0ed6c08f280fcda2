//! Enumeration-backed checks of the structural facts the classifier leans
//! on: the normalizer description at rank 2, commutation of conjugated long
//! root subgroups, generation of the elementary group from first-line
//! transvections, and agreement of the blockwise normalizer test with a
//! brute-force oracle.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{EngineError, GroupClosure};
use crate::matrix::{ep_generators, in_bak_sp, transvection, x_root, SpMatrix};
use crate::ring::{FormRing, Ring};
use crate::roots::{index_order, Root};
use crate::sandwich::{normalizes, SandwichError};

#[derive(Error, Debug)]
pub enum VerifyError {
    #[error("enumerating {context} exceeded the cap of {cap} elements")]
    Capacity { context: String, cap: usize },
    #[error(transparent)]
    Sandwich(#[from] SandwichError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Full sweep ceiling for the conjugation-stability and abelian-quotient
/// checks; beyond it the checks run on seeded samples.
const PART2_FULL_LIMIT: usize = 10_000_000;
const PART3_FULL_LIMIT: usize = 1_000;
const SAMPLE_COUNT: usize = 10_000;

#[derive(Clone, Debug)]
pub struct NormalizerStructureReport {
    pub sp_order: usize,
    pub normalizer_order: usize,
    pub bak_order: usize,
    /// elements of the normalizer with entries in R are exactly the Bak
    /// group members
    pub intersection_matches: bool,
    /// the normalizer maps the Bak group set into itself under conjugation
    pub conjugation_stable: bool,
    pub conjugation_checks: usize,
    pub conjugation_full_sweep: bool,
    /// commutators of normalizer members land in the Bak group
    pub quotient_abelian: bool,
    pub commutator_pairs: usize,
    pub commutator_full_sweep: bool,
}

impl NormalizerStructureReport {
    pub fn ok(&self) -> bool {
        self.intersection_matches && self.conjugation_stable && self.quotient_abelian
    }
}

/// Checks the three structural claims about `N = N(R, Λ)` inside the full
/// symplectic group over the ambient ring, by complete enumeration:
///
/// 1. members of `N` with entries in `R` form exactly `Sp(R, Λ)`;
/// 2. conjugation by `N` maps the enumerated `Sp(R, Λ)` into itself;
/// 3. the quotient `N / Sp(R, Λ)` is abelian, i.e. commutators of members
///    of `N` land in `Sp(R, Λ)`.
///
/// Checks 2 and 3 sweep all pairs below a size limit and fall back to
/// seeded samples above it.
pub fn verify_normalizer_structure(
    ring: &Ring,
    fr: &FormRing,
    n: usize,
    cap: usize,
    seed: u64,
) -> Result<NormalizerStructureReport, VerifyError> {
    let full = FormRing::full(ring);
    let ambient_gens: Vec<SpMatrix> =
        ep_generators(ring, &full, n).into_iter().map(|g| g.mat).collect();
    let sp = GroupClosure::closure(ring, n, &ambient_gens, cap)?;
    if !sp.is_complete() {
        return Err(VerifyError::Capacity {
            context: format!("the symplectic group of rank {n} over {}", ring.name()),
            cap,
        });
    }
    let dim = ring.dim();
    let r_sub = *fr.r();

    let mut normalizer: Vec<SpMatrix> = Vec::new();
    let mut bak_keys: Vec<u128> = Vec::new();
    let mut bak_set: HashSet<u128> = HashSet::new();
    let mut intersection_matches = true;
    for i in 0..sp.len() as u32 {
        let g = sp.element(ring, i);
        let in_n = normalizes(ring, fr, &g)?;
        let in_bak = in_bak_sp(ring, fr, &g);
        if in_bak {
            let key = g.encode(dim);
            bak_keys.push(key);
            bak_set.insert(key);
        }
        // claim 1, pointwise: Bak membership coincides with
        // (normalizes and entries in R)
        if in_bak != (in_n && g.entries_in(&r_sub)) {
            intersection_matches = false;
        }
        if in_n {
            normalizer.push(g);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv: Vec<SpMatrix> = normalizer.iter().map(|g| g.inverse_symplectic()).collect();

    // claim 2: g x g⁻¹ stays in the enumerated Bak set
    let mut conjugation_stable = true;
    let mut conjugation_checks = 0usize;
    let conjugation_full_sweep = normalizer.len() * bak_keys.len() <= PART2_FULL_LIMIT;
    let check_conj = |gi: usize, xi: usize| {
        let x = SpMatrix::decode(ring, n, bak_keys[xi]);
        let c = normalizer[gi].mul(ring, &x).mul(ring, &inv[gi]);
        bak_set.contains(&c.encode(dim))
    };
    if conjugation_full_sweep {
        'outer: for gi in 0..normalizer.len() {
            for xi in 0..bak_keys.len() {
                conjugation_checks += 1;
                if !check_conj(gi, xi) {
                    conjugation_stable = false;
                    break 'outer;
                }
            }
        }
    } else {
        for _ in 0..SAMPLE_COUNT {
            let gi = rng.gen_range(0..normalizer.len());
            let xi = rng.gen_range(0..bak_keys.len());
            conjugation_checks += 1;
            if !check_conj(gi, xi) {
                conjugation_stable = false;
                break;
            }
        }
    }

    // claim 3: [g, h] lands in the Bak group
    let mut quotient_abelian = true;
    let mut commutator_pairs = 0usize;
    let commutator_full_sweep = normalizer.len() <= PART3_FULL_LIMIT;
    let check_pair = |gi: usize, hi: usize| {
        let c = normalizer[gi]
            .mul(ring, &normalizer[hi])
            .mul(ring, &inv[gi])
            .mul(ring, &inv[hi]);
        in_bak_sp(ring, fr, &c)
    };
    if commutator_full_sweep {
        'outer: for gi in 0..normalizer.len() {
            for hi in 0..normalizer.len() {
                commutator_pairs += 1;
                if !check_pair(gi, hi) {
                    quotient_abelian = false;
                    break 'outer;
                }
            }
        }
    } else {
        for _ in 0..SAMPLE_COUNT {
            let gi = rng.gen_range(0..normalizer.len());
            let hi = rng.gen_range(0..normalizer.len());
            commutator_pairs += 1;
            if !check_pair(gi, hi) {
                quotient_abelian = false;
                break;
            }
        }
    }

    Ok(NormalizerStructureReport {
        sp_order: sp.len(),
        normalizer_order: normalizer.len(),
        bak_order: bak_keys.len(),
        intersection_matches,
        conjugation_stable,
        conjugation_checks,
        conjugation_full_sweep,
        quotient_abelian,
        commutator_pairs,
        commutator_full_sweep,
    })
}

/// Whether the long root subgroup at `alpha`, conjugated by `h^g = g⁻¹hg`,
/// commutes with the unconjugated one: `[x_α(s)^{h^g}, x_α(t)] = e` for all
/// scalars `s, t`. Holds whenever `h` is conjugate to a short-root
/// transvection; the caller owns that contract (passing a long `h` is how
/// the counterexample search below probes the boundary).
pub fn conjugated_root_subgroups_commute(
    ring: &Ring,
    g: &SpMatrix,
    h: &SpMatrix,
    alpha: &Root,
) -> bool {
    assert!(alpha.is_long(), "the commutation law is about long root subgroups");
    let n = g.n();
    let hg = g.inverse_symplectic().mul(ring, h).mul(ring, g);
    let hg_inv = hg.inverse_symplectic();
    for s in ring.elements() {
        let xs = x_root(ring, n, alpha, s);
        let xs_c = hg_inv.mul(ring, &xs).mul(ring, &hg);
        let xs_c_inv = xs_c.inverse_symplectic();
        for t in ring.elements() {
            let xt = x_root(ring, n, alpha, t);
            let comm = xs_c.mul(ring, &xt).mul(ring, &xs_c_inv).mul(ring, &xt.inverse_symplectic());
            if !comm.is_identity(ring) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct LongProbeSearch {
    pub trials: usize,
    pub counterexample: Option<SpMatrix>,
}

/// Random search for a failure of the commutation law when the conjugating
/// element is a long-root transvection instead of a short one. The law is
/// not claimed there; a hit is reported as data, absence says nothing.
pub fn search_long_probe_failure(
    ring: &Ring,
    n: usize,
    alpha: &Root,
    trials: usize,
    seed: u64,
) -> LongProbeSearch {
    let h = transvection(ring, n, 1, -1, ring.one());
    let gens: Vec<SpMatrix> =
        ep_generators(ring, &FormRing::full(ring), n).into_iter().map(|g| g.mat).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let mut g = SpMatrix::identity(ring, n);
        for _ in 0..15 {
            g = g.mul(ring, &gens[rng.gen_range(0..gens.len())]);
        }
        if !conjugated_root_subgroups_commute(ring, &g, &h, alpha) {
            return LongProbeSearch { trials: trial + 1, counterexample: Some(g) };
        }
    }
    LongProbeSearch { trials, counterexample: None }
}

/// Sweeps the commutation law over seeded random `g` with `h` ranging over
/// all short transvection letters and `alpha` over all long roots; returns
/// the number of violations (expected zero).
pub fn sweep_commutation_law(ring: &Ring, n: usize, trials: usize, seed: u64) -> usize {
    let full = FormRing::full(ring);
    let gens: Vec<SpMatrix> =
        ep_generators(ring, &full, n).into_iter().map(|g| g.mat).collect();
    let shorts: Vec<SpMatrix> = ep_generators(ring, &full, n)
        .into_iter()
        .filter(|g| g.root.is_short())
        .map(|g| g.mat)
        .collect();
    let longs: Vec<Root> = Root::all(n).into_iter().filter(|r| r.is_long()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let mut g = SpMatrix::identity(ring, n);
        for _ in 0..12 {
            g = g.mul(ring, &gens[rng.gen_range(0..gens.len())]);
        }
        let h = &shorts[rng.gen_range(0..shorts.len())];
        let alpha = &longs[rng.gen_range(0..longs.len())];
        if !conjugated_root_subgroups_commute(ring, &g, h, alpha) {
            violations += 1;
        }
    }
    violations
}

/// First-line transvections: `T_{1i}(μ)` and `T_{i1}(μ)` for `i ≠ ±1` with
/// `μ ∈ R`, plus the long pair `T_{1,−1}(λ)`, `T_{−1,1}(λ)` with `λ ∈ Λ`.
pub fn line_generators(ring: &Ring, fr: &FormRing, n: usize) -> Vec<SpMatrix> {
    let mut out = Vec::new();
    for i in index_order(n) {
        if i == 1 || i == -1 {
            continue;
        }
        for c in fr.r().elems().iter().filter(|&c| c != 0) {
            out.push(transvection(ring, n, 1, i, ring.elt(c)));
            out.push(transvection(ring, n, i, 1, ring.elt(c)));
        }
    }
    for c in fr.lambda().elems().iter().filter(|&c| c != 0) {
        out.push(transvection(ring, n, 1, -1, ring.elt(c)));
        out.push(transvection(ring, n, -1, 1, ring.elt(c)));
    }
    out
}

#[derive(Clone, Debug)]
pub struct GenerationReport {
    pub restricted_order: usize,
    pub full_order: usize,
    pub equal: bool,
}

/// Whether the first-line transvections already generate the whole
/// elementary group: both closures are enumerated and compared as sets.
pub fn verify_line_generation(
    ring: &Ring,
    fr: &FormRing,
    n: usize,
    cap: usize,
) -> Result<GenerationReport, VerifyError> {
    let restricted = line_generators(ring, fr, n);
    let full_gens: Vec<SpMatrix> =
        ep_generators(ring, fr, n).into_iter().map(|g| g.mat).collect();
    let a = GroupClosure::closure(ring, n, &restricted, cap)?;
    let b = GroupClosure::closure(ring, n, &full_gens, cap)?;
    if !a.is_complete() || !b.is_complete() {
        return Err(VerifyError::Capacity {
            context: format!("elementary closures of rank {n} over {}", ring.name()),
            cap,
        });
    }
    let equal = a.len() == b.len() && a.keys().all(|k| b.contains_key(k));
    Ok(GenerationReport { restricted_order: a.len(), full_order: b.len(), equal })
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub sp_order: usize,
    pub ep_order: usize,
    pub checked: usize,
    pub disagreements: usize,
}

/// Compares the blockwise normalizer test against a brute-force oracle over
/// the fully enumerated rank-`n` group: the oracle conjugates every
/// elementary generator both ways and asks for membership in the enumerated
/// elementary closure (conjugation is an automorphism, so generator
/// containment settles containment of the whole subgroup).
pub fn verify_normalizes_against_enumeration(
    ring: &Ring,
    fr: &FormRing,
    n: usize,
    cap: usize,
) -> Result<OracleReport, VerifyError> {
    let full = FormRing::full(ring);
    let ambient_gens: Vec<SpMatrix> =
        ep_generators(ring, &full, n).into_iter().map(|g| g.mat).collect();
    let sp = GroupClosure::closure(ring, n, &ambient_gens, cap)?;
    if !sp.is_complete() {
        return Err(VerifyError::Capacity {
            context: format!("the symplectic group of rank {n} over {}", ring.name()),
            cap,
        });
    }
    let ep_gens: Vec<SpMatrix> = ep_generators(ring, fr, n).into_iter().map(|g| g.mat).collect();
    let ep = GroupClosure::closure(ring, n, &ep_gens, cap)?;
    if !ep.is_complete() {
        return Err(VerifyError::Capacity {
            context: format!("the elementary group of rank {n} over {}", ring.name()),
            cap,
        });
    }
    let dim = ring.dim();
    let mut disagreements = 0usize;
    let mut checked = 0usize;
    for i in 0..sp.len() as u32 {
        let g = sp.element(ring, i);
        let gi = g.inverse_symplectic();
        let blockwise = normalizes(ring, fr, &g)?;
        let brute = ep_gens.iter().all(|x| {
            ep.contains_key(g.mul(ring, x).mul(ring, &gi).encode(dim))
                && ep.contains_key(gi.mul(ring, x).mul(ring, &g).encode(dim))
        });
        checked += 1;
        if blockwise != brute {
            disagreements += 1;
        }
    }
    Ok(OracleReport { sp_order: sp.len(), ep_order: ep.len(), checked, disagreements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::engine::sp_order_over_field;
    use crate::ring::{form_param_generated, subring_generated};

    fn ring(name: &str) -> Ring {
        Catalog::default_catalog().unwrap().take(name).unwrap()
    }

    fn form_ring(r: &Ring, sub_gens: &[u8], lam_gens: &[u8]) -> FormRing {
        let sub = subring_generated(r, sub_gens.iter().map(|&c| r.elt(c)));
        let lam = form_param_generated(r, &sub, lam_gens.iter().map(|&c| r.elt(c)));
        FormRing::new(sub, lam).unwrap()
    }

    #[test]
    fn normalizer_structure_trivial_instance() {
        let r = ring("F2");
        let fr = FormRing::full(&r);
        let rep = verify_normalizer_structure(&r, &fr, 2, 10_000, 7).unwrap();
        assert!(rep.ok());
        assert_eq!(rep.sp_order as u64, sp_order_over_field(2, 2));
        // R = A with full parameter: everything normalizes
        assert_eq!(rep.normalizer_order, rep.sp_order);
        assert_eq!(rep.bak_order, rep.sp_order);
        assert!(rep.conjugation_full_sweep);
        assert!(rep.commutator_full_sweep);
    }

    #[test]
    fn normalizer_structure_detects_the_congruence_normalizer() {
        let r = ring("F2eps");
        let fr = form_ring(&r, &[], &[1]);
        let rep = verify_normalizer_structure(&r, &fr, 2, 2_000_000, 7).unwrap();
        assert!(rep.ok());
        assert_eq!(rep.sp_order, 737_280);
        assert_eq!(rep.bak_order, 720);
        // strictly between Sp(F2) and the center times it
        assert!(rep.normalizer_order > 720);
        assert_eq!(rep.normalizer_order % 720, 0);
    }

    #[test]
    fn commutation_law_on_disjoint_supports() {
        let r = ring("F2");
        let g = SpMatrix::identity(&r, 3);
        let h = transvection(&r, 3, 1, 2, r.one());
        assert!(conjugated_root_subgroups_commute(&r, &g, &h, &Root::long(3, 1)));
    }

    #[test]
    fn commutation_law_randomized_sweep() {
        let r = ring("F2eps");
        assert_eq!(sweep_commutation_law(&r, 3, 60, 99), 0);
    }

    #[test]
    fn long_probe_search_runs_and_reports() {
        let r = ring("F2eps");
        let got = search_long_probe_failure(&r, 2, &Root::long(1, 1), 40, 5);
        if let Some(g) = &got.counterexample {
            assert!(g.is_symplectic(&r));
            assert!(!conjugated_root_subgroups_commute(
                &r,
                g,
                &transvection(&r, 2, 1, -1, r.one()),
                &Root::long(1, 1)
            ));
        }
    }

    #[test]
    fn line_generation_small_instance() {
        let r = ring("F2");
        let fr = FormRing::full(&r);
        let rep = verify_line_generation(&r, &fr, 2, 10_000).unwrap();
        assert!(rep.equal);
        assert_eq!(rep.full_order, 720);
    }

    #[test]
    fn transvection_commutator_identities() {
        let r = ring("F2eps");
        let n = 3;
        // short-short: T_{i1}(μ) against T_{1j}(1) lands on T_{ij}(μ)
        for mu in r.elements().filter(|m| !m.is_zero()) {
            for (i, j) in [(2i8, 3i8), (2, -3), (3, -2), (-2, 3)] {
                let a = transvection(&r, n, i, 1, mu);
                let b = transvection(&r, n, 1, j, r.one());
                let comm = a
                    .mul(&r, &b)
                    .mul(&r, &a.inverse_symplectic())
                    .mul(&r, &b.inverse_symplectic());
                assert_eq!(comm, transvection(&r, n, i, j, mu));
            }
            // long-short: T_{-1,1}(λ) against T_{1i}(1) gives the paired
            // product T_{-1,i}(λ)·T_{-i,i}(λ)
            for i in [2i8, 3] {
                let a = transvection(&r, n, -1, 1, mu);
                let b = transvection(&r, n, 1, i, r.one());
                let comm = a
                    .mul(&r, &b)
                    .mul(&r, &a.inverse_symplectic())
                    .mul(&r, &b.inverse_symplectic());
                let want = transvection(&r, n, -1, i, mu)
                    .mul(&r, &transvection(&r, n, -i, i, mu));
                assert_eq!(comm, want);
            }
        }
    }

    #[test]
    fn oracle_agreement_over_f2() {
        let r = ring("F2");
        let fr = FormRing::full(&r);
        let rep = verify_normalizes_against_enumeration(&r, &fr, 2, 10_000).unwrap();
        assert_eq!(rep.disagreements, 0);
        assert_eq!(rep.checked, 720);
    }

    #[test]
    fn capacity_errors_name_the_context() {
        let r = ring("F2eps");
        let fr = FormRing::full(&r);
        let err = verify_line_generation(&r, &fr, 2, 100).unwrap_err();
        match err {
            VerifyError::Capacity { cap, .. } => assert_eq!(cap, 100),
            other => panic!("expected a capacity error, got {other}"),
        }
    }
}
