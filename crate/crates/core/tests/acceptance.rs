//! Acceptance gate: ten end-to-end criteria, one test each. Every test
//! prints exactly one `ACCEPT <k> <name>: PASS|FAIL` line; the line is
//! written straight to the stdout handle so it survives the harness
//! capture even when the test passes.

use std::io::Write as _;
use std::panic::AssertUnwindSafe;
use std::sync::LazyLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sp2::catalog::Catalog;
use sp2::engine::{sp_order_over_field, GroupClosure, Membership, DEFAULT_CAP};
use sp2::matrix::{ep_generators, in_bak_sp, transvection, x_root, SpMatrix};
use sp2::report::{
    elements_as_bitstrings, recheck, CertEntry, Config, MatrixSpec, Outcome, Report, RingSpec,
};
use sp2::ring::{
    enumerate_form_params, form_param_generated, subring_generated, whole_subring, FormRing, Ring,
    Subring,
};
use sp2::roots::{chevalley_commutator, Root};
use sp2::sandwich::{
    classify, ClassifyInput, ClassifyOptions, ClassifyStatus, LetterCtx, UniquenessCheck,
};
use sp2::verify::{
    conjugated_root_subgroups_commute, sweep_commutation_law, verify_line_generation,
    verify_normalizer_structure, verify_normalizes_against_enumeration, VerifyError,
};

fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Runs one criterion body, prints the verdict line, then propagates any
/// failure to the harness. Panics inside the body still get a FAIL line.
fn gate<F>(k: usize, name: &str, body: F)
where
    F: FnOnce() -> Result<String, String>,
{
    let started = Instant::now();
    let res = std::panic::catch_unwind(AssertUnwindSafe(body));
    let ok = matches!(&res, Ok(Ok(_)));
    emit(&format!("ACCEPT {k} {name}: {}", if ok { "PASS" } else { "FAIL" }));
    match res {
        Ok(Ok(detail)) => {
            emit(&format!("  [{k}] {detail} ({} ms)", started.elapsed().as_millis()));
        }
        Ok(Err(why)) => panic!("criterion {k} ({name}): {why}"),
        Err(p) => std::panic::resume_unwind(p),
    }
}

fn ring(name: &str) -> Ring {
    Catalog::default_catalog().expect("builtin catalog").take(name).expect("catalog ring")
}

fn prime(r: &Ring) -> Subring {
    subring_generated(r, [])
}

fn full_gens(r: &Ring, n: usize) -> Vec<SpMatrix> {
    ep_generators(r, &FormRing::full(r), n).into_iter().map(|g| g.mat).collect()
}

fn sp_closure(r: &Ring, n: usize) -> GroupClosure {
    let c = GroupClosure::closure(r, n, &full_gens(r, n), DEFAULT_CAP).expect("enumeration");
    assert!(c.is_complete(), "ambient enumeration hit the cap");
    c
}

/// Shared rank-3 enumeration of the full elementary group over F2
/// (criteria 2, 7 and the fixed-point uniqueness cross-checks lean on it).
struct Ambient {
    ring: Ring,
    sp: GroupClosure,
}

static F2_N3: LazyLock<Ambient> = LazyLock::new(|| {
    let r = ring("F2");
    let sp = sp_closure(&r, 3);
    Ambient { ring: r, sp }
});

/// Shared rank-3 base alphabet closure over F2eps: the elementary letters
/// over the prime pair, enumerated once and reused by every classification
/// that runs over this ring (criteria 5 and 6).
struct Rank3 {
    ring: Ring,
    base: GroupClosure,
}

static F2EPS_N3: LazyLock<Rank3> = LazyLock::new(|| {
    let r = ring("F2eps");
    let k = prime(&r);
    let cx = LetterCtx::new(&r, 3, k, &[]);
    let letters = cx.letters()[..cx.ep_letter_count()].to_vec();
    let base = GroupClosure::closure(&r, 3, &letters, DEFAULT_CAP).expect("base enumeration");
    assert!(base.is_complete(), "base enumeration hit the cap");
    Rank3 { ring: r, base }
});

fn random_product(ring: &Ring, gens: &[SpMatrix], len: usize, rng: &mut ChaCha8Rng) -> SpMatrix {
    let mut m = SpMatrix::identity(ring, gens[0].n());
    for _ in 0..len {
        m = m.mul(ring, &gens[rng.gen_range(0..gens.len())]);
    }
    m
}

#[test]
fn accept_01_commutator_formula() {
    gate(1, "commutator-formula-exhaustive", || {
        let mut evaluations = 0usize;
        for name in ["F2", "F2eps"] {
            let r = ring(name);
            let n = 3;
            let roots = Root::all(n);
            for alpha in &roots {
                for beta in &roots {
                    if beta == alpha || *beta == alpha.neg() {
                        if chevalley_commutator(&r, alpha, r.one(), beta, r.one()).is_ok() {
                            return Err(format!(
                                "proportional pair {} / {} over {name} did not error",
                                alpha.render(),
                                beta.render()
                            ));
                        }
                        continue;
                    }
                    for s in r.elements() {
                        for t in r.elements() {
                            let factors =
                                chevalley_commutator(&r, alpha, s, beta, t).map_err(|e| {
                                    format!("{} / {} over {name}: {e}", alpha.render(), beta.render())
                                })?;
                            let mut prod = SpMatrix::identity(&r, n);
                            for (root, scalar) in &factors {
                                prod = prod.mul(&r, &x_root(&r, n, root, *scalar));
                            }
                            let a = x_root(&r, n, alpha, s);
                            let b = x_root(&r, n, beta, t);
                            let direct = a
                                .mul(&r, &b)
                                .mul(&r, &a.inverse_symplectic())
                                .mul(&r, &b.inverse_symplectic());
                            evaluations += 1;
                            if prod != direct {
                                return Err(format!(
                                    "mismatch at [{}({}), {}({})] over {name}",
                                    alpha.render(),
                                    r.fmt_elt(s),
                                    beta.render(),
                                    r.fmt_elt(t)
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(format!("{evaluations} commutator evaluations over F2 and F2eps, rank 3"))
    });
}

#[test]
fn accept_02_closure_orders() {
    gate(2, "elementary-closure-orders", || {
        let r2 = ring("F2");
        let sp2c = sp_closure(&r2, 2);
        let want2 = sp_order_over_field(2, 2);
        if sp2c.len() as u64 != want2 || want2 != 720 {
            return Err(format!("rank 2 order {} vs formula {want2}", sp2c.len()));
        }
        let amb = &*F2_N3;
        let want3 = sp_order_over_field(2, 3);
        if amb.sp.len() as u64 != want3 || want3 != 1_451_520 {
            return Err(format!("rank 3 order {} vs formula {want3}", amb.sp.len()));
        }
        Ok(format!("orders {} (rank 2) and {} (rank 3) match the closed formula", 720, 1_451_520))
    });
}

#[test]
fn accept_03_block_criterion_sets() {
    // Known red: over F2eps with the two-element parameter {0, 1} the
    // block-criterion set is strictly larger than the elementary closure
    // (index 2, coset generated by the unit-scaling diagonal with u = 1+eps,
    // which preserves the quadratic form exactly). The assertion stays as
    // stated; tests/congruence_kernel.rs pins the structure of the gap.
    gate(3, "block-criterion-equals-closure", || {
        let mut instances = 0usize;
        let mut failures: Vec<String> = Vec::new();
        for name in ["F2", "F2eps", "F4"] {
            let r = ring(name);
            let sp = sp_closure(&r, 2);
            let whole = whole_subring(&r);
            for lam in enumerate_form_params(&r, &whole) {
                if !lam.contains_coords(r.unit_coords()) {
                    continue;
                }
                let lam_size = lam.len();
                let fr = FormRing::new(whole, lam).expect("parameter within the whole ring");
                let gens: Vec<SpMatrix> =
                    ep_generators(&r, &fr, 2).into_iter().map(|g| g.mat).collect();
                let ep = GroupClosure::closure(&r, 2, &gens, DEFAULT_CAP)
                    .map_err(|e| e.to_string())?;
                if !ep.is_complete() {
                    return Err(format!("elementary closure over {name} hit the cap"));
                }
                instances += 1;
                let mut set_count = 0usize;
                let mut set_only = 0usize;
                let mut closure_only = 0usize;
                let mut witness: Option<SpMatrix> = None;
                for i in 0..sp.len() as u32 {
                    let g = sp.element(&r, i);
                    let in_set = in_bak_sp(&r, &fr, &g);
                    let in_ep = ep.contains(&r, &g) == Membership::In;
                    set_count += in_set as usize;
                    if in_set && !in_ep {
                        set_only += 1;
                        if witness.is_none() {
                            witness = Some(g);
                        }
                    } else if in_ep && !in_set {
                        closure_only += 1;
                    }
                }
                if set_only != 0 || closure_only != 0 {
                    let shown = witness
                        .map(|g| render_rows(&r, &g))
                        .unwrap_or_else(|| "closure-only mismatch".into());
                    failures.push(format!(
                        "over {name} with a {lam_size}-element parameter the criterion set has \
                         {set_count} members vs closure {} (set-only {set_only}, closure-only \
                         {closure_only}); first set-only element: {shown}",
                        ep.len()
                    ));
                } else if set_count != ep.len() {
                    failures.push(format!(
                        "over {name}: counted {set_count} members but the closure has {}",
                        ep.len()
                    ));
                }
            }
        }
        if instances != 4 {
            return Err(format!("expected 4 form rings with 1 in the parameter, saw {instances}"));
        }
        if !failures.is_empty() {
            return Err(failures.join("; "));
        }
        Ok("block criterion matches the elementary closure for 4 form rings at rank 2".into())
    });
}

fn render_rows(r: &Ring, g: &SpMatrix) -> String {
    let d = 2 * g.n();
    let rows: Vec<String> = (0..d)
        .map(|i| {
            let cells: Vec<String> =
                (0..d).map(|j| r.fmt_coords(g.coords()[i * d + j])).collect();
            format!("[{}]", cells.join(" "))
        })
        .collect();
    rows.join(" ")
}

#[test]
fn accept_04_normalizer_structure() {
    gate(4, "normalizer-structure", || {
        // (ambient, subring generators, expected frozen orders)
        let instances: [(&str, &[&str], Option<(usize, usize, usize)>); 3] = [
            ("F2eps", &[], Some((737_280, 1_440, 720))),
            ("F4", &[], None),
            ("F2eps", &["eps"], None),
        ];
        let mut detail = Vec::new();
        for (name, sub_gens, frozen) in instances {
            let r = ring(name);
            let sub = subring_generated(
                &r,
                sub_gens.iter().map(|s| r.parse_elt(s).expect("catalog element")),
            );
            let lam = form_param_generated(&r, &sub, [r.one()]);
            let fr = FormRing::new(sub, lam).expect("parameter within subring");
            let rep = verify_normalizer_structure(&r, &fr, 2, DEFAULT_CAP, 42)
                .map_err(|e| e.to_string())?;
            if !rep.ok() {
                return Err(format!("structure checks failed over {name}: {rep:?}"));
            }
            if rep.normalizer_order % rep.bak_order != 0 {
                return Err(format!(
                    "normalizer order {} not divisible by the group order {} over {name}",
                    rep.normalizer_order, rep.bak_order
                ));
            }
            if let Some((sp, nm, bak)) = frozen {
                if (rep.sp_order, rep.normalizer_order, rep.bak_order) != (sp, nm, bak) {
                    return Err(format!(
                        "orders over {name}: got {}/{}/{}, expected {sp}/{nm}/{bak}",
                        rep.sp_order, rep.normalizer_order, rep.bak_order
                    ));
                }
            }
            detail.push(format!(
                "{name}: |Sp|={} |N|={} |G|={}",
                rep.sp_order, rep.normalizer_order, rep.bak_order
            ));
        }
        Ok(detail.join("; "))
    });
}

#[test]
fn accept_05_classifier_fixed_points() {
    gate(5, "classifier-fixed-points", || {
        // every intermediate pair with 1 in the parameter: three over F2eps,
        // two over F4
        struct Instance {
            name: &'static str,
            sub_gens: &'static [&'static str],
            lam_gens: &'static [&'static str],
            expect_unique: Option<usize>,
        }
        let instances = [
            Instance { name: "F2eps", sub_gens: &[], lam_gens: &[], expect_unique: Some(3) },
            Instance { name: "F2eps", sub_gens: &["eps"], lam_gens: &[], expect_unique: None },
            Instance { name: "F2eps", sub_gens: &["eps"], lam_gens: &["eps"], expect_unique: None },
            Instance { name: "F4", sub_gens: &[], lam_gens: &[], expect_unique: Some(2) },
            Instance { name: "F4", sub_gens: &["x"], lam_gens: &["x"], expect_unique: None },
        ];
        let mut certified = 0usize;
        for inst in &instances {
            let shared = (inst.name == "F2eps").then(|| &*F2EPS_N3);
            let owned = (shared.is_none()).then(|| ring(inst.name));
            let r: &Ring = shared.map(|s| &s.ring).or(owned.as_ref()).unwrap();
            let sub = subring_generated(
                r,
                inst.sub_gens.iter().map(|s| r.parse_elt(s).expect("catalog element")),
            );
            let mut lam_gens = vec![r.one()];
            lam_gens.extend(inst.lam_gens.iter().map(|s| r.parse_elt(s).expect("element")));
            let lam = form_param_generated(r, &sub, lam_gens);
            let fr = FormRing::new(sub, lam).expect("parameter within subring");
            let gens = ep_generators(r, &fr, 3);
            let extras: Vec<SpMatrix> = gens
                .iter()
                .filter(|g| g.scalar.coords() != r.unit_coords())
                .map(|g| g.mat.clone())
                .collect();
            let label =
                format!("{} (|R|={}, |L|={})", inst.name, fr.r().len(), fr.lambda().len());
            let input = ClassifyInput { ring: r, n: 3, k: prime(r), extras };
            let opts = ClassifyOptions {
                harvest_depth: 3,
                max_depth: 6,
                uniqueness_cap: inst.expect_unique.map(|_| DEFAULT_CAP),
                base: shared.map(|s| &s.base),
            };
            let out = classify(&input, &opts).map_err(|e| format!("{label}: {e}"))?;
            if out.status != ClassifyStatus::Certified {
                return Err(format!("{label}: not certified ({:?})", out.status));
            }
            if out.r.elems() != fr.r().elems() || &out.lambda_elems != fr.lambda().elems() {
                return Err(format!("{label}: certified a different pair"));
            }
            if out.lower.len() != gens.len() {
                return Err(format!(
                    "{label}: {} certificates for {} generators",
                    out.lower.len(),
                    gens.len()
                ));
            }
            if !out.upper.iter().all(|&b| b) {
                return Err(format!("{label}: a generator failed the normalizer check"));
            }
            if let Some(want) = inst.expect_unique {
                match out.uniqueness {
                    UniquenessCheck::Verified { pairs_tested } if pairs_tested == want => {}
                    other => return Err(format!("{label}: uniqueness {other:?}, want {want}")),
                }
            }
            certified += 1;
        }
        Ok(format!("{certified} fixed points certified with complete certificates"))
    });
}

#[test]
fn accept_06_random_subgroup_trials() {
    gate(6, "random-subgroup-trials", || {
        let shared = &*F2EPS_N3;
        let r = &shared.ring;
        let gens = full_gens(r, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(601);
        let mut rechecked = 0usize;
        for trial in 0..100 {
            let count = rng.gen_range(1..=2);
            let extras: Vec<SpMatrix> =
                (0..count).map(|_| random_product(r, &gens, 20, &mut rng)).collect();
            let input = ClassifyInput { ring: r, n: 3, k: prime(r), extras: extras.clone() };
            let opts = ClassifyOptions {
                harvest_depth: 3,
                max_depth: 6,
                uniqueness_cap: None,
                base: Some(&shared.base),
            };
            let out = classify(&input, &opts).map_err(|e| format!("trial {trial}: {e}"))?;
            if out.status != ClassifyStatus::Certified {
                return Err(format!("trial {trial}: inconclusive ({:?})", out.status));
            }
            if !out.lambda_elems.contains(r.unit_coords())
                || !out.lambda_elems.is_subset(out.r.elems())
            {
                return Err(format!("trial {trial}: certified pair is not a form ring over K"));
            }
            // package the run exactly as the tool does and re-verify offline
            let config = Config {
                ring: RingSpec::of(r),
                n: 3,
                k_gens: vec![],
                extras: extras.iter().map(|g| MatrixSpec::of(r, g)).collect(),
                cap: DEFAULT_CAP,
                harvest_depth: 3,
                max_depth: 6,
                seed: 0,
                trials: 0,
            };
            let outcome = Outcome::Classify {
                status: "certified".into(),
                reason: String::new(),
                exploratory: out.exploratory,
                depth_used: out.depth_used,
                route_c: format!("{:?}", out.route_c),
                r_elements: elements_as_bitstrings(r, out.r.elems()),
                lambda_elements: elements_as_bitstrings(r, &out.lambda_elems),
                lower_certificates: out
                    .lower
                    .iter()
                    .map(|c| CertEntry {
                        root: c.root.render(),
                        scalar: r.bitstr(c.scalar),
                        word: c.word.0.clone(),
                    })
                    .collect(),
                upper_checks: out.upper.clone(),
                uniqueness: format!("{:?}", out.uniqueness),
                diagnostics: out.diagnostics.clone(),
            };
            let report = Report::new("classify".into(), config, outcome);
            let checks = recheck(&report);
            if let Some(bad) = checks.iter().find(|c| c.status == "fail") {
                return Err(format!("trial {trial}: recheck failed {}: {}", bad.name, bad.detail));
            }
            rechecked += 1;
        }
        Ok(format!("100 random subgroups certified; {rechecked} reports re-verified offline"))
    });
}

#[test]
fn accept_07_normal_closure_generates() {
    gate(7, "normal-closure-generates", || {
        let amb = &*F2_N3;
        let r = &amb.ring;
        let conj = full_gens(r, 3);
        for (label, seed) in [
            ("short", transvection(r, 3, 1, 2, r.one())),
            ("long", transvection(r, 3, 1, -1, r.one())),
        ] {
            let nc = GroupClosure::normal_closure(r, 3, &[seed], &conj, DEFAULT_CAP)
                .map_err(|e| e.to_string())?;
            if !nc.is_complete() || nc.len() != amb.sp.len() {
                return Err(format!(
                    "{label} seed: normal closure order {} vs {}",
                    nc.len(),
                    amb.sp.len()
                ));
            }
        }
        Ok("both single-transvection normal closures regenerate all 1451520 elements".into())
    });
}

#[test]
fn accept_08_commutation_law_trials() {
    gate(8, "commutation-law-trials", || {
        let r = ring("F2eps");
        let eps = r
            .nilradical()
            .iter()
            .find(|&c| c != 0)
            .map(|c| r.elt(c))
            .expect("dual numbers have a nilpotent");
        let h = transvection(&r, 3, 1, 2, eps);
        let alpha = Root::long(1, 1);
        let gens = full_gens(&r, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..1000 {
            let g = random_product(&r, &gens, 20, &mut rng);
            if !conjugated_root_subgroups_commute(&r, &g, &h, &alpha) {
                return Err(format!("law violated at trial {trial}"));
            }
        }
        let violations = sweep_commutation_law(&r, 3, 1000, 8);
        if violations != 0 {
            return Err(format!("sweep over random short letters found {violations} violations"));
        }
        Ok("1000 fixed-letter trials and 1000 swept trials, zero violations".into())
    });
}

#[test]
fn accept_09_line_generation() {
    gate(9, "line-generation", || {
        let r2 = ring("F2");
        let rep = verify_line_generation(&r2, &FormRing::full(&r2), 3, DEFAULT_CAP)
            .map_err(|e| e.to_string())?;
        if !rep.equal || rep.full_order != 1_451_520 {
            return Err(format!(
                "rank 3 over F2: line subgroup {} vs full {}",
                rep.restricted_order, rep.full_order
            ));
        }
        let re = ring("F2eps");
        let whole = whole_subring(&re);
        let lam = form_param_generated(&re, &whole, [re.one()]);
        let fr = FormRing::new(whole, lam).expect("parameter within the whole ring");
        let rep2 =
            verify_line_generation(&re, &fr, 2, DEFAULT_CAP).map_err(|e| e.to_string())?;
        if !rep2.equal {
            return Err(format!(
                "rank 2 over F2eps: line subgroup {} vs full {}",
                rep2.restricted_order, rep2.full_order
            ));
        }
        Ok(format!(
            "orders {} (rank 3 over F2) and {} (rank 2 over F2eps) reached from the first line",
            rep.full_order, rep2.full_order
        ))
    });
}

#[test]
fn accept_10_normalizer_oracle_agreement() {
    gate(10, "normalizer-oracle-agreement", || {
        let instances: [(&str, &[&str], &[&str]); 8] = [
            ("F2", &[], &[]),
            ("F2eps", &[], &[]),
            ("F2eps", &["eps"], &[]),
            ("F2eps", &["eps"], &["eps"]),
            ("F4", &[], &[]),
            ("F4", &["x"], &["x"]),
            ("F2xF2", &[], &[]),
            ("F2xF2", &["a"], &["a"]),
        ];
        let mut checked = 0usize;
        for (name, sub_gens, lam_gens) in instances {
            let r = ring(name);
            let sub = subring_generated(
                &r,
                sub_gens.iter().map(|s| r.parse_elt(s).expect("catalog element")),
            );
            let mut gens = vec![r.one()];
            gens.extend(lam_gens.iter().map(|s| r.parse_elt(s).expect("element")));
            let lam = form_param_generated(&r, &sub, gens);
            let fr = FormRing::new(sub, lam).expect("parameter within subring");
            let rep = verify_normalizes_against_enumeration(&r, &fr, 2, DEFAULT_CAP)
                .map_err(|e| format!("{name}: {e}"))?;
            if rep.disagreements != 0 || rep.checked != rep.sp_order {
                return Err(format!(
                    "{name}: {} disagreements over {} elements",
                    rep.disagreements, rep.checked
                ));
            }
            checked += rep.checked;
        }
        // the triple dual numbers overflow any feasible enumeration at rank
        // 2; the oracle comparison must refuse rather than sample
        let big = ring("F2t3");
        match verify_normalizes_against_enumeration(&big, &FormRing::full(&big), 2, 300_000) {
            Err(VerifyError::Capacity { .. }) => {}
            other => return Err(format!("F2t3 probe should hit capacity, got {other:?}")),
        }
        Ok(format!(
            "{checked} elements agree across 8 form rings; F2t3 reports capacity as expected"
        ))
    });
}
