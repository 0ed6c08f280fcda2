//! Command line front end: catalog inspection, subgroup enumeration,
//! classification with certificates, property suites, and offline report
//! re-verification.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 classification was
//! inconclusive, 3 an enumeration hit its cap, 4 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::Catalog;
use crate::engine::{eval_word, GroupClosure, DEFAULT_CAP};
use crate::matrix::{ep_generators, transvection, x_root, SpMatrix};
use crate::report::{
    base_subring, elements_as_bitstrings, recheck, CertEntry, CheckResult, Config, MatrixSpec,
    Outcome, Report, RingSpec,
};
use crate::ring::{enumerate_form_params, enumerate_subrings, form_param_generated, Ring};
use crate::roots::{chevalley_commutator, Root};
use crate::sandwich::{
    classify, ClassifyInput, ClassifyOptions, ClassifyStatus, LetterCtx, RouteC, SandwichError,
    UniquenessCheck, DEFAULT_HARVEST_DEPTH, DEFAULT_MAX_DEPTH,
};
use crate::verify::{
    search_long_probe_failure, sweep_commutation_law, verify_line_generation,
    verify_normalizer_structure, VerifyError,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "sp2",
    version,
    about = "Symplectic groups over finite characteristic-2 rings: enumeration, \
             certified classification of intermediate subgroups, and property suites",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Re-verify the certificates in a previously written report file.
    #[arg(long, value_name = "REPORT")]
    recheck: Option<String>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect the ring catalog.
    Ring {
        #[command(subcommand)]
        what: RingCmd,
    },
    /// Enumerate the subgroup generated by the configured letters.
    Closure(ClosureArgs),
    /// Find and certify the coefficient pair of the configured subgroup.
    Classify(ClassifyArgs),
    /// Run enumeration-backed property suites.
    Verify(VerifyArgs),
    /// Re-verify the certificates in a report file.
    Recheck {
        file: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum RingCmd {
    /// List the available rings.
    List,
    /// Print basis, multiplication table, subrings, and form parameters.
    Describe { name: String },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Commutator,
    Normalizer,
    Identities,
    All,
}

#[derive(Args)]
struct CommonArgs {
    /// Catalog ring to work over.
    #[arg(long)]
    ring: String,
    /// Rank: matrices are 2n by 2n.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Base subring generators, comma-separated element expressions.
    #[arg(long, value_name = "ELTS", default_value = "")]
    k_gens: String,
    /// Extra generator: a '*'-joined product of transvections T(i,j,expr).
    /// May be repeated.
    #[arg(long, value_name = "SPEC")]
    extra: Vec<String>,
    /// Append this many seeded random extra generators.
    #[arg(long, value_name = "COUNT", default_value_t = 0)]
    random_extras: usize,
    /// Enumeration cap.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Attach wall-clock timings to the report (breaks byte
    /// reproducibility).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ClosureArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Use only the extra generators, without the elementary letters.
    #[arg(long)]
    only_extras: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Maximum search depth before reporting inconclusive.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    depth: usize,
    /// Depth of the initial harvesting rounds.
    #[arg(long, default_value_t = DEFAULT_HARVEST_DEPTH)]
    harvest_depth: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Trial count for randomized sweeps.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Form parameter generators (within the base subring), comma-separated;
    /// the unit is always included.
    #[arg(long, value_name = "ELTS", default_value = "")]
    lambda_gens: String,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(path) = &cli.recheck {
        return cmd_recheck(path, Format::Text);
    }
    match cli.cmd {
        Some(Cmd::Ring { what }) => cmd_ring(what),
        Some(Cmd::Closure(args)) => cmd_closure(args),
        Some(Cmd::Classify(args)) => cmd_classify(args),
        Some(Cmd::Verify(args)) => cmd_verify(args),
        Some(Cmd::Recheck { file, format }) => cmd_recheck(&file, format),
        None => {
            eprintln!("a subcommand or --recheck is required; see --help");
            EXIT_USAGE
        }
    }
}

fn load_catalog() -> Result<Catalog, String> {
    let mut cat = Catalog::default_catalog().map_err(|e| e.to_string())?;
    if let Ok(path) = std::env::var("SP2_CATALOG") {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read catalog file {path}: {e}"))?;
        cat.extend_from(&text).map_err(|e| format!("catalog file {path}: {e}"))?;
    }
    Ok(cat)
}

fn usage(msg: &str) -> i32 {
    eprintln!("{msg}");
    EXIT_USAGE
}

struct Resolved {
    ring: Ring,
    n: usize,
    k_gens_bits: Vec<String>,
    extras: Vec<SpMatrix>,
    extra_specs: Vec<MatrixSpec>,
}

fn resolve(common: &CommonArgs) -> Result<Resolved, String> {
    let cat = load_catalog()?;
    let ring = cat
        .take(&common.ring)
        .ok_or_else(|| format!("unknown ring {} (try `sp2 ring list`)", common.ring))?;
    let n = common.n;
    if !(2..=4).contains(&n) {
        return Err(format!("rank must be 2, 3, or 4, got {n}"));
    }
    let mut k_gens_bits = Vec::new();
    for tok in common.k_gens.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let e = ring.parse_elt(tok).map_err(|e| format!("--k-gens: {e}"))?;
        k_gens_bits.push(ring.bitstr(e.coords()));
    }
    let mut extras = Vec::new();
    for spec in &common.extra {
        extras.push(parse_extra(&ring, n, spec).map_err(|e| format!("--extra {spec:?}: {e}"))?);
    }
    if common.random_extras > 0 {
        let full = crate::ring::FormRing::full(&ring);
        let letters: Vec<SpMatrix> =
            ep_generators(&ring, &full, n).into_iter().map(|g| g.mat).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
        for _ in 0..common.random_extras {
            let mut g = SpMatrix::identity(&ring, n);
            for _ in 0..20 {
                g = g.mul(&ring, &letters[rng.gen_range(0..letters.len())]);
            }
            extras.push(g);
        }
    }
    let extra_specs = extras.iter().map(|g| MatrixSpec::of(&ring, g)).collect();
    Ok(Resolved { ring, n, k_gens_bits, extras, extra_specs })
}

/// Parses "T(i,j,expr)" factors joined by '*' into one matrix.
fn parse_extra(ring: &Ring, n: usize, spec: &str) -> Result<SpMatrix, String> {
    let mut g = SpMatrix::identity(ring, n);
    for tok in spec.split('*') {
        let tok = tok.trim();
        let inner = tok
            .strip_prefix("T(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| format!("expected T(i,j,expr), got {tok:?}"))?;
        let parts: Vec<&str> = inner.splitn(3, ',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three arguments in {tok:?}"));
        }
        let i: i8 = parts[0].parse().map_err(|_| format!("bad index {:?}", parts[0]))?;
        let j: i8 = parts[1].parse().map_err(|_| format!("bad index {:?}", parts[1]))?;
        let max = n as i8;
        for idx in [i, j] {
            if idx == 0 || idx.abs() > max {
                return Err(format!("index {idx} outside 1..={max} and -{max}..=-1"));
            }
        }
        if i == j {
            return Err("transvection indices must differ".into());
        }
        let xi = ring.parse_elt(parts[2])?;
        g = g.mul(ring, &transvection(ring, n, i, j, xi));
    }
    Ok(g)
}

fn make_config(res: &Resolved, common: &CommonArgs, harvest: usize, depth: usize, trials: usize) -> Config {
    Config {
        ring: RingSpec::of(&res.ring),
        n: res.n,
        k_gens: res.k_gens_bits.clone(),
        extras: res.extra_specs.clone(),
        cap: common.cap,
        harvest_depth: harvest,
        max_depth: depth,
        seed: common.seed,
        trials,
    }
}

fn emit(report: &Report, format: Format, text: String) {
    match format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{text}"),
    }
}

fn fmt_set(ring: &Ring, elems: impl Iterator<Item = u8>) -> String {
    let names: Vec<String> = elems.map(|c| ring.fmt_coords(c)).collect();
    format!("{{{}}}", names.join(", "))
}

fn cmd_ring(what: RingCmd) -> i32 {
    let cat = match load_catalog() {
        Ok(c) => c,
        Err(e) => return usage(&e),
    };
    match what {
        RingCmd::List => {
            for r in cat.rings() {
                println!("{}  dim {}  {} elements", r.name(), r.dim(), r.card());
            }
            EXIT_PASS
        }
        RingCmd::Describe { name } => {
            let Some(r) = cat.get(&name) else {
                return usage(&format!("unknown ring {name} (try `sp2 ring list`)"));
            };
            println!("ring {}", r.name());
            println!("  elements: {}", r.card());
            println!("  basis: {}", r.basis_names().join(", "));
            println!("  unit: {}", r.fmt_coords(r.unit_coords()));
            let names = r.basis_names();
            let mut lines = Vec::new();
            for a in 0..r.dim() {
                for b in a..r.dim() {
                    let prod = r.basis_mul()[a * r.dim() + b];
                    lines.push(format!("{}*{} = {}", names[a], names[b], r.fmt_coords(prod)));
                }
            }
            println!("  multiplication: {}", lines.join(", "));
            let nil = r.nilradical();
            println!("  nilradical: {}", fmt_set(r, nil.iter()));
            let subs = enumerate_subrings(r);
            println!("  subrings: {}", subs.len());
            for s in &subs {
                println!("    {}", fmt_set(r, s.elems().iter()));
            }
            let params = enumerate_form_params(r, &crate::ring::whole_subring(r));
            println!("  form parameters of the whole ring: {}", params.len());
            for p in &params {
                println!("    {}", fmt_set(r, p.elems().iter()));
            }
            EXIT_PASS
        }
    }
}

fn cmd_closure(args: ClosureArgs) -> i32 {
    let res = match resolve(&args.common) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    let ring = &res.ring;
    let started = Instant::now();
    let k = match base_subring(ring, &res.k_gens_bits) {
        Ok(k) => k,
        Err(e) => return usage(&e),
    };
    let letters: Vec<SpMatrix> = if args.only_extras {
        res.extras.clone()
    } else {
        LetterCtx::new(ring, res.n, k, &res.extras).letters().to_vec()
    };
    let closure = match GroupClosure::closure(ring, res.n, &letters, args.common.cap) {
        Ok(c) => c,
        Err(e) => return usage(&e.to_string()),
    };
    let complete = closure.is_complete();

    // witness sample: up to 1000 evenly spread elements
    let len = closure.len();
    let step = (len / 1000).max(1);
    let mut witness_checked = 0usize;
    let mut witness_max_len = 0usize;
    let mut witness_all_evaluate = true;
    for i in (0..len).step_by(step) {
        let g = closure.element(ring, i as u32);
        match closure.witness(&g) {
            Some(w) => {
                witness_checked += 1;
                witness_max_len = witness_max_len.max(w.len());
                if eval_word(ring, res.n, &letters, &w) != g {
                    witness_all_evaluate = false;
                }
            }
            None => witness_all_evaluate = false,
        }
    }

    let config = make_config(&res, &args.common, 0, 0, 0);
    let outcome = Outcome::Closure {
        order: len,
        complete,
        witness_checked,
        witness_max_len,
        witness_all_evaluate,
    };
    let mut report = Report::new(
        format!("closure --ring {} --n {}", ring.name(), res.n),
        config,
        outcome,
    );
    if args.common.timings {
        let mut t = BTreeMap::new();
        t.insert("total".to_string(), started.elapsed().as_millis() as u64);
        report.timings_ms = Some(t);
    }
    let mut text = String::new();
    text.push_str(&format!(
        "closure over {}, n={} ({} letters)\n",
        ring.name(),
        res.n,
        letters.len()
    ));
    text.push_str(&format!(
        "order: {}{}\n",
        len,
        if complete { "" } else { " (cap exceeded, partial)" }
    ));
    text.push_str(&format!(
        "witnesses: {witness_checked} sampled, max length {witness_max_len}, {}\n",
        if witness_all_evaluate { "all evaluate" } else { "EVALUATION FAILURE" }
    ));
    emit(&report, args.common.format, text);
    if !witness_all_evaluate {
        return EXIT_CHECK_FAILURE;
    }
    if !complete {
        return EXIT_CAPACITY;
    }
    EXIT_PASS
}

fn cmd_classify(args: ClassifyArgs) -> i32 {
    let res = match resolve(&args.common) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    let ring = &res.ring;
    let started = Instant::now();
    let k = match base_subring(ring, &res.k_gens_bits) {
        Ok(k) => k,
        Err(e) => return usage(&e),
    };
    let input = ClassifyInput { ring, n: res.n, k, extras: res.extras.clone() };
    let opts = ClassifyOptions {
        harvest_depth: args.harvest_depth,
        max_depth: args.depth,
        uniqueness_cap: Some(args.common.cap),
        base: None,
    };
    let out = match classify(&input, &opts) {
        Ok(o) => o,
        Err(SandwichError::RankTooSmall(n)) => {
            return usage(&format!("classification needs rank at least 3, got {n}"))
        }
        Err(e) => {
            eprintln!("classification failed: {e}");
            return EXIT_CHECK_FAILURE;
        }
    };

    let (status, reason) = match &out.status {
        ClassifyStatus::Certified => ("certified".to_string(), String::new()),
        ClassifyStatus::Inconclusive { reason } => ("inconclusive".to_string(), reason.clone()),
    };
    let route_c = match &out.route_c {
        RouteC::Applied { rank } => format!("applied, kernel rank {rank}"),
        RouteC::NotApplicable(why) => format!("not applicable: {why}"),
    };
    let uniqueness = match &out.uniqueness {
        UniquenessCheck::Verified { pairs_tested } => {
            format!("verified against {pairs_tested} candidate pairs")
        }
        UniquenessCheck::Skipped { reason } => format!("skipped: {reason}"),
    };
    let config = make_config(&res, &args.common, args.harvest_depth, args.depth, 0);
    let outcome = Outcome::Classify {
        status: status.clone(),
        reason: reason.clone(),
        exploratory: out.exploratory,
        depth_used: out.depth_used,
        route_c: route_c.clone(),
        r_elements: elements_as_bitstrings(ring, out.r.elems()),
        lambda_elements: elements_as_bitstrings(ring, &out.lambda_elems),
        lower_certificates: out
            .lower
            .iter()
            .map(|c| CertEntry {
                root: c.root.render(),
                scalar: ring.bitstr(c.scalar),
                word: c.word.0.clone(),
            })
            .collect(),
        upper_checks: out.upper.clone(),
        uniqueness: uniqueness.clone(),
        diagnostics: out.diagnostics.clone(),
    };
    let mut report = Report::new(
        format!("classify --ring {} --n {}", ring.name(), res.n),
        config,
        outcome,
    );
    if args.common.timings {
        let mut t = BTreeMap::new();
        t.insert("total".to_string(), started.elapsed().as_millis() as u64);
        report.timings_ms = Some(t);
    }

    let mut text = String::new();
    text.push_str(&format!(
        "classify over {}, n={} ({} extra generator{}{})\n",
        ring.name(),
        res.n,
        res.extras.len(),
        if res.extras.len() == 1 { "" } else { "s" },
        if out.exploratory { "; rank 2 is exploratory" } else { "" }
    ));
    text.push_str(&format!(
        "status: {status}{}{}\n",
        if reason.is_empty() { String::new() } else { format!(" ({reason})") },
        format!(" at depth {}", out.depth_used)
    ));
    text.push_str(&format!("ring levels: {}\n", fmt_set(ring, out.r.elems().iter())));
    text.push_str(&format!("parameter levels: {}\n", fmt_set(ring, out.lambda_elems.iter())));
    text.push_str(&format!("congruence pass: {route_c}\n"));
    text.push_str(&format!(
        "lower certificates: {} (every elementary generator of the pair)\n",
        out.lower.len()
    ));
    text.push_str(&format!(
        "normalizer checks: {} generators, {}\n",
        out.upper.len(),
        if out.upper.iter().all(|&b| b) { "all pass" } else { "FAILURES" }
    ));
    text.push_str(&format!("uniqueness: {uniqueness}\n"));
    for d in &out.diagnostics {
        text.push_str(&format!("  note: {d}\n"));
    }
    emit(&report, args.common.format, text);
    match out.status {
        ClassifyStatus::Certified => EXIT_PASS,
        ClassifyStatus::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    let res = match resolve(&args.common) {
        Ok(r) => r,
        Err(e) => return usage(&e),
    };
    let ring = &res.ring;
    let started = Instant::now();
    let mut checks: Vec<CheckResult> = Vec::new();

    if matches!(args.suite, Suite::Commutator | Suite::All) {
        checks.push(commutator_check(ring, res.n));
    }
    if matches!(args.suite, Suite::Normalizer | Suite::All) {
        match normalizer_checks(ring, &args, &res) {
            Ok(mut c) => checks.append(&mut c),
            Err(e) => return usage(&e),
        }
    }
    if matches!(args.suite, Suite::Identities | Suite::All) {
        match identity_checks(ring, &args, &res) {
            Ok(mut c) => checks.append(&mut c),
            Err(e) => return usage(&e),
        }
    }

    let suite_name = match args.suite {
        Suite::Commutator => "commutator",
        Suite::Normalizer => "normalizer",
        Suite::Identities => "identities",
        Suite::All => "all",
    };
    let config = make_config(&res, &args.common, 0, 0, args.trials);
    let outcome = Outcome::Verify { suite: suite_name.into(), checks: checks.clone() };
    let mut report = Report::new(
        format!("verify --suite {suite_name} --ring {} --n {}", ring.name(), res.n),
        config,
        outcome,
    );
    if args.common.timings {
        let mut t = BTreeMap::new();
        t.insert("total".to_string(), started.elapsed().as_millis() as u64);
        report.timings_ms = Some(t);
    }

    let failed = checks.iter().any(|c| c.status == "fail");
    let mut text = format!("suite {suite_name} over {}, n={}\n", ring.name(), res.n);
    for c in &checks {
        text.push_str(&format!("  {}: {} ({})\n", c.name, c.status.to_uppercase(), c.detail));
    }
    text.push_str(&format!("overall: {}\n", if failed { "FAIL" } else { "PASS" }));
    emit(&report, args.common.format, text);
    if failed {
        EXIT_CHECK_FAILURE
    } else {
        EXIT_PASS
    }
}

/// Exhaustive comparison of the root-level commutator formula against
/// matrix arithmetic, over every root pair and every scalar pair.
fn commutator_check(ring: &Ring, n: usize) -> CheckResult {
    let roots = Root::all(n);
    let mut evaluations = 0usize;
    let mut proportional = 0usize;
    for alpha in &roots {
        for beta in &roots {
            if beta == alpha || *beta == alpha.neg() {
                if chevalley_commutator(ring, alpha, ring.one(), beta, ring.one()).is_ok() {
                    return CheckResult::fail(
                        "commutator-formula",
                        format!(
                            "proportional pair {} / {} did not error",
                            alpha.render(),
                            beta.render()
                        ),
                    );
                }
                proportional += 1;
                continue;
            }
            for s in ring.elements() {
                for t in ring.elements() {
                    let factors = match chevalley_commutator(ring, alpha, s, beta, t) {
                        Ok(f) => f,
                        Err(e) => {
                            return CheckResult::fail(
                                "commutator-formula",
                                format!("{} / {}: {e}", alpha.render(), beta.render()),
                            )
                        }
                    };
                    let mut prod = SpMatrix::identity(ring, n);
                    for (root, scalar) in &factors {
                        prod = prod.mul(ring, &x_root(ring, n, root, *scalar));
                    }
                    let a = x_root(ring, n, alpha, s);
                    let b = x_root(ring, n, beta, t);
                    let direct = a
                        .mul(ring, &b)
                        .mul(ring, &a.inverse_symplectic())
                        .mul(ring, &b.inverse_symplectic());
                    evaluations += 1;
                    if prod != direct {
                        return CheckResult::fail(
                            "commutator-formula",
                            format!(
                                "mismatch at [{}({}), {}({})]",
                                alpha.render(),
                                ring.fmt_elt(s),
                                beta.render(),
                                ring.fmt_elt(t)
                            ),
                        );
                    }
                }
            }
        }
    }
    CheckResult::pass(
        "commutator-formula",
        format!("{evaluations} evaluations, {proportional} proportional pairs rejected"),
    )
}

fn build_form_ring(
    ring: &Ring,
    k_gens_bits: &[String],
    lambda_gens: &str,
) -> Result<crate::ring::FormRing, String> {
    let sub = base_subring(ring, k_gens_bits)?;
    let mut lam_gens = vec![ring.one()];
    for tok in lambda_gens.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let e = ring.parse_elt(tok).map_err(|e| format!("--lambda-gens: {e}"))?;
        if !sub.contains(e) {
            return Err(format!(
                "--lambda-gens: {} lies outside the base subring",
                ring.fmt_elt(e)
            ));
        }
        lam_gens.push(e);
    }
    let lam = form_param_generated(ring, &sub, lam_gens);
    crate::ring::FormRing::new(sub, lam).map_err(|e| e.to_string())
}

fn normalizer_checks(
    ring: &Ring,
    args: &VerifyArgs,
    _res: &Resolved,
) -> Result<Vec<CheckResult>, String> {
    let fr = build_form_ring(ring, &_res.k_gens_bits, &args.lambda_gens)?;
    let mut checks = Vec::new();
    match verify_normalizer_structure(ring, &fr, _res.n, args.common.cap, args.common.seed) {
        Ok(rep) => {
            let ctx = format!(
                "|Sp|={}, |N|={}, |Sp(R,L)|={}",
                rep.sp_order, rep.normalizer_order, rep.bak_order
            );
            checks.push(if rep.intersection_matches {
                CheckResult::pass("normalizer-intersection", ctx.clone())
            } else {
                CheckResult::fail("normalizer-intersection", ctx.clone())
            });
            let c2 = format!(
                "{} conjugations{}",
                rep.conjugation_checks,
                if rep.conjugation_full_sweep { ", full sweep" } else { ", sampled" }
            );
            checks.push(if rep.conjugation_stable {
                CheckResult::pass("normalizer-conjugation", c2)
            } else {
                CheckResult::fail("normalizer-conjugation", c2)
            });
            let c3 = format!(
                "{} commutator pairs{}",
                rep.commutator_pairs,
                if rep.commutator_full_sweep { ", full sweep" } else { ", sampled" }
            );
            checks.push(if rep.quotient_abelian {
                CheckResult::pass("normalizer-quotient-abelian", c3)
            } else {
                CheckResult::fail("normalizer-quotient-abelian", c3)
            });
        }
        Err(VerifyError::Capacity { context, cap }) => {
            for name in
                ["normalizer-intersection", "normalizer-conjugation", "normalizer-quotient-abelian"]
            {
                checks.push(CheckResult::skip(
                    name,
                    format!("{context} exceeds the cap of {cap}"),
                ));
            }
        }
        Err(e) => return Err(e.to_string()),
    }
    Ok(checks)
}

fn identity_checks(
    ring: &Ring,
    args: &VerifyArgs,
    res: &Resolved,
) -> Result<Vec<CheckResult>, String> {
    let mut checks = Vec::new();
    let n = res.n;

    let violations = sweep_commutation_law(ring, n, args.trials, args.common.seed);
    checks.push(if violations == 0 {
        CheckResult::pass(
            "conjugated-commutation",
            format!("{} random conjugators, exhaustive scalars each", args.trials),
        )
    } else {
        CheckResult::fail(
            "conjugated-commutation",
            format!("{violations} violations in {} trials", args.trials),
        )
    });

    let probe = search_long_probe_failure(
        ring,
        n,
        &Root::long(1, 1),
        args.trials,
        args.common.seed,
    );
    checks.push(CheckResult::pass(
        "long-probe-search",
        match &probe.counterexample {
            Some(_) => format!(
                "long conjugator breaks commutation after {} trial{} (expected; reported, not asserted)",
                probe.trials,
                if probe.trials == 1 { "" } else { "s" }
            ),
            None => format!("no failure found in {} trials (nothing is claimed either way)", probe.trials),
        },
    ));

    let fr = build_form_ring(ring, &res.k_gens_bits, &args.lambda_gens)?;
    match verify_line_generation(ring, &fr, n, args.common.cap) {
        Ok(rep) => {
            let detail = format!(
                "restricted order {}, full order {}",
                rep.restricted_order, rep.full_order
            );
            checks.push(if rep.equal {
                CheckResult::pass("line-generation", detail)
            } else {
                CheckResult::fail("line-generation", detail)
            });
        }
        Err(VerifyError::Capacity { context, cap }) => {
            checks.push(CheckResult::skip(
                "line-generation",
                format!("{context} exceeds the cap of {cap}"),
            ));
        }
        Err(e) => return Err(e.to_string()),
    }
    Ok(checks)
}

fn cmd_recheck(path: &str, format: Format) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage(&format!("cannot read report {path}: {e}")),
    };
    let report = match Report::from_json(&text) {
        Ok(r) => r,
        Err(e) => return usage(&format!("cannot parse report {path}: {e}")),
    };
    let checks = recheck(&report);
    let failed = checks.iter().any(|c| c.status == "fail");
    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "schema": "sp2.recheck/1",
                "source": path,
                "checks": checks,
                "ok": !failed,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("recheck serializes"));
        }
        Format::Text => {
            println!("recheck of {path}");
            for c in &checks {
                println!("  {}: {} ({})", c.name, c.status.to_uppercase(), c.detail);
            }
            println!("overall: {}", if failed { "FAIL" } else { "PASS" });
        }
    }
    if failed {
        EXIT_CHECK_FAILURE
    } else {
        EXIT_PASS
    }
}
