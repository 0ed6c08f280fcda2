//! Structured reports and their offline re-verification.
//!
//! A report carries the full experiment configuration, including the ring's
//! structure constants, so a `recheck` pass can rebuild everything from the
//! document alone and replay the embedded certificates with nothing but
//! matrix arithmetic. Serialization is deterministic: struct field order is
//! fixed, maps are sorted, and timings are attached only on request.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::Word;
use crate::matrix::{ep_generators, SpMatrix};
use crate::ring::{
    form_param_from_set, subring_from_set, subring_generated, EltSet, FormRing, Ring, Subring,
};
use crate::roots::Root;
use crate::sandwich::{normalizes, LetterCtx};

pub const SCHEMA: &str = "sp2.report/1";

/// Ring structure constants, sufficient to rebuild the ring offline.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct RingSpec {
    pub name: String,
    pub basis: Vec<String>,
    pub unit: u8,
    pub basis_mul: Vec<u8>,
}

impl RingSpec {
    pub fn of(ring: &Ring) -> RingSpec {
        RingSpec {
            name: ring.name().to_string(),
            basis: ring.basis_names().to_vec(),
            unit: ring.unit_coords(),
            basis_mul: ring.basis_mul().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Ring, String> {
        Ring::new(&self.name, self.basis.clone(), self.unit, self.basis_mul.clone())
            .map_err(|e| e.to_string())
    }
}

/// Row-major matrix encoding: one bitstring per row, `dim` characters per
/// entry, character `i` giving the coefficient of basis element `i`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct MatrixSpec {
    pub rows: Vec<String>,
}

impl MatrixSpec {
    pub fn of(ring: &Ring, g: &SpMatrix) -> MatrixSpec {
        let w = 2 * g.n();
        let rows = (0..w)
            .map(|r| (0..w).map(|c| ring.bitstr(g.coords()[r * w + c])).collect())
            .collect();
        MatrixSpec { rows }
    }

    pub fn build(&self, ring: &Ring, n: usize) -> Result<SpMatrix, String> {
        let w = 2 * n;
        let dim = ring.dim();
        if self.rows.len() != w {
            return Err(format!("expected {w} rows, got {}", self.rows.len()));
        }
        let mut ent = Vec::with_capacity(w * w);
        for row in &self.rows {
            if row.len() != w * dim {
                return Err(format!("expected {} characters per row, got {}", w * dim, row.len()));
            }
            for c in 0..w {
                ent.push(ring.parse_bitstr(&row[c * dim..(c + 1) * dim])?);
            }
        }
        Ok(SpMatrix::from_coords(ring, n, ent))
    }
}

/// Canonical experiment configuration, embedded verbatim in every report.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Config {
    pub ring: RingSpec,
    pub n: usize,
    /// base subring generators, as element bitstrings
    pub k_gens: Vec<String>,
    pub extras: Vec<MatrixSpec>,
    pub cap: usize,
    pub harvest_depth: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub trials: usize,
}

pub fn config_hash(config: &Config) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One word certificate: the claim is that `word`, read over the letter
/// alphabet (elementary letters over the base pair first, then extras),
/// evaluates to the root element at `root` with the given scalar.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CertEntry {
    pub root: String,
    /// element bitstring
    pub scalar: String,
    /// letters as (generator index, exponent) pairs
    pub word: Vec<(u32, i8)>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    /// "pass" | "fail" | "skip"
    pub status: String,
    pub detail: String,
}

impl CheckResult {
    pub fn pass(name: &str, detail: String) -> CheckResult {
        CheckResult { name: name.into(), status: "pass".into(), detail }
    }
    pub fn fail(name: &str, detail: String) -> CheckResult {
        CheckResult { name: name.into(), status: "fail".into(), detail }
    }
    pub fn skip(name: &str, detail: String) -> CheckResult {
        CheckResult { name: name.into(), status: "skip".into(), detail }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Closure {
        order: usize,
        complete: bool,
        witness_checked: usize,
        witness_max_len: usize,
        witness_all_evaluate: bool,
    },
    Classify {
        /// "certified" | "inconclusive"
        status: String,
        reason: String,
        exploratory: bool,
        depth_used: usize,
        route_c: String,
        /// element bitstrings, ascending
        r_elements: Vec<String>,
        lambda_elements: Vec<String>,
        lower_certificates: Vec<CertEntry>,
        upper_checks: Vec<bool>,
        uniqueness: String,
        diagnostics: Vec<String>,
    },
    Verify {
        suite: String,
        checks: Vec<CheckResult>,
    },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub config: Config,
    pub config_hash: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u64>>,
}

impl Report {
    pub fn new(command: String, config: Config, outcome: Outcome) -> Report {
        let config_hash = config_hash(&config);
        Report {
            schema: SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command,
            config,
            config_hash,
            outcome,
            timings_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

fn set_from_bitstrings(ring: &Ring, items: &[String]) -> Result<EltSet, String> {
    let mut set = EltSet::default();
    for s in items {
        set.insert(ring.parse_bitstr(s)?);
    }
    Ok(set)
}

pub fn elements_as_bitstrings(ring: &Ring, set: &EltSet) -> Vec<String> {
    set.iter().map(|c| ring.bitstr(c)).collect()
}

/// Offline re-verification of a report. Rebuilds the ring from its
/// structure constants, replays every embedded certificate, and re-runs the
/// normalizer checks; nothing from the original session is trusted beyond
/// the document itself.
pub fn recheck(report: &Report) -> Vec<CheckResult> {
    let mut checks = Vec::new();

    if report.schema == SCHEMA {
        checks.push(CheckResult::pass("schema", report.schema.clone()));
    } else {
        checks.push(CheckResult::fail(
            "schema",
            format!("unknown schema {}, this tool reads {SCHEMA}", report.schema),
        ));
        return checks;
    }

    let recomputed = config_hash(&report.config);
    if recomputed == report.config_hash {
        checks.push(CheckResult::pass("config-hash", recomputed));
    } else {
        checks.push(CheckResult::fail(
            "config-hash",
            format!("stored {} but recomputed {}", report.config_hash, recomputed),
        ));
    }

    let ring = match report.config.ring.build() {
        Ok(r) => {
            checks.push(CheckResult::pass(
                "ring-axioms",
                format!("{} rebuilt from structure constants", r.name()),
            ));
            r
        }
        Err(e) => {
            checks.push(CheckResult::fail("ring-axioms", e));
            return checks;
        }
    };
    let n = report.config.n;

    let k = match base_subring(&ring, &report.config.k_gens) {
        Ok(k) => k,
        Err(e) => {
            checks.push(CheckResult::fail("base-subring", e));
            return checks;
        }
    };
    let mut extras = Vec::new();
    for (i, m) in report.config.extras.iter().enumerate() {
        match m.build(&ring, n) {
            Ok(g) if g.is_symplectic(&ring) => extras.push(g),
            Ok(_) => {
                checks.push(CheckResult::fail(
                    "extra-generators",
                    format!("extra {i} is not symplectic"),
                ));
                return checks;
            }
            Err(e) => {
                checks.push(CheckResult::fail("extra-generators", format!("extra {i}: {e}")));
                return checks;
            }
        }
    }

    let Outcome::Classify {
        status,
        r_elements,
        lambda_elements,
        lower_certificates,
        upper_checks,
        ..
    } = &report.outcome
    else {
        checks.push(CheckResult::skip(
            "certificates",
            "report carries no certificates; configuration checks only".into(),
        ));
        return checks;
    };
    if status != "certified" {
        checks.push(CheckResult::skip(
            "certificates",
            format!("classification status is {status}; nothing to replay"),
        ));
        return checks;
    }

    let r_set = match set_from_bitstrings(&ring, r_elements) {
        Ok(s) => s,
        Err(e) => {
            checks.push(CheckResult::fail("claimed-pair", e));
            return checks;
        }
    };
    let lam_set = match set_from_bitstrings(&ring, lambda_elements) {
        Ok(s) => s,
        Err(e) => {
            checks.push(CheckResult::fail("claimed-pair", e));
            return checks;
        }
    };
    let Some(r_sub) = subring_from_set(&ring, r_set) else {
        checks.push(CheckResult::fail(
            "claimed-pair",
            "claimed level elements do not form a subring".into(),
        ));
        return checks;
    };
    let Some(lam) = form_param_from_set(&ring, &r_sub, lam_set) else {
        checks.push(CheckResult::fail(
            "claimed-pair",
            "claimed long levels do not form a form parameter".into(),
        ));
        return checks;
    };
    if !k.elems().is_subset(r_sub.elems()) {
        checks.push(CheckResult::fail(
            "claimed-pair",
            "base subring is not contained in the claimed ring".into(),
        ));
        return checks;
    }
    let fr = match FormRing::new(r_sub, lam) {
        Ok(fr) => fr,
        Err(e) => {
            checks.push(CheckResult::fail("claimed-pair", e.to_string()));
            return checks;
        }
    };
    checks.push(CheckResult::pass(
        "claimed-pair",
        format!("{} ring elements, {} parameter elements", r_set.len(), lam_set.len()),
    ));

    let cx = LetterCtx::new(&ring, n, k, &extras);

    // lower inclusion: every elementary generator of the claimed pair must
    // have a certificate that evaluates to it
    let mut covered: BTreeMap<(Root, u8), bool> = BTreeMap::new();
    for gen in ep_generators(&ring, &fr, n) {
        covered.insert((gen.root, gen.scalar.coords()), false);
    }
    let mut lower_ok = true;
    let mut lower_detail = format!("{} certificates", lower_certificates.len());
    for (i, cert) in lower_certificates.iter().enumerate() {
        let Ok(root) = Root::parse(&cert.root) else {
            lower_ok = false;
            lower_detail = format!("certificate {i}: unreadable root {}", cert.root);
            break;
        };
        let Ok(scalar) = ring.parse_bitstr(&cert.scalar) else {
            lower_ok = false;
            lower_detail = format!("certificate {i}: unreadable scalar {}", cert.scalar);
            break;
        };
        let word = Word(cert.word.clone());
        let got = cx.eval(&word);
        let want = crate::matrix::x_root(&ring, n, &root, ring.elt(scalar));
        if got != want {
            lower_ok = false;
            lower_detail =
                format!("certificate {i} for {}({}) does not evaluate", cert.root, cert.scalar);
            break;
        }
        covered.insert((root, scalar), true);
    }
    if lower_ok {
        if let Some(((root, scalar), _)) = covered.iter().find(|(_, &c)| !c) {
            lower_ok = false;
            lower_detail = format!(
                "no certificate for {}({})",
                root.render(),
                ring.bitstr(*scalar)
            );
        }
    }
    checks.push(if lower_ok {
        CheckResult::pass("lower-inclusion", lower_detail)
    } else {
        CheckResult::fail("lower-inclusion", lower_detail)
    });

    // upper inclusion: every generator letter must normalize the claimed
    // pair, and the recorded flags must agree
    let mut upper_ok = upper_checks.len() == cx.letters().len();
    let mut upper_detail = format!("{} generators", cx.letters().len());
    if upper_ok {
        for (i, g) in cx.letters().iter().enumerate() {
            match normalizes(&ring, &fr, g) {
                Ok(true) if upper_checks[i] => {}
                Ok(v) => {
                    upper_ok = false;
                    upper_detail =
                        format!("generator {i}: normalizer check is {v}, recorded {}", upper_checks[i]);
                    break;
                }
                Err(e) => {
                    upper_ok = false;
                    upper_detail = format!("generator {i}: {e}");
                    break;
                }
            }
        }
    } else {
        upper_detail = format!(
            "recorded {} flags for {} generators",
            upper_checks.len(),
            cx.letters().len()
        );
    }
    checks.push(if upper_ok {
        CheckResult::pass("upper-inclusion", upper_detail)
    } else {
        CheckResult::fail("upper-inclusion", upper_detail)
    });

    checks
}

/// Base subring for a config: generated by the parsed element bitstrings,
/// the prime subring when none are given.
pub fn base_subring(ring: &Ring, k_gens: &[String]) -> Result<Subring, String> {
    let mut gens = Vec::new();
    for s in k_gens {
        gens.push(ring.elt(ring.parse_bitstr(s)?));
    }
    Ok(subring_generated(ring, gens))
}
