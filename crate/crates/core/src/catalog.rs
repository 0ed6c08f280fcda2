//! Text catalog of coefficient rings.
//!
//! Format, one directive per line, `#` starts a comment:
//!
//! ```text
//! ring F4
//! basis e x
//! unit e
//! mul e*e=e
//! mul e*x=x
//! mul x*x=x+e
//! ```
//!
//! `basis` lists the F₂-basis ids, `unit` gives the multiplicative unit as a
//! sum of ids, and each `mul` line gives the product of one unordered basis
//! pair as a sum of ids (`0` for the empty sum). Every unordered pair must
//! appear exactly once; unknown ids, duplicate pairs, and missing pairs are
//! errors, as is a table that fails the ring axioms.

use std::collections::HashMap;

use thiserror::Error;

use crate::ring::{Ring, RingError};

const DEFAULT_CATALOG: &str = include_str!("../catalog/default.cat");

#[derive(Error, Debug)]
pub enum CatalogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ring {name:?} (ending at line {line}): {source}")]
    Ring {
        name: String,
        line: usize,
        source: RingError,
    },
    #[error("line {line}: ring {name:?} defined twice")]
    DuplicateRing { line: usize, name: String },
}

#[derive(Default)]
struct PendingRing {
    name: String,
    start_line: usize,
    basis: Vec<String>,
    unit: Option<u8>,
    /// (i, j) -> product coordinates, keyed with i <= j
    products: HashMap<(usize, usize), u8>,
}

impl PendingRing {
    fn coords_of_expr(&self, expr: &str, line: usize) -> Result<u8, CatalogError> {
        let expr = expr.trim();
        if expr == "0" {
            return Ok(0);
        }
        let mut coords = 0u8;
        for part in expr.split('+') {
            let part = part.trim();
            let i = self.basis.iter().position(|b| b == part).ok_or_else(|| {
                CatalogError::Parse {
                    line,
                    msg: format!("unknown basis id {part:?} in ring {:?}", self.name),
                }
            })?;
            if coords >> i & 1 == 1 {
                return Err(CatalogError::Parse {
                    line,
                    msg: format!("basis id {part:?} repeated in sum"),
                });
            }
            coords |= 1 << i;
        }
        Ok(coords)
    }

    fn finish(self, end_line: usize) -> Result<Ring, CatalogError> {
        let dim = self.basis.len();
        if dim == 0 {
            return Err(CatalogError::Parse {
                line: self.start_line,
                msg: format!("ring {:?} has no basis line", self.name),
            });
        }
        let unit = self.unit.ok_or(CatalogError::Parse {
            line: self.start_line,
            msg: format!("ring {:?} has no unit line", self.name),
        })?;
        let mut table = vec![0u8; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let p = self.products.get(&(i, j)).ok_or_else(|| CatalogError::Parse {
                    line: end_line,
                    msg: format!(
                        "ring {:?} is missing the product {}*{}",
                        self.name, self.basis[i], self.basis[j]
                    ),
                })?;
                table[i * dim + j] = *p;
                table[j * dim + i] = *p;
            }
        }
        Ring::new(&self.name, self.basis, unit, table).map_err(|source| CatalogError::Ring {
            name: self.name,
            line: end_line,
            source,
        })
    }
}

/// Ordered collection of named rings.
pub struct Catalog {
    rings: Vec<Ring>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        let mut cat = Catalog { rings: Vec::new() };
        cat.extend_from(text)?;
        Ok(cat)
    }

    /// Parses more rings into this catalog; duplicate names are errors.
    pub fn extend_from(&mut self, text: &str) -> Result<(), CatalogError> {
        let mut pending: Option<PendingRing> = None;
        let flush =
            |pending: &mut Option<PendingRing>, line: usize, rings: &mut Vec<Ring>| {
                if let Some(p) = pending.take() {
                    let name = p.name.clone();
                    let ring = p.finish(line)?;
                    if rings.iter().any(|r| r.name() == name) {
                        return Err(CatalogError::DuplicateRing { line, name });
                    }
                    rings.push(ring);
                }
                Ok(())
            };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (directive, rest) = match content.split_once(char::is_whitespace) {
                Some((d, r)) => (d, r.trim()),
                None => (content, ""),
            };
            match directive {
                "ring" => {
                    flush(&mut pending, line, &mut self.rings)?;
                    if rest.is_empty() || rest.contains(char::is_whitespace) {
                        return Err(CatalogError::Parse {
                            line,
                            msg: format!("bad ring name {rest:?}"),
                        });
                    }
                    pending = Some(PendingRing {
                        name: rest.to_string(),
                        start_line: line,
                        ..PendingRing::default()
                    });
                }
                "basis" => {
                    let p = pending.as_mut().ok_or(CatalogError::Parse {
                        line,
                        msg: "basis line outside a ring block".into(),
                    })?;
                    if !p.basis.is_empty() {
                        return Err(CatalogError::Parse {
                            line,
                            msg: format!("ring {:?} has two basis lines", p.name),
                        });
                    }
                    p.basis = rest.split_whitespace().map(str::to_string).collect();
                }
                "unit" => {
                    let p = pending.as_mut().ok_or(CatalogError::Parse {
                        line,
                        msg: "unit line outside a ring block".into(),
                    })?;
                    if p.unit.is_some() {
                        return Err(CatalogError::Parse {
                            line,
                            msg: format!("ring {:?} has two unit lines", p.name),
                        });
                    }
                    let coords = p.coords_of_expr(rest, line)?;
                    p.unit = Some(coords);
                }
                "mul" => {
                    let p = pending.as_mut().ok_or(CatalogError::Parse {
                        line,
                        msg: "mul line outside a ring block".into(),
                    })?;
                    let (lhs, rhs) = rest.split_once('=').ok_or(CatalogError::Parse {
                        line,
                        msg: "mul line needs the form a*b=expr".into(),
                    })?;
                    let (a, b) = lhs.split_once('*').ok_or(CatalogError::Parse {
                        line,
                        msg: "mul line needs the form a*b=expr".into(),
                    })?;
                    let pos = |id: &str| -> Result<usize, CatalogError> {
                        p.basis.iter().position(|x| x == id.trim()).ok_or_else(|| {
                            CatalogError::Parse {
                                line,
                                msg: format!("unknown basis id {:?} in ring {:?}", id.trim(), p.name),
                            }
                        })
                    };
                    let (i, j) = (pos(a)?, pos(b)?);
                    let key = (i.min(j), i.max(j));
                    let coords = p.coords_of_expr(rhs, line)?;
                    if p.products.insert(key, coords).is_some() {
                        return Err(CatalogError::Parse {
                            line,
                            msg: format!(
                                "product {}*{} given twice in ring {:?}",
                                p.basis[key.0], p.basis[key.1], p.name
                            ),
                        });
                    }
                }
                other => {
                    return Err(CatalogError::Parse {
                        line,
                        msg: format!("unknown directive {other:?}"),
                    });
                }
            }
        }
        let last = text.lines().count();
        flush(&mut pending, last, &mut self.rings)?;
        Ok(())
    }

    /// The built-in catalog: F2, F4, F2eps, F2xF2, F2t3.
    pub fn default_catalog() -> Result<Catalog, CatalogError> {
        Catalog::parse(DEFAULT_CATALOG)
    }

    pub fn get(&self, name: &str) -> Option<&Ring> {
        self.rings.iter().find(|r| r.name() == name)
    }

    pub fn take(&self, name: &str) -> Option<Ring> {
        self.get(name).cloned()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.rings.iter()
    }

    pub fn names(&self) -> Vec<&str> {
        self.rings.iter().map(|r| r.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_parses_with_expected_rings() {
        let cat = Catalog::default_catalog().unwrap();
        assert_eq!(cat.names(), vec!["F2", "F4", "F2eps", "F2xF2", "F2t3"]);
        assert_eq!(cat.get("F2").unwrap().card(), 2);
        assert_eq!(cat.get("F4").unwrap().card(), 4);
        assert_eq!(cat.get("F2eps").unwrap().card(), 4);
        assert_eq!(cat.get("F2xF2").unwrap().card(), 4);
        assert_eq!(cat.get("F2t3").unwrap().card(), 8);
    }

    #[test]
    fn f2t3_truncation_kills_cubes() {
        let cat = Catalog::default_catalog().unwrap();
        let r = cat.get("F2t3").unwrap();
        let t = r.parse_elt("t").unwrap();
        let t2 = r.parse_elt("t2").unwrap();
        assert_eq!(r.mul(t, t), t2);
        assert_eq!(r.mul(t, t2), r.zero());
        assert!(r.is_nilpotent(t));
        assert!(!r.is_nilpotent(r.parse_elt("e+t").unwrap()));
    }

    #[test]
    fn f2xf2_is_boolean_in_the_idempotent_sense() {
        let cat = Catalog::default_catalog().unwrap();
        let r = cat.get("F2xF2").unwrap();
        for a in r.elements() {
            assert_eq!(r.mul(a, a), a, "idempotent {}", r.fmt_elt(a));
        }
    }

    #[test]
    fn missing_pair_is_reported() {
        let err = Catalog::parse("ring X\nbasis e b\nunit e\nmul e*e=e\nmul e*b=b\n");
        match err {
            Err(CatalogError::Parse { msg, .. }) => assert!(msg.contains("b*b"), "{msg}"),
            other => panic!("expected parse error, got {:?}", other.map(|c| c.names().join(","))),
        }
    }

    #[test]
    fn duplicate_pair_is_reported_regardless_of_order() {
        let text = "ring X\nbasis e b\nunit e\nmul e*e=e\nmul e*b=b\nmul b*e=b\nmul b*b=0\n";
        let err = Catalog::parse(text);
        match err {
            Err(CatalogError::Parse { line, msg }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("twice"), "{msg}");
            }
            other => panic!("expected parse error, got {:?}", other.map(|c| c.names().join(","))),
        }
    }

    #[test]
    fn unknown_id_and_unknown_directive_are_errors() {
        assert!(matches!(
            Catalog::parse("ring X\nbasis e\nunit q\nmul e*e=e\n"),
            Err(CatalogError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Catalog::parse("ring X\nbasis e\nunit e\ntable e*e=e\n"),
            Err(CatalogError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# leading comment\n\nring X # trailing\nbasis e\nunit e\nmul e*e=e\n";
        let cat = Catalog::parse(text).unwrap();
        assert_eq!(cat.names(), vec!["X"]);
    }

    #[test]
    fn unit_may_be_a_sum_of_basis_ids() {
        // basis {u, v} for F2xF2 written with unit u+v
        let text = "ring Y\nbasis u v\nunit u+v\nmul u*u=u\nmul u*v=0\nmul v*v=v\n";
        let cat = Catalog::parse(text).unwrap();
        let r = cat.get("Y").unwrap();
        assert_eq!(r.unit_coords(), 0b11);
        let u = r.parse_elt("u").unwrap();
        assert_eq!(r.mul(u, r.one()), u);
    }

    #[test]
    fn duplicate_ring_name_is_an_error() {
        let text = "ring X\nbasis e\nunit e\nmul e*e=e\nring X\nbasis e\nunit e\nmul e*e=e\n";
        assert!(matches!(Catalog::parse(text), Err(CatalogError::DuplicateRing { .. })));
    }
}
