//! Symplectic groups over finite characteristic-2 coefficient rings.
//!
//! The crate models finite commutative unital algebras over the two-element
//! field, the symplectic groups `Sp(2n)` over them with their form-parameter
//! refinements, the elementary subgroups generated by root elements, and a
//! deterministic word engine that enumerates subgroups while recording how
//! each element was reached. On top of that sit two certified procedures:
//!
//! * [`sandwich::classify`] finds, for a subgroup given by generators, the
//!   coefficient pair squeezing it between an elementary group and its
//!   normalizer, and emits word certificates for every inclusion it claims;
//! * [`verify`] checks the structural facts the classification relies on
//!   (normalizer descriptions, generation patterns, commutation laws) by
//!   direct enumeration on small instances.
//!
//! The `sp2` binary exposes the same functionality as a command line tool
//! with reproducible JSON reports.

pub mod catalog;
pub mod cli;
pub mod engine;
pub mod matrix;
pub mod ring;
pub mod roots;
pub mod report;
pub mod sandwich;
pub mod verify;
