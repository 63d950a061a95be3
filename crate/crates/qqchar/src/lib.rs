//! Exact symbolic engine for tame qq-characters of fermionic type.
//!
//! A *qq-character* is a (possibly infinite) sum of Laurent monomials in
//! formal variables `Y_{i,σ}`, where `i` is a color of a deformed Cartan
//! matrix and `σ` is a monomial in deformation parameters `q, q1, q2, …`.
//! This crate constructs such characters from seed monomials, verifies their
//! combinatorial structure (block decompositions, colored graphs, dominance),
//! fuses them, specializes them at resonances and at `q = 1`, and solves the
//! residue recurrences that turn a character into a current commuting with
//! all screening operators.
//!
//! The layers, bottom to top:
//!
//! * [`exponents`] — exact arithmetic in the multiplicative parameter
//!   lattice: shift monomials, Laurent polynomials, factored field elements,
//!   and one-variable rational functions with exact residues.
//! * [`cartan`] — deformed Cartan matrices, validity checks, affine roots,
//!   and built-in presets for the standard families.
//! * [`character`] — Y-monomials, characters, block decomposition, the
//!   colored graph, classification (tame / slim / linear / prime), and
//!   factorization over affine roots.
//! * [`expand`] — the expansion algorithm from a seed monomial (dominant,
//!   anti-dominant, and mixed polarities), truncation, and expansion under
//!   resonance relations.
//! * [`fusion`] — combinatorial contractions, the relative pairing, and the
//!   fusion product.
//! * [`currents`] — screening-current contractions, the residue-based
//!   coefficient solver, and independent verification of screening
//!   commutation by pole pairing.
//! * [`qone`] — the `q = 1` specialization layer: admissibility, squares and
//!   their constants, supplements, and the square relations.
//! * [`io`] — JSON file formats and DOT export.
//! * [`golden`] — registry of named reference characters and coefficient
//!   tables with their construction recipes.

pub mod cartan;
pub mod character;
pub mod currents;
pub mod expand;
pub mod exponents;
pub mod fusion;
pub mod golden;
pub mod io;
pub mod qone;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two values from incompatible parameter contexts were combined.
    #[error("parameter context mismatch: {0}")]
    ContextMismatch(String),
    /// A name, monomial string, or file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// Invalid construction data (bad name, bad relation vector, …).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Division by zero in the parameter field.
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    /// A rational function had a pole of order ≥ 2 where a simple pole was
    /// required (a non-tame situation).
    #[error("higher-order pole: {0}")]
    HigherOrderPole(String),
    /// A Cartan matrix failed validation.
    #[error("invalid Cartan matrix: {0}")]
    Cartan(String),
    /// Block decomposition or another structural computation failed,
    /// certifying that the input is not a tame qq-character.
    #[error("not a tame qq-character: {0}")]
    NotTame(String),
    /// The expansion algorithm failed (blocked string, non-generic monomial,
    /// or inconsistent marking).
    #[error("expansion failed: {0}")]
    Expansion(String),
    /// A consistency check that should hold for all tame characters failed;
    /// indicates either bad input data or an internal inconsistency.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),
    /// An operation was applied to a character of the wrong status
    /// (e.g. fusion of windowed characters).
    #[error("unsupported character status: {0}")]
    Status(String),
    /// I/O error.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization error.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
