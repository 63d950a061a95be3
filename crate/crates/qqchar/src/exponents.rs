//! Exact arithmetic over the multiplicative lattice of deformation parameters.
//!
//! The whole engine works over a finite ordered list of parameters
//! `q, q1, q2, …` generating a multiplicative abelian group, optionally
//! subject to declared monomial relations ("resonances") such as `p1^2 = p2`.
//! This module provides the layers everything else is built from:
//!
//! * [`ParamContext`] — the parameter list plus the relation lattice, with a
//!   Hermite-normal-form reduction basis making monomial equality decidable
//!   in the quotient.
//! * [`ShiftMonomial`] — one group element, stored as a canonically reduced
//!   integer exponent vector.
//! * [`LaurentPoly`] — finite linear combinations of shift monomials with
//!   exact rational coefficients.
//! * [`FactoredRatio`] — an element of the parameter field kept factored as
//!   `r · σ · ∏ (1 − μ_t)^{e_t}`; closed under product and inverse, with
//!   exact equality (canonical form first, cross-multiplied expansion as a
//!   fallback) and no multivariate gcd anywhere.
//! * [`RatFunc`] — a rational function of a formal variable `w` with a
//!   tracked scale `z`, kept factored as `c · w^a · z^b · ∏ (w − σz)^e`, so
//!   pole orders stay visible and residues are exact bookkeeping.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{BigRational, One, Signed, Zero};

use crate::{Error, Result};

/// Forward `Debug` to `Display` (the canonical textual form).
#[macro_export]
macro_rules! fmt_debug_via_display {
    ($ty:ty) => {
        impl ::std::fmt::Debug for $ty {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                write!(f, "{self}")
            }
        }
    };
}

/// Exact small power of a rational (exponents here are tiny).
fn rational_pow(r: &BigRational, k: i64) -> BigRational {
    let base = if k >= 0 { r.clone() } else { BigRational::one() / r.clone() };
    let mut acc = BigRational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

// ---------------------------------------------------------------------------
// Deterministic structural hashing (FNV-1a), stable across processes.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn write_i64(&mut self, v: i64) {
        self.write_bytes(&v.to_le_bytes());
    }
    fn finish(self) -> u64 {
        self.0
    }
}

// ---------------------------------------------------------------------------
// Integer row Hermite normal form
// ---------------------------------------------------------------------------

/// Return the pivot (column, value) of a nonzero row.
fn row_pivot(row: &[i64]) -> Option<(usize, i64)> {
    row.iter().enumerate().find(|(_, &v)| v != 0).map(|(c, &v)| (c, v))
}

/// Row-style Hermite normal form of the lattice spanned by `rows`.
///
/// The result has strictly increasing pivot columns, positive pivots, zeros
/// below each pivot, and entries above each pivot reduced into `[0, pivot)`.
/// Reducing any input row by the result yields the zero vector, and the
/// canonical representative of `v` modulo the lattice is obtained by one
/// left-to-right sweep (see [`ParamContext::reduce`]).
fn row_hnf(rows: &[Vec<i64>], width: usize) -> Vec<Vec<i64>> {
    let mut work: Vec<Vec<i64>> = rows.iter().filter(|r| r.iter().any(|&v| v != 0)).cloned().collect();
    let mut basis: Vec<Vec<i64>> = Vec::new();
    for col in 0..width {
        loop {
            // Pick the row with the smallest nonzero |entry| in this column.
            let mut piv: Option<usize> = None;
            for (r, row) in work.iter().enumerate() {
                if row[col] != 0 {
                    match piv {
                        None => piv = Some(r),
                        Some(p) if row[col].abs() < work[p][col].abs() => piv = Some(r),
                        _ => {}
                    }
                }
            }
            let Some(p) = piv else { break };
            // Euclid step: reduce every other row against the pivot row.
            let mut clean = true;
            let prow = work[p].clone();
            for (r, row) in work.iter_mut().enumerate() {
                if r != p && row[col] != 0 {
                    let k = row[col].div_euclid(prow[col]);
                    if k != 0 {
                        for (a, b) in row.iter_mut().zip(&prow) {
                            *a -= k * b;
                        }
                    }
                    if row[col] != 0 {
                        clean = false;
                    }
                }
            }
            if clean {
                let mut prow = work.swap_remove(p);
                if prow[col] < 0 {
                    for a in prow.iter_mut() {
                        *a = -*a;
                    }
                }
                basis.push(prow);
                break;
            }
        }
        work.retain(|r| r.iter().any(|&v| v != 0));
    }
    basis.sort_by_key(|r| row_pivot(r).map(|(c, _)| c));
    // Reduce entries above each pivot into [0, pivot).
    for i in (0..basis.len()).rev() {
        let (c, p) = row_pivot(&basis[i]).expect("basis rows are nonzero");
        let lower = basis[i].clone();
        for upper in basis.iter_mut().take(i) {
            let k = upper[c].div_euclid(p);
            if k != 0 {
                for (a, b) in upper.iter_mut().zip(&lower) {
                    *a -= k * b;
                }
            }
        }
    }
    basis
}

// ---------------------------------------------------------------------------
// ParamContext
// ---------------------------------------------------------------------------

/// The multiplicative group of deformation parameters, possibly quotiented by
/// declared relations.
///
/// Parameter 0 is always `q`.  Relations are integer exponent vectors `v`
/// declaring `∏ names[t]^{v[t]} = 1`; their span is canonicalized to a
/// Hermite-normal-form reduction basis so every group element has a unique
/// reduced representative.  Contexts also carry display-only *aliases*
/// (derived parameters such as `q3 = (q·q1·q2)^{-1}` or `p1 = q^2 q1^2`) that
/// are accepted by the parser but never printed.
///
/// Contexts with equal names and equal reduction bases are interchangeable;
/// this is captured by a deterministic structural [`fingerprint`].
///
/// [`fingerprint`]: ParamContext::fingerprint
#[derive(Debug)]
pub struct ParamContext {
    names: Vec<String>,
    relations: Vec<Vec<i64>>,
    reduction_basis: Vec<Vec<i64>>,
    aliases: BTreeMap<String, Vec<i64>>,
    fingerprint: u64,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Names reserved for formal symbols used by other modules.
const RESERVED: &[&str] = &["w", "z", "u"];

impl ParamContext {
    /// A free context (no relations) on the given parameter names.
    ///
    /// The first name must be `q`.
    pub fn new(names: &[&str]) -> Result<Arc<Self>> {
        Self::with_relations(names, &[])
    }

    /// A context on the given names with the given relation vectors.
    pub fn with_relations(names: &[&str], relations: &[Vec<i64>]) -> Result<Arc<Self>> {
        if names.is_empty() || names[0] != "q" {
            return Err(Error::Invalid("parameter list must start with q".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in names {
            if !valid_name(n) {
                return Err(Error::Invalid(format!("bad parameter name {n:?}")));
            }
            if RESERVED.contains(n) {
                return Err(Error::Invalid(format!("parameter name {n:?} is reserved")));
            }
            if !seen.insert(*n) {
                return Err(Error::Invalid(format!("duplicate parameter name {n:?}")));
            }
        }
        for r in relations {
            if r.len() != names.len() {
                return Err(Error::Invalid(format!(
                    "relation vector length {} does not match {} parameters",
                    r.len(),
                    names.len()
                )));
            }
        }
        let reduction_basis = row_hnf(relations, names.len());
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let mut h = Fnv::new();
        for n in &names {
            h.write_bytes(n.as_bytes());
            h.write_bytes(b"\0");
        }
        for row in &reduction_basis {
            for &v in row {
                h.write_i64(v);
            }
            h.write_bytes(b";");
        }
        Ok(Arc::new(ParamContext {
            names,
            relations: relations.to_vec(),
            reduction_basis,
            aliases: BTreeMap::new(),
            fingerprint: h.finish(),
        }))
    }

    /// A copy of this context with extra parser aliases (display unchanged).
    ///
    /// Aliases do not enter the fingerprint: contexts differing only in
    /// aliases are interchangeable.
    pub fn with_aliases(self: &Arc<Self>, aliases: &[(&str, Vec<i64>)]) -> Result<Arc<Self>> {
        let mut map = self.aliases.clone();
        for (name, vec) in aliases {
            if !valid_name(name) || RESERVED.contains(name) {
                return Err(Error::Invalid(format!("bad alias name {name:?}")));
            }
            if vec.len() != self.names.len() {
                return Err(Error::Invalid(format!("alias {name:?} has wrong vector length")));
            }
            map.insert(name.to_string(), vec.clone());
        }
        Ok(Arc::new(ParamContext {
            names: self.names.clone(),
            relations: self.relations.clone(),
            reduction_basis: self.reduction_basis.clone(),
            aliases: map,
            fingerprint: self.fingerprint,
        }))
    }

    /// The quotient of this context by additional relation vectors.
    ///
    /// Values from the original context must be re-reduced with
    /// [`ShiftMonomial::transfer`] before use in the quotient.
    pub fn quotient(self: &Arc<Self>, extra: &[Vec<i64>]) -> Result<Arc<Self>> {
        let mut relations = self.relations.clone();
        for r in extra {
            if r.len() != self.names.len() {
                return Err(Error::Invalid(format!(
                    "relation vector length {} does not match {} parameters",
                    r.len(),
                    self.names.len()
                )));
            }
            relations.push(r.clone());
        }
        let names: Vec<&str> = self.names.iter().map(|s| s.as_str()).collect();
        let ctx = Self::with_relations(&names, &relations)?;
        let aliases: Vec<(&str, Vec<i64>)> =
            self.aliases.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        ctx.with_aliases(&aliases)
    }

    /// Parameter names, `q` first.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of parameters (exponent-vector length).
    pub fn rank(&self) -> usize {
        self.names.len()
    }

    /// The declared relation vectors (before canonicalization).
    pub fn relations(&self) -> &[Vec<i64>] {
        &self.relations
    }

    /// The Hermite-normal-form basis of the relation lattice.
    pub fn reduction_basis(&self) -> &[Vec<i64>] {
        &self.reduction_basis
    }

    /// True if the relation lattice is trivial.
    pub fn is_plain(&self) -> bool {
        self.reduction_basis.is_empty()
    }

    /// Structural fingerprint: equal iff names and reduction basis agree.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// True if monomials from `self` and `other` may be combined.
    pub fn compatible(&self, other: &ParamContext) -> bool {
        self.fingerprint == other.fingerprint
    }

    /// Index of a parameter name, honoring aliases and the built-in alias
    /// `q0 = q`.  Alias hits return `None` (they are not basis parameters).
    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The exponent vector a (possibly aliased) name stands for.
    fn vector_of(&self, name: &str) -> Option<Vec<i64>> {
        if let Some(i) = self.index_of(name) {
            let mut v = vec![0; self.rank()];
            v[i] = 1;
            return Some(v);
        }
        if let Some(v) = self.aliases.get(name) {
            return Some(v.clone());
        }
        if name == "q0" {
            // q0 is a universal alias for q unless separately declared.
            let mut v = vec![0; self.rank()];
            v[0] = 1;
            return Some(v);
        }
        None
    }

    /// Canonical representative of `v` modulo the relation lattice.
    pub fn reduce(&self, v: &[i64]) -> Vec<i64> {
        debug_assert_eq!(v.len(), self.rank());
        let mut v = v.to_vec();
        for row in &self.reduction_basis {
            let (c, p) = row_pivot(row).expect("basis rows are nonzero");
            let k = v[c].div_euclid(p);
            if k != 0 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= k * b;
                }
            }
        }
        v
    }

    /// The identity monomial.
    pub fn one(self: &Arc<Self>) -> ShiftMonomial {
        ShiftMonomial { ctx: Arc::clone(self), exps: vec![0; self.rank()] }
    }

    /// The monomial with the given raw exponent vector (reduced on entry).
    pub fn monomial(self: &Arc<Self>, exps: &[i64]) -> Result<ShiftMonomial> {
        if exps.len() != self.rank() {
            return Err(Error::Invalid(format!(
                "exponent vector length {} does not match {} parameters",
                exps.len(),
                self.rank()
            )));
        }
        Ok(ShiftMonomial { ctx: Arc::clone(self), exps: self.reduce(exps) })
    }

    /// The monomial for a single (possibly aliased) parameter name.
    pub fn var(self: &Arc<Self>, name: &str) -> Result<ShiftMonomial> {
        let v = self
            .vector_of(name)
            .ok_or_else(|| Error::Parse(format!("unknown parameter {name:?}")))?;
        self.monomial(&v)
    }

    /// Parse a monomial string of `*`-separated `name^exp` factors.
    ///
    /// Examples: `1`, `q`, `q^-1*q1^2`, `q0^2 * q2` (whitespace tolerated,
    /// aliases accepted).
    pub fn parse(self: &Arc<Self>, s: &str) -> Result<ShiftMonomial> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty monomial string".into()));
        }
        let mut exps = vec![0i64; self.rank()];
        for factor in s.split('*') {
            let factor = factor.trim();
            if factor == "1" {
                continue;
            }
            let (name, pow) = match factor.split_once('^') {
                Some((n, p)) => {
                    let pow: i64 = p.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad exponent {:?} in monomial {s:?}", p.trim()))
                    })?;
                    (n.trim(), pow)
                }
                None => (factor, 1),
            };
            let v = self
                .vector_of(name)
                .ok_or_else(|| Error::Parse(format!("unknown parameter {name:?} in {s:?}")))?;
            for (a, b) in exps.iter_mut().zip(&v) {
                *a += pow * b;
            }
        }
        self.monomial(&exps)
    }

    fn format_exps(&self, exps: &[i64]) -> String {
        let mut parts = Vec::new();
        for (name, &e) in self.names.iter().zip(exps) {
            match e {
                0 => {}
                1 => parts.push(name.clone()),
                _ => parts.push(format!("{name}^{e}")),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

/// Verify two contexts are interchangeable, with a readable error.
pub fn ensure_same_ctx(a: &ParamContext, b: &ParamContext) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::ContextMismatch(format!(
            "parameters {:?} vs {:?}",
            a.names(),
            b.names()
        )))
    }
}

// ---------------------------------------------------------------------------
// ShiftMonomial
// ---------------------------------------------------------------------------

/// One element of the parameter group, canonically reduced.
///
/// Equality, ordering, and hashing use the context fingerprint plus the
/// reduced exponent vector, so monomials behave as plain values in maps.
#[derive(Clone)]
pub struct ShiftMonomial {
    ctx: Arc<ParamContext>,
    exps: Vec<i64>,
}

impl ShiftMonomial {
    /// The owning context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    /// The canonical exponent vector.
    pub fn exps(&self) -> &[i64] {
        &self.exps
    }

    /// True for the identity monomial.
    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Group inverse.
    pub fn inv(&self) -> ShiftMonomial {
        let neg: Vec<i64> = self.exps.iter().map(|&e| -e).collect();
        ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: self.ctx.reduce(&neg) }
    }

    /// Integer power.
    pub fn pow(&self, k: i64) -> ShiftMonomial {
        let v: Vec<i64> = self.exps.iter().map(|&e| e * k).collect();
        ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: self.ctx.reduce(&v) }
    }

    /// Product, with a context check suitable for API boundaries.
    pub fn mul_checked(&self, other: &ShiftMonomial) -> Result<ShiftMonomial> {
        ensure_same_ctx(&self.ctx, &other.ctx)?;
        Ok(self * other)
    }

    /// Re-reduce this monomial in a compatible-names context (typically a
    /// quotient of the original one).
    pub fn transfer(&self, to: &Arc<ParamContext>) -> Result<ShiftMonomial> {
        if self.ctx.names() != to.names() {
            return Err(Error::ContextMismatch(
                "cannot transfer between contexts with different parameter lists".into(),
            ));
        }
        to.monomial(&self.exps)
    }
}

impl PartialEq for ShiftMonomial {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.fingerprint == other.ctx.fingerprint && self.exps == other.exps
    }
}
impl Eq for ShiftMonomial {}

impl PartialOrd for ShiftMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ShiftMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ctx
            .fingerprint
            .cmp(&other.ctx.fingerprint)
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl std::hash::Hash for ShiftMonomial {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ctx.fingerprint.hash(state);
        self.exps.hash(state);
    }
}

impl fmt::Debug for ShiftMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ctx.format_exps(&self.exps))
    }
}

impl fmt::Display for ShiftMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ctx.format_exps(&self.exps))
    }
}

impl std::ops::Mul for &ShiftMonomial {
    type Output = ShiftMonomial;
    fn mul(self, rhs: &ShiftMonomial) -> ShiftMonomial {
        assert!(
            self.ctx.compatible(&rhs.ctx),
            "shift-monomial product across incompatible contexts"
        );
        let v: Vec<i64> = self.exps.iter().zip(&rhs.exps).map(|(a, b)| a + b).collect();
        ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: self.ctx.reduce(&v) }
    }
}

impl std::ops::Div for &ShiftMonomial {
    type Output = ShiftMonomial;
    fn div(self, rhs: &ShiftMonomial) -> ShiftMonomial {
        self * &rhs.inv()
    }
}

// ---------------------------------------------------------------------------
// LaurentPoly
// ---------------------------------------------------------------------------

/// A finite linear combination of shift monomials with exact rational
/// coefficients.  Keys are canonical exponent vectors; no zero coefficients
/// are stored.
#[derive(Clone)]
pub struct LaurentPoly {
    ctx: Arc<ParamContext>,
    terms: BTreeMap<Vec<i64>, BigRational>,
}

impl LaurentPoly {
    /// The zero polynomial.
    pub fn zero(ctx: &Arc<ParamContext>) -> Self {
        LaurentPoly { ctx: Arc::clone(ctx), terms: BTreeMap::new() }
    }

    /// The constant polynomial 1.
    pub fn one(ctx: &Arc<ParamContext>) -> Self {
        Self::from_rational(ctx, BigRational::one())
    }

    /// A constant polynomial.
    pub fn from_rational(ctx: &Arc<ParamContext>, r: BigRational) -> Self {
        let mut p = Self::zero(ctx);
        p.add_term_vec(vec![0; ctx.rank()], r);
        p
    }

    /// `coef · m` as a polynomial.
    pub fn from_monomial(m: &ShiftMonomial, coef: BigRational) -> Self {
        let mut p = Self::zero(&m.ctx);
        p.add_term_vec(m.exps.clone(), coef);
        p
    }

    /// The owning context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    fn add_term_vec(&mut self, key: Vec<i64>, coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Add `coef · m` in place.
    pub fn add_term(&mut self, m: &ShiftMonomial, coef: BigRational) {
        debug_assert!(self.ctx.compatible(&m.ctx));
        self.add_term_vec(m.exps.clone(), coef);
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the identity monomial.
    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&vec![0; self.ctx.rank()])
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Iterate terms in canonical key order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (ShiftMonomial, &BigRational)> + '_ {
        self.terms.iter().map(|(k, c)| {
            (ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: k.clone() }, c)
        })
    }

    /// Multiply by a scalar.
    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero(&self.ctx);
        }
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), c * r)).collect();
        LaurentPoly { ctx: Arc::clone(&self.ctx), terms }
    }

    /// Multiply by a monomial (shifts every key).
    pub fn mul_monomial(&self, m: &ShiftMonomial) -> Self {
        debug_assert!(self.ctx.compatible(&m.ctx));
        let mut out = Self::zero(&self.ctx);
        for (k, c) in &self.terms {
            let sum: Vec<i64> = k.iter().zip(&m.exps).map(|(a, b)| a + b).collect();
            out.add_term_vec(self.ctx.reduce(&sum), c.clone());
        }
        out
    }

    /// Exact power (non-negative exponent).
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.ctx);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.compatible(&other.ctx) && self.terms == other.terms
    }
}
impl Eq for LaurentPoly {}

impl std::ops::Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        assert!(self.ctx.compatible(&rhs.ctx), "laurent sum across incompatible contexts");
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term_vec(k.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect();
        LaurentPoly { ctx: Arc::clone(&self.ctx), terms }
    }
}

impl std::ops::Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        assert!(self.ctx.compatible(&rhs.ctx), "laurent product across incompatible contexts");
        let mut out = LaurentPoly::zero(&self.ctx);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                let sum: Vec<i64> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.add_term_vec(self.ctx.reduce(&sum), ca * cb);
            }
        }
        out
    }
}

fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            let mono = self.ctx.format_exps(k);
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            if mono == "1" {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{}*{mono}", format_rational(&mag))?;
            }
        }
        Ok(())
    }
}

crate::fmt_debug_via_display!(LaurentPoly);

// ---------------------------------------------------------------------------
// FactoredRatio
// ---------------------------------------------------------------------------

/// A nonzero element of the parameter field in factored normal form
/// `r · σ · ∏ (1 − μ_t)^{e_t}`, plus a zero flag.
///
/// Each binomial key `μ` is canonical: among `{μ, μ^{-1}}` the representative
/// with the lexicographically larger exponent vector is stored, using
/// `(1 − μ^{-1}) = −μ^{-1} (1 − μ)` to shuffle sign and monomial.  Residues of
/// screening contractions, coefficient ratios, brackets, and supplements all
/// stay in this form, so "reduced ratio" output needs no polynomial gcd.
#[derive(Clone)]
pub struct FactoredRatio {
    ctx: Arc<ParamContext>,
    zero: bool,
    scalar: BigRational,
    mono: Vec<i64>,
    binoms: BTreeMap<Vec<i64>, i64>,
}

impl PartialEq for FactoredRatio {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.compatible(&other.ctx)
            && self.zero == other.zero
            && self.scalar == other.scalar
            && self.mono == other.mono
            && self.binoms == other.binoms
    }
}
impl Eq for FactoredRatio {}

impl FactoredRatio {
    /// The element 1.
    pub fn one(ctx: &Arc<ParamContext>) -> Self {
        FactoredRatio {
            ctx: Arc::clone(ctx),
            zero: false,
            scalar: BigRational::one(),
            mono: vec![0; ctx.rank()],
            binoms: BTreeMap::new(),
        }
    }

    /// The element 0.
    pub fn zero(ctx: &Arc<ParamContext>) -> Self {
        FactoredRatio {
            ctx: Arc::clone(ctx),
            zero: true,
            scalar: BigRational::zero(),
            mono: vec![0; ctx.rank()],
            binoms: BTreeMap::new(),
        }
    }

    /// A rational constant.
    pub fn from_scalar(ctx: &Arc<ParamContext>, r: BigRational) -> Self {
        if r.is_zero() {
            return Self::zero(ctx);
        }
        let mut out = Self::one(ctx);
        out.scalar = r;
        out
    }

    /// A single monomial `m`.
    pub fn from_monomial(m: &ShiftMonomial) -> Self {
        let mut out = Self::one(&m.ctx);
        out.mono = m.exps.clone();
        out
    }

    /// The binomial `(1 − μ)^e`.
    ///
    /// If `μ` reduces to 1 the value is 0 for `e > 0` and an error for
    /// `e < 0`.
    pub fn from_binomial(mu: &ShiftMonomial, e: i64) -> Result<Self> {
        let ctx = &mu.ctx;
        if e == 0 {
            return Ok(Self::one(ctx));
        }
        if mu.is_one() {
            if e > 0 {
                return Ok(Self::zero(ctx));
            }
            return Err(Error::DivisionByZero(format!(
                "(1 - {mu}) vanishes in this context"
            )));
        }
        let mut out = Self::one(ctx);
        out.push_binomial(&mu.exps, e);
        Ok(out)
    }

    /// The owning context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    /// True for the zero element.
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// True for the element 1.
    pub fn is_one(&self) -> bool {
        !self.zero
            && self.scalar.is_one()
            && self.mono.iter().all(|&e| e == 0)
            && self.binoms.is_empty()
    }

    /// Append `(1 − μ)^e` with `μ` already reduced and ≠ 1, canonicalizing.
    fn push_binomial(&mut self, mu: &[i64], e: i64) {
        debug_assert!(mu.iter().any(|&x| x != 0));
        let neg: Vec<i64> = mu.iter().map(|&x| -x).collect();
        let inv = self.ctx.reduce(&neg);
        // Canonical representative: lexicographically larger of {μ, μ^{-1}}.
        let (key, flip) = if mu >= inv.as_slice() { (mu.to_vec(), false) } else { (inv, true) };
        if flip {
            // (1 − μ) = −μ (1 − μ^{-1})
            if e % 2 != 0 {
                self.scalar = -&self.scalar;
            }
            for (a, b) in self.mono.iter_mut().zip(mu) {
                *a += e * b;
            }
            self.mono = self.ctx.reduce(&self.mono);
        }
        let cnt = self.binoms.entry(key.clone()).or_insert(0);
        *cnt += e;
        if *cnt == 0 {
            self.binoms.remove(&key);
        }
    }

    /// Exact product.
    pub fn mul(&self, other: &FactoredRatio) -> FactoredRatio {
        assert!(self.ctx.compatible(&other.ctx), "ratio product across incompatible contexts");
        if self.zero || other.zero {
            return Self::zero(&self.ctx);
        }
        let mut out = self.clone();
        out.scalar *= &other.scalar;
        let sum: Vec<i64> = out.mono.iter().zip(&other.mono).map(|(a, b)| a + b).collect();
        out.mono = self.ctx.reduce(&sum);
        for (mu, &e) in &other.binoms {
            // Keys of `other` are already canonical; merge directly.
            let entry = out.binoms.entry(mu.clone()).or_insert(0);
            *entry += e;
            if *entry == 0 {
                out.binoms.remove(mu);
            }
        }
        out
    }

    /// Exact inverse.
    pub fn inv(&self) -> Result<FactoredRatio> {
        if self.zero {
            return Err(Error::DivisionByZero("inverse of zero ratio".into()));
        }
        let mut out = self.clone();
        out.scalar = BigRational::one() / &self.scalar;
        out.mono = {
            let neg: Vec<i64> = self.mono.iter().map(|&x| -x).collect();
            self.ctx.reduce(&neg)
        };
        out.binoms = self.binoms.iter().map(|(k, &e)| (k.clone(), -e)).collect();
        Ok(out)
    }

    /// Exact quotient.
    pub fn div(&self, other: &FactoredRatio) -> Result<FactoredRatio> {
        Ok(self.mul(&other.inv()?))
    }

    /// Exact integer power.
    pub fn pow(&self, k: i64) -> Result<FactoredRatio> {
        if self.zero {
            return match k.cmp(&0) {
                std::cmp::Ordering::Greater => Ok(self.clone()),
                std::cmp::Ordering::Equal => Ok(Self::one(&self.ctx)),
                std::cmp::Ordering::Less => {
                    Err(Error::DivisionByZero("negative power of zero ratio".into()))
                }
            };
        }
        let mut out = Self::one(&self.ctx);
        out.scalar = rational_pow(&self.scalar, k);
        let v: Vec<i64> = self.mono.iter().map(|&x| x * k).collect();
        out.mono = self.ctx.reduce(&v);
        out.binoms = self.binoms.iter().map(|(key, &e)| (key.clone(), e * k)).collect();
        out.binoms.retain(|_, e| *e != 0);
        Ok(out)
    }

    /// Negation.
    pub fn neg(&self) -> FactoredRatio {
        let mut out = self.clone();
        out.scalar = -&out.scalar;
        if self.zero {
            out.scalar = BigRational::zero();
        }
        out
    }

    /// Expand into a (numerator, denominator) pair of Laurent polynomials.
    pub fn to_num_den(&self) -> (LaurentPoly, LaurentPoly) {
        if self.zero {
            return (LaurentPoly::zero(&self.ctx), LaurentPoly::one(&self.ctx));
        }
        let mono = ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: self.mono.clone() };
        let mut num = LaurentPoly::from_monomial(&mono, self.scalar.clone());
        let mut den = LaurentPoly::one(&self.ctx);
        for (mu, &e) in &self.binoms {
            let mut b = LaurentPoly::one(&self.ctx);
            b.add_term_vec(mu.clone(), -BigRational::one());
            let p = b.pow(e.unsigned_abs() as u32);
            if e > 0 {
                num = &num * &p;
            } else {
                den = &den * &p;
            }
        }
        (num, den)
    }

    /// Exact value equality (canonical form fast path, cross-multiplied
    /// expansion as the complete fallback).
    pub fn value_eq(&self, other: &FactoredRatio) -> bool {
        if !self.ctx.compatible(&other.ctx) {
            return false;
        }
        if self.zero || other.zero {
            return self.zero == other.zero;
        }
        if self == other {
            return true;
        }
        let (na, da) = self.to_num_den();
        let (nb, db) = other.to_num_den();
        &na * &db == &nb * &da
    }

    /// True iff `self + other = 0` (used for paired-residue cancellation).
    pub fn value_eq_neg(&self, other: &FactoredRatio) -> bool {
        self.value_eq(&other.neg())
    }
}

impl fmt::Display for FactoredRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return write!(f, "0");
        }
        let mut num_parts: Vec<String> = Vec::new();
        let mut den_parts: Vec<String> = Vec::new();
        let mono = self.ctx.format_exps(&self.mono);
        if !self.scalar.is_one() {
            num_parts.push(format_rational(&self.scalar));
        }
        if mono != "1" {
            num_parts.push(mono);
        }
        for (mu, &e) in &self.binoms {
            let s = format!("(1-{})", self.ctx.format_exps(mu));
            let (parts, mag) = if e > 0 { (&mut num_parts, e) } else { (&mut den_parts, -e) };
            if mag == 1 {
                parts.push(s);
            } else {
                parts.push(format!("{s}^{mag}"));
            }
        }
        if num_parts.is_empty() {
            num_parts.push("1".into());
        }
        // Fold a leading "-1*" into a sign.
        let mut num = num_parts.join("*");
        if let Some(rest) = num.strip_prefix("-1*") {
            num = format!("-{rest}");
        }
        if den_parts.is_empty() {
            write!(f, "{num}")
        } else if den_parts.len() == 1 && !den_parts[0].contains('^') {
            write!(f, "{num}/{}", den_parts[0])
        } else {
            write!(f, "{num}/({})", den_parts.join("*"))
        }
    }
}

crate::fmt_debug_via_display!(FactoredRatio);

// ---------------------------------------------------------------------------
// RatFunc
// ---------------------------------------------------------------------------

/// A rational function of a formal variable `w` with a tracked scale `z`,
/// kept factored:
///
/// ```text
///     c · w^{a} · z^{b} · ∏_σ (w − σ z)^{e_σ}
/// ```
///
/// with `c` a [`FactoredRatio`].  Contractions of screening currents with
/// vertex operators have exactly this shape, all pole orders are explicit,
/// and residues at simple poles evaluate exactly to a factored ratio times a
/// power of `z` (the power is returned, never silently dropped: cancellation
/// of `z` in coefficient ratios is a correctness assertion upstream).
#[derive(Clone)]
pub struct RatFunc {
    ctx: Arc<ParamContext>,
    coef: FactoredRatio,
    w_pow: i64,
    z_pow: i64,
    factors: BTreeMap<Vec<i64>, i64>,
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.compatible(&other.ctx)
            && self.coef == other.coef
            && self.w_pow == other.w_pow
            && self.z_pow == other.z_pow
            && self.factors == other.factors
    }
}
impl Eq for RatFunc {}

impl RatFunc {
    /// The constant function 1.
    pub fn one(ctx: &Arc<ParamContext>) -> Self {
        RatFunc {
            ctx: Arc::clone(ctx),
            coef: FactoredRatio::one(ctx),
            w_pow: 0,
            z_pow: 0,
            factors: BTreeMap::new(),
        }
    }

    /// The factor `(w − σz)^e`.
    pub fn linear_factor(sigma: &ShiftMonomial, e: i64) -> Self {
        let mut out = Self::one(&sigma.ctx);
        if e != 0 {
            out.factors.insert(sigma.exps.clone(), e);
        }
        out
    }

    /// The owning context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    /// Multiply in place by `w^k`.
    pub fn mul_w_pow(&mut self, k: i64) {
        self.w_pow += k;
    }

    /// Multiply in place by `z^k`.
    pub fn mul_z_pow(&mut self, k: i64) {
        self.z_pow += k;
    }

    /// Multiply in place by a coefficient.
    pub fn mul_coef(&mut self, c: &FactoredRatio) {
        self.coef = self.coef.mul(c);
    }

    /// Exact product.
    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        assert!(self.ctx.compatible(&other.ctx), "ratfunc product across incompatible contexts");
        let mut out = self.clone();
        out.coef = out.coef.mul(&other.coef);
        out.w_pow += other.w_pow;
        out.z_pow += other.z_pow;
        for (k, &e) in &other.factors {
            let entry = out.factors.entry(k.clone()).or_insert(0);
            *entry += e;
            if *entry == 0 {
                out.factors.remove(k);
            }
        }
        out
    }

    /// Exact inverse.
    pub fn inv(&self) -> Result<RatFunc> {
        let mut out = self.clone();
        out.coef = self.coef.inv()?;
        out.w_pow = -self.w_pow;
        out.z_pow = -self.z_pow;
        out.factors = self.factors.iter().map(|(k, &e)| (k.clone(), -e)).collect();
        Ok(out)
    }

    /// The exponent of `(w − σz)` in the factored form.
    pub fn order_at(&self, sigma: &ShiftMonomial) -> i64 {
        self.factors.get(&sigma.exps).copied().unwrap_or(0)
    }

    /// All poles `(σ, order)` with order ≥ 1, in canonical order.
    pub fn poles(&self) -> Vec<(ShiftMonomial, u32)> {
        self.factors
            .iter()
            .filter(|(_, &e)| e < 0)
            .map(|(k, &e)| {
                (
                    ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: k.clone() },
                    (-e) as u32,
                )
            })
            .collect()
    }

    /// Shared kernel of residue and evaluation: the value of
    /// `c · w^a z^b ∏_{σ≠skip} (w − σz)^{e_σ}` at `w = αz`, together with the
    /// accumulated power of `z`.
    fn value_without(&self, alpha: &ShiftMonomial, skip: bool) -> Result<(FactoredRatio, i64)> {
        let mut value = self.coef.clone();
        // w^a at w = αz contributes α^a z^a.
        value = value.mul(&FactoredRatio::from_monomial(&alpha.pow(self.w_pow)));
        let mut z_pow = self.w_pow + self.z_pow;
        for (k, &e) in &self.factors {
            if skip && k == &alpha.exps {
                continue;
            }
            let sigma = ShiftMonomial { ctx: Arc::clone(&self.ctx), exps: k.clone() };
            // (αz − σz)^e = α^e (1 − σ/α)^e z^e.
            let ratio = &sigma / alpha;
            if ratio.is_one() {
                // α = σ: the factor vanishes (or blows up for e < 0).
                if e > 0 {
                    return Ok((FactoredRatio::zero(&self.ctx), 0));
                }
                return Err(Error::DivisionByZero(format!(
                    "evaluation at w = {alpha}·z hits the pole (w - {sigma}·z)^{e}"
                )));
            }
            value = value.mul(&FactoredRatio::from_monomial(&alpha.pow(e)));
            value = value.mul(&FactoredRatio::from_binomial(&ratio, e)?);
            z_pow += e;
        }
        Ok((value, z_pow))
    }

    /// Exact value at `w = αz` (requires `αz` not to be a pole); returns the
    /// factored value and the power of `z` it carries.
    pub fn evaluate_at(&self, alpha: &ShiftMonomial) -> Result<(FactoredRatio, i64)> {
        let e = self.order_at(alpha);
        if e < 0 {
            return Err(Error::HigherOrderPole(format!(
                "evaluation at the pole w = {alpha}·z (order {})",
                -e
            )));
        }
        self.value_without(alpha, false)
    }

    /// Exact residue at `w = αz`; returns the factored value and the power of
    /// `z` it carries.  A regular point returns 0; a pole of order ≥ 2 is an
    /// error (signals a non-tame situation).
    pub fn residue_at(&self, alpha: &ShiftMonomial) -> Result<(FactoredRatio, i64)> {
        match self.order_at(alpha) {
            0 => Ok((FactoredRatio::zero(&self.ctx), 0)),
            -1 => self.value_without(alpha, true),
            e if e > 0 => Ok((FactoredRatio::zero(&self.ctx), 0)),
            e => Err(Error::HigherOrderPole(format!(
                "residue at pole of order {} at w = {alpha}·z",
                -e
            ))),
        }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut num_parts: Vec<String> = Vec::new();
        let mut den_parts: Vec<String> = Vec::new();
        if !self.coef.is_one() {
            num_parts.push(format!("{}", self.coef));
        }
        match self.w_pow {
            0 => {}
            1 => num_parts.push("w".into()),
            k => num_parts.push(format!("w^{k}")),
        }
        match self.z_pow {
            0 => {}
            1 => num_parts.push("z".into()),
            k => num_parts.push(format!("z^{k}")),
        }
        for (k, &e) in &self.factors {
            let sigma = self.ctx.format_exps(k);
            let base = if sigma == "1" {
                "(w-z)".to_string()
            } else {
                format!("(w-{sigma}*z)")
            };
            let (parts, mag) = if e > 0 { (&mut num_parts, e) } else { (&mut den_parts, -e) };
            if mag == 1 {
                parts.push(base);
            } else {
                parts.push(format!("{base}^{mag}"));
            }
        }
        if num_parts.is_empty() {
            num_parts.push("1".into());
        }
        let num = num_parts.join("*");
        if den_parts.is_empty() {
            write!(f, "{num}")
        } else {
            write!(f, "{num}/({})", den_parts.join("*"))
        }
    }
}

crate::fmt_debug_via_display!(RatFunc);

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn plain_ctx() -> Arc<ParamContext> {
        ParamContext::new(&["q", "q1", "q2", "q3"]).unwrap()
    }

    #[test]
    fn names_validated() {
        assert!(ParamContext::new(&[]).is_err());
        assert!(ParamContext::new(&["q1", "q"]).is_err());
        assert!(ParamContext::new(&["q", "q"]).is_err());
        assert!(ParamContext::new(&["q", "w"]).is_err());
        assert!(ParamContext::new(&["q", "2x"]).is_err());
        assert!(ParamContext::new(&["q", "q1"]).is_ok());
    }

    #[test]
    fn inverse_pair_cancels() {
        let ctx = plain_ctx();
        let q1 = ctx.var("q1").unwrap();
        assert!((&q1 * &q1.inv()).is_one());
    }

    #[test]
    fn q0_aliases_q() {
        let ctx = plain_ctx();
        assert_eq!(ctx.parse("q0^2").unwrap(), ctx.parse("q^2").unwrap());
    }

    #[test]
    fn alias_vector_expands() {
        // q3 expressed through the others: q3 = (q·q1·q2)^{-1}.
        let ctx = ParamContext::new(&["q", "q1", "q2"]).unwrap();
        let ctx = ctx.with_aliases(&[("q3", vec![-1, -1, -1])]).unwrap();
        let prod = ctx.parse("q0*q1*q2*q3").unwrap();
        assert!(prod.is_one());
    }

    #[test]
    fn resonance_identifies_p1_p2() {
        // p1 = q^2 q1^2, p2 = q^2 q2^2; the relation p1 = p2 is the vector
        // of p1·p2^{-1} = q1^2 q2^{-2}.
        let ctx = ParamContext::with_relations(&["q", "q1", "q2"], &[vec![0, 2, -2]]).unwrap();
        let p1 = ctx.parse("q^2*q1^2").unwrap();
        let p2 = ctx.parse("q^2*q2^2").unwrap();
        assert_eq!(p1, p2);
        assert!((&p1 / &p2).is_one());
    }

    #[test]
    fn reduce_is_idempotent_and_kills_relations() {
        let ctx =
            ParamContext::with_relations(&["q", "q1", "q2"], &[vec![2, 0, -1], vec![0, 3, 1]])
                .unwrap();
        for v in [vec![0, 0, 0], vec![2, 0, -1], vec![5, -4, 3], vec![-7, 11, 2]] {
            let r = ctx.reduce(&v);
            assert_eq!(ctx.reduce(&r), r, "reduce must be idempotent on {v:?}");
        }
        assert_eq!(ctx.reduce(&[2, 0, -1]), vec![0, 0, 0]);
        assert_eq!(ctx.reduce(&[0, 3, 1]), vec![0, 0, 0]);
        assert_eq!(ctx.reduce(&[2, 3, 0]), vec![0, 0, 0]);
    }

    #[test]
    fn hnf_handles_dependent_relations() {
        // Declaring a relation twice (and a combination) changes nothing.
        let a = ParamContext::with_relations(&["q", "q1"], &[vec![0, 2]]).unwrap();
        let b =
            ParamContext::with_relations(&["q", "q1"], &[vec![0, 2], vec![0, 4], vec![0, -2]])
                .unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        // Torsion: q1^2 = 1 leaves q1 of order two.
        let q1 = a.var("q1").unwrap();
        assert!(!q1.is_one());
        assert!(q1.pow(2).is_one());
        assert_eq!(q1, q1.inv());
    }

    #[test]
    fn monomial_strings_round_trip() {
        let ctx = plain_ctx();
        for s in ["1", "q", "q^-1*q1^2", "q^3*q2^-2*q3"] {
            let m = ctx.parse(s).unwrap();
            assert_eq!(format!("{m}"), s);
            assert_eq!(ctx.parse(&format!("{m}")).unwrap(), m);
        }
    }

    #[test]
    fn laurent_ring_ops() {
        let ctx = plain_ctx();
        let q = ctx.var("q").unwrap();
        // c_{11} = q − q^{-1}
        let mut c11 = LaurentPoly::zero(&ctx);
        c11.add_term(&q, BigRational::one());
        c11.add_term(&q.inv(), -BigRational::one());
        let sq = &c11 * &c11;
        // (q − q^{-1})^2 = q^2 − 2 + q^{-2}
        let mut expect = LaurentPoly::zero(&ctx);
        expect.add_term(&q.pow(2), BigRational::one());
        expect.add_term(&ctx.one(), -BigRational::from(BigInt::from(2)));
        expect.add_term(&q.pow(-2), BigRational::one());
        assert_eq!(sq, expect);
        assert!((&sq - &sq).is_zero());
        assert_eq!(sq.constant_term(), -BigRational::from(BigInt::from(2)));
        assert_eq!(format!("{c11}"), "-q^-1 + q");
    }

    #[test]
    fn factored_ratio_canonical_flip() {
        let ctx = plain_ctx();
        let q = ctx.var("q").unwrap();
        // (1 − q^{-2}) = −q^{-2} (1 − q^2): both constructions must agree
        // in canonical form.
        let a = FactoredRatio::from_binomial(&q.pow(-2), 1).unwrap();
        let b = FactoredRatio::from_scalar(&ctx, -BigRational::one())
            .mul(&FactoredRatio::from_monomial(&q.pow(-2)))
            .mul(&FactoredRatio::from_binomial(&q.pow(2), 1).unwrap());
        assert_eq!(a, b);
        assert!(a.value_eq(&b));
    }

    #[test]
    fn factored_ratio_cross_multiplied_equality() {
        let ctx = plain_ctx();
        let q = ctx.var("q").unwrap();
        // (1−q^4)/(1−q^2) and (1−q^6)/((1−q^3)) are both "1 + power" shapes
        // but differ; (1−q^4)(1−q^3) vs (1−q^3)(1−q^4) agree.
        let a = FactoredRatio::from_binomial(&q.pow(4), 1)
            .unwrap()
            .div(&FactoredRatio::from_binomial(&q.pow(2), 1).unwrap())
            .unwrap();
        let b = FactoredRatio::from_binomial(&q.pow(6), 1)
            .unwrap()
            .div(&FactoredRatio::from_binomial(&q.pow(3), 1).unwrap())
            .unwrap();
        assert!(!a.value_eq(&b));
        let c = FactoredRatio::from_binomial(&q.pow(4), 1)
            .unwrap()
            .mul(&FactoredRatio::from_binomial(&q.pow(3), 1).unwrap());
        let d = FactoredRatio::from_binomial(&q.pow(3), 1)
            .unwrap()
            .mul(&FactoredRatio::from_binomial(&q.pow(4), 1).unwrap());
        assert!(c.value_eq(&d));
        // Inverse round-trip.
        assert!(a.mul(&a.inv().unwrap()).is_one());
    }

    #[test]
    fn factored_ratio_zero_binomial_in_quotient() {
        // Under q1^2 = 1, the binomial (1 − q1^2) vanishes.
        let ctx = ParamContext::with_relations(&["q", "q1"], &[vec![0, 2]]).unwrap();
        let q1 = ctx.var("q1").unwrap();
        assert!(FactoredRatio::from_binomial(&q1.pow(2), 1).unwrap().is_zero());
        assert!(FactoredRatio::from_binomial(&q1.pow(2), -1).is_err());
        // q1 itself is nontrivial, so (1 − q1) is a fine denominator.
        assert!(FactoredRatio::from_binomial(&q1, -1).is_ok());
    }

    #[test]
    fn residue_of_single_pole_is_one() {
        let ctx = plain_ctx();
        let a = ctx.parse("q1").unwrap();
        // f = 1/(w − q1 z): residue at w = q1 z is 1, with no z power.
        let f = RatFunc::linear_factor(&a, -1);
        let (val, zp) = f.residue_at(&a).unwrap();
        assert!(val.is_one());
        assert_eq!(zp, 0);
        // At any other point the residue is zero.
        let b = ctx.parse("q2").unwrap();
        assert!(f.residue_at(&b).unwrap().0.is_zero());
    }

    #[test]
    fn residue_with_spectators() {
        let ctx = plain_ctx();
        let q = ctx.var("q").unwrap();
        let a = ctx.parse("q3").unwrap();
        // f = (w − q^2 a z) / ((w − a z)(w − q^{-1} a z)); the residue at
        // w = a z is (a − q^2 a)/(a − q^{-1} a) = (1 − q^2)/(1 − q^{-1}),
        // the z powers cancelling.
        let f = RatFunc::linear_factor(&(&q.pow(2) * &a), 1)
            .mul(&RatFunc::linear_factor(&a, -1))
            .mul(&RatFunc::linear_factor(&(&q.pow(-1) * &a), -1));
        let (val, zp) = f.residue_at(&a).unwrap();
        assert_eq!(zp, 0);
        let expect = FactoredRatio::from_binomial(&q.pow(2), 1)
            .unwrap()
            .div(&FactoredRatio::from_binomial(&q.pow(-1), 1).unwrap())
            .unwrap();
        assert!(val.value_eq(&expect));
        // Cross-check the same value through evaluate_at on (w − a z)·f.
        let g = f.mul(&RatFunc::linear_factor(&a, 1));
        let (val2, zp2) = g.evaluate_at(&a).unwrap();
        assert_eq!(zp, zp2);
        assert!(val.value_eq(&val2));
    }

    #[test]
    fn higher_order_pole_rejected() {
        let ctx = plain_ctx();
        let a = ctx.parse("q1").unwrap();
        let f = RatFunc::linear_factor(&a, -2);
        assert!(matches!(f.residue_at(&a), Err(Error::HigherOrderPole(_))));
        assert!(matches!(f.evaluate_at(&a), Err(Error::HigherOrderPole(_))));
    }

    #[test]
    fn w_powers_enter_residues() {
        let ctx = plain_ctx();
        let a = ctx.parse("q2").unwrap();
        // f = w^2/(w − a z): residue at w = a z is a^2 z^2.
        let mut f = RatFunc::linear_factor(&a, -1);
        f.mul_w_pow(2);
        let (val, zp) = f.residue_at(&a).unwrap();
        assert_eq!(zp, 2);
        assert!(val.value_eq(&FactoredRatio::from_monomial(&a.pow(2))));
    }
}
