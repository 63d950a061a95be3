//! Y-variable monomials, characters, block decomposition, and colored graphs.
//!
//! The ambient ring has commuting generators `Y_{i,σ}^{±1}` indexed by a
//! color `i` and a shift monomial `σ`.  A [`YMonomial`] is a finite product
//! of such generators; it is *generic* when every power is ±1, and its
//! *degree* in color `i` is the sum of the color-`i` powers.
//!
//! A [`Character`] is a multiset of Y-monomials over a fixed deformed Cartan
//! matrix, together with an honesty marker: `Complete` for finite closed
//! sums, `Window` for a finite window cut out of an infinite sum (the
//! frontier records which monomials still carry unexpanded positive
//! variables), or `Failed`.
//!
//! The structural heart of the module is block decomposition.  An elementary
//! block of color `i`, length `k+1` and shift `σ` is the sum of `k+1`
//! monomials
//!
//! ```text
//!     m_j = m̄ · m̄_j · ∏_{0 ≤ s ≤ k, s ≠ j} Y_{i, σ q^{−k+2s}} ,
//!     m_{j+1} = m_j · A_{i, σ q^{−k+2j+1}}⁻¹ ,
//! ```
//!
//! i.e. the color-`i` positives run over a `q²`-ladder with one moving gap,
//! and consecutive members differ by an inverse affine root.  A character is
//! *tame* when, for every color, it is a sum of products of mutually generic
//! shifted elementary blocks; [`decompose_color_blocks`] computes that
//! (unique) expression or certifies failure with a witness monomial.
//!
//! The colored graph of a character has an edge `m →^{i,σ} m′` whenever
//! `m′ = m·A_{i,σ}⁻¹` with `Y_{i,σq}` a (+1) variable of `m` and
//! `Y_{i,σq⁻¹}` a (+1) variable of `m′`.  Sources of color `i` are the
//! `i`-dominant monomials, sinks the `i`-anti-dominant ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::Zero;

use crate::cartan::CartanMatrix;
use crate::exponents::{ensure_same_ctx, ParamContext, ShiftMonomial};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Y-monomials
// ---------------------------------------------------------------------------

/// A finite product `∏ Y_{i,σ}^{p}` with nonzero integer powers.
///
/// Stored as a map from `(color, reduced shift exponents)` to the power, so
/// equality, ordering and hashing are structural and deterministic.
#[derive(Clone)]
pub struct YMonomial {
    ctx: Arc<ParamContext>,
    powers: BTreeMap<(usize, Vec<i64>), i64>,
}

impl YMonomial {
    /// The empty product (the constant 1).
    pub fn one(ctx: &Arc<ParamContext>) -> Self {
        YMonomial { ctx: Arc::clone(ctx), powers: BTreeMap::new() }
    }

    /// Builds a monomial from `(color, shift, power)` parts; powers at equal
    /// keys accumulate and zeros vanish.
    pub fn from_entries(ctx: &Arc<ParamContext>, parts: &[(usize, ShiftMonomial, i64)]) -> Result<Self> {
        let mut m = YMonomial::one(ctx);
        for (color, shift, pow) in parts {
            ensure_same_ctx(ctx, shift.ctx())?;
            m.insert(*color, shift, *pow);
        }
        Ok(m)
    }

    /// Convenience builder with textual shifts, e.g.
    /// `from_parts(&ctx, &[(1, "q", 1), (1, "q*p^-1", -1)])`.
    pub fn from_parts(ctx: &Arc<ParamContext>, parts: &[(usize, &str, i64)]) -> Result<Self> {
        let mut m = YMonomial::one(ctx);
        for (color, shift, pow) in parts {
            m.insert(*color, &ctx.parse(shift)?, *pow);
        }
        Ok(m)
    }

    /// The underlying parameter context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    /// True for the constant 1.
    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    /// Number of distinct generators present.
    pub fn num_entries(&self) -> usize {
        self.powers.len()
    }

    /// Multiplies `Y_{color,shift}^{delta}` into the monomial.
    pub fn insert(&mut self, color: usize, shift: &ShiftMonomial, delta: i64) {
        debug_assert!(self.ctx.compatible(shift.ctx()), "context mismatch in YMonomial::insert");
        if delta == 0 {
            return;
        }
        let key = (color, shift.exps().to_vec());
        let p = self.powers.entry(key.clone()).or_insert(0);
        *p += delta;
        if *p == 0 {
            self.powers.remove(&key);
        }
    }

    /// The power of `Y_{color,shift}` (0 when absent).
    pub fn power(&self, color: usize, shift: &ShiftMonomial) -> i64 {
        self.powers.get(&(color, shift.exps().to_vec())).copied().unwrap_or(0)
    }

    /// Iterates over `(color, shift, power)` in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, ShiftMonomial, i64)> + '_ {
        self.powers.iter().map(|((color, exps), &pow)| {
            let shift = self.ctx.monomial(exps).expect("stored exponents are valid");
            (*color, shift, pow)
        })
    }

    /// The colors that actually occur.
    pub fn colors(&self) -> BTreeSet<usize> {
        self.powers.keys().map(|(c, _)| *c).collect()
    }

    /// The `(shift, power)` pairs of one color, in canonical order.
    pub fn color_content(&self, color: usize) -> Vec<(ShiftMonomial, i64)> {
        self.powers
            .range((color, Vec::new())..)
            .take_while(|((c, _), _)| *c == color)
            .map(|((_, exps), &pow)| (self.ctx.monomial(exps).expect("valid exps"), pow))
            .collect()
    }

    /// Sum of the color's powers.
    pub fn degree(&self, color: usize) -> i64 {
        self.powers
            .range((color, Vec::new())..)
            .take_while(|((c, _), _)| *c == color)
            .map(|(_, &p)| p)
            .sum()
    }

    /// True when every power is ±1.
    pub fn is_generic(&self) -> bool {
        self.powers.values().all(|&p| p == 1 || p == -1)
    }

    /// True when some power is ≤ −2 (tolerated but flagged: such variables
    /// never participate in blocks).
    pub fn has_deep_negatives(&self) -> bool {
        self.powers.values().any(|&p| p <= -2)
    }

    /// The inverse monomial.
    pub fn inv(&self) -> YMonomial {
        YMonomial {
            ctx: Arc::clone(&self.ctx),
            powers: self.powers.iter().map(|(k, &p)| (k.clone(), -p)).collect(),
        }
    }

    /// Product of two monomials (exponent-wise sum with zero elimination).
    pub fn mul(&self, other: &YMonomial) -> YMonomial {
        debug_assert!(self.ctx.compatible(&other.ctx), "context mismatch in YMonomial::mul");
        let mut out = self.clone();
        for ((color, exps), &pow) in &other.powers {
            let p = out.powers.entry((*color, exps.clone())).or_insert(0);
            *p += pow;
            if *p == 0 {
                out.powers.remove(&(*color, exps.clone()));
            }
        }
        out
    }

    /// The ratio `self / other`.
    pub fn ratio(&self, other: &YMonomial) -> YMonomial {
        self.mul(&other.inv())
    }

    /// The shifted monomial `τ_σ m`: every shift key multiplied by `σ`.
    pub fn shift(&self, sigma: &ShiftMonomial) -> YMonomial {
        let mut out = YMonomial::one(&self.ctx);
        for (color, shift, pow) in self.entries() {
            out.insert(color, &(&shift * sigma), pow);
        }
        out
    }

    /// Drops every color not in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> YMonomial {
        YMonomial {
            ctx: Arc::clone(&self.ctx),
            powers: self
                .powers
                .iter()
                .filter(|((c, _), _)| keep.contains(c))
                .map(|(k, &p)| (k.clone(), p))
                .collect(),
        }
    }

    /// Re-expresses the monomial in another context (e.g. a resonance
    /// quotient); shifts that collide there have their powers merged.
    pub fn transfer(&self, ctx: &Arc<ParamContext>) -> Result<YMonomial> {
        let mut out = YMonomial::one(ctx);
        for (color, shift, pow) in self.entries() {
            out.insert(color, &shift.transfer(ctx)?, pow);
        }
        Ok(out)
    }

    /// Parses the display format: `1` or `*`-separated factors
    /// `Y(color,shift)` with an optional `^power` suffix.
    pub fn parse(ctx: &Arc<ParamContext>, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(YMonomial::one(ctx));
        }
        let mut m = YMonomial::one(ctx);
        for factor in split_top_level(s, '*') {
            let factor = factor.trim();
            let rest = factor
                .strip_prefix("Y(")
                .ok_or_else(|| Error::Parse(format!("expected Y(color,shift) in {factor:?}")))?;
            let close = rest
                .rfind(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in {factor:?}")))?;
            let inner = &rest[..close];
            let tail = rest[close + 1..].trim();
            let pow: i64 = if tail.is_empty() {
                1
            } else {
                tail.strip_prefix('^')
                    .and_then(|t| t.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad power suffix in {factor:?}")))?
            };
            let (color_str, shift_str) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected color,shift in {factor:?}")))?;
            let color: usize = color_str
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad color in {factor:?}")))?;
            m.insert(color, &ctx.parse(shift_str)?, pow);
        }
        Ok(m)
    }
}

/// Splits on `sep` at parenthesis depth zero only.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl PartialEq for YMonomial {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.fingerprint() == other.ctx.fingerprint() && self.powers == other.powers
    }
}
impl Eq for YMonomial {}

impl PartialOrd for YMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for YMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ctx
            .fingerprint()
            .cmp(&other.ctx.fingerprint())
            .then_with(|| self.powers.iter().cmp(other.powers.iter()))
    }
}

impl std::hash::Hash for YMonomial {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ctx.fingerprint().hash(state);
        for (k, p) in &self.powers {
            k.hash(state);
            p.hash(state);
        }
    }
}

impl fmt::Display for YMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (color, shift, pow) in self.entries() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "Y({color},{shift})")?;
            if pow != 1 {
                write!(f, "^{pow}")?;
            }
        }
        Ok(())
    }
}

crate::fmt_debug_via_display!(YMonomial);

// ---------------------------------------------------------------------------
// Characters
// ---------------------------------------------------------------------------

/// Whether a seed color expands downward (strings consumed from the top) or
/// upward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    /// The seed is the unique dominant monomial for this color.
    Dominant,
    /// The seed is the unique anti-dominant monomial for this color.
    AntiDominant,
}

/// Where a character came from: its seed monomial and the per-color polarity
/// the expansion used.  Needed to truncate or re-expand later.
#[derive(Clone, PartialEq, Eq)]
pub struct Provenance {
    /// The seed monomial the expansion started from.
    pub seed: YMonomial,
    /// Expansion direction per color; colors absent from the map default to
    /// dominant.
    pub polarity: BTreeMap<usize, Polarity>,
}

impl Provenance {
    /// Polarity of one color (dominant when unspecified).
    pub fn polarity_of(&self, color: usize) -> Polarity {
        self.polarity.get(&color).copied().unwrap_or(Polarity::Dominant)
    }

    /// Merges two provenance records for a product of characters: seeds
    /// multiply, polarity maps unite.  `None` when the maps disagree on a
    /// shared color.
    pub fn merge(a: Option<&Provenance>, b: Option<&Provenance>) -> Option<Provenance> {
        let (a, b) = (a?, b?);
        let mut polarity = a.polarity.clone();
        for (&c, &p) in &b.polarity {
            match polarity.insert(c, p) {
                Some(prev) if prev != p => return None,
                _ => {}
            }
        }
        Some(Provenance { seed: a.seed.mul(&b.seed), polarity })
    }
}

/// Completion status of a character.
#[derive(Clone, PartialEq, Eq)]
pub enum CharStatus {
    /// A finite, fully expanded sum.
    Complete,
    /// A finite window of an infinite sum; `frontier` lists the monomials
    /// that still carry unexpanded positive variables.
    Window { frontier: BTreeSet<YMonomial> },
    /// Construction failed; the reason explains why.
    Failed { reason: String },
}

impl fmt::Debug for CharStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharStatus::Complete => write!(f, "complete"),
            CharStatus::Window { frontier } => write!(f, "window({} frontier)", frontier.len()),
            CharStatus::Failed { reason } => write!(f, "failed({reason})"),
        }
    }
}

/// A multiset of Y-monomials over a fixed Cartan matrix, with status and
/// optional seed provenance.  Immutable after construction.
#[derive(Clone)]
pub struct Character {
    cartan: Arc<CartanMatrix>,
    monomials: BTreeMap<YMonomial, u32>,
    status: CharStatus,
    provenance: Option<Provenance>,
}

impl Character {
    /// Builds a character from `(monomial, multiplicity)` pairs.
    pub fn new(
        cartan: Arc<CartanMatrix>,
        monomials: Vec<(YMonomial, u32)>,
        status: CharStatus,
    ) -> Result<Character> {
        let mut map = BTreeMap::new();
        for (m, mult) in monomials {
            ensure_same_ctx(cartan.ctx(), m.ctx())?;
            if mult == 0 {
                continue;
            }
            *map.entry(m).or_insert(0) += mult;
        }
        Ok(Character { cartan, monomials: map, status, provenance: None })
    }

    /// Builds a character from distinct monomials, multiplicity 1 each.
    pub fn from_set(
        cartan: Arc<CartanMatrix>,
        monomials: Vec<YMonomial>,
        status: CharStatus,
    ) -> Result<Character> {
        Character::new(cartan, monomials.into_iter().map(|m| (m, 1)).collect(), status)
    }

    /// The one-monomial character `χ = m`, complete.
    pub fn single(cartan: Arc<CartanMatrix>, m: YMonomial) -> Result<Character> {
        Character::from_set(cartan, vec![m], CharStatus::Complete)
    }

    /// Attaches a provenance record.
    pub fn with_provenance(mut self, p: Provenance) -> Character {
        self.provenance = Some(p);
        self
    }

    /// The Cartan matrix the character lives over.
    pub fn cartan(&self) -> &Arc<CartanMatrix> {
        &self.cartan
    }

    /// The parameter context.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        self.cartan.ctx()
    }

    /// The status marker.
    pub fn status(&self) -> &CharStatus {
        &self.status
    }

    /// True when status is `Complete`.
    pub fn is_complete(&self) -> bool {
        matches!(self.status, CharStatus::Complete)
    }

    /// The provenance record, if any.
    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Total number of monomials, counted with multiplicity.
    pub fn monomial_count(&self) -> usize {
        self.monomials.values().map(|&m| m as usize).sum()
    }

    /// Number of distinct monomials.
    pub fn support_len(&self) -> usize {
        self.monomials.len()
    }

    /// Iterates `(monomial, multiplicity)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&YMonomial, u32)> + '_ {
        self.monomials.iter().map(|(m, &c)| (m, c))
    }

    /// Multiplicity of a monomial (0 when absent).
    pub fn multiplicity(&self, m: &YMonomial) -> u32 {
        self.monomials.get(m).copied().unwrap_or(0)
    }

    /// True when the monomial occurs.
    pub fn contains(&self, m: &YMonomial) -> bool {
        self.monomials.contains_key(m)
    }

    /// True when all multiplicities are 1.
    pub fn is_multiplicity_free(&self) -> bool {
        self.monomials.values().all(|&c| c == 1)
    }

    /// The degree vector (one entry per color), or `None` when the monomials
    /// do not share a common degree.
    pub fn degrees(&self) -> Option<Vec<i64>> {
        let mut it = self.monomials.keys();
        let first = it.next()?;
        let degs: Vec<i64> = self.cartan.colors().iter().map(|&c| first.degree(c)).collect();
        for m in it {
            for (pos, &c) in self.cartan.colors().iter().enumerate() {
                if m.degree(c) != degs[pos] {
                    return None;
                }
            }
        }
        Some(degs)
    }

    /// Sum of two characters over the same matrix: multiset union.
    pub fn add(&self, other: &Character) -> Result<Character> {
        if self.cartan != other.cartan {
            return Err(Error::ContextMismatch("sum of characters over different matrices".into()));
        }
        let mut map = self.monomials.clone();
        for (m, &c) in &other.monomials {
            *map.entry(m.clone()).or_insert(0) += c;
        }
        let status = match (&self.status, &other.status) {
            (CharStatus::Failed { reason }, _) | (_, CharStatus::Failed { reason }) => {
                CharStatus::Failed { reason: reason.clone() }
            }
            (CharStatus::Window { frontier: a }, CharStatus::Window { frontier: b }) => {
                CharStatus::Window { frontier: a.union(b).cloned().collect() }
            }
            (CharStatus::Window { frontier }, _) | (_, CharStatus::Window { frontier }) => {
                CharStatus::Window { frontier: frontier.clone() }
            }
            _ => CharStatus::Complete,
        };
        Ok(Character { cartan: self.cartan.clone(), monomials: map, status, provenance: None })
    }

    /// Product of two characters: all pairwise monomial products, counted
    /// with multiplicity.  Provenance records merge when both are present
    /// and their polarities agree.
    pub fn mul(&self, other: &Character) -> Result<Character> {
        if self.cartan != other.cartan {
            return Err(Error::ContextMismatch(
                "product of characters over different matrices".into(),
            ));
        }
        let mut map: BTreeMap<YMonomial, u32> = BTreeMap::new();
        for (m, &cm) in &self.monomials {
            for (n, &cn) in &other.monomials {
                *map.entry(m.mul(n)).or_insert(0) += cm * cn;
            }
        }
        let status = match (&self.status, &other.status) {
            (CharStatus::Failed { reason }, _) | (_, CharStatus::Failed { reason }) => {
                CharStatus::Failed { reason: reason.clone() }
            }
            (CharStatus::Complete, CharStatus::Complete) => CharStatus::Complete,
            _ => {
                // a window times anything is a window; the products involving a
                // frontier monomial are themselves unfinished
                let mut frontier = BTreeSet::new();
                if let CharStatus::Window { frontier: fa } = &self.status {
                    for fm in fa {
                        for n in other.monomials.keys() {
                            frontier.insert(fm.mul(n));
                        }
                    }
                }
                if let CharStatus::Window { frontier: fb } = &other.status {
                    for fm in fb {
                        for m in self.monomials.keys() {
                            frontier.insert(m.mul(fm));
                        }
                    }
                }
                CharStatus::Window { frontier }
            }
        };
        let provenance = Provenance::merge(self.provenance.as_ref(), other.provenance.as_ref());
        Ok(Character { cartan: self.cartan.clone(), monomials: map, status, provenance })
    }

    /// Multiplies every monomial by a fixed monomial.
    pub fn mul_monomial(&self, m: &YMonomial) -> Character {
        let monomials = self.monomials.iter().map(|(n, &c)| (n.mul(m), c)).collect();
        let status = match &self.status {
            CharStatus::Window { frontier } => {
                CharStatus::Window { frontier: frontier.iter().map(|f| f.mul(m)).collect() }
            }
            s => s.clone(),
        };
        Character {
            cartan: self.cartan.clone(),
            monomials,
            status,
            provenance: self.provenance.as_ref().map(|p| Provenance {
                seed: p.seed.mul(m),
                polarity: p.polarity.clone(),
            }),
        }
    }

    /// The shifted character `τ_σ χ`.
    pub fn shift(&self, sigma: &ShiftMonomial) -> Character {
        let monomials = self.monomials.iter().map(|(m, &c)| (m.shift(sigma), c)).collect();
        let status = match &self.status {
            CharStatus::Window { frontier } => {
                CharStatus::Window { frontier: frontier.iter().map(|f| f.shift(sigma)).collect() }
            }
            s => s.clone(),
        };
        Character {
            cartan: self.cartan.clone(),
            monomials,
            status,
            provenance: self.provenance.as_ref().map(|p| Provenance {
                seed: p.seed.shift(sigma),
                polarity: p.polarity.clone(),
            }),
        }
    }

    /// The restriction `ρ_J χ`: drop all colors outside `keep`;
    /// multiplicities accumulate.  Errors when the Cartan submatrix is
    /// degenerate.
    pub fn restrict(&self, keep: &[usize]) -> Result<Character> {
        let sub = self.cartan.restrict(keep)?;
        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let mut map: BTreeMap<YMonomial, u32> = BTreeMap::new();
        for (m, &c) in &self.monomials {
            *map.entry(m.restrict(&keep_set)).or_insert(0) += c;
        }
        let status = match &self.status {
            CharStatus::Window { frontier } => CharStatus::Window {
                frontier: frontier.iter().map(|f| f.restrict(&keep_set)).collect(),
            },
            s => s.clone(),
        };
        Ok(Character { cartan: sub, monomials: map, status, provenance: None })
    }

    /// Moves the character into another context (resonance quotient);
    /// monomials that collide there have their multiplicities added.
    pub fn transfer(&self, ctx: &Arc<ParamContext>) -> Result<Character> {
        let cartan = self.cartan.transfer(ctx)?;
        let mut map: BTreeMap<YMonomial, u32> = BTreeMap::new();
        for (m, &c) in &self.monomials {
            *map.entry(m.transfer(ctx)?).or_insert(0) += c;
        }
        let status = match &self.status {
            CharStatus::Window { frontier } => {
                let mut fr = BTreeSet::new();
                for f in frontier {
                    fr.insert(f.transfer(ctx)?);
                }
                CharStatus::Window { frontier: fr }
            }
            s => s.clone(),
        };
        let provenance = match &self.provenance {
            Some(p) => Some(Provenance { seed: p.seed.transfer(ctx)?, polarity: p.polarity.clone() }),
            None => None,
        };
        Ok(Character { cartan, monomials: map, status, provenance })
    }

    /// True when both characters have the same monomial multiset.
    pub fn same_monomials(&self, other: &Character) -> bool {
        self.monomials == other.monomials
    }
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        self.cartan == other.cartan
            && self.monomials == other.monomials
            && self.status == other.status
    }
}
impl Eq for Character {}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} monomials, {:?}", self.monomial_count(), self.status)?;
        for (m, c) in self.iter() {
            if c == 1 {
                writeln!(f, "{m}")?;
            } else {
                writeln!(f, "{m}  x{c}")?;
            }
        }
        Ok(())
    }
}

crate::fmt_debug_via_display!(Character);

// ---------------------------------------------------------------------------
// The colored graph
// ---------------------------------------------------------------------------

/// A directed edge `m →^{color,σ} m′` of a character graph, with endpoints
/// given as vertex indices.
#[derive(Clone)]
pub struct GraphEdge {
    /// Index of the source vertex.
    pub from: usize,
    /// Index of the target vertex.
    pub to: usize,
    /// The edge color `i`.
    pub color: usize,
    /// The root shift `σ` with `to = from · A_{i,σ}⁻¹`.
    pub shift: ShiftMonomial,
}

/// The colored graph of a character: distinct monomials as vertices (with
/// multiplicities), affine-root moves as edges.
pub struct CharGraph {
    vertices: Vec<(YMonomial, u32)>,
    edges: Vec<GraphEdge>,
}

impl CharGraph {
    /// The vertices in canonical order, with multiplicities.
    pub fn vertices(&self) -> &[(YMonomial, u32)] {
        &self.vertices
    }

    /// All edges.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Index of a monomial among the vertices.
    pub fn index_of(&self, m: &YMonomial) -> Option<usize> {
        self.vertices.binary_search_by(|(v, _)| v.cmp(m)).ok()
    }

    /// True when vertex `v` has no incoming edges of the color.
    pub fn is_dominant(&self, v: usize, color: usize) -> bool {
        !self.edges.iter().any(|e| e.to == v && e.color == color)
    }

    /// True when vertex `v` has no outgoing edges of the color.
    pub fn is_anti_dominant(&self, v: usize, color: usize) -> bool {
        !self.edges.iter().any(|e| e.from == v && e.color == color)
    }

    /// Vertices dominant for every color (graph sources).
    pub fn dominant_vertices(&self, colors: &[usize]) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| colors.iter().all(|&c| self.is_dominant(v, c)))
            .collect()
    }

    /// Vertices anti-dominant for every color (graph sinks).
    pub fn anti_dominant_vertices(&self, colors: &[usize]) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| colors.iter().all(|&c| self.is_anti_dominant(v, c)))
            .collect()
    }

    /// Connected components (edges taken undirected), as sorted index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            if a != b {
                parent[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// True when the graph is connected (a simplicity certificate).
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Component sizes counted with multiplicity, descending.
    ///
    /// A component whose monomials all share one multiplicity `d` stands for
    /// `d` identical copies of a simple character and is reported as `d`
    /// entries of the value-level size; otherwise the total is reported as a
    /// single entry.  Copies of the empty monomial in particular come out as
    /// separate size-1 components.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for comp in self.components() {
            let mults: BTreeSet<u32> = comp.iter().map(|&v| self.vertices[v].1).collect();
            if mults.len() == 1 {
                let d = *mults.iter().next().expect("nonempty") as usize;
                sizes.extend(std::iter::repeat(comp.len()).take(d));
            } else {
                sizes.push(comp.iter().map(|&v| self.vertices[v].1 as usize).sum());
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Graphviz DOT rendering: edge colors follow the palette
    /// 0 → black, 1 → blue, 2 → red, 3 → green (gray beyond), and each edge
    /// is labelled by its inverse affine root.
    pub fn to_dot(&self) -> String {
        fn palette(color: usize) -> &'static str {
            match color {
                0 => "black",
                1 => "blue",
                2 => "red",
                3 => "green",
                _ => "gray40",
            }
        }
        let mut out = String::from("digraph character {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n");
        for (i, (m, mult)) in self.vertices.iter().enumerate() {
            let label = if *mult == 1 { m.to_string() } else { format!("{m} x{mult}") };
            out.push_str(&format!("  n{i} [label=\"{}\"];\n", label.replace('"', "\\\"")));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  n{} -> n{} [color={}, label=\"A[{},{}]^-1\"];\n",
                e.from,
                e.to,
                palette(e.color),
                e.color,
                e.shift
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the colored graph by exhaustive pairing: for every monomial `m`,
/// color `i` and (+1)-variable `Y_{i,μ}` of `m`, the candidate target
/// `m·A_{i,μq⁻¹}⁻¹` yields an edge when it occurs in the character and
/// contains `Y_{i,μq⁻²}` with power +1.
pub fn build_graph(chi: &Character) -> Result<CharGraph> {
    let cartan = chi.cartan();
    let q = cartan.ctx().var("q")?;
    let vertices: Vec<(YMonomial, u32)> = chi.iter().map(|(m, c)| (m.clone(), c)).collect();
    let index: BTreeMap<&YMonomial, usize> =
        vertices.iter().enumerate().map(|(i, (m, _))| (m, i)).collect();
    let mut edges = Vec::new();
    for (vi, (m, _)) in vertices.iter().enumerate() {
        for &color in cartan.colors() {
            for (mu, pow) in m.color_content(color) {
                if pow != 1 {
                    continue;
                }
                let sigma = &mu / &q;
                let root = cartan.affine_root(color, &sigma)?;
                let target = m.mul(&root.monomial.inv());
                if let Some(&ti) = index.get(&target) {
                    if target.power(color, &(&sigma / &q)) == 1 {
                        edges.push(GraphEdge { from: vi, to: ti, color, shift: sigma });
                    }
                }
            }
        }
    }
    Ok(CharGraph { vertices, edges })
}

// ---------------------------------------------------------------------------
// Block decomposition
// ---------------------------------------------------------------------------

/// One shifted elementary block inside a product, reported through full
/// character monomials: `members[j]` varies this block's gap while every
/// other block of the product stays at its top, so consecutive members
/// differ by exactly `A_{color, σq^{−k+2j+1}}⁻¹`.
#[derive(Clone)]
pub struct Block {
    /// The block color.
    pub color: usize,
    /// The block shift `σ` (ladder positions are `σq^{−k+2s}`).
    pub shift: ShiftMonomial,
    /// `k+1`, the number of members.
    pub length: usize,
    /// The members `m_0 … m_k`, top (dominant) first.
    pub members: Vec<YMonomial>,
}

/// A product of mutually generic blocks of one color, together with all the
/// monomials it contributes: one per choice of gap positions.
pub struct BlockProduct {
    /// The common color.
    pub color: usize,
    /// The factor blocks (possibly none, for a monomial without positive
    /// variables of this color).
    pub blocks: Vec<Block>,
    /// All `(gap positions, monomial)` pairs, gap vector indexed like
    /// `blocks`, in mixed-radix order.
    pub members: Vec<(Vec<usize>, YMonomial)>,
}

/// The unique expression of a character as a sum of block products of one
/// color.
pub struct ColorDecomposition {
    /// The color the decomposition refers to.
    pub color: usize,
    /// The block products, in peeling order.
    pub products: Vec<BlockProduct>,
}

impl ColorDecomposition {
    /// The largest block length occurring (1 when no blocks at all).
    pub fn max_block_length(&self) -> usize {
        self.products
            .iter()
            .flat_map(|p| p.blocks.iter().map(|b| b.length))
            .max()
            .unwrap_or(1)
    }
}

/// Decomposes a character into products of mutually generic shifted
/// elementary blocks of the given color.
///
/// Follows the peeling argument behind the uniqueness lemma: a finite
/// character always contains a monomial with no incoming connection of the
/// color — a product of block tops.  Its maximal `q²`-strings of positive
/// color variables determine the blocks; all combination members must be
/// present and are removed, and the process repeats.  Ties between peelable
/// monomials are broken by lexicographic monomial order, which makes the
/// output deterministic (and, by the lemma, it is unique anyway).
///
/// Fails with a witness when the character has repeated monomials, a
/// non-generic monomial, a negative power at a ladder foot, or a missing
/// combination member — any of which certifies the character is not tame.
pub fn decompose_color_blocks(chi: &Character, color: usize) -> Result<ColorDecomposition> {
    let cartan = chi.cartan();
    cartan.index_of(color)?;
    let q = cartan.ctx().var("q")?;
    if let Some((m, _)) = chi.iter().find(|(_, c)| *c > 1) {
        return Err(Error::NotTame(format!(
            "repeated monomial {m}: block decomposition requires distinct monomials"
        )));
    }

    // value-level connections of this color, as index pairs
    let support: Vec<YMonomial> = chi.iter().map(|(m, _)| m.clone()).collect();
    let index: BTreeMap<&YMonomial, usize> =
        support.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); support.len()];
    for (vi, m) in support.iter().enumerate() {
        for (mu, pow) in m.color_content(color) {
            if pow != 1 {
                continue;
            }
            let sigma = &mu / &q;
            let root = cartan.affine_root(color, &sigma)?;
            let target = m.mul(&root.monomial.inv());
            if let Some(&ti) = index.get(&target) {
                if target.power(color, &(&sigma / &q)) == 1 {
                    incoming[ti].push(vi);
                }
            }
        }
    }

    let mut alive: Vec<bool> = vec![true; support.len()];
    let mut alive_count = support.len();
    let mut products = Vec::new();
    while alive_count > 0 {
        // the Lemma's peelable case: no incoming connection from a live monomial
        let top = (0..support.len())
            .filter(|&v| alive[v] && !incoming[v].iter().any(|&u| alive[u]))
            .min_by(|&a, &b| support[a].cmp(&support[b]))
            .ok_or_else(|| {
                Error::NotTame(format!(
                    "no peelable monomial of color {color} remains: cyclic connection structure"
                ))
            })?;
        let m = &support[top];
        let product = peel_product(chi, color, m, &q)?;
        for (_, member) in &product.members {
            let &vi = index.get(member).ok_or_else(|| {
                Error::NotTame(format!(
                    "monomial {member} demanded by the color-{color} blocks of {m} is missing"
                ))
            })?;
            if !alive[vi] {
                return Err(Error::NotTame(format!(
                    "monomial {member} is claimed by two different color-{color} block products"
                )));
            }
            alive[vi] = false;
            alive_count -= 1;
        }
        products.push(product);
    }
    Ok(ColorDecomposition { color, products })
}

/// Expands the block product whose top monomial is `m`: reads the maximal
/// positive `q²`-strings, forms one block per string, and emits every
/// gap-position combination.
fn peel_product(
    chi: &Character,
    color: usize,
    m: &YMonomial,
    q: &ShiftMonomial,
) -> Result<BlockProduct> {
    let cartan = chi.cartan();
    let qq = q * q;
    let content = m.color_content(color);
    for (mu, pow) in &content {
        if *pow > 1 {
            return Err(Error::NotTame(format!(
                "monomial {m} is not generic: Y({color},{mu}) has power {pow}"
            )));
        }
    }
    let positives: BTreeSet<ShiftMonomial> =
        content.iter().filter(|(_, p)| *p == 1).map(|(mu, _)| mu.clone()).collect();

    // maximal q²-strings: walk up from each bottom (a positive with nothing
    // one rung below it)
    let mut strings: Vec<(ShiftMonomial, usize)> = Vec::new(); // (bottom, string length k)
    for mu in &positives {
        if positives.contains(&(mu / &qq)) {
            continue; // not a bottom
        }
        let mut len = 1usize;
        let mut cur = mu.clone();
        loop {
            let up = &cur * &qq;
            if up == *mu {
                return Err(Error::NotTame(format!(
                    "the q²-ladder through Y({color},{mu}) closes into a cycle in this context"
                )));
            }
            if !positives.contains(&up) {
                break;
            }
            cur = up;
            len += 1;
            if len > positives.len() {
                return Err(Error::NotTame(format!(
                    "the q²-ladder through Y({color},{mu}) does not terminate in this context"
                )));
            }
        }
        strings.push((mu.clone(), len));
    }

    // each string of length k is the top of a block of length k+1 whose
    // ladder adds one foot position below the string
    struct ProtoBlock {
        foot: ShiftMonomial,
        k: usize,
    }
    let mut protos = Vec::new();
    for (bottom, k) in strings {
        let foot = &bottom / &qq;
        if m.power(color, &foot) < 0 {
            return Err(Error::NotTame(format!(
                "monomial {m} carries Y({color},{foot})^-1 at the foot of a color-{color} string"
            )));
        }
        protos.push(ProtoBlock { foot, k });
    }
    protos.sort_by(|a, b| a.foot.cmp(&b.foot));

    // the inverse-root step ladders per block, precomputed
    let mut steps: Vec<Vec<YMonomial>> = Vec::new(); // steps[s][t] = A^{-1}_{color, foot·q^{2t+1}}
    for pb in &protos {
        let mut col = Vec::new();
        for t in 0..pb.k {
            let tau = &pb.foot * &q.pow(2 * t as i64 + 1);
            col.push(cartan.affine_root(color, &tau)?.monomial.inv());
        }
        steps.push(col);
    }

    // all gap combinations, mixed-radix counting
    let radices: Vec<usize> = protos.iter().map(|p| p.k + 1).collect();
    let mut members = Vec::new();
    let mut gaps = vec![0usize; protos.len()];
    loop {
        let mut member = m.clone();
        for (s, &g) in gaps.iter().enumerate() {
            for t in 0..g {
                member = member.mul(&steps[s][t]);
            }
        }
        if !member.is_generic() {
            return Err(Error::NotTame(format!(
                "block member {member} of the color-{color} product at {m} is not generic"
            )));
        }
        members.push((gaps.clone(), member));
        // increment
        let mut pos = protos.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            gaps[pos] += 1;
            if gaps[pos] < radices[pos] {
                break;
            }
            gaps[pos] = 0;
        }
        if gaps.iter().all(|&g| g == 0) {
            break;
        }
    }

    // per-block member lists: vary one gap, keep the others at top
    let blocks: Vec<Block> = protos
        .iter()
        .enumerate()
        .map(|(s, pb)| {
            let mut mem = vec![m.clone()];
            let mut cur = m.clone();
            for t in 0..pb.k {
                cur = cur.mul(&steps[s][t]);
                mem.push(cur.clone());
            }
            Block {
                color,
                shift: &pb.foot * &q.pow(pb.k as i64),
                length: pb.k + 1,
                members: mem,
            }
        })
        .collect();

    Ok(BlockProduct { color, blocks, members })
}

// ---------------------------------------------------------------------------
// Classification predicates
// ---------------------------------------------------------------------------

/// True when block decomposition succeeds for every color.
///
/// Windowed truncations of infinite characters may fail spuriously: blocks
/// cut by the window boundary are incomplete.  The predicate reports on the
/// monomial set exactly as stored.
pub fn is_tame(chi: &Character) -> bool {
    if matches!(chi.status(), CharStatus::Failed { .. }) {
        return false;
    }
    chi.cartan()
        .colors()
        .iter()
        .all(|&c| decompose_color_blocks(chi, c).is_ok())
}

/// True when the character has degree zero and every occurring block has
/// length at most 2.
pub fn is_slim(chi: &Character) -> bool {
    match chi.degrees() {
        Some(d) if d.iter().all(|&x| x == 0) => {}
        _ => return false,
    }
    chi.cartan().colors().iter().all(|&c| {
        decompose_color_blocks(chi, c).map(|d| d.max_block_length() <= 2).unwrap_or(false)
    })
}

/// True when every monomial is `i`-linear for every color `i`: its color-`i`
/// content is either empty or a single `Y_{i,σ1} Y_{i,σ2}⁻¹` pair.
pub fn is_linear(chi: &Character) -> bool {
    chi.iter().all(|(m, _)| {
        chi.cartan().colors().iter().all(|&c| {
            let content = m.color_content(c);
            let pos = content.iter().filter(|(_, p)| *p == 1).count();
            let neg = content.iter().filter(|(_, p)| *p == -1).count();
            content.iter().all(|(_, p)| p.abs() == 1) && pos <= 1 && neg <= 1 && pos == neg
        })
    })
}

/// Tests whether a finite complete degree-zero character is prime, i.e. not
/// a product of two degree-zero characters.
///
/// The search space is organized by the co-movement partition of the
/// variable support: variables touched by one connection step (an affine
/// root linking two monomials of the character) must end up in the same
/// factor, so only unions of co-movement classes can split off.  Every
/// bipartition of the classes is then tested exactly: the multiset of
/// (projection, complement-projection) pairs must have product form with
/// both projections tame degree-zero characters.
///
/// By convention the constant character (empty variable support) is not
/// prime, like a unit.
pub fn is_prime(chi: &Character) -> Result<bool> {
    match chi.status() {
        CharStatus::Complete => {}
        CharStatus::Window { .. } => {
            return Err(Error::Invalid(
                "is_prime is undefined on windowed characters: the full sum is infinite".into(),
            ))
        }
        CharStatus::Failed { reason } => {
            return Err(Error::Invalid(format!("is_prime on failed character: {reason}")))
        }
    }
    match chi.degrees() {
        Some(d) if d.iter().all(|&x| x == 0) => {}
        _ => return Err(Error::Invalid("is_prime is defined for degree-zero characters".into())),
    }

    // variable support and co-movement union-find
    let mut vars: BTreeMap<(usize, Vec<i64>), usize> = BTreeMap::new();
    for (m, _) in chi.iter() {
        for (color, shift, _) in m.entries() {
            let next = vars.len();
            vars.entry((color, shift.exps().to_vec())).or_insert(next);
        }
    }
    if vars.is_empty() {
        return Ok(false);
    }
    let n = vars.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let graph = build_graph(chi)?;
    let cartan = chi.cartan();
    for e in graph.edges() {
        let root = cartan.affine_root(e.color, &e.shift)?;
        let mut touched: Vec<usize> = Vec::new();
        for (color, shift, _) in root.monomial.entries() {
            if let Some(&id) = vars.get(&(color, shift.exps().to_vec())) {
                touched.push(id);
            }
        }
        for w in touched.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<(usize, Vec<i64>)>> = BTreeMap::new();
    for (key, &id) in &vars {
        let root = find(&mut parent, id);
        classes.entry(root).or_default().push(key.clone());
    }
    let classes: Vec<Vec<(usize, Vec<i64>)>> = classes.into_values().collect();
    if classes.len() <= 1 {
        return Ok(true);
    }

    // try every bipartition of the co-movement classes
    let k = classes.len();
    'partitions: for mask in 1..(1u64 << (k - 1)) {
        let mut left: BTreeSet<(usize, Vec<i64>)> = BTreeSet::new();
        for (ci, class) in classes.iter().enumerate() {
            if mask & (1 << ci) != 0 {
                left.extend(class.iter().cloned());
            }
        }
        // project every monomial and group
        let mut groups: BTreeMap<YMonomial, BTreeMap<YMonomial, u32>> = BTreeMap::new();
        for (m, mult) in chi.iter() {
            let mut lm = YMonomial::one(chi.ctx());
            let mut rm = YMonomial::one(chi.ctx());
            for (color, shift, pow) in m.entries() {
                if left.contains(&(color, shift.exps().to_vec())) {
                    lm.insert(color, &shift, pow);
                } else {
                    rm.insert(color, &shift, pow);
                }
            }
            *groups.entry(lm).or_default().entry(rm).or_insert(0) += mult;
        }
        // product form: all groups share one right-hand multiset up to a
        // scalar; extract candidate factors and verify the outer product
        let rights: Vec<&BTreeMap<YMonomial, u32>> = groups.values().collect();
        let first = rights[0];
        for r in &rights[1..] {
            if r.len() != first.len() || !r.keys().eq(first.keys()) {
                continue 'partitions;
            }
        }
        // counts must be rank-1: c(l,r) = a(l)·b(r)
        let b0: Vec<u32> = first.values().copied().collect();
        let g = b0.iter().fold(0u32, |acc, &x| num::integer::gcd(acc, x));
        let b: Vec<u32> = b0.iter().map(|&x| x / g).collect();
        let mut lefts: Vec<(YMonomial, u32)> = Vec::new();
        for (lm, right) in &groups {
            let counts: Vec<u32> = right.values().copied().collect();
            // a(l) = counts[j] / b[j], consistent over j
            if counts[0] % b[0] != 0 {
                continue 'partitions;
            }
            let a = counts[0] / b[0];
            if counts.iter().zip(&b).any(|(&c, &bb)| c != a * bb) {
                continue 'partitions;
            }
            lefts.push((lm.clone(), a));
        }
        let rights_char: Vec<(YMonomial, u32)> =
            first.keys().cloned().zip(b.iter().copied()).collect();
        // both factors must be degree-zero tame characters
        let left_char =
            Character::new(chi.cartan().clone(), lefts, CharStatus::Complete)?;
        let right_char =
            Character::new(chi.cartan().clone(), rights_char, CharStatus::Complete)?;
        let zero = |c: &Character| {
            matches!(c.degrees(), Some(d) if d.iter().all(|&x| x == 0))
        };
        if zero(&left_char) && zero(&right_char) && is_tame(&left_char) && is_tame(&right_char) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Factorization over affine roots and depth
// ---------------------------------------------------------------------------

/// Writes `m/n` as a product of shifted affine roots, returning the (unique)
/// exponent of each `A_{i,σ}` used; fails when no integer combination exists.
///
/// The workhorse is a greedy peel: order variable positions lexicographically
/// by shift exponents.  In any integer combination of shifted roots the
/// largest position present cannot cancel — it is the largest position of
/// every root contributing there, and distinct shifts of one root color have
/// distinct largest positions.  So the largest surviving position pins down
/// one shifted root and its exact exponent; divide it out and repeat.  When
/// several root colors could own the largest position the peel backtracks,
/// and if it gives up entirely we fall back to an exact linear system over
/// harvested candidate shifts.  Either way the result is verified by
/// reconstruction before being returned.
pub fn factor_over_affine_roots(
    cartan: &Arc<CartanMatrix>,
    m: &YMonomial,
    n: &YMonomial,
) -> Result<BTreeMap<(usize, ShiftMonomial), i64>> {
    let ratio = m.ratio(n);
    if ratio.is_one() {
        return Ok(BTreeMap::new());
    }
    if let Some(factors) = peel_over_affine_roots(cartan, &ratio)? {
        return Ok(factors);
    }
    factor_via_linear_system(cartan, &ratio).map_err(|e| match e {
        Error::Inconsistent(_) => {
            Error::Inconsistent(format!("{m} / {n} is not a product of shifted affine roots"))
        }
        other => other,
    })
}

/// Greedy factorization by repeatedly explaining the lexicographically
/// largest surviving variable position.  Returns `Ok(None)` when the peel
/// cannot decide (so a caller may try something slower), `Ok(Some(..))` on
/// success.
fn peel_over_affine_roots(
    cartan: &Arc<CartanMatrix>,
    ratio: &YMonomial,
) -> Result<Option<BTreeMap<(usize, ShiftMonomial), i64>>> {
    let ctx = cartan.ctx();
    let one = ctx.one();
    // for each root color: the position of A_{j,1} that stays maximal under
    // every shift (shifting adds a constant vector to all exponent tuples)
    let mut tops: Vec<(usize, (usize, ShiftMonomial, i64))> = Vec::new();
    for &j in cartan.colors() {
        let base = cartan.affine_root(j, &one)?.monomial;
        let top = base
            .entries()
            .max_by(|a, b| a.1.exps().cmp(b.1.exps()).then(a.0.cmp(&b.0)))
            .expect("affine roots are never empty");
        tops.push((j, top));
    }

    fn recurse(
        cartan: &Arc<CartanMatrix>,
        tops: &[(usize, (usize, ShiftMonomial, i64))],
        residual: &YMonomial,
        budget: &mut u32,
        acc: &mut BTreeMap<(usize, ShiftMonomial), i64>,
    ) -> Result<bool> {
        if residual.is_one() {
            return Ok(true);
        }
        if *budget == 0 {
            return Ok(false);
        }
        *budget -= 1;
        let (color, shift, pow) = residual
            .entries()
            .max_by(|a, b| a.1.exps().cmp(b.1.exps()).then(a.0.cmp(&b.0)))
            .expect("non-trivial residual has entries");
        for (j, (ti, tshift, tpow)) in tops {
            if *ti != color || pow % tpow != 0 {
                continue;
            }
            let tau = &shift / tshift;
            let exponent = pow / tpow;
            let root = cartan.affine_root(*j, &tau)?.monomial;
            let mut next = residual.clone();
            for _ in 0..exponent.abs() {
                next = if exponent > 0 { next.ratio(&root) } else { next.mul(&root) };
            }
            let key = (*j, tau);
            *acc.entry(key.clone()).or_insert(0) += exponent;
            if recurse(cartan, tops, &next, budget, acc)? {
                return Ok(true);
            }
            let slot = acc.get_mut(&key).expect("exponent recorded above");
            *slot -= exponent;
            if *slot == 0 {
                acc.remove(&key);
            }
        }
        Ok(false)
    }

    let mut acc = BTreeMap::new();
    let mut budget = 512;
    if recurse(cartan, &tops, ratio, &mut budget, &mut acc)? {
        acc.retain(|_, e| *e != 0);
        // authoritative verification by reconstruction
        let mut check = YMonomial::one(ctx);
        for ((j, tau), e) in &acc {
            let root = cartan.affine_root(*j, tau)?.monomial;
            for _ in 0..e.abs() {
                check = if *e > 0 { check.mul(&root) } else { check.mul(&root.inv()) };
            }
        }
        if check == *ratio {
            return Ok(Some(acc));
        }
    }
    Ok(None)
}

/// Exact-linear-system fallback: harvest candidate shifts from every variable
/// occurrence of the ratio, close `q²`-ladder gaps, and solve for the root
/// exponents over ℚ.
fn factor_via_linear_system(
    cartan: &Arc<CartanMatrix>,
    ratio: &YMonomial,
) -> Result<BTreeMap<(usize, ShiftMonomial), i64>> {
    let ctx = cartan.ctx();
    let q = ctx.var("q")?;
    let qq = &q * &q;

    // candidate shifts per root color
    let mut candidates: BTreeSet<(usize, ShiftMonomial)> = BTreeSet::new();
    for (j, mu, _) in ratio.entries() {
        for &i in cartan.colors() {
            let s = cartan.sigma_entry(i, j)?;
            if i == j {
                candidates.insert((i, &mu / &q));
                candidates.insert((i, &mu * &q));
            } else if !s.is_one() {
                candidates.insert((i, &mu / s));
                candidates.insert((i, &mu * s));
            }
        }
    }
    // ladder closure: fill q²-gaps between same-color candidates
    let limit = 2 * ratio.num_entries() + 8;
    let snapshot: Vec<(usize, ShiftMonomial)> = candidates.iter().cloned().collect();
    for (i, a) in &snapshot {
        for (i2, b) in &snapshot {
            if i != i2 || a >= b {
                continue;
            }
            let mut cur = a.clone();
            let mut path = Vec::new();
            for _ in 0..limit {
                cur = &cur * &qq;
                if cur == *b {
                    for p in path.drain(..) {
                        candidates.insert((*i, p));
                    }
                    break;
                }
                path.push(cur.clone());
            }
        }
    }

    // exact linear system: root exponents explaining the ratio
    let cand: Vec<(usize, ShiftMonomial)> = candidates.into_iter().collect();
    let roots: Vec<YMonomial> = cand
        .iter()
        .map(|(i, s)| cartan.affine_root(*i, s).map(|r| r.monomial))
        .collect::<Result<_>>()?;
    let mut keys: BTreeMap<(usize, Vec<i64>), usize> = BTreeMap::new();
    for r in roots.iter().chain(std::iter::once(ratio)) {
        for (color, shift, _) in r.entries() {
            let next = keys.len();
            keys.entry((color, shift.exps().to_vec())).or_insert(next);
        }
    }
    let rows = keys.len();
    let cols = cand.len();
    let mut a = vec![vec![BigRational::zero(); cols + 1]; rows];
    for (ci, r) in roots.iter().enumerate() {
        for (color, shift, pow) in r.entries() {
            let ri = keys[&(color, shift.exps().to_vec())];
            a[ri][ci] = BigRational::from_integer(pow.into());
        }
    }
    for (color, shift, pow) in ratio.entries() {
        let ri = keys[&(color, shift.exps().to_vec())];
        a[ri][cols] = BigRational::from_integer(pow.into());
    }
    // Gaussian elimination with back-substitution; free variables stay 0
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0usize;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        let lead = a[rank][c].clone();
        for x in c..=cols {
            a[rank][x] = &a[rank][x] / &lead;
        }
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for x in c..=cols {
                    let sub = &a[rank][x] * &f;
                    a[r][x] = &a[r][x] - &sub;
                }
            }
        }
        pivot_of_col[c] = Some(rank);
        rank += 1;
    }
    for r in rank..rows {
        if !a[r][cols].is_zero() {
            return Err(Error::Inconsistent(format!(
                "{ratio} is not a product of shifted affine roots"
            )));
        }
    }
    let mut exps = vec![0i64; cols];
    for c in 0..cols {
        if let Some(r) = pivot_of_col[c] {
            let v = &a[r][cols];
            if !v.is_integer() {
                return Err(Error::Inconsistent(format!(
                    "{ratio} needs a fractional affine-root power"
                )));
            }
            let vi: num::BigInt = v.to_integer();
            exps[c] = i64::try_from(&vi).map_err(|_| {
                Error::Inconsistent("affine-root exponent out of i64 range".into())
            })?;
        }
    }
    // authoritative verification by reconstruction
    let mut check = YMonomial::one(ctx);
    for (ci, e) in exps.iter().enumerate() {
        for _ in 0..e.abs() {
            check = if *e > 0 { check.mul(&roots[ci]) } else { check.mul(&roots[ci].inv()) };
        }
    }
    if check != *ratio {
        return Err(Error::Inconsistent(format!(
            "{ratio} escaped the candidate affine roots"
        )));
    }
    Ok(cand
        .into_iter()
        .zip(exps)
        .filter(|(_, e)| *e != 0)
        .map(|(key, e)| (key, e))
        .collect())
}

/// Counts monomials by depth below `m_plus`: a monomial has depth `k` when
/// `m_plus / m` is a product of `k` shifted affine roots (all exponents
/// nonnegative).  Errors when some monomial does not factor that way.
pub fn depth_profile(chi: &Character, m_plus: &YMonomial) -> Result<Vec<usize>> {
    let mut profile: Vec<usize> = Vec::new();
    for (m, mult) in chi.iter() {
        let factors = factor_over_affine_roots(chi.cartan(), m_plus, m)?;
        let mut depth = 0i64;
        for ((color, shift), e) in &factors {
            if *e < 0 {
                return Err(Error::Inconsistent(format!(
                    "monomial {m} lies above the reference: A[{color},{shift}] has exponent {e}"
                )));
            }
            depth += e;
        }
        let d = depth as usize;
        if profile.len() <= d {
            profile.resize(d + 1, 0);
        }
        profile[d] += mult as usize;
    }
    Ok(profile)
}
