//! Screening contractions and the free-field coefficient layer.
//!
//! A character fixes only the *set* of monomials; realizing it as a current
//! `Σ c_m · V_m(z)` requires scalar coefficients.  These are pinned down by
//! screening: the contraction of the color-`i` screening current against a
//! vertex operator labelled by a monomial `m` is the rational function
//!
//! ```text
//!     ⟨S_i(w) V_m(z)⟩  =  ∏ over color-i entries (σ, n) of m:  (w − σz)^{−n} ,
//! ```
//!
//! so each positive entry contributes a simple pole at `w = σz` and each
//! inverse entry a simple zero.  Crossing an edge `m → m·A_{i,a}⁻¹` of the
//! character graph trades the pole of the source at `w = aq·z` for the pole
//! of the target at `w = aq⁻¹·z`, and demanding that the total residue of
//! `w^{ν_i} Σ c_m ⟨S_i(w) V_m(z)⟩` vanishes at each position ties the two
//! coefficients together:
//!
//! ```text
//!     c_to / c_from  =  − Res_{w=aq·z}  [w^{ν_i} ⟨S_i(w) V_from⟩]
//!                     /   Res_{w=aq⁻¹·z}[w^{ν_i} ⟨S_i(w) V_to⟩] .
//! ```
//!
//! The optional weight `ν_i` (an integer per color, zero by default) inserts
//! `w^{ν_i}` into every color-`i` residue and multiplies each color-`i` edge
//! ratio by exactly `q^{2ν_i}`.
//!
//! Solving a character means propagating these edge ratios along a spanning
//! tree of its graph and then checking every remaining edge: an inconsistent
//! cycle is a hard error, because it certifies that no coefficient assignment
//! screens.  The resulting [`QQCurrent`] can then be *verified* directly:
//! every simple pole of every contraction is grouped with the unique partner
//! pole carrying the same total screening content, and each group of two must
//! have exactly cancelling residues.  Cancellation partners are usually the
//! two ends of a graph edge, but inside longer strings they need not be
//! adjacent, which is why verification matches poles by content rather than
//! by edge.
//!
//! [`path_ratio_direct`] recomputes a coefficient ratio along a whole path in
//! one closed expression — a product of contraction factors specialized
//! sequentially at `w_s = a_s·z` — and serves as an independent cross-check
//! of the step-by-step edge ratios.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::cartan::CartanMatrix;
use crate::character::{
    build_graph, factor_over_affine_roots, CharStatus, Character, YMonomial,
};
use crate::exponents::{ensure_same_ctx, FactoredRatio, ParamContext, RatFunc, ShiftMonomial};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Screening configuration
// ---------------------------------------------------------------------------

/// Per-color integer weights `ν_i` for the screening currents.
///
/// A weight inserts `w^{ν_i}` into every color-`i` residue; colors absent
/// from the map default to `ν = 0`.  The only effect on coefficient ratios is
/// a uniform factor `q^{2ν_i}` per color-`i` edge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScreeningConfig {
    weight: BTreeMap<usize, i64>,
}

impl ScreeningConfig {
    /// The default configuration: every weight is zero.
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the configuration with the weight of one color replaced.
    pub fn with_weight(mut self, color: usize, nu: i64) -> Self {
        if nu == 0 {
            self.weight.remove(&color);
        } else {
            self.weight.insert(color, nu);
        }
        self
    }

    /// The weight of a color (zero when unspecified).
    pub fn weight(&self, color: usize) -> i64 {
        self.weight.get(&color).copied().unwrap_or(0)
    }

    /// True when every weight is zero.
    pub fn is_trivial(&self) -> bool {
        self.weight.is_empty()
    }
}

impl fmt::Display for ScreeningConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight.is_empty() {
            return write!(f, "ν = 0");
        }
        let parts: Vec<String> =
            self.weight.iter().map(|(c, nu)| format!("ν_{c} = {nu}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

// ---------------------------------------------------------------------------
// Contractions and edge ratios
// ---------------------------------------------------------------------------

/// The contraction `⟨S_i(w) V_m(z)⟩` of one screening current against one
/// monomial: the product of `(w − σz)^{−n}` over the color-`i` entries
/// `(σ, n)` of `m`.
///
/// Only the color-`i` content of `m` matters, so the contraction is invariant
/// under restriction to `{i}`.  Errors with [`Error::HigherOrderPole`] when
/// some entry has power ≥ 2 — the resulting double pole has no single
/// cancellation partner and the screening formalism does not apply.
pub fn screening_contraction(color: usize, m: &YMonomial) -> Result<RatFunc> {
    let mut f = RatFunc::one(m.ctx());
    for (c, sigma, n) in m.entries() {
        if c != color {
            continue;
        }
        if n >= 2 {
            return Err(Error::HigherOrderPole(format!(
                "color-{color} contraction of {m} has a pole of order {n} at w = ({sigma})·z; \
                 screening requires simple poles"
            )));
        }
        f = f.mul(&RatFunc::linear_factor(&sigma, -n));
    }
    Ok(f)
}

/// The coefficient ratio `c_to / c_from` across one edge `from → to` of
/// color `i` and shift `a` (so `to = from · A_{i,a}⁻¹`).
///
/// Computed as minus the ratio of the two residues of
/// `w^{ν_i} ⟨S_i(w) V(z)⟩` — the source's at `w = aq·z` against the
/// target's at `w = aq⁻¹·z`.  Both must actually be simple poles, and the
/// residues' powers of `z` must agree (they always do across a genuine edge,
/// since affine roots preserve every color degree); either failure signals
/// that the arguments do not form an edge.
pub fn edge_ratio(
    from: &YMonomial,
    to: &YMonomial,
    color: usize,
    shift: &ShiftMonomial,
    config: &ScreeningConfig,
) -> Result<FactoredRatio> {
    ensure_same_ctx(from.ctx(), to.ctx())?;
    ensure_same_ctx(from.ctx(), shift.ctx())?;
    let q = from.ctx().var("q")?;
    let nu = config.weight(color);

    let mut f_from = screening_contraction(color, from)?;
    f_from.mul_w_pow(nu);
    let (res_from, z_from) = f_from.residue_at(&(shift * &q))?;
    if res_from.is_zero() {
        return Err(Error::Inconsistent(format!(
            "edge ratio: the source {from} has no color-{color} pole at w = ({shift})·q·z"
        )));
    }

    let mut f_to = screening_contraction(color, to)?;
    f_to.mul_w_pow(nu);
    let (res_to, z_to) = f_to.residue_at(&(shift / &q))?;
    if res_to.is_zero() {
        return Err(Error::Inconsistent(format!(
            "edge ratio: the target {to} has no color-{color} pole at w = ({shift})·q⁻¹·z"
        )));
    }

    if z_from != z_to {
        return Err(Error::Inconsistent(format!(
            "edge ratio: residue z-powers differ ({z_from} at the source vs {z_to} at the \
             target); {from} → {to} is not a color-{color} edge"
        )));
    }

    res_from.div(&res_to).map(|r| r.neg())
}

// ---------------------------------------------------------------------------
// Currents
// ---------------------------------------------------------------------------

/// A character together with one scalar coefficient per monomial: the data of
/// a current `Σ c_m · V_m(z)` commuting with the screening charges.
///
/// Coefficients live in the exact parameter field and are stored in factored
/// form.  The `normalization` records which monomial is currently pinned
/// (initially the solver's base, with coefficient 1); [`QQCurrent::renormalized`]
/// rescales the whole family to pin any other value.
#[derive(Clone)]
pub struct QQCurrent {
    character: Character,
    config: ScreeningConfig,
    coefficients: BTreeMap<YMonomial, FactoredRatio>,
    normalization: YMonomial,
}

impl QQCurrent {
    /// The underlying character.
    pub fn character(&self) -> &Character {
        &self.character
    }

    /// The screening weights the coefficients were solved under.
    pub fn config(&self) -> &ScreeningConfig {
        &self.config
    }

    /// The monomial whose coefficient is currently pinned.
    pub fn normalization(&self) -> &YMonomial {
        &self.normalization
    }

    /// The coefficient of one monomial, or `None` when it is not in the
    /// support.
    pub fn coefficient(&self, m: &YMonomial) -> Option<&FactoredRatio> {
        self.coefficients.get(m)
    }

    /// All `(monomial, coefficient)` pairs in lexicographic monomial order.
    pub fn iter(&self) -> impl Iterator<Item = (&YMonomial, &FactoredRatio)> + '_ {
        self.coefficients.iter()
    }

    /// The ratio `c_m / c_n` of two coefficients (independent of the chosen
    /// normalization).
    pub fn ratio(&self, m: &YMonomial, n: &YMonomial) -> Result<FactoredRatio> {
        let cm = self
            .coefficient(m)
            .ok_or_else(|| Error::Invalid(format!("monomial {m} is not in the support")))?;
        let cn = self
            .coefficient(n)
            .ok_or_else(|| Error::Invalid(format!("monomial {n} is not in the support")))?;
        cm.div(cn)
    }

    /// The same current rescaled so that `m` carries the coefficient `value`.
    ///
    /// Every coefficient is multiplied by one common factor, which changes
    /// nothing about screening (the cancellation conditions are homogeneous).
    pub fn renormalized(&self, m: &YMonomial, value: &FactoredRatio) -> Result<QQCurrent> {
        if value.is_zero() {
            return Err(Error::Invalid(
                "a current coefficient cannot be normalized to zero".into(),
            ));
        }
        let current = self
            .coefficient(m)
            .ok_or_else(|| Error::Invalid(format!("monomial {m} is not in the support")))?;
        let scale = value.div(current)?;
        let coefficients = self
            .coefficients
            .iter()
            .map(|(k, c)| (k.clone(), c.mul(&scale)))
            .collect();
        Ok(QQCurrent {
            character: self.character.clone(),
            config: self.config.clone(),
            coefficients,
            normalization: m.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// The coefficient solver
// ---------------------------------------------------------------------------

/// Solves the screening conditions on a complete character.
///
/// Builds the character graph, propagates [`edge_ratio`] values along a
/// breadth-first spanning tree rooted at the provenance seed (or the first
/// monomial when no seed is recorded), and then closes every remaining edge.
/// A cycle whose direct edge ratio disagrees with the tree-propagated values
/// is a hard [`Error::Inconsistent`] — it proves that no coefficient
/// assignment makes the character screen — and the error reports the closing
/// edge together with both candidate values.
///
/// Requirements checked up front: the status is `Complete`, the character is
/// multiplicity-free, and its graph is connected (otherwise the coefficients
/// of different components would be unrelated).
pub fn solve_coefficients(chi: &Character, config: &ScreeningConfig) -> Result<QQCurrent> {
    if !matches!(chi.status(), CharStatus::Complete) {
        return Err(Error::Status(
            "coefficient solving needs a complete character; \
             use the windowed solver for truncations"
                .into(),
        ));
    }
    solve_impl(chi, config)
}

/// Solves the screening conditions on a windowed character.
///
/// Identical to [`solve_coefficients`] except that a `Window` status is
/// accepted: the solved coefficients are exact on the retained monomials, and
/// conditions involving monomials beyond the frontier are simply absent.
/// `Failed` characters are rejected.
pub fn solve_coefficients_windowed(
    chi: &Character,
    config: &ScreeningConfig,
) -> Result<QQCurrent> {
    if let CharStatus::Failed { reason } = chi.status() {
        return Err(Error::Status(format!(
            "cannot solve coefficients on a failed character ({reason})"
        )));
    }
    solve_impl(chi, config)
}

fn solve_impl(chi: &Character, config: &ScreeningConfig) -> Result<QQCurrent> {
    if !chi.is_multiplicity_free() {
        return Err(Error::Invalid(
            "coefficient solving needs a multiplicity-free character: a repeated monomial \
             would need one coefficient per copy"
                .into(),
        ));
    }
    let graph = build_graph(chi)?;
    let verts = graph.vertices();
    if verts.is_empty() {
        return Err(Error::Invalid("cannot solve an empty character".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Invalid(format!(
            "the character graph has {} components; coefficients are only tied together \
             within a component, so solve each component separately",
            graph.components().len()
        )));
    }

    // Root the tree at the expansion seed when it is one of the vertices —
    // this makes the pinned monomial predictable — otherwise at the first.
    let base_idx = chi
        .provenance()
        .and_then(|p| graph.index_of(&p.seed))
        .unwrap_or(0);

    let edges = graph.edges();
    let mut adjacency: Vec<Vec<(usize, bool)>> = vec![Vec::new(); verts.len()];
    for (eidx, e) in edges.iter().enumerate() {
        adjacency[e.from].push((eidx, true));
        adjacency[e.to].push((eidx, false));
    }

    let mut ratios: Vec<Option<FactoredRatio>> = vec![None; edges.len()];
    let ratio_of = |eidx: usize, ratios: &mut Vec<Option<FactoredRatio>>| -> Result<FactoredRatio> {
        if ratios[eidx].is_none() {
            let e = &edges[eidx];
            let r = edge_ratio(&verts[e.from].0, &verts[e.to].0, e.color, &e.shift, config)?;
            ratios[eidx] = Some(r);
        }
        Ok(ratios[eidx].clone().expect("just filled"))
    };

    let mut coef: Vec<Option<FactoredRatio>> = vec![None; verts.len()];
    let mut in_tree = vec![false; edges.len()];
    coef[base_idx] = Some(FactoredRatio::one(chi.ctx()));
    let mut queue = VecDeque::from([base_idx]);
    while let Some(v) = queue.pop_front() {
        let cv = coef[v].clone().expect("dequeued vertices are assigned");
        for &(eidx, forward) in &adjacency[v] {
            let u = if forward { edges[eidx].to } else { edges[eidx].from };
            if coef[u].is_some() {
                continue;
            }
            let r = ratio_of(eidx, &mut ratios)?;
            coef[u] = Some(if forward { cv.mul(&r) } else { cv.div(&r)? });
            in_tree[eidx] = true;
            queue.push_back(u);
        }
    }

    for (eidx, e) in edges.iter().enumerate() {
        if in_tree[eidx] {
            continue;
        }
        let r = ratio_of(eidx, &mut ratios)?;
        let lhs = coef[e.to].clone().expect("connected graph is fully assigned");
        let rhs = coef[e.from].clone().expect("connected graph is fully assigned").mul(&r);
        if !lhs.value_eq(&rhs) {
            let implied = lhs.div(&coef[e.from].clone().expect("assigned"))?;
            return Err(Error::Inconsistent(format!(
                "screening conditions are overdetermined and contradictory: the cycle closed \
                 by the color-{} edge {} → {} (shift {}) gives the direct ratio {} but the \
                 spanning tree implies {}",
                e.color, verts[e.from].0, verts[e.to].0, e.shift, r, implied
            )));
        }
    }

    let coefficients = verts
        .iter()
        .zip(coef)
        .map(|((m, _), c)| (m.clone(), c.expect("connected graph is fully assigned")))
        .collect();
    Ok(QQCurrent {
        character: chi.clone(),
        config: config.clone(),
        coefficients,
        normalization: verts[base_idx].0.clone(),
    })
}

// ---------------------------------------------------------------------------
// Direct path ratios
// ---------------------------------------------------------------------------

/// Internal: a product of factors `(x_hi − μ·x_lo)^e` in the variables
/// `x_0 = z, x_1 = w_1, …, x_l = w_l`, together with a factored scalar and a
/// monomial `∏ x_s^{p_s}`.  Factors are normalized so that `hi > lo`, using
/// `(x_a − μ x_b) = (−μ)·(x_b − μ⁻¹ x_a)`.
struct PathProduct {
    coef: FactoredRatio,
    var_pows: Vec<i64>,
    factors: BTreeMap<(usize, usize, Vec<i64>), i64>,
}

impl PathProduct {
    fn new(ctx: &Arc<ParamContext>, vars: usize) -> Self {
        PathProduct {
            coef: FactoredRatio::one(ctx),
            var_pows: vec![0; vars],
            factors: BTreeMap::new(),
        }
    }

    fn mul_monomial_pow(&mut self, m: &ShiftMonomial, e: i64) {
        self.coef = self.coef.mul(&FactoredRatio::from_monomial(&m.pow(e)));
    }

    fn push(&mut self, hi: usize, lo: usize, mu: &ShiftMonomial, e: i64) {
        if e == 0 {
            return;
        }
        debug_assert_ne!(hi, lo, "a factor must involve two distinct variables");
        if hi < lo {
            self.mul_monomial_pow(mu, e);
            if e % 2 != 0 {
                self.coef = self.coef.neg();
            }
            self.push(lo, hi, &mu.inv(), e);
            return;
        }
        let key = (hi, lo, mu.exps().to_vec());
        let slot = self.factors.entry(key.clone()).or_insert(0);
        *slot += e;
        if *slot == 0 {
            self.factors.remove(&key);
        }
    }

    /// Substitutes `w_s = a·z`.  The net order of vanishing at the point must
    /// be zero — each zero of the product must be eaten by exactly one simple
    /// pole — otherwise the sequential specialization is ill-defined and we
    /// abort rather than guess a pairing.
    fn specialize(&mut self, s: usize, a: &ShiftMonomial) -> Result<()> {
        let pow = self.var_pows[s];
        self.mul_monomial_pow(a, pow);
        self.var_pows[0] += pow;
        self.var_pows[s] = 0;

        let old = std::mem::take(&mut self.factors);
        let mut net_order: i64 = 0;
        for ((hi, lo, mu_exps), e) in old {
            let mu = self
                .coef
                .ctx()
                .monomial(&mu_exps)
                .expect("stored exponents match the context");
            if hi == s {
                debug_assert_eq!(lo, 0, "variables below w_s are already specialized");
                if mu == *a {
                    net_order += e;
                } else {
                    // (a·z − μ·z)^e = a^e (1 − μ/a)^e z^e
                    self.mul_monomial_pow(a, e);
                    self.coef = self.coef.mul(&FactoredRatio::from_binomial(&(&mu / a), e)?);
                    self.var_pows[0] += e;
                }
            } else if lo == s {
                // (x_hi − μ·w_s) = (x_hi − μa·z)
                self.push(hi, 0, &(&mu * a), e);
            } else {
                self.push(hi, lo, &mu, e);
            }
        }
        if net_order != 0 {
            return Err(Error::Inconsistent(format!(
                "specializing w_{s} leaves a net order {net_order} at the point: zeros and \
                 simple poles do not balance one-to-one, so the sequential residue \
                 prescription does not apply to this path"
            )));
        }
        Ok(())
    }
}

/// The coefficient ratio `c_end / c_start` along a whole path, computed in
/// closed form rather than edge by edge.
///
/// The path starts at `start` and follows `steps = [(i_1, a_1), …, (i_l, a_l)]`,
/// each step multiplying by `A_{i_s, a_s}⁻¹`.  The closed expression is
///
/// ```text
///     (−1)^l · ∏_s q^{2ν_{i_s}} ·
///     { ∏_s F_s(w_s) · ∏_{s≠t} (q·w_s − σ_{i_s i_t}·w_t) / (q·σ_{i_s i_t}·w_s − w_t) }
/// ```
///
/// with `F_s(w) = (qw − q·a_s z) f_{i_s}(qw) / [(q⁻¹w − q·a_s z) f_{i_s}(q⁻¹w)]`
/// built from the contractions `f_i(w) = ⟨S_i(w) V_start(z)⟩` of the *initial*
/// monomial only, the braces specialized at `w_s = a_s·z` sequentially in path
/// order.  Every power of `z` cancels in the end (asserted), and the result
/// equals the product of the step-by-step [`edge_ratio`] values.
///
/// Errors when a specialization point carries an unbalanced zero or pole —
/// paths revisiting the same root position can produce such collisions, and
/// no pairing convention is adopted for them.
pub fn path_ratio_direct(
    cartan: &Arc<CartanMatrix>,
    start: &YMonomial,
    steps: &[(usize, ShiftMonomial)],
    config: &ScreeningConfig,
) -> Result<FactoredRatio> {
    let ctx = cartan.ctx();
    ensure_same_ctx(ctx, start.ctx())?;
    if steps.is_empty() {
        return Ok(FactoredRatio::one(ctx));
    }
    for (color, shift) in steps {
        if !cartan.has_color(*color) {
            return Err(Error::Invalid(format!("color {color} is not in the matrix")));
        }
        ensure_same_ctx(ctx, shift.ctx())?;
    }
    let q = ctx.var("q")?;
    let l = steps.len();
    let mut prod = PathProduct::new(ctx, l + 1);

    for (s, (color, a)) in steps.iter().enumerate() {
        let s = s + 1; // variable slot of w_s
        // (q·w_s − q·a_s·z) = q · (w_s − a_s·z)
        prod.mul_monomial_pow(&q, 1);
        prod.push(s, 0, a, 1);
        // 1 / (q⁻¹·w_s − q·a_s·z) = q⁻¹ · 1 / (w_s − q²·a_s·z) … as coef q^{+1}
        prod.mul_monomial_pow(&q, 1);
        prod.push(s, 0, &(&q.pow(2) * a), -1);
        // f_{i_s}(q·w_s) / f_{i_s}(q⁻¹·w_s): each entry (σ, n) of the start
        // monomial contributes q^{-2n} (w_s − q⁻¹σ·z)^{−n} (w_s − qσ·z)^{+n}.
        for (c, sigma, n) in start.entries() {
            if c != *color {
                continue;
            }
            prod.mul_monomial_pow(&q, -2 * n);
            prod.push(s, 0, &(&sigma / &q), -n);
            prod.push(s, 0, &(&sigma * &q), n);
        }
        prod.mul_monomial_pow(&q, 2 * config.weight(*color));
    }
    for (s, (is_, _)) in steps.iter().enumerate() {
        for (t, (it, _)) in steps.iter().enumerate() {
            if s == t {
                continue;
            }
            let sigma_st = cartan.sigma_entry(*is_, *it)?.clone();
            // (q·w_s − σ_st·w_t) = q (w_s − q⁻¹σ_st w_t)
            prod.mul_monomial_pow(&q, 1);
            prod.push(s + 1, t + 1, &(&sigma_st / &q), 1);
            // 1 / (q·σ_st·w_s − w_t) = (q·σ_st)⁻¹ (w_s − q⁻¹σ_st⁻¹ w_t)⁻¹
            prod.mul_monomial_pow(&(&q * &sigma_st), -1);
            prod.push(s + 1, t + 1, &(&sigma_st * &q).inv(), -1);
        }
    }

    for (s, (_, a)) in steps.iter().enumerate() {
        prod.specialize(s + 1, a)?;
    }
    debug_assert!(prod.factors.is_empty(), "all factors are specialized");
    if prod.var_pows[0] != 0 {
        return Err(Error::Inconsistent(format!(
            "direct path ratio retains z^{}: the ratio of vertex operators is not scalar",
            prod.var_pows[0]
        )));
    }
    if l % 2 != 0 {
        prod.coef = prod.coef.neg();
    }
    Ok(prod.coef)
}

// ---------------------------------------------------------------------------
// Commutation verification
// ---------------------------------------------------------------------------

/// One simple pole of one contraction: monomial `V_m`, screening color, and
/// the position `w = position·z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoleEvent {
    /// The monomial whose contraction has the pole.
    pub monomial: YMonomial,
    /// The screening color.
    pub color: usize,
    /// The pole sits at `w = position·z`.
    pub position: ShiftMonomial,
}

impl fmt::Display for PoleEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "color-{} pole of {} at w = ({})·z", self.color, self.monomial, self.position)
    }
}

/// The outcome of [`verify_screening_commutation`].
///
/// `all_clear` means every pole cancelled against its partner (frontier
/// leakage of a windowed character is reported but not counted as failure —
/// those partners were cut off by the window, not missing).
#[derive(Clone, Debug, Default)]
pub struct CommutationReport {
    /// Number of cancelling pole pairs that were checked.
    pub pairs_checked: usize,
    /// Human-readable descriptions of every failed cancellation.
    pub failures: Vec<String>,
    /// Poles with no partner in a complete character — each one is a genuine
    /// obstruction to screening.
    pub unpaired: Vec<PoleEvent>,
    /// Poles of a windowed character whose partner lies beyond the window.
    pub frontier: Vec<PoleEvent>,
}

impl CommutationReport {
    /// True when the current screens: no failed cancellations and no
    /// unpaired poles.
    pub fn all_clear(&self) -> bool {
        self.failures.is_empty() && self.unpaired.is_empty()
    }
}

impl fmt::Display for CommutationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} pole pairs cancelled, {} failures, {} unpaired, {} at the window frontier",
            self.pairs_checked,
            self.failures.len(),
            self.unpaired.len(),
            self.frontier.len()
        )
    }
}

/// The net screening content of `m` relative to `base`, as a multiset of
/// `(color, position)` insertions: each affine-root factor `A_{j,τ}^{e}` in
/// `m / base` contributes `−e` insertions of `S_j` at `τq` and `+e` at
/// `τq⁻¹`.
fn screening_vector(
    cartan: &Arc<CartanMatrix>,
    m: &YMonomial,
    base: &YMonomial,
) -> Result<BTreeMap<(usize, Vec<i64>), i64>> {
    let q = cartan.ctx().var("q")?;
    let mut vec = BTreeMap::new();
    for ((j, tau), e) in factor_over_affine_roots(cartan, m, base)? {
        for (pos, delta) in [(&tau * &q, -e), (&tau / &q, e)] {
            let key = (j, pos.exps().to_vec());
            let slot = vec.entry(key.clone()).or_insert(0);
            *slot += delta;
            if *slot == 0 {
                vec.remove(&key);
            }
        }
    }
    Ok(vec)
}

/// Verifies that a solved current commutes with every screening charge.
///
/// For each monomial and each color, every simple pole of
/// `w^{ν_i} c_m ⟨S_i(w) V_m(z)⟩` is tagged with the total screening content
/// of `m` (relative to the current's pinned monomial) plus the insertion the
/// pole itself represents.  Two poles cancel against each other exactly when
/// their tags agree, so the events are grouped by tag: every group must have
/// size two and residue sum zero.  This correctly pairs the non-adjacent
/// cancellations that occur inside longer strings, where the partner of a
/// pole of `m` is *not* a graph neighbor of `m`.
///
/// Singleton groups are unpaired poles: fatal for a complete character,
/// expected leakage at the frontier of a windowed one (reported separately).
pub fn verify_screening_commutation(current: &QQCurrent) -> Result<CommutationReport> {
    let chi = current.character();
    let cartan = chi.cartan();
    let windowed = matches!(chi.status(), CharStatus::Window { .. });

    struct Event {
        monomial: YMonomial,
        color: usize,
        position: ShiftMonomial,
        value: FactoredRatio,
        z_pow: i64,
    }
    let mut groups: BTreeMap<(usize, BTreeMap<(usize, Vec<i64>), i64>), Vec<Event>> =
        BTreeMap::new();

    for (m, c_m) in current.iter() {
        let svec = screening_vector(cartan, m, current.normalization())?;
        for &color in cartan.colors() {
            let mut f = screening_contraction(color, m)?;
            f.mul_w_pow(current.config().weight(color));
            for (position, order) in f.poles() {
                debug_assert_eq!(order, 1, "contractions of generic monomials are simple");
                let (res, z_pow) = f.residue_at(&position)?;
                let mut tag = svec.clone();
                let key = (color, position.exps().to_vec());
                let slot = tag.entry(key.clone()).or_insert(0);
                *slot += 1;
                if *slot == 0 {
                    tag.remove(&key);
                }
                groups.entry((color, tag)).or_default().push(Event {
                    monomial: m.clone(),
                    color,
                    position,
                    value: c_m.mul(&res),
                    z_pow,
                });
            }
        }
    }

    let mut report = CommutationReport::default();
    for (_, events) in groups {
        match events.as_slice() {
            [single] => {
                let pole = PoleEvent {
                    monomial: single.monomial.clone(),
                    color: single.color,
                    position: single.position.clone(),
                };
                if windowed {
                    report.frontier.push(pole);
                } else {
                    report.unpaired.push(pole);
                }
            }
            [a, b] => {
                if a.z_pow != b.z_pow {
                    report.failures.push(format!(
                        "z-powers differ between {} (z^{}) and {} (z^{})",
                        PoleEvent {
                            monomial: a.monomial.clone(),
                            color: a.color,
                            position: a.position.clone()
                        },
                        a.z_pow,
                        PoleEvent {
                            monomial: b.monomial.clone(),
                            color: b.color,
                            position: b.position.clone()
                        },
                        b.z_pow
                    ));
                } else if !a.value.value_eq_neg(&b.value) {
                    report.failures.push(format!(
                        "residues do not cancel: {} contributes {} while {} contributes {}",
                        PoleEvent {
                            monomial: a.monomial.clone(),
                            color: a.color,
                            position: a.position.clone()
                        },
                        a.value,
                        PoleEvent {
                            monomial: b.monomial.clone(),
                            color: b.color,
                            position: b.position.clone()
                        },
                        b.value
                    ));
                } else {
                    report.pairs_checked += 1;
                }
            }
            many => {
                let names: Vec<String> = many
                    .iter()
                    .map(|e| format!("{} at ({})", e.monomial, e.position))
                    .collect();
                report.failures.push(format!(
                    "{} poles share one screening tag (color {}): {}",
                    many.len(),
                    many[0].color,
                    names.join(", ")
                ));
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{CharStatus, Polarity};
    use crate::expand::{expand, truncate, Caps, Seed};

    fn ym(c: &Arc<CartanMatrix>, parts: &[(usize, &str, i64)]) -> YMonomial {
        YMonomial::from_parts(c.ctx(), parts).expect("test monomial")
    }

    fn fr(ctx: &Arc<ParamContext>, num: &[(&str, i64)], den: &[(&str, i64)]) -> FactoredRatio {
        // Builds ∏ (1 − μ)^{±e} from parsed monomials.
        let mut r = FactoredRatio::one(ctx);
        for &(s, e) in num {
            let mu = ctx.parse(s).expect("test monomial");
            r = r.mul(&FactoredRatio::from_binomial(&mu, e).expect("test binomial"));
        }
        for &(s, e) in den {
            let mu = ctx.parse(s).expect("test monomial");
            r = r.mul(&FactoredRatio::from_binomial(&mu, -e).expect("test binomial"));
        }
        r
    }

    fn mono(ctx: &Arc<ParamContext>, s: &str) -> FactoredRatio {
        FactoredRatio::from_monomial(&ctx.parse(s).expect("test monomial"))
    }

    #[test]
    fn contraction_of_a_positive_entry_is_a_simple_pole() {
        let c = CartanMatrix::preset("gl21").unwrap();
        let m = ym(&c, &[(1, "q", 1)]);
        let f = screening_contraction(1, &m).unwrap();
        assert_eq!(f.poles(), vec![(c.ctx().parse("q").unwrap(), 1)]);
        // The other color sees no content at all.
        let g = screening_contraction(2, &m).unwrap();
        assert!(g.poles().is_empty());
        assert_eq!(g.order_at(&c.ctx().parse("q").unwrap()), 0);
    }

    #[test]
    fn contraction_of_an_inverse_entry_is_a_simple_zero() {
        let c = CartanMatrix::preset("gl21").unwrap();
        let m = ym(&c, &[(1, "q*p^-1", -1)]);
        let f = screening_contraction(1, &m).unwrap();
        assert!(f.poles().is_empty());
        assert_eq!(f.order_at(&c.ctx().parse("q*p^-1").unwrap()), 1);
    }

    #[test]
    fn contraction_rejects_a_doubled_entry() {
        let c = CartanMatrix::preset("gl21").unwrap();
        let m = ym(&c, &[(1, "q", 2)]);
        let err = screening_contraction(1, &m).unwrap_err();
        assert!(matches!(err, Error::HigherOrderPole(_)), "got {err}");
    }

    #[test]
    fn a_two_term_block_has_ratio_minus_one() {
        // 1_{q} → 1_{q⁻¹}: one color, edge shift 1.  The two residues are
        // equal up to sign, so the coefficients agree.
        let c = CartanMatrix::preset("gl21").unwrap();
        let from = ym(&c, &[(1, "q", 1)]);
        let to = ym(&c, &[(1, "q^-1", 1)]);
        let r = edge_ratio(&from, &to, 1, &c.ctx().one(), &ScreeningConfig::new()).unwrap();
        assert!(r.value_eq(&FactoredRatio::one(c.ctx()).neg()), "got {r}");
    }

    #[test]
    fn edge_ratio_rejects_a_missing_pole() {
        let c = CartanMatrix::preset("gl21").unwrap();
        let from = ym(&c, &[(1, "q", 1)]);
        let to = ym(&c, &[(1, "q^-1", 1)]);
        // Wrong shift: neither monomial has poles at p·q^{±1}.
        let shift = c.ctx().parse("p").unwrap();
        let err = edge_ratio(&from, &to, 1, &shift, &ScreeningConfig::new()).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)), "got {err}");
    }

    #[test]
    fn the_first_edge_of_the_adjoint_has_the_printed_ratio() {
        // From the top monomial m₊ = ∏ᵢ i_{qᵢ⁻¹} i^{qᵢ}, the color-1 edge at
        // shift q⁻¹q₁⁻¹ has ratio −q²(1−q₁²)/(1−q²q₁²).
        let c = CartanMatrix::preset("d21a").unwrap();
        let ctx = c.ctx();
        let v1 = ym(
            &c,
            &[
                (1, "q1^-1", 1),
                (1, "q1", -1),
                (2, "q2^-1", 1),
                (2, "q2", -1),
                (3, "q3^-1", 1),
                (3, "q3", -1),
            ],
        );
        let v2 = ym(
            &c,
            &[
                (1, "q^-2*q1^-1", 1),
                (1, "q1", -1),
                (2, "q2^-1", 1),
                (2, "q2*q3^2", -1),
                (3, "q3^-1", 1),
                (3, "q2^2*q3", -1),
            ],
        );
        let shift = ctx.parse("q^-1*q1^-1").unwrap();
        let r = edge_ratio(&v1, &v2, 1, &shift, &ScreeningConfig::new()).unwrap();
        let expected = mono(ctx, "q^2").neg().mul(&fr(ctx, &[("q1^2", 1)], &[("q^2*q1^2", 1)]));
        assert!(r.value_eq(&expected), "got {r}, want {expected}");
    }

    #[test]
    fn weights_scale_each_edge_by_a_power_of_q() {
        let c = CartanMatrix::preset("d21a").unwrap();
        let chi = expand(
            &Seed::dominant(ym(
                &c,
                &[
                    (1, "q1^-1", 1),
                    (1, "q1", -1),
                    (2, "q2^-1", 1),
                    (2, "q2", -1),
                    (3, "q3^-1", 1),
                    (3, "q3", -1),
                ],
            )),
            &c,
        )
        .unwrap();
        let graph = build_graph(&chi).unwrap();
        let plain = ScreeningConfig::new();
        let weighted = ScreeningConfig::new().with_weight(1, 1).with_weight(2, 1).with_weight(3, 1);
        let q2 = mono(c.ctx(), "q^2");
        for e in graph.edges() {
            let vs = graph.vertices();
            let r0 = edge_ratio(&vs[e.from].0, &vs[e.to].0, e.color, &e.shift, &plain).unwrap();
            let r1 = edge_ratio(&vs[e.from].0, &vs[e.to].0, e.color, &e.shift, &weighted).unwrap();
            assert!(r1.value_eq(&r0.mul(&q2)), "edge {} → {}", e.from, e.to);
        }
    }

    /// The interpolation block on one color: monomials
    /// `m_j = 1^{a_1 … a_k}_{a q⁰, …, ĵ, …, a q^{2k}}` for `j = 0…k` with
    /// spectator zeros `a_r`, whose solved coefficients are the Lagrange-type
    /// products `c_j = ∏_r (q^{2j}a − a_r) / ∏_{s≠j} (q^{2j}a − q^{2s}a)`.
    fn block(k: usize, spectators: &[&str]) -> (Arc<CartanMatrix>, Character) {
        let ctx = ParamContext::new(&["q", "q1", "q2"]).unwrap();
        let q = ctx.var("q").unwrap();
        let cartan =
            CartanMatrix::new(ctx.clone(), vec![1], vec![vec![q]], None).unwrap();
        let mut monomials = Vec::new();
        for j in 0..=k {
            let mut m = YMonomial::one(&ctx);
            for s in 0..=k {
                if s != j {
                    m.insert(1, &ctx.monomial(&[2 * s as i64, 0, 0]).unwrap(), 1);
                }
            }
            for a_r in spectators {
                m.insert(1, &ctx.parse(a_r).unwrap(), -1);
            }
            monomials.push(m);
        }
        let chi = Character::from_set(cartan.clone(), monomials, CharStatus::Complete).unwrap();
        (cartan, chi)
    }

    #[test]
    fn block_coefficients_match_the_interpolation_products() {
        for (k, spectators) in
            [(1usize, vec!["q1"]), (2, vec!["q1", "q2"]), (3, vec!["q1", "q2", "q1*q2"])]
        {
            let (cartan, chi) = block(k, &spectators);
            let ctx = cartan.ctx();
            let current = solve_coefficients(&chi, &ScreeningConfig::new()).unwrap();
            // (x − y) = x · (1 − y/x)
            let lin = |x: &ShiftMonomial, y: &ShiftMonomial| {
                FactoredRatio::from_monomial(x)
                    .mul(&FactoredRatio::from_binomial(&(y / x), 1).unwrap())
            };
            let point = |j: i64| ctx.monomial(&[2 * j, 0, 0]).unwrap();
            let c_of = |j: usize| {
                let mut c = FactoredRatio::one(ctx);
                for a_r in &spectators {
                    c = c.mul(&lin(&point(j as i64), &ctx.parse(a_r).unwrap()));
                }
                for s in 0..=k {
                    if s != j {
                        c = c.div(&lin(&point(j as i64), &point(s as i64))).unwrap();
                    }
                }
                c
            };
            let mono_j = |j: usize| {
                let mut m = YMonomial::one(ctx);
                for s in 0..=k {
                    if s != j {
                        m.insert(1, &point(s as i64), 1);
                    }
                }
                for a_r in &spectators {
                    m.insert(1, &ctx.parse(a_r).unwrap(), -1);
                }
                m
            };
            for j in 1..=k {
                let got = current.ratio(&mono_j(j), &mono_j(0)).unwrap();
                let want = c_of(j).div(&c_of(0)).unwrap();
                assert!(got.value_eq(&want), "k = {k}, j = {j}: got {got}, want {want}");
            }
            let report = verify_screening_commutation(&current).unwrap();
            assert!(report.all_clear(), "k = {k}: {report}");
            assert!(report.frontier.is_empty());
            // The pole of m_j at q^{2i} cancels against the pole of m_i at
            // q^{2j} for every i ≠ j, adjacent or not: one pair per unordered
            // index pair, which for k ≥ 2 exceeds the k graph edges.
            assert_eq!(report.pairs_checked, (k + 1) * k / 2);
        }
    }

    fn adjoint() -> (Arc<CartanMatrix>, Character) {
        let c = CartanMatrix::preset("d21a").unwrap();
        let chi = expand(
            &Seed::dominant(ym(
                &c,
                &[
                    (1, "q1^-1", 1),
                    (1, "q1", -1),
                    (2, "q2^-1", 1),
                    (2, "q2", -1),
                    (3, "q3^-1", 1),
                    (3, "q3", -1),
                ],
            )),
            &c,
        )
        .unwrap();
        (c, chi)
    }

    #[test]
    fn solving_the_adjoint_closes_every_cycle() {
        let (c, chi) = adjoint();
        let ctx = c.ctx();
        let current = solve_coefficients(&chi, &ScreeningConfig::new()).unwrap();
        assert_eq!(current.normalization(), &chi.provenance().unwrap().seed);
        // Pin the top coefficient to q⁻³ and read off a few of the others.
        let top = chi.provenance().unwrap().seed.clone();
        let current = current.renormalized(&top, &mono(ctx, "q^-3")).unwrap();
        let v2 = ym(
            &c,
            &[
                (1, "q^-2*q1^-1", 1),
                (1, "q1", -1),
                (2, "q2^-1", 1),
                (2, "q2*q3^2", -1),
                (3, "q3^-1", 1),
                (3, "q2^2*q3", -1),
            ],
        );
        // c₂ = −q⁻³ · q²(1−q₁²)/(1−q²q₁²)
        let want = mono(ctx, "q^-1").neg().mul(&fr(ctx, &[("q1^2", 1)], &[("q^2*q1^2", 1)]));
        assert!(current.coefficient(&v2).unwrap().value_eq(&want));
        // The fully inverted monomial m₋ = ∏ᵢ i_{q⁻²qᵢ} i^{q⁻²qᵢ⁻¹} sits at
        // the far end with coefficient q³.
        let bottom = ym(
            &c,
            &[
                (1, "q^-2*q1", 1),
                (1, "q^-2*q1^-1", -1),
                (2, "q^-2*q2", 1),
                (2, "q^-2*q2^-1", -1),
                (3, "q^-2*q3", 1),
                (3, "q^-2*q3^-1", -1),
            ],
        );
        assert!(current.coefficient(&bottom).unwrap().value_eq(&mono(ctx, "q^3")));
    }

    #[test]
    fn the_adjoint_current_screens() {
        let (_, chi) = adjoint();
        let current = solve_coefficients(&chi, &ScreeningConfig::new()).unwrap();
        let report = verify_screening_commutation(&current).unwrap();
        assert!(report.all_clear(), "{report}");
        assert!(report.frontier.is_empty());
        // Every color string here has length ≤ 2, so each cancelling pair
        // spans exactly one graph edge.
        assert_eq!(report.pairs_checked, build_graph(&chi).unwrap().edges().len());
    }

    #[test]
    fn spoiled_coefficients_fail_verification() {
        let (c, chi) = adjoint();
        let current = solve_coefficients(&chi, &ScreeningConfig::new()).unwrap();
        let v2 = ym(
            &c,
            &[
                (1, "q^-2*q1^-1", 1),
                (1, "q1", -1),
                (2, "q2^-1", 1),
                (2, "q2*q3^2", -1),
                (3, "q3^-1", 1),
                (3, "q2^2*q3", -1),
            ],
        );
        // Doubling one coefficient breaks exactly that monomial's pairings.
        let mut spoiled = current.clone();
        let doubled = spoiled.coefficients.get(&v2).unwrap().mul(&mono(c.ctx(), "q"));
        spoiled.coefficients.insert(v2, doubled);
        let report = verify_screening_commutation(&spoiled).unwrap();
        assert!(!report.all_clear());
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn direct_path_ratios_agree_with_stepwise_products() {
        // Walk every forward path of length ≤ 3 out of the top of the adjoint
        // and compare the closed-form ratio with the product of edge ratios.
        let (c, chi) = adjoint();
        let graph = build_graph(&chi).unwrap();
        let verts = graph.vertices();
        let top = graph.index_of(&chi.provenance().unwrap().seed).unwrap();
        let config = ScreeningConfig::new().with_weight(2, 1);
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); verts.len()];
        for (eidx, e) in graph.edges().iter().enumerate() {
            out[e.from].push(eidx);
        }
        let mut stack = vec![(top, Vec::<usize>::new())];
        let mut paths = 0;
        while let Some((v, path)) = stack.pop() {
            if !path.is_empty() {
                let steps: Vec<(usize, ShiftMonomial)> = path
                    .iter()
                    .map(|&e| (graph.edges()[e].color, graph.edges()[e].shift.clone()))
                    .collect();
                let direct =
                    path_ratio_direct(&c, &verts[top].0, &steps, &config).unwrap();
                let mut stepwise = FactoredRatio::one(c.ctx());
                for &e in &path {
                    let edge = &graph.edges()[e];
                    stepwise = stepwise.mul(
                        &edge_ratio(
                            &verts[edge.from].0,
                            &verts[edge.to].0,
                            edge.color,
                            &edge.shift,
                            &config,
                        )
                        .unwrap(),
                    );
                }
                assert!(direct.value_eq(&stepwise), "path {path:?}");
                paths += 1;
            }
            if path.len() < 3 {
                for &e in &out[v] {
                    let mut longer = path.clone();
                    longer.push(e);
                    stack.push((graph.edges()[e].to, longer));
                }
            }
        }
        assert!(paths > 10, "only {paths} paths were exercised");
    }

    #[test]
    fn solving_respects_the_fundamental_segments() {
        // The 2n+1-term segments of the fundamental line all solve and screen.
        let c = CartanMatrix::preset("gl21").unwrap();
        for n in 1..=3usize {
            let line = expand(
                &Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(2 * n + 4),
                &c,
            )
            .unwrap();
            let end_name = format!("q*p^-{n}");
            let end = ym(&c, &[(1, end_name.as_str(), -1)]);
            let seg = truncate(&line, &end, &Caps::default()).unwrap();
            assert_eq!(seg.monomial_count(), 2 * n + 1);
            let current = solve_coefficients(&seg, &ScreeningConfig::new()).unwrap();
            let report = verify_screening_commutation(&current).unwrap();
            assert!(report.all_clear(), "n = {n}: {report}");
        }
    }

    #[test]
    fn windowed_solving_reports_frontier_leakage() {
        // A depth-limited window of the fundamental line: the last monomial's
        // outward pole has its partner beyond the frontier.
        let c = CartanMatrix::preset("gl21").unwrap();
        let window =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(3), &c).unwrap();
        assert!(matches!(window.status(), CharStatus::Window { .. }));
        assert!(solve_coefficients(&window, &ScreeningConfig::new()).is_err());
        let current = solve_coefficients_windowed(&window, &ScreeningConfig::new()).unwrap();
        let report = verify_screening_commutation(&current).unwrap();
        assert!(report.failures.is_empty(), "{report}");
        assert!(report.unpaired.is_empty());
        assert!(!report.frontier.is_empty());
    }

    #[test]
    fn the_affine_vector_window_solves_with_weighted_color_zero() {
        // The doubly-infinite vector of the affine superalgebra: solved on a
        // finite window with ν₀ = −2, the diagonal coefficients step by q₀².
        let c = CartanMatrix::preset("d21a_affine").unwrap();
        let ctx = c.ctx();
        let seed = YMonomial::from_parts(
            ctx,
            &[(0, "q1^-1*q3^-2", -1), (0, "q1", 1), (3, "q2^-1", -1), (3, "q0^2*q2", 1)],
        )
        .unwrap();
        let chi = expand(
            &Seed::dominant(seed)
                .with_polarity(0, Polarity::AntiDominant)
                .with_max_depth(6),
            &c,
        )
        .unwrap();
        let config = ScreeningConfig::new().with_weight(0, -2);
        let current = solve_coefficients_windowed(&chi, &config).unwrap();

        // V_{0,0}, V_{1,0}, V_{1,1} in the closed-form grid.
        let v00 = current.normalization().clone();
        let v10 = YMonomial::from_parts(
            ctx,
            &[
                (0, "q1^-1", -1),
                (0, "q1", 1),
                (1, "q0*q2^2", -1),
                (1, "q0", 1),
                (2, "q3^-1", -1),
                (2, "q1^-2*q3^-1", 1),
                (3, "q2^-1", -1),
                (3, "q2", 1),
            ],
        )
        .unwrap();
        let v11 = YMonomial::from_parts(
            ctx,
            &[
                (1, "q0*q2^2", -1),
                (1, "q0^-1", 1),
                (2, "q3", -1),
                (2, "q1^-2*q3^-1", 1),
            ],
        )
        .unwrap();
        // c(V₁₀)/c(V₀₀) = −(1−q₀²q₂²)/(1−q₂²) and c(V₁₁)/c(V₀₀) = q₀².
        let r10 = current.ratio(&v10, &v00).unwrap();
        let want = fr(ctx, &[("q0^2*q2^2", 1)], &[("q2^2", 1)]).neg();
        assert!(r10.value_eq(&want), "got {r10}, want {want}");
        let r11 = current.ratio(&v11, &v00).unwrap();
        assert!(r11.value_eq(&mono(ctx, "q0^2")), "got {r11}");

        let report = verify_screening_commutation(&current).unwrap();
        assert!(report.failures.is_empty(), "{report}");
        assert!(report.unpaired.is_empty(), "{report}");
        assert!(!report.frontier.is_empty());
    }

    #[test]
    fn disconnected_characters_are_rejected() {
        let c = CartanMatrix::preset("gl21").unwrap();
        let a = ym(&c, &[(1, "q", 1)]);
        let b = ym(&c, &[(2, "p^5", 1)]);
        let chi = Character::from_set(c.clone(), vec![a, b], CharStatus::Complete).unwrap();
        assert!(matches!(
            solve_coefficients(&chi, &ScreeningConfig::new()),
            Err(Error::Invalid(_))
        ));
    }
}
