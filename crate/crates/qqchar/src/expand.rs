//! The string-expansion algorithm: builds a character from a seed monomial.
//!
//! Expansion bookkeeping lives at the level of *positive variable
//! occurrences*: every `Y_{i,σ}` with power +1 in a produced monomial
//! carries a mark flag (consumed or not) and a polarity (which direction
//! strings containing it move).  One expansion step picks a monomial with
//! unmarked positives, finds a maximal unmarked run of one color along the
//! `q²`-ladder — `Y_{i,σ}, Y_{i,q²σ}, …, Y_{i,q^{2k−2}σ}` — and replaces it
//! by the full ladder of `k+1` members:
//!
//! * dominant direction: the run is consumed from the top, members
//!   `m_{j+1} = m_j · A_{i,q^{2j−1}σ}⁻¹` walk the gap down to the new foot
//!   position `q⁻²σ`; the step fails when `Y_{i,q⁻²σ}⁻¹` is present;
//! * anti-dominant direction: the mirror image, members
//!   `m_{t+1} = m_t · A_{i,q^{2(k−t)−1}σ}` walk up to the head position
//!   `q^{2k}σ`; the step fails when `Y_{i,q^{2k}σ}⁻¹` is present.
//!
//! All ladder positions are marked in every member; the other new positive
//! variables a root brings in stay unmarked and inherit the step's
//! polarity, so they seed later steps.  A member equal to an already-known
//! monomial is not added twice: its ladder variables are marked in the
//! existing copy instead, and any disagreement of mark state or polarity
//! aborts with a diagnostic.  Steps run strictly in depth order (all
//! monomials at distance `t` from the seed before any at `t+1`), which
//! makes the produced set independent of iteration details.
//!
//! Termination is by exhaustion (status `Complete`: no unmarked positives
//! remain), by cap (status `Window` with the unfinished monomials recorded
//! as the frontier), or by failure (a non-generic member, a blocked string,
//! or an inconsistent duplicate).  Windows are honest prefixes: enlarging
//! the caps only ever adds monomials.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::cartan::CartanMatrix;
use crate::character::{CharStatus, Character, Polarity, Provenance, YMonomial};
use crate::exponents::{ensure_same_ctx, ShiftMonomial};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Seeds and caps
// ---------------------------------------------------------------------------

/// Window caps for infinite characters, checked at depth-level boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Levels `0 .. max_depth` are processed; monomials beyond stay on the
    /// frontier.
    pub max_depth: usize,
    /// Hard ceiling on the number of distinct monomials kept.
    pub max_monomials: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_depth: 64, max_monomials: 100_000 }
    }
}

/// A seed for expansion: the starting monomial, the per-color expansion
/// direction, and the window caps.
///
/// Colors without an explicit polarity expand in the dominant direction,
/// so every positively occurring color always has one.
#[derive(Clone)]
pub struct Seed {
    /// The starting monomial (must be generic).
    pub monomial: YMonomial,
    /// Expansion direction per color; unlisted colors are dominant.
    pub polarity: BTreeMap<usize, Polarity>,
    /// Window caps.
    pub caps: Caps,
}

impl Seed {
    /// An all-dominant seed with default caps.
    pub fn dominant(monomial: YMonomial) -> Seed {
        Seed { monomial, polarity: BTreeMap::new(), caps: Caps::default() }
    }

    /// Sets one color's polarity.
    pub fn with_polarity(mut self, color: usize, p: Polarity) -> Seed {
        self.polarity.insert(color, p);
        self
    }

    /// Replaces the caps.
    pub fn with_caps(mut self, caps: Caps) -> Seed {
        self.caps = caps;
        self
    }

    /// Convenience: caps with the given depth and the default monomial
    /// ceiling.
    pub fn with_max_depth(mut self, max_depth: usize) -> Seed {
        self.caps.max_depth = max_depth;
        self
    }

    /// The polarity of one color (dominant when unspecified).
    pub fn polarity_of(&self, color: usize) -> Polarity {
        self.polarity.get(&color).copied().unwrap_or(Polarity::Dominant)
    }
}

// ---------------------------------------------------------------------------
// Mark state
// ---------------------------------------------------------------------------

type OccKey = (usize, Vec<i64>);

/// State of one positive variable occurrence.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Occ {
    marked: bool,
    polarity: Polarity,
}

/// Per-monomial bookkeeping: the occurrence states and the creation depth.
struct MonoState {
    occ: BTreeMap<OccKey, Occ>,
    depth: usize,
}

/// A maximal unmarked run of one color along the `q²`-ladder.
struct StringRun {
    color: usize,
    bottom: ShiftMonomial,
    len: usize,
    polarity: Polarity,
}

/// Why the engine stopped short of a result.
enum Halt {
    /// Algorithmic failure: the character does not exist as attempted; the
    /// diagnostic names the offending monomial and string.
    Soft(String),
    /// Structural error (context mismatch, torsion, …), propagated as-is.
    Hard(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Halt {
        Halt::Hard(e)
    }
}

struct Engine<'a> {
    cartan: &'a Arc<CartanMatrix>,
    q: ShiftMonomial,
    states: BTreeMap<YMonomial, MonoState>,
    levels: BTreeMap<usize, BTreeSet<YMonomial>>,
}

impl<'a> Engine<'a> {
    fn frontier(&self) -> BTreeSet<YMonomial> {
        self.states
            .iter()
            .filter(|(_, st)| st.occ.values().any(|o| !o.marked))
            .map(|(m, _)| m.clone())
            .collect()
    }

    fn run(&mut self, caps: &Caps) -> std::result::Result<CharStatus, Halt> {
        let mut from = 0usize;
        loop {
            // the lowest unprocessed level still holding unmarked positives
            let next = self
                .levels
                .range(from..)
                .find(|(_, set)| {
                    set.iter().any(|m| {
                        self.states.get(m).expect("level entry has a state").occ.values().any(|o| !o.marked)
                    })
                })
                .map(|(&lvl, _)| lvl);
            let Some(lvl) = next else { return Ok(CharStatus::Complete) };
            if lvl >= caps.max_depth || self.states.len() > caps.max_monomials {
                return Ok(CharStatus::Window { frontier: self.frontier() });
            }
            let snapshot: Vec<YMonomial> =
                self.levels.get(&lvl).expect("level exists").iter().cloned().collect();
            for m in snapshot {
                self.process_monomial(&m)?;
            }
            from = lvl + 1;
        }
    }

    /// Consumes the monomial's unmarked strings one at a time, smallest
    /// (color, bottom) first, until none remain.
    fn process_monomial(&mut self, m: &YMonomial) -> std::result::Result<(), Halt> {
        loop {
            let Some(run) = self.detect_runs(m)?.into_iter().next() else { return Ok(()) };
            self.expand_run(m, &run)?;
        }
    }

    /// The maximal unmarked runs of every color, sorted by (color, bottom).
    fn detect_runs(&self, m: &YMonomial) -> std::result::Result<Vec<StringRun>, Halt> {
        let ctx = self.cartan.ctx();
        let qq = &self.q * &self.q;
        let st = self.states.get(m).expect("state exists");
        let mut unmarked: BTreeMap<usize, BTreeMap<Vec<i64>, Polarity>> = BTreeMap::new();
        for ((color, exps), occ) in &st.occ {
            if !occ.marked {
                unmarked.entry(*color).or_default().insert(exps.clone(), occ.polarity);
            }
        }
        let mut runs = Vec::new();
        for (&color, set) in &unmarked {
            for (exps, &pol) in set {
                let mu = ctx.monomial(exps)?;
                if set.contains_key((&mu / &qq).exps()) {
                    continue; // extends downward: not a bottom
                }
                let mut len = 1usize;
                let mut cur = mu.clone();
                loop {
                    let up = &cur * &qq;
                    if up == mu || len > set.len() {
                        return Err(Halt::Soft(format!(
                            "the q²-ladder through Y({color},{mu}) in {m} does not terminate"
                        )));
                    }
                    match set.get(up.exps()) {
                        None => break,
                        Some(&p) if p != pol => {
                            return Err(Halt::Soft(format!(
                                "string of color {color} at Y({color},{mu}) in {m} mixes \
                                 expansion directions"
                            )))
                        }
                        Some(_) => {
                            cur = up;
                            len += 1;
                        }
                    }
                }
                runs.push(StringRun { color, bottom: mu, len, polarity: pol });
            }
        }
        runs.sort_by(|a, b| a.color.cmp(&b.color).then_with(|| a.bottom.cmp(&b.bottom)));
        Ok(runs)
    }

    /// Expands one string: marks it in `m`, rolls out the ladder members and
    /// inserts or merges each one.
    fn expand_run(&mut self, m: &YMonomial, run: &StringRun) -> std::result::Result<(), Halt> {
        let i = run.color;
        let q = self.q.clone();
        let qq = &q * &q;
        let base_depth = self.states.get(m).expect("state exists").depth;

        // ladder positions and the root shifts of the member steps
        let (ladder, taus, inverse): (Vec<ShiftMonomial>, Vec<ShiftMonomial>, bool) =
            match run.polarity {
                Polarity::Dominant => {
                    let foot = &run.bottom / &qq;
                    if m.power(i, &foot) == -1 {
                        return Err(Halt::Soft(format!(
                            "blocked string: {m} contains Y({i},{foot})^-1 below the string \
                             starting at Y({i},{})",
                            run.bottom
                        )));
                    }
                    let mut ladder = vec![foot];
                    let mut taus = Vec::new();
                    for s in 0..run.len {
                        ladder.push(&run.bottom * &q.pow(2 * s as i64));
                        taus.push(&run.bottom * &q.pow(2 * s as i64 - 1));
                    }
                    (ladder, taus, true)
                }
                Polarity::AntiDominant => {
                    let head = &run.bottom * &q.pow(2 * run.len as i64);
                    if m.power(i, &head) == -1 {
                        return Err(Halt::Soft(format!(
                            "blocked string: {m} contains Y({i},{head})^-1 above the string \
                             starting at Y({i},{})",
                            run.bottom
                        )));
                    }
                    let mut ladder = Vec::new();
                    let mut taus = Vec::new();
                    for s in 0..run.len {
                        ladder.push(&run.bottom * &q.pow(2 * s as i64));
                        taus.push(&run.bottom * &q.pow(2 * (run.len - 1 - s) as i64 + 1));
                    }
                    ladder.push(head);
                    (ladder, taus, false)
                }
            };

        // mark the consumed ladder in the source monomial
        {
            let stm = self.states.get_mut(m).expect("state exists");
            for pos in &ladder {
                if let Some(o) = stm.occ.get_mut(&(i, pos.exps().to_vec())) {
                    o.marked = true;
                }
            }
        }

        let mut cur_val = m.clone();
        let mut cur_occ = self.states.get(m).expect("state exists").occ.clone();
        for (step, tau) in taus.iter().enumerate() {
            let root = self.cartan.affine_root(i, tau)?;
            let mult = if inverse { root.monomial.inv() } else { root.monomial };
            let mut new_occ = cur_occ.clone();
            for (color, shift, delta) in mult.entries() {
                let newp = cur_val.power(color, &shift) + delta;
                if newp.abs() >= 2 {
                    return Err(Halt::Soft(format!(
                        "non-generic member produced while expanding the color-{i} string at \
                         Y({i},{}) of {m}: Y({color},{shift}) reaches power {newp}",
                        run.bottom
                    )));
                }
                let key = (color, shift.exps().to_vec());
                if newp == 1 {
                    new_occ.insert(key, Occ { marked: false, polarity: run.polarity });
                } else {
                    new_occ.remove(&key);
                }
            }
            let new_val = cur_val.mul(&mult);
            let mut participants = Vec::new();
            for pos in &ladder {
                if new_val.power(i, pos) == 1 {
                    let key = (i, pos.exps().to_vec());
                    new_occ.get_mut(&key).expect("ladder positive has an occurrence").marked = true;
                    participants.push(key);
                }
            }
            debug_assert!(
                new_val
                    .entries()
                    .filter(|(_, _, p)| *p == 1)
                    .all(|(c, s, _)| new_occ.contains_key(&(c, s.exps().to_vec()))),
                "occurrence map out of sync with monomial value"
            );

            let depth = base_depth + step + 1;
            match self.states.get_mut(&new_val) {
                None => {
                    self.states
                        .insert(new_val.clone(), MonoState { occ: new_occ.clone(), depth });
                    self.levels.entry(depth).or_default().insert(new_val.clone());
                }
                Some(existing) => {
                    debug_assert_eq!(existing.depth, depth, "depth is intrinsic to the monomial");
                    merge_duplicate(existing, &new_occ, &participants, &new_val, i)?;
                    new_occ = existing.occ.clone();
                }
            }
            cur_val = new_val;
            cur_occ = new_occ;
        }
        Ok(())
    }
}

/// The duplicate rule: a re-produced monomial is not added again; its
/// participating ladder variables are marked in the existing copy.  The
/// existing marks must be all-set (nothing to do) or all-clear (set them);
/// anything else — partial marks, polarity disagreement, or any other
/// difference between the two occurrence states — is an inconsistency the
/// algorithm refuses to guess about.
fn merge_duplicate(
    existing: &mut MonoState,
    incoming: &BTreeMap<OccKey, Occ>,
    participants: &[OccKey],
    value: &YMonomial,
    color: usize,
) -> std::result::Result<(), Halt> {
    for key in participants {
        let e = existing.occ.get(key).expect("equal values share occurrence keys");
        let n = incoming.get(key).expect("participant is an incoming occurrence");
        if e.polarity != n.polarity {
            return Err(Halt::Soft(format!(
                "duplicate monomial {value} reached with conflicting expansion direction on \
                 color {color}"
            )));
        }
    }
    let marks: Vec<bool> =
        participants.iter().map(|k| existing.occ[k].marked).collect();
    if marks.iter().all(|&x| x) {
        // already consumed: nothing to do
    } else if marks.iter().all(|&x| !x) {
        for key in participants {
            existing.occ.get_mut(key).expect("checked above").marked = true;
        }
    } else {
        return Err(Halt::Soft(format!(
            "duplicate monomial {value} reached with partially marked color-{color} string"
        )));
    }
    if existing.occ != *incoming {
        let diff = incoming
            .iter()
            .find(|(k, o)| existing.occ.get(*k) != Some(*o))
            .map(|((c, _), _)| *c)
            .unwrap_or(color);
        return Err(Halt::Soft(format!(
            "duplicate monomial {value} reached with inconsistent mark state on color {diff}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Expands a seed over a Cartan matrix into a character.
///
/// The result's status is `Complete`, `Window` (a cap was hit; the frontier
/// records the unfinished monomials), or `Failed` (blocked string,
/// non-generic member, or inconsistent duplicate — the reason names the
/// witness).  The seed is recorded as provenance so the result can be
/// truncated or re-expanded later.
pub fn expand(seed: &Seed, cartan: &Arc<CartanMatrix>) -> Result<Character> {
    ensure_same_ctx(cartan.ctx(), seed.monomial.ctx())?;
    if !seed.monomial.is_generic() {
        return Err(Error::Expansion(format!(
            "seed {} is not generic: every power must be ±1",
            seed.monomial
        )));
    }
    let q = cartan.ctx().var("q")?;
    let mut occ = BTreeMap::new();
    for (color, shift, pow) in seed.monomial.entries() {
        cartan.index_of(color)?;
        if pow == 1 {
            occ.insert(
                (color, shift.exps().to_vec()),
                Occ { marked: false, polarity: seed.polarity_of(color) },
            );
        }
    }
    let mut engine = Engine { cartan, q, states: BTreeMap::new(), levels: BTreeMap::new() };
    engine.states.insert(seed.monomial.clone(), MonoState { occ, depth: 0 });
    engine.levels.entry(0).or_default().insert(seed.monomial.clone());
    let status = match engine.run(&seed.caps) {
        Ok(status) => status,
        Err(Halt::Soft(reason)) => CharStatus::Failed { reason },
        Err(Halt::Hard(e)) => return Err(e),
    };
    let monomials = engine.states.keys().map(|m| (m.clone(), 1u32)).collect();
    Ok(Character::new(cartan.clone(), monomials, status)?.with_provenance(Provenance {
        seed: seed.monomial.clone(),
        polarity: seed.polarity.clone(),
    }))
}

/// Convenience: all-dominant expansion with default caps.
pub fn expand_dominant(monomial: YMonomial, cartan: &Arc<CartanMatrix>) -> Result<Character> {
    expand(&Seed::dominant(monomial), cartan)
}

/// Truncates a character by a pure-negative monomial: re-runs the expansion
/// from `seed · extra`.  The result's monomials are among `{m · extra}`,
/// with the branches killed by the new negative variables dropped.
pub fn truncate(chi: &Character, extra: &YMonomial, caps: &Caps) -> Result<Character> {
    let prov = chi.provenance().ok_or_else(|| {
        Error::Expansion("truncation needs seed provenance; expand the character first".into())
    })?;
    if extra.entries().any(|(_, _, p)| p > 0) {
        return Err(Error::Expansion(format!(
            "truncation monomial {extra} must carry negative powers only"
        )));
    }
    let seed = Seed {
        monomial: prov.seed.mul(extra),
        polarity: prov.polarity.clone(),
        caps: *caps,
    };
    expand(&seed, chi.cartan())
}

/// Expands in a resonance quotient of the shift lattice: each relation
/// vector (in context-generator exponents) is set to 1.  Characters that
/// are infinite generically can close up into finite ones here.
pub fn expand_under_resonance(
    seed: &Seed,
    cartan: &Arc<CartanMatrix>,
    relations: &[Vec<i64>],
) -> Result<Character> {
    let qctx = cartan.ctx().quotient(relations)?;
    let qcartan = cartan.transfer(&qctx)?;
    let report = qcartan.validate();
    if !report.is_valid() {
        return Err(Error::Cartan(format!(
            "matrix degenerates in the resonance quotient: {report}"
        )));
    }
    let qseed = Seed {
        monomial: seed.monomial.transfer(&qctx)?,
        polarity: seed.polarity.clone(),
        caps: seed.caps,
    };
    expand(&qseed, &qcartan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{build_graph, depth_profile, is_slim, is_tame};

    fn gl21() -> Arc<CartanMatrix> {
        CartanMatrix::preset("gl21").unwrap()
    }

    fn d21a() -> Arc<CartanMatrix> {
        CartanMatrix::preset("d21a").unwrap()
    }

    fn ym(cartan: &Arc<CartanMatrix>, parts: &[(usize, &str, i64)]) -> YMonomial {
        YMonomial::from_parts(cartan.ctx(), parts).unwrap()
    }

    /// The infinite fundamental line over gl(2,1), windowed at depth 6:
    /// pairs `Y_{1,qp⁻ⁱ} Y_{2,q1p⁻ⁱ} Y_{2,q1}⁻¹` and
    /// `Y_{1,q⁻¹p⁻ⁱ} Y_{2,q1⁻¹p⁻ⁱ} Y_{2,q1}⁻¹`.
    #[test]
    fn fundamental_line_window() {
        let c = gl21();
        let seed = Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(6);
        let chi = expand(&seed, &c).unwrap();
        let CharStatus::Window { frontier } = chi.status() else {
            panic!("expected a window, got {:?}", chi.status())
        };
        assert_eq!(chi.monomial_count(), 7);
        let mut expected = vec![ym(&c, &[(1, "q", 1)])];
        for i in 0..=2i64 {
            // depth 2i+1: the lower member of the i-th pair
            expected.push(ym(
                &c,
                &[
                    (1, &format!("q^-1*p^-{i}"), 1),
                    (2, &format!("q1^-1*p^-{i}"), 1),
                    (2, "q1", -1),
                ],
            ));
        }
        for i in 1..=3i64 {
            // depth 2i: the upper member of the i-th pair
            expected.push(ym(
                &c,
                &[(1, &format!("q*p^-{i}"), 1), (2, &format!("q1*p^-{i}"), 1), (2, "q1", -1)],
            ));
        }
        let produced: BTreeSet<YMonomial> = chi.iter().map(|(m, _)| m.clone()).collect();
        assert_eq!(produced, expected.into_iter().collect());
        // the frontier is the deepest pair-head, still carrying unmarked positives
        assert_eq!(frontier.len(), 1);
        assert!(frontier.contains(&ym(&c, &[(1, "q*p^-3", 1), (2, "q1*p^-3", 1), (2, "q1", -1)])));
    }

    #[test]
    fn seed_without_positives_is_complete() {
        let c = gl21();
        let seed = Seed::dominant(ym(&c, &[(1, "q", -1), (2, "q1^5", -1)]));
        let chi = expand(&seed, &c).unwrap();
        assert!(chi.is_complete());
        assert_eq!(chi.monomial_count(), 1);
    }

    #[test]
    fn truncated_line_is_the_three_term_segment() {
        let c = gl21();
        let line =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(8), &c).unwrap();
        let extra = ym(&c, &[(1, "q*p^-1", -1)]);
        let seg = truncate(&line, &extra, &Caps::default()).unwrap();
        assert!(seg.is_complete());
        let expected = vec![
            ym(&c, &[(1, "q", 1), (1, "q*p^-1", -1)]),
            ym(&c, &[(1, "q^-1", 1), (1, "q*p^-1", -1), (2, "q1^-1", 1), (2, "q1", -1)]),
            ym(&c, &[(2, "q1*p^-1", 1), (2, "q1", -1)]),
        ];
        let produced: Vec<YMonomial> = seg.iter().map(|(m, _)| m.clone()).collect();
        assert_eq!(produced, {
            let mut e = expected;
            e.sort();
            e
        });
        // truncation consistency: every monomial is a line monomial times extra
        let line_shifted: BTreeSet<YMonomial> =
            line.iter().map(|(m, _)| m.mul(&extra)).collect();
        assert!(seg.iter().all(|(m, _)| line_shifted.contains(m)));
    }

    #[test]
    fn longer_truncations_have_odd_lengths() {
        let c = gl21();
        let line =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(16), &c).unwrap();
        for n in 2..4i64 {
            let extra = ym(&c, &[(1, &format!("q*p^-{n}"), -1)]);
            let seg = truncate(&line, &extra, &Caps::default()).unwrap();
            assert!(seg.is_complete(), "segment n={n} should close");
            assert_eq!(seg.monomial_count() as i64, 2 * n + 1);
        }
    }

    #[test]
    fn adjoint_of_the_exceptional_superalgebra() {
        let c = d21a();
        let seed_m = ym(
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
        let chi = expand(&Seed::dominant(seed_m.clone()), &c).unwrap();
        assert!(chi.is_complete());
        assert_eq!(chi.monomial_count(), 18);
        assert_eq!(depth_profile(&chi, &seed_m).unwrap(), vec![1, 3, 3, 4, 3, 3, 1]);
        let g = build_graph(&chi).unwrap();
        assert!(g.is_connected());
        assert_eq!(g.dominant_vertices(&[1, 2, 3]).len(), 1);
        assert_eq!(g.anti_dominant_vertices(&[1, 2, 3]).len(), 1);
        assert!(is_tame(&chi));
        assert!(is_slim(&chi));
    }

    #[test]
    fn anti_dominant_line_mirrors_the_dominant_one() {
        let c = gl21();
        let seed = Seed::dominant(ym(&c, &[(1, "q^-1", 1)]))
            .with_polarity(1, Polarity::AntiDominant)
            .with_polarity(2, Polarity::AntiDominant)
            .with_max_depth(2);
        let chi = expand(&seed, &c).unwrap();
        let expected: BTreeSet<YMonomial> = [
            ym(&c, &[(1, "q^-1", 1)]),
            ym(&c, &[(1, "q", 1), (2, "q1", 1), (2, "q1^-1", -1)]),
            ym(&c, &[(1, "q*q1^2", 1), (2, "q^2*q1", 1), (2, "q1^-1", -1)]),
        ]
        .into_iter()
        .collect();
        let produced: BTreeSet<YMonomial> = chi.iter().map(|(m, _)| m.clone()).collect();
        assert_eq!(produced, expected);
        assert!(matches!(chi.status(), CharStatus::Window { .. }));
    }

    #[test]
    fn enlarging_caps_only_adds_monomials() {
        let c = gl21();
        let small =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(3), &c).unwrap();
        let large =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(6), &c).unwrap();
        let big: BTreeSet<YMonomial> = large.iter().map(|(m, _)| m.clone()).collect();
        assert!(small.monomial_count() < large.monomial_count());
        assert!(small.iter().all(|(m, _)| big.contains(m)));
    }

    #[test]
    fn blocked_string_fails_with_a_witness() {
        let c = gl21();
        let seed = Seed::dominant(ym(&c, &[(1, "q", 1), (1, "q^-1", -1)]));
        let chi = expand(&seed, &c).unwrap();
        let CharStatus::Failed { reason } = chi.status() else {
            panic!("expected failure, got {:?}", chi.status())
        };
        assert!(reason.contains("blocked"), "unexpected reason: {reason}");
    }

    #[test]
    fn doubling_a_positive_variable_fails_generically() {
        let c = gl21();
        let seed = Seed::dominant(ym(&c, &[(1, "q", 1), (2, "q1^-1", 1)]));
        let chi = expand(&seed, &c).unwrap();
        let CharStatus::Failed { reason } = chi.status() else {
            panic!("expected failure, got {:?}", chi.status())
        };
        assert!(reason.contains("non-generic"), "unexpected reason: {reason}");
    }

    /// The vector character over the exceptional matrix, windowed: two
    /// horizontal chains linked by color-1 rungs.
    #[test]
    fn exceptional_vector_window_first_twelve() {
        let c = d21a();
        let seed = Seed::dominant(ym(&c, &[(3, "q0^2*q2", 1), (3, "q2^-1", -1)]))
            .with_max_depth(6);
        let chi = expand(&seed, &c).unwrap();
        assert!(matches!(chi.status(), CharStatus::Window { .. }));
        assert_eq!(chi.monomial_count(), 12);
        let mut expected: BTreeSet<YMonomial> = BTreeSet::new();
        // top chain, even positions: k = 0..=3 covers depths 0,2,4,6
        for k in 0..=3i64 {
            expected.insert(ym(
                &c,
                &[
                    (1, "q0", 1),
                    (1, &format!("q0*p1^-{k}"), -1),
                    (2, &format!("q3^-1*p1^-{k}"), 1),
                    (2, "q3^-1", -1),
                    (3, &format!("q0^2*q2*p1^-{k}"), 1),
                    (3, "q2^-1", -1),
                ],
            ));
        }
        // top chain, odd positions: depths 1,3,5
        for k in 0..=2i64 {
            expected.insert(ym(
                &c,
                &[
                    (1, "q0", 1),
                    (1, &format!("q0*q2^2*p1^-{k}"), -1),
                    (2, &format!("q1^-2*q3^-1*p1^-{k}"), 1),
                    (2, "q3^-1", -1),
                    (3, &format!("q2*p1^-{k}"), 1),
                    (3, "q2^-1", -1),
                ],
            ));
        }
        // bottom chain, even positions at depths 3 and 5
        for k in 1..=2i64 {
            expected.insert(ym(
                &c,
                &[
                    (1, "q0^-1", 1),
                    (1, &format!("q0*p1^-{k}"), -1),
                    (2, &format!("q3^-1*p1^-{k}"), 1),
                    (2, "q3", -1),
                    (3, &format!("q0^2*q2*p1^-{k}"), 1),
                    (3, "q2", -1),
                ],
            ));
        }
        // bottom chain, odd positions at depths 2, 4, 6
        for k in 0..=2i64 {
            expected.insert(ym(
                &c,
                &[
                    (1, "q0^-1", 1),
                    (1, &format!("q0*q2^2*p1^-{k}"), -1),
                    (2, &format!("q1^-2*q3^-1*p1^-{k}"), 1),
                    (2, "q3", -1),
                    (3, &format!("q2*p1^-{k}"), 1),
                    (3, "q2", -1),
                ],
            ));
        }
        let produced: BTreeSet<YMonomial> = chi.iter().map(|(m, _)| m.clone()).collect();
        assert_eq!(produced, expected);
    }

    /// Resonances close the infinite vector character into finite ones.
    #[test]
    fn resonance_truncations_of_the_vector() {
        let c = d21a();
        let seed = Seed::dominant(ym(&c, &[(3, "q0^2*q2", 1), (3, "q2^-1", -1)]));
        // p1^k = p2 gives 4k+2 monomials
        for (k, expected) in [(1i64, 6usize), (2, 10)] {
            let chi =
                expand_under_resonance(&seed, &c, &[vec![2 * k - 2, 2 * k, -2]]).unwrap();
            assert!(chi.is_complete(), "p1^{k}=p2 should close up");
            assert_eq!(chi.monomial_count(), expected);
        }
        // p1^k = q0² gives 4k monomials (k = 1 is excluded: that relation
        // collapses to q1² = 1, which degenerates the matrix)
        for (k, expected) in [(2i64, 8usize)] {
            let chi =
                expand_under_resonance(&seed, &c, &[vec![2 * k - 2, 2 * k, 0]]).unwrap();
            assert!(chi.is_complete(), "p1^{k}=q0^2 should close up");
            assert_eq!(chi.monomial_count(), expected);
        }
        // and k = 1 of that family is refused with a torsion diagnostic
        let err = expand_under_resonance(&seed, &c, &[vec![0, 2, 0]]).unwrap_err();
        assert!(err.to_string().contains("squares to 1"), "unexpected: {err}");
    }
}
