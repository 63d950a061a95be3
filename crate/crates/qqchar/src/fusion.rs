//! Combinatorial contractions, the relative pairing, and the fusion product.
//!
//! The contractions assign shift-lattice Laurent polynomials to monomials:
//!
//! ```text
//!     l_{i,σ}(Y_{j,τ}^{p}) = p · δ_{ij} (q − q⁻¹) τσ⁻¹ ,
//!     r_{i,σ}(Y_{j,τ}^{p}) = −p · δ_{ij} (q − q⁻¹) τ⁻¹σ ,
//! ```
//!
//! extended additively over a monomial's entries.  Given base monomials
//! `m₀, n₀` and the affine-root factorizations `m = m₀·∏A_{i,σ}^{a}`,
//! `n = n₀·∏A_{i,σ}^{b}`, the relative contraction is
//!
//! ```text
//!     [m,n]/[m₀,n₀] = Σ over the union of root indices of
//!                       a · l_{i,σ}(n)  +  b · r_{i,σ}(m₀) ,
//! ```
//!
//! and the relative pairing `(m,n)` is its constant term, an integer.  The
//! pairing is symmetric in the two sides, and changing bases shifts every
//! pairing by one common constant (the cocycle identity), so the set of
//! maximizing pairs is base-independent.
//!
//! The fusion product of two finite characters keeps, out of all pairwise
//! products `m·n`, exactly the ones whose pairing attains the maximum.  For
//! mutually generic inputs every pairing is zero and fusion is the plain
//! product.  The result is flagged `non_character` when a kept product is
//! non-generic or reached with multiplicity ≥ 2 — those are reported, not
//! repaired.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num::rational::BigRational;
use num::FromPrimitive;

use crate::cartan::CartanMatrix;
use crate::character::{build_graph, factor_over_affine_roots, Character, Provenance, YMonomial};
use crate::exponents::{LaurentPoly, ParamContext, ShiftMonomial};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Contractions
// ---------------------------------------------------------------------------

/// The left contraction `l_{i,σ}` applied to a monomial: a Laurent
/// polynomial in the shift lattice.  Only color-`i` entries contribute.
pub fn left_contraction(color: usize, sigma: &ShiftMonomial, m: &YMonomial) -> Result<LaurentPoly> {
    let ctx = m.ctx();
    let q = ctx.var("q")?;
    let mut out = LaurentPoly::zero(ctx);
    for (j, tau, pow) in m.entries() {
        if j != color {
            continue;
        }
        let base = &tau * &sigma.inv();
        let coef = BigRational::from_i64(pow).expect("small integer");
        out.add_term(&(&base * &q), coef.clone());
        out.add_term(&(&base / &q), -coef);
    }
    Ok(out)
}

/// The right contraction `r_{i,σ}` applied to a monomial.
pub fn right_contraction(
    color: usize,
    sigma: &ShiftMonomial,
    m: &YMonomial,
) -> Result<LaurentPoly> {
    let ctx = m.ctx();
    let q = ctx.var("q")?;
    let mut out = LaurentPoly::zero(ctx);
    for (j, tau, pow) in m.entries() {
        if j != color {
            continue;
        }
        let base = &tau.inv() * sigma;
        let coef = BigRational::from_i64(pow).expect("small integer");
        out.add_term(&(&base * &q), -coef.clone());
        out.add_term(&(&base / &q), coef);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The relative pairing
// ---------------------------------------------------------------------------

/// A relative contraction value: a shift-lattice Laurent polynomial whose
/// constant term is the pairing.
pub struct PairingValue {
    value: LaurentPoly,
}

impl PairingValue {
    /// The full Laurent-polynomial value.
    pub fn value(&self) -> &LaurentPoly {
        &self.value
    }

    /// The coefficient of the trivial shift monomial.
    pub fn constant_term(&self) -> BigRational {
        self.value.constant_term()
    }

    /// The pairing as an integer (the constant term always is one here,
    /// since contractions enter with integer multiplicities).
    pub fn pairing(&self) -> Result<i64> {
        let c = self.constant_term();
        if !c.is_integer() {
            return Err(Error::Inconsistent(format!(
                "pairing constant term {c} is not an integer"
            )));
        }
        i64::try_from(&c.to_integer())
            .map_err(|_| Error::Inconsistent("pairing out of i64 range".into()))
    }
}

/// The relative contraction `[m,n]/[m₀,n₀]` as a Laurent polynomial.
///
/// Both `m/m₀` and `n/n₀` must factor over shifted affine roots.
pub fn relative_contraction(
    cartan: &Arc<CartanMatrix>,
    m: &YMonomial,
    n: &YMonomial,
    m0: &YMonomial,
    n0: &YMonomial,
) -> Result<PairingValue> {
    let fm = factor_over_affine_roots(cartan, m, m0)?;
    let fn_ = factor_over_affine_roots(cartan, n, n0)?;
    contraction_from_factors(cartan.ctx(), &fm, &fn_, n, m0)
}

/// Assembles the relative contraction from precomputed factorizations.
fn contraction_from_factors(
    ctx: &Arc<ParamContext>,
    fm: &BTreeMap<(usize, ShiftMonomial), i64>,
    fn_: &BTreeMap<(usize, ShiftMonomial), i64>,
    n: &YMonomial,
    m0: &YMonomial,
) -> Result<PairingValue> {
    let keys: BTreeSet<&(usize, ShiftMonomial)> = fm.keys().chain(fn_.keys()).collect();
    let mut value = LaurentPoly::zero(ctx);
    for key in keys {
        let (color, sigma) = key;
        let a = fm.get(key).copied().unwrap_or(0);
        let b = fn_.get(key).copied().unwrap_or(0);
        if a != 0 {
            let l = left_contraction(*color, sigma, n)?;
            value = &value + &l.scale(&BigRational::from_i64(a).expect("small"));
        }
        if b != 0 {
            let r = right_contraction(*color, sigma, m0)?;
            value = &value + &r.scale(&BigRational::from_i64(b).expect("small"));
        }
    }
    Ok(PairingValue { value })
}

/// The relative pairing `(m,n)_{m₀,n₀}`: the integer constant term of the
/// relative contraction.
pub fn relative_pairing(
    cartan: &Arc<CartanMatrix>,
    m: &YMonomial,
    n: &YMonomial,
    m0: &YMonomial,
    n0: &YMonomial,
) -> Result<i64> {
    relative_contraction(cartan, m, n, m0, n0)?.pairing()
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

/// Result of a fusion product: the kept monomials, the maximal pairing, and
/// whether the output fails the character hypotheses (a repeated or
/// non-generic product).
pub struct Fusion {
    /// The combinatorial fusion product.
    pub character: Character,
    /// The maximal pairing value over all pairs.
    pub max_pairing: i64,
    /// True when some kept product has multiplicity ≥ 2 or is non-generic;
    /// the monomials are still reported.
    pub non_character: bool,
}

/// Fusion with explicitly chosen base monomials (mainly for testing
/// base-independence; `fuse` picks canonical bases).
pub fn fuse_with_bases(
    chi1: &Character,
    chi2: &Character,
    m0: &YMonomial,
    n0: &YMonomial,
) -> Result<Fusion> {
    if chi1.cartan() != chi2.cartan() {
        return Err(Error::ContextMismatch(
            "fusion of characters over different matrices".into(),
        ));
    }
    if !chi1.is_complete() || !chi2.is_complete() {
        return Err(Error::Status(
            "fusion needs complete characters; windowed or failed inputs are refused".into(),
        ));
    }
    if !chi1.contains(m0) || !chi2.contains(n0) {
        return Err(Error::Invalid("fusion base must be a monomial of its character".into()));
    }
    for (chi, side) in [(chi1, "left"), (chi2, "right")] {
        if !build_graph(chi)?.is_connected() {
            return Err(Error::Invalid(format!(
                "{side} fusion input is not simple: its graph is disconnected"
            )));
        }
    }
    let cartan = chi1.cartan();
    let f1: Vec<(&YMonomial, u32, BTreeMap<(usize, ShiftMonomial), i64>)> = chi1
        .iter()
        .map(|(m, c)| factor_over_affine_roots(cartan, m, m0).map(|f| (m, c, f)))
        .collect::<Result<_>>()?;
    let f2: Vec<(&YMonomial, u32, BTreeMap<(usize, ShiftMonomial), i64>)> = chi2
        .iter()
        .map(|(n, c)| factor_over_affine_roots(cartan, n, n0).map(|f| (n, c, f)))
        .collect::<Result<_>>()?;

    let mut table: Vec<(i64, &YMonomial, &YMonomial, u32)> = Vec::new();
    let mut max_pairing = i64::MIN;
    for (m, cm, fm) in &f1 {
        for (n, cn, fn_) in &f2 {
            let p = contraction_from_factors(cartan.ctx(), fm, fn_, n, m0)?.pairing()?;
            max_pairing = max_pairing.max(p);
            table.push((p, m, n, cm * cn));
        }
    }
    let mut kept: BTreeMap<YMonomial, u32> = BTreeMap::new();
    let mut non_generic = false;
    for (p, m, n, mult) in table {
        if p == max_pairing {
            let prod = m.mul(n);
            non_generic |= !prod.is_generic();
            *kept.entry(prod).or_insert(0) += mult;
        }
    }
    let non_character = non_generic || kept.values().any(|&c| c >= 2);
    let mut character = Character::new(
        cartan.clone(),
        kept.into_iter().collect(),
        crate::character::CharStatus::Complete,
    )?;
    if let Some(mut p) = Provenance::merge(chi1.provenance(), chi2.provenance()) {
        // The product of the input seeds need not survive the pairing cut, so
        // rebase the seed on the kept monomial of least depth below it: that
        // is the fused character's own dominant monomial.
        let mut best: Option<(i64, YMonomial)> = None;
        for (m, _) in character.iter() {
            match factor_over_affine_roots(cartan, &p.seed, m) {
                Ok(f) if f.values().all(|&e| e >= 0) => {
                    let depth: i64 = f.values().sum();
                    if best.as_ref().map_or(true, |(d, _)| depth < *d) {
                        best = Some((depth, m.clone()));
                    }
                }
                Ok(_) => {}
                Err(_) => {
                    best = None;
                    break;
                }
            }
        }
        if let Some((_, m)) = best {
            p.seed = m;
        }
        character = character.with_provenance(p);
    }
    Ok(Fusion { character, max_pairing, non_character })
}

/// The combinatorial fusion product of two finite characters, using the
/// smallest monomial of each side as its base.
pub fn fuse(chi1: &Character, chi2: &Character) -> Result<Fusion> {
    let m0 = chi1
        .iter()
        .next()
        .ok_or_else(|| Error::Invalid("fusion of an empty character".into()))?
        .0
        .clone();
    let n0 = chi2
        .iter()
        .next()
        .ok_or_else(|| Error::Invalid("fusion of an empty character".into()))?
        .0
        .clone();
    fuse_with_bases(chi1, chi2, &m0, &n0)
}

/// Fusion in a resonance quotient: both characters are transferred to the
/// quotient lattice first, so the constant-term extraction — and with it
/// the set of maximizing pairs — happens there.
pub fn fuse_under_resonance(
    chi1: &Character,
    chi2: &Character,
    relations: &[Vec<i64>],
) -> Result<Fusion> {
    let qctx = chi1.ctx().quotient(relations)?;
    let q1 = chi1.transfer(&qctx)?;
    let q2 = chi2.transfer(&qctx)?;
    fuse(&q1, &q2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::{depth_profile, CharStatus};
    use crate::expand::{expand, Seed};

    fn gl21() -> Arc<CartanMatrix> {
        CartanMatrix::preset("gl21").unwrap()
    }

    fn a1() -> Arc<CartanMatrix> {
        CartanMatrix::preset("glnn(1)").unwrap()
    }

    fn d21a() -> Arc<CartanMatrix> {
        CartanMatrix::preset("d21a").unwrap()
    }

    fn ym(cartan: &Arc<CartanMatrix>, parts: &[(usize, &str, i64)]) -> YMonomial {
        YMonomial::from_parts(cartan.ctx(), parts).unwrap()
    }

    fn adjoint18() -> Character {
        let c = d21a();
        let seed = ym(
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
        expand(&Seed::dominant(seed), &c).unwrap()
    }

    #[test]
    fn left_of_root_matches_right_of_root() {
        // l_{1,τ1}(A_{2,τ2}) = (q−q⁻¹)(σ₁₂−σ₁₂⁻¹)τ₂τ₁⁻¹ = r_{2,τ2}(A_{1,τ1})
        let c = gl21();
        let ctx = c.ctx().clone();
        let t1 = ctx.parse("q1^3").unwrap();
        let t2 = ctx.parse("q^-2").unwrap();
        let a2 = c.affine_root(2, &t2).unwrap().monomial;
        let a1m = c.affine_root(1, &t1).unwrap().monomial;
        let l = left_contraction(1, &t1, &a2).unwrap();
        let r = right_contraction(2, &t2, &a1m).unwrap();
        assert_eq!(l, r);
        // explicit value: four terms q^{±1} q1^{±1} τ₂τ₁⁻¹
        let base = &t2 * &t1.inv();
        let mut expect = LaurentPoly::zero(&ctx);
        for (qe, q1e, s) in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)] {
            let m = &(&base * &ctx.parse("q").unwrap().pow(qe)) * &ctx.parse("q1").unwrap().pow(q1e);
            expect.add_term(&m, BigRational::from_i64(s).unwrap());
        }
        assert_eq!(l, expect);
    }

    #[test]
    fn contraction_ignores_other_colors_and_constants() {
        let c = gl21();
        let ctx = c.ctx().clone();
        let sigma = ctx.parse("q").unwrap();
        assert!(left_contraction(1, &sigma, &YMonomial::one(&ctx)).unwrap().is_zero());
        let m = ym(&c, &[(2, "q1", 1)]);
        assert!(left_contraction(1, &sigma, &m).unwrap().is_zero());
        assert!(right_contraction(1, &sigma, &m).unwrap().is_zero());
    }

    #[test]
    fn pairing_of_bases_is_zero_and_swap_antisymmetric() {
        let c = a1();
        let m0 = ym(&c, &[(1, "1", 1)]);
        let m1 = ym(&c, &[(1, "q^2", 1)]);
        let n0 = ym(&c, &[(1, "q^2", 1)]);
        let n1 = ym(&c, &[(1, "q^4", 1)]);
        assert_eq!(relative_pairing(&c, &m0, &n0, &m0, &n0).unwrap(), 0);
        // [m,n]/[m₀,n₀] = −[m₀,n₀]/[m,n]
        let fwd = relative_contraction(&c, &m1, &n1, &m0, &n0).unwrap();
        let bwd = relative_contraction(&c, &m0, &n0, &m1, &n1).unwrap();
        assert_eq!(fwd.value(), &-bwd.value());
    }

    #[test]
    fn cocycle_identity_on_block_monomials() {
        let c = a1();
        let ms = [
            ym(&c, &[(1, "1", 1)]),
            ym(&c, &[(1, "q^2", 1)]),
            ym(&c, &[(1, "q^4", 1)]),
        ];
        let ns = [
            ym(&c, &[(1, "q^2", 1)]),
            ym(&c, &[(1, "q^4", 1)]),
            ym(&c, &[(1, "q^6", 1)]),
        ];
        let m = &ms[2];
        let n = &ns[2];
        let ab = relative_contraction(&c, m, n, &ms[0], &ns[0]).unwrap();
        let via = {
            let first = relative_contraction(&c, m, n, &ms[1], &ns[1]).unwrap();
            let second = relative_contraction(&c, &ms[1], &ns[1], &ms[0], &ns[0]).unwrap();
            first.value() + second.value()
        };
        assert_eq!(ab.value(), &via);
    }

    /// The two-block example: fusion drops exactly the squared pair.
    #[test]
    fn overlapping_blocks_fuse_to_three_terms() {
        let c = a1();
        let chi1 = Character::from_set(
            c.clone(),
            vec![ym(&c, &[(1, "1", 1)]), ym(&c, &[(1, "q^2", 1)])],
            CharStatus::Complete,
        )
        .unwrap();
        let chi2 = Character::from_set(
            c.clone(),
            vec![ym(&c, &[(1, "q^2", 1)]), ym(&c, &[(1, "q^4", 1)])],
            CharStatus::Complete,
        )
        .unwrap();
        let fusion = fuse(&chi1, &chi2).unwrap();
        assert_eq!(fusion.max_pairing, 0);
        assert!(!fusion.non_character);
        let expect: BTreeMap<YMonomial, u32> = [
            (ym(&c, &[(1, "1", 1), (1, "q^2", 1)]), 1),
            (ym(&c, &[(1, "1", 1), (1, "q^4", 1)]), 1),
            (ym(&c, &[(1, "q^2", 1), (1, "q^4", 1)]), 1),
        ]
        .into_iter()
        .collect();
        let got: BTreeMap<YMonomial, u32> =
            fusion.character.iter().map(|(m, c)| (m.clone(), c)).collect();
        assert_eq!(got, expect);
    }

    /// Fusing a block with itself doubles a product: reported, not repaired.
    #[test]
    fn self_fusion_of_a_block_is_flagged() {
        let c = a1();
        let chi = Character::from_set(
            c.clone(),
            vec![ym(&c, &[(1, "1", 1)]), ym(&c, &[(1, "q^2", 1)])],
            CharStatus::Complete,
        )
        .unwrap();
        let fusion = fuse(&chi, &chi).unwrap();
        assert_eq!(fusion.max_pairing, 1);
        assert!(fusion.non_character);
        assert_eq!(fusion.character.support_len(), 1);
        assert_eq!(
            fusion.character.multiplicity(&ym(&c, &[(1, "1", 1), (1, "q^2", 1)])),
            2
        );
    }

    #[test]
    fn mutually_generic_fusion_is_the_plain_product() {
        let c = gl21();
        let line = expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(8), &c).unwrap();
        let seg = crate::expand::truncate(&line, &ym(&c, &[(1, "q*p^-1", -1)]), &Default::default())
            .unwrap();
        let far = seg.shift(&c.ctx().parse("p^20").unwrap());
        let fusion = fuse(&seg, &far).unwrap();
        assert_eq!(fusion.max_pairing, 0);
        assert!(!fusion.non_character);
        assert!(fusion.character.same_monomials(&seg.mul(&far).unwrap()));
    }

    #[test]
    fn fusion_is_commutative_and_base_independent() {
        let c = a1();
        let chi1 = Character::from_set(
            c.clone(),
            vec![ym(&c, &[(1, "1", 1)]), ym(&c, &[(1, "q^2", 1)])],
            CharStatus::Complete,
        )
        .unwrap();
        let chi2 = Character::from_set(
            c.clone(),
            vec![ym(&c, &[(1, "q^2", 1)]), ym(&c, &[(1, "q^4", 1)])],
            CharStatus::Complete,
        )
        .unwrap();
        let ab = fuse(&chi1, &chi2).unwrap();
        let ba = fuse(&chi2, &chi1).unwrap();
        assert!(ab.character.same_monomials(&ba.character));
        assert_eq!(ab.max_pairing, ba.max_pairing);
        for (m0, _) in chi1.iter() {
            for (n0, _) in chi2.iter() {
                let alt = fuse_with_bases(&chi1, &chi2, m0, n0).unwrap();
                assert!(alt.character.same_monomials(&ab.character));
            }
        }
    }

    #[test]
    fn windowed_inputs_are_refused() {
        let c = gl21();
        let window =
            expand(&Seed::dominant(ym(&c, &[(1, "q", 1)])).with_max_depth(4), &c).unwrap();
        assert!(matches!(fuse(&window, &window), Err(Error::Status(_))));
    }

    /// The 66-term character: adjoint fused with its `p1`-shift.  The pairing
    /// cut keeps exactly 66 distinct products with the published depth
    /// profile and restriction decompositions, but four of them carry a
    /// squared variable, so the result is flagged and the seed expansion
    /// cannot reproduce it.
    #[test]
    fn fusing_shifted_adjoints_yields_66() {
        let c = d21a();
        let chi18 = adjoint18();
        let p1 = c.ctx().parse("p1").unwrap();
        let fusion = fuse(&chi18, &chi18.shift(&p1)).unwrap();
        assert_eq!(fusion.max_pairing, 1);
        assert_eq!(fusion.character.monomial_count(), 66);
        assert_eq!(fusion.character.support_len(), 66);
        assert!(fusion.non_character, "four products have a squared variable");

        // the four offenders all stack Y_{1,q1}^{-1} twice
        let q1pos = c.ctx().parse("q1").unwrap();
        let offenders: Vec<&YMonomial> = fusion
            .character
            .iter()
            .map(|(m, _)| m)
            .filter(|m| !m.is_generic())
            .collect();
        assert_eq!(offenders.len(), 4);
        for m in offenders {
            assert_eq!(m.power(1, &q1pos), -2);
        }

        // the seed is rebased on the fused character's dominant monomial
        let seed = fusion.character.provenance().unwrap().seed.clone();
        let m66 = ym(
            &c,
            &[
                (1, "q1^-1", 1),
                (1, "q1*p1", -1),
                (2, "q2^-1*p1", 1),
                (2, "q2", -1),
                (3, "q3^-1*p1", 1),
                (3, "q3", -1),
            ],
        );
        assert_eq!(seed, m66);
        assert_eq!(
            depth_profile(&fusion.character, &seed).unwrap(),
            vec![1, 3, 5, 8, 10, 12, 10, 8, 5, 3, 1]
        );

        // restriction components of the fused set match the published rules
        let sizes = |chi: &Character, keep: &[usize]| -> Vec<u32> {
            let rho = chi.restrict(keep).unwrap();
            let g = build_graph(&rho).unwrap();
            let mut s: Vec<u32> = g
                .components()
                .iter()
                .map(|comp| comp.iter().map(|&k| g.vertices()[k].1).sum())
                .collect();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(&fusion.character, &[2, 3]), vec![25, 16, 16, 9]);
        assert_eq!(sizes(&fusion.character, &[1, 2]), vec![16, 12, 12, 9, 4, 4, 4, 4, 1]);
        assert_eq!(sizes(&fusion.character, &[1, 3]), vec![16, 12, 12, 9, 4, 4, 4, 4, 1]);

        // the squared variables are out of reach of the string expansion: it
        // halts on the first member forced to go non-generic
        let attempt = expand(&Seed::dominant(m66), &c).unwrap();
        assert!(!attempt.is_complete());
        let CharStatus::Failed { reason } = attempt.status() else {
            panic!("expansion of the 66-seed should fail");
        };
        assert!(reason.contains("non-generic member"), "unexpected reason: {reason}");
    }

    /// The 130-term character from the `q0²`-shifted pair: the fusion is
    /// exact, while the seed expansion stops one monomial short — the
    /// constant member has no unmarked variables left to reach it.
    #[test]
    fn fusing_q0_shifted_adjoints_yields_130() {
        let c = d21a();
        let chi18 = adjoint18();
        let q0sq = c.ctx().parse("q0^2").unwrap();
        let fusion = fuse(&chi18, &chi18.shift(&q0sq)).unwrap();
        assert!(!fusion.non_character);
        assert_eq!(fusion.character.monomial_count(), 130);
        let seed = fusion.character.provenance().unwrap().seed.clone();
        assert_eq!(
            depth_profile(&fusion.character, &seed).unwrap(),
            vec![1, 3, 6, 10, 15, 18, 24, 18, 15, 10, 6, 3, 1]
        );
        assert!(fusion.character.contains(&YMonomial::one(c.ctx())));

        let expanded = expand(&Seed::dominant(seed), &c).unwrap();
        assert!(expanded.is_complete());
        assert_eq!(expanded.monomial_count(), 129);
        for (m, _) in expanded.iter() {
            assert!(fusion.character.contains(m));
        }
        assert!(!expanded.contains(&YMonomial::one(c.ctx())));
    }
}
