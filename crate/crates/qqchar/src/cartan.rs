//! Deformed Cartan matrices of fermionic type, affine roots, and family presets.
//!
//! A deformed Cartan matrix is a symmetric r×r array of shift monomials
//! `σ_ij` over a [`ParamContext`](crate::exponents::ParamContext), with
//! `σ_ii = q` on the diagonal.  The matrix entries proper are the Laurent
//! differences
//!
//! ```text
//!     c_ij = σ_ij − σ_ij⁻¹ ,
//! ```
//!
//! and the matrix is required to be non-degenerate: `det(c_ij) ≠ 0` as a
//! Laurent polynomial in the (possibly quotiented) parameter context.
//!
//! Attached to color `j` is the affine root
//!
//! ```text
//!     A_j = ∏_i Y_{i,σ_ij} · Y_{i,σ_ij⁻¹}⁻¹ ,        A_{j,σ} = τ_σ A_j ,
//! ```
//!
//! a degree-zero generic monomial in the Y-variables.  When `σ_ij = 1`
//! (equivalently `c_ij = 0`) the two factors of color `i` cancel and color
//! `i` simply does not occur in `A_j`.  Non-degeneracy guarantees that the
//! collection of all shifted affine roots is algebraically independent,
//! which this module can witness by an exact integer rank computation.
//!
//! Built-in presets cover the families used throughout the crate: the
//! one-parameter chain types `gl21`, `glnn(n)`, `glnpn(n)`, the orthosymplectic
//! chains `osp(r)` with their forked corner, the three-parameter exceptional
//! type `d21a`, and the affine (cyclic) extensions of each.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{One, Zero};

use crate::character::YMonomial;
use crate::exponents::{ensure_same_ctx, LaurentPoly, ParamContext, ShiftMonomial};
use crate::{Error, Result};

/// A deformed Cartan matrix of fermionic type.
///
/// `colors` holds the printed color labels in display order (finite families
/// use `1..=r`, affine families `0..=r`); `sigma[i][j]` is the shift monomial
/// `σ_ij` for the i-th and j-th labels in that order.  The struct itself does
/// not insist on validity — [`CartanMatrix::validate`] reports violations, so
/// that deliberately broken matrices can be constructed in tests and rejected
/// downstream.
pub struct CartanMatrix {
    ctx: Arc<ParamContext>,
    colors: Vec<usize>,
    label_pos: BTreeMap<usize, usize>,
    sigma: Vec<Vec<ShiftMonomial>>,
    name: Option<String>,
}

/// Outcome of [`CartanMatrix::validate`]: a list of human-readable issues,
/// empty when the matrix is a genuine deformed Cartan matrix.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    /// Each violated condition, with the offending indices.
    pub issues: Vec<String>,
}

impl ValidationReport {
    /// True when no issues were found.
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            write!(f, "valid")
        } else {
            for (k, issue) in self.issues.iter().enumerate() {
                if k > 0 {
                    writeln!(f)?;
                }
                write!(f, "{issue}")?;
            }
            Ok(())
        }
    }
}

/// A shifted affine root `A_{i,σ}` together with its expansion into
/// Y-variables.
#[derive(Clone)]
pub struct AffineRoot {
    /// Color label `i`.
    pub color: usize,
    /// The shift `σ`.
    pub shift: ShiftMonomial,
    /// The expansion `τ_σ ∏_j Y_{j,σ_ij} Y_{j,σ_ij⁻¹}⁻¹`.
    pub monomial: YMonomial,
}

impl fmt::Display for AffineRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A[{},{}] = {}", self.color, self.shift, self.monomial)
    }
}

impl CartanMatrix {
    /// Builds a matrix from explicit entries.
    ///
    /// Checks only structural well-formedness (square shape, distinct labels,
    /// matching contexts); mathematical validity is a separate concern, see
    /// [`CartanMatrix::validate`].
    pub fn new(
        ctx: Arc<ParamContext>,
        colors: Vec<usize>,
        sigma: Vec<Vec<ShiftMonomial>>,
        name: Option<String>,
    ) -> Result<Arc<Self>> {
        let r = colors.len();
        if r == 0 {
            return Err(Error::Cartan("empty color set".into()));
        }
        if sigma.len() != r || sigma.iter().any(|row| row.len() != r) {
            return Err(Error::Cartan(format!(
                "entry array is not {r}×{r} as the color set demands"
            )));
        }
        let mut label_pos = BTreeMap::new();
        for (pos, &label) in colors.iter().enumerate() {
            if label_pos.insert(label, pos).is_some() {
                return Err(Error::Cartan(format!("duplicate color label {label}")));
            }
        }
        for row in &sigma {
            for entry in row {
                ensure_same_ctx(&ctx, entry.ctx())?;
            }
        }
        Ok(Arc::new(CartanMatrix { ctx, colors, label_pos, sigma, name }))
    }

    /// The parameter context all entries live in.
    pub fn ctx(&self) -> &Arc<ParamContext> {
        &self.ctx
    }

    /// Number of colors.
    pub fn size(&self) -> usize {
        self.colors.len()
    }

    /// The color labels in display order.
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// The preset name, if this matrix came from [`CartanMatrix::preset`].
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Position of a color label in the internal ordering.
    pub fn index_of(&self, label: usize) -> Result<usize> {
        self.label_pos
            .get(&label)
            .copied()
            .ok_or_else(|| Error::Cartan(format!("no color labelled {label} in this matrix")))
    }

    /// True when `label` is one of the colors.
    pub fn has_color(&self, label: usize) -> bool {
        self.label_pos.contains_key(&label)
    }

    /// The entry `σ_ij`, addressed by color labels.
    pub fn sigma_entry(&self, i: usize, j: usize) -> Result<&ShiftMonomial> {
        Ok(&self.sigma[self.index_of(i)?][self.index_of(j)?])
    }

    /// The Laurent matrix entry `c_ij = σ_ij − σ_ij⁻¹`.
    pub fn c_entry(&self, i: usize, j: usize) -> Result<LaurentPoly> {
        let s = self.sigma_entry(i, j)?;
        let plus = LaurentPoly::from_monomial(s, BigRational::one());
        let minus = LaurentPoly::from_monomial(&s.inv(), BigRational::one());
        Ok(&plus - &minus)
    }

    /// The symbolic determinant of `(c_ij)`.
    ///
    /// Computed by minor expansion memoized on column bitmasks, so the cost is
    /// O(2^r · r) polynomial multiplications — comfortable for every preset.
    pub fn determinant(&self) -> LaurentPoly {
        let r = self.size();
        let c: Vec<Vec<LaurentPoly>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        self.c_entry(self.colors[i], self.colors[j])
                            .expect("labels are internal")
                    })
                    .collect()
            })
            .collect();
        // minors[mask] = determinant of the submatrix on the first popcount(mask)
        // rows and the column set `mask`.
        let mut memo: HashMap<u64, LaurentPoly> = HashMap::new();
        memo.insert(0, LaurentPoly::one(&self.ctx));
        self.minor(&c, ((1u64 << r) - 1) as u64, &mut memo)
    }

    fn minor(&self, c: &[Vec<LaurentPoly>], mask: u64, memo: &mut HashMap<u64, LaurentPoly>) -> LaurentPoly {
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        let row = (mask.count_ones() - 1) as usize;
        let mut acc = LaurentPoly::zero(&self.ctx);
        let mut sign = BigRational::one();
        for j in 0..self.size() {
            if mask & (1 << j) != 0 {
                let sub = self.minor(c, mask & !(1 << j), memo);
                acc = &acc + &(&c[row][j] * &sub).scale(&sign);
                sign = -sign;
            }
        }
        memo.insert(mask, acc.clone());
        acc
    }

    /// Checks symmetry, the `σ_ii = q` diagonal, and non-degeneracy.
    ///
    /// All arithmetic happens in the matrix's own context, so calling this on
    /// a [`CartanMatrix::transfer`]red matrix re-checks the determinant in the
    /// quotient — the symbolic form of "still non-degenerate under the
    /// resonance".
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let q = self.ctx.var("q").expect("q is always a context name");
        for (a, &i) in self.colors.iter().enumerate() {
            for (b, &j) in self.colors.iter().enumerate() {
                if a < b && self.sigma[a][b] != self.sigma[b][a] {
                    issues.push(format!(
                        "symmetry violated at ({i},{j}): σ_{{{i},{j}}} = {} but σ_{{{j},{i}}} = {}",
                        self.sigma[a][b], self.sigma[b][a]
                    ));
                }
            }
            if self.sigma[a][a] != q {
                issues.push(format!(
                    "diagonal entry at color {i} is {}, expected q",
                    self.sigma[a][a]
                ));
            }
        }
        if self.determinant().is_zero() {
            issues.push("determinant of (σ_ij − σ_ij⁻¹) vanishes: matrix is degenerate".into());
        }
        ValidationReport { issues }
    }

    /// The shifted affine root `A_{i,σ}` with its Y-monomial expansion.
    ///
    /// Errors when some off-diagonal entry satisfies `σ_ij² = 1` with
    /// `σ_ij ≠ 1` (possible in torsion quotients): the two Y-factors of that
    /// color would collide and the expansion would no longer be generic.
    pub fn affine_root(&self, color: usize, shift: &ShiftMonomial) -> Result<AffineRoot> {
        ensure_same_ctx(&self.ctx, shift.ctx())?;
        let i = self.index_of(color)?;
        let mut m = YMonomial::one(&self.ctx);
        for (j, &jl) in self.colors.iter().enumerate() {
            let s = &self.sigma[i][j];
            if s.is_one() {
                continue; // c_ij = 0: color jl does not occur in A_i
            }
            if (s * s).is_one() {
                return Err(Error::Cartan(format!(
                    "σ_{{{color},{jl}}} = {s} squares to 1 in this context; \
                     the affine root A_{color} degenerates"
                )));
            }
            m.insert(jl, &(s * shift), 1);
            m.insert(jl, &(&s.inv() * shift), -1);
        }
        debug_assert!(m.is_generic(), "affine root expansion must be generic");
        Ok(AffineRoot { color, shift: shift.clone(), monomial: m })
    }

    /// The basic root `A_i = A_{i,1}`.
    pub fn affine_root_basic(&self, color: usize) -> Result<AffineRoot> {
        self.affine_root(color, &self.ctx.one())
    }

    /// The submatrix on the color labels `keep` (order taken from `keep`).
    ///
    /// Errors when the submatrix is degenerate, because restriction of
    /// characters to a degenerate subfamily is meaningless downstream.
    pub fn restrict(&self, keep: &[usize]) -> Result<Arc<CartanMatrix>> {
        if keep.is_empty() {
            return Err(Error::Cartan("restriction to an empty color set".into()));
        }
        let idx: Vec<usize> = keep.iter().map(|&l| self.index_of(l)).collect::<Result<_>>()?;
        let sigma: Vec<Vec<ShiftMonomial>> = idx
            .iter()
            .map(|&a| idx.iter().map(|&b| self.sigma[a][b].clone()).collect())
            .collect();
        let name = self.name.as_ref().map(|n| {
            let cs: Vec<String> = keep.iter().map(|l| l.to_string()).collect();
            format!("{n}|{}", cs.join(","))
        });
        let sub = CartanMatrix::new(self.ctx.clone(), keep.to_vec(), sigma, name)?;
        if sub.determinant().is_zero() {
            return Err(Error::Cartan(format!(
                "restriction to colors {keep:?} is degenerate"
            )));
        }
        Ok(sub)
    }

    /// Moves the matrix into another context (typically a resonance quotient
    /// of the current one).  Entries are re-reduced; validity is *not*
    /// automatically re-checked — call [`CartanMatrix::validate`].
    pub fn transfer(&self, ctx: &Arc<ParamContext>) -> Result<Arc<CartanMatrix>> {
        let sigma: Vec<Vec<ShiftMonomial>> = self
            .sigma
            .iter()
            .map(|row| row.iter().map(|s| s.transfer(ctx)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        CartanMatrix::new(ctx.clone(), self.colors.clone(), sigma, self.name.clone())
    }

    /// Builds one of the named preset matrices.
    ///
    /// Recognized names: `gl21`, `glnn(n)`, `glnpn(n)`, `glnn_affine(n)` with
    /// n ≥ 2, `osp(r)` and `osp_affine(r)` with r ≥ 3, `d21a`, `d21a_affine`.
    /// One-parameter presets use names `q, q1` with aliases `q2 = (q·q1)⁻¹`
    /// and `p = q²q1²`; the `d21a` family uses `q, q1, q2` with aliases
    /// `q0 = q`, `q3 = (q·q1·q2)⁻¹` and `p_i = q²q_i²`.
    pub fn preset(name: &str) -> Result<Arc<CartanMatrix>> {
        let (base, arg) = match name.find('(') {
            Some(pos) => {
                let inner = name[pos + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("malformed preset name {name:?}")))?;
                let n: usize = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad preset size in {name:?}")))?;
                (&name[..pos], Some(n))
            }
            None => (name, None),
        };
        match (base, arg) {
            ("gl21", None) => preset_chain("gl21", 2, false),
            ("glnn", Some(n)) if n >= 1 => preset_chain(&format!("glnn({n})"), 2 * n - 1, false),
            ("glnpn", Some(n)) if n >= 1 => preset_chain(&format!("glnpn({n})"), 2 * n, false),
            ("glnn_affine", Some(n)) if n >= 2 => {
                preset_chain(&format!("glnn_affine({n})"), 2 * n - 1, true)
            }
            ("glnn_affine", Some(_)) => Err(Error::Cartan(
                "glnn_affine needs n ≥ 2: the two-color cycle at n = 1 has a double bond".into(),
            )),
            ("osp", Some(r)) if r >= 3 => preset_osp(r, false),
            ("osp_affine", Some(r)) if r >= 3 => preset_osp(r, true),
            ("d21a", None) => preset_d21a(false),
            ("d21a_affine", None) => preset_d21a(true),
            _ => Err(Error::Parse(format!("unknown preset {name:?}"))),
        }
    }
}

impl PartialEq for CartanMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.fingerprint() == other.ctx.fingerprint()
            && self.colors == other.colors
            && self.sigma == other.sigma
    }
}
impl Eq for CartanMatrix {}

impl fmt::Display for CartanMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            writeln!(f, "# {n}")?;
        }
        for row in &self.sigma {
            let cells: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            writeln!(f, "[ {} ]", cells.join("  "))?;
        }
        Ok(())
    }
}

crate::fmt_debug_via_display!(CartanMatrix);

/// Exact rank of the integer exponent matrix of the roots' expansions.
///
/// Distinct shifted affine roots of a non-degenerate matrix are algebraically
/// independent; equivalently, their exponent vectors over the (finitely many
/// occurring) Y-variables have full rank.  This computes that rank exactly
/// over the rationals.
pub fn roots_exponent_rank(roots: &[AffineRoot]) -> usize {
    let mut keys: BTreeMap<(usize, Vec<i64>), usize> = BTreeMap::new();
    for r in roots {
        for (color, shift, _) in r.monomial.entries() {
            let key = (color, shift.exps().to_vec());
            let next = keys.len();
            keys.entry(key).or_insert(next);
        }
    }
    let mut rows: Vec<Vec<BigRational>> = roots
        .iter()
        .map(|r| {
            let mut row = vec![BigRational::zero(); keys.len()];
            for (color, shift, pow) in r.monomial.entries() {
                let col = keys[&(color, shift.exps().to_vec())];
                row[col] = BigRational::from_integer(pow.into());
            }
            row
        })
        .collect();
    // plain Gaussian elimination over ℚ
    let mut rank = 0;
    let cols = keys.len();
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = rows[rank][c].clone();
        for r in rank + 1..rows.len() {
            if !rows[r][c].is_zero() {
                let f = &rows[r][c] / &lead;
                for k in c..cols {
                    let sub = &rows[rank][k] * &f;
                    rows[r][k] = &rows[r][k] - &sub;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Context for the one-parameter chain families: names `q, q1`, aliases
/// `q2 = (q q1)⁻¹` and `p = q² q1²`.
fn chain_ctx() -> Result<Arc<ParamContext>> {
    ParamContext::new(&["q", "q1"])?
        .with_aliases(&[("q2", vec![-1, -1]), ("p", vec![2, 2])])
}

/// Chain presets: colors `1..=r` (finite) or `0..=r` (affine cycle), with
/// `σ_{i,i+1} = q1` for odd `i` and `q2` for even `i`.
fn preset_chain(name: &str, r: usize, affine: bool) -> Result<Arc<CartanMatrix>> {
    let ctx = chain_ctx()?;
    let q = ctx.var("q")?;
    let q1 = ctx.var("q1")?;
    let q2 = ctx.parse("q2")?;
    let colors: Vec<usize> = if affine { (0..=r).collect() } else { (1..=r).collect() };
    let m = colors.len();
    let mut sigma = vec![vec![ctx.one(); m]; m];
    for a in 0..m {
        sigma[a][a] = q.clone();
    }
    let bond = |i: usize| if i % 2 == 1 { q1.clone() } else { q2.clone() };
    if affine {
        // indices live modulo r+1; the wrap-around bond keeps the same parity rule
        for i in 0..=r {
            let j = (i + 1) % (r + 1);
            sigma[i][j] = bond(i);
            sigma[j][i] = bond(i);
        }
    } else {
        for i in 1..r {
            sigma[i - 1][i] = bond(i);
            sigma[i][i - 1] = bond(i);
        }
    }
    CartanMatrix::new(ctx, colors, sigma, Some(name.to_string()))
}

/// Orthosymplectic presets: the chain rule everywhere except the forked
/// corner, where
///
/// ```text
///     σ_{r−2,r} = σ_{r−2,r−1}           (the chain bond repeated),
///     σ_{r−1,r} = q1⁻¹q2  (odd r)  or  q1·q2⁻¹  (even r),
/// ```
///
/// and, in the affine case, a mirror fork at a new color 0 with
/// `σ_{0,1} = q1⁻¹q2` and `σ_{0,2} = q1`.
fn preset_osp(r: usize, affine: bool) -> Result<Arc<CartanMatrix>> {
    let ctx = chain_ctx()?;
    let q = ctx.var("q")?;
    let q1 = ctx.var("q1")?;
    let q2 = ctx.parse("q2")?;
    let name = if affine { format!("osp_affine({r})") } else { format!("osp({r})") };
    let colors: Vec<usize> = if affine { (0..=r).collect() } else { (1..=r).collect() };
    let m = colors.len();
    let off = if affine { 0 } else { 1 }; // label l sits at index l - off
    let mut sigma = vec![vec![ctx.one(); m]; m];
    for a in 0..m {
        sigma[a][a] = q.clone();
    }
    let bond = |i: usize| if i % 2 == 1 { q1.clone() } else { q2.clone() };
    let set = |a: usize, b: usize, v: ShiftMonomial, sigma: &mut Vec<Vec<ShiftMonomial>>| {
        sigma[a - off][b - off] = v.clone();
        sigma[b - off][a - off] = v;
    };
    // chain bonds (1,2) … (r−2,r−1)
    for i in 1..r - 1 {
        set(i, i + 1, bond(i), &mut sigma);
    }
    // the fork at the r-end
    set(r - 2, r, bond(r - 2), &mut sigma);
    let corner = if r % 2 == 1 { ctx.parse("q1^-1*q2")? } else { ctx.parse("q1*q2^-1")? };
    set(r - 1, r, corner, &mut sigma);
    if affine {
        // the mirror fork at the 0-end
        set(0, 1, ctx.parse("q1^-1*q2")?, &mut sigma);
        set(0, 2, q1.clone(), &mut sigma);
    }
    CartanMatrix::new(ctx, colors, sigma, Some(name))
}

/// The exceptional three-parameter family: colors `{1,2,3}` with
/// `σ_12 = q3`, `σ_13 = q2`, `σ_23 = q1`, and its affine extension on
/// `{0,1,2,3}` where uniformly `σ_ij = q_{i⊕j}` (bitwise xor — the labels
/// form a Klein four-group under the bond pattern).
fn preset_d21a(affine: bool) -> Result<Arc<CartanMatrix>> {
    let ctx = ParamContext::new(&["q", "q1", "q2"])?.with_aliases(&[
        ("q3", vec![-1, -1, -1]),
        ("p1", vec![2, 2, 0]),
        ("p2", vec![2, 0, 2]),
        ("p3", vec![0, -2, -2]),
    ])?;
    let qs: Vec<ShiftMonomial> = (0..4)
        .map(|k| ctx.parse(["q", "q1", "q2", "q3"][k]))
        .collect::<Result<_>>()?;
    let (colors, name): (Vec<usize>, &str) =
        if affine { ((0..=3).collect(), "d21a_affine") } else { ((1..=3).collect(), "d21a") };
    let m = colors.len();
    let mut sigma = vec![vec![ctx.one(); m]; m];
    for a in 0..m {
        for b in 0..m {
            sigma[a][b] = qs[colors[a] ^ colors[b]].clone();
        }
    }
    CartanMatrix::new(ctx, colors, sigma, Some(name.to_string()))
}
