//! Truncated ℓ²-representation of the subshift operator algebra: partial
//! isometries S_q, cylinder/follower projections, the defining relations,
//! the Perron-Frobenius and transfer operators, projection-valued-measure
//! consistency, spectral integrals and the cyclic isometry.
//!
//! The inner product is the counting measure on the truncated basis. A
//! prepend that would leave the depth budget returns 0 and marks the column
//! as truncated; relation checks skip marked columns so that every reported
//! residual is exactly zero or an honest failure.

use std::collections::HashMap;


use num::Zero;
use serde::Serialize;

use crate::dendrite::{
    enumerate_cylinders, in_c, in_follower_letter, is_admissible, shift, sigma, CombSystem,
    SymbolicPoint, Tail, Word,
};
use crate::error::{Error, Result};
use crate::padic::Rat;
use crate::spectral::{complex_abs_f64, CRat};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum TailKey {
    Letter(usize),
    Extra(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct BasisKey {
    runs: Vec<(usize, u32)>,
    tail: TailKey,
}

/// Finite slice of the Kronecker-delta basis: every letter-word closure
/// (R, q^∞) with |R q| within the depth budget over the first `n_letters`
/// letters, plus designated tail-only families for the rest of the space.
pub struct TruncatedBasis {
    cs: CombSystem,
    n_letters: usize,
    depth: u32,
    extra_tails: Vec<Tail>,
    points: Vec<SymbolicPoint>,
    keys: HashMap<BasisKey, usize>,
    /// index of σ(x) for each basis point (the basis is shift-closed)
    shift_to: Vec<usize>,
    /// Some(l) when the stream starts with alphabet letter l < n_letters
    letter_start: Vec<Option<usize>>,
    /// prefix power + 1: symbols before the stream stabilizes
    depth_of: Vec<u32>,
    /// true for letter-word closures (the shift-closed core subspace)
    is_closure: Vec<bool>,
}

fn key_of(cs: &CombSystem, extras: &[Tail], x: &SymbolicPoint) -> BasisKey {
    let runs = x.prefix().runs().to_vec();
    let tail = match x.tail() {
        Tail::Letter(n) => TailKey::Letter(*n),
        other => TailKey::Extra(
            extras
                .iter()
                .position(|t| t == other)
                .unwrap_or_else(|| panic!("tail {other:?} not registered")),
        ),
    };
    let _ = cs;
    BasisKey { runs, tail }
}

impl TruncatedBasis {
    /// Builds the basis. `extra_tails` designates the tail-only families
    /// (constant tails off the truncated alphabet); each extra tail also
    /// appears under every admissible prefix within depth - 1.
    pub fn new(
        cs: CombSystem,
        n_letters: usize,
        depth: u32,
        extra_tails: Vec<Tail>,
    ) -> Result<Self> {
        if n_letters > cs.len() || n_letters == 0 {
            return Err(Error::UnknownLetter(n_letters.saturating_sub(1)));
        }
        for t in &extra_tails {
            match t {
                Tail::Letter(n) if *n < n_letters => {
                    return Err(Error::InconsistentTail(
                        "extra tail duplicates a truncated-alphabet letter".into(),
                    ))
                }
                Tail::Stream(_) => {
                    return Err(Error::InconsistentTail(
                        "stream tails have no constant-tail basis slot".into(),
                    ))
                }
                _ => {}
            }
        }
        let words = enumerate_cylinders(&cs, n_letters, depth)?;
        let mut points = Vec::new();
        let mut keys: HashMap<BasisKey, usize> = HashMap::new();
        for w in &words {
            if let Some(last) = w.last_letter() {
                let p = SymbolicPoint::new(&cs, w.clone(), Tail::Letter(last))?;
                let k = key_of(&cs, &extra_tails, &p);
                if !keys.contains_key(&k) {
                    keys.insert(k, points.len());
                    points.push(p);
                }
            }
        }
        let closures = points.len();
        for tail in &extra_tails {
            for w in &words {
                if w.total_power() + 1 > depth {
                    continue;
                }
                match SymbolicPoint::new(&cs, w.clone(), tail.clone()) {
                    Ok(p) => {
                        let k = key_of(&cs, &extra_tails, &p);
                        if !keys.contains_key(&k) {
                            keys.insert(k, points.len());
                            points.push(p);
                        }
                    }
                    // tails that do not fit after this prefix are skipped
                    Err(Error::InconsistentTail(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        }

        let mut shift_to = Vec::with_capacity(points.len());
        let mut letter_start = Vec::with_capacity(points.len());
        let mut depth_of = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let s = shift(&cs, p);
            let sk = key_of(&cs, &extra_tails, &s);
            let j = *keys
                .get(&sk)
                .unwrap_or_else(|| panic!("basis not shift-closed at point {i}"));
            shift_to.push(j);
            let first = p.first_value(&cs)?;
            let ls = (0..n_letters).find(|&l| cs.letter(l).unwrap() == &first);
            letter_start.push(ls);
            depth_of.push(p.prefix().total_power() + 1);
        }
        let is_closure = (0..points.len()).map(|i| i < closures).collect();
        Ok(TruncatedBasis {
            cs,
            n_letters,
            depth,
            extra_tails,
            points,
            keys,
            shift_to,
            letter_start,
            depth_of,
            is_closure,
        })
    }

    pub fn comb(&self) -> &CombSystem {
        &self.cs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn point(&self, i: usize) -> &SymbolicPoint {
        &self.points[i]
    }

    pub fn points(&self) -> &[SymbolicPoint] {
        &self.points
    }

    pub fn is_closure_point(&self, i: usize) -> bool {
        self.is_closure[i]
    }

    pub fn letter_start(&self, i: usize) -> Option<usize> {
        self.letter_start[i]
    }

    pub fn point_depth(&self, i: usize) -> u32 {
        self.depth_of[i]
    }

    fn check_dim(&self, v: &[CRat]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Admissible words over the truncated alphabet, empty word first.
    pub fn words(&self) -> Vec<Word> {
        enumerate_cylinders(&self.cs, self.n_letters, self.depth)
            .expect("alphabet validated at construction")
    }
}

/// A partial injection on basis indices with 0/1 matrix entries; products
/// of the S_q, their adjoints and the projections all have this shape.
/// `truncated[j]` marks a column whose true image leaves the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialIsom {
    pub dim: usize,
    pub to: Vec<Option<usize>>,
    pub truncated: Vec<bool>,
}

impl PartialIsom {
    pub fn identity(dim: usize) -> Self {
        PartialIsom {
            dim,
            to: (0..dim).map(Some).collect(),
            truncated: vec![false; dim],
        }
    }

    pub fn zero(dim: usize) -> Self {
        PartialIsom {
            dim,
            to: vec![None; dim],
            truncated: vec![false; dim],
        }
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &PartialIsom) -> PartialIsom {
        let mut to = Vec::with_capacity(self.dim);
        let mut truncated = Vec::with_capacity(self.dim);
        for j in 0..inner.dim {
            let mut t = inner.truncated[j];
            let target = match inner.to[j] {
                Some(k) => {
                    t = t || self.truncated[k];
                    self.to[k]
                }
                None => None,
            };
            to.push(target);
            truncated.push(t);
        }
        PartialIsom {
            dim: inner.dim,
            to,
            truncated,
        }
    }

    pub fn apply(&self, v: &[CRat]) -> Vec<CRat> {
        let mut out = vec![CRat::zero(); self.dim];
        for (j, target) in self.to.iter().enumerate() {
            if let Some(k) = target {
                out[*k] += v[j].clone();
            }
        }
        out
    }

    /// Number of columns where the two operators differ, skipping columns
    /// truncated on either side, plus how many were skipped.
    pub fn diff(&self, other: &PartialIsom) -> (usize, usize) {
        let mut mismatches = 0;
        let mut skipped = 0;
        for j in 0..self.dim {
            if self.truncated[j] || other.truncated[j] {
                skipped += 1;
                continue;
            }
            if self.to[j] != other.to[j] {
                mismatches += 1;
            }
        }
        (mismatches, skipped)
    }
}

/// S_q: e_x ↦ e_{qx} on the follower set, 0 elsewhere; prepends that leave
/// the truncation are flagged.
pub fn s_op(tb: &TruncatedBasis, letter: usize) -> Result<PartialIsom> {
    if letter >= tb.n_letters {
        return Err(Error::UnknownLetter(letter));
    }
    let cs = &tb.cs;
    let mut to = vec![None; tb.len()];
    let mut truncated = vec![false; tb.len()];
    for (j, x) in tb.points.iter().enumerate() {
        if in_follower_letter(cs, letter, x)? {
            let image = sigma(cs, letter, x)?;
            let key = key_of(cs, &tb.extra_tails, &image);
            match tb.keys.get(&key) {
                Some(&k) => to[j] = Some(k),
                None => truncated[j] = true,
            }
        }
    }
    Ok(PartialIsom {
        dim: tb.len(),
        to,
        truncated,
    })
}

/// S_q*: e_{qy} ↦ e_y on the cylinder of q, 0 elsewhere. Always exact:
/// stripping a letter never leaves the truncation.
pub fn s_star_op(tb: &TruncatedBasis, letter: usize) -> Result<PartialIsom> {
    if letter >= tb.n_letters {
        return Err(Error::UnknownLetter(letter));
    }
    let cs = &tb.cs;
    let q = cs.letter(letter)?.clone();
    let mut to = vec![None; tb.len()];
    for (j, x) in tb.points.iter().enumerate() {
        if x.first_value(cs)? == q {
            to[j] = Some(tb.shift_to[j]);
        }
    }
    Ok(PartialIsom {
        dim: tb.len(),
        to,
        truncated: vec![false; tb.len()],
    })
}

/// S_α = S_{α1} ... S_{αn} for a word α.
pub fn s_word(tb: &TruncatedBasis, alpha: &Word) -> Result<PartialIsom> {
    let mut op = PartialIsom::identity(tb.len());
    let letters: Vec<usize> = alpha.expand().collect();
    for &l in letters.iter().rev() {
        op = s_op(tb, l)?.compose(&op);
    }
    Ok(op)
}

/// S_α* = S_{αn}* ... S_{α1}*.
pub fn s_word_star(tb: &TruncatedBasis, alpha: &Word) -> Result<PartialIsom> {
    let mut op = PartialIsom::identity(tb.len());
    for l in alpha.expand() {
        op = s_star_op(tb, l)?.compose(&op);
    }
    Ok(op)
}

/// Boolean combination of generating sets C(α, β).
#[derive(Debug, Clone)]
pub enum SetExpr {
    Full,
    Empty,
    C(Word, Word),
    Cylinder(Word),
    Follower(Word),
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersect(Box<SetExpr>, Box<SetExpr>),
    Complement(Box<SetExpr>),
}

impl SetExpr {
    fn member(&self, cs: &CombSystem, x: &SymbolicPoint) -> Result<bool> {
        Ok(match self {
            SetExpr::Full => true,
            SetExpr::Empty => false,
            SetExpr::C(alpha, beta) => in_c(cs, alpha, beta, x)?,
            SetExpr::Cylinder(beta) => in_c(cs, &Word::empty(), beta, x)?,
            SetExpr::Follower(alpha) => in_c(cs, alpha, &Word::empty(), x)?,
            SetExpr::Union(a, b) => a.member(cs, x)? || b.member(cs, x)?,
            SetExpr::Intersect(a, b) => a.member(cs, x)? && b.member(cs, x)?,
            SetExpr::Complement(a) => !a.member(cs, x)?,
        })
    }

    fn validate(&self, cs: &CombSystem) -> Result<()> {
        match self {
            SetExpr::C(alpha, beta) => {
                for w in [alpha, beta] {
                    if !is_admissible(cs, w)? {
                        return Err(Error::InadmissibleWord(w.display(cs)));
                    }
                }
                Ok(())
            }
            SetExpr::Cylinder(w) | SetExpr::Follower(w) => {
                if !is_admissible(cs, w)? {
                    return Err(Error::InadmissibleWord(w.display(cs)));
                }
                Ok(())
            }
            SetExpr::Union(a, b) | SetExpr::Intersect(a, b) => {
                a.validate(cs)?;
                b.validate(cs)
            }
            SetExpr::Complement(a) => a.validate(cs),
            SetExpr::Full | SetExpr::Empty => Ok(()),
        }
    }
}

/// The diagonal projection P_A for a Boolean combination of generating sets.
pub fn p_op(tb: &TruncatedBasis, expr: &SetExpr) -> Result<PartialIsom> {
    expr.validate(&tb.cs)?;
    let mut to = vec![None; tb.len()];
    for (j, x) in tb.points.iter().enumerate() {
        if expr.member(&tb.cs, x)? {
            to[j] = Some(j);
        }
    }
    Ok(PartialIsom {
        dim: tb.len(),
        to,
        truncated: vec![false; tb.len()],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub words: Vec<String>,
    pub compared: usize,
    pub skipped: usize,
    pub residual: usize,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn all_zero(&self) -> bool {
        self.checks.iter().all(|c| c.residual == 0)
    }

    pub fn total_mismatches(&self) -> usize {
        self.checks.iter().map(|c| c.residual).sum()
    }
}

/// Verifies the defining relations of the subshift algebra on the
/// truncation, with exactly-zero residuals required outside flagged columns:
/// (i) S_q* S_p = δ_qp P_{F_q}; (ii) follower projections commute;
/// (iii) follower and cylinder projections commute; (iv) S_α S_β = 0 for
/// inadmissible concatenations; (v) S_β S_α* S_α S_β* = P_{C(α,β)}.
pub fn verify_relations(tb: &TruncatedBasis) -> Result<RelationReport> {
    let cs = &tb.cs;
    let words = tb.words();
    let mut report = RelationReport::default();

    for q in 0..tb.n_letters {
        for p in 0..tb.n_letters {
            let lhs = s_star_op(tb, q)?.compose(&s_op(tb, p)?);
            let rhs = if q == p {
                p_op(tb, &SetExpr::Follower(Word::from_letters(&[q])))?
            } else {
                PartialIsom::zero(tb.len())
            };
            let (mismatches, skipped) = lhs.diff(&rhs);
            report.checks.push(RelationCheck {
                relation: "(i) s_q* s_p = delta_qp p_Fq".into(),
                words: vec![
                    Word::from_letters(&[q]).display(cs),
                    Word::from_letters(&[p]).display(cs),
                ],
                compared: tb.len() - skipped,
                skipped,
                residual: mismatches,
            });
        }
    }

    // cache the word operators
    let mut follower_proj = Vec::new();
    let mut cylinder_proj = Vec::new();
    let mut s_ops = Vec::new();
    let mut s_star_ops = Vec::new();
    for w in &words {
        let s = s_word(tb, w)?;
        let ss = s_word_star(tb, w)?;
        follower_proj.push(ss.compose(&s));
        cylinder_proj.push(s.compose(&ss));
        s_ops.push(s);
        s_star_ops.push(ss);
    }

    for (ia, alpha) in words.iter().enumerate() {
        for (ib, beta) in words.iter().enumerate() {
            let fa = &follower_proj[ia];
            let fb = &follower_proj[ib];
            let (m2, s2) = fa.compose(fb).diff(&fb.compose(fa));
            report.checks.push(RelationCheck {
                relation: "(ii) [s_a* s_a, s_b* s_b] = 0".into(),
                words: vec![alpha.display(cs), beta.display(cs)],
                compared: tb.len() - s2,
                skipped: s2,
                residual: m2,
            });

            let zb = &cylinder_proj[ib];
            let (m3, s3) = fa.compose(zb).diff(&zb.compose(fa));
            report.checks.push(RelationCheck {
                relation: "(iii) [s_a* s_a, s_b s_b*] = 0".into(),
                words: vec![alpha.display(cs), beta.display(cs)],
                compared: tb.len() - s3,
                skipped: s3,
                residual: m3,
            });

            let concat = alpha.concat(beta);
            if !is_admissible(cs, &concat)? {
                let prod = s_ops[ia].compose(&s_ops[ib]);
                let (m4, s4) = prod.diff(&PartialIsom::zero(tb.len()));
                report.checks.push(RelationCheck {
                    relation: "(iv) s_a s_b = 0 off the language".into(),
                    words: vec![alpha.display(cs), beta.display(cs)],
                    compared: tb.len() - s4,
                    skipped: s4,
                    residual: m4,
                });
            }

            // (v) s_b s_a* s_a s_b* = p_C(a,b)
            let lhs = s_ops[ib]
                .compose(&follower_proj[ia])
                .compose(&s_star_ops[ib]);
            let rhs = p_op(tb, &SetExpr::C(alpha.clone(), beta.clone()))?;
            let (m5, s5) = lhs.diff(&rhs);
            report.checks.push(RelationCheck {
                relation: "(v) s_b s_a* s_a s_b* = p_C(a,b)".into(),
                words: vec![alpha.display(cs), beta.display(cs)],
                compared: tb.len() - s5,
                skipped: s5,
                residual: m5,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub residual: usize,
    pub excluded_points: Vec<String>,
}

/// Σ_q S_q S_q* against the projection onto points whose stream starts with
/// a truncated-alphabet letter; exact equality on that subspace, the
/// excluded tail-only points are listed.
pub fn partition_identity(tb: &TruncatedBasis) -> Result<PartitionReport> {
    let mut counts = vec![0usize; tb.len()];
    for q in 0..tb.n_letters {
        let op = s_op(tb, q)?.compose(&s_star_op(tb, q)?);
        for (j, t) in op.to.iter().enumerate() {
            assert!(!op.truncated[j], "S_q S_q* never truncates");
            if let Some(k) = t {
                assert_eq!(*k, j, "S_q S_q* is diagonal");
                counts[j] += 1;
            }
        }
    }
    let mut mismatches = 0;
    let mut excluded = Vec::new();
    for j in 0..tb.len() {
        let expected = usize::from(tb.letter_start[j].is_some());
        if counts[j] != expected {
            mismatches += 1;
        }
        if tb.letter_start[j].is_none() {
            excluded.push(format!("{:?}", tb.points[j].tail()));
        }
    }
    excluded.dedup();
    Ok(PartitionReport {
        residual: mismatches,
        excluded_points: excluded,
    })
}

/// Perron-Frobenius operator P_σ = Σ_q S_q* applied to a vector.
pub fn perron_frobenius_apply(tb: &TruncatedBasis, v: &[CRat]) -> Result<Vec<CRat>> {
    tb.check_dim(v)?;
    let mut out = vec![CRat::zero(); tb.len()];
    for q in 0..tb.n_letters {
        let op = s_star_op(tb, q)?;
        for (j, t) in op.to.iter().enumerate() {
            if let Some(k) = t {
                out[*k] += v[j].clone();
            }
        }
    }
    Ok(out)
}

/// Transfer operator (T_σ ψ)(x) = ψ(σ(x)).
pub fn transfer_apply(tb: &TruncatedBasis, v: &[CRat]) -> Result<Vec<CRat>> {
    tb.check_dim(v)?;
    Ok((0..tb.len()).map(|j| v[tb.shift_to[j]].clone()).collect())
}

/// ⟨a, b⟩ with the counting-measure inner product, conjugate-linear in the
/// first slot.
pub fn inner(a: &[CRat], b: &[CRat]) -> CRat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .fold(CRat::zero(), |acc, t| acc + t)
}

#[derive(Debug, Clone, Serialize)]
pub struct PvmCheck {
    pub word: String,
    pub compared: usize,
    pub residual: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PvmReport {
    pub refinements: Vec<PvmCheck>,
    pub orthogonality_mismatches: usize,
    pub empty_set_is_zero: bool,
}

impl PvmReport {
    pub fn all_zero(&self) -> bool {
        self.empty_set_is_zero
            && self.orthogonality_mismatches == 0
            && self.refinements.iter().all(|c| c.residual == 0)
    }
}

/// Consistency of the projection-valued measure on cylinders: refinement
/// P(Z(Q)) = Σ_q P(Z(Qq)) on letter-word closures deeper than |Q|, and
/// orthogonality of incomparable cylinders.
pub fn pvm_consistency(tb: &TruncatedBasis) -> Result<PvmReport> {
    let cs = &tb.cs;
    let words = tb.words();
    let mut refinements = Vec::new();
    for w in &words {
        if w.total_power() >= tb.depth {
            continue;
        }
        let parent = p_op(tb, &SetExpr::Cylinder(w.clone()))?;
        let mut child_counts = vec![0usize; tb.len()];
        for l in 0..tb.n_letters {
            let child = w.append(l);
            if !is_admissible(cs, &child)? {
                continue;
            }
            let cp = p_op(tb, &SetExpr::Cylinder(child))?;
            for (j, t) in cp.to.iter().enumerate() {
                if t.is_some() {
                    child_counts[j] += 1;
                }
            }
        }
        let mut compared = 0;
        let mut mismatches = 0;
        for j in 0..tb.len() {
            if !tb.is_closure[j] || tb.depth_of[j] <= w.total_power() {
                continue;
            }
            compared += 1;
            let parent_hit = usize::from(parent.to[j].is_some());
            if parent_hit != child_counts[j] {
                mismatches += 1;
            }
        }
        refinements.push(PvmCheck {
            word: w.display(cs),
            compared,
            residual: mismatches,
        });
    }

    let mut orthogonality_mismatches = 0;
    for (ia, a) in words.iter().enumerate() {
        'pair: for b in words.iter().skip(ia + 1) {
            // skip comparable pairs: one expanded sequence extends the other
            let ea: Vec<usize> = a.expand().collect();
            let eb: Vec<usize> = b.expand().collect();
            let n = ea.len().min(eb.len());
            if ea[..n] == eb[..n] {
                continue 'pair;
            }
            let pa = p_op(tb, &SetExpr::Cylinder(a.clone()))?;
            let pb = p_op(tb, &SetExpr::Cylinder(b.clone()))?;
            let prod = pa.compose(&pb);
            let (m, _) = prod.diff(&PartialIsom::zero(tb.len()));
            orthogonality_mismatches += m;
        }
    }

    let empty = p_op(tb, &SetExpr::Empty)?;
    let (zm, _) = empty.diff(&PartialIsom::zero(tb.len()));

    Ok(PvmReport {
        refinements,
        orthogonality_mismatches,
        empty_set_is_zero: zm == 0,
    })
}

/// A simple function Σ c_i χ_{Z(Q_i)} as a diagonal operator.
#[derive(Debug, Clone)]
pub struct DiagonalOp {
    pub diag: Vec<CRat>,
}

impl DiagonalOp {
    pub fn apply(&self, v: &[CRat]) -> Vec<CRat> {
        self.diag
            .iter()
            .zip(v)
            .map(|(d, x)| d.clone() * x)
            .collect()
    }

    pub fn compose(&self, other: &DiagonalOp) -> DiagonalOp {
        DiagonalOp {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a.clone() * b)
                .collect(),
        }
    }

    /// Operator norm of a diagonal matrix.
    pub fn norm(&self) -> f64 {
        self.diag
            .iter()
            .map(complex_abs_f64)
            .fold(0.0f64, f64::max)
    }

    pub fn max_entry_diff(&self, other: &DiagonalOp) -> Rat {
        use num::Signed;
        let mut best = Rat::zero();
        for (a, b) in self.diag.iter().zip(&other.diag) {
            let d = a.clone() - b.clone();
            best = best.max(d.re.abs()).max(d.im.abs());
        }
        best
    }
}

/// The spectral integral of a simple function over cylinder sets.
pub fn spectral_integral(tb: &TruncatedBasis, terms: &[(CRat, Word)]) -> Result<DiagonalOp> {
    let cs = &tb.cs;
    for (_, w) in terms {
        if !is_admissible(cs, w)? {
            return Err(Error::InadmissibleWord(w.display(cs)));
        }
    }
    let mut diag = vec![CRat::zero(); tb.len()];
    for (c, w) in terms {
        let proj = p_op(tb, &SetExpr::Cylinder(w.clone()))?;
        for (j, t) in proj.to.iter().enumerate() {
            if t.is_some() {
                diag[j] += c.clone();
            }
        }
    }
    Ok(DiagonalOp { diag })
}

/// The pointwise product of two simple functions, as a simple function:
/// χ_{Z(Q)} χ_{Z(Q')} is χ of the deeper cylinder when comparable, else 0.
pub fn simple_product(
    tb: &TruncatedBasis,
    f: &[(CRat, Word)],
    g: &[(CRat, Word)],
) -> Vec<(CRat, Word)> {
    let _ = tb;
    let mut out = Vec::new();
    for (c, a) in f {
        for (d, b) in g {
            let ea: Vec<usize> = a.expand().collect();
            let eb: Vec<usize> = b.expand().collect();
            let n = ea.len().min(eb.len());
            if ea[..n] != eb[..n] {
                continue;
            }
            let longer = if ea.len() >= eb.len() { a } else { b };
            out.push((c.clone() * d, longer.clone()));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CyclicCheck {
    pub word: String,
    pub measure: String,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CyclicReport {
    pub checks: Vec<CyclicCheck>,
    pub max_residual: f64,
}

/// Cyclic-vector isometry: for every truncated word Q, the squared norm of
/// W_f(χ_{Z(Q)}) = S_Q S_Q* f equals μ_f(Z(Q)) = ⟨P(Z(Q))f, f⟩, exactly in
/// rational arithmetic.
pub fn cyclic_isometry_check(tb: &TruncatedBasis, f: &[CRat]) -> Result<CyclicReport> {
    tb.check_dim(f)?;
    if f.iter().all(|c| c.re.is_zero() && c.im.is_zero()) {
        return Err(Error::ZeroVector);
    }
    let mut checks = Vec::new();
    let mut max_residual = 0.0f64;
    for w in tb.words() {
        let proj = p_op(tb, &SetExpr::Cylinder(w.clone()))?;
        let pf = proj.apply(f);
        let mu = inner(&pf, f);
        let wf = s_word(tb, &w)?.compose(&s_word_star(tb, &w)?).apply(f);
        let norm2 = inner(&wf, &wf);
        let diff = mu.clone() - norm2;
        let residual = complex_abs_f64(&diff);
        max_residual = max_residual.max(residual);
        checks.push(CyclicCheck {
            word: w.display(&tb.cs),
            measure: mu.re.to_string(),
            exact: diff.re.is_zero() && diff.im.is_zero(),
        });
    }
    Ok(CyclicReport {
        checks,
        max_residual,
    })
}

/// Standard truncated basis used by the command-line driver and the tests:
/// the default comb with two designated off-alphabet tails.
pub fn standard_basis(n_letters: usize, depth: u32) -> Result<TruncatedBasis> {
    let cs = CombSystem::default_comb(n_letters.max(4));
    let extras = vec![
        Tail::Real {
            value: Rat::new(7.into(), 10.into()),
            irrational: false,
        },
        Tail::Real {
            value: Rat::new(17.into(), 24.into()),
            irrational: true,
        },
    ];
    TruncatedBasis::new(cs, n_letters, depth, extras)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;
    use num::One;

    fn crat(n: i64, d: i64) -> CRat {
        CRat::new(rat(n, d), Rat::zero())
    }

    fn two_tooth_basis(depth: u32) -> TruncatedBasis {
        let cs = CombSystem::new(vec![(rat(1, 3), rat(2, 3)), (rat(1, 2), rat(3, 4))]).unwrap();
        TruncatedBasis::new(
            cs,
            2,
            depth,
            vec![Tail::Real {
                value: rat(3, 5),
                irrational: false,
            }],
        )
        .unwrap()
    }

    fn basis_index(tb: &TruncatedBasis, p: &SymbolicPoint) -> usize {
        tb.points().iter().position(|x| x == p).unwrap()
    }

    #[test]
    fn basis_is_shift_closed_and_distinct() {
        let tb = two_tooth_basis(3);
        for i in 0..tb.len() {
            for j in (i + 1)..tb.len() {
                assert_ne!(tb.point(i), tb.point(j));
            }
        }
        // shift_to indices were resolved for every point at construction
        for i in 0..tb.len() {
            let s = shift(tb.comb(), tb.point(i));
            assert_eq!(tb.point(tb.shift_to[i]), &s);
        }
    }

    #[test]
    fn s_examples() {
        let tb = two_tooth_basis(3);
        let cs = tb.comb();
        // S_{1/3} e_{(1/2)^∞} = e_{([1/3],(1/2)^∞)}
        let half = SymbolicPoint::pure_tail(cs, Tail::Letter(1)).unwrap();
        let i_half = basis_index(&tb, &half);
        let s13 = s_op(&tb, 0).unwrap();
        let lifted = SymbolicPoint::new(cs, Word::from_letters(&[0]), Tail::Letter(1)).unwrap();
        assert_eq!(s13.to[i_half], Some(basis_index(&tb, &lifted)));
        // x outside F(q) goes to zero: (1/3)^∞ not in F(1/2)
        let third = SymbolicPoint::pure_tail(cs, Tail::Letter(0)).unwrap();
        let s12 = s_op(&tb, 1).unwrap();
        let i_third = basis_index(&tb, &third);
        assert_eq!(s12.to[i_third], None);
        assert!(!s12.truncated[i_third]);
        // S_q* S_q = identity on the follower set
        let id_on_f = s_star_op(&tb, 0).unwrap().compose(&s13);
        for (j, x) in tb.points().iter().enumerate() {
            if id_on_f.truncated[j] {
                continue;
            }
            if in_follower_letter(cs, 0, x).unwrap() {
                assert_eq!(id_on_f.to[j], Some(j));
            } else {
                assert_eq!(id_on_f.to[j], None);
            }
        }
    }

    #[test]
    fn s_is_partial_isometry() {
        let tb = two_tooth_basis(3);
        for q in 0..2 {
            let s = s_op(&tb, q).unwrap();
            let st = s_star_op(&tb, q).unwrap();
            let sss = s.compose(&st).compose(&s);
            let (mismatches, _) = sss.diff(&s);
            assert_eq!(mismatches, 0);
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let tb = two_tooth_basis(3);
        for q in 0..2 {
            let s = s_op(&tb, q).unwrap();
            let st = s_star_op(&tb, q).unwrap();
            // entries of s as (row, col) pairs equal transposed entries of st
            let mut fwd: Vec<(usize, usize)> = s
                .to
                .iter()
                .enumerate()
                .filter_map(|(j, t)| t.map(|k| (k, j)))
                .collect();
            let mut bwd: Vec<(usize, usize)> = st
                .to
                .iter()
                .enumerate()
                .filter_map(|(j, t)| t.map(|k| (j, k)))
                .collect();
            fwd.sort_unstable();
            bwd.sort_unstable();
            assert_eq!(fwd, bwd);
        }
    }

    #[test]
    fn projection_examples() {
        let tb = two_tooth_basis(3);
        let full = p_op(&tb, &SetExpr::Full).unwrap();
        assert_eq!(full, PartialIsom::identity(tb.len()));
        // P_{Z(q)} fixes e_{qx}
        let z0 = p_op(&tb, &SetExpr::Cylinder(Word::from_letters(&[0]))).unwrap();
        let lifted = SymbolicPoint::new(
            tb.comb(),
            Word::from_letters(&[0]),
            Tail::Letter(1),
        )
        .unwrap();
        let i = basis_index(&tb, &lifted);
        assert_eq!(z0.to[i], Some(i));
        // disjoint cylinders: P_{Z(q)∩Z(p)} = 0
        let expr = SetExpr::Intersect(
            Box::new(SetExpr::Cylinder(Word::from_letters(&[0]))),
            Box::new(SetExpr::Cylinder(Word::from_letters(&[1]))),
        );
        let both = p_op(&tb, &expr).unwrap();
        assert_eq!(both, PartialIsom::zero(tb.len()));
    }

    #[test]
    fn relations_hold_exactly() {
        let tb = two_tooth_basis(2);
        let report = verify_relations(&tb).unwrap();
        assert!(report.all_zero(), "mismatches: {}", report.total_mismatches());
        let tb3 = two_tooth_basis(3);
        let report3 = verify_relations(&tb3).unwrap();
        assert!(report3.all_zero());
    }

    #[test]
    fn partition_identity_on_letter_starts() {
        let tb = two_tooth_basis(3);
        let report = partition_identity(&tb).unwrap();
        assert_eq!(report.residual, 0);
        assert!(!report.excluded_points.is_empty());
    }

    #[test]
    fn perron_frobenius_examples() {
        let tb = two_tooth_basis(3);
        let cs = tb.comb();
        // v = e_{qx} maps to e_x
        let lifted = SymbolicPoint::new(cs, Word::from_letters(&[0]), Tail::Letter(1)).unwrap();
        let half = SymbolicPoint::pure_tail(cs, Tail::Letter(1)).unwrap();
        let mut v = vec![CRat::zero(); tb.len()];
        v[basis_index(&tb, &lifted)] = CRat::one();
        let out = perron_frobenius_apply(&tb, &v).unwrap();
        let mut expected = vec![CRat::zero(); tb.len()];
        expected[basis_index(&tb, &half)] = CRat::one();
        assert_eq!(out, expected);
        // tail-only off-alphabet point is annihilated
        let t = SymbolicPoint::pure_tail(
            cs,
            Tail::Real {
                value: rat(3, 5),
                irrational: false,
            },
        )
        .unwrap();
        let mut v = vec![CRat::zero(); tb.len()];
        v[basis_index(&tb, &t)] = CRat::one();
        let out = perron_frobenius_apply(&tb, &v).unwrap();
        assert!(out.iter().all(|c| c.re.is_zero() && c.im.is_zero()));
    }

    #[test]
    fn transfer_adjoint_to_perron_frobenius() {
        let tb = two_tooth_basis(3);
        // vectors supported on the letter-word closures
        let mut psi = vec![CRat::zero(); tb.len()];
        let mut xi = vec![CRat::zero(); tb.len()];
        let mut k = 1i64;
        for j in 0..tb.len() {
            if tb.is_closure_point(j) {
                psi[j] = crat(k, 3);
                xi[j] = crat(7 - 2 * k, 5);
                k += 1;
            }
        }
        let lhs = inner(&transfer_apply(&tb, &psi).unwrap(), &xi);
        let rhs = inner(&psi, &perron_frobenius_apply(&tb, &xi).unwrap());
        assert_eq!(lhs, rhs);
        // transfer on tail-fixed points reads the same coefficient
        let t = SymbolicPoint::pure_tail(
            tb.comb(),
            Tail::Real {
                value: rat(3, 5),
                irrational: false,
            },
        )
        .unwrap();
        let i = basis_index(&tb, &t);
        let mut v = vec![CRat::zero(); tb.len()];
        v[i] = crat(4, 1);
        let out = transfer_apply(&tb, &v).unwrap();
        assert_eq!(out[i], crat(4, 1));
    }

    #[test]
    fn pvm_consistency_report() {
        let tb = two_tooth_basis(3);
        let report = pvm_consistency(&tb).unwrap();
        assert!(report.all_zero(), "{report:?}");
        assert!(!report.refinements.is_empty());
    }

    #[test]
    fn spectral_integral_examples() {
        let tb = two_tooth_basis(3);
        let q = Word::from_letters(&[0]);
        // χ_{Z(q)} integrates to the cylinder projection with norm 1
        let op = spectral_integral(&tb, &[(CRat::one(), q.clone())]).unwrap();
        assert!((op.norm() - 1.0).abs() < 1e-15);
        // 2 χ_{Z(q)} has operator norm 2 = sup norm
        let op2 = spectral_integral(&tb, &[(crat(2, 1), q.clone())]).unwrap();
        assert!((op2.norm() - 2.0).abs() < 1e-15);
        // disjoint cylinders multiply to zero
        let f = vec![(CRat::one(), Word::from_letters(&[0]))];
        let g = vec![(CRat::one(), Word::from_letters(&[1]))];
        let fg = simple_product(&tb, &f, &g);
        assert!(fg.is_empty());
        // multiplicativity against the composed operators
        let h = vec![
            (crat(2, 1), Word::from_letters(&[0])),
            (crat(-1, 2), Word::from_letters(&[0, 1])),
        ];
        let lhs = spectral_integral(&tb, &simple_product(&tb, &h, &h)).unwrap();
        let rhs = spectral_integral(&tb, &h)
            .unwrap()
            .compose(&spectral_integral(&tb, &h).unwrap());
        assert_eq!(lhs.max_entry_diff(&rhs), Rat::zero());
        // inadmissible words are rejected
        let bad = Word::from_letters(&[1, 0]);
        assert!(matches!(
            spectral_integral(&tb, &[(CRat::one(), bad)]),
            Err(Error::InadmissibleWord(_))
        ));
        // adjoint: the integral of the conjugate is the conjugate transpose
        let hc = vec![
            (CRat::new(rat(1, 2), rat(3, 1)), Word::from_letters(&[0])),
            (CRat::new(rat(0, 1), rat(-1, 4)), Word::from_letters(&[1])),
        ];
        let op = spectral_integral(&tb, &hc).unwrap();
        let conj_terms: Vec<(CRat, Word)> =
            hc.iter().map(|(c, w)| (c.conj(), w.clone())).collect();
        let op_conj = spectral_integral(&tb, &conj_terms).unwrap();
        for (a, b) in op.diag.iter().zip(&op_conj.diag) {
            assert_eq!(a.conj(), b.clone());
        }
    }

    #[test]
    fn cyclic_isometry_examples() {
        let tb = two_tooth_basis(3);
        // uniform vector on depth-1 points
        let mut f = vec![CRat::zero(); tb.len()];
        for j in 0..tb.len() {
            if tb.point_depth(j) == 1 {
                f[j] = CRat::one();
            }
        }
        let report = cyclic_isometry_check(&tb, &f).unwrap();
        assert_eq!(report.max_residual, 0.0);
        assert!(report.checks.iter().all(|c| c.exact));
        // f = e_x: μ_f(Z(Q)) is the 0/1 membership of x
        let x = SymbolicPoint::new(tb.comb(), Word::from_letters(&[0]), Tail::Letter(1)).unwrap();
        let mut f = vec![CRat::zero(); tb.len()];
        f[basis_index(&tb, &x)] = CRat::one();
        let report = cyclic_isometry_check(&tb, &f).unwrap();
        assert_eq!(report.max_residual, 0.0);
        for c in &report.checks {
            let w = Word::parse(tb.comb(), &c.word).unwrap();
            let member = in_c(tb.comb(), &Word::empty(), &w, &x).unwrap();
            assert_eq!(c.measure == "1", member);
        }
        // zero vector is rejected
        let z = vec![CRat::zero(); tb.len()];
        assert!(matches!(
            cyclic_isometry_check(&tb, &z),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn standard_basis_relations() {
        let tb = standard_basis(4, 3).unwrap();
        assert!(tb.len() > 10);
        let report = verify_relations(&tb).unwrap();
        assert!(report.all_zero());
    }
}
