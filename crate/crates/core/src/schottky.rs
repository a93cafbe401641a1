//! Schottky-group boundary dynamics: reduced-word orbits of the Gauss
//! point, critical-exponent estimation, Poincaré series, orbital-counting
//! approximation of the Patterson-Sullivan measure, quasiconformality
//! residuals, the time evolution on crossed-product elements, KMS residuals
//! and the diagonal Hamiltonian.

use serde::Serialize;

use crate::berkline::{big_metric, same_disk, BerkPoint};
use crate::error::{Error, Result};
use crate::group::{act_on_point, busemann_gauss, cylinder_label, BoundaryCylinder, MoebiusMap, C64};
use crate::padic::{rat_to_f64, PrimeContext, Rat};

/// A reduced word in the generators: letters ±(i+1) refer to generator i
/// and its inverse, with no adjacent cancellation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GroupWord(pub Vec<i32>);

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Concatenation with free reduction.
    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GroupWord(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != -w[1]) && self.0.iter().all(|&l| l != 0)
    }

    /// Sort key: length first, then generator index with the positive
    /// letter before its inverse.
    fn lex_key(&self) -> (usize, Vec<(u32, u8)>) {
        (
            self.0.len(),
            self.0
                .iter()
                .map(|&l| (l.unsigned_abs(), u8::from(l < 0)))
                .collect(),
        )
    }
}

impl std::fmt::Display for GroupWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "g{}", l.unsigned_abs())?;
            if *l < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

/// Cap on the number of enumerated orbit words.
pub const ORBIT_BUDGET: usize = 1_000_000;

/// A finitely generated free subgroup of PGL_2 acting on the tree.
pub struct SchottkyGroup {
    ctx: PrimeContext,
    generators: Vec<MoebiusMap>,
}

#[derive(Debug, Clone)]
pub struct OrbitEntry {
    pub word: GroupWord,
    pub point: BerkPoint,
    pub dist: Rat,
}

impl SchottkyGroup {
    pub fn new(ctx: PrimeContext, generators: Vec<MoebiusMap>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyGroup);
        }
        Ok(SchottkyGroup { ctx, generators })
    }

    /// Validates supplied ping-pong gate pairs (attracting, repelling) per
    /// generator. Gates name direction regions at the Gauss point; each
    /// generator must map every gate other than its own repelling one into
    /// its attracting region.
    pub fn validate_ping_pong(&self, gates: &[(BerkPoint, BerkPoint)]) -> Result<()> {
        if gates.len() != self.generators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.generators.len(),
                got: gates.len(),
            });
        }
        let ctx = &self.ctx;
        for (i, g) in self.generators.iter().enumerate() {
            for dir in [false, true] {
                let (m, attract, repel) = if dir {
                    (g.inverse(), gates[i].1.clone(), gates[i].0.clone())
                } else {
                    (g.clone(), gates[i].0.clone(), gates[i].1.clone())
                };
                let region = crate::group::Cylinder { gate: attract };
                for (a, r) in gates.iter() {
                    for gate in [a, r] {
                        if same_disk(ctx, gate, &repel) {
                            continue;
                        }
                        let image = act_on_point(ctx, &m, gate)?;
                        if !region.contains(ctx, &image) {
                            return Err(Error::PoleInsideDisk(format!(
                                " ping-pong failure: g{}{} does not contract {gate}",
                                i + 1,
                                if dir { "^-1" } else { "" }
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, i: usize) -> &MoebiusMap {
        &self.generators[i]
    }

    pub fn letters(&self) -> Vec<i32> {
        let mut out = Vec::new();
        for i in 0..self.generators.len() {
            out.push(i as i32 + 1);
            out.push(-(i as i32 + 1));
        }
        out
    }

    pub fn letter_matrix(&self, l: i32) -> MoebiusMap {
        let g = &self.generators[(l.unsigned_abs() - 1) as usize];
        if l > 0 {
            g.clone()
        } else {
            g.inverse()
        }
    }

    pub fn word_matrix(&self, w: &GroupWord) -> MoebiusMap {
        let mut m = MoebiusMap::identity();
        for &l in &w.0 {
            m = m.compose(&self.letter_matrix(l));
        }
        m
    }

    /// All reduced words of length <= `max_len` with the image and the big
    /// distance of the Gauss point, ordered by length then lexicographically.
    pub fn orbit(&self, max_len: usize) -> Result<Vec<OrbitEntry>> {
        self.orbit_with_threads(max_len, 1)
    }

    /// Orbit enumeration partitioned by leading letter; the output is
    /// identical for every thread count.
    pub fn orbit_with_threads(&self, max_len: usize, threads: usize) -> Result<Vec<OrbitEntry>> {
        let n = self.generators.len();
        let word_bound: usize = if n == 1 {
            2 * max_len + 1
        } else {
            // 1 + 2n (2n-1)^(L-1) + ... bounded crudely
            let mut total = 1usize;
            let mut shell = 2 * n;
            for _ in 0..max_len {
                total = total.saturating_add(shell);
                shell = shell.saturating_mul(2 * n - 1);
            }
            total
        };
        if word_bound > ORBIT_BUDGET {
            return Err(Error::OrbitTooLarge(word_bound));
        }

        let gauss = BerkPoint::gauss();
        let dist0 = Rat::from_integer(0.into());
        let identity = OrbitEntry {
            word: GroupWord::identity(),
            point: gauss.clone(),
            dist: dist0,
        };
        if max_len == 0 {
            return Ok(vec![identity]);
        }

        let letters = self.letters();
        let threads = threads.max(1).min(letters.len());
        let mut branch_results: Vec<Result<Vec<OrbitEntry>>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in letters.chunks(letters.len().div_ceil(threads)) {
                let chunk: Vec<i32> = chunk.to_vec();
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    for &first in &chunk {
                        self.enumerate_branch(first, max_len, &mut out)?;
                    }
                    Ok(out)
                }));
            }
            for h in handles {
                branch_results.push(h.join().expect("enumeration thread panicked"));
            }
        });

        let mut entries = vec![identity];
        for r in branch_results {
            entries.extend(r?);
        }
        entries.sort_by(|a, b| a.word.lex_key().cmp(&b.word.lex_key()));
        Ok(entries)
    }

    /// Depth-first enumeration of reduced words starting with `first`,
    /// carrying the matrix product along the suffix chain.
    fn enumerate_branch(
        &self,
        first: i32,
        max_len: usize,
        out: &mut Vec<OrbitEntry>,
    ) -> Result<()> {
        let gauss = BerkPoint::gauss();
        let mut stack: Vec<(GroupWord, MoebiusMap)> = Vec::new();
        stack.push((
            GroupWord(vec![first]),
            self.letter_matrix(first),
        ));
        while let Some((word, matrix)) = stack.pop() {
            let point = act_on_point(&self.ctx, &matrix, &gauss).map_err(|e| match e {
                Error::PoleInsideDisk(_) => Error::PoleInsideDisk(format!(" at word {word}")),
                other => other,
            })?;
            let dist = big_metric(&self.ctx, &gauss, &point)?;
            let last = *word.0.last().unwrap();
            let extend = word.len() < max_len;
            if extend {
                for &l in self.letters().iter().rev() {
                    if l == -last {
                        continue;
                    }
                    let mut next = word.0.clone();
                    next.push(l);
                    stack.push((GroupWord(next), matrix.compose(&self.letter_matrix(l))));
                }
            }
            out.push(OrbitEntry {
                word,
                point,
                dist,
            });
        }
        Ok(())
    }
}

/// Rank-1 group generated by the scaling ξ ↦ pξ (translation length 1
/// along the 0-∞ axis).
pub fn scaling_group(ctx: PrimeContext) -> SchottkyGroup {
    let p = ctx.prime() as i64;
    let g = MoebiusMap::new(
        Rat::from_integer(p.into()),
        Rat::from_integer(0.into()),
        Rat::from_integer(0.into()),
        Rat::from_integer(1.into()),
    )
    .expect("scaling map is invertible");
    SchottkyGroup::new(ctx, vec![g]).expect("nonempty")
}

/// Rank-2 free group with both generators of translation length 1 whose
/// axes cross at the Gauss point in four distinct directions: g1 fixes
/// 0 and ∞, g2 is its conjugate fixing 1 and 2. Every reduced word moves
/// the Gauss point by exactly its length.
pub fn symmetric_rank2_group(ctx: PrimeContext) -> Result<SchottkyGroup> {
    if ctx.prime() < 3 {
        // residues 0, 1, 2 must be distinct mod p
        return Err(Error::NotPrime(ctx.prime()));
    }
    let p = ctx.prime() as i64;
    let r = |n: i64| Rat::from_integer(n.into());
    let g1 = MoebiusMap::new(r(p), r(0), r(0), r(1))?;
    let g2 = MoebiusMap::new(r(2 * p - 1), r(2 - 2 * p), r(p - 1), r(2 - p))?;
    SchottkyGroup::new(ctx, vec![g1, g2])
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// (radius, cumulative count) pairs over the fitted range
    pub grid: Vec<(f64, usize)>,
    /// root-mean-square deviation of ln N from the fitted line
    pub residual: f64,
}

/// Least-squares growth rate of ln N(R) against R over the largest half of
/// the observed radius range, natural logarithm.
pub fn critical_exponent_estimate(entries: &[OrbitEntry]) -> Result<DeltaEstimate> {
    let mut dists: Vec<f64> = entries.iter().map(|e| rat_to_f64(&e.dist)).collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut grid: Vec<(f64, usize)> = Vec::new();
    for (i, d) in dists.iter().enumerate() {
        match grid.last_mut() {
            Some((r, n)) if (*d - *r).abs() < 1e-12 => *n = i + 1,
            _ => grid.push((*d, i + 1)),
        }
    }
    if grid.len() < 4 {
        return Err(Error::InsufficientData(4));
    }
    let r_max = grid.last().unwrap().0;
    let r_min = grid.first().unwrap().0;
    let cut = r_min + (r_max - r_min) / 2.0;
    let fit: Vec<(f64, usize)> = grid.iter().copied().filter(|(r, _)| *r >= cut).collect();
    let pts: Vec<(f64, f64)> = fit.iter().map(|(r, n)| (*r, (*n as f64).ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::InsufficientData(4));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = (pts
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DeltaEstimate {
        delta: slope,
        grid: fit,
        residual,
    })
}

/// Which exponent the Poincaré series uses: the orbital distance ρ(ζ, γζ)
/// (standard), or the literal diameter of the orbit point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoincareMode {
    Rho,
    DiamLiteral,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareSum {
    pub s: f64,
    pub mode: PoincareMode,
    pub partial: f64,
    /// per-word-length shell sums
    pub shells: Vec<f64>,
    /// geometric extrapolation from the last two shells; infinite when the
    /// shells do not decay
    pub tail_estimate: f64,
}

pub fn poincare_series(
    group: &SchottkyGroup,
    entries: &[OrbitEntry],
    s: f64,
    mode: PoincareMode,
) -> PoincareSum {
    let p = group.ctx().prime();
    let max_len = entries.iter().map(|e| e.word.len()).max().unwrap_or(0);
    let mut shells = vec![0.0f64; max_len + 1];
    for e in entries {
        let exponent = match mode {
            PoincareMode::Rho => rat_to_f64(&e.dist),
            PoincareMode::DiamLiteral => e.point.diam().to_f64(p),
        };
        shells[e.word.len()] += (-s * exponent).exp();
    }
    let partial: f64 = shells.iter().sum();
    let tail_estimate = if shells.len() >= 2 {
        let last = shells[shells.len() - 1];
        let prev = shells[shells.len() - 2];
        if prev > 0.0 && last / prev < 1.0 {
            let r = last / prev;
            last * r / (1.0 - r)
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    PoincareSum {
        s,
        mode,
        partial,
        shells,
        tail_estimate,
    }
}

/// An atom of the estimated boundary measure: a cylinder label with its
/// representative boundary point and accumulated weight.
#[derive(Debug, Clone)]
pub struct SampleAtom {
    pub cylinder: BoundaryCylinder,
    pub weight: f64,
}

/// Discretized boundary measure: weighted atoms at cylinder representatives.
#[derive(Debug, Clone, Default)]
pub struct BoundarySample {
    pub atoms: Vec<SampleAtom>,
}

impl BoundarySample {
    /// Total mass of atoms whose region lies inside the given cylinder,
    /// decided by gate containment.
    pub fn mass_in(&self, ctx: &PrimeContext, cyl: &crate::group::Cylinder) -> f64 {
        self.atoms
            .iter()
            .filter(|a| cyl.contains(ctx, &a.cylinder.cylinder.gate))
            .map(|a| a.weight)
            .sum()
    }

    /// Total mass of atoms whose region maps into the cylinder under `m`,
    /// i.e. the sampled measure of m⁻¹(cylinder).
    pub fn pulled_mass_in(
        &self,
        ctx: &PrimeContext,
        m: &MoebiusMap,
        cyl: &crate::group::Cylinder,
    ) -> f64 {
        self.atoms
            .iter()
            .filter(|a| match act_on_point(ctx, m, &a.cylinder.cylinder.gate) {
                Ok(gate) => cyl.contains(ctx, &gate),
                Err(_) => false,
            })
            .map(|a| a.weight)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// Normalized orbital-counting estimate of the Patterson-Sullivan measure:
/// each nontrivial orbit word deposits e^{-s ρ(ζ, γζ)} at the depth-`depth`
/// cylinder label of its direction from the Gauss point.
pub fn ps_measure_estimate(
    group: &SchottkyGroup,
    entries: &[OrbitEntry],
    s: f64,
    depth: &Rat,
) -> Result<BoundarySample> {
    let ctx = group.ctx();
    let mut sample = BoundarySample::default();
    for e in entries {
        if e.word.is_empty() {
            continue;
        }
        let label = cylinder_label(ctx, &e.point, depth);
        let weight = (-s * rat_to_f64(&e.dist)).exp();
        match sample
            .atoms
            .iter_mut()
            .find(|a| same_disk(ctx, &a.cylinder.cylinder.gate, &label.gate))
        {
            Some(atom) => atom.weight += weight,
            None => sample.atoms.push(SampleAtom {
                cylinder: BoundaryCylinder::new(ctx, label)?,
                weight,
            }),
        }
    }
    if sample.atoms.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let total = sample.total_mass();
    for a in &mut sample.atoms {
        a.weight /= total;
    }
    Ok(sample)
}

#[derive(Debug, Clone, Serialize)]
pub struct QcCylinderCheck {
    pub label: String,
    pub mass: f64,
    pub pulled_mass: f64,
    pub log_ratio: f64,
    pub expected_log: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QcReport {
    pub checks: Vec<QcCylinderCheck>,
    /// cylinders whose pullback falls below the sample resolution
    pub skipped: Vec<String>,
    pub max_relative_deviation: f64,
}

/// Compares μ̂(γ⁻¹ Z)/μ̂(Z) against j_γ(ξ_Z)^δ per cylinder; the reported
/// deviation is relative to the expected log-ratio. Cylinders whose
/// pullback carries no sample mass (it lies beyond the label depth) are
/// skipped and listed.
pub fn quasiconformality_report(
    group: &SchottkyGroup,
    sample: &BoundarySample,
    delta: f64,
    gamma: &MoebiusMap,
) -> Result<QcReport> {
    let ctx = group.ctx();
    let lp = (ctx.prime() as f64).ln();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut max_rel = 0.0f64;
    for atom in &sample.atoms {
        let cyl = &atom.cylinder.cylinder;
        let mass = sample.mass_in(ctx, cyl);
        if mass <= 0.0 {
            return Err(Error::EmptyCylinder(atom.cylinder.label.clone()));
        }
        let b = match busemann_gauss(ctx, gamma, &atom.cylinder.rep) {
            Ok(b) => rat_to_f64(&b),
            Err(Error::PoleAtBoundaryPoint(_)) => {
                skipped.push(atom.cylinder.label.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let expected_log = delta * b * lp;
        if expected_log.abs() < 1e-9 {
            continue;
        }
        let pulled = sample.pulled_mass_in(ctx, gamma, cyl);
        if pulled <= 0.0 {
            skipped.push(atom.cylinder.label.clone());
            continue;
        }
        let log_ratio = (pulled / mass).ln();
        let rel = (log_ratio - expected_log).abs() / expected_log.abs();
        max_rel = max_rel.max(rel);
        checks.push(QcCylinderCheck {
            label: atom.cylinder.label.clone(),
            mass,
            pulled_mass: pulled,
            log_ratio,
            expected_log,
            relative_deviation: rel,
        });
    }
    if checks.is_empty() {
        return Err(Error::EmptyCylinder("no comparable cylinder".into()));
    }
    Ok(QcReport {
        checks,
        skipped,
        max_relative_deviation: max_rel,
    })
}

/// A finitely supported element Σ_γ f_γ U_γ of the crossed product, with
/// simple-function coefficients over boundary cylinders.
#[derive(Debug, Clone, Default)]
pub struct CrossedElement {
    pub terms: Vec<(GroupWord, Vec<(BoundaryCylinder, C64)>)>,
}

impl CrossedElement {
    pub fn component(&self, w: &GroupWord) -> Option<&Vec<(BoundaryCylinder, C64)>> {
        self.terms.iter().find(|(g, _)| g == w).map(|(_, f)| f)
    }

    /// Pointwise evaluation of the coefficient function at γ.
    pub fn eval_component(&self, ctx: &PrimeContext, w: &GroupWord, xi: &Rat) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        if let Some(f) = self.component(w) {
            for (cyl, c) in f {
                if cyl.cylinder.contains_boundary(ctx, xi) {
                    acc += c;
                }
            }
        }
        acc
    }

    pub fn support(&self) -> Vec<&GroupWord> {
        self.terms.iter().map(|(g, _)| g).collect()
    }

    pub fn max_coefficient_norm(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(_, f)| f.iter().map(|(_, c)| c.norm()))
            .fold(0.0, f64::max)
    }
}

/// Time evolution α_t: multiplies the γ-coefficient pointwise by
/// p^{i t B(ζ, γζ, ξ)}. Exactly unimodular on every coefficient.
pub fn time_evolve(
    group: &SchottkyGroup,
    a: &CrossedElement,
    t: f64,
) -> Result<CrossedElement> {
    let ctx = group.ctx();
    let lp = (ctx.prime() as f64).ln();
    let mut out = CrossedElement::default();
    for (w, f) in &a.terms {
        let m = group.word_matrix(w);
        let mut nf = Vec::with_capacity(f.len());
        for (cyl, c) in f {
            let b = rat_to_f64(&busemann_gauss(ctx, &m, &cyl.rep)?);
            let phase = C64::new(0.0, t * b * lp).exp();
            nf.push((cyl.clone(), c * phase));
        }
        out.terms.push((w.clone(), nf));
    }
    Ok(out)
}

/// Analytic continuation α_{iβ}: multiplies the γ-coefficient by the real
/// factor p^{-β B(ζ, γζ, ξ)}.
pub fn evolve_imaginary(
    group: &SchottkyGroup,
    a: &CrossedElement,
    beta: f64,
) -> Result<CrossedElement> {
    let ctx = group.ctx();
    let lp = (ctx.prime() as f64).ln();
    let mut out = CrossedElement::default();
    for (w, f) in &a.terms {
        let m = group.word_matrix(w);
        let mut nf = Vec::with_capacity(f.len());
        for (cyl, c) in f {
            let b = rat_to_f64(&busemann_gauss(ctx, &m, &cyl.rep)?);
            let factor = (-beta * b * lp).exp();
            nf.push((cyl.clone(), c * factor));
        }
        out.terms.push((w.clone(), nf));
    }
    Ok(out)
}

/// The positive functional φ(x) = Σ_atoms x_e(ξ) μ̂-weight: integration of
/// the identity component against the sampled boundary measure.
pub fn state_functional(
    group: &SchottkyGroup,
    sample: &BoundarySample,
    x: &CrossedElement,
) -> C64 {
    let ctx = group.ctx();
    let e = GroupWord::identity();
    let mut acc = C64::new(0.0, 0.0);
    for atom in &sample.atoms {
        acc += x.eval_component(ctx, &e, &atom.cylinder.rep) * atom.weight;
    }
    acc
}

/// φ(ab) with the crossed-product multiplication
/// (ab)_e(ξ) = Σ_γ a_γ(ξ) b_{γ⁻¹}(γ⁻¹ ξ), evaluated at the sample atoms.
pub fn state_of_product(
    group: &SchottkyGroup,
    sample: &BoundarySample,
    a: &CrossedElement,
    b: &CrossedElement,
) -> Result<C64> {
    let ctx = group.ctx();
    if sample.atoms.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mut acc = C64::new(0.0, 0.0);
    for atom in &sample.atoms {
        let xi = &atom.cylinder.rep;
        for (g1, _) in &a.terms {
            let g2 = g1.inverse();
            if b.component(&g2).is_none() {
                continue;
            }
            let m1_inv = group.word_matrix(g1).inverse();
            let pulled = match m1_inv.apply_rational(xi) {
                Ok(p) => p,
                Err(e) => return Err(e),
            };
            let va = a.eval_component(ctx, g1, xi);
            let vb = b.eval_component(ctx, &g2, &pulled);
            acc += va * vb * atom.weight;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct KmsReport {
    pub beta: f64,
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub residual: f64,
}

/// Relative KMS residual |φ(ab) - φ(b α_{iβ}(a))| / max(|φ(ab)|, ε).
pub fn kms_residual(
    group: &SchottkyGroup,
    sample: &BoundarySample,
    a: &CrossedElement,
    b: &CrossedElement,
    beta: f64,
) -> Result<KmsReport> {
    let lhs = state_of_product(group, sample, a, b)?;
    let evolved = evolve_imaginary(group, a, beta)?;
    let rhs = state_of_product(group, sample, b, &evolved)?;
    let residual = (lhs - rhs).norm() / lhs.norm().max(1e-30);
    Ok(KmsReport {
        beta,
        lhs: (lhs.re, lhs.im),
        rhs: (rhs.re, rhs.im),
        residual,
    })
}

/// The reference element pair for KMS residuals: a = χ_A U_{g1} with A the
/// depth-1 attracting cylinder of the first generator, and b = χ_{g1⁻¹ A}
/// U_{g1⁻¹}. At inverse temperature equal to the measure dimension the two
/// sides of the KMS identity reduce to the quasiconformal change of
/// variables for g1 over A.
pub fn documented_kms_pair(
    group: &SchottkyGroup,
) -> Result<(CrossedElement, CrossedElement)> {
    let ctx = group.ctx();
    let g1 = group.generator(0);
    let one = Rat::from_integer(1.into());
    let attract = act_on_point(ctx, g1, &BerkPoint::gauss())?;
    let a_cyl = cylinder_label(ctx, &attract, &one);
    let b_gate = act_on_point(ctx, &g1.inverse(), &a_cyl.gate)?;
    let b_cyl = crate::group::Cylinder { gate: b_gate };
    let a = CrossedElement {
        terms: vec![(
            GroupWord(vec![1]),
            vec![(BoundaryCylinder::new(ctx, a_cyl)?, C64::new(1.0, 0.0))],
        )],
    };
    let b = CrossedElement {
        terms: vec![(
            GroupWord(vec![-1]),
            vec![(BoundaryCylinder::new(ctx, b_cyl)?, C64::new(1.0, 0.0))],
        )],
    };
    Ok((a, b))
}

/// A finite slot basis (boundary atom, group word) for the covariant
/// representation; the Hamiltonian acts diagonally by the Busemann value.
pub struct HamiltonianBasis {
    pub atoms: Vec<BoundaryCylinder>,
    pub words: Vec<GroupWord>,
}

impl HamiltonianBasis {
    pub fn dim(&self) -> usize {
        self.atoms.len() * self.words.len()
    }

    pub fn slot(&self, atom: usize, word: usize) -> usize {
        atom * self.words.len() + word
    }

    fn word_index(&self, w: &GroupWord) -> Option<usize> {
        self.words.iter().position(|x| x == w)
    }

    /// Index of the deepest atom whose cylinder contains ξ.
    fn locate(&self, ctx: &PrimeContext, xi: &Rat) -> Option<usize> {
        let mut best: Option<(usize, Rat)> = None;
        for (i, a) in self.atoms.iter().enumerate() {
            if a.cylinder.contains_boundary(ctx, xi) {
                let d = a.cylinder.depth(ctx);
                best = match best {
                    Some((j, bd)) if bd >= d => Some((j, bd)),
                    _ => Some((i, d)),
                };
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Diagonal eigenvalues B(ζ, γζ, ξ) over the slot basis.
pub fn hamiltonian_eigenvalues(
    group: &SchottkyGroup,
    basis: &HamiltonianBasis,
) -> Result<Vec<f64>> {
    let ctx = group.ctx();
    let mut out = Vec::with_capacity(basis.dim());
    for atom in &basis.atoms {
        for w in &basis.words {
            let m = group.word_matrix(w);
            out.push(rat_to_f64(&busemann_gauss(ctx, &m, &atom.rep)?));
        }
    }
    Ok(out)
}

/// H v: diagonal multiplication by the Busemann eigenvalues.
pub fn hamiltonian_apply(
    group: &SchottkyGroup,
    basis: &HamiltonianBasis,
    v: &[C64],
) -> Result<Vec<C64>> {
    if v.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: v.len(),
        });
    }
    let eig = hamiltonian_eigenvalues(group, basis)?;
    Ok(v.iter().zip(eig).map(|(c, e)| c * e).collect())
}

/// π(a) on the slot basis: (a ψ)(ξ, w) = Σ_γ a_γ(ξ) ψ(γ⁻¹ ξ, γ⁻¹ w).
pub fn crossed_apply(
    group: &SchottkyGroup,
    basis: &HamiltonianBasis,
    a: &CrossedElement,
    v: &[C64],
) -> Result<Vec<C64>> {
    if v.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: v.len(),
        });
    }
    let ctx = group.ctx();
    let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
    for (ai, atom) in basis.atoms.iter().enumerate() {
        for (wi, w) in basis.words.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (g, _) in &a.terms {
                let coeff = a.eval_component(ctx, g, &atom.rep);
                if coeff.norm() == 0.0 {
                    continue;
                }
                let wprime = g.inverse().concat(w);
                let Some(wj) = basis.word_index(&wprime) else {
                    continue;
                };
                let pulled = match group.word_matrix(g).inverse().apply_rational(&atom.rep) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let Some(aj) = basis.locate(ctx, &pulled) else {
                    continue;
                };
                acc += coeff * v[basis.slot(aj, wj)];
            }
            out[basis.slot(ai, wi)] = acc;
        }
    }
    Ok(out)
}

/// Residual of e^{itH} π(a) e^{-itH} against π(α_t(a)) on the slot basis,
/// maximized over the given test vectors.
pub fn hamiltonian_conjugation_residual(
    group: &SchottkyGroup,
    basis: &HamiltonianBasis,
    a: &CrossedElement,
    t: f64,
    tests: &[Vec<C64>],
) -> Result<f64> {
    let eig = hamiltonian_eigenvalues(group, basis)?;
    let lp = (group.ctx().prime() as f64).ln();
    let evolved = time_evolve(group, a, t)?;
    let mut worst = 0.0f64;
    for v in tests {
        let phase_neg: Vec<C64> = v
            .iter()
            .zip(&eig)
            .map(|(c, e)| c * C64::new(0.0, -t * e * lp).exp())
            .collect();
        let mid = crossed_apply(group, basis, a, &phase_neg)?;
        let lhs: Vec<C64> = mid
            .iter()
            .zip(&eig)
            .map(|(c, e)| c * C64::new(0.0, t * e * lp).exp())
            .collect();
        let rhs = crossed_apply(group, basis, &evolved, v)?;
        for (x, y) in lhs.iter().zip(&rhs) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}
