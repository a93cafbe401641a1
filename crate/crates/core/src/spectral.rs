//! The even spectral triple of a finite graph of discs.
//!
//! The Hilbert space carries one pair of spin slots per ordered adjacent
//! vertex pair (v, v₊). The inert ℓ²(V) tensor factor is factored out: the
//! representation, the Dirac operator and the grading all act blockwise on
//! C^{2 n_v}, so dropping the factor changes no operator identity.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num::complex::Complex;
use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{rat_to_f64, Rat};
use crate::tree::{FiniteTree, TreeInclusion};

/// Complex scalar with exact rational real and imaginary parts.
pub type CRat = Complex<Rat>;

pub fn crat(re: Rat) -> CRat {
    Complex::new(re, Rat::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Spin {
    Plus,
    Minus,
}

/// One basis slot (v, v₊, spin): vertex, adjacent neighbor, spin sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BasisSlot {
    pub vertex: usize,
    pub neighbor: usize,
    pub spin: Spin,
}

/// Dense-solver cap on the number of basis slots.
pub const DENSE_SPECTRUM_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct SpectralTriple {
    tree: FiniteTree,
    basis: Vec<BasisSlot>,
    slot_index: HashMap<(usize, usize, Spin), usize>,
    /// 1/ρ(v, v₊) per ordered adjacent pair, indexed like `basis` pairs.
    inv_lengths: HashMap<(usize, usize), Rat>,
}

/// Assembles the triple: per ordered adjacent pair (v, v₊) a 2x2 Dirac block
/// [[0, 1/ℓ], [1/ℓ, 0]] on the (+,-) slots and a grading block diag(1, -1).
pub fn assemble_triple(tree: FiniteTree) -> SpectralTriple {
    let mut basis = Vec::new();
    let mut slot_index = HashMap::new();
    let mut inv_lengths = HashMap::new();
    for v in 0..tree.vertex_count() {
        for &w in tree.neighbors(v) {
            let ell = tree
                .edge_between(v, w)
                .expect("adjacency matches edges")
                .length
                .clone();
            inv_lengths.insert((v, w), ell.recip());
            for spin in [Spin::Plus, Spin::Minus] {
                slot_index.insert((v, w, spin), basis.len());
                basis.push(BasisSlot {
                    vertex: v,
                    neighbor: w,
                    spin,
                });
            }
        }
    }
    SpectralTriple {
        tree,
        basis,
        slot_index,
        inv_lengths,
    }
}

impl SpectralTriple {
    pub fn tree(&self) -> &FiniteTree {
        &self.tree
    }

    pub fn basis(&self) -> &[BasisSlot] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn slot(&self, vertex: usize, neighbor: usize, spin: Spin) -> Option<usize> {
        self.slot_index.get(&(vertex, neighbor, spin)).copied()
    }

    fn check_dim(&self, psi: &[CRat]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        Ok(())
    }

    /// π(f)ψ: multiplies the (v, v₊, +) slot by f(v₊) and the (v, v₊, -)
    /// slot by f(v). `f` is indexed by vertex.
    pub fn rep_apply(&self, f: &[CRat], psi: &[CRat]) -> Result<Vec<CRat>> {
        self.check_dim(psi)?;
        if f.len() != self.tree.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.tree.vertex_count(),
                got: f.len(),
            });
        }
        Ok(self
            .basis
            .iter()
            .zip(psi)
            .map(|(slot, c)| match slot.spin {
                Spin::Plus => f[slot.neighbor].clone() * c,
                Spin::Minus => f[slot.vertex].clone() * c,
            })
            .collect())
    }

    /// Dψ: the off-diagonal 1/ℓ block per ordered pair swaps the spin slots.
    pub fn dirac_apply(&self, psi: &[CRat]) -> Result<Vec<CRat>> {
        self.check_dim(psi)?;
        let mut out = vec![CRat::zero(); psi.len()];
        for (i, slot) in self.basis.iter().enumerate() {
            let other_spin = match slot.spin {
                Spin::Plus => Spin::Minus,
                Spin::Minus => Spin::Plus,
            };
            let j = self.slot(slot.vertex, slot.neighbor, other_spin).unwrap();
            let ell_inv = &self.inv_lengths[&(slot.vertex, slot.neighbor)];
            out[i] = crat(ell_inv.clone()) * &psi[j];
        }
        Ok(out)
    }

    /// γψ: +1 on plus slots, -1 on minus slots.
    pub fn grading_apply(&self, psi: &[CRat]) -> Result<Vec<CRat>> {
        self.check_dim(psi)?;
        Ok(self
            .basis
            .iter()
            .zip(psi)
            .map(|(slot, c)| match slot.spin {
                Spin::Plus => c.clone(),
                Spin::Minus => -c.clone(),
            })
            .collect())
    }

    /// Sparse rational entries of the Dirac matrix (row, col, value).
    pub fn dirac_entries(&self) -> Vec<(usize, usize, Rat)> {
        let mut out = Vec::new();
        for (i, slot) in self.basis.iter().enumerate() {
            if slot.spin == Spin::Plus {
                let j = self.slot(slot.vertex, slot.neighbor, Spin::Minus).unwrap();
                let v = self.inv_lengths[&(slot.vertex, slot.neighbor)].clone();
                out.push((i, j, v.clone()));
                out.push((j, i, v));
            }
        }
        out
    }

    pub fn dirac_dense_f64(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, v) in self.dirac_entries() {
            m[(i, j)] = rat_to_f64(&v);
        }
        m
    }

    /// Eigenvalues of the Dirac matrix via a dense symmetric solver.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() > DENSE_SPECTRUM_LIMIT {
            return Err(Error::MatrixTooLarge {
                limit: DENSE_SPECTRUM_LIMIT,
                got: self.dim(),
            });
        }
        let eig = nalgebra::SymmetricEigen::new(self.dirac_dense_f64());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }

    /// The exact spectrum ±1/ℓ(e), each twice, as (value, multiplicity)
    /// sorted ascending.
    pub fn analytic_spectrum(&self) -> Vec<(Rat, usize)> {
        let mut vals: Vec<Rat> = Vec::new();
        for e in self.tree.edges() {
            let v = e.length.clone().recip();
            vals.push(v.clone());
            vals.push(-v);
        }
        vals.sort();
        let mut out: Vec<(Rat, usize)> = Vec::new();
        for v in vals {
            match out.last_mut() {
                Some((w, m)) if *w == v => *m += 2,
                _ => out.push((v, 2)),
            }
        }
        out
    }

    /// Operator norm ‖D‖ = max_e 1/ℓ(e).
    pub fn operator_norm(&self) -> Rat {
        self.tree
            .edges()
            .iter()
            .map(|e| e.length.clone().recip())
            .max()
            .expect("a graph of discs has at least one edge")
    }

    /// ‖[D, π(f)]‖: per block |f(v₊) - f(v)|/ℓ, maximized over blocks.
    pub fn commutator_norm(&self, f: &[CRat]) -> f64 {
        let mut best = 0.0f64;
        for e in self.tree.edges() {
            let diff = f[e.u].clone() - f[e.v].clone();
            let ell = rat_to_f64(&e.length);
            let norm = complex_abs_f64(&diff) / ell;
            if norm > best {
                best = norm;
            }
        }
        best
    }

    /// Lipschitz constant of f over vertex pairs in the big metric.
    pub fn lipschitz_constant(&self, f: &[CRat]) -> f64 {
        let ctx = self.tree.ctx();
        let vs = self.tree.vertices();
        let mut best = 0.0f64;
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                let d = crate::berkline::big_metric(&ctx, &vs[i], &vs[j])
                    .expect("tree vertices are hyperbolic");
                let diff = f[i].clone() - f[j].clone();
                let slope = complex_abs_f64(&diff) / rat_to_f64(&d);
                if slope > best {
                    best = slope;
                }
            }
        }
        best
    }
}

pub fn complex_abs_f64(z: &CRat) -> f64 {
    let re = rat_to_f64(&z.re);
    let im = rat_to_f64(&z.im);
    re.hypot(im)
}

fn max_abs(psi: &[CRat]) -> Rat {
    use num::Signed;
    let mut best = Rat::zero();
    for c in psi {
        best = best.max(c.re.abs()).max(c.im.abs());
    }
    best
}

/// Residuals of the even-triple axioms, exact in rational arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct EvenTripleReport {
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub dirac_symmetry: Rat,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub grading_involution: Rat,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub grading_anticommutes_dirac: Rat,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub grading_commutes_rep: Rat,
}

impl EvenTripleReport {
    pub fn all_zero(&self) -> bool {
        self.dirac_symmetry.is_zero()
            && self.grading_involution.is_zero()
            && self.grading_anticommutes_dirac.is_zero()
            && self.grading_commutes_rep.is_zero()
    }
}

/// Checks γ* = γ, γ² = 1, γD = -Dγ and γπ(f) = π(f)γ on the given sample
/// functions, and the symmetry of D, all exactly.
pub fn check_even_triple(st: &SpectralTriple, sample_fs: &[Vec<CRat>]) -> Result<EvenTripleReport> {
    let n = st.dim();
    // D symmetry from the entry list.
    let entries = st.dirac_entries();
    let mut map: HashMap<(usize, usize), Rat> = HashMap::new();
    for (i, j, v) in &entries {
        *map.entry((*i, *j)).or_insert_with(Rat::zero) += v;
    }
    let mut dirac_symmetry = Rat::zero();
    use num::Signed;
    for ((i, j), v) in &map {
        let vt = map.get(&(*j, *i)).cloned().unwrap_or_else(Rat::zero);
        dirac_symmetry = dirac_symmetry.max((v - vt).abs());
    }

    let mut grading_involution = Rat::zero();
    let mut grading_anticommutes_dirac = Rat::zero();
    let mut grading_commutes_rep = Rat::zero();
    for k in 0..n {
        let mut e = vec![CRat::zero(); n];
        e[k] = CRat::one();
        let gg = st.grading_apply(&st.grading_apply(&e)?)?;
        let mut diff = gg;
        diff[k] -= CRat::one();
        grading_involution = grading_involution.max(max_abs(&diff));

        let gd = st.grading_apply(&st.dirac_apply(&e)?)?;
        let dg = st.dirac_apply(&st.grading_apply(&e)?)?;
        let anti: Vec<CRat> = gd.iter().zip(&dg).map(|(a, b)| a.clone() + b).collect();
        grading_anticommutes_dirac = grading_anticommutes_dirac.max(max_abs(&anti));

        for f in sample_fs {
            let gp = st.grading_apply(&st.rep_apply(f, &e)?)?;
            let pg = st.rep_apply(f, &st.grading_apply(&e)?)?;
            let comm: Vec<CRat> = gp.iter().zip(&pg).map(|(a, b)| a.clone() - b).collect();
            grading_commutes_rep = grading_commutes_rep.max(max_abs(&comm));
        }
    }
    Ok(EvenTripleReport {
        dirac_symmetry,
        grading_involution,
        grading_anticommutes_dirac,
        grading_commutes_rep,
    })
}

/// A morphism of spectral triples along a leaf extension of trees: the
/// pullback of functions along the retraction plus the slot-wise isometry of
/// Hilbert spaces.
pub struct TripleMorphism<'a> {
    pub source: &'a SpectralTriple,
    pub target: &'a SpectralTriple,
    pub inclusion: TreeInclusion,
}

pub fn triple_morphism<'a>(
    source: &'a SpectralTriple,
    target: &'a SpectralTriple,
) -> Result<TripleMorphism<'a>> {
    let inclusion = crate::tree::tree_inclusion(source.tree(), target.tree())?;
    Ok(TripleMorphism {
        source,
        target,
        inclusion,
    })
}

impl TripleMorphism<'_> {
    /// The Hilbert-space isometry ι: slots map along the vertex injection.
    pub fn embed(&self, psi: &[CRat]) -> Result<Vec<CRat>> {
        self.source.check_dim(psi)?;
        let mut out = vec![CRat::zero(); self.target.dim()];
        for (i, slot) in self.source.basis().iter().enumerate() {
            let tv = self.inclusion.vertex_map[slot.vertex];
            let tw = self.inclusion.vertex_map[slot.neighbor];
            let j = self
                .target
                .slot(tv, tw, slot.spin)
                .expect("leaf extension preserves adjacency");
            out[j] = psi[i].clone();
        }
        Ok(out)
    }

    /// Pullback r*f of a source vertex function along the retraction.
    pub fn pullback(&self, f: &[CRat]) -> Vec<CRat> {
        self.inclusion
            .retraction_map
            .iter()
            .map(|&sv| f[sv].clone())
            .collect()
    }
}

/// Residuals of the morphism identities, exact in rational arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct MorphismReport {
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub intertwines_rep: Rat,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub intertwines_dirac: Rat,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub intertwines_grading: Rat,
}

impl MorphismReport {
    pub fn all_zero(&self) -> bool {
        self.intertwines_rep.is_zero()
            && self.intertwines_dirac.is_zero()
            && self.intertwines_grading.is_zero()
    }
}

/// Checks ι π₁(f) = π₂(r*f) ι, ι D₁ = D₂ ι and ι γ₁ = γ₂ ι on the given
/// vector, all exactly.
pub fn check_morphism(m: &TripleMorphism, f: &[CRat], psi: &[CRat]) -> Result<MorphismReport> {
    let lhs_rep = m.embed(&m.source.rep_apply(f, psi)?)?;
    let rhs_rep = m.target.rep_apply(&m.pullback(f), &m.embed(psi)?)?;
    let rep_diff: Vec<CRat> = lhs_rep
        .iter()
        .zip(&rhs_rep)
        .map(|(a, b)| a.clone() - b)
        .collect();

    let lhs_d = m.embed(&m.source.dirac_apply(psi)?)?;
    let rhs_d = m.target.dirac_apply(&m.embed(psi)?)?;
    let d_diff: Vec<CRat> = lhs_d.iter().zip(&rhs_d).map(|(a, b)| a.clone() - b).collect();

    let lhs_g = m.embed(&m.source.grading_apply(psi)?)?;
    let rhs_g = m.target.grading_apply(&m.embed(psi)?)?;
    let g_diff: Vec<CRat> = lhs_g.iter().zip(&rhs_g).map(|(a, b)| a.clone() - b).collect();

    Ok(MorphismReport {
        intertwines_rep: max_abs(&rep_diff),
        intertwines_dirac: max_abs(&d_diff),
        intertwines_grading: max_abs(&g_diff),
    })
}

/// Resolvent-norm profile of a tower: for each stage j, sup_{k>j}
/// 1/|‖D_k‖ - λ|. Diagnostic only: no convergence claim is attached.
pub fn tower_resolvent_profile(
    triples: &[SpectralTriple],
    lambda: Complex<f64>,
) -> Result<Vec<f64>> {
    if lambda.im == 0.0 {
        return Err(Error::RealLambda);
    }
    for pair in triples.windows(2) {
        // consecutive stages must be leaf extensions
        crate::tree::tree_inclusion(pair[0].tree(), pair[1].tree())?;
    }
    let norms: Vec<f64> = triples
        .iter()
        .map(|t| rat_to_f64(&t.operator_norm()))
        .collect();
    let mut profile = Vec::new();
    for j in 0..norms.len().saturating_sub(1) {
        let sup = norms[j + 1..]
            .iter()
            .map(|&n| 1.0 / (Complex::new(n, 0.0) - lambda).norm())
            .fold(0.0f64, f64::max);
        profile.push(sup);
    }
    Ok(profile)
}
