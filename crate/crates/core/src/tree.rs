//! Finite graphs of discs Γ_S inside the closed unit disk: vertex sets closed
//! under joins, edges along the segments [ζ_{a,r}, ζ_Gauss] with big-metric
//! lengths, the retraction onto a subtree, and tree inclusions.

use serde::Serialize;

use crate::berkline::{big_metric, join, leq, same_disk, BerkPoint};
use crate::error::{Error, Result};
use crate::padic::{PrimeContext, Rat};

#[derive(Debug, Clone, Serialize)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    #[serde(serialize_with = "crate::tree::ser_rat")]
    pub length: Rat,
}

pub(crate) fn ser_rat<S: serde::Serializer>(
    r: &Rat,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// A finite subtree of the Berkovich line: hyperbolic vertices containing the
/// Gauss point, closed under pairwise joins, with edges between
/// order-consecutive vertices.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteTree {
    p: u64,
    vertices: Vec<BerkPoint>,
    edges: Vec<TreeEdge>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
    #[serde(skip)]
    root: usize,
}

impl FiniteTree {
    pub fn ctx(&self) -> PrimeContext {
        PrimeContext::new(self.p).expect("prime validated at construction")
    }

    pub fn vertices(&self) -> &[BerkPoint] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Index of the Gauss point.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn find_vertex(&self, x: &BerkPoint) -> Option<usize> {
        let ctx = self.ctx();
        self.vertices.iter().position(|v| same_disk(&ctx, v, x))
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<&TreeEdge> {
        self.edges
            .iter()
            .find(|e| (e.u == u && e.v == v) || (e.u == v && e.v == u))
    }

    /// Retraction onto the tree: the first point where the path from `x`
    /// toward the tree meets it. Fixes tree points; the image may lie in the
    /// interior of an edge.
    pub fn retract(&self, x: &BerkPoint) -> Result<BerkPoint> {
        if !x.is_hyperbolic() {
            return Err(Error::TypeIPoint);
        }
        let ctx = self.ctx();
        // Points >= x form a chain, so the joins with all vertices are
        // totally ordered and the minimum is the entry point of the path
        // [x, Gauss] into the tree.
        let mut best: Option<BerkPoint> = None;
        for v in &self.vertices {
            let j = join(&ctx, x, v);
            best = Some(match best {
                None => j,
                Some(b) => {
                    if leq(&ctx, &j, &b) {
                        j
                    } else {
                        b
                    }
                }
            });
        }
        let m = best.expect("tree has at least the Gauss vertex");
        let gauss = BerkPoint::gauss();
        if leq(&ctx, &m, &gauss) {
            Ok(m)
        } else {
            // x sits outside the unit region; the path enters at the root
            Ok(gauss)
        }
    }
}

/// Builds the graph of discs over a finite set of disks contained in D(0,1).
/// The unit disk itself is not an admissible input.
pub fn build_graph_of_discs(ctx: &PrimeContext, disks: &[BerkPoint]) -> Result<FiniteTree> {
    if disks.is_empty() {
        return Err(Error::EmptyInput);
    }
    let gauss = BerkPoint::gauss();
    for d in disks {
        if !d.is_hyperbolic() {
            return Err(Error::TypeIPoint);
        }
        if !leq(ctx, d, &gauss) {
            return Err(Error::DiskOutsideUnit(d.to_string()));
        }
        if same_disk(ctx, d, &gauss) {
            return Err(Error::UnitDiskInput);
        }
    }

    let mut vertices: Vec<BerkPoint> = vec![gauss.clone()];
    let push_unique = |vs: &mut Vec<BerkPoint>, x: BerkPoint| {
        if !vs.iter().any(|v| same_disk(ctx, v, &x)) {
            vs.push(x);
        }
    };
    for d in disks {
        push_unique(&mut vertices, d.clone());
    }
    // Close under pairwise joins. One pass suffices for points below the
    // Gauss point, but iterate to a fixed point anyway.
    loop {
        let mut added = Vec::new();
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                let jv = join(ctx, &vertices[i], &vertices[j]);
                if !vertices.iter().any(|v| same_disk(ctx, v, &jv))
                    && !added.iter().any(|v| same_disk(ctx, v, &jv))
                {
                    added.push(jv);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        vertices.extend(added);
    }

    // Each non-root vertex is connected to its parent: the smallest vertex
    // strictly containing it. The vertices above a point form a chain, so
    // the parent is unique.
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (i, v) in vertices.iter().enumerate() {
        if same_disk(ctx, v, &gauss) {
            continue;
        }
        let mut parent: Option<usize> = None;
        for (k, w) in vertices.iter().enumerate() {
            if k == i || !leq(ctx, v, w) {
                continue;
            }
            parent = Some(match parent {
                None => k,
                Some(q) => {
                    if leq(ctx, w, &vertices[q]) {
                        k
                    } else {
                        q
                    }
                }
            });
        }
        let parent = parent.expect("every proper subdisk has the Gauss point above it");
        let length = big_metric(ctx, v, &vertices[parent])?;
        adjacency[i].push(parent);
        adjacency[parent].push(i);
        edges.push(TreeEdge {
            u: i,
            v: parent,
            length,
        });
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    let root = vertices
        .iter()
        .position(|v| same_disk(ctx, v, &gauss))
        .expect("Gauss vertex present");
    Ok(FiniteTree {
        p: ctx.prime(),
        vertices,
        edges,
        adjacency,
        root,
    })
}

/// An isometric inclusion of one graph of discs into a larger one.
///
/// Only leaf extensions are accepted: the target may attach new vertices and
/// edges but must not subdivide any source edge, otherwise the Dirac
/// intertwining identity fails.
#[derive(Debug)]
pub struct TreeInclusion {
    pub vertex_map: Vec<usize>,
    /// For each target vertex, the source vertex its retraction lands on.
    pub retraction_map: Vec<usize>,
}

pub fn tree_inclusion(source: &FiniteTree, target: &FiniteTree) -> Result<TreeInclusion> {
    let ctx = source.ctx();
    if target.ctx().prime() != ctx.prime() {
        return Err(Error::NotLeafExtension("different primes".into()));
    }
    let mut vertex_map = Vec::with_capacity(source.vertex_count());
    for v in source.vertices() {
        match target.find_vertex(v) {
            Some(k) => vertex_map.push(k),
            None => {
                return Err(Error::NotLeafExtension(format!(
                    "source vertex {v} is missing from the target"
                )))
            }
        }
    }
    // Every source edge must persist as a single target edge of equal length.
    for e in source.edges() {
        let tu = vertex_map[e.u];
        let tv = vertex_map[e.v];
        match target.edge_between(tu, tv) {
            Some(te) if te.length == e.length => {}
            _ => {
                return Err(Error::NotLeafExtension(format!(
                    "edge between {} and {} was subdivided",
                    source.vertices()[e.u],
                    source.vertices()[e.v]
                )))
            }
        }
    }
    // Retraction of each target vertex must land on a source vertex.
    let mut retraction_map = Vec::with_capacity(target.vertex_count());
    let source_points = source.vertices();
    for w in target.vertices() {
        let r = source.retract(w)?;
        match source_points.iter().position(|v| same_disk(&ctx, v, &r)) {
            Some(i) => retraction_map.push(i),
            None => {
                return Err(Error::NotLeafExtension(format!(
                    "target vertex {w} retracts into the interior of a source edge"
                )))
            }
        }
    }
    Ok(TreeInclusion {
        vertex_map,
        retraction_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;
    use num::{One, Zero};

    fn ctx(p: u64) -> PrimeContext {
        PrimeContext::new(p).unwrap()
    }

    fn disk(c: i64, d: i64, e: i64) -> BerkPoint {
        BerkPoint::type2(rat(c, d), rat(e, 1))
    }

    #[test]
    fn single_segment() {
        let c = ctx(3);
        let t = build_graph_of_discs(&c, &[disk(0, 1, 1)]).unwrap();
        assert_eq!(t.vertex_count(), 2);
        assert_eq!(t.edges().len(), 1);
        assert_eq!(t.edges()[0].length, Rat::one());
    }

    #[test]
    fn star_of_two_leaves() {
        let c = ctx(3);
        let t = build_graph_of_discs(&c, &[disk(0, 1, 1), disk(1, 1, 1)]).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.edges().len(), 2);
        assert!(t.edges().iter().all(|e| e.length == Rat::one()));
        assert_eq!(t.neighbors(t.root()).len(), 2);
    }

    #[test]
    fn nested_path() {
        let c = ctx(3);
        let t = build_graph_of_discs(&c, &[disk(0, 1, 1), disk(0, 1, 2)]).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.edges().len(), 2);
        let mut lengths: Vec<Rat> = t.edges().iter().map(|e| e.length.clone()).collect();
        lengths.sort();
        assert_eq!(lengths, vec![Rat::one(), Rat::one()]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = ctx(3);
        assert!(matches!(
            build_graph_of_discs(&c, &[]),
            Err(Error::EmptyInput)
        ));
        let outside = BerkPoint::type2(rat(1, 3), rat(1, 1));
        assert!(matches!(
            build_graph_of_discs(&c, &[outside]),
            Err(Error::DiskOutsideUnit(_))
        ));
        let gauss_like = BerkPoint::type2(Rat::one(), Rat::zero());
        assert!(matches!(
            build_graph_of_discs(&c, &[gauss_like]),
            Err(Error::UnitDiskInput)
        ));
    }

    #[test]
    fn retraction_examples() {
        let c = ctx(3);
        let t = build_graph_of_discs(&c, &[disk(0, 1, 1)]).unwrap();
        let deep = disk(0, 1, 2);
        let r = t.retract(&deep).unwrap();
        assert!(same_disk(&c, &r, &disk(0, 1, 1)));
        // fixes tree points
        for v in t.vertices() {
            assert!(same_disk(&c, &t.retract(v).unwrap(), v));
        }
        // a point on another branch retracts to the Gauss point
        let other = disk(1, 1, 1);
        assert!(same_disk(&c, &t.retract(&other).unwrap(), &BerkPoint::gauss()));
    }

    #[test]
    fn retraction_is_contraction_and_onto_edge_interiors() {
        let c = ctx(3);
        let t = build_graph_of_discs(&c, &[disk(0, 1, 2)]).unwrap();
        // center 3 lies in D(0, 1/3) but not D(0, 1/9): retraction lands
        // inside the edge
        let x = BerkPoint::type2(rat(3, 1), rat(3, 1));
        let r = t.retract(&x).unwrap();
        assert!(same_disk(&c, &r, &disk(0, 1, 1)));
        let pairs = [
            (disk(0, 1, 3), disk(1, 1, 2)),
            (disk(3, 1, 4), BerkPoint::gauss()),
            (disk(0, 1, 1), disk(0, 1, 5)),
        ];
        for (x, y) in pairs {
            let rx = t.retract(&x).unwrap();
            let ry = t.retract(&y).unwrap();
            let d_im = big_metric(&c, &rx, &ry).unwrap();
            let d = big_metric(&c, &x, &y).unwrap();
            assert!(d_im <= d);
        }
    }

    #[test]
    fn inclusion_accepts_leaf_extension() {
        let c = ctx(3);
        let small = build_graph_of_discs(&c, &[disk(0, 1, 1)]).unwrap();
        let large = build_graph_of_discs(&c, &[disk(0, 1, 1), disk(1, 1, 1)]).unwrap();
        let inc = tree_inclusion(&small, &large).unwrap();
        assert_eq!(inc.vertex_map.len(), 2);
        assert_eq!(inc.retraction_map.len(), 3);
    }

    #[test]
    fn inclusion_rejects_subdivision() {
        let c = ctx(3);
        let small = build_graph_of_discs(&c, &[disk(0, 1, 2)]).unwrap();
        // Adding D(0, 1/3) subdivides the single edge of `small`.
        let large = build_graph_of_discs(&c, &[disk(0, 1, 2), disk(0, 1, 1)]).unwrap();
        assert!(matches!(
            tree_inclusion(&small, &large),
            Err(Error::NotLeafExtension(_))
        ));
    }
}
