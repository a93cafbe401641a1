//! The Moebius action of PGL_2 on the Berkovich line: disk images, the
//! transitive action on type II points, Radon-Nikodym derivatives, unitary
//! covariance, Busemann cocycles and boundary cylinders.

use num::complex::Complex;
use num::{One, Signed, Zero};

use crate::berkline::{big_metric, join, leq, BerkPoint};
use crate::error::{Error, Result};
use crate::padic::{Magnitude, PrimeContext, Rat};

pub type C64 = Complex<f64>;

/// A projective 2x2 rational matrix acting as a linear fractional map.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap {
    a: Rat,
    b: Rat,
    c: Rat,
    d: Rat,
}

impl MoebiusMap {
    pub fn new(a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Self> {
        if (&a * &d - &b * &c).is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(MoebiusMap { a, b, c, d })
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: Rat::one(),
            b: Rat::zero(),
            c: Rat::zero(),
            d: Rat::one(),
        }
    }

    pub fn entries(&self) -> [&Rat; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn det(&self) -> Rat {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn compose(&self, rhs: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    /// The projective inverse (adjugate).
    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.c.is_zero()
    }

    /// Equality up to a scalar.
    pub fn projectively_eq(&self, other: &MoebiusMap) -> bool {
        let s = self.entries();
        let o = other.entries();
        for i in 0..4 {
            for j in (i + 1)..4 {
                if s[i] * o[j] != s[j] * o[i] {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        self.projectively_eq(&MoebiusMap::identity())
    }

    /// γ(ξ) on rational boundary points; the pole maps to infinity, which
    /// has no affine coordinate.
    pub fn apply_rational(&self, xi: &Rat) -> Result<Rat> {
        let den = &self.c * xi + &self.d;
        if den.is_zero() {
            return Err(Error::PoleAtBoundaryPoint(xi.to_string()));
        }
        Ok((&self.a * xi + &self.b) / den)
    }
}

/// Image of a point under the Moebius action. Total on type II/III points:
/// when the pole lies inside the disk, the image set is the complement of
/// an open disk and the image point is ζ_{γ(∞), |det|/(r |c|²)}; otherwise
/// the usual affine formula ζ_{γ(α), r |det| / |cα+d|²} applies. A type I
/// point maps type I, except the exact pole (its image would be infinity).
pub fn act_on_point(ctx: &PrimeContext, m: &MoebiusMap, x: &BerkPoint) -> Result<BerkPoint> {
    let alpha = x.center();
    if !x.is_hyperbolic() {
        return Ok(BerkPoint::type1(m.apply_rational(alpha)?));
    }
    let r_exp = x
        .kappa_exponent()
        .expect("hyperbolic points have finite radius exponents");
    let det_val = ctx.valuation(&m.det());
    let den = &m.c * alpha + &m.d;
    let den_val = ctx.valuation(&den);
    // pole outside the closed disk: |cα + d| > r |c|
    let pole_outside = match (den_val.as_rat(), ctx.valuation(&m.c).as_rat()) {
        (Some(dv), Some(cv)) => dv < &(&r_exp + cv),
        // c = 0: the pole is at infinity
        (Some(_), None) => true,
        (None, _) => false,
    };
    if pole_outside {
        let center = (&m.a * alpha + &m.b) / den;
        let dv = den_val.as_rat().unwrap();
        let e = &r_exp
            + (det_val
                .as_rat()
                .expect("determinant is nonzero")
                - dv * Rat::from_integer(2.into()));
        BerkPoint::from_parts(
            center,
            Magnitude::from_rat_exponent(e),
            x.is_irrational(),
        )
    } else {
        // pole inside: image is the complement of an open disk around γ(∞)
        let cv = ctx
            .valuation(&m.c)
            .as_rat()
            .expect("pole inside a disk forces c != 0")
            .clone();
        let center = &m.a / &m.c;
        let e = det_val.as_rat().expect("determinant is nonzero")
            - (&cv + &cv)
            - &r_exp;
        BerkPoint::from_parts(
            center,
            Magnitude::from_rat_exponent(e),
            x.is_irrational(),
        )
    }
}

/// The affine-chart restriction of the action: rejects inputs whose image
/// is not a disk in the affine chart.
pub fn act_on_point_affine(
    ctx: &PrimeContext,
    m: &MoebiusMap,
    x: &BerkPoint,
) -> Result<BerkPoint> {
    if x.is_hyperbolic() && !m.c.is_zero() {
        let r_exp = x.kappa_exponent()?;
        let den = &m.c * x.center() + &m.d;
        let dv = ctx.valuation(&den);
        let cv = ctx.valuation(&m.c);
        let outside = match (dv.as_rat(), cv.as_rat()) {
            (Some(dv), Some(cv)) => dv < &(&r_exp + cv),
            (Some(_), None) => true,
            (None, _) => false,
        };
        if !outside {
            return Err(Error::PoleInsideDisk(format!(" {x}")));
        }
    }
    act_on_point(ctx, m, x)
}

/// The upper-triangular map γ = [[p^e, a], [0, 1]] carrying the Gauss point
/// to ζ_{a, p^(-e)}; only integer radius exponents have an exact rational
/// realization.
pub fn gauss_to(ctx: &PrimeContext, a: &Rat, r_exp: &Rat) -> Result<MoebiusMap> {
    if !r_exp.is_integer() {
        return Err(Error::NonIntegralExponent(r_exp.to_string()));
    }
    let k: i64 = r_exp
        .to_integer()
        .try_into()
        .map_err(|_| Error::NonIntegralExponent(r_exp.to_string()))?;
    MoebiusMap::new(ctx.power(k), a.clone(), Rat::zero(), Rat::one())
}

/// |ρ(γx, γy) - ρ(x, y)|, exactly; the action is an isometry so this is a
/// zero-residual check.
pub fn isometry_residual(
    ctx: &PrimeContext,
    m: &MoebiusMap,
    x: &BerkPoint,
    y: &BerkPoint,
) -> Result<Rat> {
    let before = big_metric(ctx, x, y)?;
    let gx = act_on_point(ctx, m, x)?;
    let gy = act_on_point(ctx, m, y)?;
    let after = big_metric(ctx, &gx, &gy)?;
    Ok((after - before).abs())
}

/// Radon-Nikodym derivative δ(g) = diam(g·x)/diam(x) = |z| for the
/// upper-triangular g = [[z, a], [0, d]]; verified constant over sample
/// disks.
pub fn rn_derivative(ctx: &PrimeContext, m: &MoebiusMap) -> Result<Magnitude> {
    if !m.is_upper_triangular() {
        return Err(Error::NotUpperTriangular);
    }
    let scale = ctx.abs(&(&m.a / &m.d));
    for x in [
        BerkPoint::gauss(),
        BerkPoint::type2(Rat::zero(), Rat::one()),
        BerkPoint::type2(Rat::one(), Rat::from_integer(2.into())),
    ] {
        let gx = act_on_point(ctx, m, &x)?;
        debug_assert_eq!(gx.diam(), x.diam().mul(&scale));
        let _ = gx;
    }
    Ok(scale)
}

/// Busemann function B(ζ, γζ, ξ) based at the Gauss point: the stabilized
/// log_p of diam(γ⁻¹x)/diam(x) along x → ξ, with closed form
/// -v(det γ⁻¹) + 2 v(c ξ + d) for γ⁻¹ = [[a, b], [c, d]].
pub fn busemann(ctx: &PrimeContext, m: &MoebiusMap, xi: &Rat) -> Result<Rat> {
    let inv = m.inverse();
    let den = &inv.c * xi + &inv.d;
    if den.is_zero() {
        return Err(Error::PoleAtBoundaryPoint(xi.to_string()));
    }
    let det_v = ctx
        .valuation(&inv.det())
        .as_rat()
        .expect("invertible")
        .clone();
    let den_v = ctx.valuation(&den).as_rat().expect("nonzero").clone();
    let closed = -det_v + (&den_v + &den_v);

    // Cross-check against the diameter-ratio limit at two shrinking radii.
    // The ratio stabilizes once the disk around ξ excludes the pole of γ⁻¹;
    // the base radius indices 10 and 20 are pushed deeper in the rare case
    // of a nearby pole.
    let pole_gap = if inv.c.is_zero() {
        0i64
    } else {
        let cv = ctx.valuation(&inv.c).as_rat().unwrap().clone();
        let t = den_v - cv;
        t.ceil().to_integer().try_into().unwrap_or(0).max(0)
    };
    for base in [10i64, 20] {
        let k = base.max(pole_gap + base);
        let disk = BerkPoint::type2(xi.clone(), Rat::from_integer(k.into()));
        let image = act_on_point(ctx, &inv, &disk)?;
        let e_out = image.kappa_exponent()?;
        let ratio_log = Rat::from_integer(k.into()) - e_out;
        if ratio_log != closed {
            return Err(Error::PoleAtBoundaryPoint(format!(
                "diameter ratio did not stabilize at {xi}"
            )));
        }
    }
    Ok(closed)
}

/// Busemann cocycle based at the Gauss point, as a horocycle limit:
/// B(ζ, γζ, ξ) = lim_{x→ξ} ρ(ζ, x) - ρ(γζ, x). It differs from the
/// affine diameter-ratio cocycle by the coboundary of ξ ↦ 2 min(v(ξ), 0),
/// and the two agree on the closed unit disk. The boundary measure
/// transforms by this cocycle.
pub fn busemann_gauss(ctx: &PrimeContext, m: &MoebiusMap, xi: &Rat) -> Result<Rat> {
    let affine = busemann(ctx, m, xi)?;
    let pulled = m.inverse().apply_rational(xi)?;
    let vm = |x: &Rat| -> Rat {
        match ctx.valuation(x) {
            crate::padic::Exponent::Finite(v) => v.min(Rat::zero()),
            crate::padic::Exponent::Infinity => Rat::zero(),
        }
    };
    let two = Rat::one() + Rat::one();
    Ok(affine + two * (vm(&pulled) - vm(xi)))
}

/// j_γ(ξ) = p^{B(ζ, γζ, ξ)} as an exact magnitude, with the Gauss-based
/// cocycle.
pub fn j_factor(ctx: &PrimeContext, m: &MoebiusMap, xi: &Rat) -> Result<Magnitude> {
    let b = busemann_gauss(ctx, m, xi)?;
    Ok(Magnitude::from_rat_exponent(-b))
}

/// A direction cylinder at the Gauss point, named by a point w on the ray:
/// below the Gauss point it is the subtree under w, above it the region
/// past w toward infinity.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub gate: BerkPoint,
}

impl Cylinder {
    pub fn contains_boundary(&self, ctx: &PrimeContext, xi: &Rat) -> bool {
        self.contains(ctx, &BerkPoint::type1(xi.clone()))
    }

    /// Membership of a point: the ray from the Gauss point to x passes
    /// through the gate. For a gate above the Gauss point the ray must
    /// climb past it; otherwise the point must lie in the subtree under
    /// the gate.
    pub fn contains(&self, ctx: &PrimeContext, x: &BerkPoint) -> bool {
        let gauss = BerkPoint::gauss();
        if !leq(ctx, &self.gate, &gauss) && leq(ctx, &gauss, &self.gate) {
            leq(ctx, &self.gate, &join(ctx, x, &gauss))
        } else {
            leq(ctx, x, &self.gate)
        }
    }

    /// How specific the gate is: its distance from the Gauss point.
    pub fn depth(&self, ctx: &PrimeContext) -> Rat {
        big_metric(ctx, &self.gate, &BerkPoint::gauss()).expect("gates are hyperbolic")
    }
}

/// The point at distance `t` from the Gauss point along the path to
/// `target` (capped at the target itself).
pub fn point_along_path(ctx: &PrimeContext, target: &BerkPoint, t: &Rat) -> BerkPoint {
    let gauss = BerkPoint::gauss();
    let j = join(ctx, target, &gauss);
    let e_j = j.kappa_exponent().expect("joins of hyperbolic-or-type-I points with the Gauss point are hyperbolic");
    let d1 = -e_j.clone();
    if *t <= d1 {
        return BerkPoint::type2(Rat::zero(), -t.clone());
    }
    let descent = t - &d1;
    let e_target = match target.kappa_exponent() {
        Ok(e) => e,
        Err(_) => {
            // type I target: the ray continues all the way down
            return BerkPoint::type2(target.center().clone(), &e_j + descent);
        }
    };
    let e = (&e_j + descent).min(e_target);
    BerkPoint::type2(target.center().clone(), e)
}

/// The depth-`depth` cylinder label of the direction from the Gauss point
/// toward `target`.
pub fn cylinder_label(ctx: &PrimeContext, target: &BerkPoint, depth: &Rat) -> Cylinder {
    Cylinder {
        gate: point_along_path(ctx, target, depth),
    }
}

/// A cylinder together with a canonical rational representative boundary
/// point and a printable label.
#[derive(Debug, Clone)]
pub struct BoundaryCylinder {
    pub cylinder: Cylinder,
    pub rep: Rat,
    pub label: String,
}

impl BoundaryCylinder {
    pub fn new(ctx: &PrimeContext, cylinder: Cylinder) -> Result<Self> {
        let gauss = BerkPoint::gauss();
        let gate = &cylinder.gate;
        let rep = if !leq(ctx, gate, &gauss) && leq(ctx, &gauss, gate) {
            // region past ζ_{c, p^k} toward infinity: p^{-k} is inside
            let e = gate.kappa_exponent()?;
            if !e.is_integer() {
                return Err(Error::NonIntegralExponent(e.to_string()));
            }
            let k: i64 = e
                .to_integer()
                .try_into()
                .map_err(|_| Error::NonIntegralExponent(e.to_string()))?;
            ctx.power(k)
        } else {
            gate.center().clone()
        };
        debug_assert!(cylinder.contains_boundary(ctx, &rep));
        let label = format!("{gate}");
        Ok(BoundaryCylinder {
            cylinder,
            rep,
            label,
        })
    }
}

/// A finitely supported complex simple function over direction cylinders.
#[derive(Debug, Clone, Default)]
pub struct SimpleFn {
    pub terms: Vec<(Cylinder, C64)>,
}

impl SimpleFn {
    pub fn eval(&self, ctx: &PrimeContext, x: &BerkPoint) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (cyl, c) in &self.terms {
            if cyl.contains(ctx, x) {
                acc += c;
            }
        }
        acc
    }

    pub fn eval_boundary(&self, ctx: &PrimeContext, xi: &Rat) -> C64 {
        self.eval(ctx, &BerkPoint::type1(xi.clone()))
    }
}

/// Residual of the covariant condition U_s(g) π(a) U_s(g)* = π(a ∘ g) on
/// the given sample points, with U_s(g)h = e^{is} √δ(g) · h(g·x). The
/// scalar phase and the Radon-Nikodym factors cancel exactly; the residual
/// is float roundoff.
pub fn covariance_residual(
    ctx: &PrimeContext,
    g: &MoebiusMap,
    a: &SimpleFn,
    test: &SimpleFn,
    s: f64,
    sample: &[BerkPoint],
) -> Result<f64> {
    let delta = rn_derivative(ctx, g)?.to_f64(ctx.prime());
    let delta_inv = rn_derivative(ctx, &g.inverse())?.to_f64(ctx.prime());
    let phase = C64::new(0.0, s).exp();
    let ginv = g.inverse();
    let mut worst = 0.0f64;
    for x in sample {
        let gx = act_on_point(ctx, g, x)?;
        // (U_s(g) π(a) U_s(g)^{-1} test)(x), composed step by step
        let back = act_on_point(ctx, &ginv, &gx)?;
        let inner = phase.conj() * delta_inv.sqrt() * test.eval(ctx, &back);
        let lhs = phase * delta.sqrt() * a.eval(ctx, &gx) * inner;
        let rhs = a.eval(ctx, &gx) * test.eval(ctx, x);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berkline::same_disk;
    use crate::padic::rat;

    fn ctx(p: u64) -> PrimeContext {
        PrimeContext::new(p).unwrap()
    }

    fn map(a: i64, b: i64, c: i64, d: i64) -> MoebiusMap {
        MoebiusMap::new(rat(a, 1), rat(b, 1), rat(c, 1), rat(d, 1)).unwrap()
    }

    /// Smallest disk covering the images of sample rational points of the
    /// input disk; oracle for the affine branch of the action.
    fn image_disk_oracle(
        c: &PrimeContext,
        m: &MoebiusMap,
        center: &Rat,
        r_exp: i64,
    ) -> BerkPoint {
        let mut images = Vec::new();
        for t in -10i64..10 {
            if t == 0 {
                continue;
            }
            let s = center + rat(t, 1) * c.power(r_exp);
            if let Ok(img) = m.apply_rational(&s) {
                images.push(img);
            }
        }
        let base = m.apply_rational(center).unwrap();
        let mut disk = BerkPoint::type1(base.clone());
        for img in images {
            let pt = BerkPoint::type1(img);
            disk = join(c, &disk, &pt);
        }
        disk
    }

    #[test]
    fn act_examples() {
        let c = ctx(3);
        // scaling by p contracts the Gauss disk
        let m = map(3, 0, 0, 1);
        let img = act_on_point(&c, &m, &BerkPoint::gauss()).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::type2(Rat::zero(), Rat::one())));
        let oracle = image_disk_oracle(&c, &m, &Rat::zero(), 0);
        assert!(same_disk(&c, &img, &oracle));
        // identity fixes everything
        let x = BerkPoint::type2(rat(2, 1), rat(2, 1));
        assert_eq!(act_on_point(&c, &MoebiusMap::identity(), &x).unwrap(), x);
        // translation by 1 fixes the Gauss point as a disk
        let t = map(1, 1, 0, 1);
        let img = act_on_point(&c, &t, &BerkPoint::gauss()).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::gauss()));
        // type I points move pointwise
        let one = BerkPoint::type1(rat(1, 1));
        let img = act_on_point(&c, &m, &one).unwrap();
        assert_eq!(img, BerkPoint::type1(rat(3, 1)));
    }

    #[test]
    fn act_affine_oracle_on_nontrivial_map() {
        let c = ctx(5);
        // c != 0, pole at -1/2 with |pole| = 1, disk D(0, 1/5) avoids it
        let m = map(1, 3, 2, 1);
        let img = act_on_point_affine(&c, &m, &BerkPoint::type2(Rat::zero(), Rat::one())).unwrap();
        let oracle = image_disk_oracle(&c, &m, &Rat::zero(), 1);
        assert!(same_disk(&c, &img, &oracle));
    }

    #[test]
    fn act_complement_branch() {
        let c = ctx(5);
        // inversion: pole 0 lies inside the Gauss disk, which is fixed
        let inv = map(0, 1, 1, 0);
        let img = act_on_point(&c, &inv, &BerkPoint::gauss()).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::gauss()));
        // and D(0, 5) inverts to D(0, 1/5)
        let big = BerkPoint::type2(Rat::zero(), rat(-1, 1));
        let img = act_on_point(&c, &inv, &big).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::type2(Rat::zero(), Rat::one())));
        // the affine-chart restriction rejects these inputs
        assert!(matches!(
            act_on_point_affine(&c, &inv, &BerkPoint::gauss()),
            Err(Error::PoleInsideDisk(_))
        ));
        // the action remains an isometry across the chart boundary
        let x = BerkPoint::type2(rat(1, 1), rat(2, 1));
        let y = BerkPoint::type2(rat(3, 1), rat(1, 1));
        assert_eq!(isometry_residual(&c, &inv, &x, &y).unwrap(), Rat::zero());
    }

    #[test]
    fn gauss_to_examples() {
        let c = ctx(3);
        let m = gauss_to(&c, &rat(2, 1), &rat(3, 1)).unwrap();
        assert_eq!(m.entries()[0], &rat(27, 1));
        let img = act_on_point(&c, &m, &BerkPoint::gauss()).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::type2(rat(2, 1), rat(3, 1))));
        let id = gauss_to(&c, &Rat::zero(), &Rat::zero()).unwrap();
        assert!(id.is_identity());
        let half = gauss_to(&c, &rat(1, 2), &Rat::one()).unwrap();
        let img = act_on_point(&c, &half, &BerkPoint::gauss()).unwrap();
        assert!(same_disk(&c, &img, &BerkPoint::type2(rat(1, 2), Rat::one())));
        assert!(matches!(
            gauss_to(&c, &Rat::zero(), &rat(1, 2)),
            Err(Error::NonIntegralExponent(_))
        ));
    }

    #[test]
    fn isometry_examples() {
        let c = ctx(3);
        let pairs = [
            (BerkPoint::gauss(), BerkPoint::type2(Rat::zero(), Rat::one())),
            (
                BerkPoint::type2(rat(1, 1), rat(2, 1)),
                BerkPoint::type2(rat(5, 1), rat(1, 1)),
            ),
        ];
        let maps = [
            MoebiusMap::identity(),
            map(3, 0, 0, 1),
            map(1, 7, 0, 1),
            map(2, 1, 0, 3),
        ];
        for m in &maps {
            for (x, y) in &pairs {
                assert_eq!(isometry_residual(&c, m, x, y).unwrap(), Rat::zero());
            }
        }
        // equivariance of joins on pole-free configurations
        let m = map(3, 2, 0, 1);
        let (x, y) = &pairs[1];
        let gx = act_on_point(&c, &m, x).unwrap();
        let gy = act_on_point(&c, &m, y).unwrap();
        let gj = act_on_point(&c, &m, &join(&c, x, y)).unwrap();
        assert!(same_disk(&c, &join(&c, &gx, &gy), &gj));
    }

    #[test]
    fn action_composes() {
        let c = ctx(3);
        let maps = [
            map(3, 0, 0, 1),
            map(1, 1, 0, 1),
            map(0, 1, 1, 0),
            map(5, -4, 2, -1),
            map(2, 1, 1, 3),
        ];
        let points = [
            BerkPoint::gauss(),
            BerkPoint::type2(Rat::zero(), Rat::one()),
            BerkPoint::type2(rat(1, 1), rat(2, 1)),
            BerkPoint::type2(rat(1, 2), rat(-2, 1)),
            BerkPoint::type1(rat(7, 1)),
        ];
        for m1 in &maps {
            for m2 in &maps {
                for x in &points {
                    let inner = match act_on_point(&c, m2, x) {
                        Ok(y) => y,
                        Err(_) => continue,
                    };
                    let stepwise = match act_on_point(&c, m1, &inner) {
                        Ok(y) => y,
                        Err(_) => continue,
                    };
                    let direct = act_on_point(&c, &m1.compose(m2), x).unwrap();
                    assert!(
                        same_disk(&c, &stepwise, &direct)
                            || (!stepwise.is_hyperbolic() && stepwise == direct),
                        "composition mismatch: {m1:?} {m2:?} {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn rn_derivative_examples() {
        let c = ctx(3);
        assert_eq!(
            rn_derivative(&c, &map(3, 3, 0, 1)).unwrap(),
            Magnitude::from_rat_exponent(Rat::one())
        );
        assert_eq!(
            rn_derivative(&c, &MoebiusMap::identity()).unwrap(),
            Magnitude::one()
        );
        let m = MoebiusMap::new(rat(1, 3), Rat::zero(), Rat::zero(), Rat::one()).unwrap();
        assert_eq!(
            rn_derivative(&c, &m).unwrap(),
            Magnitude::from_rat_exponent(rat(-1, 1))
        );
        assert_eq!(
            rn_derivative(&c, &map(0, 1, 1, 0)),
            Err(Error::NotUpperTriangular)
        );
    }

    #[test]
    fn busemann_examples() {
        let c = ctx(3);
        let m = map(3, 0, 0, 1);
        assert_eq!(busemann(&c, &m, &Rat::zero()).unwrap(), Rat::one());
        assert_eq!(
            busemann(&c, &MoebiusMap::identity(), &rat(5, 7)).unwrap(),
            Rat::zero()
        );
        // cocycle: B(g1 g2, ξ) = B(g1, ξ) + B(g2, g1⁻¹ ξ)
        let g1 = map(3, 1, 0, 1);
        let g2 = map(1, 0, 2, 3);
        for xi in [rat(0, 1), rat(1, 1), rat(5, 3), rat(-2, 7)] {
            let lhs = busemann(&c, &g1.compose(&g2), &xi).unwrap();
            let pulled = g1.inverse().apply_rational(&xi).unwrap();
            let rhs = busemann(&c, &g1, &xi).unwrap() + busemann(&c, &g2, &pulled).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn j_factor_examples() {
        let c = ctx(3);
        let m = map(3, 0, 0, 1);
        // j = p^B = 3^1, i.e. exponent -1
        assert_eq!(
            j_factor(&c, &m, &Rat::zero()).unwrap(),
            Magnitude::from_rat_exponent(rat(-1, 1))
        );
        assert_eq!(
            j_factor(&c, &MoebiusMap::identity(), &rat(4, 1)).unwrap(),
            Magnitude::one()
        );
        // cocycle inverse: j_{γ⁻¹}(γ⁻¹ξ) · j_γ(ξ) = 1
        let g = map(2, 1, 0, 3);
        let xi = rat(5, 1);
        let pulled = g.inverse().apply_rational(&xi).unwrap();
        let prod = j_factor(&c, &g.inverse(), &pulled)
            .unwrap()
            .mul(&j_factor(&c, &g, &xi).unwrap());
        assert_eq!(prod, Magnitude::one());
    }

    #[test]
    fn cylinder_membership() {
        let c = ctx(3);
        // downward cylinder at D(0, 1/3)
        let down = Cylinder {
            gate: BerkPoint::type2(Rat::zero(), Rat::one()),
        };
        assert!(down.contains_boundary(&c, &rat(3, 1)));
        assert!(!down.contains_boundary(&c, &rat(1, 1)));
        assert!(down.contains(&c, &BerkPoint::type2(Rat::zero(), rat(2, 1))));
        assert!(!down.contains(&c, &BerkPoint::gauss()));
        // upward cylinder past D(0, 3): membership means |ξ| >= 3
        let up = Cylinder {
            gate: BerkPoint::type2(Rat::zero(), rat(-1, 1)),
        };
        assert!(up.contains_boundary(&c, &rat(1, 9)));
        assert!(up.contains_boundary(&c, &rat(1, 3)));
        assert!(!up.contains_boundary(&c, &rat(1, 1)));
        assert!(!up.contains_boundary(&c, &rat(9, 1)));
        // sideways gate: a disk neither above nor below the Gauss point
        let side = Cylinder {
            gate: BerkPoint::type2(rat(1, 3), Rat::zero()),
        };
        assert!(side.contains_boundary(&c, &rat(1, 3)));
        assert!(side.contains_boundary(&c, &rat(4, 3)));
        assert!(!side.contains_boundary(&c, &rat(2, 3)));
        assert!(!side.contains_boundary(&c, &rat(0, 1)));
    }

    #[test]
    fn path_points_and_labels() {
        let c = ctx(3);
        let target = BerkPoint::type2(rat(1, 1), rat(4, 1));
        // distance 2 along the path toward a depth-4 disk below residue 1
        let w = point_along_path(&c, &target, &rat(2, 1));
        assert!(same_disk(&c, &w, &BerkPoint::type2(rat(1, 1), rat(2, 1))));
        // the label caps at the target
        let w = point_along_path(&c, &target, &rat(9, 1));
        assert!(same_disk(&c, &w, &target));
        // targets past the unit disk route through the upward ray
        let outer = BerkPoint::type2(Rat::zero(), rat(-3, 1));
        let w = point_along_path(&c, &outer, &rat(1, 1));
        assert!(same_disk(&c, &w, &BerkPoint::type2(Rat::zero(), rat(-1, 1))));
        // type I targets give arbitrarily deep labels
        let xi = BerkPoint::type1(rat(2, 1));
        let w = cylinder_label(&c, &xi, &rat(2, 1));
        assert!(same_disk(&c, &w.gate, &BerkPoint::type2(rat(2, 1), rat(2, 1))));
    }

    #[test]
    fn covariance_examples() {
        let c = ctx(3);
        let g = map(3, 1, 0, 1);
        // sample stays inside the unit subtree, where the gate at the Gauss
        // point makes `one` genuinely constant
        let sample = vec![
            BerkPoint::gauss(),
            BerkPoint::type2(Rat::zero(), Rat::one()),
            BerkPoint::type2(rat(1, 1), rat(2, 1)),
            BerkPoint::type2(rat(4, 1), rat(3, 1)),
        ];
        let one = SimpleFn {
            terms: vec![(
                Cylinder {
                    gate: BerkPoint::gauss(),
                },
                C64::new(1.0, 0.0),
            )],
        };
        let a = SimpleFn {
            terms: vec![(
                Cylinder {
                    gate: BerkPoint::type2(rat(1, 1), Rat::one()),
                },
                C64::new(2.0, -1.0),
            )],
        };
        let test = SimpleFn {
            terms: vec![
                (
                    Cylinder {
                        gate: BerkPoint::type2(rat(1, 1), Rat::one()),
                    },
                    C64::new(0.5, 0.25),
                ),
                (
                    Cylinder {
                        gate: BerkPoint::type2(Rat::zero(), rat(-5, 1)),
                    },
                    C64::new(1.0, 0.0),
                ),
            ],
        };
        for s in [0.0, 0.7, 2.3] {
            let r = covariance_residual(&c, &g, &one, &test, s, &sample).unwrap();
            assert!(r < 1e-12, "constant residual {r}");
            let r = covariance_residual(&c, &g, &a, &test, s, &sample).unwrap();
            assert!(r < 1e-12, "cylinder residual {r} at s={s}");
        }
    }
}
