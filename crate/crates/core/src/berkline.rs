//! Points of the Berkovich affine/projective line over C_p in the closed
//! disk model: partial order, join, diameter, the small and big metrics,
//! and the Gromov product on the hyperbolic part.

use std::fmt;

use num::{One, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::padic::{rat_to_f64, Exponent, Magnitude, PrimeContext, Rat};

/// Point classification following Berkovich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointKind {
    I,
    II,
    III,
}

/// A type I/II/III point ζ_{a,r}: the closed disk D(a, r) with r = p^(-e).
///
/// Type III radii carry a rational exponent plus an `irrational` flag; the
/// metric code paths treat flagged and unflagged radii identically, only the
/// classification differs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BerkPoint {
    center: Rat,
    radius: Magnitude,
    irrational: bool,
}

impl BerkPoint {
    /// Type I point ζ_{a,0}.
    pub fn type1(center: Rat) -> Self {
        BerkPoint {
            center,
            radius: Magnitude::zero(),
            irrational: false,
        }
    }

    /// Type II point ζ_{a,p^(-e)} with rational exponent e.
    pub fn type2(center: Rat, radius_exp: Rat) -> Self {
        BerkPoint {
            center,
            radius: Magnitude::from_rat_exponent(radius_exp),
            irrational: false,
        }
    }

    /// Type III point: radius exponent flagged as irrational.
    pub fn type3(center: Rat, radius_exp: Rat) -> Self {
        BerkPoint {
            center,
            radius: Magnitude::from_rat_exponent(radius_exp),
            irrational: true,
        }
    }

    pub fn from_parts(center: Rat, radius: Magnitude, irrational: bool) -> Result<Self> {
        if irrational && radius.is_zero() {
            return Err(Error::InconsistentTail(
                "irrational flag on a zero radius".into(),
            ));
        }
        Ok(BerkPoint {
            center,
            radius,
            irrational,
        })
    }

    /// The Gauss point ζ_{0,1}.
    pub fn gauss() -> Self {
        BerkPoint::type2(Rat::zero(), Rat::zero())
    }

    pub fn center(&self) -> &Rat {
        &self.center
    }

    /// Radius as a magnitude p^(-e); this is also the diameter of the point.
    pub fn diam(&self) -> Magnitude {
        self.radius.clone()
    }

    pub fn radius_exponent(&self) -> &Exponent {
        self.radius.exponent()
    }

    pub fn is_irrational(&self) -> bool {
        self.irrational
    }

    pub fn kind(&self) -> PointKind {
        if self.radius.is_zero() {
            PointKind::I
        } else if self.irrational {
            PointKind::III
        } else {
            PointKind::II
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind() != PointKind::I
    }

    /// -log_p(diam): the radius exponent of a hyperbolic point.
    pub fn kappa_exponent(&self) -> Result<Rat> {
        match self.radius.exponent() {
            Exponent::Finite(e) => Ok(e.clone()),
            Exponent::Infinity => Err(Error::TypeIPoint),
        }
    }
}

impl fmt::Display for BerkPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "zeta({}; e={}", self.center, self.radius.exponent())?;
        if self.irrational {
            write!(f, "~")?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct BerkPointWire {
    center: String,
    radius_exp: String,
    irrational: bool,
}

impl Serialize for BerkPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = BerkPointWire {
            center: self.center.to_string(),
            radius_exp: self.radius.exponent().to_string(),
            irrational: self.irrational,
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BerkPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = BerkPointWire::deserialize(deserializer)?;
        let center: Rat = wire
            .center
            .parse()
            .map_err(|e| D::Error::custom(format!("bad center: {e}")))?;
        let radius = if wire.radius_exp == "inf" {
            Magnitude::zero()
        } else {
            let e: Rat = wire
                .radius_exp
                .parse()
                .map_err(|e| D::Error::custom(format!("bad radius exponent: {e}")))?;
            Magnitude::from_rat_exponent(e)
        };
        BerkPoint::from_parts(center, radius, wire.irrational).map_err(D::Error::custom)
    }
}

/// Disk equality: |a - a'| <= r and r = r', tested exactly.
pub fn same_disk(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint) -> bool {
    if x.radius != y.radius || x.irrational != y.irrational {
        return false;
    }
    ctx.abs(&(&x.center - &y.center)) <= x.radius
}

/// Partial order: x <= y iff disk(x) ⊆ disk(y).
pub fn leq(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint) -> bool {
    x.radius <= y.radius && ctx.abs(&(&x.center - &y.center)) <= y.radius
}

/// Least upper bound ξ ∨ ξ': the smallest disk containing both inputs.
pub fn join(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint) -> BerkPoint {
    let sep = ctx.abs(&(&x.center - &y.center));
    let radius = x.radius.clone().max(y.radius.clone()).max(sep.clone());
    // The join is a type III point only when every radius achieving the
    // maximum is itself flagged irrational; center separations are exact
    // p-powers, hence rational.
    let mut irrational = true;
    if !sep.is_zero() || !x.radius.is_zero() || !y.radius.is_zero() {
        if sep == radius {
            irrational = false;
        }
        if x.radius == radius && !x.irrational {
            irrational = false;
        }
        if y.radius == radius && !y.irrational {
            irrational = false;
        }
    } else {
        // join of a type I point with itself
        irrational = false;
    }
    BerkPoint {
        center: x.center.clone(),
        radius,
        irrational,
    }
}

/// Small-metric value: exact when all radius exponents are integers,
/// otherwise a float compared at 1e-12 tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum SmallDist {
    Exact(Rat),
    Approx(f64),
}

impl SmallDist {
    pub fn to_f64(&self) -> f64 {
        match self {
            SmallDist::Exact(r) => rat_to_f64(r),
            SmallDist::Approx(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SmallDist::Exact(_))
    }
}

fn magnitude_integral(m: &Magnitude) -> bool {
    match m.exponent() {
        Exponent::Infinity => true,
        Exponent::Finite(e) => e.is_integer(),
    }
}

/// Small metric d(x, y) = 2 diam(x∨y) - diam(x) - diam(y).
pub fn small_metric(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint) -> SmallDist {
    let j = join(ctx, x, y);
    let dj = j.diam();
    let dx = x.diam();
    let dy = y.diam();
    let p = ctx.prime();
    if magnitude_integral(&dj) && magnitude_integral(&dx) && magnitude_integral(&dy) {
        let two = Rat::one() + Rat::one();
        let v = two * dj.as_rational(p).unwrap()
            - dx.as_rational(p).unwrap()
            - dy.as_rational(p).unwrap();
        SmallDist::Exact(v)
    } else {
        SmallDist::Approx(2.0 * dj.to_f64(p) - dx.to_f64(p) - dy.to_f64(p))
    }
}

/// Big metric ρ(x, y) = e_x + e_y - 2 e_{x∨y} (log base p), defined on
/// hyperbolic points only.
pub fn big_metric(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint) -> Result<Rat> {
    let ex = x.kappa_exponent()?;
    let ey = y.kappa_exponent()?;
    let ej = join(ctx, x, y).kappa_exponent()?;
    let two = Rat::one() + Rat::one();
    Ok(ex + ey - two * ej)
}

/// The median of the tripod on {x, y, z}: the unique point lying on all
/// three pairwise paths; equals the smallest of the three pairwise joins.
pub fn median(ctx: &PrimeContext, x: &BerkPoint, y: &BerkPoint, z: &BerkPoint) -> BerkPoint {
    let jxy = join(ctx, x, y);
    let jxz = join(ctx, x, z);
    let jyz = join(ctx, y, z);
    let mut m = jxy;
    if leq(ctx, &jxz, &m) {
        m = jxz;
    }
    if leq(ctx, &jyz, &m) {
        m = jyz;
    }
    m
}

/// Gromov product (x|y)_z = (ρ(x,z) + ρ(y,z) - ρ(x,y)) / 2.
pub fn gromov_product(
    ctx: &PrimeContext,
    x: &BerkPoint,
    y: &BerkPoint,
    base: &BerkPoint,
) -> Result<Rat> {
    let a = big_metric(ctx, x, base)?;
    let b = big_metric(ctx, y, base)?;
    let c = big_metric(ctx, x, y)?;
    let two = Rat::one() + Rat::one();
    Ok((a + b - c) / two)
}

/// Potential kernel at the Gauss point: κ_G(x,x) = -log_p diam(x) = e_x.
pub fn kappa_gauss(x: &BerkPoint) -> Result<Rat> {
    x.kappa_exponent()
}
