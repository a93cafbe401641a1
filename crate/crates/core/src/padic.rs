//! Exact p-adic valuations and absolute values on rational numbers.
//!
//! Magnitudes |x| = p^(-e) are never evaluated as floats inside the kernel;
//! they are carried as their exponent e, an extended rational, so that
//! products become exact exponent sums and ultrametric comparisons become
//! exact exponent comparisons.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// Builds a rational from an integer pair, panicking on zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Extended rational exponent e in Q ∪ {+∞}; +∞ encodes the valuation of 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rat),
    Infinity,
}

impl Exponent {
    pub fn finite(e: Rat) -> Self {
        Exponent::Finite(e)
    }

    pub fn zero() -> Self {
        Exponent::Finite(Rat::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            Exponent::Finite(e) => Some(e),
            Exponent::Infinity => None,
        }
    }

    /// Exponent addition; +∞ is absorbing.
    pub fn add(&self, other: &Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => Exponent::Finite(a + b),
            _ => Exponent::Infinity,
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Infinity, Exponent::Infinity) => Ordering::Equal,
            (Exponent::Infinity, Exponent::Finite(_)) => Ordering::Greater,
            (Exponent::Finite(_), Exponent::Infinity) => Ordering::Less,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{}", e),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// An exact p-power absolute value p^(-e), stored as the exponent e.
/// The exponent +∞ encodes the magnitude 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Magnitude {
    exponent: Exponent,
}

impl Magnitude {
    pub fn from_exponent(exponent: Exponent) -> Self {
        Magnitude { exponent }
    }

    pub fn from_rat_exponent(e: Rat) -> Self {
        Magnitude {
            exponent: Exponent::Finite(e),
        }
    }

    /// Magnitude 0 (exponent +∞).
    pub fn zero() -> Self {
        Magnitude {
            exponent: Exponent::Infinity,
        }
    }

    /// Magnitude 1 (exponent 0).
    pub fn one() -> Self {
        Magnitude {
            exponent: Exponent::zero(),
        }
    }

    pub fn exponent(&self) -> &Exponent {
        &self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.exponent == Exponent::Infinity
    }

    /// Product of magnitudes: exponents add.
    pub fn mul(&self, other: &Magnitude) -> Magnitude {
        Magnitude {
            exponent: self.exponent.add(&other.exponent),
        }
    }

    /// p^(-e) as an exact rational, available when e is an integer.
    pub fn as_rational(&self, p: u64) -> Option<Rat> {
        match &self.exponent {
            Exponent::Infinity => Some(Rat::zero()),
            Exponent::Finite(e) if e.is_integer() => {
                let k: i64 = e.to_integer().try_into().ok()?;
                let pow = BigInt::from(p).pow(k.unsigned_abs() as u32);
                Some(if k >= 0 {
                    Rat::new(BigInt::one(), pow)
                } else {
                    Rat::from(pow)
                })
            }
            Exponent::Finite(_) => None,
        }
    }

    /// p^(-e) as a float; used only on reporting paths.
    pub fn to_f64(&self, p: u64) -> f64 {
        match &self.exponent {
            Exponent::Infinity => 0.0,
            Exponent::Finite(e) => {
                let e = rat_to_f64(e);
                (p as f64).powf(-e)
            }
        }
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Magnitude {
    /// Larger magnitude means smaller exponent.
    fn cmp(&self, other: &Self) -> Ordering {
        other.exponent.cmp(&self.exponent)
    }
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    let num = x.numer();
    let den = x.denom();
    // Convert through strings only when the parts overflow i128.
    match (i128::try_from(num.clone()), i128::try_from(den.clone())) {
        (Ok(n), Ok(d)) => n as f64 / d as f64,
        _ => {
            let n: f64 = num.to_string().parse().unwrap_or(f64::NAN);
            let d: f64 = den.to_string().parse().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// The prime p of the ground field, with primality checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeContext {
    p: u64,
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(PrimeContext { p })
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// p-adic valuation v_p(x); +∞ for x = 0.
    pub fn valuation(&self, x: &Rat) -> Exponent {
        if x.is_zero() {
            return Exponent::Infinity;
        }
        let p = BigInt::from(self.p);
        let v = int_valuation(&p, x.numer()) - int_valuation(&p, x.denom());
        Exponent::Finite(Rat::from(BigInt::from(v)))
    }

    /// |x|_p = p^(-v_p(x)) as an exact magnitude.
    pub fn abs(&self, x: &Rat) -> Magnitude {
        Magnitude::from_exponent(self.valuation(x))
    }

    /// p^k as an exact rational, for integer k of either sign.
    pub fn power(&self, k: i64) -> Rat {
        let pow = BigInt::from(self.p).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            Rat::from(pow)
        } else {
            Rat::new(BigInt::one(), pow)
        }
    }
}

fn int_valuation(p: &BigInt, n: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let mut n = n.abs();
    let mut v = 0i64;
    loop {
        let (q, r) = num::Integer::div_rem(&n, p);
        if r.is_zero() {
            v += 1;
            n = q;
        } else {
            return v;
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}
