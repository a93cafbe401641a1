//! Computational kernel for the Berkovich projective line over C_p.
//!
//! The crate is organized in layers:
//!
//! - [`padic`]: exact p-adic valuation and magnitude arithmetic;
//! - [`berkline`]: disk points, joins, the small/big metrics, Gromov products;
//! - [`tree`]: finite graphs of discs, retractions and tree inclusions;
//! - [`spectral`]: the even spectral triple of a finite tree and its checks;
//! - [`dendrite`]: the symbolic dendrite model (comb systems, words, points);
//! - [`shiftops`]: truncated shift-operator representations on the dendrite;
//! - [`group`]: the Moebius action, Busemann cocycles, unitary covariance;
//! - [`schottky`]: orbit growth, Poincaré series, Patterson-Sullivan
//!   estimation, time evolution, KMS residuals and the Hamiltonian.

pub mod berkline;
pub mod dendrite;
pub mod error;
pub mod group;
pub mod padic;
pub mod schottky;
pub mod shiftops;
pub mod spectral;
pub mod tree;

pub use berkline::{BerkPoint, PointKind};
pub use error::{Error, Result};
pub use padic::{Exponent, Magnitude, PrimeContext, Rat};
