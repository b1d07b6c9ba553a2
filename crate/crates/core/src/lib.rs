//! Hyperbolic geometry of the unit disc and the unit ball, Bloch-type
//! certifiers for subsets of the ball, and holomorphic iterated function
//! systems.
//!
//! * [`disc`]: Poincaré distance and metric, disc automorphisms, hyperbolic
//!   discs, horodiscs and planar regions with closed-form densities.
//! * [`ball`]: Kobayashi distance and metric of `𝔹ⁿ`, automorphisms, complex
//!   geodesics and Lempert projection devices, horospheres.
//! * [`blochness`]: Bloch radius and hyperbolic Lipschitz estimators, the
//!   sandwich check and the 1-Bloch / c-Bloch certifiers.
//! * [`ifs`]: map catalogue, composition runs, contraction checks and the
//!   geodesic reduction of a ball IFS to a disc IFS.
//! * [`scenarios`]: reproducible end-to-end experiments.
//! * [`cli`]: command-line front end and report writers.

pub mod ball;
pub mod cli;
pub mod blochness;
pub mod disc;
pub mod error;
pub mod ifs;
pub mod point;
pub mod sampling;
pub mod scenarios;

pub use error::{GeoError, Result};
pub use point::Point;
