//! Spectral analysis of weighted-shift symbol families attached to
//! Morse–Smale diffeomorphisms of closed surfaces.
//!
//! Operators of the form `D = Σ_k D_k T^k`, where `T` is the composition
//! operator of a surface diffeomorphism `g` and the `D_k` are order-zero
//! pseudodifferential coefficients, act on the Sobolev scale through a
//! family of banded difference operators on exponentially weighted sequence
//! spaces attached to the orbits of `g`. This crate computes the pieces of
//! that picture that admit a desk-scale numerical treatment:
//!
//! * [`geometry`] — the built-in surfaces (flat torus, round sphere) as
//!   chart atlases with cometric, measure and chart transport;
//! * [`dynamics`] — diffeomorphism strategies (closed-form maps, time-one
//!   gradient-flow maps), fixed-point finding and classification, periodic
//!   scans, orbit limits and matrix cocycles;
//! * [`weights`] — the Sobolev weight sequence along an orbit, fitted and
//!   predicted exponential rates, and the exceptional invariant directions;
//! * [`laurent`] — constant-coefficient theory: Laurent polynomial roots,
//!   the annulus criterion, and the exact set of exponents `s` at which a
//!   constant-coefficient operator is invertible;
//! * [`symbol`] — variable-coefficient symbols, finite sections on weighted
//!   spaces, smallest singular values, limit-operator checks and the
//!   ellipticity probe over a grid of exponents;
//! * [`expr`] — the arithmetic expression language used to define maps,
//!   Morse functions and symbol coefficients in configuration files;
//! * [`registry`] / [`config`] — named strategy registries and the JSON
//!   configuration schema that selects them at runtime;
//! * [`report`] — CSV/JSON writers shared by the command-line front end.

pub mod config;
pub mod dynamics;
pub mod expr;
pub mod geometry;
pub mod laurent;
pub mod registry;
pub mod report;
pub mod symbol;
pub mod weights;

pub use config::Config;
pub use dynamics::{Diffeo, Direction, FixedPointRecord};
pub use geometry::{Covector, Surface, SurfacePoint};
pub use laurent::{LaurentPolynomial, SIntervalSet};
pub use registry::Registry;
pub use symbol::OperatorSpec;
pub use weights::WeightConvention;
