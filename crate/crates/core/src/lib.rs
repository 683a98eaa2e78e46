//! Geometric statistics on stratified CAT(0) model spaces.
//!
//! The crate provides four concrete stratified spaces (Euclidean space,
//! the k-spider, the open book with k pages and the flat cone of angle at
//! least 2π) together with their tangent cones, and builds on top of them:
//!
//! * discrete measures, Fréchet functions and a certified Fréchet mean solver,
//! * tangent mean functions, tangent covariance kernels and the centered,
//!   empirical and Gaussian random tangent fields on finite direction nets,
//! * covering numbers of spaces of directions and modulus-of-continuity
//!   statistics,
//! * a seeded Monte Carlo harness that checks the central limit behaviour of
//!   empirical tangent fields, and a command-line front end.

pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod measures;
pub mod regularity;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{Direction, Point, SpaceSpec, TangentVector};
pub use measures::DiscreteMeasure;
