//! Model stratified CAT(0) spaces and their tangent cones.
//!
//! Each space comes with exact distances, geodesics, a stratification, log
//! and exponential maps, the angular metric on spaces of directions, the
//! angular pairing and the conical metric on tangent cones.

mod maps;
mod point;
mod space;
mod tangent;

pub(crate) use maps::distance_unchecked;
pub use maps::{distance, exp_map, geodesic_point, log_map};
pub(crate) use point::wrap_angle;
pub use point::{stratum_of, Coords, Point};
pub use space::{SpaceSpec, Stratum, StratumId};
pub use tangent::{
    angular_distance, angular_pairing, conical_distance, scale, Branch, Direction, DirectionKind, TangentVector,
};
pub(crate) use tangent::{angular_distance_same_base, chart_dim};
