use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Error, Result};

/// One of the four model stratified CAT(0) spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawSpace")]
pub enum SpaceSpec {
    /// Flat space `R^dim`.
    Euclidean { dim: usize },
    /// `legs` half-lines glued at a common apex.
    Spider { legs: usize },
    /// `pages` closed half-planes glued along a common line (the spine).
    OpenBook { pages: usize },
    /// Euclidean cone over a circle of length `circumference`.
    FlatCone { circumference: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawSpace {
    Euclidean { dim: usize },
    Spider { legs: usize },
    OpenBook { pages: usize },
    FlatCone { circumference: f64 },
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        match raw {
            RawSpace::Euclidean { dim } => SpaceSpec::euclidean(dim),
            RawSpace::Spider { legs } => SpaceSpec::spider(legs),
            RawSpace::OpenBook { pages } => SpaceSpec::open_book(pages),
            RawSpace::FlatCone { circumference } => SpaceSpec::flat_cone(circumference),
        }
    }
}

impl SpaceSpec {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("euclidean dimension must be at least 1");
        }
        Ok(SpaceSpec::Euclidean { dim })
    }

    pub fn spider(legs: usize) -> Result<Self> {
        if legs < 3 {
            return invalid(format!("a spider needs at least 3 legs, got {legs}"));
        }
        Ok(SpaceSpec::Spider { legs })
    }

    pub fn open_book(pages: usize) -> Result<Self> {
        if pages < 2 {
            return invalid(format!("an open book needs at least 2 pages, got {pages}"));
        }
        Ok(SpaceSpec::OpenBook { pages })
    }

    /// Flat cone; the circumference must be at least 2π for the cone to be CAT(0).
    pub fn flat_cone(circumference: f64) -> Result<Self> {
        if !circumference.is_finite() || circumference < 2.0 * PI {
            return invalid(format!("flat cone circumference must be finite and at least 2π, got {circumference}"));
        }
        Ok(SpaceSpec::FlatCone { circumference })
    }

    /// Dimension of the top stratum.
    pub fn top_dim(&self) -> usize {
        match *self {
            SpaceSpec::Euclidean { dim } => dim,
            SpaceSpec::Spider { .. } => 1,
            SpaceSpec::OpenBook { .. } | SpaceSpec::FlatCone { .. } => 2,
        }
    }

    /// The named strata of the decomposition, lowest dimension first.
    pub fn strata(&self) -> Vec<Stratum> {
        match *self {
            SpaceSpec::Euclidean { dim } => vec![Stratum { id: StratumId::Whole, dim }],
            SpaceSpec::Spider { legs } => std::iter::once(Stratum { id: StratumId::Apex, dim: 0 })
                .chain((0..legs).map(|l| Stratum { id: StratumId::Leg(l), dim: 1 }))
                .collect(),
            SpaceSpec::OpenBook { pages } => std::iter::once(Stratum { id: StratumId::Spine, dim: 1 })
                .chain((0..pages).map(|p| Stratum { id: StratumId::Page(p), dim: 2 }))
                .collect(),
            SpaceSpec::FlatCone { .. } => {
                vec![Stratum { id: StratumId::Apex, dim: 0 }, Stratum { id: StratumId::Punctured, dim: 2 }]
            }
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpaceSpec::Euclidean { dim } => write!(f, "Euclidean({dim})"),
            SpaceSpec::Spider { legs } => write!(f, "Spider({legs})"),
            SpaceSpec::OpenBook { pages } => write!(f, "OpenBook({pages})"),
            SpaceSpec::FlatCone { circumference } => write!(f, "FlatCone({circumference})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumId {
    Whole,
    Apex,
    Leg(usize),
    Spine,
    Page(usize),
    Punctured,
}

/// A stratum together with its manifold dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stratum {
    pub id: StratumId,
    pub dim: usize,
}
