use std::fmt;

use super::space::{SpaceSpec, Stratum, StratumId};
use crate::error::{invalid, Result};

/// Coordinates of a point, interpreted relative to its space.
///
/// * Euclidean: the vector itself.
/// * Spider: leg index and distance to the apex.
/// * Open book: page index, position `s` along the spine and height `t ≥ 0`
///   above it.
/// * Flat cone: distance `r` to the apex and circle coordinate `phi ∈ [0, α)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Coords {
    Euclidean(Vec<f64>),
    Spider { leg: usize, r: f64 },
    OpenBook { page: usize, s: f64, t: f64 },
    FlatCone { r: f64, phi: f64 },
}

/// A point of a model space, stored in canonical form.
///
/// Points on a gluing locus have a single representative: the spider apex
/// sits on leg 0, spine points on page 0 and the cone apex at `phi = 0`, so
/// equality of points is plain equality of coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    space: SpaceSpec,
    coords: Coords,
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        invalid(format!("{what} must be finite, got {x}"))
    }
}

/// Reduce an angle into `[0, period)`.
pub(crate) fn wrap_angle(phi: f64, period: f64) -> f64 {
    let w = phi.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

impl Point {
    /// Validate and canonicalize.
    pub fn new(space: SpaceSpec, coords: Coords) -> Result<Self> {
        let coords = match (space, coords) {
            (SpaceSpec::Euclidean { dim }, Coords::Euclidean(x)) => {
                if x.len() != dim {
                    return invalid(format!("expected {dim} euclidean coordinates, got {}", x.len()));
                }
                for &xi in &x {
                    finite(xi, "coordinate")?;
                }
                Coords::Euclidean(x)
            }
            (SpaceSpec::Spider { legs }, Coords::Spider { leg, r }) => {
                let r = finite(r, "spider radius")?;
                if r < 0.0 {
                    return invalid(format!("spider radius must be nonnegative, got {r}"));
                }
                if leg >= legs {
                    return invalid(format!("leg {leg} out of range for {legs} legs"));
                }
                if r == 0.0 {
                    Coords::Spider { leg: 0, r: 0.0 }
                } else {
                    Coords::Spider { leg, r }
                }
            }
            (SpaceSpec::OpenBook { pages }, Coords::OpenBook { page, s, t }) => {
                let s = finite(s, "spine coordinate")?;
                let t = finite(t, "page height")?;
                if t < 0.0 {
                    return invalid(format!("page height must be nonnegative, got {t}"));
                }
                if page >= pages {
                    return invalid(format!("page {page} out of range for {pages} pages"));
                }
                if t == 0.0 {
                    Coords::OpenBook { page: 0, s: s + 0.0, t: 0.0 }
                } else {
                    Coords::OpenBook { page, s: s + 0.0, t }
                }
            }
            (SpaceSpec::FlatCone { circumference }, Coords::FlatCone { r, phi }) => {
                let r = finite(r, "cone radius")?;
                let phi = finite(phi, "cone angle")?;
                if r < 0.0 {
                    return invalid(format!("cone radius must be nonnegative, got {r}"));
                }
                if r == 0.0 {
                    Coords::FlatCone { r: 0.0, phi: 0.0 }
                } else {
                    Coords::FlatCone { r, phi: wrap_angle(phi, circumference) }
                }
            }
            (space, coords) => {
                return invalid(format!("coordinates {coords:?} do not belong to {space}"));
            }
        };
        Ok(Point { space, coords })
    }

    pub fn euclidean(space: SpaceSpec, x: Vec<f64>) -> Result<Self> {
        Point::new(space, Coords::Euclidean(x))
    }

    pub fn spider(space: SpaceSpec, leg: usize, r: f64) -> Result<Self> {
        Point::new(space, Coords::Spider { leg, r })
    }

    pub fn open_book(space: SpaceSpec, page: usize, s: f64, t: f64) -> Result<Self> {
        Point::new(space, Coords::OpenBook { page, s, t })
    }

    pub fn flat_cone(space: SpaceSpec, r: f64, phi: f64) -> Result<Self> {
        Point::new(space, Coords::FlatCone { r, phi })
    }

    /// The distinguished point: origin, apex, or spine origin.
    pub fn origin(space: SpaceSpec) -> Self {
        let coords = match space {
            SpaceSpec::Euclidean { dim } => Coords::Euclidean(vec![0.0; dim]),
            SpaceSpec::Spider { .. } => Coords::Spider { leg: 0, r: 0.0 },
            SpaceSpec::OpenBook { .. } => Coords::OpenBook { page: 0, s: 0.0, t: 0.0 },
            SpaceSpec::FlatCone { .. } => Coords::FlatCone { r: 0.0, phi: 0.0 },
        };
        Point { space, coords }
    }

    /// Parse the flat array form used in files: `[leg, r]`, `[page, s, t]`,
    /// `[r, phi]` or `[x...]`.
    pub fn from_array(space: SpaceSpec, a: &[f64]) -> Result<Self> {
        fn index(x: f64, what: &str) -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 && x < u32::MAX as f64 {
                Ok(x as usize)
            } else {
                invalid(format!("{what} index must be a nonnegative integer, got {x}"))
            }
        }
        let want = |n: usize| -> Result<()> {
            if a.len() == n {
                Ok(())
            } else {
                invalid(format!("a point of {space} needs {n} coordinates, got {}", a.len()))
            }
        };
        match space {
            SpaceSpec::Euclidean { .. } => Point::euclidean(space, a.to_vec()),
            SpaceSpec::Spider { .. } => {
                want(2)?;
                Point::spider(space, index(a[0], "leg")?, a[1])
            }
            SpaceSpec::OpenBook { .. } => {
                want(3)?;
                Point::open_book(space, index(a[0], "page")?, a[1], a[2])
            }
            SpaceSpec::FlatCone { .. } => {
                want(2)?;
                Point::flat_cone(space, a[0], a[1])
            }
        }
    }

    pub fn to_array(&self) -> Vec<f64> {
        match &self.coords {
            Coords::Euclidean(x) => x.clone(),
            Coords::Spider { leg, r } => vec![*leg as f64, *r],
            Coords::OpenBook { page, s, t } => vec![*page as f64, *s, *t],
            Coords::FlatCone { r, phi } => vec![*r, *phi],
        }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    pub(crate) fn from_parts_unchecked(space: SpaceSpec, coords: Coords) -> Self {
        Point { space, coords }
    }

    /// The stratum containing the point.
    pub fn stratum(&self) -> Stratum {
        match (&self.coords, self.space) {
            (Coords::Euclidean(_), SpaceSpec::Euclidean { dim }) => Stratum { id: StratumId::Whole, dim },
            (Coords::Spider { r, .. }, _) if *r == 0.0 => Stratum { id: StratumId::Apex, dim: 0 },
            (Coords::Spider { leg, .. }, _) => Stratum { id: StratumId::Leg(*leg), dim: 1 },
            (Coords::OpenBook { t, .. }, _) if *t == 0.0 => Stratum { id: StratumId::Spine, dim: 1 },
            (Coords::OpenBook { page, .. }, _) => Stratum { id: StratumId::Page(*page), dim: 2 },
            (Coords::FlatCone { r, .. }, _) if *r == 0.0 => Stratum { id: StratumId::Apex, dim: 0 },
            (Coords::FlatCone { .. }, _) => Stratum { id: StratumId::Punctured, dim: 2 },
            (c, s) => unreachable!("point {c:?} stored with space {s}"),
        }
    }

    /// True when the point lies in a top-dimensional (manifold) stratum, where
    /// the tangent cone is a vector space with a local chart.
    pub fn is_smooth(&self) -> bool {
        self.stratum().dim == self.space.top_dim()
    }

    /// Strata whose closure contains this point.
    pub fn incident_strata(&self) -> Vec<Stratum> {
        let own = self.stratum();
        match own.id {
            StratumId::Apex | StratumId::Spine => self.space.strata(),
            _ => vec![own],
        }
    }
}

pub fn stratum_of(p: &Point) -> Stratum {
    p.stratum()
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.coords {
            Coords::Euclidean(x) => write!(f, "{x:?}"),
            Coords::Spider { leg, r } => write!(f, "(leg {leg}, r={r})"),
            Coords::OpenBook { page, s, t } => write!(f, "(page {page}, s={s}, t={t})"),
            Coords::FlatCone { r, phi } => write!(f, "(r={r}, phi={phi})"),
        }
    }
}
