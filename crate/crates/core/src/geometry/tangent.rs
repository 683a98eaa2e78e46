use std::f64::consts::PI;
use std::fmt;

use super::point::{wrap_angle, Coords, Point};
use super::space::SpaceSpec;
use crate::error::{domain, invalid, Result};

/// Which continuation a chart direction takes after its geodesic runs into
/// a branching singular stratum.
///
/// Directions carrying different branches are the same direction (their
/// angle is 0); the branch only selects which geodesic `exp_map` follows
/// once it leaves the smooth stratum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Branch {
    Leg(usize),
    Page(usize),
    Angle(f64),
}

/// Descriptor of a unit direction at a base point.
#[derive(Clone, Debug)]
pub enum DirectionKind {
    /// Unit vector in the local chart of a smooth point.
    Chart { unit: Vec<f64>, branch: Option<Branch> },
    /// Leg at a spider apex.
    Leg(usize),
    /// Direction at an open-book spine point: page and angle `theta ∈ [0, π]`
    /// measured from the positive spine direction. The poles `theta ∈ {0, π}`
    /// are stored on page 0.
    Page { page: usize, theta: f64 },
    /// Circle coordinate at a flat-cone apex.
    Circle(f64),
}

/// A unit direction at a base point: an element of the space of directions.
#[derive(Clone, Debug)]
pub struct Direction {
    base: Point,
    kind: DirectionKind,
}

/// Dimension of the local chart at a smooth point, or `None` at singular points.
pub(crate) fn chart_dim(base: &Point) -> Option<usize> {
    match (base.space(), base.coords()) {
        (SpaceSpec::Euclidean { dim }, _) => Some(dim),
        (_, Coords::Spider { r, .. }) if *r > 0.0 => Some(1),
        (_, Coords::OpenBook { t, .. }) if *t > 0.0 => Some(2),
        (_, Coords::FlatCone { r, .. }) if *r > 0.0 => Some(2),
        _ => None,
    }
}

impl Direction {
    pub fn new(base: Point, kind: DirectionKind) -> Result<Self> {
        let kind = match (base.space(), base.coords(), kind) {
            (_, _, DirectionKind::Chart { unit, branch }) => {
                let Some(dim) = chart_dim(&base) else {
                    return domain(format!("{base} is a singular point; chart directions are undefined there"));
                };
                if unit.len() != dim {
                    return invalid(format!("chart direction at {base} needs {dim} components"));
                }
                let norm = unit.iter().map(|u| u * u).sum::<f64>().sqrt();
                if !(norm.is_finite() && norm > 0.0) {
                    return invalid("chart direction must be a finite nonzero vector");
                }
                let unit = if (norm - 1.0).abs() < 1e-15 { unit } else { unit.iter().map(|u| u / norm).collect() };
                DirectionKind::Chart { unit, branch }
            }
            (SpaceSpec::Spider { legs }, Coords::Spider { r, .. }, DirectionKind::Leg(l)) if *r == 0.0 => {
                if l >= legs {
                    return invalid(format!("leg {l} out of range for {legs} legs"));
                }
                DirectionKind::Leg(l)
            }
            (SpaceSpec::OpenBook { pages }, Coords::OpenBook { t, .. }, DirectionKind::Page { page, theta })
                if *t == 0.0 =>
            {
                if page >= pages {
                    return invalid(format!("page {page} out of range for {pages} pages"));
                }
                if !(0.0..=PI).contains(&theta) {
                    return invalid(format!("page angle must lie in [0, π], got {theta}"));
                }
                if theta == 0.0 || theta == PI {
                    DirectionKind::Page { page: 0, theta }
                } else {
                    DirectionKind::Page { page, theta }
                }
            }
            (SpaceSpec::FlatCone { circumference }, Coords::FlatCone { r, .. }, DirectionKind::Circle(phi))
                if *r == 0.0 =>
            {
                if !phi.is_finite() {
                    return invalid("cone direction angle must be finite");
                }
                DirectionKind::Circle(wrap_angle(phi, circumference))
            }
            (_, _, kind) => {
                return domain(format!("direction {kind:?} is not a direction at {base}"));
            }
        };
        Ok(Direction { base, kind })
    }

    pub fn chart(base: Point, unit: Vec<f64>) -> Result<Self> {
        Direction::new(base, DirectionKind::Chart { unit, branch: None })
    }

    pub fn leg(base: Point, leg: usize) -> Result<Self> {
        Direction::new(base, DirectionKind::Leg(leg))
    }

    pub fn page(base: Point, page: usize, theta: f64) -> Result<Self> {
        Direction::new(base, DirectionKind::Page { page, theta })
    }

    pub fn circle(base: Point, phi: f64) -> Result<Self> {
        Direction::new(base, DirectionKind::Circle(phi))
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn kind(&self) -> &DirectionKind {
        &self.kind
    }

    /// Same direction with a continuation branch attached (chart directions only).
    pub(crate) fn with_branch(mut self, b: Branch) -> Self {
        if let DirectionKind::Chart { branch, .. } = &mut self.kind {
            *branch = Some(b);
        }
        self
    }

    /// Flat array form used in configuration files: `[leg]`, `[page, theta]`,
    /// `[phi]` or the chart unit vector.
    pub fn to_array(&self) -> Vec<f64> {
        match &self.kind {
            DirectionKind::Chart { unit, .. } => unit.clone(),
            DirectionKind::Leg(l) => vec![*l as f64],
            DirectionKind::Page { page, theta } => vec![*page as f64, *theta],
            DirectionKind::Circle(phi) => vec![*phi],
        }
    }

    pub fn from_array(base: &Point, a: &[f64]) -> Result<Self> {
        let index = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 && x < u32::MAX as f64 {
                Ok(x as usize)
            } else {
                invalid(format!("direction index must be a nonnegative integer, got {x}"))
            }
        };
        let base = base.clone();
        if chart_dim(&base).is_some() {
            return Direction::chart(base, a.to_vec());
        }
        match (base.space(), a) {
            (SpaceSpec::Spider { .. }, [l]) => Direction::leg(base, index(*l)?),
            (SpaceSpec::OpenBook { .. }, [p, theta]) => Direction::page(base, index(*p)?, *theta),
            (SpaceSpec::FlatCone { .. }, [phi]) => Direction::circle(base, *phi),
            _ => invalid(format!("cannot read direction {a:?} at {base}")),
        }
    }

    /// Short textual label, used as a CSV column header.
    pub fn label(&self) -> String {
        match &self.kind {
            DirectionKind::Chart { unit, .. } => {
                let parts: Vec<String> = unit.iter().map(|u| format!("{u}")).collect();
                format!("u({})", parts.join(";"))
            }
            DirectionKind::Leg(l) => format!("leg{l}"),
            DirectionKind::Page { page, theta } => format!("page{page}:theta={theta}"),
            DirectionKind::Circle(phi) => format!("phi={phi}"),
        }
    }
}

impl PartialEq for Direction {
    /// Equality of directions ignores continuation branches.
    fn eq(&self, other: &Self) -> bool {
        if self.base != other.base {
            return false;
        }
        match (&self.kind, &other.kind) {
            (DirectionKind::Chart { unit: a, .. }, DirectionKind::Chart { unit: b, .. }) => a == b,
            (DirectionKind::Leg(a), DirectionKind::Leg(b)) => a == b,
            (DirectionKind::Page { page: p, theta: a }, DirectionKind::Page { page: q, theta: b }) => p == q && a == b,
            (DirectionKind::Circle(a), DirectionKind::Circle(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// An element of the tangent cone: a direction and a nonnegative length.
/// The zero vector (the cone apex) carries no direction.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: Point,
    direction: Option<Direction>,
    length: f64,
}

impl TangentVector {
    pub fn new(direction: Direction, length: f64) -> Result<Self> {
        if !(length.is_finite() && length >= 0.0) {
            return invalid(format!("tangent vector length must be finite and nonnegative, got {length}"));
        }
        let base = direction.base.clone();
        if length == 0.0 {
            return Ok(TangentVector::zero(base));
        }
        Ok(TangentVector { base, direction: Some(direction), length })
    }

    pub fn unit(direction: Direction) -> Self {
        let base = direction.base.clone();
        TangentVector { base, direction: Some(direction), length: 1.0 }
    }

    pub fn zero(base: Point) -> Self {
        TangentVector { base, direction: None, length: 0.0 }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn direction(&self) -> Option<&Direction> {
        self.direction.as_ref()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_zero(&self) -> bool {
        self.direction.is_none()
    }
}

impl PartialEq for TangentVector {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.length == other.length && self.direction == other.direction
    }
}

fn same_base(a: &Point, b: &Point) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        domain(format!("tangent data based at different points {a} and {b}"))
    }
}

/// Angle between unit vectors, accurate for nearly parallel inputs.
fn vector_angle(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

/// The angular (length) metric on the space of directions.
///
/// On a flat cone apex this is circle arclength and may exceed π.
pub fn angular_distance(u: &Direction, v: &Direction) -> Result<f64> {
    same_base(&u.base, &v.base)?;
    Ok(angular_distance_same_base(&u.kind, &v.kind, u.base.space()))
}

pub(crate) fn angular_distance_same_base(u: &DirectionKind, v: &DirectionKind, space: SpaceSpec) -> f64 {
    match (u, v) {
        (DirectionKind::Chart { unit: a, .. }, DirectionKind::Chart { unit: b, .. }) => vector_angle(a, b),
        (DirectionKind::Leg(a), DirectionKind::Leg(b)) => {
            if a == b {
                0.0
            } else {
                PI
            }
        }
        (DirectionKind::Page { page: p, theta: a }, DirectionKind::Page { page: q, theta: b }) => {
            let pole = *a == 0.0 || *a == PI || *b == 0.0 || *b == PI;
            if p == q || pole {
                (a - b).abs()
            } else {
                (a + b).min((PI - a) + (PI - b))
            }
        }
        (DirectionKind::Circle(a), DirectionKind::Circle(b)) => {
            let SpaceSpec::FlatCone { circumference } = space else {
                unreachable!("circle directions only exist on flat cones")
            };
            let gap = (a - b).abs();
            gap.min(circumference - gap)
        }
        (a, b) => unreachable!("incompatible direction kinds {a:?} and {b:?} at one base"),
    }
}

/// Cosine of the angle between two directions; the angle is the angular
/// distance capped at π.
pub(crate) fn cos_angle(u: &Direction, v: &Direction) -> f64 {
    match (&u.kind, &v.kind) {
        (DirectionKind::Chart { unit: a, .. }, DirectionKind::Chart { unit: b, .. }) => {
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
        }
        (a, b) => angular_distance_same_base(a, b, u.base.space()).min(PI).cos(),
    }
}

/// `‖V‖‖W‖ cos∠(V, W)`; zero when either vector is zero.
pub fn angular_pairing(v: &TangentVector, w: &TangentVector) -> Result<f64> {
    same_base(&v.base, &w.base)?;
    Ok(match (&v.direction, &w.direction) {
        (Some(a), Some(b)) => v.length * w.length * cos_angle(a, b),
        _ => 0.0,
    })
}

/// The cone metric `sqrt(‖V‖² + ‖W‖² − 2⟨V, W⟩)`, evaluated in a form
/// without cancellation for nearby vectors.
pub fn conical_distance(v: &TangentVector, w: &TangentVector) -> Result<f64> {
    same_base(&v.base, &w.base)?;
    let (a, b) = (v.length, w.length);
    Ok(match (&v.direction, &w.direction) {
        (Some(x), Some(y)) => match (&x.kind, &y.kind) {
            (DirectionKind::Chart { unit: p, .. }, DirectionKind::Chart { unit: q, .. }) => {
                p.iter().zip(q).map(|(p, q)| (a * p - b * q) * (a * p - b * q)).sum::<f64>().sqrt()
            }
            (p, q) => {
                let half = (angular_distance_same_base(p, q, v.base.space()).min(PI) / 2.0).sin();
                ((a - b) * (a - b) + 4.0 * a * b * half * half).sqrt()
            }
        },
        _ => (a - b).abs(),
    })
}

/// Nonnegative scaling on the tangent cone.
pub fn scale(v: &TangentVector, t: f64) -> Result<TangentVector> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("tangent cones only admit nonnegative scaling, got {t}"));
    }
    match &v.direction {
        Some(d) if t > 0.0 => TangentVector::new(d.clone(), v.length * t),
        _ => Ok(TangentVector::zero(v.base.clone())),
    }
}
