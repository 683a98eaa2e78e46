use std::f64::consts::PI;

use super::point::{wrap_angle, Coords, Point};
use super::space::SpaceSpec;
use super::tangent::{Branch, Direction, DirectionKind, TangentVector};
use crate::error::{domain, Error, Result};

/// Relative slack used when deciding that a continued geodesic has landed
/// exactly on a gluing locus.
const LANDING_TOL: f64 = 1e-12;

fn same_space(p: &Point, q: &Point) -> Result<()> {
    if p.space() == q.space() {
        Ok(())
    } else {
        domain(format!("points live in different spaces {} and {}", p.space(), q.space()))
    }
}

/// Signed circle gap from `from` to `to`, in `(-α/2, α/2]`.
fn signed_gap(from: f64, to: f64, circumference: f64) -> f64 {
    let d = (to - from).rem_euclid(circumference);
    if d > circumference / 2.0 {
        d - circumference
    } else {
        d
    }
}

/// Geodesic distance.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    same_space(p, q)?;
    Ok(distance_unchecked(p, q))
}

pub(crate) fn distance_unchecked(p: &Point, q: &Point) -> f64 {
    match (p.coords(), q.coords()) {
        (Coords::Euclidean(a), Coords::Euclidean(b)) => {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        }
        (Coords::Spider { leg: l1, r: r1 }, Coords::Spider { leg: l2, r: r2 }) => {
            if l1 == l2 {
                (r1 - r2).abs()
            } else {
                r1 + r2
            }
        }
        (Coords::OpenBook { page: p1, s: s1, t: t1 }, Coords::OpenBook { page: p2, s: s2, t: t2 }) => {
            let ds = s1 - s2;
            let dt = if p1 == p2 { t1 - t2 } else { t1 + t2 };
            ds.hypot(dt)
        }
        (Coords::FlatCone { r: r1, phi: a1 }, Coords::FlatCone { r: r2, phi: a2 }) => {
            let SpaceSpec::FlatCone { circumference } = p.space() else { unreachable!() };
            let gap = (a1 - a2).abs();
            let gap = gap.min(circumference - gap).min(PI);
            if gap >= PI {
                r1 + r2
            } else {
                // law of cosines, rearranged to avoid cancellation for nearby points
                let half = (gap / 2.0).sin();
                ((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * half * half).sqrt()
            }
        }
        _ => unreachable!("points of one space with different coordinate kinds"),
    }
}

/// Point at fraction `t` of the way from `p` to `q` along the unique geodesic.
pub fn geodesic_point(p: &Point, q: &Point, t: f64) -> Result<Point> {
    same_space(p, q)?;
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("geodesic parameter must lie in [0, 1], got {t}"));
    }
    let space = p.space();
    let coords = match (p.coords(), q.coords()) {
        (Coords::Euclidean(a), Coords::Euclidean(b)) => {
            Coords::Euclidean(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
        }
        (Coords::Spider { leg: l1, r: r1 }, Coords::Spider { leg: l2, r: r2 }) => {
            if l1 == l2 || *r2 == 0.0 {
                Coords::Spider { leg: *l1, r: r1 + t * (r2 - r1) }
            } else {
                let a = t * (r1 + r2);
                if a <= *r1 {
                    Coords::Spider { leg: *l1, r: r1 - a }
                } else {
                    Coords::Spider { leg: *l2, r: a - r1 }
                }
            }
        }
        (Coords::OpenBook { page: p1, s: s1, t: t1 }, Coords::OpenBook { page: p2, s: s2, t: t2 }) => {
            let s = s1 + t * (s2 - s1);
            if p1 == p2 || *t2 == 0.0 {
                Coords::OpenBook { page: *p1, s, t: (t1 + t * (t2 - t1)).max(0.0) }
            } else {
                // unfold page p1 below the spine
                let h = -t1 + t * (t1 + t2);
                if h <= 0.0 {
                    Coords::OpenBook { page: *p1, s, t: -h }
                } else {
                    Coords::OpenBook { page: *p2, s, t: h }
                }
            }
        }
        (Coords::FlatCone { r: r1, phi: a1 }, Coords::FlatCone { r: r2, phi: a2 }) => {
            let SpaceSpec::FlatCone { circumference } = space else { unreachable!() };
            let gap = signed_gap(*a1, *a2, circumference);
            if *r1 == 0.0 || *r2 == 0.0 || gap.abs() >= PI {
                // radial segments through the apex
                let a = t * (r1 + r2);
                if a <= *r1 {
                    Coords::FlatCone { r: r1 - a, phi: *a1 }
                } else {
                    Coords::FlatCone { r: a - r1, phi: *a2 }
                }
            } else {
                let x = (1.0 - t) * r1 + t * r2 * gap.cos();
                let y = t * r2 * gap.sin();
                Coords::FlatCone { r: x.hypot(y), phi: a1 + y.atan2(x) }
            }
        }
        _ => unreachable!(),
    };
    Point::new(space, coords)
}

/// Log map: the tangent vector at `base` of length `d(base, x)` pointing
/// along the shortest path to `x`.
///
/// All four model spaces are CAT(0), so shortest paths are unique and the
/// map is defined everywhere. When the path from a smooth base point leaves
/// its stratum through a branching locus, the returned direction records
/// which branch it takes so that `exp_map` can retrace it.
pub fn log_map(base: &Point, x: &Point) -> Result<TangentVector> {
    same_space(base, x)?;
    if base == x {
        return Ok(TangentVector::zero(base.clone()));
    }
    let space = base.space();
    let len = distance_unchecked(base, x);
    let dir = match (base.coords(), x.coords()) {
        (Coords::Euclidean(b), Coords::Euclidean(y)) => {
            Direction::chart(base.clone(), y.iter().zip(b).map(|(yi, bi)| (yi - bi) / len).collect())?
        }
        (Coords::Spider { r: r0, .. }, Coords::Spider { leg, r }) if *r0 == 0.0 => {
            let _ = r;
            Direction::leg(base.clone(), *leg)?
        }
        (Coords::Spider { leg: l0, r: r0 }, Coords::Spider { leg, r }) => {
            if leg == l0 && *r != 0.0 {
                Direction::chart(base.clone(), vec![(r - r0).signum()])?
            } else if *r == 0.0 {
                Direction::chart(base.clone(), vec![-1.0])?
            } else {
                Direction::chart(base.clone(), vec![-1.0])?.with_branch(Branch::Leg(*leg))
            }
        }
        (Coords::OpenBook { s: s0, t: t0, .. }, Coords::OpenBook { page, s, t }) if *t0 == 0.0 => {
            let theta = t.atan2(s - s0);
            Direction::page(base.clone(), *page, theta.clamp(0.0, PI))?
        }
        (Coords::OpenBook { page: p0, s: s0, t: t0 }, Coords::OpenBook { page, s, t }) => {
            let ds = (s - s0) / len;
            if page == p0 {
                Direction::chart(base.clone(), vec![ds, (t - t0) / len])?
            } else if *t == 0.0 {
                Direction::chart(base.clone(), vec![ds, -t0 / len])?
            } else {
                Direction::chart(base.clone(), vec![ds, (-t - t0) / len])?.with_branch(Branch::Page(*page))
            }
        }
        (Coords::FlatCone { r: r0, .. }, Coords::FlatCone { phi, .. }) if *r0 == 0.0 => {
            Direction::circle(base.clone(), *phi)?
        }
        (Coords::FlatCone { r: r0, phi: a0 }, Coords::FlatCone { r, phi }) => {
            let SpaceSpec::FlatCone { circumference } = space else { unreachable!() };
            let gap = signed_gap(*a0, *phi, circumference);
            if *r == 0.0 {
                Direction::chart(base.clone(), vec![-1.0, 0.0])?
            } else if gap.abs() >= PI {
                Direction::chart(base.clone(), vec![-1.0, 0.0])?.with_branch(Branch::Angle(*phi))
            } else {
                // chart frame at the base: (radial, angular)
                let x = r * gap.cos() - r0;
                let y = r * gap.sin();
                Direction::chart(base.clone(), vec![x, y])?
            }
        }
        _ => unreachable!(),
    };
    TangentVector::new(dir, len)
}

/// Exponential map: follow the constant-speed geodesic with initial tangent `v`.
///
/// From a smooth base point the geodesic is continued straight in the chart;
/// if it runs through a branching singular locus, the direction's branch
/// selects the continuation and its absence is an ambiguity error.
pub fn exp_map(base: &Point, v: &TangentVector) -> Result<Point> {
    if v.base() != base {
        return domain(format!("tangent vector based at {} used at {base}", v.base()));
    }
    let Some(dir) = v.direction() else {
        return Ok(base.clone());
    };
    let len = v.length();
    let space = base.space();
    let coords = match (base.coords(), dir.kind()) {
        (Coords::Euclidean(b), DirectionKind::Chart { unit, .. }) => {
            Coords::Euclidean(b.iter().zip(unit).map(|(bi, u)| bi + len * u).collect())
        }
        (Coords::Spider { .. }, DirectionKind::Leg(l)) => Coords::Spider { leg: *l, r: len },
        (Coords::Spider { leg, r: r0 }, DirectionKind::Chart { unit, branch }) => {
            if unit[0] > 0.0 {
                Coords::Spider { leg: *leg, r: r0 + len }
            } else if len <= r0 * (1.0 + LANDING_TOL) {
                Coords::Spider { leg: *leg, r: (r0 - len).max(0.0) }
            } else {
                match branch {
                    Some(Branch::Leg(l)) if l != leg => Coords::Spider { leg: *l, r: len - r0 },
                    _ => return Err(ambiguous_continuation(base, "apex")),
                }
            }
        }
        (Coords::OpenBook { s, .. }, DirectionKind::Page { page, theta }) => {
            Coords::OpenBook { page: *page, s: s + len * theta.cos(), t: (len * theta.sin()).max(0.0) }
        }
        (Coords::OpenBook { page, s: s0, t: t0 }, DirectionKind::Chart { unit, branch }) => {
            let s = s0 + len * unit[0];
            let t = t0 + len * unit[1];
            if t >= -LANDING_TOL * t0.max(len) {
                Coords::OpenBook { page: *page, s, t: t.max(0.0) }
            } else {
                let SpaceSpec::OpenBook { pages } = space else { unreachable!() };
                let target = match branch {
                    Some(Branch::Page(q)) if q != page => *q,
                    None if pages == 2 => 1 - page,
                    _ => return Err(ambiguous_continuation(base, "spine")),
                };
                Coords::OpenBook { page: target, s, t: -t }
            }
        }
        (Coords::FlatCone { .. }, DirectionKind::Circle(phi)) => Coords::FlatCone { r: len, phi: *phi },
        (Coords::FlatCone { r: r0, phi: a0 }, DirectionKind::Chart { unit, branch }) => {
            let SpaceSpec::FlatCone { circumference } = space else { unreachable!() };
            let radial_in = unit[1] == 0.0 && unit[0] < 0.0;
            if radial_in && len > r0 * (1.0 + LANDING_TOL) {
                match branch {
                    Some(Branch::Angle(phi)) if signed_gap(*a0, *phi, circumference).abs() >= PI => {
                        Coords::FlatCone { r: len - r0, phi: *phi }
                    }
                    _ => return Err(ambiguous_continuation(base, "apex")),
                }
            } else if radial_in {
                Coords::FlatCone { r: (r0 - len).max(0.0), phi: *a0 }
            } else {
                let x = r0 + len * unit[0];
                let y = len * unit[1];
                Coords::FlatCone { r: x.hypot(y), phi: wrap_angle(a0 + y.atan2(x), circumference) }
            }
        }
        (c, k) => return domain(format!("direction {k:?} does not belong to base {c:?}")),
    };
    Point::new(space, coords)
}

fn ambiguous_continuation(base: &Point, locus: &str) -> Error {
    Error::Ambiguous(format!(
        "geodesic from {base} continues through the {locus}, where it branches; no branch was given"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sp3() -> SpaceSpec {
        SpaceSpec::spider(3).unwrap()
    }

    #[test]
    fn spider_distances() {
        let s = sp3();
        let a = Point::spider(s, 1, 2.0).unwrap();
        assert_eq!(distance(&a, &Point::spider(s, 1, 3.0).unwrap()).unwrap(), 1.0);
        assert_eq!(distance(&a, &Point::spider(s, 2, 3.0).unwrap()).unwrap(), 5.0);
    }

    #[test]
    fn open_book_cross_page_distance_matches_spine_search() {
        let b = SpaceSpec::open_book(3).unwrap();
        let p = Point::open_book(b, 1, 0.0, 1.0).unwrap();
        let q = Point::open_book(b, 2, 0.0, 1.0).unwrap();
        assert_eq!(distance(&p, &q).unwrap(), 2.0);
        // brute-force over the crossing point on the spine
        let p = Point::open_book(b, 1, -0.7, 0.4).unwrap();
        let q = Point::open_book(b, 2, 1.3, 1.1).unwrap();
        let best = (0..=200_000)
            .map(|i| -2.0 + 5.0 * i as f64 / 200_000.0)
            .map(|c: f64| (c + 0.7).hypot(0.4) + (1.3 - c).hypot(1.1))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(distance(&p, &q).unwrap(), best, epsilon = 1e-9);
    }

    #[test]
    fn flat_cone_distance_caps_the_angle() {
        let c = SpaceSpec::flat_cone(3.0 * PI).unwrap();
        let p = Point::flat_cone(c, 1.0, 0.0).unwrap();
        let q = Point::flat_cone(c, 1.0, 1.6 * PI).unwrap();
        assert_eq!(distance(&p, &q).unwrap(), 2.0);
        // short side: plain law of cosines
        let q = Point::flat_cone(c, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(distance(&p, &q).unwrap(), (5.0 - 4.0 * 0.5f64.cos()).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn flat_cone_distance_matches_dense_path_search() {
        // shortest path either through the apex or straight in a sector of angle < π;
        // oracle: minimize over polylines through a point on the ray at the midpoint angle
        let c = SpaceSpec::flat_cone(3.0 * PI).unwrap();
        let (r1, a1, r2, a2) = (1.3, 0.2, 0.8, 2.9);
        let p = Point::flat_cone(c, r1, a1).unwrap();
        let q = Point::flat_cone(c, r2, a2).unwrap();
        let half = (a2 - a1) / 2.0;
        let best = (0..=400_000)
            .map(|i| 3.0 * i as f64 / 400_000.0)
            .map(|rho: f64| {
                let leg = |r: f64| (r * r + rho * rho - 2.0 * r * rho * half.cos()).max(0.0).sqrt();
                leg(r1) + leg(r2)
            })
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(distance(&p, &q).unwrap(), best, epsilon = 1e-6);
    }

    #[test]
    fn geodesics_through_the_spider_apex() {
        let s = sp3();
        let p = Point::spider(s, 1, 2.0).unwrap();
        let q = Point::spider(s, 2, 3.0).unwrap();
        assert_eq!(geodesic_point(&p, &q, 0.4).unwrap(), Point::origin(s));
        assert_eq!(geodesic_point(&p, &q, 0.8).unwrap(), Point::spider(s, 2, 2.0).unwrap());
        let e = SpaceSpec::euclidean(2).unwrap();
        let m = geodesic_point(
            &Point::euclidean(e, vec![0.0, 0.0]).unwrap(),
            &Point::euclidean(e, vec![2.0, 0.0]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!(m, Point::euclidean(e, vec![1.0, 0.0]).unwrap());
    }

    #[test]
    fn flat_cone_geodesic_at_gap_pi_passes_the_apex() {
        let c = SpaceSpec::flat_cone(3.0 * PI).unwrap();
        let p = Point::flat_cone(c, 1.0, 0.0).unwrap();
        let q = Point::flat_cone(c, 1.0, PI).unwrap();
        assert_eq!(geodesic_point(&p, &q, 0.5).unwrap(), Point::origin(c));
    }

    #[test]
    fn log_map_examples() {
        let s = sp3();
        let v = log_map(&Point::origin(s), &Point::spider(s, 2, 1.5).unwrap()).unwrap();
        assert_eq!(v, TangentVector::new(Direction::leg(Point::origin(s), 2).unwrap(), 1.5).unwrap());

        let b = SpaceSpec::open_book(2).unwrap();
        let v = log_map(&Point::origin(b), &Point::open_book(b, 1, 3.0, 4.0).unwrap()).unwrap();
        assert_eq!(v.length(), 5.0);
        match v.direction().unwrap().kind() {
            DirectionKind::Page { page, theta } => {
                assert_eq!(*page, 1);
                assert_abs_diff_eq!(*theta, 4f64.atan2(3.0), epsilon = 1e-15);
            }
            k => panic!("unexpected {k:?}"),
        }

        let e = SpaceSpec::euclidean(2).unwrap();
        let x = Point::euclidean(e, vec![1.0, 1.0]).unwrap();
        assert!(log_map(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn exp_map_examples() {
        let s = sp3();
        let v = TangentVector::new(Direction::leg(Point::origin(s), 1).unwrap(), 0.6).unwrap();
        assert_eq!(exp_map(&Point::origin(s), &v).unwrap(), Point::spider(s, 1, 0.6).unwrap());

        let e = SpaceSpec::euclidean(3).unwrap();
        let b = Point::euclidean(e, vec![1.0, -2.0, 0.5]).unwrap();
        let w = TangentVector::new(Direction::chart(b.clone(), vec![0.0, 3.0, 4.0]).unwrap(), 5.0).unwrap();
        let x = exp_map(&b, &w).unwrap();
        assert_eq!(x.to_array(), vec![1.0, 1.0, 4.5]);

        let ob = SpaceSpec::open_book(3).unwrap();
        let base = Point::open_book(ob, 0, 1.0, 0.0).unwrap();
        let v = TangentVector::new(Direction::page(base.clone(), 2, PI / 2.0).unwrap(), 2.0).unwrap();
        let x = exp_map(&base, &v).unwrap();
        let Coords::OpenBook { page, s, t } = x.coords() else { panic!() };
        assert_eq!((*page, *t), (2, 2.0));
        assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_without_branch_is_ambiguous_past_the_apex() {
        let s = sp3();
        let base = Point::spider(s, 0, 1.0).unwrap();
        let v = TangentVector::new(Direction::chart(base.clone(), vec![-1.0]).unwrap(), 2.0).unwrap();
        assert!(matches!(exp_map(&base, &v), Err(Error::Ambiguous(_))));
        let short = TangentVector::new(Direction::chart(base.clone(), vec![-1.0]).unwrap(), 1.0).unwrap();
        assert_eq!(exp_map(&base, &short).unwrap(), Point::origin(s));
    }

    #[test]
    fn two_page_book_continues_uniquely() {
        let b = SpaceSpec::open_book(2).unwrap();
        let base = Point::open_book(b, 0, 0.0, 1.0).unwrap();
        let v = TangentVector::new(Direction::chart(base.clone(), vec![0.0, -1.0]).unwrap(), 3.0).unwrap();
        assert_eq!(exp_map(&base, &v).unwrap(), Point::open_book(b, 1, 0.0, 2.0).unwrap());
    }

    #[test]
    fn mismatched_spaces() {
        let p = Point::origin(sp3());
        let q = Point::origin(SpaceSpec::spider(4).unwrap());
        assert!(matches!(distance(&p, &q), Err(Error::Domain(_))));
    }
}
