//! Two-stage Fréchet mean solver.
//!
//! Stage one runs the inductive (Sturm) mean, which converges in any CAT(0)
//! space. Stage two sweeps a grid over a ball around the stage-one output,
//! covering every stratum the ball meets, then refines the best grid point by
//! golden-section search along coordinate families of each incident stratum.
//! Lower-dimensional strata are always offered as candidates, so sticky means
//! land exactly on their stratum.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{directional_derivative, frechet_unchecked, AtomSampler, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geometry::{
    distance_unchecked, geodesic_point, Coords, Direction, Point, SpaceSpec, Stratum, TangentVector,
};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanConfig {
    /// Inductive-mean iterations.
    pub iterations: usize,
    pub seed: u64,
    /// Cauchy tolerance for the inductive-mean tail, relative to the
    /// diameter of the support.
    pub cauchy_tol: f64,
    pub grid_radius: f64,
    pub grid_step: f64,
    /// Upper bound on grid size; the step is coarsened to respect it.
    pub max_grid_points: usize,
    /// Grid points closer than this many steps to the best one are excluded
    /// from the runner-up.
    pub separation_cells: f64,
    pub golden_rounds: usize,
    pub sticky_tol: f64,
    /// Minimum runner-up gap for the certificate to count as unique.
    pub gap_tol: f64,
}

impl Default for MeanConfig {
    fn default() -> Self {
        MeanConfig {
            iterations: 20_000,
            seed: 0,
            cauchy_tol: 0.05,
            grid_radius: 1.0,
            grid_step: 1e-3,
            max_grid_points: 4_000_000,
            separation_cells: 10.0,
            golden_rounds: 2,
            sticky_tol: 1e-8,
            gap_tol: 1e-6,
        }
    }
}

/// Evidence gathered by the grid stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Step actually used, after budget coarsening.
    pub grid_step: f64,
    pub grid_points: usize,
    pub best_grid_value: f64,
    /// `min F` over grid points farther than `separation` from the best grid
    /// point, minus `F` at the reported mean. `None` when no grid point is that far.
    pub runner_up_gap: Option<f64>,
    pub separation: f64,
    pub recenterings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanDiagnostics {
    #[serde(serialize_with = "super::serialize_point")]
    pub mean: Point,
    pub frechet_value: f64,
    pub iterations: usize,
    /// Largest distance from the final inductive iterate to the tail of the run.
    pub inductive_spread: f64,
    pub stratum: Stratum,
    pub sticky: bool,
    /// Smallest directional derivative along directions leaving the mean's
    /// stratum, when the mean is singular.
    pub min_normal_derivative: Option<f64>,
    pub certificate: Certificate,
}

impl MeanDiagnostics {
    pub fn unique(&self, gap_tol: f64) -> bool {
        self.certificate.runner_up_gap.is_none_or(|g| g >= gap_tol)
    }
}

/// Fréchet mean with diagnostics.
pub fn frechet_mean(mu: &DiscreteMeasure, cfg: &MeanConfig) -> Result<MeanDiagnostics> {
    frechet_mean_with_grid(mu, cfg, None)
}

/// As [`frechet_mean`], additionally collecting `(point, F)` for every grid
/// point of the final sweep.
pub fn frechet_mean_with_grid(
    mu: &DiscreteMeasure,
    cfg: &MeanConfig,
    grid_out: Option<&mut Vec<(Vec<f64>, f64)>>,
) -> Result<MeanDiagnostics> {
    validate(cfg)?;
    let (start, iterations, spread) =
        if mu.is_degenerate() { (mu.atoms()[0].0.clone(), 0, 0.0) } else { inductive_mean(mu, cfg)? };

    let mut center = start;
    let mut recenterings = 0;
    let (sweep, h) = loop {
        let h = effective_step(mu.space(), cfg);
        let sweep = grid_sweep(mu, &center, cfg.grid_radius, h, None);
        let off = distance_unchecked(&center, &sweep.best);
        if off > cfg.grid_radius - 2.0 * h && recenterings < 8 {
            center = sweep.best;
            recenterings += 1;
            continue;
        }
        break (sweep, h);
    };

    let mut best = sweep.best.clone();
    let mut best_value = sweep.best_value;
    // values within rounding of each other are ties, and ties go to the lower stratum
    let tie = 1e-14 * best_value.abs().max(1.0);
    for cand in refine(mu, &sweep.best, h, cfg.golden_rounds) {
        let v = frechet_unchecked(mu, &cand);
        let lower = cand.stratum().dim < best.stratum().dim;
        if v < best_value - tie || (lower && v <= best_value + tie) {
            best = cand;
            best_value = v;
        }
    }

    let separation = cfg.separation_cells * h;
    let runner = grid_sweep(
        mu,
        &center,
        cfg.grid_radius,
        h,
        Some(RunnerUp { anchor: &sweep.best, separation, collect: grid_out }),
    );
    let runner_up_gap = runner.runner_up.map(|r| r - best_value);

    let stratum = best.stratum();
    let normals = normal_directions(&best);
    let min_normal_derivative = if normals.is_empty() {
        None
    } else {
        let mut m = f64::INFINITY;
        for d in normals {
            m = m.min(directional_derivative(mu, &best, &TangentVector::unit(d))?);
        }
        Some(m)
    };
    let sticky = min_normal_derivative.is_some_and(|m| m >= cfg.sticky_tol);

    Ok(MeanDiagnostics {
        frechet_value: best_value,
        iterations,
        inductive_spread: spread,
        stratum,
        sticky,
        min_normal_derivative,
        certificate: Certificate {
            center: center.to_array(),
            radius: cfg.grid_radius,
            grid_step: h,
            grid_points: sweep.count,
            best_grid_value: sweep.best_value,
            runner_up_gap,
            separation,
            recenterings,
        },
        mean: best,
    })
}

fn validate(cfg: &MeanConfig) -> Result<()> {
    let ok = cfg.grid_radius.is_finite()
        && cfg.grid_radius > 0.0
        && cfg.grid_step.is_finite()
        && cfg.grid_step > 0.0
        && cfg.grid_step < cfg.grid_radius
        && cfg.max_grid_points > 0
        && cfg.cauchy_tol > 0.0
        && cfg.iterations > 0;
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!("unusable mean solver configuration {cfg:?}")))
    }
}

fn inductive_mean(mu: &DiscreteMeasure, cfg: &MeanConfig) -> Result<(Point, usize, f64)> {
    let sampler = AtomSampler::new(mu);
    let mut rng = substream(cfg.seed, &[0x53_5455_524d]);
    let atoms = mu.atoms();
    let k = cfg.iterations;
    let tail_len = (k / 10).max(2);
    let mut tail = std::collections::VecDeque::with_capacity(tail_len + 1);
    let mut p = atoms[sampler.draw(&mut rng)].0.clone();
    for i in 1..k {
        let x = &atoms[sampler.draw(&mut rng)].0;
        p = geodesic_point(&p, x, 1.0 / (i as f64 + 1.0))?;
        if tail.len() == tail_len {
            tail.pop_front();
        }
        tail.push_back(p.clone());
    }
    let spread = tail.iter().map(|q| distance_unchecked(&p, q)).fold(0.0, f64::max);
    let diameter = support_diameter(mu);
    let tolerance = cfg.cauchy_tol * diameter;
    if spread > tolerance {
        let stride = (tail.len() / 10).max(1);
        return Err(Error::NonConvergence {
            spread,
            tolerance,
            tail: tail.iter().step_by(stride).map(Point::to_array).collect(),
        });
    }
    Ok((p, k, spread))
}

pub(crate) fn support_diameter(mu: &DiscreteMeasure) -> f64 {
    let a = mu.atoms();
    let mut d = 0.0f64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            d = d.max(distance_unchecked(&a[i].0, &a[j].0));
        }
    }
    d
}

fn effective_step(space: SpaceSpec, cfg: &MeanConfig) -> f64 {
    let (r, h) = (cfg.grid_radius, cfg.grid_step);
    let n = r / h + 1.0;
    let estimate = match space {
        SpaceSpec::Euclidean { dim } => (2.0 * n).powi(dim as i32),
        SpaceSpec::Spider { legs } => legs as f64 * 2.0 * n,
        SpaceSpec::OpenBook { pages } => pages as f64 * 2.0 * n * n,
        SpaceSpec::FlatCone { circumference } => 0.5 * circumference * n * n,
    };
    let budget = cfg.max_grid_points as f64;
    if estimate <= budget {
        h
    } else {
        h * (estimate / budget).powf(1.0 / space.top_dim() as f64)
    }
}

struct RunnerUp<'a> {
    anchor: &'a Point,
    separation: f64,
    collect: Option<&'a mut Vec<(Vec<f64>, f64)>>,
}

struct Sweep {
    best: Point,
    best_value: f64,
    count: usize,
    runner_up: Option<f64>,
}

fn grid_sweep(mu: &DiscreteMeasure, center: &Point, radius: f64, h: f64, mut runner: Option<RunnerUp<'_>>) -> Sweep {
    let mut sweep =
        Sweep { best: center.clone(), best_value: frechet_unchecked(mu, center), count: 0, runner_up: None };
    for_each_grid_point(center, radius, h, &mut |p| {
        let v = frechet_unchecked(mu, &p);
        sweep.count += 1;
        if let Some(r) = runner.as_mut() {
            if let Some(c) = r.collect.as_mut() {
                c.push((p.to_array(), v));
            }
            if distance_unchecked(&p, r.anchor) > r.separation {
                sweep.runner_up = Some(sweep.runner_up.map_or(v, |u: f64| u.min(v)));
            }
        }
        if v < sweep.best_value {
            sweep.best_value = v;
            sweep.best = p;
        }
    });
    sweep
}

/// Grid points within `radius` of `center`, spanning every stratum the ball
/// meets. Rows are anchored at the center so it is always a grid point, and
/// singular strata are sampled explicitly.
fn for_each_grid_point(center: &Point, radius: f64, h: f64, f: &mut dyn FnMut(Point)) {
    let space = center.space();
    let within = |p: &Point| distance_unchecked(center, p) <= radius;
    let steps = (radius / h).floor() as i64;
    match (space, center.coords()) {
        (SpaceSpec::Euclidean { dim }, Coords::Euclidean(c)) => {
            let mut idx = vec![-steps; dim];
            loop {
                let norm2: f64 = idx.iter().map(|&i| (i as f64 * h).powi(2)).sum();
                if norm2 <= radius * radius {
                    let x = c.iter().zip(&idx).map(|(ci, &i)| ci + i as f64 * h).collect();
                    f(Point::from_parts_unchecked(space, Coords::Euclidean(x)));
                }
                let mut k = 0;
                loop {
                    if k == dim {
                        return;
                    }
                    idx[k] += 1;
                    if idx[k] <= steps {
                        break;
                    }
                    idx[k] = -steps;
                    k += 1;
                }
            }
        }
        (SpaceSpec::Spider { legs }, &Coords::Spider { leg: cl, r: rc }) => {
            let apex = Point::origin(space);
            if within(&apex) {
                f(apex);
            }
            for leg in 0..legs {
                let (anchor, lo) = if leg == cl || rc == 0.0 { (rc, -steps) } else { (0.0, 1) };
                for i in lo..=steps + (rc / h).ceil() as i64 {
                    let r = anchor + i as f64 * h;
                    if r <= 0.0 {
                        continue;
                    }
                    let p = Point::from_parts_unchecked(space, Coords::Spider { leg, r });
                    if within(&p) {
                        f(p);
                    }
                }
            }
        }
        (SpaceSpec::OpenBook { pages }, &Coords::OpenBook { page: cp, s: sc, t: tc }) => {
            let srow = |t: f64, page: usize, f: &mut dyn FnMut(Point)| {
                for k in -steps..=steps {
                    let p = Point::from_parts_unchecked(space, Coords::OpenBook { page, s: sc + k as f64 * h, t });
                    if within(&p) {
                        f(p);
                    }
                }
            };
            srow(0.0, 0, f);
            for page in 0..pages {
                let (anchor, lo) = if page == cp || tc == 0.0 { (tc, -steps) } else { (0.0, 1) };
                for i in lo..=steps {
                    let t = anchor + i as f64 * h;
                    if t > 0.0 {
                        srow(t, page, f);
                    }
                }
            }
        }
        (SpaceSpec::FlatCone { circumference: alpha }, &Coords::FlatCone { r: rc, phi: pc }) => {
            let apex = Point::origin(space);
            if within(&apex) {
                f(apex);
            }
            let lo = -(rc / h).floor() as i64;
            for i in lo..=steps {
                let r = rc + i as f64 * h;
                if r <= 0.0 {
                    continue;
                }
                let full = rc == 0.0 || r + rc <= radius;
                let half = if full {
                    alpha / 2.0
                } else {
                    let c = (r * r + rc * rc - radius * radius) / (2.0 * r * rc);
                    if c > 1.0 {
                        continue;
                    }
                    c.acos().min(alpha / 2.0)
                };
                let delta = h / r;
                let n = (half / delta).floor() as i64;
                let (klo, khi) = if full { (0, ((alpha / delta).ceil() as i64 - 1).max(0)) } else { (-n, n) };
                for k in klo..=khi {
                    let phi = crate::geometry::wrap_angle(pc + k as f64 * delta, alpha);
                    let p = Point::from_parts_unchecked(space, Coords::FlatCone { r, phi });
                    if within(&p) {
                        f(p);
                    }
                }
            }
        }
        _ => unreachable!("point coordinates always match their space"),
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    // the endpoints matter when the minimum sits on a boundary such as the apex
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Minimize `F` along a one-parameter family `t ↦ at(t)` on `[lo, hi]`.
///
/// Golden-section search brackets the minimum to about the square root of
/// machine precision, since `F` is flat there; Newton steps on the exact
/// directional derivative then finish the job. `slope(t)` is `dF/dt` via the
/// chart direction of increasing `t`, or `None` at singular points.
fn line_min(
    mu: &DiscreteMeasure,
    lo: f64,
    hi: f64,
    at: &dyn Fn(f64) -> Point,
    slope: &dyn Fn(f64) -> Option<f64>,
) -> f64 {
    let (mut t, _) = golden(|t| frechet_unchecked(mu, &at(t)), lo, hi);
    let delta = 1e-6 * (hi - lo).max(1e-9);
    for _ in 0..4 {
        let Some(g0) = slope(t) else { break };
        if g0 == 0.0 {
            break;
        }
        let step = if t + delta <= hi { delta } else { -delta };
        let Some(g1) = slope(t + step) else { break };
        let curvature = (g1 - g0) / step;
        if curvature.is_nan() || curvature <= 0.0 {
            break;
        }
        let next = (t - g0 / curvature).clamp(lo, hi);
        match slope(next) {
            Some(g) if g.abs() < g0.abs() => t = next,
            // a singular endpoint such as the apex is judged by F instead
            None if frechet_unchecked(mu, &at(next)) <= frechet_unchecked(mu, &at(t)) => t = next,
            _ => break,
        }
    }
    t
}

/// Derivative of `F` at `p` along the chart direction `unit`, scaled by `scale`.
fn chart_slope(mu: &DiscreteMeasure, p: &Point, unit: Vec<f64>, scale: f64) -> Option<f64> {
    if !p.is_smooth() {
        return None;
    }
    let d = Direction::chart(p.clone(), unit).ok()?;
    directional_derivative(mu, p, &TangentVector::unit(d)).ok().map(|g| g * scale)
}

/// Refined candidates around the best grid point.
fn refine(mu: &DiscreteMeasure, best: &Point, h: f64, rounds: usize) -> Vec<Point> {
    let space = best.space();
    let w = 2.0 * h;
    let mut out = Vec::new();
    match (space, best.coords()) {
        (SpaceSpec::Euclidean { dim }, Coords::Euclidean(x0)) => {
            let mut x = x0.clone();
            for _ in 0..rounds {
                for i in 0..dim {
                    let moved = |t: f64| {
                        let mut y = x.clone();
                        y[i] = t;
                        Point::from_parts_unchecked(space, Coords::Euclidean(y))
                    };
                    let mut e = vec![0.0; dim];
                    e[i] = 1.0;
                    x[i] = line_min(mu, x[i] - w, x[i] + w, &moved, &|t| chart_slope(mu, &moved(t), e.clone(), 1.0));
                }
            }
            out.push(Point::from_parts_unchecked(space, Coords::Euclidean(x)));
        }
        (SpaceSpec::Spider { legs }, &Coords::Spider { leg, r }) => {
            let on_leg = |l: usize, lo: f64, hi: f64| {
                let at = |r: f64| Point::new(space, Coords::Spider { leg: l, r: r.max(0.0) }).expect("finite radius");
                let r = line_min(mu, lo, hi, &at, &|r| chart_slope(mu, &at(r), vec![1.0], 1.0));
                at(r)
            };
            out.push(Point::origin(space));
            if r > w {
                out.push(on_leg(leg, r - w, r + w));
            } else {
                for l in 0..legs {
                    out.push(on_leg(l, 0.0, r + w));
                }
            }
        }
        (SpaceSpec::OpenBook { pages }, &Coords::OpenBook { page, s, t }) => {
            let within_page = |page: usize, s0: f64, t0: f64| {
                let (mut s, mut t) = (s0, t0);
                for _ in 0..rounds {
                    let along = |x: f64| Point::from_parts_unchecked(space, Coords::OpenBook { page, s: x, t });
                    s = line_min(mu, s - w, s + w, &along, &|x| chart_slope(mu, &along(x), vec![1.0, 0.0], 1.0));
                    let up =
                        |y: f64| Point::new(space, Coords::OpenBook { page, s, t: y.max(0.0) }).expect("finite height");
                    t = line_min(mu, (t - w).max(0.0), t + w, &up, &|y| chart_slope(mu, &up(y), vec![0.0, 1.0], 1.0));
                }
                Point::new(space, Coords::OpenBook { page, s: s + 0.0, t }).expect("nonnegative height")
            };
            let spine = |x: f64| Point::from_parts_unchecked(space, Coords::OpenBook { page: 0, s: x + 0.0, t: 0.0 });
            // the spine is not a chart, but F restricted to it is an exact quadratic
            // and golden search plus one secant step on F suffices
            let spine_s = spine_min(mu, s - w, s + w, &spine);
            out.push(spine(spine_s));
            if t > w {
                out.push(within_page(page, s, t));
            } else {
                for p in 0..pages {
                    out.push(within_page(p, s, t.max(h)));
                }
            }
        }
        (SpaceSpec::FlatCone { .. }, &Coords::FlatCone { r, phi }) => {
            out.push(Point::origin(space));
            if r > 0.0 {
                let (mut r, mut phi) = (r, phi);
                for _ in 0..rounds {
                    let radial =
                        |x: f64| Point::new(space, Coords::FlatCone { r: x.max(0.0), phi }).expect("finite radius");
                    r = line_min(mu, (r - w).max(0.0), r + w, &radial, &|x| {
                        chart_slope(mu, &radial(x), vec![1.0, 0.0], 1.0)
                    });
                    if r == 0.0 {
                        break;
                    }
                    let dphi = w / r;
                    let angular = |a: f64| Point::new(space, Coords::FlatCone { r, phi: a }).expect("finite angle");
                    phi = line_min(mu, phi - dphi, phi + dphi, &angular, &|a| {
                        chart_slope(mu, &angular(a), vec![0.0, 1.0], r)
                    });
                }
                out.push(Point::new(space, Coords::FlatCone { r, phi }).expect("finite polar point"));
            }
        }
        _ => unreachable!("point coordinates always match their space"),
    }
    out
}

/// Minimizer of the quadratic `F` along the spine, from three samples.
fn spine_min(mu: &DiscreteMeasure, lo: f64, hi: f64, at: &dyn Fn(f64) -> Point) -> f64 {
    let (t, _) = golden(|x| frechet_unchecked(mu, &at(x)), lo, hi);
    let d = 0.25 * (hi - lo);
    let (a, b, c) = (t - d, t, t + d);
    let (fa, fb, fc) = (frechet_unchecked(mu, &at(a)), frechet_unchecked(mu, &at(b)), frechet_unchecked(mu, &at(c)));
    let denom = fa - 2.0 * fb + fc;
    if denom <= 0.0 {
        return t;
    }
    let vertex = (b + d * (fa - fc) / (2.0 * denom)).clamp(lo, hi);
    if frechet_unchecked(mu, &at(vertex)) <= frechet_unchecked(mu, &at(t)) {
        vertex
    } else {
        t
    }
}

/// Directions leaving the stratum of a singular point.
pub(crate) fn normal_directions(p: &Point) -> Vec<Direction> {
    match (p.space(), p.coords()) {
        (SpaceSpec::Spider { legs }, Coords::Spider { r, .. }) if *r == 0.0 => {
            (0..legs).map(|l| Direction::leg(p.clone(), l).expect("leg index in range")).collect()
        }
        (SpaceSpec::OpenBook { pages }, Coords::OpenBook { t, .. }) if *t == 0.0 => {
            (0..pages).map(|pg| Direction::page(p.clone(), pg, PI / 2.0).expect("page index in range")).collect()
        }
        (SpaceSpec::FlatCone { circumference }, Coords::FlatCone { r, .. }) if *r == 0.0 => {
            let n = (circumference / 1e-2).ceil() as usize;
            (0..n)
                .map(|i| Direction::circle(p.clone(), circumference * i as f64 / n as f64).expect("finite angle"))
                .collect()
        }
        _ => Vec::new(),
    }
}
