//! Checks that a measure is well localized around its Fréchet mean: the mean
//! is certified unique, the Fréchet function is midpoint convex on a ball
//! around it, and every atom has a log map that the exponential map retraces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{frechet_mean, frechet_unchecked, DiscreteMeasure, MeanConfig, MeanDiagnostics};
use crate::geometry::{distance_unchecked, exp_map, geodesic_point, log_map, Coords, Point, SpaceSpec};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    pub mean: MeanConfig,
    /// Radius of the ball on which convexity is sampled.
    pub convexity_radius: f64,
    pub convexity_pairs: usize,
    pub convexity_tol: f64,
    /// Tolerance on `d(exp(log x), x)`, relative to `1 + d(mean, x)`.
    pub retrace_tol: f64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        LocalizationConfig {
            mean: MeanConfig::default(),
            convexity_radius: 1.0,
            convexity_pairs: 256,
            convexity_tol: 1e-10,
            retrace_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessCheck {
    pub pass: bool,
    pub runner_up_gap: Option<f64>,
    pub gap_tol: f64,
    /// Error text when the solver itself failed.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub pass: bool,
    pub radius: f64,
    pub pairs: usize,
    /// Largest `F(mid) − (F(a) + F(b))/2` seen.
    pub worst_excess: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogCheck {
    pub pass: bool,
    pub worst_retrace_error: f64,
    pub failing_atoms: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub pass: bool,
    pub mean: Option<MeanDiagnostics>,
    pub uniqueness: UniquenessCheck,
    pub convexity: Option<ConvexityCheck>,
    pub log_maps: Option<LogCheck>,
}

pub fn validate_localized(mu: &DiscreteMeasure, cfg: &LocalizationConfig) -> LocalizationReport {
    let diag = match frechet_mean(mu, &cfg.mean) {
        Ok(d) => d,
        Err(e) => {
            return LocalizationReport {
                pass: false,
                mean: None,
                uniqueness: UniquenessCheck {
                    pass: false,
                    runner_up_gap: None,
                    gap_tol: cfg.mean.gap_tol,
                    error: Some(e.to_string()),
                },
                convexity: None,
                log_maps: None,
            }
        }
    };
    let uniqueness = UniquenessCheck {
        pass: diag.unique(cfg.mean.gap_tol),
        runner_up_gap: diag.certificate.runner_up_gap,
        gap_tol: cfg.mean.gap_tol,
        error: None,
    };
    let convexity = check_convexity(mu, &diag.mean, cfg);
    let log_maps = check_log_maps(mu, &diag.mean, cfg.retrace_tol);
    LocalizationReport {
        pass: uniqueness.pass && convexity.pass && log_maps.pass,
        mean: Some(diag),
        uniqueness,
        convexity: Some(convexity),
        log_maps: Some(log_maps),
    }
}

fn check_convexity(mu: &DiscreteMeasure, center: &Point, cfg: &LocalizationConfig) -> ConvexityCheck {
    let mut rng = substream(cfg.mean.seed, &[0x434f_4e56]);
    let radius = cfg.convexity_radius;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..cfg.convexity_pairs {
        let a = random_point_near(center, radius, &mut rng);
        let b = random_point_near(center, radius, &mut rng);
        let mid = geodesic_point(&a, &b, 0.5).expect("points share a space");
        let (fa, fb, fm) = (frechet_unchecked(mu, &a), frechet_unchecked(mu, &b), frechet_unchecked(mu, &mid));
        let excess = fm - 0.5 * (fa + fb);
        if excess > worst {
            worst = excess;
            if excess > cfg.convexity_tol * (1.0 + fa.max(fb)) {
                witness = Some((a.to_array(), b.to_array()));
            }
        }
    }
    ConvexityCheck { pass: witness.is_none(), radius, pairs: cfg.convexity_pairs, worst_excess: worst, witness }
}

fn check_log_maps(mu: &DiscreteMeasure, mean: &Point, tol: f64) -> LogCheck {
    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        let back = log_map(mean, x).and_then(|v| exp_map(mean, &v));
        match back {
            Ok(y) => {
                let err = distance_unchecked(x, &y);
                worst = worst.max(err);
                if err > tol * (1.0 + distance_unchecked(mean, x)) {
                    failing.push(i);
                }
            }
            Err(_) => failing.push(i),
        }
    }
    LogCheck { pass: failing.is_empty(), worst_retrace_error: worst, failing_atoms: failing }
}

/// A random point within `radius` of `center`, by rejection from a
/// coordinate box that contains the ball.
pub(crate) fn random_point_near<R: Rng + ?Sized>(center: &Point, radius: f64, rng: &mut R) -> Point {
    let space = center.space();
    for _ in 0..1000 {
        let coords = match (space, center.coords()) {
            (SpaceSpec::Euclidean { .. }, Coords::Euclidean(c)) => {
                Coords::Euclidean(c.iter().map(|ci| ci + radius * rng.random_range(-1.0..=1.0)).collect())
            }
            (SpaceSpec::Spider { legs }, Coords::Spider { r, .. }) => {
                Coords::Spider { leg: rng.random_range(0..legs), r: rng.random_range(0.0..=r + radius) }
            }
            (SpaceSpec::OpenBook { pages }, Coords::OpenBook { s, t, .. }) => Coords::OpenBook {
                page: rng.random_range(0..pages),
                s: s + radius * rng.random_range(-1.0..=1.0),
                t: rng.random_range(0.0..=t + radius),
            },
            (SpaceSpec::FlatCone { circumference }, Coords::FlatCone { r, .. }) => {
                Coords::FlatCone { r: rng.random_range(0.0..=r + radius), phi: rng.random_range(0.0..circumference) }
            }
            _ => unreachable!("point coordinates always match their space"),
        };
        let p = Point::new(space, coords).expect("sampled coordinates are valid");
        if distance_unchecked(center, &p) <= radius {
            return p;
        }
    }
    center.clone()
}
