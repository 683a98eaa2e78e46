#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratclt::harness::ExperimentConfig;
use stratclt::{Point, SpaceSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn model_spaces() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::euclidean(2).unwrap(),
        SpaceSpec::euclidean(3).unwrap(),
        SpaceSpec::spider(3).unwrap(),
        SpaceSpec::spider(5).unwrap(),
        SpaceSpec::open_book(2).unwrap(),
        SpaceSpec::open_book(3).unwrap(),
        SpaceSpec::flat_cone(2.0 * PI).unwrap(),
        SpaceSpec::flat_cone(3.0 * PI).unwrap(),
    ]
}

pub fn singular_spaces() -> Vec<SpaceSpec> {
    model_spaces().into_iter().filter(|s| !matches!(s, SpaceSpec::Euclidean { .. })).collect()
}

/// Random point with radius / height up to 2, landing on a lower stratum
/// about one time in ten.
pub fn random_point<R: Rng>(space: SpaceSpec, rng: &mut R) -> Point {
    let low = rng.random_bool(0.1);
    let radius = |rng: &mut R| if low { 0.0 } else { rng.random_range(0.0..2.0) };
    match space {
        SpaceSpec::Euclidean { dim } => {
            Point::euclidean(space, (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
        }
        SpaceSpec::Spider { legs } => {
            let leg = rng.random_range(0..legs);
            let r = radius(rng);
            Point::spider(space, leg, r).unwrap()
        }
        SpaceSpec::OpenBook { pages } => {
            let page = rng.random_range(0..pages);
            let s = rng.random_range(-2.0..2.0);
            let t = radius(rng);
            Point::open_book(space, page, s, t).unwrap()
        }
        SpaceSpec::FlatCone { circumference } => {
            let r = radius(rng);
            let phi = rng.random_range(0.0..circumference);
            Point::flat_cone(space, r, phi).unwrap()
        }
    }
}

/// Random point at distance at least `margin` from every singular stratum.
pub fn random_smooth_point<R: Rng>(space: SpaceSpec, rng: &mut R, margin: f64) -> Point {
    match space {
        SpaceSpec::Euclidean { .. } => random_point(space, rng),
        SpaceSpec::Spider { legs } => {
            Point::spider(space, rng.random_range(0..legs), rng.random_range(margin..2.0)).unwrap()
        }
        SpaceSpec::OpenBook { pages } => Point::open_book(
            space,
            rng.random_range(0..pages),
            rng.random_range(-2.0..2.0),
            rng.random_range(margin..2.0),
        )
        .unwrap(),
        SpaceSpec::FlatCone { circumference } => {
            Point::flat_cone(space, rng.random_range(margin..2.0), rng.random_range(0.0..circumference)).unwrap()
        }
    }
}

pub fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples")
}

/// Every bundled experiment config, by file stem.
pub fn example_configs() -> Vec<(String, PathBuf, ExperimentConfig)> {
    let mut out: Vec<_> = std::fs::read_dir(examples_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| {
            let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), p, cfg)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn example(name: &str) -> ExperimentConfig {
    let p = examples_dir().join(format!("{name}.json"));
    ExperimentConfig::from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub mod checks {
    //! Randomized geometry checks returning the worst violation seen.

    use super::*;
    use stratclt::geometry::{
        angular_distance, angular_pairing, conical_distance, distance, exp_map, geodesic_point, log_map, scale,
    };

    pub fn metric(space: SpaceSpec, seed: u64, cases: usize) -> f64 {
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let p = random_point(space, &mut rng);
            let q = random_point(space, &mut rng);
            let r = random_point(space, &mut rng);
            let pq = distance(&p, &q).unwrap();
            let qp = distance(&q, &p).unwrap();
            let pr = distance(&p, &r).unwrap();
            let qr = distance(&q, &r).unwrap();
            worst = worst.max((pq - qp).abs()).max(-pq).max(pq - pr - qr);
            worst = worst.max(distance(&p, &p.clone()).unwrap());
            if p != q && pq == 0.0 {
                worst = f64::INFINITY;
            }
        }
        worst
    }

    /// Excess of `d(p, mid(q, r))` over the Euclidean comparison median.
    pub fn cat0(space: SpaceSpec, seed: u64, cases: usize) -> f64 {
        let mut rng = rng(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..cases {
            let p = random_point(space, &mut rng);
            let q = random_point(space, &mut rng);
            let r = random_point(space, &mut rng);
            let m = geodesic_point(&q, &r, 0.5).unwrap();
            let (a, b, c) = (distance(&p, &q).unwrap(), distance(&p, &r).unwrap(), distance(&q, &r).unwrap());
            let median = (0.5 * a * a + 0.5 * b * b - 0.25 * c * c).max(0.0).sqrt();
            worst = worst.max(distance(&p, &m).unwrap() - median);
        }
        worst
    }

    pub fn cauchy_schwarz(space: SpaceSpec, seed: u64, cases: usize) -> f64 {
        let mut rng = rng(seed);
        let mut worst = f64::NEG_INFINITY;
        let mut done = 0;
        while done < cases {
            let base = random_point(space, &mut rng);
            let (Ok(v), Ok(w)) =
                (log_map(&base, &random_point(space, &mut rng)), log_map(&base, &random_point(space, &mut rng)))
            else {
                continue;
            };
            worst = worst.max(angular_pairing(&v, &w).unwrap().abs() - v.length() * w.length());
            done += 1;
        }
        worst
    }

    pub fn log_exp_roundtrip(space: SpaceSpec, seed: u64, cases: usize) -> f64 {
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let base = random_point(space, &mut rng);
            let x = random_point(space, &mut rng);
            if let Ok(v) = log_map(&base, &x) {
                worst = worst.max(distance(&exp_map(&base, &v).unwrap(), &x).unwrap());
            }
        }
        worst
    }

    /// Error of `d(tV, tW) = t d(V, W)` relative to `t max(|V|, |W|)`.
    pub fn homogeneity(space: SpaceSpec, seed: u64, cases: usize) -> f64 {
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let base = random_point(space, &mut rng);
            let (Ok(v), Ok(w)) =
                (log_map(&base, &random_point(space, &mut rng)), log_map(&base, &random_point(space, &mut rng)))
            else {
                continue;
            };
            let t = rng.random_range(0.0..5.0);
            let d = conical_distance(&v, &w).unwrap();
            let dt = conical_distance(&scale(&v, t).unwrap(), &scale(&w, t).unwrap()).unwrap();
            // the scaled lengths are already rounded, so compare against their magnitude
            let size = t * v.length().max(w.length());
            worst = worst.max((dt - t * d).abs() / size.max(1e-300));
        }
        worst
    }

    /// `|d_cone(log x, log y) − d(x, y)|` at a spider apex.
    pub fn spider_apex_cone(legs: usize, seed: u64, cases: usize) -> f64 {
        let space = SpaceSpec::spider(legs).unwrap();
        let apex = Point::origin(space);
        let mut rng = rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let x = random_point(space, &mut rng);
            let y = random_point(space, &mut rng);
            let d = conical_distance(&log_map(&apex, &x).unwrap(), &log_map(&apex, &y).unwrap()).unwrap();
            worst = worst.max((d - distance(&x, &y).unwrap()).abs());
        }
        worst
    }

    /// Errors of the first-order angle quotient at h = 1e-2, 1e-3, 1e-4 for a
    /// random pair of geodesics from a smooth point.
    pub fn angle_quotient_errors<R: Rng>(space: SpaceSpec, rng: &mut R) -> [f64; 3] {
        loop {
            let base = random_smooth_point(space, rng, 0.2);
            let (Ok(v), Ok(w)) = (log_map(&base, &random_point(space, rng)), log_map(&base, &random_point(space, rng)))
            else {
                continue;
            };
            if v.is_zero() || w.is_zero() {
                continue;
            }
            let (u1, u2) = (v.direction().unwrap().clone(), w.direction().unwrap().clone());
            let cos = angular_distance(&u1, &u2).unwrap().min(PI).cos();
            let mut out = [0.0; 3];
            for (o, h) in out.iter_mut().zip([1e-2, 1e-3, 1e-4]) {
                let a = exp_map(&base, &stratclt::TangentVector::new(u1.clone(), h).unwrap()).unwrap();
                let b = exp_map(&base, &stratclt::TangentVector::new(u2.clone(), h).unwrap()).unwrap();
                let d = distance(&a, &b).unwrap();
                *o = ((2.0 * h * h - d * d) / (2.0 * h * h) - cos).abs();
            }
            return out;
        }
    }
}

pub mod bounds {
    //! Exact finite-sum checks of the basic tangent-field estimates.

    use stratclt::harness::Experiment;

    /// Largest `lhs − rhs` of each estimate over atoms and net pairs (or triples).
    #[derive(Debug, Default, Clone, Copy)]
    pub struct Excess {
        pub pointwise: f64,
        pub second_moment: f64,
        /// `|Σ(U,V) − Σ(U,W)| ≤ 4 E[d²] d_s(V,W)`, the form the argument establishes.
        pub covariance: f64,
        /// The same with `(E d²)^{1/2}` in place of `E d²`.
        pub covariance_sqrt_form: f64,
    }

    pub fn excess(exp: &Experiment) -> Excess {
        let table = exp.table();
        let net = exp.net();
        let cov = exp.cov();
        let w = table.weights();
        let len = table.log_lengths();
        let tau = table.tau();
        let e1: f64 = w.iter().zip(len).map(|(w, l)| w * l).sum();
        let e2: f64 = w.iter().zip(len).map(|(w, l)| w * l * l).sum();
        let m = net.len();
        let mut out = Excess { pointwise: f64::NEG_INFINITY, second_moment: f64::NEG_INFINITY, ..Default::default() };
        out.covariance = f64::NEG_INFINITY;
        out.covariance_sqrt_form = f64::NEG_INFINITY;
        for u in 0..m {
            for v in 0..m {
                let d = net.distance(u, v);
                let mut second = 0.0;
                for (i, row) in tau.iter().enumerate() {
                    let diff = row[v] - row[u];
                    out.pointwise = out.pointwise.max(diff.abs() - (e1 + len[i]) * d);
                    second += w[i] * diff * diff;
                }
                out.second_moment = out.second_moment.max(second - 4.0 * e2 * d * d);
                for x in 0..m {
                    let lhs = (cov.get(u, v) - cov.get(u, x)).abs();
                    let dv = net.distance(v, x);
                    out.covariance = out.covariance.max(lhs - 4.0 * e2 * dv);
                    out.covariance_sqrt_form = out.covariance_sqrt_form.max(lhs - 4.0 * e2.sqrt() * dv);
                }
            }
        }
        out
    }
}
