//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use stratclt::fields::tangent_mean;
use stratclt::geometry::Direction;
use stratclt::harness::{run_clt_experiment, CltReport, Experiment, TestKind};
use stratclt::measures::{directional_derivative, escape_cone_check, frechet_mean, MeanConfig};
use stratclt::regularity::dimension_constant;
use stratclt::{DiscreteMeasure, Point, SpaceSpec, TangentVector};

type Outcome = (bool, String);

fn worst(items: impl IntoIterator<Item = (String, f64, f64)>) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (what, value, tol) in items {
        if value.is_nan() || value > tol {
            ok = false;
            detail.push(format!("{what} = {value:.3e} > {tol:e}"));
        }
    }
    (ok, if ok { "all within tolerance".into() } else { detail.join("; ") })
}

fn geometry_axioms() -> Outcome {
    use common::checks::*;
    let mut items = Vec::new();
    for (k, s) in common::model_spaces().into_iter().enumerate() {
        let seed = 1000 + k as u64;
        items.push((format!("{s} metric"), metric(s, seed, 10_000), 1e-10));
        items.push((format!("{s} log/exp"), log_exp_roundtrip(s, seed, 10_000), 1e-10));
        items.push((format!("{s} Cauchy-Schwarz"), cauchy_schwarz(s, seed, 100_000), 1e-12));
        items.push((format!("{s} homogeneity"), homogeneity(s, seed, 10_000), 1e-12));
        if !matches!(s, SpaceSpec::Euclidean { .. }) {
            items.push((format!("{s} CAT(0)"), cat0(s, seed, 10_000), 1e-9));
        }
    }
    for legs in [3, 5] {
        items.push((format!("spider({legs}) apex cone"), spider_apex_cone(legs, 9, 10_000), 1e-12));
    }
    worst(items)
}

fn uniform_spider() -> (SpaceSpec, DiscreteMeasure) {
    let s = SpaceSpec::spider(3).unwrap();
    let mu = DiscreteMeasure::uniform(s, (0..3).map(|l| Point::spider(s, l, 1.0).unwrap()).collect()).unwrap();
    (s, mu)
}

fn spider_oracle() -> Outcome {
    let (s, mu) = uniform_spider();
    let apex = Point::origin(s);
    // enumeration over the three atoms: ⟨log x_j, leg_i⟩ = +1 on the same leg, −1 otherwise
    let pair = |i: usize, j: usize| if i == j { 1.0 } else { -1.0 };
    let m_oracle: Vec<f64> = (0..3).map(|i| (0..3).map(|j| pair(i, j) / 3.0).sum()).collect();
    let tau = |i: usize, j: usize| pair(i, j) - m_oracle[i];
    let cov_oracle = |i: usize, k: usize| (0..3).map(|j| tau(i, j) * tau(k, j) / 3.0).sum::<f64>();

    let d = frechet_mean(&mu, &MeanConfig::default()).unwrap();
    let mut items = vec![
        ("mean is the apex".to_string(), if d.mean == apex { 0.0 } else { 1.0 }, 0.0),
        (
            "runner-up gap positive".to_string(),
            if d.certificate.runner_up_gap.is_some_and(|g| g > 0.0) { 0.0 } else { 1.0 },
            0.0,
        ),
    ];
    let cfg = common::example("spider3_uniform");
    let exp = Experiment::prepare(cfg).unwrap();
    for (i, &oracle) in m_oracle.iter().enumerate() {
        let v = TangentVector::unit(Direction::leg(apex.clone(), i).unwrap());
        let m = tangent_mean(&mu, &apex, &v).unwrap();
        items.push((format!("m(leg{i}) + 1/3"), (m + 1.0 / 3.0).abs(), 1e-12));
        items.push((format!("m(leg{i}) vs enumeration"), (m - oracle).abs(), 1e-12));
        let g = directional_derivative(&mu, &apex, &v).unwrap();
        items.push((format!("grad F(leg{i}) - 1/3"), (g - 1.0 / 3.0).abs(), 1e-12));
        for k in 0..3 {
            let exact = if i == k { 8.0 / 9.0 } else { -4.0 / 9.0 };
            items.push((format!("Σ[{i}{k}]"), (exp.cov().get(i, k) - exact).abs(), 1e-12));
            items.push((format!("Σ[{i}{k}] vs enumeration"), (exp.cov().get(i, k) - cov_oracle(i, k)).abs(), 1e-12));
        }
    }
    let mut ev: Vec<f64> = exp.cov().eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    for (k, want) in [4.0 / 3.0, 4.0 / 3.0, 0.0].into_iter().enumerate() {
        items.push((format!("eigenvalue {k}"), (ev[k] - want).abs(), 1e-12));
    }
    worst(items)
}

fn sticky_dichotomy() -> Outcome {
    let s = SpaceSpec::spider(3).unwrap();
    let weighted = DiscreteMeasure::new(
        s,
        vec![(Point::spider(s, 1, 1.0).unwrap(), 0.8), (Point::spider(s, 2, 1.0).unwrap(), 0.2)],
    )
    .unwrap();
    let d = frechet_mean(&weighted, &MeanConfig::default()).unwrap();
    let target = Point::spider(s, 1, 0.6).unwrap();
    let off = stratclt::geometry::distance(&d.mean, &target).unwrap();
    let mut items = vec![("weighted mean offset".to_string(), off, 1e-3)];
    for u in [1.0, -1.0] {
        let v = TangentVector::unit(Direction::chart(d.mean.clone(), vec![u]).unwrap());
        let e = escape_cone_check(&weighted, &d.mean, &v, 1e-6).unwrap();
        let bad = if e.contains && !e.sign_violation { 0.0 } else { 1.0 };
        items.push((format!("escape cone along {u:+}"), bad, 0.0));
    }
    items.push(("weighted mean not sticky".into(), if d.sticky { 1.0 } else { 0.0 }, 0.0));

    let (_, uniform) = uniform_spider();
    let u = frechet_mean(&uniform, &MeanConfig::default()).unwrap();
    items.push(("uniform mean sticky".into(), if u.sticky { 0.0 } else { 1.0 }, 0.0));
    for l in 0..3 {
        let v = TangentVector::unit(Direction::leg(Point::origin(s), l).unwrap());
        let g = directional_derivative(&uniform, &u.mean, &v).unwrap();
        items.push((format!("1/3 - grad F(leg{l})"), 1.0 / 3.0 - g, 1e-9));
    }
    worst(items)
}

fn basic_estimates() -> Outcome {
    let mut items = Vec::new();
    let mut notes = Vec::new();
    for (name, _, cfg) in common::example_configs() {
        let e = common::bounds::excess(&Experiment::prepare(cfg).unwrap());
        items.push((format!("{name} pointwise"), e.pointwise, 1e-10));
        items.push((format!("{name} second moment"), e.second_moment, 1e-10));
        items.push((format!("{name} covariance"), e.covariance, 1e-10));
        if e.covariance_sqrt_form > 1e-10 {
            notes.push(format!("{name}: sqrt-form covariance bound exceeded by {:.3e}", e.covariance_sqrt_form));
        }
    }
    let (ok, detail) = worst(items);
    let notes = if notes.is_empty() { "sqrt-form covariance bound also holds".to_string() } else { notes.join("; ") };
    (ok, format!("{detail} ({notes})"))
}

struct Reports(BTreeMap<String, CltReport>);

impl Reports {
    fn compute() -> Self {
        Reports(
            common::example_configs()
                .into_iter()
                .map(|(name, _, cfg)| {
                    let r = run_clt_experiment(cfg).unwrap();
                    (name, r)
                })
                .collect(),
        )
    }
}

fn finite_dimensional_clt(reports: &Reports) -> Outcome {
    let mut items = Vec::new();
    let at = |name: &str| reports.0[name].per_n.iter().find(|p| p.n == 10_000).expect("n = 10^4 present").clone();
    let e = at("euclidean_pm1");
    items.push(("euclidean KS".to_string(), e.ks.as_ref().unwrap().max, 0.03 - f64::EPSILON));
    let s = at("spider3_uniform");
    items.push(("spider per-leg KS".into(), s.ks.as_ref().unwrap().max, 0.03 - f64::EPSILON));
    items.push(("spider Mahalanobis KS".into(), s.mahalanobis.as_ref().unwrap().ks, 0.05 - f64::EPSILON));
    items.push(("spider covariance sup error".into(), s.covariance.as_ref().unwrap().sup_error, 0.05 - f64::EPSILON));
    let exp = Experiment::prepare(common::example("spider3_uniform")).unwrap();
    let idx = exp.config().sample_sizes.iter().position(|&n| n == 10_000).unwrap();
    let rows = exp.replicate_fields(idx);
    let leg_sum = rows.iter().map(|r| r.iter().sum::<f64>().abs()).fold(0.0, f64::max);
    items.push(("spider leg-sum identity".into(), leg_sum, 1e-10));
    items.push(("spider replicates".into(), (5000 - rows.len() as i64).abs() as f64, 0.0));
    let (ok, detail) = worst(items);
    (
        ok,
        format!(
            "{detail} (KS {:.4} / {:.4}, Mahalanobis {:.4}, cov {:.4}, leg sum {leg_sum:.1e})",
            e.ks.as_ref().unwrap().max,
            s.ks.as_ref().unwrap().max,
            s.mahalanobis.as_ref().unwrap().ks,
            s.covariance.as_ref().unwrap().sup_error
        ),
    )
}

fn moment_bounds(reports: &Reports) -> Outcome {
    let mut items = Vec::new();
    for (name, r) in &reports.0 {
        let sizes: Vec<usize> = r.per_n.iter().map(|p| p.n).collect();
        items.push((format!("{name} sample sizes"), if sizes == [100, 1000, 10_000] { 0.0 } else { 1.0 }, 0.0));
        for p in &r.per_n {
            let m = p.moments.as_ref().unwrap();
            let excess = m
                .rows
                .iter()
                .map(|x| x.monte_carlo - x.bound - 3.0 * x.standard_error)
                .fold(f64::NEG_INFINITY, f64::max);
            items.push((format!("{name} n={} fourth moment", p.n), excess, 0.0));
            let inc = p.increments.as_ref().unwrap();
            let excess = inc
                .rows
                .iter()
                .map(|x| x.monte_carlo - x.bound - 3.0 * x.standard_error)
                .fold(f64::NEG_INFINITY, f64::max);
            items.push((format!("{name} n={} increments", p.n), excess, 0.0));
        }
    }
    worst(items)
}

fn martingale(reports: &Reports) -> Outcome {
    let mut items = Vec::new();
    for (name, r) in &reports.0 {
        let m = r.martingale.as_ref().unwrap();
        items.push((
            format!("{name} (n,k,R)"),
            if (m.n, m.k, m.replicates) == (1000, 1000, 5000) { 0.0 } else { 1.0 },
            0.0,
        ));
        let excess = m.rows.iter().map(|x| x.mean_increment.abs() - x.bound).fold(f64::NEG_INFINITY, f64::max);
        items.push((format!("{name} residual"), excess, 1e-12));
        let flagged =
            m.normalization_note.contains("not a martingale") && (m.normalized_expected - 0.5f64.sqrt()).abs() < 1e-15;
        items.push((format!("{name} normalization flag"), if flagged { 0.0 } else { 1.0 }, 0.0));
    }
    worst(items)
}

fn covering() -> Outcome {
    let mut items = Vec::new();
    let mut shown = Vec::new();
    let mut check = |label: String, base: Point, range: Option<(f64, f64)>| {
        let p = dimension_constant(&base, 10).unwrap();
        match range {
            None => {
                let constant = p.counts.iter().all(|&c| c == p.counts[0]);
                items.push((format!("{label} constant counts"), if constant { 0.0 } else { 1.0 }, 0.0));
                items.push((format!("{label} d"), p.d_estimate.abs(), 0.0));
            }
            Some((lo, hi)) => {
                items.push((format!("{label} d below {hi}"), p.d_estimate - hi, 0.0));
                items.push((format!("{label} d above {lo}"), lo - p.d_estimate, 0.0));
            }
        }
        items.push((format!("{label} ≤ stratum sum"), p.d_estimate - p.stratum_sum as f64, 0.0));
        shown.push(format!("{label} {:.3}", p.d_estimate));
    };
    for k in [3, 4, 5] {
        check(format!("spider({k})"), Point::origin(SpaceSpec::spider(k).unwrap()), None);
    }
    check("flat_cone(3π)".into(), Point::origin(SpaceSpec::flat_cone(3.0 * PI).unwrap()), Some((0.9, 1.1)));
    let book = SpaceSpec::open_book(3).unwrap();
    check("open_book(3) spine".into(), Point::open_book(book, 0, 0.0, 0.0).unwrap(), Some((0.9, 1.1)));
    let (ok, detail) = worst(items);
    (ok, format!("{detail} ({})", shown.join(", ")))
}

fn tightness() -> Outcome {
    let mut cfg = common::example("openbook3_five");
    cfg.tests = vec![TestKind::Modulus];
    let r = run_clt_experiment(cfg).unwrap();
    let m = r.modulus.unwrap();
    let mut items = Vec::new();
    items.push(("(n, R)".to_string(), if (m.n, m.replicates) == (1000, 500) { 0.0 } else { 1.0 }, 0.0));
    let radii_ok = m.table.radii.first() == Some(&0.25) && m.table.radii.last() == Some(&(1.0 / 64.0));
    items.push(("radii 2^-2..2^-6".into(), if radii_ok { 0.0 } else { 1.0 }, 0.0));
    items.push(("monotone within MC error".into(), if m.monotone { 0.0 } else { 1.0 }, 0.0));
    items.push(("drop factor shortfall".into(), 1.5 - m.drop_ratio.unwrap_or(0.0), 0.0));
    let c = &m.chaining;
    items.push(("chaining within fitted bound".into(), if c.pass { 0.0 } else { 1.0 }, 0.0));
    items.push(("fitted K present".into(), if c.fitted_k.is_some() { 0.0 } else { 1.0 }, 0.0));
    items.push(("geometric decay".into(), c.decay_slope.unwrap_or(f64::INFINITY), -1.0));
    let (ok, detail) = worst(items);
    (
        ok,
        format!(
            "{detail} (aggregate {:?}, drop {:.2}, decay slope {:.2}, K {:.3e})",
            m.table.aggregate.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            m.drop_ratio.unwrap_or(0.0),
            c.decay_slope.unwrap_or(f64::NAN),
            c.fitted_k.unwrap_or(f64::NAN)
        ),
    )
}

fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_stratclt");
    let cfg = common::examples_dir().join("spider3_uniform.json");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip(["1", "1", "4"]) {
        let status = Command::new(bin)
            .args(["clt", "--config", cfg.to_str().unwrap(), "--seed", "42", "--threads", threads, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        if status.code() != Some(0) {
            return (false, format!("clt exited with {status}"));
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dirs[0].path().join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<String> =
        manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    for f in &outputs {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        for d in &dirs[1..] {
            if fs::read(d.path().join(f)).unwrap() != a {
                return (false, format!("{f} differs between runs"));
            }
        }
    }
    (true, format!("{} output files byte-identical across 2 runs and threads {{1, 4}}", outputs.len()))
}

fn main() {
    let mut results = Vec::new();
    let mut run = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let (ok, detail) = f();
        println!("{} [{id:>2}] {name}: {detail} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        results.push(ok);
    };
    run(1, "geometry axioms", &geometry_axioms);
    run(2, "spider oracle suite", &spider_oracle);
    run(3, "sticky / non-sticky dichotomy", &sticky_dichotomy);
    run(4, "basic tangent-field estimates", &basic_estimates);
    let reports = Reports::compute();
    run(5, "finite-dimensional CLT", &|| finite_dimensional_clt(&reports));
    run(6, "moment and increment bounds", &|| moment_bounds(&reports));
    run(7, "partial-sum martingale", &|| martingale(&reports));
    run(8, "covering dimension", &covering);
    run(9, "tightness and chaining", &tightness);
    run(10, "reproducibility", &reproducibility);
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
