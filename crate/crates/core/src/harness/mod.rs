//! Seeded Monte Carlo experiments on empirical tangent fields.
//!
//! An experiment fixes a measure, a base point (its Fréchet mean unless
//! overridden) and a direction net, then draws replicate sample sets and
//! checks the central limit behaviour of `G_n` together with moment,
//! increment, martingale, law-of-large-numbers and modulus statistics.
//!
//! Every replicate draws from its own substream keyed by
//! `(seed, test, n index, replicate)`, and all reductions run in replicate
//! order after the parallel map, so reports are bit-identical for a given
//! configuration regardless of thread count.

mod report;
pub mod stats;

pub use report::*;
pub use stats::{compare_covariance, ks_distance, CovarianceError};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fields::{cov_from_table, CovMatrix, FieldLabel, FieldOnNet, TangentTable};
use crate::geometry::{Direction, Point, SpaceSpec};
use crate::measures::{
    pushforward, validate_localized, AtomSampler, DiscreteMeasure, LocalizationConfig, LocalizationReport,
};
use crate::regularity::{build_nested, build_net, chaining_statistic, dimension_constant, DirectionNet, ModulusTable};
use crate::rng::{substream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Cov,
    Ks,
    Mahalanobis,
    Moments,
    Increments,
    Martingale,
    Lln,
    Modulus,
}

impl TestKind {
    pub const ALL: [TestKind; 8] = [
        TestKind::Cov,
        TestKind::Ks,
        TestKind::Mahalanobis,
        TestKind::Moments,
        TestKind::Increments,
        TestKind::Martingale,
        TestKind::Lln,
        TestKind::Modulus,
    ];
}

fn all_tests() -> Vec<TestKind> {
    TestKind::ALL.to_vec()
}

/// Either explicit directions (flat arrays at the base) or a resolution for
/// a greedy net.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetSpec {
    Directions {
        directions: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Epsilon {
        epsilon: f64,
    },
}

impl NetSpec {
    pub fn build(&self, base: &Point) -> Result<DirectionNet> {
        match self {
            NetSpec::Epsilon { epsilon } => build_net(base, *epsilon),
            NetSpec::Directions { directions, resolution, weights } => {
                let dirs = directions.iter().map(|a| Direction::from_array(base, a)).collect::<Result<Vec<_>>>()?;
                DirectionNet::explicit(base.clone(), dirs, resolution.unwrap_or(std::f64::consts::PI), weights.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub ks: f64,
    pub mahalanobis: f64,
    pub cov: f64,
    /// Monte Carlo slack, in standard errors, for one-sided moment checks.
    pub sigma: f64,
    /// Accepted band for the ratio of successive mean sup-norms of `ḡ_n`.
    pub lln_ratio: [f64; 2],
    /// Required drop of `E[w ∧ 1]` from the largest to the smallest radius.
    pub modulus_drop: f64,
    /// Field values below this are treated as zero on zero-variance directions.
    pub zero_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks: 0.03,
            mahalanobis: 0.05,
            cov: 0.05,
            sigma: 3.0,
            lln_ratio: [1.5, 2.7],
            modulus_drop: 1.5,
            zero_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleSpec {
    pub n: usize,
    pub k: usize,
    /// Defaults to the experiment's replicate count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
}

impl Default for MartingaleSpec {
    fn default() -> Self {
        MartingaleSpec { n: 1000, k: 1000, replicates: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlnSpec {
    pub sample_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
}

impl Default for LlnSpec {
    fn default() -> Self {
        LlnSpec { sample_sizes: vec![1000, 4000, 16000], replicates: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusSpec {
    pub n: usize,
    pub replicates: usize,
    /// Radii `2^{-m}` for `m_min ≤ m ≤ m_max`.
    pub m_min: u32,
    pub m_max: u32,
    /// Exponent of the chaining statistic.
    pub exponent: i32,
}

impl Default for ModulusSpec {
    fn default() -> Self {
        ModulusSpec { n: 1000, replicates: 500, m_min: 2, m_max: 6, exponent: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    pub measure: DiscreteMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    pub net: NetSpec,
    pub sample_sizes: Vec<usize>,
    /// The distributional checks (cov, ks, mahalanobis) skip smaller sample
    /// sizes, where the lattice structure of `G_n` dominates the KS distance.
    #[serde(default)]
    pub clt_min_n: usize,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_tests")]
    pub tests: Vec<TestKind>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub martingale: MartingaleSpec,
    #[serde(default)]
    pub lln: LlnSpec,
    #[serde(default)]
    pub modulus: ModulusSpec,
    #[serde(default)]
    pub localization: LocalizationConfig,
}

pub const MIN_REPLICATES: usize = 100;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn enabled(&self, t: TestKind) -> bool {
        self.tests.contains(&t)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if let Some(s) = self.space {
            if s != self.measure.space() {
                return bad(format!("config space {s} differs from the measure's space {}", self.measure.space()));
            }
        }
        if self.replicates < MIN_REPLICATES {
            return bad(format!("replicates = {} is below the floor of {MIN_REPLICATES}", self.replicates));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] == 0 {
            return bad("sample_sizes must be a nonempty list of positive integers".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample_sizes must be strictly increasing".into());
        }
        if self.enabled(TestKind::Martingale) {
            let m = &self.martingale;
            if m.n == 0 || m.k == 0 || m.replicates.is_some_and(|r| r < MIN_REPLICATES) {
                return bad("martingale needs n, k ≥ 1 and at least the replicate floor".into());
            }
        }
        if self.enabled(TestKind::Lln) {
            let l = &self.lln;
            if l.sample_sizes.len() < 2 || l.sample_sizes[0] == 0 || l.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
                return bad("lln.sample_sizes must hold at least two strictly increasing positive sizes".into());
            }
            if l.replicates.is_some_and(|r| r < MIN_REPLICATES) {
                return bad("lln replicates are below the floor".into());
            }
        }
        if self.enabled(TestKind::Modulus) {
            let m = &self.modulus;
            if m.m_min < 1 || m.m_max < m.m_min + 3 || m.m_max > 16 {
                return bad("modulus radii need 1 ≤ m_min and at least 4 radii with m_max ≤ 16".into());
            }
            if m.n == 0 || m.replicates < MIN_REPLICATES || m.exponent < 1 {
                return bad("modulus needs n ≥ 1, replicates at the floor and a positive exponent".into());
            }
        }
        let t = &self.thresholds;
        if !(t.ks > 0.0 && t.mahalanobis > 0.0 && t.cov > 0.0 && t.sigma >= 0.0 && t.lln_ratio[0] < t.lln_ratio[1]) {
            return bad("thresholds must be positive and the lln band ordered".into());
        }
        Ok(())
    }
}

// substream tags
const MAIN: u64 = 1;
const MARTINGALE: u64 = 2;
const LLN: u64 = 3;
const MODULUS: u64 = 4;

/// A validated experiment with its base point, net, pairing table and covariance.
pub struct Experiment {
    cfg: ExperimentConfig,
    localization: LocalizationReport,
    base: Point,
    net: Arc<DirectionNet>,
    table: TangentTable,
    cov: CovMatrix,
    sampler: AtomSampler,
    gamma2: f64,
    gamma4: f64,
}

impl Experiment {
    pub fn prepare(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mu = &cfg.measure;
        let localization = validate_localized(mu, &cfg.localization);
        if !localization.pass {
            let text = serde_json::to_string_pretty(&localization)?;
            return Err(Error::NotLocalized(text));
        }
        let base = match &cfg.base {
            Some(a) => Point::from_array(mu.space(), a)?,
            None => localization.mean.as_ref().expect("localized measures have a mean").mean.clone(),
        };
        let net = Arc::new(cfg.net.build(&base)?);
        let table = TangentTable::new(mu, net.clone())?;
        let cov = cov_from_table(&table)?;
        let t = pushforward(mu, &base)?;
        Ok(Experiment {
            sampler: AtomSampler::new(mu),
            gamma2: t.length_moment(2),
            gamma4: t.length_moment(4),
            cfg,
            localization,
            base,
            net,
            table,
            cov,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn net(&self) -> &Arc<DirectionNet> {
        &self.net
    }

    pub fn cov(&self) -> &CovMatrix {
        &self.cov
    }

    pub fn table(&self) -> &TangentTable {
        &self.table
    }

    fn add_draws(&self, rng: &mut Stream, k: usize, counts: &mut [usize]) {
        for _ in 0..k {
            counts[self.sampler.draw(rng)] += 1;
        }
    }

    /// `Σ_i τ(x_i, V_j)` for the sample counts.
    fn partial_sum(&self, counts: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.net.len()];
        self.table.accumulate_counts(counts, &mut out);
        out
    }

    /// `G_n` on the net for every main-test replicate at sample size index `n_idx`.
    pub fn replicate_fields(&self, n_idx: usize) -> Vec<Vec<f64>> {
        let n = self.cfg.sample_sizes[n_idx];
        let scale = 1.0 / (n as f64).sqrt();
        (0..self.cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(self.cfg.seed, &[MAIN, n_idx as u64, rep as u64]);
                let mut counts = vec![0; self.cfg.measure.len()];
                self.add_draws(&mut rng, n, &mut counts);
                let mut s = self.partial_sum(&counts);
                s.iter_mut().for_each(|v| *v *= scale);
                s
            })
            .collect()
    }

    pub fn run(&self) -> Result<CltReport> {
        let cfg = &self.cfg;
        let mut failures = Vec::new();
        let per_n = (0..cfg.sample_sizes.len())
            .map(|i| self.check_sample_size(i, &mut failures))
            .collect::<Result<Vec<_>>>()?;
        let martingale = cfg.enabled(TestKind::Martingale).then(|| self.check_martingale(&mut failures));
        let lln = cfg.enabled(TestKind::Lln).then(|| self.check_lln(&mut failures));
        let modulus = if cfg.enabled(TestKind::Modulus) { Some(self.check_modulus(&mut failures)?) } else { None };
        let mut eigenvalues: Vec<f64> = self.cov.eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(CltReport {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            base: self.base.to_array(),
            localization: self.localization.clone(),
            net: NetSummary { size: self.net.len(), resolution: self.net.resolution(), labels: self.net.labels() },
            gamma2: self.gamma2,
            gamma4: self.gamma4,
            covariance: CovSummary {
                eigenvalues,
                rank: self.cov.rank(),
                psd_tol: self.cov.psd_tol(),
                clipped: self.cov.clipped().to_vec(),
            },
            per_n,
            martingale,
            lln,
            modulus,
            pass: failures.is_empty(),
            failures,
            config: cfg.clone(),
        })
    }

    fn zero_variance(&self, j: usize) -> bool {
        let max_diag = (0..self.cov.dim()).map(|i| self.cov.get(i, i)).fold(0.0, f64::max);
        self.cov.get(j, j) <= 1e-12 * max_diag
    }

    fn check_sample_size(&self, n_idx: usize, failures: &mut Vec<String>) -> Result<PerSampleSize> {
        let cfg = &self.cfg;
        let th = &cfg.thresholds;
        let n = cfg.sample_sizes[n_idx];
        let rows = self.replicate_fields(n_idx);
        let dim = self.net.len();
        let mut fail = |m: String| failures.push(format!("n={n}: {m}"));
        let distributional = n >= cfg.clt_min_n;

        // components along the null space of Σ must vanish identically
        let null_vectors: Vec<usize> = (0..dim).filter(|&k| self.cov.eigenvalues()[k] == 0.0).collect();
        let mut null_space_residual = 0.0f64;
        for row in &rows {
            for &k in &null_vectors {
                let u = self.cov.eigenvectors().column(k);
                let p: f64 = row.iter().zip(u.iter()).map(|(g, u)| g * u).sum();
                null_space_residual = null_space_residual.max(p.abs());
            }
        }

        let covariance = if distributional && cfg.enabled(TestKind::Cov) {
            let emp = stats::second_moment_matrix(&rows, dim);
            let e = compare_covariance(&emp, &self.cov)?;
            let pass = e.sup < th.cov;
            if !pass {
                fail(format!("covariance sup error {} ≥ {}", e.sup, th.cov));
            }
            Some(CovCheck { sup_error: e.sup, relative_frobenius: e.relative_frobenius, threshold: th.cov, pass })
        } else {
            None
        };

        let ks = if distributional && cfg.enabled(TestKind::Ks) {
            let mut per_direction = Vec::with_capacity(dim);
            let mut zero_max = 0.0f64;
            let mut zero_dirs = 0;
            for j in 0..dim {
                if self.zero_variance(j) {
                    zero_dirs += 1;
                    zero_max = rows.iter().fold(zero_max, |m, row| m.max(row[j].abs()));
                    per_direction.push(None);
                } else {
                    let normal =
                        Normal::new(0.0, self.cov.get(j, j).sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
                    let col: Vec<f64> = rows.iter().map(|row| row[j]).collect();
                    per_direction.push(Some(ks_distance(&col, |x| normal.cdf(x))?));
                }
            }
            let max = per_direction.iter().flatten().copied().fold(0.0, f64::max);
            let zero_ok = zero_max <= th.zero_tol;
            let pass = max < th.ks && zero_ok;
            if max >= th.ks {
                fail(format!("largest per-direction KS distance {max} ≥ {}", th.ks));
            }
            if !zero_ok {
                fail(format!("zero-variance directions reach |G_n| = {zero_max}"));
            }
            Some(KsCheck {
                per_direction,
                max,
                zero_variance_directions: zero_dirs,
                zero_variance_max_abs: zero_max,
                threshold: th.ks,
                pass,
            })
        } else {
            None
        };

        let mahalanobis = if distributional && cfg.enabled(TestKind::Mahalanobis) {
            let lmax = self.cov.eigenvalues().iter().copied().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..dim).filter(|&k| self.cov.eigenvalues()[k] > 1e-9 * lmax).collect();
            let rank = keep.len();
            let (distance, pass) = if rank == 0 {
                (0.0, true)
            } else {
                let q: Vec<f64> = rows
                    .iter()
                    .map(|row| {
                        keep.iter()
                            .map(|&k| {
                                let u = self.cov.eigenvectors().column(k);
                                let p: f64 = row.iter().zip(u.iter()).map(|(g, u)| g * u).sum();
                                p * p / self.cov.eigenvalues()[k]
                            })
                            .sum()
                    })
                    .collect();
                let chi = ChiSquared::new(rank as f64).map_err(|e| Error::Numerical(e.to_string()))?;
                let d = ks_distance(&q, |x| chi.cdf(x.max(0.0)))?;
                (d, d < th.mahalanobis)
            };
            if !pass {
                fail(format!("Mahalanobis χ² KS distance {distance} ≥ {}", th.mahalanobis));
            }
            Some(MahalanobisCheck { rank, ks: distance, threshold: th.mahalanobis, pass })
        } else {
            None
        };

        let moments = if cfg.enabled(TestKind::Moments) {
            let bound = 3.0 * self.gamma2 * self.gamma2 + self.gamma4 / n as f64;
            let rows_out: Vec<MomentRow> = (0..dim)
                .map(|j| {
                    let (mc, se) = stats::mean_se(rows.iter().map(|row| row[j].powi(4)));
                    let (s2, s4) = self.central_moments(|t| t[j]);
                    let exact = fourth_moment_of_sum(s2, s4, n);
                    MomentRow {
                        direction: j,
                        monte_carlo: mc,
                        standard_error: se,
                        exact,
                        bound,
                        pass: mc <= bound + th.sigma * se && exact <= bound * (1.0 + 1e-12),
                    }
                })
                .collect();
            let pass = rows_out.iter().all(|m| m.pass);
            if !pass {
                fail("fourth-moment bound violated".into());
            }
            Some(MomentCheck { rows: rows_out, pass })
        } else {
            None
        };

        let increments = if cfg.enabled(TestKind::Increments) {
            let m = dim.min(16);
            let mut rows_out = Vec::new();
            for u in 0..m {
                for v in u + 1..m {
                    let d = self.net.distance(u, v);
                    let d4 = d.powi(4);
                    let bound =
                        2.0 * (2.0 * (1.0 + self.gamma2) * d * d).powi(2) + 8.0 * (1.0 + self.gamma4) * d4 / n as f64;
                    let (mc, se) = stats::mean_se(rows.iter().map(|row| (row[v] - row[u]).powi(4)));
                    let (s2, s4) = self.central_moments(|t| t[v] - t[u]);
                    let exact = fourth_moment_of_sum(s2, s4, n);
                    rows_out.push(IncrementRow {
                        u,
                        v,
                        distance: d,
                        monte_carlo: mc,
                        standard_error: se,
                        exact,
                        bound,
                        pass: mc <= bound + th.sigma * se && exact <= bound * (1.0 + 1e-12),
                    });
                }
            }
            let pass = rows_out.iter().all(|m| m.pass);
            if !pass {
                fail("increment moment bound violated".into());
            }
            Some(IncrementCheck { rows: rows_out, pass })
        } else {
            None
        };

        Ok(PerSampleSize {
            n,
            replicates: rows.len(),
            null_space_residual,
            covariance,
            ks,
            mahalanobis,
            moments,
            increments,
        })
    }

    /// `(Σ w f(τ)², Σ w f(τ)⁴)` over atoms for a linear functional `f` of the τ row.
    fn central_moments(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        for (w, row) in self.table.weights().iter().zip(self.table.tau()) {
            let x = f(row);
            s2 += w * x * x;
            s4 += w * x.powi(4);
        }
        (s2, s4)
    }

    fn check_martingale(&self, failures: &mut Vec<String>) -> MartingaleReport {
        let spec = &self.cfg.martingale;
        let (n, k) = (spec.n, spec.k);
        let reps = spec.replicates.unwrap_or(self.cfg.replicates);
        let atoms = self.cfg.measure.len();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(self.cfg.seed, &[MARTINGALE, rep as u64]);
                let mut counts = vec![0; atoms];
                self.add_draws(&mut rng, n, &mut counts);
                let s_n = self.partial_sum(&counts);
                self.add_draws(&mut rng, k, &mut counts);
                (s_n, self.partial_sum(&counts))
            })
            .collect();
        let dim = self.net.len();
        let r = reps as f64;
        let mut rows = Vec::with_capacity(dim);
        let (mut num_s, mut den_s) = (0.0, 0.0);
        for j in 0..dim {
            let mean_increment = pairs.iter().map(|(a, b)| b[j] - a[j]).sum::<f64>() / r;
            let bound = 4.0 * (k as f64 * self.cov.get(j, j) / r).sqrt();
            let pass = mean_increment.abs() <= bound.max(self.cfg.thresholds.zero_tol);
            if !self.zero_variance(j) {
                for (a, b) in &pairs {
                    num_s += a[j] * b[j];
                    den_s += a[j] * a[j];
                }
            }
            rows.push(MartingaleRow { direction: j, mean_increment, bound, pass });
        }
        let pass = rows.iter().all(|m| m.pass);
        if !pass {
            failures.push(format!("martingale residual exceeds its bound at (n, k) = ({n}, {k})"));
        }
        let ratio = (n as f64 / (n + k) as f64).sqrt();
        let partial_sum_coefficient = if den_s > 0.0 { Some(num_s / den_s) } else { None };
        MartingaleReport {
            n,
            k,
            replicates: reps,
            rows,
            partial_sum_coefficient,
            normalized_coefficient: partial_sum_coefficient.map(|c| c * ratio),
            normalized_expected: ratio,
            normalization_note: format!(
                "under 1/sqrt(n) scaling E[G_(n+k) | F_n] = sqrt(n/(n+k)) G_n = {ratio:.6} G_n, so G_n itself is not a martingale; \
                 the partial sums S_n = sqrt(n) G_n are, and they are what is tested"
            ),
            pass,
        }
    }

    fn check_lln(&self, failures: &mut Vec<String>) -> LlnReport {
        let spec = &self.cfg.lln;
        let sizes = spec.sample_sizes.clone();
        let reps = spec.replicates.unwrap_or(self.cfg.replicates);
        let atoms = self.cfg.measure.len();
        let sups: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(self.cfg.seed, &[LLN, rep as u64]);
                let mut counts = vec![0; atoms];
                let mut drawn = 0;
                sizes
                    .iter()
                    .map(|&n| {
                        self.add_draws(&mut rng, n - drawn, &mut counts);
                        drawn = n;
                        self.partial_sum(&counts).iter().fold(0.0f64, |m, v| m.max(v.abs())) / n as f64
                    })
                    .collect()
            })
            .collect();
        let mean_sup: Vec<f64> =
            (0..sizes.len()).map(|i| sups.iter().map(|s| s[i]).sum::<f64>() / reps as f64).collect();
        let expected: Vec<f64> = sizes.windows(2).map(|w| (w[1] as f64 / w[0] as f64).sqrt()).collect();
        let ratios: Vec<Option<f64>> = mean_sup.windows(2).map(|w| (w[1] > 0.0).then(|| w[0] / w[1])).collect();
        let [lo, hi] = self.cfg.thresholds.lln_ratio;
        let degenerate = mean_sup.iter().all(|&m| m <= self.cfg.thresholds.zero_tol);
        // the band is stated for a fourfold increase in n and rescaled otherwise
        let pass = degenerate
            || ratios.iter().zip(&expected).all(|(r, e)| r.is_some_and(|r| r >= lo * e / 2.0 && r <= hi * e / 2.0));
        if !pass {
            failures.push(format!("sup-norm of the averaged field does not shrink like n^(-1/2): ratios {ratios:?}"));
        }
        LlnReport {
            sample_sizes: sizes,
            replicates: reps,
            mean_sup,
            ratios,
            expected_ratios: expected,
            band: [lo, hi],
            pass,
        }
    }

    fn check_modulus(&self, failures: &mut Vec<String>) -> Result<ModulusReport> {
        let spec = &self.cfg.modulus;
        let th = &self.cfg.thresholds;
        // nested nets D_k at resolution 2^{-(k+1)}; the finest carries the fields
        let resolutions: Vec<f64> = (2..=spec.m_max + 2).map(|j| 0.5f64.powi(j as i32)).collect();
        let nets = build_nested(&self.base, &resolutions)?;
        let prefix: Vec<usize> = nets.iter().map(DirectionNet::len).collect();
        let finest = Arc::new(nets.into_iter().last().expect("at least one scale"));
        let table = TangentTable::new(&self.cfg.measure, finest.clone())?;
        let n = spec.n;
        let scale = 1.0 / (n as f64).sqrt();
        let atoms = self.cfg.measure.len();
        let fields: Vec<FieldOnNet> = (0..spec.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(self.cfg.seed, &[MODULUS, rep as u64]);
                let mut counts = vec![0; atoms];
                self.add_draws(&mut rng, n, &mut counts);
                let mut values = vec![0.0; finest.len()];
                table.accumulate_counts(&counts, &mut values);
                values.iter_mut().for_each(|v| *v *= scale);
                FieldOnNet::new(finest.clone(), values, FieldLabel::Empirical(n))
            })
            .collect::<Result<Vec<_>>>()?;

        let radii: Vec<f64> = (spec.m_min..=spec.m_max).map(|m| 0.5f64.powi(m as i32)).collect();
        let table_w = ModulusTable::new(&fields, &radii)?;
        let agg = &table_w.aggregate;
        let se = &table_w.aggregate_se;
        let monotone =
            (1..agg.len()).all(|i| agg[i] <= agg[i - 1] + th.sigma * (se[i] * se[i] + se[i - 1] * se[i - 1]).sqrt());
        let first = agg[0];
        let last = *agg.last().expect("at least 4 radii");
        let degenerate = first <= th.zero_tol;
        let drop_ratio = (!degenerate).then(|| if last > 0.0 { first / last } else { f64::INFINITY });
        let drop_ok = drop_ratio.is_none_or(|r| r >= th.modulus_drop);
        let tightness_pass = monotone && drop_ok;
        if !tightness_pass {
            failures.push(format!("modulus aggregate not tight: monotone = {monotone}, drop = {drop_ratio:?}"));
        }

        let d = dimension_constant(&self.base, (spec.m_max as usize + 2).max(4))?.d_estimate;
        let a = spec.exponent;
        let ks: Vec<u32> = (1..=spec.m_max + 1).collect();
        let mut scales = Vec::with_capacity(ks.len());
        for &k in &ks {
            let r = 0.5f64.powi(k as i32);
            let size = prefix[k as usize - 1];
            let xs: Vec<f64> = fields.iter().map(|f| chaining_statistic(f, size, r).powi(a)).collect();
            let (mean, se) = stats::mean_se(xs.iter().copied());
            scales.push(ChainingScale {
                k,
                radius: r,
                net_size: size,
                mean,
                standard_error: se,
                bound: None,
                pass: true,
            });
        }
        let k0 = scales.iter().position(|s| s.mean > 0.0);
        let mut fitted_k = None;
        let mut decay_slope = None;
        if let Some(i0) = k0 {
            let s0 = &scales[i0];
            let kk = s0.mean * 2f64.powf(s0.k as f64 * (a as f64 - d));
            fitted_k = Some(kk);
            for s in scales.iter_mut().skip(i0 + 1) {
                let b = kk * 2f64.powf(-(s.k as f64) * (a as f64 - d));
                s.bound = Some(b);
                s.pass = s.mean <= b + th.sigma * s.standard_error;
            }
            let pts: Vec<(f64, f64)> =
                scales.iter().filter(|s| s.mean > 0.0).map(|s| (s.k as f64, s.mean.log2())).collect();
            if pts.len() >= 2 {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                decay_slope = Some(crate::regularity::least_squares(&x, &y).0);
            }
        }
        let chaining_pass = scales.iter().all(|s| s.pass);
        if !chaining_pass {
            failures.push("chaining statistic exceeds its fitted geometric bound".into());
        }
        Ok(ModulusReport {
            n,
            replicates: spec.replicates,
            net_size: finest.len(),
            net_resolution: finest.resolution(),
            table: table_w,
            monotone,
            drop_ratio,
            drop_threshold: th.modulus_drop,
            tightness_pass,
            chaining: ChainingReport { exponent: a, dimension: d, fitted_k, decay_slope, scales, pass: chaining_pass },
            pass: tightness_pass && chaining_pass,
        })
    }
}

/// `E (n^{-1/2} Σ g_i)⁴` for i.i.d. centered `g` with `E g² = s2`, `E g⁴ = s4`.
pub fn fourth_moment_of_sum(s2: f64, s4: f64, n: usize) -> f64 {
    let n = n as f64;
    3.0 * (n - 1.0) / n * s2 * s2 + s4 / n
}

/// Validate, localize and run every enabled test.
pub fn run_clt_experiment(cfg: ExperimentConfig) -> Result<CltReport> {
    Experiment::prepare(cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    const SPIDER: &str = r#"{
        "measure": {"space": {"kind": "spider", "legs": 3},
                    "atoms": [{"point": [0, 1.0], "weight": 0.3333333333333333},
                              {"point": [1, 1.0], "weight": 0.3333333333333333},
                              {"point": [2, 1.0], "weight": 0.3333333333333334}]},
        "net": {"directions": [[0], [1], [2]]},
        "sample_sizes": [200],
        "replicates": 400,
        "seed": 9,
        "tests": ["cov", "ks", "mahalanobis", "moments", "increments", "martingale"],
        "martingale": {"n": 100, "k": 100},
        "localization": {"mean": {"iterations": 2000, "grid_step": 0.01}}
    }"#;

    #[test]
    fn config_validation() {
        let mut c = config(SPIDER);
        assert!(c.validate().is_ok());
        c.replicates = 10;
        assert!(matches!(c.validate(), Err(Error::Invalid(m)) if m.contains("floor")));
        let mut c = config(SPIDER);
        c.sample_sizes = vec![100, 100];
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(&SPIDER.replace("\"seed\"", "\"sede\"")).is_err());
    }

    #[test]
    fn small_spider_experiment_is_deterministic() {
        let a = run_clt_experiment(config(SPIDER)).unwrap();
        let b = run_clt_experiment(config(SPIDER)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.per_n[0].null_space_residual < 1e-12);
        assert_eq!(a.per_n[0].mahalanobis.as_ref().unwrap().rank, 2);
        assert!(a.martingale.as_ref().unwrap().pass);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_clt_experiment(config(SPIDER))).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn point_mass_experiment_is_trivial() {
        let text = r#"{
            "measure": {"space": {"kind": "open_book", "pages": 3}, "atoms": [{"point": [1, 0.5, 0.25], "weight": 1.0}]},
            "net": {"epsilon": 0.25},
            "sample_sizes": [10, 100],
            "replicates": 100,
            "seed": 1,
            "lln": {"sample_sizes": [10, 40]},
            "modulus": {"n": 10, "replicates": 100},
            "localization": {"mean": {"grid_step": 0.02}}
        }"#;
        let r = run_clt_experiment(config(text)).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        for p in &r.per_n {
            assert_eq!(p.covariance.as_ref().unwrap().sup_error, 0.0);
            assert_eq!(p.ks.as_ref().unwrap().zero_variance_max_abs, 0.0);
        }
    }

    #[test]
    fn fourth_moment_formula() {
        // Rademacher: E S_n^4 = 3n² − 2n
        for n in [1usize, 2, 10] {
            let nf = n as f64;
            assert!((fourth_moment_of_sum(1.0, 1.0, n) - (3.0 * nf * nf - 2.0 * nf) / (nf * nf)).abs() < 1e-14);
        }
    }
}
