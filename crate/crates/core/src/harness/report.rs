use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::ExperimentConfig;
use crate::error::Result;
use crate::fields::ClipRecord;
use crate::measures::LocalizationReport;
use crate::regularity::{fmt, ModulusTable};

#[derive(Clone, Debug, Serialize)]
pub struct NetSummary {
    pub size: usize,
    pub resolution: f64,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CovSummary {
    /// Repaired eigenvalues, largest first.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub psd_tol: f64,
    pub clipped: Vec<ClipRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CovCheck {
    pub sup_error: f64,
    pub relative_frobenius: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KsCheck {
    /// `None` on directions with zero analytic variance.
    pub per_direction: Vec<Option<f64>>,
    pub max: f64,
    pub zero_variance_directions: usize,
    pub zero_variance_max_abs: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MahalanobisCheck {
    pub rank: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub direction: usize,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub exact: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentCheck {
    pub rows: Vec<MomentRow>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementRow {
    pub u: usize,
    pub v: usize,
    pub distance: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub exact: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementCheck {
    pub rows: Vec<IncrementRow>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerSampleSize {
    pub n: usize,
    pub replicates: usize,
    /// Largest `|uᵀ G_n|` over replicates and null eigenvectors `u` of Σ.
    pub null_space_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mahalanobis: Option<MahalanobisCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub increments: Option<IncrementCheck>,
}

impl PerSampleSize {
    pub fn pass(&self) -> bool {
        self.covariance.as_ref().is_none_or(|c| c.pass)
            && self.ks.as_ref().is_none_or(|c| c.pass)
            && self.mahalanobis.as_ref().is_none_or(|c| c.pass)
            && self.moments.as_ref().is_none_or(|c| c.pass)
            && self.increments.as_ref().is_none_or(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleRow {
    pub direction: usize,
    /// Replicate mean of `S_{n+k} − S_n`.
    pub mean_increment: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleReport {
    pub n: usize,
    pub k: usize,
    pub replicates: usize,
    pub rows: Vec<MartingaleRow>,
    /// Pooled regression coefficient of `S_{n+k}` on `S_n`; 1 for a martingale.
    pub partial_sum_coefficient: Option<f64>,
    /// The same regression for the normalized fields `G`.
    pub normalized_coefficient: Option<f64>,
    pub normalized_expected: f64,
    pub normalization_note: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LlnReport {
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    /// Replicate mean of `sup_j |ḡ_n(V_j)|`.
    pub mean_sup: Vec<f64>,
    pub ratios: Vec<Option<f64>>,
    pub expected_ratios: Vec<f64>,
    pub band: [f64; 2],
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainingScale {
    pub k: u32,
    pub radius: f64,
    pub net_size: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub bound: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainingReport {
    pub exponent: i32,
    /// Covering dimension used in the geometric bound.
    pub dimension: f64,
    pub fitted_k: Option<f64>,
    /// Slope of `log2 E ξ_k^a` against `k`.
    pub decay_slope: Option<f64>,
    pub scales: Vec<ChainingScale>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusReport {
    pub n: usize,
    pub replicates: usize,
    pub net_size: usize,
    pub net_resolution: f64,
    pub table: ModulusTable,
    pub monotone: bool,
    pub drop_ratio: Option<f64>,
    pub drop_threshold: f64,
    pub tightness_pass: bool,
    pub chaining: ChainingReport,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub base: Vec<f64>,
    pub localization: LocalizationReport,
    pub net: NetSummary,
    pub gamma2: f64,
    pub gamma4: f64,
    pub covariance: CovSummary,
    pub per_n: Vec<PerSampleSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lln: Option<LlnReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusReport>,
    pub pass: bool,
    pub failures: Vec<String>,
}

fn create(dir: &Path, name: &str, written: &mut Vec<String>) -> Result<BufWriter<File>> {
    written.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

impl CltReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write one CSV per populated table into `dir`; returns the file names.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<String>> {
        let mut written = Vec::new();
        let mut f = create(dir, "summary.csv", &mut written)?;
        writeln!(f, "n,test,statistic,threshold,pass")?;
        for p in &self.per_n {
            if let Some(c) = &p.covariance {
                writeln!(f, "{},cov,{},{},{}", p.n, fmt(c.sup_error), fmt(c.threshold), c.pass)?;
            }
            if let Some(c) = &p.ks {
                writeln!(f, "{},ks,{},{},{}", p.n, fmt(c.max), fmt(c.threshold), c.pass)?;
            }
            if let Some(c) = &p.mahalanobis {
                writeln!(f, "{},mahalanobis,{},{},{}", p.n, fmt(c.ks), fmt(c.threshold), c.pass)?;
            }
        }
        f.flush()?;

        if self.per_n.iter().any(|p| p.ks.is_some()) {
            let mut f = create(dir, "ks.csv", &mut written)?;
            writeln!(f, "n,direction,label,ks")?;
            for p in &self.per_n {
                if let Some(c) = &p.ks {
                    for (j, d) in c.per_direction.iter().enumerate() {
                        writeln!(f, "{},{},{},{}", p.n, j, self.net.labels[j], opt(*d))?;
                    }
                }
            }
            f.flush()?;
        }
        if self.per_n.iter().any(|p| p.moments.is_some()) {
            let mut f = create(dir, "moments.csv", &mut written)?;
            writeln!(f, "n,direction,monte_carlo,standard_error,exact,bound,pass")?;
            for p in &self.per_n {
                for m in p.moments.iter().flat_map(|c| &c.rows) {
                    writeln!(
                        f,
                        "{},{},{},{},{},{},{}",
                        p.n,
                        m.direction,
                        fmt(m.monte_carlo),
                        fmt(m.standard_error),
                        fmt(m.exact),
                        fmt(m.bound),
                        m.pass
                    )?;
                }
            }
            f.flush()?;
        }
        if self.per_n.iter().any(|p| p.increments.is_some()) {
            let mut f = create(dir, "increments.csv", &mut written)?;
            writeln!(f, "n,u,v,distance,monte_carlo,standard_error,exact,bound,pass")?;
            for p in &self.per_n {
                for m in p.increments.iter().flat_map(|c| &c.rows) {
                    writeln!(
                        f,
                        "{},{},{},{},{},{},{},{},{}",
                        p.n,
                        m.u,
                        m.v,
                        fmt(m.distance),
                        fmt(m.monte_carlo),
                        fmt(m.standard_error),
                        fmt(m.exact),
                        fmt(m.bound),
                        m.pass
                    )?;
                }
            }
            f.flush()?;
        }
        if let Some(m) = &self.martingale {
            let mut f = create(dir, "martingale.csv", &mut written)?;
            writeln!(f, "direction,mean_increment,bound,pass")?;
            for r in &m.rows {
                writeln!(f, "{},{},{},{}", r.direction, fmt(r.mean_increment), fmt(r.bound), r.pass)?;
            }
            f.flush()?;
        }
        if let Some(l) = &self.lln {
            let mut f = create(dir, "lln.csv", &mut written)?;
            writeln!(f, "n,mean_sup")?;
            for (n, s) in l.sample_sizes.iter().zip(&l.mean_sup) {
                writeln!(f, "{n},{}", fmt(*s))?;
            }
            f.flush()?;
        }
        if let Some(m) = &self.modulus {
            written.push("modulus.csv".into());
            m.table.write_csv(File::create(dir.join("modulus.csv"))?)?;
            let mut f = create(dir, "chaining.csv", &mut written)?;
            writeln!(f, "k,radius,net_size,mean,standard_error,bound,pass")?;
            for s in &m.chaining.scales {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{}",
                    s.k,
                    fmt(s.radius),
                    s.net_size,
                    fmt(s.mean),
                    fmt(s.standard_error),
                    opt(s.bound),
                    s.pass
                )?;
            }
            f.flush()?;
        }
        Ok(written)
    }
}
