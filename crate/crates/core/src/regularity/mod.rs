//! Covering numbers of spaces of directions, moduli of continuity of fields
//! on direction nets and Hölder exponent fits.

mod net;

pub use net::{
    build_nested, build_net, reference_directions, sphere_measure, stratum_dimension_sum, DirectionNet, Pair,
};

use serde::Serialize;
use std::io::Write;

use crate::error::{domain, Result};
use crate::fields::{FieldLabel, FieldOnNet};
use crate::geometry::Point;

/// Sandwich for the covering number `N(ε)`, the least number of
/// `ε/2`-balls covering the space of directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoveringEstimate {
    pub epsilon: f64,
    /// Size of a greedy `ε/2`-net.
    pub upper: usize,
    /// Size of an `ε`-separated set, which meets each `ε/2`-ball at most once.
    pub lower: usize,
}

pub fn covering_number(base: &Point, eps: f64) -> Result<CoveringEstimate> {
    let (upper, _) = net::greedy_net_stats(base, eps / 2.0, false)?;
    let (lower, _) = net::greedy_net_stats(base, eps, true)?;
    // separated sets are exact when the space of directions is finite
    let lower = if let net::Layout::Finite(all) = net::layout(base) {
        if eps / 2.0 >= std::f64::consts::PI {
            1
        } else {
            all.len()
        }
    } else {
        lower
    };
    Ok(CoveringEstimate { epsilon: eps, upper, lower: lower.min(upper) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringProfile {
    #[serde(serialize_with = "crate::measures::serialize_point")]
    pub base: Point,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub lower: Vec<usize>,
    /// Least-squares slope of `log₂ N(2^{-n})` against `n` over the finer half of the scales.
    pub d_estimate: f64,
    /// Sum of the dimensions of the strata incident to the base.
    pub stratum_sum: usize,
}

/// Covering numbers at `ε = 2^{-n}`, `n = 1..=n_max`, and the growth exponent.
pub fn dimension_constant(base: &Point, n_max: usize) -> Result<CoveringProfile> {
    if n_max < 4 {
        return domain(format!("need at least 4 dyadic scales, got {n_max}"));
    }
    let scales: Vec<f64> = (1..=n_max).map(|n| 0.5f64.powi(n as i32)).collect();
    let halves: Vec<f64> = scales.iter().map(|e| e / 2.0).collect();
    // nested nets make the counts monotone by construction
    let counts: Vec<usize> = build_nested(base, &halves)?.iter().map(DirectionNet::len).collect();
    let lower =
        scales.iter().map(|&e| covering_number(base, e).map(|c| c.lower.min(c.upper))).collect::<Result<Vec<_>>>()?;
    let start = n_max / 2;
    let xs: Vec<f64> = (start + 1..=n_max).map(|n| n as f64).collect();
    let y0 = (counts[start] as f64).log2();
    let ys: Vec<f64> = counts[start..].iter().map(|&c| (c as f64).log2() - y0).collect();
    let (slope, _) = least_squares(&xs, &ys);
    Ok(CoveringProfile {
        base: base.clone(),
        scales,
        counts,
        lower,
        d_estimate: slope.max(0.0),
        stratum_sum: stratum_dimension_sum(base),
    })
}

/// Slope and intercept of the ordinary least-squares line.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// `w(h, r) = max |h(V) − h(U)|` over net pairs with `d_s(U, V) ≤ r`.
pub fn modulus(field: &FieldOnNet, r: f64) -> Result<f64> {
    Ok(modulus_profile(field, &[r])?[0])
}

/// Moduli at several radii in one pass over the sorted pair list.
pub fn modulus_profile(field: &FieldOnNet, radii: &[f64]) -> Result<Vec<f64>> {
    let net = field.net();
    for &r in radii {
        if !(r.is_finite() && r > 0.0) {
            return domain(format!("modulus radius must be positive, got {r}"));
        }
        if !net.is_exhaustive() && net.resolution() > r / 4.0 {
            return domain(format!(
                "net resolution {} is too coarse for radius {r}; need at most r/4",
                net.resolution()
            ));
        }
    }
    Ok(sup_over_pairs(field.values(), net, radii, net.len()))
}

/// Chaining statistic: the modulus at radius `r` over pairs drawn from the
/// first `prefix` net directions (a coarser nested net).
pub fn chaining_statistic(field: &FieldOnNet, prefix: usize, r: f64) -> f64 {
    sup_over_pairs(field.values(), field.net(), &[r], prefix)[0]
}

fn sup_over_pairs(values: &[f64], net: &DirectionNet, radii: &[f64], prefix: usize) -> Vec<f64> {
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let pairs = net.pairs_within(r_max);
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut out = vec![0.0; radii.len()];
    let mut running = 0.0f64;
    let mut k = 0;
    let prefix = prefix as u32;
    for &idx in &order {
        let r = radii[idx];
        while k < pairs.len() && pairs[k].distance <= r {
            let p = pairs[k];
            if p.j < prefix {
                running = running.max((values[p.i as usize] - values[p.j as usize]).abs());
            }
            k += 1;
        }
        out[idx] = running;
    }
    out
}

/// Moduli of a family of field realizations at dyadic radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusTable {
    pub label: FieldLabel,
    pub radii: Vec<f64>,
    /// `w[replicate][radius]`.
    pub w: Vec<Vec<f64>>,
    /// `E[w ∧ 1]` per radius.
    pub aggregate: Vec<f64>,
    /// Standard error of the aggregate.
    pub aggregate_se: Vec<f64>,
}

impl ModulusTable {
    pub fn new(fields: &[FieldOnNet], radii: &[f64]) -> Result<Self> {
        let Some(first) = fields.first() else {
            return domain("modulus table needs at least one field");
        };
        let w = fields.iter().map(|f| modulus_profile(f, radii)).collect::<Result<Vec<_>>>()?;
        let (aggregate, aggregate_se) = column_stats(&w, radii.len(), |x| x.min(1.0));
        Ok(ModulusTable { label: first.label(), radii: radii.to_vec(), w, aggregate, aggregate_se })
    }

    /// Columns `radius, replicate, w, aggregate`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["radius", "replicate", "w", "aggregate"])?;
        for (m, r) in self.radii.iter().enumerate() {
            for (rep, row) in self.w.iter().enumerate() {
                wtr.write_record([fmt(*r), rep.to_string(), fmt(row[m]), fmt(self.aggregate[m])])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

impl CoveringProfile {
    /// Columns `scale, count, lower`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["scale", "count", "lower"])?;
        for i in 0..self.scales.len() {
            wtr.write_record([fmt(self.scales[i]), self.counts[i].to_string(), self.lower[i].to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Mean and standard error of `f(row[c])` for each column `c`.
fn column_stats(rows: &[Vec<f64>], cols: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; cols];
    let mut se = vec![0.0; cols];
    for c in 0..cols {
        let m = rows.iter().map(|r| f(r[c])).sum::<f64>() / n;
        let var =
            if rows.len() > 1 { rows.iter().map(|r| (f(r[c]) - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        mean[c] = m;
        se[c] = (var / n).sqrt();
    }
    (mean, se)
}

/// Fitted exponent of `E w(·, r) ≈ C r^γ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub gamma: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// Approximate 95% band on the exponent.
    pub band: (f64, f64),
    pub radii: Vec<f64>,
    pub mean_modulus: Vec<f64>,
}

pub fn holder_estimate(fields: &[FieldOnNet], radii: &[f64]) -> Result<HolderEstimate> {
    if radii.len() < 4 {
        return domain(format!("need at least 4 radii, got {}", radii.len()));
    }
    if fields.is_empty() {
        return domain("no field replicates");
    }
    let w = fields.iter().map(|f| modulus_profile(f, radii)).collect::<Result<Vec<_>>>()?;
    let (mean, se) = column_stats(&w, radii.len(), |x| x);
    if mean.iter().any(|&m| m.is_nan() || m <= 0.0) {
        return domain("the modulus vanishes at some radius, so the Hölder slope is undefined");
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = mean.iter().map(|m| m.ln()).collect();
    let (gamma, intercept) = least_squares(&xs, &ys);
    let k = xs.len() as f64;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - gamma * x - intercept).powi(2)).sum();
    let residual = (ss / k).sqrt();
    let mx = xs.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    // fit scatter plus Monte Carlo error of each log-mean, propagated linearly
    let fit_var = if xs.len() > 2 { ss / (k - 2.0) / sxx } else { 0.0 };
    let mc_var: f64 =
        xs.iter().zip(mean.iter().zip(&se)).map(|(x, (m, s))| ((x - mx) / sxx).powi(2) * (s / m).powi(2)).sum();
    let half = 1.96 * (fit_var + mc_var).sqrt();
    Ok(HolderEstimate {
        gamma,
        residual,
        band: (gamma - half, gamma + half),
        radii: radii.to_vec(),
        mean_modulus: mean,
    })
}
