//! Goodness-of-fit and summary statistics used by the experiments.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::fields::CovMatrix;

/// One-sample Kolmogorov–Smirnov distance between the empirical distribution
/// of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return domain("KS distance of an empty sample");
    }
    if samples.iter().any(|x| x.is_nan()) {
        return domain("KS distance of a sample containing NaN");
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    Ok(d.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovarianceError {
    pub sup: f64,
    /// `‖E − A‖_F / ‖A‖_F`, or the absolute Frobenius norm when `A = 0`.
    pub relative_frobenius: f64,
}

pub fn compare_covariance(empirical: &DMatrix<f64>, analytic: &CovMatrix) -> Result<CovarianceError> {
    let a = analytic.entries();
    if empirical.shape() != a.shape() {
        return domain(format!("covariance shapes {:?} and {:?} differ", empirical.shape(), a.shape()));
    }
    let diff = empirical - a;
    let denom = a.norm();
    let fro = diff.norm();
    Ok(CovarianceError { sup: diff.amax(), relative_frobenius: if denom > 0.0 { fro / denom } else { fro } })
}

/// Mean and standard error of the mean.
pub(crate) fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let m = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (m, 0.0);
    }
    let var = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `(1/R) Σ g gᵀ` over replicate vectors.
pub(crate) fn second_moment_matrix(rows: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for r in rows {
        for i in 0..dim {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..dim {
                m[(i, j)] += ri * r[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, SpaceSpec};
    use crate::regularity::build_net;
    use statrs::distribution::{ContinuousCDF, Normal};
    use std::sync::Arc;

    #[test]
    fn ks_examples() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 200;
        let q: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        let d = ks_distance(&q, |x| normal.cdf(x)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
        assert_eq!(ks_distance(&[0.0; 10], |x| normal.cdf(x)).unwrap(), 0.5);
        assert_eq!(ks_distance(&[0.0], |x| normal.cdf(x)).unwrap(), 0.5);
        assert!(ks_distance(&[], |x| normal.cdf(x)).is_err());
    }

    #[test]
    fn covariance_comparison() {
        let net = Arc::new(build_net(&Point::origin(SpaceSpec::spider(3).unwrap()), 1.0).unwrap());
        let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 8.0 / 9.0 } else { -4.0 / 9.0 });
        let cov = CovMatrix::from_entries(net.clone(), a.clone()).unwrap();
        let same = compare_covariance(&a, &cov).unwrap();
        assert_eq!((same.sup, same.relative_frobenius), (0.0, 0.0));
        let mut b = a.clone();
        b[(0, 1)] += 0.01;
        assert!((compare_covariance(&b, &cov).unwrap().sup - 0.01).abs() < 1e-15);
        let zero = CovMatrix::from_entries(net, DMatrix::zeros(3, 3)).unwrap();
        let e = DMatrix::from_element(3, 3, 0.5);
        let z = compare_covariance(&e, &zero).unwrap();
        assert_eq!(z.sup, 0.5);
        assert!((z.relative_frobenius - 1.5).abs() < 1e-15);
        assert!(compare_covariance(&DMatrix::zeros(2, 2), &cov).is_err());
    }
}
