//! Tangent mean function, tangent covariance kernel, the centered random
//! tangent field and its empirical and Gaussian counterparts on direction nets.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{angular_pairing, log_map, Point, TangentVector};
use crate::measures::{check_unit, pushforward, DiscreteMeasure};
use crate::regularity::{fmt, DirectionNet};

/// Which random field a realization comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldLabel {
    /// `G_n`, scaled by `n^{-1/2}`.
    Empirical(usize),
    Gaussian,
    /// The centered field at one sample.
    Tau(usize),
    /// `ḡ_n`, scaled by `1/n`.
    Gbar(usize),
}

/// Values of a field at the directions of a net.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldOnNet {
    net: Arc<DirectionNet>,
    values: Vec<f64>,
    label: FieldLabel,
}

impl FieldOnNet {
    pub fn new(net: Arc<DirectionNet>, values: Vec<f64>, label: FieldLabel) -> Result<Self> {
        if values.len() != net.len() {
            return domain(format!("{} values for a net of {} directions", values.len(), net.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("field values must be finite".into()));
        }
        Ok(FieldOnNet { net, values, label })
    }

    pub fn net(&self) -> &Arc<DirectionNet> {
        &self.net
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> FieldLabel {
        self.label
    }
}

/// Header of direction labels, then one row per field.
pub fn write_fields_csv<W: Write>(fields: &[FieldOnNet], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if let Some(f) = fields.first() {
        wtr.write_record(f.net.labels())?;
    }
    for f in fields {
        wtr.write_record(f.values.iter().map(|v| fmt(*v)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// `m(V) = Σ w_i ⟨log x_i, V⟩`.
pub fn tangent_mean(mu: &DiscreteMeasure, base: &Point, v: &TangentVector) -> Result<f64> {
    check_unit(v)?;
    pushforward(mu, base)?.pairing_mean(v)
}

/// `Σ(V, W) = Σ w_i (⟨log x_i, V⟩ − m(V)) (⟨log x_i, W⟩ − m(W))`.
pub fn tangent_cov(mu: &DiscreteMeasure, base: &Point, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    check_unit(v)?;
    check_unit(w)?;
    let t = pushforward(mu, base)?;
    let (mv, mw) = (t.pairing_mean(v)?, t.pairing_mean(w)?);
    let mut acc = 0.0;
    for (x, wt) in t.atoms() {
        acc += wt * (angular_pairing(x, v)? - mv) * (angular_pairing(x, w)? - mw);
    }
    Ok(acc)
}

/// `τ(x, V) = ⟨log x, V⟩ − m(V)`.
pub fn tau(x: &Point, mu: &DiscreteMeasure, base: &Point, v: &TangentVector) -> Result<f64> {
    let m = tangent_mean(mu, base, v)?;
    Ok(angular_pairing(&log_map(base, x)?, v)? - m)
}

/// Normalization of the summed centered field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `n^{-1/2}`: the empirical tangent field `G_n`.
    Clt,
    /// `1/n`: the averaged field `ḡ_n`.
    Lln,
}

impl Scaling {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Scaling::Clt => 1.0 / (n as f64).sqrt(),
            Scaling::Lln => 1.0 / n as f64,
        }
    }

    fn label(self, n: usize) -> FieldLabel {
        match self {
            Scaling::Clt => FieldLabel::Empirical(n),
            Scaling::Lln => FieldLabel::Gbar(n),
        }
    }
}

/// Pairings of every atom's log with every net direction, and the centered
/// field `τ(x_i, V_j)`.
#[derive(Clone, Debug)]
pub struct TangentTable {
    net: Arc<DirectionNet>,
    /// Atom weights.
    weights: Vec<f64>,
    /// `pairing[i][j] = ⟨log x_i, V_j⟩`.
    pairing: Vec<Vec<f64>>,
    /// Log lengths `‖log x_i‖`.
    lengths: Vec<f64>,
    mean: Vec<f64>,
    tau: Vec<Vec<f64>>,
}

impl TangentTable {
    pub fn new(mu: &DiscreteMeasure, net: Arc<DirectionNet>) -> Result<Self> {
        let t = pushforward(mu, net.base())?;
        let dirs: Vec<TangentVector> = net.directions().iter().cloned().map(TangentVector::unit).collect();
        let pairing = t
            .atoms()
            .iter()
            .map(|(x, _)| dirs.iter().map(|v| angular_pairing(x, v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let weights: Vec<f64> = t.atoms().iter().map(|(_, w)| *w).collect();
        let lengths = t.atoms().iter().map(|(x, _)| x.length()).collect();
        let mean: Vec<f64> =
            (0..net.len()).map(|j| weights.iter().zip(&pairing).map(|(w, row)| w * row[j]).sum()).collect();
        let tau = pairing.iter().map(|row| row.iter().zip(&mean).map(|(p, m)| p - m).collect()).collect();
        Ok(TangentTable { net, weights, pairing, lengths, mean, tau })
    }

    pub fn net(&self) -> &Arc<DirectionNet> {
        &self.net
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairing(&self) -> &[Vec<f64>] {
        &self.pairing
    }

    pub fn log_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `tau()[i][j] = τ(x_i, V_j)`.
    pub fn tau(&self) -> &[Vec<f64>] {
        &self.tau
    }

    /// Centered field of atom `i` as a realization.
    pub fn tau_field(&self, i: usize) -> Result<FieldOnNet> {
        FieldOnNet::new(self.net.clone(), self.tau[i].clone(), FieldLabel::Tau(i))
    }

    /// Empirical field from how often each atom was drawn. Sums run over
    /// atoms in index order, so a sample list gives bit-identical values
    /// to its counts only up to reassociation.
    pub fn field_from_counts(&self, counts: &[usize], scaling: Scaling) -> Result<FieldOnNet> {
        if counts.len() != self.tau.len() {
            return domain(format!("{} counts for {} atoms", counts.len(), self.tau.len()));
        }
        let n: usize = counts.iter().sum();
        if n == 0 {
            return domain("empirical field needs at least one sample");
        }
        let c = scaling.factor(n);
        let mut values = vec![0.0; self.net.len()];
        self.accumulate_counts(counts, &mut values);
        for v in &mut values {
            *v *= c;
        }
        FieldOnNet::new(self.net.clone(), values, scaling.label(n))
    }

    /// `out[j] = Σ_i counts[i] τ(x_i, V_j)`.
    pub(crate) fn accumulate_counts(&self, counts: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for (row, &k) in self.tau.iter().zip(counts) {
            if k > 0 {
                let k = k as f64;
                for (o, t) in out.iter_mut().zip(row) {
                    *o += k * t;
                }
            }
        }
    }
}

/// Empirical field from a list of sample points.
pub fn empirical_field(
    samples: &[Point],
    mu: &DiscreteMeasure,
    base: &Point,
    net: &Arc<DirectionNet>,
    scaling: Scaling,
) -> Result<FieldOnNet> {
    if net.base() != base {
        return domain("net is not based at the requested base point");
    }
    if samples.is_empty() {
        return domain("empirical field needs at least one sample");
    }
    let table = TangentTable::new(mu, net.clone())?;
    let dirs: Vec<TangentVector> = net.directions().iter().cloned().map(TangentVector::unit).collect();
    let mut values = vec![0.0; net.len()];
    for x in samples {
        let lx = log_map(base, x)?;
        for (j, v) in dirs.iter().enumerate() {
            values[j] += angular_pairing(&lx, v)? - table.mean[j];
        }
    }
    let c = scaling.factor(samples.len());
    for v in &mut values {
        *v *= c;
    }
    FieldOnNet::new(net.clone(), values, scaling.label(samples.len()))
}

/// One clipped eigenvalue of a covariance matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClipRecord {
    pub index: usize,
    pub eigenvalue: f64,
}

/// Covariance kernel on a net, with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    net: Arc<DirectionNet>,
    entries: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    psd_tol: f64,
    clipped: Vec<ClipRecord>,
}

/// Relative eigenvalue threshold for the positive semidefinite repair.
pub const PSD_REL_TOL: f64 = 1e-8;

impl CovMatrix {
    /// Symmetrize, decompose and repair an arbitrary kernel matrix.
    pub fn from_entries(net: Arc<DirectionNet>, entries: DMatrix<f64>) -> Result<Self> {
        let n = net.len();
        if entries.nrows() != n || entries.ncols() != n {
            return domain(format!("covariance must be {n}×{n}"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("covariance entries must be finite".into()));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        let eig = SymmetricEigen::new(entries.clone());
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let scale = entries.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        // relative threshold plus a floor for roundoff on (near) zero matrices
        let psd_tol = PSD_REL_TOL * lmax + (n as f64) * f64::EPSILON * scale;
        let mut eigenvalues = eig.eigenvalues.clone();
        let mut clipped = Vec::new();
        for (i, l) in eigenvalues.iter_mut().enumerate() {
            if *l < -psd_tol {
                return Err(Error::Numerical(format!(
                    "covariance has eigenvalue {l} below −{psd_tol}; it is not positive semidefinite"
                )));
            }
            if *l <= psd_tol && *l != 0.0 {
                clipped.push(ClipRecord { index: i, eigenvalue: *l });
                *l = 0.0;
            }
        }
        Ok(CovMatrix { net, entries, eigenvalues, eigenvectors: eig.eigenvectors, psd_tol, clipped })
    }

    pub fn net(&self) -> &Arc<DirectionNet> {
        &self.net
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues after repair, in the order returned by the decomposition.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn clipped(&self) -> &[ClipRecord] {
        &self.clipped
    }

    pub fn dim(&self) -> usize {
        self.net.len()
    }

    /// Number of eigenvalues that survive the repair.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > 0.0).count()
    }

    /// Header of direction labels, then the matrix rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(self.net.labels())?;
        for i in 0..self.dim() {
            wtr.write_record((0..self.dim()).map(|j| fmt(self.entries[(i, j)])))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Tangent covariance kernel on the net, from the pairing table.
pub fn cov_matrix(mu: &DiscreteMeasure, net: &Arc<DirectionNet>) -> Result<CovMatrix> {
    cov_from_table(&TangentTable::new(mu, net.clone())?)
}

pub fn cov_from_table(table: &TangentTable) -> Result<CovMatrix> {
    let n = table.net.len();
    let mut m = DMatrix::zeros(n, n);
    for (w, row) in table.weights.iter().zip(&table.tau) {
        let r = DVector::from_column_slice(row);
        m.ger(*w, &r, &r, 1.0);
    }
    CovMatrix::from_entries(table.net.clone(), m)
}

/// Draws of the centered Gaussian field with a given covariance.
#[derive(Clone, Debug)]
pub struct GaussianFieldSampler {
    cov: CovMatrix,
    /// `Q √Λ`, restricted to the positive eigenvalues.
    factor: DMatrix<f64>,
}

impl GaussianFieldSampler {
    pub fn new(cov: CovMatrix) -> Self {
        let keep: Vec<usize> = (0..cov.dim()).filter(|&i| cov.eigenvalues[i] > 0.0).collect();
        let mut factor = DMatrix::zeros(cov.dim(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = cov.eigenvalues[i].sqrt();
            factor.set_column(c, &(cov.eigenvectors.column(i) * s));
        }
        GaussianFieldSampler { cov, factor }
    }

    pub fn cov(&self) -> &CovMatrix {
        &self.cov
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Largest entry of `|factor·factorᵀ − Σ|`.
    pub fn reconstruction_error(&self) -> f64 {
        (&self.factor * self.factor.transpose() - &self.cov.entries).amax()
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z =
            DVector::from_iterator(self.factor.ncols(), (0..self.factor.ncols()).map(|_| rng.sample(StandardNormal)));
        (&self.factor * z).as_slice().to_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldOnNet {
        FieldOnNet { net: self.cov.net.clone(), values: self.sample_values(rng), label: FieldLabel::Gaussian }
    }
}

pub fn sample_gaussian_field<R: Rng + ?Sized>(sampler: &GaussianFieldSampler, rng: &mut R) -> FieldOnNet {
    sampler.sample(rng)
}

/// `E‖G‖² = Σ_j weight_j Σ(V_j, V_j)`.
pub fn l2_norm_expectation(cov: &CovMatrix) -> Result<f64> {
    let Some(w) = cov.net.weights() else {
        return domain("the net carries no quadrature weights");
    };
    Ok(w.iter().enumerate().map(|(j, wj)| wj * cov.entries[(j, j)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Direction, SpaceSpec};
    use crate::regularity::build_net;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;

    fn spider_thirds() -> DiscreteMeasure {
        let s = SpaceSpec::spider(3).unwrap();
        DiscreteMeasure::uniform(s, (0..3).map(|l| Point::spider(s, l, 1.0).unwrap()).collect()).unwrap()
    }

    fn leg(l: usize) -> TangentVector {
        let apex = Point::origin(SpaceSpec::spider(3).unwrap());
        TangentVector::unit(Direction::leg(apex, l).unwrap())
    }

    fn legs_net() -> Arc<DirectionNet> {
        Arc::new(build_net(&Point::origin(SpaceSpec::spider(3).unwrap()), 1.0).unwrap())
    }

    #[test]
    fn mean_cov_tau_on_the_spider() {
        let mu = spider_thirds();
        let apex = Point::origin(mu.space());
        assert_abs_diff_eq!(tangent_mean(&mu, &apex, &leg(1)).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tangent_cov(&mu, &apex, &leg(1), &leg(1)).unwrap(), 8.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tangent_cov(&mu, &apex, &leg(1), &leg(2)).unwrap(), -4.0 / 9.0, epsilon = 1e-15);
        let x1 = Point::spider(mu.space(), 1, 1.0).unwrap();
        let x2 = Point::spider(mu.space(), 2, 1.0).unwrap();
        assert_abs_diff_eq!(tau(&x1, &mu, &apex, &leg(1)).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(&x2, &mu, &apex, &leg(1)).unwrap(), -2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn point_mass_has_unit_mean_and_no_covariance() {
        let e = SpaceSpec::euclidean(2).unwrap();
        let o = Point::origin(e);
        let v = TangentVector::unit(Direction::chart(o.clone(), vec![0.6, 0.8]).unwrap());
        let mu = DiscreteMeasure::point_mass(Point::euclidean(e, vec![0.6, 0.8]).unwrap());
        assert_abs_diff_eq!(tangent_mean(&mu, &o, &v).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(tangent_cov(&mu, &o, &v, &v).unwrap(), 0.0);
        let net = Arc::new(build_net(&o, 0.5).unwrap());
        let c = cov_matrix(&mu, &net).unwrap();
        assert_eq!(c.entries().amax(), 0.0);
        let g = GaussianFieldSampler::new(c);
        assert!(g.sample(&mut substream(0, &[])).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spider_covariance_matrix() {
        let mu = spider_thirds();
        let c = cov_matrix(&mu, &legs_net()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 8.0 / 9.0 } else { -4.0 / 9.0 };
                assert_abs_diff_eq!(c.get(i, j), want, epsilon = 1e-15);
            }
        }
        let mut ev: Vec<f64> = c.eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev[0], 0.0);
        assert_abs_diff_eq!(ev[1], 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[2], 4.0 / 3.0, epsilon = 1e-14);
        assert_eq!(c.rank(), 2);
        assert_abs_diff_eq!(l2_norm_expectation(&c).unwrap(), 8.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_line_covariance() {
        let e = SpaceSpec::euclidean(1).unwrap();
        let mu = DiscreteMeasure::uniform(
            e,
            vec![Point::euclidean(e, vec![-1.0]).unwrap(), Point::euclidean(e, vec![1.0]).unwrap()],
        )
        .unwrap();
        let net = Arc::new(build_net(&Point::origin(e), 0.5).unwrap());
        let c = cov_matrix(&mu, &net).unwrap();
        assert_eq!(c.entries(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn indefinite_kernels_are_rejected_and_tiny_negatives_clipped() {
        let net = legs_net();
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(CovMatrix::from_entries(net.clone(), bad), Err(Error::Numerical(_))));
        let nearly = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1e-12]);
        let c = CovMatrix::from_entries(net, nearly).unwrap();
        assert_eq!(c.clipped().len(), 1);
        assert!(c.eigenvalues().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn gaussian_draws_on_the_spider() {
        let mu = spider_thirds();
        let g = GaussianFieldSampler::new(cov_matrix(&mu, &legs_net()).unwrap());
        assert!(g.reconstruction_error() < 1e-8);
        let mut rng = substream(42, &[7]);
        let r = 100_000;
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..r {
            let v = g.sample_values(&mut rng);
            assert!(v.iter().sum::<f64>().abs() < 1e-12);
            let x = DVector::from_vec(v);
            acc.ger(1.0, &x, &x, 1.0);
        }
        acc /= r as f64;
        assert!((acc - g.cov().entries()).amax() < 0.02);
    }

    #[test]
    fn weights_are_required_and_linear() {
        let e = SpaceSpec::euclidean(3).unwrap();
        let o = Point::origin(e);
        let net = Arc::new(build_net(&o, 0.8).unwrap());
        let mu = DiscreteMeasure::point_mass(Point::euclidean(e, vec![1.0, 0.0, 0.0]).unwrap());
        assert!(l2_norm_expectation(&cov_matrix(&mu, &net).unwrap()).is_err());

        let base = legs_net();
        let scaled = Arc::new(
            DirectionNet::explicit(base.base().clone(), base.directions().to_vec(), 1.0, Some(vec![2.5; 3])).unwrap(),
        );
        let c = cov_matrix(&spider_thirds(), &scaled).unwrap();
        assert_abs_diff_eq!(l2_norm_expectation(&c).unwrap(), 2.5 * 8.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn empirical_field_scalings() {
        let mu = spider_thirds();
        let net = legs_net();
        let apex = net.base().clone();
        let x1 = Point::spider(mu.space(), 1, 1.0).unwrap();
        let one = empirical_field(std::slice::from_ref(&x1), &mu, &apex, &net, Scaling::Clt).unwrap();
        assert_abs_diff_eq!(one.values()[1], 4.0 / 3.0, epsilon = 1e-15);
        assert!(empirical_field(&[], &mu, &apex, &net, Scaling::Clt).is_err());

        let samples = crate::measures::sample(&mu, &mut substream(3, &[]), 50).unwrap();
        let clt = empirical_field(&samples, &mu, &apex, &net, Scaling::Clt).unwrap();
        let lln = empirical_field(&samples, &mu, &apex, &net, Scaling::Lln).unwrap();
        for (a, b) in clt.values().iter().zip(lln.values()) {
            assert_abs_diff_eq!(*a, 50f64.sqrt() * b, epsilon = 1e-13);
        }
        let mut counts = vec![0; 3];
        for s in &samples {
            counts[mu.atoms().iter().position(|(p, _)| p == s).unwrap()] += 1;
        }
        let fast = TangentTable::new(&mu, net.clone()).unwrap().field_from_counts(&counts, Scaling::Clt).unwrap();
        for (a, b) in clt.values().iter().zip(fast.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
        assert_eq!(fast.label(), FieldLabel::Empirical(50));
    }

    #[test]
    fn csv_round_trips_bits() {
        let mu = spider_thirds();
        let g = GaussianFieldSampler::new(cov_matrix(&mu, &legs_net()).unwrap());
        let mut rng = substream(1, &[]);
        let draws: Vec<FieldOnNet> = (0..4).map(|_| g.sample(&mut rng)).collect();
        let mut buf = Vec::new();
        write_fields_csv(&draws, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), vec!["leg0", "leg1", "leg2"]);
        for (rec, f) in rdr.records().zip(&draws) {
            let vals: Vec<f64> = rec.unwrap().iter().map(|s| s.parse().unwrap()).collect();
            assert_eq!(vals, f.values());
        }
    }
}
