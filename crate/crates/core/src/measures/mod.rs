//! Finitely supported probability measures on the model spaces.
//!
//! Integrals against a [`DiscreteMeasure`] are exact finite sums, so every
//! moment identity below can be checked to floating-point precision.

mod localize;
mod solver;

pub use localize::{
    validate_localized, ConvexityCheck, LocalizationConfig, LocalizationReport, LogCheck, UniquenessCheck,
};
pub use solver::{frechet_mean, frechet_mean_with_grid, Certificate, MeanConfig, MeanDiagnostics};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::geometry::{angular_pairing, distance_unchecked, exp_map, log_map, Point, SpaceSpec, TangentVector};

/// Weighted atoms; weights are strictly positive and sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct DiscreteMeasure {
    space: SpaceSpec,
    atoms: Vec<(Point, f64)>,
}

/// On-disk form: `{"space": …, "atoms": [{"point": […], "weight": w}, …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub space: SpaceSpec,
    pub atoms: Vec<AtomRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomRecord {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl TryFrom<MeasureFile> for DiscreteMeasure {
    type Error = Error;

    fn try_from(file: MeasureFile) -> Result<Self> {
        let atoms = file
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Point::from_array(file.space, &a.point)
                    .map(|p| (p, a.weight))
                    .map_err(|e| Error::Invalid(format!("atom {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(file.space, atoms)
    }
}

impl From<DiscreteMeasure> for MeasureFile {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureFile {
            space: m.space,
            atoms: m.atoms.iter().map(|(p, w)| AtomRecord { point: p.to_array(), weight: *w }).collect(),
        }
    }
}

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl DiscreteMeasure {
    pub fn new(space: SpaceSpec, atoms: Vec<(Point, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("a measure needs at least one atom");
        }
        for (i, (p, w)) in atoms.iter().enumerate() {
            if p.space() != space {
                return invalid(format!("atom {i} lives in {} rather than {space}", p.space()));
            }
            if !(w.is_finite() && *w > 0.0) {
                return invalid(format!("atom {i} has weight {w}; weights must be strictly positive"));
            }
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return invalid(format!("atom weights sum to {total}; they must sum to 1 within {WEIGHT_SUM_TOL:e}"));
        }
        Ok(DiscreteMeasure { space, atoms })
    }

    /// Equal weights on the given points.
    pub fn uniform(space: SpaceSpec, points: Vec<Point>) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let atoms: Vec<_> = points.into_iter().map(|p| (p, w)).collect();
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        let mut m = DiscreteMeasure::new(space, atoms)?;
        // 1/n rounding can leave the sum a few ulps off; fold it into the first atom
        m.atoms[0].1 += 1.0 - total;
        Ok(m)
    }

    pub fn point_mass(p: Point) -> Self {
        DiscreteMeasure { space: p.space(), atoms: vec![(p, 1.0)] }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|(_, w)| *w)
    }

    /// `E d(p, x)^k` under the measure.
    pub fn distance_moment(&self, p: &Point, k: i32) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.atoms.iter().map(|(x, w)| w * distance_unchecked(p, x).powi(k)).sum())
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.space() != self.space {
            return domain(format!("point of {} used with a measure on {}", p.space(), self.space));
        }
        Ok(())
    }

    /// True when all atoms sit at one point.
    pub fn is_degenerate(&self) -> bool {
        self.atoms.iter().all(|(p, _)| *p == self.atoms[0].0)
    }
}

pub(crate) fn serialize_point<S: serde::Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
    p.to_array().serialize(s)
}

/// Pushforward of a measure to a tangent cone under the log map.
#[derive(Clone, Debug)]
pub struct TangentMeasure {
    base: Point,
    atoms: Vec<(TangentVector, f64)>,
}

impl TangentMeasure {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn atoms(&self) -> &[(TangentVector, f64)] {
        &self.atoms
    }

    /// `γ_p = E‖X‖^p`.
    pub fn length_moment(&self, p: i32) -> f64 {
        self.atoms.iter().map(|(v, w)| w * v.length().powi(p)).sum()
    }

    /// `Σ w ⟨X, V⟩`.
    pub fn pairing_mean(&self, v: &TangentVector) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in &self.atoms {
            acc += w * angular_pairing(x, v)?;
        }
        Ok(acc)
    }
}

/// `F(p) = ½ Σ w_i d(p, x_i)²`.
pub fn frechet_function(mu: &DiscreteMeasure, p: &Point) -> Result<f64> {
    mu.check_point(p)?;
    Ok(frechet_unchecked(mu, p))
}

pub(crate) fn frechet_unchecked(mu: &DiscreteMeasure, p: &Point) -> f64 {
    0.5 * mu
        .atoms
        .iter()
        .map(|(x, w)| {
            let d = distance_unchecked(p, x);
            w * d * d
        })
        .sum::<f64>()
}

/// Atom-wise log map at `base`, weights preserved.
pub fn pushforward(mu: &DiscreteMeasure, base: &Point) -> Result<TangentMeasure> {
    mu.check_point(base)?;
    let atoms = mu
        .atoms
        .iter()
        .enumerate()
        .map(|(i, (x, w))| match log_map(base, x) {
            Ok(v) => Ok((v, *w)),
            Err(e) => Err(Error::Ambiguous(format!("log map at {base} fails for atom {i} at {x}: {e}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentMeasure { base: base.clone(), atoms })
}

/// Directional derivative of the Fréchet function at `base` along unit `v`:
/// `−Σ w_i ⟨log x_i, V⟩`.
pub fn directional_derivative(mu: &DiscreteMeasure, base: &Point, v: &TangentVector) -> Result<f64> {
    check_unit(v)?;
    Ok(-pushforward(mu, base)?.pairing_mean(v)?)
}

pub(crate) fn check_unit(v: &TangentVector) -> Result<()> {
    if (v.length() - 1.0).abs() > 1e-12 {
        return domain(format!("expected a unit tangent vector, got length {}", v.length()));
    }
    Ok(())
}

/// Outcome of an escape-cone membership test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeCheck {
    pub contains: bool,
    pub derivative: f64,
    /// The tangent mean `m(μ, V) = −∇F(V)` is positive beyond tolerance,
    /// which cannot happen at a Fréchet mean.
    pub sign_violation: bool,
}

/// Escape-cone test with the sign diagnostic.
pub fn escape_cone_check(mu: &DiscreteMeasure, base: &Point, v: &TangentVector, tol: f64) -> Result<EscapeCheck> {
    let derivative = directional_derivative(mu, base, v)?;
    let tangent_mean = -derivative;
    Ok(EscapeCheck { contains: derivative.abs() <= tol, derivative, sign_violation: tangent_mean > tol })
}

/// True iff the directional derivative along `v` vanishes within `tol`.
pub fn escape_cone_contains(mu: &DiscreteMeasure, base: &Point, v: &TangentVector, tol: f64) -> Result<bool> {
    Ok(escape_cone_check(mu, base, v, tol)?.contains)
}

/// Inverse-CDF sampler over atom indices.
#[derive(Clone, Debug)]
pub struct AtomSampler {
    cumulative: Vec<f64>,
}

impl AtomSampler {
    pub fn new(mu: &DiscreteMeasure) -> Self {
        let mut acc = 0.0;
        let cumulative = mu
            .atoms
            .iter()
            .map(|(_, w)| {
                acc += w;
                acc
            })
            .collect();
        AtomSampler { cumulative }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty measure");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// `n` i.i.d. draws from `mu`.
pub fn sample<R: Rng + ?Sized>(mu: &DiscreteMeasure, rng: &mut R, n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return domain("sample size must be at least 1");
    }
    let s = AtomSampler::new(mu);
    Ok((0..n).map(|_| mu.atoms[s.draw(rng)].0.clone()).collect())
}

/// `d/dt F(exp(tV))` at `t = 0` by one-sided finite differences at steps
/// `hs`, extrapolated linearly to `h = 0` from the two smallest steps.
pub fn finite_difference_derivative(
    mu: &DiscreteMeasure,
    base: &Point,
    v: &TangentVector,
    hs: &[f64],
) -> Result<Vec<f64>> {
    let f0 = frechet_function(mu, base)?;
    let dir = v.direction().ok_or_else(|| Error::Domain("zero vector has no direction".into()))?;
    hs.iter()
        .map(|&h| {
            let p = exp_map(base, &TangentVector::new(dir.clone(), h)?)?;
            Ok((frechet_unchecked(mu, &p) - f0) / h)
        })
        .collect()
}
