//! Eigenvalue charts on the probability simplex.
//!
//! A pattern with `k` classes gets `k-1` polar angles in `[0, π/2]`. The class
//! masses are the squared coordinates of a point on the unit `(k-1)`-sphere:
//!
//! ```text
//! μ_1 = Π_{t<k} sin²θ_t
//! μ_m = cos²θ_{m-1} · Π_{t≥m} sin²θ_t      (m ≥ 2)
//! ```
//!
//! and every eigenvalue in class `m` is `μ_m / Δ_m`. Trace one and
//! non-negativity hold by construction; eigenvalues inside a class are
//! bitwise identical.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degeneracy::DegeneracyPattern;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Tolerance used when ingesting numeric spectra.
pub const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EigenChartJson", into = "EigenChartJson")]
pub struct EigenChart {
    pattern: DegeneracyPattern,
    angles: Vec<f64>,
}

impl EigenChart {
    pub fn new(pattern: DegeneracyPattern, angles: Vec<f64>) -> Result<Self> {
        let expected = pattern.num_classes() - 1;
        if angles.len() != expected {
            return Err(Error::ParameterCount {
                expected,
                found: angles.len(),
            });
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..=FRAC_PI_2).contains(*a)) {
            return Err(Error::OutOfRange(format!("eigen angle {a} outside [0, π/2]")));
        }
        Ok(Self { pattern, angles })
    }

    /// Angles drawn uniformly from `[0, π/2]`.
    pub fn random<R: Rng + ?Sized>(pattern: DegeneracyPattern, rng: &mut R) -> Self {
        let angles = (1..pattern.num_classes())
            .map(|_| rng.random_range(0.0..=FRAC_PI_2))
            .collect();
        Self { pattern, angles }
    }

    pub fn pattern(&self) -> &DegeneracyPattern {
        &self.pattern
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Probability mass of each class, in class order.
    pub fn class_masses(&self) -> Vec<f64> {
        let k = self.pattern.num_classes();
        let mut masses = vec![0.0; k];
        let mut remaining = 1.0;
        for m in (1..k).rev() {
            let c = self.angles[m - 1].cos();
            let mass = remaining * (c * c);
            masses[m] = mass;
            remaining -= mass;
        }
        masses[0] = remaining;
        masses
    }

    /// Eigenvalue for every index `0..n`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.pattern.n()];
        for (class, mass) in self.pattern.classes().iter().zip(self.class_masses()) {
            let value = mass / class.len() as f64;
            for &i in class {
                out[i] = value;
            }
        }
        out
    }

    /// `D = diag(eigenvalues)`.
    pub fn eigen_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::real_diagonal(&self.eigenvalues())
    }
}

pub fn eigenvalues(c: &EigenChart) -> Vec<f64> {
    c.eigenvalues()
}

pub fn eigen_matrix(c: &EigenChart) -> ComplexMatrix {
    c.eigen_matrix()
}

/// Inverse of [`EigenChart::eigenvalues`]: finds the angles reproducing a
/// non-negative, unit-trace spectrum that is constant on each class.
pub fn fit_chart(values: &[f64], pattern: &DegeneracyPattern) -> Result<EigenChart> {
    if values.len() != pattern.n() {
        return Err(Error::InvalidSpectrum(format!(
            "{} values for a pattern of dimension {}",
            values.len(),
            pattern.n()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v.to_string()));
    }
    if let Some(v) = values.iter().find(|&&v| v < -SPECTRUM_TOL) {
        return Err(Error::InvalidSpectrum(format!("negative eigenvalue {v}")));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > SPECTRUM_TOL {
        return Err(Error::InvalidSpectrum(format!("trace {total} is not 1")));
    }
    for class in pattern.classes() {
        let first = values[class[0]];
        if class.iter().any(|&i| (values[i] - first).abs() > SPECTRUM_TOL) {
            return Err(Error::InvalidSpectrum(format!(
                "values not constant on class {:?}",
                class.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
    }
    let masses: Vec<f64> = pattern
        .classes()
        .iter()
        .map(|c| c.iter().map(|&i| values[i].max(0.0)).sum::<f64>() / total)
        .collect();
    let mut angles = vec![0.0; masses.len().saturating_sub(1)];
    let mut below: f64 = masses[0];
    for m in 1..masses.len() {
        // tan θ_{m-1} = sqrt(μ_1 + … + μ_{m-1}) / sqrt(μ_m)
        angles[m - 1] = below.sqrt().atan2(masses[m].sqrt());
        below += masses[m];
    }
    EigenChart::new(pattern.clone(), angles)
}

/// Sorts a spectrum into descending order, groups it with the default gap
/// threshold and fits a chart. Returns the sorted values with the chart.
pub fn fit_sorted_spectrum(values: &[f64]) -> Result<(Vec<f64>, EigenChart)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let pattern = DegeneracyPattern::from_spectrum(&sorted, SPECTRUM_TOL)?;
    if !pattern.is_contiguous() {
        return Err(Error::InvalidSpectrum("gap threshold produced interleaved classes".into()));
    }
    // snap each class to its mean so the class-constancy check is exact
    let mut snapped = sorted.clone();
    for class in pattern.classes() {
        let mean = class.iter().map(|&i| sorted[i]).sum::<f64>() / class.len() as f64;
        for &i in class {
            snapped[i] = mean;
        }
    }
    let chart = fit_chart(&snapped, &pattern)?;
    Ok((sorted, chart))
}

#[derive(Serialize, Deserialize)]
struct EigenChartJson {
    #[serde(with = "crate::degeneracy::compact")]
    pattern: DegeneracyPattern,
    angles: Vec<f64>,
}

impl TryFrom<EigenChartJson> for EigenChart {
    type Error = Error;

    fn try_from(raw: EigenChartJson) -> Result<Self> {
        EigenChart::new(raw.pattern, raw.angles)
    }
}

impl From<EigenChart> for EigenChartJson {
    fn from(c: EigenChart) -> Self {
        EigenChartJson {
            pattern: c.pattern,
            angles: c.angles,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn pat(m: &[usize]) -> DegeneracyPattern {
        DegeneracyPattern::from_multiplicities(m).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn three_singletons_match_polar_formula() {
        let (phi, theta) = (0.4, 1.1);
        let c = EigenChart::new(pat(&[1, 1, 1]), vec![phi, theta]).unwrap();
        let (st, ct, sp, cp) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
        let expect = [st * st * sp * sp, st * st * cp * cp, ct * ct];
        assert!(close(&c.eigenvalues(), &expect, 1e-15));
    }

    #[test]
    fn averaged_components_for_degenerate_pairs() {
        let theta = 0.9_f64;
        let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
        let c = EigenChart::new(pat(&[2, 1]), vec![theta]).unwrap();
        assert!(close(&c.eigenvalues(), &[s2 / 2.0, s2 / 2.0, c2], 1e-15));
        let c = EigenChart::new(pat(&[1, 2]), vec![theta]).unwrap();
        assert!(close(&c.eigenvalues(), &[s2, c2 / 2.0, c2 / 2.0], 1e-15));
    }

    #[test]
    fn fully_degenerate_is_maximally_mixed() {
        for n in 1..6 {
            let c = EigenChart::new(pat(&[n]), vec![]).unwrap();
            assert!(c.eigenvalues().iter().all(|&v| v == 1.0 / n as f64));
        }
    }

    #[test]
    fn eigen_matrix_boundary_values() {
        let d = EigenChart::new(pat(&[2, 1]), vec![0.0]).unwrap().eigen_matrix();
        assert!(d.max_abs_diff(&ComplexMatrix::real_diagonal(&[0.0, 0.0, 1.0])).unwrap() < 1e-15);
        let d = EigenChart::new(pat(&[1, 1, 1]), vec![FRAC_PI_2, FRAC_PI_2])
            .unwrap()
            .eigen_matrix();
        assert!(d.max_abs_diff(&ComplexMatrix::real_diagonal(&[1.0, 0.0, 0.0])).unwrap() < 1e-15);
    }

    #[test]
    fn fit_examples() {
        let c = fit_chart(&[0.25, 0.25, 0.5], &pat(&[2, 1])).unwrap();
        assert!((c.angles()[0] - FRAC_PI_4).abs() < 1e-15);
        assert!(close(&c.eigenvalues(), &[0.25, 0.25, 0.5], 1e-15));
        let c = fit_chart(&[0.25; 4], &pat(&[4])).unwrap();
        assert!(c.angles().is_empty());
    }

    #[test]
    fn fit_rejects_invalid_spectra() {
        let p = pat(&[2, 1]);
        assert!(matches!(fit_chart(&[0.3, 0.3, 0.3], &p), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(fit_chart(&[0.6, 0.6, -0.2], &p), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(fit_chart(&[0.2, 0.3, 0.5], &p), Err(Error::InvalidSpectrum(_))));
        assert!(fit_chart(&[0.5, 0.5], &p).is_err());
    }

    #[test]
    fn chart_validation() {
        assert!(matches!(
            EigenChart::new(pat(&[1, 1, 1]), vec![0.1]),
            Err(Error::ParameterCount { expected: 2, found: 1 })
        ));
        assert!(EigenChart::new(pat(&[1, 1]), vec![2.0]).is_err());
    }

    #[test]
    fn sorted_spectrum_ingestion() {
        let (sorted, c) = fit_sorted_spectrum(&[0.2, 0.4, 0.4]).unwrap();
        assert_eq!(sorted, vec![0.4, 0.4, 0.2]);
        assert_eq!(c.pattern(), &pat(&[2, 1]));
        assert!(close(&c.eigenvalues(), &sorted, 1e-15));
    }

    #[test]
    fn json_shape() {
        let c = EigenChart::new(pat(&[2, 1]), vec![FRAC_PI_4]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"pattern":[2,1],"angles":[0.7853981633974483]}"#);
        assert_eq!(serde_json::from_str::<EigenChart>(&s).unwrap(), c);
    }
}
