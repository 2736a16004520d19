//! Simulation and method-of-moments estimation: samplers for every family
//! and their mixtures, sample moments, closed-form single-component
//! estimators, and mixture estimation by parameter homotopy.
//!
//! Models are stored in natural parameters: IG `(mu, lambda)`, gamma
//! `(k, theta)`, Gaussian `(mu, sigma2)`, exponential `(lambda)` (the mean)
//! and chi-squared `(k)`. Only the IG differs from the polynomial chart,
//! which uses `t = 1/lambda`.

mod io;
mod mixture;
mod sample;

pub use io::{parse_data, read_data};
pub use mixture::{
    clear_start_set_memory, mom_mixture, plant_mixture, start_set, Candidate, EstimateOptions, EstimateReport,
    StartSet, StartSource, START_SET_VERSION,
};
pub use sample::{moment_weights, sample, sample_moments};

use crate::error::{Error, Result};
use crate::exactalg::{int, Rational};
use crate::moments::DistributionKind;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Names of the natural parameters, as used in reports.
pub fn natural_param_names(kind: DistributionKind) -> &'static [&'static str] {
    match kind {
        DistributionKind::InverseGaussian => &["mu", "lambda"],
        DistributionKind::Gamma => &["k", "theta"],
        DistributionKind::Gaussian => &["mu", "sigma2"],
        DistributionKind::Exponential => &["lambda"],
        DistributionKind::ChiSquared => &["k"],
    }
}

/// Which natural parameters must be strictly positive.
fn positive_params(kind: DistributionKind) -> &'static [bool] {
    match kind {
        DistributionKind::Gaussian => &[false, true],
        DistributionKind::Exponential | DistributionKind::ChiSquared => &[true],
        _ => &[true, true],
    }
}

/// Natural parameters to the polynomial chart of `moments`.
pub fn to_chart(kind: DistributionKind, natural: &[f64]) -> Vec<f64> {
    match kind {
        DistributionKind::InverseGaussian => vec![natural[0], 1.0 / natural[1]],
        _ => natural.to_vec(),
    }
}

/// Inverse of [`to_chart`]; `None` when an IG chart has `t <= 0`.
pub fn from_chart(kind: DistributionKind, chart: &[f64]) -> Option<Vec<f64>> {
    match kind {
        DistributionKind::InverseGaussian => (chart[1] > 0.0).then(|| vec![chart[0], 1.0 / chart[1]]),
        _ => Some(chart.to_vec()),
    }
}

/// Raw moments `m_0..=m_d` of one component in natural parameters.
pub fn component_moments(kind: DistributionKind, natural: &[f64], d: usize) -> Vec<f64> {
    let mut m = vec![1.0];
    for i in 1..=d {
        let fi = i as f64;
        let next = match kind {
            DistributionKind::InverseGaussian => {
                let (mu, t) = (natural[0], 1.0 / natural[1]);
                if i == 1 {
                    mu
                } else {
                    (2.0 * fi - 3.0) * t * mu * mu * m[i - 1] + mu * mu * m[i - 2]
                }
            }
            DistributionKind::Gamma => natural[1] * (natural[0] + fi - 1.0) * m[i - 1],
            DistributionKind::Gaussian => {
                let tail = if i >= 2 { (fi - 1.0) * natural[1] * m[i - 2] } else { 0.0 };
                natural[0] * m[i - 1] + tail
            }
            DistributionKind::Exponential => fi * natural[0] * m[i - 1],
            DistributionKind::ChiSquared => (natural[0] + 2.0 * fi - 2.0) * m[i - 1],
        };
        m.push(next);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub kind: DistributionKind,
    /// Natural parameters of each component.
    pub components: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl MixtureModel {
    pub fn new(kind: DistributionKind, components: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} components with {} weights",
                components.len(),
                weights.len()
            )));
        }
        let names = natural_param_names(kind);
        for c in &components {
            if c.len() != names.len() {
                return Err(Error::InvalidArgument(format!("{kind} components take {} parameters", names.len())));
            }
            for ((v, name), pos) in c.iter().zip(names).zip(positive_params(kind)) {
                if !v.is_finite() || (*pos && *v <= 0.0) {
                    return Err(Error::InvalidArgument(format!("invalid {kind} parameter {name} = {v}")));
                }
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { kind, components, weights })
    }

    pub fn single(kind: DistributionKind, params: Vec<f64>) -> Result<Self> {
        Self::new(kind, vec![params], vec![1.0])
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn component_mean(&self, i: usize) -> f64 {
        component_moments(self.kind, &self.components[i], 1)[1]
    }

    /// Mixture moments `m_1..=m_d`.
    pub fn moments(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for (o, m) in out.iter_mut().zip(&component_moments(self.kind, c, d)[1..]) {
                *o += w * m;
            }
        }
        out
    }

    /// Components (and weights) sorted by increasing mean.
    pub fn canonicalize(&mut self) {
        let mut idx: Vec<usize> = (0..self.k()).collect();
        idx.sort_by(|&a, &b| self.component_mean(a).total_cmp(&self.component_mean(b)));
        self.components = idx.iter().map(|&i| self.components[i].clone()).collect();
        self.weights = idx.iter().map(|&i| self.weights[i]).collect();
    }

    /// Largest relative difference in any parameter or weight, after
    /// canonicalizing both models.
    pub fn relative_distance(&self, other: &MixtureModel) -> f64 {
        if self.kind != other.kind || self.k() != other.k() {
            return f64::INFINITY;
        }
        let (mut a, mut b) = (self.clone(), other.clone());
        a.canonicalize();
        b.canonicalize();
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        let params = a.components.iter().flatten().zip(b.components.iter().flatten());
        params.chain(a.weights.iter().zip(&b.weights)).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub d: usize,
    /// `m~_1..=m~_d`.
    pub values: Vec<f64>,
    pub n: usize,
}

impl SampleMoments {
    pub fn new(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("need at least one moment".into()));
        }
        if let Some(r) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Overflow(r + 1));
        }
        Ok(Self { d: values.len(), values, n })
    }

    /// Exact moments of a model, as if from an infinite sample.
    pub fn exact(model: &MixtureModel, d: usize) -> Self {
        Self { d, values: model.moments(d), n: usize::MAX }
    }

    pub fn m(&self, r: usize) -> f64 {
        self.values[r - 1]
    }

    /// Sanity conditions a large sample from `kind` should meet.
    pub fn warnings(&self, kind: DistributionKind) -> Vec<String> {
        let mut out = Vec::new();
        if kind.positive_support() {
            if let Some(r) = self.values.iter().position(|v| *v <= 0.0) {
                out.push(format!("moment m{} = {} is not positive", r + 1, self.values[r]));
            }
        }
        if self.d >= 2 && self.m(2) <= self.m(1) * self.m(1) {
            out.push(format!("m2 = {} does not exceed m1^2 = {}", self.m(2), self.m(1) * self.m(1)));
        }
        out
    }
}

/// Closed-form method of moments for a single component.
pub fn mom_single(kind: DistributionKind, m: &SampleMoments) -> Result<MixtureModel> {
    let m1 = m.m(1);
    let params = match kind {
        DistributionKind::Exponential | DistributionKind::ChiSquared => {
            if m1 <= 0.0 {
                return Err(Error::InvalidArgument(format!("{kind} needs a positive mean, got {m1}")));
            }
            vec![m1]
        }
        _ => {
            if m.d < 2 {
                return Err(Error::InvalidArgument(format!("{kind} needs two moments")));
            }
            let var = m.m(2) - m1 * m1;
            if var <= 0.0 {
                return Err(Error::DegenerateVariance(var));
            }
            match kind {
                DistributionKind::InverseGaussian => vec![m1, m1.powi(3) / var],
                DistributionKind::Gamma => vec![m1 * m1 / var, var / m1],
                _ => vec![m1, var],
            }
        }
    };
    MixtureModel::single(kind, params)
}

/// [`mom_single`] in exact arithmetic, returning natural parameters.
pub fn mom_single_exact(kind: DistributionKind, m: &[Rational]) -> Result<Vec<Rational>> {
    let m1 = m.first().ok_or_else(|| Error::InvalidArgument("need at least one moment".into()))?.clone();
    if matches!(kind, DistributionKind::Exponential | DistributionKind::ChiSquared) {
        return Ok(vec![m1]);
    }
    let m2 = m.get(1).ok_or_else(|| Error::InvalidArgument(format!("{kind} needs two moments")))?;
    let var = m2 - &m1 * &m1;
    if !var.is_positive() {
        return Err(Error::DegenerateVariance(crate::exactalg::rat_to_f64(&var)));
    }
    Ok(match kind {
        DistributionKind::InverseGaussian => vec![m1.clone(), &m1 * &m1 * &m1 / &var],
        DistributionKind::Gamma => {
            if m1.is_zero() {
                return Err(Error::InvalidArgument("gamma needs a nonzero mean".into()));
            }
            vec![&m1 * &m1 / &var, &var / &m1]
        }
        _ => vec![m1, var],
    })
}

/// Natural to chart coordinates in exact arithmetic.
pub fn to_chart_exact(kind: DistributionKind, natural: &[Rational]) -> Vec<Rational> {
    match kind {
        DistributionKind::InverseGaussian => vec![natural[0].clone(), int(1) / &natural[1]],
        _ => natural.to_vec(),
    }
}
