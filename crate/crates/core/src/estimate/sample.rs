use super::{MixtureModel, SampleMoments};
use crate::error::{Error, Result};
use crate::moments::DistributionKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Draws per independent sub-stream. Fixed so output does not depend on
/// the thread count.
const CHUNK: usize = 1 << 16;

enum Sampler {
    Ig(InverseGaussian<f64>),
    Gamma(Gamma<f64>),
    Gaussian { mu: f64, sd: f64 },
    Exp { mean: f64 },
}

impl Sampler {
    fn new(kind: DistributionKind, p: &[f64]) -> Result<Self> {
        let bad = |e| Error::InvalidArgument(format!("invalid {kind} parameters {p:?}: {e}"));
        Ok(match kind {
            DistributionKind::InverseGaussian => Sampler::Ig(InverseGaussian::new(p[0], p[1]).map_err(|e| bad(e.to_string()))?),
            DistributionKind::Gamma => Sampler::Gamma(Gamma::new(p[0], p[1]).map_err(|e| bad(e.to_string()))?),
            DistributionKind::ChiSquared => Sampler::Gamma(Gamma::new(p[0] / 2.0, 2.0).map_err(|e| bad(e.to_string()))?),
            DistributionKind::Gaussian => Sampler::Gaussian { mu: p[0], sd: p[1].sqrt() },
            DistributionKind::Exponential => Sampler::Exp { mean: p[0] },
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Ig(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Gaussian { mu, sd } => mu + sd * polar_normal(rng),
            Sampler::Exp { mean } => -mean * (1.0 - rng.random::<f64>()).ln(),
        }
    }
}

/// Marsaglia's polar method; the second variate of each pair is dropped.
fn polar_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u = rng.random_range(-1.0..1.0);
        let v = rng.random_range(-1.0..1.0);
        let s: f64 = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// `n` i.i.d. draws from `model`, deterministic per `seed`.
pub fn sample(model: &MixtureModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let samplers: Vec<Sampler> = model.components.iter().map(|c| Sampler::new(model.kind, c)).collect::<Result<_>>()?;
    let mut cumulative: Vec<f64> = model
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().expect("validated nonempty") = f64::INFINITY;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, slot)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        for x in slot {
            let i = if samplers.len() == 1 {
                0
            } else {
                let u: f64 = rng.random();
                cumulative.iter().position(|c| u < *c).expect("last bound is infinite")
            };
            *x = samplers[i].draw(&mut rng);
        }
    });
    Ok(out)
}

/// Empirical moments `(1/N) sum x_i^r`, `r = 1..=d`, with Neumaier
/// compensated summation.
pub fn sample_moments(data: &[f64], d: usize) -> Result<SampleMoments> {
    if d == 0 || data.is_empty() {
        return Err(Error::InvalidArgument("need d >= 1 and at least one observation".into()));
    }
    let mut sums = vec![(0.0f64, 0.0f64); d];
    for &x in data {
        let mut p = 1.0;
        for (r, (s, c)) in sums.iter_mut().enumerate() {
            p *= x;
            if !p.is_finite() {
                return Err(Error::Overflow(r + 1));
            }
            let t = *s + p;
            *c += if s.abs() >= p.abs() { (*s - t) + p } else { (p - t) + *s };
            *s = t;
        }
    }
    let n = data.len() as f64;
    SampleMoments::new(sums.iter().map(|(s, c)| (s + c) / n).collect(), data.len())
}

/// Inverse sample covariance of `(x, x^2, ..., x^d)`: the efficient
/// weight matrix for the moment residual. Computed on the correlation
/// scale, since the raw powers differ by many orders of magnitude.
pub fn moment_weights(data: &[f64], d: usize) -> Result<Vec<Vec<f64>>> {
    let m = sample_moments(data, 2 * d)?;
    let cov = DMatrix::from_fn(d, d, |i, j| m.m(i + j + 2) - m.m(i + 1) * m.m(j + 1));
    let sd = DVector::from_fn(d, |i, _| cov[(i, i)].sqrt());
    if sd.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::Numerical("moment covariance has a zero or non-finite variance".into()));
    }
    let corr = DMatrix::from_fn(d, d, |i, j| cov[(i, j)] / (sd[i] * sd[j]));
    let inv = corr
        .cholesky()
        .ok_or_else(|| Error::Numerical("moment covariance is not positive definite".into()))?
        .inverse();
    Ok((0..d).map(|i| (0..d).map(|j| inv[(i, j)] / (sd[i] * sd[j])).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_moments() {
        assert_eq!(sample_moments(&[1.0, 1.0, 1.0], 3).unwrap().values, [1.0, 1.0, 1.0]);
        assert_eq!(sample_moments(&[0.0, 2.0], 2).unwrap().values, [1.0, 2.0]);
    }

    #[test]
    fn overflow_names_order() {
        let e = sample_moments(&[1e100], 4).unwrap_err();
        assert!(matches!(e, Error::Overflow(4)), "{e}");
    }

    #[test]
    fn compensation_keeps_small_terms() {
        let mut data = vec![1e16];
        data.extend(std::iter::repeat_n(1.0, 1000));
        data.push(-1e16);
        let m = sample_moments(&data, 1).unwrap();
        assert!((m.values[0] * data.len() as f64 - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_chunked() {
        let m = MixtureModel::new(DistributionKind::Gamma, vec![vec![2.0, 1.0], vec![5.0, 2.0]], vec![0.3, 0.7]).unwrap();
        let a = sample(&m, 200_000, 9).unwrap();
        let b = sample(&m, 200_000, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample(&m, 200_000, 10).unwrap());
        // a prefix is the same draw regardless of total length
        assert_eq!(a[..1000], sample(&m, 1000, 9).unwrap()[..]);
    }

    #[test]
    fn exponential_mean() {
        let m = MixtureModel::single(DistributionKind::Exponential, vec![1.0]).unwrap();
        let x = sample(&m, 1_000_000, 1).unwrap();
        let mean = sample_moments(&x, 1).unwrap().values[0];
        assert!((mean - 1.0).abs() < 5e-3, "{mean}");
    }

    #[test]
    fn polar_gaussian_variance() {
        let m = MixtureModel::single(DistributionKind::Gaussian, vec![1.0, 4.0]).unwrap();
        let x = sample(&m, 400_000, 2).unwrap();
        let s = sample_moments(&x, 2).unwrap();
        let var = s.values[1] - s.values[0] * s.values[0];
        // standard error of the variance is sqrt(2/n) * 4 ~ 0.009
        assert!((var - 4.0).abs() < 0.04, "{var}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let m = MixtureModel { kind: DistributionKind::Gamma, components: vec![vec![-1.0, 1.0]], weights: vec![1.0] };
        assert!(sample(&m, 10, 0).unwrap_err().is_usage());
    }
}
