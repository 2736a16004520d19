use super::{random_nonzero_rational, FamilyId, MAX_RESAMPLES};
use crate::error::{Error, Result};
use crate::exactalg::{int, rank_exact, MultiPoly, QMatrix, Rational};
use crate::moments::moments;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SecantReport {
    pub family: FamilyId,
    pub d: usize,
    pub k: usize,
    pub rank: usize,
    pub expected: usize,
    pub nondefective: bool,
    pub seed: u64,
    pub attempts: usize,
}

struct MixturePoint {
    thetas: Vec<Vec<Rational>>,
    /// All `k` weights; the last is `1 - sum` of the others.
    alphas: Vec<Rational>,
}

fn sample_point(arity: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<MixturePoint> {
    let thetas: Vec<Vec<Rational>> = (0..k).map(|_| (0..arity).map(|_| random_nonzero_rational(rng)).collect()).collect();
    let mut alphas: Vec<Rational> = (0..k - 1).map(|_| random_nonzero_rational(rng)).collect();
    let last = alphas.iter().fold(int(1), |acc, a| acc - a);
    alphas.push(last);
    let distinct = (0..k).all(|i| (i + 1..k).all(|j| thetas[i] != thetas[j]));
    let weights_ok = alphas.iter().all(|a| *a != int(0));
    (distinct && weights_ok).then_some(MixturePoint { thetas, alphas })
}

/// Exact rank of the Jacobian of
/// `(theta_1..theta_k, alpha_1..alpha_{k-1}) -> (m_1..m_d)` at a seeded
/// random rational point, against the expected `min{d, (n+1)k - 1}`.
pub fn secant_jacobian_rank(family: FamilyId, d: usize, k: usize, seed: u64) -> Result<SecantReport> {
    if family.is_cumulant() {
        return Err(Error::Unsupported(format!("secant ranks are defined for moment families, not {family}")));
    }
    if d < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!("secant rank needs d >= 2 and k >= 1, got d={d}, k={k}")));
    }
    let kind = family.distribution();
    let n = kind.arity();
    let seq = moments(kind, d);
    let m: &[MultiPoly] = &seq.entries()[1..];
    let dm: Vec<Vec<MultiPoly>> = m.iter().map(|p| (0..n).map(|v| p.diff(v)).collect()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    let point = loop {
        attempts += 1;
        if let Some(p) = sample_point(n, k, &mut rng) {
            break p;
        }
        if attempts >= MAX_RESAMPLES {
            return Err(Error::Numerical(format!("no nondegenerate point after {attempts} draws")));
        }
    };

    let cols = n * k + k - 1;
    let mut jac = QMatrix::zeros(d, cols);
    for r in 0..d {
        let vals: Vec<Rational> = point.thetas.iter().map(|th| m[r].eval(th)).collect();
        for (i, th) in point.thetas.iter().enumerate() {
            for v in 0..n {
                jac.set(r, i * n + v, &point.alphas[i] * dm[r][v].eval(th));
            }
        }
        for i in 0..k - 1 {
            jac.set(r, n * k + i, &vals[i] - &vals[k - 1]);
        }
    }
    let rank = rank_exact(&jac);
    let expected = d.min(cols);
    Ok(SecantReport { family, d, k, rank, expected, nondefective: rank == expected, seed, attempts })
}
