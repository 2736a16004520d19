//! Moment and cumulant sequences of the five supported families, the
//! moments/cumulants coordinate change, and Stirling numbers for the
//! chi-squared linear change of coordinates.
//!
//! All sequences are exact polynomials in the family's parameters. The
//! inverse Gaussian uses the chart `(mu, t)` with `t = 1/lambda`, which keeps
//! every moment polynomial.

use crate::error::{Error, Result};
use crate::exactalg::{int, MultiPoly, Rational, RingElem, VarTable};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistributionKind {
    #[serde(rename = "ig")]
    InverseGaussian,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "exp")]
    Exponential,
    #[serde(rename = "chi2")]
    ChiSquared,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 5] = [
        DistributionKind::InverseGaussian,
        DistributionKind::Gamma,
        DistributionKind::Gaussian,
        DistributionKind::Exponential,
        DistributionKind::ChiSquared,
    ];

    pub fn arity(self) -> usize {
        self.param_names().len()
    }

    /// Names of the symbolic parameters, in chart order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            DistributionKind::InverseGaussian => &["mu", "t"],
            DistributionKind::Gamma => &["kpar", "theta"],
            DistributionKind::Gaussian => &["mu", "s2"],
            DistributionKind::Exponential => &["lambda"],
            DistributionKind::ChiSquared => &["kpar"],
        }
    }

    pub fn param_table(self) -> Arc<VarTable> {
        VarTable::new(self.param_names().iter().copied()).expect("static names are distinct")
    }

    pub fn label(self) -> &'static str {
        match self {
            DistributionKind::InverseGaussian => "ig",
            DistributionKind::Gamma => "gamma",
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::Exponential => "exp",
            DistributionKind::ChiSquared => "chi2",
        }
    }

    /// Whether the support is the positive half-line.
    pub fn positive_support(self) -> bool {
        !matches!(self, DistributionKind::Gaussian)
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ig" | "inverse-gaussian" | "inversegaussian" => DistributionKind::InverseGaussian,
            "gamma" => DistributionKind::Gamma,
            "gaussian" | "normal" => DistributionKind::Gaussian,
            "exp" | "exponential" => DistributionKind::Exponential,
            "chi2" | "chi-squared" | "chisquared" => DistributionKind::ChiSquared,
            other => return Err(Error::InvalidArgument(format!("unknown distribution `{other}`"))),
        })
    }
}

/// Moments `m_0..=m_d` as polynomials in the parameters.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    pub kind: DistributionKind,
    pub d: usize,
    vars: Arc<VarTable>,
    entries: Vec<MultiPoly>,
}

impl MomentSequence {
    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn entries(&self) -> &[MultiPoly] {
        &self.entries
    }

    pub fn get(&self, r: usize) -> &MultiPoly {
        &self.entries[r]
    }

    pub fn into_entries(self) -> Vec<MultiPoly> {
        self.entries
    }

    /// Re-derives `m_i` from lower moments with the family recursion and
    /// compares exactly; returns the first order that disagrees.
    pub fn check_recursion(&self) -> std::result::Result<(), usize> {
        let fresh = moment_polys(self.kind, self.d, &self.vars);
        match fresh.iter().zip(&self.entries).position(|(a, b)| a != b) {
            None => Ok(()),
            Some(i) => Err(i),
        }
    }
}

fn moment_polys(kind: DistributionKind, d: usize, vars: &Arc<VarTable>) -> Vec<MultiPoly> {
    let c = |n: i64| MultiPoly::constant(vars, int(n));
    let p = |i: usize| MultiPoly::var(vars, i);
    let mut m = vec![MultiPoly::one(vars)];
    for i in 1..=d {
        let ii = i as i64;
        let next = match kind {
            DistributionKind::InverseGaussian => {
                let (mu, t) = (p(0), p(1));
                if i == 1 {
                    mu
                } else {
                    let mu2 = &mu * &mu;
                    &(&(&c(2 * ii - 3) * &t) * &(&mu2 * &m[i - 1])) + &(&mu2 * &m[i - 2])
                }
            }
            DistributionKind::Gamma => {
                let (k, theta) = (p(0), p(1));
                &(&theta * &m[i - 1]) * &(&k + &c(ii - 1))
            }
            DistributionKind::Gaussian => {
                let (mu, s2) = (p(0), p(1));
                let mut v = &mu * &m[i - 1];
                if i >= 2 {
                    v = &v + &(&(&c(ii - 1) * &s2) * &m[i - 2]);
                }
                v
            }
            DistributionKind::Exponential => &(&c(ii) * &p(0)) * &m[i - 1],
            DistributionKind::ChiSquared => &m[i - 1] * &(&p(0) + &c(2 * ii - 2)),
        };
        m.push(next);
    }
    m
}

/// Symbolic moments `m_0..=m_d` of `kind`.
pub fn moments(kind: DistributionKind, d: usize) -> MomentSequence {
    let vars = kind.param_table();
    let entries = moment_polys(kind, d, &vars);
    MomentSequence { kind, d, vars, entries }
}

/// Cumulants `kappa_1..=kappa_d` as polynomials in the parameters.
#[derive(Debug, Clone)]
pub struct CumulantSequence {
    pub kind: DistributionKind,
    pub d: usize,
    vars: Arc<VarTable>,
    entries: Vec<MultiPoly>,
}

impl CumulantSequence {
    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    /// `entries()[r - 1]` is `kappa_r`.
    pub fn entries(&self) -> &[MultiPoly] {
        &self.entries
    }
}

/// Closed-form cumulants. Inverse Gaussian:
/// `kappa_r = (2r-3)!! mu^(2r-1) t^(r-1)` with `(-1)!! = 1`; gamma:
/// `kappa_r = (r-1)! k theta^r`.
pub fn cumulants(kind: DistributionKind, d: usize) -> Result<CumulantSequence> {
    if d == 0 {
        return Err(Error::InvalidArgument("cumulant order must be at least 1".into()));
    }
    let vars = kind.param_table();
    let mut entries = Vec::with_capacity(d);
    for r in 1..=d as u32 {
        let e = match kind {
            DistributionKind::InverseGaussian => {
                let dfact: i64 = (1..=(2 * r as i64 - 3)).step_by(2).product();
                let mu = MultiPoly::var(&vars, 0).pow(2 * r - 1);
                let t = MultiPoly::var(&vars, 1).pow(r - 1);
                (&mu * &t).scale(&int(dfact))
            }
            DistributionKind::Gamma => {
                let fact: BigInt = (1..r as u64).map(BigInt::from).product();
                let k = MultiPoly::var(&vars, 0);
                let theta = MultiPoly::var(&vars, 1).pow(r);
                (&k * &theta).scale(&Rational::from_integer(fact))
            }
            other => return Err(Error::Unsupported(format!("no closed-form cumulants for {other}"))),
        };
        entries.push(e);
    }
    Ok(CumulantSequence { kind, d, vars, entries })
}

fn binom_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 1..=n {
        let prev = &row[k - 1];
        row.push(prev * BigInt::from(n + 1 - k) / BigInt::from(k));
    }
    row
}

/// `(m_1..m_d) -> (kappa_1..kappa_d)` for `m_0 = 1`, from
/// `m_n = sum_{i=1..n} C(n-1, i-1) kappa_i m_{n-i}`.
pub fn moments_to_cumulants<R: RingElem>(m: &[R]) -> Vec<R> {
    let mut kappa: Vec<R> = Vec::with_capacity(m.len());
    for n in 1..=m.len() {
        let binom = binom_row(n - 1);
        let mut k = m[n - 1].clone();
        for i in 1..n {
            let term = kappa[i - 1].ring_mul(&m[n - i - 1]).scale_int(&binom[i - 1]);
            k = k.ring_sub(&term);
        }
        kappa.push(k);
    }
    kappa
}

/// Inverse of [`moments_to_cumulants`].
pub fn cumulants_to_moments<R: RingElem>(kappa: &[R]) -> Vec<R> {
    let mut m: Vec<R> = Vec::with_capacity(kappa.len());
    for n in 1..=kappa.len() {
        let binom = binom_row(n - 1);
        let mut v = kappa[n - 1].clone();
        for i in 1..n {
            let term = kappa[i - 1].ring_mul(&m[n - i - 1]).scale_int(&binom[i - 1]);
            v = v.ring_add(&term);
        }
        m.push(v);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StirlingKind {
    /// Signed numbers of the first kind: `x(x-1)...(x-n+1) = sum s(n,k) x^k`.
    FirstSigned,
    Second,
}

/// Stirling number; zero when `k > n`.
pub fn stirling(kind: StirlingKind, n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    stirling_triangle(kind, n)[n][k].clone()
}

/// Rows `0..=n` of the Stirling triangle.
pub fn stirling_triangle(kind: StirlingKind, n: usize) -> Vec<Vec<BigInt>> {
    let mut t = vec![vec![BigInt::one()]];
    for i in 1..=n {
        let prev = &t[i - 1];
        let at = |k: usize| prev.get(k).cloned().unwrap_or_default();
        let row: Vec<BigInt> = (0..=i)
            .map(|k| {
                let left = if k == 0 { BigInt::zero() } else { at(k - 1) };
                match kind {
                    StirlingKind::FirstSigned => left - BigInt::from(i - 1) * at(k),
                    StirlingKind::Second => left + BigInt::from(k) * at(k),
                }
            })
            .collect();
        t.push(row);
    }
    t
}

/// Variable table `m0..md`.
pub fn moment_table(d: usize) -> Arc<VarTable> {
    VarTable::indexed("m", 0..d + 1)
}

/// Linear forms `p_0..p_d` in `m_0..m_d` with
/// `p_j = sum_{i<=j} (-2)^(j-i) S(j,i) m_i` for `j >= 1` and `p_0 = m_0`.
/// On chi-squared moments `p_j` evaluates to `k^j`.
pub fn chi2_power_coords(d: usize) -> Vec<MultiPoly> {
    let vars = moment_table(d);
    let s2 = stirling_triangle(StirlingKind::Second, d);
    let mut out = vec![MultiPoly::var(&vars, 0)];
    for j in 1..=d {
        let mut p = MultiPoly::zero(&vars);
        for i in 0..=j {
            let sign_pow = BigInt::from(-2).pow((j - i) as u32);
            let c = Rational::from_integer(sign_pow * &s2[j][i]);
            p = &p + &MultiPoly::var(&vars, i).scale(&c);
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rat;

    fn strs(seq: &MomentSequence) -> Vec<String> {
        seq.entries().iter().map(|p| p.to_canonical_string()).collect()
    }

    #[test]
    fn gaussian_low_moments() {
        let s = strs(&moments(DistributionKind::Gaussian, 4));
        assert_eq!(s[0], "1");
        assert_eq!(s[1], "1 mu");
        assert_eq!(s[2], "1 mu^2 + 1 s2");
        assert_eq!(s[3], "1 mu^3 + 3 mu s2");
        assert_eq!(s[4], "1 mu^4 + 6 mu^2 s2 + 3 s2^2");
    }

    #[test]
    fn inverse_gaussian_low_moments() {
        let s = strs(&moments(DistributionKind::InverseGaussian, 3));
        assert_eq!(s[2], "1 mu^3 t + 1 mu^2");
        assert_eq!(s[3], "3 mu^5 t^2 + 3 mu^4 t + 1 mu^3");
    }

    #[test]
    fn gamma_low_moments() {
        let s = strs(&moments(DistributionKind::Gamma, 2));
        assert_eq!(s[1], "1 kpar theta");
        assert_eq!(s[2], "1 kpar^2 theta^2 + 1 kpar theta^2");
    }

    #[test]
    fn ig_cumulants_closed_form() {
        let c = cumulants(DistributionKind::InverseGaussian, 3).unwrap();
        let s: Vec<String> = c.entries().iter().map(|p| p.to_canonical_string()).collect();
        assert_eq!(s, ["1 mu", "1 mu^3 t", "3 mu^5 t^2"]);
        assert_eq!(cumulants(DistributionKind::InverseGaussian, 1).unwrap().entries().len(), 1);
    }

    #[test]
    fn gamma_cumulants_closed_form() {
        let c = cumulants(DistributionKind::Gamma, 3).unwrap();
        let s: Vec<String> = c.entries().iter().map(|p| p.to_canonical_string()).collect();
        assert_eq!(s, ["1 kpar theta", "1 kpar theta^2", "2 kpar theta^3"]);
        assert!(matches!(cumulants(DistributionKind::Gaussian, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn printed_coordinate_change() {
        let vars = VarTable::new(["m1", "m2", "m3"]).unwrap();
        let m: Vec<MultiPoly> = (0..3).map(|i| MultiPoly::var(&vars, i)).collect();
        let k: Vec<String> = moments_to_cumulants(&m).iter().map(|p| p.to_canonical_string()).collect();
        assert_eq!(k, ["1 m1", "-1 m1^2 + 1 m2", "2 m1^3 - 3 m1 m2 + 1 m3"]);
    }

    #[test]
    fn symbolic_moments_give_closed_form_cumulants() {
        for kind in [DistributionKind::InverseGaussian, DistributionKind::Gamma] {
            let m = moments(kind, 8);
            let k = moments_to_cumulants(&m.entries()[1..]);
            assert_eq!(k, cumulants(kind, 8).unwrap().entries(), "{kind}");
        }
    }

    #[test]
    fn stirling_values() {
        for n in 1..6 {
            assert!(stirling(StirlingKind::Second, n, 0).is_zero());
            assert!(stirling(StirlingKind::FirstSigned, n, 0).is_zero());
            assert_eq!(stirling(StirlingKind::FirstSigned, n, n), BigInt::one());
        }
        assert_eq!(stirling(StirlingKind::Second, 3, 2), BigInt::from(3));
        assert_eq!(stirling(StirlingKind::FirstSigned, 3, 1), BigInt::from(2));
        assert_eq!(stirling(StirlingKind::FirstSigned, 3, 2), BigInt::from(-3));
        assert!(stirling(StirlingKind::Second, 2, 5).is_zero());
    }

    #[test]
    fn stirling_triangles_are_inverse() {
        let n = 8;
        let s1 = stirling_triangle(StirlingKind::FirstSigned, n);
        let s2 = stirling_triangle(StirlingKind::Second, n);
        for a in 0..=n {
            for b in 0..=n {
                let sum: BigInt = (0..=n)
                    .map(|k| s2[a].get(k).cloned().unwrap_or_default() * s1[k].get(b).cloned().unwrap_or_default())
                    .sum();
                assert_eq!(sum, if a == b { BigInt::one() } else { BigInt::zero() }, "({a},{b})");
            }
        }
    }

    #[test]
    fn chi2_coords_printed_entries() {
        let p = chi2_power_coords(3);
        let s: Vec<String> = p.iter().map(|q| q.to_canonical_string()).collect();
        assert_eq!(s, ["1 m0", "1 m1", "-2 m1 + 1 m2", "4 m1 - 6 m2 + 1 m3"]);
    }

    #[test]
    fn chi2_coords_give_powers_of_k() {
        let d = 9;
        let m = moments(DistributionKind::ChiSquared, d);
        let k = MultiPoly::var(m.vars(), 0);
        for (j, p) in chi2_power_coords(d).iter().enumerate() {
            assert_eq!(p.substitute(m.entries()).unwrap(), k.pow(j as u32), "p_{j}");
        }
    }

    #[test]
    fn recursion_check_passes() {
        for kind in DistributionKind::ALL {
            assert_eq!(moments(kind, 12).check_recursion(), Ok(()));
        }
    }

    #[test]
    fn rational_roundtrip_small() {
        let x = vec![rat(1, 2), rat(-3, 7), rat(5, 1)];
        assert_eq!(cumulants_to_moments(&moments_to_cumulants(&x)), x);
    }
}
