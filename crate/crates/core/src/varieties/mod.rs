//! Determinantal realizations of the moment and cumulant varieties, their
//! generators, Hilbert series, singular loci and secant dimensions.

mod hilbert;
mod secant;
mod singular;

pub use hilbert::{
    degree_formula, groebner_degree_check, hilbert_closed_form, initial_ideal, initial_ideal_default, ig_displayed_initial_ideal,
    monomial_hilbert, HilbertSeries, MonomialIdeal,
};
pub use secant::{secant_jacobian_rank, SecantReport};
pub use singular::{singular_probe, PointSpec, SingularReport, Stratum};

use crate::error::{Error, Result};
use crate::exactalg::{binomial_u64, int, MultiPoly, PolyMatrix, Rational, VarTable};
use crate::moments::{chi2_power_coords, cumulants, moment_table, moments, DistributionKind};
use num_bigint::BigInt;
use rand::Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FamilyId {
    #[serde(rename = "ig")]
    IG,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "exp")]
    Exp,
    #[serde(rename = "chi2")]
    Chi2,
    #[serde(rename = "cum-ig")]
    CumIG,
    #[serde(rename = "cum-gamma")]
    CumGamma,
}

impl FamilyId {
    pub const ALL: [FamilyId; 7] = [
        FamilyId::IG,
        FamilyId::Gamma,
        FamilyId::Gaussian,
        FamilyId::Exp,
        FamilyId::Chi2,
        FamilyId::CumIG,
        FamilyId::CumGamma,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FamilyId::IG => "ig",
            FamilyId::Gamma => "gamma",
            FamilyId::Gaussian => "gaussian",
            FamilyId::Exp => "exp",
            FamilyId::Chi2 => "chi2",
            FamilyId::CumIG => "cum-ig",
            FamilyId::CumGamma => "cum-gamma",
        }
    }

    pub fn distribution(self) -> DistributionKind {
        match self {
            FamilyId::IG | FamilyId::CumIG => DistributionKind::InverseGaussian,
            FamilyId::Gamma | FamilyId::CumGamma => DistributionKind::Gamma,
            FamilyId::Gaussian => DistributionKind::Gaussian,
            FamilyId::Exp => DistributionKind::Exponential,
            FamilyId::Chi2 => DistributionKind::ChiSquared,
        }
    }

    pub fn is_cumulant(self) -> bool {
        matches!(self, FamilyId::CumIG | FamilyId::CumGamma)
    }

    /// Number of matrix rows, which is also the size of the minors taken.
    pub fn matrix_rows(self) -> usize {
        match self {
            FamilyId::IG | FamilyId::Gamma | FamilyId::Gaussian => 3,
            _ => 2,
        }
    }

    pub fn min_d(self) -> usize {
        self.matrix_rows()
    }

    pub fn matrix_cols(self, d: usize) -> usize {
        if self.is_cumulant() {
            d - 1
        } else {
            d
        }
    }

    /// Variables of the ambient ring: `m0..md`, or `kappa1..kappad`.
    pub fn table(self, d: usize) -> Arc<VarTable> {
        if self.is_cumulant() {
            VarTable::indexed("kappa", 1..d + 1)
        } else {
            moment_table(d)
        }
    }

    fn check_d(self, d: usize) -> Result<()> {
        if d < self.min_d() {
            return Err(Error::InvalidArgument(format!("{self} needs d >= {}, got {d}", self.min_d())));
        }
        Ok(())
    }
}

impl From<DistributionKind> for FamilyId {
    fn from(k: DistributionKind) -> Self {
        match k {
            DistributionKind::InverseGaussian => FamilyId::IG,
            DistributionKind::Gamma => FamilyId::Gamma,
            DistributionKind::Gaussian => FamilyId::Gaussian,
            DistributionKind::Exponential => FamilyId::Exp,
            DistributionKind::ChiSquared => FamilyId::Chi2,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cum-ig" | "cumig" => Ok(FamilyId::CumIG),
            "cum-gamma" | "cumgamma" => Ok(FamilyId::CumGamma),
            other => DistributionKind::from_str(other)
                .map(FamilyId::from)
                .map_err(|_| Error::InvalidArgument(format!("unknown family `{s}`"))),
        }
    }
}

/// Outcome of a verification routine, serialized as
/// `{"family", "d", "check", "pass", "detail"}`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub family: FamilyId,
    pub d: usize,
    pub check: String,
    pub pass: bool,
    pub detail: serde_json::Value,
}

impl CheckReport {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Verification(format!("{} {} d={}: {}", self.check, self.family, self.d, self.detail)))
        }
    }
}

/// The determinantal matrix of `family` at order `d`.
pub fn build_matrix(family: FamilyId, d: usize) -> Result<PolyMatrix> {
    family.check_d(d)?;
    let vars = family.table(d);
    let m = |i: usize| MultiPoly::var(&vars, i);
    let c = |n: i64| MultiPoly::constant(&vars, int(n));
    let cols = family.matrix_cols(d);
    let rows: Vec<Vec<MultiPoly>> = match family {
        FamilyId::IG => vec![
            (0..d).map(|j| if j == 0 { m(0).pow(2) } else { m(j - 1) }).collect(),
            (0..d).map(|j| if j == 0 { MultiPoly::zero(&vars) } else { &c(2 * j as i64 - 1) * &m(j) }).collect(),
            (0..d).map(|j| if j == 0 { m(1).pow(2) } else { m(j + 1) }).collect(),
        ],
        FamilyId::Gamma | FamilyId::Gaussian => {
            // Gamma: (j m_j); Gaussian: (j m_{j-1})
            let top = (0..d)
                .map(|j| match (family, j) {
                    (_, 0) => MultiPoly::zero(&vars),
                    (FamilyId::Gamma, _) => &c(j as i64) * &m(j),
                    _ => &c(j as i64) * &m(j - 1),
                })
                .collect();
            vec![top, (0..d).map(m).collect(), (1..=d).map(m).collect()]
        }
        FamilyId::Exp => vec![(1..=d).map(|j| &c(j as i64) * &m(j - 1)).collect(), (1..=d).map(m).collect()],
        FamilyId::Chi2 => {
            let p = chi2_power_coords(d);
            vec![p[..d].to_vec(), p[1..].to_vec()]
        }
        // kappa_j sits at index j - 1
        FamilyId::CumIG => vec![
            (1..=cols).map(|j| &c(2 * j as i64 - 1) * &m(j - 1)).collect(),
            (1..=cols).map(&m).collect(),
        ],
        FamilyId::CumGamma => {
            let inv_fact = |r: usize| {
                let f: BigInt = (1..r as u64).map(BigInt::from).product();
                Rational::new(BigInt::from(1), f)
            };
            vec![
                (1..=cols).map(|j| m(j - 1).scale(&inv_fact(j))).collect(),
                (1..=cols).map(|j| m(j).scale(&inv_fact(j + 1))).collect(),
            ]
        }
    };
    PolyMatrix::from_rows(&vars, rows)
}

/// The naive 3-row chi-squared matrix `((2j-2) m_{j-1}; m_{j-1}; m_j)`. Its
/// minors vanish on the curve but cut out a surface.
pub fn chi2_naive_matrix(d: usize) -> Result<PolyMatrix> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("chi2 naive matrix needs d >= 3, got {d}")));
    }
    let vars = moment_table(d);
    let m = |i: usize| MultiPoly::var(&vars, i);
    let top = (0..d).map(|j| m(j).scale(&int(2 * j as i64))).collect();
    PolyMatrix::from_rows(&vars, vec![top, (0..d).map(m).collect(), (1..=d).map(m).collect()])
}

/// Expected number of generators of each total degree, as `(degree, count)`.
fn expected_counts(family: FamilyId, d: usize) -> Vec<(u32, u64)> {
    let d = d as u64;
    match family {
        FamilyId::IG => vec![(3, binomial_u64(d - 1, 3)), (4, binomial_u64(d - 1, 2))],
        FamilyId::Gamma | FamilyId::Gaussian => vec![(3, binomial_u64(d, 3))],
        FamilyId::Exp | FamilyId::Chi2 => vec![(2, binomial_u64(d, 2))],
        FamilyId::CumIG | FamilyId::CumGamma => vec![(2, binomial_u64(d - 1, 2))],
    }
}

/// Maximal minors with their column sets, after checking the generator
/// counts by degree.
pub fn generators_with_columns(family: FamilyId, d: usize) -> Result<Vec<(Vec<usize>, MultiPoly)>> {
    let h = build_matrix(family, d)?;
    let minors = if h.cols() < h.rows() { Vec::new() } else { h.maximal_minors()? };
    for (cols, g) in &minors {
        if g.is_zero() {
            return Err(Error::Verification(format!("{family} d={d}: minor {cols:?} vanishes identically")));
        }
    }
    for (deg, want) in expected_counts(family, d) {
        let got = minors.iter().filter(|(_, g)| g.total_degree() == Some(deg)).count() as u64;
        if got != want {
            return Err(Error::Verification(format!("{family} d={d}: {got} generators of degree {deg}, expected {want}")));
        }
    }
    Ok(minors)
}

/// Ideal generators: the maximal minors in lexicographic column order.
pub fn generators(family: FamilyId, d: usize) -> Result<Vec<MultiPoly>> {
    Ok(generators_with_columns(family, d)?.into_iter().map(|(_, g)| g).collect())
}

/// Symbolic values substituted for the ambient variables: moments `m_0..m_d`
/// or cumulants `kappa_1..kappa_d`, over the parameter table.
fn parameterization(family: FamilyId, d: usize) -> Result<Vec<MultiPoly>> {
    let kind = family.distribution();
    if family.is_cumulant() {
        Ok(cumulants(kind, d)?.entries().to_vec())
    } else {
        Ok(moments(kind, d).into_entries())
    }
}

/// Left-kernel vector over the parameter table. For chi-squared this is
/// `(k, -1)` acting on the matrix after substitution, where the entries have
/// become powers of `k`.
pub fn kernel_vector(family: FamilyId) -> Vec<MultiPoly> {
    let vars = family.distribution().param_table();
    let p = |i: usize| MultiPoly::var(&vars, i);
    let neg = MultiPoly::constant(&vars, int(-1));
    match family {
        FamilyId::IG => {
            let mu2 = p(0).pow(2);
            vec![mu2.clone(), &mu2 * &p(1), neg]
        }
        FamilyId::Gamma => vec![p(1), &p(0) * &p(1), neg],
        FamilyId::Gaussian => vec![p(1), p(0), neg],
        FamilyId::Exp | FamilyId::Chi2 => vec![p(0), neg],
        FamilyId::CumIG => vec![&p(0).pow(2) * &p(1), neg],
        FamilyId::CumGamma => vec![p(1), neg],
    }
}

/// Substitutes the symbolic parameterization into the matrix and checks
/// that the kernel vector annihilates every column.
pub fn verify_kernel(family: FamilyId, d: usize) -> Result<CheckReport> {
    let h = build_matrix(family, d)?;
    let values = parameterization(family, d)?;
    let kv = kernel_vector(family);
    let sub = h.map(|e| e.substitute(&values))?;
    let mut bad = Vec::new();
    for c in 0..sub.cols() {
        let mut acc = MultiPoly::zero(kv[0].vars());
        for (r, v) in kv.iter().enumerate() {
            acc = &acc + &(v * sub.get(r, c));
        }
        if !acc.is_zero() {
            bad.push(serde_json::json!({ "column": c, "residual": acc.to_canonical_string() }));
        }
    }
    Ok(CheckReport {
        family,
        d,
        check: "kernel".into(),
        pass: bad.is_empty(),
        detail: serde_json::json!({
            "columns": sub.cols(),
            "kernel": kv.iter().map(|p| p.to_canonical_string()).collect::<Vec<_>>(),
            "failures": bad,
        }),
    })
}

/// Substitutes the symbolic parameterization into every generator and
/// checks that each one vanishes identically. For chi-squared the minors of
/// the naive 3-row matrix are checked as well.
pub fn verify_vanishing(family: FamilyId, d: usize) -> Result<CheckReport> {
    let gens = generators_with_columns(family, d)?;
    let values = parameterization(family, d)?;
    let mut bad = Vec::new();
    let mut check = |label: &str, gens: &[(Vec<usize>, MultiPoly)]| -> Result<()> {
        for (cols, g) in gens {
            if !g.substitute(&values)?.is_zero() {
                bad.push(serde_json::json!({ "matrix": label, "columns": cols }));
            }
        }
        Ok(())
    };
    check("main", &gens)?;
    let mut naive_count = 0;
    if family == FamilyId::Chi2 && d >= 3 {
        let naive = chi2_naive_matrix(d)?.maximal_minors()?;
        naive_count = naive.len();
        check("naive", &naive)?;
    }
    Ok(CheckReport {
        family,
        d,
        check: "vanishing".into(),
        pass: bad.is_empty(),
        detail: serde_json::json!({ "generators": gens.len(), "naive_minors": naive_count, "failures": bad }),
    })
}

pub(crate) const RANDOM_NUMER_BOUND: i64 = 10_000;
pub(crate) const RANDOM_DENOM_BOUND: i64 = 1_000;
pub(crate) const MAX_RESAMPLES: usize = 16;

/// Seeded random rational with numerator in `[-10^4, 10^4]` and denominator
/// in `[1, 10^3]`.
pub(crate) fn random_rational(rng: &mut impl Rng) -> Rational {
    let n = rng.random_range(-RANDOM_NUMER_BOUND..=RANDOM_NUMER_BOUND);
    let d = rng.random_range(1..=RANDOM_DENOM_BOUND);
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn random_nonzero_rational(rng: &mut impl Rng) -> Rational {
    loop {
        let q = random_rational(rng);
        if q != int(0) {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(ps: &[MultiPoly]) -> Vec<String> {
        ps.iter().map(|p| p.to_canonical_string()).collect()
    }

    fn canon_up_to_sign(p: &MultiPoly) -> String {
        let s = p.to_canonical_string();
        let n = (-p).to_canonical_string();
        if s.starts_with('-') {
            n
        } else {
            s
        }
    }

    #[test]
    fn ig_matrix_d3() {
        let h = build_matrix(FamilyId::IG, 3).unwrap();
        let rows: Vec<Vec<String>> = (0..3).map(|r| canon(h.row(r))).collect();
        assert_eq!(rows[0], ["1 m0^2", "1 m0", "1 m1"]);
        assert_eq!(rows[1], ["0", "1 m1", "3 m2"]);
        assert_eq!(rows[2], ["1 m1^2", "1 m2", "1 m3"]);
    }

    #[test]
    fn gamma_matrix_top_row() {
        let h = build_matrix(FamilyId::Gamma, 4).unwrap();
        assert_eq!(canon(h.row(0)), ["0", "1 m1", "2 m2", "3 m3"]);
    }

    #[test]
    fn gaussian_matrix_d4() {
        let h = build_matrix(FamilyId::Gaussian, 4).unwrap();
        assert_eq!(canon(h.row(0)), ["0", "1 m0", "2 m1", "3 m2"]);
        assert_eq!(canon(h.row(2)), ["1 m1", "1 m2", "1 m3", "1 m4"]);
    }

    #[test]
    fn chi2_matrix_d3() {
        let h = build_matrix(FamilyId::Chi2, 3).unwrap();
        assert_eq!(canon(h.row(0)), ["1 m0", "1 m1", "-2 m1 + 1 m2"]);
        assert_eq!(canon(h.row(1)), ["1 m1", "-2 m1 + 1 m2", "4 m1 - 6 m2 + 1 m3"]);
    }

    #[test]
    fn cumulant_matrices() {
        let h = build_matrix(FamilyId::CumIG, 4).unwrap();
        assert_eq!(canon(h.row(0)), ["1 kappa1", "3 kappa2", "5 kappa3"]);
        assert_eq!(canon(h.row(1)), ["1 kappa2", "1 kappa3", "1 kappa4"]);
        let g = build_matrix(FamilyId::CumGamma, 4).unwrap();
        assert_eq!(canon(g.row(0)), ["1 kappa1", "1 kappa2", "1/2 kappa3"]);
        assert_eq!(canon(g.row(1)), ["1 kappa2", "1/2 kappa3", "1/6 kappa4"]);
    }

    #[test]
    fn d_below_minimum_is_usage_error() {
        assert!(matches!(build_matrix(FamilyId::IG, 2), Err(Error::InvalidArgument(_))));
        assert!(build_matrix(FamilyId::Exp, 2).is_ok());
        assert!(build_matrix(FamilyId::Exp, 1).is_err());
    }

    #[test]
    fn ig_d3_generator() {
        let g = generators(FamilyId::IG, 3).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(canon_up_to_sign(&g[0]), "1 m0^2 m1 m3 - 3 m0^2 m2^2 + 3 m0 m1^2 m2 - 1 m1^4");
    }

    #[test]
    fn ig_d5_counts() {
        let g = generators(FamilyId::IG, 5).unwrap();
        assert_eq!(g.iter().filter(|p| p.total_degree() == Some(3)).count(), 4);
        assert_eq!(g.iter().filter(|p| p.total_degree() == Some(4)).count(), 6);
    }

    #[test]
    fn family_parse() {
        for f in FamilyId::ALL {
            assert_eq!(f.label().parse::<FamilyId>().unwrap(), f);
        }
        assert!("poisson".parse::<FamilyId>().is_err());
    }

    #[test]
    fn kernels_small() {
        for f in FamilyId::ALL {
            let d = f.min_d().max(4);
            assert!(verify_kernel(f, d).unwrap().pass, "{f}");
            assert!(verify_vanishing(f, d).unwrap().pass, "{f}");
        }
    }

    #[test]
    fn wrong_kernel_is_reported() {
        // the reversed gamma vector (k theta, theta, -1) does not annihilate
        let h = build_matrix(FamilyId::Gamma, 4).unwrap();
        let values = parameterization(FamilyId::Gamma, 4).unwrap();
        let vars = DistributionKind::Gamma.param_table();
        let p = |i: usize| MultiPoly::var(&vars, i);
        let kv = [&p(0) * &p(1), p(1), MultiPoly::constant(&vars, int(-1))];
        let col = 2;
        let mut acc = MultiPoly::zero(&vars);
        for (r, v) in kv.iter().enumerate() {
            acc = &acc + &(v * &h.get(r, col).substitute(&values).unwrap());
        }
        assert!(!acc.is_zero());
    }
}
