use super::{generators, random_nonzero_rational, FamilyId};
use crate::error::{Error, Result};
use crate::exactalg::{int, rank_exact, PolyMatrix, Rational};
use crate::moments::moments;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    /// Moment vector of random parameters.
    SmoothRandom,
    /// `(0, ..., 0, a, b)`.
    L1Line,
    /// `(a, 0, ..., 0, b)`.
    L2Line,
    /// `(1, 0, ..., 0)`.
    ApexPoint0,
    /// `(0, ..., 0, 1)`.
    ApexPointD,
}

impl Stratum {
    pub const ALL: [Stratum; 5] = [
        Stratum::SmoothRandom,
        Stratum::L1Line,
        Stratum::L2Line,
        Stratum::ApexPoint0,
        Stratum::ApexPointD,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stratum::SmoothRandom => "smooth-random",
            Stratum::L1Line => "l1-line",
            Stratum::L2Line => "l2-line",
            Stratum::ApexPoint0 => "apex-point-0",
            Stratum::ApexPointD => "apex-point-d",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stratum::ALL
            .into_iter()
            .find(|st| st.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stratum `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Stratum(Stratum),
    /// Moment vector at explicit chart parameters (IG uses `(mu, t)`).
    Params(Vec<Rational>),
    /// Explicit projective point `(m_0, ..., m_d)`.
    Point(Vec<Rational>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularReport {
    pub family: FamilyId,
    pub d: usize,
    pub stratum: String,
    pub point: Vec<String>,
    pub rank: usize,
    pub codim: usize,
    pub singular: bool,
    pub seed: u64,
}

fn point_for(family: FamilyId, d: usize, spec: &PointSpec, rng: &mut ChaCha8Rng) -> Result<(String, Vec<Rational>)> {
    let kind = family.distribution();
    let at_params = |params: &[Rational]| -> Result<Vec<Rational>> {
        if params.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!("{kind} takes {} parameters, got {}", kind.arity(), params.len())));
        }
        Ok(moments(kind, d).entries().iter().map(|m| m.eval(params)).collect())
    };
    let unit = |i: usize| (0..=d).map(|j| int((i == j) as i64)).collect::<Vec<_>>();
    Ok(match spec {
        PointSpec::Params(p) => ("params".into(), at_params(p)?),
        PointSpec::Point(p) => {
            if p.len() != d + 1 {
                return Err(Error::InvalidArgument(format!("point needs {} coordinates, got {}", d + 1, p.len())));
            }
            ("point".into(), p.clone())
        }
        PointSpec::Stratum(s) => {
            let pt = match s {
                Stratum::SmoothRandom => {
                    let p: Vec<Rational> = (0..kind.arity()).map(|_| random_nonzero_rational(rng)).collect();
                    at_params(&p)?
                }
                Stratum::L1Line | Stratum::L2Line => {
                    let (a, b) = (random_nonzero_rational(rng), random_nonzero_rational(rng));
                    let mut v = vec![int(0); d + 1];
                    let first = if *s == Stratum::L1Line { d - 1 } else { 0 };
                    v[first] = a;
                    v[d] = b;
                    v
                }
                Stratum::ApexPoint0 => unit(0),
                Stratum::ApexPointD => unit(d),
            };
            (s.label().into(), pt)
        }
    })
}

/// Exact rank of the Jacobian of the generators at a point of the variety,
/// compared with the codimension (`d - 2` for surfaces, `d - 1` for curves).
pub fn singular_probe(family: FamilyId, d: usize, spec: &PointSpec, seed: u64) -> Result<SingularReport> {
    if family.is_cumulant() {
        return Err(Error::Unsupported(format!("singular probes work on projective moment varieties, not {family}")));
    }
    let gens = generators(family, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (stratum, point) = point_for(family, d, spec, &mut rng)?;
    if point.iter().all(|x| *x == int(0)) {
        return Err(Error::InvalidArgument("the zero vector is not a projective point".into()));
    }
    if let Some(i) = gens.iter().position(|g| g.eval(&point) != int(0)) {
        return Err(Error::InvalidArgument(format!(
            "point is not on the {family} variety: generator {i} does not vanish"
        )));
    }
    let vars = family.table(d);
    let jac = PolyMatrix::jacobian(&vars, &gens)?;
    let rank = rank_exact(&jac.evaluate(&point));
    let codim = if family.matrix_rows() == 3 { d - 2 } else { d - 1 };
    Ok(SingularReport {
        family,
        d,
        stratum,
        point: point.iter().map(|q| q.to_string()).collect(),
        rank,
        codim,
        singular: rank < codim,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rat;

    #[test]
    fn ig_smooth_at_given_parameters() {
        let r = singular_probe(FamilyId::IG, 6, &PointSpec::Params(vec![int(2), rat(1, 3)]), 0).unwrap();
        assert_eq!((r.rank, r.singular), (4, false));
    }

    #[test]
    fn ig_l1_line_is_singular() {
        let r = singular_probe(FamilyId::IG, 6, &PointSpec::Stratum(Stratum::L1Line), 3).unwrap();
        assert!(r.rank <= 3 && r.singular);
    }

    #[test]
    fn gamma_apex_has_zero_jacobian() {
        let r = singular_probe(FamilyId::Gamma, 6, &PointSpec::Stratum(Stratum::ApexPointD), 0).unwrap();
        assert_eq!(r.rank, 0);
        assert!(r.singular);
    }

    #[test]
    fn off_variety_point_is_usage_error() {
        let p = PointSpec::Point((1..=5).map(int).collect());
        assert!(matches!(singular_probe(FamilyId::Gamma, 4, &p, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn curves_have_codim_d_minus_one() {
        for f in [FamilyId::Exp, FamilyId::Chi2] {
            let r = singular_probe(f, 7, &PointSpec::Stratum(Stratum::SmoothRandom), 5).unwrap();
            assert_eq!((r.rank, r.codim), (6, 6), "{f}");
        }
    }

    #[test]
    fn stratum_parse() {
        for s in Stratum::ALL {
            assert_eq!(s.label().parse::<Stratum>().unwrap(), s);
        }
    }
}
