use super::{random_normal_complex, total_degree_solve, PolySystem, SolveReport, TrackerOptions};
use crate::error::{Error, Result};
use crate::exactalg::{MultiPoly, VarTable};
use std::sync::Arc;
use crate::varieties::{generators, FamilyId};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

type C = Complex64;

#[derive(Debug, Clone, Serialize)]
pub struct EdReport {
    pub family: FamilyId,
    pub count: usize,
    pub data: Vec<C>,
    pub reliable: bool,
    pub seed: u64,
    pub solve: SolveReport,
}

const ED_VARS: [&str; 7] = ["m1", "m2", "m3", "k", "mt1", "mt2", "mt3"];

/// The `d = 3` generator restricted to the chart `m0 = 1`.
fn affine_generator(family: FamilyId, vars: &Arc<VarTable>) -> Result<MultiPoly> {
    let g = generators(family, 3)?.remove(0);
    let v = |i: usize| MultiPoly::var(vars, i);
    g.substitute(&[MultiPoly::one(vars), v(0), v(1), v(2)])
}

/// Critical-point system of the squared distance from `m~` to the affine
/// surface `f = 0` (the `d = 3` generator on `m0 = 1`), in unknowns
/// `(m1, m2, m3, k)` with parameters `m~1, m~2, m~3`:
/// `f = 0`, `k df/dm_i - (m_i - m~_i) = 0`.
pub fn ed_system(family: FamilyId) -> Result<PolySystem> {
    if !matches!(family, FamilyId::IG | FamilyId::Gamma | FamilyId::Gaussian) {
        return Err(Error::Unsupported(format!("no ED system for {family}")));
    }
    let vars = VarTable::new(ED_VARS)?;
    let v = |i: usize| MultiPoly::var(&vars, i);
    let f = affine_generator(family, &vars)?;
    let mut eqs = vec![f.clone()];
    for i in 0..3 {
        eqs.push(&(&v(3) * &f.diff(i)) - &(&v(i) - &v(4 + i)));
    }
    PolySystem::from_rational(&vars, 4, &eqs)
}

/// ED degree at explicit data `m~`.
pub fn ed_degree_at(family: FamilyId, data: &[C], opts: &TrackerOptions, seed: u64) -> Result<EdReport> {
    if data.len() != 3 {
        return Err(Error::InvalidArgument(format!("ED data needs 3 coordinates, got {}", data.len())));
    }
    let sys = ed_system(family)?.with_params(data.to_vec())?;
    let solve = total_degree_solve(&sys, opts, seed)?;
    Ok(EdReport {
        family,
        count: solve.regular_count,
        data: data.to_vec(),
        reliable: solve.warning.is_none(),
        seed,
        solve,
    })
}

/// ED degree at seeded random complex data.
pub fn ed_degree(family: FamilyId, seed: u64, opts: &TrackerOptions) -> Result<EdReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<C> = (0..3).map(|_| random_normal_complex(&mut rng)).collect();
    let mut report = ed_degree_at(family, &data, opts, rng.next_u64())?;
    report.seed = seed;
    Ok(report)
}
