//! Numerical polynomial-system solving by homotopy continuation: total-degree
//! homotopies, parameter homotopies, monodromy and ED-degree systems.
//!
//! Paths are tracked with a fourth-order Runge–Kutta predictor on the
//! Davidenko equation and a short Newton corrector. There is no endgame, so
//! only finite regular endpoints are counted.

mod ed;
mod monodromy;
mod system;
mod tracker;

pub use ed::{ed_degree, ed_degree_at, ed_system, EdReport};
pub use monodromy::{
    label_orbit, mixture_system, monodromy_count, monodromy_solve, MonodromyOptions, MonodromyReport, MonodromyRun,
};
pub use system::PolySystem;
pub(crate) use monodromy::{mixture_moment_polys, mixture_unknowns};
pub(crate) use system::Compiled;

use crate::error::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::TAU;
use tracker::{norm, track, Homotopy, ParameterHomotopy, PathEnd, PathStatus, TotalDegreeHomotopy};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Newton updates must fall below this, relative to the point.
    pub tol_corrector: f64,
    pub max_corrector_iters: usize,
    /// Endpoints with backward error above this are marked failed.
    pub residual_cap: f64,
    pub tol_dedup: f64,
    pub reality_tol: f64,
    /// Condition numbers at or above this make an endpoint singular-suspect.
    pub condition_cap: f64,
    /// Paths whose max-norm exceeds this are truncated as diverging.
    pub divergence_norm: f64,
    /// A path that underflows its step with at least this norm counts as
    /// diverging rather than failed.
    pub infinity_hint: f64,
    pub max_steps: usize,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.02,
            min_step: 1e-13,
            max_step: 0.1,
            tol_corrector: 1e-9,
            max_corrector_iters: 3,
            residual_cap: 1e-8,
            tol_dedup: 1e-8,
            reality_tol: 1e-8,
            condition_cap: 1e10,
            divergence_norm: 1e8,
            infinity_hint: 1e4,
            max_steps: 50_000,
        }
    }
}

impl TrackerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.initial_step,
            self.min_step,
            self.max_step,
            self.tol_corrector,
            self.residual_cap,
            self.tol_dedup,
            self.reality_tol,
            self.condition_cap,
            self.divergence_norm,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("tracker tolerances and steps must be positive".into()));
        }
        if !(self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return Err(Error::InvalidArgument("need min_step <= initial_step <= max_step".into()));
        }
        if self.max_corrector_iters == 0 {
            return Err(Error::InvalidArgument("max_corrector_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolutionFlags {
    pub regular: bool,
    pub singular_suspect: bool,
    pub failed: bool,
    pub at_infinity: bool,
    pub real: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub point: Vec<C>,
    pub residual: f64,
    pub condition: f64,
    pub flags: SolutionFlags,
    pub path_id: usize,
}

impl Solution {
    pub fn is_regular(&self) -> bool {
        self.flags.regular
    }
}

/// Outcome of a total-degree solve. `solutions` holds the deduplicated
/// finite regular endpoints in canonical order.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub paths_tracked: usize,
    pub converged: usize,
    pub at_infinity: usize,
    pub failed: usize,
    pub regular_count: usize,
    pub solutions: Vec<Solution>,
    pub seed: u64,
    pub options: TrackerOptions,
    pub warning: Option<String>,
}

pub(crate) fn random_unit_complex(rng: &mut impl Rng) -> C {
    C::from_polar(1.0, rng.random_range(0.0..TAU))
}

pub(crate) fn random_normal_complex(rng: &mut impl Rng) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `F(x) = 0` at fixed parameters, seen as a constant homotopy.
struct Fixed<'a> {
    compiled: &'a Compiled,
    params: &'a [C],
}

impl Fixed<'_> {
    fn vals(&self, x: &DVector<C>) -> Vec<C> {
        let mut v = x.as_slice().to_vec();
        v.extend_from_slice(self.params);
        v
    }
}

impl Homotopy for Fixed<'_> {
    fn value_jac(&self, x: &DVector<C>, _t: f64) -> (DVector<C>, nalgebra::DMatrix<C>) {
        let v = self.vals(x);
        (self.compiled.value(&v), self.compiled.jac_x(&v))
    }

    fn dt(&self, x: &DVector<C>, _t: f64) -> DVector<C> {
        DVector::zeros(x.len())
    }
}

/// Condition number of the row-equilibrated Jacobian, each row scaled by
/// the same term magnitude that normalizes the residual.
fn condition(compiled: &Compiled, vals: &[C]) -> f64 {
    let mut j = compiled.jac_x(vals);
    for (i, e) in compiled.eqs.iter().enumerate() {
        let scale = 1.0 / (1.0 + e.magnitude(vals));
        j.row_mut(i).scale_mut(scale);
    }
    match j.clone().try_inverse() {
        Some(inv) => j.norm() * inv.norm(),
        None => f64::INFINITY,
    }
}

/// Polishes an endpoint on the target system and classifies it.
fn finish(compiled: &Compiled, params: &[C], end: PathEnd, path_id: usize, opts: &TrackerOptions) -> Solution {
    let fixed = Fixed { compiled, params };
    let mut x = end.x;
    if end.status == PathStatus::Converged {
        // keep Newton steps while they do not raise the backward error
        for _ in 0..5 {
            let (f, j) = fixed.value_jac(&x, 0.0);
            let Some(dx) = j.lu().solve(&(-f)) else { break };
            let step = norm(&dx);
            let cand = &x + dx;
            if compiled.relative_residual(&fixed.vals(&cand)) > compiled.relative_residual(&fixed.vals(&x)) {
                break;
            }
            x = cand;
            if step <= 1e-15 * (1.0 + norm(&x)) {
                break;
            }
        }
    }
    let vals = fixed.vals(&x);
    let residual = compiled.relative_residual(&vals);
    let cond = condition(compiled, &vals);
    let finite = x.iter().all(|c| c.re.is_finite() && c.im.is_finite()) && norm(&x) <= opts.divergence_norm;
    let at_infinity = end.status == PathStatus::AtInfinity || !finite;
    let failed = end.status == PathStatus::Failed || (end.status == PathStatus::Converged && residual > opts.residual_cap);
    let converged = end.status == PathStatus::Converged && finite && !failed;
    let regular = converged && residual <= opts.tol_corrector && cond < opts.condition_cap;
    let real = finite && x.iter().all(|c| c.im.abs() < opts.reality_tol * (1.0 + c.norm()));
    Solution {
        point: x.iter().copied().collect(),
        residual,
        condition: cond,
        flags: SolutionFlags { regular, singular_suspect: converged && !regular, failed, at_infinity, real },
        path_id,
    }
}

/// Coordinatewise relative distance below `tol`.
pub fn same_point(a: &[C], b: &[C], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm())))
}

fn canonical_cmp(a: &[C], b: &[C]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then_with(|| x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Sorts canonically and drops points within `tol` of an earlier one.
pub fn dedup_solutions(mut sols: Vec<Solution>, tol: f64) -> Vec<Solution> {
    sols.sort_by(|a, b| canonical_cmp(&a.point, &b.point).then(a.path_id.cmp(&b.path_id)));
    let mut out: Vec<Solution> = Vec::with_capacity(sols.len());
    for s in sols {
        if !out.iter().any(|o| same_point(&o.point, &s.point, tol)) {
            out.push(s);
        }
    }
    out
}

fn start_solutions(degrees: &[u32], c: &[C]) -> Vec<Vec<C>> {
    let mut out = vec![Vec::new()];
    for (d, ci) in degrees.iter().zip(c) {
        let root = ci.powf(1.0 / *d as f64);
        let mut next = Vec::with_capacity(out.len() * *d as usize);
        for prefix in &out {
            for j in 0..*d {
                let mut v = prefix.clone();
                v.push(root * C::from_polar(1.0, TAU * j as f64 / *d as f64));
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Solves `sys` at its current parameters from the start system
/// `x_i^{d_i} = c_i`, tracking all `prod d_i` paths.
pub fn total_degree_solve(sys: &PolySystem, opts: &TrackerOptions, seed: u64) -> Result<SolveReport> {
    opts.validate()?;
    let degrees = sys.degrees();
    if degrees.contains(&0) {
        return Err(Error::InvalidArgument("every equation needs positive degree in the unknowns".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = random_unit_complex(&mut rng);
    let c: Vec<C> = (0..sys.n()).map(|_| random_unit_complex(&mut rng)).collect();
    let starts = start_solutions(&degrees, &c);
    let h = TotalDegreeHomotopy { sys, degrees, c, gamma };
    let ends: Vec<Solution> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| finish(sys.compiled(), sys.params(), track(&h, s, opts), i, opts))
        .collect();
    let paths = ends.len();
    let converged = ends.iter().filter(|s| s.flags.regular || s.flags.singular_suspect).count();
    let at_infinity = ends.iter().filter(|s| s.flags.at_infinity).count();
    let failed = ends.iter().filter(|s| s.flags.failed && !s.flags.at_infinity).count();
    let regular: Vec<Solution> = ends.into_iter().filter(|s| s.flags.regular).collect();
    let solutions = dedup_solutions(regular, opts.tol_dedup);
    let warning = (failed * 100 > paths).then(|| format!("{failed} of {paths} paths failed"));
    Ok(SolveReport {
        paths_tracked: paths,
        converged,
        at_infinity,
        failed,
        regular_count: solutions.len(),
        solutions,
        seed,
        options: *opts,
        warning,
    })
}

/// Tracks each start solution from `start_params` to `target_params` along
/// a complex-bent segment. Every start yields exactly one entry, flagged
/// failed when it does not arrive.
pub fn parameter_track(
    sys: &PolySystem,
    start_params: &[C],
    start_sols: &[Vec<C>],
    target_params: &[C],
    opts: &TrackerOptions,
    seed: u64,
) -> Result<Vec<Solution>> {
    opts.validate()?;
    if start_params.len() != sys.nparams() || target_params.len() != sys.nparams() {
        return Err(Error::Shape(format!("system has {} parameters", sys.nparams())));
    }
    if start_sols.iter().any(|s| s.len() != sys.n()) {
        return Err(Error::Shape(format!("start solutions need {} coordinates", sys.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = random_unit_complex(&mut rng);
    Ok(track_segment(sys.compiled(), start_params, start_sols, target_params, gamma, opts))
}

pub(crate) fn track_segment(
    compiled: &Compiled,
    p0: &[C],
    starts: &[Vec<C>],
    p1: &[C],
    gamma: C,
    opts: &TrackerOptions,
) -> Vec<Solution> {
    let h = ParameterHomotopy { compiled, p0: p0.to_vec(), p1: p1.to_vec(), gamma };
    starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| finish(compiled, p1, track(&h, s, opts), i, opts))
        .collect()
}
