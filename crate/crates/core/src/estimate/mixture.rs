use super::{from_chart, mom_single, natural_param_names, positive_params, to_chart, MixtureModel, SampleMoments};
use crate::error::{Error, Result};
use crate::exactalg::{rat_to_f64, VarTable};
use crate::homotopy::{
    dedup_solutions, mixture_moment_polys, mixture_system, mixture_unknowns, monodromy_solve, parameter_track,
    Compiled, MonodromyOptions, Solution, TrackerOptions,
};
use crate::moments::DistributionKind;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, PoisonError};

type C = Complex64;

/// Bumped whenever the start-set format or the mixture system changes.
pub const START_SET_VERSION: u32 = 1;

/// Start sets are built from a fixed seed so every cache holds the same fiber.
const START_SET_SEED: u64 = 0x5EED_0001;

const TRACK_ATTEMPTS: u64 = 8;

/// A generic fiber of the mixture moment map, found once by monodromy and
/// reused as the start system for every estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartSet {
    pub version: u32,
    pub crate_version: String,
    pub kind: DistributionKind,
    pub k: usize,
    pub params: Vec<C>,
    pub solutions: Vec<Vec<C>>,
    pub class_count: usize,
    pub stalled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSource {
    Memory,
    Disk,
    Built,
}

type StartCache = Mutex<HashMap<(DistributionKind, usize), Arc<StartSet>>>;

fn memory() -> &'static StartCache {
    static CACHE: OnceLock<StartCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops every in-memory start set, forcing the next lookup to the disk
/// cache or a rebuild.
pub fn clear_start_set_memory() {
    memory().lock().unwrap_or_else(PoisonError::into_inner).clear();
}

fn cache_path(dir: &Path, kind: DistributionKind, k: usize) -> PathBuf {
    dir.join(format!("start-{}-k{k}-v{START_SET_VERSION}.json", kind.label()))
}

fn load(path: &Path, kind: DistributionKind, k: usize) -> Option<StartSet> {
    let set: StartSet = serde_json::from_slice(&std::fs::read(path).ok()?).ok()?;
    let n = (kind.arity() + 1) * k - 1;
    let valid = set.version == START_SET_VERSION
        && set.crate_version == env!("CARGO_PKG_VERSION")
        && set.kind == kind
        && set.k == k
        && set.params.len() == n
        && !set.solutions.is_empty()
        && set.solutions.iter().all(|s| s.len() == n);
    valid.then_some(set)
}

fn store(dir: &Path, set: &StartSet) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = cache_path(dir, set.kind, set.k);
    let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
    std::fs::write(&tmp, serde_json::to_vec(set)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

/// The start set for `(kind, k)`: from memory, else from `cache_dir`, else
/// built by monodromy and written back. The lock is held while building,
/// so concurrent callers wait for one writer.
pub fn start_set(kind: DistributionKind, k: usize, opts: &EstimateOptions) -> Result<(Arc<StartSet>, StartSource)> {
    let mut mem = memory().lock().unwrap_or_else(PoisonError::into_inner);
    if let Some(set) = mem.get(&(kind, k)) {
        return Ok((set.clone(), StartSource::Memory));
    }
    if let Some(set) = opts.cache_dir.as_ref().and_then(|dir| load(&cache_path(dir, kind, k), kind, k)) {
        let set = Arc::new(set);
        mem.insert((kind, k), set.clone());
        return Ok((set, StartSource::Disk));
    }
    let run = monodromy_solve(kind, k, &opts.monodromy, START_SET_SEED)?;
    let set = StartSet {
        version: START_SET_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        kind,
        k,
        params: run.params,
        solutions: run.solutions,
        class_count: run.report.class_count,
        stalled: run.report.stalled,
    };
    if let Some(dir) = &opts.cache_dir {
        store(dir, &set)?;
    }
    let set = Arc::new(set);
    mem.insert((kind, k), set.clone());
    Ok((set, StartSource::Built))
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub tracker: TrackerOptions,
    pub monodromy: MonodromyOptions,
    pub cache_dir: Option<PathBuf>,
    /// Positive-semidefinite `d x d` weight matrix for the moment residual;
    /// identity when absent.
    pub weight_matrix: Option<Vec<Vec<f64>>>,
    /// Admissible solutions have `|Im| < reality_tol (1 + |Re|)`.
    pub reality_tol: f64,
    pub positivity_margin: f64,
    pub max_lm_iters: usize,
    /// When no admissible solution exists, fit by least squares from the
    /// real parts of the complex solutions instead of returning nothing.
    pub least_squares_fallback: bool,
    pub seed: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            tracker: TrackerOptions::default(),
            monodromy: MonodromyOptions::default(),
            cache_dir: None,
            weight_matrix: None,
            reality_tol: 1e-6,
            positivity_margin: 1e-9,
            max_lm_iters: 200,
            least_squares_fallback: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub rank: usize,
    pub weights: Vec<f64>,
    pub components: Vec<BTreeMap<String, f64>>,
    pub residual: f64,
    /// False for least-squares fits started from a non-real solution; see
    /// `EstimateOptions::least_squares_fallback`.
    pub admissible: bool,
    #[serde(skip)]
    pub model: MixtureModel,
}

impl Candidate {
    fn new(model: MixtureModel, residual: f64) -> Self {
        let names = natural_param_names(model.kind);
        let components = model
            .components
            .iter()
            .map(|c| names.iter().map(|n| n.to_string()).zip(c.iter().copied()).collect())
            .collect();
        Self { rank: 0, weights: model.weights.clone(), components, residual, admissible: true, model }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub kind: DistributionKind,
    pub k: usize,
    pub d: usize,
    /// Candidates by nondecreasing residual.
    pub candidates: Vec<Candidate>,
    /// Distinct regular complex solutions of the square moment system.
    pub complex_count: usize,
    /// Where the start fiber came from. Not serialized, so reports do not
    /// depend on the cache state.
    #[serde(skip)]
    pub start_source: Option<StartSource>,
    pub start_count: usize,
    pub warnings: Vec<String>,
    pub seed: u64,
}

/// `L` with `W = L^T L`.
fn weight_root(w: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if w.len() != d || w.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!("weight matrix must be {d} x {d}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| w[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument("weight matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.min() < -1e-12 * scale {
        return Err(Error::InvalidArgument("weight matrix is not positive semidefinite".into()));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// `L (m(x) - m~)` over all supplied moments, in chart coordinates.
struct Objective {
    compiled: Compiled,
    target: DVector<f64>,
    root: Option<DMatrix<f64>>,
}

impl Objective {
    fn new(kind: DistributionKind, k: usize, m: &SampleMoments, weights: Option<&[Vec<f64>]>) -> Result<Self> {
        let vars = VarTable::new(mixture_unknowns(kind, k))?;
        let polys: Vec<_> = mixture_moment_polys(kind, k, m.d, &vars)
            .iter()
            .map(|p| p.map_coeffs(|q| C::new(rat_to_f64(q), 0.0)))
            .collect();
        Ok(Self {
            compiled: Compiled::new(&polys, vars.len(), vars.len()),
            target: DVector::from_column_slice(&m.values),
            root: weights.map(|w| weight_root(w, m.d)).transpose()?,
        })
    }

    fn weigh(&self, v: DVector<f64>) -> DVector<f64> {
        match &self.root {
            Some(l) => l * v,
            None => v,
        }
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let vals: Vec<C> = x.iter().map(|v| C::from(*v)).collect();
        self.weigh(self.compiled.value(&vals).map(|c| c.re) - &self.target)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let vals: Vec<C> = x.iter().map(|v| C::from(*v)).collect();
        let j = self.compiled.jac_x(&vals).map(|c| c.re);
        match &self.root {
            Some(l) => l * j,
            None => j,
        }
    }
}

/// Levenberg-Marquardt with Marquardt's diagonal scaling. Steps that leave
/// the admissible region are rejected like steps that raise the cost.
fn refine(obj: &Objective, x0: Vec<f64>, admissible: impl Fn(&[f64]) -> bool, iters: usize) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut r = obj.residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..iters {
        let j = obj.jacobian(&x);
        let jt = j.transpose();
        let mut a = &jt * &j;
        let g = &jt * &r;
        for i in 0..a.nrows() {
            a[(i, i)] += lambda * a[(i, i)].max(1e-300);
        }
        let Some(dx) = a.lu().solve(&(-g)) else {
            lambda *= 10.0;
            continue;
        };
        let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a + b).collect();
        let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if dx.amax() <= 1e-15 * (1.0 + xn) {
            break;
        }
        let rc = obj.residual(&cand);
        let cc = rc.norm_squared();
        if cc.is_finite() && cc < cost && admissible(&cand) {
            let gain = cost - cc;
            x = cand;
            r = rc;
            cost = cc;
            lambda = (lambda / 10.0).max(1e-15);
            if gain <= 1e-30 + 1e-16 * cost {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e15 {
                break;
            }
        }
    }
    (x, cost.sqrt())
}

struct Chamber {
    kind: DistributionKind,
    k: usize,
    margin: f64,
}

impl Chamber {
    /// All `k` weights from chart coordinates.
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let n = self.kind.arity();
        let mut w = x[n * self.k..].to_vec();
        w.push(1.0 - w.iter().sum::<f64>());
        w
    }

    fn contains(&self, x: &[f64]) -> bool {
        let n = self.kind.arity();
        let pos = positive_params(self.kind);
        let params_ok = x[..n * self.k].chunks(n).all(|c| c.iter().zip(pos).all(|(v, p)| !*p || *v > self.margin));
        params_ok && self.weights(x).iter().all(|w| *w > self.margin && *w < 1.0 - self.margin)
    }

    fn model(&self, x: &[f64]) -> Option<MixtureModel> {
        let n = self.kind.arity();
        let comps: Option<Vec<Vec<f64>>> = x[..n * self.k].chunks(n).map(|c| from_chart(self.kind, c)).collect();
        let mut w = self.weights(x);
        // exact normalization against rounding in 1 - sum
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let mut m = MixtureModel::new(self.kind, comps?, w).ok()?;
        m.canonicalize();
        Some(m)
    }
}

/// Tracks the start fiber to `target`. Each detour is a bijection between
/// fibers only for paths that arrive, so the whole fiber is re-tracked
/// along fresh detours until the distinct endpoints cover the start set.
fn track_fiber(
    kind: DistributionKind,
    k: usize,
    set: &StartSet,
    target: &[C],
    opts: &EstimateOptions,
) -> Result<Vec<Vec<C>>> {
    let sys = mixture_system(kind, k)?;
    let mut found: Vec<Solution> = Vec::new();
    for attempt in 0..TRACK_ATTEMPTS {
        let seed = opts.seed.wrapping_add(attempt);
        let ends = parameter_track(&sys, &set.params, &set.solutions, target, &opts.tracker, seed)?;
        found.extend(ends.into_iter().filter(|s| s.flags.regular));
        found = dedup_solutions(found, opts.tracker.tol_dedup);
        if found.len() >= set.solutions.len() {
            break;
        }
    }
    Ok(found.into_iter().map(|s| s.point).collect())
}

/// Method-of-moments estimates of a `k`-component mixture, ranked by the
/// residual over all `d` supplied moments.
///
/// The square system on the first `(n+1)k - 1` moments is solved by
/// parameter homotopy from the cached start fiber; real solutions with
/// positive parameters and weights in `(0, 1)` are refined by
/// Levenberg-Marquardt over every moment.
pub fn mom_mixture(kind: DistributionKind, k: usize, m: &SampleMoments, opts: &EstimateOptions) -> Result<EstimateReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let square = (kind.arity() + 1) * k - 1;
    if m.d < square {
        return Err(Error::InvalidArgument(format!("{kind} with k = {k} needs d >= {square}, got {}", m.d)));
    }
    let obj = Objective::new(kind, k, m, opts.weight_matrix.as_deref())?;
    let mut warnings = m.warnings(kind);
    let chamber = Chamber { kind, k, margin: opts.positivity_margin };

    if k == 1 {
        let model = mom_single(kind, m)?;
        let residual = obj.residual(&to_chart(kind, &model.components[0])).norm();
        let mut c = Candidate::new(model, residual);
        c.rank = 1;
        return Ok(EstimateReport {
            kind,
            k,
            d: m.d,
            candidates: vec![c],
            complex_count: 1,
            start_source: None,
            start_count: 1,
            warnings,
            seed: opts.seed,
        });
    }

    let (set, source) = start_set(kind, k, opts)?;
    let target: Vec<C> = m.values[..square].iter().map(|v| C::from(*v)).collect();
    let fiber = track_fiber(kind, k, &set, &target, opts)?;
    if fiber.len() < set.solutions.len() {
        warnings.push(format!("reached {} of {} fiber solutions", fiber.len(), set.solutions.len()));
    }

    let tol = opts.reality_tol;
    let mut candidates: Vec<Candidate> = Vec::new();
    let add = |candidates: &mut Vec<Candidate>, start: Vec<f64>, admissible: bool| {
        let (xr, residual) = refine(&obj, start, |y| chamber.contains(y), opts.max_lm_iters);
        let Some(model) = chamber.model(&xr) else { return };
        let mut cand = Candidate::new(model, residual);
        cand.admissible = admissible;
        match candidates.iter_mut().find(|c| c.model.relative_distance(&cand.model) < 1e-8) {
            Some(c) if c.residual <= cand.residual => {}
            Some(c) => *c = cand,
            None => candidates.push(cand),
        }
    };
    for x in &fiber {
        let real: Vec<f64> = x.iter().map(|c| c.re).collect();
        if x.iter().all(|c| c.im.abs() < tol * (1.0 + c.re.abs())) && chamber.contains(&real) {
            add(&mut candidates, real, true);
        }
    }
    if candidates.is_empty() && opts.least_squares_fallback {
        // Noise can push a pair of nearby real roots off the real line.
        // Fall back to least squares over real parameters, started from
        // the real parts of the complex solutions.
        for x in &fiber {
            let real: Vec<f64> = x.iter().map(|c| c.re).collect();
            if chamber.contains(&real) {
                add(&mut candidates, real, false);
            }
        }
    }
    if !candidates.iter().any(|c| c.admissible) {
        warnings.push(format!("no admissible solution among {} complex solutions", fiber.len()));
    }
    candidates.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    for (i, c) in candidates.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    Ok(EstimateReport {
        kind,
        k,
        d: m.d,
        candidates,
        complex_count: fiber.len(),
        start_source: Some(source),
        start_count: set.solutions.len(),
        warnings,
        seed: opts.seed,
    })
}

/// A random well-separated mixture: consecutive component means differ by
/// a factor of at least 1.5, and for `k = 2` the weights lie in
/// `[0.2, 0.8]`. Components are sorted by mean.
pub fn plant_mixture(kind: DistributionKind, k: usize, seed: u64) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges: &[(f64, f64)] = match kind {
        DistributionKind::InverseGaussian => &[(0.5, 4.0), (1.0, 20.0)],
        DistributionKind::Gamma => &[(0.5, 8.0), (0.2, 3.0)],
        DistributionKind::Gaussian => &[(0.5, 5.0), (0.1, 2.0)],
        DistributionKind::Exponential => &[(0.5, 5.0)],
        DistributionKind::ChiSquared => &[(1.0, 10.0)],
    };
    for _ in 0..10_000 {
        let comps: Vec<Vec<f64>> =
            (0..k).map(|_| ranges.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..4.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let mut m = MixtureModel::new(kind, comps, weights)?;
        m.canonicalize();
        if (1..k).all(|i| m.component_mean(i) >= 1.5 * m.component_mean(i - 1)) {
            return Ok(m);
        }
    }
    Err(Error::Numerical("could not plant a well-separated mixture".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_root_reconstructs() {
        let w = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let l = weight_root(&w, 2).unwrap();
        let back = l.transpose() * &l;
        assert!((back[(0, 1)] - 1.0).abs() < 1e-12 && (back[(1, 1)] - 2.0).abs() < 1e-12);
        assert!(weight_root(&[vec![1.0, 2.0], vec![2.0, 1.0]], 2).is_err());
        assert!(weight_root(&[vec![1.0, 0.5], vec![0.0, 1.0]], 2).is_err());
    }

    #[test]
    fn planted_mixtures_are_separated() {
        for seed in 0..20 {
            let m = plant_mixture(DistributionKind::Gamma, 2, seed).unwrap();
            assert!(m.component_mean(1) >= 1.5 * m.component_mean(0));
            assert!(m.weights.iter().all(|w| (0.2..=0.8).contains(w)));
        }
    }

    #[test]
    fn chamber_filters() {
        let c = Chamber { kind: DistributionKind::Gaussian, k: 2, margin: 1e-9 };
        assert!(c.contains(&[-1.0, 1.0, 2.0, 1.0, 0.3]));
        assert!(!c.contains(&[-1.0, -1.0, 2.0, 1.0, 0.3]));
        assert!(!c.contains(&[-1.0, 1.0, 2.0, 1.0, 1.3]));
    }

    #[test]
    fn single_component_delegates() {
        let m = SampleMoments::new(vec![2.0, 6.0, 24.0], 1).unwrap();
        let r = mom_mixture(DistributionKind::Gamma, 1, &m, &EstimateOptions::default()).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.candidates[0].model.components[0], [2.0, 1.0]);
        assert!(r.candidates[0].residual < 1e-12);
    }

    #[test]
    fn levenberg_marquardt_polishes() {
        let model = MixtureModel::single(DistributionKind::Gamma, vec![2.0, 1.5]).unwrap();
        let m = SampleMoments::exact(&model, 4);
        let obj = Objective::new(DistributionKind::Gamma, 1, &m, None).unwrap();
        let (x, res) = refine(&obj, vec![2.1, 1.4], |_| true, 200);
        assert!((x[0] - 2.0).abs() < 1e-10 && (x[1] - 1.5).abs() < 1e-10, "{x:?}");
        assert!(res < 1e-9);
    }
}
