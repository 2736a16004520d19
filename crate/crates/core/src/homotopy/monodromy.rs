use super::{
    dedup_solutions, random_normal_complex, random_unit_complex, same_point, track_segment, PolySystem,
    TrackerOptions,
};
use crate::error::{Error, Result};
use crate::exactalg::{MultiPoly, VarTable};
use crate::moments::{moments, DistributionKind};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyOptions {
    pub tracker: TrackerOptions,
    /// Stop after this many consecutive loops that find nothing new.
    pub stall_loops: usize,
    pub max_loops: usize,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self { tracker: TrackerOptions::default(), stall_loops: 10, max_loops: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyReport {
    pub kind: DistributionKind,
    pub k: usize,
    /// Solutions in the fiber, counting label permutations separately.
    pub raw_count: usize,
    /// Solutions up to relabeling the components.
    pub class_count: usize,
    pub orbit_sizes: Vec<usize>,
    pub loops: usize,
    /// True when the stall criterion ended the search; false when
    /// `max_loops` was reached first.
    pub stalled: bool,
    pub path_failures: usize,
    pub seed: u64,
}

/// A fiber of the mixture moment map: all solutions found over `params`.
#[derive(Debug, Clone, Serialize)]
pub struct MonodromyRun {
    pub params: Vec<C>,
    pub solutions: Vec<Vec<C>>,
    pub report: MonodromyReport,
}

/// The moment equations of a `k`-component mixture, identifiable up to
/// order `(n+1)k - 1` for `n`-parameter components.
///
/// Unknowns are the component parameters (component-major) and weights
/// `alpha_1..alpha_{k-1}`, with `alpha_k = 1 - sum`. Parameters are the
/// target moments `p_1..p_{(n+1)k-1}`.
pub fn mixture_system(kind: DistributionKind, k: usize) -> Result<PolySystem> {
    if k == 0 {
        return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
    }
    let mut names = mixture_unknowns(kind, k);
    let unknowns = names.len();
    names.extend((1..=unknowns).map(|r| format!("p{r}")));
    let vars = VarTable::new(names)?;

    let v = |i: usize| MultiPoly::var(&vars, i);
    let eqs: Vec<MultiPoly> = mixture_moment_polys(kind, k, unknowns, &vars)
        .into_iter()
        .enumerate()
        .map(|(r, m)| &m - &v(unknowns + r))
        .collect();
    PolySystem::from_rational(&vars, unknowns, &eqs)
}

/// Names of the mixture unknowns: component parameters, then weights.
pub(crate) fn mixture_unknowns(kind: DistributionKind, k: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=k)
        .flat_map(|i| kind.param_names().iter().map(move |p| format!("{p}_{i}")))
        .collect();
    names.extend((1..k).map(|i| format!("alpha_{i}")));
    names
}

/// `sum_i alpha_i m_r(theta_i)` for `r = 1..=d`, over a table whose first
/// `nk + k - 1` variables are the mixture unknowns.
pub(crate) fn mixture_moment_polys(kind: DistributionKind, k: usize, d: usize, vars: &Arc<VarTable>) -> Vec<MultiPoly> {
    let n = kind.arity();
    let seq = moments(kind, d);
    let v = |i: usize| MultiPoly::var(vars, i);
    let mut last = MultiPoly::one(vars);
    let weights: Vec<MultiPoly> = (0..k)
        .map(|i| {
            if i + 1 < k {
                last = &last - &v(n * k + i);
                v(n * k + i)
            } else {
                last.clone()
            }
        })
        .collect();
    (1..=d)
        .map(|r| {
            (0..k).fold(MultiPoly::zero(vars), |acc, i| {
                let map: Vec<usize> = (0..n).map(|j| i * n + j).collect();
                &acc + &(&weights[i] * &seq.get(r).embed(vars, &map))
            })
        })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// All relabelings of a mixture solution under the symmetric group on
/// components, identity first.
pub fn label_orbit(kind: DistributionKind, k: usize, x: &[C]) -> Vec<Vec<C>> {
    let n = kind.arity();
    assert_eq!(x.len(), n * k + k - 1);
    let mut w: Vec<C> = x[n * k..].to_vec();
    w.push(C::from(1.0) - w.iter().sum::<C>());
    permutations(k)
        .into_iter()
        .map(|perm| {
            let mut y: Vec<C> = perm.iter().flat_map(|&i| x[i * n..(i + 1) * n].iter().copied()).collect();
            y.extend(perm[..k - 1].iter().map(|&i| w[i]));
            y
        })
        .collect()
}

fn contains(set: &[Vec<C>], x: &[C], tol: f64) -> bool {
    set.iter().any(|s| same_point(s, x, tol))
}

/// Populates a generic fiber of the mixture moment map by monodromy.
///
/// A random complex mixture is planted as the first solution and its
/// moments become the base parameters. Each loop moves the whole fiber
/// around a random triangle in parameter space; every new endpoint brings
/// its full relabeling orbit along.
pub fn monodromy_solve(kind: DistributionKind, k: usize, opts: &MonodromyOptions, seed: u64) -> Result<MonodromyRun> {
    opts.tracker.validate()?;
    if opts.stall_loops == 0 || opts.max_loops == 0 {
        return Err(Error::InvalidArgument("stall_loops and max_loops must be positive".into()));
    }
    let sys = mixture_system(kind, k)?;
    let n = sys.n();
    let tol = opts.tracker.tol_dedup;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // moments of a random complex mixture, so all vertices share a scale
    let moment_map = sys.clone().with_params(vec![C::from(0.0); n])?;
    let random_params = |rng: &mut ChaCha8Rng| -> (Vec<C>, Vec<C>) {
        let x: Vec<C> = (0..n).map(|_| random_normal_complex(rng)).collect();
        let p = moment_map.eval(&x);
        (x, p)
    };
    let (planted, base) = random_params(&mut rng);
    let residual: f64 = sys.clone().with_params(base.clone())?.eval(&planted).iter().map(|c| c.norm()).sum();
    if residual > 1e-8 {
        return Err(Error::Numerical(format!("planted point has residual {residual:e}")));
    }
    let mut fiber: Vec<Vec<C>> = Vec::new();
    for y in label_orbit(kind, k, &planted) {
        if !contains(&fiber, &y, tol) {
            fiber.push(y);
        }
    }

    let (mut loops, mut quiet, mut failures) = (0, 0, 0);
    while quiet < opts.stall_loops && loops < opts.max_loops {
        loops += 1;
        let (_, p1) = random_params(&mut rng);
        let (_, p2) = random_params(&mut rng);
        let legs = [(&base, &p1), (&p1, &p2), (&p2, &base)];
        let mut current = fiber.clone();
        for (a, b) in legs {
            let gamma = random_unit_complex(&mut rng);
            let ends = track_segment(sys.compiled(), a, &current, b, gamma, &opts.tracker);
            failures += ends.iter().filter(|s| !s.flags.regular).count();
            current = ends.into_iter().filter(|s| s.flags.regular).map(|s| s.point).collect();
        }
        let before = fiber.len();
        for x in current {
            if contains(&fiber, &x, tol) {
                continue;
            }
            for y in label_orbit(kind, k, &x) {
                if !contains(&fiber, &y, tol) {
                    fiber.push(y);
                }
            }
        }
        quiet = if fiber.len() > before { 0 } else { quiet + 1 };
    }

    let orbit_sizes = orbit_sizes(kind, k, &fiber, tol);
    let solutions = canonical_order(fiber, tol);
    let report = MonodromyReport {
        kind,
        k,
        raw_count: solutions.len(),
        class_count: orbit_sizes.len(),
        orbit_sizes,
        loops,
        stalled: quiet >= opts.stall_loops,
        path_failures: failures,
        seed,
    };
    Ok(MonodromyRun { params: base, solutions, report })
}

pub fn monodromy_count(kind: DistributionKind, k: usize, opts: &MonodromyOptions, seed: u64) -> Result<MonodromyReport> {
    Ok(monodromy_solve(kind, k, opts, seed)?.report)
}

fn orbit_sizes(kind: DistributionKind, k: usize, fiber: &[Vec<C>], tol: f64) -> Vec<usize> {
    let mut seen = vec![false; fiber.len()];
    let mut sizes = Vec::new();
    for i in 0..fiber.len() {
        if seen[i] {
            continue;
        }
        let orbit = label_orbit(kind, k, &fiber[i]);
        let mut size = 0;
        for (j, y) in fiber.iter().enumerate() {
            if !seen[j] && contains(&orbit, y, tol) {
                seen[j] = true;
                size += 1;
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable();
    sizes
}

fn canonical_order(fiber: Vec<Vec<C>>, tol: f64) -> Vec<Vec<C>> {
    let sols = fiber
        .into_iter()
        .enumerate()
        .map(|(i, point)| super::Solution {
            point,
            residual: 0.0,
            condition: 0.0,
            flags: Default::default(),
            path_id: i,
        })
        .collect();
    dedup_solutions(sols, tol).into_iter().map(|s| s.point).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[0], [0, 1, 2]);
        assert_eq!(permutations(1), [[0]]);
    }

    #[test]
    fn mixture_system_shape() {
        let s = mixture_system(DistributionKind::Gamma, 2).unwrap();
        assert_eq!((s.n(), s.nparams()), (5, 5));
        // m_r of a gamma has degree 2r; the weight adds one
        assert_eq!(s.degrees(), [3, 5, 7, 9, 11]);
        let s = mixture_system(DistributionKind::Exponential, 3).unwrap();
        assert_eq!((s.n(), s.nparams()), (5, 5));
    }

    #[test]
    fn mixture_moments_of_a_known_point() {
        // exponential mixture 0.25 Exp(1) + 0.75 Exp(2): m_r = r! (0.25 + 0.75 * 2^r)
        let s = mixture_system(DistributionKind::Exponential, 2).unwrap();
        let target: Vec<C> = [1.75, 6.5, 37.5].iter().map(|v| C::from(*v)).collect();
        let s = s.with_params(target).unwrap();
        let x = [C::from(1.0), C::from(2.0), C::from(0.25)];
        assert!(s.eval(&x).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn orbit_swaps_components_and_weights() {
        let x = [C::from(1.0), C::from(2.0), C::from(3.0), C::from(4.0), C::from(0.25)];
        let orbit = label_orbit(DistributionKind::Gamma, 2, &x);
        assert_eq!(orbit.len(), 2);
        assert_eq!(orbit[0], x);
        let swapped: Vec<f64> = orbit[1].iter().map(|c| c.re).collect();
        assert_eq!(swapped, [3.0, 4.0, 1.0, 2.0, 0.75]);
    }

    #[test]
    fn exponential_pair_fiber() {
        // two-component exponential mixtures are identified up to swapping
        let r = monodromy_count(DistributionKind::Exponential, 2, &MonodromyOptions::default(), 3).unwrap();
        assert_eq!((r.raw_count, r.class_count), (2, 1));
        assert!(r.stalled);
    }
}
