use super::system::{Compiled, PolySystem};
use super::TrackerOptions;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C = Complex64;

/// `H(x, t)` with `t` running from 1 (start) to 0 (target).
pub(crate) trait Homotopy: Sync {
    /// `(H, dH/dx)`.
    fn value_jac(&self, x: &DVector<C>, t: f64) -> (DVector<C>, DMatrix<C>);

    /// `dH/dt`.
    fn dt(&self, x: &DVector<C>, t: f64) -> DVector<C>;
}

/// `H = (1 - t) F + t gamma G` with `G_i = x_i^{d_i} - c_i`.
pub(crate) struct TotalDegreeHomotopy<'a> {
    pub sys: &'a PolySystem,
    pub degrees: Vec<u32>,
    pub c: Vec<C>,
    pub gamma: C,
}

impl TotalDegreeHomotopy<'_> {
    fn start_value(&self, x: &DVector<C>) -> DVector<C> {
        DVector::from_fn(x.len(), |i, _| x[i].powu(self.degrees[i]) - self.c[i])
    }
}

impl Homotopy for TotalDegreeHomotopy<'_> {
    fn value_jac(&self, x: &DVector<C>, t: f64) -> (DVector<C>, DMatrix<C>) {
        let vals = self.sys.full_point(x.as_slice(), self.sys.params());
        let c = self.sys.compiled();
        let s = self.gamma * t;
        let f = c.value(&vals) * C::from(1.0 - t) + self.start_value(x) * s;
        let mut j = c.jac_x(&vals) * C::from(1.0 - t);
        for i in 0..x.len() {
            let d = self.degrees[i];
            j[(i, i)] += s * C::from(d as f64) * x[i].powu(d - 1);
        }
        (f, j)
    }

    fn dt(&self, x: &DVector<C>, _t: f64) -> DVector<C> {
        let vals = self.sys.full_point(x.as_slice(), self.sys.params());
        self.start_value(x) * self.gamma - self.sys.compiled().value(&vals)
    }
}

/// `H = F(x, p(t))` along `p(t) = p1 + tau(t) (p0 - p1)` with
/// `tau(t) = gamma t / (1 + (gamma - 1) t)`, which bends the segment off the
/// real line while keeping both endpoints.
pub(crate) struct ParameterHomotopy<'a> {
    pub compiled: &'a Compiled,
    pub p0: Vec<C>,
    pub p1: Vec<C>,
    pub gamma: C,
}

impl ParameterHomotopy<'_> {
    fn tau(&self, t: f64) -> C {
        self.gamma * t / (C::from(1.0) + (self.gamma - 1.0) * t)
    }

    fn tau_dt(&self, t: f64) -> C {
        let den = C::from(1.0) + (self.gamma - 1.0) * t;
        self.gamma / (den * den)
    }

    pub fn params_at(&self, t: f64) -> Vec<C> {
        let tau = self.tau(t);
        self.p0.iter().zip(&self.p1).map(|(a, b)| b + tau * (a - b)).collect()
    }

    fn vals(&self, x: &DVector<C>, t: f64) -> Vec<C> {
        let mut v = x.as_slice().to_vec();
        v.extend(self.params_at(t));
        v
    }
}

impl Homotopy for ParameterHomotopy<'_> {
    fn value_jac(&self, x: &DVector<C>, t: f64) -> (DVector<C>, DMatrix<C>) {
        let vals = self.vals(x, t);
        (self.compiled.value(&vals), self.compiled.jac_x(&vals))
    }

    fn dt(&self, x: &DVector<C>, t: f64) -> DVector<C> {
        let vals = self.vals(x, t);
        let dtau = self.tau_dt(t);
        let dp = DVector::from_iterator(self.p0.len(), self.p0.iter().zip(&self.p1).map(|(a, b)| (a - b) * dtau));
        self.compiled.jac_p(&vals) * dp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PathStatus {
    Converged,
    AtInfinity,
    Failed,
}

#[derive(Debug, Clone)]
pub(crate) struct PathEnd {
    pub x: DVector<C>,
    pub status: PathStatus,
}

pub(crate) fn norm(x: &DVector<C>) -> f64 {
    x.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn solve(j: DMatrix<C>, rhs: &DVector<C>) -> Option<DVector<C>> {
    let sol = j.lu().solve(rhs)?;
    sol.iter().all(|c| c.re.is_finite() && c.im.is_finite()).then_some(sol)
}

/// `dx/dt = -H_x^{-1} H_t`.
fn velocity(h: &impl Homotopy, x: &DVector<C>, t: f64) -> Option<DVector<C>> {
    let (_, j) = h.value_jac(x, t);
    solve(j, &(-h.dt(x, t)))
}

fn rk4(h: &impl Homotopy, x: &DVector<C>, t: f64, dt: f64) -> Option<DVector<C>> {
    let half = C::from(dt / 2.0);
    let k1 = velocity(h, x, t)?;
    let k2 = velocity(h, &(x + &k1 * half), t + dt / 2.0)?;
    let k3 = velocity(h, &(x + &k2 * half), t + dt / 2.0)?;
    let k4 = velocity(h, &(x + &k3 * C::from(dt)), t + dt)?;
    Some(x + (k1 + k2 * C::from(2.0) + k3 * C::from(2.0) + k4) * C::from(dt / 6.0))
}

/// Newton at fixed `t`; succeeds when an update falls below `tol`
/// relative to the point within `max_iters` contracting iterations.
/// Also returns the size of the first update.
fn newton(
    h: &impl Homotopy,
    mut x: DVector<C>,
    t: f64,
    tol: f64,
    max_iters: usize,
) -> Option<(DVector<C>, f64)> {
    let mut prev = f64::INFINITY;
    let mut first = None;
    for _ in 0..max_iters {
        let (f, j) = h.value_jac(&x, t);
        let dx = solve(j, &(-f))?;
        let step = norm(&dx);
        let first = *first.get_or_insert(step);
        x += dx;
        if step <= tol * (1.0 + norm(&x)) {
            return Some((x, first));
        }
        if step > 0.9 * prev {
            return None;
        }
        prev = step;
    }
    None
}

/// One predictor-corrector step. The corrector may only nudge the
/// prediction; a large correction means the predictor left the path.
fn advance(h: &impl Homotopy, x: &DVector<C>, t: f64, t1: f64, opts: &TrackerOptions) -> Option<DVector<C>> {
    let xp = rk4(h, x, t, t1 - t)?;
    let moved = norm(&(&xp - x));
    let (xc, first) = newton(h, xp, t1, opts.tol_corrector, opts.max_corrector_iters)?;
    (first <= PREDICTOR_TRUST * moved + opts.tol_corrector * (1.0 + norm(&xc))).then_some(xc)
}

const PREDICTOR_TRUST: f64 = 0.1;

pub(crate) fn track(h: &impl Homotopy, start: &[C], opts: &TrackerOptions) -> PathEnd {
    let mut x = DVector::from_column_slice(start);
    let mut t = 1.0;
    let mut step = opts.initial_step;
    let mut streak = 0;
    let mut steps = 0;
    let end = |x: DVector<C>, status| PathEnd { x, status };
    while t > 0.0 {
        if steps >= opts.max_steps {
            return end(x, PathStatus::Failed);
        }
        steps += 1;
        let dt = step.min(t);
        let t1 = if dt >= t { 0.0 } else { t - dt };
        match advance(h, &x, t, t1, opts) {
            Some(xc) => {
                x = xc;
                t = t1;
                if norm(&x) > opts.divergence_norm {
                    return end(x, PathStatus::AtInfinity);
                }
                streak += 1;
                if streak >= 3 {
                    step = (step * 2.0).min(opts.max_step);
                    streak = 0;
                }
            }
            None => {
                streak = 0;
                step *= 0.5;
                if step < opts.min_step {
                    let status = if norm(&x) > opts.infinity_hint { PathStatus::AtInfinity } else { PathStatus::Failed };
                    return end(x, status);
                }
            }
        }
    }
    end(x, PathStatus::Converged)
}
