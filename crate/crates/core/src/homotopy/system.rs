use crate::error::{Error, Result};
use crate::exactalg::{MultiPoly, Poly, VarTable};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

type C = Complex64;

/// Square polynomial system with complex coefficients.
///
/// The variable table lists the `n` unknowns first, followed by any
/// parameters. Parameters carry current values, so the same system can be
/// moved through parameter space.
#[derive(Debug, Clone)]
pub struct PolySystem {
    vars: Arc<VarTable>,
    n: usize,
    equations: Vec<Poly<C>>,
    params: Vec<C>,
    compiled: Compiled,
}

impl PolySystem {
    pub fn new(vars: &Arc<VarTable>, n: usize, equations: Vec<Poly<C>>) -> Result<Self> {
        if equations.len() != n {
            return Err(Error::Shape(format!("{} equations in {n} unknowns", equations.len())));
        }
        if n > vars.len() {
            return Err(Error::Shape(format!("{n} unknowns but only {} variables", vars.len())));
        }
        if equations.iter().any(|e| e.vars() != vars) {
            return Err(Error::VarTableMismatch);
        }
        let compiled = Compiled::new(&equations, n, vars.len());
        Ok(Self { vars: vars.clone(), n, equations, params: vec![C::new(0.0, 0.0); vars.len() - n], compiled })
    }

    /// Converts exact equations to complex coefficients.
    pub fn from_rational(vars: &Arc<VarTable>, n: usize, equations: &[MultiPoly]) -> Result<Self> {
        let eqs = equations.iter().map(|e| e.map_coeffs(|q| C::new(crate::exactalg::rat_to_f64(q), 0.0))).collect();
        Self::new(vars, n, eqs)
    }

    pub fn with_params(mut self, values: Vec<C>) -> Result<Self> {
        self.set_params(values)?;
        Ok(self)
    }

    pub fn set_params(&mut self, values: Vec<C>) -> Result<()> {
        if values.len() != self.nparams() {
            return Err(Error::Shape(format!("{} parameter values for {} parameters", values.len(), self.nparams())));
        }
        self.params = values;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nparams(&self) -> usize {
        self.vars.len() - self.n
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn equations(&self) -> &[Poly<C>] {
        &self.equations
    }

    pub fn params(&self) -> &[C] {
        &self.params
    }

    /// Total degree of each equation in the unknowns only.
    pub fn degrees(&self) -> Vec<u32> {
        self.equations
            .iter()
            .map(|e| e.terms().map(|(m, _)| m.exps()[..self.n].iter().sum::<u32>()).max().unwrap_or(0))
            .collect()
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    /// `F(x)` at the current parameters.
    pub fn eval(&self, x: &[C]) -> Vec<C> {
        let vals = self.full_point(x, &self.params);
        self.compiled.eqs.iter().map(|e| e.eval(&vals)).collect()
    }

    pub(crate) fn full_point(&self, x: &[C], p: &[C]) -> Vec<C> {
        let mut v = Vec::with_capacity(x.len() + p.len());
        v.extend_from_slice(x);
        v.extend_from_slice(p);
        v
    }
}

/// A polynomial as a flat list of `(coefficient, [(variable, exponent)])`.
#[derive(Debug, Clone)]
pub(crate) struct CompiledPoly {
    terms: Vec<(C, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    fn new(p: &Poly<C>) -> Self {
        let terms = p.terms().map(|(m, c)| (*c, m.support().map(|i| (i, m.exp(i))).collect())).collect();
        Self { terms }
    }

    pub(crate) fn eval(&self, vals: &[C]) -> C {
        let mut s = C::new(0.0, 0.0);
        for (c, factors) in &self.terms {
            let mut v = *c;
            for &(i, e) in factors {
                v *= vals[i].powu(e);
            }
            s += v;
        }
        s
    }

    /// Sum of absolute term values, used to scale residuals.
    pub(crate) fn magnitude(&self, vals: &[C]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| f.iter().fold(c.norm(), |acc, &(i, e)| acc * vals[i].norm().powi(e as i32)))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub eqs: Vec<CompiledPoly>,
    /// `dx[i][j] = dF_i / dx_j` for unknowns.
    pub dx: Vec<Vec<CompiledPoly>>,
    /// `dp[i][j] = dF_i / dp_j` for parameters.
    pub dp: Vec<Vec<CompiledPoly>>,
}

impl Compiled {
    pub fn new(eqs: &[Poly<C>], n: usize, nvars: usize) -> Self {
        Self {
            eqs: eqs.iter().map(CompiledPoly::new).collect(),
            dx: eqs.iter().map(|e| (0..n).map(|j| CompiledPoly::new(&e.diff(j))).collect()).collect(),
            dp: eqs.iter().map(|e| (n..nvars).map(|j| CompiledPoly::new(&e.diff(j))).collect()).collect(),
        }
    }

    pub fn value(&self, vals: &[C]) -> DVector<C> {
        DVector::from_iterator(self.eqs.len(), self.eqs.iter().map(|e| e.eval(vals)))
    }

    pub fn jac_x(&self, vals: &[C]) -> DMatrix<C> {
        let n = self.dx.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.eqs.len(), n, |i, j| self.dx[i][j].eval(vals))
    }

    pub fn jac_p(&self, vals: &[C]) -> DMatrix<C> {
        let n = self.eqs.len();
        let np = self.dp.first().map_or(0, Vec::len);
        DMatrix::from_fn(n, np, |i, j| self.dp[i][j].eval(vals))
    }

    /// Componentwise backward error `max_i |F_i| / (1 + sum |terms of F_i|)`.
    pub fn relative_residual(&self, vals: &[C]) -> f64 {
        self.eqs.iter().map(|e| e.eval(vals).norm() / (1.0 + e.magnitude(vals))).fold(0.0, f64::max)
    }
}
