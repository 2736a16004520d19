use super::order::MonomialOrder;
use super::{Coeff, Rational};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Ordered list of distinct variable names. The position of a name is its
/// index in every [`Monomial`] over this table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarTable {
    names: Vec<String>,
}

impl VarTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate or empty variable name `{n}`")));
            }
        }
        Ok(Arc::new(Self { names }))
    }

    /// `prefix0, prefix1, ..., prefix{n-1}`.
    pub fn indexed(prefix: &str, range: std::ops::Range<usize>) -> Arc<Self> {
        Arc::new(Self { names: range.map(|i| format!("{prefix}{i}")).collect() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }
}

fn same_table(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Exponent vector, one entry per variable of the owning table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self / other`, assuming `other` divides `self`.
    pub fn div(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn gcd(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Indices of variables with positive exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i)
    }

    pub fn display(&self, vars: &VarTable) -> String {
        let parts: Vec<String> = self
            .support()
            .map(|i| match self.0[i] {
                1 => vars.name(i).to_string(),
                e => format!("{}^{}", vars.name(i), e),
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }
}

/// Sparse multivariate polynomial. Zero coefficients are never stored.
#[derive(Debug, Clone)]
pub struct Poly<C: Coeff> {
    vars: Arc<VarTable>,
    terms: BTreeMap<Monomial, C>,
}

/// Polynomial with exact rational coefficients.
pub type MultiPoly = Poly<Rational>;

impl<C: Coeff> PartialEq for Poly<C> {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        Self { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VarTable>, c: C) -> Self {
        Self::monomial(vars, Monomial::one(vars.len()), c)
    }

    pub fn one(vars: &Arc<VarTable>) -> Self {
        Self::constant(vars, C::one())
    }

    pub fn var(vars: &Arc<VarTable>, i: usize) -> Self {
        Self::monomial(vars, Monomial::var(vars.len(), i), C::one())
    }

    pub fn var_named(vars: &Arc<VarTable>, name: &str) -> Result<Self> {
        Ok(Self::var(vars, vars.index_of(name)?))
    }

    pub fn monomial(vars: &Arc<VarTable>, m: Monomial, c: C) -> Self {
        assert_eq!(m.nvars(), vars.len(), "monomial length must match the variable table");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { vars: vars.clone(), terms }
    }

    pub fn from_terms(vars: &Arc<VarTable>, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Constant term value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(var)).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_table(&self, other: &Self) -> Result<()> {
        if same_table(&self.vars, &other.vars) {
            Ok(())
        } else {
            Err(Error::VarTableMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut out = Self::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Self {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Formal partial derivative with respect to variable index `var`.
    pub fn diff(&self, var: usize) -> Self {
        let mut out = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if e == 0 {
                continue;
            }
            let mut exps = m.exps().to_vec();
            exps[var] -= 1;
            out.add_term(Monomial::new(exps), c.clone() * C::from_i64(e as i64));
        }
        out
    }

    pub fn diff_named(&self, name: &str) -> Result<Self> {
        Ok(self.diff(self.vars.index_of(name)?))
    }

    /// Evaluates at a point given in table order.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.vars.len(), "point dimension must match the variable table");
        // powers[i][e] = point[i]^e up to the degree of variable i
        let powers: Vec<Vec<C>> = (0..self.vars.len())
            .map(|i| {
                let top = self.degree_in(i) as usize;
                let mut row = vec![C::one()];
                for e in 0..top {
                    row.push(row[e].clone() * point[i].clone());
                }
                row
            })
            .collect();
        let mut total = C::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for i in m.support() {
                v = v * powers[i][m.exp(i) as usize].clone();
            }
            total = total + v;
        }
        total
    }

    /// Evaluates with values looked up by variable name. Variables not
    /// occurring in the polynomial may be left unassigned.
    pub fn eval_map(&self, assignment: &HashMap<String, C>) -> Result<C> {
        let mut point = vec![C::zero(); self.vars.len()];
        let used = self.used_vars();
        for (i, slot) in point.iter_mut().enumerate() {
            let name = self.vars.name(i);
            match assignment.get(name) {
                Some(v) => *slot = v.clone(),
                None if used[i] => return Err(Error::MissingAssignment(name.to_string())),
                None => {}
            }
        }
        Ok(self.eval(&point))
    }

    /// Which table variables actually occur.
    pub fn used_vars(&self) -> Vec<bool> {
        let mut used = vec![false; self.vars.len()];
        for m in self.terms.keys() {
            for i in m.support() {
                used[i] = true;
            }
        }
        used
    }

    /// Composition: replaces variable `i` by `values[i]`. All values must
    /// share one (target) table.
    pub fn substitute(&self, values: &[Poly<C>]) -> Result<Poly<C>> {
        if values.len() != self.vars.len() {
            return Err(Error::Shape(format!(
                "substitution needs {} values, got {}",
                self.vars.len(),
                values.len()
            )));
        }
        let target = values
            .first()
            .map(|v| v.vars.clone())
            .ok_or_else(|| Error::Shape("empty substitution".into()))?;
        if values.iter().any(|v| !same_table(&v.vars, &target)) {
            return Err(Error::VarTableMismatch);
        }
        // powers[i][e] = values[i]^e, filled lazily
        let mut powers: Vec<Vec<Poly<C>>> = values.iter().map(|_| vec![Poly::one(&target)]).collect();
        let mut out = Poly::zero(&target);
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(&target, c.clone());
            for i in m.support() {
                let e = m.exp(i) as usize;
                while powers[i].len() <= e {
                    let next = &powers[i][powers[i].len() - 1] * &values[i];
                    powers[i].push(next);
                }
                acc = &acc * &powers[i][e];
                if acc.is_zero() {
                    break;
                }
            }
            for (mm, cc) in acc.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(&self.vars, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Re-expresses the polynomial over `target`, sending variable `i` to
    /// `target` variable `map[i]`.
    pub fn embed(&self, target: &Arc<VarTable>, map: &[usize]) -> Poly<C> {
        assert_eq!(map.len(), self.vars.len());
        Poly::from_terms(
            target,
            self.terms.iter().map(|(m, c)| {
                let mut e = vec![0; target.len()];
                for i in m.support() {
                    e[map[i]] += m.exp(i);
                }
                (Monomial::new(e), c.clone())
            }),
        )
    }

    /// Largest term under `order`.
    pub fn leading_term(&self, order: &MonomialOrder) -> Option<(&Monomial, &C)> {
        self.terms.iter().max_by(|a, b| order.cmp(a.0, b.0))
    }

    /// Terms sorted in decreasing `order`.
    pub fn sorted_terms(&self, order: &MonomialOrder) -> Vec<(&Monomial, &C)> {
        let mut t: Vec<_> = self.terms.iter().collect();
        t.sort_by(|a, b| order.cmp(b.0, a.0));
        t
    }
}

impl MultiPoly {
    /// Canonical text: terms in decreasing graded-lexicographic order,
    /// coefficients as integers or `p/q`, e.g.
    /// `-1 m0^2 m1 m3 + 3 m0^2 m2^2 - 3 m0 m1^2 m2 + 1 m1^4`.
    pub fn to_canonical_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let order = MonomialOrder::deglex(self.vars.len());
        let mut out = String::new();
        for (i, (m, c)) in self.sorted_terms(&order).into_iter().enumerate() {
            let mag = format_rational(&c.abs());
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&mag);
            if !m.is_one() {
                out.push(' ');
                out.push_str(&m.display(&self.vars));
            }
        }
        out
    }

    /// Parses the canonical text form (and anything close to it: `*` between
    /// factors, omitted unit coefficients, extra whitespace).
    pub fn parse(vars: &Arc<VarTable>, s: &str) -> Result<Self> {
        let spaced = format!(" {s}").replace('*', " ").replace('+', " + ").replace(" -", " - ");
        let mut out = Self::zero(vars);
        let mut sign = Rational::one();
        let mut coeff = Rational::one();
        let mut exps = vec![0u32; vars.len()];
        let mut have_factor = false;
        let flush = |sign: &Rational, coeff: &Rational, exps: &mut Vec<u32>, have: &mut bool, out: &mut Self| {
            if *have {
                out.add_term(Monomial::new(exps.clone()), sign * coeff);
            }
            exps.iter_mut().for_each(|e| *e = 0);
            *have = false;
        };
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(Error::Parse("empty input".into()));
        }
        for tok in tokens {
            match tok {
                "+" | "-" => {
                    flush(&sign, &coeff, &mut exps, &mut have_factor, &mut out);
                    sign = if tok == "-" { -Rational::one() } else { Rational::one() };
                    coeff = Rational::one();
                }
                t if t.starts_with(|c: char| c.is_ascii_digit()) => {
                    coeff *= parse_rational(t)?;
                    have_factor = true;
                }
                t => {
                    let (name, e) = match t.split_once('^') {
                        Some((n, e)) => (n, e.parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent in `{t}`")))?),
                        None => (t, 1),
                    };
                    let i = vars.index_of(name).map_err(|_| Error::Parse(format!("unknown variable `{name}`")))?;
                    exps[i] += e;
                    have_factor = true;
                }
            }
        }
        flush(&sign, &coeff, &mut exps, &mut have_factor, &mut out);
        Ok(out)
    }
}

fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn parse_rational(t: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad coefficient `{t}`"));
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<C: Coeff> $tr<&Poly<C>> for &Poly<C> {
            type Output = Poly<C>;
            /// Panics if the operands use different variable tables; use the
            /// `checked_*` methods to get an error instead.
            fn $method(self, rhs: &Poly<C>) -> Poly<C> {
                self.$checked(rhs).expect("polynomial operands over different variable tables")
            }
        }
        impl<C: Coeff> $tr<Poly<C>> for Poly<C> {
            type Output = Poly<C>;
            fn $method(self, rhs: Poly<C>) -> Poly<C> {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl<C: Coeff> Neg for &Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl<C: Coeff> Neg for Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        -&self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Exact sum, difference or product of two polynomials over one table.
pub fn poly_arith(a: &MultiPoly, b: &MultiPoly, op: ArithOp) -> Result<MultiPoly> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
        ArithOp::Mul => a.checked_mul(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{int, rat};

    fn table() -> Arc<VarTable> {
        VarTable::indexed("m", 0..4)
    }

    fn ig3(t: &Arc<VarTable>) -> MultiPoly {
        MultiPoly::parse(t, "-1 m0^2 m1 m3 + 3 m0^2 m2^2 - 3 m0 m1^2 m2 + 1 m1^4").unwrap()
    }

    #[test]
    fn absorbing_and_inverse() {
        let t = table();
        let m1 = MultiPoly::var(&t, 1);
        let m2 = MultiPoly::var(&t, 2);
        let z = MultiPoly::zero(&t);
        assert!(poly_arith(&(&m1 + &m2), &z, ArithOp::Mul).unwrap().is_zero());
        assert!(poly_arith(&m1, &m1, ArithOp::Sub).unwrap().is_zero());
    }

    #[test]
    fn product_of_monomials() {
        let t = table();
        let a = MultiPoly::parse(&t, "m0 m1").unwrap();
        let b = MultiPoly::parse(&t, "m0 m3").unwrap();
        assert_eq!((&a * &b).to_canonical_string(), "1 m0^2 m1 m3");
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let a = MultiPoly::var(&table(), 0);
        let b = MultiPoly::var(&VarTable::new(["x", "y"]).unwrap(), 0);
        assert!(matches!(poly_arith(&a, &b, ArithOp::Add), Err(Error::VarTableMismatch)));
    }

    #[test]
    fn derivatives() {
        let t = table();
        let p = MultiPoly::parse(&t, "m1^4").unwrap();
        assert_eq!(p.diff(1).to_canonical_string(), "4 m1^3");
        let g = ig3(&t);
        assert_eq!(g.diff_named("m3").unwrap().to_canonical_string(), "-1 m0^2 m1");
        assert!(MultiPoly::constant(&t, int(7)).diff(2).is_zero());
        assert!(matches!(g.diff_named("m9"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn evaluation() {
        let t = table();
        let p = MultiPoly::parse(&t, "m1^2").unwrap();
        let mut a = HashMap::new();
        a.insert("m1".to_string(), int(3));
        assert_eq!(p.eval_map(&a).unwrap(), int(9));
        let g = ig3(&t);
        // inverse Gaussian moments at mu = 1, lambda = 1
        assert_eq!(g.eval(&[int(1), int(1), int(2), int(7)]), int(0));
        // signed cancellation: -1 + 3 - 3 + 1
        assert_eq!(g.eval(&[int(1), int(1), int(1), int(1)]), int(0));
        assert!(matches!(g.eval_map(&a), Err(Error::MissingAssignment(_))));
    }

    #[test]
    fn canonical_roundtrip() {
        let t = table();
        let s = "-1 m0^2 m1 m3 + 3 m0^2 m2^2 - 3 m0 m1^2 m2 + 1 m1^4";
        assert_eq!(ig3(&t).to_canonical_string(), s);
        let q = MultiPoly::parse(&t, "3/2 m1 - 1/3").unwrap();
        assert_eq!(q.to_canonical_string(), "3/2 m1 - 1/3");
        assert_eq!(q.eval(&[int(0), int(2), int(0), int(0)]), rat(8, 3));
        assert_eq!(MultiPoly::zero(&t).to_canonical_string(), "0");
    }

    #[test]
    fn substitution_composes() {
        let t = table();
        let p = VarTable::new(["x"]).unwrap();
        let x = MultiPoly::var(&p, 0);
        let vals = vec![MultiPoly::one(&p), x.clone(), x.pow(2), x.pow(3)];
        let g = MultiPoly::parse(&t, "m1 m3 - m2^2").unwrap();
        assert!(g.substitute(&vals).unwrap().is_zero());
    }
}
