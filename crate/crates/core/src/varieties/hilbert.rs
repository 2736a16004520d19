use super::{generators_with_columns, build_matrix, CheckReport, FamilyId};
use crate::error::{Error, Result};
use crate::exactalg::{binomial_u64, Monomial, MonomialOrder, MultiPoly, VarTable};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// `N(t) / (1 - t)^s`, always stored reduced so that `N(1) != 0` unless the
/// series is zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HilbertSeries {
    pub numerator: Vec<i64>,
    pub denom_exp: usize,
}

impl HilbertSeries {
    pub fn new(numerator: Vec<i64>, denom_exp: usize) -> Self {
        let (numerator, denom_exp) = reduce(numerator, denom_exp);
        Self { numerator, denom_exp }
    }

    /// `N(1)`; the degree when `denom_exp` is the Krull dimension.
    pub fn degree(&self) -> i64 {
        self.numerator.iter().sum()
    }
}

fn trim(n: &mut Vec<i64>) {
    while n.len() > 1 && n.last() == Some(&0) {
        n.pop();
    }
    if n.is_empty() {
        n.push(0);
    }
}

fn reduce(mut n: Vec<i64>, mut s: usize) -> (Vec<i64>, usize) {
    trim(&mut n);
    while s > 0 && n.iter().sum::<i64>() == 0 && n.iter().any(|&c| c != 0) {
        // N = (1 - t) Q with q_i = n_0 + ... + n_i
        let mut acc = 0;
        let mut q: Vec<i64> = n.iter().map(|c| {
            acc += c;
            acc
        })
        .collect();
        q.pop();
        n = q;
        trim(&mut n);
        s -= 1;
    }
    (n, s)
}

impl fmt::Display for HilbertSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, &c) in self.numerator.iter().enumerate() {
            if c == 0 && self.numerator.len() > 1 {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "t".into(),
                _ => format!("t^{i}"),
            };
            let body = match (c.abs(), mono.is_empty()) {
                (a, true) => a.to_string(),
                (1, false) => mono,
                (a, false) => format!("{a}{mono}"),
            };
            let sign = if c < 0 { "-" } else { "+" };
            if terms.is_empty() {
                terms.push(if c < 0 { format!("-{body}") } else { body });
            } else {
                terms.push(format!("{sign} {body}"));
            }
        }
        write!(f, "({})/(1-t)^{}", terms.join(" "), self.denom_exp)
    }
}

/// Monomial ideal kept as its unique minimal generating set, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIdeal {
    table: Arc<VarTable>,
    gens: Vec<Monomial>,
}

impl MonomialIdeal {
    pub fn new(table: &Arc<VarTable>, gens: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let gens: Vec<Monomial> = gens.into_iter().collect();
        if gens.iter().any(|g| g.nvars() != table.len()) {
            return Err(Error::Shape(format!("monomials must have {} exponents", table.len())));
        }
        Ok(Self { table: table.clone(), gens: minimalize(gens) })
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn gens(&self) -> &[Monomial] {
        &self.gens
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.gens.iter().any(|g| g.divides(m))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.gens.iter().map(|g| g.display(&self.table)).collect()
    }
}

fn minimalize(mut gens: Vec<Monomial>) -> Vec<Monomial> {
    gens.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.cmp(b)));
    gens.dedup();
    let mut keep: Vec<Monomial> = Vec::with_capacity(gens.len());
    for g in gens {
        if !keep.iter().any(|k| k.divides(&g)) {
            keep.push(g);
        }
    }
    keep.sort();
    keep
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_shifted(a: &[i64], b: &[i64], shift: usize) -> Vec<i64> {
    let mut out = vec![0; a.len().max(b.len() + shift)];
    out[..a.len()].copy_from_slice(a);
    for (j, y) in b.iter().enumerate() {
        out[j + shift] += y;
    }
    out
}

fn one_minus_t_pow(e: usize) -> Vec<i64> {
    let mut v = vec![0; e + 1];
    v[0] = 1;
    v[e] -= 1;
    v
}

fn coprime(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

type Gens = Vec<Vec<u32>>;

/// Numerator of `HS(S/I)` over `(1 - t)^n`, by splitting off generators
/// coprime to all others and pivoting on the most frequent variable `x`:
/// `HS(S/I) = HS(S/(I + (x))) + t HS(S/(I : x))`.
fn kpoly(gens: Gens, memo: &mut HashMap<Gens, Vec<i64>>) -> Vec<i64> {
    let gens: Gens = minimalize(gens.into_iter().map(Monomial::new).collect())
        .into_iter()
        .map(|m| m.exps().to_vec())
        .collect();
    if gens.is_empty() {
        return vec![1];
    }
    if gens.iter().any(|g| g.iter().all(|&e| e == 0)) {
        return vec![0];
    }
    if let Some(hit) = memo.get(&gens) {
        return hit.clone();
    }
    let mut factor = vec![1];
    let mut rest = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        let isolated = gens.iter().enumerate().all(|(j, h)| i == j || coprime(g, h));
        if isolated {
            let deg: u32 = g.iter().sum();
            factor = poly_mul(&factor, &one_minus_t_pow(deg as usize));
        } else {
            rest.push(g.clone());
        }
    }
    let out = if rest.is_empty() {
        factor
    } else if factor.len() > 1 {
        poly_mul(&factor, &kpoly(rest, memo))
    } else {
        let nv = gens[0].len();
        let x = (0..nv)
            .max_by_key(|&v| (gens.iter().filter(|g| g[v] > 0).count(), std::cmp::Reverse(v)))
            .expect("nonempty variable set");
        let mut plus: Gens = gens.iter().filter(|g| g[x] == 0).cloned().collect();
        let mut unit = vec![0; nv];
        unit[x] = 1;
        plus.push(unit);
        let colon: Gens = gens
            .iter()
            .map(|g| {
                let mut h = g.clone();
                h[x] = h[x].saturating_sub(1);
                h
            })
            .collect();
        let a = kpoly(plus, memo);
        let b = kpoly(colon, memo);
        poly_add_shifted(&a, &b, 1)
    };
    memo.insert(gens, out.clone());
    out
}

/// Hilbert series of `S/I` for `S` the polynomial ring on the ideal's table.
pub fn monomial_hilbert(ideal: &MonomialIdeal) -> HilbertSeries {
    let gens = ideal.gens.iter().map(|g| g.exps().to_vec()).collect();
    let mut memo = HashMap::new();
    HilbertSeries::new(kpoly(gens, &mut memo), ideal.table.len())
}

fn check_supported(family: FamilyId, d: usize) -> Result<()> {
    if !matches!(family, FamilyId::IG | FamilyId::Gamma | FamilyId::CumIG | FamilyId::CumGamma) {
        return Err(Error::Unsupported(format!("no closed-form degree for {family}")));
    }
    if d < 3 {
        return Err(Error::InvalidArgument(format!("degree formulas need d >= 3, got {d}")));
    }
    Ok(())
}

/// `(d-1)^2` for the inverse Gaussian, `C(d, 2)` for the gamma surface and
/// `d - 1` for the cumulant varieties.
pub fn degree_formula(family: FamilyId, d: usize) -> Result<u64> {
    check_supported(family, d)?;
    let d = d as u64;
    Ok(match family {
        FamilyId::IG => (d - 1) * (d - 1),
        FamilyId::Gamma => binomial_u64(d, 2),
        _ => d - 1,
    })
}

pub fn hilbert_closed_form(family: FamilyId, d: usize) -> Result<HilbertSeries> {
    check_supported(family, d)?;
    let c = binomial_u64(d as u64 - 1, 2) as i64;
    let dm2 = d as i64 - 2;
    Ok(match family {
        FamilyId::IG => HilbertSeries::new(vec![1, dm2, c, c], 3),
        FamilyId::Gamma => HilbertSeries::new(vec![1, dm2, c], 3),
        _ => HilbertSeries::new(vec![1, dm2], 2),
    })
}

/// `(m_2..m_{d-2})^3 + m_1^2 (m_1..m_{d-2})^2`, the closed description of
/// the inverse Gaussian initial ideal.
pub fn ig_displayed_initial_ideal(d: usize) -> Result<MonomialIdeal> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("needs d >= 3, got {d}")));
    }
    let table = super::moment_table(d);
    let n = d + 1;
    let mut gens = Vec::new();
    let mid: Vec<usize> = (2..=d.saturating_sub(2)).collect();
    for (a, &i) in mid.iter().enumerate() {
        for (b, &j) in mid.iter().enumerate().skip(a) {
            for &k in &mid[b..] {
                let mut e = vec![0; n];
                e[i] += 1;
                e[j] += 1;
                e[k] += 1;
                gens.push(Monomial::new(e));
            }
        }
    }
    let low: Vec<usize> = (1..=d - 2).collect();
    for (a, &i) in low.iter().enumerate() {
        for &j in &low[a..] {
            let mut e = vec![0; n];
            e[1] += 2;
            e[i] += 1;
            e[j] += 1;
            gens.push(Monomial::new(e));
        }
    }
    MonomialIdeal::new(&table, gens)
}

/// Leading monomials of the maximal minors under `order`. Each minor's
/// leading term must be its antidiagonal product; the first violation is
/// reported with its column set. For the inverse Gaussian the result is
/// also compared with [`ig_displayed_initial_ideal`].
pub fn initial_ideal(family: FamilyId, d: usize, order: &MonomialOrder) -> Result<MonomialIdeal> {
    let h = build_matrix(family, d)?;
    if order.ranking().len() != h.vars().len() {
        return Err(Error::InvalidArgument(format!(
            "order has {} variables, ring has {}",
            order.ranking().len(),
            h.vars().len()
        )));
    }
    let r = h.rows();
    let mut lead = Vec::new();
    for (cols, g) in generators_with_columns(family, d)? {
        let mut anti = MultiPoly::one(h.vars());
        for (i, &c) in cols.iter().rev().enumerate() {
            anti = &anti * h.get(i, c);
        }
        let want = anti.leading_term(order).map(|(m, _)| m.clone());
        let got = g.leading_term(order).map(|(m, _)| m.clone());
        match (want, got) {
            (Some(w), Some(g)) if w == g => lead.push(g),
            (w, g) => {
                return Err(Error::Verification(format!(
                    "{family} d={d}: order is not antidiagonal on columns {cols:?} (antidiagonal {}, leading {})",
                    w.map(|m| m.display(h.vars())).unwrap_or_else(|| "0".into()),
                    g.map(|m| m.display(h.vars())).unwrap_or_else(|| "0".into()),
                )))
            }
        }
        debug_assert_eq!(cols.len(), r);
    }
    let ideal = MonomialIdeal::new(h.vars(), lead)?;
    if family == FamilyId::IG && ideal != ig_displayed_initial_ideal(d)? {
        return Err(Error::Verification(format!(
            "IG d={d}: initial ideal {:?} differs from (m2..m{})^3 + m1^2 (m1..m{})^2",
            ideal.to_strings(),
            d - 2,
            d - 2
        )));
    }
    Ok(ideal)
}

/// [`initial_ideal`] under graded reverse lexicographic order with
/// `m0 > m1 > ... > md`.
pub fn initial_ideal_default(family: FamilyId, d: usize) -> Result<MonomialIdeal> {
    initial_ideal(family, d, &MonomialOrder::grevlex(family.table(d).len()))
}

/// Compares the Hilbert series of the initial ideal, computed by the
/// monomial recursion, with the closed form.
pub fn groebner_degree_check(family: FamilyId, d: usize) -> Result<CheckReport> {
    let closed = hilbert_closed_form(family, d)?;
    let init = initial_ideal_default(family, d)?;
    let series = monomial_hilbert(&init);
    Ok(CheckReport {
        family,
        d,
        check: "groebner-degree".into(),
        pass: series == closed,
        detail: serde_json::json!({
            "initial_ideal": series,
            "closed_form": closed,
            "initial_generators": init.gens().len(),
            "degree": series.degree(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    #[test]
    fn square_of_one_variable() {
        let t = VarTable::indexed("x", 0..1);
        let i = MonomialIdeal::new(&t, [mono(&[2])]).unwrap();
        assert_eq!(monomial_hilbert(&i), HilbertSeries { numerator: vec![1, 1], denom_exp: 0 });
    }

    #[test]
    fn zero_ideal_and_unit_ideal() {
        let t = VarTable::indexed("x", 0..3);
        let zero = MonomialIdeal::new(&t, []).unwrap();
        assert_eq!(monomial_hilbert(&zero), HilbertSeries { numerator: vec![1], denom_exp: 3 });
        let unit = MonomialIdeal::new(&t, [mono(&[0, 0, 0])]).unwrap();
        assert_eq!(monomial_hilbert(&unit).degree(), 0);
    }

    #[test]
    fn minimal_generators() {
        let t = VarTable::indexed("x", 0..2);
        let i = MonomialIdeal::new(&t, [mono(&[2, 1]), mono(&[1, 0]), mono(&[1, 0]), mono(&[0, 3])]).unwrap();
        assert_eq!(i.gens(), &[mono(&[0, 3]), mono(&[1, 0])]);
    }

    #[test]
    fn display() {
        let h = HilbertSeries::new(vec![1, 2, 3], 3);
        assert_eq!(h.to_string(), "(1 + 2t + 3t^2)/(1-t)^3");
    }

    #[test]
    fn reduction_cancels_common_factors() {
        // (1 - t^2)(1 - t) / (1 - t)^3 = (1 + t) / (1 - t)
        let h = HilbertSeries::new(vec![1, -1, -1, 1], 3);
        assert_eq!(h, HilbertSeries { numerator: vec![1, 1], denom_exp: 1 });
    }

    #[test]
    fn closed_forms() {
        assert_eq!(hilbert_closed_form(FamilyId::IG, 4).unwrap().numerator, [1, 2, 3, 3]);
        assert_eq!(degree_formula(FamilyId::IG, 4).unwrap(), 9);
        assert_eq!(hilbert_closed_form(FamilyId::Gamma, 3).unwrap().numerator, [1, 1, 1]);
        assert_eq!(degree_formula(FamilyId::IG, 3).unwrap(), 4);
        assert!(matches!(degree_formula(FamilyId::Exp, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gamma_d4_initial_ideal() {
        let i = initial_ideal_default(FamilyId::Gamma, 4).unwrap();
        let mut s = i.to_strings();
        s.sort();
        assert_eq!(s, ["m1 m2 m3", "m1^2 m2", "m1^2 m3", "m2^2 m3"]);
        assert_eq!(monomial_hilbert(&i), HilbertSeries::new(vec![1, 2, 3], 3));
    }

    #[test]
    fn ig_small_initial_ideals() {
        assert_eq!(initial_ideal_default(FamilyId::IG, 3).unwrap().to_strings(), ["m1^4"]);
        let i = initial_ideal_default(FamilyId::IG, 4).unwrap();
        assert_eq!(monomial_hilbert(&i), HilbertSeries::new(vec![1, 2, 3, 3], 3));
        assert_eq!(ig_displayed_initial_ideal(5).unwrap().gens().len(), 4 + 6);
    }

    #[test]
    fn non_antidiagonal_order_is_rejected() {
        let lex_rev = MonomialOrder::new(crate::exactalg::OrderKind::Lex, (0..5).rev().collect());
        assert!(matches!(initial_ideal(FamilyId::Gamma, 4, &lex_rev), Err(Error::Verification(_))));
    }

    #[test]
    fn cumulant_groebner_checks() {
        for f in [FamilyId::CumIG, FamilyId::CumGamma] {
            for d in 3..8 {
                assert!(groebner_degree_check(f, d).unwrap().pass, "{f} {d}");
            }
        }
    }
}
