use super::poly::{MultiPoly, VarTable};
use super::Rational;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::sync::Arc;

/// Rectangular matrix of polynomials over one shared variable table.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    vars: Arc<VarTable>,
    entries: Vec<MultiPoly>,
}

impl PolyMatrix {
    pub fn new(vars: &Arc<VarTable>, rows: usize, cols: usize, entries: Vec<MultiPoly>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, entries.len())));
        }
        if entries.iter().any(|e| e.vars() != vars) {
            return Err(Error::VarTableMismatch);
        }
        Ok(Self { rows, cols, vars: vars.clone(), entries })
    }

    pub fn from_rows(vars: &Arc<VarTable>, rows: Vec<Vec<MultiPoly>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(vars, r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn get(&self, r: usize, c: usize) -> &MultiPoly {
        &self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[MultiPoly] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut e = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                e.push(self.get(r, c).clone());
            }
        }
        Self { rows: self.cols, cols: self.rows, vars: self.vars.clone(), entries: e }
    }

    /// Submatrix on the given column indices (all rows).
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut e = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            for &c in cols {
                e.push(self.get(r, c).clone());
            }
        }
        Self { rows: self.rows, cols: cols.len(), vars: self.vars.clone(), entries: e }
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(&MultiPoly) -> Result<MultiPoly>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        let vars = entries.first().map(|e| e.vars().clone()).unwrap_or_else(|| self.vars.clone());
        Ok(Self { rows: self.rows, cols: self.cols, vars, entries })
    }

    /// Exact determinant by cofactor expansion along the line (row or
    /// column) with the most zero entries.
    pub fn det(&self) -> Result<MultiPoly> {
        if self.rows != self.cols {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let idx: Vec<usize> = (0..self.rows).collect();
        Ok(self.det_sub(&idx, &idx))
    }

    fn det_sub(&self, rows: &[usize], cols: &[usize]) -> MultiPoly {
        let n = rows.len();
        match n {
            0 => return MultiPoly::one(&self.vars),
            1 => return self.get(rows[0], cols[0]).clone(),
            2 => {
                return &(self.get(rows[0], cols[0]) * self.get(rows[1], cols[1]))
                    - &(self.get(rows[0], cols[1]) * self.get(rows[1], cols[0]))
            }
            _ => {}
        }
        let zeros_in_row = |r: usize| cols.iter().filter(|&&c| self.get(r, c).is_zero()).count();
        let zeros_in_col = |c: usize| rows.iter().filter(|&&r| self.get(r, c).is_zero()).count();
        let (best_row, row_zeros) = (0..n).map(|i| (i, zeros_in_row(rows[i]))).max_by_key(|x| x.1).unwrap();
        let (best_col, col_zeros) = (0..n).map(|j| (j, zeros_in_col(cols[j]))).max_by_key(|x| x.1).unwrap();
        let mut acc = MultiPoly::zero(&self.vars);
        if row_zeros >= col_zeros {
            let i = best_row;
            let sub_rows: Vec<usize> = rows.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &r)| r).collect();
            for j in 0..n {
                let e = self.get(rows[i], cols[j]);
                if e.is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &c)| c).collect();
                let term = e * &self.det_sub(&sub_rows, &sub_cols);
                acc = if (i + j) % 2 == 0 { &acc + &term } else { &acc - &term };
            }
        } else {
            let j = best_col;
            let sub_cols: Vec<usize> = cols.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &c)| c).collect();
            for i in 0..n {
                let e = self.get(rows[i], cols[j]);
                if e.is_zero() {
                    continue;
                }
                let sub_rows: Vec<usize> = rows.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &r)| r).collect();
                let term = e * &self.det_sub(&sub_rows, &sub_cols);
                acc = if (i + j) % 2 == 0 { &acc + &term } else { &acc - &term };
            }
        }
        acc
    }

    /// All maximal minors, one per column subset of size `rows`, with the
    /// subsets in lexicographic order.
    pub fn maximal_minors(&self) -> Result<Vec<(Vec<usize>, MultiPoly)>> {
        if self.rows > self.cols {
            return Err(Error::Shape(format!(
                "maximal minors need rows <= cols, matrix is {}x{}",
                self.rows, self.cols
            )));
        }
        let rows: Vec<usize> = (0..self.rows).collect();
        Ok(combinations(self.cols, self.rows)
            .into_iter()
            .map(|cs| {
                let m = self.det_sub(&rows, &cs);
                (cs, m)
            })
            .collect())
    }

    /// Substitutes numbers for every variable.
    pub fn evaluate(&self, point: &[Rational]) -> QMatrix {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.entries.iter().map(|e| e.eval(point)).collect(),
        }
    }

    /// Jacobian of `polys` with respect to every variable of their table:
    /// one row per polynomial, one column per variable.
    pub fn jacobian(vars: &Arc<VarTable>, polys: &[MultiPoly]) -> Result<Self> {
        let mut e = Vec::with_capacity(polys.len() * vars.len());
        for p in polys {
            if p.vars() != vars {
                return Err(Error::VarTableMismatch);
            }
            for v in 0..vars.len() {
                e.push(p.diff(v));
            }
        }
        Self::new(vars, polys.len(), vars.len(), e)
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Dense matrix of rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rational>,
}

impl QMatrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        rank_exact(self)
    }
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
///
/// Rows are first scaled to integers; every intermediate division is exact.
pub fn rank_exact(m: &QMatrix) -> usize {
    let (rows, cols) = (m.rows, m.cols);
    let mut a: Vec<Vec<BigInt>> = (0..rows)
        .map(|r| {
            let row = &m.data[r * cols..(r + 1) * cols];
            let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&l / q.denom())).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in rest.iter_mut() {
            let lead = row[c].clone();
            for j in c + 1..cols {
                let v = pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::int;

    fn consts(rows: Vec<Vec<i64>>) -> QMatrix {
        QMatrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(int).collect()).collect())
    }

    #[test]
    fn combination_order() {
        assert_eq!(combinations(4, 3), vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]);
        assert_eq!(combinations(2, 2), vec![vec![0, 1]]);
        assert_eq!(combinations(5, 3).len(), 10);
    }

    #[test]
    fn identity_determinant() {
        let t = VarTable::indexed("x", 0..1);
        let one = MultiPoly::one(&t);
        let z = MultiPoly::zero(&t);
        let m = PolyMatrix::from_rows(
            &t,
            vec![vec![one.clone(), z.clone(), z.clone()], vec![z.clone(), one.clone(), z.clone()], vec![z.clone(), z, one]],
        )
        .unwrap();
        assert_eq!(m.det().unwrap(), MultiPoly::one(&t));
    }

    #[test]
    fn non_square_det_and_tall_minors_fail() {
        let t = VarTable::indexed("x", 0..1);
        let x = MultiPoly::var(&t, 0);
        let m = PolyMatrix::new(&t, 2, 1, vec![x.clone(), x]).unwrap();
        assert!(matches!(m.det(), Err(Error::NotSquare { .. })));
        assert!(m.maximal_minors().is_err());
        assert_eq!(m.transpose().maximal_minors().unwrap().len(), 2);
    }

    #[test]
    fn small_ranks() {
        assert_eq!(rank_exact(&QMatrix::zeros(3, 4)), 0);
        assert_eq!(rank_exact(&QMatrix::identity(3)), 3);
        assert_eq!(rank_exact(&consts(vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 0, 1]])), 2);
        assert_eq!(rank_exact(&consts(vec![vec![0, 0, 5], vec![0, 0, 7]])), 1);
    }
}
