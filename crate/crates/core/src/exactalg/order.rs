use super::poly::Monomial;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    /// Total degree first, ties broken reverse-lexicographically.
    GrevLex,
    /// Total degree first, ties broken lexicographically.
    DegLex,
    Lex,
}

/// A monomial order together with a ranking of the variables.
///
/// `ranking[0]` is the index of the largest variable. The identity ranking
/// makes `x0 > x1 > ... > xn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialOrder {
    pub kind: OrderKind,
    ranking: Vec<usize>,
}

impl MonomialOrder {
    pub fn new(kind: OrderKind, ranking: Vec<usize>) -> Self {
        let mut seen = ranking.clone();
        seen.sort_unstable();
        assert!(
            seen.iter().enumerate().all(|(i, &v)| i == v),
            "variable ranking must be a permutation"
        );
        Self { kind, ranking }
    }

    pub fn grevlex(nvars: usize) -> Self {
        Self::new(OrderKind::GrevLex, (0..nvars).collect())
    }

    pub fn deglex(nvars: usize) -> Self {
        Self::new(OrderKind::DegLex, (0..nvars).collect())
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        let lex = || {
            for &v in &self.ranking {
                match a.exp(v).cmp(&b.exp(v)) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        };
        match self.kind {
            OrderKind::Lex => lex(),
            OrderKind::DegLex => a.degree().cmp(&b.degree()).then_with(lex),
            OrderKind::GrevLex => a.degree().cmp(&b.degree()).then_with(|| {
                for &v in self.ranking.iter().rev() {
                    match a.exp(v).cmp(&b.exp(v)) {
                        Ordering::Equal => continue,
                        o => return o.reverse(),
                    }
                }
                Ordering::Equal
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    #[test]
    fn grevlex_prefers_fewer_trailing_variables() {
        let o = MonomialOrder::grevlex(4);
        // m1^4 > m0 m1^2 m2 > m0^2 m2^2 > m0^2 m1 m3
        let seq = [m(&[0, 4, 0, 0]), m(&[1, 2, 1, 0]), m(&[2, 0, 2, 0]), m(&[2, 1, 0, 1])];
        for w in seq.windows(2) {
            assert_eq!(o.cmp(&w[0], &w[1]), Ordering::Greater);
        }
    }

    #[test]
    fn deglex_is_lex_within_a_degree() {
        let o = MonomialOrder::deglex(3);
        assert_eq!(o.cmp(&m(&[1, 0, 1]), &m(&[0, 2, 0])), Ordering::Greater);
        assert_eq!(o.cmp(&m(&[0, 0, 3]), &m(&[1, 1, 0])), Ordering::Greater);
    }

    #[test]
    fn ranking_reverses_variables() {
        let o = MonomialOrder::new(OrderKind::Lex, vec![2, 1, 0]);
        assert_eq!(o.cmp(&m(&[0, 0, 1]), &m(&[5, 0, 0])), Ordering::Greater);
    }
}
