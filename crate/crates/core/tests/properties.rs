use mvt_core::estimate::{mom_single_exact, to_chart_exact};
use mvt_core::exactalg::{int, rat, Monomial, MultiPoly, PolyMatrix, QMatrix, Rational, VarTable};
use mvt_core::moments::{cumulants_to_moments, moments, moments_to_cumulants, DistributionKind};
use proptest::prelude::*;
use std::sync::Arc;

fn table() -> Arc<VarTable> {
    VarTable::indexed("x", 0..3)
}

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| rat(n, d))
}

fn nonzero_positive() -> impl Strategy<Value = Rational> {
    (1i64..=40, 1i64..=7).prop_map(|(n, d)| rat(n, d))
}

fn poly() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::array::uniform3(0u32..3), rational()), 0..5).prop_map(|terms| {
        MultiPoly::from_terms(&table(), terms.into_iter().map(|(e, c)| (Monomial::new(e.to_vec()), c)))
    })
}

fn qmatrix(max: usize) -> impl Strategy<Value = QMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        // small entries and many zeros make rank deficiency common
        prop::collection::vec(prop::collection::vec(prop_oneof![Just(int(0)), rational()], c), r)
            .prop_map(QMatrix::from_rows)
    })
}

/// Leibniz expansion, the independent oracle for the determinant.
fn leibniz(m: &[Vec<Rational>]) -> Rational {
    fn perms(n: usize) -> Vec<(Vec<usize>, bool)> {
        if n == 0 {
            return vec![(Vec::new(), true)];
        }
        let mut out = Vec::new();
        for (p, even) in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                // inserting at `pos` moves the new element past n-1-pos others
                let flips = (p.len() - pos) % 2 == 1;
                out.push((q, even != flips));
            }
        }
        out
    }
    perms(m.len())
        .into_iter()
        .map(|(p, even)| {
            let prod = p.iter().enumerate().fold(int(1), |acc, (i, &j)| acc * &m[i][j]);
            if even {
                prod
            } else {
                -prod
            }
        })
        .fold(int(0), |a, b| a + b)
}

proptest! {
    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn canonical_text_roundtrips(a in poly()) {
        let back = MultiPoly::parse(&table(), &a.to_canonical_string()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn determinant_matches_leibniz(n in 1usize..=4, entries in prop::collection::vec(rational(), 16)) {
        let rows: Vec<Vec<Rational>> = (0..n).map(|i| entries[i * n..(i + 1) * n].to_vec()).collect();
        let vars = table();
        let m = PolyMatrix::from_rows(
            &vars,
            rows.iter().map(|r| r.iter().map(|v| MultiPoly::constant(&vars, v.clone())).collect()).collect(),
        )
        .unwrap();
        let det = m.det().unwrap();
        prop_assert_eq!(det, MultiPoly::constant(&vars, leibniz(&rows)));
    }

    #[test]
    fn rank_is_transpose_invariant(m in qmatrix(6)) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn cumulant_transform_roundtrips(x in prop::collection::vec(rational(), 1..=8)) {
        prop_assert_eq!(cumulants_to_moments(&moments_to_cumulants(&x)), x.clone());
        prop_assert_eq!(moments_to_cumulants(&cumulants_to_moments(&x)), x);
    }

    #[test]
    fn single_method_of_moments_inverts_exact_moments(
        kind in prop::sample::select(DistributionKind::ALL.to_vec()),
        a in nonzero_positive(),
        b in nonzero_positive(),
    ) {
        let natural: Vec<Rational> = vec![a, b].into_iter().take(kind.arity()).collect();
        let chart = to_chart_exact(kind, &natural);
        let m: Vec<Rational> = moments(kind, 2).entries()[1..].iter().map(|p| p.eval(&chart)).collect();
        prop_assert_eq!(mom_single_exact(kind, &m).unwrap(), natural);
    }
}
