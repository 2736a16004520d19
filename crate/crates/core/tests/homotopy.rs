use mvt_core::homotopy::{
    ed_degree, ed_degree_at, ed_system, label_orbit, mixture_system, monodromy_count, monodromy_solve, same_point,
    MonodromyOptions, PolySystem, TrackerOptions,
};
use mvt_core::moments::DistributionKind;
use mvt_core::varieties::FamilyId;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

fn residual(sys: &PolySystem, x: &[C]) -> f64 {
    sys.eval(x).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Plain Newton from the symbolic Jacobian, independent of the tracker.
fn newton(sys: &PolySystem, x: &[C]) -> Vec<C> {
    let n = sys.n();
    let mut full: Vec<C> = x.iter().chain(sys.params()).copied().collect();
    let jac = DMatrix::from_fn(n, n, |i, j| sys.equations()[i].diff(j).eval(&full));
    let f = DVector::from_vec(sys.eval(&full[..n]));
    let dx = jac.lu().solve(&(-f)).expect("regular solutions have an invertible Jacobian");
    for (v, d) in full.iter_mut().zip(dx.iter()) {
        *v += d;
    }
    full.truncate(n);
    full
}

#[test]
fn newton_polish_never_hurts() {
    let opts = TrackerOptions::default();
    for family in [FamilyId::IG, FamilyId::Gamma, FamilyId::Gaussian] {
        let r = ed_degree(family, 0, &opts).unwrap();
        let sys = ed_system(family).unwrap().with_params(r.data.clone()).unwrap();
        for s in &r.solve.solutions {
            let before = residual(&sys, &s.point);
            let mut x = s.point.clone();
            for _ in 0..3 {
                x = newton(&sys, &x);
            }
            let after = residual(&sys, &x);
            assert!(after <= before.max(1e-9), "{family}: {before:e} -> {after:e}");
            assert!(same_point(&x, &s.point, 1e-6), "{family}: Newton moved to another root");
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let opts = TrackerOptions::default();
    let a = ed_degree(FamilyId::Gamma, 4, &opts).unwrap();
    let b = ed_degree(FamilyId::Gamma, 4, &opts).unwrap();
    let points = |r: &mvt_core::homotopy::EdReport| r.solve.solutions.iter().map(|s| s.point.clone()).collect::<Vec<_>>();
    assert_eq!(points(&a), points(&b));
}

#[test]
fn count_does_not_depend_on_gamma() {
    let opts = TrackerOptions::default();
    let data = [C::new(0.3, -1.1), C::new(-0.7, 0.2), C::new(1.4, 0.9)];
    for family in [FamilyId::IG, FamilyId::Gaussian] {
        let counts: Vec<usize> =
            [1, 2].iter().map(|&seed| ed_degree_at(family, &data, &opts, seed).unwrap().count).collect();
        assert_eq!(counts[0], counts[1], "{family}");
    }
}

#[test]
fn ed_count_is_generic() {
    let opts = TrackerOptions::default();
    for seed in [10, 11] {
        assert_eq!(ed_degree(FamilyId::Gaussian, seed, &opts).unwrap().count, 7);
    }
}

#[test]
fn monodromy_orbits_are_consistent() {
    let opts = MonodromyOptions::default();
    let run = monodromy_solve(DistributionKind::Gaussian, 2, &opts, 5).unwrap();
    let r = &run.report;
    assert_eq!(r.raw_count, r.orbit_sizes.iter().sum::<usize>());
    assert!(r.orbit_sizes.iter().all(|s| *s == 2), "{:?}", r.orbit_sizes);

    let sys = mixture_system(DistributionKind::Gaussian, 2).unwrap().with_params(run.params.clone()).unwrap();
    for x in &run.solutions {
        assert!(residual(&sys, x) < 1e-8);
        let swapped = &label_orbit(DistributionKind::Gaussian, 2, x)[1];
        assert!(run.solutions.iter().any(|y| same_point(y, swapped, 1e-6)));
    }
}

/// Opt-in benchmark: three-component gamma mixtures have at least 242
/// solutions up to relabeling. Takes tens of minutes.
#[test]
#[ignore]
fn gamma_three_components() {
    let r = monodromy_count(DistributionKind::Gamma, 3, &MonodromyOptions::default(), 0).unwrap();
    println!("{r:#?}");
    assert!(r.class_count >= 242, "{}", r.class_count);
}
