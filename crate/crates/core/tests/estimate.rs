use mvt_core::estimate::{
    moment_weights, mom_mixture, plant_mixture, sample, sample_moments, EstimateOptions, MixtureModel, SampleMoments,
};
use mvt_core::moments::DistributionKind;

fn ig_pair() -> MixtureModel {
    MixtureModel::new(DistributionKind::InverseGaussian, vec![vec![1.0, 5.0], vec![2.0, 20.0]], vec![0.4, 0.6]).unwrap()
}

fn within(truth: &MixtureModel, est: &MixtureModel, band: f64) -> bool {
    (0..truth.k()).all(|i| {
        (est.weights[i] / truth.weights[i] - 1.0).abs() <= band
            && (est.component_mean(i) / truth.component_mean(i) - 1.0).abs() <= band
    })
}

#[test]
fn ig_mixture_exact_moments() {
    let truth = ig_pair();
    let opts = EstimateOptions::default();
    // five moments fit a second real mixture exactly, so the truth is one
    // of the zero-residual candidates
    let r = mom_mixture(truth.kind, 2, &SampleMoments::exact(&truth, 5), &opts).unwrap();
    assert_eq!(r.complex_count, 48);
    assert!(r.candidates.iter().any(|c| c.model.relative_distance(&truth) < 1e-6), "{:#?}", r.candidates);
    let r = mom_mixture(truth.kind, 2, &SampleMoments::exact(&truth, 6), &opts).unwrap();
    assert!(r.candidates[0].model.relative_distance(&truth) < 1e-6);
    assert!(r.candidates[0].residual < 1e-9);
}

#[test]
fn gamma_fiber_has_eighteen_points() {
    let m = plant_mixture(DistributionKind::Gamma, 2, 11).unwrap();
    let r = mom_mixture(DistributionKind::Gamma, 2, &SampleMoments::exact(&m, 5), &EstimateOptions::default()).unwrap();
    assert_eq!((r.complex_count, r.start_count), (18, 18));
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn candidates_are_ranked_and_canonical() {
    for seed in 0..5 {
        let m = plant_mixture(DistributionKind::Gaussian, 2, seed).unwrap();
        let r = mom_mixture(m.kind, 2, &SampleMoments::exact(&m, 6), &EstimateOptions::default()).unwrap();
        assert!(r.candidates.windows(2).all(|w| w[0].residual <= w[1].residual));
        for (i, c) in r.candidates.iter().enumerate() {
            assert_eq!(c.rank, i + 1);
            assert!(c.model.component_mean(0) <= c.model.component_mean(1));
            assert!(c.admissible);
        }
    }
}

#[test]
fn relabeled_model_is_the_same_estimate() {
    let a = MixtureModel::new(DistributionKind::Gamma, vec![vec![2.0, 0.5], vec![4.0, 1.0]], vec![0.4, 0.6]).unwrap();
    let b = MixtureModel::new(DistributionKind::Gamma, vec![vec![4.0, 1.0], vec![2.0, 0.5]], vec![0.6, 0.4]).unwrap();
    let opts = EstimateOptions::default();
    let ra = mom_mixture(a.kind, 2, &SampleMoments::exact(&a, 6), &opts).unwrap();
    let rb = mom_mixture(b.kind, 2, &SampleMoments::exact(&b, 6), &opts).unwrap();
    assert!(ra.candidates[0].model.relative_distance(&rb.candidates[0].model) < 1e-9);
}

#[test]
fn too_few_moments_is_usage_error() {
    let m = SampleMoments::exact(&ig_pair(), 4);
    let e = mom_mixture(DistributionKind::InverseGaussian, 2, &m, &EstimateOptions::default()).unwrap_err();
    assert!(e.is_usage(), "{e}");
}

#[test]
fn gamma_moments_from_a_large_sample() {
    // m_r = theta^r k (k+1) ... (k+r-1) for gamma(2, 1)
    let m = MixtureModel::single(DistributionKind::Gamma, vec![2.0, 1.0]).unwrap();
    let x = sample(&m, 1_000_000, 21).unwrap();
    let s = sample_moments(&x, 5).unwrap();
    let exact = [2.0, 6.0, 24.0, 120.0, 720.0];
    let hi = sample_moments(&x, 10).unwrap();
    for r in 1..=5 {
        let se = ((hi.m(2 * r) - hi.m(r) * hi.m(r)) / x.len() as f64).sqrt();
        assert!((s.m(r) - exact[r - 1]).abs() < 3.0 * se, "m{r} = {} vs {}", s.m(r), exact[r - 1]);
    }
}

#[test]
fn inverse_gaussian_variance() {
    // Var = mu^3 / lambda
    let m = MixtureModel::single(DistributionKind::InverseGaussian, vec![1.5, 3.0]).unwrap();
    let s = sample_moments(&sample(&m, 1_000_000, 8).unwrap(), 2).unwrap();
    let var = s.m(2) - s.m(1) * s.m(1);
    assert!((var / (1.5f64.powi(3) / 3.0) - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn efficient_weights_are_symmetric_positive() {
    let x = sample(&ig_pair(), 50_000, 1).unwrap();
    let w = moment_weights(&x, 4).unwrap();
    for i in 0..4 {
        assert!(w[i][i] > 0.0);
        for j in 0..4 {
            assert!((w[i][j] - w[j][i]).abs() <= 1e-9 * w[i][j].abs().max(1e-300));
        }
    }
}

/// Twenty samples of n = 10^6 from a well-separated gamma mixture; the top
/// candidate must land within 10% on weights and means in at least 18.
#[test]
fn gamma_mixture_consistency() {
    let truth = MixtureModel::new(DistributionKind::Gamma, vec![vec![2.0, 0.5], vec![4.0, 1.0]], vec![0.4, 0.6]).unwrap();
    let d = 8;
    let hits = (0..20)
        .filter(|&seed| {
            let x = sample(&truth, 1_000_000, seed).unwrap();
            let opts = EstimateOptions { weight_matrix: Some(moment_weights(&x, d).unwrap()), ..Default::default() };
            let r = mom_mixture(truth.kind, 2, &sample_moments(&x, d).unwrap(), &opts).unwrap();
            r.candidates.first().is_some_and(|c| within(&truth, &c.model, 0.10))
        })
        .count();
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn fallback_marks_least_squares_fits() {
    // mixture moments are ill-conditioned: bumping m2 by 2% leaves no real
    // point in the parameter chamber
    let truth = ig_pair();
    let mut m = SampleMoments::exact(&truth, 5);
    m.values[1] *= 1.02;
    let plain = mom_mixture(truth.kind, 2, &m, &EstimateOptions::default()).unwrap();
    assert!(plain.candidates.is_empty());
    assert!(plain.warnings.iter().any(|w| w.contains("no admissible")), "{:?}", plain.warnings);

    let opts = EstimateOptions { least_squares_fallback: true, ..Default::default() };
    let fb = mom_mixture(truth.kind, 2, &m, &opts).unwrap();
    assert!(!fb.candidates.is_empty());
    assert!(fb.candidates.iter().all(|c| !c.admissible));
    assert!(fb.candidates.windows(2).all(|w| w[0].residual <= w[1].residual));
}
