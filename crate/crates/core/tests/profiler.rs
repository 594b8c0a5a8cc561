use prfilter::noise::{add_noise, NoiseFamily, NoiseSpec};
use prfilter::profiler::{fit_gmm, fit_gmm_with, regularization_report, residual, GmmConfig};
use prfilter::NetworkParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn normal(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(mean, sd).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn single_gaussian_is_one_component() {
    let s = normal(100_000, 0.1, 0.05, 1);
    let fit = fit_gmm(&s, 4).unwrap();
    assert_eq!(fit.n_components, 1);
    assert!((fit.components[0].sigma / 0.05 - 1.0).abs() < 0.02);
    assert!(fit.monotone);
}

#[test]
fn two_separated_modes_are_found() {
    let mut s = normal(50_000, -0.3, 0.03, 2);
    s.extend(normal(50_000, 0.3, 0.03, 3));
    let fit = fit_gmm(&s, 4).unwrap();
    assert_eq!(fit.n_components, 2);
    let mut means: Vec<f64> = fit.components.iter().map(|c| c.mean).collect();
    means.sort_by(f64::total_cmp);
    assert!((means[0] + 0.3).abs() < 0.01 && (means[1] - 0.3).abs() < 0.01);
    let wsum: f64 = fit.components.iter().map(|c| c.weight).sum();
    assert!((wsum - 1.0).abs() < 1e-9);
}

#[test]
fn bic_prefers_one_component_on_gaussian_data() {
    let cfg = GmmConfig { max_k: 2, ..GmmConfig::default() };
    let mut wins = 0;
    for trial in 0..100 {
        let s = normal(100_000, 0.0, 1.0, 1000 + trial);
        let sel = fit_gmm_with(&s, &GmmConfig { seed: trial, ..cfg }).unwrap();
        assert!(sel.per_k.iter().all(|f| f.monotone));
        if sel.per_k[0].bic < sel.per_k[1].bic {
            wins += 1;
        }
    }
    assert!(wins >= 95, "k=1 won {wins}/100");
}

#[test]
fn identical_samples_are_degenerate() {
    assert!(matches!(
        fit_gmm(&[0.25; 1000], 4),
        Err(prfilter::Error::Degenerate(_))
    ));
    assert!(fit_gmm(&[0.1, 0.2], 4).is_err());
}

#[test]
fn gaussian_residual_has_expected_spread() {
    let clean = prfilter::Image::filled(128, 128, 0.5).unwrap();
    let noisy = add_noise(&clean, &NoiseSpec::Regular(NoiseFamily::Gaussian { sigma: 0.1 }), 4).unwrap();
    let r = residual(&clean, &noisy).unwrap();
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let sd = (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    assert!((sd / 0.1 - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_noise_fits_single_component_before_filtering() {
    let corpus = prfilter::corpus::synthetic_corpus(10, 64, 64);
    let spec = NoiseSpec::Regular(NoiseFamily::Gaussian { sigma: 0.05 });
    let report = regularization_report(&corpus, &spec, &NetworkParams::default(), 5).unwrap();
    assert_eq!(report.n_included(), 10);
    assert!(report.fraction_before_single() >= 0.9, "{}", report.fraction_before_single());
}

#[test]
fn noiseless_images_are_excluded() {
    let corpus = prfilter::corpus::synthetic_corpus(3, 32, 32);
    let spec = NoiseSpec::Regular(NoiseFamily::Gaussian { sigma: 0.0 });
    let report = regularization_report(&corpus, &spec, &NetworkParams::default(), 5).unwrap();
    assert_eq!(report.n_included(), 0);
    assert!(report.images.iter().all(|p| p.note.as_deref().unwrap_or("").starts_with("degenerate")));
}

proptest! {
    #[test]
    fn residual_is_antisymmetric(a in prop::collection::vec(0.0f64..1.0, 30), b in prop::collection::vec(0.0f64..1.0, 30)) {
        let x = prfilter::Image::new(6, 5, a).unwrap();
        let y = prfilter::Image::new(6, 5, b).unwrap();
        let r1 = residual(&x, &y).unwrap();
        let r2 = residual(&y, &x).unwrap();
        for (u, v) in r1.iter().zip(&r2) {
            prop_assert_eq!(*u, -*v);
        }
    }
}
