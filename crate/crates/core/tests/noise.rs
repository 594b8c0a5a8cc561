use prfilter::metrics::psnr;
use prfilter::noise::{
    add_noise, additive_field, blind_mixture, realize, FamilyTag, NoiseFamily, NoiseSpec,
};
use prfilter::Image;

fn gray(n: usize) -> Image {
    Image::filled(n, n, 0.5).unwrap()
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn zero_sigma_is_identity() {
    let img = prfilter::corpus::synthetic_image(2, 32, 32);
    let out = add_noise(&img, &NoiseSpec::Regular(NoiseFamily::Gaussian { sigma: 0.0 }), 1).unwrap();
    assert_eq!(out, img);
}

#[test]
fn full_salt_gives_white() {
    let spec = NoiseSpec::Regular(NoiseFamily::SaltPepper { p_salt: 1.0, p_pepper: 0.0 });
    let out = add_noise(&gray(16), &spec, 1).unwrap();
    assert!(out.data().iter().all(|&v| v == 1.0));
}

#[test]
fn gaussian_moments_match() {
    let sigma = 0.1;
    let f = additive_field(&gray(256), &NoiseFamily::Gaussian { sigma }, 7).unwrap();
    assert!((variance(&f) / (sigma * sigma) - 1.0).abs() < 0.05);
}

#[test]
fn laplacian_moments_match() {
    let b = 0.08;
    let f = additive_field(&gray(256), &NoiseFamily::Laplacian { b }, 7).unwrap();
    assert!((variance(&f) / (2.0 * b * b) - 1.0).abs() < 0.05);
}

#[test]
fn uniform_moments_match() {
    let a = 0.2;
    let f = additive_field(&gray(256), &NoiseFamily::Uniform { a }, 7).unwrap();
    assert!((variance(&f) / (a * a / 3.0) - 1.0).abs() < 0.05);
    assert!(f.iter().all(|v| v.abs() < a));
}

#[test]
fn intensity_dependent_sigma_grows_with_intensity() {
    let fam = NoiseFamily::IntensityGaussian { sigma0: 0.02, k: 0.2 };
    let dark = additive_field(&Image::filled(128, 128, 0.1).unwrap(), &fam, 3).unwrap();
    let bright = additive_field(&Image::filled(128, 128, 0.9).unwrap(), &fam, 3).unwrap();
    assert!((variance(&dark).sqrt() / 0.04 - 1.0).abs() < 0.05);
    assert!((variance(&bright).sqrt() / 0.2 - 1.0).abs() < 0.05);
}

#[test]
fn analytic_psnr_on_gray() {
    let sigma = 0.335;
    let f = additive_field(&gray(256), &NoiseFamily::Gaussian { sigma }, 5).unwrap();
    let mse = f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
    let unclamped = -10.0 * mse.log10();
    assert!((unclamped - (-20.0 * sigma.log10())).abs() < 0.1);
    assert!((unclamped - 9.5).abs() < 0.3);
    let clamped = psnr(&gray(256), &add_noise(&gray(256), &NoiseSpec::Regular(NoiseFamily::Gaussian { sigma }), 5).unwrap()).unwrap();
    assert!(clamped > unclamped);
}

#[test]
fn seeds_are_deterministic_and_distinct() {
    let img = prfilter::corpus::synthetic_image(1, 64, 64);
    let spec = NoiseSpec::Blind { include_gaussian: true, target_psnr: 12.0 };
    let a = add_noise(&img, &spec, 10).unwrap();
    let b = add_noise(&img, &spec, 10).unwrap();
    let c = add_noise(&img, &spec, 11).unwrap();
    assert_eq!(a, b);
    assert!(a.data().iter().zip(c.data()).any(|(x, y)| x != y));
}

#[test]
fn calibrated_target_is_met() {
    let img = prfilter::corpus::synthetic_image(3, 64, 64);
    for family in [
        NoiseFamily::Gaussian { sigma: 0.1 },
        NoiseFamily::IntensityGaussian { sigma0: 0.05, k: 0.1 },
        NoiseFamily::Laplacian { b: 0.1 },
        NoiseFamily::SaltPepper { p_salt: 0.05, p_pepper: 0.05 },
        NoiseFamily::Uniform { a: 0.2 },
    ] {
        let r = realize(&img, &NoiseSpec::Calibrated { family, target_psnr: 15.0 }, 2).unwrap();
        assert!((r.psnr - 15.0).abs() <= 0.5, "{family}: {}", r.psnr);
    }
}

#[test]
fn blind_without_gaussian_never_assigns_gaussian() {
    let img = prfilter::corpus::synthetic_image(4, 64, 64);
    for seed in 0..5 {
        let r = blind_mixture(&img, false, 14.0, seed).unwrap();
        assert!(r.assignment.iter().all(|t| FamilyTag::NON_GAUSSIAN.contains(t)));
        let r = blind_mixture(&img, true, 14.0, seed).unwrap();
        for t in FamilyTag::ALL {
            assert!(r.assignment.contains(&t));
        }
    }
}

#[test]
fn blind_target_fifteen_on_every_image() {
    for (name, img) in prfilter::corpus::synthetic_corpus(6, 64, 64) {
        let r = blind_mixture(&img, true, 15.0, 3).unwrap();
        assert!((14.5..=15.5).contains(&r.psnr), "{name}: {}", r.psnr);
    }
}

#[test]
fn blind_averages_reproduce_noisy_anchors() {
    let corpus = prfilter::corpus::synthetic_corpus(10, 64, 64);
    for anchor in [9.5785, 12.4169, 15.2791] {
        let mean = corpus
            .iter()
            .enumerate()
            .map(|(i, (_, img))| blind_mixture(img, true, anchor, i as u64).unwrap().psnr)
            .sum::<f64>()
            / corpus.len() as f64;
        assert!((mean - anchor).abs() <= 0.5, "{anchor}: {mean}");
    }
}

#[test]
fn specs_round_trip_through_text() {
    for s in [
        "gaussian,sigma=0.1",
        "idg,sigma0=0.02,k=0.1",
        "laplacian,b=0.05,target_psnr=12",
        "salt_pepper,p_salt=0.1,p_pepper=0.05",
        "uniform,a=0.3",
        "blind,include_gaussian=false,target_psnr=18",
    ] {
        let spec: NoiseSpec = s.parse().unwrap();
        assert_eq!(spec.to_string().parse::<NoiseSpec>().unwrap(), spec);
        assert_eq!(NoiseSpec::from_kv(&spec.to_kv()).unwrap(), spec);
    }
    assert!("salt_pepper,p_salt=0.7,p_pepper=0.5".parse::<NoiseSpec>().is_err());
    assert!("gaussian,sigma=-1".parse::<NoiseSpec>().is_err());
}
