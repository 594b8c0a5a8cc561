//! Every noise family, calibrated and blind, written next to the clean image.
//!
//! cargo run --release --example noise_gallery -- [out_dir]

use std::path::PathBuf;

use prfilter::io::write_image;
use prfilter::noise::{realize, FamilyTag, NoiseFamily, NoiseSpec};

fn main() -> prfilter::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "noise_gallery".into()));
    std::fs::create_dir_all(&dir).map_err(|e| prfilter::Error::io(&dir, e))?;
    let clean = prfilter::corpus::synthetic_image(1, 128, 128);
    write_image(&dir.join("clean.png"), &clean)?;

    let families = [
        NoiseFamily::Gaussian { sigma: 0.1 },
        NoiseFamily::IntensityGaussian { sigma0: 0.05, k: 0.1 },
        NoiseFamily::Laplacian { b: 0.1 },
        NoiseFamily::SaltPepper { p_salt: 0.05, p_pepper: 0.05 },
        NoiseFamily::Uniform { a: 0.2 },
    ];
    for family in families {
        let spec = NoiseSpec::Calibrated { family, target_psnr: 12.0 };
        let r = realize(&clean, &spec, 4)?;
        println!("{:<45} {:.3} dB", r.families[0].to_string(), r.psnr);
        write_image(&dir.join(format!("{}.png", family.tag().name())), &r.image)?;
    }
    for (with, target) in [(true, 9.0), (true, 15.0), (false, 14.0)] {
        let spec = NoiseSpec::Blind { include_gaussian: with, target_psnr: target };
        let r = realize(&clean, &spec, 4)?;
        let shares: Vec<String> = FamilyTag::ALL
            .iter()
            .map(|t| {
                let n = r.assignment.iter().filter(|a| *a == t).count();
                format!("{} {:.0}%", t.name(), 100.0 * n as f64 / r.assignment.len() as f64)
            })
            .collect();
        println!("{spec:<45} {:.3} dB  [{}]", r.psnr, shares.join(", "));
        write_image(&dir.join(format!("blind_{with}_{target}.png")), &r.image)?;
    }
    Ok(())
}
