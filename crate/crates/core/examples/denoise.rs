//! Denoise one image with the photoreceptor filter.
//!
//! cargo run --release --example denoise -- [input.pgm|png] [out.png] [g_gap]

use std::path::PathBuf;

use prfilter::io::{read_image, write_image};
use prfilter::metrics::{psnr, ssim};
use prfilter::noise::{add_noise, NoiseFamily, NoiseSpec};
use prfilter::{NetworkParams, PrFilter};

fn main() -> prfilter::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let clean = match args.first() {
        Some(p) => read_image(&PathBuf::from(p))?,
        None => prfilter::corpus::synthetic_image(0, 96, 96),
    };
    let out = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("denoised.png"));
    let g_gap: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10.0);

    let spec = NoiseSpec::Calibrated {
        family: NoiseFamily::Gaussian { sigma: 0.3 },
        target_psnr: 9.4,
    };
    let noisy = add_noise(&clean, &spec, 1)?;
    let filter = PrFilter::new(NetworkParams::default().with_g_gap(g_gap))?;
    let denoised = filter.denoise(&noisy)?;

    println!("noisy    {:.3} dB  SSIM {:.4}", psnr(&clean, &noisy)?, ssim(&clean, &noisy)?);
    println!("denoised {:.3} dB  SSIM {:.4}  (g_gap {g_gap} nS)", psnr(&clean, &denoised)?, ssim(&clean, &denoised)?);
    write_image(&out.with_file_name("noisy.png"), &noisy)?;
    write_image(&out, &denoised)?;
    Ok(())
}
