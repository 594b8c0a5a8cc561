//! PSNR and SSIM in float and 8-bit modes.

use prfilter::metrics::{evaluate, MetricMode};
use prfilter::noise::{add_noise, NoiseFamily, NoiseSpec};

fn main() -> prfilter::Result<()> {
    let clean = prfilter::corpus::synthetic_image(3, 64, 64);
    println!("sigma   float PSNR  float SSIM   8bit PSNR   8bit SSIM");
    for sigma in [0.01, 0.05, 0.1, 0.2, 0.3] {
        let noisy = add_noise(&clean, &NoiseSpec::Regular(NoiseFamily::Gaussian { sigma }), 1)?;
        let f = evaluate(&clean, &noisy, MetricMode::Float)?;
        let q = evaluate(&clean, &noisy, MetricMode::Quantized8)?;
        println!("{sigma:5.2}   {:10.4}  {:10.4}  {:10.4}  {:10.4}", f.psnr, f.ssim, q.psnr, q.ssim);
    }
    Ok(())
}
