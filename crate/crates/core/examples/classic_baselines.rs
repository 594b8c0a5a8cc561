//! PR filter against the classic spatial filters on one noisy image.

use prfilter::filters::{apply, FilterKind};
use prfilter::metrics::{psnr, ssim};
use prfilter::noise::{add_noise, NoiseSpec};
use prfilter::{NetworkParams, PrFilter};

fn main() -> prfilter::Result<()> {
    let clean = prfilter::corpus::synthetic_image(2, 96, 96);
    let spec: NoiseSpec = "blind,include_gaussian=true,target_psnr=12".parse()?;
    let noisy = add_noise(&clean, &spec, 9)?;
    println!("{:<34} {:>8} {:>8}", "filter", "PSNR", "SSIM");
    println!("{:<34} {:8.3} {:8.4}", "noisy", psnr(&clean, &noisy)?, ssim(&clean, &noisy)?);
    let kinds = [
        FilterKind::average(),
        FilterKind::Gaussian { sigma: 1.0, ksize: 9 },
        FilterKind::Gaussian { sigma: 2.0, ksize: 9 },
        FilterKind::mean(),
        FilterKind::Median { ksize: 3 },
        FilterKind::AdaptiveMedian { max_ksize: 7 },
        FilterKind::Max { ksize: 3 },
        FilterKind::Min { ksize: 3 },
    ];
    for k in kinds {
        let out = apply(&noisy, &k)?;
        println!("{:<34} {:8.3} {:8.4}", k.to_string(), psnr(&clean, &out)?, ssim(&clean, &out)?);
    }
    for g in [5.0, 10.0, 20.0] {
        let out = PrFilter::new(NetworkParams::default().with_g_gap(g))?.denoise(&noisy)?;
        println!("{:<34} {:8.3} {:8.4}", format!("pr,g_gap={g}"), psnr(&clean, &out)?, ssim(&clean, &out)?);
    }
    Ok(())
}
