//! Small benchmark sweep: blind noise at three levels, PR and all baselines.
//!
//! cargo run --release --example desk_benchmark -- [out_dir]

use prfilter::bench::{run_benchmark, BenchConfig};

fn main() -> prfilter::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "desk_bench".into());
    let cfg = BenchConfig::parse(&format!(
        "corpus = synthetic,count=10,size=64\n\
         noise = blind,target_psnr=9\n\
         noise = blind,target_psnr=12\n\
         noise = blind,target_psnr=15\n\
         filter = noisy\n\
         pr_g_gap = 5,10,20\n\
         filter = average\n\
         filter = gaussian,sigma=2,ksize=9\n\
         filter = mean\n\
         filter = median\n\
         filter = adaptive_median\n\
         filter = max\n\
         filter = min\n\
         out = {out}\n"
    ))?;
    let report = run_benchmark(&cfg)?;
    for row in &report.summary {
        if let Some(m) = row.float {
            println!("{:<40} {:<28} {:8.3} dB {:7.4}", row.noise, row.filter, m.psnr, m.ssim);
        }
    }
    println!("results in {out}/summary.csv and {out}/per_image.csv");
    Ok(())
}
