//! Mixture-component counts of residual noise before and after PR filtering.
//!
//! cargo run --release --example noise_regularization -- [image_dir]

use std::path::PathBuf;

use prfilter::bench::CorpusSource;
use prfilter::noise::NoiseSpec;
use prfilter::profiler::regularization_report;
use prfilter::NetworkParams;

fn main() -> prfilter::Result<()> {
    let corpus = match std::env::args().nth(1) {
        Some(d) => CorpusSource::Dir(PathBuf::from(d)).load()?,
        None => prfilter::corpus::synthetic_corpus(6, 64, 64),
    };
    let spec = NoiseSpec::Blind { include_gaussian: false, target_psnr: 14.0 };
    let report = regularization_report(&corpus, &spec, &NetworkParams::default(), 1)?;
    println!("{:<16} {:>8} {:>7}", "image", "before", "after");
    for p in &report.images {
        let k = |v: Option<usize>| v.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        println!("{:<16} {:>8} {:>7}", p.name, k(p.k_before), k(p.k_after));
    }
    println!(
        "after = 1 on {:.0}% of images, not increased on {:.0}%",
        100.0 * report.fraction_after_single(),
        100.0 * report.fraction_not_increased()
    );
    Ok(())
}
