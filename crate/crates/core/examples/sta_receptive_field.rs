//! Spike-triggered average of the centre cell of a 10x10 grid.
//!
//! cargo run --release --example sta_receptive_field -- [gaussian|laplacian|natural] [natural_dir]

use std::path::PathBuf;

use prfilter::bench::CorpusSource;
use prfilter::sta::{fit_gaussian_to_map, grid_sta, GridStaConfig};
use prfilter::NetworkParams;

fn main() -> prfilter::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("gaussian").parse()?;
    let cfg = GridStaConfig { family, ..GridStaConfig::default() };
    let natural = match args.get(1) {
        Some(d) => CorpusSource::Dir(PathBuf::from(d)).load()?.into_iter().map(|(_, i)| i).collect(),
        None => Vec::new(),
    };
    let res = grid_sta(&NetworkParams::default(), &cfg, &natural)?;
    println!("{} spikelets, selected lag {} ms", res.n_spikes, res.selected_lag_ms);
    println!("temporal filter:");
    for (lag, v) in res.lags_ms.iter().zip(&res.temporal_filter).take(12) {
        println!("  {lag:5.0} ms  {v:+.3}");
    }
    println!("spatial map at the selected lag:");
    for row in res.spatial_map.chunks(res.width) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:+6.2}")).collect();
        println!("  {}", cells.join(" "));
    }
    if let Ok(fit) = fit_gaussian_to_map(&res.spatial_map, res.width, res.height) {
        println!("Gaussian fit: sigma {:.3} cells, relative residual {:.3}", fit.sigma, fit.residual);
    }
    Ok(())
}
