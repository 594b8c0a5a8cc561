use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args as ClapArgs, Parser, Subcommand};
use prfilter::bench::{run_benchmark, BenchConfig, BenchFilter};
use prfilter::error::{Error, ErrorClass, Result};
use prfilter::filters::apply;
use prfilter::io::{read_image, write_image, write_sidecar};
use prfilter::kv;
use prfilter::metrics::{evaluate, MetricMode};
use prfilter::model::NetworkParams;
use prfilter::noise::{realize, NoiseFamily, NoiseSpec};
use prfilter::profiler::ProfileConfig;
use prfilter::sta::{fit_gaussian_to_map, grid_sta, GridStaConfig};
use prfilter::{impulse_response, PrFilter};

#[derive(Parser)]
#[command(name = "prf", version, about = "Photoreceptor-network image denoising toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapArgs)]
struct Common {
    /// Gap-junction conductance (nS) for PR filtering.
    #[arg(long = "g-gap")]
    g_gap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter one image.
    Denoise {
        input: PathBuf,
        /// `pr`, `noisy`, or a classic filter spec such as `median,ksize=3`.
        #[arg(long, default_value = "pr")]
        filter: String,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        ksize: Option<usize>,
        /// Clean image; when given, PSNR and SSIM are printed.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long = "metric-mode", default_value = "float")]
        metric_mode: MetricMode,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark described by a key=value config.
    Benchmark {
        config: PathBuf,
        #[arg(long = "metric-mode")]
        metric_mode: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Add noise to an image; writes the image and a float sidecar.
    Noise {
        input: PathBuf,
        /// Noise spec, e.g. `laplacian,b=0.1` or `blind,include_gaussian=false,target_psnr=14`.
        #[arg(long)]
        spec: Option<String>,
        /// Shorthand for `--spec gaussian,sigma=<SIGMA>`.
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Spike-triggered average of the centre cell of a grid.
    Sta {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Residual-noise mixture profile before and after PR filtering.
    Profile {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Equivalent spatial kernel of the network.
    Impulse {
        #[arg(long, default_value_t = 5)]
        radius: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn print_defaults(text: &str) {
    for line in text.lines() {
        eprintln!("# {line}");
    }
}

fn params_with(g_gap: Option<f64>) -> NetworkParams {
    let p = NetworkParams::default();
    g_gap.map(|g| p.with_g_gap(g)).unwrap_or(p)
}

fn params_kv(p: &NetworkParams) -> String {
    format!(
        "c_m = {}\ng_leak = {}\ne_leak = {}\ng_gap = {}\ni_dark = {}\ntau1 = {}\ntau2 = {}\ndt = {}\nt_end = {}\n",
        p.c_m, p.g_leak, p.e_leak, p.g_gap, p.i_dark, p.tau1, p.tau2, p.dt, p.t_end
    )
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Applies `--sigma`/`--ksize` on top of a filter spec; flags win over spec keys.
fn resolve_filter(spec: &str, sigma: Option<f64>, ksize: Option<usize>) -> Result<BenchFilter> {
    let mut parts = spec.split(',').map(str::trim);
    let name = parts.next().unwrap_or("").to_ascii_lowercase();
    let mut pairs: Vec<(String, String)> = parts
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(Error::Config(format!("expected key=value in '{p}'"))),
        })
        .collect::<Result<_>>()?;
    let mut set = |k: &str, v: String| {
        pairs.retain(|(pk, _)| pk != k);
        pairs.push((k.to_string(), v));
    };
    if let (Some(v), "gaussian") = (sigma, name.as_str()) {
        set("sigma", v.to_string());
    }
    if let Some(k) = ksize {
        if !matches!(name.as_str(), "pr" | "noisy" | "adaptive_median") {
            set("ksize", k.to_string());
        }
    }
    std::iter::once(name)
        .chain(pairs.into_iter().map(|(k, v)| format!("{k}={v}")))
        .collect::<Vec<_>>()
        .join(",")
        .parse()
}

fn cmd_denoise(
    input: &Path,
    filter: &str,
    sigma: Option<f64>,
    ksize: Option<usize>,
    reference: Option<&Path>,
    mode: MetricMode,
    common: &Common,
) -> Result<()> {
    let out = common
        .out
        .clone()
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut filt = resolve_filter(filter, sigma, ksize)?;
    if let (BenchFilter::Pr { g_gap }, Some(g)) = (&mut filt, common.g_gap) {
        *g_gap = g;
    }
    print_defaults(&format!("input = {}\nfilter = {filt}\nout = {}\n", input.display(), out.display()));
    if let BenchFilter::Pr { g_gap } = filt {
        print_defaults(&params_kv(&params_with(Some(g_gap))));
    }
    let img = read_image(input)?;
    let result = match filt {
        BenchFilter::Noisy => img.clone(),
        BenchFilter::Pr { g_gap } => PrFilter::new(params_with(Some(g_gap)))?.denoise(&img)?,
        BenchFilter::Classic(k) => apply(&img, &k)?,
    };
    write_image(&out, &result)?;
    if let Some(r) = reference {
        let clean = read_image(r)?;
        let before = evaluate(&clean, &img, mode)?;
        let after = evaluate(&clean, &result, mode)?;
        eprintln!(
            "input  PSNR {:.4} dB  SSIM {:.4} ({mode})",
            before.psnr, before.ssim
        );
        eprintln!(
            "output PSNR {:.4} dB  SSIM {:.4} ({mode})",
            after.psnr, after.ssim
        );
    }
    Ok(())
}

fn cmd_benchmark(config: &Path, metric_mode: Option<&str>, common: &Common) -> Result<()> {
    let mut args = kv::read_config(config)?;
    if let Some(m) = metric_mode {
        args.set("metric_mode", m);
    }
    if let Some(s) = common.seed {
        args.set("seed", s.to_string());
    }
    if let Some(o) = &common.out {
        args.set("out", o.display().to_string());
    }
    if let Some(g) = common.g_gap {
        args.set("pr_g_gap", g.to_string());
    }
    let cfg = BenchConfig::from_args(args)?;
    print_defaults(&cfg.to_kv());
    let report = run_benchmark(&cfg)?;
    for row in &report.summary {
        let f = row
            .float
            .map(|m| format!("{:.4} dB / {:.4}", m.psnr, m.ssim))
            .unwrap_or_else(|| "-".into());
        let q = row
            .quantized
            .map(|m| format!("  [8bit {:.4} dB / {:.4}]", m.psnr, m.ssim))
            .unwrap_or_default();
        println!("{:<48} {:<28} {f}{q}  errors {}", row.noise, row.filter, row.errors);
    }
    Ok(())
}

fn cmd_noise(input: &Path, spec: Option<&str>, sigma: Option<f64>, common: &Common) -> Result<()> {
    let out = common
        .out
        .clone()
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let spec: NoiseSpec = match (spec, sigma) {
        (Some(s), _) => s.parse()?,
        (None, Some(sigma)) => NoiseSpec::Regular(NoiseFamily::Gaussian { sigma }),
        (None, None) => return Err(Error::Config("give --spec or --sigma".into())),
    };
    spec.validate()?;
    let seed = common.seed.unwrap_or(0);
    print_defaults(&format!(
        "input = {}\nspec = {spec}\nseed = {seed}\nout = {}\n",
        input.display(),
        out.display()
    ));
    let img = read_image(input)?;
    let noisy = realize(&img, &spec, seed)?;
    write_image(&out, &noisy.image)?;
    if out.extension().and_then(|e| e.to_str()) != Some("prf") {
        write_sidecar(&out.with_extension("prf"), &noisy.image)?;
    }
    eprintln!("PSNR {:.4} dB (multiplier {:.6})", noisy.psnr, noisy.multiplier);
    Ok(())
}

fn cmd_sta(config: Option<&Path>, common: &Common) -> Result<()> {
    let mut args = match config {
        Some(p) => kv::read_config(p)?,
        None => kv::Args::default(),
    };
    if let Some(s) = common.seed {
        args.set("seed", s.to_string());
    }
    let cfg = GridStaConfig::from_args(&mut args)?;
    let g_gap = match common.g_gap {
        Some(g) => {
            args.take::<f64>("g_gap")?;
            g
        }
        None => args.take_or("g_gap", NetworkParams::default().g_gap)?,
    };
    let natural: Option<PathBuf> = args.take::<String>("natural_dir")?.map(PathBuf::from);
    let out_key: Option<String> = args.take("out")?;
    args.finish()?;
    let out = common
        .out
        .clone()
        .or(out_key.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sta_out"));
    print_defaults(&cfg.to_kv());
    print_defaults(&params_kv(&params_with(Some(g_gap))));
    print_defaults(&format!("out = {}\n", out.display()));
    let source = match &natural {
        Some(dir) => prfilter::bench::CorpusSource::Dir(dir.clone())
            .load()?
            .into_iter()
            .map(|(_, i)| i)
            .collect(),
        None => Vec::new(),
    };
    let res = grid_sta(&params_with(Some(g_gap)), &cfg, &source)?;
    ensure_dir(&out)?;
    write_text(&out.join("temporal.csv"), &res.temporal_csv())?;
    write_text(&out.join("spatial.csv"), &res.spatial_csv())?;
    write_image(&out.join("spatial.pgm"), &res.heatmap())?;
    let fit = fit_gaussian_to_map(&res.spatial_map, res.width, res.height);
    let mut summary = format!(
        "n_spikes = {}\nselected_lag_ms = {}\n",
        res.n_spikes, res.selected_lag_ms
    );
    if let Ok(f) = &fit {
        summary.push_str(&format!(
            "sigma = {}\nresidual = {}\nsub_pixel = {}\n",
            f.sigma, f.residual, f.sub_pixel
        ));
    }
    write_text(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_profile(config: &Path, common: &Common) -> Result<()> {
    let mut args = kv::read_config(config)?;
    if let Some(s) = common.seed {
        args.set("seed", s.to_string());
    }
    if let Some(g) = common.g_gap {
        args.set("g_gap", g.to_string());
    }
    if let Some(o) = &common.out {
        args.set("out", o.display().to_string());
    }
    let cfg = ProfileConfig::from_args(args)?;
    print_defaults(&cfg.to_kv());
    let report = cfg.run()?;
    let (b, a) = report.k_histogram();
    println!("k  before  after");
    for k in 0..4 {
        println!("{}  {:6}  {:5}", k + 1, b[k], a[k]);
    }
    println!(
        "images {} (excluded {}), after = 1 on {:.0}%, not increased on {:.0}%",
        report.n_included(),
        report.images.len() - report.n_included(),
        100.0 * report.fraction_after_single(),
        100.0 * report.fraction_not_increased()
    );
    Ok(())
}

fn cmd_impulse(radius: usize, common: &Common) -> Result<()> {
    let params = params_with(common.g_gap);
    print_defaults(&params_kv(&params));
    print_defaults(&format!("radius = {radius}\n"));
    let k = impulse_response(&params, radius)?;
    let n = k.size();
    let fit = fit_gaussian_to_map(k.weights(), n, n)?;
    let fitted = prfilter::filters::Kernel::new(n, fit.sample(n, n))?;
    println!("center weight {:.6}", k.center());
    println!("tail mass (r >= 2) {:.6}, Gaussian fit {:.6}", k.tail_mass(2), fitted.tail_mass(2));
    println!("fitted sigma {:.4} cells", fit.sigma);
    if let Some(out) = &common.out {
        ensure_dir(out)?;
        let mut csv = String::new();
        for row in k.weights().chunks(n) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        write_text(&out.join("kernel.csv"), &csv)?;
        let img = prfilter::Image::new(n, n, k.weights().to_vec())
            .map(|i| i.min_max_normalized())
            .unwrap_or_else(|_| prfilter::Image::filled(n, n, 0.0).expect("size"));
        write_image(&out.join("kernel.pgm"), &img)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Denoise {
            input,
            filter,
            sigma,
            ksize,
            reference,
            metric_mode,
            common,
        } => cmd_denoise(
            input,
            filter,
            *sigma,
            *ksize,
            reference.as_deref(),
            *metric_mode,
            common,
        ),
        Command::Benchmark {
            config,
            metric_mode,
            common,
        } => cmd_benchmark(config, metric_mode.as_deref(), common),
        Command::Noise {
            input,
            spec,
            sigma,
            common,
        } => cmd_noise(input, spec.as_deref(), *sigma, common),
        Command::Sta { config, common } => cmd_sta(config.as_deref(), common),
        Command::Profile { config, common } => cmd_profile(config, common),
        Command::Impulse { radius, common } => cmd_impulse(*radius, common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Io => 3,
                ErrorClass::Numeric => 4,
                ErrorClass::Format => 5,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_flags_override_spec() {
        assert_eq!(
            resolve_filter("gaussian", Some(1.0), Some(5)).unwrap().to_string(),
            "gaussian,sigma=1,ksize=5"
        );
        assert_eq!(
            resolve_filter("gaussian,sigma=3", Some(1.5), None).unwrap().to_string(),
            "gaussian,sigma=1.5,ksize=9"
        );
        assert_eq!(resolve_filter("pr", None, Some(3)).unwrap().to_string(), "pr,g_gap=10");
        assert!(resolve_filter("blur", None, None).is_err());
    }
}
