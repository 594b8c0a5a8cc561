use std::fs;
use std::path::Path;

use prfilter::bench::{image_seed, run_benchmark, BenchConfig};
use prfilter::metrics::{evaluate, MetricMode};
use prfilter::noise::realize;

fn config(out: &Path, extra: &str) -> BenchConfig {
    BenchConfig::parse(&format!(
        "corpus = synthetic,count=3,size=32\n\
         noise = gaussian,sigma=0.2,target_psnr=12\n\
         noise = blind,include_gaussian=false,target_psnr=14\n\
         filter = noisy\n\
         filter = median,ksize=3\n\
         pr_g_gap = 5,10\n\
         seed = 7\n\
         metric_mode = both\n\
         out = {}\n{extra}",
        out.display()
    ))
    .unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn noisy_column_matches_direct_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let report = run_benchmark(&cfg).unwrap();
    let corpus = cfg.corpus.load().unwrap();
    for (ni, spec) in cfg.noises.iter().enumerate() {
        let rows: Vec<_> = report
            .per_image
            .iter()
            .filter(|r| r.noise == spec.to_string() && r.filter == "noisy")
            .collect();
        assert_eq!(rows.len(), corpus.len());
        for (ii, (name, clean)) in corpus.iter().enumerate() {
            let noisy = realize(clean, spec, image_seed(cfg.seed, ni, ii)).unwrap().image;
            let direct = evaluate(clean, &noisy, MetricMode::Float).unwrap();
            let row = rows.iter().find(|r| &r.result.image == name).unwrap();
            assert_eq!(row.result.float.unwrap(), direct);
            let q = evaluate(clean, &noisy, MetricMode::Quantized8).unwrap();
            assert_eq!(row.result.quantized.unwrap(), q);
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_benchmark(&config(a.path(), "")).unwrap();
    run_benchmark(&config(b.path(), "")).unwrap();
    for f in ["summary.csv", "per_image.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
}

#[test]
fn resumed_run_equals_uninterrupted_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_benchmark(&config(a.path(), "")).unwrap();
    run_benchmark(&config(b.path(), "")).unwrap();
    // simulate a crash: some cells missing, a stale partial file, no reports
    for cell in ["n00_f02.csv", "n01_f00.csv", "n01_f03.csv"] {
        fs::remove_file(b.path().join("cells").join(cell)).unwrap();
    }
    fs::write(b.path().join("cells/n01_f03.csv.partial"), "image,psnr\ntruncated").unwrap();
    fs::remove_file(b.path().join("summary.csv")).unwrap();
    fs::remove_file(b.path().join("per_image.csv")).unwrap();
    run_benchmark(&config(b.path(), "")).unwrap();
    for f in ["summary.csv", "per_image.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
}

#[test]
fn desk_sweep_has_one_row_per_image_level_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::parse(&format!(
        "corpus = synthetic,count=10,size=48\n\
         noise = blind,target_psnr=9\n\
         noise = blind,target_psnr=12\n\
         noise = blind,target_psnr=15\n\
         pr_g_gap = 10\n\
         filter = average\nfilter = gaussian,sigma=2,ksize=9\nfilter = mean\n\
         filter = median\nfilter = adaptive_median\nfilter = max\nfilter = min\n\
         out = {}\n",
        dir.path().display()
    ))
    .unwrap();
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.per_image.len(), 240);
    assert_eq!(report.summary.len(), 24);
    let text = fs::read_to_string(dir.path().join("per_image.csv")).unwrap();
    assert_eq!(text.lines().count(), 241);
    assert!(report.summary.iter().all(|r| r.errors == 0 && r.images == 10));
}

#[test]
fn failing_cells_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::parse(&format!(
        "corpus = synthetic,count=2,size=11\n\
         noise = gaussian,sigma=0.1\n\
         filter = median,ksize=13\n\
         filter = median,ksize=3\n\
         out = {}\n",
        dir.path().display()
    ))
    .unwrap();
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.summary[0].errors, 2);
    assert!(report.summary[0].float.is_none());
    assert_eq!(report.summary[1].errors, 0);
    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("errors"));
}

#[test]
fn config_errors_are_rejected() {
    assert!(BenchConfig::parse("noise = gaussian,sigma=0.1\nfilter = noisy\n").is_err());
    assert!(BenchConfig::parse("corpus = synthetic\nfilter = noisy\n").is_err());
    assert!(BenchConfig::parse("corpus = synthetic\nnoise = gaussian,sigma=0.1\n").is_err());
    assert!(BenchConfig::parse("corpus = synthetic\nnoise = gaussian,sigma=0.1\nfilter = noisy\ncolour = red\n").is_err());
    let cfg = config(Path::new("x"), "");
    assert_eq!(BenchConfig::parse(&cfg.to_kv()).unwrap(), cfg);
}
