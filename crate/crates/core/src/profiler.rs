//! Residual-noise profiling: 1-D Gaussian mixtures fitted by EM, with the
//! component count chosen by BIC.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bench::CorpusSource;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kv::Args;
use crate::model::NetworkParams;
use crate::noise::{realize, NoiseSpec};
use crate::pr::PrFilter;

/// Per-pixel `processed - clean`, flattened row-major.
pub fn residual(clean: &Image, processed: &Image) -> Result<Vec<f64>> {
    clean.ensure_same_dims(processed)?;
    Ok(processed
        .data()
        .iter()
        .zip(clean.data())
        .map(|(p, c)| p - c)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub components: Vec<Component>,
    pub n_components: usize,
    pub bic: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Every restart stopped on the tolerance rather than the iteration cap.
    pub converged: bool,
    /// Log-likelihood never decreased between EM iterations.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub max_k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Lower bound on component sigma, relative to the sample std.
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            max_k: 4,
            restarts: 20,
            max_iter: 500,
            tol: 1e-8,
            sigma_floor: 1e-2,
            seed: 0,
        }
    }
}

pub const MIN_SAMPLES: usize = 100;

/// BIC-selected mixture over `k = 1..=max_k`.
pub fn fit_gmm(samples: &[f64], max_k: usize) -> Result<MixtureFit> {
    fit_gmm_with(
        samples,
        &GmmConfig {
            max_k,
            ..GmmConfig::default()
        },
    )
    .map(|s| s.best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmSelection {
    pub best: MixtureFit,
    pub per_k: Vec<MixtureFit>,
}

pub fn fit_gmm_with(samples: &[f64], cfg: &GmmConfig) -> Result<GmmSelection> {
    if !(1..=4).contains(&cfg.max_k) {
        return Err(Error::InvalidParams(format!(
            "max_k must be in 1..=4, got {}",
            cfg.max_k
        )));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(var > 0.0) || lo == hi {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    let floor = cfg.sigma_floor * var.sqrt();
    let support = Support::new(samples);
    let per_k: Vec<MixtureFit> = (1..=cfg.max_k)
        .map(|k| fit_k_support(samples, &support, k, cfg, floor))
        .collect();
    let best = per_k
        .iter()
        .min_by(|a, b| a.bic.total_cmp(&b.bic))
        .cloned()
        .expect("at least one k");
    Ok(GmmSelection { best, per_k })
}

/// Samples reduced to weighted support points for EM. Exact duplicates are
/// merged; large sets are binned on a fine uniform grid, each bin represented
/// by the mean of its members.
#[derive(Debug, Clone)]
struct Support {
    x: Vec<f64>,
    w: Vec<f64>,
}

const EXACT_LIMIT: usize = 4096;
const SUPPORT_BINS: usize = 2048;

impl Support {
    fn new(samples: &[f64]) -> Support {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let mut x = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        if sorted.len() <= EXACT_LIMIT {
            for v in sorted {
                if x.last() == Some(&v) {
                    *w.last_mut().unwrap() += 1.0;
                } else {
                    x.push(v);
                    w.push(1.0);
                }
            }
        } else {
            let width = (hi - lo) / SUPPORT_BINS as f64;
            let mut sums = vec![(0.0, 0.0); SUPPORT_BINS];
            for v in sorted {
                let b = (((v - lo) / width) as usize).min(SUPPORT_BINS - 1);
                sums[b].0 += v;
                sums[b].1 += 1.0;
            }
            for (s, c) in sums {
                if c > 0.0 {
                    x.push(s / c);
                    w.push(c);
                }
            }
        }
        Support { x, w }
    }

    fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Fits a `k`-component mixture, keeping the best of `cfg.restarts` runs.
pub fn fit_k(samples: &[f64], k: usize, cfg: &GmmConfig, sigma_floor: f64) -> MixtureFit {
    fit_k_support(samples, &Support::new(samples), k, cfg, sigma_floor)
}

fn fit_k_support(
    samples: &[f64],
    support: &Support,
    k: usize,
    cfg: &GmmConfig,
    sigma_floor: f64,
) -> MixtureFit {
    let restarts = if k == 1 { 1 } else { cfg.restarts.max(1) };
    let runs: Vec<MixtureFit> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed ^ ((k as u64) << 32) ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = kmeans_init(support, k, sigma_floor, &mut rng);
            em(support, init, cfg, sigma_floor)
        })
        .collect();
    let converged = runs.iter().all(|f| f.converged);
    let monotone = runs.iter().all(|f| f.monotone);
    let mut best = runs
        .into_iter()
        .max_by(|a, b| a.log_likelihood.total_cmp(&b.log_likelihood))
        .expect("at least one restart");
    best.converged = converged;
    best.monotone = monotone;
    best.log_likelihood = log_likelihood(samples, &best.components);
    let params = (3 * k - 1) as f64;
    best.bic = params * (samples.len() as f64).ln() - 2.0 * best.log_likelihood;
    best
}

/// Exact mixture log-likelihood of the samples.
pub fn log_likelihood(samples: &[f64], comps: &[Component]) -> f64 {
    let consts: Vec<(f64, f64)> = comps
        .iter()
        .map(|c| (c.weight.ln() - c.sigma.ln() - LN_SQRT_2PI, 0.5 / (c.sigma * c.sigma)))
        .collect();
    samples
        .iter()
        .map(|&v| {
            let lp = |j: usize| consts[j].0 - (v - comps[j].mean).powi(2) * consts[j].1;
            let mx = (0..comps.len()).map(lp).fold(f64::NEG_INFINITY, f64::max);
            mx + (0..comps.len()).map(|j| (lp(j) - mx).exp()).sum::<f64>().ln()
        })
        .sum()
}

fn kmeans_init(s: &Support, k: usize, floor: f64, rng: &mut ChaCha8Rng) -> Vec<Component> {
    let pick_weighted = |weights: &[f64], rng: &mut ChaCha8Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let mut r = rng.random::<f64>() * total;
        for (i, d) in weights.iter().enumerate() {
            r -= d;
            if r <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    };
    // k-means++ seeding
    let mut centers = vec![s.x[pick_weighted(&s.w, rng)]];
    let mut d2: Vec<f64> = s
        .x
        .iter()
        .zip(&s.w)
        .map(|(v, w)| w * (v - centers[0]).powi(2))
        .collect();
    while centers.len() < k {
        let next = if d2.iter().sum::<f64>() > 0.0 {
            s.x[pick_weighted(&d2, rng)]
        } else {
            s.x[rng.random_range(0..s.x.len())]
        };
        centers.push(next);
        for ((d, v), w) in d2.iter_mut().zip(&s.x).zip(&s.w) {
            *d = d.min(w * (v - next).powi(2));
        }
    }
    let nearest = |v: f64, centers: &[f64]| {
        (0..k)
            .min_by(|&i, &j| (v - centers[i]).abs().total_cmp(&(v - centers[j]).abs()))
            .unwrap()
    };
    for _ in 0..10 {
        let mut sums = vec![(0.0, 0.0); k];
        for (&v, &w) in s.x.iter().zip(&s.w) {
            let a = nearest(v, &centers);
            sums[a].0 += w * v;
            sums[a].1 += w;
        }
        for (c, (sv, m)) in centers.iter_mut().zip(&sums) {
            if *m > 0.0 {
                *c = sv / m;
            }
        }
    }
    let n = s.total();
    let mut stats = vec![(0.0, 0.0); k];
    for (&v, &w) in s.x.iter().zip(&s.w) {
        let a = nearest(v, &centers);
        stats[a].0 += w;
        stats[a].1 += w * (v - centers[a]).powi(2);
    }
    let global = {
        let m = s.x.iter().zip(&s.w).map(|(v, w)| v * w).sum::<f64>() / n;
        (s.x.iter().zip(&s.w).map(|(v, w)| w * (v - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let raw: Vec<f64> = stats.iter().map(|st| (st.0 / n).max(1.0 / n)).collect();
    let total: f64 = raw.iter().sum();
    centers
        .iter()
        .zip(&stats)
        .zip(&raw)
        .map(|((&mean, &(m, ss)), &wt)| Component {
            weight: wt / total,
            mean,
            sigma: if m > 1.0 { (ss / m).sqrt() } else { global }.max(floor),
        })
        .collect()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

fn em(s: &Support, mut comps: Vec<Component>, cfg: &GmmConfig, floor: f64) -> MixtureFit {
    let k = comps.len();
    let n = s.total();
    let mut prev = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut p = vec![0.0; k];
    // per component: (sum r, sum r x, sum r x^2)
    let mut acc = vec![(0.0, 0.0, 0.0); k];
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let consts: Vec<(f64, f64)> = comps
            .iter()
            .map(|c| (c.weight.ln() - c.sigma.ln() - LN_SQRT_2PI, 0.5 / (c.sigma * c.sigma)))
            .collect();
        acc.iter_mut().for_each(|a| *a = (0.0, 0.0, 0.0));
        ll = 0.0;
        for (&v, &w) in s.x.iter().zip(&s.w) {
            let mut mx = f64::NEG_INFINITY;
            for j in 0..k {
                p[j] = consts[j].0 - (v - comps[j].mean).powi(2) * consts[j].1;
                mx = mx.max(p[j]);
            }
            let mut sum = 0.0;
            for pj in p.iter_mut() {
                *pj = (*pj - mx).exp();
                sum += *pj;
            }
            ll += w * (mx + sum.ln());
            let scale = w / sum;
            for (a, pj) in acc.iter_mut().zip(&p) {
                let r = pj * scale;
                a.0 += r;
                a.1 += r * v;
                a.2 += r * v * v;
            }
        }
        if ll < prev - 1e-9 * prev.abs().max(1.0) {
            monotone = false;
        }
        if (ll - prev).abs() <= cfg.tol * ll.abs().max(1.0) {
            converged = true;
            break;
        }
        prev = ll;
        for (c, &(nk, sx, sxx)) in comps.iter_mut().zip(&acc) {
            if nk <= f64::MIN_POSITIVE {
                c.weight = f64::MIN_POSITIVE;
                continue;
            }
            let mean = sx / nk;
            let var = (sxx / nk - mean * mean).max(0.0);
            c.weight = nk / n;
            c.mean = mean;
            c.sigma = var.sqrt().max(floor);
        }
    }
    let params = (3 * k - 1) as f64;
    MixtureFit {
        bic: params * n.ln() - 2.0 * ll,
        n_components: k,
        components: comps,
        log_likelihood: ll,
        iterations,
        converged,
        monotone,
    }
}

pub const HIST_BINS: usize = 101;

/// Counts over 101 uniform bins spanning `[-1, 1]`; out-of-range samples
/// are clamped into the end bins.
pub fn histogram(samples: &[f64]) -> Vec<usize> {
    let mut h = vec![0usize; HIST_BINS];
    for &v in samples {
        let t = ((v + 1.0) / 2.0 * HIST_BINS as f64).floor();
        let b = t.clamp(0.0, (HIST_BINS - 1) as f64) as usize;
        h[b] += 1;
    }
    h
}

pub fn bin_centers() -> Vec<f64> {
    let w = 2.0 / HIST_BINS as f64;
    (0..HIST_BINS).map(|i| -1.0 + (i as f64 + 0.5) * w).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageProfile {
    pub name: String,
    pub k_before: Option<usize>,
    pub k_after: Option<usize>,
    pub before: Option<MixtureFit>,
    pub after: Option<MixtureFit>,
    pub hist_before: Vec<usize>,
    pub hist_after: Vec<usize>,
    /// Set when the image was excluded from the statistics.
    pub note: Option<String>,
}

impl ImageProfile {
    pub fn included(&self) -> bool {
        self.k_before.is_some() && self.k_after.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationReport {
    pub spec: NoiseSpec,
    pub images: Vec<ImageProfile>,
}

impl RegularizationReport {
    fn included(&self) -> impl Iterator<Item = &ImageProfile> {
        self.images.iter().filter(|p| p.included())
    }

    pub fn n_included(&self) -> usize {
        self.included().count()
    }

    /// Images per selected component count (index 0 holds k = 1).
    pub fn k_histogram(&self) -> ([usize; 4], [usize; 4]) {
        let (mut b, mut a) = ([0; 4], [0; 4]);
        for p in self.included() {
            b[p.k_before.unwrap() - 1] += 1;
            a[p.k_after.unwrap() - 1] += 1;
        }
        (b, a)
    }

    pub fn fraction_after_single(&self) -> f64 {
        let n = self.n_included();
        if n == 0 {
            return 0.0;
        }
        self.included().filter(|p| p.k_after == Some(1)).count() as f64 / n as f64
    }

    pub fn fraction_before_single(&self) -> f64 {
        let n = self.n_included();
        if n == 0 {
            return 0.0;
        }
        self.included().filter(|p| p.k_before == Some(1)).count() as f64 / n as f64
    }

    pub fn fraction_not_increased(&self) -> f64 {
        let n = self.n_included();
        if n == 0 {
            return 0.0;
        }
        self.included().filter(|p| p.k_after <= p.k_before).count() as f64 / n as f64
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("image,k_before,k_after,before_components,after_components,note\n");
        let fmt = |f: &Option<MixtureFit>| {
            f.as_ref()
                .map(|m| {
                    m.components
                        .iter()
                        .map(|c| format!("{:.6}:{:.6}:{:.6}", c.weight, c.mean, c.sigma))
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default()
        };
        let k = |v: Option<usize>| v.map(|k| k.to_string()).unwrap_or_default();
        for p in &self.images {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.name,
                k(p.k_before),
                k(p.k_after),
                fmt(&p.before),
                fmt(&p.after),
                p.note.as_deref().unwrap_or("")
            );
        }
        s
    }

    pub fn k_histogram_csv(&self) -> String {
        let (b, a) = self.k_histogram();
        let mut s = String::from("k,before,after\n");
        for k in 0..4 {
            let _ = writeln!(s, "{},{},{}", k + 1, b[k], a[k]);
        }
        s
    }

    pub fn image_histogram_csv(p: &ImageProfile) -> String {
        let mut s = String::from("bin_center,before,after\n");
        for ((c, b), a) in bin_centers().iter().zip(&p.hist_before).zip(&p.hist_after) {
            let _ = writeln!(s, "{c:.6},{b},{a}");
        }
        s
    }

    /// Writes `summary.csv`, `k_histogram.csv` and one histogram CSV per image.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: String| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        put("summary.csv", self.summary_csv())?;
        put("k_histogram.csv", self.k_histogram_csv())?;
        for p in &self.images {
            put(&format!("hist_{}.csv", p.name), Self::image_histogram_csv(p))?;
        }
        Ok(())
    }
}

/// Settings of a profiling run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub corpus: CorpusSource,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub g_gap: f64,
    pub out: PathBuf,
}

impl ProfileConfig {
    pub fn from_args(mut args: Args) -> Result<Self> {
        let corpus: CorpusSource = args.require::<String>("corpus")?.parse()?;
        let noise: NoiseSpec = args.require::<String>("noise")?.parse()?;
        noise.validate()?;
        let cfg = ProfileConfig {
            corpus,
            noise,
            seed: args.take_or("seed", 0)?,
            g_gap: args.take_or("g_gap", NetworkParams::default().g_gap)?,
            out: PathBuf::from(args.take_or("out", "profile_out".to_string())?),
        };
        args.finish()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "corpus = {}\nnoise = {}\nseed = {}\ng_gap = {}\nout = {}\n",
            self.corpus,
            self.noise,
            self.seed,
            self.g_gap,
            self.out.display()
        )
    }

    /// Runs the report and writes its CSVs under `out`.
    pub fn run(&self) -> Result<RegularizationReport> {
        let corpus = self.corpus.load()?;
        let params = NetworkParams::default().with_g_gap(self.g_gap);
        let report = regularization_report(&corpus, &self.noise, &params, self.seed)?;
        report.write(&self.out)?;
        Ok(report)
    }
}

/// Fits residual mixtures before and after PR filtering for every image.
/// The "after" residual is `pr(noisy) - pr(clean)`.
pub fn regularization_report(
    corpus: &[(String, Image)],
    spec: &NoiseSpec,
    params: &NetworkParams,
    seed: u64,
) -> Result<RegularizationReport> {
    if corpus.is_empty() {
        return Err(Error::InvalidParams("empty corpus".into()));
    }
    let filter = PrFilter::new(*params)?;
    let cfg = GmmConfig {
        seed,
        ..GmmConfig::default()
    };
    let images = corpus
        .par_iter()
        .enumerate()
        .map(|(i, (name, clean))| -> Result<ImageProfile> {
            let noisy = realize(clean, spec, seed.wrapping_add(i as u64))?.image;
            let before = residual(clean, &noisy)?;
            let after = residual(&filter.denoise(clean)?, &filter.denoise(&noisy)?)?;
            let mut p = ImageProfile {
                name: name.clone(),
                k_before: None,
                k_after: None,
                before: None,
                after: None,
                hist_before: histogram(&before),
                hist_after: histogram(&after),
                note: None,
            };
            match (fit_gmm_with(&before, &cfg), fit_gmm_with(&after, &cfg)) {
                (Ok(b), Ok(a)) => {
                    p.k_before = Some(b.best.n_components);
                    p.k_after = Some(a.best.n_components);
                    p.before = Some(b.best);
                    p.after = Some(a.best);
                }
                (Err(Error::Degenerate(m)), _) | (_, Err(Error::Degenerate(m))) => {
                    p.note = Some(format!("degenerate: {m}"));
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularizationReport {
        spec: *spec,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn draw(n: usize, parts: &[(f64, f64, f64)], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut u = (i as f64 + 0.5) / n as f64;
            let mut pick = parts.len() - 1;
            for (j, p) in parts.iter().enumerate() {
                if u < p.0 {
                    pick = j;
                    break;
                }
                u -= p.0;
            }
            let (_, m, s) = parts[pick];
            out.push(Normal::new(m, s).unwrap().sample(&mut rng));
        }
        out
    }

    #[test]
    fn residual_basics() {
        let a = Image::from_fn(4, 3, |x, y| (x + y) as f64 / 10.0).unwrap();
        assert!(residual(&a, &a).unwrap().iter().all(|&v| v == 0.0));
        let b = Image::from_fn(4, 3, |x, y| (x + y) as f64 / 10.0 + 0.1).unwrap();
        let r = residual(&a, &b).unwrap();
        let back = residual(&b, &a).unwrap();
        for (u, v) in r.iter().zip(&back) {
            assert_eq!(*u, -*v);
        }
        assert!(residual(&a, &Image::filled(3, 3, 0.0).unwrap()).is_err());
    }

    #[test]
    fn single_gaussian_selects_one() {
        let x = draw(100_000, &[(1.0, 0.05, 0.1)], 3);
        let fit = fit_gmm(&x, 4).unwrap();
        assert_eq!(fit.n_components, 1);
        assert!((fit.components[0].sigma - 0.1).abs() < 0.002);
        assert!(fit.monotone);
    }

    #[test]
    fn two_separated_modes() {
        let x = draw(100_000, &[(0.5, -0.3, 0.03), (0.5, 0.3, 0.03)], 5);
        let fit = fit_gmm(&x, 4).unwrap();
        assert_eq!(fit.n_components, 2);
        let mut means: Vec<f64> = fit.components.iter().map(|c| c.mean).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 0.3).abs() < 0.01 && (means[1] - 0.3).abs() < 0.01);
        let w: f64 = fit.components.iter().map(|c| c.weight).sum();
        assert!((w - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(matches!(fit_gmm(&[0.3; 500], 2), Err(Error::Degenerate(_))));
        assert!(fit_gmm(&[0.1; 50], 2).is_err());
        assert!(fit_gmm(&draw(500, &[(1.0, 0.0, 1.0)], 1), 5).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[-1.0, 0.0, 1.0, 2.0, -3.0]);
        assert_eq!(h.len(), HIST_BINS);
        assert_eq!(h[0], 2);
        assert_eq!(h[50], 1);
        assert_eq!(h[100], 2);
        assert!((bin_centers()[50]).abs() < 1e-12);
    }
}
