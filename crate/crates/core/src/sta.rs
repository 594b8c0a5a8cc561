//! Spike-triggered-average receptive fields on the coupled grid.
//!
//! The photoreceptors do not spike; local voltage peaks ("spikelets") serve as
//! trigger events. With stimulus vectors `x_i` preceding bin `i` and `y_i`
//! events in that bin, the estimate is `STA = (1/n_s) sum_i y_i x_i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{normalize_min_max, Image};
use crate::kv::Args;
use crate::model::{build_system, simulate_timevarying, DriveField, GridTopology, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StimulusFamily {
    GaussianWhite,
    LaplacianWhite,
    NaturalPatches,
}

/// A stimulus movie: one drive frame (pA, signed modulation) every `frame_dt` ms.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusMovie {
    pub width: usize,
    pub height: usize,
    pub frame_dt: f64,
    pub family: StimulusFamily,
    pub whitened: bool,
    /// Row-major frames, each `width * height` long.
    pub frames: Vec<Vec<f64>>,
}

impl StimulusMovie {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 * self.frame_dt
    }

    pub fn drive_frames(&self) -> Result<Vec<DriveField>> {
        self.frames
            .iter()
            .map(|f| DriveField::modulation(f.clone()))
            .collect()
    }

    /// Per-pixel means and the mean per-pixel standard deviation.
    pub fn moments(&self) -> (Vec<f64>, f64) {
        let p = self.pixels();
        let n = self.frames.len() as f64;
        let mut mean = vec![0.0; p];
        for f in &self.frames {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for f in &self.frames {
            for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|s| (s / n).sqrt()).sum::<f64>() / p as f64;
        (mean, std)
    }

    /// Sample covariance (normalized by the frame count) after mean removal.
    pub fn covariance(&self) -> DMatrix<f64> {
        let (mean, _) = self.moments();
        let p = self.pixels();
        let n = self.frames.len();
        let x = DMatrix::from_fn(n, p, |i, j| self.frames[i][j] - mean[j]);
        (x.transpose() * &x) / n as f64
    }

    fn center_in_place(&mut self) {
        let (mean, _) = self.moments();
        for f in &mut self.frames {
            for (v, m) in f.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }

    fn rescale(&mut self, std: f64) {
        let (_, s) = self.moments();
        if s > 0.0 {
            let k = std / s;
            self.frames
                .iter_mut()
                .for_each(|f| f.iter_mut().for_each(|v| *v *= k));
        }
    }
}

/// Zero-mean white Gaussian frames with standard deviation `std` (pA).
pub fn gaussian_white(
    width: usize,
    height: usize,
    n_frames: usize,
    frame_dt: f64,
    std: f64,
    seed: u64,
) -> StimulusMovie {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..n_frames)
        .map(|_| {
            (0..width * height)
                .map(|_| std * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut m = StimulusMovie {
        width,
        height,
        frame_dt,
        family: StimulusFamily::GaussianWhite,
        whitened: false,
        frames,
    };
    m.center_in_place();
    m
}

/// Zero-mean i.i.d. Laplace frames scaled to standard deviation `std`.
pub fn laplacian_white(
    width: usize,
    height: usize,
    n_frames: usize,
    frame_dt: f64,
    std: f64,
    seed: u64,
) -> StimulusMovie {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = std / std::f64::consts::SQRT_2;
    let frames = (0..n_frames)
        .map(|_| {
            (0..width * height)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
                })
                .collect()
        })
        .collect();
    let mut m = StimulusMovie {
        width,
        height,
        frame_dt,
        family: StimulusFamily::LaplacianWhite,
        whitened: false,
        frames,
    };
    m.center_in_place();
    m
}

/// Random `width x height` patches cut from `images`, mean-subtracted per
/// pixel and scaled to average standard deviation `std`.
pub fn natural_patches(
    images: &[Image],
    width: usize,
    height: usize,
    n_frames: usize,
    frame_dt: f64,
    std: f64,
    seed: u64,
) -> Result<StimulusMovie> {
    let usable: Vec<&Image> = images
        .iter()
        .filter(|i| i.width() >= width && i.height() >= height)
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidParams(format!(
            "no image can hold a {width}x{height} patch"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let img = usable[rng.random_range(0..usable.len())];
        let x0 = rng.random_range(0..=img.width() - width);
        let y0 = rng.random_range(0..=img.height() - height);
        let mut f = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                f.push(img.get(x0 + x, y0 + y));
            }
        }
        frames.push(f);
    }
    let mut m = StimulusMovie {
        width,
        height,
        frame_dt,
        family: StimulusFamily::NaturalPatches,
        whitened: false,
        frames,
    };
    m.center_in_place();
    m.rescale(std);
    Ok(m)
}

/// Symmetric whitening transform `W = U diag(1/sqrt(lambda + eps)) U^T`.
#[derive(Debug, Clone)]
pub struct ZcaTransform {
    pub mean: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl ZcaTransform {
    pub fn fit(movie: &StimulusMovie, epsilon: f64) -> Result<Self> {
        let p = movie.pixels();
        if movie.len() < p {
            return Err(Error::InvalidParams(format!(
                "ZCA needs at least {p} frames, got {}",
                movie.len()
            )));
        }
        let (mean, _) = movie.moments();
        let eig = SymmetricEigen::new(movie.covariance());
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if !(lmax > 0.0) || lmin < epsilon {
            return Err(Error::Degenerate(format!(
                "covariance is rank-deficient (eigenvalues in [{lmin:e}, {lmax:e}], regularization {epsilon:e})"
            )));
        }
        let scale = eig.eigenvalues.map(|l| 1.0 / (l + epsilon).sqrt());
        let u = &eig.eigenvectors;
        let matrix = u * DMatrix::from_diagonal(&scale) * u.transpose();
        Ok(ZcaTransform {
            mean,
            matrix,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn apply(&self, movie: &StimulusMovie) -> StimulusMovie {
        let p = movie.pixels();
        let n = movie.len();
        let x = DMatrix::from_fn(n, p, |i, j| movie.frames[i][j] - self.mean[j]);
        // W is symmetric, so rows transform as x W.
        let y = x * &self.matrix;
        let frames = (0..n).map(|i| y.row(i).iter().copied().collect()).collect();
        StimulusMovie {
            frames,
            whitened: true,
            ..movie.clone()
        }
    }
}

pub const ZCA_EPSILON: f64 = 1e-5;

/// ZCA-whitens the movie with eigenvalue regularization `ZCA_EPSILON`.
pub fn zca_whiten(movie: &StimulusMovie) -> Result<StimulusMovie> {
    Ok(ZcaTransform::fit(movie, ZCA_EPSILON)?.apply(movie))
}

/// Frobenius distance between a matrix and the identity.
pub fn distance_to_identity(m: &DMatrix<f64>) -> f64 {
    (m - DMatrix::identity(m.nrows(), m.ncols())).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeletConfig {
    /// Minimum peak prominence (mV).
    pub prominence: f64,
    /// Minimum spacing between events (ms).
    pub refractory: f64,
    /// Half-width of the window searched for a peak's bases (ms).
    pub base_window: f64,
}

impl Default for SpikeletConfig {
    fn default() -> Self {
        SpikeletConfig {
            prominence: 0.5,
            refractory: 5.0,
            base_window: 200.0,
        }
    }
}

/// Sample indices of strict local maxima whose prominence reaches
/// `cfg.prominence`, thinned so no two are closer than `cfg.refractory`.
/// Higher peaks win conflicts.
pub fn detect_spikelet_indices(trace: &[f64], dt: f64, cfg: &SpikeletConfig) -> Vec<usize> {
    if trace.len() < 3 {
        return Vec::new();
    }
    let reach = (cfg.base_window / dt).ceil().max(1.0) as usize;
    let mut cands = Vec::new();
    for i in 1..trace.len() - 1 {
        let v = trace[i];
        if !(v > trace[i - 1] && v > trace[i + 1]) {
            continue;
        }
        let lo = i.saturating_sub(reach);
        let mut left_min = v;
        for j in (lo..i).rev() {
            if trace[j] > v {
                break;
            }
            left_min = left_min.min(trace[j]);
        }
        let hi = (i + reach).min(trace.len() - 1);
        let mut right_min = v;
        for &t in &trace[i + 1..=hi] {
            if t > v {
                break;
            }
            right_min = right_min.min(t);
        }
        if v - left_min.max(right_min) >= cfg.prominence {
            cands.push(i);
        }
    }
    let gap = cfg.refractory / dt;
    let mut order = cands.clone();
    order.sort_by(|&a, &b| trace[b].total_cmp(&trace[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| (k.abs_diff(i) as f64) >= gap) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Event times (ms) of spikelets in a trace sampled every `dt` ms.
pub fn detect_spikelets(trace: &[f64], dt: f64, cfg: &SpikeletConfig) -> Vec<f64> {
    detect_spikelet_indices(trace, dt, cfg)
        .into_iter()
        .map(|i| i as f64 * dt)
        .collect()
}

/// Lag layout of an STA: `bins` lags spaced `window / bins` ms apart,
/// starting at lag 0 (the frame containing the event).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaWindow {
    pub window: f64,
    pub bins: usize,
}

impl StaWindow {
    fn frames_per_bin(&self, frame_dt: f64) -> Result<usize> {
        if self.bins == 0 {
            return Err(Error::InvalidParams("bins must be >= 1".into()));
        }
        let bin = self.window / self.bins as f64;
        let ratio = bin / frame_dt;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
            return Err(Error::InvalidParams(format!(
                "window {} ms over {} bins must give a bin width that is a multiple of frame_dt {} ms",
                self.window, self.bins, frame_dt
            )));
        }
        Ok(k as usize)
    }

    pub fn lags_ms(&self) -> Vec<f64> {
        let bin = self.window / self.bins as f64;
        (0..self.bins).map(|l| l as f64 * bin).collect()
    }
}

/// Mergeable running sum for the STA; shards can be accumulated independently.
#[derive(Debug, Clone, PartialEq)]
pub struct StaAccumulator {
    bins: usize,
    pixels: usize,
    sum: Vec<f64>,
    n_spikes: usize,
}

impl StaAccumulator {
    pub fn new(bins: usize, pixels: usize) -> Self {
        StaAccumulator {
            bins,
            pixels,
            sum: vec![0.0; bins * pixels],
            n_spikes: 0,
        }
    }

    /// Adds the stimulus history of `count` events that fall in frame `frame`.
    fn add(&mut self, movie: &StimulusMovie, frame: usize, count: usize, frames_per_bin: usize) {
        let c = count as f64;
        for lag in 0..self.bins {
            let f = &movie.frames[frame - lag * frames_per_bin];
            let dst = &mut self.sum[lag * self.pixels..(lag + 1) * self.pixels];
            for (d, v) in dst.iter_mut().zip(f) {
                *d += c * v;
            }
        }
        self.n_spikes += count;
    }

    pub fn merge(&mut self, other: &StaAccumulator) {
        assert_eq!((self.bins, self.pixels), (other.bins, other.pixels));
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.n_spikes += other.n_spikes;
    }

    pub fn n_spikes(&self) -> usize {
        self.n_spikes
    }

    /// `(1/n_s) sum y_i x_i`, laid out lag-major.
    pub fn estimate(&self) -> Vec<f64> {
        let n = self.n_spikes as f64;
        self.sum.iter().map(|s| s / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaResult {
    pub width: usize,
    pub height: usize,
    pub lags_ms: Vec<f64>,
    /// Full estimate, lag-major: `sta[lag * pixels + pixel]`.
    pub sta: Vec<f64>,
    /// Probe-pixel lag profile, normalized to peak magnitude 1.
    pub temporal_filter: Vec<f64>,
    pub temporal_raw: Vec<f64>,
    pub selected_lag_ms: f64,
    pub selected_lag_index: usize,
    /// All pixels at the selected lag.
    pub spatial_map: Vec<f64>,
    pub n_spikes: usize,
}

/// Accumulates the STA of `movie` over `events` (ms), with the probe pixel
/// defining the temporal filter and the lag of the spatial map.
pub fn accumulate_sta(
    movie: &StimulusMovie,
    events: &[f64],
    window: &StaWindow,
) -> Result<StaAccumulator> {
    let fpb = window.frames_per_bin(movie.frame_dt)?;
    let history = (window.bins - 1) * fpb;
    if history >= movie.len() {
        return Err(Error::InvalidParams(format!(
            "STA window of {} ms exceeds the {} ms recording",
            window.window,
            movie.duration()
        )));
    }
    // y_i: events per stimulus bin
    let mut counts = vec![0usize; movie.len()];
    for &t in events {
        if !(t >= 0.0) || t >= movie.duration() {
            return Err(Error::InvalidParams(format!(
                "event at {t} ms lies outside the {} ms recording",
                movie.duration()
            )));
        }
        counts[(t / movie.frame_dt).floor() as usize] += 1;
    }
    let mut acc = StaAccumulator::new(window.bins, movie.pixels());
    for (frame, &c) in counts.iter().enumerate().skip(history) {
        if c > 0 {
            acc.add(movie, frame, c, fpb);
        }
    }
    Ok(acc)
}

pub fn compute_sta(
    movie: &StimulusMovie,
    events: &[f64],
    probe: usize,
    window: &StaWindow,
) -> Result<StaResult> {
    if events.is_empty() {
        return Err(Error::NoSpikelets);
    }
    if probe >= movie.pixels() {
        return Err(Error::InvalidParams(format!("probe pixel {probe} out of range")));
    }
    let acc = accumulate_sta(movie, events, window)?;
    finish_sta(movie.width, movie.height, &acc, probe, window)
}

/// Turns an accumulator into the temporal filter and spatial map.
pub fn finish_sta(
    width: usize,
    height: usize,
    acc: &StaAccumulator,
    probe: usize,
    window: &StaWindow,
) -> Result<StaResult> {
    if acc.n_spikes() == 0 {
        return Err(Error::NoSpikelets);
    }
    let p = width * height;
    let sta = acc.estimate();
    let temporal_raw: Vec<f64> = (0..window.bins).map(|l| sta[l * p + probe]).collect();
    let (sel, peak) = temporal_raw
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
            if v.abs() > bv.abs() {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let norm = peak.abs();
    let temporal_filter = temporal_raw
        .iter()
        .map(|v| if norm > 0.0 { v / norm } else { 0.0 })
        .collect();
    let lags_ms = window.lags_ms();
    Ok(StaResult {
        width,
        height,
        selected_lag_ms: lags_ms[sel],
        selected_lag_index: sel,
        spatial_map: sta[sel * p..(sel + 1) * p].to_vec(),
        lags_ms,
        sta,
        temporal_filter,
        temporal_raw,
        n_spikes: acc.n_spikes(),
    })
}

/// Isotropic Gaussian `A exp(-r^2 / 2 sigma^2)` fitted to a map by least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub sigma: f64,
    pub amplitude: f64,
    pub center: (usize, usize),
    /// Residual sum of squares relative to the map's sum of squares.
    pub residual: f64,
    /// The fitted width is below the pixel pitch and poorly constrained.
    pub sub_pixel: bool,
}

pub const SUB_PIXEL_SIGMA: f64 = 0.3;

impl GaussianFit {
    pub fn sample(&self, width: usize, height: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                out.push(self.amplitude * gauss_at(x, y, self.center, self.sigma));
            }
        }
        out
    }
}

fn gauss_at(x: usize, y: usize, c: (usize, usize), sigma: f64) -> f64 {
    let dx = x as f64 - c.0 as f64;
    let dy = y as f64 - c.1 as f64;
    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
}

/// Least-squares isotropic Gaussian centred on the map's extremum.
pub fn fit_gaussian_to_map(map: &[f64], width: usize, height: usize) -> Result<GaussianFit> {
    if map.len() != width * height || map.is_empty() {
        return Err(Error::InvalidParams("map size does not match dimensions".into()));
    }
    let (ci, cv) = map
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
            if v.abs() > bv.abs() {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let (lo, hi) = map
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if cv == 0.0 || hi - lo <= 1e-15 * cv.abs() {
        return Err(Error::Degenerate("flat map".into()));
    }
    let center = (ci % width, ci / width);
    let ss: f64 = map.iter().map(|v| v * v).sum();
    // For fixed sigma the amplitude is linear; profile it out.
    let rss = |sigma: f64| -> (f64, f64) {
        let (mut mg, mut gg) = (0.0, 0.0);
        for y in 0..height {
            for x in 0..width {
                let g = gauss_at(x, y, center, sigma);
                mg += map[y * width + x] * g;
                gg += g * g;
            }
        }
        (ss - mg * mg / gg, mg / gg)
    };
    let (lmin, lmax) = (0.05f64.ln(), (width.max(height) as f64).ln());
    let coarse = 200;
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..=coarse {
        let s = (lmin + (lmax - lmin) * i as f64 / coarse as f64).exp();
        let r = rss(s).0;
        if r < best.0 {
            best = (r, i);
        }
    }
    let step = (lmax - lmin) / coarse as f64;
    let (mut a, mut b) = (
        lmin + step * (best.1 as f64 - 1.0).max(0.0),
        lmin + step * (best.1 as f64 + 1.0).min(coarse as f64),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if rss(c.exp()).0 <= rss(d.exp()).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let sigma = (0.5 * (a + b)).exp();
    let (r, amplitude) = rss(sigma);
    Ok(GaussianFit {
        sigma,
        amplitude,
        center,
        residual: (r / ss).max(0.0),
        sub_pixel: sigma < SUB_PIXEL_SIGMA,
    })
}

/// End-to-end STA of the centre cell of a grid driven by a stimulus movie.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStaConfig {
    pub width: usize,
    pub height: usize,
    pub family: StimulusFamily,
    pub n_frames: usize,
    pub frame_dt: f64,
    /// Stimulus standard deviation (pA).
    pub stimulus_std: f64,
    pub seed: u64,
    pub window: StaWindow,
    pub spikelets: SpikeletConfig,
    /// Whiten non-Gaussian stimuli before driving the grid.
    pub whiten: bool,
}

impl Default for GridStaConfig {
    fn default() -> Self {
        GridStaConfig {
            width: 10,
            height: 10,
            family: StimulusFamily::GaussianWhite,
            n_frames: 40_000,
            frame_dt: 5.0,
            stimulus_std: 10.0,
            seed: 1,
            window: StaWindow {
                window: 200.0,
                bins: 40,
            },
            spikelets: SpikeletConfig::default(),
            whiten: true,
        }
    }
}

impl fmt::Display for StimulusFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StimulusFamily::GaussianWhite => "gaussian_white",
            StimulusFamily::LaplacianWhite => "laplacian_white",
            StimulusFamily::NaturalPatches => "natural_patches",
        })
    }
}

impl FromStr for StimulusFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian_white" | "gaussian" => Ok(StimulusFamily::GaussianWhite),
            "laplacian_white" | "laplacian" => Ok(StimulusFamily::LaplacianWhite),
            "natural_patches" | "natural" => Ok(StimulusFamily::NaturalPatches),
            other => Err(Error::Config(format!("unknown stimulus family '{other}'"))),
        }
    }
}

impl GridStaConfig {
    /// Consumes the STA keys of a config, defaulting the rest.
    pub fn from_args(args: &mut Args) -> Result<Self> {
        let d = GridStaConfig::default();
        let cfg = GridStaConfig {
            width: args.take_or("width", d.width)?,
            height: args.take_or("height", d.height)?,
            family: args.take_or("family", d.family)?,
            n_frames: args.take_or("frames", d.n_frames)?,
            frame_dt: args.take_or("frame_dt", d.frame_dt)?,
            stimulus_std: args.take_or("stimulus_std", d.stimulus_std)?,
            seed: args.take_or("seed", d.seed)?,
            window: StaWindow {
                window: args.take_or("window", d.window.window)?,
                bins: args.take_or("bins", d.window.bins)?,
            },
            spikelets: SpikeletConfig {
                prominence: args.take_or("prominence", d.spikelets.prominence)?,
                refractory: args.take_or("refractory", d.spikelets.refractory)?,
                base_window: args.take_or("base_window", d.spikelets.base_window)?,
            },
            whiten: args.take_or("whiten", d.whiten)?,
        };
        if cfg.width == 0 || cfg.height == 0 || cfg.n_frames == 0 {
            return Err(Error::Config("width, height and frames must be positive".into()));
        }
        if !(cfg.stimulus_std >= 0.0) || !(cfg.frame_dt > 0.0) {
            return Err(Error::Config("stimulus_std must be >= 0 and frame_dt > 0".into()));
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "width = {}\nheight = {}\nfamily = {}\nframes = {}\nframe_dt = {}\nstimulus_std = {}\n\
             seed = {}\nwindow = {}\nbins = {}\nprominence = {}\nrefractory = {}\nbase_window = {}\nwhiten = {}\n",
            self.width,
            self.height,
            self.family,
            self.n_frames,
            self.frame_dt,
            self.stimulus_std,
            self.seed,
            self.window.window,
            self.window.bins,
            self.spikelets.prominence,
            self.spikelets.refractory,
            self.spikelets.base_window,
            self.whiten
        )
    }
}

impl StaResult {
    pub fn temporal_csv(&self) -> String {
        let mut s = String::from("lag_ms,weight,raw\n");
        for ((l, w), r) in self.lags_ms.iter().zip(&self.temporal_filter).zip(&self.temporal_raw) {
            s.push_str(&format!("{l},{w},{r}\n"));
        }
        s
    }

    /// Spatial map as a `width x height` grid of comma-separated rows.
    pub fn spatial_csv(&self) -> String {
        let mut s = String::new();
        for row in self.spatial_map.chunks(self.width) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Min-max normalized spatial map for viewing.
    pub fn heatmap(&self) -> Image {
        normalize_min_max(self.width, self.height, &self.spatial_map)
            .unwrap_or_else(|| Image::filled(self.width, self.height, 0.5).expect("valid size"))
    }
}

/// Synthesizes the stimulus, drives the grid, detects spikelets on the centre
/// cell and returns its STA.
pub fn grid_sta(
    params: &NetworkParams,
    cfg: &GridStaConfig,
    natural_source: &[Image],
) -> Result<StaResult> {
    let movie = match cfg.family {
        StimulusFamily::GaussianWhite => gaussian_white(
            cfg.width,
            cfg.height,
            cfg.n_frames,
            cfg.frame_dt,
            cfg.stimulus_std,
            cfg.seed,
        ),
        StimulusFamily::LaplacianWhite => laplacian_white(
            cfg.width,
            cfg.height,
            cfg.n_frames,
            cfg.frame_dt,
            cfg.stimulus_std,
            cfg.seed,
        ),
        StimulusFamily::NaturalPatches => natural_patches(
            natural_source,
            cfg.width,
            cfg.height,
            cfg.n_frames,
            cfg.frame_dt,
            cfg.stimulus_std,
            cfg.seed,
        )?,
    };
    let movie = if cfg.whiten && cfg.family != StimulusFamily::GaussianWhite {
        let mut w = zca_whiten(&movie)?;
        w.rescale(cfg.stimulus_std);
        w
    } else {
        movie
    };
    sta_of_grid(params, &movie, &cfg.window, &cfg.spikelets)
}

/// Drives a grid the size of `movie` and computes the centre cell's STA.
pub fn sta_of_grid(
    params: &NetworkParams,
    movie: &StimulusMovie,
    window: &StaWindow,
    spikelets: &SpikeletConfig,
) -> Result<StaResult> {
    let grid = GridTopology::new(movie.width, movie.height)?;
    let sys = build_system(&grid, params)?;
    let probe = grid.center();
    let traces = simulate_timevarying(&sys, &movie.drive_frames()?, movie.frame_dt, &[probe])?;
    let trace = &traces.voltages[0];
    // the final sample sits at t = duration, outside the last frame
    let events: Vec<f64> = detect_spikelets(&trace[..trace.len() - 1], traces.dt, spikelets);
    if events.is_empty() {
        return Err(Error::NoSpikelets);
    }
    compute_sta(movie, &events, probe, window)
}
