#![allow(dead_code)]

use std::path::PathBuf;

use prfilter::model::{GridTopology, NetworkParams};
use prfilter::Image;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/natural")
}

pub fn natural_images() -> Vec<(String, Image)> {
    let mut paths = prfilter::io::list_images(&fixture_dir()).unwrap();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, prfilter::io::read_image(&p).unwrap())
        })
        .collect()
}

/// Reference integrator: classical RK4 on the deflection equation with the
/// photocurrent evaluated straight from its closed form.
pub struct Rk4 {
    pub params: NetworkParams,
    pub neighbors: Vec<Vec<usize>>,
}

impl Rk4 {
    pub fn new(w: usize, h: usize, params: NetworkParams) -> Self {
        let mut neighbors = vec![Vec::new(); w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x > 0 {
                    neighbors[i].push(i - 1);
                }
                if x + 1 < w {
                    neighbors[i].push(i + 1);
                }
                if y > 0 {
                    neighbors[i].push(i - w);
                }
                if y + 1 < h {
                    neighbors[i].push(i + w);
                }
            }
        }
        let _ = GridTopology::new(w, h).unwrap();
        Rk4 { params, neighbors }
    }

    pub fn kernel(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (a, b) = (self.params.tau1, self.params.tau2);
        let raw = |t: f64| (-t / a).exp() - (-t / b).exp();
        let t_star = a * b / (a - b) * (a / b).ln();
        raw(t) / raw(t_star)
    }

    fn current(&self, frames: &[Vec<f64>], frame_dt: f64, t: f64) -> Vec<f64> {
        let n = self.neighbors.len();
        let mut j = vec![0.0; n];
        for (f, g) in frames.iter().enumerate() {
            let t0 = f as f64 * frame_dt;
            if t0 > t {
                break;
            }
            let k = self.kernel(t - t0);
            for i in 0..n {
                j[i] += g[i] * k;
            }
        }
        j
    }

    fn deriv(&self, u: &[f64], j: &[f64]) -> Vec<f64> {
        let p = &self.params;
        (0..u.len())
            .map(|i| {
                let gap: f64 = self.neighbors[i].iter().map(|&k| u[i] - u[k]).sum();
                (-p.g_leak * u[i] - p.g_gap * gap - j[i]) / p.c_m
            })
            .collect()
    }

    /// Deflection traces sampled every `sample` ms over `[0, t_end]`.
    pub fn run(&self, frames: &[Vec<f64>], frame_dt: f64, h: f64, t_end: f64, sample: f64) -> Vec<Vec<f64>> {
        let n = self.neighbors.len();
        let steps = (t_end / h).round() as usize;
        let every = (sample / h).round() as usize;
        let mut u = vec![0.0; n];
        let mut out = vec![u.clone()];
        for s in 0..steps {
            let t = s as f64 * h;
            let j0 = self.current(frames, frame_dt, t);
            let jm = self.current(frames, frame_dt, t + h / 2.0);
            let j1 = self.current(frames, frame_dt, t + h);
            let k1 = self.deriv(&u, &j0);
            let u2: Vec<f64> = (0..n).map(|i| u[i] + h / 2.0 * k1[i]).collect();
            let k2 = self.deriv(&u2, &jm);
            let u3: Vec<f64> = (0..n).map(|i| u[i] + h / 2.0 * k2[i]).collect();
            let k3 = self.deriv(&u3, &jm);
            let u4: Vec<f64> = (0..n).map(|i| u[i] + h * k3[i]).collect();
            let k4 = self.deriv(&u4, &j1);
            for i in 0..n {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if (s + 1) % every == 0 {
                out.push(u.clone());
            }
        }
        out
    }

    pub fn flash_peaks(&self, drive: &[f64], h: f64) -> Vec<f64> {
        let traces = self.run(&[drive.to_vec()], 1.0, h, self.params.t_end, h);
        let mut peak = vec![0.0f64; drive.len()];
        for u in &traces {
            for (p, v) in peak.iter_mut().zip(u) {
                *p = p.max(v.abs());
            }
        }
        peak
    }
}

pub fn naive_psnr(a: &[f64], b: &[f64]) -> f64 {
    let mut mse = 0.0;
    for i in 0..a.len() {
        mse += (a[i] - b[i]).powi(2);
    }
    mse /= a.len() as f64;
    10.0 * (1.0 / mse).log10()
}

/// Direct 2-D window sums, no separable passes.
pub fn naive_ssim(a: &Image, b: &Image) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut win = [[0.0f64; 11]; 11];
    let mut s = 0.0;
    for (dy, row) in win.iter_mut().enumerate() {
        for (dx, v) in row.iter_mut().enumerate() {
            let r2 = (dx as f64 - 5.0).powi(2) + (dy as f64 - 5.0).powi(2);
            *v = (-r2 / (2.0 * 1.5 * 1.5)).exp();
            s += *v;
        }
    }
    let c1 = 0.01f64.powi(2);
    let c2 = 0.03f64.powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let wt = win[dy][dx] / s;
                    let p = a.get(x0 + dx, y0 + dy);
                    let q = b.get(x0 + dx, y0 + dy);
                    mx += wt * p;
                    my += wt * q;
                    sxx += wt * p * p;
                    syy += wt * q * q;
                    sxy += wt * p * q;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            total += (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Linear-threshold cell: filters the movie with `kernel` (lag-major, lag 0
/// first) and fires one event in every frame whose drive exceeds `threshold`.
pub struct LnCell {
    pub kernel: Vec<f64>,
    pub bins: usize,
    pub threshold: f64,
}

impl LnCell {
    /// Separable kernel: Gaussian blob of width `sigma` around `(cx, cy)` times
    /// a biphasic temporal profile over `bins` lags.
    pub fn blob(w: usize, h: usize, cx: usize, cy: usize, sigma: f64, bins: usize) -> Self {
        let temporal: Vec<f64> = (0..bins)
            .map(|l| {
                let t = l as f64 / bins as f64;
                (1.0 - 2.5 * t) * (-3.0 * t).exp()
            })
            .collect();
        let mut kernel = Vec::with_capacity(bins * w * h);
        for tl in &temporal {
            for y in 0..h {
                for x in 0..w {
                    let r2 = (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2);
                    kernel.push(tl * (-r2 / (2.0 * sigma * sigma)).exp());
                }
            }
        }
        LnCell { kernel, bins, threshold: 1.0 }
    }

    pub fn drive(&self, frames: &[Vec<f64>], t: usize) -> f64 {
        let p = frames[0].len();
        let mut s = 0.0;
        for lag in 0..self.bins.min(t + 1) {
            let f = &frames[t - lag];
            s += self.kernel[lag * p..(lag + 1) * p].iter().zip(f).map(|(k, v)| k * v).sum::<f64>();
        }
        s
    }

    /// Event times (ms), placed mid-frame. `threshold` is in units of the
    /// drive's standard deviation under unit white input.
    pub fn events(&self, frames: &[Vec<f64>], frame_dt: f64, input_std: f64) -> Vec<f64> {
        let norm = self.kernel.iter().map(|k| k * k).sum::<f64>().sqrt() * input_std;
        (0..frames.len())
            .filter(|&t| self.drive(frames, t) > self.threshold * norm)
            .map(|t| (t as f64 + 0.5) * frame_dt)
            .collect()
    }
}
