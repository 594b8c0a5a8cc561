//! Classic spatial baselines. All windows use replicate padding at the borders.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kv;

/// Square 2-D weight array of odd side length, indexed by offset from the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || weights.len() != size * size {
            return Err(Error::InvalidParams(format!(
                "kernel needs odd size and size^2 weights, got {size} and {}",
                weights.len()
            )));
        }
        Ok(Kernel { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius() as isize;
        self.weights[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    pub fn center(&self) -> f64 {
        self.at(0, 0)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn transposed(&self) -> Kernel {
        let s = self.size;
        let mut w = vec![0.0; s * s];
        for y in 0..s {
            for x in 0..s {
                w[x * s + y] = self.weights[y * s + x];
            }
        }
        Kernel {
            size: s,
            weights: w,
        }
    }

    pub fn rotated_180(&self) -> Kernel {
        let mut w = self.weights.clone();
        w.reverse();
        Kernel {
            size: self.size,
            weights: w,
        }
    }

    pub fn flipped_horizontal(&self) -> Kernel {
        let s = self.size;
        let mut w = vec![0.0; s * s];
        for y in 0..s {
            for x in 0..s {
                w[y * s + (s - 1 - x)] = self.weights[y * s + x];
            }
        }
        Kernel {
            size: s,
            weights: w,
        }
    }

    /// The eight images of the kernel under the dihedral group of the square.
    pub fn dihedral_images(&self) -> Vec<Kernel> {
        let mut out = Vec::with_capacity(8);
        let mut k = self.clone();
        for _ in 0..4 {
            // rotation by 90 degrees = transpose then horizontal flip
            let r = k.transposed().flipped_horizontal();
            out.push(k.clone());
            out.push(k.flipped_horizontal());
            k = r;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of weights at Chebyshev distance `>= r` from the centre.
    pub fn tail_mass(&self, r: usize) -> f64 {
        let rad = self.radius() as isize;
        let mut s = 0.0;
        for dy in -rad..=rad {
            for dx in -rad..=rad {
                if dx.unsigned_abs().max(dy.unsigned_abs()) >= r {
                    s += self.at(dx, dy);
                }
            }
        }
        s
    }
}

/// Point-sampled isotropic Gaussian, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Kernel> {
    let w1 = gaussian_1d(sigma, ksize)?;
    let mut w = Vec::with_capacity(ksize * ksize);
    for a in &w1 {
        for b in &w1 {
            w.push(a * b);
        }
    }
    Kernel::new(ksize, w)
}

fn gaussian_1d(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    if ksize % 2 == 0 || ksize == 0 {
        return Err(Error::InvalidParams(format!("ksize must be odd, got {ksize}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParams(format!("sigma must be > 0, got {sigma}")));
    }
    let r = (ksize / 2) as isize;
    let mut w: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Ok(w)
}

/// Baseline filters of the benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    /// Box filter, 3x3 by default.
    Average { ksize: usize },
    Gaussian { sigma: f64, ksize: usize },
    /// Box filter, 5x5 by default.
    Mean { ksize: usize },
    Median { ksize: usize },
    AdaptiveMedian { max_ksize: usize },
    Max { ksize: usize },
    Min { ksize: usize },
}

impl FilterKind {
    pub fn average() -> Self {
        FilterKind::Average { ksize: 3 }
    }

    pub fn mean() -> Self {
        FilterKind::Mean { ksize: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        let k = match *self {
            FilterKind::Gaussian { sigma, ksize } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidParams(format!("sigma must be > 0, got {sigma}")));
                }
                ksize
            }
            FilterKind::Average { ksize }
            | FilterKind::Mean { ksize }
            | FilterKind::Median { ksize }
            | FilterKind::Max { ksize }
            | FilterKind::Min { ksize } => ksize,
            FilterKind::AdaptiveMedian { max_ksize } => max_ksize,
        };
        if k < 3 || k % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "kernel size must be odd and >= 3, got {k}"
            )));
        }
        Ok(())
    }

    fn window(&self) -> usize {
        match *self {
            FilterKind::Gaussian { ksize, .. }
            | FilterKind::Average { ksize }
            | FilterKind::Mean { ksize }
            | FilterKind::Median { ksize }
            | FilterKind::Max { ksize }
            | FilterKind::Min { ksize } => ksize,
            FilterKind::AdaptiveMedian { max_ksize } => max_ksize,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Average { .. } => "average",
            FilterKind::Gaussian { .. } => "gaussian",
            FilterKind::Mean { .. } => "mean",
            FilterKind::Median { .. } => "median",
            FilterKind::AdaptiveMedian { .. } => "adaptive_median",
            FilterKind::Max { .. } => "max",
            FilterKind::Min { .. } => "min",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FilterKind::Gaussian { sigma, ksize } => {
                write!(f, "gaussian,sigma={sigma},ksize={ksize}")
            }
            FilterKind::AdaptiveMedian { max_ksize } => {
                write!(f, "adaptive_median,max_ksize={max_ksize}")
            }
            FilterKind::Average { ksize }
            | FilterKind::Mean { ksize }
            | FilterKind::Median { ksize }
            | FilterKind::Max { ksize }
            | FilterKind::Min { ksize } => write!(f, "{},ksize={ksize}", self.name()),
        }
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    /// Parses `name[,key=value...]`, e.g. `gaussian,sigma=2,ksize=9`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, mut args) = kv::parse_tagged(s)?;
        let ksize = |args: &mut kv::Args, default: usize| args.take_or("ksize", default);
        let kind = match name.as_str() {
            "average" => FilterKind::Average {
                ksize: ksize(&mut args, 3)?,
            },
            "mean" => FilterKind::Mean {
                ksize: ksize(&mut args, 5)?,
            },
            "gaussian" => FilterKind::Gaussian {
                sigma: args.take_or("sigma", 2.0)?,
                ksize: ksize(&mut args, 9)?,
            },
            "median" => FilterKind::Median {
                ksize: ksize(&mut args, 3)?,
            },
            "adaptive_median" => FilterKind::AdaptiveMedian {
                max_ksize: args.take_or("max_ksize", 7)?,
            },
            "max" => FilterKind::Max {
                ksize: ksize(&mut args, 3)?,
            },
            "min" => FilterKind::Min {
                ksize: ksize(&mut args, 3)?,
            },
            other => return Err(Error::Config(format!("unknown filter '{other}'"))),
        };
        args.finish()?;
        kind.validate()?;
        Ok(kind)
    }
}

/// Applies `kind` to `img`; output is clamped to `[0, 1]`.
pub fn apply(img: &Image, kind: &FilterKind) -> Result<Image> {
    kind.validate()?;
    let k = kind.window();
    if k > img.width() || k > img.height() {
        return Err(Error::KernelTooLarge {
            ksize: k,
            width: img.width(),
            height: img.height(),
        });
    }
    let data = match *kind {
        FilterKind::Average { ksize } | FilterKind::Mean { ksize } => {
            let w = vec![1.0 / ksize as f64; ksize];
            separable(img, &w)
        }
        FilterKind::Gaussian { sigma, ksize } => separable(img, &gaussian_1d(sigma, ksize)?),
        FilterKind::Median { ksize } => rank_filter(img, ksize, median),
        FilterKind::Max { ksize } => {
            rank_filter(img, ksize, |w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        FilterKind::Min { ksize } => {
            rank_filter(img, ksize, |w| w.iter().copied().fold(f64::INFINITY, f64::min))
        }
        FilterKind::AdaptiveMedian { max_ksize } => adaptive_median(img, max_ksize),
    };
    Image::from_clamped(img.width(), img.height(), data)
}

fn separable(img: &Image, w: &[f64]) -> Vec<f64> {
    let (width, height) = img.dims();
    let r = (w.len() / 2) as isize;
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                s += wk * img.get_clamped(x as isize + k as isize - r, y as isize);
            }
            tmp[y * width + x] = s;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let yy = (y as isize + k as isize - r).clamp(0, height as isize - 1) as usize;
                s += wk * tmp[yy * width + x];
            }
            out[y * width + x] = s;
        }
    }
    out
}

fn window_into(img: &Image, x: usize, y: usize, ksize: usize, buf: &mut Vec<f64>) {
    buf.clear();
    let r = (ksize / 2) as isize;
    for dy in -r..=r {
        for dx in -r..=r {
            buf.push(img.get_clamped(x as isize + dx, y as isize + dy));
        }
    }
}

fn rank_filter(img: &Image, ksize: usize, f: impl Fn(&mut [f64]) -> f64) -> Vec<f64> {
    let (width, height) = img.dims();
    let mut buf = Vec::with_capacity(ksize * ksize);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            window_into(img, x, y, ksize, &mut buf);
            out.push(f(&mut buf));
        }
    }
    out
}

fn median(w: &mut [f64]) -> f64 {
    let mid = w.len() / 2;
    *w.select_nth_unstable_by(mid, f64::total_cmp).1
}

// Two-stage window-growing median: grow until the median is not an impulse,
// then keep the centre pixel unless it is itself an extreme.
fn adaptive_median(img: &Image, max_ksize: usize) -> Vec<f64> {
    let (width, height) = img.dims();
    let mut buf = Vec::with_capacity(max_ksize * max_ksize);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let z = img.get(x, y);
            let mut k = 3;
            let value = loop {
                window_into(img, x, y, k, &mut buf);
                let lo = buf.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let med = median(&mut buf);
                if lo < med && med < hi {
                    break if lo < z && z < hi { z } else { med };
                }
                k += 2;
                if k > max_ksize {
                    break med;
                }
            };
            out.push(value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_kinds() -> Vec<FilterKind> {
        vec![
            FilterKind::average(),
            FilterKind::Gaussian {
                sigma: 1.5,
                ksize: 5,
            },
            FilterKind::mean(),
            FilterKind::Median { ksize: 3 },
            FilterKind::AdaptiveMedian { max_ksize: 7 },
            FilterKind::Max { ksize: 3 },
            FilterKind::Min { ksize: 5 },
        ]
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = Image::filled(9, 8, 0.37).unwrap();
        for kind in all_kinds() {
            let out = apply(&img, &kind).unwrap();
            for v in out.data() {
                assert!((v - 0.37).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn median_removes_isolated_pixel() {
        let img = Image::new(3, 3, vec![0., 0., 0., 0., 1., 0., 0., 0., 0.]).unwrap();
        let out = apply(&img, &FilterKind::Median { ksize: 3 }).unwrap();
        assert_eq!(out.get(1, 1), 0.0);
    }

    #[test]
    fn adaptive_median_removes_salt() {
        let mut d = vec![0.0; 81];
        d[4 * 9 + 4] = 1.0;
        let img = Image::new(9, 9, d).unwrap();
        let out = apply(&img, &FilterKind::AdaptiveMedian { max_ksize: 7 }).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adaptive_median_keeps_non_impulse_detail() {
        // Stage B keeps the centre value when it lies strictly inside the window range.
        let img = Image::from_fn(9, 9, |x, y| ((x + 2 * y) % 9) as f64 / 8.0).unwrap();
        let out = apply(&img, &FilterKind::AdaptiveMedian { max_ksize: 7 }).unwrap();
        let (x, y) = (4, 4);
        let z = img.get(x, y);
        if z > 0.0 && z < 1.0 {
            assert_eq!(out.get(x, y), z);
        }
    }

    #[test]
    fn kernel_too_large() {
        let img = Image::filled(4, 10, 0.5).unwrap();
        assert!(matches!(
            apply(&img, &FilterKind::Median { ksize: 5 }),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn invalid_kernel_sizes_rejected() {
        assert!(FilterKind::Median { ksize: 4 }.validate().is_err());
        assert!(FilterKind::Max { ksize: 1 }.validate().is_err());
        assert!(FilterKind::Gaussian {
            sigma: 0.0,
            ksize: 3
        }
        .validate()
        .is_err());
    }

    #[test]
    fn gaussian_kernel_small_sigma_is_delta() {
        let k = gaussian_kernel(0.1, 3).unwrap();
        assert!(k.center() > 0.999);
    }

    #[test]
    fn gaussian_kernel_symmetry_and_sum() {
        let k = gaussian_kernel(1.3, 7).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        assert!(k.max_abs_diff(&k.transposed()) < 1e-15);
        assert!(k.max_abs_diff(&k.rotated_180()) < 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for kind in all_kinds() {
            let back: FilterKind = kind.to_string().parse().unwrap();
            assert_eq!(back, kind);
        }
        assert_eq!(
            "gaussian".parse::<FilterKind>().unwrap(),
            FilterKind::Gaussian {
                sigma: 2.0,
                ksize: 9
            }
        );
        assert!("median,ksize=4".parse::<FilterKind>().is_err());
        assert!("bilateral".parse::<FilterKind>().is_err());
        assert!("median,radius=3".parse::<FilterKind>().is_err());
    }
}
