//! Deterministic synthetic grayscale scenes for tests, examples and desk-scale
//! benchmarks: piecewise-smooth regions with soft edges, a few textured
//! patches and light grain.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::image::Image;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        angle: f64,
    },
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
}

impl Shape {
    // Signed distance-ish coverage in [0, 1] with a soft edge of ~1 px.
    fn coverage(&self, x: f64, y: f64) -> f64 {
        let d = match *self {
            Shape::Ellipse {
                cx,
                cy,
                rx,
                ry,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
                let r = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt();
                (r - 1.0) * rx.min(ry)
            }
            Shape::Rect { x0, y0, x1, y1 } => {
                let dx = (x0 - x).max(x - x1);
                let dy = (y0 - y).max(y - y1);
                dx.max(dy)
            }
        };
        (0.5 - d).clamp(0.0, 1.0)
    }
}

/// The `index`-th synthetic scene. Same arguments, same pixels.
pub fn synthetic_image(index: usize, width: usize, height: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
    let (w, h) = (width as f64, height as f64);

    let g_angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let g_lo: f64 = rng.random_range(0.1..0.5);
    let g_hi: f64 = rng.random_range(0.5..0.9);

    let n_shapes = rng.random_range(3..8);
    let mut layers = Vec::with_capacity(n_shapes);
    for _ in 0..n_shapes {
        let shape = if rng.random_bool(0.5) {
            Shape::Ellipse {
                cx: rng.random_range(0.0..w),
                cy: rng.random_range(0.0..h),
                rx: rng.random_range(0.08..0.3) * w,
                ry: rng.random_range(0.08..0.3) * h,
                angle: rng.random_range(0.0..std::f64::consts::PI),
            }
        } else {
            let x0 = rng.random_range(0.0..0.8) * w;
            let y0 = rng.random_range(0.0..0.8) * h;
            Shape::Rect {
                x0,
                y0,
                x1: x0 + rng.random_range(0.1..0.4) * w,
                y1: y0 + rng.random_range(0.1..0.4) * h,
            }
        };
        let level: f64 = rng.random_range(0.05..0.95);
        // Optional oriented stripe texture inside the shape.
        let texture = if rng.random_bool(0.4) {
            Some((
                rng.random_range(0.05..0.15),
                rng.random_range(0.2..0.9),
                rng.random_range(0.0..std::f64::consts::PI),
            ))
        } else {
            None
        };
        layers.push((shape, level, texture));
    }
    let grain = 0.01;

    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = ((xf / w - 0.5) * g_angle.cos() + (yf / h - 0.5) * g_angle.sin() + 0.71) / 1.42;
            let mut v = g_lo + (g_hi - g_lo) * t;
            for (shape, level, texture) in &layers {
                let a = shape.coverage(xf, yf);
                if a > 0.0 {
                    let mut l = *level;
                    if let Some((amp, freq, theta)) = texture {
                        l += amp * (freq * (xf * theta.cos() + yf * theta.sin())).sin();
                    }
                    v = (1.0 - a) * v + a * l;
                }
            }
            let n: f64 = rng.sample(StandardNormal);
            data.push((v + grain * n).clamp(0.0, 1.0));
        }
    }
    Image::new(width, height, data).expect("values clamped into range")
}

/// `count` named scenes, `synthetic_00` upward.
pub fn synthetic_corpus(count: usize, width: usize, height: usize) -> Vec<(String, Image)> {
    (0..count)
        .map(|i| (format!("synthetic_{i:02}"), synthetic_image(i, width, height)))
        .collect()
}

/// Writes the corpus as 8-bit PNGs into `dir` and returns the paths.
pub fn write_corpus(dir: &Path, count: usize, width: usize, height: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    synthetic_corpus(count, width, height)
        .into_iter()
        .map(|(name, img)| {
            let p = dir.join(format!("{name}.png"));
            crate::io::write_png(&p, &img)?;
            Ok(p)
        })
        .collect()
}
