//! PSNR and SSIM on float images (peak value 1).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `10 log10(1 / MSE)`; `+inf` for identical images.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_dims(test)?;
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

fn ssim_window_1d() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, L = 1).
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_dims(test)?;
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidImage(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let win = ssim_window_1d();
    let x = reference.data();
    let y = test.data();
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;

    // Horizontal pass over the five moment images, then vertical.
    let mut rows = vec![[0.0f64; 5]; ow * h];
    for r in 0..h {
        for c in 0..ow {
            let mut acc = [0.0; 5];
            for (k, wk) in win.iter().enumerate() {
                let a = x[r * w + c + k];
                let b = y[r * w + c + k];
                acc[0] += wk * a;
                acc[1] += wk * b;
                acc[2] += wk * a * a;
                acc[3] += wk * b * b;
                acc[4] += wk * a * b;
            }
            rows[r * ow + c] = acc;
        }
    }
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let mut total = 0.0;
    for r in 0..oh {
        for c in 0..ow {
            let mut m = [0.0; 5];
            for (k, wk) in win.iter().enumerate() {
                let row = &rows[(r + k) * ow + c];
                for q in 0..5 {
                    m[q] += wk * row[q];
                }
            }
            let (mx, my) = (m[0], m[1]);
            let vx = m[2] - mx * mx;
            let vy = m[3] - my * my;
            let cov = m[4] - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(total / (ow * oh) as f64)
}

/// Whether metrics are computed on the float data or after 8-bit quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricMode {
    Float,
    Quantized8,
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Float => "float",
            MetricMode::Quantized8 => "8bit",
        })
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "float" => Ok(MetricMode::Float),
            "8bit" | "8-bit" | "u8" => Ok(MetricMode::Quantized8),
            other => Err(Error::Config(format!("unknown metric mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
}

pub fn evaluate(reference: &Image, test: &Image, mode: MetricMode) -> Result<MetricReport> {
    match mode {
        MetricMode::Float => Ok(MetricReport {
            psnr: psnr(reference, test)?,
            ssim: ssim(reference, test)?,
        }),
        MetricMode::Quantized8 => {
            let (r, t) = (reference.quantized_8bit(), test.quantized_8bit());
            Ok(MetricReport {
                psnr: psnr(&r, &t)?,
                ssim: ssim(&r, &t)?,
            })
        }
    }
}
