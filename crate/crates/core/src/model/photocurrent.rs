//! Double-exponential photocurrent waveform.

use super::NetworkParams;
use crate::error::{Error, Result};

/// Normalized double exponential with unit peak.
///
/// `K(t) = tau2 (e^{-t/tau1} - e^{-t/tau2}) / ((tau1 - tau2) (tau2/tau1)^{tau1/(tau1-tau2)})`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotoKernel {
    tau1: f64,
    tau2: f64,
    scale: f64,
}

impl PhotoKernel {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau1 > 0.0 && tau2 > 0.0) || !tau1.is_finite() || !tau2.is_finite() {
            return Err(Error::InvalidParams("time constants must be positive".into()));
        }
        if tau1 == tau2 {
            return Err(Error::InvalidParams(
                "tau1 == tau2 makes the photocurrent normalization singular".into(),
            ));
        }
        let denom = (tau1 - tau2) * (tau2 / tau1).powf(tau1 / (tau1 - tau2));
        Ok(PhotoKernel {
            tau1,
            tau2,
            scale: tau2 / denom,
        })
    }

    pub fn from_params(params: &NetworkParams) -> Result<Self> {
        PhotoKernel::new(params.tau1, params.tau2)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.scale * ((-t / self.tau1).exp() - (-t / self.tau2).exp())
    }

    /// Time of the unit peak, `tau1 tau2 / (tau1 - tau2) ln(tau1 / tau2)`.
    pub fn peak_time(&self) -> f64 {
        self.tau1 * self.tau2 / (self.tau1 - self.tau2) * (self.tau1 / self.tau2).ln()
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// Amplitude multiplying the difference of exponentials.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Photocurrent `i_dark - g_max K(t)` in pA.
pub fn photocurrent(t: f64, params: &NetworkParams, g_max: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("negative time {t}")));
    }
    let kernel = PhotoKernel::from_params(params)?;
    Ok(params.i_dark - g_max * kernel.eval(t))
}
