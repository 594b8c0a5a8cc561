use crate::error::{Error, Result};

/// Physical constants of the reduced photoreceptor grid.
///
/// Units: pF, nS, mV, pA, ms. With these units `nS * mV = pA` and
/// `pF * mV / ms = pA`, so no conversion factors appear in the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Membrane capacitance (pF).
    pub c_m: f64,
    /// Leak conductance (nS).
    pub g_leak: f64,
    /// Leak reversal potential (mV).
    pub e_leak: f64,
    /// Gap-junction conductance between grid neighbours (nS).
    pub g_gap: f64,
    /// Standing dark current (pA).
    pub i_dark: f64,
    /// Photocurrent time constants (ms). Must differ.
    pub tau1: f64,
    pub tau2: f64,
    /// Integration step (ms).
    pub dt: f64,
    /// Simulated duration of a single flash response (ms).
    pub t_end: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            c_m: 20.0,
            g_leak: 1.0,
            e_leak: -70.0,
            g_gap: 10.0,
            i_dark: 40.0,
            tau1: 64.0,
            tau2: 68.0,
            dt: 1.0,
            t_end: 300.0,
        }
    }
}

impl NetworkParams {
    pub fn with_g_gap(mut self, g_gap: f64) -> Self {
        self.g_gap = g_gap;
        self
    }

    /// Checks hard constraints and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let finite = [
            self.c_m,
            self.g_leak,
            self.e_leak,
            self.g_gap,
            self.i_dark,
            self.tau1,
            self.tau2,
            self.dt,
            self.t_end,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite network parameter".into()));
        }
        if self.c_m <= 0.0 {
            return Err(Error::InvalidParams(format!("c_m must be > 0, got {}", self.c_m)));
        }
        if self.g_leak <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "g_leak must be > 0, got {}",
                self.g_leak
            )));
        }
        if self.g_gap < 0.0 {
            return Err(Error::InvalidParams(format!(
                "g_gap must be >= 0, got {}",
                self.g_gap
            )));
        }
        if self.dt <= 0.0 {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.t_end < self.dt {
            return Err(Error::InvalidParams(format!(
                "t_end ({}) shorter than one step ({})",
                self.t_end, self.dt
            )));
        }
        if self.tau1 <= 0.0 || self.tau2 <= 0.0 {
            return Err(Error::InvalidParams("time constants must be > 0".into()));
        }
        if self.tau1 == self.tau2 {
            return Err(Error::InvalidParams(
                "tau1 == tau2 makes the photocurrent normalization singular".into(),
            ));
        }
        let mut warnings = Vec::new();
        let slowest = self.tau1.max(self.tau2);
        if self.t_end < 5.0 * slowest {
            warnings.push(format!(
                "t_end = {} ms is shorter than 5 x max(tau1, tau2) = {} ms; the response may be truncated",
                self.t_end,
                5.0 * slowest
            ));
        }
        Ok(warnings)
    }

    /// Resting potential under the standing dark current.
    pub fn v_rest(&self) -> f64 {
        self.e_leak + self.i_dark / self.g_leak
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}
