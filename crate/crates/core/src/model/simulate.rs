//! Backward-Euler integration of the coupled membrane equation.
//!
//! The state is the deflection `u = v - v_rest`, which obeys
//!
//! ```text
//! c_m du/dt = -g_leak u - g_gap L u - J(t)
//! ```
//!
//! where `L` is the grid graph Laplacian and `J(t)` the light-driven part of
//! the photocurrent. Each frame of drive `g` launches the waveform `g K(t - t0)`
//! at its onset `t0`; a single frame at `t = 0` is the classic flash response.

use super::FactorizedSystem;
use crate::error::{Error, Result};

/// Per-cell photocurrent amplitudes (pA).
#[derive(Debug, Clone, PartialEq)]
pub struct DriveField(Vec<f64>);

impl DriveField {
    /// Light-driven amplitudes; must be finite and non-negative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParams(format!(
                "drive amplitude {v} is not a finite non-negative current"
            )));
        }
        Ok(DriveField(values))
    }

    /// Signed modulation around a background level. The model is linear, so
    /// a contrast movie can be simulated without its (deterministic) background.
    pub fn modulation(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite drive modulation".into()));
        }
        Ok(DriveField(values))
    }

    pub fn zeros(n: usize) -> Self {
        DriveField(vec![0.0; n])
    }

    pub fn uniform(n: usize, g_max: f64) -> Result<Self> {
        DriveField::new(vec![g_max; n])
    }

    /// Drives a single cell.
    pub fn impulse(n: usize, cell: usize, g_max: f64) -> Result<Self> {
        let mut v = vec![0.0; n];
        v[cell] = g_max;
        DriveField::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Voltage traces (mV, absolute) for a set of cells, sampled every `dt`
/// starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub cells: Vec<usize>,
    pub dt: f64,
    pub voltages: Vec<Vec<f64>>,
}

impl Traces {
    pub fn trace(&self, cell: usize) -> Option<&[f64]> {
        self.cells
            .iter()
            .position(|&c| c == cell)
            .map(|k| self.voltages[k].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// `max_t |v(t) - v_rest|` per cell (mV).
    pub peak_deflection: Vec<f64>,
    pub traces: Option<Traces>,
}

/// Integrates a single flash of `drive` over `[0, t_end]`.
pub fn simulate(system: &FactorizedSystem, drive: &DriveField) -> Result<SimResult> {
    run(system, std::slice::from_ref(drive), system.params().steps(), None)
}

/// As [`simulate`], additionally recording traces at `cells`.
pub fn simulate_traced(
    system: &FactorizedSystem,
    drive: &DriveField,
    cells: &[usize],
) -> Result<SimResult> {
    run(
        system,
        std::slice::from_ref(drive),
        system.params().steps(),
        Some(cells),
    )
}

/// Drives the grid with a movie of frames, one every `frame_dt` ms, and
/// records traces at `record`. Runs for `frames.len() * frame_dt` ms.
pub fn simulate_timevarying(
    system: &FactorizedSystem,
    frames: &[DriveField],
    frame_dt: f64,
    record: &[usize],
) -> Result<Traces> {
    let dt = system.params().dt;
    let ratio = frame_dt / dt;
    let steps_per_frame = ratio.round();
    if !(steps_per_frame >= 1.0) || (ratio - steps_per_frame).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "frame_dt ({frame_dt} ms) must be a positive integer multiple of dt ({dt} ms)"
        )));
    }
    let spf = steps_per_frame as usize;
    let res = run_frames(system, frames, spf, frames.len() * spf, Some(record))?;
    Ok(res.traces.expect("recording requested"))
}

fn run(
    system: &FactorizedSystem,
    frames: &[DriveField],
    steps: usize,
    record: Option<&[usize]>,
) -> Result<SimResult> {
    run_frames(system, frames, steps.max(1), steps, record)
}

fn run_frames(
    system: &FactorizedSystem,
    frames: &[DriveField],
    steps_per_frame: usize,
    steps: usize,
    record: Option<&[usize]>,
) -> Result<SimResult> {
    let n = system.topology().len();
    for f in frames {
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (n, 1),
                got: (f.len(), 1),
            });
        }
    }
    if let Some(cells) = record {
        if let Some(&c) = cells.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidParams(format!(
                "recorded cell {c} outside grid of {n} cells"
            )));
        }
    }
    let p = system.params();
    let kernel = system.kernel();
    let to_int = system.to_internal();
    let to_ext = system.to_external();
    let chol = system.chol();

    let decay1 = (-p.dt / kernel.tau1()).exp();
    let decay2 = (-p.dt / kernel.tau2()).exp();
    let cap = p.c_m / p.dt;
    let scale = kernel.scale();

    // Exponential states of the summed waveform, internal order.
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut peak = vec![0.0f64; n];

    let rec_int: Vec<usize> = record
        .map(|c| c.iter().map(|&e| to_int[e]).collect())
        .unwrap_or_default();
    let mut voltages: Vec<Vec<f64>> = rec_int
        .iter()
        .map(|_| {
            let mut v = Vec::with_capacity(steps + 1);
            v.push(p.v_rest());
            v
        })
        .collect();

    let add_frame = |e1: &mut [f64], e2: &mut [f64], frame: &DriveField| {
        for (ext, &g) in frame.values().iter().enumerate() {
            let i = to_int[ext];
            e1[i] += g;
            e2[i] += g;
        }
    };
    if let Some(f) = frames.first() {
        add_frame(&mut e1, &mut e2, f);
    }

    for step in 1..=steps {
        for i in 0..n {
            e1[i] *= decay1;
            e2[i] *= decay2;
        }
        if step % steps_per_frame == 0 {
            if let Some(f) = frames.get(step / steps_per_frame) {
                add_frame(&mut e1, &mut e2, f);
            }
        }
        for i in 0..n {
            u[i] = cap * u[i] - scale * (e1[i] - e2[i]);
        }
        chol.solve_in_place(&mut u);
        let mut finite = true;
        for (pk, &ui) in peak.iter_mut().zip(&u) {
            finite &= ui.is_finite();
            *pk = pk.max(ui.abs());
        }
        if !finite {
            return Err(Error::NonFinite { step });
        }
        for (k, &i) in rec_int.iter().enumerate() {
            voltages[k].push(p.v_rest() + u[i]);
        }
    }

    let mut peak_deflection = vec![0.0; n];
    for (i, &e) in to_ext.iter().enumerate() {
        peak_deflection[e] = peak[i];
    }
    Ok(SimResult {
        peak_deflection,
        traces: record.map(|cells| Traces {
            cells: cells.to_vec(),
            dt: p.dt,
            voltages,
        }),
    })
}
