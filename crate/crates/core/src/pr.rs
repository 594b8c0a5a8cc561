//! The photoreceptor filter: pixels drive the coupled grid, normalized peak
//! deflections form the output image.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::filters::Kernel;
use crate::image::{normalize_min_max, Image};
use crate::model::{build_system, simulate, DriveField, FactorizedSystem, GridTopology, NetworkParams};

/// Reusable filter that caches one factorized grid per image size.
#[derive(Debug)]
pub struct PrFilter {
    params: NetworkParams,
    systems: Mutex<HashMap<(usize, usize), Arc<FactorizedSystem>>>,
}

impl PrFilter {
    pub fn new(params: NetworkParams) -> Result<Self> {
        params.validate()?;
        Ok(PrFilter {
            params,
            systems: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    fn system(&self, width: usize, height: usize) -> Result<Arc<FactorizedSystem>> {
        if let Some(s) = self.systems.lock().unwrap().get(&(width, height)) {
            return Ok(Arc::clone(s));
        }
        // Factorize outside the lock; a concurrent duplicate is harmless.
        let sys = Arc::new(build_system(
            &GridTopology::new(width, height)?,
            &self.params,
        )?);
        Ok(Arc::clone(
            self.systems
                .lock()
                .unwrap()
                .entry((width, height))
                .or_insert(sys),
        ))
    }

    /// Raw peak deflections (mV) for `img`, before normalization.
    pub fn peak_deflections(&self, img: &Image) -> Result<Vec<f64>> {
        let sys = self.system(img.width(), img.height())?;
        let drive = DriveField::new(img.data().iter().map(|p| p * self.params.i_dark).collect())?;
        Ok(simulate(&sys, &drive)?.peak_deflection)
    }

    pub fn denoise(&self, img: &Image) -> Result<Image> {
        let peaks = self.peak_deflections(img)?;
        Ok(normalize_min_max(img.width(), img.height(), &peaks).unwrap_or_else(|| img.clone()))
    }
}

/// One-shot denoising; use [`PrFilter`] to amortize factorization over many images.
pub fn pr_denoise(img: &Image, params: &NetworkParams) -> Result<Image> {
    PrFilter::new(*params)?.denoise(img)
}

/// Equivalent spatial kernel: peak deflections of a `(2r+1)^2` grid whose
/// centre cell alone is driven at `i_dark`, normalized to unit sum.
pub fn impulse_response(params: &NetworkParams, radius: usize) -> Result<Kernel> {
    if radius == 0 {
        return Err(crate::Error::InvalidParams("radius must be >= 1".into()));
    }
    let size = 2 * radius + 1;
    let grid = GridTopology::new(size, size)?;
    let sys = build_system(&grid, params)?;
    let drive = DriveField::impulse(grid.len(), grid.center(), params.i_dark)?;
    let peaks = simulate(&sys, &drive)?.peak_deflection;
    let total: f64 = peaks.iter().sum();
    Kernel::new(size, peaks.iter().map(|p| p / total).collect())
}
