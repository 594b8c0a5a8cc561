//! Blind image denoising with a grid of electrically coupled model photoreceptors.
//!
//! Each pixel drives one passive cell of a rectangular grid; neighbouring cells
//! share current through gap junctions of conductance `g_gap`, the filter's only
//! tunable parameter. The peak voltage deflection of every cell, min-max
//! normalized, is the denoised image.
//!
//! Alongside the filter the crate carries what is needed to evaluate and
//! explain it: classic spatial baselines, seeded noise synthesis (including
//! blind mixtures calibrated to a target PSNR), PSNR/SSIM, spike-triggered
//! average receptive-field estimation on the grid, and Gaussian-mixture
//! profiling of residual noise.

pub mod bench;
pub mod corpus;
pub mod error;
pub mod filters;
pub mod image;
pub mod io;
pub mod kv;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod pr;
pub mod profiler;
pub mod sta;

pub use crate::error::{Error, ErrorClass, Result};
pub use crate::image::Image;
pub use crate::model::{DriveField, GridTopology, NetworkParams};
pub use crate::pr::{impulse_response, pr_denoise, PrFilter};
