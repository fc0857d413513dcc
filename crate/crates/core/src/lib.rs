//! Planning core for tiled, two-model super-resolution on heterogeneous SoCs.
//!
//! Everything here is a pure function of its inputs and builds without `std`
//! (an allocator is required). File formats, reports and the command-line
//! driver live in the `srplan` crate.
//!
//! The pipeline, bottom to top:
//!
//! - [`imaging`]: images, overlapping patch partitions, stitching, luma, PSNR.
//! - [`tv`]: anisotropic total variation as an upscaling-difficulty score,
//!   the hard/easy test and calibration-based threshold grids.
//! - [`modelspace`]: model descriptors and the multiply-accumulate calculus
//!   for compressed convolution blocks.
//! - [`profile`]: device latency tables and per-patch quality records.
//! - [`scheduler`]: difficulty-aware, load-balanced patch dispatch.
//! - [`perfmodel`]: closed-form latency estimators and bounds.
//! - [`dse`]: Pareto pruning and exhaustive design search under a PSNR budget.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dse;
pub mod imaging;
pub mod modelspace;
pub mod perfmodel;
pub mod profile;
pub mod scheduler;
pub mod tv;

mod math;

pub use dse::{
    engine_fronts, enumerate_designs, pareto_prune, psnr_drop, retained_models, search, Candidate, DesignRow, DseError, DseRequest,
    Explorer, ParetoPoint, SearchMode, SearchOutcome, SearchStatus,
};
pub use imaging::{
    partition, plan_partition, psnr, stitch, to_luma, upscale_reference, Image, ImageError,
    LumaGrid, PartitionPlan, Patch, PatchSize, UpscaleMode,
};
pub use modelspace::{
    block_macs, design_count, model_macs, reduction_factor, standard_conv_macs, BlockCost,
    BlockKind, Layer, LayerShape, Model, ModelCatalog, ModelError, Transformation,
};
pub use perfmodel::{
    fractional_lower_bound, single_engine_total, strict_split_estimate, strict_split_quality,
    EngineLoad, EstimatorKind, LatencyEstimate,
};
pub use profile::{
    speedup, synthesize_quality, DeviceProfile, Engine, EngineSet, PiecewiseLinear,
    ProfileError, QualityCurve, QualityProfile, QualityRecord,
};
pub use scheduler::{
    quality_of_schedule, schedule, Assignment, ModelPair, ModelRole, QualitySummary,
    ScheduleError, ScheduleResult,
};
pub use tv::{
    candidate_thresholds, is_hard, total_variation, CalibrationSet, TvChannels, TvError,
    TvThreshold, TvValue,
};
