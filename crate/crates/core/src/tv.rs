//! Total variation as an upscaling-difficulty score.
//!
//! The anisotropic total variation of a patch is the sum of absolute
//! differences between vertically and horizontally adjacent samples. A patch
//! is *hard* when its TV is strictly above a threshold; thresholds are drawn
//! from the empirical TV distribution of a small calibration set.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::imaging::{to_luma, Image, LumaGrid};
use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TvError {
    #[error("TV value must be finite and nonnegative, got {0}")]
    InvalidValue(f64),
    #[error("TV threshold must be nonnegative, got {0}")]
    InvalidThreshold(f64),
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("calibration set has {values} values but {sources} source identifiers")]
    SourceCount { values: usize, sources: usize },
    #[error("need at least 2 candidate thresholds, got {0}")]
    TooFewThresholds(usize),
}

/// Total variation of one patch on the 8-bit intensity scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TvValue(f64);

impl TvValue {
    pub fn new(value: f64) -> Result<Self, TvError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(TvError::InvalidValue(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Hard/easy boundary; may be `+inf` to classify every patch as easy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TvThreshold(f64);

impl TvThreshold {
    pub const INFINITE: TvThreshold = TvThreshold(f64::INFINITY);
    pub const ZERO: TvThreshold = TvThreshold(0.0);

    pub fn new(value: f64) -> Result<Self, TvError> {
        if value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(TvError::InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Channel space the TV is computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TvChannels {
    /// BT.601 luma (gray images pass through).
    #[default]
    Luma,
    /// Sum of the per-channel TVs.
    ChannelSum,
}

/// Anisotropic TV of a real-valued grid. Only pairs where both neighbours
/// exist contribute.
pub fn total_variation_grid(grid: &LumaGrid) -> f64 {
    let (w, h) = (grid.width, grid.height);
    let v = &grid.values;
    let mut acc = 0.0;
    for i in 0..h {
        for j in 0..w {
            let p = v[i * w + j];
            if i + 1 < h {
                acc += (v[(i + 1) * w + j] - p).abs();
            }
            if j + 1 < w {
                acc += (v[i * w + j + 1] - p).abs();
            }
        }
    }
    acc
}

fn channel_sum_tv(image: &Image) -> f64 {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let d = image.data();
    let mut acc: u64 = 0;
    for i in 0..h {
        for j in 0..w {
            for ch in 0..c {
                let p = i32::from(d[(i * w + j) * c + ch]);
                if i + 1 < h {
                    acc += (i32::from(d[((i + 1) * w + j) * c + ch]) - p).unsigned_abs() as u64;
                }
                if j + 1 < w {
                    acc += (i32::from(d[(i * w + j + 1) * c + ch]) - p).unsigned_abs() as u64;
                }
            }
        }
    }
    acc as f64
}

/// TV of a patch in luma space.
pub fn total_variation(image: &Image) -> TvValue {
    total_variation_with(image, TvChannels::Luma)
}

pub fn total_variation_with(image: &Image, channels: TvChannels) -> TvValue {
    let tv = match channels {
        TvChannels::Luma => total_variation_grid(&to_luma(image)),
        TvChannels::ChannelSum => channel_sum_tv(image),
    };
    TvValue(tv)
}

/// `true` iff the patch is hard to upscale: `tv > thr`, strictly.
#[inline]
pub fn is_hard(tv: TvValue, thr: TvThreshold) -> bool {
    tv.0 > thr.0
}

/// TV values of a user-supplied sample of patches.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    values: Vec<TvValue>,
    sources: Vec<String>,
}

impl CalibrationSet {
    /// `sources` is either empty or parallel to `values`.
    pub fn new(values: Vec<TvValue>, sources: Vec<String>) -> Result<Self, TvError> {
        if values.is_empty() {
            return Err(TvError::EmptyCalibration);
        }
        if !sources.is_empty() && sources.len() != values.len() {
            return Err(TvError::SourceCount { values: values.len(), sources: sources.len() });
        }
        Ok(Self { values, sources })
    }

    pub fn from_raw(values: &[f64]) -> Result<Self, TvError> {
        let values = values.iter().map(|&v| TvValue::new(v)).collect::<Result<Vec<_>, _>>()?;
        Self::new(values, Vec::new())
    }

    pub fn values(&self) -> &[TvValue] {
        &self.values
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn min(&self) -> f64 {
        self.values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().map(|v| v.0).fold(0.0, f64::max)
    }
}

/// `n_tv` thresholds at evenly spaced quantiles (0th through 100th percentile)
/// of the calibration TVs, interpolating linearly between order statistics.
pub fn candidate_thresholds(cal: &CalibrationSet, n_tv: usize) -> Result<Vec<TvThreshold>, TvError> {
    if n_tv < 2 {
        return Err(TvError::TooFewThresholds(n_tv));
    }
    let mut sorted: Vec<f64> = cal.values.iter().map(|v| v.0).collect();
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    let mut out = Vec::with_capacity(n_tv);
    let mut floor_value = sorted[0];
    for k in 0..n_tv {
        let pos = (k * last) as f64 / (n_tv - 1) as f64;
        let lo = (math::floor(pos) as usize).min(last);
        let frac = pos - lo as f64;
        let q = if lo == last || frac == 0.0 {
            sorted[lo]
        } else {
            (sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])).min(sorted[lo + 1])
        };
        floor_value = floor_value.max(q);
        out.push(TvThreshold(floor_value));
    }
    Ok(out)
}
