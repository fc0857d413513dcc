//! Difficulty-aware, load-balanced dispatch of patches to (model, engine)
//! pairs, simulated as a sequence of greedy list-scheduling steps.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::profile::{DeviceProfile, QualityProfile};
use crate::tv::{is_hard, TvThreshold, TvValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("no patches to schedule")]
    NoPatches,
    #[error("model {0} is not in the device profile")]
    UnknownModel(String),
    #[error("model {0} is unavailable on every PSNR-preserving engine")]
    AccurateUnavailable(String),
    #[error("model {0} is unavailable on every reduced-precision engine")]
    CompactUnavailable(String),
    #[error("quality profile has {actual} records for {expected} patches")]
    RecordCount { expected: usize, actual: usize },
    #[error("patch {patch} has no PSNR record for {model}")]
    MissingRecord { patch: String, model: String },
    #[error("split has {actual} fractions for {expected} engines")]
    SplitLength { expected: usize, actual: usize },
    #[error("split fractions must be nonnegative and sum to 1")]
    InvalidSplit,
    #[error("split assigns work to {0}, where the model is unavailable")]
    SplitOnUnavailable(String),
}

/// The accurate model `m1` and the compact model `m2` of a design.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelPair {
    pub accurate: String,
    pub compact: String,
}

impl ModelPair {
    pub fn new(accurate: &str, compact: &str) -> Self {
        Self { accurate: accurate.into(), compact: compact.into() }
    }

    pub fn model(&self, role: ModelRole) -> &str {
        match role {
            ModelRole::Accurate => &self.accurate,
            ModelRole::Compact => &self.compact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelRole {
    Accurate,
    Compact,
}

impl ModelRole {
    /// m1 runs on PSNR-preserving engines, m2 on the rest.
    pub fn for_engine(psnr_preserving: bool) -> Self {
        if psnr_preserving {
            ModelRole::Accurate
        } else {
            ModelRole::Compact
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub patch: usize,
    /// Index into the profile's engine set.
    pub engine: usize,
    pub role: ModelRole,
    pub start_ms: f64,
    pub finish_ms: f64,
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub pair: ModelPair,
    /// One entry per patch, in input order.
    pub assignments: Vec<Assignment>,
    /// Busy-until time of every engine, in engine-set order.
    pub engine_end_ms: Vec<f64>,
    pub t_stitch_ms: f64,
    pub makespan_ms: f64,
}

impl ScheduleResult {
    pub fn roles(&self) -> Vec<ModelRole> {
        self.assignments.iter().map(|a| a.role).collect()
    }

    pub fn patches_on(&self, engine: usize) -> usize {
        self.assignments.iter().filter(|a| a.engine == engine).count()
    }
}

/// Per-engine latency of the model each engine would run for `pair`, or
/// `None` where that pair is unavailable.
pub(crate) fn engine_latencies(profile: &DeviceProfile, pair: &ModelPair) -> Result<Vec<Option<f64>>, ScheduleError> {
    for m in [&pair.accurate, &pair.compact] {
        if !profile.has_model(m) {
            return Err(ScheduleError::UnknownModel(m.clone()));
        }
    }
    let lat: Vec<Option<f64>> = profile
        .engines()
        .engines()
        .iter()
        .enumerate()
        .map(|(i, e)| profile.latency(pair.model(ModelRole::for_engine(e.psnr_preserving)), i))
        .collect();
    let preserving_ok = profile
        .engines()
        .engines()
        .iter()
        .zip(&lat)
        .any(|(e, t)| e.psnr_preserving && t.is_some());
    if !preserving_ok {
        return Err(ScheduleError::AccurateUnavailable(pair.accurate.clone()));
    }
    Ok(lat)
}

/// Simulates the dispatch of `patch_tvs` (in order) under threshold `thr`.
///
/// Easy patches go to the PSNR-preserving engine that would finish them
/// first, running m1. Hard patches may go to any engine: m1 on preserving
/// engines, m2 elsewhere. Engines where the needed model is unavailable are
/// skipped. Ties go to the earlier engine.
pub fn schedule(
    patch_tvs: &[TvValue],
    pair: &ModelPair,
    thr: TvThreshold,
    profile: &DeviceProfile,
) -> Result<ScheduleResult, ScheduleError> {
    if patch_tvs.is_empty() {
        return Err(ScheduleError::NoPatches);
    }
    let lat = engine_latencies(profile, pair)?;
    let engines = profile.engines().engines();
    let mut end = alloc::vec![0.0f64; engines.len()];
    let mut assignments = Vec::with_capacity(patch_tvs.len());

    for (patch, &tv) in patch_tvs.iter().enumerate() {
        let hard = is_hard(tv, thr);
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in engines.iter().enumerate() {
            if !hard && !e.psnr_preserving {
                continue;
            }
            let Some(t) = lat[i] else { continue };
            let finish = end[i] + t;
            if best.is_none_or(|(_, f)| finish < f) {
                best = Some((i, finish));
            }
        }
        let (engine, finish_ms) = best.expect("a preserving engine runs m1");
        assignments.push(Assignment {
            patch,
            engine,
            role: ModelRole::for_engine(engines[engine].psnr_preserving),
            start_ms: end[engine],
            finish_ms,
            hard,
        });
        end[engine] = finish_ms;
    }

    let busiest = end.iter().copied().fold(0.0, f64::max);
    Ok(ScheduleResult {
        pair: pair.clone(),
        assignments,
        makespan_ms: busiest + profile.t_stitch_ms(),
        engine_end_ms: end,
        t_stitch_ms: profile.t_stitch_ms(),
    })
}

/// Mean PSNR over patches; infinite (lossless) patches are counted apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualitySummary {
    /// Mean of the finite values, or `+inf` when every patch is lossless.
    pub mean_db: f64,
    pub finite: usize,
    pub infinite: usize,
}

impl QualitySummary {
    pub(crate) fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut sum, mut finite, mut infinite) = (0.0, 0usize, 0usize);
        for v in values {
            if v.is_finite() {
                sum += v;
                finite += 1;
            } else {
                infinite += 1;
            }
        }
        let mean_db = if finite == 0 { f64::INFINITY } else { sum / finite as f64 };
        Self { mean_db, finite, infinite }
    }
}

/// Mean PSNR achieved by a schedule. Record `i` of `quality` describes patch
/// `i`; each patch is scored at the precision of the engine that ran it.
pub fn quality_of_schedule(
    result: &ScheduleResult,
    quality: &QualityProfile,
    profile: &DeviceProfile,
) -> Result<QualitySummary, ScheduleError> {
    let records = quality.records();
    if records.len() != result.assignments.len() {
        return Err(ScheduleError::RecordCount { expected: result.assignments.len(), actual: records.len() });
    }
    let mut values = Vec::with_capacity(records.len());
    for (a, r) in result.assignments.iter().zip(records) {
        let preserving = profile.engines().get(a.engine).psnr_preserving;
        let model = result.pair.model(a.role);
        let v = r
            .psnr_for(model, preserving)
            .ok_or_else(|| ScheduleError::MissingRecord { patch: r.patch_id.clone(), model: model.into() })?;
        values.push(v);
    }
    Ok(QualitySummary::from_values(values))
}
