//! Closed-form latency and quality estimators.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::profile::{DeviceProfile, ProfileError, QualityProfile};
use crate::scheduler::{engine_latencies, ModelPair, QualitySummary, ScheduleError, ScheduleResult};
use crate::tv::{is_hard, TvThreshold, TvValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    StrictSplit,
    FractionalBound,
    Simulated,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::StrictSplit => "strict-split",
            EstimatorKind::FractionalBound => "fractional-bound",
            EstimatorKind::Simulated => "simulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineLoad {
    pub engine: String,
    pub busy_ms: f64,
    /// Patch count; fractional only for the divisible relaxation.
    pub patches: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyEstimate {
    pub loads: Vec<EngineLoad>,
    pub latency_ms: f64,
    pub kind: EstimatorKind,
}

impl LatencyEstimate {
    pub fn from_schedule(result: &ScheduleResult, profile: &DeviceProfile) -> Self {
        let loads = profile
            .engines()
            .engines()
            .iter()
            .enumerate()
            .map(|(i, e)| EngineLoad {
                engine: e.name.clone(),
                busy_ms: result.engine_end_ms[i],
                patches: result.patches_on(i) as f64,
            })
            .collect();
        Self { loads, latency_ms: result.makespan_ms, kind: EstimatorKind::Simulated }
    }
}

/// `n_patches` run back to back on one engine.
pub fn single_engine_total(
    n_patches: usize,
    model: &str,
    engine: &str,
    profile: &DeviceProfile,
) -> Result<f64, ProfileError> {
    Ok(math::serial_sum(n_patches, profile.latency_by_name(model, engine)?))
}

/// Splits `n` patches over `engines` by `fractions`, rounding each share down
/// and giving the remainder to the fastest engine.
fn split_counts(n: usize, engines: &[(usize, f64)], fractions: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = fractions.iter().map(|f| math::floor(f * n as f64) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut fastest = None;
    for (k, &(_, t)) in engines.iter().enumerate() {
        if fractions[k] > 0.0 && fastest.is_none_or(|(_, best)| t < best) {
            fastest = Some((k, t));
        }
    }
    if let Some((k, _)) = fastest {
        counts[k] += n.saturating_sub(assigned);
    }
    counts
}

fn speed_fractions(engines: &[(usize, f64)]) -> Vec<f64> {
    let total: f64 = engines.iter().map(|(_, t)| 1.0 / t).sum();
    engines.iter().map(|(_, t)| (1.0 / t) / total).collect()
}

/// Engines eligible for one role, as `(engine index, latency)`.
fn role_engines(profile: &DeviceProfile, lat: &[Option<f64>], preserving: bool) -> Vec<(usize, f64)> {
    profile
        .engines()
        .engines()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.psnr_preserving == preserving)
        .filter_map(|(i, _)| lat[i].map(|t| (i, t)))
        .collect()
}

/// Easy patches run m1 on the preserving engines, hard patches run m2 on the
/// other engines; nothing crosses over.
///
/// `m1_split` gives one fraction per PSNR-preserving engine in engine-set
/// order; `None` splits in proportion to engine speed. Hard patches are
/// always split in proportion to speed.
pub fn strict_split_estimate(
    patch_tvs: &[TvValue],
    pair: &ModelPair,
    thr: TvThreshold,
    profile: &DeviceProfile,
    m1_split: Option<&[f64]>,
) -> Result<LatencyEstimate, ScheduleError> {
    let lat = engine_latencies(profile, pair)?;
    let engines = profile.engines().engines();
    let hard = patch_tvs.iter().filter(|&&tv| is_hard(tv, thr)).count();
    let easy = patch_tvs.len() - hard;

    let m1_engines = role_engines(profile, &lat, true);
    let m1_fractions = match m1_split {
        None => speed_fractions(&m1_engines),
        Some(split) => {
            let preserving: Vec<usize> =
                engines.iter().enumerate().filter(|(_, e)| e.psnr_preserving).map(|(i, _)| i).collect();
            if split.len() != preserving.len() {
                return Err(ScheduleError::SplitLength { expected: preserving.len(), actual: split.len() });
            }
            let sum: f64 = split.iter().sum();
            if split.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(ScheduleError::InvalidSplit);
            }
            for (&i, &f) in preserving.iter().zip(split) {
                if f > 0.0 && lat[i].is_none() {
                    return Err(ScheduleError::SplitOnUnavailable(engines[i].name.clone()));
                }
            }
            preserving.iter().zip(split).filter(|(i, _)| lat[**i].is_some()).map(|(_, &f)| f).collect()
        }
    };

    let m2_engines = role_engines(profile, &lat, false);
    if hard > 0 && m2_engines.is_empty() {
        return Err(ScheduleError::CompactUnavailable(pair.compact.clone()));
    }
    let mut counts = vec![0usize; engines.len()];
    for ((i, _), c) in m1_engines.iter().zip(split_counts(easy, &m1_engines, &m1_fractions)) {
        counts[*i] += c;
    }
    if hard > 0 {
        let fractions = speed_fractions(&m2_engines);
        for ((i, _), c) in m2_engines.iter().zip(split_counts(hard, &m2_engines, &fractions)) {
            counts[*i] += c;
        }
    }

    let loads: Vec<EngineLoad> = engines
        .iter()
        .enumerate()
        .map(|(i, e)| EngineLoad {
            engine: e.name.clone(),
            busy_ms: lat[i].map_or(0.0, |t| math::serial_sum(counts[i], t)),
            patches: counts[i] as f64,
        })
        .collect();
    let busiest = loads.iter().map(|l| l.busy_ms).fold(0.0, f64::max);
    Ok(LatencyEstimate { loads, latency_ms: busiest + profile.t_stitch_ms(), kind: EstimatorKind::StrictSplit })
}

/// Mean PSNR when every easy record is served by m1 at full precision and
/// every hard record by m2 at reduced precision.
pub fn strict_split_quality(
    quality: &QualityProfile,
    pair: &ModelPair,
    thr: TvThreshold,
) -> Result<QualitySummary, ScheduleError> {
    let mut values = Vec::with_capacity(quality.records().len());
    for r in quality.records() {
        let hard = is_hard(r.tv, thr);
        let model = if hard { &pair.compact } else { &pair.accurate };
        let v = r
            .psnr_for(model, !hard)
            .ok_or_else(|| ScheduleError::MissingRecord { patch: r.patch_id.clone(), model: model.clone() })?;
        values.push(v);
    }
    Ok(QualitySummary::from_values(values))
}

/// Makespan when patch work is divisible: easy work spread over the
/// preserving engines, hard work over every eligible engine, finish times
/// equalized. Never exceeds the makespan of any discrete schedule with the
/// same eligibility.
pub fn fractional_lower_bound(
    patch_tvs: &[TvValue],
    pair: &ModelPair,
    thr: TvThreshold,
    profile: &DeviceProfile,
) -> Result<LatencyEstimate, ScheduleError> {
    if patch_tvs.is_empty() {
        return Err(ScheduleError::NoPatches);
    }
    let lat = engine_latencies(profile, pair)?;
    let hard = patch_tvs.iter().filter(|&&tv| is_hard(tv, thr)).count() as f64;
    let easy = patch_tvs.len() as f64 - hard;
    let preserving = role_engines(profile, &lat, true);
    let others = if hard > 0.0 { role_engines(profile, &lat, false) } else { Vec::new() };

    let rate_p: f64 = preserving.iter().map(|(_, t)| 1.0 / t).sum();
    let rate_all: f64 = rate_p + others.iter().map(|(_, t)| 1.0 / t).sum::<f64>();
    let used = preserving.len() + others.len();

    let busy = if used == 1 {
        math::serial_sum(patch_tvs.len(), preserving[0].1)
    } else {
        // Rounded toward zero by more than the error of any serial sum.
        let t = f64::max(easy / rate_p, (easy + hard) / rate_all);
        t * (1.0 - (patch_tvs.len() + 8) as f64 * f64::EPSILON)
    };

    // When easy work binds, the other engines only need to absorb the hard work.
    let easy_bound = easy / rate_p >= (easy + hard) / rate_all;
    let rate_others = rate_all - rate_p;
    let loads = profile
        .engines()
        .engines()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let busy_ms = match preserving.iter().chain(&others).find(|(j, _)| *j == i) {
                None => 0.0,
                Some(_) if easy_bound && !e.psnr_preserving => hard / rate_others,
                Some(_) => busy,
            };
            let patches = lat[i].map_or(0.0, |t| busy_ms / t);
            EngineLoad { engine: e.name.clone(), busy_ms, patches }
        })
        .collect();
    Ok(LatencyEstimate { loads, latency_ms: busy + profile.t_stitch_ms(), kind: EstimatorKind::FractionalBound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Engine, EngineSet, QualityRecord};
    use crate::scheduler::schedule;
    use crate::scheduler::tests::{three_engines, tvs};
    use alloc::collections::BTreeMap;
    use proptest::prelude::*;

    fn thr(v: f64) -> TvThreshold {
        TvThreshold::new(v).unwrap()
    }

    fn pair() -> ModelPair {
        ModelPair::new("m1", "m2")
    }

    #[test]
    fn single_engine_totals() {
        let engines = EngineSet::new(vec![Engine::new("DSP", "INT8", false), Engine::new("CPU", "FP32", true)]).unwrap();
        let mut t = BTreeMap::new();
        t.insert("m_s2".into(), vec![Some(973.07 / 64.0), None]);
        let p = DeviceProfile::new(engines, (90, 160), 0.0, t).unwrap();
        assert_eq!(single_engine_total(0, "m_s2", "DSP", &p).unwrap(), 0.0);
        assert_eq!(single_engine_total(1, "m_s2", "DSP", &p).unwrap(), 973.07 / 64.0);
        assert!((single_engine_total(10, "m_s2", "DSP", &p).unwrap() - 10.0 * (973.07 / 64.0)).abs() < 1e-9);
        assert!(single_engine_total(1, "m_s2", "CPU", &p).is_err());
    }

    #[test]
    fn strict_split_example() {
        let p = three_engines([Some(40.0), Some(30.0)], Some(10.0), 5.0);
        let v = tvs(&[1.0, 2.0, 9.0, 9.0, 9.0, 9.0]);
        let est = strict_split_estimate(&v, &pair(), thr(5.0), &p, Some(&[0.5, 0.5])).unwrap();
        let busy: Vec<f64> = est.loads.iter().map(|l| l.busy_ms).collect();
        assert_eq!(busy, vec![40.0, 30.0, 40.0]);
        assert_eq!(est.latency_ms, 45.0);
        assert_eq!(est.kind, EstimatorKind::StrictSplit);
    }

    #[test]
    fn strict_split_remainder_goes_to_fastest() {
        let p = three_engines([Some(40.0), Some(30.0)], Some(10.0), 0.0);
        let est = strict_split_estimate(&tvs(&[0.0; 3]), &pair(), thr(5.0), &p, Some(&[0.5, 0.5])).unwrap();
        let counts: Vec<f64> = est.loads.iter().map(|l| l.patches).collect();
        assert_eq!(counts, vec![1.0, 2.0, 0.0]);
        // Proportional default: 3/7 and 4/7 of 7 patches.
        let est = strict_split_estimate(&tvs(&[0.0; 7]), &pair(), thr(5.0), &p, None).unwrap();
        let counts: Vec<f64> = est.loads.iter().map(|l| l.patches).collect();
        assert_eq!(counts, vec![3.0, 4.0, 0.0]);
    }

    #[test]
    fn strict_split_errors() {
        let p = three_engines([Some(40.0), None], None, 0.0);
        let v = tvs(&[1.0, 9.0]);
        assert_eq!(
            strict_split_estimate(&v, &pair(), thr(5.0), &p, None),
            Err(ScheduleError::CompactUnavailable("m2".into()))
        );
        assert!(strict_split_estimate(&v, &pair(), TvThreshold::INFINITE, &p, None).is_ok());
        assert!(matches!(
            strict_split_estimate(&v, &pair(), TvThreshold::INFINITE, &p, Some(&[1.0])),
            Err(ScheduleError::SplitLength { .. })
        ));
        assert_eq!(
            strict_split_estimate(&v, &pair(), TvThreshold::INFINITE, &p, Some(&[0.7, 0.7])),
            Err(ScheduleError::InvalidSplit)
        );
        assert_eq!(
            strict_split_estimate(&v, &pair(), TvThreshold::INFINITE, &p, Some(&[0.5, 0.5])),
            Err(ScheduleError::SplitOnUnavailable("GPU".into()))
        );
    }

    #[test]
    fn single_preserving_engine_all_estimators_agree() {
        let p = three_engines([Some(12.5), None], Some(3.0), 2.0);
        let v = tvs(&[1.0, 2.0, 3.0, 4.0]);
        let s = strict_split_estimate(&v, &pair(), TvThreshold::INFINITE, &p, None).unwrap().latency_ms;
        let b = fractional_lower_bound(&v, &pair(), TvThreshold::INFINITE, &p).unwrap().latency_ms;
        let g = schedule(&v, &pair(), TvThreshold::INFINITE, &p).unwrap().makespan_ms;
        assert_eq!((s, b, g), (52.0, 52.0, 52.0));
    }

    #[test]
    fn fractional_bound_examples() {
        let p = three_engines([Some(40.0), Some(30.0)], Some(10.0), 0.0);
        let b = fractional_lower_bound(&tvs(&[0.0; 6]), &pair(), thr(1.0), &p).unwrap();
        assert!((b.latency_ms - 6.0 / (1.0 / 40.0 + 1.0 / 30.0)).abs() < 1e-9);
        assert!((b.latency_ms - 102.857142857).abs() < 1e-6);
        assert_eq!(b.loads[2].busy_ms, 0.0);
        assert!((b.loads.iter().map(|l| l.patches).sum::<f64>() - 6.0).abs() < 1e-9);
    }

    fn record(tv: f64, m1: f64, m2: f64) -> QualityRecord {
        let mut psnr = BTreeMap::new();
        psnr.insert("m1".into(), m1);
        psnr.insert("m2".into(), m2);
        QualityRecord { patch_id: "p".into(), tv: TvValue::new(tv).unwrap(), psnr, psnr_reduced: BTreeMap::new() }
    }

    #[test]
    fn strict_quality() {
        let q = QualityProfile::new(vec![record(1.0, 30.0, 28.0), record(9.0, 20.0, 19.5)]).unwrap();
        assert_eq!(strict_split_quality(&q, &pair(), thr(5.0)).unwrap().mean_db, 24.75);
        assert_eq!(strict_split_quality(&q, &pair(), TvThreshold::INFINITE).unwrap().mean_db, 25.0);
    }

    prop_compose! {
        fn instance()(
            cpu in 1u32..60, gpu in proptest::option::of(1u32..60), dsp in proptest::option::of(1u32..60),
            values in proptest::collection::vec(0u32..20, 1..12), t in 0u32..21, stitch in 0u32..5,
        ) -> (DeviceProfile, Vec<TvValue>, TvThreshold) {
            let p = three_engines([Some(cpu as f64 * 1.37), gpu.map(|g| g as f64 * 0.91)], dsp.map(|d| d as f64 / 3.0), stitch as f64);
            let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
            (p, tvs(&v), thr(t as f64))
        }
    }

    proptest! {
        #[test]
        fn bound_below_simulation((p, v, th) in instance()) {
            let b = fractional_lower_bound(&v, &pair(), th, &p).unwrap().latency_ms;
            let g = schedule(&v, &pair(), th, &p).unwrap().makespan_ms;
            prop_assert!(b <= g, "bound {} > makespan {}", b, g);
        }

        #[test]
        fn bound_non_increasing_in_hard_count((p, v, _th) in instance()) {
            let mut last = f64::INFINITY;
            for t in (0..=20).rev() {
                let b = fractional_lower_bound(&v, &pair(), thr(t as f64), &p).unwrap().latency_ms;
                prop_assert!(b <= last * (1.0 + 1e-12));
                last = b;
            }
        }

        #[test]
        fn strict_quality_non_decreasing_in_thr(
            rows in proptest::collection::vec((0u32..20, 10.0f64..50.0, 0.0f64..5.0), 1..30),
        ) {
            let q = QualityProfile::new(rows.iter().map(|&(tv, m1, gap)| record(tv as f64, m1, m1 - gap)).collect()).unwrap();
            let mut last = f64::NEG_INFINITY;
            for t in 0..=20 {
                let m = strict_split_quality(&q, &pair(), thr(t as f64)).unwrap().mean_db;
                prop_assert!(m >= last - 1e-9);
                last = m;
            }
        }

        #[test]
        fn estimates_shift_with_stitch((p, v, th) in instance(), delta in 0.0f64..50.0) {
            let q = p.with_stitch(p.t_stitch_ms() + delta).unwrap();
            let a = fractional_lower_bound(&v, &pair(), th, &p).unwrap().latency_ms;
            let b = fractional_lower_bound(&v, &pair(), th, &q).unwrap().latency_ms;
            prop_assert!((b - a - delta).abs() < 1e-9);
            if let (Ok(a), Ok(b)) = (
                strict_split_estimate(&v, &pair(), th, &p, None),
                strict_split_estimate(&v, &pair(), th, &q, None),
            ) {
                prop_assert!((b.latency_ms - a.latency_ms - delta).abs() < 1e-9);
            }
        }
    }
}
