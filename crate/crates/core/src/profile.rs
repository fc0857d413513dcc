//! Device latency profiles and per-patch quality profiles.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tv::TvValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("engine set is empty")]
    NoEngines,
    #[error("duplicate engine name {0}")]
    DuplicateEngine(String),
    #[error("no PSNR-preserving engine in the engine set")]
    NoPreservingEngine,
    #[error("latency row for {model} has {actual} entries, expected {expected}")]
    RowLength { model: String, expected: usize, actual: usize },
    #[error("latency for ({model}, {engine}) must be positive and finite, got {value}")]
    InvalidLatency { model: String, engine: String, value: f64 },
    #[error("stitch overhead must be nonnegative and finite, got {0}")]
    InvalidStitch(f64),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("unknown engine {0}")]
    UnknownEngine(String),
    #[error("({model}, {engine}) is unavailable")]
    Unavailable { model: String, engine: String },
    #[error("record {patch}: PSNR for {model} must be finite or +inf, got {value}")]
    InvalidPsnr { patch: String, model: String, value: f64 },
    #[error("curve knots must be finite with strictly increasing TV")]
    BadKnots,
    #[error("curve violates the monotonicity constraints: {0}")]
    NonMonotoneCurve(String),
}

/// One compute engine of the SoC.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Engine {
    pub name: String,
    /// Numeric format label, e.g. `FP32`, `FP16`, `INT8`.
    pub precision: String,
    /// Whether the engine runs models without quality loss.
    pub psnr_preserving: bool,
}

impl Engine {
    pub fn new(name: &str, precision: &str, psnr_preserving: bool) -> Self {
        Self { name: name.into(), precision: precision.into(), psnr_preserving }
    }
}

/// Ordered engines; the order breaks scheduling ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineSet {
    engines: Vec<Engine>,
}

impl EngineSet {
    pub fn new(engines: Vec<Engine>) -> Result<Self, ProfileError> {
        if engines.is_empty() {
            return Err(ProfileError::NoEngines);
        }
        let mut seen = BTreeSet::new();
        for e in &engines {
            if !seen.insert(e.name.as_str()) {
                return Err(ProfileError::DuplicateEngine(e.name.clone()));
            }
        }
        if !engines.iter().any(|e| e.psnr_preserving) {
            return Err(ProfileError::NoPreservingEngine);
        }
        Ok(Self { engines })
    }

    pub fn engines(&self) -> &[Engine] {
        &self.engines
    }

    pub fn len(&self) -> usize {
        self.engines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.engines.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.engines.iter().position(|e| e.name == name)
    }

    pub fn get(&self, idx: usize) -> &Engine {
        &self.engines[idx]
    }
}

/// Per-patch latency of every (model, engine) pair, plus stitch overhead.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    engines: EngineSet,
    patch_size: (usize, usize),
    t_stitch_ms: f64,
    /// Model id → latency per engine (engine-set order); `None` = unavailable.
    latency_ms: BTreeMap<String, Vec<Option<f64>>>,
}

impl DeviceProfile {
    pub fn new(
        engines: EngineSet,
        patch_size: (usize, usize),
        t_stitch_ms: f64,
        latency_ms: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Result<Self, ProfileError> {
        if !(t_stitch_ms.is_finite() && t_stitch_ms >= 0.0) {
            return Err(ProfileError::InvalidStitch(t_stitch_ms));
        }
        for (model, row) in &latency_ms {
            if row.len() != engines.len() {
                return Err(ProfileError::RowLength {
                    model: model.clone(),
                    expected: engines.len(),
                    actual: row.len(),
                });
            }
            for (e, value) in engines.engines().iter().zip(row) {
                if let Some(v) = *value {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(ProfileError::InvalidLatency {
                            model: model.clone(),
                            engine: e.name.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(Self { engines, patch_size, t_stitch_ms, latency_ms })
    }

    pub fn engines(&self) -> &EngineSet {
        &self.engines
    }

    pub fn patch_size(&self) -> (usize, usize) {
        self.patch_size
    }

    pub fn t_stitch_ms(&self) -> f64 {
        self.t_stitch_ms
    }

    /// Same profile with a different stitch overhead.
    pub fn with_stitch(&self, t_stitch_ms: f64) -> Result<Self, ProfileError> {
        Self::new(self.engines.clone(), self.patch_size, t_stitch_ms, self.latency_ms.clone())
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.latency_ms.keys().map(String::as_str)
    }

    pub fn has_model(&self, model: &str) -> bool {
        self.latency_ms.contains_key(model)
    }

    pub fn table(&self) -> &BTreeMap<String, Vec<Option<f64>>> {
        &self.latency_ms
    }

    /// Per-patch latency of `model` on engine `idx`; `None` when the model is
    /// unknown or the pair unavailable.
    pub fn latency(&self, model: &str, idx: usize) -> Option<f64> {
        self.latency_ms.get(model).and_then(|row| row.get(idx).copied().flatten())
    }

    pub fn require_latency(&self, model: &str, idx: usize) -> Result<f64, ProfileError> {
        if !self.has_model(model) {
            return Err(ProfileError::UnknownModel(model.into()));
        }
        self.latency(model, idx).ok_or_else(|| ProfileError::Unavailable {
            model: model.into(),
            engine: self.engines.get(idx).name.clone(),
        })
    }

    pub fn latency_by_name(&self, model: &str, engine: &str) -> Result<f64, ProfileError> {
        let idx = self.engines.index_of(engine).ok_or_else(|| ProfileError::UnknownEngine(engine.into()))?;
        self.require_latency(model, idx)
    }
}

/// `t(base) / t(other)` for two (model, engine) pairs.
pub fn speedup(profile: &DeviceProfile, base: (&str, &str), other: (&str, &str)) -> Result<f64, ProfileError> {
    Ok(profile.latency_by_name(base.0, base.1)? / profile.latency_by_name(other.0, other.1)?)
}

/// Achieved quality of every model on one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityRecord {
    pub patch_id: String,
    pub tv: TvValue,
    /// PSNR (dB) of each model at full precision; `+inf` for a perfect patch.
    pub psnr: BTreeMap<String, f64>,
    /// PSNR (dB) when the model runs on a reduced-precision engine. Models
    /// missing here fall back to `psnr`.
    pub psnr_reduced: BTreeMap<String, f64>,
}

impl QualityRecord {
    pub fn psnr_for(&self, model: &str, psnr_preserving: bool) -> Option<f64> {
        if !psnr_preserving {
            if let Some(&v) = self.psnr_reduced.get(model) {
                return Some(v);
            }
        }
        self.psnr.get(model).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QualityProfile {
    records: Vec<QualityRecord>,
}

impl QualityProfile {
    pub fn new(records: Vec<QualityRecord>) -> Result<Self, ProfileError> {
        for r in &records {
            for (model, &value) in r.psnr.iter().chain(&r.psnr_reduced) {
                if value.is_nan() || value == f64::NEG_INFINITY {
                    return Err(ProfileError::InvalidPsnr { patch: r.patch_id.clone(), model: model.clone(), value });
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[QualityRecord] {
        &self.records
    }

    pub fn tvs(&self) -> Vec<TvValue> {
        self.records.iter().map(|r| r.tv).collect()
    }

    /// Fails on the first model id not accepted by `known`.
    pub fn check_models(&self, known: impl Fn(&str) -> bool) -> Result<(), ProfileError> {
        for r in &self.records {
            for model in r.psnr.keys().chain(r.psnr_reduced.keys()) {
                if !known(model) {
                    return Err(ProfileError::UnknownModel(model.clone()));
                }
            }
        }
        Ok(())
    }

    /// Mean PSNR of `model` over all records at the given precision class,
    /// ignoring infinite entries. `None` if any record lacks the model.
    pub fn mean_psnr(&self, model: &str, psnr_preserving: bool) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in &self.records {
            let v = r.psnr_for(model, psnr_preserving)?;
            if v.is_finite() {
                sum += v;
                n += 1;
            }
        }
        Some(if n == 0 { f64::INFINITY } else { sum / n as f64 })
    }
}

/// Piecewise-linear function of TV, constant beyond its end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    /// `knots` are `(tv, value)` with strictly increasing `tv`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, ProfileError> {
        if knots.is_empty()
            || knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
            || knots.windows(2).any(|w| w[0].0 >= w[1].0)
        {
            return Err(ProfileError::BadKnots);
        }
        Ok(Self { knots })
    }

    pub fn constant(value: f64) -> Result<Self, ProfileError> {
        Self::new(alloc::vec![(0.0, value)])
    }

    pub fn linear(from: (f64, f64), to: (f64, f64)) -> Result<Self, ProfileError> {
        Self::new(alloc::vec![from, to])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= x) - 1;
        let (x0, y0) = k[i];
        let (x1, y1) = k[i + 1];
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Synthetic PSNR-vs-TV behaviour of a family of models.
///
/// Model `i` achieves `base(tv) - gap_i(tv)`. Models are listed from most to
/// least accurate: every gap is nonnegative and non-increasing in TV, gaps do
/// not shrink down the list, and every model curve is non-increasing in TV.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityCurve {
    pub base: PiecewiseLinear,
    pub models: Vec<(String, PiecewiseLinear)>,
    /// Amplitude of a per-patch offset shared by all models.
    pub noise_db: f64,
    /// Constant loss of a model on reduced-precision engines; models absent
    /// here get no reduced-precision records.
    pub reduced_penalty_db: BTreeMap<String, f64>,
}

impl QualityCurve {
    fn validate(&self) -> Result<(), ProfileError> {
        let mut xs: Vec<f64> = self.base.knots.iter().map(|k| k.0).collect();
        for (_, gap) in &self.models {
            xs.extend(gap.knots.iter().map(|k| k.0));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let bad = |msg: String| Err(ProfileError::NonMonotoneCurve(msg));
        if !(self.noise_db.is_finite() && self.noise_db >= 0.0) {
            return bad(format!("noise amplitude {}", self.noise_db));
        }
        for pair in xs.windows(2) {
            if self.base.eval(pair[1]) > self.base.eval(pair[0]) {
                return bad(format!("base curve rises between TV {} and {}", pair[0], pair[1]));
            }
        }
        let mut previous: Option<&PiecewiseLinear> = None;
        for (id, gap) in &self.models {
            for &x in &xs {
                if gap.eval(x) < 0.0 {
                    return bad(format!("{id}: negative gap at TV {x}"));
                }
                if let Some(prev) = previous {
                    if gap.eval(x) < prev.eval(x) {
                        return bad(format!("{id}: more accurate than the model listed before it at TV {x}"));
                    }
                }
            }
            for pair in xs.windows(2) {
                if gap.eval(pair[1]) > gap.eval(pair[0]) {
                    return bad(format!("{id}: gap widens between TV {} and {}", pair[0], pair[1]));
                }
                let at = |x| self.base.eval(x) - gap.eval(x);
                if at(pair[1]) > at(pair[0]) {
                    return bad(format!("{id}: PSNR rises between TV {} and {}", pair[0], pair[1]));
                }
            }
            previous = Some(gap);
        }
        for (id, &p) in &self.reduced_penalty_db {
            if !self.models.iter().any(|(m, _)| m == id) {
                return bad(format!("penalty for unlisted model {id}"));
            }
            if !(p.is_finite() && p >= 0.0) {
                return bad(format!("{id}: reduced-precision penalty {p}"));
            }
        }
        Ok(())
    }
}

/// Deterministic synthetic quality profile over the given patch TVs.
pub fn synthesize_quality(
    tv_values: &[TvValue],
    curve: &QualityCurve,
    seed: u64,
) -> Result<QualityProfile, ProfileError> {
    curve.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = tv_values
        .iter()
        .enumerate()
        .map(|(i, &tv)| {
            let offset = if curve.noise_db > 0.0 { rng.random_range(-curve.noise_db..=curve.noise_db) } else { 0.0 };
            let base = curve.base.eval(tv.value());
            let psnr: BTreeMap<String, f64> = curve
                .models
                .iter()
                .map(|(id, gap)| (id.clone(), base - gap.eval(tv.value()) + offset))
                .collect();
            let psnr_reduced =
                curve.reduced_penalty_db.iter().map(|(id, p)| (id.clone(), psnr[id] - p)).collect();
            QualityRecord { patch_id: format!("p{i}"), tv, psnr, psnr_reduced }
        })
        .collect();
    QualityProfile::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    pub(crate) fn sdm845() -> DeviceProfile {
        let engines = EngineSet::new(vec![
            Engine::new("CPU", "FP32", true),
            Engine::new("GPU", "FP16", true),
            Engine::new("DSP", "INT8", false),
        ])
        .unwrap();
        let mut t = BTreeMap::new();
        t.insert("m_ref".into(), vec![Some(4570.08), Some(2792.43), Some(1220.00)]);
        t.insert("m_s2".into(), vec![Some(1023.26), Some(2595.59), Some(973.07)]);
        t.insert("m_x".into(), vec![Some(10.0), None, Some(5.0)]);
        DeviceProfile::new(engines, (90, 160), 0.0, t).unwrap()
    }

    #[test]
    fn engine_set_invariants() {
        assert_eq!(EngineSet::new(vec![]), Err(ProfileError::NoEngines));
        assert!(matches!(
            EngineSet::new(vec![Engine::new("A", "FP32", true), Engine::new("A", "FP16", true)]),
            Err(ProfileError::DuplicateEngine(_))
        ));
        assert_eq!(EngineSet::new(vec![Engine::new("D", "INT8", false)]), Err(ProfileError::NoPreservingEngine));
    }

    #[test]
    fn sdm845_lookups() {
        let p = sdm845();
        assert_eq!(p.latency_by_name("m_ref", "CPU").unwrap(), 4570.08);
        assert_eq!(p.latency_by_name("m_s2", "DSP").unwrap(), 973.07);
        assert!(matches!(p.latency_by_name("m_x", "GPU"), Err(ProfileError::Unavailable { .. })));
        assert!(matches!(p.latency_by_name("nope", "GPU"), Err(ProfileError::UnknownModel(_))));
        assert!(matches!(p.latency_by_name("m_x", "NPU"), Err(ProfileError::UnknownEngine(_))));
    }

    #[test]
    fn rejects_bad_latencies() {
        let engines = EngineSet::new(vec![Engine::new("CPU", "FP32", true)]).unwrap();
        for v in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let mut t = BTreeMap::new();
            t.insert("m".into(), vec![Some(v)]);
            assert!(matches!(
                DeviceProfile::new(engines.clone(), (90, 160), 0.0, t),
                Err(ProfileError::InvalidLatency { .. })
            ));
        }
        let mut t = BTreeMap::new();
        t.insert("m".into(), vec![Some(1.0), Some(2.0)]);
        assert!(matches!(DeviceProfile::new(engines.clone(), (1, 1), 0.0, t), Err(ProfileError::RowLength { .. })));
        assert!(matches!(
            DeviceProfile::new(engines, (1, 1), -1.0, BTreeMap::new()),
            Err(ProfileError::InvalidStitch(_))
        ));
    }

    #[test]
    fn speedup_examples() {
        let p = sdm845();
        let cpu = speedup(&p, ("m_ref", "CPU"), ("m_s2", "CPU")).unwrap();
        assert!((cpu - 4.47).abs() < 0.01 && (cpu - 4.46).abs() < 0.01);
        let dsp = speedup(&p, ("m_ref", "DSP"), ("m_s2", "DSP")).unwrap();
        assert!((dsp - 1.25).abs() < 0.01);
        assert_eq!(speedup(&p, ("m_s2", "GPU"), ("m_s2", "GPU")).unwrap(), 1.0);
        assert!(speedup(&p, ("m_x", "GPU"), ("m_s2", "GPU")).is_err());
    }

    proptest! {
        #[test]
        fn speedup_reciprocal(a in 0usize..3, b in 0usize..3, ma in 0usize..2, mb in 0usize..2) {
            let p = sdm845();
            let names = ["CPU", "GPU", "DSP"];
            let models = ["m_ref", "m_s2"];
            let x = (models[ma], names[a]);
            let y = (models[mb], names[b]);
            let prod = speedup(&p, x, y).unwrap() * speedup(&p, y, x).unwrap();
            prop_assert!((prod - 1.0).abs() < 1e-12);
        }
    }

    fn tvs(values: &[f64]) -> Vec<TvValue> {
        values.iter().map(|&v| TvValue::new(v).unwrap()).collect()
    }

    fn linear_curve() -> QualityCurve {
        QualityCurve {
            base: PiecewiseLinear::linear((0.0, 45.0), (1000.0, 20.0)).unwrap(),
            models: vec![
                ("m1".into(), PiecewiseLinear::constant(0.0).unwrap()),
                ("m2".into(), PiecewiseLinear::linear((0.0, 2.0), (1000.0, 0.1)).unwrap()),
            ],
            noise_db: 0.0,
            reduced_penalty_db: BTreeMap::new(),
        }
    }

    #[test]
    fn zero_gap_gives_identical_models() {
        let curve = QualityCurve {
            base: PiecewiseLinear::linear((0.0, 40.0), (10.0, 30.0)).unwrap(),
            models: vec![
                ("a".into(), PiecewiseLinear::constant(0.0).unwrap()),
                ("b".into(), PiecewiseLinear::constant(0.0).unwrap()),
            ],
            noise_db: 0.5,
            reduced_penalty_db: BTreeMap::new(),
        };
        let q = synthesize_quality(&tvs(&[0.0, 3.0, 7.0, 12.0]), &curve, 9).unwrap();
        for r in q.records() {
            assert_eq!(r.psnr["a"], r.psnr["b"]);
        }
    }

    #[test]
    fn linear_curve_sampled_exactly() {
        let q = synthesize_quality(&tvs(&[0.0, 250.0, 500.0, 1000.0]), &linear_curve(), 1).unwrap();
        let expect = [(45.0, 43.0), (38.75, 37.225), (32.5, 31.45), (20.0, 19.9)];
        for (r, (m1, m2)) in q.records().iter().zip(expect) {
            assert!((r.psnr["m1"] - m1).abs() < 1e-12, "{} vs {m1}", r.psnr["m1"]);
            assert!((r.psnr["m2"] - m2).abs() < 1e-12, "{} vs {m2}", r.psnr["m2"]);
        }
        assert_eq!(q.records()[0].psnr["m1"], 45.0);
        assert_eq!(q.records()[3].psnr["m1"], 20.0);
    }

    #[test]
    fn rejects_curves_breaking_constraints() {
        let mut rising = linear_curve();
        rising.base = PiecewiseLinear::linear((0.0, 20.0), (10.0, 30.0)).unwrap();
        assert!(matches!(synthesize_quality(&[], &rising, 0), Err(ProfileError::NonMonotoneCurve(_))));

        let mut widening = linear_curve();
        widening.models[1].1 = PiecewiseLinear::linear((0.0, 0.1), (1000.0, 2.0)).unwrap();
        assert!(matches!(synthesize_quality(&[], &widening, 0), Err(ProfileError::NonMonotoneCurve(_))));

        let mut swapped = linear_curve();
        swapped.models.reverse();
        assert!(matches!(synthesize_quality(&[], &swapped, 0), Err(ProfileError::NonMonotoneCurve(_))));

        // Gap shrinking faster than the base falls makes model 2 rise.
        let steep = QualityCurve {
            base: PiecewiseLinear::linear((0.0, 30.0), (10.0, 29.0)).unwrap(),
            models: vec![("m".into(), PiecewiseLinear::linear((0.0, 5.0), (10.0, 0.0)).unwrap())],
            noise_db: 0.0,
            reduced_penalty_db: BTreeMap::new(),
        };
        assert!(matches!(synthesize_quality(&[], &steep, 0), Err(ProfileError::NonMonotoneCurve(_))));
        assert_eq!(PiecewiseLinear::new(vec![(1.0, 0.0), (1.0, 2.0)]), Err(ProfileError::BadKnots));

        let mut penalty = linear_curve();
        penalty.reduced_penalty_db.insert("m3".into(), 1.0);
        assert!(matches!(synthesize_quality(&[], &penalty, 0), Err(ProfileError::NonMonotoneCurve(_))));
        penalty.reduced_penalty_db.clear();
        penalty.reduced_penalty_db.insert("m1".into(), -1.0);
        assert!(matches!(synthesize_quality(&[], &penalty, 0), Err(ProfileError::NonMonotoneCurve(_))));
    }

    #[test]
    fn reduced_precision_penalty() {
        let mut curve = linear_curve();
        curve.reduced_penalty_db.insert("m2".into(), 0.75);
        let q = synthesize_quality(&tvs(&[0.0, 500.0]), &curve, 3).unwrap();
        for r in q.records() {
            assert_eq!(r.psnr_for("m2", false), Some(r.psnr["m2"] - 0.75));
            assert_eq!(r.psnr_for("m1", false), Some(r.psnr["m1"]));
        }
    }

    proptest! {
        #[test]
        fn synthetic_profiles_keep_shape(values in proptest::collection::vec(0.0f64..1500.0, 1..80), seed in any::<u64>(), noise in 0.0f64..3.0) {
            let mut curve = linear_curve();
            curve.noise_db = noise;
            let q = synthesize_quality(&tvs(&values), &curve, seed).unwrap();
            prop_assert_eq!(&q, &synthesize_quality(&tvs(&values), &curve, seed).unwrap());
            let mut gaps: Vec<(f64, f64)> = q
                .records()
                .iter()
                .map(|r| (r.tv.value(), r.psnr["m1"] - r.psnr["m2"]))
                .collect();
            prop_assert!(gaps.iter().all(|g| g.1 >= -1e-9));
            gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert!(gaps.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
        }
    }

    #[test]
    fn reduced_precision_fallback() {
        let mut r = QualityRecord {
            patch_id: "p".into(),
            tv: TvValue::new(1.0).unwrap(),
            psnr: BTreeMap::new(),
            psnr_reduced: BTreeMap::new(),
        };
        r.psnr.insert("a".into(), 30.0);
        r.psnr_reduced.insert("a".into(), 29.0);
        r.psnr.insert("b".into(), f64::INFINITY);
        assert_eq!(r.psnr_for("a", true), Some(30.0));
        assert_eq!(r.psnr_for("a", false), Some(29.0));
        assert_eq!(r.psnr_for("b", false), Some(f64::INFINITY));
        assert_eq!(r.psnr_for("c", true), None);
        let q = QualityProfile::new(vec![r.clone()]).unwrap();
        assert_eq!(q.mean_psnr("a", false), Some(29.0));
        assert_eq!(q.mean_psnr("b", true), Some(f64::INFINITY));
        assert!(q.check_models(|m| m == "a").is_err());
        r.psnr.insert("c".into(), f64::NAN);
        assert!(QualityProfile::new(vec![r]).is_err());
    }
}
