//! Design-space exploration: per-engine Pareto pruning, the compactness
//! rule, and exhaustive (m1, m2, threshold) search under a PSNR budget.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::modelspace::ModelCatalog;
use crate::perfmodel::{strict_split_estimate, strict_split_quality, EstimatorKind};
use crate::profile::{DeviceProfile, QualityProfile};
use crate::scheduler::{quality_of_schedule, schedule, ModelPair, ScheduleError};
use crate::tv::{candidate_thresholds, CalibrationSet, TvError, TvThreshold, TvValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DseError {
    #[error("PSNR tolerance must be nonnegative, got {0}")]
    InvalidTolerance(f64),
    #[error("reference model {0} is not in the catalog")]
    UnknownReference(String),
    #[error("quality profile is empty")]
    NoQualityRecords,
    #[error("quality profile has no record of {0}")]
    MissingQuality(String),
    #[error("no model of the catalog can run on the device")]
    NoModels,
    #[error("no (m1, m2) pair satisfies the compactness rule")]
    EmptySpace,
    #[error(transparent)]
    Threshold(#[from] TvError),
    #[error("reference baseline: {0}")]
    Baseline(ScheduleError),
}

/// A model's position in the (PSNR, latency) plane of one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub model: String,
    pub psnr_db: f64,
    pub latency_ms: f64,
}

fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.psnr_db >= b.psnr_db
        && a.latency_ms <= b.latency_ms
        && (a.psnr_db > b.psnr_db || a.latency_ms < b.latency_ms)
}

/// Points no other point dominates, sorted by latency (ties keep input order).
pub fn pareto_prune(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut kept: Vec<ParetoPoint> =
        points.iter().filter(|p| !points.iter().any(|q| dominates(q, p))).cloned().collect();
    kept.sort_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms));
    kept
}

/// How candidates are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Every candidate goes through the scheduler simulation.
    #[default]
    Exhaustive,
    /// Strict-split screening; only the best tenth is simulated.
    Screened,
}

#[derive(Debug, Clone, Copy)]
pub struct DseRequest<'a> {
    pub catalog: &'a ModelCatalog,
    pub profile: &'a DeviceProfile,
    /// Scored patches; record `i` describes patch `i`.
    pub quality: &'a QualityProfile,
    /// TV sample that fixes the threshold grid.
    pub calibration: &'a CalibrationSet,
    pub eps_max_db: f64,
    pub n_tv: usize,
    pub reference: &'a str,
    pub mode: SearchMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pair: ModelPair,
    pub thr: TvThreshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub m1: String,
    pub m2: String,
    pub thr: TvThreshold,
    /// `+inf` when the pair cannot be scheduled on the device.
    pub latency_ms: f64,
    pub psnr_db: f64,
    pub psnr_drop_db: f64,
    pub feasible: bool,
    pub estimator: EstimatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Feasible,
    NoFeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// Fastest feasible design, or the one closest to the budget.
    pub winner: DesignRow,
    /// Every candidate, best first.
    pub table: Vec<DesignRow>,
    pub retained: Vec<String>,
    pub thresholds: Vec<TvThreshold>,
    pub reference_latency_ms: f64,
    pub reference_psnr_db: f64,
}

fn rank(a: &DesignRow, b: &DesignRow) -> Ordering {
    b.feasible
        .cmp(&a.feasible)
        .then(a.latency_ms.total_cmp(&b.latency_ms))
        .then(b.psnr_db.total_cmp(&a.psnr_db))
        .then_with(|| a.m1.cmp(&b.m1))
        .then_with(|| a.m2.cmp(&b.m2))
        .then(a.thr.value().total_cmp(&b.thr.value()))
}

fn closeness(a: &DesignRow, b: &DesignRow) -> Ordering {
    a.psnr_drop_db.total_cmp(&b.psnr_drop_db).then_with(|| rank(a, b))
}

/// `reference - design`, with two lossless results counting as no drop.
pub fn psnr_drop(reference_db: f64, design_db: f64) -> f64 {
    if reference_db == design_db {
        0.0
    } else {
        reference_db - design_db
    }
}

/// Pareto front of `models` on every engine, in engine-set order. A model's
/// point on an engine uses its mean PSNR at that engine's precision; models
/// unavailable on an engine are left out of its front.
pub fn engine_fronts(
    profile: &DeviceProfile,
    quality: &QualityProfile,
    models: &[String],
) -> Result<Vec<Vec<ParetoPoint>>, DseError> {
    let engines = profile.engines().engines();
    let mut fronts = Vec::with_capacity(engines.len());
    for (i, e) in engines.iter().enumerate() {
        let mut points = Vec::new();
        for m in models {
            let Some(latency_ms) = profile.latency(m, i) else { continue };
            let psnr_db = quality.mean_psnr(m, e.psnr_preserving).ok_or_else(|| DseError::MissingQuality(m.clone()))?;
            points.push(ParetoPoint { model: m.clone(), psnr_db, latency_ms });
        }
        fronts.push(pareto_prune(&points));
    }
    Ok(fronts)
}

/// Union of the per-engine Pareto fronts of the catalog, in catalog order.
pub fn retained_models(request: &DseRequest<'_>) -> Result<Vec<String>, DseError> {
    let ids: Vec<String> = request.catalog.models().iter().map(|m| m.id.clone()).collect();
    let fronts = engine_fronts(request.profile, request.quality, &ids)?;
    let keep: Vec<String> =
        ids.into_iter().filter(|id| fronts.iter().any(|f| f.iter().any(|p| &p.model == id))).collect();
    if keep.is_empty() {
        return Err(DseError::NoModels);
    }
    Ok(keep)
}

/// Ordered pairs with `params(m2) <= params(m1)`, crossed with `thresholds`.
pub fn enumerate_designs(
    catalog: &ModelCatalog,
    retained: &[String],
    thresholds: &[TvThreshold],
) -> Result<Vec<Candidate>, DseError> {
    let params = |id: &str| catalog.get(id).map_or(f64::INFINITY, |m| m.params_k);
    let mut out = Vec::new();
    for m1 in retained {
        for m2 in retained {
            if params(m2) <= params(m1) {
                for &thr in thresholds {
                    out.push(Candidate { pair: ModelPair::new(m1, m2), thr });
                }
            }
        }
    }
    if out.is_empty() {
        return Err(DseError::EmptySpace);
    }
    Ok(out)
}

/// A prepared search: thresholds, candidates and the reference baseline.
/// Candidate evaluations are independent and may run in any order or in
/// parallel; [`Explorer::finish`] sorts the rows deterministically.
#[derive(Debug, Clone)]
pub struct Explorer<'a> {
    request: DseRequest<'a>,
    tvs: Vec<TvValue>,
    retained: Vec<String>,
    thresholds: Vec<TvThreshold>,
    candidates: Vec<Candidate>,
    reference_latency_ms: f64,
    reference_psnr_db: f64,
}

impl<'a> Explorer<'a> {
    pub fn new(request: DseRequest<'a>) -> Result<Self, DseError> {
        if request.eps_max_db.is_nan() || request.eps_max_db < 0.0 {
            return Err(DseError::InvalidTolerance(request.eps_max_db));
        }
        if request.catalog.get(request.reference).is_none() {
            return Err(DseError::UnknownReference(request.reference.into()));
        }
        if request.quality.records().is_empty() {
            return Err(DseError::NoQualityRecords);
        }
        let thresholds = candidate_thresholds(request.calibration, request.n_tv)?;
        let tvs = request.quality.tvs();
        let baseline_pair = ModelPair::new(request.reference, request.reference);
        let baseline = schedule(&tvs, &baseline_pair, TvThreshold::INFINITE, request.profile)
            .map_err(DseError::Baseline)?;
        let reference_psnr_db =
            quality_of_schedule(&baseline, request.quality, request.profile).map_err(DseError::Baseline)?.mean_db;
        let retained = retained_models(&request)?;
        let candidates = enumerate_designs(request.catalog, &retained, &thresholds)?;
        Ok(Self {
            request,
            tvs,
            retained,
            thresholds,
            candidates,
            reference_latency_ms: baseline.makespan_ms,
            reference_psnr_db,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn thresholds(&self) -> &[TvThreshold] {
        &self.thresholds
    }

    pub fn retained(&self) -> &[String] {
        &self.retained
    }

    pub fn reference_psnr_db(&self) -> f64 {
        self.reference_psnr_db
    }

    pub fn reference_latency_ms(&self) -> f64 {
        self.reference_latency_ms
    }

    pub fn mode(&self) -> SearchMode {
        self.request.mode
    }

    fn row(&self, c: &Candidate, scored: Result<(f64, f64), ScheduleError>, kind: EstimatorKind) -> DesignRow {
        let (latency_ms, psnr_db, feasible) = match scored {
            Ok((latency, psnr)) => {
                let drop = psnr_drop(self.reference_psnr_db, psnr);
                (latency, psnr, drop <= self.request.eps_max_db)
            }
            Err(_) => (f64::INFINITY, f64::NEG_INFINITY, false),
        };
        DesignRow {
            m1: c.pair.accurate.clone(),
            m2: c.pair.compact.clone(),
            thr: c.thr,
            latency_ms,
            psnr_db,
            psnr_drop_db: psnr_drop(self.reference_psnr_db, psnr_db),
            feasible,
            estimator: kind,
        }
    }

    /// Scores a candidate with the scheduler simulation.
    pub fn evaluate(&self, c: &Candidate) -> DesignRow {
        let (profile, quality) = (self.request.profile, self.request.quality);
        let scored = schedule(&self.tvs, &c.pair, c.thr, profile).and_then(|r| {
            let q = quality_of_schedule(&r, quality, profile)?;
            Ok((r.makespan_ms, q.mean_db))
        });
        self.row(c, scored, EstimatorKind::Simulated)
    }

    /// Scores a candidate with the strict-split estimator.
    pub fn screen(&self, c: &Candidate) -> DesignRow {
        let scored = strict_split_estimate(&self.tvs, &c.pair, c.thr, self.request.profile, None).and_then(|est| {
            let q = strict_split_quality(self.request.quality, &c.pair, c.thr)?;
            Ok((est.latency_ms, q.mean_db))
        });
        self.row(c, scored, EstimatorKind::StrictSplit)
    }

    /// The best tenth (at least one) of screened rows, to be simulated.
    pub fn shortlist(&self, screened: &[DesignRow]) -> Vec<Candidate> {
        let mut order: Vec<&DesignRow> = screened.iter().collect();
        order.sort_by(|a, b| rank(a, b));
        let n = screened.len().div_ceil(10).max(1).min(screened.len());
        order[..n].iter().map(|r| Candidate { pair: ModelPair::new(&r.m1, &r.m2), thr: r.thr }).collect()
    }

    /// Ranks all rows and picks the winner. Rows tagged `Simulated` compete;
    /// if none are, every row does.
    pub fn finish(self, mut rows: Vec<DesignRow>) -> SearchOutcome {
        rows.sort_by(rank);
        let simulated: Vec<&DesignRow> = rows.iter().filter(|r| r.estimator == EstimatorKind::Simulated).collect();
        let pool: Vec<&DesignRow> = if simulated.is_empty() { rows.iter().collect() } else { simulated };
        let (status, winner) = match pool.iter().find(|r| r.feasible) {
            Some(r) => (SearchStatus::Feasible, (*r).clone()),
            None => {
                let closest = pool.iter().min_by(|a, b| closeness(a, b)).expect("candidate space is non-empty");
                (SearchStatus::NoFeasible, (*closest).clone())
            }
        };
        SearchOutcome {
            status,
            winner,
            table: rows,
            retained: self.retained,
            thresholds: self.thresholds,
            reference_latency_ms: self.reference_latency_ms,
            reference_psnr_db: self.reference_psnr_db,
        }
    }

    /// Runs the whole search sequentially.
    pub fn run(self) -> SearchOutcome {
        let rows = match self.request.mode {
            SearchMode::Exhaustive => self.candidates.iter().map(|c| self.evaluate(c)).collect(),
            SearchMode::Screened => {
                let mut rows: Vec<DesignRow> = self.candidates.iter().map(|c| self.screen(c)).collect();
                for c in self.shortlist(&rows) {
                    let sim = self.evaluate(&c);
                    let slot = rows
                        .iter_mut()
                        .find(|r| r.m1 == sim.m1 && r.m2 == sim.m2 && r.thr == sim.thr)
                        .expect("shortlisted from these rows");
                    *slot = sim;
                }
                rows
            }
        };
        self.finish(rows)
    }
}

/// Fastest design whose PSNR drop against the reference stays within the
/// tolerance, plus the full ranked table.
pub fn search(request: DseRequest<'_>) -> Result<SearchOutcome, DseError> {
    Ok(Explorer::new(request)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelspace::Model;
    use crate::profile::{Engine, EngineSet, QualityRecord};
    use alloc::collections::BTreeMap;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn pt(model: &str, psnr_db: f64, latency_ms: f64) -> ParetoPoint {
        ParetoPoint { model: model.into(), psnr_db, latency_ms }
    }

    #[test]
    fn pareto_examples() {
        let kept = pareto_prune(&[pt("a", 28.0, 100.0), pt("b", 27.0, 120.0), pt("c", 29.0, 150.0)]);
        assert_eq!(kept, vec![pt("a", 28.0, 100.0), pt("c", 29.0, 150.0)]);
        assert_eq!(pareto_prune(&[pt("a", 1.0, 1.0)]), vec![pt("a", 1.0, 1.0)]);
        let same = vec![pt("a", 1.0, 1.0), pt("b", 1.0, 1.0), pt("c", 1.0, 1.0)];
        assert_eq!(pareto_prune(&same), same);
    }

    proptest! {
        #[test]
        fn pareto_properties(raw in proptest::collection::vec((0u8..8, 0u8..8), 1..25)) {
            let points: Vec<ParetoPoint> =
                raw.iter().enumerate().map(|(i, &(q, l))| pt(&format!("m{i}"), q as f64, l as f64)).collect();
            let kept = pareto_prune(&points);
            prop_assert!(kept.windows(2).all(|w| w[0].latency_ms <= w[1].latency_ms));
            for p in &points {
                let retained = kept.contains(p);
                prop_assert!(retained || kept.iter().any(|k| dominates(k, p)));
            }
            for a in &kept {
                prop_assert!(!kept.iter().any(|b| dominates(b, a)));
            }
        }
    }

    fn model(id: &str, params_k: f64) -> Model {
        Model { id: id.into(), ref_id: id.into(), applied: vec![], params_k, theta_ref: None, layers: vec![] }
    }

    #[test]
    fn enumeration_counts() {
        let cat = ModelCatalog::new(vec![model("a", 30.0), model("b", 20.0), model("c", 10.0)]).unwrap();
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| String::from(*s)).collect();
        let thr: Vec<TvThreshold> = (0..10).map(|i| TvThreshold::new(i as f64).unwrap()).collect();
        assert_eq!(enumerate_designs(&cat, &ids, &thr).unwrap().len(), 60);
        assert_eq!(enumerate_designs(&cat, &ids[..1], &thr[..5]).unwrap().len(), 5);

        let equal = ModelCatalog::new(vec![model("a", 5.0), model("b", 5.0), model("c", 5.0)]).unwrap();
        assert_eq!(enumerate_designs(&equal, &ids, &thr).unwrap().len(), 90);
        assert_eq!(enumerate_designs(&cat, &[], &thr), Err(DseError::EmptySpace));
    }

    struct Fixture {
        catalog: ModelCatalog,
        profile: DeviceProfile,
        quality: QualityProfile,
        calibration: CalibrationSet,
    }

    /// Two models; `small` is strictly worse than `big` on every patch.
    fn fixture() -> Fixture {
        let catalog = ModelCatalog::new(vec![model("big", 100.0), model("small", 20.0)]).unwrap();
        let engines = EngineSet::new(vec![
            Engine::new("CPU", "FP32", true),
            Engine::new("GPU", "FP16", true),
            Engine::new("DSP", "INT8", false),
        ])
        .unwrap();
        let mut t = BTreeMap::new();
        t.insert("big".into(), vec![Some(70.0), Some(45.0), Some(20.0)]);
        t.insert("small".into(), vec![Some(16.0), Some(40.0), Some(15.0)]);
        let profile = DeviceProfile::new(engines, (90, 160), 2.0, t).unwrap();
        let tvs = [3.0, 40.0, 12.0, 25.0, 7.0, 33.0, 18.0, 1.0];
        let records = tvs
            .iter()
            .enumerate()
            .map(|(i, &tv)| {
                let mut psnr = BTreeMap::new();
                psnr.insert("big".into(), 40.0 - tv / 4.0);
                psnr.insert("small".into(), 40.0 - tv / 4.0 - 1.5 + tv / 40.0);
                QualityRecord { patch_id: format!("p{i}"), tv: TvValue::new(tv).unwrap(), psnr, psnr_reduced: BTreeMap::new() }
            })
            .collect();
        Fixture {
            catalog,
            profile,
            quality: QualityProfile::new(records).unwrap(),
            calibration: CalibrationSet::from_raw(&tvs).unwrap(),
        }
    }

    fn request<'a>(f: &'a Fixture, eps: f64, n_tv: usize) -> DseRequest<'a> {
        DseRequest {
            catalog: &f.catalog,
            profile: &f.profile,
            quality: &f.quality,
            calibration: &f.calibration,
            eps_max_db: eps,
            n_tv,
            reference: "big",
            mode: SearchMode::Exhaustive,
        }
    }

    #[test]
    fn inactive_constraint_picks_global_fastest() {
        let f = fixture();
        let out = search(request(&f, f64::INFINITY, 3)).unwrap();
        assert_eq!(out.status, SearchStatus::Feasible);
        assert!(out.table.iter().all(|r| r.feasible));
        let fastest = out.table.iter().map(|r| r.latency_ms).fold(f64::INFINITY, f64::min);
        assert_eq!(out.winner.latency_ms, fastest);
        assert_eq!(out.winner.thr, out.thresholds[0]);
        assert_eq!(out.table.len(), 3 * 3);
    }

    #[test]
    fn zero_tolerance_forces_all_easy() {
        let f = fixture();
        let cat = ModelCatalog::new(vec![model("big", 100.0), model("small", 20.0)]).unwrap();
        let mut req = request(&f, 0.0, 4);
        req.catalog = &cat;
        let out = search(req).unwrap();
        assert_eq!(out.status, SearchStatus::Feasible);
        assert!(out.winner.psnr_drop_db <= 0.0);
        let max_tv = f.calibration.max();
        for r in out.table.iter().filter(|r| r.feasible && r.m2 == "small" && r.m1 == "big") {
            assert!(r.thr.value() >= max_tv);
        }
    }

    #[test]
    fn no_feasible_is_reported() {
        let f = fixture();
        let mut reduced = f.quality.records().to_vec();
        for r in &mut reduced {
            for m in ["big", "small"] {
                r.psnr_reduced.insert(m.into(), r.psnr[m] - 3.0);
            }
        }
        let quality = QualityProfile::new(reduced).unwrap();
        let profile = {
            let mut t = f.profile.table().clone();
            t.get_mut("big").unwrap()[0] = None;
            t.get_mut("big").unwrap()[1] = None;
            DeviceProfile::new(f.profile.engines().clone(), (90, 160), 0.0, t).unwrap()
        };
        let req = DseRequest { quality: &quality, profile: &profile, ..request(&f, 0.0, 3) };
        assert!(matches!(search(req), Err(DseError::Baseline(_))));

        let cat = ModelCatalog::new(vec![model("big", 100.0)]).unwrap();
        let req = DseRequest { quality: &quality, catalog: &cat, eps_max_db: 0.0, ..request(&f, 0.0, 3) };
        let out = search(req).unwrap();
        // The lowest threshold sends hard patches to the DSP at reduced precision.
        assert_eq!(out.winner.psnr_drop_db, 0.0);
        let req = DseRequest { quality: &quality, eps_max_db: 0.1, n_tv: 2, ..request(&f, 0.0, 2) };
        let outcome = search(req).unwrap();
        assert!(outcome.table.iter().any(|r| !r.feasible));
    }

    #[test]
    fn request_validation() {
        let f = fixture();
        assert_eq!(search(request(&f, -1.0, 3)).unwrap_err(), DseError::InvalidTolerance(-1.0));
        assert!(matches!(search(request(&f, 1.0, 1)), Err(DseError::Threshold(_))));
        let req = DseRequest { reference: "nope", ..request(&f, 1.0, 3) };
        assert_eq!(search(req).unwrap_err(), DseError::UnknownReference("nope".into()));
    }

    #[test]
    fn screened_mode_simulates_winner() {
        let f = fixture();
        let req = DseRequest { mode: SearchMode::Screened, ..request(&f, 1.0, 5) };
        let out = search(req).unwrap();
        assert_eq!(out.winner.estimator, EstimatorKind::Simulated);
        assert_eq!(out.table.len(), 15);
        assert_eq!(out.table.iter().filter(|r| r.estimator == EstimatorKind::Simulated).count(), 2);
    }

    #[test]
    fn tolerance_monotone_and_deterministic() {
        let f = fixture();
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.25, 0.5, 1.0, 2.0, f64::INFINITY] {
            let out = search(request(&f, eps, 6)).unwrap();
            assert_eq!(out, search(request(&f, eps, 6)).unwrap());
            if out.status == SearchStatus::Feasible {
                assert!(out.winner.psnr_drop_db <= eps);
                assert!(out.winner.latency_ms <= last);
                last = out.winner.latency_ms;
            }
        }
    }
}
