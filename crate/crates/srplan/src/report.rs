//! Structured outputs of the subcommands. Every float is printed with six
//! significant digits; infinities become the string `"inf"`.

use serde_json::{json, Map, Value};
use srplan_core::{
    DesignRow, DeviceProfile, LatencyEstimate, ParetoPoint, PartitionPlan, QualitySummary, ScheduleResult,
    SearchOutcome, SearchStatus, TvThreshold,
};

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

pub fn num(x: f64) -> Value {
    match x {
        f64::INFINITY => Value::from("inf"),
        f64::NEG_INFINITY => Value::from("-inf"),
        _ if x.is_nan() => Value::Null,
        _ => Value::from(sig6(x)),
    }
}

/// CSV cell for a float.
pub fn cell(x: f64) -> String {
    match x {
        f64::INFINITY => "inf".into(),
        f64::NEG_INFINITY => "-inf".into(),
        _ if x.is_nan() => String::new(),
        _ => sig6(x).to_string(),
    }
}

pub fn thr_value(thr: TvThreshold) -> Value {
    num(thr.value())
}

/// Tabular output: a header plus string rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// A finished subcommand result in both renderings.
#[derive(Debug, Clone)]
pub struct Output {
    pub json: Value,
    pub table: Table,
}

pub fn quality_json(q: &QualitySummary) -> Value {
    json!({"mean_db": num(q.mean_db), "finite": q.finite, "infinite": q.infinite})
}

pub fn tv_output(plan: &PartitionPlan, image: (usize, usize, usize), tvs: &[f64]) -> Output {
    let mut table = Table::new(&["patch_id", "row", "col", "tv"]);
    let mut rows = Vec::new();
    for (i, (&(r, c), &tv)) in plan.origins.iter().zip(tvs).enumerate() {
        table.push(vec![format!("p{i}"), r.to_string(), c.to_string(), cell(tv)]);
        rows.push(json!({"patch_id": format!("p{i}"), "row": r, "col": c, "tv": num(tv)}));
    }
    let json = json!({
        "image": {"width": image.0, "height": image.1, "channels": image.2},
        "patch": [plan.patch.height, plan.patch.width],
        "overlap": plan.overlap,
        "patches": rows,
    });
    Output { json, table }
}

pub fn partition_output(plan: &PartitionPlan, image: (usize, usize, usize), upscaled: Option<Value>) -> Output {
    let mut table = Table::new(&["patch_id", "row", "col"]);
    let mut rows = Vec::new();
    for (i, &(r, c)) in plan.origins.iter().enumerate() {
        table.push(vec![format!("p{i}"), r.to_string(), c.to_string()]);
        rows.push(json!({"patch_id": format!("p{i}"), "row": r, "col": c}));
    }
    let coverage = plan.coverage();
    let json = json!({
        "image": {"width": image.0, "height": image.1, "channels": image.2},
        "patch": [plan.patch.height, plan.patch.width],
        "overlap": plan.overlap,
        "patches": rows,
        "coverage": {
            "min": coverage.iter().copied().min().unwrap_or(0),
            "max": coverage.iter().copied().max().unwrap_or(0),
        },
        "upscaled": upscaled.unwrap_or(Value::Null),
    });
    Output { json, table }
}

fn pair_json(m1: &str, m2: &str) -> Value {
    json!({"m1": m1, "m2": m2})
}

pub fn schedule_output(
    result: &ScheduleResult,
    thr: TvThreshold,
    profile: &DeviceProfile,
    quality: Option<&QualitySummary>,
) -> Output {
    let engines = profile.engines().engines();
    let mut table = Table::new(&["patch", "engine", "model", "start_ms", "finish_ms", "hard"]);
    let mut rows = Vec::new();
    for a in &result.assignments {
        let engine = &engines[a.engine].name;
        let model = result.pair.model(a.role);
        table.push(vec![
            a.patch.to_string(),
            engine.clone(),
            model.into(),
            cell(a.start_ms),
            cell(a.finish_ms),
            a.hard.to_string(),
        ]);
        rows.push(json!({
            "patch": a.patch,
            "engine": engine,
            "model": model,
            "start_ms": num(a.start_ms),
            "finish_ms": num(a.finish_ms),
            "hard": a.hard,
        }));
    }
    let t_end: Map<String, Value> =
        engines.iter().zip(&result.engine_end_ms).map(|(e, &t)| (e.name.clone(), num(t))).collect();
    let mut json = json!({
        "kind": "simulated",
        "pair": pair_json(&result.pair.accurate, &result.pair.compact),
        "thr": thr_value(thr),
        "assignments": rows,
        "t_end_ms": t_end,
        "t_stitch_ms": num(result.t_stitch_ms),
        "makespan_ms": num(result.makespan_ms),
    });
    if let Some(q) = quality {
        json["quality"] = quality_json(q);
    }
    Output { json, table }
}

pub fn estimate_json(est: &LatencyEstimate) -> Value {
    json!({
        "kind": est.kind.label(),
        "loads": est
            .loads
            .iter()
            .map(|l| json!({"engine": l.engine, "busy_ms": num(l.busy_ms), "patches": num(l.patches)}))
            .collect::<Vec<_>>(),
        "latency_ms": num(est.latency_ms),
    })
}

pub fn estimate_output(
    m1: &str,
    m2: &str,
    thr: TvThreshold,
    estimates: &[LatencyEstimate],
    quality: &[(&'static str, QualitySummary)],
) -> Output {
    let mut table = Table::new(&["kind", "engine", "busy_ms", "patches", "latency_ms"]);
    for est in estimates {
        for l in &est.loads {
            table.push(vec![
                est.kind.label().into(),
                l.engine.clone(),
                cell(l.busy_ms),
                cell(l.patches),
                cell(est.latency_ms),
            ]);
        }
    }
    let mut json = json!({
        "pair": pair_json(m1, m2),
        "thr": thr_value(thr),
        "estimates": estimates.iter().map(estimate_json).collect::<Vec<_>>(),
    });
    if !quality.is_empty() {
        let q: Map<String, Value> = quality.iter().map(|(k, q)| ((*k).into(), quality_json(q))).collect();
        json["quality"] = Value::Object(q);
    }
    Output { json, table }
}

pub fn prune_output(fronts: &[(Option<String>, Vec<ParetoPoint>)], retained: &[String]) -> Output {
    let mut table = Table::new(&["engine", "model", "psnr_db", "latency_ms"]);
    let mut out = Vec::new();
    for (engine, points) in fronts {
        let mut rows = Vec::new();
        for p in points {
            table.push(vec![engine.clone().unwrap_or_default(), p.model.clone(), cell(p.psnr_db), cell(p.latency_ms)]);
            rows.push(json!({"model": p.model, "psnr_db": num(p.psnr_db), "latency_ms": num(p.latency_ms)}));
        }
        out.push(json!({"engine": engine, "points": rows}));
    }
    Output { json: json!({"fronts": out, "retained": retained}), table }
}

pub const DESIGN_COLUMNS: [&str; 7] = ["m1", "m2", "thr", "latency_ms", "psnr_db", "psnr_drop_db", "feasible"];

pub fn design_json(r: &DesignRow) -> Value {
    json!({
        "m1": r.m1,
        "m2": r.m2,
        "thr": thr_value(r.thr),
        "latency_ms": num(r.latency_ms),
        "psnr_db": num(r.psnr_db),
        "psnr_drop_db": num(r.psnr_drop_db),
        "feasible": r.feasible,
        "estimator": r.estimator.label(),
    })
}

pub fn design_cells(r: &DesignRow) -> Vec<String> {
    vec![
        r.m1.clone(),
        r.m2.clone(),
        cell(r.thr.value()),
        cell(r.latency_ms),
        cell(r.psnr_db),
        cell(r.psnr_drop_db),
        r.feasible.to_string(),
    ]
}

pub fn status_label(s: SearchStatus) -> &'static str {
    match s {
        SearchStatus::Feasible => "feasible",
        SearchStatus::NoFeasible => "no-feasible",
    }
}

pub fn search_output(out: &SearchOutcome, reference: &str, eps_max_db: f64, n_tv: usize) -> Output {
    let mut table = Table::new(&DESIGN_COLUMNS);
    for r in &out.table {
        table.push(design_cells(r));
    }
    let json = json!({
        "status": status_label(out.status),
        "eps_max_db": num(eps_max_db),
        "n_tv": n_tv,
        "reference": {
            "model": reference,
            "latency_ms": num(out.reference_latency_ms),
            "psnr_db": num(out.reference_psnr_db),
        },
        "retained": out.retained,
        "thresholds": out.thresholds.iter().map(|&t| thr_value(t)).collect::<Vec<_>>(),
        "winner": design_json(&out.winner),
        "table": out.table.iter().map(design_json).collect::<Vec<_>>(),
    });
    Output { json, table }
}

/// One point of the latency/quality-vs-threshold series.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrPoint {
    pub thr: TvThreshold,
    pub hard_patches: usize,
    pub strict_latency_ms: f64,
    pub strict_psnr_db: f64,
    pub simulated_latency_ms: f64,
    pub simulated_psnr_db: f64,
    pub bound_ms: f64,
}

pub const THR_COLUMNS: [&str; 7] = [
    "thr",
    "hard_patches",
    "strict_latency_ms",
    "strict_psnr_db",
    "simulated_latency_ms",
    "simulated_psnr_db",
    "bound_ms",
];

pub fn thr_series_output(m1: &str, m2: &str, points: &[ThrPoint]) -> Output {
    let mut table = Table::new(&THR_COLUMNS);
    let mut rows = Vec::new();
    for p in points {
        table.push(vec![
            cell(p.thr.value()),
            p.hard_patches.to_string(),
            cell(p.strict_latency_ms),
            cell(p.strict_psnr_db),
            cell(p.simulated_latency_ms),
            cell(p.simulated_psnr_db),
            cell(p.bound_ms),
        ]);
        rows.push(json!({
            "thr": thr_value(p.thr),
            "hard_patches": p.hard_patches,
            "strict_latency_ms": num(p.strict_latency_ms),
            "strict_psnr_db": num(p.strict_psnr_db),
            "simulated_latency_ms": num(p.simulated_latency_ms),
            "simulated_psnr_db": num(p.simulated_psnr_db),
            "bound_ms": num(p.bound_ms),
        }));
    }
    Output { json: json!({"series": "thr", "pair": pair_json(m1, m2), "rows": rows}), table }
}

/// One point of the speedup-vs-tolerance series.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsPoint {
    pub eps_max_db: f64,
    pub status: SearchStatus,
    pub winner: DesignRow,
    /// Reference latency over winner latency.
    pub speedup: f64,
}

pub const EPS_COLUMNS: [&str; 9] =
    ["eps_max_db", "status", "m1", "m2", "thr", "latency_ms", "psnr_db", "psnr_drop_db", "speedup"];

pub fn eps_series_output(reference: &str, reference_latency_ms: f64, points: &[EpsPoint]) -> Output {
    let mut table = Table::new(&EPS_COLUMNS);
    let mut rows = Vec::new();
    for p in points {
        let w = &p.winner;
        table.push(vec![
            cell(p.eps_max_db),
            status_label(p.status).into(),
            w.m1.clone(),
            w.m2.clone(),
            cell(w.thr.value()),
            cell(w.latency_ms),
            cell(w.psnr_db),
            cell(w.psnr_drop_db),
            cell(p.speedup),
        ]);
        rows.push(json!({
            "eps_max_db": num(p.eps_max_db),
            "status": status_label(p.status),
            "winner": design_json(w),
            "speedup": num(p.speedup),
        }));
    }
    let json = json!({
        "series": "eps",
        "reference": {"model": reference, "latency_ms": num(reference_latency_ms)},
        "rows": rows,
    });
    Output { json, table }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4570.08), 4570.08);
        assert_eq!(sig6(1398.407), 1398.41);
        assert_eq!(sig6(102.857142857), 102.857);
        assert_eq!(sig6(-0.0), 0.0);
        assert_eq!(cell(1.0 / 3.0), "0.333333");
        assert_eq!(cell(40.0), "40");
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(num(24.0514998), Value::from(24.0515));
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "a,b\n\"x,y\",1\n");
    }
}
