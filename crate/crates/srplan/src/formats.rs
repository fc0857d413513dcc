//! JSON file formats for device profiles, quality profiles, calibration sets
//! and model catalogs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::marker::PhantomData;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use srplan_core::{
    CalibrationSet, DeviceProfile, Engine, EngineSet, Layer, LayerShape, Model, ModelCatalog, ModelError,
    ProfileError, QualityProfile, QualityRecord, Transformation, TvError, TvValue,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tv(#[from] TvError),
}

impl FormatError {
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io { .. })
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, context: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json { context: context.into(), source })
}

/// JSON object whose keys must be unique; keeps document order.
#[derive(Debug, Clone)]
pub struct UniqueMap<V>(pub Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for UniqueMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visit<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for Visit<V> {
            type Value = UniqueMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object with unique keys")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, V>()? {
                    if !seen.insert(k.clone()) {
                        return Err(de::Error::custom(format!("duplicate key {k:?}")));
                    }
                    out.push((k, v));
                }
                Ok(UniqueMap(out))
            }
        }

        deserializer.deserialize_map(Visit(PhantomData))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EngineDto {
    name: String,
    precision: String,
    psnr_preserving: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceProfileDto {
    engines: Vec<EngineDto>,
    patch_size: [usize; 2],
    t_stitch_ms: f64,
    latency_ms: UniqueMap<UniqueMap<Option<f64>>>,
}

pub fn parse_device_profile(text: &str) -> Result<DeviceProfile, FormatError> {
    let dto: DeviceProfileDto = parse(text, "device profile")?;
    let engines =
        EngineSet::new(dto.engines.into_iter().map(|e| Engine::new(&e.name, &e.precision, e.psnr_preserving)).collect())?;
    let mut table = BTreeMap::new();
    for (model, row) in dto.latency_ms.0 {
        let mut values = vec![None; engines.len()];
        let mut given = vec![false; engines.len()];
        for (engine, v) in row.0 {
            let idx = engines
                .index_of(&engine)
                .ok_or_else(|| FormatError::Invalid(format!("latency_ms.{model}: unknown engine {engine}")))?;
            values[idx] = v;
            given[idx] = true;
        }
        if let Some(missing) = given.iter().position(|g| !g) {
            return Err(FormatError::Invalid(format!(
                "latency_ms.{model}: no entry for engine {} (use null for unavailable)",
                engines.get(missing).name
            )));
        }
        table.insert(model, values);
    }
    let [h, w] = dto.patch_size;
    if h == 0 || w == 0 {
        return Err(FormatError::Invalid("patch_size must be positive".into()));
    }
    Ok(DeviceProfile::new(engines, (h, w), dto.t_stitch_ms, table)?)
}

pub fn load_device_profile(path: &Path) -> Result<DeviceProfile, FormatError> {
    parse_device_profile(&read_text(path)?)
}

/// Exact (unrounded) JSON form of a device profile.
pub fn device_profile_json(profile: &DeviceProfile) -> Value {
    let engines = profile.engines().engines();
    let latency: Map<String, Value> = profile
        .table()
        .iter()
        .map(|(model, row)| {
            let cells: Map<String, Value> =
                engines.iter().zip(row).map(|(e, v)| (e.name.clone(), v.map_or(Value::Null, Value::from))).collect();
            (model.clone(), Value::Object(cells))
        })
        .collect();
    let (h, w) = profile.patch_size();
    json!({
        "engines": engines
            .iter()
            .map(|e| json!({"name": e.name, "precision": e.precision, "psnr_preserving": e.psnr_preserving}))
            .collect::<Vec<_>>(),
        "patch_size": [h, w],
        "t_stitch_ms": profile.t_stitch_ms(),
        "latency_ms": latency,
    })
}

/// PSNR in dB, or the string `"inf"` for a lossless result.
#[derive(Deserialize)]
#[serde(untagged)]
enum DbDto {
    Number(f64),
    Text(String),
}

impl DbDto {
    fn value(&self) -> Result<f64, String> {
        match self {
            DbDto::Number(v) => Ok(*v),
            DbDto::Text(s) if s == "inf" => Ok(f64::INFINITY),
            DbDto::Text(s) => Err(format!("expected a number or \"inf\", got {s:?}")),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDto {
    patch_id: String,
    tv: f64,
    psnr: UniqueMap<DbDto>,
    #[serde(default)]
    psnr_reduced: Option<UniqueMap<DbDto>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QualityDto {
    records: Vec<RecordDto>,
}

fn db_map(patch: &str, map: UniqueMap<DbDto>) -> Result<BTreeMap<String, f64>, FormatError> {
    map.0
        .into_iter()
        .map(|(model, v)| {
            let v = v.value().map_err(|e| FormatError::Invalid(format!("record {patch}, model {model}: {e}")))?;
            Ok((model, v))
        })
        .collect()
}

pub fn parse_quality_profile(text: &str) -> Result<QualityProfile, FormatError> {
    let dto: QualityDto = parse(text, "quality profile")?;
    let mut ids = BTreeSet::new();
    let mut records = Vec::with_capacity(dto.records.len());
    for r in dto.records {
        if !ids.insert(r.patch_id.clone()) {
            return Err(FormatError::Invalid(format!("duplicate patch_id {}", r.patch_id)));
        }
        let tv = TvValue::new(r.tv)?;
        let psnr = db_map(&r.patch_id, r.psnr)?;
        let psnr_reduced = match r.psnr_reduced {
            Some(m) => db_map(&r.patch_id, m)?,
            None => BTreeMap::new(),
        };
        records.push(QualityRecord { patch_id: r.patch_id, tv, psnr, psnr_reduced });
    }
    Ok(QualityProfile::new(records)?)
}

pub fn load_quality_profile(path: &Path) -> Result<QualityProfile, FormatError> {
    parse_quality_profile(&read_text(path)?)
}

fn db_value(v: f64) -> Value {
    if v.is_infinite() {
        Value::from("inf")
    } else {
        Value::from(v)
    }
}

pub fn quality_profile_json(quality: &QualityProfile) -> Value {
    let records: Vec<Value> = quality
        .records()
        .iter()
        .map(|r| {
            let psnr: Map<String, Value> = r.psnr.iter().map(|(k, &v)| (k.clone(), db_value(v))).collect();
            let mut obj = json!({"patch_id": r.patch_id, "tv": r.tv.value(), "psnr": psnr});
            if !r.psnr_reduced.is_empty() {
                let reduced: Map<String, Value> =
                    r.psnr_reduced.iter().map(|(k, &v)| (k.clone(), db_value(v))).collect();
                obj["psnr_reduced"] = Value::Object(reduced);
            }
            obj
        })
        .collect();
    json!({ "records": records })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDto {
    tv: Vec<f64>,
    #[serde(default)]
    sources: Vec<String>,
}

#[derive(Deserialize)]
struct TvRowDto {
    patch_id: String,
    tv: f64,
}

#[derive(Deserialize)]
struct TvReportDto {
    patches: Vec<TvRowDto>,
}

/// Accepts `{"tv": [..], "sources": [..]}` or the output of `srplan tv`.
pub fn parse_calibration(text: &str) -> Result<CalibrationSet, FormatError> {
    let value: Value = parse(text, "calibration set")?;
    if value.get("patches").is_some() {
        let dto: TvReportDto = parse(text, "calibration set")?;
        let values = dto.patches.iter().map(|p| TvValue::new(p.tv)).collect::<Result<Vec<_>, _>>()?;
        let sources = dto.patches.into_iter().map(|p| p.patch_id).collect();
        return Ok(CalibrationSet::new(values, sources)?);
    }
    let dto: CalibrationDto = parse(text, "calibration set")?;
    let values = dto.tv.iter().map(|&v| TvValue::new(v)).collect::<Result<Vec<_>, _>>()?;
    Ok(CalibrationSet::new(values, dto.sources)?)
}

pub fn load_calibration(path: &Path) -> Result<CalibrationSet, FormatError> {
    parse_calibration(&read_text(path)?)
}

pub fn calibration_json(cal: &CalibrationSet) -> Value {
    let mut obj = json!({ "tv": cal.values().iter().map(|v| v.value()).collect::<Vec<_>>() });
    if !cal.sources().is_empty() {
        obj["sources"] = json!(cal.sources());
    }
    obj
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct LayerDto {
    #[serde(rename = "in")]
    in_channels: u64,
    #[serde(rename = "out")]
    out_channels: u64,
    kernel: [u64; 2],
    out_hw: [u64; 2],
    #[serde(default = "one")]
    groups: u64,
    #[serde(default)]
    fixed: bool,
    #[serde(default = "one")]
    repeat: u64,
}

fn one() -> u64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDto {
    id: String,
    ref_id: String,
    #[serde(default)]
    transformations: Vec<String>,
    params_k: f64,
    #[serde(default)]
    theta_ref: Option<String>,
    #[serde(default)]
    layers: Option<Vec<LayerDto>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDto {
    /// Layer stack shared by every model that does not list its own.
    #[serde(default)]
    layers: Vec<LayerDto>,
    models: Vec<ModelDto>,
}

/// Parses `rb(2)`, `grp(16)`, `dpth`, ...
pub fn parse_transformation(text: &str) -> Option<Transformation> {
    let text = text.trim();
    match text.split_once('(') {
        Some((kind, rest)) => {
            let param = rest.strip_suffix(')')?.trim().parse().ok()?;
            Transformation::from_parts(kind.trim(), Some(param))
        }
        None => Transformation::from_parts(text, None),
    }
}

fn layers(dtos: &[LayerDto]) -> Vec<Layer> {
    dtos.iter()
        .flat_map(|l| {
            let shape = LayerShape::new(
                l.in_channels,
                l.out_channels,
                (l.kernel[0], l.kernel[1]),
                (l.out_hw[0], l.out_hw[1]),
            )
            .with_groups(l.groups);
            std::iter::repeat_n(Layer { shape, fixed: l.fixed }, l.repeat as usize)
        })
        .collect()
}

pub fn parse_catalog(text: &str) -> Result<ModelCatalog, FormatError> {
    let dto: CatalogDto = parse(text, "model catalog")?;
    let shared = layers(&dto.layers);
    let mut models = Vec::with_capacity(dto.models.len());
    for m in dto.models {
        let applied = m
            .transformations
            .iter()
            .map(|t| {
                parse_transformation(t)
                    .ok_or_else(|| FormatError::Invalid(format!("model {}: unknown transformation {t:?}", m.id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let layers = m.layers.as_deref().map_or_else(|| shared.clone(), layers);
        models.push(Model { id: m.id, ref_id: m.ref_id, applied, params_k: m.params_k, theta_ref: m.theta_ref, layers });
    }
    Ok(ModelCatalog::new(models)?)
}

pub fn load_catalog(path: &Path) -> Result<ModelCatalog, FormatError> {
    parse_catalog(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROFILE: &str = r#"{
        "engines": [
            {"name": "CPU", "precision": "FP32", "psnr_preserving": true},
            {"name": "DSP", "precision": "INT8", "psnr_preserving": false}
        ],
        "patch_size": [90, 160],
        "t_stitch_ms": 1.5,
        "latency_ms": {"a": {"CPU": 10.0, "DSP": null}, "b": {"DSP": 2.5, "CPU": 4}}
    }"#;

    #[test]
    fn profile_parses_and_round_trips() {
        let p = parse_device_profile(PROFILE).unwrap();
        assert_eq!(p.latency_by_name("b", "CPU").unwrap(), 4.0);
        assert!(p.latency_by_name("a", "DSP").is_err());
        let again = parse_device_profile(&device_profile_json(&p).to_string()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn profile_rejections() {
        let dup = PROFILE.replace(r#""b": {"DSP""#, r#""a": {"DSP""#);
        assert!(matches!(parse_device_profile(&dup), Err(FormatError::Json { .. })));
        let dup_engine = PROFILE.replace(r#""DSP": null"#, r#""CPU": null"#);
        assert!(parse_device_profile(&dup_engine).is_err());
        let zero = PROFILE.replace("10.0", "0");
        assert!(matches!(parse_device_profile(&zero), Err(FormatError::Profile(ProfileError::InvalidLatency { .. }))));
        let missing = PROFILE.replace(r#", "DSP": null"#, "");
        assert!(matches!(parse_device_profile(&missing), Err(FormatError::Invalid(_))));
        let unknown = PROFILE.replace(r#""DSP": null"#, r#""NPU": null"#);
        assert!(matches!(parse_device_profile(&unknown), Err(FormatError::Invalid(_))));
        let extra = PROFILE.replace(r#""t_stitch_ms""#, r#""note": 1, "t_stitch_ms""#);
        assert!(parse_device_profile(&extra).is_err());
    }

    #[test]
    fn quality_with_infinity() {
        let text = r#"{"records": [
            {"patch_id": "p0", "tv": 3, "psnr": {"a": 31.5, "b": "inf"}},
            {"patch_id": "p1", "tv": 0, "psnr": {"a": 20, "b": 19}, "psnr_reduced": {"b": 18}}
        ]}"#;
        let q = parse_quality_profile(text).unwrap();
        assert_eq!(q.records()[0].psnr["b"], f64::INFINITY);
        assert_eq!(q.records()[1].psnr_for("b", false), Some(18.0));
        assert_eq!(parse_quality_profile(&quality_profile_json(&q).to_string()).unwrap(), q);
        assert!(parse_quality_profile(&text.replace("\"inf\"", "\"nan\"")).is_err());
        assert!(parse_quality_profile(&text.replace("\"tv\": 3", "\"tv\": -3")).is_err());
        assert!(parse_quality_profile(&text.replace("p1", "p0")).is_err());
    }

    #[test]
    fn calibration_shapes() {
        let c = parse_calibration(r#"{"tv": [3, 1, 2]}"#).unwrap();
        assert_eq!(c.max(), 3.0);
        let r = parse_calibration(r#"{"patches": [{"patch_id": "p0", "row": 0, "col": 0, "tv": 4.5}]}"#).unwrap();
        assert_eq!(r.sources(), ["p0"]);
        assert!(parse_calibration(r#"{"tv": []}"#).is_err());
        assert_eq!(parse_calibration(&calibration_json(&r).to_string()).unwrap(), r);
    }

    #[test]
    fn transformations_parse() {
        assert_eq!(parse_transformation("rb(2)"), Some(Transformation::Rb(2)));
        assert_eq!(parse_transformation(" grp( 16 ) "), Some(Transformation::Grp(16)));
        assert_eq!(parse_transformation("chlsplt"), Some(Transformation::ChlSplt));
        assert_eq!(parse_transformation("rb"), None);
        assert_eq!(parse_transformation("dpth(2)"), None);
        for t in [Transformation::Invr(2), Transformation::Sep, Transformation::ChlShf] {
            assert_eq!(parse_transformation(&t.to_string()), Some(t));
        }
    }

    #[test]
    fn catalog_shared_layers() {
        let text = r#"{
            "layers": [{"in": 16, "out": 16, "kernel": [3, 3], "out_hw": [90, 160], "repeat": 3}],
            "models": [
                {"id": "r", "ref_id": "r", "params_k": 152},
                {"id": "s", "ref_id": "r", "transformations": ["dpth"], "params_k": 30, "layers": []}
            ]
        }"#;
        let cat = parse_catalog(text).unwrap();
        assert_eq!(cat.get("r").unwrap().layers.len(), 3);
        assert!(cat.get("s").unwrap().layers.is_empty());
        assert!(parse_catalog(&text.replace("dpth", "warp")).is_err());
        assert!(parse_catalog(&text.replace(r#""ref_id": "r", "trans"#, r#""ref_id": "q", "trans"#)).is_err());
    }
}
