//! Command-line surface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use srplan_core::imaging::upscale_reference;
use srplan_core::tv::total_variation_with;
use srplan_core::{
    engine_fronts, fractional_lower_bound, is_hard, pareto_prune, partition, quality_of_schedule, schedule,
    stitch, strict_split_estimate, strict_split_quality, synthesize_quality, CalibrationSet, DeviceProfile,
    DseRequest, LatencyEstimate, ModelCatalog, ModelPair, ParetoPoint, PatchSize, PiecewiseLinear,
    QualityCurve, QualityProfile, SearchMode, SearchStatus, TvChannels, TvThreshold, TvValue, UpscaleMode,
};

use crate::formats::{self, FormatError};
use crate::report::{self, EpsPoint, Output, ThrPoint};
use crate::{pnm, search_parallel};

/// Process exit status of a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Io = 1,
    Flags = 2,
    Validation = 3,
    NoFeasible = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    fn flags(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Flags, message)
    }

    fn invalid(message: impl ToString) -> Self {
        Self::new(ExitKind::Validation, message.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let kind = if e.is_io() { ExitKind::Io } else { ExitKind::Validation };
        Self::new(kind, e.to_string())
    }
}

impl From<pnm::PnmError> for CliError {
    fn from(e: pnm::PnmError) -> Self {
        Self::new(ExitKind::Io, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "srplan", version, about = "Plan tiled two-model super-resolution on heterogeneous SoCs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-patch total variation of an image.
    Tv(TvArgs),
    /// Patch layout of an image, optionally upscaled and stitched back.
    Partition(PartitionArgs),
    /// Simulate the dispatch of one design.
    Simulate(DesignArgs),
    /// Analytical latency estimates of one design next to the simulation.
    Estimate(EstimateArgs),
    /// Per-engine Pareto fronts.
    Prune(PruneArgs),
    /// Search the design space under a PSNR-drop budget.
    Search(SearchArgs),
    /// Plot series: latency/quality against threshold or speedup against budget.
    Report(ReportArgs),
    /// Synthetic quality profile from a PSNR-vs-TV curve.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// `HEIGHTxWIDTH`, e.g. `90x160`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchArg(pub PatchSize);

impl FromStr for PatchArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (h, w) = s.split_once(['x', 'X']).ok_or("expected HEIGHTxWIDTH")?;
        let h: usize = h.trim().parse().map_err(|_| format!("bad height {h:?}"))?;
        let w: usize = w.trim().parse().map_err(|_| format!("bad width {w:?}"))?;
        if h == 0 || w == 0 {
            return Err("patch dimensions must be positive".into());
        }
        Ok(PatchArg(PatchSize::new(h, w)))
    }
}

/// A TV threshold: a nonnegative number or `inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrArg(pub TvThreshold);

impl FromStr for ThrArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_db(s)?;
        TvThreshold::new(v).map(ThrArg).map_err(|e| e.to_string())
    }
}

fn parse_db(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| format!("expected a number or inf, got {t:?}")),
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v = parse_db(s)?;
    if v.is_nan() || v < 0.0 {
        return Err("tolerance must be nonnegative".into());
    }
    Ok(v)
}

#[derive(Debug, Args)]
pub struct PatchArgs {
    #[arg(long, default_value = "90x160")]
    pub patch: PatchArg,
    #[arg(long, default_value_t = srplan_core::imaging::DEFAULT_OVERLAP)]
    pub overlap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelsArg {
    Luma,
    Sum,
}

#[derive(Debug, Args)]
pub struct TvArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[arg(long, value_enum, default_value = "luma")]
    pub channels: ChannelsArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Nearest,
    Bicubic,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub patch: PatchArgs,
    /// Upscale every patch with the reference interpolator, stitch, and write
    /// the result here.
    #[arg(long)]
    pub upscale_out: Option<PathBuf>,
    #[arg(long, default_value_t = 4, requires = "upscale_out")]
    pub scale: usize,
    #[arg(long, value_enum, default_value = "bicubic", requires = "upscale_out")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Where patch TVs come from; exactly one source.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TvSource {
    /// Partition this image and score each patch.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Use the TVs of a calibration set, in order.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Use the TVs of the quality records; also reports achieved PSNR.
    #[arg(long)]
    pub quality: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// Accurate model, run on PSNR-preserving engines.
    #[arg(long)]
    pub m1: String,
    /// Compact model, run on the remaining engines.
    #[arg(long)]
    pub m2: String,
    #[arg(long)]
    pub thr: ThrArg,
    #[command(flatten)]
    pub source: TvSource,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Comma-separated share of easy patches per PSNR-preserving engine;
    /// proportional to engine speed when absent.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Explicit points `{"points": [{"model", "psnr_db", "latency_ms"}]}`.
    #[arg(long, conflicts_with_all = ["profile", "quality", "catalog"], required_unless_present = "profile")]
    pub points: Option<PathBuf>,
    #[arg(long, requires = "quality")]
    pub profile: Option<PathBuf>,
    #[arg(long, requires = "profile")]
    pub quality: Option<PathBuf>,
    /// Restrict to the catalog's models.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SearchInputs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    /// Scored patches: per-patch TV and PSNR of every model.
    #[arg(long)]
    pub quality: PathBuf,
    /// TV sample fixing the threshold grid; the quality TVs when absent.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "m_ref")]
    pub reference: String,
    #[arg(long, default_value_t = 10)]
    pub n_tv: usize,
    /// Screen with the strict-split estimator and simulate the best tenth.
    #[arg(long)]
    pub screened: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub inputs: SearchInputs,
    /// Tolerated PSNR drop against the reference, in dB (`inf` allowed).
    #[arg(long, value_parser = parse_eps)]
    pub eps_max: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Series {
    /// Latency and PSNR of one pair across the threshold grid.
    Thr,
    /// Winning design and speedup across PSNR budgets.
    Eps,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum)]
    pub series: Series,
    #[command(flatten)]
    pub inputs: SearchInputs,
    #[arg(long, required_if_eq("series", "thr"))]
    pub m1: Option<String>,
    #[arg(long, required_if_eq("series", "thr"))]
    pub m2: Option<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_eps, default_value = "0,0.5,1,2,inf")]
    pub eps_list: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Curve `{"base": [[tv, db], ..], "models": [{"id", "gap": [[tv, db], ..],
    /// "reduced_penalty_db"?}], "noise_db"}`; models from most to least accurate.
    #[arg(long)]
    pub curve: PathBuf,
    #[command(flatten)]
    pub source: SynthSource,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SynthSource {
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

fn image_tvs(path: &Path, patch: &PatchArgs, channels: TvChannels) -> Result<Vec<TvValue>, CliError> {
    let image = pnm::read(path)?;
    let (_, patches) = partition(&image, patch.patch.0, patch.overlap).map_err(CliError::invalid)?;
    Ok(patches.iter().map(|p| total_variation_with(&p.image, channels)).collect())
}

fn load_tvs(source: &TvSource, patch: &PatchArgs) -> Result<(Vec<TvValue>, Option<QualityProfile>), CliError> {
    if let Some(path) = &source.image {
        return Ok((image_tvs(path, patch, TvChannels::Luma)?, None));
    }
    if let Some(path) = &source.calibration {
        return Ok((formats::load_calibration(path)?.values().to_vec(), None));
    }
    let path = source.quality.as_ref().expect("clap enforces one source");
    let quality = formats::load_quality_profile(path)?;
    Ok((quality.tvs(), Some(quality)))
}

fn emit(output: &OutputArgs, result: &Output, default: Format) -> Result<(), CliError> {
    let bytes = match output.format.unwrap_or(default) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&result.json).expect("JSON values serialize");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => result.table.to_csv(),
    };
    write_bytes(output.out.as_deref(), &bytes)
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::new(ExitKind::Io, format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::new(ExitKind::Io, e.to_string())),
    }
}

fn cmd_tv(args: &TvArgs) -> Result<(), CliError> {
    let image = pnm::read(&args.image)?;
    let (plan, patches) = partition(&image, args.patch.patch.0, args.patch.overlap).map_err(CliError::invalid)?;
    let channels = match args.channels {
        ChannelsArg::Luma => TvChannels::Luma,
        ChannelsArg::Sum => TvChannels::ChannelSum,
    };
    let tvs: Vec<f64> = patches.iter().map(|p| total_variation_with(&p.image, channels).value()).collect();
    let out = report::tv_output(&plan, (image.width(), image.height(), image.channels()), &tvs);
    emit(&args.output, &out, Format::Json)
}

fn cmd_partition(args: &PartitionArgs) -> Result<(), CliError> {
    let image = pnm::read(&args.image)?;
    let (plan, patches) = partition(&image, args.patch.patch.0, args.patch.overlap).map_err(CliError::invalid)?;
    let mut upscaled = None;
    if let Some(path) = &args.upscale_out {
        let mode = match args.mode {
            ModeArg::Nearest => UpscaleMode::Nearest,
            ModeArg::Bicubic => UpscaleMode::Bicubic,
        };
        let up = patches
            .iter()
            .map(|p| upscale_reference(p, args.scale, mode))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::flags(e.to_string()))?;
        let big = stitch(&up, &plan, args.scale).map_err(CliError::invalid)?;
        pnm::write(path, &big)?;
        upscaled = Some(json!({
            "path": path.display().to_string(),
            "scale": args.scale,
            "mode": if mode == UpscaleMode::Nearest { "nearest" } else { "bicubic" },
            "width": big.width(),
            "height": big.height(),
        }));
    }
    let out = report::partition_output(&plan, (image.width(), image.height(), image.channels()), upscaled);
    emit(&args.output, &out, Format::Json)
}

fn design_inputs(args: &DesignArgs) -> Result<(DeviceProfile, Vec<TvValue>, Option<QualityProfile>), CliError> {
    let profile = formats::load_device_profile(&args.profile)?;
    let (tvs, quality) = load_tvs(&args.source, &args.patch)?;
    if tvs.is_empty() {
        return Err(CliError::invalid("no patches to schedule"));
    }
    Ok((profile, tvs, quality))
}

fn cmd_simulate(args: &DesignArgs) -> Result<(), CliError> {
    let (profile, tvs, quality) = design_inputs(args)?;
    let pair = ModelPair::new(&args.m1, &args.m2);
    let result = schedule(&tvs, &pair, args.thr.0, &profile).map_err(CliError::invalid)?;
    let summary = match &quality {
        Some(q) => Some(quality_of_schedule(&result, q, &profile).map_err(CliError::invalid)?),
        None => None,
    };
    emit(&args.output, &report::schedule_output(&result, args.thr.0, &profile, summary.as_ref()), Format::Json)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let d = &args.design;
    let (profile, tvs, quality) = design_inputs(d)?;
    let pair = ModelPair::new(&d.m1, &d.m2);
    let thr = d.thr.0;
    let sim = schedule(&tvs, &pair, thr, &profile).map_err(CliError::invalid)?;
    let mut estimates = Vec::new();
    match strict_split_estimate(&tvs, &pair, thr, &profile, args.split.as_deref()) {
        Ok(e) => estimates.push(e),
        Err(e @ srplan_core::ScheduleError::CompactUnavailable(_)) => eprintln!("strict-split skipped: {e}"),
        Err(e) => return Err(CliError::invalid(e)),
    }
    estimates.push(fractional_lower_bound(&tvs, &pair, thr, &profile).map_err(CliError::invalid)?);
    estimates.push(LatencyEstimate::from_schedule(&sim, &profile));
    let mut quality_rows = Vec::new();
    if let Some(q) = &quality {
        quality_rows.push(("strict_split", strict_split_quality(q, &pair, thr).map_err(CliError::invalid)?));
        quality_rows.push(("simulated", quality_of_schedule(&sim, q, &profile).map_err(CliError::invalid)?));
    }
    emit(&d.output, &report::estimate_output(&d.m1, &d.m2, thr, &estimates, &quality_rows), Format::Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsFile {
    points: Vec<PointDto>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDto {
    model: String,
    psnr_db: f64,
    latency_ms: f64,
}

fn cmd_prune(args: &PruneArgs) -> Result<(), CliError> {
    let (fronts, retained) = if let Some(path) = &args.points {
        let file: PointsFile = serde_json::from_str(&formats::read_text(path)?).map_err(CliError::invalid)?;
        if file.points.is_empty() {
            return Err(CliError::invalid("no points to prune"));
        }
        let mut points = Vec::new();
        for p in file.points {
            if !(p.psnr_db.is_finite() && p.latency_ms.is_finite()) {
                return Err(CliError::invalid(format!("point {} is not finite", p.model)));
            }
            points.push(ParetoPoint { model: p.model, psnr_db: p.psnr_db, latency_ms: p.latency_ms });
        }
        let front = pareto_prune(&points);
        let mut retained: Vec<String> = Vec::new();
        for p in &front {
            if !retained.contains(&p.model) {
                retained.push(p.model.clone());
            }
        }
        (vec![(None, front)], retained)
    } else {
        let profile = formats::load_device_profile(args.profile.as_deref().expect("clap enforces"))?;
        let quality = formats::load_quality_profile(args.quality.as_deref().expect("clap enforces"))?;
        let models: Vec<String> = match &args.catalog {
            Some(path) => formats::load_catalog(path)?.models().iter().map(|m| m.id.clone()).collect(),
            None => profile.models().map(String::from).collect(),
        };
        let fronts = engine_fronts(&profile, &quality, &models).map_err(CliError::invalid)?;
        let retained =
            models.iter().filter(|m| fronts.iter().any(|f| f.iter().any(|p| &&p.model == m))).cloned().collect();
        let named = profile.engines().engines().iter().map(|e| Some(e.name.clone())).zip(fronts).collect();
        (named, retained)
    };
    emit(&args.output, &report::prune_output(&fronts, &retained), Format::Json)
}

struct SearchData {
    catalog: ModelCatalog,
    profile: DeviceProfile,
    quality: QualityProfile,
    calibration: CalibrationSet,
}

impl SearchData {
    fn load(inputs: &SearchInputs) -> Result<Self, CliError> {
        let catalog = formats::load_catalog(&inputs.catalog)?;
        let profile = formats::load_device_profile(&inputs.profile)?;
        let quality = formats::load_quality_profile(&inputs.quality)?;
        quality.check_models(|m| catalog.get(m).is_some()).map_err(CliError::invalid)?;
        let calibration = match &inputs.calibration {
            Some(path) => formats::load_calibration(path)?,
            None => CalibrationSet::new(quality.tvs(), Vec::new()).map_err(CliError::invalid)?,
        };
        Ok(Self { catalog, profile, quality, calibration })
    }

    fn request<'a>(&'a self, inputs: &'a SearchInputs, eps_max_db: f64) -> DseRequest<'a> {
        DseRequest {
            catalog: &self.catalog,
            profile: &self.profile,
            quality: &self.quality,
            calibration: &self.calibration,
            eps_max_db,
            n_tv: inputs.n_tv,
            reference: &inputs.reference,
            mode: if inputs.screened { SearchMode::Screened } else { SearchMode::Exhaustive },
        }
    }
}

fn cmd_search(args: &SearchArgs) -> Result<(), CliError> {
    let data = SearchData::load(&args.inputs)?;
    let outcome = search_parallel(data.request(&args.inputs, args.eps_max)).map_err(CliError::invalid)?;
    let out = report::search_output(&outcome, &args.inputs.reference, args.eps_max, args.inputs.n_tv);
    emit(&args.output, &out, Format::Json)?;
    if outcome.status == SearchStatus::NoFeasible {
        return Err(CliError::new(
            ExitKind::NoFeasible,
            format!("no design within {} dB; closest drop is {} dB", args.eps_max, outcome.winner.psnr_drop_db),
        ));
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let data = SearchData::load(&args.inputs)?;
    let out = match args.series {
        Series::Thr => {
            let pair = ModelPair::new(args.m1.as_deref().expect("clap enforces"), args.m2.as_deref().expect("clap"));
            let thresholds = srplan_core::candidate_thresholds(&data.calibration, args.inputs.n_tv)
                .map_err(CliError::invalid)?;
            let points = thr_series(&data.profile, &data.quality, &pair, &thresholds)?;
            report::thr_series_output(&pair.accurate, &pair.compact, &points)
        }
        Series::Eps => {
            let mut points = Vec::new();
            let mut reference_latency = f64::NAN;
            for &eps in &args.eps_list {
                let o = search_parallel(data.request(&args.inputs, eps)).map_err(CliError::invalid)?;
                reference_latency = o.reference_latency_ms;
                points.push(EpsPoint {
                    eps_max_db: eps,
                    status: o.status,
                    speedup: o.reference_latency_ms / o.winner.latency_ms,
                    winner: o.winner,
                });
            }
            report::eps_series_output(&args.inputs.reference, reference_latency, &points)
        }
    };
    emit(&args.output, &out, Format::Csv)
}

/// Strict-split, simulated and bound figures of one pair at each threshold,
/// from the largest threshold down.
pub fn thr_series(
    profile: &DeviceProfile,
    quality: &QualityProfile,
    pair: &ModelPair,
    thresholds: &[TvThreshold],
) -> Result<Vec<ThrPoint>, CliError> {
    let tvs = quality.tvs();
    let mut order = thresholds.to_vec();
    order.sort_by(|a, b| b.value().total_cmp(&a.value()));
    let mut points = Vec::with_capacity(order.len());
    for thr in order {
        let (strict_latency_ms, strict_psnr_db) = match strict_split_estimate(&tvs, pair, thr, profile, None) {
            Ok(e) => (e.latency_ms, strict_split_quality(quality, pair, thr).map_err(CliError::invalid)?.mean_db),
            Err(srplan_core::ScheduleError::CompactUnavailable(_)) => (f64::NAN, f64::NAN),
            Err(e) => return Err(CliError::invalid(e)),
        };
        let sim = schedule(&tvs, pair, thr, profile).map_err(CliError::invalid)?;
        points.push(ThrPoint {
            thr,
            hard_patches: tvs.iter().filter(|&&tv| is_hard(tv, thr)).count(),
            strict_latency_ms,
            strict_psnr_db,
            simulated_latency_ms: sim.makespan_ms,
            simulated_psnr_db: quality_of_schedule(&sim, quality, profile).map_err(CliError::invalid)?.mean_db,
            bound_ms: fractional_lower_bound(&tvs, pair, thr, profile).map_err(CliError::invalid)?.latency_ms,
        });
    }
    Ok(points)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    base: Vec<(f64, f64)>,
    models: Vec<CurveModel>,
    #[serde(default)]
    noise_db: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveModel {
    id: String,
    gap: Vec<(f64, f64)>,
    #[serde(default)]
    reduced_penalty_db: Option<f64>,
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let file: CurveFile = serde_json::from_str(&formats::read_text(&args.curve)?).map_err(CliError::invalid)?;
    let reduced_penalty_db =
        file.models.iter().filter_map(|m| m.reduced_penalty_db.map(|p| (m.id.clone(), p))).collect();
    let curve = QualityCurve {
        base: PiecewiseLinear::new(file.base).map_err(CliError::invalid)?,
        models: file
            .models
            .into_iter()
            .map(|m| Ok((m.id, PiecewiseLinear::new(m.gap).map_err(CliError::invalid)?)))
            .collect::<Result<_, CliError>>()?,
        noise_db: file.noise_db,
        reduced_penalty_db,
    };
    let tvs = match (&args.source.image, &args.source.calibration) {
        (Some(path), _) => image_tvs(path, &args.patch, TvChannels::Luma)?,
        (_, Some(path)) => formats::load_calibration(path)?.values().to_vec(),
        _ => unreachable!("clap enforces one source"),
    };
    let quality = synthesize_quality(&tvs, &curve, args.seed).map_err(CliError::invalid)?;
    let mut s = serde_json::to_string_pretty(&formats::quality_profile_json(&quality)).expect("serializes");
    s.push('\n');
    write_bytes(args.out.as_deref(), s.as_bytes())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tv(a) => cmd_tv(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Search(a) => cmd_search(a),
        Command::Report(a) => cmd_report(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
