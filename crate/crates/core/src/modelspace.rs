//! Model descriptors and the multiply-accumulate calculus for compressed
//! convolution blocks.
//!
//! A [`Model`] is a reference topology plus the set of transformations that
//! were applied to its core 3x3 convolutions. Workload is counted in MACs of
//! convolution layers only; activations, channel shuffles, splits,
//! concatenations and residual adds are free.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("layer shape fields must all be at least 1")]
    ZeroDimension,
    #[error("{what} = {value} is not divisible by {divisor}")]
    NotDivisible { what: &'static str, value: u64, divisor: u64 },
    #[error("MAC count overflows")]
    Overflow,
    #[error("transformation {0} has no closed-form reduction; cost it with block_macs")]
    NoFormula(Transformation),
    #[error("transformation parameter must be at least 1")]
    InvalidParameter,
    #[error("no building block implements the transformation set {{{0}}}")]
    UnsupportedCombination(String),
    #[error("transformed layers must be ungrouped (got g = {0})")]
    GroupedCoreLayer(u64),
    #[error("block {0} keeps the channel count; needs S == D")]
    ChannelChange(&'static str),
    #[error("model {0} has no layers")]
    NoLayers(String),
    #[error("model {0}: parameter count must be positive")]
    InvalidParams(String),
    #[error("duplicate model id {0}")]
    DuplicateModel(String),
    #[error("model {model} refers to unknown reference {reference}")]
    UnknownReference { model: String, reference: String },
    #[error("reference model {0} must have no applied transformations")]
    TransformedReference(String),
    #[error("model {0} lists a transformation kind twice")]
    RepeatedTransformation(String),
}

/// Shape of one convolution: `S` input channels, `D` output channels, a
/// `K_h x K_w` kernel over an `F_h x F_w` output map, `g` groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerShape {
    pub in_channels: u64,
    pub out_channels: u64,
    pub kernel_h: u64,
    pub kernel_w: u64,
    pub out_h: u64,
    pub out_w: u64,
    pub groups: u64,
}

impl LayerShape {
    pub const fn new(in_channels: u64, out_channels: u64, kernel: (u64, u64), out: (u64, u64)) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_h: kernel.0,
            kernel_w: kernel.1,
            out_h: out.0,
            out_w: out.1,
            groups: 1,
        }
    }

    pub const fn with_groups(mut self, groups: u64) -> Self {
        self.groups = groups;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            self.in_channels,
            self.out_channels,
            self.kernel_h,
            self.kernel_w,
            self.out_h,
            self.out_w,
            self.groups,
        ];
        if fields.contains(&0) {
            return Err(ModelError::ZeroDimension);
        }
        divisible("S", self.in_channels, self.groups)?;
        divisible("D", self.out_channels, self.groups)
    }
}

fn divisible(what: &'static str, value: u64, divisor: u64) -> Result<(), ModelError> {
    if divisor == 0 || !value.is_multiple_of(divisor) {
        Err(ModelError::NotDivisible { what, value, divisor })
    } else {
        Ok(())
    }
}

/// One element of the transformation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transformation {
    /// Residual bottleneck with channel reduction `r`.
    Rb(u32),
    /// Group convolution with `g` groups.
    Grp(u32),
    /// Depthwise separable convolution.
    Dpth,
    /// Spatially separable convolution.
    Sep,
    /// Inverted residual with expansion `e`.
    Invr(u32),
    ChlShf,
    ChlSplt,
}

impl Transformation {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rb(_) => "rb",
            Self::Grp(_) => "grp",
            Self::Dpth => "dpth",
            Self::Sep => "sep",
            Self::Invr(_) => "invr",
            Self::ChlShf => "chlshf",
            Self::ChlSplt => "chlsplt",
        }
    }

    pub fn param(&self) -> Option<u32> {
        match *self {
            Self::Rb(v) | Self::Grp(v) | Self::Invr(v) => Some(v),
            _ => None,
        }
    }

    /// Builds a transformation from its kind name and optional parameter.
    pub fn from_parts(kind: &str, param: Option<u32>) -> Option<Self> {
        let t = match (kind, param) {
            ("rb", Some(r)) if r >= 1 => Self::Rb(r),
            ("grp", Some(g)) if g >= 1 => Self::Grp(g),
            ("invr", Some(e)) if e >= 1 => Self::Invr(e),
            ("dpth", None) => Self::Dpth,
            ("sep", None) => Self::Sep,
            ("chlshf", None) => Self::ChlShf,
            ("chlsplt", None) => Self::ChlSplt,
            _ => return None,
        };
        Some(t)
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({})", self.kind(), p),
            None => f.write_str(self.kind()),
        }
    }
}

/// Checked `S·D·K_h·K_w·F_h·F_w / g`.
fn conv_macs(
    in_ch: u64,
    out_ch: u64,
    kernel: (u64, u64),
    out: (u64, u64),
    groups: u64,
) -> Result<u128, ModelError> {
    divisible("conv input channels", in_ch, groups)?;
    divisible("conv output channels", out_ch, groups)?;
    [in_ch, out_ch, kernel.0, kernel.1, out.0, out.1]
        .iter()
        .try_fold(1u128, |acc, &f| acc.checked_mul(u128::from(f)))
        .map(|p| p / u128::from(groups))
        .ok_or(ModelError::Overflow)
}

/// Cost of a standard (optionally grouped) convolution.
pub fn standard_conv_macs(shape: &LayerShape) -> Result<u128, ModelError> {
    shape.validate()?;
    conv_macs(
        shape.in_channels,
        shape.out_channels,
        (shape.kernel_h, shape.kernel_w),
        (shape.out_h, shape.out_w),
        shape.groups,
    )
}

fn bottleneck_ratio(s: f64, d: f64, k: f64, r: f64) -> f64 {
    s / (d * k * r) + s / (r * r * d) + 1.0 / (k * r)
}

/// Closed-form cost ratio of a transformation against a standard convolution
/// of the same shape.
///
/// The depthwise ratio is `1/D + 1/(K_h·K_w)²`, as the transformation is
/// conventionally tabulated; the convolutions of the depthwise block itself
/// cost `1/D + 1/(K_h·K_w)`, which is what [`block_macs`] reports.
pub fn reduction_factor(t: Transformation, shape: &LayerShape) -> Result<f64, ModelError> {
    shape.validate()?;
    let s = shape.in_channels as f64;
    let d = shape.out_channels as f64;
    let kh = shape.kernel_h as f64;
    let kw = shape.kernel_w as f64;
    let k = kh * kw;
    match t {
        Transformation::Rb(r) | Transformation::Grp(r) | Transformation::Invr(r) if r == 0 => {
            Err(ModelError::InvalidParameter)
        }
        Transformation::Rb(r) => Ok(bottleneck_ratio(s, d, k, f64::from(r))),
        Transformation::Grp(g) => Ok(1.0 / f64::from(g)),
        Transformation::Dpth => Ok(1.0 / d + 1.0 / (k * k)),
        Transformation::Sep => Ok(1.0 / kh + 1.0 / kw),
        Transformation::Invr(e) => Ok(bottleneck_ratio(s, d, k, 1.0 / f64::from(e))),
        Transformation::ChlShf | Transformation::ChlSplt => Err(ModelError::NoFormula(t)),
    }
}

/// `(in, out, (kh, kw), groups)`.
type Conv = (u64, u64, (u64, u64), u64);

/// Building blocks that replace a core convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// The untouched convolution (honours the shape's own groups).
    Standard,
    /// 1x1 reduce by `r`, KxK, 1x1 expand, residual add.
    Bottleneck { r: u32 },
    /// Bottleneck whose KxK convolution has `g` groups.
    GroupedBottleneck { r: u32, g: u32 },
    /// KxK convolution with `g` groups.
    Grouped { g: u32 },
    /// Depthwise KxK then pointwise 1x1.
    Depthwise,
    /// 1xK_w then K_hx1.
    Separable,
    /// 1x1 expand by `e`, full KxK, 1x1 project, residual add.
    InvertedResidual { e: u32 },
    /// Bottleneck with the KxK split into depthwise 1xK_w and K_hx1.
    EffNet { r: u32 },
    /// 1x1 expand by `e`, depthwise KxK, 1x1 project, residual add.
    MobileNetV2 { e: u32 },
    /// Grouped KxK, channel shuffle, pointwise 1x1.
    ClcNet { g: u32 },
    /// Grouped 1x1 reduce, shuffle, depthwise KxK, grouped 1x1 expand.
    ShuffleV1 { r: u32, g: u32 },
    /// Channel split; 1x1, depthwise KxK, 1x1 on one half; concat; shuffle.
    ShuffleV2,
    /// A block with no convolutions at all.
    Identity,
}

impl BlockKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Bottleneck { .. } => "bottleneck",
            Self::GroupedBottleneck { .. } => "grouped_bottleneck",
            Self::Grouped { .. } => "grouped",
            Self::Depthwise => "depthwise",
            Self::Separable => "separable",
            Self::InvertedResidual { .. } => "inverted_residual",
            Self::EffNet { .. } => "effnet",
            Self::MobileNetV2 { .. } => "mobilenet_v2",
            Self::ClcNet { .. } => "clcnet",
            Self::ShuffleV1 { .. } => "shufflenet_v1",
            Self::ShuffleV2 => "shufflenet_v2",
            Self::Identity => "identity",
        }
    }

    /// Block implementing an applied-transformation set.
    pub fn for_transformations(applied: &[Transformation]) -> Result<Self, ModelError> {
        use Transformation::*;
        let mut rb = None;
        let mut grp = None;
        let mut invr = None;
        let (mut dpth, mut sep, mut shf, mut splt) = (false, false, false, false);
        for t in applied {
            match *t {
                Rb(r) => rb = Some(r),
                Grp(g) => grp = Some(g),
                Invr(e) => invr = Some(e),
                Dpth => dpth = true,
                Sep => sep = true,
                ChlShf => shf = true,
                ChlSplt => splt = true,
            }
        }
        let block = match (rb, grp, invr, dpth, sep, shf, splt) {
            (None, None, None, false, false, false, false) => Self::Standard,
            (Some(r), None, None, false, false, false, false) => Self::Bottleneck { r },
            (Some(r), Some(g), None, false, false, false, false) => Self::GroupedBottleneck { r, g },
            (None, Some(g), None, false, false, false, false) => Self::Grouped { g },
            (None, None, None, true, false, false, false) => Self::Depthwise,
            (None, None, None, false, true, false, false) => Self::Separable,
            (None, None, Some(e), false, false, false, false) => Self::InvertedResidual { e },
            (Some(r), None, None, true, true, false, false) => Self::EffNet { r },
            (None, None, Some(e), true, false, false, false) => Self::MobileNetV2 { e },
            (None, Some(g), None, false, false, true, false) => Self::ClcNet { g },
            (Some(r), Some(g), None, true, false, true, false) => Self::ShuffleV1 { r, g },
            (None, None, None, true, false, true, true) => Self::ShuffleV2,
            _ => {
                let names: Vec<String> = applied.iter().map(|t| alloc::format!("{t}")).collect();
                return Err(ModelError::UnsupportedCombination(names.join(", ")));
            }
        };
        Ok(block)
    }

    /// Convolutions of this block as `(in, out, (kh, kw), groups)`.
    fn convs(&self, shape: &LayerShape) -> Result<Vec<Conv>, ModelError> {
        let s = shape.in_channels;
        let d = shape.out_channels;
        let k = (shape.kernel_h, shape.kernel_w);
        let one = (1, 1);
        let div = |what, value: u64, by: u32| -> Result<u64, ModelError> {
            let by = u64::from(by);
            if by == 0 {
                return Err(ModelError::InvalidParameter);
            }
            divisible(what, value, by)?;
            Ok(value / by)
        };
        let mul = |value: u64, by: u32| -> Result<u64, ModelError> {
            if by == 0 {
                return Err(ModelError::InvalidParameter);
            }
            value.checked_mul(u64::from(by)).ok_or(ModelError::Overflow)
        };
        let convs = match *self {
            Self::Standard => alloc::vec![(s, d, k, shape.groups)],
            Self::Identity => Vec::new(),
            Self::Bottleneck { r } => {
                let m = div("S/r", s, r)?;
                alloc::vec![(s, m, one, 1), (m, m, k, 1), (m, d, one, 1)]
            }
            Self::GroupedBottleneck { r, g } => {
                let m = div("S/r", s, r)?;
                alloc::vec![(s, m, one, 1), (m, m, k, u64::from(g)), (m, d, one, 1)]
            }
            Self::Grouped { g } => alloc::vec![(s, d, k, u64::from(g))],
            Self::Depthwise => alloc::vec![(s, s, k, s), (s, d, one, 1)],
            Self::Separable => alloc::vec![(s, d, (1, k.1), 1), (d, d, (k.0, 1), 1)],
            Self::InvertedResidual { e } => {
                let m = mul(s, e)?;
                alloc::vec![(s, m, one, 1), (m, m, k, 1), (m, d, one, 1)]
            }
            Self::EffNet { r } => {
                let m = div("S/r", s, r)?;
                alloc::vec![(s, m, one, 1), (m, m, (1, k.1), m), (m, m, (k.0, 1), m), (m, d, one, 1)]
            }
            Self::MobileNetV2 { e } => {
                let m = mul(s, e)?;
                alloc::vec![(s, m, one, 1), (m, m, k, m), (m, d, one, 1)]
            }
            Self::ClcNet { g } => alloc::vec![(s, s, k, u64::from(g)), (s, d, one, 1)],
            Self::ShuffleV1 { r, g } => {
                let m = div("S/r", s, r)?;
                let g = u64::from(g);
                alloc::vec![(s, m, one, g), (m, m, k, m), (m, d, one, g)]
            }
            Self::ShuffleV2 => {
                if s != d {
                    return Err(ModelError::ChannelChange("shufflenet_v2"));
                }
                let h = div("S/2", s, 2)?;
                alloc::vec![(h, h, one, 1), (h, h, k, h), (h, h, one, 1)]
            }
        };
        Ok(convs)
    }
}

/// MACs of a block and its ratio to the standard convolution of that shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCost {
    pub macs: u128,
    pub reduction: f64,
}

/// Sums the convolution costs of `block` applied to `shape`.
pub fn block_macs(block: BlockKind, shape: &LayerShape) -> Result<BlockCost, ModelError> {
    shape.validate()?;
    if !matches!(block, BlockKind::Standard) && shape.groups != 1 {
        return Err(ModelError::GroupedCoreLayer(shape.groups));
    }
    let out = (shape.out_h, shape.out_w);
    let macs = block.convs(shape)?.into_iter().try_fold(0u128, |acc, (i, o, k, g)| {
        acc.checked_add(conv_macs(i, o, k, out, g)?).ok_or(ModelError::Overflow)
    })?;
    let reference = standard_conv_macs(shape)?;
    Ok(BlockCost { macs, reduction: macs as f64 / reference as f64 })
}

/// A convolution of the model; `fixed` layers are never transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub shape: LayerShape,
    pub fixed: bool,
}

/// `⟨reference topology, applied transformations, weights⟩` plus the layer
/// list used for workload accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub id: String,
    pub ref_id: String,
    pub applied: Vec<Transformation>,
    /// Parameter count, in thousands.
    pub params_k: f64,
    /// Opaque handle to trained weights; never dereferenced here.
    pub theta_ref: Option<String>,
    pub layers: Vec<Layer>,
}

impl Model {
    pub fn is_reference(&self) -> bool {
        self.id == self.ref_id
    }

    pub fn block(&self) -> Result<BlockKind, ModelError> {
        BlockKind::for_transformations(&self.applied)
    }
}

/// Total MACs: transformed core layers cost their block, fixed layers cost a
/// standard convolution.
pub fn model_macs(model: &Model) -> Result<u128, ModelError> {
    if model.layers.is_empty() {
        return Err(ModelError::NoLayers(model.id.clone()));
    }
    let block = model.block()?;
    model.layers.iter().try_fold(0u128, |acc, layer| {
        let macs = if layer.fixed {
            standard_conv_macs(&layer.shape)?
        } else {
            block_macs(block, &layer.shape)?.macs
        };
        acc.checked_add(macs).ok_or(ModelError::Overflow)
    })
}

/// Number of `⟨(m1, m2), thr⟩` designs before pruning: `|M|² · N_TV`.
pub fn design_count(model_count: u64, n_tv: u64) -> u64 {
    model_count * model_count * n_tv
}

/// Validated set of models.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelCatalog {
    models: Vec<Model>,
}

impl ModelCatalog {
    pub fn new(models: Vec<Model>) -> Result<Self, ModelError> {
        let mut ids = BTreeSet::new();
        for m in &models {
            if !ids.insert(m.id.as_str()) {
                return Err(ModelError::DuplicateModel(m.id.clone()));
            }
            if !(m.params_k > 0.0 && m.params_k.is_finite()) {
                return Err(ModelError::InvalidParams(m.id.clone()));
            }
            let mut kinds = BTreeSet::new();
            if !m.applied.iter().all(|t| kinds.insert(t.kind())) {
                return Err(ModelError::RepeatedTransformation(m.id.clone()));
            }
        }
        for m in &models {
            match models.iter().find(|r| r.id == m.ref_id) {
                None => {
                    return Err(ModelError::UnknownReference { model: m.id.clone(), reference: m.ref_id.clone() })
                }
                Some(r) if !r.applied.is_empty() => return Err(ModelError::TransformedReference(r.id.clone())),
                Some(_) => {}
            }
        }
        Ok(Self { models })
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn get(&self, id: &str) -> Option<&Model> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
