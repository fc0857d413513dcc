//! Images, overlapping patch partitions, stitching, luma and PSNR.
//!
//! Images are row-major, interleaved, 8 bits per sample, with one (gray) or
//! three (RGB) channels. A [`PartitionPlan`] tiles an image with fixed-size
//! patches that overlap by a configurable margin; the last row and column of
//! patches are shifted inwards so every patch keeps the full size.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("patch size must be at least 1x1, got {height}x{width}")]
    EmptyPatch { height: usize, width: usize },
    #[error("overlap {overlap} must be smaller than the patch size {height}x{width}")]
    OverlapTooLarge { overlap: usize, height: usize, width: usize },
    #[error("no upscaled patch for plan entry {0}")]
    MissingPatch(usize),
    #[error("patch index {0} appears more than once or is outside the plan")]
    UnexpectedPatch(usize),
    #[error("patch {index} is {actual_h}x{actual_w}, expected {expected_h}x{expected_w}")]
    PatchDimensions {
        index: usize,
        expected_h: usize,
        expected_w: usize,
        actual_h: usize,
        actual_w: usize,
    },
    #[error("channel count mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("unsupported scale factor {0} (expected 2 or 4)")]
    UnsupportedScale(usize),
    #[error("scale factor must be at least 1")]
    ZeroScale,
}

/// An 8-bit gray or RGB raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::UnsupportedChannels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImageError::BufferLength { expected, actual: data.len() });
        }
        Ok(Self { width, height, channels, data })
    }

    /// A constant image.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Sample at `(row, col, channel)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Copies the `height x width` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Image {
        assert!(row + height <= self.height && col + width <= self.width, "crop out of bounds");
        let c = self.channels;
        let mut data = Vec::with_capacity(width * height * c);
        for r in row..row + height {
            let start = (r * self.width + col) * c;
            data.extend_from_slice(&self.data[start..start + width * c]);
        }
        Image { width, height, channels: c, data }
    }
}

/// Patch height and width in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchSize {
    pub height: usize,
    pub width: usize,
}

impl PatchSize {
    pub const fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }
}

impl Default for PatchSize {
    fn default() -> Self {
        Self::new(90, 160)
    }
}

/// Default overlap between neighbouring patches, in pixels per shared edge.
pub const DEFAULT_OVERLAP: usize = 8;

/// Deterministic, row-major layout of patches over an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub image_height: usize,
    pub image_width: usize,
    /// Patch size actually used; equals the requested size unless the image
    /// is smaller than it in some dimension.
    pub patch: PatchSize,
    pub overlap: usize,
    /// `(row, col)` of each patch's top-left corner, row-major.
    pub origins: Vec<(usize, usize)>,
}

impl PartitionPlan {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Number of patches covering each pixel, row-major.
    pub fn coverage(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.image_height * self.image_width];
        for &(r0, c0) in &self.origins {
            for r in r0..r0 + self.patch.height {
                let row = &mut counts[r * self.image_width..(r + 1) * self.image_width];
                for count in &mut row[c0..c0 + self.patch.width] {
                    *count += 1;
                }
            }
        }
        counts
    }
}

/// One tile of a partitioned image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    /// Ordinal within the partition.
    pub index: usize,
    /// Top-left corner in the source image.
    pub row: usize,
    pub col: usize,
    pub image: Image,
}

fn axis_origins(length: usize, patch: usize, overlap: usize) -> Vec<usize> {
    let stride = patch - overlap;
    let mut origins = vec![0usize];
    let mut last = 0usize;
    while last + patch < length {
        last = (last + stride).min(length - patch);
        origins.push(last);
    }
    origins
}

/// Lays out patches over a `height x width` image without touching pixels.
pub fn plan_partition(
    height: usize,
    width: usize,
    patch: PatchSize,
    overlap: usize,
) -> Result<PartitionPlan, ImageError> {
    if height == 0 || width == 0 {
        return Err(ImageError::EmptyImage { width, height });
    }
    if patch.height == 0 || patch.width == 0 {
        return Err(ImageError::EmptyPatch { height: patch.height, width: patch.width });
    }
    if overlap >= patch.height.min(patch.width) {
        return Err(ImageError::OverlapTooLarge { overlap, height: patch.height, width: patch.width });
    }
    let effective = PatchSize::new(patch.height.min(height), patch.width.min(width));
    let rows = axis_origins(height, effective.height, overlap.min(effective.height - 1));
    let cols = axis_origins(width, effective.width, overlap.min(effective.width - 1));
    let origins = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect();
    Ok(PartitionPlan { image_height: height, image_width: width, patch: effective, overlap, origins })
}

/// Splits `image` into overlapping patches.
pub fn partition(
    image: &Image,
    patch: PatchSize,
    overlap: usize,
) -> Result<(PartitionPlan, Vec<Patch>), ImageError> {
    let plan = plan_partition(image.height, image.width, patch, overlap)?;
    let patches = extract_patches(image, &plan);
    Ok((plan, patches))
}

/// Cuts the patches described by `plan` out of `image`.
pub fn extract_patches(image: &Image, plan: &PartitionPlan) -> Vec<Patch> {
    plan.origins
        .iter()
        .enumerate()
        .map(|(index, &(row, col))| Patch {
            index,
            row,
            col,
            image: image.crop(row, col, plan.patch.height, plan.patch.width),
        })
        .collect()
}

/// Reassembles upscaled patches into one image of `scale` times the planned
/// size. Overlapping samples are averaged, rounding half away from zero.
pub fn stitch(patches: &[Patch], plan: &PartitionPlan, scale: usize) -> Result<Image, ImageError> {
    if scale == 0 {
        return Err(ImageError::ZeroScale);
    }
    let mut slots: Vec<Option<&Patch>> = vec![None; plan.len()];
    for p in patches {
        match slots.get_mut(p.index) {
            Some(slot @ None) => *slot = Some(p),
            _ => return Err(ImageError::UnexpectedPatch(p.index)),
        }
    }
    let channels = match slots.iter().flatten().next() {
        Some(p) => p.image.channels,
        None => return Err(ImageError::MissingPatch(0)),
    };

    let out_h = plan.image_height * scale;
    let out_w = plan.image_width * scale;
    let ph = plan.patch.height * scale;
    let pw = plan.patch.width * scale;
    let mut sums = vec![0u32; out_h * out_w * channels];
    let mut counts = vec![0u32; out_h * out_w];

    for (index, slot) in slots.iter().enumerate() {
        let patch = slot.ok_or(ImageError::MissingPatch(index))?;
        let img = &patch.image;
        if img.height != ph || img.width != pw {
            return Err(ImageError::PatchDimensions {
                index,
                expected_h: ph,
                expected_w: pw,
                actual_h: img.height,
                actual_w: img.width,
            });
        }
        if img.channels != channels {
            return Err(ImageError::ChannelMismatch(channels, img.channels));
        }
        let (r0, c0) = plan.origins[index];
        let (r0, c0) = (r0 * scale, c0 * scale);
        for r in 0..ph {
            let out_row = r0 + r;
            for c in 0..pw {
                let px = out_row * out_w + c0 + c;
                counts[px] += 1;
                let src = (r * pw + c) * channels;
                for ch in 0..channels {
                    sums[px * channels + ch] += u32::from(img.data[src + ch]);
                }
            }
        }
    }

    let data = sums
        .iter()
        .enumerate()
        .map(|(i, &sum)| {
            let n = counts[i / channels];
            // Nonnegative operands, so half-up is half-away-from-zero.
            ((2 * sum + n) / (2 * n)) as u8
        })
        .collect();
    Image::new(out_w, out_h, channels, data)
}

/// Real-valued single-channel grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl LumaGrid {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// BT.601 luma of an RGB sample triple.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Gray passes through; RGB maps to unrounded BT.601 luma.
pub fn to_luma(image: &Image) -> LumaGrid {
    let values = match image.channels {
        1 => image.data.iter().map(|&v| f64::from(v)).collect(),
        _ => image.data.chunks_exact(3).map(|px| luma(px[0], px[1], px[2])).collect(),
    };
    LumaGrid { width: image.width, height: image.height, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpscaleMode {
    Nearest,
    Bicubic,
}

/// Catmull-Rom (`a = -0.5`) kernel.
fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps and weights for one output coordinate, edge-clamped.
fn cubic_taps(out: usize, scale: usize, len: usize) -> ([usize; 4], [f64; 4]) {
    let src = (out as f64 + 0.5) / scale as f64 - 0.5;
    let base = math::floor(src);
    let t = src - base;
    let base = base as isize;
    let mut idx = [0usize; 4];
    let mut w = [0f64; 4];
    for k in 0..4 {
        let offset = k as isize - 1;
        idx[k] = (base + offset).clamp(0, len as isize - 1) as usize;
        w[k] = cubic_weight(t - offset as f64);
    }
    (idx, w)
}

/// Upscales an image by an integer factor with a non-learned interpolator.
pub fn upscale_image(image: &Image, scale: usize, mode: UpscaleMode) -> Result<Image, ImageError> {
    if scale != 2 && scale != 4 {
        return Err(ImageError::UnsupportedScale(scale));
    }
    let (w, h, c) = (image.width, image.height, image.channels);
    let (ow, oh) = (w * scale, h * scale);
    let mut data = Vec::with_capacity(ow * oh * c);
    match mode {
        UpscaleMode::Nearest => {
            for r in 0..oh {
                for col in 0..ow {
                    for ch in 0..c {
                        data.push(image.get(r / scale, col / scale, ch));
                    }
                }
            }
        }
        UpscaleMode::Bicubic => {
            let xs: Vec<_> = (0..ow).map(|x| cubic_taps(x, scale, w)).collect();
            for r in 0..oh {
                let (ry, wy) = cubic_taps(r, scale, h);
                for (rx, wx) in &xs {
                    for ch in 0..c {
                        let mut acc = 0.0;
                        for j in 0..4 {
                            let mut row_acc = 0.0;
                            for i in 0..4 {
                                row_acc += wx[i] * f64::from(image.get(ry[j], rx[i], ch));
                            }
                            acc += wy[j] * row_acc;
                        }
                        data.push(math::round(acc.clamp(0.0, 255.0)) as u8);
                    }
                }
            }
        }
    }
    Image::new(ow, oh, c, data)
}

/// Stand-in executor: upscales one patch, keeping its index and origin.
pub fn upscale_reference(patch: &Patch, scale: usize, mode: UpscaleMode) -> Result<Patch, ImageError> {
    Ok(Patch { index: patch.index, row: patch.row, col: patch.col, image: upscale_image(&patch.image, scale, mode)? })
}

/// Which samples PSNR is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PsnrChannels {
    /// Every sample of every channel.
    #[default]
    AllSamples,
    /// The BT.601 luma plane only (gray images are unchanged).
    Luma,
}

fn check_same_shape(a: &Image, b: &Image) -> Result<(), ImageError> {
    if a.width != b.width || a.height != b.height {
        return Err(ImageError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    if a.channels != b.channels {
        return Err(ImageError::ChannelMismatch(a.channels, b.channels));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * math::log10(255.0 * 255.0 / mse)
    }
}

/// Peak signal-to-noise ratio in dB over all samples; `f64::INFINITY` for
/// identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64, ImageError> {
    psnr_with(a, b, PsnrChannels::AllSamples)
}

pub fn psnr_with(a: &Image, b: &Image, channels: PsnrChannels) -> Result<f64, ImageError> {
    check_same_shape(a, b)?;
    let mse = match channels {
        PsnrChannels::AllSamples => {
            let sq: u64 = a
                .data
                .iter()
                .zip(&b.data)
                .map(|(&x, &y)| {
                    let d = i64::from(x) - i64::from(y);
                    (d * d) as u64
                })
                .sum();
            sq as f64 / a.data.len() as f64
        }
        PsnrChannels::Luma => {
            let (la, lb) = (to_luma(a), to_luma(b));
            let sq: f64 = la.values.iter().zip(&lb.values).map(|(x, y)| (x - y) * (x - y)).sum();
            sq / la.values.len() as f64
        }
    };
    Ok(psnr_from_mse(mse))
}
