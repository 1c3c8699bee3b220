//! Image and field containers, bilinear sampling and pyramids.
//!
//! Coordinates are `(x, y)` with `x` to the right and `y` downwards; texel
//! centers sit on integer coordinates. All containers store their samples
//! row-major and are immutable once built.

use rayon::prelude::*;

use crate::error::{ensure, Result};

/// How samples outside `[0, W-1] x [0, H-1]` are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderMode {
    /// Replicate the nearest edge texel.
    #[default]
    Clamp,
    /// Every out-of-range texel reads as zero.
    Zero,
}

/// Multi-channel image with samples nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Lower and upper bounds accepted for frame samples. Warps and residuals may
/// leave `[0, 1]` transiently but never this range.
pub const FRAME_VALUE_RANGE: (f64, f64) = (-1.0, 2.0);

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(width > 0 && height > 0, "frame dimensions must be positive, got {width}x{height}");
        ensure!(channels == 1 || channels == 3, "frames carry 1 or 3 channels, got {channels}");
        ensure!(
            data.len() == width * height * channels,
            "frame data holds {} samples, expected {}",
            data.len(),
            width * height * channels
        );
        let (lo, hi) = FRAME_VALUE_RANGE;
        ensure!(
            data.iter().all(|v| v.is_finite() && (lo..=hi).contains(v)),
            "frame samples must be finite and within [{lo}, {hi}]"
        );
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a frame by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Internal constructor for kernels whose output is bounded by construction.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { width, height, channels, data }
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

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Texel read with integer coordinates clamped into the frame.
    #[inline]
    pub(crate) fn get_clamped(&self, x: isize, y: isize, c: usize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y, c)
    }

    /// Mean over channels, as a single-channel frame.
    pub fn luma(&self) -> Frame {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.channels as f64;
        let data = self.data.chunks_exact(self.channels).map(|p| p.iter().sum::<f64>() / n).collect();
        Frame::from_raw(self.width, self.height, 1, data)
    }

    /// Clamps every sample into `[0, 1]`.
    pub fn clamped_unit(mut self) -> Frame {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Builds a frame from row-parallel evaluation of `f(x, y, out_pixel)`.
    pub(crate) fn par_from_fn(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize, &mut [f64]) + Sync,
    ) -> Frame {
        let mut data = vec![0.0; width * height * channels];
        data.par_chunks_mut(width * channels).enumerate().for_each(|(y, row)| {
            for (x, px) in row.chunks_exact_mut(channels).enumerate() {
                f(x, y, px);
            }
        });
        Frame::from_raw(width, height, channels, data)
    }
}

/// Dense displacement field in pixel units of its own grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    width: usize,
    height: usize,
    vectors: Vec<[f64; 2]>,
}

impl MotionField {
    pub fn new(width: usize, height: usize, vectors: Vec<[f64; 2]>) -> Result<Self> {
        ensure!(width > 0 && height > 0, "field dimensions must be positive, got {width}x{height}");
        ensure!(
            vectors.len() == width * height,
            "field holds {} vectors, expected {}",
            vectors.len(),
            width * height
        );
        let field = Self { width, height, vectors };
        field.validate()?;
        Ok(field)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, [0.0, 0.0])
    }

    pub fn constant(width: usize, height: usize, v: [f64; 2]) -> Self {
        Self { width, height, vectors: vec![v; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 2]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                vectors.push(f(x, y));
            }
        }
        Self::new(width, height, vectors)
    }

    pub(crate) fn from_raw(width: usize, height: usize, vectors: Vec<[f64; 2]>) -> Self {
        debug_assert_eq!(vectors.len(), width * height);
        Self { width, height, vectors }
    }

    pub(crate) fn par_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 2] + Sync) -> Self {
        let mut vectors = vec![[0.0; 2]; width * height];
        vectors.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = f(x, y);
            }
        });
        Self { width, height, vectors }
    }

    /// Checks finiteness and the `|d| <= max(W, H)` sanity bound.
    pub fn validate(&self) -> Result<()> {
        let bound = self.width.max(self.height) as f64;
        ensure!(
            self.vectors.iter().flatten().all(|d| d.is_finite() && d.abs() <= bound),
            "motion vectors must be finite and bounded by {bound} px"
        );
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.vectors[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> MotionField {
        Self::from_raw(self.width, self.height, self.vectors.iter().map(|&v| f(v)).collect())
    }

    /// Largest absolute component over the field.
    pub fn max_abs(&self) -> f64 {
        self.vectors.iter().flatten().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Scalar map with every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Mask {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(width > 0 && height > 0, "mask dimensions must be positive, got {width}x{height}");
        ensure!(
            values.len() == width * height,
            "mask holds {} values, expected {}",
            values.len(),
            width * height
        );
        ensure!(values.iter().all(|v| (0.0..=1.0).contains(v)), "mask values must lie in [0, 1]");
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { width, height, values }
    }

    pub(crate) fn par_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; width * height];
        values.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = f(x, y);
            }
        });
        Self::from_raw(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub(crate) fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }
}

/// Image pyramid, level 0 coarsest, each level twice the previous size
/// (rounded up).
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    levels: Vec<Frame>,
}

impl Pyramid {
    pub fn levels(&self) -> &[Frame] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn coarsest(&self) -> &Frame {
        &self.levels[0]
    }

    pub fn finest(&self) -> &Frame {
        &self.levels[self.levels.len() - 1]
    }

    /// Level that sits `halvings` steps below the finest one.
    pub fn below_finest(&self, halvings: usize) -> &Frame {
        &self.levels[self.levels.len() - 1 - halvings]
    }
}

/// Bilinear sample of every channel at `(x, y)`.
pub fn sample_bilinear(frame: &Frame, x: f64, y: f64, border: BorderMode) -> Result<Vec<f64>> {
    ensure!(x.is_finite() && y.is_finite(), "sample coordinates must be finite, got ({x}, {y})");
    let mut out = vec![0.0; frame.channels];
    sample_into(frame, x, y, border, &mut out);
    Ok(out)
}

/// Unchecked bilinear sample into `out` (one slot per channel).
#[inline]
pub(crate) fn sample_into(frame: &Frame, x: f64, y: f64, border: BorderMode, out: &mut [f64]) {
    let x0f = x.floor();
    let y0f = y.floor();
    let fx = x - x0f;
    let fy = y - y0f;
    let x0 = x0f as isize;
    let y0 = y0f as isize;
    let (w, h) = (frame.width as isize, frame.height as isize);
    let ch = frame.channels;

    let texel = |xi: isize, yi: isize, c: usize| -> f64 {
        match border {
            BorderMode::Clamp => frame.get_clamped(xi, yi, c),
            BorderMode::Zero => {
                if xi < 0 || yi < 0 || xi >= w || yi >= h {
                    0.0
                } else {
                    frame.get(xi as usize, yi as usize, c)
                }
            }
        }
    };

    for (c, o) in out.iter_mut().enumerate().take(ch) {
        let v00 = texel(x0, y0, c);
        let v10 = texel(x0 + 1, y0, c);
        let v01 = texel(x0, y0 + 1, c);
        let v11 = texel(x0 + 1, y0 + 1, c);
        let top = (1.0 - fx) * v00 + fx * v10;
        let bottom = (1.0 - fx) * v01 + fx * v11;
        *o = (1.0 - fy) * top + fy * bottom;
    }
}

/// Clamped bilinear sampling at one fixed offset from integer texel
/// positions. The integer part and interpolation weights are computed once,
/// which keeps patch-cost loops cheap; whole-pixel offsets read one texel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OffsetSampler {
    ix: isize,
    iy: isize,
    fx: f64,
    fy: f64,
}

impl OffsetSampler {
    pub(crate) fn new(dx: f64, dy: f64) -> Self {
        let (fx0, fy0) = (dx.floor(), dy.floor());
        Self { ix: fx0 as isize, iy: fy0 as isize, fx: dx - fx0, fy: dy - fy0 }
    }

    /// Samples the `(2 half + 1)^2` patch centered on `(x, y)` into `out`,
    /// row-major with channels innermost, clamping at the border;
    /// patches clear of the border skip the clamping.
    pub(crate) fn patch(&self, frame: &Frame, x: isize, y: isize, half: isize, out: &mut Vec<f64>) {
        out.clear();
        let (w, h) = (frame.width as isize, frame.height as isize);
        let ch = frame.channels;
        let (x0, y0) = (x - half + self.ix, y - half + self.iy);
        let (x1, y1) = (x + half + self.ix + 1, y + half + self.iy + 1);
        if x0 < 0 || y0 < 0 || x1 >= w || y1 >= h {
            self.clamped_patch(frame, x0, y0, half, out);
            return;
        }
        let d = &frame.data;
        let stride = frame.width * ch;
        let row_len = (2 * half + 1) as usize * ch;
        for qy in y0..y0 + 2 * half + 1 {
            let base = (qy as usize * frame.width + x0 as usize) * ch;
            if self.fx == 0.0 && self.fy == 0.0 {
                out.extend_from_slice(&d[base..base + row_len]);
                continue;
            }
            let r0 = &d[base..base + row_len + ch];
            let r1 = &d[base + stride..base + stride + row_len + ch];
            out.extend((0..row_len).map(|i| {
                let top = (1.0 - self.fx) * r0[i] + self.fx * r0[i + ch];
                let bottom = (1.0 - self.fx) * r1[i] + self.fx * r1[i + ch];
                (1.0 - self.fy) * top + self.fy * bottom
            }));
        }
    }
}

impl OffsetSampler {
    /// [`Self::patch`] for windows that reach past the border: rows and
    /// columns are clamped once per patch instead of once per texel.
    fn clamped_patch(&self, frame: &Frame, x0: isize, y0: isize, half: isize, out: &mut Vec<f64>) {
        let side = 2 * half + 1;
        let (w, h) = (frame.width as isize, frame.height as isize);
        let ch = frame.channels;
        let col = |j: isize| (x0 + j).clamp(0, w - 1) as usize * ch;
        let row = |i: isize| (y0 + i).clamp(0, h - 1) as usize * frame.width * ch;
        let d = &frame.data;
        let integer = self.fx == 0.0 && self.fy == 0.0;
        for i in 0..side {
            let (r0, r1) = (row(i), row(i + 1));
            for j in 0..side {
                let (c0, c1) = (col(j), col(j + 1));
                for c in 0..ch {
                    out.push(if integer {
                        d[r0 + c0 + c]
                    } else {
                        let top = (1.0 - self.fx) * d[r0 + c0 + c] + self.fx * d[r0 + c1 + c];
                        let bottom = (1.0 - self.fx) * d[r1 + c0 + c] + self.fx * d[r1 + c1 + c];
                        (1.0 - self.fy) * top + self.fy * bottom
                    });
                }
            }
        }
    }
}

/// 2x box-filter downsample; odd trailing rows/columns average the texels
/// that exist.
pub fn downsample(frame: &Frame) -> Frame {
    let w = frame.width.div_ceil(2);
    let h = frame.height.div_ceil(2);
    Frame::par_from_fn(w, h, frame.channels, |x, y, px| {
        let xs = 2 * x..(2 * x + 2).min(frame.width);
        let ys = 2 * y..(2 * y + 2).min(frame.height);
        let n = (xs.len() * ys.len()) as f64;
        for (c, o) in px.iter_mut().enumerate() {
            let mut sum = 0.0;
            for sy in ys.clone() {
                for sx in xs.clone() {
                    sum += frame.get(sx, sy, c);
                }
            }
            *o = sum / n;
        }
    })
}

/// Builds a pyramid whose finest level is `frame` itself.
pub fn build_pyramid(frame: &Frame, levels: usize) -> Result<Pyramid> {
    ensure!(levels >= 1, "a pyramid needs at least one level");
    let need = 1usize.checked_shl(levels as u32 - 1).unwrap_or(usize::MAX);
    ensure!(
        frame.width >= need && frame.height >= need,
        "{}x{} frame is too small for {levels} pyramid levels",
        frame.width,
        frame.height
    );
    let mut finest_first = Vec::with_capacity(levels);
    finest_first.push(frame.clone());
    for _ in 1..levels {
        let next = downsample(finest_first.last().unwrap());
        finest_first.push(next);
    }
    finest_first.reverse();
    Ok(Pyramid { levels: finest_first })
}

/// Bilinear resize of a field onto a larger (or equal) grid, rescaling the
/// vectors so they stay in pixel units of the target grid.
pub fn upsample_field(field: &MotionField, target_w: usize, target_h: usize) -> Result<MotionField> {
    ensure!(
        target_w >= field.width && target_h >= field.height,
        "cannot upsample a {}x{} field to {target_w}x{target_h}",
        field.width,
        field.height
    );
    if (target_w, target_h) == field.dims() {
        return Ok(field.clone());
    }
    let rx = target_w as f64 / field.width as f64;
    let ry = target_h as f64 / field.height as f64;
    let (fw, fh) = (field.width as isize, field.height as isize);
    let at = |x: isize, y: isize| field.get(x.clamp(0, fw - 1) as usize, y.clamp(0, fh - 1) as usize);
    Ok(MotionField::par_from_fn(target_w, target_h, |x, y| {
        let sx = (x as f64 + 0.5) / rx - 0.5;
        let sy = (y as f64 + 0.5) / ry - 0.5;
        let x0f = sx.floor();
        let y0f = sy.floor();
        let (fx, fy) = (sx - x0f, sy - y0f);
        let (x0, y0) = (x0f as isize, y0f as isize);
        let (v00, v10, v01, v11) = (at(x0, y0), at(x0 + 1, y0), at(x0, y0 + 1), at(x0 + 1, y0 + 1));
        let lerp2 = |k: usize| {
            let top = (1.0 - fx) * v00[k] + fx * v10[k];
            let bottom = (1.0 - fx) * v01[k] + fx * v11[k];
            (1.0 - fy) * top + fy * bottom
        };
        [lerp2(0) * rx, lerp2(1) * ry]
    }))
}
