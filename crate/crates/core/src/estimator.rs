//! Bilateral motion estimation by exhaustive cost-volume search.
//!
//! [`estimate_symmetric`] finds, coarse to fine, the field `vt1` minimizing
//! the patch difference between frame 0 sampled at `p - (t/(1-t)) v` and
//! frame 1 sampled at `p + v`. [`build_anchor`] blends the two symmetric
//! warps into an anchor frame, [`init_reliability`] scores how well the two
//! warps agree, and [`refine_asymmetric`] then re-estimates each direction on
//! its own, matching the anchor against one input frame with every anchor
//! texel weighted by the reliability map.
//!
//! Every search evaluates the lattice offsets of a `(2r+1)^2` window around
//! an initial estimate in row-major order and keeps the cheapest; exact ties
//! go to the smallest squared offset, then to the earliest offset in that
//! order. Refinement and flow use a whole-pixel lattice, the symmetric search
//! the one chosen by [`SymmetricGrid`]. An optional parabola fit on the
//! neighboring costs adds a correction of at most half a lattice step per
//! axis.
//!
//! The symmetric search runs `working_scale` halvings below the input
//! (quarter resolution by default); refinement climbs one octave per level
//! from there, so the default two refinement levels end at half resolution.

use crate::error::{ensure, Result};
use crate::metrics::patch_census_distance;
use crate::motion::{symmetric_counterpart, symmetric_ratio};
use crate::raster::{build_pyramid, upsample_field, OffsetSampler, BorderMode, Frame, Mask, MotionField};
use crate::warp::{backward_warp, lerp, warp_mask};

/// Patch matching cost used by every search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostKind {
    /// Mean absolute difference over patch texels and channels.
    #[default]
    Sad,
    /// Soft census distance of the channel-mean patches.
    Census,
}

/// Lattice of candidate vectors for the symmetric search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetricGrid {
    /// Whole-pixel steps of the frame-0 to frame-1 displacement, i.e. steps
    /// of `1 - t` in `vt1`.
    #[default]
    Displacement,
    /// Whole-pixel steps of `vt1` itself.
    Field,
}

impl SymmetricGrid {
    /// Spacing of the lattice in units of `vt1`.
    pub fn step(self, t: f64) -> f64 {
        match self {
            SymmetricGrid::Displacement => 1.0 - t,
            SymmetricGrid::Field => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Pyramid depth of the symmetric search.
    pub levels: usize,
    /// Search radius in lattice steps of the current level.
    pub radius: usize,
    /// Odd side length of the matching window.
    pub patch: usize,
    pub cost: CostKind,
    /// Number of asymmetric refinement levels, capped at `working_scale + 1`.
    pub refine_levels: usize,
    /// Sharpness of the reliability map `exp(-beta * e)`.
    pub beta: f64,
    pub subpixel: bool,
    /// Halvings between the input and the symmetric search resolution.
    pub working_scale: usize,
    /// Candidate lattice of the symmetric search; `radius` counts lattice
    /// steps.
    pub grid: SymmetricGrid,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            levels: 4,
            radius: 3,
            patch: 7,
            cost: CostKind::Sad,
            refine_levels: 2,
            beta: 20.0,
            subpixel: true,
            working_scale: 2,
            grid: SymmetricGrid::default(),
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.levels >= 1, "levels must be at least 1");
        ensure!(self.radius >= 1, "radius must be at least 1");
        ensure!(self.patch >= 3 && self.patch % 2 == 1, "patch must be odd and at least 3, got {}", self.patch);
        ensure!(self.beta.is_finite() && self.beta > 0.0, "beta must be positive, got {}", self.beta);
        ensure!(self.refine_levels >= 1, "refine_levels must be at least 1");
        Ok(())
    }

    fn refine_depth(&self) -> usize {
        self.refine_levels.min(self.working_scale + 1)
    }
}

/// Everything [`estimate_abme`] produces, at input resolution.
#[derive(Debug, Clone)]
pub struct BilateralResult {
    pub vs_t0: MotionField,
    pub vs_t1: MotionField,
    pub va_t0: MotionField,
    pub va_t1: MotionField,
    pub anchor: Frame,
    pub reliability: Mask,
    /// Warp masks of the symmetric pair, `(t -> 0, t -> 1)`.
    pub masks: (Mask, Mask),
}

fn check_t(t: f64) -> Result<()> {
    ensure!(t > 0.0 && t < 1.0, "t must lie strictly between 0 and 1, got {t}");
    Ok(())
}

fn check_frames(a: &Frame, b: &Frame) -> Result<()> {
    ensure!(
        a.dims() == b.dims() && a.channels() == b.channels(),
        "frames differ in shape: {:?}x{} vs {:?}x{}",
        a.dims(),
        a.channels(),
        b.dims(),
        b.channels()
    );
    Ok(())
}

/// Exhaustive search over the integer offsets around `init` rounded to whole
/// pixels, in row-major order. Radius 0 returns `init` unchanged.
///
/// Centering on whole pixels keeps the parabola fit unbiased: with a
/// fractional center the three samples straddle the V-shaped SAD minimum
/// asymmetrically and the fit drags the estimate towards the center.
fn search_window(init: [f64; 2], radius: usize, subpixel: bool, mut cost: impl FnMut([f64; 2]) -> f64) -> [f64; 2] {
    if radius == 0 {
        return init;
    }
    let init = [init[0].round(), init[1].round()];
    let r = radius as isize;
    let side = 2 * radius + 1;
    let mut costs = Vec::with_capacity(side * side);
    let mut best = (f64::INFINITY, isize::MAX, 0usize);
    for dy in -r..=r {
        for dx in -r..=r {
            let c = cost([init[0] + dx as f64, init[1] + dy as f64]);
            let mag = dx * dx + dy * dy;
            if c < best.0 || (c == best.0 && mag < best.1) {
                best = (c, mag, costs.len());
            }
            costs.push(c);
        }
    }
    let (c0, _, idx) = best;
    let bx = (idx % side) as isize - r;
    let by = (idx / side) as isize - r;
    let mut out = [init[0] + bx as f64, init[1] + by as f64];

    // A zero-cost match is already exact.
    if subpixel && c0 > 0.0 {
        let fit = |cm: f64, cp: f64| {
            let denom = cm - 2.0 * c0 + cp;
            if denom > 0.0 {
                (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        if bx.abs() < r {
            out[0] += fit(costs[idx - 1], costs[idx + 1]);
        }
        if by.abs() < r {
            out[1] += fit(costs[idx - side], costs[idx + side]);
        }
    }
    out
}

/// Patch cost between frame 0 at `q - ratio * v` and frame 1 at `q + v`.
struct BilateralCost<'a> {
    i0: &'a Frame,
    i1: &'a Frame,
    ratio: f64,
    half: isize,
    kind: CostKind,
}

impl BilateralCost<'_> {
    fn eval(&self, x: usize, y: usize, v: [f64; 2], bufs: &mut [Vec<f64>; 2]) -> f64 {
        let ch = self.i0.channels();
        let s0 = OffsetSampler::new(-self.ratio * v[0], -self.ratio * v[1]);
        let s1 = OffsetSampler::new(v[0], v[1]);
        let (x, y) = (x as isize, y as isize);
        let [p0, p1] = bufs;
        s0.patch(self.i0, x, y, self.half, p0);
        s1.patch(self.i1, x, y, self.half, p1);
        match self.kind {
            CostKind::Sad => {
                let sum: f64 = p0.iter().zip(p1.iter()).fold(0.0, |acc, (a, b)| acc + (a - b).abs());
                sum / p0.len() as f64
            }
            CostKind::Census => {
                let mean = |p: &[f64]| p.chunks_exact(ch).map(|t| t.iter().fold(0.0, |a, v| a + v) / ch as f64).collect::<Vec<_>>();
                patch_census_distance(&mean(p0), &mean(p1), None)
            }
        }
    }
}

/// Symmetric matching cost of displacement `v` (the `t -> 1` vector) for the
/// patch centered on `(x, y)`.
pub fn bilateral_cost(
    i0: &Frame,
    i1: &Frame,
    x: usize,
    y: usize,
    v: [f64; 2],
    t: f64,
    params: &SearchParams,
) -> Result<f64> {
    check_t(t)?;
    check_frames(i0, i1)?;
    ensure!(x < i0.width() && y < i0.height(), "pixel ({x}, {y}) is outside the frame");
    ensure!(v[0].is_finite() && v[1].is_finite(), "displacement must be finite");
    ensure!(params.patch % 2 == 1, "patch must be odd, got {}", params.patch);
    let coster = BilateralCost { i0, i1, ratio: symmetric_ratio(t), half: (params.patch / 2) as isize, kind: params.cost };
    Ok(coster.eval(x, y, v, &mut Default::default()))
}

fn symmetric_level(i0: &Frame, i1: &Frame, init: &MotionField, t: f64, params: &SearchParams) -> MotionField {
    let coster = BilateralCost { i0, i1, ratio: symmetric_ratio(t), half: (params.patch / 2) as isize, kind: params.cost };
    let (w, h) = i0.dims();
    let step = params.grid.step(t);
    MotionField::par_from_fn(w, h, |x, y| {
        let [ix, iy] = init.get(x, y);
        let mut bufs = Default::default();
        let [ux, uy] = search_window([ix / step, iy / step], params.radius, params.subpixel, |[ux, uy]| {
            coster.eval(x, y, [ux * step, uy * step], &mut bufs)
        });
        [ux * step, uy * step]
    })
}

/// Coarse-to-fine symmetric bilateral search.
///
/// Returns `(vt0, vt1)` at the working resolution (`working_scale` halvings
/// below the input); `vt0` is derived from `vt1` through the linear-motion
/// relation.
pub fn estimate_symmetric(
    i0: &Frame,
    i1: &Frame,
    t: f64,
    params: &SearchParams,
) -> Result<(MotionField, MotionField)> {
    check_t(t)?;
    check_frames(i0, i1)?;
    params.validate()?;
    let total = params.working_scale + params.levels;
    let p0 = build_pyramid(i0, total)?;
    let p1 = build_pyramid(i1, total)?;
    let (cw, ch) = p0.coarsest().dims();
    ensure!(
        cw >= params.patch && ch >= params.patch,
        "coarsest search level is {cw}x{ch}, smaller than the {0}x{0} patch; use fewer levels",
        params.patch
    );
    let mut field: Option<MotionField> = None;
    for l in 0..params.levels {
        let (f0, f1) = (&p0.levels()[l], &p1.levels()[l]);
        let (w, h) = f0.dims();
        let init = match &field {
            None => MotionField::zeros(w, h),
            Some(prev) => upsample_field(prev, w, h)?,
        };
        field = Some(symmetric_level(f0, f1, &init, t, params));
    }
    let vt1 = field.expect("levels >= 1");
    let vt0 = symmetric_counterpart(&vt1, t)?;
    Ok((vt0, vt1))
}

/// Occlusion-aware anchor frame from a symmetric pair at input resolution.
///
/// With `d = M0 - M1` the frame-0 warp is weighted by `(1-t)(1+d)` and the
/// frame-1 warp by `t(1-d)`; both weights lie in `[0, 2]`. Returns the anchor
/// (clamped to `[0, 1]`) and the masks `(M0, M1)`.
pub fn build_anchor(
    i0: &Frame,
    i1: &Frame,
    vs_t0: &MotionField,
    vs_t1: &MotionField,
    t: f64,
) -> Result<(Frame, Mask, Mask)> {
    check_t(t)?;
    check_frames(i0, i1)?;
    ensure!(
        vs_t0.dims() == i0.dims() && vs_t1.dims() == i0.dims(),
        "symmetric fields must be at input resolution {:?}",
        i0.dims()
    );
    let w0 = backward_warp(vs_t0, i0, BorderMode::Clamp)?;
    let w1 = backward_warp(vs_t1, i1, BorderMode::Clamp)?;
    let m0 = warp_mask(vs_t0);
    let m1 = warp_mask(vs_t1);
    let (w, h) = i0.dims();
    let anchor = Frame::par_from_fn(w, h, i0.channels(), |x, y, px| {
        let d = m0.get(x, y) - m1.get(x, y);
        for (c, o) in px.iter_mut().enumerate() {
            let (a, b) = (w0.get(x, y, c), w1.get(x, y, c));
            // (1-t)(1+d) a + t(1-d) b, arranged to reduce to the plain lerp
            // when d = 0.
            let v = lerp(a, b, t) + d * ((1.0 - t) * a - t * b);
            *o = v.clamp(0.0, 1.0);
        }
    });
    Ok((anchor, m0, m1))
}

/// `exp(-beta * mean_c |warp(vt0, I0) - warp(vt1, I1)|)` per pixel.
pub fn init_reliability(
    i0: &Frame,
    i1: &Frame,
    vs_t0: &MotionField,
    vs_t1: &MotionField,
    beta: f64,
) -> Result<Mask> {
    check_frames(i0, i1)?;
    ensure!(beta.is_finite() && beta > 0.0, "beta must be positive, got {beta}");
    let w0 = backward_warp(vs_t0, i0, BorderMode::Clamp)?;
    let w1 = backward_warp(vs_t1, i1, BorderMode::Clamp)?;
    let ch = i0.channels() as f64;
    let (w, h) = i0.dims();
    Ok(Mask::par_from_fn(w, h, |x, y| {
        let e: f64 = w0.pixel(x, y).iter().zip(w1.pixel(x, y)).map(|(a, b)| (a - b).abs()).sum::<f64>() / ch;
        (-beta * e).exp()
    }))
}

/// Reliability-weighted patch cost between the anchor at `q` and the target
/// at `q + v`.
struct AnchorCost<'a> {
    anchor: &'a Frame,
    target: &'a Frame,
    weights: &'a Mask,
    half: isize,
    kind: CostKind,
}

/// Anchor texels and reliability weights of one pixel's patch; shared by
/// every candidate of that pixel.
struct AnchorPatch {
    values: Vec<f64>,
    weights: Vec<f64>,
    target: Vec<f64>,
}

impl AnchorCost<'_> {
    fn prepare(&self, x: usize, y: usize) -> AnchorPatch {
        let (x, y) = (x as isize, y as isize);
        let mut values = Vec::new();
        OffsetSampler::new(0.0, 0.0).patch(self.anchor, x, y, self.half, &mut values);
        let mut weights = Vec::with_capacity(values.len() / self.anchor.channels());
        for qy in y - self.half..=y + self.half {
            for qx in x - self.half..=x + self.half {
                weights.push(self.weights.get_clamped(qx, qy));
            }
        }
        AnchorPatch { values, weights, target: Vec::new() }
    }

    fn eval(&self, x: usize, y: usize, v: [f64; 2], patch: &mut AnchorPatch) -> f64 {
        let ch = self.anchor.channels();
        OffsetSampler::new(v[0], v[1]).patch(self.target, x as isize, y as isize, self.half, &mut patch.target);
        let texels = patch.values.chunks_exact(ch).zip(patch.target.chunks_exact(ch)).zip(&patch.weights);
        match self.kind {
            CostKind::Sad => {
                let (mut sum, mut norm) = (0.0, 0.0);
                for ((a, t), &z) in texels {
                    if z == 0.0 {
                        continue;
                    }
                    let d = a.iter().zip(t).fold(0.0, |acc, (p, q)| acc + (p - q).abs());
                    sum += z * d;
                    norm += z;
                }
                if norm > 1e-12 {
                    sum / (norm * ch as f64)
                } else {
                    0.0
                }
            }
            CostKind::Census => {
                let mean = |p: &[f64]| p.chunks_exact(ch).map(|t| t.iter().fold(0.0, |a, v| a + v) / ch as f64).collect::<Vec<_>>();
                patch_census_distance(&mean(&patch.values), &mean(&patch.target), Some(&patch.weights))
            }
        }
    }
}

/// One refinement pass for one direction: every pixel searches integer
/// residuals around `init`, matching `anchor` to `target` under the
/// reliability weights. All inputs share one resolution.
pub fn refine_level(
    anchor: &Frame,
    target: &Frame,
    init: &MotionField,
    reliability: &Mask,
    params: &SearchParams,
) -> Result<MotionField> {
    check_frames(anchor, target)?;
    ensure!(
        init.dims() == anchor.dims() && reliability.dims() == anchor.dims(),
        "refinement inputs differ in size: frame {:?}, field {:?}, reliability {:?}",
        anchor.dims(),
        init.dims(),
        reliability.dims()
    );
    ensure!(params.patch % 2 == 1, "patch must be odd, got {}", params.patch);
    let coster = AnchorCost {
        anchor,
        target,
        weights: reliability,
        half: (params.patch / 2) as isize,
        kind: params.cost,
    };
    let (w, h) = anchor.dims();
    Ok(MotionField::par_from_fn(w, h, |x, y| {
        let mut patch = coster.prepare(x, y);
        search_window(init.get(x, y), params.radius, params.subpixel, |v| coster.eval(x, y, v, &mut patch))
    }))
}

/// Hierarchical asymmetric refinement of both directions.
///
/// `vs_t0`, `vs_t1` and `reliability` live at the working resolution. Level
/// 1 refines there; each further level upsamples both fields one octave and
/// recomputes the reliability map from the current pair before searching.
/// The two directions never constrain each other. Returns `(va_t0, va_t1)`
/// at `working_scale + 1 - refine_depth` halvings below the input.
pub fn refine_asymmetric(
    anchor: &Frame,
    i0: &Frame,
    i1: &Frame,
    vs_t0: &MotionField,
    vs_t1: &MotionField,
    reliability: &Mask,
    params: &SearchParams,
) -> Result<(MotionField, MotionField)> {
    check_frames(anchor, i0)?;
    check_frames(i0, i1)?;
    ensure!(params.refine_levels >= 1, "refine_levels must be at least 1");
    let depth = params.working_scale + 1;
    let pa = build_pyramid(anchor, depth)?;
    let p0 = build_pyramid(i0, depth)?;
    let p1 = build_pyramid(i1, depth)?;
    let base = pa.coarsest().dims();
    ensure!(
        vs_t0.dims() == base && vs_t1.dims() == base && reliability.dims() == base,
        "initial fields and reliability must be at the working resolution {base:?}"
    );

    let (mut f0, mut f1) = (vs_t0.clone(), vs_t1.clone());
    let mut z = reliability.clone();
    for l in 0..params.refine_depth() {
        let (a, j0, j1) = (&pa.levels()[l], &p0.levels()[l], &p1.levels()[l]);
        if l > 0 {
            let (w, h) = a.dims();
            f0 = upsample_field(&f0, w, h)?;
            f1 = upsample_field(&f1, w, h)?;
            z = init_reliability(j0, j1, &f0, &f1, params.beta)?;
        }
        f0 = refine_level(a, j0, &f0, &z, params)?;
        f1 = refine_level(a, j1, &f1, &z, params)?;
    }
    Ok((f0, f1))
}

/// Coarse-to-fine block-matching flow from `src` to `dst`, searched over the
/// same levels as the symmetric estimator and returned at input resolution.
pub fn estimate_flow(src: &Frame, dst: &Frame, params: &SearchParams) -> Result<MotionField> {
    check_frames(src, dst)?;
    params.validate()?;
    let total = params.working_scale + params.levels;
    let ps = build_pyramid(src, total)?;
    let pd = build_pyramid(dst, total)?;
    let (cw, ch) = ps.coarsest().dims();
    ensure!(
        cw >= params.patch && ch >= params.patch,
        "coarsest search level is {cw}x{ch}, smaller than the {0}x{0} patch; use fewer levels",
        params.patch
    );
    let mut field = MotionField::zeros(cw, ch);
    for l in 0..params.levels {
        let (s, d) = (&ps.levels()[l], &pd.levels()[l]);
        let (w, h) = s.dims();
        field = upsample_field(&field, w, h)?;
        let ones = Mask::from_raw(w, h, vec![1.0; w * h]);
        field = refine_level(s, d, &field, &ones, params)?;
    }
    upsample_field(&field, src.width(), src.height())
}

/// Full bilateral estimation: symmetric search, anchor synthesis,
/// reliability and asymmetric refinement, all returned at input resolution.
pub fn estimate_abme(i0: &Frame, i1: &Frame, t: f64, params: &SearchParams) -> Result<BilateralResult> {
    let (q0, q1) = estimate_symmetric(i0, i1, t, params)?;
    let (w, h) = i0.dims();
    let vs_t1 = upsample_field(&q1, w, h)?;
    let vs_t0 = symmetric_counterpart(&vs_t1, t)?;
    let (anchor, m0, m1) = build_anchor(i0, i1, &vs_t0, &vs_t1, t)?;

    let depth = params.working_scale + 1;
    let (j0, j1) = (build_pyramid(i0, depth)?, build_pyramid(i1, depth)?);
    let z = init_reliability(j0.coarsest(), j1.coarsest(), &q0, &q1, params.beta)?;
    let (a0, a1) = refine_asymmetric(&anchor, i0, i1, &q0, &q1, &z, params)?;
    let va_t0 = upsample_field(&a0, w, h)?;
    let va_t1 = upsample_field(&a1, w, h)?;
    let reliability = init_reliability(i0, i1, &vs_t0, &vs_t1, params.beta)?;

    Ok(BilateralResult { vs_t0, vs_t1, va_t0, va_t1, anchor, reliability, masks: (m0, m1) })
}
