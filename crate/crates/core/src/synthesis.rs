//! Frame synthesis from four warped candidates.
//!
//! The two input frames are warped by the symmetric and the asymmetric pair,
//! giving candidates `[S0, S1, A0, A1]`. Per-pixel 3x3 filters over all four
//! candidates (36 nonnegative taps summing to one) fuse them by dynamic local
//! convolution, and an optional residual is added on top.
//!
//! Filter coefficients come from warp-pair agreement rather than a learned
//! network: a candidate's weight is `exp(-gamma * E) * m`, where `E` is the
//! mean absolute discrepancy of its pair and `m` the warp mask of its
//! direction. Its center tap always has unit spatial weight; off-center taps
//! get the Gaussian `exp(-(i^2 + j^2) / (2 sigma^2))` scaled by
//! `1 - exp(-gamma * E)`, so spatial smoothing only switches on where the
//! pair disagrees and agreeing candidates pass through unblurred.

use crate::error::{ensure, Result};
use crate::estimator::{estimate_abme, estimate_flow, estimate_symmetric, BilateralResult, SearchParams};
use crate::motion::{approx_blended, approx_borrowed, symmetric_counterpart, FlowSource};
use crate::raster::{upsample_field, BorderMode, Frame, Mask};
use crate::warp::{backward_warp, interp_backward};

pub const CANDIDATES: usize = 4;
pub const TAPS: usize = 9;
pub const COEFFS_PER_PIXEL: usize = CANDIDATES * TAPS;

/// Tolerance on `sum(H) = 1` accepted by [`apply_dlc`].
const NORMALIZATION_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub gamma: f64,
    pub sigma: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self { gamma: 20.0, sigma: 0.4 }
    }
}

/// Per-pixel fusion coefficients, 36 per pixel laid out as
/// `[candidate][dy + 1][dx + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    width: usize,
    height: usize,
    coeffs: Vec<f64>,
}

impl FilterBank {
    pub fn new(width: usize, height: usize, coeffs: Vec<f64>) -> Result<Self> {
        ensure!(
            coeffs.len() == width * height * COEFFS_PER_PIXEL,
            "filter bank holds {} coefficients, expected {}",
            coeffs.len(),
            width * height * COEFFS_PER_PIXEL
        );
        ensure!(coeffs.iter().all(|c| c.is_finite() && *c >= 0.0), "filter coefficients must be finite and nonnegative");
        Ok(Self { width, height, coeffs })
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        Self { width, height, coeffs: vec![1.0 / COEFFS_PER_PIXEL as f64; width * height * COEFFS_PER_PIXEL] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// The 36 coefficients of pixel `(x, y)`.
    pub fn at(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * COEFFS_PER_PIXEL;
        &self.coeffs[i..i + COEFFS_PER_PIXEL]
    }

    /// Coefficient for horizontal offset `i`, vertical offset `j` (both in
    /// `-1..=1`) and candidate `c` (`0..4`).
    pub fn coeff(&self, x: usize, y: usize, i: isize, j: isize, c: usize) -> f64 {
        self.at(x, y)[tap_index(i, j, c)]
    }
}

#[inline]
fn tap_index(i: isize, j: isize, c: usize) -> usize {
    c * TAPS + ((j + 1) * 3 + (i + 1)) as usize
}

/// The four warped candidates and the discrepancy of each warp pair.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    /// `[S0, S1, A0, A1]`: frame 0 and frame 1 warped by the symmetric pair,
    /// then by the asymmetric pair.
    pub frames: [Frame; CANDIDATES],
    /// Mean absolute channel difference `|S0 - S1|` per pixel.
    pub symmetric_error: Vec<f64>,
    /// Mean absolute channel difference `|A0 - A1|` per pixel.
    pub asymmetric_error: Vec<f64>,
}

impl CandidateSet {
    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    fn error_of(&self, candidate: usize) -> &[f64] {
        if candidate < 2 {
            &self.symmetric_error
        } else {
            &self.asymmetric_error
        }
    }
}

fn pair_error(a: &Frame, b: &Frame) -> Vec<f64> {
    let ch = a.channels() as f64;
    a.data()
        .chunks_exact(a.channels())
        .zip(b.data().chunks_exact(b.channels()))
        .map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v).abs()).sum::<f64>() / ch)
        .collect()
}

pub fn build_candidates(i0: &Frame, i1: &Frame, result: &BilateralResult) -> Result<CandidateSet> {
    ensure!(
        i0.dims() == i1.dims() && i0.channels() == i1.channels(),
        "input frames differ in shape"
    );
    let s0 = backward_warp(&result.vs_t0, i0, BorderMode::Clamp)?;
    let s1 = backward_warp(&result.vs_t1, i1, BorderMode::Clamp)?;
    let a0 = backward_warp(&result.va_t0, i0, BorderMode::Clamp)?;
    let a1 = backward_warp(&result.va_t1, i1, BorderMode::Clamp)?;
    let symmetric_error = pair_error(&s0, &s1);
    let asymmetric_error = pair_error(&a0, &a1);
    Ok(CandidateSet { frames: [s0, s1, a0, a1], symmetric_error, asymmetric_error })
}

/// Discrepancy-driven fusion filters. `masks` are the `(t -> 0, t -> 1)`
/// warp masks; candidates 0 and 2 use the first, 1 and 3 the second.
pub fn make_filters(cands: &CandidateSet, masks: (&Mask, &Mask), params: FilterParams) -> Result<FilterBank> {
    ensure!(params.gamma > 0.0 && params.gamma.is_finite(), "gamma must be positive, got {}", params.gamma);
    ensure!(params.sigma > 0.0 && params.sigma.is_finite(), "sigma must be positive, got {}", params.sigma);
    let (w, h) = cands.dims();
    ensure!(
        masks.0.dims() == (w, h) && masks.1.dims() == (w, h),
        "masks must match the candidate size {:?}",
        (w, h)
    );
    let mut spatial = [0.0; TAPS];
    for j in -1isize..=1 {
        for i in -1isize..=1 {
            spatial[tap_index(i, j, 0)] = (-((i * i + j * j) as f64) / (2.0 * params.sigma * params.sigma)).exp();
        }
    }
    let center = tap_index(0, 0, 0);

    let mut coeffs = vec![0.0; w * h * COEFFS_PER_PIXEL];
    for (p, out) in coeffs.chunks_exact_mut(COEFFS_PER_PIXEL).enumerate() {
        let mut total = 0.0;
        for c in 0..CANDIDATES {
            let e = cands.error_of(c)[p];
            let agreement = (-params.gamma * e).exp();
            let m = if c % 2 == 0 { masks.0.values()[p] } else { masks.1.values()[p] };
            let weight = agreement * m;
            let spread = 1.0 - agreement;
            for k in 0..TAPS {
                let tap = if k == center { 1.0 } else { spatial[k] * spread };
                let v = weight * tap;
                out[c * TAPS + k] = v;
                total += v;
            }
        }
        if total < 1e-12 {
            out.fill(1.0 / COEFFS_PER_PIXEL as f64);
        } else {
            for v in out.iter_mut() {
                *v /= total;
            }
        }
    }
    Ok(FilterBank { width: w, height: h, coeffs })
}

/// Dynamic local convolution: each output pixel is the coefficient-weighted
/// sum over the 3x3 neighborhoods (edge-clamped) of all four candidates,
/// clamped to `[0, 1]`.
pub fn apply_dlc(cands: &CandidateSet, filters: &FilterBank) -> Result<Frame> {
    let (w, h) = cands.dims();
    ensure!(filters.dims() == (w, h), "filter bank is {:?}, candidates are {:?}", filters.dims(), (w, h));
    for y in 0..h {
        for x in 0..w {
            let s: f64 = filters.at(x, y).iter().sum();
            ensure!(
                (s - 1.0).abs() <= NORMALIZATION_TOLERANCE,
                "filters at ({x}, {y}) sum to {s}, expected 1"
            );
        }
    }
    let ch = cands.frames[0].channels();
    Ok(Frame::par_from_fn(w, h, ch, |x, y, px| {
        let hk = filters.at(x, y);
        for (c, o) in px.iter_mut().enumerate() {
            // Accumulate deviations from a reference sample; with normalized
            // weights this equals the plain weighted sum, and identical
            // candidates come back bit-exact.
            let base = cands.frames[0].get(x, y, c);
            let mut acc = 0.0;
            for (ci, frame) in cands.frames.iter().enumerate() {
                for j in -1isize..=1 {
                    for i in -1isize..=1 {
                        let wgt = hk[tap_index(i, j, ci)];
                        if wgt != 0.0 {
                            acc += wgt * (frame.get_clamped(x as isize + i, y as isize + j, c) - base);
                        }
                    }
                }
            }
            *o = (base + acc).clamp(0.0, 1.0);
        }
    }))
}

/// `filtered + residual`, clamped to `[0, 1]`. No residual means zero.
pub fn compose_residual(filtered: &Frame, residual: Option<&Frame>) -> Result<Frame> {
    let Some(r) = residual else {
        return Ok(filtered.clone().clamped_unit());
    };
    ensure!(
        r.dims() == filtered.dims() && r.channels() == filtered.channels(),
        "residual shape {:?}x{} does not match filtered frame {:?}x{}",
        r.dims(),
        r.channels(),
        filtered.dims(),
        filtered.channels()
    );
    let data = filtered.data().iter().zip(r.data()).map(|(a, b)| (a + b).clamp(0.0, 1.0)).collect();
    Ok(Frame::from_raw(filtered.width(), filtered.height(), filtered.channels(), data))
}

/// Interpolation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Backward warping with `(-t v01, (1-t) v01)` from block-matching flow.
    Approx1,
    /// Backward warping with the time-weighted blend of both flows.
    Approx2,
    /// Backward warping with the symmetric bilateral pair.
    Sbmf,
    /// Backward warping with the asymmetric bilateral pair.
    Abmf,
    /// Four-candidate dynamic local convolution.
    Full,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Approx1, Method::Approx2, Method::Sbmf, Method::Abmf, Method::Full];

    pub fn name(self) -> &'static str {
        match self {
            Method::Approx1 => "approx1",
            Method::Approx2 => "approx2",
            Method::Sbmf => "sbmf",
            Method::Abmf => "abmf",
            Method::Full => "full",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown method '{s}' (expected approx1, approx2, sbmf, abmf or full)")))
    }
}

/// Synthesizes the frame at time `t` between `i0` and `i1`.
pub fn interpolate(
    i0: &Frame,
    i1: &Frame,
    t: f64,
    params: &SearchParams,
    filters: FilterParams,
    method: Method,
) -> Result<Frame> {
    ensure!(t > 0.0 && t < 1.0, "t must lie strictly between 0 and 1, got {t}");
    ensure!(
        i0.dims() == i1.dims() && i0.channels() == i1.channels(),
        "input frames differ in shape"
    );
    let (w, h) = i0.dims();
    match method {
        Method::Approx1 => {
            let v01 = estimate_flow(i0, i1, params)?;
            let (vt0, vt1) = approx_borrowed(&v01, &v01, t, FlowSource::From01)?;
            interp_backward(i0, i1, &vt0, &vt1, t)
        }
        Method::Approx2 => {
            let v01 = estimate_flow(i0, i1, params)?;
            let v10 = estimate_flow(i1, i0, params)?;
            let (vt0, vt1) = approx_blended(&v01, &v10, t)?;
            interp_backward(i0, i1, &vt0, &vt1, t)
        }
        Method::Sbmf => {
            let (_, q1) = estimate_symmetric(i0, i1, t, params)?;
            let vt1 = upsample_field(&q1, w, h)?;
            let vt0 = symmetric_counterpart(&vt1, t)?;
            interp_backward(i0, i1, &vt0, &vt1, t)
        }
        Method::Abmf => {
            let r = estimate_abme(i0, i1, t, params)?;
            interp_backward(i0, i1, &r.va_t0, &r.va_t1, t)
        }
        Method::Full => {
            let r = estimate_abme(i0, i1, t, params)?;
            let cands = build_candidates(i0, i1, &r)?;
            let bank = make_filters(&cands, (&r.masks.0, &r.masks.1), filters)?;
            let filtered = apply_dlc(&cands, &bank)?;
            compose_residual(&filtered, None)
        }
    }
}
