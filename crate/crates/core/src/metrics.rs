//! Frame quality measures: PSNR, SSIM, Charbonnier and soft census distance.
//!
//! Recipes:
//!
//! * PSNR uses peak 1.0 and the MSE over every sample of every channel.
//!   Identical frames give `f64::INFINITY`.
//! * SSIM runs on the channel-mean image with an 11x11 Gaussian window
//!   (sigma 1.5, normalized), `C1 = 0.01^2`, `C2 = 0.03^2`, averaging the
//!   local index over every window position fully inside the frame.
//! * Charbonnier is `rho(x) = (x^2 + eps^2)^alpha` averaged over samples.
//! * The census signature of a pixel holds, for each of the 48 neighbors of
//!   its 7x7 window, `d / sqrt(d^2 + 0.81)` with `d` the neighbor minus center
//!   difference on the channel-mean image. Two signatures are compared by the
//!   soft Hamming distance `sum_k e_k^2 / (0.1 + e_k^2)` over their
//!   differences `e_k`; the frame distance averages that over pixels whose
//!   window fits inside the frame.

use crate::error::{ensure, Result};
use crate::raster::Frame;

pub const CHARBONNIER_ALPHA: f64 = 0.5;
pub const CHARBONNIER_EPS: f64 = 1e-6;

pub const CENSUS_WINDOW: usize = 7;
const CENSUS_NORM: f64 = 0.81;
const CENSUS_SATURATION: f64 = 0.1;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_same(a: &Frame, b: &Frame) -> Result<()> {
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

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    check_same(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(p, q)| (p - q) * (p - q)).sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak 1.0.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for gy in &g {
        for gx in &g {
            w.push(gy * gx);
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Mean structural similarity on the channel-mean images.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    check_same(a, b)?;
    let (w, h) = a.dims();
    ensure!(
        w >= SSIM_WINDOW && h >= SSIM_WINDOW,
        "SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
    );
    let (ga, gb) = (a.luma(), b.luma());
    let window = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - SSIM_WINDOW {
        for x in 0..=w - SSIM_WINDOW {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..SSIM_WINDOW {
                for i in 0..SSIM_WINDOW {
                    let k = window[j * SSIM_WINDOW + i];
                    let p = ga.get(x + i, y + j, 0);
                    let q = gb.get(x + i, y + j, 0);
                    ma += k * p;
                    mb += k * q;
                    saa += k * p * p;
                    sbb += k * q * q;
                    sab += k * p * q;
                }
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// `(x^2 + eps^2)^alpha`.
#[inline]
pub fn charbonnier_rho(x: f64, alpha: f64, eps: f64) -> f64 {
    (x * x + eps * eps).powf(alpha)
}

/// Mean Charbonnier penalty of `a - b`.
pub fn charbonnier(a: &Frame, b: &Frame, alpha: f64, eps: f64) -> Result<f64> {
    check_same(a, b)?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(p, q)| charbonnier_rho(p - q, alpha, eps)).sum();
    Ok(sum / a.data().len() as f64)
}

/// Census coefficient of a neighbor-minus-center difference.
#[inline]
pub(crate) fn census_coeff(d: f64) -> f64 {
    d / (d * d + CENSUS_NORM).sqrt()
}

/// Soft Hamming term for one signature component difference.
#[inline]
pub(crate) fn soft_hamming(e: f64) -> f64 {
    let e2 = e * e;
    e2 / (CENSUS_SATURATION + e2)
}

/// Soft census distance between two equally-sized square patches, relative
/// to their center samples, averaged over the non-center positions.
/// `weights`, when given, scales each position's term and the average is
/// normalized by the total weight.
pub(crate) fn patch_census_distance(pa: &[f64], pb: &[f64], weights: Option<&[f64]>) -> f64 {
    debug_assert_eq!(pa.len(), pb.len());
    let center = pa.len() / 2;
    let (ca, cb) = (pa[center], pb[center]);
    let mut sum = 0.0;
    let mut norm = 0.0;
    for k in 0..pa.len() {
        if k == center {
            continue;
        }
        let wk = weights.map_or(1.0, |w| w[k]);
        let e = census_coeff(pa[k] - ca) - census_coeff(pb[k] - cb);
        sum += wk * soft_hamming(e);
        norm += wk;
    }
    if norm <= 0.0 {
        0.0
    } else {
        sum / norm
    }
}

/// Census signatures (48 coefficients per pixel) of the channel-mean image,
/// for pixels whose 7x7 window fits inside the frame. Row-major over the
/// interior.
pub fn census_transform(frame: &Frame) -> Result<Vec<[f64; 48]>> {
    let (w, h) = frame.dims();
    ensure!(
        w >= CENSUS_WINDOW && h >= CENSUS_WINDOW,
        "census transform needs frames of at least {CENSUS_WINDOW}x{CENSUS_WINDOW}, got {w}x{h}"
    );
    let g = frame.luma();
    let r = CENSUS_WINDOW / 2;
    let mut out = Vec::with_capacity((w - 2 * r) * (h - 2 * r));
    for y in r..h - r {
        for x in r..w - r {
            let c = g.get(x, y, 0);
            let mut sig = [0.0; 48];
            let mut k = 0;
            for j in 0..CENSUS_WINDOW {
                for i in 0..CENSUS_WINDOW {
                    if i == r && j == r {
                        continue;
                    }
                    sig[k] = census_coeff(g.get(x + i - r, y + j - r, 0) - c);
                    k += 1;
                }
            }
            out.push(sig);
        }
    }
    Ok(out)
}

/// Mean soft Hamming distance between the census signatures of `a` and `b`.
pub fn census_distance(a: &Frame, b: &Frame) -> Result<f64> {
    check_same(a, b)?;
    let sa = census_transform(a)?;
    let sb = census_transform(b)?;
    let total: f64 = sa
        .iter()
        .zip(&sb)
        .map(|(p, q)| p.iter().zip(q).map(|(u, v)| soft_hamming(u - v)).sum::<f64>())
        .sum();
    Ok(total / sa.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(w: usize, h: usize, seed: usize) -> Frame {
        Frame::from_fn(w, h, 3, |x, y, c| 0.1 + 0.8 * (((x * 31 + y * 17 + c * 7 + seed) % 23) as f64 / 22.0)).unwrap()
    }

    fn offset(f: &Frame, d: f64) -> Frame {
        Frame::new(f.width(), f.height(), f.channels(), f.data().iter().map(|v| v + d).collect()).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = Frame::from_fn(8, 8, 3, |x, y, c| (x + y + c) as f64 / 40.0).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let d = psnr(&a, &offset(&a, 0.1)).unwrap();
        assert!((d - 20.0).abs() < 1e-9, "{d}");
        let d = psnr(&a, &offset(&a, 0.01)).unwrap();
        assert!((d - 40.0).abs() < 1e-9, "{d}");
        assert!(psnr(&a, &Frame::filled(8, 7, 3, 0.0).unwrap()).is_err());
    }

    #[test]
    fn ssim_examples() {
        let a = textured(16, 14, 0);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = Frame::new(16, 14, 3, a.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&a, &inv).unwrap() < 1.0);
        let c = Frame::filled(12, 12, 1, 0.5).unwrap();
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        let small = Frame::filled(10, 12, 1, 0.5).unwrap();
        assert!(ssim(&small, &small).is_err());
    }

    #[test]
    fn charbonnier_examples() {
        let a = textured(5, 5, 1);
        let r0 = charbonnier(&a, &a, CHARBONNIER_ALPHA, CHARBONNIER_EPS).unwrap();
        assert!((r0 - 1e-6).abs() < 1e-12);

        let z = Frame::filled(3, 3, 1, 0.0).unwrap();
        let tiny = Frame::filled(3, 3, 1, 3e-6).unwrap();
        let r = charbonnier(&tiny, &z, CHARBONNIER_ALPHA, CHARBONNIER_EPS).unwrap();
        assert!((r - 10e-12f64.sqrt()).abs() < 1e-15, "{r}");

        let one = Frame::filled(3, 3, 1, 1.0).unwrap();
        let r = charbonnier(&one, &z, CHARBONNIER_ALPHA, CHARBONNIER_EPS).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
    }

    #[test]
    fn census_examples() {
        let a = textured(12, 10, 2);
        assert_eq!(census_distance(&a, &a).unwrap(), 0.0);
        let shifted = offset(&Frame::from_fn(12, 10, 3, |x, y, c| a.get(x, y, c) * 0.9).unwrap(), 0.05);
        let base = Frame::from_fn(12, 10, 3, |x, y, c| a.get(x, y, c) * 0.9).unwrap();
        assert!(census_distance(&base, &shifted).unwrap() <= 1e-9);

        let flat = Frame::filled(9, 9, 1, 0.3).unwrap();
        let mut data = flat.data().to_vec();
        data[4 * 9 + 4] = 0.95;
        let spike = Frame::new(9, 9, 1, data).unwrap();
        assert!(census_distance(&flat, &spike).unwrap() > 0.0);

        let small = Frame::filled(6, 9, 1, 0.3).unwrap();
        assert!(census_distance(&small, &small).is_err());
    }

    #[test]
    fn patch_census_matches_frame_census_on_a_single_window() {
        let a = textured(7, 7, 3);
        let b = textured(7, 7, 9);
        let pa: Vec<f64> = a.luma().data().to_vec();
        let pb: Vec<f64> = b.luma().data().to_vec();
        let full = census_distance(&a, &b).unwrap();
        let patch = patch_census_distance(&pa, &pb, None);
        assert!((full / 48.0 - patch).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn psnr_is_symmetric(seed in 0usize..50, amp in 0.01f64..0.2) {
            let a = textured(9, 9, seed);
            let b = Frame::from_fn(9, 9, 3, |x, y, c| (a.get(x, y, c) + amp * (((x ^ y) + c) % 3) as f64 - amp).clamp(0.0, 1.0)).unwrap();
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }

        #[test]
        fn rho_is_even_and_monotone(x in 0.0f64..2.0, dx in 0.0f64..1.0) {
            let r = |v| charbonnier_rho(v, CHARBONNIER_ALPHA, CHARBONNIER_EPS);
            prop_assert_eq!(r(x), r(-x));
            prop_assert!(r(x + dx) >= r(x));
            prop_assert!(r(x) >= r(0.0));
        }

        #[test]
        fn census_ignores_brightness_offset(seed in 0usize..50, shift in -0.1f64..0.1) {
            let a = Frame::from_fn(10, 9, 3, |x, y, c| 0.15 + 0.7 * (((x * 13 + y * 7 + c + seed) % 11) as f64 / 10.0)).unwrap();
            prop_assert!(census_distance(&a, &offset(&a, shift)).unwrap() <= 1e-9);
        }

        #[test]
        fn ssim_of_self_is_one(seed in 0usize..100) {
            let a = textured(13, 11, seed);
            prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
