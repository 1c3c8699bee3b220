//! Forward splatting, backward warping and the warp-based occlusion mask.

use crate::error::{ensure, Result};
use crate::raster::{sample_into, BorderMode, Frame, Mask, MotionField};

/// Collision policy for [`forward_splat`].
#[derive(Debug, Clone, Copy)]
pub enum SplatMode<'a> {
    /// Bilinear-weighted average of everything landing on a texel.
    Average,
    /// Contributions scaled by `exp(weight)` of their source texel before
    /// normalizing.
    Softmax(&'a Mask),
}

fn check_t(t: f64) -> Result<()> {
    ensure!(t > 0.0 && t < 1.0, "t must lie strictly between 0 and 1, got {t}");
    Ok(())
}

/// Resamples `target` at `p + field(p)` for every pixel `p` of the field's
/// grid.
pub fn backward_warp(field: &MotionField, target: &Frame, border: BorderMode) -> Result<Frame> {
    ensure!(
        field.dims() == target.dims(),
        "field is {:?} but target frame is {:?}",
        field.dims(),
        target.dims()
    );
    let (w, h) = target.dims();
    Ok(Frame::par_from_fn(w, h, target.channels(), |x, y, px| {
        let [dx, dy] = field.get(x, y);
        sample_into(target, x as f64 + dx, y as f64 + dy, border, px);
    }))
}

/// Scatters each source texel bilinearly onto the four texels around
/// `p + field(p)`.
///
/// Returns the normalized frame and the splat coverage, clamped to `[0, 1]`.
/// Coverage 0 marks a hole; hole texels of the frame are 0. Accumulation is
/// serial so the result never depends on scheduling.
pub fn forward_splat(source: &Frame, field: &MotionField, mode: SplatMode<'_>) -> Result<(Frame, Mask)> {
    ensure!(
        field.dims() == source.dims(),
        "field is {:?} but source frame is {:?}",
        field.dims(),
        source.dims()
    );
    if let SplatMode::Softmax(m) = mode {
        ensure!(m.dims() == source.dims(), "softmax weight mask is {:?}, expected {:?}", m.dims(), source.dims());
    }
    let (w, h) = source.dims();
    let ch = source.channels();
    let mut acc = vec![0.0; w * h * ch];
    let mut norm = vec![0.0; w * h];
    let mut coverage = vec![0.0; w * h];

    for y in 0..h {
        for x in 0..w {
            let [dx, dy] = field.get(x, y);
            let tx = x as f64 + dx;
            let ty = y as f64 + dy;
            let importance = match mode {
                SplatMode::Average => 1.0,
                SplatMode::Softmax(m) => m.get(x, y).exp(),
            };
            let x0 = tx.floor();
            let y0 = ty.floor();
            let (fx, fy) = (tx - x0, ty - y0);
            let taps = [
                (x0, y0, (1.0 - fx) * (1.0 - fy)),
                (x0 + 1.0, y0, fx * (1.0 - fy)),
                (x0, y0 + 1.0, (1.0 - fx) * fy),
                (x0 + 1.0, y0 + 1.0, fx * fy),
            ];
            for (qx, qy, bw) in taps {
                if bw <= 0.0 || qx < 0.0 || qy < 0.0 || qx >= w as f64 || qy >= h as f64 {
                    continue;
                }
                let i = qy as usize * w + qx as usize;
                coverage[i] += bw;
                norm[i] += bw * importance;
                for c in 0..ch {
                    acc[i * ch + c] += bw * importance * source.get(x, y, c);
                }
            }
        }
    }

    for i in 0..w * h {
        if norm[i] > 0.0 {
            for c in 0..ch {
                acc[i * ch + c] /= norm[i];
            }
        }
        coverage[i] = coverage[i].min(1.0);
    }
    Ok((Frame::from_raw(w, h, ch, acc), Mask::from_raw(w, h, coverage)))
}

/// Forward-warping interpolation: both inputs are splatted to time `t` along
/// their scaled fields and blended with `(1 - t, t)`.
///
/// Where only one splat covers a texel that one is used alone; texels no
/// splat reaches fall back to the blend of the unwarped inputs.
pub fn interp_forward(i0: &Frame, i1: &Frame, v01: &MotionField, v10: &MotionField, t: f64) -> Result<Frame> {
    check_t(t)?;
    ensure!(
        i0.dims() == i1.dims() && i0.channels() == i1.channels(),
        "input frames differ in shape"
    );
    let v0t = crate::motion::scale_field(v01, t);
    let v1t = crate::motion::scale_field(v10, 1.0 - t);
    let (f0, m0) = forward_splat(i0, &v0t, SplatMode::Average)?;
    let (f1, m1) = forward_splat(i1, &v1t, SplatMode::Average)?;
    let (w, h) = i0.dims();
    Ok(Frame::par_from_fn(w, h, i0.channels(), |x, y, px| {
        let (c0, c1) = (m0.get(x, y) > 0.0, m1.get(x, y) > 0.0);
        for (c, o) in px.iter_mut().enumerate() {
            *o = match (c0, c1) {
                (true, true) => lerp(f0.get(x, y, c), f1.get(x, y, c), t),
                (true, false) => f0.get(x, y, c),
                (false, true) => f1.get(x, y, c),
                (false, false) => lerp(i0.get(x, y, c), i1.get(x, y, c), t),
            };
        }
    }))
}

/// Backward-warping interpolation `(1 - t) * warp(I0) + t * warp(I1)` with
/// clamped borders.
pub fn interp_backward(i0: &Frame, i1: &Frame, vt0: &MotionField, vt1: &MotionField, t: f64) -> Result<Frame> {
    check_t(t)?;
    ensure!(i0.channels() == i1.channels(), "input frames differ in channel count");
    let w0 = backward_warp(vt0, i0, BorderMode::Clamp)?;
    let w1 = backward_warp(vt1, i1, BorderMode::Clamp)?;
    ensure!(w0.dims() == w1.dims(), "motion fields differ in size");
    Ok(blend(&w0, &w1, t))
}

/// Per-sample `(1 - t) * a + t * b`, evaluated as `a + t * (b - a)` so equal
/// inputs pass through unchanged.
pub(crate) fn blend(a: &Frame, b: &Frame, t: f64) -> Frame {
    let data = a.data().iter().zip(b.data()).map(|(&p, &q)| lerp(p, q, t)).collect();
    Frame::from_raw(a.width(), a.height(), a.channels(), data)
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Backward warp of the all-ones image with zero padding. A value below 1
/// means the pixel's footprint leaves the frame.
pub fn warp_mask(field: &MotionField) -> Mask {
    let (w, h) = field.dims();
    let ones = Frame::from_raw(w, h, 1, vec![1.0; w * h]);
    Mask::par_from_fn(w, h, |x, y| {
        let [dx, dy] = field.get(x, y);
        let mut v = [0.0];
        sample_into(&ones, x as f64 + dx, y as f64 + dy, BorderMode::Zero, &mut v);
        v[0].clamp(0.0, 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2x2() -> Frame {
        Frame::from_raw(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0])
    }

    #[test]
    fn backward_warp_examples() {
        let f = grid2x2();
        let z = MotionField::zeros(2, 2);
        assert_eq!(backward_warp(&z, &f, BorderMode::Clamp).unwrap(), f);

        let v = MotionField::constant(2, 2, [1.0, 0.0]);
        assert_eq!(backward_warp(&v, &f, BorderMode::Clamp).unwrap().data(), &[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(backward_warp(&v, &f, BorderMode::Zero).unwrap().data(), &[1.0, 0.0, 3.0, 0.0]);

        assert!(backward_warp(&MotionField::zeros(3, 2), &f, BorderMode::Clamp).is_err());
    }

    #[test]
    fn splat_identity_and_collision() {
        let f = Frame::from_fn(3, 2, 3, |x, y, c| (x + y + c) as f64 / 6.0).unwrap();
        let (out, m) = forward_splat(&f, &MotionField::zeros(3, 2), SplatMode::Average).unwrap();
        assert_eq!(out, f);
        assert!(m.values().iter().all(|&v| v == 1.0));

        // 0.2 at x=0 moves +1, 0.8 at x=1 stays: both land on x=1.
        let f = Frame::new(3, 1, 1, vec![0.2, 0.8, 0.0]).unwrap();
        let v = MotionField::new(3, 1, vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        let (out, m) = forward_splat(&f, &v, SplatMode::Average).unwrap();
        assert!((out.get(1, 0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn splat_out_of_frame_leaves_hole() {
        let f = Frame::new(2, 1, 1, vec![0.3, 0.6]).unwrap();
        let v = MotionField::new(2, 1, vec![[2.0, 0.0], [0.0, 0.0]]).unwrap();
        let (out, m) = forward_splat(&f, &v, SplatMode::Average).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(out.get(0, 0, 0), 0.0);
        assert_eq!(out.get(1, 0, 0), 0.6);
    }

    #[test]
    fn softmax_splat_prefers_heavier_source() {
        let f = Frame::new(2, 1, 1, vec![0.2, 0.8]).unwrap();
        let v = MotionField::new(2, 1, vec![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let weights = Mask::new(2, 1, vec![0.0, 1.0]).unwrap();
        let (out, _) = forward_splat(&f, &v, SplatMode::Softmax(&weights)).unwrap();
        let e = 1f64.exp();
        let expected = (0.2 + 0.8 * e) / (1.0 + e);
        assert!((out.get(1, 0, 0) - expected).abs() < 1e-15);
        assert!(forward_splat(&f, &v, SplatMode::Softmax(&Mask::filled(1, 1, 0.0).unwrap())).is_err());
    }

    #[test]
    fn interp_forward_examples() {
        let img = Frame::from_fn(6, 4, 3, |x, y, c| ((x * 7 + y * 3 + c) % 10) as f64 / 10.0).unwrap();
        let z = MotionField::zeros(6, 4);
        assert_eq!(interp_forward(&img, &img, &z, &z, 0.3).unwrap(), img);

        let c = Frame::filled(6, 4, 1, 0.4).unwrap();
        let v = MotionField::constant(6, 4, [1.0, -1.0]);
        let back = MotionField::constant(6, 4, [-1.0, 1.0]);
        let out = interp_forward(&c, &c, &v, &back, 0.5).unwrap();
        assert!(out.data().iter().all(|&p| (p - 0.4).abs() < 1e-12));

        assert!(interp_forward(&c, &c, &z, &z, 0.0).is_err());
        assert!(interp_forward(&c, &c, &z, &z, 1.0).is_err());
    }

    #[test]
    fn interp_forward_moves_bar_by_half_displacement() {
        // Bar at x = 2..4 in I0 and x = 4..6 in I1.
        let bar = |lo: usize| Frame::from_fn(10, 1, 1, move |x, _, _| if (lo..lo + 2).contains(&x) { 1.0 } else { 0.0 }).unwrap();
        let (i0, i1) = (bar(2), bar(4));
        let v01 = MotionField::constant(10, 1, [2.0, 0.0]);
        let v10 = MotionField::constant(10, 1, [-2.0, 0.0]);
        let out = interp_forward(&i0, &i1, &v01, &v10, 0.5).unwrap();
        let expected = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(out.data(), &expected);
    }

    #[test]
    fn interp_backward_examples() {
        let img = Frame::from_fn(5, 5, 3, |x, y, c| ((x + 2 * y + c) % 7) as f64 / 7.0).unwrap();
        let z = MotionField::zeros(5, 5);
        assert_eq!(interp_backward(&img, &img, &z, &z, 0.37).unwrap(), img);

        let a = Frame::filled(5, 5, 1, 0.0).unwrap();
        let b = Frame::filled(5, 5, 1, 1.0).unwrap();
        let out = interp_backward(&a, &b, &z, &z, 0.25).unwrap();
        assert!(out.data().iter().all(|&p| p == 0.25));

        let a = Frame::filled(5, 5, 1, 0.2).unwrap();
        let b = Frame::filled(5, 5, 1, 0.6).unwrap();
        let out = interp_backward(&a, &b, &z, &z, 0.5).unwrap();
        assert!(out.data().iter().all(|&p| (p - 0.4).abs() < 1e-15));
        assert!(interp_backward(&a, &b, &z, &z, 1.2).is_err());
    }

    #[test]
    fn warp_mask_examples() {
        assert!(warp_mask(&MotionField::zeros(4, 3)).values().iter().all(|&v| v == 1.0));

        let m = warp_mask(&MotionField::constant(4, 1, [2.0, 0.0]));
        assert_eq!(m.values(), &[1.0, 1.0, 0.0, 0.0]);

        let m = warp_mask(&MotionField::constant(2, 1, [0.5, 0.0]));
        assert_eq!(m.values(), &[1.0, 0.5]);
    }
}
