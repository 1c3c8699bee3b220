//! Closed-form intermediate motion models built from inter-frame flows.
//!
//! `v01` is the flow from frame 0 to frame 1 and `v10` the reverse. The
//! returned pairs `(vt0, vt1)` point from the intermediate instant `t` to
//! frames 0 and 1 and feed [`crate::warp::interp_backward`].

use crate::error::{ensure, Result};
use crate::raster::MotionField;

/// Which inter-frame flow a borrowed approximation is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSource {
    /// `vt0 = -t * v01`, `vt1 = (1 - t) * v01`.
    From01,
    /// `vt0 = t * v10`, `vt1 = -(1 - t) * v10`.
    From10,
}

fn check_t(t: f64) -> Result<()> {
    ensure!(t > 0.0 && t < 1.0, "t must lie strictly between 0 and 1, got {t}");
    Ok(())
}

fn check_pair(a: &MotionField, b: &MotionField) -> Result<()> {
    ensure!(a.dims() == b.dims(), "flow fields differ in size: {:?} vs {:?}", a.dims(), b.dims());
    Ok(())
}

pub fn scale_field(field: &MotionField, s: f64) -> MotionField {
    field.map(|[dx, dy]| [s * dx, s * dy])
}

fn combine(a: &MotionField, ca: f64, b: &MotionField, cb: f64) -> MotionField {
    let vectors = a
        .vectors()
        .iter()
        .zip(b.vectors())
        .map(|(p, q)| [ca * p[0] + cb * q[0], ca * p[1] + cb * q[1]])
        .collect();
    MotionField::from_raw(a.width(), a.height(), vectors)
}

/// Borrows the flow of one direction for both intermediate fields.
pub fn approx_borrowed(
    v01: &MotionField,
    v10: &MotionField,
    t: f64,
    source: FlowSource,
) -> Result<(MotionField, MotionField)> {
    check_t(t)?;
    check_pair(v01, v10)?;
    Ok(match source {
        FlowSource::From01 => (scale_field(v01, -t), scale_field(v01, 1.0 - t)),
        FlowSource::From10 => (scale_field(v10, t), scale_field(v10, -(1.0 - t))),
    })
}

/// Time-weighted combination of both borrowed candidates:
/// `vt0 = -(1-t) t v01 + t^2 v10` and `vt1 = (1-t)^2 v01 - t (1-t) v10`.
pub fn approx_blended(v01: &MotionField, v10: &MotionField, t: f64) -> Result<(MotionField, MotionField)> {
    check_t(t)?;
    check_pair(v01, v10)?;
    let s = 1.0 - t;
    Ok((combine(v01, -s * t, v10, t * t), combine(v01, s * s, v10, -t * s)))
}

/// The `t -> 0` field implied by `vt1` under linear motion:
/// `vt0 = -(t / (1 - t)) * vt1`.
pub fn symmetric_counterpart(vt1: &MotionField, t: f64) -> Result<MotionField> {
    check_t(t)?;
    Ok(scale_field(vt1, -symmetric_ratio(t)))
}

/// `t / (1 - t)`, the length ratio of the two halves of a linear trajectory.
#[inline]
pub(crate) fn symmetric_ratio(t: f64) -> f64 {
    t / (1.0 - t)
}
