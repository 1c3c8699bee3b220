#![allow(dead_code)]

use proptest::prelude::*;
use vfi_core::{Frame, Mask, MotionField};

pub fn frame(w: usize, h: usize, ch: usize) -> impl Strategy<Value = Frame> {
    prop::collection::vec(0.0..=1.0f64, w * h * ch).prop_map(move |d| Frame::new(w, h, ch, d).unwrap())
}

/// A frame of random size up to `max` on each side, with 1 or 3 channels.
pub fn any_frame(max: usize) -> impl Strategy<Value = Frame> {
    (1..=max, 1..=max, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(w, h, c)| frame(w, h, c))
}

/// Random vectors with components in `[-max, max]`, capped at the field's
/// larger side.
pub fn field(w: usize, h: usize, max: f64) -> impl Strategy<Value = MotionField> {
    let max = max.min(w.max(h) as f64);
    prop::collection::vec([-max..=max, -max..=max], w * h).prop_map(move |v| MotionField::new(w, h, v).unwrap())
}

pub fn mask(w: usize, h: usize) -> impl Strategy<Value = Mask> {
    prop::collection::vec(0.0..=1.0f64, w * h).prop_map(move |v| Mask::new(w, h, v).unwrap())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn field_diff(a: &MotionField, b: &MotionField) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.vectors().iter().zip(b.vectors()).map(|(p, q)| (p[0] - q[0]).abs().max((p[1] - q[1]).abs())).fold(0.0, f64::max)
}
