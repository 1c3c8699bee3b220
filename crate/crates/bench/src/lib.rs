//! Fixtures shared by the kernel benchmarks.

use vfi_core::harness::{gen_synthetic, SceneKind, SyntheticScene};
use vfi_core::SearchParams;

/// Side length of the benchmark scenes.
pub const SIZE: usize = 128;

/// A seeded Occlude scene at [`SIZE`].
pub fn scene() -> SyntheticScene {
    gen_synthetic(7, SceneKind::Occlude, SIZE).expect("benchmark scene")
}

/// Search settings sized for [`SIZE`] frames.
pub fn params() -> SearchParams {
    SearchParams { levels: 3, ..SearchParams::default() }
}
