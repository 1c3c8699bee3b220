use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Triplet;
use crate::error::{Error, Result};
use crate::raster::{Frame, MotionField};

/// Motion pattern of a synthetic scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneKind {
    /// Sprite moves linearly; the true middle frame is the exact midpoint.
    Translate,
    /// Sprite sits at `p`, `p + d`, `p + 3d`.
    Accelerate,
    /// Sprite moves linearly across a second, static sprite.
    Occlude,
    /// Sprite rotates by `-a`, `0`, `+a` about its center.
    Rotate,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [SceneKind::Translate, SceneKind::Accelerate, SceneKind::Occlude, SceneKind::Rotate];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Translate => "translate",
            SceneKind::Accelerate => "accelerate",
            SceneKind::Occlude => "occlude",
            SceneKind::Rotate => "rotate",
        }
    }

    fn salt(self) -> u64 {
        match self {
            SceneKind::Translate => 0x5452,
            SceneKind::Accelerate => 0x4143,
            SceneKind::Occlude => 0x4f43,
            SceneKind::Rotate => 0x524f,
        }
    }
}

impl std::fmt::Display for SceneKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scene kind '{s}' (expected translate, accelerate, occlude or rotate)")))
    }
}

/// A generated triplet with the true motion from the middle frame to each
/// input frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub triplet: Triplet,
    pub vt0: MotionField,
    pub vt1: MotionField,
}

/// Smooth value noise: random lattice values blended with smoothstep
/// weights, one lattice per channel.
struct ValueNoise {
    spacing: f64,
    cols: usize,
    rows: usize,
    values: Vec<[f64; 3]>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, extent: f64, spacing: f64, lo: f64, hi: f64) -> Self {
        let cols = (extent / spacing).ceil() as usize + 2;
        let rows = cols;
        let values = (0..cols * rows)
            .map(|_| [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)])
            .collect();
        Self { spacing, cols, rows, values }
    }

    fn at(&self, x: f64, y: f64, c: usize) -> f64 {
        let gx = (x / self.spacing).clamp(0.0, (self.cols - 1) as f64);
        let gy = (y / self.spacing).clamp(0.0, (self.rows - 1) as f64);
        let x0 = (gx.floor() as usize).min(self.cols - 2);
        let y0 = (gy.floor() as usize).min(self.rows - 2);
        let smooth = |f: f64| f * f * (3.0 - 2.0 * f);
        let fx = smooth(gx - x0 as f64);
        let fy = smooth(gy - y0 as f64);
        let v = |i: usize, j: usize| self.values[j * self.cols + i][c];
        let top = v(x0, y0) + fx * (v(x0 + 1, y0) - v(x0, y0));
        let bottom = v(x0, y0 + 1) + fx * (v(x0 + 1, y0 + 1) - v(x0, y0 + 1));
        top + fy * (bottom - top)
    }
}

/// Sum of value-noise octaves.
struct Texture(Vec<ValueNoise>);

impl Texture {
    fn at(&self, x: f64, y: f64, c: usize) -> f64 {
        self.0.iter().map(|o| o.at(x, y, c)).sum::<f64>().clamp(0.0, 1.0)
    }
}

struct Sprite {
    side: f64,
    texture: Texture,
}

#[derive(Clone, Copy)]
struct Pose {
    center: [f64; 2],
    angle: f64,
}

impl Sprite {
    fn new(rng: &mut ChaCha8Rng, side: f64) -> Self {
        let e = side + 1.0;
        let texture = Texture(vec![
            ValueNoise::new(rng, e, 16.0, 0.1, 0.9),
            ValueNoise::new(rng, e, 8.0, -0.15, 0.15),
            ValueNoise::new(rng, e, 4.0, -0.08, 0.08),
        ]);
        Self { side, texture }
    }

    /// Sprite-local texture coordinates of image point `p`, if covered.
    fn local(&self, pose: Pose, p: [f64; 2]) -> Option<[f64; 2]> {
        let (s, c) = pose.angle.sin_cos();
        let dx = p[0] - pose.center[0];
        let dy = p[1] - pose.center[1];
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let h = self.side / 2.0;
        (lx >= -h && lx < h && ly >= -h && ly < h).then_some([lx + h, ly + h])
    }

    /// Image-space point of sprite-local coordinate `l` under `pose`.
    fn place(&self, pose: Pose, l: [f64; 2]) -> [f64; 2] {
        let (s, c) = pose.angle.sin_cos();
        let h = self.side / 2.0;
        let lx = l[0] - h;
        let ly = l[1] - h;
        [pose.center[0] + c * lx - s * ly, pose.center[1] + s * lx + c * ly]
    }
}

struct Layer<'a> {
    sprite: &'a Sprite,
    poses: [Pose; 3],
}

fn render(size: usize, background: &Texture, layers: &[Layer<'_>], instant: usize) -> Frame {
    Frame::from_raw(size, size, 3, {
        let mut data = Vec::with_capacity(size * size * 3);
        for y in 0..size {
            for x in 0..size {
                let p = [x as f64, y as f64];
                let hit = layers
                    .iter()
                    .rev()
                    .find_map(|l| l.sprite.local(l.poses[instant], p).map(|uv| (l.sprite, uv)));
                for c in 0..3 {
                    data.push(match hit {
                        Some((s, uv)) => s.texture.at(uv[0], uv[1], c),
                        None => background.at(p[0], p[1], c),
                    });
                }
            }
        }
        data
    })
}

/// True displacement from each middle-frame pixel to where that surface
/// point sits at `instant`; background and static content stay put.
fn true_field(size: usize, layers: &[Layer<'_>], instant: usize) -> MotionField {
    let mut v = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let p = [x as f64, y as f64];
            let hit = layers.iter().rev().find_map(|l| l.sprite.local(l.poses[1], p).map(|uv| (l, uv)));
            v.push(match hit {
                Some((l, uv)) => {
                    let q = l.sprite.place(l.poses[instant], uv);
                    [q[0] - p[0], q[1] - p[1]]
                }
                None => [0.0, 0.0],
            });
        }
    }
    MotionField::from_raw(size, size, v)
}

/// Seeded value-noise frame translated by `shift`, for motion tests.
#[cfg(test)]
pub(crate) fn noise_frame(seed: u64, w: usize, h: usize, spacing: f64, shift: [f64; 2]) -> Frame {
    const MARGIN: f64 = 64.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = w.max(h) as f64 + 2.0 * MARGIN;
    let coarse = ValueNoise::new(&mut rng, extent, spacing, 0.15, 0.85);
    let fine = ValueNoise::new(&mut rng, extent, spacing / 2.0, -0.1, 0.1);
    let bg = Texture(vec![coarse, fine]);
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .flat_map(|(x, y)| {
            let (u, v) = (x as f64 - shift[0] + MARGIN, y as f64 - shift[1] + MARGIN);
            let bg = &bg;
            (0..3).map(move |c| bg.at(u, v, c))
        })
        .collect();
    Frame::from_raw(w, h, 3, data)
}

fn signed_step(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    let m = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        m as f64
    } else {
        -(m as f64)
    }
}

/// Generates a seeded scene: multi-octave noise background plus one moving
/// textured square (and a static occluder for [`SceneKind::Occlude`]).
/// Pure in `(seed, kind, size)`.
pub fn gen_synthetic(seed: u64, kind: SceneKind, size: usize) -> Result<SyntheticScene> {
    if size < 32 {
        return Err(Error::InvalidArgument(format!("synthetic scenes need size >= 32, got {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ kind.salt());
    let n = size as f64;
    let background = Texture(vec![
        ValueNoise::new(&mut rng, n, n / 4.0, 0.2, 0.8),
        ValueNoise::new(&mut rng, n, n / 10.0, -0.1, 0.1),
        ValueNoise::new(&mut rng, n, 4.0, -0.03, 0.03),
    ]);

    let side = (n / 4.0).round();
    let sprite = Sprite::new(&mut rng, side);
    let cx = n / 2.0 + rng.random_range(-n / 16.0..n / 16.0);
    let center = [cx, n / 2.0 + rng.random_range(-n / 16.0..n / 16.0)];
    let at = |c: [f64; 2], off: [f64; 2]| Pose { center: [c[0] + off[0], c[1] + off[1]], angle: 0.0 };

    let occluder;
    let mut layers = Vec::with_capacity(2);
    match kind {
        SceneKind::Translate => {
            let d = [signed_step(&mut rng, 2, 8), signed_step(&mut rng, 0, 6)];
            let half = [d[0] / 2.0, d[1] / 2.0];
            layers.push(Layer {
                sprite: &sprite,
                poses: [at(center, [-half[0], -half[1]]), at(center, [0.0, 0.0]), at(center, half)],
            });
        }
        SceneKind::Accelerate => {
            let d = [signed_step(&mut rng, 2, 4), signed_step(&mut rng, 0, 3)];
            let p0 = [center[0] - d[0], center[1] - d[1]];
            layers.push(Layer {
                sprite: &sprite,
                poses: [at(p0, [0.0, 0.0]), at(p0, d), at(p0, [3.0 * d[0], 3.0 * d[1]])],
            });
        }
        SceneKind::Occlude => {
            occluder = Sprite::new(&mut rng, (n / 5.0).round());
            let still = at(center, [0.0, 0.0]);
            layers.push(Layer { sprite: &occluder, poses: [still; 3] });
            let d = [signed_step(&mut rng, 6, 10), signed_step(&mut rng, 0, 4)];
            let half = [d[0] / 2.0, d[1] / 2.0];
            let jitter = side / 4.0;
            let mid = [center[0] + rng.random_range(-jitter..jitter), center[1] + rng.random_range(-jitter..jitter)];
            layers.push(Layer {
                sprite: &sprite,
                poses: [at(mid, [-half[0], -half[1]]), at(mid, [0.0, 0.0]), at(mid, half)],
            });
        }
        SceneKind::Rotate => {
            let a = rng.random_range(3.0f64..8.0).to_radians() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let rot = |angle| Pose { center, angle };
            layers.push(Layer { sprite: &sprite, poses: [rot(-a), rot(0.0), rot(a)] });
        }
    }

    let frames = [0, 1, 2].map(|i| render(size, &background, &layers, i));
    let [f0, gt, f1] = frames;
    let triplet = Triplet::new(f0, gt, f1, 0.5, format!("{kind}-{seed:06}"))?;
    Ok(SyntheticScene { triplet, vt0: true_field(size, &layers, 0), vt1: true_field(size, &layers, 2) })
}
