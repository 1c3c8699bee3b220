use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Rgb, RgbImage};

use crate::error::{ensure, Error, Result};
use crate::raster::Frame;

/// Two input frames, the true intermediate frame and its time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub frame0: Frame,
    pub gt: Frame,
    pub frame1: Frame,
    pub t: f64,
    pub id: String,
}

impl Triplet {
    pub fn new(frame0: Frame, gt: Frame, frame1: Frame, t: f64, id: impl Into<String>) -> Result<Self> {
        ensure!(t > 0.0 && t < 1.0, "t must lie strictly between 0 and 1, got {t}");
        let shape = |f: &Frame| (f.dims(), f.channels());
        ensure!(
            shape(&frame0) == shape(&gt) && shape(&gt) == shape(&frame1),
            "dimension mismatch: {:?}, {:?}, {:?}",
            shape(&frame0),
            shape(&gt),
            shape(&frame1)
        );
        Ok(Self { frame0, gt, frame1, t, id: id.into() })
    }
}

/// Decodes a PNG into an RGB frame with values in `[0, 1]`.
pub fn load_png(path: &Path) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    Frame::new(w as usize, h as usize, 3, data)
}

/// Writes an 8-bit RGB PNG; values are clamped to `[0, 1]` and rounded half
/// away from zero. Single-channel frames are replicated to gray.
pub fn save_png(frame: &Frame, path: &Path) -> Result<()> {
    let (w, h) = frame.dims();
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let img: RgbImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let p = frame.pixel(x as usize, y as usize);
        if p.len() == 1 {
            let g = quantize(p[0]);
            Rgb([g, g, g])
        } else {
            Rgb([quantize(p[0]), quantize(p[1]), quantize(p[2])])
        }
    });
    img.save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

const TRIPLET_FILES: [&str; 3] = ["im1.png", "im2.png", "im3.png"];

fn load_folder(dir: &Path, id: String) -> Result<Triplet> {
    let names = TRIPLET_FILES;
    for n in names {
        let p = dir.join(n);
        ensure!(p.is_file(), "{}: missing {n}", dir.display());
    }
    let [f0, gt, f1] = names.map(|n| load_png(&dir.join(n)));
    Triplet::new(f0?, gt?, f1?, 0.5, id).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{}: {msg}", dir.display())),
        other => other,
    })
}

/// Loads every `im1/im2/im3.png` triplet folder under `root`, sorted by
/// folder name. Broken folders are logged and skipped.
pub fn load_triplet_dir(root: &Path) -> Result<Vec<Triplet>> {
    let io_err = |source| Error::Io { path: root.to_path_buf(), source };
    let mut dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        if path.is_dir() {
            dirs.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    dirs.sort();

    let mut out = Vec::with_capacity(dirs.len());
    for (id, dir) in dirs {
        match load_folder(&dir, id) {
            Ok(t) => out.push(t),
            Err(e) => log::warn!("skipping triplet: {e}"),
        }
    }
    Ok(out)
}

/// Writes `triplet` as an `im1/im2/im3.png` folder, creating `dir` if
/// needed. The time instant is not stored; loading assumes the midpoint.
pub fn save_triplet(triplet: &Triplet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    for (name, frame) in TRIPLET_FILES.iter().zip([&triplet.frame0, &triplet.gt, &triplet.frame1]) {
        save_png(frame, &dir.join(name))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, 3, |x, y, c| ((x * 40 + y * 20 + c * 60) % 256) as f64 / 255.0).unwrap()
    }

    fn write_triplet(dir: &Path, sizes: [(usize, usize); 3], skip: Option<&str>) {
        fs::create_dir_all(dir).unwrap();
        for (name, (w, h)) in ["im1.png", "im2.png", "im3.png"].into_iter().zip(sizes) {
            if skip != Some(name) {
                save_png(&gradient(w, h), &dir.join(name)).unwrap();
            }
        }
    }

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("a.png");
        let f = gradient(5, 4);
        save_png(&f, &p).unwrap();
        assert_eq!(load_png(&p).unwrap(), f);
    }

    #[test]
    fn save_rounds_half_away_from_zero() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("r.png");
        let f = Frame::new(3, 1, 1, vec![0.5, 0.25, 0.75]).unwrap();
        save_png(&f, &p).unwrap();
        let back = image::open(&p).unwrap().into_rgb8();
        let px: Vec<u8> = back.pixels().map(|p| p[0]).collect();
        assert_eq!(px, vec![128, 64, 191]);
    }

    #[test]
    fn loads_valid_and_skips_broken_folders() {
        let tmp = tempfile::tempdir().unwrap();
        let s = (6, 4);
        write_triplet(&tmp.path().join("b"), [s; 3], None);
        write_triplet(&tmp.path().join("a"), [s; 3], None);
        write_triplet(&tmp.path().join("c_missing"), [s; 3], Some("im2.png"));
        write_triplet(&tmp.path().join("d_mixed"), [s, (5, 4), s], None);
        fs::write(tmp.path().join("stray.txt"), "x").unwrap();

        let ts = load_triplet_dir(tmp.path()).unwrap();
        let ids: Vec<&str> = ts.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(ts[0].t, 0.5);
        assert_eq!(ts[0].frame0, gradient(6, 4));
    }

    #[test]
    fn saved_triplet_loads_back() {
        let tmp = tempfile::tempdir().unwrap();
        let t = Triplet::new(gradient(6, 5), gradient(6, 5), gradient(6, 5), 0.5, "x").unwrap();
        save_triplet(&t, &tmp.path().join("nested").join("x")).unwrap();
        let back = load_triplet_dir(&tmp.path().join("nested")).unwrap();
        assert_eq!(back, vec![t]);
    }

    #[test]
    fn unreadable_root_is_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_triplet_dir(&tmp.path().join("nope")), Err(Error::Io { .. })));
    }

    #[test]
    fn triplet_invariants() {
        let f = gradient(4, 4);
        assert!(Triplet::new(f.clone(), f.clone(), f.clone(), 1.0, "x").is_err());
        assert!(Triplet::new(f.clone(), gradient(4, 3), f.clone(), 0.5, "x").is_err());
        assert!(Triplet::new(f.clone(), f.clone(), f, 0.5, "x").is_ok());
    }
}
