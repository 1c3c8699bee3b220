use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vfi_core::harness::{load_png, REPORT_HEADER};

fn vfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfi")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = vfi(args);
    assert!(out.status.success(), "vfi {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two Translate scenes of 64 px under `dir`.
fn synth(dir: &Path) {
    ok(&["synth", "--seed", "3", "--kind", "translate", "--count", "2", "--size", "64", "--out", p(dir)]);
}

#[test]
fn synth_writes_one_folder_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let mut names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for n in &names {
        for f in ["im1.png", "im2.png", "im3.png"] {
            assert_eq!(load_png(&dir.path().join(n).join(f)).unwrap().dims(), (64, 64));
        }
    }
}

#[test]
fn interpolate_writes_a_frame_of_input_size() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let scene = fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    let (f0, f1) = (scene.join("im1.png"), scene.join("im3.png"));
    let out = dir.path().join("mid.png");
    for method in ["full", "approx1", "sbmf"] {
        ok(&["interpolate", "--frame0", p(&f0), "--frame1", p(&f1), "--method", method, "--levels", "2", "--out", p(&out)]);
        assert_eq!(load_png(&out).unwrap().dims(), (64, 64));
    }

    // The same frame twice comes back unchanged.
    ok(&["interpolate", "--frame0", p(&f0), "--frame1", p(&f0), "--t", "0.3", "--levels", "2", "--out", p(&out)]);
    assert_eq!(load_png(&out).unwrap(), load_png(&f0).unwrap());
}

#[test]
fn bench_report_fills_timing_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data);
    let report = dir.path().join("r.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["bench", "--dataset", p(&data), "--methods", "approx1,full", "--levels", "2", "--report", p(&report)];
        args.extend_from_slice(extra);
        ok(&args);
        fs::read_to_string(&report).unwrap()
    };

    let plain = run(&[]);
    let lines: Vec<&str> = plain.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER.join(","));
    // Two triplets x two methods, then two mean rows.
    assert_eq!(lines.len(), 1 + 4 + 2);
    assert!(lines[5].starts_with("mean,approx1,") && lines[6].starts_with("mean,full,"));
    for l in &lines[1..] {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert!(cells[2..6].iter().all(|c| c.parse::<f64>().is_ok()), "{l}");
        assert_eq!(cells[6], "");
    }
    assert_eq!(run(&[]), plain);

    let timed = run(&["--timing"]);
    for l in timed.lines().skip(1) {
        assert!(l.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data);
    let cfg = dir.path().join("cfg.toml");
    // Too many levels for 64 px frames.
    fs::write(&cfg, "levels = 9\nradius = 2\ncost = \"census\"\n").unwrap();
    let report = dir.path().join("r.csv");
    let base = ["bench", "--dataset", p(&data), "--methods", "sbmf", "--report", p(&report), "--config", p(&cfg)];

    // Failed runs keep their rows with empty metric cells.
    let psnr_cells = |args: &[&str]| {
        ok(args);
        let text = fs::read_to_string(&report).unwrap();
        text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().to_string()).collect::<Vec<_>>()
    };
    assert!(psnr_cells(&base).iter().all(|c| c.is_empty()));
    assert!(psnr_cells(&[&base[..], &["--levels", "2"]].concat()).iter().all(|c| c.parse::<f64>().is_ok()));
}

#[test]
fn bad_input_exits_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "levles = 2\n").unwrap();
    let missing = dir.path().join("nowhere");
    let report = dir.path().join("r.csv");
    let cases: [Vec<&str>; 4] = [
        vec!["bench", "--dataset", p(&missing), "--report", p(&report)],
        vec!["bench", "--dataset", p(dir.path()), "--report", p(&report), "--config", p(&cfg)],
        vec!["bench", "--dataset", p(dir.path()), "--report", p(&report), "--methods", "magic"],
        vec!["synth", "--kind", "translate", "--out", p(dir.path()), "--threads", "0"],
    ];
    for args in cases {
        let out = vfi(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty(), "{args:?} printed nothing");
    }
    assert!(!report.exists());
}
