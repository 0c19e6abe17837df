use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evtrack")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SCENE: &str = "\
geometry = 128x96
start = 40, 40
segment = 0, 500, 0
duration_us = 60000
events_per_pixel = 2
jitter_us = 0
diamond = 6
diamond_corners = 6
";

fn scene(dir: &Path) -> String {
    let p = dir.join("small.scene");
    fs::write(&p, SCENE).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["bench", "--seed", "x"])), 1);
    assert_eq!(code(&run(&["bench"])), 1);
    assert_eq!(code(&run(&["bench", "--builtin", "nope"])), 1);
    assert_eq!(code(&run(&["reconstruct", "--builtin", "fig4", "--geometry", "12by4", "--output", "x"])), 1);
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("reconstruct"));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bin");
    assert_eq!(code(&run(&["track", "--input", missing.to_str().unwrap()])), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,x,y,p\n10,1,1,1\n5,1,1,1\n").unwrap();
    assert_eq!(code(&run(&["reconstruct", "--input", bad.to_str().unwrap(), "--velocity", "1,0", "--output", "o"])), 2);

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "R = thirty\n").unwrap();
    let s = scene(dir.path());
    let o = run(&["bench", "--input", &s, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("R"));
}

#[test]
fn synth_then_reconstruct_recovers_the_outline() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(dir.path());
    let stream = dir.path().join("small.bin");
    let o = run(&["synth", "--input", &s, "--output", stream.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("small.truth.csv").exists());

    let prefix = dir.path().join("out/rec");
    let o = run(&[
        "reconstruct",
        "--input",
        stream.to_str().unwrap(),
        "--subpixel",
        "1",
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("out/rec.contour.csv")).unwrap();
    let got: BTreeSet<(i64, i64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0].round() as i64, f[1].round() as i64)
        })
        .collect();
    let mut want = BTreeSet::new();
    for dx in -6i64..=6 {
        let r = 6 - dx.abs();
        want.insert((40 + dx, 40 + r));
        want.insert((40 + dx, 40 - r));
    }
    assert_eq!(got, want);
    for ext in ["pdf.pgm", "contour.pgm", "pdf.csv"] {
        assert!(dir.path().join(format!("out/rec.{ext}")).exists(), "{ext}");
    }
}

#[test]
fn track_writes_telemetry_for_every_tracker() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(dir.path());
    let out = dir.path().join("tele.csv");
    let o = run(&["track", "--input", &s, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let declared = text.lines().filter(|l| l.starts_with("# tracker")).count();
    // Four corners, one bank of seeds each.
    assert!(declared >= 4 && declared % 4 == 0, "{declared} trackers");
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert!(rows > 100, "{rows} lines");
    assert_eq!(String::from_utf8_lossy(&o.stderr).matches("feature ").count(), 4);
}

#[test]
fn render_of_an_empty_stream_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "t,x,y,p\n").unwrap();
    let frames = dir.path().join("frames");
    let o = run(&["render", "--input", empty.to_str().unwrap(), "--output", frames.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 frames"));
    assert_eq!(fs::read_dir(&frames).unwrap().count(), 0);
}

#[test]
fn render_writes_one_frame_per_window() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(dir.path());
    let frames = dir.path().join("frames");
    let o = run(&["render", "--input", &s, "--window-ms", "20", "--output", frames.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let n = fs::read_dir(&frames).unwrap().count();
    assert!((3..=4).contains(&n), "{n} frames");
    assert!(frames.join("frame_00000.pgm").exists());
}

#[test]
fn bench_reports_four_corners_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(dir.path());
    let a = run(&["bench", "--input", &s]);
    let b = run(&["bench", "--input", &s]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 5);
}

#[test]
fn builtin_benchmark_has_four_features() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = run(&["bench", "--builtin", "fig4", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["0", "1", "2", "3"]);
}
