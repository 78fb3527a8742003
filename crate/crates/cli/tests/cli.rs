use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalesteer"))
        .current_dir(dir)
        .env_remove("SCALESTEER_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_corpus(dir: &Path, name: &str, stds: &str) {
    ok(
        dir,
        &[
            "-q",
            "synth",
            "--out",
            name,
            "--size",
            "128",
            "--disks",
            "4",
            "--radius-min",
            "6",
            "--radius-max",
            "14",
            "--count",
            "2",
            "--bg-std",
            stds,
            "--seed",
            "11",
        ],
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().contains("manifest"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn pipeline_is_bit_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    for tag in ["a", "b"] {
        let corpus = format!("c{tag}");
        small_corpus(d, &corpus, "0,3");
        let list = format!("{corpus}/corpus.csv");
        let dets = format!("d{tag}");
        ok(d, &["-q", "detect", "--corpus", &list, "--out-dir", &dets]);
        ok(
            d,
            &[
                "-q",
                "detect",
                "--corpus",
                &list,
                "--out-dir",
                &dets,
                "--method",
                "log",
            ],
        );
        ok(
            d,
            &[
                "-q",
                "eval",
                "--corpus",
                &list,
                "--detections",
                &dets,
                "--methods",
                "multichannel,log",
                "--out",
                &format!("e{tag}.csv"),
                "--summary",
                &format!("s{tag}.json"),
            ],
        );
    }
    assert_eq!(files(&d.join("ca")), files(&d.join("cb")));
    assert_eq!(files(&d.join("da")), files(&d.join("db")));
    assert_eq!(
        fs::read(d.join("ea.csv")).unwrap(),
        fs::read(d.join("eb.csv")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("sa.json")).unwrap(),
        fs::read(d.join("sb.json")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_detections() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "c", "0");
    let img = "c/scene_s0_0000.png";
    ok(
        d,
        &["-q", "--threads", "1", "detect", img, "--out", "one.csv"],
    );
    ok(
        d,
        &["-q", "--threads", "4", "detect", img, "--out", "four.csv"],
    );
    assert_eq!(
        fs::read(d.join("one.csv")).unwrap(),
        fs::read(d.join("four.csv")).unwrap()
    );
}

#[test]
fn missing_truth_exits_with_input_error() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("d.csv"), "x,y,radius,score,scale,t_star\n").unwrap();
    let out = run(
        t.path(),
        &["eval", "--truth", "absent.json", "--detections", "d.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn usage_errors_exit_2() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        run(t.path(), &["detect", "--method", "bogus", "x.png"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(t.path(), &["frobnicate"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_scalesteer"))
        .current_dir(t.path())
        .env("SCALESTEER_THREADS", "many")
        .args(["quality"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blank_image_gives_header_only() {
    let t = TempDir::new().unwrap();
    let mut pgm = b"P5\n64 64\n255\n".to_vec();
    pgm.extend(std::iter::repeat_n(17u8, 64 * 64));
    fs::write(t.path().join("blank.pgm"), pgm).unwrap();
    for method in ["multichannel", "log"] {
        let out = ok(t.path(), &["-q", "detect", "blank.pgm", "--method", method]);
        assert_eq!(
            String::from_utf8(out.stdout).unwrap(),
            "x,y,radius,score,scale,t_star\n"
        );
    }
}

#[test]
fn stdout_mode_sends_manifest_to_stderr() {
    let t = TempDir::new().unwrap();
    small_corpus(t.path(), "c", "0");
    let out = ok(t.path(), &["detect", "c/scene_s0_0001.png"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("x,y,radius"));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let start = stderr.find('{').unwrap();
    let manifest: Value = serde_json::from_str(&stderr[start..]).unwrap();
    assert_eq!(manifest["args"]["command"]["command"], "detect");
}

#[test]
fn log_method_finds_isolated_disks() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "c", "0");
    ok(
        d,
        &[
            "-q",
            "detect",
            "--corpus",
            "c/corpus.csv",
            "--out-dir",
            "d",
            "--method",
            "log",
        ],
    );
    ok(
        d,
        &[
            "-q",
            "eval",
            "--corpus",
            "c/corpus.csv",
            "--detections",
            "d",
            "--methods",
            "log",
            "--summary",
            "s.json",
        ],
    );
    let s = json(&d.join("s.json"));
    assert_eq!(s.as_array().unwrap().len(), 1);
    assert_eq!(s[0]["method"], "log");
    assert!(s[0]["jaccard"].as_f64().unwrap() > 0.7, "{s}");
}

#[test]
fn sigma_sweep_summarises_each_level() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "c", "0,2,5");
    ok(
        d,
        &[
            "-q",
            "detect",
            "--corpus",
            "c/corpus.csv",
            "--out-dir",
            "d",
            "--timings",
            "t.csv",
        ],
    );
    ok(
        d,
        &[
            "-q",
            "eval",
            "--corpus",
            "c/corpus.csv",
            "--detections",
            "d",
            "--timings",
            "t.csv",
            "--out",
            "e.csv",
            "--summary",
            "s.json",
            "--plot",
            "p.svg",
        ],
    );
    let s = json(&d.join("s.json"));
    let sigmas: Vec<f64> = s
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["sigma"].as_f64().unwrap())
        .collect();
    assert_eq!(sigmas, vec![0.0, 2.0, 5.0]);
    let rows = fs::read_to_string(d.join("e.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 6);
    assert!(
        rows.lines().skip(1).all(|l| !l.ends_with(',')),
        "wall_ms filled from timings"
    );
    assert!(fs::read_to_string(d.join("p.svg"))
        .unwrap()
        .contains("<svg"));
}

#[test]
fn quality_minimum_repeats_each_period() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let first = ok(d, &["quality", "--out", "q1.csv"]);
    let m1 = json(&d.join("q1.csv.manifest.json"));
    let q1 = m1["resolved"]["min_quality"].as_f64().unwrap();
    assert!((q1 - 0.998).abs() < 0.01, "{q1}");
    assert!(String::from_utf8_lossy(&first.stderr).contains("minimum quality"));
    let end = m1["resolved"]["end"].as_f64().unwrap();
    ok(
        d,
        &[
            "-q",
            "quality",
            "--start",
            &end.to_string(),
            "--end",
            &(end * end).to_string(),
            "--out",
            "q2.csv",
        ],
    );
    let q2 = json(&d.join("q2.csv.manifest.json"))["resolved"]["min_quality"]
        .as_f64()
        .unwrap();
    assert!((q1 - q2).abs() < 1e-6, "{q1} vs {q2}");
}

#[test]
fn flags_beat_config_file_beats_defaults() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "c", "0");
    fs::write(
        d.join("run.cfg"),
        "# detector settings\nthreshold = 0.25\nnms_radius=3\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "-q",
            "detect",
            "--config",
            "run.cfg",
            "c/scene_s0_0000.png",
            "--nms-radius",
            "9",
            "--out",
            "o.csv",
        ],
    );
    let m = json(&d.join("o.csv.manifest.json"));
    let det = &m["resolved"]["detector"];
    assert_eq!(det["nms_radius"], 9);
    assert_eq!(det["threshold"], 0.25);
    assert_eq!(det["edge_ratio"], 10.0);

    fs::write(d.join("bad.cfg"), "no equals sign\n").unwrap();
    assert_eq!(
        run(d, &["--config", "bad.cfg", "quality"]).status.code(),
        Some(2)
    );
}

#[test]
fn steer_demo_matches_reanalysis() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "-q", "steer", "--size", "64", "--radius", "6", "--out", "s.csv",
        ],
    );
    let m = json(&t.path().join("s.csv.manifest.json"));
    assert!(
        m["resolved"]["max_relative_error"].as_f64().unwrap() < 1e-9,
        "{m}"
    );
    let csv = fs::read_to_string(t.path().join("s.csv")).unwrap();
    assert!(csv.starts_with("a,channel,steered,direct,abs_diff\n"));
}

#[test]
fn calibrate_writes_table_and_check() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(
        d,
        &[
            "-q",
            "calibrate",
            "--out",
            "table.csv",
            "--size",
            "128",
            "--radii",
            "4,4.76,5.66,6.73,8,9.51,11.31,13.45,16,19.03,22.63",
            "--check-radii",
            "8,9.5,11",
        ],
    );
    assert!(d.join("table.csv").exists());
    let check = fs::read_to_string(d.join("table.csv.check.csv")).unwrap();
    assert_eq!(check.lines().count(), 4);
    let m = json(&d.join("table.csv.manifest.json"));
    assert!(
        m["resolved"]["max_abs_error"].as_f64().unwrap() < 0.1,
        "{m}"
    );

    // A table written by calibrate is accepted by detect.
    small_corpus(d, "c", "0");
    ok(
        d,
        &[
            "-q",
            "detect",
            "c/scene_s0_0000.png",
            "--calibration",
            "table.csv",
            "--out",
            "o.csv",
        ],
    );
}
