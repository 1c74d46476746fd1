//! End-to-end tests for the `ofast` binary: exit codes, file round trips
//! and output formats.

use std::path::Path;
use std::process::{Command, Output};

use ofast_core::pattern::generate_test_pattern;
use ofast_core::pgm::write_pgm_file;
use ofast_core::pipeline::{keypoints_to_csv, run_pipeline, DetectorConfig, PipelineVariant};
use ofast_core::Image;

fn ofast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ofast"))
        .args(args)
        .env_remove("OFAST_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn write_pattern(path: &Path, case: u8, grid: usize, cell: usize) {
    let img = generate_test_pattern(case, grid, cell).unwrap();
    write_pgm_file(&img, path).unwrap();
}

#[test]
fn gen_then_detect_matches_the_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("case1.pgm");
    let csv = dir.path().join("kp.csv");

    let gen = ofast(&[
        "gen",
        "--case",
        "1",
        "--grid",
        "4",
        "--cell",
        "24",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert_eq!(code(&gen), 0, "{gen:?}");

    let detect = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--levels",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&detect), 0, "{detect:?}");

    let img = generate_test_pattern(1, 4, 24).unwrap();
    let cfg = DetectorConfig {
        levels: 1,
        ..DetectorConfig::default()
    };
    let expect = keypoints_to_csv(&run_pipeline(&img, &cfg, PipelineVariant::SemiSep).unwrap());
    let got = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(got, expect);
    assert!(stdout(&detect).contains("level 0: 4 keypoints"));
    assert!(stdout(&detect).contains("stage times:"));
}

#[test]
fn detect_on_constant_image_exits_zero_with_no_keypoints() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("flat.pgm");
    write_pgm_file(&Image::filled(64, 64, 90).unwrap(), &pgm).unwrap();
    let csv = dir.path().join("kp.csv");
    let out = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--levels",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("total: 0 keypoints"));
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap(),
        "level,x,y,response,angle\n"
    );
}

#[test]
fn oversized_margin_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("flat.pgm");
    write_pgm_file(&Image::filled(64, 64, 90).unwrap(), &pgm).unwrap();
    let out = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--levels",
        "1",
        "--margin",
        "40",
    ]);
    assert_eq!(code(&out), 2); // margin fits the config but not the image
    let out = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--levels",
        "1",
        "--margin",
        "10",
    ]);
    assert_eq!(code(&out), 1, "margin below the centroid radius is usage");
}

#[test]
fn unreadable_input_is_a_data_error() {
    let out = ofast(&["detect", "/nonexistent/input.pgm"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_pattern_case_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = ofast(&[
        "gen",
        "--case",
        "6",
        "--out",
        dir.path().join("x.pgm").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unknown_variant_fails() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("flat.pgm");
    write_pgm_file(&Image::filled(64, 64, 90).unwrap(), &pgm).unwrap();
    let out = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--variant",
        "quantum",
        "--levels",
        "1",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn compare_requires_two_variants_and_reports_equality() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("case3.pgm");
    write_pattern(&pgm, 3, 4, 24);

    let short = ofast(&["compare", pgm.to_str().unwrap(), "--variants", "binary"]);
    assert_eq!(code(&short), 1);

    let out = ofast(&[
        "compare",
        pgm.to_str().unwrap(),
        "--variants",
        "baseline,binary,semi-sep",
        "--levels",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("EQUAL"));
    assert!(text.contains("fast.branch_evals"));
    assert!(text.contains("fast branch ratio binary/baseline"));
}

#[test]
fn bench_validates_reps_and_emits_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    write_pattern(&a, 1, 3, 24);
    write_pattern(&b, 5, 3, 24);

    let bad = ofast(&["bench", a.to_str().unwrap(), "--reps", "1"]);
    assert_eq!(code(&bad), 1);

    let out = ofast(&[
        "bench",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--reps",
        "3",
        "--variants",
        "semi-sep",
        "--levels",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variant,stage,image,median_ms,min_ms"));
    let rows: Vec<&str> = lines.collect();
    // One row per (variant, stage, image): 1 variant x 4 stages x 2 images.
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().filter(|r| r.contains(",fast,")).count(), 2);
}

#[test]
fn closed_stdout_is_not_an_error() {
    // Drop the read end of the pipe before the child finishes computing, so
    // its output writes hit a closed pipe.
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("case1.pgm");
    write_pattern(&pgm, 1, 8, 24);
    let mut child = Command::new(env!("CARGO_BIN_EXE_ofast"))
        .args([
            "compare",
            pgm.to_str().unwrap(),
            "--variants",
            "binary,semi-sep",
            "--levels",
            "1",
        ])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    assert!(status.success(), "{status:?}");
}

#[test]
fn workers_env_var_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("case1.pgm");
    write_pattern(&pgm, 1, 4, 24);
    let csv1 = dir.path().join("kp1.csv");
    let csv2 = dir.path().join("kp2.csv");

    let one = ofast(&[
        "detect",
        pgm.to_str().unwrap(),
        "--levels",
        "1",
        "--out",
        csv1.to_str().unwrap(),
    ]);
    assert_eq!(code(&one), 0);

    let two = Command::new(env!("CARGO_BIN_EXE_ofast"))
        .args([
            "detect",
            pgm.to_str().unwrap(),
            "--levels",
            "1",
            "--out",
            csv2.to_str().unwrap(),
        ])
        .env("OFAST_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(two.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&csv1).unwrap(),
        std::fs::read_to_string(&csv2).unwrap(),
        "worker count changed the output"
    );

    let bad = Command::new(env!("CARGO_BIN_EXE_ofast"))
        .args(["detect", pgm.to_str().unwrap(), "--levels", "1"])
        .env("OFAST_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
