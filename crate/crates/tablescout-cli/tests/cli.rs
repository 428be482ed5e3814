//! Black-box tests of the tablescout binary: exit codes, file outputs,
//! determinism, and config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tablescout::detector::DetectionReport;
use tablescout::raster::{load_gray, save_pgm, GrayImage};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tablescout"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(path: &Path) -> String {
    path.to_str().expect("utf8 path").to_string()
}

/// `synth --type ... --out-dir dir` and return the page image path.
fn synth_page(dir: &Path, category: &str, seed: &str) -> std::path::PathBuf {
    let out = run(&["synth", "--type", category, "--seed", seed, "--out-dir", &s(dir)]);
    assert_code(&out, 0);
    dir.join(format!("synth_{}_{}.pgm", category.to_lowercase(), seed))
}

#[test]
fn synth_is_byte_stable_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a_dir = tmp.path().join("a");
    let b_dir = tmp.path().join("b");
    let a = synth_page(&a_dir, "A", "7");
    let b = synth_page(&b_dir, "A", "7");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(a.with_extension("truth.json")).unwrap(),
        fs::read(b.with_extension("truth.json")).unwrap()
    );
}

#[test]
fn synth_rejects_overflowing_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("huge.json");
    fs::write(
        &spec_path,
        r#"{"page": [400, 200], "blocks": [{"kind": "paragraph", "lines": 40}]}"#,
    )
    .unwrap();
    let out = run(&["synth", "--spec", &s(&spec_path), "--out-dir", &s(tmp.path())]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("but only"), "stderr: {stderr}");
}

#[test]
fn detect_writes_report_and_finds_the_table() {
    let tmp = tempfile::tempdir().unwrap();
    let image = synth_page(tmp.path(), "B", "3");
    let report_path = tmp.path().join("out.json");
    let out = run(&["detect", &s(&image), "--report", &s(&report_path)]);
    assert_code(&out, 0);
    let report = DetectionReport::from_json(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.page_id, "synth_b_3");
    assert_eq!(report.regions.len(), 1);
    assert!(report.diagnostic.is_none());
}

#[test]
fn detect_blank_page_exits_2_with_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let image = tmp.path().join("blank.pgm");
    save_pgm(&image, &GrayImage::filled(300, 200, 255)).unwrap();
    let out = run(&["detect", &s(&image)]);
    assert_code(&out, 2);
    let report_path = tmp.path().join("blank.report.json");
    let report = DetectionReport::from_json(&fs::read_to_string(report_path).unwrap()).unwrap();
    assert!(report.regions.is_empty());
    assert!(report.diagnostic.is_some());
}

#[test]
fn detect_overlay_differs_from_input_only_at_region_borders() {
    let tmp = tempfile::tempdir().unwrap();
    let image = synth_page(tmp.path(), "C", "5");
    let overlay_path = tmp.path().join("overlay.pgm");
    let report_path = tmp.path().join("r.json");
    let out = run(&[
        "detect", &s(&image),
        "--report", &s(&report_path),
        "--overlay", &s(&overlay_path),
    ]);
    assert_code(&out, 0);

    let report = DetectionReport::from_json(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let rect = report.regions[0].rect;
    let input = load_gray(&image).unwrap();
    let overlay = load_gray(&overlay_path).unwrap();
    let mut changed = 0u64;
    for y in 0..input.height() {
        for x in 0..input.width() {
            if input.get(x, y) != overlay.get(x, y) {
                changed += 1;
                let inside = x >= rect.x && x < rect.right() && y >= rect.y && y < rect.bottom();
                let deep_inside = x >= rect.x + 2
                    && x + 2 < rect.right()
                    && y >= rect.y + 2
                    && y + 2 < rect.bottom();
                assert!(inside && !deep_inside, "changed pixel ({x},{y}) off the border ring");
            }
        }
    }
    assert!(changed > 0, "overlay should draw something");
}

#[test]
fn detect_rejects_boundary_alpha_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let image = synth_page(tmp.path(), "A", "1");
    let out = run(&["detect", &s(&image), "--alpha-ws", "2.0"]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alpha_ws"), "stderr: {stderr}");
}

#[test]
fn detect_crops_one_image_per_region() {
    let tmp = tempfile::tempdir().unwrap();
    let image = synth_page(tmp.path(), "A", "2");
    let crops = tmp.path().join("crops");
    let out = run(&["detect", &s(&image), "--crops", &s(&crops)]);
    assert_code(&out, 0);
    let names: Vec<_> = fs::read_dir(&crops)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 1);
    assert!(names[0].contains("region_0_A"), "crop name: {}", names[0]);
}

#[test]
fn batch_of_empty_directory_writes_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    fs::create_dir(&pages).unwrap();
    let out = run(&["batch", &s(&pages)]);
    assert_code(&out, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(pages.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["pages"].as_array().unwrap().len(), 0);
    assert!(manifest["config_fingerprint"].as_str().unwrap().len() > 16);
}

#[test]
fn batch_records_corrupt_pages_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    for seed in ["1", "2"] {
        synth_page(&pages, "C", seed);
    }
    fs::write(pages.join("broken.pgm"), b"P5\n10 10\n255\nshort").unwrap();

    let out_dir = tmp.path().join("reports");
    let out = run(&["batch", &s(&pages), "--out-dir", &s(&out_dir)]);
    assert_code(&out, 0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest["pages"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    // manifest order is lexicographic by page id
    let ids: Vec<_> = entries.iter().map(|p| p["page_id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec!["broken", "synth_c_1", "synth_c_2"]);
    assert_eq!(entries[0]["status"], "error");
    assert_eq!(entries[1]["status"], "ok");
    let reports: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".report.json"))
        .collect();
    assert_eq!(reports.len(), 2);
}

#[test]
fn batch_output_is_identical_for_any_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    for seed in ["1", "2", "3", "4", "5"] {
        synth_page(&pages, "B", seed);
    }
    let serial = tmp.path().join("serial");
    let parallel = tmp.path().join("parallel");
    assert_code(&run(&["batch", &s(&pages), "--out-dir", &s(&serial), "--jobs", "1"]), 0);
    assert_code(&run(&["batch", &s(&pages), "--out-dir", &s(&parallel), "--jobs", "4"]), 0);
    for seed in ["1", "2", "3", "4", "5"] {
        let name = format!("synth_b_{seed}.report.json");
        assert_eq!(
            fs::read(serial.join(&name)).unwrap(),
            fs::read(parallel.join(&name)).unwrap(),
            "{name} differs between job counts"
        );
    }
}

#[test]
fn jobs_env_var_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    synth_page(&pages, "A", "9");
    let out = bin()
        .args(["batch", &s(&pages)])
        .env("TABLESCOUT_JOBS", "3")
        .output()
        .unwrap();
    assert_code(&out, 0);
    assert!(pages.join("synth_a_9.report.json").exists());
}

#[test]
fn dump_config_round_trips_to_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let image = synth_page(tmp.path(), "C", "11");

    let dump = run(&["detect", &s(&image), "--alpha-ws", "1.6", "--min-gap-px", "3", "--dump-config"]);
    assert_code(&dump, 0);
    let cfg_path = tmp.path().join("run.json");
    fs::write(&cfg_path, &dump.stdout).unwrap();

    let flag_report = tmp.path().join("flags.json");
    let file_report = tmp.path().join("file.json");
    assert_code(
        &run(&[
            "detect", &s(&image),
            "--alpha-ws", "1.6",
            "--min-gap-px", "3",
            "--report", &s(&flag_report),
        ]),
        0,
    );
    assert_code(
        &run(&["detect", &s(&image), "--config", &s(&cfg_path), "--report", &s(&file_report)]),
        0,
    );
    assert_eq!(fs::read(&flag_report).unwrap(), fs::read(&file_report).unwrap());
    // and an explicit flag overrides the same field from the file
    let override_report = tmp.path().join("override.json");
    assert_code(
        &run(&[
            "detect", &s(&image),
            "--config", &s(&cfg_path),
            "--alpha-ws", "1.2",
            "--report", &s(&override_report),
        ]),
        0,
    );
    assert_ne!(fs::read(&flag_report).unwrap(), fs::read(&override_report).unwrap());
}

#[test]
fn eval_reports_missing_truth_as_listed_error() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    for seed in ["1", "2"] {
        synth_page(&pages, "C", seed);
    }
    let reports = tmp.path().join("reports");
    assert_code(&run(&["batch", &s(&pages), "--out-dir", &s(&reports)]), 0);
    // drop one truth file so the pairing is incomplete
    fs::remove_file(pages.join("synth_c_2.truth.json")).unwrap();

    let out = run(&["eval", "--reports", &s(&reports), "--truth", &s(&pages)]);
    assert_code(&out, 0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("synth_c_2"), "stderr: {stderr}");
    assert!(stderr.contains("missing truth"), "stderr: {stderr}");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reports.join("eval_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pages"], 1);
    assert_eq!(summary["errors"].as_array().unwrap().len(), 1);
    assert_eq!(summary["overall"]["accuracy_pct"], "100.0");
}

#[test]
fn eval_counts_truth_without_report_as_missed() {
    let tmp = tempfile::tempdir().unwrap();
    let pages = tmp.path().join("pages");
    for seed in ["1", "2"] {
        synth_page(&pages, "A", seed);
    }
    let reports = tmp.path().join("reports");
    assert_code(&run(&["batch", &s(&pages), "--out-dir", &s(&reports)]), 0);
    fs::remove_file(reports.join("synth_a_2.report.json")).unwrap();

    let out = run(&["eval", "--reports", &s(&reports), "--truth", &s(&pages)]);
    assert_code(&out, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reports.join("eval_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pages"], 2);
    assert_eq!(summary["overall"]["total"], 2);
    assert_eq!(summary["overall"]["correct"], 1);
    assert_eq!(summary["overall"]["accuracy_pct"], "50.0");
}

#[test]
fn eval_unknown_fixture_exits_1() {
    let out = run(&["eval", "--fixture", "nope"]);
    assert_code(&out, 1);
}
