use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flurry::{BoundingBox, ImageBuffer};

fn flurry(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flurry"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pattern(w: usize, h: usize, k: u8) -> ImageBuffer {
    let data = (0..w * h)
        .flat_map(|i| {
            let (x, y) = (i % w, i / w);
            [(x * 4) as u8 ^ k, (y * 7) as u8, k.wrapping_mul(31)]
        })
        .collect();
    ImageBuffer::new(w, h, data).unwrap()
}

/// Three 48x32 images with two boxes each, in YOLO layout.
fn fixture(root: &Path) {
    std::fs::create_dir_all(root.join("images")).unwrap();
    std::fs::create_dir_all(root.join("labels")).unwrap();
    for (k, name) in ["a", "b", "c"].iter().enumerate() {
        pattern(48, 32, k as u8 * 50).save_png(root.join(format!("images/{name}.png"))).unwrap();
        std::fs::write(
            root.join(format!("labels/{name}.txt")),
            "0 0.500000 0.500000 0.250000 0.500000\n0 0.125000 0.250000 0.125000 0.250000\n",
        )
        .unwrap();
    }
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const SMALL: &str = "working_width = 24\nworking_height = 16\n";

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, SMALL).unwrap();
    p
}

#[test]
fn generate_writes_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let (src, out) = (tmp.path().join("src"), tmp.path().join("out"));
    fixture(&src);
    let cfg = small_config(tmp.path());
    let o = flurry(&["--config", s(&cfg), "--seed", "5", "generate", s(&src), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 original, 3 synthetic, 0 failed"));
    let files = tree(&out);
    let pngs = files.iter().filter(|(p, _)| p.starts_with("images")).count();
    let labels = files.iter().filter(|(p, _)| p.starts_with("labels")).count();
    assert_eq!((pngs, labels), (3, 3));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let records = manifest["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r["branch"] == "synthetic"));
    // labels are carried over unchanged
    assert_eq!(
        std::fs::read(src.join("labels/a.txt")).unwrap(),
        std::fs::read(out.join("labels/a.txt")).unwrap()
    );
}

#[test]
fn generate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fixture(&src);
    let cfg = small_config(tmp.path());
    let run = |name: &str, workers: &str| {
        let out = tmp.path().join(name);
        let o = flurry(&["--config", s(&cfg), "--seed", "9", "--workers", workers, "generate", s(&src), s(&out)]);
        assert!(o.status.success());
        tree(&out)
    };
    let first = run("one", "1");
    assert_eq!(first, run("two", "1"));
    assert_eq!(first, run("three", "3"));
}

#[test]
fn unreadable_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = flurry(&["generate", s(&missing), s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn bad_config_rejected_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fixture(&src);
    for doc in ["snowiness = 2\n", "p_synthetic = 2.0\n", "coverage_quantile = 1.0\n"] {
        let cfg = tmp.path().join("bad.toml");
        std::fs::write(&cfg, doc).unwrap();
        let out = tmp.path().join("out");
        let o = flurry(&["--config", s(&cfg), "mix", s(&src), s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{doc}");
        assert!(!out.exists());
    }
}

#[test]
fn mix_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fixture(&src);
    let cfg = small_config(tmp.path());
    let o = flurry(&["--config", s(&cfg), "mix", "--p-synthetic", "0", s(&src), s(&tmp.path().join("o0"))]);
    assert!(stdout(&o).contains("3 original, 0 synthetic"), "{}", stdout(&o));
    let o = flurry(&["--config", s(&cfg), "mix", "--p-synthetic", "1", s(&src), s(&tmp.path().join("o1"))]);
    assert!(stdout(&o).contains("0 original, 3 synthetic"));
    let branches = |dir: &str| {
        let o = flurry(&["--config", s(&cfg), "--seed", "4", "mix", s(&src), s(&tmp.path().join(dir))]);
        assert!(o.status.success());
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(tmp.path().join(dir).join("manifest.json")).unwrap()).unwrap();
        m["records"].as_array().unwrap().iter().map(|r| r["branch"].clone()).collect::<Vec<_>>()
    };
    assert_eq!(branches("h1"), branches("h2"));
}

#[test]
fn mix_with_file_list() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fixture(&src);
    let cfg = small_config(tmp.path());
    let list = tmp.path().join("subset.txt");
    std::fs::write(&list, "a.png\nc.png\n").unwrap();
    let o = flurry(&["--config", s(&cfg), "mix", "--list", s(&list), s(&src), s(&tmp.path().join("o"))]);
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["records"].as_array().unwrap().len(), 2);
}

fn write_preds(dir: &Path, name: &str, lines: &[&str]) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join(format!("{name}.txt")), lines.join("\n")).unwrap();
}

fn gt_fixture(root: &Path, images: &[(&str, Vec<BoundingBox>)]) {
    let recs: Vec<_> = images
        .iter()
        .map(|(n, b)| flurry::dataset::LabeledImage {
            name: n.to_string(),
            image: ImageBuffer::filled(100, 100, [0, 0, 0]),
            boxes: b.clone(),
        })
        .collect();
    flurry::dataset::write_dataset(&recs, flurry::dataset::AnnotationFormat::Jsonl, root).unwrap();
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn eval_hand_built_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    let bb = |a, b, c, d| BoundingBox::new(a, b, c, d, 0);
    gt_fixture(
        &gt,
        &[
            ("i1", vec![bb(10.0, 10.0, 30.0, 30.0), bb(50.0, 50.0, 70.0, 70.0)]),
            ("i2", vec![bb(0.0, 0.0, 10.0, 10.0)]),
            ("i3", vec![bb(20.0, 20.0, 40.0, 40.0)]),
        ],
    );
    write_preds(&pred, "i1", &["0 0.9 10 10 30 30", "0 0.6 50 50 70 66", "0 0.7 80 0 90 10"]);
    write_preds(&pred, "i2", &["0 0.8 0 0 10 6"]);
    let out = tmp.path().join("report.json");
    let o = flurry(&["--format", "jsonl", "eval", s(&gt), s(&pred), "--report", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&out);
    // Matches (strict iou > 0.5): i1 -> 1.0 and 0.8 plus one stray, i2 -> 0.6, i3 -> none.
    //   image IoU: 1.8/3, 0.6/1, 0/1          -> avg 0.4
    //   TP 3, FP 1, FN 1                      -> P = R = F1 = 0.75
    // Ranked detections (conf): .9 TP(1.0), .8 TP(0.6), .7 FP, .6 TP(0.8); 4 gts.
    //   gates .50,.55: R/P .25/1 .5/1 .5/.667 .75/.75 -> AP .6875
    //   gates .60-.75: .25/1 .25/.5 .25/.333 .5/.5    -> AP .375
    //   gates .80-.95: only the exact box            -> AP .25
    //   mAP@50-95 = (2*.6875 + 4*.375 + 4*.25) / 10 = .3875
    let expect = [
        ("avg_iou", 0.4),
        ("precision", 0.75),
        ("recall", 0.75),
        ("f1", 0.75),
        ("map50", 0.6875),
        ("map50_95", 0.3875),
    ];
    for (k, v) in expect {
        assert!((r[k].as_f64().unwrap() - v).abs() < 1e-12, "{k}: {}", r[k]);
    }
    let table = stdout(&o);
    for row in ["Average IOU", "mAP@50-95", "mAP@50", "Precision", "F1 Score"] {
        assert!(table.contains(row));
    }
}

#[test]
fn eval_empty_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    gt_fixture(&gt, &[("i1", vec![BoundingBox::new(1.0, 1.0, 9.0, 9.0, 0)])]);
    let pred = tmp.path().join("pred");
    std::fs::create_dir_all(&pred).unwrap();
    let out = tmp.path().join("r.json");
    let o = flurry(&["--format", "jsonl", "eval", s(&gt), s(&pred), "--report", s(&out)]);
    assert!(o.status.success());
    let r = report(&out);
    for k in ["avg_iou", "precision", "recall", "f1", "map50", "map50_95"] {
        assert_eq!(r[k].as_f64().unwrap(), 0.0, "{k}");
    }
}

#[test]
fn eval_bad_prediction_line_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    gt_fixture(&gt, &[("i1", vec![BoundingBox::new(1.0, 1.0, 9.0, 9.0, 0)])]);
    let pred = tmp.path().join("pred");
    write_preds(&pred, "i1", &["0 0.9 1 1 9 9", "0 0.9 1 1 9"]);
    let o = flurry(&["--format", "jsonl", "eval", s(&gt), s(&pred), "--report", s(&tmp.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("i1.txt:2"), "{}", stderr(&o));
}

#[test]
fn eval_jsonl_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    gt_fixture(&gt, &[("i1", vec![BoundingBox::new(1.0, 1.0, 9.0, 9.0, 0)])]);
    let preds = tmp.path().join("preds.jsonl");
    std::fs::write(
        &preds,
        r#"{"image": "i1.png", "detections": [{"x_min": 1, "y_min": 1, "x_max": 9, "y_max": 9, "class_id": 0, "confidence": 1.0}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("r.json");
    let o = flurry(&["--format", "jsonl", "eval", s(&gt), s(&preds), "--pred-format", "jsonl", "--report", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&out)["map50_95"].as_f64().unwrap(), 1.0);
}

fn bosch_fixture(dir: &Path, yaml: &str) -> PathBuf {
    std::fs::create_dir_all(dir.join("rgb/bag")).unwrap();
    pattern(64, 32, 1).save_png(dir.join("rgb/bag/1.png")).unwrap();
    pattern(64, 32, 2).save_png(dir.join("rgb/bag/2.png")).unwrap();
    let p = dir.join("index.yaml");
    std::fs::write(&p, yaml).unwrap();
    p
}

#[test]
fn import_bosch_converts_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    let yaml = bosch_fixture(
        tmp.path(),
        "- boxes:\n  - {label: Green, occluded: false, x_min: 8, x_max: 24, y_min: 4, y_max: 12}\n  path: ./rgb/bag/1.png\n- boxes: []\n  path: ./rgb/bag/2.png\n",
    );
    let out = tmp.path().join("yolo");
    let o = flurry(&["import-bosch", s(&yaml), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(out.join("labels/1.txt")).unwrap(),
        "0 0.250000 0.250000 0.250000 0.250000\n"
    );
    assert_eq!(std::fs::read_to_string(out.join("labels/2.txt")).unwrap(), "");
    let o = flurry(&["inspect", s(&out)]);
    assert!(stdout(&o).contains("images:          2"));
}

#[test]
fn import_bosch_skips_inverted_boxes() {
    let tmp = tempfile::tempdir().unwrap();
    let yaml = bosch_fixture(
        tmp.path(),
        "- boxes:\n  - {label: Red, x_min: 30, x_max: 20, y_min: 4, y_max: 12}\n  - {label: Red, x_min: 1, x_max: 5, y_min: 1, y_max: 5}\n  path: ./rgb/bag/1.png\n",
    );
    let out = tmp.path().join("yolo");
    let o = flurry(&["import-bosch", s(&yaml), s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1 skipped"));
    assert_eq!(std::fs::read_to_string(out.join("labels/1.txt")).unwrap().lines().count(), 1);
}

#[test]
fn import_bosch_malformed_yaml_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let yaml = bosch_fixture(tmp.path(), "- boxes: [\n  path: x\n");
    let o = flurry(&["import-bosch", s(&yaml), s(&tmp.path().join("yolo"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_json() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    fixture(&src);
    let o = flurry(&["inspect", "--json", s(&src)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["images"], 3);
    assert_eq!(v["boxes"], 6);
}
