use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adk_core::labelio::{write_detections_jsonl, write_yolo, DetectionRecord};
use adk_core::manifest::{DatasetManifest, ImageRecord, Split};
use adk_core::raster::Raster;
use adk_core::{Annotation, BBox, Detection};

fn adk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adk")).args(args).env("ADK_LOG", "error").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = adk(args);
    assert!(out.status.success(), "adk {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pngs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "png")).collect();
    v.sort();
    v
}

/// Three 200x120 images with labels; boxes of class 0 everywhere, class 1 on one image.
fn dataset(dir: &Path) -> PathBuf {
    fs::create_dir_all(dir.join("images")).unwrap();
    fs::create_dir_all(dir.join("labels")).unwrap();
    let mut records = Vec::new();
    for i in 0..3u32 {
        let id = format!("img{i}");
        let mut img = Raster::filled(200, 120, 3, 30);
        img.fill_rect(10 + i * 20, 10, 50 + i * 20, 40, 220);
        img.save(&dir.join(format!("images/{id}.png"))).unwrap();
        let mut anns = vec![Annotation::human(0, BBox::new((10 + i * 20) as f64, 10.0, (50 + i * 20) as f64, 40.0).unwrap())];
        if i == 2 {
            anns.push(Annotation::human(1, BBox::new(120.0, 60.0, 190.0, 110.0).unwrap()));
        }
        fs::write(dir.join(format!("labels/{id}.txt")), write_yolo(&anns, 200, 120).unwrap()).unwrap();
        records.push(ImageRecord { id, path: format!("images/img{i}.png"), width: 200, height: 120, split: Split::Val });
    }
    let path = dir.join("manifest.json");
    DatasetManifest::new(vec!["corn".into(), "weed".into()], records).unwrap().save(&path).unwrap();
    path
}

fn perfect_dets(manifest: &Path, labels: &Path, out: &Path) {
    let m = DatasetManifest::load(manifest).unwrap();
    let mut recs = Vec::new();
    for r in &m.images {
        let text = fs::read_to_string(labels.join(format!("{}.txt", r.id))).unwrap();
        for a in adk_core::labelio::read_yolo(&text, r.width, r.height, m.classes.len()).unwrap() {
            recs.push(DetectionRecord { image_id: r.id.clone(), detection: Detection::new(a.class_id, a.bbox, 0.9).unwrap() });
        }
    }
    fs::write(out, write_detections_jsonl(&recs).unwrap()).unwrap();
}

#[test]
fn tile_single_window_image() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.png");
    Raster::filled(640, 640, 3, 9).save(&img).unwrap();
    let out = dir.path().join("tiles");
    ok(&["tile", "--in", s(&img), "--win", "640", "--stride", "630", "--out", s(&out)]);
    let tiles = pngs(&out);
    assert_eq!(tiles.len(), 1);
    assert_eq!(tiles[0].file_name().unwrap(), "img_r0_c0.png");
    assert!(out.join("plans/img.json").is_file());
}

#[test]
fn tile_remaps_labels_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("big.png");
    Raster::filled(1000, 700, 3, 0).save(&img).unwrap();
    let labels = dir.path().join("labels");
    fs::create_dir_all(&labels).unwrap();
    let anns = vec![Annotation::human(1, BBox::new(600.0, 100.0, 700.0, 200.0).unwrap())];
    fs::write(labels.join("big.txt"), write_yolo(&anns, 1000, 700).unwrap()).unwrap();
    let out = dir.path().join("tiles");
    ok(&["tile", "--in", s(&img), "--out", s(&out), "--labels", s(&labels), "--classes", "a,b"]);
    // 640/630 on 1000x700: x offsets {0, 360}, y offsets {0, 60}
    assert_eq!(pngs(&out).len(), 4);
    let m = DatasetManifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(m.images.len(), 4);
    assert_eq!(m.classes, vec!["a", "b"]);
    let r0c1 = fs::read_to_string(out.join("labels/big_r0_c1.txt")).unwrap();
    let got = adk_core::labelio::read_yolo(&r0c1, 640, 640, 2).unwrap();
    assert_eq!(got.len(), 1);
    assert!((got[0].bbox.x1 - 240.0).abs() < 1e-3 && (got[0].bbox.y2 - 200.0).abs() < 1e-3);
}

#[test]
fn eval_perfect_detections() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let dets = dir.path().join("d.jsonl");
    perfect_dets(&manifest, &dir.path().join("labels"), &dets);
    let report = dir.path().join("report.json");
    let table = ok(&["eval", "--gt", s(&dir.path().join("labels")), "--dets", s(&dets), "--iou", "0.5", "--json", s(&report)]);
    let all = table.lines().find(|l| l.starts_with("all")).unwrap();
    assert!(all.split_whitespace().nth(4) == Some("1.0000"), "{table}");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["map50"], 1.0);
    assert_eq!(v["instances"], 4);
}

#[test]
fn usage_and_data_errors() {
    let out = adk(&["tile", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(adk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(adk(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("manifest.json");
    fs::write(&broken, "{ not json").unwrap();
    assert_eq!(adk(&["stats", "--manifest", s(&broken)]).status.code(), Some(2));
    assert_eq!(adk(&["split", "--manifest", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
    let dets = dir.path().join("d.jsonl");
    fs::write(&dets, "{\"image_id\":\"a\",\"class_id\":0,\"x1\":0,\"y1\":0,\"x2\":1,\"y2\":1,\"confidence\":0.5}\n").unwrap();
    assert_eq!(adk(&["pseudo-label", "--dets", s(&dets), "--conf", "1.5", "--out", s(dir.path())]).status.code(), Some(1));
}

#[test]
fn pseudo_label_writes_proposals() {
    let dir = tempfile::tempdir().unwrap();
    let recs: Vec<DetectionRecord> = [(0.9, 0.0), (0.8, 1.0), (0.1, 50.0), (0.7, 80.0)]
        .iter()
        .map(|&(c, x)| DetectionRecord { image_id: "t0".into(), detection: Detection::new(0, BBox::new(x, 0.0, x + 20.0, 20.0).unwrap(), c).unwrap() })
        .collect();
    let dets = dir.path().join("d.jsonl");
    fs::write(&dets, write_detections_jsonl(&recs).unwrap()).unwrap();
    let out = dir.path().join("proposals");
    ok(&["pseudo-label", "--conf", "0.25", "--nms", "0.45", "--dets", s(&dets), "--out", s(&out)]);
    let props: Vec<Annotation> = serde_json::from_str(&fs::read_to_string(out.join("t0.json")).unwrap()).unwrap();
    // the 0.8 box overlaps the 0.9 box (IoU 19/21) and the 0.1 box is below the cutoff
    assert_eq!(props.len(), 2);
    assert!(props.iter().all(|a| a.status == adk_core::geometry::LabelStatus::Proposed));
}

#[test]
fn split_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let records = (0..50).map(|i| ImageRecord { id: format!("i{i}"), path: format!("i{i}.png"), width: 8, height: 8, split: Split::Unsplit }).collect();
    let m = dir.path().join("m.json");
    DatasetManifest::new(vec!["x".into()], records).unwrap().save(&m).unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    let printed = ok(&["split", "--manifest", s(&m), "--seed", "3", "--out", s(&a)]);
    assert!(printed.starts_with("train 40 / val 5 / test 5"));
    ok(&["split", "--manifest", s(&m), "--seed", "3", "--out", s(&b)]);
    ok(&["split", "--manifest", s(&m), "--seed", "4", "--out", s(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let records = (0..20).map(|i| ImageRecord { id: format!("i{i}"), path: format!("i{i}.png"), width: 8, height: 8, split: Split::Unsplit }).collect();
    let m = dir.path().join("m.json");
    DatasetManifest::new(vec!["x".into()], records).unwrap().save(&m).unwrap();
    let cfg = dir.path().join("adk.conf");
    fs::write(&cfg, "# shared settings\njobs = 2\nconf = 0.5\n\n[split]\nratios = \"1:1:2\"\nseed = 9\n").unwrap();
    let printed = ok(&["--config", s(&cfg), "split", "--manifest", s(&m), "--out", s(&dir.path().join("o.json"))]);
    assert!(printed.starts_with("train 5 / val 5 / test 10"), "{printed}");
    let printed = ok(&["split", "--config", s(&cfg), "--manifest", s(&m), "--ratios", "2:1:1", "--out", s(&dir.path().join("o.json"))]);
    assert!(printed.starts_with("train 10 / val 5 / test 5"), "{printed}");

    fs::write(&cfg, "[split]\nwindow = 3\n").unwrap();
    assert_eq!(adk(&["--config", s(&cfg), "split", "--manifest", s(&m)]).status.code(), Some(1));
}

#[test]
fn convert_round_trip_through_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let (voc, lm, back) = (dir.path().join("voc"), dir.path().join("lm"), dir.path().join("back"));
    ok(&["convert", "--from", "yolo", "--to", "voc", "--in", s(&dir.path().join("labels")), "--out", s(&voc), "--manifest", s(&manifest)]);
    assert!(fs::read_to_string(voc.join("img2.xml")).unwrap().contains("<name>weed</name>"));
    ok(&["convert", "--from", "voc", "--to", "labelme", "--in", s(&voc), "--out", s(&lm), "--classes", "corn,weed"]);
    ok(&["convert", "--from", "labelme", "--to", "yolo", "--in", s(&lm), "--out", s(&back), "--classes", "corn,weed"]);
    for i in 0..3 {
        let name = format!("img{i}.txt");
        assert_eq!(fs::read_to_string(back.join(&name)).unwrap(), fs::read_to_string(dir.path().join("labels").join(&name)).unwrap());
    }
    let out = adk(&["convert", "--from", "yolo", "--to", "voc", "--in", s(&dir.path().join("labels")), "--out", s(&voc), "--classes", "corn,weed"]);
    assert_eq!(out.status.code(), Some(2), "YOLO without sizes must fail");
}

#[test]
fn stats_and_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let json = dir.path().join("stats.json");
    let table = ok(&["stats", "--manifest", s(&manifest), "--json", s(&json)]);
    let val = table.lines().find(|l| l.starts_with("val")).unwrap();
    assert_eq!(val.split_whitespace().collect::<Vec<_>>(), ["val", "3", "3", "0", "4", "1.33", "0", "4", "0"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["total"]["instances"], 4);

    let text = ok(&["anchors", "--manifest", s(&manifest), "--k", "2", "--seed", "1"]);
    assert_eq!(text.lines().next().unwrap(), "[[40,30, 70,50]]");
    assert_eq!(adk(&["anchors", "--manifest", s(&manifest), "--k", "3"]).status.code(), Some(2));
}

#[test]
fn augment_plan_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let (a, b) = (dir.path().join("aug_a"), dir.path().join("aug_b"));
    let printed = ok(&["augment", "--manifest", s(&manifest), "--target", "5", "--seed", "2", "--out", s(&a)]);
    // corn is on 3 images and weed on 1: 2 + 4 new images
    assert!(printed.starts_with("6 augmented images"), "{printed}");
    ok(&["augment", "--manifest", s(&manifest), "--target", "5", "--seed", "2", "--out", s(&b), "--jobs", "1"]);
    assert_eq!(fs::read(a.join("plan.jsonl")).unwrap(), fs::read(b.join("plan.jsonl")).unwrap());
    for p in pngs(&a.join("images")) {
        let name = p.file_name().unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(b.join("images").join(name)).unwrap());
        let stem = p.file_stem().unwrap().to_str().unwrap();
        assert!(stem.contains("_aug"));
        assert!(a.join("labels").join(format!("{stem}.txt")).is_file());
    }
    let m = DatasetManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(m.images.len(), 6);
    let out = adk(&["augment", "--manifest", s(&manifest), "--target", "2", "--out", s(&dir.path().join("aug_c"))]);
    assert_eq!(out.status.code(), Some(2), "corn already has 3 images");
}

#[test]
fn tile_then_stitch_restores_image_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("field.png");
    Raster::filled(1200, 640, 3, 0).save(&img).unwrap();
    let tiles = dir.path().join("tiles");
    ok(&["tile", "--in", s(&img), "--out", s(&tiles), "--win", "640", "--stride", "500"]);
    // one box seen by both tiles (offsets 0 and 500 on x plus the clamp at 560)
    let global = BBox::new(580.0, 100.0, 620.0, 150.0).unwrap();
    let recs: Vec<DetectionRecord> = [(0u32, "field_r0_c0"), (500, "field_r0_c1"), (560, "field_r0_c2")]
        .iter()
        .map(|&(x, name)| DetectionRecord {
            image_id: name.into(),
            detection: Detection::new(0, global.translate(-(x as f64), 0.0), 0.8).unwrap(),
        })
        .collect();
    let dets = dir.path().join("tile_dets.jsonl");
    fs::write(&dets, write_detections_jsonl(&recs).unwrap()).unwrap();
    let out = dir.path().join("stitched.jsonl");
    ok(&["stitch", "--plan", s(&tiles.join("plans")), "--dets", s(&dets), "--out", s(&out)]);
    let got = adk_core::labelio::read_detections_jsonl(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].image_id, "field");
    assert_eq!(got[0].detection.bbox, global);
}

#[test]
fn lsk_runs_and_round_trips_files() {
    let dir = tempfile::tempdir().unwrap();
    let (out, params) = (dir.path().join("y.adkt"), dir.path().join("p.adkp"));
    let text = ok(&["lsk", "--shape", "1x8x12x12", "--check", "--out", s(&out), "--save-params", s(&params)]);
    assert!(text.starts_with("output 1x8x12x12"), "{text}");
    assert!(text.contains("max |fast - direct|"));
    let first = text.lines().next().unwrap().to_string();
    let again = ok(&["lsk", "--shape", "1x8x12x12", "--params", s(&params), "--conv", "direct"]);
    assert_eq!(again.lines().next().unwrap(), first);
    let y: adk_core::Tensor4 = adk_core::lsk::io::decode_tensor(&fs::read(out).unwrap()).unwrap();
    assert_eq!(y.dims(), [1, 8, 12, 12]);
    assert_eq!(adk(&["lsk", "--shape", "1x6x8x8"]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.png");
    let mut r = Raster::filled(900, 700, 3, 5);
    r.fill_rect(100, 100, 300, 250, 200);
    r.save(&img).unwrap();
    let (t1, t2) = (dir.path().join("t1"), dir.path().join("t2"));
    ok(&["tile", "--in", s(&img), "--out", s(&t1)]);
    ok(&["tile", "--in", s(&img), "--out", s(&t2), "--jobs", "1"]);
    let (a, b) = (pngs(&t1), pngs(&t2));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(fs::read(t1.join("plans/a.json")).unwrap(), fs::read(t2.join("plans/a.json")).unwrap());
}
