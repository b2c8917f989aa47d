use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kakamatch::eval::synth::Nozzle;
use kakamatch::imgcore::{decode_pnm, encode_pnm, GrayImage, PnmImage};
use kakamatch::segment::select_frame;
use kakamatch::sift::{extract_features, read_features, render_features, SiftParams};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kakamatch"));
    c.env_remove("KAKAMATCH_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_pgm(path: &Path, w: usize, h: usize, f: impl FnMut(usize, usize) -> f32) -> GrayImage {
    let img = GrayImage::from_fn(w, h, f).unwrap();
    fs::write(path, encode_pnm(&PnmImage::Gray(img.clone()))).unwrap();
    img
}

/// A 3 x 3 synthetic corpus with masked features, built once per test that needs it.
fn corpus(root: &Path) -> (PathBuf, PathBuf) {
    let c = root.join("corpus");
    ok(&["--seed", "3", "synth", p(&c), "--individuals", "3", "--views", "3"]);
    let f = root.join("feats");
    let bg = c.join("background.pgm");
    ok(&["--seed", "3", "features", p(&c.join("images")), p(&f), "--bg", p(&bg)]);
    (c, f)
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["evaluate", "a", "b", "--x", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--set", "match.strategy=best", "select-frames", "."]).status.code(), Some(1));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn select_frames_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let black = dir.path().join("black");
    fs::create_dir(&black).unwrap();
    for i in 0..3 {
        write_pgm(&black.join(format!("c{i}_0.pgm")), 20, 20, |_, _| 0.0);
    }
    let m = json(&ok(&["select-frames", p(&black)]));
    assert_eq!(m["selected"].as_array().unwrap().len(), 0);
    assert_eq!(m["rejected"].as_array().unwrap().len(), 3);

    let mixed = dir.path().join("mixed");
    fs::create_dir(&mixed).unwrap();
    let mut expect = Vec::new();
    for (i, level) in [10u8, 50, 51, 200, 120, 30].iter().enumerate() {
        let name = format!("c{i}_0.pgm");
        let img = write_pgm(&mixed.join(&name), 30, 25, |_, _| f32::from(*level) / 255.0);
        if select_frame(&img) {
            expect.push(name);
        }
    }
    fs::write(mixed.join("notes.txt"), "ignored").unwrap();
    let manifest = dir.path().join("manifest.json");
    ok(&["select-frames", p(&mixed), "-o", p(&manifest)]);
    let m = json(&fs::read_to_string(&manifest).unwrap());
    let got: Vec<&str> = m["selected"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(got, expect);
    assert_eq!(got, ["c2_0.pgm", "c3_0.pgm", "c4_0.pgm"]);

    assert_eq!(run(&["select-frames", p(&dir.path().join("missing"))]).status.code(), Some(2));
}

#[test]
fn features_cache_is_idempotent_and_masked() {
    let dir = tempfile::tempdir().unwrap();
    let (c, f) = corpus(dir.path());
    let images = c.join("images");
    let bg = c.join("background.pgm");
    let stamp = |path: &Path| fs::metadata(path).unwrap().modified().unwrap();
    let first = f.join("clip0000_0.sift");
    let before = stamp(&first);

    let again = json(&ok(&["--seed", "3", "features", p(&images), p(&f), "--bg", p(&bg)]));
    assert_eq!(again["written"], 0);
    assert_eq!(again["skipped"], 9);
    assert_eq!(stamp(&first), before);
    let forced = json(&ok(&["--seed", "3", "--force", "features", p(&images), p(&f), "--bg", p(&bg)]));
    assert_eq!(forced["written"], 9);
    assert_eq!(forced["masked"], 9);

    let nozzle = Nozzle::for_frame(256, 192);
    for entry in fs::read_dir(&f).unwrap() {
        for feat in read_features(&entry.unwrap().path()).unwrap() {
            assert!(!nozzle.contains(feat.x.round() as usize, feat.y.round() as usize));
        }
    }

    // Without a background the cache holds plain unmasked extraction.
    let plain = dir.path().join("plain");
    ok(&["features", p(&images), p(&plain)]);
    let img = decode_pnm(&fs::read(images.join("clip0000_0.pgm")).unwrap()).unwrap().into_gray();
    let direct = extract_features(&img, None, &SiftParams::default()).unwrap();
    assert_eq!(fs::read_to_string(plain.join("clip0000_0.sift")).unwrap(), render_features(&direct));
    assert!(direct.len() > read_features(&first).unwrap().len());

    // A per-clip background masks that clip alone.
    fs::create_dir(images.join("backgrounds")).unwrap();
    fs::copy(&bg, images.join("backgrounds").join("clip0000.pgm")).unwrap();
    let per_clip = dir.path().join("per_clip");
    let summary = json(&ok(&["--seed", "3", "features", p(&images), p(&per_clip)]));
    assert_eq!(summary["masked"], 1);
    assert_eq!(fs::read(per_clip.join("clip0000_0.sift")).unwrap(), fs::read(&first).unwrap());
    assert_eq!(fs::read(per_clip.join("clip0001_0.sift")).unwrap(), fs::read(plain.join("clip0001_0.sift")).unwrap());
}

#[test]
fn match_rank_evaluate_and_visualize() {
    let dir = tempfile::tempdir().unwrap();
    let (c, f) = corpus(dir.path());
    let a = f.join("clip0000_0.sift");

    let report = dir.path().join("self.json");
    ok(&["match", p(&a), p(&a), "-o", p(&report)]);
    let r = json(&fs::read_to_string(&report).unwrap());
    let n = r["n_features_a"].as_u64().unwrap();
    assert_eq!(r["mean_distance"], 0.0);
    assert_eq!(r["n_matches"].as_u64().unwrap(), n);
    assert_eq!(r["score"].as_f64().unwrap(), n as f64 + 1.0);
    assert_eq!(r["strategy"], "mnn");
    assert_eq!(r["homography"].as_array().unwrap().len(), 9);
    for m in r["matches"].as_array().unwrap() {
        assert_eq!(m["query"], m["train"]);
        assert!(m["reprojection_error"].as_f64().unwrap() < 1e-6);
    }

    let img = c.join("images").join("clip0000_0.pgm");
    let out = dir.path().join("self.ppm");
    ok(&["visualize", p(&img), p(&img), p(&report), p(&out)]);
    let PnmImage::Rgb(canvas) = decode_pnm(&fs::read(&out).unwrap()).unwrap() else {
        panic!("visualize must write PPM");
    };
    assert_eq!((canvas.width(), canvas.height()), (512, 192));
    // Self-match lines are horizontal: both ends of every match sit on one row.
    for m in r["matches"].as_array().unwrap() {
        let (x, y) = (m["query_kp"][0].as_f64().unwrap(), m["query_kp"][1].as_f64().unwrap());
        let mid = ((x + 256.0 + x) / 2.0).round() as usize;
        // Circles are drawn after lines and may cover the midpoint.
        let px = canvas.pixel(mid, y.round() as usize);
        assert!(px == kakamatch::visualize::LINE_RGB || px == kakamatch::visualize::CIRCLE_RGB);
    }

    // An empty match set draws nothing over the two images.
    let mut empty = r.clone();
    empty["matches"] = Value::Array(vec![]);
    let empty_path = dir.path().join("empty.json");
    fs::write(&empty_path, empty.to_string()).unwrap();
    let plain = dir.path().join("plain.ppm");
    ok(&["visualize", p(&img), p(&img), p(&empty_path), p(&plain)]);
    let plain = decode_pnm(&fs::read(&plain).unwrap()).unwrap().into_rgb();
    let src = decode_pnm(&fs::read(&img).unwrap()).unwrap().into_gray();
    for (x, y) in [(0, 0), (100, 80), (255, 191), (300, 50)] {
        let v = src.get_u8(x % 256, y);
        assert_eq!(plain.pixel(x, y), [v, v, v]);
    }
    let small = dir.path().join("small.pgm");
    write_pgm(&small, 8, 8, |_, _| 0.5);
    assert_eq!(run(&["visualize", p(&small), p(&small), p(&report), p(&out)]).status.code(), Some(2));

    let ranked = json(&ok(&["rank", "clip0000_0", p(&f)]));
    assert_eq!(ranked["query"], "clip0000_0");
    let results = ranked["results"].as_array().unwrap();
    assert!(results.iter().all(|e| e["clip"] != "clip0000"));
    let scores: Vec<f64> = results.iter().map(|e| e["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let csv = ok(&["rank", "clip0000_0", p(&f), "--format", "csv"]);
    assert!(csv.starts_with("image,clip,score,n_matches,mean_distance\n"));
    assert_eq!(csv.lines().count(), results.len() + 1);

    let eval = json(&ok(&["evaluate", p(&f), p(&c.join("labels.csv")), "--x", "1,2,3"]));
    let acc: Vec<f64> =
        eval["tables"].as_array().unwrap().iter().map(|t| t["overall"]["accuracy"].as_f64().unwrap()).collect();
    assert_eq!(acc.len(), 3);
    assert!(acc.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(eval["tables"][0]["overall"]["total"], 9);
}

#[test]
fn config_file_env_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let (_, f) = corpus(dir.path());
    let a = f.join("clip0001_0.sift");
    let cfg = dir.path().join("k.conf");
    fs::write(&cfg, "# test\nmatch.strategy = nndr\nmatch.ratio = 0.6\nseed = 5\n").unwrap();

    let from_file = json(&ok(&["--config", p(&cfg), "match", p(&a), p(&a)]));
    assert_eq!(from_file["strategy"], "nndr");
    assert_eq!(from_file["ransac"]["seed"], 5);

    let from_env = bin().env("KAKAMATCH_CONFIG", &cfg).args(["match", p(&a), p(&a)]).output().unwrap();
    assert_eq!(json(&String::from_utf8(from_env.stdout).unwrap())["ratio"], 0.6);

    // Flags win over the file.
    let flags = json(&ok(&["--config", p(&cfg), "--seed", "9", "--set", "match.strategy=nn", "match", p(&a), p(&a)]));
    assert_eq!(flags["strategy"], "nn");
    assert_eq!(flags["ransac"]["seed"], 9);

    fs::write(&cfg, "match.colour = blue\n").unwrap();
    assert_eq!(run(&["--config", p(&cfg), "match", p(&a), p(&a)]).status.code(), Some(2));
    assert_eq!(run(&["--config", p(&dir.path().join("none.conf")), "match", p(&a), p(&a)]).status.code(), Some(2));
}

#[test]
fn synth_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let args = ["synth", p(&out), "--individuals", "2", "--views", "2"];
    ok(&args);
    let first = fs::read(out.join("labels.csv")).unwrap();
    assert_eq!(run(&args).status.code(), Some(2));
    ok(&[&["--force"][..], &args[..]].concat());
    assert_eq!(fs::read(out.join("labels.csv")).unwrap(), first);
    assert_eq!(fs::read_dir(out.join("images")).unwrap().count(), 4);
    assert_eq!(run(&["synth", p(&dir.path().join("d")), "--individuals", "1"]).status.code(), Some(2));
}
