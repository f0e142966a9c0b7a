use std::path::Path;
use std::process::Command;

use wavelab_cli::RunManifest;

fn wmlab(dir: &Path, args: &[&str], config: &str) -> (i32, String) {
    let cfg = dir.join("run.ini");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wmlab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env("WMLAB_THREADS", "2")
        .output()
        .unwrap();
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    (out.status.code().unwrap(), text)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed_files_match(dir: &Path) {
    let m = manifest(dir);
    let mut on_disk: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut listed = m.files.clone();
    listed.sort();
    assert_eq!(on_disk, listed);
}

const CONSTANT: &str = "seed = 1\n[grid]\npoints = 16\n[time]\ndt = 0.05\nsamples = 11\n[params]\ndata = constant\npoint = 0, 0.6, 0.8\n";

#[test]
fn constant_map_evolution_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let (code, text) = wmlab(tmp.path(), &["evolve", "--out", out.to_str().unwrap()], CONSTANT);
    assert_eq!(code, 0, "{text}");
    listed_files_match(&out);
    let m = manifest(&out);
    assert!(m.passed());
    assert_eq!(m.schema, "wmlab.manifest/1");
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[1..], &[0.0, 0.0, 0.0]);
    }
    // a second run into the same directory is refused
    let (code, text) = wmlab(tmp.path(), &["evolve", "--out", out.to_str().unwrap()], CONSTANT);
    assert_eq!(code, 2, "{text}");
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    for (cfg, args) in [
        ("seed = x\n", vec!["evolve"]),
        ("seed = 1\n[params]\ndata = spiral\n", vec!["evolve"]),
        ("seed = 1\n", vec!["warp"]),
        ("seed = 1\n[params]\nlambda1 = 3\n", vec!["check-resonance"]),
        ("seed = 1\n[params]\na = 2\nb = 4\n", vec!["check-bilinear-atomic"]),
        ("seed = 1\n[time]\nt0 = 0.5\n", vec!["picard"]),
    ] {
        let mut a = args.clone();
        a.extend(["--out", o]);
        let (code, text) = wmlab(tmp.path(), &a, cfg);
        assert_eq!(code, 2, "{cfg}: {text}");
        assert!(!out.exists(), "{cfg}");
    }
}

#[test]
fn failing_verdict_exits_one_and_io_failure_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = "seed = 2\n[grid]\npoints = 16\n[time]\ndt = 0.05\nsamples = 5\n[params]\ndata = random\ntolerance = 1e-300\n";
    let (code, text) = wmlab(tmp.path(), &["evolve", "--out", out.to_str().unwrap()], cfg);
    assert_eq!(code, 1, "{text}");
    assert!(!manifest(&out).passed());

    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let (code, text) = wmlab(tmp.path(), &["evolve", "--out", blocker.join("sub").to_str().unwrap()], CONSTANT);
    assert_eq!(code, 3, "{text}");
}

const CHECKS: &str = "seed = 3\n[params]\nsamples = 2\noctaves = 1\nwindow = 20\n";

#[test]
fn all_checks_smoke_run_is_complete_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let (code, text) = wmlab(tmp.path(), &["all-checks", "--out", d.to_str().unwrap()], CHECKS);
        assert_eq!(code, 0, "{text}");
        listed_files_match(d);
    }
    let m = manifest(&a);
    let reports: Vec<&String> = m.files.iter().filter(|f| f.ends_with(".json")).collect();
    assert!(reports.len() >= 12, "{:?}", m.files);
    assert_eq!(m.files.last().map(String::as_str), Some("index.csv"));
    let index = std::fs::read_to_string(a.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), reports.len() + 1);
    for f in &m.files {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    for f in reports {
        let v: serde_json::Value = serde_json::from_str(std::fs::read_to_string(a.join(f)).unwrap().trim()).unwrap();
        assert_eq!(v["schema"], "wmlab.report/1");
        assert!(v["verdict"] == "pass" || v["verdict"] == "fail");
    }
    assert_eq!(manifest(&a).config_hash, manifest(&b).config_hash);
}

#[test]
fn picard_scattering_and_norms_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "seed = 4\n[grid]\npoints = 16\n[time]\ndt = 0.02\nsamples = 26\n";
    let runs = [
        ("picard", "[params]\ndata = random\namplitude = 1e-2\ntolerance = 1e-4\n", "picard.json"),
        ("scattering", "[params]\ndata = random\n", "scattering.json"),
        ("norms", "[params]\nkind = atom\ncount = 3\n", "norms.csv"),
        ("norms", "[params]\nkind = free-wave\ncount = 1\nbudget = 4\n", "norms.jsonl"),
    ];
    for (i, (exp, params, file)) in runs.iter().enumerate() {
        let out = tmp.path().join(format!("r{i}"));
        let (code, text) = wmlab(tmp.path(), &[exp, "--out", out.to_str().unwrap()], &format!("{base}{params}"));
        assert_eq!(code, 0, "{exp}: {text}");
        assert!(out.join(file).exists());
        listed_files_match(&out);
    }
}
