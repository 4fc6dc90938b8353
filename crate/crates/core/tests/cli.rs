//! End-to-end checks of the `sparsefill` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparsefill::cli::{RunManifest, EXIT_CONFIG, EXIT_IO, EXIT_REPLAY_MISMATCH, EXIT_RUNS_FAILED};
use sparsefill::completion::ValidMask;
use sparsefill::dataio::{load_depth, load_features, sample_sparse, save_sparse, RngSpec};

fn sparsefill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsefill"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A synthetic sample directory with image.png, depth.sfd and sparse.txt.
fn sample(dir: &Path, h: usize, w: usize, count: usize) -> PathBuf {
    let out = dir.join(format!("sample_{h}x{w}"));
    let o = sparsefill(&[
        "synth",
        "--height",
        &h.to_string(),
        "--width",
        &w.to_string(),
        "--count",
        &count.to_string(),
        "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

/// Small basis so the tests stay quick.
const FAST: [&str; 4] = ["--basis-dim", "32", "--hidden-dim", "16"];

fn complete(smp: &Path, out: &Path, extra: &[&str]) -> Output {
    let image = smp.join("image.png");
    let sparse = smp.join("sparse.txt");
    let mut args = vec![
        "complete",
        "--image",
        s(&image),
        "--sparse",
        s(&sparse),
        "--out",
        s(out),
    ];
    args.extend_from_slice(&FAST);
    args.extend_from_slice(extra);
    sparsefill(&args)
}

fn table_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

#[test]
fn complete_writes_depth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 30, 40, 120);
    let before = fs::read(smp.join("sparse.txt")).unwrap();
    let out = dir.path().join("pred.sfd");
    let o = complete(&smp, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let depth = load_depth(&out).unwrap();
    assert_eq!((depth.height(), depth.width()), (30, 40));
    assert!(stdout(&o).contains("effective_rank=33"));
    let m = RunManifest::load(&dir.path().join("pred.sfd.manifest.json")).unwrap();
    assert_eq!(m.command, "complete");
    assert_eq!(m.outputs.len(), 1);
    assert_eq!(m.solve.unwrap().iterations, 1);
    assert_eq!(m.config.unwrap().generator.basis_dim, 32);
    assert_eq!(
        fs::read(smp.join("sparse.txt")).unwrap(),
        before,
        "inputs must not change"
    );
}

#[test]
fn complete_irls_records_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 30, 40, 120);
    let out = dir.path().join("pred.sfd");
    let o = complete(&smp, &out, &["--irls", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["solve"]["solver"], "irls");
    let m = RunManifest::load(&dir.path().join("pred.sfd.manifest.json")).unwrap();
    assert!(m.solve.unwrap().iterations > 0);
}

#[test]
fn complete_rejects_mismatched_sparse() {
    let dir = tempfile::tempdir().unwrap();
    let a = sample(dir.path(), 30, 40, 50);
    let b = sample(dir.path(), 20, 40, 50);
    let out = dir.path().join("pred.sfd");
    let o = sparsefill(&[
        "complete",
        "--image",
        s(&a.join("image.png")),
        "--sparse",
        s(&b.join("sparse.txt")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn bad_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 12, 12, 20);
    let out = dir.path().join("pred.sfd");
    assert_eq!(
        complete(&smp, &out, &["--encode-levels", "0"])
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(
        complete(&smp, &out, &["--irls-clamp", "-1"]).status.code(),
        Some(EXIT_CONFIG)
    );
    assert_eq!(
        sparsefill(&["complete", "--no-such-flag"]).status.code(),
        Some(EXIT_CONFIG)
    );
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 12, 12, 20);
    let o = sparsefill(&[
        "evaluate",
        "--pred",
        s(&smp.join("depth.sfd")),
        "--gt",
        s(&dir.path().join("absent.sfd")),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    let o = sparsefill(&[
        "complete",
        "--image",
        s(&dir.path().join("absent.png")),
        "--sparse",
        s(&smp.join("sparse.txt")),
        "--out",
        s(&dir.path().join("x.sfd")),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn evaluate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 24, 24, 20);
    let gt = smp.join("depth.sfd");
    let o = sparsefill(&["evaluate", "--pred", s(&gt), "--gt", s(&gt)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("rmse=0\n") && text.contains("delta1=100\n"),
        "{text}"
    );
    assert!(!text.contains("see="));

    let o = sparsefill(&[
        "evaluate",
        "--pred",
        s(&gt),
        "--gt",
        s(&gt),
        "--see",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rmse"], 0.0);
    assert!(v.get("see").is_some());
}

#[test]
fn count_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 40, 40, 10);
    let table = dir.path().join("t.txt");
    let mut args = vec![
        "experiment",
        "--sample-dir",
        s(&smp),
        "--protocol",
        "count-sweep",
        "--out",
        s(&table),
    ];
    args.extend_from_slice(&FAST);
    let o = sparsefill(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("protocol "));
    let rows = table_rows(&text);
    assert_eq!(rows.len(), 3);
    let samples: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(samples, ["100", "500", "1000"]);
    assert!(rows.iter().all(|r| r.len() == 16 && r[15] == "ok"));
}

#[test]
fn scale_sweep_rel_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 40, 40, 10);
    let table = dir.path().join("t.txt");
    let mut args = vec![
        "experiment",
        "--sample-dir",
        s(&smp),
        "--protocol",
        "scale-sweep",
        "--count",
        "300",
        "--seeds",
        "0,1",
        "--out",
        s(&table),
    ];
    args.extend_from_slice(&FAST);
    assert!(sparsefill(&args).status.success());
    let rows = table_rows(&fs::read_to_string(&table).unwrap());
    assert_eq!(rows.len(), 6);
    for seed in ["0", "1"] {
        let rel: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == seed)
            .map(|r| r[10].parse().unwrap())
            .collect();
        assert_eq!(rel.len(), 3);
        assert!(
            rel.iter().all(|r| (r - rel[0]).abs() <= 1e-10 * rel[0]),
            "{rel:?}"
        );
    }
}

#[test]
fn noise_protocol_rows() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 40, 40, 10);
    let table = dir.path().join("t.txt");
    let mut args = vec![
        "experiment",
        "--sample-dir",
        s(&smp),
        "--protocol",
        "noise",
        "--count",
        "1000",
        "--corrupt",
        "300",
        "--out",
        s(&table),
    ];
    args.extend_from_slice(&FAST);
    assert!(sparsefill(&args).status.success());
    let rows = table_rows(&fs::read_to_string(&table).unwrap());
    let settings: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(settings, ["clean", "noisy", "noisy+irls"]);
    assert_eq!(rows[2][6], "on");
    assert!(rows[2][7].parse::<usize>().unwrap() >= 1);
    assert_eq!(rows[1][4], "300");
}

#[test]
fn failed_runs_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 20, 20, 10);
    let table = dir.path().join("t.txt");
    // 20x20 has only 400 valid pixels, so the 1000-point run fails
    let mut args = vec![
        "experiment",
        "--sample-dir",
        s(&smp),
        "--protocol",
        "count-sweep",
        "--counts",
        "50,1000,100",
        "--out",
        s(&table),
    ];
    args.extend_from_slice(&FAST);
    let o = sparsefill(&args);
    assert_eq!(o.status.code(), Some(EXIT_RUNS_FAILED));
    let rows = table_rows(&fs::read_to_string(&table).unwrap());
    let status: Vec<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert_eq!(status, ["ok", "failed", "ok"]);
    let m = RunManifest::load(&dir.path().join("t.txt.manifest.json")).unwrap();
    assert_eq!(m.failures.len(), 1);
}

#[test]
fn upsample_shapes_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 120, 160, 300);
    let (image, sparse) = (smp.join("image.png"), smp.join("sparse.txt"));
    let up = dir.path().join("up.sfd");
    let run = |h: &str, w: &str, out: &Path| {
        let mut args = vec![
            "upsample",
            "--image",
            s(&image),
            "--sparse",
            s(&sparse),
            "--height",
            h,
            "--width",
            w,
            "--out",
            s(out),
        ];
        args.extend_from_slice(&FAST);
        sparsefill(&args)
    };
    let o = run("360", "480", &up);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&up).unwrap();
    assert_eq!(&bytes[..4], b"SFD1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 360);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 480);

    let same = dir.path().join("same.sfd");
    assert!(run("120", "160", &same).status.success());
    let plain = dir.path().join("plain.sfd");
    assert!(complete(&smp, &plain, &[]).status.success());
    assert_eq!(fs::read(&same).unwrap(), fs::read(&plain).unwrap());

    assert_eq!(
        run("100", "160", &dir.path().join("small.sfd"))
            .status
            .code(),
        Some(EXIT_CONFIG)
    );
}

#[test]
fn kernel_maps() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 31, 41, 10);
    let out = dir.path().join("k");
    let image = smp.join("image.png");
    let mut args = vec![
        "kernel",
        "--image",
        s(&image),
        "--anchor",
        "15,20",
        "--anchor",
        "0,0",
        "--out-dir",
        s(&out),
    ];
    args.extend_from_slice(&FAST);
    let o = sparsefill(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let k = load_features(out.join("kernel_15_20.sff")).unwrap();
    assert_eq!(k.grid().get(15, 20, 0), 1.0);
    assert!(k.grid().as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    assert!(out.join("kernel_0_0.sff").exists() && out.join("kernel_0_0.png").exists());

    let bad = dir.path().join("bad");
    let o = sparsefill(&[
        "kernel",
        "--image",
        s(&image),
        "--anchor",
        "31,0",
        "--out-dir",
        s(&bad),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(!bad.exists());
}

#[test]
fn external_features() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 31, 41, 10);
    let k = dir.path().join("k");
    let image = smp.join("image.png");
    assert!(sparsefill(&[
        "kernel",
        "--image",
        s(&image),
        "--anchor",
        "3,3",
        "--out-dir",
        s(&k)
    ])
    .status
    .success());
    // any feature map of the right size works; reuse the kernel map as one
    let gt = load_depth(smp.join("depth.sfd")).unwrap();
    let sparse = sample_sparse(&gt, &ValidMask::from_depth(&gt), 60, RngSpec::new(3)).unwrap();
    save_sparse(&sparse, smp.join("sparse.txt")).unwrap();
    let out = dir.path().join("pred.sfd");
    let feats = k.join("kernel_3_3.sff");
    let o = complete(&smp, &out, &["--features", s(&feats)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = RunManifest::load(&dir.path().join("pred.sfd.manifest.json")).unwrap();
    assert!(m.inputs.iter().any(|r| r.role == "features"));

    let wrong = sample(dir.path(), 10, 10, 5);
    let o = complete(&smp, &out, &["--features", s(&wrong.join("image.png"))]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn replay_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let smp = sample(dir.path(), 20, 20, 60);
    let out = dir.path().join("pred.sfd");
    assert!(complete(&smp, &out, &[]).status.success());
    let manifest = dir.path().join("pred.sfd.manifest.json");
    assert!(sparsefill(&["replay", s(&manifest)]).status.success());
    // a different sparse file is refused before anything is rerun
    let gt = load_depth(smp.join("depth.sfd")).unwrap();
    let other = sample_sparse(&gt, &ValidMask::from_depth(&gt), 61, RngSpec::new(9)).unwrap();
    save_sparse(&other, smp.join("sparse.txt")).unwrap();
    assert_eq!(
        sparsefill(&["replay", s(&manifest)]).status.code(),
        Some(EXIT_REPLAY_MISMATCH)
    );
}
