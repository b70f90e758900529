use std::path::Path;
use std::process::{Command, Output};

fn cone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cone")).args(args).output().unwrap()
}

fn run_small(alg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--algorithm",
        alg,
        "--budget",
        "60",
        "--trials",
        "3",
        "--checkpoint-every",
        "20",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    cone(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_curves_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for alg in ["cone", "us-sne", "us-krig"] {
        let oa = run_small(alg, a.path(), &[]);
        assert!(oa.status.success(), "{alg}: {}", stderr(&oa));
        let ob = run_small(alg, b.path(), &[]);
        assert!(ob.status.success());
        for f in [format!("curve_{alg}.csv"), format!("aggregate_{alg}.csv"), format!("summary_{alg}.json")] {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert_eq!(x, y, "{f} differs between identical runs");
        }
        let curve = std::fs::read_to_string(a.path().join(format!("curve_{alg}.csv"))).unwrap();
        // header + 3 trials x 3 checkpoints
        assert_eq!(curve.lines().count(), 10);
        assert_eq!(curve.lines().next().unwrap(), "trial,stage,one_minus_varpi");
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(a.path().join(format!("summary_{alg}.json"))).unwrap()).unwrap();
        assert_eq!(summary["summary"]["n_trials"], 3);
        assert_eq!(summary["summary"]["final_stage"], 60);
    }
}

#[test]
fn different_seeds_give_different_curves() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_small("us-sne", a.path(), &["--seed", "1"]).status.success());
    assert!(run_small("us-sne", b.path(), &["--seed", "2"]).status.success());
    let x = std::fs::read(a.path().join("curve_us-sne.csv")).unwrap();
    let y = std::fs::read(b.path().join("curve_us-sne.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn plot_renders_svg() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_small("cone", d.path(), &[]).status.success());
    assert!(run_small("us-sne", d.path(), &[]).status.success());
    let svg = d.path().join("curves.svg");
    let o = cone(&["plot", "--in", d.path().to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.trim_end().ends_with("</svg>"));
    assert!(text.contains("CONE") && text.contains("US-SNE") && !text.contains("US-Krig"));

    let empty = tempfile::tempdir().unwrap();
    let o = cone(&["plot", "--in", empty.path().to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_on_saved_dataset() {
    let d = tempfile::tempdir().unwrap();
    let o = run_small("us-sne", d.path(), &["--save-datasets"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ds = d.path().join("dataset_us-sne_0.csv");
    assert_eq!(std::fs::read_to_string(&ds).unwrap().lines().count(), 61);

    let o = cone(&["estimate", "--dataset", ds.to_str().unwrap(), "--x", "1", "--y", "1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["decision"], 1);
    let psi = v["psi"].as_u64().unwrap();
    assert!(psi >= 1);
    assert!(v["mean"].is_f64());
    assert!(v["radius"].as_f64().unwrap() > 0.0);

    // outside the toy box [0, 2]
    let o = cone(&["estimate", "--dataset", ds.to_str().unwrap(), "--x", "0", "--y", "-0.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = cone(&["estimate", "--dataset", ds.to_str().unwrap(), "--x", "0", "--y", "abc"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cone(&["estimate", "--dataset", d.path().join("missing.csv").to_str().unwrap(), "--x", "0", "--y", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = cone(&["run", "--algorithm", "cone", "--budget", "3", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initialization"));

    let o = run_small("us-krig", d.path(), &["--batch-size", "7"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run_small("cone", d.path(), &["--lambda-lo", "5", "--lambda-hi", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run_small("cone", d.path(), &["--oracle", "callcenter", "--metric", "eoc"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = d.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = run_small("cone", d.path(), &["--oracle", "callcenter", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = run_small("cone", d.path(), &["--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_callcenter_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["callcenter_default.json", "callcenter_loaded.json"] {
        cone_core::oracles::CallCenterConfig::load(&dir.join(name)).unwrap();
    }
}
