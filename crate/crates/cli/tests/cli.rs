use std::path::Path;
use std::process::{Command, Output};

fn groupsynth(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupsynth"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = groupsynth(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["fixture", "--out", "pool.csv", "--seed", "3"]);
    let msg = ok(d, &["synthesize", "--pool", "pool.csv", "--out", "scenes.json", "--count", "6", "--seed", "4"]);
    assert!(msg.contains("wrote 6 scenes"), "{msg}");
    ok(d, &["project", "--scenes", "scenes.json", "--out", "ann.json"]);
    ok(d, &["occlusion", "--annotations", "ann.json", "--out", "occ.json"]);
    let msg = ok(d, &["stats", "train=ann.json", "test=ann.json", "--out", "stats"]);
    assert!(msg.contains("train: 6 scenes"), "{msg}");
    for f in ["stats/train/manifest.json", "stats/test/group_occlusion.csv", "stats/splits.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let table = std::fs::read_to_string(d.join("stats/splits.csv")).unwrap();
    assert!(table.starts_with("statistic,train,test,all\nimages,6,6,12\n"), "{table}");

    // Ground truth scored against itself.
    let msg = ok(d, &["evaluate", "--gt", "ann.json", "--pred", "ann.json", "--out", "score.json"]);
    assert!(msg.contains("= 1.0000"), "{msg}");
}

#[test]
fn affinity_evaluation_uses_config_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("f0.csv"), "a,b,c,d\n1,0.95,0,0\n0.95,1,0.55,0\n0,0.55,1,0.95\n0,0,0.95,1\n").unwrap();
    std::fs::write(
        d.join("gt.json"),
        r#"{"schema_version": 1, "frames": [{"frame_id": "f0", "groups": [["a", "b"], ["c", "d"]]}]}"#,
    )
    .unwrap();
    std::fs::write(d.join("cfg.toml"), "[evaluation]\nlink_threshold = 0.5\ngraph_cut_rate = 0.2\n").unwrap();
    let msg = ok(d, &["evaluate", "--config", "cfg.toml", "--gt", "gt.json", "--affinity", "f0.csv", "--out", "s.json"]);
    assert!(msg.contains("= 1.0000"), "{msg}");
    std::fs::write(d.join("cfg.toml"), "[evaluation]\nlink_threshold = 0.5\ngraph_cut_rate = 0.0\n").unwrap();
    let msg = ok(d, &["evaluate", "--config", "cfg.toml", "--gt", "gt.json", "--affinity", "f0=f0.csv", "--out", "s.json"]);
    assert!(msg.contains("= 0.0000"), "{msg}");
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["fixture", "--out", "pool.csv"]);
    ok(d, &["synthesize", "--pool", "pool.csv", "--out", "a.json", "--count", "10", "--workers", "1"]);
    ok(d, &["synthesize", "--pool", "pool.csv", "--out", "b.json", "--count", "10", "--workers", "4"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| groupsynth(d, args).status.code();

    assert_eq!(code(&["synthesize", "--pool", "missing.csv", "--out", "s.json"]), Some(2));

    std::fs::write(
        d.join("bad.csv"),
        "scene_id,group_id,person_id,x_m,y_m,body_orientation_rad,head_orientation_rad\ns,g,p,zero,0,0,\n",
    )
    .unwrap();
    let out = groupsynth(d, &["synthesize", "--pool", "bad.csv", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(d.join("cfg.toml"), "[scene]\nnot_a_field = 1\n").unwrap();
    assert_eq!(code(&["fixture", "--config", "cfg.toml", "--out", "p.csv"]), Some(1));

    std::fs::write(d.join("v.json"), r#"{"schema_version": 99, "records": []}"#).unwrap();
    assert_eq!(code(&["occlusion", "--annotations", "v.json", "--out", "o.json"]), Some(1));

    assert_eq!(code(&["synthesize", "--bogus"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
}
