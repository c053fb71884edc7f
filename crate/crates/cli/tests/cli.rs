//! Runs the `irs-sop` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn irs_sop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-sop")).args(args).output().unwrap()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("small.conf");
    let text =
        format!("system.N_H = 4\nsystem.N_V = 4\nsweep.k_grid = 16,4,8\nsweep.n_grid = 4,16\nvalidate.K = 8\n{extra}");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_k_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("k.csv");
    let o = irs_sop(&["sweep-k", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9", "--trials", "500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.join(","), "scenario,K,sop_analytic,sop_lower,sop_mc,sop_mc_se,sop_mc_random_ess,trials,seed");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let ks: Vec<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    assert_eq!(ks, ["4", "8", "16"]);
    assert!(rows.iter().all(|r| &r[0] == "S3" && &r[7] == "500" && &r[8] == "9"));

    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("k.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["trials"], 500);
    assert_eq!(meta["params"]["irs_columns"], 4);
    assert!(meta["version"].is_string());

    // the sidecar's config alone reproduces the run
    let replay_cfg = dir.path().join("replay.conf");
    std::fs::write(&replay_cfg, meta["config"].as_str().unwrap()).unwrap();
    let replay = dir.path().join("replay.csv");
    let o = irs_sop(&["sweep-k", "--config", replay_cfg.to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&replay).unwrap());
}

#[test]
fn every_subcommand_runs_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    for cmd in ["sop-point", "sweep-k", "sweep-n", "optimal-k", "validate-dist"] {
        let out = dir.path().join(format!("{cmd}.json"));
        let o =
            irs_sop(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--trials", "300", "--format", "json"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!(!v.as_array().unwrap().is_empty(), "{cmd}");
        let meta: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{cmd}.json.meta.json"))).unwrap())
                .unwrap();
        assert_eq!(meta["experiment"], cmd);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "system.rho = 1.5\n").unwrap();
    let o = irs_sop(&["sop-point", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));

    let o = irs_sop(&["sop-point", "--config", "/no/such/file.conf", "--out", out]);
    assert_eq!(o.status.code(), Some(4));

    let o = irs_sop(&["sop-point", "--trials", "10", "--out", "/no/such/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));

    let o = irs_sop(&["sop-point", "--format", "xml", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    // the series is refused well below the optimum at the reference setup
    let cfg = small_config(dir.path(), "");
    std::fs::write(&cfg, "analytics.method = series\npoint.K = 5\nmc.enabled = false\n").unwrap();
    let o = irs_sop(&["sop-point", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
