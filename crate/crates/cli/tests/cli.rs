use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nilflow-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn nilflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilflow")).args(args).env_remove("NILFLOW_OUT").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn weyl_sum_is_deterministic_across_runs_and_threads() {
    let dir = scratch("weyl");
    let cfg = write_config(&dir, "seed = 5\n[weyl_sum]\nterms = 200000\nstride = 5000\ncheck_terms = 200000\n");
    let runs: Vec<PathBuf> = ["1", "3"]
        .iter()
        .map(|threads| {
            let out = dir.join(format!("t{threads}"));
            let o = nilflow(&[
                "weyl-sum",
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
                "--quiet",
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    for file in ["partial_sums.csv", "summary.json"] {
        assert_eq!(fs::read(runs[0].join(file)).unwrap(), fs::read(runs[1].join(file)).unwrap(), "{file}");
    }
    let s = summary(&runs[0]);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["seed"], 5);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["library_version"], env!("CARGO_PKG_VERSION"));
    assert!(s["results"]["accuracy_vs_direct"].as_f64().unwrap() <= 1e-9);
    assert!(runs[0].join("timing.json").exists() && runs[0].join("schema.json").exists());
    assert!(s.get("wall_seconds").is_none());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn l2_identity_holds() {
    let dir = scratch("l2");
    let out = dir.join("out");
    let o = nilflow(&["l2-identity", "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
    let s = summary(&out);
    assert!(s["results"]["max_relative_error"].as_f64().unwrap() <= 1e-9);
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let csv = fs::read_to_string(out.join("l2_identity.csv")).unwrap();
    assert!(csv.starts_with("terms,grid,l2,relative_error"));
    assert_eq!(csv.lines().count(), 4);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_rho_is_a_validation_failure() {
    let dir = scratch("rho");
    let cfg = write_config(&dir, "[frame]\nsigma = 0.25\n");
    let o = nilflow(&["weyl-sum", "--config", &cfg, "--out", dir.join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
    assert!(!dir.join("o").exists());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_keys_and_bad_flags_exit_2() {
    let dir = scratch("unknown");
    let cfg = write_config(&dir, "[sublevel]\nepsilon = 0.1\n");
    assert_eq!(nilflow(&["sublevel", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(nilflow(&["no-such-experiment"]).status.code(), Some(2));
    assert_eq!(nilflow(&["weyl-sum", "--threads", "many"]).status.code(), Some(2));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn guard_trips_exit_3_after_writing_data() {
    let dir = scratch("guard");
    let cfg =
        write_config(&dir, "[correlation]\nsamples = 400\nstretch_samples = 4\nstretch_times = [10.0]\nt_hi = 50.0\n");
    let out = dir.join("out");
    let o = nilflow(&["correlation", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient signal"));
    assert_eq!(summary(&out)["status"], "guard-tripped");
    assert!(out.join("correlation.csv").exists());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn env_var_sets_the_output_directory() {
    let dir = scratch("env");
    let cfg = write_config(&dir, "[weyl_sum]\nterms = 1000\nstride = 100\n");
    let o = Command::new(env!("CARGO_BIN_EXE_nilflow"))
        .args(["weyl-sum", "--config", &cfg, "--quiet"])
        .env("NILFLOW_OUT", dir.join("from-env"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("from-env/summary.json").exists());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn seed_flag_overrides_config() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, "seed = 1\n[limit_dist]\nsamples = 200\nscales = 2\nbase_time = 50.0\n");
    let a = dir.join("a");
    let b = dir.join("b");
    assert!(nilflow(&["limit-dist", "--config", &cfg, "--out", a.to_str().unwrap(), "--quiet"]).status.success());
    assert!(nilflow(&["limit-dist", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "9", "--quiet"])
        .status
        .success());
    let (sa, sb) = (summary(&a), summary(&b));
    assert_eq!(sb["seed"], 9);
    assert_ne!(sa["config_hash"], sb["config_hash"]);
    assert_ne!(fs::read(a.join("quantiles.csv")).unwrap(), fs::read(b.join("quantiles.csv")).unwrap());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn small_runs_of_remaining_experiments() {
    let dir = scratch("rest");
    let cfg = write_config(
        &dir,
        "[line_model]\ngrid_log2 = 14\nhalf_width = 64.0\ntimes = [2.0, 4.0, 8.0]\n\
         [sublevel]\ntime = 200.0\nsamples = 2000\neps_lo = 0.01\neps_hi = 0.5\n\
         [valency]\ntime = 100.0\nleaves = 3\n\
         [renorm_track]\nhorizon = 2.0\npoints = 16\nmoment_points = 3\nsamples = 200\n",
    );
    for kind in ["line-model", "sublevel", "valency", "renorm-track"] {
        let out = dir.join(kind);
        let o = nilflow(&[kind, "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let s = summary(&out);
        assert_eq!(s["kind"], kind);
        for f in s["files"].as_array().unwrap() {
            assert!(out.join(f.as_str().unwrap()).exists());
        }
    }
    fs::remove_dir_all(dir).unwrap();
}
