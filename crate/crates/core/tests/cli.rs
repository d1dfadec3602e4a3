use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deform"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("deform-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run(cfg: &Path, out: &Path) -> Output {
    bin().arg("run").arg("--config").arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn flat_metric_stops_as_non_generic() {
    let out = scratch("flat");
    let o = run(&config("flat.toml"), &out);
    assert_eq!(o.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["status"]["code"], "non_generic");
    assert_eq!(s["kernel"]["dimension"], 2);
}

#[test]
fn background_targets_need_no_correction() {
    let out = scratch("default");
    let o = run(&config("default.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out)["status"]["code"], "converged");
}

#[test]
fn manufactured_targets_converge_and_export() {
    let out = scratch("manufactured");
    let o = run(&config("manufactured.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let tol = s["config"]["iteration"]["tol"].as_f64().unwrap();
    let last = s["iteration"]["history"].as_array().unwrap().last().unwrap().clone();
    assert!(last["r_sup"].as_f64().unwrap() <= tol);
    assert!(last["h_sup"].as_f64().unwrap() <= tol);
    assert!(out.join("fields/steps").is_dir());

    let e = bin().arg("export-plot-data").arg(&out).output().unwrap();
    assert_eq!(e.status.code(), Some(0));
    let listed = String::from_utf8(e.stdout).unwrap();
    for f in deform::pipeline::PLOT_FILES {
        assert!(out.join(f).is_file(), "{f} missing");
        assert!(listed.contains(Path::new(f).file_name().unwrap().to_str().unwrap()));
    }
    let head = fs::read_to_string(out.join("plot/residual_vs_step.csv")).unwrap();
    assert!(head.starts_with("# step,r_sup"));
}

#[test]
fn invalid_configuration_exits_one_with_summary() {
    let out = scratch("bad");
    fs::create_dir_all(&out).unwrap();
    let cfg = out.join("bad.toml");
    fs::write(&cfg, "[domain]\ndim = 2\nresolution = 4\n[metric]\nkind = \"flat\"\n[targets]\nkind = \"zero\"\n").unwrap();
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(&out)["status"]["exit_code"], 1);
}

#[test]
fn missing_configuration_exits_one() {
    let out = scratch("missing");
    let o = run(&out.join("nope.toml"), &out);
    assert_eq!(o.status.code(), Some(1));
}

fn strip_volatile(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("timing");
            m.remove("wall_seconds");
            m.remove("directory");
            m.values_mut().for_each(strip_volatile);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

#[test]
fn repeated_runs_are_identical_up_to_timing() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        assert_eq!(run(&config("manufactured.toml"), d).status.code(), Some(0));
    }
    let (mut sa, mut sb) = (summary(&a), summary(&b));
    strip_volatile(&mut sa);
    strip_volatile(&mut sb);
    assert_eq!(sa, sb);
    let csv = |d: &Path| fs::read(d.join("fields/R_final.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
}

#[test]
fn resolution_override_is_recorded() {
    let out = scratch("res");
    let o = bin().args(["run", "--resolution", "25", "--config"]).arg(config("default.toml")).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&out)["grid"]["resolution"], 25);
}

#[test]
fn verify_reports_rows_and_rejects_unknown_suites() {
    let o = bin().args(["verify", "--suite", "weights", "--resolution", "17"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("C1") && text.contains("0 failed"));
    let o = bin().args(["verify", "--suite", "everything"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
