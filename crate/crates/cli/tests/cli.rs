use serde_json::Value;
use sivsim::config::{canonical, parse_config_with_base};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "\
[experiment]
type = rabi
durations = linspace(0, 400, 9) ns

[run]
shots = 40
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sivsim"));
    c.env_remove("SIVSIM_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sivsim(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_to(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let o = out.to_str().unwrap();
    let mut args = vec!["run", cfg, "--out", o];
    args.extend_from_slice(extra);
    let r = sivsim(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    r
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr).expect("stderr is one JSON document")
}

#[test]
fn same_seed_gives_identical_csv_for_any_worker_count() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    run_to(&cfg, &d.path().join("a"), &["--seed", "7", "--workers", "1"]);
    run_to(&cfg, &d.path().join("b"), &["--seed", "7", "--workers", "3"]);
    run_to(&cfg, &d.path().join("c"), &["--seed", "8"]);
    let read = |s: &str| std::fs::read(d.path().join(s).join("data.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn outputs_and_summary() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = d.path().join("o");
    run_to(&cfg, &out, &["--seed", "3"]);
    let csv = std::fs::read_to_string(out.join("data.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("sweep,mean,err,bright,photons,p_down"));
    assert_eq!(csv.lines().count(), 10);
    let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let s: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(s["seed"], 3);
    assert_eq!(s["experiment"], "rabi");
    assert!(s["wall_time_s"].as_f64().unwrap() >= 0.0);
    let keys: Vec<&String> = s.as_object().unwrap().keys().collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "keys sorted");
    // top-level keys appear in sorted order in the file too
    let pos: Vec<usize> = keys.iter().map(|k| text.find(&format!("\n  \"{k}\"")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    assert!(std::fs::read_to_string(out.join("plot.svg")).unwrap().starts_with("<svg"));

    let quiet = d.path().join("q");
    run_to(&cfg, &quiet, &["--no-plot"]);
    assert!(!quiet.join("plot.svg").exists());
}

#[test]
fn config_echo_is_a_canonical_fixed_point() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    run_to(&cfg, &d.path().join("o"), &["--seed", "11", "--workers", "2"]);
    let s: Value = serde_json::from_slice(&std::fs::read(d.path().join("o/summary.json")).unwrap()).unwrap();
    let echo = s["config"].as_str().unwrap();
    let parsed = parse_config_with_base(echo, Some(d.path())).unwrap();
    assert_eq!(canonical(&parsed), echo);
    assert_eq!(parsed.run.seed, 11);
    assert_eq!(parsed.run.workers, Some(2));
}

#[test]
fn golden_canonical_dump() {
    let dir = configs();
    let golden = std::fs::read_to_string(dir.join("fig4_cpmg.canonical.cfg")).unwrap();
    for f in ["fig4_cpmg.cfg", "fig4_cpmg.canonical.cfg"] {
        let o = sivsim(&["dump-canonical", dir.join(f).to_str().unwrap()]);
        assert!(o.status.success());
        assert_eq!(String::from_utf8(o.stdout).unwrap(), golden, "{f}");
    }
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for e in std::fs::read_dir(configs()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "cfg") {
            let o = sivsim(&["validate", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            let v: Value = serde_json::from_slice(&o.stdout).unwrap();
            assert_eq!(v["valid"], true);
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn config_errors_exit_with_json() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        ("[experiment]\ntype = t1\nwaits = 1 ms\nbogus = 3\n", "config.unknown_key", Some(4)),
        ("[experiment]\ntype = t1\nwaits = 1 parsec\n", "config.bad_unit", Some(3)),
        ("[system]\nb_mag = 1 kG\n", "config.missing_section", None),
    ];
    for (text, kind, line) in cases {
        let cfg = write_config(d.path(), text);
        let out = d.path().join("x");
        for args in [vec!["run", &cfg, "--out", out.to_str().unwrap()], vec!["validate", &cfg]] {
            let o = sivsim(&args);
            assert_eq!(o.status.code(), Some(2));
            let e = error_json(&o);
            assert_eq!(e["error"]["kind"], kind);
            assert_eq!(e["error"]["line"].as_u64(), line.map(|l| l as u64));
            assert!(e["error"]["message"].as_str().unwrap().len() > 10);
        }
    }
    let e = error_json(&sivsim(&["run", d.path().join("missing.cfg").to_str().unwrap()]));
    assert_eq!(e["error"]["kind"], "io");
}

#[test]
fn simulation_errors_exit_with_json() {
    // 900 MHz detuning cannot be integrated with a 1 µs step
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "[experiment]\ntype = rabi\ndurations = 0, 100 ns\ndetuning = 900 MHz\n\n[run]\nshots = 2\ndt = 1 us\n",
    );
    let o = sivsim(&["run", &cfg, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let e = error_json(&o);
    assert!(e["error"]["kind"].as_str().unwrap().starts_with("simulation."));
}

#[test]
fn sivsim_out_sets_the_default_root() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let root = d.path().join("root");
    let o = bin().env("SIVSIM_OUT", &root).args(["run", &cfg, "--no-plot"]).output().unwrap();
    assert!(o.status.success());
    assert!(root.join("exp/data.csv").exists());
}
