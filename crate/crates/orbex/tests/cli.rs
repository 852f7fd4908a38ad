use std::path::PathBuf;
use std::process::{Command, Output};

fn orbex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbex")).args(args).env_remove("ORBEX_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orbex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn case_list_names_every_family() {
    let o = orbex(&["case", "list", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let list = v.as_array().unwrap();
    assert!(list.len() >= 20);
    for family in ["matrix", "tworing", "cubedring", "silnikov"] {
        assert!(list.iter().any(|c| c["family"] == family), "{family}");
    }
}

#[test]
fn case_run_json_reports_the_oseledec_route() {
    let o = orbex(&["case", "run", "M3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["id"], "M3");
    assert_eq!(v["pass"], true);
    let top = v["spectrum"]["le_o"][0].as_f64().unwrap();
    assert!((top - (101f64.sqrt() - 3.0) / 2.0).abs() < 1e-10);
}

#[test]
fn exit_codes() {
    assert_eq!(orbex(&["case", "run", "M1", "M2"]).status.code(), Some(0));
    assert_eq!(orbex(&["case", "run", "no-such-case"]).status.code(), Some(2));
    assert_eq!(orbex(&["case", "run", "M1", "--rtol", "-1"]).status.code(), Some(2));
    assert_eq!(orbex(&["sweep", "--b-from", "0.5", "--b-to", "0.5", "--steps", "3"]).status.code(), Some(2));
    assert_eq!(orbex(&["frobnicate"]).status.code(), Some(2));
    // the computed exponents carry rounding, so a zero tolerance fails
    assert_eq!(orbex(&["case", "run", "M3", "--le-tol", "0"]).status.code(), Some(1));
}

#[test]
fn traj_follows_the_rotation() {
    let o = orbex(&["traj", "--system", "linear", "--matrix", "0,-1,0,1,0,0,0,0,0", "--x0", "1,0,0", "--t", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("t,x,y,z\n"));
    let data = rows(&text);
    assert!(data.len() > 3);
    assert_eq!(data[0], vec![0.0, 1.0, 0.0, 0.0]);
    for r in &data {
        assert!((r[1] - r[0].cos()).abs() < 1e-8 && (r[2] - r[0].sin()).abs() < 1e-8);
    }
    assert_eq!(data.last().unwrap()[0], 3.0);
}

#[test]
fn traj_cycle_writes_one_period_and_a_sidecar() {
    let out = scratch("cycle.csv");
    let o = orbex(&["traj", "--x0", "0.5,0.1,0", "--t", "100", "--cycle", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = rows(&std::fs::read_to_string(&out).unwrap());
    let span = data.last().unwrap()[0] - data[0][0];
    assert!((span - 6.2848).abs() < 1e-3, "{span}");
    let (first, last) = (&data[0], data.last().unwrap());
    assert!((1..4).all(|i| (first[i] - last[i]).abs() < 1e-6));
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert!((side["T"].as_f64().unwrap() - span).abs() < 1e-9);
    assert_eq!(side["rotation_number"], 1);
}

#[test]
fn traj_cycle_sidecar_goes_to_stderr_without_out() {
    let o = orbex(&["traj", "--t", "100", "--cycle"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("\"rotation_number\":1"));
}

#[test]
fn traj_keeps_rows_before_a_blow_up() {
    // x‴ = x³ + … escapes to infinity in finite time from far out
    let o = orbex(&["traj", "--x0", "5,5,5", "--t", "100"]);
    assert_eq!(o.status.code(), Some(1));
    let data = rows(&stdout(&o));
    assert!(!data.is_empty());
    assert_eq!(data[0][1], 5.0);
    assert!(data.last().unwrap()[0] < 100.0);
}

#[test]
fn sweep_csv_is_ordered_and_parallel_safe() {
    let args = ["sweep", "--b-from", "0.8", "--b-to", "0.6", "--steps", "3"];
    let serial = orbex(&args);
    let parallel = orbex(&[&args[..], &["--jobs", "3"]].concat());
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
    let text = stdout(&serial);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "b,T,rotation,cycles,lej1,lej2,lej3,leo1,leo2,leo3,sign_class");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.8,6.2848"));
    assert!(lines[3].starts_with("0.6,"));
}

#[test]
fn config_file_then_flags() {
    let path = scratch("run.conf");
    std::fs::write(&path, "# trial\nsystem = tworing\nalpha = -0.25\nrtol = 1e-9\n").unwrap();
    let o = orbex(&["--config", path.to_str().unwrap(), "config", "show", "--rtol", "1e-8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("system = tworing\n"));
    assert!(text.contains("alpha = -0.25\n"));
    assert!(text.contains("rtol = 1e-8\n"));

    std::fs::write(&path, "nonsense = 3\n").unwrap();
    assert_eq!(orbex(&["--config", path.to_str().unwrap(), "config", "show"]).status.code(), Some(2));
}

#[test]
fn out_dir_prefixes_relative_outputs() {
    let dir = scratch("outdir");
    let o = orbex(&["--out-dir", dir.to_str().unwrap(), "case", "list", "--out", "cases.txt"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(dir.join("cases.txt")).unwrap().contains("M1"));
}

#[test]
fn spectrum_on_the_cycle() {
    let o = orbex(&["spectrum", "--cycle", "--t", "100", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["period"].as_f64().unwrap() - 6.2848).abs() < 1e-3);
    let sum: f64 = v["le_j"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((sum + 0.8).abs() < 1e-6);
    assert_eq!(v["sign_class"], "a'");
}

#[test]
fn spectrum_qr_column_survives_a_long_horizon() {
    let o = orbex(&[
        "spectrum",
        "--system",
        "linear",
        "--matrix",
        "-1,10,0,0,-2,0,0,0,-3",
        "--t",
        "400",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let qr: Vec<f64> =
        text.lines().find_map(|l| l.strip_prefix("le_qr,")).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    for (got, want) in qr.iter().zip([-1.0, -2.0, -3.0]) {
        assert!((got - want).abs() < 1e-2, "{got} vs {want}");
    }
}
