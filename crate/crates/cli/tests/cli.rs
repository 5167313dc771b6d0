use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pathsum(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathsum"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .env_remove("PATHSUM_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig1", "fig2", "fig5"] {
        let mut v = load(&format!("{name}.json"));
        v["solve"]["n_points_per_interval"] = json!(20);
        v["outputs"] = json!([]);
        let p = write(dir.path(), "c.json", &v);
        let o = pathsum(dir.path(), &["simulate", arg(&p)]);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    for name in ["table1", "table2", "table3", "fig6"] {
        let mut v = load(&format!("{name}.json"));
        v["targets"] = json!([]);
        v["n_values"] = json!([20]);
        v["methods"] = json!(["ps_simpson"]);
        let p = write(dir.path(), "s.json", &v);
        let o = pathsum(dir.path(), &["benchmark", arg(&p)]);
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn fig5_simulation_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathsum(dir.path(), &["simulate", arg(&configs().join("fig5.json"))]);
    assert!(o.status.success());
    let line = stdout(&o);
    let e: f64 = line.split("E_M=").nth(1).unwrap().trim().parse().unwrap();
    assert!(e <= 1e-8, "{line}");
    assert!(line.starts_with("ps_simpson N=400 drift="), "{line}");
    let text = std::fs::read_to_string(dir.path().join("fig5_density.csv")).unwrap();
    assert!(text.contains("# initial: rho0"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("node,t_s,rho11_re,rho11_im,rho12_re")));
}

#[test]
fn fig1_outputs_carry_u22_and_bloch_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathsum(dir.path(), &["simulate", arg(&configs().join("fig1.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig1_propagator.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.split(',').any(|c| c == "u22_re"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2001);
    let bloch = std::fs::read_to_string(dir.path().join("fig3_bloch.csv")).unwrap();
    let gz: f64 = bloch
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!((gz + 1.0).abs() <= 1e-2, "{gz}");
}

#[test]
fn missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathsum(dir.path(), &["simulate", "/no/such/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_errors_exit_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig5.json");
    v["solve"]["rule"] = json!("gauss");
    let p = write(dir.path(), "bad.json", &v);
    let o = pathsum(dir.path(), &["simulate", arg(&p)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solve.rule"));

    let mut v = load("fig5.json");
    v["waveform"]["n"] = json!(3);
    let p = write(dir.path(), "odd.json", &v);
    assert_eq!(
        pathsum(dir.path(), &["simulate", arg(&p)]).status.code(),
        Some(2)
    );
}

#[test]
fn empty_method_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("table1.json");
    v["methods"] = json!([]);
    let p = write(dir.path(), "s.json", &v);
    assert_eq!(
        pathsum(dir.path(), &["benchmark", arg(&p)]).status.code(),
        Some(2)
    );
}

#[test]
fn incompatible_outputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig5.json");
    v["outputs"] = json!([{"kind": "bloch", "path": "b.csv"}]);
    let p = write(dir.path(), "c.json", &v);
    assert_eq!(
        pathsum(dir.path(), &["simulate", arg(&p)]).status.code(),
        Some(2)
    );
}

#[test]
fn solver_failures_exit_3() {
    // a drive this strong on so few nodes makes the discretized resolvent singular or ill-conditioned
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig5.json");
    v["waveform"]["omega1_max"] = json!(1e9);
    v["solve"]["n_points_per_interval"] = json!(3);
    v["outputs"] = json!([]);
    let p = write(dir.path(), "c.json", &v);
    let o = pathsum(dir.path(), &["simulate", arg(&p)]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

fn small_neumann(dir: &Path) -> PathBuf {
    let mut v = load("fig2.json");
    v["solve"]["n_points_per_interval"] = json!(200);
    write(dir, "n.json", &v)
}

#[test]
fn neumann_rejects_non_positive_orders() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_neumann(dir.path());
    assert_eq!(
        pathsum(dir.path(), &["neumann", arg(&p), "--orders", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pathsum(dir.path(), &["neumann", arg(&p), "--orders=1,-2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn neumann_without_orders_writes_exact_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_neumann(dir.path());
    assert!(pathsum(dir.path(), &["neumann", arg(&p)]).status.success());
    let text = std::fs::read_to_string(dir.path().join("neumann_u22.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "node,t_s,u22_exact_re,u22_exact_im");
}

#[test]
fn neumann_series_has_one_pair_of_columns_per_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = small_neumann(dir.path());
    let o = pathsum(dir.path(), &["neumann", arg(&p), "--orders", "1,30"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("neumann_u22.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "node,t_s,u22_exact_re,u22_exact_im,u22_m1_re,u22_m1_im,u22_m30_re,u22_m30_im"
    );
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn benchmark_writes_table_and_sweep_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("table1.json");
    v["targets"] = json!([1e-2]);
    v["n_values"] = json!([100, 200]);
    let p = write(dir.path(), "s.json", &v);
    let o = pathsum(dir.path(), &["--threads", "1", "benchmark", arg(&p)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(dir.path().join("table1.md")).unwrap();
    assert!(md.starts_with("<!-- version: pathsum "));
    let table: Vec<_> = md.lines().filter(|l| !l.starts_with("<!--")).collect();
    assert_eq!(table[0], "| Method M | ℰ_M | N | Time (s) |");
    assert_eq!(table.len(), 2 + 3);
    let sweep = std::fs::read_to_string(dir.path().join("table1_sweep.csv")).unwrap();
    assert!(sweep.contains("# config_hash: "));
    let body: Vec<_> = sweep.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "time_s,series,value,n_points");
    assert_eq!(body.len(), 1 + 6);
    assert!(dir.path().join("table1.csv").exists());
}

#[test]
fn quadrature_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig5.json");
    v["outputs"] = json!([]);
    let p = write(dir.path(), "c.json", &v);
    let o = pathsum(dir.path(), &["--quadrature", "trap", "simulate", arg(&p)]);
    assert!(stdout(&o).starts_with("ps_trap "), "{}", stdout(&o));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_pathsum"))
        .args(["simulate", arg(&configs().join("fig5.json"))])
        .env("PATHSUM_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("fig5_error.csv").exists());
}

#[test]
fn kernel_dump_writes_lower_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig2.json");
    v["solve"]["n_points_per_interval"] = json!(50);
    let p = write(dir.path(), "k.json", &v);
    let o = pathsum(dir.path(), &["kernel-dump", arg(&p), "--stride", "7"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    let rows: Vec<_> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    // nodes 0, 7, ..., 49: eight of them, 36 pairs with j <= i
    assert_eq!(rows.len(), 36);
    let diag: Vec<_> = rows
        .iter()
        .filter(|r| r.split(',').next() == r.split(',').nth(1))
        .collect();
    assert!(diag
        .iter()
        .all(|r| r.split(',').nth(4) == Some("0e0") && r.split(',').nth(5) == Some("0e0")));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig5.json");
    for d in [&a, &b] {
        assert!(pathsum(
            d.path(),
            &["--threads", "1", "--seed", "7", "simulate", arg(&cfg)]
        )
        .status
        .success());
    }
    for f in ["fig5_density.csv", "fig5_error.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let text = std::fs::read_to_string(a.path().join("fig5_error.csv")).unwrap();
    assert!(text.contains("# seed: 7"));
    assert!(text.contains("# amplitude: omega1_max -> omega1_max="));
}

#[test]
fn amplitude_source_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = load("fig5.json");
    v["waveform"].as_object_mut().unwrap().remove("omega1_max");
    v["waveform"]["alpha"] = json!(1.0);
    v["outputs"] = json!([{"kind": "error", "path": "e.csv"}]);
    let p = write(dir.path(), "c.json", &v);
    assert!(pathsum(dir.path(), &["simulate", arg(&p)]).status.success());
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(
        text.contains("# amplitude: alpha=1e0 -> omega1_max="),
        "{text}"
    );
}
