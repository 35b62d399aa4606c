use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
[sos]
nx = 3
np = 3
periods = 20

[evolve]
periods = 3
snapshots_per_period = 2

[rotation]
resolution = 24
iterations = 100

[concurrence]
periods = 3

[ensemble]
n_samples = 200
periods = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shearless"))
}

fn run_in(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    bin()
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Table {
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut header = Vec::new();
        let mut lines = text.lines();
        let columns = loop {
            let line = lines.next().expect("column line");
            if let Some(h) = line.strip_prefix('#') {
                header.push(h.trim().to_string());
            } else {
                break line.split(',').map(str::to_string).collect::<Vec<_>>();
            }
        };
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Self { header, columns, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[k].parse().unwrap()).collect()
    }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        files.insert(path.clone(), fs::read(&path).unwrap());
    }
    files
}

#[test]
fn every_experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in ["sos", "evolve", "floquet", "concurrence", "rotation", "ensemble"] {
        let first = run_in(dir.path(), SMALL, &[experiment]);
        assert!(first.status.success(), "{experiment}: {}", stderr(&first));
        let a = snapshot(&dir.path().join("out"));
        let second = run_in(dir.path(), SMALL, &[experiment]);
        assert!(second.status.success());
        assert_eq!(a, snapshot(&dir.path().join("out")), "{experiment}");
        assert_eq!(first.stdout, second.stdout);
    }
    let files: Vec<String> = snapshot(&dir.path().join("out"))
        .keys()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expected in [
        "sos.csv", "sos.gp", "evolve_density.csv", "evolve_diagnostics.csv", "evolve_density.gp",
        "floquet_lines.csv", "floquet_smoothed.csv", "floquet_peaks.csv", "floquet_spectrum.gp",
        "concurrence.csv", "concurrence.gp", "rotation.csv", "rotation_extremum.csv", "ensemble.csv",
    ] {
        assert!(files.iter().any(|f| f == expected), "missing {expected}");
    }
}

#[test]
fn headers_record_the_whole_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let resolved = run_in(dir.path(), SMALL, &["config"]);
    assert!(resolved.status.success());
    let resolved = String::from_utf8(resolved.stdout).unwrap();
    assert!(run_in(dir.path(), SMALL, &["ensemble"]).status.success());
    assert!(run_in(dir.path(), SMALL, &["concurrence"]).status.success());
    for name in ["ensemble.csv", "concurrence.csv"] {
        let table = Table::read(&dir.path().join("out").join(name));
        for line in resolved.lines().filter(|l| !l.trim().is_empty()) {
            assert!(table.header.iter().any(|h| h == line.trim()), "{name} lacks `{line}`");
        }
        assert!(table.header[0].starts_with("shearless-cli "));
        assert!(table.header.iter().any(|h| h.starts_with("derived: period = ")));
        assert!(table.header.iter().any(|h| h.starts_with("derived: kick_strength = ")));
    }
}

#[test]
fn empty_config_prints_defaults() {
    let out = bin().arg("config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in ["J = -1.0", "B0 = 2.0", "N = 100", "omega = 0.2", "delta_j = 5.0", "j0 = 25"] {
        assert!(text.lines().any(|l| l == line), "missing {line}\n{text}");
    }
    let out = bin().args(["config", "--omega", "0.12"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("omega = 0.12"));
}

#[test]
fn unknown_key_aborts_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "omega = 0.2\n[sos]\nseeds = 4\n", &["sos"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("sos.seeds") && err.contains("line 3"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("omega = -1\n", "omega"),
        ("omega = \n", "line 1"),
        ("N = 7\n", "`N`"),
        ("[floquet]\nsigma = \"wide\"\n", "floquet.sigma"),
    ];
    for (text, needle) in cases {
        let out = run_in(dir.path(), text, &["evolve"]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(stderr(&out).contains(needle), "{text}: {}", stderr(&out));
    }
    let out = bin().args(["sos", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["evolve", "--omega", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("command line"));
}

#[test]
fn free_sos_keeps_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &format!("B0 = 0.0\n{SMALL}"), &["sos"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = Table::read(&dir.path().join("out/sos.csv"));
    let (ids, ps) = (t.column("seed_id"), t.column("p"));
    for seed in 0..9 {
        let p: Vec<f64> = ids.iter().zip(&ps).filter(|(&i, _)| i == seed as f64).map(|(_, &p)| p).collect();
        assert_eq!(p.len(), 21);
        assert!(p.iter().all(|&v| (v - p[0]).abs() < 1e-12), "seed {seed}");
    }
}

#[test]
fn evolve_norm_column_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), SMALL, &["evolve", "--omega", "0.12"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let d = Table::read(&dir.path().join("out/evolve_diagnostics.csv"));
    assert_eq!(d.rows.len(), 7);
    assert!(d.column("norm").iter().all(|n| (n - 1.0).abs() <= 1e-10));
    let p = Table::read(&dir.path().join("out/evolve_density.csv"));
    assert_eq!(p.rows.len(), 7 * 100);
}

#[test]
fn floquet_peaks_at_the_shearless_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), SMALL, &["floquet", "--omega", "0.12", "--sigma", "0.1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines = Table::read(&dir.path().join("out/floquet_lines.csv"));
    let total: f64 = lines.column("weight").iter().sum();
    assert!((total - 1.0).abs() <= 1e-10);
    let peaks = Table::read(&dir.path().join("out/floquet_peaks.csv"));
    let gaps = peaks.column("gap_to_next");
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!((mean - TAU / 5.0).abs() / (TAU / 5.0) < 0.1, "{mean}");
    assert!(peaks.header.iter().any(|h| h.contains("sigma = 0.1")));
}

#[test]
fn concurrence_starts_at_the_packet_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), SMALL, &["concurrence"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = Table::read(&dir.path().join("out/concurrence.csv"));
    assert_eq!(t.columns, ["t", "C_25_26", "C_50_51", "C_75_76", "C_100_1"]);
    assert!((t.column("C_25_26")[0] - 0.22).abs() <= 0.01);
    for name in &t.columns[1..] {
        assert!(t.column(name).iter().all(|c| (0.0..=1.0).contains(c)));
    }
    assert_eq!(t.rows.len(), 3 * 20 + 1);
}

#[test]
fn rotation_scan_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &format!("B0 = 0.0\n{SMALL}"), &["rotation"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = Table::read(&dir.path().join("out/rotation.csv"));
    let period = TAU / 0.2;
    for (p0, nu) in t.column("p0").iter().zip(t.column("nu")) {
        assert!((nu - p0.sin() * period / 100.0).abs() < 1e-8);
    }

    let out = run_in(dir.path(), &format!("B0 = 0.01\n{SMALL}"), &["rotation"]);
    assert!(out.status.success());
    let e = Table::read(&dir.path().join("out/rotation_extremum.csv"));
    assert!((e.column("p_star")[0] - FRAC_PI_2).abs() < 0.05);

    let monotone = format!("B0 = 0.01\n{}", SMALL.replace("[rotation]", "[rotation]\np_hi = 1.0"));
    let out = run_in(dir.path(), &monotone, &["rotation"]);
    assert!(out.status.success());
    let e = Table::read(&dir.path().join("out/rotation_extremum.csv"));
    assert_eq!(e.rows, vec![vec![String::new(), String::new(), String::new()]]);
    assert!(e.header.iter().any(|h| h.contains("monotone")));
}

#[test]
fn plot_command_checks_the_kind() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), SMALL, &["ensemble"]).status.success());
    let csv = dir.path().join("out/ensemble.csv");
    let out = bin().arg("plot").arg("pie").arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown figure kind"));
    let out = bin().arg("plot").arg("series").arg(&csv).output().unwrap();
    assert!(out.status.success());
    let script = fs::read_to_string(dir.path().join("out/ensemble.gp")).unwrap();
    assert!(script.contains("'ensemble.csv' using 1:3 with lines title 'circular_variance'"));
}

#[test]
fn reproduce_paper_writes_every_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), SMALL, &["reproduce-paper", "--periods", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for id in ["fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b"] {
        assert!(stdout.contains(id), "{id}");
        assert!(dir.path().join("out").join(id).is_dir(), "{id}");
    }
    let c = Table::read(&dir.path().join("out/fig1b/sos.csv"));
    assert!(c.header.iter().any(|h| h == "omega = 0.16"));
    let e = Table::read(&dir.path().join("out/fig2a/evolve_diagnostics.csv"));
    assert!(e.header.iter().any(|h| h == "k0 = 1.0"));
}

#[test]
fn list_names_registered_strategies() {
    let out = bin().arg("list").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sos", "ensemble", "yoshida4", "strang", "spin-flip", "one-excitation", "heatmap"] {
        assert!(text.contains(name), "{name}");
    }
}
