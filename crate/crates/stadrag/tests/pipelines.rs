use std::fs;
use std::path::Path;
use std::process::Command;

use stadrag::config::{ConfigFormat, ExperimentConfig, Levels, SshMode, TomographyChoice};
use stadrag::output::write_tables;
use stadrag::runner::{run_lattice, run_qst_trajectory, run_ssh, run_transfer};
use stadrag::Table;

fn table<'a>(tables: &'a [Table], name: &str) -> &'a Table {
    tables.iter().find(|t| t.file_name == name).unwrap_or_else(|| panic!("missing {name}"))
}

fn floats(t: &Table, column: &str) -> Vec<f64> {
    t.column(column).unwrap().iter().map(|s| s.parse().unwrap()).collect()
}

fn summary_row(t: &Table, case: &str) -> [f64; 3] {
    let row = t.rows.iter().find(|r| r[0] == case).unwrap();
    [row[1].parse().unwrap(), row[2].parse().unwrap(), row[3].parse().unwrap()]
}

fn note(t: &Table, key: &str) -> f64 {
    t.notes.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

#[test]
fn transfer_examples() {
    let tables = run_transfer(&ExperimentConfig::default()).unwrap();
    assert_eq!(tables.len(), 12);
    let summary = table(&tables, "transfer_summary.csv");
    let p = summary_row(summary, "hanning_3level_lindblad");
    assert!((0.90..=0.95).contains(&p[1]), "{p:?}");
    assert!(summary_row(summary, "hanning_2level_unitary")[1] >= 1.0 - 1e-6);
    let leak = summary_row(summary, "sinusoidal_3level_unitary")[2];
    let estimate = note(table(&tables, "transfer_leakage.csv"), "sinusoidal_endpoint_estimate");
    assert!(leak / estimate <= 2.0 && estimate / leak <= 2.0, "{leak} vs {estimate}");
    let curve = table(&tables, "transfer_hanning_2level_unitary.csv");
    assert_eq!(curve.rows.len(), 31);
    for (a, b) in floats(curve, "p1").iter().zip(floats(curve, "p1_ideal")) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn qst_examples() {
    let tables = run_qst_trajectory(&ExperimentConfig::default()).unwrap();
    let y_on = note(table(&tables, "qst_dframe.csv"), "max_abs_y");
    let y_off = note(table(&tables, "qst_rframe.csv"), "max_abs_y");
    assert!(y_on <= 0.08 && y_off > y_on, "{y_on} {y_off}");

    let ideal = ExperimentConfig { dissipation: false, levels: Levels::Two, ..Default::default() };
    let tables = run_qst_trajectory(&ideal).unwrap();
    let t = table(&tables, "qst_dframe.csv");
    for axis in ["x", "y", "z"] {
        let ideal_col = format!("{axis}_ideal");
        for (a, b) in floats(t, axis).iter().zip(floats(t, &ideal_col)) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    let bad = ExperimentConfig { schedule: stadrag::config::ScheduleChoice::Sinusoidal, ..Default::default() };
    assert_eq!(run_qst_trajectory(&bad).unwrap_err().exit_code(), 2);
}

#[test]
fn ssh_examples() {
    let cfg = ExperimentConfig { alphas: vec![0.0, 0.6, 1.0, 1.6], ..Default::default() };
    let rt = run_ssh(&cfg, SshMode::Realtime).unwrap();
    let inv = table(&rt, "ssh_realtime_invariants.csv");
    let nu = floats(inv, "nu_endpoint");
    assert!((nu[0] - 1.0).abs() < 0.05 && nu[3].abs() < 0.05, "{nu:?}");
    assert_eq!(inv.column("at_transition").unwrap(), ["false", "false", "true", "false"]);
    assert_eq!(table(&rt, "ssh_realtime_curves.csv").rows.len(), 4 * 41);

    let cfg = ExperimentConfig { alphas: vec![0.6], ..Default::default() };
    let vt = run_ssh(&cfg, SshMode::Virtual).unwrap();
    assert_eq!(table(&vt, "ssh_virtual_curves.csv").rows.len(), 42);
    let v = floats(table(&vt, "ssh_virtual_invariants.csv"), "nu_endpoint")[0];
    assert!((v - nu[1]).abs() <= 0.05);
}

#[test]
fn lattice_examples() {
    let tables = run_lattice(&ExperimentConfig::default()).unwrap();
    let summary = table(&tables, "lattice_scan_summary.csv");
    let alphas = floats(summary, "alpha");
    let counts: Vec<usize> = summary.column("midgap_count").unwrap().iter().map(|s| s.parse().unwrap()).collect();
    for (a, c) in alphas.iter().zip(&counts) {
        if (a - 1.0).abs() >= 0.1 {
            assert_eq!(*c, if *a < 1.0 { 2 } else { 0 }, "alpha {a}");
        }
    }
    assert!(floats(summary, "periodic_bulk_residual").iter().all(|r| *r <= 1e-9));
    let edges = table(&tables, "lattice_edge_report.csv");
    assert_eq!(edges.rows.len(), 2);
    assert!(note(edges, "psi_a_left_a_weight") >= 0.99);

    let dimer = ExperimentConfig { lattice_cells: 2, edge_alpha: 0.0, ..Default::default() };
    let tables = run_lattice(&dimer).unwrap();
    let e = floats(table(&tables, "lattice_edge_report.csv"), "energy");
    assert_eq!(e.len(), 2);
    assert!(e.iter().all(|x| x.abs() < 1e-15));
}

fn write_and_read(cfg: &ExperimentConfig, tables: &[Table], dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = write_tables(dir, tables, cfg)
        .unwrap()
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn identical_config_gives_identical_files() {
    let cfg = ExperimentConfig {
        alphas: vec![0.3, 1.4],
        tomography: TomographyChoice::Sampled,
        seed: 1234,
        momentum_points: 8,
        ..Default::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for mode in [SshMode::Realtime, SshMode::Virtual] {
        let first = write_and_read(&cfg, &run_ssh(&cfg, mode).unwrap(), a.path());
        let second = write_and_read(&cfg, &run_ssh(&cfg, mode).unwrap(), b.path());
        assert_eq!(first, second);
    }
    let other = ExperimentConfig { seed: 4321, ..cfg.clone() };
    assert_ne!(run_ssh(&cfg, SshMode::Realtime).unwrap(), run_ssh(&other, SshMode::Realtime).unwrap());
}

#[test]
fn dumped_defaults_reload_to_identical_runs() {
    let cfg = ExperimentConfig::default();
    for (text, fmt) in [(cfg.to_toml(), ConfigFormat::Toml), (cfg.to_json(), ConfigFormat::Json)] {
        let reloaded = ExperimentConfig::parse(&text, fmt).unwrap();
        assert_eq!(reloaded, cfg);
        assert_eq!(run_lattice(&reloaded).unwrap(), run_lattice(&cfg).unwrap());
    }
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stadrag"));
    c.env_remove(stadrag::config::OUTPUT_DIR_ENV);
    c
}

#[test]
fn binary_exit_codes_and_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 3\nt2_star_ns = 1000.0\n").unwrap();
    let out = bin().arg("--config").arg(&bad).arg("lattice").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let singular = ["--f0", "0.5", "--f1", "0.5", "--f2", "0.5", "--f0p", "0.5", "--f1p", "0.5", "--f2p", "0.5"];
    let out = bin().arg("qst").args(singular).current_dir(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let target = dir.path().join("from_env");
    let out = bin()
        .args(["lattice", "--lattice_alpha_points", "3"])
        .env(stadrag::config::OUTPUT_DIR_ENV, &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(target.join("lattice_scan_summary.csv")).unwrap();
    assert!(text.starts_with(&format!("# stadrag {} params=", stadrag::output::VERSION)));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let flag_dir = dir.path().join("from_flag");
    let out = bin()
        .args(["lattice", "--lattice_alpha_points", "2", "--output_dir"])
        .arg(&flag_dir)
        .env(stadrag::config::OUTPUT_DIR_ENV, &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.join("lattice_open_spectrum.csv").exists());

    let out = bin().args(["dump-config", "--format", "json"]).output().unwrap();
    let dumped = ExperimentConfig::parse(&String::from_utf8(out.stdout).unwrap(), ConfigFormat::Json).unwrap();
    assert_eq!(dumped, ExperimentConfig::default());
}
