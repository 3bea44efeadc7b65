//! Experiment pipelines. Each runner returns its tables in a fixed order so
//! repeated runs with the same config write byte-identical files.

use rayon::prelude::*;
use stadrag_core::dynamics::leakage_estimate;
use stadrag_core::experiment::{
    curve_from_legs, ideal_transfer_population, qst_trajectory, run_transfer_case, ssh_realtime, ssh_virtual_leg,
    QstTrajectory, RunOptions, SshCurve,
};
use stadrag_core::fields::{AngleSchedule, ScheduleKind};
use stadrag_core::quantum::Truncation;
use stadrag_core::ssh::{
    chern_number, edge_state_report, scan_threshold, winding_endpoint, Boundary, LatticeSpectrum, SshParams,
};

use crate::config::{ExperimentConfig, ExperimentKind, SshMode};
use crate::error::AppError;
use crate::output::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
struct TransferCase {
    kind: ScheduleKind,
    truncation: Truncation,
    dissipation: bool,
    drag: bool,
}

impl TransferCase {
    fn label(&self) -> String {
        let schedule = match (self.kind, self.drag) {
            (ScheduleKind::Linear, _) => "sinusoidal",
            (_, false) => "hanning",
            (_, true) => "hanning_drag",
        };
        let levels = if self.truncation == Truncation::TwoLevel { "2level" } else { "3level" };
        let dynamics = if self.dissipation { "lindblad" } else { "unitary" };
        format!("{schedule}_{levels}_{dynamics}")
    }
}

fn transfer_cases() -> Vec<TransferCase> {
    let mut cases = Vec::new();
    for kind in [ScheduleKind::Linear, ScheduleKind::Hanning] {
        for truncation in [Truncation::TwoLevel, Truncation::ThreeLevel] {
            for dissipation in [false, true] {
                cases.push(TransferCase { kind, truncation, dissipation, drag: false });
            }
        }
    }
    for dissipation in [false, true] {
        cases.push(TransferCase { kind: ScheduleKind::Hanning, truncation: Truncation::ThreeLevel, dissipation, drag: true });
    }
    cases
}

/// Population curves for every schedule × truncation × dynamics case, the
/// Hanning + DRAG pair, a final-population summary and the leakage estimate.
pub fn run_transfer(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    let params = cfg.physics();
    let base = cfg.run_options(ExperimentKind::Transfer);
    let cases = transfer_cases();
    let records = cases
        .par_iter()
        .map(|c| {
            let opts = RunOptions { dissipation: c.dissipation, drag: c.drag, truncation: c.truncation, ..base };
            run_transfer_case(c.kind, &params, &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tables = Vec::new();
    let mut summary = Table::new("transfer_summary.csv", &["case", "p0", "p1", "p2"]);
    for (case, rec) in cases.iter().zip(&records) {
        let ideal = ideal_transfer_population(case.kind, base.duration, &rec.times)?;
        let mut t = Table::new(format!("transfer_{}.csv", case.label()), &["t", "p0", "p1", "p2", "p1_ideal"]);
        for ((time, p), ideal) in rec.times.iter().zip(rec.populations()).zip(ideal) {
            t.push_numbers(&[*time, p[0], p[1], p[2], ideal]);
        }
        tables.push(t);
        let p = rec.final_populations();
        summary.push(vec![case.label(), num(p[0]), num(p[1]), num(p[2])]);
    }
    tables.push(summary);

    let mut leakage = Table::new("transfer_leakage.csv", &["schedule", "t", "two_level", "perturbative"]);
    let n = (base.duration / base.record_interval).round() as usize + 1;
    for (name, kind) in [("sinusoidal", ScheduleKind::Linear), ("hanning", ScheduleKind::Hanning)] {
        let est = leakage_estimate(&AngleSchedule::new(kind, base.duration, n)?, params.omega, params.delta2);
        for k in 0..est.times.len() {
            leakage.push(vec![name.into(), num(est.times[k]), num(est.two_level[k]), num(est.perturbative[k])]);
        }
        leakage = leakage.note(&format!("{name}_endpoint_estimate"), num(est.endpoint));
        if est.weak_anharmonicity {
            leakage = leakage.note("warning", "anharmonicity below 3 drive amplitudes; estimate unreliable");
        }
    }
    tables.push(leakage);
    Ok(tables)
}

fn qst_table(name: &str, traj: &QstTrajectory) -> Table {
    let mut t = Table::new(name, &["t", "theta", "x", "y", "z", "x_ideal", "y_ideal", "z_ideal"])
        .note("frame", traj.frame.as_str())
        .note("max_abs_y", num(traj.max_abs_y()));
    for p in &traj.points {
        t.push_numbers(&[p.t, p.theta, p.bloch[0], p.bloch[1], p.bloch[2], p.ideal[0], p.ideal[1], p.ideal[2]]);
    }
    t
}

/// Reconstructed Bloch trajectories without DRAG (rotating frame) and with
/// DRAG (D-frame), each next to the adiabatic reference.
pub fn run_qst_trajectory(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    let params = cfg.physics();
    let base = cfg.run_options(ExperimentKind::QstTrajectory);
    let kind = cfg.schedule.kind();
    let variants = [(false, "qst_rframe.csv"), (true, "qst_dframe.csv")];
    variants
        .par_iter()
        .enumerate()
        .map(|(cell, &(drag, name))| {
            let opts = RunOptions { drag, ..base };
            let traj = qst_trajectory(kind, &params, &opts, &mut cfg.readout(cell as u64)?)?;
            Ok(qst_table(name, &traj))
        })
        .collect()
}

/// Simulated θq curves for `alphas`, one parallel cell per α (realtime) or
/// per (α, leg) pair (virtual).
pub fn ssh_curves(cfg: &ExperimentConfig, alphas: &[f64], mode: SshMode) -> Result<Vec<SshCurve>, AppError> {
    let params = cfg.physics();
    let opts = cfg.run_options(ExperimentKind::SshRealtime);
    match mode {
        SshMode::Realtime => alphas
            .par_iter()
            .enumerate()
            .map(|(k, &alpha)| Ok(ssh_realtime(alpha, &params, &opts, &mut cfg.readout(k as u64)?)?))
            .collect(),
        SshMode::Virtual => {
            let total = cfg.momentum_points;
            let legs = u64::from(total) + 1;
            let cells: Vec<(usize, u32)> = (0..alphas.len()).flat_map(|k| (0..=total).map(move |m| (k, m))).collect();
            let points = cells
                .par_iter()
                .map(|&(k, m)| {
                    let mut readout = cfg.readout(k as u64 * legs + u64::from(m))?;
                    Ok(ssh_virtual_leg(alphas[k], m, total, &params, &opts, &mut readout)?)
                })
                .collect::<Result<Vec<_>, AppError>>()?;
            alphas
                .iter()
                .zip(points.chunks(legs as usize))
                .map(|(&alpha, legs)| Ok(curve_from_legs(alpha, legs.to_vec())?))
                .collect()
        }
    }
}

fn mode_name(mode: SshMode) -> &'static str {
    match mode {
        SshMode::Realtime => "realtime",
        SshMode::Virtual => "virtual",
    }
}

fn invariants_table(name: String, curves: &[SshCurve]) -> Table {
    let mut t = Table::new(
        name,
        &["alpha", "nu_endpoint", "nu_integral", "chern", "zak_phase", "nu_exact", "chern_exact", "at_transition"],
    );
    for c in curves {
        let s = &c.simulated;
        t.push(vec![
            num(c.alpha),
            num(s.nu_endpoint),
            num(s.nu_integral),
            num(s.chern),
            num(s.zak_phase),
            num(winding_endpoint(&c.exact)),
            num(chern_number(&c.exact)),
            c.at_transition.to_string(),
        ]);
    }
    t
}

/// θq curves and invariants for the configured α list.
pub fn run_ssh(cfg: &ExperimentConfig, mode: SshMode) -> Result<Vec<Table>, AppError> {
    let curves = ssh_curves(cfg, &cfg.alphas, mode)?;
    let name = mode_name(mode);
    let mut t = Table::new(format!("ssh_{name}_curves.csv"), &["alpha", "theta", "theta_q", "theta_q_exact"]);
    for c in &curves {
        for ((theta, q), exact) in c.simulated.samples.iter().zip(&c.exact) {
            t.push_numbers(&[c.alpha, *theta, *q, *exact]);
        }
    }
    if curves.iter().any(|c| c.at_transition) {
        t = t.note("warning", "alpha = 1 is the gap-closing point; sweep stopped at pi - 1e-6");
    }
    Ok(vec![t, invariants_table(format!("ssh_{name}_invariants.csv"), &curves)])
}

/// Winding and Chern estimates across the topological transition.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    let curves = ssh_curves(cfg, &cfg.sweep_alphas(), cfg.ssh_mode)?;
    Ok(vec![invariants_table(format!("sweep_{}_invariants.csv", mode_name(cfg.ssh_mode)), &curves)])
}

/// Open and periodic spectra across the α range, the mid-gap count, and the
/// edge-state report at `edge_alpha`.
pub fn run_lattice(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    let omega2 = cfg.physics().omega2;
    let n = cfg.lattice_cells;
    let alphas = cfg.lattice_alphas();
    let spectra = alphas
        .par_iter()
        .map(|&alpha| {
            let p = SshParams::from_ratio(alpha, omega2)?;
            Ok((
                p,
                LatticeSpectrum::compute(n, &p, Boundary::Open)?,
                LatticeSpectrum::compute(n, &p, Boundary::Periodic)?,
            ))
        })
        .collect::<Result<Vec<_>, AppError>>()?;

    let columns = ["alpha", "index", "energy", "edge_weight_left", "edge_weight_right"];
    let mut open = Table::new("lattice_open_spectrum.csv", &columns);
    let mut periodic = Table::new("lattice_periodic_spectrum.csv", &columns);
    let mut summary = Table::new(
        "lattice_scan_summary.csv",
        &["alpha", "midgap_count", "midgap_threshold", "chiral_asymmetry", "periodic_bulk_residual"],
    );
    let window = n.div_ceil(4);
    for (p, o, per) in &spectra {
        for (table, spec) in [(&mut open, o), (&mut periodic, per)] {
            for (k, e) in spec.eigenvalues.iter().enumerate() {
                let (l, r) = stadrag_core::ssh::end_weights(&spec.eigenvectors.column(k).into_owned(), window);
                table.push(vec![num(p.alpha()), k.to_string(), num(*e), num(l), num(r)]);
            }
        }
        let threshold = scan_threshold(p);
        summary.push(vec![
            num(p.alpha()),
            o.count_below(threshold).to_string(),
            num(threshold),
            num(o.chiral_asymmetry()),
            num(per.bulk_residual()),
        ]);
    }

    let p = SshParams::from_ratio(cfg.edge_alpha, omega2)?;
    let spec = LatticeSpectrum::compute(n, &p, Boundary::Open)?;
    let report = edge_state_report(&spec, cfg.edge_threshold * omega2)?;
    let mut edges = Table::new("lattice_edge_report.csv", &["index", "energy", "edge_weight_left", "edge_weight_right"])
        .note("alpha", num(cfg.edge_alpha))
        .note("threshold", num(report.threshold))
        .note("window_cells", report.window_cells);
    if let (Some(e), Some(a), Some(b)) = (report.midgap_energy, report.psi_a_left_a_weight, report.psi_b_right_b_weight) {
        edges = edges.note("midgap_energy", num(e)).note("psi_a_left_a_weight", num(a)).note("psi_b_right_b_weight", num(b));
    }
    for s in &report.states {
        edges.push(vec![s.index.to_string(), num(s.energy), num(s.left_weight), num(s.right_weight)]);
    }
    let mut tables = vec![open, periodic, summary, edges];
    if let (Some(a), Some(b)) = (&report.psi_a, &report.psi_b) {
        let mut modes = Table::new("lattice_edge_modes.csv", &["cell", "sublattice", "psi_a", "psi_b"]);
        for i in 0..a.len() {
            let sub = if i % 2 == 0 { "A" } else { "B" };
            modes.push(vec![(i / 2).to_string(), sub.into(), num(a[i]), num(b[i])]);
        }
        tables.push(modes);
    }
    Ok(tables)
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>, AppError> {
    match cfg.experiment {
        ExperimentKind::Transfer => run_transfer(cfg),
        ExperimentKind::QstTrajectory => run_qst_trajectory(cfg),
        ExperimentKind::SshRealtime => run_ssh(cfg, SshMode::Realtime),
        ExperimentKind::SshVirtual => run_ssh(cfg, SshMode::Virtual),
        ExperimentKind::SshSweep => run_sweep(cfg),
        ExperimentKind::Lattice => run_lattice(cfg),
    }
}
