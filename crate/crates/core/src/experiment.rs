//! End-to-end simulation pipelines built from the lower modules.
//!
//! Everything here is deterministic and single-threaded. The std companion
//! crate fans the independent cells out over a thread pool and writes files.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dynamics::{evolve, evolve_unitary, protocol_hamiltonian, spin_up_state, DissipationSpec, TimeGrid, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fields::{synthesize_drive, AngleProfile, RotatingField, ScheduleKind, StaProtocol};
use crate::quantum::{lab_hamiltonian, rframe_transform, AnharmonicSpec, DensityMatrix3, Frame, Truncation};
use crate::ssh::{exact_curve, TopologyResult, TRANSITION_CUTOFF};
use crate::tomography::{approximate_density, experimental_thetaq, qst_record, Readout};
use crate::units::{defaults, ghz, mhz};

/// Device and drive parameters, all in rad/ns or ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Ω, transfer drive amplitude.
    pub omega: f64,
    /// Ω₂, the SSH reference amplitude. Ω₁ = αΩ₂.
    pub omega2: f64,
    pub delta2: f64,
    pub omega10: f64,
    pub t1: f64,
    pub t2_star: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            omega: mhz(defaults::DRIVE_MHZ),
            omega2: mhz(defaults::DRIVE_MHZ),
            delta2: mhz(defaults::ANHARMONICITY_MHZ),
            omega10: ghz(defaults::QUBIT_GHZ),
            t1: defaults::T1_NS,
            t2_star: defaults::T2_STAR_NS,
        }
    }
}

impl PhysicsParams {
    pub fn anharmonic(&self) -> Result<AnharmonicSpec> {
        AnharmonicSpec::new(self.omega10, self.delta2)
    }

    pub fn dissipation(&self) -> Result<DissipationSpec> {
        DissipationSpec::new(self.t1, self.t2_star)
    }
}

/// Integration and recording settings shared by all pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub duration: f64,
    pub dt: f64,
    pub record_interval: f64,
    pub dissipation: bool,
    pub drag: bool,
    pub truncation: Truncation,
}

impl RunOptions {
    pub fn transfer() -> Self {
        Self {
            duration: defaults::TRANSFER_DURATION_NS,
            dt: defaults::TIME_STEP_NS,
            record_interval: defaults::RECORD_INTERVAL_NS,
            dissipation: true,
            drag: false,
            truncation: Truncation::ThreeLevel,
        }
    }

    pub fn ssh() -> Self {
        Self { duration: defaults::SSH_DURATION_NS, drag: true, ..Self::transfer() }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.duration, self.dt, self.record_interval)
    }

    /// DRAG is a three-level correction; the two-level model ignores the flag.
    pub fn effective_drag(&self) -> bool {
        self.drag && self.truncation == Truncation::ThreeLevel
    }
}

fn build_protocol(profile: AngleProfile, geometry: RotatingField, params: &PhysicsParams, opts: &RunOptions) -> Result<StaProtocol> {
    let p = StaProtocol::new(profile, geometry)?;
    if opts.effective_drag() {
        p.with_drag(params.delta2)
    } else {
        Ok(p)
    }
}

fn run(protocol: &StaProtocol, params: &PhysicsParams, opts: &RunOptions) -> Result<TrajectoryRecord> {
    let spec = params.anharmonic()?;
    let diss = if opts.dissipation { Some(params.dissipation()?) } else { None };
    let h = protocol_hamiltonian(protocol, &spec, opts.truncation);
    evolve(h, &DensityMatrix3::ground(), &opts.grid()?, diss.as_ref())
}

/// Population transfer |0⟩ → |1⟩ under the transfer geometry B₀ = Ω(sinθ, 0, cosθ).
pub fn transfer_protocol(kind: ScheduleKind, params: &PhysicsParams, opts: &RunOptions) -> Result<StaProtocol> {
    let profile = AngleProfile::new(kind, opts.duration)?;
    build_protocol(profile, RotatingField::transfer(params.omega)?, params, opts)
}

pub fn run_transfer_case(kind: ScheduleKind, params: &PhysicsParams, opts: &RunOptions) -> Result<TrajectoryRecord> {
    run(&transfer_protocol(kind, params, opts)?, params, opts)
}

/// Ideal adiabatic populations P₁(t) = ½[1 − cosθ(t)] on the record times.
pub fn ideal_transfer_population(kind: ScheduleKind, duration: f64, times: &[f64]) -> Result<Vec<f64>> {
    let profile = AngleProfile::new(kind, duration)?;
    Ok(times.iter().map(|&t| 0.5 * (1.0 - profile.at(t).theta.cos())).collect())
}

/// One Bloch-sphere sample of a reconstructed trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub theta: f64,
    /// Reconstructed (x, y, z), in the D-frame when DRAG is active.
    pub bloch: [f64; 3],
    /// Adiabatic reference (sinθ, 0, cosθ).
    pub ideal: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct QstTrajectory {
    pub frame: Frame,
    pub points: Vec<TrajectoryPoint>,
}

impl QstTrajectory {
    pub fn max_abs_y(&self) -> f64 {
        self.points.iter().map(|p| p.bloch[1].abs()).fold(0.0, f64::max)
    }

    pub fn max_deviation_from_ideal(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| (0..3).map(move |k| (p.bloch[k] - p.ideal[k]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Tomography of one rotating-frame state. With DRAG on, the measured
/// populations and ρ01 are completed into ρ and moved to the D-frame.
fn reconstruct(state: &DensityMatrix3, protocol: &StaProtocol, t: f64, readout: &mut Readout) -> Result<[f64; 3]> {
    let record = qst_record(state, readout)?;
    if !protocol.has_drag() {
        return Ok(record.bloch.as_array());
    }
    let rho = approximate_density(&record);
    Ok(rho.conjugate_by(&protocol.dframe(t), Frame::Dframe).qubit_bloch())
}

/// Transfer-pulse trajectory reconstructed by tomography at every record time.
pub fn qst_trajectory(kind: ScheduleKind, params: &PhysicsParams, opts: &RunOptions, readout: &mut Readout) -> Result<QstTrajectory> {
    let protocol = transfer_protocol(kind, params, opts)?;
    let record = run(&protocol, params, opts)?;
    let frame = if protocol.has_drag() { Frame::Dframe } else { Frame::Rotating };
    let points = record
        .times
        .iter()
        .zip(&record.states)
        .map(|(&t, s)| {
            let theta = protocol.profile().at(t).theta;
            Ok(TrajectoryPoint {
                t,
                theta,
                bloch: reconstruct(s, &protocol, t, readout)?,
                ideal: spin_up_state(theta).qubit_bloch(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QstTrajectory { frame, points })
}

/// Simulated and exact θq curves for one hopping ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SshCurve {
    pub alpha: f64,
    /// Simulated (θ, θq) with invariants estimated from it.
    pub simulated: TopologyResult,
    /// Exact θq on the same θ grid.
    pub exact: Vec<f64>,
    /// The ratio sits at the gap-closing point; the estimates are not expected
    /// to be integers.
    pub at_transition: bool,
}

/// SSH geometry B₀ = (Ω₂ sinθ, 0, Ω₁ + Ω₂ cosθ) with Ω₁ = αΩ₂. At the
/// transition ratio the sweep stops at π − 1e−6, where the gap is still open.
pub fn ssh_protocol(kind: ScheduleKind, alpha: f64, params: &PhysicsParams, opts: &RunOptions) -> Result<StaProtocol> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("hopping ratio must be non-negative"));
    }
    let mut profile = AngleProfile::new(kind, opts.duration)?;
    let limit = PI - TRANSITION_CUTOFF;
    if (alpha - 1.0).abs() < TRANSITION_CUTOFF && profile.final_angle() > limit {
        profile = profile.with_final_angle(limit)?;
    }
    let geometry = RotatingField::ssh(alpha * params.omega2, params.omega2)?;
    build_protocol(profile, geometry, params, opts)
}

fn assemble_curve(alpha: f64, samples: Vec<(f64, f64)>) -> Result<SshCurve> {
    let grid: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let exact = exact_curve(alpha, &grid)?.into_iter().map(|s| s.1).collect();
    Ok(SshCurve {
        alpha,
        simulated: TopologyResult::from_curve(samples)?,
        exact,
        at_transition: (alpha - 1.0).abs() < TRANSITION_CUTOFF,
    })
}

/// Realtime mode: one Hanning sweep θ: 0 → π, interrupted at every record time.
pub fn ssh_realtime(alpha: f64, params: &PhysicsParams, opts: &RunOptions, readout: &mut Readout) -> Result<SshCurve> {
    let protocol = ssh_protocol(ScheduleKind::Hanning, alpha, params, opts)?;
    let record = run(&protocol, params, opts)?;
    let samples = record
        .times
        .iter()
        .zip(&record.states)
        .map(|(&t, s)| {
            let b = reconstruct(s, &protocol, t, readout)?;
            Ok((protocol.profile().at(t).theta, experimental_thetaq(b[0], b[2])?))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_curve(alpha, samples)
}

/// One virtual leg: a full-length Hanning sweep that ends at θ = mπ/M.
pub fn ssh_virtual_leg(
    alpha: f64,
    m: u32,
    total: u32,
    params: &PhysicsParams,
    opts: &RunOptions,
    readout: &mut Readout,
) -> Result<(f64, f64)> {
    if m > total || total == 0 {
        return Err(Error::InvalidArgument("virtual leg index must satisfy 0 <= m <= M, M > 0"));
    }
    let kind = ScheduleKind::VirtualHanning { m, total };
    let protocol = ssh_protocol(kind, alpha, params, opts)?;
    let leg_opts = RunOptions { record_interval: opts.duration, ..*opts };
    let record = run(&protocol, params, &leg_opts)?;
    let b = reconstruct(record.final_state(), &protocol, opts.duration, readout)?;
    Ok((protocol.profile().final_angle(), experimental_thetaq(b[0], b[2])?))
}

/// Virtual mode: M + 1 independent legs m = 0..=M. `readout_for(m)` supplies
/// each leg's readout so callers control per-leg seeding.
pub fn ssh_virtual<F: FnMut(u32) -> Result<Readout>>(
    alpha: f64,
    total: u32,
    params: &PhysicsParams,
    opts: &RunOptions,
    mut readout_for: F,
) -> Result<SshCurve> {
    let samples = (0..=total)
        .map(|m| ssh_virtual_leg(alpha, m, total, params, opts, &mut readout_for(m)?))
        .collect::<Result<Vec<_>>>()?;
    assemble_curve(alpha, samples)
}

pub fn curve_from_legs(alpha: f64, legs: Vec<(f64, f64)>) -> Result<SshCurve> {
    assemble_curve(alpha, legs)
}

/// Lab-frame versus rotating-frame populations for the same protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RwaComparison {
    pub times: Vec<f64>,
    pub rotating: Vec<[f64; 3]>,
    pub lab: Vec<[f64; 3]>,
}

impl RwaComparison {
    pub fn max_deviation(&self) -> f64 {
        self.rotating
            .iter()
            .zip(&self.lab)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Propagates `protocol` twice: in the rotating frame, and in the lab frame
/// under the synthesised carrier drive (no rotating-wave approximation). The
/// drive is sampled at half the lab step so the interpolation error stays
/// below the RK4 error. Unitary, three-level.
pub fn rwa_crosscheck(protocol: &StaProtocol, params: &PhysicsParams, opts: &RunOptions, lab_dt: f64) -> Result<RwaComparison> {
    let spec = params.anharmonic()?;
    let rotating = evolve_unitary(
        protocol_hamiltonian(protocol, &spec, Truncation::ThreeLevel),
        &DensityMatrix3::ground(),
        &opts.grid()?,
    )?;
    let n = (2.0 * opts.duration / lab_dt).round() as usize + 1;
    let drive = synthesize_drive(&protocol.total_schedule(n)?, params.omega10)?;
    let lab_grid = TimeGrid::new(opts.duration, lab_dt, opts.record_interval)?;
    let lab = evolve_unitary(
        |t| lab_hamiltonian(&drive, &spec, t),
        &DensityMatrix3::ground().with_frame(Frame::Lab),
        &lab_grid,
    )?;
    let lab_pops = lab
        .times
        .iter()
        .zip(&lab.states)
        .map(|(&t, s)| Ok(rframe_transform(&s.clone().with_frame(Frame::Lab), t, drive.carrier, drive.interpolate(t).2)?.populations()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RwaComparison { times: rotating.times.clone(), rotating: rotating.populations(), lab: lab_pops })
}
