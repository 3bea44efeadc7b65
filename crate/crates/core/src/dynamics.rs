//! Density-matrix propagation with fixed-step RK4.
//!
//! Both propagators integrate ρ (never the state vector), so unitary and
//! dissipative runs produce the same [`TrajectoryRecord`] shape.

use alloc::vec::Vec;

#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fields::{AngleProfile, AngleSchedule, RotatingField, ScheduleKind, StaProtocol};
use crate::linalg::{re, Mat3, ZERO};
use crate::quantum::{rotating_hamiltonian_truncated, AnharmonicSpec, DensityMatrix3, Frame, Truncation};

/// Energy relaxation and dephasing times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationSpec {
    pub t1: f64,
    pub t2_star: f64,
}

impl DissipationSpec {
    pub fn new(t1: f64, t2_star: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(t2_star > 0.0) {
            return Err(Error::InvalidArgument("T1 and T2* must be positive"));
        }
        if t2_star > 2.0 * t1 {
            return Err(Error::InvalidArgument("T2* cannot exceed 2 T1"));
        }
        Ok(Self { t1, t2_star })
    }

    /// γφ = 1/T2* − 1/(2T1).
    pub fn gamma_phi(&self) -> f64 {
        1.0 / self.t2_star - 0.5 / self.t1
    }

    /// L1 = |0⟩⟨1|/√T1, L2 = √(2/T1)|1⟩⟨2|, Lφ = √(2γφ) diag(0, 1, 2).
    pub fn collapse_operators(&self) -> [Mat3; 3] {
        let mut l1 = Mat3::zeros();
        l1[(0, 1)] = re((1.0 / self.t1).sqrt());
        let mut l2 = Mat3::zeros();
        l2[(1, 2)] = re((2.0 / self.t1).sqrt());
        let g = (2.0 * self.gamma_phi()).sqrt();
        let lphi = Mat3::from_diagonal(&nalgebra::Vector3::new(ZERO, re(g), re(2.0 * g)));
        [l1, l2, lphi]
    }
}

/// Propagation grid: integration step and recording cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub duration: f64,
    pub dt: f64,
    pub record_interval: f64,
}

impl TimeGrid {
    pub fn new(duration: f64, dt: f64, record_interval: f64) -> Result<Self> {
        if !(duration > 0.0) || !(dt > 0.0) || !(record_interval > 0.0) {
            return Err(Error::InvalidArgument("duration, step and record interval must be positive"));
        }
        let g = Self { duration, dt, record_interval };
        g.layout()?;
        Ok(g)
    }

    /// (total steps, steps per record). The step is nudged so both divide evenly.
    fn layout(&self) -> Result<(usize, usize)> {
        let per_record = (self.record_interval / self.dt).round().max(1.0) as usize;
        let records = self.duration / self.record_interval;
        if (records - records.round()).abs() > 1e-6 {
            return Err(Error::InvalidArgument("duration must be a multiple of the record interval"));
        }
        Ok((per_record * records.round() as usize, per_record))
    }

    pub fn halved(&self) -> Self {
        Self { dt: 0.5 * self.dt, ..*self }
    }
}

/// Sampled rotating-frame trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
    /// D-frame Bloch projections (x_D, y_D, z_D), when computed.
    pub dframe_bloch: Option<Vec<[f64; 3]>>,
}

impl TrajectoryRecord {
    pub fn populations(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| s.populations()).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix3 {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_populations(&self) -> [f64; 3] {
        self.final_state().populations()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.trace().re - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Attaches exact D-frame Bloch vectors ρ_D = D†ρD using `protocol`'s D(t).
    pub fn with_exact_dframe(mut self, protocol: &StaProtocol) -> Self {
        let v = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| s.conjugate_by(&protocol.dframe(t), Frame::Dframe).qubit_bloch())
            .collect();
        self.dframe_bloch = Some(v);
        self
    }
}

fn commutator_rhs(h: &Mat3, rho: &Mat3) -> Mat3 {
    let c = h * rho - rho * h;
    // −i[H, ρ]
    c.map(|z| crate::linalg::C64::new(z.im, -z.re))
}

struct Lindbladian {
    ops: [Mat3; 3],
    adj: [Mat3; 3],
    half_sum: Mat3,
}

impl Lindbladian {
    fn new(diss: &DissipationSpec) -> Self {
        let ops = diss.collapse_operators();
        let adj = ops.map(|l| l.adjoint());
        let mut half_sum = Mat3::zeros();
        for (l, ld) in ops.iter().zip(&adj) {
            half_sum += ld * l;
        }
        Self { ops, adj, half_sum: half_sum * re(0.5) }
    }

    fn apply(&self, rho: &Mat3) -> Mat3 {
        let mut d = -(self.half_sum * rho + rho * self.half_sum);
        for (l, ld) in self.ops.iter().zip(&self.adj) {
            d += l * rho * ld;
        }
        d
    }
}

fn integrate<H, F>(h: &H, rhs: F, rho0: &DensityMatrix3, grid: &TimeGrid, check: impl Fn(f64, &Mat3) -> Result<()>) -> Result<TrajectoryRecord>
where
    H: Fn(f64) -> Mat3,
    F: Fn(&Mat3, &Mat3) -> Mat3,
{
    let (steps, per_record) = grid.layout()?;
    let dt = grid.duration / steps as f64;
    let mut rho = *rho0.entries();
    let mut times = Vec::with_capacity(steps / per_record + 1);
    let mut states = Vec::with_capacity(steps / per_record + 1);
    times.push(0.0);
    states.push(DensityMatrix3::new_unchecked(rho, Frame::Rotating));
    let half = re(0.5 * dt);
    let full = re(dt);
    let sixth = re(dt / 6.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let h0 = h(t);
        let hm = h(t + 0.5 * dt);
        let h1 = h(t + dt);
        let k1 = rhs(&h0, &rho);
        let k2 = rhs(&hm, &(rho + k1 * half));
        let k3 = rhs(&hm, &(rho + k2 * half));
        let k4 = rhs(&h1, &(rho + k3 * full));
        rho += (k1 + (k2 + k3) * re(2.0) + k4) * sixth;
        if (k + 1) % per_record == 0 {
            let t_rec = (k + 1) as f64 * dt;
            if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::IntegratorFailure { t: t_rec, reason: "non-finite density matrix" });
            }
            // keep ρ exactly Hermitian between records
            rho = (rho + rho.adjoint()) * re(0.5);
            check(t_rec, &rho)?;
            times.push(t_rec);
            states.push(DensityMatrix3::new_unchecked(rho, Frame::Rotating));
        }
    }
    Ok(TrajectoryRecord { times, states, dframe_bloch: None })
}

const UNITARY_TRACE_FAIL: f64 = 1e-6;
const LINDBLAD_TRACE_FAIL: f64 = 1e-6;
const POSITIVITY_FAIL: f64 = 1e-4;

/// RK4 on dρ/dt = −i[H(t), ρ]. On trace drift beyond 1e−6 the step is halved
/// once before giving up.
pub fn evolve_unitary<H: Fn(f64) -> Mat3>(h: H, rho0: &DensityMatrix3, grid: &TimeGrid) -> Result<TrajectoryRecord> {
    let check = |t: f64, rho: &Mat3| {
        if (rho.trace().re - 1.0).abs() > UNITARY_TRACE_FAIL {
            Err(Error::IntegratorFailure { t, reason: "trace drift" })
        } else {
            Ok(())
        }
    };
    match integrate(&h, commutator_rhs, rho0, grid, check) {
        Err(Error::IntegratorFailure { .. }) => integrate(&h, commutator_rhs, rho0, &grid.halved(), check),
        other => other,
    }
}

/// RK4 on the Lindblad master equation with the collapse set of
/// [`DissipationSpec::collapse_operators`].
pub fn evolve_lindblad<H: Fn(f64) -> Mat3>(
    h: H,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
    diss: &DissipationSpec,
) -> Result<TrajectoryRecord> {
    let lind = Lindbladian::new(diss);
    let rhs = |hm: &Mat3, rho: &Mat3| commutator_rhs(hm, rho) + lind.apply(rho);
    let check = |t: f64, rho: &Mat3| {
        if (rho.trace().re - 1.0).abs() > LINDBLAD_TRACE_FAIL {
            return Err(Error::IntegratorFailure { t, reason: "trace drift" });
        }
        if crate::linalg::hermitian_eigenvalues3(rho)[0] < -POSITIVITY_FAIL {
            return Err(Error::IntegratorFailure { t, reason: "positivity violation" });
        }
        Ok(())
    };
    integrate(&h, rhs, rho0, grid, check)
}

/// Propagates under the unitary or dissipative equation depending on `diss`.
pub fn evolve<H: Fn(f64) -> Mat3>(
    h: H,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
    diss: Option<&DissipationSpec>,
) -> Result<TrajectoryRecord> {
    match diss {
        Some(d) => evolve_lindblad(h, rho0, grid, d),
        None => evolve_unitary(h, rho0, grid),
    }
}

/// Rotating-frame Hamiltonian sampler for a protocol.
pub fn protocol_hamiltonian<'a>(
    protocol: &'a StaProtocol,
    spec: &'a AnharmonicSpec,
    truncation: Truncation,
) -> impl Fn(f64) -> Mat3 + 'a {
    move |t| rotating_hamiltonian_truncated(&protocol.total(t), spec, truncation)
}

/// Second-level leakage estimate along a transfer schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageEstimate {
    pub times: Vec<f64>,
    /// ½[1 − |δ|/√(δ² + 4|J|²)] with δ = Δ2′ − Ω/2.
    pub two_level: Vec<f64>,
    /// |J|²/δ².
    pub perturbative: Vec<f64>,
    /// θ̇(Ta)²/[2(Δ2 + Ω)²], valid for θ(Ta) = π.
    pub endpoint: f64,
    /// |Δ2| < 3Ω: the weak-coupling assumption behind the estimate is poor.
    pub weak_anharmonicity: bool,
}

pub fn leakage_estimate(sched: &AngleSchedule, omega: f64, delta2: f64) -> LeakageEstimate {
    let mut times = Vec::with_capacity(sched.samples().len());
    let mut two_level = Vec::with_capacity(times.capacity());
    let mut perturbative = Vec::with_capacity(times.capacity());
    for a in sched.samples() {
        let detuning = delta2 - 1.5 * omega * a.theta.cos() - 0.5 * omega;
        let j2 = 0.5 * (0.5 * a.theta).sin().powi(2) * (omega * omega * a.theta.sin().powi(2) + a.rate * a.rate);
        times.push(a.t);
        two_level.push(0.5 * (1.0 - detuning.abs() / (detuning * detuning + 4.0 * j2).sqrt()));
        perturbative.push(j2 / (detuning * detuning));
    }
    let end_rate = sched.samples().last().map_or(0.0, |a| a.rate);
    LeakageEstimate {
        times,
        two_level,
        perturbative,
        endpoint: end_rate * end_rate / (2.0 * (delta2 + omega).powi(2)),
        weak_anharmonicity: delta2.abs() < 3.0 * omega,
    }
}

/// Final P1 in the dissipation-free two-level system, with and without the
/// counter-diabatic field.
pub fn sta_vs_bare_comparison(omega: f64, duration: f64, kind: ScheduleKind, dt: f64) -> Result<(f64, f64)> {
    let profile = AngleProfile::new(kind, duration)?;
    let geometry = RotatingField::transfer(omega)?;
    // any Δ2 works: the two-level truncation removes it
    let spec = AnharmonicSpec::new(1.0, -1.0)?;
    let grid = TimeGrid::new(duration, dt, duration)?;
    let run = |p: StaProtocol| -> Result<f64> {
        let h = protocol_hamiltonian(&p, &spec, Truncation::TwoLevel);
        Ok(evolve_unitary(h, &DensityMatrix3::ground(), &grid)?.final_populations()[1])
    };
    Ok((run(StaProtocol::new(profile, geometry)?)?, run(StaProtocol::bare(profile, geometry)?)?))
}

/// Instantaneous spin-up state of B0 = (sinθ, 0, cosθ): cos(θ/2)|0⟩ + sin(θ/2)|1⟩.
pub fn spin_up_state(theta: f64) -> DensityMatrix3 {
    let (s, c) = (0.5 * theta).sin_cos();
    DensityMatrix3::pure([re(c), re(s), ZERO], Frame::Rotating).expect("unit vector")
}
