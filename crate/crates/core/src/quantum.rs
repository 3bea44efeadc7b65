//! Three-level operator algebra, Hamiltonians and frame changes.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fields::{DragCorrection, DriveProgram, StaProtocol, Vec3};
use crate::linalg::{cabs, hermitian_eigenvalues3, hermiticity_error, max_abs_diff, re, Mat3, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
    Dframe,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
            Frame::Dframe => "dframe",
        }
    }
}

/// Tolerances for [`DensityMatrix3::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    entries: Mat3,
    frame: Frame,
}

impl DensityMatrix3 {
    /// Validated constructor.
    pub fn new(entries: Mat3, frame: Frame) -> Result<Self> {
        if hermiticity_error(&entries) > HERMITIAN_TOL {
            return Err(Error::InvalidArgument("density matrix is not Hermitian"));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidArgument("density matrix trace differs from one"));
        }
        if hermitian_eigenvalues3(&entries)[0] < -POSITIVITY_TOL {
            return Err(Error::InvalidArgument("density matrix has a negative eigenvalue"));
        }
        Ok(Self { entries, frame })
    }

    /// Skips validation; for integrator intermediates and reconstructed states.
    pub fn new_unchecked(entries: Mat3, frame: Frame) -> Self {
        Self { entries, frame }
    }

    /// |n⟩⟨n| in the rotating frame.
    pub fn basis(n: usize) -> Self {
        assert!(n < 3, "level index out of range");
        let mut m = Mat3::zeros();
        m[(n, n)] = ONE;
        Self { entries: m, frame: Frame::Rotating }
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) amplitude vector.
    pub fn pure(psi: [C64; 3], frame: Frame) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidArgument("state vector has zero norm"));
        }
        let m = Mat3::from_fn(|i, j| psi[i] * psi[j].conj() / norm2);
        Ok(Self { entries: m, frame })
    }

    pub fn entries(&self) -> &Mat3 {
        &self.entries
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.entries[(m, n)]
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.entries[(0, 0)].re, self.entries[(1, 1)].re, self.entries[(2, 2)].re]
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian_eigenvalues3(&self.entries)
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.entries)
    }

    /// Bloch components (x, y, z) of the {|0⟩,|1⟩} block, z = P0 − P1.
    pub fn qubit_bloch(&self) -> [f64; 3] {
        let r01 = self.entries[(0, 1)];
        let [p0, p1, _] = self.populations();
        [2.0 * r01.re, -2.0 * r01.im, p0 - p1]
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let ev = hermitian_eigenvalues3(&(self.entries - other.entries));
        0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn conjugate_by(&self, u: &Mat3, frame: Frame) -> Self {
        Self { entries: u.adjoint() * self.entries * u, frame }
    }
}

/// Device levels: ω10 and the second-level anharmonicity Δ2 (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnharmonicSpec {
    pub omega10: f64,
    pub delta2: f64,
}

impl AnharmonicSpec {
    pub fn new(omega10: f64, delta2: f64) -> Result<Self> {
        if !(omega10 > 0.0) {
            return Err(Error::InvalidArgument("qubit frequency must be positive"));
        }
        if !(delta2 < 0.0) {
            return Err(Error::InvalidArgument("anharmonicity must be negative"));
        }
        Ok(Self { omega10, delta2 })
    }

    /// Bare energies relative to ε0: (0, ω10, 2ω10 + Δ2).
    pub fn bare_energies(&self) -> [f64; 3] {
        [0.0, self.omega10, 2.0 * self.omega10 + self.delta2]
    }
}

/// The three-level spin operators (Sx, Sy, Sz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOps {
    pub sx: Mat3,
    pub sy: Mat3,
    pub sz: Mat3,
}

impl Default for LadderOps {
    fn default() -> Self {
        Self::new()
    }
}

impl LadderOps {
    pub fn new() -> Self {
        let s2 = re(SQRT_2);
        let is2 = I * SQRT_2;
        let sx = Mat3::new(ZERO, ONE, ZERO, ONE, ZERO, s2, ZERO, s2, ZERO);
        let sy = Mat3::new(ZERO, -I, ZERO, I, ZERO, -is2, ZERO, is2, ZERO);
        let sz = Mat3::from_diagonal(&nalgebra::Vector3::new(ONE, -ONE, re(-3.0)));
        Self { sx, sy, sz }
    }

    pub fn dot(&self, b: &Vec3) -> Mat3 {
        self.sx * re(b.x) + self.sy * re(b.y) + self.sz * re(b.z)
    }
}

/// Level truncation of the simulated Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Only |0⟩ and |1⟩; row and column 2 are zeroed.
    TwoLevel,
    ThreeLevel,
}

impl Truncation {
    pub fn apply(&self, h: &mut Mat3) {
        if *self == Truncation::TwoLevel {
            for k in 0..3 {
                h[(2, k)] = ZERO;
                h[(k, 2)] = ZERO;
            }
        }
    }
}

/// H = ½ B·S + Δ2|2⟩⟨2|.
pub fn rotating_hamiltonian(b: &Vec3, spec: &AnharmonicSpec) -> Mat3 {
    let mut h = LadderOps::new().dot(b) * re(0.5);
    h[(2, 2)] += re(spec.delta2);
    h
}

pub fn rotating_hamiltonian_truncated(b: &Vec3, spec: &AnharmonicSpec, truncation: Truncation) -> Mat3 {
    let mut h = rotating_hamiltonian(b, spec);
    truncation.apply(&mut h);
    h
}

/// Lab-frame Hamiltonian Σ εn|n⟩⟨n| + λ(t) Sx with no rotating-wave approximation.
pub fn lab_hamiltonian(drive: &DriveProgram, spec: &AnharmonicSpec, t: f64) -> Mat3 {
    let lambda = drive.signal(t);
    let e = spec.bare_energies();
    let mut h = LadderOps::new().sx * re(lambda);
    for n in 0..3 {
        h[(n, n)] = re(e[n]);
    }
    h
}

/// R(χ) = diag(1, e^{−iχ}, e^{−2iχ}) with χ = ω_d t + ξ(t).
pub fn rframe_unitary(chi: f64) -> Mat3 {
    let phase = |n: f64| {
        let (s, c) = (-n * chi).sin_cos();
        C64::new(c, s)
    };
    Mat3::from_diagonal(&nalgebra::Vector3::new(ONE, phase(1.0), phase(2.0)))
}

/// ρ_R = R†ρ_L R.
pub fn rframe_transform(rho_lab: &DensityMatrix3, t: f64, omega_d: f64, xi: f64) -> Result<DensityMatrix3> {
    if rho_lab.frame() != Frame::Lab {
        return Err(Error::InvalidArgument("rotating-frame transform expects a lab-frame state"));
    }
    Ok(rho_lab.conjugate_by(&rframe_unitary(omega_d * t + xi), Frame::Rotating))
}

pub fn unitarity_error(u: &Mat3) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &Mat3::identity())
}

/// ρ_D = D†ρ_R D.
pub fn dframe_transform(rho: &DensityMatrix3, d: &Mat3) -> Result<DensityMatrix3> {
    if unitarity_error(d) > 1e-10 {
        return Err(Error::InvalidArgument("D-frame propagator is not unitary"));
    }
    if rho.frame() == Frame::Lab {
        return Err(Error::InvalidArgument("D-frame transform expects a rotating-frame state"));
    }
    Ok(rho.conjugate_by(d, Frame::Dframe))
}

/// Sampled D(t) = exp[−iM(t)].
#[derive(Debug, Clone, PartialEq)]
pub struct DFramePropagator {
    pub times: Vec<f64>,
    pub unitaries: Vec<Mat3>,
}

impl DFramePropagator {
    pub fn from_correction(correction: &DragCorrection) -> Self {
        let times = correction.points.iter().map(|p| p.t).collect();
        let unitaries = correction.points.iter().map(|p| p.propagator()).collect();
        Self { times, unitaries }
    }

    pub fn identity(times: &[f64]) -> Self {
        Self { times: times.to_vec(), unitaries: alloc::vec![Mat3::identity(); times.len()] }
    }

    pub fn max_unitarity_error(&self) -> f64 {
        self.unitaries.iter().map(unitarity_error).fold(0.0, f64::max)
    }

    /// max(‖D(0) − I‖, ‖D(Ta) − I‖) elementwise.
    pub fn endpoint_deviation(&self) -> f64 {
        let id = Mat3::identity();
        match (self.unitaries.first(), self.unitaries.last()) {
            (Some(a), Some(b)) => max_abs_diff(a, &id).max(max_abs_diff(b, &id)),
            _ => 0.0,
        }
    }
}

/// H_D = D†H′D + iḊ†D at time t, with Ḋ from a central difference of step h
/// (one-sided at the endpoints).
pub fn dframe_hamiltonian(protocol: &StaProtocol, spec: &AnharmonicSpec, t: f64, h: f64) -> Mat3 {
    let ta = protocol.duration();
    let d = protocol.dframe(t);
    let (lo, hi) = ((t - h).max(0.0), (t + h).min(ta));
    let d_rate = (protocol.dframe(hi) - protocol.dframe(lo)) / re(hi - lo);
    let hp = rotating_hamiltonian(&protocol.total(t), spec);
    d.adjoint() * hp * d + d_rate.adjoint() * d * I
}

/// Size of the |2⟩ coupling block of H_D: sqrt(|H02|² + |H12|²).
pub fn factorization_residual(h_d: &Mat3) -> f64 {
    cabs(h_d[(0, 2)]).hypot(cabs(h_d[(1, 2)]))
}

/// Largest factorization residual over a uniform grid of `n` points.
pub fn max_factorization_residual(protocol: &StaProtocol, spec: &AnharmonicSpec, n: usize) -> f64 {
    let ta = protocol.duration();
    (0..n)
        .map(|k| {
            let t = ta * k as f64 / (n - 1) as f64;
            factorization_residual(&dframe_hamiltonian(protocol, spec, t, 1e-4))
        })
        .fold(0.0, f64::max)
}
