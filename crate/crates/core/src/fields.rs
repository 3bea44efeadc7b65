//! Drive schedules and effective fields.
//!
//! A protocol starts from a polar-angle waveform θ(t) ([`AngleProfile`]) and a
//! field geometry B0 = (Ω2 sinθ, 0, Ω1 + Ω2 cosθ) ([`RotatingField`]; the plain
//! state transfer is the Ω1 = 0 case). From those we build the
//! counter-diabatic field B_cd = B0 × Ḃ0 / |B0|², the first-order DRAG field
//! and its D-frame generators, and finally the microwave quadratures that
//! realise the total field.
//!
//! Everything is available both pointwise in time ([`StaProtocol`], used by the
//! propagators at RK4 sub-steps) and as sampled [`FieldSchedule`]s for export.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::Vector3;
#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, C64};

/// Fields weaker than this are treated as a closed gap.
pub const GAP_TOLERANCE: f64 = 1e-9;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// θ(t) = πt/Ta, the "sinusoidal" pulse.
    Linear,
    /// θ(t) = (π/2)[1 − cos(πt/Ta)].
    Hanning,
    /// Hanning window stopped at θ(Ta) = mπ/M, one leg of a virtual trajectory.
    VirtualHanning { m: u32, total: u32 },
}

impl ScheduleKind {
    pub fn is_hanning(&self) -> bool {
        !matches!(self, ScheduleKind::Linear)
    }

    pub fn final_angle(&self) -> f64 {
        match *self {
            ScheduleKind::Linear | ScheduleKind::Hanning => PI,
            ScheduleKind::VirtualHanning { m, total } => PI * m as f64 / total as f64,
        }
    }
}

/// θ, θ̇, θ̈ at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    pub t: f64,
    pub theta: f64,
    pub rate: f64,
    pub accel: f64,
}

/// Analytic polar-angle waveform on [0, Ta].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleProfile {
    kind: ScheduleKind,
    duration: f64,
    final_angle: f64,
}

impl AngleProfile {
    pub fn new(kind: ScheduleKind, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidArgument("schedule duration must be positive"));
        }
        if let ScheduleKind::VirtualHanning { m, total } = kind {
            if total == 0 || m > total {
                return Err(Error::InvalidArgument("virtual leg requires 0 <= m <= M, M > 0"));
            }
        }
        Ok(Self { kind, duration, final_angle: kind.final_angle() })
    }

    /// Same waveform shape, ending at `final_angle` instead of the kind's default.
    pub fn with_final_angle(mut self, final_angle: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&final_angle) {
            return Err(Error::InvalidArgument("final angle must lie in [0, pi]"));
        }
        self.final_angle = final_angle;
        Ok(self)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn final_angle(&self) -> f64 {
        self.final_angle
    }

    pub fn at(&self, t: f64) -> AngleSample {
        let amp = self.final_angle;
        let ta = self.duration;
        match self.kind {
            ScheduleKind::Linear => AngleSample { t, theta: amp * t / ta, rate: amp / ta, accel: 0.0 },
            ScheduleKind::Hanning | ScheduleKind::VirtualHanning { .. } => {
                let w = PI / ta;
                let (s, c) = (w * t).sin_cos();
                AngleSample {
                    t,
                    theta: 0.5 * amp * (1.0 - c),
                    rate: 0.5 * amp * w * s,
                    accel: 0.5 * amp * w * w * c,
                }
            }
        }
    }
}

/// Uniformly sampled [`AngleProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    profile: AngleProfile,
    samples: Vec<AngleSample>,
}

impl AngleSchedule {
    pub fn new(kind: ScheduleKind, duration: f64, n_samples: usize) -> Result<Self> {
        Self::from_profile(AngleProfile::new(kind, duration)?, n_samples)
    }

    /// Grid with spacing as close to `dt` as divides the duration evenly.
    pub fn with_step(kind: ScheduleKind, duration: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive"));
        }
        let profile = AngleProfile::new(kind, duration)?;
        let n = ((duration / dt).round() as usize).max(1) + 1;
        Self::from_profile(profile, n)
    }

    pub fn from_profile(profile: AngleProfile, n_samples: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::InvalidArgument("a schedule needs at least two samples"));
        }
        let step = profile.duration / (n_samples - 1) as f64;
        let samples = (0..n_samples)
            .map(|k| {
                // pin the last sample to Ta exactly
                let t = if k + 1 == n_samples { profile.duration } else { k as f64 * step };
                profile.at(t)
            })
            .collect();
        Ok(Self { profile, samples })
    }

    pub fn profile(&self) -> &AngleProfile {
        &self.profile
    }

    pub fn kind(&self) -> ScheduleKind {
        self.profile.kind
    }

    pub fn duration(&self) -> f64 {
        self.profile.duration
    }

    pub fn samples(&self) -> &[AngleSample] {
        &self.samples
    }
}

/// Polar angle θq of an in-plane field and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarAngle {
    pub value: f64,
    pub rate: f64,
    pub accel: f64,
}

/// Field geometry B0(θ) = (Ω2 sinθ, 0, Ω1 + Ω2 cosθ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingField {
    /// Ω1, the constant z offset (intracell hopping in the SSH mapping).
    pub offset: f64,
    /// Ω2, the rotating amplitude.
    pub amplitude: f64,
}

impl RotatingField {
    /// State-transfer field (Ω sinθ, 0, Ω cosθ).
    pub fn transfer(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument("drive amplitude must be positive"));
        }
        Ok(Self { offset: 0.0, amplitude: omega })
    }

    pub fn ssh(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega2 > 0.0) {
            return Err(Error::InvalidArgument("intercell amplitude must be positive"));
        }
        if !(omega1 >= 0.0) {
            return Err(Error::InvalidArgument("intracell amplitude must be non-negative"));
        }
        Ok(Self { offset: omega1, amplitude: omega2 })
    }

    /// α = Ω1/Ω2.
    pub fn ratio(&self) -> f64 {
        self.offset / self.amplitude
    }

    pub fn value(&self, a: &AngleSample) -> Vec3 {
        let (s, c) = a.theta.sin_cos();
        Vec3::new(self.amplitude * s, 0.0, self.offset + self.amplitude * c)
    }

    pub fn rate(&self, a: &AngleSample) -> Vec3 {
        let (s, c) = a.theta.sin_cos();
        Vec3::new(self.amplitude * c * a.rate, 0.0, -self.amplitude * s * a.rate)
    }

    pub fn accel(&self, a: &AngleSample) -> Vec3 {
        let (s, c) = a.theta.sin_cos();
        let r2 = a.rate * a.rate;
        Vec3::new(
            self.amplitude * (c * a.accel - s * r2),
            0.0,
            -self.amplitude * (s * a.accel + c * r2),
        )
    }

    /// θq = atan2(B0x, B0z) ∈ [0, π] with analytic chain-rule derivatives.
    pub fn polar(&self, a: &AngleSample) -> Result<PolarAngle> {
        let b = self.value(a);
        let db = self.rate(a);
        let ddb = self.accel(a);
        let n2 = b.x * b.x + b.z * b.z;
        if n2.sqrt() < GAP_TOLERANCE {
            return Err(Error::GapClosure { t: a.t });
        }
        let numerator = b.z * db.x - b.x * db.z;
        let rate = numerator / n2;
        let numerator_rate = b.z * ddb.x - b.x * ddb.z;
        let norm_rate = 2.0 * (b.x * db.x + b.z * db.z);
        Ok(PolarAngle {
            value: b.x.abs().atan2(b.z),
            rate,
            accel: numerator_rate / n2 - rate * norm_rate / n2,
        })
    }

    /// Smallest |B0| on θ ∈ [0, θ_end]; |B0|² is monotone in cosθ there.
    pub fn min_magnitude(&self, final_angle: f64) -> f64 {
        let start = (self.offset + self.amplitude).abs();
        let end = self.value(&AngleSample { t: 0.0, theta: final_angle, rate: 0.0, accel: 0.0 }).norm();
        start.min(end)
    }
}

/// B_cd = B0 × Ḃ0 / |B0|².
pub fn counter_diabatic(b0: &Vec3, rate: &Vec3, t: f64) -> Result<Vec3> {
    let n2 = b0.norm_squared();
    if n2.sqrt() < GAP_TOLERANCE {
        return Err(Error::GapClosure { t });
    }
    Ok(b0.cross(rate) / n2)
}

/// Counter-diabatic field written in the field's spherical angles.
pub fn counter_diabatic_general(theta: f64, theta_rate: f64, phi: f64, phi_rate: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(
        -theta_rate * sp - phi_rate * st * ct * cp,
        theta_rate * cp - phi_rate * st * ct * sp,
        phi_rate * st * st,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLabel {
    Reference,
    CounterDiabatic,
    Drag,
    Total,
}

impl FieldLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldLabel::Reference => "reference",
            FieldLabel::CounterDiabatic => "counter_diabatic",
            FieldLabel::Drag => "drag",
            FieldLabel::Total => "total",
        }
    }
}

/// One sample of a field with its analytic derivative channels, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub b: Vec3,
    pub rate: Option<Vec3>,
    pub accel: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSchedule {
    pub label: FieldLabel,
    pub geometry: RotatingField,
    pub samples: Vec<FieldSample>,
}

impl FieldSchedule {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Pointwise sum on a shared grid; derivative channels survive only if both
    /// operands carry them.
    pub fn sum(&self, other: &FieldSchedule, label: FieldLabel) -> Result<FieldSchedule> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::InvalidArgument("field schedules live on different grids"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| {
                if (a.t - b.t).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("field schedules live on different grids"));
                }
                Ok(FieldSample {
                    t: a.t,
                    b: a.b + b.b,
                    rate: a.rate.zip(b.rate).map(|(x, y)| x + y),
                    accel: a.accel.zip(b.accel).map(|(x, y)| x + y),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSchedule { label, geometry: self.geometry, samples })
    }
}

fn reference_schedule(sched: &AngleSchedule, geometry: RotatingField) -> FieldSchedule {
    let samples = sched
        .samples()
        .iter()
        .map(|a| FieldSample {
            t: a.t,
            b: geometry.value(a),
            rate: Some(geometry.rate(a)),
            accel: Some(geometry.accel(a)),
        })
        .collect();
    FieldSchedule { label: FieldLabel::Reference, geometry, samples }
}

/// B0(t) = (Ω sinθ, 0, Ω cosθ).
pub fn reference_field_transfer(sched: &AngleSchedule, omega: f64) -> Result<FieldSchedule> {
    Ok(reference_schedule(sched, RotatingField::transfer(omega)?))
}

/// B0(t) = (Ω2 sinθ, 0, Ω1 + Ω2 cosθ).
pub fn reference_field_ssh(sched: &AngleSchedule, omega1: f64, omega2: f64) -> Result<FieldSchedule> {
    Ok(reference_schedule(sched, RotatingField::ssh(omega1, omega2)?))
}

/// Cross-product counter-diabatic field of a reference schedule.
///
/// The reference must carry its rate channel; if it also carries the
/// acceleration channel the result gets an analytic rate channel too.
pub fn counter_diabatic_field(reference: &FieldSchedule) -> Result<FieldSchedule> {
    let samples = reference
        .samples
        .iter()
        .map(|s| {
            let rate = s.rate.ok_or(Error::InvalidArgument("reference field lacks a rate channel"))?;
            let b = counter_diabatic(&s.b, &rate, s.t)?;
            let cd_rate = s.accel.map(|accel| {
                let n2 = s.b.norm_squared();
                s.b.cross(&accel) / n2 - b * (2.0 * s.b.dot(&rate) / n2)
            });
            Ok(FieldSample { t: s.t, b, rate: cd_rate, accel: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSchedule { label: FieldLabel::CounterDiabatic, geometry: reference.geometry, samples })
}

/// B0 + B_cd for an angle schedule, with its rate channel.
pub fn sta_field(sched: &AngleSchedule, geometry: RotatingField) -> Result<FieldSchedule> {
    let reference = reference_schedule(sched, geometry);
    let cd = counter_diabatic_field(&reference)?;
    reference.sum(&cd, FieldLabel::Total)
}

/// First-order D-frame generator elements (x, y) per level pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstOrderExponent {
    pub m01: [f64; 2],
    pub m12: [f64; 2],
}

/// The second-order elements that enter the propagator; M⁽²⁾₀₁ is not used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondOrderExponent {
    pub m12: [f64; 2],
    pub m02: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyShifts {
    /// ε⁽¹⁾, common shift of |0⟩ and |1⟩.
    pub qubit: f64,
    /// ε₂⁽⁰⁾.
    pub level2_zeroth: f64,
    /// ε₂⁽¹⁾.
    pub level2_first: f64,
}

/// DRAG correction at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragPoint {
    pub t: f64,
    /// B_d with B_d;z ≡ 0.
    pub field: Vec3,
    pub first: FirstOrderExponent,
    pub second: SecondOrderExponent,
    pub shifts: EnergyShifts,
}

impl DragPoint {
    /// First-order DRAG solution for an arbitrary STA field B and its rate Ḃ.
    pub fn from_field(t: f64, b: &Vec3, rate: &Vec3, delta2: f64) -> Self {
        let field = Vec3::new(
            (rate.y - b.z * b.x) / (2.0 * delta2),
            -(rate.x + b.z * b.y) / (2.0 * delta2),
            0.0,
        );
        let first = FirstOrderExponent {
            m01: [b.y / (4.0 * delta2), -b.x / (4.0 * delta2)],
            m12: [b.y / (SQRT_2 * delta2), -b.x / (SQRT_2 * delta2)],
        };
        let d2 = delta2 * delta2;
        let second = SecondOrderExponent {
            m12: [-field.y / (SQRT_2 * delta2), field.x / (SQRT_2 * delta2)],
            m02: [
                3.0 * b.x * b.y / (4.0 * SQRT_2 * d2),
                3.0 * (b.y * b.y - b.x * b.x) / (8.0 * SQRT_2 * d2),
            ],
        };
        let transverse = b.x * b.x + b.y * b.y;
        let shifts = EnergyShifts {
            qubit: -transverse / (4.0 * delta2),
            level2_zeroth: -1.5 * b.z,
            level2_first: -1.5 * field.z + transverse / (2.0 * delta2),
        };
        Self { t, field, first, second, shifts }
    }

    /// Closed form for the rotating-field geometry, written in θ and θq.
    pub fn closed_form(a: &AngleSample, geometry: &RotatingField, delta2: f64) -> Result<Self> {
        let q = geometry.polar(a)?;
        let (o1, o2) = (geometry.offset, geometry.amplitude);
        let (s, c) = a.theta.sin_cos();
        let bz = o1 + o2 * c;
        let field = Vec3::new(
            (q.accel - o2 * s * bz) / (2.0 * delta2),
            -(o2 * c * a.rate + bz * q.rate) / (2.0 * delta2),
            0.0,
        );
        let first = FirstOrderExponent {
            m01: [q.rate / (4.0 * delta2), -o2 * s / (4.0 * delta2)],
            m12: [q.rate / (SQRT_2 * delta2), -o2 * s / (SQRT_2 * delta2)],
        };
        let d2 = delta2 * delta2;
        let second = SecondOrderExponent {
            m12: [-field.y / (SQRT_2 * delta2), field.x / (SQRT_2 * delta2)],
            m02: [
                3.0 * o2 * s * q.rate / (4.0 * SQRT_2 * d2),
                3.0 * (q.rate * q.rate - o2 * o2 * s * s) / (8.0 * SQRT_2 * d2),
            ],
        };
        let transverse = o2 * o2 * s * s + q.rate * q.rate;
        let shifts = EnergyShifts {
            qubit: -transverse / (4.0 * delta2),
            level2_zeroth: -1.5 * bz,
            level2_first: transverse / (2.0 * delta2),
        };
        Ok(Self { t: a.t, field, first, second, shifts })
    }

    /// Hermitian exponent M = M⁽¹⁾ + M⁽²⁾ with zero diagonal, built from
    /// σ_mn;x = |m⟩⟨n| + |n⟩⟨m| and σ_mn;y = −i|m⟩⟨n| + i|n⟩⟨m|.
    pub fn generator(&self) -> Mat3 {
        let mut m = Mat3::zeros();
        let mut put = |a: usize, b: usize, x: f64, y: f64| {
            m[(a, b)] += C64::new(x, -y);
            m[(b, a)] += C64::new(x, y);
        };
        put(0, 1, self.first.m01[0], self.first.m01[1]);
        put(1, 2, self.first.m12[0] + self.second.m12[0], self.first.m12[1] + self.second.m12[1]);
        put(0, 2, self.second.m02[0], self.second.m02[1]);
        m
    }

    /// exp(−iM).
    pub fn propagator(&self) -> Mat3 {
        crate::linalg::hermitian_expm(&self.generator(), 1.0).expect("generator is Hermitian by construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DragCorrection {
    pub geometry: RotatingField,
    pub delta2: f64,
    pub points: Vec<DragPoint>,
}

impl DragCorrection {
    pub fn field(&self) -> FieldSchedule {
        let samples = self
            .points
            .iter()
            .map(|p| FieldSample { t: p.t, b: p.field, rate: None, accel: None })
            .collect();
        FieldSchedule { label: FieldLabel::Drag, geometry: self.geometry, samples }
    }
}

fn check_drag_inputs(sched: &AngleSchedule, delta2: f64) -> Result<()> {
    if delta2 == 0.0 || !delta2.is_finite() {
        return Err(Error::InvalidArgument("anharmonicity must be non-zero"));
    }
    if !sched.kind().is_hanning() {
        return Err(Error::ConstraintViolation(
            "DRAG endpoint conditions need Bx = By = 0 at t = 0 and Ta (Hanning kinds only)",
        ));
    }
    Ok(())
}

/// Transfer-pulse DRAG field:
/// B_d = ((2θ̈ − Ω² sin2θ)/(4Δ2), −(Ω/Δ2) θ̇ cosθ, 0).
pub fn drag_field_transfer(sched: &AngleSchedule, omega: f64, delta2: f64) -> Result<FieldSchedule> {
    check_drag_inputs(sched, delta2)?;
    let geometry = RotatingField::transfer(omega)?;
    let samples = sched
        .samples()
        .iter()
        .map(|a| FieldSample {
            t: a.t,
            b: Vec3::new(
                (2.0 * a.accel - omega * omega * (2.0 * a.theta).sin()) / (4.0 * delta2),
                -(omega / delta2) * a.rate * a.theta.cos(),
                0.0,
            ),
            rate: None,
            accel: None,
        })
        .collect();
    Ok(FieldSchedule { label: FieldLabel::Drag, geometry, samples })
}

/// DRAG field, generators and energy shifts for the SSH geometry.
pub fn drag_field_ssh(sched: &AngleSchedule, omega1: f64, omega2: f64, delta2: f64) -> Result<DragCorrection> {
    check_drag_inputs(sched, delta2)?;
    let geometry = RotatingField::ssh(omega1, omega2)?;
    let points = sched
        .samples()
        .iter()
        .map(|a| DragPoint::closed_form(a, &geometry, delta2))
        .collect::<Result<Vec<_>>>()?;
    Ok(DragCorrection { geometry, delta2, points })
}

/// DRAG correction of a sampled STA field (which must carry its rate channel).
pub fn drag_correction(sta: &FieldSchedule, delta2: f64) -> Result<DragCorrection> {
    if delta2 == 0.0 || !delta2.is_finite() {
        return Err(Error::InvalidArgument("anharmonicity must be non-zero"));
    }
    let points = sta
        .samples
        .iter()
        .map(|s| {
            let rate = s.rate.ok_or(Error::InvalidArgument("STA field lacks a rate channel"))?;
            Ok(DragPoint::from_field(s.t, &s.b, &rate, delta2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DragCorrection { geometry: sta.geometry, delta2, points })
}

/// A complete STA (+ optional DRAG) protocol evaluable at any t ∈ [0, Ta].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaProtocol {
    profile: AngleProfile,
    geometry: RotatingField,
    counter_diabatic: bool,
    drag: Option<f64>,
}

/// Every field contribution at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolPoint {
    pub angle: AngleSample,
    pub reference: Vec3,
    pub counter_diabatic: Vec3,
    pub drag: Option<DragPoint>,
}

impl ProtocolPoint {
    pub fn total(&self) -> Vec3 {
        self.reference + self.counter_diabatic + self.drag.map_or_else(Vec3::zeros, |d| d.field)
    }
}

impl StaProtocol {
    /// Reference plus counter-diabatic field. Fails if the gap closes on the path.
    pub fn new(profile: AngleProfile, geometry: RotatingField) -> Result<Self> {
        if geometry.min_magnitude(profile.final_angle()) < GAP_TOLERANCE {
            return Err(Error::GapClosure { t: profile.duration() });
        }
        Ok(Self { profile, geometry, counter_diabatic: true, drag: None })
    }

    /// Reference field only (no counter-diabatic term).
    pub fn bare(profile: AngleProfile, geometry: RotatingField) -> Result<Self> {
        let mut p = Self::new(profile, geometry)?;
        p.counter_diabatic = false;
        Ok(p)
    }

    pub fn with_drag(mut self, delta2: f64) -> Result<Self> {
        if delta2 == 0.0 || !delta2.is_finite() {
            return Err(Error::InvalidArgument("anharmonicity must be non-zero"));
        }
        if !self.profile.kind().is_hanning() {
            return Err(Error::ConstraintViolation(
                "DRAG endpoint conditions need Bx = By = 0 at t = 0 and Ta (Hanning kinds only)",
            ));
        }
        if !self.counter_diabatic {
            return Err(Error::InvalidArgument("DRAG is built on the counter-diabatic field"));
        }
        self.drag = Some(delta2);
        Ok(self)
    }

    pub fn without_drag(mut self) -> Self {
        self.drag = None;
        self
    }

    pub fn profile(&self) -> &AngleProfile {
        &self.profile
    }

    pub fn geometry(&self) -> &RotatingField {
        &self.geometry
    }

    pub fn duration(&self) -> f64 {
        self.profile.duration()
    }

    pub fn has_drag(&self) -> bool {
        self.drag.is_some()
    }

    pub fn point(&self, t: f64) -> ProtocolPoint {
        let angle = self.profile.at(t);
        let reference = self.geometry.value(&angle);
        if !self.counter_diabatic {
            return ProtocolPoint { angle, reference, counter_diabatic: Vec3::zeros(), drag: None };
        }
        // the constructor rules out gap closure on [0, θ_end]
        let q = self.geometry.polar(&angle).expect("gap checked at construction");
        let counter_diabatic = Vec3::new(0.0, q.rate, 0.0);
        let drag = self.drag.map(|delta2| {
            let b = reference + counter_diabatic;
            let rate = self.geometry.rate(&angle) + Vec3::new(0.0, q.accel, 0.0);
            DragPoint::from_field(t, &b, &rate, delta2)
        });
        ProtocolPoint { angle, reference, counter_diabatic, drag }
    }

    pub fn total(&self, t: f64) -> Vec3 {
        self.point(t).total()
    }

    /// D(t) = exp(−iM(t)); identity when DRAG is off.
    pub fn dframe(&self, t: f64) -> Mat3 {
        match self.point(t).drag {
            Some(d) => d.propagator(),
            None => Mat3::identity(),
        }
    }

    /// Sampled total field with derivative channels, for export/synthesis.
    pub fn total_schedule(&self, n_samples: usize) -> Result<FieldSchedule> {
        let sched = AngleSchedule::from_profile(self.profile, n_samples)?;
        let samples = sched
            .samples()
            .iter()
            .map(|a| FieldSample { t: a.t, b: self.total(a.t), rate: None, accel: None })
            .collect();
        Ok(FieldSchedule { label: FieldLabel::Total, geometry: self.geometry, samples })
    }
}

/// One sample of a synthesised drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub t: f64,
    /// E(t) ≥ 0.
    pub envelope: f64,
    /// Φ(t) = ξ − φ.
    pub drive_phase: f64,
    /// ξ(t) = ∫ Bz dt.
    pub detuning_phase: f64,
    /// φ(t) = atan2(By, Bx).
    pub relative_phase: f64,
    /// ξ̇(t) = Bz(t).
    pub detuning_rate: f64,
}

impl DriveSample {
    /// In-phase and quadrature components (E cosφ, E sinφ).
    pub fn quadratures(&self) -> (f64, f64) {
        let (s, c) = self.relative_phase.sin_cos();
        (self.envelope * c, self.envelope * s)
    }
}

/// Microwave drive λ(t) = E(t) cos[ω_d t + Φ(t)] realising a rotating-frame field.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveProgram {
    pub carrier: f64,
    pub samples: Vec<DriveSample>,
}

impl DriveProgram {
    /// Field reconstructed from the drive: (E cosφ, E sinφ, ξ̇).
    pub fn field_at_sample(&self, k: usize) -> Vec3 {
        let s = &self.samples[k];
        let (i, q) = s.quadratures();
        Vec3::new(i, q, s.detuning_rate)
    }

    /// Linear interpolation of the quadratures and ξ at arbitrary t.
    ///
    /// Interpolating (I, Q) rather than (E, Φ) avoids the 2π branch jumps of φ.
    pub fn interpolate(&self, t: f64) -> (f64, f64, f64) {
        let n = self.samples.len();
        let t0 = self.samples[0].t;
        let step = (self.samples[n - 1].t - t0) / (n - 1) as f64;
        let x = ((t - t0) / step).clamp(0.0, (n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        let w = x - k as f64;
        let (i0, q0) = self.samples[k].quadratures();
        let (i1, q1) = self.samples[k + 1].quadratures();
        let xi = (1.0 - w) * self.samples[k].detuning_phase + w * self.samples[k + 1].detuning_phase;
        ((1.0 - w) * i0 + w * i1, (1.0 - w) * q0 + w * q1, xi)
    }

    /// λ(t) = E cos(ω_d t + Φ) = I cos(ω_d t + ξ) + Q sin(ω_d t + ξ).
    pub fn signal(&self, t: f64) -> f64 {
        let (i, q, xi) = self.interpolate(t);
        let (s, c) = (self.carrier * t + xi).sin_cos();
        i * c + q * s
    }
}

/// Converts a uniformly sampled total field into E, φ, ξ and Φ.
pub fn synthesize_drive(total: &FieldSchedule, carrier: f64) -> Result<DriveProgram> {
    let s = &total.samples;
    if s.len() < 2 {
        return Err(Error::InvalidArgument("drive synthesis needs at least two samples"));
    }
    let step = (s[s.len() - 1].t - s[0].t) / (s.len() - 1) as f64;
    if s.windows(2).any(|w| ((w[1].t - w[0].t) - step).abs() > 1e-9 * step.max(1.0)) {
        return Err(Error::InvalidArgument("drive synthesis requires a uniform time grid"));
    }
    let mut xi = 0.0;
    let mut samples = Vec::with_capacity(s.len());
    for (k, f) in s.iter().enumerate() {
        if k > 0 {
            xi += 0.5 * (s[k - 1].b.z + f.b.z) * (f.t - s[k - 1].t);
        }
        let envelope = f.b.x.hypot(f.b.y);
        let relative_phase = f.b.y.atan2(f.b.x);
        samples.push(DriveSample {
            t: f.t,
            envelope,
            drive_phase: xi - relative_phase,
            detuning_phase: xi,
            relative_phase,
            detuning_rate: f.b.z,
        });
    }
    Ok(DriveProgram { carrier, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    const OMEGA: f64 = 0.188_495_559_215_387_6;
    const DELTA2: f64 = -1.256_637_061_435_917_3;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_bad_schedule_arguments() {
        assert!(AngleSchedule::new(ScheduleKind::Hanning, 0.0, 10).is_err());
        assert!(AngleSchedule::new(ScheduleKind::Hanning, -1.0, 10).is_err());
        assert!(AngleSchedule::new(ScheduleKind::Linear, 15.0, 1).is_err());
        assert!(AngleSchedule::new(ScheduleKind::VirtualHanning { m: 5, total: 4 }, 15.0, 10).is_err());
    }

    #[test]
    fn hanning_midpoint_and_endpoints() {
        let p = AngleProfile::new(ScheduleKind::Hanning, 15.0).unwrap();
        assert!(close(p.at(7.5).theta, PI / 2.0, 1e-15));
        assert!(close(p.at(0.0).theta, 0.0, 0.0));
        assert!(close(p.at(15.0).theta, PI, 1e-15));
        assert!(close(p.at(0.0).rate, 0.0, 0.0));
        assert!(close(p.at(15.0).rate, 0.0, 1e-16));
        // π³/(2·15²)
        assert!(close(p.at(0.0).accel, 0.068_902_837_067_332_93, 1e-15));
    }

    #[test]
    fn linear_endpoint() {
        let p = AngleProfile::new(ScheduleKind::Linear, 15.0).unwrap();
        let a = p.at(15.0);
        assert!(close(a.theta, PI, 1e-15));
        assert!(close(a.rate, 0.209_439_510_239_319_55, 1e-15));
    }

    #[test]
    fn virtual_leg_ends_at_even_fraction() {
        let p = AngleProfile::new(ScheduleKind::VirtualHanning { m: 10, total: 41 }, 20.0).unwrap();
        assert!(close(p.at(20.0).theta, 10.0 * PI / 41.0, 1e-15));
        assert_eq!(p.at(0.0).theta, 0.0);
        assert!(close(p.at(20.0).rate, 0.0, 1e-16));
    }

    #[test]
    fn schedule_grid_is_strictly_increasing_and_pinned() {
        let s = AngleSchedule::with_step(ScheduleKind::Hanning, 15.0, 0.005).unwrap();
        assert_eq!(s.samples().len(), 3001);
        assert!(s.samples().windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(s.samples().last().unwrap().t, 15.0);
    }

    #[test]
    fn reference_field_poles_and_equator() {
        let g = RotatingField::transfer(OMEGA).unwrap();
        let at = |theta| AngleSample { t: 0.0, theta, rate: 0.0, accel: 0.0 };
        let north = g.value(&at(0.0));
        assert_eq!(north, Vec3::new(0.0, 0.0, OMEGA));
        let south = g.value(&at(PI));
        assert!(close(south.z, -OMEGA, 1e-16) && close(south.x, 0.0, 1e-16));
        let eq = g.value(&at(PI / 2.0));
        assert!(close(eq.x, 0.18850, 1e-5) && close(eq.z, 0.0, 1e-16));
        assert!(RotatingField::transfer(0.0).is_err());
    }

    #[test]
    fn ssh_reference_field() {
        let at = |theta| AngleSample { t: 0.0, theta, rate: 0.0, accel: 0.0 };
        let g = RotatingField::ssh(0.0, 0.18850).unwrap();
        assert_eq!(g.value(&at(0.0)), Vec3::new(0.0, 0.0, 0.18850));
        let g = RotatingField::ssh(OMEGA, OMEGA).unwrap();
        assert!(g.value(&at(PI)).norm() < 1e-16);
        let g = RotatingField::ssh(0.11310, 0.18850).unwrap();
        let b = g.value(&at(PI / 2.0));
        assert!(close(b.x, 0.18850, 1e-15) && b.y == 0.0 && close(b.z, 0.11310, 1e-15));
        assert!(RotatingField::ssh(0.1, 0.0).is_err());
        assert!(RotatingField::ssh(-0.1, 0.2).is_err());
    }

    #[test]
    fn transfer_counter_diabatic_is_theta_rate() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 15.0, 3001).unwrap();
        let r = reference_field_transfer(&sched, OMEGA).unwrap();
        let cd = counter_diabatic_field(&r).unwrap();
        let mid = &cd.samples[1500];
        assert!(close(mid.t, 7.5, 1e-12));
        assert!(close(mid.b.y, PI * PI / 30.0, 1e-14));
        assert!(close(mid.b.x, 0.0, 1e-16) && close(mid.b.z, 0.0, 1e-16));
        for (a, s) in sched.samples().iter().zip(&cd.samples) {
            assert!(close(s.b.y, a.rate, 1e-14));
            // rate channel carries θ̈
            assert!(close(s.rate.unwrap().y, a.accel, 1e-14));
        }
    }

    #[test]
    fn static_field_has_no_counter_diabatic_term() {
        let b = Vec3::new(0.1, 0.0, 0.2);
        assert_eq!(counter_diabatic(&b, &Vec3::zeros(), 0.0).unwrap(), Vec3::zeros());
    }

    #[test]
    fn counter_diabatic_rejects_closed_gap() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 101).unwrap();
        let r = reference_field_ssh(&sched, OMEGA, OMEGA).unwrap();
        assert!(matches!(counter_diabatic_field(&r), Err(Error::GapClosure { .. })));
    }

    #[test]
    fn general_form_special_cases() {
        assert_eq!(counter_diabatic_general(1.234, 0.2, 0.0, 0.0), Vec3::new(0.0, 0.2, 0.0));
        let b = counter_diabatic_general(PI / 2.0, 0.0, 0.0, 0.1);
        assert!(close(b.x, 0.0, 1e-17) && close(b.y, 0.0, 1e-17) && close(b.z, 0.1, 1e-16));
        assert_eq!(counter_diabatic_general(0.7, 0.0, 0.3, 0.0), Vec3::zeros());
    }

    #[test]
    fn ssh_cross_product_matches_angle_form() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 4001).unwrap();
        let r = reference_field_ssh(&sched, 0.6 * OMEGA, OMEGA).unwrap();
        let cd = counter_diabatic_field(&r).unwrap();
        let g = r.geometry;
        for (a, s) in sched.samples().iter().zip(&cd.samples) {
            let q = g.polar(a).unwrap();
            let angle_form = counter_diabatic_general(q.value, q.rate, 0.0, 0.0);
            assert!((angle_form - s.b).amax() < 1e-10);
        }
        // θ = π/2 sample: B0 = (Ω2, 0, 0.6 Ω2)
        let mid = &sched.samples()[2000];
        assert!(close(mid.theta, PI / 2.0, 1e-14));
        let q = g.polar(mid).unwrap();
        assert!(close(q.value, (1.0f64).atan2(0.6), 1e-14));
    }

    #[test]
    fn drag_transfer_closed_form_values() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 15.0, 3001).unwrap();
        let d = drag_field_transfer(&sched, OMEGA, DELTA2).unwrap();
        let first = d.samples[0].b;
        // 2θ̈(0)/(4Δ2) with θ̈(0) = π³/450
        assert!(close(first.x, -0.027_415_567_780_803_77, 1e-12));
        assert_eq!(first.y, 0.0);
        let last = d.samples[3000].b;
        assert!(close(last.x, 0.027_415_567_780_803_77, 1e-12));
        assert!(close(last.y, 0.0, 1e-15));
        let mid = d.samples[1500].b;
        assert!(close(mid.x, 0.0, 1e-15) && close(mid.y, 0.0, 1e-15));
    }

    #[test]
    fn drag_requires_hanning() {
        let sched = AngleSchedule::new(ScheduleKind::Linear, 15.0, 11).unwrap();
        assert!(matches!(drag_field_transfer(&sched, OMEGA, DELTA2), Err(Error::ConstraintViolation(_))));
        assert!(matches!(drag_field_ssh(&sched, 0.0, OMEGA, DELTA2), Err(Error::ConstraintViolation(_))));
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 15.0, 11).unwrap();
        assert!(drag_field_transfer(&sched, OMEGA, 0.0).is_err());
    }

    #[test]
    fn drag_ssh_rejects_transition_point() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 101).unwrap();
        assert!(matches!(drag_field_ssh(&sched, OMEGA, OMEGA, DELTA2), Err(Error::GapClosure { .. })));
    }

    #[test]
    fn drag_ssh_closed_form_matches_generic_solution() {
        for alpha in [0.0, 0.3, 0.6, 1.4] {
            let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 801).unwrap();
            let closed = drag_field_ssh(&sched, alpha * OMEGA, OMEGA, DELTA2).unwrap();
            let sta = sta_field(&sched, RotatingField::ssh(alpha * OMEGA, OMEGA).unwrap()).unwrap();
            let generic = drag_correction(&sta, DELTA2).unwrap();
            for (a, b) in closed.points.iter().zip(&generic.points) {
                assert!((a.field - b.field).amax() < 1e-13);
                assert!(crate::linalg::max_abs_diff(&a.generator(), &b.generator()) < 1e-13);
                assert!(close(a.shifts.qubit, b.shifts.qubit, 1e-14));
                assert!(close(a.shifts.level2_first, b.shifts.level2_first, 1e-14));
                assert!(close(a.shifts.level2_zeroth, b.shifts.level2_zeroth, 1e-14));
            }
        }
    }

    #[test]
    fn drag_ssh_reduces_to_transfer_at_zero_offset() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 15.0, 301).unwrap();
        let ssh = drag_field_ssh(&sched, 0.0, OMEGA, DELTA2).unwrap();
        let transfer = drag_field_transfer(&sched, OMEGA, DELTA2).unwrap();
        for ((p, f), a) in ssh.points.iter().zip(&transfer.samples).zip(sched.samples()) {
            assert!((p.field - f.b).amax() < 1e-14);
            assert!(close(p.first.m12[0], a.rate / (SQRT_2 * DELTA2), 1e-15));
            assert!(close(p.first.m12[1], -OMEGA * a.theta.sin() / (SQRT_2 * DELTA2), 1e-15));
        }
    }

    #[test]
    fn first_order_special_solution_ratio() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 201).unwrap();
        let d = drag_field_ssh(&sched, 0.6 * OMEGA, OMEGA, DELTA2).unwrap();
        let ratio = 1.0 / (2.0 * SQRT_2);
        for p in &d.points {
            assert!(close(p.first.m01[0], ratio * p.first.m12[0], 1e-16));
            assert!(close(p.first.m01[1], ratio * p.first.m12[1], 1e-16));
        }
    }

    #[test]
    fn endpoint_exponents() {
        let sched = AngleSchedule::new(ScheduleKind::Hanning, 20.0, 201).unwrap();
        let d = drag_field_ssh(&sched, 0.6 * OMEGA, OMEGA, DELTA2).unwrap();
        for p in [d.points[0], d.points[200]] {
            assert!(p.first.m01.iter().chain(&p.first.m12).all(|x| x.abs() < 1e-15));
            assert!(p.second.m02.iter().all(|x| x.abs() < 1e-15));
            assert!(close(p.second.m12[0], 0.0, 1e-15));
            // M⁽²⁾₁₂;y = B_d;x/(√2Δ2) keeps the endpoint curvature θ̈q of the path
            assert!(close(p.second.m12[1], p.field.x / (SQRT_2 * DELTA2), 1e-16));
            assert!(p.second.m12[1].abs() > 1e-3);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-4;
        for kind in [ScheduleKind::Linear, ScheduleKind::Hanning, ScheduleKind::VirtualHanning { m: 7, total: 41 }] {
            let p = AngleProfile::new(kind, 15.0).unwrap();
            for k in 1..30 {
                let t = 0.5 * k as f64;
                let (a, b, c) = (p.at(t - h), p.at(t), p.at(t + h));
                let rate = (c.theta - a.theta) / (2.0 * h);
                let accel = (c.rate - a.rate) / (2.0 * h);
                assert!((rate - b.rate).abs() <= 1e-5 * b.rate.abs().max(1e-3));
                assert!((accel - b.accel).abs() <= 1e-5 * b.accel.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn synthesis_of_constant_fields() {
        let geometry = RotatingField::transfer(OMEGA).unwrap();
        let grid = |b: Vec3| FieldSchedule {
            label: FieldLabel::Total,
            geometry,
            samples: (0..11).map(|k| FieldSample { t: k as f64, b, rate: None, accel: None }).collect(),
        };
        let x = synthesize_drive(&grid(Vec3::new(OMEGA, 0.0, 0.0)), 1.0).unwrap();
        for s in &x.samples {
            assert_eq!((s.envelope, s.relative_phase, s.detuning_phase, s.drive_phase), (OMEGA, 0.0, 0.0, 0.0));
        }
        let z = synthesize_drive(&grid(Vec3::new(0.0, 0.0, 0.3)), 1.0).unwrap();
        for s in &z.samples {
            assert_eq!(s.envelope, 0.0);
            assert!(close(s.detuning_phase, 0.3 * s.t, 1e-14));
        }
    }

    #[test]
    fn synthesis_rejects_irregular_grid() {
        let geometry = RotatingField::transfer(OMEGA).unwrap();
        let samples = [0.0, 1.0, 2.5]
            .iter()
            .map(|&t| FieldSample { t, b: Vec3::zeros(), rate: None, accel: None })
            .collect();
        let f = FieldSchedule { label: FieldLabel::Total, geometry, samples };
        assert!(synthesize_drive(&f, 1.0).is_err());
    }

    #[test]
    fn protocol_point_agrees_with_sampled_constructions() {
        let profile = AngleProfile::new(ScheduleKind::Hanning, 15.0).unwrap();
        let geometry = RotatingField::transfer(mhz(30.0)).unwrap();
        let proto = StaProtocol::new(profile, geometry).unwrap().with_drag(mhz(-200.0)).unwrap();
        let sched = AngleSchedule::from_profile(profile, 151).unwrap();
        let drag = drag_field_transfer(&sched, mhz(30.0), mhz(-200.0)).unwrap();
        for (a, d) in sched.samples().iter().zip(&drag.samples) {
            let p = proto.point(a.t);
            assert!((p.drag.unwrap().field - d.b).amax() < 1e-14);
            assert!(close(p.counter_diabatic.y, a.rate, 1e-15));
        }
        assert!(StaProtocol::new(profile, RotatingField::ssh(1.0, 1.0).unwrap()).is_err());
        let linear = AngleProfile::new(ScheduleKind::Linear, 15.0).unwrap();
        assert!(StaProtocol::new(linear, geometry).unwrap().with_drag(-1.0).is_err());
    }
}
