//! Readout emulation and state tomography.
//!
//! A measurement setting applies an exact pre-rotation unitary, reads the
//! tunnelling probabilities at the two current biases and inverts the
//! calibration matrix back to populations. In sampled mode each tunnelling
//! probability is replaced by a binomial shot count before inversion.

use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_expm, re, Mat3, C64, I, ONE};
use crate::quantum::{DensityMatrix3, Frame};

/// Largest calibration condition number accepted by [`readout_invert3`].
pub const MAX_CONDITION: f64 = 1e6;

/// Tunnelling probabilities of |0⟩, |1⟩, |2⟩ at the two measurement biases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTable {
    pub primary: [f64; 3],
    pub secondary: [f64; 3],
}

impl Default for CalibrationTable {
    fn default() -> Self {
        Self {
            primary: crate::units::defaults::CALIBRATION_PRIMARY,
            secondary: crate::units::defaults::CALIBRATION_SECONDARY,
        }
    }
}

impl CalibrationTable {
    pub fn new(primary: [f64; 3], secondary: [f64; 3]) -> Result<Self> {
        if primary.iter().chain(&secondary).any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidArgument("calibration probabilities must lie in [0, 1]"));
        }
        Ok(Self { primary, secondary })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (f, g) = (self.primary, self.secondary);
        Matrix3::new(f[0], f[1], f[2], g[0], g[1], g[2], 1.0, 1.0, 1.0)
    }

    /// 2-norm condition number σ_max/σ_min of [[f], [f′], [1, 1, 1]].
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn row(&self, bias: ReadoutBias) -> [f64; 3] {
        match bias {
            ReadoutBias::Primary => self.primary,
            ReadoutBias::Secondary => self.secondary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutBias {
    /// I_m: separates |0⟩ from the excited levels.
    Primary,
    /// I′_m: separates |2⟩ from the lower levels.
    Secondary,
}

/// Tunnelling probability P·f at one bias.
pub fn readout_forward(p: &[f64; 3], table: &CalibrationTable, bias: ReadoutBias) -> f64 {
    let f = table.row(bias);
    p[0] * f[0] + p[1] * f[1] + p[2] * f[2]
}

/// Raw linear-inversion output and its projection onto the simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion<const N: usize> {
    pub raw: [f64; N],
    pub clamped: [f64; N],
    /// Largest |forward(raw) − measured| over the measured channels.
    pub residual: f64,
}

/// Negative entries set to zero, then renormalised to unit sum.
pub fn clamp_to_simplex<const N: usize>(raw: &[f64; N]) -> [f64; N] {
    let mut out = raw.map(|x| x.max(0.0));
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    } else {
        out = [1.0 / N as f64; N];
    }
    out
}

/// Two-level inversion of P_t = P0 f0 + P1 f1 with P0 + P1 = 1.
pub fn readout_invert2(pt: f64, f0: f64, f1: f64) -> Result<Inversion<2>> {
    let det = f1 - f0;
    if det.abs() < 1e-12 {
        return Err(Error::InvalidCalibration { condition: f64::INFINITY });
    }
    let p1 = (pt - f0) / det;
    let raw = [1.0 - p1, p1];
    let residual = (raw[0] * f0 + raw[1] * f1 - pt).abs();
    Ok(Inversion { raw, clamped: clamp_to_simplex(&raw), residual })
}

/// Three-level inversion from the tunnelling probabilities at both biases.
pub fn readout_invert3(pt: f64, pt_secondary: f64, table: &CalibrationTable) -> Result<Inversion<3>> {
    let condition = table.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::InvalidCalibration { condition });
    }
    let m = table.matrix();
    let inv = m.try_inverse().ok_or(Error::InvalidCalibration { condition })?;
    let p = inv * Vector3::new(pt, pt_secondary, 1.0);
    let raw = [p[0], p[1], p[2]];
    let residual = (readout_forward(&raw, table, ReadoutBias::Primary) - pt)
        .abs()
        .max((readout_forward(&raw, table, ReadoutBias::Secondary) - pt_secondary).abs());
    Ok(Inversion { raw, clamped: clamp_to_simplex(&raw), residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomographyMode {
    /// Tunnelling probabilities used as computed.
    Exact,
    /// Each tunnelling probability replaced by a binomial draw of `shots`.
    Sampled { shots: u32, seed: u64 },
}

/// Readout chain: calibration plus noise model.
#[derive(Debug, Clone)]
pub struct Readout {
    table: CalibrationTable,
    mode: TomographyMode,
    rng: Option<ChaCha8Rng>,
}

impl Readout {
    pub fn new(table: CalibrationTable, mode: TomographyMode) -> Result<Self> {
        let condition = table.condition_number();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::InvalidCalibration { condition });
        }
        let rng = match mode {
            TomographyMode::Exact => None,
            TomographyMode::Sampled { shots: 0, .. } => {
                return Err(Error::InvalidArgument("sampled tomography needs at least one shot"))
            }
            TomographyMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Ok(Self { table, mode, rng })
    }

    pub fn exact() -> Self {
        Self::new(CalibrationTable::default(), TomographyMode::Exact).expect("default calibration is well conditioned")
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    pub fn mode(&self) -> TomographyMode {
        self.mode
    }

    fn observe(&mut self, probability: f64) -> f64 {
        match (self.mode, self.rng.as_mut()) {
            (TomographyMode::Sampled { shots, .. }, Some(rng)) => {
                let p = probability.clamp(0.0, 1.0);
                let draw = Binomial::new(shots as u64, p).expect("probability clamped to [0, 1]").sample(rng);
                draw as f64 / shots as f64
            }
            _ => probability,
        }
    }

    /// Populations read out from ρ through both biases and the three-level
    /// inversion (clamped to the simplex).
    pub fn measure_populations(&mut self, rho: &Mat3) -> Result<Inversion<3>> {
        let p = [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re];
        let pt = self.observe(readout_forward(&p, &self.table, ReadoutBias::Primary));
        let pt2 = self.observe(readout_forward(&p, &self.table, ReadoutBias::Secondary));
        readout_invert3(pt, pt2, &self.table)
    }

    fn rotated_difference(&mut self, rho: &Mat3, u: &Mat3, upper: usize, lower: usize) -> Result<f64> {
        let rotated = u * rho * u.adjoint();
        let p = self.measure_populations(&rotated)?.clamped;
        Ok(p[upper] - p[lower])
    }
}

/// Pair of levels addressed by a pre-rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelPair {
    P01,
    P12,
    P02,
}

impl LevelPair {
    pub fn indices(&self) -> (usize, usize) {
        match self {
            LevelPair::P01 => (0, 1),
            LevelPair::P12 => (1, 2),
            LevelPair::P02 => (0, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// σ_mn;x = |m⟩⟨n| + |n⟩⟨m|, σ_mn;y = −i|m⟩⟨n| + i|n⟩⟨m|.
pub fn pair_operator(pair: LevelPair, axis: Axis) -> Mat3 {
    let (m, n) = pair.indices();
    let mut s = Mat3::zeros();
    match axis {
        Axis::X => {
            s[(m, n)] = ONE;
            s[(n, m)] = ONE;
        }
        Axis::Y => {
            s[(m, n)] = -I;
            s[(n, m)] = I;
        }
    }
    s
}

/// U_mn;ζ(θ) = exp(−iθσ_mn;ζ/2).
pub fn pair_rotation(pair: LevelPair, axis: Axis, angle: f64) -> Mat3 {
    hermitian_expm(&pair_operator(pair, axis), 0.5 * angle).expect("pair operators are Hermitian")
}

/// Qubit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Tr(ρσ) on the {|0⟩, |1⟩} block.
    pub fn from_state(rho: &Mat3) -> Self {
        let r = rho[(0, 1)];
        Self { x: 2.0 * r.re, y: -2.0 * r.im, z: rho[(0, 0)].re - rho[(1, 1)].re }
    }

    /// |r|.
    pub fn purity(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Off-diagonal pair (x_mn, y_mn) with ρ_mn = (x_mn − i y_mn)/2.
pub fn qst_qutrit_offdiag(rho: &DensityMatrix3, pair: LevelPair, readout: &mut Readout) -> Result<(f64, f64)> {
    let r = rho.entries();
    match pair {
        LevelPair::P01 | LevelPair::P12 => {
            let (m, n) = pair.indices();
            let mut diff = |axis, angle| readout.rotated_difference(r, &pair_rotation(pair, axis, angle), m, n);
            let x = 0.5 * (diff(Axis::Y, -FRAC_PI_2)? - diff(Axis::Y, FRAC_PI_2)?);
            let y = 0.5 * (diff(Axis::X, FRAC_PI_2)? - diff(Axis::X, -FRAC_PI_2)?);
            Ok((x, y))
        }
        LevelPair::P02 => {
            let flip = pair_rotation(LevelPair::P01, Axis::X, PI);
            let vx = pair_rotation(LevelPair::P12, Axis::X, FRAC_PI_2) * flip;
            let vy = pair_rotation(LevelPair::P12, Axis::Y, FRAC_PI_2) * flip;
            let x = readout.rotated_difference(r, &vx, 1, 2)?;
            let y = readout.rotated_difference(r, &vy, 1, 2)?;
            Ok((x, y))
        }
    }
}

/// Qubit-block tomography. x and y come from ±π/2 pre-rotations about y and
/// x; z comes from the direct readout averaged with a readout after a 0-1 π
/// flip, so each projection rests on two measurement settings.
pub fn qst_qubit(rho: &DensityMatrix3, readout: &mut Readout) -> Result<BlochVector> {
    Ok(qst_record(rho, readout)?.bloch)
}

/// Qubit tomography plus the measured populations, as needed to complete ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstRecord {
    pub bloch: BlochVector,
    pub populations: [f64; 3],
}

pub fn qst_record(rho: &DensityMatrix3, readout: &mut Readout) -> Result<QstRecord> {
    let r = rho.entries();
    let direct = readout.measure_populations(r)?.clamped;
    let flip = pair_rotation(LevelPair::P01, Axis::X, PI);
    let flipped = readout.measure_populations(&(flip * r * flip.adjoint()))?.clamped;
    let populations = [
        0.5 * (direct[0] + flipped[1]),
        0.5 * (direct[1] + flipped[0]),
        0.5 * (direct[2] + flipped[2]),
    ];
    let (x, y) = qst_qutrit_offdiag(rho, LevelPair::P01, readout)?;
    Ok(QstRecord { bloch: BlochVector { x, y, z: populations[0] - populations[1] }, populations })
}

/// (ρ02, ρ12) ≈ (√(P0P2), √(P1P2)).
pub fn coherence_approximation(p: &[f64; 3]) -> (f64, f64) {
    ((p[0] * p[2]).max(0.0).sqrt(), (p[1] * p[2]).max(0.0).sqrt())
}

/// ρ assembled from measured populations and ρ01, with the leakage
/// coherences filled in by [`coherence_approximation`].
pub fn approximate_density(record: &QstRecord) -> DensityMatrix3 {
    let p = record.populations;
    let (r02, r12) = coherence_approximation(&p);
    let r01 = C64::new(0.5 * record.bloch.x, -0.5 * record.bloch.y);
    let m = Mat3::new(
        re(p[0]),
        r01,
        re(r02),
        r01.conj(),
        re(p[1]),
        re(r12),
        re(r02),
        re(r12),
        re(p[2]),
    );
    DensityMatrix3::new_unchecked(m, Frame::Rotating)
}

/// θq = arccos[z_D / √(x_D² + z_D²)], discarding y_D.
pub fn experimental_thetaq(xd: f64, zd: f64) -> Result<f64> {
    let r = xd.hypot(zd);
    if r < 1e-9 {
        return Err(Error::UndefinedAngle("x and z projections both vanish"));
    }
    Ok((zd / r).clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use core::f64::consts::SQRT_2;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn table() -> CalibrationTable {
        CalibrationTable::default()
    }

    fn random_state(a: &[f64]) -> DensityMatrix3 {
        let m = Mat3::from_fn(|i, j| C64::new(a[3 * i + j], a[9 + 3 * i + j]));
        let p = m * m.adjoint();
        DensityMatrix3::new(p / p.trace(), Frame::Rotating).unwrap()
    }

    #[test]
    fn forward_examples() {
        let t = table();
        assert_eq!(readout_forward(&[1.0, 0.0, 0.0], &t, ReadoutBias::Primary), 0.065);
        assert_eq!(readout_forward(&[0.0, 1.0, 0.0], &t, ReadoutBias::Primary), 0.925);
        assert!(close(readout_forward(&[0.5, 0.5, 0.0], &t, ReadoutBias::Primary), 0.495, 1e-15));
    }

    #[test]
    fn invert2_examples() {
        let inv = |pt| readout_invert2(pt, 0.065, 0.925).unwrap().clamped;
        let a = inv(0.065);
        assert!(close(a[0], 1.0, 1e-15) && close(a[1], 0.0, 1e-15));
        let b = inv(0.925);
        assert!(close(b[0], 0.0, 1e-15) && close(b[1], 1.0, 1e-15));
        let c = inv(0.495);
        assert!(close(c[0], 0.5, 1e-15) && close(c[1], 0.5, 1e-15));
        assert!(matches!(readout_invert2(0.5, 0.3, 0.3), Err(Error::InvalidCalibration { .. })));
        let noisy = readout_invert2(0.95, 0.065, 0.925).unwrap();
        assert!(noisy.raw[0] < 0.0);
        assert_eq!(noisy.clamped, [0.0, 1.0]);
    }

    #[test]
    fn invert3_examples() {
        let t = table();
        let a = readout_invert3(0.065, 0.003, &t).unwrap().raw;
        assert!(close(a[0], 1.0, 1e-12) && close(a[1], 0.0, 1e-12) && close(a[2], 0.0, 1e-12));
        let b = readout_invert3(0.93, 0.831, &t).unwrap().raw;
        assert!(close(b[0], 0.0, 1e-12) && close(b[1], 0.0, 1e-12) && close(b[2], 1.0, 1e-12));
        let singular = CalibrationTable::new([0.1, 0.5, 0.5], [0.0, 0.2, 0.2]).unwrap();
        assert!(matches!(readout_invert3(0.1, 0.1, &singular), Err(Error::InvalidCalibration { .. })));
        assert!(CalibrationTable::new([1.1, 0.5, 0.5], [0.0, 0.2, 0.3]).is_err());
        assert!(t.condition_number() < 1e3);
    }

    #[test]
    fn coherence_approximation_examples() {
        assert_eq!(coherence_approximation(&[0.3, 0.7, 0.0]), (0.0, 0.0));
        let (a, b) = coherence_approximation(&[0.5, 0.45, 0.05]);
        assert!(close(a, 0.158_113_883_008_418_98, 1e-15) && close(b, 0.15, 1e-15));
        let s = 1.0 / SQRT_2;
        let rho = DensityMatrix3::pure([re(s), re(0.0), re(s)], Frame::Rotating).unwrap();
        let (a, _) = coherence_approximation(&rho.populations());
        assert!(close(a, rho.get(0, 2).re, 1e-15));
    }

    #[test]
    fn thetaq_examples() {
        assert_eq!(experimental_thetaq(0.0, 1.0).unwrap(), 0.0);
        assert!(close(experimental_thetaq(1.0, 0.0).unwrap(), FRAC_PI_2, 1e-15));
        assert!(close(experimental_thetaq(0.1, -0.9).unwrap(), 3.030_935_432_415_898_6, 1e-12));
        assert!(matches!(experimental_thetaq(1e-10, -1e-10), Err(Error::UndefinedAngle(_))));
    }

    #[test]
    fn qubit_qst_examples() {
        let mut r = Readout::exact();
        let b = qst_qubit(&DensityMatrix3::ground(), &mut r).unwrap();
        assert!(close(b.x, 0.0, 1e-12) && close(b.y, 0.0, 1e-12) && close(b.z, 1.0, 1e-12));
        let s = 1.0 / SQRT_2;
        let plus = DensityMatrix3::pure([re(s), re(s), re(0.0)], Frame::Rotating).unwrap();
        let b = qst_qubit(&plus, &mut r).unwrap();
        assert!(close(b.x, 1.0, 1e-12) && close(b.y, 0.0, 1e-12) && close(b.z, 0.0, 1e-12));
    }

    #[test]
    fn diagonal_states_have_no_coherence() {
        let mut r = Readout::exact();
        let rho = DensityMatrix3::new(Mat3::from_diagonal(&Vector3::new(re(0.5), re(0.3), re(0.2))), Frame::Rotating).unwrap();
        for pair in [LevelPair::P01, LevelPair::P12, LevelPair::P02] {
            let (x, y) = qst_qutrit_offdiag(&rho, pair, &mut r).unwrap();
            assert!(x.abs() < 1e-12 && y.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_two_products_read_the_zero_two_coherence() {
        // ρ02 = (a − i b)/2 on a valid mixed state
        let (a, b) = (0.3, -0.2);
        let mut m = Mat3::from_diagonal(&Vector3::new(re(0.5), re(0.1), re(0.4)));
        m[(0, 2)] = C64::new(0.5 * a, -0.5 * b);
        m[(2, 0)] = m[(0, 2)].conj();
        let rho = DensityMatrix3::new(m, Frame::Rotating).unwrap();
        let (x, y) = qst_qutrit_offdiag(&rho, LevelPair::P02, &mut Readout::exact()).unwrap();
        assert!(close(x, a, 1e-12) && close(y, b, 1e-12));
        let flip = pair_rotation(LevelPair::P01, Axis::X, PI);
        let v = pair_rotation(LevelPair::P12, Axis::X, FRAC_PI_2) * flip;
        let p = (v * m * v.adjoint()).map(|z| z.re);
        assert!(close(p[(0, 0)], 0.1, 1e-12));
        assert!(close(p[(1, 1)], 0.5 * (0.9 + a), 1e-12));
    }

    #[test]
    fn pauli_rotation_matches_qubit_form() {
        let u = pair_rotation(LevelPair::P01, Axis::Y, -FRAC_PI_2);
        let c = (0.25 * PI).cos();
        let expected = Mat3::new(re(c), re(c), re(0.0), re(-c), re(c), re(0.0), re(0.0), re(0.0), ONE);
        assert!(max_abs_diff(&u, &expected) < 1e-15);
    }

    fn sampled_errors(rho: &DensityMatrix3, shots: u32, trials: u64) -> alloc::vec::Vec<[f64; 3]> {
        let exact = BlochVector::from_state(rho.entries());
        (0..trials)
            .map(|seed| {
                let mut r = Readout::new(table(), TomographyMode::Sampled { shots, seed }).unwrap();
                let b = qst_qubit(rho, &mut r).unwrap();
                [b.x - exact.x, b.y - exact.y, b.z - exact.z]
            })
            .collect()
    }

    #[test]
    fn sampled_mode_converges() {
        let rho = DensityMatrix3::pure([re(0.8), C64::new(0.36, 0.48), re(0.0)], Frame::Rotating).unwrap();
        let trials = 500;
        let errs = sampled_errors(&rho, 3000, trials);
        for k in 0..3 {
            let within = errs.iter().filter(|e| e[k].abs() <= 0.05).count();
            assert!(within as f64 >= 0.99 * trials as f64, "projection {k}: {within}/{trials}");
        }
        // quartering the shots doubles the spread
        let rms = |e: &[[f64; 3]], k: usize| (e.iter().map(|v| v[k] * v[k]).sum::<f64>() / e.len() as f64).sqrt();
        let coarse = sampled_errors(&rho, 750, trials);
        for k in 0..3 {
            let ratio = rms(&coarse, k) / rms(&errs, k);
            assert!((1.7..2.3).contains(&ratio), "projection {k}: ratio {ratio}");
        }
        let mut a = Readout::new(table(), TomographyMode::Sampled { shots: 3000, seed: 7 }).unwrap();
        let mut b = Readout::new(table(), TomographyMode::Sampled { shots: 3000, seed: 7 }).unwrap();
        assert_eq!(qst_qubit(&rho, &mut a).unwrap(), qst_qubit(&rho, &mut b).unwrap());
        assert!(Readout::new(table(), TomographyMode::Sampled { shots: 0, seed: 1 }).is_err());
    }

    #[test]
    fn approximate_density_keeps_measured_entries() {
        let rec = QstRecord { bloch: BlochVector::new(0.2, -0.4, 0.1), populations: [0.5, 0.45, 0.05] };
        let rho = approximate_density(&rec);
        assert_eq!(rho.get(0, 1), C64::new(0.1, 0.2));
        assert!(close(rho.get(1, 2).re, 0.15, 1e-15));
        assert_eq!(BlochVector::from_state(rho.entries()).x, 0.2);
    }

    proptest! {
        #[test]
        fn readout_round_trip(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            prop_assume!(a + b + c > 1e-3);
            let s = a + b + c;
            let p = [a / s, b / s, c / s];
            let t = table();
            let inv = readout_invert3(
                readout_forward(&p, &t, ReadoutBias::Primary),
                readout_forward(&p, &t, ReadoutBias::Secondary),
                &t,
            ).unwrap();
            for k in 0..3 {
                prop_assert!((inv.raw[k] - p[k]).abs() < 1e-12);
                prop_assert!(inv.clamped[k] >= 0.0);
            }
            prop_assert!((inv.clamped.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(inv.residual < 1e-12);
        }

        #[test]
        fn exact_qst_matches_trace_formula(a in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let rho = random_state(&a);
            let mut r = Readout::exact();
            let b = qst_qubit(&rho, &mut r).unwrap();
            let e = BlochVector::from_state(rho.entries());
            prop_assert!((b.x - e.x).abs() < 1e-12 && (b.y - e.y).abs() < 1e-12 && (b.z - e.z).abs() < 1e-12);
            for pair in [LevelPair::P01, LevelPair::P12, LevelPair::P02] {
                let (m, n) = pair.indices();
                let (x, y) = qst_qutrit_offdiag(&rho, pair, &mut r).unwrap();
                let z = rho.get(m, n);
                prop_assert!((x - 2.0 * z.re).abs() < 1e-12 && (y + 2.0 * z.im).abs() < 1e-12);
            }
            prop_assert!(b.purity() <= 1.0 + 1e-6);
        }

        #[test]
        fn thetaq_scale_invariant(x in -1.0f64..1.0, z in -1.0f64..1.0, k in 0.01f64..10.0) {
            prop_assume!(x.hypot(z) > 1e-6);
            let a = experimental_thetaq(x, z).unwrap();
            let b = experimental_thetaq(k * x, k * z).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=PI).contains(&a));
        }
    }
}
