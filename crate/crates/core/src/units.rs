//! Unit conversions and the device/protocol defaults.

use core::f64::consts::PI;

/// Converts an ordinary frequency f in MHz (as in "Ω/2π = 30 MHz") to rad/ns.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e-3
}

/// Converts an ordinary frequency f in GHz to rad/ns.
pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f
}

pub mod defaults {
    /// Drive amplitude Ω/2π (also the intercell hopping Ω2/2π), MHz.
    pub const DRIVE_MHZ: f64 = 30.0;
    /// Anharmonicity Δ2/2π, MHz.
    pub const ANHARMONICITY_MHZ: f64 = -200.0;
    /// Qubit transition ω10/2π, GHz.
    pub const QUBIT_GHZ: f64 = 5.7;
    pub const T1_NS: f64 = 310.0;
    pub const T2_STAR_NS: f64 = 120.0;
    pub const TRANSFER_DURATION_NS: f64 = 15.0;
    pub const SSH_DURATION_NS: f64 = 20.0;
    /// Number of probed quasi-momenta.
    pub const MOMENTUM_POINTS: u32 = 41;
    pub const RECORD_INTERVAL_NS: f64 = 0.5;
    pub const TIME_STEP_NS: f64 = 0.005;
    pub const LAB_TIME_STEP_NS: f64 = 2e-4;
    pub const SHOTS: u32 = 3000;
    /// Calibration tunnelling probabilities at the two measurement biases.
    pub const CALIBRATION_PRIMARY: [f64; 3] = [0.065, 0.925, 0.93];
    pub const CALIBRATION_SECONDARY: [f64; 3] = [0.003, 0.093, 0.831];
}
