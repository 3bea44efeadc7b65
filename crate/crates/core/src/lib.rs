//! Numerical core for fast adiabatic state transfer in a driven anharmonic
//! (three-level) qubit.
//!
//! The crate covers four layers:
//!
//! * [`fields`]: polar-angle schedules, the reference / counter-diabatic /
//!   DRAG effective fields, and synthesis into drive quadratures.
//! * [`quantum`] and [`dynamics`]: 3×3 operator algebra, frame transforms, and
//!   fixed-step RK4 propagation of the von Neumann and Lindblad equations.
//! * [`tomography`]: tunnelling-probability readout, pre-rotation state
//!   tomography and the coherence approximation used for the D-frame.
//! * [`ssh`]: the SSH two-band model, its winding/Chern estimators and the
//!   finite open/periodic lattice.
//!
//! [`experiment`] wires those layers into the transfer, trajectory and
//! topological-transition pipelines. Everything here is `no_std` + `alloc`;
//! file formats and the command line live in the `stadrag` crate.
//!
//! Units: ħ = 1, time in ns, fields and energies in rad/ns.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod linalg;
pub mod quantum;
pub mod ssh;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{Mat2, Mat3, C64};
pub use nalgebra;
