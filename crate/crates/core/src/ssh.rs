//! SSH chain: bulk bands, the θq curve and its topological invariants, and
//! finite-lattice spectra.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix2};
#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, ZERO};

/// Hopping amplitudes. Ω1 is twice the intracell hopping, Ω2 twice the intercell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SshParams {
    pub omega1: f64,
    pub omega2: f64,
}

impl SshParams {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        if !(omega2 > 0.0) {
            return Err(Error::InvalidArgument("intercell amplitude must be positive"));
        }
        if !(omega1 >= 0.0) {
            return Err(Error::InvalidArgument("intracell amplitude must be non-negative"));
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn from_ratio(alpha: f64, omega2: f64) -> Result<Self> {
        Self::new(alpha * omega2, omega2)
    }

    pub fn alpha(&self) -> f64 {
        self.omega1 / self.omega2
    }
}

/// H(θ) = ½[[0, Ω1 + Ω2e^{−iθ}], [Ω1 + Ω2e^{iθ}, 0]].
pub fn bulk_hamiltonian(theta: f64, p: &SshParams) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let upper = C64::new(0.5 * (p.omega1 + p.omega2 * c), -0.5 * p.omega2 * s);
    Mat2::new(ZERO, upper, upper.conj(), ZERO)
}

/// (E−, E+) = ∓½√(Ω1² + Ω2² + 2Ω1Ω2 cosθ).
pub fn band_energies(theta: f64, p: &SshParams) -> (f64, f64) {
    let e = 0.5 * band_magnitude(theta, p);
    (-e, e)
}

fn band_magnitude(theta: f64, p: &SshParams) -> f64 {
    (p.omega1 * p.omega1 + p.omega2 * p.omega2 + 2.0 * p.omega1 * p.omega2 * theta.cos()).max(0.0).sqrt()
}

/// e^{iθq'} = (Ω1 + Ω2e^{iθ}) / |Ω1 + Ω2e^{iθ}|, the relative phase of the Bloch eigenstates.
pub fn bloch_phase(theta: f64, p: &SshParams) -> Result<C64> {
    let (s, c) = theta.sin_cos();
    let z = C64::new(p.omega1 + p.omega2 * c, p.omega2 * s);
    let r = z.re.hypot(z.im);
    if r < 1e-12 * p.omega2 {
        return Err(Error::UndefinedAngle("gap closes at alpha = 1, theta = pi"));
    }
    Ok(z / r)
}

/// θq = arccos[(α + cosθ)/√(1 + α² + 2α cosθ)] ∈ [0, π].
pub fn theta_q_exact(theta: f64, alpha: f64) -> Result<f64> {
    let (s, c) = theta.sin_cos();
    let bz = alpha + c;
    let r = s.hypot(bz);
    if r < 1e-12 {
        return Err(Error::UndefinedAngle("gap closes at alpha = 1, theta = pi"));
    }
    if alpha == 1.0 {
        return Ok(0.5 * theta.rem_euclid(2.0 * PI));
    }
    Ok(s.abs().atan2(bz))
}

/// θ_k = (π/2)[1 − cos(πk/(n−1))]: a uniform clock pushed through the Hanning window.
pub fn hanning_image_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| FRAC_PI_2 * (1.0 - (PI * k as f64 / (n - 1) as f64).cos())).collect()
}

/// θ_k = πk/(n−1).
pub fn even_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect()
}

/// Grid end used when α sits on the transition point.
pub const TRANSITION_CUTOFF: f64 = 1e-6;

/// Exact (θ, θq) curve on `grid`. For |α − 1| < 1e−6 the grid is clipped
/// at π − 1e−6 to step around the closed gap.
pub fn exact_curve(alpha: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let limit = if (alpha - 1.0).abs() < TRANSITION_CUTOFF { PI - TRANSITION_CUTOFF } else { PI };
    grid.iter()
        .map(|&theta| {
            let t = theta.min(limit);
            Ok((t, theta_q_exact(t, alpha)?))
        })
        .collect()
}

/// Winding, Zak phase and Chern estimates from a sampled θq(θ) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyResult {
    pub samples: Vec<(f64, f64)>,
    /// (θq(π) − θq(0))/π.
    pub nu_endpoint: f64,
    /// Trapezoid rule of e_y·(r × dr) over the mirrored full circle, / 2π.
    pub nu_integral: f64,
    /// γ = ν_endpoint π.
    pub zak_phase: f64,
    pub chern: f64,
}

impl TopologyResult {
    pub fn from_curve(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a topology curve needs at least two samples"));
        }
        let q: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let nu_endpoint = winding_endpoint(&q);
        Ok(Self {
            nu_integral: winding_integral(&q),
            zak_phase: nu_endpoint * PI,
            chern: chern_number(&q),
            nu_endpoint,
            samples,
        })
    }
}

/// (endpoint, integral) winding estimates.
pub fn winding_number(theta_q: &[f64]) -> (f64, f64) {
    (winding_endpoint(theta_q), winding_integral(theta_q))
}

pub fn winding_endpoint(theta_q: &[f64]) -> f64 {
    (theta_q[theta_q.len() - 1] - theta_q[0]) / PI
}

/// On the outbound half r = (sin θq, 0, cos θq); the return half mirrors x.
/// Each half contributes Σ e_y·(r_k × r_{k+1}) = Σ sin(θq,k+1 − θq,k), so the
/// normalised loop integral is (1/π) Σ sin Δθq.
pub fn winding_integral(theta_q: &[f64]) -> f64 {
    theta_q.windows(2).map(|w| (w[1] - w[0]).sin()).sum::<f64>() / PI
}

/// ½ Σ Δθq sin(θq midpoint).
pub fn chern_number(theta_q: &[f64]) -> f64 {
    0.5 * theta_q.windows(2).map(|w| (w[1] - w[0]) * (0.5 * (w[1] + w[0])).sin()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// 2N×2N real hopping matrix. Basis index 2n is (n, A) and 2n + 1 is (n, B).
pub fn lattice_hamiltonian(n_cells: usize, p: &SshParams, boundary: Boundary) -> Result<DMatrix<f64>> {
    if n_cells < 2 {
        return Err(Error::InvalidArgument("a lattice needs at least two unit cells"));
    }
    let dim = 2 * n_cells;
    let mut h = DMatrix::zeros(dim, dim);
    let mut bond = |i: usize, j: usize, v: f64| {
        h[(i, j)] += v;
        h[(j, i)] += v;
    };
    for n in 0..n_cells {
        bond(2 * n, 2 * n + 1, 0.5 * p.omega1);
        if n + 1 < n_cells {
            bond(2 * (n + 1), 2 * n + 1, 0.5 * p.omega2);
        }
    }
    if boundary == Boundary::Periodic {
        bond(0, dim - 1, 0.5 * p.omega2);
    }
    Ok(h)
}

/// Eigen-decomposition of a finite chain, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpectrum {
    pub n_cells: usize,
    pub boundary: Boundary,
    pub params: SshParams,
    pub eigenvalues: Vec<f64>,
    /// Column k belongs to eigenvalue k.
    pub eigenvectors: DMatrix<f64>,
}

impl LatticeSpectrum {
    pub fn compute(n_cells: usize, p: &SshParams, boundary: Boundary) -> Result<Self> {
        let h = lattice_hamiltonian(n_cells, p, boundary)?;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(2 * n_cells, 2 * n_cells, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self { n_cells, boundary, params: *p, eigenvalues, eigenvectors })
    }

    /// Largest |E_k + E_{2N−1−k}|.
    pub fn chiral_asymmetry(&self) -> f64 {
        let n = self.eigenvalues.len();
        (0..n).map(|k| (self.eigenvalues[k] + self.eigenvalues[n - 1 - k]).abs()).fold(0.0, f64::max)
    }

    /// Largest deviation from the sorted multiset {E±(2πk/N)}.
    pub fn bulk_residual(&self) -> f64 {
        let mut bulk: Vec<f64> = (0..self.n_cells)
            .flat_map(|k| {
                let (lo, hi) = band_energies(2.0 * PI * k as f64 / self.n_cells as f64, &self.params);
                [lo, hi]
            })
            .collect();
        bulk.sort_by(f64::total_cmp);
        bulk.iter().zip(&self.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|e| e.abs() < threshold).count()
    }
}

/// End-localisation of a vector: probability mass in the outer `cells` unit
/// cells at each end.
pub fn end_weights(v: &DVector<f64>, cells: usize) -> (f64, f64) {
    let dim = v.len();
    let norm2 = v.norm_squared();
    let left: f64 = (0..2 * cells).map(|i| v[i] * v[i]).sum();
    let right: f64 = (dim - 2 * cells..dim).map(|i| v[i] * v[i]).sum();
    (left / norm2, right / norm2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    pub index: usize,
    pub energy: f64,
    pub left_weight: f64,
    pub right_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    pub threshold: f64,
    pub window_cells: usize,
    pub states: Vec<EdgeState>,
    /// Mean energy of the near-zero pair.
    pub midgap_energy: Option<f64>,
    /// Sublattice-polarised recombinations of the pair, Ψ_A mostly on the left end.
    pub psi_a: Option<DVector<f64>>,
    pub psi_b: Option<DVector<f64>>,
    /// Weight of Ψ_A on the A sites of the left window.
    pub psi_a_left_a_weight: Option<f64>,
    /// Weight of Ψ_B on the B sites of the right window.
    pub psi_b_right_b_weight: Option<f64>,
}

/// Near-zero states of an open chain and their end localisation.
///
/// When exactly two states fall below `threshold`, the sublattice operator
/// Γ = diag(+1 on A, −1 on B) is diagonalised inside their span. Its
/// eigenvectors are the recombinations (Ψ+ ± Ψ−)/√2 and stay well defined
/// even when the pair is exactly degenerate.
pub fn edge_state_report(spec: &LatticeSpectrum, threshold: f64) -> Result<EdgeReport> {
    if spec.boundary != Boundary::Open {
        return Err(Error::InvalidArgument("edge states need an open chain"));
    }
    let window_cells = spec.n_cells.div_ceil(4);
    let states: Vec<EdgeState> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() < threshold)
        .map(|(index, &energy)| {
            let (left_weight, right_weight) = end_weights(&spec.eigenvectors.column(index).into_owned(), window_cells);
            EdgeState { index, energy, left_weight, right_weight }
        })
        .collect();
    let mut report = EdgeReport {
        threshold,
        window_cells,
        midgap_energy: None,
        psi_a: None,
        psi_b: None,
        psi_a_left_a_weight: None,
        psi_b_right_b_weight: None,
        states,
    };
    if report.states.len() != 2 {
        return Ok(report);
    }
    let v1 = spec.eigenvectors.column(report.states[0].index).into_owned();
    let v2 = spec.eigenvectors.column(report.states[1].index).into_owned();
    let gamma = |v: &DVector<f64>, w: &DVector<f64>| {
        (0..v.len()).map(|i| if i % 2 == 0 { v[i] * w[i] } else { -v[i] * w[i] }).sum::<f64>()
    };
    let g = Matrix2::new(gamma(&v1, &v1), gamma(&v1, &v2), gamma(&v2, &v1), gamma(&v2, &v2));
    let eig = g.symmetric_eigen();
    let (ia, ib) = if eig.eigenvalues[0] > eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let combine = |k: usize| &v1 * eig.eigenvectors[(0, k)] + &v2 * eig.eigenvectors[(1, k)];
    let (mut psi_a, mut psi_b) = (combine(ia), combine(ib));
    for v in [&mut psi_a, &mut psi_b] {
        let n = v.norm();
        *v /= n;
    }
    let w = window_cells;
    let dim = psi_a.len();
    let a_left: f64 = (0..w).map(|n| psi_a[2 * n] * psi_a[2 * n]).sum();
    let b_right: f64 = (0..w).map(|n| psi_b[dim - 1 - 2 * n] * psi_b[dim - 1 - 2 * n]).sum();
    report.midgap_energy = Some(0.5 * (report.states[0].energy + report.states[1].energy));
    report.psi_a_left_a_weight = Some(a_left);
    report.psi_b_right_b_weight = Some(b_right);
    report.psi_a = Some(psi_a);
    report.psi_b = Some(psi_b);
    Ok(report)
}

/// Mid-gap threshold used for α scans: a quarter of the bulk gap |Ω2 − Ω1|.
pub fn scan_threshold(p: &SshParams) -> f64 {
    0.25 * (p.omega2 - p.omega1).abs()
}
