//! Small dense complex linear algebra shared by the quantum modules.

use nalgebra::allocator::Allocator;
use nalgebra::{Complex, DefaultAllocator, Dim, DimDiff, DimSub, Matrix2, Matrix3, OMatrix, U1};
#[allow(unused_imports)] // float math is inherent on newer toolchains
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat3 = Matrix3<C64>;
pub type Mat2 = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Modulus |z|.
pub fn cabs(z: C64) -> f64 {
    z.re.hypot(z.im)
}

/// Largest elementwise deviation |M - M†|.
pub fn hermiticity_error<D: Dim>(m: &OMatrix<C64, D, D>) -> f64
where
    DefaultAllocator: Allocator<D, D>,
{
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max(cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    worst
}

/// Computes exp(-i·scale·M) for Hermitian M through its eigendecomposition.
///
/// M must be Hermitian to 1e-10 elementwise; the anti-Hermitian residue is
/// discarded before diagonalising so the result is unitary to rounding.
pub fn hermitian_expm<D>(m: &OMatrix<C64, D, D>, scale: f64) -> Result<OMatrix<C64, D, D>>
where
    D: DimSub<U1>,
    DefaultAllocator:
        Allocator<D, D> + Allocator<D> + Allocator<DimDiff<D, U1>> + Allocator<D, DimDiff<D, U1>>,
{
    if hermiticity_error(m) > 1e-10 {
        return Err(Error::InvalidArgument("matrix exponential requires a Hermitian input"));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut phased = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let (s, c) = (-scale * lambda).sin_cos();
        let phase = C64::new(c, s);
        for row in 0..phased.nrows() {
            phased[(row, k)] *= phase;
        }
    }
    Ok(phased * v.adjoint())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues3(m: &Mat3) -> [f64; 3] {
    let sym = (m + m.adjoint()).scale(0.5);
    let ev = sym.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

pub fn commutator(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b - b * a
}

/// Largest elementwise modulus of a - b.
pub fn max_abs_diff<D: Dim>(a: &OMatrix<C64, D, D>, b: &OMatrix<C64, D, D>) -> f64
where
    DefaultAllocator: Allocator<D, D>,
{
    a.iter().zip(b.iter()).map(|(x, y)| cabs(x - y)).fold(0.0, f64::max)
}
