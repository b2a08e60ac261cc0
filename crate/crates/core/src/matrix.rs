//! Dense complex matrix utilities.
//!
//! Norms, the polar-decomposition nearest unitary, spectral calculus for
//! normal matrices (principal logarithm, fractional powers) and Kronecker
//! products in lexicographic basis order.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};

/// Dense square complex matrix. Row index is the bra, column index the ket.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Unitarity tolerance accepted on inputs.
pub const UNITARY_INPUT_TOL: f64 = 1e-8;
/// Unitarity tolerance guaranteed on outputs.
pub const UNITARY_OUTPUT_TOL: f64 = 1e-10;
/// Hermiticity tolerance for generators and operator matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are grouped into one spectral projector.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Smallest singular value accepted by [`nearest_unitary`].
pub const SINGULAR_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

/// Lifts a real matrix into the complex field.
pub fn from_real(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Builds a diagonal matrix from complex entries.
pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    let n = entries.len();
    let mut m = zeros(n);
    for (k, &z) in entries.iter().enumerate() {
        m[(k, k)] = z;
    }
    m
}

/// Builds a diagonal matrix from real entries.
pub fn diag_real(entries: &[f64]) -> ComplexMatrix {
    let v: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diag(&v)
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_sqr(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Frobenius inner product `Σ conj(a)·b`.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity(n)))
}

/// `‖H − H†‖_F`.
pub fn hermiticity_defect(h: &ComplexMatrix) -> f64 {
    frobenius(&(h - h.adjoint()))
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol
}

pub fn is_hermitian(h: &ComplexMatrix, tol: f64) -> bool {
    h.is_square() && hermiticity_defect(h) <= tol
}

/// Symmetrized copy `(H + H†)/2`.
pub fn hermitian_part(h: &ComplexMatrix) -> ComplexMatrix {
    (h + h.adjoint()).scale(0.5)
}

pub(crate) fn ensure_square(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(shape_err(
            "non-empty square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

pub(crate) fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

pub(crate) fn ensure_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(())
}

pub(crate) fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    ensure_square(u)?;
    ensure_finite(u)?;
    let defect = unitarity_defect(u);
    if defect > tol {
        return Err(Error::Contract(format!(
            "matrix is not unitary (defect {defect:e} > {tol:e})"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_hermitian(h: &ComplexMatrix, tol: f64) -> Result<()> {
    ensure_square(h)?;
    ensure_finite(h)?;
    let defect = hermiticity_defect(h);
    if defect > tol {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect:e} > {tol:e})"
        )));
    }
    Ok(())
}

/// Frobenius and spectral norms. The spectral norm is the largest singular value.
pub fn matrix_norms(m: &ComplexMatrix) -> Result<Norms> {
    ensure_finite(m)?;
    let frobenius = frobenius(m);
    if m.is_empty() || frobenius == 0.0 {
        return Ok(Norms {
            frobenius,
            spectral: 0.0,
        });
    }
    let spectral = m.clone().singular_values().max();
    Ok(Norms {
        frobenius,
        spectral,
    })
}

/// Spectral norm only.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Polar factor `M(M†M)^{-1/2}`, the unitary closest to `M` in Frobenius norm.
///
/// Computed from the SVD `M = W Σ V†` as `W V†`.
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let svd = m.clone().svd(true, true);
    let smallest = svd.singular_values.min();
    if smallest <= SINGULAR_TOL {
        return Err(Error::RankDeficient { smallest });
    }
    let (w, v_t) = match (svd.u, svd.v_t) {
        (Some(w), Some(v_t)) => (w, v_t),
        _ => return Err(Error::InvalidInput("SVD did not produce singular vectors".into())),
    };
    Ok(w * v_t)
}

/// Eigenvalues with their orthogonal spectral projectors.
///
/// Eigenvalues closer than [`DEGENERACY_TOL`] share one projector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub projectors: Vec<ComplexMatrix>,
}

impl SpectralDecomposition {
    /// Decomposes a normal matrix (unitary, Hermitian, ...) through its complex Schur form.
    pub fn of_normal(m: &ComplexMatrix) -> Result<Self> {
        ensure_square(m)?;
        ensure_finite(m)?;
        let n = m.nrows();
        let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();

        let scale = frobenius(m).max(1.0);
        let mut off = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                off += t[(r, c)].norm_sqr();
            }
        }
        if off.sqrt() > 1e-6 * scale {
            return Err(Error::Contract(format!(
                "matrix is not normal (Schur off-diagonal {:e})",
                off.sqrt()
            )));
        }

        let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
        Ok(Self::from_eigenpairs(&values, &q))
    }

    /// Decomposes a Hermitian matrix; eigenvalues are real.
    pub fn of_hermitian(h: &ComplexMatrix) -> Result<Self> {
        ensure_square(h)?;
        ensure_finite(h)?;
        let eig = SymmetricEigen::new(hermitian_part(h));
        let values: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Ok(Self::from_eigenpairs(&values, &eig.eigenvectors))
    }

    fn from_eigenpairs(values: &[Complex64], vectors: &ComplexMatrix) -> Self {
        let n = vectors.nrows();
        let mut groups: Vec<(Complex64, Vec<usize>)> = Vec::new();
        for (k, &z) in values.iter().enumerate() {
            match groups
                .iter_mut()
                .find(|(rep, _)| (*rep - z).norm() < DEGENERACY_TOL)
            {
                Some((_, members)) => members.push(k),
                None => groups.push((z, vec![k])),
            }
        }

        let mut eigenvalues = Vec::with_capacity(groups.len());
        let mut projectors = Vec::with_capacity(groups.len());
        for (_, members) in groups {
            let mean = members.iter().map(|&k| values[k]).sum::<Complex64>() / members.len() as f64;
            let mut p = zeros(n);
            for &k in &members {
                let v = vectors.column(k);
                p += &v * v.adjoint();
            }
            eigenvalues.push(mean);
            projectors.push(p);
        }
        Self {
            eigenvalues,
            projectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    /// `Σ f(λ_α) P_α`.
    pub fn apply<F: Fn(Complex64) -> Complex64>(&self, f: F) -> ComplexMatrix {
        let mut out = zeros(self.dim());
        for (&z, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p * f(z);
        }
        out
    }

    /// `Σ λ_α P_α`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|z| z)
    }
}

/// Phase of a unit-circle eigenvalue on the principal branch (−π, π].
///
/// Values within [`DEGENERACY_TOL`] of −1 are pinned to +π.
pub fn principal_phase(z: Complex64) -> f64 {
    if (z + ONE).norm() < DEGENERACY_TOL {
        return PI;
    }
    let phase = z.arg();
    if phase <= -PI {
        PI
    } else {
        phase
    }
}

/// Hermitian generator `H = i·log U`, so that `exp(−iH) = U`.
pub fn hermitian_generator(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_unitary(u, UNITARY_INPUT_TOL)?;
    let spec = SpectralDecomposition::of_normal(u)?;
    let h = spec.apply(|z| Complex64::new(-principal_phase(z), 0.0));
    Ok(hermitian_part(&h))
}

/// Principal `k`-th root `U^{1/k}` of a unitary matrix.
pub fn fractional_power(u: &ComplexMatrix, k: u32) -> Result<ComplexMatrix> {
    if k == 0 {
        return Err(Error::InvalidInput("root order k must be positive".into()));
    }
    ensure_unitary(u, UNITARY_INPUT_TOL)?;
    if k == 1 {
        return Ok(u.clone());
    }
    let spec = SpectralDecomposition::of_normal(u)?;
    let kf = f64::from(k);
    Ok(spec.apply(|z| Complex64::from_polar(1.0, principal_phase(z) / kf)))
}

/// Kronecker product. Entry `(N₂n₁+n₂, N₂m₁+m₂)` equals `A[n₁,m₁]·B[n₂,m₂]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let eig = SymmetricEigen::new(hermitian_part(h));
    let v = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&x| (-I * t * x).exp())
        .collect();
    v * diag(&phases) * v.adjoint()
}

/// Integer matrix power by repeated squaring.
pub fn matrix_power(m: &ComplexMatrix, mut k: u32) -> ComplexMatrix {
    let mut base = m.clone();
    let mut acc = identity(m.nrows());
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

pub(crate) const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) const CZERO: Complex64 = ZERO;
pub(crate) const CONE: Complex64 = ONE;
pub(crate) const CI: Complex64 = I;
