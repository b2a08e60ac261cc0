//! Truncated Fock-basis operators for the 1-D and isotropic 3-D harmonic oscillator.
//!
//! Units: ħ = m = ω₀ = 1 and `[a, a†] = 1`, so `a|n⟩ = √n |n−1⟩`,
//! `q = (a + a†)/√2` and `p = (a − a†)/(i√2)`.

use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};
use crate::matrix::{self, ComplexMatrix};

/// Basis truncation: `n_per_axis` Fock states on each of `axes` (1 or 3) axes.
///
/// Multi-axis states `|n₁,n₂,n₃⟩` are flattened lexicographically to
/// `n₁N² + n₂N + n₃`, which is the index order produced by [`matrix::kron`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    axes: usize,
    n_per_axis: usize,
}

impl TruncationSpec {
    pub fn new(axes: usize, n_per_axis: usize) -> Result<Self> {
        if axes != 1 && axes != 3 {
            return Err(Error::InvalidTruncation(format!(
                "axes must be 1 or 3, got {axes}"
            )));
        }
        if n_per_axis == 0 {
            return Err(Error::InvalidTruncation("N must be positive".into()));
        }
        let spec = Self { axes, n_per_axis };
        spec.dim_checked()?;
        Ok(spec)
    }

    pub fn one_d(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn three_d(n: usize) -> Result<Self> {
        Self::new(3, n)
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    fn dim_checked(&self) -> Result<usize> {
        let mut d: usize = 1;
        for _ in 0..self.axes {
            d = d
                .checked_mul(self.n_per_axis)
                .ok_or_else(|| Error::InvalidTruncation("flat dimension overflows".into()))?;
        }
        Ok(d)
    }

    /// Flat basis dimension, `N` or `N³`.
    pub fn dim(&self) -> usize {
        self.n_per_axis.pow(self.axes as u32)
    }

    /// Lexicographic flat index of a multi-index with one entry per axis.
    pub fn flat_index(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.axes {
            return Err(shape_err(
                format!("{} occupation numbers", self.axes),
                occupation.len(),
            ));
        }
        let mut flat = 0;
        for &n in occupation {
            if n >= self.n_per_axis {
                return Err(Error::InvalidTruncation(format!(
                    "occupation {n} outside truncation N = {}",
                    self.n_per_axis
                )));
            }
            flat = flat * self.n_per_axis + n;
        }
        Ok(flat)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn occupation(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.dim() {
            return Err(Error::InvalidTruncation(format!(
                "flat index {flat} outside dimension {}",
                self.dim()
            )));
        }
        let mut out = vec![0; self.axes];
        let mut rest = flat;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.n_per_axis;
            rest /= self.n_per_axis;
        }
        Ok(out)
    }

    fn require_axes(&self, axes: usize) -> Result<()> {
        if self.axes != axes {
            return Err(Error::InvalidTruncation(format!(
                "operation needs a {axes}-axis truncation, got {} axes",
                self.axes
            )));
        }
        Ok(())
    }

    fn require_ladder(&self) -> Result<()> {
        if self.n_per_axis < 2 {
            return Err(Error::InvalidTruncation(format!(
                "N must be at least 2, got {}",
                self.n_per_axis
            )));
        }
        Ok(())
    }
}

/// Unperturbed energy levels, indexed like the flat basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    energies: Vec<f64>,
}

impl EnergySpectrum {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput(
                "energy list must be non-empty and finite".into(),
            ));
        }
        Ok(Self { energies })
    }

    /// Oscillator levels `n + 1/2` (1-D) or `n₁+n₂+n₃+3/2` (3-D).
    pub fn oscillator(spec: &TruncationSpec) -> Self {
        let n = spec.n_per_axis;
        let zero_point = 0.5 * spec.axes as f64;
        let energies = (0..spec.dim())
            .map(|flat| {
                let mut rest = flat;
                let mut quanta = 0;
                for _ in 0..spec.axes {
                    quanta += rest % n;
                    rest /= n;
                }
                quanta as f64 + zero_point
            })
            .collect();
        Self { energies }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        matrix::diag_real(&self.energies)
    }

    /// Free evolution `e^{−iH₀t}` (diagonal).
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        let phases: Vec<Complex64> = self
            .energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect();
        matrix::diag(&phases)
    }

    /// Bohr phase `e^{i(E_m − E_n)t}`.
    pub fn bohr_phase(&self, m: usize, n: usize, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, (self.energies[m] - self.energies[n]) * t)
    }
}

/// Annihilation and creation matrices, `a[n−1, n] = √n`.
pub fn ladder_matrices(spec: &TruncationSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    spec.require_axes(1)?;
    spec.require_ladder()?;
    let a = annihilation(spec.n_per_axis);
    let a_dag = a.adjoint();
    Ok((a, a_dag))
}

fn annihilation(n: usize) -> ComplexMatrix {
    let mut a = matrix::zeros(n);
    for k in 1..n {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

fn position(n: usize) -> ComplexMatrix {
    let a = annihilation(n);
    (&a + a.adjoint()).scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Position and momentum matrices.
pub fn canonical_matrices(spec: &TruncationSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (a, a_dag) = ladder_matrices(spec)?;
    let q = (&a + &a_dag).scale(std::f64::consts::FRAC_1_SQRT_2);
    let p = (&a - &a_dag) * Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
    Ok((q, p))
}

/// Power of the position operator with exact Fock matrix elements up to the edge.
///
/// The power is formed in a basis enlarged by three states and then truncated,
/// so no entry suffers from the missing higher levels.
pub fn q_power_matrix(spec: &TruncationSpec, power: u32) -> Result<ComplexMatrix> {
    spec.require_axes(1)?;
    spec.require_ladder()?;
    if !(1..=3).contains(&power) {
        return Err(Error::InvalidInput(format!(
            "q power must be 1, 2 or 3, got {power}"
        )));
    }
    Ok(q_power_exact(spec.n_per_axis, power))
}

fn q_power_exact(n: usize, power: u32) -> ComplexMatrix {
    let big = position(n + 3);
    let full = matrix::matrix_power(&big, power);
    matrix::hermitian_part(&full.view((0, 0), (n, n)).into_owned())
}

/// Embeds a single-axis operator acting on `axis` (0-based) into the 3-axis product basis.
pub fn embed_axis(op: &ComplexMatrix, axis: usize, spec: &TruncationSpec) -> Result<ComplexMatrix> {
    spec.require_axes(3)?;
    let n = spec.n_per_axis;
    if op.nrows() != n || op.ncols() != n {
        return Err(shape_err(format!("{n}x{n}"), format!("{}x{}", op.nrows(), op.ncols())));
    }
    if axis >= 3 {
        return Err(Error::InvalidInput(format!("axis {axis} out of range 0..3")));
    }
    let id = matrix::identity(n);
    let factors: [&ComplexMatrix; 3] = match axis {
        0 => [op, &id, &id],
        1 => [&id, op, &id],
        _ => [&id, &id, op],
    };
    Ok(matrix::kron(&matrix::kron(factors[0], factors[1]), factors[2]))
}

/// Per-axis position operators `q₁, q₂, q₃` on the 3-D basis.
pub fn position_matrices_3d(spec: &TruncationSpec) -> Result<[ComplexMatrix; 3]> {
    spec.require_axes(3)?;
    spec.require_ladder()?;
    let q = position(spec.n_per_axis);
    Ok([
        embed_axis(&q, 0, spec)?,
        embed_axis(&q, 1, spec)?,
        embed_axis(&q, 2, spec)?,
    ])
}

/// Per-axis `q_k²` on the 3-D basis with edge-exact elements.
pub fn position_squares_3d(spec: &TruncationSpec) -> Result<[ComplexMatrix; 3]> {
    spec.require_axes(3)?;
    spec.require_ladder()?;
    let q2 = q_power_exact(spec.n_per_axis, 2);
    Ok([
        embed_axis(&q2, 0, spec)?,
        embed_axis(&q2, 1, spec)?,
        embed_axis(&q2, 2, spec)?,
    ])
}

/// Angular momentum `L₁ = i(a₂a₃† − a₂†a₃)` and cyclic permutations.
pub fn angular_momentum_matrices(spec: &TruncationSpec) -> Result<[ComplexMatrix; 3]> {
    spec.require_axes(3)?;
    spec.require_ladder()?;
    let a1 = annihilation(spec.n_per_axis);
    let a = [
        embed_axis(&a1, 0, spec)?,
        embed_axis(&a1, 1, spec)?,
        embed_axis(&a1, 2, spec)?,
    ];
    let ad: Vec<ComplexMatrix> = a.iter().map(|m| m.adjoint()).collect();
    let i = Complex64::new(0.0, 1.0);
    let l = |r: usize, s: usize| (&a[r] * &ad[s] - &ad[r] * &a[s]) * i;
    Ok([l(1, 2), l(2, 0), l(0, 1)])
}

/// Diagonal unperturbed Hamiltonian and its spectrum.
pub fn oscillator_hamiltonian(spec: &TruncationSpec) -> (ComplexMatrix, EnergySpectrum) {
    let spectrum = EnergySpectrum::oscillator(spec);
    (spectrum.hamiltonian(), spectrum)
}

/// Interaction-picture dressing: entry `(m, n)` gains `e^{i(E_m − E_n)t}`.
pub fn interaction_dress(
    v: &ComplexMatrix,
    spectrum: &EnergySpectrum,
    t: f64,
) -> Result<ComplexMatrix> {
    let d = spectrum.len();
    if v.nrows() != d || v.ncols() != d {
        return Err(shape_err(
            format!("{d}x{d}"),
            format!("{}x{}", v.nrows(), v.ncols()),
        ));
    }
    Ok(ComplexMatrix::from_fn(d, d, |m, n| {
        if m == n {
            v[(m, n)]
        } else {
            v[(m, n)] * spectrum.bohr_phase(m, n, t)
        }
    }))
}
