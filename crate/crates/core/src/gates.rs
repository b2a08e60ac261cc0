//! Target gates: single-qubit catalog, Hadamard powers, the three-qubit
//! controlled unitary, the discrete Fourier gate and perturbed product gates.
//!
//! Qubit register `|x₁x₂x₃⟩` maps to basis index `4x₁ + 2x₂ + x₃`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, c, ComplexMatrix, CI, CONE, CZERO, UNITARY_INPUT_TOL, UNITARY_OUTPUT_TOL};

/// A unitary target with a label and optionally its Hermitian generator.
#[derive(Debug, Clone)]
pub struct GateTarget {
    pub matrix: ComplexMatrix,
    pub label: String,
    pub generator: Option<ComplexMatrix>,
}

impl GateTarget {
    /// Wraps a matrix after checking unitarity at the output tolerance.
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        matrix::ensure_unitary(&matrix, UNITARY_OUTPUT_TOL)?;
        Ok(Self {
            matrix,
            label: label.into(),
            generator: None,
        })
    }

    /// Attaches `H_g = i·log U`.
    pub fn with_generator(mut self) -> Result<Self> {
        self.generator = Some(matrix::hermitian_generator(&self.matrix)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Principal `k`-th root of this gate.
    pub fn fractional(&self, k: u32) -> Result<Self> {
        let m = matrix::fractional_power(&self.matrix, k)?;
        Self::new(m, format!("({})^(1/{k})", self.label))
    }
}

/// Names of the single-qubit catalog gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardGate {
    I,
    X,
    Y,
    Z,
    S,
    T,
    R(f64),
    H,
}

impl StandardGate {
    /// Parses a catalog name. `R` takes the angle separately.
    pub fn from_name(name: &str, theta: Option<f64>) -> Result<Self> {
        Ok(match name {
            "I" => Self::I,
            "X" => Self::X,
            "Y" => Self::Y,
            "Z" => Self::Z,
            "S" => Self::S,
            "T" => Self::T,
            "H" => Self::H,
            "R" => {
                let theta = theta
                    .ok_or_else(|| Error::InvalidInput("gate R needs an angle theta".into()))?;
                if !theta.is_finite() {
                    return Err(Error::InvalidInput("theta must be finite".into()));
                }
                Self::R(theta)
            }
            other => return Err(Error::InvalidInput(format!("unknown gate name {other:?}"))),
        })
    }
}

fn two_by_two(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

/// Exact 2×2 matrix of a catalog gate. `T = diag(1, e^{iπ/8})`.
pub fn standard_gate(gate: StandardGate) -> GateTarget {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let (m, label) = match gate {
        StandardGate::I => (matrix::identity(2), "I".to_string()),
        StandardGate::X => (two_by_two(CZERO, CONE, CONE, CZERO), "X".into()),
        StandardGate::Y => (two_by_two(CZERO, -CI, CI, CZERO), "Y".into()),
        StandardGate::Z => (matrix::diag(&[CONE, -CONE]), "Z".into()),
        StandardGate::S => (matrix::diag(&[CONE, CI]), "S".into()),
        StandardGate::T => (
            matrix::diag(&[CONE, Complex64::from_polar(1.0, PI / 8.0)]),
            "T".into(),
        ),
        StandardGate::R(theta) => (
            matrix::diag(&[CONE, Complex64::from_polar(1.0, theta)]),
            format!("R({theta})"),
        ),
        StandardGate::H => (two_by_two(h, h, h, -h), "H".into()),
    };
    GateTarget {
        matrix: m,
        label,
        generator: None,
    }
}

/// `r`-qubit Hadamard power with entries `(−1)^{popcount(x & y)} / 2^{r/2}`.
pub fn hadamard_tensor(r: u32) -> Result<GateTarget> {
    if r == 0 || r > 10 {
        return Err(Error::InvalidInput(format!(
            "Hadamard power r must be in 1..=10, got {r}"
        )));
    }
    let dim = 1usize << r;
    let scale = 2f64.powf(-f64::from(r) / 2.0);
    let m = ComplexMatrix::from_fn(dim, dim, |x, y| {
        if (x & y).count_ones() % 2 == 0 {
            c(scale, 0.0)
        } else {
            c(-scale, 0.0)
        }
    });
    Ok(GateTarget {
        matrix: m,
        label: format!("H^{r}"),
        generator: None,
    })
}

/// Reads `(α, β)` from `[[α, β], [−β̄, ᾱ]]` with `|α|² + |β|² = 1`.
fn alpha_beta(u: &ComplexMatrix, which: &str) -> Result<(Complex64, Complex64)> {
    if u.shape() != (2, 2) {
        return Err(Error::Parameterization(format!(
            "{which} must be 2x2, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let (alpha, beta) = (u[(0, 0)], u[(0, 1)]);
    let form = (u[(1, 0)] + beta.conj()).norm() + (u[(1, 1)] - alpha.conj()).norm();
    let norm = (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs();
    if form > UNITARY_INPUT_TOL || norm > UNITARY_INPUT_TOL {
        return Err(Error::Parameterization(format!(
            "{which} is not of the form [[a, b], [-conj(b), conj(a)]] with |a|^2+|b|^2 = 1"
        )));
    }
    Ok((alpha, beta))
}

/// Three-qubit controlled gate: identity when the first qubit is 0, otherwise
/// the block built from `U1 = [[α₁, β₁], [−β̄₁, ᾱ₁]]` and `U2 = [[α₂, β₂], [−β̄₂, ᾱ₂]]`.
pub fn controlled_u3(u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<GateTarget> {
    let (a1, b1) = alpha_beta(u1, "U1")?;
    let (a2, b2) = alpha_beta(u2, "U2")?;
    let mut m = matrix::identity(8);
    let block = [
        [a1.conj(), CZERO, -b1.conj() * a2.conj(), b1.conj() * b2.conj()],
        [CZERO, a1.conj(), -b1.conj() * b2, -b1.conj() * a2],
        [b1, CZERO, a1 * a2.conj(), -a1 * b2.conj()],
        [CZERO, b1, a1 * b2, a1 * a2],
    ];
    for (r, row) in block.iter().enumerate() {
        for (col, &z) in row.iter().enumerate() {
            m[(4 + r, 4 + col)] = z;
        }
    }
    GateTarget::new(m, "CU3")
}

/// Discrete Fourier gate with entries `e^{i2πkn/N}/√N`.
pub fn qft_gate(n: usize) -> Result<GateTarget> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("QFT size must be at least 2, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let m = ComplexMatrix::from_fn(n, n, |k, j| {
        let phase = 2.0 * PI * ((k * j) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    });
    GateTarget::new(m, format!("QFT{n}"))
}

/// Nearest unitary to `(U1 ⊗ U2)(I + iεX)`.
pub fn weakly_nonseparable_target(
    u1: &GateTarget,
    u2: &GateTarget,
    x: &ComplexMatrix,
    eps: f64,
) -> Result<GateTarget> {
    if !eps.is_finite() || eps.abs() > 0.2 {
        return Err(Error::InvalidInput(format!("|eps| must be at most 0.2, got {eps}")));
    }
    let product = matrix::kron(&u1.matrix, &u2.matrix);
    let d = product.nrows();
    if x.shape() != (d, d) {
        return Err(crate::error::shape_err(
            format!("{d}x{d}"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    matrix::ensure_hermitian(x, 1e-10)?;
    let label = format!("({}x{})(I+i{eps}X)", u1.label, u2.label);
    if eps == 0.0 {
        return GateTarget::new(product, label);
    }
    let perturbed = &product * (matrix::identity(d) + x * c(0.0, eps));
    GateTarget::new(matrix::nearest_unitary(&perturbed)?, label)
}
