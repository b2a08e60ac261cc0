//! Charged 1-D oscillator driven by a scalar electric field.
//!
//! The perturbation is `V(t) = −q·E(t)·x` with overall scale `ε`. In the
//! interaction picture the evolution `W(T)` is expanded to second order,
//! the gate error `‖U_d − U(T)‖²` is expanded to second order in the field,
//! and the dissipation-constrained optimal field is found from the resulting
//! linear stationarity system.
//!
//! Every kernel here takes the effective coupling `ε·q` as its `coupling`
//! argument.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};
use crate::gates::GateTarget;
use crate::matrix::{self, ComplexMatrix};
use crate::oscillator::{self, EnergySpectrum, TruncationSpec};
use crate::secular::SecularSystem;
use crate::signal::{midpoints, ordering_weight, ControlSignal};

/// Second-order limit used by [`DysonGate::order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DysonOrder {
    First,
    Second,
}

impl DysonOrder {
    pub fn from_int(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            _ => Err(Error::InvalidInput(format!("Dyson order must be 1 or 2, got {order}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DysonGate {
    pub order: DysonOrder,
    /// Interaction-picture evolution.
    pub w: ComplexMatrix,
    /// Lab-frame evolution `e^{−iH₀T}W`.
    pub u: ComplexMatrix,
    pub eps: f64,
}

/// Gate-error kernels on a uniform midpoint grid.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub t_end: f64,
    pub k1: DVector<f64>,
    /// Symmetric second-order kernel samples.
    pub k2_sym: DMatrix<f64>,
    /// `‖Ũ_d‖²`, the error energy at zero field.
    pub base_error: f64,
}

impl KernelPair {
    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.k1.len() as f64
    }

    /// Quadratic error model `‖Ũ_d‖² + Δ·k1·E + ½Δ²·EᵀK2E`.
    pub fn error_model(&self, field: &ControlSignal) -> Result<f64> {
        if field.len() != self.len() {
            return Err(shape_err(self.len(), field.len()));
        }
        let e = DVector::from_column_slice(field.samples());
        let dt = self.dt();
        Ok(self.base_error + dt * self.k1.dot(&e) + 0.5 * dt * dt * e.dot(&(&self.k2_sym * &e)))
    }
}

/// Optimal field with its multiplier and diagnostics.
#[derive(Debug, Clone)]
pub struct FieldDesign {
    pub field: ControlSignal,
    pub lambda: f64,
    /// Max-norm of `k1 + Δ·K2·E − 2λαE`.
    pub residual: f64,
    pub energy: f64,
    pub condition: f64,
}

fn require_1d(spec: &TruncationSpec) -> Result<()> {
    if spec.axes() != 1 {
        return Err(Error::InvalidTruncation("expected a 1-axis truncation".into()));
    }
    Ok(())
}

/// Dressed position operator `x̃(t_j)` at each grid midpoint.
pub fn dressed_positions(spec: &TruncationSpec, times: &[f64]) -> Result<Vec<ComplexMatrix>> {
    require_1d(spec)?;
    let (x, _) = oscillator::canonical_matrices(spec)?;
    let spectrum = EnergySpectrum::oscillator(spec);
    times
        .iter()
        .map(|&t| oscillator::interaction_dress(&x, &spectrum, t))
        .collect()
}

/// Interaction-picture Hamiltonian `−c·E(t)·x̃(t)` for a field given as a function of time.
pub fn interaction_hamiltonian<F>(
    spec: &TruncationSpec,
    coupling: f64,
    field: F,
) -> Result<impl Fn(f64) -> ComplexMatrix>
where
    F: Fn(f64) -> f64,
{
    require_1d(spec)?;
    let (x, _) = oscillator::canonical_matrices(spec)?;
    let spectrum = EnergySpectrum::oscillator(spec);
    Ok(move |t: f64| {
        oscillator::interaction_dress(&x, &spectrum, t)
            .expect("dimensions agree by construction")
            * Complex64::new(-coupling * field(t), 0.0)
    })
}

/// Dyson expansion of `W(T)` to first or second order, midpoint quadrature.
///
/// The time-ordered double integral uses weight 1 below the diagonal and
/// 1/2 on it, so for piecewise-constant fields it reproduces the second-order
/// term of the exact product of step exponentials.
pub fn dyson_gate(
    field: &ControlSignal,
    spec: &TruncationSpec,
    charge: f64,
    eps: f64,
    order: DysonOrder,
) -> Result<DysonGate> {
    let xt = dressed_positions(spec, &field.times())?;
    let c = eps * charge;
    let dt = field.dt();
    let d = spec.dim();

    let mut w1 = matrix::zeros(d);
    let mut w2 = matrix::zeros(d);
    for (&e, x) in field.samples().iter().zip(&xt) {
        let term = x * Complex64::new(e * dt, 0.0);
        if order == DysonOrder::Second {
            let half = &w1 + &term * Complex64::new(0.5, 0.0);
            w2 += &term * half;
        }
        w1 += term;
    }
    let mut w = matrix::identity(d) + w1 * Complex64::new(0.0, c);
    if order == DysonOrder::Second {
        w -= w2 * Complex64::new(c * c, 0.0);
    }
    let spectrum = EnergySpectrum::oscillator(spec);
    let u = spectrum.evolution(field.t_end()) * &w;
    Ok(DysonGate { order, w, u, eps })
}

/// Interaction-frame target residual `e^{iH₀T}U_d − I`.
pub fn interaction_residual(
    target: &ComplexMatrix,
    spectrum: &EnergySpectrum,
    t_end: f64,
) -> Result<ComplexMatrix> {
    let d = spectrum.len();
    if target.shape() != (d, d) {
        return Err(shape_err(
            format!("{d}x{d}"),
            format!("{}x{}", target.nrows(), target.ncols()),
        ));
    }
    Ok(spectrum.evolution(-t_end) * target - matrix::identity(d))
}

/// `tr(A·B)` without forming the product.
pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for k in 0..n {
            s += a[(r, k)] * b[(k, r)];
        }
    }
    s
}

/// First- and second-order kernels of the gate error energy.
///
/// With `h_j = i·c·x̃(t_j)` and `Ũ_d = e^{iH₀T}U_d − I`:
/// `k1_j = −2Re⟨Ũ_d, h_j⟩`,
/// `G_ij = Re⟨h_i, h_j⟩ + 2c²w_ij Re⟨Ũ_d, x̃_i x̃_j⟩`, `K2 = G + Gᵀ`,
/// so that `‖U_d − U(T)‖² = ‖Ũ_d‖² + Δ·k1·E + ½Δ²EᵀK2E + O(c³)`.
pub fn error_kernels(
    target: &GateTarget,
    spec: &TruncationSpec,
    t_end: f64,
    m: usize,
    coupling: f64,
) -> Result<KernelPair> {
    require_1d(spec)?;
    if m < 2 || !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid needs T > 0 and M >= 2, got T = {t_end}, M = {m}"
        )));
    }
    let spectrum = EnergySpectrum::oscillator(spec);
    let ut = interaction_residual(&target.matrix, &spectrum, t_end)?;
    let xt = dressed_positions(spec, &midpoints(t_end, m))?;
    let c2 = coupling * coupling;

    let ut_adj = ut.adjoint();
    let k1 = DVector::from_iterator(
        m,
        xt.iter().map(|x| {
            // ⟨Ũ, i c x̃⟩ = i c tr(Ũ† x̃)
            let z = trace_product(&ut_adj, x) * Complex64::new(0.0, coupling);
            -2.0 * z.re
        }),
    );

    let a: Vec<ComplexMatrix> = xt.iter().map(|x| &ut_adj * x).collect();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let overlap = trace_product(&xt[i], &xt[j]).re;
            let w = ordering_weight(i, j);
            let second = if w == 0.0 {
                0.0
            } else {
                w * trace_product(&a[i], &xt[j]).re
            };
            g[(i, j)] = c2 * overlap + 2.0 * c2 * second;
        }
    }
    let k2_sym = &g + g.transpose();
    Ok(KernelPair {
        t_end,
        k1,
        k2_sym,
        base_error: matrix::frobenius_sqr(&ut),
    })
}

/// Minimizes the quadratic error model subject to `α·Δ·ΣE² = e_diss`.
///
/// Solves `(Δ·K2 − 2λα·I)E = −k1` with `λ` on the branch below the smallest
/// eigenvalue of `Δ·K2/(2α)`, where the stationary point is the constrained minimum.
pub fn optimal_field(kernels: &KernelPair, alpha_diss: f64, e_diss: f64) -> Result<FieldDesign> {
    if !(alpha_diss > 0.0) || !alpha_diss.is_finite() {
        return Err(Error::InvalidInput(format!(
            "alpha_diss must be positive, got {alpha_diss}"
        )));
    }
    let m = kernels.len();
    let dt = kernels.dt();
    let p = &kernels.k2_sym * dt;
    let s = DMatrix::identity(m, m) * (2.0 * alpha_diss);
    let system = SecularSystem::new(&p, &s, 0.5 * dt)?;
    let sol = system.solve(&kernels.k1, e_diss)?;
    let field = ControlSignal::new(kernels.t_end, sol.x.iter().copied().collect())?;
    Ok(FieldDesign {
        energy: field.energy(alpha_diss),
        field,
        lambda: sol.lambda,
        residual: sol.residual,
        condition: sol.condition,
    })
}

/// Noise-to-signal ratio `‖U_d − U‖²/‖U_d‖²`.
pub fn nsr(target: &ComplexMatrix, achieved: &ComplexMatrix) -> Result<f64> {
    matrix::ensure_same_dim(target, achieved)?;
    let denom = matrix::frobenius_sqr(target);
    if denom == 0.0 {
        return Err(Error::ZeroNorm("target gate".into()));
    }
    Ok(matrix::frobenius_sqr(&(target - achieved)) / denom)
}
