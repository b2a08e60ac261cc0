//! Brute-force unitary propagation with Cayley steps, and convergence-order fits.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix};

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub u: ComplexMatrix,
    pub steps: usize,
    /// Running maximum of `‖U†U − I‖_F` over the accumulated product.
    pub max_unitarity_defect: f64,
}

/// One Cayley factor `(I + iΔ/2·H)⁻¹(I − iΔ/2·H)`.
pub fn cayley_step(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    let n = h.nrows();
    let half = Complex64::new(0.0, 0.5 * dt);
    let id = matrix::identity(n);
    let plus = &id + h * half;
    let minus = &id - h * half;
    plus.lu()
        .solve(&minus)
        .expect("I + iΔH/2 is invertible for Hermitian H")
}

/// Propagates `U' = −iH(t)U` from `U(0) = I` over `[0, t_end]` in `steps` Cayley
/// steps, sampling `H` at step midpoints. Later factors multiply on the left.
pub fn propagate<F>(h_at: F, t_end: f64, steps: usize) -> Result<PropagationResult>
where
    F: Fn(f64) -> ComplexMatrix,
{
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::InvalidInput(format!("invalid horizon {t_end}")));
    }
    let dt = t_end / steps as f64;
    let mut u: Option<ComplexMatrix> = None;
    let mut max_defect = 0.0f64;
    for j in 0..steps {
        let t = (j as f64 + 0.5) * dt;
        let h = h_at(t);
        matrix::ensure_square(&h)?;
        let tol = 1e-10 * matrix::frobenius(&h).max(1.0);
        let defect = matrix::hermiticity_defect(&h);
        if !(defect <= tol) {
            return Err(Error::Contract(format!(
                "Hamiltonian sample at t = {t} is not Hermitian (defect {defect:e})"
            )));
        }
        let step = cayley_step(&h, dt);
        let next = match u {
            None => step,
            Some(prev) => {
                if prev.shape() != step.shape() {
                    return Err(crate::error::shape_err(
                        format!("{}x{}", prev.nrows(), prev.ncols()),
                        format!("{}x{}", step.nrows(), step.ncols()),
                    ));
                }
                step * prev
            }
        };
        max_defect = max_defect.max(matrix::unitarity_defect(&next));
        u = Some(next);
    }
    Ok(PropagationResult {
        u: u.expect("at least one step"),
        steps,
        max_unitarity_defect: max_defect,
    })
}

/// Result of a log-log convergence fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceEstimate {
    /// Least-squares slope of `log(error)` against `log(eps)`.
    Slope(f64),
    /// Some ladder point had zero error; the methods agree exactly there.
    ExactAgreement { index: usize },
}

/// Fits the order of agreement between two methods over a ladder of `eps` values.
pub fn convergence_order(eps: &[f64], errors: &[f64]) -> Result<ConvergenceEstimate> {
    if eps.len() != errors.len() {
        return Err(crate::error::shape_err(eps.len(), errors.len()));
    }
    if eps.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 ladder points, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    if errors.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("errors must be finite and nonnegative".into()));
    }
    if let Some(index) = errors.iter().position(|&e| e == 0.0) {
        return Ok(ConvergenceEstimate::ExactAgreement { index });
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("eps ladder must contain distinct values".into()));
    }
    Ok(ConvergenceEstimate::Slope(sxy / sxx))
}
