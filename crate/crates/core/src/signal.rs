//! Uniformly sampled real control signals on `[0, T]`.

use crate::error::{Error, Result};

/// Samples at the midpoints `t_j = (j + 1/2)Δ`, `Δ = T/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    t_end: f64,
    samples: Vec<f64>,
}

impl ControlSignal {
    pub fn new(t_end: f64, samples: Vec<f64>) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon T must be positive and finite, got {t_end}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        Ok(Self { t_end, samples })
    }

    pub fn zeros(t_end: f64, m: usize) -> Result<Self> {
        Self::new(t_end, vec![0.0; m])
    }

    /// Samples `f` at the grid midpoints.
    pub fn from_fn(t_end: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = t_end / m as f64;
        Self::new(t_end, (0..m).map(|j| f((j as f64 + 0.5) * dt)).collect())
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.samples.len() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        midpoints(self.t_end, self.samples.len())
    }

    /// Dissipated energy `α·Δ·Σ E_j²`.
    pub fn energy(&self, alpha: f64) -> f64 {
        alpha * self.dt() * self.samples.iter().map(|v| v * v).sum::<f64>()
    }

    /// Piecewise-constant value on the sample cell containing `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let m = self.samples.len();
        let j = ((t / self.dt()).floor().max(0.0) as usize).min(m - 1);
        self.samples[j]
    }

    /// Extends the signal with zeros to a longer horizon on the same grid step.
    pub fn zero_padded(&self, t_end: f64) -> Result<Self> {
        let dt = self.dt();
        let m_new = (t_end / dt).round();
        if m_new < self.samples.len() as f64 || ((m_new * dt) - t_end).abs() > 1e-9 * t_end {
            return Err(Error::InvalidInput(format!(
                "horizon {t_end} is not a longer multiple of the grid step {dt}"
            )));
        }
        let mut samples = self.samples.clone();
        samples.resize(m_new as usize, 0.0);
        Self::new(t_end, samples)
    }
}

/// Midpoints `(j + 1/2)T/M` for `j = 0..M`.
pub fn midpoints(t_end: f64, m: usize) -> Vec<f64> {
    let dt = t_end / m as f64;
    (0..m).map(|j| (j as f64 + 0.5) * dt).collect()
}

/// Strict lower-triangular time-ordering weight with 1/2 on the diagonal.
pub(crate) fn ordering_weight(i: usize, j: usize) -> f64 {
    use std::cmp::Ordering::*;
    match j.cmp(&i) {
        Less => 1.0,
        Equal => 0.5,
        Greater => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ControlSignal::new(0.0, vec![0.0; 4]).is_err());
        assert!(ControlSignal::new(1.0, vec![0.0]).is_err());
        assert!(ControlSignal::new(1.0, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn grid_and_energy() {
        let s = ControlSignal::new(2.0, vec![1.0, -2.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.dt(), 0.5);
        assert_eq!(s.times(), vec![0.25, 0.75, 1.25, 1.75]);
        assert_eq!(s.energy(2.0), 2.0 * 0.5 * 6.0);
        assert_eq!(s.value_at(0.6), -2.0);
        assert_eq!(s.value_at(2.0), 1.0);
    }

    #[test]
    fn padding_keeps_step() {
        let s = ControlSignal::new(1.0, vec![1.0, 2.0]).unwrap();
        let p = s.zero_padded(2.0).unwrap();
        assert_eq!(p.samples(), &[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.energy(1.0), s.energy(1.0));
        assert!(s.zero_padded(1.3).is_err());
        assert!(s.zero_padded(0.5).is_err());
    }
}
