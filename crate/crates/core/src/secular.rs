//! Quadratic minimization under one quadratic equality constraint.
//!
//! Solves the Lagrange stationarity system `(P − λS)x = −b` together with
//! `scale·xᵀSx = target`, where `P` is symmetric and `S` symmetric positive
//! definite. The multiplier is taken on the branch `λ < λ_min(S⁻¹P)`, where
//! `P − λS` is positive definite and the stationary point is the constrained
//! minimum. On that branch the constraint value is monotone in `λ`, so a
//! bracketed bisection in `log(λ_min − λ)` followed by secant polishing
//! locates the unique root.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest accepted condition number of `P − λS` (in the `S`-metric).
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SecularSolution {
    pub x: DVector<f64>,
    pub lambda: f64,
    /// Max-norm of `(P − λS)x + b`.
    pub residual: f64,
    /// `scale·xᵀSx` at the returned point.
    pub constraint_value: f64,
    pub condition: f64,
}

/// Pre-factored problem; the factorization is reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct SecularSystem {
    p: DMatrix<f64>,
    s: DMatrix<f64>,
    l: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    scale: f64,
}

impl SecularSystem {
    pub fn new(p: &DMatrix<f64>, s: &DMatrix<f64>, scale: f64) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || !p.is_square() || s.shape() != (n, n) {
            return Err(crate::error::shape_err(
                "matching non-empty square P and S",
                format!("P {}x{}, S {}x{}", p.nrows(), p.ncols(), s.nrows(), s.ncols()),
            ));
        }
        if p.iter().chain(s.iter()).any(|v| !v.is_finite()) || !(scale > 0.0) {
            return Err(Error::InvalidInput(
                "P, S must be finite and the constraint scale positive".into(),
            ));
        }
        let chol = s.clone().cholesky().ok_or_else(|| {
            Error::InvalidInput("constraint matrix S is not positive definite".into())
        })?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
        let c = &l_inv * p * l_inv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        Ok(Self {
            p: p.clone(),
            s: s.clone(),
            l,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            scale,
        })
    }

    /// Smallest generalized eigenvalue of `(P, S)`.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.min()
    }

    fn project(&self, b: &DVector<f64>) -> DVector<f64> {
        let c = self
            .l
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal");
        self.eigenvectors.transpose() * c
    }

    fn x_from(&self, beta: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let y = DVector::from_iterator(
            beta.len(),
            beta.iter()
                .zip(self.eigenvalues.iter())
                .map(|(&b, &ev)| -b / (ev - lambda)),
        );
        let y = &self.eigenvectors * y;
        self.l
            .transpose()
            .solve_upper_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `x(λ) = −(P − λS)⁻¹b` for a fixed multiplier.
    pub fn solve_at(&self, b: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
        self.check_rhs(b)?;
        let condition = self.condition_at(lambda);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(self.x_from(&self.project(b), lambda))
    }

    fn condition_at(&self, lambda: f64) -> f64 {
        let shifted = self.eigenvalues.iter().map(|&ev| (ev - lambda).abs());
        let (lo, hi) = shifted.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn check_rhs(&self, b: &DVector<f64>) -> Result<()> {
        if b.len() != self.p.nrows() {
            return Err(crate::error::shape_err(self.p.nrows(), b.len()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("right-hand side is not finite".into()));
        }
        Ok(())
    }

    pub fn residual(&self, b: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
        let r = &self.p * x - (&self.s * x) * lambda + b;
        r.amax()
    }

    pub fn constraint_value(&self, x: &DVector<f64>) -> f64 {
        self.scale * x.dot(&(&self.s * x))
    }

    /// Solves the constrained problem for right-hand side `b` and constraint level `target`.
    pub fn solve(&self, b: &DVector<f64>, target: f64) -> Result<SecularSolution> {
        self.check_rhs(b)?;
        if !(target >= 0.0) || !target.is_finite() {
            return Err(Error::InvalidInput(format!(
                "constraint level must be finite and nonnegative, got {target}"
            )));
        }
        let n = b.len();
        let beta = self.project(b);
        let weight: f64 = beta.iter().map(|v| v * v).sum();

        if weight == 0.0 {
            if target == 0.0 {
                return Ok(SecularSolution {
                    x: DVector::zeros(n),
                    lambda: 0.0,
                    residual: 0.0,
                    constraint_value: 0.0,
                    condition: self.condition_at(0.0),
                });
            }
            return Err(Error::ConstraintInfeasible {
                g_lo: -target,
                g_hi: -target,
            });
        }
        if target == 0.0 {
            return Err(Error::ConstraintInfeasible {
                g_lo: f64::INFINITY,
                g_hi: f64::INFINITY,
            });
        }

        let lmin = self.lambda_min();
        // g(s) = scale·Σβ²/(Λ − Λ_min + s)² − target, decreasing in s = Λ_min − λ > 0.
        let g = |s: f64| -> f64 {
            let sum: f64 = beta
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(&b, &ev)| {
                    let d = ev - lmin + s;
                    b * b / (d * d)
                })
                .sum();
            self.scale * sum - target
        };

        let mut s_hi = (self.scale * weight / target).sqrt();
        while g(s_hi) > 0.0 {
            s_hi *= 2.0;
        }
        let spread = (self.eigenvalues.max() - lmin).max(s_hi);
        let s_floor = spread / MAX_CONDITION;
        let mut s_lo = s_hi;
        while g(s_lo) <= 0.0 {
            s_lo *= 0.5;
            if s_lo < s_floor {
                let g_floor = g(s_floor);
                if g_floor <= 0.0 {
                    return Err(Error::ConstraintInfeasible {
                        g_lo: g_floor,
                        g_hi: g(s_hi),
                    });
                }
                s_lo = s_floor;
                break;
            }
        }
        if s_lo == s_hi {
            s_hi *= 2.0;
        }

        let (mut a, mut b_) = (s_lo.ln(), s_hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (a + b_);
            if mid <= a || mid >= b_ {
                break;
            }
            if g(mid.exp()) > 0.0 {
                a = mid;
            } else {
                b_ = mid;
            }
        }
        let (mut s0, mut s1) = (a.exp(), b_.exp());
        let (mut g0, mut g1) = (g(s0), g(s1));
        let mut s = if g0.abs() < g1.abs() { s0 } else { s1 };
        for _ in 0..8 {
            if g1 == g0 {
                break;
            }
            let cand = s1 - g1 * (s1 - s0) / (g1 - g0);
            if !(cand > 0.0) || !cand.is_finite() {
                break;
            }
            let gc = g(cand);
            if gc.abs() >= g(s).abs() {
                break;
            }
            s = cand;
            s0 = s1;
            g0 = g1;
            s1 = cand;
            g1 = gc;
        }

        let lambda = lmin - s;
        let condition = self.condition_at(lambda);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let x = self.x_from(&beta, lambda);
        Ok(SecularSolution {
            residual: self.residual(b, &x, lambda),
            constraint_value: self.constraint_value(&x),
            x,
            lambda,
            condition,
        })
    }
}
