//! Spin-½ coupled to one motional mode, driven by a magnetic field along x.
//!
//! `H₀ = ½ω₀σ_z + ω₀′a†a` and `H_I = ½Ω(t)σ_x(1 + a + a†)`. States are ordered
//! `(+½, 0..N)` then `(−½, 0..N)`, so `H_I` is block off-diagonal with block
//! `½Ω(t)·A`, `A[n,m] = δ[n−m] + √m·δ[n−m+1] + √(m+1)·δ[n−m−1]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};
use crate::matrix::{self, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonTrapBasis {
    pub n_fock: usize,
    /// Spin splitting `ω₀`.
    pub omega0: f64,
    /// Mode frequency `ω₀′`.
    pub omega0p: f64,
}

impl IonTrapBasis {
    pub fn new(n_fock: usize, omega0: f64, omega0p: f64) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::InvalidTruncation(format!("need at least 2 Fock states, got {n_fock}")));
        }
        if !omega0.is_finite() || !omega0p.is_finite() {
            return Err(Error::InvalidInput("frequencies must be finite".into()));
        }
        Ok(Self { n_fock, omega0, omega0p })
    }

    /// Defaults `ω₀ = 1`, `ω₀′ = 0.1`.
    pub fn with_defaults(n_fock: usize) -> Result<Self> {
        Self::new(n_fock, 1.0, 0.1)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    /// `E(±½, n) = ±ω₀/2 + ω₀′n` in state order.
    pub fn energies(&self) -> Vec<f64> {
        let n = self.n_fock;
        (0..2 * n)
            .map(|i| {
                let sign = if i < n { 1.0 } else { -1.0 };
                sign * 0.5 * self.omega0 + self.omega0p * (i % n) as f64
            })
            .collect()
    }

    /// Spin-flip Bohr frequency `ω₀ + ω₀′k` of the diagonal `k = n − m`.
    pub fn flip_frequency(&self, k: i64) -> f64 {
        self.omega0 + self.omega0p * k as f64
    }
}

#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub a_block: DMatrix<f64>,
    /// `½[[0, A], [A, 0]]`, the interaction per unit `Ω`.
    pub full: ComplexMatrix,
}

pub fn iontrap_coupling(basis: &IonTrapBasis) -> CouplingMatrix {
    let n = basis.n_fock;
    let a_block = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            1.0
        } else if r + 1 == c {
            (c as f64).sqrt()
        } else if r == c + 1 {
            ((c + 1) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut full = matrix::zeros(2 * n);
    for r in 0..n {
        for c in 0..n {
            let v = Complex64::new(0.5 * a_block[(r, c)], 0.0);
            full[(r, n + c)] = v;
            full[(n + r, c)] = v;
        }
    }
    CouplingMatrix { a_block, full }
}

/// Drive spectrum samples `Ω̂(ω₀ + ω₀′k)` for `k ∈ [−(N−1), N−1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IonTrapDesign {
    n_fock: usize,
    omega: Vec<Complex64>,
}

impl IonTrapDesign {
    pub fn new(n_fock: usize, omega: Vec<Complex64>) -> Result<Self> {
        if omega.len() != 2 * n_fock - 1 {
            return Err(shape_err(2 * n_fock - 1, omega.len()));
        }
        Ok(Self { n_fock, omega })
    }

    pub fn zeros(n_fock: usize) -> Self {
        Self { n_fock, omega: vec![Complex64::new(0.0, 0.0); 2 * n_fock - 1] }
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn at(&self, k: i64) -> Complex64 {
        self.omega[(k + self.n_fock as i64 - 1) as usize]
    }

    pub fn set(&mut self, k: i64, value: Complex64) {
        let i = (k + self.n_fock as i64 - 1) as usize;
        self.omega[i] = value;
    }

    /// `(k, Ω̂_k)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let off = self.n_fock as i64 - 1;
        self.omega.iter().enumerate().map(move |(i, &z)| (i as i64 - off, z))
    }
}

fn diagonal(n: usize, k: i64) -> impl Iterator<Item = (usize, usize)> {
    (0..n).filter_map(move |m| {
        let r = m as i64 + k;
        (0..n as i64).contains(&r).then_some((r as usize, m))
    })
}

/// Per-diagonal least squares `Ω̂_k = 2Σ_m C[m+k,m]·a[m+k,m] / Σ_m a[m+k,m]²`.
///
/// Minimizes `Σ|C[m+k,m] − ½a[m+k,m]Ω̂_k|²` on each diagonal; diagonals without
/// coupling get zero.
pub fn iontrap_design(target_block: &ComplexMatrix, basis: &IonTrapBasis) -> Result<IonTrapDesign> {
    let n = basis.n_fock;
    if target_block.shape() != (n, n) {
        return Err(shape_err(
            format!("{n}x{n}"),
            format!("{}x{}", target_block.nrows(), target_block.ncols()),
        ));
    }
    let tol = matrix::HERMITIAN_TOL * matrix::frobenius(target_block).max(1.0);
    matrix::ensure_hermitian(target_block, tol)?;
    let a = iontrap_coupling(basis).a_block;
    let mut design = IonTrapDesign::zeros(n);
    for k in -(n as i64 - 1)..n as i64 {
        let (num, den) = diagonal(n, k).fold((Complex64::new(0.0, 0.0), 0.0), |(num, den), (r, m)| {
            (num + target_block[(r, m)] * a[(r, m)], den + a[(r, m)] * a[(r, m)])
        });
        if den > 0.0 {
            design.set(k, num * (2.0 / den));
        }
    }
    Ok(design)
}

/// Dressed generator with off-diagonal blocks `½a[n,m]·Ω̂(±ω₀ + ω₀′(n−m))`.
///
/// The lower block uses the real-drive symmetry `Ω̂(−f) = conj(Ω̂(f))`, which together
/// with the paired block transpose requires `Ω̂_{−k} = conj(Ω̂_k)`.
pub fn iontrap_generator(design: &IonTrapDesign, basis: &IonTrapBasis) -> Result<ComplexMatrix> {
    let n = basis.n_fock;
    if design.n_fock() != n {
        return Err(shape_err(n, design.n_fock()));
    }
    for k in 1..n as i64 {
        let (p, q) = (design.at(k), design.at(-k));
        if (p - q.conj()).norm() > 1e-12 * p.norm().max(1.0) {
            return Err(Error::Contract(format!(
                "drive samples at k = ±{k} are not conjugate ({p} vs {q})"
            )));
        }
    }
    if design.at(0).im.abs() > 1e-12 * design.at(0).norm().max(1.0) {
        return Err(Error::Contract(format!("drive sample at k = 0 is not real ({})", design.at(0))));
    }
    let a = iontrap_coupling(basis).a_block;
    let mut g = matrix::zeros(2 * n);
    for r in 0..n {
        for c in 0..n {
            let v = design.at(r as i64 - c as i64) * (0.5 * a[(r, c)]);
            g[(r, n + c)] = v;
            g[(n + c, r)] = v.conj();
        }
    }
    Ok(g)
}

/// `Σ_m(C[m+k,m] − ½a[m+k,m]Ω̂_k)·a[m+k,m]` per diagonal `k`.
pub fn residual_projections(
    target_block: &ComplexMatrix,
    design: &IonTrapDesign,
    basis: &IonTrapBasis,
) -> Vec<(i64, f64)> {
    let n = basis.n_fock;
    let a = iontrap_coupling(basis).a_block;
    (-(n as i64 - 1)..n as i64)
        .map(|k| {
            let s: Complex64 = diagonal(n, k)
                .map(|(r, m)| (target_block[(r, m)] - design.at(k) * (0.5 * a[(r, m)])) * a[(r, m)])
                .sum();
            (k, s.norm())
        })
        .collect()
}

/// Joint least squares over every `Ω̂_k` at once; the minimum-norm solution sets
/// uncoupled diagonals to zero.
pub fn dense_design(target_block: &ComplexMatrix, basis: &IonTrapBasis) -> Result<IonTrapDesign> {
    let n = basis.n_fock;
    let a = iontrap_coupling(basis).a_block;
    let nk = 2 * n - 1;
    let mut mat = DMatrix::zeros(2 * n * n, 2 * nk);
    let mut rhs = DVector::zeros(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            let row = 2 * (r * n + c);
            let j = 2 * (r as i64 - c as i64 + n as i64 - 1) as usize;
            let w = 0.5 * a[(r, c)];
            mat[(row, j)] = w;
            mat[(row + 1, j + 1)] = w;
            rhs[row] = target_block[(r, c)].re;
            rhs[row + 1] = target_block[(r, c)].im;
        }
    }
    let x = mat
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Contract(e.to_string()))?;
    IonTrapDesign::new(n, (0..nk).map(|i| Complex64::new(x[2 * i], x[2 * i + 1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let m = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        matrix::hermitian_part(&m)
    }

    #[test]
    fn coupling_block() {
        let b = IonTrapBasis::with_defaults(2).unwrap();
        let cm = iontrap_coupling(&b);
        assert_eq!(cm.a_block, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let b = IonTrapBasis::with_defaults(5).unwrap();
        let cm = iontrap_coupling(&b);
        assert_eq!(cm.a_block, cm.a_block.transpose());
        assert_eq!(cm.a_block[(3, 2)], 3f64.sqrt());
        assert_eq!(cm.a_block[(0, 2)], 0.0);
        for r in 0..5 {
            for col in 0..5 {
                assert_eq!(cm.full[(r, col)], c(0.0, 0.0));
                assert_eq!(cm.full[(5 + r, 5 + col)], c(0.0, 0.0));
            }
        }
        assert_eq!(b.energies()[6], -0.5 + 0.1);
        assert_eq!(b.flip_frequency(-2), 1.0 - 0.2);
    }

    #[test]
    fn exact_and_zero_targets() {
        let b = IonTrapBasis::with_defaults(5).unwrap();
        let a = iontrap_coupling(&b).a_block;
        let target = matrix::from_real(&(a * 0.5));
        let d = iontrap_design(&target, &b).unwrap();
        for (k, w) in d.iter() {
            let expected = if k.abs() <= 1 { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert!((w - expected).norm() < 1e-14, "k = {k}");
        }
        let d = iontrap_design(&matrix::zeros(5), &b).unwrap();
        assert_eq!(d, IonTrapDesign::zeros(5));
        assert_eq!(iontrap_generator(&d, &b).unwrap(), matrix::zeros(10));
    }

    #[test]
    fn matches_dense_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = IonTrapBasis::with_defaults(6).unwrap();
        let target = random_hermitian(&mut rng, 6);
        let d = iontrap_design(&target, &b).unwrap();
        let dense = dense_design(&target, &b).unwrap();
        for ((_, x), (_, y)) in d.iter().zip(dense.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
        assert!(residual_projections(&target, &d, &b).iter().all(|&(_, r)| r < 1e-12));
        let g = iontrap_generator(&d, &b).unwrap();
        assert!(matrix::is_hermitian(&g, 1e-12));
    }

    #[test]
    fn generator_selection_and_symmetry() {
        let b = IonTrapBasis::with_defaults(4).unwrap();
        let mut d = IonTrapDesign::zeros(4);
        d.set(0, c(2.0, 0.0));
        let g = iontrap_generator(&d, &b).unwrap();
        for r in 0..8 {
            for col in 0..8 {
                let flip_same_n = r / 4 != col / 4 && r % 4 == col % 4;
                assert_eq!(g[(r, col)] != c(0.0, 0.0), flip_same_n);
            }
        }
        d.set(1, c(0.0, 1.0));
        assert!(matches!(iontrap_generator(&d, &b), Err(Error::Contract(_))));
        d.set(-1, c(0.0, -1.0));
        assert!(matrix::is_hermitian(&iontrap_generator(&d, &b).unwrap(), 0.0));
    }
}
