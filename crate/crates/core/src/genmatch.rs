//! Generator matching in the Fourier domain.
//!
//! For a harmonic oscillator every Bohr gap is an integer multiple of `ω₀`, so
//! `∫φ(t)Ṽ(t)dt` has entries `φ̂[m−n]·V[m,n]` and the design reduces to one complex
//! sample of the control spectrum per diagonal of the target generator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{shape_err, Error, Result};
use crate::matrix::{self, ComplexMatrix};
use crate::oscillator::{self, EnergySpectrum, TruncationSpec};

/// Target generator and control coupling on one truncated basis.
#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub h_g: ComplexMatrix,
    pub v: ComplexMatrix,
    pub bohr_unit: f64,
}

impl GeneratorPair {
    pub fn new(h_g: ComplexMatrix, v: ComplexMatrix) -> Result<Self> {
        Self::with_bohr_unit(h_g, v, 1.0)
    }

    pub fn with_bohr_unit(h_g: ComplexMatrix, v: ComplexMatrix, bohr_unit: f64) -> Result<Self> {
        matrix::ensure_same_dim(&h_g, &v)?;
        let tol = |m: &ComplexMatrix| matrix::HERMITIAN_TOL * matrix::frobenius(m).max(1.0);
        matrix::ensure_hermitian(&h_g, tol(&h_g))?;
        matrix::ensure_hermitian(&v, tol(&v))?;
        if !(bohr_unit > 0.0) || !bohr_unit.is_finite() {
            return Err(Error::InvalidInput(format!("Bohr unit must be positive, got {bohr_unit}")));
        }
        Ok(Self { h_g, v, bohr_unit })
    }

    pub fn dim(&self) -> usize {
        self.h_g.nrows()
    }

    /// `A[k] = Σ_n H_g[n+k,n]·conj(V[n+k,n])`.
    pub fn a_coeff(&self, k: usize) -> Complex64 {
        (0..self.dim().saturating_sub(k))
            .map(|n| self.h_g[(n + k, n)] * self.v[(n + k, n)].conj())
            .sum()
    }

    /// `B[k] = Σ_n |V[n+k,n]|²`.
    pub fn b_coeff(&self, k: usize) -> f64 {
        (0..self.dim().saturating_sub(k))
            .map(|n| self.v[(n + k, n)].norm_sqr())
            .sum()
    }
}

/// Spectrum samples `φ̂[k]` for `0 ≤ k ≤ K`; negative harmonics are conjugates.
#[derive(Debug, Clone)]
pub struct FourierDesign {
    phi: Vec<Complex64>,
    pub lambda: f64,
    /// `|φ̂[0]|² + 2Σ_{k≥1}|φ̂[k]|²`.
    pub energy: f64,
}

impl FourierDesign {
    /// Builds a design from nonnegative harmonics; `φ̂[0]` must be real.
    pub fn from_harmonics(phi: Vec<Complex64>, lambda: f64) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::InvalidInput("design needs at least the k = 0 harmonic".into()));
        }
        if phi[0].im != 0.0 {
            return Err(Error::Contract(format!("φ̂[0] must be real, got {}", phi[0])));
        }
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("harmonics must be finite".into()));
        }
        let energy = phi[0].norm_sqr() + 2.0 * phi[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        Ok(Self { phi, lambda, energy })
    }

    pub fn zeros(max_harmonic: usize) -> Self {
        Self {
            phi: vec![Complex64::new(0.0, 0.0); max_harmonic + 1],
            lambda: 0.0,
            energy: 0.0,
        }
    }

    pub fn max_harmonic(&self) -> usize {
        self.phi.len() - 1
    }

    /// `φ̂[k]` for any integer `k`, zero outside `[−K, K]`.
    pub fn at(&self, k: i64) -> Complex64 {
        match self.phi.get(k.unsigned_abs() as usize) {
            None => Complex64::new(0.0, 0.0),
            Some(&z) if k < 0 => z.conj(),
            Some(&z) => z,
        }
    }

    pub fn harmonics(&self) -> &[Complex64] {
        &self.phi
    }
}

/// `T·(H₀ + μq³)`, the generator of `e^{−iT(H₀ + μq³)}`.
pub fn anharmonic_generator(spec: &TruncationSpec, mu: f64, t_end: f64) -> Result<ComplexMatrix> {
    if spec.axes() != 1 {
        return Err(Error::InvalidTruncation("expected a 1-axis truncation".into()));
    }
    let h0 = EnergySpectrum::oscillator(spec).hamiltonian();
    let q3 = oscillator::q_power_matrix(spec, 3)?;
    Ok((h0 + q3 * Complex64::new(mu, 0.0)) * Complex64::new(t_end, 0.0))
}

/// Constraint energy as a function of the distance `d = u − λ` below the branch edge `u`.
struct EnergyCurve {
    /// `(|A[k]|², offset, weight)` with denominator `offset + weight·d`.
    terms: Vec<(f64, f64, f64)>,
}

impl EnergyCurve {
    fn value(&self, d: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a2, off, w)| {
                let den = off + w * d;
                let mult = if w == 1.0 { 1.0 } else { 2.0 };
                mult * a2 / (den * den)
            })
            .sum()
    }
}

/// Closed-form energy-constrained design over harmonics `0..=K`.
///
/// `φ̂[0] = A[0]/(B[0] − λ)` and `φ̂[k] = A[k]/(B[k] − 2λ)` for `k ≥ 1`, with `λ` on the
/// branch below `min(B[0], B[k]/2)` where every denominator is positive. Harmonics with
/// `B[k] = 0` cannot influence the error and are set to zero.
pub fn fourier_design(pair: &GeneratorPair, energy: f64, max_harmonic: usize) -> Result<FourierDesign> {
    let d = pair.dim();
    if max_harmonic >= d {
        return Err(Error::InvalidInput(format!(
            "max harmonic {max_harmonic} exceeds dimension − 1 = {}",
            d - 1
        )));
    }
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
    }
    let a: Vec<Complex64> = (0..=max_harmonic).map(|k| pair.a_coeff(k)).collect();
    let b: Vec<f64> = (0..=max_harmonic).map(|k| pair.b_coeff(k)).collect();
    if a.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::DegenerateTarget("every A[k] vanishes, so any multiplier gives the zero design".into()));
    }
    let active: Vec<usize> = (0..=max_harmonic).filter(|&k| b[k] > 0.0).collect();
    // Branch edge in λ: each denominator vanishes at B[0] or B[k]/2.
    let edge = |k: usize| if k == 0 { b[0] } else { 0.5 * b[k] };
    let u = active.iter().map(|&k| edge(k)).fold(f64::INFINITY, f64::min);
    let curve = EnergyCurve {
        terms: active
            .iter()
            .map(|&k| {
                let w = if k == 0 { 1.0 } else { 2.0 };
                (a[k].norm_sqr(), b[k] - w * u, w)
            })
            .collect(),
    };
    let pole = curve.terms.iter().any(|&(a2, off, _)| a2 > 0.0 && off <= 0.0);
    let sup = if pole { f64::INFINITY } else { curve.value(0.0) };
    if energy >= sup {
        return Err(Error::InfeasibleEnergy {
            energy,
            reason: format!("largest reachable energy on the minimizing branch is {sup:e}"),
        });
    }

    // The energy falls monotonically in d; bracket and bisect in log d.
    let scale = b.iter().cloned().fold(1.0, f64::max);
    let mut hi = scale;
    while curve.value(hi) > energy {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InfeasibleEnergy { energy, reason: "bracket overflow".into() });
        }
    }
    let mut lo = hi;
    while curve.value(lo) < energy {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::InfeasibleEnergy { energy, reason: "bracket underflow".into() });
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if curve.value(mid) > energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dist = if (curve.value(lo) - energy).abs() < (curve.value(hi) - energy).abs() { lo } else { hi };
    let lambda = u - dist;

    let mut phi = vec![Complex64::new(0.0, 0.0); max_harmonic + 1];
    for (&k, &(_, off, w)) in active.iter().zip(&curve.terms) {
        phi[k] = a[k] / (off + w * dist);
    }
    // φ̂[0] is real whenever H_g and V are Hermitian; drop round-off.
    phi[0].im = 0.0;
    let design = FourierDesign::from_harmonics(phi, lambda)?;
    if (design.energy - energy).abs() > 1e-8 * energy {
        return Err(Error::InfeasibleEnergy {
            energy,
            reason: format!("root search reached energy {:e}", design.energy),
        });
    }
    Ok(design)
}

/// Energy at `λ = 0`, the unconstrained per-diagonal least-squares design.
pub fn unconstrained_energy(pair: &GeneratorPair, max_harmonic: usize) -> f64 {
    (0..=max_harmonic.min(pair.dim() - 1))
        .filter_map(|k| {
            let b = pair.b_coeff(k);
            (b > 0.0).then(|| {
                let e = pair.a_coeff(k).norm_sqr() / (b * b);
                if k == 0 { e } else { 2.0 * e }
            })
        })
        .sum()
}

/// Plug-in residuals of the stationarity conditions, one per harmonic.
///
/// `k ≥ 1`: `−Σ_n(H_g[n+k,n] − φ̂[k]V[n+k,n])·conj(V[n+k,n]) − 2λφ̂[k]`;
/// `k = 0` uses `λ` in place of `2λ`, matching the closed form for `φ̂[0]`.
pub fn stationarity_residuals(pair: &GeneratorPair, design: &FourierDesign) -> Vec<f64> {
    let d = pair.dim();
    (0..=design.max_harmonic())
        .map(|k| {
            if pair.b_coeff(k) == 0.0 {
                return 0.0;
            }
            let phi = design.at(k as i64);
            let s: Complex64 = (0..d - k)
                .map(|n| (pair.h_g[(n + k, n)] - phi * pair.v[(n + k, n)]) * pair.v[(n + k, n)].conj())
                .sum();
            let mult = if k == 0 { 1.0 } else { 2.0 };
            (-s - phi * (mult * design.lambda)).norm()
        })
        .collect()
}

/// `H_φ[m,n] = φ̂[m−n]·V[m,n]`.
pub fn realized_generator(design: &FourierDesign, pair: &GeneratorPair) -> Result<ComplexMatrix> {
    let d = pair.dim();
    let kmax = design.max_harmonic();
    let mut out = matrix::zeros(d);
    for m in 0..d {
        for n in 0..d {
            let v = pair.v[(m, n)];
            if v.norm() == 0.0 {
                continue;
            }
            if m.abs_diff(n) > kmax {
                return Err(Error::Coverage { row: m, col: n });
            }
            out[(m, n)] = design.at(m as i64 - n as i64) * v;
        }
    }
    Ok(out)
}

/// Noise-to-signal energy ratio `‖H_g − H_φ‖²_F / ‖H_g‖²_F`.
pub fn nser(pair: &GeneratorPair, design: &FourierDesign) -> Result<f64> {
    let total = matrix::frobenius_sqr(&pair.h_g);
    if total == 0.0 {
        return Err(Error::ZeroNorm("target generator has zero norm".into()));
    }
    let h = realized_generator(design, pair)?;
    Ok(matrix::frobenius_sqr(&(&pair.h_g - h)) / total)
}

/// `(q₁ − q₂)³ = q₁³⊗I − I⊗q₂³ − 3q₁²⊗q₂ + 3q₁⊗q₂²` on the product basis.
pub fn two_oscillator_interaction(spec1: &TruncationSpec, spec2: &TruncationSpec) -> Result<ComplexMatrix> {
    if spec1.axes() != 1 || spec2.axes() != 1 {
        return Err(Error::InvalidTruncation("expected 1-axis truncations".into()));
    }
    let powers = |spec: &TruncationSpec| -> Result<Vec<ComplexMatrix>> {
        let mut out = vec![matrix::identity(spec.n_per_axis())];
        for k in 1..=3 {
            out.push(oscillator::q_power_matrix(spec, k)?);
        }
        Ok(out)
    };
    let (p1, p2) = (powers(spec1)?, powers(spec2)?);
    let three = Complex64::new(3.0, 0.0);
    Ok(matrix::kron(&p1[3], &p2[0]) - matrix::kron(&p1[0], &p2[3])
        - matrix::kron(&p1[2], &p2[1]) * three
        + matrix::kron(&p1[1], &p2[2]) * three)
}

/// Rank of the column collection `{H₀ʳ V H₀ˢ ψ₀ : 0 ≤ r, s < d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Controllability {
    pub rank: usize,
    pub controllable: bool,
}

pub fn controllability_rank(
    h0: &ComplexMatrix,
    v: &ComplexMatrix,
    psi0: &[Complex64],
) -> Result<Controllability> {
    matrix::ensure_same_dim(h0, v)?;
    let d = h0.nrows();
    if psi0.len() != d {
        return Err(shape_err(d, psi0.len()));
    }
    if psi0.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidInput("initial state must be nonzero".into()));
    }
    let psi = nalgebra::DVector::from_column_slice(psi0);
    let mut right = Vec::with_capacity(d);
    let mut x = psi;
    for _ in 0..d {
        right.push(v * &x);
        x = h0 * x;
    }
    let mut cols = ComplexMatrix::zeros(d, d * d);
    for (s, base) in right.into_iter().enumerate() {
        let mut y = base;
        for r in 0..d {
            cols.set_column(r * d + s, &y);
            y = h0 * y;
        }
    }
    let sv = cols.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if smax == 0.0 { 0 } else { sv.iter().filter(|&&s| s > 1e-10 * smax).count() };
    Ok(Controllability { rank, controllable: rank == d })
}

/// Dense real least squares over all harmonics jointly, used as an independent check.
pub fn dense_least_squares(pair: &GeneratorPair, max_harmonic: usize) -> Result<Vec<Complex64>> {
    // Unknowns: φ̂[0], then (Re φ̂[k], Im φ̂[k]) for k ≥ 1; residual entries over all (m, n)
    // split into real and imaginary parts.
    let d = pair.dim();
    let nvar = 1 + 2 * max_harmonic;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for m in 0..d {
        for n in 0..d {
            let v = pair.v[(m, n)];
            let h = pair.h_g[(m, n)];
            let k = m as i64 - n as i64;
            let mut re = vec![0.0; nvar];
            let mut im = vec![0.0; nvar];
            if k == 0 {
                re[0] = v.re;
                im[0] = v.im;
            } else if k.unsigned_abs() as usize <= max_harmonic {
                let j = 1 + 2 * (k.unsigned_abs() as usize - 1);
                let sign = if k > 0 { 1.0 } else { -1.0 };
                // (x + i·sign·y)·v
                re[j] = v.re;
                re[j + 1] = -sign * v.im;
                im[j] = v.im;
                im[j + 1] = sign * v.re;
            }
            rows.push(re);
            rhs.push(h.re);
            rows.push(im);
            rhs.push(h.im);
        }
    }
    let a = DMatrix::from_fn(rows.len(), nvar, |r, c| rows[r][c]);
    let y = nalgebra::DVector::from_vec(rhs);
    let x = a
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Contract(e.to_string()))?;
    let mut out = vec![Complex64::new(x[0], 0.0)];
    for k in 1..=max_harmonic {
        out.push(Complex64::new(x[1 + 2 * (k - 1)], x[2 + 2 * (k - 1)]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q_pair(n: usize, mu: f64, t: f64) -> GeneratorPair {
        let spec = TruncationSpec::one_d(n).unwrap();
        let hg = anharmonic_generator(&spec, mu, t).unwrap();
        let v = oscillator::q_power_matrix(&spec, 1).unwrap();
        GeneratorPair::new(hg, v).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let m = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        matrix::hermitian_part(&m)
    }

    #[test]
    fn anharmonic_generator_entries() {
        let spec = TruncationSpec::one_d(10).unwrap();
        let h = anharmonic_generator(&spec, 0.0, 2.0).unwrap();
        for n in 0..10 {
            assert!((h[(n, n)].re - 2.0 * (n as f64 + 0.5)).abs() < 1e-15);
        }
        let (mu, t) = (0.3, 1.5);
        let h = anharmonic_generator(&spec, mu, t).unwrap();
        assert!(matrix::is_hermitian(&h, 1e-12));
        for n in 0..7 {
            let expected = ((n + 1) as f64 * (n + 2) as f64 * (n + 3) as f64).sqrt() / 2f64.powf(1.5);
            assert!((h[(n + 3, n)].re / (t * mu) - expected).abs() < 1e-12);
        }
        // q³ has no diagonal, so the diagonal is exactly T(n + 1/2).
        for n in 0..10 {
            assert!((h[(n, n)].re - t * (n as f64 + 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_q_only_first_harmonic() {
        let pair = q_pair(8, 0.1, 1.0);
        let d = fourier_design(&pair, 0.5, 7).unwrap();
        for k in 0..=7 {
            if k != 1 {
                assert_eq!(d.at(k as i64), c(0.0, 0.0));
            }
        }
        assert!((d.energy - 0.5).abs() < 1e-8 * 0.5);
        assert!(stationarity_residuals(&pair, &d).iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn design_on_random_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pair = GeneratorPair::new(random_hermitian(&mut rng, 6), random_hermitian(&mut rng, 6)).unwrap();
        for energy in [0.01, 0.5, 3.0] {
            let d = fourier_design(&pair, energy, 5).unwrap();
            assert!((d.energy - energy).abs() < 1e-8 * energy);
            let res = stationarity_residuals(&pair, &d);
            assert!(res.iter().all(|&r| r < 1e-10), "{res:?}");
            let h = realized_generator(&d, &pair).unwrap();
            assert_eq!(h, h.adjoint());
        }
    }

    #[test]
    fn nser_non_increasing_in_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pair = GeneratorPair::new(random_hermitian(&mut rng, 5), random_hermitian(&mut rng, 5)).unwrap();
        let cap = unconstrained_energy(&pair, 4);
        let values: Vec<f64> = [0.1, 0.4, 0.9]
            .iter()
            .map(|f| nser(&pair, &fourier_design(&pair, f * cap, 4).unwrap()).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
        assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn unconstrained_limit_is_per_diagonal_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = GeneratorPair::new(random_hermitian(&mut rng, 6), random_hermitian(&mut rng, 6)).unwrap();
        let e0 = unconstrained_energy(&pair, 5);
        let d = fourier_design(&pair, e0, 5).unwrap();
        assert!(d.lambda.abs() < 1e-8);
        for k in 0..=5 {
            let ls = pair.a_coeff(k) / pair.b_coeff(k);
            let got = d.at(k as i64);
            let ls = if k == 0 { c(ls.re, 0.0) } else { ls };
            assert!((got - ls).norm() < 1e-8, "k = {k}");
        }
        let dense = dense_least_squares(&pair, 5).unwrap();
        for k in 0..=5 {
            assert!((dense[k] - d.at(k as i64)).norm() < 1e-8);
        }
    }

    #[test]
    fn exact_match_when_coupling_proportional() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_hermitian(&mut rng, 5);
        let hg = &v * c(0.7, 0.0);
        let pair = GeneratorPair::new(hg, v).unwrap();
        let d = fourier_design(&pair, unconstrained_energy(&pair, 4), 4).unwrap();
        assert!(nser(&pair, &d).unwrap() < 1e-12);
    }

    #[test]
    fn zero_design_and_errors() {
        let pair = q_pair(4, 0.1, 1.0);
        assert_eq!(nser(&pair, &FourierDesign::zeros(3)).unwrap(), 1.0);
        assert_eq!(realized_generator(&FourierDesign::zeros(3), &pair).unwrap(), matrix::zeros(4));
        assert!(matches!(
            realized_generator(&FourierDesign::zeros(0), &pair),
            Err(Error::Coverage { row: 0, col: 1 })
        ));
        let zero = GeneratorPair::new(matrix::zeros(4), pair.v.clone()).unwrap();
        assert!(matches!(fourier_design(&zero, 1.0, 3), Err(Error::DegenerateTarget(_))));
        assert!(matches!(nser(&zero, &FourierDesign::zeros(3)), Err(Error::ZeroNorm(_))));
        assert!(fourier_design(&pair, 1.0, 4).is_err());
    }

    #[test]
    fn hard_case_is_infeasible() {
        // The smallest edge belongs to a diagonal the target does not touch.
        let v = ComplexMatrix::from_fn(3, 3, |r, col| if r.abs_diff(col) == 1 { c(0.1, 0.0) } else if r == col { c(5.0, 0.0) } else { c(0.0, 0.0) });
        let hg = ComplexMatrix::from_fn(3, 3, |r, col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let pair = GeneratorPair::new(hg, v).unwrap();
        assert!(fourier_design(&pair, 1e-3, 2).is_ok());
        assert!(matches!(fourier_design(&pair, 1e6, 2), Err(Error::InfeasibleEnergy { .. })));
    }

    #[test]
    fn two_oscillator_structure() {
        let (s1, s2) = (TruncationSpec::one_d(4).unwrap(), TruncationSpec::one_d(4).unwrap());
        let v = two_oscillator_interaction(&s1, &s2).unwrap();
        assert!(matrix::is_hermitian(&v, 1e-12));
        for i in 0..16 {
            assert_eq!(v[(i, i)], c(0.0, 0.0));
        }
        // Swapping the oscillators flips the sign.
        let swap = |i: usize| (i % 4) * 4 + i / 4;
        for r in 0..16 {
            for col in 0..16 {
                assert!((v[(swap(r), swap(col))] + v[(r, col)]).norm() < 1e-12);
            }
        }
        // Brute force: q₁ − q₂ on the product basis, cubed in an enlarged basis.
        let big = TruncationSpec::one_d(8).unwrap();
        let q = oscillator::q_power_matrix(&big, 1).unwrap();
        let id = matrix::identity(8);
        let diff = matrix::kron(&q, &id) - matrix::kron(&id, &q);
        let cube = &diff * &diff * &diff;
        for r in 0..16 {
            for col in 0..16 {
                let (r1, r2, c1, c2) = (r / 4, r % 4, col / 4, col % 4);
                let e = cube[(r1 * 8 + r2, c1 * 8 + c2)];
                assert!((e - v[(r, col)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn controllability_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 6;
        let h0 = random_hermitian(&mut rng, d);
        let psi: Vec<Complex64> = (0..d).map(|_| c(rng.random_range(-1.0..1.0), 0.0)).collect();
        let zero_v = controllability_rank(&h0, &matrix::zeros(d), &psi).unwrap();
        assert_eq!(zero_v, Controllability { rank: 0, controllable: false });
        let v = random_hermitian(&mut rng, d);
        let flat = controllability_rank(&matrix::identity(d), &v, &psi).unwrap();
        assert_eq!(flat.rank, 1);
        assert!(!flat.controllable);
        assert!(controllability_rank(&h0, &v, &psi).unwrap().controllable);
        assert!(controllability_rank(&h0, &v, &vec![c(0.0, 0.0); d]).is_err());
    }
}
