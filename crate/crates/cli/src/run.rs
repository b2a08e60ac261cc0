//! Experiment pipelines behind the `oscgate` command.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use oscgate_core::dyson1d::{self, DysonOrder};
use oscgate_core::em3d::{self, EMOperators};
use oscgate_core::gates::{self, GateTarget, StandardGate};
use oscgate_core::genmatch::{self, GeneratorPair};
use oscgate_core::iontrap::{self, IonTrapBasis};
use oscgate_core::matrix;
use oscgate_core::oracle;
use oscgate_core::oscillator::{self, EnergySpectrum, TruncationSpec};
use oscgate_core::signal::ControlSignal;
use oscgate_core::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::matrix_csv::{parse_matrix_csv, MatrixCsvError};
use crate::report::{Check, Curve, RunReport};

#[derive(Debug)]
pub enum RunError {
    /// A configuration value that parsed but cannot be used.
    Config { field: String, message: String },
    Core(oscgate_core::Error),
    MatrixFile { path: String, source: MatrixCsvError },
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config { .. } => "config",
            RunError::Core(_) => "solver",
            RunError::MatrixFile { .. } => "matrix-file",
            RunError::Io { .. } => "io",
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            RunError::Config { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config { field, message } => write!(f, "field {field}: {message}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::MatrixFile { path, source } => write!(f, "{path}: {source}"),
            RunError::Io { path, source } => write!(f, "{path}: {source}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<oscgate_core::Error> for RunError {
    fn from(e: oscgate_core::Error) -> Self {
        RunError::Core(e)
    }
}

fn config_err(field: &str, message: impl Into<String>) -> RunError {
    RunError::Config { field: field.into(), message: message.into() }
}

type Result<T> = std::result::Result<T, RunError>;

/// Thread pool capped by `OSCGATE_THREADS` when it holds a positive integer.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("OSCGATE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool builds")
}

/// Runs the configured experiment. Relative `target.file` paths resolve against `base_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(cfg.clone());
    thread_pool().install(|| match cfg.experiment() {
        "field-1d" => field_1d(cfg, base_dir, &mut report),
        "em-3d" => em_3d(cfg, base_dir, &mut report),
        "genmatch" => genmatch_run(cfg, base_dir, &mut report),
        "iontrap" => iontrap_run(cfg, base_dir, &mut report),
        "oracle-check" => oracle_check(cfg, &mut report),
        other => Err(config_err("experiment", format!("unknown experiment {other:?}"))),
    })?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    matrix::hermitian_part(&m)
}

fn read_matrix(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Option<ComplexMatrix>> {
    let Some(file) = cfg.str("target.file") else { return Ok(None) };
    let path = base_dir.join(file);
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|source| RunError::Io { path: shown.clone(), source })?;
    parse_matrix_csv(&text)
        .map(Some)
        .map_err(|source| RunError::MatrixFile { path: shown, source })
}

/// Gate target from `target.*` keys, sized `dim` where the gate family allows it.
fn resolve_gate(cfg: &ExperimentConfig, base_dir: &Path, dim: usize, default: &str) -> Result<GateTarget> {
    let gate = if let Some(m) = read_matrix(cfg, base_dir)? {
        GateTarget::new(m, cfg.str("target.file").unwrap_or("file"))?
    } else {
        let name = cfg.str("target.name").unwrap_or(default);
        match name {
            "hadamard" => gates::hadamard_tensor(cfg.int("target.r").unwrap_or(3) as u32)?,
            "qft" => gates::qft_gate(dim)?,
            "identity" => GateTarget::new(matrix::identity(dim), "identity")?,
            "perturbed-identity" => {
                let delta = cfg.real_or("target.delta", 0.05);
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
                let x = random_hermitian(&mut rng, dim);
                let m = matrix::identity(dim) + x * Complex64::new(0.0, delta);
                GateTarget::new(matrix::nearest_unitary(&m)?, format!("perturbed-identity({delta})"))?
            }
            other => {
                let g = StandardGate::from_name(other, cfg.real("target.theta"))
                    .map_err(|e| config_err("target.name", e.to_string()))?;
                gates::standard_gate(g)
            }
        }
    };
    let gate = match cfg.int("target.k") {
        Some(k) => gate.fractional(k as u32)?,
        None => gate,
    };
    if gate.dim() != dim {
        return Err(config_err(
            "truncation.N",
            format!("target is {}x{} but the truncated space has dimension {dim}", gate.dim(), gate.dim()),
        ));
    }
    Ok(gate)
}

/// Lab-frame target. In the default interaction frame the configured gate is what the
/// perturbation should achieve, so the lab target carries the free evolution as well.
fn lab_target(cfg: &ExperimentConfig, gate: &GateTarget, spectrum: &EnergySpectrum, t_end: f64) -> Result<GateTarget> {
    match cfg.str("target.frame").unwrap_or("interaction") {
        "lab" => Ok(gate.clone()),
        _ => Ok(GateTarget::new(spectrum.evolution(t_end) * &gate.matrix, gate.label.clone())?),
    }
}

/// Horizons and sample counts on a fixed step `grid.T / grid.M`.
fn horizons(cfg: &ExperimentConfig, default_m: usize) -> Result<Vec<(f64, usize)>> {
    let t0 = cfg.real_or("grid.T", 1.0);
    let m0 = cfg.usize_or("grid.M", default_m);
    if m0 < 2 {
        return Err(config_err("grid.M", "need at least 2 samples"));
    }
    let dt = t0 / m0 as f64;
    let ts = cfg.reals("sweep.T").map(|v| v.to_vec()).unwrap_or_else(|| vec![t0]);
    ts.iter()
        .map(|&t| {
            let m = (t / dt).round();
            if m < 2.0 || ((m * dt) - t).abs() > 1e-9 * t {
                return Err(config_err(
                    "sweep.T",
                    format!("T = {t} is not a multiple (at least 2) of the grid step {dt}"),
                ));
            }
            Ok((t, m as usize))
        })
        .collect()
}

fn one_d_spec(cfg: &ExperimentConfig, default_n: usize) -> Result<TruncationSpec> {
    Ok(TruncationSpec::one_d(cfg.usize_or("truncation.N", default_n))?)
}

struct FieldPoint {
    t: f64,
    m: usize,
    design: dyson1d::FieldDesign,
    target: GateTarget,
    nsr: f64,
    seconds: f64,
}

fn field_1d(cfg: &ExperimentConfig, base_dir: &Path, report: &mut RunReport) -> Result<()> {
    let spec = one_d_spec(cfg, 8)?;
    let gate = resolve_gate(cfg, base_dir, spec.dim(), "hadamard")?;
    let spectrum = EnergySpectrum::oscillator(&spec);
    let eps = cfg.real_or("coupling.eps", 0.1);
    let alpha = cfg.real_or("constraint.alpha_diss", 1.0);
    let e_diss = cfg.real_or("constraint.e_diss", 0.5);
    let grid = horizons(cfg, 32)?;

    let points: Vec<FieldPoint> = grid
        .par_iter()
        .map(|&(t, m)| {
            let start = Instant::now();
            let target = lab_target(cfg, &gate, &spectrum, t)?;
            let kernels = dyson1d::error_kernels(&target, &spec, t, m, eps)?;
            let design = dyson1d::optimal_field(&kernels, alpha, e_diss)?;
            let u = dyson1d::dyson_gate(&design.field, &spec, 1.0, eps, DysonOrder::Second)?.u;
            let nsr = dyson1d::nsr(&target.matrix, &u)?;
            Ok(FieldPoint { t, m, design, target, nsr, seconds: start.elapsed().as_secs_f64() })
        })
        .collect::<Result<_>>()?;

    // Padded-field mode: a shorter horizon's best field, extended with zeros, is
    // always available at a longer horizon, so the best NSR never increases.
    let mut curve = Curve::new(
        "nsr",
        &["T", "M", "nsr", "nsr_optimal", "padded", "lambda", "residual", "energy", "condition"],
    );
    let mut best: Option<ControlSignal> = None;
    let mut last_u = None;
    for p in &points {
        let mut chosen = (p.nsr, p.design.field.clone(), false);
        if let Some(prev) = &best {
            let padded = prev.zero_padded(p.t)?;
            let u = dyson1d::dyson_gate(&padded, &spec, 1.0, eps, DysonOrder::Second)?.u;
            let nsr = dyson1d::nsr(&p.target.matrix, &u)?;
            if nsr < chosen.0 {
                chosen = (nsr, padded, true);
            }
        }
        curve.push(vec![
            p.t,
            p.m as f64,
            chosen.0,
            p.nsr,
            if chosen.2 { 1.0 } else { 0.0 },
            p.design.lambda,
            p.design.residual,
            p.design.energy,
            p.design.condition,
        ]);
        report.checks.push(Check::at_most(&format!("stationarity_residual[T={}]", p.t), p.design.residual, 1e-8));
        report.checks.push(Check::at_most(
            &format!("dissipation_relative_error[T={}]", p.t),
            (p.design.energy - e_diss).abs() / e_diss.max(f64::MIN_POSITIVE),
            1e-8,
        ));
        report.points.push(json!({
            "T": p.t, "M": p.m, "nsr": chosen.0, "nsr_optimal": p.nsr, "padded": chosen.2,
            "lambda": p.design.lambda, "residual": p.design.residual, "energy": p.design.energy,
            "condition": p.design.condition, "runtime_seconds": p.seconds,
        }));
        last_u = Some(dyson1d::dyson_gate(&chosen.1, &spec, 1.0, eps, DysonOrder::Second)?.u);
        best = Some(chosen.1);
    }
    let nsr = curve.column("nsr").unwrap_or_default();
    let rise = nsr.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    report.checks.push(Check::at_most("nsr_increase", rise, 0.0));

    if let Some(field) = &best {
        let mut fc = Curve::new("field", &["t", "E"]);
        for (t, e) in field.times().into_iter().zip(field.samples()) {
            fc.push(vec![t, *e]);
        }
        report.curves.push(fc);
    }
    report.curves.push(curve);
    report.summary.insert("target".into(), json!(gate.label));
    report.summary.insert("dimension".into(), json!(spec.dim()));
    report.matrices.push(("target".into(), gate.matrix.clone()));
    if let Some(u) = last_u {
        report.matrices.push(("achieved".into(), u));
    }
    Ok(())
}

fn em_3d(cfg: &ExperimentConfig, base_dir: &Path, report: &mut RunReport) -> Result<()> {
    let n = cfg.usize_or("truncation.N", 3);
    if cfg.int("truncation.axes").is_some_and(|a| a != 3) {
        return Err(config_err("truncation.axes", "em-3d needs 3 axes"));
    }
    let spec = TruncationSpec::three_d(n)?;
    let ops = EMOperators::new(&spec)?;
    let gate = resolve_gate(cfg, base_dir, spec.dim(), "perturbed-identity")?;
    let charge = cfg.real_or("coupling.charge", 0.1);
    let eps0 = cfg.real_or("constraint.eps0", 0.1);
    let grid = horizons(cfg, 16)?;
    let seed = cfg.seed();

    let points: Vec<_> = grid
        .par_iter()
        .map(|&(t, m)| {
            let start = Instant::now();
            let target = lab_target(cfg, &gate, ops.spectrum(), t)?;
            let terms = em3d::em_error_terms_with(&ops, &target, t, m, charge)?;
            let design = em3d::em_optimal_field(&terms, None, eps0)?;
            let u = em3d::em_dyson_gate_with(&ops, &design.xi_opt, charge).u;
            let nsr = dyson1d::nsr(&target.matrix, &u)?;
            let model = terms.error_model(&design.xi_opt)? / matrix::frobenius_sqr(&target.matrix);
            // Smallest Rayleigh quotient of the overlap form over random directions.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ m as u64);
            let psd = (0..100)
                .map(|_| {
                    let x = DVector::from_fn(terms.alpha.len(), |_, _| rng.random_range(-1.0..1.0));
                    x.dot(&(&terms.beta_overlap * &x)) / x.norm_squared()
                })
                .fold(f64::INFINITY, f64::min);
            Ok((t, m, design, nsr, model, psd, u, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut curve = Curve::new(
        "nsr",
        &["T", "M", "nsr", "nsr_model", "lambda", "residual", "constraint_value", "condition", "min_overlap_quotient"],
    );
    for (t, m, design, nsr, model, psd, _, secs) in &points {
        curve.push(vec![*t, *m as f64, *nsr, *model, design.lambda, design.residual, design.constraint_value, design.condition, *psd]);
        report.checks.push(Check::at_most(&format!("stationarity_residual[T={t}]"), design.residual, 1e-8));
        report.checks.push(Check::at_most(
            &format!("constraint_relative_error[T={t}]"),
            if eps0 > 0.0 { (design.constraint_value - eps0).abs() / eps0 } else { design.constraint_value },
            1e-6,
        ));
        report.checks.push(Check::at_most(&format!("overlap_form_negativity[T={t}]"), (-psd).max(0.0), 1e-12));
        report.points.push(json!({
            "T": t, "M": m, "nsr": nsr, "nsr_model": model, "lambda": design.lambda,
            "residual": design.residual, "constraint_value": design.constraint_value,
            "condition": design.condition, "runtime_seconds": secs,
        }));
    }
    if let Some((_, _, design, _, _, _, u, _)) = points.last() {
        let mut fc = Curve::new("field", &["t", "B1", "E1", "B2", "E2", "B3", "E3"]);
        for (t, xi) in design.xi_opt.times().into_iter().zip(design.xi_opt.samples()) {
            let mut row = vec![t];
            row.extend_from_slice(xi);
            fc.push(row);
        }
        report.curves.push(fc);
        report.matrices.push(("achieved".into(), u.clone()));
    }
    report.curves.push(curve);
    report.summary.insert("target".into(), json!(gate.label));
    report.summary.insert("dimension".into(), json!(spec.dim()));
    report.matrices.push(("target".into(), gate.matrix.clone()));
    Ok(())
}

fn genmatch_run(cfg: &ExperimentConfig, base_dir: &Path, report: &mut RunReport) -> Result<()> {
    let anharmonic = cfg.str("target.file").is_none() && cfg.str("target.name").unwrap_or("anharmonic") == "anharmonic";
    let energy = cfg.real_or("constraint.energy", 1.0);
    let mu = cfg.real_or("target.mu", 0.1);
    let t_end = cfg.real_or("grid.T", 1.0);
    let potential = cfg.str("coupling.potential").unwrap_or("q");
    let sizes: Vec<usize> = match cfg.ints("sweep.N") {
        Some(v) => v.iter().map(|&n| n as usize).collect(),
        None => vec![cfg.usize_or("truncation.N", 8)],
    };
    if !anharmonic && sizes.len() > 1 {
        return Err(config_err("sweep.N", "a gate target fixes the dimension; sweep.N needs target.name = \"anharmonic\""));
    }

    let points: Vec<_> = sizes
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let spec = TruncationSpec::one_d(n)?;
            let (h_g, gate) = if anharmonic {
                (genmatch::anharmonic_generator(&spec, mu, t_end)?, None)
            } else {
                let g = resolve_gate(cfg, base_dir, n, "hadamard")?;
                (matrix::hermitian_generator(&g.matrix)?, Some(g))
            };
            let v = match potential {
                "q3" => oscillator::q_power_matrix(&spec, 3)?,
                _ => oscillator::q_power_matrix(&spec, 1)?,
            };
            let pair = GeneratorPair::new(h_g, v)?;
            let design = genmatch::fourier_design(&pair, energy, n - 1)?;
            let nser = genmatch::nser(&pair, &design)?;
            let residual = genmatch::stationarity_residuals(&pair, &design).into_iter().fold(0.0, f64::max);
            let realized = genmatch::realized_generator(&design, &pair)?;
            let e0 = genmatch::unconstrained_energy(&pair, n - 1);
            Ok((n, pair, design, nser, residual, realized, gate, e0, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut curve = Curve::new("nser", &["N", "nser", "lambda", "energy", "max_residual", "unconstrained_energy"]);
    for (n, _, design, nser, residual, _, _, e0, secs) in &points {
        curve.push(vec![*n as f64, *nser, design.lambda, design.energy, *residual, *e0]);
        report.checks.push(Check::at_most(&format!("stationarity_residual[N={n}]"), *residual, 1e-10));
        report.checks.push(Check::at_most(
            &format!("energy_relative_error[N={n}]"),
            (design.energy - energy).abs() / energy,
            1e-8,
        ));
        report.points.push(json!({
            "N": n, "nser": nser, "lambda": design.lambda, "energy": design.energy,
            "max_residual": residual, "unconstrained_energy": e0, "runtime_seconds": secs,
        }));
    }
    if let Some((_, pair, design, _, _, realized, gate, _, _)) = points.last() {
        let mut spectrum = Curve::new("spectrum", &["k", "bohr_frequency", "re", "im", "abs"]);
        for (k, z) in design.harmonics().iter().enumerate() {
            spectrum.push(vec![k as f64, k as f64 * pair.bohr_unit, z.re, z.im, z.norm()]);
        }
        report.curves.push(spectrum);
        if let Some(g) = gate {
            report.summary.insert("target".into(), json!(g.label));
            report.matrices.push(("target".into(), g.matrix.clone()));
        } else {
            report.summary.insert("target".into(), json!(format!("anharmonic(mu={mu}, T={t_end})")));
        }
        report.matrices.push(("generator".into(), pair.h_g.clone()));
        report.matrices.push(("realized".into(), realized.clone()));
    }
    report.curves.push(curve);
    Ok(())
}

fn iontrap_run(cfg: &ExperimentConfig, base_dir: &Path, report: &mut RunReport) -> Result<()> {
    let n = cfg.usize_or("truncation.N", 6);
    let basis = IonTrapBasis::new(n, cfg.real_or("iontrap.omega0", 1.0), cfg.real_or("iontrap.omega0p", 0.1))?;
    let target = match read_matrix(cfg, base_dir)? {
        Some(m) => m,
        None => match cfg.str("target.name").unwrap_or("random") {
            "random" => random_hermitian(&mut ChaCha8Rng::seed_from_u64(cfg.seed()), n),
            "coupling" => matrix::from_real(&(iontrap::iontrap_coupling(&basis).a_block * 0.5)),
            other => return Err(config_err("target.name", format!("iontrap targets are random or coupling, got {other:?}"))),
        },
    };
    if target.shape() != (n, n) {
        return Err(config_err("truncation.N", format!("target block must be {n}x{n}")));
    }
    let design = iontrap::iontrap_design(&target, &basis)?;
    let dense = iontrap::dense_design(&target, &basis)?;
    let gap = design.iter().zip(dense.iter()).map(|((_, a), (_, b))| (a - b).norm()).fold(0.0, f64::max);
    let ortho = iontrap::residual_projections(&target, &design, &basis)
        .into_iter()
        .map(|(_, r)| r)
        .fold(0.0, f64::max);
    let generator = iontrap::iontrap_generator(&design, &basis)?;

    let mut curve = Curve::new("drive", &["k", "frequency", "re", "im"]);
    for (k, z) in design.iter() {
        curve.push(vec![k as f64, basis.flip_frequency(k), z.re, z.im]);
        report.points.push(json!({ "k": k, "frequency": basis.flip_frequency(k), "re": z.re, "im": z.im }));
    }
    report.checks.push(Check::at_most("dense_least_squares_gap", gap, 1e-10));
    report.checks.push(Check::at_most("residual_orthogonality", ortho, 1e-12));
    report.checks.push(Check::at_most("generator_hermiticity", matrix::hermiticity_defect(&generator), 1e-12));
    report.curves.push(curve);
    report.matrices.push(("target".into(), target));
    report.matrices.push(("generator".into(), generator));
    report.summary.insert("dimension".into(), json!(basis.dim()));
    Ok(())
}

fn oracle_check(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let spec = one_d_spec(cfg, 8)?;
    let steps = cfg.usize_or("oracle.steps", 1000);
    let t_end = cfg.real_or("grid.T", 1.0);
    let eps = cfg.real_or("coupling.eps", 0.1);
    let d = spec.dim();
    let driven = cfg.str("oracle.hamiltonian").unwrap_or("zero") == "driven";
    let field = |t: f64| (2.0 * t).cos();
    let result = if driven {
        let h = dyson1d::interaction_hamiltonian(&spec, eps, field)?;
        oracle::propagate(h, t_end, steps)?
    } else {
        oracle::propagate(|_| matrix::zeros(d), t_end, steps)?
    };
    let defect = matrix::unitarity_defect(&result.u);
    let mut curve = Curve::new("oracle", &["N", "steps", "unitarity_defect", "max_unitarity_defect", "reference_error"]);
    let reference_error = if driven {
        let signal = ControlSignal::from_fn(t_end, steps, field)?;
        let w = dyson1d::dyson_gate(&signal, &spec, 1.0, eps, DysonOrder::Second)?.w;
        matrix::frobenius(&(w - &result.u))
    } else {
        let err = matrix::frobenius(&(&result.u - matrix::identity(d)));
        report.checks.push(Check::at_most("identity_error", err, 1e-13));
        err
    };
    report.checks.push(Check::at_most(
        "unitarity_defect",
        result.max_unitarity_defect,
        if driven { 1e-11 } else { 1e-13 },
    ));
    curve.push(vec![d as f64, steps as f64, defect, result.max_unitarity_defect, reference_error]);
    report.points.push(json!({
        "N": d, "steps": steps, "unitarity_defect": defect,
        "max_unitarity_defect": result.max_unitarity_defect, "reference_error": reference_error,
    }));
    report.curves.push(curve);
    report.matrices.push(("U".into(), result.u));
    Ok(())
}
