//! Measurements behind the suites. Each one is usable on its own, with the
//! parameters chosen by the caller.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dno::{self, DtnOperator};
use crate::domain::DomainSpec;
use crate::elliptic::{assemble, dirichlet_energy, solve_mixed, FemSystem, PotentialField};
use crate::error::{Error, Result};
use crate::evolution::{
    apply_a, evolve, time_norm, x_inner, x_norm, zero_crossings, EvolveConfig, FnForcing, Stepper, Unforced, WaveState,
};
use crate::linalg;
use crate::mesh::{generate, mapped_quadrilateral, GradingParams, Mesh, TraceGrid};
use crate::traces::{
    build_weight, commutator_apply, smooth_k_eps, zero_mass_project, BoundaryWeight, GagliardoForm, ScreenedSeminorm,
    TraceField, TraceNorms, DEFAULT_SCREEN,
};

use super::corner::{corner_bump, corner_exponent_fit, sector_commutator_residual, single_mixed_corner, CornerFit};
use super::ensemble::{sample_rng, Ensemble, JACOBI_SWEEPS};
use super::rellich::{rellich_residual, rellich_residual_with, AffineField, BoundaryGradient};

/// Modes in the mesh-independent ensemble used for refinement studies.
pub const CONTINUUM_MODES: usize = 8;

/// A meshed domain with its FEM system, Dirichlet–Neumann operator and
/// corner weight.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub spec: DomainSpec,
    pub rho0: f64,
    pub system: FemSystem,
    pub op: DtnOperator,
    pub weight: BoundaryWeight,
}

impl Discretization {
    pub fn generate(spec: &DomainSpec, params: &GradingParams) -> Result<Discretization> {
        let mesh = generate(spec, params)?;
        Discretization::from_mesh(spec, mesh, params.rho0)
    }

    pub fn from_mesh(spec: &DomainSpec, mesh: Mesh, rho0: f64) -> Result<Discretization> {
        let system = assemble(&mesh);
        let op = dno::build(&system)?;
        let weight = build_weight(&system.grid, &system.mesh.corners, rho0)?;
        Ok(Discretization { spec: spec.clone(), rho0, system, op, weight })
    }

    pub fn grid(&self) -> &TraceGrid {
        &self.system.grid
    }

    pub fn mesh(&self) -> &Mesh {
        &self.system.mesh
    }
}

/// `|a − b| / |b|`.
pub fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Smallest and largest value of an empirical ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Bracket {
        values.into_iter().fold(Bracket { lo: f64::INFINITY, hi: f64::NEG_INFINITY }, |b, v| Bracket {
            lo: b.lo.min(v),
            hi: b.hi.max(v),
        })
    }

    /// Largest relative change of either endpoint against `reference`.
    pub fn drift(&self, reference: &Bracket) -> f64 {
        relative_change(self.lo, reference.lo).max(relative_change(self.hi, reference.hi))
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

fn p1_integral(x: &[f64], v: &[f64]) -> f64 {
    (1..x.len()).map(|k| 0.5 * (x[k] - x[k - 1]) * (v[k] + v[k - 1])).sum()
}

/// Mean of a P1 function over `[a, b]`, exact.
fn p1_window_mean(x: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..x.len() {
        let (l, r) = (x[k - 1].max(a), x[k].min(b));
        if r <= l {
            continue;
        }
        let at = |s: f64| v[k - 1] + (v[k] - v[k - 1]) * (s - x[k - 1]) / (x[k] - x[k - 1]);
        total += 0.5 * (r - l) * (at(l) + at(r));
    }
    total / (b - a)
}

/// `‖v − c‖_{L²}` for a P1 function, exact.
fn p1_l2_shifted(x: &[f64], v: &[f64], c: f64) -> f64 {
    (1..x.len())
        .map(|k| {
            let (p, q) = (v[k - 1] - c, v[k] - c);
            (x[k] - x[k - 1]) * (p * p + p * q + q * q) / 3.0
        })
        .sum::<f64>()
        .sqrt()
}

/// Empirical constants of the trace-space inequalities over an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleConstants {
    /// `ψᵀSψ / |ψ|²_{Ḣ½(Γ^D)}`.
    pub dtn_ratio: Bracket,
    /// Screened semi-norm with radius `2r` over radius `r`, per component.
    pub screening: Bracket,
    /// Largest `‖f − f̄‖_{L²(I)} / |f|_{Ḣ½(I)}` over components.
    pub poincare: f64,
    /// Largest `|∂ₓψ|_{L²} / (|ψ|_{Ḣ½} + |M⁻¹Sψ|_{L²})`.
    pub ellipticity: f64,
    /// Largest `|M⁻¹Sψ|_{L²} / |ψ|_{Ḣ¹}`.
    pub l2_continuity: f64,
    /// `(‖ψ‖_{L²} + |ψ|_{Ḣ½})²` over the squared full Gagliardo norm.
    pub h_half: Bracket,
    /// Largest difference of the averages over the two halves of a
    /// component, relative to its semi-norm.
    pub average_window: f64,
}

struct SampleConstants {
    dtn: f64,
    screening: Vec<f64>,
    poincare: f64,
    ellipticity: f64,
    l2_continuity: f64,
    h_half: f64,
    average_window: f64,
}

impl EnsembleConstants {
    /// `screen` is the radius `r` of the screening comparison.
    pub fn measure(d: &Discretization, ensemble: Ensemble, seed: u64, samples: usize, screen: f64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one sample".into()));
        }
        let grid = d.grid();
        let norms = TraceNorms::new(grid, DEFAULT_SCREEN)?;
        let narrow = grid.components.iter().map(|c| ScreenedSeminorm::new(&c.x, screen)).collect::<Result<Vec<_>>>()?;
        let wide =
            grid.components.iter().map(|c| ScreenedSeminorm::new(&c.x, 2.0 * screen)).collect::<Result<Vec<_>>>()?;
        let gagliardo = GagliardoForm::new(grid);
        let per_sample: Vec<SampleConstants> = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let f = ensemble.sample(grid, seed, i);
                let half = norms.half(&f);
                let gf = d.op.apply(&f);
                let l2 = norms.l2(&f);
                let mut s = SampleConstants {
                    dtn: d.op.energy(&f) / (half * half),
                    screening: Vec::new(),
                    poincare: 0.0,
                    ellipticity: norms.derivative_l2(&f) / (half + norms.l2(&gf)),
                    l2_continuity: norms.l2(&gf) / norms.one(&f),
                    h_half: (l2 + half).powi(2) / (l2 * l2 + gagliardo.squared(f.values())),
                    average_window: 0.0,
                };
                for (j, c) in grid.components.iter().enumerate() {
                    let v = f.component(grid, j);
                    let semi = norms.component_half(&f, j);
                    s.screening.push(wide[j].eval(v) / narrow[j].eval(v));
                    let mean = p1_integral(&c.x, v) / (c.x[c.len() - 1] - c.x[0]);
                    s.poincare = s.poincare.max(p1_l2_shifted(&c.x, v, mean) / semi);
                    let (a, b) = (c.x[0], c.x[c.len() - 1]);
                    let mid = 0.5 * (a + b);
                    let gap = (p1_window_mean(&c.x, v, a, mid) - p1_window_mean(&c.x, v, mid, b)).abs();
                    s.average_window = s.average_window.max(gap / semi);
                }
                s
            })
            .collect();
        Ok(EnsembleConstants {
            dtn_ratio: Bracket::of(per_sample.iter().map(|s| s.dtn)),
            screening: Bracket::of(per_sample.iter().flat_map(|s| s.screening.iter().copied())),
            poincare: per_sample.iter().map(|s| s.poincare).fold(0.0, f64::max),
            ellipticity: per_sample.iter().map(|s| s.ellipticity).fold(0.0, f64::max),
            l2_continuity: per_sample.iter().map(|s| s.l2_continuity).fold(0.0, f64::max),
            h_half: Bracket::of(per_sample.iter().map(|s| s.h_half)),
            average_window: per_sample.iter().map(|s| s.average_window).fold(0.0, f64::max),
        })
    }
}

/// Largest `|∫_{Γ^D} M⁻¹Sψ|` over Jacobi-smoothed random fields, cycling
/// through the sweep counts.
pub fn green_mean(op: &DtnOperator, seed: u64, samples: usize) -> f64 {
    let ones = op.mass().row_sums();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let sweeps = JACOBI_SWEEPS[i as usize % JACOBI_SWEEPS.len()];
            let psi = Ensemble::Jacobi { sweeps }.sample(op.grid(), seed, i);
            linalg::dot(&ones, op.apply(&psi).values()).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Smallest `ψᵀSψ / (‖ψ‖² max|S|)` over random fields; zero or a rounding
/// level negative number for a semi-definite `S`.
pub fn min_rayleigh(op: &DtnOperator, seed: u64, samples: usize) -> f64 {
    let scale = op.schur().amax().max(f64::MIN_POSITIVE);
    (0..samples as u64)
        .map(|i| {
            let psi = Ensemble::Jacobi { sweeps: 0 }.sample(op.grid(), seed, i);
            op.energy(&psi) / (scale * linalg::dot(psi.values(), psi.values()))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest relative gap between `ψᵀSψ` and the Dirichlet energy of the
/// harmonic extension, and largest trace defect of the extension.
pub fn extension_identity(d: &Discretization, seed: u64, samples: usize) -> Result<(f64, f64)> {
    let mut gap: f64 = 0.0;
    let mut trace: f64 = 0.0;
    for i in 0..samples as u64 {
        let psi = Ensemble::Jacobi { sweeps: 2 }.sample(d.grid(), seed, i);
        let phi = solve_mixed(&d.system, &psi, 1e-13)?;
        let e = d.op.energy(&psi);
        gap = gap.max(relative_change(dirichlet_energy(&d.system, &phi), e));
        trace = trace.max((&d.system.trace(&phi) - &psi).max_abs());
    }
    Ok((gap, trace))
}

/// Largest `|ψ|_{Ḣ½(Γ^D)}(trace φ) / ‖∇φ‖` over random interior fields
/// smoothed by one damped Jacobi sweep on the mesh graph.
pub fn trace_continuity(d: &Discretization, seed: u64, samples: usize) -> Result<f64> {
    let mesh = d.mesh();
    let mut neighbours = vec![Vec::new(); mesh.num_vertices()];
    for t in &mesh.triangles {
        for k in 0..3 {
            neighbours[t[k]].push(t[(k + 1) % 3]);
            neighbours[t[(k + 1) % 3]].push(t[k]);
        }
    }
    neighbours.iter_mut().for_each(|n| {
        n.sort_unstable();
        n.dedup();
    });
    let norms = TraceNorms::new(d.grid(), DEFAULT_SCREEN)?;
    let mut c: f64 = 0.0;
    for i in 0..samples as u64 {
        let mut rng = sample_rng(seed, i);
        let noise: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let values = (0..noise.len())
            .map(|v| {
                let mean = neighbours[v].iter().map(|&w| noise[w]).sum::<f64>() / neighbours[v].len() as f64;
                noise[v] / 3.0 + 2.0 * mean / 3.0
            })
            .collect();
        let phi = PotentialField { values };
        let e = dirichlet_energy(&d.system, &phi);
        c = c.max(norms.half(&d.system.trace(&phi)) / e.sqrt());
    }
    Ok(c)
}

/// One row of the spectrum table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub lambda: f64,
    pub analytic: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Exact eigenvalues `k tanh(k h)`, `k = nπ/L`, when `spec` is a flat
/// rectangle of length `L` and depth `h` with walls on both sides.
pub fn flat_rectangle_eigenvalues(spec: &DomainSpec, count: usize) -> Option<Vec<f64>> {
    let [iv] = spec.dirichlet_intervals.as_slice() else { return None };
    let [p, q] = spec.bottom.as_slice() else { return None };
    let flat = spec.wetted_arcs.is_empty()
        && spec.truncation.is_none()
        && p[1] == q[1]
        && p[1] < 0.0
        && p[0] == iv.a
        && q[0] == iv.b;
    flat.then(|| {
        let len = iv.b - iv.a;
        (0..count).map(|n| dno::flat_strip_symbol(n as f64 * PI / len, -p[1])).collect()
    })
}

/// The first `count` eigenvalues, compared with the flat-rectangle oracle
/// when it applies.
pub fn spectrum_rows(op: &DtnOperator, spec: &DomainSpec, count: usize) -> Result<Vec<SpectrumRow>> {
    let pairs = op.spectrum(count)?;
    let exact = flat_rectangle_eigenvalues(spec, count);
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let analytic = exact.as_ref().map(|e| e[i]);
            let rel_error = analytic.filter(|&a| a > 0.0).map(|a| relative_change(p.lambda, a));
            SpectrumRow { index: i, lambda: p.lambda, analytic, rel_error }
        })
        .collect())
}

/// Largest relative gap between the Lanczos and dense eigenvalues among
/// the first `count`, measured against the largest of them.
pub fn lanczos_dense_gap(op: &DtnOperator, count: usize) -> Result<f64> {
    let a = op.spectrum(count)?;
    let b = op.dense_spectrum(count)?;
    let scale = b.iter().map(|p| p.lambda.abs()).fold(f64::MIN_POSITIVE, f64::max);
    Ok(a.iter().zip(&b).map(|(x, y)| (x.lambda - y.lambda).abs() / scale).fold(0.0, f64::max))
}

/// Residuals of the affine cases: φ = z with α = (0, −1), φ = x with
/// α = (1, 0), φ = 2x − z with α = (x, z) and a general affine pair.
pub fn rellich_affine(system: &FemSystem) -> Result<Vec<(&'static str, f64)>> {
    let mesh = &system.mesh;
    let cases: [(&str, PotentialField, AffineField); 4] = [
        ("z_vertical", PotentialField::from_fn(mesh, |_, z| z), AffineField::constant([0.0, -1.0])),
        ("x_horizontal", PotentialField::from_fn(mesh, |x, _| x), AffineField::constant([1.0, 0.0])),
        ("mixed_radial", PotentialField::from_fn(mesh, |x, z| 2.0 * x - z), AffineField::radial()),
        (
            "general",
            PotentialField::from_fn(mesh, |x, z| x + 3.0 * z),
            AffineField { b: [[0.5, -1.0], [2.0, 0.25]], c: [0.3, -0.7] },
        ),
    ];
    cases.into_iter().map(|(name, phi, alpha)| Ok((name, rellich_residual(system, &phi, &alpha)?.residual))).collect()
}

/// Rellich residual of the harmonic extension of `cos x` with α = (x, z) on
/// meshes generated at each `h0`, with flux-based boundary gradients.
pub fn rellich_cos_mode(spec: &DomainSpec, h0s: &[f64], beta: f64, rho0: f64) -> Result<Vec<f64>> {
    h0s.iter()
        .map(|&h0| {
            let mesh = generate(spec, &GradingParams::new(h0, beta, rho0))?;
            let system = assemble(&mesh);
            let phi = solve_mixed(&system, &system.trace_from_fn(f64::cos), 1e-12)?;
            Ok(rellich_residual_with(&system, &phi, &AffineField::radial(), BoundaryGradient::Flux)?.residual)
        })
        .collect()
}

/// Largest `|x_inner(AU, V) + x_inner(U, AV)| / (‖U‖_X ‖V‖_X)` over random
/// state pairs with uniform nodal entries.
pub fn skew_defect(op: &DtnOperator, g: f64, seed: u64, pairs: usize) -> Result<f64> {
    let n = op.dim();
    let mut worst: f64 = 0.0;
    for i in 0..pairs as u64 {
        let mut rng = sample_rng(seed, i);
        let mut field = || TraceField::new((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let u = WaveState::new(field(), field(), 0.0);
        let v = WaveState::new(field(), field(), 0.0);
        let lhs = x_inner(op, g, &apply_a(op, g, &u), &v)? + x_inner(op, g, &u, &apply_a(op, g, &v))?;
        worst = worst.max(lhs.abs() / (x_norm(op, g, &u)? * x_norm(op, g, &v)?));
    }
    Ok(worst)
}

/// The first non-constant eigenpair of `S v = λ M v`.
pub fn standing_mode(op: &DtnOperator) -> Result<(f64, TraceField)> {
    let pairs = op.spectrum(2.min(op.dim()))?;
    let p = pairs.get(1).ok_or_else(|| Error::InvalidArgument("free surface has a single node".into()))?;
    Ok((p.lambda, TraceField::new(p.vector.clone())))
}

/// Relative energy drift of `steps` unforced steps from `U = (0, ψ0)`.
pub fn energy_drift(op: &DtnOperator, g: f64, psi0: &TraceField, dt: f64, steps: usize) -> Result<f64> {
    let mut cfg = EvolveConfig::new(dt, steps);
    cfg.monitor_order = 0;
    let u0 = WaveState::new(TraceField::zeros(op.dim()), psi0.clone(), 0.0);
    Ok(evolve(op, g, &u0, &Unforced(op.dim()), &cfg, None)?.max_energy_drift())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodMeasurement {
    pub steps_per_period: usize,
    /// Twice the spacing of the first two zero crossings.
    pub measured: f64,
    /// `2π / √(g λ)` for the discrete eigenvalue λ.
    pub semi_discrete: f64,
}

impl PeriodMeasurement {
    pub fn relative_error(&self) -> f64 {
        relative_change(self.measured, self.semi_discrete)
    }
}

/// Period of the first standing mode from one period of Crank–Nicolson
/// steps started at `U = (0, v)`, `v` the eigenvector.
pub fn standing_period(op: &DtnOperator, g: f64, steps_per_period: usize) -> Result<PeriodMeasurement> {
    let (lambda, v) = standing_mode(op)?;
    let period = 2.0 * PI / (g * lambda).sqrt();
    let stepper = Stepper::new(op, g, period / steps_per_period as f64)?;
    let mut u = WaveState::new(TraceField::zeros(op.dim()), v.clone(), 0.0);
    let (mut t, mut a) = (vec![0.0], vec![1.0]);
    for _ in 0..steps_per_period {
        u = stepper.step(&u, None)?;
        t.push(u.t);
        a.push(op.mass().inner(u.psi.values(), v.values()));
    }
    let z = zero_crossings(&t, &a, 2);
    if z.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two zero crossings in one period".into()));
    }
    Ok(PeriodMeasurement { steps_per_period, measured: 2.0 * (z[1] - z[0]), semi_discrete: period })
}

/// Zero-mean data from two continuum samples: ζ with zero integral and ψ
/// in the zero-mass realization.
pub fn zero_mean_state(op: &DtnOperator, seed: u64) -> WaveState {
    let grid = op.grid();
    let ensemble = Ensemble::Continuum { modes: CONTINUUM_MODES };
    let zeta = ensemble.sample(grid, seed, 0);
    let c = linalg::dot(&op.mass().row_sums(), zeta.values()) / op.mass().total();
    let zeta = TraceField::new(zeta.values().iter().map(|v| v - c).collect());
    let psi = zero_mass_project(grid, &ensemble.sample(grid, seed, 1));
    WaveState::new(zeta, psi, 0.0)
}

/// Largest `|∫ζ|` or `|Σ_j |I_j| ψ̄_j|` along a zero-mass run.
pub fn zero_mass_drift(op: &DtnOperator, g: f64, seed: u64, dt: f64, steps: usize) -> Result<f64> {
    let mut cfg = EvolveConfig::new(dt, steps);
    cfg.zero_mass = true;
    cfg.monitor_order = 0;
    let tr = evolve(op, g, &zero_mean_state(op, seed), &Unforced(op.dim()), &cfg, None)?;
    Ok(tr.records.iter().map(|r| r.mass_zeta.abs().max(r.mass_psi.abs())).fold(0.0, f64::max))
}

fn smooth_forcing(grid: &TraceGrid) -> impl Fn(f64) -> (TraceField, TraceField) + '_ {
    move |t: f64| {
        let f = TraceField::from_fn(grid, |x| (2.0 * x).cos() * (1.3 * t).sin());
        let g = TraceField::from_fn(grid, |x| (0.5 * x - 0.2).powi(2) * t.cos());
        (f, g)
    }
}

/// Largest relative excess of `|U|_X` over `|U(0)|_X + ∫|F|_X` in a forced
/// run from rest.
pub fn forced_bound_violation(op: &DtnOperator, g: f64, dt: f64, steps: usize) -> Result<f64> {
    let mut cfg = EvolveConfig::new(dt, steps);
    cfg.monitor_order = 0;
    let forcing = FnForcing(smooth_forcing(op.grid()));
    Ok(evolve(op, g, &WaveState::zeros(op.dim()), &forcing, &cfg, None)?.bound_violation())
}

/// Largest relative excess of `|||U(t)|||₁` over `|||U(0)|||₁ + ∫|||F|||₁`
/// in a forced run started from the state `u0`.
pub fn time_norm_violation(op: &DtnOperator, g: f64, u0: &WaveState, dt: f64, steps: usize) -> Result<f64> {
    let stepper = Stepper::new(op, g, dt)?;
    let forcing = smooth_forcing(op.grid());
    let mut u = u0.clone();
    let mut bound = time_norm(op, g, &u, 1)?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let (f, gs) = forcing(u.t + 0.5 * dt);
        bound += dt * time_norm(op, g, &WaveState::new(f.clone(), gs.clone(), 0.0), 1)?;
        u = stepper.step(&u, Some(&(f, gs)))?;
        worst = worst.max((time_norm(op, g, &u, 1)? - bound) / bound);
    }
    Ok(worst)
}

/// Largest `𝒩¹(U(t)) / 𝒩¹(U(0))` over `steps` unforced steps of size `dt`
/// from `U = (0, ψ0)`.
pub fn n1_growth(d: &Discretization, g: f64, psi0: &TraceField, dt: f64, steps: usize) -> Result<f64> {
    let mut cfg = EvolveConfig::new(dt, steps);
    cfg.monitor_order = 1;
    let u0 = WaveState::new(TraceField::zeros(d.op.dim()), psi0.clone(), 0.0);
    let tr = evolve(&d.op, g, &u0, &Unforced(d.op.dim()), &cfg, Some(&d.weight))?;
    let n0 = tr.records[0].n1.unwrap_or(f64::NAN);
    Ok(tr.records.iter().filter_map(|r| r.n1).fold(0.0, f64::max) / n0)
}

/// Worst-case gain and consistency defect of K_ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmootherStudy {
    /// Largest `‖K_ε f‖ / ‖f‖` over all Jacobi ensembles.
    pub gain: f64,
    /// Largest `‖K_ε f − f‖ / ‖f‖` over the smoothed ensembles.
    pub defect: f64,
}

pub fn smoother_study(grid: &TraceGrid, w: &BoundaryWeight, eps: f64, seed: u64, samples: usize) -> Result<SmootherStudy> {
    let norms = TraceNorms::new(grid, DEFAULT_SCREEN)?;
    let mut study = SmootherStudy { gain: 0.0, defect: 0.0 };
    for (e, &sweeps) in JACOBI_SWEEPS.iter().enumerate() {
        for i in 0..samples as u64 {
            let f = Ensemble::Jacobi { sweeps }.sample(grid, seed, e as u64 * samples as u64 + i);
            let k = smooth_k_eps(grid, &f, eps, w)?;
            let n = norms.l2(&f);
            study.gain = study.gain.max(norms.l2(&k) / n);
            if sweeps > 0 {
                study.defect = study.defect.max(norms.l2(&(&k - &f)) / n);
            }
        }
    }
    Ok(study)
}

/// Fitted corner exponent on the sector of opening `omega`, meshed with the
/// given grading, for ψ = cos(πx).
pub fn sector_exponent(omega: f64, h0: f64, beta: f64) -> Result<CornerFit> {
    let spec = DomainSpec::sector(omega);
    let params = GradingParams::for_spec(&spec, h0, beta);
    let system = assemble(&generate(&spec, &params)?);
    let psi = system.trace_from_fn(|x| (PI * x).cos());
    corner_exponent_fit(&system, &spec, params.rho0, &psi)
}

/// Relative commutator residual on structured meshes of the quadrilateral
/// `spec` with `n` cells per unit side for each entry of `levels`. ψ is the
/// zero-mean bump of width `support` next to the mixed corner.
pub fn commutator_levels(spec: &DomainSpec, levels: &[usize], beta: f64, support: f64) -> Result<Vec<f64>> {
    let corner = single_mixed_corner(spec)?;
    let rho0 = GradingParams::default_rho0(spec);
    if support > 0.5 * rho0 {
        return Err(Error::InvalidArgument(format!("bump width {support} leaves the region where ρ = r")));
    }
    levels
        .iter()
        .map(|&n| {
            let d = Discretization::from_mesh(spec, mapped_quadrilateral(spec, n, beta)?, rho0)?;
            let psi = TraceField::from_fn(d.grid(), |x| corner_bump((x - corner.x).abs(), support));
            Ok(sector_commutator_residual(&d.op, &d.weight, &psi)?.relative)
        })
        .collect()
}

/// `max |[(ρ∂ₓ), G] c|` for a constant field, relative to `max |S|`.
pub fn commutator_of_constant(d: &Discretization) -> Result<f64> {
    let c = commutator_apply(&d.op, &d.weight, 1, &TraceField::constant(d.op.dim(), 1.0))?;
    Ok(c.max_abs() / d.op.schur().amax().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_means_are_exact_for_p1() {
        let x = [0.0, 0.5, 1.0, 2.0];
        let v = [0.0, 0.5, 1.0, 2.0];
        assert!((p1_window_mean(&x, &v, 0.25, 1.5) - 0.875).abs() < 1e-15);
        assert!((p1_integral(&x, &v) - 2.0).abs() < 1e-15);
        assert!((p1_l2_shifted(&x, &v, 1.0) - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bracket_drift() {
        let a = Bracket::of([1.0, 2.0, 1.5]);
        assert_eq!(a, Bracket { lo: 1.0, hi: 2.0 });
        assert!((Bracket { lo: 1.1, hi: 2.0 }.drift(&a) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn flat_oracle_only_for_rectangles() {
        let e = flat_rectangle_eigenvalues(&DomainSpec::rectangle(), 3).unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[2] - 2.0 * 2f64.tanh()).abs() < 1e-14);
        assert!(flat_rectangle_eigenvalues(&DomainSpec::one_object(), 3).is_none());
        assert!(flat_rectangle_eigenvalues(&DomainSpec::sector(2.0), 3).is_none());
    }

    #[test]
    fn rectangle_constants_and_identities() {
        let spec = DomainSpec::rectangle();
        let d = Discretization::generate(&spec, &GradingParams::for_spec(&spec, 0.2, 2.0)).unwrap();
        let c = EnsembleConstants::measure(&d, Ensemble::Continuum { modes: 4 }, 3, 10, 1.0).unwrap();
        assert!(c.dtn_ratio.lo > 0.0 && c.dtn_ratio.is_finite());
        assert!(c.screening.lo >= 1.0 - 1e-12 && c.screening.is_finite());
        assert!(c.poincare > 0.0 && c.poincare.is_finite());
        assert!(green_mean(&d.op, 1, 12) < 1e-9);
        assert!(min_rayleigh(&d.op, 1, 12) > -1e-12);
        let (gap, trace) = extension_identity(&d, 2, 3).unwrap();
        assert!(gap < 1e-9 && trace == 0.0);
        assert!(skew_defect(&d.op, 1.0, 5, 5).unwrap() < 1e-11);
        assert!(commutator_of_constant(&d).unwrap() < 1e-10);
    }
}
