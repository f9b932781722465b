//! Time stepping of the linearized surface system
//! ∂ₜζ − G ψ = f, ∂ₜψ + g ζ = g_src on the free surface.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::dno::DtnOperator;
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::traces::{weighted_derivative_pow, weighted_mass, BoundaryWeight, TraceField};

/// Surface elevation, surface potential and time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveState {
    pub zeta: TraceField,
    pub psi: TraceField,
    pub t: f64,
}

impl WaveState {
    pub fn new(zeta: TraceField, psi: TraceField, t: f64) -> WaveState {
        WaveState { zeta, psi, t }
    }

    pub fn zeros(n: usize) -> WaveState {
        WaveState { zeta: TraceField::zeros(n), psi: TraceField::zeros(n), t: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        check_len(n, self.zeta.len())?;
        check_len(n, self.psi.len())?;
        if !self.zeta.is_finite() || !self.psi.is_finite() {
            return Err(Error::InvalidArgument("state has non-finite entries".into()));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(&TraceField) -> TraceField) -> WaveState {
        WaveState { zeta: f(&self.zeta), psi: f(&self.psi), t: self.t }
    }
}

/// Source terms `(f, g_src)` sampled at a time.
pub trait Forcing {
    fn sample(&self, t: f64) -> (TraceField, TraceField);

    /// True when every sample vanishes, which lets the stepper skip work.
    fn is_zero(&self) -> bool {
        false
    }
}

/// No forcing.
#[derive(Clone, Copy, Debug)]
pub struct Unforced(pub usize);

impl Forcing for Unforced {
    fn sample(&self, _t: f64) -> (TraceField, TraceField) {
        (TraceField::zeros(self.0), TraceField::zeros(self.0))
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Forcing given by a closure.
pub struct FnForcing<F: Fn(f64) -> (TraceField, TraceField)>(pub F);

impl<F: Fn(f64) -> (TraceField, TraceField)> Forcing for FnForcing<F> {
    fn sample(&self, t: f64) -> (TraceField, TraceField) {
        (self.0)(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub steps: usize,
    /// Keep ζ and ψ in the zero-mass realization; the constant removed
    /// from ψ at each step is logged.
    pub zero_mass: bool,
    /// The ψ equation is integrated with no additive constant. Always true.
    pub bernoulli_zero: bool,
    /// Keep a full state every `snapshot_every` steps (0: first and last only).
    pub snapshot_every: usize,
    /// Highest order of 𝒩ⁿ monitored each step (0, 1 or 2).
    pub monitor_order: usize,
}

impl EvolveConfig {
    pub fn new(dt: f64, steps: usize) -> EvolveConfig {
        EvolveConfig { dt, steps, zero_mass: false, bernoulli_zero: true, snapshot_every: 0, monitor_order: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        if !self.bernoulli_zero {
            return Err(Error::InvalidArgument("only the zero Bernoulli constant is supported".into()));
        }
        if self.monitor_order > 2 {
            return Err(Error::InvalidArgument(format!("monitor order {} exceeds 2", self.monitor_order)));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// `g ζ_Uᵀ M ζ_V + ψ_Uᵀ S ψ_V`.
pub fn x_inner(op: &DtnOperator, g: f64, u: &WaveState, v: &WaveState) -> Result<f64> {
    let n = op.dim();
    u.check(n)?;
    v.check(n)?;
    Ok(g * op.mass().inner(u.zeta.values(), v.zeta.values()) + op.form(&u.psi, &v.psi)?)
}

pub fn x_norm(op: &DtnOperator, g: f64, u: &WaveState) -> Result<f64> {
    Ok(x_inner(op, g, u, u)?.max(0.0).sqrt())
}

/// `A U = (−M⁻¹ S ψ, g ζ)`.
pub fn apply_a(op: &DtnOperator, g: f64, u: &WaveState) -> WaveState {
    let mut zeta = op.apply(&u.psi);
    zeta.values_mut().iter_mut().for_each(|v| *v = -*v);
    WaveState { zeta, psi: g * &u.zeta, t: u.t }
}

pub fn energy(op: &DtnOperator, g: f64, u: &WaveState) -> Result<f64> {
    Ok(0.5 * x_inner(op, g, u, u)?.max(0.0))
}

/// `Σ_{j+k≤n} |(ρ∂ₓ)^j (−A)^k U|_X`. Orders above 2 are experimental.
pub fn weighted_norm_nn(op: &DtnOperator, g: f64, w: &BoundaryWeight, u: &WaveState, n: usize) -> Result<f64> {
    u.check(op.dim())?;
    let grid = op.grid();
    let mut total = 0.0;
    let mut ak = u.clone();
    for k in 0..=n {
        for j in 0..=n - k {
            let v = ak.map(|f| weighted_derivative_pow(grid, f, w, j));
            total += x_norm(op, g, &v)?;
        }
        let a = apply_a(op, g, &ak);
        ak = a.map(|f| -1.0 * f);
    }
    Ok(total)
}

/// `|||U|||_n = Σ_{k≤n} |A^k U|_X`.
pub fn time_norm(op: &DtnOperator, g: f64, u: &WaveState, n: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut ak = u.clone();
    for _ in 0..=n {
        total += x_norm(op, g, &ak)?;
        ak = apply_a(op, g, &ak);
    }
    Ok(total)
}

/// Crank–Nicolson stepper for a fixed step, holding the Cholesky factor of
/// `M + (dt² g / 4) S`.
pub struct Stepper<'a> {
    op: &'a DtnOperator,
    g: f64,
    dt: f64,
    factor: Cholesky<f64, Dyn>,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a DtnOperator, g: f64, dt: f64) -> Result<Stepper<'a>> {
        if !(dt > 0.0) || !(g > 0.0) {
            return Err(Error::InvalidArgument(format!("need dt > 0 and g > 0, got dt = {dt}, g = {g}")));
        }
        let m = op.mass().to_dense();
        let a: DMatrix<f64> = &m + op.schur() * (0.25 * dt * dt * g);
        let factor = a.cholesky().ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
        Ok(Stepper { op, g, dt, factor })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step of `(I + dt/2 A) U⁺ = (I − dt/2 A) U + dt F_mid` with
    /// `F_mid = (f, g_src)` sampled at the midpoint.
    pub fn step(&self, u: &WaveState, forcing: Option<&(TraceField, TraceField)>) -> Result<WaveState> {
        let (dt, g) = (self.dt, self.g);
        let n = self.op.dim();
        u.check(n)?;
        let gpsi = self.op.apply(&u.psi);
        let mut a = u.zeta.clone();
        a.axpy(0.5 * dt, &gpsi);
        let mut b = u.psi.clone();
        b.axpy(-0.5 * dt * g, &u.zeta);
        if let Some((f, gs)) = forcing {
            check_len(n, f.len())?;
            check_len(n, gs.len())?;
            a.axpy(dt, f);
            b.axpy(dt, gs);
        }
        let mut r = b.clone();
        r.axpy(-0.5 * dt * g, &a);
        let rhs = DVector::from_vec(self.op.mass().apply(r.values()));
        let psi = TraceField::new(self.factor.solve(&rhs).data.into());
        let mut zeta = a;
        zeta.axpy(0.5 * dt, &self.op.apply(&psi));
        let out = WaveState { zeta, psi, t: u.t + dt };
        if !out.zeta.is_finite() || !out.psi.is_finite() {
            return Err(Error::NotConverged { solver: "crank-nicolson", iterations: 1, residual: f64::NAN });
        }
        Ok(out)
    }
}

/// One Crank–Nicolson step. Factorizes on every call; use [`Stepper`] for
/// repeated steps.
pub fn step_cn(
    op: &DtnOperator,
    g: f64,
    u: &WaveState,
    dt: f64,
    forcing_mid: Option<&(TraceField, TraceField)>,
) -> Result<WaveState> {
    Stepper::new(op, g, dt)?.step(u, forcing_mid)
}

/// Quantities monitored after every step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// `∫ ζ`.
    pub mass_zeta: f64,
    /// `Σ_j |I_j| ψ̄_j`.
    pub mass_psi: f64,
    pub x_norm: f64,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    /// Constant removed from ψ by the zero-mass realization on this step.
    pub bernoulli_shift: f64,
    /// `|U(0)|_X + ∫₀ᵗ |F|_X`, the a priori bound on `x_norm`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<(usize, WaveState)>,
    pub final_state: WaveState,
}

impl Trajectory {
    /// Largest relative violation of the a priori bound, `max (|U|_X − bound)/bound`,
    /// zero when the bound holds everywhere.
    pub fn bound_violation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| if r.bound > 0.0 { (r.x_norm - r.bound) / r.bound } else { r.x_norm })
            .fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.records[0].energy;
        self.records.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE)
    }

    /// `step, t, energy, mass_zeta, mass_psi, x_norm, N1, N2` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "step,t,energy,mass_zeta,mass_psi,x_norm,N1,N2")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                r.step,
                r.t,
                r.energy,
                r.mass_zeta,
                r.mass_psi,
                r.x_norm,
                opt(r.n1),
                opt(r.n2)
            )?;
        }
        Ok(())
    }
}

fn zeta_mass(op: &DtnOperator, zeta: &TraceField) -> f64 {
    linalg::dot(&op.mass().row_sums(), zeta.values())
}

/// Runs `cfg.steps` Crank–Nicolson steps from `u0`. `weight` is needed for
/// the 𝒩ⁿ monitors when `cfg.monitor_order > 0`.
pub fn evolve(
    op: &DtnOperator,
    g: f64,
    u0: &WaveState,
    forcing: &dyn Forcing,
    cfg: &EvolveConfig,
    weight: Option<&BoundaryWeight>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = op.dim();
    u0.check(n)?;
    let grid = op.grid();
    if cfg.monitor_order > 0 && weight.is_none() {
        return Err(Error::InvalidArgument("weighted monitors need a boundary weight".into()));
    }
    let scale = op.mass().total().max(1.0);
    let mass_tol = 1e-10 * scale;
    if cfg.zero_mass {
        let zn = zeta_mass(op, &u0.zeta);
        let pn = weighted_mass(grid, &u0.psi);
        let amp = 1.0 + u0.zeta.max_abs() + u0.psi.max_abs();
        if zn.abs() > mass_tol * amp || pn.abs() > mass_tol * amp {
            return Err(Error::InvalidArgument(format!(
                "zero-mass run needs zero-mean data, got ∫ζ = {zn:e}, Σ|I|ψ̄ = {pn:e}"
            )));
        }
    }
    let stepper = Stepper::new(op, g, cfg.dt)?;
    let monitor = |u: &WaveState, step: usize, shift: f64, bound: f64| -> Result<StepRecord> {
        let xn = x_norm(op, g, u)?;
        let (n1, n2) = match (cfg.monitor_order, weight) {
            (0, _) | (_, None) => (None, None),
            (1, Some(w)) => (Some(weighted_norm_nn(op, g, w, u, 1)?), None),
            (_, Some(w)) => (Some(weighted_norm_nn(op, g, w, u, 1)?), Some(weighted_norm_nn(op, g, w, u, 2)?)),
        };
        Ok(StepRecord {
            step,
            t: u.t,
            energy: 0.5 * xn * xn,
            mass_zeta: zeta_mass(op, &u.zeta),
            mass_psi: weighted_mass(grid, &u.psi),
            x_norm: xn,
            n1,
            n2,
            bernoulli_shift: shift,
            bound,
        })
    };
    let x0 = x_norm(op, g, u0)?;
    let mut bound = x0;
    let mut records = vec![monitor(u0, 0, 0.0, bound)?];
    let mut snapshots = vec![(0, u0.clone())];
    let mut u = u0.clone();
    for step in 1..=cfg.steps {
        let wrap = |e: Error| Error::Step { step, source: Box::new(e) };
        let f_mid = if forcing.is_zero() { None } else { Some(forcing.sample(u.t + 0.5 * cfg.dt)) };
        if let Some((f, gs)) = &f_mid {
            check_len(n, f.len()).map_err(wrap)?;
            check_len(n, gs.len()).map_err(wrap)?;
            if cfg.zero_mass {
                let fm = zeta_mass(op, f);
                if fm.abs() > mass_tol * (1.0 + f.max_abs()) {
                    return Err(wrap(Error::InvalidArgument(format!("forcing f has nonzero mean {fm:e}"))));
                }
            }
            let fx = x_norm(op, g, &WaveState::new(f.clone(), gs.clone(), 0.0)).map_err(wrap)?;
            bound += cfg.dt * fx;
        }
        let mut next = stepper.step(&u, f_mid.as_ref()).map_err(wrap)?;
        let mut shift = 0.0;
        if cfg.zero_mass {
            shift = weighted_mass(grid, &next.psi) / grid.length();
            next.psi.values_mut().iter_mut().for_each(|v| *v -= shift);
        }
        u = next;
        records.push(monitor(&u, step, shift, bound).map_err(wrap)?);
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            snapshots.push((step, u.clone()));
        }
    }
    if snapshots.last().map(|s| s.0) != Some(cfg.steps) {
        snapshots.push((cfg.steps, u.clone()));
    }
    Ok(Trajectory { records, snapshots, final_state: u })
}

/// Writes `node, x, zeta, psi` rows for one state.
pub fn write_state_csv(op: &DtnOperator, u: &WaveState, mut out: impl Write) -> Result<()> {
    writeln!(out, "node,component,vertex,x,zeta,psi")?;
    let grid = op.grid();
    let x = grid.abscissae();
    for k in 0..u.len() {
        writeln!(
            out,
            "{k},{},{},{:.17e},{:.17e},{:.17e}",
            grid.component_of(k),
            grid.mesh_vertex_of(k),
            x[k],
            u.zeta.values()[k],
            u.psi.values()[k]
        )?;
    }
    Ok(())
}

/// Time of the first `count` downward or upward zero crossings of a
/// sampled signal, by linear interpolation.
pub fn zero_crossings(t: &[f64], a: &[f64], count: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..a.len() {
        if out.len() == count {
            break;
        }
        if a[k - 1] == 0.0 {
            continue;
        }
        if a[k - 1].signum() != a[k].signum() || a[k] == 0.0 {
            let s = a[k - 1] / (a[k - 1] - a[k]);
            out.push(t[k - 1] + s * (t[k] - t[k - 1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dno;
    use crate::domain::DomainSpec;
    use crate::elliptic::assemble;
    use crate::mesh::{generate, GradingParams};
    use crate::traces::build_weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    struct Setup {
        op: DtnOperator,
        weight: BoundaryWeight,
    }

    fn rect() -> &'static Setup {
        static CELL: OnceLock<Setup> = OnceLock::new();
        CELL.get_or_init(|| {
            let spec = DomainSpec::rectangle();
            let params = GradingParams::for_spec(&spec, 0.1, 2.0);
            let mesh = generate(&spec, &params).unwrap();
            let sys = assemble(&mesh);
            let weight = build_weight(&sys.grid, &mesh.corners, params.rho0).unwrap();
            Setup { op: dno::build(&sys).unwrap(), weight }
        })
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> WaveState {
        let mut r = || TraceField::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        WaveState::new(r(), r(), 0.0)
    }

    #[test]
    fn inner_product_examples() {
        let s = rect();
        let n = s.op.dim();
        let c = WaveState::new(TraceField::zeros(n), TraceField::constant(n, 2.0), 0.0);
        assert!(x_inner(&s.op, 1.0, &c, &c).unwrap().abs() < 1e-12);
        let z = WaveState::new(s.op.grid().abscissae().into_iter().map(f64::sin).collect::<Vec<_>>().into(), TraceField::zeros(n), 0.0);
        let l2 = s.op.mass().inner(z.zeta.values(), z.zeta.values());
        assert!((x_inner(&s.op, 9.81, &z, &z).unwrap() - 9.81 * l2).abs() < 1e-12);
        let cosmode = WaveState::new(TraceField::zeros(n), TraceField::from_fn(s.op.grid(), f64::cos), 0.0);
        let e = energy(&s.op, 1.0, &cosmode).unwrap();
        assert!((e - 0.5 * 1f64.tanh() * std::f64::consts::FRAC_PI_2).abs() < 0.01);
        let double = cosmode.map(|f| 2.0 * f);
        assert!((energy(&s.op, 1.0, &double).unwrap() - 4.0 * e).abs() < 1e-12 * e);
        assert_eq!(energy(&s.op, 1.0, &WaveState::zeros(n)).unwrap(), 0.0);
    }

    #[test]
    fn a_is_skew() {
        let s = rect();
        let n = s.op.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (u, v) = (random_state(&mut rng, n), random_state(&mut rng, n));
            let lhs = x_inner(&s.op, 1.0, &apply_a(&s.op, 1.0, &u), &v).unwrap()
                + x_inner(&s.op, 1.0, &u, &apply_a(&s.op, 1.0, &v)).unwrap();
            let scale = x_norm(&s.op, 1.0, &u).unwrap() * x_norm(&s.op, 1.0, &v).unwrap();
            assert!(lhs.abs() <= 1e-11 * scale, "{lhs}");
        }
        let c = WaveState::new(TraceField::zeros(n), TraceField::constant(n, 1.0), 0.0);
        let ac = apply_a(&s.op, 1.0, &c);
        assert!(ac.zeta.max_abs() < 1e-12 && ac.psi.max_abs() == 0.0);
        let cz = WaveState::new(TraceField::from_fn(s.op.grid(), f64::cos), TraceField::zeros(n), 0.0);
        let ac = apply_a(&s.op, 2.0, &cz);
        assert!(ac.zeta.max_abs() == 0.0);
        assert!((&ac.psi - &(2.0 * &cz.zeta)).max_abs() == 0.0);
    }

    #[test]
    fn energy_is_conserved() {
        let s = rect();
        let n = s.op.dim();
        let u0 = WaveState::new(TraceField::zeros(n), TraceField::from_fn(s.op.grid(), f64::cos), 0.0);
        let mut cfg = EvolveConfig::new(0.01, 300);
        cfg.monitor_order = 0;
        let tr = evolve(&s.op, 1.0, &u0, &Unforced(n), &cfg, None).unwrap();
        assert_eq!(tr.records.len(), 301);
        assert!(tr.max_energy_drift() < 1e-10);
        let zero = evolve(&s.op, 1.0, &WaveState::zeros(n), &Unforced(n), &cfg, None).unwrap();
        assert!(zero.final_state.zeta.max_abs() == 0.0 && zero.final_state.psi.max_abs() == 0.0);
    }

    #[test]
    fn forced_run_respects_bound() {
        let s = rect();
        let n = s.op.dim();
        let grid = s.op.grid().clone();
        let forcing = FnForcing(move |t: f64| {
            let f = TraceField::from_fn(&grid, |x| (2.0 * x).cos() * (1.3 * t).sin());
            let g = TraceField::from_fn(&grid, |x| (x - 1.0).powi(2) * t.cos());
            (f, g)
        });
        let mut cfg = EvolveConfig::new(0.02, 200);
        cfg.monitor_order = 1;
        let tr = evolve(&s.op, 1.0, &WaveState::zeros(n), &forcing, &cfg, Some(&s.weight)).unwrap();
        assert!(tr.bound_violation() <= 1e-6);
        assert!(tr.records.iter().all(|r| r.n1.unwrap().is_finite()));
    }

    #[test]
    fn standing_mode_period() {
        let s = rect();
        let n = s.op.dim();
        let omega = 1f64.tanh().sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let steps = 2000;
        let dt = period / steps as f64;
        let psi0 = TraceField::from_fn(s.op.grid(), f64::cos);
        let u0 = WaveState::new(TraceField::zeros(n), psi0.clone(), 0.0);
        let stepper = Stepper::new(&s.op, 1.0, dt).unwrap();
        let norm0 = s.op.mass().inner(psi0.values(), psi0.values());
        let (mut t, mut a) = (vec![0.0], vec![1.0]);
        let mut u = u0;
        for _ in 0..steps {
            u = stepper.step(&u, None).unwrap();
            t.push(u.t);
            a.push(s.op.mass().inner(u.psi.values(), psi0.values()) / norm0);
        }
        let z = zero_crossings(&t, &a, 2);
        let measured = 2.0 * (z[1] - z[0]);
        // coarse mesh: the first eigenvalue is within about 0.3%
        assert!((measured - period).abs() < 5e-3 * period, "{measured} vs {period}");
    }

    #[test]
    fn zero_mass_mode() {
        let s = rect();
        let n = s.op.dim();
        let grid = s.op.grid();
        let mut cfg = EvolveConfig::new(0.05, 100);
        cfg.zero_mass = true;
        cfg.monitor_order = 0;
        let bad = WaveState::new(TraceField::constant(n, 1.0), TraceField::zeros(n), 0.0);
        assert!(evolve(&s.op, 1.0, &bad, &Unforced(n), &cfg, None).is_err());
        let zeta = crate::traces::zero_mass_project(grid, &TraceField::from_fn(grid, |x| (x - 0.3).powi(2)));
        let zeta = TraceField::new({
            // exact zero of ∫ζ with the consistent mass
            let c = linalg::dot(&s.op.mass().row_sums(), zeta.values()) / s.op.mass().total();
            zeta.values().iter().map(|v| v - c).collect()
        });
        let psi = crate::traces::zero_mass_project(grid, &TraceField::from_fn(grid, |x| x.sin()));
        let tr = evolve(&s.op, 1.0, &WaveState::new(zeta, psi, 0.0), &Unforced(n), &cfg, None).unwrap();
        for r in &tr.records {
            assert!(r.mass_zeta.abs() < 1e-10 && r.mass_psi.abs() < 1e-10);
        }
        assert!(evolve(&s.op, 1.0, &bad, &Unforced(n), &EvolveConfig::new(-1.0, 3), None).is_err());
    }

    #[test]
    fn nn_examples() {
        let s = rect();
        let n = s.op.dim();
        let u = WaveState::new(TraceField::zeros(n), TraceField::from_fn(s.op.grid(), f64::cos), 0.0);
        let n0 = weighted_norm_nn(&s.op, 1.0, &s.weight, &u, 0).unwrap();
        assert!((n0 - x_norm(&s.op, 1.0, &u).unwrap()).abs() < 1e-14);
        for k in 0..=2 {
            assert_eq!(weighted_norm_nn(&s.op, 1.0, &s.weight, &WaveState::zeros(n), k).unwrap(), 0.0);
        }
        let n1 = weighted_norm_nn(&s.op, 1.0, &s.weight, &u, 1).unwrap();
        let n2 = weighted_norm_nn(&s.op, 1.0, &s.weight, &u, 2).unwrap();
        assert!(n0 < n1 && n1 < n2 && n2.is_finite());
        let n3 = weighted_norm_nn(&s.op, 1.0, &s.weight, &u, 3).unwrap();
        assert!(n2 < n3 && n3.is_finite());
    }

    #[test]
    fn crossings() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let a: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        let z = zero_crossings(&t, &a, 2);
        assert!((z[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
        assert!((z[1] - 1.5 * std::f64::consts::PI).abs() < 1e-3);
    }
}
