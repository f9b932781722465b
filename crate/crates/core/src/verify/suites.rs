//! Named suites that run the checks on one geometry and collect a report.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::mesh::GradingParams;
use crate::traces::{weighted_corners, zero_mass_project, BLEND_LIPSCHITZ, DEFAULT_SCREEN};

use super::checks::*;
use super::corner::single_mixed_corner;
use super::ensemble::{Ensemble, JACOBI_SWEEPS};

/// Opening angles of the single-corner sectors in the corner suite.
pub const CORNER_ANGLES: [f64; 3] = [PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 4.0];
/// Structured mesh levels (cells per unit side) of the commutator suite.
pub const COMMUTATOR_LEVELS: [usize; 4] = [40, 80, 160, 320];
pub const COMMUTATOR_GRADING: f64 = 3.0;
pub const COMMUTATOR_SUPPORT: f64 = 0.08;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Traces,
    Dno,
    Rellich,
    Evolution,
    Commutator,
    Corner,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["traces", "dno", "rellich", "evolution", "commutator", "corner", "all"];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Traces => "traces",
            Suite::Dno => "dno",
            Suite::Rellich => "rellich",
            Suite::Evolution => "evolution",
            Suite::Commutator => "commutator",
            Suite::Corner => "corner",
            Suite::All => "all",
        }
    }

    fn members(&self) -> Vec<Suite> {
        match self {
            Suite::All => {
                vec![Suite::Traces, Suite::Dno, Suite::Rellich, Suite::Evolution, Suite::Commutator, Suite::Corner]
            }
            s => vec![*s],
        }
    }

    /// Suites that draw random ensembles and so need an explicit seed.
    pub fn uses_ensembles(&self) -> bool {
        matches!(self, Suite::Traces | Suite::Dno | Suite::Evolution | Suite::All)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| [Suite::Traces, Suite::Dno, Suite::Rellich, Suite::Evolution, Suite::Commutator, Suite::Corner, Suite::All][i])
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// Reported constant; passes when finite.
    Finite,
}

/// One measured quantity with its target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, target: f64) -> Check {
        Check { name: name.into(), value, target: Some(target), relation: Relation::AtMost, pass: value <= target, note: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, target: f64) -> Check {
        Check { name: name.into(), value, target: Some(target), relation: Relation::AtLeast, pass: value >= target, note: None }
    }

    pub fn finite(name: impl Into<String>, value: f64) -> Check {
        Check { name: name.into(), value, target: None, relation: Relation::Finite, pass: value.is_finite(), note: None }
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, err: &Error) -> Check {
        Check {
            name: name.into(),
            value: f64::NAN,
            target: None,
            relation: Relation::Finite,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

/// Discretization and ensemble settings shared by the suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteParams {
    /// Coarse mesh size; refinement studies also use `h0/2` and `h0/4`.
    pub h0: f64,
    pub grading_exponent: f64,
    /// Corner radius; the geometry default when absent.
    pub rho0: Option<f64>,
    /// Ensemble size.
    pub samples: usize,
    /// Time steps of the long evolution runs.
    pub steps: usize,
}

impl Default for SuiteParams {
    fn default() -> SuiteParams {
        SuiteParams { h0: 0.1, grading_exponent: 3.0, rho0: None, samples: 100, steps: 1000 }
    }
}

impl SuiteParams {
    pub fn grading(&self, spec: &DomainSpec, h0: f64) -> GradingParams {
        GradingParams::new(h0, self.grading_exponent, self.rho0.unwrap_or_else(|| GradingParams::default_rho0(spec)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return Err(Error::InvalidArgument(format!("h0 must be positive, got {}", self.h0)));
        }
        if self.samples == 0 || self.steps == 0 {
            return Err(Error::InvalidArgument("samples and steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub geometry: String,
    pub params: SuiteParams,
    pub seed: u64,
    /// Sorted by name.
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the suite `name` on the built-in geometry `geometry`.
pub fn run_suite(name: &str, geometry: &str, params: &SuiteParams, seed: u64) -> Result<SuiteReport> {
    let suite: Suite = name.parse()?;
    let spec = DomainSpec::builtin(geometry)?;
    run_suite_on(suite, geometry, &spec, params, seed)
}

/// Runs `suite` on `spec`; `label` names the geometry in the report. A
/// check that cannot be evaluated is reported as failed.
pub fn run_suite_on(suite: Suite, label: &str, spec: &DomainSpec, params: &SuiteParams, seed: u64) -> Result<SuiteReport> {
    params.validate()?;
    spec.validate().into_result()?;
    let ctx = Context { spec, params, seed };
    let mut checks: Vec<Check> = suite
        .members()
        .into_par_iter()
        .map(|s| match s {
            Suite::Traces => traces_suite(&ctx),
            Suite::Dno => dno_suite(&ctx),
            Suite::Rellich => rellich_suite(&ctx),
            Suite::Evolution => evolution_suite(&ctx),
            Suite::Commutator => commutator_suite(&ctx),
            Suite::Corner => corner_suite(&ctx),
            Suite::All => unreachable!(),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(SuiteReport { suite, geometry: label.to_string(), params: *params, seed, checks })
}

struct Context<'a> {
    spec: &'a DomainSpec,
    params: &'a SuiteParams,
    seed: u64,
}

impl Context<'_> {
    fn discretize(&self, h0: f64) -> Result<Discretization> {
        Discretization::generate(self.spec, &self.params.grading(self.spec, h0))
    }

    fn pair(&self) -> Result<(Discretization, Discretization)> {
        let (a, b) = rayon::join(|| self.discretize(self.params.h0), || self.discretize(0.5 * self.params.h0));
        Ok((a?, b?))
    }
}

/// Runs `f`, turning an error into a failed check named `prefix`.
fn guarded(prefix: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::errored(prefix, &e)])
}

fn continuum() -> Ensemble {
    Ensemble::Continuum { modes: CONTINUUM_MODES }
}

fn traces_suite(ctx: &Context) -> Vec<Check> {
    let mut out = guarded("traces.setup", || {
        let (coarse, fine) = ctx.pair()?;
        let mut out = Vec::new();
        let d = &coarse;
        let grid = d.grid();
        out.push(Check::at_most("traces.weight.lipschitz", d.weight.lipschitz(grid), BLEND_LIPSCHITZ * (1.0 + 1e-12)));
        out.push(Check::at_most(
            "traces.weight.cap",
            d.weight.values.iter().fold(0.0f64, |m, &v| m.max(v)) / d.rho0,
            1.0 + 1e-15,
        ));
        let x = grid.abscissae();
        let mut at_corner: f64 = 0.0;
        for c in weighted_corners(&d.mesh().corners) {
            if c.z == 0.0 {
                if let Some(k) = x.iter().position(|&xk| xk == c.x) {
                    at_corner = at_corner.max(d.weight.values[k]);
                }
            }
        }
        out.push(Check::at_most("traces.weight.zero_at_corners", at_corner, 0.0));

        let norms = crate::traces::TraceNorms::new(grid, DEFAULT_SCREEN)?;
        let c = crate::traces::TraceField::constant(grid.len(), 2.5);
        out.push(Check::at_most("traces.seminorm.constant", norms.half(&c) + norms.one(&c), 1e-12));
        let mut mass: f64 = 0.0;
        let mut idem: f64 = 0.0;
        for i in 0..ctx.params.samples as u64 {
            let f = Ensemble::Jacobi { sweeps: JACOBI_SWEEPS[i as usize % 3] }.sample(grid, ctx.seed, i);
            let p = zero_mass_project(grid, &f);
            mass = mass.max(crate::traces::weighted_mass(grid, &p).abs());
            idem = idem.max((&zero_mass_project(grid, &p) - &p).max_abs());
        }
        out.push(Check::at_most("traces.zero_mass.mass", mass, 1e-12));
        out.push(Check::at_most("traces.zero_mass.idempotent", idem, 1e-12));

        let k = smoother_study(grid, &d.weight, 1e-4, ctx.seed, ctx.params.samples.div_ceil(3))?;
        out.push(Check::at_most("traces.k_eps.gain", k.gain, 1.0 + 1e-10));
        out.push(Check::at_most("traces.k_eps.defect", k.defect, 1e-2));

        let (a, b) = rayon::join(
            || EnsembleConstants::measure(&coarse, continuum(), ctx.seed, ctx.params.samples, DEFAULT_SCREEN),
            || EnsembleConstants::measure(&fine, continuum(), ctx.seed, ctx.params.samples, DEFAULT_SCREEN),
        );
        let (a, b) = (a?, b?);
        out.push(Check::at_least("traces.screening.lower", a.screening.lo, 1.0 - 1e-12));
        out.push(Check::finite("traces.screening.upper", a.screening.hi));
        out.push(Check::at_most("traces.screening.drift", b.screening.drift(&a.screening), 0.1));
        out.push(Check::finite("traces.poincare.constant", a.poincare));
        out.push(Check::at_most("traces.poincare.drift", relative_change(b.poincare, a.poincare), 0.1));
        out.push(Check::at_least("traces.h_half.lower", a.h_half.lo, f64::MIN_POSITIVE));
        out.push(Check::finite("traces.h_half.upper", a.h_half.hi));
        out.push(Check::at_most("traces.h_half.drift", b.h_half.drift(&a.h_half), 0.1));
        out.push(Check::finite("traces.average_window.constant", a.average_window));
        out.push(Check::at_most(
            "traces.average_window.drift",
            relative_change(b.average_window, a.average_window),
            0.1,
        ));
        out.push(Check::finite(
            "traces.trace_continuity.constant",
            trace_continuity(d, ctx.seed, ctx.params.samples.min(20))?,
        ));
        let (gap, trace) = extension_identity(d, ctx.seed, ctx.params.samples.min(10))?;
        out.push(Check::at_most("traces.right_inverse.trace", trace, 0.0));
        out.push(Check::at_most("traces.right_inverse.energy", gap, 1e-9));
        Ok(out)
    });
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

fn dno_suite(ctx: &Context) -> Vec<Check> {
    guarded("dno.setup", || {
        let (coarse, fine) = ctx.pair()?;
        let op = &coarse.op;
        let mut out = vec![
            Check::at_most("dno.symmetry", op.asymmetry(), 1e-12),
            Check::at_most("dno.kernel", op.kernel_defect(), 1e-10),
            Check::at_least("dno.semidefinite", min_rayleigh(op, ctx.seed, ctx.params.samples), -1e-12),
            Check::at_most("dno.green_mean", green_mean(op, ctx.seed, ctx.params.samples), 1e-9),
            Check::at_most("dno.lanczos_vs_dense", lanczos_dense_gap(op, 6.min(op.dim()))?, 1e-8),
        ];
        let (gap, _) = extension_identity(&coarse, ctx.seed, ctx.params.samples.min(10))?;
        out.push(Check::at_most("dno.energy_identity", gap, 1e-9));
        let rows = spectrum_rows(op, ctx.spec, 6.min(op.dim()))?;
        out.push(Check::at_most("dno.spectrum.ground", rows[0].lambda.abs() / op.schur().amax(), 1e-10));
        for r in rows.iter().skip(1) {
            match (r.analytic, r.rel_error) {
                (Some(a), Some(e)) => {
                    // P1 a priori bound (k h0)²/2 on the eigenvalue error
                    let k = (a / a.tanh().max(f64::MIN_POSITIVE)).max(0.0);
                    let bound = 0.5 * (k * ctx.params.h0).powi(2);
                    out.push(
                        Check::at_most(format!("dno.spectrum.mode{}", r.index), e, bound)
                            .with_note(format!("lambda {:.6e} vs {:.6e}", r.lambda, a)),
                    );
                }
                _ => out.push(Check::finite(format!("dno.spectrum.mode{}", r.index), r.lambda)),
            }
        }
        let (a, b) = rayon::join(
            || EnsembleConstants::measure(&coarse, continuum(), ctx.seed, ctx.params.samples, DEFAULT_SCREEN),
            || EnsembleConstants::measure(&fine, continuum(), ctx.seed, ctx.params.samples, DEFAULT_SCREEN),
        );
        let (a, b) = (a?, b?);
        out.push(Check::at_least("dno.equivalence.lower", a.dtn_ratio.lo, f64::MIN_POSITIVE));
        out.push(Check::finite("dno.equivalence.upper", a.dtn_ratio.hi));
        out.push(Check::at_most("dno.equivalence.drift", b.dtn_ratio.drift(&a.dtn_ratio), 0.1));
        out.push(Check::finite("dno.ellipticity.constant", a.ellipticity));
        out.push(Check::at_most("dno.ellipticity.drift", relative_change(b.ellipticity, a.ellipticity), 0.1));
        out.push(Check::finite("dno.l2_continuity.constant", a.l2_continuity));
        Ok(out)
    })
}

fn rellich_suite(ctx: &Context) -> Vec<Check> {
    let mut out = guarded("rellich.affine", || {
        let d = ctx.discretize(ctx.params.h0)?;
        Ok(rellich_affine(&d.system)?
            .into_iter()
            .map(|(name, r)| Check::at_most(format!("rellich.affine.{name}"), r, 1e-10))
            .collect())
    });
    out.extend(guarded("rellich.cos_mode", || {
        let h = ctx.params.h0;
        let rho0 = ctx.params.grading(ctx.spec, h).rho0;
        let res = rellich_cos_mode(ctx.spec, &[h, 0.5 * h, 0.25 * h], ctx.params.grading_exponent, rho0)?;
        let mut out: Vec<Check> =
            res.iter().enumerate().map(|(k, &r)| Check::finite(format!("rellich.cos_mode.level{k}"), r)).collect();
        for k in 1..res.len() {
            out.push(Check::at_least(format!("rellich.cos_mode.ratio{k}"), res[k - 1] / res[k], 2.0));
        }
        Ok(out)
    }));
    out
}

fn evolution_suite(ctx: &Context) -> Vec<Check> {
    guarded("evolution.setup", || {
        let (coarse, fine) = ctx.pair()?;
        let op = &coarse.op;
        let g = ctx.spec.gravity;
        let steps = ctx.params.steps;
        let mut out = vec![Check::at_most("evolution.skew", skew_defect(op, g, ctx.seed, 50)?, 1e-11)];
        let (lambda, mode) = standing_mode(op)?;
        let period = 2.0 * PI / (g * lambda).sqrt();
        out.push(Check::at_most(
            "evolution.energy_drift",
            energy_drift(op, g, &mode, period / 200.0, steps)?,
            1e-8,
        ));
        let fine_period = standing_period(op, g, 2000)?;
        out.push(Check::at_most("evolution.period.semi_discrete", fine_period.relative_error(), 5e-3));
        if let Some(exact) = flat_rectangle_eigenvalues(ctx.spec, 2) {
            let t = 2.0 * PI / (g * exact[1]).sqrt();
            out.push(Check::at_most("evolution.period.analytic", relative_change(fine_period.measured, t), 5e-3));
        }
        let e1 = standing_period(op, g, 100)?.relative_error();
        let e2 = standing_period(op, g, 200)?.relative_error();
        out.push(Check::at_least("evolution.period.order", e1 / e2, 3.5));
        out.push(Check::at_most(
            "evolution.zero_mass",
            zero_mass_drift(op, g, ctx.seed, period / 200.0, steps)?,
            1e-10,
        ));
        out.push(Check::at_most("evolution.forced_bound", forced_bound_violation(op, g, period / 100.0, 200)?, 1e-12));
        out.push(Check::at_most(
            "evolution.time_norm_bound",
            time_norm_violation(op, g, &zero_mean_state(op, ctx.seed), period / 100.0, 200)?,
            1e-4,
        ));
        let psi0 = |d: &Discretization| continuum().sample(d.grid(), ctx.seed, 0);
        let (a, b) = rayon::join(
            || n1_growth(&coarse, g, &psi0(&coarse), period / 200.0, 200),
            || n1_growth(&fine, g, &psi0(&fine), period / 200.0, 200),
        );
        let (a, b) = (a?, b?);
        out.push(Check::finite("evolution.n1.growth", a));
        out.push(Check::at_most("evolution.n1.drift", relative_change(b, a), 0.15));
        Ok(out)
    })
}

/// The spec itself when it is a quadrilateral with one mixed corner, else
/// the default sector.
fn commutator_domain(spec: &DomainSpec) -> DomainSpec {
    if spec.boundary_loop().len() == 4 && single_mixed_corner(spec).is_ok() {
        spec.clone()
    } else {
        DomainSpec::sector(3.0 * PI / 4.0)
    }
}

fn commutator_suite(ctx: &Context) -> Vec<Check> {
    let mut out = guarded("commutator.constant", || {
        let d = ctx.discretize(ctx.params.h0)?;
        Ok(vec![Check::at_most("commutator.constant", commutator_of_constant(&d)?, 1e-10)])
    });
    out.extend(guarded("commutator.sector", || {
        let sector = commutator_domain(ctx.spec);
        let res = commutator_levels(&sector, &COMMUTATOR_LEVELS, COMMUTATOR_GRADING, COMMUTATOR_SUPPORT)?;
        let mut out: Vec<Check> = res
            .iter()
            .zip(COMMUTATOR_LEVELS)
            .map(|(&r, n)| Check::finite(format!("commutator.sector.n{n:03}"), r))
            .collect();
        for k in 1..res.len() {
            out.push(Check::at_most(format!("commutator.sector.decrease{k}"), res[k] / res[k - 1], 1.0));
        }
        out.push(Check::at_most("commutator.sector.finest", res[res.len() - 1], 0.05));
        Ok(out)
    }));
    out
}

fn corner_suite(ctx: &Context) -> Vec<Check> {
    CORNER_ANGLES
        .par_iter()
        .map(|&omega| {
            let label = format!("corner.omega_{:.0}deg", omega.to_degrees());
            match sector_exponent(omega, 0.25 * ctx.params.h0, ctx.params.grading_exponent) {
                Ok(fit) => Check::at_most(label, fit.relative_error(), 0.05)
                    .with_note(format!("nu_hat {:.4} vs {:.4}", fit.nu_hat, fit.nu_exact)),
                Err(e) => Check::errored(label, &e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().name(), n);
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::UnknownSuite(_))));
        assert!(matches!(run_suite("bogus", "rectangle", &SuiteParams::default(), 1), Err(Error::UnknownSuite(_))));
        assert!(matches!(run_suite("dno", "nowhere", &SuiteParams::default(), 1), Err(Error::UnknownGeometry(_))));
    }

    #[test]
    fn checks_compare_and_fail_on_nan() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Check::at_least("a", f64::NAN, 1.0).pass);
        assert!(!Check::finite("a", f64::INFINITY).pass);
    }

    #[test]
    fn coarse_rellich_report_is_sorted_and_deterministic() {
        let params = SuiteParams { h0: 0.2, samples: 10, steps: 50, ..SuiteParams::default() };
        let a = run_suite("rellich", "rectangle", &params, 7).unwrap();
        let b = run_suite("rellich", "rectangle", &params, 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.checks.windows(2).all(|w| w[0].name < w[1].name));
        assert!(a.check("rellich.affine.general").unwrap().pass);
    }
}
