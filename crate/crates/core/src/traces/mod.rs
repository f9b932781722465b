//! Functions on the free surface: averages, the coupled semi-norms,
//! zero-mass realizations, the corner weight and weighted derivatives.

pub mod fractional;
pub mod weight;

pub use fractional::{component_screens, seminorm_screened, GagliardoForm, ScreenedSeminorm, DEFAULT_SCREEN};
pub use weight::{blend, build_weight, weighted_corners, BoundaryWeight, BLEND_LIPSCHITZ};

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::dno::DtnOperator;
use crate::elliptic::BoundaryMass;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::TraceGrid;

/// Nodal values of a piecewise-linear function on every free-surface
/// component, in the global trace numbering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceField {
    values: Vec<f64>,
}

impl TraceField {
    pub fn new(values: Vec<f64>) -> TraceField {
        TraceField { values }
    }

    pub fn zeros(n: usize) -> TraceField {
        TraceField { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> TraceField {
        TraceField { values: vec![c; n] }
    }

    pub fn from_fn(grid: &TraceGrid, f: impl Fn(f64) -> f64) -> TraceField {
        TraceField { values: grid.abscissae().into_iter().map(f).collect() }
    }

    /// Like `from_fn` with the component index passed first.
    pub fn from_component_fn(grid: &TraceGrid, f: impl Fn(usize, f64) -> f64) -> TraceField {
        let values = grid
            .components
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.x.iter().map(move |&x| (j, x)))
            .map(|(j, x)| f(j, x))
            .collect();
        TraceField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component<'a>(&'a self, grid: &TraceGrid, j: usize) -> &'a [f64] {
        &self.values[grid.range(j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &TraceField) {
        linalg::axpy(alpha, &x.values, &mut self.values);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks the field against a grid.
    pub fn check(&self, grid: &TraceGrid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: self.len() });
        }
        if !self.is_finite() {
            return Err(Error::InvalidArgument("trace field has non-finite entries".into()));
        }
        Ok(())
    }
}

impl From<Vec<f64>> for TraceField {
    fn from(values: Vec<f64>) -> TraceField {
        TraceField { values }
    }
}

impl Add for &TraceField {
    type Output = TraceField;
    fn add(self, rhs: &TraceField) -> TraceField {
        assert_eq!(self.len(), rhs.len());
        TraceField::new(self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &TraceField {
    type Output = TraceField;
    fn sub(self, rhs: &TraceField) -> TraceField {
        assert_eq!(self.len(), rhs.len());
        TraceField::new(self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&TraceField> for f64 {
    type Output = TraceField;
    fn mul(self, rhs: &TraceField) -> TraceField {
        TraceField::new(rhs.values.iter().map(|v| self * v).collect())
    }
}

/// Weights `w` with `w · f_j` equal to the exact average of the P1
/// function over the component's averaging window.
pub fn average_weights(grid: &TraceGrid, j: usize) -> Vec<f64> {
    let c = &grid.components[j];
    let (wa, wb) = c.interval.average_window;
    let mut w = vec![0.0; c.len()];
    for k in 0..c.len().saturating_sub(1) {
        let (x0, x1) = (c.x[k], c.x[k + 1]);
        let (l, r) = (x0.max(wa), x1.min(wb));
        if r <= l {
            continue;
        }
        let s = (0.5 * (l + r) - x0) / (x1 - x0);
        w[k] += (r - l) * (1.0 - s);
        w[k + 1] += (r - l) * s;
    }
    let len = wb - wa;
    w.iter_mut().for_each(|v| *v /= len);
    w
}

pub fn component_average(grid: &TraceGrid, f: &TraceField, j: usize) -> f64 {
    linalg::dot(&average_weights(grid, j), f.component(grid, j))
}

/// `Σ_j |I_j| f̄_j`, the quantity set to zero by the zero-mass realization.
pub fn weighted_mass(grid: &TraceGrid, f: &TraceField) -> f64 {
    (0..grid.num_components()).map(|j| grid.components[j].interval.len() * component_average(grid, f, j)).sum()
}

/// Subtracts the constant that makes `Σ_j |I_j| f̄_j` vanish.
pub fn zero_mass_project(grid: &TraceGrid, f: &TraceField) -> TraceField {
    let c = weighted_mass(grid, f) / grid.length();
    TraceField::new(f.values.iter().map(|v| v - c).collect())
}

/// Order of the free-surface semi-norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    Half,
    One,
}

/// Per-component summary written by the report tooling.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentReport {
    pub component: usize,
    pub seminorm_half: f64,
    pub seminorm_one: f64,
    pub average: f64,
    pub l2: f64,
    pub originally_unbounded: bool,
}

/// Precomputed forms for repeated semi-norm evaluations on one grid.
#[derive(Clone, Debug)]
pub struct TraceNorms {
    pub grid: TraceGrid,
    pub mass: BoundaryMass,
    forms: Vec<ScreenedSeminorm>,
    averages: Vec<Vec<f64>>,
}

impl TraceNorms {
    /// `screen` applies to the components that were originally half-lines;
    /// bounded components are unscreened.
    pub fn new(grid: &TraceGrid, screen: f64) -> Result<TraceNorms> {
        let screens = component_screens(grid, screen);
        Self::with_screens(grid, &screens)
    }

    pub fn with_screens(grid: &TraceGrid, screens: &[f64]) -> Result<TraceNorms> {
        if screens.len() != grid.num_components() {
            return Err(Error::DimensionMismatch { expected: grid.num_components(), found: screens.len() });
        }
        let forms = grid
            .components
            .iter()
            .zip(screens)
            .map(|(c, &s)| ScreenedSeminorm::new(&c.x, s))
            .collect::<Result<Vec<_>>>()?;
        let averages = (0..grid.num_components()).map(|j| average_weights(grid, j)).collect();
        Ok(TraceNorms { grid: grid.clone(), mass: BoundaryMass::new(grid), forms, averages })
    }

    pub fn component_half(&self, f: &TraceField, j: usize) -> f64 {
        self.forms[j].eval(f.component(&self.grid, j))
    }

    pub fn averages(&self, f: &TraceField) -> Vec<f64> {
        (0..self.grid.num_components()).map(|j| linalg::dot(&self.averages[j], f.component(&self.grid, j))).collect()
    }

    /// `Σ_j |f̄_{j+1} − f̄_j|`.
    pub fn jumps(&self, f: &TraceField) -> f64 {
        self.averages(f).windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn component_derivative_l2(&self, f: &TraceField, j: usize) -> f64 {
        let c = &self.grid.components[j];
        let v = f.component(&self.grid, j);
        (1..c.len()).map(|k| (v[k] - v[k - 1]).powi(2) / (c.x[k] - c.x[k - 1])).sum::<f64>().sqrt()
    }

    /// `|∂ₓ f|_{L²}` over the whole free surface.
    pub fn derivative_l2(&self, f: &TraceField) -> f64 {
        (0..self.grid.num_components()).map(|j| self.component_derivative_l2(f, j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn half(&self, f: &TraceField) -> f64 {
        (0..self.grid.num_components()).map(|j| self.component_half(f, j)).sum::<f64>() + self.jumps(f)
    }

    pub fn one(&self, f: &TraceField) -> f64 {
        self.derivative_l2(f) + self.jumps(f)
    }

    pub fn seminorm(&self, f: &TraceField, order: Order) -> f64 {
        match order {
            Order::Half => self.half(f),
            Order::One => self.one(f),
        }
    }

    pub fn l2(&self, f: &TraceField) -> f64 {
        self.mass.inner(f.values(), f.values()).max(0.0).sqrt()
    }

    pub fn component_l2(&self, f: &TraceField, j: usize) -> f64 {
        let c = &self.grid.components[j];
        let v = f.component(&self.grid, j);
        (1..c.len())
            .map(|k| (c.x[k] - c.x[k - 1]) * (v[k - 1].powi(2) + v[k - 1] * v[k] + v[k].powi(2)) / 3.0)
            .sum::<f64>()
            .sqrt()
    }

    pub fn report(&self, f: &TraceField) -> Vec<ComponentReport> {
        let avg = self.averages(f);
        (0..self.grid.num_components())
            .map(|j| ComponentReport {
                component: j,
                seminorm_half: self.component_half(f, j),
                seminorm_one: self.component_derivative_l2(f, j),
                average: avg[j],
                l2: self.component_l2(f, j),
                originally_unbounded: self.grid.components[j].interval.originally_unbounded,
            })
            .collect()
    }
}

/// The coupled semi-norm of order ½ or 1 on the free surface, with the
/// default screening radius on truncated half-lines.
pub fn seminorm_gamma_d(grid: &TraceGrid, f: &TraceField, order: Order) -> Result<f64> {
    f.check(grid)?;
    Ok(TraceNorms::new(grid, DEFAULT_SCREEN)?.seminorm(f, order))
}

/// L² projection of the elementwise derivative back onto P1.
pub fn derivative_projection(grid: &TraceGrid, mass: &BoundaryMass, f: &TraceField) -> TraceField {
    let mut b = vec![0.0; f.len()];
    for j in 0..grid.num_components() {
        let r = grid.range(j);
        let v = &f.values[r.clone()];
        for k in 1..v.len() {
            let half_jump = 0.5 * (v[k] - v[k - 1]);
            b[r.start + k - 1] += half_jump;
            b[r.start + k] += half_jump;
        }
    }
    TraceField::new(mass.solve(&b))
}

/// Nodal values of ρ ∂ₓ f.
pub fn weighted_derivative(grid: &TraceGrid, f: &TraceField, w: &BoundaryWeight) -> TraceField {
    let d = derivative_projection(grid, &BoundaryMass::new(grid), f);
    TraceField::new(d.values.iter().zip(&w.values).map(|(a, r)| a * r).collect())
}

/// `(ρ∂ₓ)^order f`.
pub fn weighted_derivative_pow(grid: &TraceGrid, f: &TraceField, w: &BoundaryWeight, order: usize) -> TraceField {
    let mass = BoundaryMass::new(grid);
    let mut g = f.clone();
    for _ in 0..order {
        let d = derivative_projection(grid, &mass, &g);
        g = TraceField::new(d.values.iter().zip(&w.values).map(|(a, r)| a * r).collect());
    }
    g
}

/// Smoothing operator K_ε = (1 − ε ∂ₓ(ρ² ∂ₓ ·))⁻¹ with natural boundary
/// conditions, one tridiagonal solve per component.
pub fn smooth_k_eps(grid: &TraceGrid, f: &TraceField, eps: f64, w: &BoundaryWeight) -> Result<TraceField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    f.check(grid)?;
    let mut out = Vec::with_capacity(f.len());
    for (j, c) in grid.components.iter().enumerate() {
        let r = grid.range(j);
        let rho = &w.values[r.clone()];
        let v = &f.values[r];
        let n = c.len();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n.saturating_sub(1)];
        let mut rhs = vec![0.0; n];
        for k in 0..n.saturating_sub(1) {
            let h = c.x[k + 1] - c.x[k];
            let kappa = (rho[k] * rho[k] + rho[k] * rho[k + 1] + rho[k + 1] * rho[k + 1]) / (3.0 * h);
            d[k] += h / 3.0 + eps * kappa;
            d[k + 1] += h / 3.0 + eps * kappa;
            e[k] = h / 6.0 - eps * kappa;
            rhs[k] += h / 3.0 * v[k] + h / 6.0 * v[k + 1];
            rhs[k + 1] += h / 6.0 * v[k] + h / 3.0 * v[k + 1];
        }
        out.extend(linalg::solve_tridiagonal(&d, &e, &rhs));
    }
    Ok(TraceField::new(out))
}

/// `(ρ∂ₓ)^j G ψ − G (ρ∂ₓ)^j ψ` with G the discrete Dirichlet–Neumann map.
pub fn commutator_apply(op: &DtnOperator, w: &BoundaryWeight, order: usize, psi: &TraceField) -> Result<TraceField> {
    if order == 0 || order > 3 {
        return Err(Error::InvalidArgument(format!("commutator order must be 1, 2 or 3, got {order}")));
    }
    psi.check(op.grid())?;
    let grid = op.grid();
    let a = weighted_derivative_pow(grid, &op.apply(psi), w, order);
    let b = op.apply(&weighted_derivative_pow(grid, psi, w, order));
    Ok(&a - &b)
}
