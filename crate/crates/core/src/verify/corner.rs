//! Corner singularities: fitted gradient exponents and the dilation
//! commutator of the Dirichlet–Neumann map in a sector.

use serde::Serialize;

use crate::dno::DtnOperator;
use crate::domain::{CornerPoint, DomainSpec};
use crate::elliptic::{element_gradient, solve_mixed, FemSystem, DEFAULT_TOL};
use crate::error::{check_len, Error, Result};
use crate::geom;
use crate::traces::{commutator_apply, BoundaryWeight, TraceField};

const FIT_RADII: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerFit {
    /// Fitted ν̂ with ‖∇φ‖ ∼ r^(ν̂−1).
    pub nu_hat: f64,
    /// π / (2ω).
    pub nu_exact: f64,
    pub angle: f64,
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
}

impl CornerFit {
    pub fn relative_error(&self) -> f64 {
        (self.nu_hat - self.nu_exact).abs() / self.nu_exact
    }
}

/// The single physical mixed corner of `spec`.
pub fn single_mixed_corner(spec: &DomainSpec) -> Result<&CornerPoint> {
    let mut it = spec.mixed_corners();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(Error::InvalidArgument(format!(
            "corner fit needs exactly one mixed corner, found {}",
            spec.mixed_corners().count()
        ))),
    }
}

/// Least-squares slope of `log ‖∇φ‖_r` against `log r`, where ‖∇φ‖_r is the
/// root mean square of the gradient over the elements whose centroid lies
/// within `r` of the corner, sampled on `r ∈ [2 h_min, ρ0/2]`.
pub fn corner_exponent_fit(system: &FemSystem, spec: &DomainSpec, rho0: f64, psi: &TraceField) -> Result<CornerFit> {
    let corner = single_mixed_corner(spec)?;
    let mesh = &system.mesh;
    let phi = solve_mixed(system, psi, DEFAULT_TOL)?;
    let (r_lo, r_hi) = (2.0 * mesh.min_edge(), 0.5 * rho0);
    if r_hi < 4.0 * r_lo {
        return Err(Error::InvalidArgument(format!(
            "fitting ring [{r_lo:.3e}, {r_hi:.3e}] is too thin; grade the mesh further"
        )));
    }
    let mut cells: Vec<(f64, f64, f64)> = (0..mesh.num_triangles())
        .map(|t| {
            let p = mesh.triangle_points(t);
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let [a, b, d] = mesh.triangles[t];
            let g = element_gradient(p, [phi.values[a], phi.values[b], phi.values[d]]);
            let area = mesh.area(t);
            (geom::dist(c, corner.position()), area, area * (g[0] * g[0] + g[1] * g[1]))
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let radii: Vec<f64> = (0..FIT_RADII)
        .map(|k| r_lo * (r_hi / r_lo).powf(k as f64 / (FIT_RADII - 1) as f64))
        .collect();
    let (mut area, mut energy, mut next) = (0.0, 0.0, 0);
    let mut norms = Vec::with_capacity(FIT_RADII);
    for &r in &radii {
        while next < cells.len() && cells[next].0 < r {
            area += cells[next].1;
            energy += cells[next].2;
            next += 1;
        }
        if area == 0.0 {
            return Err(Error::InvalidArgument(format!("no element within {r:.3e} of the corner")));
        }
        norms.push((energy / area).sqrt());
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(CornerFit {
        nu_hat: 1.0 + sxy / sxx,
        nu_exact: std::f64::consts::PI / (2.0 * corner.angle),
        angle: corner.angle,
        radii,
        norms,
    })
}

/// Zero-mean bump `sin⁴(πx/s)(1 − 2x/s)` on `[0, s]`, extended by zero.
pub fn corner_bump(x: f64, support: f64) -> f64 {
    let t = x / support;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    (std::f64::consts::PI * t).sin().powi(4) * (1.0 - 2.0 * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorResidual {
    /// ‖[G, ρ∂ₓ]ψ − Gψ‖ / ‖Gψ‖ in L²(Γ^D).
    pub relative: f64,
    pub g_psi_norm: f64,
}

/// Deviation of the discrete map from the sector dilation identity
/// `[G, x∂ₓ] = G`, evaluated with the weight ρ.
pub fn sector_commutator_residual(op: &DtnOperator, w: &BoundaryWeight, psi: &TraceField) -> Result<CommutatorResidual> {
    check_len(op.dim(), w.len())?;
    let gpsi = op.apply(psi);
    // commutator_apply gives ρ∂ₓGψ − Gρ∂ₓψ = −[G, ρ∂ₓ]ψ.
    let c = commutator_apply(op, w, 1, psi)?;
    let res = &(-1.0 * &c) - &gpsi;
    let m = op.mass();
    let norm = m.inner(gpsi.values(), gpsi.values()).max(0.0).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("Gψ vanishes".into()));
    }
    Ok(CommutatorResidual { relative: m.inner(res.values(), res.values()).max(0.0).sqrt() / norm, g_psi_norm: norm })
}
