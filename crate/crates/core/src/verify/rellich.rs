//! The Rellich identity
//! ∫_Γ |∇u|² α·n − 2 ∫_Γ (n·∇u)(α·∇u) = ∫_Ω div α |∇u|² − 2 ∇u·(∇α)∇u
//! for harmonic u and affine α.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::elliptic::{element_gradient, FemSystem, PotentialField};
use crate::error::{check_len, Result};
use crate::geom::{self, Point};

/// Affine vector field α(p) = B p + c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub b: [[f64; 2]; 2],
    pub c: [f64; 2],
}

impl AffineField {
    pub fn constant(c: [f64; 2]) -> AffineField {
        AffineField { b: [[0.0; 2]; 2], c }
    }

    /// α = (x, z).
    pub fn radial() -> AffineField {
        AffineField { b: [[1.0, 0.0], [0.0, 1.0]], c: [0.0, 0.0] }
    }

    pub fn eval(&self, p: Point) -> [f64; 2] {
        [
            self.b[0][0] * p[0] + self.b[0][1] * p[1] + self.c[0],
            self.b[1][0] * p[0] + self.b[1][1] * p[1] + self.c[1],
        ]
    }

    fn divergence(&self) -> f64 {
        self.b[0][0] + self.b[1][1]
    }

    /// gᵀ B g.
    fn quadratic(&self, g: [f64; 2]) -> f64 {
        g[0] * (self.b[0][0] * g[0] + self.b[0][1] * g[1]) + g[1] * (self.b[1][0] * g[0] + self.b[1][1] * g[1])
    }
}

/// How the gradient on a boundary edge is taken from the interior.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryGradient {
    /// Constant gradient of the element owning the edge; first order.
    #[default]
    Element,
    /// Tangential derivative of the trace along the edge; normal derivative
    /// from the consistent flux on the free surface and zero on the solid
    /// boundary. Valid for discrete harmonic fields with zero Neumann data.
    Flux,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RellichResidual {
    pub boundary: f64,
    pub volume: f64,
    pub energy: f64,
    /// |boundary − volume| / energy.
    pub residual: f64,
}

/// Both sides of the identity for the P1 field `phi`, with element
/// gradients on the boundary.
pub fn rellich_residual(system: &FemSystem, phi: &PotentialField, alpha: &AffineField) -> Result<RellichResidual> {
    rellich_residual_with(system, phi, alpha, BoundaryGradient::Element)
}

/// Both sides of the identity. The volume side uses element gradients and is
/// exact for P1 fields. Boundary gradients come from the interior side of
/// each boundary edge and are evaluated at its midpoint.
pub fn rellich_residual_with(
    system: &FemSystem,
    phi: &PotentialField,
    alpha: &AffineField,
    method: BoundaryGradient,
) -> Result<RellichResidual> {
    let mesh = &system.mesh;
    check_len(mesh.num_vertices(), phi.values.len())?;
    let gradient = |t: usize| {
        let [a, b, c] = mesh.triangles[t];
        element_gradient(mesh.triangle_points(t), [phi.values[a], phi.values[b], phi.values[c]])
    };
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owner.insert((a.min(b), a.max(b)), t);
        }
    }
    let mut volume = 0.0;
    let mut energy = 0.0;
    for t in 0..mesh.num_triangles() {
        let g = gradient(t);
        let area = mesh.area(t);
        let g2 = g[0] * g[0] + g[1] * g[1];
        volume += area * (alpha.divergence() * g2 - 2.0 * alpha.quadratic(g));
        energy += area * g2;
    }
    let mut flux = vec![f64::NAN; mesh.num_vertices()];
    if method == BoundaryGradient::Flux {
        let q = system.boundary_mass.solve(&system.weak_normal_derivative(phi));
        for (&v, q) in system.dirichlet_vertices.iter().zip(q) {
            flux[v] = q;
        }
    }
    let mut boundary = 0.0;
    for e in &mesh.boundary_edges {
        let [a, b] = e.v;
        let t = owner[&(a.min(b), a.max(b))];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let tri = mesh.triangles[t];
        let opposite = tri.iter().copied().find(|&v| v != a && v != b).unwrap();
        let d = geom::sub(pb, pa);
        let len = d[0].hypot(d[1]);
        let mut n = [d[1] / len, -d[0] / len];
        if geom::dot(n, geom::sub(mesh.vertices[opposite], pa)) > 0.0 {
            n = [-n[0], -n[1]];
        }
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let al = alpha.eval(mid);
        let g = match method {
            BoundaryGradient::Element => gradient(t),
            BoundaryGradient::Flux => {
                let dt = (phi.values[b] - phi.values[a]) / len;
                let dn = if e.tag.is_dirichlet() { 0.5 * (flux[a] + flux[b]) } else { 0.0 };
                [dt * d[0] / len + dn * n[0], dt * d[1] / len + dn * n[1]]
            }
        };
        let g2 = g[0] * g[0] + g[1] * g[1];
        boundary += len * (g2 * geom::dot(al, n) - 2.0 * geom::dot(n, g) * geom::dot(al, g));
    }
    let residual = if energy > 0.0 { (boundary - volume).abs() / energy } else { (boundary - volume).abs() };
    Ok(RellichResidual { boundary, volume, energy, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::elliptic::{assemble, solve_mixed};
    use crate::mesh::{generate, GradingParams};

    fn system(id: &str, h0: f64) -> FemSystem {
        let spec = DomainSpec::builtin(id).unwrap();
        assemble(&generate(&spec, &GradingParams::for_spec(&spec, h0, 2.0)).unwrap())
    }

    #[test]
    fn affine_fields_are_exact() {
        for id in ["rectangle", "one-object"] {
            let sys = system(id, 0.2);
            for (phi, alpha) in [
                (PotentialField::from_fn(&sys.mesh, |_, z| z), AffineField::constant([0.0, -1.0])),
                (PotentialField::from_fn(&sys.mesh, |x, _| x), AffineField::constant([1.0, 0.0])),
                (PotentialField::from_fn(&sys.mesh, |x, z| 2.0 * x - z), AffineField::radial()),
                (
                    PotentialField::from_fn(&sys.mesh, |x, z| x + 3.0 * z),
                    AffineField { b: [[0.5, -1.0], [2.0, 0.25]], c: [0.3, -0.7] },
                ),
            ] {
                let r = rellich_residual(&sys, &phi, &alpha).unwrap();
                assert!(r.residual < 1e-10, "{id}: {r:?}");
            }
        }
    }

    #[test]
    fn constant_field_has_zero_sides() {
        let sys = system("rectangle", 0.3);
        let phi = PotentialField::from_fn(&sys.mesh, |_, _| 4.0);
        let r = rellich_residual(&sys, &phi, &AffineField::radial()).unwrap();
        assert_eq!(r.energy, 0.0);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn flux_gradients_converge_at_second_order_on_the_rectangle() {
        let spec = DomainSpec::rectangle();
        let mut mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.2, 2.0)).unwrap();
        let mut res = Vec::new();
        for _ in 0..3 {
            let sys = assemble(&mesh);
            let phi = solve_mixed(&sys, &sys.trace_from_fn(|x| x.cos()), 1e-12).unwrap();
            let flux = rellich_residual_with(&sys, &phi, &AffineField::radial(), BoundaryGradient::Flux).unwrap();
            let elem = rellich_residual(&sys, &phi, &AffineField::radial()).unwrap();
            assert!(flux.residual < elem.residual);
            res.push(flux.residual);
            mesh = mesh.refine_uniform();
        }
        assert!(res[0] / res[1] > 3.0 && res[1] / res[2] > 3.0, "{res:?}");
    }
}
