//! P1 Galerkin discretization of the Laplacian: stiffness and mass matrices,
//! the mixed problem defining harmonic extensions and the Neumann problem.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::geom::Point;
use crate::linalg::{self, CsrMatrix};
use crate::mesh::{boundary_trace_grid, Mesh, TraceGrid};
use crate::traces::TraceField;

/// Relative residual used when no tolerance is given.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `A ∇λ_i · ∇λ_j` for the three hat functions of a triangle.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area2 = crate::geom::orient(p[0], p[1], p[2]);
    let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [(p[j][1] - p[k][1]) / area2, (p[k][0] - p[j][0]) / area2]
    });
    let area = 0.5 * area2;
    std::array::from_fn(|i| std::array::from_fn(|j| area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1])))
}

/// Gradient of the P1 interpolant of `values` on a triangle.
pub fn element_gradient(p: [Point; 3], values: [f64; 3]) -> [f64; 2] {
    // differences against vertex 0, so constants give exactly zero
    let area2 = crate::geom::orient(p[0], p[1], p[2]);
    let (d1, d2) = (values[1] - values[0], values[2] - values[0]);
    let (e1, e2) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
    [(d1 * e2[1] - d2 * e1[1]) / area2, (d2 * e1[0] - d1 * e2[0]) / area2]
}

/// One-dimensional P1 mass matrix on the free-surface grid, tridiagonal on
/// each component.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMass {
    /// Per component: diagonal and off-diagonal.
    blocks: Vec<(Vec<f64>, Vec<f64>)>,
    offsets: Vec<usize>,
}

impl BoundaryMass {
    pub fn new(grid: &TraceGrid) -> BoundaryMass {
        let blocks = grid
            .components
            .iter()
            .map(|c| {
                let n = c.len();
                let mut d = vec![0.0; n];
                let mut e = vec![0.0; n.saturating_sub(1)];
                for (k, w) in c.widths().iter().enumerate() {
                    d[k] += w / 3.0;
                    d[k + 1] += w / 3.0;
                    e[k] = w / 6.0;
                }
                (d, e)
            })
            .collect();
        let offsets = (0..=grid.num_components())
            .map(|j| if j == grid.num_components() { grid.len() } else { grid.range(j).start })
            .collect();
        BoundaryMass { blocks, offsets }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (j, (d, e)) in self.blocks.iter().enumerate() {
            let o = self.offsets[j];
            for k in 0..d.len() {
                let mut s = d[k] * v[o + k];
                if k > 0 {
                    s += e[k - 1] * v[o + k - 1];
                }
                if k + 1 < d.len() {
                    s += e[k] * v[o + k + 1];
                }
                out[o + k] = s;
            }
        }
        out
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(b.len());
        for (j, (d, e)) in self.blocks.iter().enumerate() {
            let o = self.offsets[j];
            out.extend(linalg::solve_tridiagonal(d, e, &b[o..o + d.len()]));
        }
        out
    }

    /// `uᵀ M v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        linalg::dot(u, &self.apply(v))
    }

    /// Row sums, i.e. the integrals of the one-dimensional hat functions.
    pub fn row_sums(&self) -> Vec<f64> {
        self.apply(&vec![1.0; self.dim()])
    }

    pub fn total(&self) -> f64 {
        self.row_sums().iter().sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (j, (d, e)) in self.blocks.iter().enumerate() {
            let o = self.offsets[j];
            for k in 0..d.len() {
                m[(o + k, o + k)] = d[k];
                if k + 1 < d.len() {
                    m[(o + k, o + k + 1)] = e[k];
                    m[(o + k + 1, o + k)] = e[k];
                }
            }
        }
        m
    }
}

/// Nodal values over all mesh vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
}

impl PotentialField {
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> PotentialField {
        PotentialField { values: mesh.vertices.iter().map(|p| f(p[0], p[1])).collect() }
    }
}

/// Assembled P1 system with the free-surface / free-vertex split.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub mesh: Mesh,
    pub grid: TraceGrid,
    pub stiffness: CsrMatrix,
    /// Consistent P1 mass matrix over the domain.
    pub volume_mass: CsrMatrix,
    pub boundary_mass: BoundaryMass,
    /// Integral of each hat function over the domain.
    pub area_vector: Vec<f64>,
    /// Mesh vertex of each trace node, in trace order.
    pub dirichlet_vertices: Vec<usize>,
    /// Remaining vertices: interior and Neumann boundary.
    pub free_vertices: Vec<usize>,
    k_ff: CsrMatrix,
    k_fd: CsrMatrix,
    k_dd: CsrMatrix,
}

/// Assembles the stiffness and mass matrices. Element matrices are computed
/// in parallel and summed in element order.
pub fn assemble(mesh: &Mesh) -> FemSystem {
    let locals: Vec<([usize; 3], [[f64; 3]; 3], f64)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| (mesh.triangles[t], element_stiffness(mesh.triangle_points(t)), mesh.area(t)))
        .collect();
    let n = mesh.num_vertices();
    let mut kt = Vec::with_capacity(9 * locals.len());
    let mut mt = Vec::with_capacity(9 * locals.len());
    let mut area_vector = vec![0.0; n];
    for (tri, k, area) in &locals {
        for i in 0..3 {
            area_vector[tri[i]] += area / 3.0;
            for j in 0..3 {
                kt.push((tri[i], tri[j], k[i][j]));
                mt.push((tri[i], tri[j], if i == j { area / 6.0 } else { area / 12.0 }));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, n, &kt);
    let volume_mass = CsrMatrix::from_triplets(n, n, &mt);
    let grid = boundary_trace_grid(mesh);
    let boundary_mass = BoundaryMass::new(&grid);
    let dirichlet_vertices = grid.mesh_vertices();
    let mut is_d = vec![false; n];
    for &v in &dirichlet_vertices {
        is_d[v] = true;
    }
    let free_vertices: Vec<usize> = (0..n).filter(|&v| !is_d[v]).collect();
    let k_ff = stiffness.submatrix(&free_vertices, &free_vertices);
    let k_fd = stiffness.submatrix(&free_vertices, &dirichlet_vertices);
    let k_dd = stiffness.submatrix(&dirichlet_vertices, &dirichlet_vertices);
    FemSystem {
        mesh: mesh.clone(),
        grid,
        stiffness,
        volume_mass,
        boundary_mass,
        area_vector,
        dirichlet_vertices,
        free_vertices,
        k_ff,
        k_fd,
        k_dd,
    }
}

impl FemSystem {
    pub fn num_trace(&self) -> usize {
        self.dirichlet_vertices.len()
    }

    /// Free-free block of the stiffness matrix.
    pub fn k_ff(&self) -> &CsrMatrix {
        &self.k_ff
    }

    /// Free-Dirichlet block of the stiffness matrix.
    pub fn k_fd(&self) -> &CsrMatrix {
        &self.k_fd
    }

    /// Dirichlet-Dirichlet block of the stiffness matrix.
    pub fn k_dd(&self) -> &CsrMatrix {
        &self.k_dd
    }

    /// Restriction of a vertex field to the trace nodes.
    pub fn trace(&self, phi: &PotentialField) -> TraceField {
        TraceField::new(self.dirichlet_vertices.iter().map(|&v| phi.values[v]).collect())
    }

    /// Evaluates `f(x)` at the trace nodes.
    pub fn trace_from_fn(&self, f: impl Fn(f64) -> f64) -> TraceField {
        TraceField::from_fn(&self.grid, f)
    }

    /// `‖v‖_{L²(Ω)}` of a P1 field.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.volume_mass.bilinear(values, values).max(0.0).sqrt()
    }

    /// `∫_Ω v` of a P1 field.
    pub fn integral(&self, values: &[f64]) -> f64 {
        linalg::dot(&self.area_vector, values)
    }

    pub fn area(&self) -> f64 {
        self.area_vector.iter().sum()
    }

    /// Weak normal derivative on the free surface: the Dirichlet rows of
    /// `K φ`. For a discrete harmonic φ this is `S ψ`.
    pub fn weak_normal_derivative(&self, phi: &PotentialField) -> Vec<f64> {
        let kphi = self.stiffness.mul_vec(&phi.values);
        self.dirichlet_vertices.iter().map(|&v| kphi[v]).collect()
    }
}

/// Discrete harmonic extension: equals `psi` on the free surface and has
/// vanishing residual on every other vertex.
pub fn solve_mixed(system: &FemSystem, psi: &TraceField, tol: f64) -> Result<PotentialField> {
    check_len(system.num_trace(), psi.len())?;
    let mut rhs = system.k_fd.mul_vec(psi.values());
    rhs.iter_mut().for_each(|v| *v = -*v);
    // Constants are reproduced exactly when the data is constant.
    let mean = psi.values().iter().sum::<f64>() / psi.len().max(1) as f64;
    let mut x = vec![mean; system.free_vertices.len()];
    let nf = x.len();
    linalg::pcg(&system.k_ff, &rhs, &mut x, tol, 20 * nf + 100)?;
    let mut values = vec![0.0; system.mesh.num_vertices()];
    for (k, &v) in system.free_vertices.iter().enumerate() {
        values[v] = x[k];
    }
    for (k, &v) in system.dirichlet_vertices.iter().enumerate() {
        values[v] = psi.values()[k];
    }
    Ok(PotentialField { values })
}

/// Solves `Δu = f` in Ω, `∂ₙu = g` on the free surface and `∂ₙu = 0` on the
/// rest of the boundary. `f` is given by its nodal values. The solution has
/// zero mean over Ω.
pub fn solve_neumann(system: &FemSystem, f: &[f64], g: &TraceField, tol: f64) -> Result<PotentialField> {
    let n = system.mesh.num_vertices();
    check_len(n, f.len())?;
    check_len(system.num_trace(), g.len())?;
    let mf = system.volume_mass.mul_vec(f);
    let mg = system.boundary_mass.apply(g.values());
    let mut b: Vec<f64> = mf.iter().map(|v| -v).collect();
    for (k, &v) in system.dirichlet_vertices.iter().enumerate() {
        b[v] += mg[k];
    }
    let defect: f64 = b.iter().sum();
    let scale: f64 = mf.iter().map(|v| v.abs()).sum::<f64>() + mg.iter().map(|v| v.abs()).sum::<f64>();
    if defect.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NeumannIncompatible { defect: defect.abs() });
    }
    // Remove the round-off defect so the singular system is consistent.
    let area = system.area();
    for (bi, ai) in b.iter_mut().zip(&system.area_vector) {
        *bi -= defect * ai / area;
    }
    let mut x = vec![0.0; n];
    linalg::pcg(&system.stiffness, &b, &mut x, tol, 20 * n + 100)?;
    let mean = system.integral(&x) / area;
    x.iter_mut().for_each(|v| *v -= mean);
    Ok(PotentialField { values: x })
}

/// `φᵀ K φ = ∫_Ω |∇φ|²`.
pub fn dirichlet_energy(system: &FemSystem, phi: &PotentialField) -> f64 {
    system.stiffness.bilinear(&phi.values, &phi.values).max(0.0)
}

/// Writes `vertex, x, z, value` rows.
pub fn write_field_csv(mesh: &Mesh, values: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "vertex,x,z,value")?;
    for (i, (p, v)) in mesh.vertices.iter().zip(values).enumerate() {
        writeln!(out, "{i},{:.17e},{:.17e},{:.17e}", p[0], p[1], v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::mesh::{generate, GradingParams};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn rectangle(h0: f64, beta: f64) -> FemSystem {
        let spec = DomainSpec::rectangle();
        assemble(&generate(&spec, &GradingParams::for_spec(&spec, h0, beta)).unwrap())
    }

    #[test]
    fn reference_element() {
        let k = element_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rectangle_invariants() {
        let sys = rectangle(0.1, 3.0);
        let ones = vec![1.0; sys.mesh.num_vertices()];
        let k1 = sys.stiffness.mul_vec(&ones);
        let scale = sys.stiffness.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(k1.iter().all(|v| v.abs() < 1e-12 * scale));
        assert!((sys.boundary_mass.total() - PI).abs() < 1e-10);
        assert!((sys.area() - PI).abs() < 1e-12);
        assert!(sys.stiffness.asymmetry() == 0.0);
        // Row sums are the hat-function integrals on the grid.
        let sums = sys.boundary_mass.row_sums();
        for c in &sys.grid.components {
            let w = c.widths();
            for k in 0..c.len() {
                let expect = 0.5 * (if k > 0 { w[k - 1] } else { 0.0 } + if k < w.len() { w[k] } else { 0.0 });
                assert!((sums[k] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn affine_energies() {
        let sys = rectangle(0.1, 3.0);
        let z = PotentialField::from_fn(&sys.mesh, |_, z| z);
        let x = PotentialField::from_fn(&sys.mesh, |x, _| x);
        assert!((dirichlet_energy(&sys, &z) - PI).abs() < 1e-10);
        assert!((dirichlet_energy(&sys, &x) - PI).abs() < 1e-10);
        let c = PotentialField::from_fn(&sys.mesh, |_, _| 2.5);
        assert!(dirichlet_energy(&sys, &c) < 1e-20);
    }

    #[test]
    fn constant_data_gives_constant_extension() {
        let sys = rectangle(0.2, 1.0);
        let psi = sys.trace_from_fn(|_| 3.0);
        let phi = solve_mixed(&sys, &psi, DEFAULT_TOL).unwrap();
        assert!(phi.values.iter().all(|&v| (v - 3.0).abs() < 1e-12));
        assert!(dirichlet_energy(&sys, &phi) < 1e-20);
    }

    fn mixed_error(h0: f64) -> f64 {
        let sys = rectangle(h0, 3.0);
        let psi = sys.trace_from_fn(f64::cos);
        let phi = solve_mixed(&sys, &psi, 1e-12).unwrap();
        let exact = PotentialField::from_fn(&sys.mesh, |x, z| x.cos() * (z + 1.0).cosh() / 1f64.cosh());
        let err: Vec<f64> = phi.values.iter().zip(&exact.values).map(|(a, b)| a - b).collect();
        sys.l2_norm(&err)
    }

    #[test]
    fn mixed_problem_converges_at_second_order() {
        let (e1, e2) = (mixed_error(0.2), mixed_error(0.1));
        assert!(e1 / e2 >= 3.5, "errors {e1:.3e} {e2:.3e}");
    }

    #[test]
    fn extension_matches_trace_exactly_and_is_optimal() {
        let sys = rectangle(0.2, 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let psi = TraceField::new((0..sys.num_trace()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let phi = solve_mixed(&sys, &psi, 1e-12).unwrap();
        assert_eq!(sys.trace(&phi), psi);
        let e0 = dirichlet_energy(&sys, &phi);
        for _ in 0..20 {
            let mut p = phi.clone();
            for &v in &sys.free_vertices {
                p.values[v] += 1e-2 * rng.random_range(-1.0..1.0);
            }
            assert!(dirichlet_energy(&sys, &p) >= e0 - 1e-10);
        }
    }

    #[test]
    fn neumann_cosine_mode() {
        let sys = rectangle(0.1, 3.0);
        let f = vec![0.0; sys.mesh.num_vertices()];
        // remove the O(h²) mean of the interpolant so the data is compatible
        let mut g = sys.trace_from_fn(f64::cos);
        let c = sys.boundary_mass.inner(&vec![1.0; g.len()], g.values()) / sys.boundary_mass.total();
        g.values_mut().iter_mut().for_each(|v| *v -= c);
        let u = solve_neumann(&sys, &f, &g, 1e-12).unwrap();
        let mut exact = PotentialField::from_fn(&sys.mesh, |x, z| x.cos() * (z + 1.0).cosh() / 1f64.sinh());
        let mean = sys.integral(&exact.values) / sys.area();
        exact.values.iter_mut().for_each(|v| *v -= mean);
        let err: Vec<f64> = u.values.iter().zip(&exact.values).map(|(a, b)| a - b).collect();
        assert!(sys.l2_norm(&err) < 1e-2 * sys.l2_norm(&exact.values), "{}", sys.l2_norm(&err));
        assert!(sys.integral(&u.values).abs() < 1e-12);
    }

    #[test]
    fn neumann_zero_and_incompatible() {
        let sys = rectangle(0.2, 1.0);
        let zero = vec![0.0; sys.mesh.num_vertices()];
        let g0 = TraceField::zeros(sys.num_trace());
        let u = solve_neumann(&sys, &zero, &g0, 1e-12).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
        let one = vec![1.0; sys.mesh.num_vertices()];
        match solve_neumann(&sys, &one, &g0, 1e-12) {
            Err(Error::NeumannIncompatible { defect }) => assert!((defect - PI).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_has_one_row_per_vertex() {
        let sys = rectangle(0.5, 1.0);
        let mut buf = Vec::new();
        write_field_csv(&sys.mesh, &vec![0.0; sys.mesh.num_vertices()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), sys.mesh.num_vertices() + 1);
    }
}
