use std::sync::OnceLock;

use proptest::prelude::*;

use corner_waves::domain::DomainSpec;
use corner_waves::evolution::{energy, x_inner, apply_a, Stepper, WaveState};
use corner_waves::linalg;
use corner_waves::mesh::{generate, GradingParams};
use corner_waves::traces::{blend, weighted_mass, zero_mass_project, TraceField};
use corner_waves::verify::Discretization;

fn discretizations() -> &'static Vec<Discretization> {
    static CELL: OnceLock<Vec<Discretization>> = OnceLock::new();
    CELL.get_or_init(|| {
        DomainSpec::BUILTIN_IDS
            .iter()
            .map(|id| {
                let spec = DomainSpec::builtin(id).unwrap();
                Discretization::generate(&spec, &GradingParams::for_spec(&spec, 0.2, 3.0)).unwrap()
            })
            .collect()
    })
}

fn field(d: &Discretization, coeffs: &[f64]) -> TraceField {
    TraceField::from_fn(d.grid(), |x| {
        coeffs.iter().enumerate().map(|(m, c)| c * ((m as f64 + 0.5) * x + m as f64).sin()).sum()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dtn_is_symmetric_semidefinite_and_kills_constants(k in 0usize..5, a in coeffs(), b in coeffs(), c in -5.0..5.0f64) {
        let d = &discretizations()[k];
        let (u, v) = (field(d, &a), field(d, &b));
        let scale = d.op.schur().amax() * (1.0 + u.max_abs()) * (1.0 + v.max_abs()) * d.op.dim() as f64;
        let uv = d.op.form(&u, &v).unwrap();
        let vu = d.op.form(&v, &u).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-12 * scale);
        prop_assert!(d.op.energy(&u) >= -1e-12 * scale);
        let mut shifted = u.clone();
        shifted.axpy(c, &TraceField::constant(u.len(), 1.0));
        prop_assert!((d.op.energy(&shifted) - d.op.energy(&u)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn green_mean_vanishes(k in 0usize..5, a in coeffs()) {
        let d = &discretizations()[k];
        let g = d.op.apply(&field(d, &a));
        let mean = linalg::dot(&d.op.mass().row_sums(), g.values());
        prop_assert!(mean.abs() <= 1e-9 * (1.0 + g.max_abs()));
    }

    #[test]
    fn generator_is_skew(k in 0usize..5, a in coeffs(), b in coeffs(), c in coeffs(), e in coeffs()) {
        let d = &discretizations()[k];
        let g = d.spec.gravity;
        let u = WaveState::new(field(d, &a), field(d, &b), 0.0);
        let v = WaveState::new(field(d, &c), field(d, &e), 0.0);
        let s = x_inner(&d.op, g, &apply_a(&d.op, g, &u), &v).unwrap() + x_inner(&d.op, g, &u, &apply_a(&d.op, g, &v)).unwrap();
        let n = (energy(&d.op, g, &u).unwrap() * energy(&d.op, g, &v).unwrap()).sqrt();
        prop_assert!(s.abs() <= 1e-10 * (1.0 + n));
    }

    #[test]
    fn crank_nicolson_conserves_energy(k in 0usize..5, a in coeffs(), b in coeffs(), dt in 0.001..0.5f64) {
        let d = &discretizations()[k];
        let g = d.spec.gravity;
        let stepper = Stepper::new(&d.op, g, dt).unwrap();
        let mut u = WaveState::new(field(d, &a), field(d, &b), 0.0);
        let e0 = energy(&d.op, g, &u).unwrap();
        for _ in 0..20 {
            u = stepper.step(&u, None).unwrap();
        }
        prop_assert!((energy(&d.op, g, &u).unwrap() - e0).abs() <= 1e-10 * e0.max(1e-300));
    }

    #[test]
    fn zero_mass_projection_is_idempotent(k in 0usize..5, a in coeffs(), c in -3.0..3.0f64) {
        let d = &discretizations()[k];
        let mut f = field(d, &a);
        f.axpy(c, &TraceField::constant(f.len(), 1.0));
        let p = zero_mass_project(d.grid(), &f);
        prop_assert!(weighted_mass(d.grid(), &p).abs() <= 1e-12 * (1.0 + f.max_abs()));
        let q = zero_mass_project(d.grid(), &p);
        prop_assert!((&q - &p).max_abs() <= 1e-13 * (1.0 + f.max_abs()));
    }

    #[test]
    fn blend_is_lipschitz_and_capped(r1 in 0.0..2.0f64, r2 in 0.0..2.0f64, rho0 in 0.05..1.0f64) {
        let (a, b) = (blend(r1, rho0), blend(r2, rho0));
        prop_assert!(a <= rho0 && a >= 0.0);
        prop_assert!((a - b).abs() <= (4.0 / 3.0) * (r1 - r2).abs() + 1e-15);
    }

    #[test]
    fn uniform_refinement_is_nested(k in 0usize..5) {
        let spec = DomainSpec::builtin(DomainSpec::BUILTIN_IDS[k]).unwrap();
        let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.3, 1.0)).unwrap();
        let fine = mesh.refine_uniform();
        prop_assert!(fine.check().is_ok());
        prop_assert_eq!(fine.num_triangles(), 4 * mesh.num_triangles());
        prop_assert!((fine.total_area() - mesh.total_area()).abs() <= 1e-12 * mesh.total_area());
        prop_assert!((fine.max_boundary_edge() - 0.5 * mesh.max_boundary_edge()).abs() <= 1e-12);
        prop_assert_eq!(&fine.vertices[..mesh.num_vertices()], &mesh.vertices[..]);
    }
}
