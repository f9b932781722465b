//! Per-component trace norms, the corner weight and the weighted smoother.
use corner_waves::domain::DomainSpec;
use corner_waves::mesh::GradingParams;
use corner_waves::traces::{smooth_k_eps, weighted_mass, zero_mass_project, TraceField, TraceNorms, DEFAULT_SCREEN};
use corner_waves::verify::Discretization;

fn main() -> corner_waves::Result<()> {
    let spec = DomainSpec::one_object();
    let d = Discretization::generate(&spec, &GradingParams::for_spec(&spec, 0.1, 3.0))?;
    let grid = d.grid();
    let norms = TraceNorms::new(grid, DEFAULT_SCREEN)?;

    let f = TraceField::from_fn(grid, |x| (3.0 * x).sin() + 0.5);
    for c in norms.report(&f) {
        println!(
            "component {}: |f|_1/2 {:.4}  |f'| {:.4}  average {:+.4}  L2 {:.4}",
            c.component, c.seminorm_half, c.seminorm_one, c.average, c.l2
        );
    }
    println!("global |f|_1/2 {:.4}, |f|_1 {:.4}", norms.half(&f), norms.one(&f));

    let g = zero_mass_project(grid, &f);
    println!("mass before {:+.3e}, after projection {:+.3e}", weighted_mass(grid, &f), weighted_mass(grid, &g));

    let w = d.weight.as_field();
    println!("weight: max {:.3}, Lipschitz {:.3}", w.max_abs(), d.weight.lipschitz(grid));
    for eps in [1e-2, 1e-3, 1e-4] {
        let s = smooth_k_eps(grid, &f, eps, &d.weight)?;
        let mut diff = s.clone();
        diff.axpy(-1.0, &f);
        println!("K_eps, eps {eps:.0e}: |K f - f|_L2 {:.3e}", norms.l2(&diff));
    }
    Ok(())
}
