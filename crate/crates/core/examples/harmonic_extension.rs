//! Harmonic extension of surface data and the energy it carries.
use corner_waves::dno;
use corner_waves::domain::DomainSpec;
use corner_waves::elliptic::{assemble, dirichlet_energy, solve_mixed, write_field_csv, DEFAULT_TOL};
use corner_waves::mesh::{generate, GradingParams};

fn main() -> corner_waves::Result<()> {
    let spec = DomainSpec::two_object();
    let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.1, 3.0))?;
    let system = assemble(&mesh);
    let op = dno::build(&system)?;

    let psi = system.trace_from_fn(|x| (2.0 * x).cos() + 0.3 * x);
    let phi = solve_mixed(&system, &psi, DEFAULT_TOL)?;
    let energy = dirichlet_energy(&system, &phi);
    println!("Dirichlet energy of the extension   {energy:.12}");
    println!("<psi, G psi> from the Schur complement {:.12}", op.energy(&psi));

    // the extension is the energy minimizer: any other field with the same trace costs more
    let mut other = phi.clone();
    let on_surface = system.dirichlet_vertices.clone();
    for (v, value) in other.values.iter_mut().enumerate() {
        if !on_surface.contains(&v) {
            *value += 0.05 * (3.0 * mesh.vertices[v][0]).sin();
        }
    }
    println!("perturbed interior energy             {:.12}", dirichlet_energy(&system, &other));

    let path = std::env::temp_dir().join("corner_waves_extension.csv");
    write_field_csv(&mesh, &phi.values, std::fs::File::create(&path)?)?;
    println!("potential written to {}", path.display());
    Ok(())
}
