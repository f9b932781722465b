//! The commutator of the weighted derivative with the Dirichlet–Neumann
//! operator on a sector, for a bump supported near the corner.
use corner_waves::domain::DomainSpec;
use corner_waves::verify::{commutator_levels, COMMUTATOR_GRADING, COMMUTATOR_SUPPORT};

fn main() -> corner_waves::Result<()> {
    let spec = DomainSpec::sector(0.75 * std::f64::consts::PI);
    let levels = [20, 40, 80, 160];
    let residuals = commutator_levels(&spec, &levels, COMMUTATOR_GRADING, COMMUTATOR_SUPPORT)?;
    for (n, r) in levels.iter().zip(&residuals) {
        println!("n {n:4}: relative residual {r:.4}");
    }
    Ok(())
}
