//! Built-in domains, their corners, and validation of a user domain.
use corner_waves::domain::DomainSpec;

fn main() -> corner_waves::Result<()> {
    for id in DomainSpec::BUILTIN_IDS {
        let spec = DomainSpec::builtin(id)?;
        println!("{id}: {} free-surface component(s), length {:.3}", spec.dirichlet_intervals.len(), spec.dirichlet_length());
        for (c, angle) in spec.corner_angles()? {
            println!("    ({:+.3}, {:+.3})  {:6.1} deg  {:?}", c.x, c.z, angle.to_degrees(), c.kind);
        }
    }

    // a pool with a submerged plate touching the surface at both ends
    let text = r#"{
        "dirichlet_intervals": [[-2, -0.4], [0.4, 2]],
        "objects": [{"arc": [[-0.4, 0], [-0.4, -0.2], [0.4, -0.2], [0.4, 0]]}],
        "bottom": [[-2, -1], [2, -1]]
    }"#;
    let spec = DomainSpec::from_json(text)?;
    println!("\nplate domain valid: {}", spec.validate().is_valid());

    let broken = DomainSpec::from_json(r#"{"dirichlet_intervals": [[0, 1], [0.5, 2]], "bottom": [[0, -1], [2, -1]]}"#)?;
    for v in broken.validate().violations {
        println!("rejected: {} at {} ({})", v.rule, v.location, v.detail);
    }
    Ok(())
}
