//! Spectrum of the discrete Dirichlet–Neumann operator. On the flat
//! rectangle the eigenvalues approach k tanh(k h) with k = n pi / L.
use corner_waves::domain::DomainSpec;
use corner_waves::mesh::GradingParams;
use corner_waves::verify::{spectrum_rows, Discretization};

fn main() -> corner_waves::Result<()> {
    let spec = DomainSpec::rectangle();
    for h0 in [0.1, 0.05] {
        let d = Discretization::generate(&spec, &GradingParams::for_spec(&spec, h0, 3.0))?;
        println!("rectangle, h0 = {h0}, {} surface nodes", d.op.dim());
        for row in spectrum_rows(&d.op, &spec, 6)? {
            let exact = row.analytic.unwrap_or(f64::NAN);
            let err = row.rel_error.map(|e| format!("{e:.2e}")).unwrap_or_default();
            println!("  {:2}  {:10.6}  {:10.6}  {err}", row.index, row.lambda, exact);
        }
    }

    // two separate surfaces: still one zero eigenvalue, the constant
    let spec = DomainSpec::two_object();
    let d = Discretization::generate(&spec, &GradingParams::for_spec(&spec, 0.1, 3.0))?;
    let lambdas: Vec<String> = d.op.spectrum(5)?.iter().map(|e| format!("{:.5}", e.lambda)).collect();
    println!("two-object: {}", lambdas.join(", "));
    println!("asymmetry {:.1e}, constant defect {:.1e}", d.op.asymmetry(), d.op.kernel_defect());
    Ok(())
}
