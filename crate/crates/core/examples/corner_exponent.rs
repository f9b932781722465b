//! Gradient growth at a Dirichlet–Neumann corner: the fitted exponent
//! against pi / (2 omega).
use corner_waves::verify::{sector_exponent, CORNER_ANGLES};

fn main() -> corner_waves::Result<()> {
    for omega in CORNER_ANGLES {
        for h0 in [0.05, 0.025] {
            let fit = sector_exponent(omega, h0, 3.0)?;
            println!(
                "omega {:5.1} deg, h0 {h0:5}: nu_hat {:.4}  exact {:.4}  error {:.2}%",
                omega.to_degrees(),
                fit.nu_hat,
                fit.nu_exact,
                100.0 * fit.relative_error()
            );
        }
    }
    Ok(())
}
