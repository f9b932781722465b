//! Runs one verification suite and prints its checks. Pass a suite name and
//! a geometry id as arguments, e.g. `dno two-object`.
use corner_waves::verify::{run_suite, SuiteParams};

fn main() -> corner_waves::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().unwrap_or_else(|| "dno".into());
    let geometry = args.next().unwrap_or_else(|| "rectangle".into());
    let params = SuiteParams { samples: 30, ..SuiteParams::default() };
    let report = run_suite(&suite, &geometry, &params, 7)?;
    for c in &report.checks {
        let target = c.target.map(|t| format!("{:?} {t:.1e}", c.relation)).unwrap_or_default();
        println!("{} {:40} {:12.4e} {target}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value);
    }
    println!("{} of {} checks passed", report.checks.len() - report.failures().count(), report.checks.len());
    Ok(())
}
