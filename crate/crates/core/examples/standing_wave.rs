//! A standing wave in the flat rectangle: energy conservation and the period.
use std::f64::consts::PI;

use corner_waves::domain::DomainSpec;
use corner_waves::evolution::{evolve, EvolveConfig, Unforced, WaveState};
use corner_waves::mesh::GradingParams;
use corner_waves::traces::TraceField;
use corner_waves::verify::{standing_mode, standing_period, Discretization};

fn main() -> corner_waves::Result<()> {
    let spec = DomainSpec::rectangle();
    let d = Discretization::generate(&spec, &GradingParams::for_spec(&spec, 0.1, 3.0))?;
    let g = spec.gravity;
    let (lambda, psi) = standing_mode(&d.op)?;
    let period = 2.0 * PI / (g * lambda).sqrt();
    println!("first mode: lambda {lambda:.6}, period {period:.6}");

    let steps = 2000;
    let mut cfg = EvolveConfig::new(period / 200.0, steps);
    cfg.monitor_order = 2;
    let u0 = WaveState::new(TraceField::zeros(d.op.dim()), psi, 0.0);
    let tr = evolve(&d.op, g, &u0, &Unforced(d.op.dim()), &cfg, Some(&d.weight))?;
    println!("energy drift over {steps} steps (10 periods): {:.2e}", tr.max_energy_drift());
    for r in tr.records.iter().step_by(400) {
        println!("  t {:7.3}  energy {:.12}  |u|_X {:.6}", r.t, r.energy, r.x_norm);
    }

    for n in [50, 100, 200] {
        let p = standing_period(&d.op, g, n)?;
        println!("{n:4} steps per period: measured {:.8}, relative error {:.2e}", p.measured, p.relative_error());
    }
    Ok(())
}
