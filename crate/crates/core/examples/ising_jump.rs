//! First-derivative jump of the Ising battery energy where h0 + h1 = 1.

use qbattery::criticality::{central_derivative, estimate_jump, locate_jump, ParamScan};
use qbattery::kernel::EnergyConvention;
use qbattery::models::ising_energy_with;
use qbattery::quadrature::Parallelism;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h1 = 0.25;
    let (start, step, n) = (0.5005, 1e-3, 500);
    let mut energy = Vec::with_capacity(n);
    for i in 0..n {
        let h0 = start + i as f64 * step;
        energy.push(ising_energy_with(h0, h1, 8192, EnergyConvention::PerMode, Parallelism::Parallel)?.energy);
    }
    let scan = ParamScan::uniform("h0", start, step, energy)?;
    let d1 = central_derivative(&scan, 1)?;
    let at = locate_jump(&d1, 0.5, 1.0)?;
    let report = estimate_jump(&d1, at, 2)?;
    println!("jump at h0 = {at:.4}: {:.5} (h1/2 = {:.5})", report.magnitude().unwrap_or(f64::NAN), h1 / 2.0);
    Ok(())
}
