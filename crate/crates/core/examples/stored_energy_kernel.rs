//! Energy stored in a single momentum mode, and summed over a lattice.

use qbattery::kernel::{mode_energy, total_energy, DVector, EnergyConvention};
use qbattery::models::HaldaneParams;
use qbattery::quadrature::Parallelism;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let before = DVector::new(0.4, -0.3, 1.0)?;
    let during = DVector::new(0.4, -0.3, -0.5)?;

    let plateau = mode_energy(&before, &during, None)?.value();
    println!("long-time mode energy: {plateau:.6}");
    for tau in [0.5, 1.0, 2.0, 4.0] {
        let e = mode_energy(&before, &during, Some(tau))?.value();
        println!("  tau = {tau:>3}: {e:.6}  (ratio {:.3})", e / plateau);
    }

    // Same kernel over a Haldane Brillouin zone, quenching t2 from 0.05 to 0.25.
    let pre = HaldaneParams::new(1.0, 0.05, 1.0)?;
    let grid = pre.grid(128)?;
    let tally = total_energy(&pre, &pre.with_t2(0.25), &grid, None, EnergyConvention::PerMode, Parallelism::Parallel)?;
    println!("Haldane per-mode energy on 128x128: {:.8} ({} modes dropped)", tally.energy, tally.dropped_modes);
    Ok(())
}
