//! Stored energy of a Haldane battery along t2 for several t1, plus charging time.

use qbattery::kernel::EnergyConvention;
use qbattery::models::HaldaneTable;
use qbattery::quadrature::Parallelism;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = HaldaneTable::new(256, 1.0)?;
    let (m, delta) = (1.0, 0.1);
    for t1 in [0.5, 0.8, 1.5, 3.0, 5.0] {
        let mut peak = (0.0, f64::NAN);
        for i in 0..201 {
            let t2 = -0.5 + i as f64 * 0.005;
            let e =
                table.quench_energy(t1, m, t2, delta, None, EnergyConvention::PerMode, Parallelism::Parallel)?.energy;
            if e > peak.0 {
                peak = (e, t2);
            }
        }
        println!("t1 = {t1:>3}: peak energy {:.5} at t2 = {:+.3}", peak.0, peak.1);
    }

    println!("charging time dependence at t1 = 1, t2 = 0:");
    let plateau =
        table.quench_energy(1.0, m, 0.0, delta, None, EnergyConvention::PerMode, Parallelism::Parallel)?.energy;
    for tau in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        let e = table
            .quench_energy(1.0, m, 0.0, delta, Some(tau), EnergyConvention::PerMode, Parallelism::Parallel)?
            .energy;
        println!("  tau = {tau:>4}: {:.4} of the plateau", e / plateau);
    }
    Ok(())
}
