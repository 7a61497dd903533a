//! Haldane phase diagram from Dirac-mass signs, checked with plaquette Berry flux.

use qbattery::models::haldane::phase;
use qbattery::models::{chern_numeric, chern_sign, critical_t2, haldane_masses, HaldaneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 1.0;
    println!("t2c = m/(3*sqrt 3) = {:.6}", critical_t2(m));
    println!("{:>6} {:>9} {:>9} {:>12} {:>5} {:>8}", "t2", "m_K", "m_K'", "phase", "C", "flux C");
    for t2 in [-0.4, -0.3, -0.15, 0.0, 0.15, 0.3, 0.4] {
        let p = HaldaneParams::new(1.0, t2, m)?;
        let (mk, mkp) = haldane_masses(&p);
        let c = chern_sign(&p)?;
        let numeric = chern_numeric(&p, 60)?;
        println!("{t2:>6.2} {mk:>9.4} {mkp:>9.4} {:>12} {c:>5} {numeric:>8}", format!("{:?}", phase(&p)));
    }
    Ok(())
}
