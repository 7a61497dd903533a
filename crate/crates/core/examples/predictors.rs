//! Analytic jump heights (odd d) and log coefficients (even d) of a Dirac cone.

use qbattery::criticality::{harmonic_alt, predicted_jump, predicted_log_coefficient};
use qbattery::quadrature::sphere_surface;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = 1.0;
    println!("{:>3} {:>12} {:>14} {:>10}", "d", "S_(d-1)", "singularity", "H_d");
    for d in 1..=8 {
        let singular = if d % 2 == 1 {
            format!("jump {:.5}", predicted_jump(d, delta, delta)?)
        } else {
            format!("log {:.5}", predicted_log_coefficient(d, delta)?)
        };
        println!("{d:>3} {:>12.6} {singular:>14} {:>10.6}", sphere_surface(d), harmonic_alt(d));
    }
    Ok(())
}
