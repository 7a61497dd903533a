//! Dirac-cone energies from the radial quadrature, next to their closed forms.

use qbattery::criticality::{closed_form_1d, closed_form_2d};
use qbattery::quadrature::{RadialIntegrand, RadialShell};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (delta, cutoff) = (2.0, 10.0);
    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "m_A", "1D quad", "1D closed", "2D quad", "2D closed");
    let one = RadialShell::new(1, cutoff, 512)?;
    let two = RadialShell::new(2, cutoff, 512)?;
    for i in 0..9 {
        let m_a = -3.0 + 0.25 * i as f64;
        let m_b = m_a + delta;
        let q1 = one.energy(m_a, m_b, -delta, RadialIntegrand::Simplified)?;
        let q2 = two.energy(m_a, m_b, -delta, RadialIntegrand::Simplified)?;
        let c1 = closed_form_1d(m_a, m_b, cutoff, -delta)?;
        let c2 = closed_form_2d(m_a, m_b, cutoff, -delta)?;
        println!("{m_a:>6.2} {q1:>14.10} {c1:>14.10} {q2:>14.10} {c2:>14.10}");
    }

    let full = one.energy(-1.0, 1.0, -2.0, RadialIntegrand::Full)?;
    let simple = one.energy(-1.0, 1.0, -2.0, RadialIntegrand::Simplified)?;
    println!("full vs simplified integrand at m_A = -1: {full:.6} vs {simple:.6}");
    let pd = two.panel_doubling(-2.0, 1e-3, -2.0, RadialIntegrand::Full)?;
    println!("panel doubling near the gap closing: {:.1e}", pd.relative_change);
    Ok(())
}
