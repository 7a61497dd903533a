//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qbattery::kernel::DVector;
use rand::Rng;

pub type Mat = [[C; 2]; 2];

pub fn pauli_h(d: &DVector) -> Mat {
    [[C::new(d.d3, 0.0), C::new(d.d1, -d.d2)], [C::new(d.d1, d.d2), C::new(-d.d3, 0.0)]]
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `exp(−i H t)` by scaling and squaring of a truncated Taylor series.
pub fn propagator(h: &Mat, t: f64) -> Mat {
    let norm: f64 = h.iter().flatten().map(|z| z.norm()).sum::<f64>() * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = t / 2f64.powi(squarings as i32);
    let a: Mat = [
        [h[0][0] * C::new(0.0, -scale), h[0][1] * C::new(0.0, -scale)],
        [h[1][0] * C::new(0.0, -scale), h[1][1] * C::new(0.0, -scale)],
    ];
    let mut result = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let mut term = result;
    for n in 1..30 {
        term = mul(&term, &a);
        let inv = 1.0 / n as f64;
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z *= inv;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

/// Lowest eigenvector of a 2×2 Hermitian matrix, solved directly.
pub fn ground_state(h: &Mat) -> [C; 2] {
    let (a, d) = (h[0][0].re, h[1][1].re);
    let b = h[0][1];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let lambda = mean - (half * half + b.norm_sqr()).sqrt();
    // (H − λ) v = 0: pick the better-conditioned row.
    let v = if (a - lambda).abs() + b.norm() >= (d - lambda).abs() + b.norm() && b.norm() > 0.0 {
        [-b, C::new(a - lambda, 0.0)]
    } else if b.norm() > 0.0 {
        [C::new(d - lambda, 0.0), -b.conj()]
    } else if a <= d {
        [C::new(1.0, 0.0), C::new(0.0, 0.0)]
    } else {
        [C::new(0.0, 0.0), C::new(1.0, 0.0)]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn expect(h: &Mat, v: &[C; 2]) -> f64 {
    let hv = [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]];
    (v[0].conj() * hv[0] + v[1].conj() * hv[1]).re
}

/// Energy stored in one mode by the protocol `H_A → H_B (for τ) → H_A`,
/// measured against the ground energy of `H_A`.
pub fn quench_energy(a: &DVector, b: &DVector, tau: f64) -> f64 {
    let ha = pauli_h(a);
    let psi0 = ground_state(&ha);
    let u = propagator(&pauli_h(b), tau);
    let psi = [u[0][0] * psi0[0] + u[0][1] * psi0[1], u[1][0] * psi0[0] + u[1][1] * psi0[1]];
    expect(&ha, &psi) - expect(&ha, &psi0)
}

/// `Σ_{k=1}^d 1/k`.
pub fn harmonic(d: u32) -> f64 {
    (1..=d).map(|k| 1.0 / k as f64).sum()
}

pub fn random_d<R: Rng>(rng: &mut R, scale: f64) -> DVector {
    DVector { d1: rng.gen_range(-scale..scale), d2: rng.gen_range(-scale..scale), d3: rng.gen_range(-scale..scale) }
}

/// `|a × b|²` from the explicit cross product.
pub fn cross_sq(a: &DVector, b: &DVector) -> f64 {
    let c = [a.d2 * b.d3 - a.d3 * b.d2, a.d3 * b.d1 - a.d1 * b.d3, a.d1 * b.d2 - a.d2 * b.d1];
    c.iter().map(|x| x * x).sum()
}
