//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use latreal::basic1d::BlockFactorProcess1D;

/// Probability of a driver bit string.
fn weight(bits: usize, len: usize, p: f64) -> f64 {
    (0..len)
        .map(|j| if bits >> j & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// `E[X_0]` by brute force over driver windows.
pub fn density(proc: &BlockFactorProcess1D) -> f64 {
    let w = proc.window();
    (0..1usize << w)
        .map(|b| weight(b, w, proc.driver_p()) * proc.response()[b])
        .sum()
}

/// `E[X_0 X_k]`, `k ≥ 1`, by enumerating every driver string of length `w + k`.
pub fn lag(proc: &BlockFactorProcess1D, k: usize) -> f64 {
    assert!(k >= 1);
    let w = proc.window();
    let len = w + k;
    let mask = (1usize << w) - 1;
    let q = proc.response();
    (0..1usize << len)
        .map(|b| weight(b, len, proc.driver_p()) * q[b & mask] * q[(b >> k) & mask])
        .sum()
}

/// Radial target written out directly: `ρ` on-site, `αρ²` at unit vectors, `ρ²` elsewhere.
pub fn pair_target(x: &[i64], rho: f64, alpha: f64) -> f64 {
    let n2: i64 = x.iter().map(|c| c * c).sum();
    match n2 {
        0 => rho,
        1 => alpha * rho * rho,
        _ => rho * rho,
    }
}

/// `Ŝ(k)` as a finite Fourier sum over the support of `ρ(g − 1)`.
pub fn structure_function_fourier(alpha: f64, rho: f64, k: &[f64]) -> f64 {
    // Ŝ(k) = ρ + ρ² Σ_x (g(x) − 1) e^{ik·x}; only x = 0 and x = ±e_j contribute.
    let mut s = rho - rho * rho;
    for &kj in k {
        for sign in [-1.0, 1.0] {
            s += rho * rho * (alpha - 1.0) * (sign * kj).cos();
        }
    }
    s
}
