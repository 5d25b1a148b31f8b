//! Shared inputs for the criterion benches.

use ico_battery_core::ModelParams;

/// `ω = 1`, `λ = 0.1` with `n` chargers.
pub fn params(n: usize) -> ModelParams {
    ModelParams::new(n, 1.0, 0.1).expect("valid parameters")
}

/// `points` uniform times on `[0, 4π/(ωλ)]`.
pub fn grid(points: usize) -> Vec<f64> {
    let t_max = 4.0 * std::f64::consts::PI / 0.1;
    (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect()
}
