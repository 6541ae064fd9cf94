//! Reference data and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use fdbvp::problem::Problem;

/// One reference run: `(N, K, Error, Error1)`.
pub type Row = (usize, usize, f64, f64);

pub const EXAMPLE1_RUNS: [Row; 9] = [
    (50, 8, 1.4520e-08, 3.8031e-08),
    (100, 8, 9.0870e-10, 2.3801e-09),
    (150, 8, 1.7954e-10, 4.7028e-10),
    (200, 8, 5.6812e-11, 1.4881e-10),
    (300, 9, 1.1223e-11, 2.9396e-11),
    (400, 9, 3.5512e-12, 9.3012e-12),
    (500, 8, 1.4546e-12, 3.8097e-12),
    (800, 9, 2.2204e-13, 5.8115e-13),
    (1000, 9, 9.1038e-14, 2.3798e-13),
];

pub const EXAMPLE2_RUNS: [Row; 9] = [
    (50, 9, 3.0102e-10, 2.2923e-09),
    (100, 9, 1.8814e-11, 1.4328e-10),
    (150, 9, 3.7157e-12, 2.8302e-11),
    (200, 10, 1.1755e-12, 8.9548e-12),
    (300, 10, 2.3226e-13, 1.7686e-12),
    (400, 10, 7.3275e-14, 5.5933e-13),
    (500, 9, 3.0198e-14, 2.2893e-13),
    (800, 9, 4.8850e-15, 3.4639e-14),
    (1000, 9, 2.2204e-15, 1.4211e-14),
];

pub const EXAMPLE3_RUNS: [Row; 9] = [
    (50, 9, 9.2553e-08, 3.0639e-07),
    (100, 9, 2.3182e-08, 7.6420e-08),
    (150, 9, 1.0307e-08, 3.3946e-08),
    (200, 11, 5.7979e-09, 1.9088e-08),
    (300, 9, 2.5771e-09, 8.4831e-09),
    (400, 9, 1.4497e-09, 4.7715e-09),
    (500, 9, 9.2781e-10, 3.0537e-09),
    (800, 8, 3.6243e-10, 1.1928e-09),
    (1000, 8, 2.3196e-10, 7.6339e-10),
];

/// `(N, K)` only; no exact solution is known.
pub const EXAMPLE4_RUNS: [(usize, usize); 9] = [
    (50, 12),
    (100, 13),
    (150, 13),
    (200, 12),
    (300, 13),
    (400, 14),
    (500, 14),
    (800, 13),
    (1000, 13),
];

pub const EXAMPLE5_RUNS: [Row; 9] = [
    (50, 20, 4.3691e-08, 1.3415e-07),
    (100, 21, 1.0868e-08, 3.3749e-08),
    (150, 20, 4.8264e-09, 1.5026e-08),
    (200, 21, 2.7140e-09, 8.4562e-09),
    (300, 22, 1.2059e-09, 3.7597e-09),
    (400, 22, 6.7828e-10, 2.1150e-09),
    (500, 22, 4.3409e-10, 1.3537e-09),
    (800, 22, 1.6956e-10, 5.2882e-10),
    (1000, 22, 1.0852e-10, 3.3845e-10),
];

pub fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value >= reference / factor && value <= reference * factor
}

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

/// `k`-th derivative of the known solution of a built-in, written out by
/// hand independently of the registry closures.
pub fn exact_derivative(name: &str, k: usize, t: f64) -> Option<f64> {
    match name {
        // d^k/dt^k (1+t)^-1 = (-1)^k k! (1+t)^-(k+1)
        "example1" => {
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            Some(sign * fact / (1.0 + t).powi(k as i32 + 1))
        }
        "example2" | "example3" | "example5" => Some(t.exp()),
        _ => None,
    }
}

/// `f(t, U_exact(t)) − u''''(t)` with the barred slots taken at the
/// problem's delays.
pub fn residual(p: &Problem, t: f64) -> Option<f64> {
    let name = p.name.as_str();
    exact_derivative(name, 0, t)?;
    let mut args = [0.0; 8];
    for i in 0..4 {
        let xi = p.delays[i].eval(t).ok()?;
        args[2 * i] = exact_derivative(name, i, t)?;
        args[2 * i + 1] = exact_derivative(name, i, xi)?;
    }
    let f = p.rhs.eval(t, &args).ok()?;
    Some(f - exact_derivative(name, 4, t)?)
}

/// Max over nodes of `|U_coarse(t_i) − U_fine(t_i)|`; `fine` must refine
/// `coarse` by an integer factor.
pub fn nodal_gap(coarse: &[f64], fine: &[f64]) -> f64 {
    let n = coarse.len() - 1;
    let m = fine.len() - 1;
    assert_eq!(m % n, 0, "grids are not nested");
    let step = m / n;
    coarse
        .iter()
        .enumerate()
        .map(|(i, u)| (u - fine[i * step]).abs())
        .fold(0.0, f64::max)
}
