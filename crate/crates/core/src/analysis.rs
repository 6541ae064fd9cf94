//! Sufficient-condition audit for existence, uniqueness and convergence,
//! a-priori error schedules, and empirical convergence orders.
//!
//! The bound check and the Lipschitz estimate are lattice heuristics: they
//! sample `f` over the envelope domain and report what they saw, including
//! the sample density actually used.  Neither is a proof.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exprlang::Var;
use crate::hermite::{derivative_norms, hermite_interpolant};
use crate::kernel::KernelConstants;
use crate::problem::Problem;

/// Default lattice points per active dimension.
pub const DEFAULT_DENSITY: usize = 33;
/// Upper limit on lattice size for the bound check; the per-dimension
/// density is reduced to stay below it.
pub const MAX_BOUND_SAMPLES: usize = 2_000_000;
/// Upper limit on lattice size for the Lipschitz estimate.
pub const MAX_LIPSCHITZ_SAMPLES: usize = 200_000;

/// `q = (L0+L1) M0 + (L2+L3) M1 + (L4+L5) M2 + (L6+L7) M3`.
pub fn contraction_factor(l: &[f64; 8]) -> Result<f64> {
    if let Some(i) = l.iter().position(|x| x.is_nan() || *x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "L{i} must be nonnegative, got {}",
            l[i]
        )));
    }
    let m = KernelConstants::VALUES.as_array();
    Ok((0..4).map(|i| (l[2 * i] + l[2 * i + 1]) * m[i]).sum())
}

/// `‖g^(i)‖ + M_i M` for `i = 0..3`: the box that contains `u^(i)`.
pub fn domain_envelope(g_norms: [f64; 4], m: f64) -> [f64; 4] {
    let k = KernelConstants::VALUES.as_array();
    std::array::from_fn(|i| g_norms[i] + k[i] * m)
}

/// Outcome of sampling `|f|` over the envelope domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub max_abs_f: f64,
    pub passed: bool,
    /// `(t, u, ū, y, ȳ, v, v̄, z, z̄)` where the maximum was found.
    pub argmax: [f64; 9],
    pub requested_density: usize,
    pub density: usize,
    pub active: Vec<Var>,
    pub samples: usize,
    /// Samples where `f` raised a domain error or returned a non-finite value.
    pub undefined_samples: usize,
    pub first_undefined: Option<[f64; 9]>,
}

fn half_width(var: Var, envelope: &[f64; 4]) -> f64 {
    match var {
        Var::T => 0.5,
        v => envelope[(v.index() - 1) / 2],
    }
}

fn lattice_coordinate(var: Var, envelope: &[f64; 4], k: usize, density: usize) -> f64 {
    let s = k as f64 / (density - 1) as f64;
    match var {
        Var::T => s,
        _ => {
            let r = half_width(var, envelope);
            -r + 2.0 * r * s
        }
    }
}

fn effective_density(requested: usize, dims: usize, cap: usize) -> usize {
    if dims == 0 {
        return requested;
    }
    let mut d = requested;
    while d > 2 && (d as f64).powi(dims as i32) > cap as f64 {
        d -= 1;
    }
    d
}

struct Lattice {
    active: Vec<Var>,
    density: usize,
    samples: usize,
}

impl Lattice {
    fn new(p: &Problem, requested: usize, cap: usize) -> Self {
        let active: Vec<Var> = p.rhs.variables().into_iter().collect();
        let density = effective_density(requested, active.len(), cap);
        let samples = density.pow(active.len() as u32);
        Lattice {
            active,
            density,
            samples,
        }
    }

    fn point(&self, mut index: usize, envelope: &[f64; 4]) -> [f64; 9] {
        let mut x = [0.0; 9];
        for var in &self.active {
            let k = index % self.density;
            index /= self.density;
            x[var.index()] = lattice_coordinate(*var, envelope, k, self.density);
        }
        x
    }
}

fn eval_at(p: &Problem, x: &[f64; 9]) -> Option<f64> {
    let args: [f64; 8] = std::array::from_fn(|i| x[i + 1]);
    p.rhs.eval(x[0], &args).ok().filter(|v| v.is_finite())
}

/// Sample `|f|` on a product lattice over `t ∈ [0, 1]` and each active state
/// variable over `±` its envelope bound, and compare the maximum to `m`.
pub fn sampled_bound_check(
    p: &Problem,
    envelope: &[f64; 4],
    m: f64,
    density: usize,
) -> Result<BoundCheck> {
    if density < 2 {
        return Err(Error::InvalidArgument(format!(
            "density must be at least 2, got {density}"
        )));
    }
    let lattice = Lattice::new(p, density, MAX_BOUND_SAMPLES);

    #[derive(Clone, Copy)]
    struct Acc {
        max: f64,
        argmax: [f64; 9],
        undefined: usize,
        first_undefined: Option<(usize, [f64; 9])>,
    }
    let empty = Acc {
        max: f64::NEG_INFINITY,
        argmax: [0.0; 9],
        undefined: 0,
        first_undefined: None,
    };
    let acc = (0..lattice.samples)
        .into_par_iter()
        .fold(
            || empty,
            |mut acc, idx| {
                let x = lattice.point(idx, envelope);
                match eval_at(p, &x) {
                    Some(v) if v.abs() > acc.max => {
                        acc.max = v.abs();
                        acc.argmax = x;
                    }
                    Some(_) => {}
                    None => {
                        acc.undefined += 1;
                        if acc.first_undefined.is_none() {
                            acc.first_undefined = Some((idx, x));
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || empty,
            |a, b| {
                let (max, argmax) = if b.max > a.max {
                    (b.max, b.argmax)
                } else {
                    (a.max, a.argmax)
                };
                let first_undefined = match (a.first_undefined, b.first_undefined) {
                    (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
                    (x, y) => x.or(y),
                };
                Acc {
                    max,
                    argmax,
                    undefined: a.undefined + b.undefined,
                    first_undefined,
                }
            },
        );

    let max_abs_f = if acc.max.is_finite() {
        acc.max
    } else {
        f64::NAN
    };
    Ok(BoundCheck {
        max_abs_f,
        passed: max_abs_f <= m,
        argmax: acc.argmax,
        requested_density: density,
        density: lattice.density,
        active: lattice.active,
        samples: lattice.samples,
        undefined_samples: acc.undefined,
        first_undefined: acc.first_undefined.map(|(_, x)| x),
    })
}

/// Heuristic Lipschitz coefficients: the largest central-difference partial
/// derivative magnitude seen on a lattice over the envelope domain.
pub fn estimate_lipschitz(p: &Problem, envelope: &[f64; 4], density: usize) -> Result<[f64; 8]> {
    if density < 2 {
        return Err(Error::InvalidArgument(format!(
            "density must be at least 2, got {density}"
        )));
    }
    let lattice = Lattice::new(p, density, MAX_LIPSCHITZ_SAMPLES);
    let state: Vec<Var> = lattice
        .active
        .iter()
        .copied()
        .filter(|v| *v != Var::T)
        .collect();
    let out = (0..lattice.samples)
        .into_par_iter()
        .fold(
            || [0.0f64; 8],
            |mut acc, idx| {
                let x = lattice.point(idx, envelope);
                for var in &state {
                    let i = var.index();
                    let step = 1e-6 * half_width(*var, envelope).max(1.0);
                    let mut lo = x;
                    let mut hi = x;
                    lo[i] -= step;
                    hi[i] += step;
                    if let (Some(a), Some(b)) = (eval_at(p, &lo), eval_at(p, &hi)) {
                        acc[i - 1] = acc[i - 1].max(((b - a) / (2.0 * step)).abs());
                    }
                }
                acc
            },
        )
        .reduce(|| [0.0; 8], |a, b| std::array::from_fn(|i| a[i].max(b[i])));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    /// No bound or Lipschitz data supplied.
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionsReport {
    pub g_norms: [f64; 4],
    pub m: Option<f64>,
    pub l: Option<[f64; 8]>,
    /// Recomputed contraction factor.
    pub q: Option<f64>,
    /// Contraction factor quoted with the problem, if any.
    pub reported_q: Option<f64>,
    /// `‖g^(i)‖ + M_i M`.
    pub domain_bounds: Option<[f64; 4]>,
    pub bound_check: Option<BoundCheck>,
    /// Heuristic, non-rigorous.
    pub lipschitz_estimate: Option<[f64; 8]>,
    pub verdict: Verdict,
}

/// Audit the sufficient conditions for `p` with the supplied `M` and `L`.
pub fn check_conditions(p: &Problem, density: usize) -> Result<ConditionsReport> {
    let g_norms = derivative_norms(&hermite_interpolant(&p.boundary));
    let Some(data) = &p.analysis else {
        return Ok(ConditionsReport {
            g_norms,
            m: None,
            l: None,
            q: None,
            reported_q: None,
            domain_bounds: None,
            bound_check: None,
            lipschitz_estimate: None,
            verdict: Verdict::Unknown,
        });
    };
    let q = contraction_factor(&data.l)?;
    let envelope = domain_envelope(g_norms, data.m);
    let bound_check = sampled_bound_check(p, &envelope, data.m, density)?;
    let lipschitz_estimate = estimate_lipschitz(p, &envelope, density)?;
    let verdict = if q < 1.0 && bound_check.passed {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(ConditionsReport {
        g_norms,
        m: Some(data.m),
        l: Some(data.l),
        q: Some(q),
        reported_q: data.reported_q,
        domain_bounds: Some(envelope),
        bound_check: Some(bound_check),
        lipschitz_estimate: Some(lipschitz_estimate),
        verdict,
    })
}

/// `p_k = q^k / (1 − q)` and the per-derivative bounds `M_i p_k d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriSchedule {
    pub q: f64,
    pub d: f64,
    /// `p[k − 1] = p_k` for `k = 1..=K`.
    pub p: Vec<f64>,
    /// `bounds[k − 1][i] = M_i p_k d`.
    pub bounds: Vec<[f64; 4]>,
}

impl AprioriSchedule {
    /// `M_i p_k d`, for `k ≥ 1`.
    pub fn bound(&self, i: usize, k: usize) -> Option<f64> {
        self.bounds
            .get(k.checked_sub(1)?)
            .and_then(|b| b.get(i))
            .copied()
    }
}

pub fn apriori_schedule(q: f64, d: f64, k: usize) -> Result<AprioriSchedule> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "q must lie in [0, 1), got {q}"
        )));
    }
    if d.is_nan() || d < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "d must be nonnegative, got {d}"
        )));
    }
    let m = KernelConstants::VALUES.as_array();
    let p: Vec<f64> = (1..=k).map(|k| q.powi(k as i32) / (1.0 - q)).collect();
    let bounds = p.iter().map(|pk| m.map(|mi| mi * pk * d)).collect();
    Ok(AprioriSchedule { q, d, p, bounds })
}

/// Least-squares slope of `ln(error)` against `ln(h)`, `h = 1/N`.
pub fn empirical_order(errors: &[(usize, f64)]) -> Result<f64> {
    let mut ns: Vec<usize> = errors.iter().map(|(n, _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two distinct grid sizes".into(),
        ));
    }
    if let Some((n, e)) = errors
        .iter()
        .find(|(n, e)| *n == 0 || !(*e > 0.0 && e.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "unusable error {e} at N = {n}"
        )));
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .map(|(n, e)| ((1.0 / *n as f64).ln(), e.ln()))
        .collect();
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::BoundaryData;
    use crate::problem::{builtin, Rhs, ScalarMap};
    use proptest::prelude::*;

    #[test]
    fn worked_contraction_factors() {
        let q1 = contraction_factor(&[6.0, 2.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((q1 - 0.021875).abs() < 1e-15);
        let q2 = contraction_factor(&[7.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((q2 - 0.03125).abs() < 1e-15);
        let q4 = contraction_factor(&[1.48, 1.62, 3.7, 3.7, 0.41, 0.41, 0.25, 0.25]).unwrap();
        // hand evaluation: 3.1/384 + 7.4/(72√3) + 0.82/12 + 0.5/2
        let hand = 3.1 / 384.0 + 7.4 / (72.0 * 3f64.sqrt()) + 0.82 / 12.0 + 0.25;
        assert!((q4 - hand).abs() < 1e-15);
        assert!((q4 - 0.3857).abs() < 5e-4);
        assert!(contraction_factor(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn envelopes() {
        let env = domain_envelope([1.0, 1.0, 1.5, 1.5], 25.0);
        assert!((env[0] - (1.0 + 25.0 / 384.0)).abs() < 1e-15);
        assert_eq!(
            domain_envelope([1.0, 2.0, 3.0, 4.0], 0.0),
            [1.0, 2.0, 3.0, 4.0]
        );
        let env = domain_envelope([19.0 / 6.0, 3.5, 3.0, 1.0], 23.0);
        assert!((env[0] - (19.0 / 6.0 + 23.0 / 384.0)).abs() < 1e-15);
    }

    #[test]
    fn bound_checks() {
        let p = builtin("example1").unwrap();
        let env = domain_envelope([1.0, 1.0, 1.5, 1.5], 25.0);
        let bc = sampled_bound_check(&p, &env, 25.0, DEFAULT_DENSITY).unwrap();
        assert!(bc.passed, "{bc:?}");
        assert_eq!(bc.density, DEFAULT_DENSITY);
        assert_eq!(bc.samples, DEFAULT_DENSITY.pow(3));

        let p5 = builtin("example5").unwrap();
        let g = derivative_norms(&hermite_interpolant(&p5.boundary));
        let bc =
            sampled_bound_check(&p5, &domain_envelope(g, 20.0), 20.0, DEFAULT_DENSITY).unwrap();
        assert!(!bc.passed && bc.max_abs_f > 20.0);
        assert_eq!(bc.active, vec![Var::VBar]);

        let zero = crate::problem::Problem {
            name: "zero".into(),
            description: String::new(),
            rhs: Rhs::native(&[], |_, _| 0.0),
            delays: std::array::from_fn(|_| ScalarMap::identity()),
            boundary: BoundaryData::new(0.0, 0.0, 0.0, 0.0).unwrap(),
            exact: None,
            analysis: None,
        };
        let bc = sampled_bound_check(&zero, &[1.0; 4], 1.0, 5).unwrap();
        assert!(bc.passed);
        assert_eq!(bc.max_abs_f, 0.0);
        assert!(sampled_bound_check(&zero, &[1.0; 4], 1.0, 1).is_err());
    }

    #[test]
    fn high_dimensional_lattice_is_capped() {
        let p = builtin("example4").unwrap();
        let r = check_conditions(&p, DEFAULT_DENSITY).unwrap();
        let bc = r.bound_check.unwrap();
        assert_eq!(bc.active.len(), 9);
        assert!(bc.samples <= MAX_BOUND_SAMPLES);
        assert!(bc.density >= 2 && bc.density < DEFAULT_DENSITY);
        assert_eq!(r.verdict, Verdict::Satisfied);
    }

    #[test]
    fn undefined_samples_are_counted() {
        // u^(3/2) has no real value for u < 0
        let r = check_conditions(&builtin("example2").unwrap(), 9).unwrap();
        let bc = r.bound_check.unwrap();
        assert!(bc.undefined_samples > 0);
        assert!(bc.first_undefined.unwrap()[1] < 0.0);
        assert!(bc.passed);
    }

    #[test]
    fn lipschitz_estimate_is_below_stated_coefficients() {
        let r = check_conditions(&builtin("example1").unwrap(), 17).unwrap();
        let est = r.lipschitz_estimate.unwrap();
        assert!(est[0] <= 6.0 && est[0] > 5.0, "{est:?}");
        assert!(est[1] <= 2.4 && est[1] > 2.0, "{est:?}");
        assert!(est[2..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            check_conditions(&builtin("example1").unwrap(), 17)
                .unwrap()
                .verdict,
            Verdict::Satisfied
        );
        assert_eq!(
            check_conditions(&builtin("example5").unwrap(), 17)
                .unwrap()
                .verdict,
            Verdict::Violated
        );
        assert_eq!(
            check_conditions(&builtin("example6").unwrap(), 17)
                .unwrap()
                .verdict,
            Verdict::Unknown
        );
    }

    #[test]
    fn schedules() {
        let s = apriori_schedule(0.0, 3.0, 4).unwrap();
        assert!(s.p.iter().all(|p| *p == 0.0));
        let s = apriori_schedule(0.5, 1.0, 3).unwrap();
        assert_eq!(s.p[2], 0.25);
        assert_eq!(s.bound(0, 3).unwrap(), 0.25 / 384.0);
        assert!(s.bound(0, 0).is_none());
        assert!(apriori_schedule(1.0, 1.0, 3).is_err());
        assert!(apriori_schedule(0.5, -1.0, 3).is_err());
    }

    #[test]
    fn orders() {
        let exact: Vec<(usize, f64)> = [10, 20, 40, 80]
            .iter()
            .map(|&n| (n, 1.0 / (n * n) as f64))
            .collect();
        assert!((empirical_order(&exact).unwrap() - 2.0).abs() < 1e-12);
        let example1_runs = [
            (50, 1.4520e-08),
            (100, 9.0870e-10),
            (150, 1.7954e-10),
            (200, 5.6812e-11),
            (300, 1.1223e-11),
            (400, 3.5512e-12),
            (500, 1.4546e-12),
            (800, 2.2204e-13),
            (1000, 9.1038e-14),
        ];
        assert!((empirical_order(&example1_runs).unwrap() - 4.0).abs() < 0.3);
        let example3_runs = [
            (50, 9.2553e-08),
            (100, 2.3182e-08),
            (150, 1.0307e-08),
            (200, 5.7979e-09),
            (300, 2.5771e-09),
            (400, 1.4497e-09),
            (500, 9.2781e-10),
            (800, 3.6243e-10),
            (1000, 2.3196e-10),
        ];
        assert!((empirical_order(&example3_runs).unwrap() - 2.0).abs() < 0.2);
        assert!(empirical_order(&[(10, 1.0)]).is_err());
        assert!(empirical_order(&[(10, 1.0), (10, 2.0)]).is_err());
        assert!(empirical_order(&[(10, 1.0), (20, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn q_is_linear(l in proptest::array::uniform8(0.0..10.0f64), alpha in 0.0..5.0f64) {
            let scaled = l.map(|x| alpha * x);
            let a = contraction_factor(&scaled).unwrap();
            let b = alpha * contraction_factor(&l).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }

        #[test]
        fn enlarging_l_never_lowers_q(l in proptest::array::uniform8(0.0..10.0f64), i in 0usize..8, bump in 0.0..10.0f64) {
            let mut bigger = l;
            bigger[i] += bump;
            prop_assert!(contraction_factor(&bigger).unwrap() >= contraction_factor(&l).unwrap());
        }

        #[test]
        fn p_k_strictly_decreasing(q in 0.001..0.999f64, d in 0.0..10.0f64) {
            let s = apriori_schedule(q, d, 30).unwrap();
            for w in s.p.windows(2) {
                prop_assert!(w[1] < w[0]);
            }
        }
    }
}
