//! Green function of the clamped fourth-order problem
//!
//! `u'''' = psi` on `[0, 1]` with `u(0) = u(1) = u'(0) = u'(1) = 0` has the
//! solution `u(t) = ∫ G(t, s) psi(s) ds`.  This module evaluates `G` and its
//! first three `t`-derivatives in closed form.  `G`, `G_1` and `G_2` are
//! continuous across the diagonal `s = t`; `G_3` jumps by exactly one there,
//! and [`KernelOrder::G3Star`] replaces the diagonal value with the average of
//! the two one-sided limits so that trapezoidal sums stay second-order.

use crate::error::{Error, Result};

/// How far outside `[0, 1]` an argument may stray before it is rejected.
/// Arguments inside this band are clamped onto the interval.
pub const DOMAIN_EPS: f64 = 1e-12;

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelOrder {
    /// `G` itself.
    G0,
    /// `∂G/∂t`.
    G1,
    /// `∂²G/∂t²`.
    G2,
    /// `∂³G/∂t³`; at `s = t` the left-limit branch `s²(3 − 2s)` is returned.
    G3,
    /// `∂³G/∂t³` with the diagonal set to the mean of the one-sided limits.
    G3Star,
}

impl KernelOrder {
    /// The derivative order, with `G3Star` counted as 3.
    pub fn derivative(self) -> usize {
        match self {
            KernelOrder::G0 => 0,
            KernelOrder::G1 => 1,
            KernelOrder::G2 => 2,
            KernelOrder::G3 | KernelOrder::G3Star => 3,
        }
    }

    /// The kernel used inside trapezoidal sums for derivative order `i`.
    pub fn for_quadrature(i: usize) -> Result<Self> {
        match i {
            0 => Ok(KernelOrder::G0),
            1 => Ok(KernelOrder::G1),
            2 => Ok(KernelOrder::G2),
            3 => Ok(KernelOrder::G3Star),
            _ => Err(Error::InvalidArgument(format!(
                "kernel order must be in 0..=3, got {i}"
            ))),
        }
    }
}

/// Upper bounds `M_i` on `max_t ∫ |G_i(t, s)| ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl KernelConstants {
    pub const VALUES: KernelConstants = KernelConstants {
        m0: 1.0 / 384.0,
        // 1 / (72 sqrt 3), sqrt 3 spelled out for const evaluation
        m1: 1.0 / (72.0 * 1.732_050_807_568_877_2),
        m2: 1.0 / 12.0,
        m3: 0.5,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.m0, self.m1, self.m2, self.m3]
    }
}

/// `M_i` for derivative order `i ∈ {0, 1, 2, 3}`.
pub fn kernel_constant(order: usize) -> Result<f64> {
    KernelConstants::VALUES
        .as_array()
        .get(order)
        .copied()
        .ok_or_else(|| {
            Error::InvalidArgument(format!("kernel order must be in 0..=3, got {order}"))
        })
}

fn check_unit(name: &'static str, x: f64) -> Result<f64> {
    if !(-DOMAIN_EPS..=1.0 + DOMAIN_EPS).contains(&x) {
        return Err(Error::Domain {
            what: name,
            value: x,
        });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Evaluate a kernel at `(t, s)`, rejecting arguments outside `[0, 1]`.
pub fn eval_kernel(order: KernelOrder, t: f64, s: f64) -> Result<f64> {
    let t = check_unit("t", t)?;
    let s = check_unit("s", s)?;
    Ok(kernel(order, t, s))
}

/// Unchecked kernel evaluation for inner loops; callers guarantee
/// `t, s ∈ [0, 1]`.
#[inline]
pub fn kernel(order: KernelOrder, t: f64, s: f64) -> f64 {
    match order {
        KernelOrder::G0 => g0(t, s),
        KernelOrder::G1 => g1(t, s),
        KernelOrder::G2 => g2(t, s),
        KernelOrder::G3 => {
            if s <= t {
                s * s * (3.0 - 2.0 * s)
            } else {
                s * s * (3.0 - 2.0 * s) - 1.0
            }
        }
        KernelOrder::G3Star => {
            if s < t {
                s * s * (3.0 - 2.0 * s)
            } else if s > t {
                s * s * (3.0 - 2.0 * s) - 1.0
            } else {
                t * t * (3.0 - 2.0 * t) - 0.5
            }
        }
    }
}

#[inline]
fn g0(t: f64, s: f64) -> f64 {
    if s <= t {
        let w = 1.0 - t;
        s * s * w * w * (3.0 * t - s - 2.0 * t * s) / 6.0
    } else {
        let w = 1.0 - s;
        t * t * w * w * (3.0 * s - t - 2.0 * t * s) / 6.0
    }
}

#[inline]
fn g1(t: f64, s: f64) -> f64 {
    if s <= t {
        -(s * s * (2.0 * t - 2.0) * (s - 3.0 * t + 2.0 * s * t)) / 6.0
            - (s * s * (2.0 * s - 3.0) * (t - 1.0) * (t - 1.0)) / 6.0
    } else {
        let w = (s - 1.0) * (s - 1.0);
        -(t * t * (2.0 * s + 1.0) * w) / 6.0 - (t * w * (t - 3.0 * s + 2.0 * s * t)) / 3.0
    }
}

#[inline]
fn g2(t: f64, s: f64) -> f64 {
    if s <= t {
        -(s * s * (s - 3.0 * t + 2.0 * s * t)) / 3.0
            - (s * s * (2.0 * s - 3.0) * (2.0 * t - 2.0)) / 3.0
    } else {
        let w = (s - 1.0) * (s - 1.0);
        -(w * (t - 3.0 * s + 2.0 * s * t)) / 3.0 - (2.0 * t * (2.0 * s + 1.0) * w) / 3.0
    }
}

/// Trapezoidal approximation of `∫₀¹ |G_i(t, s)| ds` on `n_quad` uniform
/// panels.  Order 3 always goes through `G3Star`.
pub fn integral_abs_kernel(order: KernelOrder, t: f64, n_quad: usize) -> Result<f64> {
    if n_quad < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_quad must be at least 2, got {n_quad}"
        )));
    }
    let t = check_unit("t", t)?;
    let order = match order {
        KernelOrder::G3 => KernelOrder::G3Star,
        o => o,
    };
    let h = 1.0 / n_quad as f64;
    let mut sum = 0.0;
    for j in 0..=n_quad {
        let s = j as f64 * h;
        let w = if j == 0 || j == n_quad { 0.5 } else { 1.0 };
        sum += w * kernel(order, t, s).abs();
    }
    Ok(sum * h)
}
