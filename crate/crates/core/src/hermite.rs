//! Cubic Hermite interpolant of the boundary data and its exact max-norms.

use crate::error::{Error, Result};

/// `u(0) = a`, `u(1) = b`, `u'(0) = c`, `u'(1) = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BoundaryData {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let bd = BoundaryData { a, b, c, d };
        if [a, b, c, d].iter().all(|x| x.is_finite()) {
            Ok(bd)
        } else {
            Err(Error::InvalidArgument(format!(
                "boundary data must be finite: {bd:?}"
            )))
        }
    }
}

/// `c0 + c1 t + c2 t² + c3 t³`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubicPoly {
    pub coeffs: [f64; 4],
}

impl CubicPoly {
    pub fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        CubicPoly {
            coeffs: [c0, c1, c2, c3],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        ((c3 * t + c2) * t + c1) * t + c0
    }

    /// The `order`-th derivative, padded back to four coefficients.
    pub fn derivative(&self, order: usize) -> CubicPoly {
        let mut c = self.coeffs;
        for _ in 0..order.min(4) {
            c = [c[1], 2.0 * c[2], 3.0 * c[3], 0.0];
        }
        CubicPoly { coeffs: c }
    }

    /// `max_{t ∈ [0,1]} |p(t)|`, from the endpoints and the real critical
    /// points in `(0, 1)`.
    pub fn sup_norm(&self) -> f64 {
        let mut best = self.eval(0.0).abs().max(self.eval(1.0).abs());
        for r in self.critical_points() {
            if r > 0.0 && r < 1.0 {
                best = best.max(self.eval(r).abs());
            }
        }
        best
    }

    fn critical_points(&self) -> Vec<f64> {
        // p'(t) = b0 + b1 t + b2 t²
        let [_, c1, c2, c3] = self.coeffs;
        let (b0, b1, b2) = (c1, 2.0 * c2, 3.0 * c3);
        if b2 == 0.0 {
            if b1 == 0.0 {
                return Vec::new();
            }
            return vec![-b0 / b1];
        }
        let disc = b1 * b1 - 4.0 * b2 * b0;
        if disc < 0.0 {
            return Vec::new();
        }
        // cancellation-free form of the quadratic formula
        let q = -0.5 * (b1 + b1.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![0.0];
        }
        vec![q / b2, b0 / q]
    }
}

/// The unique cubic `g` with `g(0) = a`, `g(1) = b`, `g'(0) = c`, `g'(1) = d`.
pub fn hermite_interpolant(bd: &BoundaryData) -> CubicPoly {
    let BoundaryData { a, b, c, d } = *bd;
    CubicPoly::new(a, c, 3.0 * (b - a) - 2.0 * c - d, 2.0 * (a - b) + c + d)
}

/// `[‖g‖, ‖g'‖, ‖g''‖, ‖g'''‖]`.
pub fn derivative_norms(g: &CubicPoly) -> [f64; 4] {
    [0, 1, 2, 3].map(|k| g.derivative(k).sup_norm())
}
