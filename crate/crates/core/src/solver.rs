//! Discrete fixed-point iteration on the right-hand side.
//!
//! Each iteration takes the grid values `Ψ_k` of the right-hand side,
//! reconstructs `u, u', u'', u'''` at the nodes and at the delayed points by
//! trapezoidal quadrature against the Green-function kernels, and evaluates
//! `f` on the result to get `Ψ_{k+1}`.  Iteration stops when successive `U`
//! iterates agree to `tol` in the max-norm.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exprlang::EvalError;
use crate::hermite::{hermite_interpolant, CubicPoly};
use crate::kernel::{kernel, KernelOrder};
use crate::problem::{validate_delays, Problem};

/// Uniform grid `t_i = i/N` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs N >= 2, got {n}"
            )));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        // exact endpoints regardless of rounding in i * h
        if i == self.n {
            1.0
        } else {
            i as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.node(i))
    }
}

/// Trapezoidal weights `ρ_j`: `1/2` at the ends, `1` inside.
pub fn quadrature_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    (0..=n)
        .map(|j| if j == 0 || j == n { 0.5 } else { 1.0 })
        .collect()
}

/// `max_i |a_i − b_i|`.
pub fn max_norm_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `Σ_j h ρ_j K(x, t_j) Ψ_j`, with `G3Star` substituted for order 3.
pub fn apply_kernel_row(
    order: KernelOrder,
    x: f64,
    psi: &[f64],
    grid: &Grid,
    weights: &[f64],
) -> f64 {
    let order = match order {
        KernelOrder::G3 => KernelOrder::G3Star,
        o => o,
    };
    let h = grid.h();
    psi.iter()
        .zip(weights)
        .enumerate()
        .map(|(j, (p, w))| h * w * kernel(order, x, grid.node(j)) * p)
        .sum()
}

/// One iteration's worth of grid functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctionSet {
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
    pub ubar: Vec<f64>,
    pub y: Vec<f64>,
    pub ybar: Vec<f64>,
    pub v: Vec<f64>,
    pub vbar: Vec<f64>,
    pub z: Vec<f64>,
    pub zbar: Vec<f64>,
}

const SLOT_NAMES: [&str; 8] = ["U", "Ubar", "Y", "Ybar", "V", "Vbar", "Z", "Zbar"];

impl GridFunctionSet {
    fn from_slots(psi: Vec<f64>, slots: [Vec<f64>; 8]) -> Self {
        let [u, ubar, y, ybar, v, vbar, z, zbar] = slots;
        GridFunctionSet {
            psi,
            u,
            ubar,
            y,
            ybar,
            v,
            vbar,
            z,
            zbar,
        }
    }

    /// The eight state vectors in the argument order of `f`.
    pub fn slots(&self) -> [&[f64]; 8] {
        [
            &self.u, &self.ubar, &self.y, &self.ybar, &self.v, &self.vbar, &self.z, &self.zbar,
        ]
    }

    /// `(u, ū, y, ȳ, v, v̄, z, z̄)` at node `i`.
    pub fn args(&self, i: usize) -> [f64; 8] {
        self.slots().map(|s| s[i])
    }

    fn check_finite(&self, iteration: usize) -> Result<()> {
        for (what, slot) in SLOT_NAMES.iter().zip(self.slots()) {
            if let Some(index) = slot.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    what,
                    iteration,
                    index,
                });
            }
        }
        Ok(())
    }
}

fn slot_order(slot: usize) -> KernelOrder {
    match slot / 2 {
        0 => KernelOrder::G0,
        1 => KernelOrder::G1,
        2 => KernelOrder::G2,
        _ => KernelOrder::G3Star,
    }
}

/// Evaluation points of each slot: the nodes for even slots, `φ_m(t_i)` for
/// the barred ones.
fn evaluation_points(p: &Problem, grid: &Grid) -> Result<[Vec<f64>; 8]> {
    if let Some(v) = validate_delays(p, grid).into_iter().next() {
        return Err(Error::DelayRange {
            m: v.m,
            index: v.index,
            t: v.t,
            value: v.value,
        });
    }
    let nodes: Vec<f64> = grid.nodes().collect();
    let mut out: [Vec<f64>; 8] = Default::default();
    for (slot, pts) in out.iter_mut().enumerate() {
        *pts = if slot % 2 == 0 {
            nodes.clone()
        } else {
            // validate_delays already proved these evaluate into [0, 1]
            let phi = &p.delays[slot / 2];
            nodes
                .iter()
                .map(|&t| phi.eval(t).unwrap_or(f64::NAN))
                .collect()
        };
    }
    Ok(out)
}

/// Reconstruct all eight state vectors from `Ψ` directly, without caching.
pub fn sweep(
    p: &Problem,
    psi: &[f64],
    grid: &Grid,
    weights: &[f64],
    g: &CubicPoly,
) -> Result<GridFunctionSet> {
    if psi.len() != grid.len() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: grid.len(),
        });
    }
    let points = evaluation_points(p, grid)?;
    let slots: [Vec<f64>; 8] = std::array::from_fn(|slot| {
        let order = slot_order(slot);
        let dg = g.derivative(order.derivative());
        points[slot]
            .par_iter()
            .map(|&x| dg.eval(x) + apply_kernel_row(order, x, psi, grid, weights))
            .collect()
    });
    Ok(GridFunctionSet::from_slots(psi.to_vec(), slots))
}

/// `Ψ(t_i) = f(t_i, 0, …, 0)`.
pub fn init_psi(p: &Problem, grid: &Grid) -> Result<Vec<f64>> {
    grid.nodes()
        .enumerate()
        .map(|(index, t)| {
            let args = [0.0; 8];
            p.rhs
                .eval(t, &args)
                .map_err(|source| rhs_error(index, t, args, source))
        })
        .collect()
}

fn rhs_error(index: usize, t: f64, args: [f64; 8], source: EvalError) -> Error {
    Error::RhsEval {
        index,
        t,
        args: Box::new(args),
        source,
    }
}

/// `Ψ_{k+1}(t_i) = f(t_i, U_k(t_i), Ū_k(t_i), …, Z̄_k(t_i))`.
pub fn update_psi(p: &Problem, gfs: &GridFunctionSet, grid: &Grid) -> Result<Vec<f64>> {
    let nodes: Vec<f64> = grid.nodes().collect();
    nodes
        .par_iter()
        .enumerate()
        .map(|(index, &t)| {
            let args = gfs.args(index);
            p.rhs
                .eval(t, &args)
                .map_err(|source| rhs_error(index, t, args, source))
        })
        .collect()
}

/// Weighted kernel matrices for a fixed problem and grid.
///
/// Row `i` of the matrix for a slot holds `h ρ_j K(x_i, t_j)`, so one sweep
/// is eight matrix-vector products.  A barred slot whose delay is the
/// identity on the grid shares the matrix of its unbarred partner.
pub struct Scheme<'p> {
    problem: &'p Problem,
    grid: Grid,
    offsets: [Vec<f64>; 8],
    matrices: Vec<Vec<f64>>,
    slot_matrix: [usize; 8],
}

impl<'p> Scheme<'p> {
    pub fn new(problem: &'p Problem, grid: Grid) -> Result<Self> {
        let points = evaluation_points(problem, &grid)?;
        let g = hermite_interpolant(&problem.boundary);
        let len = grid.len();
        let h = grid.h();
        let nodes: Vec<f64> = grid.nodes().collect();
        let weights = quadrature_weights(&grid);

        let mut matrices = Vec::new();
        let mut slot_matrix = [0usize; 8];
        for slot in 0..8 {
            if slot % 2 == 1 && points[slot] == points[slot - 1] {
                slot_matrix[slot] = slot_matrix[slot - 1];
                continue;
            }
            let order = slot_order(slot);
            let mut m = vec![0.0; len * len];
            m.par_chunks_mut(len)
                .zip(points[slot].par_iter())
                .for_each(|(row, &x)| {
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell = h * weights[j] * kernel(order, x, nodes[j]);
                    }
                });
            slot_matrix[slot] = matrices.len();
            matrices.push(m);
        }
        let offsets = std::array::from_fn(|slot| {
            let dg = g.derivative(slot / 2);
            points[slot].iter().map(|&x| dg.eval(x)).collect()
        });
        Ok(Scheme {
            problem,
            grid,
            offsets,
            matrices,
            slot_matrix,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sweep(&self, psi: &[f64]) -> Result<GridFunctionSet> {
        let len = self.grid.len();
        if psi.len() != len {
            return Err(Error::LengthMismatch {
                left: psi.len(),
                right: len,
            });
        }
        let slots: [Vec<f64>; 8] = std::array::from_fn(|slot| {
            let m = &self.matrices[self.slot_matrix[slot]];
            m.par_chunks(len)
                .zip(self.offsets[slot].par_iter())
                .map(|(row, off)| off + row.iter().zip(psi).map(|(k, p)| k * p).sum::<f64>())
                .collect()
        });
        Ok(GridFunctionSet::from_slots(psi.to_vec(), slots))
    }

    pub fn update_psi(&self, gfs: &GridFunctionSet) -> Result<Vec<f64>> {
        update_psi(self.problem, gfs, &self.grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub n: usize,
    /// Stop once `‖U_k − U_{k−1}‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n: 100,
            tol: 1e-14,
            max_iter: 100,
        }
    }
}

impl SolveOptions {
    pub fn with_n(n: usize) -> Self {
        SolveOptions {
            n,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Max-norm errors of the final iterate against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `‖U_K − u‖`.
    pub error: f64,
    /// `‖Y_K − u'‖`.
    pub error1: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: Grid,
    pub final_iterate: GridFunctionSet,
    /// Number of iterations `K` performed.
    pub iterations: usize,
    /// `history[k − 1] = ‖U_k − U_{k−1}‖` for `k = 1..=K`.
    pub history: Vec<f64>,
    /// `psi_history[k − 1] = ‖Ψ_k − Ψ_{k−1}‖` for `k = 1..=K`.
    pub psi_history: Vec<f64>,
    pub converged: bool,
    pub errors: Option<ErrorNorms>,
}

impl Solution {
    /// `d = ‖Ψ_1 − Ψ_0‖`.
    pub fn d(&self) -> f64 {
        self.psi_history.first().copied().unwrap_or(0.0)
    }

    pub fn final_difference(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_finite_vec(v: &[f64], what: &'static str, iteration: usize) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what,
            iteration,
            index,
        }),
        None => Ok(()),
    }
}

/// Run the fixed-point iteration to convergence or `max_iter`.
pub fn solve(p: &Problem, opts: &SolveOptions) -> Result<Solution> {
    opts.validate()?;
    let grid = Grid::new(opts.n)?;
    let scheme = Scheme::new(p, grid)?;

    let psi = init_psi(p, &grid)?;
    check_finite_vec(&psi, "Psi", 0)?;
    let mut current = scheme.sweep(&psi)?;
    current.check_finite(0)?;

    let mut history = Vec::new();
    let mut psi_history = Vec::new();
    let mut converged = false;
    for k in 1..=opts.max_iter {
        let psi = scheme.update_psi(&current)?;
        check_finite_vec(&psi, "Psi", k)?;
        psi_history.push(max_norm_diff(&psi, &current.psi)?);
        let next = scheme.sweep(&psi)?;
        next.check_finite(k)?;
        let diff = max_norm_diff(&next.u, &current.u)?;
        history.push(diff);
        current = next;
        if diff <= opts.tol {
            converged = true;
            break;
        }
    }

    let errors = match &p.exact {
        Some(ex) => {
            let mut error = 0.0f64;
            let mut error1 = 0.0f64;
            for (i, t) in grid.nodes().enumerate() {
                let u = ex.u().eval(t).map_err(|source| Error::Eval {
                    field: "exact_u".into(),
                    source,
                })?;
                let du = ex.du().eval(t).map_err(|source| Error::Eval {
                    field: "exact_du".into(),
                    source,
                })?;
                error = error.max((current.u[i] - u).abs());
                error1 = error1.max((current.y[i] - du).abs());
            }
            Some(ErrorNorms { error, error1 })
        }
        None => None,
    };

    Ok(Solution {
        grid,
        iterations: history.len(),
        final_iterate: current,
        history,
        psi_history,
        converged,
        errors,
    })
}
