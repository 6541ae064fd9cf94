//! Fixed-point solver for fully fourth-order nonlinear functional boundary
//! value problems
//!
//! ```text
//! u''''(t) = f(t, u(t), u(φ0(t)), u'(t), u'(φ1(t)), u''(t), u''(φ2(t)), u'''(t), u'''(φ3(t)))
//! u(0) = a, u(1) = b, u'(0) = c, u'(1) = d,   t ∈ (0, 1)
//! ```
//!
//! The unknown iterated on is the right-hand side `ψ = u''''`.  Given `ψ`, the
//! solution and its derivatives follow from the Green function of the
//! clamped fourth-order operator plus the cubic Hermite interpolant of the
//! boundary data; `f` evaluated on those gives the next `ψ`.
//!
//! ```
//! use fdbvp::{builtin, solve, SolveOptions};
//!
//! let problem = builtin("example1").unwrap();
//! let sol = solve(&problem, &SolveOptions::with_n(50)).unwrap();
//! assert!(sol.converged);
//! assert!(sol.errors.unwrap().error < 1e-7);
//! ```

pub mod analysis;
pub mod error;
pub mod exprlang;
pub mod hermite;
pub mod kernel;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{builtin, load_config, load_config_file, resolve, Problem, BUILTIN_NAMES};
pub use solver::{solve, Grid, Solution, SolveOptions};
