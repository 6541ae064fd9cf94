mod common;

use common::nodal_gap;
use fdbvp::analysis::{contraction_factor, empirical_order};
use fdbvp::kernel::KernelConstants;
use fdbvp::problem::{Rhs, ScalarMap};
use fdbvp::solver::Scheme;
use fdbvp::{builtin, load_config, solve, Grid, SolveOptions};

const NOISE: f64 = 1e-12;

#[test]
fn successive_differences_contract_at_least_as_fast_as_q() {
    for name in ["example1", "example2", "example4"] {
        let p = builtin(name).unwrap();
        let q = contraction_factor(&p.analysis.as_ref().unwrap().l).unwrap();
        for n in [50, 200] {
            let s = solve(
                &p,
                &SolveOptions {
                    n,
                    tol: 1e-16,
                    max_iter: 100,
                },
            )
            .unwrap();
            assert!(s.converged);
            let h = &s.history;
            for k in 1..h.len() {
                if h[k - 1] > NOISE && h[k] > NOISE {
                    assert!(h[k] < h[k - 1], "{name} N={n}: {h:?}");
                    let ratio = h[k] / h[k - 1];
                    assert!(
                        ratio <= q + 0.05,
                        "{name} N={n} k={k}: ratio {ratio} > q={q}"
                    );
                }
            }
        }
    }
}

fn self_convergence_order(name: &str) -> f64 {
    let p = builtin(name).unwrap();
    let ns = [25, 50, 100, 200, 400];
    let sols: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| {
            solve(
                &p,
                &SolveOptions {
                    n,
                    tol: 1e-16,
                    max_iter: 100,
                },
            )
            .unwrap()
            .final_iterate
            .u
        })
        .collect();
    let gaps: Vec<(usize, f64)> = (0..ns.len() - 1)
        .map(|i| (ns[i], nodal_gap(&sols[i], &sols[i + 1])))
        .collect();
    empirical_order(&gaps).unwrap()
}

#[test]
fn refinement_order_of_the_fixed_point() {
    assert!(self_convergence_order("example1") >= 3.5);
    assert!(self_convergence_order("example2") >= 3.5);
    assert!(self_convergence_order("example3") >= 1.9);
}

#[test]
fn constant_load_is_reconstructed_to_second_order() {
    // u = t^4 has u'''' = 24 and Hermite data (0, 1, 0, 4)
    let p = load_config(
        r#"
name = "quartic"
f = "24"
a = 0
b = 1
c = 0
d = 4
exact_u = "t^4"
exact_du = "4*t^3"
"#,
    )
    .unwrap();
    let mut errs = [Vec::new(), Vec::new(), Vec::new()];
    for n in [20, 40, 80, 160] {
        let grid = Grid::new(n).unwrap();
        let scheme = Scheme::new(&p, grid).unwrap();
        let gfs = scheme.sweep(&vec![24.0; n + 1]).unwrap();
        let mut e = [0.0f64; 3];
        for (i, t) in grid.nodes().enumerate() {
            e[0] = e[0].max((gfs.u[i] - t.powi(4)).abs());
            e[1] = e[1].max((gfs.y[i] - 4.0 * t.powi(3)).abs());
            e[2] = e[2].max((gfs.v[i] - 12.0 * t * t).abs());
        }
        for k in 0..3 {
            errs[k].push((n, e[k]));
        }
    }
    // U and Y are exact at the nodes; V carries the quadrature error
    for e in &errs[..2] {
        assert!(e.iter().all(|(_, x)| *x <= 1e-13), "{e:?}");
    }
    let order = empirical_order(&errs[2]).unwrap();
    assert!(order >= 1.9, "order {order}, {:?}", errs[2]);
    let s = solve(&p, &SolveOptions::with_n(40)).unwrap();
    assert_eq!(s.iterations, 1);
}

#[test]
fn identity_delays_make_barred_slots_coincide() {
    let mut p = builtin("example4").unwrap();
    p.delays = std::array::from_fn(|_| ScalarMap::native(|t| t));
    let grid = Grid::new(64).unwrap();
    let scheme = Scheme::new(&p, grid).unwrap();
    let mut psi = fdbvp::solver::init_psi(&p, &grid).unwrap();
    for _ in 0..6 {
        let gfs = scheme.sweep(&psi).unwrap();
        for (a, b) in [
            (&gfs.u, &gfs.ubar),
            (&gfs.y, &gfs.ybar),
            (&gfs.v, &gfs.vbar),
            (&gfs.z, &gfs.zbar),
        ] {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
            }
        }
        psi = scheme.update_psi(&gfs).unwrap();
    }
}

#[test]
fn solves_are_deterministic() {
    let p = builtin("example4").unwrap();
    let opts = SolveOptions::with_n(300);
    let a = solve(&p, &opts).unwrap();
    let b = solve(&p, &opts).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.history, b.history);
    for (x, y) in a.final_iterate.u.iter().zip(&b.final_iterate.u) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn native_and_expression_rhs_give_identical_iterates() {
    let reg = builtin("example2").unwrap();
    let cfg = load_config(
        &std::fs::read_to_string(common::problems_dir().join("example2.toml")).unwrap(),
    )
    .unwrap();
    assert!(matches!(cfg.rhs, Rhs::Expr(_)));
    let opts = SolveOptions::with_n(100);
    let a = solve(&reg, &opts).unwrap();
    let b = solve(&cfg, &opts).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert!(nodal_gap(&a.final_iterate.u, &b.final_iterate.u) <= 1e-14);
}

#[test]
fn error_sits_below_the_iteration_plus_discretization_bound() {
    let p = builtin("example1").unwrap();
    let q = contraction_factor(&p.analysis.as_ref().unwrap().l).unwrap();
    let m0 = KernelConstants::VALUES.m0;
    let iter_part = |s: &fdbvp::Solution| m0 * q.powi(s.iterations as i32) / (1.0 - q) * s.d();
    let coarse = solve(
        &p,
        &SolveOptions {
            n: 50,
            tol: 1e-16,
            max_iter: 100,
        },
    )
    .unwrap();
    let c = (coarse.errors.unwrap().error - iter_part(&coarse)).max(0.0) * 50.0 * 50.0;
    let fine = solve(
        &p,
        &SolveOptions {
            n: 500,
            tol: 1e-16,
            max_iter: 100,
        },
    )
    .unwrap();
    let h = 1.0 / 500.0;
    assert!(fine.errors.unwrap().error <= iter_part(&fine) + c * h * h);
}
