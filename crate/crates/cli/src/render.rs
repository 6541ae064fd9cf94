use std::fmt::Write as _;

use fdbvp::analysis::{ConditionsReport, Verdict};
use fdbvp::exprlang::Var;
use fdbvp::{Problem, Solution};

/// One grid size of a convergence study.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub n: usize,
    pub outcome: Result<RunStats, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    pub k: usize,
    pub converged: bool,
    pub error: Option<f64>,
    pub error1: Option<f64>,
}

impl RunRecord {
    pub fn h2(&self) -> f64 {
        let h = 1.0 / self.n as f64;
        h * h
    }
}

/// Scientific notation with five significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_else(|| "-".into())
}

fn opt_full(x: Option<f64>) -> String {
    x.map(full).unwrap_or_default()
}

pub fn solve_summary(p: &Problem, s: &Solution) -> String {
    let mut out = String::new();
    writeln!(out, "problem    {}", p.name).unwrap();
    writeln!(out, "N          {}", s.grid.n()).unwrap();
    writeln!(out, "K          {}", s.iterations).unwrap();
    writeln!(out, "converged  {}", if s.converged { "yes" } else { "no" }).unwrap();
    writeln!(out, "last diff  {}", sci(s.final_difference())).unwrap();
    writeln!(out, "d          {}", sci(s.d())).unwrap();
    if let Some(e) = s.errors {
        writeln!(out, "Error      {}", sci(e.error)).unwrap();
        writeln!(out, "Error1     {}", sci(e.error1)).unwrap();
    }
    out
}

pub fn solution_csv(s: &Solution) -> String {
    let mut out = String::from("t,U,Y,V,Z\n");
    let f = &s.final_iterate;
    for (i, t) in s.grid.nodes().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            full(t),
            full(f.u[i]),
            full(f.y[i]),
            full(f.v[i]),
            full(f.z[i])
        )
        .unwrap();
    }
    out
}

pub fn convergence_table(records: &[RunRecord], order: Option<f64>, has_exact: bool) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>6}  {:>10}  {:>3}  {:>10}  {:>10}",
        "N", "h^2", "K", "Error", "Error1"
    )
    .unwrap();
    for r in records {
        match &r.outcome {
            Ok(st) => {
                let mark = if st.converged {
                    ""
                } else {
                    "  (not converged)"
                };
                writeln!(
                    out,
                    "{:>6}  {:>10}  {:>3}  {:>10}  {:>10}{mark}",
                    r.n,
                    sci(r.h2()),
                    st.k,
                    opt_sci(st.error),
                    opt_sci(st.error1)
                )
                .unwrap();
            }
            Err(msg) => writeln!(out, "{:>6}  {:>10}  failed: {msg}", r.n, sci(r.h2())).unwrap(),
        }
    }
    match (order, has_exact) {
        (Some(p), _) => writeln!(out, "fitted order of Error: {p:.3}").unwrap(),
        (None, true) => writeln!(out, "fitted order of Error: unavailable").unwrap(),
        (None, false) => writeln!(out, "fitted order of Error: no exact solution").unwrap(),
    }
    out
}

pub fn convergence_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("N,h2,K,converged,Error,Error1\n");
    for r in records {
        if let Ok(st) = &r.outcome {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.n,
                full(r.h2()),
                st.k,
                st.converged,
                opt_full(st.error),
                opt_full(st.error1)
            )
            .unwrap();
        }
    }
    out
}

fn row4(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join("  ")
}

pub fn check_report(p: &Problem, r: &ConditionsReport) -> String {
    let mut out = String::new();
    writeln!(out, "problem        {}", p.name).unwrap();
    writeln!(out, "|g^(i)|        {}", row4(&r.g_norms)).unwrap();
    match (r.m, r.l, r.q) {
        (Some(m), Some(l), Some(q)) => {
            writeln!(out, "M              {m}").unwrap();
            writeln!(out, "L              {}", row4(&l)).unwrap();
            writeln!(out, "q              {q:.6}").unwrap();
            if let Some(rq) = r.reported_q {
                writeln!(out, "quoted q       {rq}").unwrap();
            }
        }
        _ => writeln!(out, "analysis data  none").unwrap(),
    }
    if let Some(b) = r.domain_bounds {
        writeln!(out, "bounds         {}", row4(&b)).unwrap();
    }
    if let Some(bc) = &r.bound_check {
        let active: Vec<&str> = bc.active.iter().map(|v| v.name()).collect();
        writeln!(
            out,
            "max |f|        {:.6} ({})",
            bc.max_abs_f,
            if bc.passed { "within M" } else { "exceeds M" }
        )
        .unwrap();
        let at: Vec<String> = Var::ALL
            .iter()
            .zip(bc.argmax)
            .filter(|(v, _)| bc.active.contains(v))
            .map(|(v, x)| format!("{}={x:.4}", v.name()))
            .collect();
        writeln!(out, "  at           {}", at.join(" ")).unwrap();
        writeln!(
            out,
            "  lattice      {} points per axis over [{}], {} samples",
            bc.density,
            active.join(", "),
            bc.samples
        )
        .unwrap();
        if bc.density != bc.requested_density {
            writeln!(
                out,
                "  note         density reduced from {}",
                bc.requested_density
            )
            .unwrap();
        }
        if bc.undefined_samples > 0 {
            writeln!(out, "  undefined    {} samples", bc.undefined_samples).unwrap();
        }
    }
    if let Some(est) = r.lipschitz_estimate {
        writeln!(out, "L estimate     {} (heuristic)", row4(&est)).unwrap();
    }
    let verdict = match r.verdict {
        Verdict::Satisfied => "satisfied",
        Verdict::Violated => "violated",
        Verdict::Unknown => "unknown",
    };
    writeln!(out, "verdict        {verdict}").unwrap();
    out
}

pub fn list_row(p: &Problem) -> String {
    let analysis = match &p.analysis {
        Some(a) => format!("M={}", a.m),
        None => "none".into(),
    };
    format!(
        "{:<10} exact: {:<3}  analysis: {:<5}  {}",
        p.name,
        if p.exact.is_some() { "yes" } else { "no" },
        analysis,
        p.description
    )
}
