//! Problem data: right-hand side, delay maps, boundary data, optional exact
//! solution and sufficient-condition constants, plus the config-file loader
//! and the registry of built-in examples.

use std::collections::BTreeSet;
use std::f64::consts::E;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exprlang::{self, EvalContext, EvalError, Expr, Var};
use crate::hermite::BoundaryData;
use crate::solver::Grid;

pub type NativeRhs = Arc<dyn Fn(f64, &[f64; 8]) -> f64 + Send + Sync>;
pub type NativeMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f(t, u, ū, y, ȳ, v, v̄, z, z̄)`.
#[derive(Clone)]
pub enum Rhs {
    Expr(Expr),
    /// A compiled closure together with the variables it actually reads.
    Native {
        func: NativeRhs,
        depends_on: BTreeSet<Var>,
    },
}

impl Rhs {
    pub fn native(
        depends_on: &[Var],
        func: impl Fn(f64, &[f64; 8]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Rhs::Native {
            func: Arc::new(func),
            depends_on: depends_on.iter().copied().collect(),
        }
    }

    /// `args` holds `(u, ū, y, ȳ, v, v̄, z, z̄)`.
    pub fn eval(&self, t: f64, args: &[f64; 8]) -> std::result::Result<f64, EvalError> {
        match self {
            Rhs::Expr(e) => e.evaluate(&EvalContext::full(t, args)),
            Rhs::Native { func, .. } => Ok(func(t, args)),
        }
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        match self {
            Rhs::Expr(e) => e.free_variables(),
            Rhs::Native { depends_on, .. } => depends_on.clone(),
        }
    }
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Expr(e) => write!(f, "Rhs({e})"),
            Rhs::Native { depends_on, .. } => write!(f, "Rhs(<native> of {depends_on:?})"),
        }
    }
}

/// A real function of `t` alone.
#[derive(Clone)]
pub enum ScalarMap {
    Expr(Expr),
    Native(NativeMap),
}

impl ScalarMap {
    pub fn identity() -> Self {
        ScalarMap::Expr(Expr::Var(Var::T))
    }

    pub fn native(func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarMap::Native(Arc::new(func))
    }

    pub fn eval(&self, t: f64) -> std::result::Result<f64, EvalError> {
        match self {
            ScalarMap::Expr(e) => e.evaluate(&EvalContext::time(t)),
            ScalarMap::Native(func) => Ok(func(t)),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ScalarMap::Expr(Expr::Var(Var::T)))
    }
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMap::Expr(e) => write!(f, "{e}"),
            ScalarMap::Native(_) => f.write_str("<native>"),
        }
    }
}

/// Closed-form solution: `u`, `u'` and, for manufactured-solution checks,
/// optionally `u''`, `u'''`, `u''''`.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    derivs: Vec<ScalarMap>,
}

impl ExactSolution {
    pub fn new(u: ScalarMap, du: ScalarMap) -> Self {
        ExactSolution {
            derivs: vec![u, du],
        }
    }

    pub fn with_all_derivatives(derivs: [ScalarMap; 5]) -> Self {
        ExactSolution {
            derivs: derivs.into(),
        }
    }

    /// The `k`-th derivative, when known.
    pub fn derivative(&self, k: usize) -> Option<&ScalarMap> {
        self.derivs.get(k)
    }

    pub fn u(&self) -> &ScalarMap {
        &self.derivs[0]
    }

    pub fn du(&self) -> &ScalarMap {
        &self.derivs[1]
    }
}

/// Bound `M` on `|f|` over the envelope domain and Lipschitz coefficients
/// `L_0..L_7` in the eight state arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisData {
    pub m: f64,
    pub l: [f64; 8],
    /// Contraction factor as printed alongside the example, when it differs
    /// in rounding or otherwise from the recomputed value.
    pub reported_q: Option<f64>,
}

impl AnalysisData {
    pub fn new(m: f64, l: [f64; 8]) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Validation(format!("M must be positive, got {m}")));
        }
        if let Some(bad) = l.iter().position(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Validation(format!(
                "L{bad} must be nonnegative, got {}",
                l[bad]
            )));
        }
        Ok(AnalysisData {
            m,
            l,
            reported_q: None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub description: String,
    pub rhs: Rhs,
    /// `φ_0..φ_3`, the arguments of `u, u', u'', u'''` in the barred slots.
    pub delays: [ScalarMap; 4],
    pub boundary: BoundaryData,
    pub exact: Option<ExactSolution>,
    pub analysis: Option<AnalysisData>,
}

/// A delay that leaves `[0, 1]` (or fails to evaluate) at a grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayViolation {
    pub m: usize,
    pub index: usize,
    pub t: f64,
    pub value: f64,
}

/// Every `(m, i)` with `φ_m(t_i) ∉ [0, 1]`.
pub fn validate_delays(p: &Problem, grid: &Grid) -> Vec<DelayViolation> {
    let mut out = Vec::new();
    for (m, phi) in p.delays.iter().enumerate() {
        for (index, t) in grid.nodes().enumerate() {
            let value = phi.eval(t).unwrap_or(f64::NAN);
            if !(0.0..=1.0).contains(&value) {
                out.push(DelayViolation { m, index, t, value });
            }
        }
    }
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Expr(String),
}

fn default_delay() -> String {
    "t".to_string()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    f: String,
    #[serde(default = "default_delay")]
    phi0: String,
    #[serde(default = "default_delay")]
    phi1: String,
    #[serde(default = "default_delay")]
    phi2: String,
    #[serde(default = "default_delay")]
    phi3: String,
    a: Scalar,
    b: Scalar,
    c: Scalar,
    d: Scalar,
    exact_u: Option<String>,
    exact_du: Option<String>,
    #[serde(rename = "M")]
    m: Option<Scalar>,
    #[serde(rename = "L0")]
    l0: Option<Scalar>,
    #[serde(rename = "L1")]
    l1: Option<Scalar>,
    #[serde(rename = "L2")]
    l2: Option<Scalar>,
    #[serde(rename = "L3")]
    l3: Option<Scalar>,
    #[serde(rename = "L4")]
    l4: Option<Scalar>,
    #[serde(rename = "L5")]
    l5: Option<Scalar>,
    #[serde(rename = "L6")]
    l6: Option<Scalar>,
    #[serde(rename = "L7")]
    l7: Option<Scalar>,
}

fn parse_field(field: &str, src: &str) -> Result<Expr> {
    exprlang::parse(src).map_err(|source| Error::Parse {
        field: field.to_string(),
        source,
    })
}

fn time_expr(field: &str, src: &str) -> Result<Expr> {
    let e = parse_field(field, src)?;
    let extra: Vec<_> = e
        .free_variables()
        .into_iter()
        .filter(|v| *v != Var::T)
        .collect();
    if !extra.is_empty() {
        return Err(Error::Validation(format!(
            "`{field}` may depend on t only, found {}",
            extra
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(e)
}

fn scalar(field: &str, s: &Scalar) -> Result<f64> {
    let value = match s {
        Scalar::Num(x) => *x,
        Scalar::Expr(src) => {
            let e = parse_field(field, src)?;
            if !e.free_variables().is_empty() {
                return Err(Error::Validation(format!(
                    "`{field}` must be a constant expression"
                )));
            }
            e.evaluate(&EvalContext::new())
                .map_err(|source| Error::Eval {
                    field: field.to_string(),
                    source,
                })?
        }
    };
    if !value.is_finite() {
        return Err(Error::Validation(format!("`{field}` is not finite")));
    }
    Ok(value)
}

const EXACT_BOUNDARY_TOL: f64 = 1e-10;

/// Parse and validate a problem description in TOML.
pub fn load_config(text: &str) -> Result<Problem> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;

    let rhs = Rhs::Expr(parse_field("f", &raw.f)?);
    let delays = [
        ScalarMap::Expr(time_expr("phi0", &raw.phi0)?),
        ScalarMap::Expr(time_expr("phi1", &raw.phi1)?),
        ScalarMap::Expr(time_expr("phi2", &raw.phi2)?),
        ScalarMap::Expr(time_expr("phi3", &raw.phi3)?),
    ];
    let boundary = BoundaryData::new(
        scalar("a", &raw.a)?,
        scalar("b", &raw.b)?,
        scalar("c", &raw.c)?,
        scalar("d", &raw.d)?,
    )?;

    let exact = match (&raw.exact_u, &raw.exact_du) {
        (None, None) => None,
        (Some(u), Some(du)) => Some(ExactSolution::new(
            ScalarMap::Expr(time_expr("exact_u", u)?),
            ScalarMap::Expr(time_expr("exact_du", du)?),
        )),
        (Some(_), None) => return Err(Error::Schema("`exact_u` given without `exact_du`".into())),
        (None, Some(_)) => return Err(Error::Schema("`exact_du` given without `exact_u`".into())),
    };
    if let Some(ex) = &exact {
        check_exact_boundary(ex, &boundary)?;
    }

    let ls = [
        ("L0", &raw.l0),
        ("L1", &raw.l1),
        ("L2", &raw.l2),
        ("L3", &raw.l3),
        ("L4", &raw.l4),
        ("L5", &raw.l5),
        ("L6", &raw.l6),
        ("L7", &raw.l7),
    ];
    let analysis = match &raw.m {
        Some(m) => {
            let mut l = [0.0; 8];
            for (slot, (field, value)) in l.iter_mut().zip(ls) {
                if let Some(v) = value {
                    *slot = scalar(field, v)?;
                }
            }
            Some(AnalysisData::new(scalar("M", m)?, l)?)
        }
        None => {
            if let Some((field, _)) = ls.iter().find(|(_, v)| v.is_some()) {
                return Err(Error::Schema(format!("`{field}` given without `M`")));
            }
            None
        }
    };

    Ok(Problem {
        name: raw.name,
        description: String::new(),
        rhs,
        delays,
        boundary,
        exact,
        analysis,
    })
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

fn check_exact_boundary(ex: &ExactSolution, bd: &BoundaryData) -> Result<()> {
    let checks = [
        ("exact_u(0)", ex.u(), 0.0, bd.a),
        ("exact_u(1)", ex.u(), 1.0, bd.b),
        ("exact_du(0)", ex.du(), 0.0, bd.c),
        ("exact_du(1)", ex.du(), 1.0, bd.d),
    ];
    for (label, map, t, want) in checks {
        let got = map.eval(t).map_err(|source| Error::Eval {
            field: label.to_string(),
            source,
        })?;
        let gap = (got - want).abs();
        if gap.is_nan() || gap > EXACT_BOUNDARY_TOL {
            return Err(Error::Validation(format!(
                "{label} = {got} disagrees with boundary value {want}"
            )));
        }
    }
    Ok(())
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "example1", "example2", "example3", "example4", "example5", "example6",
];

fn exp_solution() -> ExactSolution {
    ExactSolution::with_all_derivatives(std::array::from_fn(|_| ScalarMap::native(f64::exp)))
}

fn delays(maps: [Option<ScalarMap>; 4]) -> [ScalarMap; 4] {
    maps.map(|m| m.unwrap_or_else(ScalarMap::identity))
}

/// One of the six built-in problems.
pub fn builtin(name: &str) -> Result<Problem> {
    use Var::*;
    let half = || Some(ScalarMap::native(|t| t / 2.0));
    let p = match name {
        "example1" => Problem {
            name: name.into(),
            description: "u'''' = 22/(t+1)^5 + (u^2+u^3) u(t/2)/(t+1)^2, exact u = 1/(t+1)".into(),
            rhs: Rhs::native(&[T, U, UBar], |t, x| {
                let (u, ub) = (x[0], x[1]);
                22.0 / (t + 1.0).powi(5) + (u * u + u * u * u) * ub / (t + 1.0).powi(2)
            }),
            delays: delays([half(), None, None, None]),
            boundary: BoundaryData::new(1.0, 0.5, -1.0, -0.25)?,
            exact: Some(ExactSolution::with_all_derivatives([
                ScalarMap::native(|t| 1.0 / (t + 1.0)),
                ScalarMap::native(|t| -1.0 / (t + 1.0).powi(2)),
                ScalarMap::native(|t| 2.0 / (t + 1.0).powi(3)),
                ScalarMap::native(|t| -6.0 / (t + 1.0).powi(4)),
                ScalarMap::native(|t| 24.0 / (t + 1.0).powi(5)),
            ])),
            analysis: Some(AnalysisData {
                m: 25.0,
                l: [6.0, 2.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                reported_q: Some(0.0219),
            }),
        },
        "example2" => Problem {
            name: name.into(),
            description: "u'''' = e^-t u^(3/2) u(t/2), exact u = e^t".into(),
            rhs: Rhs::native(&[T, U, UBar], |t, x| (-t).exp() * x[0].powf(1.5) * x[1]),
            delays: delays([half(), None, None, None]),
            boundary: BoundaryData::new(1.0, E, 1.0, E)?,
            exact: Some(exp_solution()),
            analysis: Some(AnalysisData {
                m: 15.0,
                l: [7.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                reported_q: Some(0.0313),
            }),
        },
        "example3" => Problem {
            name: name.into(),
            description: "u'''' = e^t + (u(t/2)^2 u'''(t/2) - u' u''(t/2) + u u''' - u''^2)/9, exact u = e^t".into(),
            rhs: Rhs::native(&[T, U, UBar, Y, V, VBar, Z, ZBar], |t, x| {
                let [u, ub, y, _, v, vb, z, zb] = *x;
                t.exp() + (ub * ub * zb - y * vb + u * z - v * v) / 9.0
            }),
            delays: delays([half(), None, half(), half()]),
            boundary: BoundaryData::new(1.0, E, 1.0, E)?,
            exact: Some(exp_solution()),
            analysis: Some(AnalysisData {
                m: 20.0,
                l: [1.30, 7.20, 0.47, 0.0, 0.94, 0.32, 0.31, 0.86],
                reported_q: Some(0.6446),
            }),
        },
        "example4" => Problem {
            name: name.into(),
            description: "mixed delays t/2, t^2, t^2/2, t^2/3 in all four derivative slots; no exact solution".into(),
            rhs: Rhs::native(&[T, U, UBar, Y, YBar, V, VBar, Z, ZBar], |t, x| {
                let [u, ub, y, yb, v, vb, z, zb] = *x;
                t * t - u / 4.0 + ub * ub / 4.0 + y * yb + (v + vb) * u / 8.0
                    + (z.sin() + zb.cos()) / 4.0
            }),
            delays: delays([
                half(),
                Some(ScalarMap::native(|t| t * t)),
                Some(ScalarMap::native(|t| t * t / 2.0)),
                Some(ScalarMap::native(|t| t * t / 3.0)),
            ]),
            boundary: BoundaryData::new(1.0, 19.0 / 6.0, 1.0, 3.5)?,
            exact: None,
            analysis: Some(AnalysisData {
                m: 23.0,
                l: [1.48, 1.62, 3.7, 3.7, 0.41, 0.41, 0.25, 0.25],
                reported_q: Some(0.3857),
            }),
        },
        "example5" => Problem {
            name: name.into(),
            description: "u'''' = u''(t/4)^4, exact u = e^t; sufficient conditions fail".into(),
            rhs: Rhs::native(&[VBar], |_, x| x[5].powi(4)),
            delays: delays([None, None, Some(ScalarMap::native(|t| t / 4.0)), None]),
            boundary: BoundaryData::new(1.0, E, 1.0, E)?,
            exact: Some(exp_solution()),
            // Trial bound only: no M works for a quartic in vbar.  L5 is the
            // sup of |4 vbar^3| over the resulting envelope.
            analysis: Some(AnalysisData {
                m: 20.0,
                l: [0.0, 0.0, 0.0, 0.0, 0.0, 4.0 * (8.0 - 2.0 * E + 20.0 / 12.0f64).powi(3), 0.0, 0.0],
                reported_q: None,
            }),
        },
        "example6" => Problem {
            name: name.into(),
            description: "u'''' = u^2 + u''(t^2/2)^4; no exact solution, no analysis data".into(),
            rhs: Rhs::native(&[U, VBar], |_, x| x[0] * x[0] + x[5].powi(4)),
            delays: delays([None, None, Some(ScalarMap::native(|t| t * t / 2.0)), None]),
            boundary: BoundaryData::new(1.0, 19.0 / 6.0, 1.0, 3.5)?,
            exact: None,
            analysis: None,
        },
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                valid: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(p)
}

/// A built-in name, or otherwise a path to a config file.  A bare word
/// that is neither is reported as an unknown built-in.
pub fn resolve(source: &str) -> Result<Problem> {
    let bare = !source.contains(['/', '\\', '.']);
    if BUILTIN_NAMES.contains(&source) || (bare && !Path::new(source).exists()) {
        builtin(source)
    } else {
        load_config_file(source)
    }
}
