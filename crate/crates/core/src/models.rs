//! Named model spaces with closed-form slice data, and builtin test graphs.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::fields::{DerivativeMode, ExprField, ExprProfile, MetricField, MetricJet};
use crate::graph::GraphFunction;
use crate::manifold::{BoxDomain, ChartMetric};
use crate::warped::{Interval, WarpedProduct, WarpingFunction};

/// Margin kept between polar chart coordinates and the poles.
pub const POLAR_MARGIN: f64 = 0.05;

/// Euclidean metric.
#[derive(Debug, Clone, Copy)]
pub struct FlatMetric(pub usize);

impl MetricField for FlatMetric {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.0, self.0)
    }
    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let m = self.0;
        Some(MetricJet {
            g: self.eval(x),
            dg: vec![DMatrix::zeros(m, m); m],
            ddg: vec![DMatrix::zeros(m, m); m * m],
        })
    }
}

/// Upper half-space metric `|dx|²/x_m²`.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpaceMetric(pub usize);

impl MetricField for HalfSpaceMetric {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let y = x[self.0 - 1];
        DMatrix::identity(self.0, self.0) / (y * y)
    }
    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let m = self.0;
        let y = x[m - 1];
        let id = DMatrix::<f64>::identity(m, m);
        let mut dg = vec![DMatrix::zeros(m, m); m];
        dg[m - 1] = &id * (-2.0 / (y * y * y));
        let mut ddg = vec![DMatrix::zeros(m, m); m * m];
        ddg[(m - 1) * m + (m - 1)] = &id * (6.0 / (y * y * y * y));
        Some(MetricJet {
            g: id / (y * y),
            dg,
            ddg,
        })
    }
}

/// Round metric in polar coordinates:
/// `diag(1, sin²x₁, sin²x₁ sin²x₂, …)`. The first `m − 1` coordinates are
/// polar angles in `(0, π)`, the last is the azimuth.
#[derive(Debug, Clone, Copy)]
pub struct SpherePolarMetric(pub usize);

impl SpherePolarMetric {
    fn scales(&self, x: &[f64]) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.0);
        let mut acc = 1.0;
        for k in 0..self.0 {
            s.push(acc);
            if k < self.0 - 1 {
                acc *= x[k].sin().powi(2);
            }
        }
        s
    }
}

impl MetricField for SpherePolarMetric {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.scales(x)))
    }
    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let m = self.0;
        let s = self.scales(x);
        let cot: Vec<f64> = x.iter().map(|v| v.cos() / v.sin()).collect();
        // ∂_a s_k = 2 cot(x_a) s_k for a < k
        let dg = (0..m)
            .map(|a| DMatrix::from_fn(m, m, |i, j| if i == j && a < i { 2.0 * cot[a] * s[i] } else { 0.0 }))
            .collect();
        let mut ddg = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                ddg.push(DMatrix::from_fn(m, m, |i, j| {
                    if i != j || a >= i || b >= i {
                        0.0
                    } else if a == b {
                        2.0 * (cot[a] * cot[a] - 1.0) * s[i]
                    } else {
                        4.0 * cot[a] * cot[b] * s[i]
                    }
                }));
            }
        }
        Some(MetricJet {
            g: self.eval(x),
            dg,
            ddg,
        })
    }
}

/// Which base manifold a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Euclidean,
    Hyperbolic,
    Sphere,
}

impl BaseKind {
    pub fn chart(&self, m: usize) -> ChartMetric {
        let (field, domain): (Arc<dyn MetricField>, BoxDomain) = match self {
            BaseKind::Euclidean => (Arc::new(FlatMetric(m)), BoxDomain::unbounded(m)),
            BaseKind::Hyperbolic => {
                let mut d = BoxDomain::unbounded(m);
                d.lo[m - 1] = 0.0;
                (Arc::new(HalfSpaceMetric(m)), d)
            }
            BaseKind::Sphere => {
                let mut lo = vec![POLAR_MARGIN; m];
                let mut hi = vec![PI - POLAR_MARGIN; m];
                lo[m - 1] = -PI;
                hi[m - 1] = PI;
                (Arc::new(SpherePolarMetric(m)), BoxDomain { lo, hi })
            }
        };
        ChartMetric::new(field, domain, DerivativeMode::Analytic).expect("dimensions agree")
    }

    /// Constant sectional curvature of the base.
    pub fn curvature(&self) -> f64 {
        match self {
            BaseKind::Euclidean => 0.0,
            BaseKind::Hyperbolic => -1.0,
            BaseKind::Sphere => 1.0,
        }
    }

    /// A representative interior point of the chart.
    pub fn sample_center(&self, m: usize) -> Vec<f64> {
        match self {
            BaseKind::Euclidean => vec![0.0; m],
            BaseKind::Hyperbolic => {
                let mut c = vec![0.0; m];
                c[m - 1] = 1.0;
                c
            }
            BaseKind::Sphere => {
                let mut c = vec![FRAC_PI_2; m];
                c[m - 1] = 0.0;
                c
            }
        }
    }
}

/// A named model `M ×_ψ I` with its closed-form slice data.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    pub name: &'static str,
    pub base_kind: BaseKind,
    pub product: WarpedProduct,
    pub expected_h: fn(f64) -> f64,
    pub expected_kperp: fn(f64) -> f64,
    pub expected_sigma: fn(f64) -> f64,
    /// Constant ambient sectional curvature, when the model is a space form.
    pub expected_ambient_k: Option<f64>,
    /// Whether `𝒦 + ℋ′ ≡ 0`, i.e. the curvature hypothesis holds with α = β = 0.
    pub convergence_null: bool,
    pub notes: &'static str,
}

impl ModelSpace {
    pub fn dim(&self) -> usize {
        self.product.dim()
    }

    pub fn interval(&self) -> Interval {
        self.product.warp.interval()
    }

    /// Closed-form σ at `t`.
    pub fn expected_sigma_forms(&self, t: f64) -> Result<f64> {
        let i = self.interval();
        if !i.contains(t) {
            return Err(GeomError::OutsideInterval { t, lo: i.lo, hi: i.hi });
        }
        Ok((self.expected_sigma)(t))
    }

    /// Nine regression points inside `I`.
    pub fn t_grid(&self) -> Vec<f64> {
        let i = self.interval();
        match (i.lo.is_finite(), i.hi.is_finite()) {
            (false, false) => (0..9).map(|k| -2.0 + 0.5 * k as f64).collect(),
            (true, false) => (1..=9).map(|k| i.lo + 0.25 * k as f64).collect(),
            (true, true) => (1..=9).map(|k| i.lo + (i.hi - i.lo) * k as f64 / 10.0).collect(),
            (false, true) => (1..=9).map(|k| i.hi - 0.25 * k as f64).collect(),
        }
    }
}

fn profile(src: &str) -> Arc<ExprProfile> {
    Arc::new(ExprProfile::parse(src).expect("builtin profile parses"))
}

fn tanh(t: f64) -> f64 {
    t.tanh()
}
fn one(_: f64) -> f64 {
    1.0
}
fn zero(_: f64) -> f64 {
    0.0
}
fn minus_one(_: f64) -> f64 {
    -1.0
}
fn cosh_sigma(t: f64) -> f64 {
    PI - 2.0 * t.exp().atan()
}
fn exp_sigma(t: f64) -> f64 {
    (-t).exp()
}
fn coth(t: f64) -> f64 {
    1.0 / t.tanh()
}
fn sinh_sigma(t: f64) -> f64 {
    coth(0.5 * t).ln()
}
fn cot(t: f64) -> f64 {
    t.cos() / t.sin()
}
fn sin_sigma(t: f64) -> f64 {
    cot(0.5 * t).ln()
}
fn recip(t: f64) -> f64 {
    1.0 / t
}
fn linear_sigma(t: f64) -> f64 {
    -t.ln()
}
fn neg(t: f64) -> f64 {
    -t
}

struct Row {
    name: &'static str,
    base: BaseKind,
    psi: &'static str,
    interval: Interval,
    anchors: (f64, f64),
    h: fn(f64) -> f64,
    kperp: fn(f64) -> f64,
    sigma: fn(f64) -> f64,
    ambient: Option<f64>,
    convergence_null: bool,
    notes: &'static str,
}

fn rows() -> Vec<Row> {
    let line = Interval::real_line();
    let half = Interval::positive();
    vec![
        Row {
            name: "cosh-hyperbolic",
            base: BaseKind::Hyperbolic,
            psi: "cosh(t)",
            interval: line,
            anchors: (0.0, FRAC_PI_2),
            h: tanh,
            kperp: minus_one,
            sigma: cosh_sigma,
            ambient: Some(-1.0),
            convergence_null: true,
            notes: "pseudo-hyperbolic space over the half-space model; isometric to hyperbolic space",
        },
        Row {
            name: "exp-euclidean",
            base: BaseKind::Euclidean,
            psi: "exp(t)",
            interval: line,
            anchors: (0.0, 1.0),
            h: one,
            kperp: minus_one,
            sigma: exp_sigma,
            ambient: Some(-1.0),
            convergence_null: true,
            notes: "pseudo-hyperbolic space over Euclidean space; slices are horospheres",
        },
        Row {
            name: "cosh-euclidean",
            base: BaseKind::Euclidean,
            psi: "cosh(t)",
            interval: line,
            anchors: (0.0, FRAC_PI_2),
            h: tanh,
            kperp: minus_one,
            sigma: cosh_sigma,
            ambient: None,
            convergence_null: false,
            notes: "pseudo-hyperbolic space over Euclidean space; not a space form",
        },
        Row {
            name: "sinh-sphere",
            base: BaseKind::Sphere,
            psi: "sinh(t)",
            interval: half,
            anchors: (1.0, sinh_sigma(1.0)),
            h: coth,
            kperp: minus_one,
            sigma: sinh_sigma,
            ambient: Some(-1.0),
            convergence_null: true,
            notes: "geodesic polar coordinates on hyperbolic space",
        },
        Row {
            name: "sin-sphere",
            base: BaseKind::Sphere,
            psi: "sin(t)",
            interval: Interval { lo: 0.0, hi: PI },
            anchors: (FRAC_PI_2, 0.0),
            h: cot,
            kperp: one,
            sigma: sin_sigma,
            ambient: Some(1.0),
            convergence_null: true,
            notes: "round sphere minus two poles; polar chart margin is an engine choice",
        },
        Row {
            name: "linear-sphere",
            base: BaseKind::Sphere,
            psi: "t",
            interval: half,
            anchors: (1.0, 0.0),
            h: recip,
            kperp: zero,
            sigma: linear_sigma,
            ambient: Some(0.0),
            convergence_null: true,
            notes: "Euclidean space minus the origin in spherical coordinates",
        },
        Row {
            name: "product-hyperbolic-halfplane",
            base: BaseKind::Hyperbolic,
            psi: "1",
            interval: line,
            anchors: (0.0, 0.0),
            h: zero,
            kperp: zero,
            sigma: neg,
            ambient: None,
            convergence_null: false,
            notes: "Riemannian product of the half-space model with the line",
        },
        Row {
            name: "product-euclidean",
            base: BaseKind::Euclidean,
            psi: "1",
            interval: line,
            anchors: (0.0, 0.0),
            h: zero,
            kperp: zero,
            sigma: neg,
            ambient: Some(0.0),
            convergence_null: true,
            notes: "Euclidean space as a trivial product",
        },
    ]
}

/// Stable identifiers of the catalog, in catalog order.
pub fn model_names() -> Vec<&'static str> {
    rows().iter().map(|r| r.name).collect()
}

/// Every model with an `m`-dimensional base.
pub fn catalog(m: usize) -> Vec<ModelSpace> {
    rows().into_iter().map(|r| build(r, m)).collect()
}

fn build(r: Row, m: usize) -> ModelSpace {
    let warp = WarpingFunction::new(profile(r.psi), r.interval, DerivativeMode::Analytic)
        .with_anchors(r.anchors.0, r.anchors.1)
        .expect("catalog anchors lie in the interval");
    ModelSpace {
        name: r.name,
        base_kind: r.base,
        product: WarpedProduct::new(r.base.chart(m), warp),
        expected_h: r.h,
        expected_kperp: r.kperp,
        expected_sigma: r.sigma,
        expected_ambient_k: r.ambient,
        convergence_null: r.convergence_null,
        notes: r.notes,
    }
}

pub fn lookup(name: &str, m: usize) -> Result<ModelSpace> {
    if m == 0 {
        return Err(GeomError::DimensionTooSmall { m, need: 1 });
    }
    rows()
        .into_iter()
        .find(|r| r.name == name)
        .map(|r| build(r, m))
        .ok_or_else(|| GeomError::UnknownModel(name.to_string()))
}

/// Names of the builtin graph families.
pub const BUILTIN_GRAPHS: [&str; 5] = ["slice", "bump", "bump_hyperbolic", "a_log_y", "linear"];

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Expression source of a builtin graph over an `m`-dimensional chart.
///
/// * `slice`: `t0`
/// * `bump`: `b + a·exp(−Σ(x_i − c_i)²/s²)`
/// * `bump_hyperbolic`: `b + a·exp(−(Σ_{i<m} x_i² + ln(x_m)²)/s²)`
/// * `a_log_y`: `b + a·ln(x_m)`
/// * `linear`: `b + Σ k_i x_i`
pub fn builtin_graph_source(name: &str, params: &BTreeMap<String, f64>, m: usize) -> Result<String> {
    let b = param(params, "b", 0.0);
    let a = param(params, "a", 0.3);
    let s = param(params, "s", 1.0);
    let src = match name {
        "slice" => format!("{}", param(params, "t0", 0.0)),
        "bump" => {
            let terms: Vec<String> = (1..=m)
                .map(|i| format!("(x{i} - ({}))^2", param(params, &format!("c{i}"), 0.0)))
                .collect();
            format!("{b} + ({a})*exp(-({})/({s})^2)", terms.join(" + "))
        }
        "bump_hyperbolic" => {
            let mut terms: Vec<String> = (1..m).map(|i| format!("x{i}^2")).collect();
            terms.push(format!("log(x{m})^2"));
            format!("{b} + ({a})*exp(-({})/({s})^2)", terms.join(" + "))
        }
        "a_log_y" => format!("{b} + ({})*log(x{m})", param(params, "a", 1.0)),
        "linear" => {
            let terms: Vec<String> = (1..=m)
                .map(|i| format!("({})*x{i}", param(params, &format!("k{i}"), 0.1)))
                .collect();
            format!("{b} + {}", terms.join(" + "))
        }
        other => return Err(GeomError::UnknownModel(format!("graph '{other}'"))),
    };
    Ok(src)
}

/// A builtin graph with analytic derivatives. `a_log_y` and `linear` are
/// declared unbounded in both directions; the rest are bounded.
pub fn builtin_graph(name: &str, params: &BTreeMap<String, f64>, m: usize) -> Result<GraphFunction> {
    let src = builtin_graph_source(name, params, m)?;
    let field = ExprField::parse(&src, m)?;
    let bounded = !matches!(name, "a_log_y" | "linear");
    Ok(GraphFunction::new(Arc::new(field), DerivativeMode::Analytic)
        .named(format!("{name}: {src}"))
        .with_bounds(bounded, bounded))
}

/// Graph from a user expression in `x1..xm` with named parameters.
pub fn expression_graph(src: &str, params: &BTreeMap<String, f64>, m: usize, mode: DerivativeMode) -> Result<GraphFunction> {
    let field = ExprField::parse_with(src, m, params)?;
    Ok(GraphFunction::new(Arc::new(field), mode).named(src.to_string()))
}
