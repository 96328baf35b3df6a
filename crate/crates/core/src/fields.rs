//! Evaluator traits for scalar fields, warping profiles and metric fields,
//! plus the central-difference machinery used when analytic derivatives are
//! missing.
//!
//! Implementations must be re-entrant: the engine calls them from several
//! threads at once.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::expr::Expr;

/// How derivatives of an evaluator are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Use the evaluator's own derivatives; error if it has none.
    Analytic,
    /// Central differences. `h` is the relative step for first derivatives,
    /// `h2` the relative step for second derivatives and for differencing
    /// quantities that are themselves built from derivatives.
    FiniteDifference { h: f64, h2: f64 },
}

impl DerivativeMode {
    pub const DEFAULT_H: f64 = 1e-5;
    pub const DEFAULT_H2: f64 = 1e-4;

    pub fn finite_difference() -> Self {
        DerivativeMode::FiniteDifference {
            h: Self::DEFAULT_H,
            h2: Self::DEFAULT_H2,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, DerivativeMode::Analytic)
    }

    /// Relative step used when a derived quantity has to be differenced.
    pub fn outer_step(&self) -> f64 {
        match self {
            DerivativeMode::Analytic => Self::DEFAULT_H,
            DerivativeMode::FiniteDifference { h2, .. } => *h2,
        }
    }
}

/// Absolute step for coordinate `xi` given a relative step.
#[inline]
pub fn step(rel: f64, xi: f64) -> f64 {
    rel * xi.abs().max(1.0)
}

/// A smooth real function on (a subset of) R^m.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Gradient and Hessian in coordinates, when known in closed form.
    fn jet(&self, _x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        None
    }
}

/// A smooth real function of one variable (warping profiles).
pub trait Univariate: Send + Sync {
    fn value(&self, t: f64) -> f64;
    /// First and second derivative, when known in closed form.
    fn derivs(&self, _t: f64) -> Option<(f64, f64)> {
        None
    }
}

/// Value and coordinate derivatives of a metric at a point.
/// `dg[k]` is the matrix of partials along coordinate k, `ddg[k * m + l]`
/// the matrix of mixed second partials along k and l.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<DMatrix<f64>>,
}

/// Symmetric positive-definite matrix field on a coordinate chart.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> DMatrix<f64>;
    fn jet(&self, _x: &[f64]) -> Option<MetricJet> {
        None
    }
}

/// Gradient of `f` at `x` by central differences.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> DVector<f64> {
    let mut xs = x.to_vec();
    DVector::from_fn(x.len(), |i, _| {
        let h = step(rel, x[i]);
        xs[i] = x[i] + h;
        let fp = f(&xs);
        xs[i] = x[i] - h;
        let fm = f(&xs);
        xs[i] = x[i];
        (fp - fm) / (2.0 * h)
    })
}

/// Hessian of `f` at `x` by central second differences.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> DMatrix<f64> {
    let m = x.len();
    let f0 = f(x);
    let mut xs = x.to_vec();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        let hi = step(rel, x[i]);
        xs[i] = x[i] + hi;
        let fp = f(&xs);
        xs[i] = x[i] - hi;
        let fm = f(&xs);
        xs[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = step(rel, x[j]);
            let mut corner = |si: f64, sj: f64| {
                xs[i] = x[i] + si * hi;
                xs[j] = x[j] + sj * hj;
                let v = f(&xs);
                xs[i] = x[i];
                xs[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                + corner(-1.0, -1.0))
                / (4.0 * hi * hj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Partial derivatives of a vector-valued map, one column per coordinate.
pub fn fd_jacobian(
    f: impl Fn(&[f64]) -> Result<DVector<f64>>,
    x: &[f64],
    rel: f64,
) -> Result<DMatrix<f64>> {
    let m = x.len();
    let mut xs = x.to_vec();
    let mut cols = Vec::with_capacity(m);
    for k in 0..m {
        let h = step(rel, x[k]);
        xs[k] = x[k] + h;
        let fp = f(&xs)?;
        xs[k] = x[k] - h;
        let fm = f(&xs)?;
        xs[k] = x[k];
        cols.push((fp - fm) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Metric derivatives by central differences of `g`.
pub fn fd_metric_jet(field: &dyn MetricField, x: &[f64], h: f64, h2: f64) -> MetricJet {
    let m = x.len();
    let g = field.eval(x);
    let mut xs = x.to_vec();
    let mut dg = Vec::with_capacity(m);
    for k in 0..m {
        let hk = step(h, x[k]);
        xs[k] = x[k] + hk;
        let gp = field.eval(&xs);
        xs[k] = x[k] - hk;
        let gm = field.eval(&xs);
        xs[k] = x[k];
        dg.push((gp - gm) / (2.0 * hk));
    }
    let mut ddg = vec![DMatrix::zeros(m, m); m * m];
    for k in 0..m {
        let hk = step(h2, x[k]);
        xs[k] = x[k] + hk;
        let gp = field.eval(&xs);
        xs[k] = x[k] - hk;
        let gm = field.eval(&xs);
        xs[k] = x[k];
        ddg[k * m + k] = (gp - 2.0 * &g + gm) / (hk * hk);
        for l in 0..k {
            let hl = step(h2, x[l]);
            let mut corner = |sk: f64, sl: f64| {
                xs[k] = x[k] + sk * hk;
                xs[l] = x[l] + sl * hl;
                let v = field.eval(&xs);
                xs[k] = x[k];
                xs[l] = x[l];
                v
            };
            let mixed = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                + corner(-1.0, -1.0))
                / (4.0 * hk * hl);
            ddg[k * m + l] = mixed.clone();
            ddg[l * m + k] = mixed;
        }
    }
    MetricJet { g, dg, ddg }
}

/// First and second derivative of a univariate function by central differences.
pub fn fd_derivs(f: &dyn Univariate, t: f64, h: f64, h2: f64) -> (f64, f64) {
    let a = step(h, t);
    let d1 = (f.value(t + a) - f.value(t - a)) / (2.0 * a);
    let b = step(h2, t);
    let d2 = (f.value(t + b) - 2.0 * f.value(t) + f.value(t - b)) / (b * b);
    (d1, d2)
}

/// Value, gradient and Hessian of a scalar field under the given mode.
pub fn scalar_jet(
    field: &dyn ScalarField,
    x: &[f64],
    mode: DerivativeMode,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let v = field.value(x);
    match mode {
        DerivativeMode::Analytic => {
            let (g, h) = field.jet(x).ok_or(GeomError::DerivativeUnavailable)?;
            Ok((v, g, h))
        }
        DerivativeMode::FiniteDifference { h, h2 } => {
            let f = |p: &[f64]| field.value(p);
            Ok((v, fd_gradient(f, x, h), fd_hessian(f, x, h2)))
        }
    }
}

/// Value and gradient only.
pub fn scalar_grad(field: &dyn ScalarField, x: &[f64], mode: DerivativeMode) -> Result<(f64, DVector<f64>)> {
    let v = field.value(x);
    match mode {
        DerivativeMode::Analytic => {
            let (g, _) = field.jet(x).ok_or(GeomError::DerivativeUnavailable)?;
            Ok((v, g))
        }
        DerivativeMode::FiniteDifference { h, .. } => Ok((v, fd_gradient(|p: &[f64]| field.value(p), x, h))),
    }
}

// ---------------------------------------------------------------------------
// Closure and expression backed implementations.

/// Scalar field from a closure, without analytic derivatives.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Scalar field defined by an expression, with symbolic gradient and Hessian.
#[derive(Debug, Clone)]
pub struct ExprField {
    dim: usize,
    value: Expr,
    grad: Vec<Expr>,
    hess: Vec<Expr>,
    source: String,
}

impl ExprField {
    pub fn new(value: Expr, dim: usize) -> Self {
        let grad: Vec<Expr> = (0..dim).map(|i| value.diff(i)).collect();
        let mut hess = Vec::with_capacity(dim * dim);
        for gi in &grad {
            for j in 0..dim {
                hess.push(gi.diff(j));
            }
        }
        ExprField {
            dim,
            value,
            grad,
            hess,
            source: String::new(),
        }
    }

    /// Parses an expression in the variables `x1..x{dim}`.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        Self::parse_with(src, dim, &Default::default())
    }

    pub fn parse_with(
        src: &str,
        dim: usize,
        params: &std::collections::BTreeMap<String, f64>,
    ) -> Result<Self> {
        let names = coordinate_names(dim);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let e = Expr::parse_with(src, &refs, params)?;
        let mut field = Self::new(e, dim);
        field.source = src.to_string();
        Ok(field)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.value
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }
    fn jet(&self, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let g = DVector::from_fn(self.dim, |i, _| self.grad[i].eval(x));
        let h = DMatrix::from_fn(self.dim, self.dim, |i, j| self.hess[i * self.dim + j].eval(x));
        Some((g, h))
    }
}

/// `x1, x2, ..., xm`.
pub fn coordinate_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// Univariate profile defined by an expression in `t`.
#[derive(Debug, Clone)]
pub struct ExprProfile {
    value: Expr,
    d1: Expr,
    d2: Expr,
    source: String,
}

impl ExprProfile {
    pub fn parse(src: &str) -> Result<Self> {
        let value = Expr::parse(src, &["t"])?;
        let d1 = value.diff(0);
        let d2 = d1.diff(0);
        Ok(ExprProfile {
            value,
            d1,
            d2,
            source: src.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl Univariate for ExprProfile {
    fn value(&self, t: f64) -> f64 {
        self.value.eval(&[t])
    }
    fn derivs(&self, t: f64) -> Option<(f64, f64)> {
        Some((self.d1.eval(&[t]), self.d2.eval(&[t])))
    }
}

/// Univariate profile from closures. Without derivative closures it is
/// finite-difference only.
pub struct FnProfile {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d: Option<Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>>,
}

impl FnProfile {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FnProfile {
            f: Arc::new(f),
            d: None,
        }
    }

    pub fn with_derivs(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        FnProfile {
            f: Arc::new(f),
            d: Some(Arc::new(d)),
        }
    }
}

impl Univariate for FnProfile {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn derivs(&self, t: f64) -> Option<(f64, f64)> {
        self.d.as_ref().map(|d| d(t))
    }
}

/// Metric whose entries are expressions in `x1..xm`; derivatives are symbolic.
#[derive(Debug, Clone)]
pub struct ExprMetric {
    dim: usize,
    entries: Vec<Expr>,
    d1: Vec<Vec<Expr>>,
    d2: Vec<Vec<Expr>>,
}

impl ExprMetric {
    /// `rows` is an m x m array of expression strings; symmetry is enforced by
    /// reading the upper triangle only when `rows[j][i]` is empty.
    pub fn parse(rows: &[Vec<String>]) -> Result<Self> {
        let dim = rows.len();
        let names = coordinate_names(dim);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(GeomError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, cell) in row.iter().enumerate() {
                let src = if cell.trim().is_empty() && j < i {
                    rows[j][i].as_str()
                } else {
                    cell.as_str()
                };
                entries.push(Expr::parse(src, &refs)?);
            }
        }
        Ok(Self::from_entries(dim, entries))
    }

    pub fn from_entries(dim: usize, entries: Vec<Expr>) -> Self {
        let d1: Vec<Vec<Expr>> = entries
            .iter()
            .map(|e| (0..dim).map(|k| e.diff(k)).collect())
            .collect();
        let d2: Vec<Vec<Expr>> = d1
            .iter()
            .map(|row| {
                let mut out = Vec::with_capacity(dim * dim);
                for dk in row {
                    for l in 0..dim {
                        out.push(dk.diff(l));
                    }
                }
                out
            })
            .collect();
        ExprMetric {
            dim,
            entries,
            d1,
            d2,
        }
    }
}

impl MetricField for ExprMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.dim;
        DMatrix::from_fn(m, m, |i, j| self.entries[i * m + j].eval(x))
    }
    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let m = self.dim;
        let g = self.eval(x);
        let dg = (0..m)
            .map(|k| DMatrix::from_fn(m, m, |i, j| self.d1[i * m + j][k].eval(x)))
            .collect();
        let ddg = (0..m * m)
            .map(|kl| DMatrix::from_fn(m, m, |i, j| self.d2[i * m + j][kl].eval(x)))
            .collect();
        Some(MetricJet { g, dg, ddg })
    }
}

/// Metric from a closure (finite-difference derivatives only).
pub struct FnMetric<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync> FnMetric<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnMetric { dim, f }
    }
}

impl<F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync> MetricField for FnMetric<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }
}
