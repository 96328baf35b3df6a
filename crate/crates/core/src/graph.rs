//! Pointwise extrinsic geometry of a graph `Γ_f = {(x, f(x))}` in `M ×_ψ I`.
//!
//! Everything is expressed in the coordinate frame `dφ(∂_i)`, where
//! `φ(x) = (x, f(x))`. The unit normal is
//! `η = (ψ/W)(∇f/ψ² − ∂_t)` with `W = √(|∇f|² + ψ²)`; all curvatures are
//! taken with respect to it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::fields::{scalar_grad, scalar_jet, DerivativeMode, ScalarField};
use crate::manifold::{generalized_eigen, hess_from, PointGeometry};
use crate::warped::{AmbientVector, ClosedCurvature, SignFlip, WarpedProduct};

/// The height function `f` of a graph, with its derivative mode and the
/// global boundedness the caller asserts for it.
#[derive(Clone)]
pub struct GraphFunction {
    field: Arc<dyn ScalarField>,
    mode: DerivativeMode,
    /// `f` is bounded below on all of `M` (not only on the sampled region).
    pub bounded_below: bool,
    /// `f` is bounded above on all of `M`.
    pub bounded_above: bool,
    pub name: String,
}

impl std::fmt::Debug for GraphFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphFunction")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .field("bounded_below", &self.bounded_below)
            .field("bounded_above", &self.bounded_above)
            .finish()
    }
}

impl GraphFunction {
    pub fn new(field: Arc<dyn ScalarField>, mode: DerivativeMode) -> Self {
        GraphFunction {
            field,
            mode,
            bounded_below: true,
            bounded_above: true,
            name: String::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_bounds(mut self, below: bool, above: bool) -> Self {
        self.bounded_below = below;
        self.bounded_above = above;
        self
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn field(&self) -> &Arc<dyn ScalarField> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.field.value(x)
    }

    /// `(f, df, ∂²f)` in coordinates.
    pub fn jet(&self, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        scalar_jet(self.field.as_ref(), x, self.mode)
    }

    /// The graph of `−f`, which lives in the reflected product.
    pub fn reflected(&self) -> GraphFunction {
        let inner = self.field.clone();
        GraphFunction {
            field: Arc::new(Negated(inner)),
            mode: self.mode,
            bounded_below: self.bounded_above,
            bounded_above: self.bounded_below,
            name: format!("-({})", self.name),
        }
    }
}

struct Negated(Arc<dyn ScalarField>);

impl ScalarField for Negated {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        -self.0.value(x)
    }
    fn jet(&self, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        self.0.jet(x).map(|(g, h)| (-g, -h))
    }
}

/// Shared first- and second-order data of `Γ_f` above one base point.
#[derive(Debug, Clone)]
pub struct GraphPoint {
    pub x: Vec<f64>,
    pub f: f64,
    pub df: DVector<f64>,
    pub d2f: DMatrix<f64>,
    pub geo: PointGeometry,
    pub psi: f64,
    pub dpsi: f64,
    pub ddpsi: f64,
    /// ℋ(f) as reported by the product (subject to the mutation fixture).
    pub slice_mean: f64,
    /// `∇f = g⁻¹ df`.
    pub grad: DVector<f64>,
    /// `|∇f|²_M`.
    pub grad_sq: f64,
    /// `W = √(|∇f|² + ψ²)`.
    pub w: f64,
    flip: Option<SignFlip>,
}

impl GraphPoint {
    pub fn new(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<Self> {
        if f.dim() != p.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: p.dim(),
                got: f.dim(),
            });
        }
        let geo = p.base.geometry(x)?;
        let (fv, df, d2f) = f.jet(x)?;
        if !p.warp.interval().contains(fv) {
            return Err(GeomError::ValueOutsideInterval {
                point: x.to_vec(),
                value: fv,
            });
        }
        let (psi, dpsi, ddpsi) = p.warp.jet(fv)?;
        let slice_mean = p.slice_mean(fv)?;
        let grad = &geo.ginv * &df;
        let grad_sq = df.dot(&grad);
        let w = (grad_sq + psi * psi).sqrt();
        Ok(GraphPoint {
            x: x.to_vec(),
            f: fv,
            df,
            d2f,
            geo,
            psi,
            dpsi,
            ddpsi,
            slice_mean,
            grad,
            grad_sq,
            w,
            flip: p.sign_flip(),
        })
    }

    fn sign(&self, which: SignFlip) -> f64 {
        if self.flip == Some(which) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Covariant Hessian of `f` on the base.
    pub fn hess(&self) -> DMatrix<f64> {
        hess_from(&self.geo, &self.df, &self.d2f)
    }

    /// `G = ψ(f)² g_M + df ⊗ df`.
    pub fn induced_metric(&self) -> DMatrix<f64> {
        &self.geo.g * (self.psi * self.psi) + &self.df * self.df.transpose()
    }

    /// Θ = −ψ/W.
    pub fn theta(&self) -> f64 {
        self.sign(SignFlip::Angle) * (-self.psi / self.w)
    }

    /// Ambient components of η: base part `∇f/(ψW)`, `∂_t` part `−ψ/W`.
    pub fn normal(&self) -> DVector<f64> {
        let m = self.dim();
        DVector::from_fn(m + 1, |i, _| {
            if i < m {
                self.grad[i] / (self.psi * self.w)
            } else {
                -self.psi / self.w
            }
        })
    }

    /// `B = −(ψ/W) Hess f + (ψ³ℋ/W) g_M + 2(ψℋ/W) df ⊗ df`.
    pub fn second_fundamental_form(&self) -> DMatrix<f64> {
        let (p, w, h) = (self.psi, self.w, self.slice_mean);
        let hess = self.hess();
        let b = hess * (-self.sign(SignFlip::SecondFormHess) * p / w)
            + &self.geo.g * (self.sign(SignFlip::SecondFormMetric) * p * p * p * h / w)
            + &self.df * self.df.transpose() * (self.sign(SignFlip::SecondFormGradient) * 2.0 * p * h / w);
        symmetrize(b)
    }

    /// Tangent vector `dφ(v) = (v, df(v))` as an ambient vector.
    pub fn lift(&self, v: &DVector<f64>) -> AmbientVector {
        AmbientVector::new(v.clone(), self.df.dot(v))
    }

    /// Closed-form ambient curvature at `φ(x)`.
    pub fn ambient_curvature(&self) -> ClosedCurvature {
        ClosedCurvature::from_parts(self.geo.clone(), self.psi, self.dpsi, self.ddpsi)
    }
}

fn symmetrize(b: DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]))
}

/// Principal curvatures and a `G`-orthonormal eigenframe (columns).
#[derive(Debug, Clone)]
pub struct ShapeSpectrum {
    pub lambdas: Vec<f64>,
    pub frame: DMatrix<f64>,
}

impl ShapeSpectrum {
    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum::<f64>() / self.lambdas.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.lambdas.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    /// `(1/(m(m−1))) Σ_{i≠j} λ_i λ_j`, or `None` when `m < 2`.
    pub fn second_mean(&self) -> Option<f64> {
        let m = self.lambdas.len();
        if m < 2 {
            return None;
        }
        let s: f64 = self.lambdas.iter().sum();
        let q: f64 = self.lambdas.iter().map(|l| l * l).sum();
        Some((s * s - q) / (m * (m - 1)) as f64)
    }
}

/// Principal curvatures: generalized eigenvalues of `(B, G)`, ascending.
pub fn principal_curvatures(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(generalized_eigen(b, g)?.0)
}

/// Principal curvatures together with the eigenframe.
pub fn shape_spectrum(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<ShapeSpectrum> {
    let (lambdas, frame) = generalized_eigen(b, g)?;
    Ok(ShapeSpectrum { lambdas, frame })
}

pub fn induced_metric(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(GraphPoint::new(p, f, x)?.induced_metric())
}

/// `(η, W, Θ)`.
pub fn normal_and_angle(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<(DVector<f64>, f64, f64)> {
    let gp = GraphPoint::new(p, f, x)?;
    Ok((gp.normal(), gp.w, gp.theta()))
}

pub fn second_fundamental_form(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(GraphPoint::new(p, f, x)?.second_fundamental_form())
}

/// Mean curvature as the average principal curvature.
pub fn mean_curvature_trace(report: &GraphPointReport) -> f64 {
    report.lambdas.iter().sum::<f64>() / report.lambdas.len() as f64
}

/// Mean curvature from the divergence form
/// `mH = −Div_M(∇f/(ψ(f)W)) + (ψℋ/W)(m − |∇f|²/ψ²)`.
pub fn mean_curvature_div(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<f64> {
    let gp = GraphPoint::new(p, f, x)?;
    let field = |q: &[f64]| -> Result<DVector<f64>> {
        let g = p.base.metric(q)?;
        let (fv, df) = scalar_grad(f.field().as_ref(), q, f.mode())?;
        let psi = p.warp.psi(fv)?;
        let grad = g
            .cholesky()
            .ok_or_else(|| GeomError::MetricNotSpd { point: q.to_vec() })?
            .solve(&df);
        let w = (df.dot(&grad) + psi * psi).sqrt();
        Ok(grad / (psi * w))
    };
    let rel = match (p.base.mode(), f.mode()) {
        (DerivativeMode::Analytic, DerivativeMode::Analytic) => DerivativeMode::DEFAULT_H,
        _ => DerivativeMode::DEFAULT_H2,
    };
    let div = p.base.divergence_with(&field, x, rel)?;
    let m = gp.dim() as f64;
    let mh = -div + (gp.psi * gp.slice_mean / gp.w) * (m - gp.grad_sq / (gp.psi * gp.psi));
    Ok(mh / m)
}

/// Normalized second mean curvature and normalized scalar curvature.
pub fn second_mean_and_scalar(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<(f64, f64)> {
    let gp = GraphPoint::new(p, f, x)?;
    let m = gp.dim();
    if m < 2 {
        return Err(GeomError::DimensionTooSmall { m, need: 2 });
    }
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    let r = scalar_from_frame(&gp, &spec)?;
    Ok((spec.second_mean().expect("m >= 2"), r))
}

/// `R = (1/(m(m−1))) Σ_{i≠j} [⟨ℜ(e_i,e_j)e_j,e_i⟩ + λ_iλ_j]` over the eigenframe.
fn scalar_from_frame(gp: &GraphPoint, spec: &ShapeSpectrum) -> Result<f64> {
    let m = gp.dim();
    let cc = gp.ambient_curvature();
    let e: Vec<AmbientVector> = (0..m).map(|i| gp.lift(&spec.frame.column(i).into_owned())).collect();
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            total += 2.0 * (cc.form(&e[i], &e[j], &e[j], &e[i])? + spec.lambdas[i] * spec.lambdas[j]);
        }
    }
    Ok(total / (m * (m - 1)) as f64)
}

/// Largest normalized Ricci curvature of the graph at the point, from the
/// Gauss equation: `Ric(e_j, e_k) = Σ_i ⟨ℜ(e_i,e_j)e_k,e_i⟩ + δ_jk λ_j(mH − λ_j)`.
pub fn graph_ricci_max(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<f64> {
    let gp = GraphPoint::new(p, f, x)?;
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    ricci_max_from_frame(&gp, &spec)
}

fn ricci_max_from_frame(gp: &GraphPoint, spec: &ShapeSpectrum) -> Result<f64> {
    let m = gp.dim();
    if m < 2 {
        return Err(GeomError::DimensionTooSmall { m, need: 2 });
    }
    let cc = gp.ambient_curvature();
    let e: Vec<AmbientVector> = (0..m).map(|i| gp.lift(&spec.frame.column(i).into_owned())).collect();
    let trace: f64 = spec.lambdas.iter().sum();
    let mut ric = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let mut s = 0.0;
            for (i, ei) in e.iter().enumerate() {
                if i != j {
                    s += cc.form(ei, &e[j], &e[k], ei)?;
                }
            }
            if j == k {
                s += spec.lambdas[j] * (trace - spec.lambdas[j]);
            }
            ric[(j, k)] = s;
            ric[(k, j)] = s;
        }
    }
    let max = ric.symmetric_eigen().eigenvalues.max();
    Ok(max / (m as f64 - 1.0))
}

/// Graph of `f̂ = σ∘f` in the Riemannian product `M × ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Companion {
    pub fhat: f64,
    /// `W/ψ(f)`.
    pub what: f64,
    /// `√(1 + |∇f̂|²)` computed from `df̂ = σ′(f) df`.
    pub what_direct: f64,
    /// `ψ(f)(λ_i + ℋ(f)Θ)`.
    pub lambdahats: Vec<f64>,
    /// `ψ(f)(H + ℋ(f)Θ)`.
    pub hhat: f64,
    /// Principal curvatures of the product graph of `f̂`, computed from
    /// scratch with the normal `η̂ = (∂_t − ∇f̂)/Ŵ`.
    pub lambdahats_direct: Vec<f64>,
    pub hhat_direct: f64,
}

pub fn conformal_companion(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<Companion> {
    let gp = GraphPoint::new(p, f, x)?;
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    companion_from(p, &gp, &spec)
}

fn companion_from(p: &WarpedProduct, gp: &GraphPoint, spec: &ShapeSpectrum) -> Result<Companion> {
    let fhat = p.warp.sigma(gp.f)?;
    let theta = gp.theta();
    let lambdahats: Vec<f64> = spec
        .lambdas
        .iter()
        .map(|l| gp.psi * (l + gp.slice_mean * theta))
        .collect();
    let hhat = gp.psi * (spec.mean() + gp.slice_mean * theta);

    // From scratch, using only ψ and its derivatives.
    let psi = gp.psi;
    let dfh = &gp.df * (-1.0 / psi);
    let d2fh = &gp.d2f * (-1.0 / psi) + &gp.df * gp.df.transpose() * (gp.dpsi / (psi * psi));
    let hess_hat = hess_from(&gp.geo, &dfh, &d2fh);
    let grad_hat_sq = dfh.dot(&(&gp.geo.ginv * &dfh));
    let what_direct = (1.0 + grad_hat_sq).sqrt();
    let b_hat = hess_hat / what_direct;
    let g_hat = &gp.geo.g + &dfh * dfh.transpose();
    let mut lambdahats_direct = principal_curvatures(&b_hat, &g_hat)?;
    lambdahats_direct.sort_by(f64::total_cmp);
    let hhat_direct = lambdahats_direct.iter().sum::<f64>() / lambdahats_direct.len() as f64;
    let mut sorted = lambdahats;
    sorted.sort_by(f64::total_cmp);
    Ok(Companion {
        fhat,
        what: gp.w / psi,
        what_direct,
        lambdahats: sorted,
        hhat,
        lambdahats_direct,
        hhat_direct,
    })
}

/// Principal curvatures of `−f` in the reflected product.
pub fn reflected_graph_curvatures(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<Vec<f64>> {
    let rp = p.reflect();
    let rf = f.reflected();
    let gp = GraphPoint::new(&rp, &rf, x)?;
    principal_curvatures(&gp.second_fundamental_form(), &gp.induced_metric())
}

/// All curvature quantities of `Γ_f` above one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPointReport {
    pub x: Vec<f64>,
    pub f_val: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub eta: Vec<f64>,
    pub theta: f64,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "H2")]
    pub h2: Option<f64>,
    /// Normalized scalar curvature (average sectional curvature).
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "normA")]
    pub norm_a: f64,
    pub fhat: f64,
    #[serde(rename = "What")]
    pub what: f64,
    pub lambdahats: Vec<f64>,
    #[serde(rename = "Hhat")]
    pub hhat: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Full pointwise report, computed from one shared [`GraphPoint`].
pub fn point_report(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<GraphPointReport> {
    let gp = GraphPoint::new(p, f, x)?;
    let b = gp.second_fundamental_form();
    let g = gp.induced_metric();
    let spec = shape_spectrum(&b, &g)?;
    let (h2, r) = if gp.dim() >= 2 {
        (spec.second_mean(), Some(scalar_from_frame(&gp, &spec)?))
    } else {
        (None, None)
    };
    let comp = companion_from(p, &gp, &spec)?;
    Ok(GraphPointReport {
        x: gp.x.clone(),
        f_val: gp.f,
        w: gp.w,
        eta: gp.normal().iter().copied().collect(),
        theta: gp.theta(),
        b: rows(&b),
        g: rows(&g),
        h: spec.mean(),
        norm_a: spec.norm(),
        lambdas: spec.lambdas.clone(),
        h2,
        r,
        fhat: comp.fhat,
        what: comp.what,
        lambdahats: comp.lambdahats,
        hhat: comp.hhat,
    })
}

/// Lightweight per-point evaluation used by the verify module.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub f: f64,
    pub lambdas: Vec<f64>,
    pub h: f64,
    pub h2: Option<f64>,
    pub r: Option<f64>,
    pub norm_a: f64,
    pub psi: f64,
    pub grad_sq: f64,
    pub theta: f64,
    pub slice_mean: f64,
    pub normal_sectional: f64,
    pub w: f64,
}

pub fn point_summary(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<PointSummary> {
    let gp = GraphPoint::new(p, f, x)?;
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    let (h2, r) = if gp.dim() >= 2 {
        (spec.second_mean(), Some(scalar_from_frame(&gp, &spec)?))
    } else {
        (None, None)
    };
    Ok(PointSummary {
        f: gp.f,
        h: spec.mean(),
        norm_a: spec.norm(),
        lambdas: spec.lambdas,
        h2,
        r,
        psi: gp.psi,
        grad_sq: gp.grad_sq,
        theta: gp.theta(),
        slice_mean: gp.slice_mean,
        normal_sectional: p.slice_normal_sectional(gp.f)?,
        w: gp.w,
    })
}

/// Largest normalized graph Ricci curvature; exposed for the verify module.
pub fn ricci_max_at(gp: &GraphPoint) -> Result<f64> {
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    ricci_max_from_frame(gp, &spec)
}

/// Companion data at a prepared point; exposed for the verify module.
pub fn companion_at(p: &WarpedProduct, gp: &GraphPoint) -> Result<Companion> {
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    companion_from(p, gp, &spec)
}

/// Scalar curvature and spectrum at a prepared point.
pub fn spectrum_and_scalar(gp: &GraphPoint) -> Result<(ShapeSpectrum, Option<f64>)> {
    let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric())?;
    let r = if gp.dim() >= 2 {
        Some(scalar_from_frame(gp, &spec)?)
    } else {
        None
    };
    Ok((spec, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FnMetric, ExprField};
    use crate::manifold::{BoxDomain, ChartMetric};
    use crate::models::{builtin_graph, catalog, lookup};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn hyperbolic_bump() -> GraphFunction {
        builtin_graph("bump_hyperbolic", &params(&[("a", 0.3)]), 2).unwrap()
    }

    fn random_half_plane_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.4..2.5)]
    }

    #[test]
    fn half_plane_log_graph() {
        let model = lookup("product-hyperbolic-halfplane", 2).unwrap();
        for a in [0.5, 1.0, 2.0] {
            let g = builtin_graph("a_log_y", &params(&[("a", a)]), 2).unwrap();
            let x = [0.0, 1.0];
            let w = (1.0 + a * a).sqrt();
            let (eta, wv, theta) = normal_and_angle(&model.product, &g, &x).unwrap();
            assert!((wv - w).abs() < 1e-14 && (theta + 1.0 / w).abs() < 1e-14);
            assert!((eta[2] + 1.0 / w).abs() < 1e-14);
            let gm = induced_metric(&model.product, &g, &x).unwrap();
            assert!((gm[(0, 0)] - 1.0).abs() < 1e-14 && (gm[(1, 1)] - (1.0 + a * a)).abs() < 1e-14);
            let r = point_report(&model.product, &g, &x).unwrap();
            // With respect to η the nonzero curvature comes out positive; see
            // the acceptance suite for the sign discussion.
            assert!(r.lambdas[0].abs() < 1e-14);
            assert!((r.lambdas[1] - a / w).abs() < 1e-12);
            assert!((r.norm_a - a / w).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_is_unit_and_orthogonal() {
        let model = lookup("cosh-hyperbolic", 2).unwrap();
        let f = hyperbolic_bump();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = random_half_plane_point(&mut rng);
            let gp = GraphPoint::new(&model.product, &f, &x).unwrap();
            let eta = AmbientVector::from_components(&gp.normal());
            let cc = gp.ambient_curvature();
            assert!((cc.inner(&eta, &eta) - 1.0).abs() < 1e-12);
            for i in 0..2 {
                let mut e = DVector::zeros(2);
                e[i] = 1.0;
                assert!(cc.inner(&eta, &gp.lift(&e)).abs() < 1e-12);
            }
            assert!((gp.theta() * gp.w + gp.psi).abs() < 1e-12);
            assert!((cc.inner(&eta, &AmbientVector::new(DVector::zeros(2), 1.0)) - gp.theta()).abs() < 1e-14);
        }
    }

    #[test]
    fn slices_are_umbilic_in_every_model() {
        for m in [2, 3] {
            for model in catalog(m) {
                let t0 = model.product.warp.t0 + 0.1;
                let f = builtin_graph("slice", &params(&[("t0", t0)]), m).unwrap();
                let x = model.base_kind.sample_center(m);
                let gp = GraphPoint::new(&model.product, &f, &x).unwrap();
                let spec = shape_spectrum(&gp.second_fundamental_form(), &gp.induced_metric()).unwrap();
                let hc = (model.expected_h)(t0);
                for l in &spec.lambdas {
                    assert!((l - hc).abs() < 1e-12, "{} {l} {hc}", model.name);
                }
                let comp = companion_at(&model.product, &gp).unwrap();
                assert!(comp.lambdahats.iter().all(|l| l.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn trace_and_divergence_mean_curvature_agree() {
        let model = lookup("cosh-hyperbolic", 2).unwrap();
        let f = hyperbolic_bump();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = random_half_plane_point(&mut rng);
            let r = point_report(&model.product, &f, &x).unwrap();
            let hd = mean_curvature_div(&model.product, &f, &x).unwrap();
            assert!((mean_curvature_trace(&r) - hd).abs() < 1e-8, "{} {hd}", r.h);
            let fd = f.clone().with_mode(DerivativeMode::finite_difference());
            let pf = WarpedProduct::new(
                model.product.base.with_mode(DerivativeMode::finite_difference()),
                model.product.warp.clone().with_mode(DerivativeMode::finite_difference()),
            );
            let rf = point_report(&pf, &fd, &x).unwrap();
            let hdf = mean_curvature_div(&pf, &fd, &x).unwrap();
            assert!((rf.h - hdf).abs() < 1e-5 && (rf.h - r.h).abs() < 1e-5);
        }
    }

    #[test]
    fn companion_relations_hold_from_scratch() {
        let model = lookup("cosh-hyperbolic", 2).unwrap();
        let f = hyperbolic_bump();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_half_plane_point(&mut rng);
            let c = conformal_companion(&model.product, &f, &x).unwrap();
            assert!((c.what - c.what_direct).abs() < 1e-12);
            assert!((c.hhat - c.hhat_direct).abs() < 1e-10, "{} {}", c.hhat, c.hhat_direct);
            for (a, b) in c.lambdahats.iter().zip(&c.lambdahats_direct) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_warp_companion_is_a_translate() {
        let model = lookup("product-euclidean", 2).unwrap();
        let f = builtin_graph("bump", &params(&[("a", 0.4), ("b", 0.2)]), 2).unwrap();
        let x = [0.3, -0.2];
        let r = point_report(&model.product, &f, &x).unwrap();
        assert!((r.fhat - (0.0 - (r.f_val - 0.0))).abs() < 1e-12);
        for (a, b) in r.lambdas.iter().zip(&r.lambdahats) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.h - r.hhat).abs() < 1e-12);
    }

    #[test]
    fn reflection_negates_curvatures() {
        let model = lookup("cosh-hyperbolic", 2).unwrap();
        let f = hyperbolic_bump();
        let x = [0.2, 0.8];
        let r = point_report(&model.product, &f, &x).unwrap();
        let refl = reflected_graph_curvatures(&model.product, &f, &x).unwrap();
        let expect: Vec<f64> = r.lambdas.iter().rev().map(|l| -l).collect();
        for (a, b) in refl.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = reflected_graph_curvatures(&model.product.reflect(), &f.reflected(), &x).unwrap();
        for (a, b) in back.iter().zip(&r.lambdas) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = builtin_graph("slice", &params(&[("t0", 0.7)]), 2).unwrap();
        for l in reflected_graph_curvatures(&model.product, &s, &x).unwrap() {
            assert!((l + 0.7f64.tanh()).abs() < 1e-12);
        }
    }

    /// Oracle independent of the Gauss equation: intrinsic curvature of the
    /// induced metric `ψ(f)²g + df⊗df`, pulled back to the chart.
    fn intrinsic_curvature(model: &crate::models::ModelSpace, src: &str, x: &[f64]) -> f64 {
        let f = ExprField::parse(src, 2).unwrap();
        let p = model.product.clone();
        let base = p.base.clone();
        let warp = p.warp.clone();
        let metric = FnMetric::new(2, move |q: &[f64]| {
            let (_, df) = crate::fields::scalar_grad(&f, q, DerivativeMode::Analytic).unwrap();
            let psi = warp.psi(f.value(q)).unwrap();
            base.metric(q).unwrap() * (psi * psi) + &df * df.transpose()
        });
        let chart = ChartMetric::new(
            Arc::new(metric),
            BoxDomain::new(vec![-5.0, 0.01], vec![5.0, 50.0]).unwrap(),
            DerivativeMode::finite_difference(),
        )
        .unwrap();
        let e0 = DVector::from_vec(vec![1.0, 0.0]);
        let e1 = DVector::from_vec(vec![0.0, 1.0]);
        chart.sectional(x, &e0, &e1).unwrap()
    }

    #[test]
    fn scalar_curvature_matches_intrinsic_oracle() {
        let src = "0.3*exp(-x1^2 - log(x2)^2)";
        for name in ["cosh-hyperbolic", "product-hyperbolic-halfplane"] {
            let model = lookup(name, 2).unwrap();
            let f = hyperbolic_bump();
            for x in [[0.1, 0.9], [-0.5, 1.4], [0.7, 0.6]] {
                let (_, r) = second_mean_and_scalar(&model.product, &f, &x).unwrap();
                let k = intrinsic_curvature(&model, src, &x);
                assert!((r - k).abs() < 1e-5, "{name} {r} {k}");
            }
        }
    }

    #[test]
    fn lemma_equality_for_space_form_models() {
        let model = lookup("cosh-hyperbolic", 3).unwrap();
        let f = builtin_graph("bump_hyperbolic", &params(&[("a", 0.4), ("s", 1.3)]), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
            let s = point_summary(&model.product, &f, &x).unwrap();
            let resid = s.r.unwrap() - s.h2.unwrap() - s.normal_sectional;
            assert!(resid.abs() < 1e-10, "{resid}");
        }
    }

    #[test]
    fn graph_ricci_of_slice_is_slice_curvature() {
        // Slice in cosh-hyperbolic: intrinsic curvature −sech²t₀ everywhere.
        let model = lookup("cosh-hyperbolic", 3).unwrap();
        let t0 = 0.6f64;
        let f = builtin_graph("slice", &params(&[("t0", t0)]), 3).unwrap();
        let r = graph_ricci_max(&model.product, &f, &[0.0, 0.0, 1.0]).unwrap();
        assert!((r + 1.0 / t0.cosh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn value_outside_interval_is_reported() {
        let model = lookup("linear-sphere", 2).unwrap();
        let f = builtin_graph("slice", &params(&[("t0", -1.0)]), 2).unwrap();
        assert!(matches!(
            point_report(&model.product, &f, &[1.0, 0.0]),
            Err(GeomError::ValueOutsideInterval { .. })
        ));
    }
}
