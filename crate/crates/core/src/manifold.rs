//! Riemannian geometry on a single coordinate chart.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::fields::{fd_jacobian, fd_metric_jet, scalar_jet, DerivativeMode, MetricField, MetricJet, ScalarField};

/// Open axis-aligned box. Bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GeomError::InvalidRegion(format!(
                "bounds of length {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(GeomError::InvalidRegion("empty box".into()));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn unbounded(m: usize) -> Self {
        BoxDomain {
            lo: vec![f64::NEG_INFINITY; m],
            hi: vec![f64::INFINITY; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| v.is_finite() && *v > *a && *v < *b)
    }

    /// Whether `x` stays at least `margin` away from every face.
    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| v.is_finite() && *v - margin > *a && *v + margin < *b)
    }
}

/// A base point paired with a vector in chart components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub base: Vec<f64>,
    pub vec: DVector<f64>,
}

impl TangentData {
    pub fn new(domain: &BoxDomain, base: Vec<f64>, vec: DVector<f64>) -> Result<Self> {
        if !domain.contains(&base) {
            return Err(GeomError::PointOutsideDomain { point: base });
        }
        if vec.len() != base.len() {
            return Err(GeomError::DimensionMismatch {
                expected: base.len(),
                got: vec.len(),
            });
        }
        Ok(TangentData { base, vec })
    }
}

/// Lowered curvature tensor `R_ijkl = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    m: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(m: usize) -> Self {
        Riemann {
            m,
            data: vec![0.0; m * m * m * m],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.m + j) * self.m + k) * self.m + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.idx(i, j, k, l);
        self.data[n] = v;
    }

    /// `R(a, b, c, d)` for vectors in chart components.
    pub fn contract(&self, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let m = self.m;
        let mut s = 0.0;
        for i in 0..m {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..m {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..m {
                        s += a[i] * b[j] * c[k] * d[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        s
    }

    /// Components of `R(a, b)c` with the index raised by `ginv`.
    pub fn apply(&self, ginv: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
        let m = self.m;
        let mut low = DVector::zeros(m);
        for l in 0..m {
            let mut e = DVector::zeros(m);
            e[l] = 1.0;
            low[l] = self.contract(a, b, c, &e);
        }
        ginv * low
    }

    /// Largest violation of the pair symmetries and the first Bianchi identity.
    pub fn symmetry_residual(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let r = self.get(i, j, k, l);
                        worst = worst
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs())
                            .max((r - self.get(k, l, i, j)).abs())
                            .max((r + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Everything about the metric at one point that the covariant operations use.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub jet: MetricJet,
    /// `gamma[k][(i, j)] = Γ^k_ij`.
    pub gamma: Vec<DMatrix<f64>>,
    /// `gamma_low[l][(i, j)] = Γ_{l,ij} = g_lk Γ^k_ij`.
    pub gamma_low: Vec<DMatrix<f64>>,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    pub fn det(&self) -> f64 {
        self.g.determinant()
    }
}

/// Riemannian metric on a coordinate box.
#[derive(Clone)]
pub struct ChartMetric {
    field: Arc<dyn MetricField>,
    domain: BoxDomain,
    mode: DerivativeMode,
}

impl std::fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartMetric")
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .finish()
    }
}

fn cholesky(g: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(g.clone())
}

impl ChartMetric {
    pub fn new(field: Arc<dyn MetricField>, domain: BoxDomain, mode: DerivativeMode) -> Result<Self> {
        if field.dim() != domain.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: domain.dim(),
                got: field.dim(),
            });
        }
        Ok(ChartMetric { field, domain, mode })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn field(&self) -> &Arc<dyn MetricField> {
        &self.field
    }

    pub fn with_mode(&self, mode: DerivativeMode) -> Self {
        ChartMetric {
            mode,
            ..self.clone()
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(GeomError::PointOutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Metric coefficients at `x`, checked for symmetry and positivity.
    pub fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let g = self.field.eval(x);
        check_spd(&g, x)?;
        Ok(g)
    }

    /// Metric value and derivatives under the chart's derivative mode.
    pub fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.check_point(x)?;
        match self.mode {
            DerivativeMode::Analytic => self.field.jet(x).ok_or(GeomError::DerivativeUnavailable),
            DerivativeMode::FiniteDifference { h, h2 } => Ok(fd_metric_jet(self.field.as_ref(), x, h, h2)),
        }
    }

    /// Metric, inverse and connection coefficients at `x`.
    pub fn geometry(&self, x: &[f64]) -> Result<PointGeometry> {
        let jet = self.jet(x)?;
        let g = jet.g.clone();
        check_spd(&g, x)?;
        let chol = cholesky(&g).ok_or_else(|| GeomError::MetricNotSpd { point: x.to_vec() })?;
        let ginv = chol.inverse();
        let m = g.nrows();
        let gamma_low: Vec<DMatrix<f64>> = (0..m)
            .map(|l| {
                DMatrix::from_fn(m, m, |i, j| {
                    0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)])
                })
            })
            .collect();
        let gamma: Vec<DMatrix<f64>> = (0..m)
            .map(|k| {
                let mut out = DMatrix::zeros(m, m);
                for (l, gl) in gamma_low.iter().enumerate() {
                    let c = ginv[(k, l)];
                    if c != 0.0 {
                        out += gl * c;
                    }
                }
                out
            })
            .collect();
        Ok(PointGeometry {
            g,
            ginv,
            jet,
            gamma,
            gamma_low,
        })
    }

    /// Connection coefficients, `result[k][(i, j)] = Γ^k_ij`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        Ok(self.geometry(x)?.gamma)
    }

    /// Lowered curvature tensor at `x`.
    pub fn riemann(&self, x: &[f64]) -> Result<Riemann> {
        Ok(riemann_from(&self.geometry(x)?))
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional(&self, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let geo = self.geometry(x)?;
        let r = riemann_from(&geo);
        sectional_from(&geo, &r, u, v)
    }

    /// Normalized Ricci curvature in the unit direction `u`.
    pub fn ricci_dir(&self, x: &[f64], u: &DVector<f64>) -> Result<f64> {
        let geo = self.geometry(x)?;
        let r = riemann_from(&geo);
        ricci_dir_from(&geo, &r, u)
    }

    /// Riemannian gradient of `f`, using `mode` for the derivatives of `f`.
    pub fn grad_with(&self, f: &dyn ScalarField, mode: DerivativeMode, x: &[f64]) -> Result<DVector<f64>> {
        let g = self.metric(x)?;
        let (_, df, _) = scalar_jet(f, x, mode)?;
        let chol = cholesky(&g).ok_or_else(|| GeomError::MetricNotSpd { point: x.to_vec() })?;
        Ok(chol.solve(&df))
    }

    pub fn grad(&self, f: &dyn ScalarField, x: &[f64]) -> Result<DVector<f64>> {
        self.grad_with(f, self.mode, x)
    }

    /// Covariant Hessian of `f`.
    pub fn hess_with(&self, f: &dyn ScalarField, mode: DerivativeMode, x: &[f64]) -> Result<DMatrix<f64>> {
        let geo = self.geometry(x)?;
        let (_, df, d2f) = scalar_jet(f, x, mode)?;
        Ok(hess_from(&geo, &df, &d2f))
    }

    pub fn hess(&self, f: &dyn ScalarField, x: &[f64]) -> Result<DMatrix<f64>> {
        self.hess_with(f, self.mode, x)
    }

    /// Divergence via `(1/√det g) ∂_i(√det g X^i)`, differencing with
    /// relative step `rel`.
    pub fn divergence_with(
        &self,
        field: &(dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync),
        x: &[f64],
        rel: f64,
    ) -> Result<f64> {
        self.check_point(x)?;
        let weighted = |p: &[f64]| -> Result<DVector<f64>> {
            let g = self.field.eval(p);
            Ok(field(p)? * g.determinant().sqrt())
        };
        let jac = fd_jacobian(weighted, x, rel)?;
        let sqrt_det = self.metric(x)?.determinant().sqrt();
        Ok(jac.trace() / sqrt_det)
    }

    pub fn divergence(&self, field: &(dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync), x: &[f64]) -> Result<f64> {
        self.divergence_with(field, x, self.mode.outer_step())
    }

    /// Divergence as the trace of the covariant derivative,
    /// `∂_i X^i + Γ^i_ik X^k`.
    pub fn divergence_covariant(
        &self,
        field: &(dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync),
        x: &[f64],
    ) -> Result<f64> {
        let geo = self.geometry(x)?;
        let jac = fd_jacobian(field, x, self.mode.outer_step())?;
        let v = field(x)?;
        let m = self.dim();
        let mut s = jac.trace();
        for i in 0..m {
            for k in 0..m {
                s += geo.gamma[i][(i, k)] * v[k];
            }
        }
        Ok(s)
    }
}

fn check_spd(g: &DMatrix<f64>, x: &[f64]) -> Result<()> {
    let scale = g.amax().max(1.0);
    let asym = (g - g.transpose()).amax();
    if !g.iter().all(|v| v.is_finite()) || asym > 1e-12 * scale || cholesky(g).is_none() {
        return Err(GeomError::MetricNotSpd { point: x.to_vec() });
    }
    Ok(())
}

/// `R_ijkl = ∂_iΓ_{l,jk} − ∂_jΓ_{l,ik} − Γ^b_jk Γ_{b,il} + Γ^b_ik Γ_{b,jl}`.
pub fn riemann_from(geo: &PointGeometry) -> Riemann {
    let m = geo.dim();
    let ddg = &geo.jet.ddg;
    // ∂_a Γ_{l,jk} = ½(∂_a∂_j g_kl + ∂_a∂_k g_jl − ∂_a∂_l g_jk)
    let d_gamma = |a: usize, l: usize, j: usize, k: usize| -> f64 {
        0.5 * (ddg[a * m + j][(k, l)] + ddg[a * m + k][(j, l)] - ddg[a * m + l][(j, k)])
    };
    let mut r = Riemann::zeros(m);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            for k in 0..m {
                for l in 0..m {
                    let mut v = d_gamma(i, l, j, k) - d_gamma(j, l, i, k);
                    for b in 0..m {
                        v += -geo.gamma[b][(j, k)] * geo.gamma_low[b][(i, l)]
                            + geo.gamma[b][(i, k)] * geo.gamma_low[b][(j, l)];
                    }
                    r.set(i, j, k, l, v);
                }
            }
        }
    }
    r
}

pub const DEGENERATE_PLANE: f64 = 1e-14;

/// Sectional curvature from precomputed geometry.
pub fn sectional_from(geo: &PointGeometry, r: &Riemann, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let m = geo.dim();
    for w in [u, v] {
        if w.len() != m {
            return Err(GeomError::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
    }
    let uu = geo.inner(u, u);
    let vv = geo.inner(v, v);
    let uv = geo.inner(u, v);
    let wedge = uu * vv - uv * uv;
    if wedge < DEGENERATE_PLANE {
        return Err(GeomError::DegeneratePlane { wedge });
    }
    Ok(r.contract(u, v, v, u) / wedge)
}

/// Normalized Ricci curvature `g^{ad} R_{a j k d} u^j u^k / (m − 1)`.
pub fn ricci_dir_from(geo: &PointGeometry, r: &Riemann, u: &DVector<f64>) -> Result<f64> {
    let m = geo.dim();
    if m < 2 {
        return Err(GeomError::DimensionTooSmall { m, need: 2 });
    }
    let norm = geo.inner(u, u).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GeomError::NonUnitVector { norm });
    }
    ricci_form(geo, r).map(|rc| (u.transpose() * rc * u)[(0, 0)] / (m as f64 - 1.0))
}

/// Ricci form `Ric_jk = g^{ad} R_{a j k d}` (not normalized).
pub fn ricci_form(geo: &PointGeometry, r: &Riemann) -> Result<DMatrix<f64>> {
    let m = geo.dim();
    Ok(DMatrix::from_fn(m, m, |j, k| {
        let mut s = 0.0;
        for a in 0..m {
            for d in 0..m {
                s += geo.ginv[(a, d)] * r.get(a, j, k, d);
            }
        }
        s
    }))
}

/// Smallest normalized Ricci curvature at the point (smallest eigenvalue of
/// `g^{-1} Ric / (m − 1)`).
pub fn min_ricci_from(geo: &PointGeometry, r: &Riemann) -> Result<f64> {
    let m = geo.dim();
    let rc = ricci_form(geo, r)?;
    let (lo, _) = generalized_extremes(&rc, &geo.g)?;
    Ok(lo / (m as f64 - 1.0))
}

/// Covariant Hessian from coordinate derivatives.
pub fn hess_from(geo: &PointGeometry, df: &DVector<f64>, d2f: &DMatrix<f64>) -> DMatrix<f64> {
    let m = geo.dim();
    let mut h = d2f.clone();
    for (k, gk) in geo.gamma.iter().enumerate() {
        if df[k] != 0.0 {
            h -= gk * df[k];
        }
    }
    // Symmetrize away rounding noise.
    DMatrix::from_fn(m, m, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]))
}

/// Extreme generalized eigenvalues of the pencil `(a, b)` with `b` SPD.
pub fn generalized_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (vals, _) = generalized_eigen(a, b)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Generalized symmetric-definite eigenproblem `a v = λ b v` via Cholesky
/// reduction. Eigenvalues ascend; eigenvectors (columns) are `b`-orthonormal.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(b.clone()).ok_or(GeomError::CholeskyFailure)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(GeomError::CholeskyFailure)?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vecs = l_inv.transpose() * y;
    Ok((vals, vecs))
}
