//! Warping profiles, slice curvatures, the conformal reparametrization `σ`
//! and the ambient warped metric `ψ(t)² g_M ⊕ dt²`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::fields::{fd_derivs, DerivativeMode, MetricField, MetricJet, Univariate};
use crate::manifold::{riemann_from, BoxDomain, ChartMetric, PointGeometry, Riemann};
use crate::quadrature::{self, Tail};

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(GeomError::InvalidRegion(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn positive() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t > self.lo && t < self.hi
    }

    pub fn negated(&self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// Default anchor: the midpoint, or a unit step inside a half-line.
    pub fn default_anchor(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }
}

/// Which single sign to corrupt, for mutation testing of the identity suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignFlip {
    /// The Hessian term of the second fundamental form.
    SecondFormHess,
    /// The `ψ³ℋ/W ⟨v,w⟩` term of the second fundamental form.
    SecondFormMetric,
    /// The `2ψℋ/W ⟨∇f,v⟩⟨∇f,w⟩` term of the second fundamental form.
    SecondFormGradient,
    /// The angle function Θ.
    Angle,
    /// The slice mean curvature ℋ.
    SliceMean,
    /// The slice normal sectional curvature 𝒦⊥.
    NormalSectional,
}

impl SignFlip {
    pub const ALL: [SignFlip; 6] = [
        SignFlip::SecondFormHess,
        SignFlip::SecondFormMetric,
        SignFlip::SecondFormGradient,
        SignFlip::Angle,
        SignFlip::SliceMean,
        SignFlip::NormalSectional,
    ];
}

/// Classification of `∫_I 1/ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaClass {
    Finite,
    SigmaBoundedAboveOnly,
    SigmaBoundedBelowOnly,
    UnboundedBoth,
}

impl AreaClass {
    pub fn sigma_bounded_above(&self) -> bool {
        matches!(self, AreaClass::Finite | AreaClass::SigmaBoundedAboveOnly)
    }
    pub fn sigma_bounded_below(&self) -> bool {
        matches!(self, AreaClass::Finite | AreaClass::SigmaBoundedBelowOnly)
    }
}

/// Result of [`WarpingFunction::reciprocal_area_class`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub class: AreaClass,
    /// `∫_I 1/ψ` when finite.
    pub total: Option<f64>,
}

/// `ψ(−t)` with derivatives `−ψ′(−t)`, `ψ″(−t)`.
struct Reflected(Arc<dyn Univariate>);

impl Univariate for Reflected {
    fn value(&self, t: f64) -> f64 {
        self.0.value(-t)
    }
    fn derivs(&self, t: f64) -> Option<(f64, f64)> {
        self.0.derivs(-t).map(|(d1, d2)| (-d1, d2))
    }
}

/// Positive warping profile on an open interval, with conformal anchors.
#[derive(Clone)]
pub struct WarpingFunction {
    profile: Arc<dyn Univariate>,
    /// The unreflected profile, kept so double reflection is exact.
    original: Arc<dyn Univariate>,
    reflected: bool,
    mode: DerivativeMode,
    interval: Interval,
    pub t0: f64,
    pub sigma0: f64,
    pub quad_tol: f64,
    pub quad_budget: usize,
    pub divergence_cap: f64,
}

impl std::fmt::Debug for WarpingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WarpingFunction")
            .field("interval", &self.interval)
            .field("mode", &self.mode)
            .field("t0", &self.t0)
            .field("sigma0", &self.sigma0)
            .field("reflected", &self.reflected)
            .finish()
    }
}

impl WarpingFunction {
    /// Profile with default anchors (midpoint of `I`, σ₀ = 0).
    pub fn new(profile: Arc<dyn Univariate>, interval: Interval, mode: DerivativeMode) -> Self {
        WarpingFunction {
            original: profile.clone(),
            profile,
            reflected: false,
            mode,
            interval,
            t0: interval.default_anchor(),
            sigma0: 0.0,
            quad_tol: quadrature::DEFAULT_TOL,
            quad_budget: quadrature::DEFAULT_BUDGET,
            divergence_cap: quadrature::DEFAULT_CAP,
        }
    }

    pub fn with_anchors(mut self, t0: f64, sigma0: f64) -> Result<Self> {
        if !self.interval.contains(t0) {
            return Err(GeomError::OutsideInterval {
                t: t0,
                lo: self.interval.lo,
                hi: self.interval.hi,
            });
        }
        self.t0 = t0;
        self.sigma0 = sigma0;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn profile(&self) -> &Arc<dyn Univariate> {
        &self.profile
    }

    fn check(&self, t: f64) -> Result<()> {
        if !self.interval.contains(t) {
            return Err(GeomError::OutsideInterval {
                t,
                lo: self.interval.lo,
                hi: self.interval.hi,
            });
        }
        Ok(())
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let v = self.profile.value(t);
        if !(v > 0.0) || !v.is_finite() {
            return Err(GeomError::EvaluationFailure {
                point: vec![t],
                message: format!("warping function is not positive: {v}"),
            });
        }
        Ok(v)
    }

    /// `(ψ, ψ′, ψ″)` at `t`.
    pub fn jet(&self, t: f64) -> Result<(f64, f64, f64)> {
        let v = self.psi(t)?;
        let (d1, d2) = match self.mode {
            DerivativeMode::Analytic => self.profile.derivs(t).ok_or(GeomError::DerivativeUnavailable)?,
            DerivativeMode::FiniteDifference { h, h2 } => fd_derivs(self.profile.as_ref(), t, h, h2),
        };
        Ok((v, d1, d2))
    }

    /// Slice mean curvature ℋ = ψ′/ψ (with respect to −∂_t).
    pub fn slice_mean(&self, t: f64) -> Result<f64> {
        let (v, d1, _) = self.jet(t)?;
        Ok(d1 / v)
    }

    /// Slice normal sectional curvature 𝒦⊥ = −ψ″/ψ.
    pub fn slice_normal_sectional(&self, t: f64) -> Result<f64> {
        let (v, _, d2) = self.jet(t)?;
        Ok(-d2 / v)
    }

    /// ℋ′ = ψ″/ψ − (ψ′/ψ)².
    pub fn slice_mean_derivative(&self, t: f64) -> Result<f64> {
        let (v, d1, d2) = self.jet(t)?;
        Ok(d2 / v - (d1 / v).powi(2))
    }

    /// `σ(t) = σ₀ − ∫_{t₀}^t du/ψ(u)`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if t == self.t0 {
            return Ok(self.sigma0);
        }
        let f = |u: f64| 1.0 / self.profile.value(u);
        let integral = quadrature::integrate(&f, self.t0, t, self.quad_tol, self.quad_budget)?;
        Ok(self.sigma0 - integral)
    }

    /// `σ′(t) = −1/ψ(t)`.
    pub fn sigma_prime(&self, t: f64) -> Result<f64> {
        Ok(-1.0 / self.psi(t)?)
    }

    /// Decides whether `1/ψ` is integrable toward each end of `I`.
    pub fn reciprocal_area_class(&self) -> Result<AreaReport> {
        let f = |u: f64| 1.0 / self.profile.value(u);
        let probe = |end: f64| quadrature::probe_tail(&f, self.t0, end, self.divergence_cap, self.quad_tol, self.quad_budget);
        let upper = probe(self.interval.hi)?;
        let lower = probe(self.interval.lo)?;
        let (class, total) = match (lower, upper) {
            (Tail::Finite(a), Tail::Finite(b)) => (AreaClass::Finite, Some(a + b)),
            (Tail::Infinite, Tail::Finite(_)) => (AreaClass::SigmaBoundedBelowOnly, None),
            (Tail::Finite(_), Tail::Infinite) => (AreaClass::SigmaBoundedAboveOnly, None),
            (Tail::Infinite, Tail::Infinite) => (AreaClass::UnboundedBoth, None),
        };
        Ok(AreaReport { class, total })
    }

    /// `ψ̄(t) = ψ(−t)` on `−I`, with anchors `(−t₀, −σ₀)` so that `σ̄(−t) = −σ(t)`.
    pub fn reflect(&self) -> Self {
        let (profile, reflected) = if self.reflected {
            (self.original.clone(), false)
        } else {
            (Arc::new(Reflected(self.original.clone())) as Arc<dyn Univariate>, true)
        };
        WarpingFunction {
            profile,
            original: self.original.clone(),
            reflected,
            interval: self.interval.negated(),
            t0: -self.t0,
            sigma0: -self.sigma0,
            ..self.clone()
        }
    }
}

/// `ψ(t)² g_M(x) ⊕ dt²` as a metric on the product chart.
struct AmbientField {
    base: Arc<dyn MetricField>,
    warp: Arc<dyn Univariate>,
}

impl MetricField for AmbientField {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.base.dim();
        let p = self.warp.value(x[m]);
        let g = self.base.eval(&x[..m]);
        let mut out = DMatrix::zeros(m + 1, m + 1);
        out.view_mut((0, 0), (m, m)).copy_from(&(g * (p * p)));
        out[(m, m)] = 1.0;
        out
    }

    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let m = self.base.dim();
        let n = m + 1;
        let t = x[m];
        let bj = self.base.jet(&x[..m])?;
        let (d1, d2) = self.warp.derivs(t)?;
        let p = self.warp.value(t);
        let embed = |blk: &DMatrix<f64>, corner: f64| {
            let mut out = DMatrix::zeros(n, n);
            out.view_mut((0, 0), (m, m)).copy_from(blk);
            out[(m, m)] = corner;
            out
        };
        let g = embed(&(&bj.g * (p * p)), 1.0);
        let mut dg = Vec::with_capacity(n);
        for k in 0..m {
            dg.push(embed(&(&bj.dg[k] * (p * p)), 0.0));
        }
        dg.push(embed(&(&bj.g * (2.0 * p * d1)), 0.0));
        let mut ddg = vec![DMatrix::zeros(n, n); n * n];
        for k in 0..m {
            for l in 0..m {
                ddg[k * n + l] = embed(&(&bj.ddg[k * m + l] * (p * p)), 0.0);
            }
            let mixed = embed(&(&bj.dg[k] * (2.0 * p * d1)), 0.0);
            ddg[k * n + m] = mixed.clone();
            ddg[m * n + k] = mixed;
        }
        ddg[m * n + m] = embed(&(&bj.g * (2.0 * (d1 * d1 + p * d2))), 0.0);
        Some(MetricJet { g, dg, ddg })
    }
}

/// Ambient vector split as base part plus a `∂_t` coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientVector {
    pub base: DVector<f64>,
    pub t: f64,
}

impl AmbientVector {
    pub fn new(base: DVector<f64>, t: f64) -> Self {
        AmbientVector { base, t }
    }

    pub fn from_components(v: &DVector<f64>) -> Self {
        let m = v.len() - 1;
        AmbientVector {
            base: v.rows(0, m).into_owned(),
            t: v[m],
        }
    }

    pub fn to_components(&self) -> DVector<f64> {
        let m = self.base.len();
        DVector::from_fn(m + 1, |i, _| if i < m { self.base[i] } else { self.t })
    }
}

/// The warped product `M ×_ψ I`. The fiber is the last coordinate.
#[derive(Debug, Clone)]
pub struct WarpedProduct {
    pub base: ChartMetric,
    pub warp: WarpingFunction,
    flip: Option<SignFlip>,
}

impl WarpedProduct {
    pub fn new(base: ChartMetric, warp: WarpingFunction) -> Self {
        WarpedProduct { base, warp, flip: None }
    }

    /// Copy with one deliberately corrupted sign (mutation fixture).
    pub fn with_sign_flip(&self, flip: Option<SignFlip>) -> Self {
        WarpedProduct { flip, ..self.clone() }
    }

    pub fn sign_flip(&self) -> Option<SignFlip> {
        self.flip
    }

    pub(crate) fn flip_sign(&self, which: SignFlip) -> f64 {
        if self.flip == Some(which) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Whether every derivative is available in closed form.
    pub fn is_analytic(&self) -> bool {
        self.base.mode().is_analytic() && self.warp.mode().is_analytic()
    }

    /// ℋ(t), as used by the graph formulas.
    pub fn slice_mean(&self, t: f64) -> Result<f64> {
        Ok(self.flip_sign(SignFlip::SliceMean) * self.warp.slice_mean(t)?)
    }

    /// 𝒦⊥(t), as used by the graph formulas.
    pub fn slice_normal_sectional(&self, t: f64) -> Result<f64> {
        Ok(self.flip_sign(SignFlip::NormalSectional) * self.warp.slice_normal_sectional(t)?)
    }

    /// 𝒦(p, t) = K_M(u, v)/ψ(t)².
    pub fn slice_sectional(&self, x: &[f64], t: f64, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let p = self.warp.psi(t)?;
        Ok(self.base.sectional(x, u, v)? / (p * p))
    }

    /// Product chart domain: base box × I.
    pub fn ambient_domain(&self) -> BoxDomain {
        let d = self.base.domain();
        let mut lo = d.lo.clone();
        let mut hi = d.hi.clone();
        lo.push(self.warp.interval().lo);
        hi.push(self.warp.interval().hi);
        BoxDomain { lo, hi }
    }

    /// `diag(ψ(t)² g_M(x), 1)`.
    pub fn ambient_metric(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let p = self.warp.psi(t)?;
        let g = self.base.metric(x)?;
        let m = g.nrows();
        let mut out = DMatrix::zeros(m + 1, m + 1);
        out.view_mut((0, 0), (m, m)).copy_from(&(g * (p * p)));
        out[(m, m)] = 1.0;
        Ok(out)
    }

    /// The warped metric as a chart metric on the product box, so the
    /// generic chart machinery can be run on it.
    pub fn ambient_chart(&self) -> ChartMetric {
        let field = Arc::new(AmbientField {
            base: self.base.field().clone(),
            warp: self.warp.profile().clone(),
        });
        let mode = if self.is_analytic() {
            DerivativeMode::Analytic
        } else {
            match (self.base.mode(), self.warp.mode()) {
                (DerivativeMode::FiniteDifference { h, h2 }, _) | (_, DerivativeMode::FiniteDifference { h, h2 }) => {
                    DerivativeMode::FiniteDifference { h, h2 }
                }
                _ => DerivativeMode::finite_difference(),
            }
        };
        ChartMetric::new(field, self.ambient_domain(), mode).expect("ambient dimensions agree")
    }

    /// Closed-form curvature evaluator at `(x, t)`; see [`ClosedCurvature`].
    pub fn closed_curvature(&self, x: &[f64], t: f64) -> Result<ClosedCurvature> {
        let geo = self.base.geometry(x)?;
        let (p, d1, d2) = self.warp.jet(t)?;
        Ok(ClosedCurvature::from_parts(geo, p, d1, d2))
    }

    /// `ℜ(a, b)c` of the warped metric at `(x, t)` from the closed forms.
    pub fn warped_riemann_closed(
        &self,
        x: &[f64],
        t: f64,
        a: &AmbientVector,
        b: &AmbientVector,
        c: &AmbientVector,
    ) -> Result<AmbientVector> {
        self.closed_curvature(x, t)?.apply(a, b, c)
    }

    /// Warped inner product of two ambient vectors at `(x, t)`.
    pub fn ambient_inner(&self, x: &[f64], t: f64, u: &AmbientVector, v: &AmbientVector) -> Result<f64> {
        let p = self.warp.psi(t)?;
        let g = self.base.metric(x)?;
        Ok(p * p * (u.base.transpose() * g * &v.base)[(0, 0)] + u.t * v.t)
    }

    /// Reflection `t ↦ −t` of the fiber.
    pub fn reflect(&self) -> Self {
        WarpedProduct {
            base: self.base.clone(),
            warp: self.warp.reflect(),
            flip: self.flip,
        }
    }
}

/// Curvature of the warped metric at one point, assembled trilinearly from
/// the lifted-field cases:
///
/// * `ℜ(V, W)U = ℜ^M(V, W)U − (ψ′/ψ)²(⟨W,U⟩V − ⟨V,U⟩W)`
/// * `ℜ(V, ∂_t)∂_t = −(ψ″/ψ)V`
/// * `ℜ(∂_t, V)W = −(ψ″/ψ)⟨V,W⟩ ∂_t`
/// * `ℜ(V, W)∂_t = 0`
///
/// with `⟨,⟩` the warped inner product. Uses ψ and its derivatives directly,
/// never the slice accessors, so it stays independent of them.
#[derive(Debug, Clone)]
pub struct ClosedCurvature {
    pub geo: PointGeometry,
    rm: Riemann,
    psi: f64,
    dpsi: f64,
    ddpsi: f64,
}

impl ClosedCurvature {
    pub fn from_parts(geo: PointGeometry, psi: f64, dpsi: f64, ddpsi: f64) -> Self {
        let rm = riemann_from(&geo);
        ClosedCurvature {
            geo,
            rm,
            psi,
            dpsi,
            ddpsi,
        }
    }

    pub fn dim(&self) -> usize {
        self.geo.dim()
    }

    pub fn inner(&self, u: &AmbientVector, v: &AmbientVector) -> f64 {
        self.psi * self.psi * self.geo.inner(&u.base, &v.base) + u.t * v.t
    }

    pub fn apply(&self, a: &AmbientVector, b: &AmbientVector, c: &AmbientVector) -> Result<AmbientVector> {
        let m = self.dim();
        for v in [a, b, c] {
            if v.base.len() != m {
                return Err(GeomError::DimensionMismatch {
                    expected: m + 1,
                    got: v.base.len() + 1,
                });
            }
        }
        let pp = self.psi * self.psi;
        let ip = |u: &DVector<f64>, v: &DVector<f64>| pp * self.geo.inner(u, v);
        let k = self.ddpsi / self.psi;
        let h2 = (self.dpsi / self.psi).powi(2);
        let (v1, v2, v3) = (&a.base, &b.base, &c.base);
        let mut base = self.rm.apply(&self.geo.ginv, v1, v2, v3) - (v1 * ip(v2, v3) - v2 * ip(v1, v3)) * h2;
        base += v1 * (-b.t * c.t * k) + v2 * (a.t * c.t * k);
        let tpart = b.t * ip(v1, v3) * k - a.t * ip(v2, v3) * k;
        Ok(AmbientVector { base, t: tpart })
    }

    /// `⟨ℜ(a, b)c, d⟩`.
    pub fn form(&self, a: &AmbientVector, b: &AmbientVector, c: &AmbientVector, d: &AmbientVector) -> Result<f64> {
        Ok(self.inner(&self.apply(a, b, c)?, d))
    }

    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional(&self, u: &AmbientVector, v: &AmbientVector) -> Result<f64> {
        let wedge = self.inner(u, u) * self.inner(v, v) - self.inner(u, v).powi(2);
        if wedge < crate::manifold::DEGENERATE_PLANE {
            return Err(GeomError::DegeneratePlane { wedge });
        }
        Ok(self.form(u, v, v, u)? / wedge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ExprMetric, ExprProfile};
    use crate::manifold::sectional_from;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn warp(src: &str, lo: f64, hi: f64) -> WarpingFunction {
        WarpingFunction::new(
            Arc::new(ExprProfile::parse(src).unwrap()),
            Interval::new(lo, hi).unwrap(),
            DerivativeMode::Analytic,
        )
    }

    fn half_plane() -> ChartMetric {
        let rows = vec![
            vec!["1/x2^2".to_string(), "0".to_string()],
            vec!["0".to_string(), "1/x2^2".to_string()],
        ];
        ChartMetric::new(
            Arc::new(ExprMetric::parse(&rows).unwrap()),
            BoxDomain::new(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, f64::INFINITY]).unwrap(),
            DerivativeMode::Analytic,
        )
        .unwrap()
    }

    #[test]
    fn slice_curvatures() {
        let c = warp("cosh(t)", f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(c.slice_mean(0.0).unwrap(), 0.0);
        assert!((c.slice_normal_sectional(0.7).unwrap() + 1.0).abs() < 1e-15);
        let e = warp("exp(t)", f64::NEG_INFINITY, f64::INFINITY);
        assert!((e.slice_mean(-3.2).unwrap() - 1.0).abs() < 1e-15);
        let l = warp("t", 0.0, f64::INFINITY);
        assert_eq!(l.slice_mean(2.0).unwrap(), 0.5);
        assert_eq!(l.slice_normal_sectional(2.0).unwrap(), 0.0);
        let s = warp("sin(t)", 0.0, std::f64::consts::PI);
        assert!((s.slice_normal_sectional(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(l.slice_mean(-1.0), Err(GeomError::OutsideInterval { .. })));
    }

    #[test]
    fn sigma_values() {
        let c = warp("cosh(t)", f64::NEG_INFINITY, f64::INFINITY)
            .with_anchors(0.0, std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert_eq!(c.sigma(0.0).unwrap(), std::f64::consts::FRAC_PI_2);
        let expect = std::f64::consts::PI - 2.0 * 1f64.exp().atan();
        assert!((c.sigma(1.0).unwrap() - expect).abs() < 1e-10);
        assert!((expect - 0.7050268).abs() < 1e-7);
        let e = warp("exp(t)", f64::NEG_INFINITY, f64::INFINITY).with_anchors(0.0, 1.0).unwrap();
        for t in [-1.5, 0.3, 2.0] {
            assert!((e.sigma(t).unwrap() - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn area_classes() {
        let c = warp("cosh(t)", f64::NEG_INFINITY, f64::INFINITY);
        let r = c.reciprocal_area_class().unwrap();
        assert_eq!(r.class, AreaClass::Finite);
        assert!((r.total.unwrap() - std::f64::consts::PI).abs() < 1e-6);
        let e = warp("exp(t)", f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(e.reciprocal_area_class().unwrap().class, AreaClass::SigmaBoundedBelowOnly);
        let l = warp("t", 0.0, f64::INFINITY);
        assert_eq!(l.reciprocal_area_class().unwrap().class, AreaClass::UnboundedBoth);
        let em = warp("exp(-t)", f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(em.reciprocal_area_class().unwrap().class, AreaClass::SigmaBoundedAboveOnly);
    }

    #[test]
    fn reflection() {
        let e = warp("exp(t)", f64::NEG_INFINITY, f64::INFINITY).with_anchors(0.3, 0.7).unwrap();
        let r = e.reflect();
        assert_eq!(r.psi(1.2).unwrap(), (-1.2f64).exp());
        assert!((r.slice_mean(0.4).unwrap() + e.slice_mean(-0.4).unwrap()).abs() < 1e-15);
        assert!((r.sigma(-1.1).unwrap() + e.sigma(1.1).unwrap()).abs() < 1e-10);
        let rr = r.reflect();
        assert_eq!((rr.t0, rr.sigma0), (e.t0, e.sigma0));
        assert_eq!(rr.interval(), e.interval());
        assert_eq!(rr.jet(0.9).unwrap(), e.jet(0.9).unwrap());
    }

    #[test]
    fn hyperbolic_ambient_and_closed_form() {
        let p = WarpedProduct::new(half_plane(), warp("cosh(t)", f64::NEG_INFINITY, f64::INFINITY));
        let chart = p.ambient_chart();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
            let t = rng.gen_range(-1.0..1.0);
            let q = [x[0], x[1], t];
            let geo = chart.geometry(&q).unwrap();
            let r = riemann_from(&geo);
            let mut vs: Vec<DVector<f64>> = (0..3)
                .map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let k = sectional_from(&geo, &r, &vs[0], &vs[1]).unwrap();
            assert!((k + 1.0).abs() < 1e-10, "{k}");
            let c = vs.pop().unwrap();
            let b = vs.pop().unwrap();
            let a = vs.pop().unwrap();
            let closed = p
                .warped_riemann_closed(
                    &x,
                    t,
                    &AmbientVector::from_components(&a),
                    &AmbientVector::from_components(&b),
                    &AmbientVector::from_components(&c),
                )
                .unwrap()
                .to_components();
            let brute = r.apply(&geo.ginv, &a, &b, &c);
            assert!((&closed - &brute).amax() < 1e-10);
            // constant curvature −1: R(a,b)c = −(⟨b,c⟩a − ⟨a,c⟩b)
            let model = -(&a * geo.inner(&b, &c) - &b * geo.inner(&a, &c));
            assert!((&closed - model).amax() < 1e-10);
        }
    }

    #[test]
    fn lifted_normal_case() {
        let p = WarpedProduct::new(half_plane(), warp("cosh(t)", f64::NEG_INFINITY, f64::INFINITY));
        let v = AmbientVector::new(DVector::from_vec(vec![0.3, -0.8]), 0.0);
        let dt = AmbientVector::new(DVector::zeros(2), 1.0);
        let r = p.warped_riemann_closed(&[0.0, 1.0], 0.4, &v, &dt, &dt).unwrap();
        assert!((&r.base + &v.base).amax() < 1e-15 && r.t == 0.0);
    }
}
