//! Global curvature estimates: mean curvature, scalar curvature and the norm
//! of the shape operator, each with its slab, finite-area and partially
//! bounded variants.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::local::{base_bounds, check_local_ball_estimates};
use super::omori::{omori_witness, OmoriMode};
use super::{refine_extrema, sup_on_interval, EstimateReport, Extrema, Hypothesis, Region, Settings, Witness};
use crate::error::{GeomError, Result};
use crate::graph::{point_summary, ricci_max_at, GraphFunction, GraphPoint, PointSummary};
use crate::manifold::{riemann_from, sectional_from};
use crate::par::try_map_range;
use crate::warped::{AreaClass, WarpedProduct};

/// Sampled sign behaviour of the mean curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSign {
    Zero,
    Nonnegative,
    Nonpositive,
    Changes,
}

impl HSign {
    pub fn nonnegative(&self) -> bool {
        matches!(self, HSign::Zero | HSign::Nonnegative)
    }
    pub fn nonpositive(&self) -> bool {
        matches!(self, HSign::Zero | HSign::Nonpositive)
    }
    pub fn fixed(&self) -> bool {
        *self != HSign::Changes
    }
}

const SIGN_TOL: f64 = 1e-12;

/// Classifies sampled mean curvatures.
pub fn h_sign(h_min: f64, h_max: f64) -> HSign {
    match (h_min >= -SIGN_TOL, h_max <= SIGN_TOL) {
        (true, true) => HSign::Zero,
        (true, false) => HSign::Nonnegative,
        (false, true) => HSign::Nonpositive,
        (false, false) => HSign::Changes,
    }
}

/// Per-point summaries over the region samples.
pub(crate) struct Sampled {
    pub points: Vec<Vec<f64>>,
    pub sums: Vec<PointSummary>,
}

impl Sampled {
    pub fn new(p: &WarpedProduct, f: &GraphFunction, points: Vec<Vec<f64>>, settings: &Settings) -> Result<Self> {
        let sums = try_map_range(settings.exec, points.len(), |k| {
            point_summary(p, f, &points[k]).map_err(|e| GeomError::EvaluationFailure {
                point: points[k].clone(),
                message: e.to_string(),
            })
        })?;
        Ok(Sampled { points, sums })
    }

    /// Extrema of `g(summary)`, refined over the region.
    pub fn extrema(
        &self,
        p: &WarpedProduct,
        f: &GraphFunction,
        region: &Region,
        settings: &Settings,
        g: fn(&PointSummary) -> f64,
    ) -> Result<Extrema> {
        let values: Vec<f64> = self.sums.iter().map(g).collect();
        let q = |x: &[f64]| -> Result<f64> { Ok(g(&point_summary(p, f, x)?)) };
        refine_extrema(&q, region, settings, &self.points, &values)
    }
}

/// Slice data over the sampled range `[f_lo, f_hi]` of `f`.
#[derive(Debug, Clone)]
pub(crate) struct RangeStats {
    pub f_lo: f64,
    pub f_hi: f64,
    pub inf_psi: f64,
    pub sup_abs_h: f64,
    pub sup_h2: f64,
    pub sup_abs_kperp: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub kperp_lo: f64,
    pub kperp_hi: f64,
}

impl RangeStats {
    pub fn new(p: &WarpedProduct, f_lo: f64, f_hi: f64) -> Result<Self> {
        let neg_psi = |t: f64| Ok(-p.warp.psi(t)?);
        Ok(RangeStats {
            f_lo,
            f_hi,
            inf_psi: -sup_on_interval(&neg_psi, f_lo, f_hi)?,
            sup_abs_h: sup_on_interval(&|t| Ok(p.slice_mean(t)?.abs()), f_lo, f_hi)?,
            sup_h2: sup_on_interval(&|t| Ok(p.slice_mean(t)?.powi(2)), f_lo, f_hi)?,
            sup_abs_kperp: sup_on_interval(&|t| Ok(p.slice_normal_sectional(t)?.abs()), f_lo, f_hi)?,
            h_lo: p.slice_mean(f_lo)?,
            h_hi: p.slice_mean(f_hi)?,
            kperp_lo: p.slice_normal_sectional(f_lo)?,
            kperp_hi: p.slice_normal_sectional(f_hi)?,
        })
    }
}

/// Everything the global checkers share.
pub(crate) struct Context {
    pub sampled: Sampled,
    pub h_ext: Extrema,
    pub range: RangeStats,
    pub sign: HSign,
    pub area: Option<AreaClass>,
}

impl Context {
    pub fn new(p: &WarpedProduct, f: &GraphFunction, region: &Region, settings: &Settings) -> Result<Self> {
        region.check_inside(p.base.domain())?;
        let sampled = Sampled::new(p, f, region.sample_points(settings), settings)?;
        let f_ext = sampled.extrema(p, f, region, settings, |s| s.f)?;
        let h_ext = sampled.extrema(p, f, region, settings, |s| s.h)?;
        let range = RangeStats::new(p, f_ext.inf, f_ext.sup)?;
        let area = match p.warp.reciprocal_area_class() {
            Ok(r) => Some(r.class),
            Err(GeomError::Inconclusive { .. }) | Err(GeomError::QuadratureNonConvergent { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Context {
            sampled,
            sign: h_sign(h_ext.inf, h_ext.sup),
            h_ext,
            range,
            area,
        })
    }

    fn psi_positive(&self) -> Hypothesis {
        Hypothesis::sampled(
            "inf psi(f) > 0",
            self.range.inf_psi > 0.0,
            format!("sampled inf psi(f) = {:.6e}", self.range.inf_psi),
        )
    }

    fn sign_hypothesis(&self, want: &str) -> Hypothesis {
        let holds = match want {
            "H >= 0" => self.sign.nonnegative(),
            "H <= 0" => self.sign.nonpositive(),
            _ => self.sign.fixed(),
        };
        Hypothesis::sampled(
            want,
            holds,
            format!("sampled H in [{:.6e}, {:.6e}]", self.h_ext.inf, self.h_ext.sup),
        )
    }

    fn area_hypothesis(&self, want: &str, holds: bool) -> Hypothesis {
        Hypothesis::declared(want, holds, format!("reciprocal-area class {:?}", self.area))
    }

    fn sigma_bounded_above(&self) -> bool {
        self.area.map(|a| a.sigma_bounded_above()).unwrap_or(false)
    }

    fn sigma_bounded_below(&self) -> bool {
        self.area.map(|a| a.sigma_bounded_below()).unwrap_or(false)
    }

    fn base_diagnostics(&self, mut r: EstimateReport) -> EstimateReport {
        r = r
            .diag("f_inf", self.range.f_lo)
            .diag("f_sup", self.range.f_hi)
            .diag("inf_psi_f", self.range.inf_psi)
            .diag("sup_abs_slice_mean", self.range.sup_abs_h)
            .diag("h_min", self.h_ext.inf)
            .diag("h_max", self.h_ext.sup)
            .diag("h_sign_fixed", if self.sign.fixed() { 1.0 } else { 0.0 });
        r
    }
}

/// Candidate variant of an estimate: `(branch, lhs, rhs, hypotheses)`.
struct Candidate {
    branch: &'static str,
    lhs: f64,
    rhs: f64,
    hypotheses: Vec<Hypothesis>,
}

impl Candidate {
    fn holds(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }
}

/// Picks the applicable candidate with the smallest right-hand side, or,
/// failing that, the first one (reported inconclusive).
fn assemble(name: &str, tol: f64, candidates: Vec<Candidate>) -> Option<EstimateReport> {
    let best = candidates
        .iter()
        .filter(|c| c.holds())
        .min_by(|a, b| a.rhs.total_cmp(&b.rhs))
        .or_else(|| candidates.first())?;
    let mut r = EstimateReport::new(name, best.lhs, best.rhs, tol, best.branch).with_hypotheses(best.hypotheses.clone());
    for c in &candidates {
        if !std::ptr::eq(c, best) {
            r.diagnostics.insert(format!("alt_rhs[{}]", c.branch), c.rhs);
        }
    }
    Some(r)
}

/// When no global variant applies, fall back to the local ball estimate on
/// the largest chart ball inscribed in the region.
fn local_fallback(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    settings: &Settings,
    name: &str,
    local_name: &str,
) -> Result<EstimateReport> {
    let center = region.center();
    let radius = 0.499 * region.min_side();
    let reports = check_local_ball_estimates(p, f, &center, &[radius], settings)?;
    let mut r = reports
        .into_iter()
        .find(|r| r.name.starts_with(local_name))
        .ok_or_else(|| GeomError::InvalidRegion(format!("no local report {local_name}")))?;
    r.name = name.into();
    r.branch = format!("local_ball (no global variant applies: {})", r.branch);
    Ok(r.diag("global_branch_available", 0.0))
}

fn extremum_witness(points: &[f64], quantity: &str, value: f64) -> Witness {
    Witness {
        point: points.to_vec(),
        quantity: quantity.into(),
        value,
    }
}

/// `inf |H| ≤ sup_{f(M)} |ℋ|`, its partially bounded variants and the bound
/// `(m−1)/m·√−d / inf ψ(f) + sup |ℋ|` under `Ric_M ≥ d`, with the
/// Omori witness convergence diagnostics `|H(w) − ℋ(inf f)|` (sup mode of
/// `f̂`) and `|H(w) − ℋ(sup f)|` (inf mode).
pub fn check_mean_estimate(p: &WarpedProduct, f: &GraphFunction, region: &Region, settings: &Settings) -> Result<EstimateReport> {
    let ctx = Context::new(p, f, region, settings)?;
    let abs_h = ctx.sampled.extrema(p, f, region, settings, |s| s.h.abs())?;
    let rg = &ctx.range;
    let tol = settings.theorem_tol;
    let declared = |b: bool, a: bool| {
        Hypothesis::declared(
            "f bounds",
            f.bounded_below == b && f.bounded_above == a,
            format!("declared bounded below {}, above {}", f.bounded_below, f.bounded_above),
        )
    };

    let mut cands = Vec::new();
    if f.bounded_below && f.bounded_above {
        cands.push(Candidate {
            branch: "slab",
            lhs: abs_h.inf,
            rhs: rg.sup_abs_h,
            hypotheses: vec![declared(true, true)],
        });
    }
    if ctx.area == Some(AreaClass::Finite) {
        cands.push(Candidate {
            branch: "finite_reciprocal_area",
            lhs: abs_h.inf,
            rhs: rg.sup_abs_h,
            hypotheses: vec![ctx.area_hypothesis("finite reciprocal area", true), ctx.psi_positive()],
        });
    }
    if f.bounded_below && !f.bounded_above {
        cands.push(Candidate {
            branch: "f_bounded_below_h_nonnegative",
            lhs: ctx.h_ext.inf,
            rhs: rg.h_lo,
            hypotheses: vec![declared(true, false), ctx.sign_hypothesis("H >= 0"), ctx.psi_positive()],
        });
    }
    if f.bounded_above && !f.bounded_below {
        cands.push(Candidate {
            branch: "f_bounded_above_h_nonpositive",
            lhs: abs_h.inf,
            rhs: rg.h_hi.abs(),
            hypotheses: vec![declared(false, true), ctx.sign_hypothesis("H <= 0"), ctx.psi_positive()],
        });
    }
    if ctx.area == Some(AreaClass::SigmaBoundedAboveOnly) {
        cands.push(Candidate {
            branch: "sigma_bounded_above_h_nonnegative",
            lhs: abs_h.inf,
            rhs: rg.sup_abs_h,
            hypotheses: vec![ctx.sign_hypothesis("H >= 0"), ctx.psi_positive()],
        });
    }
    if ctx.area == Some(AreaClass::SigmaBoundedBelowOnly) {
        cands.push(Candidate {
            branch: "sigma_bounded_below_h_nonpositive",
            lhs: abs_h.inf,
            rhs: rg.sup_abs_h,
            hypotheses: vec![ctx.sign_hypothesis("H <= 0"), ctx.psi_positive()],
        });
    }

    let base = base_bounds(p, &ctx.sampled.points, settings)?;
    let d = base.ricci_min;
    if p.dim() >= 2 && d.is_finite() {
        let mf = p.dim() as f64;
        cands.push(Candidate {
            branch: "ricci_lower_bound",
            lhs: abs_h.inf,
            rhs: (mf - 1.0) / mf * (-d).max(0.0).sqrt() / rg.inf_psi + rg.sup_abs_h,
            hypotheses: vec![
                Hypothesis::sampled("Ric_M >= d", true, format!("d = {d:.6e} is the sampled infimum of Ric_M")),
                ctx.psi_positive(),
            ],
        });
    }

    let mut report = match assemble("mean_curvature", tol, cands) {
        Some(r) => r,
        None => local_fallback(p, f, region, settings, "mean_curvature", "local_mean")?,
    };
    report = ctx.base_diagnostics(report);
    report.witnesses.push(extremum_witness(&abs_h.argmin, "|H| at infimum", abs_h.inf));

    let mut best = f64::INFINITY;
    for (mode, target, key) in [
        (OmoriMode::Sup, rg.h_lo, "witness_residual_inf_f"),
        (OmoriMode::Inf, rg.h_hi, "witness_residual_sup_f"),
    ] {
        let ws = omori_witness(p, f, region, mode, settings)?;
        let mut mode_best = f64::INFINITY;
        for w in &ws {
            let h = point_summary(p, f, &w.point)?.h;
            mode_best = mode_best.min((h - target).abs());
            report.witnesses.push(Witness {
                point: w.point.clone(),
                quantity: format!("H at {:?} witness of f_hat", mode).to_lowercase(),
                value: h,
            });
        }
        report.diagnostics.insert(format!("{key}_count"), ws.len() as f64);
        if mode_best.is_finite() {
            report.diagnostics.insert(key.into(), mode_best);
            best = best.min(mode_best);
        }
    }
    if best.is_finite() {
        report.diagnostics.insert("witness_residual".into(), best);
    }
    Ok(report)
}

/// Seeded planes at sample `k`: all coordinate planes plus `settings.planes`
/// random ones when `m > 2`.
pub(crate) fn planes(m: usize, k: usize, settings: &Settings) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut u = DVector::zeros(m);
            let mut v = DVector::zeros(m);
            u[i] = 1.0;
            v[j] = 1.0;
            out.push((u, v));
        }
    }
    if m > 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for _ in 0..settings.planes {
            let u = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let v = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            out.push((u, v));
        }
    }
    out
}

/// Raw infimum and supremum of `𝒦∘φ + ℋ′∘f` over the given points.
pub(crate) fn convergence_range(
    p: &WarpedProduct,
    f: &GraphFunction,
    points: &[Vec<f64>],
    settings: &Settings,
) -> Result<(f64, f64)> {
    let m = p.dim();
    if m < 2 {
        return Err(GeomError::DimensionTooSmall { m, need: 2 });
    }
    let per_point = try_map_range(settings.exec, points.len(), |k| -> Result<(f64, f64)> {
        let x = &points[k];
        let t = f.value(x);
        let geo = p.base.geometry(x)?;
        let r = riemann_from(&geo);
        let psi = p.warp.psi(t)?;
        let dh = p.warp.slice_mean_derivative(t)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (u, v) in planes(m, k, settings) {
            let val = match sectional_from(&geo, &r, &u, &v) {
                Ok(kk) => kk / (psi * psi) + dh,
                Err(GeomError::DegeneratePlane { .. }) => continue,
                Err(e) => return Err(e),
            };
            lo = lo.min(val);
            hi = hi.max(val);
        }
        Ok((lo, hi))
    })?;
    Ok(per_point
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi))))
}

/// `α = min(0, inf(𝒦∘φ + ℋ′∘f))`, `β = max(0, sup(𝒦∘φ + ℋ′∘f))` over the
/// region samples and seeded planes.
pub fn compute_alpha_beta(p: &WarpedProduct, f: &GraphFunction, region: &Region, settings: &Settings) -> Result<(f64, f64)> {
    region.check_inside(p.base.domain())?;
    let (lo, hi) = convergence_range(p, f, &region.sample_points(settings), settings)?;
    Ok((lo.min(0.0), hi.max(0.0)))
}

/// Scalar curvature estimate: `inf |R|` against the slab, finite-area or
/// partially bounded right-hand side.
pub fn check_scalar_estimate(p: &WarpedProduct, f: &GraphFunction, region: &Region, settings: &Settings) -> Result<EstimateReport> {
    let m = p.dim();
    if m < 2 {
        return Err(GeomError::DimensionTooSmall { m, need: 2 });
    }
    let ctx = Context::new(p, f, region, settings)?;
    let abs_r = ctx
        .sampled
        .extrema(p, f, region, settings, |s| s.r.map(f64::abs).unwrap_or(f64::NAN))?;
    let (lo, hi) = convergence_range(p, f, &ctx.sampled.points, settings)?;
    let (alpha, beta) = (lo.min(0.0), hi.max(0.0));
    let ba = beta - alpha;
    let rg = &ctx.range;
    let lhs = abs_r.inf;
    let tol = settings.theorem_tol;

    let mut cands = Vec::new();
    if f.bounded_below && f.bounded_above {
        let at_lo = 4.0 * rg.h_lo * rg.h_lo + rg.kperp_lo.abs();
        let at_hi = 4.0 * rg.h_hi * rg.h_hi + rg.kperp_hi.abs();
        cands.push(Candidate {
            branch: "slab",
            lhs,
            rhs: ba + at_lo.min(at_hi),
            hypotheses: vec![Hypothesis::declared("f bounded", true, "declared bounded on M".into())],
        });
    }
    if ctx.area == Some(AreaClass::Finite) {
        cands.push(Candidate {
            branch: "finite_reciprocal_area",
            lhs,
            rhs: ba + 4.0 * rg.sup_h2 + rg.sup_abs_kperp,
            hypotheses: vec![ctx.area_hypothesis("finite reciprocal area", true), ctx.psi_positive()],
        });
    }
    if f.bounded_below && !f.bounded_above {
        cands.push(Candidate {
            branch: "f_bounded_below_h_sign_fixed",
            lhs,
            rhs: 2.0 * rg.h_lo * rg.h_lo + ba + rg.kperp_lo.abs(),
            hypotheses: vec![ctx.sign_hypothesis("H sign fixed")],
        });
    }
    if f.bounded_above && !f.bounded_below {
        cands.push(Candidate {
            branch: "f_bounded_above_h_sign_fixed",
            lhs,
            rhs: 2.0 * rg.h_hi * rg.h_hi + ba + rg.kperp_hi.abs(),
            hypotheses: vec![ctx.sign_hypothesis("H sign fixed")],
        });
    }
    for (class, want, branch) in [
        (AreaClass::SigmaBoundedAboveOnly, "H >= 0", "sigma_bounded_above_h_nonnegative"),
        (AreaClass::SigmaBoundedBelowOnly, "H <= 0", "sigma_bounded_below_h_nonpositive"),
    ] {
        if ctx.area == Some(class) {
            cands.push(Candidate {
                branch,
                lhs,
                rhs: ba + 2.0 * rg.sup_h2 + rg.sup_abs_kperp,
                hypotheses: vec![ctx.sign_hypothesis(want), ctx.psi_positive()],
            });
        }
    }

    let mut report = match assemble("scalar_curvature", tol, cands) {
        Some(r) => r,
        None => local_fallback(p, f, region, settings, "scalar_curvature", "local_scalar")?,
    };
    report = ctx.base_diagnostics(report).diag("alpha", alpha).diag("beta", beta);
    report.witnesses.push(extremum_witness(&abs_r.argmin, "|R| at infimum", abs_r.inf));
    Ok(report)
}

/// Sampled check of `Ric_Γ − inf 𝒦⊥ < inf(𝒦∘φ + ℋ′∘f) ≤ 0`.
fn ricci_hypothesis(
    p: &WarpedProduct,
    f: &GraphFunction,
    ctx: &Context,
    settings: &Settings,
) -> Result<(Hypothesis, f64)> {
    let pts = &ctx.sampled.points;
    let ric = try_map_range(settings.exec, pts.len(), |k| ricci_max_at(&GraphPoint::new(p, f, &pts[k])?))?;
    let ric_sup = ric.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let (conv_inf, _) = convergence_range(p, f, pts, settings)?;
    let inf_kperp = -sup_on_interval(&|t| Ok(-p.slice_normal_sectional(t)?), ctx.range.f_lo, ctx.range.f_hi)?;
    let holds = ric_sup - inf_kperp < conv_inf && conv_inf <= settings.null_tol;
    Ok((
        Hypothesis::sampled(
            "Ric - inf Kperp < inf(K + H') <= 0",
            holds,
            format!(
                "sampled sup Ric = {ric_sup:.6e}, inf Kperp = {inf_kperp:.6e}, inf(K + H') = {conv_inf:.6e}"
            ),
        ),
        ric_sup,
    ))
}

fn shape_candidates(
    p: &WarpedProduct,
    f: &GraphFunction,
    ctx: &Context,
    lhs: f64,
    settings: &Settings,
    want_i: bool,
    want_ii: bool,
) -> Result<(Vec<Candidate>, Option<f64>)> {
    let m = p.dim() as f64;
    let rg = &ctx.range;
    let ric = if want_i {
        Some(ricci_hypothesis(p, f, ctx, settings)?)
    } else {
        None
    };
    let mut cands = Vec::new();
    let mut push = |branch_i: &'static str, branch_ii: &'static str, scale: f64, base: Vec<Hypothesis>| {
        if let Some((h, _)) = &ric {
            let mut hyps = base.clone();
            hyps.push(h.clone());
            cands.push(Candidate {
                branch: branch_i,
                lhs,
                rhs: 3.0 * (m - 2.0) * scale,
                hypotheses: hyps,
            });
        }
        if want_ii {
            let mut hyps = base;
            hyps.push(ctx.sign_hypothesis("H sign fixed"));
            cands.push(Candidate {
                branch: branch_ii,
                lhs,
                rhs: m * scale,
                hypotheses: hyps,
            });
        }
    };
    if f.bounded_below && f.bounded_above {
        push(
            "slab_item_i",
            "slab_item_ii",
            rg.h_lo.abs().min(rg.h_hi.abs()),
            vec![Hypothesis::declared("f bounded", true, "declared bounded on M".into())],
        );
    }
    if ctx.sigma_bounded_above() || ctx.sigma_bounded_below() {
        push(
            "sigma_partially_bounded_item_i",
            "sigma_partially_bounded_item_ii",
            rg.sup_abs_h,
            vec![
                ctx.area_hypothesis("sigma bounded above or below", true),
                ctx.psi_positive(),
            ],
        );
    }
    Ok((cands, ric.map(|(_, r)| r)))
}

/// Norm of the shape operator: items (i) (when `m ≥ 3`) and (ii), slab and
/// partially bounded variants; the smallest applicable bound is reported.
pub fn check_shape_norm_estimate(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    settings: &Settings,
) -> Result<EstimateReport> {
    shape_norm(p, f, region, settings, p.dim() >= 3, true)
}

/// Item (i) alone, which needs `m ≥ 3`.
pub fn check_shape_norm_item_i(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    settings: &Settings,
) -> Result<EstimateReport> {
    let m = p.dim();
    if m < 3 {
        return Err(GeomError::DimensionTooSmall { m, need: 3 });
    }
    shape_norm(p, f, region, settings, true, false)
}

fn shape_norm(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    settings: &Settings,
    want_i: bool,
    want_ii: bool,
) -> Result<EstimateReport> {
    let ctx = Context::new(p, f, region, settings)?;
    let norm = ctx.sampled.extrema(p, f, region, settings, |s| s.norm_a)?;
    let (cands, ric_sup) = shape_candidates(p, f, &ctx, norm.inf, settings, want_i, want_ii)?;
    let local = if want_ii { "local_shape_ii" } else { "local_shape_i" };
    let mut report = match assemble("shape_operator_norm", settings.theorem_tol, cands) {
        Some(r) => r,
        None => local_fallback(p, f, region, settings, "shape_operator_norm", local)?,
    };
    report = ctx.base_diagnostics(report);
    if let Some(r) = ric_sup {
        report = report.diag("ricci_sup", r);
    }
    report.witnesses.push(extremum_witness(&norm.argmin, "|A| at infimum", norm.inf));
    Ok(report)
}
