//! Local estimates on balls, from the comparison function `ν_s(r)`.
//!
//! Balls are Euclidean balls of the chart. A chart ball of radius `ρ`
//! contains the geodesic ball of radius `ρ·√μ_min`, where `μ_min` is the
//! smallest metric eigenvalue over the chart ball, so the bounds are
//! evaluated at that radius. Since they decrease in `r` and the sampled set
//! contains the geodesic ball, the comparison stays one-sided.

use super::theorems::{convergence_range, h_sign, planes, RangeStats, Sampled};
use super::{sup_on_interval, EstimateReport, Hypothesis, Region, Settings, Witness};
use crate::error::{GeomError, Result};
use crate::graph::{ricci_max_at, GraphFunction, GraphPoint};
use crate::manifold::{min_ricci_from, riemann_from, sectional_from};
use crate::par::try_map_range;
use crate::warped::WarpedProduct;

/// `ν_s(r)`: `1/r` for `s ≥ 0`, `√−s·coth(r√−s)` for `s < 0`.
pub fn nu(s: f64, r: f64) -> f64 {
    if s >= 0.0 {
        1.0 / r
    } else {
        let q = (-s).sqrt();
        q / (r * q).tanh()
    }
}

pub(crate) struct BaseBounds {
    pub mu_min: f64,
    pub mu_max: f64,
    pub sectional_min: f64,
    pub ricci_min: f64,
}

pub(crate) fn base_bounds(p: &WarpedProduct, points: &[Vec<f64>], settings: &Settings) -> Result<BaseBounds> {
    let m = p.dim();
    let per = try_map_range(settings.exec, points.len(), |k| -> Result<[f64; 4]> {
        let geo = p.base.geometry(&points[k])?;
        let eig = geo.g.clone().symmetric_eigen().eigenvalues;
        let mut sec = f64::INFINITY;
        let mut ric = f64::INFINITY;
        if m >= 2 {
            let r = riemann_from(&geo);
            for (u, v) in planes(m, k, settings) {
                match sectional_from(&geo, &r, &u, &v) {
                    Ok(s) => sec = sec.min(s),
                    Err(GeomError::DegeneratePlane { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            ric = min_ricci_from(&geo, &r)?;
        }
        Ok([eig.min(), eig.max(), sec, ric])
    })?;
    let fold = |i: usize, init: f64, op: fn(f64, f64) -> f64| per.iter().map(|a| a[i]).fold(init, op);
    Ok(BaseBounds {
        mu_min: fold(0, f64::INFINITY, f64::min),
        mu_max: fold(1, f64::NEG_INFINITY, f64::max),
        sectional_min: fold(2, f64::INFINITY, f64::min),
        ricci_min: fold(3, f64::INFINITY, f64::min),
    })
}

fn ball_points(center: &[f64], radius: f64, settings: &Settings) -> Result<Vec<Vec<f64>>> {
    let cube = Region::around(center, radius, settings.ball_grid, 0)?;
    let mut pts: Vec<Vec<f64>> = cube
        .sample_points(settings)
        .into_iter()
        .filter(|x| {
            let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= radius * radius * (1.0 + 1e-12)
        })
        .collect();
    pts.push(center.to_vec());
    Ok(pts)
}

/// Local principal-curvature, mean, scalar and shape-norm bounds for each
/// chart radius.
pub fn check_local_ball_estimates(
    p: &WarpedProduct,
    f: &GraphFunction,
    center: &[f64],
    radii: &[f64],
    settings: &Settings,
) -> Result<Vec<EstimateReport>> {
    let m = p.dim();
    let mf = m as f64;
    let domain = p.base.domain();
    if center.len() != m {
        return Err(GeomError::DimensionMismatch {
            expected: m,
            got: center.len(),
        });
    }
    let tol = settings.theorem_tol;
    let mut out = Vec::new();
    for &rho in radii {
        let fits = rho > 0.0
            && (0..m).all(|i| {
                let pad = 1e-4 * center[i].abs().max(1.0);
                center[i] - rho - pad > domain.lo[i] && center[i] + rho + pad < domain.hi[i]
            });
        if !fits {
            return Err(GeomError::RadiusExceedsChart {
                center: center.to_vec(),
                radius: rho,
            });
        }
        let pts = ball_points(center, rho, settings)?;
        let base = base_bounds(p, &pts, settings)?;
        let sampled = Sampled::new(p, f, pts, settings)?;
        let sums = &sampled.sums;
        let f_lo = sums.iter().map(|s| s.f).fold(f64::INFINITY, f64::min);
        let f_hi = sums.iter().map(|s| s.f).fold(f64::NEG_INFINITY, f64::max);
        let rg = RangeStats::new(p, f_lo, f_hi)?;
        let (conv_lo, conv_hi) = if m >= 2 {
            convergence_range(p, f, &sampled.points, settings)?
        } else {
            (0.0, 0.0)
        };
        let (alpha, beta) = (conv_lo.min(0.0), conv_hi.max(0.0));

        let r_in = rho * base.mu_min.sqrt();
        let c = base.sectional_min;
        let d = base.ricci_min;
        let nu_c = nu(c, r_in);
        let nu_d = nu(d, r_in);
        let ipsi = rg.inf_psi;
        let sh = rg.sup_abs_h;

        let argmin = |g: &dyn Fn(usize) -> f64| -> (usize, f64) {
            (0..sums.len())
                .map(|k| (k, g(k)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        };
        let max_lambda = |k: usize| sums[k].lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let max_neg_lambda = |k: usize| sums[k].lambdas.iter().map(|l| -l).fold(f64::NEG_INFINITY, f64::max);
        let (kp, lam_plus) = argmin(&max_lambda);
        let (kq, lam_minus) = argmin(&max_neg_lambda);
        let (kh, inf_abs_h) = argmin(&|k| sums[k].h.abs());
        let sup_abs_h = sums.iter().map(|s| s.h.abs()).fold(0.0, f64::max);
        let (h_min, h_max) = sums
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.h), b.max(s.h)));
        let sign = h_sign(h_min, h_max);
        let (ka, inf_norm) = argmin(&|k| sums[k].norm_a);

        let decorate = |mut r: EstimateReport, k: usize, quantity: &str, value: f64| {
            r.witnesses.push(Witness {
                point: sampled.points[k].clone(),
                quantity: quantity.into(),
                value,
            });
            r.disclaimer = format!(
                "{}; chart ball of radius {rho} contains the geodesic ball of radius {r_in:.6e}",
                super::DISCLAIMER
            );
            r.diag("chart_radius", rho)
                .diag("geodesic_radius_lower", r_in)
                .diag("distortion", (base.mu_max / base.mu_min).sqrt())
                .diag("c_sectional_inf", c)
                .diag("d_ricci_inf", d)
                .diag("inf_psi_f", ipsi)
                .diag("sup_abs_slice_mean", sh)
        };

        let bound_c = nu_c / ipsi + sh;
        let lhs = lam_plus.max(lam_minus);
        let (kk, q) = if lam_plus >= lam_minus {
            (kp, "max principal curvature")
        } else {
            (kq, "max of minus principal curvature")
        };
        out.push(decorate(
            EstimateReport::new(format!("local_principal_curvatures[r={rho}]"), lhs, bound_c, tol, "local_ball"),
            kk,
            q,
            lhs,
        ));

        let mean_rhs = ((mf - 1.0) * nu_d + 1.0 / r_in) / (mf * ipsi) + sh;
        out.push(decorate(
            EstimateReport::new(format!("local_mean[r={rho}]"), inf_abs_h, mean_rhs, tol, "local_ball"),
            kh,
            "|H|",
            inf_abs_h,
        ));

        if m >= 2 {
            let (kr, inf_abs_r) = argmin(&|k| sums[k].r.map(f64::abs).unwrap_or(f64::INFINITY));
            let a = nu_d / ipsi + sh;
            let rhs = 2.0 * (sup_abs_h + a) * a + beta - alpha + rg.sup_abs_kperp;
            out.push(decorate(
                EstimateReport::new(format!("local_scalar[r={rho}]"), inf_abs_r, rhs, tol, "local_ball")
                    .diag("alpha", alpha)
                    .diag("beta", beta),
                kr,
                "|R|",
                inf_abs_r,
            ));
        }

        if m >= 3 {
            let pts = &sampled.points;
            let ric = try_map_range(settings.exec, pts.len(), |k| ricci_max_at(&GraphPoint::new(p, f, &pts[k])?))?;
            let ric_sup = ric.into_iter().fold(f64::NEG_INFINITY, f64::max);
            let inf_kperp = -sup_on_interval(&|t| Ok(-p.slice_normal_sectional(t)?), f_lo, f_hi)?;
            let holds = ric_sup - inf_kperp < conv_lo && conv_lo <= settings.null_tol;
            let hyp = Hypothesis::sampled(
                "Ric - inf Kperp < inf(K + H') <= 0",
                holds,
                format!("sampled sup Ric = {ric_sup:.6e}, inf Kperp = {inf_kperp:.6e}, inf(K + H') = {conv_lo:.6e}"),
            );
            out.push(decorate(
                EstimateReport::new(format!("local_shape_i[r={rho}]"), inf_norm, 3.0 * (mf - 2.0) * bound_c, tol, "local_ball_item_i")
                    .with_hypotheses(vec![hyp])
                    .diag("ricci_sup", ric_sup),
                ka,
                "|A|",
                inf_norm,
            ));
        }

        let hyp = Hypothesis::sampled(
            "H sign fixed",
            sign.fixed(),
            format!("sampled H in [{h_min:.6e}, {h_max:.6e}]"),
        );
        out.push(decorate(
            EstimateReport::new(format!("local_shape_ii[r={rho}]"), inf_norm, mf * bound_c, tol, "local_ball_item_ii")
                .with_hypotheses(vec![hyp]),
            ka,
            "|A|",
            inf_norm,
        ));
    }
    Ok(out)
}
