//! Desk-scale stand-ins for Omori-Yau sequences of `f̂ = σ∘f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Region, Settings};
use crate::error::Result;
use crate::graph::{GraphFunction, GraphPoint};
use crate::manifold::generalized_extremes;
use crate::par::try_map_range;
use crate::warped::WarpedProduct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmoriMode {
    /// Near `sup f̂`, i.e. near `inf f`; Hessian of `f̂` nearly nonpositive.
    Sup,
    /// Near `inf f̂`, i.e. near `sup f`; Hessian of `f̂` nearly nonnegative.
    Inf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmoriWitness {
    pub point: Vec<f64>,
    pub mode: OmoriMode,
    pub f: f64,
    pub fhat: f64,
    /// `‖∇f̂‖`.
    pub grad_norm: f64,
    /// Largest (sup mode) or smallest (inf mode) eigenvalue of `Hess f̂`.
    pub hess_extreme: f64,
}

struct Probe {
    x: Vec<f64>,
    f: f64,
    grad_norm: f64,
    hess_lo: f64,
    hess_hi: f64,
    dfhat: DVector<f64>,
    d2fhat: DMatrix<f64>,
}

fn probe(p: &WarpedProduct, f: &GraphFunction, x: &[f64]) -> Result<Probe> {
    let gp = GraphPoint::new(p, f, x)?;
    // σ′ = −1/ψ, σ″ = ψ′/ψ².
    let s1 = -1.0 / gp.psi;
    let s2 = gp.dpsi / (gp.psi * gp.psi);
    let dd = &gp.df * gp.df.transpose();
    let hess = gp.hess() * s1 + &dd * s2;
    let (hess_lo, hess_hi) = generalized_extremes(&hess, &gp.geo.g)?;
    Ok(Probe {
        x: x.to_vec(),
        f: gp.f,
        grad_norm: gp.grad_sq.sqrt() / gp.psi,
        hess_lo,
        hess_hi,
        dfhat: &gp.df * s1,
        d2fhat: &gp.d2f * s1 + dd * s2,
    })
}

/// Newton iteration on `df̂ = 0`, kept only if it converges inside the region.
fn polish(p: &WarpedProduct, f: &GraphFunction, region: &Region, start: &Probe) -> Option<Probe> {
    let mut cur = probe(p, f, &start.x).ok()?;
    for _ in 0..40 {
        let step = cur.d2fhat.clone().lu().solve(&(-&cur.dfhat))?;
        let x: Vec<f64> = cur.x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if !region.is_interior(&x, 1e-9) || x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        cur = probe(p, f, &x).ok()?;
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if step.amax() < 1e-13 * scale {
            return Some(cur);
        }
    }
    None
}

/// Points where `‖∇f̂‖ < eps_grad`, the one-sided Hessian bound holds and
/// `f̂` is within `extremum_frac` of its regional range from the extremum.
/// Points on the region boundary are excluded, and survivors closer than a
/// quarter of the smallest box side to a better witness are dropped.
pub fn omori_witness(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    mode: OmoriMode,
    settings: &Settings,
) -> Result<Vec<OmoriWitness>> {
    region.check_inside(p.base.domain())?;
    let points = region.sample_points(settings);
    let mut probes = try_map_range(settings.exec, points.len(), |k| probe(p, f, &points[k]))?;

    const STARTS: usize = 6;
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| probes[a].f.total_cmp(&probes[b].f));
    if mode == OmoriMode::Inf {
        order.reverse();
    }
    let starts: Vec<usize> = order.into_iter().take(STARTS).collect();
    let polished: Vec<Option<Probe>> =
        crate::par::map_range(settings.exec, starts.len(), |j| polish(p, f, region, &probes[starts[j]]));
    probes.extend(polished.into_iter().flatten());

    let f_min = probes.iter().map(|q| q.f).fold(f64::INFINITY, f64::min);
    let f_max = probes.iter().map(|q| q.f).fold(f64::NEG_INFINITY, f64::max);
    let sigma_lo_f = p.warp.sigma(f_min)?;
    let sigma_hi_f = p.warp.sigma(f_max)?;
    let spread = (sigma_lo_f - sigma_hi_f).abs();
    let target = match mode {
        OmoriMode::Sup => sigma_lo_f,
        OmoriMode::Inf => sigma_hi_f,
    };

    let mut found = Vec::new();
    for q in &probes {
        let hess_ok = match mode {
            OmoriMode::Sup => q.hess_hi < settings.eps_hess,
            OmoriMode::Inf => q.hess_lo > -settings.eps_hess,
        };
        if !(hess_ok && q.grad_norm < settings.eps_grad && region.is_interior(&q.x, 1e-9)) {
            continue;
        }
        let fhat = p.warp.sigma(q.f)?;
        if (fhat - target).abs() <= settings.extremum_frac * spread {
            found.push(OmoriWitness {
                point: q.x.clone(),
                mode,
                f: q.f,
                fhat,
                grad_norm: q.grad_norm,
                hess_extreme: match mode {
                    OmoriMode::Sup => q.hess_hi,
                    OmoriMode::Inf => q.hess_lo,
                },
            });
        }
    }
    found.sort_by(|a, b| {
        (a.fhat - target)
            .abs()
            .total_cmp(&(b.fhat - target).abs())
            .then(a.grad_norm.total_cmp(&b.grad_norm))
            .then(a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal))
    });
    let radius = 0.25 * region.min_side();
    let mut kept: Vec<OmoriWitness> = Vec::new();
    for w in found {
        let far = kept.iter().all(|k| {
            let d2: f64 = k.point.iter().zip(&w.point).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() > radius
        });
        if far {
            kept.push(w);
        }
    }
    Ok(kept)
}
