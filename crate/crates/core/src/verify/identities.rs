//! Exact identities, checked as maximum residuals over random points.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::theorems::convergence_range;
use super::{EstimateReport, Region, Settings, Witness};
use crate::error::Result;
use crate::fields::ScalarField;
use crate::graph::{companion_at, mean_curvature_div, spectrum_and_scalar, GraphFunction, GraphPoint};
use crate::manifold::riemann_from;
use crate::par::try_map_range;
use crate::warped::{AmbientVector, WarpedProduct};

struct Constant {
    dim: usize,
    value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn jet(&self, _x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        Some((DVector::zeros(self.dim), DMatrix::zeros(self.dim, self.dim)))
    }
}

const NAMES: [&str; 9] = [
    "companion_mean_curvature",
    "companion_principal_curvatures",
    "companion_w",
    "angle_times_w",
    "normal_frame",
    "slice_umbilicity",
    "dual_mean_curvature",
    "closed_form_vs_chart_riemann",
    "lemma",
];

fn point_residuals(
    p: &WarpedProduct,
    f: &GraphFunction,
    x: &[f64],
    k: usize,
    settings: &Settings,
    ambient: &crate::manifold::ChartMetric,
    window: (f64, f64),
) -> Result<[f64; 9]> {
    let m = p.dim();
    let gp = GraphPoint::new(p, f, x)?;
    let (spec, r) = spectrum_and_scalar(&gp)?;
    let comp = companion_at(p, &gp)?;
    let cc = gp.ambient_curvature();

    let mut out = [0.0; 9];
    out[0] = (comp.hhat - comp.hhat_direct).abs();
    out[1] = comp
        .lambdahats
        .iter()
        .zip(&comp.lambdahats_direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out[2] = (comp.what - comp.what_direct).abs();
    out[3] = (gp.theta() * gp.w + gp.psi).abs();

    let eta = AmbientVector::from_components(&gp.normal());
    let mut frame = (cc.inner(&eta, &eta) - 1.0).abs();
    for i in 0..m {
        let mut e = DVector::zeros(m);
        e[i] = 1.0;
        let v = gp.lift(&e);
        frame = frame.max((cc.inner(&eta, &v) / cc.inner(&v, &v).sqrt()).abs());
    }
    out[4] = frame;

    let slice = GraphFunction::new(Arc::new(Constant { dim: m, value: gp.f }), f.mode());
    let sp = GraphPoint::new(p, &slice, x)?;
    let (sspec, _) = spectrum_and_scalar(&sp)?;
    let hc = p.warp.slice_mean(gp.f)?;
    let umb = sspec.lambdas.iter().map(|l| (l - hc).abs()).fold(0.0, f64::max);
    let flat = companion_at(p, &sp)?.lambdahats.iter().map(|l| l.abs()).fold(0.0, f64::max);
    out[5] = umb.max(flat);

    out[6] = (spec.mean() - mean_curvature_div(p, f, x)?).abs();

    let mut q = x.to_vec();
    q.push(gp.f);
    let geo = ambient.geometry(&q)?;
    let rb = riemann_from(&geo);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0xA5A5_5A5A ^ (k as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let v: Vec<DVector<f64>> = (0..3).map(|_| DVector::from_fn(m + 1, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let brute = rb.apply(&geo.ginv, &v[0], &v[1], &v[2]);
        let closed = cc
            .apply(
                &AmbientVector::from_components(&v[0]),
                &AmbientVector::from_components(&v[1]),
                &AmbientVector::from_components(&v[2]),
            )?
            .to_components();
        worst = worst.max((&closed - &brute).amax() / (1.0 + closed.amax()));
    }
    out[7] = worst;

    if let (Some(r), Some(h2)) = (r, spec.second_mean()) {
        let v = r - h2 - p.slice_normal_sectional(gp.f)?;
        out[8] = (window.0 - v).max(v - window.1).max(0.0);
    }
    Ok(out)
}

/// Maximum residual of each identity over `n_samples` seeded points:
/// companion relations for `Ĥ`, `λ̂` and `Ŵ`, `Θ·W = −ψ(f)`, the unit normal,
/// slice umbilicity, trace versus divergence mean curvature, closed-form
/// versus chart curvature, and `α ≤ R − H₂ − 𝒦⊥ ≤ β` (an equality when
/// `α = β = 0`).
pub fn check_identity_suite(
    p: &WarpedProduct,
    f: &GraphFunction,
    region: &Region,
    n_samples: usize,
    settings: &Settings,
) -> Result<Vec<EstimateReport>> {
    region.check_inside(p.base.domain())?;
    let points = region.random_points(n_samples.max(1), settings.seed);
    let ambient = p.ambient_chart();
    let m = p.dim();
    let (alpha, beta) = if m >= 2 {
        let (lo, hi) = convergence_range(p, f, &points, settings)?;
        (lo.min(0.0), hi.max(0.0))
    } else {
        (0.0, 0.0)
    };
    let null = alpha.abs() < settings.null_tol && beta.abs() < settings.null_tol;
    let window = if null { (0.0, 0.0) } else { (alpha, beta) };
    let res = try_map_range(settings.exec, points.len(), |k| {
        point_residuals(p, f, &points[k], k, settings, &ambient, window)
    })?;
    let tol = if p.is_analytic() && f.mode().is_analytic() {
        settings.identity_tol_analytic
    } else {
        settings.identity_tol_fd
    };
    let mut out = Vec::new();
    for (i, name) in NAMES.iter().enumerate() {
        if i == 8 && m < 2 {
            continue;
        }
        let (k, worst) = res
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r[i]))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let label = if i == 8 {
            if null {
                "lemma_equality".to_string()
            } else {
                "lemma_sandwich".to_string()
            }
        } else {
            name.to_string()
        };
        let mut r = EstimateReport::residual(label, worst, tol).diag("samples", points.len() as f64);
        if i == 8 {
            r = r.diag("alpha", alpha).diag("beta", beta);
        }
        r.witnesses.push(Witness {
            point: points[k].clone(),
            quantity: "largest residual".into(),
            value: worst,
        });
        out.push(r);
    }
    Ok(out)
}
