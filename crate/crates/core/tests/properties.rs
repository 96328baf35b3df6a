use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use warpcurv::graph::{companion_at, mean_curvature_div, spectrum_and_scalar, GraphPoint};
use warpcurv::manifold::{riemann_from, sectional_from};
use warpcurv::models::{builtin_graph, catalog, expression_graph, BaseKind, FlatMetric, ModelSpace};
use warpcurv::verify::{approx_extrema, check_mean_estimate, standard_region, Region, Settings, Verdict};
use warpcurv::warped::AmbientVector;
use warpcurv::{BoxDomain, ChartMetric, DerivativeMode, Exec, GraphFunction};

fn seq() -> Settings {
    Settings {
        exec: Exec::Sequential,
        ..Settings::default()
    }
}

fn model(m: usize, k: usize) -> ModelSpace {
    let all = catalog(m);
    let n = all.len();
    all.into_iter().nth(k % n).unwrap()
}

/// Point of the model's standard region from unit-cube coordinates.
fn place(model: &ModelSpace, u: &[f64]) -> Vec<f64> {
    let r = standard_region(model);
    (0..model.dim()).map(|i| r.lo[i] + (r.hi[i] - r.lo[i]) * u[i]).collect()
}

/// A smooth graph mixing a bump and a gentle wave, kept inside the interval.
fn wavy(model: &ModelSpace, a: f64, k: f64) -> GraphFunction {
    let m = model.dim();
    let t0 = model.interval().default_anchor();
    let center = match model.base_kind {
        BaseKind::Hyperbolic => {
            let mut c = vec![0.0; m];
            c[m - 1] = 1.0;
            c
        }
        other => other.sample_center(m),
    };
    let sq: Vec<String> = (1..=m).map(|i| format!("(x{i} - ({}))^2", center[i - 1])).collect();
    let src = format!("{t0} + {a}*exp(-({})) + 0.05*sin({k}*x1)", sq.join(" + "));
    expression_graph(&src, &BTreeMap::new(), m, DerivativeMode::Analytic).unwrap()
}

fn unit(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.95, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn christoffels_are_symmetric_and_metric_compatible(k in 0usize..8, u in unit(3)) {
        let model = model(3, k);
        let x = place(&model, &u);
        let geo = model.product.base.geometry(&x).unwrap();
        let m = 3;
        for kk in 0..m {
            prop_assert_eq!(&geo.gamma[kk], &geo.gamma[kk].transpose());
        }
        for kk in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut r = geo.jet.dg[kk][(i, j)];
                    for l in 0..m {
                        r -= geo.gamma[l][(kk, i)] * geo.g[(l, j)] + geo.gamma[l][(kk, j)] * geo.g[(i, l)];
                    }
                    prop_assert!(r.abs() < 1e-10, "residual {r}");
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_and_bianchi(k in 0usize..8, u in unit(3)) {
        let model = model(3, k);
        let x = place(&model, &u);
        let mut q = x.clone();
        q.push(model.interval().default_anchor());
        let chart = model.product.ambient_chart();
        let r = riemann_from(&chart.geometry(&q).unwrap());
        prop_assert!(r.symmetry_residual() < 1e-10, "{}", r.symmetry_residual());
    }

    #[test]
    fn sectional_ignores_the_basis_of_the_plane(
        k in 0usize..8,
        u in unit(3),
        a in prop::collection::vec(-1.0f64..1.0, 6),
        c in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let det = c[0] * c[3] - c[1] * c[2];
        prop_assume!(det.abs() > 0.1);
        let model = model(3, k);
        let x = place(&model, &u);
        let chart = model.product.base.clone();
        let v1 = DVector::from_column_slice(&a[..3]);
        let v2 = DVector::from_column_slice(&a[3..]);
        prop_assume!(v1.cross(&v2).norm() > 0.1);
        let w1 = &v1 * c[0] + &v2 * c[1];
        let w2 = &v1 * c[2] + &v2 * c[3];
        let s1 = chart.sectional(&x, &v1, &v2).unwrap();
        let s2 = chart.sectional(&x, &w1, &w2).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-9 * (1.0 + s1.abs()), "{s1} {s2}");
    }

    #[test]
    fn flat_gradient_and_hessian_are_ordinary(u in prop::collection::vec(-2.0f64..2.0, 2)) {
        let chart = ChartMetric::new(std::sync::Arc::new(FlatMetric(2)), BoxDomain::unbounded(2), DerivativeMode::Analytic).unwrap();
        let f = warpcurv::fields::ExprField::parse("x1^3*x2 + sin(x2)", 2).unwrap();
        let (x1, x2) = (u[0], u[1]);
        let g = chart.grad(&f, &u).unwrap();
        let h = chart.hess(&f, &u).unwrap();
        let g_exact = DVector::from_vec(vec![3.0 * x1 * x1 * x2, x1.powi(3) + x2.cos()]);
        let h_exact = DMatrix::from_row_slice(2, 2, &[6.0 * x1 * x2, 3.0 * x1 * x1, 3.0 * x1 * x1, -x2.sin()]);
        prop_assert!((g - g_exact).amax() < 1e-12);
        prop_assert!((h - h_exact).amax() < 1e-12);
    }

    #[test]
    fn tangent_sectional_is_slice_minus_mean_squared(k in 0usize..8, u in unit(2), dt in -0.3f64..0.3) {
        let model = model(2, k);
        let x = place(&model, &u);
        let t = model.interval().default_anchor() + dt;
        let p = &model.product;
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let slice = p.slice_sectional(&x, t, &e1, &e2).unwrap();
        let h = p.slice_mean(t).unwrap();
        let cc = p.closed_curvature(&x, t).unwrap();
        let amb = cc.sectional(&AmbientVector::new(e1, 0.0), &AmbientVector::new(e2, 0.0)).unwrap();
        prop_assert!((slice - h * h - amb).abs() < 1e-10, "{} vs {}", slice - h * h, amb);
    }

    #[test]
    fn sigma_decreases_and_hits_its_anchor(k in 0usize..8, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let model = model(2, k);
        let w = &model.product.warp;
        prop_assert!((w.sigma(w.t0).unwrap() - w.sigma0).abs() == 0.0);
        let i = model.interval();
        let lo = if i.lo.is_finite() { i.lo } else { -3.0 };
        let hi = if i.hi.is_finite() { i.hi.min(lo + 6.0) } else { lo + 6.0 };
        let s = |v: f64| lo + (hi - lo) * (0.02 + 0.96 * v);
        let (t1, t2) = (s(a.min(b)), s(a.max(b)));
        prop_assume!(t2 - t1 > 1e-3);
        prop_assert!(w.sigma(t1).unwrap() > w.sigma(t2).unwrap());
    }

    #[test]
    fn graph_invariants(k in 0usize..8, u in unit(2), a in 0.05f64..0.5, wave in 0.5f64..2.0) {
        let model = model(2, k);
        let p = &model.product;
        let f = wavy(&model, a, wave);
        let x = place(&model, &u);
        let gp = GraphPoint::new(p, &f, &x).unwrap();
        let theta = gp.theta();
        prop_assert!((theta * gp.w + gp.psi).abs() < 1e-10);
        prop_assert!((-1.0..0.0).contains(&theta));

        let (spec, r) = spectrum_and_scalar(&gp).unwrap();
        let div = mean_curvature_div(p, &f, &x).unwrap();
        prop_assert!((spec.mean() - div).abs() < 1e-5, "{} {}", spec.mean(), div);

        let comp = companion_at(p, &gp).unwrap();
        for (l, d) in comp.lambdahats.iter().zip(&comp.lambdahats_direct) {
            prop_assert!((l - d).abs() < 1e-8);
        }

        let v = r.unwrap() - spec.second_mean().unwrap() - p.slice_normal_sectional(gp.f).unwrap();
        if model.convergence_null {
            prop_assert!(v.abs() < 1e-8, "{}: {v}", model.name);
        }
        let probe = Region::around(&x, 1e-3, 3, 0).unwrap();
        let (alpha, beta) = warpcurv::verify::compute_alpha_beta(p, &f, &probe, &seq()).unwrap();
        prop_assert!(alpha - 1e-5 <= v && v <= beta + 1e-5, "{alpha} {v} {beta}");
    }

    #[test]
    fn slices_are_umbilic(k in 0usize..8, u in unit(2), dt in -0.3f64..0.3) {
        let model = model(2, k);
        let t0 = model.interval().default_anchor() + dt;
        let params: BTreeMap<String, f64> = [("t0".to_string(), t0)].into_iter().collect();
        let f = builtin_graph("slice", &params, 2).unwrap();
        let gp = GraphPoint::new(&model.product, &f, &place(&model, &u)).unwrap();
        let (spec, _) = spectrum_and_scalar(&gp).unwrap();
        let h = model.product.slice_mean(t0).unwrap();
        prop_assert!(spec.lambdas.iter().all(|l| (l - h).abs() < 1e-8));
    }

    #[test]
    fn verdict_follows_margin(margin in -1.0f64..1.0, tol in 1e-6f64..1e-2) {
        let v = Verdict::from_margin(margin, tol);
        prop_assert_eq!(v == Verdict::Violated, margin < -tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn finer_grids_never_worsen_the_infimum(cx in -0.9f64..0.9, cy in -0.9f64..0.9, n in 3usize..9) {
        let region = |g: usize| Region::new(vec![-1.0, -1.0], vec![1.0, 1.0], g, 0).unwrap();
        let q = |x: &[f64]| Ok::<f64, warpcurv::GeomError>((x[0] - cx).powi(2) + (x[1] - cy).powi(2));
        let coarse = approx_extrema(&q, &region(n), &seq()).unwrap();
        let fine = approx_extrema(&q, &region(2 * n - 1), &seq()).unwrap();
        prop_assert!(fine.inf <= coarse.inf);
        prop_assert!(coarse.inf >= 0.0);
    }

    #[test]
    fn reports_are_deterministic(k in 0usize..8, a in 0.1f64..0.5, seed in any::<u64>()) {
        let model = model(2, k);
        let f = wavy(&model, a, 1.0);
        let mut region = standard_region(&model);
        region.grid = 9;
        let settings = Settings { seed, ..Settings::default() };
        let one = check_mean_estimate(&model.product, &f, &region, &settings).unwrap();
        let two = check_mean_estimate(&model.product, &f, &region, &Settings { exec: Exec::Sequential, ..settings }).unwrap();
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&two).unwrap());
    }
}

#[test]
fn ambient_chart_and_closed_sectional_agree() {
    for m in [2, 3] {
        for model in catalog(m) {
            let x = place(&model, &vec![0.37; m]);
            let t = model.interval().default_anchor();
            let mut q = x.clone();
            q.push(t);
            let geo = model.product.ambient_chart().geometry(&q).unwrap();
            let r = riemann_from(&geo);
            let cc = model.product.closed_curvature(&x, t).unwrap();
            let mut u = DVector::zeros(m + 1);
            let mut v = DVector::zeros(m + 1);
            u[0] = 1.0;
            v[m] = 1.0;
            let brute = sectional_from(&geo, &r, &u, &v).unwrap();
            let closed = cc.sectional(&AmbientVector::from_components(&u), &AmbientVector::from_components(&v)).unwrap();
            assert!((brute - closed).abs() < 1e-8, "{}: {brute} {closed}", model.name);
        }
    }
}
