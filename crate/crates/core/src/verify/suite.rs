//! Default regions and graph families for sweeping the catalog.

use std::collections::BTreeMap;

use super::Region;
use crate::graph::GraphFunction;
use crate::models::{builtin_graph, BaseKind, ModelSpace};

/// Sampling box suited to the model's base chart.
pub fn standard_region(model: &ModelSpace) -> Region {
    let m = model.dim();
    let grid = if m <= 2 { 33 } else { 13 };
    let (lo, hi) = match model.base_kind {
        BaseKind::Euclidean => (vec![-4.0; m], vec![4.0; m]),
        BaseKind::Hyperbolic => {
            let mut lo = vec![-4.0; m];
            let mut hi = vec![4.0; m];
            lo[m - 1] = 0.05;
            hi[m - 1] = 20.0;
            (lo, hi)
        }
        BaseKind::Sphere => {
            let mut lo = vec![0.3; m];
            let mut hi = vec![std::f64::consts::PI - 0.3; m];
            lo[m - 1] = -2.8;
            hi[m - 1] = 2.8;
            (lo, hi)
        }
    };
    Region::new(lo, hi, grid, 3).expect("standard region is valid")
}

/// Ball centre and chart radii for the local estimates.
pub fn standard_balls(model: &ModelSpace) -> (Vec<f64>, Vec<f64>) {
    let m = model.dim();
    match model.base_kind {
        BaseKind::Euclidean => (vec![0.0; m], vec![0.5, 1.0, 2.0]),
        BaseKind::Hyperbolic => {
            let mut c = vec![0.0; m];
            c[m - 1] = 3.0;
            (c, vec![0.5, 1.0, 2.0])
        }
        BaseKind::Sphere => (model.base_kind.sample_center(m), vec![0.3, 0.6, 1.0]),
    }
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Two slices, three bumps of increasing amplitude and one tilted plane,
/// all centred on the default anchor of the warping interval.
pub fn standard_test_graphs(model: &ModelSpace) -> Vec<GraphFunction> {
    let m = model.dim();
    let interval = model.interval();
    let t0 = interval.default_anchor();
    let mut out = Vec::new();
    for dt in [0.0, 0.3] {
        let g = builtin_graph("slice", &params(&[("t0", t0 + dt)]), m).expect("builtin graph");
        out.push(g);
    }
    for a in [0.1, 0.3, 0.5] {
        let g = match model.base_kind {
            BaseKind::Euclidean => builtin_graph("bump", &params(&[("a", a), ("b", t0)]), m),
            BaseKind::Hyperbolic => builtin_graph("bump_hyperbolic", &params(&[("a", a), ("b", t0)]), m),
            BaseKind::Sphere => {
                let mut kv = vec![("a".to_string(), a), ("b".to_string(), t0), ("s".to_string(), 0.5)];
                for (i, c) in model.base_kind.sample_center(m).into_iter().enumerate() {
                    kv.push((format!("c{}", i + 1), c));
                }
                builtin_graph("bump", &kv.into_iter().collect(), m)
            }
        };
        out.push(g.expect("builtin graph"));
    }

    // Slope shrunk until the plane stays well inside the interval on the region.
    let region = standard_region(model);
    let mut k = 0.1;
    let fits = |k: f64| {
        (0..1usize << m).all(|mask| {
            let v: f64 = t0
                + (0..m)
                    .map(|i| k * if mask >> i & 1 == 1 { region.hi[i] } else { region.lo[i] })
                    .sum::<f64>();
            v > interval.lo + 0.1 * (t0 - interval.lo).min(1.0) && v < interval.hi - 0.1 * (interval.hi - t0).min(1.0)
        })
    };
    while !fits(k) {
        k *= 0.5;
    }
    let mut kv: Vec<(String, f64)> = (1..=m).map(|i| (format!("k{i}"), k)).collect();
    kv.push(("b".into(), t0));
    let bounded = model.base_kind == BaseKind::Sphere;
    let linear = builtin_graph("linear", &kv.into_iter().collect(), m).expect("builtin graph");
    out.push(linear.with_bounds(bounded, bounded));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::catalog;

    #[test]
    fn graphs_take_values_in_the_interval() {
        for m in [2, 3] {
            for model in catalog(m) {
                let region = standard_region(&model);
                assert!(region.check_inside(model.product.base.domain()).is_ok(), "{}", model.name);
                let pts = region.random_points(200, 1);
                for g in standard_test_graphs(&model) {
                    for x in &pts {
                        assert!(model.interval().contains(g.value(x)), "{} {x:?}", model.name);
                    }
                }
            }
        }
    }
}
