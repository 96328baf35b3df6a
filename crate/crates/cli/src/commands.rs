use std::io::Write;

use warpcurv::graph::{point_report, point_summary};
use warpcurv::models::{catalog, model_names};
use warpcurv::par::try_map_range;
use warpcurv::verify::{
    check_identity_suite, check_local_ball_estimates, check_mean_estimate, check_scalar_estimate,
    check_shape_norm_estimate,
};
use warpcurv::{GeomError, Verdict};

use crate::config::{Check, Resolved, RunConfig};
use crate::output::{num, verdict_name, Document, Entry, ModelInfo, SliceRow};
use crate::CliError;

fn eval(e: GeomError) -> CliError {
    CliError::Eval(e.to_string())
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub struct Outcome {
    pub doc: Document,
    pub status: i32,
}

pub fn point(res: &Resolved, x: &[f64]) -> Result<Outcome, CliError> {
    let graph = match res.graphs.as_slice() {
        [g] => g,
        _ => return Err(CliError::Config("point needs exactly one graph in the config".into())),
    };
    if x.len() != res.product.dim() {
        return Err(CliError::Config(format!(
            "point has {} coordinates but dim is {}",
            x.len(),
            res.product.dim()
        )));
    }
    let report = point_report(&res.product, graph, x).map_err(eval)?;
    Ok(Outcome {
        doc: Document::Point(report),
        status: 0,
    })
}

/// Inline models get nine points spread around the anchor.
fn default_t_grid(res: &Resolved) -> Vec<f64> {
    if let Some(model) = &res.catalog {
        return model.t_grid();
    }
    let i = res.product.warp.interval();
    let t0 = res.product.warp.t0;
    match (i.lo.is_finite(), i.hi.is_finite()) {
        (true, true) => (1..=9).map(|k| i.lo + (i.hi - i.lo) * k as f64 / 10.0).collect(),
        (true, false) => (1..=9).map(|k| i.lo + (t0 - i.lo) * k as f64 / 5.0).collect(),
        (false, true) => (1..=9).map(|k| i.hi - (i.hi - t0) * k as f64 / 5.0).collect(),
        (false, false) => (0..9).map(|k| t0 - 2.0 + 0.5 * k as f64).collect(),
    }
}

pub fn slice_table(res: &Resolved, t_grid: Option<Vec<f64>>) -> Result<Outcome, CliError> {
    let ts = t_grid.unwrap_or_else(|| default_t_grid(res));
    let w = &res.product.warp;
    let mut rows = Vec::with_capacity(ts.len());
    let mut status = 0;
    for t in ts {
        let vals = (|| -> Result<(f64, f64, f64), GeomError> {
            Ok((w.slice_mean(t)?, w.slice_normal_sectional(t)?, w.sigma(t)?))
        })();
        match vals {
            Ok((h, kperp, sigma)) => {
                let (closed, residual) = match &res.catalog {
                    Some(model) => {
                        let sc = model.expected_sigma_forms(t).map_err(eval)?;
                        let r = (h - (model.expected_h)(t))
                            .abs()
                            .max((kperp - (model.expected_kperp)(t)).abs())
                            .max((sigma - sc).abs());
                        (Some(sc), Some(r))
                    }
                    None => (None, None),
                };
                rows.push(SliceRow {
                    t,
                    h,
                    kperp,
                    sigma_numeric: sigma,
                    sigma_closed: closed,
                    residual,
                });
            }
            Err(e @ GeomError::OutsideInterval { .. }) => {
                eprintln!("warpcurv: {e}");
                status = 3;
                rows.push(SliceRow {
                    t,
                    h: f64::NAN,
                    kperp: f64::NAN,
                    sigma_numeric: f64::NAN,
                    sigma_closed: None,
                    residual: None,
                });
            }
            Err(e) => return Err(eval(e)),
        }
    }
    Ok(Outcome {
        doc: Document::SliceTable(rows),
        status,
    })
}

pub fn verify(cfg: &RunConfig, res: &Resolved) -> Result<Outcome, CliError> {
    let region = res
        .region
        .as_ref()
        .ok_or_else(|| CliError::Config("verify needs a region for inline models".into()))?;
    if res.graphs.is_empty() {
        return Err(CliError::Config("verify needs a graph for inline models".into()));
    }
    let p = &res.product;
    let s = &res.settings;
    let m = p.dim();
    let mut entries = Vec::new();
    for g in &res.graphs {
        let name = g.name.clone();
        let mut push = |r| entries.push(Entry { graph: name.clone(), report: r });
        for check in &cfg.verify.checks {
            match check {
                Check::Identities => {
                    for r in check_identity_suite(p, g, region, cfg.verify.identity_samples, s).map_err(eval)? {
                        push(r);
                    }
                }
                Check::Mean => push(check_mean_estimate(p, g, region, s).map_err(eval)?),
                Check::Scalar if m >= 2 => push(check_scalar_estimate(p, g, region, s).map_err(eval)?),
                Check::Shape => push(check_shape_norm_estimate(p, g, region, s).map_err(eval)?),
                Check::Local => {
                    if let Some(b) = &res.balls {
                        for r in check_local_ball_estimates(p, g, &b.center, &b.radii, s).map_err(eval)? {
                            push(r);
                        }
                    }
                }
                Check::Scalar => {}
            }
        }
    }
    if let Some(path) = &cfg.verify.samples_csv {
        write_samples(res, region, path)?;
    }
    let violated = entries.iter().any(|e| e.report.verdict == Verdict::Violated);
    for e in &entries {
        let r = &e.report;
        eprintln!(
            "{:<12} {} / {} | {} [{}] lhs={} rhs={}",
            verdict_name(r),
            res.model_name,
            e.graph,
            r.name,
            r.branch,
            num(r.lhs),
            num(r.rhs)
        );
    }
    Ok(Outcome {
        doc: Document::Verify(entries),
        status: if violated { 1 } else { 0 },
    })
}

fn write_samples(res: &Resolved, region: &warpcurv::Region, path: &str) -> Result<(), CliError> {
    let m = res.product.dim();
    let pts = region.sample_points(&res.settings);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header = vec!["graph".to_string()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    header.extend(["f", "H", "R", "normA", "theta", "W"].map(String::from));
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for g in &res.graphs {
        let sums = try_map_range(res.settings.exec, pts.len(), |k| point_summary(&res.product, g, &pts[k])).map_err(eval)?;
        for (x, s) in pts.iter().zip(sums) {
            let mut row = vec![g.name.clone()];
            row.extend(x.iter().map(|v| num(*v)));
            row.extend([num(s.f), num(s.h), s.r.map(num).unwrap_or_default(), num(s.norm_a), num(s.theta), num(s.w)]);
            w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| CliError::Io(format!("{path}: {e}")))
}

pub fn list_models(dim: usize) -> Outcome {
    let models = catalog(dim)
        .into_iter()
        .map(|m| {
            let i = m.interval();
            ModelInfo {
                name: m.name.to_string(),
                notes: m.notes.to_string(),
                interval: [finite(i.lo), finite(i.hi)],
                ambient_sectional: m.expected_ambient_k,
            }
        })
        .collect();
    debug_assert_eq!(model_names().len(), catalog(dim).len());
    Outcome {
        doc: Document::Models(models),
        status: 0,
    }
}
