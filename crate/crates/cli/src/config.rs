//! Run configuration: a single JSON document naming the model, the graph,
//! the sampling region and the tolerances.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use warpcurv::fields::{ExprMetric, ExprProfile};
use warpcurv::models::{self, builtin_graph, expression_graph, ModelSpace};
use warpcurv::verify::{standard_balls, standard_region, standard_test_graphs, Settings};
use warpcurv::warped::{Interval, SignFlip};
use warpcurv::{BoxDomain, ChartMetric, DerivativeMode, GraphFunction, Region, WarpedProduct, WarpingFunction};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub model: ModelChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputSpec>,
    /// Corrupts one sign in the graph formulas, for mutation testing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<SignFlip>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Catalog(String),
    Inline(InlineModel),
}

/// User-defined `M ×_ψ I`. Infinite bounds are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    #[serde(default = "default_inline_name")]
    pub name: String,
    /// Metric components as expressions in `x1..xm`.
    pub metric: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Warping profile as an expression in `t`.
    pub psi: String,
    pub interval: [Option<f64>; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Anchors>,
    #[serde(default)]
    pub mode: ModeSpec,
}

fn default_inline_name() -> String {
    "inline".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchors {
    pub t0: f64,
    pub sigma0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    Analytic,
    FiniteDifference,
}

impl ModeSpec {
    fn mode(self) -> DerivativeMode {
        match self {
            ModeSpec::Analytic => DerivativeMode::Analytic,
            ModeSpec::FiniteDifference => DerivativeMode::finite_difference(),
        }
    }
}

/// Either a builtin family with parameters or an expression in `x1..xm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded_below: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded_above: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Identities,
    Mean,
    Scalar,
    Shape,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default = "default_identity_samples")]
    pub identity_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balls: Option<BallSpec>,
    /// Optional CSV of sampled pointwise quantities, for plotting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<String>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            checks: all_checks(),
            identity_samples: default_identity_samples(),
            balls: None,
            samples_csv: None,
        }
    }
}

fn all_checks() -> Vec<Check> {
    vec![Check::Identities, Check::Mean, Check::Scalar, Check::Shape, Check::Local]
}

fn default_identity_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }
}

/// A config with every expression parsed and every default filled in.
pub struct Resolved {
    pub model_name: String,
    pub catalog: Option<ModelSpace>,
    pub product: WarpedProduct,
    pub graphs: Vec<GraphFunction>,
    pub region: Option<Region>,
    pub balls: Option<BallSpec>,
    pub settings: Settings,
}

fn bound(v: Option<f64>, inf: f64) -> f64 {
    v.unwrap_or(inf)
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn inline_product(spec: &InlineModel, m: usize) -> Result<WarpedProduct, CliError> {
    if spec.metric.len() != m {
        return Err(CliError::Config(format!(
            "metric has {} rows but dim is {m}",
            spec.metric.len()
        )));
    }
    let mode = spec.mode.mode();
    let metric = ExprMetric::parse(&spec.metric).map_err(|e| CliError::Config(format!("metric: {e}")))?;
    let domain = match &spec.domain {
        None => BoxDomain::unbounded(m),
        Some(d) => BoxDomain::new(
            d.lo.iter().map(|v| bound(*v, f64::NEG_INFINITY)).collect(),
            d.hi.iter().map(|v| bound(*v, f64::INFINITY)).collect(),
        )
        .map_err(config_err)?,
    };
    let base = ChartMetric::new(Arc::new(metric), domain, mode).map_err(config_err)?;
    let psi = ExprProfile::parse(&spec.psi).map_err(|e| CliError::Config(format!("psi: {e}")))?;
    let interval = Interval::new(bound(spec.interval[0], f64::NEG_INFINITY), bound(spec.interval[1], f64::INFINITY))
        .map_err(config_err)?;
    let mut warp = WarpingFunction::new(Arc::new(psi), interval, mode);
    if let Some(a) = spec.anchors {
        warp = warp.with_anchors(a.t0, a.sigma0).map_err(config_err)?;
    }
    // A profile that is not positive at its anchor is a config error.
    match warp.psi(warp.t0) {
        Ok(v) if v > 0.0 && v.is_finite() => {}
        Ok(v) => return Err(CliError::Config(format!("psi({}) = {v} is not positive", warp.t0))),
        Err(e) => return Err(CliError::Config(format!("psi: {e}"))),
    }
    Ok(WarpedProduct::new(base, warp))
}

fn graph_from(spec: &GraphSpec, m: usize) -> Result<GraphFunction, CliError> {
    let g = match (&spec.builtin, &spec.expr) {
        (Some(name), None) => {
            let g = builtin_graph(name, &spec.params, m).map_err(config_err)?;
            if spec.mode == ModeSpec::FiniteDifference {
                g.with_mode(DerivativeMode::finite_difference())
            } else {
                g
            }
        }
        (None, Some(src)) => expression_graph(src, &spec.params, m, spec.mode.mode())
            .map_err(|e| CliError::Config(format!("graph: {e}")))?,
        _ => return Err(CliError::Config("graph needs exactly one of 'builtin' or 'expr'".into())),
    };
    let below = spec.bounded_below.unwrap_or(g.bounded_below);
    let above = spec.bounded_above.unwrap_or(g.bounded_above);
    Ok(g.with_bounds(below, above))
}

impl RunConfig {
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Resolved, CliError> {
        let m = self.dim;
        if m == 0 {
            return Err(CliError::Config("dim must be at least 1".into()));
        }
        let (name, catalog, product) = match &self.model {
            ModelChoice::Catalog(name) => {
                let model = models::lookup(name, m).map_err(config_err)?;
                let product = model.product.clone();
                (name.clone(), Some(model), product)
            }
            ModelChoice::Inline(spec) => (spec.name.clone(), None, inline_product(spec, m)?),
        };
        let product = product.with_sign_flip(self.mutation);
        let graphs = match (&self.graph, &catalog) {
            (Some(g), _) => vec![graph_from(g, m)?],
            (None, Some(model)) => standard_test_graphs(model),
            (None, None) => Vec::new(),
        };
        let region = match (&self.region, &catalog) {
            (Some(r), _) => {
                let r = Region::new(r.lo.clone(), r.hi.clone(), r.grid, r.refine_iters).map_err(config_err)?;
                if r.dim() != m {
                    return Err(CliError::Config(format!("region has dimension {} but dim is {m}", r.dim())));
                }
                Some(r)
            }
            (None, Some(model)) => Some(standard_region(model)),
            (None, None) => None,
        };
        let balls = match (&self.verify.balls, &catalog) {
            (Some(b), _) => Some(b.clone()),
            (None, Some(model)) => {
                let (center, radii) = standard_balls(model);
                Some(BallSpec { center, radii })
            }
            (None, None) => None,
        };
        let mut settings = self.settings.clone();
        if let Some(seed) = seed_override.or(self.seed) {
            settings.seed = seed;
        }
        Ok(Resolved {
            model_name: name,
            catalog,
            product,
            graphs,
            region,
            balls,
            settings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INLINE: &str = r#"{
        "dim": 2,
        "model": {
            "name": "half-plane-cosh",
            "metric": [["1/x2^2", "0"], ["0", "1/x2^2"]],
            "domain": {"lo": [null, 0], "hi": [null, null]},
            "psi": "cosh(t)",
            "interval": [null, null],
            "anchors": {"t0": 0, "sigma0": 1.5707963267948966}
        },
        "graph": {"expr": "0.2*exp(-x1^2 - log(x2)^2)", "bounded_below": true, "bounded_above": true},
        "region": {"lo": [-2, 0.2], "hi": [2, 4], "grid": 9, "refine_iters": 1},
        "settings": {"theorem_tol": 0.001, "seed": 3},
        "seed": 7,
        "outputs": [{"format": "json", "path": "out.json"}],
        "mutation": "angle",
        "verify": {"checks": ["identities", "mean"], "identity_samples": 50}
    }"#;

    #[test]
    fn round_trip_is_lossless() {
        let a = RunConfig::parse(INLINE).unwrap();
        let text = serde_json::to_string_pretty(&a).unwrap();
        let b = RunConfig::parse(&text).unwrap();
        assert_eq!(a, b);
        let c = RunConfig::parse(r#"{"model": "cosh-hyperbolic"}"#).unwrap();
        assert_eq!(c, RunConfig::parse(&serde_json::to_string(&c).unwrap()).unwrap());
    }

    #[test]
    fn inline_model_resolves() {
        let r = RunConfig::parse(INLINE).unwrap().resolve(None).unwrap();
        assert_eq!(r.settings.seed, 7);
        assert_eq!(r.graphs.len(), 1);
        assert_eq!(r.product.sign_flip(), Some(SignFlip::Angle));
        assert!((r.product.warp.slice_mean(1.0).unwrap() - 1f64.tanh()).abs() < 1e-14);
        let r = RunConfig::parse(INLINE).unwrap().resolve(Some(11)).unwrap();
        assert_eq!(r.settings.seed, 11);
    }

    #[test]
    fn catalog_defaults_fill_in() {
        let r = RunConfig::parse(r#"{"model": "sin-sphere", "dim": 3}"#).unwrap().resolve(None).unwrap();
        assert_eq!(r.graphs.len(), 6);
        assert_eq!(r.region.unwrap().dim(), 3);
        assert!(r.balls.is_some());
    }

    #[test]
    fn config_errors() {
        for bad in [
            r#"{"model": "no-such-model"}"#,
            r#"{"model": "cosh-hyperbolic", "graph": {"builtin": "bump", "expr": "x1"}}"#,
            r#"{"model": "cosh-hyperbolic", "graph": {"expr": "x1 +* 2"}}"#,
            r#"{"model": {"metric": [["1","0"],["0","1"]], "psi": "cosh(", "interval": [null, null]}}"#,
            r#"{"model": {"metric": [["1","0"],["0","1"]], "psi": "-1", "interval": [null, null]}}"#,
            r#"{"model": "cosh-hyperbolic", "region": {"lo": [0], "hi": [1], "grid": 3, "refine_iters": 0}}"#,
            r#"{"model": "cosh-hyperbolic", "colour": "blue"}"#,
        ] {
            let res = RunConfig::parse(bad).and_then(|c| c.resolve(None));
            assert!(matches!(res, Err(CliError::Config(_))), "{bad}");
        }
    }

    fn arb_config() -> impl proptest::strategy::Strategy<Value = RunConfig> {
        use proptest::prelude::*;
        let checks = prop::sample::subsequence(
            vec![Check::Identities, Check::Mean, Check::Scalar, Check::Shape, Check::Local],
            0..=5,
        );
        let model = prop_oneof![
            prop::sample::select(models::model_names()).prop_map(|n| ModelChoice::Catalog(n.to_string())),
            (-5.0f64..5.0, prop::option::of(0.0f64..1.0)).prop_map(|(t0, lo)| ModelChoice::Inline(InlineModel {
                name: "inline".into(),
                metric: vec![vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]],
                domain: None,
                psi: "cosh(t)".into(),
                interval: [lo, None],
                anchors: Some(Anchors { t0, sigma0: t0.abs() }),
                mode: ModeSpec::FiniteDifference,
            })),
        ];
        let graph = prop::option::of((-2.0f64..2.0, any::<bool>()).prop_map(|(a, fd)| GraphSpec {
            builtin: Some("bump".into()),
            expr: None,
            params: [("a".to_string(), a)].into_iter().collect(),
            mode: if fd { ModeSpec::FiniteDifference } else { ModeSpec::Analytic },
            bounded_below: Some(fd),
            bounded_above: None,
        }));
        (model, graph, any::<u64>(), prop::option::of(any::<u64>()), 1e-9f64..1.0, checks, 2usize..40, any::<bool>())
            .prop_map(|(model, graph, s, seed, tol, checks, grid, csv)| RunConfig {
                dim: 2,
                model,
                graph,
                region: Some(Region::new(vec![-1.0, 0.5], vec![1.0, 2.0], grid, 1).unwrap()),
                settings: Settings { seed: s, theorem_tol: tol, ..Settings::default() },
                seed,
                outputs: if csv {
                    vec![OutputSpec { format: Format::Csv, path: "out.csv".into() }]
                } else {
                    Vec::new()
                },
                mutation: None,
                point: Some(vec![tol, -tol]),
                t_grid: None,
                verify: VerifySpec { checks, ..VerifySpec::default() },
            })
    }

    proptest::proptest! {
        #[test]
        fn serialize_then_parse_is_identity(cfg in arb_config()) {
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            proptest::prop_assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        }
    }
}
