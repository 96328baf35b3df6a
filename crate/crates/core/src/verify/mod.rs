//! Numerical checks of the curvature estimates on compact chart regions.
//!
//! Infima over a complete manifold are replaced by infima over a sampled box,
//! so every report carries a disclaimer and the verdicts are evidence, not
//! proof.

mod identities;
mod local;
mod omori;
mod suite;
mod theorems;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::manifold::BoxDomain;
use crate::par::{try_map_range, Exec};

pub use identities::check_identity_suite;
pub use local::{check_local_ball_estimates, nu};
pub use omori::{omori_witness, OmoriMode, OmoriWitness};
pub use suite::{standard_balls, standard_region, standard_test_graphs};
pub use theorems::{
    check_mean_estimate, check_scalar_estimate, check_shape_norm_estimate, check_shape_norm_item_i,
    compute_alpha_beta, h_sign, HSign,
};

/// Default disclaimer attached to every report.
pub const DISCLAIMER: &str = "infima and suprema are taken over a sampled compact region, not over the complete manifold";

/// Compact axis-aligned box in the base chart, with its sampling resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Grid points per axis.
    pub grid: usize,
    /// Rounds of local refinement after the scan.
    pub refine_iters: usize,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, grid: usize, refine_iters: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GeomError::InvalidRegion(format!(
                "corner dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(GeomError::InvalidRegion("need finite lo < hi on every axis".into()));
        }
        if grid < 2 {
            return Err(GeomError::InvalidRegion("grid needs at least 2 points per axis".into()));
        }
        Ok(Region { lo, hi, grid, refine_iters })
    }

    /// Cube of half-width `r` around `center`.
    pub fn around(center: &[f64], r: f64, grid: usize, refine_iters: usize) -> Result<Self> {
        Region::new(
            center.iter().map(|c| c - r).collect(),
            center.iter().map(|c| c + r).collect(),
            grid,
            refine_iters,
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn min_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Strictly inside, away from every face by `frac` of that side.
    pub fn is_interior(&self, x: &[f64], frac: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| {
                let pad = frac * (b - a);
                *v > a + pad && *v < b - pad
            })
    }

    /// Fails unless the box sits inside `domain` with room for difference
    /// stencils on every face.
    pub fn check_inside(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: domain.dim(),
                got: self.dim(),
            });
        }
        for i in 0..self.dim() {
            let h = |v: f64| 1e-4 * v.abs().max(1.0);
            if self.lo[i] - h(self.lo[i]) <= domain.lo[i] || self.hi[i] + h(self.hi[i]) >= domain.hi[i] {
                return Err(GeomError::InvalidRegion(format!(
                    "axis {i}: [{}, {}] is not strictly inside the chart domain ({}, {})",
                    self.lo[i], self.hi[i], domain.lo[i], domain.hi[i]
                )));
            }
        }
        Ok(())
    }

    /// Tensor grid for low dimensions, seeded Monte Carlo otherwise.
    pub fn sample_points(&self, settings: &Settings) -> Vec<Vec<f64>> {
        let m = self.dim();
        if m <= settings.grid_dim_cap {
            let n = self.grid;
            let total = n.pow(m as u32);
            (0..total)
                .map(|mut k| {
                    (0..m)
                        .map(|i| {
                            let j = k % n;
                            k /= n;
                            self.lo[i] + (self.hi[i] - self.lo[i]) * j as f64 / (n - 1) as f64
                        })
                        .collect()
                })
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            (0..settings.mc_points)
                .map(|_| (0..m).map(|i| rng.gen_range(self.lo[i]..=self.hi[i])).collect())
                .collect()
        }
    }

    /// `n` seeded uniform points.
    pub fn random_points(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..self.dim()).map(|i| rng.gen_range(self.lo[i]..=self.hi[i])).collect())
            .collect()
    }

    /// Half-widths of one sampling cell.
    fn cell(&self, settings: &Settings) -> Vec<f64> {
        let m = self.dim();
        let per_axis = if m <= settings.grid_dim_cap {
            (self.grid - 1) as f64
        } else {
            (settings.mc_points as f64).powf(1.0 / m as f64).max(1.0)
        };
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) / per_axis).collect()
    }
}

/// Sampling and tolerance parameters shared by the checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub seed: u64,
    /// Largest dimension scanned on a full grid.
    pub grid_dim_cap: usize,
    /// Monte Carlo sample count above the grid cap.
    pub mc_points: usize,
    /// Gradient threshold for Omori witnesses.
    pub eps_grad: f64,
    /// Hessian threshold for Omori witnesses.
    pub eps_hess: f64,
    /// Witnesses must lie within this fraction of the range of `f̂` from its extremum.
    pub extremum_frac: f64,
    /// Random planes per point for curvature bounds.
    pub planes: usize,
    /// Grid points per axis of the cube enclosing a local ball.
    pub ball_grid: usize,
    /// Tolerance for theorem verdicts.
    pub theorem_tol: f64,
    pub identity_tol_analytic: f64,
    pub identity_tol_fd: f64,
    /// Below this, α and β count as zero.
    pub null_tol: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            grid_dim_cap: 3,
            mc_points: 10_000,
            eps_grad: 1e-4,
            eps_hess: 1e-3,
            extremum_frac: 1e-3,
            planes: 8,
            ball_grid: 33,
            theorem_tol: 1e-3,
            identity_tol_analytic: 1e-8,
            identity_tol_fd: 1e-5,
            null_tol: 1e-6,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Verdict from the margin alone.
    pub fn from_margin(margin: f64, tolerance: f64) -> Verdict {
        if margin.is_nan() {
            Verdict::Inconclusive
        } else if margin >= -tolerance {
            Verdict::Consistent
        } else {
            Verdict::Violated
        }
    }
}

/// A point where some quantity was extremal or a witness was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub quantity: String,
    pub value: f64,
}

/// A hypothesis of the estimate and what sampling says about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    /// Checked on samples only, so it can be falsified but not confirmed.
    pub sampled_only: bool,
    pub detail: String,
}

impl Hypothesis {
    pub fn sampled(name: &str, holds: bool, detail: String) -> Self {
        Hypothesis {
            name: name.into(),
            holds,
            sampled_only: true,
            detail,
        }
    }

    pub fn declared(name: &str, holds: bool, detail: String) -> Self {
        Hypothesis {
            name: name.into(),
            holds,
            sampled_only: false,
            detail,
        }
    }
}

/// Outcome of one estimate or identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub witnesses: Vec<Witness>,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Which variant of the estimate produced `rhs`.
    pub branch: String,
    pub hypotheses: Vec<Hypothesis>,
    pub diagnostics: BTreeMap<String, f64>,
    pub disclaimer: String,
}

impl EstimateReport {
    /// Report whose verdict follows from the margin.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, branch: impl Into<String>) -> Self {
        let margin = rhs - lhs;
        EstimateReport {
            name: name.into(),
            lhs,
            rhs,
            margin,
            witnesses: Vec::new(),
            verdict: Verdict::from_margin(margin, tolerance),
            tolerance,
            branch: branch.into(),
            hypotheses: Vec::new(),
            diagnostics: BTreeMap::new(),
            disclaimer: DISCLAIMER.into(),
        }
    }

    /// Identity check: `lhs` is the residual, `rhs` is zero.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let mut r = EstimateReport::new(name, residual, 0.0, tolerance, "identity");
        r.disclaimer = "maximum residual over seeded random points".into();
        r
    }

    /// Marks the report inconclusive, keeping the numbers.
    pub fn inconclusive(mut self) -> Self {
        self.verdict = Verdict::Inconclusive;
        self
    }

    pub fn with_hypotheses(mut self, h: Vec<Hypothesis>) -> Self {
        if h.iter().any(|h| !h.holds) {
            self.verdict = Verdict::Inconclusive;
        }
        self.hypotheses = h;
        self
    }

    pub fn diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// Estimated infimum and supremum with their arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrema {
    pub inf: f64,
    pub sup: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

fn eval_at<Q>(q: &Q, x: &[f64]) -> Result<f64>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    match q(x) {
        Ok(v) if v.is_nan() => Err(GeomError::EvaluationFailure {
            point: x.to_vec(),
            message: "quantity is NaN".into(),
        }),
        Ok(v) => Ok(v),
        Err(e @ GeomError::EvaluationFailure { .. }) => Err(e),
        Err(e) => Err(GeomError::EvaluationFailure {
            point: x.to_vec(),
            message: e.to_string(),
        }),
    }
}

/// Grid (or Monte Carlo) scan of `q` over the region, followed by
/// `refine_iters` rounds of coordinate-wise golden-section search around
/// the best samples. Refinement only ever improves the estimates.
pub fn approx_extrema<Q>(q: &Q, region: &Region, settings: &Settings) -> Result<Extrema>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    let points = region.sample_points(settings);
    let values = try_map_range(settings.exec, points.len(), |k| eval_at(q, &points[k]))?;
    refine_extrema(q, region, settings, &points, &values)
}

/// Refinement stage of [`approx_extrema`] for values already sampled.
pub fn refine_extrema<Q>(q: &Q, region: &Region, settings: &Settings, points: &[Vec<f64>], values: &[f64]) -> Result<Extrema>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let (imin, imax) = (order[0], order[order.len() - 1]);
    let mut ext = Extrema {
        inf: values[imin],
        sup: values[imax],
        argmin: points[imin].clone(),
        argmax: points[imax].clone(),
    };
    if region.refine_iters == 0 {
        return Ok(ext);
    }
    const STARTS: usize = 3;
    let cell = region.cell(settings);
    let lows: Vec<usize> = order.iter().take(STARTS).copied().collect();
    let highs: Vec<usize> = order.iter().rev().take(STARTS).copied().collect();
    let jobs: Vec<(usize, f64)> = lows
        .iter()
        .map(|&i| (i, 1.0))
        .chain(highs.iter().map(|&i| (i, -1.0)))
        .collect();
    let refined = try_map_range(settings.exec, jobs.len(), |j| {
        let (i, sign) = jobs[j];
        coordinate_search(q, region, &cell, &points[i], sign * values[i], sign)
    })?;
    for (j, (x, v)) in refined.into_iter().enumerate() {
        let sign = jobs[j].1;
        if sign > 0.0 && v < ext.inf {
            ext.inf = v;
            ext.argmin = x;
        } else if sign < 0.0 && -v > ext.sup {
            ext.sup = -v;
            ext.argmax = x;
        }
    }
    Ok(ext)
}

/// Minimizes `sign·q` by golden-section sweeps along each axis, halving the
/// search window each round. Returns the best point and its signed value.
fn coordinate_search<Q>(q: &Q, region: &Region, cell: &[f64], start: &[f64], start_val: f64, sign: f64) -> Result<(Vec<f64>, f64)>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut x = start.to_vec();
    let mut best = start_val;
    let mut half: Vec<f64> = cell.to_vec();
    for _ in 0..region.refine_iters {
        for i in 0..x.len() {
            let a = (x[i] - half[i]).max(region.lo[i]);
            let b = (x[i] + half[i]).min(region.hi[i]);
            let mut probe = x.clone();
            let mut phi = |s: f64| -> Result<f64> {
                probe[i] = s;
                Ok(sign * eval_at(q, &probe)?)
            };
            let (s, v) = golden_section(&mut phi, a, b)?;
            if v < best {
                best = v;
                x[i] = s;
            }
        }
        for h in half.iter_mut() {
            *h *= 0.5;
        }
    }
    Ok((x, best))
}

fn golden_section(phi: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = phi(c)?;
    let mut fd = phi(d)?;
    for _ in 0..40 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = phi(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Supremum of `g` on `[lo, hi]` by a dense scan plus golden-section polish.
pub(crate) fn sup_on_interval(g: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return g(lo);
    }
    const N: usize = 257;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..N {
        let t = lo + (hi - lo) * k as f64 / (N - 1) as f64;
        let v = g(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let h = (hi - lo) / (N - 1) as f64;
    let mut neg = |t: f64| Ok(-g(t)?);
    let (_, v) = golden_section(&mut neg, (best.0 - h).max(lo), (best.0 + h).min(hi))?;
    Ok(best.1.max(-v))
}
