//! Adaptive Simpson quadrature with an evaluation budget, and a probe that
//! decides whether an improper integral of a positive function converges.

use crate::error::{GeomError, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const DEFAULT_CAP: f64 = 1e8;

struct Simpson<'a> {
    f: &'a dyn Fn(f64) -> f64,
    evals: usize,
    budget: usize,
}

impl Simpson<'_> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(GeomError::QuadratureNonConvergent {
                budget: self.budget,
            });
        }
        Ok((self.f)(x))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let l = self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
}

/// Integral of `f` over the finite interval `[a, b]` (or its negative when
/// `b < a`) to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, budget: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol, budget).map(|v| -v);
    }
    let mut s = Simpson {
        f,
        evals: 0,
        budget,
    };
    // Split into a few panels first so narrow features are not skipped.
    let panels = 8;
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let fa = s.eval(lo)?;
        let fb = s.eval(hi)?;
        let fm = s.eval(0.5 * (lo + hi))?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += s.recurse(lo, hi, fa, fm, fb, whole, tol / panels as f64, 48)?;
    }
    if !total.is_finite() {
        return Err(GeomError::QuadratureNonConvergent { budget });
    }
    Ok(total)
}

/// Outcome of probing an improper integral toward one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Converged, with the value of the integral from the start point to the
    /// endpoint.
    Finite(f64),
    Infinite,
}

/// Probes `∫_start^end f` for positive `f`, where `end` may be infinite or a
/// finite endpoint where `f` blows up. Approaches the endpoint through a
/// geometric sequence of points and watches the ratio of successive
/// increments.
pub fn probe_tail(
    f: &dyn Fn(f64) -> f64,
    start: f64,
    end: f64,
    cap: f64,
    tol: f64,
    budget: usize,
) -> Result<Tail> {
    let dir = if end > start { 1.0 } else { -1.0 };
    let next = |k: u32| -> f64 {
        if end.is_infinite() {
            start + dir * ((2f64).powi(k as i32) - 1.0)
        } else {
            end - (end - start) * 0.5f64.powi(k as i32)
        }
    };
    let mut sum = 0.0;
    let mut prev_inc: Option<f64> = None;
    let mut flat_steps = 0;
    let mut a = start;
    let max_steps = if end.is_infinite() { 1000 } else { 200 };
    for k in 1..=max_steps {
        let b = next(k);
        if b == a || !b.is_finite() {
            break;
        }
        let inc = integrate(f, a, b, tol, budget)?.abs();
        sum += inc;
        if sum > cap || !sum.is_finite() {
            return Ok(Tail::Infinite);
        }
        if inc == 0.0 {
            return Ok(Tail::Finite(sum));
        }
        if let Some(p) = prev_inc {
            let r = inc / p;
            if r < 0.9 && inc * r / (1.0 - r) < tol {
                return Ok(Tail::Finite(sum + inc * r / (1.0 - r)));
            }
            if r >= 0.999 {
                flat_steps += 1;
                if flat_steps >= 6 {
                    return Ok(Tail::Infinite);
                }
            } else {
                flat_steps = 0;
            }
        }
        prev_inc = Some(inc);
        a = b;
    }
    Err(GeomError::Inconclusive { side: if dir > 0.0 { "upper" } else { "lower" } })
}
