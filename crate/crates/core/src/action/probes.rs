//! Sampled estimates of the small-time regularity constants of `A_t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ActionKernel, ActionOptions, FundamentalSolution, PlanarKernel};
use crate::error::{HjError, Result};
use crate::linalg::{sample_ball, sample_shell, Vector};
use crate::models::TonelliModel;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSample {
    pub y: Vector,
    pub z: Vector,
    pub h: f64,
    pub excess: f64,
    pub ratio: f64,
    /// Largest multiplicity hint among the solves behind this sample.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityProbeReport {
    pub constant_estimate: f64,
    pub samples: Vec<ProbeSample>,
    pub worst_ratio: f64,
    /// Samples whose solves found more than one local minimizer.
    pub flagged: usize,
    pub verdict: bool,
}

const DEFAULT_SEED: u64 = 0x9e37_79b9;

fn probe_kernel(model: &TonelliModel) -> PlanarKernel {
    PlanarKernel::with_options(
        model.clone(),
        ActionOptions {
            multistart: 3,
            ..ActionOptions::default()
        },
    )
}

fn check_time(t: f64, upper: f64) -> Result<()> {
    if !(t > 0.0 && t < upper) {
        return Err(HjError::InvalidInput(format!(
            "probe time must lie in (0, {upper}), got {t}"
        )));
    }
    Ok(())
}

/// Midpoint convexity of `y -> A_t(x, y)`: samples `y` in `B(x, lambda t / 2)`
/// and `z` with `lambda t / 8 <= |z| < lambda t / 2`, so `y +- z` stay in
/// `B(x, lambda t)`, and reports the infimum of `excess * t / |z|^2`.
pub fn probe_convexity(
    model: &TonelliModel,
    x: &Vector,
    t: f64,
    lambda: f64,
    sample_count: usize,
) -> Result<RegularityProbeReport> {
    check_time(t, 1.0)?;
    probe_convexity_with(
        &probe_kernel(model),
        x,
        t,
        lambda,
        sample_count,
        DEFAULT_SEED,
    )
}

pub fn probe_convexity_with(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    lambda: f64,
    sample_count: usize,
    seed: u64,
) -> Result<RegularityProbeReport> {
    if !(lambda > 0.0) || sample_count == 0 {
        return Err(HjError::InvalidInput(
            "probe needs lambda > 0 and at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * lambda * t;
    let zero = Vector::zeros(x.len());
    let mut samples = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let y = sample_ball(&mut rng, x, half);
        let z = sample_shell(&mut rng, &zero, 0.25 * half, half);
        let center = kernel.solve(x, &y, t, None)?;
        let warm = center.initial_covector();
        let plus = kernel.solve(x, &(&y + &z), t, Some(&warm))?;
        let minus = kernel.solve(x, &(&y - &z), t, Some(&warm))?;
        let excess = plus.value + minus.value - 2.0 * center.value;
        let ratio = excess * t / z.norm_squared();
        let multiplicity = multiplicity(&[&center, &plus, &minus]);
        samples.push(ProbeSample {
            y,
            z,
            h: 0.0,
            excess,
            ratio,
            multiplicity,
        });
    }
    let estimate = samples
        .iter()
        .map(|s| s.ratio)
        .fold(f64::INFINITY, f64::min);
    let flagged = samples.iter().filter(|s| s.multiplicity > 1).count();
    Ok(RegularityProbeReport {
        constant_estimate: estimate,
        worst_ratio: estimate,
        flagged,
        verdict: estimate > 0.0,
        samples,
    })
}

fn multiplicity(sols: &[&FundamentalSolution]) -> usize {
    sols.iter().map(|s| s.multiplicity_hint).max().unwrap_or(1)
}

/// Reports above this are treated as unbounded.
pub const SEMICONCAVITY_CAP: f64 = 1e6;

struct SemiPoint {
    y: Vector,
    z: Vector,
    h: f64,
}

fn semi_eval(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    p: &SemiPoint,
) -> Result<(f64, f64, usize)> {
    let center = kernel.solve(x, &p.y, t, None)?;
    let warm = center.initial_covector();
    let plus = kernel.solve(x, &(&p.y + &p.z), t + p.h, Some(&warm))?;
    let minus = kernel.solve(x, &(&p.y - &p.z), t - p.h, Some(&warm))?;
    let excess = plus.value + minus.value - 2.0 * center.value;
    let denom = p.h * p.h + p.z.norm_squared();
    let ratio = if denom > 0.0 { excess * t / denom } else { 0.0 };
    Ok((excess, ratio, multiplicity(&[&center, &plus, &minus])))
}

/// Two-sided semiconcavity in `(t, y)`: samples `y` in `B(x, lambda t)`,
/// `|h| < t/2`, `|z| < lambda t` and reports the supremum of
/// `excess * t / (h^2 + |z|^2)` for
/// `excess = A_{t+h}(x, y+z) + A_{t-h}(x, y-z) - 2 A_t(x, y)`.
///
/// The supremum sits on the edge of the sample region, so the best samples
/// are polished by a bounded compass search before reporting.
pub fn probe_semiconcavity(
    model: &TonelliModel,
    x: &Vector,
    t: f64,
    lambda: f64,
    sample_count: usize,
) -> Result<RegularityProbeReport> {
    check_time(t, 2.0 / 3.0)?;
    probe_semiconcavity_with(
        &probe_kernel(model),
        x,
        t,
        lambda,
        sample_count,
        DEFAULT_SEED,
    )
}

pub fn probe_semiconcavity_with(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    lambda: f64,
    sample_count: usize,
    seed: u64,
) -> Result<RegularityProbeReport> {
    if !(lambda > 0.0) || sample_count == 0 {
        return Err(HjError::InvalidInput(
            "probe needs lambda > 0 and at least one sample".into(),
        ));
    }
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ry = lambda * t;
    let rh = 0.5 * t;
    let zero = Vector::zeros(n);
    let mut samples = Vec::with_capacity(sample_count);
    let mut points = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let y = sample_ball(&mut rng, x, ry);
        let h = rng.gen_range(-rh..rh);
        let z = sample_ball(&mut rng, &zero, ry);
        let p = SemiPoint { y, z, h };
        let (excess, ratio, mult) = semi_eval(kernel, x, t, &p)?;
        samples.push(ProbeSample {
            y: p.y.clone(),
            z: p.z.clone(),
            h: p.h,
            excess,
            ratio,
            multiplicity: mult,
        });
        points.push(p);
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .ratio
            .partial_cmp(&samples[a].ratio)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut best = samples[order[0]].ratio;
    for &idx in order.iter().take(3) {
        let polished = polish(kernel, x, t, ry, rh, &points[idx], samples[idx].ratio)?;
        best = best.max(polished);
    }

    let flagged = samples.iter().filter(|s| s.multiplicity > 1).count();
    Ok(RegularityProbeReport {
        constant_estimate: best,
        worst_ratio: best,
        flagged,
        verdict: best.is_finite() && best <= SEMICONCAVITY_CAP,
        samples,
    })
}

/// Compass search on `(y, h, z)` that keeps the point strictly inside the
/// sample region.
fn polish(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    ry: f64,
    rh: f64,
    start: &SemiPoint,
    start_ratio: f64,
) -> Result<f64> {
    let n = x.len();
    let dims = 2 * n + 1;
    let shrink = 1.0 - 1e-3;
    let inside = |p: &SemiPoint| {
        (&p.y - x).norm() < ry * shrink && p.h.abs() < rh * shrink && p.z.norm() < ry * shrink
    };
    let mut cur = SemiPoint {
        y: start.y.clone(),
        z: start.z.clone(),
        h: start.h,
    };
    let mut cur_ratio = start_ratio;
    let mut step = 0.25 * ry.min(rh);
    for _ in 0..40 {
        let mut moved = false;
        for d in 0..dims {
            for sign in [1.0, -1.0] {
                let mut trial = SemiPoint {
                    y: cur.y.clone(),
                    z: cur.z.clone(),
                    h: cur.h,
                };
                if d < n {
                    trial.y[d] += sign * step;
                } else if d < 2 * n {
                    trial.z[d - n] += sign * step;
                } else {
                    trial.h += sign * step;
                }
                if !inside(&trial) {
                    continue;
                }
                let (_, ratio, _) = semi_eval(kernel, x, t, &trial)?;
                if ratio > cur_ratio {
                    cur = trial;
                    cur_ratio = ratio;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
            if step < 1e-4 * ry.min(rh) {
                break;
            }
        }
    }
    Ok(cur_ratio)
}

/// Ratios from the main regularity estimate for minimizers to nearby endpoints.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularityRatios {
    /// `||xi_2 - xi_1||_inf^2 * t / |dy|^2`
    pub sup_position: f64,
    /// `int |p_2 - p_1|^2 * t / |dy|^2`
    pub dual_arc: f64,
    /// `int |xi_2' - xi_1'|^2 * t / |dy|^2`
    pub velocity: f64,
}

pub fn main_regularity_check(
    model: &TonelliModel,
    x: &Vector,
    t: f64,
    y1: &Vector,
    y2: &Vector,
) -> Result<RegularityRatios> {
    main_regularity_check_with(
        &PlanarKernel::with_options(model.clone(), ActionOptions::default()),
        x,
        t,
        y1,
        y2,
    )
}

pub fn main_regularity_check_with(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    y1: &Vector,
    y2: &Vector,
) -> Result<RegularityRatios> {
    let dy2 = (y2 - y1).norm_squared();
    if dy2 == 0.0 {
        return Ok(RegularityRatios {
            sup_position: 0.0,
            dual_arc: 0.0,
            velocity: 0.0,
        });
    }
    let a = kernel.solve(x, y1, t, None)?;
    let b = kernel.solve(x, y2, t, Some(&a.initial_covector()))?;
    let (ta, tb) = (&a.minimizer, &b.minimizer);
    if ta.nodes.len() != tb.nodes.len() {
        return Err(HjError::InvalidInput(
            "minimizers were sampled on different grids".into(),
        ));
    }
    let sup = ta
        .xi
        .iter()
        .zip(&tb.xi)
        .map(|(p, q)| (p - q).norm_squared())
        .fold(0.0, f64::max);
    let integral = |fa: &[Vector], fb: &[Vector]| -> f64 {
        let vals: Vec<f64> = fa
            .iter()
            .zip(fb)
            .map(|(p, q)| (p - q).norm_squared())
            .collect();
        ta.nodes
            .windows(2)
            .zip(vals.windows(2))
            .map(|(s, v)| 0.5 * (s[1] - s[0]) * (v[0] + v[1]))
            .sum()
    };
    Ok(RegularityRatios {
        sup_position: sup * t / dy2,
        dual_arc: integral(&ta.p, &tb.p) * t / dy2,
        velocity: integral(&ta.xi_dot, &tb.xi_dot) * t / dy2,
    })
}
