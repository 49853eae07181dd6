//! Barrier functions and the Lax-Oleinik operators
//! `T+_t u(x) = sup_y u(y) - A_t(x, y)` and `T-_t u(x) = inf_y u(y) + A_t(y, x)`,
//! computed as bounded-radius optimizations over `B(x, lambda0 t)`.

mod bundle;

use serde::Serialize;

use crate::action::{probe_convexity_with, ActionKernel, FundamentalSolution};
use crate::error::{HjError, Result};
use crate::field::ScalarField;
use crate::linalg::Vector;
use crate::models::lambda0;

use bundle::{BundleSettings, OracleValue};

#[derive(Debug, Clone)]
pub struct ConvolutionOptions {
    /// Add the `2n` axis seeds at radius `lambda0 t / 2` to the center seed.
    pub ring_seeds: bool,
    pub max_iter: usize,
    /// Predicted-decrease tolerance of the bundle method, relative to `t`.
    pub tol: f64,
    /// Seeds agree when their maximizers lie within `uniqueness_tol (1 + lambda0 t)`.
    pub uniqueness_tol: f64,
    /// Step of the central differences used for supergradients of `u`.
    pub fd_step: f64,
    /// Overrides `lambda0 = theta*(Lip(u) + 1) + c0 + K(0)`.
    pub lambda0: Option<f64>,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        Self {
            ring_seeds: true,
            max_iter: 300,
            tol: 1e-13,
            uniqueness_tol: 1e-5,
            fd_step: 1e-7,
            lambda0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionResult {
    pub value: f64,
    pub y: Vector,
    /// The extremizer lies within 1% of the search-ball radius.
    pub boundary_flag: bool,
    /// All seeds converged to the same extremizer.
    pub concavity_ok: bool,
    pub radius: f64,
    pub lambda0: f64,
    /// Largest distance between the extremizers found from different seeds.
    pub spread: f64,
    pub iterations: usize,
    /// Fundamental solution at the extremizer: `A_t(x, y)` for the
    /// sup-convolution, `A_t(y, x)` for the inf-convolution.
    pub kernel: FundamentalSolution,
}

impl ConvolutionResult {
    /// `D_y A_t(x, y)` at the maximizer of a sup-convolution.
    pub fn dual_covector(&self) -> &Vector {
        &self.kernel.grad_y
    }
}

/// `phi^x_t(y) = u(y) - A_t(x, y)`.
pub fn barrier_phi(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    y: &Vector,
) -> Result<f64> {
    Ok(u.value(y) - kernel.solve(x, y, t, None)?.value)
}

/// `psi^x_t(y) = u(y) + A_t(y, x)`.
pub fn barrier_psi(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    y: &Vector,
) -> Result<f64> {
    Ok(u.value(y) + kernel.solve(y, x, t, None)?.value)
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Sup,
    Inf,
}

struct SeedResult {
    y: Vector,
    value: f64,
    kernel: FundamentalSolution,
    iterations: usize,
}

fn search_lambda0(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    opts: &ConvolutionOptions,
) -> Result<f64> {
    match opts.lambda0 {
        Some(l) => Ok(l),
        None => lambda0(kernel.model(), u.lip_estimate),
    }
}

fn check(u: &ScalarField, kernel: &dyn ActionKernel, x: &Vector, t: f64) -> Result<()> {
    if x.len() != u.dim || u.dim != kernel.model().dim() {
        return Err(HjError::InvalidInput(
            "field, model and point dimensions differ".into(),
        ));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(HjError::InvalidInput(format!(
            "time must be positive, got {t}"
        )));
    }
    Ok(())
}

fn optimize_from(
    mode: Mode,
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    radius: f64,
    start: Vector,
    opts: &ConvolutionOptions,
) -> Result<SeedResult> {
    let fd = opts.fd_step;
    let mut warm: Option<Vector> = None;
    let oracle = |y: &Vector| -> Result<OracleValue<FundamentalSolution>> {
        let uy = u.value(y);
        let du = u.supergradient(y, fd * (1.0 + y.amax()));
        let out = match mode {
            // minimize -phi = A_t(x, y) - u(y)
            Mode::Sup => {
                let fs = kernel.solve(x, y, t, warm.as_ref())?;
                warm = Some(fs.initial_covector());
                OracleValue {
                    value: fs.value - uy,
                    subgradient: &fs.grad_y - du,
                    payload: fs,
                }
            }
            // minimize psi = u(y) + A_t(y, x)
            Mode::Inf => {
                let fs = kernel.solve(y, x, t, warm.as_ref())?;
                warm = Some(fs.initial_covector());
                OracleValue {
                    value: fs.value + uy,
                    subgradient: &fs.grad_x + du,
                    payload: fs,
                }
            }
        };
        Ok(out)
    };
    let settings = BundleSettings {
        mu: 1.0 / t,
        max_iter: opts.max_iter,
        tol: opts.tol * (1.0 + 1.0 / t),
        max_bundle: 4 * (x.len() + 1),
    };
    let out = bundle::minimize(oracle, start, x, radius, settings)?;
    let value = match mode {
        Mode::Sup => -out.best.value,
        Mode::Inf => out.best.value,
    };
    Ok(SeedResult {
        y: out.point,
        value,
        kernel: out.best.payload,
        iterations: out.iterations,
    })
}

fn convolve(
    mode: Mode,
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    opts: &ConvolutionOptions,
) -> Result<ConvolutionResult> {
    check(u, kernel, x, t)?;
    let lam0 = search_lambda0(u, kernel, opts)?;
    let radius = lam0 * t;
    let n = x.len();
    let mut seeds = vec![x.clone()];
    if opts.ring_seeds {
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut s = x.clone();
                s[i] += sign * 0.5 * radius;
                seeds.push(s);
            }
        }
    }
    let mut results = Vec::with_capacity(seeds.len());
    for s in seeds {
        results.push(optimize_from(mode, u, kernel, x, t, radius, s, opts)?);
    }
    let better = |a: f64, b: f64| match mode {
        Mode::Sup => a > b,
        Mode::Inf => a < b,
    };
    let mut best = 0;
    for i in 1..results.len() {
        if better(results[i].value, results[best].value) {
            best = i;
        }
    }
    let spread = results
        .iter()
        .map(|r| (&r.y - &results[best].y).norm())
        .fold(0.0, f64::max);
    let iterations = results.iter().map(|r| r.iterations).sum();
    let chosen = results.swap_remove(best);
    let dist = (&chosen.y - x).norm();
    Ok(ConvolutionResult {
        value: chosen.value,
        boundary_flag: dist >= 0.99 * radius,
        concavity_ok: spread <= opts.uniqueness_tol * (1.0 + radius),
        y: chosen.y,
        radius,
        lambda0: lam0,
        spread,
        iterations,
        kernel: chosen.kernel,
    })
}

/// `T+_t u(x)` and its maximizer over `B(x, lambda0 t)`.
pub fn sup_convolution(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    opts: &ConvolutionOptions,
) -> Result<ConvolutionResult> {
    convolve(Mode::Sup, u, kernel, x, t, opts)
}

/// `T-_t u(x)` and its minimizer over `B(x, lambda0 t)`.
pub fn inf_convolution(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    opts: &ConvolutionOptions,
) -> Result<ConvolutionResult> {
    convolve(Mode::Inf, u, kernel, x, t, opts)
}

/// The maximizer `y_{t,x}` of `phi^x_t` for `t` below the step time, where it
/// is unique. Seeds that disagree raise [`HjError::UniquenessViolation`].
pub fn intrinsic_step(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t: f64,
    opts: &ConvolutionOptions,
) -> Result<ConvolutionResult> {
    let mut o = opts.clone();
    o.ring_seeds = true;
    let r = convolve(Mode::Sup, u, kernel, x, t, &o)?;
    if !r.concavity_ok {
        return Err(HjError::UniquenessViolation {
            t,
            spread: r.spread,
        });
    }
    Ok(r)
}

/// Default probe radius coefficient `1 + lambda0` for [`step_time`].
pub fn step_time_lambda(u: &ScalarField, kernel: &dyn ActionKernel) -> Result<f64> {
    Ok(1.0 + lambda0(kernel.model(), u.lip_estimate)?)
}

#[derive(Debug, Clone, Copy)]
pub struct StepTimeOptions {
    pub probe_samples: usize,
    pub max_halvings: usize,
    pub seed: u64,
}

impl Default for StepTimeOptions {
    fn default() -> Self {
        Self {
            probe_samples: 8,
            max_halvings: 12,
            seed: 17,
        }
    }
}

/// `t0 = min(C2 / (2 C1), t_trial, 1)` where `C2` is the convexity-probe
/// constant of `A_t(x, .)` on `B(x, lambda t_trial)` at the first trial time
/// `1, 1/2, 1/4, ...` whose probe passes, and `C1` is the semiconcavity
/// constant of `u`.
pub fn step_time(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    lambda: f64,
    opts: &StepTimeOptions,
) -> Result<f64> {
    let c1 = u.semiconcavity_estimate;
    let mut trial = 1.0;
    let mut trials = Vec::new();
    for _ in 0..=opts.max_halvings {
        trials.push(trial);
        let passed =
            match probe_convexity_with(kernel, x, trial, lambda, opts.probe_samples, opts.seed) {
                Ok(report) if report.verdict && report.constant_estimate.is_finite() => {
                    Some(report.constant_estimate)
                }
                _ => None,
            };
        if let Some(c2) = passed {
            let by_ratio = if c1 > 0.0 {
                0.5 * c2 / c1
            } else {
                f64::INFINITY
            };
            return Ok(by_ratio.min(trial).min(1.0));
        }
        trial *= 0.5;
    }
    Err(HjError::ProbeFailure { trials })
}
