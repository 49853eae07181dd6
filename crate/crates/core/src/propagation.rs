//! Singular generalized characteristics traced by concatenating intrinsic
//! steps, with a posteriori checks of the differential inclusion and of the
//! energy estimate along the arc.

use serde::Serialize;

use crate::action::ActionKernel;
use crate::error::{HjError, Result};
use crate::field::ScalarField;
use crate::lax_oleinik::{intrinsic_step, step_time, ConvolutionOptions, StepTimeOptions};
use crate::linalg::{project_onto_hull, Vector};
use crate::models::{lambda0, TonelliModel};
use crate::singularity::{
    minimal_energy_element, reachable_gradients, SamplingOptions, SuperdiffEstimate,
};

#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub sampling: SamplingOptions,
    pub convolution: ConvolutionOptions,
    pub step: StepTimeOptions,
    /// Probe radius coefficient for the step time; `1 + lambda0` when unset.
    pub probe_lambda: Option<f64>,
    /// Upper bound on a segment's duration.
    pub max_step: f64,
    /// Samples per segment at `t0 / 2^(levels-1), ..., t0 / 2, t0`.
    pub dyadic_levels: usize,
    /// Segment halvings allowed after a uniqueness violation.
    pub max_halvings: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            sampling: SamplingOptions::default(),
            convolution: ConvolutionOptions::default(),
            step: StepTimeOptions::default(),
            probe_lambda: None,
            max_step: 0.05,
            dyadic_levels: 4,
            max_halvings: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    UniquenessViolation,
    SolverFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularArc {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    pub p_x_list: Vec<Vector>,
    pub singular_flags: Vec<bool>,
    pub diameters: Vec<f64>,
    pub eps_sing: Vec<f64>,
    pub inclusion_residuals: Vec<f64>,
    /// Duration of every segment.
    pub step_times_used: Vec<f64>,
    /// Index into `points` of the start of the segment each point belongs to.
    pub segment_start: Vec<usize>,
    /// `D_y A_s(x, y(s))` at each point, `x` being its segment start; the
    /// seed carries its own `p_x`.
    pub dual_covectors: Vec<Vector>,
    /// Hull vertices of the superdifferential estimate at each point.
    pub hulls: Vec<Vec<Vector>>,
    pub stopped_reason: StopReason,
    /// Largest difference quotient `|y_{i+1} - y_i| / (t_{i+1} - t_i)`.
    pub lipschitz_constant: f64,
    /// Integer lift of each point on the torus (empty in the plane).
    pub winding: Vec<Vec<i64>>,
}

impl SingularArc {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn max_distance_from_seed(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p - &self.points[0]).norm())
            .fold(0.0, f64::max)
    }
}

/// `H_p(x, p_x)`, the right derivative of the intrinsic arc at `x`.
pub fn initial_velocity(
    u: &ScalarField,
    model: &TonelliModel,
    x: &Vector,
    sampling: &SamplingOptions,
) -> Result<Vector> {
    let est = reachable_gradients(u, x, sampling)?;
    let (p_x, _) = minimal_energy_element(model, x, &est);
    Ok(model.h_p(x, &p_x))
}

struct Recorded {
    p_x: Vector,
    est: SuperdiffEstimate,
}

fn record(
    u: &ScalarField,
    model: &TonelliModel,
    y: &Vector,
    sampling: &SamplingOptions,
) -> Result<Recorded> {
    let est = reachable_gradients(u, y, sampling)?;
    let (p_x, _) = minimal_energy_element(model, y, &est);
    Ok(Recorded { p_x, est })
}

/// Three-point finite-difference velocities on a nonuniform time grid;
/// one-sided at the ends.
fn fd_velocities(times: &[f64], points: &[Vector]) -> Vec<Vector> {
    let m = points.len();
    let n = points.first().map_or(0, |p| p.len());
    if m < 2 {
        return vec![Vector::zeros(n); m];
    }
    (0..m)
        .map(|i| {
            if i == 0 {
                (&points[1] - &points[0]) / (times[1] - times[0])
            } else if i == m - 1 {
                (&points[m - 1] - &points[m - 2]) / (times[m - 1] - times[m - 2])
            } else {
                let h1 = times[i] - times[i - 1];
                let h2 = times[i + 1] - times[i];
                &points[i - 1] * (-h2 / (h1 * (h1 + h2)))
                    + &points[i] * ((h2 - h1) / (h1 * h2))
                    + &points[i + 1] * (h1 / (h2 * (h1 + h2)))
            }
        })
        .collect()
}

fn inclusion_distance(model: &TonelliModel, y: &Vector, hull: &[Vector], velocity: &Vector) -> f64 {
    let images: Vec<Vector> = hull.iter().map(|p| model.h_p(y, p)).collect();
    project_onto_hull(&images, velocity).distance
}

/// Traces the intrinsic singular arc from `x0` up to `horizon`.
///
/// Each segment starts with a fresh step time, capped by the previous one and
/// by `max_step`, and records the maximizers of `u(y) - A_s(x, y)` at dyadic
/// fractions of the segment.
pub fn trace_arc(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x0: &Vector,
    horizon: f64,
    opts: &TraceOptions,
) -> Result<SingularArc> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(HjError::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let model = kernel.model();
    let seed = record(u, model, x0, &opts.sampling)?;
    if !seed.est.is_singular() {
        return Err(HjError::NotSingularSeed {
            diameter: seed.est.diameter,
        });
    }
    let lambda = match opts.probe_lambda {
        Some(l) => l,
        None => 1.0 + lambda0(model, u.lip_estimate)?,
    };
    let mut arc = SingularArc {
        times: vec![0.0],
        points: vec![x0.clone()],
        p_x_list: vec![seed.p_x.clone()],
        singular_flags: vec![true],
        diameters: vec![seed.est.diameter],
        eps_sing: vec![seed.est.eps_sing()],
        inclusion_residuals: Vec::new(),
        step_times_used: Vec::new(),
        segment_start: vec![0],
        dual_covectors: vec![seed.p_x],
        hulls: vec![seed.est.hull_vertices],
        stopped_reason: StopReason::Horizon,
        lipschitz_constant: 0.0,
        winding: Vec::new(),
    };
    let mut now = 0.0;
    let mut prev = f64::INFINITY;
    let end_tol = 1e-12 * (1.0 + horizon);
    'segments: while horizon - now > end_tol {
        let start_idx = arc.points.len() - 1;
        let x = arc.points[start_idx].clone();
        let local =
            step_time(u, kernel, &x, lambda, &opts.step).map_err(|e| HjError::StepFailure {
                time: now,
                source: Box::new(e),
            })?;
        let mut seg = local.min(prev).min(opts.max_step).min(horizon - now);
        let mut halvings = 0;
        let samples = loop {
            let mut out = Vec::with_capacity(opts.dyadic_levels);
            let mut failure = None;
            for k in (0..opts.dyadic_levels).rev() {
                let s = seg / f64::powi(2.0, k as i32);
                match intrinsic_step(u, kernel, &x, s, &opts.convolution) {
                    Ok(r) => out.push((s, r)),
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            match failure {
                None => break out,
                Some(HjError::UniquenessViolation { .. }) if halvings < opts.max_halvings => {
                    seg *= 0.5;
                    halvings += 1;
                }
                Some(HjError::UniquenessViolation { .. }) => {
                    arc.stopped_reason = StopReason::UniquenessViolation;
                    break 'segments;
                }
                Some(e) if arc.points.len() > 1 => {
                    let _ = e;
                    arc.stopped_reason = StopReason::SolverFailure;
                    break 'segments;
                }
                Some(e) => {
                    return Err(HjError::StepFailure {
                        time: now,
                        source: Box::new(e),
                    })
                }
            }
        };
        for (s, r) in samples {
            let rec = record(u, model, &r.y, &opts.sampling)?;
            arc.times.push(now + s);
            arc.points.push(r.y.clone());
            arc.p_x_list.push(rec.p_x);
            arc.singular_flags.push(rec.est.is_singular());
            arc.diameters.push(rec.est.diameter);
            arc.eps_sing.push(rec.est.eps_sing());
            arc.segment_start.push(start_idx);
            arc.dual_covectors.push(r.kernel.grad_y.clone());
            arc.hulls.push(rec.est.hull_vertices);
        }
        arc.step_times_used.push(seg);
        now += seg;
        prev = seg;
    }
    finish(&mut arc, model);
    Ok(arc)
}

pub(crate) fn finish(arc: &mut SingularArc, model: &TonelliModel) {
    let vel = fd_velocities(&arc.times, &arc.points);
    arc.inclusion_residuals = (0..arc.points.len())
        .map(|i| inclusion_distance(model, &arc.points[i], &arc.hulls[i], &vel[i]))
        .collect();
    arc.lipschitz_constant = arc
        .points
        .windows(2)
        .zip(arc.times.windows(2))
        .map(|(p, t)| (&p[1] - &p[0]).norm() / (t[1] - t[0]))
        .fold(0.0, f64::max);
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionSample {
    pub time: f64,
    pub velocity: Vector,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionCertificate {
    pub samples: Vec<InclusionSample>,
    pub max_residual: f64,
    pub velocity_scale: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks `y' in co H_p(y, D*u(y))` at the interior points of `arc`, with
/// superdifferentials re-estimated from `u`.
pub fn certify_inclusion(
    arc: &SingularArc,
    u: &ScalarField,
    model: &TonelliModel,
    tol: f64,
    sampling: &SamplingOptions,
) -> Result<InclusionCertificate> {
    if arc.points.len() < 3 {
        return Err(HjError::InvalidInput(
            "certification needs at least three arc points".into(),
        ));
    }
    let vel = fd_velocities(&arc.times, &arc.points);
    let mut samples = Vec::new();
    for i in 1..arc.points.len() - 1 {
        let est = reachable_gradients(u, &arc.points[i], sampling)?;
        let residual = inclusion_distance(model, &arc.points[i], &est.hull_vertices, &vel[i]);
        samples.push(InclusionSample {
            time: arc.times[i],
            velocity: vel[i].clone(),
            residual,
        });
    }
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let velocity_scale = samples
        .iter()
        .map(|s| s.velocity.norm())
        .fold(0.0, f64::max);
    Ok(InclusionCertificate {
        passed: max_residual <= tol * (1.0 + velocity_scale),
        samples,
        max_residual,
        velocity_scale,
        tol,
    })
}

#[derive(Debug, Clone)]
pub struct EnergyOptions {
    /// Fixed weight of the `|p(t) - p_x|^2` term.
    pub c2: f64,
    /// Largest `C1` accepted as a feasible fit.
    pub c1_cap: f64,
    pub sampling: SamplingOptions,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            c2: 0.1,
            c1_cap: 10.0,
            sampling: SamplingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySample {
    pub index: usize,
    pub segment_start: usize,
    /// Time since the segment start.
    pub time: f64,
    /// `H(y(t), p(t)) - H(x, p_x)`.
    pub energy_gap: f64,
    /// `|p(t) - p_x|^2`.
    pub deviation: f64,
    /// `H(y(t), p(t)) - H(x, p_x) - C1 t + C2 |p(t) - p_x|^2`.
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub samples: Vec<EnergySample>,
    pub c1: f64,
    pub c2: f64,
    pub feasible: bool,
}

/// Fits the smallest `C1 >= 0` with `H(y(t), p(t)) <= H(x, p_x) + C1 t - C2 |p(t) - p_x|^2`
/// on every recorded sample, `p_x` being recomputed from `u` at each segment
/// start. The fit is feasible when `C1 <= c1_cap`.
pub fn energy_monitor(
    arc: &SingularArc,
    u: &ScalarField,
    model: &TonelliModel,
    opts: &EnergyOptions,
) -> Result<EnergyReport> {
    let mut starts: Vec<(usize, Vector, f64)> = Vec::new();
    let mut raw = Vec::new();
    for i in 1..arc.points.len() {
        let j = arc.segment_start[i];
        if !starts.iter().any(|(k, _, _)| *k == j) {
            let est = reachable_gradients(u, &arc.points[j], &opts.sampling)?;
            let (p_x, h) = minimal_energy_element(model, &arc.points[j], &est);
            starts.push((j, p_x, h));
        }
        let (_, p_x, h_ref) = starts
            .iter()
            .find(|(k, _, _)| *k == j)
            .expect("segment start recorded");
        let p = &arc.dual_covectors[i];
        let gap = model.h_value(&arc.points[i], p) - h_ref;
        let deviation = (p - p_x).norm_squared();
        raw.push((i, j, arc.times[i] - arc.times[j], gap, deviation));
    }
    let c2 = opts.c2;
    let c1 = raw
        .iter()
        .map(|&(_, _, s, gap, dev)| (gap + c2 * dev) / s)
        .fold(0.0, f64::max);
    let samples = raw
        .into_iter()
        .map(
            |(index, segment_start, time, energy_gap, deviation)| EnergySample {
                index,
                segment_start,
                time,
                energy_gap,
                deviation,
                excess: energy_gap - c1 * time + c2 * deviation,
            },
        )
        .collect();
    Ok(EnergyReport {
        samples,
        c1,
        c2,
        feasible: c1 <= opts.c1_cap,
    })
}
