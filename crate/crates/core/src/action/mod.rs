//! Fundamental solutions `A_t(x, y)` by action minimization.
//!
//! A direct phase minimizes the discrete action from several seeds; each
//! distinct discrete minimizer is then refined by shooting on Hamilton's
//! equations, which restores the accuracy lost to the discretization and
//! yields the dual arc `p(s) = L_v(xi(s), xi'(s))` directly.

mod discrete;
mod probes;
mod shooting;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{HjError, Result};
use crate::linalg::Vector;
use crate::models::{velocity_bound_kappa, TonelliModel};

pub use probes::{
    main_regularity_check, main_regularity_check_with, probe_convexity, probe_convexity_with,
    probe_semiconcavity, probe_semiconcavity_with, ProbeSample, RegularityProbeReport,
    RegularityRatios,
};

use discrete::minimize_discrete;
use shooting::Integrator;

#[derive(Debug, Clone)]
pub struct ActionOptions {
    /// Node count `m`; default `max(32, ceil(64 t))`.
    pub nodes: Option<usize>,
    /// Number of direct-phase seeds: the straight segment plus bump perturbations.
    pub multistart: usize,
    /// RK4 steps per node interval during shooting.
    pub substeps: usize,
    /// Target terminal mismatch of the shooting Newton, relative to `1 + |y|`.
    pub shoot_tol: f64,
    /// Largest mismatch still accepted when the target cannot be reached.
    pub accept_tol: f64,
    pub max_newton: usize,
    pub seed: u64,
    /// Initial covector to start shooting from, skipping the direct phase.
    pub warm_start: Option<Vector>,
    /// Reject minimizers leaving the a priori ball around `x`.
    pub trust_region: bool,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self {
            nodes: None,
            multistart: 5,
            substeps: 2,
            shoot_tol: 1e-12,
            accept_tol: 1e-10,
            max_newton: 40,
            seed: 0x5eed,
            warm_start: None,
            trust_region: true,
        }
    }
}

impl ActionOptions {
    /// Single-seed settings for inner loops that supply warm starts.
    pub fn fast() -> Self {
        Self {
            multistart: 1,
            ..Self::default()
        }
    }

    pub fn node_count(&self, t: f64) -> usize {
        self.nodes
            .unwrap_or_else(|| 32usize.max((64.0 * t).ceil() as usize))
    }
}

/// A minimizer sampled on a uniform time grid together with its dual arc.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub xi: Vec<Vector>,
    pub xi_dot: Vec<Vector>,
    pub p: Vec<Vector>,
    pub energy: Vec<f64>,
    pub action: f64,
    /// Terminal mismatch `|xi(t) - y|` of the shooting solve before snapping.
    pub residual: f64,
}

impl Trajectory {
    pub fn max_speed(&self) -> f64 {
        self.xi_dot.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max_i |E_i - E_0| / (1 + |E_0|)`.
    pub fn energy_variation(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
            / (1.0 + e0.abs())
    }

    pub fn max_distance_from_start(&self) -> f64 {
        let x = &self.xi[0];
        self.xi.iter().map(|q| (q - x).norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FundamentalSolution {
    pub value: f64,
    pub grad_y: Vector,
    pub grad_x: Vector,
    pub dt: f64,
    pub energy: f64,
    pub minimizer: Trajectory,
    pub multiplicity_hint: usize,
}

impl FundamentalSolution {
    /// The initial covector `p(0) = -D_x A_t(x, y)`, usable as a warm start.
    pub fn initial_covector(&self) -> Vector {
        -&self.grad_x
    }
}

/// Source of fundamental solutions for the Lax-Oleinik and propagation code;
/// implemented for the plane and for the torus quotient.
pub trait ActionKernel: Send + Sync {
    fn model(&self) -> &TonelliModel;
    fn solve(
        &self,
        x: &Vector,
        y: &Vector,
        t: f64,
        warm: Option<&Vector>,
    ) -> Result<FundamentalSolution>;
}

#[derive(Debug, Clone)]
pub struct PlanarKernel {
    pub model: TonelliModel,
    pub options: ActionOptions,
}

impl PlanarKernel {
    pub fn new(model: TonelliModel) -> Self {
        Self {
            model,
            options: ActionOptions::fast(),
        }
    }

    pub fn with_options(model: TonelliModel, options: ActionOptions) -> Self {
        Self { model, options }
    }
}

impl ActionKernel for PlanarKernel {
    fn model(&self) -> &TonelliModel {
        &self.model
    }

    fn solve(
        &self,
        x: &Vector,
        y: &Vector,
        t: f64,
        warm: Option<&Vector>,
    ) -> Result<FundamentalSolution> {
        let mut opts = self.options.clone();
        if warm.is_some() {
            opts.warm_start = warm.cloned();
        }
        fundamental_solution_with(&self.model, x, y, t, &opts)
    }
}

struct Candidate {
    traj: Trajectory,
    p0: Vector,
}

fn check_inputs(model: &TonelliModel, x: &Vector, y: &Vector, t: f64) -> Result<()> {
    let n = model.dim();
    if x.len() != n || y.len() != n {
        return Err(HjError::InvalidInput(format!(
            "points must have dimension {n}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(HjError::InvalidInput(format!(
            "time must be positive, got {t}"
        )));
    }
    if x.iter().chain(y.iter()).any(|a| !a.is_finite()) {
        return Err(HjError::InvalidInput("non-finite endpoint".into()));
    }
    Ok(())
}

/// Newton on the initial covector so that the Hamiltonian flow from `x`
/// reaches `y` at time `t`.
fn shoot_to(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
    p0: &Vector,
    m: usize,
    opts: &ActionOptions,
) -> std::result::Result<Candidate, f64> {
    let n = model.dim();
    let h = model.h();
    let mut integ = Integrator::new(h, true);
    let target_scale = 1.0 + y.amax();
    let mismatch = |shot: &shooting::Shot| -> f64 {
        shot.x_end
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let mut p = p0.clone();
    let mut shot = integ.shoot(x.as_slice(), p.as_slice(), t, m, opts.substeps, false);
    let mut err = mismatch(&shot);
    if !err.is_finite() {
        return Err(f64::INFINITY);
    }
    for _ in 0..opts.max_newton {
        if err <= opts.shoot_tol * target_scale {
            break;
        }
        let jac = DMatrix::from_row_slice(n, n, &shot.jac);
        let f = Vector::from_iterator(n, shot.x_end.iter().zip(y.iter()).map(|(a, b)| a - b));
        let Some(delta) = jac.lu().solve(&(-f)) else {
            break;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = &p + &delta * alpha;
            let tshot = integ.shoot(x.as_slice(), trial.as_slice(), t, m, opts.substeps, false);
            let terr = mismatch(&tshot);
            if terr.is_finite() && terr < err * (1.0 - 1e-4 * alpha) {
                p = trial;
                shot = tshot;
                err = terr;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if err > opts.accept_tol * target_scale {
        return Err(err);
    }
    let mut plain = Integrator::new(h, false);
    let rec = plain.shoot(x.as_slice(), p.as_slice(), t, m, opts.substeps, true);
    let mut xi: Vec<Vector> = rec
        .xs
        .iter()
        .map(|q| Vector::from_column_slice(q))
        .collect();
    let ps: Vec<Vector> = rec
        .ps
        .iter()
        .map(|q| Vector::from_column_slice(q))
        .collect();
    // Endpoint exactness: the remaining mismatch is below the accept tolerance.
    xi[0] = x.clone();
    xi[m] = y.clone();
    let xi_dot: Vec<Vector> = xi.iter().zip(&ps).map(|(q, pp)| model.h_p(q, pp)).collect();
    let nodes = (0..=m).map(|k| t * k as f64 / m as f64).collect();
    Ok(Candidate {
        traj: Trajectory {
            t,
            nodes,
            xi,
            xi_dot,
            p: ps,
            energy: rec.hs,
            action: rec.action,
            residual: err,
        },
        p0: p,
    })
}

fn seed_paths(x: &Vector, y: &Vector, m: usize, count: usize, seed: u64) -> Vec<Vec<Vector>> {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 0.2 * (y - x).norm();
    let straight: Vec<Vector> = (0..=m)
        .map(|k| x + (y - x) * (k as f64 / m as f64))
        .collect();
    let mut out = vec![straight.clone()];
    for j in 1..count {
        let mut dir = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = dir.norm();
        if norm < 1e-12 {
            dir = Vector::zeros(n);
            dir[0] = 1.0;
        } else {
            dir /= norm;
        }
        let freq = ((j + 1) / 2) as f64;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let path = straight
            .iter()
            .enumerate()
            .map(|(k, q)| {
                let s = k as f64 / m as f64;
                q + &dir * (sign * amp * (PI * freq * s).sin())
            })
            .collect();
        out.push(path);
    }
    out
}

fn linf_distance(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).amax())
        .fold(0.0, f64::max)
}

fn lexicographic_less(a: &Vector, b: &Vector) -> bool {
    for (u, v) in a.iter().zip(b.iter()) {
        if u < v {
            return true;
        }
        if u > v {
            return false;
        }
    }
    false
}

fn trust_radius(model: &TonelliModel, x: &Vector, y: &Vector, t: f64) -> Result<f64> {
    let r = (y - x).norm() / t;
    Ok(velocity_bound_kappa(model, r)?.kappa * t.max(1.0))
}

/// Runs the full solve and returns every distinct refined minimizer, best first.
fn solve_all(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
    opts: &ActionOptions,
) -> Result<Vec<Candidate>> {
    check_inputs(model, x, y, t)?;
    let m = opts.node_count(t).max(2);
    let distinct = 1e-4 * (1.0 + (y - x).norm());
    let mut found: Vec<Candidate> = Vec::new();

    if let Some(p0) = &opts.warm_start {
        if p0.len() == model.dim() {
            if let Ok(c) = shoot_to(model, x, y, t, p0, m, opts) {
                found.push(c);
            }
        }
    }

    if found.is_empty() {
        let mut best_residual = f64::INFINITY;
        let mut discrete_paths: Vec<Vec<Vector>> = Vec::new();
        for seed in seed_paths(x, y, m, opts.multistart.max(1), opts.seed) {
            let sol = minimize_discrete(model.l(), seed, t, 60);
            if discrete_paths
                .iter()
                .any(|p| linf_distance(p, &sol.path) <= distinct)
            {
                continue;
            }
            discrete_paths.push(sol.path.clone());
            match shoot_to(model, x, y, t, &sol.p0, m, opts) {
                Ok(c) => {
                    if !found
                        .iter()
                        .any(|f| linf_distance(&f.traj.xi, &c.traj.xi) <= distinct)
                    {
                        found.push(c);
                    }
                }
                Err(residual) => best_residual = best_residual.min(residual),
            }
        }
        if found.is_empty() {
            return Err(HjError::NoConvergence {
                starts: opts.multistart.max(1),
                residual: best_residual,
            });
        }
    }

    found.sort_by(|a, b| {
        let (va, vb) = (a.traj.action, b.traj.action);
        let tie = 1e-12 * (1.0 + va.abs().max(vb.abs()));
        if (va - vb).abs() <= tie {
            if lexicographic_less(&a.p0, &b.p0) {
                std::cmp::Ordering::Less
            } else if lexicographic_less(&b.p0, &a.p0) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        } else {
            va.partial_cmp(&vb).unwrap_or(std::cmp::Ordering::Equal)
        }
    });

    if opts.trust_region {
        let radius = trust_radius(model, x, y, t)?;
        let reached = found[0].traj.max_distance_from_start();
        if reached > radius {
            return Err(HjError::BlowUp { radius, reached });
        }
    }
    Ok(found)
}

/// Best local minimizer of the action from `x` to `y` in time `t`.
pub fn minimize_action(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
    opts: &ActionOptions,
) -> Result<Trajectory> {
    let mut all = solve_all(model, x, y, t, opts)?;
    Ok(all.swap_remove(0).traj)
}

/// `A_t(x, y)` with its derivatives `D_y A = p(t)`, `D_x A = -p(0)` and
/// `D_t A = -E`, using default options.
pub fn fundamental_solution(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
) -> Result<FundamentalSolution> {
    fundamental_solution_with(model, x, y, t, &ActionOptions::default())
}

pub fn fundamental_solution_with(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
    opts: &ActionOptions,
) -> Result<FundamentalSolution> {
    let mut all = solve_all(model, x, y, t, opts)?;
    let multiplicity_hint = all.len();
    let best = all.swap_remove(0);
    let traj = best.traj;
    let energy = traj.energy[0];
    Ok(FundamentalSolution {
        value: traj.action,
        grad_y: traj.p[traj.p.len() - 1].clone(),
        grad_x: -traj.p[0].clone(),
        dt: -energy,
        energy,
        minimizer: traj,
        multiplicity_hint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{free_particle, harmonic, quartic1d};
    use nalgebra::dvector;

    #[test]
    fn free_particle_straight_line() {
        let m = free_particle(2);
        let fs = fundamental_solution(&m, &dvector![0.0, 0.0], &dvector![1.0, 0.0], 0.5).unwrap();
        assert!((fs.value - 1.0).abs() < 1e-12);
        assert!((&fs.grad_y - dvector![2.0, 0.0]).norm() < 1e-10);
        assert!((&fs.grad_x + dvector![2.0, 0.0]).norm() < 1e-10);
        assert!((fs.dt + 2.0).abs() < 1e-10);
        assert_eq!(fs.multiplicity_hint, 1);
        for v in &fs.minimizer.xi_dot {
            assert!((v - dvector![2.0, 0.0]).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_trajectory_when_endpoints_coincide() {
        let m = free_particle(1);
        let traj = minimize_action(
            &m,
            &dvector![0.3],
            &dvector![0.3],
            0.7,
            &ActionOptions::default(),
        )
        .unwrap();
        assert!(traj.action.abs() < 1e-14);
        assert!(traj.xi.iter().all(|q| (q[0] - 0.3).abs() < 1e-14));
    }

    #[test]
    fn harmonic_closed_form() {
        let m = harmonic(1, 1.0);
        let fs = fundamental_solution(&m, &dvector![0.0], &dvector![1.0], 1.0).unwrap();
        let exact = 1f64.cos() / (2.0 * 1f64.sin());
        assert!((fs.value - exact).abs() < 1e-9, "{} vs {exact}", fs.value);
        assert!((fs.grad_y[0] - 1f64.cos() / 1f64.sin()).abs() < 1e-8);
        assert!(fs.minimizer.energy_variation() < 1e-8);
    }

    #[test]
    fn warm_start_reproduces_cold_solve() {
        let m = quartic1d(0.5);
        let (x, y) = (dvector![0.0], dvector![0.8]);
        let cold = fundamental_solution(&m, &x, &y, 0.6).unwrap();
        let opts = ActionOptions {
            warm_start: Some(cold.initial_covector()),
            ..ActionOptions::fast()
        };
        let warm = fundamental_solution_with(&m, &x, &y, 0.6, &opts).unwrap();
        assert!((cold.value - warm.value).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_time() {
        let m = free_particle(1);
        assert!(matches!(
            fundamental_solution(&m, &dvector![0.0], &dvector![1.0], 0.0),
            Err(HjError::InvalidInput(_))
        ));
    }
}
