use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{hamiltonian_jet, lagrangian_jet, TonelliModel};
use crate::linalg::{min_eigenvalue, sample_ball, Matrix, Vector};

/// Where and how densely to sample when checking the Tonelli conditions.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub x_center: Vector,
    pub x_radius: f64,
    pub v_radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(dim: usize, x_radius: f64, v_radius: f64, count: usize) -> Self {
        Self {
            x_center: Vector::zeros(dim),
            x_radius,
            v_radius,
            count,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionMargin {
    pub name: String,
    /// Smallest slack over all samples; negative means violated.
    pub worst_margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TonelliReport {
    pub model: String,
    pub samples: usize,
    pub conditions: Vec<ConditionMargin>,
}

impl TonelliReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionMargin> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

struct Tracker {
    name: &'static str,
    worst: f64,
    tol: f64,
}

impl Tracker {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            worst: f64::INFINITY,
            tol,
        }
    }
    fn push(&mut self, margin: f64) {
        if margin.is_nan() {
            self.worst = f64::NEG_INFINITY;
        } else {
            self.worst = self.worst.min(margin);
        }
    }
    fn finish(self) -> ConditionMargin {
        ConditionMargin {
            name: self.name.to_string(),
            worst_margin: self.worst,
            pass: self.worst >= -self.tol,
        }
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Samples `(x, v)` and reports worst-case margins for the convexity (`L1`),
/// growth (`L2`) and regularity (`L3`) conditions, a finite-difference check
/// of the analytic derivatives, and the Hamiltonian counterparts: positive
/// definite `H_pp` (`H1`), the Fenchel identity (`H2`) and `H_pp L_vv = I` (`H3`).
pub fn check_tonelli(model: &TonelliModel, spec: &SampleSpec) -> TonelliReport {
    let n = model.dim();
    let b = model.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut l1 = Tracker::new("L1", 0.0);
    let mut l2 = Tracker::new("L2", 1e-12);
    let mut l3 = Tracker::new("L3", 1e-12);
    let mut fd = Tracker::new("derivatives", 0.0);
    let mut h1 = Tracker::new("H1", 0.0);
    let mut h2 = Tracker::new("H2", 0.0);
    let mut h3 = Tracker::new("H3", 0.0);

    for k in 0..spec.count {
        let x = sample_ball(&mut rng, &spec.x_center, spec.x_radius);
        // Include v = 0 once: convexity failures often sit there.
        let v = if k == 0 {
            Vector::zeros(n)
        } else {
            sample_ball(&mut rng, &Vector::zeros(n), spec.v_radius)
        };
        let r = v.norm();
        let jet = lagrangian_jet(model.l(), &x, &v);

        let nu = b.nu(r);
        let lam = min_eigenvalue(&jet.dvv);
        l1.push(if nu > 0.0 { lam - nu } else { nu - 1e-300 });

        l2.push((jet.value - (b.theta(r) - b.c0)).min(b.theta_bar(r) - jet.value));

        let biggest = [
            jet.dx.amax(),
            jet.dv.amax(),
            jet.dxx.amax(),
            jet.dxv.amax(),
            jet.dvv.amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        l3.push(b.k(r) - biggest);

        fd.push(1e-5 - derivative_error(model, &x, &v));

        let p = jet.dv.clone();
        let hjet = hamiltonian_jet(model.h(), &x, &p);
        h1.push(min_eigenvalue(&hjet.dvv) - 1e-300);
        let fenchel = hjet.value + jet.value - p.dot(&v);
        h2.push(1e-8 - fenchel.abs() / (1.0 + hjet.value.abs()));
        let prod = &hjet.dvv * &jet.dvv - Matrix::identity(n, n);
        h3.push(1e-6 - prod.amax());
    }

    let conditions = vec![
        l1.finish(),
        l2.finish(),
        l3.finish(),
        fd.finish(),
        h1.finish(),
        h2.finish(),
        h3.finish(),
    ];
    TonelliReport {
        model: model.id.clone(),
        samples: spec.count,
        conditions,
    }
}

/// Largest relative mismatch between analytic first and second derivatives
/// and central finite differences of `L`.
fn derivative_error(model: &TonelliModel, x: &Vector, v: &Vector) -> f64 {
    let n = model.dim();
    let l = model.l();
    let jet = lagrangian_jet(l, x, v);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let dx = (model.l_value(&xp, v) - model.l_value(&xm, v)) / (2.0 * h);
        worst = worst.max(rel_gap(dx, jet.dx[i]));
        let jp = lagrangian_jet(l, &xp, v);
        let jm = lagrangian_jet(l, &xm, v);
        for j in 0..n {
            let sxx = (jp.dx[j] - jm.dx[j]) / (2.0 * h);
            let sxv = (jp.dv[j] - jm.dv[j]) / (2.0 * h);
            worst = worst.max(rel_gap(sxx, jet.dxx[(i, j)]));
            worst = worst.max(rel_gap(sxv, jet.dxv[(i, j)]));
        }
        let mut vp = v.clone();
        let mut vm = v.clone();
        vp[i] += h;
        vm[i] -= h;
        let dv = (model.l_value(x, &vp) - model.l_value(x, &vm)) / (2.0 * h);
        worst = worst.max(rel_gap(dv, jet.dv[i]));
        let jp = lagrangian_jet(l, x, &vp);
        let jm = lagrangian_jet(l, x, &vm);
        for j in 0..n {
            let svv = (jp.dv[j] - jm.dv[j]) / (2.0 * h);
            worst = worst.max(rel_gap(svv, jet.dvv[(i, j)]));
        }
    }
    worst
}

/// Checks `L(x + e_i, v) = L(x, v)` on samples; true when the model is
/// 1-periodic in every coordinate.
pub fn verify_periodic(model: &TonelliModel, samples: usize, seed: u64) -> bool {
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = sample_ball(&mut rng, &Vector::zeros(n), 1.0);
        let v = sample_ball(&mut rng, &Vector::zeros(n), 3.0);
        let base = model.l_value(&x, &v);
        for i in 0..n {
            let mut shifted = x.clone();
            shifted[i] += 1.0;
            if (model.l_value(&shifted, &v) - base).abs() > 1e-9 * (1.0 + base.abs()) {
                return false;
            }
        }
    }
    true
}
