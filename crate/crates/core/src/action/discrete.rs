//! Direct minimization of the discrete action over piecewise-linear paths.
//!
//! With nodes `q_0 = x, ..., q_m = y`, step `h = t / m` and `v_k = (q_{k+1} - q_k) / h`,
//! the action is `S = sum_k h/2 [L(q_k, v_k) + L(q_{k+1}, v_k)]`. Interior nodes are
//! found by damped Newton on the exact block-tridiagonal Hessian.

use crate::linalg::{solve_block_tridiagonal, Matrix, Vector};
use crate::models::{lagrangian_jet, Lagrangian};

pub(crate) struct DiscreteSolution {
    pub path: Vec<Vector>,
    /// Discrete Legendre transform at the left endpoint, `-dS/dq_0`.
    pub p0: Vector,
}

pub(crate) fn discrete_action(l: &dyn Lagrangian, path: &[Vector], h: f64) -> f64 {
    path.windows(2)
        .map(|w| {
            let v = (&w[1] - &w[0]) / h;
            0.5 * h
                * (l.value(w[0].as_slice(), v.as_slice()) + l.value(w[1].as_slice(), v.as_slice()))
        })
        .sum()
}

struct Assembly {
    grad: Vec<Vector>,
    diag: Vec<Matrix>,
    upper: Vec<Matrix>,
    p0: Vector,
}

fn assemble(l: &dyn Lagrangian, path: &[Vector], h: f64) -> Assembly {
    let m = path.len() - 1;
    let n = path[0].len();
    let interior = m - 1;
    let mut grad = vec![Vector::zeros(n); interior];
    let mut diag = vec![Matrix::zeros(n, n); interior];
    let mut upper = vec![Matrix::zeros(n, n); interior.saturating_sub(1)];
    let mut p0 = Vector::zeros(n);
    for k in 0..m {
        let a = &path[k];
        let b = &path[k + 1];
        let v = (b - a) / h;
        let ja = lagrangian_jet(l, a, &v);
        let jb = lagrangian_jet(l, b, &v);
        let vsum = &ja.dv + &jb.dv;
        let vv = (&ja.dvv + &jb.dvv) / (2.0 * h);
        let ga = &ja.dx * (0.5 * h) - &vsum * 0.5;
        let gb = &jb.dx * (0.5 * h) + &vsum * 0.5;
        if k == 0 {
            p0 = -ga.clone();
        }
        if k >= 1 {
            let i = k - 1;
            grad[i] += &ga;
            let haa = &ja.dxx * (0.5 * h) - (&ja.dxv + ja.dxv.transpose()) * 0.5 + &vv;
            diag[i] += haa;
        }
        if k + 1 <= interior {
            let i = k;
            grad[i] += &gb;
            let hbb = &jb.dxx * (0.5 * h) + (&jb.dxv + jb.dxv.transpose()) * 0.5 + &vv;
            diag[i] += hbb;
        }
        if k >= 1 && k + 1 <= interior {
            let hab = &ja.dxv * 0.5 - jb.dxv.transpose() * 0.5 - &vv;
            upper[k - 1] = hab;
        }
    }
    Assembly {
        grad,
        diag,
        upper,
        p0,
    }
}

/// Damped Newton with a Levenberg shift, starting from `path` (endpoints fixed).
pub(crate) fn minimize_discrete(
    l: &dyn Lagrangian,
    mut path: Vec<Vector>,
    t: f64,
    max_iter: usize,
) -> DiscreteSolution {
    let m = path.len() - 1;
    let n = path[0].len();
    let h = t / m as f64;
    let mut value = discrete_action(l, &path, h);
    let mut shift = 0.0;
    if m >= 2 {
        for _ in 0..max_iter {
            let asm = assemble(l, &path, h);
            let gmax = asm.grad.iter().map(|g| g.amax()).fold(0.0, f64::max);
            let scale = path.iter().map(|q| q.amax()).fold(0.0, f64::max) + 1.0;
            if gmax <= 1e-14 * scale / h {
                break;
            }
            let rhs: Vec<Vector> = asm.grad.iter().map(|g| -g).collect();
            let mut accepted = false;
            let mut step_norm = f64::INFINITY;
            for _ in 0..40 {
                let shifted: Vec<Matrix> = asm
                    .diag
                    .iter()
                    .map(|d| d + Matrix::identity(n, n) * shift)
                    .collect();
                let Some(dir) = solve_block_tridiagonal(&shifted, &asm.upper, &rhs) else {
                    shift = (shift * 4.0).max(1e-8 / h);
                    continue;
                };
                let slope: f64 = asm.grad.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
                let mut alpha = 1.0;
                for _ in 0..30 {
                    let trial: Vec<Vector> = path
                        .iter()
                        .enumerate()
                        .map(|(k, q)| {
                            if k == 0 || k == m {
                                q.clone()
                            } else {
                                q + &dir[k - 1] * alpha
                            }
                        })
                        .collect();
                    let tv = discrete_action(l, &trial, h);
                    if tv.is_finite() && tv <= value + 1e-4 * alpha * slope + 1e-15 * value.abs() {
                        step_norm = alpha * dir.iter().map(|d| d.amax()).fold(0.0, f64::max);
                        path = trial;
                        value = tv;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if accepted {
                    shift *= 0.25;
                    if shift < 1e-12 {
                        shift = 0.0;
                    }
                    break;
                }
                shift = (shift * 4.0).max(1e-8 / h);
            }
            if !accepted {
                break;
            }
            if step_norm <= 1e-11 * scale {
                break;
            }
        }
    }
    let asm = assemble(l, &path, h);
    DiscreteSolution { p0: asm.p0, path }
}
