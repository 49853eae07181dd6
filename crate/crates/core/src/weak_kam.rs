//! The torus quotient: periodic fundamental solutions, weak KAM solutions as
//! fixed points of `u = T-_t u + c t`, and singular arcs on the torus.

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{fundamental_solution_with, ActionKernel, ActionOptions, FundamentalSolution};
use crate::error::{HjError, Result};
use crate::field::{GridData, ScalarField};
use crate::linalg::Vector;
use crate::models::{verify_periodic, TonelliModel};
use crate::propagation::{trace_arc, SingularArc, TraceOptions};

/// Values at the nodes `k / N`, `k = 0..N`, of each axis of the unit torus,
/// last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl TorusGrid {
    pub fn new(dim: usize, resolution: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || resolution == 0 || values.len() != resolution.pow(dim as u32) {
            return Err(HjError::InvalidInput(
                "torus grid shape does not match its values".into(),
            ));
        }
        Ok(Self {
            dim,
            resolution,
            values,
        })
    }

    pub fn from_fn(dim: usize, resolution: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let total = resolution.pow(dim as u32);
        let values = (0..total)
            .map(|k| f(&node_point(k, dim, resolution)))
            .collect();
        Self {
            dim,
            resolution,
            values,
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        node_point(flat, self.dim, self.resolution)
    }

    pub fn grid_data(&self) -> GridData {
        GridData {
            resolution: vec![self.resolution; self.dim],
            lower: vec![0.0; self.dim],
            upper: vec![1.0; self.dim],
            periodic: true,
            values: self.values.clone(),
        }
    }

    /// Periodic multilinear interpolant.
    pub fn to_field(&self, id: impl Into<String>) -> Result<ScalarField> {
        ScalarField::from_grid(id, self.grid_data())
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.grid_data().interpolate(x)
    }
}

fn node_index(flat: usize, dim: usize, res: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    let mut rem = flat;
    for a in (0..dim).rev() {
        idx[a] = rem % res;
        rem /= res;
    }
    idx
}

fn node_point(flat: usize, dim: usize, res: usize) -> Vec<f64> {
    node_index(flat, dim, res)
        .into_iter()
        .map(|i| i as f64 / res as f64)
        .collect()
}

/// Representative of `[x]` in `Q = (0, 1]^n` and the integer lift `k` with
/// `x = rep + k`.
pub fn wrap_to_q(x: &Vector) -> (Vector, Vec<i64>) {
    let k: Vec<i64> = x.iter().map(|a| a.ceil() as i64 - 1).collect();
    let rep = Vector::from_iterator(x.len(), x.iter().zip(&k).map(|(a, ki)| a - *ki as f64));
    (rep, k)
}

/// Fundamental solution on the torus together with the winning lift of `y`.
#[derive(Debug, Clone, Serialize)]
pub struct TorusSolution {
    pub solution: FundamentalSolution,
    /// Integer shift applied to the representative of `y` nearest to `x`.
    pub shift: Vec<i64>,
    /// The lift `y'` of `[y]` realizing the minimum.
    pub representative: Vector,
    /// The shift search had to be enlarged beyond the configured radius.
    pub widened: bool,
    pub candidates_solved: usize,
}

/// `A_t([x], [y]) = min_k A_t(x, y + k)` for a periodic model.
#[derive(Debug, Clone)]
pub struct TorusKernel {
    pub model: TonelliModel,
    pub options: ActionOptions,
    pub shift_radius: usize,
}

const MAX_SHIFT_RADIUS: usize = 4;

impl TorusKernel {
    /// Checks periodicity of the Lagrangian on samples before accepting it.
    pub fn new(model: TonelliModel) -> Result<Self> {
        Self::with_options(model, ActionOptions::fast())
    }

    pub fn with_options(model: TonelliModel, options: ActionOptions) -> Result<Self> {
        if !verify_periodic(&model, 64, 11) {
            return Err(HjError::InvalidInput(format!(
                "model `{}` is not periodic in x",
                model.id
            )));
        }
        Ok(Self {
            model,
            options,
            shift_radius: 1,
        })
    }

    pub fn solve_torus(
        &self,
        x: &Vector,
        y: &Vector,
        t: f64,
        warm: Option<&Vector>,
    ) -> Result<TorusSolution> {
        let n = x.len();
        if y.len() != n || n != self.model.dim() {
            return Err(HjError::InvalidInput(
                "point and model dimensions differ".into(),
            ));
        }
        let nearest =
            Vector::from_iterator(n, x.iter().zip(y.iter()).map(|(a, b)| b - (b - a).round()));
        let bounds = self.model.bounds();
        let jensen = |d: f64| t * bounds.theta(d / t) - bounds.c0 * t;
        let mut radius = self.shift_radius;
        let mut widened = false;
        let mut solved = 0;
        loop {
            let mut shifts = integer_box(n, radius as i64);
            shifts.sort_by(|a, b| {
                let da = shifted_distance(&nearest, a, x);
                let db = shifted_distance(&nearest, b, x);
                da.total_cmp(&db).then_with(|| a.cmp(b))
            });
            let mut best: Option<(FundamentalSolution, Vec<i64>, Vector)> = None;
            let mut first_error = None;
            for k in shifts {
                let cand =
                    Vector::from_iterator(n, nearest.iter().zip(&k).map(|(a, ki)| a + *ki as f64));
                let d = (&cand - x).norm();
                if let Some((b, _, _)) = &best {
                    if jensen(d) >= b.value {
                        continue;
                    }
                }
                let mut opts = self.options.clone();
                if k.iter().all(|&ki| ki == 0) {
                    opts.warm_start = warm.cloned();
                }
                solved += 1;
                match fundamental_solution_with(&self.model, x, &cand, t, &opts) {
                    Ok(fs) => {
                        if best.as_ref().is_none_or(|(b, _, _)| fs.value < b.value) {
                            best = Some((fs, k, cand));
                        }
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            let Some((solution, shift, representative)) = best else {
                return Err(first_error.unwrap_or(HjError::NoConvergence {
                    starts: 0,
                    residual: f64::INFINITY,
                }));
            };
            let on_boundary = shift.iter().any(|k| k.unsigned_abs() as usize == radius);
            if on_boundary && radius < MAX_SHIFT_RADIUS {
                radius += 1;
                widened = true;
                continue;
            }
            return Ok(TorusSolution {
                solution,
                shift,
                representative,
                widened,
                candidates_solved: solved,
            });
        }
    }
}

fn integer_box(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn shifted_distance(base: &Vector, k: &[i64], x: &Vector) -> f64 {
    base.iter()
        .zip(k)
        .zip(x.iter())
        .map(|((b, ki), xi)| (b + *ki as f64 - xi).powi(2))
        .sum::<f64>()
}

impl ActionKernel for TorusKernel {
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
        Ok(self.solve_torus(x, y, t, warm)?.solution)
    }
}

/// `A_t([x], [y])` with default options.
pub fn fundamental_solution_torus(
    model: &TonelliModel,
    x: &Vector,
    y: &Vector,
    t: f64,
) -> Result<TorusSolution> {
    TorusKernel::with_options(model.clone(), ActionOptions::default())?.solve_torus(x, y, t, None)
}

#[derive(Debug, Clone)]
pub struct WeakKamOptions {
    pub resolution: usize,
    pub t_step: f64,
    /// Stop once successive normalized iterates differ by less than this in sup norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Radius of the search ball of the grid inf-convolution; defaults to
    /// `min(lambda0 t_step, sqrt(n) / 4)`.
    pub search_radius: Option<f64>,
}

impl Default for WeakKamOptions {
    fn default() -> Self {
        Self {
            resolution: 512,
            t_step: 0.05,
            tol: 1e-9,
            max_iter: 5000,
            search_radius: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakKamResult {
    /// Critical value `c(H)`.
    pub c: f64,
    /// Weak KAM solution normalized by `min u = 0`.
    pub u: TorusGrid,
    pub iterations: usize,
    /// `sup |u - (T-_t u + c t)|` on the grid.
    pub residual: f64,
    pub history: Vec<f64>,
    pub search_radius: f64,
    pub kernel_offsets: usize,
}

/// Per-node kernel `A_t(x_i + j h, x_i)` over the offsets `j` of the search ball.
struct GridKernel {
    offsets: Vec<Vec<i64>>,
    /// `weights[i][o]` for node `i` and offset `o`.
    weights: Vec<Vec<f64>>,
}

fn offsets_in_ball(n: usize, reach: i64, radius_nodes: f64) -> Vec<Vec<i64>> {
    let mut all = integer_box(n, reach);
    all.retain(|k| {
        k.iter().map(|a| (*a as f64).powi(2)).sum::<f64>() <= radius_nodes * radius_nodes + 1e-9
    });
    // continuation order: outward from the center, neighbours adjacent
    all.sort_by(|a, b| {
        let na: i64 = a.iter().map(|v| v.abs()).sum();
        let nb: i64 = b.iter().map(|v| v.abs()).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    all
}

fn build_kernel(kernel: &TorusKernel, res: usize, t: f64, radius: f64) -> Result<GridKernel> {
    let n = kernel.model.dim();
    let h = 1.0 / res as f64;
    let radius_nodes = radius / h;
    let offsets = offsets_in_ball(n, radius_nodes.floor() as i64, radius_nodes);
    let total = res.pow(n as u32);
    let weights: Result<Vec<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let x = Vector::from_vec(node_point(flat, n, res));
            let mut row = vec![0.0; offsets.len()];
            // warm starts from the nearest already-solved offset
            let mut solved: Vec<(Vec<i64>, Vector)> = Vec::with_capacity(offsets.len());
            for (o, k) in offsets.iter().enumerate() {
                let y = Vector::from_iterator(n, x.iter().zip(k).map(|(a, ki)| a + *ki as f64 * h));
                let warm = solved
                    .iter()
                    .rev()
                    .find(|(q, _)| q.iter().zip(k).map(|(a, b)| (a - b).abs()).sum::<i64>() == 1)
                    .map(|(_, p)| p.clone());
                let sol = kernel.solve_torus(&y, &x, t, warm.as_ref())?;
                row[o] = sol.solution.value;
                solved.push((k.clone(), sol.solution.initial_covector()));
            }
            Ok(row)
        })
        .collect();
    Ok(GridKernel {
        offsets,
        weights: weights?,
    })
}

fn neighbor(flat: usize, k: &[i64], n: usize, res: usize) -> usize {
    let idx = node_index(flat, n, res);
    idx.iter().zip(k).fold(0usize, |acc, (i, ki)| {
        acc * res + (*i as i64 + ki).rem_euclid(res as i64) as usize
    })
}

fn apply_lax_oleinik_minus(gk: &GridKernel, v: &[f64], nbr: &[Vec<usize>]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            gk.weights[i]
                .iter()
                .zip(&nbr[i])
                .map(|(w, &j)| v[j] + w)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Iterates `v <- T-_t v` on the grid, renormalizing to `min v = 0`; the
/// per-step shift of the minimum converges to `-c t`.
pub fn weak_kam_solve(model: &TonelliModel, opts: &WeakKamOptions) -> Result<WeakKamResult> {
    if opts.resolution < 2 || !(opts.t_step > 0.0) || !(opts.tol > 0.0) {
        return Err(HjError::InvalidInput(
            "resolution >= 2, t_step > 0 and tol > 0 required".into(),
        ));
    }
    let kernel = TorusKernel::new(model.clone())?;
    let n = model.dim();
    let res = opts.resolution;
    let radius = match opts.search_radius {
        Some(r) => r,
        None => {
            let lam = crate::models::lambda0(model, 0.0)?;
            (lam * opts.t_step).min((n as f64).sqrt() / 4.0)
        }
    };
    let gk = build_kernel(&kernel, res, opts.t_step, radius)?;
    let total = gk.weights.len();
    let nbr: Vec<Vec<usize>> = (0..total)
        .map(|i| gk.offsets.iter().map(|k| neighbor(i, k, n, res)).collect())
        .collect();
    let mut v = vec![0.0; total];
    let mut history = Vec::new();
    let mut c = 0.0;
    for it in 1..=opts.max_iter {
        let w = apply_lax_oleinik_minus(&gk, &v, &nbr);
        let m = w.iter().cloned().fold(f64::INFINITY, f64::min);
        c = -m / opts.t_step;
        let next: Vec<f64> = w.iter().map(|a| a - m).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(change);
        v = next;
        if change < opts.tol {
            let u = TorusGrid {
                dim: n,
                resolution: res,
                values: v,
            };
            return Ok(WeakKamResult {
                c,
                u,
                iterations: it,
                residual: change,
                history,
                search_radius: radius,
                kernel_offsets: gk.offsets.len(),
            });
        }
    }
    let _ = c;
    Err(HjError::WeakKamNoConvergence {
        iterations: opts.max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
        history,
    })
}

/// `sup |u - (T-_t u + c t)|` of a grid function for a given kernel time.
pub fn fixed_point_residual(
    model: &TonelliModel,
    u: &TorusGrid,
    c: f64,
    t: f64,
    radius: f64,
) -> Result<f64> {
    let kernel = TorusKernel::new(model.clone())?;
    let gk = build_kernel(&kernel, u.resolution, t, radius)?;
    let n = u.dim;
    let nbr: Vec<Vec<usize>> = (0..u.len())
        .map(|i| {
            gk.offsets
                .iter()
                .map(|k| neighbor(i, k, n, u.resolution))
                .collect()
        })
        .collect();
    let w = apply_lax_oleinik_minus(&gk, &u.values, &nbr);
    Ok(u.values
        .iter()
        .zip(&w)
        .map(|(a, b)| (a - b - c * t).abs())
        .fold(0.0, f64::max))
}

/// Traces a singular arc of the periodic field `u` on the torus. Points are
/// reported in `Q = (0, 1]^n`, with the integer lift stored in `winding`.
pub fn trace_arc_torus(
    u: &ScalarField,
    model: &TonelliModel,
    x0: &Vector,
    horizon: f64,
    opts: &TraceOptions,
) -> Result<SingularArc> {
    let kernel = TorusKernel::new(model.clone())?;
    let mut arc = trace_arc(u, &kernel, x0, horizon, opts)?;
    let mut winding = Vec::with_capacity(arc.points.len());
    for p in arc.points.iter_mut() {
        let (rep, k) = wrap_to_q(p);
        *p = rep;
        winding.push(k);
    }
    arc.winding = winding;
    Ok(arc)
}
