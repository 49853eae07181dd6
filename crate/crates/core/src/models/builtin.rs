//! Built-in models and the string registry.
//!
//! Bound families per model (`r = |v|`, `n` the dimension):
//!
//! | id | `nu` | `theta` | `theta_bar` | `K` | `c0` |
//! |----|------|---------|-------------|-----|------|
//! | `free` | 1 | `r^2/2` | `r^2/2` | `max(r, 1)` | 0 |
//! | `harmonic(w)` on `\|x\| <= 2` | 1 | `r^2/2` | `r^2/2` | `max(r, 1, 2w^2, w^2, 2w^2)` | `2w^2` |
//! | `mechanical(const(c))` | 1 | `r^2/2` | `r^2/2 + max(-c, 0)` | `max(r, 1)` | `max(c, 0)` |
//! | `mechanical(cos(a))` | 1 | `r^2/2` | `r^2/2 + n\|a\|` | `max(r, 1, 4 pi^2 \|a\|)` | `n\|a\|` |
//! | `quartic1d(mu)` | `mu` | `r^4/4 + mu r^2/2` | same | `max(r^3 + mu r, 3r^2 + mu, 1)` | 0 |
//!
//! `eikonal` is `mechanical(const(-0.5))`, `pendulum` is `mechanical(cos(1))`
//! on the circle and `pendulum2` its two-dimensional product.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{GrowthBounds, Hamiltonian, Lagrangian, TonelliModel};
use crate::error::{HjError, Result};

pub const MODEL_IDS: &[&str] = &[
    "free",
    "harmonic(omega)",
    "mechanical(const(c))",
    "mechanical(cos(a))",
    "eikonal",
    "pendulum",
    "pendulum2",
    "quartic1d",
    "quartic1d(mu)",
];

/// Radius of the ball on which the harmonic model's bounds are stated.
pub const HARMONIC_BOX: f64 = 2.0;

/// Potentials `V` for `L = |v|^2/2 - V(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Constant(f64),
    /// `omega^2 |x|^2 / 2`
    Quadratic {
        omega: f64,
    },
    /// `a * sum_i cos(2 pi x_i)`, 1-periodic in every coordinate.
    Cosine {
        amplitude: f64,
    },
}

impl Potential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Potential::Constant(c) => c,
            Potential::Quadratic { omega } => {
                0.5 * omega * omega * x.iter().map(|a| a * a).sum::<f64>()
            }
            Potential::Cosine { amplitude } => {
                amplitude * x.iter().map(|a| (2.0 * PI * a).cos()).sum::<f64>()
            }
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Potential::Constant(_) => out.iter_mut().for_each(|o| *o = 0.0),
            Potential::Quadratic { omega } => {
                for (o, a) in out.iter_mut().zip(x) {
                    *o = omega * omega * a;
                }
            }
            Potential::Cosine { amplitude } => {
                for (o, a) in out.iter_mut().zip(x) {
                    *o = -2.0 * PI * amplitude * (2.0 * PI * a).sin();
                }
            }
        }
    }

    /// Row-major Hessian; all built-in potentials are separable.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..n {
            out[i * n + i] = match *self {
                Potential::Constant(_) => 0.0,
                Potential::Quadratic { omega } => omega * omega,
                Potential::Cosine { amplitude } => {
                    -4.0 * PI * PI * amplitude * (2.0 * PI * x[i]).cos()
                }
            };
        }
    }
}

/// `L(x, v) = |v|^2 / 2 - V(x)`.
#[derive(Debug, Clone)]
pub struct MechanicalLagrangian {
    pub dim: usize,
    pub potential: Potential,
}

impl Lagrangian for MechanicalLagrangian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        0.5 * v.iter().map(|a| a * a).sum::<f64>() - self.potential.value(x)
    }

    fn gradient(&self, x: &[f64], v: &[f64], lx: &mut [f64], lv: &mut [f64]) -> f64 {
        self.potential.gradient(x, lx);
        lx.iter_mut().for_each(|a| *a = -*a);
        lv.copy_from_slice(v);
        self.value(x, v)
    }

    fn hessian(&self, x: &[f64], _v: &[f64], lxx: &mut [f64], lxv: &mut [f64], lvv: &mut [f64]) {
        let n = self.dim;
        self.potential.hessian(x, lxx);
        lxx.iter_mut().for_each(|a| *a = -*a);
        lxv.iter_mut().for_each(|a| *a = 0.0);
        lvv.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..n {
            lvv[i * n + i] = 1.0;
        }
    }
}

/// Closed-form dual `H(x, p) = |p|^2 / 2 + V(x)`.
#[derive(Debug, Clone)]
pub struct MechanicalHamiltonian {
    pub dim: usize,
    pub potential: Potential,
}

impl Hamiltonian for MechanicalHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], p: &[f64]) -> f64 {
        0.5 * p.iter().map(|a| a * a).sum::<f64>() + self.potential.value(x)
    }

    fn gradient(&self, x: &[f64], p: &[f64], hx: &mut [f64], hp: &mut [f64]) -> f64 {
        self.potential.gradient(x, hx);
        hp.copy_from_slice(p);
        self.value(x, p)
    }

    fn hessian(&self, x: &[f64], _p: &[f64], hxx: &mut [f64], hxp: &mut [f64], hpp: &mut [f64]) {
        let n = self.dim;
        self.potential.hessian(x, hxx);
        hxp.iter_mut().for_each(|a| *a = 0.0);
        hpp.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..n {
            hpp[i * n + i] = 1.0;
        }
    }
}

/// `L(v) = v^4 / 4 + mu v^2 / 2` on the line. With `mu = 0` the uniform
/// convexity condition fails at `v = 0`.
#[derive(Debug, Clone)]
pub struct QuarticLagrangian {
    pub mu: f64,
}

impl Lagrangian for QuarticLagrangian {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, _x: &[f64], v: &[f64]) -> f64 {
        let w = v[0];
        0.25 * w.powi(4) + 0.5 * self.mu * w * w
    }

    fn gradient(&self, x: &[f64], v: &[f64], lx: &mut [f64], lv: &mut [f64]) -> f64 {
        let w = v[0];
        lx[0] = 0.0;
        lv[0] = w.powi(3) + self.mu * w;
        self.value(x, v)
    }

    fn hessian(&self, _x: &[f64], v: &[f64], lxx: &mut [f64], lxv: &mut [f64], lvv: &mut [f64]) {
        lxx[0] = 0.0;
        lxv[0] = 0.0;
        lvv[0] = 3.0 * v[0] * v[0] + self.mu;
    }
}

pub fn mechanical(id: impl Into<String>, dim: usize, potential: Potential) -> TonelliModel {
    let bounds = match potential {
        Potential::Constant(c) => {
            let lift = (-c).max(0.0);
            GrowthBounds::new(
                |_| 1.0,
                |r| 0.5 * r * r,
                move |r| 0.5 * r * r + lift,
                |r| r.max(1.0),
                c.max(0.0),
            )
        }
        Potential::Quadratic { omega } => {
            let w2 = omega * omega;
            let big = HARMONIC_BOX;
            let c0 = 0.5 * w2 * big * big;
            let floor = 1f64.max(w2 * big).max(w2).max(c0);
            GrowthBounds::new(
                |_| 1.0,
                |r| 0.5 * r * r,
                |r| 0.5 * r * r,
                move |r| r.max(floor),
                c0,
            )
        }
        Potential::Cosine { amplitude } => {
            let a = amplitude.abs();
            let c0 = dim as f64 * a;
            let floor = 1f64.max(2.0 * PI * a).max(4.0 * PI * PI * a);
            GrowthBounds::new(
                |_| 1.0,
                |r| 0.5 * r * r,
                move |r| 0.5 * r * r + c0,
                move |r| r.max(floor),
                c0,
            )
        }
    };
    TonelliModel::native(
        id,
        Arc::new(MechanicalLagrangian { dim, potential }),
        bounds,
        Arc::new(MechanicalHamiltonian { dim, potential }),
    )
}

pub fn free_particle(dim: usize) -> TonelliModel {
    mechanical("free", dim, Potential::Constant(0.0))
}

pub fn harmonic(dim: usize, omega: f64) -> TonelliModel {
    mechanical(
        format!("harmonic({omega})"),
        dim,
        Potential::Quadratic { omega },
    )
}

pub fn pendulum(dim: usize) -> TonelliModel {
    let id = if dim == 1 {
        "pendulum".to_string()
    } else {
        format!("pendulum{dim}")
    };
    mechanical(id, dim, Potential::Cosine { amplitude: 1.0 })
}

/// The Hamiltonian is obtained by numerical Legendre transform.
pub fn quartic1d(mu: f64) -> TonelliModel {
    let bounds = GrowthBounds::new(
        move |_| mu,
        move |r| 0.25 * r.powi(4) + 0.5 * mu * r * r,
        move |r| 0.25 * r.powi(4) + 0.5 * mu * r * r,
        move |r| (r.powi(3) + mu * r).max(3.0 * r * r + mu).max(1.0),
        0.0,
    );
    TonelliModel::derived(
        format!("quartic1d({mu})"),
        Arc::new(QuarticLagrangian { mu }),
        bounds,
    )
}

fn parse_arg(id: &str, prefix: &str) -> Option<String> {
    let rest = id.strip_prefix(prefix)?.trim();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.trim().to_string())
}

fn parse_number(id: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| HjError::UnknownModel(id.to_string()))
}

fn parse_potential(id: &str, s: &str) -> Result<Potential> {
    if let Some(c) = parse_arg(s, "const") {
        return Ok(Potential::Constant(parse_number(id, &c)?));
    }
    if let Some(a) = parse_arg(s, "cos") {
        return Ok(Potential::Cosine {
            amplitude: parse_number(id, &a)?,
        });
    }
    if let Some(w) = parse_arg(s, "quadratic") {
        return Ok(Potential::Quadratic {
            omega: parse_number(id, &w)?,
        });
    }
    Err(HjError::UnknownModel(id.to_string()))
}

/// Looks up a model by registry id. `dim` is used by the dimension-generic
/// families and checked against the fixed-dimension ones.
pub fn model_by_id(id: &str, dim: usize) -> Result<TonelliModel> {
    if dim == 0 {
        return Err(HjError::InvalidInput(
            "model dimension must be positive".into(),
        ));
    }
    let id = id.trim();
    let fixed = |d: usize, m: TonelliModel| {
        if d == dim {
            Ok(m)
        } else {
            Err(HjError::InvalidInput(format!(
                "model `{id}` has dimension {d}, requested {dim}"
            )))
        }
    };
    match id {
        "free" => return Ok(free_particle(dim)),
        "eikonal" => return Ok(mechanical("eikonal", dim, Potential::Constant(-0.5))),
        "pendulum" => return fixed(1, pendulum(1)),
        "pendulum2" => return fixed(2, pendulum(2)),
        "quartic1d" => return fixed(1, quartic1d(0.0)),
        _ => {}
    }
    if let Some(arg) = parse_arg(id, "harmonic") {
        let omega = parse_number(id, &arg)?;
        return Ok(harmonic(dim, omega));
    }
    if let Some(arg) = parse_arg(id, "quartic1d") {
        return fixed(1, quartic1d(parse_number(id, &arg)?));
    }
    if let Some(arg) = parse_arg(id, "mechanical") {
        let potential = parse_potential(id, &arg)?;
        return Ok(mechanical(id, dim, potential));
    }
    Err(HjError::UnknownModel(id.to_string()))
}
