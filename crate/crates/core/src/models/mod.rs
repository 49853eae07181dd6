//! Tonelli Lagrangians and Hamiltonians, Legendre duality, and the explicit
//! bound functions consumed by the solvers.
//!
//! Models are evaluated through the slice-based [`Lagrangian`] and
//! [`Hamiltonian`] traits so that the inner integration loops do not allocate.
//! Second derivatives are written row-major; the mixed block is indexed as
//! `lxv[i * n + j] = d2L / dx_i dv_j` (respectively `d2H / dx_i dp_j`).

mod bounds;
mod builtin;
mod check;
mod legendre;

use std::fmt;
use std::sync::Arc;

use crate::linalg::{Matrix, Vector};

pub use bounds::{conjugate_bound, lambda0, velocity_bound_kappa, KappaChain};
pub use builtin::{
    free_particle, harmonic, mechanical, model_by_id, pendulum, quartic1d, MechanicalHamiltonian,
    MechanicalLagrangian, Potential, QuarticLagrangian, MODEL_IDS,
};
pub use check::{check_tonelli, verify_periodic, ConditionMargin, SampleSpec, TonelliReport};
pub use legendre::{energy, legendre, legendre_argmax, DerivedHamiltonian};

pub trait Lagrangian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], v: &[f64]) -> f64;
    /// Writes `L_x` and `L_v` and returns `L`.
    fn gradient(&self, x: &[f64], v: &[f64], lx: &mut [f64], lv: &mut [f64]) -> f64;
    fn hessian(&self, x: &[f64], v: &[f64], lxx: &mut [f64], lxv: &mut [f64], lvv: &mut [f64]);
}

pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], p: &[f64]) -> f64;
    /// Writes `H_x` and `H_p` and returns `H`.
    fn gradient(&self, x: &[f64], p: &[f64], hx: &mut [f64], hp: &mut [f64]) -> f64;
    fn hessian(&self, x: &[f64], p: &[f64], hxx: &mut [f64], hxp: &mut [f64], hpp: &mut [f64]);
}

/// Value and all first and second derivatives at one point, as owned arrays.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: f64,
    pub dx: Vector,
    pub dv: Vector,
    pub dxx: Matrix,
    pub dxv: Matrix,
    pub dvv: Matrix,
}

pub fn lagrangian_jet(l: &dyn Lagrangian, x: &Vector, v: &Vector) -> Jet {
    let n = l.dim();
    let (mut lx, mut lv) = (vec![0.0; n], vec![0.0; n]);
    let value = l.gradient(x.as_slice(), v.as_slice(), &mut lx, &mut lv);
    let (mut a, mut b, mut c) = (vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]);
    l.hessian(x.as_slice(), v.as_slice(), &mut a, &mut b, &mut c);
    Jet {
        value,
        dx: Vector::from_vec(lx),
        dv: Vector::from_vec(lv),
        dxx: Matrix::from_row_slice(n, n, &a),
        dxv: Matrix::from_row_slice(n, n, &b),
        dvv: Matrix::from_row_slice(n, n, &c),
    }
}

/// Hamiltonian jet; `dv` holds `H_p`, `dxv` holds `H_xp` and `dvv` holds `H_pp`.
pub fn hamiltonian_jet(h: &dyn Hamiltonian, x: &Vector, p: &Vector) -> Jet {
    let n = h.dim();
    let (mut hx, mut hp) = (vec![0.0; n], vec![0.0; n]);
    let value = h.gradient(x.as_slice(), p.as_slice(), &mut hx, &mut hp);
    let (mut a, mut b, mut c) = (vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]);
    h.hessian(x.as_slice(), p.as_slice(), &mut a, &mut b, &mut c);
    Jet {
        value,
        dx: Vector::from_vec(hx),
        dv: Vector::from_vec(hp),
        dxx: Matrix::from_row_slice(n, n, &a),
        dxv: Matrix::from_row_slice(n, n, &b),
        dvv: Matrix::from_row_slice(n, n, &c),
    }
}

pub type BoundFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The closed-form functions behind the uniform convexity, growth and
/// regularity conditions: `nu(|v|)` bounds `L_vv` from below,
/// `theta(|v|) - c0 <= L <= theta_bar(|v|)`, and `K(|v|)` bounds every first
/// and second derivative entrywise.
#[derive(Clone)]
pub struct GrowthBounds {
    pub nu: BoundFn,
    pub theta: BoundFn,
    pub theta_bar: BoundFn,
    pub k: BoundFn,
    pub c0: f64,
}

impl GrowthBounds {
    pub fn new(
        nu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        theta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        theta_bar: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c0: f64,
    ) -> Self {
        Self {
            nu: Arc::new(nu),
            theta: Arc::new(theta),
            theta_bar: Arc::new(theta_bar),
            k: Arc::new(k),
            c0,
        }
    }

    pub fn nu(&self, r: f64) -> f64 {
        (self.nu)(r)
    }
    pub fn theta(&self, r: f64) -> f64 {
        (self.theta)(r)
    }
    pub fn theta_bar(&self, r: f64) -> f64 {
        (self.theta_bar)(r)
    }
    pub fn k(&self, r: f64) -> f64 {
        (self.k)(r)
    }

    /// `K` enlarged so that it also bounds `|L|`, which the velocity estimate
    /// needs. Since `L <= theta_bar` and `theta_bar` is nonnegative this is
    /// `max(K, theta_bar)`.
    pub fn k_tilde(&self, r: f64) -> f64 {
        self.k(r).max(self.theta_bar(r))
    }
}

#[derive(Clone)]
pub struct LagrangianModel {
    pub function: Arc<dyn Lagrangian>,
    pub bounds: GrowthBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DerivedFromLagrangian,
    Native,
}

#[derive(Clone)]
pub struct HamiltonianModel {
    pub function: Arc<dyn Hamiltonian>,
    pub provenance: Provenance,
}

/// A Tonelli system: the Lagrangian with its bound functions and the dual
/// Hamiltonian, either derived by Legendre transform or supplied in closed form.
#[derive(Clone)]
pub struct TonelliModel {
    pub id: String,
    pub lagrangian: LagrangianModel,
    pub hamiltonian: HamiltonianModel,
}

impl TonelliModel {
    /// Builds a model whose Hamiltonian is computed from `L` numerically.
    pub fn derived(id: impl Into<String>, l: Arc<dyn Lagrangian>, bounds: GrowthBounds) -> Self {
        let h = Arc::new(DerivedHamiltonian::new(l.clone()));
        Self {
            id: id.into(),
            lagrangian: LagrangianModel {
                function: l,
                bounds,
            },
            hamiltonian: HamiltonianModel {
                function: h,
                provenance: Provenance::DerivedFromLagrangian,
            },
        }
    }

    pub fn native(
        id: impl Into<String>,
        l: Arc<dyn Lagrangian>,
        bounds: GrowthBounds,
        h: Arc<dyn Hamiltonian>,
    ) -> Self {
        assert_eq!(
            l.dim(),
            h.dim(),
            "Lagrangian and Hamiltonian dimensions differ"
        );
        Self {
            id: id.into(),
            lagrangian: LagrangianModel {
                function: l,
                bounds,
            },
            hamiltonian: HamiltonianModel {
                function: h,
                provenance: Provenance::Native,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.function.dim()
    }
    pub fn l(&self) -> &dyn Lagrangian {
        self.lagrangian.function.as_ref()
    }
    pub fn h(&self) -> &dyn Hamiltonian {
        self.hamiltonian.function.as_ref()
    }
    pub fn bounds(&self) -> &GrowthBounds {
        &self.lagrangian.bounds
    }

    pub fn l_value(&self, x: &Vector, v: &Vector) -> f64 {
        self.l().value(x.as_slice(), v.as_slice())
    }
    pub fn l_jet(&self, x: &Vector, v: &Vector) -> Jet {
        lagrangian_jet(self.l(), x, v)
    }
    pub fn l_v(&self, x: &Vector, v: &Vector) -> Vector {
        let n = self.dim();
        let (mut lx, mut lv) = (vec![0.0; n], vec![0.0; n]);
        self.l()
            .gradient(x.as_slice(), v.as_slice(), &mut lx, &mut lv);
        Vector::from_vec(lv)
    }

    pub fn h_value(&self, x: &Vector, p: &Vector) -> f64 {
        self.h().value(x.as_slice(), p.as_slice())
    }
    pub fn h_jet(&self, x: &Vector, p: &Vector) -> Jet {
        hamiltonian_jet(self.h(), x, p)
    }
    pub fn h_p(&self, x: &Vector, p: &Vector) -> Vector {
        let n = self.dim();
        let (mut hx, mut hp) = (vec![0.0; n], vec![0.0; n]);
        self.h()
            .gradient(x.as_slice(), p.as_slice(), &mut hx, &mut hp);
        Vector::from_vec(hp)
    }
}

impl fmt::Debug for TonelliModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TonelliModel")
            .field("id", &self.id)
            .field("dim", &self.dim())
            .field("provenance", &self.hamiltonian.provenance)
            .field("c0", &self.bounds().c0)
            .finish()
    }
}
