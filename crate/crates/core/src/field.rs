//! Scalar fields `u`: analytic callbacks or gridded data with multilinear
//! interpolation, carrying Lipschitz and semiconcavity estimates.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};
use crate::linalg::{sample_ball, Vector};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Values on a uniform tensor grid, stored with the last axis fastest.
///
/// Non-periodic grids place `N` nodes from `lower` to `upper` inclusive and
/// clamp outside. Periodic grids place `N` nodes at `lower + k (upper - lower) / N`
/// and wrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub resolution: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
    pub values: Vec<f64>,
}

impl GridData {
    pub fn validate(&self) -> Result<()> {
        let n = self.resolution.len();
        if n == 0 || self.lower.len() != n || self.upper.len() != n {
            return Err(HjError::GridLoad(
                "resolution, lower and upper must have equal positive length".into(),
            ));
        }
        let min_nodes = if self.periodic { 1 } else { 2 };
        if self.resolution.iter().any(|&r| r < min_nodes) {
            return Err(HjError::GridLoad(format!(
                "each axis needs at least {min_nodes} nodes"
            )));
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| !(b > a)) {
            return Err(HjError::GridLoad(
                "upper must exceed lower on every axis".into(),
            ));
        }
        let expected: usize = self.resolution.iter().product();
        if self.values.len() != expected {
            return Err(HjError::GridLoad(format!(
                "expected {expected} values, found {}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HjError::GridLoad("non-finite grid value".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let len = self.upper[axis] - self.lower[axis];
        if self.periodic {
            len / self.resolution[axis] as f64
        } else {
            len / (self.resolution[axis] - 1) as f64
        }
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn node_value(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Multilinear interpolation.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut next = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let h = self.spacing(a);
            let r = self.resolution[a];
            let s = (x[a] - self.lower[a]) / h;
            if self.periodic {
                let fl = s.floor();
                let k = (fl as i64).rem_euclid(r as i64) as usize;
                base[a] = k;
                next[a] = (k + 1) % r;
                frac[a] = s - fl;
            } else {
                let s = s.clamp(0.0, (r - 1) as f64);
                let k = (s.floor() as usize).min(r - 2);
                base[a] = k;
                next[a] = k + 1;
                frac[a] = s - k as f64;
            }
        }
        let mut total = 0.0;
        let mut idx = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    idx[a] = next[a];
                    w *= frac[a];
                } else {
                    idx[a] = base[a];
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                total += w * self.node_value(&idx);
            }
        }
        total
    }

    /// Lipschitz and semiconcavity constants from grid differences, inflated by 10%.
    pub fn difference_estimates(&self) -> (f64, f64) {
        let n = self.dim();
        let total: usize = self.values.len();
        let mut slope: f64 = 0.0;
        let mut curv: f64 = 0.0;
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..n).rev() {
                idx[a] = rem % self.resolution[a];
                rem /= self.resolution[a];
            }
            let u0 = self.values[flat];
            for a in 0..n {
                let h = self.spacing(a);
                let r = self.resolution[a];
                let fwd = if self.periodic {
                    Some((idx[a] + 1) % r)
                } else if idx[a] + 1 < r {
                    Some(idx[a] + 1)
                } else {
                    None
                };
                let bwd = if self.periodic {
                    Some((idx[a] + r - 1) % r)
                } else if idx[a] > 0 {
                    Some(idx[a] - 1)
                } else {
                    None
                };
                let mut j = idx.clone();
                let uf = fwd.map(|k| {
                    j[a] = k;
                    self.node_value(&j)
                });
                let ub = bwd.map(|k| {
                    j[a] = k;
                    self.node_value(&j)
                });
                if let Some(uf) = uf {
                    slope = slope.max((uf - u0).abs() / h);
                }
                if let (Some(uf), Some(ub)) = (uf, ub) {
                    curv = curv.max((uf + ub - 2.0 * u0) / (h * h));
                }
            }
        }
        (1.1 * slope * (n as f64).sqrt(), 1.1 * curv.max(0.0))
    }
}

#[derive(Clone)]
pub enum FieldSource {
    Analytic(FieldFn),
    Grid(Arc<GridData>),
}

/// A semiconcave function with its Lipschitz constant and semiconcavity
/// constant `C1` (so `u(x+z) + u(x-z) - 2u(x) <= C1 |z|^2`).
#[derive(Clone)]
pub struct ScalarField {
    pub id: String,
    pub dim: usize,
    pub source: FieldSource,
    pub lip_estimate: f64,
    pub semiconcavity_estimate: f64,
    /// Box on which the estimates are claimed, when bounded.
    pub domain: Option<(Vector, Vector)>,
}

impl ScalarField {
    pub fn analytic(
        id: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        lip: f64,
        semiconcavity: f64,
    ) -> Self {
        Self {
            id: id.into(),
            dim,
            source: FieldSource::Analytic(Arc::new(f)),
            lip_estimate: lip,
            semiconcavity_estimate: semiconcavity,
            domain: None,
        }
    }

    pub fn from_grid(id: impl Into<String>, grid: GridData) -> Result<Self> {
        grid.validate()?;
        let (lip, c1) = grid.difference_estimates();
        let dim = grid.dim();
        let domain = if grid.periodic {
            None
        } else {
            Some((
                Vector::from_column_slice(&grid.lower),
                Vector::from_column_slice(&grid.upper),
            ))
        };
        Ok(Self {
            id: id.into(),
            dim,
            source: FieldSource::Grid(Arc::new(grid)),
            lip_estimate: lip,
            semiconcavity_estimate: c1,
            domain,
        })
    }

    pub fn with_domain(mut self, lower: Vector, upper: Vector) -> Self {
        self.domain = Some((lower, upper));
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.source {
            FieldSource::Analytic(f) => f(x),
            FieldSource::Grid(g) => g.interpolate(x),
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.eval(x.as_slice())
    }

    /// `c * u` with constants scaled accordingly (`c >= 0`).
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        let mut out = ScalarField::analytic(
            format!("{}*{c}", self.id),
            self.dim,
            move |x| c * inner.eval(x),
            c.abs() * self.lip_estimate,
            c.max(0.0) * self.semiconcavity_estimate,
        );
        out.domain = self.domain.clone();
        out
    }

    /// `u + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.clone();
        let mut out = ScalarField::analytic(
            format!("{}+{c}", self.id),
            self.dim,
            move |x| inner.eval(x) + c,
            self.lip_estimate,
            self.semiconcavity_estimate,
        );
        out.domain = self.domain.clone();
        out
    }

    /// Central-difference gradient with step `h`.
    pub fn fd_gradient(&self, x: &Vector, h: f64) -> Vector {
        let mut g = Vector::zeros(self.dim);
        let mut xp = x.clone();
        for i in 0..self.dim {
            let xi = xp[i];
            xp[i] = xi + h;
            let up = self.value(&xp);
            xp[i] = xi - h;
            let um = self.value(&xp);
            xp[i] = xi;
            g[i] = (up - um) / (2.0 * h);
        }
        g
    }

    /// Central-difference gradient whose step shrinks while forward and
    /// backward quotients disagree, so that points just beside a kink get the
    /// gradient of the branch they lie on rather than a blend.
    pub fn supergradient(&self, x: &Vector, h: f64) -> Vector {
        let mut g = Vector::zeros(self.dim);
        let mut xp = x.clone();
        let u0 = self.value(x);
        let gap_tol = 1e-3 * (1.0 + self.lip_estimate);
        for i in 0..self.dim {
            let xi = xp[i];
            let mut step = h;
            loop {
                xp[i] = xi + step;
                let up = self.value(&xp);
                xp[i] = xi - step;
                let um = self.value(&xp);
                let fwd = (up - u0) / step;
                let bwd = (u0 - um) / step;
                g[i] = 0.5 * (fwd + bwd);
                if (fwd - bwd).abs() <= gap_tol || step < 1e-13 * (1.0 + xi.abs()) {
                    break;
                }
                step *= 0.01;
            }
            xp[i] = xi;
        }
        g
    }

    /// Largest sampled difference quotient and midpoint concavity excess
    /// ratio around `center`; used to validate the declared constants.
    pub fn sampled_constants(
        &self,
        center: &Vector,
        radius: f64,
        count: usize,
        seed: u64,
    ) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lip: f64 = 0.0;
        let mut semi: f64 = 0.0;
        for _ in 0..count {
            let a = sample_ball(&mut rng, center, radius);
            let b = sample_ball(&mut rng, center, radius);
            let d = (&a - &b).norm();
            if d > 0.0 {
                lip = lip.max((self.value(&a) - self.value(&b)).abs() / d);
            }
            let z = sample_ball(&mut rng, &Vector::zeros(self.dim), 0.5 * radius);
            let zz = z.norm_squared();
            if zz > 0.0 {
                let ex = self.value(&(&a + &z)) + self.value(&(&a - &z)) - 2.0 * self.value(&a);
                semi = semi.max(ex / zz);
            }
        }
        (lip, semi)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.source {
            FieldSource::Analytic(_) => "analytic",
            FieldSource::Grid(_) => "grid",
        };
        f.debug_struct("ScalarField")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("mode", &mode)
            .field("lip_estimate", &self.lip_estimate)
            .field("semiconcavity_estimate", &self.semiconcavity_estimate)
            .finish()
    }
}
