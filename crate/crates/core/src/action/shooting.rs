//! Fixed-step RK4 integration of Hamilton's equations with the action
//! quadrature and, optionally, the variational equations in the initial
//! covector. Buffers are flat and row-major so the hot loop does not allocate.

use crate::models::Hamiltonian;

pub(crate) struct Shot {
    pub x_end: Vec<f64>,
    pub action: f64,
    /// `d x(t) / d p0`, row-major `n x n`; empty unless requested.
    pub jac: Vec<f64>,
    /// Node samples `(x, p, H)` when recording was requested.
    pub xs: Vec<Vec<f64>>,
    pub ps: Vec<Vec<f64>>,
    pub hs: Vec<f64>,
}

pub(crate) struct Integrator<'a> {
    h: &'a dyn Hamiltonian,
    n: usize,
    variation: bool,
    hx: Vec<f64>,
    hp: Vec<f64>,
    hxx: Vec<f64>,
    hxp: Vec<f64>,
    hpp: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(h: &'a dyn Hamiltonian, variation: bool) -> Self {
        let n = h.dim();
        Self {
            h,
            n,
            variation,
            hx: vec![0.0; n],
            hp: vec![0.0; n],
            hxx: vec![0.0; n * n],
            hxp: vec![0.0; n * n],
            hpp: vec![0.0; n * n],
        }
    }

    fn len(&self) -> usize {
        let n = self.n;
        2 * n + 1 + if self.variation { 2 * n * n } else { 0 }
    }

    /// State layout: `x (n) | p (n) | a (1) | X (n*n) | P (n*n)`.
    fn rhs(&mut self, s: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (x, rest) = s.split_at(n);
        let (p, rest) = rest.split_at(n);
        let hval = self.h.gradient(x, p, &mut self.hx, &mut self.hp);
        let mut php = 0.0;
        for i in 0..n {
            out[i] = self.hp[i];
            out[n + i] = -self.hx[i];
            php += p[i] * self.hp[i];
        }
        out[2 * n] = php - hval;
        if !self.variation {
            return;
        }
        self.h
            .hessian(x, p, &mut self.hxx, &mut self.hxp, &mut self.hpp);
        let xm = &rest[1..1 + n * n];
        let pm = &rest[1 + n * n..1 + 2 * n * n];
        let base = 2 * n + 1;
        for i in 0..n {
            for k in 0..n {
                // X' = H_px X + H_pp P ; P' = -H_xx X - H_xp P
                let mut dx = 0.0;
                let mut dp = 0.0;
                for j in 0..n {
                    dx += self.hxp[j * n + i] * xm[j * n + k] + self.hpp[i * n + j] * pm[j * n + k];
                    dp -= self.hxx[i * n + j] * xm[j * n + k] + self.hxp[i * n + j] * pm[j * n + k];
                }
                out[base + i * n + k] = dx;
                out[base + n * n + i * n + k] = dp;
            }
        }
    }

    /// Integrates from `(x0, p0)` over `[0, t]` with `intervals * substeps`
    /// RK4 steps, recording the `intervals + 1` node states if `record`.
    pub fn shoot(
        &mut self,
        x0: &[f64],
        p0: &[f64],
        t: f64,
        intervals: usize,
        substeps: usize,
        record: bool,
    ) -> Shot {
        let n = self.n;
        let len = self.len();
        let mut s = vec![0.0; len];
        s[..n].copy_from_slice(x0);
        s[n..2 * n].copy_from_slice(p0);
        if self.variation {
            let base = 2 * n + 1 + n * n;
            for i in 0..n {
                s[base + i * n + i] = 1.0;
            }
        }
        let mut k1 = vec![0.0; len];
        let mut k2 = vec![0.0; len];
        let mut k3 = vec![0.0; len];
        let mut k4 = vec![0.0; len];
        let mut tmp = vec![0.0; len];
        let steps = substeps.max(1);
        let dt = t / (intervals * steps) as f64;

        let mut xs = Vec::new();
        let mut ps = Vec::new();
        let mut hs = Vec::new();
        if record {
            xs.reserve(intervals + 1);
            xs.push(s[..n].to_vec());
            ps.push(s[n..2 * n].to_vec());
            hs.push(self.h.value(&s[..n], &s[n..2 * n]));
        }
        for _ in 0..intervals {
            for _ in 0..steps {
                self.rhs(&s, &mut k1);
                for i in 0..len {
                    tmp[i] = s[i] + 0.5 * dt * k1[i];
                }
                self.rhs(&tmp, &mut k2);
                for i in 0..len {
                    tmp[i] = s[i] + 0.5 * dt * k2[i];
                }
                self.rhs(&tmp, &mut k3);
                for i in 0..len {
                    tmp[i] = s[i] + dt * k3[i];
                }
                self.rhs(&tmp, &mut k4);
                for i in 0..len {
                    s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            if record {
                xs.push(s[..n].to_vec());
                ps.push(s[n..2 * n].to_vec());
                hs.push(self.h.value(&s[..n], &s[n..2 * n]));
            }
        }
        let jac = if self.variation {
            s[2 * n + 1..2 * n + 1 + n * n].to_vec()
        } else {
            Vec::new()
        };
        Shot {
            x_end: s[..n].to_vec(),
            action: s[2 * n],
            jac,
            xs,
            ps,
            hs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{MechanicalHamiltonian, Potential};

    #[test]
    fn harmonic_flow_and_variation_match_closed_form() {
        let h = MechanicalHamiltonian {
            dim: 1,
            potential: Potential::Quadratic { omega: 1.0 },
        };
        let mut integ = Integrator::new(&h, true);
        let t = 1.3;
        let shot = integ.shoot(&[0.4], &[0.7], t, 64, 2, false);
        let x = 0.4 * t.cos() + 0.7 * t.sin();
        assert!((shot.x_end[0] - x).abs() < 1e-10);
        assert!((shot.jac[0] - t.sin()).abs() < 1e-10);
    }
}
