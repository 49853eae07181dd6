use serde::Serialize;

use super::TonelliModel;
use crate::error::{HjError, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `theta*(s) = sup_{r >= 0} (r s - theta(r))` for the model's `theta`.
pub fn conjugate_bound(model: &TonelliModel, s: f64) -> Result<f64> {
    let theta = model.bounds().theta.clone();
    conjugate_of(move |r| theta(r), s)
}

pub(crate) fn conjugate_of(theta: impl Fn(f64) -> f64, s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(HjError::InvalidInput(format!(
            "conjugate argument must be a nonnegative number, got {s}"
        )));
    }
    let g = |r: f64| r * s - theta(r);
    let mut hi = 1.0;
    while g(2.0 * hi) > g(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(HjError::Unbounded { s });
        }
    }
    // g is concave, so its maximizer lies in [0, 2 hi].
    let (mut a, mut b) = (0.0, 2.0 * hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-12 * (1.0 + b) {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = g(d);
        }
    }
    Ok(g(0.5 * (a + b)).max(g(0.0)).max(gc).max(gd))
}

/// Search radius coefficient `lambda0 = theta*(Lip(u) + 1) + c0 + K(0)`.
pub fn lambda0(model: &TonelliModel, lip: f64) -> Result<f64> {
    let b = model.bounds();
    Ok(conjugate_bound(model, lip + 1.0)? + b.c0 + b.k_tilde(0.0))
}

/// The constants of the a priori velocity estimate for minimizers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaChain {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub kappa: f64,
}

/// Velocity bound `kappa(r)`: minimizers from `x` to `y` in time `t` with
/// `|y - x| <= R` have speed at most `kappa(R / t)`.
pub fn velocity_bound_kappa(model: &TonelliModel, r: f64) -> Result<KappaChain> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(HjError::InvalidInput(format!(
            "kappa argument must be a nonnegative number, got {r}"
        )));
    }
    let b = model.bounds();
    let c0 = b.c0;
    let k = |s: f64| b.k_tilde(s);
    let c1 = k(r) + c0;
    let c2 = c1 + conjugate_bound(model, 1.0)?;
    let c3 = 4.0 * c0 + 3.0 * k(4.0 * c2 / 3.0);
    let c4 = (c0 - c3) + conjugate_bound(model, k(1.0) + c3 + 1.0)?;
    let c5 = c4.max(2.0);
    Ok(KappaChain {
        c1,
        c2,
        c3,
        c4,
        c5,
        kappa: c5.max(c2),
    })
}
