//! Proximal bundle method for minimizing a locally convex, possibly
//! nonsmooth function over a ball. The dual of each proximal subproblem is a
//! quadratic program on the simplex, solved exactly.

use crate::error::Result;
use crate::linalg::{simplex_qp, Matrix, Vector};

pub(crate) struct OracleValue<W> {
    pub value: f64,
    pub subgradient: Vector,
    pub payload: W,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BundleSettings {
    /// Proximal weight; about the curvature of the smooth part.
    pub mu: f64,
    pub max_iter: usize,
    /// Stop once the predicted decrease drops below this.
    pub tol: f64,
    pub max_bundle: usize,
}

pub(crate) struct BundleOutcome<W> {
    pub point: Vector,
    pub best: OracleValue<W>,
    pub iterations: usize,
}

struct Piece {
    y: Vector,
    value: f64,
    g: Vector,
}

fn project_ball(y: Vector, center: &Vector, radius: f64) -> Vector {
    let d = &y - center;
    let r = d.norm();
    if r > radius {
        center + d * (radius / r)
    } else {
        y
    }
}

/// Minimizes `oracle` over `B(center, radius)` starting from `start`.
pub(crate) fn minimize<W, F>(
    mut oracle: F,
    start: Vector,
    center: &Vector,
    radius: f64,
    settings: BundleSettings,
) -> Result<BundleOutcome<W>>
where
    F: FnMut(&Vector) -> Result<OracleValue<W>>,
{
    let n = start.len();
    let mut c = project_ball(start, center, radius);
    let mut best = oracle(&c)?;
    let mut bundle = vec![Piece {
        y: c.clone(),
        value: best.value,
        g: best.subgradient.clone(),
    }];
    let mut mu = settings.mu;
    let mut iterations = 0;
    let mut last_trial: Option<Vector> = None;

    for it in 0..settings.max_iter {
        iterations = it + 1;
        let fc = best.value;
        let m = bundle.len();
        let errors = Vector::from_iterator(
            m,
            bundle
                .iter()
                .map(|p| (fc - p.value - p.g.dot(&(&c - &p.y))).max(0.0)),
        );
        let mut gmat = Matrix::zeros(n, m);
        for (j, p) in bundle.iter().enumerate() {
            gmat.set_column(j, &p.g);
        }
        let q = gmat.transpose() * &gmat / mu;
        let w = simplex_qp(&q, &errors, n + 1);
        let g_agg = &gmat * &w;
        let e_agg = w.dot(&errors);
        let predicted = e_agg + g_agg.norm_squared() / mu;
        if predicted <= settings.tol {
            break;
        }
        let trial = project_ball(&c - &g_agg / mu, center, radius);
        if (&trial - &c).amax() <= 1e-15 * (1.0 + c.amax()) {
            // zero aggregate subgradient with stale linearizations: tighten
            // the proximal term so the next trial probes near the center
            if mu < 1e8 * settings.mu {
                mu *= 4.0;
                last_trial = None;
                continue;
            }
            break;
        }
        // a repeated trial point means the cuts carry no new information
        if let Some(last) = &last_trial {
            if (&trial - last).amax() <= 1e-15 * (1.0 + c.amax()) {
                break;
            }
        }
        last_trial = Some(trial.clone());
        let out = oracle(&trial)?;
        let piece = Piece {
            y: trial.clone(),
            value: out.value,
            g: out.subgradient.clone(),
        };
        let c_old = c.clone();
        if fc - out.value >= 0.1 * predicted {
            c = trial;
            best = out;
            mu = (0.5 * mu).max(settings.mu);
        }
        // Keep the active pieces, their aggregate, the newest piece and the
        // one at the center.
        let aggregate = Piece {
            y: c_old.clone(),
            value: fc - e_agg,
            g: g_agg,
        };
        let mut kept: Vec<Piece> = Vec::with_capacity(settings.max_bundle + 2);
        let mut active = 0;
        for (j, p) in bundle.into_iter().enumerate() {
            if w[j] > 1e-12 || (&p.y - &c).amax() == 0.0 {
                active += usize::from(w[j] > 1e-12);
                kept.push(p);
            }
        }
        if active > 1 {
            kept.push(aggregate);
        }
        kept.push(piece);
        while kept.len() > settings.max_bundle {
            let oldest = kept
                .iter()
                .position(|p| (&p.y - &c).amax() != 0.0)
                .unwrap_or(0);
            kept.remove(oldest);
        }
        bundle = kept;
    }
    Ok(BundleOutcome {
        point: c,
        best,
        iterations,
    })
}
