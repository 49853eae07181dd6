//! Reachable gradients and superdifferentials of semiconcave fields, the
//! minimal-energy covector `p_x` and the pointwise classification used by the
//! propagation code.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::ActionKernel;
use crate::error::{HjError, Result};
use crate::field::ScalarField;
use crate::linalg::{
    extreme_points, hull_point, min_norm_point, project_onto_hull, sample_ball, simplex_qp, Matrix,
    Vector,
};
use crate::models::TonelliModel;

#[derive(Debug, Clone)]
pub struct SamplingOptions {
    /// Outer sampling radius; samples are also drawn at half and a quarter of it.
    pub radius: f64,
    /// Total number of gradient samples over the three radii.
    pub sample_count: usize,
    pub seed: u64,
    /// Finite-difference step as a fraction of the current sampling radius.
    pub fd_ratio: f64,
    /// Clustering threshold relative to the field's Lipschitz constant.
    pub cluster_ratio: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            radius: 1e-3,
            sample_count: 48,
            seed: 7,
            fd_ratio: 0.01,
            cluster_ratio: 0.05,
        }
    }
}

impl SamplingOptions {
    pub fn with_radius(radius: f64) -> Self {
        Self {
            radius,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperdiffEstimate {
    /// Cluster representatives of the reachable gradients.
    pub reachable: Vec<Vector>,
    /// The extreme points among `reachable` (all of them when `n > 3`).
    pub hull_vertices: Vec<Vector>,
    pub diameter: f64,
    pub sample_radius: f64,
    pub sample_count: usize,
    /// Clustering threshold actually used.
    pub eps_cluster: f64,
}

impl SuperdiffEstimate {
    pub fn eps_sing(&self) -> f64 {
        2.0 * self.eps_cluster
    }

    pub fn is_singular(&self) -> bool {
        self.diameter > self.eps_sing()
    }

    /// Distance from `p` to the estimated superdifferential.
    pub fn distance(&self, p: &Vector) -> f64 {
        project_onto_hull(&self.hull_vertices, p).distance
    }
}

fn cluster_threshold(u: &ScalarField, opts: &SamplingOptions) -> f64 {
    (opts.cluster_ratio * u.lip_estimate).max(1e-8)
}

/// Samples gradients at random points of `B(x, r)`, `B(x, r/2)` and
/// `B(x, r/4)` and clusters them by single linkage.
///
/// Samples whose forward and backward difference quotients disagree are
/// dropped as lying too close to a kink. Each cluster is represented by the
/// mean of its members from the smallest radius it reaches.
pub fn reachable_gradients(
    u: &ScalarField,
    x: &Vector,
    opts: &SamplingOptions,
) -> Result<SuperdiffEstimate> {
    if x.len() != u.dim {
        return Err(HjError::InvalidInput(
            "point and field dimensions differ".into(),
        ));
    }
    if !(opts.radius > 0.0) || opts.sample_count == 0 {
        return Err(HjError::InvalidInput(
            "sampling radius and count must be positive".into(),
        ));
    }
    let n = u.dim;
    let eps = cluster_threshold(u, opts);
    let cap = 10.0 * (u.lip_estimate + 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // (gradient, level)
    let mut samples: Vec<(Vector, usize)> = Vec::new();
    let per_level = opts.sample_count.div_ceil(3);
    let mut worst: f64 = 0.0;
    for level in 0..3 {
        let rho = opts.radius / f64::powi(2.0, level as i32);
        let h = opts.fd_ratio * rho;
        for _ in 0..per_level {
            let z = sample_ball(&mut rng, x, rho);
            let u0 = u.value(&z);
            let mut g = Vector::zeros(n);
            let mut smooth = true;
            let mut zp = z.clone();
            for i in 0..n {
                let zi = zp[i];
                zp[i] = zi + h;
                let fwd = (u.value(&zp) - u0) / h;
                zp[i] = zi - h;
                let bwd = (u0 - u.value(&zp)) / h;
                zp[i] = zi;
                worst = worst.max(fwd.abs()).max(bwd.abs());
                if (fwd - bwd).abs() > eps {
                    smooth = false;
                }
                g[i] = 0.5 * (fwd + bwd);
            }
            if smooth {
                samples.push((g, level as usize));
            }
        }
    }
    if worst > cap || !worst.is_finite() {
        return Err(HjError::DegenerateSamples {
            max_quotient: worst,
        });
    }
    if samples.is_empty() {
        return Err(HjError::DegenerateSamples {
            max_quotient: worst,
        });
    }

    // single linkage via union-find
    let m = samples.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut j = i;
        while parent[j] != r {
            let next = parent[j];
            parent[j] = r;
            j = next;
        }
        r
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (&samples[i].0 - &samples[j].0).norm() <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        match roots.iter().position(|&q| q == r) {
            Some(k) => members[k].push(i),
            None => {
                roots.push(r);
                members.push(vec![i]);
            }
        }
    }
    let reachable: Vec<Vector> = members
        .iter()
        .map(|idx| {
            let finest = idx.iter().map(|&i| samples[i].1).max().unwrap_or(0);
            let chosen: Vec<&Vector> = idx
                .iter()
                .filter(|&&i| samples[i].1 == finest)
                .map(|&i| &samples[i].0)
                .collect();
            let mut mean = Vector::zeros(n);
            for g in &chosen {
                mean += *g;
            }
            mean / chosen.len() as f64
        })
        .collect();
    let mut diameter: f64 = 0.0;
    for i in 0..reachable.len() {
        for j in (i + 1)..reachable.len() {
            diameter = diameter.max((&reachable[i] - &reachable[j]).norm());
        }
    }
    let hull_vertices = if n <= 3 {
        extreme_points(&reachable, 1e-12 * (1.0 + diameter))
            .into_iter()
            .map(|i| reachable[i].clone())
            .collect()
    } else {
        reachable.clone()
    };
    Ok(SuperdiffEstimate {
        reachable,
        hull_vertices,
        diameter,
        sample_radius: opts.radius,
        sample_count: m,
        eps_cluster: eps,
    })
}

/// The unique minimizer `p_x` of `H(x, .)` over `co(hull_vertices)` and
/// `H(x, p_x)`, by sequential quadratic programming on the simplex weights.
pub fn minimal_energy_element(
    model: &TonelliModel,
    x: &Vector,
    est: &SuperdiffEstimate,
) -> (Vector, f64) {
    let verts = &est.hull_vertices;
    if verts.len() == 1 {
        let p = verts[0].clone();
        let h = model.h_value(x, &p);
        return (p, h);
    }
    let n = x.len();
    let m = verts.len();
    let mut g_mat = Matrix::zeros(n, m);
    for (j, v) in verts.iter().enumerate() {
        g_mat.set_column(j, v);
    }
    let mut w = Vector::from_element(m, 1.0 / m as f64);
    let mut p = hull_point(verts, &w);
    let mut hv = model.h_value(x, &p);
    for _ in 0..100 {
        let jet = model.h_jet(x, &p);
        let hpp = jet.dvv.clone();
        let hp = jet.dv.clone();
        let q = g_mat.transpose() * &hpp * &g_mat;
        let grad = g_mat.transpose() * &hp;
        let lin = &grad - &q * &w;
        let target = simplex_qp(&q, &lin, (n + 1).min(m));
        let dir = &target - &w;
        let slope = grad.dot(&dir);
        if slope >= -1e-15 * (1.0 + hv.abs()) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let wt = &w + step * &dir;
            let pt = hull_point(verts, &wt);
            let ht = model.h_value(x, &pt);
            if ht <= hv + 1e-4 * step * slope {
                w = wt;
                p = pt;
                hv = ht;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step * dir.amax() < 1e-14 {
            break;
        }
    }
    (p, hv)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointClassification {
    pub point: Vector,
    pub singular: bool,
    pub critical: bool,
    pub strong_critical: bool,
    pub p_x: Vector,
    pub h_at_px: f64,
    /// `D_y A_t(x, x)` lies in the estimated superdifferential.
    pub stationarity: bool,
    pub t_probe: f64,
    pub eps_sing: f64,
    pub eps_crit: f64,
    /// Norm of the minimal element of `co H_p(x, D*u(x))`.
    pub critical_residual: f64,
    /// Distance from `D_y A_t(x, x)` to the estimated superdifferential.
    pub stationarity_distance: f64,
    pub estimate: SuperdiffEstimate,
}

/// `p` in `co(est)` with `H_p(x, p) = 0`, if one exists up to `eps`.
fn strong_critical_witness(
    model: &TonelliModel,
    x: &Vector,
    est: &SuperdiffEstimate,
    start: &Vector,
    eps: f64,
) -> bool {
    let mut p = start.clone();
    for _ in 0..50 {
        let jet = model.h_jet(x, &p);
        let hp = jet.dv.clone();
        if hp.norm() <= 1e-14 {
            break;
        }
        let hpp = jet.dvv.clone();
        let Some(chol) = hpp.cholesky() else { break };
        let step = chol.solve(&hp);
        p -= &step;
        if step.norm() <= 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    let proj = project_onto_hull(&est.hull_vertices, &p).point;
    model.h_p(x, &proj).norm() <= eps
}

/// Classifies `x` as singular, critical and strong critical for `u`, and runs
/// the stationarity test at `t_probe`.
pub fn classify_point(
    u: &ScalarField,
    kernel: &dyn ActionKernel,
    x: &Vector,
    t_probe: f64,
    opts: &SamplingOptions,
) -> Result<PointClassification> {
    let est = reachable_gradients(u, x, opts)?;
    classify_with_estimate(kernel, x, t_probe, est)
}

pub fn classify_with_estimate(
    kernel: &dyn ActionKernel,
    x: &Vector,
    t_probe: f64,
    est: SuperdiffEstimate,
) -> Result<PointClassification> {
    let model = kernel.model();
    let (p_x, h_at_px) = minimal_energy_element(model, x, &est);
    let hp_px = model.h_p(x, &p_x);
    let eps_crit = 1e-3 * (1.0 + hp_px.norm());
    let images: Vec<Vector> = est.hull_vertices.iter().map(|p| model.h_p(x, p)).collect();
    let critical_residual = min_norm_point(&images).distance;
    let critical = critical_residual <= eps_crit;
    let strong_critical = critical && strong_critical_witness(model, x, &est, &p_x, eps_crit);
    let dya = kernel.solve(x, x, t_probe, None)?.grad_y;
    let stationarity_distance = est.distance(&dya);
    Ok(PointClassification {
        point: x.clone(),
        singular: est.is_singular(),
        critical,
        strong_critical,
        p_x,
        h_at_px,
        stationarity: stationarity_distance <= eps_crit,
        t_probe,
        eps_sing: est.eps_sing(),
        eps_crit,
        critical_residual,
        stationarity_distance,
        estimate: est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::PlanarKernel;
    use crate::fixtures::{neg_abs_1d, two_source_eikonal};
    use crate::models::model_by_id;
    use nalgebra::dvector;

    fn eikonal(n: usize) -> PlanarKernel {
        PlanarKernel::new(model_by_id("eikonal", n).unwrap())
    }

    #[test]
    fn neg_abs_reachable_pair() {
        let est = reachable_gradients(&neg_abs_1d(), &dvector![0.0], &SamplingOptions::default())
            .unwrap();
        assert_eq!(est.reachable.len(), 2);
        assert!((est.diameter - 2.0).abs() < 1e-9);
        assert!(est.is_singular());
    }

    #[test]
    fn smooth_point_single_cluster() {
        let u = ScalarField::analytic("s", 2, |x| x[0].sin() + 0.5 * x[1], 1.2, 1.0);
        let x = dvector![0.3, -0.2];
        let est = reachable_gradients(&u, &x, &SamplingOptions::default()).unwrap();
        assert_eq!(est.reachable.len(), 1);
        assert!(est.diameter <= est.eps_cluster);
        assert!((&est.reachable[0] - dvector![0.3f64.cos(), 0.5]).norm() < 1e-3);
    }

    #[test]
    fn two_source_gradients() {
        let u = two_source_eikonal(&[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let est =
            reachable_gradients(&u, &dvector![0.0, 1.0], &SamplingOptions::default()).unwrap();
        assert_eq!(est.reachable.len(), 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for target in [dvector![s, s], dvector![-s, s]] {
            let d = est
                .reachable
                .iter()
                .map(|p| (p - &target).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-3, "{d}");
        }
    }

    #[test]
    fn degenerate_field_is_rejected() {
        let u = ScalarField::analytic("sqrt", 1, |x| x[0].abs().sqrt(), 1.0, 1.0);
        assert!(matches!(
            reachable_gradients(&u, &dvector![0.0], &SamplingOptions::default()),
            Err(HjError::DegenerateSamples { .. })
        ));
    }

    fn manual(verts: Vec<Vector>) -> SuperdiffEstimate {
        SuperdiffEstimate {
            hull_vertices: verts.clone(),
            reachable: verts,
            diameter: 0.0,
            sample_radius: 0.0,
            sample_count: 0,
            eps_cluster: 0.05,
        }
    }

    #[test]
    fn minimal_energy_examples() {
        let m1 = model_by_id("eikonal", 1).unwrap();
        let (p, h) = minimal_energy_element(
            &m1,
            &dvector![0.0],
            &manual(vec![dvector![-1.0], dvector![1.0]]),
        );
        assert!(p[0].abs() < 1e-12 && (h + 0.5).abs() < 1e-12);
        let (p, _) = minimal_energy_element(&m1, &dvector![0.0], &manual(vec![dvector![0.4]]));
        assert_eq!(p[0], 0.4);
        let m2 = model_by_id("eikonal", 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (p, h) = minimal_energy_element(
            &m2,
            &dvector![0.0, 1.0],
            &manual(vec![dvector![s, s], dvector![-s, s]]),
        );
        assert!((&p - dvector![0.0, s]).norm() < 1e-10);
        assert!((h + 0.25).abs() < 1e-10);
        // dense sampling of the segment
        let best = (0..=1000)
            .map(|k| {
                let a = k as f64 / 1000.0;
                let q = dvector![s * (2.0 * a - 1.0), s];
                m2.h_value(&dvector![0.0, 1.0], &q)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(h <= best + 1e-12);
    }

    #[test]
    fn minimal_energy_on_nonquadratic_h() {
        let m = model_by_id("pendulum", 1).unwrap();
        let est = manual(vec![dvector![0.5], dvector![2.0]]);
        let (p, _) = minimal_energy_element(&m, &dvector![0.2], &est);
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn neg_abs_classification() {
        let c = classify_point(
            &neg_abs_1d(),
            &eikonal(1),
            &dvector![0.0],
            0.2,
            &SamplingOptions::default(),
        )
        .unwrap();
        assert!(c.singular && c.critical && c.strong_critical && c.stationarity);
        assert!(c.p_x[0].abs() < 1e-9);
    }

    #[test]
    fn smooth_linear_classification() {
        let u = crate::fixtures::linear(&[1.0, 0.0]);
        let c = classify_point(
            &u,
            &eikonal(2),
            &dvector![0.3, 0.4],
            0.2,
            &SamplingOptions::default(),
        )
        .unwrap();
        assert!(!c.singular && !c.critical && !c.strong_critical && !c.stationarity);
        assert!((&c.p_x - dvector![1.0, 0.0]).norm() < 1e-6);
    }

    #[test]
    fn two_source_classification() {
        let u = two_source_eikonal(&[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let c = classify_point(
            &u,
            &eikonal(2),
            &dvector![0.0, 1.0],
            0.1,
            &SamplingOptions::default(),
        )
        .unwrap();
        assert!(c.singular && !c.critical && !c.strong_critical && !c.stationarity);
        assert!((c.critical_residual - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        let o = classify_point(
            &u,
            &eikonal(2),
            &dvector![0.0, 0.0],
            0.1,
            &SamplingOptions::default(),
        )
        .unwrap();
        assert!(o.singular && o.critical && o.strong_critical && o.stationarity);
    }
}
