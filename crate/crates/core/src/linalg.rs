//! Small dense linear-algebra helpers shared by the solvers: projections onto
//! convex hulls, simplex-constrained quadratic programs and a symmetric block
//! tridiagonal solver.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Result of projecting a point onto the convex hull of finitely many points.
#[derive(Debug, Clone)]
pub struct HullProjection {
    pub point: Vector,
    pub weights: Vector,
    pub distance: f64,
}

/// Minimizes `0.5 * w' Q w + c' w` over the probability simplex.
///
/// The optimum always has a representative supported on at most
/// `max_support` indices (`dim + 1` when `Q = G'G` with `G` having `dim` rows),
/// so every such support is enumerated and its equality-constrained KKT system
/// solved. Intended for the handful of points that appear in superdifferential
/// hulls and bundle subproblems.
pub fn simplex_qp(q: &Matrix, c: &Vector, max_support: usize) -> Vector {
    let m = c.len();
    assert!(m > 0, "simplex_qp needs at least one vertex");
    let objective = |w: &Vector| 0.5 * w.dot(&(q * w)) + c.dot(w);

    let mut best = Vector::zeros(m);
    best[0] = 1.0;
    let mut best_val = objective(&best);
    for i in 1..m {
        let mut w = Vector::zeros(m);
        w[i] = 1.0;
        let val = objective(&w);
        if val < best_val {
            best_val = val;
            best = w;
        }
    }

    let kmax = max_support.min(m);
    let mut support: Vec<usize> = Vec::with_capacity(kmax);
    for k in 2..=kmax {
        support.clear();
        support.extend(0..k);
        loop {
            if let Some(w) = solve_face(q, c, &support, m) {
                let val = objective(&w);
                if val < best_val - 1e-15 * best_val.abs().max(1.0) {
                    best_val = val;
                    best = w;
                }
            }
            if !next_combination(&mut support, m) {
                break;
            }
        }
    }
    best
}

fn solve_face(q: &Matrix, c: &Vector, support: &[usize], m: usize) -> Option<Vector> {
    let k = support.len();
    let mut kkt = Matrix::zeros(k + 1, k + 1);
    let mut rhs = Vector::zeros(k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = q[(i, j)];
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = -c[i];
    }
    rhs[k] = 1.0;
    let scale = kkt.amax().max(1.0);
    let sol = symmetric_solve(&kkt, &rhs, 1e-13 * scale)?;
    let mut w = Vector::zeros(m);
    let mut total = 0.0;
    for (a, &i) in support.iter().enumerate() {
        if !sol[a].is_finite() || sol[a] < -1e-10 {
            return None;
        }
        w[i] = sol[a].max(0.0);
        total += w[i];
    }
    if total <= 0.0 {
        return None;
    }
    w /= total;
    Some(w)
}

/// Least-squares solution of a symmetric system through its eigendecomposition,
/// or `None` when the system is inconsistent.
fn symmetric_solve(a: &Matrix, b: &Vector, tol: f64) -> Option<Vector> {
    let eig = a.clone().symmetric_eigen();
    let coeffs = eig.eigenvectors.transpose() * b;
    let mut scaled = Vector::zeros(coeffs.len());
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > tol {
            scaled[i] = coeffs[i] / lam;
        }
    }
    let x = &eig.eigenvectors * scaled;
    let residual = (a * &x - b).amax();
    (residual <= 1e-9 * (1.0 + b.amax())).then_some(x)
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Euclidean projection of `target` onto `co(points)`.
pub fn project_onto_hull(points: &[Vector], target: &Vector) -> HullProjection {
    assert!(!points.is_empty(), "cannot project onto an empty hull");
    let dim = target.len();
    let m = points.len();
    let mut g = Matrix::zeros(dim, m);
    for (j, p) in points.iter().enumerate() {
        g.set_column(j, &(p - target));
    }
    let q = g.transpose() * &g;
    let weights = simplex_qp(&q, &Vector::zeros(m), dim + 1);
    let point = hull_point(points, &weights);
    let distance = (&point - target).norm();
    HullProjection {
        point,
        weights,
        distance,
    }
}

/// Minimum-norm element of `co(points)`.
pub fn min_norm_point(points: &[Vector]) -> HullProjection {
    let dim = points[0].len();
    project_onto_hull(points, &Vector::zeros(dim))
}

pub fn hull_point(points: &[Vector], weights: &Vector) -> Vector {
    let mut out = Vector::zeros(points[0].len());
    for (p, w) in points.iter().zip(weights.iter()) {
        out.axpy(*w, p, 1.0);
    }
    out
}

/// Indices of the points that are extreme in `co(points)`: a point is kept
/// when its distance to the hull of the others exceeds `tol`.
pub fn extreme_points(points: &[Vector], tol: f64) -> Vec<usize> {
    if points.len() <= 1 {
        return (0..points.len()).collect();
    }
    let mut keep = Vec::new();
    for i in 0..points.len() {
        let others: Vec<Vector> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p.clone())
            .collect();
        if project_onto_hull(&others, &points[i]).distance > tol {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        keep.push(0);
    }
    keep
}

/// Solves `A x = b` for a symmetric block tridiagonal `A` given by its
/// diagonal blocks and upper off-diagonal blocks (`upper[k]` couples block `k`
/// to block `k + 1`). Returns `None` when a Schur complement is not positive
/// definite.
pub fn solve_block_tridiagonal(
    diag: &[Matrix],
    upper: &[Matrix],
    rhs: &[Vector],
) -> Option<Vec<Vector>> {
    let nb = diag.len();
    if nb == 0 {
        return Some(Vec::new());
    }
    let mut chol = Vec::with_capacity(nb);
    let mut y: Vec<Vector> = Vec::with_capacity(nb);
    let first = diag[0].clone().cholesky()?;
    y.push(rhs[0].clone());
    chol.push(first);
    for k in 1..nb {
        let prev = &chol[k - 1];
        let u = &upper[k - 1];
        let sinv_u = prev.solve(u);
        let schur = &diag[k] - u.transpose() * &sinv_u;
        let sinv_y = prev.solve(&y[k - 1]);
        y.push(&rhs[k] - u.transpose() * sinv_y);
        chol.push(schur.cholesky()?);
    }
    let mut x = vec![Vector::zeros(rhs[0].len()); nb];
    x[nb - 1] = chol[nb - 1].solve(&y[nb - 1]);
    for k in (0..nb - 1).rev() {
        let r = &y[k] - &upper[k] * &x[k + 1];
        x[k] = chol[k].solve(&r);
    }
    Some(x)
}

/// Uniform sample from the open ball of the given radius around `center`.
pub fn sample_ball<R: Rng>(rng: &mut R, center: &Vector, radius: f64) -> Vector {
    let n = center.len();
    loop {
        let z = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r2 = z.norm_squared();
        if r2 < 1.0 {
            return center + z * radius;
        }
    }
}

/// Uniform sample from the annulus `inner <= |z| < outer` around `center`.
pub fn sample_shell<R: Rng>(rng: &mut R, center: &Vector, inner: f64, outer: f64) -> Vector {
    loop {
        let z = sample_ball(rng, &Vector::zeros(center.len()), outer);
        if z.norm() >= inner {
            return center + z;
        }
    }
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn max_abs_entry(m: &Matrix) -> f64 {
    m.amax()
}
