//! Smallest eigenpairs of a sparse symmetric pencil `S x = lambda D x` with
//! diagonal positive `D`.
//!
//! Small problems go through a dense symmetric eigensolver. Larger ones use a
//! shift-and-invert block subspace iteration in the standard form
//! `y = D^{1/2} x`, expanded with residual directions and restarted from the
//! wanted Ritz vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EigenPair;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Residual at which iteration stops early.
    pub tol: f64,
    /// Largest residual still returned as converged.
    pub accept_tol: f64,
    pub block_size: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Problems up to this size are solved densely.
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, accept_tol: 1e-8, block_size: 8, max_iterations: 400, seed: 0x5eed, dense_limit: 300 }
    }
}

/// The `k` smallest eigenpairs of `(s, diag(d))`, ascending.
///
/// Fields are scaled so that `sum_i d_i x_i^2 = sum_i d_i`, and signed so the
/// first clearly nonzero entry is positive.
pub fn generalized_eigenpairs(s: &CsrMatrix, d: &[f64], k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let n = s.dim();
    if d.len() != n {
        return Err(Error::InvalidArgument(format!("mass has {} entries for dimension {n}", d.len())));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}-dimensional problem")));
    }
    if d.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument("mass matrix must be positive".into()));
    }
    let sqrt_d: Vec<f64> = d.iter().map(|m| m.sqrt()).collect();
    let standard = if n <= opts.dense_limit { dense(s, &sqrt_d, k) } else { subspace(s, d, &sqrt_d, k, opts)? };
    let total: f64 = d.iter().sum();
    let mut pairs: Vec<EigenPair> = standard.into_iter().map(|y| finish(s, d, &sqrt_d, y, total)).collect();
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    if !(worst <= opts.accept_tol) {
        return Err(Error::Convergence { iterations: opts.max_iterations, residual: worst });
    }
    Ok(pairs)
}

/// Rayleigh quotient and relative residual of `x` in the original pencil.
fn residual(s: &CsrMatrix, d: &[f64], x: &[f64]) -> (f64, f64) {
    let sx = s.mul_vec(x);
    let xsx: f64 = sx.iter().zip(x).map(|(a, b)| a * b).sum();
    let xdx: f64 = x.iter().zip(d).map(|(a, m)| m * a * a).sum();
    let lambda = xsx / xdx;
    let mut r2 = 0.0;
    let mut dx2 = 0.0;
    for i in 0..x.len() {
        let dx = d[i] * x[i];
        r2 += (sx[i] - lambda * dx).powi(2);
        dx2 += dx * dx;
    }
    (lambda, (r2 / dx2).sqrt())
}

fn finish(s: &CsrMatrix, d: &[f64], sqrt_d: &[f64], y: Vec<f64>, total: f64) -> EigenPair {
    let mut x: Vec<f64> = y.iter().zip(sqrt_d).map(|(a, r)| a / r).collect();
    let xdx: f64 = x.iter().zip(d).map(|(a, m)| m * a * a).sum();
    let scale = (total / xdx).sqrt();
    let peak = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let lead = x.iter().find(|a| a.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    for a in &mut x {
        *a *= sign * scale;
    }
    let (lambda, residual) = residual(s, d, &x);
    EigenPair { lambda, field: x, residual }
}

fn dense(s: &CsrMatrix, sqrt_d: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = s.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (c, v) = s.row(i);
        for (&j, &val) in c.iter().zip(v) {
            a[(i, j)] = val / (sqrt_d[i] * sqrt_d[j]);
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order[..k].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

/// Orthonormalizes `v` against `basis` (classical Gram-Schmidt, twice).
/// Returns `None` when little of `v` survives.
fn orthonormalize(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let before = dot(&v, &v).sqrt();
    if !(before > 0.0) {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &v)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(&mut v, -c, q);
        }
    }
    let after = dot(&v, &v).sqrt();
    if after <= 1e-8 * before {
        return None;
    }
    v.iter_mut().for_each(|a| *a /= after);
    Some(v)
}

/// Linear combination `sum_j basis[j] * coeffs[j]`.
fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (q, c) in basis.iter().zip(coeffs) {
        axpy(&mut out, c, q);
    }
    out
}

fn subspace(s: &CsrMatrix, d: &[f64], sqrt_d: &[f64], k: usize, opts: &EigenOptions) -> Result<Vec<Vec<f64>>> {
    let n = s.dim();
    let total: f64 = d.iter().sum();
    // shift below the spectrum on the scale of the first nonzero eigenvalue
    let sigma = -2.0 * std::f64::consts::PI / total;
    let chol = EnvelopeCholesky::factor(&s.add_diagonal(d, -sigma))?;
    let apply = |y: &[f64]| -> Vec<f64> {
        let b: Vec<f64> = y.iter().zip(sqrt_d).map(|(a, r)| a * r).collect();
        let x = chol.solve(&b);
        x.iter().zip(sqrt_d).map(|(a, r)| a * r).collect()
    };

    let block = opts.block_size.clamp(1, n);
    let keep = (k + block).min(n);
    let max_dim = (keep + 3 * block).max(2 * k).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };

    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<Vec<f64>> = Vec::new();
    let mut fresh: Vec<Vec<f64>> = Vec::new();
    while fresh.len() < block {
        if let Some(q) = orthonormalize(&fresh, random_vector(&mut rng)) {
            fresh.push(q);
        }
    }

    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut last: Option<Vec<Vec<f64>>> = None;
    for _ in 0..opts.max_iterations {
        for q in fresh.drain(..) {
            w.push(apply(&q));
            v.push(q);
        }
        let m = v.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let val = 0.5 * (dot(&v[i], &w[j]) + dot(&v[j], &w[i]));
                t[(i, j)] = val;
                t[(j, i)] = val;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let nwant = keep.min(m);
        let mut ritz = Vec::with_capacity(nwant);
        let mut images = Vec::with_capacity(nwant);
        let mut theta = Vec::with_capacity(nwant);
        for &c in &order[..nwant] {
            let col = eig.eigenvectors.column(c);
            ritz.push(combine(&v, col.iter().copied()));
            images.push(combine(&w, col.iter().copied()));
            theta.push(eig.eigenvalues[c]);
        }
        let res: Vec<f64> = ritz
            .iter()
            .map(|u| {
                let x: Vec<f64> = u.iter().zip(sqrt_d).map(|(a, r)| a / r).collect();
                residual(s, d, &x).1
            })
            .collect();
        let worst = res[..k.min(nwant)].iter().copied().fold(0.0, f64::max);
        if nwant >= k {
            if worst <= opts.tol {
                return Ok(ritz.into_iter().take(k).collect());
            }
            if worst < 0.5 * best {
                best = worst;
                stalled = 0;
            } else {
                stalled += 1;
            }
            last = Some(ritz[..k].to_vec());
            if stalled >= 20 && worst <= opts.accept_tol {
                return Ok(ritz.into_iter().take(k).collect());
            }
        }
        if m == n {
            // the subspace is the whole space: Ritz pairs are exact
            return Ok(ritz.into_iter().take(k).collect());
        }

        let mut directions: Vec<Vec<f64>> = Vec::new();
        for i in 0..nwant {
            if directions.len() == block {
                break;
            }
            if res[i] > opts.tol || i >= k {
                let mut r = images[i].clone();
                axpy(&mut r, -theta[i], &ritz[i]);
                directions.push(r);
            }
        }
        if m + directions.len().max(1) > max_dim {
            v = ritz;
            w = images;
        }
        for r in directions {
            let mut basis = v.clone();
            basis.extend(fresh.iter().cloned());
            if let Some(q) = orthonormalize(&basis, r) {
                fresh.push(q);
            }
        }
        while fresh.is_empty() && v.len() < n {
            let mut basis = v.clone();
            basis.extend(fresh.iter().cloned());
            if let Some(q) = orthonormalize(&basis, random_vector(&mut rng)) {
                fresh.push(q);
            }
        }
    }
    last.ok_or(Error::Convergence { iterations: opts.max_iterations, residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn sparse_path_matches_dense_path() {
        let n = 400;
        let s = path_laplacian(n);
        let d: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i as f64) * 0.7).sin()).collect();
        let dense_opts = EigenOptions { dense_limit: n, ..Default::default() };
        let sparse_opts = EigenOptions { dense_limit: 0, ..Default::default() };
        let a = generalized_eigenpairs(&s, &d, 6, &dense_opts).unwrap();
        let b = generalized_eigenpairs(&s, &d, 6, &sparse_opts).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p.lambda - q.lambda).abs() <= 1e-9 * p.lambda.max(1e-3), "{} {}", p.lambda, q.lambda);
            assert!(q.residual <= 1e-8);
            let ip: f64 = (0..n).map(|i| d[i] * p.field[i] * q.field[i]).sum::<f64>() / d.iter().sum::<f64>();
            assert!((ip.abs() - 1.0).abs() < 1e-6, "{ip}");
        }
    }

    #[test]
    fn path_graph_closed_form() {
        // eigenvalues of the path Laplacian: 2 - 2 cos(pi j / n)
        let n = 500;
        let s = path_laplacian(n);
        let d = vec![1.0; n];
        let pairs = generalized_eigenpairs(&s, &d, 5, &EigenOptions { dense_limit: 0, ..Default::default() }).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * j as f64 / n as f64).cos();
            assert!((p.lambda - exact).abs() <= 1e-10, "{j}: {} vs {exact}", p.lambda);
        }
    }

    #[test]
    fn deterministic_output() {
        let s = path_laplacian(350);
        let d = vec![0.5; 350];
        let opts = EigenOptions::default();
        let a = generalized_eigenpairs(&s, &d, 4, &opts).unwrap();
        let b = generalized_eigenpairs(&s, &d, 4, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_requests() {
        let s = path_laplacian(5);
        assert!(generalized_eigenpairs(&s, &[1.0; 5], 0, &EigenOptions::default()).is_err());
        assert!(generalized_eigenpairs(&s, &[1.0; 5], 6, &EigenOptions::default()).is_err());
        assert!(generalized_eigenpairs(&s, &[1.0; 4], 1, &EigenOptions::default()).is_err());
    }
}
