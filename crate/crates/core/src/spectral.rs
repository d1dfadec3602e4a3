//! Lowest modes of a symmetric pencil `A v = λ B v` (A positive
//! semi-definite, B positive definite) by shifted subspace iteration with
//! Rayleigh–Ritz extraction.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DeformError, Result};
use crate::sparse::{Csr, SparseLu};

#[derive(Clone, Debug)]
pub struct Modes {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors as columns.
    pub vectors: Mat<f64>,
    pub iterations: usize,
}

/// Options for [`lowest_modes`].
#[derive(Clone, Copy, Debug)]
pub struct ModeOptions {
    pub count: usize,
    /// Extra block vectors beyond `count`.
    pub guard: usize,
    /// Relative shift `s` in `A + s·scale·B`; scale is the largest diagonal ratio.
    pub shift: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions { count: 4, guard: 4, shift: 1e-10, max_iter: 200, tol: 1e-11, seed: 7 }
    }
}

fn quad(a: &Csr, v: &Mat<f64>) -> Mat<f64> {
    let av = a.mul_dense(v.as_ref());
    v.transpose() * av
}

/// Rayleigh–Ritz on the span of `w`: returns B-orthonormal Ritz vectors and values.
fn ritz(a: &Csr, b: &Csr, w: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let q = w.qr().compute_thin_Q();
    let ah = quad(a, &q);
    let bh = quad(b, &q);
    let m = q.ncols();
    let ah = Mat::from_fn(m, m, |i, j| 0.5 * (ah[(i, j)] + ah[(j, i)]));
    let bh = Mat::from_fn(m, m, |i, j| 0.5 * (bh[(i, j)] + bh[(j, i)]));
    let llt = bh.llt(Side::Lower).map_err(|e| DeformError::Numeric(format!("Ritz mass matrix not definite: {e:?}")))?;
    let l = llt.L().to_owned();
    // C = L^{-1} Ah L^{-T}
    let mut c = ah.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), faer::Par::Seq);
    let mut ct = c.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), ct.as_mut(), faer::Par::Seq);
    let c = Mat::from_fn(m, m, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(|e| DeformError::Numeric(format!("small eigenproblem: {e:?}")))?;
    let vals: Vec<f64> = (0..m).map(|i| evd.S().column_vector()[i]).collect();
    let mut y = evd.U().to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), y.as_mut(), faer::Par::Seq);
    Ok((vals, &q * &y))
}

/// Lowest `count` eigenpairs of `A v = λ B v`.
pub fn lowest_modes(a: &Csr, b: &Csr, opts: ModeOptions) -> Result<Modes> {
    let n = a.nrows;
    let m = (opts.count + opts.guard).min(n);
    if m == 0 {
        return Ok(Modes { values: vec![], vectors: Mat::zeros(n, 0), iterations: 0 });
    }
    let diag = |c: &Csr, i: usize| {
        let (cols, vals) = c.row(i);
        cols.iter().zip(vals).find(|(j, _)| **j == i).map(|(_, v)| *v).unwrap_or(0.0)
    };
    let scale = (0..n).map(|i| diag(a, i) / diag(b, i).max(f64::MIN_POSITIVE)).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let sb = b.scale_rows(&vec![opts.shift * scale; n]);
    let shifted = add(a, &sb);
    let lu = SparseLu::new(&shifted)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = Mat::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let mut prev = vec![f64::INFINITY; m];
    let mut vals = prev.clone();
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let bv = b.mul_dense(v.as_ref());
        let w = lu.solve_mat(bv.as_ref());
        let (lam, vecs) = ritz(a, b, &w)?;
        vals = lam;
        v = vecs;
        let top = vals[..opts.count.min(m)].iter().cloned().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
        let change = (0..opts.count.min(m)).map(|k| (vals[k] - prev[k]).abs()).fold(0.0, f64::max);
        if change <= opts.tol * top {
            break;
        }
        prev = vals.clone();
    }
    let keep = opts.count.min(m);
    let vectors = Mat::from_fn(n, keep, |i, j| v[(i, j)]);
    Ok(Modes { values: vals[..keep].to_vec(), vectors, iterations: it })
}

/// Entrywise sum of two matrices of the same shape.
pub fn add(a: &Csr, b: &Csr) -> Csr {
    let rows: Vec<Vec<(usize, f64)>> = (0..a.nrows)
        .map(|i| {
            let (ca, va) = a.row(i);
            let (cb, vb) = b.row(i);
            ca.iter().zip(va).chain(cb.iter().zip(vb)).map(|(&j, &x)| (j, x)).collect()
        })
        .collect();
    Csr::from_rows(a.ncols, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_1d_modes() {
        // -u'' on (0,1) with Dirichlet ends, mass = h·I
        let n = 60;
        let h = 1.0 / (n + 1) as f64;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 / h));
            if i > 0 {
                t.push((i, i - 1, -1.0 / h));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0 / h));
            }
        }
        let a = Csr::from_triplets(n, n, &t);
        let b = Csr::diag(&vec![h; n]);
        let modes = lowest_modes(&a, &b, ModeOptions { count: 3, ..Default::default() }).unwrap();
        for (k, lam) in modes.values.iter().enumerate() {
            let kk = (k + 1) as f64;
            let exact = (2.0 / h * (1.0 - (kk * std::f64::consts::PI * h).cos())) / h;
            assert!((lam / exact - 1.0).abs() < 1e-9, "{lam} vs {exact}");
        }
    }

    #[test]
    fn singular_pencil_has_zero_mode() {
        // graph Laplacian of a path has the constant vector in its kernel
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = Csr::from_triplets(n, n, &t);
        let b = Csr::diag(&vec![1.0; n]);
        let modes = lowest_modes(&a, &b, ModeOptions { count: 2, ..Default::default() }).unwrap();
        assert!(modes.values[0].abs() < 1e-12);
        assert!(modes.values[1] > 1e-3);
    }
}
