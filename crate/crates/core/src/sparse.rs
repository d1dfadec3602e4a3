//! Compressed sparse rows plus an equilibrated sparse LU with iterative
//! refinement on top of faer.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef};

use crate::error::{DeformError, Result};
use crate::operators::SparseRow;

/// Pick the dense/sparse kernel parallelism from `DEFORM_THREADS` (default 1,
/// which keeps every result bit-reproducible).
pub fn init_parallelism() -> usize {
    let threads = std::env::var("DEFORM_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(1).max(1);
    if threads == 1 {
        faer::set_global_parallelism(faer::Par::Seq);
    } else {
        faer::set_global_parallelism(faer::Par::rayon(threads));
    }
    threads
}

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Rows as `(column, value)` lists; duplicates are summed, columns sorted.
    pub fn from_rows(ncols: usize, rows: &[SparseRow]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for r in rows {
            buf.clear();
            buf.extend_from_slice(r);
            buf.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < buf.len() {
                let c = buf[k].0;
                let mut v = 0.0;
                while k < buf.len() && buf[k].0 == c {
                    v += buf[k].1;
                    k += 1;
                }
                debug_assert!(c < ncols);
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Csr { nrows: rows.len(), ncols, indptr, indices, data }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, t: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<SparseRow> = vec![Vec::new(); nrows];
        for &(i, j, v) in t {
            rows[i].push((j, v));
        }
        Self::from_rows(ncols, &rows)
    }

    pub fn diag(d: &[f64]) -> Self {
        let rows: Vec<SparseRow> = d.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect();
        Self::from_rows(d.len(), &rows)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// Number of structurally nonzero entries in row `i`.
    pub fn row_support(&self, i: usize) -> usize {
        self.row(i).1.iter().filter(|v| **v != 0.0).count()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut rows: Vec<SparseRow> = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                rows[j].push((i, a));
            }
        }
        Csr::from_rows(self.nrows, &rows)
    }

    /// Sparse product `self * b`.
    pub fn matmul(&self, b: &Csr) -> Csr {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut seen = vec![usize::MAX; b.ncols];
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let mut cols = Vec::new();
            let (c, v) = self.row(i);
            for (&k, &a) in c.iter().zip(v) {
                let (bc, bv) = b.row(k);
                for (&j, &w) in bc.iter().zip(bv) {
                    if seen[j] != i {
                        seen[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * w;
                }
            }
            rows.push(cols.iter().map(|&j| (j, acc[j])).collect::<SparseRow>());
        }
        Csr::from_rows(b.ncols, &rows)
    }

    pub fn scale_rows(&self, d: &[f64]) -> Csr {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.data[k] *= d[i];
            }
        }
        out
    }

    pub fn scale_cols(&self, d: &[f64]) -> Csr {
        let mut out = self.clone();
        for (v, &j) in out.data.iter_mut().zip(&self.indices) {
            *v *= d[j];
        }
        out
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            map[j] = k;
        }
        let out: Vec<SparseRow> = rows
            .iter()
            .map(|&i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).filter(|(j, _)| map[**j] != usize::MAX).map(|(&j, &a)| (map[j], a)).collect()
            })
            .collect();
        Csr::from_rows(cols.len(), &out)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] += a;
            }
        }
        m
    }

    /// `self * m` for a dense right-hand side.
    pub fn mul_dense(&self, m: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(self.ncols, m.nrows());
        let mut out = Mat::zeros(self.nrows, m.ncols());
        for col in 0..m.ncols() {
            for i in 0..self.nrows {
                let (c, v) = self.row(i);
                let mut s = 0.0;
                for (&j, &a) in c.iter().zip(v) {
                    s += a * m[(j, col)];
                }
                out[(i, col)] = s;
            }
        }
        out
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> = (0..self.nrows)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(move |(&j, &a)| Triplet::new(i, j, a))
            })
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| DeformError::Numeric(format!("sparse conversion: {e:?}")))
    }
}

/// LU of `R A C` with row/column equilibration, plus two steps of iterative
/// refinement against the original matrix on every solve.
pub struct SparseLu {
    a: Csr,
    r: Vec<f64>,
    c: Vec<f64>,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SparseLu(n = {}, nnz = {})", self.a.nrows, self.a.nnz())
    }
}

impl SparseLu {
    pub fn new(a: &Csr) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(DeformError::Numeric(format!("LU of a {}x{} matrix", a.nrows, a.ncols)));
        }
        let n = a.nrows;
        let mut r = vec![0.0; n];
        for (i, ri) in r.iter_mut().enumerate() {
            let m = a.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return Err(DeformError::Numeric(format!("row {i} is identically zero")));
            }
            *ri = 1.0 / m;
        }
        let ar = a.scale_rows(&r);
        let mut cmax = vec![0.0f64; n];
        for (&j, v) in ar.indices.iter().zip(&ar.data) {
            cmax[j] = cmax[j].max(v.abs());
        }
        if let Some(j) = cmax.iter().position(|&m| m == 0.0) {
            return Err(DeformError::Numeric(format!("column {j} is identically zero")));
        }
        let c: Vec<f64> = cmax.iter().map(|m| 1.0 / m).collect();
        let scaled = ar.scale_cols(&c);
        let lu = scaled.to_faer()?.sp_lu().map_err(|e| DeformError::Numeric(format!("sparse LU: {e:?}")))?;
        Ok(SparseLu { a: a.clone(), r, c, lu })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows
    }

    fn raw_solve(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let n = b.len();
        let (pre, post) = if transpose { (&self.c, &self.r) } else { (&self.r, &self.c) };
        let mut m = Mat::from_fn(n, 1, |i, _| b[i] * pre[i]);
        if transpose {
            self.lu.solve_transpose_in_place(m.as_mut());
        } else {
            self.lu.solve_in_place(m.as_mut());
        }
        (0..n).map(|i| m[(i, 0)] * post[i]).collect()
    }

    fn refined(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let mut x = self.raw_solve(b, transpose);
        for _ in 0..2 {
            let ax = if transpose { self.a.matvec_t(&x) } else { self.a.matvec(&x) };
            let res: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            if res.iter().all(|v| *v == 0.0) {
                break;
            }
            let dx = self.raw_solve(&res, transpose);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.refined(b, false)
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        self.refined(b, true)
    }

    /// Column-by-column solve of `A X = B`.
    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        let mut out = Mat::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col: Vec<f64> = (0..b.nrows()).map(|i| b[(i, j)]).collect();
            let x = self.solve(&col);
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Csr {
        Csr::from_triplets(3, 3, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0), (1, 2, -1.0), (0, 0, 1.0)])
    }

    #[test]
    fn duplicates_merge() {
        let a = sample();
        assert_eq!(a.row(0), (&[0usize, 1][..], &[5.0, 1.0][..]));
    }

    #[test]
    fn transpose_and_matvec_agree() {
        let a = sample();
        let x = [1.0, -2.0, 0.5];
        assert_eq!(a.matvec_t(&x), a.transpose().matvec(&x));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = sample();
        let b = a.transpose();
        let d = a.matmul(&b).to_dense();
        let e = a.to_dense() * b.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((d[(i, j)] - e[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn select_submatrix() {
        let a = sample();
        let s = a.select(&[1, 2], &[1, 2]);
        assert_eq!(s.to_dense(), Mat::from_fn(2, 2, |i, j| [[3.0, -1.0], [0.0, 2.0]][i][j]));
    }

    #[test]
    fn lu_solves_badly_scaled_system() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, 1e-12), (0, 1, 2e-12), (1, 0, 3.0), (1, 1, 1.0), (2, 2, 1e8), (2, 0, 1e7)]);
        let lu = SparseLu::new(&a).unwrap();
        let x = [1.0, -1.0, 2.0];
        let b = a.matvec(&x);
        let y = lu.solve(&b);
        for k in 0..3 {
            assert!((y[k] - x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_solve() {
        let a = Csr::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 3.0), (1, 1, -1.0), (2, 2, 4.0), (2, 0, 1.0), (0, 2, 0.5)]);
        let lu = SparseLu::new(&a).unwrap();
        let x = [1.0, -1.0, 2.0];
        let y = lu.solve_t(&a.matvec_t(&x));
        for k in 0..3 {
            assert!((y[k] - x[k]).abs() < 1e-14, "{y:?}");
        }
    }

    #[test]
    fn zero_row_is_reported() {
        let a = Csr::from_triplets(2, 2, &[(0, 0, 1.0)]);
        assert!(matches!(SparseLu::new(&a), Err(DeformError::Numeric(_))));
    }

    proptest! {
        #[test]
        fn lu_roundtrip(vals in proptest::collection::vec(-1.0f64..1.0, 16), x in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let mut t = Vec::new();
            for i in 0..4 {
                for j in 0..4 {
                    let v = vals[4 * i + j] + if i == j { 5.0 } else { 0.0 };
                    t.push((i, j, v));
                }
            }
            let a = Csr::from_triplets(4, 4, &t);
            let lu = SparseLu::new(&a).unwrap();
            let y = lu.solve(&a.matvec(&x));
            for k in 0..4 {
                prop_assert!((y[k] - x[k]).abs() < 1e-12);
            }
        }
    }
}
