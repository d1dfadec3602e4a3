//! Node-wise tensor storage and the small dense helpers shared by the
//! curvature and operator code.

use crate::mesh::{DomainGrid, Role};

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

pub fn identity3(dim: usize) -> Mat3 {
    let mut m = ZERO3;
    for i in 0..dim {
        m[i][i] = 1.0;
    }
    m
}

/// Number of independent components of a symmetric `dim x dim` tensor.
pub fn n_comp(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Index pairs `(i, j)` with `i <= j` in storage order.
pub fn comp_pairs(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &[(0, 0), (0, 1), (1, 1)]
    } else {
        &[(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    }
}

/// Coefficient of component `(k, l)` in the functional `a -> sum_ij x_ij a_ij`
/// for a symmetric argument.
#[inline]
pub fn pair_coeff(x: &Mat3, k: usize, l: usize) -> f64 {
    if k == l {
        x[k][k]
    } else {
        x[k][l] + x[l][k]
    }
}

pub fn det(m: &Mat3, dim: usize) -> f64 {
    if dim == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else if dim == 1 {
        m[0][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

pub fn inverse(m: &Mat3, dim: usize) -> Mat3 {
    let d = det(m, dim);
    let mut r = ZERO3;
    match dim {
        1 => r[0][0] = 1.0 / m[0][0],
        2 => {
            r[0][0] = m[1][1] / d;
            r[1][1] = m[0][0] / d;
            r[0][1] = -m[0][1] / d;
            r[1][0] = -m[1][0] / d;
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                    let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                    r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / d;
                }
            }
        }
    }
    r
}

/// Positive definiteness by leading principal minors.
pub fn is_spd(m: &Mat3, dim: usize) -> bool {
    if !(m[0][0] > 0.0) {
        return false;
    }
    let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(m2 > 0.0) {
        return false;
    }
    dim == 2 || det(m, 3) > 0.0
}

pub fn matmul(a: &Mat3, b: &Mat3, dim: usize) -> Mat3 {
    let mut r = ZERO3;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += a[i][k] * b[k][j];
            }
            r[i][j] = s;
        }
    }
    r
}

/// `ginv * m * ginv`, i.e. both indices raised.
pub fn raise2(ginv: &Mat3, m: &Mat3, dim: usize) -> Mat3 {
    matmul(&matmul(ginv, m, dim), ginv, dim)
}

/// `<a, b>_g = g^{ik} g^{jl} a_ij b_kl`.
pub fn inner(ginv: &Mat3, a: &Mat3, b: &Mat3, dim: usize) -> f64 {
    let ar = raise2(ginv, a, dim);
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += ar[i][j] * b[i][j];
        }
    }
    s
}

pub fn trace_with(ginv: &Mat3, a: &Mat3, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += ginv[i][j] * a[i][j];
        }
    }
    s
}

/// Symmetric 2-tensor per node with a support mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    pub dim: usize,
    pub data: Vec<Mat3>,
    pub mask: Vec<bool>,
}

impl SymTensorField {
    pub fn zeros(grid: &DomainGrid) -> Self {
        SymTensorField { dim: grid.dim, data: vec![ZERO3; grid.len()], mask: vec![true; grid.len()] }
    }

    /// Field from a closure; symmetrized from the upper triangle.
    pub fn from_fn(grid: &DomainGrid, f: impl Fn([f64; 3]) -> Mat3) -> Self {
        let dim = grid.dim;
        let data = (0..grid.len())
            .map(|p| {
                let m = f(grid.coord(p));
                let mut s = ZERO3;
                for i in 0..dim {
                    for j in i..dim {
                        s[i][j] = m[i][j];
                        s[j][i] = m[i][j];
                    }
                }
                s
            })
            .collect();
        SymTensorField { dim, data, mask: vec![true; grid.len()] }
    }

    /// Mask excluding Σ′ and Γ, the support allowed for deformations.
    pub fn deformation_mask(grid: &DomainGrid) -> Vec<bool> {
        grid.roles().iter().map(|r| matches!(r, Role::Interior | Role::Sigma)).collect()
    }

    /// Zero every node outside the mask.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        for (m, keep) in self.data.iter_mut().zip(&mask) {
            if !keep {
                *m = ZERO3;
            }
        }
        self.mask = mask;
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for m in out.data.iter_mut() {
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
        }
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, o) in out.data.iter_mut().zip(&other.data) {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += s * o[i][j];
                }
            }
        }
        out
    }

    /// Flatten to `node * n_comp + c` ordering.
    pub fn to_vec(&self) -> Vec<f64> {
        let pairs = comp_pairs(self.dim);
        let mut v = Vec::with_capacity(self.data.len() * pairs.len());
        for m in &self.data {
            for &(i, j) in pairs {
                v.push(m[i][j]);
            }
        }
        v
    }

    pub fn from_vec(dim: usize, v: &[f64]) -> Self {
        let pairs = comp_pairs(dim);
        let nc = pairs.len();
        let data = v
            .chunks(nc)
            .map(|c| {
                let mut m = ZERO3;
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    m[i][j] = c[k];
                    m[j][i] = c[k];
                }
                m
            })
            .collect::<Vec<_>>();
        let n = data.len();
        SymTensorField { dim, data, mask: vec![true; n] }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|m| m.iter().flatten()).fold(0.0, |a, &b| a.max(b.abs()))
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = [[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.1]];
        for dim in [2, 3] {
            let r = matmul(&m, &inverse(&m, dim), dim);
            for i in 0..dim {
                for j in 0..dim {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((r[i][j] - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn pair_coeff_matches_contraction() {
        let x = [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [0.0; 3]];
        let a = [[0.5, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0; 3]];
        let full: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| x[i][j] * a[i][j]).sum();
        let by_pairs: f64 = comp_pairs(2).iter().map(|&(k, l)| pair_coeff(&x, k, l) * a[k][l]).sum();
        assert!((full - by_pairs).abs() < 1e-15);
    }

    #[test]
    fn vec_roundtrip() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let t = SymTensorField::from_fn(&g, |x| [[x[0], x[1], 0.0], [0.0, x[0] * x[1], 0.0], [0.0; 3]]);
        let back = SymTensorField::from_vec(2, &t.to_vec());
        assert_eq!(back.data, t.data);
    }

    #[test]
    fn spd_detection() {
        assert!(is_spd(&identity3(3), 3));
        assert!(!is_spd(&[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 2));
    }
}
