//! Linearized curvature operators at a fixed metric: `L`, `L*`, `Ḣ`, `B = 2Ḣ`,
//! `Φ*` and the Green's-formula residual.
//!
//! Every operator is produced row by row as a sparse linear combination of
//! node values, so the field-level `apply_*` functions and the assembled
//! matrices share one code path.

use crate::fields::{comp_pairs, inner, n_comp, pair_coeff, raise2, trace_with, Mat3, SymTensorField, ZERO3};
use crate::mesh::{DomainGrid, Role};
use crate::tensor::CurvatureData;

pub type SparseRow = Vec<(usize, f64)>;

/// How derivatives of a scalar are taken at Σ nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarBc {
    /// One-sided stencils, no constraint.
    OneSided,
    /// `u_ν = 0` built in through a reflected ghost layer.
    NeumannGhost,
}

fn push_scaled(row: &mut SparseRow, st: &[(usize, f64)], s: f64) {
    if s != 0.0 {
        row.extend(st.iter().map(|&(q, w)| (q, s * w)));
    }
}

/// Tangential coefficients `c_t = g^{nt} / g^{nn}` of the oblique ghost relation.
fn ghost_coeffs(grid: &DomainGrid, cd: &CurvatureData, q: usize) -> [f64; 3] {
    let n = grid.sigma.axis;
    let gi = &cd.nodes[q].ginv;
    let mut c = [0.0; 3];
    for t in grid.tangential_axes() {
        c[t] = gi[n][t] / gi[n][n];
    }
    c
}

/// Stencil of `∂_a u` at `p`.
pub fn scalar_d1(grid: &DomainGrid, cd: &CurvatureData, p: usize, a: usize, bc: ScalarBc) -> SparseRow {
    let n = grid.sigma.axis;
    if bc == ScalarBc::NeumannGhost && grid.role(p) == Role::Sigma && a == n {
        let c = ghost_coeffs(grid, cd, p);
        let mut row = SparseRow::new();
        for t in grid.tangential_axes() {
            let st: SparseRow = grid.d1(p, t).iter().collect();
            push_scaled(&mut row, &st, -c[t]);
        }
        return row;
    }
    grid.d1(p, a).iter().collect()
}

/// Stencil of `∂_a ∂_b u` at `p`.
pub fn scalar_d2(grid: &DomainGrid, cd: &CurvatureData, p: usize, a: usize, b: usize, bc: ScalarBc) -> SparseRow {
    let n = grid.sigma.axis;
    if bc == ScalarBc::NeumannGhost && grid.role(p) == Role::Sigma && (a == n || b == n) {
        let hn = grid.h[n];
        let mut row = SparseRow::new();
        if a == n && b == n {
            let up = grid.shift(p, n, 1).unwrap();
            row.push((up, 2.0 / (hn * hn)));
            row.push((p, -2.0 / (hn * hn)));
            let c = ghost_coeffs(grid, cd, p);
            for t in grid.tangential_axes() {
                let st: SparseRow = grid.d1(p, t).iter().collect();
                push_scaled(&mut row, &st, 2.0 * c[t] / hn);
            }
        } else {
            let t = if a == n { b } else { a };
            for (q, w) in grid.d1(p, t).iter() {
                let c = ghost_coeffs(grid, cd, q);
                for t2 in grid.tangential_axes() {
                    let st: SparseRow = grid.d1(q, t2).iter().collect();
                    push_scaled(&mut row, &st, -w * c[t2]);
                }
            }
        }
        return row;
    }
    grid.d2(p, a, b).iter().collect()
}

/// Rows of `(L* u)_ij` at node `p`, one per stored component, over node columns.
pub fn lstar_rows(grid: &DomainGrid, cd: &CurvatureData, p: usize, bc: ScalarBc) -> Vec<SparseRow> {
    let dim = grid.dim;
    let geo = &cd.nodes[p];
    let d1: Vec<SparseRow> = (0..dim).map(|k| scalar_d1(grid, cd, p, k, bc)).collect();
    let mut d2 = vec![vec![SparseRow::new(); dim]; dim];
    for k in 0..dim {
        for l in k..dim {
            d2[k][l] = scalar_d2(grid, cd, p, k, l, bc);
        }
    }
    comp_pairs(dim)
        .iter()
        .map(|&(i, j)| {
            let mut row = vec![(p, -geo.ric[i][j])];
            for m in 0..dim {
                let mut c1 = -geo.chr[m][i][j];
                for k in 0..dim {
                    for l in 0..dim {
                        c1 += geo.g[i][j] * geo.ginv[k][l] * geo.chr[m][k][l];
                    }
                }
                push_scaled(&mut row, &d1[m], c1);
            }
            for k in 0..dim {
                for l in k..dim {
                    let mult = if k == l { 1.0 } else { 2.0 };
                    let mut c2 = -mult * geo.g[i][j] * geo.ginv[k][l];
                    if (k, l) == (i, j) {
                        c2 += 1.0;
                    }
                    push_scaled(&mut row, &d2[k][l], c2);
                }
            }
            row
        })
        .collect()
}

/// Adds the functional `a(q) -> s * sum_ij x_ij a_ij(q)` to a tensor-column row.
fn push_functional(row: &mut SparseRow, dim: usize, q: usize, x: &Mat3, s: f64) {
    if s == 0.0 {
        return;
    }
    let nc = n_comp(dim);
    for (c, &(k, l)) in comp_pairs(dim).iter().enumerate() {
        let v = s * pair_coeff(x, k, l);
        if v != 0.0 {
            row.push((q * nc + c, v));
        }
    }
}

/// Row of `L(a)` at node `p` over tensor columns `node * n_comp + c`.
///
/// Uses `Δ_g T = g^{ij}(∂_ij T - Γ^k_ij ∂_k T)` with `T = tr_g a` and
/// `div div a = |g|^{-1/2} ∂_ij (|g|^{1/2} a^{ij}) + Γ^i_jk ∂_i a^{jk} + |g|^{-1/2} ∂_i(|g|^{1/2} Γ^i_jk) a^{jk}`.
pub fn l_row(grid: &DomainGrid, cd: &CurvatureData, p: usize) -> SparseRow {
    let dim = grid.dim;
    let gp = &cd.nodes[p];
    let mut row = SparseRow::new();
    for i in 0..dim {
        for j in i..dim {
            let mult = if i == j { 1.0 } else { 2.0 };
            for (q, w) in grid.d2(p, i, j).iter() {
                let gq = &cd.nodes[q];
                push_functional(&mut row, dim, q, &gq.ginv, -mult * gp.ginv[i][j] * w);
                let mut x = ZERO3;
                for k in 0..dim {
                    for l in 0..dim {
                        x[k][l] = gq.ginv[i][k] * gq.ginv[j][l];
                    }
                }
                push_functional(&mut row, dim, q, &x, mult * w * gq.sqrt_det / gp.sqrt_det);
            }
        }
    }
    for k in 0..dim {
        let mut beta = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                beta += gp.ginv[i][j] * gp.chr[k][i][j];
            }
        }
        for (q, w) in grid.d1(p, k).iter() {
            let gq = &cd.nodes[q];
            push_functional(&mut row, dim, q, &gq.ginv, beta * w);
            // Γ is frozen at p so no stencil acts on the stored Christoffel field
            let x = raise2(&gq.ginv, &gp.chr[k], dim);
            push_functional(&mut row, dim, q, &x, w);
        }
    }
    push_functional(&mut row, dim, p, &raise2(&gp.ginv, &gp.div_chr, dim), 1.0);
    let ric_up = raise2(&gp.ginv, &gp.ric, dim);
    push_functional(&mut row, dim, p, &ric_up, -1.0);
    row
}

/// Row of `Ḣ(a)` at a Σ node.
///
/// The form `½ ν(tr_∂ a) - div_∂ a(ν, ·) - ½ a(ν, ν) H` holds when ν is
/// extended by normal geodesics. On a grid the extension is by coordinate
/// level sets, so the row uses the extension-free equivalent
/// `½ (ν(tr_g a) - (div_g a)(ν)) - ½ div_∂ a(ν, ·) - ½ <a, h>_ĝ`.
pub fn hdot_row(grid: &DomainGrid, cd: &CurvatureData, p: usize) -> SparseRow {
    let dim = grid.dim;
    let b = cd.bdry(p);
    let gp = &cd.nodes[p];
    let mut row = SparseRow::new();
    // ½ ν(tr_g a)
    for gam in 0..dim {
        if b.nu[gam] == 0.0 {
            continue;
        }
        for (q, w) in grid.d1(p, gam).iter() {
            push_functional(&mut row, dim, q, &cd.nodes[q].ginv, 0.5 * b.nu[gam] * w);
        }
    }
    // -½ ν^β g^{αγ} ∇_γ a_{αβ}
    for gam in 0..dim {
        let mut x = ZERO3;
        for al in 0..dim {
            for be in 0..dim {
                x[al][be] = gp.ginv[al][gam] * b.nu[be];
            }
        }
        for (q, w) in grid.d1(p, gam).iter() {
            push_functional(&mut row, dim, q, &x, -0.5 * w);
        }
    }
    let mut chr_part = ZERO3;
    for al in 0..dim {
        for be in 0..dim {
            for gam in 0..dim {
                let c = 0.5 * b.nu[be] * gp.ginv[al][gam];
                if c == 0.0 {
                    continue;
                }
                for mu in 0..dim {
                    chr_part[mu][be] += c * gp.chr[mu][gam][al];
                    chr_part[al][mu] += c * gp.chr[mu][gam][be];
                }
            }
        }
    }
    push_functional(&mut row, dim, p, &chr_part, 1.0);
    // -½ div_∂ a(ν, ·)
    for t in grid.tangential_axes() {
        for (q, w) in grid.d1(p, t).iter() {
            let bq = cd.bdry(q);
            let mut x = ZERO3;
            for (al, xr) in x.iter_mut().enumerate().take(dim) {
                for (j, v) in xr.iter_mut().enumerate().take(dim) {
                    *v = bq.sqrt_det_hat * bq.ghat_inv[t][j] * bq.nu[al];
                }
            }
            push_functional(&mut row, dim, q, &x, -0.5 * w / b.sqrt_det_hat);
        }
    }
    push_functional(&mut row, dim, p, &raise2(&b.ghat_inv, &b.h, dim), -0.5);
    row
}

/// Row of `u_ν` at a face node with one-sided stencils.
pub fn normal_derivative_row(grid: &DomainGrid, cd: &CurvatureData, p: usize) -> SparseRow {
    let b = cd.bdry(p);
    let mut row = SparseRow::new();
    for a in 0..grid.dim {
        let st: SparseRow = grid.d1(p, a).iter().collect();
        push_scaled(&mut row, &st, b.nu[a]);
    }
    row
}

/// Rows of `u_ν ĝ_ij - u h_ij` at a Σ node, one per stored component.
pub fn phi_sigma_rows(grid: &DomainGrid, cd: &CurvatureData, p: usize) -> Vec<SparseRow> {
    let b = cd.bdry(p);
    let un = normal_derivative_row(grid, cd, p);
    comp_pairs(grid.dim)
        .iter()
        .map(|&(i, j)| {
            let mut row = SparseRow::new();
            push_scaled(&mut row, &un, b.ghat[i][j]);
            if b.h[i][j] != 0.0 {
                row.push((p, -b.h[i][j]));
            }
            row
        })
        .collect()
}

fn eval(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(q, w)| w * v[q]).sum()
}

/// `L(a)` at every node; meaningful on interior and Σ nodes.
pub fn apply_l(grid: &DomainGrid, cd: &CurvatureData, a: &SymTensorField) -> Vec<f64> {
    let v = a.to_vec();
    (0..grid.len()).map(|p| eval(&l_row(grid, cd, p), &v)).collect()
}

/// `L* u` at every node.
pub fn apply_lstar(grid: &DomainGrid, cd: &CurvatureData, u: &[f64]) -> SymTensorField {
    apply_lstar_bc(grid, cd, u, ScalarBc::OneSided)
}

pub fn apply_lstar_bc(grid: &DomainGrid, cd: &CurvatureData, u: &[f64], bc: ScalarBc) -> SymTensorField {
    let dim = grid.dim;
    let mut out = SymTensorField::zeros(grid);
    for p in 0..grid.len() {
        for (row, &(i, j)) in lstar_rows(grid, cd, p, bc).iter().zip(comp_pairs(dim)) {
            let v = eval(row, u);
            out.data[p][i][j] = v;
            out.data[p][j][i] = v;
        }
    }
    out
}

/// `Ḣ(a)` on Σ nodes, zero elsewhere.
pub fn apply_hdot(grid: &DomainGrid, cd: &CurvatureData, a: &SymTensorField) -> Vec<f64> {
    let v = a.to_vec();
    (0..grid.len())
        .map(|p| if grid.role(p) == Role::Sigma { eval(&hdot_row(grid, cd, p), &v) } else { 0.0 })
        .collect()
}

/// `B(a) = 2 Ḣ(a)`.
pub fn apply_b(grid: &DomainGrid, cd: &CurvatureData, a: &SymTensorField) -> Vec<f64> {
    apply_hdot(grid, cd, a).into_iter().map(|v| 2.0 * v).collect()
}

/// `Φ* u = (L* u, u_ν ĝ - u h)`; the boundary part is zero off Σ.
pub fn apply_phi_star(grid: &DomainGrid, cd: &CurvatureData, u: &[f64]) -> (SymTensorField, SymTensorField) {
    let interior = apply_lstar(grid, cd, u);
    let mut bdry = SymTensorField::zeros(grid);
    for p in grid.nodes_with(Role::Sigma) {
        for (row, &(i, j)) in phi_sigma_rows(grid, cd, p).iter().zip(comp_pairs(grid.dim)) {
            let v = eval(row, u);
            bdry.data[p][i][j] = v;
            bdry.data[p][j][i] = v;
        }
    }
    (interior, bdry)
}

/// `u_ν` on Σ nodes, zero elsewhere.
pub fn normal_derivative(grid: &DomainGrid, cd: &CurvatureData, u: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|p| if grid.role(p) == Role::Sigma { eval(&normal_derivative_row(grid, cd, p), u) } else { 0.0 })
        .collect()
}

/// Both sides of the integration-by-parts identity between `(L, B)` and `L*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreensTerms {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Quadrature is end-corrected to fourth order so the residual measures the
/// operators rather than the trapezoid endpoint error.
///
/// `∫L(a)u + ∫_Σ 2Ḣ(a)u` against `∫<a, L*u> + ∫_Σ (-u<a, h> + u_ν tr_∂ a)`.
pub fn greens_residual(grid: &DomainGrid, cd: &CurvatureData, a: &SymTensorField, u: &[f64]) -> GreensTerms {
    let dim = grid.dim;
    let la = apply_l(grid, cd, a);
    let b = apply_b(grid, cd, a);
    let ls = apply_lstar(grid, cd, u);
    let un = normal_derivative(grid, cd, u);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for p in 0..grid.len() {
        let geo = &cd.nodes[p];
        let dv = grid.volume_weight_fine(p) * geo.sqrt_det;
        lhs += la[p] * u[p] * dv;
        rhs += inner(&geo.ginv, &a.data[p], &ls.data[p], dim) * dv;
        if grid.role(p) == Role::Sigma {
            let bg = cd.bdry(p);
            let ds = grid.surface_weight_fine(p) * bg.sqrt_det_hat;
            lhs += b[p] * u[p] * ds;
            let ah = inner(&bg.ghat_inv, &a.data[p], &bg.h, dim);
            let tr = trace_with(&bg.ghat_inv, &a.data[p], dim);
            rhs += (-u[p] * ah + un[p] * tr) * ds;
        }
    }
    GreensTerms { lhs, rhs, residual: (lhs - rhs).abs() }
}
