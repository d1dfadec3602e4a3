//! Discrete linear problems built on `L`, `L*` and `B = 2Ḣ` at a frozen
//! metric: the fourth-order Dirichlet problems, the extension operator E,
//! the D-Gram matrix (equal to P), B̂ = P − K, the complement basis and the
//! two-stage linearized solve.

use std::sync::OnceLock;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DeformError, Result};
use crate::fields::{comp_pairs, inner, n_comp, pair_coeff, raise2, Mat3, SymTensorField, ZERO3};
use crate::mesh::{DomainGrid, Role};
use crate::operators::{hdot_row, l_row, lstar_rows, phi_sigma_rows, ScalarBc, SparseRow};
use crate::sparse::{init_parallelism, Csr, SparseLu};
use crate::spectral::{add, lowest_modes, ModeOptions};
use crate::tensor::{curvature, CurvatureData, MetricField};
use crate::weights::{eta, weighted_norm, weighted_sup_tensor, NormKind, WeightSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Nodes with θ below `theta_cut_factor · h` carry no unknowns.
    pub theta_cut_factor: f64,
    /// Relative singular-value threshold for the numerical rank.
    pub svd_tol: f64,
    pub max_candidates: usize,
    /// Relative residual above which a solve is flagged.
    pub cg_tol: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { theta_cut_factor: 2.0, svd_tol: 1e-8, max_candidates: 40, cg_tol: 1e-10, seed: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Relative discrete L² residual of the interior equation on unknown nodes.
    pub residual_interior: f64,
    /// Relative residual of the boundary equation on Σ unknowns.
    pub residual_boundary: f64,
    /// Interior residual in L²_{1/ρ} and in the weighted sup norm.
    pub residual_interior_l2_rho_inv: f64,
    pub residual_interior_sup: f64,
    pub residual_boundary_l2: f64,
    pub residual_boundary_sup: f64,
    /// Smallest retained singular value of the boundary map in D coordinates.
    pub sigma_min: f64,
    pub defect_dim: usize,
    /// `‖a‖_{L²_{1/ρ}} / (‖f‖_{(H²_ρ)*} + ‖ψ‖_{D*})`.
    pub stability: f64,
    /// Weighted sup norm with weight `ρ^{-1/2} φ^{2+n/2}`.
    pub b2_norm: f64,
    pub unknowns: usize,
    pub factor_nnz: usize,
    pub flagged: bool,
    pub wall_seconds: f64,
}

/// Dense boundary operators, built on first use.
#[derive(Debug)]
struct BoundaryOps {
    /// Columns are Dirichlet extensions of unit boundary data, all nodes.
    e: Mat<f64>,
    g_d: Mat<f64>,
    /// `∫_Σ <ρ L*Eû, h> v̂` as a bilinear form.
    k1: Mat<f64>,
    /// `B(ρ L* E)` pointwise on Σ unknowns.
    s_direct: Mat<f64>,
    /// Lower factor with `G_D = L Lᵀ`.
    l: Mat<f64>,
    /// SVD of `L⁻¹ M_Σ S L⁻ᵀ`.
    u: Mat<f64>,
    sv: Vec<f64>,
    v: Mat<f64>,
    rank: usize,
}

/// Complement tensors `a_i` with `L(a_i) = 0` whose boundary images fill the
/// cokernel of the boundary map.
#[derive(Clone, Debug)]
pub struct Complement {
    pub fields: Vec<SymTensorField>,
    /// Images `L⁻¹ M_Σ B(a_i)` in D* coordinates.
    images: Vec<Vec<f64>>,
    /// `U_pᵀ [images]`, square.
    z: Mat<f64>,
    pub candidates_tried: usize,
}

#[derive(Debug)]
pub struct LinearizedSystem {
    pub grid: DomainGrid,
    pub cd: CurvatureData,
    pub ws: WeightSystem,
    pub params: SolverParams,
    pub theta_cut: f64,
    /// Free interior nodes (unknowns of the zero-boundary problem).
    pub interior: Vec<usize>,
    /// Σ nodes carrying boundary unknowns.
    pub sigma: Vec<usize>,
    /// `u -> L* u` with the ghost condition at Σ, rows `node * n_comp + c`.
    pub a_lstar: Csr,
    /// `a -> L(a)`, one row per node.
    pub a_l: Csr,
    /// `a -> B(a)` on Σ unknowns.
    pub a_b: Csr,
    /// `A_L diag(ρ) A_Lstar`, all nodes.
    pub a4: Csr,
    /// Block diagonal `ρ q √g <·,·>_g`.
    pub w_rho: Csr,
    /// `q_Σ √ĝ` on Σ unknowns.
    pub m_sigma: Vec<f64>,
    pub c0: f64,
    a4_is: Csr,
    lu: SparseLu,
    boundary: OnceLock<std::result::Result<BoundaryOps, String>>,
    complement: OnceLock<std::result::Result<Complement, String>>,
    h2_lu: OnceLock<std::result::Result<SparseLu, String>>,
}

/// `<a, b>_g` as a bilinear form on stored components.
pub fn metric_block(ginv: &Mat3, dim: usize) -> Vec<Vec<f64>> {
    let pairs = comp_pairs(dim);
    let orbit = |(i, j): (usize, usize)| if i == j { vec![(i, j)] } else { vec![(i, j), (j, i)] };
    pairs
        .iter()
        .map(|&c1| {
            pairs
                .iter()
                .map(|&c2| {
                    let mut s = 0.0;
                    for (i, j) in orbit(c1) {
                        for (k, l) in orbit(c2) {
                            s += ginv[i][k] * ginv[j][l];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn scatter(n: usize, idx: &[usize], vals: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&p, &v) in idx.iter().zip(vals) {
        out[p] = v;
    }
    out
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&p| v[p]).collect()
}

fn col(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

fn matvec_t(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)] * x[i]).sum()).collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lower_solve(l: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut m = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), m.as_mut(), faer::Par::Seq);
    col(&m, 0)
}

fn upper_t_solve(l: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut m = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), m.as_mut(), faer::Par::Seq);
    col(&m, 0)
}

impl LinearizedSystem {
    /// Assemble every sparse operator at `g0` and factor the zero-boundary
    /// fourth-order system.
    pub fn assemble(grid: &DomainGrid, g0: &MetricField, ws: &WeightSystem, params: SolverParams) -> Result<Self> {
        init_parallelism();
        let cd = curvature(grid, g0)?;
        Self::assemble_with(grid, cd, ws, params)
    }

    pub fn assemble_with(grid: &DomainGrid, cd: CurvatureData, ws: &WeightSystem, params: SolverParams) -> Result<Self> {
        if !(params.theta_cut_factor >= 1.0) || !(params.svd_tol > 0.0 && params.svd_tol < 1.0) {
            return Err(DeformError::Config(format!("invalid solver parameters {params:?}")));
        }
        let dim = grid.dim;
        let nc = n_comp(dim);
        let n = grid.len();
        let hmin = grid.h[..dim].iter().cloned().fold(f64::INFINITY, f64::min);
        let theta_cut = params.theta_cut_factor * hmin;
        let interior: Vec<usize> = (0..n).filter(|&p| grid.role(p) == Role::Interior && ws.theta[p] >= theta_cut).collect();
        let sigma: Vec<usize> = (0..n).filter(|&p| grid.role(p) == Role::Sigma && ws.theta[p] >= theta_cut).collect();
        if interior.is_empty() || sigma.is_empty() {
            return Err(DeformError::Assembly("no unknowns survive the weight truncation".into()));
        }

        let mut lstar = Vec::with_capacity(n * nc);
        for p in 0..n {
            lstar.extend(lstar_rows(grid, &cd, p, ScalarBc::NeumannGhost));
        }
        let a_lstar = Csr::from_rows(n, &lstar);
        let l_rows: Vec<SparseRow> = (0..n).map(|p| l_row(grid, &cd, p)).collect();
        let a_l = Csr::from_rows(n * nc, &l_rows);
        let b_rows: Vec<SparseRow> = sigma.iter().map(|&p| hdot_row(grid, &cd, p).into_iter().map(|(c, w)| (c, 2.0 * w)).collect()).collect();
        let a_b = Csr::from_rows(n * nc, &b_rows);

        let rho_t: Vec<f64> = (0..n * nc).map(|r| ws.rho[r / nc]).collect();
        let a4 = a_l.scale_cols(&rho_t).matmul(&a_lstar);

        let mut w_rows = Vec::with_capacity(n * nc);
        for p in 0..n {
            let geo = &cd.nodes[p];
            let s = ws.rho[p] * grid.volume_weight(p) * geo.sqrt_det;
            let blk = metric_block(&geo.ginv, dim);
            for c1 in 0..nc {
                w_rows.push((0..nc).map(|c2| (p * nc + c2, s * blk[c1][c2])).collect::<SparseRow>());
            }
        }
        let w_rho = Csr::from_rows(n * nc, &w_rows);

        let a4_ii = a4.select(&interior, &interior);
        let a4_is = a4.select(&interior, &sigma);
        let lu = SparseLu::new(&a4_ii).map_err(|e| {
            DeformError::Assembly(format!(
                "zero-boundary fourth-order system is singular ({e}); the boundary conditions u = u_nu = 0 on Sigma should exclude a kernel"
            ))
        })?;
        let m_sigma: Vec<f64> = sigma.iter().map(|&p| grid.surface_weight(p) * cd.bdry(p).sqrt_det_hat).collect();
        let c0 = cd.sup_h_squared(grid);
        Ok(LinearizedSystem {
            grid: grid.clone(),
            cd,
            ws: ws.clone(),
            params,
            theta_cut,
            interior,
            sigma,
            a_lstar,
            a_l,
            a_b,
            a4,
            w_rho,
            m_sigma,
            c0,
            a4_is,
            lu,
            boundary: OnceLock::new(),
            complement: OnceLock::new(),
            h2_lu: OnceLock::new(),
        })
    }

    pub fn n_comp(&self) -> usize {
        n_comp(self.grid.dim)
    }

    /// `ρ L* u` as a tensor field (ghost condition at Σ).
    pub fn rho_lstar(&self, u: &[f64]) -> SymTensorField {
        let nc = self.n_comp();
        let v = self.a_lstar.matvec(u);
        let rv: Vec<f64> = v.iter().enumerate().map(|(r, x)| x * self.ws.rho[r / nc]).collect();
        SymTensorField::from_vec(self.grid.dim, &rv)
    }

    /// `L(a)` at every node.
    pub fn l_of(&self, a: &SymTensorField) -> Vec<f64> {
        self.a_l.matvec(&a.to_vec())
    }

    /// `B(a)` on Σ unknowns.
    pub fn b_of(&self, a: &SymTensorField) -> Vec<f64> {
        self.a_b.matvec(&a.to_vec())
    }

    /// Solve `L(ρ L* u) = f` on free interior nodes with `u = u_ν = 0` on Σ.
    pub fn solve_dirichlet_zero(&self, f: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let t0 = Instant::now();
        let n = self.grid.len();
        let fi = gather(f, &self.interior);
        let mut rep = SolveReport { unknowns: self.interior.len(), factor_nnz: self.a4.nnz(), ..Default::default() };
        if fi.iter().all(|v| *v == 0.0) {
            rep.wall_seconds = t0.elapsed().as_secs_f64();
            return Ok((vec![0.0; n], rep));
        }
        let ui = self.lu.solve(&fi);
        if ui.iter().any(|v| !v.is_finite()) {
            return Err(DeformError::Numeric("non-finite Dirichlet solution".into()));
        }
        let u = scatter(n, &self.interior, &ui);
        let r: Vec<f64> = gather(&self.a4.matvec(&u), &self.interior).iter().zip(&fi).map(|(a, b)| a - b).collect();
        rep.residual_interior = l2(&r) / l2(&fi);
        rep.flagged = rep.residual_interior > self.params.cg_tol;
        rep.wall_seconds = t0.elapsed().as_secs_f64();
        Ok((u, rep))
    }

    /// Extension of boundary data `û` on Σ unknowns: `L(ρL*u) = 0` on free
    /// interior nodes, `u = û` and `u_ν = 0` on Σ.
    pub fn solve_dirichlet_boundary(&self, uhat: &[f64]) -> Result<Vec<f64>> {
        if uhat.len() != self.sigma.len() {
            return Err(DeformError::Config(format!("boundary data has {} values, expected {}", uhat.len(), self.sigma.len())));
        }
        let n = self.grid.len();
        let mut u = scatter(n, &self.sigma, uhat);
        if uhat.iter().all(|v| *v == 0.0) {
            return Ok(u);
        }
        let rhs: Vec<f64> = self.a4_is.matvec(uhat).into_iter().map(|v| -v).collect();
        let ui = self.lu.solve(&rhs);
        for (&p, v) in self.interior.iter().zip(ui) {
            u[p] = v;
        }
        Ok(u)
    }

    fn ops(&self) -> Result<&BoundaryOps> {
        self.boundary.get_or_init(|| self.build_boundary().map_err(|e| e.to_string())).as_ref().map_err(|e| DeformError::Numeric(e.clone()))
    }

    fn build_boundary(&self) -> Result<BoundaryOps> {
        let n = self.grid.len();
        let ns = self.sigma.len();
        let nc = self.n_comp();
        let dim = self.grid.dim;
        let mut e = Mat::<f64>::zeros(n, ns);
        for j in 0..ns {
            let mut unit = vec![0.0; ns];
            unit[j] = 1.0;
            let u = self.solve_dirichlet_boundary(&unit)?;
            for (i, v) in u.into_iter().enumerate() {
                e[(i, j)] = v;
            }
        }
        // G_D = (L*E)ᵀ W (L*E) + C0 M_Σρ
        let le = self.a_lstar.mul_dense(e.as_ref());
        let wle = self.w_rho.mul_dense(le.as_ref());
        let mut g_d = le.transpose() * &wle;
        for i in 0..ns {
            for j in 0..i {
                let s = 0.5 * (g_d[(i, j)] + g_d[(j, i)]);
                g_d[(i, j)] = s;
                g_d[(j, i)] = s;
            }
            g_d[(i, i)] += self.c0 * self.m_sigma[i] * self.ws.rho[self.sigma[i]];
        }
        let mut k1 = Mat::<f64>::zeros(ns, ns);
        for (s, &p) in self.sigma.iter().enumerate() {
            let b = self.cd.bdry(p);
            let hup = raise2(&b.ghat_inv, &b.h, dim);
            let coeff: Vec<f64> = comp_pairs(dim).iter().map(|&(k, l)| pair_coeff(&hup, k, l)).collect();
            let scale = self.m_sigma[s] * self.ws.rho[p];
            for t in 0..ns {
                let mut acc = 0.0;
                for c in 0..nc {
                    acc += coeff[c] * le[(p * nc + c, t)];
                }
                k1[(s, t)] = scale * acc;
            }
        }
        let nc_rho: Vec<f64> = (0..n * nc).map(|r| self.ws.rho[r / nc]).collect();
        let s_direct = self.a_b.scale_cols(&nc_rho).mul_dense(le.as_ref());

        // D coordinates: G_D = L Lᵀ after symmetric Jacobi scaling
        let dsc: Vec<f64> = (0..ns).map(|i| 1.0 / g_d[(i, i)].sqrt()).collect();
        let gs = Mat::from_fn(ns, ns, |i, j| dsc[i] * g_d[(i, j)] * dsc[j]);
        let llt = gs.llt(Side::Lower).map_err(|e| DeformError::Numeric(format!("D-Gram matrix is not positive definite: {e:?}")))?;
        let ls = llt.L();
        let l = Mat::from_fn(ns, ns, |i, j| ls[(i, j)] / dsc[i]);
        let mut shat = Mat::from_fn(ns, ns, |i, j| self.m_sigma[i] * s_direct[(i, j)]);
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), shat.as_mut(), faer::Par::Seq);
        let mut st = shat.transpose().to_owned();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), st.as_mut(), faer::Par::Seq);
        let shat = st.transpose().to_owned();
        let svd = shat.svd().map_err(|e| DeformError::Numeric(format!("SVD of the boundary map: {e:?}")))?;
        let sv: Vec<f64> = (0..ns).map(|i| svd.S().column_vector()[i]).collect();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > self.params.svd_tol * smax).count();
        Ok(BoundaryOps { e, g_d, k1, s_direct, l, u: svd.U().to_owned(), sv, v: svd.V().to_owned(), rank })
    }

    /// Extension matrix E: all nodes by Σ unknowns.
    pub fn extension_matrix(&self) -> Result<Mat<f64>> {
        Ok(self.ops()?.e.clone())
    }

    /// The D-Gram matrix, which is also the matrix of P.
    pub fn gram_d(&self) -> Result<Mat<f64>> {
        Ok(self.ops()?.g_d.clone())
    }

    pub fn p_matrix(&self) -> Result<Mat<f64>> {
        self.gram_d()
    }

    /// Bilinear-form matrix of `B̂ = P − K`.
    pub fn bhat_matrix(&self) -> Result<Mat<f64>> {
        let o = self.ops()?;
        let ns = self.sigma.len();
        Ok(Mat::from_fn(ns, ns, |i, j| {
            let c0 = if i == j { self.c0 * self.m_sigma[i] * self.ws.rho[self.sigma[i]] } else { 0.0 };
            o.g_d[(i, j)] - o.k1[(i, j)] - c0
        }))
    }

    /// `K = P − B̂` as a bilinear form.
    pub fn k_matrix(&self) -> Result<Mat<f64>> {
        let p = self.p_matrix()?;
        let b = self.bhat_matrix()?;
        Ok(&p - &b)
    }

    /// `P û` as a density on Σ unknowns.
    pub fn apply_p(&self, uhat: &[f64]) -> Result<Vec<f64>> {
        let f = matvec(&self.ops()?.g_d, uhat);
        Ok(f.iter().zip(&self.m_sigma).map(|(a, m)| a / m).collect())
    }

    /// `B̂ û` as a density on Σ unknowns.
    pub fn apply_bhat(&self, uhat: &[f64]) -> Result<Vec<f64>> {
        let f = matvec(&self.bhat_matrix()?, uhat);
        Ok(f.iter().zip(&self.m_sigma).map(|(a, m)| a / m).collect())
    }

    /// `B(ρ L* E û)` evaluated directly on Σ unknowns.
    pub fn direct_b(&self, uhat: &[f64]) -> Result<Vec<f64>> {
        let u = self.solve_dirichlet_boundary(uhat)?;
        Ok(self.b_of(&self.rho_lstar(&u)))
    }

    /// `‖û‖_D` from the assembled Gram matrix.
    pub fn d_norm(&self, uhat: &[f64]) -> Result<f64> {
        let g = &self.ops()?.g_d;
        let gu = matvec(g, uhat);
        Ok(uhat.iter().zip(&gu).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
    }

    /// `‖û‖_D` by integrating `<L*u, L*u> ρ` for the extension `u` directly.
    pub fn d_norm_direct(&self, uhat: &[f64]) -> Result<f64> {
        let u = self.solve_dirichlet_boundary(uhat)?;
        let ls = crate::operators::apply_lstar_bc(&self.grid, &self.cd, &u, ScalarBc::NeumannGhost);
        let dim = self.grid.dim;
        let mut s = 0.0;
        for p in 0..self.grid.len() {
            let geo = &self.cd.nodes[p];
            s += self.ws.rho[p] * self.grid.volume_weight(p) * geo.sqrt_det * inner(&geo.ginv, &ls.data[p], &ls.data[p], dim);
        }
        for (k, &p) in self.sigma.iter().enumerate() {
            s += self.c0 * self.m_sigma[k] * self.ws.rho[p] * uhat[k] * uhat[k];
        }
        Ok(s.sqrt())
    }

    /// Dual norm of `u -> ∫ f u` over `H²_ρ` functions vanishing to first
    /// order on Σ; `f` is read on free interior nodes.
    pub fn h2_dual_norm(&self, f: &[f64]) -> Result<f64> {
        let lu = self
            .h2_lu
            .get_or_init(|| {
                let g = h2_rho_gram(&self.grid, &self.ws).select(&self.interior, &self.interior);
                SparseLu::new(&g).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| DeformError::Numeric(e.clone()))?;
        let form: Vec<f64> = self.interior.iter().map(|&p| self.grid.volume_weight(p) * f[p]).collect();
        let x = lu.solve(&form);
        Ok(form.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
    }

    /// Dual norm of the functional `v̂ -> ∫_Σ ψ v̂` for a density `ψ` on Σ unknowns.
    pub fn dstar_norm(&self, psi: &[f64]) -> Result<f64> {
        let o = self.ops()?;
        let form: Vec<f64> = psi.iter().zip(&self.m_sigma).map(|(a, m)| a * m).collect();
        Ok(l2(&lower_solve(&o.l, &form)))
    }

    /// Matrix of `û -> B(ρ L* E û)` on Σ unknowns.
    pub fn boundary_map_matrix(&self) -> Result<Mat<f64>> {
        Ok(self.ops()?.s_direct.clone())
    }

    /// Singular values of the boundary map in D coordinates, descending.
    pub fn boundary_spectrum(&self) -> Result<Vec<f64>> {
        Ok(self.ops()?.sv.clone())
    }

    /// Singular values of `K` in D coordinates, descending.
    pub fn compactness_spectrum(&self) -> Result<Vec<f64>> {
        let o = self.ops()?;
        let k = self.k_matrix()?;
        let mut m = k.clone();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(o.l.as_ref(), m.as_mut(), faer::Par::Seq);
        let mut mt = m.transpose().to_owned();
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(o.l.as_ref(), mt.as_mut(), faer::Par::Seq);
        let sv = mt.singular_values().map_err(|e| DeformError::Numeric(format!("{e:?}")))?;
        Ok(sv)
    }

    /// Numerical corank of the boundary map.
    pub fn defect_dim(&self) -> Result<usize> {
        let o = self.ops()?;
        Ok(self.sigma.len() - o.rank)
    }

    /// Seeded smooth candidate supported near Σ and away from Σ′.
    pub fn candidate(&self, k: usize) -> SymTensorField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
        let grid = &self.grid;
        let tang = grid.tangential_axes();
        let nax = grid.sigma.axis;
        let r0 = self.ws.params.r0;
        let centers: Vec<(f64, f64)> = tang
            .iter()
            .map(|&a| {
                let ext = grid.extents[a];
                let w = rng.random_range(0.08..0.2) * ext;
                let c = rng.random_range(0.1 * ext + w..0.9 * ext - w);
                (c, w)
            })
            .collect();
        let dim = grid.dim;
        let a = SymTensorField::from_fn(grid, |x| {
            let mut s = 1.0;
            for (&(c, w), &ax) in centers.iter().zip(&tang) {
                s *= crate::weights::bump1((x[ax] - c) / w);
            }
            let y = x[nax];
            s *= y * (1.0 - eta(y / r0));
            let mut m = ZERO3;
            for i in 0..dim {
                m[i][i] = s / (dim as f64 - 1.0);
            }
            m
        });
        // scale by g0 so the candidate is a multiple of the metric
        let mut out = a.clone();
        for (p, m) in out.data.iter_mut().enumerate() {
            let g = &self.cd.nodes[p].g;
            let s = a.data[p][0][0];
            for i in 0..dim {
                for j in 0..dim {
                    m[i][j] = s * g[i][j];
                }
            }
        }
        out
    }

    /// Correct `a` to `a - ρ L* u` with `L(ρ L* u) = L(a)`, so the result
    /// satisfies `L(a') = 0` on free interior nodes.
    pub fn correct(&self, a: &SymTensorField) -> Result<SymTensorField> {
        let la = self.l_of(a);
        let (u, _) = self.solve_dirichlet_zero(&la)?;
        let c = self.rho_lstar(&u);
        Ok(a.axpy(-1.0, &c).with_mask(SymTensorField::deformation_mask(&self.grid)))
    }

    /// Complement basis filling the cokernel of the boundary map.
    pub fn complement_basis(&self) -> Result<&Complement> {
        self.complement
            .get_or_init(|| self.build_complement().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| DeformError::DefectCompletion(e.clone()))
    }

    fn build_complement(&self) -> Result<Complement> {
        let o = self.ops()?;
        let ns = self.sigma.len();
        let p = ns - o.rank;
        let mut out = Complement { fields: vec![], images: vec![], z: Mat::zeros(p, p), candidates_tried: 0 };
        if p == 0 {
            return Ok(out);
        }
        let up: Vec<Vec<f64>> = (o.rank..ns).map(|j| col(&o.u, j)).collect();
        let mut accepted_proj: Vec<Vec<f64>> = Vec::new();
        for k in 0..self.params.max_candidates {
            out.candidates_tried = k + 1;
            let a = self.correct(&self.candidate(k))?;
            let b = self.b_of(&a);
            let form: Vec<f64> = b.iter().zip(&self.m_sigma).map(|(x, m)| x * m).collect();
            let img = lower_solve(&o.l, &form);
            let proj: Vec<f64> = up.iter().map(|u| u.iter().zip(&img).map(|(x, y)| x * y).sum()).collect();
            let mut r = proj.clone();
            for q in &accepted_proj {
                let d: f64 = r.iter().zip(q).map(|(x, y)| x * y).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= d * qi;
                }
            }
            let rn = l2(&r);
            if rn > 1e-3 * l2(&img).max(f64::MIN_POSITIVE) {
                accepted_proj.push(r.iter().map(|x| x / rn).collect());
                out.fields.push(a);
                out.images.push(img);
                if out.fields.len() == p {
                    break;
                }
            }
        }
        if out.fields.len() < p {
            return Err(DeformError::DefectCompletion(format!(
                "captured {} of {} cokernel directions after {} candidates",
                out.fields.len(),
                p,
                out.candidates_tried
            )));
        }
        out.z = Mat::from_fn(p, p, |i, j| up[i].iter().zip(&out.images[j]).map(|(x, y)| x * y).sum());
        Ok(out)
    }

    /// One pass of the superposition construction `ρL*u₀ + T(ψ − B(ρL*u₀))`;
    /// `psi_s` lives on Σ unknowns.
    fn solve_pass(&self, f: &[f64], psi_s: &[f64]) -> Result<SymTensorField> {
        let ns = self.sigma.len();
        let o = self.ops()?;
        let (u0, _) = self.solve_dirichlet_zero(f)?;
        let mut a = self.rho_lstar(&u0);
        let b0 = self.b_of(&a);
        let psi1: Vec<f64> = psi_s.iter().zip(&b0).map(|(x, y)| x - y).collect();
        if psi1.iter().all(|v| *v == 0.0) {
            return Ok(a);
        }
        let form: Vec<f64> = psi1.iter().zip(&self.m_sigma).map(|(x, m)| x * m).collect();
        let mut y = lower_solve(&o.l, &form);
        let p = ns - o.rank;
        if p > 0 {
            let comp = self.complement_basis()?;
            let rhs: Vec<f64> = (o.rank..ns).map(|j| col(&o.u, j).iter().zip(&y).map(|(x, w)| x * w).sum()).collect();
            let zr = Mat::from_fn(p, 1, |i, _| rhs[i]);
            let c = comp.z.partial_piv_lu().solve(&zr);
            for i in 0..p {
                let ci = c[(i, 0)];
                for (yk, bk) in y.iter_mut().zip(&comp.images[i]) {
                    *yk -= ci * bk;
                }
                a = a.axpy(ci, &comp.fields[i]);
            }
        }
        let ur = matvec_t(&o.u, &y);
        let mut x = vec![0.0; ns];
        for k in 0..o.rank {
            let coef = ur[k] / o.sv[k];
            for (xi, vk) in x.iter_mut().zip(col(&o.v, k)) {
                *xi += coef * vk;
            }
        }
        let uhat1 = upper_t_solve(&o.l, &x);
        let u1 = matvec(&o.e, &uhat1);
        Ok(a.axpy(1.0, &self.rho_lstar(&u1)))
    }

    /// Solve `L(a) = f` on free interior nodes and `B(a) = ψ` on Σ unknowns;
    /// `psi` is given at every node and read on Σ unknowns. A few passes of
    /// iterative refinement recover accuracy lost to the small weights.
    pub fn solve_linearized(&self, f: &[f64], psi: &[f64]) -> Result<(SymTensorField, SolveReport)> {
        let t0 = Instant::now();
        let n = self.grid.len();
        if f.len() != n || psi.len() != n {
            return Err(DeformError::Config("data length does not match the grid".into()));
        }
        let mask = SymTensorField::deformation_mask(&self.grid);
        let fi = scatter(n, &self.interior, &gather(f, &self.interior));
        let psi_s = gather(psi, &self.sigma);
        let mut a = self.solve_pass(&fi, &psi_s)?.with_mask(mask.clone());
        let mut best = self.residual_pair(&a, &fi, &psi_s);
        for _ in 0..4 {
            if best.0.max(best.1) <= 1e-13 {
                break;
            }
            let la = self.l_of(&a);
            let rf: Vec<f64> = self.interior.iter().map(|&p| fi[p] - la[p]).collect();
            let rf = scatter(n, &self.interior, &rf);
            let rb: Vec<f64> = psi_s.iter().zip(self.b_of(&a)).map(|(x, y)| x - y).collect();
            let trial = a.axpy(1.0, &self.solve_pass(&rf, &rb)?).with_mask(mask.clone());
            let r = self.residual_pair(&trial, &fi, &psi_s);
            if r.0.max(r.1) >= best.0.max(best.1) {
                break;
            }
            a = trial;
            best = r;
        }
        let mut rep = self.report(&a, f, psi)?;
        rep.unknowns = self.interior.len() + self.sigma.len();
        rep.factor_nnz = self.a4.nnz();
        rep.flagged = rep.residual_interior > 1e-8 || rep.residual_boundary > 1e-8;
        rep.wall_seconds = t0.elapsed().as_secs_f64();
        Ok((a, rep))
    }

    fn residual_pair(&self, a: &SymTensorField, fi: &[f64], psi_s: &[f64]) -> (f64, f64) {
        let la = self.l_of(a);
        let rf: Vec<f64> = self.interior.iter().map(|&p| la[p] - fi[p]).collect();
        let nf = l2(&gather(fi, &self.interior));
        let rb: Vec<f64> = self.b_of(a).iter().zip(psi_s).map(|(x, y)| x - y).collect();
        let nb = l2(psi_s);
        let rel = |r: f64, d: f64| if d > 0.0 { r / d } else { r };
        (rel(l2(&rf), nf), rel(l2(&rb), nb))
    }

    /// Residuals and measured constants for a candidate solution.
    pub fn report(&self, a: &SymTensorField, f: &[f64], psi: &[f64]) -> Result<SolveReport> {
        let grid = &self.grid;
        let n = grid.len();
        let la = self.l_of(a);
        let mut rf = vec![0.0; n];
        for &p in &self.interior {
            rf[p] = la[p] - f[p];
        }
        let fi = scatter(n, &self.interior, &gather(f, &self.interior));
        let ba = self.b_of(a);
        let psi_s = gather(psi, &self.sigma);
        let rb: Vec<f64> = ba.iter().zip(&psi_s).map(|(x, y)| x - y).collect();
        let ws = &self.ws;
        let l2q = |v: &[f64]| grid.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
        let l2s = |v: &[f64]| v.iter().zip(&self.m_sigma).map(|(x, m)| x * x * m).sum::<f64>().sqrt();
        let rel = |r: f64, d: f64, other: f64| if d > 0.0 { r / d } else if other > 0.0 { r / other } else { r };
        let (nf, npsi) = (l2q(&fi), l2s(&psi_s));
        let mut rep = SolveReport {
            residual_interior: rel(l2q(&rf), nf, npsi),
            residual_boundary: rel(l2s(&rb), npsi, nf),
            residual_interior_l2_rho_inv: weighted_norm(grid, ws, &rf, NormKind::L2RhoInv)?,
            residual_interior_sup: rf.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            residual_boundary_l2: l2s(&rb),
            residual_boundary_sup: rb.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            ..Default::default()
        };
        let o = self.ops()?;
        rep.sigma_min = if o.rank > 0 { o.sv[o.rank - 1] } else { 0.0 };
        rep.defect_dim = self.sigma.len() - o.rank;
        let a_norm = tensor_l2_rho_inv(grid, ws, &self.cd, a);
        let data = self.h2_dual_norm(&fi)? + self.dstar_norm(&psi_s)?;
        rep.stability = if data > 0.0 { a_norm / data } else { 0.0 };
        rep.b2_norm = weighted_sup_tensor(grid, ws, a, 2.0 + grid.dim as f64 / 2.0, -0.5);
        Ok(rep)
    }

    /// Measured Poincaré constants `(C_Lstar, C_Phi)`; `C_Phi` is infinite
    /// when `kernel_dim > 0`.
    pub fn poincare_constants(&self, kernel_dim: usize) -> Result<(f64, f64)> {
        let grid = &self.grid;
        let n = grid.len();
        let nc = self.n_comp();
        let gram = h2_rho_gram(grid, &self.ws);
        // L* on u with u = u_ν = 0 on Σ
        let ls_i = self.a_lstar.select(&(0..n * nc).collect::<Vec<_>>(), &self.interior);
        let a = ls_i.transpose().matmul(&self.w_rho.matmul(&ls_i));
        let b = gram.select(&self.interior, &self.interior);
        let opts = ModeOptions { count: 1, guard: 5, shift: 1e-9, ..Default::default() };
        let lam = lowest_modes(&a, &b, opts)?.values[0];
        let c_lstar = 1.0 / lam.max(0.0).sqrt();
        if kernel_dim > 0 {
            return Ok((c_lstar, f64::INFINITY));
        }
        let mut free: Vec<usize> = self.interior.iter().chain(&self.sigma).cloned().collect();
        free.sort_unstable();
        let mut rows = Vec::new();
        for p in 0..n {
            rows.extend(lstar_rows(grid, &self.cd, p, ScalarBc::OneSided));
        }
        let phi_i = Csr::from_rows(n, &rows);
        let mut brows: Vec<SparseRow> = Vec::new();
        let mut bw: Vec<SparseRow> = Vec::new();
        for (k, &p) in self.sigma.iter().enumerate() {
            let b = self.cd.bdry(p);
            let blk = metric_block(&b.ghat_inv, grid.dim);
            let s = self.m_sigma[k] * self.ws.rho[p];
            let base = brows.len();
            brows.extend(phi_sigma_rows(grid, &self.cd, p));
            for c1 in 0..nc {
                bw.push((0..nc).map(|c2| (base + c2, s * blk[c1][c2])).collect());
            }
        }
        let phi_b = Csr::from_rows(n, &brows);
        let wb = Csr::from_rows(brows.len(), &bw);
        let pi = phi_i.select(&(0..n * nc).collect::<Vec<_>>(), &free);
        let pb = phi_b.select(&(0..brows.len()).collect::<Vec<_>>(), &free);
        let a = add(&pi.transpose().matmul(&self.w_rho.matmul(&pi)), &pb.transpose().matmul(&wb.matmul(&pb)));
        let b = gram.select(&free, &free);
        let lam = lowest_modes(&a, &b, opts)?.values[0];
        Ok((c_lstar, 1.0 / lam.max(0.0).sqrt()))
    }
}

/// `‖a‖_{L²_{1/ρ}}` with the metric inner product and model measure.
pub fn tensor_l2_rho_inv(grid: &DomainGrid, ws: &WeightSystem, cd: &CurvatureData, a: &SymTensorField) -> f64 {
    let mut s = 0.0;
    for p in 0..grid.len() {
        let v = inner(&cd.nodes[p].ginv, &a.data[p], &a.data[p], grid.dim);
        if v == 0.0 {
            continue;
        }
        if ws.rho[p] == 0.0 {
            return f64::INFINITY;
        }
        s += grid.volume_weight(p) * v / ws.rho[p];
    }
    s.sqrt()
}

/// Gram matrix of `‖u‖²_{H²_ρ}` over all nodes with the grid stencils.
pub fn h2_rho_gram(grid: &DomainGrid, ws: &WeightSystem) -> Csr {
    let n = grid.len();
    let dim = grid.dim;
    let wq: Vec<f64> = (0..n).map(|p| grid.volume_weight(p) * ws.rho[p]).collect();
    let mut total = Csr::diag(&wq);
    let mut ops: Vec<(Csr, f64)> = Vec::new();
    for a in 0..dim {
        let rows: Vec<SparseRow> = (0..n).map(|p| grid.d1(p, a).iter().collect()).collect();
        ops.push((Csr::from_rows(n, &rows), 1.0));
        for b in a..dim {
            let rows: Vec<SparseRow> = (0..n).map(|p| grid.d2(p, a, b).iter().collect()).collect();
            ops.push((Csr::from_rows(n, &rows), if a == b { 1.0 } else { 2.0 }));
        }
    }
    for (d, m) in ops {
        let scaled: Vec<f64> = wq.iter().map(|w| w * m).collect();
        total = add(&total, &d.transpose().matmul(&d.scale_rows(&scaled)));
    }
    total
}
