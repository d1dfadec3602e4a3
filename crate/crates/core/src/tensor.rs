//! Christoffel symbols, Ricci and scalar curvature of a metric field, and
//! the boundary geometry of Σ.

use crate::error::{DeformError, Result};
use crate::fields::{comp_pairs, det, identity3, inverse, is_spd, matmul, Mat3, SymTensorField, Vec3, ZERO3};
use crate::mesh::DomainGrid;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Where a metric came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricTag {
    Base,
    Iterate(usize),
}

/// Symmetric positive-definite 2-tensor per node.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub dim: usize,
    pub g: Vec<Mat3>,
    pub tag: MetricTag,
}

impl MetricField {
    pub fn flat(grid: &DomainGrid) -> Self {
        MetricField { dim: grid.dim, g: vec![identity3(grid.dim); grid.len()], tag: MetricTag::Base }
    }

    pub fn from_fn(grid: &DomainGrid, f: impl Fn([f64; 3]) -> Mat3) -> Self {
        let t = SymTensorField::from_fn(grid, f);
        MetricField { dim: grid.dim, g: t.data, tag: MetricTag::Base }
    }

    /// `e^{2w} δ`.
    pub fn conformal(grid: &DomainGrid, w: impl Fn([f64; 3]) -> f64) -> Self {
        let dim = grid.dim;
        MetricField::from_fn(grid, |x| {
            let s = (2.0 * w(x)).exp();
            let mut m = identity3(dim);
            for (i, row) in m.iter_mut().enumerate().take(dim) {
                row[i] = s;
            }
            m
        })
    }

    /// Conformal factor `w = A exp(-|x - c|^2 / (2 s^2))`.
    pub fn conformal_bump(grid: &DomainGrid, amplitude: f64, center: &[f64], width: f64) -> Self {
        let dim = grid.dim;
        let c: Vec<f64> = center.to_vec();
        MetricField::conformal(grid, move |x| {
            let r2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
            amplitude * (-r2 / (2.0 * width * width)).exp()
        })
    }

    /// Round unit-sphere metric in stereographic coordinates centered at `c`;
    /// a coordinate hyperplane through `c` is totally geodesic.
    pub fn round_sphere(grid: &DomainGrid, center: &[f64]) -> Self {
        let dim = grid.dim;
        let c: Vec<f64> = center.to_vec();
        MetricField::conformal(grid, move |x| {
            let r2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
            (2.0 / (1.0 + r2)).ln()
        })
    }

    pub fn plus(&self, a: &SymTensorField, t: f64) -> Self {
        let mut out = self.clone();
        for (m, d) in out.g.iter_mut().zip(&a.data) {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += t * d[i][j];
                }
            }
        }
        out
    }

    /// First node where the metric fails to be positive definite.
    pub fn first_degenerate(&self) -> Option<usize> {
        self.g.iter().position(|m| !is_spd(m, self.dim) || m.iter().flatten().any(|v| !v.is_finite()))
    }

    pub fn check(&self, grid: &DomainGrid) -> Result<()> {
        match self.first_degenerate() {
            Some(p) => Err(DeformError::Degenerate { node: p, x: grid.coord(p) }),
            None => Ok(()),
        }
    }
}

/// Recipe for a metric that can be rebuilt on any grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    Flat,
    ConformalBump { amplitude: f64, center: Vec<f64>, width: f64 },
    RoundSphere { center: Vec<f64> },
    /// Node CSV with columns `x, y[, z], g00, g01, ...` in component order.
    File { path: PathBuf },
}

impl MetricSpec {
    /// The generic background used throughout: a Gaussian conformal bump
    /// centred above Σ.
    pub fn default_generic() -> Self {
        MetricSpec::ConformalBump { amplitude: 0.2, center: vec![0.5, 0.35, 0.5], width: 0.15 }
    }

    pub fn build(&self, grid: &DomainGrid) -> Result<MetricField> {
        let need = |c: &Vec<f64>| -> Result<()> {
            if c.len() < grid.dim {
                Err(DeformError::Config(format!("center needs {} coordinates", grid.dim)))
            } else {
                Ok(())
            }
        };
        let m = match self {
            MetricSpec::Flat => MetricField::flat(grid),
            MetricSpec::ConformalBump { amplitude, center, width } => {
                need(center)?;
                if !(*width > 0.0) || !amplitude.is_finite() {
                    return Err(DeformError::Config("conformal bump needs width > 0 and finite amplitude".into()));
                }
                MetricField::conformal_bump(grid, *amplitude, center, *width)
            }
            MetricSpec::RoundSphere { center } => {
                need(center)?;
                MetricField::round_sphere(grid, center)
            }
            MetricSpec::File { path } => MetricField::read_csv(path, grid)?,
        };
        m.check(grid)?;
        Ok(m)
    }
}

impl MetricField {
    pub fn write_csv(&self, path: &Path, grid: &DomainGrid) -> Result<()> {
        let pairs = comp_pairs(self.dim);
        let names: Vec<String> = pairs.iter().map(|(i, j)| format!("g{}{}", i + 1, j + 1)).collect();
        let cols: Vec<Vec<f64>> = pairs.iter().map(|&(i, j)| self.g.iter().map(|m| m[i][j]).collect()).collect();
        let refs: Vec<(&str, &[f64])> = names.iter().zip(&cols).map(|(n, c)| (n.as_str(), c.as_slice())).collect();
        crate::io::write_node_csv(path, grid, &refs)
    }

    /// Load from a node CSV; every grid node must appear in the file, so a
    /// finer file grid is restricted by injection.
    pub fn read_csv(path: &Path, grid: &DomainGrid) -> Result<Self> {
        let (names, rows) = crate::io::read_table(path)?;
        let dim = grid.dim;
        let pairs = comp_pairs(dim);
        if names.len() != dim + pairs.len() {
            return Err(DeformError::Config(format!("{}: expected {} columns for dim {dim}", path.display(), dim + pairs.len())));
        }
        let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v * 1e8).round() as i64).collect() };
        let table: HashMap<Vec<i64>, usize> = rows.iter().enumerate().map(|(k, r)| (key(&r[..dim]), k)).collect();
        let mut g = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let x = grid.coord(p);
            let k = *table.get(&key(&x[..dim])).ok_or_else(|| {
                DeformError::Config(format!("{}: no entry for node at {:?}", path.display(), &x[..dim]))
            })?;
            let mut m = ZERO3;
            for (c, &(i, j)) in pairs.iter().enumerate() {
                m[i][j] = rows[k][dim + c];
                m[j][i] = rows[k][dim + c];
            }
            g.push(m);
        }
        Ok(MetricField { dim, g, tag: MetricTag::Base })
    }
}

/// Interior geometry at one node.
#[derive(Clone, Debug)]
pub struct NodeGeom {
    pub g: Mat3,
    pub ginv: Mat3,
    pub sqrt_det: f64,
    /// `chr[a][b][c] = Γ^a_{bc}`.
    pub chr: [[[f64; 3]; 3]; 3],
    /// `|g|^{-1/2} ∂_a(|g|^{1/2} Γ^a_{bc})`, from the pointwise second
    /// derivatives of `g` rather than a difference of stored Γ.
    pub div_chr: Mat3,
    pub ric: Mat3,
    pub r: f64,
}

/// Geometry of the closed Σ face at one node. Tensors use ambient indices
/// with the normal row and column zero.
#[derive(Clone, Debug)]
pub struct BoundaryGeom {
    /// Outward unit normal (contravariant).
    pub nu: Vec3,
    pub ghat: Mat3,
    pub ghat_inv: Mat3,
    pub sqrt_det_hat: f64,
    /// Second fundamental form `h_ij = -<ν, D_{e_i} e_j>`.
    pub h: Mat3,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub dim: usize,
    pub nodes: Vec<NodeGeom>,
    /// Present on Σ and Γ nodes.
    pub boundary: Vec<Option<BoundaryGeom>>,
}

impl CurvatureData {
    pub fn scalar(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.r).collect()
    }

    /// Mean curvature on face nodes, zero elsewhere.
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.boundary.iter().map(|b| b.as_ref().map_or(0.0, |b| b.mean)).collect()
    }

    pub fn bdry(&self, p: usize) -> &BoundaryGeom {
        self.boundary[p].as_ref().expect("node is not on the Σ face")
    }

    /// `sup_Σ |h|_ĝ^2`.
    pub fn sup_h_squared(&self, grid: &DomainGrid) -> f64 {
        let dim = self.dim;
        (0..grid.len())
            .filter(|&p| grid.role(p) == crate::mesh::Role::Sigma)
            .map(|p| {
                let b = self.bdry(p);
                crate::fields::inner(&b.ghat_inv, &b.h, &b.h, dim)
            })
            .fold(0.0, f64::max)
    }
}

/// Tangential block of `g` embedded in ambient indices, and its inverse.
pub fn tangential_block(grid: &DomainGrid, g: &Mat3) -> (Mat3, Mat3, f64) {
    let t = grid.tangential_axes();
    let m = t.len();
    let mut small = ZERO3;
    for i in 0..m {
        for j in 0..m {
            small[i][j] = g[t[i]][t[j]];
        }
    }
    let sinv = inverse(&small, m);
    let d = det(&small, m);
    let mut ghat = ZERO3;
    let mut ghat_inv = ZERO3;
    for i in 0..m {
        for j in 0..m {
            ghat[t[i]][t[j]] = small[i][j];
            ghat_inv[t[i]][t[j]] = sinv[i][j];
        }
    }
    (ghat, ghat_inv, d.sqrt())
}

/// Curvature of `metric` with the grid stencils.
pub fn curvature(grid: &DomainGrid, metric: &MetricField) -> Result<CurvatureData> {
    metric.check(grid)?;
    let dim = grid.dim;
    let n = grid.len();
    let pairs = comp_pairs(dim);
    let comps: Vec<Vec<f64>> = pairs.iter().map(|&(i, j)| metric.g.iter().map(|m| m[i][j]).collect()).collect();
    let cidx = |i: usize, j: usize| pairs.iter().position(|&(a, b)| (a, b) == (i.min(j), i.max(j))).unwrap();

    let mut nodes = Vec::with_capacity(n);
    let mut boundary = vec![None; n];
    let na = grid.sigma.axis;
    for p in 0..n {
        let g = metric.g[p];
        let ginv = inverse(&g, dim);
        // dg[k][i][j] = ∂_k g_ij, ddg[k][l][i][j] = ∂_k ∂_l g_ij
        let mut dg = [[[0.0; 3]; 3]; 3];
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..dim {
            let s = grid.d1(p, k);
            for i in 0..dim {
                for j in i..dim {
                    let v = s.apply(&comps[cidx(i, j)]);
                    dg[k][i][j] = v;
                    dg[k][j][i] = v;
                }
            }
            for l in k..dim {
                let s2 = grid.d2(p, k, l);
                for i in 0..dim {
                    for j in i..dim {
                        let v = s2.apply(&comps[cidx(i, j)]);
                        ddg[k][l][i][j] = v;
                        ddg[k][l][j][i] = v;
                        ddg[l][k][i][j] = v;
                        ddg[l][k][j][i] = v;
                    }
                }
            }
        }
        // lowered Christoffel Γ_{d,bc} and its derivative
        let mut low = [[[0.0; 3]; 3]; 3];
        let mut dlow = [[[[0.0; 3]; 3]; 3]; 3];
        for d in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    low[d][b][c] = 0.5 * (dg[b][c][d] + dg[c][b][d] - dg[d][b][c]);
                    for k in 0..dim {
                        dlow[k][d][b][c] = 0.5 * (ddg[k][b][c][d] + ddg[k][c][b][d] - ddg[k][d][b][c]);
                    }
                }
            }
        }
        let mut chr = [[[0.0; 3]; 3]; 3];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    chr[a][b][c] = (0..dim).map(|d| ginv[a][d] * low[d][b][c]).sum();
                }
            }
        }
        // ∂_k g^{ad} = -g^{ae} ∂_k g_ef g^{fd}
        let mut dginv = [ZERO3; 3];
        for (k, dgk) in dginv.iter_mut().enumerate().take(dim) {
            let t = matmul(&matmul(&ginv, &dg[k], dim), &ginv, dim);
            for a in 0..dim {
                for d in 0..dim {
                    dgk[a][d] = -t[a][d];
                }
            }
        }
        // dchr[k][a][b][c] = ∂_k Γ^a_bc
        let mut dchr = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    for c in 0..dim {
                        let mut s = 0.0;
                        for d in 0..dim {
                            s += dginv[k][a][d] * low[d][b][c] + ginv[a][d] * dlow[k][d][b][c];
                        }
                        dchr[k][a][b][c] = s;
                    }
                }
            }
        }
        let mut ric = ZERO3;
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += dchr[k][k][i][j] - dchr[j][k][i][k];
                    for l in 0..dim {
                        s += chr[k][k][l] * chr[l][i][j] - chr[k][j][l] * chr[l][i][k];
                    }
                }
                ric[i][j] = s;
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = 0.5 * (ric[i][j] + ric[j][i]);
                ric[i][j] = s;
                ric[j][i] = s;
            }
        }
        let mut div_chr = ZERO3;
        for b in 0..dim {
            for c in 0..dim {
                let mut s = 0.0;
                for a in 0..dim {
                    s += dchr[a][a][b][c];
                    for l in 0..dim {
                        s += chr[l][a][l] * chr[a][b][c];
                    }
                }
                div_chr[b][c] = s;
            }
        }
        let r = crate::fields::trace_with(&ginv, &ric, dim);
        if grid.on_sigma_face(p) {
            let gnn = ginv[na][na];
            let norm = gnn.sqrt();
            let mut nu = [0.0; 3];
            for (a, v) in nu.iter_mut().enumerate().take(dim) {
                *v = -ginv[a][na] / norm;
            }
            let (ghat, ghat_inv, sqrt_det_hat) = tangential_block(grid, &g);
            let mut h = ZERO3;
            for &i in &grid.tangential_axes() {
                for &j in &grid.tangential_axes() {
                    h[i][j] = chr[na][i][j] / norm;
                }
            }
            let mean = crate::fields::trace_with(&ghat_inv, &h, dim);
            boundary[p] = Some(BoundaryGeom { nu, ghat, ghat_inv, sqrt_det_hat, h, mean });
        }
        nodes.push(NodeGeom { g, ginv, sqrt_det: det(&g, dim).sqrt(), chr, div_chr, ric, r });
    }
    Ok(CurvatureData { dim, nodes, boundary })
}

/// Remainders of the first-order expansion at one step size.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorRow {
    pub t: f64,
    pub scalar_remainder: f64,
    pub mean_remainder: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaylorOutcome {
    Table(Vec<TaylorRow>),
    /// Some step left the SPD cone; the largest admissible step is reported.
    Inadmissible { largest_admissible_t: f64 },
}

/// `|R(g0 + t a) - R(g0) - t L(a)|_∞` and the mean-curvature analogue for
/// each `t`, over interior and Σ nodes.
pub fn taylor_check(grid: &DomainGrid, g0: &MetricField, a: &SymTensorField, t_values: &[f64]) -> Result<TaylorOutcome> {
    let base = curvature(grid, g0)?;
    let la = crate::operators::apply_l(grid, &base, a);
    let hd = crate::operators::apply_hdot(grid, &base, a);
    let admissible = |t: f64| g0.plus(a, t).first_degenerate().is_none();
    if let Some(&bad) = t_values.iter().find(|&&t| !admissible(t)) {
        let (mut lo, mut hi) = (0.0, bad.abs());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid.copysign(bad)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(TaylorOutcome::Inadmissible { largest_admissible_t: lo });
    }
    let mut rows = Vec::new();
    for &t in t_values {
        let c = curvature(grid, &g0.plus(a, t))?;
        let mut rs = 0.0f64;
        let mut rh = 0.0f64;
        for p in 0..grid.len() {
            match grid.role(p) {
                crate::mesh::Role::Interior => {
                    rs = rs.max((c.nodes[p].r - base.nodes[p].r - t * la[p]).abs());
                }
                crate::mesh::Role::Sigma => {
                    rs = rs.max((c.nodes[p].r - base.nodes[p].r - t * la[p]).abs());
                    rh = rh.max((c.bdry(p).mean - base.bdry(p).mean - t * hd[p]).abs());
                }
                _ => {}
            }
        }
        rows.push(TaylorRow { t, scalar_remainder: rs, mean_remainder: rh });
    }
    Ok(TaylorOutcome::Table(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::max_abs;
    use crate::mesh::Role;

    #[test]
    fn flat_is_flat() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let c = curvature(&g, &MetricField::flat(&g)).unwrap();
        assert_eq!(max_abs(&c.scalar()), 0.0);
        assert_eq!(max_abs(&c.mean_curvature()), 0.0);
    }

    #[test]
    fn degenerate_metric_reports_node() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let mut m = MetricField::flat(&g);
        m.g[40][1][1] = -1.0;
        match curvature(&g, &m) {
            Err(DeformError::Degenerate { node, .. }) => assert_eq!(node, 40),
            other => panic!("{other:?}"),
        }
    }

    fn interior_max(g: &DomainGrid, f: &[f64]) -> f64 {
        (0..g.len()).filter(|&p| g.role(p) != Role::SigmaPrime).map(|p| f[p].abs()).fold(0.0, f64::max)
    }

    #[test]
    fn trace_identity_exact() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let m = MetricField::conformal_bump(&g, 0.2, &[0.4, 0.3], 0.2);
        let c = curvature(&g, &m).unwrap();
        for n in &c.nodes {
            let tr = crate::fields::trace_with(&n.ginv, &n.ric, 2);
            assert_eq!(tr, n.r);
        }
    }

    #[test]
    fn scaling_by_constant() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let m = MetricField::conformal_bump(&g, 0.2, &[0.4, 0.3], 0.2);
        let c1 = curvature(&g, &m).unwrap();
        let k = 3.0;
        let mut m2 = m.clone();
        for x in m2.g.iter_mut() {
            for row in x.iter_mut() {
                for v in row.iter_mut() {
                    *v *= k;
                }
            }
        }
        let c2 = curvature(&g, &m2).unwrap();
        for p in 0..g.len() {
            let r1 = c1.nodes[p].r;
            assert!((c2.nodes[p].r - r1 / k).abs() <= 1e-12 * (1.0 + r1.abs()));
            if g.role(p) == Role::Sigma {
                let h1 = c1.bdry(p).mean;
                assert!((c2.bdry(p).mean - h1 / k.sqrt()).abs() <= 1e-12 * (1.0 + h1.abs()));
            }
        }
    }

    #[test]
    fn circle_boundary_has_mean_curvature_one_over_r() {
        // e^{-2y/r} δ is the flat disk of radius r in log-polar form
        let g = DomainGrid::unit(2, 33).unwrap();
        let r = 2.0;
        let m = MetricField::conformal(&g, |x| -x[1] / r);
        let c = curvature(&g, &m).unwrap();
        for p in g.nodes_with(Role::Sigma) {
            assert!((c.bdry(p).mean - 1.0 / r).abs() < 1e-3, "{}", c.bdry(p).mean);
        }
        assert!(interior_max(&g, &c.scalar()) < 1e-2);
    }

    #[test]
    fn spd_check_in_taylor() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let m = MetricField::flat(&g);
        let a = SymTensorField::from_fn(&g, |_| [[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0; 3]]);
        match taylor_check(&g, &m, &a, &[0.5, 2.0]).unwrap() {
            TaylorOutcome::Inadmissible { largest_admissible_t } => {
                assert!((largest_admissible_t - 1.0).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_step_and_zero_tensor() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let m = MetricField::conformal_bump(&g, 0.1, &[0.5, 0.5], 0.2);
        let z = SymTensorField::zeros(&g);
        let TaylorOutcome::Table(rows) = taylor_check(&g, &m, &z, &[0.1, 0.01]).unwrap() else { panic!() };
        assert!(rows.iter().all(|r| r.scalar_remainder == 0.0 && r.mean_remainder == 0.0));
        let a = SymTensorField { dim: 2, data: m.g.clone(), mask: vec![true; g.len()] };
        let TaylorOutcome::Table(rows) = taylor_check(&g, &m, &a, &[0.0]).unwrap() else { panic!() };
        assert_eq!(rows[0].scalar_remainder, 0.0);
        assert_eq!(rows[0].mean_remainder, 0.0);
    }
}
