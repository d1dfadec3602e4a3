//! Numerical test of the generic condition `ker Φ* = {0}` by a refinement
//! study of the lowest singular values of `u -> (L*u, u_ν ĝ − u h)`, and
//! the geometric consequences that must hold when the kernel is nontrivial.

use serde::{Deserialize, Serialize};

use crate::error::{DeformError, Result};
use crate::fields::{inner, n_comp};
use crate::mesh::{DomainGrid, Role};
use crate::operators::{lstar_rows, phi_sigma_rows, ScalarBc, SparseRow};
use crate::solver::metric_block;
use crate::sparse::Csr;
use crate::spectral::{add, lowest_modes, ModeOptions};
use crate::tensor::{curvature, CurvatureData, MetricField};

/// Lowest singular values of the discrete `Φ*` at one resolution.
#[derive(Clone, Debug)]
pub struct SigmaProfile {
    /// Ascending.
    pub sigma: Vec<f64>,
    /// Values at or below this are indistinguishable from zero.
    pub floor: f64,
    /// Unit-L² right singular vectors, columns matching `sigma`.
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVerdict {
    Generic,
    NonGeneric,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelReport {
    pub resolutions: Vec<usize>,
    pub h: Vec<f64>,
    /// `sigmas[r][k]`: k-th lowest singular value at resolution `r`.
    pub sigmas: Vec<Vec<f64>>,
    pub floors: Vec<f64>,
    /// `orders[r][k]` between resolutions `r` and `r + 1`.
    pub orders: Vec<Vec<f64>>,
    pub dimension: Option<usize>,
    pub verdict: KernelVerdict,
    pub note: String,
    /// Kernel basis at the finest resolution, unit L².
    #[serde(skip)]
    pub basis: Vec<Vec<f64>>,
}

impl KernelReport {
    pub fn finest_sigmas(&self) -> &[f64] {
        self.sigmas.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Normal matrix of `Φ*` (no weight, no boundary constraints) and the
/// volume mass matrix.
pub fn phi_star_normal(grid: &DomainGrid, cd: &CurvatureData) -> (Csr, Csr) {
    let n = grid.len();
    let dim = grid.dim;
    let nc = n_comp(dim);
    let mut rows = Vec::with_capacity(n * nc);
    let mut w = Vec::with_capacity(n * nc);
    for p in 0..n {
        rows.extend(lstar_rows(grid, cd, p, ScalarBc::OneSided));
        let geo = &cd.nodes[p];
        let s = grid.volume_weight(p) * geo.sqrt_det;
        let blk = metric_block(&geo.ginv, dim);
        for c1 in 0..nc {
            w.push((0..nc).map(|c2| (p * nc + c2, s * blk[c1][c2])).collect::<SparseRow>());
        }
    }
    let a_in = Csr::from_rows(n, &rows);
    let w_in = Csr::from_rows(n * nc, &w);
    let mut brows = Vec::new();
    let mut bw: Vec<SparseRow> = Vec::new();
    for p in (0..n).filter(|&p| grid.role(p) == Role::Sigma) {
        let b = cd.bdry(p);
        let s = grid.surface_weight(p) * b.sqrt_det_hat;
        let blk = metric_block(&b.ghat_inv, dim);
        let base = brows.len();
        brows.extend(phi_sigma_rows(grid, cd, p));
        for c1 in 0..nc {
            bw.push((0..nc).map(|c2| (base + c2, s * blk[c1][c2])).collect());
        }
    }
    let a_b = Csr::from_rows(n, &brows);
    let w_b = Csr::from_rows(brows.len(), &bw);
    let normal = add(&a_in.transpose().matmul(&w_in.matmul(&a_in)), &a_b.transpose().matmul(&w_b.matmul(&a_b)));
    let mass = Csr::diag(&(0..n).map(|p| grid.volume_weight(p) * cd.nodes[p].sqrt_det).collect::<Vec<_>>());
    (normal, mass)
}

/// The `count` lowest singular values of `Φ*` relative to the L² norm of `u`.
pub fn sigma_profile(grid: &DomainGrid, cd: &CurvatureData, count: usize) -> Result<SigmaProfile> {
    let (a, m) = phi_star_normal(grid, cd);
    let modes = lowest_modes(&a, &m, ModeOptions { count, guard: 6, shift: 1e-12, max_iter: 400, tol: 1e-12, seed: 11 })?;
    let scale = (0..a.nrows)
        .map(|i| {
            let (c, v) = a.row(i);
            let d = c.iter().zip(v).find(|(j, _)| **j == i).map_or(0.0, |(_, x)| *x);
            d / m.row(i).1[0]
        })
        .fold(0.0f64, f64::max)
        .sqrt();
    let sigma = modes.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    let vectors = (0..modes.vectors.ncols()).map(|j| (0..grid.len()).map(|i| modes.vectors[(i, j)]).collect()).collect();
    Ok(SigmaProfile { sigma, floor: 1e-6 * scale, vectors })
}

/// Refinement study over `resolutions` (ascending, at least two). `build`
/// returns the grid and metric at a resolution.
pub fn kernel_scan(resolutions: &[usize], build: impl Fn(usize) -> Result<(DomainGrid, MetricField)>) -> Result<KernelReport> {
    if resolutions.len() < 2 || resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DeformError::Config("kernel scan needs at least two increasing resolutions".into()));
    }
    let mut dim = 0;
    let mut profiles = Vec::new();
    let mut hs = Vec::new();
    for &r in resolutions {
        let (grid, g) = build(r)?;
        dim = grid.dim;
        let cd = curvature(&grid, &g)?;
        profiles.push(sigma_profile(&grid, &cd, dim + 2)?);
        hs.push(grid.h[..dim].iter().cloned().fold(0.0, f64::max));
    }
    let count = dim + 2;
    let orders: Vec<Vec<f64>> = (0..profiles.len() - 1)
        .map(|r| {
            (0..count)
                .map(|k| {
                    let (a, b) = (profiles[r].sigma[k], profiles[r + 1].sigma[k]);
                    (a / b).ln() / (hs[r] / hs[r + 1]).ln()
                })
                .collect()
        })
        .collect();
    // index k shrinks if every refinement step has order ≥ 1 or sits on the roundoff floor
    let shrinks: Vec<bool> = (0..count)
        .map(|k| {
            (0..profiles.len() - 1).all(|r| {
                let fine = &profiles[r + 1];
                fine.sigma[k] <= fine.floor || (orders[r][k] >= 1.0 && profiles[r].sigma[k] > profiles[r].floor)
            })
        })
        .collect();
    let k = shrinks.iter().take_while(|s| **s).count();
    let mut note = String::new();
    let verdict = if shrinks[k..].iter().any(|s| *s) {
        note = format!("shrinking indices are not a prefix: {shrinks:?}");
        KernelVerdict::Indeterminate
    } else if k >= count {
        note = "every computed value shrinks".into();
        KernelVerdict::Indeterminate
    } else {
        let next: Vec<f64> = profiles.iter().map(|p| p.sigma[k]).collect();
        let stable = next.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() <= 0.25) && profiles.iter().all(|p| p.sigma[k] > p.floor);
        if !stable {
            note = format!("no clean gap: sigma[{k}] across resolutions {next:?}");
            KernelVerdict::Indeterminate
        } else if k == 0 {
            KernelVerdict::Generic
        } else {
            KernelVerdict::NonGeneric
        }
    };
    let dimension = if verdict == KernelVerdict::Indeterminate { None } else { Some(k) };
    let basis = match dimension {
        Some(k) => profiles.last().unwrap().vectors[..k].to_vec(),
        None => vec![],
    };
    Ok(KernelReport {
        resolutions: resolutions.to_vec(),
        h: hs,
        sigmas: profiles.iter().map(|p| p.sigma.clone()).collect(),
        floors: profiles.iter().map(|p| p.floor).collect(),
        orders,
        dimension,
        verdict,
        note,
        basis,
    })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StaticReport {
    /// `sup |dR|_g` over nodes at least two away from ∂Ω.
    pub r_gradient: f64,
    /// `max R − min R`.
    pub r_oscillation: f64,
    /// `sup |∇H|_ĝ` over Σ nodes at least two away from Γ.
    pub h_gradient: f64,
    pub h_oscillation: f64,
    /// `sup_Σ |h − H ĝ/(n−1)|_ĝ`; absent in dimension 2, where it is vacuous.
    pub umbilic: Option<f64>,
    /// `sup_Σ |u_{tν} − u Ric(e_t, ν)| / sup|u|` over kernel elements.
    pub ode: f64,
    pub scale: f64,
    /// `10 h² scale`.
    pub tol: f64,
    pub constant_r: bool,
    pub locally_constant_h: bool,
    pub umbilic_pass: bool,
    pub ode_pass: bool,
}

impl StaticReport {
    pub fn all_pass(&self) -> bool {
        self.constant_r && self.locally_constant_h && self.umbilic_pass && self.ode_pass
    }
}

/// Measured deviations from the consequences of a nontrivial kernel:
/// constant scalar curvature, locally constant mean curvature, umbilic Σ
/// and the boundary ODE satisfied by each kernel element.
pub fn check_static_properties(grid: &DomainGrid, cd: &CurvatureData, basis: &[Vec<f64>]) -> StaticReport {
    let dim = grid.dim;
    let n = grid.len();
    let r = cd.scalar();
    let hmean = cd.mean_curvature();
    let sigma: Vec<usize> = grid.nodes_with(Role::Sigma);
    let grads: Vec<Vec<f64>> = (0..dim).map(|a| grid.diff1(&r, a)).collect();
    // gradients are read where the difference quotient only sees centered-stencil values
    let deep = |p: usize, axes: &[usize]| {
        let ijk = grid.ijk(p);
        axes.iter().all(|&a| ijk[a] >= 2 && ijk[a] + 2 < grid.n[a])
    };
    let all_axes: Vec<usize> = (0..dim).collect();
    let mut r_gradient: f64 = 0.0;
    for p in (0..n).filter(|&p| deep(p, &all_axes)) {
        let mut dr = [0.0; 3];
        for a in 0..dim {
            dr[a] = grads[a][p];
        }
        let ginv = &cd.nodes[p].ginv;
        let mut s = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                s += ginv[a][b] * dr[a] * dr[b];
            }
        }
        r_gradient = r_gradient.max(s.max(0.0).sqrt());
    }
    let osc = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    };
    let r_oscillation = osc(&mut r.iter().cloned());
    let tang = grid.tangential_axes();
    let hgrads: Vec<Vec<f64>> = tang.iter().map(|&a| grid.diff1(&hmean, a)).collect();
    let mut h_gradient: f64 = 0.0;
    for &p in sigma.iter().filter(|&&p| deep(p, &tang)) {
        let b = cd.bdry(p);
        let mut s = 0.0;
        for (i, &a) in tang.iter().enumerate() {
            for (j, &c) in tang.iter().enumerate() {
                s += b.ghat_inv[a][c] * hgrads[i][p] * hgrads[j][p];
            }
        }
        h_gradient = h_gradient.max(s.max(0.0).sqrt());
    }
    let h_oscillation = osc(&mut sigma.iter().map(|&p| hmean[p]));
    let umbilic = (dim >= 3).then(|| {
        sigma
            .iter()
            .map(|&p| {
                let b = cd.bdry(p);
                let mut d = b.h;
                for i in 0..3 {
                    for j in 0..3 {
                        d[i][j] -= b.mean / (dim as f64 - 1.0) * b.ghat[i][j];
                    }
                }
                inner(&b.ghat_inv, &d, &d, dim).max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    });
    let mut ode: f64 = 0.0;
    for u in basis {
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if umax == 0.0 {
            continue;
        }
        for &p in &sigma {
            let geo = &cd.nodes[p];
            let nu = cd.bdry(p).nu;
            let du: Vec<f64> = (0..dim).map(|a| grid.d1(p, a).apply(u)).collect();
            for &t in &tang {
                let mut v = 0.0;
                for (b, &nb) in nu.iter().enumerate().take(dim) {
                    let mut hess = grid.d2(p, t, b).apply(u);
                    for c in 0..dim {
                        hess -= geo.chr[c][t][b] * du[c];
                    }
                    v += nb * (hess - u[p] * geo.ric[t][b]);
                }
                ode = ode.max(v.abs() / umax);
            }
        }
    }
    let h = grid.h[..dim].iter().cloned().fold(0.0, f64::max);
    let scale = 1.0f64.max(r.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(sigma.iter().fold(0.0f64, |m, &p| m.max(hmean[p].abs())));
    let tol = 10.0 * h * h * scale;
    StaticReport {
        r_gradient,
        r_oscillation,
        h_gradient,
        h_oscillation,
        umbilic,
        ode,
        scale,
        tol,
        constant_r: r_gradient <= tol && r_oscillation <= tol,
        locally_constant_h: h_gradient <= tol && h_oscillation <= tol,
        umbilic_pass: umbilic.is_none_or(|d| d <= tol),
        ode_pass: ode <= 10.0 * h * scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SigmaFace;
    use crate::tensor::MetricSpec;

    fn flat(r: usize) -> Result<(DomainGrid, MetricField)> {
        let g = DomainGrid::unit(2, r)?;
        let m = MetricField::flat(&g);
        Ok((g, m))
    }

    #[test]
    fn flat_kernel_is_one_and_x() {
        let rep = kernel_scan(&[17, 25], flat).unwrap();
        assert_eq!(rep.dimension, Some(2), "{rep:?}");
        let (g, _) = flat(25).unwrap();
        // both basis vectors lie in span{1, x}: fit and check the residual
        for u in &rep.basis {
            let (mut s1, mut sx, mut sxx, mut su, mut sxu) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for p in 0..g.len() {
                let x = g.coord(p)[0];
                s1 += 1.0;
                sx += x;
                sxx += x * x;
                su += u[p];
                sxu += x * u[p];
            }
            let det = s1 * sxx - sx * sx;
            let (c0, c1) = ((sxx * su - sx * sxu) / det, (s1 * sxu - sx * su) / det);
            let res = (0..g.len()).map(|p| (u[p] - c0 - c1 * g.coord(p)[0]).abs()).fold(0.0, f64::max);
            assert!(res < 1e-6, "{res}");
        }
    }

    #[test]
    fn left_sigma_gives_one_and_y() {
        let rep = kernel_scan(&[17, 25], |r| {
            let g = DomainGrid::build(2, &[1.0, 1.0], r, SigmaFace::left(), 0.3)?;
            let m = MetricField::flat(&g);
            Ok((g, m))
        })
        .unwrap();
        assert_eq!(rep.dimension, Some(2));
        let g = DomainGrid::build(2, &[1.0, 1.0], 25, SigmaFace::left(), 0.3).unwrap();
        for u in &rep.basis {
            // u is independent of x
            let d = g.diff1(u, 0);
            assert!(d.iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn bump_metric_is_generic() {
        let rep = kernel_scan(&[17, 25], |r| {
            let g = DomainGrid::unit(2, r)?;
            let m = MetricSpec::default_generic().build(&g)?;
            Ok((g, m))
        })
        .unwrap();
        assert_eq!(rep.dimension, Some(0), "{rep:?}");
        assert_eq!(rep.verdict, KernelVerdict::Generic);
    }

    #[test]
    fn flat_static_properties_exact() {
        let g = DomainGrid::unit(2, 17).unwrap();
        let cd = curvature(&g, &MetricField::flat(&g)).unwrap();
        let basis = vec![vec![1.0; g.len()], g.sample(|x| x[0])];
        let s = check_static_properties(&g, &cd, &basis);
        assert_eq!(s.r_gradient, 0.0);
        assert_eq!(s.h_gradient, 0.0);
        assert!(s.umbilic.is_none());
        assert!(s.ode < 1e-12);
        assert!(s.all_pass());
    }

    #[test]
    fn flat_box_is_umbilic() {
        let g = DomainGrid::unit(3, 17).unwrap();
        let cd = curvature(&g, &MetricField::flat(&g)).unwrap();
        let s = check_static_properties(&g, &cd, &[]);
        assert_eq!(s.umbilic, Some(0.0));
        assert!(s.umbilic_pass);
    }

    #[test]
    fn round_sphere_constants() {
        let g = DomainGrid::unit(2, 33).unwrap();
        let m = MetricField::round_sphere(&g, &[0.5, 0.0]);
        let cd = curvature(&g, &m).unwrap();
        let r = cd.scalar();
        let dev = r.iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-2, "{dev}");
        let s = check_static_properties(&g, &cd, &[]);
        assert!(s.constant_r && s.locally_constant_h, "{s:?}");
    }

    #[test]
    fn scan_needs_two_resolutions() {
        assert!(kernel_scan(&[17], flat).is_err());
    }
}
