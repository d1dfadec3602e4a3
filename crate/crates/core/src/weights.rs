//! Approximate distance θ to Σ′, the degenerate weight ρ = ρ̃(θ)^N, the
//! radius function φ, and the weighted norms built from them.
//!
//! θ is a smooth soft-minimum of the distances to the planar pieces of Σ′,
//! `(Σ d_i^{-p})^{-1/p}`, which stays within a factor `k^{-1/p}` of the exact
//! distance and is smooth away from Σ′ itself. Beyond `4 r0` it is capped
//! by a C² profile.

use crate::error::{DeformError, Result};
use crate::fields::{SymTensorField, Vec3};
use crate::mesh::{DomainGrid, Role};

/// Quintic smoothstep cutoff: 0 for `t <= 1/2`, 1 for `t >= 1`, C² in between.
pub fn eta(t: f64) -> f64 {
    let s = ((t - 0.5) / 0.5).clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub epsilon: f64,
    pub r0: f64,
    pub r1: f64,
    pub n_power: u32,
    /// Upper bound accepted for the measured C₁.
    pub c1_bound: f64,
    /// Upper bound accepted for the measured C₂.
    pub c2_bound: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams { epsilon: 0.1, r0: 0.3, r1: 0.15, n_power: 8, c1_bound: 2.0, c2_bound: 50.0 }
    }
}

impl WeightParams {
    pub fn validate(&self, grid: &DomainGrid) -> Result<()> {
        let min_ext = grid.extents[..grid.dim].iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.r1 > 0.0 && self.r1 < self.r0) {
            return Err(DeformError::Config(format!("weights: need 0 < r1 < r0, got r1 = {}, r0 = {}", self.r1, self.r0)));
        }
        if !(self.r0 < min_ext / 2.0) {
            return Err(DeformError::Config(format!("weights: r0 = {} must be below extent/2 = {}", self.r0, min_ext / 2.0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.2) {
            return Err(DeformError::Config(format!("weights: epsilon = {} outside (0, 0.2]", self.epsilon)));
        }
        if self.n_power < 4 {
            return Err(DeformError::Config(format!("weights: N = {} < 4", self.n_power)));
        }
        Ok(())
    }

    /// Soft-min exponent: large enough that `k^{-1/p} >= 1 - ε` with margin.
    pub fn softmin_power(&self, faces: usize) -> f64 {
        let need = (faces as f64).ln() / -(1.0 - self.epsilon).ln();
        (1.25 * need).max(20.0)
    }

    /// Profile ρ̃ and its first two derivatives.
    pub fn rho_tilde(&self, t: f64) -> [f64; 3] {
        let (r0, r1) = (self.r0, self.r1);
        if t <= r1 {
            return [t, 1.0, 0.0];
        }
        if t >= r0 {
            return [1.0, 0.0, 0.0];
        }
        let w = r0 - r1;
        let s = (t - r1) / w;
        // value/slope matching at both ends, zero curvature at both ends
        let st = [s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * s * s * (1.0 - s) * (1.0 - s), 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)];
        let hm = [
            s - 6.0 * s.powi(3) + 8.0 * s.powi(4) - 3.0 * s.powi(5),
            1.0 - 18.0 * s * s + 32.0 * s.powi(3) - 15.0 * s.powi(4),
            -36.0 * s + 96.0 * s * s - 60.0 * s.powi(3),
        ];
        [
            r1 + (1.0 - r1) * st[0] + w * hm[0],
            ((1.0 - r1) * st[1] + w * hm[1]) / w,
            ((1.0 - r1) * st[2] + w * hm[2]) / (w * w),
        ]
    }
}

/// θ with gradient and Hessian at one point (model coordinates).
#[derive(Clone, Copy, Debug)]
pub struct ThetaJet {
    pub value: f64,
    pub grad: Vec3,
    pub hess: [[f64; 3]; 3],
}

fn faces(grid: &DomainGrid, x: [f64; 3]) -> Vec<(f64, Vec3)> {
    let mut out = Vec::with_capacity(2 * grid.dim - 1);
    for a in 0..grid.dim {
        let mut n = [0.0; 3];
        if a != grid.sigma.axis {
            n[a] = 1.0;
            out.push((x[a].max(0.0), n));
        }
        n[a] = -1.0;
        out.push(((grid.extents[a] - x[a]).max(0.0), n));
    }
    out
}

/// Evaluate θ and its derivatives at `x`.
pub fn theta_jet(grid: &DomainGrid, params: &WeightParams, x: [f64; 3]) -> ThetaJet {
    let fs = faces(grid, x);
    let p = params.softmin_power(fs.len());
    let dim = grid.dim;
    let mut jet = ThetaJet { value: 0.0, grad: [0.0; 3], hess: [[0.0; 3]; 3] };
    let dmin = fs.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    if dmin <= 0.0 {
        return jet;
    }
    // scale by dmin so the powers stay in range
    let sum: f64 = fs.iter().map(|(d, _)| (dmin / d).powf(p)).sum();
    let th = dmin * sum.powf(-1.0 / p);
    let w: Vec<f64> = fs.iter().map(|(d, _)| (th / d).powf(p + 1.0)).collect();
    let mut grad = [0.0; 3];
    for ((_, n), wi) in fs.iter().zip(&w) {
        for a in 0..dim {
            grad[a] += wi * n[a];
        }
    }
    let mut hess = [[0.0; 3]; 3];
    for ((d, n), wi) in fs.iter().zip(&w) {
        // d w_i = (p+1) w_i (dθ/θ - n_i/d_i)
        for a in 0..dim {
            let dw = (p + 1.0) * wi * (grad[a] / th - n[a] / d);
            for b in 0..dim {
                hess[a][b] += dw * n[b];
            }
        }
    }
    // C² cap beyond T = 4 r0
    let t_cap = 4.0 * params.r0;
    let (c, c1, c2) = cap(th, t_cap);
    jet.value = c;
    for a in 0..dim {
        jet.grad[a] = c1 * grad[a];
        for b in 0..dim {
            jet.hess[a][b] = c1 * hess[a][b] + c2 * grad[a] * grad[b];
        }
    }
    jet
}

fn cap(t: f64, big_t: f64) -> (f64, f64, f64) {
    if t <= big_t {
        return (t, 1.0, 0.0);
    }
    let s = ((t - big_t) / big_t).min(1.0);
    let v = big_t + big_t * (s - 2.5 * s.powi(4) + 3.0 * s.powi(5) - s.powi(6));
    if s >= 1.0 {
        return (v, 0.0, 0.0);
    }
    let d1 = 1.0 - 10.0 * s.powi(3) + 15.0 * s.powi(4) - 6.0 * s.powi(5);
    let d2 = (-30.0 * s * s + 60.0 * s.powi(3) - 30.0 * s.powi(4)) / big_t;
    (v, d1, d2)
}

/// One failed invariant: which check, how many nodes, and where the first one sits.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightViolation {
    pub check: &'static str,
    pub count: usize,
    pub first: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct WeightSystem {
    pub params: WeightParams,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub grad_theta: Vec<Vec3>,
    /// Frobenius norm of the Hessian of θ.
    pub hess_theta: Vec<f64>,
    /// Measured C₁ and C₂ on `{2h < θ < r0}`.
    pub c1: f64,
    pub c2: f64,
    /// Measured `sup φ^k ρ^{-1} |D^k ρ|` for k = 1, 2.
    pub c_rho: [f64; 2],
}

/// Build θ, ρ, φ for the grid and verify every invariant node by node.
pub fn build_weights(grid: &DomainGrid, params: WeightParams) -> Result<WeightSystem> {
    params.validate(grid)?;
    let ws = assemble(grid, params, params.n_power as i32);
    if let Some(v) = ws.violations(grid).into_iter().next() {
        return Err(DeformError::Weights { check: v.check.to_string(), count: v.count, first: v.first });
    }
    Ok(ws)
}

impl WeightSystem {
    /// Same θ and φ but ρ ≡ 1, the unweighted reduction.
    pub fn unweighted(grid: &DomainGrid, params: WeightParams) -> Self {
        assemble(grid, params, 0)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Node-by-node invariant checks; empty when all hold.
    pub fn violations(&self, grid: &DomainGrid) -> Vec<WeightViolation> {
        let p = &self.params;
        let eps = p.epsilon;
        let hmin = min_h(grid);
        let n = p.n_power as i32;
        let mut out: Vec<WeightViolation> = Vec::new();
        let mut record = |check: &'static str, node: usize| {
            if let Some(v) = out.iter_mut().find(|v| v.check == check) {
                v.count += 1;
            } else {
                out.push(WeightViolation { check, count: 1, first: grid.coord(node) });
            }
        };
        for q in 0..grid.len() {
            let x = grid.coord(q);
            let d = grid.distance_to_sigma_prime(x);
            let th = self.theta[q];
            if d < 4.0 * p.r0 && !((1.0 - eps) * d <= th && th <= (1.0 + eps) * d) {
                record("distance equivalence", q);
            }
            if th > 2.0 * hmin && th < p.r0 {
                let g = norm3(&self.grad_theta[q]);
                if !(g <= p.c1_bound && g >= 1.0 / p.c1_bound) {
                    record("first derivative bound", q);
                }
                if !(th * self.hess_theta[q] <= p.c2_bound) {
                    record("second derivative bound", q);
                }
            }
            let r = self.rho[q];
            if th > p.r0 && r != 1.0 {
                record("rho equals one outside the collar", q);
            }
            if th < p.r1 && ((r - th.powi(n)).abs() > 1e-14 * th.powi(n)) {
                record("rho equals theta^N near the cut", q);
            }
            let ph = self.phi[q];
            if th < 4.0 * p.r0 && ph != 0.5 * th {
                record("phi equals theta/2", q);
            }
            let positive = grid.role(q) == Role::SigmaPrime || grid.role(q) == Role::Gamma || ph > 0.0;
            if !(positive && ph < 1.0) {
                record("phi in (0, 1)", q);
            }
        }
        if !(self.c_rho[0].is_finite() && self.c_rho[1].is_finite()) {
            out.push(WeightViolation { check: "rho derivative bound", count: 1, first: [0.0; 3] });
        }
        out
    }

    /// Mask of nodes with θ at least `cut`.
    pub fn above(&self, cut: f64) -> Vec<bool> {
        self.theta.iter().map(|&t| t >= cut).collect()
    }
}

fn min_h(grid: &DomainGrid) -> f64 {
    grid.h[..grid.dim].iter().cloned().fold(f64::INFINITY, f64::min)
}

fn norm3(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn frob(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn assemble(grid: &DomainGrid, params: WeightParams, n: i32) -> WeightSystem {
    let hmin = min_h(grid);
    let len = grid.len();
    let mut ws = WeightSystem {
        params,
        theta: Vec::with_capacity(len),
        rho: Vec::with_capacity(len),
        phi: Vec::with_capacity(len),
        grad_theta: Vec::with_capacity(len),
        hess_theta: Vec::with_capacity(len),
        c1: 0.0,
        c2: 0.0,
        c_rho: [0.0; 2],
    };
    let nf = n as f64;
    let mut c1_hi: f64 = 0.0;
    let mut c1_lo: f64 = f64::INFINITY;
    for q in 0..len {
        let jet = theta_jet(grid, &params, grid.coord(q));
        let th = jet.value;
        let [rt, rt1, rt2] = params.rho_tilde(th);
        let rho = if n == 0 { 1.0 } else { rt.powi(n) };
        let gn = norm3(&jet.grad);
        let hn = frob(&jet.hess);
        let phi = 0.5 * th;
        if th > 2.0 * hmin && th < params.r0 {
            c1_hi = c1_hi.max(gn);
            c1_lo = c1_lo.min(gn);
            ws.c2 = ws.c2.max(th * hn);
        }
        if th > 0.0 && n > 0 {
            let l1 = nf * rt1 / rt;
            let k1 = phi * l1 * gn;
            let mut d2 = [[0.0; 3]; 3];
            for a in 0..grid.dim {
                for b in 0..grid.dim {
                    d2[a][b] = (nf * (nf - 1.0) * (rt1 / rt).powi(2) + nf * rt2 / rt) * jet.grad[a] * jet.grad[b]
                        + l1 * jet.hess[a][b];
                }
            }
            ws.c_rho[0] = ws.c_rho[0].max(k1);
            ws.c_rho[1] = ws.c_rho[1].max(phi * phi * frob(&d2));
        }
        ws.theta.push(th);
        ws.rho.push(rho);
        ws.phi.push(phi);
        ws.grad_theta.push(jet.grad);
        ws.hess_theta.push(hn);
    }
    ws.c1 = if c1_lo.is_finite() { c1_hi.max(1.0 / c1_lo) } else { 1.0 };
    ws
}

/// Norms measured with the model (Euclidean) measure and derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L2Rho,
    L2RhoInv,
    /// `Σ_{j<=k} ‖D^j f‖²_{L²_ρ}`, k ≤ 2.
    HkRho(usize),
    /// `sup φ^r ρ^s Σ_{j<=2} φ^j |D^j f|`.
    WeightedSup { r: f64, s: f64 },
    /// Boundary norms; evaluated by the assembled linear system.
    D,
    DStar,
}

/// Euclidean length of the gradient and Frobenius norm of the Hessian, per node.
pub fn derivative_norms(grid: &DomainGrid, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = grid.dim;
    let mut g1 = vec![0.0; grid.len()];
    let mut g2 = vec![0.0; grid.len()];
    for a in 0..dim {
        for (o, v) in g1.iter_mut().zip(grid.diff1(f, a)) {
            *o += v * v;
        }
        for b in 0..dim {
            for (o, v) in g2.iter_mut().zip(grid.diff2(f, a, b)) {
                *o += v * v;
            }
        }
    }
    (g1.into_iter().map(f64::sqrt).collect(), g2.into_iter().map(f64::sqrt).collect())
}

pub fn weighted_norm(grid: &DomainGrid, ws: &WeightSystem, f: &[f64], kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L2Rho => Ok(grid.integrate(&f.iter().zip(&ws.rho).map(|(v, r)| v * v * r).collect::<Vec<_>>()).sqrt()),
        NormKind::L2RhoInv => {
            let mut s = 0.0;
            for q in 0..grid.len() {
                if f[q] == 0.0 {
                    continue;
                }
                if ws.rho[q] == 0.0 {
                    return Ok(f64::INFINITY);
                }
                s += grid.volume_weight(q) * f[q] * f[q] / ws.rho[q];
            }
            Ok(s.sqrt())
        }
        NormKind::HkRho(k) => {
            if k > 2 {
                return Err(DeformError::Config(format!("H^k_rho norm supports k <= 2, got {k}")));
            }
            let (g1, g2) = derivative_norms(grid, f);
            let mut s = 0.0;
            for q in 0..grid.len() {
                let mut v = f[q] * f[q];
                if k >= 1 {
                    v += g1[q] * g1[q];
                }
                if k >= 2 {
                    v += g2[q] * g2[q];
                }
                s += grid.volume_weight(q) * v * ws.rho[q];
            }
            Ok(s.sqrt())
        }
        NormKind::WeightedSup { r, s } => {
            let (g1, g2) = derivative_norms(grid, f);
            let mut best: f64 = 0.0;
            for q in 0..grid.len() {
                let ph = ws.phi[q];
                let body = f[q].abs() + ph * g1[q] + ph * ph * g2[q];
                if body == 0.0 {
                    continue;
                }
                let w = ph.powf(r) * ws.rho[q].powf(s);
                best = best.max(if w.is_finite() { w * body } else { f64::INFINITY });
            }
            Ok(best)
        }
        NormKind::D | NormKind::DStar => {
            Err(DeformError::Ordering("boundary norms need an assembled linear system; use LinearizedSystem::d_norm".into()))
        }
    }
}

/// Weighted sup norm of a tensor field: the largest value over its components.
pub fn weighted_sup_tensor(grid: &DomainGrid, ws: &WeightSystem, a: &SymTensorField, r: f64, s: f64) -> f64 {
    let dim = grid.dim;
    let mut best: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            let comp: Vec<f64> = a.data.iter().map(|m| m[i][j]).collect();
            let v = weighted_norm(grid, ws, &comp, NormKind::WeightedSup { r, s }).unwrap_or(f64::INFINITY);
            best = best.max(v);
        }
    }
    best
}

/// `‖f‖_{H¹}` with the model measure, no weight.
pub fn h1_norm(grid: &DomainGrid, f: &[f64]) -> f64 {
    let (g1, _) = derivative_norms(grid, f);
    let v: Vec<f64> = f.iter().zip(&g1).map(|(a, b)| a * a + b * b).collect();
    grid.integrate(&v).sqrt()
}

/// `∫u²θ^{-2}ρ / ‖uρ^{1/2}‖²_{H¹}`.
pub fn hardy_ratio(grid: &DomainGrid, ws: &WeightSystem, u: &[f64]) -> Result<f64> {
    let mut num = vec![0.0; grid.len()];
    for q in 0..grid.len() {
        if u[q] == 0.0 {
            continue;
        }
        if matches!(grid.role(q), Role::SigmaPrime | Role::Gamma) || ws.theta[q] == 0.0 {
            return Err(DeformError::UndefinedRatio(format!("test function is nonzero on the cut boundary at {:?}", grid.coord(q))));
        }
        num[q] = u[q] * u[q] * ws.rho[q] / (ws.theta[q] * ws.theta[q]);
    }
    let w: Vec<f64> = u.iter().zip(&ws.rho).map(|(a, r)| a * r.sqrt()).collect();
    let den = h1_norm(grid, &w).powi(2);
    if den == 0.0 {
        return Err(DeformError::UndefinedRatio("zero denominator".into()));
    }
    Ok(grid.integrate(&num) / den)
}

/// Member `k` of a family of bumps that touch Σ inside boxes shrinking toward
/// the corner at the origin: `[c-s, c+s] x [0, s]` with `s = 0.12·0.9^k`,
/// `c = 0.5·0.75^k`. The functions do not vanish on Σ.
pub fn corner_family(grid: &DomainGrid, k: usize) -> Vec<f64> {
    let s = 0.12 * 0.9f64.powi(k as i32);
    let c = 0.5 * 0.75f64.powi(k as i32);
    let axis = grid.sigma.axis;
    let tang = grid.tangential_axes();
    grid.sample(|x| {
        let mut v = 1.0;
        for (m, &a) in tang.iter().enumerate() {
            let center = if m == 0 { c } else { 0.5 * grid.extents[a] };
            v *= bump1((x[a] - center) / s);
        }
        let t = x[axis] / s;
        v * if t < 1.0 { (0.5 * std::f64::consts::PI * t).cos().powi(2) } else { 0.0 }
    })
}

/// `(1 - t²)³` on `|t| < 1`.
pub fn bump1(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - t * t).powi(3)
    } else {
        0.0
    }
}
