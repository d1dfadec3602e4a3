//! Self-checks behind `deform verify`: each suite measures the properties
//! its module promises on small configurations and reports one row per
//! measured quantity.

use std::fmt;
use std::str::FromStr;

use faer::Side;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{DeformError, Result};
use crate::fields::{max_abs, SymTensorField};
use crate::generic::{check_static_properties, kernel_scan, KernelReport};
use crate::mesh::{DomainGrid, Role};
use crate::operators::{apply_hdot, apply_l, greens_residual};
use crate::picard::{manufactured_targets, manufactured_tensor, picard_run, PicardParams, Termination};
use crate::solver::{LinearizedSystem, SolverParams};
use crate::tensor::{curvature, MetricField, MetricSpec};
use crate::weights::{build_weights, corner_family, hardy_ratio, h1_norm, bump1, WeightParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Operators,
    Weights,
    Solver,
    Generic,
    Iteration,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Operators, Suite::Weights, Suite::Solver, Suite::Generic, Suite::Iteration];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::Weights => "weights",
            Suite::Solver => "solver",
            Suite::Generic => "generic",
            Suite::Iteration => "iteration",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = DeformError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(&[Suite::All])
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| DeformError::Config(format!("unknown suite '{s}'")))
    }
}

/// One measured quantity against its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10} {:<48} {:>12.4e}  {:<22} {}", self.suite, self.name, self.measured, self.bound, if self.pass { "pass" } else { "FAIL" })
    }
}

struct Rows {
    suite: &'static str,
    out: Vec<Check>,
}

impl Rows {
    fn at_most(&mut self, name: impl Into<String>, v: f64, bound: f64) {
        self.push(name, v, format!("<= {bound:.3e}"), v <= bound);
    }

    fn at_least(&mut self, name: impl Into<String>, v: f64, bound: f64) {
        self.push(name, v, format!(">= {bound:.3}"), v >= bound);
    }

    fn within(&mut self, name: impl Into<String>, v: f64, lo: f64, hi: f64) {
        self.push(name, v, format!("in [{lo}, {hi}]"), v >= lo && v <= hi);
    }

    fn equals(&mut self, name: impl Into<String>, v: f64, want: f64) {
        self.push(name, v, format!("== {want}"), v == want);
    }

    fn push(&mut self, name: impl Into<String>, measured: f64, bound: String, pass: bool) {
        self.out.push(Check { suite: self.suite, name: name.into(), measured, bound, pass });
    }
}

/// Run one suite (or all of them) with `res` as the base resolution; the
/// refinement studies pair it with `2 res − 1`.
pub fn run_suite(suite: Suite, res: usize) -> Result<Vec<Check>> {
    if !(9..=129).contains(&res) || res % 2 == 0 {
        return Err(DeformError::Config(format!("verify resolution must be odd and in [9, 129], got {res}")));
    }
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_suite(s, res)?);
            }
            Ok(out)
        }
        Suite::Operators => operators(res),
        Suite::Weights => weights(res),
        Suite::Solver => solver(res),
        Suite::Generic => generic(res),
        Suite::Iteration => iteration(res),
    }
}

fn fine(res: usize) -> usize {
    2 * res - 1
}

fn mid(res: usize) -> usize {
    3 * (res - 1) / 2 + 1
}

/// `exp(1 − 1/(1 − t²))` on `|t| < 1`.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Seeded smooth tensor field made of a few plane waves per component.
pub fn seeded_tensor(grid: &DomainGrid, seed: u64) -> SymTensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 5]> = (0..6)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.0..6.0)])
        .collect();
    SymTensorField::from_fn(grid, |x| {
        let mut m = [[0.0; 3]; 3];
        let mut k = 0;
        for i in 0..3 {
            for j in i..3 {
                let w = waves[k];
                let v = w[0] * (w[1] * x[0] + w[2] * x[1] + w[3] * x[2] + w[4]).sin();
                m[i][j] = v;
                m[j][i] = v;
                k += 1;
            }
        }
        m
    })
}

/// Seeded smooth scalar field.
pub fn seeded_scalar(grid: &DomainGrid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
    grid.sample(|x| w[0] * (w[1] * x[0] + w[2] * x[1] + 0.5 * x[2]).sin() + w[3] * x[0] * x[1] + w[4])
}

fn default_setup(res: usize) -> Result<(DomainGrid, MetricField)> {
    let g = DomainGrid::unit(2, res)?;
    let m = MetricSpec::default_generic().build(&g)?;
    Ok((g, m))
}

/// Largest deviation of `L(a)` from the central difference of `R` over
/// interior nodes (where the interior equation is imposed) and of `Ḣ(a)`
/// from that of `H` over Σ nodes, at step `t`.
pub fn linearization_error(grid: &DomainGrid, g0: &MetricField, a: &SymTensorField, t: f64) -> Result<(f64, f64)> {
    let cd = curvature(grid, g0)?;
    let cp = curvature(grid, &g0.plus(a, t))?;
    let cm = curvature(grid, &g0.plus(a, -t))?;
    let la = apply_l(grid, &cd, a);
    let hd = apply_hdot(grid, &cd, a);
    let (rp, rm, hp, hm) = (cp.scalar(), cm.scalar(), cp.mean_curvature(), cm.mean_curvature());
    let (mut er, mut eh) = (0.0f64, 0.0f64);
    for p in 0..grid.len() {
        match grid.role(p) {
            Role::Interior => er = er.max((la[p] - (rp[p] - rm[p]) / (2.0 * t)).abs()),
            Role::Sigma => eh = eh.max((hd[p] - (hp[p] - hm[p]) / (2.0 * t)).abs()),
            _ => {}
        }
    }
    Ok((er, eh))
}

/// Compactly supported test pair for the integration-by-parts identity.
pub fn green_pair(grid: &DomainGrid) -> (SymTensorField, Vec<f64>) {
    let a = SymTensorField::from_fn(grid, |x| {
        let s = smooth_bump((x[0] - 0.5) / 0.3) * smooth_bump(x[1] / 0.45);
        [[s * (1.0 + x[0]), 0.3 * s, 0.0], [0.3 * s, s * (2.0 - x[1]), 0.0], [0.0; 3]]
    });
    let u = grid.sample(|x| smooth_bump((x[0] - 0.48) / 0.35) * smooth_bump(x[1] / 0.525) * (1.0 + x[1]));
    (a, u)
}

fn order(coarse: f64, fine: f64, h_ratio: f64) -> f64 {
    (coarse / fine).ln() / h_ratio.ln()
}

fn operators(res: usize) -> Result<Vec<Check>> {
    let mut rows = Rows { suite: "operators", out: vec![] };
    let t = 1e-4;
    let mut errs = vec![];
    for r in [res, fine(res)] {
        let (g, g0) = default_setup(r)?;
        let (mut er, mut eh) = (0.0f64, 0.0f64);
        for seed in 0..10 {
            let (a, b) = linearization_error(&g, &g0, &seeded_tensor(&g, seed), t)?;
            er = er.max(a);
            eh = eh.max(b);
        }
        errs.push((er, eh));
    }
    rows.within(format!("L vs difference of R, ratio {res}->{}", fine(res)), errs[0].0 / errs[1].0, 3.0, 5.0);
    rows.within(format!("Hdot vs difference of H, ratio {res}->{}", fine(res)), errs[0].1 / errs[1].1, 3.0, 5.0);
    rows.at_least("L vs difference of R, order", order(errs[0].0, errs[1].0, 2.0), 1.8);
    rows.at_least("Hdot vs difference of H, order", order(errs[0].1, errs[1].1, 2.0), 1.8);
    let mut green = vec![];
    for r in [res, fine(res)] {
        let (g, g0) = default_setup(r)?;
        let cd = curvature(&g, &g0)?;
        let (a, u) = green_pair(&g);
        green.push(greens_residual(&g, &cd, &a, &u));
    }
    rows.at_least("Green residual order", order(green[0].residual, green[1].residual, 2.0), 1.8);
    let gf = green[1];
    let scale = gf.lhs.abs().max(gf.rhs.abs()).max(1.0);
    rows.at_most(format!("Green relative residual at {}", fine(res)), gf.residual / scale, 1e-4);
    Ok(rows.out)
}

fn weights(res: usize) -> Result<Vec<Check>> {
    let mut rows = Rows { suite: "weights", out: vec![] };
    let r = fine(res);
    let g = DomainGrid::unit(2, r)?;
    let params = WeightParams::default();
    let ws = match build_weights(&g, params) {
        Ok(ws) => ws,
        Err(DeformError::Weights { count, .. }) => {
            rows.equals(format!("invariant violations at {r}"), count as f64, 0.0);
            return Ok(rows.out);
        }
        Err(e) => return Err(e),
    };
    rows.equals(format!("invariant violations at {r}"), ws.violations(&g).len() as f64, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for q in 0..g.len() {
        let d = g.distance_to_sigma_prime(g.coord(q));
        if d > 0.0 && d < params.r0 {
            lo = lo.min(ws.theta[q] / d);
            hi = hi.max(ws.theta[q] / d);
        }
    }
    rows.at_least("min theta/d in the collar", lo, 1.0 - params.epsilon);
    rows.at_most("max theta/d in the collar", hi, 1.0 + params.epsilon);
    rows.at_most("C1", ws.c1, 2.0);
    rows.at_most("C2", ws.c2, 50.0);
    let mut hardy = vec![];
    for rr in [res, r] {
        let gg = DomainGrid::unit(2, rr)?;
        let w = build_weights(&gg, params)?;
        let u = gg.sample(|x| bump1((x[0] - 0.5) / 0.15) * bump1((x[1] - 0.5) / 0.15));
        hardy.push(hardy_ratio(&gg, &w, &u)?);
    }
    let hb = params.r0.powi(-2);
    rows.at_most(format!("Hardy ratio, interior bump at {res}"), hardy[0], hb);
    rows.at_most(format!("Hardy ratio, interior bump at {r}"), hardy[1], hb);
    let fam: Vec<f64> = (0..8).map(|k| hardy_ratio(&g, &ws, &corner_family(&g, k))).collect::<Result<_>>()?;
    rows.at_least("Hardy corner family, longest increasing run", longest_increasing_run(&fam) as f64, 4.0);
    Ok(rows.out)
}

/// Length of the longest strictly increasing run of consecutive entries.
pub fn longest_increasing_run(v: &[f64]) -> usize {
    let mut best = v.len().min(1);
    let mut cur = best;
    for w in v.windows(2) {
        cur = if w[1] > w[0] { cur + 1 } else { 1 };
        best = best.max(cur);
    }
    best
}

/// Polynomial in one variable, lowest degree first.
#[derive(Clone, Debug)]
struct Poly(Vec<f64>);

impl Poly {
    fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    fn pow(&self, k: usize) -> Poly {
        (0..k).fold(Poly(vec![1.0]), |acc, _| acc.mul(self))
    }

    fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// `(1 − ((x − c)/w)²)⁶` on its support, as a polynomial in `x`.
fn bump_poly(c: f64, w: f64) -> Poly {
    let s2 = Poly(vec![-c / w, 1.0 / w]).pow(2);
    Poly(vec![1.0 - s2.0[0], -s2.0[1], -s2.0[2]]).pow(6)
}

/// Manufactured solution `u = X(x) y² Y(y)` on the flat unit square, where
/// `L L* = Δ²` in two dimensions, together with its exact biharmonic.
pub fn flat_manufactured(grid: &DomainGrid) -> (Vec<f64>, Vec<f64>) {
    let (cx, wx, cy, wy) = (0.5, 0.16, 0.0, 0.55);
    let x = bump_poly(cx, wx);
    let y = Poly(vec![0.0, 0.0, 1.0]).mul(&bump_poly(cy, wy));
    let (x2, x4) = (x.deriv().deriv(), x.deriv().deriv().deriv().deriv());
    let (y2, y4) = (y.deriv().deriv(), y.deriv().deriv().deriv().deriv());
    let inside = |p: [f64; 3]| (p[0] - cx).abs() < wx && (p[1] - cy).abs() < wy;
    let u = grid.sample(|p| if inside(p) { x.eval(p[0]) * y.eval(p[1]) } else { 0.0 });
    let f = grid.sample(|p| {
        if inside(p) {
            let (a, b) = (p[0], p[1]);
            x4.eval(a) * y.eval(b) + 2.0 * x2.eval(a) * y2.eval(b) + x.eval(a) * y4.eval(b)
        } else {
            0.0
        }
    });
    (u, f)
}

fn system(res: usize, flat: bool) -> Result<LinearizedSystem> {
    let g = DomainGrid::unit(2, res)?;
    let m = if flat { MetricField::flat(&g) } else { MetricSpec::default_generic().build(&g)? };
    let ws = build_weights(&g, WeightParams::default())?;
    LinearizedSystem::assemble(&g, &m, &ws, SolverParams::default())
}

fn solver(res: usize) -> Result<Vec<Check>> {
    let mut rows = Rows { suite: "solver", out: vec![] };
    let s = system(res, false)?;
    let n = s.grid.len();
    // discrete manufactured recovery
    let w: Vec<f64> = seeded_scalar(&s.grid, 7).iter().enumerate().map(|(p, v)| if s.interior.contains(&p) { *v } else { 0.0 }).collect();
    let (u, _) = s.solve_dirichlet_zero(&s.a4.matvec(&w))?;
    let err = u.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    rows.at_most("Dirichlet discrete recovery, relative", err / max_abs(&w), 1e-8);
    let (z, _) = s.solve_dirichlet_zero(&vec![0.0; n])?;
    rows.equals("Dirichlet f = 0, sup |u|", max_abs(&z), 0.0);
    let mut h1 = vec![];
    for r in [res, fine(res)] {
        let fs = system(r, true)?;
        let (ustar, f) = flat_manufactured(&fs.grid);
        let (u, _) = fs.solve_dirichlet_zero(&f)?;
        let d: Vec<f64> = u.iter().zip(&ustar).map(|(a, b)| a - b).collect();
        h1.push(h1_norm(&fs.grid, &d) / h1_norm(&fs.grid, &ustar));
    }
    rows.at_least("Dirichlet continuum H1 order", order(h1[0], h1[1], 2.0), 1.5);
    // Fredholm structure
    let p = s.p_matrix()?;
    let ns = s.sigma.len();
    let (mut asym, mut big) = (0.0f64, 0.0f64);
    for i in 0..ns {
        for j in 0..ns {
            asym = asym.max((p[(i, j)] - p[(j, i)]).abs());
            big = big.max(p[(i, j)].abs());
        }
    }
    rows.at_most("P asymmetry, relative", asym / big, 1e-12);
    let pd = p.llt(Side::Lower).is_ok();
    rows.equals("P positive definite", pd as u8 as f64, 1.0);
    let fl = system(res, true)?;
    let same = fl.bhat_matrix()? == fl.p_matrix()?;
    rows.equals("flat metric: Bhat == P", same as u8 as f64, 1.0);
    let mut cross = vec![];
    for r in [res, fine(res)] {
        let sys = if r == res { None } else { Some(system(r, false)?) };
        let sys = sys.as_ref().unwrap_or(&s);
        cross.push(bhat_vs_direct(sys)?);
    }
    rows.at_least("Bhat vs direct B(rho L* E u) order", order(cross[0], cross[1], 2.0), 0.8);
    // linearized solve
    let s2 = system(mid(res), false)?;
    let mut worst = 0.0f64;
    let (mut stab, mut b2) = ([0.0f64; 2], [0.0f64; 2]);
    for seed in 0..5u64 {
        for (k, sys) in [&s, &s2].into_iter().enumerate() {
            let f = seeded_scalar(&sys.grid, 100 + seed);
            let psi = seeded_scalar(&sys.grid, 200 + seed);
            let (_, rep) = sys.solve_linearized(&f, &psi)?;
            if k == 0 {
                worst = worst.max(rep.residual_interior).max(rep.residual_boundary);
            }
            stab[k] = stab[k].max(rep.stability);
            b2[k] = b2[k].max(rep.b2_norm);
        }
    }
    rows.at_most("linearized solve, worst relative residual", worst, 1e-8);
    rows.at_most(format!("stability constant variation {res}->{}", mid(res)), (stab[0] - stab[1]).abs() / stab[0].max(stab[1]), 0.3);
    rows.at_most("B2 sup-norm ratio across resolutions", b2[0].max(b2[1]) / b2[0].min(b2[1]), 2.0);
    Ok(rows.out)
}

/// Relative sup-difference of `B̂ û` and the pointwise `B(ρ L* E û)` for a
/// smooth `û` vanishing at Γ.
pub fn bhat_vs_direct(s: &LinearizedSystem) -> Result<f64> {
    let tang = s.grid.tangential_axes()[0];
    let uhat: Vec<f64> = s.sigma.iter().map(|&q| smooth_bump((s.grid.coord(q)[tang] - 0.5) / 0.3)).collect();
    let a = s.apply_bhat(&uhat)?;
    let b = s.direct_b(&uhat)?;
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(diff / max_abs(&b))
}

fn scan(resolutions: &[usize], flat: bool) -> Result<KernelReport> {
    kernel_scan(resolutions, |r| {
        let g = DomainGrid::unit(2, r)?;
        let m = if flat { MetricField::flat(&g) } else { MetricSpec::default_generic().build(&g)? };
        Ok((g, m))
    })
}

fn generic(res: usize) -> Result<Vec<Check>> {
    let mut rows = Rows { suite: "generic", out: vec![] };
    let ladder = [res, mid(res), fine(res)];
    let rep = scan(&ladder, true)?;
    rows.equals("flat kernel dimension", rep.dimension.map_or(-1.0, |d| d as f64), 2.0);
    let last = rep.orders.len() - 1;
    for k in 0..2 {
        let on_floor = rep.sigmas[last + 1][k] <= rep.floors[last + 1];
        let o = if on_floor { f64::INFINITY } else { rep.orders[last][k] };
        rows.at_least(format!("flat trailing sigma {k} order (inf = on floor)"), o, 1.0);
    }
    let thirds: Vec<f64> = rep.sigmas.iter().map(|s| s[2]).collect();
    let spread = thirds.iter().cloned().fold(0.0, f64::max) / thirds.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    rows.at_most("flat third sigma spread", spread, 0.25);
    let bump = scan(&ladder, false)?;
    rows.equals("bump metric kernel dimension", bump.dimension.map_or(-1.0, |d| d as f64), 0.0);
    let gf = DomainGrid::unit(2, fine(res))?;
    let flat = curvature(&gf, &MetricField::flat(&gf))?;
    let st = check_static_properties(&gf, &flat, &rep.basis);
    rows.at_most("flat R, H deviation / (10 h^2 scale)", st.r_gradient.max(st.r_oscillation).max(st.h_gradient).max(st.h_oscillation) / st.tol, 1.0);
    rows.equals("flat static consequences hold", st.all_pass() as u8 as f64, 1.0);
    let g = DomainGrid::unit(2, res)?;
    let sph = curvature(&g, &MetricField::round_sphere(&g, &[0.5, 0.0]))?;
    let st = check_static_properties(&g, &sph, &[]);
    rows.at_most("sphere patch R deviation / (10 h^2 scale)", st.r_gradient.max(st.r_oscillation) / st.tol, 1.0);
    rows.at_most("sphere patch H deviation / (10 h^2 scale)", st.h_gradient.max(st.h_oscillation) / st.tol, 1.0);
    Ok(rows.out)
}

/// Residual history of a manufactured run with bump amplitude `eps`.
pub fn manufactured_run(res: usize, eps: f64) -> Result<(LinearizedSystem, MetricField, MetricField, crate::picard::IterationState)> {
    let (g, g0) = default_setup(res)?;
    let ws = build_weights(&g, WeightParams::default())?;
    let sys = LinearizedSystem::assemble(&g, &g0, &ws, SolverParams::default())?;
    let a = manufactured_tensor(&g, &g0, eps, &[0.5], 0.25);
    let (rt, ht) = manufactured_targets(&g, &g0, &a)?;
    let (gf, st) = picard_run(&sys, &g0, &rt, &ht, PicardParams::default())?;
    Ok((sys, g0, gf, st))
}

fn iteration(res: usize) -> Result<Vec<Check>> {
    let mut rows = Rows { suite: "iteration", out: vec![] };
    let eps = 1e-2;
    let (sys, g0, gf, st) = manufactured_run(res, eps)?;
    rows.equals("manufactured run converged", (st.termination == Termination::Converged) as u8 as f64, 1.0);
    let monotone = st.history.windows(2).all(|w| w[1].residual() < w[0].residual());
    rows.equals("residuals strictly decreasing", monotone as u8 as f64, 1.0);
    let (_, _, _, half) = manufactured_run(res, eps / 2.0)?;
    let ratio = match (st.history.get(1), half.history.get(1)) {
        (Some(a), Some(b)) if b.residual() > 0.0 => a.residual() / b.residual(),
        _ => f64::NAN,
    };
    rows.within("first-step residual ratio, eps vs eps/2", ratio, 3.0, 5.0);
    let mask = SymTensorField::deformation_mask(&sys.grid);
    let changed = (0..sys.grid.len()).filter(|&p| !mask[p] && gf.g[p] != g0.g[p]).count();
    rows.equals("metric entries changed outside the mask", changed as f64, 0.0);
    let h = sys.grid.h[0];
    let last = st.history.last().map_or(f64::NAN, |r| r.r_sup.max(r.h_sup));
    rows.at_most("final curvature misfit", last, PicardParams::default().tol.max(h * h));
    Ok(rows.out)
}
