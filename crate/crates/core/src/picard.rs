//! Nonlinear correction of a metric toward prescribed scalar and mean
//! curvature by Picard iteration with the linearization frozen at `g₀`:
//! `Ψ(a_j) = (R′ − R(g_j), 2(H′ − H(g_j)))`, `g_{j+1} = g_j + a_j`.

use serde::{Deserialize, Serialize};

use crate::error::{DeformError, Result};
use crate::fields::{inner, SymTensorField};
use crate::mesh::DomainGrid;
use crate::solver::{LinearizedSystem, SolveReport};
use crate::tensor::{curvature, MetricField, MetricTag};
use crate::weights::{bump1, weighted_sup_tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardParams {
    /// Both residual pairs must fall below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible size `sup |a₀|_{g₀}` of the first correction.
    pub eps_max: f64,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams { tol: 1e-6, max_iter: 30, eps_max: 5e-2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    Converged,
    MaxIter,
    /// The residual grew across a step.
    Diverged,
    /// The next metric would lose positive definiteness; the step was rejected.
    SpdLoss,
    /// Residual sits on the roundoff floor above `tol`.
    Stalled,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// `sup |R′ − R(g_j)|` on free interior nodes.
    pub r_sup: f64,
    /// `sup |H′ − H(g_j)|` on Σ unknowns.
    pub h_sup: f64,
    /// `‖R′ − R(g_j)‖_{L²_{1/ρ}}` on free interior nodes.
    pub r_l2: f64,
    /// `‖H′ − H(g_j)‖_{L²_ρ(Σ)}` on Σ unknowns.
    pub h_l2: f64,
    /// `sup |a_j|_{g₀}` of the correction computed at this step (0 once converged).
    pub correction_sup: f64,
    /// 𝓑₂-style weighted sup of the correction.
    pub correction_b2: f64,
    pub solve_residual: f64,
}

impl StepRecord {
    pub fn residual(&self) -> f64 {
        self.r_sup + self.h_sup
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationState {
    pub step: usize,
    #[serde(skip)]
    pub metric: Option<MetricField>,
    /// Corrections `a_j` that were applied.
    #[serde(skip)]
    pub corrections: Vec<SymTensorField>,
    pub history: Vec<StepRecord>,
    /// Report of every linearized solve, in step order.
    pub reports: Vec<SolveReport>,
    /// `sup |a₀|_{g₀}`, the smallness parameter of the run.
    pub eps: f64,
    pub termination: Termination,
    pub fit: Option<ContractionFit>,
}

impl IterationState {
    /// `Err` for the outcomes that signal a failed contraction.
    pub fn status(&self) -> Result<()> {
        match self.termination {
            Termination::Diverged | Termination::SpdLoss | Termination::MaxIter | Termination::Stalled => {
                let n = self.history.len();
                let after = self.history.last().map_or(f64::NAN, |r| r.residual());
                let before = if n >= 2 { self.history[n - 2].residual() } else { after };
                Err(DeformError::Divergence { step: self.step, before, after })
            }
            _ => Ok(()),
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.residual())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Fitted,
    ZeroSlope,
    InsufficientData,
}

/// Least-squares fit of `log x_j = (1 + c + jδ) log ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionFit {
    pub status: FitStatus,
    pub delta: Option<f64>,
    pub intercept: f64,
    /// RMS misfit of the exponents.
    pub fit_residual: f64,
    /// `(j, x_j, log x_j / log ε − 1)`.
    pub table: Vec<(usize, f64, f64)>,
}

/// Fit the ladder exponent to a sequence of step sizes.
pub fn contraction_fit(seq: &[f64], eps: f64) -> ContractionFit {
    let insufficient = |table| ContractionFit { status: FitStatus::InsufficientData, delta: None, intercept: 0.0, fit_residual: 0.0, table };
    let usable: Vec<(usize, f64)> = seq.iter().cloned().enumerate().take_while(|(_, v)| *v > 0.0 && v.is_finite()).collect();
    if !(eps > 0.0 && eps < 1.0) {
        return insufficient(vec![]);
    }
    let le = eps.ln();
    let table: Vec<(usize, f64, f64)> = usable.iter().map(|&(j, v)| (j, v, v.ln() / le - 1.0)).collect();
    if table.len() < 3 {
        return insufficient(table);
    }
    let m = table.len() as f64;
    let sx: f64 = table.iter().map(|t| t.0 as f64).sum();
    let sy: f64 = table.iter().map(|t| t.2).sum();
    let sxx: f64 = table.iter().map(|t| (t.0 as f64).powi(2)).sum();
    let sxy: f64 = table.iter().map(|t| t.0 as f64 * t.2).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let fit_residual = (table.iter().map(|t| (t.2 - intercept - slope * t.0 as f64).powi(2)).sum::<f64>() / m).sqrt();
    let spread = table.iter().map(|t| t.1).fold(0.0f64, f64::max) - table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let status = if spread == 0.0 || slope.abs() < 1e-12 { FitStatus::ZeroSlope } else { FitStatus::Fitted };
    let delta = Some(if status == FitStatus::ZeroSlope { 0.0 } else { slope });
    ContractionFit { status, delta, intercept, fit_residual, table }
}

fn sup_g(g0: &MetricField, a: &SymTensorField) -> f64 {
    let dim = g0.dim;
    g0.g.iter()
        .zip(&a.data)
        .map(|(g, t)| inner(&crate::fields::inverse(g, dim), t, t, dim).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

/// Iterate from `g₀` (the metric `sys` was assembled at) toward
/// `R(g) = r_target` on free interior nodes and `H(g) = h_target` on Σ
/// unknowns. Hard failures are errors; divergence is reported through
/// [`IterationState::termination`] so the history survives.
pub fn picard_run(
    sys: &LinearizedSystem,
    g0: &MetricField,
    r_target: &[f64],
    h_target: &[f64],
    params: PicardParams,
) -> Result<(MetricField, IterationState)> {
    let grid = &sys.grid;
    let n = grid.len();
    if r_target.len() != n || h_target.len() != n {
        return Err(DeformError::Config("target length does not match the grid".into()));
    }
    if !(params.tol > 0.0) || params.max_iter == 0 || !(params.eps_max > 0.0) {
        return Err(DeformError::Config(format!("invalid iteration parameters {params:?}")));
    }
    let mask = SymTensorField::deformation_mask(grid);
    let mut g = g0.clone();
    let mut state = IterationState {
        step: 0,
        metric: None,
        corrections: vec![],
        history: vec![],
        reports: vec![],
        eps: 0.0,
        termination: Termination::Running,
        fit: None,
    };
    let dual_rho = &sys.ws.rho;
    let scale = r_target.iter().chain(h_target).fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-10 * scale;
    loop {
        let cd = curvature(grid, &g)?;
        let r = cd.scalar();
        let hm = cd.mean_curvature();
        let f: Vec<f64> = (0..n).map(|p| r_target[p] - r[p]).collect();
        let psi: Vec<f64> = (0..n).map(|p| 2.0 * (h_target[p] - hm[p])).collect();
        let mut rec = StepRecord { step: state.step, ..Default::default() };
        for &p in &sys.interior {
            rec.r_sup = rec.r_sup.max(f[p].abs());
            rec.r_l2 += grid.volume_weight(p) * f[p] * f[p] / dual_rho[p];
        }
        for (k, &p) in sys.sigma.iter().enumerate() {
            let d = 0.5 * psi[p];
            rec.h_sup = rec.h_sup.max(d.abs());
            rec.h_l2 += sys.m_sigma[k] * dual_rho[p] * d * d;
        }
        rec.r_l2 = rec.r_l2.sqrt();
        rec.h_l2 = rec.h_l2.sqrt();
        let done = rec.r_sup.max(rec.h_sup) <= params.tol && rec.r_l2.max(rec.h_l2) <= params.tol;
        if let Some(prev) = state.history.last() {
            let stalled = rec.residual() > 0.5 * prev.residual() && rec.residual() <= floor;
            if !done && (stalled || (rec.residual() > prev.residual() && rec.residual() > floor)) {
                state.termination = if stalled { Termination::Stalled } else { Termination::Diverged };
                state.history.push(rec);
                break;
            }
        }
        if done {
            state.history.push(rec);
            state.termination = Termination::Converged;
            break;
        }
        if state.step >= params.max_iter {
            state.history.push(rec);
            state.termination = Termination::MaxIter;
            break;
        }
        let (a, rep): (SymTensorField, SolveReport) = sys.solve_linearized(&f, &psi)?;
        let a = a.with_mask(mask.clone());
        rec.correction_sup = sup_g(g0, &a);
        rec.correction_b2 = weighted_sup_tensor(grid, &sys.ws, &a, 2.0 + grid.dim as f64 / 2.0, -0.5);
        rec.solve_residual = rep.residual_interior.max(rep.residual_boundary);
        if state.step == 0 {
            state.eps = rec.correction_sup;
            if state.eps > params.eps_max {
                return Err(DeformError::Config(format!(
                    "first correction has size {:.3e} above eps_max = {:.3e}; reduce the targets",
                    state.eps, params.eps_max
                )));
            }
        }
        let next = g.plus(&a, 1.0);
        state.history.push(rec);
        state.reports.push(rep);
        if next.first_degenerate().is_some() {
            state.termination = Termination::SpdLoss;
            break;
        }
        g = next;
        g.tag = MetricTag::Iterate(state.step + 1);
        state.corrections.push(a);
        state.step += 1;
    }
    // ladder fit over the contracting part only; roundoff plateaus carry no rate
    let mut sizes: Vec<f64> = Vec::new();
    for r in state.history.iter().map(|r| r.correction_sup).take_while(|v| *v > 0.0) {
        if sizes.last().is_some_and(|&last| r > 0.9 * last) {
            break;
        }
        sizes.push(r);
    }
    state.fit = Some(contraction_fit(&sizes, state.eps));
    state.metric = Some(g.clone());
    Ok((g, state))
}

/// Smooth bump `ε B(x) g₀` with `B` a product of `(1 − t²)³` profiles,
/// centred on Σ in the normal direction so that both `R` and `H` move.
pub fn manufactured_tensor(grid: &DomainGrid, g0: &MetricField, eps: f64, center: &[f64], width: f64) -> SymTensorField {
    let dim = grid.dim;
    let nax = grid.sigma.axis;
    let mut a = SymTensorField::zeros(grid);
    for p in 0..grid.len() {
        let x = grid.coord(p);
        let mut b = 1.0;
        for ax in 0..dim {
            let c = if ax == nax { 0.0 } else { center.get(ax).copied().unwrap_or(0.5) };
            b *= bump1((x[ax] - c) / width);
        }
        for i in 0..dim {
            for j in 0..dim {
                a.data[p][i][j] = eps * b * g0.g[p][i][j];
            }
        }
    }
    a.with_mask(SymTensorField::deformation_mask(grid))
}

/// Targets `R(g₀ + a*)`, `H(g₀ + a*)`.
pub fn manufactured_targets(grid: &DomainGrid, g0: &MetricField, a_star: &SymTensorField) -> Result<(Vec<f64>, Vec<f64>)> {
    let cd = curvature(grid, &g0.plus(a_star, 1.0))?;
    Ok((cd.scalar(), cd.mean_curvature()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverParams;
    use crate::tensor::MetricSpec;
    use crate::weights::{build_weights, WeightParams};

    #[test]
    fn synthetic_ladder_fit_is_exact() {
        let eps: f64 = 1e-2;
        let seq: Vec<f64> = (0..6).map(|j| eps.powf(1.0 + 0.5 * j as f64)).collect();
        let fit = contraction_fit(&seq, eps);
        assert_eq!(fit.status, FitStatus::Fitted);
        assert!((fit.delta.unwrap() - 0.5).abs() < 1e-6);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_is_zero_slope_and_short_is_insufficient() {
        let fit = contraction_fit(&[1e-3; 5], 1e-3);
        assert_eq!(fit.status, FitStatus::ZeroSlope);
        assert_eq!(fit.delta, Some(0.0));
        assert_eq!(contraction_fit(&[1e-3, 1e-5], 1e-3).status, FitStatus::InsufficientData);
    }

    #[test]
    fn zero_data_converges_in_zero_steps() {
        let grid = DomainGrid::unit(2, 17).unwrap();
        let g0 = MetricSpec::default_generic().build(&grid).unwrap();
        let ws = build_weights(&grid, WeightParams::default()).unwrap();
        let sys = LinearizedSystem::assemble(&grid, &g0, &ws, SolverParams::default()).unwrap();
        let cd = curvature(&grid, &g0).unwrap();
        let (g, st) = picard_run(&sys, &g0, &cd.scalar(), &cd.mean_curvature(), PicardParams::default()).unwrap();
        assert_eq!(st.step, 0);
        assert_eq!(st.termination, Termination::Converged);
        assert_eq!(g.g, g0.g);
    }
}
