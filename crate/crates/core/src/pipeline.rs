//! Batch orchestration: configuration → weights → generic check → linearized
//! system → Picard iteration, with a versioned JSON summary and node CSVs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{Bump, RunConfig, TargetKind};
use crate::error::{DeformError, Result};
use crate::fields::{comp_pairs, SymTensorField};
use crate::generic::{check_static_properties, kernel_scan, KernelReport, KernelVerdict, StaticReport};
use crate::io::{read_table, write_node_csv, write_table};
use crate::mesh::{DomainGrid, Role};
use crate::picard::{manufactured_targets, manufactured_tensor, picard_run, IterationState, Termination};
use crate::solver::LinearizedSystem;
use crate::tensor::{curvature, MetricField};
use crate::weights::{build_weights, bump1, weighted_sup_tensor, WeightSystem};

pub const SCHEMA: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NON_GENERIC: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Machine-readable outcome of a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Status {
    pub exit_code: i32,
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub dim: usize,
    pub resolution: usize,
    pub nodes: usize,
    pub h: Vec<f64>,
    pub sigma_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightInfo {
    pub c1: f64,
    pub c2: f64,
    pub c_rho: [f64; 2],
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemInfo {
    pub theta_cut: f64,
    pub c0: f64,
    pub interior_unknowns: usize,
    pub sigma_unknowns: usize,
    pub defect_dim: usize,
    pub complement_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetInfo {
    pub kind: TargetKind,
    /// `sup |R′ − R(g₀)|` over the whole grid.
    pub dr_sup: f64,
    /// `sup |H′ − H(g₀)|` over Σ.
    pub dh_sup: f64,
    /// `sup |a*|` for manufactured targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_star_sup: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    /// `sup_Σ |h|²`.
    pub sup_h_squared: f64,
    /// Stability ratio of the first linearized solve.
    pub first_step_stability: Option<f64>,
    /// Weighted `𝓑₂` sup-norm of the total deformation `g − g₀`.
    pub deformation_b2: f64,
    /// `sup |g − g₀|` over nodes outside the deformation mask.
    pub outside_mask_change: f64,
    /// `sup |R(g) − R′|` and `sup |H(g) − H′|` on the fitted nodes.
    pub final_r_error: f64,
    pub final_h_error: f64,
    pub contraction_delta: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub status: Status,
    pub config: Option<RunConfig>,
    pub grid: Option<GridInfo>,
    pub weights: Option<WeightInfo>,
    pub kernel: Option<KernelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_properties: Option<StaticReport>,
    pub system: Option<SystemInfo>,
    pub targets: Option<TargetInfo>,
    pub iteration: Option<IterationState>,
    pub constants: Option<Constants>,
    /// Wall-clock seconds per phase; the only non-deterministic section
    /// besides the `wall_seconds` of each solve report.
    pub timing: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub summary: Summary,
}

/// Exit code and reason code for a library error.
pub fn classify(err: &DeformError) -> (i32, &'static str) {
    match err {
        DeformError::Config(_) => (EXIT_CONFIG, "config_error"),
        DeformError::Degenerate { .. } => (EXIT_CONFIG, "degenerate_metric"),
        DeformError::Weights { .. } => (EXIT_CONFIG, "weight_violation"),
        DeformError::Io(_) => (EXIT_CONFIG, "io_error"),
        DeformError::NonGeneric(_) => (EXIT_NON_GENERIC, "non_generic"),
        DeformError::Divergence { .. } => (EXIT_DIVERGENCE, "divergence"),
        DeformError::Numeric(_) => (EXIT_DIVERGENCE, "numeric_failure"),
        DeformError::Assembly(_) => (EXIT_DIVERGENCE, "assembly_failure"),
        DeformError::Ordering(_) => (EXIT_DIVERGENCE, "ordering_failure"),
        DeformError::UndefinedRatio(_) => (EXIT_DIVERGENCE, "undefined_ratio"),
        DeformError::DefectCompletion(_) => (EXIT_DIVERGENCE, "defect_completion_failure"),
    }
}

fn status(exit_code: i32, code: &str, message: impl Into<String>) -> Status {
    Status { exit_code, code: code.into(), message: message.into() }
}

/// Run a configuration file. Overrides replace `output.directory` and
/// `domain.resolution`. Always writes `summary.json` when an output
/// directory can be determined.
pub fn run(config_path: &Path, out: Option<&Path>, resolution: Option<usize>) -> RunOutcome {
    let mut summary = Summary { schema: SCHEMA, ..Default::default() };
    let loaded = RunConfig::load(config_path).and_then(|mut cfg| {
        if let Some(r) = resolution {
            cfg.domain.resolution = r;
            cfg.validate()?;
        }
        if let Some(o) = out {
            cfg.output.directory = o.to_path_buf();
        }
        Ok(cfg)
    });
    let cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("deform-out"));
            let (code, reason) = classify(&e);
            summary.status = status(code, reason, e.to_string());
            let _ = write_summary(&dir, &summary);
            return RunOutcome { exit_code: code, out_dir: dir, summary };
        }
    };
    run_config(&cfg)
}

/// Run an already-validated configuration.
pub fn run_config(cfg: &RunConfig) -> RunOutcome {
    let dir = cfg.output.directory.clone();
    let mut summary = Summary { schema: SCHEMA, config: Some(cfg.clone()), ..Default::default() };
    let result = fs::create_dir_all(dir.join("fields")).map_err(DeformError::from).and_then(|_| execute(cfg, &dir, &mut summary));
    match result {
        Ok(s) => summary.status = s,
        Err(e) => {
            let (code, reason) = classify(&e);
            summary.status = status(code, reason, e.to_string());
        }
    }
    if let Err(e) = write_summary(&dir, &summary) {
        let (code, reason) = classify(&e);
        summary.status = status(code, reason, e.to_string());
    }
    RunOutcome { exit_code: summary.status.exit_code, out_dir: dir, summary }
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(summary).map_err(|e| DeformError::Numeric(e.to_string()))?;
    fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(())
}

fn lap(timing: &mut BTreeMap<String, f64>, name: &str, t: Instant) {
    timing.insert(name.to_string(), t.elapsed().as_secs_f64());
}

fn execute(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<Status> {
    let res = cfg.domain.resolution;
    let t = Instant::now();
    let grid = cfg.grid(res)?;
    let spec = cfg.metric_spec();
    let g0 = spec.build(&grid)?;
    let ws = build_weights(&grid, cfg.weight_params())?;
    summary.grid = Some(GridInfo {
        dim: grid.dim,
        resolution: res,
        nodes: grid.len(),
        h: grid.h[..grid.dim].to_vec(),
        sigma_nodes: grid.nodes_with(Role::Sigma).len(),
    });
    summary.weights = Some(WeightInfo { c1: ws.c1, c2: ws.c2, c_rho: ws.c_rho, violations: ws.violations(&grid).len() });
    let cd0 = curvature(&grid, &g0)?;
    write_weight_fields(dir, &grid, &ws)?;
    write_node_csv(&dir.join("fields/R_initial.csv"), &grid, &[("R", &cd0.scalar())])?;
    write_sigma_csv(&dir.join("fields/H_initial.csv"), &grid, "H", &cd0.mean_curvature())?;
    g0.write_csv(&dir.join("fields/metric_initial.csv"), &grid)?;
    lap(&mut summary.timing, "setup", t);

    let t = Instant::now();
    let scan = cfg.scan_resolutions(res);
    let report = kernel_scan(&scan, |r| {
        let g = cfg.grid(r)?;
        let m = spec.build(&g)?;
        Ok((g, m))
    })?;
    lap(&mut summary.timing, "kernel_scan", t);
    let verdict = report.verdict;
    let dimension = report.dimension;
    if verdict != KernelVerdict::Generic {
        let finest = *scan.last().unwrap_or(&res);
        if finest == res && !report.basis.is_empty() {
            summary.static_properties = Some(check_static_properties(&grid, &cd0, &report.basis));
        }
        let note = report.note.clone();
        summary.kernel = Some(report);
        return Ok(match (verdict, dimension) {
            (KernelVerdict::NonGeneric, Some(k)) => {
                status(EXIT_NON_GENERIC, "non_generic", format!("base metric is not generic: kernel dimension {k}"))
            }
            _ => status(EXIT_NON_GENERIC, "kernel_indeterminate", format!("genericity could not be certified: {note}")),
        });
    }
    summary.kernel = Some(report);

    let t = Instant::now();
    let sys = LinearizedSystem::assemble_with(&grid, cd0.clone(), &ws, cfg.solver_params())?;
    let comp = sys.complement_basis()?;
    summary.system = Some(SystemInfo {
        theta_cut: sys.theta_cut,
        c0: sys.c0,
        interior_unknowns: sys.interior.len(),
        sigma_unknowns: sys.sigma.len(),
        defect_dim: sys.defect_dim()?,
        complement_dim: comp.fields.len(),
    });
    lap(&mut summary.timing, "assemble", t);

    let (r_target, h_target, a_star_sup) = targets(cfg, &grid, &g0, &cd0)?;
    let r0 = cd0.scalar();
    let h0 = cd0.mean_curvature();
    summary.targets = Some(TargetInfo {
        kind: cfg.targets.kind,
        dr_sup: r_target.iter().zip(&r0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        dh_sup: sys.sigma.iter().map(|&p| (h_target[p] - h0[p]).abs()).fold(0.0, f64::max),
        a_star_sup,
    });
    write_node_csv(&dir.join("fields/R_target.csv"), &grid, &[("R", &r_target)])?;

    let t = Instant::now();
    let (g, state) = picard_run(&sys, &g0, &r_target, &h_target, cfg.picard_params())?;
    lap(&mut summary.timing, "iteration", t);

    let t = Instant::now();
    let cd = curvature(&grid, &g)?;
    let r = cd.scalar();
    let hm = cd.mean_curvature();
    let mut a = SymTensorField::zeros(&grid);
    for p in 0..grid.len() {
        for i in 0..grid.dim {
            for j in 0..grid.dim {
                a.data[p][i][j] = g.g[p][i][j] - g0.g[p][i][j];
            }
        }
    }
    let mask = SymTensorField::deformation_mask(&grid);
    let outside = (0..grid.len())
        .filter(|&p| !mask[p])
        .flat_map(|p| a.data[p].iter().flatten().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    summary.constants = Some(Constants {
        sup_h_squared: cd0.sup_h_squared(&grid),
        first_step_stability: state.reports.first().map(|r| r.stability),
        deformation_b2: weighted_sup_tensor(&grid, &ws, &a, 2.0 + grid.dim as f64 / 2.0, -0.5),
        outside_mask_change: outside,
        final_r_error: sys.interior.iter().map(|&p| (r[p] - r_target[p]).abs()).fold(0.0, f64::max),
        final_h_error: sys.sigma.iter().map(|&p| (hm[p] - h_target[p]).abs()).fold(0.0, f64::max),
        contraction_delta: state.fit.as_ref().and_then(|f| f.delta),
    });
    write_node_csv(&dir.join("fields/R_final.csv"), &grid, &[("R", &r)])?;
    write_sigma_csv(&dir.join("fields/H_final.csv"), &grid, "H", &hm)?;
    g.write_csv(&dir.join("fields/metric_final.csv"), &grid)?;
    write_tensor_csv(&dir.join("fields/a_final.csv"), &grid, "a", &a)?;
    if cfg.output.dump_steps {
        dump_steps(dir, &grid, &g0, &state)?;
    }
    lap(&mut summary.timing, "output", t);

    let term = state.termination;
    let final_res = state.final_residual();
    summary.iteration = Some(state);
    Ok(match term {
        Termination::Converged => status(EXIT_OK, "converged", format!("converged with residual {final_res:.3e}")),
        Termination::Diverged => status(EXIT_DIVERGENCE, "diverged", format!("residual increased, last {final_res:.3e}")),
        Termination::SpdLoss => status(EXIT_DIVERGENCE, "spd_loss", "an iterate left the positive-definite cone"),
        Termination::MaxIter => status(EXIT_DIVERGENCE, "max_iter", format!("iteration cap reached at residual {final_res:.3e}")),
        Termination::Stalled => status(EXIT_DIVERGENCE, "stalled", format!("residual stalled at the roundoff floor, {final_res:.3e}")),
        Termination::Running => status(EXIT_DIVERGENCE, "incomplete", "iteration ended without a verdict"),
    })
}

fn bump_value(b: &Bump, x: [f64; 3], axes: &[usize]) -> f64 {
    b.amplitude * axes.iter().map(|&a| bump1((x[a] - b.center[a]) / b.width)).product::<f64>()
}

/// `(R′, H′, sup |a*|)` for the configured target kind.
fn targets(
    cfg: &RunConfig,
    grid: &DomainGrid,
    g0: &MetricField,
    cd0: &crate::tensor::CurvatureData,
) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
    let mut r = cd0.scalar();
    let mut h = cd0.mean_curvature();
    let all: Vec<usize> = (0..grid.dim).collect();
    let tang = grid.tangential_axes();
    match cfg.targets.kind {
        TargetKind::Zero => Ok((r, h, None)),
        TargetKind::Bumps => {
            if let Some(b) = &cfg.targets.dr {
                for p in 0..grid.len() {
                    let v = bump_value(b, grid.coord(p), &all);
                    if v != 0.0 && matches!(grid.role(p), Role::SigmaPrime | Role::Gamma) {
                        return Err(DeformError::Config(format!(
                            "targets.dr support reaches the fixed boundary at {:?}",
                            &grid.coord(p)[..grid.dim]
                        )));
                    }
                    r[p] += v;
                }
            }
            if let Some(b) = &cfg.targets.dh {
                for p in 0..grid.len() {
                    let v = bump_value(b, grid.coord(p), &tang);
                    match grid.role(p) {
                        Role::Sigma => h[p] += v,
                        Role::Gamma if v != 0.0 => {
                            return Err(DeformError::Config(format!(
                                "targets.dh support reaches the edge of the free face at {:?}",
                                &grid.coord(p)[..grid.dim]
                            )))
                        }
                        _ => {}
                    }
                }
            }
            Ok((r, h, None))
        }
        TargetKind::Manufactured => {
            let b = cfg.targets.manufactured.as_ref().ok_or_else(|| DeformError::Config("missing targets.manufactured".into()))?;
            let a = manufactured_tensor(grid, g0, b.amplitude, &b.center, b.width);
            let (rt, ht) = manufactured_targets(grid, g0, &a)?;
            Ok((rt, ht, Some(a.max_abs())))
        }
    }
}

fn write_weight_fields(dir: &Path, grid: &DomainGrid, ws: &WeightSystem) -> Result<()> {
    write_node_csv(&dir.join("fields/theta.csv"), grid, &[("theta", &ws.theta)])?;
    write_node_csv(&dir.join("fields/rho.csv"), grid, &[("rho", &ws.rho)])?;
    write_node_csv(&dir.join("fields/phi.csv"), grid, &[("phi", &ws.phi)])
}

/// Values on the open free face only.
fn write_sigma_csv(path: &Path, grid: &DomainGrid, name: &str, f: &[f64]) -> Result<()> {
    let axes = ["x", "y", "z"];
    let mut head: Vec<&str> = axes[..grid.dim].to_vec();
    head.push(name);
    let rows: Vec<Vec<f64>> = grid
        .nodes_with(Role::Sigma)
        .into_iter()
        .map(|p| {
            let mut row = grid.coord(p)[..grid.dim].to_vec();
            row.push(f[p]);
            row
        })
        .collect();
    write_table(path, &head, &rows)
}

fn write_tensor_csv(path: &Path, grid: &DomainGrid, prefix: &str, a: &SymTensorField) -> Result<()> {
    let pairs = comp_pairs(grid.dim);
    let names: Vec<String> = pairs.iter().map(|(i, j)| format!("{prefix}{}{}", i + 1, j + 1)).collect();
    let cols: Vec<Vec<f64>> = pairs.iter().map(|&(i, j)| a.data.iter().map(|m| m[i][j]).collect()).collect();
    let refs: Vec<(&str, &[f64])> = names.iter().zip(&cols).map(|(n, c)| (n.as_str(), c.as_slice())).collect();
    write_node_csv(path, grid, &refs)
}

fn dump_steps(dir: &Path, grid: &DomainGrid, g0: &MetricField, state: &IterationState) -> Result<()> {
    let sub = dir.join("fields/steps");
    fs::create_dir_all(&sub)?;
    let mut g = g0.clone();
    for (k, a) in state.corrections.iter().enumerate() {
        g = g.plus(a, 1.0);
        let cd = curvature(grid, &g)?;
        write_node_csv(&sub.join(format!("R_step{:03}.csv", k + 1)), grid, &[("R", &cd.scalar())])?;
        write_tensor_csv(&sub.join(format!("a_step{:03}.csv", k + 1)), grid, "a", a)?;
    }
    Ok(())
}

/// Files written by [`export_plot_data`], relative to the run directory.
pub const PLOT_FILES: [&str; 6] = [
    "plot/residual_vs_step.csv",
    "plot/sigma_spectrum.csv",
    "plot/theta_cross_section.csv",
    "plot/rho_cross_section.csv",
    "plot/theta_diagonal.csv",
    "plot/rho_diagonal.csv",
];

/// Line-plot tables from a finished run directory.
pub fn export_plot_data(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(run_dir.join("summary.json"))?;
    let summary: serde_json::Value = serde_json::from_str(&text).map_err(|e| DeformError::Config(format!("summary.json: {e}")))?;
    let out = run_dir.join("plot");
    fs::create_dir_all(&out)?;
    let num = |v: &serde_json::Value| v.as_f64().unwrap_or(f64::NAN);

    let mut rows = Vec::new();
    if let Some(hist) = summary.pointer("/iteration/history").and_then(|v| v.as_array()) {
        for r in hist {
            rows.push(
                ["step", "r_sup", "h_sup", "r_l2", "h_l2", "correction_sup"].iter().map(|k| num(&r[*k])).collect(),
            );
        }
    }
    write_table(&out.join("residual_vs_step.csv"), &["step", "r_sup", "h_sup", "r_l2", "h_l2", "correction_sup"], &rows)?;

    let mut head = vec!["index".to_string()];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if let Some(k) = summary.get("kernel").filter(|k| !k.is_null()) {
        let res: Vec<u64> = k["resolutions"].as_array().map(|a| a.iter().filter_map(|v| v.as_u64()).collect()).unwrap_or_default();
        let sig: Vec<Vec<f64>> = k["sigmas"]
            .as_array()
            .map(|a| a.iter().map(|s| s.as_array().map(|x| x.iter().map(num).collect()).unwrap_or_default()).collect())
            .unwrap_or_default();
        head.extend(res.iter().map(|r| format!("sigma_{r}")));
        let count = sig.iter().map(Vec::len).min().unwrap_or(0);
        // descending, so the kernel candidates trail the bulk
        for i in (0..count).rev() {
            let mut row = vec![i as f64];
            row.extend(sig.iter().map(|s| s[i]));
            rows.push(row);
        }
    }
    let head_ref: Vec<&str> = head.iter().map(String::as_str).collect();
    write_table(&out.join("sigma_spectrum.csv"), &head_ref, &rows)?;

    let cfg = summary.get("config").filter(|c| !c.is_null()).ok_or_else(|| DeformError::Config("summary.json has no config".into()))?;
    let cfg: RunConfig = serde_json::from_value(cfg.clone()).map_err(|e| DeformError::Config(format!("summary config: {e}")))?;
    let grid = cfg.grid(cfg.domain.resolution)?;
    let theta = field_column(&run_dir.join("fields/theta.csv"), &grid)?;
    let rho = field_column(&run_dir.join("fields/rho.csv"), &grid)?;

    // the line through the middle of Σ along the normal, and the diagonal
    // leaving Γ at the origin corner at 45°
    let tang = grid.tangential_axes();
    let nax = grid.sigma.axis;
    let mid = |a: usize| (grid.n[a] - 1) / 2;
    let vertical: Vec<usize> = (0..grid.len()).filter(|&p| tang.iter().all(|&a| grid.ijk(p)[a] == mid(a))).collect();
    let diagonal: Vec<usize> = (0..grid.len())
        .filter(|&p| {
            let ijk = grid.ijk(p);
            ijk[tang[0]] == ijk[nax] && tang[1..].iter().all(|&a| ijk[a] == mid(a))
        })
        .collect();
    for (name, nodes) in [("cross_section", &vertical), ("diagonal", &diagonal)] {
        for (fname, f) in [("theta", &theta), ("rho", &rho)] {
            let mut rows: Vec<Vec<f64>> = nodes
                .iter()
                .map(|&p| {
                    let x = grid.coord(p);
                    let s = (0..grid.dim).map(|a| (x[a] - grid.coord(nodes[0])[a]).powi(2)).sum::<f64>().sqrt();
                    vec![s, grid.distance_to_sigma_prime(x), f[p]]
                })
                .collect();
            // ordered by distance to the fixed boundary, ties by value
            rows.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[2].total_cmp(&b[2])).then(a[0].total_cmp(&b[0])));
            write_table(&out.join(format!("{fname}_{name}.csv")), &["s", "distance", fname], &rows)?;
        }
    }
    Ok(PLOT_FILES.iter().map(|f| run_dir.join(f)).collect())
}

/// Last column of a node CSV, checked against the grid size.
fn field_column(path: &Path, grid: &DomainGrid) -> Result<Vec<f64>> {
    let (_, rows) = read_table(path)?;
    if rows.len() != grid.len() {
        return Err(DeformError::Config(format!("{}: {} rows for {} nodes", path.display(), rows.len(), grid.len())));
    }
    Ok(rows.iter().map(|r| *r.last().unwrap_or(&f64::NAN)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, dir: &Path) -> RunConfig {
        let mut c = RunConfig::from_toml_str(text).unwrap();
        c.output.directory = dir.to_path_buf();
        c
    }

    #[test]
    fn zero_targets_converge_without_steps() {
        let dir = std::env::temp_dir().join(format!("deform-pipe-zero-{}", std::process::id()));
        let out = run_config(&cfg("[domain]\ndim = 2\nresolution = 17\n", &dir));
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.summary.status);
        let it = out.summary.iteration.as_ref().unwrap();
        assert_eq!(it.step, 0);
        assert!(dir.join("summary.json").exists());
        let files = export_plot_data(&dir).unwrap();
        assert!(files.iter().all(|f| f.exists()));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bump_touching_fixed_boundary_is_config_error() {
        let dir = std::env::temp_dir().join(format!("deform-pipe-bad-{}", std::process::id()));
        let text = "[domain]\ndim = 2\nresolution = 17\n[targets]\nkind = \"bumps\"\n[targets.dr]\namplitude = 0.01\ncenter = [0.9, 0.5]\nwidth = 0.2\n";
        let out = run_config(&cfg(text, &dir));
        assert_eq!(out.exit_code, EXIT_CONFIG);
        assert_eq!(out.summary.status.code, "config_error");
        fs::remove_dir_all(&dir).ok();
    }
}
