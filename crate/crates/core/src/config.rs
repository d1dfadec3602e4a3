//! Run configuration: sectioned TOML, unknown keys rejected by name, every
//! range checked before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DeformError, Result};
use crate::mesh::{DomainGrid, SigmaFace};
use crate::picard::PicardParams;
use crate::solver::SolverParams;
use crate::tensor::MetricSpec;
use crate::weights::WeightParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub targets: TargetsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub iteration: IterationSection,
    #[serde(default)]
    pub generic: GenericSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaChoice {
    Bottom,
    Left,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub dim: usize,
    #[serde(default = "unit_extents")]
    pub extents: Vec<f64>,
    pub resolution: usize,
    #[serde(default = "bottom")]
    pub sigma: SigmaChoice,
}

fn unit_extents() -> Vec<f64> {
    vec![1.0; 3]
}

fn bottom() -> SigmaChoice {
    SigmaChoice::Bottom
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Flat,
    ConformalBump,
    RoundSphere,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection { kind: MetricKind::ConformalBump, amplitude: None, center: None, width: None, path: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub epsilon: f64,
    pub r0: f64,
    pub r1: f64,
    pub n: u32,
}

impl Default for WeightsSection {
    fn default() -> Self {
        let w = WeightParams::default();
        WeightsSection { epsilon: w.epsilon, r0: w.r0, r1: w.r1, n: w.n_power }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `R′ = R(g₀)`, `H′ = H(g₀)`.
    Zero,
    /// Bumps added to `R(g₀)` and `H(g₀)`.
    Bumps,
    /// `R′ = R(g₀ + a*)`, `H′ = H(g₀ + a*)` for a bump tensor `a*`.
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    pub kind: TargetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dr: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dh: Option<Bump>,
    /// Amplitude, tangential centre and width of `a*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<Bump>,
}

impl Default for TargetsSection {
    fn default() -> Self {
        TargetsSection { kind: TargetKind::Zero, dr: None, dh: None, manufactured: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub theta_cut_factor: f64,
    pub svd_tol: f64,
    pub max_candidates: usize,
    pub cg_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverParams::default();
        SolverSection { theta_cut_factor: s.theta_cut_factor, svd_tol: s.svd_tol, max_candidates: s.max_candidates, cg_tol: s.cg_tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationSection {
    pub tol: f64,
    pub max_iter: usize,
    pub eps_max: f64,
}

impl Default for IterationSection {
    fn default() -> Self {
        let p = PicardParams::default();
        IterationSection { tol: p.tol, max_iter: p.max_iter, eps_max: p.eps_max }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenericSection {
    /// Kernel-scan resolutions; derived from the run resolution when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolutions: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub dump_steps: bool,
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("deform-out"), dump_steps: false, seed: 1 }
    }
}

fn bad(msg: impl Into<String>) -> DeformError {
    DeformError::Config(msg.into())
}

fn finite_pos(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.domain.extents.truncate(cfg.domain.dim.max(1));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative metric files resolve against the config location
        if let (Some(p), Some(dir)) = (cfg.metric.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.dim == 2 || d.dim == 3) {
            return Err(bad(format!("domain.dim must be 2 or 3, got {}", d.dim)));
        }
        if d.extents.len() != d.dim {
            return Err(bad(format!("domain.extents needs {} entries", d.dim)));
        }
        for &e in &d.extents {
            finite_pos("domain.extents", e)?;
        }
        let max_res = if d.dim == 2 { 257 } else { 49 };
        if d.resolution < 9 || d.resolution > max_res {
            return Err(bad(format!("domain.resolution must lie in [9, {max_res}] for dim {}", d.dim)));
        }
        let m = &self.metric;
        match m.kind {
            MetricKind::ConformalBump => {
                if let Some(a) = m.amplitude {
                    if !a.is_finite() || a.abs() > 2.0 {
                        return Err(bad("metric.amplitude must be finite with |amplitude| <= 2"));
                    }
                }
                if let Some(w) = m.width {
                    finite_pos("metric.width", w)?;
                }
                if m.center.as_ref().is_some_and(|c| c.len() < d.dim) {
                    return Err(bad("metric.center needs one coordinate per dimension"));
                }
            }
            MetricKind::RoundSphere => {
                if m.center.as_ref().is_some_and(|c| c.len() < d.dim) {
                    return Err(bad("metric.center needs one coordinate per dimension"));
                }
            }
            MetricKind::File => {
                if m.path.is_none() {
                    return Err(bad("metric.kind = \"file\" needs metric.path"));
                }
            }
            MetricKind::Flat => {}
        }
        let grid = self.grid(d.resolution)?;
        self.weight_params().validate(&grid)?;
        let s = self.solver_params();
        if !(s.theta_cut_factor >= 1.0 && s.theta_cut_factor <= 10.0) {
            return Err(bad("solver.theta_cut_factor must lie in [1, 10]"));
        }
        if !(s.svd_tol > 0.0 && s.svd_tol < 1e-2) {
            return Err(bad("solver.svd_tol must lie in (0, 1e-2)"));
        }
        if s.max_candidates == 0 {
            return Err(bad("solver.max_candidates must be positive"));
        }
        if !(s.cg_tol > 0.0 && s.cg_tol < 1.0) {
            return Err(bad("solver.cg_tol must lie in (0, 1)"));
        }
        let it = &self.iteration;
        if !(it.tol >= 1e-10 && it.tol < 1.0) {
            return Err(bad("iteration.tol must lie in [1e-10, 1)"));
        }
        if it.max_iter == 0 || it.max_iter > 1000 {
            return Err(bad("iteration.max_iter must lie in [1, 1000]"));
        }
        finite_pos("iteration.eps_max", it.eps_max)?;
        let t = &self.targets;
        let check_bump = |name: &str, b: &Bump, coords: usize| -> Result<()> {
            if !b.amplitude.is_finite() {
                return Err(bad(format!("targets.{name}.amplitude must be finite")));
            }
            finite_pos(&format!("targets.{name}.width"), b.width)?;
            if b.center.len() < coords {
                return Err(bad(format!("targets.{name}.center needs {coords} coordinates")));
            }
            Ok(())
        };
        match t.kind {
            TargetKind::Zero => {}
            TargetKind::Bumps => {
                if t.dr.is_none() && t.dh.is_none() {
                    return Err(bad("targets.kind = \"bumps\" needs targets.dr or targets.dh"));
                }
                if let Some(b) = &t.dr {
                    check_bump("dr", b, d.dim)?;
                }
                if let Some(b) = &t.dh {
                    check_bump("dh", b, d.dim)?;
                }
            }
            TargetKind::Manufactured => {
                let b = t.manufactured.as_ref().ok_or_else(|| bad("targets.kind = \"manufactured\" needs targets.manufactured"))?;
                check_bump("manufactured", b, d.dim)?;
            }
        }
        if let Some(r) = &self.generic.resolutions {
            if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) || r.iter().any(|&x| x < 9 || x > max_res) {
                return Err(bad("generic.resolutions needs at least two increasing resolutions in range"));
            }
        }
        Ok(())
    }

    pub fn sigma_face(&self) -> SigmaFace {
        match self.domain.sigma {
            SigmaChoice::Bottom => SigmaFace::bottom(self.domain.dim),
            SigmaChoice::Left => SigmaFace::left(),
        }
    }

    pub fn grid(&self, resolution: usize) -> Result<DomainGrid> {
        DomainGrid::build(self.domain.dim, &self.domain.extents, resolution, self.sigma_face(), self.weights.r0)
    }

    pub fn metric_spec(&self) -> MetricSpec {
        let m = &self.metric;
        let dim = self.domain.dim;
        let def_center = |c: &[f64]| -> Vec<f64> {
            (0..dim).map(|a| c[a] * self.domain.extents[a]).collect()
        };
        match m.kind {
            MetricKind::Flat => MetricSpec::Flat,
            MetricKind::ConformalBump => {
                let MetricSpec::ConformalBump { amplitude, center, width } = MetricSpec::default_generic() else { unreachable!() };
                MetricSpec::ConformalBump {
                    amplitude: m.amplitude.unwrap_or(amplitude),
                    center: m.center.clone().unwrap_or_else(|| def_center(&center)),
                    width: m.width.unwrap_or(width),
                }
            }
            MetricKind::RoundSphere => MetricSpec::RoundSphere { center: m.center.clone().unwrap_or_else(|| def_center(&[0.5, 0.0, 0.5])) },
            MetricKind::File => MetricSpec::File { path: m.path.clone().unwrap_or_default() },
        }
    }

    pub fn weight_params(&self) -> WeightParams {
        WeightParams {
            epsilon: self.weights.epsilon,
            r0: self.weights.r0,
            r1: self.weights.r1,
            n_power: self.weights.n,
            ..WeightParams::default()
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            theta_cut_factor: self.solver.theta_cut_factor,
            svd_tol: self.solver.svd_tol,
            max_candidates: self.solver.max_candidates,
            cg_tol: self.solver.cg_tol,
            seed: self.output.seed,
        }
    }

    pub fn picard_params(&self) -> PicardParams {
        PicardParams { tol: self.iteration.tol, max_iter: self.iteration.max_iter, eps_max: self.iteration.eps_max }
    }

    /// Kernel-scan resolutions ending at `resolution`.
    pub fn scan_resolutions(&self, resolution: usize) -> Vec<usize> {
        if let Some(r) = &self.generic.resolutions {
            return r.clone();
        }
        // coarsest grid on which the collar still spans four cells
        let ext = self.domain.extents.iter().cloned().fold(0.0, f64::max);
        let min_res = (4.0 * ext / self.weights.r0).ceil() as usize + 1;
        let coarse = ((resolution - 1) / 2 + 1).max(min_res).max(9);
        let file = self.metric.kind == MetricKind::File;
        if coarse * 4 > resolution * 3 && !file {
            // too coarse to halve: refine upward instead
            let (a, b) = (3 * (resolution - 1) / 2 + 1, 2 * (resolution - 1) + 1);
            return if (resolution - 1) % 2 == 0 { vec![resolution, a, b] } else { vec![resolution, b] };
        }
        let mut out = vec![coarse.min(resolution - 1)];
        if !file && (resolution - 1) % 4 == 0 && 3 * (resolution - 1) / 4 + 1 > coarse {
            out.push(3 * (resolution - 1) / 4 + 1);
        }
        out.push(resolution);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[domain]
dim = 2
extents = [1.0, 1.0]
resolution = 33
sigma = "bottom"

[metric]
kind = "conformal_bump"
amplitude = 0.2
center = [0.5, 0.35]
width = 0.15

[targets]
kind = "manufactured"

[targets.manufactured]
amplitude = 0.01
center = [0.5, 0.0]
width = 0.25

[iteration]
tol = 1e-6
max_iter = 20
eps_max = 0.05
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.domain.resolution, 33);
        assert_eq!(cfg.targets.kind, TargetKind::Manufactured);
        let once = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&once).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), once);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let text = SAMPLE.replace("width = 0.15", "width = 0.15\nwidht = 3");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("widht"), "{err}");
        let err = RunConfig::from_toml_str(&format!("{SAMPLE}\n[extra]\nx = 1\n")).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn ranges_are_checked() {
        for (from, to) in [
            ("dim = 2", "dim = 4"),
            ("resolution = 33", "resolution = 3"),
            ("tol = 1e-6", "tol = -1.0"),
            ("amplitude = 0.01", "amplitude = nan"),
            ("eps_max = 0.05", "eps_max = 0.0"),
        ] {
            assert!(RunConfig::from_toml_str(&SAMPLE.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = RunConfig::from_toml_str("[domain]\ndim = 2\nresolution = 17\n").unwrap();
        assert_eq!(cfg.metric_spec(), MetricSpec::ConformalBump { amplitude: 0.2, center: vec![0.5, 0.35], width: 0.15 });
        assert_eq!(cfg.targets.kind, TargetKind::Zero);
        assert_eq!(cfg.scan_resolutions(33), vec![17, 25, 33]);
        assert_eq!(cfg.scan_resolutions(17), vec![17, 25, 33]);
    }

    proptest::proptest! {
        #[test]
        fn round_trip_preserves_every_value(
            half in 8usize..40,
            amp in 1e-4f64..0.5,
            cx in 0.1f64..0.9,
            width in 0.05f64..0.4,
            tol in 1e-10f64..1e-3,
            max_iter in 1usize..100,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let mut cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
            cfg.domain.resolution = 2 * half + 1;
            cfg.targets.manufactured = Some(Bump { amplitude: amp, center: vec![cx, 0.0], width });
            cfg.iteration.tol = tol;
            cfg.iteration.max_iter = max_iter;
            cfg.output.seed = seed;
            cfg.validate().unwrap();
            let back = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            proptest::prop_assert_eq!(back, cfg);
        }
    }
}
