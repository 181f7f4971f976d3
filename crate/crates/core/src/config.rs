//! Experiment configuration: a JSON schema describing one sweep, plus the
//! named presets shipped with the repository.

use serde::{Deserialize, Serialize};

use crate::algebra::DEFAULT_REGISTER_CEILING;
use crate::analysis::WindowKind;
use crate::error::{Error, Result};
use crate::evolution::{DecoherenceParams, EvolutionMode};
use crate::topology::TopologySpec;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Mqc,
    LayerScrambling,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    UnitaryOnly,
    DecoherenceOnly,
    UnitaryPlusDecoherence,
    Ctp,
}

impl ModeKind {
    pub fn needs_decoherence(self) -> bool {
        matches!(self, ModeKind::DecoherenceOnly | ModeKind::UnitaryPlusDecoherence)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModeKind::UnitaryOnly => "unitary_only",
            ModeKind::DecoherenceOnly => "decoherence_only",
            ModeKind::UnitaryPlusDecoherence => "unitary_plus_decoherence",
            ModeKind::Ctp => "ctp",
        }
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub max_jt: f64,
    pub n_points: usize,
}

impl TimeGridSpec {
    pub fn jt_grid(&self) -> Vec<f64> {
        crate::util::linspace(self.max_jt, self.n_points)
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtpConfig {
    pub total_jt: f64,
}

/// One explicitly pinned sweep cell; overrides the product sweep when a
/// `cells` list is present.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub g: f64,
    #[serde(default)]
    pub n: Option<usize>,
    pub mode: ModeKind,
    #[serde(default)]
    pub branches: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: std::path::PathBuf,
}

fn default_out_dir() -> std::path::PathBuf {
    std::path::PathBuf::from("out")
}

#[derive(Copy, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub central_field_once: bool,
    /// Multiply CTP series by the constant dephasing attenuation of the
    /// initial coherence over the fixed total time (display parity only).
    #[serde(default)]
    pub ctp_attenuation: bool,
    #[serde(default)]
    pub window: Option<WindowKind>,
    #[serde(default)]
    pub zero_pad: Option<usize>,
}

/// Full description of one batch run. All physical preconditions are
/// re-checked on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub j_hz: f64,
    #[serde(default)]
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub g_list: Vec<f64>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Layer-scrambling runs may sweep the branch count.
    #[serde(default)]
    pub branch_list: Option<Vec<usize>>,
    pub t_grid: TimeGridSpec,
    #[serde(default)]
    pub mode: Option<ModeKind>,
    #[serde(default)]
    pub modes: Vec<ModeKind>,
    #[serde(default)]
    pub decoherence: Option<DecoherenceParams>,
    #[serde(default)]
    pub ctp: Option<CtpConfig>,
    #[serde(default)]
    pub cells: Option<Vec<CellSpec>>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub flags: Flags,
    /// Raise or lower the register ceiling for this run (default 12).
    #[serde(default)]
    pub max_qubits: Option<usize>,
}

/// One fully resolved unit of work.
#[derive(Clone, Debug)]
pub struct ResolvedCell {
    pub g: f64,
    pub n: Option<usize>,
    pub branches: usize,
    pub mode: ModeKind,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Ceiling this config asks for (the process default unless raised).
    pub fn effective_ceiling(&self) -> usize {
        self.max_qubits.unwrap_or(DEFAULT_REGISTER_CEILING)
    }

    pub fn effective_modes(&self) -> Result<Vec<ModeKind>> {
        match (self.mode, self.modes.is_empty()) {
            (Some(m), true) => Ok(vec![m]),
            (None, false) => Ok(self.modes.clone()),
            (None, true) => Err(Error::Config(
                "set either `mode` or a non-empty `modes` list".into(),
            )),
            (Some(_), false) => Err(Error::Config(
                "`mode` and `modes` are mutually exclusive".into(),
            )),
        }
    }

    /// Expand the sweep into concrete cells, explicit `cells` taking
    /// precedence over the (g, n, mode) product.
    pub fn resolved_cells(&self) -> Result<Vec<ResolvedCell>> {
        let default_branches = self.topology.branches;
        if let Some(cells) = &self.cells {
            if cells.is_empty() {
                return Err(Error::Config("`cells` must not be empty when present".into()));
            }
            return Ok(cells
                .iter()
                .map(|c| ResolvedCell {
                    g: c.g,
                    n: c.n,
                    branches: c.branches.unwrap_or(default_branches),
                    mode: c.mode,
                })
                .collect());
        }

        let modes = self.effective_modes()?;
        if self.g_list.is_empty() {
            return Err(Error::Config("`g_list` must not be empty".into()));
        }
        let mut out = Vec::new();
        match self.experiment {
            ExperimentKind::Mqc => {
                if self.n_list.is_empty() {
                    return Err(Error::Config(
                        "`n_list` must not be empty for an MQC experiment".into(),
                    ));
                }
                for &g in &self.g_list {
                    for &n in &self.n_list {
                        for &mode in &modes {
                            out.push(ResolvedCell {
                                g,
                                n: Some(n),
                                branches: default_branches,
                                mode,
                            });
                        }
                    }
                }
            }
            ExperimentKind::LayerScrambling => {
                let branch_list =
                    self.branch_list.clone().unwrap_or_else(|| vec![default_branches]);
                for &branches in &branch_list {
                    for &g in &self.g_list {
                        for &mode in &modes {
                            out.push(ResolvedCell { g, n: None, branches, mode });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Topology for a cell (the branch count may be swept).
    pub fn cell_topology(&self, cell: &ResolvedCell) -> Result<TopologySpec> {
        TopologySpec::new(cell.branches, self.topology.h_per_branch, self.topology.f_per_h)
    }

    /// Full evolution mode for a cell, with its dephasing / schedule
    /// parameters attached.
    pub fn cell_mode(&self, cell: &ResolvedCell) -> Result<EvolutionMode> {
        match cell.mode {
            ModeKind::UnitaryOnly => Ok(EvolutionMode::UnitaryOnly),
            ModeKind::Ctp => {
                let ctp = self
                    .ctp
                    .ok_or_else(|| Error::Config("ctp mode requires a `ctp` section".into()))?;
                Ok(EvolutionMode::Ctp { total_jt: ctp.total_jt })
            }
            ModeKind::DecoherenceOnly => {
                Ok(EvolutionMode::DecoherenceOnly(self.require_decoherence()?))
            }
            ModeKind::UnitaryPlusDecoherence => {
                Ok(EvolutionMode::UnitaryPlusDecoherence(self.require_decoherence()?))
            }
        }
    }

    fn require_decoherence(&self) -> Result<DecoherenceParams> {
        self.decoherence.ok_or_else(|| {
            Error::Config("dephasing modes require a `decoherence` section".into())
        })
    }

    /// Re-check every physical precondition. Called on load and before
    /// running.
    pub fn validate(&self) -> Result<()> {
        if !(self.j_hz > 0.0) {
            return Err(Error::Config(format!("j_hz must be positive, got {}", self.j_hz)));
        }
        if self.t_grid.n_points < 16 {
            return Err(Error::Config(
                "t_grid.n_points must be at least 16 (spectra need 16 samples)".into(),
            ));
        }
        if !(self.t_grid.max_jt > 0.0) {
            return Err(Error::Config("t_grid.max_jt must be positive".into()));
        }
        for &g in &self.g_list {
            if !(g >= 0.0) {
                return Err(Error::Config(format!("g values must be >= 0, got {g}")));
            }
        }

        let cells = self.resolved_cells()?;
        for cell in &cells {
            let topo = self.cell_topology(cell).map_err(|e| match e {
                Error::RegisterCeiling { qubits, ceiling } => {
                    Error::RegisterCeiling { qubits, ceiling }
                }
                other => Error::Config(format!("cell (g={}, mode={:?}): {other}", cell.g, cell.mode)),
            })?;
            if !(cell.g >= 0.0) {
                return Err(Error::Config(format!("g values must be >= 0, got {}", cell.g)));
            }
            match self.experiment {
                ExperimentKind::Mqc => {
                    let n = cell.n.ok_or_else(|| {
                        Error::Config("MQC cells need a coherence selector `n`".into())
                    })?;
                    if n > topo.n1() {
                        return Err(Error::Config(format!(
                            "n = {n} exceeds the first-layer size N1 = {}",
                            topo.n1()
                        )));
                    }
                }
                ExperimentKind::LayerScrambling => {}
            }
            if cell.mode.needs_decoherence() {
                let dec = self.require_decoherence()?;
                dec.validate(topo.n_qubits())?;
            }
            if cell.mode == ModeKind::Ctp {
                let ctp = self
                    .ctp
                    .ok_or_else(|| Error::Config("ctp mode requires a `ctp` section".into()))?;
                if ctp.total_jt < self.t_grid.max_jt {
                    return Err(Error::Config(format!(
                        "ctp.total_jt = {} is shorter than the grid maximum {}",
                        ctp.total_jt, self.t_grid.max_jt
                    )));
                }
            }
        }
        Ok(())
    }
}

pub const PRESET_NAMES: [&str; 4] = ["fig3", "fig5", "fig6-modes", "fig7-ambiguity"];

/// Built-in preset by name; the same JSON files ship under `presets/`.
pub fn preset_config(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "fig3" => include_str!("../../../presets/fig3.json"),
        "fig5" => include_str!("../../../presets/fig5.json"),
        "fig6-modes" => include_str!("../../../presets/fig6-modes.json"),
        "fig7-ambiguity" => include_str!("../../../presets/fig7-ambiguity.json"),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let config = ExperimentConfig::from_json(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "topology": {"branches": 1, "h_per_branch": 2, "f_per_h": 3},
            "j_hz": 8.7,
            "g_list": [0.0, 0.3],
            "n_list": [0, 1],
            "t_grid": {"max_jt": 2.0, "n_points": 32},
            "mode": "unitary_only"
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_and_validates() {
        let cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        cfg.validate().unwrap();
        let cells = cfg.resolved_cells().unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.branches == 1));
    }

    #[test]
    fn unknown_field_is_named_in_the_diagnostic() {
        let bad = minimal_json().replace("\"j_hz\"", "\"j_hzz\"");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("j_hzz"), "diagnostic should name the field: {msg}");
    }

    #[test]
    fn dephasing_mode_requires_decoherence_section() {
        let cfg_text = minimal_json().replace("unitary_only", "unitary_plus_decoherence");
        let cfg = ExperimentConfig::from_json(&cfg_text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ctp_total_must_cover_the_grid() {
        let mut cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        cfg.mode = Some(ModeKind::Ctp);
        cfg.ctp = Some(CtpConfig { total_jt: 1.0 });
        assert!(cfg.validate().is_err());
        cfg.ctp = Some(CtpConfig { total_jt: 2.0 });
        cfg.validate().unwrap();
    }

    #[test]
    fn mode_and_modes_are_exclusive() {
        let mut cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        cfg.modes = vec![ModeKind::UnitaryOnly];
        assert!(cfg.effective_modes().is_err());
        cfg.mode = None;
        assert_eq!(cfg.effective_modes().unwrap(), vec![ModeKind::UnitaryOnly]);
    }

    #[test]
    fn explicit_cells_override_the_product() {
        let mut cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        cfg.cells = Some(vec![CellSpec {
            g: 0.3,
            n: Some(1),
            mode: ModeKind::UnitaryOnly,
            branches: None,
        }]);
        let cells = cfg.resolved_cells().unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].g, 0.3);
    }

    #[test]
    fn all_presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let cfg = preset_config(name).unwrap_or_else(|e| panic!("preset {name}: {e}"));
            let cells = cfg.resolved_cells().unwrap();
            assert!(!cells.is_empty(), "preset {name} has no cells");
        }
        assert!(preset_config("nope").is_err());
    }

    #[test]
    fn fig3_preset_is_the_twenty_cell_matrix() {
        let cfg = preset_config("fig3").unwrap();
        let cells = cfg.resolved_cells().unwrap();
        assert_eq!(cells.len(), 20);
        assert_eq!(cfg.topology.branches, 2);
        assert_eq!(cfg.t_grid.n_points, 256);
        assert_eq!(cfg.t_grid.max_jt, 5.0);
    }

    #[test]
    fn fig6_preset_runs_the_three_modes_for_q_minus_one() {
        let cfg = preset_config("fig6-modes").unwrap();
        let cells = cfg.resolved_cells().unwrap();
        assert_eq!(cells.len(), 3);
        let modes: Vec<ModeKind> = cells.iter().map(|c| c.mode).collect();
        assert_eq!(
            modes,
            vec![ModeKind::DecoherenceOnly, ModeKind::UnitaryPlusDecoherence, ModeKind::Ctp]
        );
        // n = 3 selects q = -1 on the four-spin first layer
        assert!(cells.iter().all(|c| c.n == Some(3) && c.g == 0.0));
    }

    #[test]
    fn fig7_preset_pins_the_two_ambiguity_cells() {
        let cfg = preset_config("fig7-ambiguity").unwrap();
        let cells = cfg.resolved_cells().unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].mode, ModeKind::UnitaryPlusDecoherence);
        assert_eq!(cells[0].g, 0.0);
        assert_eq!(cells[1].mode, ModeKind::UnitaryOnly);
        assert_eq!(cells[1].g, 0.3);
        assert_eq!(cfg.decoherence.unwrap().t2_star_jt, 2.0);
    }
}
