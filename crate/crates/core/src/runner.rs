//! Batch driver: expand a config into sweep cells, compute each cell's OTOC
//! series and spectrum on a bounded worker pool, and write deterministic CSV
//! and JSON artifacts.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::set_register_ceiling;
use crate::analysis::{fourier_spectrum_with, Spectrum, SpectrumOptions};
use crate::config::{ExperimentConfig, ExperimentKind, ModeKind, ResolvedCell};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionMode, LindbladDiagnostics};
use crate::mqc::coherence_order;
use crate::otoc::{ctp_attenuation_factor, layer_scrambling_otoc, otoc_mqc, OtocSeries};
use crate::topology::HamiltonianParams;
use crate::util::fnv1a64;

/// Environment variable bounding the worker pool; defaults to the available
/// parallelism.
pub const WORKERS_ENV: &str = "OTOC_SIM_WORKERS";

/// Manifest entry for one computed cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub label: String,
    pub g: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<i64>,
    pub branches: usize,
    pub mode: String,
    pub series_file: String,
    pub spectrum_file: String,
    pub normalization: f64,
    pub imag_residue: f64,
    pub min_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ctp_attenuation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lindblad: Option<LindbladDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub cells: Vec<CellRecord>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    cells: &'a [CellRecord],
}

/// Stable fingerprint of the canonical config serialization.
pub fn config_hash(config: &ExperimentConfig) -> String {
    format!("{:016x}", fnv1a64(config.to_canonical_json().as_bytes()))
}

fn float_token(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

fn cell_file_stem(config: &ExperimentConfig, cell: &ResolvedCell) -> String {
    match config.experiment {
        ExperimentKind::Mqc => format!(
            "g{}_n{}_{}",
            float_token(cell.g),
            cell.n.expect("mqc cell has n"),
            cell.mode.label()
        ),
        ExperimentKind::LayerScrambling => {
            format!("K{}_g{}_{}", cell.branches, float_token(cell.g), cell.mode.label())
        }
    }
}

struct CellOutput {
    record: CellRecord,
    series: OtocSeries,
    spectrum: Spectrum,
}

fn compute_cell(
    config: &ExperimentConfig,
    cell: &ResolvedCell,
    jt_grid: &[f64],
) -> Result<CellOutput> {
    let topology = config.cell_topology(cell)?;
    let params = HamiltonianParams {
        j_hz: config.j_hz,
        g: cell.g,
        central_field_once: config.flags.central_field_once,
    };
    let mode = config.cell_mode(cell)?;

    let started = Instant::now();
    let (mut series, q) = match config.experiment {
        ExperimentKind::Mqc => {
            let n = cell.n.expect("validated");
            let series = otoc_mqc(&topology, &params, n, jt_grid, &mode)?;
            (series, Some(coherence_order(topology.n1(), n)))
        }
        ExperimentKind::LayerScrambling => {
            if cell.mode != ModeKind::UnitaryOnly {
                return Err(Error::Config(
                    "layer_scrambling experiments support only unitary_only".into(),
                ));
            }
            (layer_scrambling_otoc(&topology, &params, jt_grid)?, None)
        }
    };

    let mut attenuation = None;
    if config.flags.ctp_attenuation {
        if let (EvolutionMode::Ctp { total_jt }, Some(dec)) = (&mode, &config.decoherence) {
            let factor = ctp_attenuation_factor(&topology, dec, *total_jt);
            for v in series.values.iter_mut() {
                *v *= factor;
            }
            attenuation = Some(factor);
        }
    }

    let opts = SpectrumOptions { window: config.flags.window, zero_pad_to: config.flags.zero_pad };
    let spectrum = fourier_spectrum_with(&series, &opts)?;

    let stem = cell_file_stem(config, cell);
    let min_value = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let record = CellRecord {
        label: series.meta.label.clone(),
        g: cell.g,
        n: cell.n,
        q,
        branches: cell.branches,
        mode: cell.mode.label().to_string(),
        series_file: format!("series_{stem}.csv"),
        spectrum_file: format!("spectrum_{stem}.csv"),
        normalization: series.meta.normalization,
        imag_residue: series.meta.imag_residue,
        min_value,
        ctp_attenuation: attenuation,
        lindblad: series.meta.lindblad,
    };
    eprintln!(
        "[otoc-sim] cell {} K={} g={} ({}) done in {:.1}s",
        record.label,
        record.branches,
        record.g,
        record.mode,
        started.elapsed().as_secs_f64()
    );
    Ok(CellOutput { record, series, spectrum })
}

fn write_csv(path: &Path, hash: &str, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "# config_hash={hash}")?;
    writeln!(file, "{header}")?;
    for (x, y) in rows {
        writeln!(file, "{x},{y}")?;
    }
    Ok(())
}

/// Run the sweep, writing one series CSV and one spectrum CSV per cell plus
/// a `manifest.json`. Outputs are byte-identical across reruns of the same
/// config.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    run_with_output(config, None)
}

pub fn run_with_output(
    config: &ExperimentConfig,
    out_dir_override: Option<&Path>,
) -> Result<RunSummary> {
    if let Some(max) = config.max_qubits {
        set_register_ceiling(max);
    }
    config.validate()?;
    let cells = config.resolved_cells()?;
    let jt_grid = config.t_grid.jt_grid();
    let hash = config_hash(config);
    let out_dir = out_dir_override.unwrap_or(&config.output.dir).to_path_buf();
    fs::create_dir_all(&out_dir)?;

    let started = Instant::now();
    eprintln!("[otoc-sim] running {} cells on {} workers", cells.len(), rayon::current_num_threads());

    let outputs: Vec<Result<CellOutput>> =
        cells.par_iter().map(|cell| compute_cell(config, cell, &jt_grid)).collect();

    let mut records = Vec::with_capacity(outputs.len());
    for output in outputs {
        let output = output?;
        write_csv(
            &out_dir.join(&output.record.series_file),
            &hash,
            "Jt,value",
            &output
                .series
                .jt
                .iter()
                .cloned()
                .zip(output.series.values.iter().cloned())
                .collect::<Vec<_>>(),
        )?;
        write_csv(
            &out_dir.join(&output.record.spectrum_file),
            &hash,
            "freq_J,magnitude",
            &output
                .spectrum
                .freqs
                .iter()
                .cloned()
                .zip(output.spectrum.mags.iter().cloned())
                .collect::<Vec<_>>(),
        )?;
        records.push(output.record);
    }

    let manifest = Manifest { config_hash: &hash, config, cells: &records };
    let manifest_path = out_dir.join("manifest.json");
    let mut file = std::io::BufWriter::new(fs::File::create(&manifest_path)?);
    serde_json::to_writer_pretty(&mut file, &manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    file.write_all(b"\n")?;

    eprintln!(
        "[otoc-sim] wrote {} cells to {} in {:.1}s",
        records.len(),
        out_dir.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(RunSummary { config_hash: hash, out_dir, cells: records })
}

/// Dry-run feasibility report.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub n_qubits: usize,
    pub dim: usize,
    pub n1: usize,
    pub n2: usize,
    pub operator_bytes: u64,
    pub cells: usize,
    pub eigensolves: usize,
    pub ceiling: usize,
    pub feasible: bool,
    pub issues: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "register:    N = {} qubits (N1 = {}, N2 = {})", self.n_qubits, self.n1, self.n2)?;
        writeln!(f, "dimension:   {}", self.dim)?;
        writeln!(
            f,
            "memory:      {:.1} MiB per dense operator (16 B x 4^N)",
            self.operator_bytes as f64 / (1024.0 * 1024.0)
        )?;
        writeln!(f, "cells:       {}", self.cells)?;
        writeln!(f, "eigensolves: {} (distinct Hamiltonians)", self.eigensolves)?;
        writeln!(f, "ceiling:     {} qubits", self.ceiling)?;
        writeln!(f, "feasible:    {}", if self.feasible { "yes" } else { "NO" })?;
        for issue in &self.issues {
            writeln!(f, "issue:       {issue}")?;
        }
        Ok(())
    }
}

/// Report-only feasibility check; never fails on an infeasible config.
pub fn validate(config: &ExperimentConfig) -> ValidationReport {
    let ceiling = config.effective_ceiling();
    let topo = &config.topology;
    let n_qubits = topo.n_qubits();
    let mut issues = Vec::new();

    let cells = match config.resolved_cells() {
        Ok(c) => c,
        Err(e) => {
            issues.push(e.to_string());
            Vec::new()
        }
    };

    // distinct Hamiltonians: (branches, g, decoupled?) triples
    let mut keys: Vec<(usize, u64, bool)> = cells
        .iter()
        .map(|c| (c.branches, c.g.to_bits(), c.mode == ModeKind::DecoherenceOnly))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let mut feasible = n_qubits <= ceiling;
    for cell in &cells {
        let cell_qubits = 1 + cell.branches * (topo.h_per_branch + topo.f_per_h);
        if cell_qubits > ceiling {
            feasible = false;
            issues.push(format!(
                "cell with {} branches needs {} qubits, above the ceiling {}",
                cell.branches, cell_qubits, ceiling
            ));
        }
    }
    if let Err(e) = config.validate() {
        match &e {
            Error::RegisterCeiling { .. } => feasible = false,
            _ => {}
        }
        issues.push(e.to_string());
    }

    ValidationReport {
        n_qubits,
        dim: 1usize << n_qubits.min(40),
        n1: topo.n1(),
        n2: topo.n2(),
        operator_bytes: 16u64.saturating_mul(1u64 << (2 * n_qubits.min(30)) as u32),
        cells: cells.len(),
        eigensolves: keys.len(),
        ceiling,
        feasible,
        issues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset_config;

    #[test]
    fn validate_reports_k2_dimensions() {
        let cfg = preset_config("fig3").unwrap();
        let report = validate(&cfg);
        assert_eq!(report.n_qubits, 11);
        assert_eq!(report.dim, 2048);
        assert!(report.feasible);
        assert_eq!(report.cells, 20);
        assert_eq!(report.eigensolves, 4);
        // 16 B * 4^11 = 64 MiB
        assert_eq!(report.operator_bytes, 16 * (1u64 << 22));
    }

    #[test]
    fn validate_flags_infeasible_topology() {
        let mut cfg = preset_config("fig3").unwrap();
        cfg.topology.branches = 3; // 16 qubits
        let report = validate(&cfg);
        assert_eq!(report.n_qubits, 16);
        assert!(!report.feasible);
        assert!(!report.issues.is_empty());
    }

    #[test]
    fn validate_k1_arithmetic() {
        let mut cfg = preset_config("fig3").unwrap();
        cfg.topology.branches = 1;
        let report = validate(&cfg);
        assert_eq!(report.n_qubits, 6);
        assert_eq!(report.dim, 64);
    }

    #[test]
    fn config_hash_is_stable_and_input_sensitive() {
        let a = preset_config("fig3").unwrap();
        let b = preset_config("fig3").unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let mut c = preset_config("fig3").unwrap();
        c.j_hz = 9.0;
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn file_stems_are_filesystem_safe() {
        let cfg = preset_config("fig3").unwrap();
        let cells = cfg.resolved_cells().unwrap();
        for cell in &cells {
            let stem = cell_file_stem(&cfg, cell);
            assert!(stem.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.'));
        }
    }
}
