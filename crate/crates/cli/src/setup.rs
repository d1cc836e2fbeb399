//! Turns a validated config into a propagation engine and observed data.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::FileConfig;
use hypoloc::exec::ExecMode;
use hypoloc::wave::{self, FdEngine, HomogeneousPropagator, Propagator, SeismogramSet};

pub const TRACES_FILE: &str = "traces.seis";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Which solver a run ended up on, for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    Analytic,
    Grid,
}

pub fn build_engine(cfg: &FileConfig, exec: ExecMode) -> Result<(Box<dyn Propagator>, EngineTag)> {
    if cfg.needs_grid_engine() {
        let eng = FdEngine::new(&cfg.velocity_model(), cfg.sim_config()?, cfg.receiver_array(), exec)?;
        Ok((Box::new(eng), EngineTag::Grid))
    } else {
        let c0 = cfg.model.c0_km_s.expect("validated: constant model has c0");
        let eng = HomogeneousPropagator::new(c0, cfg.receiver_array(), cfg.time.dt_s, cfg.nt())
            .with_exec(exec);
        Ok((Box::new(eng), EngineTag::Analytic))
    }
}

/// What a synth run records next to its traces, and what later runs check
/// before trusting a data directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub run: String,
    pub engine: String,
    pub dt_s: f64,
    pub nt: usize,
    pub record_s: f64,
    pub stations: Vec<StationRow>,
    pub truth: TruthRow,
    pub binary: String,
    pub csv: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StationRow {
    pub index: usize,
    pub x_km: f64,
    pub z_km: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TruthRow {
    pub x_km: f64,
    pub z_km: f64,
    pub tau_s: f64,
    pub f0_hz: f64,
    pub amplitude: f64,
}

pub fn station_rows(cfg: &FileConfig) -> Vec<StationRow> {
    cfg.receiver_array()
        .iter()
        .map(|(i, p)| StationRow { index: i, x_km: p.x, z_km: p.z })
        .collect()
}

/// Loads observed traces from a synth output directory, demanding that
/// the manifest agrees with the current config's clock and stations.
pub fn load_observed(cfg: &FileConfig, dir: &Path) -> Result<SeismogramSet> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)
        .with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let man: Manifest = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", manifest_path.display()))?;
    if (man.dt_s - cfg.time.dt_s).abs() > 1e-12 {
        bail!("data dir has dt = {} s but the config says {} s", man.dt_s, cfg.time.dt_s);
    }
    if man.nt != cfg.nt() {
        bail!("data dir has {} samples per trace but the config says {}", man.nt, cfg.nt());
    }
    let want = station_rows(cfg);
    if man.stations.len() != want.len() {
        bail!("data dir has {} stations but the config says {}", man.stations.len(), want.len());
    }
    for (a, b) in man.stations.iter().zip(&want) {
        if a.index != b.index || (a.x_km - b.x_km).abs() > 1e-9 || (a.z_km - b.z_km).abs() > 1e-9 {
            bail!(
                "station {} sits at ({}, {}) in the data dir but at ({}, {}) in the config",
                b.index,
                a.x_km,
                a.z_km,
                b.x_km,
                b.z_km
            );
        }
    }
    let set = wave::io::read_binary(&dir.join(&man.binary))?;
    if set.len() != want.len() || set.nt() != man.nt {
        bail!("trace file disagrees with its manifest");
    }
    Ok(set)
}
