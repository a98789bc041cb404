//! CSV and manifest writers. Floats are printed with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use ufde::{AlphaSurface, DistributionCurve, StudyRow, Trajectory};

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> io::Result<()> {
    let mut out = String::from("t,x\n");
    for (t, x) in traj.grid.nodes().iter().zip(&traj.values) {
        out.push_str(&format!("{t},{x}\n"));
    }
    std::fs::write(path, out)
}

pub fn write_surface(path: &Path, surface: &AlphaSurface) -> io::Result<()> {
    let mut out = String::from("t");
    for a in surface.alpha_grid().values() {
        out.push_str(&format!(",alpha_{a}"));
    }
    out.push('\n');
    for (j, t) in surface.time_grid().nodes().iter().enumerate() {
        out.push_str(&format!("{t}"));
        for i in 0..surface.alpha_grid().len() {
            out.push_str(&format!(",{}", surface.row(i)[j]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)
}

pub fn write_curve(path: &Path, curve: &DistributionCurve) -> io::Result<()> {
    let mut out = String::from("abscissa,value\n");
    for (a, v) in curve.abscissae.iter().zip(&curve.ordinates) {
        out.push_str(&format!("{a},{v}\n"));
    }
    std::fs::write(path, out)
}

/// Generic two-column curve (expected values over time and the like).
pub fn write_pairs(path: &Path, pairs: &[(f64, f64)]) -> io::Result<()> {
    let mut out = String::from("abscissa,value\n");
    for (a, v) in pairs {
        out.push_str(&format!("{a},{v}\n"));
    }
    std::fs::write(path, out)
}

pub fn write_study(path: &Path, rows: &[StudyRow]) -> io::Result<()> {
    let mut out = String::from("param,mae,log10_mae\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.parameter, r.mae, r.log10_mae));
    }
    std::fs::write(path, out)
}

#[derive(Serialize)]
pub struct ProblemManifest {
    pub source: String,
    pub drift: String,
    pub diffusion: String,
    pub nu: f64,
    pub x0: f64,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct SolverManifest {
    pub order: usize,
    pub memory: String,
    pub corrector_iterations: usize,
    pub bootstrap_refine: usize,
    pub domain_policy: String,
}

#[derive(Serialize)]
pub struct GridManifest {
    pub t_start: f64,
    pub t_end: f64,
    pub h: f64,
    pub nodes: usize,
}

/// Reproducibility record written next to every CSV.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub version: String,
    pub problem: ProblemManifest,
    pub solver: SolverManifest,
    pub time_grid: GridManifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytics: Option<serde_json::Value>,
    pub determinism: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn determinism_note() -> String {
        "outputs are a pure function of this manifest; no randomness, time, \
         locale or thread-order dependence"
            .to_string()
    }
}

/// Manifest path for a given CSV path: `<stem>.manifest.json` next to it.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

pub fn write_manifest(csv: &Path, manifest: &RunManifest) -> io::Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(manifest_path(csv), json + "\n")
}
