//! Command orchestration: susceptibility scans, propagation runs with
//! on-disk snapshots, and offline re-analysis of serialized runs.

use crate::analysis::{beam_metrics, cloning_fidelity};
use crate::beams::BeamError;
use crate::config::{echo_config, ConfigError, RunConfig};
use crate::field::{ComplexField, FieldError};
use crate::io::{
    fmt_f64, read_cptf, write_cptf, write_intensity_pgm, FieldId, FormatError,
};
use crate::medium::{susceptibility, MediumError};
use crate::propagator::{FieldState, PropagateError, Propagator, SnapshotPlan};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run directory is missing {0}")]
    MissingInput(String),
}

fn io_err(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

pub const METRICS_HEADER: &str =
    "z_cm,field,fwhm_x_cm,fwhm_y_cm,w2m_cm,peak_intensity,power,transmission,fidelity_vs_control_in";

/// Susceptibility scan along one transverse line of the synthesized initial
/// beams; returns CSV text.
pub fn chi_scan_csv(cfg: &RunConfig, axis: Axis, fixed: f64) -> Result<String, RunError> {
    let grid = cfg.grid;
    let probe = cfg.probe.synthesize(grid)?;
    let control = cfg.control.synthesize(grid)?;

    let mut out = String::from("coord_cm,re_c31,im_c31,re_c32,im_c32,abs_g,abs_G\n");
    let mut push_row = |coord: f64, g: num_complex::Complex64, big_g: num_complex::Complex64| -> Result<(), RunError> {
        let chi = susceptibility(&cfg.medium, &crate::medium::FieldPoint::new(g, big_g))?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(coord),
            fmt_f64(chi.c31.re),
            fmt_f64(chi.c31.im),
            fmt_f64(chi.c32.re),
            fmt_f64(chi.c32.im),
            fmt_f64(g.norm()),
            fmt_f64(big_g.norm())
        )
        .expect("string write");
        Ok(())
    };

    match axis {
        Axis::X => {
            let iy = nearest(grid.ys(), fixed);
            for ix in 0..grid.nx() {
                push_row(grid.x(ix), probe.at(ix, iy), control.at(ix, iy))?;
            }
        }
        Axis::Y => {
            let ix = nearest(grid.xs(), fixed);
            for iy in 0..grid.ny() {
                push_row(grid.y(iy), probe.at(ix, iy), control.at(ix, iy))?;
            }
        }
    }
    Ok(out)
}

fn nearest(coords: Vec<f64>, target: f64) -> usize {
    coords
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
        .unwrap()
}

/// Everything a propagation run left on disk, plus the in-memory endpoints.
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub input: FieldState,
    pub final_state: FieldState,
    pub snapshot_count: usize,
    pub metrics_csv: PathBuf,
}

/// One metrics row; NaN marks metrics undefined for the profile (e.g. FWHM
/// of a plane wave).
fn metrics_row(
    z: f64,
    name: &str,
    field: &ComplexField,
    input_power: f64,
    control_in: &ComplexField,
) -> String {
    let (fwhm_x, fwhm_y, w2m, peak) = match beam_metrics(field) {
        Ok(m) => (m.fwhm_x, m.fwhm_y, m.w_2m, m.peak_intensity),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, field.peak_intensity()),
    };
    let power = field.power();
    let transmission = if input_power > 0.0 {
        power / input_power
    } else {
        f64::NAN
    };
    let fidelity = cloning_fidelity(field, control_in).unwrap_or(f64::NAN);
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(z),
        name,
        fmt_f64(fwhm_x),
        fmt_f64(fwhm_y),
        fmt_f64(w2m),
        fmt_f64(peak),
        fmt_f64(power),
        fmt_f64(transmission),
        fmt_f64(fidelity)
    )
}

fn state_rows(state: &FieldState, input: &FieldState) -> [String; 2] {
    [
        metrics_row(
            state.z,
            "probe",
            &state.probe,
            input.probe.power(),
            &input.control,
        ),
        metrics_row(
            state.z,
            "control",
            &state.control,
            input.control.power(),
            &input.control,
        ),
    ]
}

struct OutputTracker {
    written: Vec<PathBuf>,
}

impl OutputTracker {
    fn write_state(&mut self, dir: &Path, prefix: &str, state: &FieldState) -> Result<(), RunError> {
        for (id, field) in [
            (FieldId::Probe, &state.probe),
            (FieldId::Control, &state.control),
        ] {
            let cptf = dir.join(format!("{prefix}_{}.cptf", id.name()));
            write_cptf(&cptf, field, state.z, id)?;
            self.written.push(cptf);
            let pgm = dir.join(format!("{prefix}_{}.pgm", id.name()));
            write_intensity_pgm(&pgm, field)?;
            self.written.push(pgm.clone());
            self.written.push(crate::io::sidecar_path(&pgm));
        }
        Ok(())
    }

    fn cleanup(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Synthesize, propagate, and serialize a run into `out_dir`. Partial
/// outputs are removed if the run aborts.
pub fn propagate_run(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut tracker = OutputTracker {
        written: Vec::new(),
    };
    match propagate_run_inner(cfg, out_dir, &mut tracker) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            tracker.cleanup();
            Err(e)
        }
    }
}

fn propagate_run_inner(
    cfg: &RunConfig,
    out_dir: &Path,
    tracker: &mut OutputTracker,
) -> Result<RunSummary, RunError> {
    let echo_path = out_dir.join("effective_config.toml");
    std::fs::write(&echo_path, echo_config(cfg)).map_err(|e| io_err(&echo_path, e))?;
    tracker.written.push(echo_path);

    let probe = cfg.probe.synthesize(cfg.grid)?;
    let control = cfg.control.synthesize(cfg.grid)?;
    let input = FieldState::new(probe, control, 0.0)?;
    tracker.write_state(out_dir, "input", &input)?;

    let mut rows: Vec<String> = vec![METRICS_HEADER.to_string()];
    rows.extend(state_rows(&input, &input));

    let mut prop = Propagator::new(cfg.grid, &cfg.medium, cfg.step)?;
    let (final_state, snapshots) = prop.propagate(&input, cfg.z_end, &cfg.snapshots)?;

    for (k, snap) in snapshots.iter().enumerate() {
        tracker.write_state(out_dir, &format!("snap_{k:03}"), &snap.state)?;
        rows.extend(state_rows(&snap.state, &input));
    }
    tracker.write_state(out_dir, "final", &final_state)?;
    rows.extend(state_rows(&final_state, &input));

    let metrics_csv = out_dir.join("metrics.csv");
    std::fs::write(&metrics_csv, rows.join("\n") + "\n").map_err(|e| io_err(&metrics_csv, e))?;
    tracker.written.push(metrics_csv.clone());

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        input,
        final_state,
        snapshot_count: snapshots.len(),
        metrics_csv,
    })
}

/// Recompute every metric of a serialized run from its CPTF files alone;
/// byte-identical to the in-run metrics.csv when the directory is complete.
pub fn analyze_run(run_dir: &Path) -> Result<String, RunError> {
    let load_state = |prefix: &str| -> Result<FieldState, RunError> {
        let probe_path = run_dir.join(format!("{prefix}_probe.cptf"));
        let control_path = run_dir.join(format!("{prefix}_control.cptf"));
        if !probe_path.exists() {
            return Err(RunError::MissingInput(format!(
                "{prefix}_probe.cptf"
            )));
        }
        let (probe, zp, _) = read_cptf(&probe_path)?;
        let (control, zc, _) = read_cptf(&control_path)?;
        debug_assert_eq!(zp, zc);
        Ok(FieldState::new(probe, control, zp)?)
    };

    let input = load_state("input")?;
    let mut rows: Vec<String> = vec![METRICS_HEADER.to_string()];
    rows.extend(state_rows(&input, &input));

    let mut k = 0usize;
    loop {
        let prefix = format!("snap_{k:03}");
        if !run_dir.join(format!("{prefix}_probe.cptf")).exists() {
            break;
        }
        let snap = load_state(&prefix)?;
        rows.extend(state_rows(&snap, &input));
        k += 1;
    }

    if run_dir.join("final_probe.cptf").exists() {
        let fin = load_state("final")?;
        rows.extend(state_rows(&fin, &input));
    }
    Ok(rows.join("\n") + "\n")
}
