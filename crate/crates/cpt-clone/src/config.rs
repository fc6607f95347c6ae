//! Run configuration: TOML parsing with strict key checking, unit
//! conversion, validation, and a canonical echo of all effective values.
//!
//! Length keys carry their unit as a suffix (`width_um` / `width_cm`,
//! `wavelength1_nm` / `wavelength1_cm`); exactly one variant of a pair may
//! appear. The echo emitted by [`echo_config`] uses cm keys throughout, so
//! re-parsing it reproduces the `RunConfig` bit-for-bit.

use crate::beams::BeamSpec;
use crate::grid::TransverseGrid;
use crate::io::fmt_f64;
use crate::medium::{default_kappa, MediumParams};
use crate::propagator::{AbsorberSpec, NonlinearMode, Scheme, SnapshotPlan, StepConfig};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("[{section}] {key}{line}: {msg}", line = fmt_line(.line))]
    Invalid {
        section: &'static str,
        key: &'static str,
        line: Option<usize>,
        msg: String,
    },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

const UM_PER_CM: f64 = 1e4;
const NM_PER_CM: f64 = 1e7;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    medium: RawMedium,
    grid: Option<RawGrid>,
    probe: RawBeam,
    control: RawBeam,
    step: Option<RawStep>,
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    gamma: Option<f64>,
    big_gamma: f64,
    delta1: f64,
    delta2: f64,
    density_per_cm3: f64,
    wavelength1_nm: Option<f64>,
    wavelength1_cm: Option<f64>,
    wavelength2_nm: Option<f64>,
    wavelength2_cm: Option<f64>,
    kappa1_per_cm: Option<f64>,
    kappa2_per_cm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<usize>,
    ny: Option<usize>,
    extent_x_cm: Option<f64>,
    extent_y_cm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    profile: String,
    amplitude: f64,
    width_um: Option<f64>,
    width_cm: Option<f64>,
    order: Option<u32>,
    m: Option<u32>,
    n: Option<u32>,
    path: Option<PathBuf>,
    blur_sigma_um: Option<f64>,
    blur_sigma_cm: Option<f64>,
    image_width_cm: Option<f64>,
    image_height_cm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    dz_um: Option<f64>,
    dz_cm: Option<f64>,
    scheme: Option<String>,
    nonlinear: Option<String>,
    absorber_width_frac: Option<f64>,
    absorber_strength: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    z_end_cm: f64,
    snapshot_every_cm: Option<f64>,
    snapshots_cm: Option<Vec<f64>>,
    out_dir: Option<PathBuf>,
}

/// Fully validated run description; all lengths in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub medium: MediumParams,
    pub grid: TransverseGrid,
    pub probe: BeamSpec,
    pub control: BeamSpec,
    pub step: StepConfig,
    pub z_end: f64,
    pub snapshots: SnapshotPlan,
    pub out_dir: Option<PathBuf>,
}

struct LineFinder<'a> {
    text: &'a str,
}

impl<'a> LineFinder<'a> {
    /// Best-effort line number of `key` inside `[section]`.
    fn find(&self, section: &str, key: &str) -> Option<usize> {
        let mut in_section = false;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if t.starts_with('[') {
                in_section = t == format!("[{section}]");
                continue;
            }
            if in_section {
                if let Some(head) = t.split('=').next() {
                    if head.trim().trim_start_matches(|c: char| c == '#') == key
                        || head.trim().starts_with(&format!("{key} "))
                        || head.trim() == key
                    {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }
}

fn invalid(
    lines: &LineFinder,
    section: &'static str,
    key: &'static str,
    msg: impl Into<String>,
) -> ConfigError {
    ConfigError::Invalid {
        section,
        key,
        line: lines.find(section, key),
        msg: msg.into(),
    }
}

fn pick_unit(
    lines: &LineFinder,
    section: &'static str,
    key_a: &'static str,
    a: Option<f64>,
    scale_a: f64,
    key_b: &'static str,
    b: Option<f64>,
) -> Result<Option<f64>, ConfigError> {
    match (a, b) {
        (Some(_), Some(_)) => Err(invalid(
            lines,
            section,
            key_a,
            format!("give either {key_a} or {key_b}, not both"),
        )),
        (Some(v), None) => Ok(Some(v / scale_a)),
        (None, Some(v)) => Ok(Some(v)),
        (None, None) => Ok(None),
    }
}

fn require_positive(
    lines: &LineFinder,
    section: &'static str,
    key: &'static str,
    v: f64,
) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(lines, section, key, format!("must be > 0, got {v}")))
    }
}

fn beam_spec(
    raw: &RawBeam,
    lines: &LineFinder,
    section: &'static str,
    base_dir: &Path,
) -> Result<BeamSpec, ConfigError> {
    let width = pick_unit(
        lines, section, "width_um", raw.width_um, UM_PER_CM, "width_cm", raw.width_cm,
    )?;
    let blur = pick_unit(
        lines,
        section,
        "blur_sigma_um",
        raw.blur_sigma_um,
        UM_PER_CM,
        "blur_sigma_cm",
        raw.blur_sigma_cm,
    )?;
    if !(raw.amplitude.is_finite() && raw.amplitude >= 0.0) {
        return Err(invalid(lines, section, "amplitude", "must be >= 0"));
    }

    let forbid = |cond: bool, key: &'static str| -> Result<(), ConfigError> {
        if cond {
            Err(invalid(
                lines,
                section,
                key,
                format!("not allowed for profile \"{}\"", raw.profile),
            ))
        } else {
            Ok(())
        }
    };

    match raw.profile.as_str() {
        "hermite_gaussian" => {
            forbid(raw.order.is_some(), "order")?;
            forbid(raw.path.is_some(), "path")?;
            forbid(blur.is_some(), "blur_sigma_um")?;
            forbid(raw.image_width_cm.is_some(), "image_width_cm")?;
            forbid(raw.image_height_cm.is_some(), "image_height_cm")?;
            let w = width.ok_or_else(|| invalid(lines, section, "width_um", "required"))?;
            require_positive(lines, section, "width_um", w)?;
            Ok(BeamSpec::HermiteGaussian {
                m: raw.m.unwrap_or(0),
                n: raw.n.unwrap_or(0),
                width: w,
                amplitude: raw.amplitude,
            })
        }
        "super_gaussian" => {
            forbid(raw.m.is_some(), "m")?;
            forbid(raw.n.is_some(), "n")?;
            forbid(raw.path.is_some(), "path")?;
            forbid(blur.is_some(), "blur_sigma_um")?;
            forbid(raw.image_width_cm.is_some(), "image_width_cm")?;
            forbid(raw.image_height_cm.is_some(), "image_height_cm")?;
            let w = width.ok_or_else(|| invalid(lines, section, "width_um", "required"))?;
            require_positive(lines, section, "width_um", w)?;
            let order = raw.order.unwrap_or(8);
            if order < 1 {
                return Err(invalid(lines, section, "order", "must be >= 1"));
            }
            Ok(BeamSpec::SuperGaussian {
                width: w,
                order,
                amplitude: raw.amplitude,
            })
        }
        "plane_wave" => {
            forbid(width.is_some(), "width_um")?;
            forbid(raw.order.is_some(), "order")?;
            forbid(raw.m.is_some(), "m")?;
            forbid(raw.n.is_some(), "n")?;
            forbid(raw.path.is_some(), "path")?;
            forbid(blur.is_some(), "blur_sigma_um")?;
            Ok(BeamSpec::PlaneWave {
                amplitude: raw.amplitude,
            })
        }
        "image" => {
            forbid(width.is_some(), "width_um")?;
            forbid(raw.order.is_some(), "order")?;
            forbid(raw.m.is_some(), "m")?;
            forbid(raw.n.is_some(), "n")?;
            let rel = raw
                .path
                .as_ref()
                .ok_or_else(|| invalid(lines, section, "path", "required for image profile"))?;
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                base_dir.join(rel)
            };
            let extent = match (raw.image_width_cm, raw.image_height_cm) {
                (None, None) => None,
                (Some(w), Some(h)) => {
                    require_positive(lines, section, "image_width_cm", w)?;
                    require_positive(lines, section, "image_height_cm", h)?;
                    Some((w, h))
                }
                _ => {
                    return Err(invalid(
                        lines,
                        section,
                        "image_width_cm",
                        "image_width_cm and image_height_cm must be given together",
                    ))
                }
            };
            Ok(BeamSpec::Image {
                path,
                amplitude: raw.amplitude,
                blur_sigma: blur.unwrap_or(0.0),
                extent,
            })
        }
        other => Err(invalid(
            lines,
            section,
            "profile",
            format!(
                "unknown profile \"{other}\" (expected hermite_gaussian, super_gaussian, plane_wave or image)"
            ),
        )),
    }
}

/// Parse and validate a configuration. `base_dir` anchors relative image
/// paths (normally the config file's directory).
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let lines = LineFinder { text };

    // medium
    let m = &raw.medium;
    let gamma = m.gamma.unwrap_or(1.0);
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid(&lines, "medium", "gamma", "must be > 0"));
    }
    if !(m.big_gamma.is_finite() && m.big_gamma >= 0.0) {
        return Err(invalid(&lines, "medium", "big_gamma", "must be >= 0"));
    }
    if !(m.density_per_cm3.is_finite() && m.density_per_cm3 >= 0.0) {
        return Err(invalid(&lines, "medium", "density_per_cm3", "must be >= 0"));
    }
    let lambda1 = pick_unit(
        &lines,
        "medium",
        "wavelength1_nm",
        m.wavelength1_nm,
        NM_PER_CM,
        "wavelength1_cm",
        m.wavelength1_cm,
    )?
    .unwrap_or(795.0 / NM_PER_CM);
    let lambda2 = pick_unit(
        &lines,
        "medium",
        "wavelength2_nm",
        m.wavelength2_nm,
        NM_PER_CM,
        "wavelength2_cm",
        m.wavelength2_cm,
    )?
    .unwrap_or(795.0 / NM_PER_CM);
    require_positive(&lines, "medium", "wavelength1_nm", lambda1)?;
    require_positive(&lines, "medium", "wavelength2_nm", lambda2)?;
    for (key, v) in [("kappa1_per_cm", m.kappa1_per_cm), ("kappa2_per_cm", m.kappa2_per_cm)] {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Invalid {
                    section: "medium",
                    key: if key == "kappa1_per_cm" { "kappa1_per_cm" } else { "kappa2_per_cm" },
                    line: lines.find("medium", key),
                    msg: "must be >= 0".into(),
                });
            }
        }
    }
    let medium = MediumParams {
        gamma,
        big_gamma: m.big_gamma,
        delta1: m.delta1,
        delta2: m.delta2,
        density: m.density_per_cm3,
        lambda1,
        lambda2,
        kappa1: m
            .kappa1_per_cm
            .unwrap_or_else(|| default_kappa(m.density_per_cm3, lambda1)),
        kappa2: m
            .kappa2_per_cm
            .unwrap_or_else(|| default_kappa(m.density_per_cm3, lambda2)),
    }
    .validated()
    .map_err(|e| invalid(&lines, "medium", "delta1", e.to_string()))?;

    // grid
    let g = raw.grid.as_ref();
    let nx = g.and_then(|g| g.nx).unwrap_or(512);
    let ny = g.and_then(|g| g.ny).unwrap_or(512);
    let ex = g.and_then(|g| g.extent_x_cm).unwrap_or(0.4);
    let ey = g.and_then(|g| g.extent_y_cm).unwrap_or(0.4);
    require_positive(&lines, "grid", "extent_x_cm", ex)?;
    require_positive(&lines, "grid", "extent_y_cm", ey)?;
    let grid = TransverseGrid::with_extent(nx, ny, ex, ey)
        .map_err(|e| invalid(&lines, "grid", "nx", e.to_string()))?;

    // beams
    let probe = beam_spec(&raw.probe, &lines, "probe", base_dir)?;
    let control = beam_spec(&raw.control, &lines, "control", base_dir)?;

    // step
    let s = raw.step.as_ref();
    let dz = pick_unit(
        &lines,
        "step",
        "dz_um",
        s.and_then(|s| s.dz_um),
        UM_PER_CM,
        "dz_cm",
        s.and_then(|s| s.dz_cm),
    )?
    .unwrap_or(10.0 / UM_PER_CM);
    require_positive(&lines, "step", "dz_um", dz)?;
    let scheme = match s.and_then(|s| s.scheme.as_deref()).unwrap_or("strang2") {
        "strang2" => Scheme::Strang2,
        "yoshida4" => Scheme::Yoshida4,
        other => {
            return Err(invalid(
                &lines,
                "step",
                "scheme",
                format!("unknown scheme \"{other}\" (strang2 | yoshida4)"),
            ))
        }
    };
    let nonlinear = match s.and_then(|s| s.nonlinear.as_deref()).unwrap_or("midpoint") {
        "frozen" => NonlinearMode::Frozen,
        "midpoint" => NonlinearMode::PredictorCorrector,
        other => {
            return Err(invalid(
                &lines,
                "step",
                "nonlinear",
                format!("unknown nonlinear mode \"{other}\" (frozen | midpoint)"),
            ))
        }
    };
    let width_frac = s.and_then(|s| s.absorber_width_frac).unwrap_or(0.1);
    let strength = s
        .and_then(|s| s.absorber_strength)
        .unwrap_or(AbsorberSpec::default().strength);
    if !(0.0..=0.5).contains(&width_frac) {
        return Err(invalid(
            &lines,
            "step",
            "absorber_width_frac",
            "must lie in [0, 0.5]",
        ));
    }
    if !(strength >= 0.0) {
        return Err(invalid(&lines, "step", "absorber_strength", "must be >= 0"));
    }
    let absorber = if width_frac == 0.0 || strength == 0.0 {
        None
    } else {
        Some(AbsorberSpec {
            width_frac,
            strength,
        })
    };
    let step = StepConfig {
        dz,
        scheme,
        nonlinear,
        absorber,
    };

    // run
    if !(raw.run.z_end_cm.is_finite() && raw.run.z_end_cm >= 0.0) {
        return Err(invalid(&lines, "run", "z_end_cm", "must be >= 0"));
    }
    let snapshots = match (&raw.run.snapshot_every_cm, &raw.run.snapshots_cm) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                &lines,
                "run",
                "snapshot_every_cm",
                "give either snapshot_every_cm or snapshots_cm, not both",
            ))
        }
        (Some(every), None) => {
            require_positive(&lines, "run", "snapshot_every_cm", *every)?;
            SnapshotPlan::Every(*every)
        }
        (None, Some(list)) => {
            for &z in list {
                if !(z.is_finite() && z >= 0.0 && z <= raw.run.z_end_cm) {
                    return Err(invalid(
                        &lines,
                        "run",
                        "snapshots_cm",
                        format!("snapshot position {z} outside [0, z_end]"),
                    ));
                }
            }
            SnapshotPlan::At(list.clone())
        }
        (None, None) => SnapshotPlan::None,
    };

    Ok(RunConfig {
        medium,
        grid,
        probe,
        control,
        step,
        z_end: raw.run.z_end_cm,
        snapshots,
        out_dir: raw.run.out_dir.clone(),
    })
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

/// Canonical echo of every effective value (including the derived kappas),
/// in cm-suffixed keys. Re-parsing the echo reproduces the config exactly.
pub fn echo_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let f = fmt_f64;
    let m = &cfg.medium;
    s.push_str("[medium]\n");
    s.push_str(&format!("gamma = {}\n", f(m.gamma)));
    s.push_str(&format!("big_gamma = {}\n", f(m.big_gamma)));
    s.push_str(&format!("delta1 = {}\n", f(m.delta1)));
    s.push_str(&format!("delta2 = {}\n", f(m.delta2)));
    s.push_str(&format!("density_per_cm3 = {}\n", f(m.density)));
    s.push_str(&format!("wavelength1_cm = {}\n", f(m.lambda1)));
    s.push_str(&format!("wavelength2_cm = {}\n", f(m.lambda2)));
    s.push_str(&format!("kappa1_per_cm = {}\n", f(m.kappa1)));
    s.push_str(&format!("kappa2_per_cm = {}\n", f(m.kappa2)));

    let g = &cfg.grid;
    s.push_str("\n[grid]\n");
    s.push_str(&format!("nx = {}\n", g.nx()));
    s.push_str(&format!("ny = {}\n", g.ny()));
    s.push_str(&format!("extent_x_cm = {}\n", f(g.nx() as f64 * g.dx())));
    s.push_str(&format!("extent_y_cm = {}\n", f(g.ny() as f64 * g.dy())));

    for (name, b) in [("probe", &cfg.probe), ("control", &cfg.control)] {
        s.push_str(&format!("\n[{name}]\n"));
        match b {
            BeamSpec::HermiteGaussian {
                m,
                n,
                width,
                amplitude,
            } => {
                s.push_str("profile = \"hermite_gaussian\"\n");
                s.push_str(&format!("amplitude = {}\n", f(*amplitude)));
                s.push_str(&format!("width_cm = {}\n", f(*width)));
                s.push_str(&format!("m = {m}\n"));
                s.push_str(&format!("n = {n}\n"));
            }
            BeamSpec::SuperGaussian {
                width,
                order,
                amplitude,
            } => {
                s.push_str("profile = \"super_gaussian\"\n");
                s.push_str(&format!("amplitude = {}\n", f(*amplitude)));
                s.push_str(&format!("width_cm = {}\n", f(*width)));
                s.push_str(&format!("order = {order}\n"));
            }
            BeamSpec::PlaneWave { amplitude } => {
                s.push_str("profile = \"plane_wave\"\n");
                s.push_str(&format!("amplitude = {}\n", f(*amplitude)));
            }
            BeamSpec::Image {
                path,
                amplitude,
                blur_sigma,
                extent,
            } => {
                s.push_str("profile = \"image\"\n");
                s.push_str(&format!("amplitude = {}\n", f(*amplitude)));
                s.push_str(&format!("path = {:?}\n", path.display().to_string()));
                s.push_str(&format!("blur_sigma_cm = {}\n", f(*blur_sigma)));
                if let Some((w, h)) = extent {
                    s.push_str(&format!("image_width_cm = {}\n", f(*w)));
                    s.push_str(&format!("image_height_cm = {}\n", f(*h)));
                }
            }
        }
    }

    s.push_str("\n[step]\n");
    s.push_str(&format!("dz_cm = {}\n", f(cfg.step.dz)));
    s.push_str(&format!(
        "scheme = \"{}\"\n",
        match cfg.step.scheme {
            Scheme::Strang2 => "strang2",
            Scheme::Yoshida4 => "yoshida4",
        }
    ));
    s.push_str(&format!(
        "nonlinear = \"{}\"\n",
        match cfg.step.nonlinear {
            NonlinearMode::Frozen => "frozen",
            NonlinearMode::PredictorCorrector => "midpoint",
        }
    ));
    match cfg.step.absorber {
        Some(a) => {
            s.push_str(&format!("absorber_width_frac = {}\n", f(a.width_frac)));
            s.push_str(&format!("absorber_strength = {}\n", f(a.strength)));
        }
        None => {
            s.push_str("absorber_width_frac = 0.0\n");
            s.push_str("absorber_strength = 0.0\n");
        }
    }

    s.push_str("\n[run]\n");
    s.push_str(&format!("z_end_cm = {}\n", f(cfg.z_end)));
    match &cfg.snapshots {
        SnapshotPlan::None => {}
        SnapshotPlan::Every(every) => {
            s.push_str(&format!("snapshot_every_cm = {}\n", f(*every)));
        }
        SnapshotPlan::At(list) => {
            let items: Vec<String> = list.iter().map(|z| f(*z)).collect();
            s.push_str(&format!("snapshots_cm = [{}]\n", items.join(", ")));
        }
    }
    if let Some(dir) = &cfg.out_dir {
        s.push_str(&format!("out_dir = {:?}\n", dir.display().to_string()));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FIG5: &str = r#"
[medium]
big_gamma = 0.001
delta1 = 0.005
delta2 = 0.0
density_per_cm3 = 5.0e11

[probe]
profile = "super_gaussian"
amplitude = 0.15
width_um = 150.0

[control]
profile = "hermite_gaussian"
amplitude = 1.0
width_um = 400.0

[run]
z_end_cm = 4.0
snapshot_every_cm = 1.0
"#;

    #[test]
    fn minimal_config_derives_kappa() {
        let cfg = parse_config(FIG5, Path::new(".")).unwrap();
        // 3 N lambda^2 / (4 pi) at N = 5e11, lambda = 795 nm
        assert_relative_eq!(cfg.medium.kappa1, 754.44, max_relative = 1e-4);
        assert_relative_eq!(cfg.medium.kappa2, cfg.medium.kappa1, epsilon = 0.0);
        assert_eq!(cfg.grid.nx(), 512);
        assert_relative_eq!(cfg.step.dz, 10e-4, epsilon = 1e-18);
        assert_eq!(cfg.medium.delta1, 0.005);
        let echoed = echo_config(&cfg);
        assert!(echoed.contains("kappa1_per_cm"));
    }

    #[test]
    fn echo_reparse_is_identical() {
        let cfg = parse_config(FIG5, Path::new(".")).unwrap();
        let echoed = echo_config(&cfg);
        let again = parse_config(&echoed, Path::new(".")).unwrap();
        assert_eq!(cfg, again);
        // and the echo of the echo is textually stable
        assert_eq!(echoed, echo_config(&again));
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let bad = FIG5.replace("delta2 = 0.0", "delta2 = 0.0\nwrong_key = 3");
        let err = parse_config(&bad, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("wrong_key"), "{msg}");
        assert!(msg.to_lowercase().contains("line"), "{msg}");
    }

    #[test]
    fn missing_required_key_is_reported() {
        let bad = FIG5.replace("big_gamma = 0.001\n", "");
        let err = parse_config(&bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("big_gamma"), "{err}");
    }

    #[test]
    fn negative_width_names_key_and_line() {
        let bad = FIG5.replace("width_um = 150.0", "width_um = -2.0");
        let err = parse_config(&bad, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("width_um"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn conflicting_unit_keys_are_rejected() {
        let bad = FIG5.replace(
            "width_um = 150.0",
            "width_um = 150.0\nwidth_cm = 0.015",
        );
        let err = parse_config(&bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
    }

    #[test]
    fn profile_mismatched_key_is_rejected() {
        let bad = FIG5.replace(
            "profile = \"super_gaussian\"",
            "profile = \"plane_wave\"",
        );
        let err = parse_config(&bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("width_um"), "{err}");
    }

    #[test]
    fn gamma_units_are_passed_through() {
        let cfg = parse_config(FIG5, Path::new(".")).unwrap();
        assert_eq!(cfg.medium.delta1, 0.005);
        assert_eq!(cfg.medium.big_gamma, 0.001);
        assert_eq!(cfg.medium.gamma, 1.0);
    }

    #[test]
    fn image_paths_resolve_relative_to_config() {
        let text = FIG5.replace(
            "profile = \"hermite_gaussian\"\namplitude = 1.0\nwidth_um = 400.0",
            "profile = \"image\"\namplitude = 1.5\npath = \"letters.pgm\"",
        );
        let cfg = parse_config(&text, Path::new("/data/configs")).unwrap();
        match &cfg.control {
            BeamSpec::Image { path, .. } => {
                assert_eq!(path, &PathBuf::from("/data/configs/letters.pgm"));
            }
            other => panic!("unexpected spec {other:?}"),
        }
    }
}
