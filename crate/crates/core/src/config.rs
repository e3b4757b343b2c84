//! Run configuration: a sectioned `key = value` text format, the built-in
//! scenario presets, and construction of a ready-to-run simulation.
//!
//! ```text
//! scenario = relaxation:ff
//!
//! [species.1]
//! mass = 1.0
//! statistics = fermion
//! density = 1.0
//! velocity = 0.5, 0, 0
//! temperature = 1.0
//!
//! [collisions]
//! nu = 1.0
//!
//! [time]
//! scheme = 1
//! dt = 0.01
//! t_end = 10
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::Vector3;

use crate::equilibrium::NewtonOptions;
use crate::error::{Error, Result};
use crate::grid::{mixture_temperature, mixture_velocity, sample_maxwellian, Moments, MomentumGrid, DEFAULT_INTERVALS};
use crate::integrators::{Scheme, Simulation};
use crate::species::{CollisionFrequencies, Species, SpeciesSet};
use crate::state::{DistributionField, SimulationState};
use crate::statistics::{eta_integrals, ParticleStatistics};
use crate::transport::{BoundaryMode, FluxOrder, SpatialMesh};

/// Atomic mass unit in grams.
pub const ATOMIC_MASS_G: f64 = 1.6605e-24;
/// Electron mass in grams.
pub const ELECTRON_MASS_G: f64 = 9.11e-28;
/// Scaling factor of the electron Fermi–Dirac initial datum.
pub const SFE_SCALING: f64 = 1.061711634;
/// Collision frequency of every species pair in 1/fs.
pub const SFE_NU: f64 = 0.00753;

/// Initial distribution shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    /// `n (2π m T)^{-3/2} exp(−|p − mU|²/(2mT))`.
    Maxwellian,
    /// `[(2π m T)^{3/2}/(s n) exp(|p − mU|²/(2mT)) + 1]⁻¹`.
    ScaledFermiDirac { scaling: f64 },
}

/// Macroscopic parameters `(n, U, T)` of an initial datum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub density: f64,
    pub velocity: Vector3<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesConfig {
    pub label: String,
    pub mass: f64,
    pub statistics: ParticleStatistics,
    pub profile: InitialProfile,
    /// State everywhere, or for `x ≤ interface` when `right` is set.
    pub state: MacroState,
    pub right: Option<MacroState>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
    pub boundary: BoundaryMode,
    pub flux_order: FluxOrder,
    /// Position of the discontinuity of Riemann data.
    pub interface: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: String,
    /// Unit system label written to outputs.
    pub units: String,
    pub species: Vec<SpeciesConfig>,
    /// `ν̃_kj` per ordered pair.
    pub nu: Vec<Vec<f64>>,
    pub scheme: Scheme,
    /// `None` selects `cfl_fraction` of the CFL bound (spatial runs only).
    pub dt: Option<f64>,
    pub cfl_fraction: f64,
    pub t_end: f64,
    pub stride: usize,
    /// `None` for a space-homogeneous run.
    pub space: Option<SpaceConfig>,
    pub grid_intervals: usize,
    pub newton: NewtonOptions,
    /// Clamp negative stage inputs of the second-order scheme to zero.
    pub clamp_negative: bool,
    pub output_dir: PathBuf,
}

impl SimConfig {
    fn blank(scenario: &str) -> Self {
        SimConfig {
            scenario: scenario.into(),
            units: "dimensionless".into(),
            species: vec![],
            nu: vec![],
            scheme: Scheme::FirstOrder,
            dt: None,
            cfl_fraction: 0.9,
            t_end: 0.0,
            stride: 1,
            space: None,
            grid_intervals: DEFAULT_INTERVALS,
            newton: NewtonOptions::default(),
            clamp_negative: false,
            output_dir: PathBuf::from("output"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.scenario.trim().is_empty() {
            return bad("scenario required".into());
        }
        if self.species.is_empty() {
            return bad("at least one [species.k] section is required".into());
        }
        for sp in &self.species {
            let l = &sp.label;
            if !(sp.mass > 0.0 && sp.mass.is_finite()) {
                return bad(format!("species.{l}.mass must be positive, got {}", sp.mass));
            }
            for (side, st) in std::iter::once(("", &sp.state)).chain(sp.right.iter().map(|r| ("right_", r))) {
                if !(st.density > 0.0 && st.density.is_finite()) {
                    return bad(format!("species.{l}.{side}density must be positive, got {}", st.density));
                }
                if !(st.temperature > 0.0 && st.temperature.is_finite()) {
                    return bad(format!("species.{l}.{side}temperature must be positive, got {}", st.temperature));
                }
                if !st.velocity.iter().all(|v| v.is_finite()) {
                    return bad(format!("species.{l}.{side}velocity must be finite"));
                }
            }
            if let InitialProfile::ScaledFermiDirac { scaling } = sp.profile {
                if !(scaling > 0.0) {
                    return bad(format!("species.{l}.scaling must be positive, got {scaling}"));
                }
            }
        }
        let s = self.species.len();
        if self.nu.len() != s || self.nu.iter().any(|r| r.len() != s) {
            return bad(format!("collision frequencies must form a {s}x{s} matrix"));
        }
        CollisionFrequencies::from_matrix(self.nu.clone())?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("time.dt must be positive, got {dt}"));
            }
        } else if self.space.is_none() {
            return bad("time.dt is required for space-homogeneous runs".into());
        }
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return bad(format!("time.cfl_fraction must lie in (0, 1], got {}", self.cfl_fraction));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("time.t_end must be non-negative, got {}", self.t_end));
        }
        if self.stride == 0 {
            return bad("time.stride must be at least 1".into());
        }
        if self.grid_intervals < 2 {
            return bad(format!("grid.intervals must be at least 2, got {}", self.grid_intervals));
        }
        if let Some(sp) = &self.space {
            SpatialMesh::new(sp.x_min, sp.x_max, sp.cells, sp.boundary)?;
        }
        if self.species.iter().any(|s| s.right.is_some()) && self.space.is_none() {
            return bad("right states need a [space] section".into());
        }
        Ok(())
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("{key}: '{}' is not a number", v.trim()),
    })
}

fn parse_usize(v: &str, line: usize, key: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("{key}: '{}' is not a non-negative integer", v.trim()),
    })
}

fn parse_vec3(v: &str, line: usize, key: &str) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse {
            line,
            message: format!("{key}: expected three comma-separated numbers"),
        });
    }
    Ok(Vector3::new(
        parse_f64(parts[0], line, key)?,
        parse_f64(parts[1], line, key)?,
        parse_f64(parts[2], line, key)?,
    ))
}

fn parse_bool(v: &str, line: usize, key: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        o => Err(Error::Parse {
            line,
            message: format!("{key}: '{o}' is not a boolean"),
        }),
    }
}

#[derive(Default)]
struct SpeciesDraft {
    index: usize,
    label: Option<String>,
    mass: Option<f64>,
    statistics: Option<ParticleStatistics>,
    profile: Option<String>,
    scaling: Option<f64>,
    density: Option<f64>,
    velocity: Option<Vector3<f64>>,
    temperature: Option<f64>,
    right_density: Option<f64>,
    right_velocity: Option<Vector3<f64>>,
    right_temperature: Option<f64>,
    line: usize,
}

#[derive(Default)]
struct SpaceDraft {
    homogeneous: Option<bool>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    cells: Option<usize>,
    boundary: Option<BoundaryMode>,
    flux_order: Option<FluxOrder>,
    interface: Option<f64>,
    line: usize,
}

/// Parse the configuration text; defaults are filled and the result validated.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::blank("");
    let mut species: Vec<SpeciesDraft> = vec![];
    let mut nu_uniform: Option<f64> = None;
    let mut nu_pairs: Vec<(usize, usize, f64, usize)> = vec![];
    let mut space = SpaceDraft::default();
    let mut section = String::new();
    let mut seen_scenario = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed section header '{content}'"),
            })?;
            let name = name.trim();
            if let Some(k) = name.strip_prefix("species.") {
                let index = parse_usize(k, line, "section")?;
                if index == 0 || species.iter().any(|s| s.index == index) {
                    return Err(Error::Parse {
                        line,
                        message: format!("species index {index} is zero or repeated"),
                    });
                }
                species.push(SpeciesDraft {
                    index,
                    line,
                    ..Default::default()
                });
            } else if !matches!(name, "collisions" | "time" | "space" | "grid" | "solver" | "output") {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let unknown = || Error::Parse {
            line,
            message: format!(
                "unknown key '{key}'{}",
                if section.is_empty() { String::new() } else { format!(" in [{section}]") }
            ),
        };
        match section.as_str() {
            "" => match key {
                "scenario" => {
                    cfg.scenario = value.to_string();
                    seen_scenario = true;
                }
                "units" => cfg.units = value.to_string(),
                _ => return Err(unknown()),
            },
            s if s.starts_with("species.") => {
                let d = species.last_mut().expect("species section open");
                match key {
                    "label" => d.label = Some(value.to_string()),
                    "mass" => d.mass = Some(parse_f64(value, line, key)?),
                    "statistics" => {
                        d.statistics = Some(value.parse().map_err(|m: String| Error::Parse { line, message: m })?)
                    }
                    "profile" => d.profile = Some(value.to_string()),
                    "scaling" => d.scaling = Some(parse_f64(value, line, key)?),
                    "density" => d.density = Some(parse_f64(value, line, key)?),
                    "velocity" => d.velocity = Some(parse_vec3(value, line, key)?),
                    "temperature" => d.temperature = Some(parse_f64(value, line, key)?),
                    "right_density" => d.right_density = Some(parse_f64(value, line, key)?),
                    "right_velocity" => d.right_velocity = Some(parse_vec3(value, line, key)?),
                    "right_temperature" => d.right_temperature = Some(parse_f64(value, line, key)?),
                    _ => return Err(unknown()),
                }
            }
            "collisions" => {
                if key == "nu" {
                    nu_uniform = Some(parse_f64(value, line, key)?);
                } else if let Some(rest) = key.strip_prefix("nu.") {
                    let (a, b) = rest.split_once('.').ok_or_else(unknown)?;
                    let (a, b) = (parse_usize(a, line, key)?, parse_usize(b, line, key)?);
                    nu_pairs.push((a, b, parse_f64(value, line, key)?, line));
                } else {
                    return Err(unknown());
                }
            }
            "time" => match key {
                "scheme" => {
                    let o = parse_usize(value, line, key)?;
                    cfg.scheme = Scheme::from_int(o as u32).ok_or_else(|| Error::Parse {
                        line,
                        message: format!("scheme must be 1 or 2, got {o}"),
                    })?;
                }
                "dt" => {
                    cfg.dt = if value == "auto" { None } else { Some(parse_f64(value, line, key)?) };
                }
                "cfl_fraction" => cfg.cfl_fraction = parse_f64(value, line, key)?,
                "t_end" => cfg.t_end = parse_f64(value, line, key)?,
                "stride" => cfg.stride = parse_usize(value, line, key)?,
                _ => return Err(unknown()),
            },
            "space" => {
                space.line = space.line.max(line);
                match key {
                    "homogeneous" => space.homogeneous = Some(parse_bool(value, line, key)?),
                    "x_min" => space.x_min = Some(parse_f64(value, line, key)?),
                    "x_max" => space.x_max = Some(parse_f64(value, line, key)?),
                    "cells" => space.cells = Some(parse_usize(value, line, key)?),
                    "boundary" => {
                        space.boundary = Some(value.parse().map_err(|m: String| Error::Parse { line, message: m })?)
                    }
                    "flux_order" => {
                        let o = parse_usize(value, line, key)?;
                        space.flux_order = Some(FluxOrder::from_int(o as u32).ok_or_else(|| Error::Parse {
                            line,
                            message: format!("flux_order must be 1 or 2, got {o}"),
                        })?);
                    }
                    "interface" => space.interface = Some(parse_f64(value, line, key)?),
                    _ => return Err(unknown()),
                }
            }
            "grid" => match key {
                "intervals" => cfg.grid_intervals = parse_usize(value, line, key)?,
                _ => return Err(unknown()),
            },
            "solver" => match key {
                "gradient_tol" => cfg.newton.gradient_tol = parse_f64(value, line, key)?,
                "polish_tol" => cfg.newton.polish_tol = parse_f64(value, line, key)?,
                "max_iterations" => cfg.newton.max_iterations = parse_usize(value, line, key)?,
                "max_halvings" => cfg.newton.max_halvings = parse_usize(value, line, key)?,
                "clamp_negative" => cfg.clamp_negative = parse_bool(value, line, key)?,
                _ => return Err(unknown()),
            },
            "output" => match key {
                "dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(unknown()),
            },
            _ => unreachable!("sections are checked when opened"),
        }
    }

    if !seen_scenario || cfg.scenario.is_empty() {
        return Err(Error::Config("scenario required".into()));
    }

    species.sort_by_key(|d| d.index);
    for (pos, d) in species.iter().enumerate() {
        if d.index != pos + 1 {
            return Err(Error::Parse {
                line: d.line,
                message: format!("species sections must be numbered 1..S without gaps (found {})", d.index),
            });
        }
        let label = d.label.clone().unwrap_or_else(|| d.index.to_string());
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("species.{label}.{name} is required")))
        };
        let profile = match d.profile.as_deref().unwrap_or("maxwellian") {
            "maxwellian" => InitialProfile::Maxwellian,
            "scaled-fermi-dirac" => InitialProfile::ScaledFermiDirac {
                scaling: need(d.scaling, "scaling")?,
            },
            o => {
                return Err(Error::Config(format!(
                    "species.{label}.profile '{o}' is not one of maxwellian, scaled-fermi-dirac"
                )))
            }
        };
        if d.scaling.is_some() && profile == InitialProfile::Maxwellian {
            return Err(Error::Config(format!("species.{label}.scaling needs profile = scaled-fermi-dirac")));
        }
        let state = MacroState {
            density: need(d.density, "density")?,
            velocity: d.velocity.unwrap_or_else(Vector3::zeros),
            temperature: need(d.temperature, "temperature")?,
        };
        let has_right = d.right_density.is_some() || d.right_velocity.is_some() || d.right_temperature.is_some();
        let right = if has_right {
            Some(MacroState {
                density: d.right_density.unwrap_or(state.density),
                velocity: d.right_velocity.unwrap_or(state.velocity),
                temperature: d.right_temperature.unwrap_or(state.temperature),
            })
        } else {
            None
        };
        let mass = need(d.mass, "mass")?;
        cfg.species.push(SpeciesConfig {
            label,
            mass,
            statistics: d
                .statistics
                .ok_or_else(|| Error::Config(format!("species {}: statistics is required", d.index)))?,
            profile,
            state,
            right,
        });
    }

    let s = cfg.species.len();
    let base = nu_uniform.unwrap_or(if nu_pairs.is_empty() { f64::NAN } else { 0.0 });
    if base.is_nan() {
        return Err(Error::Config("collisions.nu is required".into()));
    }
    cfg.nu = vec![vec![base; s]; s];
    for (a, b, v, line) in nu_pairs {
        if a == 0 || b == 0 || a > s || b > s {
            return Err(Error::Parse {
                line,
                message: format!("nu.{a}.{b} refers to a species that does not exist"),
            });
        }
        cfg.nu[a - 1][b - 1] = v;
    }

    let spatial_keys = space.x_min.is_some() || space.x_max.is_some() || space.cells.is_some();
    if space.homogeneous == Some(true) && spatial_keys {
        return Err(Error::Parse {
            line: space.line,
            message: "homogeneous = true cannot be combined with a mesh".into(),
        });
    }
    if space.homogeneous != Some(true) && (spatial_keys || space.homogeneous == Some(false)) {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("space.{name} is required")));
        cfg.space = Some(SpaceConfig {
            x_min: need(space.x_min, "x_min")?,
            x_max: need(space.x_max, "x_max")?,
            cells: space.cells.ok_or_else(|| Error::Config("space.cells is required".into()))?,
            boundary: space.boundary.unwrap_or(BoundaryMode::Periodic),
            flux_order: space.flux_order.unwrap_or(FluxOrder::Second),
            interface: space.interface.unwrap_or(0.0),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Text form accepted by [`parse_config`].
pub fn to_config_text(cfg: &SimConfig) -> String {
    let mut out = String::new();
    let v3 = |v: &Vector3<f64>| format!("{}, {}, {}", v.x, v.y, v.z);
    let _ = writeln!(out, "scenario = {}", cfg.scenario);
    let _ = writeln!(out, "units = {}", cfg.units);
    for (k, sp) in cfg.species.iter().enumerate() {
        let _ = writeln!(out, "\n[species.{}]", k + 1);
        let _ = writeln!(out, "label = {}", sp.label);
        let _ = writeln!(out, "mass = {}", sp.mass);
        let _ = writeln!(out, "statistics = {}", sp.statistics.name());
        match sp.profile {
            InitialProfile::Maxwellian => {
                let _ = writeln!(out, "profile = maxwellian");
            }
            InitialProfile::ScaledFermiDirac { scaling } => {
                let _ = writeln!(out, "profile = scaled-fermi-dirac");
                let _ = writeln!(out, "scaling = {scaling}");
            }
        }
        let _ = writeln!(out, "density = {}", sp.state.density);
        let _ = writeln!(out, "velocity = {}", v3(&sp.state.velocity));
        let _ = writeln!(out, "temperature = {}", sp.state.temperature);
        if let Some(r) = &sp.right {
            let _ = writeln!(out, "right_density = {}", r.density);
            let _ = writeln!(out, "right_velocity = {}", v3(&r.velocity));
            let _ = writeln!(out, "right_temperature = {}", r.temperature);
        }
    }
    let _ = writeln!(out, "\n[collisions]");
    let first = cfg.nu.first().and_then(|r| r.first()).copied().unwrap_or(0.0);
    let _ = writeln!(out, "nu = {first}");
    for (k, row) in cfg.nu.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v != first {
                let _ = writeln!(out, "nu.{}.{} = {v}", k + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "\n[time]");
    let _ = writeln!(out, "scheme = {}", cfg.scheme.as_int());
    match cfg.dt {
        Some(dt) => {
            let _ = writeln!(out, "dt = {dt}");
        }
        None => {
            let _ = writeln!(out, "dt = auto");
        }
    }
    let _ = writeln!(out, "cfl_fraction = {}", cfg.cfl_fraction);
    let _ = writeln!(out, "t_end = {}", cfg.t_end);
    let _ = writeln!(out, "stride = {}", cfg.stride);
    let _ = writeln!(out, "\n[space]");
    match &cfg.space {
        None => {
            let _ = writeln!(out, "homogeneous = true");
        }
        Some(s) => {
            let _ = writeln!(out, "x_min = {}", s.x_min);
            let _ = writeln!(out, "x_max = {}", s.x_max);
            let _ = writeln!(out, "cells = {}", s.cells);
            let _ = writeln!(out, "boundary = {}", s.boundary);
            let _ = writeln!(out, "flux_order = {}", s.flux_order.as_int());
            let _ = writeln!(out, "interface = {}", s.interface);
        }
    }
    let _ = writeln!(out, "\n[grid]\nintervals = {}", cfg.grid_intervals);
    let n = &cfg.newton;
    let _ = writeln!(
        out,
        "\n[solver]\ngradient_tol = {}\npolish_tol = {}\nmax_iterations = {}\nmax_halvings = {}\nclamp_negative = {}",
        n.gradient_tol, n.polish_tol, n.max_iterations, n.max_halvings, cfg.clamp_negative
    );
    let _ = writeln!(out, "\n[output]\ndir = {}", cfg.output_dir.display());
    out
}

/// Names accepted by [`scenario_preset`].
pub const PRESET_NAMES: [&str; 9] = [
    "relaxation:ff",
    "relaxation:bb",
    "relaxation:fb",
    "relaxation:fc",
    "relaxation:cb",
    "relaxation:cc",
    "sfe-classical",
    "sfe-fermion",
    "sod",
];

fn maxwellian_species(label: &str, mass: f64, stats: ParticleStatistics, n: f64, u: f64, t: f64) -> SpeciesConfig {
    SpeciesConfig {
        label: label.into(),
        mass,
        statistics: stats,
        profile: InitialProfile::Maxwellian,
        state: MacroState {
            density: n,
            velocity: Vector3::new(u, 0.0, 0.0),
            temperature: t,
        },
        right: None,
    }
}

/// Ion and electron masses in electron masses: `(m_S, m_F, m_e)`.
pub fn sfe_masses() -> (f64, f64, f64) {
    let u = ATOMIC_MASS_G / ELECTRON_MASS_G;
    (32.07 * u - 11.0, 19.0 * u - 7.0, 1.0)
}

/// Fugacity `z` with `F(z)/z = 1/s`, where `F` is the Fermi–Dirac density
/// normalized to the classical one.
pub fn scaled_fermi_dirac_fugacity(scaling: f64) -> Result<f64> {
    let ratio = |c: f64| -> Result<f64> { Ok(eta_integrals(c, ParticleStatistics::Fermion)?.0 / (PI.powf(1.5) * (-c).exp())) };
    let target = 1.0 / scaling;
    // ratio decreases from 1 (c → ∞) as c decreases
    let (mut lo, mut hi) = (-30.0, 60.0);
    if !(ratio(lo)? < target && ratio(hi)? > target) {
        return Err(Error::Config(format!("no fugacity reproduces the scaling factor {scaling}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok((-0.5 * (lo + hi)).exp())
}

/// Electron density in the internal units (fs, eV, mₑ) for which the scaled
/// Fermi–Dirac datum with `ϑ = 100 eV` integrates to the density itself.
pub fn sfe_electron_density() -> Result<f64> {
    let z = scaled_fermi_dirac_fugacity(SFE_SCALING)?;
    Ok((2.0 * PI * 100.0).powf(1.5) * z / SFE_SCALING)
}

/// One of the built-in scenarios; see [`PRESET_NAMES`].
pub fn scenario_preset(name: &str) -> Result<SimConfig> {
    use ParticleStatistics::*;
    let mut cfg = SimConfig::blank(name);
    if let Some(pair) = name.strip_prefix("relaxation:") {
        let mut chars = pair.chars();
        let (a, b) = match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::Config(format!("unknown scenario '{name}'"))),
        };
        let (Some(s1), Some(s2)) = (ParticleStatistics::from_code(a), ParticleStatistics::from_code(b)) else {
            return Err(Error::Config(format!("unknown scenario '{name}'")));
        };
        cfg.species = vec![
            maxwellian_species("1", 1.0, s1, 1.0, 0.5, 1.0),
            maxwellian_species("2", 1.5, s2, 1.2, 0.1, 0.5),
        ];
        cfg.nu = vec![vec![1.0; 2]; 2];
        cfg.scheme = Scheme::FirstOrder;
        cfg.dt = Some(0.01);
        cfg.t_end = 10.0;
        cfg.output_dir = PathBuf::from(format!("output/relaxation-{pair}"));
        return Ok(cfg);
    }
    match name {
        "sfe-classical" | "sfe-fermion" => {
            let (ms, mf, me) = sfe_masses();
            let ne = sfe_electron_density()?;
            cfg.units = "fs, eV, electron mass; momentum in sqrt(m_e eV)".into();
            let mut electrons = maxwellian_species("e", me, Classical, ne, 0.0, 100.0);
            if name == "sfe-fermion" {
                electrons.statistics = Fermion;
                electrons.profile = InitialProfile::ScaledFermiDirac { scaling: SFE_SCALING };
            }
            cfg.species = vec![
                maxwellian_species("S", ms, Classical, ne / 53.0, 0.0, 15.0),
                maxwellian_species("F", mf, Classical, 6.0 * ne / 53.0, 0.0, 15.0),
                electrons,
            ];
            cfg.nu = vec![vec![SFE_NU; 3]; 3];
            cfg.scheme = Scheme::Ars222;
            cfg.dt = Some(0.1);
            cfg.t_end = 1500.0;
            cfg.stride = 10;
            cfg.output_dir = PathBuf::from(format!("output/{name}"));
            Ok(cfg)
        }
        "sod" => {
            let mut sp = vec![
                maxwellian_species("1", 1.0, Fermion, 1.0, 0.0, 1.0),
                maxwellian_species("2", 1.0, Fermion, 1.0, 0.0, 1.0),
            ];
            for s in &mut sp {
                s.right = Some(MacroState {
                    density: 0.125,
                    velocity: Vector3::zeros(),
                    temperature: 0.8,
                });
            }
            cfg.species = sp;
            cfg.nu = vec![vec![2e4; 2]; 2];
            cfg.scheme = Scheme::Ars222;
            cfg.dt = None;
            cfg.t_end = 0.055;
            cfg.stride = 10;
            cfg.space = Some(SpaceConfig {
                x_min: -0.5,
                x_max: 0.5,
                cells: 300,
                boundary: BoundaryMode::Copy,
                flux_order: FluxOrder::Second,
                interface: 0.0,
            });
            cfg.clamp_negative = true;
            cfg.output_dir = PathBuf::from("output/sod");
            Ok(cfg)
        }
        _ => Err(Error::Config(format!(
            "unknown scenario '{name}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Node values of an initial datum.
pub fn sample_profile(grid: &MomentumGrid, mass: f64, profile: InitialProfile, st: &MacroState) -> Vec<f64> {
    match profile {
        InitialProfile::Maxwellian => sample_maxwellian(grid, mass, st.density, st.velocity, st.temperature),
        InitialProfile::ScaledFermiDirac { scaling } => {
            let t = st.temperature;
            let pref = (2.0 * PI * mass * t).powf(1.5) / (scaling * st.density);
            let pc = st.velocity * mass;
            grid.sample(|p| 1.0 / (pref * ((p - pc).norm_squared() / (2.0 * mass * t)).exp() + 1.0))
        }
    }
}

/// Analytic `(n, P, E)` of a datum, used to place the momentum grids.
fn nominal_moments(sp: &SpeciesConfig, st: &MacroState) -> Result<Moments> {
    match sp.profile {
        InitialProfile::Maxwellian => Ok(Moments::maxwellian(st.density, st.velocity, st.temperature, sp.mass)),
        InitialProfile::ScaledFermiDirac { scaling } => {
            // n = (2mT)^{3/2} η(c), internal energy = (2mT)^{3/2} T η^E(c)
            let z = scaling * st.density / (2.0 * PI * sp.mass * st.temperature).powf(1.5);
            let (eta, eta_e) = eta_integrals(-z.ln(), ParticleStatistics::Fermion)?;
            let scale = (2.0 * sp.mass * st.temperature).powf(1.5);
            let n = scale * eta;
            let u = st.velocity;
            Ok(Moments::new(n, u * (n * sp.mass), scale * st.temperature * eta_e + 0.5 * n * sp.mass * u.norm_squared()))
        }
    }
}

/// Species set, mesh, initial state and time step of a configuration.
pub fn build_simulation(cfg: &SimConfig) -> Result<(Simulation, SimulationState, f64)> {
    cfg.validate()?;
    let mesh = cfg
        .space
        .map(|s| SpatialMesh::new(s.x_min, s.x_max, s.cells, s.boundary))
        .transpose()?;

    // Grid placement from the domain-averaged initial moments.
    let mut parts = Vec::with_capacity(cfg.species.len());
    for sp in &cfg.species {
        let m = match (&mesh, &sp.right, &cfg.space) {
            (Some(mesh), Some(r), Some(s)) => {
                let frac = ((s.interface - mesh.x_min) / (mesh.x_max - mesh.x_min)).clamp(0.0, 1.0);
                nominal_moments(sp, &sp.state)?.scaled(frac) + nominal_moments(sp, r)?.scaled(1.0 - frac)
            }
            _ => nominal_moments(sp, &sp.state)?,
        };
        parts.push((m, sp.mass));
    }
    let u_mix = mixture_velocity(&parts)?;
    let t_mix = mixture_temperature(&parts)?;

    let mut species = Vec::with_capacity(cfg.species.len());
    for sp in &cfg.species {
        let grid = MomentumGrid::with_intervals(sp.mass, u_mix, t_mix, cfg.grid_intervals)?;
        if sp.statistics == ParticleStatistics::Fermion {
            let limit = grid.saturation_density();
            for st in std::iter::once(&sp.state).chain(sp.right.iter()) {
                if st.density >= crate::equilibrium::SATURATION_FRACTION * limit {
                    return Err(Error::Config(format!(
                        "species '{}' density {} is at or above the grid saturation {limit}",
                        sp.label, st.density
                    )));
                }
            }
        }
        species.push(Species {
            label: sp.label.clone(),
            mass: sp.mass,
            statistics: sp.statistics,
            grid,
        });
    }
    let set = SpeciesSet::new(species, CollisionFrequencies::from_matrix(cfg.nu.clone())?)?;

    let fields: Vec<DistributionField> = cfg
        .species
        .iter()
        .zip(&set.species)
        .map(|(sc, sp)| match (&mesh, &cfg.space) {
            (Some(mesh), Some(space)) => {
                let left = sample_profile(&sp.grid, sp.mass, sc.profile, &sc.state);
                let right = sc.right.map(|r| sample_profile(&sp.grid, sp.mass, sc.profile, &r));
                let cells = (0..mesh.cells)
                    .map(|i| match &right {
                        Some(r) if mesh.center(i) > space.interface => r.clone(),
                        _ => left.clone(),
                    })
                    .collect();
                DistributionField::from_cells(cells)
            }
            _ => DistributionField::from_cells(vec![sample_profile(&sp.grid, sp.mass, sc.profile, &sc.state)]),
        })
        .collect();

    let flux_order = cfg.space.map_or(FluxOrder::Second, |s| s.flux_order);
    let mut sim = Simulation::new(set, mesh, cfg.scheme, flux_order);
    sim.newton = cfg.newton;
    sim.clamp_negative = cfg.clamp_negative;
    let dt = match cfg.dt {
        Some(dt) => {
            if dt > sim.max_dt() * (1.0 + 1e-12) {
                return Err(Error::Config(format!("time.dt = {dt} exceeds the CFL bound {}", sim.max_dt())));
            }
            dt
        }
        None => cfg.cfl_fraction * sim.max_dt(),
    };
    Ok((sim, SimulationState::new(fields), dt))
}
