//! Flat key-value run configuration.
//!
//! Sources, later wins: built-in defaults, then the `--config` file, then
//! repeated `--set key=value` flags, then the dedicated `--seed`/`--format`
//! flags. Unknown keys and malformed values are hard errors naming the key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use sgsim::coherence::{JitterSpec, JitterTarget};
use sgsim::fmt::float;
use sgsim::regime::{PointSpec, RegimeThresholds};
use sgsim::{ApparatusGeometry, GaussianPacket, GridSpec, PhysParams, SpinWeights};

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn label(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// One sweep clause: `name:spacing:min:max:count`.
#[derive(Debug, Clone)]
pub struct SweepClause {
    pub name: String,
    pub log_spaced: bool,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepClause {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| {
                let f = i as f64 / (self.count - 1) as f64;
                if self.log_spaced {
                    (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + f * (self.max - self.min)
                }
            })
            .collect()
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mass: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub magnet_length: f64,
    pub velocity: f64,
    pub delta_p: Option<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub grid: Option<(f64, f64, usize)>,
    pub jitter_target: JitterTarget,
    pub jitter_delta: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub thresholds: RegimeThresholds,
    pub validate_tol: f64,
    pub dump_snapshots: bool,
    pub sweep: Vec<SweepClause>,
}

const KNOWN_KEYS: &[&str] = &[
    "mass",
    "lambda",
    "epsilon",
    "x0",
    "p0",
    "sigma",
    "a_re",
    "a_im",
    "b_re",
    "b_im",
    "magnet_length",
    "velocity",
    "delta_p",
    "t_final",
    "dt",
    "snapshot_stride",
    "grid_n",
    "grid_x_min",
    "grid_x_max",
    "jitter_target",
    "jitter_delta",
    "n_samples",
    "seed",
    "format",
    "bohm_hi",
    "bohm_lo",
    "separation_min",
    "separation_floor",
    "visibility_max",
    "validate_tol",
    "dump_snapshots",
    "sweep",
];

fn usage(msg: String) -> AppError {
    AppError::Usage(msg)
}

/// Parse `key = value` lines; `#` starts a comment, blank lines ignored.
fn parse_flat(text: &str, map: &mut BTreeMap<String, String>) -> Result<(), AppError> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            usage(format!(
                "config line {}: expected 'key = value', got '{line}'",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(())
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, AppError> {
    raw.parse::<f64>()
        .map_err(|_| usage(format!("key '{key}': invalid number '{raw}'")))
}

fn parse_usize(key: &str, raw: &str) -> Result<usize, AppError> {
    raw.parse::<usize>()
        .map_err(|_| usage(format!("key '{key}': invalid non-negative integer '{raw}'")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, AppError> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(usage(format!("key '{key}': invalid boolean '{raw}'"))),
    }
}

fn parse_sweep(raw: &str) -> Result<Vec<SweepClause>, AppError> {
    let mut clauses = Vec::new();
    for clause in raw.split(',') {
        let parts: Vec<&str> = clause.trim().split(':').collect();
        if parts.len() != 5 {
            return Err(usage(format!(
                "sweep clause '{clause}' must be name:spacing:min:max:count"
            )));
        }
        let name = parts[0].trim().to_string();
        if !SWEEPABLE.contains(&name.as_str()) {
            return Err(usage(format!(
                "unknown sweep parameter '{name}'; supported: {}",
                SWEEPABLE.join(", ")
            )));
        }
        let log_spaced = match parts[1].trim() {
            "lin" | "linear" => false,
            "log" => true,
            other => {
                return Err(usage(format!(
                    "sweep spacing '{other}' must be linear or log"
                )))
            }
        };
        let min = parse_f64("sweep min", parts[2].trim())?;
        let max = parse_f64("sweep max", parts[3].trim())?;
        let count = parse_usize("sweep count", parts[4].trim())?;
        if count == 0 {
            return Err(usage(format!(
                "sweep clause '{clause}': count must be at least 1"
            )));
        }
        if log_spaced && (min <= 0.0 || max <= 0.0) {
            return Err(usage(format!(
                "sweep clause '{clause}': log spacing needs positive bounds"
            )));
        }
        clauses.push(SweepClause {
            name,
            log_spaced,
            min,
            max,
            count,
        });
    }
    Ok(clauses)
}

pub const SWEEPABLE: &[&str] = &[
    "epsilon",
    "lambda",
    "mass",
    "sigma",
    "x0",
    "p0",
    "magnet_length",
    "velocity",
    "delta_p",
];

impl RunConfig {
    pub fn from_sources(
        file_text: Option<&str>,
        sets: &[String],
        seed_flag: Option<u64>,
        format_flag: Option<OutputFormat>,
    ) -> Result<Self, AppError> {
        let mut map = BTreeMap::new();
        if let Some(text) = file_text {
            parse_flat(text, &mut map)?;
        }
        for set in sets {
            let (key, value) = set
                .split_once('=')
                .ok_or_else(|| usage(format!("--set '{set}': expected key=value")))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }

        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(usage(format!(
                    "unknown config key '{key}'; known keys: {}",
                    KNOWN_KEYS.join(", ")
                )));
            }
        }
        let mut get = |key: &str| map.remove(key);

        let mass = get("mass")
            .map(|v| parse_f64("mass", &v))
            .transpose()?
            .unwrap_or(1.0);
        let lambda = get("lambda")
            .map(|v| parse_f64("lambda", &v))
            .transpose()?
            .unwrap_or(1.0);
        let epsilon = get("epsilon")
            .map(|v| parse_f64("epsilon", &v))
            .transpose()?
            .unwrap_or(0.5);
        let x0 = get("x0")
            .map(|v| parse_f64("x0", &v))
            .transpose()?
            .unwrap_or(0.0);
        let p0 = get("p0")
            .map(|v| parse_f64("p0", &v))
            .transpose()?
            .unwrap_or(5.0);
        let sigma = get("sigma")
            .map(|v| parse_f64("sigma", &v))
            .transpose()?
            .unwrap_or(1.0);

        let a_re = get("a_re")
            .map(|v| parse_f64("a_re", &v))
            .transpose()?
            .unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
        let a_im = get("a_im")
            .map(|v| parse_f64("a_im", &v))
            .transpose()?
            .unwrap_or(0.0);
        let b_re = get("b_re")
            .map(|v| parse_f64("b_re", &v))
            .transpose()?
            .unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
        let b_im = get("b_im")
            .map(|v| parse_f64("b_im", &v))
            .transpose()?
            .unwrap_or(0.0);

        let magnet_length = get("magnet_length")
            .map(|v| parse_f64("magnet_length", &v))
            .transpose()?
            .unwrap_or(10.0);
        let velocity = get("velocity")
            .map(|v| parse_f64("velocity", &v))
            .transpose()?
            .unwrap_or(5.0);
        let delta_p = get("delta_p")
            .map(|v| parse_f64("delta_p", &v))
            .transpose()?;

        let t_final = get("t_final")
            .map(|v| parse_f64("t_final", &v))
            .transpose()?
            .unwrap_or(magnet_length / velocity);
        let dt = get("dt")
            .map(|v| parse_f64("dt", &v))
            .transpose()?
            .unwrap_or_else(|| 0.01f64.min(0.01 * mass * sigma * sigma));
        let snapshot_stride = get("snapshot_stride")
            .map(|v| parse_usize("snapshot_stride", &v))
            .transpose()?
            .unwrap_or(10);

        let grid_n = get("grid_n")
            .map(|v| parse_usize("grid_n", &v))
            .transpose()?;
        let grid_x_min = get("grid_x_min")
            .map(|v| parse_f64("grid_x_min", &v))
            .transpose()?;
        let grid_x_max = get("grid_x_max")
            .map(|v| parse_f64("grid_x_max", &v))
            .transpose()?;
        let grid = match (grid_x_min, grid_x_max, grid_n) {
            (Some(lo), Some(hi), Some(n)) => Some((lo, hi, n)),
            (None, None, None) => None,
            _ => {
                return Err(usage(
                    "grid override needs all of grid_x_min, grid_x_max, grid_n".into(),
                ))
            }
        };

        let jitter_target = match get("jitter_target").as_deref() {
            None | Some("transit_time") => JitterTarget::TransitTime,
            Some("velocity") => JitterTarget::Velocity,
            Some("field") => JitterTarget::FieldStrength,
            Some(other) => {
                return Err(usage(format!(
                    "key 'jitter_target': '{other}' is not one of transit_time, velocity, field"
                )))
            }
        };
        let jitter_delta = get("jitter_delta")
            .map(|v| parse_f64("jitter_delta", &v))
            .transpose()?
            .unwrap_or(0.01);
        let n_samples = get("n_samples")
            .map(|v| parse_usize("n_samples", &v))
            .transpose()?
            .unwrap_or(10_000);
        let mut seed = get("seed")
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| usage(format!("key 'seed': invalid integer '{v}'")))
            })
            .transpose()?
            .unwrap_or(0);
        if let Some(s) = seed_flag {
            seed = s;
        }

        let mut format = match get("format").as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(usage(format!("key 'format': '{other}' is not csv or json")))
            }
        };
        if let Some(f) = format_flag {
            format = f;
        }

        let defaults = RegimeThresholds::default();
        let thresholds = RegimeThresholds {
            bohm_hi: get("bohm_hi")
                .map(|v| parse_f64("bohm_hi", &v))
                .transpose()?
                .unwrap_or(defaults.bohm_hi),
            bohm_lo: get("bohm_lo")
                .map(|v| parse_f64("bohm_lo", &v))
                .transpose()?
                .unwrap_or(defaults.bohm_lo),
            separation_min: get("separation_min")
                .map(|v| parse_f64("separation_min", &v))
                .transpose()?
                .unwrap_or(defaults.separation_min),
            separation_floor: get("separation_floor")
                .map(|v| parse_f64("separation_floor", &v))
                .transpose()?
                .unwrap_or(defaults.separation_floor),
            visibility_max: get("visibility_max")
                .map(|v| parse_f64("visibility_max", &v))
                .transpose()?
                .unwrap_or(defaults.visibility_max),
        };
        let validate_tol = get("validate_tol")
            .map(|v| parse_f64("validate_tol", &v))
            .transpose()?
            .unwrap_or(1e-6);
        let dump_snapshots = get("dump_snapshots")
            .map(|v| parse_bool("dump_snapshots", &v))
            .transpose()?
            .unwrap_or(false);
        let sweep = get("sweep")
            .map(|v| parse_sweep(&v))
            .transpose()?
            .unwrap_or_default();

        let config = Self {
            mass,
            lambda,
            epsilon,
            x0,
            p0,
            sigma,
            a: Complex64::new(a_re, a_im),
            b: Complex64::new(b_re, b_im),
            magnet_length,
            velocity,
            delta_p,
            t_final,
            dt,
            snapshot_stride,
            grid,
            jitter_target,
            jitter_delta,
            n_samples,
            seed,
            format,
            thresholds,
            validate_tol,
            dump_snapshots,
            sweep,
        };
        config.build_types().map(|_| config)
    }

    /// Construct and validate every core type this config describes.
    pub fn build_types(&self) -> Result<ConfigTypes, AppError> {
        let err = |e: sgsim::SgError| usage(e.to_string());
        let params = PhysParams::new(self.mass, self.lambda, self.epsilon).map_err(err)?;
        let packet = GaussianPacket::new(self.x0, self.p0, self.sigma).map_err(err)?;
        let spins = SpinWeights::normalized(self.a, self.b).map_err(err)?;
        let geometry = ApparatusGeometry::new(
            self.magnet_length,
            self.velocity,
            self.delta_p.unwrap_or_else(|| packet.momentum_spread()),
        )
        .map_err(err)?;
        let jitter = JitterSpec::new(self.jitter_target, self.jitter_delta).map_err(err)?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(usage(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(usage(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_final > 0.0 {
            let steps = (self.t_final / self.dt).round();
            if steps < 1.0 || (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
                return Err(usage(format!(
                    "dt = {} does not divide t_final = {} to one part in 1e9",
                    self.dt, self.t_final
                )));
            }
        }
        Ok(ConfigTypes {
            params,
            packet,
            spins,
            geometry,
            jitter,
        })
    }

    /// Resolve the grid: explicit override or the automatic choice.
    pub fn resolve_grid(&self, types: &ConfigTypes) -> Result<GridSpec, AppError> {
        match self.grid {
            Some((lo, hi, n)) => GridSpec::new(lo, hi, n).map_err(|e| usage(e.to_string())),
            None => sgsim::spectral::auto_grid(&types.packet, &types.params, self.t_final)
                .map_err(|e| usage(e.to_string())),
        }
    }

    /// The base scan point described by this config.
    pub fn point_spec(&self, spins: &SpinWeights) -> PointSpec {
        PointSpec {
            mass: self.mass,
            lambda: self.lambda,
            epsilon: self.epsilon,
            x0: self.x0,
            p0: self.p0,
            sigma: self.sigma,
            magnet_length: self.magnet_length,
            velocity: self.velocity,
            delta_p: self.delta_p,
            a: spins.up(),
            b: spins.down(),
        }
    }

    /// Flat key-value text of the fully resolved configuration; re-reading
    /// it reproduces the identical run.
    pub fn effective_text(&self, spins: &SpinWeights, grid: Option<&GridSpec>) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mass", float(self.mass));
        kv("lambda", float(self.lambda));
        kv("epsilon", float(self.epsilon));
        kv("x0", float(self.x0));
        kv("p0", float(self.p0));
        kv("sigma", float(self.sigma));
        kv("a_re", float(spins.up().re));
        kv("a_im", float(spins.up().im));
        kv("b_re", float(spins.down().re));
        kv("b_im", float(spins.down().im));
        kv("magnet_length", float(self.magnet_length));
        kv("velocity", float(self.velocity));
        if let Some(dp) = self.delta_p {
            kv("delta_p", float(dp));
        }
        kv("t_final", float(self.t_final));
        kv("dt", float(self.dt));
        kv("snapshot_stride", self.snapshot_stride.to_string());
        if let Some(grid) = grid {
            kv("grid_x_min", float(grid.x_min()));
            kv("grid_x_max", float(grid.x_max()));
            kv("grid_n", grid.len().to_string());
        }
        kv("jitter_target", self.jitter_target.label().to_string());
        kv("jitter_delta", float(self.jitter_delta));
        kv("n_samples", self.n_samples.to_string());
        kv("seed", self.seed.to_string());
        kv("format", self.format.label().to_string());
        kv("bohm_hi", float(self.thresholds.bohm_hi));
        kv("bohm_lo", float(self.thresholds.bohm_lo));
        kv("separation_min", float(self.thresholds.separation_min));
        kv("separation_floor", float(self.thresholds.separation_floor));
        kv("visibility_max", float(self.thresholds.visibility_max));
        kv("validate_tol", float(self.validate_tol));
        kv("dump_snapshots", self.dump_snapshots.to_string());
        if !self.sweep.is_empty() {
            let clauses: Vec<String> = self
                .sweep
                .iter()
                .map(|c| {
                    format!(
                        "{}:{}:{}:{}:{}",
                        c.name,
                        if c.log_spaced { "log" } else { "linear" },
                        float(c.min),
                        float(c.max),
                        c.count
                    )
                })
                .collect();
            kv("sweep", clauses.join(","));
        }
        s
    }

    /// Cartesian product of the sweep clauses applied to the base point,
    /// first clause outermost (major order).
    pub fn sweep_points(&self, base: PointSpec) -> Result<Vec<PointSpec>, AppError> {
        if self.sweep.is_empty() {
            return Err(usage(
                "scan needs a sweep, e.g. --set sweep=epsilon:log:1e-3:1e2:61".into(),
            ));
        }
        let axes: Vec<(String, Vec<f64>)> = self
            .sweep
            .iter()
            .map(|c| (c.name.clone(), c.values()))
            .collect();
        let mut points = vec![base];
        for (name, values) in &axes {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for point in &points {
                for &v in values {
                    let mut p = *point;
                    match name.as_str() {
                        "epsilon" => p.epsilon = v,
                        "lambda" => p.lambda = v,
                        "mass" => p.mass = v,
                        "sigma" => p.sigma = v,
                        "x0" => p.x0 = v,
                        "p0" => p.p0 = v,
                        "magnet_length" => p.magnet_length = v,
                        "velocity" => p.velocity = v,
                        "delta_p" => p.delta_p = Some(v),
                        _ => unreachable!("sweep names validated at parse time"),
                    }
                    next.push(p);
                }
            }
            points = next;
        }
        Ok(points)
    }
}

/// Validated core types built from a [`RunConfig`].
pub struct ConfigTypes {
    pub params: PhysParams,
    pub packet: GaussianPacket,
    pub spins: SpinWeights,
    pub geometry: ApparatusGeometry,
    pub jitter: JitterSpec,
}
