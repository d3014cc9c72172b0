//! Parameter sweeps over the apparatus and the measuring / transition /
//! non-resolving classification.
//!
//! A point "measures" when the Bohm number is deep in `B ≫ 1`, the two
//! branch traces are resolvable (separation ratio S), and the residual
//! ensemble visibility is negligible. The concrete thresholds are artifact
//! policy — the physics criterion is only asymptotic — and are carried in
//! every output row so downstream consumers see them.

use std::io::{self, Write};

use serde::Serialize;

use num_complex::Complex64;

use crate::coherence::{scrambling_ensemble, JitterSpec};
use crate::error::SgError;
use crate::exec;
use crate::fmt::float;
use crate::model::{
    bohm_number, ApparatusGeometry, Branch, GaussianPacket, PhysParams, SpinWeights,
};
use crate::observables::{ehrenfest_formula, fluctuation_formula};

/// Schema version stamped into scan output files.
pub const SCAN_SCHEMA_VERSION: u32 = 1;

/// Classification cutoffs. Defaults: `B ≥ 10` with `S ≥ 2` and `V̄ ≤ 0.05`
/// measures; `B ≤ 0.1` or `S < 0.25` cannot resolve; anything else is the
/// transition region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeThresholds {
    pub bohm_hi: f64,
    pub bohm_lo: f64,
    pub separation_min: f64,
    pub separation_floor: f64,
    pub visibility_max: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            bohm_hi: 10.0,
            bohm_lo: 0.1,
            separation_min: 2.0,
            separation_floor: 0.25,
            visibility_max: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    Measuring,
    Transition,
    NonResolving,
}

impl RegimeLabel {
    pub fn label(self) -> &'static str {
        match self {
            RegimeLabel::Measuring => "measuring",
            RegimeLabel::Transition => "transition",
            RegimeLabel::NonResolving => "non-resolving",
        }
    }
}

/// Pure classification of the three dimensionless inputs.
pub fn classify(
    bohm: f64,
    separation: f64,
    visibility: f64,
    thresholds: &RegimeThresholds,
) -> RegimeLabel {
    if bohm >= thresholds.bohm_hi
        && separation >= thresholds.separation_min
        && visibility <= thresholds.visibility_max
    {
        RegimeLabel::Measuring
    } else if bohm <= thresholds.bohm_lo || separation < thresholds.separation_floor {
        RegimeLabel::NonResolving
    } else {
        RegimeLabel::Transition
    }
}

/// One raw parameter point of a scan. Validation happens inside
/// [`evaluate_point`], so sweeps over hostile values degrade into per-row
/// errors instead of aborting the scan.
#[derive(Debug, Clone, Copy)]
pub struct PointSpec {
    pub mass: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub magnet_length: f64,
    pub velocity: f64,
    /// Override for Δp; defaults to the packet momentum spread.
    pub delta_p: Option<f64>,
    pub a: Complex64,
    pub b: Complex64,
}

/// Shared scan configuration: thresholds plus the visibility ensemble.
#[derive(Debug, Clone, Copy)]
pub struct ScanContext {
    pub thresholds: RegimeThresholds,
    pub jitter: JitterSpec,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for ScanContext {
    fn default() -> Self {
        Self {
            thresholds: RegimeThresholds::default(),
            jitter: JitterSpec::default(),
            n_samples: 10_000,
            seed: 0,
        }
    }
}

/// Everything known about one evaluated parameter point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeReport {
    pub epsilon: f64,
    pub sigma: f64,
    pub mass: f64,
    pub lambda: f64,
    pub magnet_length: f64,
    pub velocity: f64,
    pub x0: f64,
    pub p0: f64,
    /// Transit time Δt = l/v; all exit quantities are evaluated here.
    pub transit_time: f64,
    /// |B| = |ε·Δt/Δp|.
    pub bohm: f64,
    /// `|⟨x⟩↑ − ⟨x⟩↓| / (2√Var(x))` at exit.
    pub separation_ratio: f64,
    /// Ensemble visibility at exit under the context jitter.
    pub visibility: f64,
    pub label: RegimeLabel,
}

/// Evaluate one point: transit time, Bohm number, branch separation from
/// the closed-form means and variance, residual visibility, and the label.
pub fn evaluate_point(spec: &PointSpec, ctx: &ScanContext) -> Result<RegimeReport, SgError> {
    let params = PhysParams::new(spec.mass, spec.lambda, spec.epsilon)?;
    let packet = GaussianPacket::new(spec.x0, spec.p0, spec.sigma)?;
    let spins = SpinWeights::new(spec.a, spec.b)?;
    let geom = ApparatusGeometry::new(
        spec.magnet_length,
        spec.velocity,
        spec.delta_p.unwrap_or_else(|| packet.momentum_spread()),
    )?;

    let exit = geom.transit_time();
    let bohm = bohm_number(&params, &geom).abs();

    let (x_up, _) = ehrenfest_formula(&packet, &params, Branch::Up, exit);
    let (x_down, _) = ehrenfest_formula(&packet, &params, Branch::Down, exit);
    let (var_x, _) = fluctuation_formula(&packet, &params, exit);
    let separation_ratio = (x_up - x_down).abs() / (2.0 * var_x.sqrt());

    let visibility = scrambling_ensemble(
        &packet,
        &params,
        &spins,
        exit,
        &ctx.jitter,
        ctx.n_samples,
        ctx.seed,
    )?
    .visibility;

    Ok(RegimeReport {
        epsilon: spec.epsilon,
        sigma: spec.sigma,
        mass: spec.mass,
        lambda: spec.lambda,
        magnet_length: spec.magnet_length,
        velocity: spec.velocity,
        x0: spec.x0,
        p0: spec.p0,
        transit_time: exit,
        bohm,
        separation_ratio,
        visibility,
        label: classify(bohm, separation_ratio, visibility, &ctx.thresholds),
    })
}

/// Evaluate every point. Output order equals input order regardless of the
/// execution strategy; per-point failures stay in their row.
pub fn scan(specs: &[PointSpec], ctx: &ScanContext) -> Vec<Result<RegimeReport, SgError>> {
    exec::map_slice(specs, |spec| evaluate_point(spec, ctx))
}

/// Sequential twin of [`scan`]; same results, one thread.
pub fn scan_sequential(
    specs: &[PointSpec],
    ctx: &ScanContext,
) -> Vec<Result<RegimeReport, SgError>> {
    specs.iter().map(|spec| evaluate_point(spec, ctx)).collect()
}

const SCAN_COLUMNS: &str = "epsilon,sigma,mass,lambda,magnet_length,velocity,x0,p0,\
transit_time,bohm,separation_ratio,visibility,label,\
bohm_hi,bohm_lo,separation_min,separation_floor,visibility_max,status,message";

/// CSV emission: commented metadata header (schema version, thresholds,
/// jitter), one row per point in input order, threshold columns repeated
/// per row, failures as `status=error` rows.
pub fn write_scan_csv<W: Write>(
    out: &mut W,
    specs: &[PointSpec],
    outcomes: &[Result<RegimeReport, SgError>],
    ctx: &ScanContext,
) -> io::Result<()> {
    debug_assert_eq!(specs.len(), outcomes.len());
    writeln!(
        out,
        "# sgsim regime scan (sgsim {})",
        env!("CARGO_PKG_VERSION")
    )?;
    writeln!(out, "# schema_version = {SCAN_SCHEMA_VERSION}")?;
    let th = &ctx.thresholds;
    writeln!(
        out,
        "# thresholds: bohm_hi = {} bohm_lo = {} separation_min = {} separation_floor = {} visibility_max = {}",
        float(th.bohm_hi),
        float(th.bohm_lo),
        float(th.separation_min),
        float(th.separation_floor),
        float(th.visibility_max)
    )?;
    writeln!(
        out,
        "# jitter: target = {} delta = {} n_samples = {} seed = {}",
        ctx.jitter.target().label(),
        float(ctx.jitter.delta()),
        ctx.n_samples,
        ctx.seed
    )?;
    writeln!(out, "{SCAN_COLUMNS}")?;
    let th_cols = format!(
        "{},{},{},{},{}",
        float(th.bohm_hi),
        float(th.bohm_lo),
        float(th.separation_min),
        float(th.separation_floor),
        float(th.visibility_max)
    );
    for (spec, outcome) in specs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},ok,",
                float(r.epsilon),
                float(r.sigma),
                float(r.mass),
                float(r.lambda),
                float(r.magnet_length),
                float(r.velocity),
                float(r.x0),
                float(r.p0),
                float(r.transit_time),
                float(r.bohm),
                float(r.separation_ratio),
                float(r.visibility),
                r.label.label(),
                th_cols
            )?,
            Err(e) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},nan,nan,nan,nan,,{},error,{}",
                float(spec.epsilon),
                float(spec.sigma),
                float(spec.mass),
                float(spec.lambda),
                float(spec.magnet_length),
                float(spec.velocity),
                float(spec.x0),
                float(spec.p0),
                th_cols,
                e.to_string().replace(',', ";")
            )?,
        }
    }
    Ok(())
}

/// JSON emission mirroring the CSV content, with a `schema_version` field.
pub fn write_scan_json<W: Write>(
    out: &mut W,
    specs: &[PointSpec],
    outcomes: &[Result<RegimeReport, SgError>],
    ctx: &ScanContext,
) -> io::Result<()> {
    let points: Vec<serde_json::Value> = specs
        .iter()
        .zip(outcomes)
        .map(|(spec, outcome)| match outcome {
            Ok(r) => {
                let mut v = serde_json::to_value(r).expect("report serializes");
                v["status"] = "ok".into();
                v
            }
            Err(e) => serde_json::json!({
                "epsilon": spec.epsilon,
                "sigma": spec.sigma,
                "mass": spec.mass,
                "lambda": spec.lambda,
                "magnet_length": spec.magnet_length,
                "velocity": spec.velocity,
                "x0": spec.x0,
                "p0": spec.p0,
                "status": "error",
                "message": e.to_string(),
            }),
        })
        .collect();
    let doc = serde_json::json!({
        "schema_version": SCAN_SCHEMA_VERSION,
        "sgsim_version": env!("CARGO_PKG_VERSION"),
        "thresholds": ctx.thresholds,
        "jitter": { "target": ctx.jitter.target().label(), "delta": ctx.jitter.delta() },
        "n_samples": ctx.n_samples,
        "seed": ctx.seed,
        "points": points,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)
}
