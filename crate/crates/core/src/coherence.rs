//! Branch overlap, spin coherence, and the phase-scrambling ensemble.
//!
//! The position marginal of the entangled state and of the spin-diagonal
//! mixed state coincide identically, so every observable signature of the
//! surviving superposition lives in the spin-coherence sector: the branch
//! overlap `O(t) = ∫ψ↑*ψ↓ dx`, the transverse spin expectation
//! `⟨σ_x⟩ = 2·Re[conj(a)·b·O]`, and the off-diagonal weight `|a||b|·|O|`
//! separating the pure from the mixed density matrix. Ensemble averaging
//! over shot-to-shot transit-time jitter scrambles the fast overlap phase
//! and is what makes the coherence unobservable in practice.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic::branch_overlap_analytic;
use crate::error::SgError;
use crate::exec;
use crate::fmt::float;
use crate::grid;
use crate::model::{GaussianPacket, PhysParams, SpinWeights};
use crate::observables::EMPTY_BRANCH_NORM;
use crate::spectral::SpinorGridState;

/// Truncation of the jitter distribution, in standard deviations.
const JITTER_TRUNCATION: f64 = 4.0;

/// Normalized branch overlap computed on the grid: the up branch of one
/// state against the down branch of another (pass the same state twice for
/// the usual single-run overlap).
///
/// Both branch amplitudes are normalized away, so the modulus matches the
/// closed-form `|O(t)|`; any relative phase of the baked-in spin weights
/// remains in the result.
pub fn overlap_grid(
    up_state: &SpinorGridState,
    down_state: &SpinorGridState,
) -> Result<Complex64, SgError> {
    if !up_state.grid().same_as(down_state.grid()) {
        return Err(SgError::GridMismatch(format!(
            "left grid [{}, {}]x{} vs right grid [{}, {}]x{}",
            up_state.grid().x_min(),
            up_state.grid().x_max(),
            up_state.grid().len(),
            down_state.grid().x_min(),
            down_state.grid().x_max(),
            down_state.grid().len()
        )));
    }
    let up_norm = up_state.branch_norm(crate::model::Branch::Up);
    let down_norm = down_state.branch_norm(crate::model::Branch::Down);
    if up_norm <= EMPTY_BRANCH_NORM || down_norm <= EMPTY_BRANCH_NORM {
        return Err(SgError::EmptyBranch(format!(
            "branch norms ({up_norm:e}, {down_norm:e}) too small for a normalized overlap"
        )));
    }
    let raw = grid::inner(up_state.grid().dx(), up_state.up(), down_state.down());
    Ok(raw / (up_norm * down_norm))
}

/// Transverse spin expectation `⟨σ_x⟩ = 2·Re[conj(a)·b·O]`.
pub fn sigma_x_expectation(spins: &SpinWeights, overlap: Complex64) -> Result<f64, SgError> {
    if overlap.norm() > 1.0 + 1e-12 {
        return Err(SgError::InvalidParameter(format!(
            "overlap modulus {} exceeds 1",
            overlap.norm()
        )));
    }
    Ok(2.0 * (spins.up().conj() * spins.down() * overlap).re)
}

/// Direct grid evaluation of `⟨σ_x ⊗ 1⟩` on the full spinor state.
pub fn sigma_x_grid(state: &SpinorGridState) -> f64 {
    2.0 * grid::inner(state.grid().dx(), state.up(), state.down()).re
}

/// Scalar distance between the pure projector and the spin-diagonal mixed
/// density matrix: the off-diagonal spin-block weight `|a||b|·|O(t)|`,
/// computed directly from the weighted branch amplitudes.
///
/// Zero exactly when the mixed form reproduces all accessible statistics.
pub fn full_vs_mixed_distinguishability(state: &SpinorGridState) -> f64 {
    grid::inner(state.grid().dx(), state.up(), state.down()).norm()
}

/// The same distinguishability from spin weights and an overlap value.
pub fn distinguishability_from_overlap(spins: &SpinWeights, overlap_mod: f64) -> f64 {
    spins.up().norm() * spins.down().norm() * overlap_mod
}

/// Position marginal `|up(x)|² + |down(x)|²` of the state; identical for
/// the pure state and for the mixed density matrix built from the same
/// branches.
pub fn position_marginal(state: &SpinorGridState) -> Vec<f64> {
    state
        .up()
        .iter()
        .zip(state.down())
        .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
        .collect()
}

/// Which apparatus quantity fluctuates from shot to shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JitterTarget {
    /// `t_k = Δt·(1 + δ·z)` — the default.
    TransitTime,
    /// `v_k = v·(1 + δ·z)`, so `t_k = Δt/(1 + δ·z)`.
    Velocity,
    /// `ε_k = ε·(1 + δ·z)` at fixed transit time.
    FieldStrength,
}

impl JitterTarget {
    pub fn label(self) -> &'static str {
        match self {
            JitterTarget::TransitTime => "transit_time",
            JitterTarget::Velocity => "velocity",
            JitterTarget::FieldStrength => "field",
        }
    }
}

/// Fractional Gaussian jitter specification, truncated at ±4 standard
/// deviations.
#[derive(Debug, Clone, Copy)]
pub struct JitterSpec {
    target: JitterTarget,
    delta: f64,
}

impl JitterSpec {
    pub fn new(target: JitterTarget, delta: f64) -> Result<Self, SgError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(SgError::InvalidDistribution(format!(
                "jitter width must be finite and non-negative, got {delta}"
            )));
        }
        Ok(Self { target, delta })
    }

    pub fn target(&self) -> JitterTarget {
        self.target
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            target: JitterTarget::TransitTime,
            delta: 0.01,
        }
    }
}

/// Ensemble-averaged overlap statistics.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleStats {
    pub n_samples: usize,
    pub seed: u64,
    /// `Ō = (1/n)ΣO_k`.
    pub mean_overlap: Complex64,
    /// Visibility `V̄ = |Ō|`.
    pub visibility: f64,
    /// `2·Re[conj(a)·b·Ō]`.
    pub mean_sigma_x: f64,
    /// Standard errors of the real and imaginary parts of `Ō`.
    pub se_re: f64,
    pub se_im: f64,
}

/// Average the closed-form overlap over jittered apparatus realizations.
///
/// Every sample index owns its own counter-mode RNG stream, so the result
/// is a deterministic function of `(seed, stream_offset)` regardless of the
/// execution order; the final accumulation runs in index order.
pub fn scrambling_ensemble(
    packet: &GaussianPacket,
    params: &PhysParams,
    spins: &SpinWeights,
    t_nominal: f64,
    jitter: &JitterSpec,
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleStats, SgError> {
    ensemble_impl(
        packet, params, spins, t_nominal, jitter, n_samples, seed, 0, false,
    )
}

/// Sequential twin of [`scrambling_ensemble`]; same results, one thread.
pub fn scrambling_ensemble_sequential(
    packet: &GaussianPacket,
    params: &PhysParams,
    spins: &SpinWeights,
    t_nominal: f64,
    jitter: &JitterSpec,
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleStats, SgError> {
    ensemble_impl(
        packet, params, spins, t_nominal, jitter, n_samples, seed, 0, true,
    )
}

/// Ensemble with an explicit RNG stream offset, for callers evaluating many
/// ensembles (for example one per output time) under a single seed.
#[allow(clippy::too_many_arguments)]
pub fn scrambling_ensemble_offset(
    packet: &GaussianPacket,
    params: &PhysParams,
    spins: &SpinWeights,
    t_nominal: f64,
    jitter: &JitterSpec,
    n_samples: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<EnsembleStats, SgError> {
    ensemble_impl(
        packet,
        params,
        spins,
        t_nominal,
        jitter,
        n_samples,
        seed,
        stream_offset,
        false,
    )
}

#[allow(clippy::too_many_arguments)]
fn ensemble_impl(
    packet: &GaussianPacket,
    params: &PhysParams,
    spins: &SpinWeights,
    t_nominal: f64,
    jitter: &JitterSpec,
    n_samples: usize,
    seed: u64,
    stream_offset: u64,
    force_sequential: bool,
) -> Result<EnsembleStats, SgError> {
    if n_samples < 2 {
        return Err(SgError::InvalidDistribution(format!(
            "ensemble needs at least 2 samples, got {n_samples}"
        )));
    }
    if t_nominal <= 0.0 || t_nominal.is_nan() {
        return Err(SgError::InvalidParameter(format!(
            "nominal transit time must be positive, got {t_nominal}"
        )));
    }

    let delta = jitter.delta();
    let target = jitter.target();
    if delta == 0.0 {
        // degenerate ensemble: every draw is the nominal apparatus
        let o = branch_overlap_analytic(packet, params, t_nominal);
        return Ok(EnsembleStats {
            n_samples,
            seed,
            mean_overlap: o,
            visibility: o.norm(),
            mean_sigma_x: sigma_x_expectation(spins, o).unwrap_or(f64::NAN),
            se_re: 0.0,
            se_im: 0.0,
        });
    }
    let sample_one = move |k: usize| -> Complex64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_offset.wrapping_add(k as u64));
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() > JITTER_TRUNCATION {
                continue;
            }
            match target {
                JitterTarget::TransitTime => {
                    let t = t_nominal * (1.0 + delta * z);
                    if t > 0.0 {
                        return branch_overlap_analytic(packet, params, t);
                    }
                }
                JitterTarget::Velocity => {
                    let scale = 1.0 + delta * z;
                    if scale > 0.0 {
                        return branch_overlap_analytic(packet, params, t_nominal / scale);
                    }
                }
                JitterTarget::FieldStrength => {
                    let eps = params.epsilon() * (1.0 + delta * z);
                    let jittered =
                        PhysParams::new(params.mass(), params.lambda(), eps).expect("finite eps");
                    return branch_overlap_analytic(packet, &jittered, t_nominal);
                }
            }
        }
    };

    let samples: Vec<Complex64> = if force_sequential {
        (0..n_samples).map(sample_one).collect()
    } else {
        exec::map_range(n_samples, sample_one)
    };

    let n = n_samples as f64;
    let mean: Complex64 = samples.iter().sum::<Complex64>() / n;
    let (mut var_re, mut var_im) = (0.0, 0.0);
    for s in &samples {
        var_re += (s.re - mean.re) * (s.re - mean.re);
        var_im += (s.im - mean.im) * (s.im - mean.im);
    }
    var_re /= n - 1.0;
    var_im /= n - 1.0;

    Ok(EnsembleStats {
        n_samples,
        seed,
        mean_overlap: mean,
        visibility: mean.norm(),
        mean_sigma_x: sigma_x_expectation(spins, mean).unwrap_or(f64::NAN),
        se_re: (var_re / n).sqrt(),
        se_im: (var_im / n).sqrt(),
    })
}

/// Time series of coherence quantities from one run.
#[derive(Debug, Clone)]
pub struct CoherenceSeries {
    times: Vec<f64>,
    overlap: Vec<Complex64>,
    sigma_x: Vec<f64>,
    distinguishability: Vec<f64>,
    visibility: Vec<f64>,
    n_samples: usize,
    seed: u64,
}

impl CoherenceSeries {
    /// Build the series from spectral snapshots.
    ///
    /// The overlap is the grid cross-correlation with the spin-weight phase
    /// divided out; when either weight vanishes the unit-branch overlap is
    /// taken from the closed form instead (the branch shapes do not depend
    /// on the weights). Per-time ensemble visibilities reuse the run seed
    /// with disjoint RNG streams.
    #[allow(clippy::too_many_arguments)]
    pub fn from_trajectory(
        traj: &[SpinorGridState],
        packet: &GaussianPacket,
        params: &PhysParams,
        spins: &SpinWeights,
        jitter: &JitterSpec,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, SgError> {
        let mut series = Self {
            times: Vec::with_capacity(traj.len()),
            overlap: Vec::with_capacity(traj.len()),
            sigma_x: Vec::with_capacity(traj.len()),
            distinguishability: Vec::with_capacity(traj.len()),
            visibility: Vec::with_capacity(traj.len()),
            n_samples,
            seed,
        };
        let weight_phase = spins.up().conj() * spins.down();
        for (idx, state) in traj.iter().enumerate() {
            let t = state.time();
            let o_unit = if weight_phase.norm() > 1e-12 {
                let raw = grid::inner(state.grid().dx(), state.up(), state.down());
                raw / weight_phase
            } else {
                branch_overlap_analytic(packet, params, t)
            };
            series.times.push(t);
            series.overlap.push(o_unit);
            series.sigma_x.push(sigma_x_grid(state));
            series
                .distinguishability
                .push(full_vs_mixed_distinguishability(state));
            series.visibility.push(visibility_at(
                packet,
                params,
                spins,
                t,
                jitter,
                n_samples,
                seed,
                (idx as u64).wrapping_mul(n_samples as u64),
            )?);
        }
        Ok(series)
    }

    /// Build the series from the closed form alone at the given times.
    pub fn from_analytic_times(
        packet: &GaussianPacket,
        params: &PhysParams,
        spins: &SpinWeights,
        times: &[f64],
        jitter: &JitterSpec,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self, SgError> {
        let mut series = Self {
            times: times.to_vec(),
            overlap: Vec::with_capacity(times.len()),
            sigma_x: Vec::with_capacity(times.len()),
            distinguishability: Vec::with_capacity(times.len()),
            visibility: Vec::with_capacity(times.len()),
            n_samples,
            seed,
        };
        for (idx, &t) in times.iter().enumerate() {
            let o = branch_overlap_analytic(packet, params, t);
            series.overlap.push(o);
            series.sigma_x.push(sigma_x_expectation(spins, o)?);
            series
                .distinguishability
                .push(distinguishability_from_overlap(spins, o.norm()));
            series.visibility.push(visibility_at(
                packet,
                params,
                spins,
                t,
                jitter,
                n_samples,
                seed,
                (idx as u64).wrapping_mul(n_samples as u64),
            )?);
        }
        Ok(series)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn overlap(&self) -> &[Complex64] {
        &self.overlap
    }

    pub fn sigma_x(&self) -> &[f64] {
        &self.sigma_x
    }

    pub fn distinguishability(&self) -> &[f64] {
        &self.distinguishability
    }

    pub fn visibility(&self) -> &[f64] {
        &self.visibility
    }

    /// JSON emission mirroring the CSV rows, with a `schema_version` field.
    pub fn write_json<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                serde_json::json!({
                    "time": t,
                    "overlap_mod": self.overlap[i].norm(),
                    "overlap_phase": self.overlap[i].arg(),
                    "sigma_x": self.sigma_x[i],
                    "distinguishability": self.distinguishability[i],
                    "ensemble_visibility": self.visibility[i],
                })
            })
            .collect();
        let doc = serde_json::json!({
            "schema_version": 1,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "rows": rows,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)
    }

    /// CSV emission: `time,overlap_mod,overlap_phase,sigma_x,distinguishability,ensemble_visibility,n_samples,seed`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "time,overlap_mod,overlap_phase,sigma_x,distinguishability,ensemble_visibility,n_samples,seed"
        )?;
        for (i, &t) in self.times.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                float(t),
                float(self.overlap[i].norm()),
                float(self.overlap[i].arg()),
                float(self.sigma_x[i]),
                float(self.distinguishability[i]),
                float(self.visibility[i]),
                self.n_samples,
                self.seed
            )?;
        }
        Ok(())
    }
}

/// Visibility at one time; t = 0 needs no ensemble (the overlap is 1 and
/// positive transit times are required by the sampler).
#[allow(clippy::too_many_arguments)]
fn visibility_at(
    packet: &GaussianPacket,
    params: &PhysParams,
    spins: &SpinWeights,
    t: f64,
    jitter: &JitterSpec,
    n_samples: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<f64, SgError> {
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(scrambling_ensemble_offset(
        packet,
        params,
        spins,
        t,
        jitter,
        n_samples,
        seed,
        stream_offset,
    )?
    .visibility)
}
