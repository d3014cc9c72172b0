//! Means, variances, Ehrenfest checks and relative fluctuations per branch.
//!
//! Each branch obeys the classical Hamilton equations exactly (the branch
//! Hamiltonian is linear in x), so the measured means should match
//!
//! ```text
//! ⟨x⟩_± = x₀ + p₀t/m ∓ εt²/(2m)       ⟨p⟩_± = p₀ ∓ εt
//! ```
//!
//! while the fluctuations are pure free-packet spreading, branch independent:
//! `Var(x) = σ²/2 + t²/(2m²σ²)` and `Var(p) = 1/(2σ²)` (constant in time).

use std::io::{self, Write};

use num_complex::Complex64;

use crate::analytic::{evolve_branch_analytic, sample_on_grid};
use crate::error::SgError;
use crate::fft::FftPair;
use crate::fmt::float;
use crate::grid::GridSpec;
use crate::model::{Branch, GaussianPacket, PhysParams, SpinWeights};
use crate::spectral::SpinorGridState;

/// Branch norm below which per-branch moments are refused.
pub const EMPTY_BRANCH_NORM: f64 = 1e-12;

/// Mean positions smaller than this make the relative fluctuation undefined.
pub const MEAN_X_FLOOR: f64 = 1e-9;

/// First and second moments of one branch at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

/// Position moments by position-space quadrature, momentum moments by
/// momentum-space quadrature of the branch DFT; all normalized by the
/// branch norm.
pub fn moments_from_grid(state: &SpinorGridState, branch: Branch) -> Result<Moments, SgError> {
    let grid = state.grid();
    let psi = state.branch(branch);
    let dx = grid.dx();

    let weight: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if (weight * dx).sqrt() <= EMPTY_BRANCH_NORM {
        return Err(SgError::EmptyBranch(format!(
            "branch {} norm {:e} is at or below {EMPTY_BRANCH_NORM:e}",
            branch.label(),
            (weight * dx).sqrt()
        )));
    }

    let mean_x = psi
        .iter()
        .zip(grid.xs())
        .map(|(a, &x)| x * a.norm_sqr())
        .sum::<f64>()
        / weight;
    let var_x = psi
        .iter()
        .zip(grid.xs())
        .map(|(a, &x)| (x - mean_x) * (x - mean_x) * a.norm_sqr())
        .sum::<f64>()
        / weight;

    let mut hat = psi.to_vec();
    FftPair::new(grid.len()).forward(&mut hat);
    let k_weight: f64 = hat.iter().map(|a| a.norm_sqr()).sum();
    let mean_p = hat
        .iter()
        .zip(grid.ks())
        .map(|(a, &k)| k * a.norm_sqr())
        .sum::<f64>()
        / k_weight;
    let var_p = hat
        .iter()
        .zip(grid.ks())
        .map(|(a, &k)| (k - mean_p) * (k - mean_p) * a.norm_sqr())
        .sum::<f64>()
        / k_weight;

    Ok(Moments {
        mean_x,
        mean_p,
        var_x,
        var_p,
    })
}

/// Classical-trajectory means `(⟨x⟩, ⟨p⟩)` for a branch at time t.
pub fn ehrenfest_formula(
    packet: &GaussianPacket,
    params: &PhysParams,
    branch: Branch,
    t: f64,
) -> (f64, f64) {
    let s = branch.sign();
    let m = params.mass();
    let mean_x = packet.x0() + packet.p0() * t / m - s * params.epsilon() * t * t / (2.0 * m);
    let mean_p = packet.p0() - s * params.epsilon() * t;
    (mean_x, mean_p)
}

/// Closed-form fluctuations `(Var(x), Var(p))` at time t.
///
/// `Var(p)` is the centered momentum variance `1/(2σ²)`, constant in time.
/// The uncentered second moment `p₀² + 1/(2σ²)` sometimes quoted for this
/// quantity is ⟨p²⟩ at t = 0, not the variance; validation output reports
/// both for comparison.
pub fn fluctuation_formula(packet: &GaussianPacket, params: &PhysParams, t: f64) -> (f64, f64) {
    let m = params.mass();
    let s2 = packet.sigma() * packet.sigma();
    (s2 / 2.0 + t * t / (2.0 * m * m * s2), 1.0 / (2.0 * s2))
}

/// Large-time relative-fluctuation asymptote `2/(σ²ε²t²)`.
pub fn relative_fluctuation_asymptote(packet: &GaussianPacket, params: &PhysParams, t: f64) -> f64 {
    let s2 = packet.sigma() * packet.sigma();
    let e2 = params.epsilon() * params.epsilon();
    2.0 / (s2 * e2 * t * t)
}

/// `Var(x)/⟨x⟩²`; refuses mean positions below [`MEAN_X_FLOOR`].
pub fn relative_fluctuation_value(var_x: f64, mean_x: f64) -> Result<f64, SgError> {
    if mean_x.abs() < MEAN_X_FLOOR {
        return Err(SgError::UndefinedAtZeroMean(mean_x.abs()));
    }
    Ok(var_x / (mean_x * mean_x))
}

/// Which propagation path produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesSource {
    Analytic,
    Spectral,
    Formula,
}

impl SeriesSource {
    pub fn label(self) -> &'static str {
        match self {
            SeriesSource::Analytic => "analytic",
            SeriesSource::Spectral => "spectral",
            SeriesSource::Formula => "formula",
        }
    }
}

/// Moments and norm of one branch at one sample time.
#[derive(Debug, Clone, Copy)]
pub struct BranchSample {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub norm: f64,
}

/// Time series of per-branch observables from one propagation.
#[derive(Debug, Clone)]
pub struct ObservableSeries {
    times: Vec<f64>,
    up: Vec<BranchSample>,
    down: Vec<BranchSample>,
    source: SeriesSource,
}

impl ObservableSeries {
    /// Extract the series from spectral snapshots.
    ///
    /// A branch with ~zero norm (pure spin state) gets NaN moments rather
    /// than failing the whole series.
    pub fn from_trajectory(traj: &[SpinorGridState]) -> Self {
        let mut times = Vec::with_capacity(traj.len());
        let mut up = Vec::with_capacity(traj.len());
        let mut down = Vec::with_capacity(traj.len());
        for state in traj {
            times.push(state.time());
            up.push(branch_sample(state, Branch::Up));
            down.push(branch_sample(state, Branch::Down));
        }
        Self {
            times,
            up,
            down,
            source: SeriesSource::Spectral,
        }
    }

    /// Sample the closed-form branches on a grid at the given times and run
    /// the same quadrature pipeline over them.
    pub fn from_analytic(
        packet: &GaussianPacket,
        spins: &SpinWeights,
        params: &PhysParams,
        grid: &GridSpec,
        times: &[f64],
    ) -> Result<Self, SgError> {
        let mut up = Vec::with_capacity(times.len());
        let mut down = Vec::with_capacity(times.len());
        for &t in times {
            let state = analytic_state(packet, spins, params, grid, t)?;
            up.push(branch_sample(&state, Branch::Up));
            down.push(branch_sample(&state, Branch::Down));
        }
        Ok(Self {
            times: times.to_vec(),
            up,
            down,
            source: SeriesSource::Analytic,
        })
    }

    /// Evaluate the closed-form moment expressions directly.
    pub fn from_formula(
        packet: &GaussianPacket,
        spins: &SpinWeights,
        params: &PhysParams,
        times: &[f64],
    ) -> Self {
        let sample = |branch: Branch, t: f64| {
            let (mean_x, mean_p) = ehrenfest_formula(packet, params, branch, t);
            let (var_x, var_p) = fluctuation_formula(packet, params, t);
            BranchSample {
                mean_x,
                mean_p,
                var_x,
                var_p,
                norm: spins.weight(branch).norm(),
            }
        };
        Self {
            times: times.to_vec(),
            up: times.iter().map(|&t| sample(Branch::Up, t)).collect(),
            down: times.iter().map(|&t| sample(Branch::Down, t)).collect(),
            source: SeriesSource::Formula,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn source(&self) -> SeriesSource {
        self.source
    }

    pub fn samples(&self, branch: Branch) -> &[BranchSample] {
        match branch {
            Branch::Up => &self.up,
            Branch::Down => &self.down,
        }
    }

    pub fn sample(&self, branch: Branch, index: usize) -> &BranchSample {
        &self.samples(branch)[index]
    }

    /// Relative fluctuation `Var(x)/⟨x⟩²` at a sample index.
    pub fn relative_fluctuation(&self, branch: Branch, index: usize) -> Result<f64, SgError> {
        let s = self.sample(branch, index);
        relative_fluctuation_value(s.var_x, s.mean_x)
    }

    /// JSON emission mirroring the CSV rows, with a `schema_version` field.
    /// Undefined relative fluctuations serialize as `null`.
    pub fn write_json<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .times
            .iter()
            .enumerate()
            .flat_map(|(i, &t)| {
                [Branch::Up, Branch::Down].into_iter().map(move |branch| {
                    let s = self.sample(branch, i);
                    let rel = relative_fluctuation_value(s.var_x, s.mean_x).ok();
                    serde_json::json!({
                        "time": t,
                        "branch": branch.label(),
                        "mean_x": s.mean_x,
                        "mean_p": s.mean_p,
                        "var_x": s.var_x,
                        "var_p": s.var_p,
                        "norm": s.norm,
                        "rel_fluct": rel,
                        "source": self.source.label(),
                    })
                })
            })
            .collect();
        let doc = serde_json::json!({ "schema_version": 1, "rows": rows });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)
    }

    /// CSV emission: `time,branch,mean_x,mean_p,var_x,var_p,norm,rel_fluct,source`,
    /// time-major with the up branch before the down branch. An undefined
    /// relative fluctuation is written as `nan`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "time,branch,mean_x,mean_p,var_x,var_p,norm,rel_fluct,source"
        )?;
        for (i, &t) in self.times.iter().enumerate() {
            for branch in [Branch::Up, Branch::Down] {
                let s = self.sample(branch, i);
                let rel = relative_fluctuation_value(s.var_x, s.mean_x).unwrap_or(f64::NAN);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    float(t),
                    branch.label(),
                    float(s.mean_x),
                    float(s.mean_p),
                    float(s.var_x),
                    float(s.var_p),
                    float(s.norm),
                    float(rel),
                    self.source.label()
                )?;
            }
        }
        Ok(())
    }
}

fn branch_sample(state: &SpinorGridState, branch: Branch) -> BranchSample {
    match moments_from_grid(state, branch) {
        Ok(m) => BranchSample {
            mean_x: m.mean_x,
            mean_p: m.mean_p,
            var_x: m.var_x,
            var_p: m.var_p,
            norm: state.branch_norm(branch),
        },
        Err(_) => BranchSample {
            mean_x: f64::NAN,
            mean_p: f64::NAN,
            var_x: f64::NAN,
            var_p: f64::NAN,
            norm: state.branch_norm(branch),
        },
    }
}

/// Closed-form branches sampled on a grid, weighted by the spin amplitudes.
pub fn analytic_state(
    packet: &GaussianPacket,
    spins: &SpinWeights,
    params: &PhysParams,
    grid: &GridSpec,
    t: f64,
) -> Result<SpinorGridState, SgError> {
    let up_branch = evolve_branch_analytic(packet, Branch::Up, params, t);
    let down_branch = evolve_branch_analytic(packet, Branch::Down, params, t);
    let up: Vec<Complex64> = sample_on_grid(&up_branch, grid)?
        .into_iter()
        .map(|v| spins.up() * v)
        .collect();
    let down: Vec<Complex64> = sample_on_grid(&down_branch, grid)?
        .into_iter()
        .map(|v| spins.down() * v)
        .collect();
    SpinorGridState::new(grid.clone(), up, down, t)
}

/// Worst deviation of the measured means from the Hamilton-equation values,
/// over every sample and both branches.
pub fn ehrenfest_residual(
    series: &ObservableSeries,
    packet: &GaussianPacket,
    params: &PhysParams,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &t) in series.times().iter().enumerate() {
        for branch in [Branch::Up, Branch::Down] {
            let s = series.sample(branch, i);
            let (fx, fp) = ehrenfest_formula(packet, params, branch, t);
            worst = worst.max((s.mean_x - fx).abs()).max((s.mean_p - fp).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_initial_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn equal_spins() -> SpinWeights {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        SpinWeights::new(h, h).unwrap()
    }

    #[test]
    fn initial_gaussian_moments() {
        let packet = GaussianPacket::new(0.0, 5.0, 1.0).unwrap();
        let grid = GridSpec::new(-30.0, 50.0, 4096).unwrap();
        let state = make_initial_state(&packet, &equal_spins(), &grid).unwrap();
        let m = moments_from_grid(&state, Branch::Up).unwrap();
        assert_abs_diff_eq!(m.mean_x, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.mean_p, 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.var_x, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(m.var_p, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn momentum_variance_matches_independent_quadrature() {
        // Independent oracle: the initial momentum density is
        // |φ(p)|² = σ/√π · exp(−σ²(p−p₀)²); integrate it directly on a
        // dense momentum grid, without any FFT.
        let sigma = 1.4;
        let p0 = 3.0;
        let n = 40_001;
        let lo = p0 - 12.0 / sigma;
        let hi = p0 + 12.0 / sigma;
        let dp = (hi - lo) / (n - 1) as f64;
        let density = |p: f64| {
            sigma / std::f64::consts::PI.sqrt() * (-(sigma * sigma) * (p - p0) * (p - p0)).exp()
        };
        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for i in 0..n {
            let p = lo + i as f64 * dp;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            mass += w * density(p);
            first += w * p * density(p);
            second += w * p * p * density(p);
        }
        let mean = first / mass;
        let var = second / mass - mean * mean;
        // oracle agrees with the closed form 1/(2σ²)
        assert_abs_diff_eq!(var, 1.0 / (2.0 * sigma * sigma), epsilon = 1e-10);

        // grid pipeline agrees with the oracle
        let packet = GaussianPacket::new(0.0, p0, sigma).unwrap();
        let grid = GridSpec::new(-30.0, 30.0, 2048).unwrap();
        let state = make_initial_state(&packet, &equal_spins(), &grid).unwrap();
        let m = moments_from_grid(&state, Branch::Down).unwrap();
        assert_abs_diff_eq!(m.var_p, var, epsilon = 1e-8);
        assert_abs_diff_eq!(m.mean_p, p0, epsilon = 1e-8);
    }

    #[test]
    fn empty_branch_is_refused() {
        let packet = GaussianPacket::new(0.0, 0.0, 1.0).unwrap();
        let spins = SpinWeights::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let grid = GridSpec::new(-16.0, 16.0, 256).unwrap();
        let state = make_initial_state(&packet, &spins, &grid).unwrap();
        assert!(matches!(
            moments_from_grid(&state, Branch::Down),
            Err(SgError::EmptyBranch(_))
        ));
    }

    #[test]
    fn ehrenfest_formula_values() {
        let packet = GaussianPacket::new(0.0, 5.0, 1.0).unwrap();
        let params = PhysParams::new(1.0, 1.0, 0.5).unwrap();
        let (x_up, p_up) = ehrenfest_formula(&packet, &params, Branch::Up, 2.0);
        assert_abs_diff_eq!(x_up, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_up, 4.0, epsilon = 1e-12);
        let (x_dn, p_dn) = ehrenfest_formula(&packet, &params, Branch::Down, 2.0);
        assert_abs_diff_eq!(x_dn, 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_dn, 6.0, epsilon = 1e-12);

        // free particle
        let free = PhysParams::new(2.0, 0.0, 0.0).unwrap();
        let (x, p) = ehrenfest_formula(&packet, &free, Branch::Down, 3.0);
        assert_abs_diff_eq!(x, 5.0 * 3.0 / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn fluctuation_formula_values() {
        let packet = GaussianPacket::new(0.0, 5.0, 1.0).unwrap();
        let params = PhysParams::new(1.0, 1.0, 0.5).unwrap();
        let (vx0, vp0) = fluctuation_formula(&packet, &params, 0.0);
        assert_abs_diff_eq!(vx0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(vp0, 0.5, epsilon = 1e-15);
        let (vx, vp) = fluctuation_formula(&packet, &params, 2.0);
        assert_abs_diff_eq!(vx, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(vp, 0.5, epsilon = 1e-15);
        // uncertainty product: equality at t = 0, above 1/4 afterwards
        assert_abs_diff_eq!(vx0 * vp0, 0.25, epsilon = 1e-15);
        assert!(vx * vp >= 0.25);
    }

    #[test]
    fn relative_fluctuation_examples() {
        let packet = GaussianPacket::new(0.0, 0.0, 1.0).unwrap();
        let params = PhysParams::new(1.0, 0.0, 0.5).unwrap();
        let series =
            ObservableSeries::from_formula(&packet, &equal_spins(), &params, &[10.0, 20.0]);

        let r10 = series.relative_fluctuation(Branch::Up, 0).unwrap();
        assert!((r10 - 0.08).abs() / 0.08 < 0.10, "R(10) = {r10}");
        let r20 = series.relative_fluctuation(Branch::Up, 1).unwrap();
        assert!((r20 - 0.02).abs() / 0.02 < 0.05, "R(20) = {r20}");

        // exact quotient approaches the asymptote from above, monotonically
        let mut last = f64::INFINITY;
        for &t in &[5.0, 10.0, 20.0, 40.0] {
            let series = ObservableSeries::from_formula(&packet, &equal_spins(), &params, &[t]);
            let exact = series.relative_fluctuation(Branch::Down, 0).unwrap();
            let ratio = exact / relative_fluctuation_asymptote(&packet, &params, t);
            assert!(ratio >= 1.0 && ratio < last);
            last = ratio;
        }
        assert!((last - 1.0).abs() < 1e-3);
    }

    #[test]
    fn relative_fluctuation_refuses_zero_mean() {
        assert!(matches!(
            relative_fluctuation_value(0.5, 1e-12),
            Err(SgError::UndefinedAtZeroMean(_))
        ));
    }

    #[test]
    fn formula_series_residual_is_zero() {
        let packet = GaussianPacket::new(0.5, 2.0, 1.1).unwrap();
        let params = PhysParams::new(1.3, 0.4, 0.6).unwrap();
        let times: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
        let series = ObservableSeries::from_formula(&packet, &equal_spins(), &params, &times);
        assert_eq!(ehrenfest_residual(&series, &packet, &params), 0.0);
    }

    #[test]
    fn csv_layout() {
        let packet = GaussianPacket::new(0.0, 1.0, 1.0).unwrap();
        let params = PhysParams::new(1.0, 0.0, 0.5).unwrap();
        let series = ObservableSeries::from_formula(&packet, &equal_spins(), &params, &[0.0, 1.0]);
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "time,branch,mean_x,mean_p,var_x,var_p,norm,rel_fluct,source"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,up,"));
        assert!(lines[2].starts_with("0,down,"));
        assert!(lines[3].starts_with("1,up,"));
        assert!(lines[1].ends_with(",formula"));
        // x0 = 0 at t = 0 makes the relative fluctuation undefined
        assert!(lines[1].contains(",NaN,") || lines[1].contains(",nan,"));
    }
}
