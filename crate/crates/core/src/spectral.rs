//! Split-operator (Strang) propagation of the spinor state on a Fourier grid.
//!
//! The Hamiltonian is diagonal in σ_z, so the two branches evolve
//! independently under `V_± = ±(λ + εx)` and the shared kinetic term
//! `T = p²/2m`. One step applies
//!
//! ```text
//! exp(−iV·dt/2) · exp(−iT·dt) · exp(−iV·dt/2)
//! ```
//!
//! per branch, with the kinetic factor applied in momentum space. Every
//! factor is a pure phase, so each step is exactly unitary on the grid and
//! norm is conserved to round-off. Boundaries are periodic; a hard
//! boundary-mass monitor flags any run whose density reaches the grid edge
//! instead of silently wrapping it around.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::SgError;
use crate::exec;
use crate::fft::FftPair;
use crate::grid::{self, GridSpec};
use crate::model::{Branch, GaussianPacket, PhysParams};

/// Fraction of total density allowed within 5 grid points of either edge.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

/// Number of edge points monitored on each side.
const BOUNDARY_POINTS: usize = 5;

/// Allowed norm drift over a full evolution.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;

/// Spin-1/2 wavefunction sampled on a grid: `up(x)|↑⟩ + down(x)|↓⟩` at one
/// instant. Spin weights are baked into the branch amplitudes, so the total
/// norm of a physical state is 1.
#[derive(Debug, Clone)]
pub struct SpinorGridState {
    grid: GridSpec,
    up: Vec<Complex64>,
    down: Vec<Complex64>,
    t: f64,
}

impl SpinorGridState {
    pub fn new(
        grid: GridSpec,
        up: Vec<Complex64>,
        down: Vec<Complex64>,
        t: f64,
    ) -> Result<Self, SgError> {
        if up.len() != grid.len() || down.len() != grid.len() {
            return Err(SgError::InvalidParameter(format!(
                "amplitude arrays ({}, {}) do not match grid size {}",
                up.len(),
                down.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, up, down, t })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn up(&self) -> &[Complex64] {
        &self.up
    }

    pub fn down(&self) -> &[Complex64] {
        &self.down
    }

    pub fn branch(&self, branch: Branch) -> &[Complex64] {
        match branch {
            Branch::Up => &self.up,
            Branch::Down => &self.down,
        }
    }

    /// Total norm `(∫(|up|² + |down|²)dx)^1/2`.
    pub fn total_norm(&self) -> f64 {
        (grid::norm_sq(self.grid.dx(), &self.up) + grid::norm_sq(self.grid.dx(), &self.down)).sqrt()
    }

    /// Norm of one branch (includes its spin weight).
    pub fn branch_norm(&self, branch: Branch) -> f64 {
        grid::norm_sq(self.grid.dx(), self.branch(branch)).sqrt()
    }

    /// Fraction of total density sitting within [`BOUNDARY_POINTS`] grid
    /// points of either edge.
    pub fn boundary_fraction(&self) -> f64 {
        boundary_fraction(&self.up, &self.down)
    }

    /// Enforce the state invariants: unit total norm within 1e-9 and
    /// boundary mass below [`BOUNDARY_MASS_LIMIT`].
    pub fn check_valid(&self) -> Result<(), SgError> {
        let norm = self.total_norm();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(SgError::InvalidParameter(format!(
                "state norm {norm} deviates from 1 beyond {NORM_DRIFT_LIMIT:e}"
            )));
        }
        let frac = self.boundary_fraction();
        if frac > BOUNDARY_MASS_LIMIT {
            return Err(SgError::BoundaryMass(format!(
                "boundary fraction {frac:e} exceeds {BOUNDARY_MASS_LIMIT:e} at t = {}",
                self.t
            )));
        }
        Ok(())
    }
}

fn boundary_fraction(up: &[Complex64], down: &[Complex64]) -> f64 {
    let n = up.len();
    let total: f64 = up.iter().chain(down).map(|a| a.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = (0..BOUNDARY_POINTS)
        .chain(n - BOUNDARY_POINTS..n)
        .map(|i| up[i].norm_sqr() + down[i].norm_sqr())
        .sum();
    edge / total
}

/// Precomputed phase tables for one (grid, params, dt) combination.
struct StepTables {
    half_up: Vec<Complex64>,
    half_down: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    fft: FftPair,
}

impl StepTables {
    fn new(grid: &GridSpec, params: &PhysParams, dt: f64) -> Self {
        let half_phase = |s: f64| {
            grid.xs()
                .iter()
                .map(|&x| {
                    Complex64::from_polar(
                        1.0,
                        -s * (params.lambda() + params.epsilon() * x) * dt / 2.0,
                    )
                })
                .collect::<Vec<_>>()
        };
        let kinetic = grid
            .ks()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -k * k * dt / (2.0 * params.mass())))
            .collect();
        Self {
            half_up: half_phase(1.0),
            half_down: half_phase(-1.0),
            kinetic,
            fft: FftPair::new(grid.len()),
        }
    }

    /// One Strang step on a single branch, in place.
    fn advance(&self, branch: Branch, psi: &mut [Complex64]) {
        let half = match branch {
            Branch::Up => &self.half_up,
            Branch::Down => &self.half_down,
        };
        for (v, ph) in psi.iter_mut().zip(half) {
            *v *= ph;
        }
        self.fft.forward(psi);
        for (v, ph) in psi.iter_mut().zip(&self.kinetic) {
            *v *= ph;
        }
        self.fft.inverse(psi);
        for (v, ph) in psi.iter_mut().zip(half) {
            *v *= ph;
        }
    }
}

/// Apply only the half potential factor `exp(−i V dt/2)` to both branches.
///
/// Exposed so the splitting factors can be exercised in isolation.
pub fn potential_half_step(
    state: &SpinorGridState,
    params: &PhysParams,
    dt: f64,
) -> SpinorGridState {
    let mut out = state.clone();
    for (i, &x) in state.grid.xs().iter().enumerate() {
        let v = params.lambda() + params.epsilon() * x;
        out.up[i] *= Complex64::from_polar(1.0, -v * dt / 2.0);
        out.down[i] *= Complex64::from_polar(1.0, v * dt / 2.0);
    }
    out
}

/// Apply only the full kinetic factor `exp(−i p²/(2m) dt)` to both branches.
pub fn kinetic_full_step(state: &SpinorGridState, params: &PhysParams, dt: f64) -> SpinorGridState {
    let fft = FftPair::new(state.grid.len());
    let mut out = state.clone();
    for psi in [&mut out.up, &mut out.down] {
        fft.forward(psi);
        for (v, &k) in psi.iter_mut().zip(state.grid.ks()) {
            *v *= Complex64::from_polar(1.0, -k * k * dt / (2.0 * params.mass()));
        }
        fft.inverse(psi);
    }
    out
}

/// One Strang step `exp(−iV dt/2)·exp(−iT dt)·exp(−iV dt/2)`, second order
/// in dt, exactly norm preserving.
///
/// Fails if probability mass reaches the grid edge after the step.
pub fn step(
    state: &SpinorGridState,
    params: &PhysParams,
    dt: f64,
) -> Result<SpinorGridState, SgError> {
    if dt <= 0.0 || dt.is_nan() {
        return Err(SgError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let tables = StepTables::new(&state.grid, params, dt);
    let mut out = state.clone();
    exec::join(
        || tables.advance(Branch::Up, &mut out.up),
        || tables.advance(Branch::Down, &mut out.down),
    );
    out.t += dt;
    let frac = out.boundary_fraction();
    if frac > BOUNDARY_MASS_LIMIT {
        return Err(SgError::BoundaryMass(format!(
            "boundary fraction {frac:e} after step to t = {}",
            out.t
        )));
    }
    Ok(out)
}

/// Propagate to `t_final`, returning decimated snapshots: the initial
/// state, every `snapshot_stride`-th step, and always the final state.
///
/// `dt` must divide the interval to within one part in 1e9.
pub fn evolve(
    state: &SpinorGridState,
    params: &PhysParams,
    t_final: f64,
    dt: f64,
    snapshot_stride: usize,
) -> Result<Vec<SpinorGridState>, SgError> {
    let span = t_final - state.t;
    if span < 0.0 {
        return Err(SgError::InvalidParameter(format!(
            "t_final = {t_final} is before the state time {}",
            state.t
        )));
    }
    if span == 0.0 {
        return Ok(vec![state.clone()]);
    }
    if dt <= 0.0 || dt.is_nan() {
        return Err(SgError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let steps = (span / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - span).abs() > 1e-9 * span {
        return Err(SgError::NonDivisibleStep(format!(
            "dt = {dt} does not divide the interval {span} (steps ≈ {})",
            span / dt
        )));
    }
    let stride = snapshot_stride.max(1);

    let norm_in = state.total_norm();
    let tables = StepTables::new(&state.grid, params, dt);
    let mut up = state.up.clone();
    let mut down = state.down.clone();
    let mut snapshots = vec![state.clone()];

    for i in 1..=steps {
        exec::join(
            || tables.advance(Branch::Up, &mut up),
            || tables.advance(Branch::Down, &mut down),
        );
        let frac = boundary_fraction(&up, &down);
        let t = if i == steps {
            t_final
        } else {
            state.t + i as f64 * dt
        };
        if frac > BOUNDARY_MASS_LIMIT {
            return Err(SgError::BoundaryMass(format!(
                "boundary fraction {frac:e} at t = {t}; enlarge the grid"
            )));
        }
        if i % stride == 0 || i == steps {
            snapshots.push(SpinorGridState {
                grid: state.grid.clone(),
                up: up.clone(),
                down: down.clone(),
                t,
            });
        }
    }

    let drift = (snapshots.last().unwrap().total_norm() - norm_in).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(SgError::InvalidParameter(format!(
            "norm drifted by {drift:e} over the run; the evolution is numerically unsound"
        )));
    }
    Ok(snapshots)
}

/// Choose a grid that holds both classical branch trajectories over
/// `[0, t_final]` with 10 evolved widths of margin, and whose momentum
/// grid covers the packet's drifted and broadened momentum support.
pub fn auto_grid(
    packet: &GaussianPacket,
    params: &PhysParams,
    t_final: f64,
) -> Result<GridSpec, SgError> {
    if t_final < 0.0 || t_final.is_nan() {
        return Err(SgError::InvalidParameter(format!(
            "t_final must be non-negative, got {t_final}"
        )));
    }
    let m = params.mass();
    let eps = params.epsilon();
    let (x0, p0, sigma) = (packet.x0(), packet.p0(), packet.sigma());

    let mut lo = x0;
    let mut hi = x0;
    for s in [1.0, -1.0] {
        let pos = |t: f64| x0 + p0 * t / m - s * eps * t * t / (2.0 * m);
        let mut track = |x: f64| {
            lo = lo.min(x);
            hi = hi.max(x);
        };
        track(pos(t_final));
        if eps != 0.0 {
            let turning = p0 / (s * eps);
            if turning > 0.0 && turning < t_final {
                track(pos(turning));
            }
        }
    }

    let width = (sigma * sigma / 2.0 + t_final * t_final / (2.0 * m * m * sigma * sigma)).sqrt();
    // one extra sigma so the t = 0 coverage requirement (8 sigma) is met
    let margin = 10.0 * width + sigma;
    let (x_lo, x_hi) = (lo - margin, hi + margin);

    let k_need = p0.abs() + eps.abs() * t_final + 10.0 * packet.momentum_spread();
    let dx_max = (sigma / 8.0).min(std::f64::consts::PI / k_need);
    let n = (((x_hi - x_lo) / dx_max).ceil() as usize)
        .next_power_of_two()
        .max(GridSpec::MIN_POINTS);
    GridSpec::new(x_lo, x_hi, n)
}

/// Write one snapshot in the textual dump format: commented header, then
/// one `x re_up im_up re_down im_down` row per grid node.
pub fn write_snapshot<W: Write>(
    out: &mut W,
    state: &SpinorGridState,
    params: &PhysParams,
) -> io::Result<()> {
    use crate::fmt::float;
    let g = state.grid();
    writeln!(out, "# sgsim spectral snapshot")?;
    writeln!(out, "# t = {}", float(state.time()))?;
    writeln!(
        out,
        "# grid: x_min = {} x_max = {} n = {} dx = {}",
        float(g.x_min()),
        float(g.x_max()),
        g.len(),
        float(g.dx())
    )?;
    writeln!(
        out,
        "# params: mass = {} lambda = {} epsilon = {}",
        float(params.mass()),
        float(params.lambda()),
        float(params.epsilon())
    )?;
    writeln!(out, "# columns: x re_up im_up re_down im_down")?;
    for (i, &x) in g.xs().iter().enumerate() {
        writeln!(
            out,
            "{} {} {} {} {}",
            float(x),
            float(state.up[i].re),
            float(state.up[i].im),
            float(state.down[i].re),
            float(state.down[i].im)
        )?;
    }
    Ok(())
}
