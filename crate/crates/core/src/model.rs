//! Physical parameters, initial-state constructors and the Bohm number.
//!
//! Everything works in natural units with ħ = 1; the constant is exposed as
//! [`PhysParams::HBAR`] and is not configurable.

use num_complex::Complex64;

use crate::error::SgError;
use crate::grid::GridSpec;
use crate::spectral::SpinorGridState;

/// Spin-z eigenbranch of the spatial wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Up,
    Down,
}

impl Branch {
    /// Sign of the σ_z eigenvalue: the branch potential is `sign·(λ + εx)`.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Up => 1.0,
            Branch::Down => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Up => "up",
            Branch::Down => "down",
        }
    }
}

/// Mass and field couplings of `H = p²/2m + λσ_z + εxσ_z`.
#[derive(Debug, Clone, Copy)]
pub struct PhysParams {
    mass: f64,
    lambda: f64,
    epsilon: f64,
}

impl PhysParams {
    /// Reduced Planck constant in natural units. Fixed, by convention.
    pub const HBAR: f64 = 1.0;

    pub fn new(mass: f64, lambda: f64, epsilon: f64) -> Result<Self, SgError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(SgError::InvalidParameter(format!(
                "mass must be finite and positive, got {mass}"
            )));
        }
        if !lambda.is_finite() || !epsilon.is_finite() {
            return Err(SgError::InvalidParameter(format!(
                "field couplings must be finite, got lambda={lambda}, epsilon={epsilon}"
            )));
        }
        Ok(Self {
            mass,
            lambda,
            epsilon,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Uniform σ_z coupling (energy).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Field-gradient coupling (energy per length).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Initial Gaussian wavepacket `ψ(x,0) = (σ√π)^(-1/2) exp[ip₀x − (x−x₀)²/(2σ²)]`.
///
/// With this convention the position density at t = 0 has variance σ²/2 and
/// the momentum density has variance 1/(2σ²).
#[derive(Debug, Clone, Copy)]
pub struct GaussianPacket {
    x0: f64,
    p0: f64,
    sigma: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, p0: f64, sigma: f64) -> Result<Self, SgError> {
        if !x0.is_finite() || !p0.is_finite() {
            return Err(SgError::InvalidParameter(format!(
                "packet center must be finite, got x0={x0}, p0={p0}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(SgError::InvalidParameter(format!(
                "packet width sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { x0, p0, sigma })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Initial momentum standard deviation, `1/(√2·σ)`.
    pub fn momentum_spread(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * self.sigma)
    }

    /// Amplitude of the t = 0 wavefunction at `x`.
    pub fn amplitude_at(&self, x: f64) -> Complex64 {
        let norm = std::f64::consts::PI.powf(-0.25) / self.sigma.sqrt();
        let d = x - self.x0;
        norm * (Complex64::new(-d * d / (2.0 * self.sigma * self.sigma), self.p0 * x)).exp()
    }
}

/// Complex amplitudes of the initial spin superposition `a|↑⟩ + b|↓⟩`.
#[derive(Debug, Clone, Copy)]
pub struct SpinWeights {
    a: Complex64,
    b: Complex64,
}

impl SpinWeights {
    /// Tolerance on `|a|² + |b|² = 1`.
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(a: Complex64, b: Complex64) -> Result<Self, SgError> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(SgError::InvalidParameter(format!(
                "spin weights must satisfy |a|²+|b|²=1 within {:e}, got {norm}",
                Self::NORM_TOL
            )));
        }
        Ok(Self { a, b })
    }

    /// Build from unnormalized amplitudes, rescaling to unit norm.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self, SgError> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(SgError::InvalidParameter(
                "spin weights must not both vanish".into(),
            ));
        }
        Ok(Self {
            a: a / norm,
            b: b / norm,
        })
    }

    pub fn up(&self) -> Complex64 {
        self.a
    }

    pub fn down(&self) -> Complex64 {
        self.b
    }

    pub fn weight(&self, branch: Branch) -> Complex64 {
        match branch {
            Branch::Up => self.a,
            Branch::Down => self.b,
        }
    }
}

/// Magnet geometry: length `l`, beam velocity `v`, and the momentum spread
/// Δp entering the Bohm criterion.
///
/// The transit time is `Δt = l/v`. Δp defaults to the initial momentum
/// standard deviation `1/(√2σ)` of the packet (see
/// [`ApparatusGeometry::for_packet`]); callers may override it.
#[derive(Debug, Clone, Copy)]
pub struct ApparatusGeometry {
    magnet_length: f64,
    velocity: f64,
    momentum_spread: f64,
}

impl ApparatusGeometry {
    pub fn new(magnet_length: f64, velocity: f64, momentum_spread: f64) -> Result<Self, SgError> {
        if !(magnet_length.is_finite() && magnet_length > 0.0) {
            return Err(SgError::InvalidParameter(format!(
                "magnet length must be finite and positive, got {magnet_length}"
            )));
        }
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(SgError::InvalidParameter(format!(
                "velocity must be finite and positive, got {velocity}"
            )));
        }
        if !(momentum_spread.is_finite() && momentum_spread > 0.0) {
            return Err(SgError::InvalidParameter(format!(
                "momentum spread must be finite and positive, got {momentum_spread}"
            )));
        }
        Ok(Self {
            magnet_length,
            velocity,
            momentum_spread,
        })
    }

    /// Geometry with Δp taken from the packet's initial momentum spread.
    pub fn for_packet(
        magnet_length: f64,
        velocity: f64,
        packet: &GaussianPacket,
    ) -> Result<Self, SgError> {
        Self::new(magnet_length, velocity, packet.momentum_spread())
    }

    pub fn magnet_length(&self) -> f64 {
        self.magnet_length
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn momentum_spread(&self) -> f64 {
        self.momentum_spread
    }

    /// Transit time through the magnet, `Δt = l/v`.
    pub fn transit_time(&self) -> f64 {
        self.magnet_length / self.velocity
    }
}

/// Bohm number `B = ε·Δt/Δp`, the dimensionless criterion for the device
/// to act as a measurement apparatus (`B ≫ 1`).
///
/// Linear in ε and in Δt; negative ε yields a negative B (regime reports
/// use the magnitude).
pub fn bohm_number(params: &PhysParams, geom: &ApparatusGeometry) -> f64 {
    params.epsilon() * (geom.transit_time() / geom.momentum_spread())
}

/// Build the t = 0 spinor grid state `a·ψ(x,0)|↑⟩ + b·ψ(x,0)|↓⟩`.
///
/// The grid must cover `[x₀ − 8σ, x₀ + 8σ]` (which bounds the truncated
/// probability mass far below 1e-12), resolve σ with at least 8 points,
/// and give the momentum grid room for the packet's momentum support.
pub fn make_initial_state(
    packet: &GaussianPacket,
    spins: &SpinWeights,
    grid: &GridSpec,
) -> Result<SpinorGridState, SgError> {
    let sigma = packet.sigma();
    if grid.dx() > sigma / 8.0 {
        return Err(SgError::GridTooCoarse(format!(
            "dx = {} does not resolve sigma = {sigma} with at least 8 points",
            grid.dx()
        )));
    }
    let k_need = packet.p0().abs() + 8.0 / sigma;
    if grid.k_max() < k_need {
        return Err(SgError::GridTooCoarse(format!(
            "momentum grid reaches only {:.3} but the packet needs {:.3}",
            grid.k_max(),
            k_need
        )));
    }
    if grid.x_min() > packet.x0() - 8.0 * sigma || grid.x_max() < packet.x0() + 8.0 * sigma {
        return Err(SgError::GridTooNarrow(format!(
            "grid [{}, {}] does not cover [x0 - 8sigma, x0 + 8sigma] = [{}, {}]",
            grid.x_min(),
            grid.x_max(),
            packet.x0() - 8.0 * sigma,
            packet.x0() + 8.0 * sigma
        )));
    }

    let base: Vec<Complex64> = grid.xs().iter().map(|&x| packet.amplitude_at(x)).collect();
    let up = base.iter().map(|&v| spins.up() * v).collect();
    let down = base.iter().map(|&v| spins.down() * v).collect();
    SpinorGridState::new(grid.clone(), up, down, 0.0)
}
