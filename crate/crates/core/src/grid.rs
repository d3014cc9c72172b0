//! Uniform periodic position grid and its Fourier-dual momentum grid.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::SgError;

/// One-dimensional uniform grid on `[x_min, x_max)` with a power-of-two
/// number of nodes.
///
/// The grid is periodic: node `i` sits at `x_min + i·dx` with
/// `dx = (x_max − x_min)/n`, and the momentum grid is the standard DFT
/// frequency layout `k_j = 2π·j̃/(n·dx)` with `j̃ = j` for `j < n/2` and
/// `j̃ = j − n` otherwise (ħ = 1, so momentum and wavenumber coincide).
#[derive(Debug, Clone)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    xs: Vec<f64>,
    ks: Vec<f64>,
}

impl GridSpec {
    /// Minimum allowed node count.
    pub const MIN_POINTS: usize = 64;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, SgError> {
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(SgError::InvalidParameter(format!(
                "grid range [{x_min}, {x_max}] must be finite with x_max > x_min"
            )));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(SgError::InvalidParameter(format!(
                "grid size {n} must be a power of two and at least {}",
                Self::MIN_POINTS
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        let xs = (0..n).map(|i| x_min + i as f64 * dx).collect();
        let dk = 2.0 * PI / (x_max - x_min);
        let ks = (0..n)
            .map(|j| {
                let shifted = if j < n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
                shifted as f64 * dk
            })
            .collect();
        Ok(Self {
            x_min,
            x_max,
            n,
            dx,
            xs,
            ks,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Position nodes, ascending.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Momentum nodes in DFT layout (matching forward-FFT bin order).
    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    /// Largest momentum magnitude representable on this grid, `π/dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Same grid in the sense that per-node values are interchangeable.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

/// Quadrature of `Σ f_i · dx` on a uniform grid.
///
/// For integrands that decay to zero at both ends (or are periodic) this
/// equals the trapezoidal rule, which is spectrally accurate on smooth data.
pub fn quad_real(dx: f64, values: impl Iterator<Item = f64>) -> f64 {
    values.sum::<f64>() * dx
}

/// Squared L2 norm `∫|ψ|²dx` of sampled amplitudes.
pub fn norm_sq(dx: f64, psi: &[Complex64]) -> f64 {
    quad_real(dx, psi.iter().map(|a| a.norm_sqr()))
}

/// Inner product `∫ conj(a)·b dx` of two sampled amplitudes.
pub fn inner(dx: f64, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * dx
}
