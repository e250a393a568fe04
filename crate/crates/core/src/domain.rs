//! Value types shared across the crate: symmetry transforms, lattice
//! geometry, sampling grids and the stationary / Floquet state containers.
//!
//! Units are natural throughout (`ħ = m = 1`), so the stationary equation
//! reads `Ψ'' + 2 [E - V(x)] Ψ = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::PlaneWaveBasis;
use crate::{Error, Result};

/// Default Gaussian barrier width `Δ`.
pub const DEFAULT_WIDTH: f64 = 0.5;

/// Relative tail level beyond which a Gaussian barrier is treated as zero.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-12;

/// Largest grid spacing used when none is requested explicitly.
pub const DEFAULT_MAX_SPACING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Translation,
    Inversion,
}

/// A point map `x -> x̄`: translation by `L` (`σ = +1`) or inversion through
/// `α` (`σ = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTransform {
    pub kind: TransformKind,
    /// Translation length `L` or inversion centre `α`.
    pub parameter: f64,
}

impl SymmetryTransform {
    pub fn translation(length: f64) -> Self {
        Self { kind: TransformKind::Translation, parameter: length }
    }

    pub fn inversion(center: f64) -> Self {
        Self { kind: TransformKind::Inversion, parameter: center }
    }

    pub fn sigma(&self) -> i8 {
        match self.kind {
            TransformKind::Translation => 1,
            TransformKind::Inversion => -1,
        }
    }

    pub fn map_point(&self, x: f64) -> f64 {
        match self.kind {
            TransformKind::Translation => x + self.parameter,
            TransformKind::Inversion => 2.0 * self.parameter - x,
        }
    }
}

/// Lateral shaking `d(t) = A cos(ωt)` of every barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Driving {
    pub amplitude: f64,
    pub omega: f64,
}

impl Driving {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn displacement(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t).cos()
    }
}

/// Supercell of Gaussian barriers `Λ_n exp[-(x - X_n - d(t))² / Δ²]` with
/// periodic boundaries at `x = ±R/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    supercell: f64,
    centers: Vec<f64>,
    strengths: Vec<f64>,
    width: f64,
    support: f64,
    tail_threshold: f64,
    driving: Option<Driving>,
}

/// Width `w` outside of which `Λ exp(-x²/Δ²)` drops below `tail · Λ_ref`,
/// where `Λ_ref` is one unit of strength. Zero if the barrier never exceeds
/// the tail level.
pub fn support_width(width: f64, max_strength: f64, tail_threshold: f64) -> f64 {
    if max_strength <= tail_threshold {
        return 0.0;
    }
    2.0 * width * (max_strength / tail_threshold).ln().sqrt()
}

impl LatticeSpec {
    pub fn new(
        supercell: f64,
        centers: Vec<f64>,
        strengths: Vec<f64>,
        width: f64,
    ) -> Result<Self> {
        let mut spec = Self {
            supercell,
            centers,
            strengths,
            width,
            support: 0.0,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            driving: None,
        };
        spec.validate()?;
        spec.support = spec.derived_support();
        Ok(spec)
    }

    /// `count` equal barriers spaced by `spacing`, centred on the origin, in a
    /// supercell of size `count * spacing`.
    pub fn chain(count: usize, spacing: f64, strength: f64, width: f64) -> Result<Self> {
        let offset = (count as f64 - 1.0) / 2.0;
        let centers = (0..count).map(|n| (n as f64 - offset) * spacing).collect();
        Self::new(count as f64 * spacing, centers, vec![strength; count], width)
    }

    /// A barrier-free supercell.
    pub fn empty(supercell: f64) -> Result<Self> {
        Self::new(supercell, Vec::new(), Vec::new(), DEFAULT_WIDTH)
    }

    /// Replace the strength of the barrier centred at `center`.
    pub fn with_strength_at(mut self, center: f64, strength: f64) -> Result<Self> {
        let index = self
            .centers
            .iter()
            .position(|&x| (x - center).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidLattice(format!("no barrier centred at {center}")))?;
        self.strengths[index] = strength;
        self.validate()?;
        self.support = self.derived_support();
        Ok(self)
    }

    pub fn with_driving(mut self, amplitude: f64, omega: f64) -> Result<Self> {
        self.driving = Some(Driving { amplitude, omega });
        self.validate()?;
        Ok(self)
    }

    pub fn with_tail_threshold(mut self, tail_threshold: f64) -> Result<Self> {
        if !(tail_threshold > 0.0 && tail_threshold < 1.0) {
            return Err(Error::InvalidLattice(format!(
                "tail threshold must lie in (0, 1), got {tail_threshold}"
            )));
        }
        self.tail_threshold = tail_threshold;
        self.support = self.derived_support();
        Ok(self)
    }

    fn derived_support(&self) -> f64 {
        let max_strength = self.strengths.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        support_width(self.width, max_strength, self.tail_threshold)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidLattice(msg));
        if !(self.supercell.is_finite() && self.supercell > 0.0) {
            return fail(format!("supercell size must be positive, got {}", self.supercell));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return fail(format!("barrier width must be positive, got {}", self.width));
        }
        if self.centers.len() != self.strengths.len() {
            return fail(format!(
                "{} centres but {} strengths",
                self.centers.len(),
                self.strengths.len()
            ));
        }
        if self.centers.iter().chain(&self.strengths).any(|v| !v.is_finite()) {
            return fail("centres and strengths must be finite".into());
        }
        if self.centers.windows(2).any(|w| w[1] <= w[0]) {
            return fail("barrier centres must be strictly increasing".into());
        }
        let excursion = match self.driving {
            Some(d) => {
                if !(d.omega.is_finite() && d.omega > 0.0) {
                    return fail(format!("driving frequency must be positive, got {}", d.omega));
                }
                if !(d.amplitude.is_finite() && d.amplitude >= 0.0) {
                    return fail(format!(
                        "driving amplitude must be non-negative, got {}",
                        d.amplitude
                    ));
                }
                d.amplitude
            }
            None => 0.0,
        };
        let half = self.supercell / 2.0;
        if let Some(x) = self.centers.iter().find(|x| x.abs() + excursion >= half) {
            return fail(format!(
                "barrier at {x} (excursion {excursion}) leaves the supercell (-{half}, {half})"
            ));
        }
        Ok(())
    }

    pub fn supercell(&self) -> f64 {
        self.supercell
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Gaussian width `Δ`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Compact-support width `w` of a single barrier.
    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn tail_threshold(&self) -> f64 {
        self.tail_threshold
    }

    pub fn driving(&self) -> Option<Driving> {
        self.driving
    }

    pub fn is_driven(&self) -> bool {
        self.driving.is_some()
    }

    /// Driving amplitude, zero for a static lattice.
    pub fn amplitude(&self) -> f64 {
        self.driving.map_or(0.0, |d| d.amplitude)
    }

    /// Barrier displacement `d(t)`.
    pub fn displacement(&self, t: f64) -> f64 {
        self.driving.map_or(0.0, |d| d.displacement(t))
    }

    /// Smallest distance between neighbouring centres, periodic images
    /// included.
    pub fn min_spacing(&self) -> Option<f64> {
        let first = *self.centers.first()?;
        let last = *self.centers.last()?;
        let wrap = self.supercell - (last - first);
        Some(self.centers.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min))
    }

    /// Potential of the barrier array at `(x, t)`, truncated to zero outside
    /// `|x - X_n - d(t)| > w/2`. Periodic images are not included.
    pub fn potential_value(&self, x: f64, t: f64) -> f64 {
        let d = self.displacement(t);
        let half_support = self.support / 2.0;
        self.centers
            .iter()
            .zip(&self.strengths)
            .map(|(&center, &strength)| {
                let r = x - center - d;
                if r.abs() > half_support {
                    0.0
                } else {
                    strength * (-(r / self.width).powi(2)).exp()
                }
            })
            .sum()
    }
}

/// Uniform sampling grid including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidGrid(format!("empty interval [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Fewest points giving a spacing no larger than `max_spacing`.
    pub fn with_max_spacing(x_min: f64, x_max: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {max_spacing}")));
        }
        let intervals = ((x_max - x_min) / max_spacing - 1e-9).ceil().max(1.0) as usize;
        Self::new(x_min, x_max, intervals + 1)
    }

    /// Grid over `[-R/2, R/2]`; the last point is the periodic image of the
    /// first.
    pub fn supercell(supercell: f64, max_spacing: f64) -> Result<Self> {
        Self::with_max_spacing(-supercell / 2.0, supercell / 2.0, max_spacing)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn span(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Whether the grid covers exactly one period of length `period`.
    pub fn spans_period(&self, period: f64) -> bool {
        (self.span() - period).abs() <= 1e-9 * period.max(1.0)
    }
}

/// A stationary state on the plane-wave basis, sampled on a grid.
///
/// Coefficients multiply the unnormalised functions `exp(i2πμx/R)`, so
/// `∫|Ψ|² dx = R Σ|c_μ|²`; states produced by the eigensolver carry unit
/// norm over the supercell. `dpsi` holds the analytic basis derivative.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub energy: f64,
    pub basis: PlaneWaveBasis,
    pub coefficients: Vec<Complex64>,
    pub grid: Grid,
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
}

impl WaveState {
    /// Synthesise grid samples for the given coefficients.
    pub fn from_coefficients(
        energy: f64,
        basis: PlaneWaveBasis,
        coefficients: Vec<Complex64>,
        grid: Grid,
    ) -> Self {
        let (psi, dpsi) = basis.synthesize(&coefficients, &grid);
        Self { energy, basis, coefficients, grid, psi, dpsi }
    }

    /// `(Ψ(x), Ψ'(x))` evaluated from the expansion; exact at any `x`,
    /// periodic in `R`.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        self.basis.evaluate(&self.coefficients, x)
    }

    /// `∫|Ψ|²` over the supercell.
    pub fn norm_squared(&self) -> f64 {
        self.basis.supercell() * self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }

    /// Multiply by a global phase.
    pub fn with_phase(mut self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        for v in self.coefficients.iter_mut().chain(&mut self.psi).chain(&mut self.dpsi) {
            *v *= factor;
        }
        self
    }
}

/// One time sample of a Floquet solution `Ψ(x, t_j)`.
#[derive(Debug, Clone)]
pub struct TimeSample {
    pub t: f64,
    /// Snapshot whose `energy` is the instantaneous expectation `⟨H(t_j)⟩`.
    pub state: WaveState,
}

/// A Floquet solution `Ψ(x,t) = e^{-iεt} Φ(x,t)` sampled uniformly over one
/// period `[t0, t0 + T)`.
#[derive(Debug, Clone)]
pub struct FloquetMode {
    pub quasienergy: f64,
    pub mean_energy: f64,
    pub omega: f64,
    pub samples: Vec<TimeSample>,
}

impl FloquetMode {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Periodic part `Φ(x, t_j) = e^{iεt_j} Ψ(x, t_j)` on the grid.
    pub fn periodic_part(&self, j: usize) -> Vec<Complex64> {
        let sample = &self.samples[j];
        let phase = Complex64::from_polar(1.0, self.quasienergy * sample.t);
        sample.state.psi.iter().map(|p| p * phase).collect()
    }
}
