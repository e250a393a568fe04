//! Two-point currents and derived quantities.
//!
//! `Q(x) = [σ Ψ*(x) Ψ'(x̄) - Ψ(x̄) Ψ*'(x)] / 2i`. Values at `x̄` are always
//! evaluated from the plane-wave expansion, never interpolated, so that any
//! deviation from constancy reflects the state and not the sampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{FloquetMode, Grid, SymmetryTransform, TransformKind, WaveState};
use crate::hamiltonian::PlaneWaveBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentKind {
    Static,
    Complementary,
    Averaged,
}

/// Samples of a two-point current on a grid.
#[derive(Debug, Clone)]
pub struct CurrentProfile {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub transform: SymmetryTransform,
    pub kind: CurrentKind,
    /// Supercell length when the grid covers exactly one period, in which
    /// case the first and last samples coincide and derivatives wrap.
    pub period: Option<f64>,
}

impl CurrentProfile {
    pub fn from_values(
        grid: Grid,
        values: Vec<Complex64>,
        transform: SymmetryTransform,
        kind: CurrentKind,
        period: Option<f64>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let period = period.filter(|&r| grid.spans_period(r));
        Ok(Self { grid, values, transform, kind, period })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    pub fn magnitude_squared(&self) -> Vec<f64> {
        self.values.iter().map(|q| q.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, q| m.max(q.norm()))
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// `Q'` by centred differences; periodic wrap on a full-period grid,
    /// second-order one-sided stencils at the ends otherwise.
    pub fn derivative(&self) -> Vec<Complex64> {
        centred_derivative(&self.values, self.grid.spacing(), self.is_periodic())
    }

    /// The part of the profile with `a <= x <= b`, as a non-periodic profile.
    pub fn restrict(&self, a: f64, b: f64) -> Result<CurrentProfile> {
        let slack = 1e-9 * self.grid.spacing();
        let indices: Vec<usize> =
            (0..self.len()).filter(|&i| self.x(i) >= a - slack && self.x(i) <= b + slack).collect();
        if indices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}] holds {} grid points, need at least 3",
                indices.len()
            )));
        }
        let first = indices[0];
        let last = *indices.last().unwrap();
        let grid = Grid::new(self.x(first), self.x(last), indices.len())?;
        Ok(CurrentProfile {
            grid,
            values: self.values[first..=last].to_vec(),
            transform: self.transform,
            kind: self.kind,
            period: None,
        })
    }
}

pub(crate) fn centred_derivative(values: &[Complex64], dx: f64, periodic: bool) -> Vec<Complex64> {
    let n = values.len();
    let h2 = 2.0 * dx;
    (0..n)
        .map(|i| {
            if i > 0 && i + 1 < n {
                (values[i + 1] - values[i - 1]) / h2
            } else if periodic && n > 2 {
                // endpoints are the same physical point
                (values[1] - values[n - 2]) / h2
            } else if n < 3 {
                (values[n - 1] - values[0]) / dx
            } else if i == 0 {
                (4.0 * (values[1] - values[0]) - (values[2] - values[0])) / h2
            } else {
                (4.0 * (values[n - 1] - values[n - 2]) - (values[n - 1] - values[n - 3])) / h2
            }
        })
        .collect()
}

fn two_point(
    sigma: f64,
    complementary: bool,
    psi: Complex64,
    dpsi: Complex64,
    psi_bar: Complex64,
    dpsi_bar: Complex64,
) -> Complex64 {
    let (a, da) = if complementary { (psi, dpsi) } else { (psi.conj(), dpsi.conj()) };
    (sigma * a * dpsi_bar - psi_bar * da) * Complex64::new(0.0, -0.5)
}

fn supercell_period(grid: &Grid, basis: &PlaneWaveBasis) -> Option<f64> {
    grid.spans_period(basis.supercell()).then_some(basis.supercell())
}

/// `Ψ` and `Ψ'` at the mapped points `x̄_i = map(x_i)`.
fn mapped_samples(
    basis: &PlaneWaveBasis,
    grid: &Grid,
    transform: &SymmetryTransform,
) -> crate::hamiltonian::BasisSampler {
    let mapped: Vec<f64> = grid.points().map(|x| transform.map_point(x)).collect();
    basis.sampler(&mapped)
}

fn profile_from(
    state: &WaveState,
    transform: SymmetryTransform,
    complementary: bool,
) -> CurrentProfile {
    let (psi_bar, dpsi_bar) = mapped_samples(&state.basis, &state.grid, &transform).apply(&state.coefficients);
    let sigma = f64::from(transform.sigma());
    let values = (0..state.grid.len())
        .map(|i| two_point(sigma, complementary, state.psi[i], state.dpsi[i], psi_bar[i], dpsi_bar[i]))
        .collect();
    CurrentProfile {
        grid: state.grid,
        values,
        transform,
        kind: if complementary { CurrentKind::Complementary } else { CurrentKind::Static },
        period: supercell_period(&state.grid, &state.basis),
    }
}

/// `Q(x, x̄)` of a state.
pub fn two_point_current(state: &WaveState, transform: SymmetryTransform) -> CurrentProfile {
    profile_from(state, transform, false)
}

/// `Qᶜ(x, x̄)`: `Ψ*` replaced by `Ψ`.
pub fn complementary_current(state: &WaveState, transform: SymmetryTransform) -> CurrentProfile {
    profile_from(state, transform, true)
}

/// `J(x) = Q(x, x)`.
pub fn probability_current(state: &WaveState) -> CurrentProfile {
    two_point_current(state, SymmetryTransform::translation(0.0))
}

/// `Q(x, x̄; t_j)` for every stored time sample of a Floquet mode.
pub fn instantaneous_currents(mode: &FloquetMode, transform: SymmetryTransform) -> Vec<CurrentProfile> {
    let Some(first) = mode.samples.first() else {
        return Vec::new();
    };
    let sampler = mapped_samples(&first.state.basis, &first.state.grid, &transform);
    let sigma = f64::from(transform.sigma());
    mode.samples
        .iter()
        .map(|sample| {
            let state = &sample.state;
            let (psi_bar, dpsi_bar) = sampler.apply(&state.coefficients);
            let values = (0..state.grid.len())
                .map(|i| two_point(sigma, false, state.psi[i], state.dpsi[i], psi_bar[i], dpsi_bar[i]))
                .collect();
            CurrentProfile {
                grid: state.grid,
                values,
                transform,
                kind: CurrentKind::Static,
                period: supercell_period(&state.grid, &state.basis),
            }
        })
        .collect()
}

/// `Q̄(x, x̄) = (1/T) ∫ Q(x, x̄; t) dt` by the periodic trapezoid rule over
/// the mode's uniform time samples.
pub fn averaged_current(mode: &FloquetMode, transform: SymmetryTransform) -> Result<CurrentProfile> {
    if mode.samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "period average needs at least 2 time samples, got {}",
            mode.samples.len()
        )));
    }
    let profiles = instantaneous_currents(mode, transform);
    let n = profiles.len() as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); profiles[0].len()];
    for profile in &profiles {
        for (acc, q) in values.iter_mut().zip(&profile.values) {
            *acc += q;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    let first = &profiles[0];
    Ok(CurrentProfile {
        grid: first.grid,
        values,
        transform,
        kind: CurrentKind::Averaged,
        period: first.period,
    })
}

/// `J̄(x) = Q̄(x, x)`.
pub fn averaged_probability_current(mode: &FloquetMode) -> Result<CurrentProfile> {
    averaged_current(mode, SymmetryTransform::translation(0.0))
}

/// `Q` as seen by a wavefunction known only through its grid samples:
/// `Ψ'` from periodic centred differences and `Ψ(x̄)` by index shift. The
/// grid must cover the supercell and `x̄ - x` must be a whole number of
/// spacings. The result carries the `O(dx²)` discretisation error that sets
/// the resolution floor of [`convergence_measure`].
pub fn grid_two_point_current(state: &WaveState, transform: SymmetryTransform) -> Result<CurrentProfile> {
    let grid = state.grid;
    let r = state.basis.supercell();
    if !grid.spans_period(r) {
        return Err(Error::InvalidGrid("grid must span exactly one supercell".into()));
    }
    let dx = grid.spacing();
    let cells = grid.len() - 1;
    let wrap = |i: i64| i.rem_euclid(cells as i64) as usize;
    // map(x_i) = x_{s + σ i}
    let offset = transform.map_point(grid.x_min()) - grid.x_min();
    let steps = offset / dx;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "transform offset {offset} is not a multiple of the spacing {dx}"
        )));
    }
    let s = steps.round() as i64;
    let sigma = i64::from(transform.sigma());
    let psi = &state.psi[..cells];
    let dpsi: Vec<Complex64> =
        (0..cells as i64).map(|i| (psi[wrap(i + 1)] - psi[wrap(i - 1)]) / (2.0 * dx)).collect();
    let mut values: Vec<Complex64> = (0..cells as i64)
        .map(|i| {
            let j = wrap(s + sigma * i);
            two_point(sigma as f64, false, psi[i as usize], dpsi[i as usize], psi[j], dpsi[j])
        })
        .collect();
    values.push(values[0]);
    CurrentProfile::from_values(grid, values, transform, CurrentKind::Static, Some(r))
}

/// `ε = D² ∫_D |Q'|² / ∫_D |Q|²` over `domain = (a, b)`, `D = b - a`.
/// `Q'` by centred differences (one-sided at the domain ends), integrals by
/// the trapezoid rule on the grid points inside the domain.
pub fn convergence_measure(profile: &CurrentProfile, domain: (f64, f64)) -> Result<f64> {
    let (a, b) = domain;
    if !(b > a) {
        return Err(Error::InvalidArgument(format!("empty domain ({a}, {b})")));
    }
    let part = profile.restrict(a, b)?;
    let derivative = part.derivative();
    let dx = part.grid.spacing();
    let trapezoid = |f: &dyn Fn(usize) -> f64| {
        let n = part.len();
        let inner: f64 = (1..n - 1).map(f).sum();
        dx * (inner + 0.5 * (f(0) + f(n - 1)))
    };
    let slope = trapezoid(&|i| derivative[i].norm_sqr());
    let weight = trapezoid(&|i| part.values[i].norm_sqr());
    if !(weight > 0.0) || !weight.is_finite() {
        return Err(Error::DegenerateProfile("∫|Q|² vanishes on the domain".into()));
    }
    let length = b - a;
    Ok(length * length * slope / weight)
}

/// Two-point currents for a family of transforms of one kind.
#[derive(Debug, Clone)]
pub struct ScanMap {
    pub kind: TransformKind,
    /// `ΔL` (translation) or `α` (inversion) per row.
    pub parameters: Vec<f64>,
    pub rows: Vec<CurrentProfile>,
}

impl ScanMap {
    pub fn grid(&self) -> Option<&Grid> {
        self.rows.first().map(|r| &r.grid)
    }

    pub fn magnitude_squared(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(CurrentProfile::magnitude_squared).collect()
    }

    /// `log10 |Q|²`, clamped below at `1e-300`.
    pub fn log10_magnitude_squared(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| row.values.iter().map(|q| q.norm_sqr().max(1e-300).log10()).collect())
            .collect()
    }
}

/// Rows `Q(x, x + ΔL)` for each shift.
pub fn shift_scan(state: &WaveState, shifts: &[f64]) -> ScanMap {
    ScanMap {
        kind: TransformKind::Translation,
        parameters: shifts.to_vec(),
        rows: shifts.iter().map(|&dl| two_point_current(state, SymmetryTransform::translation(dl))).collect(),
    }
}

/// Rows `Q(x, 2α - x)` for each centre.
pub fn inversion_scan(state: &WaveState, centers: &[f64]) -> ScanMap {
    ScanMap {
        kind: TransformKind::Inversion,
        parameters: centers.to_vec(),
        rows: centers.iter().map(|&a| two_point_current(state, SymmetryTransform::inversion(a))).collect(),
    }
}
