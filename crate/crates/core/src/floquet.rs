//! One-period propagation of the laterally shaken lattice and its Floquet
//! modes.
//!
//! The driven Hamiltonian only moves the barrier centres, so
//! `H(d) = S(d) H(0) S(d)†` with `S(d) = diag(exp(-i k_μ d))`. The midpoint
//! scheme uses this to obtain the eigendecomposition of every `H(t_mid)` from
//! a single static one.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{FloquetMode, Grid, LatticeSpec, TimeSample};
use crate::hamiltonian::{self, build_hamiltonian, PlaneWaveBasis};
use crate::linalg::{self, CMat};
use crate::{Error, Result};

pub const DEFAULT_SUBSTEPS: usize = 1024;
pub const DEFAULT_TIME_SAMPLES: usize = 256;

/// Largest accepted `‖U†U - 1‖_max`.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;
/// Largest accepted `‖Uv - λv‖` for a Floquet eigenvector.
pub const MODE_RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest accepted `‖Φ(t0 + T) - Φ(t0)‖` for a propagated mode.
pub const PERIODICITY_TOLERANCE: f64 = 1e-6;

/// Time-stepping rule inside one substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorScheme {
    /// `exp(-i H(t + δt/2) δt)`, second order.
    #[default]
    Midpoint,
    /// Fourth-order commutator-free Magnus: two exponentials of linear
    /// combinations of `H` at the Gauss–Legendre nodes.
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetSettings {
    pub substeps: usize,
    pub n_time_samples: usize,
    #[serde(default)]
    pub scheme: PropagatorScheme,
}

impl Default for FloquetSettings {
    fn default() -> Self {
        Self {
            substeps: DEFAULT_SUBSTEPS,
            n_time_samples: DEFAULT_TIME_SAMPLES,
            scheme: PropagatorScheme::default(),
        }
    }
}

impl FloquetSettings {
    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be at least 1".into()));
        }
        if self.n_time_samples == 0 {
            return Err(Error::InvalidArgument("n_time_samples must be at least 1".into()));
        }
        if self.substeps % self.n_time_samples != 0 {
            return Err(Error::InvalidArgument(format!(
                "substeps ({}) must be a multiple of n_time_samples ({})",
                self.substeps, self.n_time_samples
            )));
        }
        Ok(())
    }
}

/// Matrix of `U(t0 + T, t0)` on the orthonormal plane-wave basis.
#[derive(Debug, Clone)]
pub struct PeriodPropagator {
    matrix: CMat,
    t0: f64,
    period: f64,
    substeps: usize,
    scheme: PropagatorScheme,
}

impl PeriodPropagator {
    /// Wrap an externally supplied matrix; no unitarity check is made here.
    pub fn from_fn(
        dim: usize,
        t0: f64,
        period: f64,
        f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        Self {
            matrix: CMat::from_fn(dim, dim, f),
            t0,
            period,
            substeps: 0,
            scheme: PropagatorScheme::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn scheme(&self) -> PropagatorScheme {
        self.scheme
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    /// `|det U|`, from the eigenvalues.
    pub fn determinant_modulus(&self) -> Result<f64> {
        let (values, _) = linalg::general_eigen(&self.matrix)?;
        Ok(values.iter().map(|v| v.norm().ln()).sum::<f64>().exp())
    }

    /// `max |U_ij - V_ij|`.
    pub fn distance(&self, other: &PeriodPropagator) -> f64 {
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        linalg::mat_vec(&self.matrix, v)
    }
}

/// Produces the substep factors of the time-ordered product.
struct Stepper<'a> {
    lattice: &'a LatticeSpec,
    basis: &'a PlaneWaveBasis,
    scheme: PropagatorScheme,
    dt: f64,
    /// `exp(-i H(0) δt)`, conjugated by `S(d)` for each midpoint step.
    static_factor: Option<CMat>,
}

impl<'a> Stepper<'a> {
    fn new(
        lattice: &'a LatticeSpec,
        basis: &'a PlaneWaveBasis,
        scheme: PropagatorScheme,
        dt: f64,
    ) -> Result<Self> {
        let static_factor = match scheme {
            PropagatorScheme::Midpoint => {
                let h0 = hamiltonian::build_shifted(lattice, basis, 0.0)?;
                Some(exponential(&h0, dt)?)
            }
            PropagatorScheme::Magnus4 => None,
        };
        Ok(Self { lattice, basis, scheme, dt, static_factor })
    }

    /// `state <- U(t + δt, t) state`.
    fn step(&self, t: f64, state: &CMat) -> Result<CMat> {
        match (&self.scheme, &self.static_factor) {
            (PropagatorScheme::Midpoint, Some(factor)) => {
                let d = self.lattice.displacement(t + 0.5 * self.dt);
                let s: Vec<Complex64> = (0..self.basis.size())
                    .map(|i| Complex64::from_polar(1.0, -self.basis.wavenumber(i) * d))
                    .collect();
                let rotated = CMat::from_fn(state.nrows(), state.ncols(), |i, j| {
                    s[i].conj() * state[(i, j)]
                });
                let mut next = factor * &rotated;
                for j in 0..next.ncols() {
                    for i in 0..next.nrows() {
                        next[(i, j)] *= s[i];
                    }
                }
                Ok(next)
            }
            _ => {
                let root = 3.0_f64.sqrt();
                let (a1, a2) = ((3.0 - 2.0 * root) / 12.0, (3.0 + 2.0 * root) / 12.0);
                let (c1, c2) = (0.5 - root / 6.0, 0.5 + root / 6.0);
                let h1 = build_hamiltonian(self.lattice, self.basis, t + c1 * self.dt)?;
                let h2 = build_hamiltonian(self.lattice, self.basis, t + c2 * self.dt)?;
                let first = combine(&h1, a2, &h2, a1);
                let second = combine(&h1, a1, &h2, a2);
                let state = exponential(&first, self.dt)? * state;
                Ok(exponential(&second, self.dt)? * &state)
            }
        }
    }
}

fn combine(
    h1: &hamiltonian::HermitianMatrix,
    w1: f64,
    h2: &hamiltonian::HermitianMatrix,
    w2: f64,
) -> hamiltonian::HermitianMatrix {
    hamiltonian::HermitianMatrix::from_fn(h1.dim(), |i, j| h1.get(i, j) * w1 + h2.get(i, j) * w2)
        .expect("a real combination of Hermitian matrices is Hermitian")
}

/// `exp(-i H δt)` from the eigendecomposition of `H`.
fn exponential(h: &hamiltonian::HermitianMatrix, dt: f64) -> Result<CMat> {
    let spectrum = hamiltonian::eigensolve(h)?;
    let phases: Vec<Complex64> =
        spectrum.energies.iter().map(|e| Complex64::from_polar(1.0, -e * dt)).collect();
    let vectors = linalg::from_columns(&(0..spectrum.len()).map(|j| spectrum.vector(j)).collect::<Vec<_>>());
    Ok(linalg::reassemble(&vectors, &phases))
}

fn require_driving(lattice: &LatticeSpec) -> Result<f64> {
    lattice
        .driving()
        .map(|d| d.period())
        .ok_or_else(|| Error::InvalidLattice("lattice has no driving".into()))
}

/// Evolve `state` over `[t0, t0 + T]` in `substeps` steps, calling
/// `on_sample(j, t_j, state)` at `t_j = t0 + jT/n_samples` for
/// `j = 0..n_samples` before stepping past it.
fn evolve(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    t0: f64,
    substeps: usize,
    scheme: PropagatorScheme,
    mut state: CMat,
    n_samples: usize,
    mut on_sample: impl FnMut(usize, f64, &CMat) -> Result<()>,
) -> Result<CMat> {
    let period = require_driving(lattice)?;
    let dt = period / substeps as f64;
    let stepper = Stepper::new(lattice, basis, scheme, dt)?;
    let every = if n_samples == 0 { usize::MAX } else { substeps / n_samples };
    for step in 0..substeps {
        let t = t0 + step as f64 * dt;
        if n_samples > 0 && step % every == 0 {
            on_sample(step / every, t, &state)?;
        }
        state = stepper.step(t, &state)?;
    }
    Ok(state)
}

/// `U(t0 + T, t0)` with the default scheme.
pub fn propagate_period(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    t0: f64,
    substeps: usize,
) -> Result<PeriodPropagator> {
    propagate_period_with(lattice, basis, t0, substeps, PropagatorScheme::default())
}

pub fn propagate_period_with(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    t0: f64,
    substeps: usize,
    scheme: PropagatorScheme,
) -> Result<PeriodPropagator> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let n = basis.size();
    let matrix =
        evolve(lattice, basis, t0, substeps, scheme, CMat::identity(n, n), 0, |_, _, _| Ok(()))?;
    finish_propagator(matrix, t0, require_driving(lattice)?, substeps, scheme)
}

fn finish_propagator(
    matrix: CMat,
    t0: f64,
    period: f64,
    substeps: usize,
    scheme: PropagatorScheme,
) -> Result<PeriodPropagator> {
    let propagator = PeriodPropagator { matrix, t0, period, substeps, scheme };
    let defect = propagator.unitarity_defect();
    if !(defect < UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { defect });
    }
    Ok(propagator)
}

/// An eigenvector of the one-period propagator.
#[derive(Debug, Clone)]
pub struct FloquetSeed {
    /// In `[-ω/2, ω/2)`.
    pub quasienergy: f64,
    pub omega: f64,
    pub t0: f64,
    /// Unit-norm coefficients on the orthonormal basis at `t0`.
    pub vector: Vec<Complex64>,
    /// `‖Uv - e^{-iεT} v‖`.
    pub residual: f64,
}

/// Fold a quasienergy into the first zone `[-ω/2, ω/2)`.
pub fn fold_quasienergy(epsilon: f64, omega: f64) -> f64 {
    let folded = (epsilon + 0.5 * omega).rem_euclid(omega) - 0.5 * omega;
    if folded >= 0.5 * omega {
        folded - omega
    } else {
        folded
    }
}

/// Diagonalise `U`; modes are ordered by quasienergy.
pub fn floquet_modes(propagator: &PeriodPropagator, omega: f64) -> Result<Vec<FloquetSeed>> {
    if !(omega > 0.0) || (omega * propagator.period - 2.0 * PI).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "omega {omega} does not match the propagator period {}",
            propagator.period
        )));
    }
    let defect = propagator.unitarity_defect();
    if !(defect < UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { defect });
    }
    let (values, vectors) = linalg::general_eigen(&propagator.matrix)?;
    let n = values.len();
    let mut seeds = Vec::with_capacity(n);
    for (j, lambda) in values.iter().enumerate() {
        if (lambda.norm() - 1.0).abs() > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary { defect: (lambda.norm() - 1.0).abs() });
        }
        let mut v = linalg::column(&vectors, j);
        let scale = 1.0 / linalg::norm(&v);
        v.iter_mut().for_each(|c| *c *= scale);
        let epsilon = fold_quasienergy(-lambda.arg() / propagator.period, omega);
        let target = Complex64::from_polar(1.0, -epsilon * propagator.period);
        let uv = propagator.apply(&v);
        let residual = uv.iter().zip(&v).map(|(a, b)| (a - target * b).norm_sqr()).sum::<f64>().sqrt();
        if !(residual <= MODE_RESIDUAL_TOLERANCE) {
            return Err(Error::EigenSolver { residual });
        }
        seeds.push(FloquetSeed { quasienergy: epsilon, omega, t0: propagator.t0, vector: v, residual });
    }
    let dominant = |v: &[Complex64]| {
        (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0)
    };
    seeds.sort_by(|a, b| {
        a.quasienergy
            .total_cmp(&b.quasienergy)
            .then_with(|| dominant(&a.vector).cmp(&dominant(&b.vector)))
    });
    Ok(seeds)
}

/// Propagator, Floquet seeds and their period-averaged energies, obtained in
/// a single propagation pass.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub propagator: PeriodPropagator,
    pub seeds: Vec<FloquetSeed>,
    /// `(1/n) Σ_j ⟨Ψ(t_j)|H(t_j)|Ψ(t_j)⟩` for each seed.
    pub mean_energies: Vec<f64>,
}

impl FloquetSpectrum {
    /// Index of the seed with the lowest mean energy.
    pub fn lowest_mean_energy(&self) -> Option<usize> {
        (0..self.seeds.len()).min_by(|&a, &b| self.mean_energies[a].total_cmp(&self.mean_energies[b]))
    }
}

/// Floquet decomposition starting at `t = 0`.
pub fn floquet_spectrum(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    settings: &FloquetSettings,
) -> Result<FloquetSpectrum> {
    settings.validate()?;
    let period = require_driving(lattice)?;
    let omega = 2.0 * PI / period;
    let n = basis.size();
    // Σ_j U_j† H(t_j) U_j, so that every seed's mean energy is one quadratic form.
    let mut averaged = CMat::zeros(n, n);
    let matrix = evolve(
        lattice,
        basis,
        0.0,
        settings.substeps,
        settings.scheme,
        CMat::identity(n, n),
        settings.n_time_samples,
        |_, t, u| {
            let h = build_hamiltonian(lattice, basis, t)?;
            let hu = h.matrix() * u;
            averaged += u.adjoint() * &hu;
            Ok(())
        },
    )?;
    let propagator = finish_propagator(matrix, 0.0, period, settings.substeps, settings.scheme)?;
    let seeds = floquet_modes(&propagator, omega)?;
    let samples = settings.n_time_samples as f64;
    let mean_energies = seeds
        .iter()
        .map(|seed| linalg::inner(&seed.vector, &linalg::mat_vec(&averaged, &seed.vector)).re / samples)
        .collect();
    Ok(FloquetSpectrum { propagator, seeds, mean_energies })
}

/// Propagate `seed` through one period, sampling it on `grid` at
/// `t_j = t0 + jT/n_time_samples`.
pub fn mode_time_series(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    grid: &Grid,
    seed: &FloquetSeed,
    settings: &FloquetSettings,
) -> Result<FloquetMode> {
    settings.validate()?;
    let period = require_driving(lattice)?;
    if seed.vector.len() != basis.size() {
        return Err(Error::InvalidArgument(format!(
            "seed has {} coefficients, basis has {}",
            seed.vector.len(),
            basis.size()
        )));
    }
    let initial = linalg::from_columns(std::slice::from_ref(&seed.vector));
    let mut samples = Vec::with_capacity(settings.n_time_samples);
    let last = evolve(
        lattice,
        basis,
        seed.t0,
        settings.substeps,
        settings.scheme,
        initial,
        settings.n_time_samples,
        |_, t, state| {
            let v = linalg::column(state, 0);
            let energy = build_hamiltonian(lattice, basis, t)?.expectation(&v);
            let state = hamiltonian::state_from_vector(energy, &v, basis, grid);
            samples.push(TimeSample { t, state });
            Ok(())
        },
    )?;
    let phase = Complex64::from_polar(1.0, -seed.quasienergy * period);
    let defect = seed
        .vector
        .iter()
        .enumerate()
        .map(|(i, c)| (last[(i, 0)] - phase * c).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if !(defect <= PERIODICITY_TOLERANCE) {
        return Err(Error::PeriodicityDefect { defect });
    }
    let mean_energy = samples.iter().map(|s| s.state.energy).sum::<f64>() / samples.len() as f64;
    Ok(FloquetMode { quasienergy: seed.quasienergy, mean_energy, omega: seed.omega, samples })
}

/// Period average of `⟨Ψ(t)|H(t)|Ψ(t)⟩` over the stored samples (periodic
/// trapezoid rule).
pub fn mean_energy(mode: &FloquetMode, lattice: &LatticeSpec, basis: &PlaneWaveBasis) -> Result<f64> {
    if mode.samples.is_empty() {
        return Err(Error::InvalidArgument("mode has no time samples".into()));
    }
    let r = basis.supercell();
    let mut total = 0.0;
    for sample in &mode.samples {
        let v: Vec<Complex64> = sample.state.coefficients.iter().map(|c| c * r.sqrt()).collect();
        total += build_hamiltonian(lattice, basis, sample.t)?.expectation(&v);
    }
    Ok(total / mode.samples.len() as f64)
}

/// Floquet mode of lowest mean energy, fully sampled.
pub fn lowest_mode(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    grid: &Grid,
    settings: &FloquetSettings,
) -> Result<FloquetMode> {
    let spectrum = floquet_spectrum(lattice, basis, settings)?;
    let index = spectrum
        .lowest_mean_energy()
        .ok_or_else(|| Error::InvalidArgument("empty basis".into()))?;
    mode_time_series(lattice, basis, grid, &spectrum.seeds[index], settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{eigensolve, stationary_states};

    fn shaken(amplitude: f64, omega: f64, defect: f64) -> LatticeSpec {
        LatticeSpec::chain(5, 5.0, 1.0, 0.5)
            .unwrap()
            .with_strength_at(0.0, defect)
            .unwrap()
            .with_driving(amplitude, omega)
            .unwrap()
    }

    #[test]
    fn folding_lands_in_first_zone() {
        let omega = 0.5;
        for &e in &[0.0, 0.24, 0.25, -0.25, 0.26, 1.3, -7.1] {
            let f = fold_quasienergy(e, omega);
            assert!((-0.25..0.25).contains(&f), "{e} -> {f}");
            let k = ((e - f) / omega).round();
            assert!((e - f - k * omega).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_conjugated_step_matches_direct_exponential() {
        let lattice = shaken(1.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(24, 25.0).unwrap();
        let dt = 0.01;
        let stepper = Stepper::new(&lattice, &basis, PropagatorScheme::Midpoint, dt).unwrap();
        let n = basis.size();
        let t = 1.37;
        let fast = stepper.step(t, &CMat::identity(n, n)).unwrap();
        let direct = exponential(&build_hamiltonian(&lattice, &basis, t + dt / 2.0).unwrap(), dt).unwrap();
        assert!(linalg::max_abs_diff(&fast, &direct) < 1e-12);
    }

    #[test]
    fn undriven_limit_is_static_exponential() {
        let lattice = shaken(0.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(24, 25.0).unwrap();
        let u = propagate_period(&lattice, &basis, 0.0, 64).unwrap();
        let h = build_hamiltonian(&lattice, &basis, 0.0).unwrap();
        let exact = exponential(&h, 4.0 * PI).unwrap();
        assert!(linalg::max_abs_diff(&u.matrix, &exact) < 1e-10);
    }

    #[test]
    fn free_particle_propagator_is_diagonal() {
        let lattice = LatticeSpec::empty(25.0).unwrap().with_driving(1.0, 0.5).unwrap();
        let basis = PlaneWaveBasis::new(10, 25.0).unwrap();
        let u = propagate_period(&lattice, &basis, 0.0, 16).unwrap();
        let period = 4.0 * PI;
        for i in 0..basis.size() {
            for j in 0..basis.size() {
                let expected = if i == j {
                    Complex64::from_polar(1.0, -basis.kinetic(i) * period)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((u.get(i, j) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn static_limit_modes_reproduce_eigenstates() {
        let lattice = shaken(0.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(24, 25.0).unwrap();
        let settings = FloquetSettings { substeps: 32, n_time_samples: 8, ..Default::default() };
        let spectrum = floquet_spectrum(&lattice, &basis, &settings).unwrap();
        let statics = eigensolve(&build_hamiltonian(&lattice, &basis, 0.0).unwrap()).unwrap();
        for (seed, mean) in spectrum.seeds.iter().zip(&spectrum.mean_energies) {
            // mean energy picks out the static level the seed came from
            let j = (0..statics.len())
                .min_by(|&a, &b| (statics.energies[a] - mean).abs().total_cmp(&(statics.energies[b] - mean).abs()))
                .unwrap();
            assert!((statics.energies[j] - mean).abs() < 1e-8);
            let folded = fold_quasienergy(statics.energies[j], 0.5);
            let gap = (seed.quasienergy - folded).abs();
            assert!(gap < 1e-8 || (gap - 0.5).abs() < 1e-8, "{} vs {folded}", seed.quasienergy);
        }
        let grid = Grid::supercell(25.0, 0.1).unwrap();
        let ground = spectrum.lowest_mean_energy().unwrap();
        let mode = mode_time_series(&lattice, &basis, &grid, &spectrum.seeds[ground], &settings).unwrap();
        let reference = &stationary_states(&lattice, &basis, &grid, 1).unwrap()[0];
        for sample in &mode.samples {
            for (a, b) in sample.state.density().iter().zip(reference.density()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn driven_propagator_is_unitary_and_modes_are_unimodular() {
        let lattice = shaken(1.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(16, 25.0).unwrap();
        let u = propagate_period(&lattice, &basis, 0.0, 128).unwrap();
        assert!(u.unitarity_defect() < 1e-9);
        assert!((u.determinant_modulus().unwrap() - 1.0).abs() < 1e-8);
        let seeds = floquet_modes(&u, 0.5).unwrap();
        assert_eq!(seeds.len(), basis.size());
        for seed in &seeds {
            assert!((-0.25..0.25).contains(&seed.quasienergy));
            assert!(seed.residual < 1e-8);
        }
    }

    #[test]
    fn non_unitary_input_rejected() {
        let u = PeriodPropagator::from_fn(2, 0.0, 4.0 * PI, |i, j| {
            if i == j { Complex64::new(2.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        assert!(matches!(floquet_modes(&u, 0.5), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn missing_driving_or_bad_settings_rejected() {
        let lattice = LatticeSpec::chain(5, 5.0, 1.0, 0.5).unwrap();
        let basis = PlaneWaveBasis::new(4, 25.0).unwrap();
        assert!(propagate_period(&lattice, &basis, 0.0, 8).is_err());
        let bad = FloquetSettings { substeps: 10, n_time_samples: 3, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_sample_is_the_seed() {
        let lattice = shaken(1.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(12, 25.0).unwrap();
        let grid = Grid::supercell(25.0, 0.25).unwrap();
        let settings = FloquetSettings { substeps: 64, n_time_samples: 1, ..Default::default() };
        let spectrum = floquet_spectrum(&lattice, &basis, &settings).unwrap();
        let seed = &spectrum.seeds[0];
        let mode = mode_time_series(&lattice, &basis, &grid, seed, &settings).unwrap();
        assert_eq!(mode.samples.len(), 1);
        let r = basis.supercell().sqrt();
        for (c, v) in mode.samples[0].state.coefficients.iter().zip(&seed.vector) {
            assert!((c * r - v).norm() < 1e-15);
        }
    }

    #[test]
    fn quasienergy_shift_by_omega_leaves_state_invariant() {
        let lattice = shaken(1.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(12, 25.0).unwrap();
        let grid = Grid::supercell(25.0, 0.25).unwrap();
        let settings = FloquetSettings { substeps: 64, n_time_samples: 8, ..Default::default() };
        let spectrum = floquet_spectrum(&lattice, &basis, &settings).unwrap();
        let mode = mode_time_series(&lattice, &basis, &grid, &spectrum.seeds[3], &settings).unwrap();
        let omega = mode.omega;
        for (j, sample) in mode.samples.iter().enumerate() {
            let t = sample.t;
            let phi = mode.periodic_part(j);
            let shifted: Vec<Complex64> = phi.iter().map(|p| p * Complex64::from_polar(1.0, omega * t)).collect();
            let eps2 = mode.quasienergy + omega;
            for ((a, b), psi) in phi.iter().zip(&shifted).zip(&sample.state.psi) {
                let first = a * Complex64::from_polar(1.0, -mode.quasienergy * t);
                let second = b * Complex64::from_polar(1.0, -eps2 * t);
                assert!((first - psi).norm() < 1e-10);
                assert!((second - psi).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn mean_energy_recomputation_agrees() {
        let lattice = shaken(1.0, 0.5, 0.8);
        let basis = PlaneWaveBasis::new(12, 25.0).unwrap();
        let grid = Grid::supercell(25.0, 0.25).unwrap();
        let settings = FloquetSettings { substeps: 64, n_time_samples: 16, ..Default::default() };
        let spectrum = floquet_spectrum(&lattice, &basis, &settings).unwrap();
        let i = spectrum.lowest_mean_energy().unwrap();
        let mode = mode_time_series(&lattice, &basis, &grid, &spectrum.seeds[i], &settings).unwrap();
        let recomputed = mean_energy(&mode, &lattice, &basis).unwrap();
        assert!((recomputed - spectrum.mean_energies[i]).abs() < 1e-10);
        assert!((mode.mean_energy - recomputed).abs() < 1e-12);
        for sample in &mode.samples {
            assert!((sample.state.norm_squared() - 1.0).abs() < 1e-10);
        }
    }
}
