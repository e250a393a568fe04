//! Plane-wave representation of the Gaussian superlattice Hamiltonian.
//!
//! In the basis `⟨x|μ⟩ = exp(i2πμx/R)`, `μ = -k_max..=k_max`, the matrix
//! elements of `H = -½∂² + Σ_n Λ_n exp[-(x - X_n)²/Δ²]` are known in closed
//! form:
//!
//! ```text
//! H_μν = 2π²μ²/R² δ_μν + (√π/R) Σ_n Λ_n Δ exp[(ν-μ)π/R² (2i X_n R - Δ²π(ν-μ))]
//! ```
//!
//! The Gaussian integral is taken over the whole line, so the matrix is
//! exactly that of the `R`-periodic superlattice built from the barriers and
//! all their images.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::domain::{Grid, LatticeSpec, WaveState};
use crate::linalg::{self, CMat};
use crate::{Error, Result};

/// Default plane-wave cutoff for a 25-length supercell.
pub const DEFAULT_K_MAX: usize = 128;

/// Relative eigen-residual accepted from the eigensolver.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveBasis {
    k_max: usize,
    supercell: f64,
}

impl PlaneWaveBasis {
    pub fn new(k_max: usize, supercell: f64) -> Result<Self> {
        if !(supercell.is_finite() && supercell > 0.0) {
            return Err(Error::InvalidBasis(format!("supercell must be positive, got {supercell}")));
        }
        Ok(Self { k_max, supercell })
    }

    /// Basis with `size = 2 k_max + 1` functions; `size` must be odd.
    pub fn from_size(size: usize, supercell: f64) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::InvalidBasis(format!("basis size must be odd, got {size}")));
        }
        Self::new(size / 2, supercell)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn supercell(&self) -> f64 {
        self.supercell
    }

    pub fn size(&self) -> usize {
        2 * self.k_max + 1
    }

    /// Plane-wave index `μ` of the `index`-th basis function.
    pub fn mu(&self, index: usize) -> i64 {
        index as i64 - self.k_max as i64
    }

    pub fn index_of(&self, mu: i64) -> Option<usize> {
        let index = mu + self.k_max as i64;
        (0..self.size() as i64).contains(&index).then_some(index as usize)
    }

    /// `k_μ = 2πμ/R`.
    pub fn wavenumber(&self, index: usize) -> f64 {
        2.0 * PI * self.mu(index) as f64 / self.supercell
    }

    /// Kinetic diagonal `k_μ²/2`.
    pub fn kinetic(&self, index: usize) -> f64 {
        0.5 * self.wavenumber(index).powi(2)
    }

    /// `(Ψ(x), Ψ'(x))` for `Ψ = Σ c_μ exp(i k_μ x)`.
    pub fn evaluate(&self, coefficients: &[Complex64], x: f64) -> (Complex64, Complex64) {
        debug_assert_eq!(coefficients.len(), self.size());
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        for (index, c) in coefficients.iter().enumerate() {
            let k = self.wavenumber(index);
            let term = c * Complex64::from_polar(1.0, k * x);
            psi += term;
            dpsi += term * Complex64::new(0.0, k);
        }
        (psi, dpsi)
    }

    /// Samples of `Ψ` and its analytic derivative on `grid`.
    pub fn synthesize(&self, coefficients: &[Complex64], grid: &Grid) -> (Vec<Complex64>, Vec<Complex64>) {
        let points: Vec<f64> = grid.points().collect();
        self.sampler(&points).apply(coefficients)
    }

    /// Precomputed basis values at a fixed set of points, for evaluating many
    /// coefficient vectors at the same positions.
    pub fn sampler(&self, points: &[f64]) -> BasisSampler {
        let values = CMat::from_fn(points.len(), self.size(), |i, j| {
            Complex64::from_polar(1.0, self.wavenumber(j) * points[i])
        });
        BasisSampler { basis: *self, values }
    }
}

/// Basis functions tabulated at fixed points.
#[derive(Debug, Clone)]
pub struct BasisSampler {
    basis: PlaneWaveBasis,
    values: CMat,
}

impl BasisSampler {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn apply(&self, coefficients: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let derivative: Vec<Complex64> = coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::new(0.0, self.basis.wavenumber(j)))
            .collect();
        (
            linalg::mat_vec(&self.values, coefficients),
            linalg::mat_vec(&self.values, &derivative),
        )
    }
}

/// Dense Hermitian matrix on the plane-wave basis.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    inner: CMat,
}

impl HermitianMatrix {
    /// Wrap `matrix`, rejecting it if it is not Hermitian to `1e-12`
    /// (relative to its largest entry).
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let matrix = Self { inner: CMat::from_fn(dim, dim, f) };
        let scale = linalg::max_abs(&matrix.inner).max(1.0);
        let defect = matrix.hermiticity_defect();
        if defect > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        Ok(matrix)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut defect = 0.0_f64;
        for i in 0..n {
            for j in 0..=i {
                defect = defect.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        defect
    }

    /// `⟨v|H|v⟩` for a coefficient vector in the orthonormal basis.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        linalg::inner(v, &linalg::mat_vec(&self.inner, v)).re
    }

    pub(crate) fn matrix(&self) -> &CMat {
        &self.inner
    }
}

/// Fourier component `(1/R) ∫ V(x) exp(-i2πmx/R) dx` of the barrier array,
/// with every centre displaced by `shift`.
fn potential_component(lattice: &LatticeSpec, m: i64, shift: f64) -> Complex64 {
    let r = lattice.supercell();
    let delta = lattice.width();
    let m = m as f64;
    let envelope = PI.sqrt() / r * delta * (-(PI * delta * m / r).powi(2)).exp();
    lattice
        .centers()
        .iter()
        .zip(lattice.strengths())
        .map(|(&x, &strength)| {
            strength * envelope * Complex64::from_polar(1.0, -2.0 * PI * m * (x + shift) / r)
        })
        .sum()
}

/// Hamiltonian of `lattice` at time `t`, barrier centres displaced by `d(t)`.
pub fn build_hamiltonian(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    t: f64,
) -> Result<HermitianMatrix> {
    build_shifted(lattice, basis, lattice.displacement(t))
}

/// Hamiltonian with every barrier centre displaced by `shift`.
pub(crate) fn build_shifted(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    shift: f64,
) -> Result<HermitianMatrix> {
    if basis.size() % 2 == 0 {
        return Err(Error::InvalidBasis(format!("basis size must be odd, got {}", basis.size())));
    }
    if (basis.supercell() - lattice.supercell()).abs() > 1e-12 * lattice.supercell() {
        return Err(Error::InvalidBasis(format!(
            "basis supercell {} differs from lattice supercell {}",
            basis.supercell(),
            lattice.supercell()
        )));
    }
    let half = lattice.supercell() / 2.0;
    if lattice.centers().iter().any(|x| (x + shift).abs() >= half) {
        return Err(Error::InvalidLattice(format!(
            "barriers displaced by {shift} leave the supercell"
        )));
    }

    let n = basis.size();
    // H_μν depends on μ - ν only through the potential: tabulate once.
    let k = basis.k_max() as i64;
    let components: Vec<Complex64> =
        (-2 * k..=2 * k).map(|m| potential_component(lattice, m, shift)).collect();
    let inner = CMat::from_fn(n, n, |i, j| {
        let m = basis.mu(i) - basis.mu(j);
        let mut value = components[(m + 2 * k) as usize];
        if i == j {
            value += basis.kinetic(i);
        }
        value
    });
    Ok(HermitianMatrix { inner })
}

/// Eigenpairs of a Hermitian matrix, ascending in energy.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    vectors: CMat,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Unit-norm eigenvector `j` in the orthonormal plane-wave basis.
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        linalg::column(&self.vectors, j)
    }

    /// `Σ_ij |⟨v_i|v_j⟩ - δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.adjoint() * &self.vectors;
        let n = gram.nrows();
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                total += (gram[(i, j)] - target).norm();
            }
        }
        total
    }
}

fn dominant_index(vectors: &CMat, j: usize) -> usize {
    (0..vectors.nrows())
        .max_by(|&a, &b| vectors[(a, j)].norm().total_cmp(&vectors[(b, j)].norm()))
        .unwrap_or(0)
}

/// Diagonalise `h`. Every returned pair satisfies
/// `‖Hv - Ev‖ ≤ 1e-10 ‖H‖`.
pub fn eigensolve(h: &HermitianMatrix) -> Result<Spectrum> {
    let (energies, vectors) = linalg::hermitian_eigen(h.matrix())?;
    let n = energies.len();
    let scale = energies.iter().fold(0.0_f64, |m, e| m.max(e.abs()));

    let residual = {
        let hv = h.matrix() * &vectors;
        let mut worst = 0.0_f64;
        for j in 0..n {
            let r: f64 = (0..n)
                .map(|i| (hv[(i, j)] - vectors[(i, j)] * energies[j]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    };
    if !residual.is_finite() || residual > EIGEN_RESIDUAL_TOLERANCE * scale {
        return Err(Error::EigenSolver { residual: residual / scale.max(f64::MIN_POSITIVE) });
    }

    // Deterministic order inside (numerically) degenerate groups.
    let tie = 1e-12 * scale.max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|&j| dominant_index(&vectors, j));
        start = end;
    }
    let sorted_energies = order.iter().map(|&j| energies[j]).collect();
    let sorted_vectors = CMat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(Spectrum { energies: sorted_energies, vectors: sorted_vectors })
}

/// `(Ψ, Ψ')` on `grid` for `Ψ(x) = Σ_μ c_μ exp(i2πμx/R)`.
pub fn synthesize_wavefunction(
    coefficients: &[Complex64],
    basis: &PlaneWaveBasis,
    grid: &Grid,
) -> (Vec<Complex64>, Vec<Complex64>) {
    basis.synthesize(coefficients, grid)
}

/// Turn an orthonormal-basis eigenvector into a supercell-normalised state.
pub fn state_from_vector(
    energy: f64,
    vector: &[Complex64],
    basis: &PlaneWaveBasis,
    grid: &Grid,
) -> WaveState {
    let scale = 1.0 / basis.supercell().sqrt();
    let coefficients = vector.iter().map(|c| c * scale).collect();
    WaveState::from_coefficients(energy, *basis, coefficients, *grid)
}

/// The `count` lowest stationary states of the static lattice (evaluated at
/// `t = 0` for a driven one).
pub fn stationary_states(
    lattice: &LatticeSpec,
    basis: &PlaneWaveBasis,
    grid: &Grid,
    count: usize,
) -> Result<Vec<WaveState>> {
    let spectrum = eigensolve(&build_hamiltonian(lattice, basis, 0.0)?)?;
    Ok((0..count.min(spectrum.len()))
        .map(|j| state_from_vector(spectrum.energies[j], &spectrum.vector(j), basis, grid))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_lattice(defect: f64) -> LatticeSpec {
        LatticeSpec::chain(5, 5.0, 1.0, 0.5).unwrap().with_strength_at(0.0, defect).unwrap()
    }

    #[test]
    fn free_particle_is_diagonal() {
        let lattice = LatticeSpec::empty(25.0).unwrap();
        let basis = PlaneWaveBasis::new(8, 25.0).unwrap();
        let h = build_hamiltonian(&lattice, &basis, 0.0).unwrap();
        for i in 0..basis.size() {
            for j in 0..basis.size() {
                let expected = if i == j {
                    2.0 * PI * PI * (basis.mu(i) as f64).powi(2) / 625.0
                } else {
                    0.0
                };
                assert!((h.get(i, j) - expected).norm() < 1e-15);
            }
        }
        let one = basis.index_of(1).unwrap();
        assert!((h.get(one, one).re - 2.0 * PI * PI / 625.0).abs() < 1e-16);
    }

    #[test]
    fn centred_barrier_gives_real_symmetric_matrix() {
        let lattice = LatticeSpec::new(25.0, vec![0.0], vec![1.0], 0.5).unwrap();
        let basis = PlaneWaveBasis::new(16, 25.0).unwrap();
        let h = build_hamiltonian(&lattice, &basis, 0.0).unwrap();
        for i in 0..basis.size() {
            for j in 0..basis.size() {
                assert_eq!(h.get(i, j).im, 0.0);
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
    }

    #[test]
    fn built_matrix_is_hermitian() {
        let lattice = fig2_lattice(0.8);
        let basis = PlaneWaveBasis::new(64, 25.0).unwrap();
        let h = build_hamiltonian(&lattice, &basis, 0.0).unwrap();
        assert!(h.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_or_even_basis() {
        assert!(PlaneWaveBasis::from_size(10, 25.0).is_err());
        assert_eq!(PlaneWaveBasis::from_size(11, 25.0).unwrap().k_max(), 5);
        let basis = PlaneWaveBasis::new(4, 20.0).unwrap();
        assert!(build_hamiltonian(&fig2_lattice(0.8), &basis, 0.0).is_err());
    }

    #[test]
    fn pauli_x_spectrum() {
        let h = HermitianMatrix::from_fn(2, |i, j| if i == j { 0.0.into() } else { 1.0.into() })
            .unwrap();
        let spectrum = eigensolve(&h).unwrap();
        assert!((spectrum.energies[0] + 1.0).abs() < 1e-14);
        assert!((spectrum.energies[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let result = HermitianMatrix::from_fn(2, |i, j| if i < j { 1.0.into() } else { 0.0.into() });
        assert!(result.is_err());
    }

    #[test]
    fn free_particle_energies_come_in_pairs() {
        let lattice = LatticeSpec::empty(25.0).unwrap();
        let basis = PlaneWaveBasis::new(6, 25.0).unwrap();
        let spectrum = eigensolve(&build_hamiltonian(&lattice, &basis, 0.0).unwrap()).unwrap();
        assert_eq!(spectrum.energies[0], 0.0);
        for m in 1..=6 {
            let expected = 2.0 * PI * PI * (m * m) as f64 / 625.0;
            assert!((spectrum.energies[2 * m - 1] - expected).abs() < 1e-14);
            assert!((spectrum.energies[2 * m] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let basis = PlaneWaveBasis::new(64, 25.0).unwrap();
        let h = build_hamiltonian(&fig2_lattice(1.2), &basis, 0.0).unwrap();
        let spectrum = eigensolve(&h).unwrap();
        assert!(spectrum.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn unit_coefficient_synthesis() {
        let basis = PlaneWaveBasis::new(3, 25.0).unwrap();
        let grid = Grid::supercell(25.0, 0.5).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); basis.size()];
        c[basis.index_of(0).unwrap()] = 1.0.into();
        let (psi, dpsi) = synthesize_wavefunction(&c, &basis, &grid);
        assert!(psi.iter().all(|p| (p - 1.0).norm() < 1e-15));
        assert!(dpsi.iter().all(|d| d.norm() < 1e-15));

        let mut c = vec![Complex64::new(0.0, 0.0); basis.size()];
        c[basis.index_of(1).unwrap()] = 1.0.into();
        let (psi, _) = synthesize_wavefunction(&c, &basis, &grid);
        for (x, p) in grid.points().zip(&psi) {
            assert!((p - Complex64::from_polar(1.0, 2.0 * PI * x / 25.0)).norm() < 1e-14);
            assert!((p.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_states_are_normalised() {
        let basis = PlaneWaveBasis::new(48, 25.0).unwrap();
        let grid = Grid::supercell(25.0, 0.05).unwrap();
        let states = stationary_states(&fig2_lattice(0.8), &basis, &grid, 3).unwrap();
        for state in &states {
            assert!((state.norm_squared() - 1.0).abs() < 1e-12);
            // trapezoid on a periodic grid is spectrally accurate
            let dx = grid.spacing();
            let integral: f64 = state.density()[..grid.len() - 1].iter().sum::<f64>() * dx;
            assert!((integral - 1.0).abs() < 1e-10);
        }
    }
}
