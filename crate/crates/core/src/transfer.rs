//! 2x2 transfer matrices for chains of point scatterers.
//!
//! Between scatterers `Ψ_n(x) = F_n e^{ikx} + G_n e^{-ikx}` and
//! `Ψ_{n+1} = M_n Ψ_n`. A delta barrier `Λ δ(x)` enters the stationary
//! equation `Ψ'' + 2[E - V]Ψ = 0` with the jump
//! `Ψ'(0⁺) - Ψ'(0⁻) = 2ΛΨ(0)` (note the factor 2), which gives
//! `P = [[1 + a, a], [-a, 1 - a]]` with `a = Λ/(ik)`.
//!
//! Everything here is closed-form and serves as an independent reference for
//! the plane-wave pipeline.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Tolerance of the PCC / TRI / unimodularity checks.
pub const CONDITION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m: [[Complex64; 2]; 2],
    pub k: f64,
}

impl TransferMatrix {
    pub fn new(m: [[Complex64; 2]; 2], k: f64) -> Self {
        Self { m, k }
    }

    pub fn identity(k: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { m: [[one, zero], [zero, one]], k }
    }

    pub fn diagonal(d0: Complex64, d1: Complex64, k: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { m: [[d0, zero], [zero, d1]], k }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.max_abs().powi(2).max(f64::MIN_POSITIVE);
        if det.norm() <= 1e-14 * scale {
            return Err(Error::SingularMatrix);
        }
        let [[a, b], [c, d]] = self.m;
        Ok(Self { m: [[d / det, -b / det], [-c / det, a / det]], k: self.k })
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self { m: [[a, c], [b, d]], k: self.k }
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |A_ij - B_ij|`.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    pub fn apply(&self, v: AmplitudePair) -> AmplitudePair {
        AmplitudePair {
            f: self.m[0][0] * v.f + self.m[0][1] * v.g,
            g: self.m[1][0] * v.f + self.m[1][1] * v.g,
        }
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self { m: [[f(a), f(b)], [f(c), f(d)]], k: self.k }
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let (a, b) = (self.m, rhs.m);
        let entry = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        TransferMatrix { m: [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]], k: self.k }
    }
}

/// Amplitudes of right (`f`) and left (`g`) movers in a potential-free region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePair {
    pub f: Complex64,
    pub g: Complex64,
}

impl AmplitudePair {
    pub fn new(f: Complex64, g: Complex64) -> Self {
        Self { f, g }
    }

    /// `(Ψ(x), Ψ'(x))`.
    pub fn eval(&self, k: f64, x: f64) -> (Complex64, Complex64) {
        let right = self.f * Complex64::from_polar(1.0, k * x);
        let left = self.g * Complex64::from_polar(1.0, -k * x);
        (right + left, I * k * (right - left))
    }
}

fn eta() -> TransferMatrix {
    TransferMatrix::diagonal(1.0.into(), (-1.0).into(), 0.0)
}

fn tau() -> TransferMatrix {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    TransferMatrix::new([[zero, one], [one, zero]], 0.0)
}

/// `K_s = diag(e^{iks}, e^{-iks})`.
pub fn shift_matrix(k: f64, s: f64) -> TransferMatrix {
    TransferMatrix::diagonal(Complex64::from_polar(1.0, k * s), Complex64::from_polar(1.0, -k * s), k)
}

/// Delta barrier `Λ δ(x)` at the origin. `Λ` may be complex (absorbing).
pub fn delta_transfer(strength: impl Into<Complex64>, k: f64) -> Result<TransferMatrix> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
    }
    let a = strength.into() / (I * k);
    let one = Complex64::new(1.0, 0.0);
    Ok(TransferMatrix::new([[one + a, a], [-a, one - a]], k))
}

/// `K*_x P K_x`: the scatterer `P` moved to position `x`.
pub fn placed(local: &TransferMatrix, x: f64) -> TransferMatrix {
    shift_matrix(local.k, x).conj() * *local * shift_matrix(local.k, x)
}

/// `‖M†ηM - η‖_max`.
pub fn check_pcc(m: &TransferMatrix) -> f64 {
    (m.adjoint() * eta() * *m).distance(&eta())
}

/// `‖M⁻¹τM* - τ‖_max`.
pub fn check_tri(m: &TransferMatrix) -> Result<f64> {
    Ok((m.inverse()? * tau() * m.conj()).distance(&tau()))
}

/// `|det M - 1|`.
pub fn check_unimodular(m: &TransferMatrix) -> f64 {
    (m.det() - 1.0).norm()
}

/// A scatterer at `position` with local transfer matrix `local`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: f64,
    pub local: TransferMatrix,
}

impl Scatterer {
    pub fn delta(position: f64, strength: impl Into<Complex64>, k: f64) -> Result<Self> {
        Ok(Self { position, local: delta_transfer(strength, k)? })
    }

    /// `M_n` in global coordinates.
    pub fn matrix(&self) -> TransferMatrix {
        placed(&self.local, self.position)
    }
}

/// Ordered product `M_{N-1} ··· M_0`.
pub fn total_matrix(chain: &[Scatterer], k: f64) -> TransferMatrix {
    chain.iter().fold(TransferMatrix::identity(k), |acc, s| s.matrix() * acc)
}

/// Amplitudes in regions `0..=N` (region `n` lies left of scatterer `n`)
/// for a wave of amplitude `incoming` incident from the left with nothing
/// coming back from the right.
pub fn propagate_amplitudes(
    chain: &[Scatterer],
    k: f64,
    incoming: Complex64,
) -> Result<Vec<AmplitudePair>> {
    let total = total_matrix(chain, k);
    let m22 = total.m[1][1];
    if m22.norm() <= 1e-14 * total.max_abs().max(1.0) {
        return Err(Error::SingularMatrix);
    }
    let mut pair = AmplitudePair::new(incoming, -total.m[1][0] * incoming / m22);
    let mut regions = vec![pair];
    for scatterer in chain {
        pair = scatterer.matrix().apply(pair);
        regions.push(pair);
    }
    // G in the last region vanishes by construction; clean the rounding.
    if let Some(last) = regions.last_mut() {
        last.g = Complex64::new(0.0, 0.0);
    }
    Ok(regions)
}

/// `Q_n = k Ψ_n† η K_L M_n Ψ_n` for translation by `L`.
pub fn q_translation(pair: &AmplitudePair, m: &TransferMatrix, k: f64, length: f64) -> Complex64 {
    let next = (shift_matrix(k, length) * *m).apply(*pair);
    k * (pair.f.conj() * next.f - pair.g.conj() * next.g)
}

/// `Q_n = k Ψ_n† ζ K_{2α} M_n̄ Ψ_n̄` for inversion through `α`, with
/// `ζ = [[0, 1], [-1, 0]]`.
pub fn q_inversion(
    pair: &AmplitudePair,
    mirror: &AmplitudePair,
    m_mirror: &TransferMatrix,
    k: f64,
    alpha: f64,
) -> Complex64 {
    let v = (shift_matrix(k, 2.0 * alpha) * *m_mirror).apply(*mirror);
    k * (pair.f.conj() * v.g - pair.g.conj() * v.f)
}

/// Complementary current for translation, `Qᶜ_n = -k Ψ_nᵀ ζ K_L M_n Ψ_n`.
pub fn qc_translation(pair: &AmplitudePair, m: &TransferMatrix, k: f64, length: f64) -> Complex64 {
    let next = (shift_matrix(k, length) * *m).apply(*pair);
    -k * (pair.f * next.g - pair.g * next.f)
}

/// Complementary current for inversion, `Qᶜ_n = -k Ψ_nᵀ η K_{2α} M_n̄ Ψ_n̄`.
pub fn qc_inversion(
    pair: &AmplitudePair,
    mirror: &AmplitudePair,
    m_mirror: &TransferMatrix,
    k: f64,
    alpha: f64,
) -> Complex64 {
    let v = (shift_matrix(k, 2.0 * alpha) * *m_mirror).apply(*mirror);
    -k * (pair.f * v.f - pair.g * v.g)
}

/// Region index `n̄ = 2α/L - n` for a chain with scatterers at `X_n = nL`.
pub fn mirror_region(n: usize, alpha: f64, spacing: f64, scatterers: usize) -> Result<usize> {
    let twice = 2.0 * alpha / spacing;
    if (twice - twice.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("2α/L = {twice} is not an integer")));
    }
    let mirror = twice.round() as i64 - n as i64;
    if mirror < 0 || mirror >= scatterers as i64 {
        return Err(Error::InvalidArgument(format!("mirror index {mirror} outside the chain")));
    }
    Ok(mirror as usize)
}

/// The three plateaus of `Q` for a single delta of strength `Λ_c` probed by
/// translation `L`, with unit-free incident amplitude `F0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPlateaus {
    pub left: Complex64,
    pub center: Complex64,
    pub right: Complex64,
}

impl DeltaPlateaus {
    /// Largest pairwise difference, relative to `|A_kL| = k|F0|²`.
    pub fn discrepancy(&self, scale: f64) -> f64 {
        let d = [
            (self.left - self.center).norm(),
            (self.center - self.right).norm(),
            (self.left - self.right).norm(),
        ];
        d.iter().fold(0.0_f64, |m, v| m.max(*v)) / scale
    }
}

/// `Q_L = A(1 - |a|²/(1+|a|²) e^{-2ikL})`, `Q_C = A/(1 + a*)`,
/// `Q_R = A/(1 + |a|²)` with `A = k|F0|² e^{ikL}` and `a = Λ_c/(ik)`.
pub fn delta_defect_analytic(strength: f64, k: f64, length: f64, incoming: Complex64) -> Result<DeltaPlateaus> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
    }
    let a = strength / (I * k);
    let a2 = a.norm_sqr();
    let amplitude = k * incoming.norm_sqr() * Complex64::from_polar(1.0, k * length);
    Ok(DeltaPlateaus {
        left: amplitude * (1.0 - a2 / (1.0 + a2) * Complex64::from_polar(1.0, -2.0 * k * length)),
        center: amplitude / (1.0 + a.conj()),
        right: amplitude / (1.0 + a2),
    })
}

/// The same plateaus from the transfer-matrix pipeline: a chain with the
/// defect at the origin flanked by empty scatterer sites.
pub fn delta_defect_numeric(strength: f64, k: f64, length: f64, incoming: Complex64) -> Result<DeltaPlateaus> {
    let chain = [
        Scatterer::delta(-length, 0.0, k)?,
        Scatterer::delta(0.0, strength, k)?,
        Scatterer::delta(length, 0.0, k)?,
    ];
    let regions = propagate_amplitudes(&chain, k, incoming)?;
    let q = |n: usize| q_translation(&regions[n], &chain[n].matrix(), k, length);
    Ok(DeltaPlateaus { left: q(0), center: q(1), right: q(2) })
}

/// Lowest stationary state of a periodic supercell of delta barriers.
#[derive(Debug, Clone)]
pub struct PeriodicDeltaState {
    pub k: f64,
    pub energy: f64,
    pub supercell: f64,
    positions: Vec<f64>,
    /// Amplitudes in regions `0..=N`; region `n` ends at scatterer `n`.
    regions: Vec<AmplitudePair>,
}

impl PeriodicDeltaState {
    /// `(Ψ(x), Ψ'(x))`, periodic in the supercell; on a scatterer the
    /// left-hand limit is returned.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let half = 0.5 * self.supercell;
        let x = -half + (x + half).rem_euclid(self.supercell);
        let region = self.positions.iter().take_while(|&&p| p < x).count();
        self.regions[region].eval(self.k, x)
    }

    /// `Q(x, x + L)` from the exact amplitudes.
    pub fn two_point_current(&self, x: f64, length: f64) -> Complex64 {
        let (psi, dpsi) = self.eval(x);
        let (psi_bar, dpsi_bar) = self.eval(x + length);
        (psi.conj() * dpsi_bar - psi_bar * dpsi.conj()) * Complex64::new(0.0, -0.5)
    }

    pub fn region_amplitudes(&self) -> &[AmplitudePair] {
        &self.regions
    }
}

/// Ground state of `Σ_n λ_n δ(x - X_n)` on a ring of length `supercell`,
/// for non-negative strengths (so that `E > 0`).
///
/// Periodicity requires `K_R M v = v`, i.e. `Re tr(K_R M(k)) = 2`; the
/// lowest root is bracketed by a scan and refined by bisection. The state is
/// normalised to one over the supercell and made real.
pub fn periodic_delta_ground_state(
    positions: &[f64],
    strengths: &[f64],
    supercell: f64,
) -> Result<PeriodicDeltaState> {
    if positions.len() != strengths.len() || positions.is_empty() {
        return Err(Error::InvalidArgument("need matching, non-empty positions and strengths".into()));
    }
    if strengths.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("strengths must be non-negative".into()));
    }
    if positions.windows(2).any(|w| w[1] <= w[0])
        || positions.iter().any(|p| p.abs() >= 0.5 * supercell)
    {
        return Err(Error::InvalidArgument("positions must increase inside the supercell".into()));
    }
    let ring = |k: f64| -> Result<TransferMatrix> {
        let chain: Vec<Scatterer> = positions
            .iter()
            .zip(strengths)
            .map(|(&x, &s)| Scatterer::delta(x, s, k))
            .collect::<Result<_>>()?;
        Ok(shift_matrix(k, supercell) * total_matrix(&chain, k))
    };
    let f = |k: f64| -> Result<f64> { Ok(ring(k)?.trace().re - 2.0) };

    let dk = 1e-3 * std::f64::consts::PI / supercell;
    let mut lo = dk;
    let mut f_lo = f(lo)?;
    let mut hi = lo;
    let mut found = false;
    for _ in 0..1_000_000 {
        hi = lo + dk;
        let f_hi = f(hi)?;
        if f_lo > 0.0 && f_hi <= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if !found {
        return Err(Error::InvalidArgument("no periodic solution found in the scanned range".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let m = ring(k)?;

    // Null vector of K_R M - 1 from its better-conditioned row.
    let one = Complex64::new(1.0, 0.0);
    let rows = [[m.m[0][0] - one, m.m[0][1]], [m.m[1][0], m.m[1][1] - one]];
    let row = if rows[0][0].norm() + rows[0][1].norm() >= rows[1][0].norm() + rows[1][1].norm() {
        rows[0]
    } else {
        rows[1]
    };
    let start = AmplitudePair::new(row[1], -row[0]);

    let chain: Vec<Scatterer> =
        positions.iter().zip(strengths).map(|(&x, &s)| Scatterer::delta(x, s, k)).collect::<Result<_>>()?;
    let mut regions = vec![start];
    for s in &chain {
        let next = s.matrix().apply(*regions.last().unwrap());
        regions.push(next);
    }

    // ∫|F e^{ikx} + G e^{-ikx}|² over each region.
    let half = 0.5 * supercell;
    let mut edges = vec![-half];
    edges.extend_from_slice(positions);
    edges.push(half);
    let mut norm = 0.0;
    for (n, pair) in regions.iter().enumerate() {
        let (a, b) = (edges[n], edges[n + 1]);
        let oscillating = (Complex64::from_polar(1.0, 2.0 * k * b) - Complex64::from_polar(1.0, 2.0 * k * a))
            / (2.0 * I * k);
        norm += (pair.f.norm_sqr() + pair.g.norm_sqr()) * (b - a) + 2.0 * (pair.f * pair.g.conj() * oscillating).re;
    }
    // Rotate so that Ψ is real: at any point Ψ = F e^{ikx} + c.c. requires G = F*.
    let phase = {
        let p = regions[0];
        let (psi, _) = p.eval(k, edges[0]);
        let (psi2, _) = p.eval(k, 0.5 * (edges[0] + edges[1]));
        let reference = if psi.norm() > psi2.norm() { psi } else { psi2 };
        reference.conj() / reference.norm()
    };
    let scale = phase / norm.sqrt();
    for pair in &mut regions {
        pair.f *= scale;
        pair.g *= scale;
    }
    Ok(PeriodicDeltaState { k, energy: 0.5 * k * k, supercell, positions: positions.to_vec(), regions })
}
