//! Single-excitation evolution `|ψ(z)⟩ = exp(−iHz)|ψ(0)⟩`.
//!
//! The production path diagonalizes `H` once and evaluates any number of
//! propagation lengths from the cached [`Spectrum`]. [`evolve_oracle`] is an
//! unrelated route (truncated Taylor series with scaling and squaring) used to
//! cross-check it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;

/// Complex amplitude per site.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Excitation localized on 1-based `site` of an `n`-site system.
    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site == 0 || site > n {
            return Err(Error::SiteOutOfRange { index: site, len: n });
        }
        let mut amplitudes = DVector::zeros(n);
        amplitudes[site - 1] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        StateVector {
            amplitudes: DVector::from_vec(amplitudes),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Site populations `|⟨i|ψ⟩|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest elementwise amplitude difference.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Eigen-decomposition `H = V Λ Vᵀ` with ascending eigenvalues.
///
/// Each eigenvector is signed so that its first nonzero component is
/// positive, which makes the decomposition reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |V Λ Vᵀ − H|`.
    pub fn reconstruction_error(&self, h: &CouplingMatrix) -> f64 {
        let v = &self.eigenvectors;
        let rebuilt = v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose();
        (rebuilt - h.as_matrix()).amax()
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        (v.transpose() * v - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// Diagonalizes a real symmetric matrix. Entries must equal their transpose exactly.
pub fn eigendecompose_matrix(m: &DMatrix<f64>) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::Asymmetric {
                    row: i + 1,
                    col: j + 1,
                    upper: m[(i, j)],
                    lower: m[(j, i)],
                });
            }
        }
    }

    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let scale = v.amax();
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12 * scale)
            .map_or(1.0, |x| x.signum());
        eigenvectors.set_column(col, &(v * sign));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

pub fn eigendecompose(h: &CouplingMatrix) -> Result<Spectrum> {
    eigendecompose_matrix(h.as_matrix())
}

/// Cached spectral propagator for one coupling matrix.
///
/// Immutable after construction; share it freely between threads.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectrum: Spectrum,
}

impl Propagator {
    pub fn new(h: &CouplingMatrix) -> Result<Self> {
        Ok(Propagator {
            spectrum: eigendecompose(h)?,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// `V exp(−iΛz) Vᵀ ψ0`.
    pub fn evolve(&self, psi0: &StateVector, z: f64) -> Result<StateVector> {
        self.check_dim(psi0)?;
        if z == 0.0 {
            return Ok(psi0.clone());
        }
        let v = &self.spectrum.eigenvectors;
        let coeffs = v.transpose().map(Complex64::from) * psi0.amplitudes();
        let phased = DVector::from_iterator(
            self.dim(),
            coeffs
                .iter()
                .zip(self.spectrum.eigenvalues.iter())
                .map(|(c, &lambda)| c * Complex64::from_polar(1.0, -lambda * z)),
        );
        Ok(StateVector {
            amplitudes: v.map(Complex64::from) * phased,
        })
    }

    /// Amplitude transfer from 1-based `from` to `to`:
    /// `⟨to| exp(−iHz) |from⟩ = Σ_k V[to,k] V[from,k] exp(−iλ_k z)`.
    pub fn transfer_amplitude(&self, from: usize, to: usize, z: f64) -> Result<Complex64> {
        let n = self.dim();
        for s in [from, to] {
            if s == 0 || s > n {
                return Err(Error::SiteOutOfRange { index: s, len: n });
            }
        }
        if z == 0.0 {
            return Ok(Complex64::from(if from == to { 1.0 } else { 0.0 }));
        }
        let v = &self.spectrum.eigenvectors;
        Ok((0..n)
            .map(|k| {
                let w = v[(to - 1, k)] * v[(from - 1, k)];
                Complex64::from_polar(w, -self.spectrum.eigenvalues[k] * z)
            })
            .sum())
    }

    /// Probability of finding an excitation injected at `from` on `to` after `z`.
    pub fn transfer_probability(&self, from: usize, to: usize, z: f64) -> Result<f64> {
        Ok(self.transfer_amplitude(from, to, z)?.norm_sqr())
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: psi.dim(),
            });
        }
        Ok(())
    }
}

pub fn evolve(h: &CouplingMatrix, psi0: &StateVector, z: f64) -> Result<StateVector> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: psi0.dim(),
        });
    }
    Propagator::new(h)?.evolve(psi0, z)
}

/// `exp(−iHz) ψ0` by a truncated Taylor series with scaling and squaring.
///
/// The step `X = −iHz/2^s` satisfies `‖X‖₁ ≤ 1/2`; the series is cut once the
/// tail bound drops below 1e−17, then the step exponential is squared `s`
/// times. Independent of the eigen-solver path.
pub fn evolve_oracle(h: &CouplingMatrix, psi0: &StateVector, z: f64) -> Result<StateVector> {
    let n = h.dim();
    if psi0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: psi0.dim(),
        });
    }
    let m = h.as_matrix();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * z.abs();
    let mut squarings = 0u32;
    while norm1 / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scale = z / 2f64.powi(squarings as i32);
    let x = m.map(|v| Complex64::new(0.0, -v * scale));
    let x_norm = norm1 / 2f64.powi(squarings as i32);

    let mut step = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut bound = 1.0;
    for k in 1..=40 {
        term = &term * &x / Complex64::from(k as f64);
        step += &term;
        bound *= x_norm / (k + 1) as f64;
        // Tail Σ_{j>k} ‖X‖^j/j! ≤ 2·‖X‖^{k+1}/(k+1)! for ‖X‖ ≤ 1/2.
        if 2.0 * bound < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        step = &step * &step;
    }
    Ok(StateVector {
        amplitudes: step * psi0.amplitudes(),
    })
}

/// Site populations sampled on a propagation-length grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    /// Grid points, mm.
    pub z: Vec<f64>,
    /// `rows[k][i]` is the population of site `i+1` at `z[k]`.
    pub rows: Vec<Vec<f64>>,
}

impl ProbabilityField {
    pub fn n_sites(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Population of 1-based `site` at every grid point.
    pub fn site_series(&self, site: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[site - 1]).collect()
    }
}

/// Grid `{0, step, 2·step, …}` up to and including `z_max` (within 1e−9 of a step).
pub fn z_grid(z_max: f64, z_step: f64) -> Result<Vec<f64>> {
    if !(z_step > 0.0 && z_step.is_finite()) {
        return Err(Error::invalid("z_step", format!("must be > 0, got {z_step}")));
    }
    if !(z_max >= z_step && z_max.is_finite()) {
        return Err(Error::invalid(
            "z_max",
            format!("must be >= z_step ({z_step}), got {z_max}"),
        ));
    }
    let count = (z_max / z_step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| k as f64 * z_step).collect())
}

pub fn probability_map(
    h: &CouplingMatrix,
    psi0: &StateVector,
    z_max: f64,
    z_step: f64,
) -> Result<ProbabilityField> {
    let z = z_grid(z_max, z_step)?;
    let prop = Propagator::new(h)?;
    prop.check_dim(psi0)?;
    let rows = z
        .iter()
        .map(|&zk| prop.evolve(psi0, zk).map(|s| s.probabilities()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilityField { z, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, ChainSpec};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn device_chain() -> CouplingMatrix {
        build_hamiltonian(&ChainSpec::from_couplings(23, 1.526, 0.189).unwrap()).unwrap()
    }

    fn uniform_chain(m: usize, j: f64) -> CouplingMatrix {
        CouplingMatrix::from_bonds(&vec![j; m - 1]).unwrap()
    }

    #[test]
    fn two_site_spectrum() {
        let s = eigendecompose(&uniform_chain(2, 1.0)).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_site_spectrum() {
        let s = eigendecompose(&uniform_chain(3, 1.0)).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([-r2, 0.0, r2]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_chain_closed_form() {
        for (m, j) in [(7, 1.0), (21, 1.526), (30, 0.3)] {
            let s = eigendecompose(&uniform_chain(m, j)).unwrap();
            let mut expect: Vec<f64> = (1..=m)
                .map(|k| 2.0 * j * (k as f64 * PI / (m + 1) as f64).cos())
                .collect();
            expect.sort_by(f64::total_cmp);
            for (got, want) in s.eigenvalues.iter().zip(expect) {
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
            assert!(s.orthonormality_error() < 1e-10);
        }
    }

    #[test]
    fn spectrum_invariants_and_sign_convention() {
        let h = device_chain();
        let s = eigendecompose(&h).unwrap();
        assert!(s.orthonormality_error() < 1e-10);
        assert!(s.reconstruction_error(&h) <= 1e-10 * h.max_abs());
        for w in s.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
        for col in s.eigenvectors.column_iter() {
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
        let again = eigendecompose(&h).unwrap();
        assert_eq!(s.eigenvectors, again.eigenvectors);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 0.5;
        assert!(matches!(eigendecompose_matrix(&m), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn evolution_at_zero_is_identity() {
        let h = device_chain();
        let psi = StateVector::localized(23, 1).unwrap();
        assert!(evolve(&h, &psi, 0.0).unwrap().max_abs_diff(&psi) < 1e-14);
        assert_eq!(evolve_oracle(&h, &psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn two_site_rabi() {
        let h = uniform_chain(2, 1.0);
        let psi = StateVector::localized(2, 1).unwrap();
        let out = evolve(&h, &psi, FRAC_PI_2).unwrap();
        assert!((out.probabilities()[1] - 1.0).abs() < 1e-12);
        let out = evolve_oracle(&h, &psi, FRAC_PI_2).unwrap();
        assert!((out.probabilities()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = device_chain();
        let psi = StateVector::localized(5, 1).unwrap();
        assert!(matches!(evolve(&h, &psi, 1.0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(evolve_oracle(&h, &psi, 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oracle_agrees_on_device_chain() {
        let h = device_chain();
        let psi = StateVector::localized(23, 1).unwrap();
        for z in [10.0, 33.3, 50.0] {
            let a = evolve(&h, &psi, z).unwrap();
            let b = evolve_oracle(&h, &psi, z).unwrap();
            assert!(a.max_abs_diff(&b) <= 1e-8, "z = {z}");
        }
        let far = evolve_oracle(&h, &psi, 100.0).unwrap();
        assert!((far.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn composition_and_reversal() {
        let h = device_chain();
        let prop = Propagator::new(&h).unwrap();
        let psi = StateVector::localized(23, 1).unwrap();
        let a = prop.evolve(&prop.evolve(&psi, 12.5).unwrap(), 27.0).unwrap();
        let b = prop.evolve(&psi, 39.5).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
        let back = prop.evolve(&prop.evolve(&psi, 33.3).unwrap(), -33.3).unwrap();
        assert!(back.max_abs_diff(&psi) < 1e-10);
    }

    #[test]
    fn map_rows_are_normalized() {
        let h = device_chain();
        let psi = StateVector::localized(23, 1).unwrap();
        let field = probability_map(&h, &psi, 60.0, 0.1).unwrap();
        assert_eq!(field.z.len(), 601);
        assert_eq!(field.rows[0][0], 1.0);
        assert!(field.rows[0][1..].iter().all(|p| *p == 0.0));
        for row in &field.rows {
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!(row.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
        }
        assert!(probability_map(&h, &psi, 60.0, 0.0).is_err());
        assert!(probability_map(&h, &psi, 0.05, 0.1).is_err());
    }

    #[test]
    fn weight_moves_from_sender_to_receiver() {
        // Snapshot lengths imaged for the fabricated 23-site chain.
        let h = device_chain();
        let prop = Propagator::new(&h).unwrap();
        let zs = [18.5, 21.3, 23.3, 28.5, 33.3];
        let sender: Vec<f64> = zs.iter().map(|&z| prop.transfer_probability(1, 1, z).unwrap()).collect();
        let receiver: Vec<f64> = zs.iter().map(|&z| prop.transfer_probability(1, 23, z).unwrap()).collect();
        for w in sender.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in receiver.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(receiver[4] > sender[4]);
    }
}
