use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, HoloError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multimode Gaussian state described by its first and second moments.
///
/// Only fluctuation moments are stored: `moment_aa[j,k] = <δa_j δa_k>` and
/// `moment_adag_a[j,k] = <δa_j† δa_k>` with `δa = a - <a>`. Coherent states and
/// the vacuum therefore carry all-zero matrices; the canonical commutator is
/// supplied by the moment engine.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    displacement: DVector<Complex64>,
    moment_aa: DMatrix<Complex64>,
    moment_adag_a: DMatrix<Complex64>,
}

impl GaussianState {
    /// `n`-mode vacuum.
    pub fn vacuum(num_modes: usize) -> Self {
        Self {
            displacement: DVector::from_element(num_modes, ZERO),
            moment_aa: DMatrix::from_element(num_modes, num_modes, ZERO),
            moment_adag_a: DMatrix::from_element(num_modes, num_modes, ZERO),
        }
    }

    /// Assembles a state from raw moments, checking shapes and symmetries.
    pub fn from_moments(
        displacement: DVector<Complex64>,
        moment_aa: DMatrix<Complex64>,
        moment_adag_a: DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = displacement.len();
        for m in [&moment_aa, &moment_adag_a] {
            if m.nrows() != n || m.ncols() != n {
                return Err(HoloError::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        let scale = 1.0 + moment_adag_a.iter().chain(moment_aa.iter()).map(|z| z.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * scale;
        for j in 0..n {
            for k in 0..n {
                if (moment_aa[(j, k)] - moment_aa[(k, j)]).norm() > tol {
                    return domain("anomalous moment matrix is not symmetric");
                }
                if (moment_adag_a[(j, k)] - moment_adag_a[(k, j)].conj()).norm() > tol {
                    return domain("normal moment matrix is not Hermitian");
                }
            }
            if moment_adag_a[(j, j)].re < -tol {
                return domain("negative mean fluctuation photon number");
            }
        }
        Ok(Self {
            displacement,
            moment_aa,
            moment_adag_a,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.displacement.len()
    }

    pub fn displacement(&self) -> &DVector<Complex64> {
        &self.displacement
    }

    /// `<δa_j δa_k>`.
    pub fn moment_aa(&self) -> &DMatrix<Complex64> {
        &self.moment_aa
    }

    /// `<δa_j† δa_k>`.
    pub fn moment_adag_a(&self) -> &DMatrix<Complex64> {
        &self.moment_adag_a
    }

    /// `<a_k† a_k>` including the coherent part.
    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        Ok(self.displacement[mode].norm_sqr() + self.moment_adag_a[(mode, mode)].re)
    }

    pub fn total_photon_number(&self) -> f64 {
        (0..self.num_modes())
            .map(|k| self.displacement[k].norm_sqr() + self.moment_adag_a[(k, k)].re)
            .sum()
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(HoloError::UnknownMode {
                mode,
                num_modes: self.num_modes(),
            });
        }
        Ok(())
    }

    /// Independent juxtaposition: modes of `other` are appended after `self`.
    pub fn direct_sum(&self, other: &GaussianState) -> GaussianState {
        let (n, m) = (self.num_modes(), other.num_modes());
        let mut out = GaussianState::vacuum(n + m);
        out.displacement.rows_mut(0, n).copy_from(&self.displacement);
        out.displacement.rows_mut(n, m).copy_from(&other.displacement);
        out.moment_aa.view_mut((0, 0), (n, n)).copy_from(&self.moment_aa);
        out.moment_aa.view_mut((n, n), (m, m)).copy_from(&other.moment_aa);
        out.moment_adag_a
            .view_mut((0, 0), (n, n))
            .copy_from(&self.moment_adag_a);
        out.moment_adag_a
            .view_mut((n, n), (m, m))
            .copy_from(&other.moment_adag_a);
        out
    }

    /// Appends `count` vacuum modes.
    pub fn with_vacuum_modes(&self, count: usize) -> GaussianState {
        self.direct_sum(&GaussianState::vacuum(count))
    }

    /// Reorders modes: mode `k` of the result is mode `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<GaussianState> {
        let n = self.num_modes();
        if order.len() != n {
            return Err(HoloError::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        let mut seen = vec![false; n];
        for &k in order {
            self.check_mode(k)?;
            if std::mem::replace(&mut seen[k], true) {
                return domain("permutation repeats a mode");
            }
        }
        Ok(GaussianState {
            displacement: DVector::from_fn(n, |i, _| self.displacement[order[i]]),
            moment_aa: DMatrix::from_fn(n, n, |i, j| self.moment_aa[(order[i], order[j])]),
            moment_adag_a: DMatrix::from_fn(n, n, |i, j| self.moment_adag_a[(order[i], order[j])]),
        })
    }

    /// Reduced state of a subset of modes.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        for &k in modes {
            self.check_mode(k)?;
        }
        let n = modes.len();
        Ok(GaussianState {
            displacement: DVector::from_fn(n, |i, _| self.displacement[modes[i]]),
            moment_aa: DMatrix::from_fn(n, n, |i, j| self.moment_aa[(modes[i], modes[j])]),
            moment_adag_a: DMatrix::from_fn(n, n, |i, j| self.moment_adag_a[(modes[i], modes[j])]),
        })
    }

    /// Hermitian matrix `<ξ ξ†>` with `ξ = (δa, δa†)`:
    ///
    /// ```text
    /// [ Nᵀ + I   A ]
    /// [ A*       N ]
    /// ```
    ///
    /// It is positive semidefinite for every physical state.
    pub fn physicality_matrix(&self) -> DMatrix<Complex64> {
        let n = self.num_modes();
        let nn = &self.moment_adag_a;
        let aa = &self.moment_aa;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => nn[(j, i)] + if i == j { Complex64::new(1.0, 0.0) } else { ZERO },
            (true, false) => aa[(i, j - n)],
            (false, true) => aa[(i - n, j)].conj(),
            (false, false) => nn[(i - n, j - n)],
        })
    }

    /// Smallest eigenvalue of [`Self::physicality_matrix`].
    pub fn min_physicality_eigenvalue(&self) -> f64 {
        if self.num_modes() == 0 {
            return 0.0;
        }
        self.physicality_matrix()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// True when the physicality matrix has no eigenvalue below `-tol`
    /// (relative to its largest entry).
    pub fn is_physical(&self, tol: f64) -> bool {
        let m = self.physicality_matrix();
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        self.min_physicality_eigenvalue() >= -tol * scale
    }

    pub(crate) fn from_parts_unchecked(
        displacement: DVector<Complex64>,
        moment_aa: DMatrix<Complex64>,
        moment_adag_a: DMatrix<Complex64>,
    ) -> Self {
        Self {
            displacement,
            moment_aa,
            moment_adag_a,
        }
    }
}

/// Coherent state `|α>` with `α = √μ e^{iθ}`.
pub fn prepare_coherent(mu: f64, theta_alpha: f64) -> Result<GaussianState> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return domain(format!("coherent mean photon number must be >= 0, got {mu}"));
    }
    let mut s = GaussianState::vacuum(1);
    s.displacement[0] = Complex64::from_polar(mu.sqrt(), theta_alpha);
    Ok(s)
}

/// Single-mode squeezed vacuum with `λ = sinh² r` mean photons.
///
/// `<δa δa> = e^{2iθ} √(λ(1+λ))`, `<δa† δa> = λ`.
pub fn prepare_squeezed_vacuum(lambda: f64, theta_xi: f64) -> Result<GaussianState> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("squeezed mean photon number must be >= 0, got {lambda}"));
    }
    let mut s = GaussianState::vacuum(1);
    s.moment_adag_a[(0, 0)] = lambda.into();
    s.moment_aa[(0, 0)] = Complex64::from_polar((lambda * (1.0 + lambda)).sqrt(), 2.0 * theta_xi);
    Ok(s)
}

/// Two-mode squeezed vacuum (twin beam) with `λ` mean photons per mode.
///
/// `<δa₁ δa₂> = e^{2iθ} √(λ(1+λ))`; each mode alone is thermal.
pub fn prepare_twb(lambda: f64, theta_zeta: f64) -> Result<GaussianState> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("twin-beam mean photon number must be >= 0, got {lambda}"));
    }
    let mut s = GaussianState::vacuum(2);
    s.moment_adag_a[(0, 0)] = lambda.into();
    s.moment_adag_a[(1, 1)] = lambda.into();
    let c = Complex64::from_polar((lambda * (1.0 + lambda)).sqrt(), 2.0 * theta_zeta);
    s.moment_aa[(0, 1)] = c;
    s.moment_aa[(1, 0)] = c;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_has_no_fluctuation_moments() {
        let s = prepare_coherent(4.0, 0.0).unwrap();
        assert_eq!(s.displacement()[0], Complex64::new(2.0, 0.0));
        assert!(s.moment_aa().iter().all(|z| *z == ZERO));
        assert!(s.moment_adag_a().iter().all(|z| *z == ZERO));
        assert_eq!(s.mean_photon_number(0).unwrap(), 4.0);
    }

    #[test]
    fn zero_photon_preparations_are_vacuum() {
        let vac = GaussianState::vacuum(1);
        assert_eq!(prepare_coherent(0.0, 1.3).unwrap(), vac);
        let sq = prepare_squeezed_vacuum(0.0, 0.7).unwrap();
        assert_eq!(sq.moment_aa()[(0, 0)].norm(), 0.0);
        assert_eq!(sq.mean_photon_number(0).unwrap(), 0.0);
        let twb = prepare_twb(0.0, 0.2).unwrap();
        assert_eq!(twb.total_photon_number(), 0.0);
        assert_eq!(twb.moment_aa()[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn negative_photon_numbers_are_rejected() {
        assert!(matches!(prepare_coherent(-1.0, 0.0), Err(HoloError::Domain(_))));
        assert!(matches!(prepare_squeezed_vacuum(-1e-9, 0.0), Err(HoloError::Domain(_))));
        assert!(matches!(prepare_twb(f64::NAN, 0.0), Err(HoloError::Domain(_))));
    }

    #[test]
    fn squeezed_moments_follow_phase_convention() {
        let s = prepare_squeezed_vacuum(0.5, 0.0).unwrap();
        assert!((s.moment_aa()[(0, 0)].re - 0.75f64.sqrt()).abs() < 1e-15);
        let s = prepare_squeezed_vacuum(0.5, std::f64::consts::FRAC_PI_4).unwrap();
        // e^{2iθ} with θ = π/4 is purely imaginary
        assert!(s.moment_aa()[(0, 0)].re.abs() < 1e-15);
        assert!((s.moment_aa()[(0, 0)].im - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn twb_marginals_are_thermal() {
        let s = prepare_twb(0.7, 0.3).unwrap();
        for k in 0..2 {
            let m = s.reduced(&[k]).unwrap();
            assert_eq!(m.moment_adag_a()[(0, 0)].re, 0.7);
            assert_eq!(m.moment_aa()[(0, 0)], ZERO);
        }
    }

    #[test]
    fn prepared_states_are_physical() {
        for lam in [0.0, 0.1, 1.0, 50.0] {
            assert!(prepare_squeezed_vacuum(lam, 0.4).unwrap().is_physical(1e-10));
            assert!(prepare_twb(lam, -0.3).unwrap().is_physical(1e-10));
        }
        assert!(prepare_coherent(9.0, 1.0).unwrap().is_physical(1e-12));
    }

    #[test]
    fn overdrawn_anomalous_moment_is_unphysical() {
        let mut s = prepare_squeezed_vacuum(0.5, 0.0).unwrap();
        s.moment_aa[(0, 0)] *= 1.5;
        assert!(!s.is_physical(1e-10));
    }

    #[test]
    fn permutation_and_direct_sum() {
        let a = prepare_squeezed_vacuum(0.5, 0.0).unwrap();
        let b = prepare_coherent(2.0, 0.0).unwrap();
        let s = a.direct_sum(&b);
        let p = s.permuted(&[1, 0]).unwrap();
        assert!((p.mean_photon_number(0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(p.mean_photon_number(1).unwrap(), 0.5);
        assert!(s.permuted(&[0, 0]).is_err());
        assert!(matches!(s.mean_photon_number(2), Err(HoloError::UnknownMode { .. })));
    }
}
