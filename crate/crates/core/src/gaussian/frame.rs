use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, HoloError, Result};

use super::state::GaussianState;

/// Bogoliubov frame of a pure zero-mean fluctuation field:
/// `δa = U y + V y†` with the `y` modes in vacuum.
///
/// Moments in this frame are sums of non-negative vacuum contractions, so a
/// strongly squeezed quadrature is obtained from one cancellation in the
/// coefficients instead of from differences of `O(λ)` pair values.
#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovFrame {
    u: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
}

impl BogoliubovFrame {
    pub fn identity(num_modes: usize) -> Self {
        Self {
            u: DMatrix::identity(num_modes, num_modes),
            v: DMatrix::zeros(num_modes, num_modes),
        }
    }

    /// Frame of [`crate::gaussian::prepare_squeezed_vacuum`].
    pub fn squeezed(lambda: f64, theta: f64) -> Result<Self> {
        check(lambda)?;
        Ok(Self {
            u: DMatrix::from_element(1, 1, Complex64::new((1.0 + lambda).sqrt(), 0.0)),
            v: DMatrix::from_element(1, 1, Complex64::from_polar(lambda.sqrt(), 2.0 * theta)),
        })
    }

    /// Frame of [`crate::gaussian::prepare_twb`].
    pub fn twin_beam(lambda: f64, theta: f64) -> Result<Self> {
        check(lambda)?;
        let c = Complex64::new((1.0 + lambda).sqrt(), 0.0);
        let s = Complex64::from_polar(lambda.sqrt(), 2.0 * theta);
        let z = Complex64::new(0.0, 0.0);
        Ok(Self {
            u: DMatrix::from_row_slice(2, 2, &[c, z, z, c]),
            v: DMatrix::from_row_slice(2, 2, &[z, s, s, z]),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.u.nrows()
    }

    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<Complex64> {
        &self.v
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, m) = (self.num_modes(), other.num_modes());
        let block = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| {
            let mut out = DMatrix::zeros(n + m, n + m);
            out.view_mut((0, 0), (n, n)).copy_from(a);
            out.view_mut((n, n), (m, m)).copy_from(b);
            out
        };
        Self {
            u: block(&self.u, &other.u),
            v: block(&self.v, &other.v),
        }
    }

    pub fn with_vacuum_modes(&self, count: usize) -> Self {
        self.direct_sum(&Self::identity(count))
    }

    /// Mode `k` of the result is mode `order[k]` of `self`, matching
    /// [`GaussianState::permuted`].
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.num_modes();
        if order.len() != n {
            return Err(HoloError::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        let mut seen = vec![false; n];
        for &k in order {
            if k >= n || std::mem::replace(&mut seen[k], true) {
                return domain("invalid permutation");
            }
        }
        Ok(Self {
            u: DMatrix::from_fn(n, n, |i, j| self.u[(order[i], j)]),
            v: DMatrix::from_fn(n, n, |i, j| self.v[(order[i], j)]),
        })
    }

    /// `(<δa δaᵀ>, <δa† δaᵀ>)` implied by the frame.
    pub fn moments(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let vt = self.v.transpose();
        (&self.u * &vt, self.v.map(|z| z.conj()) * vt)
    }

    /// Largest deviation between the frame's moments and those of `state`.
    pub fn moment_error(&self, state: &GaussianState) -> Result<f64> {
        if state.num_modes() != self.num_modes() {
            return Err(HoloError::DimensionMismatch {
                expected: self.num_modes(),
                found: state.num_modes(),
            });
        }
        let (aa, nn) = self.moments();
        let da = (aa - state.moment_aa()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dn = (nn - state.moment_adag_a()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(da.max(dn))
    }
}

fn check(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("mean photon number must be >= 0, got {lambda}"));
    }
    Ok(())
}
