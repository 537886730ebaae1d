use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::state::GaussianState;
use crate::error::{domain, HoloError, Result};
use crate::operator::{Ladder, OperatorPolynomial};

const UNITARITY_TOL: f64 = 1e-12;

/// Passive linear transformation of mode operators.
///
/// The map acts on the listed `targets` plus `ancilla_count` fresh vacuum modes
/// that are appended to the state when the map is applied. Local index order
/// is `targets..., ancillas...`; output `i` equals `sum_j matrix_u[i,j] * input_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOpticalMap {
    targets: Vec<usize>,
    matrix_u: DMatrix<Complex64>,
    ancilla_count: usize,
}

impl LinearOpticalMap {
    pub fn new(targets: Vec<usize>, matrix_u: DMatrix<Complex64>, ancilla_count: usize) -> Result<Self> {
        let dim = targets.len() + ancilla_count;
        if matrix_u.nrows() != dim || matrix_u.ncols() != dim {
            return Err(HoloError::DimensionMismatch {
                expected: dim,
                found: matrix_u.nrows(),
            });
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return domain(format!("map targets mode {t} twice"));
            }
        }
        let map = Self {
            targets,
            matrix_u,
            ancilla_count,
        };
        let err = map.unitarity_error();
        if err > UNITARITY_TOL {
            return domain(format!("map is not unitary (max |U†U - I| = {err:e})"));
        }
        Ok(map)
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix_u(&self) -> &DMatrix<Complex64> {
        &self.matrix_u
    }

    pub fn ancilla_count(&self) -> usize {
        self.ancilla_count
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let u = &self.matrix_u;
        let g = u.adjoint() * u;
        let n = g.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        err
    }

    /// Global mode index of every local slot, for a state that has `n` modes
    /// before the map is applied.
    fn slots(&self, n: usize) -> Vec<usize> {
        self.targets
            .iter()
            .copied()
            .chain(n..n + self.ancilla_count)
            .collect()
    }

    /// Embeds the map in the full `(n + ancillas)`-mode space.
    pub fn embed(&self, n: usize) -> Result<DMatrix<Complex64>> {
        if let Some(&bad) = self.targets.iter().find(|&&t| t >= n) {
            return Err(HoloError::UnknownMode { mode: bad, num_modes: n });
        }
        let total = n + self.ancilla_count;
        let slots = self.slots(n);
        let mut full = DMatrix::<Complex64>::identity(total, total);
        for (i, &gi) in slots.iter().enumerate() {
            for (j, &gj) in slots.iter().enumerate() {
                full[(gi, gj)] = self.matrix_u[(i, j)];
            }
        }
        Ok(full)
    }

    /// Heisenberg-picture pullback: rewrites a polynomial in the map's output
    /// modes as a polynomial in its input modes. `n` is the mode count before
    /// the map; ancilla inputs get indices `n..n + ancilla_count`.
    pub fn pull_back(&self, poly: &OperatorPolynomial, n: usize) -> Result<OperatorPolynomial> {
        if let Some(&bad) = self.targets.iter().find(|&&t| t >= n) {
            return Err(HoloError::UnknownMode { mode: bad, num_modes: n });
        }
        let slots = self.slots(n);
        let u = &self.matrix_u;
        Ok(poly.substitute(|l: Ladder| {
            let i = slots.iter().position(|&g| g == l.mode())?;
            Some(
                slots
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &gj)| {
                        let c = if l.is_dagger() { u[(i, j)].conj() } else { u[(i, j)] };
                        (c != Complex64::new(0.0, 0.0)).then(|| (c, Ladder::new(gj, l.is_dagger())))
                    })
                    .collect(),
            )
        }))
    }
}

/// Lossless interferometer acting on input modes `a`, `b`, with outputs
/// written back into the same slots:
///
/// ```text
/// c = cos(φ/2) a − i sin(φ/2) b
/// d = −cos(φ/2) b + i sin(φ/2) a
/// ```
pub fn interferometer_map(phi: f64, mode_a: usize, mode_b: usize) -> Result<LinearOpticalMap> {
    if mode_a == mode_b {
        return domain("interferometer needs two distinct modes");
    }
    let (s, c) = (0.5 * phi).sin_cos();
    let i = Complex64::i();
    let u = DMatrix::from_row_slice(
        2,
        2,
        &[c.into(), -i * s, i * s, (-c).into()],
    );
    LinearOpticalMap::new(vec![mode_a, mode_b], u, 0)
}

/// Transmission loss `c → √η c + √(1−η) v` with `v` a fresh vacuum ancilla.
pub fn loss_map(eta: f64, mode: usize) -> Result<LinearOpticalMap> {
    if !(0.0..=1.0).contains(&eta) {
        return domain(format!("efficiency must lie in [0, 1], got {eta}"));
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let u = DMatrix::from_row_slice(2, 2, &[t.into(), r.into(), (-r).into(), t.into()]);
    LinearOpticalMap::new(vec![mode], u, 1)
}

/// Balanced splitter used for the intra-arm fields:
/// `a_out = (a + b)/√2`, `b_out = (b − a)/√2`.
pub fn arm_splitter_map(mode_a: usize, mode_b: usize) -> Result<LinearOpticalMap> {
    if mode_a == mode_b {
        return domain("splitter needs two distinct modes");
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = DMatrix::from_row_slice(2, 2, &[s.into(), s.into(), (-s).into(), s.into()]);
    LinearOpticalMap::new(vec![mode_a, mode_b], u, 0)
}

/// Pushes a Gaussian state through a linear optical map.
pub fn apply_map(state: &GaussianState, map: &LinearOpticalMap) -> Result<GaussianState> {
    let n = state.num_modes();
    let u = map.embed(n)?;
    let ext = state.with_vacuum_modes(map.ancilla_count());
    let d: DVector<Complex64> = &u * ext.displacement();
    let ut = u.transpose();
    let aa = &u * ext.moment_aa() * &ut;
    let nn = u.map(|z| z.conj()) * ext.moment_adag_a() * &ut;
    Ok(GaussianState::from_parts_unchecked(d, aa, nn))
}

/// Ordered sequence of maps applied to a state with `base_modes` modes.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    base_modes: usize,
    maps: Vec<LinearOpticalMap>,
}

impl Circuit {
    pub fn new(base_modes: usize) -> Self {
        Self {
            base_modes,
            maps: Vec::new(),
        }
    }

    pub fn push(&mut self, map: LinearOpticalMap) -> Result<&mut Self> {
        let n = self.total_modes();
        if let Some(&bad) = map.targets().iter().find(|&&t| t >= n) {
            return Err(HoloError::UnknownMode { mode: bad, num_modes: n });
        }
        self.maps.push(map);
        Ok(self)
    }

    pub fn base_modes(&self) -> usize {
        self.base_modes
    }

    /// Modes after every ancilla has been adjoined.
    pub fn total_modes(&self) -> usize {
        self.base_modes + self.maps.iter().map(|m| m.ancilla_count()).sum::<usize>()
    }

    pub fn maps(&self) -> &[LinearOpticalMap] {
        &self.maps
    }

    /// Schrödinger picture: evolves the state through every map.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.num_modes() != self.base_modes {
            return Err(HoloError::DimensionMismatch {
                expected: self.base_modes,
                found: state.num_modes(),
            });
        }
        self.maps.iter().try_fold(state.clone(), |s, m| apply_map(&s, m))
    }

    /// Heisenberg picture: expresses an output-mode polynomial in terms of the
    /// input modes (base modes followed by every ancilla, in order).
    pub fn pull_back(&self, poly: &OperatorPolynomial) -> Result<OperatorPolynomial> {
        let mut before = Vec::with_capacity(self.maps.len());
        let mut n = self.base_modes;
        for m in &self.maps {
            before.push(n);
            n += m.ancilla_count();
        }
        self.maps
            .iter()
            .zip(before)
            .rev()
            .try_fold(poly.clone(), |p, (m, n)| m.pull_back(&p, n))
    }
}
