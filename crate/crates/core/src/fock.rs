//! Truncated Fock-space oracle.
//!
//! Evaluates operator polynomials over product input states by acting with
//! ladder matrices on explicit photon-number amplitudes. Linear optics is
//! handled by the caller in the Heisenberg picture (see
//! [`crate::gaussian::Circuit::pull_back`]), so only input states are ever
//! represented here. Inputs are independent clusters of one or two modes, and
//! each term factorises over clusters, which keeps the vectors small.
//!
//! This module shares no moment code with [`crate::wick`].

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{HoloError, Result};
use crate::gaussian::{prepare_coherent, prepare_squeezed_vacuum, prepare_twb, GaussianState};
use crate::operator::{Ladder, OperatorPolynomial};

/// Bound on the probability mass beyond the support.
pub const LEAKAGE_TOL: f64 = 1e-10;

/// Bound on the truncation error of a single unit-coefficient word.
pub const WORD_TOL: f64 = 1e-9;

/// One prepared input of the oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PreparedInput {
    Vacuum,
    Coherent { mu: f64, theta: f64 },
    Squeezed { lambda: f64, theta: f64 },
    /// Occupies two consecutive modes.
    TwinBeam { lambda: f64, theta: f64 },
}

impl PreparedInput {
    pub fn num_modes(&self) -> usize {
        match self {
            PreparedInput::TwinBeam { .. } => 2,
            _ => 1,
        }
    }

    /// Photon-number distribution of one mode of this input.
    fn distribution(&self) -> Distribution {
        match *self {
            PreparedInput::Vacuum => Distribution::Vacuum,
            PreparedInput::Coherent { mu, .. } => Distribution::Poisson(mu),
            PreparedInput::Squeezed { lambda, .. } => Distribution::Squeezed(lambda),
            PreparedInput::TwinBeam { lambda, .. } => Distribution::Thermal(lambda),
        }
    }

    fn validate(&self) -> Result<()> {
        let (x, name) = match *self {
            PreparedInput::Vacuum => return Ok(()),
            PreparedInput::Coherent { mu, .. } => (mu, "coherent"),
            PreparedInput::Squeezed { lambda, .. } => (lambda, "squeezed"),
            PreparedInput::TwinBeam { lambda, .. } => (lambda, "twin-beam"),
        };
        if !(x >= 0.0) || !x.is_finite() {
            return Err(HoloError::Domain(format!(
                "{name} mean photon number must be >= 0, got {x}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Distribution {
    Vacuum,
    Poisson(f64),
    Thermal(f64),
    Squeezed(f64),
}

impl Distribution {
    /// `p_n` for `n = 0, 1, ...` until the tail is numerically gone.
    fn probabilities(&self) -> Vec<f64> {
        let mut p = Vec::new();
        match *self {
            Distribution::Vacuum => p.push(1.0),
            Distribution::Poisson(mu) => {
                let mut v = (-mu).exp();
                let mut n = 0usize;
                loop {
                    p.push(v);
                    n += 1;
                    v *= mu / n as f64;
                    if n as f64 > mu && v < 1e-40 {
                        break;
                    }
                }
            }
            Distribution::Thermal(lambda) => {
                let r = lambda / (1.0 + lambda);
                let mut v = 1.0 / (1.0 + lambda);
                loop {
                    p.push(v);
                    v *= r;
                    if v < 1e-40 {
                        break;
                    }
                }
            }
            Distribution::Squeezed(lambda) => {
                let t = lambda / (1.0 + lambda);
                let mut v = 1.0 / (1.0 + lambda).sqrt();
                let mut m = 0usize;
                loop {
                    p.push(v);
                    p.push(0.0);
                    m += 1;
                    v *= t * (2 * m - 1) as f64 / (2 * m) as f64;
                    if v < 1e-40 {
                        break;
                    }
                }
            }
        }
        p
    }

    /// Smallest support `N` that keeps the tail mass beyond `N` below
    /// [`LEAKAGE_TOL`] and bounds the truncation error of any word of the
    /// given degree by [`WORD_TOL`].
    ///
    /// A word maps `|n⟩` to a multiple of a single `|n + s⟩` with `|s| ≤ degree`
    /// and weight at most `(n + degree)^{degree/2}`, so dropping amplitudes
    /// beyond `N` changes `<ψ|W|ψ>` by at most
    /// `2 Σ_{n>N} |c_n| max_{n-d ≤ m ≤ n} |c_m| (n + d)^{d/2}`.
    fn required_support(&self, degree: usize) -> usize {
        let p = self.probabilities();
        let amp: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
        let half = degree as f64 / 2.0;
        let pair: Vec<f64> = (0..p.len())
            .map(|n| {
                let reach = amp[n.saturating_sub(degree)..=n].iter().cloned().fold(0.0, f64::max);
                2.0 * amp[n] * reach * ((n + degree) as f64).powf(half)
            })
            .collect();
        let (mut mass, mut word) = (0.0, 0.0);
        let mut support = p.len();
        for n in (0..p.len()).rev() {
            // sums over indices > n
            if mass >= LEAKAGE_TOL || word >= WORD_TOL {
                break;
            }
            support = n;
            mass += p[n];
            word += pair[n];
        }
        support
    }
}

/// Smallest per-mode cutoff that keeps the tail mass below [`LEAKAGE_TOL`] and
/// the word truncation error below [`WORD_TOL`] for squeezed, twin-beam and
/// coherent inputs with the given
/// mean photon numbers, plus a margin of `degree` for raising operators.
pub fn auto_cutoff(lambda: f64, mu: f64, degree: usize) -> usize {
    let lambda = lambda.max(0.0);
    let mu = mu.max(0.0);
    let support = [
        Distribution::Squeezed(lambda),
        Distribution::Thermal(lambda),
        Distribution::Poisson(mu),
    ]
    .iter()
    .map(|d| d.required_support(degree))
    .max()
    .unwrap_or(0);
    support + degree
}

/// Oracle configuration: a per-mode photon cutoff and the product input state.
#[derive(Clone, Debug, PartialEq)]
pub struct FockConfig {
    cutoff: usize,
    inputs: Vec<PreparedInput>,
}

impl FockConfig {
    pub fn new(cutoff: usize, inputs: Vec<PreparedInput>) -> Result<Self> {
        for i in &inputs {
            i.validate()?;
        }
        Ok(Self { cutoff, inputs })
    }

    /// Configuration with a cutoff chosen by [`auto_cutoff`] for polynomials
    /// up to `degree`.
    pub fn with_auto_cutoff(inputs: Vec<PreparedInput>, degree: usize) -> Result<Self> {
        for i in &inputs {
            i.validate()?;
        }
        let cutoff = inputs
            .iter()
            .map(|i| i.distribution().required_support(degree))
            .max()
            .unwrap_or(0)
            + degree;
        Ok(Self { cutoff, inputs })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn inputs(&self) -> &[PreparedInput] {
        &self.inputs
    }

    pub fn num_modes(&self) -> usize {
        self.inputs.iter().map(|i| i.num_modes()).sum()
    }

    /// Appends `count` vacuum modes (loss ancillas).
    pub fn with_vacuum_modes(mut self, count: usize) -> Self {
        self.inputs.extend(std::iter::repeat_n(PreparedInput::Vacuum, count));
        self
    }

    /// Cutoff needed so that every input leaks less than [`LEAKAGE_TOL`] for
    /// polynomials of the given degree.
    pub fn required_cutoff(&self, degree: usize) -> usize {
        self.inputs
            .iter()
            .filter(|i| !matches!(i, PreparedInput::Vacuum))
            .map(|i| i.distribution().required_support(degree))
            .max()
            .unwrap_or(0)
            + degree
    }

    /// The same input state as a Gaussian state, mode for mode.
    pub fn gaussian_equivalent(&self) -> Result<GaussianState> {
        let mut state = GaussianState::vacuum(0);
        for i in &self.inputs {
            let part = match *i {
                PreparedInput::Vacuum => GaussianState::vacuum(1),
                PreparedInput::Coherent { mu, theta } => prepare_coherent(mu, theta)?,
                PreparedInput::Squeezed { lambda, theta } => prepare_squeezed_vacuum(lambda, theta)?,
                PreparedInput::TwinBeam { lambda, theta } => prepare_twb(lambda, theta)?,
            };
            state = state.direct_sum(&part);
        }
        Ok(state)
    }
}

/// Explicit amplitudes of one cluster on a per-mode space of size `dim`.
struct Cluster {
    first_mode: usize,
    modes: usize,
    dim: usize,
    amplitudes: Vec<Complex64>,
}

impl Cluster {
    fn build(input: &PreparedInput, first_mode: usize, support: usize, dim: usize) -> Self {
        let modes = input.num_modes();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim.pow(modes as u32)];
        match *input {
            PreparedInput::Vacuum => amplitudes[0] = 1.0.into(),
            PreparedInput::Coherent { mu, theta } => {
                let alpha = Complex64::from_polar(mu.sqrt(), theta);
                let mut c = Complex64::new((-mu / 2.0).exp(), 0.0);
                for (n, amp) in amplitudes.iter_mut().enumerate().take(support + 1) {
                    *amp = c;
                    c *= alpha / ((n + 1) as f64).sqrt();
                }
            }
            PreparedInput::Squeezed { lambda, theta } => {
                let step = Complex64::from_polar((lambda / (1.0 + lambda)).sqrt(), 2.0 * theta);
                let mut c = Complex64::new((1.0 + lambda).powf(-0.25), 0.0);
                let mut m = 0;
                while 2 * m <= support {
                    amplitudes[2 * m] = c;
                    m += 1;
                    c *= step * (((2 * m - 1) as f64) / ((2 * m) as f64)).sqrt();
                }
            }
            PreparedInput::TwinBeam { lambda, theta } => {
                let step = Complex64::from_polar((lambda / (1.0 + lambda)).sqrt(), 2.0 * theta);
                let mut c = Complex64::new(1.0 / (1.0 + lambda).sqrt(), 0.0);
                for n in 0..=support {
                    amplitudes[n * dim + n] = c;
                    c *= step;
                }
            }
        }
        Self {
            first_mode,
            modes,
            dim,
            amplitudes,
        }
    }

    fn contains(&self, mode: usize) -> bool {
        mode >= self.first_mode && mode < self.first_mode + self.modes
    }

    /// `<ψ| word |ψ>` with the word restricted to this cluster.
    fn expectation(&self, word: &[Ladder]) -> Complex64 {
        let mut v = self.amplitudes.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); v.len()];
        for &l in word.iter().rev() {
            self.apply(l, &v, &mut scratch);
            std::mem::swap(&mut v, &mut scratch);
        }
        self.amplitudes
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn apply(&self, l: Ladder, src: &[Complex64], dst: &mut [Complex64]) {
        let local = l.mode() - self.first_mode;
        // stride of the acted-on mode: last mode varies fastest
        let stride = self.dim.pow((self.modes - 1 - local) as u32);
        let dim = self.dim;
        for (idx, out) in dst.iter_mut().enumerate() {
            let n = (idx / stride) % dim;
            *out = if l.is_dagger() {
                // (a† ψ)_n = √n ψ_{n-1}
                if n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    src[idx - stride] * (n as f64).sqrt()
                }
            } else if n + 1 < dim {
                // (a ψ)_n = √(n+1) ψ_{n+1}
                src[idx + stride] * ((n + 1) as f64).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
}

/// Exact small-space vacuum contraction for a word on one vacuum mode.
fn vacuum_expectation(word: &[Ladder]) -> Complex64 {
    let raises = word.iter().filter(|l| l.is_dagger()).count();
    let lowers = word.len() - raises;
    if raises != lowers {
        return Complex64::new(0.0, 0.0);
    }
    let cluster = Cluster::build(&PreparedInput::Vacuum, word.first().map_or(0, |l| l.mode()), 0, raises + 1);
    cluster.expectation(word)
}

/// `<P>` on the configured product input state, by brute force in Fock space.
pub fn oracle_expectation(poly: &OperatorPolynomial, config: &FockConfig) -> Result<Complex64> {
    let num_modes = config.num_modes();
    if let Some(m) = poly.max_mode() {
        if m >= num_modes {
            return Err(HoloError::UnknownMode { mode: m, num_modes });
        }
    }
    let degree = poly.degree();
    let required = config.required_cutoff(degree);
    if config.cutoff < required {
        return Err(HoloError::Leakage {
            cutoff: config.cutoff,
            required,
        });
    }
    let support = config.cutoff - degree;
    let dim = config.cutoff + 1;

    let mut clusters: Vec<Option<Cluster>> = Vec::with_capacity(config.inputs.len());
    let mut owner = vec![0usize; num_modes];
    let mut first = 0;
    for (ci, input) in config.inputs.iter().enumerate() {
        for k in 0..input.num_modes() {
            owner[first + k] = ci;
        }
        clusters.push(match input {
            PreparedInput::Vacuum => None,
            _ => Some(Cluster::build(input, first, support, dim)),
        });
        first += input.num_modes();
    }

    let mut cache: HashMap<(usize, Vec<Ladder>), Complex64> = HashMap::new();
    let mut total = Complex64::new(0.0, 0.0);
    for (coeff, word) in poly.terms() {
        let mut parts: Vec<(usize, Vec<Ladder>)> = Vec::new();
        for &l in word.iter() {
            let ci = owner[l.mode()];
            match parts.iter_mut().find(|(c, _)| *c == ci) {
                Some((_, w)) => w.push(l),
                None => parts.push((ci, vec![l])),
            }
        }
        let mut value = *coeff;
        for (ci, sub) in parts {
            let key = (ci, sub);
            let v = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = match &clusters[key.0] {
                        Some(c) => {
                            debug_assert!(key.1.iter().all(|l| c.contains(l.mode())));
                            c.expectation(&key.1)
                        }
                        None => vacuum_expectation(&key.1),
                    };
                    cache.insert(key, v);
                    v
                }
            };
            value *= v;
            if value == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        total += value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn number(k: usize) -> OperatorPolynomial {
        OperatorPolynomial::number(k)
    }

    #[test]
    fn coherent_mean_photon_number() {
        let cfg = FockConfig::new(30, vec![PreparedInput::Coherent { mu: 0.5, theta: 0.3 }]).unwrap();
        let v = oracle_expectation(&number(0), &cfg).unwrap();
        assert!((v.re - 0.5).abs() < 1e-12 && v.im.abs() < 1e-14);
        let cfg = FockConfig::new(40, vec![PreparedInput::Coherent { mu: 4.0, theta: 0.0 }]).unwrap();
        let v = oracle_expectation(&number(0), &cfg).unwrap();
        assert!((v.re - 4.0).abs() < 1e-10);
    }

    #[test]
    fn twb_difference_variance_vanishes() {
        let cfg = FockConfig::new(60, vec![PreparedInput::TwinBeam { lambda: 0.5, theta: 0.2 }]).unwrap();
        let d = OperatorPolynomial::number_difference(0, 1);
        let m1 = oracle_expectation(&d, &cfg).unwrap();
        let m2 = oracle_expectation(&d.pow(2), &cfg).unwrap();
        assert!((m2 - m1 * m1).norm() < 1e-10);
        let n = oracle_expectation(&number(0), &cfg).unwrap();
        assert!((n.re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn squeezed_anomalous_moment_magnitude() {
        let cfg = FockConfig::new(60, vec![PreparedInput::Squeezed { lambda: 0.5, theta: 0.0 }]).unwrap();
        let aa = OperatorPolynomial::monomial(1.0, &[Ladder::annihilate(0), Ladder::annihilate(0)]);
        let v = oracle_expectation(&aa, &cfg).unwrap();
        assert!((v.re - 0.75f64.sqrt()).abs() < 1e-10);
        assert!(v.im.abs() < 1e-12);
        let n = oracle_expectation(&number(0), &cfg).unwrap();
        assert!((n.re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn vacuum_words_are_exact() {
        let a = Ladder::annihilate(0);
        let ad = Ladder::create(0);
        assert!((vacuum_expectation(&[a, a, ad, ad]) - 2.0).norm() < 1e-14);
        assert!((vacuum_expectation(&[a, ad, a, ad]) - 1.0).norm() < 1e-14);
        assert_eq!(vacuum_expectation(&[ad, a]), Complex64::new(0.0, 0.0));
        assert_eq!(vacuum_expectation(&[a, a, ad]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn auto_cutoff_limits() {
        for d in [0, 2, 5, 8] {
            assert_eq!(auto_cutoff(0.0, 0.0, d), d);
        }
        let c = auto_cutoff(0.5, 1.0, 8);
        assert_eq!(c, 78, "regression value");
        assert!(c <= 80);
    }

    #[test]
    fn auto_cutoff_is_monotone() {
        let grid = [0.0, 0.05, 0.2, 0.5, 1.0, 2.0];
        for d in [2, 4, 8] {
            for (i, &l1) in grid.iter().enumerate() {
                for &l2 in &grid[i..] {
                    for (j, &m1) in grid.iter().enumerate() {
                        for &m2 in &grid[j..] {
                            assert!(auto_cutoff(l1, m1, d) <= auto_cutoff(l2, m2, d));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn insufficient_cutoff_is_refused_with_hint() {
        let cfg = FockConfig::new(10, vec![PreparedInput::Squeezed { lambda: 0.5, theta: 0.0 }]).unwrap();
        match oracle_expectation(&number(0).pow(2), &cfg) {
            Err(HoloError::Leakage { cutoff, required }) => {
                assert_eq!(cutoff, 10);
                assert!(required > 10);
            }
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn doubling_cutoff_is_stable() {
        let inputs = vec![
            PreparedInput::Squeezed { lambda: 0.5, theta: 0.4 },
            PreparedInput::Coherent { mu: 1.0, theta: -0.7 },
        ];
        let p = &(&number(0) - &number(1)).pow(3)
            + &OperatorPolynomial::monomial(1.0, &[Ladder::annihilate(0), Ladder::create(1), Ladder::annihilate(1)]);
        let base = FockConfig::with_auto_cutoff(inputs.clone(), p.degree()).unwrap();
        let big = FockConfig::new(2 * base.cutoff(), inputs).unwrap();
        let v1 = oracle_expectation(&p, &base).unwrap();
        let v2 = oracle_expectation(&p, &big).unwrap();
        assert!((v1 - v2).norm() < 1e-10, "{v1} vs {v2}");
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let cfg = FockConfig::new(5, vec![PreparedInput::Vacuum]).unwrap();
        assert!(matches!(
            oracle_expectation(&number(1), &cfg),
            Err(HoloError::UnknownMode { mode: 1, num_modes: 1 })
        ));
    }
}
