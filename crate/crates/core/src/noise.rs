//! Monte Carlo check of the covariance estimator.
//!
//! Phase noise is drawn from a bivariate normal law with correlation `rho`
//! (configuration ∥) and from the same marginals without correlation
//! (configuration ⊥). The quantum expectation of `Ĉ` at each drawn phase pair
//! is exact; only the phase noise, and optionally the detector outcome, is
//! sampled.
//!
//! `<Ĉ>(φ₁, φ₂)` is a trigonometric polynomial of degree at most two in each
//! phase, and `Var[Ĉ]` of degree at most four, because every output mode is
//! linear in `cos(φ/2)` and `sin(φ/2)`. Both are therefore interpolated exactly
//! from a small grid of engine evaluations.

use std::f64::consts::TAU;

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, HoloError, Result};
use crate::holometer::{Holometer, HolometerConfig, ObservableSpec};

/// Phase noise above this standard deviation leaves the small-fluctuation regime.
pub const SIGMA_WARN: f64 = 0.1;

/// Correlated phase-noise law around the working point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub rho: f64,
    pub centers: (f64, f64),
}

/// One draw for each configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDraw {
    pub parallel: (f64, f64),
    pub perpendicular: (f64, f64),
}

impl NoiseModel {
    pub fn new(sigma: f64, rho: f64, centers: (f64, f64)) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return domain(format!("sigma must be finite and >= 0, got {sigma}"));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return domain(format!("rho must lie in [-1, 1], got {rho}"));
        }
        if !centers.0.is_finite() || !centers.1.is_finite() {
            return domain("phase centres must be finite");
        }
        Ok(Self { sigma, rho, centers })
    }

    /// Noise centred on the working point of `config`.
    pub fn at_working_point(sigma: f64, rho: f64, config: &HolometerConfig) -> Result<Self> {
        Self::new(sigma, rho, (config.phi0_1, config.phi0_2))
    }

    /// Injected covariance `ρσ²`.
    pub fn covariance(&self) -> f64 {
        self.rho * self.sigma * self.sigma
    }

    /// Sample `index` of the stream `seed`. Each sample owns a counter-based
    /// stream, so draws do not depend on evaluation order.
    pub fn draw(&self, seed: u64, index: u64) -> PhaseDraw {
        let mut rng = sample_rng(seed, index);
        self.draw_with(&mut rng)
    }

    fn draw_with(&self, rng: &mut ChaCha8Rng) -> PhaseDraw {
        let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let s = self.sigma;
        let (c1, c2) = self.centers;
        let r = self.rho;
        PhaseDraw {
            parallel: (c1 + s * z[0], c2 + s * (r * z[0] + (1.0 - r * r).sqrt() * z[1])),
            perpendicular: (c1 + s * z[2], c2 + s * z[3]),
        }
    }
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// What a single Monte Carlo sample records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Fidelity {
    /// The exact quantum expectation at the drawn phases.
    #[default]
    ExactExpectation,
    /// One detector outcome, normal with the exact mean and variance.
    ShotLevel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub true_value: f64,
}

impl EstimationResult {
    /// `|estimate − truth|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.true_value).abs() / self.std_error
    }
}

/// Tensor-product trigonometric interpolant on the torus, exact for
/// trigonometric polynomials of degree at most `degree` in each variable.
#[derive(Clone, Debug)]
pub struct TrigSurface {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl TrigSurface {
    pub fn fit<F>(degree: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        let n = 2 * degree + 1;
        let node = |j: usize| TAU * j as f64 / n as f64;
        let values: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|idx| f(node(idx / n), node(idx % n)))
            .collect::<Result<_>>()?;
        let k = degree as i64;
        let mut coeffs = Vec::with_capacity(n * n);
        for m in -k..=k {
            for p in -k..=k {
                let mut c = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    for l in 0..n {
                        let phase = -(m as f64 * node(j) + p as f64 * node(l));
                        c += values[j * n + l] * Complex64::from_polar(1.0, phase);
                    }
                }
                coeffs.push(c / (n * n) as f64);
            }
        }
        Ok(Self { degree, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let k = self.degree as i64;
        let n = 2 * self.degree + 1;
        let ex: Vec<Complex64> = (-k..=k).map(|m| Complex64::from_polar(1.0, m as f64 * x)).collect();
        let ey: Vec<Complex64> = (-k..=k).map(|p| Complex64::from_polar(1.0, p as f64 * y)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, exm) in ex.iter().enumerate() {
            let row = &self.coeffs[i * n..(i + 1) * n];
            let inner: Complex64 = row.iter().zip(&ey).map(|(c, e)| c * e).sum();
            acc += exm * inner;
        }
        acc.re
    }
}

/// Exact `<Ĉ>` and `Var[Ĉ]` surfaces plus the signal coefficient for one
/// configuration; reusable across seeds.
#[derive(Clone, Debug)]
pub struct Campaign {
    noise: NoiseModel,
    signal: f64,
    mean: TrigSurface,
    variance: Option<TrigSurface>,
    fidelity: Fidelity,
}

impl Campaign {
    /// The noise centres replace the working point of `config`.
    pub fn new(config: &HolometerConfig, spec: ObservableSpec, noise: NoiseModel, fidelity: Fidelity) -> Result<Self> {
        if noise.sigma > SIGMA_WARN {
            warn!(
                "phase noise sigma = {} rad exceeds {SIGMA_WARN}; third-order terms may bias the estimate",
                noise.sigma
            );
        }
        let mut cfg = *config;
        cfg.phi0_1 = noise.centers.0;
        cfg.phi0_2 = noise.centers.1;
        let h = Holometer::new(&cfg, spec)?;
        let signal = h.signal_coefficient()?;
        if signal == 0.0 || !signal.is_finite() {
            return Err(HoloError::InsensitiveConfiguration(signal));
        }
        let mean = TrigSurface::fit(2, |x, y| h.mean(x, y))?;
        let variance = match fidelity {
            Fidelity::ExactExpectation => None,
            Fidelity::ShotLevel => Some(TrigSurface::fit(4, |x, y| h.variance(x, y))?),
        };
        Ok(Self {
            noise,
            signal,
            mean,
            variance,
            fidelity,
        })
    }

    pub fn signal_coefficient(&self) -> f64 {
        self.signal
    }

    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    /// Exact `<Ĉ>` at the given phases.
    pub fn mean_at(&self, phi1: f64, phi2: f64) -> f64 {
        self.mean.eval(phi1, phi2)
    }

    /// Exact `Var[Ĉ]` at the given phases, if the campaign is shot level.
    pub fn variance_at(&self, phi1: f64, phi2: f64) -> Option<f64> {
        self.variance.as_ref().map(|v| v.eval(phi1, phi2))
    }

    fn observe(&self, rng: &mut ChaCha8Rng, phases: (f64, f64)) -> Result<f64> {
        if !phases.0.is_finite() || !phases.1.is_finite() {
            return Err(HoloError::Numerical(format!("non-finite phases {phases:?}")));
        }
        let m = self.mean.eval(phases.0, phases.1);
        let v = match &self.variance {
            None => return Ok(m),
            Some(s) => s.eval(phases.0, phases.1),
        };
        let z: f64 = StandardNormal.sample(rng);
        Ok(m + v.max(0.0).sqrt() * z)
    }

    /// Runs `n_samples` paired draws and forms `(Ē_∥ − Ē_⊥) / signal`.
    pub fn run(&self, n_samples: usize, seed: u64) -> Result<EstimationResult> {
        if n_samples < 2 {
            return domain(format!("need at least 2 samples, got {n_samples}"));
        }
        let pairs: Vec<(f64, f64)> = (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let d = self.noise.draw_with(&mut rng);
                Ok((self.observe(&mut rng, d.parallel)?, self.observe(&mut rng, d.perpendicular)?))
            })
            .collect::<Result<_>>()?;
        let n = n_samples as f64;
        let (sp, sq) = pairs.iter().fold((0.0, 0.0), |(a, b), (p, q)| (a + p, b + q));
        let (mp, mq) = (sp / n, sq / n);
        let (vp, vq) = pairs.iter().fold((0.0, 0.0), |(a, b), (p, q)| {
            (a + (p - mp) * (p - mp), b + (q - mq) * (q - mq))
        });
        let (vp, vq) = (vp / (n - 1.0), vq / (n - 1.0));
        let estimate = (mp - mq) / self.signal;
        let std_error = ((vp + vq) / n).sqrt() / self.signal.abs();
        if !estimate.is_finite() || !std_error.is_finite() {
            return Err(HoloError::Numerical("non-finite campaign statistics".into()));
        }
        Ok(EstimationResult {
            estimate,
            std_error,
            n_samples,
            true_value: self.noise.covariance(),
        })
    }
}

/// Recovers the injected phase covariance from exact expectations averaged
/// over sampled phase noise. Deterministic for a given seed.
pub fn run_campaign(
    config: &HolometerConfig,
    spec: ObservableSpec,
    noise: NoiseModel,
    n_samples: usize,
    seed: u64,
) -> Result<EstimationResult> {
    Campaign::new(config, spec, noise, Fidelity::ExactExpectation)?.run(n_samples, seed)
}

/// Draws detector outcomes for `Ĉ` at fixed phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotSampler {
    mean: f64,
    std: f64,
}

impl ShotSampler {
    pub fn new(config: &HolometerConfig, spec: ObservableSpec, phases: (f64, f64)) -> Result<Self> {
        let h = Holometer::new(config, spec)?;
        let mean = h.mean(phases.0, phases.1)?;
        let mut var = h.variance(phases.0, phases.1)?;
        if var < 0.0 {
            warn!("negative variance {var} clamped to 0");
            var = 0.0;
        }
        Ok(Self { mean, std: var.sqrt() })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    pub fn sample(&self, seed: u64, index: u64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut sample_rng(seed, index));
        self.mean + self.std * z
    }
}

/// One simulated detector outcome for `Ĉ` at the given phases.
pub fn sample_noise_observation(
    config: &HolometerConfig,
    spec: ObservableSpec,
    phases: (f64, f64),
    seed: u64,
) -> Result<f64> {
    Ok(ShotSampler::new(config, spec, phases)?.sample(seed, 0))
}
