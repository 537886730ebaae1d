use crate::error::{domain, HoloError, Result};
use crate::gaussian::{arm_splitter_map, Circuit};
use crate::operator::OperatorPolynomial;
use crate::wick::{FluctuationPolynomial, MomentEngine};

use super::config::{HolometerConfig, RadiationPressureParams};
use super::observable::{Holometer, ObservableSpec, A1, A2, B1, B2, BASE_MODES};

/// Finite-difference step in radians.
pub const FD_STEP: f64 = 1e-3;

/// A signal below this fraction of `√<(∂²Ĉ/∂φ₁∂φ₂)²>` counts as zero.
const INSENSITIVE_REL: f64 = 1e-9;

/// Full uncertainty budget at the working point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyBudget {
    pub signal_coeff: f64,
    pub var_c0: f64,
    pub u0: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    /// `<δn²_{−,k}>` for each interferometer.
    pub rp_var: [f64; 2],
    pub rp_cov: f64,
    pub u2: f64,
}

/// Intra-arm photon-number-difference statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpMoments {
    pub var: [f64; 2],
    pub cov: f64,
}

/// Which phase a derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    First,
    Second,
}

/// `Ĉ` and its phase derivatives at the working point, in input-mode
/// fluctuation form.
#[derive(Clone, Debug)]
pub(crate) struct Derivatives {
    pub c0: FluctuationPolynomial,
    pub c1: FluctuationPolynomial,
    pub c2: FluctuationPolynomial,
    pub c11: FluctuationPolynomial,
    pub c22: FluctuationPolynomial,
    pub c12: FluctuationPolynomial,
}

/// One factor of `Ĉ` with its derivatives.
struct Jet {
    v: FluctuationPolynomial,
    d1: FluctuationPolynomial,
    d2: FluctuationPolynomial,
    d11: FluctuationPolynomial,
    d22: FluctuationPolynomial,
    d12: FluctuationPolynomial,
}

fn sub(p: &OperatorPolynomial, q: &OperatorPolynomial) -> OperatorPolynomial {
    p - q
}

/// `(4 D(h/2) − D(h)) / 3`.
fn richardson<F>(estimate: F) -> Result<OperatorPolynomial>
where
    F: Fn(f64) -> Result<OperatorPolynomial>,
{
    let coarse = estimate(FD_STEP)?;
    let fine = estimate(FD_STEP / 2.0)?;
    Ok(OperatorPolynomial::linear_combination(&[
        (4.0 / 3.0, &fine),
        (-1.0 / 3.0, &coarse),
    ]))
}

/// Finite differences of a phase-dependent polynomial `g(φ₁, φ₂)` around
/// `(p1, p2)`. Differences are nested so that coefficients not depending on
/// the differentiated phase cancel exactly.
struct Stencil<G> {
    g: G,
    p1: f64,
    p2: f64,
}

impl<G> Stencil<G>
where
    G: Fn(f64, f64) -> Result<OperatorPolynomial>,
{
    fn at(&self, axis: Axis, delta: f64) -> Result<OperatorPolynomial> {
        match axis {
            Axis::First => (self.g)(self.p1 + delta, self.p2),
            Axis::Second => (self.g)(self.p1, self.p2 + delta),
        }
    }

    fn first(&self, axis: Axis) -> Result<OperatorPolynomial> {
        richardson(|h| Ok(sub(&self.at(axis, h)?, &self.at(axis, -h)?).scale(0.5 / h)))
    }

    fn second(&self, axis: Axis) -> Result<OperatorPolynomial> {
        let centre = self.at(axis, 0.0)?;
        richardson(|h| {
            let up = sub(&self.at(axis, h)?, &centre);
            let down = sub(&centre, &self.at(axis, -h)?);
            Ok(sub(&up, &down).scale(1.0 / (h * h)))
        })
    }

    fn mixed(&self) -> Result<OperatorPolynomial> {
        richardson(|h| {
            let row = |x: f64| -> Result<OperatorPolynomial> {
                Ok(sub(&(self.g)(x, self.p2 + h)?, &(self.g)(x, self.p2 - h)?))
            };
            Ok(sub(&row(self.p1 + h)?, &row(self.p1 - h)?).scale(0.25 / (h * h)))
        })
    }
}

impl Holometer {
    fn stencil(&self, g: impl Fn(f64, f64) -> Result<OperatorPolynomial>) -> Stencil<impl Fn(f64, f64) -> Result<OperatorPolynomial>> {
        Stencil {
            g,
            p1: self.config().phi0_1,
            p2: self.config().phi0_2,
        }
    }

    /// `Ĉ` at the working point, in input modes.
    pub fn c0(&self) -> Result<OperatorPolynomial> {
        let c = self.config();
        self.heisenberg_observable(c.phi0_1, c.phi0_2)
    }

    /// `∂²Ĉ/∂φ₁∂φ₂` at the working point, in input modes, by finite
    /// differences of the whole observable.
    pub fn mixed_derivative(&self) -> Result<OperatorPolynomial> {
        self.stencil(|x, y| self.heisenberg_observable(x, y)).mixed()
    }

    fn jet(&self, index: usize) -> Result<Jet> {
        let st = self.stencil(|x, y| Ok(self.heisenberg_factors(x, y)?.1[index].clone()));
        let e = self.heisenberg_engine();
        Ok(Jet {
            v: e.fluctuation_form(&st.at(Axis::First, 0.0)?)?,
            d1: e.fluctuation_form(&st.first(Axis::First)?)?,
            d2: e.fluctuation_form(&st.first(Axis::Second)?)?,
            d11: e.fluctuation_form(&st.second(Axis::First)?)?,
            d22: e.fluctuation_form(&st.second(Axis::Second)?)?,
            d12: e.fluctuation_form(&st.mixed()?)?,
        })
    }

    /// Derivatives of `Ĉ = s F G` by the product rule on finite-difference
    /// derivatives of the quadratic factors `F` and `G`. Working factor by
    /// factor keeps large coherent amplitudes from cancelling between terms.
    pub(crate) fn derivatives(&self) -> Result<Derivatives> {
        let s = self.factors().0;
        let f = self.jet(0)?;
        let g = self.jet(1)?;
        let combo = |pairs: &[(f64, &FluctuationPolynomial, &FluctuationPolynomial)]| {
            let products: Vec<(f64, FluctuationPolynomial)> =
                pairs.iter().map(|(w, a, b)| (s * w, a.product(b))).collect();
            let refs: Vec<(f64, &FluctuationPolynomial)> = products.iter().map(|(w, p)| (*w, p)).collect();
            FluctuationPolynomial::linear_combination(&refs)
        };
        Ok(Derivatives {
            c0: combo(&[(1.0, &f.v, &g.v)]),
            c1: combo(&[(1.0, &f.d1, &g.v), (1.0, &f.v, &g.d1)]),
            c2: combo(&[(1.0, &f.d2, &g.v), (1.0, &f.v, &g.d2)]),
            c11: combo(&[(1.0, &f.d11, &g.v), (2.0, &f.d1, &g.d1), (1.0, &f.v, &g.d11)]),
            c22: combo(&[(1.0, &f.d22, &g.v), (2.0, &f.d2, &g.d2), (1.0, &f.v, &g.d22)]),
            c12: combo(&[
                (1.0, &f.d12, &g.v),
                (1.0, &f.d1, &g.d2),
                (1.0, &f.d2, &g.d1),
                (1.0, &f.v, &g.d12),
            ]),
        })
    }

    /// Exact `<Ĉ(φ₁, φ₂)>`.
    pub fn mean(&self, phi1: f64, phi2: f64) -> Result<f64> {
        self.heisenberg_engine().real_expectation_of(&self.heisenberg_fluct(phi1, phi2)?)
    }

    /// Exact `Var[Ĉ(φ₁, φ₂)]`.
    pub fn variance(&self, phi1: f64, phi2: f64) -> Result<f64> {
        self.heisenberg_engine().variance_of(&self.heisenberg_fluct(phi1, phi2)?)
    }

    pub fn signal_coefficient(&self) -> Result<f64> {
        let d = self.derivatives()?;
        self.heisenberg_engine().real_expectation_of(&d.c12)
    }

    /// The signal, or an error if it vanishes relative to the root mean
    /// square of the operator it is the mean of.
    fn checked_signal(&self) -> Result<f64> {
        let d = self.derivatives()?;
        let e = self.heisenberg_engine();
        let s = e.real_expectation_of(&d.c12)?;
        let scale = (e.variance_of(&d.c12)?.max(0.0) + s * s).sqrt();
        if !(s.abs() > INSENSITIVE_REL * scale) || s == 0.0 {
            return Err(HoloError::InsensitiveConfiguration(s));
        }
        Ok(s)
    }

    /// `√(2 Var[Ĉ]) / |<∂²Ĉ/∂φ₁∂φ₂>|` at the working point.
    pub fn u0(&self) -> Result<f64> {
        let s = self.checked_signal()?;
        let c = self.config();
        let v = self.variance(c.phi0_1, c.phi0_2)?.max(0.0);
        Ok((2.0 * v).sqrt() / s.abs())
    }

    /// Second-order coefficients `[A₁₁, A₂₂, A₁₂]` of the phase-noise
    /// expansion of `Var[Ĉ]`.
    pub fn a_coefficients(&self) -> Result<[f64; 3]> {
        let e = self.heisenberg_engine();
        let d = self.derivatives()?;
        let m1 = e.real_expectation_of(&d.c1)?;
        let m2 = e.real_expectation_of(&d.c2)?;
        let a11 = e.covariance_of(&d.c0, &d.c11)? + e.variance_of(&d.c1)? + m1 * m1;
        let a22 = e.covariance_of(&d.c0, &d.c22)? + e.variance_of(&d.c2)? + m2 * m2;
        let a12 = 2.0 * e.covariance_of(&d.c0, &d.c12)? + 2.0 * (e.covariance_of(&d.c1, &d.c2)? + m1 * m2);
        Ok([a11, a22, a12])
    }

    /// Variance of each intra-arm difference `n_{−,k}` and their covariance.
    /// The arms see the input fields through a balanced splitter, independent
    /// of the phase and of detection losses.
    pub fn rp_moments(&self) -> Result<RpMoments> {
        let mut c = Circuit::new(BASE_MODES);
        c.push(arm_splitter_map(A1, B1)?)?;
        c.push(arm_splitter_map(A2, B2)?)?;
        let e = MomentEngine::new(&c.apply(self.input_state())?);
        let n1 = OperatorPolynomial::number_difference(A1, B1);
        let n2 = OperatorPolynomial::number_difference(A2, B2);
        Ok(RpMoments {
            var: [e.variance(&n1)?, e.variance(&n2)?],
            cov: e.covariance(&n1, &n2)?,
        })
    }

    /// Complete budget including the radiation-pressure correction.
    pub fn budget(&self, rp: &RadiationPressureParams) -> Result<UncertaintyBudget> {
        let signal = self.checked_signal()?;
        let c = self.config();
        let var_c0 = self.variance(c.phi0_1, c.phi0_2)?.max(0.0);
        let [a11, a22, a12] = self.a_coefficients()?;
        let m = self.rp_moments()?;
        let r2 = rp.r_inv() * rp.r_inv();
        let second = r2 * (a11 * m.var[0] + a22 * m.var[1] + a12 * m.cov);
        Ok(UncertaintyBudget {
            signal_coeff: signal,
            var_c0,
            u0: (2.0 * var_c0).sqrt() / signal.abs(),
            a11,
            a22,
            a12,
            rp_var: m.var,
            rp_cov: m.cov,
            u2: (2.0 * (var_c0 + second)).max(0.0).sqrt() / signal.abs(),
        })
    }
}

/// Exact `<Ĉ(φ₁, φ₂)>`.
pub fn mean_c(config: &HolometerConfig, spec: ObservableSpec, phi1: f64, phi2: f64) -> Result<f64> {
    Holometer::new(config, spec)?.mean(phi1, phi2)
}

/// Exact `Var[Ĉ(φ₁, φ₂)]`.
pub fn var_c(config: &HolometerConfig, spec: ObservableSpec, phi1: f64, phi2: f64) -> Result<f64> {
    Holometer::new(config, spec)?.variance(phi1, phi2)
}

/// `<∂²Ĉ/∂φ₁∂φ₂>` at the working point. May be zero.
pub fn signal_coefficient(config: &HolometerConfig, spec: ObservableSpec) -> Result<f64> {
    Holometer::new(config, spec)?.signal_coefficient()
}

/// Zero-order uncertainty of the phase covariance.
pub fn u0(config: &HolometerConfig, spec: ObservableSpec) -> Result<f64> {
    Holometer::new(config, spec)?.u0()
}

/// Intra-arm moments for the configured input.
pub fn rp_moments(config: &HolometerConfig) -> Result<RpMoments> {
    Holometer::new(config, ObservableSpec::for_family(config.family))?.rp_moments()
}

/// Uncertainty including radiation pressure to second order in the phase noise.
pub fn u2(config: &HolometerConfig, spec: ObservableSpec, rp: &RadiationPressureParams) -> Result<f64> {
    Ok(budget(config, spec, rp)?.u2)
}

pub fn budget(
    config: &HolometerConfig,
    spec: ObservableSpec,
    rp: &RadiationPressureParams,
) -> Result<UncertaintyBudget> {
    Holometer::new(config, spec)?.budget(rp)
}

/// Closed-form `U⁽⁰⁾` for two squeezed-plus-coherent interferometers at
/// `φ₀ = π/2` with aligned phases and no loss.
pub fn u0_sq_closed(mu: f64, lambda: f64) -> Result<f64> {
    if !(mu >= 0.0) || !(lambda >= 0.0) {
        return domain(format!("need mu, lambda >= 0, got mu={mu}, lambda={lambda}"));
    }
    if mu == lambda {
        return domain("closed form is singular at mu = lambda");
    }
    let num = lambda + mu * (1.0 + 2.0 * lambda - 2.0 * (lambda + lambda * lambda).sqrt());
    Ok(std::f64::consts::SQRT_2 * num / ((lambda - mu) * (lambda - mu)))
}

/// Coherent-only baseline `√2/μ`.
pub fn u0_cl_closed(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return domain(format!("need mu > 0, got {mu}"));
    }
    u0_sq_closed(mu, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holometer::config::Family;
    use crate::holometer::observable::ObservableKind;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn sq(mu: f64, lambda: f64) -> HolometerConfig {
        HolometerConfig::new(Family::Sq, mu, lambda).unwrap()
    }

    fn twb(mu: f64, lambda: f64) -> HolometerConfig {
        HolometerConfig::new(Family::Twb, mu, lambda).unwrap()
    }

    fn product() -> ObservableSpec {
        ObservableSpec::new(ObservableKind::ProductOfDifferences)
    }

    fn squared() -> ObservableSpec {
        ObservableSpec::new(ObservableKind::SquaredDifference)
    }

    #[test]
    fn closed_forms() {
        assert!(rel(u0_cl_closed(100.0).unwrap(), 1.41421356e-2) < 1e-8);
        assert!((u0_sq_closed(100.0, 0.5).unwrap() - 3.899e-3).abs() < 5e-7);
        let approx = 1.0 / (2.0 * std::f64::consts::SQRT_2 * 1e3 * 1e9);
        assert!(rel(u0_sq_closed(1e9, 1e3).unwrap(), approx) < 0.01);
        assert!(u0_sq_closed(2.0, 2.0).is_err());
        assert!(u0_cl_closed(0.0).is_err());
    }

    #[test]
    fn sq_engine_matches_closed_form() {
        let h = Holometer::new(&sq(100.0, 0.5), product()).unwrap();
        let u = h.u0().unwrap();
        assert!(rel(u, u0_sq_closed(100.0, 0.5).unwrap()) < 1e-9, "{u}");
    }

    #[test]
    fn sq_signal_and_variance() {
        let (mu, lambda): (f64, f64) = (100.0, 0.5);
        let h = Holometer::new(&sq(mu, lambda), product()).unwrap();
        let s = h.signal_coefficient().unwrap();
        assert!(rel(s, (mu - lambda) * (mu - lambda)) < 1e-6, "{s}");
        let single = lambda + mu * (1.0 + 2.0 * lambda - 2.0 * (lambda * (1.0 + lambda)).sqrt());
        assert!((single - 27.2949_f64).abs() < 1e-4);
        let v = h.variance(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(rel(v, single * single) < 1e-9, "{v}");
    }

    #[test]
    fn heisenberg_and_schroedinger_means_agree() {
        let mut cfg = twb(3.0, 0.4).with_eta(0.8).unwrap();
        cfg.theta_alpha = 0.3;
        cfg.theta_sq = -0.2;
        for spec in [product(), squared()] {
            let h = Holometer::new(&cfg, spec).unwrap();
            for (p1, p2) in [(0.1, -0.4), (1.2, 0.7)] {
                let s = h.mean(p1, p2).unwrap();
                let hz = h
                    .heisenberg_engine()
                    .real_expectation(&h.heisenberg_observable(p1, p2).unwrap())
                    .unwrap();
                assert!((s - hz).abs() < 1e-9 * (1.0 + s.abs()), "{s} vs {hz}");
            }
        }
    }

    #[test]
    fn classical_mean_vanishes_at_centre() {
        let cfg = HolometerConfig::classical(50.0).unwrap();
        let m = mean_c(&cfg, product(), FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(m.abs() < 1e-9);
        let m = mean_c(&cfg.with_phi0(0.7).unwrap(), product(), 0.7, 0.7).unwrap();
        assert!(m.abs() < 1e-9);
    }

    #[test]
    fn twb_noise_free_point() {
        for lambda in [0.1, 0.5, 2.0] {
            for mu in [10.0, 1e3] {
                let h = Holometer::new(&twb(mu, lambda), squared()).unwrap();
                let v = h.variance(0.0, 0.0).unwrap();
                assert!(v.abs() <= 1e-12 * mu * mu, "var {v}");
                let s = h.signal_coefficient().unwrap();
                let expect = -0.5 * (lambda * (1.0 + lambda)).sqrt() * mu;
                assert!(rel(s, expect) < 1e-6, "{s} vs {expect}");
                assert_eq!(h.u0().unwrap(), (2.0 * v.max(0.0)).sqrt() / s.abs());
            }
        }
    }

    #[test]
    fn twb_signal_follows_phase_difference() {
        let (mu, lambda): (f64, f64) = (100.0, 0.5);
        for dtheta in [0.0, 0.3, -0.9, FRAC_PI_4] {
            let cfg = twb(mu, lambda).with_thetas(0.2, 0.2 + dtheta).unwrap();
            let s = signal_coefficient(&cfg, squared()).unwrap();
            let expect = -0.5 * (lambda * (1.0 + lambda)).sqrt() * mu * (2.0 * dtheta).cos();
            assert!((s - expect).abs() < 1e-6 * expect.abs().max(mu * 1e-3), "{s} vs {expect}");
        }
        let cfg = twb(mu, lambda).with_thetas(0.0, FRAC_PI_4).unwrap();
        assert!(matches!(
            u0(&cfg, squared()),
            Err(HoloError::InsensitiveConfiguration(_))
        ));
    }

    #[test]
    fn rp_moment_formulas() {
        let (mu, lambda): (f64, f64) = (1e4, 0.5);
        let s = (lambda * (1.0 + lambda)).sqrt();
        let m = rp_moments(&sq(mu, lambda)).unwrap();
        let expect = lambda + mu * (1.0 + 2.0 * lambda + 2.0 * s);
        for v in m.var {
            assert!(rel(v, expect) < 1e-9);
        }
        assert!(m.cov.abs() < 1e-9 * expect);
        let m = rp_moments(&twb(mu, lambda)).unwrap();
        for v in m.var {
            assert!(rel(v, lambda + mu * (1.0 + 2.0 * lambda)) < 1e-9);
        }
        assert!(rel(m.cov, 2.0 * mu * s) < 1e-9);
    }

    #[test]
    fn budget_is_consistent() {
        let rp = RadiationPressureParams::default();
        for (cfg, spec) in [
            (sq(1e6, 0.5).with_eta(0.9).unwrap(), product()),
            (twb(1e6, 0.5).with_eta(0.9).unwrap(), squared()),
            (HolometerConfig::classical(1e6).unwrap(), product()),
        ] {
            let h = Holometer::new(&cfg, spec).unwrap();
            let b = h.budget(&rp).unwrap();
            assert!(rel(b.u0, h.u0().unwrap()) < 1e-12);
            assert!(b.u2 >= b.u0);
            assert!(b.a11 >= 0.0 && b.a22 >= 0.0, "{b:?}");
        }
    }
}
