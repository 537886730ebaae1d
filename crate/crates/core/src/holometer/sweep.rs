use rayon::prelude::*;

use crate::error::{HoloError, Result};

use super::config::HolometerConfig;
use super::observable::{Holometer, ObservableSpec};

/// One row of an efficiency sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyPoint {
    pub eta: f64,
    /// `U⁽⁰⁾(η) / U⁽⁰⁾_CL(η)`; NaN where either configuration is insensitive.
    pub ratio: f64,
}

/// `U⁽⁰⁾ / U⁽⁰⁾_CL` at one efficiency. The classical baseline uses the same
/// `μ` and `η` at its own best working point.
pub(crate) fn efficiency_ratio(config: &HolometerConfig, spec: ObservableSpec, eta: f64) -> Result<f64> {
    let cfg = config.with_eta(eta)?;
    let base = HolometerConfig::classical(config.mu)?.with_eta(eta)?;
    let base_spec = ObservableSpec::for_family(base.family);
    let u = Holometer::new(&cfg, spec)?.u0();
    let u_cl = Holometer::new(&base, base_spec)?.u0();
    match (u, u_cl) {
        (Ok(u), Ok(u_cl)) => Ok(u / u_cl),
        (Err(HoloError::InsensitiveConfiguration(_)), _) | (_, Err(HoloError::InsensitiveConfiguration(_))) => {
            Ok(f64::NAN)
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Ratio to the classical baseline over a grid of efficiencies, in grid order.
pub fn efficiency_sweep(
    config: &HolometerConfig,
    spec: ObservableSpec,
    eta_grid: &[f64],
) -> Result<Vec<EfficiencyPoint>> {
    eta_grid
        .par_iter()
        .map(|&eta| {
            Ok(EfficiencyPoint {
                eta,
                ratio: efficiency_ratio(config, spec, eta)?,
            })
        })
        .collect()
}

/// Efficiency in `[lo, hi]` where the ratio crosses one, by bisection.
/// `None` if the ratio does not change side across the bracket.
pub fn efficiency_crossing(
    config: &HolometerConfig,
    spec: ObservableSpec,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    let f = |eta: f64| efficiency_ratio(config, spec, eta).map(|r| r - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if !(fa * fb <= 0.0) {
        return Ok(None);
    }
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.is_nan() {
            return Ok(None);
        }
        if (fm <= 0.0) == (fa <= 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
