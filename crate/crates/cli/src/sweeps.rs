//! Figure sweeps and Monte Carlo campaigns.

use std::f64::consts::PI;

use rayon::prelude::*;

use holosim_core::holometer::{budget, efficiency_crossing, u0, UncertaintyBudget};
use holosim_core::noise::{Campaign, Fidelity, NoiseModel};
use holosim_core::{Family, HoloError, HolometerConfig, ObservableSpec, RadiationPressureParams};

use crate::csv::{number, Table};
use crate::params::{Decl, Params};
use crate::CliError;

const SEED: Decl = ("seed", "0", "RNG seed");
const THETA_ALPHA: Decl = ("theta_alpha", "0", "coherent phase (rad)");
const THETA_SQ: Decl = ("theta_sq", "0", "squeezing phase (rad)");
const TAU: Decl = ("tau", "1e-3", "measurement time (s)");
const MASS: Decl = ("mass", "100", "mirror mass (kg)");
const OMEGA: Decl = ("omega", "3.14e15", "optical angular frequency (rad/s)");

pub const FIG2: &[Decl] = &[
    SEED,
    ("mu", "100", "coherent photons per interferometer"),
    ("eta", "1", "detection efficiency"),
    THETA_ALPHA,
    THETA_SQ,
    ("lambda_min", "1e-2", "smallest squeezed photon number"),
    ("lambda_max", "1e2", "largest squeezed photon number"),
    ("n_lambda", "41", "log-spaced lambda points"),
    ("phi0_min", "0", "smallest working phase (rad)"),
    ("phi0_max", "3.141592653589793", "largest working phase (rad)"),
    ("n_phi0", "61", "linearly spaced working phases"),
];

pub const ETA: &[Decl] = &[
    SEED,
    ("mu", "2e23", "coherent photons per interferometer"),
    ("lambda", "0.5", "squeezed or twin-beam photons per mode"),
    THETA_ALPHA,
    THETA_SQ,
    TAU,
    MASS,
    OMEGA,
    ("eta_min", "0", "smallest efficiency"),
    ("eta_max", "1", "largest efficiency"),
    ("n_eta", "51", "linearly spaced efficiencies"),
];

pub const MU: &[Decl] = &[
    SEED,
    ("lambda", "0.5", "squeezed or twin-beam photons per mode"),
    ("eta", "0.98", "detection efficiency"),
    THETA_ALPHA,
    THETA_SQ,
    TAU,
    MASS,
    OMEGA,
    ("mu_over_r_min", "1e-6", "smallest mu / R"),
    ("mu_over_r_max", "10", "largest mu / R"),
    ("n_mu", "36", "log-spaced mu / R points"),
    ("threshold", "0.1", "relative excess of U2 over U0 that marks the threshold"),
];

pub const ESTIMATE: &[Decl] = &[
    SEED,
    ("family", "TWB", "input family: CL, SQ or TWB"),
    ("mu", "100", "coherent photons per interferometer"),
    ("lambda", "0.5", "squeezed or twin-beam photons per mode (0 for CL)"),
    ("eta", "1", "detection efficiency"),
    THETA_ALPHA,
    THETA_SQ,
    ("phi0", "auto", "working phase (rad); auto picks the family's best point"),
    ("sigma", "1e-3", "phase-noise standard deviation (rad)"),
    ("rho", "0.5", "phase-noise correlation in the parallel configuration"),
    ("n_samples", "100000", "paired draws per campaign"),
    ("campaigns", "1", "independent campaigns, seeded seed, seed + 1, ..."),
    ("fidelity", "exact", "exact: quantum expectations; shot: sampled detector outcomes"),
];

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64),
        })
        .collect()
}

fn range(p: &Params, lo: &str, hi: &str, n: &str, positive: bool) -> Result<(f64, f64, usize), CliError> {
    let (a, b, n) = (p.f64(lo)?, p.f64(hi)?, p.count(n, 2)?);
    if !(a < b) {
        return Err(CliError::usage(format!("degenerate grid: {lo} = {a} must be below {hi} = {b}")));
    }
    if positive && a <= 0.0 {
        return Err(CliError::usage(format!("{lo} must be > 0 for a log-spaced grid, got {a}")));
    }
    Ok((a, b, n))
}

fn rp_params(p: &Params) -> Result<RadiationPressureParams, CliError> {
    Ok(RadiationPressureParams::new(p.f64("tau")?, p.f64("mass")?, p.f64("omega")?)?)
}

fn config(family: Family, mu: f64, lambda: f64, p: &Params) -> Result<HolometerConfig, CliError> {
    let lambda = if family == Family::Cl { 0.0 } else { lambda };
    Ok(HolometerConfig::new(family, mu, lambda)?.with_thetas(p.f64("theta_alpha")?, p.f64("theta_sq")?)?)
}

fn new_table(command: &str, columns: &[&'static str], p: &Params) -> Table {
    let mut t = Table::new(command, columns);
    for line in p.header_lines() {
        t.note(line);
    }
    t
}

/// `None` when the configuration has no phase sensitivity.
fn budget_or_none(cfg: &HolometerConfig, rp: &RadiationPressureParams) -> Result<Option<UncertaintyBudget>, CliError> {
    match budget(cfg, ObservableSpec::for_family(cfg.family), rp) {
        Ok(b) => Ok(Some(b)),
        Err(HoloError::InsensitiveConfiguration(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// `log10 U⁽⁰⁾` of the squeezed holometer over working phase and squeezing.
pub fn fig2(p: &Params) -> Result<Table, CliError> {
    let (l0, l1, nl) = range(p, "lambda_min", "lambda_max", "n_lambda", true)?;
    let (f0, f1, nf) = range(p, "phi0_min", "phi0_max", "n_phi0", false)?;
    let (mu, eta) = (p.f64("mu")?, p.f64("eta")?);
    let lambdas = logspace(l0, l1, nl);
    let phis = linspace(f0, f1, nf);
    let mut base = Vec::with_capacity(nl);
    for &lambda in &lambdas {
        base.push(config(Family::Sq, mu, lambda, p)?.with_eta(eta)?);
    }
    let spec = ObservableSpec::for_family(Family::Sq);
    let points: Vec<(usize, usize)> = (0..nl).flat_map(|i| (0..nf).map(move |j| (i, j))).collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(i, j)| match u0(&base[i].with_phi0(phis[j])?, spec) {
            Ok(u) => Ok(u.log10()),
            Err(HoloError::InsensitiveConfiguration(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<_, HoloError>>()?;

    let mut t = new_table("sweep-fig2", &["phi0", "lambda", "log10_u0"], p);
    t.note("family = SQ");
    t.note("log10_u0 = inf where the working point has no phase sensitivity");
    let step = (f1 - f0) / (nf - 1) as f64;
    let rows: Vec<&[f64]> = values.chunks(nf).collect();
    let insensitive: Vec<String> = (0..nl)
        .filter(|&i| rows[i].iter().all(|v| v.is_infinite()))
        .map(|i| number(lambdas[i]))
        .collect();
    let argmin_ok = rows
        .iter()
        .filter(|r| r.iter().any(|v| v.is_finite()))
        .all(|r| (phis[argmin(r)] - PI / 2.0).abs() <= step + 1e-12);
    if !insensitive.is_empty() {
        t.note(format!("insensitive at every phi0: lambda = {}", insensitive.join(" ")));
    }
    t.note(format!("argmin over phi0 within one grid step of pi/2 for every sensitive lambda = {argmin_ok}"));
    for (&(i, j), &v) in points.iter().zip(&values) {
        t.push(&[phis[j], lambdas[i], v]);
    }
    Ok(t)
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// `U / U⁽⁰⁾_CL` against detection efficiency, with and without radiation pressure.
pub fn eta(p: &Params) -> Result<Table, CliError> {
    let (e0, e1, n) = range(p, "eta_min", "eta_max", "n_eta", false)?;
    if e0 < 0.0 || e1 > 1.0 {
        return Err(CliError::usage(format!("efficiencies must lie in [0, 1], got [{e0}, {e1}]")));
    }
    let (mu, lambda) = (p.f64("mu")?, p.f64("lambda")?);
    let rp = rp_params(p)?;
    let cl = config(Family::Cl, mu, lambda, p)?;
    let sq = config(Family::Sq, mu, lambda, p)?;
    let twb = config(Family::Twb, mu, lambda, p)?;
    let etas = linspace(e0, e1, n);
    let rows: Vec<[f64; 5]> = etas
        .par_iter()
        .map(|&eta| {
            let b = |c: &HolometerConfig| budget_or_none(&c.with_eta(eta)?, &rp);
            let (bc, bs, bt) = (b(&cl)?, b(&sq)?, b(&twb)?);
            let base = bc.map_or(f64::NAN, |b| b.u0);
            let u0 = |x: &Option<UncertaintyBudget>| x.map_or(f64::NAN, |b| b.u0) / base;
            let u2 = |x: &Option<UncertaintyBudget>| x.map_or(f64::NAN, |b| b.u2) / base;
            Ok([eta, u0(&bs), u0(&bt), u2(&bs), u2(&bt)])
        })
        .collect::<Result<_, CliError>>()?;

    let mut t = new_table("sweep-eta", &["eta", "ratio_sq", "ratio_twb", "ratio_sq_u2", "ratio_twb_u2"], p);
    t.note(format!("R = {}", number(rp.r())));
    let lo = e0.max(1e-3);
    let crossing = if lo < e1 {
        efficiency_crossing(&twb, ObservableSpec::for_family(Family::Twb), lo, e1)?
    } else {
        None
    };
    t.note(format!(
        "ratio_twb crosses 1 at eta = {}",
        crossing.map_or("none in range".to_string(), number)
    ));
    for r in &rows {
        t.push(r);
    }
    Ok(t)
}

/// Photon-noise and radiation-pressure uncertainties against `μ / R`, in
/// units of `U⁽⁰⁾_CL` at the same `μ`.
pub fn mu(p: &Params) -> Result<Table, CliError> {
    let (x0, x1, n) = range(p, "mu_over_r_min", "mu_over_r_max", "n_mu", true)?;
    let (lambda, eta, threshold) = (p.f64("lambda")?, p.f64("eta")?, p.f64("threshold")?);
    if threshold <= 0.0 {
        return Err(CliError::usage(format!("threshold must be > 0, got {threshold}")));
    }
    let rp = rp_params(p)?;
    let r = rp.r();
    let families = [Family::Sq, Family::Twb];
    let at = |x: f64| -> Result<[Option<UncertaintyBudget>; 3], CliError> {
        let mu = x * r;
        let b = |f: Family| budget_or_none(&config(f, mu, lambda, p)?.with_eta(eta)?, &rp);
        Ok([b(Family::Cl)?, b(families[0])?, b(families[1])?])
    };
    let grid = logspace(x0, x1, n);
    let budgets: Vec<[Option<UncertaintyBudget>; 3]> =
        grid.par_iter().map(|&x| at(x)).collect::<Result<_, CliError>>()?;

    let mut t = new_table(
        "sweep-mu",
        &["mu_over_R", "ratio_sq_u0", "ratio_twb_u0", "ratio_sq_u2", "ratio_twb_u2"],
        p,
    );
    t.note(format!("R = {}", number(r)));
    for (k, f) in families.iter().enumerate() {
        let excess = |b: &[Option<UncertaintyBudget>; 3]| b[k + 1].map_or(f64::NAN, |b| b.u2 / b.u0 - 1.0 - threshold);
        let name = f.name().to_lowercase();
        let found = match grid.iter().zip(&budgets).position(|(_, b)| excess(b) > 0.0) {
            None => None,
            Some(0) => Some(grid[0]),
            Some(i) => {
                let (mut a, mut b) = (grid[i - 1].ln(), grid[i].ln());
                while b - a > 1e-10 {
                    let m = 0.5 * (a + b);
                    if excess(&at(m.exp())?) > 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                Some((0.5 * (a + b)).exp())
            }
        };
        match found {
            Some(x) => {
                t.note(format!("threshold_mu_over_R_{name} = {}", number(x)));
                t.note(format!("threshold_mu_{name} = {}", number(x * r)));
            }
            None => t.note(format!("threshold_mu_over_R_{name} = none in range")),
        }
    }
    for (&x, b) in grid.iter().zip(&budgets) {
        let base = b[0].map_or(f64::NAN, |b| b.u0);
        let u = |k: usize, second: bool| b[k].map_or(f64::NAN, |b| if second { b.u2 } else { b.u0 }) / base;
        t.push(&[x, u(1, false), u(2, false), u(1, true), u(2, true)]);
    }
    Ok(t)
}

/// Monte Carlo recovery of an injected phase covariance.
pub fn estimate(p: &Params) -> Result<Table, CliError> {
    let family: Family = p.get("family")?;
    if family == Family::Cl && p.f64("lambda")? != 0.0 {
        return Err(CliError::usage("family CL takes lambda = 0"));
    }
    let cfg = config(family, p.f64("mu")?, p.f64("lambda")?, p)?.with_eta(p.f64("eta")?)?;
    let cfg = match p.raw("phi0").trim() {
        "auto" => cfg,
        _ => cfg.with_phi0(p.f64("phi0")?)?,
    };
    let fidelity = match p.raw("fidelity").trim() {
        "exact" => Fidelity::ExactExpectation,
        "shot" => Fidelity::ShotLevel,
        other => return Err(CliError::usage(format!("fidelity must be exact or shot, got {other:?}"))),
    };
    let (n, campaigns) = (p.count("n_samples", 2)?, p.count("campaigns", 1)?);
    let seed: u64 = p.get("seed")?;
    let noise = NoiseModel::at_working_point(p.f64("sigma")?, p.f64("rho")?, &cfg)?;
    let campaign = Campaign::new(&cfg, ObservableSpec::for_family(family), noise, fidelity)?;

    let mut t = new_table(
        "estimate",
        &["campaign", "seed", "n_samples", "estimate", "std_error", "true_value", "z_score"],
        p,
    );
    t.note(format!("signal_coefficient = {}", number(campaign.signal_coefficient())));
    let mut within = 0;
    let mut rows = Vec::with_capacity(campaigns);
    for k in 0..campaigns {
        let s = seed.wrapping_add(k as u64);
        let r = campaign.run(n, s)?;
        if r.z_score() < 3.0 {
            within += 1;
        }
        rows.push(vec![
            k.to_string(),
            s.to_string(),
            r.n_samples.to_string(),
            number(r.estimate),
            number(r.std_error),
            number(r.true_value),
            number(r.z_score()),
        ]);
    }
    t.note(format!("campaigns within 3 std_error = {within} of {campaigns}"));
    for row in rows {
        t.push_cells(row);
    }
    Ok(t)
}
