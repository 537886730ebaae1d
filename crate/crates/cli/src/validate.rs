//! Self-check of the engine: oracle equivalence, closed forms and invariants.

use std::fmt::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holosim_core::fock::{oracle_expectation, FockConfig, PreparedInput};
use holosim_core::gaussian::{
    apply_map, interferometer_map, loss_map, prepare_coherent, prepare_squeezed_vacuum, prepare_twb, Circuit,
    GaussianState,
};
use holosim_core::holometer::{
    budget, efficiency_crossing, rp_moments, u0, u0_cl_closed, u0_sq_closed, Holometer,
};
use holosim_core::{
    Family, HoloError, HolometerConfig, Ladder, MomentEngine, ObservableSpec, OperatorPolynomial,
    RadiationPressureParams,
};

/// One line of the report.
#[derive(Clone, Debug)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    fn at_most(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        }
    }

    /// Passes when `measured > tolerance`: the check must detect a fault.
    fn detects(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            tolerance,
            pass: measured > tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("holosim {} validate\n", env!("CARGO_PKG_VERSION"));
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut suite = "";
        for c in &self.checks {
            if c.suite != suite {
                suite = c.suite;
                writeln!(out, "\n[{suite}]").unwrap();
            }
            let op = if c.measured <= c.tolerance { "<=" } else { ">" };
            writeln!(
                out,
                "{} {:width$}  {:.3e} {op} {:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
            )
            .unwrap();
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        writeln!(out, "\n{} of {} checks passed", self.checks.len() - failed, self.checks.len()).unwrap();
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn worst(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn random_input(rng: &mut ChaCha8Rng) -> PreparedInput {
    let theta = rng.random_range(-3.2..3.2);
    match rng.random_range(0..4) {
        0 => PreparedInput::Vacuum,
        1 => PreparedInput::Coherent {
            mu: rng.random_range(0.0..=1.0),
            theta,
        },
        2 => PreparedInput::Squeezed {
            lambda: rng.random_range(0.0..=0.5),
            theta,
        },
        _ => PreparedInput::TwinBeam {
            lambda: rng.random_range(0.0..=0.5),
            theta,
        },
    }
}

fn random_polynomial(rng: &mut ChaCha8Rng, modes: usize, max_degree: usize) -> OperatorPolynomial {
    let terms = rng.random_range(1..=3);
    OperatorPolynomial::from_terms((0..terms).map(|_| {
        let len = rng.random_range(0..=max_degree);
        let word = (0..len)
            .map(|_| Ladder::new(rng.random_range(0..modes), rng.random()))
            .collect();
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        (c, word)
    }))
}

fn oracle_suite(seed: u64, mutation: Mutation, out: &mut Vec<Check>) -> Result<(), HoloError> {
    const SUITE: &str = "fock oracle";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut direct, mut optics): (f64, f64) = (0.0, 0.0);
    let cases = 240;
    for case in 0..cases {
        let inputs: Vec<PreparedInput> = (0..2).map(|_| random_input(&mut rng)).collect();
        let n: usize = inputs.iter().map(|i| i.num_modes()).sum();
        let through_optics = case % 4 == 0 && n >= 2;
        let poly = random_polynomial(&mut rng, n, if through_optics { 4 } else { 8 });
        let base = FockConfig::with_auto_cutoff(inputs, poly.degree())?;
        if through_optics {
            let mut circuit = Circuit::new(n);
            circuit.push(interferometer_map(rng.random_range(0.0..6.3), 0, 1)?)?;
            circuit.push(loss_map(rng.random_range(0.0..=1.0), 0)?)?;
            let w = MomentEngine::new(&circuit.apply(&base.gaussian_equivalent()?)?).expectation(&poly)?;
            let o = oracle_expectation(&circuit.pull_back(&poly)?, &base.with_vacuum_modes(1))?;
            optics = optics.max((w - o).norm());
        } else {
            let w = MomentEngine::new(&base.gaussian_equivalent()?).expectation(&poly)?;
            direct = direct.max((w - oracle_expectation(&poly, &base)?).norm());
        }
    }
    out.push(Check::at_most(SUITE, format!("{cases} random polynomials, degree <= 8: max |delta|"), direct, 1e-8));
    out.push(Check::at_most(SUITE, "pulled back through interferometer and loss: max |delta|", optics, 1e-8));

    let (pair, mutant) = sign_pairing(mutation)?;
    out.push(Check::at_most(SUITE, "squeezing sign pairing: max |delta|", pair, 1e-8));
    out.push(Check::detects(SUITE, "mutation: flipped squeezing sign is caught", mutant, 1e-8));
    Ok(())
}

/// Deliberate fault injected into the engine side of the sign-pairing check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    None,
    SqueezingSign,
}

impl std::str::FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Mutation::None),
            "squeezing_sign" => Ok(Mutation::SqueezingSign),
            _ => Err(format!("expected none or squeezing_sign, got {s:?}")),
        }
    }
}

/// Compares phase-sensitive moments of squeezed and twin-beam states against
/// the oracle. Returns the deviation of the engine states and of the same
/// states with the anomalous moment negated.
pub fn sign_pairing(mutation: Mutation) -> Result<(f64, f64), HoloError> {
    let words: [&[Ladder]; 4] = [
        &[Ladder::annihilate(0), Ladder::annihilate(1)],
        &[Ladder::create(0), Ladder::create(0)],
        &[Ladder::create(0), Ladder::annihilate(1), Ladder::annihilate(1), Ladder::annihilate(0)],
        &[Ladder::annihilate(0), Ladder::annihilate(0), Ladder::create(1), Ladder::annihilate(1)],
    ];
    let mut good: f64 = 0.0;
    let mut bad: f64 = 0.0;
    for (lambda, theta) in [(0.3, 0.4), (0.5, -1.1), (0.1, 2.0)] {
        let cases = [
            (
                vec![PreparedInput::Squeezed { lambda, theta }, PreparedInput::Squeezed { lambda, theta: -theta }],
                prepare_squeezed_vacuum(lambda, theta)?.direct_sum(&prepare_squeezed_vacuum(lambda, -theta)?),
            ),
            (vec![PreparedInput::TwinBeam { lambda, theta }], prepare_twb(lambda, theta)?),
        ];
        for (inputs, state) in cases {
            let state = match mutation {
                Mutation::None => state,
                Mutation::SqueezingSign => flip_anomalous(&state)?,
            };
            let flipped = flip_anomalous(&state)?;
            for word in words {
                let poly = OperatorPolynomial::monomial(1.0, word);
                let cfg = FockConfig::with_auto_cutoff(inputs.clone(), poly.degree())?;
                let o = oracle_expectation(&poly, &cfg)?;
                good = good.max((MomentEngine::new(&state).expectation(&poly)? - o).norm());
                bad = bad.max((MomentEngine::new(&flipped).expectation(&poly)? - o).norm());
            }
        }
    }
    Ok((good, bad))
}

fn flip_anomalous(state: &GaussianState) -> Result<GaussianState, HoloError> {
    GaussianState::from_moments(
        state.displacement().clone(),
        -state.moment_aa().clone(),
        state.moment_adag_a().clone(),
    )
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

fn closed_form_suite(out: &mut Vec<Check>) -> Result<(), HoloError> {
    const SUITE: &str = "closed forms";
    let sq = ObservableSpec::for_family(Family::Sq);
    let mut e = Vec::new();
    for lambda in logspace(-2.0, 2.0, 5) {
        for mu in logspace(1.5, 9.5, 5) {
            let cfg = HolometerConfig::new(Family::Sq, mu, lambda)?;
            e.push(rel(u0(&cfg, sq)?, u0_sq_closed(mu, lambda)?));
        }
    }
    out.push(Check::at_most(SUITE, "SQ U0 against closed form, 25 points: max rel err", worst(e), 1e-8));

    let cfg = HolometerConfig::new(Family::Sq, 100.0, 0.5)?;
    out.push(Check::at_most(SUITE, "SQ U0(mu=100, lambda=0.5) against 3.899e-3: rel err", rel(u0(&cfg, sq)?, 3.899e-3), 5e-4));

    let cl = ObservableSpec::for_family(Family::Cl);
    let mut e = Vec::new();
    for mu in [1e2, 1e6, 1e23] {
        e.push(rel(u0(&HolometerConfig::classical(mu)?, cl)?, 2f64.sqrt() / mu));
        e.push(rel(u0_cl_closed(mu)?, 2f64.sqrt() / mu));
    }
    out.push(Check::at_most(SUITE, "CL U0 = sqrt2 / mu: max rel err", worst(e), 1e-10));

    let twb = ObservableSpec::for_family(Family::Twb);
    let (mut var, mut sig) = (Vec::new(), Vec::new());
    for lambda in [0.1, 0.5, 2.0] {
        for mu in [10.0, 1e3, 1e6] {
            let h = Holometer::new(&HolometerConfig::new(Family::Twb, mu, lambda)?, twb)?;
            var.push(h.variance(0.0, 0.0)?.abs() / (mu * mu));
            sig.push(rel(h.signal_coefficient()?, -0.5 * (lambda * (1.0 + lambda)).sqrt() * mu));
        }
    }
    out.push(Check::at_most(SUITE, "TWB Var[C] / mu^2 at phi0 = 0: max", worst(var), 1e-12));
    out.push(Check::at_most(SUITE, "TWB signal against -sqrt(lambda(1+lambda)) mu / 2: max rel err", worst(sig), 1e-6));

    let (lambda, mu) = (1e3, 1e9);
    let u = u0(&HolometerConfig::new(Family::Sq, mu, lambda)?, sq)?;
    out.push(Check::at_most(SUITE, "SQ U0 * 2 sqrt2 lambda mu at lambda = 1e3: |value - 1|", (u * 2.0 * 2f64.sqrt() * lambda * mu - 1.0).abs(), 1e-2));

    let mut e = Vec::new();
    for lambda in [0.1f64, 0.5, 2.0] {
        for mu in [10.0, 1e4, 1e9] {
            for dtheta in [0.0f64, 0.4, 1.1] {
                let s = (lambda * (1.0 + lambda)).sqrt();
                let c = (2.0 * dtheta).cos();
                let m = rp_moments(&HolometerConfig::new(Family::Sq, mu, lambda)?.with_thetas(dtheta, 0.0)?)?;
                let v = lambda + mu * (1.0 + 2.0 * lambda + 2.0 * s * c);
                e.extend(m.var.iter().map(|&x| rel(x, v)));
                e.push(m.cov.abs() / v);
                let m = rp_moments(&HolometerConfig::new(Family::Twb, mu, lambda)?.with_thetas(dtheta, 0.0)?)?;
                let v = lambda + mu * (1.0 + 2.0 * lambda);
                e.extend(m.var.iter().map(|&x| rel(x, v)));
                e.push((m.cov - 2.0 * mu * s * c).abs() / v);
            }
        }
    }
    out.push(Check::at_most(SUITE, "radiation-pressure moments: max rel err", worst(e), 1e-9));

    let r = RadiationPressureParams::default().r();
    out.push(Check::at_most(SUITE, "R against 8.6e24: rel err", rel(r, 8.6e24), 1e-2));

    let low = HolometerConfig::new(Family::Twb, 1e6, 1e-3)?;
    let x = efficiency_crossing(&low, twb, 0.5, 0.99)?.unwrap_or(f64::NAN);
    out.push(Check::at_most(SUITE, "low-resource TWB crossing against 2/3: abs err", (x - 2.0 / 3.0).abs(), 5e-3));
    Ok(())
}

fn invariant_suite(seed: u64, out: &mut Vec<Check>) -> Result<(), HoloError> {
    const SUITE: &str = "invariants";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut unit, mut photons, mut phys, mut herm): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..64 {
        let state = prepare_coherent(rng.random_range(0.0..3.0), rng.random_range(-3.2..3.2))?
            .direct_sum(&prepare_squeezed_vacuum(rng.random_range(0.0..2.0), rng.random_range(-3.2..3.2))?)
            .direct_sum(&prepare_twb(rng.random_range(0.0..2.0), rng.random_range(-3.2..3.2))?);
        let (a, b) = (rng.random_range(0..4), rng.random_range(0..3));
        let b = if b >= a { b + 1 } else { b };
        let bs = interferometer_map(rng.random_range(-7.0..7.0), a, b)?;
        let loss = loss_map(rng.random_range(0.0..=1.0), a)?;
        unit = unit.max(bs.unitarity_error()).max(loss.unitarity_error());
        let moved = apply_map(&state, &bs)?;
        let n0 = state.total_photon_number();
        photons = photons.max((moved.total_photon_number() - n0).abs() / n0.max(1.0));
        phys = phys.max(-moved.min_physicality_eigenvalue()).max(-apply_map(&moved, &loss)?.min_physicality_eigenvalue());
        let p = random_polynomial(&mut rng, 4, 6);
        let v = MomentEngine::new(&state).expectation(&(&p + &p.adjoint()))?;
        herm = herm.max(v.im.abs() / (1.0 + v.re.abs()));
    }
    out.push(Check::at_most(SUITE, "optical maps are unitary: max error", unit, 1e-12));
    out.push(Check::at_most(SUITE, "interferometers conserve photons: max rel err", photons, 1e-10));
    out.push(Check::at_most(SUITE, "maps keep states physical: max negative eigenvalue", phys.max(0.0), 1e-9));
    out.push(Check::at_most(SUITE, "Hermitian polynomials have real expectations: max |Im|", herm, 1e-9));

    let mut thermal: f64 = 0.0;
    for lambda in [0.0, 0.3, 4.0, 40.0] {
        let m = prepare_twb(lambda, 0.7)?.reduced(&[1])?;
        thermal = thermal
            .max((m.moment_adag_a()[(0, 0)].re - lambda).abs() / lambda.max(1.0))
            .max(m.moment_aa()[(0, 0)].norm() / lambda.max(1.0));
    }
    out.push(Check::at_most(SUITE, "twin-beam marginal is thermal: max rel err", thermal, 1e-12));

    let rp = RadiationPressureParams::default();
    let mut deficit: f64 = 0.0;
    for family in [Family::Sq, Family::Twb] {
        for eta in [0.7, 0.9, 1.0] {
            for mu in [1e20, 1e23, 1e24] {
                let cfg = HolometerConfig::new(family, mu, 0.5)?.with_eta(eta)?;
                match budget(&cfg, ObservableSpec::for_family(family), &rp) {
                    Ok(b) => deficit = deficit.max((b.u0 - b.u2) / b.u0),
                    Err(HoloError::InsensitiveConfiguration(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    out.push(Check::at_most(SUITE, "U2 >= U0: max relative deficit", deficit.max(0.0), 1e-12));
    Ok(())
}

/// Runs every suite. Engine errors abort the run.
pub fn run(seed: u64, mutation: Mutation) -> Result<Report, HoloError> {
    let mut checks = Vec::new();
    oracle_suite(seed, mutation, &mut checks)?;
    closed_form_suite(&mut checks)?;
    invariant_suite(seed, &mut checks)?;
    Ok(Report { checks })
}
