use std::fmt;
use std::str::FromStr;

use crate::error::{domain, HoloError, Result};
use crate::gaussian::{
    interferometer_map, loss_map, prepare_coherent, prepare_squeezed_vacuum, prepare_twb,
    BogoliubovFrame, Circuit, GaussianState,
};
use crate::operator::OperatorPolynomial;
use crate::wick::{FluctuationPolynomial, MomentEngine};

use super::config::{Family, HolometerConfig};

/// Mode slots of the four-mode input. After the interferometers the `a`
/// slots hold the `c` outputs and the `b` slots the `d` outputs.
pub const A1: usize = 0;
pub const B1: usize = 1;
pub const A2: usize = 2;
pub const B2: usize = 3;
pub const BASE_MODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObservableKind {
    /// `ΔN_{1−} ΔN_{2−}` with `N_{k−} = N_{c_k} − N_{d_k}`.
    ProductOfDifferences,
    /// Squared fluctuation of `N_{c_1} − N_{c_2}`, scaled by `−1/2`.
    SquaredDifference,
}

impl ObservableKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::ProductOfDifferences => "PRODUCT_OF_DIFFERENCES",
            ObservableKind::SquaredDifference => "SQUARED_DIFFERENCE",
        }
    }

    /// Detected output slots; loss acts on exactly these.
    pub fn monitored_modes(self) -> &'static [usize] {
        match self {
            ObservableKind::ProductOfDifferences => &[A1, B1, A2, B2],
            ObservableKind::SquaredDifference => &[A1, A2],
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservableKind {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "PRODUCT_OF_DIFFERENCES" | "PRODUCT" => Ok(ObservableKind::ProductOfDifferences),
            "SQUARED_DIFFERENCE" | "SQUARED" => Ok(ObservableKind::SquaredDifference),
            _ => domain(format!("unknown observable {s:?}")),
        }
    }
}

/// Which correlation observable is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ObservableSpec {
    pub kind: ObservableKind,
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind) -> Self {
        Self { kind }
    }

    /// Product of differences for coherent and squeezed inputs, squared
    /// difference for twin beams.
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Cl | Family::Sq => Self::new(ObservableKind::ProductOfDifferences),
            Family::Twb => Self::new(ObservableKind::SquaredDifference),
        }
    }

    /// `Ĉ(φ₁, φ₂)` as a polynomial in the input modes, centred at the
    /// configured working point. See [`Holometer::heisenberg_observable`].
    pub fn resolve(&self, config: &HolometerConfig, phi1: f64, phi2: f64) -> Result<OperatorPolynomial> {
        Holometer::new(config, *self)?.heisenberg_observable(phi1, phi2)
    }
}

/// Built experiment: input state, centring constants and circuit factory.
#[derive(Clone, Debug)]
pub struct Holometer {
    config: HolometerConfig,
    spec: ObservableSpec,
    input: GaussianState,
    centers: [f64; 2],
    heisenberg: MomentEngine,
}

impl Holometer {
    pub fn new(config: &HolometerConfig, spec: ObservableSpec) -> Result<Self> {
        config.validate()?;
        let input = input_state(config)?;
        let ancillas = spec.kind.monitored_modes().len();
        let heisenberg = MomentEngine::with_frame(
            &input.with_vacuum_modes(ancillas),
            &input_frame(config)?.with_vacuum_modes(ancillas),
        )?;
        let mut h = Self {
            config: *config,
            spec,
            input,
            centers: [0.0; 2],
            heisenberg,
        };
        let circuit = h.circuit(config.phi0_1, config.phi0_2)?;
        let mean = |i: usize, j: usize| -> Result<f64> {
            h.heisenberg
                .real_expectation(&circuit.pull_back(&OperatorPolynomial::number_difference(i, j))?)
        };
        h.centers = match spec.kind {
            ObservableKind::ProductOfDifferences => [mean(A1, B1)?, mean(A2, B2)?],
            ObservableKind::SquaredDifference => [mean(A1, A2)?, 0.0],
        };
        Ok(h)
    }

    pub fn config(&self) -> &HolometerConfig {
        &self.config
    }

    pub fn spec(&self) -> ObservableSpec {
        self.spec
    }

    /// Four-mode input `a₁, b₁, a₂, b₂`.
    pub fn input_state(&self) -> &GaussianState {
        &self.input
    }

    /// Centring constants: `<N_{k−}>` at the working point for the product
    /// observable, `<N_{c₁} − N_{c₂}>` (first entry) for the squared one.
    pub fn centers(&self) -> [f64; 2] {
        self.centers
    }

    /// Both interferometers followed by loss on the monitored ports.
    pub fn circuit(&self, phi1: f64, phi2: f64) -> Result<Circuit> {
        let mut c = Circuit::new(BASE_MODES);
        c.push(interferometer_map(phi1, A1, B1)?)?;
        c.push(interferometer_map(phi2, A2, B2)?)?;
        for &m in self.spec.kind.monitored_modes() {
            c.push(loss_map(self.config.eta, m)?)?;
        }
        Ok(c)
    }

    /// `Ĉ = scale · F₁ F₂` with centred factors in output modes.
    pub(crate) fn factors(&self) -> (f64, [OperatorPolynomial; 2]) {
        let centred = |i: usize, j: usize, m: f64| {
            OperatorPolynomial::number_difference(i, j) - OperatorPolynomial::constant(m)
        };
        match self.spec.kind {
            ObservableKind::ProductOfDifferences => (
                1.0,
                [centred(A1, B1, self.centers[0]), centred(A2, B2, self.centers[1])],
            ),
            ObservableKind::SquaredDifference => {
                let d = centred(A1, A2, self.centers[0]);
                (-0.5, [d.clone(), d])
            }
        }
    }

    /// `Ĉ` in output modes. Phases enter only through the circuit.
    pub fn observable(&self) -> OperatorPolynomial {
        let (scale, [f1, f2]) = self.factors();
        (&f1 * &f2).scale(scale)
    }

    /// `Ĉ(φ₁, φ₂)` expressed in the input modes (base modes then loss ancillas).
    pub fn heisenberg_observable(&self, phi1: f64, phi2: f64) -> Result<OperatorPolynomial> {
        self.circuit(phi1, phi2)?.pull_back(&self.observable())
    }

    /// Factors of `Ĉ(φ₁, φ₂)` pulled back to the input modes.
    pub(crate) fn heisenberg_factors(&self, phi1: f64, phi2: f64) -> Result<(f64, [OperatorPolynomial; 2])> {
        let circuit = self.circuit(phi1, phi2)?;
        let (scale, [f1, f2]) = self.factors();
        Ok((scale, [circuit.pull_back(&f1)?, circuit.pull_back(&f2)?]))
    }

    /// `Ĉ(φ₁, φ₂)` in input-mode fluctuation form on the Heisenberg engine,
    /// built factor by factor.
    pub(crate) fn heisenberg_fluct(&self, phi1: f64, phi2: f64) -> Result<FluctuationPolynomial> {
        let (scale, [f1, f2]) = self.heisenberg_factors(phi1, phi2)?;
        let e = &self.heisenberg;
        Ok(e.fluctuation_form(&f1)?.product(&e.fluctuation_form(&f2)?).scale(scale))
    }

    /// Moment engine on the input state padded with vacuum ancillas,
    /// evaluated in the input's Bogoliubov frame.
    pub fn heisenberg_engine(&self) -> &MomentEngine {
        &self.heisenberg
    }

    /// Moment engine on the evolved output state.
    pub fn output_engine(&self, phi1: f64, phi2: f64) -> Result<MomentEngine> {
        let out = self.circuit(phi1, phi2)?.apply(&self.input)?;
        Ok(MomentEngine::new(&out))
    }
}

/// Bogoliubov frame of [`input_state`].
pub fn input_frame(config: &HolometerConfig) -> Result<BogoliubovFrame> {
    let coh = BogoliubovFrame::identity(1);
    match config.family {
        Family::Cl => Ok(BogoliubovFrame::identity(4)),
        Family::Sq => {
            let sq = BogoliubovFrame::squeezed(config.lambda, config.theta_sq)?;
            Ok(sq.direct_sum(&coh).direct_sum(&sq).direct_sum(&coh))
        }
        Family::Twb => BogoliubovFrame::twin_beam(config.lambda, config.theta_sq)?
            .direct_sum(&coh)
            .direct_sum(&coh)
            .permuted(&[0, 2, 1, 3]),
    }
}

/// `a₁, b₁, a₂, b₂` input for the configured family.
pub fn input_state(config: &HolometerConfig) -> Result<GaussianState> {
    let coh = prepare_coherent(config.mu, config.theta_alpha)?;
    match config.family {
        Family::Cl => {
            let vac = GaussianState::vacuum(1);
            Ok(vac.direct_sum(&coh).direct_sum(&vac).direct_sum(&coh))
        }
        Family::Sq => {
            let sq = prepare_squeezed_vacuum(config.lambda, config.theta_sq)?;
            Ok(sq.direct_sum(&coh).direct_sum(&sq).direct_sum(&coh))
        }
        Family::Twb => {
            // direct sum order is a₁ a₂ b₁ b₂
            let twb = prepare_twb(config.lambda, config.theta_sq)?;
            twb.direct_sum(&coh).direct_sum(&coh).permuted(&[0, 2, 1, 3])
        }
    }
}
