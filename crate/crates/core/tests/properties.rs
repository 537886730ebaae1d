use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use proptest::prelude::*;

use holosim_core::fock::{oracle_expectation, FockConfig, PreparedInput};
use holosim_core::gaussian::{
    apply_map, interferometer_map, loss_map, prepare_coherent, prepare_squeezed_vacuum, prepare_twb,
    BogoliubovFrame, GaussianState,
};
use holosim_core::holometer::{
    budget, rp_moments, signal_coefficient, u0, u0_sq_closed, Family, Holometer, HolometerConfig,
    ObservableKind, ObservableSpec, RadiationPressureParams, A1, B1,
};
use holosim_core::{Ladder, MomentEngine, OperatorPolynomial};

fn input() -> impl Strategy<Value = PreparedInput> {
    prop_oneof![
        Just(PreparedInput::Vacuum),
        (0.0..=1.0f64, -3.2..3.2f64).prop_map(|(mu, theta)| PreparedInput::Coherent { mu, theta }),
        (0.0..=0.5f64, -3.2..3.2f64).prop_map(|(lambda, theta)| PreparedInput::Squeezed { lambda, theta }),
        (0.0..=0.5f64, -3.2..3.2f64).prop_map(|(lambda, theta)| PreparedInput::TwinBeam { lambda, theta }),
    ]
}

fn inputs() -> impl Strategy<Value = Vec<PreparedInput>> {
    prop::collection::vec(input(), 1..=2)
}

type RawTerm = (f64, f64, Vec<(usize, bool)>);

fn raw_poly(max_degree: usize) -> impl Strategy<Value = Vec<RawTerm>> {
    prop::collection::vec(
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            prop::collection::vec((0usize..4, any::<bool>()), 0..=max_degree),
        ),
        1..=3,
    )
}

fn build(raw: &[RawTerm], modes: usize) -> OperatorPolynomial {
    OperatorPolynomial::from_terms(raw.iter().map(|(re, im, word)| {
        let w = word.iter().map(|&(m, d)| Ladder::new(m % modes, d)).collect();
        (Complex64::new(*re, *im), w)
    }))
}

fn num_modes(inputs: &[PreparedInput]) -> usize {
    inputs.iter().map(|i| i.num_modes()).sum()
}

fn any_state() -> impl Strategy<Value = GaussianState> {
    (0.0..3.0f64, -3.2..3.2f64, 0.0..2.0f64, -3.2..3.2f64, 0.0..2.0f64, -3.2..3.2f64).prop_map(
        |(mu, ta, ls, ts, lt, tt)| {
            prepare_coherent(mu, ta)
                .unwrap()
                .direct_sum(&prepare_squeezed_vacuum(ls, ts).unwrap())
                .direct_sum(&prepare_twb(lt, tt).unwrap())
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn oracle_agrees_with_wick(inputs in inputs(), raw in raw_poly(8)) {
        let poly = build(&raw, num_modes(&inputs));
        let cfg = FockConfig::with_auto_cutoff(inputs, poly.degree()).unwrap();
        let engine = MomentEngine::new(&cfg.gaussian_equivalent().unwrap());
        let w = engine.expectation(&poly).unwrap();
        let o = oracle_expectation(&poly, &cfg).unwrap();
        prop_assert!((w - o).norm() <= 1e-8, "wick {w} oracle {o}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expectation_is_linear(
        state in any_state(),
        p in raw_poly(6),
        q in raw_poly(6),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let (p, q) = (build(&p, 4), build(&q, 4));
        let e = MomentEngine::new(&state);
        let lhs = e.expectation(&OperatorPolynomial::linear_combination(&[(alpha, &p), (beta, &q)])).unwrap();
        let (ep, eq) = (e.expectation(&p).unwrap(), e.expectation(&q).unwrap());
        let rhs = ep * alpha + eq * beta;
        let scale = 1.0 + ep.norm() * alpha.abs() + eq.norm() * beta.abs();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn framed_engine_matches_plain(
        mu in 0.0..3.0f64,
        ta in -3.2..3.2f64,
        ls in 0.0..2.0f64,
        ts in -3.2..3.2f64,
        lt in 0.0..2.0f64,
        tt in -3.2..3.2f64,
        p in raw_poly(6),
    ) {
        let state = prepare_coherent(mu, ta)
            .unwrap()
            .direct_sum(&prepare_squeezed_vacuum(ls, ts).unwrap())
            .direct_sum(&prepare_twb(lt, tt).unwrap());
        let frame = BogoliubovFrame::identity(1)
            .direct_sum(&BogoliubovFrame::squeezed(ls, ts).unwrap())
            .direct_sum(&BogoliubovFrame::twin_beam(lt, tt).unwrap());
        let p = build(&p, 4);
        let plain = MomentEngine::new(&state).expectation(&p).unwrap();
        let framed = MomentEngine::with_frame(&state, &frame).unwrap().expectation(&p).unwrap();
        prop_assert!((plain - framed).norm() <= 1e-10 * (1.0 + plain.norm()), "{plain} vs {framed}");
    }

    #[test]
    fn hermitian_polynomials_are_real(state in any_state(), p in raw_poly(6)) {
        let p = build(&p, 4);
        let h = &p + &p.adjoint();
        let v = MomentEngine::new(&state).expectation(&h).unwrap();
        prop_assert!(v.im.abs() <= 1e-9 * (1.0 + v.re.abs()), "{v}");
    }

    #[test]
    fn maps_are_unitary_and_preserve_physicality(
        state in any_state(),
        phi in -7.0..7.0f64,
        eta in 0.0..=1.0f64,
        a in 0usize..4,
        b in 0usize..4,
    ) {
        prop_assume!(a != b);
        let bs = interferometer_map(phi, a, b).unwrap();
        let loss = loss_map(eta, a).unwrap();
        prop_assert!(bs.unitarity_error() < 1e-12);
        prop_assert!(loss.unitarity_error() < 1e-12);
        let out = apply_map(&state, &bs).unwrap();
        let n0 = state.total_photon_number();
        prop_assert!((out.total_photon_number() - n0).abs() <= 1e-10 * n0.max(1.0));
        prop_assert!(out.is_physical(1e-9));
        prop_assert!(apply_map(&out, &loss).unwrap().is_physical(1e-9));
    }

    #[test]
    fn twb_marginal_is_thermal(lambda in 0.0..50.0f64, theta in -3.2..3.2f64) {
        let m = prepare_twb(lambda, theta).unwrap().reduced(&[1]).unwrap();
        prop_assert!((m.moment_adag_a()[(0, 0)].re - lambda).abs() <= 1e-12 * lambda.max(1.0));
        prop_assert!(m.moment_aa()[(0, 0)].norm() <= 1e-12 * lambda.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn engine_matches_sq_closed_form(lambda in 0.1..2.0f64, log_mu in 1.0..4.0f64) {
        let mu = 10f64.powf(log_mu);
        let cfg = HolometerConfig::new(Family::Sq, mu, lambda).unwrap();
        let u = u0(&cfg, ObservableSpec::for_family(Family::Sq)).unwrap();
        prop_assert!(rel(u, u0_sq_closed(mu, lambda).unwrap()) < 1e-8);
    }

    #[test]
    fn twb_signal_matches_analytic_form(
        lambda in 0.05..3.0f64,
        log_mu in 1.0..6.0f64,
        ta in -1.5..1.5f64,
        dtheta in -0.6..0.6f64,
    ) {
        let mu = 10f64.powf(log_mu);
        let cfg = HolometerConfig::new(Family::Twb, mu, lambda).unwrap().with_thetas(ta, ta + dtheta).unwrap();
        let s = signal_coefficient(&cfg, ObservableSpec::for_family(Family::Twb)).unwrap();
        let expect = -0.5 * (lambda * (1.0 + lambda)).sqrt() * mu * (2.0 * dtheta).cos();
        prop_assert!(rel(s, expect) < 1e-6, "{s} vs {expect}");
    }

    #[test]
    fn u2_decreases_to_u0_as_tau_shrinks(
        family in prop_oneof![Just(Family::Sq), Just(Family::Twb)],
        eta in 0.6..0.99f64,
    ) {
        let cfg = HolometerConfig::new(family, 1e23, 0.5).unwrap().with_eta(eta).unwrap();
        let spec = ObservableSpec::for_family(family);
        let mut last = f64::INFINITY;
        let mut u_0 = 0.0;
        for tau in [1e-2, 1e-3, 1e-4, 1e-6, 1e-9] {
            let rp = RadiationPressureParams::new(tau, 100.0, 3.14e15).unwrap();
            let b = budget(&cfg, spec, &rp).unwrap();
            prop_assert!(b.u2 <= last * (1.0 + 1e-12));
            prop_assert!(b.u2 >= b.u0 * (1.0 - 1e-12));
            last = b.u2;
            u_0 = b.u0;
        }
        prop_assert!(rel(last, u_0) < 1e-6);
    }
}

#[test]
fn squeezing_trades_photon_noise_for_radiation_pressure() {
    let spec = ObservableSpec::new(ObservableKind::ProductOfDifferences);
    for mu in [1e2, 1e4, 1e6] {
        for theta in [0.0, 0.7, -1.3] {
            let at = |lambda: f64| {
                let cfg = HolometerConfig::new(Family::Sq, mu, lambda)
                    .unwrap()
                    .with_thetas(theta, theta)
                    .unwrap();
                let h = Holometer::new(&cfg, spec).unwrap();
                let d = OperatorPolynomial::number_difference(A1, B1);
                let v = h.output_engine(FRAC_PI_2, FRAC_PI_2).unwrap().variance(&d).unwrap();
                (v, rp_moments(&cfg).unwrap().var[0])
            };
            let mut prev = at(0.1);
            for lambda in [0.3, 0.6, 1.0] {
                let next = at(lambda);
                assert!(next.0 < prev.0, "mu {mu} lambda {lambda}: {next:?} vs {prev:?}");
                assert!(next.1 > prev.1, "mu {mu} lambda {lambda}: {next:?} vs {prev:?}");
                prev = next;
            }
        }
    }
}
