use std::f64::consts::PI;

use holoqd::holonomy::{
    compose_loops, extract_holonomy, evolve_subspace, qubit_frame, ring_drive, run_loop, synthesize_single_qubit,
    HolonomyConfig, LambdaLoop, SingleQubitTarget,
};
use holoqd::linalg::{cis, eigvalsh, hermitian_defect, kron, max_abs, n_dot_sigma, phase_distance, unitarity_defect};
use holoqd::model::{build_ring_hamiltonian, DotNetwork, EnvelopeShape, LambdaParams};
use holoqd::noise::{gate_fidelity, hadamard_protocol, noisy_channel, product_ensemble, NoiseChannel, NoiseSpec, SiteMask};
use holoqd::propagate::{evolve_drive, IntegratorConfig};
use holoqd::twoqubit::{
    analytic_concurrence, assemble_gate, concurrence_of, concurrence_surface, params_at, solve_schedule,
};
use holoqd::{CMatrix64, LambdaLoop64, LambdaParams64, C64};
use proptest::prelude::*;

fn su2(a: f64, b: f64, c: f64) -> CMatrix64 {
    // Euler-angle single-qubit unitary
    let rz = |t: f64| {
        let mut m = CMatrix64::zeros(2, 2);
        m[(0, 0)] = cis(-t / 2.0);
        m[(1, 1)] = cis(t / 2.0);
        m
    };
    let ry = {
        let (s, co) = (b / 2.0).sin_cos();
        CMatrix64::from_row_slice(2, 2, &[C64::new(co, 0.), C64::new(-s, 0.), C64::new(s, 0.), C64::new(co, 0.)])
    };
    rz(a) * ry * rz(c)
}

fn angles() -> impl Strategy<Value = (f64, f64)> {
    (0.0..PI, 0.0..2.0 * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loop_holonomy_is_n_sigma((theta, phi) in angles(), shape in 0usize..3) {
        let shape = [EnvelopeShape::Square, EnvelopeShape::SineSquared, EnvelopeShape::GaussianTruncated][shape];
        let lp = LambdaLoop64::pi_pulse(LambdaParams64::new(theta, phi).unwrap(), shape, 1.3).unwrap();
        let (ev, rep) = run_loop(&lp, &HolonomyConfig::default()).unwrap();
        prop_assert!(rep.target_distance.unwrap() < 1e-7);
        prop_assert!(max_abs(&ev.d_accum) < 1e-12);
        prop_assert!(ev.orthonormality_defect() < 1e-10);
        prop_assert!(ev.rank_defect() < 1e-10);
    }

    #[test]
    fn ring_spectrum_is_gauge_invariant(
        onsite in prop::collection::vec(-1.0..1.0f64, 3),
        mags in prop::collection::vec(0.1..1.5f64, 3),
        flux in -PI..PI,
        chi in prop::collection::vec(-PI..PI, 3),
    ) {
        let net = DotNetwork::ring(onsite, mags, flux).unwrap();
        let h = build_ring_hamiltonian(&net).unwrap();
        prop_assert!(hermitian_defect(&h) < 1e-15);
        let moved = net.with_gauge(&chi).unwrap();
        prop_assert!((moved.total_flux() - net.total_flux()).abs() < 1e-12);
        let (a, b) = (eigvalsh(&h), eigvalsh(&build_ring_hamiltonian(&moved).unwrap()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_drive_propagator_is_unitary((theta, phi) in angles(), flux in -PI..PI) {
        let lp = LambdaLoop64::pi_pulse(LambdaParams64::new(theta, phi).unwrap(), EnvelopeShape::SineSquared, 1.0)
            .unwrap();
        let lp = LambdaLoop { total_flux: flux, ..lp };
        let drive = ring_drive(&lp.network().unwrap(), &lp.envelope).unwrap();
        let u = evolve_drive(&drive, &IntegratorConfig::default()).unwrap();
        prop_assert!(unitarity_defect(&u.unitary) < 1e-12);
        let ev = evolve_subspace(&drive, &qubit_frame(), &HolonomyConfig::default()).unwrap();
        let rep = extract_holonomy(&ev, Some(&lp.target()), 1e-6).unwrap();
        prop_assert!(rep.target_distance.unwrap() < 1e-7);
    }

    #[test]
    fn composition_is_an_ordered_product(loops in prop::collection::vec(angles(), 1..5)) {
        let params: Vec<LambdaParams64> = loops.iter().map(|&(t, p)| LambdaParams::new(t, p).unwrap()).collect();
        let u = compose_loops(&params).unwrap();
        let direct = params.iter().fold(CMatrix64::identity(2, 2), |acc, p| n_dot_sigma(p.axis()) * acc);
        prop_assert!(max_abs(&(&u - direct)) < 1e-12);
        prop_assert!(unitarity_defect(&u) < 1e-12);
        let mut doubled = params.clone();
        doubled.extend(params.iter().rev().copied());
        prop_assert!(max_abs(&(compose_loops(&doubled).unwrap() - CMatrix64::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn synthesis_round_trips((theta, phi) in angles(), chi in -PI..PI) {
        let target = n_dot_sigma(LambdaParams64::new(theta, phi).unwrap().axis()) * cis(chi);
        let p = synthesize_single_qubit(&SingleQubitTarget::Matrix(target.clone())).unwrap();
        prop_assert!(phase_distance(&p.target_gate(), &target) < 1e-8);
    }

    #[test]
    fn concurrence_is_a_local_invariant(
        x in 0.0..4.0f64, y in 0.05..4.0f64,
        e in prop::collection::vec(-PI..PI, 12),
    ) {
        let gate = assemble_gate(&solve_schedule(&params_at(x, y)).unwrap()).unwrap();
        let before = kron(&su2(e[0], e[1], e[2]), &su2(e[3], e[4], e[5]));
        let after = kron(&su2(e[6], e[7], e[8]), &su2(e[9], e[10], e[11]));
        let dressed = after * &gate.unitary * before;
        let c = concurrence_of(&dressed).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!((c - gate.concurrence).abs() < 1e-8);
        prop_assert!((concurrence_surface(x, y) - analytic_concurrence(&params_at(x, y))).abs() < 1e-12);
    }

    #[test]
    fn noisy_channel_preserves_states(gamma in 0.0..2.0f64, bits in 1u8..8, depol in any::<bool>()) {
        let mask: SiteMask = format!("{:03b}", bits).parse().unwrap();
        let channel = if depol { NoiseChannel::SiteDepolarizingDiagonal } else { NoiseChannel::SiteDephasing };
        let spec = NoiseSpec::new(gamma, mask, channel).unwrap();
        let protocol = hadamard_protocol(EnvelopeShape::SineSquared, 1.0).unwrap();
        let ch = noisy_channel(&protocol.drive, &spec, &protocol.layout, &IntegratorConfig::default()).unwrap();
        for psi in product_ensemble::<f64>(1) {
            let v = CMatrix64::from_column_slice(3, 1, &[psi[(0, 0)], C64::new(0., 0.), psi[(1, 0)]]);
            let rho = ch.apply(&(&v * v.adjoint()));
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(hermitian_defect(&rho) < 1e-10);
            prop_assert!(eigvalsh(&holoqd::linalg::hermitize(&rho))[0] > -1e-10);
        }
        let f = gate_fidelity(&protocol, &spec, &IntegratorConfig::default()).unwrap();
        let worse = gate_fidelity(&protocol, &spec.with_gamma(gamma + 0.5), &IntegratorConfig::default()).unwrap();
        prop_assert!(f <= 1.0 + 1e-12 && worse <= f);
    }
}

#[test]
fn single_precision_hadamard() {
    let lp = LambdaLoop::<f32>::pi_pulse(
        LambdaParams::new(std::f32::consts::FRAC_PI_4, 0.0).unwrap(),
        EnvelopeShape::SineSquared,
        1.0,
    )
    .unwrap();
    let cfg = HolonomyConfig::<f32> {
        integrator: IntegratorConfig::with_tolerance(1e-5),
        cyclicity_threshold: 1e-3,
        ..Default::default()
    };
    let (_, rep) = run_loop(&lp, &cfg).unwrap();
    assert!(rep.target_distance.unwrap() < 1e-4, "{:?}", rep.target_distance);
}
