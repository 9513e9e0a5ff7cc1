//! The `verify-all` suite: every physical property the library claims,
//! evaluated with fixed tolerances and a seeded random sample.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use holoqd::holonomy::{
    azimuthal_pair, compose_loops, evolve_subspace, gauge_transform_check, qubit_frame, ring_drive,
    run_loop,
};
use holoqd::linalg::{basis_ket, hermitian_defect, max_abs, n_dot_sigma, phase_distance};
use holoqd::model::{build_lambda_hamiltonian, build_ring_hamiltonian_scaled, build_twoqubit_hamiltonian, EnvelopeShape};
use holoqd::noise::{
    entangler_protocol, fidelity_curve, gate_fidelity, hadamard_protocol, log_grid, noisy_channel, pi8_protocol,
    product_ensemble, rz, DotLayout, NoiseChannel, NoiseSpec, SiteMask,
};
use holoqd::propagate::{evolve, evolve_bruteforce, evolve_drive};
use holoqd::twoqubit::{
    assemble_gate, block_frames, block_projected_norm, concurrence_of, concurrence_surface, controlled_rotation,
    params_at, solve_for_entangling_power, solve_schedule, sweep_concurrence, zy_rotation, FreeAmplitude,
};
use holoqd::{
    CMatrix64, Drive64, DotNetwork64, HolonomyConfig64, IntegratorConfig64, LambdaLoop64, LambdaParams64,
    PulseEnvelope64, TwoQubitParams64, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::VerifyAllParams;
use crate::experiments::{integrated_drive, protocol_distance, two_loop_formula};
use crate::report::Check;

/// Wall-clock budget of the 9×9 gate grid.
pub const GRID_BUDGET_SECONDS: f64 = 10.0;
/// Wall-clock budget of the whole suite.
pub const SUITE_BUDGET_SECONDS: f64 = 300.0;
/// Steps of the brute-force product-formula oracle.
pub const BRUTE_FORCE_STEPS: usize = 1 << 16;

const SHAPES: [EnvelopeShape; 3] = [EnvelopeShape::Square, EnvelopeShape::SineSquared, EnvelopeShape::GaussianTruncated];

struct Suite<'a> {
    p: &'a VerifyAllParams,
    rng: ChaCha8Rng,
    checks: Vec<Check>,
    hol: HolonomyConfig64,
}

impl Suite<'_> {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn integrator(&self) -> IntegratorConfig64 {
        self.hol.integrator
    }

    fn angle(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// 9×9 grid of polar angles, each loop against its target.
    fn gate_grid(&mut self) -> holoqd::Result<()> {
        let start = Instant::now();
        let (mut dist, mut dyn_norm, mut conn): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for i in 0..9 {
            let theta = i as f64 * PI / 8.0;
            for j in 0..9 {
                let phi = j as f64 * 2.0 * PI / 9.0;
                let lp = LambdaLoop64::pi_pulse(LambdaParams64::new(theta, phi)?, EnvelopeShape::SineSquared, 1.0)?;
                let (ev, rep) = run_loop(&lp, &self.hol)?;
                dist = dist.max(rep.target_distance.unwrap_or(f64::NAN));
                dyn_norm = dyn_norm.max(max_abs(&ev.d_accum));
                conn = conn.max(max_abs(&(ev.connection_holonomy() - &rep.holonomy)));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        self.push(Check::below("gate_grid.max_target_distance", dist, 1e-7));
        self.push(Check::below("gate_grid.runtime_seconds", elapsed, GRID_BUDGET_SECONDS));
        self.push(Check::below("purely_geometric.lambda_dynamical_norm", dyn_norm, 1e-12));
        self.push(Check::below("gate_grid.connection_vs_overlap", conn, 1e-9));
        Ok(())
    }

    /// Block-projected entangler Hamiltonians vanish and each block picks up
    /// no dynamical phase.
    fn geometric_two_qubit(&mut self) -> holoqd::Result<()> {
        let mut projected: f64 = 0.0;
        for _ in 0..20 {
            let q = TwoQubitParams64::new(self.angle(-2.0, 2.0), self.angle(0.1, 2.0), 0.0, 0.0);
            let h = build_twoqubit_hamiltonian(&q, self.angle(-3.0, 3.0), 0.0);
            projected = projected.max(block_projected_norm(&h));
        }
        self.push(Check::at_most("purely_geometric.block_projected_h", projected, 0.0));

        let q = holoqd::noise::entangler_params(1.7)?;
        let s = solve_schedule(&q)?;
        let (plus, minus) = block_frames();
        let mut dyn_norm: f64 = 0.0;
        for frame in [plus, minus] {
            let ev = evolve_subspace(&s.drive(), &frame, &self.hol)?;
            dyn_norm = dyn_norm.max(max_abs(&ev.d_accum));
        }
        self.push(Check::below("purely_geometric.block_dynamical_norm", dyn_norm, 1e-12));
        Ok(())
    }

    /// Random site-phase redistributions of the ring's flux.
    fn gauge(&mut self) -> holoqd::Result<()> {
        let lp = LambdaLoop64 {
            params: LambdaParams64::new(FRAC_PI_4, 0.3)?,
            envelope: PulseEnvelope64::with_area(EnvelopeShape::SineSquared, PI, 1.0)?,
            total_flux: 0.37,
        };
        let ev = evolve_subspace(&ring_drive(&lp.network()?, &lp.envelope)?, &qubit_frame(), &self.hol)?;
        let mut worst: f64 = 0.0;
        for _ in 0..self.p.gauge_samples {
            let phases: Vec<f64> = (0..3).map(|_| self.angle(-PI, PI)).collect();
            worst = worst.max(gauge_transform_check(&lp, &ev, &phases, &self.hol)?);
        }
        self.push(Check::below("gauge_covariance.max_deviation", worst, 1e-7));
        Ok(())
    }

    /// Same holonomy for square, sine-squared and truncated-gaussian pulses.
    fn envelopes(&mut self) -> holoqd::Result<()> {
        let mut worst: f64 = 0.0;
        for (theta, phi) in [(FRAC_PI_4, 0.0), (1.1, 0.4), (2.3, -1.2)] {
            let params = LambdaParams64::new(theta, phi)?;
            let mut gates = Vec::new();
            for shape in SHAPES {
                let (_, rep) = run_loop(&LambdaLoop64::pi_pulse(params, shape, 1.0)?, &self.hol)?;
                gates.push(rep.holonomy);
            }
            for a in 0..gates.len() {
                for b in a + 1..gates.len() {
                    worst = worst.max(phase_distance(&gates[a], &gates[b]));
                }
            }
        }
        self.push(Check::below("envelope_independence.max_pairwise", worst, 1e-7));
        Ok(())
    }

    fn entangler(&mut self) -> holoqd::Result<()> {
        let mut sets = vec![
            TwoQubitParams64::new(1.0, 1.0, 2.0, 0.0),
            TwoQubitParams64::new(1.0, 1.0, 1.0, 0.2),
            TwoQubitParams64 {
                n1: 1,
                gap: 0.3,
                ..TwoQubitParams64::new(0.7, 1.3, 2.5, -0.4)
            },
            TwoQubitParams64 {
                n1: 1,
                n2: 1,
                gap: 1.0,
                ..TwoQubitParams64::new(1.5, 0.8, 0.3, 1.9)
            },
            holoqd::noise::entangler_params(1.7)?,
        ];
        for _ in 0..5 {
            let mut q = TwoQubitParams64::new(
                self.angle(0.2, 2.0),
                self.angle(0.2, 2.0),
                self.angle(-3.0, 3.0),
                self.angle(-3.0, 3.0),
            );
            q.n1 = self.rng.random_range(0..2);
            q.n2 = self.rng.random_range(0..2);
            q.gap = self.angle(0.0, 1.0);
            sets.push(q);
        }
        let (mut analytic, mut off, mut numeric, mut zy): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for q in &sets {
            let s = solve_schedule(q)?;
            let r = assemble_gate(&s)?;
            let sign = C64::new(s.sign(), 0.0);
            analytic = analytic.max(max_abs(&(&r.unitary - controlled_rotation(s.varphi_rot) * sign)));
            zy = zy.max(max_abs(&(&r.unitary - zy_rotation(s.varphi_rot) * sign)));
            off = off.max(r.off_block);
            let u = evolve_drive(&integrated_drive(&s), &self.integrator())?.unitary;
            numeric = numeric.max(max_abs(&(u - &r.unitary)));
        }
        self.push(Check::below("entangler.analytic_vs_composed", analytic, 1e-9));
        self.push(Check::below("entangler.zy_form_vs_composed", zy, 1e-9));
        self.push(Check::below("entangler.off_block", off, 1e-9));
        self.push(Check::below("entangler.numerical_vs_composed", numeric, 1e-8));
        Ok(())
    }

    fn concurrence(&mut self) -> holoqd::Result<()> {
        let table = sweep_concurrence(&self.p.grid)?;
        self.push(Check::below("concurrence.grid_cross_check", table.max_check_deviation, 1e-8));
        let unit_line = table.rows.iter().filter(|r| r.0 == 1.0).fold(0.0f64, |a, r| a.max(r.2));
        let on_line = table.rows.iter().filter(|r| r.0 == 1.0).count();
        self.push(Check::at_least("concurrence.unit_ratio_points", on_line as f64, 1.0));
        self.push(Check::at_most("concurrence.unit_ratio_line_max", unit_line, 0.0));

        let mut worst: f64 = 0.0;
        for _ in 0..self.p.random_points {
            let (x, y) = (self.angle(0.0, 4.0), self.angle(0.0, 4.0));
            let gate = assemble_gate(&solve_schedule(&params_at(x, y))?)?;
            worst = worst.max((concurrence_of(&gate.unitary)? - concurrence_surface(x, y)).abs());
        }
        self.push(Check::below("concurrence.random_points", worst, 1e-8));

        let q = solve_for_entangling_power(1.0, &params_at(0.0, 0.5), FreeAmplitude::First)?;
        let gate = assemble_gate(&solve_schedule(&q)?)?;
        self.push(Check::below("concurrence.maximal_attained", 1.0 - concurrence_of(&gate.unitary)?, 1e-8));
        self.push(Check::below("concurrence.maximal_on_surface", 1.0 - concurrence_surface(q.amp1, 0.5), 1e-8));
        Ok(())
    }

    fn fidelity(&mut self) -> holoqd::Result<()> {
        let cfg = self.integrator();
        let hadamard = hadamard_protocol(EnvelopeShape::SineSquared, 1.0)?;
        let template = NoiseSpec::new(0.0, SiteMask::full(3), NoiseChannel::SiteDephasing)?;
        let f100 = gate_fidelity(&hadamard, &template.with_gamma(1.0 / 100.0), &cfg)?;
        self.push(Check::at_least("fidelity.hadamard_ratio_100", f100, 0.97));
        let curve = fidelity_curve(&hadamard, &template, &log_grid(1.0, 1e4, 20), &cfg)?;
        self.push(Check::at_most("fidelity.hadamard_monotonicity_violation", curve.monotonicity_violation(), 0.0));

        let mut ideal: f64 = 0.0;
        for protocol in [hadamard, pi8_protocol(EnvelopeShape::SineSquared, 1.0)?] {
            ideal = ideal.max((1.0 - gate_fidelity(&protocol, &template, &cfg)?).abs());
        }
        let entangler = entangler_protocol(1.0)?;
        let two = NoiseSpec::new(0.0, SiteMask::full(4), NoiseChannel::SiteDephasing)?;
        ideal = ideal.max((1.0 - gate_fidelity(&entangler, &two, &cfg)?).abs());
        self.push(Check::below("fidelity.noiseless_infidelity", ideal, 1e-8));
        Ok(())
    }

    /// High-order integrator against the brute-force product formula.
    fn propagator(&mut self) -> holoqd::Result<()> {
        let cfg = self.integrator();
        let env = PulseEnvelope64::with_area(EnvelopeShape::SineSquared, PI, 1.0)?;
        let gauss = PulseEnvelope64::with_area(EnvelopeShape::GaussianTruncated, PI, 1.0)?;
        let lambda = LambdaParams64::new(1.1, 0.4)?;
        let ring = DotNetwork64::ring(vec![0.3, -0.2, 0.1], vec![1.0, 0.8, 0.6], 0.7)?;
        let q = TwoQubitParams64::new(0.8, 1.0, 2.0, 0.0);
        let cases: Vec<(&str, usize, Hamiltonian)> = vec![
            ("lambda", 3, Box::new(move |t| build_lambda_hamiltonian(&lambda, &env, t))),
            ("lambda_gaussian", 3, Box::new(move |t| build_lambda_hamiltonian(&lambda, &gauss, t))),
            (
                "ring",
                3,
                Box::new(move |t| build_ring_hamiltonian_scaled(&ring, env.value(t)).expect("valid ring")),
            ),
            (
                "two_qubit",
                4,
                Box::new(move |t| build_twoqubit_hamiltonian(&q, q.amp1 * env.value(t), 0.5 * (3.0 * t).sin())),
            ),
        ];
        let mut worst: f64 = 0.0;
        let (mut min_order, mut max_order) = (f64::INFINITY, f64::NEG_INFINITY);
        for (name, dim, h) in cases {
            let h: std::sync::Arc<dyn Fn(f64) -> CMatrix64 + Send + Sync> = h.into();
            let h2 = h.clone();
            let high = evolve(move |t| h2(t), dim, 0.0, 1.0, &cfg)?.unitary;
            let brute = evolve_bruteforce(|t| h(t), 0.0, 1.0, BRUTE_FORCE_STEPS);
            worst = worst.max(max_abs(&(&high - brute)));
            if name == "ring" || name == "two_qubit" {
                let errors: Vec<f64> = (6..=10)
                    .map(|k| max_abs(&(&high - evolve_bruteforce(|t| h(t), 0.0, 1.0, 1 << k))))
                    .collect();
                for w in errors.windows(2) {
                    let order = (w[0] / w[1]).log2();
                    min_order = min_order.min(order);
                    max_order = max_order.max(order);
                }
            }
        }
        self.push(Check::below("propagator.high_order_vs_brute_force", worst, 1e-7));
        self.push(Check::at_least("propagator.brute_force_order_min", min_order, 1.9));
        self.push(Check::at_most("propagator.brute_force_order_max", max_order, 2.1));
        Ok(())
    }

    fn composition(&mut self) -> holoqd::Result<()> {
        let (mut formula, mut product): (f64, f64) = (0.0, 0.0);
        for _ in 0..self.p.compose_pairs {
            let n = LambdaParams64::new(self.angle(0.0, PI), self.angle(0.0, 2.0 * PI))?;
            let m = LambdaParams64::new(self.angle(0.0, PI), self.angle(0.0, 2.0 * PI))?;
            let composed = compose_loops(&[n, m])?;
            formula = formula.max(max_abs(&(&composed - two_loop_formula(n.axis(), m.axis()))));
            let direct = n_dot_sigma(m.axis()) * n_dot_sigma(n.axis());
            product = product.max(max_abs(&(&composed - direct)));
        }
        self.push(Check::below("composition.formula", formula, 1e-12));
        self.push(Check::below("composition.direct_product", product, 1e-12));

        let pair = azimuthal_pair(PI / 8.0)?;
        let analytic = phase_distance(&compose_loops(&pair)?, &rz(FRAC_PI_4));
        self.push(Check::below("composition.pi8_analytic", analytic, 1e-12));
        let mut worst: f64 = 0.0;
        for shape in SHAPES {
            worst = worst.max(protocol_distance(&pi8_protocol(shape, 1.0)?, &self.hol)?);
        }
        self.push(Check::below("composition.pi8_propagated", worst, 1e-7));
        Ok(())
    }

    /// Open-system invariants.
    fn noise(&mut self) -> holoqd::Result<()> {
        let cfg = self.integrator();
        let layout = DotLayout::single_lambda();

        // idle dephasing: coherence between dots 0 and 2 decays at rate γ
        let (gamma, t) = (0.3, 2.0);
        let spec = NoiseSpec::new(gamma, SiteMask::full(3), NoiseChannel::SiteDephasing)?;
        let ch = noisy_channel(&Drive64::new(3).then_idle(t), &spec, &layout, &cfg)?;
        let plus = (basis_ket::<f64>(3, 0) + basis_ket::<f64>(3, 2)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = ch.apply(&(&plus * plus.adjoint()));
        let expected = 0.5 * (-gamma * t).exp();
        self.push(Check::below("noise.dephasing_rate", (rho[(0, 2)].re - expected).abs(), 1e-10));

        // trace and positivity along a noisy Hadamard trajectory
        let lp = LambdaLoop64::pi_pulse(LambdaParams64::new(FRAC_PI_4, 0.0)?, EnvelopeShape::SineSquared, 1.0)?;
        let (mut trace, mut herm, mut neg): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for channel in [NoiseChannel::SiteDephasing, NoiseChannel::SiteDepolarizingDiagonal] {
            let spec = NoiseSpec::new(0.05, SiteMask::full(3), channel)?;
            for k in 1..=8 {
                let end = k as f64 / 8.0;
                let (p, e) = (lp.params, lp.envelope);
                let drive = Drive64::smooth(3, 0.0, end, move |s| build_lambda_hamiltonian(&p, &e, s));
                let ch = noisy_channel(&drive, &spec, &layout, &cfg)?;
                for psi in product_ensemble::<f64>(1) {
                    let v = CMatrix64::from_column_slice(3, 1, &[psi[(0, 0)], C64::new(0.0, 0.0), psi[(1, 0)]]);
                    let rho = ch.apply(&(&v * v.adjoint()));
                    trace = trace.max((rho.trace().re - 1.0).abs());
                    herm = herm.max(hermitian_defect(&rho));
                    neg = neg.max(-holoqd::linalg::eigvalsh(&holoqd::linalg::hermitize(&rho))[0]);
                }
            }
        }
        self.push(Check::below("noise.trace_drift", trace, 1e-9));
        self.push(Check::below("noise.hermiticity_defect", herm, 1e-10));
        self.push(Check::below("noise.negative_eigenvalue", neg, 1e-8));

        // the noiseless channel is conjugation by the closed-system propagator
        let protocol = entangler_protocol(1.3)?;
        let spec = NoiseSpec::new(0.0, SiteMask::full(4), NoiseChannel::SiteDephasing)?;
        let ch = noisy_channel(&protocol.drive, &spec, &protocol.layout, &cfg)?;
        let u = evolve_drive(&protocol.drive, &cfg)?.unitary;
        let mut closed: f64 = 0.0;
        for psi in product_ensemble::<f64>(2) {
            let rho = &psi * psi.adjoint();
            closed = closed.max(max_abs(&(ch.apply(&rho) - &u * &rho * u.adjoint())));
        }
        self.push(Check::below("noise.closed_system_limit", closed, 1e-8));
        Ok(())
    }
}

type Hamiltonian = Box<dyn Fn(f64) -> CMatrix64 + Send + Sync>;

/// Runs the suite; a numerical error aborts it.
pub fn verify_all(p: &VerifyAllParams, seed: u64) -> holoqd::Result<Vec<Check>> {
    let start = Instant::now();
    let mut hol = HolonomyConfig64::default();
    hol.integrator.tolerance = p.tolerance;
    let mut suite = Suite {
        p,
        rng: ChaCha8Rng::seed_from_u64(seed),
        checks: Vec::new(),
        hol,
    };
    suite.gate_grid()?;
    suite.geometric_two_qubit()?;
    suite.gauge()?;
    suite.envelopes()?;
    suite.entangler()?;
    suite.concurrence()?;
    suite.fidelity()?;
    suite.propagator()?;
    suite.composition()?;
    suite.noise()?;
    let elapsed = start.elapsed().as_secs_f64();
    suite.push(Check::below("suite.runtime_seconds", elapsed, SUITE_BUDGET_SECONDS));
    Ok(suite.checks)
}
