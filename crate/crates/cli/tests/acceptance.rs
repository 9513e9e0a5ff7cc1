//! Acceptance suite. Each criterion is measured against an oracle written
//! here from first principles (explicit Hamiltonians, Pauli algebra,
//! product-formula propagators, an RK4 master-equation integrator) and
//! reported on one line.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use holoqd::holonomy::{compose_loops, evolve_subspace, extract_holonomy, qubit_frame, ring_drive, run_loop};
use holoqd::model::{Bond, EnvelopeShape};
use holoqd::noise::{
    entangler_protocol, gate_fidelity, hadamard_protocol, log_grid, pi8_protocol, NoiseChannel, NoiseSpec, SiteMask,
};
use holoqd::propagate::{evolve, evolve_bruteforce, IntegratorConfig};
use holoqd::twoqubit::{
    assemble_gate, concurrence_of, concurrence_surface, params_at, solve_for_entangling_power, solve_schedule,
    sweep_concurrence, FreeAmplitude,
};
use holoqd::{
    Drive64, DotNetwork64, HolonomyConfig64, IntegratorConfig64, LambdaLoop64, LambdaParams64, PulseEnvelope64,
    SweepGrid64, TwoQubitParams64,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = DMatrix<C>;

const SEED: u64 = 0x5eed;

// ---- oracle algebra -------------------------------------------------------

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn mat(n: usize, entries: &[C]) -> M {
    M::from_row_slice(n, n, entries)
}

fn sx() -> M {
    mat(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

fn sy() -> M {
    mat(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

fn sz() -> M {
    mat(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

fn id(n: usize) -> M {
    M::identity(n, n)
}

fn n_sigma(n: [f64; 3]) -> M {
    sx() * c(n[0], 0.) + sy() * c(n[1], 0.) + sz() * c(n[2], 0.)
}

fn axis(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn max_abs(m: &M) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `min_χ ‖A − e^{iχ}B‖_max`, with the phase fixed by the trace overlap and
/// refined over a fine scan around it.
fn phase_dist(a: &M, b: &M) -> f64 {
    let chi0 = (b.adjoint() * a).trace().arg();
    (-200..=200)
        .map(|k| chi0 + k as f64 * 1e-9)
        .map(|chi| max_abs(&(a - b * C::from_polar(1.0, chi))))
        .fold(f64::INFINITY, f64::min)
}

/// `exp(−iH·dt)` for Hermitian `H` by eigendecomposition.
fn expm_h(h: &M, dt: f64) -> M {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors.clone();
    let d = M::from_diagonal(&nalgebra::DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|&l| C::from_polar(1.0, -l * dt)),
    ));
    &v * d * v.adjoint()
}

/// Midpoint product formula over `n` uniform steps.
fn midpoint_product(h: &dyn Fn(f64) -> M, t1: f64, n: usize) -> M {
    let dt = t1 / n as f64;
    let mut u = id(h(0.0).nrows());
    for k in 0..n {
        u = expm_h(&h((k as f64 + 0.5) * dt), dt) * u;
    }
    u
}

fn sub(u: &M, idx: &[usize]) -> M {
    M::from_fn(idx.len(), idx.len(), |r, k| u[(idx[r], idx[k])])
}

/// Λ Hamiltonian in `(|0⟩, |a⟩, |1⟩)` with `𝒥₁₂* = sin(θ/2)e^{iφ}`,
/// `𝒥₂₃ = −cos(θ/2)`.
fn lambda_h(theta: f64, phi: f64, omega: f64) -> M {
    let j12c = C::from_polar((theta / 2.0).sin(), phi);
    let j23 = c(-(theta / 2.0).cos(), 0.);
    let mut h = M::zeros(3, 3);
    h[(1, 0)] = j12c * omega;
    h[(0, 1)] = j12c.conj() * omega;
    h[(1, 2)] = j23 * omega;
    h[(2, 1)] = j23.conj() * omega;
    h
}

/// Sine-squared envelope on `[0, 1]` with area π.
fn sin2_pi(t: f64) -> f64 {
    2.0 * PI * (PI * t).sin().powi(2)
}

/// `t₁₃⁽¹⁾ σx⊗I + t₁₃⁽²⁾ I⊗σx + α σy⊗σy`.
fn two_qubit_h(t1: f64, t2: f64, alpha: f64) -> M {
    sx().kronecker(&id(2)) * c(t1, 0.) + id(2).kronecker(&sx()) * c(t2, 0.) + sy().kronecker(&sy()) * c(alpha, 0.)
}

fn rotation(phi: f64) -> M {
    mat(2, &[c(phi.cos(), 0.), c(-phi.sin(), 0.), c(phi.sin(), 0.), c(phi.cos(), 0.)])
}

/// Closed form `U(t) = cos(ωt)I − (i/ω) sin(ωt)H`, valid since `H² = ω²I`.
fn square_pulse(amp: f64, alpha: f64, delta: f64, t: f64) -> M {
    let h = two_qubit_h(amp * delta, 0.0, alpha);
    let w = (amp * delta).hypot(alpha);
    id(4) * c((w * t).cos(), 0.) - h * c(0., (w * t).sin() / w)
}

struct Entangler {
    q: TwoQubitParams64,
    tau1: f64,
    tau2: f64,
    composed: M,
    closed_form: M,
    sin2phi: f64,
}

/// Entangler from the oracle's own schedule `ωτ = π/2 + nπ`.
fn entangler(q: TwoQubitParams64) -> Entangler {
    let w = (q.amp1 * q.delta).hypot(q.alpha);
    let wt = (q.amp2 * q.delta).hypot(q.alpha);
    let tau1 = (FRAC_PI_2 + PI * q.n1 as f64) / w;
    let tau2 = (FRAC_PI_2 + PI * q.n2 as f64) / wt;
    let composed = square_pulse(q.amp2, q.alpha, q.delta, tau2) * square_pulse(q.amp1, q.alpha, q.delta, tau1);
    let s = q.alpha * q.delta * (q.amp1 - q.amp2) / (w * wt);
    let co = (q.amp1 * q.amp2 * q.delta * q.delta + q.alpha * q.alpha) / (w * wt);
    let phi = s.atan2(co);
    let sign = if (q.n1 + q.n2 + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let mut closed_form = M::zeros(4, 4);
    closed_form.view_mut((0, 0), (2, 2)).copy_from(&rotation(phi));
    closed_form.view_mut((2, 2), (2, 2)).copy_from(&rotation(-phi));
    Entangler {
        q,
        tau1,
        tau2,
        composed,
        closed_form: closed_form * c(sign, 0.),
        sin2phi: (2.0 * s * co).abs(),
    }
}

/// Concurrence of `(a₀|0⟩ + a₁|1⟩)⊗(b₀|0⟩ + b₁|1⟩)` mapped by `u`.
fn output_concurrence(u: &M, a: [C; 2], b: [C; 2]) -> f64 {
    let psi = M::from_column_slice(4, 1, &[a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]);
    let out = u * psi;
    (2.0 * (out[(0, 0)] * out[(3, 0)] - out[(1, 0)] * out[(2, 0)])).norm()
}

fn random_qubit(rng: &mut ChaCha8Rng) -> [C; 2] {
    let t: f64 = rng.random_range(0.0..PI);
    let p: f64 = rng.random_range(0.0..2.0 * PI);
    [c((t / 2.0).cos(), 0.), C::from_polar((t / 2.0).sin(), p)]
}

fn cfg() -> HolonomyConfig64 {
    HolonomyConfig64::default()
}

fn integrator() -> IntegratorConfig64 {
    IntegratorConfig::default()
}

// ---- reporting ------------------------------------------------------------

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(checks: &[(&str, f64, bool)]) -> Outcome {
    let passed = checks.iter().all(|c| c.2);
    let detail = checks.iter().map(|(n, v, _)| format!("{n}={v:.3e}")).collect::<Vec<_>>().join(", ");
    Outcome { passed, detail }
}

// ---- criteria -------------------------------------------------------------

fn gate_grid() -> Outcome {
    let start = Instant::now();
    let (mut worst_hol, mut worst_prop): (f64, f64) = (0.0, 0.0);
    for i in 0..9 {
        let theta = i as f64 * PI / 8.0;
        for j in 0..9 {
            let phi = j as f64 * 2.0 * PI / 9.0;
            let oracle = n_sigma(axis(theta, phi));
            let lp = LambdaLoop64::pi_pulse(
                LambdaParams64::new(theta, phi).unwrap(),
                EnvelopeShape::SineSquared,
                1.0,
            )
            .unwrap();
            let ev = evolve_subspace(&lp.drive(), &qubit_frame(), &cfg()).unwrap();
            let hol = extract_holonomy(&ev, None, 1e-6).unwrap().holonomy;
            worst_hol = worst_hol.max(phase_dist(&hol, &oracle));
            let u = evolve(move |t| lambda_h(theta, phi, sin2_pi(t)), 3, 0.0, 1.0, &integrator()).unwrap().unitary;
            worst_prop = worst_prop.max(phase_dist(&sub(&u, &[0, 2]), &oracle));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(&[
        ("holonomy_vs_n.sigma", worst_hol, worst_hol < 1e-7),
        ("propagator_vs_n.sigma", worst_prop, worst_prop < 1e-7),
        ("runtime_s", secs, secs < 10.0),
    ])
}

fn zero_dynamical_phase() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..9 {
        for j in 0..9 {
            for shape in [EnvelopeShape::Square, EnvelopeShape::SineSquared, EnvelopeShape::GaussianTruncated] {
                let p = LambdaParams64::new(i as f64 * PI / 8.0, j as f64 * 2.0 * PI / 9.0).unwrap();
                let (ev, _) = run_loop(&LambdaLoop64::pi_pulse(p, shape, 1.0).unwrap(), &cfg()).unwrap();
                worst = worst.max(max_abs(&ev.d_accum));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut projected: f64 = 0.0;
    for _ in 0..100 {
        let q = TwoQubitParams64::new(rng.random_range(-2.0..2.0), 1.0, 0.0, 0.0);
        let h = holoqd::model::build_twoqubit_hamiltonian(&q, rng.random_range(-3.0..3.0), 0.0);
        let (plus, minus) = (sub(&h, &[0, 1]), sub(&h, &[2, 3]));
        projected = projected.max(max_abs(&plus)).max(max_abs(&minus));
    }
    outcome(&[
        ("max_D_norm", worst, worst < 1e-12),
        ("block_projected_H", projected, projected == 0.0),
    ])
}

fn gauge_covariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (theta, phi, flux) = (FRAC_PI_4, 0.0, 0.37);
    let env = PulseEnvelope64::with_area(EnvelopeShape::SineSquared, PI, 1.0).unwrap();
    // Λ ring: (0,1) carries 𝒥₁₂, (1,2) carries 𝒥₂₃, (2,0) is closed and
    // completes the flux
    let bonds = |shift: [f64; 3]| {
        let base = [(0, 1, (theta / 2.0).sin(), phi), (1, 2, (theta / 2.0).cos(), PI), (2, 0, 0.0, flux - phi - PI)];
        base.iter()
            .map(|&(from, to, magnitude, phase)| Bond {
                from,
                to,
                magnitude,
                phase: phase + shift[from] - shift[to],
            })
            .collect::<Vec<_>>()
    };
    let holonomy = |shift: [f64; 3]| {
        let net = DotNetwork64::new(vec![0.0; 3], bonds(shift), true).unwrap();
        let ev = evolve_subspace(&ring_drive(&net, &env).unwrap(), &qubit_frame(), &cfg()).unwrap();
        extract_holonomy(&ev, None, 1e-6).unwrap().holonomy
    };
    let u = holonomy([0.0; 3]);
    let untouched = phase_dist(&u, &n_sigma(axis(theta, phi)));
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let chi: [f64; 3] = std::array::from_fn(|_| rng.random_range(-PI..PI));
        let moved = holonomy(chi);
        // H' = G H G† with G = diag(e^{−iχ}); on the qubit sites Γ = diag(e^{iχ₀}, e^{iχ₂})
        let gamma = M::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C::from_polar(1.0, chi[0]),
            C::from_polar(1.0, chi[2]),
        ]));
        worst = worst.max(max_abs(&(moved - gamma.adjoint() * &u * &gamma)));
    }
    outcome(&[
        ("max_|U'-G^+UG|", worst, worst < 1e-7),
        ("hadamard_loop_vs_n.sigma", untouched, untouched < 1e-7),
    ])
}

fn envelope_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst: f64 = 0.0;
    let mut oracle_dev: f64 = 0.0;
    for k in 0..6 {
        let (theta, phi) = if k == 0 { (FRAC_PI_4, 0.0) } else { (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)) };
        let p = LambdaParams64::new(theta, phi).unwrap();
        let gates: Vec<M> = [EnvelopeShape::Square, EnvelopeShape::SineSquared, EnvelopeShape::GaussianTruncated]
            .iter()
            .map(|&shape| {
                let env = PulseEnvelope64::with_area(shape, PI, 1.0).unwrap();
                assert!((env.area() - PI).abs() < 1e-12);
                let lp = LambdaLoop64 { params: p, envelope: env, total_flux: 0.0 };
                let ev = evolve_subspace(&lp.drive(), &qubit_frame(), &cfg()).unwrap();
                extract_holonomy(&ev, None, 1e-6).unwrap().holonomy
            })
            .collect();
        for a in 0..3 {
            oracle_dev = oracle_dev.max(phase_dist(&gates[a], &n_sigma(axis(theta, phi))));
            for b in a + 1..3 {
                worst = worst.max(phase_dist(&gates[a], &gates[b]));
            }
        }
    }
    outcome(&[
        ("max_pairwise", worst, worst < 1e-7),
        ("max_vs_n.sigma", oracle_dev, oracle_dev < 1e-7),
    ])
}

fn entangler_cases() -> Vec<TwoQubitParams64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut sets = vec![
        TwoQubitParams64::new(1.0, 1.0, 2.0, 0.0),
        TwoQubitParams64::new(1.0, 1.0, 1.0, 0.2),
        TwoQubitParams64 { n1: 1, ..TwoQubitParams64::new(0.7, 1.3, 2.5, -0.4) },
        TwoQubitParams64 { n1: 1, n2: 1, gap: 0.8, ..TwoQubitParams64::new(1.5, 0.8, 0.3, 1.9) },
    ];
    for _ in 0..16 {
        let mut q = TwoQubitParams64::new(
            rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        q.n1 = rng.random_range(0..2);
        q.n2 = rng.random_range(0..2);
        q.gap = rng.random_range(0.0..1.0);
        sets.push(q);
    }
    sets
}

fn two_qubit_agreement() -> Outcome {
    let (mut assembled, mut closed, mut off, mut numeric): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for q in entangler_cases() {
        let e = entangler(q);
        let report = assemble_gate(&solve_schedule(&q).unwrap()).unwrap();
        assembled = assembled.max(max_abs(&(&report.unitary - &e.composed)));
        closed = closed.max(max_abs(&(&e.closed_form - &e.composed)));
        off = off.max(max_abs(&report.unitary.view((0, 2), (2, 2)).into_owned()));
        off = off.max(max_abs(&report.unitary.view((2, 0), (2, 2)).into_owned()));
        let (h1, h2) = (
            two_qubit_h(e.q.amp1 * e.q.delta, 0.0, e.q.alpha),
            two_qubit_h(e.q.amp2 * e.q.delta, 0.0, e.q.alpha),
        );
        let mut drive = Drive64::new(4).then(e.tau1, move |_| h1.clone());
        if e.q.gap > 0.0 {
            drive = drive.then(e.q.gap, |_| M::zeros(4, 4));
        }
        let drive = drive.then(e.tau2, move |_| h2.clone());
        let u = holoqd::propagate::evolve_drive(&drive, &integrator()).unwrap().unitary;
        numeric = numeric.max(max_abs(&(u - &e.composed)));
    }
    outcome(&[
        ("assembled_vs_composed", assembled, assembled < 1e-9),
        ("closed_form_vs_composed", closed, closed < 1e-9),
        ("off_block", off, off < 1e-9),
        ("numerical_vs_composed", numeric, numeric < 1e-8),
    ])
}

fn concurrence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let (mut decomposition, mut surface, mut sampled_excess): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..100 {
        let (x, y) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
        let e = entangler(params_at(x, y));
        let gate = assemble_gate(&solve_schedule(&e.q).unwrap()).unwrap().unitary;
        let cd = concurrence_of(&gate).unwrap();
        decomposition = decomposition.max((cd - e.sin2phi).abs());
        surface = surface.max((concurrence_surface(x, y) - e.sin2phi).abs());
        if k < 10 {
            // no product input may exceed the gate's concurrence
            for _ in 0..200 {
                let (a, b) = (random_qubit(&mut rng), random_qubit(&mut rng));
                sampled_excess = sampled_excess.max(output_concurrence(&e.composed, a, b) - e.sin2phi);
            }
        }
    }
    let table = sweep_concurrence(&SweepGrid64::default()).unwrap();
    let line: Vec<f64> = table.rows.iter().filter(|r| r.0 == 1.0).map(|r| r.2).collect();
    let line_max = line.iter().fold(0.0f64, |a, &b| a.max(b));
    let q = solve_for_entangling_power(1.0, &params_at(0.0, 0.5), FreeAmplitude::First).unwrap();
    let best = entangler(q);
    // |0⟩⊗|+⟩-type inputs reach the maximum for a controlled rotation by π/4
    let attained = output_concurrence(
        &best.composed,
        [c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)],
        [c(1.0, 0.), c(0.0, 0.)],
    );
    let in_domain = (0.0..=4.0).contains(&q.amp1);
    outcome(&[
        ("decomposition_vs_|sin2phi|", decomposition, decomposition < 1e-8),
        ("surface_vs_|sin2phi|", surface, surface < 1e-8),
        ("sampled_excess", sampled_excess, sampled_excess < 1e-9),
        ("unit_ratio_line_max", line_max, !line.is_empty() && line_max == 0.0),
        ("1-max_attained", 1.0 - best.sin2phi, 1.0 - best.sin2phi < 1e-8 && in_domain),
        ("1-state_concurrence", 1.0 - attained, 1.0 - attained < 1e-8),
    ])
}

/// RK4 on `ρ̇ = −i[H,ρ] + γ Σ_k (P_k ρ P_k − ½{P_k, ρ})` over all three dots.
fn dephased_hadamard_fidelity(gamma: f64, steps: usize) -> f64 {
    let (theta, phi) = (FRAC_PI_4, 0.0);
    let rhs = |t: f64, rho: &M| -> M {
        let h = lambda_h(theta, phi, sin2_pi(t));
        let mut d = (&h * rho - rho * &h) * c(0., -1.);
        for k in 0..3 {
            let mut p = M::zeros(3, 3);
            p[(k, k)] = c(1., 0.);
            d += (&p * rho * &p - (&p * rho + rho * &p) * c(0.5, 0.)) * c(gamma, 0.);
        }
        d
    };
    let target = n_sigma(axis(theta, phi));
    let r = FRAC_1_SQRT_2;
    let states = [
        [c(1., 0.), c(0., 0.)],
        [c(0., 0.), c(1., 0.)],
        [c(r, 0.), c(r, 0.)],
        [c(r, 0.), c(-r, 0.)],
        [c(r, 0.), c(0., r)],
        [c(r, 0.), c(0., -r)],
    ];
    let dt = 1.0 / steps as f64;
    let mut total = 0.0;
    for s in states {
        let embed = |v: [C; 2]| M::from_column_slice(3, 1, &[v[0], c(0., 0.), v[1]]);
        let psi = embed(s);
        let out = &target * M::from_column_slice(2, 1, &s);
        let want = embed([out[(0, 0)], out[(1, 0)]]);
        let mut rho = &psi * psi.adjoint();
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = rhs(t, &rho);
            let k2 = rhs(t + dt / 2.0, &(&rho + &k1 * c(dt / 2.0, 0.)));
            let k3 = rhs(t + dt / 2.0, &(&rho + &k2 * c(dt / 2.0, 0.)));
            let k4 = rhs(t + dt, &(&rho + &k3 * c(dt, 0.)));
            rho += (k1 + k2 * c(2., 0.) + k3 * c(2., 0.) + k4) * c(dt / 6.0, 0.);
        }
        total += (want.adjoint() * rho * want)[(0, 0)].re;
    }
    total / 6.0
}

fn fidelity() -> Outcome {
    let hadamard = hadamard_protocol(EnvelopeShape::SineSquared, 1.0).unwrap();
    let spec = NoiseSpec::new(0.0, SiteMask::full(3), NoiseChannel::SiteDephasing).unwrap();
    let f100 = gate_fidelity(&hadamard, &spec.with_gamma(0.01), &integrator()).unwrap();
    let oracle = dephased_hadamard_fidelity(0.01, 4000);
    // monotone non-increasing in γ on 20 log-spaced rates
    let rates = log_grid(1e-4, 1.0, 20);
    let fids: Vec<f64> = rates
        .iter()
        .map(|&g| gate_fidelity(&hadamard, &spec.with_gamma(g), &integrator()).unwrap())
        .collect();
    let rise = fids.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut ideal: f64 = 0.0;
    for protocol in [hadamard, pi8_protocol(EnvelopeShape::SineSquared, 1.0).unwrap()] {
        ideal = ideal.max((1.0 - gate_fidelity(&protocol, &spec, &integrator()).unwrap()).abs());
    }
    let two = NoiseSpec::new(0.0, SiteMask::full(4), NoiseChannel::SiteDephasing).unwrap();
    for rho in [0.8, 1.0, 2.5] {
        let e = entangler_protocol(rho).unwrap();
        ideal = ideal.max((1.0 - gate_fidelity(&e, &two, &integrator()).unwrap()).abs());
    }
    outcome(&[
        ("F(ratio=100)", f100, f100 >= 0.97),
        ("|F-F_rk4|", (f100 - oracle).abs(), (f100 - oracle).abs() < 1e-6),
        ("max_rise_with_gamma", rise, rise <= 0.0),
        ("|1-F(gamma=0)|", ideal, ideal < 1e-8),
    ])
}

fn oracle_equivalence() -> Outcome {
    let (theta, phi) = (1.1, 0.4);
    let gauss = PulseEnvelope64::with_area(EnvelopeShape::GaussianTruncated, PI, 1.0).unwrap();
    let ring_h = |t: f64| {
        // onsite energies make H(t) non-commuting at different times
        let j = sin2_pi(t);
        let mut h = M::zeros(3, 3);
        for (k, e) in [0.3, -0.2, 0.1].iter().enumerate() {
            h[(k, k)] = c(*e, 0.);
        }
        for (a, b, m) in [(0, 1, 1.0), (1, 2, 0.8), (2, 0, 0.6)] {
            let hop = C::from_polar(m * j, -0.7 / 3.0);
            h[(a, b)] += hop;
            h[(b, a)] += hop.conj();
        }
        h
    };
    let cases: Vec<(&str, Box<dyn Fn(f64) -> M + Send + Sync>)> = vec![
        ("lambda", Box::new(move |t| lambda_h(theta, phi, sin2_pi(t)))),
        ("lambda_gaussian", Box::new(move |t| lambda_h(theta, phi, gauss.value(t)))),
        ("ring", Box::new(ring_h)),
        ("two_qubit", Box::new(|t| two_qubit_h(2.0 * sin2_pi(t) / (2.0 * PI), 0.5 * (3.0 * t).sin(), 0.8))),
    ];
    let (mut worst, mut worst_lib): (f64, f64) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (name, h) in cases {
        let h: std::sync::Arc<dyn Fn(f64) -> M + Send + Sync> = h.into();
        let hh = h.clone();
        let dim = h(0.0).nrows();
        let high = evolve(move |t| hh(t), dim, 0.0, 1.0, &integrator()).unwrap().unitary;
        let brute = midpoint_product(&*h, 1.0, 1 << 16);
        worst = worst.max(max_abs(&(&high - &brute)));
        let lib = evolve_bruteforce(|t| h(t), 0.0, 1.0, 1 << 16);
        worst_lib = worst_lib.max(max_abs(&(lib - &brute)));
        // Λ drives are Ω(t)·H₀ and commute at all times; with a periodic envelope
        // the midpoint rule is exact and their error sits at round-off
        if name.starts_with("lambda") {
            continue;
        }
        let errs: Vec<f64> = (5..=10).map(|k| max_abs(&(&high - midpoint_product(&*h, 1.0, 1 << k)))).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            lo = lo.min(order);
            hi = hi.max(order);
        }
    }
    outcome(&[
        ("high_order_vs_brute_2^16", worst, worst < 1e-7),
        ("library_brute_vs_oracle_brute", worst_lib, worst_lib < 1e-12),
        ("min_order", lo, lo > 1.9),
        ("max_order", hi, hi < 2.1),
    ])
}

fn composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let (mut formula, mut product): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (t1, p1, t2, p2) = (
            rng.random_range(0.0..PI),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..PI),
            rng.random_range(0.0..2.0 * PI),
        );
        let (n, m) = (axis(t1, p1), axis(t2, p2));
        let lib = compose_loops(&[LambdaParams64::new(t1, p1).unwrap(), LambdaParams64::new(t2, p2).unwrap()]).unwrap();
        // loop n first, then loop m
        let direct = n_sigma(m) * n_sigma(n);
        let dot = n[0] * m[0] + n[1] * m[1] + n[2] * m[2];
        let cross = [n[1] * m[2] - n[2] * m[1], n[2] * m[0] - n[0] * m[2], n[0] * m[1] - n[1] * m[0]];
        let closed = id(2) * c(dot, 0.) - n_sigma(cross) * c(0., 1.);
        formula = formula.max(max_abs(&(&lib - closed)));
        product = product.max(max_abs(&(&lib - direct)));
    }
    let rz = mat(2, &[C::from_polar(1.0, -PI / 8.0), c(0., 0.), c(0., 0.), C::from_polar(1.0, PI / 8.0)]);
    let protocol = pi8_protocol(EnvelopeShape::SineSquared, 1.0).unwrap();
    let ev = evolve_subspace(&protocol.drive, &qubit_frame(), &cfg()).unwrap();
    let pi8 = phase_dist(&extract_holonomy(&ev, None, 1e-6).unwrap().holonomy, &rz);
    outcome(&[
        ("vs_(n.m)I-i.sigma.(nxm)", formula, formula < 1e-12),
        ("vs_direct_product", product, product < 1e-12),
        ("pi8_vs_Rz(pi/4)", pi8, pi8 < 1e-7),
    ])
}

fn full_suite() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_holoqd"))
        .args(["verify-all", "--output"])
        .arg(dir.path())
        .env_remove("HOLOQD_OUTPUT_DIR")
        .output()
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().map(Vec::len).unwrap_or(0);
    let failed = report["checks"]
        .as_array()
        .map(|a| a.iter().filter(|c| c["passed"] != true).count())
        .unwrap_or(usize::MAX);
    outcome(&[
        ("runtime_s", secs, secs < Duration::from_secs(300).as_secs_f64()),
        ("exit_status", out.status.code().unwrap_or(-1) as f64, out.status.success()),
        ("checks", checks as f64, checks > 0 && report["passed"] == true),
        ("failed_checks", failed as f64, failed == 0),
    ])
}

// Runs without the libtest harness so every criterion line is printed even on success.
fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("single-qubit holonomy equals n.sigma on a 9x9 grid", gate_grid),
        ("zero dynamical phase", zero_dynamical_phase),
        ("gauge covariance under flux redistribution", gauge_covariance),
        ("envelope independence", envelope_independence),
        ("two-qubit analytic, composed and numerical agreement", two_qubit_agreement),
        ("concurrence surface", concurrence),
        ("fidelity under dephasing", fidelity),
        ("high-order vs brute-force propagator", oracle_equivalence),
        ("loop composition", composition),
        ("verify-all completes and passes", full_suite),
    ];
    let mut failed = Vec::new();
    for (k, (title, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {} {title}: {}", k + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(k + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
