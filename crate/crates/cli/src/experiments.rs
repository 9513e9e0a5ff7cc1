//! Experiment runners: each computes its artefacts, writes them under the
//! output directory and returns the checks it evaluated.

use std::io;
use std::path::Path;

use holoqd::holonomy::{evolve_subspace, extract_holonomy, qubit_frame, ring_drive};
use holoqd::linalg::{max_abs, n_dot_sigma, unitarity_defect};
use holoqd::model::{build_twoqubit_hamiltonian, EnvelopeShape};
use holoqd::noise::{
    entangler_protocol, fidelity_surface, gate_fidelity, hadamard_protocol, lambda_protocol, log_grid, pi8_protocol,
    fidelity_curve, DotLayout, NoiseSpec,
};
use holoqd::propagate::evolve_drive;
use holoqd::twoqubit::{
    analytic_concurrence, assemble_gate, block_frames, block_projected_norm, controlled_rotation, dimensionless_pair,
    solve_for_entangling_power, solve_schedule, sweep_concurrence, zy_rotation,
};
use holoqd::{
    CMatrix64, Drive64, GateProtocol64, LambdaLoop64, LambdaParams64, PulseEnvelope64, PulseSchedule64,
    TwoQubitParams64, C64,
};
use serde_json::json;

use crate::config::{
    ComposeParams, ConcurrenceSweepParams, EnvelopeParams, FidelityCurveParams, SingleGateParams, SingleQubitGate,
    TwoQubitConfig,
};
use crate::output::{matrix_json, write_csv, write_json};
use crate::report::Check;

/// Accuracy a holonomic gate must reach against its target.
pub const GATE_TOLERANCE: f64 = 1e-7;
/// `‖D‖` bound for a purely geometric evolution.
pub const DYNAMICAL_TOLERANCE: f64 = 1e-12;
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;
pub const NUMERICAL_TOLERANCE: f64 = 1e-8;
pub const CONCURRENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug)]
pub enum RunError {
    Numerical(holoqd::Error),
    Io(io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Numerical(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<holoqd::Error> for RunError {
    fn from(e: holoqd::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

impl Outcome {
    fn json(&mut self, dir: &Path, name: &str, value: &serde_json::Value) -> io::Result<()> {
        write_json(&dir.join(name), value)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
        write_csv(&dir.join(name), header, rows.iter().map(Vec::as_slice))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// Envelope with the configured shape and duration scaled to `area`.
pub fn envelope(p: &EnvelopeParams) -> holoqd::Result<PulseEnvelope64> {
    let mut unit = PulseEnvelope64::new(p.shape, 1.0, p.duration);
    unit.gaussian_width = p.gaussian_width;
    unit.validate()?;
    let mut env = unit;
    env.amplitude = p.area / unit.area();
    Ok(env)
}

pub fn single_gate(p: &SingleGateParams, dir: &Path) -> Result<Outcome, RunError> {
    let lp = LambdaLoop64 {
        params: LambdaParams64::new(p.theta, p.phi)?,
        envelope: envelope(&p.envelope)?,
        total_flux: p.total_flux,
    };
    let drive = if p.ring {
        ring_drive(&lp.network()?, &lp.envelope)?
    } else {
        lp.drive()
    };
    let ev = evolve_subspace(&drive, &qubit_frame(), &p.holonomy)?;
    let target = lp.target();
    let report = extract_holonomy(&ev, Some(&target), p.holonomy.cyclicity_threshold)?;
    let distance = report.target_distance.unwrap_or(f64::NAN);
    let d_norm = max_abs(&ev.d_accum);
    let connection = max_abs(&(ev.connection_holonomy() - &report.holonomy));

    let mut out = Outcome::default();
    out.checks = vec![
        Check::below("target_distance", distance, GATE_TOLERANCE),
        Check::at_most("cyclicity_defect", report.cyclicity_defect, p.holonomy.cyclicity_threshold),
        Check::below("dynamical_phase_norm", d_norm, DYNAMICAL_TOLERANCE),
        Check::below("connection_vs_overlap", connection, ANALYTIC_TOLERANCE),
        Check::below("unitarity_defect", unitarity_defect(&report.holonomy), 1e-10),
        Check::below("frame_orthonormality_defect", ev.orthonormality_defect(), 1e-10),
    ];
    out.json(
        dir,
        "gate.json",
        &json!({
            "theta": p.theta,
            "phi": p.phi,
            "ring": p.ring,
            "total_flux": p.total_flux,
            "basis": ["|0>", "|1>"],
            "holonomy": matrix_json(&report.holonomy),
            "target": matrix_json(&target),
            "target_distance": distance,
            "cyclicity_defect": report.cyclicity_defect,
            "dynamical_phase_norm": d_norm,
            "steps": ev.steps,
        }),
    )?;
    Ok(out)
}

/// `(n·m)I − iσ·(n×m)`: loop `n` followed by loop `m`.
pub fn two_loop_formula(n: [f64; 3], m: [f64; 3]) -> CMatrix64 {
    let dot = n[0] * m[0] + n[1] * m[1] + n[2] * m[2];
    let cross = [
        n[1] * m[2] - n[2] * m[1],
        n[2] * m[0] - n[0] * m[2],
        n[0] * m[1] - n[1] * m[0],
    ];
    CMatrix64::identity(2, 2) * C64::new(dot, 0.0) - n_dot_sigma(cross) * C64::new(0.0, 1.0)
}

pub fn compose(p: &ComposeParams, dir: &Path) -> Result<Outcome, RunError> {
    let env = envelope(&p.envelope)?;
    let loops = p
        .loops
        .iter()
        .map(|l| {
            Ok(LambdaLoop64 {
                params: LambdaParams64::new(l.theta, l.phi)?,
                envelope: env,
                total_flux: 0.0,
            })
        })
        .collect::<holoqd::Result<Vec<_>>>()?;
    let protocol = lambda_protocol("compose", &loops)?;
    let ev = evolve_subspace(&protocol.drive, &qubit_frame(), &p.holonomy)?;
    let report = extract_holonomy(&ev, Some(&protocol.ideal), p.holonomy.cyclicity_threshold)?;
    let distance = report.target_distance.unwrap_or(f64::NAN);

    let mut out = Outcome::default();
    out.checks = vec![
        Check::below("distance_to_product", distance, GATE_TOLERANCE),
        Check::below("dynamical_phase_norm", max_abs(&ev.d_accum), DYNAMICAL_TOLERANCE),
        Check::at_most("cyclicity_defect", report.cyclicity_defect, p.holonomy.cyclicity_threshold),
    ];
    let mut doc = json!({
        "loops": p.loops,
        "order": "application",
        "holonomy": matrix_json(&report.holonomy),
        "product": matrix_json(&protocol.ideal),
        "distance_to_product": distance,
    });
    if let [a, b] = loops.as_slice() {
        let formula = two_loop_formula(a.params.axis(), b.params.axis());
        let dev = max_abs(&(&formula - &protocol.ideal));
        out.checks.push(Check::below("two_loop_formula", dev, 1e-12));
        doc["two_loop_formula"] = matrix_json(&formula);
    }
    out.json(dir, "gate.json", &doc)?;
    Ok(out)
}

/// The schedule as a drive of smooth segments, so the propagator is
/// integrated rather than exponentiated in closed form.
pub fn integrated_drive(s: &PulseSchedule64) -> Drive64 {
    let q = s.q;
    let h1 = build_twoqubit_hamiltonian(&q, q.amp1 * q.delta, 0.0);
    let h2 = build_twoqubit_hamiltonian(&q, q.amp2 * q.delta, 0.0);
    Drive64::new(4)
        .then(s.first_duration(), move |_| h1.clone())
        .then_idle(s.tau2_start - s.tau1)
        .then(s.second_duration(), move |_| h2.clone())
}

pub fn two_qubit(t: &TwoQubitConfig, dir: &Path) -> Result<Outcome, RunError> {
    let mut q: TwoQubitParams64 = t.to_params();
    if let Some(c) = t.target_concurrence {
        q = solve_for_entangling_power(c, &q, t.free)?;
    }
    let s = solve_schedule(&q)?;
    let r = assemble_gate(&s)?;
    let sign = C64::new(s.sign(), 0.0);
    let analytic = controlled_rotation(s.varphi_rot) * sign;
    let numeric = evolve_drive(&integrated_drive(&s), &t.integrator)?.unitary;
    let (timing1, timing2) = s.timing_defects();

    let mut out = Outcome::default();
    out.checks = vec![
        Check::below("timing_defect_first", timing1, 1e-12),
        Check::below("timing_defect_second", timing2, 1e-12),
        Check::below("angle_defect", s.angle_defect(), 1e-12),
        Check::below("off_block", r.off_block, ANALYTIC_TOLERANCE),
        Check::below("analytic_vs_composed", max_abs(&(&r.unitary - &analytic)), ANALYTIC_TOLERANCE),
        Check::below(
            "zy_form_vs_composed",
            max_abs(&(&r.unitary - zy_rotation(s.varphi_rot) * sign)),
            ANALYTIC_TOLERANCE,
        ),
        Check::below("numerical_vs_composed", max_abs(&(&numeric - &r.unitary)), NUMERICAL_TOLERANCE),
        Check::below(
            "concurrence_vs_sin_2phi",
            (r.concurrence - analytic_concurrence(&q)).abs(),
            CONCURRENCE_TOLERANCE,
        ),
    ];
    for (name, amp) in [("block_projected_h_first", q.amp1), ("block_projected_h_second", q.amp2)] {
        let h = build_twoqubit_hamiltonian(&q, amp * q.delta, 0.0);
        out.checks.push(Check::at_most(name, block_projected_norm(&h), 0.0));
    }
    let (plus, minus) = block_frames();
    let hol = holoqd::HolonomyConfig64 {
        integrator: t.integrator,
        ..Default::default()
    };
    for (name, frame, block) in [("plus", &plus, &r.block_plus), ("minus", &minus, &r.block_minus)] {
        let ev = evolve_subspace(&s.drive(), frame, &hol)?;
        let rep = extract_holonomy(&ev, None, hol.cyclicity_threshold)?;
        out.checks.push(Check::below(
            format!("block_{name}_holonomy"),
            max_abs(&(&rep.holonomy - block)),
            NUMERICAL_TOLERANCE,
        ));
        out.checks.push(Check::below(
            format!("block_{name}_dynamical_phase_norm"),
            max_abs(&ev.d_accum),
            DYNAMICAL_TOLERANCE,
        ));
    }
    if let Some(c) = t.target_concurrence {
        out.checks.push(Check::below("target_concurrence_miss", (r.concurrence - c).abs(), 1e-6));
    }
    out.json(
        dir,
        "gate.json",
        &json!({
            "params": q,
            "schedule": {
                "tau1": s.tau1,
                "tau2_start": s.tau2_start,
                "tau2_end": s.tau2_end,
                "omega": s.omega,
                "omega_tilde": s.omega_t,
            },
            "basis": ["|00>", "|01>", "|10>", "|11>"],
            "sign": s.sign(),
            "varphi_rot": s.varphi_rot,
            "concurrence": r.concurrence,
            "dimensionless_pair": dimensionless_pair(&q),
            "unitary": matrix_json(&r.unitary),
            "block_plus": matrix_json(&r.block_plus),
            "block_minus": matrix_json(&r.block_minus),
            "numerical_unitary": matrix_json(&numeric),
        }),
    )?;
    Ok(out)
}

pub fn concurrence_sweep(p: &ConcurrenceSweepParams, dir: &Path) -> Result<Outcome, RunError> {
    let table = sweep_concurrence(&p.grid)?;
    let rows: Vec<Vec<f64>> = table.rows.iter().map(|&(x, y, c)| vec![x, y, c]).collect();
    let unit_line = table
        .rows
        .iter()
        .filter(|r| r.0 == 1.0)
        .fold(None, |acc: Option<f64>, r| Some(acc.unwrap_or(0.0).max(r.2)));

    let mut out = Outcome::default();
    out.checks = vec![
        Check::below("max_check_deviation", table.max_check_deviation, CONCURRENCE_TOLERANCE),
        Check::at_least("checked_points", table.checked as f64, 1.0),
        Check::at_most("max_concurrence", table.max_concurrence(), 1.0 + 1e-12),
    ];
    if let Some(m) = unit_line {
        out.checks.push(Check::at_most("unit_ratio_line_max", m, 0.0));
    }
    out.csv(dir, "concurrence.csv", &["phi_ratio", "alpha_ratio", "concurrence"], &rows)?;
    out.json(
        dir,
        "concurrence.json",
        &json!({
            "data": "concurrence.csv",
            "columns": {
                "phi_ratio": "x = first amplitude / second amplitude",
                "alpha_ratio": "y = alpha / (second amplitude * delta)",
                "concurrence": "C(x, y) of the assembled gate",
            },
            "realisation": "alpha = y, delta = 1, amp1 = x, amp2 = 1, shortest pulses",
            "order": "phi_ratio slowest",
            "degenerate_points": "x = y = 0 has no pulse and is reported as 0",
            "grid": p.grid,
            "checked": table.checked,
            "max_check_deviation": table.max_check_deviation,
            "max_concurrence": table.max_concurrence(),
        }),
    )?;
    Ok(out)
}

fn single_qubit_protocol(gate: SingleQubitGate, shape: EnvelopeShape) -> holoqd::Result<GateProtocol64> {
    match gate {
        SingleQubitGate::Hadamard => hadamard_protocol(shape, 1.0),
        SingleQubitGate::Pi8 => pi8_protocol(shape, 1.0),
    }
}

fn ensemble_name(protocol: &GateProtocol64) -> String {
    let n = protocol.n_qubits();
    format!("{} axial product states ({n} qubit{})", 6usize.pow(n as u32), if n == 1 { "" } else { "s" })
}

pub fn fidelity_curves(p: &FidelityCurveParams, dir: &Path) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    let ratios = log_grid(p.ratio[0], p.ratio[1], p.ratio_points);
    let mut fixed = Vec::new();
    for c in &p.curves {
        let protocol = single_qubit_protocol(c.gate, p.envelope_shape)?;
        let template = NoiseSpec::new(0.0, c.site_mask.clone(), p.channel)?;
        let curve = fidelity_curve(&protocol, &template, &ratios, &p.integrator)?;
        let ideal = gate_fidelity(&protocol, &template, &p.integrator)?;
        let tag = format!("{}_{}", protocol.label, c.site_mask);
        out.checks.push(Check::at_most(format!("{tag}.monotonicity_violation"), curve.monotonicity_violation(), 0.0));
        out.checks.push(Check::below(format!("{tag}.noiseless_infidelity"), (1.0 - ideal).abs(), 1e-8));
        let rows: Vec<Vec<f64>> = curve.points.iter().map(|&(r, f)| vec![r, f]).collect();
        let name = format!("fidelity_{tag}.csv");
        out.csv(dir, &name, &["ratio", "fidelity"], &rows)?;
        let at_gamma = p
            .gamma
            .map(|g| gate_fidelity(&protocol, &template.with_gamma(g), &p.integrator))
            .transpose()?;
        if let Some(f) = at_gamma {
            fixed.push(json!({ "gate": protocol.label, "site_mask": c.site_mask, "fidelity": f }));
        }
        out.json(
            dir,
            &format!("fidelity_{tag}.json"),
            &json!({
                "data": name,
                "gate": protocol.label,
                "site_mask": c.site_mask,
                "channel": p.channel,
                "ensemble": ensemble_name(&protocol),
                "envelope_shape": p.envelope_shape,
                "gate_time": protocol.duration(),
                "ratio": "1 / (gamma * gate_time)",
                "noiseless_fidelity": ideal,
                "monotonicity_violation": curve.monotonicity_violation(),
                "fidelity_at_gamma": at_gamma,
            }),
        )?;
    }
    if let Some(g) = p.gamma {
        out.json(dir, "fidelity_fixed_gamma.json", &json!({ "gamma": g, "gate_time": 1.0, "curves": fixed }))?;
    }
    if p.surface.enabled {
        let s = &p.surface;
        let taus = linear_grid(s.tau_ratio[0], s.tau_ratio[1], s.tau_ratio_points);
        let inv = log_grid(s.inv_gamma_tau[0], s.inv_gamma_tau[1], s.inv_gamma_tau_points);
        let template = NoiseSpec::new(0.0, s.site_mask.clone(), p.channel)?;
        let surface = fidelity_surface(&taus, &inv, &template, &p.integrator)?;
        let mut ideal_worst: f64 = 0.0;
        for &rho in &taus {
            let protocol = entangler_protocol(rho)?;
            ideal_worst = ideal_worst.max((1.0 - gate_fidelity(&protocol, &template, &p.integrator)?).abs());
        }
        let out_of_range = surface.rows.iter().filter(|r| !(0.0..=1.0 + 1e-12).contains(&r.2)).count();
        out.checks.push(Check::below("surface.noiseless_infidelity", ideal_worst, 1e-8));
        out.checks.push(Check::at_most("surface.fidelity_out_of_range", out_of_range as f64, 0.0));
        let rows: Vec<Vec<f64>> = surface.rows.iter().map(|&(a, b, f)| vec![a, b, f]).collect();
        out.csv(dir, "fidelity_surface.csv", &["tau_ratio", "inv_gamma_tau", "fidelity"], &rows)?;
        let layout = DotLayout::two_qubit();
        out.json(
            dir,
            "fidelity_surface.json",
            &json!({
                "data": "fidelity_surface.csv",
                "gate": surface.gate_label,
                "site_mask": s.site_mask,
                "channel": p.channel,
                "ensemble": format!("36 axial product states (2 qubits, {} dots)", layout.n_dots()),
                "tau_ratio": "second pulse duration / first pulse duration",
                "inv_gamma_tau": "1 / (gamma * total gate time), total gate time 1",
                "tau_ratio_violation": surface.tau_ratio_violation(),
                "tau_ratio_violation_note": "largest rise of fidelity with tau_ratio at fixed inv_gamma_tau; reported, not enforced",
            }),
        )?;
    }
    Ok(out)
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Distance of a propagated protocol from its ideal gate, on the
/// computational subspace.
pub fn protocol_distance(protocol: &GateProtocol64, hol: &holoqd::HolonomyConfig64) -> holoqd::Result<f64> {
    let frame = holoqd::linalg::basis_frame(protocol.layout.dim(), &protocol.computational);
    let ev = evolve_subspace(&protocol.drive, &frame, hol)?;
    let rep = extract_holonomy(&ev, Some(&protocol.ideal), hol.cyclicity_threshold)?;
    Ok(rep.target_distance.unwrap_or(f64::NAN))
}
