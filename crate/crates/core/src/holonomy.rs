//! Holonomies of cyclically evolving subspaces and single-qubit gate
//! synthesis on the Λ system.
//!
//! [`evolve_subspace`] propagates an orthonormal frame on a stored time grid
//! and accumulates the connection matrix `A = iζ†ζ̇` and dynamical-phase
//! matrix `D = ζ†Hζ` along the reference family
//! `ζ(t) = ψ(t)·U_hol^{−t/τ}`, which spans the evolving subspace at every
//! instant and returns to the initial frame at `τ`. The time-ordered
//! exponential of `i∫(A − D)` then reproduces the holonomy, which gives an
//! internal consistency check independent of how the frame was propagated.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    basis_frame, cis, cplx, creal, expm_hermitian, hermitian_defect, hermitize, identity, max_abs,
    n_dot_sigma, normal_eigen, pauli_x, pauli_y, pauli_z, phase_distance, polar_unitary, projector,
    unitarity_defect, unitary_log, zeros,
};
use crate::model::{
    build_lambda_hamiltonian, build_ring_hamiltonian_scaled, wrap_angle, DotNetwork, LambdaParams,
    PulseEnvelope,
};
use crate::propagate::{
    evolve_segment, flow_product, hamiltonian_exp, Drive, IntegratorConfig, Segment,
};
use crate::{lit, to_f64, CMatrix, Error, Real, Result};

/// Options for subspace evolution and holonomy extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct HolonomyConfig<T> {
    #[serde(default)]
    pub integrator: IntegratorConfig<T>,
    /// Minimum number of stored grid intervals per drive segment.
    #[serde(default = "default_min_grid")]
    pub min_grid: usize,
    /// Largest `‖P(τ) − P(0)‖_max` accepted as a closed loop.
    #[serde(default = "default_cyclicity_threshold")]
    pub cyclicity_threshold: T,
}

fn default_min_grid() -> usize {
    256
}

fn default_cyclicity_threshold<T: Real>() -> T {
    lit(1e-6)
}

impl<T: Real> Default for HolonomyConfig<T> {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            min_grid: default_min_grid(),
            cyclicity_threshold: default_cyclicity_threshold(),
        }
    }
}

/// A frame propagated over a drive, stored on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEvolution<T: Real> {
    pub times: Vec<T>,
    /// `ψ(t_k) = U(t_k, 0)·ψ(0)`, each `n × m`.
    pub frames: Vec<CMatrix<T>>,
    /// `∫A dt` along the reference family.
    pub a_accum: CMatrix<T>,
    /// `∫D dt` along the reference family.
    pub d_accum: CMatrix<T>,
    /// `max_t ‖P₀ H(t) P₀‖_max` over the grid (and interval midpoints).
    pub dyn_phase_norm: T,
    /// Per-interval `(A − D)·Δt`, in time order.
    pub connection_steps: Vec<CMatrix<T>>,
    /// Full propagator `U(τ, 0)`.
    pub propagator: CMatrix<T>,
    /// Elementary steps used for the converged propagation.
    pub steps: usize,
}

impl<T: Real> SubspaceEvolution<T> {
    pub fn dim_total(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn dim_sub(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn frame0(&self) -> &CMatrix<T> {
        &self.frames[0]
    }

    pub fn final_frame(&self) -> &CMatrix<T> {
        self.frames
            .last()
            .expect("an evolution stores at least one frame")
    }

    pub fn projector(&self, k: usize) -> CMatrix<T> {
        projector(&self.frames[k])
    }

    /// `‖P(τ) − P(0)‖_max`.
    pub fn cyclicity_defect(&self) -> T {
        max_abs(&(projector(self.final_frame()) - projector(self.frame0())))
    }

    /// Largest `‖ψ†ψ − I‖_max` over the grid.
    pub fn orthonormality_defect(&self) -> T {
        self.frames
            .iter()
            .map(|f| unitarity_defect(f))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest `|tr P(t) − m|` over the grid.
    pub fn rank_defect(&self) -> T {
        let m: T = lit(self.dim_sub() as f64);
        self.frames
            .iter()
            .map(|f| (projector(f).trace().re - m).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `ψ(0)†ψ(τ)` re-unitarised.
    pub fn overlap_unitary(&self) -> CMatrix<T> {
        polar_unitary(&(self.frame0().adjoint() * self.final_frame()))
    }

    /// `T exp(i∫(A − D) dt)` rebuilt from the stored connection steps.
    pub fn connection_holonomy(&self) -> CMatrix<T> {
        let m = self.dim_sub();
        self.connection_steps
            .iter()
            .fold(identity::<T>(m), |acc, g| {
                expm_hermitian(g, -T::one()) * acc
            })
    }
}

/// Propagates `frame0` under `drive` and accumulates `A`, `D` on a grid of at
/// least `cfg.min_grid` intervals per segment (finer if the integrator needed
/// more steps to converge).
pub fn evolve_subspace<T: Real>(
    drive: &Drive<T>,
    frame0: &CMatrix<T>,
    cfg: &HolonomyConfig<T>,
) -> Result<SubspaceEvolution<T>> {
    let n = drive.dim();
    if frame0.nrows() != n || frame0.ncols() == 0 || frame0.ncols() > n {
        return Err(Error::Validation(format!(
            "frame of shape {:?} does not fit a {n}-dimensional drive",
            frame0.shape()
        )));
    }
    let ortho = unitarity_defect(frame0);
    if ortho > lit(1e-10) {
        return Err(Error::Validation(format!(
            "initial frame is not orthonormal (defect {:.3e})",
            to_f64(ortho)
        )));
    }
    let p0 = projector(frame0);

    // Frames on a grid of half intervals: odd entries are interval midpoints.
    let mut fine_times = vec![drive.start()];
    let mut fine_frames = vec![frame0.clone()];
    // (midpoint Hamiltonian, interval length) per stored interval.
    let mut intervals = Vec::new();
    let mut propagator = identity::<T>(n);
    let mut steps = 0;
    let mut dyn_phase_norm = max_abs(&(&p0 * drive.hamiltonian(drive.start()) * &p0));
    let mut offset = drive.start();

    for seg in drive.segments() {
        let (_, converged) = evolve_segment(seg, n, &cfg.integrator)?;
        let grid = converged.max(cfg.min_grid).max(1);
        steps += converged;
        let duration = seg.duration();
        let fine = 2 * grid;
        let h = duration / lit(fine as f64);
        let start_prop = propagator.clone();
        let mut record = |k: usize, acc: &CMatrix<T>| {
            fine_times.push(offset + h * lit((k + 1) as f64));
            fine_frames.push(acc * &start_prop * frame0);
        };
        let seg_prop = match seg {
            Segment::Constant { hamiltonian, .. } => {
                let step = expm_hermitian(hamiltonian, h);
                let mut acc = identity::<T>(n);
                for k in 0..fine {
                    acc = &step * acc;
                    record(k, &acc);
                }
                acc
            }
            Segment::Varying { hamiltonian, .. } => {
                let generator = |s: T| hamiltonian(s) * cplx(T::zero(), -T::one());
                flow_product(
                    &generator,
                    &hamiltonian_exp,
                    cfg.integrator.scheme,
                    n,
                    duration,
                    fine,
                    record,
                )
            }
        };
        for k in 0..fine {
            let hk = seg.at(h * lit((k + 1) as f64));
            dyn_phase_norm = dyn_phase_norm.max(max_abs(&(&p0 * &hk * &p0)));
            if k % 2 == 0 {
                intervals.push((hk, h + h));
            }
        }
        propagator = seg_prop * propagator;
        offset += duration;
    }

    // Reference family ζ(t) = ψ(t)·W(t), W(t) = U_hol^{−(t−t0)/τ}.
    let total = drive.duration();
    let u_hol = polar_unitary(&(frame0.adjoint() * fine_frames.last().expect("non-empty")));
    let (eigvals, q) = normal_eigen(&u_hol);
    let w_at = |t: T| -> CMatrix<T> {
        if total <= T::zero() {
            return identity::<T>(frame0.ncols());
        }
        let s = -(t - drive.start()) / total;
        let mut scaled = q.clone();
        for (k, z) in eigvals.iter().enumerate() {
            let phase = cis(nalgebra::ComplexField::argument(*z) * s);
            for x in scaled.column_mut(k).iter_mut() {
                *x *= phase;
            }
        }
        scaled * q.adjoint()
    };
    let zetas: Vec<CMatrix<T>> = fine_frames
        .iter()
        .zip(&fine_times)
        .map(|(f, &t)| f * w_at(t))
        .collect();

    let m = frame0.ncols();
    let mut a_accum = zeros(m, m);
    let mut d_accum = zeros(m, m);
    let mut connection_steps = Vec::with_capacity(intervals.len());
    let i = cplx(T::zero(), T::one());
    for (k, (h_mid, dt)) in intervals.iter().enumerate() {
        let (z0, zm, z1) = (&zetas[2 * k], &zetas[2 * k + 1], &zetas[2 * k + 2]);
        // A·Δt = i·log ζ(t_k)†ζ(t_{k+1}); D at the midpoint frame
        let a_dt = hermitize(&(unitary_log(&polar_unitary(&(z0.adjoint() * z1))) * i));
        let d_dt = hermitize(&(zm.adjoint() * h_mid * zm * creal(*dt)));
        a_accum += &a_dt;
        d_accum += &d_dt;
        connection_steps.push(a_dt - d_dt);
    }
    let times = fine_times.into_iter().step_by(2).collect();
    let frames = fine_frames.into_iter().step_by(2).collect();

    Ok(SubspaceEvolution {
        times,
        frames,
        a_accum,
        d_accum,
        dyn_phase_norm,
        connection_steps,
        propagator,
        steps,
    })
}

/// Outcome of a closed-loop evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport<T: Real> {
    pub holonomy: CMatrix<T>,
    pub cyclicity_defect: T,
    pub dyn_phase_norm: T,
    /// `min_χ ‖U − e^{iχ}U_target‖_max`, when a target was supplied.
    pub target_distance: Option<T>,
}

/// `U = ψ(0)†ψ(τ)`, polar re-unitarised, after checking the loop closes.
pub fn extract_holonomy<T: Real>(
    ev: &SubspaceEvolution<T>,
    target: Option<&CMatrix<T>>,
    cyclicity_threshold: T,
) -> Result<GateReport<T>> {
    let cyclicity_defect = ev.cyclicity_defect();
    if !(cyclicity_defect <= cyclicity_threshold) {
        return Err(Error::NotCyclic {
            defect: to_f64(cyclicity_defect),
            threshold: to_f64(cyclicity_threshold),
        });
    }
    let holonomy = ev.overlap_unitary();
    let target_distance = target.map(|t| phase_distance(&holonomy, t));
    Ok(GateReport {
        holonomy,
        cyclicity_defect,
        dyn_phase_norm: ev.dyn_phase_norm,
        target_distance,
    })
}

/// One pass of the Λ system around a closed loop, realised on the dot ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LambdaLoop<T> {
    pub params: LambdaParams<T>,
    pub envelope: PulseEnvelope<T>,
    /// Dimensionless flux `(e/ħ)Φ` through the ring.
    #[serde(default = "T::zero")]
    pub total_flux: T,
}

impl<T: Real> LambdaLoop<T> {
    /// Loop with envelope area `π`, closing the qubit subspace.
    pub fn pi_pulse(
        params: LambdaParams<T>,
        shape: crate::model::EnvelopeShape,
        duration: T,
    ) -> Result<Self> {
        Ok(Self {
            params,
            envelope: PulseEnvelope::with_area(shape, T::pi(), duration)?,
            total_flux: T::zero(),
        })
    }

    pub fn drive(&self) -> Drive<T> {
        let (p, env) = (self.params, self.envelope);
        Drive::smooth(3, T::zero(), env.duration, move |t| {
            build_lambda_hamiltonian(&p, &env, t)
        })
    }

    pub fn network(&self) -> Result<DotNetwork<T>> {
        DotNetwork::lambda_ring(&self.params, self.total_flux)
    }

    pub fn target(&self) -> CMatrix<T> {
        self.params.target_gate()
    }
}

/// Drive of a ring network whose hoppings all follow the envelope.
pub fn ring_drive<T: Real>(net: &DotNetwork<T>, env: &PulseEnvelope<T>) -> Result<Drive<T>> {
    net.validate()?;
    env.validate()?;
    let (net, env) = (net.clone(), *env);
    Ok(Drive::smooth(
        net.n_sites(),
        T::zero(),
        env.duration,
        move |t| {
            build_ring_hamiltonian_scaled(&net, env.value(t))
                .expect("network validated on construction")
        },
    ))
}

/// The qubit frame `{|0⟩, |1⟩}` = sites 0 and 2 of the ring.
pub fn qubit_frame<T: Real>() -> CMatrix<T> {
    basis_frame(3, &[0, 2])
}

/// Evolves the qubit subspace around `lp` and extracts the holonomy, compared
/// against `n·σ`.
pub fn run_loop<T: Real>(
    lp: &LambdaLoop<T>,
    cfg: &HolonomyConfig<T>,
) -> Result<(SubspaceEvolution<T>, GateReport<T>)> {
    lp.params.validate()?;
    lp.envelope.validate()?;
    let ev = evolve_subspace(&lp.drive(), &qubit_frame(), cfg)?;
    let report = extract_holonomy(&ev, Some(&lp.target()), cfg.cyclicity_threshold)?;
    Ok((ev, report))
}

/// Single-qubit target: an explicit `n·σ` matrix or its polar angles.
#[derive(Debug, Clone, PartialEq)]
pub enum SingleQubitTarget<T: Real> {
    Matrix(CMatrix<T>),
    Angles { theta: T, phi: T },
}

/// Loop parameters whose holonomy is the target up to a global phase.
///
/// A matrix target must be `e^{iχ}·n·σ` for a unit vector `n`; `φ` is set to
/// zero at the poles `θ ∈ {0, π}`.
pub fn synthesize_single_qubit<T: Real>(target: &SingleQubitTarget<T>) -> Result<LambdaParams<T>> {
    let tol: T = lit(1e-8);
    match target {
        SingleQubitTarget::Angles { theta, phi } => {
            let p = LambdaParams::new(*theta, *phi)?;
            Ok(pole_convention(p))
        }
        SingleQubitTarget::Matrix(u) => {
            if u.shape() != (2, 2) {
                return Err(Error::Decomposition(format!(
                    "expected a 2x2 matrix, got {:?}",
                    u.shape()
                )));
            }
            let defect = unitarity_defect(u);
            if defect > tol {
                return Err(Error::Decomposition(format!(
                    "not unitary (defect {:.3e})",
                    to_f64(defect)
                )));
            }
            let tr = nalgebra::ComplexField::modulus(u.trace());
            if tr > tol {
                return Err(Error::Decomposition(format!(
                    "trace {:.3e} is non-zero",
                    to_f64(tr)
                )));
            }
            // e^{iχ}n·σ has determinant −e^{2iχ}
            let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
            let chi = nalgebra::ComplexField::argument(-det) * lit(0.5);
            let v = u * cis(-chi);
            let herm = hermitian_defect(&v);
            if herm > tol {
                return Err(Error::Decomposition(format!(
                    "not Hermitian up to phase (defect {:.3e})",
                    to_f64(herm)
                )));
            }
            let component = |s: CMatrix<T>| (s * &v).trace().re * lit(0.5);
            let n = [
                component(pauli_x()),
                component(pauli_y()),
                component(pauli_z()),
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let nz = (n[2] / norm).max(-T::one()).min(T::one());
            let theta = nz.acos();
            let phi = n[1].atan2(n[0]);
            let p = LambdaParams::new(theta, phi)?;
            Ok(pole_convention(p))
        }
    }
}

fn pole_convention<T: Real>(mut p: LambdaParams<T>) -> LambdaParams<T> {
    if p.theta.sin().abs() < lit(1e-12) {
        p.phi = T::zero();
    }
    p.phi = wrap_angle(p.phi);
    p
}

/// Product of loop holonomies in application order: `[first, second, …]`
/// yields `U_last ⋯ U_second · U_first`. For two loops with axes `n` then
/// `m` this is `(n·m)I − iσ·(n×m)`.
pub fn compose_loops<T: Real>(params: &[LambdaParams<T>]) -> Result<CMatrix<T>> {
    if params.is_empty() {
        return Err(Error::config("loops", "at least one loop is required"));
    }
    params.iter().try_fold(identity::<T>(2), |acc, p| {
        p.validate()?;
        Ok(n_dot_sigma(p.axis()) * acc)
    })
}

/// Two in-plane loops whose composition is `R_z(2Δ)` up to global phase,
/// where `Δ` is the azimuth of the second loop minus that of the first.
pub fn azimuthal_pair<T: Real>(delta: T) -> Result<[LambdaParams<T>; 2]> {
    let half_pi = T::frac_pi_2();
    Ok([
        LambdaParams::new(half_pi, T::zero())?,
        LambdaParams::new(half_pi, delta)?,
    ])
}

/// Re-propagates the loop under the gauge `Π` and returns
/// `‖U′ − Γ†UΓ‖_max` with `Γ = diag(e^{−iΠ(0)}, e^{−iΠ(2)})` on the qubit sites.
pub fn gauge_transform_check<T: Real>(
    lp: &LambdaLoop<T>,
    ev: &SubspaceEvolution<T>,
    site_phases: &[T],
    cfg: &HolonomyConfig<T>,
) -> Result<T> {
    let net = lp.network()?;
    let gauged = net.with_gauge(site_phases)?;
    let moved = evolve_subspace(&ring_drive(&gauged, &lp.envelope)?, &qubit_frame(), cfg)?;
    let u_new = extract_holonomy(&moved, None, cfg.cyclicity_threshold)?.holonomy;
    let u_old = extract_holonomy(ev, None, cfg.cyclicity_threshold)?.holonomy;
    let mut gamma = zeros(2, 2);
    gamma[(0, 0)] = cis(-site_phases[0]);
    gamma[(1, 1)] = cis(-site_phases[2]);
    Ok(max_abs(&(u_new - gamma.adjoint() * u_old * gamma)))
}
