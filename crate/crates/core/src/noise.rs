//! Open-system propagation under site-resolved noise and ensemble gate
//! fidelities.
//!
//! The master equation is
//! `ρ̇ = −i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`, integrated as a linear
//! flow on the column-stacked `vec(ρ)` with the dense superoperator. The
//! channel of a whole protocol is computed once and then applied to every
//! state of the input ensemble.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::holonomy::{compose_loops, LambdaLoop};
use crate::linalg::{
    cis, cplx, creal, eigvalsh, expm, hermitian_defect, identity, kron, phase_distance, zeros,
};
use crate::model::{build_twoqubit_hamiltonian, EnvelopeShape, LambdaParams, TwoQubitParams};
use crate::propagate::{converge, flow_product, Drive, IntegratorConfig, Segment};
use crate::twoqubit::{assemble_gate, controlled_rotation, solve_schedule};
use crate::{lit, to_f64, CMatrix, Error, Real, Result};

/// Jump operators attached to each masked dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChannel {
    /// `L_k = √γ |k⟩⟨k|`: energy fluctuations of dot `k`.
    #[default]
    SiteDephasing,
    /// `L_{j←k} = √(γ/d) |j⟩⟨k|` for every dot `j` of the same device.
    SiteDepolarizingDiagonal,
}

impl fmt::Display for NoiseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseChannel::SiteDephasing => "site-dephasing",
            NoiseChannel::SiteDepolarizingDiagonal => "site-depolarizing-diagonal",
        })
    }
}

/// One bit per dot, written as a string such as `"101"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SiteMask(pub Vec<bool>);

impl SiteMask {
    pub fn full(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }
}

impl FromStr for SiteMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::config(
                    "site_mask",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(SiteMask)
    }
}

impl TryFrom<String> for SiteMask {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SiteMask> for String {
    fn from(m: SiteMask) -> String {
        m.to_string()
    }
}

impl fmt::Display for SiteMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Noise rate, the dots it acts on and the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct NoiseSpec<T> {
    pub gamma: T,
    pub site_mask: SiteMask,
    #[serde(default)]
    pub channel: NoiseChannel,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(gamma: T, site_mask: SiteMask, channel: NoiseChannel) -> Result<Self> {
        let s = Self {
            gamma,
            site_mask,
            channel,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < T::zero() {
            return Err(Error::config(
                "gamma",
                "gamma must be finite and non-negative",
            ));
        }
        if self.gamma > T::zero() && !self.site_mask.any() {
            return Err(Error::config(
                "site_mask",
                "a positive gamma needs at least one masked dot",
            ));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: T) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }
}

/// Devices and their dot counts; the Hilbert space is the tensor product
/// of one single-electron device per entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DotLayout {
    pub devices: Vec<usize>,
}

impl DotLayout {
    pub fn new(devices: Vec<usize>) -> Result<Self> {
        if devices.is_empty() || devices.contains(&0) {
            return Err(Error::config(
                "devices",
                "every device needs at least one dot",
            ));
        }
        Ok(Self { devices })
    }

    /// One Λ device: `(|0⟩, |a⟩, |1⟩)`.
    pub fn single_lambda() -> Self {
        Self { devices: vec![3] }
    }

    /// Two charge qubits in their effective computational space.
    pub fn two_qubit() -> Self {
        Self {
            devices: vec![2, 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.devices.iter().product()
    }

    pub fn n_dots(&self) -> usize {
        self.devices.iter().sum()
    }

    /// `(device, local index)` of a global dot index.
    pub fn locate(&self, dot: usize) -> (usize, usize) {
        let mut rest = dot;
        for (d, &n) in self.devices.iter().enumerate() {
            if rest < n {
                return (d, rest);
            }
            rest -= n;
        }
        panic!("dot {dot} outside a layout of {} dots", self.n_dots());
    }

    /// `I ⊗ … ⊗ |j⟩⟨k| ⊗ … ⊗ I` acting on `device`.
    pub fn local_op<T: Real>(&self, device: usize, j: usize, k: usize) -> CMatrix<T> {
        self.devices
            .iter()
            .enumerate()
            .fold(identity::<T>(1), |acc, (d, &n)| {
                let factor = if d == device {
                    let mut m = zeros(n, n);
                    m[(j, k)] = creal(T::one());
                    m
                } else {
                    identity(n)
                };
                kron(&acc, &factor)
            })
    }
}

/// Jump operators (with rates folded in) for a spec on a layout.
pub fn jump_operators<T: Real>(spec: &NoiseSpec<T>, layout: &DotLayout) -> Result<Vec<CMatrix<T>>> {
    spec.validate()?;
    if spec.site_mask.len() != layout.n_dots() {
        return Err(Error::config(
            "site_mask",
            format!(
                "mask has {} bits but the layout has {} dots",
                spec.site_mask.len(),
                layout.n_dots()
            ),
        ));
    }
    let mut ops = Vec::new();
    if spec.gamma == T::zero() {
        return Ok(ops);
    }
    for (dot, _) in spec.site_mask.0.iter().enumerate().filter(|(_, &b)| b) {
        let (device, k) = layout.locate(dot);
        match spec.channel {
            NoiseChannel::SiteDephasing => {
                ops.push(layout.local_op::<T>(device, k, k) * creal(spec.gamma.sqrt()));
            }
            NoiseChannel::SiteDepolarizingDiagonal => {
                let n = layout.devices[device];
                let amp = creal((spec.gamma / lit(n as f64)).sqrt());
                for j in 0..n {
                    ops.push(layout.local_op::<T>(device, j, k) * amp);
                }
            }
        }
    }
    Ok(ops)
}

/// `vec(ρ) ↦ vec(Σ L ρ L† − ½{L†L, ρ})` in column-stacking convention.
pub fn dissipator<T: Real>(jumps: &[CMatrix<T>], dim: usize) -> CMatrix<T> {
    let id = identity::<T>(dim);
    let half = creal(lit::<T>(0.5));
    jumps.iter().fold(zeros(dim * dim, dim * dim), |acc, l| {
        let ldl = l.adjoint() * l;
        acc + kron(&l.map(|z| z.conj()), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * half
    })
}

/// `vec(ρ) ↦ vec(−i[H, ρ])`.
pub fn hamiltonian_superop<T: Real>(h: &CMatrix<T>) -> CMatrix<T> {
    let id = identity::<T>(h.nrows());
    (kron(&id, h) - kron(&h.transpose(), &id)) * cplx(T::zero(), -T::one())
}

/// Superoperator of the whole drive, `vec(ρ(τ)) = S·vec(ρ(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyChannel<T: Real> {
    pub superop: CMatrix<T>,
    pub dim: usize,
    pub steps: usize,
}

impl<T: Real> NoisyChannel<T> {
    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let v = CMatrix::from_column_slice(self.dim * self.dim, 1, rho.as_slice());
        let out = &self.superop * v;
        CMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }
}

/// Integrates the master equation for `drive` into a channel.
pub fn noisy_channel<T: Real>(
    drive: &Drive<T>,
    spec: &NoiseSpec<T>,
    layout: &DotLayout,
    cfg: &IntegratorConfig<T>,
) -> Result<NoisyChannel<T>> {
    drive.validate()?;
    let dim = layout.dim();
    if drive.dim() != dim {
        return Err(Error::Validation(format!(
            "drive dimension {} does not match the layout dimension {dim}",
            drive.dim()
        )));
    }
    let diss = dissipator(&jump_operators(spec, layout)?, dim);
    let n2 = dim * dim;
    let mut superop = identity::<T>(n2);
    let mut steps = 0;
    for seg in drive.segments() {
        let (step, n) = match seg {
            Segment::Constant {
                duration,
                hamiltonian,
            } => (
                expm(&((hamiltonian_superop(hamiltonian) + &diss) * creal(*duration))),
                1,
            ),
            Segment::Varying {
                duration,
                hamiltonian,
            } => {
                let generator = |s: T| hamiltonian_superop(&hamiltonian(s)) + &diss;
                converge(cfg, |n| {
                    flow_product(&generator, &expm, cfg.scheme, n2, *duration, n, |_, _| {})
                })?
            }
        };
        superop = step * superop;
        steps += n;
    }
    Ok(NoisyChannel {
        superop,
        dim,
        steps,
    })
}

/// Checks that `rho` is a density matrix: Hermitian, unit trace, PSD.
pub fn check_density<T: Real>(rho: &CMatrix<T>) -> Result<()> {
    let herm = hermitian_defect(rho);
    if herm > lit(1e-10) {
        return Err(Error::Density(format!(
            "not Hermitian (defect {:.3e})",
            to_f64(herm)
        )));
    }
    let trace = (rho.trace().re - T::one()).abs();
    if trace > lit(1e-9) {
        return Err(Error::Density(format!(
            "trace differs from 1 by {:.3e}",
            to_f64(trace)
        )));
    }
    let min = eigvalsh(rho)[0];
    if min < lit(-1e-8) {
        return Err(Error::Density(format!(
            "negative eigenvalue {:.3e}",
            to_f64(min)
        )));
    }
    Ok(())
}

/// Trace drift beyond `1e-6` or an eigenvalue below `−1e-8` in an evolved
/// state is reported as an integration failure.
fn check_evolved<T: Real>(rho: &CMatrix<T>, steps: usize) -> Result<()> {
    let drift = (rho.trace().re - T::one()).abs();
    let min = eigvalsh(&crate::linalg::hermitize(rho))[0];
    if drift > lit(1e-6) || min < lit(-1e-8) {
        return Err(Error::Integration {
            steps,
            last_change: f64::NAN,
            defect: to_f64(drift.max(-min)),
        });
    }
    Ok(())
}

/// `ρ(τ)` for one initial state.
pub fn evolve_density<T: Real>(
    drive: &Drive<T>,
    spec: &NoiseSpec<T>,
    layout: &DotLayout,
    rho0: &CMatrix<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<CMatrix<T>> {
    check_density(rho0)?;
    let ch = noisy_channel(drive, spec, layout, cfg)?;
    let rho = ch.apply(rho0);
    check_evolved(&rho, ch.steps)?;
    Ok(rho)
}

/// A gate realised by a drive, with its ideal action on the computational
/// states.
#[derive(Debug, Clone)]
pub struct GateProtocol<T: Real> {
    pub label: String,
    pub drive: Drive<T>,
    pub layout: DotLayout,
    /// Indices of the computational basis states `|0…0⟩, …, |1…1⟩` in the
    /// full space.
    pub computational: Vec<usize>,
    /// Ideal gate on the computational space.
    pub ideal: CMatrix<T>,
}

impl<T: Real> GateProtocol<T> {
    pub fn n_qubits(&self) -> usize {
        self.computational.len().trailing_zeros() as usize
    }

    pub fn duration(&self) -> T {
        self.drive.duration()
    }

    fn embed(&self, v: &CMatrix<T>) -> CMatrix<T> {
        let mut out = zeros(self.layout.dim(), 1);
        for (k, &idx) in self.computational.iter().enumerate() {
            out[(idx, 0)] = v[(k, 0)];
        }
        out
    }
}

/// The six axial states `|0⟩, |1⟩, |±⟩, |±i⟩` of one qubit.
pub fn axial_states<T: Real>() -> Vec<CMatrix<T>> {
    let r: T = lit(std::f64::consts::FRAC_1_SQRT_2);
    let ket =
        |a: (T, T), b: (T, T)| CMatrix::from_column_slice(2, 1, &[cplx(a.0, a.1), cplx(b.0, b.1)]);
    let (o, z) = (T::one(), T::zero());
    vec![
        ket((o, z), (z, z)),
        ket((z, z), (o, z)),
        ket((r, z), (r, z)),
        ket((r, z), (-r, z)),
        ket((r, z), (z, r)),
        ket((r, z), (z, -r)),
    ]
}

/// Products of axial states, `6^n` kets of dimension `2^n`.
pub fn product_ensemble<T: Real>(n_qubits: usize) -> Vec<CMatrix<T>> {
    let single = axial_states::<T>();
    (0..n_qubits).fold(vec![identity::<T>(1)], |acc, _| {
        acc.iter()
            .flat_map(|a| single.iter().map(move |s| kron(a, s)))
            .collect()
    })
}

/// Mean of `⟨ψ_ideal|ρ_out|ψ_ideal⟩` over the axial product ensemble.
pub fn gate_fidelity<T: Real>(
    protocol: &GateProtocol<T>,
    spec: &NoiseSpec<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    let ch = noisy_channel(&protocol.drive, spec, &protocol.layout, cfg)?;
    ensemble_fidelity(protocol, &ch)
}

/// Ensemble fidelity of an already computed channel.
pub fn ensemble_fidelity<T: Real>(protocol: &GateProtocol<T>, ch: &NoisyChannel<T>) -> Result<T> {
    let ensemble = product_ensemble::<T>(protocol.n_qubits());
    let mut total = T::zero();
    for psi in &ensemble {
        let input = protocol.embed(psi);
        let target = protocol.embed(&(&protocol.ideal * psi));
        let rho = ch.apply(&(&input * input.adjoint()));
        check_evolved(&rho, ch.steps)?;
        total += (target.adjoint() * rho * target)[(0, 0)].re;
    }
    Ok(total / lit(ensemble.len() as f64))
}

/// Single-qubit protocol made of consecutive Λ loops.
pub fn lambda_protocol<T: Real>(label: &str, loops: &[LambdaLoop<T>]) -> Result<GateProtocol<T>> {
    let params: Vec<LambdaParams<T>> = loops.iter().map(|l| l.params).collect();
    let ideal = compose_loops(&params)?;
    let drive = loops.iter().fold(Drive::new(3), |d, l| {
        let (p, env) = (l.params, l.envelope);
        d.then(env.duration, move |t| {
            crate::model::build_lambda_hamiltonian(&p, &env, t)
        })
    });
    Ok(GateProtocol {
        label: label.to_string(),
        drive,
        layout: DotLayout::single_lambda(),
        computational: vec![0, 2],
        ideal,
    })
}

/// Hadamard (`θ = π/4`, `φ = 0`) as one loop of duration `tau`.
pub fn hadamard_protocol<T: Real>(shape: EnvelopeShape, tau: T) -> Result<GateProtocol<T>> {
    let lp = LambdaLoop::pi_pulse(LambdaParams::new(T::frac_pi_4(), T::zero())?, shape, tau)?;
    lambda_protocol("hadamard", &[lp])
}

/// `R_z(π/4)` up to global phase as two in-plane loops of `tau/2` each.
pub fn pi8_protocol<T: Real>(shape: EnvelopeShape, tau: T) -> Result<GateProtocol<T>> {
    let half = tau * lit(0.5);
    let pair = crate::holonomy::azimuthal_pair(T::pi() / lit(8.0))?;
    let loops = [
        LambdaLoop::pi_pulse(pair[0], shape, half)?,
        LambdaLoop::pi_pulse(pair[1], shape, half)?,
    ];
    lambda_protocol("pi8", &loops)
}

/// `R_z(a) = exp(−iaσz/2)`.
pub fn rz<T: Real>(angle: T) -> CMatrix<T> {
    let mut u = zeros(2, 2);
    u[(0, 0)] = cis(-angle * lit(0.5));
    u[(1, 1)] = cis(angle * lit(0.5));
    u
}

/// Parameters of the `R_c(π/4)` entangler with total duration `τ″ = 1` and
/// second-to-first pulse ratio `rho`.
///
/// With `tan a = Φδ/α` and `tan b = Φ̃δ/α`, the rotation angle is `a − b`
/// and the duration ratio is `cos b / cos a`; `a − b = π/4` then fixes
/// `tan a = √2·rho − 1`. The second amplitude is negative for
/// `rho < √2`.
pub fn entangler_params<T: Real>(rho: T) -> Result<TwoQubitParams<T>> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::config(
            "tau_ratio",
            "the pulse-duration ratio must be positive",
        ));
    }
    let a = (lit::<T>(std::f64::consts::SQRT_2) * rho - T::one()).atan();
    let b = a - T::frac_pi_4();
    let alpha = T::pi() * (a.cos() + b.cos()) * lit(0.5);
    Ok(TwoQubitParams::new(
        alpha,
        T::one(),
        alpha * a.tan(),
        alpha * b.tan(),
    ))
}

/// `R_c(π/4)` on two charge qubits, lasting `τ″ = 1`.
pub fn entangler_protocol<T: Real>(rho: T) -> Result<GateProtocol<T>> {
    let q = entangler_params(rho)?;
    let s = solve_schedule(&q)?;
    let report = assemble_gate(&s)?;
    let ideal = controlled_rotation(T::frac_pi_4());
    let dist = phase_distance(&report.unitary, &ideal);
    if dist > lit(1e-9) {
        return Err(Error::Protocol {
            defect: to_f64(dist),
        });
    }
    let drive = Drive::new(4)
        .then_constant(
            s.first_duration(),
            build_twoqubit_hamiltonian(&q, q.amp1 * q.delta, T::zero()),
        )
        .then_constant(
            s.second_duration(),
            build_twoqubit_hamiltonian(&q, q.amp2 * q.delta, T::zero()),
        );
    Ok(GateProtocol {
        label: "rc-pi4".into(),
        drive,
        layout: DotLayout::two_qubit(),
        computational: vec![0, 1, 2, 3],
        ideal,
    })
}

/// Fidelity against `1/(γτ_gate)` for one gate and noise template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCurve<T> {
    pub gate_label: String,
    pub site_mask: SiteMask,
    pub channel: NoiseChannel,
    /// `(1/(γτ_gate), F)`, in the order of the requested grid.
    pub points: Vec<(T, T)>,
}

impl<T: Real> FidelityCurve<T> {
    /// Largest increase of `F` when `γ` grows (zero for a monotone curve).
    pub fn monotonicity_violation(&self) -> T {
        let mut sorted = self.points.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        sorted
            .windows(2)
            .map(|w| w[0].1 - w[1].1)
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * lit(k as f64 / (n - 1) as f64)).exp())
        .collect()
}

/// Evaluates the fidelity at `γ = 1/(ratio·τ_gate)` for every ratio.
pub fn fidelity_curve<T: Real>(
    protocol: &GateProtocol<T>,
    template: &NoiseSpec<T>,
    ratios: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<FidelityCurve<T>> {
    let tau = protocol.duration();
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        if !(ratio > T::zero()) {
            return Err(Error::config("ratios", "ratios must be positive"));
        }
        let spec = template.with_gamma(T::one() / (ratio * tau));
        points.push((ratio, gate_fidelity(protocol, &spec, cfg)?));
    }
    Ok(FidelityCurve {
        gate_label: protocol.label.clone(),
        site_mask: template.site_mask.clone(),
        channel: template.channel,
        points,
    })
}

/// Entangler fidelity over `((τ″−τ)/τ, 1/(γτ″))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelitySurface<T> {
    pub gate_label: String,
    pub site_mask: SiteMask,
    pub channel: NoiseChannel,
    /// `(tau_ratio, inv_gamma_tau, F)` with `tau_ratio` varying slowest.
    pub rows: Vec<(T, T, T)>,
}

impl<T: Real> FidelitySurface<T> {
    /// Largest increase of `F` along increasing `tau_ratio` at fixed
    /// `inv_gamma_tau`.
    pub fn tau_ratio_violation(&self) -> T {
        let mut worst = T::zero();
        for (k, a) in self.rows.iter().enumerate() {
            let next = self.rows[k + 1..]
                .iter()
                .filter(|b| b.1 == a.1 && b.0 > a.0)
                .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
            if let Some(b) = next {
                worst = worst.max(b.2 - a.2);
            }
        }
        worst
    }
}

/// Evaluates the entangler on every `(tau_ratio, inv_gamma_tau)` pair.
pub fn fidelity_surface<T: Real>(
    tau_ratios: &[T],
    inv_gamma_tau: &[T],
    template: &NoiseSpec<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<FidelitySurface<T>> {
    let mut rows = Vec::with_capacity(tau_ratios.len() * inv_gamma_tau.len());
    for &rho in tau_ratios {
        let protocol = entangler_protocol(rho)?;
        let tau = protocol.duration();
        for &r in inv_gamma_tau {
            if !(r > T::zero()) {
                return Err(Error::config("inv_gamma_tau", "ratios must be positive"));
            }
            let spec = template.with_gamma(T::one() / (r * tau));
            rows.push((rho, r, gate_fidelity(&protocol, &spec, cfg)?));
        }
    }
    Ok(FidelitySurface {
        gate_label: "rc-pi4".into(),
        site_mask: template.site_mask.clone(),
        channel: template.channel,
        rows,
    })
}

/// `‖U_drive − e^{iχ}U_ideal‖` on the computational block, for checking a
/// protocol before adding noise.
pub fn protocol_defect<T: Real>(
    protocol: &GateProtocol<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    let u = crate::propagate::evolve_drive(&protocol.drive, cfg)?.unitary;
    let idx = &protocol.computational;
    let block = CMatrix::from_fn(idx.len(), idx.len(), |r, c| u[(idx[r], idx[c])]);
    Ok(phase_distance(&block, &protocol.ideal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_ket, hermitize, max_abs};
    use crate::propagate::evolve_drive;

    fn cfg() -> IntegratorConfig<f64> {
        IntegratorConfig::default()
    }

    fn dephasing(gamma: f64, mask: &str) -> NoiseSpec<f64> {
        NoiseSpec::new(gamma, mask.parse().unwrap(), NoiseChannel::SiteDephasing).unwrap()
    }

    #[test]
    fn mask_round_trip() {
        let m: SiteMask = "0110".parse().unwrap();
        assert_eq!(m.to_string(), "0110");
        assert!("01x".parse::<SiteMask>().is_err());
        assert_eq!(String::from(m), "0110");
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(-0.1, SiteMask::full(3), NoiseChannel::SiteDephasing).is_err());
        assert!(NoiseSpec::new(0.1, "000".parse().unwrap(), NoiseChannel::SiteDephasing).is_err());
        assert!(NoiseSpec::new(0.0, "000".parse().unwrap(), NoiseChannel::SiteDephasing).is_ok());
    }

    #[test]
    fn dephasing_half_rate() {
        let gamma = 0.8;
        let drive = Drive::new(3).then_idle(1.5);
        let mut psi = zeros::<f64>(3, 1);
        psi[(0, 0)] = creal(0.6);
        psi[(2, 0)] = creal(0.8);
        let rho0 = &psi * psi.adjoint();
        let rho = evolve_density(
            &drive,
            &dephasing(gamma, "100"),
            &DotLayout::single_lambda(),
            &rho0,
            &cfg(),
        )
        .unwrap();
        let expected = 0.48 * (-gamma * 1.5 / 2.0).exp();
        assert!((rho[(0, 2)].re - expected).abs() < 1e-12);
        assert!((rho[(0, 0)].re - 0.36).abs() < 1e-14);
    }

    #[test]
    fn mixed_state_is_stationary() {
        let drive = Drive::new(3).then_idle(2.0);
        let rho0 = identity::<f64>(3) * creal(1.0 / 3.0);
        for channel in [
            NoiseChannel::SiteDephasing,
            NoiseChannel::SiteDepolarizingDiagonal,
        ] {
            let spec = NoiseSpec::new(0.5, SiteMask::full(3), channel).unwrap();
            let rho =
                evolve_density(&drive, &spec, &DotLayout::single_lambda(), &rho0, &cfg()).unwrap();
            assert!(max_abs(&(rho - &rho0)) < 1e-14);
        }
    }

    #[test]
    fn closed_system_matches_unitary() {
        let h = hermitize(&crate::linalg::from_rows::<f64>(
            3,
            3,
            &[
                (0.1, 0.),
                (0.4, 0.2),
                (0., 0.),
                (0., 0.),
                (-0.3, 0.),
                (0.7, 0.),
                (0., 0.),
                (0., 0.),
                (0.2, 0.),
            ],
        ));
        let h2 = h.clone();
        let drive = Drive::smooth(3, 0.0, 1.3, move |t: f64| &h2 * creal(1.0 + t.sin()));
        let u = evolve_drive(&drive, &cfg()).unwrap().unitary;
        let rho0 = basis_ket::<f64>(3, 1) * basis_ket::<f64>(3, 1).adjoint();
        let rho = evolve_density(
            &drive,
            &dephasing(0.0, "000"),
            &DotLayout::single_lambda(),
            &rho0,
            &cfg(),
        )
        .unwrap();
        assert!(max_abs(&(rho - &u * rho0 * u.adjoint())) < 1e-9);
    }

    #[test]
    fn ensemble_sizes() {
        assert_eq!(product_ensemble::<f64>(1).len(), 6);
        assert_eq!(product_ensemble::<f64>(2).len(), 36);
        let mean = product_ensemble::<f64>(1)
            .iter()
            .fold(zeros::<f64>(2, 2), |acc, v| acc + v * v.adjoint())
            * creal(1.0 / 6.0);
        assert!(max_abs(&(mean - identity::<f64>(2) * creal(0.5))) < 1e-15);
    }

    #[test]
    fn noiseless_fidelity_is_one() {
        let h = hadamard_protocol::<f64>(EnvelopeShape::SineSquared, 1.0).unwrap();
        let f = gate_fidelity(&h, &dephasing(0.0, "111"), &cfg()).unwrap();
        assert!((f - 1.0).abs() < 1e-8);
        let p = pi8_protocol::<f64>(EnvelopeShape::SineSquared, 1.0).unwrap();
        assert!(phase_distance(&p.ideal, &rz(std::f64::consts::FRAC_PI_4)) < 1e-12);
        assert!((gate_fidelity(&p, &dephasing(0.0, "111"), &cfg()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn entangler_schedule() {
        for rho in [0.8, 1.0, 2.0, 3.0] {
            let p = entangler_protocol::<f64>(rho).unwrap();
            assert!((p.duration() - 1.0).abs() < 1e-14);
            let segs = p.drive.segments();
            assert!((segs[1].duration() / segs[0].duration() - rho).abs() < 1e-12);
            assert!(protocol_defect(&p, &cfg()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn fidelity_drops_with_noise() {
        let h = hadamard_protocol::<f64>(EnvelopeShape::Square, 1.0).unwrap();
        let curve =
            fidelity_curve(&h, &dephasing(0.0, "111"), &log_grid(1.0, 1e3, 5), &cfg()).unwrap();
        assert!(curve.monotonicity_violation() <= 0.0);
        assert!(curve.points[4].1 > 0.99 && curve.points[0].1 < curve.points[4].1);
    }

    #[test]
    fn depolarizing_channel_is_trace_preserving() {
        let h = hadamard_protocol::<f64>(EnvelopeShape::Square, 1.0).unwrap();
        let spec = NoiseSpec::new(
            0.3,
            SiteMask::full(3),
            NoiseChannel::SiteDepolarizingDiagonal,
        )
        .unwrap();
        let ch = noisy_channel(&h.drive, &spec, &h.layout, &cfg()).unwrap();
        let rho = ch.apply(&(basis_ket::<f64>(3, 0) * basis_ket::<f64>(3, 0).adjoint()));
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        check_density(&rho).unwrap();
    }
}
