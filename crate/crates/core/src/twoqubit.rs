//! Two-pulse entangling protocol between two Λ devices in their effective
//! four-dimensional computational space.
//!
//! Each square pulse drives `H = t σx⊗I + α σy⊗σy` with `H² = ω²I`, so a
//! pulse satisfying `sin(ωτ) = (−1)^n` maps `H₊ = span{|00⟩,|01⟩}` onto
//! `H₋ = span{|10⟩,|11⟩}` and back. The two pulses together give
//! `(−1)^{n+ñ+1}·exp(−iφ σz⊗σy) = (−1)^{n+ñ+1}·R(φ)⊕R(−φ)` with
//! `R(φ) = [[cos φ, −sin φ], [sin φ, cos φ]]`.

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    basis_frame, cplx, from_rows, max_abs, normal_eigen, pauli_y, pauli_z, unitarity_defect,
};
use crate::model::{build_twoqubit_hamiltonian, TwoQubitParams};
use crate::propagate::{square_pulse_propagator, Drive, PulseIndex};
use crate::{lit, to_f64, CMatrix, Error, Real, Result};

/// Largest off-block entry accepted by [`assemble_gate`].
pub const BLOCK_TOLERANCE: f64 = 1e-8;

/// Timing of the two square pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PulseSchedule<T> {
    pub q: TwoQubitParams<T>,
    /// End of the first pulse `τ`.
    pub tau1: T,
    /// Start of the second pulse `τ′ = τ + gap`.
    pub tau2_start: T,
    /// End of the second pulse `τ″`.
    pub tau2_end: T,
    pub omega: T,
    pub omega_t: T,
    /// Rotation angle `φ` of the assembled gate, in `(−π, π]`.
    pub varphi_rot: T,
}

impl<T: Real> PulseSchedule<T> {
    pub fn first_duration(&self) -> T {
        self.tau1
    }

    pub fn second_duration(&self) -> T {
        self.tau2_end - self.tau2_start
    }

    /// `(−1)^{n+ñ+1}`.
    pub fn sign(&self) -> T {
        if (self.q.n1 + self.q.n2) % 2 == 0 {
            -T::one()
        } else {
            T::one()
        }
    }

    /// `|sin(ωτ) − (−1)^n|` and the same for the second pulse.
    pub fn timing_defects(&self) -> (T, T) {
        let parity = |n: u8| if n == 0 { T::one() } else { -T::one() };
        (
            ((self.omega * self.first_duration()).sin() - parity(self.q.n1)).abs(),
            ((self.omega_t * self.second_duration()).sin() - parity(self.q.n2)).abs(),
        )
    }

    /// `|sin φ − αδ(Φ−Φ̃)/(ωω̃)|`.
    pub fn angle_defect(&self) -> T {
        let q = &self.q;
        let formula = q.alpha * q.delta * (q.amp1 - q.amp2) / (self.omega * self.omega_t);
        (self.varphi_rot.sin() - formula).abs()
    }

    /// The protocol as a piecewise-constant drive on `[0, τ″]`.
    pub fn drive(&self) -> Drive<T> {
        let q = &self.q;
        Drive::new(4)
            .then_constant(
                self.first_duration(),
                build_twoqubit_hamiltonian(q, q.amp1 * q.delta, T::zero()),
            )
            .then_idle(self.tau2_start - self.tau1)
            .then_constant(
                self.second_duration(),
                build_twoqubit_hamiltonian(q, q.amp2 * q.delta, T::zero()),
            )
    }
}

/// `sin φ` and `cos φ` of the assembled rotation.
fn rotation_sin_cos<T: Real>(q: &TwoQubitParams<T>) -> (T, T) {
    let norm = q.omega() * q.omega_tilde();
    let d2 = q.delta * q.delta;
    (
        q.alpha * q.delta * (q.amp1 - q.amp2) / norm,
        (q.amp1 * q.amp2 * d2 + q.alpha * q.alpha) / norm,
    )
}

/// Shortest pulses satisfying the parity conditions, `ωτ = π/2 + nπ`.
pub fn solve_schedule<T: Real>(q: &TwoQubitParams<T>) -> Result<PulseSchedule<T>> {
    q.validate()?;
    let (omega, omega_t) = (q.omega(), q.omega_tilde());
    for (name, w) in [("amp1", omega), ("amp2", omega_t)] {
        if !(w > T::zero()) {
            return Err(Error::Degenerate(format!(
                "alpha and {name} are both zero, so the pulse frequency vanishes"
            )));
        }
    }
    let quarter = |n: u8| T::frac_pi_2() + T::pi() * lit(n as f64);
    let tau1 = quarter(q.n1) / omega;
    let tau2_start = tau1 + q.gap;
    let tau2_end = tau2_start + quarter(q.n2) / omega_t;
    let (s, c) = rotation_sin_cos(q);
    Ok(PulseSchedule {
        q: *q,
        tau1,
        tau2_start,
        tau2_end,
        omega,
        omega_t,
        varphi_rot: s.atan2(c),
    })
}

/// Assembled two-qubit gate and its entangling power.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglingGateReport<T: Real> {
    pub unitary: CMatrix<T>,
    pub block_plus: CMatrix<T>,
    pub block_minus: CMatrix<T>,
    /// Rotation angle read off `block_plus` with the global sign removed.
    pub varphi_rot: T,
    pub concurrence: T,
    /// Largest entry outside the two diagonal blocks.
    pub off_block: T,
}

/// `R(φ) = exp(−iφσy)`.
pub fn rotation<T: Real>(phi: T) -> CMatrix<T> {
    let (s, c) = phi.sin_cos();
    let (s, c) = (to_f64(s), to_f64(c));
    from_rows(2, 2, &[(c, 0.), (-s, 0.), (s, 0.), (c, 0.)])
}

/// `R(φ)⊕R(−φ)`, the ideal entangler up to sign.
pub fn controlled_rotation<T: Real>(phi: T) -> CMatrix<T> {
    let mut u = crate::linalg::zeros(4, 4);
    u.view_mut((0, 0), (2, 2)).copy_from(&rotation(phi));
    u.view_mut((2, 2), (2, 2)).copy_from(&rotation(-phi));
    u
}

/// Splits a 4×4 matrix into its `H₊` and `H₋` blocks and the largest
/// off-block entry.
pub fn split_blocks<T: Real>(u: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>, T) {
    let plus = u.view((0, 0), (2, 2)).into_owned();
    let minus = u.view((2, 2), (2, 2)).into_owned();
    let off = max_abs(&u.view((0, 2), (2, 2)).into_owned())
        .max(max_abs(&u.view((2, 0), (2, 2)).into_owned()));
    (plus, minus, off)
}

/// `U = U₂(τ″−τ′)·U₁(τ)` from the closed-form square-pulse propagators; the
/// gap carries no Hamiltonian and contributes the identity.
pub fn assemble_gate<T: Real>(s: &PulseSchedule<T>) -> Result<EntanglingGateReport<T>> {
    let u1 = square_pulse_propagator(&s.q, PulseIndex::First, s.first_duration())?;
    let u2 = square_pulse_propagator(&s.q, PulseIndex::Second, s.second_duration())?;
    let unitary = u2 * u1;
    let (block_plus, block_minus, off_block) = split_blocks(&unitary);
    let tol: T = lit(BLOCK_TOLERANCE);
    if off_block > tol {
        return Err(Error::Protocol {
            defect: to_f64(off_block),
        });
    }
    let sign = s.sign();
    let r = &block_plus * cplx(sign, T::zero());
    let varphi_rot = r[(1, 0)].re.atan2(r[(0, 0)].re);
    let ideal = controlled_rotation(varphi_rot) * cplx(sign, T::zero());
    let rotation_defect = max_abs(&(&unitary - ideal));
    if rotation_defect > tol {
        return Err(Error::Protocol {
            defect: to_f64(rotation_defect),
        });
    }
    let concurrence = concurrence_of(&unitary)?;
    Ok(EntanglingGateReport {
        unitary,
        block_plus,
        block_minus,
        varphi_rot,
        concurrence,
        off_block,
    })
}

/// `|sin 2φ|`, the concurrence the assembled gate should have.
pub fn analytic_concurrence<T: Real>(q: &TwoQubitParams<T>) -> T {
    if !(q.omega() > T::zero() && q.omega_tilde() > T::zero()) {
        return T::zero();
    }
    let (s, c) = rotation_sin_cos(q);
    (lit::<T>(2.0) * s * c).abs()
}

fn magic_basis<T: Real>() -> CMatrix<T> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    from_rows(
        4,
        4,
        &[
            (r, 0.),
            (0., 0.),
            (0., 0.),
            (0., r),
            (0., 0.),
            (0., r),
            (r, 0.),
            (0., 0.),
            (0., 0.),
            (0., r),
            (-r, 0.),
            (0., 0.),
            (r, 0.),
            (0., 0.),
            (0., 0.),
            (0., -r),
        ],
    )
}

/// Operator-entanglement concurrence of a two-qubit gate: the largest
/// concurrence it can create from a product input.
///
/// In the magic basis `U_B = Q†UQ`, the eigenphases `θ_k` of `U_BᵀU_B` are
/// local invariants. If `0` lies in the convex hull of `e^{iθ_k}` the gate
/// is perfectly entangling (`C = 1`); otherwise `C = max |sin((θ_k−θ_l)/2)|`.
pub fn concurrence_of<T: Real>(gate: &CMatrix<T>) -> Result<T> {
    if gate.shape() != (4, 4) {
        return Err(Error::Validation(format!(
            "expected a 4x4 gate, got {:?}",
            gate.shape()
        )));
    }
    let defect = unitarity_defect(gate);
    if defect > lit(1e-8) {
        return Err(Error::Validation(format!(
            "gate is not unitary (defect {:.3e})",
            to_f64(defect)
        )));
    }
    let q = magic_basis::<T>();
    let ub = q.adjoint() * gate * &q;
    let m = ub.transpose() * &ub;
    let (values, _) = normal_eigen(&m);
    let mut phases: Vec<T> = values.iter().map(|z| z.argument()).collect();
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let wrap_gap = phases[0] + T::two_pi() - phases[phases.len() - 1];
    let max_gap = phases
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap_gap, |a, b| a.max(b));
    // origin in the hull iff no arc gap exceeds π
    if max_gap <= T::pi() + lit(1e-12) {
        return Ok(T::one());
    }
    let mut best = T::zero();
    for (k, a) in phases.iter().enumerate() {
        for b in &phases[k + 1..] {
            best = best.max(((*b - *a) * lit(0.5)).sin().abs());
        }
    }
    Ok(best.min(T::one()))
}

/// `exp(−iφ σz⊗σy)`, equal to `R(φ)⊕R(−φ)`.
pub fn zy_rotation<T: Real>(phi: T) -> CMatrix<T> {
    crate::linalg::expm_hermitian(&pauli_z::<T>().kronecker(&pauli_y::<T>()), phi)
}

/// Amplitude left free by [`solve_for_entangling_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeAmplitude {
    First,
    Second,
}

fn with_amplitude<T: Real>(q: &TwoQubitParams<T>, free: FreeAmplitude, x: T) -> TwoQubitParams<T> {
    let mut out = *q;
    match free {
        FreeAmplitude::First => out.amp1 = x,
        FreeAmplitude::Second => out.amp2 = x,
    }
    out
}

fn rotation_angle<T: Real>(q: &TwoQubitParams<T>) -> T {
    let (s, c) = rotation_sin_cos(q);
    s.atan2(c)
}

/// `φ` as the free amplitude tends to `+∞`.
fn limiting_angle<T: Real>(q: &TwoQubitParams<T>, free: FreeAmplitude) -> T {
    let sd = q.delta.signum();
    match free {
        FreeAmplitude::First => (q.alpha * sd).atan2(q.amp2 * q.delta * sd),
        FreeAmplitude::Second => (-q.alpha * sd).atan2(q.amp1 * q.delta * sd),
    }
}

/// Finds a non-negative value of the free amplitude for which the assembled
/// gate has concurrence `target_c`, keeping every other parameter of `fixed`.
///
/// `φ` is strictly monotone in the free amplitude over `[0, ∞)`, so the
/// root is bracketed and bisected in the amplitude itself.
pub fn solve_for_entangling_power<T: Real>(
    target_c: T,
    fixed: &TwoQubitParams<T>,
    free: FreeAmplitude,
) -> Result<TwoQubitParams<T>> {
    if !(target_c >= T::zero() && target_c <= T::one()) {
        return Err(Error::config(
            "target_c",
            "target concurrence must lie in [0, 1]",
        ));
    }
    fixed.validate()?;
    let other = match free {
        FreeAmplitude::First => fixed.amp2,
        FreeAmplitude::Second => fixed.amp1,
    };
    if other < T::zero() {
        return Err(Error::config(
            "amplitude",
            "the fixed amplitude must be non-negative",
        ));
    }
    let phi_star = target_c.asin() * lit(0.5);
    let start = rotation_angle(&with_amplitude(fixed, free, T::zero()));
    let end = limiting_angle(fixed, free);
    let (lo, hi) = if start <= end {
        (start, end)
    } else {
        (end, start)
    };
    let half_pi = T::frac_pi_2();
    let candidates = [phi_star, -phi_star, half_pi - phi_star, phi_star - half_pi];
    let reachable = |phi: T| phi >= lo && (phi < hi || (phi == hi && hi == start));
    let target = candidates
        .iter()
        .copied()
        .filter(|&phi| reachable(phi))
        .min_by(|a, b| {
            a.abs()
                .partial_cmp(&b.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    let Some(target) = target else {
        let quarter = T::frac_pi_4();
        let achievable = if reachable(quarter) || reachable(-quarter) {
            T::one()
        } else {
            let c = |phi: T| (phi * lit(2.0)).sin().abs();
            c(lo).max(c(hi))
        };
        return Err(Error::Infeasible {
            target: to_f64(target_c),
            achievable: to_f64(achievable),
        });
    };

    let increasing = end > start;
    let below = |x: T| {
        let phi = rotation_angle(&with_amplitude(fixed, free, x));
        if increasing {
            phi < target
        } else {
            phi > target
        }
    };
    let mut a = T::zero();
    let mut b = other
        .max(fixed.alpha.abs() / fixed.delta.abs().max(T::default_epsilon()))
        .max(T::one());
    let mut expansions = 0;
    while below(b) {
        a = b;
        b *= lit(2.0);
        expansions += 1;
        if expansions > 2000 || !b.is_finite() {
            return Err(Error::Infeasible {
                target: to_f64(target_c),
                achievable: to_f64(
                    (rotation_angle(&with_amplitude(fixed, free, a)) * lit(2.0))
                        .sin()
                        .abs(),
                ),
            });
        }
    }
    if !below(a) {
        return Ok(with_amplitude(fixed, free, a));
    }
    for _ in 0..200 {
        let mid = (a + b) * lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        if below(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    let q = with_amplitude(fixed, free, (a + b) * lit(0.5));
    let report = assemble_gate(&solve_schedule(&q)?)?;
    let miss = (report.concurrence - target_c).abs();
    if miss > lit(1e-6) {
        return Err(Error::Validation(format!(
            "root-find missed the target concurrence by {:.3e}",
            to_f64(miss)
        )));
    }
    Ok(q)
}

/// The dimensionless pair `(Φ/Φ̃, α/(Φ̃δ))`, when `Φ̃δ ≠ 0`.
pub fn dimensionless_pair<T: Real>(q: &TwoQubitParams<T>) -> Option<(T, T)> {
    let scale = q.amp2 * q.delta;
    if scale == T::zero() || q.amp2 == T::zero() {
        return None;
    }
    Some((q.amp1 / q.amp2, q.alpha / scale))
}

/// Parameters realising a point `(x, y) = (Φ/Φ̃, α/(Φ̃δ))` with `Φ̃ = δ = 1`.
pub fn params_at<T: Real>(x: T, y: T) -> TwoQubitParams<T> {
    TwoQubitParams::new(y, T::one(), x, T::one())
}

/// `C(x, y) = 2|y(x−1)(x+y²)| / ((x²+y²)(1+y²))`, zero at the degenerate
/// point `x = y = 0`.
pub fn concurrence_surface<T: Real>(x: T, y: T) -> T {
    let den = (x * x + y * y) * (T::one() + y * y);
    if den == T::zero() {
        return T::zero();
    }
    (lit::<T>(2.0) * y * (x - T::one()) * (x + y * y)).abs() / den
}

/// Bounds and resolution of a concurrence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SweepGrid<T> {
    #[serde(default = "default_bounds")]
    pub phi_ratio: [T; 2],
    #[serde(default = "default_bounds")]
    pub alpha_ratio: [T; 2],
    #[serde(default = "default_points")]
    pub nx: usize,
    #[serde(default = "default_points")]
    pub ny: usize,
    /// Every `check_stride`-th point along each axis is cross-checked.
    #[serde(default = "default_stride")]
    pub check_stride: usize,
}

fn default_bounds<T: Real>() -> [T; 2] {
    [T::zero(), lit(4.0)]
}

fn default_points() -> usize {
    201
}

fn default_stride() -> usize {
    10
}

impl<T: Real> Default for SweepGrid<T> {
    fn default() -> Self {
        Self {
            phi_ratio: default_bounds(),
            alpha_ratio: default_bounds(),
            nx: default_points(),
            ny: default_points(),
            check_stride: default_stride(),
        }
    }
}

impl<T: Real> SweepGrid<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, [a, b]) in [
            ("phi_ratio", self.phi_ratio),
            ("alpha_ratio", self.alpha_ratio),
        ] {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(Error::config(
                    name,
                    "bounds must be finite with lower <= upper",
                ));
            }
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::config(
                "nx",
                "grid needs at least one point per axis",
            ));
        }
        if self.check_stride == 0 {
            return Err(Error::config("check_stride", "stride must be positive"));
        }
        Ok(())
    }

    fn axis(bounds: [T; 2], n: usize, k: usize) -> T {
        if n == 1 {
            return bounds[0];
        }
        bounds[0] + (bounds[1] - bounds[0]) * lit(k as f64 / (n - 1) as f64)
    }

    pub fn x(&self, i: usize) -> T {
        Self::axis(self.phi_ratio, self.nx, i)
    }

    pub fn y(&self, j: usize) -> T {
        Self::axis(self.alpha_ratio, self.ny, j)
    }
}

/// Sweep of the concurrence surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceTable<T: Real> {
    pub grid: SweepGrid<T>,
    /// `(x, y, C)` with `x` varying slowest.
    pub rows: Vec<(T, T, T)>,
    /// Number of rows cross-checked against the assembled gate.
    pub checked: usize,
    /// Largest `|C_formula − concurrence_of(gate)|` over checked rows.
    pub max_check_deviation: T,
}

impl<T: Real> ConcurrenceTable<T> {
    pub fn max_concurrence(&self) -> T {
        self.rows.iter().fold(T::zero(), |a, r| a.max(r.2))
    }
}

/// Evaluates the analytic surface on the grid and cross-checks a subsample
/// against the decomposition-based concurrence of the assembled gate.
pub fn sweep_concurrence<T: Real>(grid: &SweepGrid<T>) -> Result<ConcurrenceTable<T>> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.nx * grid.ny);
    let mut checked = 0;
    let mut max_dev = T::zero();
    for i in 0..grid.nx {
        let x = grid.x(i);
        for j in 0..grid.ny {
            let y = grid.y(j);
            let c = concurrence_surface(x, y);
            let q = params_at(x, y);
            if i % grid.check_stride == 0 && j % grid.check_stride == 0 && q.omega() > T::zero() {
                let report = assemble_gate(&solve_schedule(&q)?)?;
                max_dev = max_dev.max((report.concurrence - c).abs());
                checked += 1;
            }
            rows.push((x, y, c));
        }
    }
    Ok(ConcurrenceTable {
        grid: *grid,
        rows,
        checked,
        max_check_deviation: max_dev,
    })
}

/// Frames spanning `H₊` and `H₋`.
pub fn block_frames<T: Real>() -> (CMatrix<T>, CMatrix<T>) {
    (basis_frame(4, &[0, 1]), basis_frame(4, &[2, 3]))
}

/// `max(‖P₊HP₊‖, ‖P₋HP₋‖)` for a two-qubit Hamiltonian.
pub fn block_projected_norm<T: Real>(h: &CMatrix<T>) -> T {
    let (plus, minus) = block_frames::<T>();
    max_abs(&(plus.adjoint() * h * &plus)).max(max_abs(&(minus.adjoint() * h * &minus)))
}
