//! Time-evolution operators for time-dependent Hamiltonians.
//!
//! A [`Drive`] is a piecewise Hamiltonian: a sequence of contiguous segments,
//! each either constant or smooth. Propagation handles every segment on its
//! own uniform grid so that pulse edges never fall inside a step. Within a
//! segment the step count is doubled until two successive propagators agree
//! to the configured tolerance in max norm.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{commutator, cplx, creal, expm_hermitian, identity, max_abs, unitarity_defect};
use crate::model::{build_twoqubit_hamiltonian, TwoQubitParams};
use crate::{lit, to_f64, CMatrix, Error, Real, Result};

/// Stepping scheme inside a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Fourth-order Magnus expansion on two Gauss–Legendre nodes.
    #[default]
    Magnus4,
    /// Exponential of the midpoint Hamiltonian (second order).
    MidpointExponential,
    /// Classical Runge–Kutta on `U̇ = −iH(t)U` (not norm preserving).
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct IntegratorConfig<T> {
    #[serde(default = "default_tolerance")]
    pub tolerance: T,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// Step count the doubling starts from.
    #[serde(default = "default_initial_steps")]
    pub initial_steps: usize,
}

fn default_tolerance<T: Real>() -> T {
    lit(1e-10)
}

fn default_max_steps() -> usize {
    1 << 20
}

fn default_initial_steps() -> usize {
    8
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_steps: default_max_steps(),
            scheme: Scheme::default(),
            initial_steps: default_initial_steps(),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn with_tolerance(tolerance: T) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > T::zero()) {
            return Err(Error::config("tolerance", "tolerance must be positive"));
        }
        if self.initial_steps == 0 || self.max_steps < self.initial_steps {
            return Err(Error::config(
                "max_steps",
                "need 1 <= initial_steps <= max_steps",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorResult<T: Real> {
    pub unitary: CMatrix<T>,
    /// Total number of elementary steps in the accepted propagator.
    pub steps: usize,
    /// Unitarity defect `‖U†U − I‖_max`.
    pub est_error: T,
}

pub type HamiltonianFn<T> = Arc<dyn Fn(T) -> CMatrix<T> + Send + Sync>;

/// One piece of a [`Drive`]. Closures receive the time measured from the
/// start of their own segment.
#[derive(Clone)]
pub enum Segment<T: Real> {
    Constant {
        duration: T,
        hamiltonian: CMatrix<T>,
    },
    Varying {
        duration: T,
        hamiltonian: HamiltonianFn<T>,
    },
}

impl<T: Real> Segment<T> {
    pub fn duration(&self) -> T {
        match self {
            Segment::Constant { duration, .. } | Segment::Varying { duration, .. } => *duration,
        }
    }

    /// Hamiltonian at local time `s`.
    pub fn at(&self, s: T) -> CMatrix<T> {
        match self {
            Segment::Constant { hamiltonian, .. } => hamiltonian.clone(),
            Segment::Varying { hamiltonian, .. } => hamiltonian(s),
        }
    }
}

impl<T: Real> std::fmt::Debug for Segment<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Segment::Constant { duration, .. } => write!(f, "Constant({duration:?})"),
            Segment::Varying { duration, .. } => write!(f, "Varying({duration:?})"),
        }
    }
}

/// Piecewise time-dependent Hamiltonian on `[start, start + Σ durations]`.
#[derive(Clone, Debug)]
pub struct Drive<T: Real> {
    dim: usize,
    start: T,
    segments: Vec<Segment<T>>,
}

impl<T: Real> Drive<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            start: T::zero(),
            segments: Vec::new(),
        }
    }

    /// Single smooth segment on `[t0, t1]`; `h` receives absolute time.
    pub fn smooth<F>(dim: usize, t0: T, t1: T, h: F) -> Self
    where
        F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    {
        Self {
            dim,
            start: t0,
            segments: vec![Segment::Varying {
                duration: t1 - t0,
                hamiltonian: Arc::new(move |s| h(t0 + s)),
            }],
        }
    }

    /// Appends a smooth segment; `h` receives the time since the segment began.
    pub fn then<F>(mut self, duration: T, h: F) -> Self
    where
        F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    {
        self.segments.push(Segment::Varying {
            duration,
            hamiltonian: Arc::new(h),
        });
        self
    }

    pub fn then_constant(mut self, duration: T, hamiltonian: CMatrix<T>) -> Self {
        assert_eq!(
            hamiltonian.nrows(),
            self.dim,
            "Hamiltonian dimension mismatch"
        );
        self.segments.push(Segment::Constant {
            duration,
            hamiltonian,
        });
        self
    }

    /// Appends a stretch with the Hamiltonian switched off.
    pub fn then_idle(self, duration: T) -> Self {
        let dim = self.dim;
        self.then_constant(duration, CMatrix::zeros(dim, dim))
    }

    /// Appends every segment of `other`.
    pub fn append(mut self, other: Drive<T>) -> Self {
        assert_eq!(self.dim, other.dim, "drive dimension mismatch");
        self.segments.extend(other.segments);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn duration(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration())
    }

    pub fn end(&self) -> T {
        self.start + self.duration()
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// Hamiltonian at absolute time `t` (zero outside the drive). At a
    /// segment boundary the later segment wins.
    pub fn hamiltonian(&self, t: T) -> CMatrix<T> {
        let mut offset = self.start;
        if t < offset {
            return CMatrix::zeros(self.dim, self.dim);
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let end = offset + seg.duration();
            let last = i + 1 == self.segments.len();
            if t < end || (last && t <= end) {
                return seg.at(t - offset);
            }
            offset = end;
        }
        CMatrix::zeros(self.dim, self.dim)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !self.start.is_finite() {
            return Err(Error::config("t0", "start time must be finite"));
        }
        for seg in &self.segments {
            let d = seg.duration();
            if !d.is_finite() || d < T::zero() {
                return Err(Error::config(
                    "t1",
                    "segments need finite non-negative duration (t1 >= t0)",
                ));
            }
        }
        Ok(())
    }
}

/// Product of `n` elementary steps of a linear flow `Ẋ = G(s)X` over
/// `[0, duration]`. `exp` exponentiates one step generator.
pub(crate) fn flow_product<T: Real>(
    generator: &dyn Fn(T) -> CMatrix<T>,
    exp: &dyn Fn(&CMatrix<T>) -> CMatrix<T>,
    scheme: Scheme,
    dim: usize,
    duration: T,
    n: usize,
    mut visit: impl FnMut(usize, &CMatrix<T>),
) -> CMatrix<T> {
    let h = duration / lit(n as f64);
    let mut acc = identity::<T>(dim);
    let gauss: T = lit(3f64.sqrt() / 6.0);
    let half: T = lit(0.5);
    for k in 0..n {
        let a = h * lit(k as f64);
        let step = match scheme {
            Scheme::Magnus4 => {
                let g1 = generator(a + h * (half - gauss));
                let g2 = generator(a + h * (half + gauss));
                let omega = (&g1 + &g2) * creal(h * half)
                    + commutator(&g2, &g1) * creal(h * h * lit(3f64.sqrt() / 12.0));
                exp(&omega)
            }
            Scheme::MidpointExponential => exp(&(generator(a + h * half) * creal(h))),
            Scheme::Rk4 => {
                let hc = creal(h);
                let g0 = generator(a);
                let gm = generator(a + h * half);
                let g1 = generator(a + h);
                let id = identity::<T>(dim);
                let k1 = &g0 * &id;
                let k2 = &gm * (&id + &k1 * creal(h * half));
                let k3 = &gm * (&id + &k2 * creal(h * half));
                let k4 = &g1 * (&id + &k3 * hc);
                id + (k1 + k2 * creal(lit(2.0)) + k3 * creal(lit(2.0)) + k4) * creal(h / lit(6.0))
            }
        };
        acc = &step * acc;
        visit(k, &acc);
    }
    acc
}

/// Doubles the step count from `cfg.initial_steps` until two successive
/// results agree to `cfg.tolerance`. Returns the finer result and its steps.
pub(crate) fn converge<T: Real>(
    cfg: &IntegratorConfig<T>,
    mut run: impl FnMut(usize) -> CMatrix<T>,
) -> Result<(CMatrix<T>, usize)> {
    cfg.validate()?;
    let mut n = cfg.initial_steps;
    let mut prev = run(n);
    loop {
        let next_n = n * 2;
        if next_n > cfg.max_steps {
            return Err(Error::Integration {
                steps: n,
                last_change: f64::NAN,
                defect: to_f64(unitarity_defect(&prev)),
            });
        }
        let cur = run(next_n);
        let change = max_abs(&(&cur - &prev));
        if !change.is_finite() {
            return Err(Error::Integration {
                steps: next_n,
                last_change: f64::INFINITY,
                defect: f64::NAN,
            });
        }
        if change < cfg.tolerance {
            return Ok((cur, next_n));
        }
        if next_n * 2 > cfg.max_steps {
            return Err(Error::Integration {
                steps: next_n,
                last_change: to_f64(change),
                defect: to_f64(unitarity_defect(&cur)),
            });
        }
        prev = cur;
        n = next_n;
    }
}

pub(crate) fn hamiltonian_exp<T: Real>(omega: &CMatrix<T>) -> CMatrix<T> {
    // omega = −iK·1 with K Hermitian
    expm_hermitian(&(omega * cplx(T::zero(), T::one())), T::one())
}

/// Propagator of one segment with step doubling; constant segments are
/// exponentiated exactly.
pub(crate) fn evolve_segment<T: Real>(
    seg: &Segment<T>,
    dim: usize,
    cfg: &IntegratorConfig<T>,
) -> Result<(CMatrix<T>, usize)> {
    match seg {
        Segment::Constant {
            duration,
            hamiltonian,
        } => Ok((expm_hermitian(hamiltonian, *duration), 1)),
        Segment::Varying {
            duration,
            hamiltonian,
        } => {
            let generator = |s: T| hamiltonian(s) * cplx(T::zero(), -T::one());
            converge(cfg, |n| {
                flow_product(
                    &generator,
                    &hamiltonian_exp,
                    cfg.scheme,
                    dim,
                    *duration,
                    n,
                    |_, _| {},
                )
            })
        }
    }
}

/// Time-ordered exponential of a piecewise drive.
pub fn evolve_drive<T: Real>(
    drive: &Drive<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<PropagatorResult<T>> {
    drive.validate()?;
    let mut u = identity::<T>(drive.dim());
    let mut steps = 0;
    for seg in drive.segments() {
        let (step, n) = evolve_segment(seg, drive.dim(), cfg)?;
        u = step * u;
        steps += n;
    }
    let est_error = unitarity_defect(&u);
    Ok(PropagatorResult {
        unitary: u,
        steps,
        est_error,
    })
}

/// `U(t1, t0) = T exp(−i∫H dt)` for a smooth Hamiltonian `h` of dimension `dim`.
pub fn evolve<T, F>(
    h: F,
    dim: usize,
    t0: T,
    t1: T,
    cfg: &IntegratorConfig<T>,
) -> Result<PropagatorResult<T>>
where
    T: Real,
    F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
{
    if t1 < t0 {
        return Err(Error::config("t1", "t1 must not precede t0"));
    }
    evolve_drive(&Drive::smooth(dim, t0, t1, h), cfg)
}

/// Brute-force oracle: `Π_k exp(−iH(t_k+Δt/2)Δt)` over `n_steps` uniform steps,
/// each exponential taken through a Hermitian eigendecomposition.
pub fn evolve_bruteforce<T: Real>(
    h: impl Fn(T) -> CMatrix<T>,
    t0: T,
    t1: T,
    n_steps: usize,
) -> CMatrix<T> {
    assert!(n_steps >= 1, "need at least one step");
    let dt = (t1 - t0) / lit(n_steps as f64);
    let first = h(t0 + dt * lit(0.5));
    let mut u = expm_hermitian(&first, dt);
    for k in 1..n_steps {
        let mid = t0 + dt * lit(k as f64 + 0.5);
        u = expm_hermitian(&h(mid), dt) * u;
    }
    u
}

/// Which of the two entangler pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseIndex {
    First,
    Second,
}

/// Closed-form propagator of a square pulse on the two-qubit Hamiltonian
/// with the target hopping held at zero:
/// `U(t) = cos(ωt)·I − (i/ω)·sin(ωt)·H`, exact because `H² = ω²I`.
pub fn square_pulse_propagator<T: Real>(
    q: &TwoQubitParams<T>,
    which: PulseIndex,
    t: T,
) -> Result<CMatrix<T>> {
    let (amp, omega) = match which {
        PulseIndex::First => (q.amp1, q.omega()),
        PulseIndex::Second => (q.amp2, q.omega_tilde()),
    };
    if !(omega > T::zero()) {
        return Err(Error::Degenerate(
            "pulse amplitude and coupling alpha are both zero, so omega = 0".into(),
        ));
    }
    let h = build_twoqubit_hamiltonian(q, amp * q.delta, T::zero());
    let (s, c) = (omega * t).sin_cos();
    Ok(identity::<T>(4) * creal(c) + h * cplx(T::zero(), -s / omega))
}
