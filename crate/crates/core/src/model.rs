//! Hamiltonians of the triple-dot device and of two coupled charge qubits.
//!
//! Basis orderings are fixed:
//!
//! * ring / Λ system: site basis `(|100⟩, |010⟩, |001⟩)` which encodes
//!   `(|0⟩, |a⟩, |1⟩)`, i.e. sites 0 and 2 carry the qubit and site 1 is the
//!   auxiliary dot;
//! * two qubits: `(|00⟩, |01⟩, |10⟩, |11⟩)` with the first factor the
//!   control qubit.
//!
//! Units have `ħ = 1`; energies are in units of a reference tunnelling
//! amplitude and times in inverse energy.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, creal, kron, pauli_x, pauli_y, zeros};
use crate::{lit, to_f64, CMatrix, Error, Real, Result};

/// Nearest-neighbour hopping `k → k+1` with Peierls phase.
///
/// The matrix element is `⟨k|H|k+1⟩ = magnitude · e^{−i·phase}` where
/// `phase` is the dimensionless line integral `(e/ħ)∫A·dl` along the bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond<T> {
    pub from: usize,
    pub to: usize,
    pub magnitude: T,
    pub phase: T,
}

/// Tight-binding network of single-orbital dots with complex hoppings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotNetwork<T> {
    pub onsite: Vec<T>,
    pub bonds: Vec<Bond<T>>,
    /// Site `n` is identified with site `0`, allowing the wrap bond.
    pub periodic: bool,
}

impl<T: Real> DotNetwork<T> {
    pub fn new(onsite: Vec<T>, bonds: Vec<Bond<T>>, periodic: bool) -> Result<Self> {
        let net = Self {
            onsite,
            bonds,
            periodic,
        };
        net.validate()?;
        Ok(net)
    }

    /// Periodic ring with hopping magnitudes for bonds `(0,1), (1,2), …,
    /// (n−1,0)`; the total flux phase is split equally over bonds with
    /// non-zero magnitude (over all bonds if none is active).
    pub fn ring(onsite: Vec<T>, magnitudes: Vec<T>, total_flux: T) -> Result<Self> {
        let n = onsite.len();
        if magnitudes.len() != n {
            return Err(Error::config(
                "magnitudes",
                format!(
                    "a ring of {n} sites needs {n} bond magnitudes, got {}",
                    magnitudes.len()
                ),
            ));
        }
        let active = magnitudes.iter().filter(|m| **m > T::zero()).count();
        let share = if active == 0 {
            total_flux / lit::<T>(n as f64)
        } else {
            total_flux / lit::<T>(active as f64)
        };
        let bonds = magnitudes
            .iter()
            .enumerate()
            .map(|(k, &magnitude)| Bond {
                from: k,
                to: (k + 1) % n,
                magnitude,
                phase: if active == 0 || magnitude > T::zero() {
                    share
                } else {
                    T::zero()
                },
            })
            .collect();
        Self::new(onsite, bonds, true)
    }

    /// The triple-dot ring realising the Λ system at unit envelope, with the
    /// `(2,0)` bond closed and carrying whatever phase completes `total_flux`.
    pub fn lambda_ring(p: &LambdaParams<T>, total_flux: T) -> Result<Self> {
        p.validate()?;
        let half = p.theta * lit(0.5);
        let bonds = vec![
            Bond {
                from: 0,
                to: 1,
                magnitude: half.sin(),
                phase: p.phi,
            },
            Bond {
                from: 1,
                to: 2,
                magnitude: half.cos(),
                phase: T::pi(),
            },
            Bond {
                from: 2,
                to: 0,
                magnitude: T::zero(),
                phase: total_flux - p.phi - T::pi(),
            },
        ];
        Self::new(vec![T::zero(); 3], bonds, true)
    }

    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    /// Sum of bond phases, i.e. the dimensionless flux through the ring.
    pub fn total_flux(&self) -> T {
        self.bonds.iter().fold(T::zero(), |acc, b| acc + b.phase)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n < 2 {
            return Err(Error::config(
                "onsite",
                "a network needs at least two sites",
            ));
        }
        if self.onsite.iter().any(|e| !e.is_finite()) {
            return Err(Error::config("onsite", "on-site energies must be finite"));
        }
        let mut seen = Vec::with_capacity(self.bonds.len());
        for (i, b) in self.bonds.iter().enumerate() {
            let field = format!("bonds[{i}]");
            if b.from >= n || b.to >= n {
                return Err(Error::config(
                    field,
                    format!("site index out of range for {n} sites"),
                ));
            }
            let neighbour =
                b.to == b.from + 1 || (self.periodic && n > 2 && b.from == n - 1 && b.to == 0);
            if !neighbour {
                return Err(Error::config(
                    field,
                    format!("({}, {}) is not a nearest-neighbour bond", b.from, b.to),
                ));
            }
            if !b.magnitude.is_finite() || b.magnitude < T::zero() {
                return Err(Error::config(
                    field,
                    "hopping magnitude must be finite and non-negative",
                ));
            }
            if !b.phase.is_finite() {
                return Err(Error::config(field, "Peierls phase must be finite"));
            }
            if seen.contains(&b.from) {
                return Err(Error::config(field, "duplicate bond"));
            }
            seen.push(b.from);
        }
        Ok(())
    }

    /// Applies the gauge transformation `A → A + ∇Π`: every bond phase shifts
    /// by `Π(to) − Π(from)`.
    ///
    /// `site_phases` holds `Π` on each site; a periodic network may append
    /// the value reached after winding once around the ring, which must equal
    /// `Π(0)` because a single-valued gauge function cannot change the flux.
    pub fn with_gauge(&self, site_phases: &[T]) -> Result<Self> {
        let n = self.n_sites();
        let wrap_given = self.periodic && site_phases.len() == n + 1;
        if site_phases.len() != n && !wrap_given {
            return Err(Error::config(
                "gauge",
                format!("expected {n} site phases, got {}", site_phases.len()),
            ));
        }
        if site_phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("gauge", "site phases must be finite"));
        }
        if wrap_given {
            let winding = site_phases[n] - site_phases[0];
            if winding.abs() > lit(1e-12) {
                return Err(Error::config(
                    "gauge",
                    format!(
                        "gauge winds by {:.3e}, which changes the enclosed flux",
                        to_f64(winding)
                    ),
                ));
            }
        }
        let mut out = self.clone();
        for b in &mut out.bonds {
            b.phase += site_phases[b.to] - site_phases[b.from];
        }
        Ok(out)
    }
}

/// Ring Hamiltonian `Σ ε_k |k⟩⟨k| + Σ (J_{k,k+1}|k⟩⟨k+1| + h.c.)`.
pub fn build_ring_hamiltonian<T: Real>(net: &DotNetwork<T>) -> Result<CMatrix<T>> {
    build_ring_hamiltonian_scaled(net, T::one())
}

/// Ring Hamiltonian with every hopping multiplied by `hop_scale` (the
/// envelope value `Ω(t)` when all barriers are driven together).
pub fn build_ring_hamiltonian_scaled<T: Real>(
    net: &DotNetwork<T>,
    hop_scale: T,
) -> Result<CMatrix<T>> {
    net.validate()?;
    let n = net.n_sites();
    let mut h = zeros(n, n);
    for (k, &e) in net.onsite.iter().enumerate() {
        h[(k, k)] = creal(e);
    }
    for b in &net.bonds {
        let j = cis(-b.phase) * (b.magnitude * hop_scale);
        h[(b.from, b.to)] += j;
        h[(b.to, b.from)] += j.conj();
    }
    Ok(h)
}

/// Time profile of the barrier modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeShape {
    Square,
    SineSquared,
    /// Gaussian centred at `τ/2`, truncated to `[0, τ]`.
    GaussianTruncated,
}

/// Scalar envelope `Ω(t)`, zero outside `[0, τ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PulseEnvelope<T> {
    pub shape: EnvelopeShape,
    pub amplitude: T,
    pub duration: T,
    /// Gaussian standard deviation as a fraction of the duration.
    #[serde(default = "default_gaussian_width")]
    pub gaussian_width: T,
}

fn default_gaussian_width<T: Real>() -> T {
    lit(1.0 / 6.0)
}

impl<T: Real> PulseEnvelope<T> {
    pub fn new(shape: EnvelopeShape, amplitude: T, duration: T) -> Self {
        Self {
            shape,
            amplitude,
            duration,
            gaussian_width: default_gaussian_width(),
        }
    }

    pub fn square(amplitude: T, duration: T) -> Self {
        Self::new(EnvelopeShape::Square, amplitude, duration)
    }

    /// Envelope of the given shape and duration whose area is `area`.
    pub fn with_area(shape: EnvelopeShape, area: T, duration: T) -> Result<Self> {
        let unit = Self::new(shape, T::one(), duration);
        unit.validate()?;
        Ok(Self::new(shape, area / unit.area(), duration))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > T::zero()) {
            return Err(Error::config(
                "duration",
                "pulse duration must be finite and positive",
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("amplitude", "pulse amplitude must be finite"));
        }
        if self.shape == EnvelopeShape::GaussianTruncated
            && !(self.gaussian_width.is_finite() && self.gaussian_width > T::zero())
        {
            return Err(Error::config(
                "gaussian_width",
                "gaussian width must be positive",
            ));
        }
        Ok(())
    }

    pub fn value(&self, t: T) -> T {
        if t < T::zero() || t > self.duration {
            return T::zero();
        }
        match self.shape {
            EnvelopeShape::Square => self.amplitude,
            EnvelopeShape::SineSquared => {
                let s = (T::pi() * t / self.duration).sin();
                self.amplitude * s * s
            }
            EnvelopeShape::GaussianTruncated => {
                let sigma = self.gaussian_width * self.duration;
                let x = (t - self.duration * lit(0.5)) / sigma;
                self.amplitude * (-(x * x) * lit(0.5)).exp()
            }
        }
    }

    /// `∫₀^τ Ω(t) dt` in closed form.
    pub fn area(&self) -> T {
        match self.shape {
            EnvelopeShape::Square => self.amplitude * self.duration,
            EnvelopeShape::SineSquared => self.amplitude * self.duration * lit(0.5),
            EnvelopeShape::GaussianTruncated => {
                let sigma = self.gaussian_width * self.duration;
                let half_width =
                    to_f64(self.duration / (sigma * lit(2.0 * std::f64::consts::SQRT_2)));
                let erf: T = lit(libm::erf(half_width));
                self.amplitude * sigma * (T::two_pi()).sqrt() * erf
            }
        }
    }
}

/// Polar angles of the Λ-system couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams<T> {
    /// Polar angle `θ ∈ [0, π]`.
    pub theta: T,
    /// Azimuth `φ ∈ [0, 2π)`.
    pub phi: T,
}

impl<T: Real> LambdaParams<T> {
    /// Validates `θ` and wraps `φ` into `[0, 2π)`.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        let p = Self {
            theta,
            phi: wrap_angle(phi),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let slack: T = lit(1e-12);
        if !self.theta.is_finite() || self.theta < -slack || self.theta > T::pi() + slack {
            return Err(Error::config("theta", "theta must lie in [0, pi]"));
        }
        if !self.phi.is_finite() {
            return Err(Error::config("phi", "phi must be finite"));
        }
        Ok(())
    }

    /// Time-independent couplings `(𝒥₁₂, 𝒥₂₃)` with
    /// `𝒥₁₂* = sin(θ/2)e^{iφ}` and `𝒥₂₃ = −cos(θ/2)`.
    pub fn couplings(&self) -> (Complex<T>, Complex<T>) {
        let half = self.theta * lit(0.5);
        (cis(-self.phi) * half.sin(), creal(-half.cos()))
    }

    /// Unit vector `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn axis(&self) -> [T; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }

    /// The gate `n·σ` this loop implements.
    pub fn target_gate(&self) -> CMatrix<T> {
        crate::linalg::n_dot_sigma(self.axis())
    }
}

pub(crate) fn wrap_angle<T: Real>(phi: T) -> T {
    let two_pi = T::two_pi();
    let mut w = phi % two_pi;
    if w < T::zero() {
        w += two_pi;
    }
    if w >= two_pi {
        w -= two_pi;
    }
    w
}

/// `H(t) = Ω(t)[sin(θ/2)e^{iφ}|a⟩⟨0| − cos(θ/2)|a⟩⟨1| + h.c.]` in the
/// ordered basis `(|0⟩, |a⟩, |1⟩)`.
pub fn build_lambda_hamiltonian<T: Real>(
    p: &LambdaParams<T>,
    env: &PulseEnvelope<T>,
    t: T,
) -> CMatrix<T> {
    lambda_hamiltonian_at(p, env.value(t))
}

/// Λ Hamiltonian at a given envelope value.
pub fn lambda_hamiltonian_at<T: Real>(p: &LambdaParams<T>, omega: T) -> CMatrix<T> {
    let (j12, j23) = p.couplings();
    let mut h = zeros(3, 3);
    // |a⟩⟨0| carries 𝒥₁₂*, |a⟩⟨1| carries 𝒥₂₃
    h[(1, 0)] = j12.conj() * omega;
    h[(0, 1)] = j12 * omega;
    h[(1, 2)] = j23 * omega;
    h[(2, 1)] = j23.conj() * omega;
    h
}

/// Parameters of the two-pulse entangling protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TwoQubitParams<T> {
    /// Qubit–qubit coupling `α`.
    pub alpha: T,
    /// Hopping scale `δ` multiplying the pulse amplitudes.
    pub delta: T,
    /// First pulse amplitude `Φ` (dimensionless).
    pub amp1: T,
    /// Second pulse amplitude `Φ̃`.
    pub amp2: T,
    /// Parity `n ∈ {0,1}` in `sin(ωτ) = (−1)^n`.
    pub n1: u8,
    /// Parity `ñ ∈ {0,1}` for the second pulse.
    pub n2: u8,
    /// Idle time `τ′ − τ ≥ 0` between the pulses.
    #[serde(default = "T::zero")]
    pub gap: T,
}

impl<T: Real> TwoQubitParams<T> {
    pub fn new(alpha: T, delta: T, amp1: T, amp2: T) -> Self {
        Self {
            alpha,
            delta,
            amp1,
            amp2,
            n1: 0,
            n2: 0,
            gap: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("amp1", self.amp1),
            ("amp2", self.amp2),
            ("gap", self.gap),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.n1 > 1 {
            return Err(Error::config("n1", "parity must be 0 or 1"));
        }
        if self.n2 > 1 {
            return Err(Error::config("n2", "parity must be 0 or 1"));
        }
        if self.gap < T::zero() {
            return Err(Error::config("gap", "gap must be non-negative"));
        }
        Ok(())
    }

    /// `ω = √((Φδ)² + α²)`.
    pub fn omega(&self) -> T {
        (self.amp1 * self.delta).hypot(self.alpha)
    }

    /// `ω̃ = √((Φ̃δ)² + α²)`.
    pub fn omega_tilde(&self) -> T {
        (self.amp2 * self.delta).hypot(self.alpha)
    }
}

/// `H = t₁₃⁽¹⁾ σx⊗I + t₁₃⁽²⁾ I⊗σx + α σy⊗σy` in `(|00⟩,|01⟩,|10⟩,|11⟩)`.
pub fn build_twoqubit_hamiltonian<T: Real>(
    q: &TwoQubitParams<T>,
    t13_1: T,
    t13_2: T,
) -> CMatrix<T> {
    let id = crate::linalg::identity::<T>(2);
    let (x, y) = (pauli_x::<T>(), pauli_y::<T>());
    kron(&x, &id) * creal(t13_1) + kron(&id, &x) * creal(t13_2) + kron(&y, &y) * creal(q.alpha)
}

/// `√(|𝒥₁₂|² + |𝒥₂₃|²)`, identically one.
pub fn coupling_norm<T: Real>(p: &LambdaParams<T>) -> T {
    let (a, b) = p.couplings();
    (a.norm_sqr() + b.norm_sqr()).sqrt()
}
