//! Physical drive/trap parameters and the time-dependent gate Hamiltonians.
//!
//! The interaction-picture Hamiltonian driven by the bichromatic beam is
//!
//! H(t)/ħ = [Ω_b(t) e^{−i(δt+ζ)} + Ω_r(t) e^{+i(δt+ζ)}] · D(iη e^{iνt}) ⊗ (σ₊⁽¹⁾+σ₊⁽²⁾)
//!          + h.c. + ½ [s(t)·δ_ac − Δ_global] · S_z
//!
//! with Ω_b = Ω(1+ξ), Ω_r = Ω(1−ξ), pulse envelope Ω_{b,r}(t) = Ω_{b,r}·env(t)
//! and intensity-scaled dipole Stark shift s(t) = env(t)².  The blue-detuned
//! component carries e^{−i(δt+ζ)}; for ξ > 0 the blue beam is the stronger
//! one.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{self, Axis};
use crate::{C64, COp, CVec};

/// Mean value of the Blackman window (its a₀ coefficient); the fraction of a
/// rectangular pulse area that one shaped slope retains.
pub const BLACKMAN_MEAN: f64 = 0.42;

/// All physical drive/trap parameters, angular frequencies in rad/s.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GateParams {
    /// Trap COM mode frequency ν.
    pub nu: f64,
    /// Detuning ε from the motional sidebands (sign carries direction).
    pub epsilon: f64,
    /// Lamb-Dicke factor η.
    pub eta: f64,
    /// Peak carrier Rabi frequency Ω.
    pub omega: f64,
    /// Beam imbalance ξ.
    pub xi: f64,
    /// Phase ζ of the amplitude modulation (rad).
    pub zeta: f64,
    /// Net dipole-induced AC-Stark shift at peak intensity (signed input).
    pub delta_ac: f64,
    /// Global laser detuning Δ from the unshifted carrier.
    pub delta_global: f64,
}

/// Quantities derived from [`GateParams`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Derived {
    /// δ = ν − ε, the drive detuning from the carrier.
    pub delta: f64,
    /// t_gate = 2π/|ε|.
    pub t_gate: f64,
    /// λ = η²Ω²/ε, the gate interaction strength.
    pub lambda: f64,
    /// χ = η²Ω²/ε².
    pub chi: f64,
    /// Ω_b = Ω(1+ξ).
    pub omega_b: f64,
    /// Ω_r = Ω(1−ξ).
    pub omega_r: f64,
}

impl GateParams {
    /// Parameters at the maximally entangling gate condition Ω = |ε|/(4η)
    /// with no imbalance, Stark shift or detuning.
    pub fn at_gate_condition(nu: f64, epsilon: f64, eta: f64) -> Self {
        Self {
            nu,
            epsilon,
            eta,
            omega: epsilon.abs() / (4.0 * eta),
            xi: 0.0,
            zeta: 0.0,
            delta_ac: 0.0,
            delta_global: 0.0,
        }
    }

    pub fn validated(self) -> Result<Self> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::InvalidParameter { name, reason }
        }
        if !(self.nu > 0.0) {
            return Err(bad("nu", format!("trap frequency must be > 0, got {}", self.nu)));
        }
        if self.epsilon == 0.0 {
            return Err(bad("epsilon", "sideband detuning must be nonzero".into()));
        }
        if self.epsilon.abs() >= self.nu {
            return Err(bad("epsilon", format!("|epsilon| = {} must be < nu = {}", self.epsilon.abs(), self.nu)));
        }
        if !(self.eta > 0.0) {
            return Err(bad("eta", format!("Lamb-Dicke factor must be > 0, got {}", self.eta)));
        }
        if !(self.omega >= 0.0) {
            return Err(bad("omega", format!("Rabi frequency must be >= 0, got {}", self.omega)));
        }
        if !(self.xi.abs() < 1.0) {
            return Err(bad("xi", format!("|xi| must be < 1, got {}", self.xi)));
        }
        for (name, v) in [
            ("nu", self.nu),
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("omega", self.omega),
            ("xi", self.xi),
            ("zeta", self.zeta),
            ("delta_ac", self.delta_ac),
            ("delta_global", self.delta_global),
        ] {
            if !v.is_finite() {
                return Err(bad("params", format!("{name} is not finite")));
            }
        }
        Ok(self)
    }

    pub fn derived(&self) -> Derived {
        Derived {
            delta: self.nu - self.epsilon,
            t_gate: TAU / self.epsilon.abs(),
            lambda: self.eta * self.eta * self.omega * self.omega / self.epsilon,
            chi: self.eta * self.eta * self.omega * self.omega / (self.epsilon * self.epsilon),
            omega_b: self.omega * (1.0 + self.xi),
            omega_r: self.omega * (1.0 - self.xi),
        }
    }
}

/// Beam imbalance ξ = (δη²/|ε|)(φ/π), φ = δ_ac·t_gate, chosen so that the
/// carrier light shift −8Ω²ξ/δ cancels the dipole-induced shift at the gate
/// condition Ω = |ε|/(4η).
pub fn stark_compensation_xi(p: &GateParams) -> f64 {
    let d = p.derived();
    let phase = p.delta_ac * d.t_gate;
    d.delta * p.eta * p.eta / p.epsilon.abs() * (phase / PI)
}

/// Light shift from non-resonant carrier coupling of the imbalanced beams,
/// δ_ac^(C) = 2(Ω_r² − Ω_b²)/δ = −8Ω²ξ/δ.
pub fn carrier_stark_shift(p: &GateParams) -> f64 {
    let d = p.derived();
    2.0 * (d.omega_r * d.omega_r - d.omega_b * d.omega_b) / d.delta
}

/// Fock-level-dependent shift from imbalanced sideband couplings,
/// δ^(SB) = (ε/2)·ξ·n.
pub fn sideband_stark_shift(p: &GateParams, n: usize) -> f64 {
    0.5 * p.epsilon * p.xi * n as f64
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EnvelopeKind {
    Rectangular,
    BlackmanSloped,
}

/// Rabi-frequency envelope in [0, 1] over the pulse window [0, t_pulse].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    pub t_pulse: f64,
    pub t_slope: f64,
}

impl PulseEnvelope {
    pub fn rectangular(t_pulse: f64) -> Self {
        Self {
            kind: EnvelopeKind::Rectangular,
            t_pulse,
            t_slope: 0.0,
        }
    }

    /// Blackman-sloped envelope with the equal-area convention: the plateau is
    /// held at 1 and the pulse is extended beyond `t_area` by the slope
    /// deficit 2(1 − 0.42)·t_slope, so ∫env dt = t_area.
    pub fn blackman_equal_area(t_area: f64, t_slope: f64) -> Result<Self> {
        Self {
            kind: EnvelopeKind::BlackmanSloped,
            t_pulse: t_area + 2.0 * (1.0 - BLACKMAN_MEAN) * t_slope,
            t_slope,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.t_pulse > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_pulse",
                reason: format!("must be > 0, got {}", self.t_pulse),
            });
        }
        if self.kind == EnvelopeKind::BlackmanSloped
            && (self.t_slope <= 0.0 || 2.0 * self.t_slope > self.t_pulse)
        {
            return Err(Error::InvalidParameter {
                name: "t_slope",
                reason: format!(
                    "need 0 < 2*t_slope <= t_pulse, got t_slope = {}, t_pulse = {}",
                    self.t_slope, self.t_pulse
                ),
            });
        }
        Ok(self)
    }

    /// Envelope value at time `t` inside the pulse window.
    pub fn value(&self, t: f64) -> Result<f64> {
        // tolerate floating-point overshoot at the window edges
        let slack = 1e-9 * self.t_pulse;
        if t < -slack || t > self.t_pulse + slack {
            return Err(Error::OutsidePulse {
                t,
                t_pulse: self.t_pulse,
            });
        }
        let t = t.clamp(0.0, self.t_pulse);
        match self.kind {
            EnvelopeKind::Rectangular => Ok(1.0),
            EnvelopeKind::BlackmanSloped => {
                let rise = |u: f64| 0.42 - 0.5 * (PI * u).cos() + 0.08 * (TAU * u).cos();
                if t < self.t_slope {
                    Ok(rise(t / self.t_slope))
                } else if t > self.t_pulse - self.t_slope {
                    Ok(rise((self.t_pulse - t) / self.t_slope))
                } else {
                    Ok(1.0)
                }
            }
        }
    }

    /// Integrated envelope area ∫₀^{t_pulse} env dt (closed form).
    pub fn area(&self) -> f64 {
        match self.kind {
            EnvelopeKind::Rectangular => self.t_pulse,
            EnvelopeKind::BlackmanSloped => {
                self.t_pulse - 2.0 * (1.0 - BLACKMAN_MEAN) * self.t_slope
            }
        }
    }
}

/// Stochastic imperfections for multi-gate experiments.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NoiseModel {
    /// Per-trial fractional Rabi-frequency fluctuation δΩ/Ω (quasi-static).
    pub coupling_rel_sigma: f64,
    /// Incoherent carrier-excitation probability per gate.
    pub carrier_error_per_gate: f64,
    /// RMS global detuning fluctuation (rad/s).
    pub detuning_rms: f64,
    /// COM-mode heating rate Γ_h (quanta/s).
    pub heating_rate: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            coupling_rel_sigma: 0.0,
            carrier_error_per_gate: 0.0,
            detuning_rms: 0.0,
            heating_rate: 0.0,
            seed: 0,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let ok = self.coupling_rel_sigma >= 0.0
            && (0.0..=1.0).contains(&self.carrier_error_per_gate)
            && self.detuning_rms >= 0.0
            && self.heating_rate >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter {
                name: "noise",
                reason: "rates must be non-negative and probabilities <= 1".into(),
            });
        }
        Ok(self)
    }
}

/// Matrix-free evaluator for the full Hamiltonian on a Fock window
/// [offset, offset + n_fock), in units of rad/s (ħ = 1).
pub struct HamiltonianOp {
    pub params: GateParams,
    pub env: PulseEnvelope,
    pub n_fock: usize,
    pub offset: usize,
    /// Per-ion relative coupling strengths (1, 1) unless studying imbalance.
    pub ion_scale: [f64; 2],
    d_eta: COp,
    d_eta_t: COp,
}

impl HamiltonianOp {
    pub fn new(params: GateParams, env: PulseEnvelope, n_fock: usize, offset: usize) -> Result<Self> {
        let params = params.validated()?;
        let env = env.validated()?;
        if n_fock < 2 {
            return Err(Error::InvalidParameter {
                name: "n_fock",
                reason: "need at least 2 Fock levels".into(),
            });
        }
        if 4 * n_fock > hilbert::MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: 4 * n_fock,
                max: hilbert::MAX_DIM,
            });
        }
        // D(η) on the window; the time dependence D(iη e^{iνt}) enters purely
        // through number-operator phases, e^{iθn̂} D(η) e^{−iθn̂}, θ = νt + π/2.
        let a = hilbert::lowering(n_fock, offset);
        let eta = C64::new(params.eta, 0.0);
        let gen = a.adjoint().map(|z| eta * z.conj()) - a.map(|z| eta.conj() * z);
        let d_eta = hilbert::expm_antihermitian(&gen)?;
        let d_eta_t = d_eta.transpose();
        Ok(Self {
            params,
            env,
            n_fock,
            offset,
            ion_scale: [1.0, 1.0],
            d_eta,
            d_eta_t,
        })
    }

    pub fn with_ion_scales(mut self, r1: f64, r2: f64) -> Self {
        self.ion_scale = [r1, r2];
        self
    }

    pub fn dim(&self) -> usize {
        4 * self.n_fock
    }

    fn drive_amplitude(&self, t: f64) -> Result<(f64, C64)> {
        let e = self.env.value(t)?;
        let d = self.params.derived();
        let phase = d.delta * t + self.params.zeta;
        let rot = C64::new(0.0, -phase).exp();
        // Ω_b e^{−i(δt+ζ)} + Ω_r e^{+i(δt+ζ)}, scaled by the envelope.
        let f = e * (d.omega_b * rot + d.omega_r * rot.conj());
        Ok((e, f))
    }

    /// out = H(t)·ψ without forming H.
    pub fn apply(&self, t: f64, psi: &CVec, out: &mut CVec) -> Result<()> {
        let n = self.n_fock;
        assert_eq!(psi.len(), 4 * n, "state dim mismatch");
        let (e, f) = self.drive_amplitude(t)?;
        let f1 = C64::new(self.ion_scale[0], 0.0) * f;
        let f2 = C64::new(self.ion_scale[1], 0.0) * f;

        let theta = self.params.nu * t + PI / 2.0;
        let phases: Vec<C64> = (0..n).map(|k| C64::new(0.0, theta * k as f64).exp()).collect();

        // Columns = qubit blocks; the composite layout makes each block
        // contiguous, so this is a zero-copy reinterpretation.
        let psi_m = DMatrix::from_column_slice(n, 4, psi.as_slice());

        // D(t)Ψ = P ∘ (D₀ · (P̄ ∘ Ψ)) and D†(t)Ψ = P ∘ (D₀ᵀ · (P̄ ∘ Ψ)).
        let mut scaled = psi_m.clone();
        for (k, ph) in phases.iter().enumerate() {
            let pc = ph.conj();
            for q in 0..4 {
                scaled[(k, q)] *= pc;
            }
        }
        let mut dpsi = &self.d_eta * &scaled;
        let mut dag = &self.d_eta_t * &scaled;
        for (k, ph) in phases.iter().enumerate() {
            for q in 0..4 {
                dpsi[(k, q)] *= ph;
                dag[(k, q)] *= ph;
            }
        }

        // σ₊⁽¹⁾ couples ↓↑→↑↑ and ↓↓→↑↓; σ₊⁽²⁾ couples ↑↓→↑↑ and ↓↓→↓↑.
        let stark = 0.5 * (e * e * self.params.delta_ac - self.params.delta_global);
        for k in 0..n {
            out[k] = f1 * dpsi[(k, 2)] + f2 * dpsi[(k, 1)] + 2.0 * stark * psi[k];
            out[n + k] = f1 * dpsi[(k, 3)] + f2.conj() * dag[(k, 0)];
            out[2 * n + k] = f2 * dpsi[(k, 3)] + f1.conj() * dag[(k, 0)];
            out[3 * n + k] = f1.conj() * dag[(k, 1)] + f2.conj() * dag[(k, 2)]
                - 2.0 * stark * psi[3 * n + k];
        }
        Ok(())
    }

    /// Undressing rotation for detection-equivalent sampling of shaped
    /// pulses.
    ///
    /// A population measurement at time t truncates the pulse there; a shaped
    /// pulse ends through its falling slope, which adiabatically removes the
    /// non-resonant carrier dressing exp(−i Σ_j F_j(t) σ_x⁽ʲ⁾) with
    /// F_j(t) = (2Ω_j env(t)/δ)·sin(δt+ζ).  Rectangular truncation is sudden
    /// and freezes the dressing in, so no rotation applies there.
    pub fn detection_rotation(&self, t: f64) -> Result<Option<COp>> {
        if self.env.kind == EnvelopeKind::Rectangular {
            return Ok(None);
        }
        let e = self.env.value(t)?;
        let d = self.params.derived();
        let wobble = (d.delta * t + self.params.zeta).sin();
        let single = |scale: f64| -> COp {
            let f = 2.0 * self.params.omega * scale * e / d.delta * wobble;
            // exp(+i F σ_x)
            let mut r = DMatrix::zeros(2, 2);
            r[(0, 0)] = C64::new(f.cos(), 0.0);
            r[(1, 1)] = C64::new(f.cos(), 0.0);
            r[(0, 1)] = C64::new(0.0, f.sin());
            r[(1, 0)] = C64::new(0.0, f.sin());
            r
        };
        Ok(Some(
            single(self.ion_scale[0]).kronecker(&single(self.ion_scale[1])),
        ))
    }

    /// Dense H(t); used by tests and by small closed-form consumers.
    pub fn matrix(&self, t: f64) -> Result<COp> {
        let n = self.n_fock;
        let (e, f) = self.drive_amplitude(t)?;
        let theta = self.params.nu * t + PI / 2.0;
        let phases: Vec<C64> = (0..n).map(|k| C64::new(0.0, theta * k as f64).exp()).collect();
        let mut d_t = self.d_eta.clone();
        for j in 0..n {
            for k in 0..n {
                d_t[(j, k)] *= phases[j] * phases[k].conj();
            }
        }
        let mut sp1 = DMatrix::zeros(4, 4); // σ₊ on ion 1, lifted
        sp1[(0, 2)] = C64::new(1.0, 0.0);
        sp1[(1, 3)] = C64::new(1.0, 0.0);
        let mut sp2 = DMatrix::zeros(4, 4); // σ₊ on ion 2, lifted
        sp2[(0, 1)] = C64::new(1.0, 0.0);
        sp2[(2, 3)] = C64::new(1.0, 0.0);
        let r1 = C64::new(self.ion_scale[0], 0.0);
        let r2 = C64::new(self.ion_scale[1], 0.0);
        let coupling = hilbert::kron(&(sp1.map(|z| f * r1 * z) + sp2.map(|z| f * r2 * z)), &d_t)?;
        let stark = 0.5 * (e * e * self.params.delta_ac - self.params.delta_global);
        let sz = hilbert::kron(
            &hilbert::collective_spin(Axis::Z),
            &hilbert::identity(n),
        )?;
        Ok(&coupling + coupling.adjoint() + sz.map(|z| stark * z))
    }
}

/// Spec-shaped free function over [`HamiltonianOp`].
pub fn hamiltonian_full(
    p: &GateParams,
    env: &PulseEnvelope,
    t: f64,
    n_fock: usize,
    window_offset: usize,
) -> Result<COp> {
    HamiltonianOp::new(*p, *env, n_fock, window_offset)?.matrix(t)
}

/// Spec-shaped accessor for the envelope.
pub fn envelope_value(env: &PulseEnvelope, t: f64) -> Result<f64> {
    env.value(t)
}

/// Spec-shaped accessor for derived parameters.
pub fn derived_params(p: &GateParams) -> Derived {
    p.derived()
}
