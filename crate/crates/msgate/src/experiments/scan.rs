//! Parameter scans and the Monte-Carlo multi-gate experiment.
//!
//! Scan rows are reproducible byte-for-byte: every stochastic element draws
//! from a stream seeded by (seed, point index), so parallel and serial runs
//! agree exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gate_model::{GateParams, HamiltonianOp, NoiseModel, PulseEnvelope};
use crate::hilbert::{DOWN_DOWN, StateVector};
use crate::integrator::{evolve, evolve_thermal};
use crate::propagator::{analytic_factors, qubit_gate_ms};
use crate::thermal::ThermalSpec;
use crate::{C64, COp};

use super::fit::{FitResult, fit_gaussian_decay};
use super::{
    bell_coherence, bell_fidelity_of_rho, ideal_gate_target, populations_of_rho, rho_down_down,
    state_fidelity,
};

/// Deterministic per-point RNG stream derived from (seed, index).
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // splitmix64 mix so neighboring indices decorrelate
    let mut z = seed ^ (index.wrapping_add(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Initial motional state selector for scans and single runs.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Motional {
    Fock(usize),
    Thermal(ThermalSpec),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ScanVariable {
    /// Global laser detuning (rad/s grid).
    GlobalDetuning,
    /// Analysis-pulse phase (rad grid).
    AnalysisPhase,
    /// Waiting time between two gates (seconds grid).
    WaitTime,
    /// Number of consecutive noise-free gates (integer-valued grid).
    GateCount,
    /// Sample times of a single evolution (seconds grid, uniform).
    Time,
}

#[derive(Clone, Debug)]
pub struct ScanSpec {
    pub variable: ScanVariable,
    pub grid: Vec<f64>,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl ScanSpec {
    pub fn validated(self) -> Result<Self> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "must be non-empty".into(),
            });
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "must be strictly monotone increasing".into(),
            });
        }
        Ok(self)
    }
}

/// One scan record; `parity` and `fidelity` are filled where the scan kind
/// defines them.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub value: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub parity: Option<f64>,
    pub fidelity: Option<f64>,
}

fn fock_space_for(p: &GateParams, n: usize) -> usize {
    // displacement reach |2α|√(2n+1)-ish above the initial level, plus margin
    let beta = 2.0 * crate::propagator::alpha_max(p);
    n + (2.0 * beta * ((n + 1) as f64).sqrt() + beta * beta).ceil() as usize + 6
}

fn final_rho(
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<COp> {
    match motional {
        Motional::Fock(n) => {
            let n_fock = fock_space_for(p, *n);
            let psi0 = StateVector::basis(DOWN_DOWN, *n, n_fock, 0)?;
            let h_op = HamiltonianOp::new(*p, *env, n_fock, 0)?;
            let rep = evolve(&h_op, &psi0, (0.0, env.t_pulse), tol, 0.0)?;
            Ok(rep.final_state.rho_qubit())
        }
        Motional::Thermal(spec) => {
            let rep = evolve_thermal(p, env, spec, (0.0, env.t_pulse), tol, 0.0)?;
            Ok(rep.final_rho_qubit)
        }
    }
}

/// Multinomial resampling of (p0, p1, p2) with `shots` detection events.
fn resample_populations(
    probs: (f64, f64, f64),
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, f64) {
    let (p0, p1, p2) = probs;
    let total = (p0 + p1 + p2).max(1e-300);
    let q0 = (p0 / total).clamp(0.0, 1.0);
    let k0 = Binomial::new(shots, q0).map(|d| d.sample(rng)).unwrap_or(0);
    let rest = shots - k0;
    let q1 = if 1.0 - q0 > 1e-12 {
        ((p1 / total) / (1.0 - q0)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let k1 = Binomial::new(rest, q1).map(|d| d.sample(rng)).unwrap_or(0);
    let k2 = rest - k1;
    let s = shots as f64;
    (k0 as f64 / s, k1 as f64 / s, k2 as f64 / s)
}

/// Execute a parameter scan.  Integration failures at any grid point abort
/// the scan with the offending value in the error.
pub fn run_scan(
    spec: &ScanSpec,
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let spec = spec.clone().validated()?;
    match spec.variable {
        ScanVariable::GlobalDetuning => scan_detuning(&spec, p, env, motional, tol),
        ScanVariable::AnalysisPhase => scan_parity(&spec, p, env, motional, tol),
        ScanVariable::WaitTime => scan_wait(&spec, p, env, motional, tol),
        ScanVariable::GateCount => scan_gate_count(&spec, p),
        ScanVariable::Time => scan_time(&spec, p, env, motional, tol),
    }
}

fn annotate(e: Error, what: &str, v: f64) -> Error {
    Error::Integration(format!("{what} = {v:.6e}: {e}"))
}

fn scan_detuning(
    spec: &ScanSpec,
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let rows: Vec<Result<ScanRow>> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &detuning)| {
            let mut pk = *p;
            pk.delta_global = detuning;
            let rho = final_rho(&pk, env, motional, tol)
                .map_err(|e| annotate(e, "detuning", detuning))?;
            let mut pops = populations_of_rho(&rho);
            if let Some(shots) = spec.shots {
                let mut rng = stream_rng(spec.seed, i as u64);
                pops = resample_populations(pops, shots, &mut rng);
            }
            Ok(ScanRow {
                value: detuning,
                p0: pops.0,
                p1: pops.1,
                p2: pops.2,
                parity: None,
                fidelity: Some(bell_fidelity_of_rho(&rho)),
            })
        })
        .collect();
    rows.into_iter().collect()
}

fn scan_parity(
    spec: &ScanSpec,
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let rho = final_rho(p, env, motional, tol)?;
    let rows = spec
        .grid
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let u = super::carrier_pulse(std::f64::consts::FRAC_PI_2, phi);
            let rot = &u * &rho * u.adjoint();
            let mut pops = populations_of_rho(&rot);
            if let Some(shots) = spec.shots {
                let mut rng = stream_rng(spec.seed, i as u64);
                pops = resample_populations(pops, shots, &mut rng);
            }
            ScanRow {
                value: phi,
                p0: pops.0,
                p1: pops.1,
                p2: pops.2,
                parity: Some(pops.0 + pops.2 - pops.1),
                fidelity: None,
            }
        })
        .collect();
    Ok(rows)
}

fn scan_wait(
    spec: &ScanSpec,
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let n = match motional {
        Motional::Fock(n) => *n,
        Motional::Thermal(_) => {
            return Err(Error::InvalidInput(
                "wait-time scans support Fock initial states only".into(),
            ));
        }
    };
    let n_fock = fock_space_for(p, n);
    let h_op = HamiltonianOp::new(*p, *env, n_fock, 0)?;
    let psi0 = StateVector::basis(DOWN_DOWN, n, n_fock, 0)?;
    let after_first = evolve(&h_op, &psi0, (0.0, env.t_pulse), tol, 0.0)?.final_state;

    let rows: Vec<Result<ScanRow>> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, &tau)| {
            // free evolution in the laser frame: H = −½ Δ_global S_z
            let mut waited = after_first.clone();
            let sz = [2.0, 0.0, 0.0, -2.0];
            for q in 0..4 {
                let phase = C64::new(0.0, 0.5 * p.delta_global * sz[q] * tau).exp();
                for k in 0..n_fock {
                    waited.amps[q * n_fock + k] *= phase;
                }
            }
            let rep = evolve(&h_op, &waited, (0.0, env.t_pulse), tol, 0.0)
                .map_err(|e| annotate(e, "wait_time", tau))?;
            let rho = rep.final_state.rho_qubit();
            let mut pops = populations_of_rho(&rho);
            if let Some(shots) = spec.shots {
                let mut rng = stream_rng(spec.seed, i as u64);
                pops = resample_populations(pops, shots, &mut rng);
            }
            Ok(ScanRow {
                value: tau,
                p0: pops.0,
                p1: pops.1,
                p2: pops.2,
                parity: None,
                fidelity: None,
            })
        })
        .collect();
    rows.into_iter().collect()
}

fn scan_gate_count(spec: &ScanSpec, p: &GateParams) -> Result<Vec<ScanRow>> {
    let gamma = analytic_factors(p, p.derived().t_gate).gamma;
    let rows = spec
        .grid
        .iter()
        .map(|&v| {
            let n = v.round() as usize;
            let u = qubit_gate_ms(n as f64 * gamma);
            let rho0 = rho_down_down();
            let rho = &u * rho0 * u.adjoint();
            let (p0, p1, p2) = populations_of_rho(&rho);
            let target = ideal_gate_target(p, n);
            ScanRow {
                value: n as f64,
                p0,
                p1,
                p2,
                parity: Some(2.0 * bell_coherence(&rho).norm()),
                fidelity: Some(state_fidelity(&rho, &target)),
            }
        })
        .collect();
    Ok(rows)
}

fn scan_time(
    spec: &ScanSpec,
    p: &GateParams,
    env: &PulseEnvelope,
    motional: &Motional,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    let dt = if spec.grid.len() > 1 {
        spec.grid[1] - spec.grid[0]
    } else {
        spec.grid[0].max(1e-9)
    };
    let uniform = spec
        .grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() < 1e-9 * dt);
    if !uniform {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "time scans require a uniform grid".into(),
        });
    }
    let t_end = *spec.grid.last().unwrap();
    if t_end > env.t_pulse * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!(
                "final sample {t_end:.3e} s lies beyond the pulse ({:.3e} s)",
                env.t_pulse
            ),
        });
    }
    let samples = match motional {
        Motional::Fock(n) => {
            let n_fock = fock_space_for(p, *n);
            let psi0 = StateVector::basis(DOWN_DOWN, *n, n_fock, 0)?;
            let h_op = HamiltonianOp::new(*p, *env, n_fock, 0)?;
            evolve(&h_op, &psi0, (0.0, t_end), tol, dt)?.samples
        }
        Motional::Thermal(spec_t) => {
            evolve_thermal(p, env, spec_t, (0.0, t_end), tol, dt)?.samples
        }
    };
    let rows = spec
        .grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            // nearest sample; the integrator lands on the sampling grid exactly
            let s = samples
                .iter()
                .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
                .unwrap();
            let mut pops = (s.p0, s.p1, s.p2);
            if let Some(shots) = spec.shots {
                let mut rng = stream_rng(spec.seed, i as u64);
                pops = resample_populations(pops, shots, &mut rng);
            }
            ScanRow {
                value: t,
                p0: pops.0,
                p1: pops.1,
                p2: pops.2,
                parity: None,
                fidelity: None,
            }
        })
        .collect();
    Ok(rows)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MultiGateRow {
    pub n_gates: usize,
    pub fidelity: f64,
    pub parity_amplitude: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Clone, Debug)]
pub struct MultiGateResult {
    pub rows: Vec<MultiGateRow>,
    /// Gaussian decay fit of the parity amplitudes over the odd gate counts;
    /// absent when fewer than four odd counts were run.
    pub fit: Option<FitResult>,
}

/// Monte-Carlo concatenation of `n_gates` gate pulses.
///
/// Each trial draws one quasi-static Rabi-frequency offset g (Gaussian with
/// relative sigma `noise.coupling_rel_sigma`, truncated at 4σ), which scales
/// the per-gate phase to γ(1+g)²; the phase-space loop still closes at t_gate
/// for any Ω, so each calibrated pulse acts on the qubits alone.  Incoherent
/// carrier excitation admixes the fully mixed qubit state with weight
/// `noise.carrier_error_per_gate` after every pulse.
pub fn multi_gate(
    n_gates: usize,
    p: &GateParams,
    noise: &NoiseModel,
    trials: usize,
) -> Result<MultiGateResult> {
    if n_gates < 1 || trials < 1 {
        return Err(Error::InvalidParameter {
            name: "multi_gate",
            reason: "need n_gates >= 1 and trials >= 1".into(),
        });
    }
    let noise = noise.validated()?;
    let gamma = analytic_factors(p, p.derived().t_gate).gamma;
    let w = noise.carrier_error_per_gate;
    let mixed = crate::hilbert::identity(4).map(|z| z * C64::new(0.25, 0.0));

    let mut mean: Vec<COp> = (0..n_gates)
        .map(|_| nalgebra::DMatrix::zeros(4, 4))
        .collect();
    let normal = Normal::new(0.0, noise.coupling_rel_sigma.max(1e-300)).unwrap();
    for trial in 0..trials {
        let mut rng = stream_rng(noise.seed, trial as u64);
        let g = if noise.coupling_rel_sigma > 0.0 {
            loop {
                let g = normal.sample(&mut rng);
                if g.abs() <= 4.0 * noise.coupling_rel_sigma {
                    break g;
                }
            }
        } else {
            0.0
        };
        let u = qubit_gate_ms(gamma * (1.0 + g) * (1.0 + g));
        let mut rho = rho_down_down();
        for stage in 0..n_gates {
            rho = &u * rho * u.adjoint();
            if w > 0.0 {
                rho = rho.map(|z| C64::new(1.0 - w, 0.0) * z)
                    + mixed.map(|z| C64::new(w, 0.0) * z);
            }
            mean[stage] += &rho;
        }
    }
    let inv = C64::new(1.0 / trials as f64, 0.0);
    let rows: Vec<MultiGateRow> = mean
        .iter()
        .enumerate()
        .map(|(stage, acc)| {
            let rho = acc.map(|z| inv * z);
            let n = stage + 1;
            let (p0, p1, p2) = populations_of_rho(&rho);
            let target = ideal_gate_target(p, n);
            MultiGateRow {
                n_gates: n,
                fidelity: state_fidelity(&rho, &target),
                parity_amplitude: 2.0 * bell_coherence(&rho).norm(),
                p0,
                p1,
                p2,
            }
        })
        .collect();
    let odd: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.n_gates % 2 == 1)
        .map(|r| (r.n_gates as f64, r.parity_amplitude, r.p0 + r.p2))
        .collect();
    let fit = if odd.len() >= 4 {
        Some(fit_gaussian_decay(&odd)?)
    } else {
        None
    };
    Ok(MultiGateResult { rows, fit })
}
