//! Numerical solution of the time-dependent Schrödinger equation for the full
//! gate Hamiltonian, iħ dψ/dt = H(t)ψ.
//!
//! The stepper is an embedded Dormand-Prince 5(4) pair with PI step-size
//! control and FSAL.  The maximum step is capped at a twentieth of the trap
//! period so the D(iη e^{iνt}) oscillation stays resolved; the Hamiltonian is
//! evaluated fresh at every stage point.
//!
//! Thermal ensembles evolve each initial Fock level |↓↓⟩|n⟩ in its own window
//! [max(0, n−w), n+w] and weight-average the sampled populations; the per-n
//! runs are independent and execute in parallel with an order-fixed reduction,
//! so results do not depend on the schedule.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gate_model::{GateParams, HamiltonianOp, PulseEnvelope};
use crate::hilbert::{DOWN_DOWN, StateVector};
use crate::propagator::alpha_max;
use crate::thermal::{ThermalSpec, thermal_weights};
use crate::{C64, COp, CVec};

/// One sampled point of the binned qubit populations.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Result of a single state-vector evolution.
#[derive(Clone, Debug)]
pub struct EvolveReport {
    pub final_state: StateVector,
    pub samples: Vec<Sample>,
    /// max |‖ψ‖ − 1| seen over the run.
    pub norm_drift: f64,
    pub steps_taken: usize,
}

/// Result of a thermal-ensemble evolution (weight-averaged populations).
#[derive(Clone, Debug)]
pub struct ThermalReport {
    pub samples: Vec<Sample>,
    /// Ensemble-averaged reduced qubit density matrix at the final time.
    pub final_rho_qubit: COp,
    pub max_norm_drift: f64,
    /// Number of initial Fock levels included.
    pub levels: usize,
}

fn populations_of(psi: &CVec, n_fock: usize) -> (f64, f64, f64) {
    let block = |q: usize| -> f64 {
        (0..n_fock).map(|k| psi[q * n_fock + k].norm_sqr()).sum()
    };
    let p0 = block(0);
    let p1 = block(1) + block(2);
    let p2 = block(3);
    (p0, p1, p2)
}

/// Detection-equivalent populations at time `t`: for shaped pulses the
/// carrier dressing is removed (see [`HamiltonianOp::detection_rotation`]);
/// rectangular pulses sample the state as is.
fn sample_populations(h_op: &HamiltonianOp, t: f64, psi: &CVec) -> Result<(f64, f64, f64)> {
    let n = h_op.n_fock;
    match h_op.detection_rotation(t)? {
        None => Ok(populations_of(psi, n)),
        Some(r) => {
            let mut pops = [0.0; 4];
            for (q, pop) in pops.iter_mut().enumerate() {
                for k in 0..n {
                    let mut amp = C64::new(0.0, 0.0);
                    for q2 in 0..4 {
                        amp += r[(q, q2)] * psi[q2 * n + k];
                    }
                    *pop += amp.norm_sqr();
                }
            }
            Ok((pops[0], pops[1] + pops[2], pops[3]))
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    h_op: &'a HamiltonianOp,
    k: Vec<CVec>,
    y_stage: CVec,
    scratch: CVec,
    tol: f64,
    err_prev: f64,
}

impl<'a> Stepper<'a> {
    fn new(h_op: &'a HamiltonianOp, dim: usize, tol: f64) -> Self {
        Self {
            h_op,
            k: (0..7).map(|_| DVector::zeros(dim)).collect(),
            y_stage: DVector::zeros(dim),
            scratch: DVector::zeros(dim),
            tol,
            err_prev: 1.0,
        }
    }

    /// dψ/dt = −i H(t) ψ
    fn rhs(&mut self, t: f64, y: &CVec, slot: usize) -> Result<()> {
        self.h_op.apply(t, y, &mut self.scratch)?;
        let k = &mut self.k[slot];
        for (o, s) in k.iter_mut().zip(self.scratch.iter()) {
            *o = C64::new(0.0, -1.0) * s;
        }
        Ok(())
    }

    /// One attempted step; returns (error_norm, y_new).  k[0] must hold the
    /// RHS at (t, y).
    fn try_step(&mut self, t: f64, y: &CVec, h: f64) -> Result<(f64, CVec)> {
        for stage in 1..=6 {
            self.y_stage.copy_from(y);
            for (j, kj) in self.k[..stage].iter().enumerate() {
                let a = A[stage - 1][j];
                if a != 0.0 {
                    self.y_stage.axpy(C64::new(h * a, 0.0), kj, C64::new(1.0, 0.0));
                }
            }
            let y_stage = std::mem::replace(&mut self.y_stage, DVector::zeros(0));
            self.rhs(t + C[stage] * h, &y_stage, stage)?;
            self.y_stage = y_stage;
        }
        let mut y_new = y.clone();
        for (j, kj) in self.k.iter().enumerate() {
            if B5[j] != 0.0 {
                y_new.axpy(C64::new(h * B5[j], 0.0), kj, C64::new(1.0, 0.0));
            }
        }
        // scaled RMS error over components
        let mut acc = 0.0;
        let n = y.len();
        for i in 0..n {
            let mut e = C64::new(0.0, 0.0);
            for (j, kj) in self.k.iter().enumerate() {
                let d = B5[j] - B4[j];
                if d != 0.0 {
                    e += C64::new(h * d, 0.0) * kj[i];
                }
            }
            let scale = self.tol * (1.0 + y[i].norm().max(y_new[i].norm()));
            let r = e.norm() / scale;
            acc += r * r;
        }
        Ok(((acc / n as f64).sqrt(), y_new))
    }
}

/// Integrate ψ under `h_op` over `t_span`, sampling binned populations every
/// `sample_every` (plus both endpoints).
pub fn evolve(
    h_op: &HamiltonianOp,
    psi0: &StateVector,
    t_span: (f64, f64),
    tol: f64,
    sample_every: f64,
) -> Result<EvolveReport> {
    let times: Vec<f64> = if sample_every > 0.0 {
        let mut ts = Vec::new();
        let mut t = t_span.0 + sample_every;
        while t < t_span.1 - 1e-18 {
            ts.push(t);
            t += sample_every;
        }
        ts
    } else {
        Vec::new()
    };
    evolve_sampling(h_op, psi0, t_span, tol, &times)
}

/// Integrate with an explicit list of interior sample times (strictly
/// increasing, inside `t_span`); both endpoints are always sampled.
pub fn evolve_sampling(
    h_op: &HamiltonianOp,
    psi0: &StateVector,
    t_span: (f64, f64),
    tol: f64,
    sample_times: &[f64],
) -> Result<EvolveReport> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must lie in [1e-12, 1e-6], got {tol}"),
        });
    }
    // matches the state-vector norm invariant; chained evolutions carry the
    // previous run's drift
    if (psi0.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput("psi0 must be normalized".into()));
    }
    if psi0.n_fock != h_op.n_fock || psi0.fock_offset != h_op.offset {
        return Err(Error::DimensionMismatch(
            "state window does not match Hamiltonian window".into(),
        ));
    }
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter {
            name: "t_span",
            reason: format!("need t1 >= t0, got ({t0}, {t1})"),
        });
    }
    if sample_times
        .iter()
        .any(|&t| t <= t0 || t >= t1)
        || sample_times.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::InvalidParameter {
            name: "sample_times",
            reason: "must be strictly increasing and lie strictly inside t_span".into(),
        });
    }
    let n_fock = h_op.n_fock;
    let dim = 4 * n_fock;
    let h_max = (TAU / h_op.params.nu) / 20.0;
    let h_min = 1e-4 / h_op.params.nu;

    let mut stepper = Stepper::new(h_op, dim, tol);
    let mut y = psi0.amps.clone();
    let mut t = t0;
    let mut h = h_max.min((t1 - t0).max(h_min));
    let mut steps = 0usize;
    let mut norm_drift: f64 = 0.0;

    let mut samples = Vec::new();
    let push_sample = |samples: &mut Vec<Sample>, t: f64, y: &CVec| -> Result<()> {
        let (p0, p1, p2) = sample_populations(h_op, t, y)?;
        samples.push(Sample { t, p0, p1, p2 });
        Ok(())
    };
    push_sample(&mut samples, t0, &y)?;
    let mut sample_idx = 0usize;

    stepper.rhs(t, &y, 0)?;
    if t1 > t0 {
        loop {
            let mut target = t1;
            let mut sampling = false;
            if let Some(&ts) = sample_times.get(sample_idx) {
                if ts < target - 1e-18 {
                    target = ts;
                    sampling = true;
                }
            }
            let clipped = target - t <= h;
            let h_try = h.min(target - t);
            let (err, y_new) = stepper.try_step(t, &y, h_try)?;
            let err = err.max(1e-12);
            if err <= 1.0 {
                t += h_try;
                y = y_new;
                steps += 1;
                norm_drift = norm_drift.max((y.norm() - 1.0).abs());
                if norm_drift > 1e-6 {
                    return Err(Error::Integration(format!(
                        "norm drift {norm_drift:.3e} exceeded 1e-6 at t = {t:.3e}"
                    )));
                }
                // FSAL: stage 7 of the accepted step is the RHS at (t, y).
                stepper.k.swap(0, 6);
                if sampling && (t - target).abs() < 1e-15 + 1e-9 * (t1 - t0) {
                    push_sample(&mut samples, t, &y)?;
                    sample_idx += 1;
                }
                if t >= t1 - 1e-18 {
                    break;
                }
                if !clipped {
                    // PI controller (Gustafsson); steps clipped to land on a
                    // sample boundary must not feed back into the controller.
                    let fac = 0.9 * err.powf(-0.7 / 5.0) * stepper.err_prev.powf(0.4 / 5.0);
                    stepper.err_prev = err;
                    h = (h_try * fac.clamp(0.2, 5.0)).min(h_max);
                }
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h = h_try * fac;
                if h < h_min {
                    return Err(Error::Integration(format!(
                        "step size underflow (h = {h:.3e} < {h_min:.3e}) at t = {t:.3e}: \
                         problem too stiff for the requested tolerance"
                    )));
                }
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(t1) {
        push_sample(&mut samples, t1, &y)?;
    }
    let final_state = StateVector {
        n_fock,
        fock_offset: h_op.offset,
        amps: y,
    };
    final_state.check_norm()?;
    Ok(EvolveReport {
        final_state,
        samples,
        norm_drift,
        steps_taken: steps,
    })
}

/// Convenience: evolve `psi0` through one full pulse of `env`.
pub fn evolve_gate(
    p: &GateParams,
    env: &PulseEnvelope,
    psi0: &StateVector,
    tol: f64,
    sample_every: f64,
) -> Result<EvolveReport> {
    let h_op = HamiltonianOp::new(*p, *env, psi0.n_fock, psi0.fock_offset)?;
    evolve(&h_op, psi0, (0.0, env.t_pulse), tol, sample_every)
}

/// Evolve a thermal ensemble of initial states |↓↓⟩|n⟩ and weight-average the
/// binned populations.
pub fn evolve_thermal(
    p: &GateParams,
    env: &PulseEnvelope,
    spec: &ThermalSpec,
    t_span: (f64, f64),
    tol: f64,
    sample_every: f64,
) -> Result<ThermalReport> {
    let times: Vec<f64> = if sample_every > 0.0 {
        let mut ts = Vec::new();
        let mut t = t_span.0 + sample_every;
        while t < t_span.1 - 1e-18 {
            ts.push(t);
            t += sample_every;
        }
        ts
    } else {
        Vec::new()
    };
    evolve_thermal_sampling(p, env, spec, t_span, tol, &times)
}

/// [`evolve_thermal`] with an explicit list of interior sample times.
pub fn evolve_thermal_sampling(
    p: &GateParams,
    env: &PulseEnvelope,
    spec: &ThermalSpec,
    t_span: (f64, f64),
    tol: f64,
    sample_times: &[f64],
) -> Result<ThermalReport> {
    let weights = thermal_weights(spec)?;
    // guard: the window must hold the displacement reach |2α| plus 3 levels
    let required = (2.0 * alpha_max(p)).ceil() as usize + 3;
    if spec.window < required {
        return Err(Error::WindowTooSmall(format!(
            "half-width {} < required {} at |2α| = {:.3}",
            spec.window,
            required,
            2.0 * alpha_max(p)
        )));
    }

    let runs: Vec<Result<(f64, EvolveReport)>> = weights
        .par_iter()
        .map(|&(n, w)| {
            let offset = n.saturating_sub(spec.window);
            let n_fock = n + spec.window - offset + 1;
            let psi0 = StateVector::basis(DOWN_DOWN, n, n_fock, offset)?;
            let h_op = HamiltonianOp::new(*p, *env, n_fock, offset)?;
            let rep = evolve_sampling(&h_op, &psi0, t_span, tol, sample_times)?;
            Ok((w, rep))
        })
        .collect();

    // order-fixed reduction (sorted by n already)
    let mut samples: Vec<Sample> = Vec::new();
    let mut rho = DMatrix::zeros(4, 4);
    let mut max_drift: f64 = 0.0;
    let mut levels = 0usize;
    for run in runs {
        let (w, rep) = run?;
        if samples.is_empty() {
            samples = rep
                .samples
                .iter()
                .map(|s| Sample {
                    t: s.t,
                    p0: 0.0,
                    p1: 0.0,
                    p2: 0.0,
                })
                .collect();
        }
        if rep.samples.len() != samples.len() {
            return Err(Error::Integration(
                "ensemble members produced inconsistent sample grids".into(),
            ));
        }
        for (acc, s) in samples.iter_mut().zip(rep.samples.iter()) {
            acc.p0 += w * s.p0;
            acc.p1 += w * s.p1;
            acc.p2 += w * s.p2;
        }
        rho += rep.final_state.rho_qubit().map(|z| C64::new(w, 0.0) * z);
        max_drift = max_drift.max(rep.norm_drift);
        levels += 1;
    }
    Ok(ThermalReport {
        samples,
        final_rho_qubit: rho,
        max_norm_drift: max_drift,
        levels,
    })
}
