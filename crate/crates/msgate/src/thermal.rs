//! Closed-form observables for ions in a thermal state of motion.
//!
//! For a thermal mode, ρ_M = Σ p_n|n⟩⟨n| with p_n = (n̄/(n̄+1))ⁿ/(n̄+1), the
//! diagonal displacement matrix elements sum to the Laguerre generating
//! function, Σ p_n⟨n|D(α)|n⟩ = e^{−|α|²(n̄+1/2)}.  Together with the S_y
//! eigenprojector decomposition this gives closed expressions for any
//! qubit-space expectation value under the gate propagator, and in particular
//! for the populations starting from |↓↓⟩:
//!
//!   p2 = (3 + E₁₆ + 4 cos(4γ) E₄)/8,
//!   p1 = (1 − E₁₆)/4,
//!   p0 = (3 + E₁₆ − 4 cos(4γ) E₄)/8,      E_k = e^{−k|α|²(n̄+1/2)}.
//!
//! These forms assume a rectangular drive (α, γ of the rectangular-pulse
//! propagator).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gate_model::GateParams;
use crate::hilbert::{self, Axis, DOWN_DOWN};
use crate::propagator::{analytic_factors, exp_i_phi_spin_squared};
use crate::{C64, COp};

/// Thermal ensemble description.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ThermalSpec {
    /// Mean phonon number n̄ ≥ 0.
    pub nbar: f64,
    /// Probability tail bound for the per-level expansion.
    pub weight_cutoff: f64,
    /// Half-width of the per-level Fock window for numeric ensembles.
    pub window: usize,
}

impl ThermalSpec {
    /// Defaults: tail cutoff 1e-4 and half-width 24.  The window is sized so
    /// that growing it by 50% moves ensemble populations by less than 1e-4
    /// (the gate loop displaces each |n⟩ branch by up to |2α|, with a number
    /// spread ≈ |2α|·√(2n+1) to contain).
    pub fn new(nbar: f64) -> Self {
        Self {
            nbar,
            weight_cutoff: 1e-4,
            window: 24,
        }
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.nbar >= 0.0) || !self.nbar.is_finite() {
            return Err(Error::InvalidParameter {
                name: "nbar",
                reason: format!("mean phonon number must be >= 0, got {}", self.nbar),
            });
        }
        if !(0.0..1.0).contains(&self.weight_cutoff) {
            return Err(Error::InvalidParameter {
                name: "weight_cutoff",
                reason: format!("must lie in [0, 1), got {}", self.weight_cutoff),
            });
        }
        if self.window < 4 {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!("half-width must be >= 4, got {}", self.window),
            });
        }
        Ok(self)
    }
}

/// Geometric weights (n, p_n) up to cumulative weight 1 − cutoff, renormalized
/// over the included levels.
pub fn thermal_weights(spec: &ThermalSpec) -> Result<Vec<(usize, f64)>> {
    let spec = spec.validated()?;
    if spec.nbar == 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    let ratio = spec.nbar / (spec.nbar + 1.0);
    let mut weights = Vec::new();
    let mut cum = 0.0;
    let mut p = 1.0 / (spec.nbar + 1.0);
    let mut n = 0usize;
    loop {
        weights.push((n, p));
        cum += p;
        if cum >= 1.0 - spec.weight_cutoff {
            break;
        }
        n += 1;
        p *= ratio;
    }
    for w in &mut weights {
        w.1 /= cum;
    }
    Ok(weights)
}

/// Thermal average of the diagonal displacement element,
/// Σ p_n ⟨n|D(α)|n⟩ = e^{−|α|²(n̄+1/2)}.
pub fn thermal_displacement_factor(alpha: C64, nbar: f64) -> f64 {
    (-alpha.norm_sqr() * (nbar + 0.5)).exp()
}

/// Closed-form populations (p2, p1, p0) at time `t` for ions starting in
/// |↓↓⟩ with a thermal mode of mean phonon number n̄.
pub fn populations_thermal(p: &GateParams, nbar: f64, t: f64) -> (f64, f64, f64) {
    let f = analytic_factors(p, t);
    let a2 = f.alpha.norm_sqr() * (nbar + 0.5);
    let e4 = (-4.0 * a2).exp();
    let e16 = (-16.0 * a2).exp();
    let c4g = (4.0 * f.gamma).cos();
    let p2 = (3.0 + e16 + 4.0 * c4g * e4) / 8.0;
    let p1 = (1.0 - e16) / 4.0;
    let p0 = (3.0 + e16 - 4.0 * c4g * e4) / 8.0;
    (p2, p1, p0)
}

/// Closed-form populations for a shaped drive: the population expressions
/// evaluated with the envelope-aware α(t), γ(t).
pub fn populations_thermal_env(
    p: &GateParams,
    env: &crate::gate_model::PulseEnvelope,
    nbar: f64,
    t: f64,
) -> Result<(f64, f64, f64)> {
    let f = crate::propagator::analytic_factors_env(p, env, t)?;
    let a2 = f.alpha.norm_sqr() * (nbar + 0.5);
    let e4 = (-4.0 * a2).exp();
    let e16 = (-16.0 * a2).exp();
    let c4g = (4.0 * f.gamma).cos();
    Ok((
        (3.0 + e16 + 4.0 * c4g * e4) / 8.0,
        (1.0 - e16) / 4.0,
        (3.0 + e16 - 4.0 * c4g * e4) / 8.0,
    ))
}

/// Thermal expectation value of a qubit-space observable under the gate
/// propagator at time `t`:
///
///   O(t) = Tr(O·{B₀ + B₄ E₄ + B₁₆ E₁₆}),   B's built from P_λ ρ̃ P_μ with
///   ρ̃ = V ρ V†, V = exp(iγS_y²).
pub fn expectation_thermal(
    obs: &COp,
    rho_qubits: &COp,
    p: &GateParams,
    nbar: f64,
    t: f64,
) -> Result<f64> {
    if obs.nrows() != 4 || obs.ncols() != 4 || rho_qubits.nrows() != 4 || rho_qubits.ncols() != 4 {
        return Err(Error::DimensionMismatch(
            "expectation_thermal acts on the 4-dim qubit space".into(),
        ));
    }
    if !hilbert::is_hermitian(obs, 1e-10) {
        return Err(Error::InvalidInput(
            "observable must be Hermitian".into(),
        ));
    }
    let trace = rho_qubits.trace();
    if (trace - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "rho_qubits must have unit trace, got {trace}"
        )));
    }
    let f = analytic_factors(p, t);
    let v = exp_i_phi_spin_squared(&hilbert::collective_spin(Axis::Y), f.gamma);
    let rho_t = &v * rho_qubits * v.adjoint();
    let (p0, pp, pm) = hilbert::sy_projectors();
    let b0 = &p0 * &rho_t * &p0 + &pp * &rho_t * &pp + &pm * &rho_t * &pm;
    let b4 = &pp * &rho_t * &p0 + &p0 * &rho_t * &pp + &pm * &rho_t * &p0 + &p0 * &rho_t * &pm;
    let b16 = &pp * &rho_t * &pm + &pm * &rho_t * &pp;
    let a2 = f.alpha.norm_sqr() * (nbar + 0.5);
    let e4 = (-4.0 * a2).exp();
    let e16 = (-16.0 * a2).exp();
    let m = b0 + b4.map(|z| e4 * z) + b16.map(|z| e16 * z);
    Ok((obs * m).trace().re)
}

/// Parity operator after the analysis pulse, P_φ = (cosφ S_x + sinφ S_y)²/2 − 1
/// = σ_φ ⊗ σ_φ.
pub fn parity_operator(phi: f64) -> COp {
    let s = hilbert::collective_spin(Axis::X).map(|z| phi.cos() * z)
        + hilbert::collective_spin(Axis::Y).map(|z| phi.sin() * z);
    let s2 = &s * &s;
    s2.map(|z| 0.5 * z) - hilbert::identity(4)
}

/// Thermal parity signal ⟨P_φ⟩ for ions starting in |↓↓⟩.
pub fn parity_thermal(phi: f64, p: &GateParams, nbar: f64, t: f64) -> f64 {
    let mut rho = DMatrix::zeros(4, 4);
    rho[(DOWN_DOWN, DOWN_DOWN)] = C64::new(1.0, 0.0);
    expectation_thermal(&parity_operator(phi), &rho, p, nbar, t)
        .expect("parity operator is Hermitian and rho is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn paper_50us() -> GateParams {
        GateParams::at_gate_condition(TAU * 1.23e6, TAU * 20e3, 0.044)
    }

    /// Test-only oracle: Laguerre polynomial L_n(x) by the three-term
    /// recurrence.
    fn laguerre(n: usize, x: f64) -> f64 {
        let mut lm1 = 1.0; // L_0
        if n == 0 {
            return lm1;
        }
        let mut l = 1.0 - x; // L_1
        for k in 1..n {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - x) * l - kf * lm1) / (kf + 1.0);
            lm1 = l;
            l = next;
        }
        l
    }

    #[test]
    fn weights_ground_state() {
        let w = thermal_weights(&ThermalSpec::new(0.0)).unwrap();
        assert_eq!(w, vec![(0, 1.0)]);
    }

    #[test]
    fn weights_geometric_series() {
        let mut spec = ThermalSpec::new(1.0);
        spec.weight_cutoff = 1e-12;
        let w = thermal_weights(&spec).unwrap();
        // p_0 = 1/2, p_1 = 1/4, p_2 = 1/8 before truncation
        assert_relative_eq!(w[0].1, 0.5, max_relative = 1e-9);
        assert_relative_eq!(w[1].1, 0.25, max_relative = 1e-9);
        assert_relative_eq!(w[2].1, 0.125, max_relative = 1e-9);
    }

    #[test]
    fn weights_mean_close_to_nbar() {
        // bias ≈ cutoff·(n*+1) ≈ n̄·cutoff·ln(1/cutoff) < n̄·cutoff·10 at the
        // default cutoff 1e-4
        for nbar in [0.5, 5.0, 20.0] {
            let spec = ThermalSpec::new(nbar);
            let w = thermal_weights(&spec).unwrap();
            let mean: f64 = w.iter().map(|(n, p)| *n as f64 * p).sum();
            assert!(
                (mean - nbar).abs() < nbar * spec.weight_cutoff * 10.0 + 1e-9,
                "nbar = {nbar}, mean = {mean}"
            );
            let total: f64 = w.iter().map(|(_, p)| p).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn displacement_factor_limits() {
        assert_eq!(thermal_displacement_factor(C64::new(0.0, 0.0), 7.0), 1.0);
        let alpha = C64::new(0.5, 0.0);
        assert_relative_eq!(
            thermal_displacement_factor(alpha, 0.0),
            (-alpha.norm_sqr() / 2.0).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn displacement_factor_matches_laguerre_sum() {
        // Σ p_n e^{−|α|²/2} L_n(|α|²) truncated at n = 400
        let alpha = C64::new(0.5, 0.0);
        let nbar = 20.0;
        let x = alpha.norm_sqr();
        let ratio = nbar / (nbar + 1.0);
        let mut sum = 0.0;
        let mut p = 1.0 / (nbar + 1.0);
        for n in 0..=400 {
            sum += p * (-x / 2.0).exp() * laguerre(n, x);
            p *= ratio;
        }
        let closed = thermal_displacement_factor(alpha, nbar);
        assert_relative_eq!(closed, (-0.25_f64 * 20.5).exp(), max_relative = 1e-12);
        assert!((closed - sum).abs() < 1e-8);
    }

    #[test]
    fn generating_function_identity_over_grid() {
        for &alpha_abs in &[0.1, 0.5, 1.0] {
            for &nbar in &[0.0, 1.0, 10.0, 50.0] {
                let alpha = C64::new(alpha_abs, 0.0);
                let x = alpha.norm_sqr();
                let mut sum = 0.0;
                if nbar == 0.0 {
                    sum = (-x / 2.0).exp() * laguerre(0, x);
                } else {
                    let ratio = nbar / (nbar + 1.0);
                    let mut p = 1.0 / (nbar + 1.0);
                    for n in 0..=4000 {
                        sum += p * (-x / 2.0).exp() * laguerre(n, x);
                        p *= ratio;
                    }
                }
                assert!(
                    (thermal_displacement_factor(alpha, nbar) - sum).abs() < 1e-8,
                    "alpha = {alpha_abs}, nbar = {nbar}"
                );
            }
        }
    }

    #[test]
    fn populations_start_in_down_down() {
        let (p2, p1, p0) = populations_thermal(&paper_50us(), 17.0, 0.0);
        assert_relative_eq!(p2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p1, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p0, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn populations_at_gate_time_are_bell_split() {
        let p = paper_50us();
        let t_gate = p.derived().t_gate;
        for nbar in [0.0, 1.0, 5.0, 20.0, 100.0] {
            let (p2, p1, p0) = populations_thermal(&p, nbar, t_gate);
            assert_relative_eq!(p2, 0.5, epsilon = 1e-9);
            assert_relative_eq!(p1, 0.0, epsilon = 1e-9);
            assert_relative_eq!(p0, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn populations_mid_gate_hot() {
        // t = t_gate/2: |α|² = 1/4, γ = π/16, exponentials ≈ 0 at n̄ = 20.
        let p = paper_50us();
        let t = p.derived().t_gate / 2.0;
        let f = analytic_factors(&p, t);
        assert_relative_eq!(f.alpha.norm_sqr(), 0.25, max_relative = 1e-9);
        assert_relative_eq!(f.gamma, PI / 16.0, max_relative = 1e-9);
        let (p2, p1, p0) = populations_thermal(&p, 20.0, t);
        assert_relative_eq!(p2, 0.375, epsilon = 1e-6);
        assert_relative_eq!(p1, 0.250, epsilon = 1e-6);
        assert_relative_eq!(p0, 0.375, epsilon = 1e-6);
    }

    #[test]
    fn populations_sum_to_one_exactly() {
        let p = paper_50us();
        let t_gate = p.derived().t_gate;
        for k in 0..200 {
            let t = t_gate * k as f64 / 199.0;
            for nbar in [0.0, 0.7, 3.0, 20.0, 150.0] {
                let (p2, p1, p0) = populations_thermal(&p, nbar, t);
                assert!((p0 + p1 + p2 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p1_nondecreasing_in_nbar_during_first_half() {
        let p = paper_50us();
        let t_gate = p.derived().t_gate;
        for k in 1..=10 {
            let t = 0.5 * t_gate * k as f64 / 10.0;
            let mut last = -1.0;
            for nbar in [0.0, 1.0, 5.0, 20.0, 100.0] {
                let (_, p1, _) = populations_thermal(&p, nbar, t);
                assert!(p1 >= last - 1e-12);
                last = p1;
            }
        }
    }

    #[test]
    fn expectation_identity_is_one() {
        let p = paper_50us();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(DOWN_DOWN, DOWN_DOWN)] = C64::new(1.0, 0.0);
        for (t, nbar) in [(3e-6, 0.0), (17e-6, 20.0), (44e-6, 3.0)] {
            let val =
                expectation_thermal(&hilbert::identity(4), &rho, &p, nbar, t).unwrap();
            assert_relative_eq!(val, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn expectation_sz_consistent_with_populations() {
        // ⟨S_z⟩ = 2(p2 − p0) by the binning convention (S_z|↓↓⟩ = −2|↓↓⟩, so
        // sign flips against the fluorescence labels).
        let p = paper_50us();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(DOWN_DOWN, DOWN_DOWN)] = C64::new(1.0, 0.0);
        let sz = hilbert::collective_spin(Axis::Z);
        for (t, nbar) in [(5e-6, 20.0), (21e-6, 0.5), (37e-6, 20.0), (50e-6, 7.0)] {
            let val = expectation_thermal(&sz, &rho, &p, nbar, t).unwrap();
            let (p2, _, p0) = populations_thermal(&p, nbar, t);
            assert_relative_eq!(val, 2.0 * (p0 - p2), epsilon = 1e-12);
        }
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let p = paper_50us();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(DOWN_DOWN, DOWN_DOWN)] = C64::new(1.0, 0.0);
        let mut bad = hilbert::identity(4);
        bad[(0, 1)] = C64::new(0.3, 0.1);
        assert!(expectation_thermal(&bad, &rho, &p, 1.0, 1e-6).is_err());
    }

    #[test]
    fn parity_vanishes_at_t0_and_is_pi_periodic() {
        let p = paper_50us();
        for k in 0..8 {
            let phi = PI * k as f64 / 4.0;
            assert_relative_eq!(parity_thermal(phi, &p, 9.0, 0.0), 0.0, epsilon = 1e-12);
        }
        for phi in [0.3, 1.1, 2.4] {
            let a = parity_thermal(phi, &p, 20.0, 31e-6);
            let b = parity_thermal(phi + PI, &p, 20.0, 31e-6);
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn parity_full_contrast_at_gate_time() {
        let p = paper_50us();
        let t_gate = p.derived().t_gate;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for k in 0..64 {
            let phi = PI * k as f64 / 64.0;
            let v = parity_thermal(phi, &p, 20.0, t_gate);
            min = min.min(v);
            max = max.max(v);
        }
        // amplitude-1 oscillation, sin-like in 2φ
        assert_relative_eq!(max, 1.0, epsilon = 1e-9);
        assert_relative_eq!(min, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn nbar_zero_limit_matches_pure_state_propagator() {
        // Oracle: direct composite-space evaluation from |↓↓⟩|0⟩.
        use crate::hilbert::StateVector;
        use crate::propagator::propagator_ms;
        let p = paper_50us();
        let n_fock = 36;
        let sz = hilbert::collective_spin(Axis::Z);
        let mut rho = DMatrix::zeros(4, 4);
        rho[(DOWN_DOWN, DOWN_DOWN)] = C64::new(1.0, 0.0);
        for t in [7e-6, 19e-6, 33e-6, 50e-6] {
            let u = propagator_ms(&p, t, n_fock).unwrap();
            let st = StateVector::basis(DOWN_DOWN, 0, n_fock, 0).unwrap();
            let out = StateVector {
                n_fock,
                fock_offset: 0,
                amps: &u * &st.amps,
            };
            let rho_q = out.rho_qubit();
            let pure = (&sz * rho_q).trace().re;
            let therm = expectation_thermal(&sz, &rho, &p, 0.0, t).unwrap();
            assert!((pure - therm).abs() < 1e-10, "t = {t}");
        }
    }
}
