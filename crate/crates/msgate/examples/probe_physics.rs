// scratch probe - will be replaced by the real examples
use std::f64::consts::TAU;

use msgate::gate_model::{GateParams, PulseEnvelope, sideband_stark_shift};
use msgate::experiments::{bell_fidelity_of_rho, gate_final_rho};
use msgate::hilbert::{DOWN_DOWN, StateVector};
use msgate::integrator::{evolve_gate, evolve_thermal};
use msgate::thermal::{ThermalSpec, populations_thermal};

fn main() {
    let t0 = std::time::Instant::now();

    // --- sec 2.2 Fock fidelity table ---
    let mut p = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    p.xi = 0.05;
    let d = p.derived();
    p.delta_ac = 8.0 * p.omega * p.omega * p.xi / d.delta;
    println!("delta_ac/2pi = {:.1} Hz, t_gate = {:.1} us", p.delta_ac / TAU, d.t_gate * 1e6);
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();

    for n in [0usize, 1, 2] {
        let rho = gate_final_rho(&p, &env, n, 25 + n, 1e-9).unwrap();
        let f_meas = bell_fidelity_of_rho(&rho);
        // also phase-aware vs ideal target
        let target = msgate::experiments::ideal_gate_target(&p, 1);
        let f_aware = msgate::experiments::state_fidelity(&rho, &target);
        println!("n={n}: F_meas = {f_meas:.5}  F_aware = {f_aware:.5}");
    }
    for n in [1usize, 2] {
        let mut ps = p;
        ps.delta_global = sideband_stark_shift(&p, n);
        let rho = gate_final_rho(&ps, &env, n, 25 + n, 1e-9).unwrap();
        let f_meas = bell_fidelity_of_rho(&rho);
        let target = msgate::experiments::ideal_gate_target(&ps, 1);
        let f_aware = msgate::experiments::state_fidelity(&rho, &target);
        println!("n={n} shifted: F_meas = {f_meas:.5}  F_aware = {f_aware:.5}");
    }
    println!("fock table: {:.1?}", t0.elapsed());

    // --- thermal nbar=20 rectangular, vs Eq13 ---
    let t1 = std::time::Instant::now();
    let p_th = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    let d_th = p_th.derived();
    let env_rect = PulseEnvelope::rectangular(d_th.t_gate);
    let spec = ThermalSpec::new(20.0);
    let rep = evolve_thermal(&p_th, &env_rect, &spec, (0.0, d_th.t_gate), 1e-8, d_th.t_gate / 20.0).unwrap();
    println!("levels = {}, drift = {:.2e}", rep.levels, rep.max_norm_drift);
    let mut worst = (0.0f64, 0.0f64);
    for s in &rep.samples {
        if s.t == 0.0 { continue; }
        let (m2, m1, m0) = populations_thermal(&p_th, 20.0, s.t);
        let dev = (s.p0 - m0).abs().max((s.p1 - m1).abs()).max((s.p2 - m2).abs());
        if dev > worst.0 { worst = (dev, s.t); }
        println!("t={:6.2}us p0={:.4}/{:.4} p1={:.4}/{:.4} p2={:.4}/{:.4}",
            s.t * 1e6, s.p0, m0, s.p1, m1, s.p2, m2);
    }
    println!("worst dev = {:.4} at t = {:.2} us", worst.0, worst.1 * 1e6);
    let last = rep.samples.last().unwrap();
    println!("p1(t_gate) = {:.4}", last.p1);
    println!("thermal: {:.1?}", t1.elapsed());

    // --- zeta-averaged pulse shaping, 25us gate ---
    let t2 = std::time::Instant::now();
    let p25 = GateParams::at_gate_condition(TAU * 1.232e6, TAU * 40e3, 0.044);
    let d25 = p25.derived();
    println!("2pi/delta = {:.3} us", TAU / d25.delta * 1e6);
    let env_rect25 = PulseEnvelope::rectangular(d25.t_gate);
    let env_shaped25 = PulseEnvelope::blackman_equal_area(d25.t_gate, 2.5e-6).unwrap();
    for (name, env) in [("rect", env_rect25), ("shaped", env_shaped25)] {
        let avg = msgate::experiments::zeta_averaged_evolution(
            &p25, &env, 16, 5e-6, 1e-8, 0.02e-6, 12,
        )
        .unwrap();
        let data: Vec<(f64, f64)> = avg.iter().map(|s| (s.t, s.p2)).collect();
        let pp = msgate::experiments::oscillation_amplitude(&data, d25.delta).unwrap();
        println!("{name}: peak-to-peak at delta = {pp:.4}");
    }
    println!("shaping: {:.1?}", t2.elapsed());

    // --- analytic vs numeric (criterion 2) ---
    let t3 = std::time::Instant::now();
    let p2c = GateParams::at_gate_condition(TAU * 1.232e6, TAU * 20e3, 0.044);
    let d2c = p2c.derived();
    let env2 = PulseEnvelope::blackman_equal_area(d2c.t_gate, 2.5e-6).unwrap();
    let psi0 = StateVector::basis(DOWN_DOWN, 0, 24, 0).unwrap();
    let rep2 = evolve_gate(&p2c, &env2, &psi0, 1e-9, 0.0).unwrap();
    let u = msgate::propagator::propagator_ms(&p2c, d2c.t_gate, 24).unwrap();
    let target = &u * &psi0.amps;
    let infid = 1.0 - target.dotc(&rep2.final_state.amps).norm_sqr();
    println!("analytic-vs-numeric infidelity = {:.2e} ({:.1?})", infid, t3.elapsed());
}
