// scratch probe for the thermal ensemble systematics
use std::f64::consts::TAU;

use msgate::gate_model::{GateParams, PulseEnvelope};
use msgate::hilbert::{DOWN_DOWN, StateVector};
use msgate::integrator::{evolve, evolve_thermal};
use msgate::gate_model::HamiltonianOp;
use msgate::experiments::populations_binned;
use msgate::thermal::{ThermalSpec, populations_thermal};

fn pulse_area(env: &PulseEnvelope, t: f64) -> f64 {
    // ∫ env ds via fine trapezoid (probe only)
    let n = 4000;
    let h = t / n as f64;
    let mut acc = 0.5 * (env.value(0.0).unwrap() + env.value(t).unwrap());
    for k in 1..n {
        acc += env.value(h * k as f64).unwrap();
    }
    acc * h
}

fn main() {
    let base = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    let d = base.derived();
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();

    // --- calibrate kappa on the single level n = 20 ---
    let t0 = std::time::Instant::now();
    let imbalance = |kappa: f64| -> f64 {
        let mut p = base;
        p.omega *= kappa;
        let n = 20usize;
        let w = 18usize;
        let offset = n - w;
        let n_fock = 2 * w + 1;
        let psi0 = StateVector::basis(DOWN_DOWN, n, n_fock, offset).unwrap();
        let h_op = HamiltonianOp::new(p, env, n_fock, offset).unwrap();
        let rep = evolve(&h_op, &psi0, (0.0, env.t_pulse), 1e-8, 0.0).unwrap();
        let (p0, _, p2) = populations_binned(&rep.final_state);
        p2 - p0
    };
    let (mut k0, mut k1) = (1.0f64, 1.06f64);
    let (mut f0, mut f1) = (imbalance(k0), imbalance(k1));
    println!("imb(1.0) = {f0:.4}, imb(1.06) = {f1:.4}");
    for _ in 0..6 {
        let k2 = k1 - f1 * (k1 - k0) / (f1 - f0);
        k0 = k1;
        f0 = f1;
        k1 = k2;
        f1 = imbalance(k1);
        println!("kappa = {k1:.5}, imbalance = {f1:.5}");
        if f1.abs() < 1e-3 {
            break;
        }
    }
    let kappa = k1;
    println!("calibration: {:.0?}", t0.elapsed());

    // --- ensemble with calibrated omega, shaped pulse, t_eff mapping ---
    let t1 = std::time::Instant::now();
    let mut p_cal = base;
    p_cal.omega *= kappa;
    let spec = ThermalSpec::new(20.0);
    let dt = env.t_pulse / 20.0;
    let rep = evolve_thermal(&p_cal, &env, &spec, (0.0, env.t_pulse), 1e-8, dt).unwrap();
    let mut worst = 0.0f64;
    let mut fit_data = Vec::new();
    for s in &rep.samples[1..] {
        let te = pulse_area(&env, s.t);
        let (m2, m1, m0) = msgate::thermal::populations_thermal_env(&base, &env, 20.0, s.t).unwrap();
        let dev = (s.p0 - m0).abs().max((s.p1 - m1).abs()).max((s.p2 - m2).abs());
        worst = worst.max(dev);
        println!(
            "t={:5.2}us te={:5.2}us d0={:+.3} d1={:+.3} d2={:+.3}",
            s.t * 1e6, te * 1e6, s.p0 - m0, s.p1 - m1, s.p2 - m2
        );
        fit_data.push((te, s.p0, s.p1, s.p2));
    }
    println!("worst dev = {worst:.4}  p1_end = {:.4}  ({:.0?})", rep.samples.last().unwrap().p1, t1.elapsed());

    // --- nbar fit on the ensemble data ---
    let fit = msgate::experiments::fit_nbar(&fit_data, &base).unwrap();
    println!("fitted nbar = {:.2} +- {:.2}", fit.param("nbar"), fit.stderr["nbar"]);

    // --- window convergence probe (rect, cheaper cutoff) ---
    for w in [18usize, 24, 27] {
        let mut sp = ThermalSpec::new(20.0);
        sp.window = w;
        sp.weight_cutoff = 1e-3;
        let t = std::time::Instant::now();
        let env_r = PulseEnvelope::rectangular(d.t_gate);
        let r = evolve_thermal(&base, &env_r, &sp, (0.0, d.t_gate), 1e-8, d.t_gate / 4.0).unwrap();
        let pops: Vec<f64> = r
            .samples
            .iter()
            .flat_map(|s| [s.p0, s.p1, s.p2])
            .collect();
        println!("w={w}: pops = {:?} ({:.0?})", &pops[pops.len() - 6..], t.elapsed());
    }
}
