// scratch probe: zeta dependence of the late-gate deviation
use std::f64::consts::TAU;

use msgate::experiments::calibrate_for_thermal;
use msgate::gate_model::{GateParams, PulseEnvelope};
use msgate::integrator::evolve_thermal;
use msgate::thermal::{ThermalSpec, populations_thermal};

fn main() {
    let base = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    let d = base.derived();
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();
    let p_cal = calibrate_for_thermal(&base, 20.0, &env, 1e-8).unwrap();

    let mut spec = ThermalSpec::new(20.0);
    spec.weight_cutoff = 1e-3;

    let t_star = 18.0 * env.t_pulse / 20.0;
    let te = 46.16e-6;
    let (m2, m1, m0) = populations_thermal(&base, 20.0, te);
    println!("model: p0={m0:.4} p1={m1:.4} p2={m2:.4}");

    let mut avg = (0.0, 0.0, 0.0);
    let n_zeta = 4;
    for k in 0..n_zeta {
        let mut p = p_cal;
        p.zeta = TAU * k as f64 / n_zeta as f64;
        let rep = evolve_thermal(&p, &env, &spec, (0.0, t_star), 1e-8, 0.0).unwrap();
        let s = rep.samples.last().unwrap();
        println!(
            "zeta={:4.2}: p0={:.4} p1={:.4} p2={:.4}  (d0={:+.4} d2={:+.4})",
            p.zeta, s.p0, s.p1, s.p2, s.p0 - m0, s.p2 - m2
        );
        avg.0 += s.p0 / n_zeta as f64;
        avg.1 += s.p1 / n_zeta as f64;
        avg.2 += s.p2 / n_zeta as f64;
    }
    println!(
        "zeta-avg : p0={:.4} p1={:.4} p2={:.4}  (d0={:+.4} d2={:+.4})",
        avg.0, avg.1, avg.2, avg.0 - m0, avg.2 - m2
    );
}
