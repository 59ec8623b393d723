// scratch probe: snapshot sampling vs truncated-pulse experiment at the
// gamma-sensitive late-gate point
use std::f64::consts::TAU;

use msgate::experiments::calibrate_for_thermal;
use msgate::gate_model::PulseEnvelope;
use msgate::gate_model::GateParams;
use msgate::integrator::evolve_thermal;
use msgate::thermal::{ThermalSpec, populations_thermal, populations_thermal_env};

fn main() {
    let base = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    let d = base.derived();
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();
    let p_cal = calibrate_for_thermal(&base, 20.0, &env, 1e-8).unwrap();
    println!("kappa = {:.5}", p_cal.omega / base.omega);

    let mut spec = ThermalSpec::new(20.0);
    spec.weight_cutoff = 1e-3;

    let t_star = 18.0 * env.t_pulse / 20.0; // 47.61 us
    let te = 46.16e-6;

    // snapshot (detection-frame sample of the running pulse)
    let rep = evolve_thermal(&p_cal, &env, &spec, (0.0, t_star), 1e-8, 0.0).unwrap();
    let s = rep.samples.last().unwrap();
    println!("snapshot      : p0={:.4} p1={:.4} p2={:.4}", s.p0, s.p1, s.p2);

    // truncated pulse with the same drive area: plateau shortened
    let env_trunc = PulseEnvelope::blackman_equal_area(te, 2.5e-6).unwrap();
    let rep_t = evolve_thermal(&p_cal, &env_trunc, &spec, (0.0, env_trunc.t_pulse), 1e-8, 0.0).unwrap();
    let st = rep_t.samples.last().unwrap();
    println!("truncated     : p0={:.4} p1={:.4} p2={:.4}", st.p0, st.p1, st.p2);

    let (m2, m1, m0) = populations_thermal(&base, 20.0, te);
    println!("rect model(te): p0={:.4} p1={:.4} p2={:.4}", m0, m1, m2);
    let (e2, e1, e0) = populations_thermal_env(&base, &env, 20.0, t_star).unwrap();
    println!("env model(t)  : p0={:.4} p1={:.4} p2={:.4}", e0, e1, e2);
    let (x2, x1, x0) = populations_thermal_env(&base, &env_trunc, 20.0, env_trunc.t_pulse).unwrap();
    println!("env model(tr) : p0={:.4} p1={:.4} p2={:.4}", x0, x1, x2);

    let f_env = msgate::propagator::analytic_factors_env(&base, &env, t_star).unwrap();
    let f_rect = msgate::propagator::analytic_factors(&base, te);
    let f_tr = msgate::propagator::analytic_factors_env(&base, &env_trunc, env_trunc.t_pulse).unwrap();
    println!(
        "alpha^2: env {:.4} rect {:.4} trunc {:.4} | 4gamma: env {:.4} rect {:.4} trunc {:.4}",
        f_env.alpha.norm_sqr(),
        f_rect.alpha.norm_sqr(),
        f_tr.alpha.norm_sqr(),
        4.0 * f_env.gamma,
        4.0 * f_rect.gamma,
        4.0 * f_tr.gamma
    );
}
