// scratch probe: dense deviation landscape, numeric ensemble vs Eq-13 model,
// on the gate-time (equal-area) clock
use std::f64::consts::TAU;

use msgate::experiments::calibrate_for_thermal;
use msgate::gate_model::{GateParams, PulseEnvelope};
use msgate::integrator::evolve_thermal_sampling;
use msgate::thermal::{ThermalSpec, populations_thermal};

fn area_time(env: &PulseEnvelope, t: f64) -> f64 {
    let n = 2000;
    let h = t / n as f64;
    let mut acc = 0.5 * (env.value(0.0).unwrap() + env.value(t).unwrap());
    for k in 1..n {
        acc += env.value(h * k as f64).unwrap();
    }
    acc * h
}

fn raw_time_for_area(env: &PulseEnvelope, te: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, env.t_pulse);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if area_time(env, mid) < te {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() {
    let base = GateParams::at_gate_condition(TAU * 1230e3, TAU * 20e3, 0.044);
    let d = base.derived();
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();
    let p_cal = calibrate_for_thermal(&base, 20.0, &env, 1e-8).unwrap();
    println!("kappa = {:.5}", p_cal.omega / base.omega);

    let mut spec = ThermalSpec::new(20.0);
    spec.weight_cutoff = 1e-3;

    // te grid: the 20 canonical times plus a dense late-zone scan
    let mut te_list: Vec<f64> = (1..=20).map(|k| 2.5e-6 * k as f64).collect();
    for k in 0..20 {
        te_list.push(42.0e-6 + 0.4e-6 * k as f64);
    }
    te_list.sort_by(f64::total_cmp);
    te_list.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let raw: Vec<f64> = te_list
        .iter()
        .map(|&te| raw_time_for_area(&env, te))
        .collect();

    let t0 = std::time::Instant::now();
    let rep = evolve_thermal_sampling(
        &p_cal,
        &env,
        &spec,
        (0.0, env.t_pulse),
        1e-8,
        &raw[..raw.len() - 1],
    )
    .unwrap();
    println!("ensemble in {:.0?}", t0.elapsed());

    let mut worst_canon = 0.0f64;
    for (i, s) in rep.samples[1..].iter().enumerate() {
        if i >= te_list.len() {
            break;
        }
        let te = area_time(&env, s.t);
        let (m2, m1, m0) = populations_thermal(&base, 20.0, te);
        let dev = (s.p0 - m0).abs().max((s.p1 - m1).abs()).max((s.p2 - m2).abs());
        let canonical = te_list
            .iter()
            .any(|&x| ((x / 2.5e-6) - (x / 2.5e-6).round()).abs() < 1e-9 && (x - te).abs() < 1e-9);
        if canonical {
            worst_canon = worst_canon.max(dev);
        }
        println!(
            "te={:5.2}us{} d0={:+.4} d1={:+.4} d2={:+.4}",
            te * 1e6,
            if canonical { "*" } else { " " },
            s.p0 - m0,
            s.p1 - m1,
            s.p2 - m2
        );
    }
    println!("worst over canonical grid = {worst_canon:.4}");
}
