// scratch probe: detuning curvature, ramsey period, multi-gate decay
use std::f64::consts::TAU;

use msgate::experiments::{
    Motional, ScanSpec, ScanVariable, fit_quadratic_detuning, fit_sinusoid_freq, multi_gate,
    run_scan,
};
use msgate::gate_model::{GateParams, NoiseModel, PulseEnvelope};

fn main() {
    // --- criterion 5: detuning curvature at the 50 us gate ---
    let t0 = std::time::Instant::now();
    let p = GateParams::at_gate_condition(TAU * 1.232e6, TAU * 20e3, 0.044);
    let d = p.derived();
    let env = PulseEnvelope::blackman_equal_area(d.t_gate, 2.5e-6).unwrap();
    let grid: Vec<f64> = (-7..=7).map(|k| TAU * 150.0 * k as f64).collect();
    let spec = ScanSpec {
        variable: ScanVariable::GlobalDetuning,
        grid,
        shots: None,
        seed: 0,
    };
    let rows = run_scan(&spec, &p, &env, &Motional::Fock(0), 1e-8).unwrap();
    let data: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.value / TAU, r.fidelity.unwrap()))
        .collect();
    for (d_hz, f) in &data {
        println!("detuning {d_hz:7.1} Hz -> F = {f:.6}");
    }
    let fit = fit_quadratic_detuning(&data).unwrap();
    println!(
        "curvature = {:.3e} /Hz^2 (target -9.6e-9 +-20%), delta0 = {:.1} Hz, fmax = {:.5}",
        fit.param("curvature"),
        fit.param("delta0"),
        fit.param("f_max")
    );
    println!(
        "implied error at 160 Hz rms = {:.3e} (target 2.5e-4 +- 0.5e-4)",
        -fit.param("curvature") * 160.0f64.powi(2)
    );
    println!("curvature scan: {:.0?}", t0.elapsed());

    // --- criterion 6: ramsey period ---
    let t1 = std::time::Instant::now();
    let mut pr = GateParams::at_gate_condition(TAU * 1.232e6, TAU * 40e3, 0.044);
    pr.delta_ac = TAU * 1.94e3;
    pr.delta_global = TAU * 1.94e3;
    let dr = pr.derived();
    let env_r = PulseEnvelope::blackman_equal_area(dr.t_gate, 2.5e-6).unwrap();
    let grid: Vec<f64> = (0..=40).map(|k| 10e-6 * k as f64 + 1e-6).collect();
    let spec = ScanSpec {
        variable: ScanVariable::WaitTime,
        grid,
        shots: None,
        seed: 0,
    };
    let rows = run_scan(&spec, &pr, &env_r, &Motional::Fock(0), 1e-8).unwrap();
    let data: Vec<(f64, f64)> = rows.iter().map(|r| (r.value, r.p0)).collect();
    let fit = fit_sinusoid_freq(&data).unwrap();
    println!(
        "ramsey period = {:.2} us (target 257.7 +- 2%), amplitude = {:.3}, offset = {:.3}",
        fit.param("period") * 1e6 / 2.0, // populations oscillate at 2*delta
        fit.param("amplitude"),
        fit.param("offset")
    );
    println!(
        "raw fitted period = {:.2} us",
        fit.param("period") * 1e6
    );
    println!("ramsey: {:.0?}", t1.elapsed());

    // --- criterion 8: multi-gate decay ---
    let t2 = std::time::Instant::now();
    let p21 = GateParams::at_gate_condition(TAU * 1.232e6, TAU * 20e3, 0.044);
    let mut noise = NoiseModel::none();
    noise.coupling_rel_sigma = 1.4e-2;
    noise.carrier_error_per_gate = 2e-3;
    noise.seed = 20260811;
    let res = multi_gate(21, &p21, &noise, 4000).unwrap();
    for row in res.rows.iter().filter(|r| r.n_gates % 2 == 1) {
        println!(
            "N={:2}: F = {:.4}  A = {:.4}  p0+p2 = {:.4}",
            row.n_gates,
            row.fidelity,
            row.parity_amplitude,
            row.p0 + row.p2
        );
    }
    let fit = res.fit.unwrap();
    println!(
        "n0 = {:.1}, pop slope = {:.2e}, residual ratio = {:.2} (need > 2)",
        fit.param("n0"),
        fit.param("population_slope"),
        fit.param("residual_ratio")
    );
    println!("multi-gate: {:.0?}", t2.elapsed());
}
