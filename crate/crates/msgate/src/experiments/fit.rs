//! Least-squares fits used by the virtual experiments: the parity-fringe
//! sinusoid A sin(2φ+φ₀), free-frequency sinusoids for Ramsey scans, the
//! quadratic detuning dependence of the fidelity, the thermal-population model
//! with n̄ as the only free parameter, and the Gaussian multi-gate amplitude
//! decay.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate_model::GateParams;
use crate::thermal::populations_thermal;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Sinusoid2Phi,
    Quadratic,
    NbarPopulations,
    GaussianDecay,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub rms_residual: f64,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }
}

/// Ordinary linear least squares y ≈ X β; returns (β, per-coefficient
/// standard errors, rms residual).
fn linear_lsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let n = x.nrows();
    let k = x.ncols();
    if n < k {
        return Err(Error::Fit(format!("{n} points cannot determine {k} coefficients")));
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Fit("design matrix is singular".into()))?;
    let beta = chol.solve(&xty);
    let resid = y - x * &beta;
    let dof = (n - k).max(1) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let cov = chol.inverse().map(|v| v * sigma2);
    let stderr = DVector::from_iterator(k, (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()));
    Ok((beta, stderr, (resid.norm_squared() / n as f64).sqrt()))
}

/// Fit P(φ) = A sin(2φ + φ₀) with A ≥ 0.
pub fn fit_sinusoid(data: &[(f64, f64)]) -> Result<FitResult> {
    if data.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 points, got {}",
            data.len()
        )));
    }
    let span = data
        .iter()
        .map(|d| d.0)
        .fold(f64::NEG_INFINITY, f64::max)
        - data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    if span < std::f64::consts::FRAC_PI_2 {
        return Err(Error::Fit(format!(
            "phase span {span:.3} rad covers less than half a period"
        )));
    }
    let n = data.len();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        let phi = data[i].0;
        if j == 0 { (2.0 * phi).sin() } else { (2.0 * phi).cos() }
    });
    let y = DVector::from_iterator(n, data.iter().map(|d| d.1));
    let (beta, se, rms) = linear_lsq(&x, &y)?;
    let (b, c) = (beta[0], beta[1]);
    let a = b.hypot(c);
    let phi0 = c.atan2(b);
    let mut params = BTreeMap::new();
    params.insert("amplitude".into(), a);
    params.insert("phi0".into(), phi0);
    let mut stderr = BTreeMap::new();
    let a_se = if a > 0.0 {
        ((b * se[0]).powi(2) + (c * se[1]).powi(2)).sqrt() / a
    } else {
        se[0].max(se[1])
    };
    stderr.insert("amplitude".into(), a_se);
    stderr.insert("phi0".into(), if a > 0.0 { a_se / a } else { f64::NAN });
    Ok(FitResult {
        model: FitModel::Sinusoid2Phi,
        params,
        stderr,
        rms_residual: rms,
        warnings: Vec::new(),
    })
}

/// Fit y(t) = offset + A sin(ωt + φ₀) with the angular frequency searched by
/// a coarse grid plus golden-section refinement.  Reports the period 2π/ω.
pub fn fit_sinusoid_freq(data: &[(f64, f64)]) -> Result<FitResult> {
    if data.len() < 6 {
        return Err(Error::Fit(format!(
            "need at least 6 points, got {}",
            data.len()
        )));
    }
    let tmin = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let tmax = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let span = tmax - tmin;
    if !(span > 0.0) {
        return Err(Error::Fit("degenerate time grid".into()));
    }
    let n = data.len();
    let y = DVector::from_iterator(n, data.iter().map(|d| d.1));
    let sse = |omega: f64| -> f64 {
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => (omega * data[i].0).sin(),
            _ => (omega * data[i].0).cos(),
        });
        match linear_lsq(&x, &y) {
            Ok((_, _, rms)) => rms * rms * n as f64,
            Err(_) => f64::INFINITY,
        }
    };
    // between a fraction of one oscillation over the span and the grid Nyquist
    let dt_min = {
        let mut ts: Vec<f64> = data.iter().map(|d| d.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min)
    };
    let w_lo = std::f64::consts::TAU / (4.0 * span);
    let w_hi = std::f64::consts::PI / dt_min;
    let grid = 600;
    let mut best = (f64::INFINITY, w_lo);
    for k in 0..=grid {
        let w = w_lo * (w_hi / w_lo).powf(k as f64 / grid as f64);
        let s = sse(w);
        if s < best.0 {
            best = (s, w);
        }
    }
    // golden-section refinement around the best grid point
    let ratio = (w_hi / w_lo).powf(1.0 / grid as f64);
    let (mut lo, mut hi) = (best.1 / ratio, best.1 * ratio);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if sse(m1) < sse(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let omega = 0.5 * (lo + hi);
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (omega * data[i].0).sin(),
        _ => (omega * data[i].0).cos(),
    });
    let (beta, se, rms) = linear_lsq(&x, &y)?;
    let a = beta[1].hypot(beta[2]);
    let mut params = BTreeMap::new();
    params.insert("offset".into(), beta[0]);
    params.insert("amplitude".into(), a);
    params.insert("phi0".into(), beta[2].atan2(beta[1]));
    params.insert("omega".into(), omega);
    params.insert("period".into(), std::f64::consts::TAU / omega);
    let mut stderr = BTreeMap::new();
    stderr.insert("offset".into(), se[0]);
    stderr.insert(
        "amplitude".into(),
        ((beta[1] * se[1]).powi(2) + (beta[2] * se[2]).powi(2)).sqrt() / a.max(1e-300),
    );
    Ok(FitResult {
        model: FitModel::Sinusoid2Phi,
        params,
        stderr,
        rms_residual: rms,
        warnings: Vec::new(),
    })
}

/// Fit F(Δ) = F_max + c·(Δ − Δ₀)² through a plain quadratic polynomial.
pub fn fit_quadratic_detuning(data: &[(f64, f64)]) -> Result<FitResult> {
    if data.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 points, got {}",
            data.len()
        )));
    }
    let n = data.len();
    let x = DMatrix::from_fn(n, 3, |i, j| data[i].0.powi(2 - j as i32));
    let y = DVector::from_iterator(n, data.iter().map(|d| d.1));
    let (beta, se, rms) = linear_lsq(&x, &y)?;
    let (a, b, d) = (beta[0], beta[1], beta[2]);
    let mut warnings = Vec::new();
    if a > 0.0 {
        warnings.push("upward curvature: data do not bracket a maximum".into());
    }
    let delta0 = if a != 0.0 { -b / (2.0 * a) } else { f64::NAN };
    let argmax = data
        .iter()
        .enumerate()
        .max_by(|l, r| l.1 .1.total_cmp(&r.1 .1))
        .map(|(i, _)| i)
        .unwrap();
    if argmax == 0 || argmax == n - 1 {
        warnings.push("maximum lies at the grid edge".into());
    }
    let mut params = BTreeMap::new();
    params.insert("curvature".into(), a);
    params.insert("delta0".into(), delta0);
    params.insert("f_max".into(), d - b * b / (4.0 * a));
    let mut stderr = BTreeMap::new();
    stderr.insert("curvature".into(), se[0]);
    Ok(FitResult {
        model: FitModel::Quadratic,
        params,
        stderr,
        rms_residual: rms,
        warnings,
    })
}

/// Fit the thermal population model to (t, p0, p1, p2) rows with n̄ as the
/// only free parameter: coarse grid search then golden-section refinement.
pub fn fit_nbar(data: &[(f64, f64, f64, f64)], p: &GateParams) -> Result<FitResult> {
    let t_gate = p.derived().t_gate;
    let inside = data
        .iter()
        .filter(|d| d.0 > 0.0 && d.0 < t_gate * (1.0 + 1e-9))
        .count();
    if inside < 8 {
        return Err(Error::Fit(format!(
            "need at least 8 samples within (0, t_gate), got {inside}"
        )));
    }
    let sse = |nbar: f64| -> f64 {
        data.iter()
            .map(|&(t, p0, p1, p2)| {
                let (m2, m1, m0) = populations_thermal(p, nbar, t);
                (p0 - m0).powi(2) + (p1 - m1).powi(2) + (p2 - m2).powi(2)
            })
            .sum()
    };
    // coarse grid over a generous range
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.5).collect();
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for (i, &nb) in grid.iter().enumerate() {
        let s = sse(nb);
        if s < best {
            best = s;
            best_i = i;
        }
        worst = worst.max(s);
    }
    // populations are O(1); a meaningful n̄ dependence moves the SSE far more
    if !(worst - best > 1e-9) {
        return Err(Error::Fit(
            "data are insensitive to nbar (samples at gate-time multiples?)".into(),
        ));
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
    if lo == hi {
        hi = lo + 0.5;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if sse(m1) < sse(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let nbar = (0.5 * (lo + hi)).max(0.0);
    let s_min = sse(nbar);
    let n_res = 3 * data.len();
    let rms = (s_min / n_res as f64).sqrt();
    // 1-sigma from the local curvature of the SSE
    let h = (nbar * 1e-3).max(1e-3);
    let curv = (sse(nbar + h) - 2.0 * s_min + sse((nbar - h).max(0.0))) / (h * h);
    let sigma2 = s_min / (n_res.saturating_sub(1)) as f64;
    let se = if curv > 0.0 {
        (2.0 * sigma2 / curv).sqrt()
    } else {
        f64::NAN
    };
    let mut params = BTreeMap::new();
    params.insert("nbar".into(), nbar);
    let mut stderr = BTreeMap::new();
    stderr.insert("nbar".into(), se);
    Ok(FitResult {
        model: FitModel::NbarPopulations,
        params,
        stderr,
        rms_residual: rms,
        warnings: Vec::new(),
    })
}

/// Fit parity amplitudes A(N) to a Gaussian decay A₀·exp(−(N/N₀)²) (linear
/// least squares in log space) and the bright populations to a linear decay.
/// Also fits the competing straight-line log model and reports the residual
/// ratio rms_linear/rms_gaussian.
pub fn fit_gaussian_decay(rows: &[(f64, f64, f64)]) -> Result<FitResult> {
    // rows: (n_gates, parity_amplitude, p0 + p2)
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.1 > 0.0)
        .map(|r| (r.0, r.1.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 positive amplitudes, got {}",
            pts.len()
        )));
    }
    let n = pts.len();
    let y = DVector::from_iterator(n, pts.iter().map(|p| p.1));
    let x_gauss = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { pts[i].0.powi(2) });
    let (bg, seg, rms_g) = linear_lsq(&x_gauss, &y)?;
    let x_lin = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { pts[i].0 });
    let (_bl, _sel, rms_l) = linear_lsq(&x_lin, &y)?;

    let mut warnings = Vec::new();
    let c = bg[1];
    let n0 = if c < 0.0 {
        (-1.0 / c).sqrt()
    } else {
        warnings.push("amplitude grows with gate count; no Gaussian scale".into());
        f64::NAN
    };
    // linear population decay
    let np = rows.len();
    let xp = DMatrix::from_fn(np, 2, |i, j| if j == 0 { 1.0 } else { rows[i].0 });
    let yp = DVector::from_iterator(np, rows.iter().map(|r| r.2));
    let (bp, _sep, _rmsp) = linear_lsq(&xp, &yp)?;

    let mut params = BTreeMap::new();
    params.insert("amplitude0".into(), bg[0].exp());
    params.insert("n0".into(), n0);
    params.insert("population_offset".into(), bp[0]);
    params.insert("population_slope".into(), bp[1]);
    params.insert("rms_log_gaussian".into(), rms_g);
    params.insert("rms_log_linear".into(), rms_l);
    params.insert("residual_ratio".into(), rms_l / rms_g.max(1e-300));
    let mut stderr = BTreeMap::new();
    stderr.insert("n0".into(), if c < 0.0 { seg[1] / (2.0 * (-c).powf(1.5)) } else { f64::NAN });
    Ok(FitResult {
        model: FitModel::GaussianDecay,
        params,
        stderr,
        rms_residual: rms_g,
        warnings,
    })
}

/// Peak-to-peak amplitude of the component of `data` oscillating at angular
/// frequency `omega`, with a cubic polynomial absorbing the slow trend.
pub fn oscillation_amplitude(data: &[(f64, f64)], omega: f64) -> Result<f64> {
    if data.len() < 8 {
        return Err(Error::Fit("need at least 8 samples".into()));
    }
    let n = data.len();
    let t0 = data[0].0;
    let x = DMatrix::from_fn(n, 6, |i, j| {
        let t = data[i].0 - t0;
        match j {
            0 => 1.0,
            1 => t,
            2 => t * t,
            3 => t * t * t,
            4 => (omega * data[i].0).sin(),
            _ => (omega * data[i].0).cos(),
        }
    });
    let y = DVector::from_iterator(n, data.iter().map(|d| d.1));
    let (beta, _, _) = linear_lsq(&x, &y)?;
    Ok(2.0 * beta[4].hypot(beta[5]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn sinusoid_roundtrip_exact() {
        let data: Vec<(f64, f64)> = (0..24)
            .map(|k| {
                let phi = TAU * k as f64 / 24.0;
                (phi, 0.964 * (2.0 * phi + 0.3).sin())
            })
            .collect();
        let fit = fit_sinusoid(&data).unwrap();
        assert_relative_eq!(fit.param("amplitude"), 0.964, epsilon = 1e-9);
        assert_relative_eq!(fit.param("phi0"), 0.3, epsilon = 1e-9);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn sinusoid_constant_data_has_zero_amplitude() {
        let data: Vec<(f64, f64)> = (0..12)
            .map(|k| (TAU * k as f64 / 12.0, 0.25))
            .collect();
        let fit = fit_sinusoid(&data).unwrap();
        assert_relative_eq!(fit.param("amplitude"), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sinusoid_offset_does_not_bias_amplitude_on_full_period() {
        let data: Vec<(f64, f64)> = (0..36)
            .map(|k| {
                let phi = TAU * k as f64 / 36.0;
                (phi, 0.4 + 0.7 * (2.0 * phi - 1.1).sin())
            })
            .collect();
        let fit = fit_sinusoid(&data).unwrap();
        assert_relative_eq!(fit.param("amplitude"), 0.7, epsilon = 1e-9);
    }

    #[test]
    fn sinusoid_rejects_short_span() {
        let data: Vec<(f64, f64)> = (0..6).map(|k| (1e-3 * k as f64, 0.1)).collect();
        assert!(fit_sinusoid(&data).is_err());
    }

    #[test]
    fn freq_fit_recovers_period() {
        let period = 258e-6;
        let data: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let t = 500e-6 * k as f64 / 40.0;
                (t, 0.5 + 0.5 * (TAU / period * t).cos())
            })
            .collect();
        let fit = fit_sinusoid_freq(&data).unwrap();
        assert_relative_eq!(fit.param("period"), period, max_relative = 1e-4);
        assert_relative_eq!(fit.param("amplitude"), 0.5, max_relative = 1e-3);
    }

    #[test]
    fn quadratic_exact_parabola() {
        let data: Vec<(f64, f64)> = (-6..=6)
            .map(|k| {
                let d = 100.0 * k as f64;
                (d, 0.995 - 9.6e-9 * (d - 120.0).powi(2))
            })
            .collect();
        let fit = fit_quadratic_detuning(&data).unwrap();
        assert_relative_eq!(fit.param("curvature"), -9.6e-9, max_relative = 1e-9);
        assert_relative_eq!(fit.param("delta0"), 120.0, max_relative = 1e-6);
        assert_relative_eq!(fit.param("f_max"), 0.995, max_relative = 1e-9);
        assert!(fit.warnings.is_empty());
    }

    #[test]
    fn quadratic_warns_on_upward_curvature() {
        let data: Vec<(f64, f64)> = (-5..=5)
            .map(|k| (k as f64, 0.5 + 1e-3 * (k as f64).powi(2)))
            .collect();
        let fit = fit_quadratic_detuning(&data).unwrap();
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn nbar_roundtrip_on_model_data() {
        let p = GateParams::at_gate_condition(TAU * 1.23e6, TAU * 20e3, 0.044);
        let t_gate = p.derived().t_gate;
        let data: Vec<(f64, f64, f64, f64)> = (1..=20)
            .map(|k| {
                let t = t_gate * k as f64 / 20.0 * 0.999;
                let (p2, p1, p0) = populations_thermal(&p, 20.0, t);
                (t, p0, p1, p2)
            })
            .collect();
        let fit = fit_nbar(&data, &p).unwrap();
        assert_relative_eq!(fit.param("nbar"), 20.0, epsilon = 1e-6);
        let data0: Vec<(f64, f64, f64, f64)> = (1..=20)
            .map(|k| {
                let t = t_gate * k as f64 / 20.0 * 0.999;
                let (p2, p1, p0) = populations_thermal(&p, 0.0, t);
                (t, p0, p1, p2)
            })
            .collect();
        let fit0 = fit_nbar(&data0, &p).unwrap();
        assert!(fit0.param("nbar") < 0.5);
    }

    #[test]
    fn nbar_rejects_degenerate_sampling() {
        // samples only at multiples of t_gate, where the model is
        // nbar-independent
        let p = GateParams::at_gate_condition(TAU * 1.23e6, TAU * 20e3, 0.044);
        let t_gate = p.derived().t_gate;
        let data: Vec<(f64, f64, f64, f64)> = (1..=10)
            .flat_map(|_| {
                let (p2, p1, p0) = populations_thermal(&p, 20.0, t_gate);
                vec![(t_gate * 0.9999999, p0, p1, p2)]
            })
            .collect();
        assert!(fit_nbar(&data, &p).is_err());
    }

    #[test]
    fn gaussian_decay_fit_recovers_scale() {
        let n0 = 23.0;
        let rows: Vec<(f64, f64, f64)> = (0..11)
            .map(|k| {
                let n = (2 * k + 1) as f64;
                (n, (-(n / n0).powi(2)).exp(), 1.0 - 1e-3 * n)
            })
            .collect();
        let fit = fit_gaussian_decay(&rows).unwrap();
        assert_relative_eq!(fit.param("n0"), n0, max_relative = 1e-6);
        assert_relative_eq!(fit.param("population_slope"), -1e-3, max_relative = 1e-6);
        assert!(fit.param("residual_ratio") > 2.0);
    }

    #[test]
    fn oscillation_amplitude_extracts_fast_component() {
        let omega = TAU * 1.19e6;
        let data: Vec<(f64, f64)> = (0..300)
            .map(|k| {
                let t = 5e-6 * k as f64 / 300.0;
                let slow = 1.0 - 3e9 * t * t;
                (t, slow + 0.07 * (omega * t).sin())
            })
            .collect();
        let pp = oscillation_amplitude(&data, omega).unwrap();
        assert_relative_eq!(pp, 0.14, max_relative = 1e-3);
    }
}
