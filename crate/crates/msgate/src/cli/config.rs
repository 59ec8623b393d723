//! Scenario configuration: a single JSON file, schema-validated before any
//! computation.  Frequencies are given in Hz (the ν/2π convention) and
//! durations in µs; both are converted to angular frequencies and seconds
//! once, here.

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate_model::{GateParams, NoiseModel, PulseEnvelope};
use crate::thermal::ThermalSpec;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub physics: PhysicsCfg,
    pub pulse: PulseCfg,
    #[serde(default)]
    pub motional: MotionalCfg,
    pub experiment: ExperimentCfg,
    #[serde(default)]
    pub output: OutputCfg,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsCfg {
    /// Trap COM frequency ν/2π in Hz.
    pub nu_hz: f64,
    /// Sideband detuning ε/2π in Hz (sign carries direction).
    pub epsilon_hz: f64,
    /// Lamb-Dicke factor.
    pub eta: f64,
    /// Peak carrier Rabi frequency Ω/2π in Hz; defaults to the gate condition
    /// |ε|/(4η).
    #[serde(default)]
    pub omega_hz: Option<f64>,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub zeta_rad: f64,
    #[serde(default)]
    pub delta_ac_hz: f64,
    #[serde(default)]
    pub delta_global_hz: f64,
}

#[derive(Copy, Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Rectangular,
    BlackmanSloped,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseCfg {
    pub kind: PulseKind,
    /// Pulse area in gate-time units; defaults to 2π/|ε|.
    #[serde(default)]
    pub t_gate_us: Option<f64>,
    #[serde(default = "default_slope_us")]
    pub t_slope_us: f64,
}

fn default_slope_us() -> f64 {
    2.5
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MotionalCfg {
    Fock {
        fock: usize,
    },
    Thermal {
        thermal: ThermalCfg,
    },
}

impl Default for MotionalCfg {
    fn default() -> Self {
        Self::Fock { fock: 0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalCfg {
    pub nbar: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Tune the drive strength on the gate output before running, as the
    /// experiment does for hot ions.
    #[serde(default)]
    pub calibrate: bool,
}

fn default_cutoff() -> f64 {
    1e-4
}

fn default_window() -> usize {
    24
}

fn default_tol() -> f64 {
    1e-8
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentCfg {
    /// Time-resolved populations over one pulse.
    Evolve {
        /// Defaults to the full pulse duration.
        #[serde(default)]
        t_end_us: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        /// Average over a uniform grid of drive phases ζ.
        #[serde(default)]
        zeta_average: Option<usize>,
    },
    DetuningScan {
        from_hz: f64,
        to_hz: f64,
        points: usize,
        #[serde(default)]
        shots: Option<u64>,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    ParityScan {
        #[serde(default = "default_parity_points")]
        points: usize,
        #[serde(default)]
        shots: Option<u64>,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Ramsey {
        /// Residual AC-Stark shift in Hz; sets both the dipole shift and the
        /// tracking laser detuning so only the wait phase survives.
        residual_shift_hz: f64,
        from_us: f64,
        to_us: f64,
        points: usize,
        #[serde(default)]
        shots: Option<u64>,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    MultiGate {
        #[serde(default = "default_gates")]
        n_gates: usize,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        noise: NoiseCfg,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    ThermalPopulations {
        #[serde(default = "default_method")]
        method: ThermalMethod,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Fit {
        model: FitKind,
        input_csv: PathBuf,
    },
}

fn default_samples() -> usize {
    200
}

fn default_parity_points() -> usize {
    24
}

fn default_gates() -> usize {
    21
}

fn default_trials() -> usize {
    4000
}

fn default_method() -> ThermalMethod {
    ThermalMethod::ClosedForm
}

#[derive(Copy, Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMethod {
    ClosedForm,
    Ensemble,
}

#[derive(Copy, Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Sinusoid,
    SinusoidFreq,
    Quadratic,
    Nbar,
    GaussianDecay,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCfg {
    pub coupling_rel_sigma: f64,
    pub carrier_error_per_gate: f64,
    pub detuning_rms_hz: f64,
    pub heating_rate_per_s: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputCfg {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build-and-check every component without running anything.
    pub fn validate(&self) -> Result<()> {
        let p = self.gate_params()?;
        self.envelope(&p)?;
        self.thermal_spec()?;
        match &self.experiment {
            ExperimentCfg::DetuningScan { points, from_hz, to_hz, .. } => {
                if *points < 2 || !(to_hz > from_hz) {
                    return Err(Error::Config(
                        "detuning_scan: need points >= 2 and to_hz > from_hz".into(),
                    ));
                }
            }
            ExperimentCfg::Ramsey { points, from_us, to_us, .. } => {
                if *points < 6 || !(to_us > from_us) || *from_us < 0.0 {
                    return Err(Error::Config(
                        "ramsey: need points >= 6 and 0 <= from_us < to_us".into(),
                    ));
                }
            }
            ExperimentCfg::ParityScan { points, .. } => {
                if *points < 5 {
                    return Err(Error::Config("parity_scan: need points >= 5".into()));
                }
            }
            ExperimentCfg::MultiGate { n_gates, trials, noise, .. } => {
                if *n_gates < 1 || *trials < 1 {
                    return Err(Error::Config(
                        "multi_gate: need n_gates >= 1 and trials >= 1".into(),
                    ));
                }
                noise.to_model(0).validated()?;
            }
            ExperimentCfg::Evolve { samples, .. }
            | ExperimentCfg::ThermalPopulations { samples, .. } => {
                if *samples < 2 {
                    return Err(Error::Config("need samples >= 2".into()));
                }
            }
            ExperimentCfg::Fit { .. } => {}
        }
        Ok(())
    }

    pub fn gate_params(&self) -> Result<GateParams> {
        let ph = &self.physics;
        let omega_hz = ph
            .omega_hz
            .unwrap_or_else(|| ph.epsilon_hz.abs() / (4.0 * ph.eta));
        GateParams {
            nu: TAU * ph.nu_hz,
            epsilon: TAU * ph.epsilon_hz,
            eta: ph.eta,
            omega: TAU * omega_hz,
            xi: ph.xi,
            zeta: ph.zeta_rad,
            delta_ac: TAU * ph.delta_ac_hz,
            delta_global: TAU * ph.delta_global_hz,
        }
        .validated()
    }

    pub fn envelope(&self, p: &GateParams) -> Result<PulseEnvelope> {
        let t_gate = self
            .pulse
            .t_gate_us
            .map(|us| us * 1e-6)
            .unwrap_or_else(|| p.derived().t_gate);
        match self.pulse.kind {
            PulseKind::Rectangular => PulseEnvelope::rectangular(t_gate).validated(),
            PulseKind::BlackmanSloped => {
                PulseEnvelope::blackman_equal_area(t_gate, self.pulse.t_slope_us * 1e-6)
            }
        }
    }

    pub fn thermal_spec(&self) -> Result<Option<(ThermalSpec, bool)>> {
        match &self.motional {
            MotionalCfg::Fock { .. } => Ok(None),
            MotionalCfg::Thermal { thermal } => {
                let spec = ThermalSpec {
                    nbar: thermal.nbar,
                    weight_cutoff: thermal.cutoff,
                    window: thermal.window,
                }
                .validated()?;
                Ok(Some((spec, thermal.calibrate)))
            }
        }
    }
}

impl NoiseCfg {
    pub fn to_model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            coupling_rel_sigma: self.coupling_rel_sigma,
            carrier_error_per_gate: self.carrier_error_per_gate,
            detuning_rms: TAU * self.detuning_rms_hz,
            heating_rate: self.heating_rate_per_s,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "physics": {"nu_hz": 1232000, "epsilon_hz": 20000, "eta": 0.044},
        "pulse": {"kind": "blackman_sloped"},
        "experiment": {"type": "evolve"}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        let p = cfg.gate_params().unwrap();
        assert!((p.omega / TAU - 113636.36).abs() < 1.0);
        let env = cfg.envelope(&p).unwrap();
        assert!((env.t_pulse - 52.9e-6).abs() < 1e-9);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let bad = MINIMAL.replace("\"eta\": 0.044", "\"eta\": 0.044, \"etaa\": 1");
        let err = ScenarioConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("etaa"), "{err}");
    }

    #[test]
    fn physical_invariants_checked() {
        let bad = MINIMAL.replace("20000", "2000000"); // |epsilon| > nu
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }
}
