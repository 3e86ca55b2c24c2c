//! Engine and baseline hyperparameters.
//!
//! Field names in the serialized form use the short symbolic names
//! (`cos_th`, `V_th`, `P_scale`, ...), one section per model.

use serde::{Deserialize, Serialize};

use crate::activation::{LifParams, Settle};
use crate::error::{Error, Result};
use crate::scoring::ScoreParams;
use crate::temporal::TemporalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationVariant {
    /// Every qualified parent scans the whole store.
    #[default]
    Original,
    /// One scan per layer against the mean parent direction.
    Centroid,
}

impl std::str::FromStr for PropagationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Self::Original),
            "centroid" => Ok(Self::Centroid),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidWeighting {
    #[default]
    Uniform,
    /// Parents weighted by their received stimulus.
    Stimulus,
}

/// Named parameter sets. `Tuned` is the complete tuned set; `Precise` swaps
/// in the same values at one more digit of precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Tuned,
    Precise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub cos_th: f64,
    #[serde(rename = "V_th")]
    pub v_th: f64,
    pub stim_th: f64,
    pub tau_init: f64,
    pub tau_scale: f64,
    pub t_scale: f64,
    #[serde(rename = "P_scale")]
    pub p_scale: f64,
    #[serde(rename = "V_rest")]
    pub v_rest: f64,
    #[serde(rename = "I_rest")]
    pub i_rest: f64,

    pub variant: PropagationVariant,
    pub centroid_weighting: CentroidWeighting,
    pub settle: Settle,
    pub max_layers: usize,
    /// Trailing spike events used in temporal association; `None` keeps all.
    pub window: Option<usize>,
    /// Ablation: `false` pins the temporal score to 1.
    pub temporal: bool,
    /// Ablation: `false` freezes every node's time constant.
    pub dynamic_tau: bool,
    /// Use the parallel scan path when compiled in.
    pub parallel: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::preset(Preset::Tuned)
    }
}

impl EngineConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            cos_th: 0.26,
            v_th: 0.01,
            stim_th: 0.04,
            tau_init: 43.07,
            tau_scale: 2.70,
            t_scale: 7.93,
            p_scale: 0.46,
            v_rest: 2.90,
            i_rest: -7.13,
            variant: PropagationVariant::Original,
            centroid_weighting: CentroidWeighting::Uniform,
            settle: Settle::Turn,
            max_layers: 64,
            window: None,
            temporal: true,
            dynamic_tau: true,
            parallel: true,
        };
        match preset {
            Preset::Tuned => base,
            Preset::Precise => Self {
                cos_th: 0.262,
                v_th: 0.099,
                stim_th: 0.037,
                tau_scale: 2.704,
                v_rest: 2.903,
                i_rest: -7.128,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_init > 0.0 && self.tau_init.is_finite()) {
            return Err(Error::Config(format!("tau_init must be positive, got {}", self.tau_init)));
        }
        if !(self.tau_scale > 0.0 && self.tau_scale.is_finite()) {
            return Err(Error::Config(format!("tau_scale must be positive, got {}", self.tau_scale)));
        }
        let finite = [
            ("cos_th", self.cos_th),
            ("V_th", self.v_th),
            ("stim_th", self.stim_th),
            ("t_scale", self.t_scale),
            ("P_scale", self.p_scale),
            ("V_rest", self.v_rest),
            ("I_rest", self.i_rest),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite, got {v}")));
        }
        if self.max_layers == 0 {
            return Err(Error::Config("max_layers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn temporal_params(&self) -> TemporalParams {
        TemporalParams {
            t_scale: self.t_scale,
            tau_scale: self.tau_scale,
            window: self.window,
        }
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            temporal: self.temporal_params(),
            p_scale: self.p_scale,
            use_temporal: self.temporal,
        }
    }

    pub fn lif_params(&self) -> LifParams {
        LifParams {
            v_th: self.v_th,
            v_rest: self.v_rest,
            i_rest: self.i_rest,
            t_scale: self.t_scale,
            tau_scale: self.tau_scale,
            settle: self.settle,
            dynamic_tau: self.dynamic_tau,
        }
    }
}

/// Original MemoryBank: fixed decay constant 5, unit initial strength, top 6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryBankConfig {
    /// Retention threshold. Fixed so benchmark runs are repeatable.
    pub theta: f64,
    pub top_k: usize,
}

impl Default for MemoryBankConfig {
    fn default() -> Self {
        Self { theta: 0.12, top_k: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryBankAdaptedConfig {
    #[serde(rename = "Top_k")]
    pub top_k: usize,
    #[serde(rename = "Theta")]
    pub theta: f64,
    pub t_scale: f64,
    pub s_scale: f64,
    pub s_init: f64,
}

impl Default for MemoryBankAdaptedConfig {
    fn default() -> Self {
        Self {
            top_k: 7,
            theta: 0.12,
            t_scale: 13.82,
            s_scale: 9.06,
            s_init: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MyAgentConfig {
    pub cos_th: f64,
}

impl Default for MyAgentConfig {
    fn default() -> Self {
        Self { cos_th: 0.30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MyAgentAdaptedConfig {
    pub cos_th: f64,
    pub r_scale: f64,
    pub t_scale: f64,
    pub g_scale: f64,
}

impl Default for MyAgentAdaptedConfig {
    fn default() -> Self {
        Self {
            cos_th: 0.49,
            r_scale: 10.07,
            t_scale: -1.72,
            g_scale: -2.05,
        }
    }
}

/// Configuration file layout: one section per model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfigs {
    #[serde(rename = "SynapticRAG")]
    pub synaptic: EngineConfig,
    #[serde(rename = "MemoryBank")]
    pub memorybank: MemoryBankConfig,
    #[serde(rename = "MemoryBank (Adt)")]
    pub memorybank_adapted: MemoryBankAdaptedConfig,
    #[serde(rename = "MyAgent")]
    pub myagent: MyAgentConfig,
    #[serde(rename = "MyAgent (Adt)")]
    pub myagent_adapted: MyAgentAdaptedConfig,
}

impl ModelConfigs {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.synaptic.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuned_defaults() {
        let c = EngineConfig::default();
        assert_eq!(
            [c.cos_th, c.v_th, c.stim_th, c.tau_init, c.tau_scale, c.t_scale, c.p_scale, c.v_rest, c.i_rest],
            [0.26, 0.01, 0.04, 43.07, 2.70, 7.93, 0.46, 2.90, -7.13]
        );
        c.validate().unwrap();
        let t = EngineConfig::preset(Preset::Precise);
        assert_eq!((t.cos_th, t.v_th, t.stim_th), (0.262, 0.099, 0.037));
        assert_eq!((t.v_rest, t.i_rest), (2.903, -7.128));
    }

    #[test]
    fn baseline_defaults() {
        let m = MemoryBankAdaptedConfig::default();
        assert_eq!((m.top_k, m.theta, m.t_scale, m.s_scale, m.s_init), (7, 0.12, 13.82, 9.06, 0.05));
        let a = MyAgentAdaptedConfig::default();
        assert_eq!((a.cos_th, a.r_scale, a.t_scale, a.g_scale), (0.49, 10.07, -1.72, -2.05));
        assert_eq!(MyAgentConfig::default().cos_th, 0.30);
    }

    #[test]
    fn file_uses_short_names() {
        let json = serde_json::to_value(ModelConfigs::default()).unwrap();
        assert_eq!(json["SynapticRAG"]["V_th"], 0.01);
        assert_eq!(json["SynapticRAG"]["P_scale"], 0.46);
        assert_eq!(json["MemoryBank (Adt)"]["Top_k"], 7);
        let parsed =
            ModelConfigs::from_json(r#"{"SynapticRAG": {"V_th": 0.099, "variant": "centroid"}}"#)
                .unwrap();
        assert_eq!(parsed.synaptic.v_th, 0.099);
        assert_eq!(parsed.synaptic.variant, PropagationVariant::Centroid);
        assert_eq!(parsed.synaptic.cos_th, 0.26);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ModelConfigs::from_json(r#"{"SynapticRAG": {"tau_init": 0}}"#).is_err());
        assert!(ModelConfigs::from_json(r#"{"SynapticRAG": {"bogus": 1}}"#).is_err());
        let c = EngineConfig {
            tau_scale: -1.0,
            ..EngineConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
