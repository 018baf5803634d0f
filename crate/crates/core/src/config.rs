//! Scenario configuration, read from a sectioned TOML file.
//!
//! Every key is optional; omitted keys take the dumbbell defaults (five
//! flows, 100 Mbps / 10 ms access links, 10 Mbps / 40 ms bottleneck, 2000 B
//! packets, 4000 B bottleneck buffer, 100 s). Unknown keys are rejected.
//!
//! ```toml
//! [scenario]
//! duration_s = 100.0
//! seed = 42
//!
//! [bottleneck]
//! rate_mbps = 5.0
//! aqm = "rem"
//!
//! [aqm.rem]
//! gamma = 0.002
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aqm::{DisciplineKind, DisciplineParams};
use crate::error::ConfigError;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub duration_s: f64,
    pub seed: u64,
    pub packet_size_bytes: u32,
    /// Buffer of each bottleneck direction.
    pub buffer_bytes: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            duration_s: 100.0,
            seed: 42,
            packet_size_bytes: 2000,
            buffer_bytes: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BottleneckSection {
    pub rate_mbps: f64,
    /// One-way propagation delay.
    pub delay_ms: f64,
    pub aqm: DisciplineKind,
}

impl Default for BottleneckSection {
    fn default() -> Self {
        BottleneckSection {
            rate_mbps: 10.0,
            delay_ms: 40.0,
            aqm: DisciplineKind::Red,
        }
    }
}

/// Host-to-router links; always DropTail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessSection {
    pub rate_mbps: f64,
    pub delay_ms: f64,
    pub buffer_bytes: u64,
}

impl Default for AccessSection {
    fn default() -> Self {
        AccessSection {
            rate_mbps: 100.0,
            delay_ms: 10.0,
            buffer_bytes: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowsSection {
    pub count: u32,
    /// Flow i starts at `i * stagger_ms`.
    pub stagger_ms: f64,
}

impl Default for FlowsSection {
    fn default() -> Self {
        FlowsSection {
            count: 5,
            stagger_ms: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcpSection {
    /// Packets.
    pub initial_cwnd: f64,
    /// Packets.
    pub initial_ssthresh: f64,
    pub initial_rto_s: f64,
    pub max_rto_s: f64,
    /// Receiver-advertised window in packets; unlimited when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_window: Option<f64>,
    pub ack_size_bytes: u32,
}

impl Default for TcpSection {
    fn default() -> Self {
        TcpSection {
            initial_cwnd: 1.0,
            initial_ssthresh: 64.0,
            initial_rto_s: 1.0,
            max_rto_s: 64.0,
            max_window: None,
            ack_size_bytes: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub bottleneck: BottleneckSection,
    pub access: AccessSection,
    pub flows: FlowsSection,
    pub tcp: TcpSection,
    pub aqm: DisciplineParams,
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: format!("must be positive, got {v}"),
        })
    }
}

fn nonnegative(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: format!("must be nonnegative, got {v}"),
        })
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        positive("scenario.duration_s", s.duration_s)?;
        positive("scenario.packet_size_bytes", s.packet_size_bytes as f64)?;
        if s.buffer_bytes < s.packet_size_bytes as u64 {
            return Err(ConfigError::Invalid {
                key: "scenario.buffer_bytes",
                reason: format!(
                    "{} cannot hold a single {}-byte packet",
                    s.buffer_bytes, s.packet_size_bytes
                ),
            });
        }
        positive("bottleneck.rate_mbps", self.bottleneck.rate_mbps)?;
        nonnegative("bottleneck.delay_ms", self.bottleneck.delay_ms)?;
        positive("access.rate_mbps", self.access.rate_mbps)?;
        nonnegative("access.delay_ms", self.access.delay_ms)?;
        if self.access.buffer_bytes < s.packet_size_bytes as u64 {
            return Err(ConfigError::Invalid {
                key: "access.buffer_bytes",
                reason: format!(
                    "{} cannot hold a single {}-byte packet",
                    self.access.buffer_bytes, s.packet_size_bytes
                ),
            });
        }
        if self.flows.count == 0 {
            return Err(ConfigError::Invalid {
                key: "flows.count",
                reason: "at least one flow is required".into(),
            });
        }
        nonnegative("flows.stagger_ms", self.flows.stagger_ms)?;
        if !(self.tcp.initial_cwnd >= 1.0) {
            return Err(ConfigError::Invalid {
                key: "tcp.initial_cwnd",
                reason: format!("must be at least 1, got {}", self.tcp.initial_cwnd),
            });
        }
        if !(self.tcp.initial_ssthresh >= 2.0) {
            return Err(ConfigError::Invalid {
                key: "tcp.initial_ssthresh",
                reason: format!("must be at least 2, got {}", self.tcp.initial_ssthresh),
            });
        }
        positive("tcp.initial_rto_s", self.tcp.initial_rto_s)?;
        if !(self.tcp.max_rto_s >= self.tcp.initial_rto_s) {
            return Err(ConfigError::Invalid {
                key: "tcp.max_rto_s",
                reason: "must be at least tcp.initial_rto_s".into(),
            });
        }
        if let Some(w) = self.tcp.max_window {
            if !(w >= 1.0) {
                return Err(ConfigError::Invalid {
                    key: "tcp.max_window",
                    reason: format!("must be at least 1, got {w}"),
                });
            }
        }
        positive("tcp.ack_size_bytes", self.tcp.ack_size_bytes as f64)?;
        if self.tcp.ack_size_bytes as u64 > s.buffer_bytes {
            return Err(ConfigError::Invalid {
                key: "tcp.ack_size_bytes",
                reason: "larger than the bottleneck buffer".into(),
            });
        }
        self.aqm.validate()
    }

    pub fn with_aqm(mut self, aqm: DisciplineKind) -> Self {
        self.bottleneck.aqm = aqm;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }

    pub fn with_bottleneck_rate_mbps(mut self, rate: f64) -> Self {
        self.bottleneck.rate_mbps = rate;
        self
    }

    pub fn with_duration_s(mut self, duration: f64) -> Self {
        self.scenario.duration_s = duration;
        self
    }

    pub fn bottleneck_rate_bps(&self) -> f64 {
        self.bottleneck.rate_mbps * 1e6
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.scenario.duration_s).expect("validated duration")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.scenario.packet_size_bytes, 2000);
        assert_eq!(cfg.scenario.buffer_bytes, 4000);
        assert_eq!(cfg.scenario.duration_s, 100.0);
        assert_eq!(cfg.bottleneck.rate_mbps, 10.0);
        assert_eq!(cfg.bottleneck.delay_ms, 40.0);
        assert_eq!(cfg.access.rate_mbps, 100.0);
        assert_eq!(cfg.access.delay_ms, 10.0);
        assert_eq!(cfg.flows.count, 5);
        assert_eq!(cfg.scenario.seed, 42);
    }

    #[test]
    fn dump_parse_dump_is_idempotent() {
        let first = ScenarioConfig::default().to_toml_string();
        let parsed = ScenarioConfig::from_toml_str(&first).unwrap();
        assert_eq!(parsed, ScenarioConfig::default());
        assert_eq!(parsed.to_toml_string(), first);
    }

    #[test]
    fn overrides_apply() {
        let cfg = ScenarioConfig::from_toml_str(
            "[bottleneck]\nrate_mbps = 5.0\naqm = \"rem\"\n[aqm.rem]\ngamma = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.bottleneck.rate_mbps, 5.0);
        assert_eq!(cfg.bottleneck.aqm, DisciplineKind::Rem);
        assert_eq!(cfg.aqm.rem.gamma, 0.01);
        assert_eq!(cfg.aqm.rem.phi, 1.001);
    }

    #[test]
    fn receiver_window_is_optional() {
        assert!(!ScenarioConfig::default().to_toml_string().contains("max_window"));
        let cfg = ScenarioConfig::from_toml_str("[tcp]\nmax_window = 20.0\n").unwrap();
        assert_eq!(cfg.tcp.max_window, Some(20.0));
        assert_eq!(
            ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
        assert!(ScenarioConfig::from_toml_str("[tcp]\nmax_window = 0.5\n").is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ScenarioConfig::from_toml_str("[scenario]\nduraton_s = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("duraton_s"), "{err}");
        let err = ScenarioConfig::from_toml_str("[nonsense]\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
    }

    #[test]
    fn unknown_aqm_rejected() {
        let err = ScenarioConfig::from_toml_str("[bottleneck]\naqm = \"bogus\"\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn nonpositive_values_rejected() {
        for text in [
            "[bottleneck]\nrate_mbps = 0.0\n",
            "[scenario]\nduration_s = -1.0\n",
            "[flows]\ncount = 0\n",
            "[aqm.red]\nmin_th = 3.0\nmax_th = 2.0\n",
            "[aqm.rem]\nphi = 1.0\n",
            "[aqm.sfq]\nbuckets = 0\n",
        ] {
            assert!(ScenarioConfig::from_toml_str(text).is_err(), "{text}");
        }
    }
}
