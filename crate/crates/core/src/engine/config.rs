use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Acknowledge switches with the new behaviour's goal description.
    #[default]
    GoalTagged,
    /// Never look at goal descriptions.
    GoalFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    /// One committed behaviour at a time, others suspended on a stack.
    #[default]
    Sequential,
    /// Chat-room style: several trajectories live at once.
    Parallel,
}

/// Engine settings. Key names are the config-file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub mode: Mode,
    pub modality: Modality,
    pub sanction_threshold: u32,
    pub institution: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greeting: Option<String>,
    pub timeout_ms: u64,
    pub reference_clock: DateTime<Utc>,
    pub patience_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::GoalTagged,
            modality: Modality::Sequential,
            sanction_threshold: 2,
            institution: "the booking service".to_string(),
            greeting: None,
            timeout_ms: 10_000,
            reference_clock: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            patience_ms: 30_000,
        }
    }
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// This config with the keys of `overrides` (a JSON object) replaced.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let mut base = serde_json::to_value(self)?;
        if let (Some(base), Some(over)) = (base.as_object_mut(), overrides.as_object()) {
            for (k, v) in over {
                base.insert(k.clone(), v.clone());
            }
        } else if !overrides.is_null() {
            return Err(serde::de::Error::custom("config overrides must be an object"));
        }
        serde_json::from_value(base)
    }
}
