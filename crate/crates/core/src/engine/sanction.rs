use serde::{Deserialize, Serialize};

use super::config::EngineConfig;

pub const HESITATION: &str = "Um...";
pub const AUTHORITY_TEMPLATE: &str = "You have called <institution>. How can I help?";
pub const FAREWELL: &str = "Goodbye.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rung {
    Say(String),
    Authority,
    Disengage,
}

/// How unaccountable turns escalate. Level `n` (1-based) uses rung `n - 1`;
/// the last rung is always disengagement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanctionPolicy {
    pub threshold_account_fail: u32,
    pub ladder: Vec<Rung>,
    pub authority_statement: String,
}

impl SanctionPolicy {
    /// `threshold - 1` hesitations, then the authority statement, then disengage.
    pub fn new(threshold: u32, institution: &str) -> Self {
        let threshold = threshold.max(1);
        let mut ladder: Vec<Rung> = (1..threshold).map(|_| Rung::Say(HESITATION.into())).collect();
        ladder.push(Rung::Authority);
        ladder.push(Rung::Disengage);
        SanctionPolicy {
            threshold_account_fail: threshold,
            ladder,
            authority_statement: AUTHORITY_TEMPLATE.replace("<institution>", institution),
        }
    }

    pub fn from_config(config: &EngineConfig) -> Self {
        Self::new(config.sanction_threshold, &config.institution)
    }

    pub fn rung(&self, level: u32) -> &Rung {
        let i = (level.max(1) as usize - 1).min(self.ladder.len() - 1);
        &self.ladder[i]
    }

    pub fn text(&self, rung: &Rung) -> String {
        match rung {
            Rung::Say(t) => t.clone(),
            Rung::Authority => self.authority_statement.clone(),
            Rung::Disengage => FAREWELL.to_string(),
        }
    }
}
