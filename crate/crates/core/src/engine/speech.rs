//! Surface text. Goal descriptions are read here and in `explain`, nowhere
//! else.

use super::config::Mode;
use crate::library::Behaviour;

pub const OPENER: &str = "How can I help?";
pub const FLOOR_OFFER: &str = "Anything else?";
pub const UPTAKE: &str = "okay —";

#[derive(Debug, Clone, Copy)]
pub(crate) struct Speech {
    pub mode: Mode,
}

impl Speech {
    fn goal<'b>(&self, b: &'b Behaviour) -> Option<&'b str> {
        match self.mode {
            Mode::GoalTagged => b.goal_description.as_deref(),
            Mode::GoalFree => None,
        }
    }

    /// Uptake when switching to `b` because the user's talk fit it.
    pub fn acknowledge(&self, b: &Behaviour) -> String {
        match self.goal(b) {
            Some(goal) => format!("Oh, you want to {goal}."),
            None => UPTAKE.to_string(),
        }
    }

    pub fn completed(&self, b: &Behaviour) -> String {
        match self.goal(b) {
            Some(goal) => format!("Right, I'll {goal} for you."),
            None => "Right, done.".to_string(),
        }
    }

    /// Name used when talking about a behaviour.
    pub fn name<'b>(&self, b: &'b Behaviour) -> &'b str {
        self.goal(b).unwrap_or(&b.id)
    }

    /// Negotiation when `wanted` bumps into the already running `earlier`.
    pub fn negotiate(&self, earlier: &Behaviour) -> String {
        match self.goal(earlier) {
            Some(goal) => format!("Can I just {goal} first?"),
            None => format!("Can I just finish {} first?", earlier.id),
        }
    }
}
