use serde::{Deserialize, Serialize};

pub type AgentId = usize;

/// Environment-specific action label. Actions are enumerated in ascending order.
pub type Action = u32;

/// An agent's ordered list of actions measured from its episode start.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSequence {
    pub agent: AgentId,
    pub actions: Vec<Action>,
}

impl ActionSequence {
    pub fn new(agent: AgentId, actions: Vec<Action>) -> Self {
        Self { agent, actions }
    }

    pub fn empty(agent: AgentId) -> Self {
        Self {
            agent,
            actions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}
