//! Continuous opinion dynamics on multilayer social networks.
//!
//! Agents carry static conformity, authority, openness and sociability
//! traits and express one opinion in `[-1, 1]` per social circle (layer).
//! Two update rules are provided: a conformity-only blend and a full rule
//! that also weighs the interlocutor's authority against the neighborhood
//! and the opinion gap against the neighborhood's openness.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod config;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod network;
pub mod rng;

pub use config::{ConfigError, InteractionModel, ScenarioConfig};
pub use engine::{EngineError, OpinionState, RunOutput, SimulationRun, Snapshot, SnapshotKind};
pub use metrics::{Direction, MetricsFrame, ShiftReport};
pub use model::{AgentTraits, ModelVariant, NeighborhoodStats};
pub use network::{EdgeModel, MultilayerNetwork, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActorId(pub u32);

impl ActorId {
    #[inline]
    pub fn from_index(i: usize) -> Self {
        ActorId(i as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Layer index; 0 is the personal-opinion layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerId(pub usize);

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
