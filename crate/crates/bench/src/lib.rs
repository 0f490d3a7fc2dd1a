//! Fixtures shared by the benchmarks.

use opinion_core::config::{InteractionModel, ScenarioConfig};
use opinion_core::{EdgeModel, ModelVariant};

pub fn layer_names(interactive: usize) -> Vec<String> {
    std::iter::once("personal worldview".to_string())
        .chain((1..=interactive).map(|i| format!("layer {}", i)))
        .collect()
}

/// The desk-scale shape used by the acceptance runs.
pub fn desk_scenario(variant: ModelVariant, n_actors: usize, steps: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_defaults(n_actors, steps, layer_names(4));
    cfg.seed = 1;
    cfg.variant = variant;
    if variant == ModelVariant::Full {
        cfg.edge_model = EdgeModel::Sociability(0.1);
        cfg.interaction = InteractionModel::Sociability;
    }
    cfg
}
