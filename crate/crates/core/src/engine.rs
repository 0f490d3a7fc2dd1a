//! Simulation loop.
//!
//! A run is a pure function of its [`ScenarioConfig`]. Randomness is drawn
//! from independent substreams of the scenario seed in this order:
//!
//! * `InitTraits`: per actor, conformity, authority, openness, sociability.
//! * `InitOpinions`: per interaction layer, per actor, one opinion.
//! * `InitEdges`: per interaction layer, per pair `u < v`, one edge draw.
//! * `Schedule`: per step, one shuffle of the actor order, then per
//!   interaction layer, per actor in that order, per neighbor ascending, one
//!   interaction draw.
//! * `Injection`: traits, opinions and edges of injected actors, in the same
//!   order as initialisation.
//!
//! Updates are sequential: an interaction rewrites the initiator's opinion
//! and personal opinion immediately, and later interactions in the same step
//! see the new values. Only the initiator changes.

use thiserror::Error;

use crate::config::{ConfigError, InteractionModel, ScenarioConfig, TraitRanges};
use crate::metrics::{self, MetricsFrame, ShiftReport};
use crate::model::{
    self, running_mean, AgentTraits, ModelVariant, NeighborhoodStats,
};
use crate::network::{MultilayerNetwork, NetworkError};
use crate::rng::{SimRng, Substream};
use crate::ActorId;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("imported population has {got} actors, scenario expects {expected}")]
    PopulationMismatch { expected: usize, got: usize },
}

/// Expressed opinions per layer. Layer 0 holds the personal opinion, which
/// is kept equal to the mean over the interaction layers.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    layers: Vec<Vec<f64>>,
}

impl OpinionState {
    /// All opinions zero.
    pub fn zeroed(n_actors: usize, n_layers: usize) -> Self {
        OpinionState {
            layers: vec![vec![0.0; n_actors]; n_layers],
        }
    }

    pub fn n_actors(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn opinion(&self, actor: usize, layer: usize) -> f64 {
        self.layers[layer][actor]
    }

    #[inline]
    pub fn personal(&self, actor: usize) -> f64 {
        self.layers[0][actor]
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.layers[layer]
    }

    /// Sets an expressed opinion and refreshes the actor's personal opinion.
    pub fn set(&mut self, actor: usize, layer: usize, value: f64) {
        debug_assert!(layer != 0, "personal opinion is derived");
        self.layers[layer][actor] = model::clamp_opinion(value);
        self.refresh_personal(actor);
    }

    #[inline]
    pub fn refresh_personal(&mut self, actor: usize) {
        let mean = running_mean(self.layers[1..].iter().map(|l| l[actor])).unwrap_or(0.0);
        self.layers[0][actor] = model::clamp_opinion(mean);
    }

    /// Every expressed opinion set to `value`.
    pub fn fill(&mut self, value: f64) {
        for layer in &mut self.layers[1..] {
            layer.iter_mut().for_each(|x| *x = value);
        }
        for a in 0..self.n_actors() {
            self.refresh_personal(a);
        }
    }

    fn grow(&mut self, n_new: usize) {
        for layer in &mut self.layers {
            layer.resize(layer.len() + n_new, 0.0);
        }
    }

    pub fn all_in_bounds(&self) -> bool {
        self.layers
            .iter()
            .flatten()
            .all(|x| (-1.0..=1.0).contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    Initial,
    /// Taken right after an injection, before that step's interactions.
    Injection,
    Stride,
    Final,
}

impl SnapshotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SnapshotKind::Initial => "initial",
            SnapshotKind::Injection => "injection",
            SnapshotKind::Stride => "stride",
            SnapshotKind::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub kind: SnapshotKind,
    pub state: OpinionState,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub traits: Vec<AgentTraits>,
    pub network: MultilayerNetwork,
    pub final_state: OpinionState,
    /// One frame per step, starting with step 0.
    pub history: Vec<MetricsFrame>,
    pub snapshots: Vec<Snapshot>,
    pub shifts: ShiftReport,
}

pub struct SimulationRun {
    config: ScenarioConfig,
    traits: Vec<AgentTraits>,
    network: MultilayerNetwork,
    state: OpinionState,
    step: u64,
    schedule_rng: SimRng,
    injection_rng: SimRng,
    history: Vec<MetricsFrame>,
    snapshots: Vec<Snapshot>,
    /// Initial opinions, extended with each injected actor's opinions at injection.
    baseline: OpinionState,
    /// `[layer][actor]` mean authority and openness of the neighbors; static
    /// between injections.
    neighborhood_traits: Vec<Vec<(f64, f64)>>,
    order: Vec<usize>,
}

fn sample_traits(rng: &mut SimRng, ranges: &TraitRanges, ids: std::ops::Range<usize>) -> Vec<AgentTraits> {
    ids.map(|i| AgentTraits {
        actor_id: ActorId::from_index(i),
        conformity: rng.uniform(ranges.conformity.lo, ranges.conformity.hi),
        authority: rng.uniform(ranges.authority.lo, ranges.authority.hi),
        openness: rng.uniform(ranges.openness.lo, ranges.openness.hi),
        sociability: rng.uniform(ranges.sociability.lo, ranges.sociability.hi),
    })
    .collect()
}

fn sample_opinions(
    rng: &mut SimRng,
    config: &ScenarioConfig,
    state: &mut OpinionState,
    ids: std::ops::Range<usize>,
) {
    let r = config.opinion_init;
    for layer in 1..state.n_layers() {
        for a in ids.clone() {
            state.layers[layer][a] = rng.uniform(r.lo, r.hi);
        }
    }
    for a in ids {
        state.refresh_personal(a);
    }
}

impl SimulationRun {
    /// Validates the config and draws traits, opinions and edges.
    pub fn new(config: ScenarioConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let n = config.n_actors;
        let mut trng = SimRng::substream(config.seed, Substream::InitTraits);
        let traits = sample_traits(&mut trng, &config.traits, 0..n);
        let mut erng = SimRng::substream(config.seed, Substream::InitEdges);
        let network = MultilayerNetwork::generate(
            n,
            &config.layer_names,
            config.edge_model,
            &traits,
            &mut erng,
        )?;
        Self::assemble(config, traits, network)
    }

    /// Runs on a fixed population and topology; only opinions are drawn.
    pub fn with_population(
        config: ScenarioConfig,
        traits: Vec<AgentTraits>,
        network: MultilayerNetwork,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        for got in [traits.len(), network.n_actors()] {
            if got != config.n_actors {
                return Err(EngineError::PopulationMismatch {
                    expected: config.n_actors,
                    got,
                });
            }
        }
        if network.layer_names() != config.layer_names {
            return Err(EngineError::Network(NetworkError::Csv {
                record: 0,
                message: "network layers differ from scenario layers".into(),
            }));
        }
        Self::assemble(config, traits, network)
    }

    fn assemble(
        config: ScenarioConfig,
        traits: Vec<AgentTraits>,
        network: MultilayerNetwork,
    ) -> Result<Self, EngineError> {
        let n = config.n_actors;
        let mut state = OpinionState::zeroed(n, config.layer_names.len());
        let mut orng = SimRng::substream(config.seed, Substream::InitOpinions);
        sample_opinions(&mut orng, &config, &mut state, 0..n);

        let mut run = SimulationRun {
            schedule_rng: SimRng::substream(config.seed, Substream::Schedule),
            injection_rng: SimRng::substream(config.seed, Substream::Injection),
            traits,
            network,
            baseline: state.clone(),
            history: Vec::new(),
            snapshots: Vec::new(),
            state,
            step: 0,
            neighborhood_traits: Vec::new(),
            order: Vec::with_capacity(config.final_population()),
            config,
        };
        run.refresh_neighborhood_traits();
        run.history.push(metrics::frame(&run.state, &run.network, 0));
        run.snapshots.push(Snapshot {
            step: 0,
            kind: SnapshotKind::Initial,
            state: run.state.clone(),
        });
        Ok(run)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn traits(&self) -> &[AgentTraits] {
        &self.traits
    }

    pub fn network(&self) -> &MultilayerNetwork {
        &self.network
    }

    pub fn state(&self) -> &OpinionState {
        &self.state
    }

    /// Direct access for seeding hand-built states. Personal opinions are
    /// the caller's responsibility (see [`OpinionState::set`]).
    pub fn state_mut(&mut self) -> &mut OpinionState {
        &mut self.state
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps
    }

    pub fn history(&self) -> &[MetricsFrame] {
        &self.history
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    fn refresh_neighborhood_traits(&mut self) {
        let traits = &self.traits;
        let net = &self.network;
        self.neighborhood_traits = (0..net.layers().len())
            .map(|layer| {
                if layer == 0 {
                    return Vec::new();
                }
                (0..net.n_actors())
                    .map(|a| {
                        let nbrs = net.neighbors_of(a, layer);
                        let auth = running_mean(nbrs.iter().map(|b| traits[b.index()].authority));
                        let open = running_mean(nbrs.iter().map(|b| traits[b.index()].openness));
                        (auth.unwrap_or(0.0), open.unwrap_or(0.0))
                    })
                    .collect()
            })
            .collect();
    }

    /// Adds `n_new` fresh actors to every layer. Returns their ids.
    pub fn inject(&mut self, n_new: usize) -> Result<std::ops::Range<usize>, EngineError> {
        let start = self.network.n_actors();
        let end = start + n_new;
        let rng = &mut self.injection_rng;
        self.traits
            .extend(sample_traits(rng, &self.config.traits, start..end));
        self.state.grow(n_new);
        sample_opinions(rng, &self.config, &mut self.state, start..end);
        let ids = self
            .network
            .add_actors(n_new, self.config.edge_model, &self.traits, rng)?;
        self.baseline.grow(n_new);
        for layer in 0..self.state.n_layers() {
            for a in ids.clone() {
                self.baseline.layers[layer][a] = self.state.layers[layer][a];
            }
        }
        self.refresh_neighborhood_traits();
        Ok(ids)
    }

    /// Advances one step. No-op once the run is finished.
    pub fn step(&mut self) -> Result<(), EngineError> {
        if self.is_finished() {
            return Ok(());
        }
        self.step += 1;
        let step = self.step;

        let pending: Vec<usize> = self
            .config
            .injections
            .iter()
            .filter(|i| i.step == step)
            .map(|i| i.n_new)
            .collect();
        for n_new in pending {
            self.inject(n_new)?;
            self.snapshots.push(Snapshot {
                step,
                kind: SnapshotKind::Injection,
                state: self.state.clone(),
            });
        }

        self.interact();
        debug_assert!(self.state.all_in_bounds());

        self.history
            .push(metrics::frame(&self.state, &self.network, step));
        if step == self.config.steps {
            self.snapshots.push(Snapshot {
                step,
                kind: SnapshotKind::Final,
                state: self.state.clone(),
            });
        } else if step % self.config.snapshot_stride == 0 {
            self.snapshots.push(Snapshot {
                step,
                kind: SnapshotKind::Stride,
                state: self.state.clone(),
            });
        }
        Ok(())
    }

    fn interact(&mut self) {
        let n = self.network.n_actors();
        self.order.clear();
        self.order.extend(0..n);
        self.schedule_rng.shuffle(&mut self.order);

        let variant = self.config.variant;
        let interaction = self.config.interaction;
        for layer in 1..self.network.layers().len() {
            for &a in &self.order {
                let p = match interaction {
                    InteractionModel::Fixed(p) => p,
                    InteractionModel::Sociability => self.traits[a].sociability,
                };
                let nbrs = self.network.neighbors_of(a, layer);
                for &b in nbrs {
                    if !self.schedule_rng.chance(p) {
                        continue;
                    }
                    let b = b.index();
                    let o_a = self.state.layers[layer][a];
                    let o_b = self.state.layers[layer][b];
                    let c_a = self.traits[a].conformity;
                    let next = match variant {
                        ModelVariant::ConformityOnly => model::update_conformity_only(o_a, o_b, c_a),
                        ModelVariant::Full => {
                            let opinions = &self.state.layers[layer];
                            let (mean_authority, mean_openness) = self.neighborhood_traits[layer][a];
                            let stats = NeighborhoodStats {
                                mean_opinion: running_mean(nbrs.iter().map(|x| opinions[x.index()]))
                                    .unwrap_or(o_a),
                                mean_authority,
                                mean_openness,
                                neighbor_count: nbrs.len(),
                            };
                            model::update_full(o_a, o_b, self.traits[b].authority, c_a, &stats)
                                .expect("an interaction partner is a neighbor")
                        }
                    };
                    self.state.layers[layer][a] = next;
                    self.state.refresh_personal(a);
                }
            }
        }
    }

    /// Runs the remaining steps and packages the results.
    pub fn run_to_completion(mut self) -> Result<RunOutput, EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.finish())
    }

    /// Packages the current state as a result without stepping further.
    pub fn finish(self) -> RunOutput {
        let shifts = metrics::shifts(&self.baseline, &self.state, metrics::DEFAULT_SHIFT_THRESHOLD);
        RunOutput {
            config: self.config,
            traits: self.traits,
            network: self.network,
            final_state: self.state,
            history: self.history,
            snapshots: self.snapshots,
            shifts,
        }
    }
}

/// `step,kind,actor_id,layer_id,opinion`, one row per actor and layer.
pub fn snapshots_csv<'a, I: IntoIterator<Item = &'a Snapshot>>(snapshots: I) -> String {
    let mut out = String::from("step,kind,actor_id,layer_id,opinion\n");
    for snap in snapshots {
        for a in 0..snap.state.n_actors() {
            for l in 0..snap.state.n_layers() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    snap.step,
                    snap.kind.as_str(),
                    a,
                    l,
                    snap.state.opinion(a, l)
                ));
            }
        }
    }
    out
}
