//! Scenario files.
//!
//! A scenario is a TOML document. Every key except `n_actors`, `steps` and
//! `layers.names` has a default; [`emit`] always writes every key in a fixed
//! order so emitted files are canonical and diffable.
//!
//! ```toml
//! seed = 42
//! n_actors = 1000
//! steps = 1000
//! variant = "conformity_only"   # or "full"
//! snapshot_stride = 1000        # default: steps
//!
//! [layers]
//! names = ["personal worldview", "workplace", "personal life"]
//!
//! [edges]
//! model = "uniform"             # or "sociability"
//! probability = 0.05
//!
//! [interaction]
//! model = "fixed"               # or "sociability" (no probability key)
//! probability = 0.05
//!
//! [traits]
//! conformity = [0.0, 1.0]
//! authority = [0.0, 1.0]
//! openness = [0.0, 1.0]
//! sociability = [0.0, 1.0]
//!
//! [opinions]
//! init_range = [-1.0, 1.0]
//!
//! [[injection]]
//! step = 500
//! n_new = 250
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelVariant;
use crate::network::EdgeModel;

pub const DEFAULT_EDGE_PROBABILITY: f64 = 0.05;
pub const DEFAULT_INTERACTION_PROBABILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n{}", format_fields(.0))]
    Invalid(Vec<FieldError>),
}

fn format_fields(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {}", e))
        .collect::<Vec<_>>()
        .join("\n")
}

/// How likely an interaction along an existing edge is within one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionModel {
    Fixed(f64),
    /// Uses the initiating agent's sociability.
    Sociability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub step: u64,
    pub n_new: usize,
}

/// Closed interval `[lo, hi]` for uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const UNIT: Range = Range { lo: 0.0, hi: 1.0 };
    pub const OPINION: Range = Range { lo: -1.0, hi: 1.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitRanges {
    pub conformity: Range,
    pub authority: Range,
    pub openness: Range,
    pub sociability: Range,
}

impl Default for TraitRanges {
    fn default() -> Self {
        TraitRanges {
            conformity: Range::UNIT,
            authority: Range::UNIT,
            openness: Range::UNIT,
            sociability: Range::UNIT,
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_actors: usize,
    pub steps: u64,
    pub variant: ModelVariant,
    /// First entry is the personal-opinion layer.
    pub layer_names: Vec<String>,
    pub edge_model: EdgeModel,
    pub interaction: InteractionModel,
    pub injections: Vec<Injection>,
    pub traits: TraitRanges,
    pub opinion_init: Range,
    pub snapshot_stride: u64,
}

impl ScenarioConfig {
    /// A config with every optional field at its default.
    pub fn with_defaults(n_actors: usize, steps: u64, layer_names: Vec<String>) -> Self {
        ScenarioConfig {
            seed: 0,
            n_actors,
            steps,
            variant: ModelVariant::ConformityOnly,
            layer_names,
            edge_model: EdgeModel::Uniform(DEFAULT_EDGE_PROBABILITY),
            interaction: InteractionModel::Fixed(DEFAULT_INTERACTION_PROBABILITY),
            injections: Vec::new(),
            traits: TraitRanges::default(),
            opinion_init: Range::OPINION,
            snapshot_stride: steps,
        }
    }

    pub fn n_interaction_layers(&self) -> usize {
        self.layer_names.len().saturating_sub(1)
    }

    /// Population after all injections.
    pub fn final_population(&self) -> usize {
        self.n_actors + self.injections.iter().map(|i| i.n_new).sum::<usize>()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut fail = |field: &str, reason: String| {
            errs.push(FieldError {
                field: field.to_string(),
                reason,
            })
        };

        if self.seed > i64::MAX as u64 {
            fail("seed", format!("{} exceeds {}", self.seed, i64::MAX));
        }
        if self.n_actors < 2 {
            fail("n_actors", format!("must be at least 2, got {}", self.n_actors));
        }
        if self.steps < 1 {
            fail("steps", "must be at least 1".into());
        }
        if self.snapshot_stride < 1 {
            fail("snapshot_stride", "must be at least 1".into());
        }
        if self.layer_names.len() < 2 {
            fail(
                "layers.names",
                "need the personal layer plus at least one interaction layer".into(),
            );
        }
        for (i, name) in self.layer_names.iter().enumerate() {
            if name.trim().is_empty() {
                fail("layers.names", format!("entry {} is empty", i));
            }
            if self.layer_names[..i].contains(name) {
                fail("layers.names", format!("duplicate layer `{}`", name));
            }
        }
        let p = self.edge_model.probability();
        if !(0.0..=1.0).contains(&p) {
            fail("edges.probability", format!("{} is outside [0, 1]", p));
        }
        if let InteractionModel::Fixed(p) = self.interaction {
            if !(0.0..=1.0).contains(&p) {
                fail("interaction.probability", format!("{} is outside [0, 1]", p));
            }
        }
        for (name, r) in [
            ("traits.conformity", self.traits.conformity),
            ("traits.authority", self.traits.authority),
            ("traits.openness", self.traits.openness),
            ("traits.sociability", self.traits.sociability),
        ] {
            if !(0.0 <= r.lo && r.lo <= r.hi && r.hi <= 1.0) {
                fail(name, format!("[{}, {}] is not a sub-interval of [0, 1]", r.lo, r.hi));
            }
        }
        let r = self.opinion_init;
        if !(-1.0 <= r.lo && r.lo <= r.hi && r.hi <= 1.0) {
            fail(
                "opinions.init_range",
                format!("[{}, {}] is not a sub-interval of [-1, 1]", r.lo, r.hi),
            );
        }
        let mut prev = 0;
        for (i, inj) in self.injections.iter().enumerate() {
            let field = format!("injection[{}]", i);
            if inj.step < 1 {
                fail(&field, "step must be at least 1".into());
            }
            if inj.step <= prev && i > 0 {
                fail(&field, format!("step {} is not after step {}", inj.step, prev));
            }
            if inj.step >= self.steps {
                fail(
                    &field,
                    format!("step {} must be before the last step {}", inj.step, self.steps),
                );
            }
            if inj.n_new < 1 {
                fail(&field, "n_new must be at least 1".into());
            }
            prev = inj.step;
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum EdgeKind {
    Uniform,
    Sociability,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InteractionKind {
    Fixed,
    Sociability,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: Option<u64>,
    n_actors: usize,
    steps: u64,
    variant: Option<ModelVariant>,
    snapshot_stride: Option<u64>,
    layers: LayersSection,
    edges: Option<EdgesSection>,
    interaction: Option<InteractionSection>,
    traits: Option<TraitsSection>,
    opinions: Option<OpinionsSection>,
    #[serde(default)]
    injection: Vec<Injection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayersSection {
    names: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgesSection {
    model: Option<EdgeKind>,
    probability: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionSection {
    model: Option<InteractionKind>,
    probability: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraitsSection {
    conformity: Option<[f64; 2]>,
    authority: Option<[f64; 2]>,
    openness: Option<[f64; 2]>,
    sociability: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpinionsSection {
    init_range: Option<[f64; 2]>,
}

fn range(v: Option<[f64; 2]>, default: Range) -> Range {
    v.map(|[lo, hi]| Range { lo, hi }).unwrap_or(default)
}

/// Parses and validates a scenario, filling defaults.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(text, span.start))
            .unwrap_or((0, 0));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;

    let mut cfg = ScenarioConfig::with_defaults(file.n_actors, file.steps, file.layers.names);
    if let Some(seed) = file.seed {
        cfg.seed = seed;
    }
    if let Some(v) = file.variant {
        cfg.variant = v;
    }
    if let Some(s) = file.snapshot_stride {
        cfg.snapshot_stride = s;
    }
    if let Some(edges) = file.edges {
        let p = edges.probability.unwrap_or(DEFAULT_EDGE_PROBABILITY);
        cfg.edge_model = match edges.model.unwrap_or(EdgeKind::Uniform) {
            EdgeKind::Uniform => EdgeModel::Uniform(p),
            EdgeKind::Sociability => EdgeModel::Sociability(p),
        };
    }
    if let Some(inter) = file.interaction {
        cfg.interaction = match (inter.model.unwrap_or(InteractionKind::Fixed), inter.probability) {
            (InteractionKind::Fixed, p) => {
                InteractionModel::Fixed(p.unwrap_or(DEFAULT_INTERACTION_PROBABILITY))
            }
            (InteractionKind::Sociability, None) => InteractionModel::Sociability,
            (InteractionKind::Sociability, Some(_)) => {
                return Err(ConfigError::Invalid(vec![FieldError {
                    field: "interaction.probability".into(),
                    reason: "not used by the sociability interaction model".into(),
                }]))
            }
        };
    }
    let traits = file.traits.unwrap_or_default();
    cfg.traits = TraitRanges {
        conformity: range(traits.conformity, Range::UNIT),
        authority: range(traits.authority, Range::UNIT),
        openness: range(traits.openness, Range::UNIT),
        sociability: range(traits.sociability, Range::UNIT),
    };
    cfg.opinion_init = range(file.opinions.and_then(|o| o.init_range), Range::OPINION);
    cfg.injections = file.injection;

    cfg.validate()?;
    Ok(cfg)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn float(x: f64) -> String {
    // Debug keeps the trailing `.0`, which TOML needs to read a float back
    format!("{:?}", x)
}

fn pair(r: Range) -> String {
    format!("[{}, {}]", float(r.lo), float(r.hi))
}

fn string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Canonical text for a config. `parse(&emit(c)) == c` for valid configs.
pub fn emit(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!("n_actors = {}\n", cfg.n_actors));
    out.push_str(&format!("steps = {}\n", cfg.steps));
    out.push_str(&format!("variant = {}\n", string(cfg.variant.as_str())));
    out.push_str(&format!("snapshot_stride = {}\n", cfg.snapshot_stride));

    let names = cfg
        .layer_names
        .iter()
        .map(|n| string(n))
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("\n[layers]\nnames = [{}]\n", names));

    let (kind, p) = match cfg.edge_model {
        EdgeModel::Uniform(p) => ("uniform", p),
        EdgeModel::Sociability(p) => ("sociability", p),
    };
    out.push_str(&format!(
        "\n[edges]\nmodel = {}\nprobability = {}\n",
        string(kind),
        float(p)
    ));

    match cfg.interaction {
        InteractionModel::Fixed(p) => out.push_str(&format!(
            "\n[interaction]\nmodel = \"fixed\"\nprobability = {}\n",
            float(p)
        )),
        InteractionModel::Sociability => {
            out.push_str("\n[interaction]\nmodel = \"sociability\"\n")
        }
    }

    let t = &cfg.traits;
    out.push_str(&format!(
        "\n[traits]\nconformity = {}\nauthority = {}\nopenness = {}\nsociability = {}\n",
        pair(t.conformity),
        pair(t.authority),
        pair(t.openness),
        pair(t.sociability)
    ));
    out.push_str(&format!(
        "\n[opinions]\ninit_range = {}\n",
        pair(cfg.opinion_init)
    ));

    for inj in &cfg.injections {
        out.push_str(&format!(
            "\n[[injection]]\nstep = {}\nn_new = {}\n",
            inj.step, inj.n_new
        ));
    }
    out
}
