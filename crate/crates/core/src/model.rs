//! Agent traits and the two opinion update rules.
//!
//! Everything here is a pure function of its arguments. Opinions live in
//! `[-1, 1]`, traits in `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ActorId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("neighborhood statistics need at least one neighbor")]
    EmptyNeighborhood,
    #[error("personal opinion needs at least one interaction layer")]
    NoInteractionLayers,
    #[error("trait `{name}` = {value} is outside [0, 1]")]
    TraitOutOfRange { name: &'static str, value: f64 },
}

/// Static per-agent parameters, fixed at creation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentTraits {
    pub actor_id: ActorId,
    pub conformity: f64,
    pub authority: f64,
    pub openness: f64,
    pub sociability: f64,
}

impl AgentTraits {
    pub fn new(
        actor_id: ActorId,
        conformity: f64,
        authority: f64,
        openness: f64,
        sociability: f64,
    ) -> Result<Self, ModelError> {
        for (name, value) in [
            ("conformity", conformity),
            ("authority", authority),
            ("openness", openness),
            ("sociability", sociability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::TraitOutOfRange { name, value });
            }
        }
        Ok(AgentTraits {
            actor_id,
            conformity,
            authority,
            openness,
            sociability,
        })
    }
}

/// Which update rule the engine applies on each interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Conformity-weighted blend towards the interlocutor only.
    ConformityOnly,
    /// Four-way rule gated by authority and openness.
    Full,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::ConformityOnly => "conformity_only",
            ModelVariant::Full => "full",
        }
    }
}

/// Averages over agent A's neighbors in one layer, B included, A excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodStats {
    pub mean_opinion: f64,
    pub mean_authority: f64,
    pub mean_openness: f64,
    pub neighbor_count: usize,
}

/// Arithmetic mean computed as a running update `m += (x - m) / k`.
///
/// A constant sequence yields that constant bit-for-bit and every partial
/// result stays inside the hull of the values seen so far. Returns `None`
/// for an empty input.
pub fn running_mean<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let mut iter = values.into_iter();
    let mut mean = iter.next()?;
    let mut count = 1.0;
    for x in iter {
        count += 1.0;
        mean += (x - mean) / count;
    }
    Some(mean)
}

/// `(1 - c) * from + c * towards`.
///
/// Evaluated from whichever endpoint is closer in weight so that `c = 0`
/// returns `from`, `c = 1` returns `towards` and `from == towards` returns it
/// unchanged, all exactly. The result never leaves `[min, max]` of the two
/// opinions.
#[inline]
pub fn blend(from: f64, towards: f64, c: f64) -> f64 {
    let diff = towards - from;
    if c < 0.5 {
        from + c * diff
    } else {
        towards - (1.0 - c) * diff
    }
}

/// Conformity-only rule: A moves towards B by its conformity.
#[inline]
pub fn update_conformity_only(o_a: f64, o_b: f64, c_a: f64) -> f64 {
    clamp_opinion(blend(o_a, o_b, c_a))
}

/// Which branch of the full rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullCase {
    /// Authoritative but too distant: blend neighborhood mean towards B.
    AuthoritativeDistant,
    /// Authoritative and close enough: adopt B's opinion.
    AuthoritativeClose,
    /// Not authoritative and distant: push A away from B towards a pole.
    Radicalize,
    /// Not authoritative but close: consolidate A with the neighborhood mean.
    Consolidate,
}

/// Picks the branch. Ties (`a_b == mean_authority`, `|Δ| == mean_openness`)
/// fall into the non-authoritative / not-too-distant side.
pub fn classify_full(o_a: f64, o_b: f64, a_b: f64, stats: &NeighborhoodStats) -> FullCase {
    let authoritative = a_b > stats.mean_authority;
    let distant = (o_b - o_a).abs() > stats.mean_openness;
    match (authoritative, distant) {
        (true, true) => FullCase::AuthoritativeDistant,
        (true, false) => FullCase::AuthoritativeClose,
        (false, true) => FullCase::Radicalize,
        (false, false) => FullCase::Consolidate,
    }
}

/// Full rule combining authority, openness and conformity.
pub fn update_full(
    o_a: f64,
    o_b: f64,
    a_b: f64,
    c_a: f64,
    stats: &NeighborhoodStats,
) -> Result<f64, ModelError> {
    if stats.neighbor_count == 0 {
        return Err(ModelError::EmptyNeighborhood);
    }
    let next = match classify_full(o_a, o_b, a_b, stats) {
        FullCase::AuthoritativeDistant => blend(stats.mean_opinion, o_b, c_a),
        FullCase::AuthoritativeClose => o_b,
        // distance > mean_openness >= 0 rules out o_a == o_b here
        FullCase::Radicalize => blend(o_a, (o_a - o_b).signum(), c_a),
        FullCase::Consolidate => blend(o_a, stats.mean_opinion, c_a),
    };
    Ok(clamp_opinion(next))
}

/// Personal opinion: mean of the expressed opinions across interaction layers.
pub fn update_personal(opinions: &[f64]) -> Result<f64, ModelError> {
    running_mean(opinions.iter().copied())
        .map(clamp_opinion)
        .ok_or(ModelError::NoInteractionLayers)
}

#[inline]
pub fn clamp_opinion(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}
