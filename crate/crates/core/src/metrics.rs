//! Observables: per-layer mean and dispersion over time, opinion shifts,
//! and a convergence diagnostic.

use crate::engine::OpinionState;
use crate::model::running_mean;
use crate::network::{csv_field, MultilayerNetwork};

pub const DEFAULT_SHIFT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStats {
    pub layer_id: usize,
    pub mean_opinion: f64,
    /// Population standard deviation.
    pub stddev_opinion: f64,
    pub population: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFrame {
    pub step: u64,
    /// Indexed by layer id; entry 0 is the personal layer.
    pub layers: Vec<LayerStats>,
}

impl MetricsFrame {
    /// Largest standard deviation over the interaction layers.
    pub fn max_interaction_stddev(&self) -> f64 {
        self.layers[1..]
            .iter()
            .map(|l| l.stddev_opinion)
            .fold(0.0, f64::max)
    }
}

/// Mean and population standard deviation. Both are `0` for an empty slice.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let Some(mean) = running_mean(values.iter().copied()) else {
        return (0.0, 0.0);
    };
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

pub fn frame(state: &OpinionState, network: &MultilayerNetwork, step: u64) -> MetricsFrame {
    let layers = network
        .layers()
        .iter()
        .map(|l| {
            let values = state.layer(l.id.0);
            let (mean_opinion, stddev_opinion) = mean_stddev(values);
            LayerStats {
                layer_id: l.id.0,
                mean_opinion,
                stddev_opinion,
                population: values.len(),
            }
        })
        .collect();
    MetricsFrame { step, layers }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    None,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub actor_id: usize,
    pub layer_id: usize,
    pub initial: f64,
    pub final_opinion: f64,
    pub delta: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShiftReport {
    pub threshold: f64,
    /// Ordered by actor, then layer.
    pub entries: Vec<Shift>,
}

impl ShiftReport {
    pub fn count(&self, direction: Direction) -> usize {
        self.entries.iter().filter(|s| s.direction == direction).count()
    }
}

/// `|delta| >= threshold` in the matching direction; a zero delta is never a shift.
pub fn classify_shift(delta: f64, threshold: f64) -> Direction {
    if delta > 0.0 && delta >= threshold {
        Direction::Up
    } else if delta < 0.0 && delta <= -threshold {
        Direction::Down
    } else {
        Direction::None
    }
}

/// Compares every actor present in both states on every layer.
pub fn shifts(initial: &OpinionState, final_state: &OpinionState, threshold: f64) -> ShiftReport {
    let n = initial.n_actors().min(final_state.n_actors());
    let layers = initial.n_layers().min(final_state.n_layers());
    let mut entries = Vec::with_capacity(n * layers);
    for actor_id in 0..n {
        for layer_id in 0..layers {
            let a = initial.opinion(actor_id, layer_id);
            let b = final_state.opinion(actor_id, layer_id);
            let delta = b - a;
            entries.push(Shift {
                actor_id,
                layer_id,
                initial: a,
                final_opinion: b,
                delta,
                direction: classify_shift(delta, threshold),
            });
        }
    }
    ShiftReport { threshold, entries }
}

/// First step from which every layer mean stays within `epsilon` of its
/// final value.
///
/// The last frame always agrees with itself, so it only counts as a
/// convergence point when it is the whole history; agreement that starts
/// at the last frame of a longer history yields `None`.
pub fn convergence_step(history: &[MetricsFrame], epsilon: f64) -> Option<u64> {
    let last = history.last()?;
    let within = |f: &MetricsFrame| {
        f.layers
            .iter()
            .zip(&last.layers)
            .all(|(a, b)| (a.mean_opinion - b.mean_opinion).abs() <= epsilon)
    };
    let mut first = history.len() - 1;
    while first > 0 && within(&history[first - 1]) {
        first -= 1;
    }
    if first == history.len() - 1 && history.len() > 1 {
        None
    } else {
        Some(history[first].step)
    }
}

pub fn metrics_csv(history: &[MetricsFrame], network: &MultilayerNetwork) -> String {
    let mut out = String::from("step,layer_id,layer_name,population,mean_opinion,stddev_opinion\n");
    for f in history {
        for l in &f.layers {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                f.step,
                l.layer_id,
                csv_field(&network.layers()[l.layer_id].name),
                l.population,
                l.mean_opinion,
                l.stddev_opinion
            ));
        }
    }
    out
}

pub fn shifts_csv(report: &ShiftReport) -> String {
    let mut out = String::from("actor_id,layer_id,initial,final,delta,direction\n");
    for s in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.actor_id,
            s.layer_id,
            s.initial,
            s.final_opinion,
            s.delta,
            s.direction.as_str()
        ));
    }
    out
}
