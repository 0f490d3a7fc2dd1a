//! Multilayer network: a fixed actor set present on every layer, with
//! undirected edges that never cross layers.
//!
//! Layer 0 is the personal-opinion layer and never carries edges. Neighbor
//! lists are kept sorted by actor id, which the engine relies on for its
//! deterministic iteration order.

use std::collections::BTreeSet;
use std::ops::Range;

use thiserror::Error;

use crate::model::AgentTraits;
use crate::rng::SimRng;
use crate::{ActorId, LayerId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("need at least two actors, got {0}")]
    TooFewActors(usize),
    #[error("need a personal layer followed by at least one interaction layer")]
    NoInteractionLayers,
    #[error("duplicate layer name `{0}`")]
    DuplicateLayer(String),
    #[error("unknown actor {0}")]
    UnknownActor(ActorId),
    #[error("unknown layer {0}")]
    UnknownLayer(LayerId),
    #[error("layer {0} is the personal layer and has no neighbors")]
    PersonalLayer(LayerId),
    #[error("traits cover {got} actors, network needs {expected}")]
    TraitCount { expected: usize, got: usize },
    #[error("malformed network csv at record {record}: {message}")]
    Csv { record: usize, message: String },
}

/// How edges are drawn between a pair of actors on one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeModel {
    /// Every pair connects with the same probability.
    Uniform(f64),
    /// Pair `{u, v}` connects with `base * (S_u + S_v) / 2`.
    Sociability(f64),
}

impl EdgeModel {
    pub fn probability(self) -> f64 {
        match self {
            EdgeModel::Uniform(p) | EdgeModel::Sociability(p) => p,
        }
    }

    fn validate(self) -> Result<(), NetworkError> {
        let p = self.probability();
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(NetworkError::InvalidProbability(p))
        }
    }

    #[inline]
    fn pair_probability(self, u: &AgentTraits, v: &AgentTraits) -> f64 {
        match self {
            EdgeModel::Uniform(p) => p,
            EdgeModel::Sociability(base) => base * (u.sociability + v.sociability) / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub id: LayerId,
    pub name: String,
    pub interactive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerNetwork {
    layers: Vec<Layer>,
    /// `adjacency[layer][actor]`, sorted ascending. Empty for the personal layer.
    adjacency: Vec<Vec<Vec<ActorId>>>,
    n_actors: usize,
}

impl MultilayerNetwork {
    /// An edgeless network. The first name is the personal layer.
    pub fn empty(n_actors: usize, layer_names: &[String]) -> Result<Self, NetworkError> {
        if layer_names.len() < 2 {
            return Err(NetworkError::NoInteractionLayers);
        }
        let mut seen = BTreeSet::new();
        for name in layer_names {
            if !seen.insert(name.as_str()) {
                return Err(NetworkError::DuplicateLayer(name.clone()));
            }
        }
        let layers = layer_names
            .iter()
            .enumerate()
            .map(|(i, name)| Layer {
                id: LayerId(i),
                name: name.clone(),
                interactive: i != 0,
            })
            .collect::<Vec<_>>();
        let adjacency = layers.iter().map(|_| vec![Vec::new(); n_actors]).collect();
        Ok(MultilayerNetwork {
            layers,
            adjacency,
            n_actors,
        })
    }

    /// Draws every interaction layer independently, pairs `(u, v)` with
    /// `u < v` in lexicographic order, one draw per pair.
    pub fn generate(
        n_actors: usize,
        layer_names: &[String],
        edge_model: EdgeModel,
        traits: &[AgentTraits],
        rng: &mut SimRng,
    ) -> Result<Self, NetworkError> {
        if n_actors < 2 {
            return Err(NetworkError::TooFewActors(n_actors));
        }
        edge_model.validate()?;
        if traits.len() != n_actors {
            return Err(NetworkError::TraitCount {
                expected: n_actors,
                got: traits.len(),
            });
        }
        let mut net = Self::empty(n_actors, layer_names)?;
        for layer in 1..net.layers.len() {
            let adj = &mut net.adjacency[layer];
            for u in 0..n_actors {
                for v in (u + 1)..n_actors {
                    if rng.chance(edge_model.pair_probability(&traits[u], &traits[v])) {
                        adj[u].push(ActorId::from_index(v));
                        adj[v].push(ActorId::from_index(u));
                    }
                }
            }
        }
        Ok(net)
    }

    /// Appends `n_new` actors to every layer and samples their edges.
    ///
    /// `traits` must already include the newcomers. For each interaction
    /// layer, each new actor `x` in ascending order draws once against every
    /// actor with a smaller id, so pairs among newcomers are drawn too.
    pub fn add_actors(
        &mut self,
        n_new: usize,
        edge_model: EdgeModel,
        traits: &[AgentTraits],
        rng: &mut SimRng,
    ) -> Result<Range<usize>, NetworkError> {
        edge_model.validate()?;
        let start = self.n_actors;
        let end = start + n_new;
        if traits.len() != end {
            return Err(NetworkError::TraitCount {
                expected: end,
                got: traits.len(),
            });
        }
        for adj in &mut self.adjacency {
            adj.resize_with(end, Vec::new);
        }
        self.n_actors = end;
        for layer in 1..self.layers.len() {
            let adj = &mut self.adjacency[layer];
            for x in start..end {
                for y in 0..x {
                    if rng.chance(edge_model.pair_probability(&traits[x], &traits[y])) {
                        adj[x].push(ActorId::from_index(y));
                        adj[y].push(ActorId::from_index(x));
                    }
                }
            }
        }
        Ok(start..end)
    }

    pub fn n_actors(&self) -> usize {
        self.n_actors
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.layers.iter().map(|l| l.name.clone()).collect()
    }

    pub fn interaction_layers(&self) -> impl Iterator<Item = LayerId> + '_ {
        self.layers.iter().filter(|l| l.interactive).map(|l| l.id)
    }

    pub fn neighbors(&self, actor: ActorId, layer: LayerId) -> Result<&[ActorId], NetworkError> {
        let info = self
            .layers
            .get(layer.0)
            .ok_or(NetworkError::UnknownLayer(layer))?;
        if !info.interactive {
            return Err(NetworkError::PersonalLayer(layer));
        }
        if actor.index() >= self.n_actors {
            return Err(NetworkError::UnknownActor(actor));
        }
        Ok(&self.adjacency[layer.0][actor.index()])
    }

    /// Unchecked variant for hot loops; panics on out-of-range ids.
    #[inline]
    pub fn neighbors_of(&self, actor: usize, layer: usize) -> &[ActorId] {
        &self.adjacency[layer][actor]
    }

    pub fn degree(&self, actor: ActorId, layer: LayerId) -> usize {
        self.adjacency[layer.0][actor.index()].len()
    }

    pub fn edge_count(&self, layer: LayerId) -> usize {
        self.adjacency[layer.0].iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self, layer: LayerId) -> f64 {
        2.0 * self.edge_count(layer) as f64 / self.n_actors as f64
    }

    /// Edges `(layer, u, v)` with `u < v`, ordered by layer then `u` then `v`.
    pub fn edges(&self) -> impl Iterator<Item = (LayerId, ActorId, ActorId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(l, adj)| {
            adj.iter().enumerate().flat_map(move |(u, nbrs)| {
                nbrs.iter()
                    .filter(move |v| v.index() > u)
                    .map(move |&v| (LayerId(l), ActorId::from_index(u), v))
            })
        })
    }

    /// Inserts one undirected edge, keeping neighbor lists sorted. Returns
    /// false if the edge already existed.
    pub fn insert_edge(
        &mut self,
        layer: LayerId,
        u: ActorId,
        v: ActorId,
    ) -> Result<bool, NetworkError> {
        let info = self
            .layers
            .get(layer.0)
            .ok_or(NetworkError::UnknownLayer(layer))?;
        if !info.interactive {
            return Err(NetworkError::PersonalLayer(layer));
        }
        for a in [u, v] {
            if a.index() >= self.n_actors {
                return Err(NetworkError::UnknownActor(a));
            }
        }
        if u == v {
            return Ok(false);
        }
        let adj = &mut self.adjacency[layer.0];
        match adj[u.index()].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                adj[u.index()].insert(pos, v);
                let pos = adj[v.index()].binary_search(&u).unwrap_err();
                adj[v.index()].insert(pos, u);
                Ok(true)
            }
        }
    }

    pub fn to_edges_csv(&self) -> String {
        let mut out = String::from("layer_id,layer_name,actor_u,actor_v\n");
        for (layer, u, v) in self.edges() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                layer.0,
                csv_field(&self.layers[layer.0].name),
                u,
                v
            ));
        }
        out
    }

    /// Rebuilds a network from an edge CSV. Layer ids and names in the file
    /// must agree with `layer_names`.
    pub fn from_edges_csv(
        text: &str,
        n_actors: usize,
        layer_names: &[String],
    ) -> Result<Self, NetworkError> {
        let mut net = Self::empty(n_actors, layer_names)?;
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        check_header(&mut reader, &["layer_id", "layer_name", "actor_u", "actor_v"])?;
        for (i, row) in reader.records().enumerate() {
            let record = i + 1;
            let row = row.map_err(|e| csv_err(record, e))?;
            let layer = LayerId(parse_field(&row, 0, record)?);
            let name = &row[1];
            let u = ActorId(parse_field(&row, 2, record)?);
            let v = ActorId(parse_field(&row, 3, record)?);
            match net.layers.get(layer.0) {
                Some(l) if l.name == name => {}
                _ => {
                    return Err(NetworkError::Csv {
                        record,
                        message: format!("layer {} `{}` does not match scenario layers", layer, name),
                    })
                }
            }
            if u == v {
                return Err(NetworkError::Csv {
                    record,
                    message: format!("self-loop on actor {}", u),
                });
            }
            if !net.insert_edge(layer, u, v)? {
                return Err(NetworkError::Csv {
                    record,
                    message: format!("duplicate edge {}-{}", u, v),
                });
            }
        }
        Ok(net)
    }
}

pub fn traits_to_csv(traits: &[AgentTraits]) -> String {
    let mut out = String::from("actor_id,conformity,authority,openness,sociability\n");
    for t in traits {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.actor_id, t.conformity, t.authority, t.openness, t.sociability
        ));
    }
    out
}

/// Parses a trait CSV. Rows must list actors `0..n` in order.
pub fn traits_from_csv(text: &str) -> Result<Vec<AgentTraits>, NetworkError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    check_header(
        &mut reader,
        &["actor_id", "conformity", "authority", "openness", "sociability"],
    )?;
    let mut traits = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let record = i + 1;
        let row = row.map_err(|e| csv_err(record, e))?;
        let id: u32 = parse_field(&row, 0, record)?;
        if id as usize != i {
            return Err(NetworkError::Csv {
                record,
                message: format!("expected actor {}, found {}", i, id),
            });
        }
        let t = AgentTraits::new(
            ActorId(id),
            parse_field(&row, 1, record)?,
            parse_field(&row, 2, record)?,
            parse_field(&row, 3, record)?,
            parse_field(&row, 4, record)?,
        )
        .map_err(|e| NetworkError::Csv {
            record,
            message: e.to_string(),
        })?;
        traits.push(t);
    }
    Ok(traits)
}

fn check_header(
    reader: &mut csv::Reader<&[u8]>,
    expected: &[&str],
) -> Result<(), NetworkError> {
    let headers = reader.headers().map_err(|e| csv_err(0, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(NetworkError::Csv {
            record: 0,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    record: usize,
) -> Result<T, NetworkError>
where
    T::Err: std::fmt::Display,
{
    let raw = row.get(idx).ok_or_else(|| NetworkError::Csv {
        record,
        message: format!("missing column {}", idx),
    })?;
    raw.trim().parse().map_err(|e: T::Err| NetworkError::Csv {
        record,
        message: format!("column {}: {}", idx, e),
    })
}

fn csv_err(record: usize, e: csv::Error) -> NetworkError {
    NetworkError::Csv {
        record,
        message: e.to_string(),
    }
}

/// Quotes a field if it would break a plain comma-separated row.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
