//! Straight-line reference engine.
//!
//! Shares only the random-stream contract with the library (substreams and
//! the `unit`/`uniform`/`chance`/`index` mappings). Everything else is
//! written out by hand: dense adjacency matrices, explicit loops over all
//! actors to find neighbors, means recomputed from scratch on every
//! interaction, and the update rules spelled out case by case.

use opinion_core::config::{InteractionModel, ScenarioConfig};
use opinion_core::rng::{SimRng, Substream};
use opinion_core::{EdgeModel, ModelVariant};

pub struct Reference {
    cfg: ScenarioConfig,
    conformity: Vec<f64>,
    authority: Vec<f64>,
    openness: Vec<f64>,
    sociability: Vec<f64>,
    /// `linked[l][i][j]` for interaction layer `l` (0-based, personal excluded)
    linked: Vec<Vec<Vec<bool>>>,
    /// `opinions[l][i]`, interaction layers only
    opinions: Vec<Vec<f64>>,
    personal: Vec<f64>,
    schedule: SimRng,
    injection: SimRng,
    step: u64,
}

/// Mean accumulated as `m += (x - m) / k`.
fn mean(values: &[f64]) -> f64 {
    let mut m = values[0];
    let mut k = 1.0;
    for &x in &values[1..] {
        k += 1.0;
        m += (x - m) / k;
    }
    m
}

/// `(1 - c) * x + c * y`, evaluated from the heavier endpoint.
fn v(x: f64, y: f64, c: f64) -> f64 {
    if c < 0.5 {
        x + c * (y - x)
    } else {
        y - (1.0 - c) * (y - x)
    }
}

fn clamp(x: f64) -> f64 {
    if x < -1.0 {
        -1.0
    } else if x > 1.0 {
        1.0
    } else {
        x
    }
}

impl Reference {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let n = cfg.n_actors;
        let n_layers = cfg.layer_names.len() - 1;
        let mut r = Reference {
            cfg: cfg.clone(),
            conformity: Vec::new(),
            authority: Vec::new(),
            openness: Vec::new(),
            sociability: Vec::new(),
            linked: vec![vec![vec![false; n]; n]; n_layers],
            opinions: vec![vec![0.0; n]; n_layers],
            personal: vec![0.0; n],
            schedule: SimRng::substream(cfg.seed, Substream::Schedule),
            injection: SimRng::substream(cfg.seed, Substream::Injection),
            step: 0,
        };
        let mut traits = SimRng::substream(cfg.seed, Substream::InitTraits);
        r.draw_traits(&mut traits, n);
        let mut opinions = SimRng::substream(cfg.seed, Substream::InitOpinions);
        r.draw_opinions(&mut opinions, 0, n);
        let mut edges = SimRng::substream(cfg.seed, Substream::InitEdges);
        for l in 0..n_layers {
            for i in 0..n {
                for j in (i + 1)..n {
                    if edges.unit() < r.pair_probability(i, j) {
                        r.linked[l][i][j] = true;
                        r.linked[l][j][i] = true;
                    }
                }
            }
        }
        r
    }

    fn draw_traits(&mut self, rng: &mut SimRng, count: usize) {
        let t = self.cfg.traits;
        for _ in 0..count {
            self.conformity.push(rng.uniform(t.conformity.lo, t.conformity.hi));
            self.authority.push(rng.uniform(t.authority.lo, t.authority.hi));
            self.openness.push(rng.uniform(t.openness.lo, t.openness.hi));
            self.sociability.push(rng.uniform(t.sociability.lo, t.sociability.hi));
        }
    }

    fn draw_opinions(&mut self, rng: &mut SimRng, from: usize, to: usize) {
        let r = self.cfg.opinion_init;
        for l in 0..self.opinions.len() {
            for i in from..to {
                self.opinions[l][i] = rng.uniform(r.lo, r.hi);
            }
        }
        for i in from..to {
            self.refresh_personal(i);
        }
    }

    fn refresh_personal(&mut self, i: usize) {
        let across: Vec<f64> = self.opinions.iter().map(|layer| layer[i]).collect();
        self.personal[i] = clamp(mean(&across));
    }

    fn pair_probability(&self, i: usize, j: usize) -> f64 {
        match self.cfg.edge_model {
            EdgeModel::Uniform(p) => p,
            EdgeModel::Sociability(p) => p * (self.sociability[i] + self.sociability[j]) / 2.0,
        }
    }

    fn n(&self) -> usize {
        self.personal.len()
    }

    fn inject(&mut self, count: usize) {
        let mut rng = self.injection.clone();
        let old = self.n();
        let new = old + count;
        self.draw_traits(&mut rng, count);
        for layer in &mut self.opinions {
            layer.resize(new, 0.0);
        }
        self.personal.resize(new, 0.0);
        self.draw_opinions(&mut rng, old, new);
        for layer in &mut self.linked {
            for row in layer.iter_mut() {
                row.resize(new, false);
            }
            layer.resize(new, vec![false; new]);
        }
        for l in 0..self.linked.len() {
            for x in old..new {
                for y in 0..x {
                    if rng.unit() < self.pair_probability(x, y) {
                        self.linked[l][x][y] = true;
                        self.linked[l][y][x] = true;
                    }
                }
            }
        }
        self.injection = rng;
    }

    pub fn step(&mut self) {
        self.step += 1;
        for inj in self.cfg.injections.clone() {
            if inj.step == self.step {
                self.inject(inj.n_new);
            }
        }

        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        let mut i = n;
        while i > 1 {
            i -= 1;
            let j = self.schedule.index(i + 1);
            order.swap(i, j);
        }

        for l in 0..self.opinions.len() {
            for &a in &order {
                let p = match self.cfg.interaction {
                    InteractionModel::Fixed(p) => p,
                    InteractionModel::Sociability => self.sociability[a],
                };
                for b in 0..n {
                    if !self.linked[l][a][b] {
                        continue;
                    }
                    if !(self.schedule.unit() < p) {
                        continue;
                    }
                    let oa = self.opinions[l][a];
                    let ob = self.opinions[l][b];
                    let c = self.conformity[a];
                    let updated = match self.cfg.variant {
                        ModelVariant::ConformityOnly => v(oa, ob, c),
                        ModelVariant::Full => {
                            let nbrs: Vec<usize> = (0..n).filter(|&k| self.linked[l][a][k]).collect();
                            let o_n: Vec<f64> = nbrs.iter().map(|&k| self.opinions[l][k]).collect();
                            let a_n: Vec<f64> = nbrs.iter().map(|&k| self.authority[k]).collect();
                            let t_n: Vec<f64> = nbrs.iter().map(|&k| self.openness[k]).collect();
                            let (mean_o, mean_a, mean_t) = (mean(&o_n), mean(&a_n), mean(&t_n));
                            let ab = self.authority[b];
                            let gap = (ob - oa).abs();
                            if ab > mean_a && gap > mean_t {
                                v(mean_o, ob, c)
                            } else if ab > mean_a {
                                ob
                            } else if gap > mean_t {
                                let pole = if oa - ob > 0.0 { 1.0 } else { -1.0 };
                                v(oa, pole, c)
                            } else {
                                v(oa, mean_o, c)
                            }
                        }
                    };
                    self.opinions[l][a] = clamp(updated);
                    self.refresh_personal(a);
                }
            }
        }
    }

    /// Opinion of actor `i` on layer `l`, with layer 0 the personal layer.
    pub fn opinion(&self, i: usize, l: usize) -> f64 {
        if l == 0 {
            self.personal[i]
        } else {
            self.opinions[l - 1][i]
        }
    }

    pub fn n_actors(&self) -> usize {
        self.n()
    }
}
