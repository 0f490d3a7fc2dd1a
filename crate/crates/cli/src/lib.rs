//! Scenario runner commands behind the `opinion-sim` binary.
//!
//! Every artifact is a pure function of (scenario, seed): no timestamps,
//! host names or thread counts end up in any file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use opinion_core::config::{self, ScenarioConfig};
use opinion_core::engine::{snapshots_csv, RunOutput, SimulationRun, SnapshotKind};
use opinion_core::metrics::{self, MetricsFrame};
use opinion_core::network::{self, MultilayerNetwork};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const INITIAL_FILE: &str = "initial.csv";
pub const FINAL_FILE: &str = "final.csv";
pub const SHIFTS_FILE: &str = "shifts.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const TRAITS_FILE: &str = "traits.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

/// Per-invocation overrides on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snapshot_stride: Option<u64>,
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let mut cfg =
        config::parse(&text).with_context(|| format!("in scenario {}", path.display()))?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(stride) = overrides.snapshot_stride {
        cfg.snapshot_stride = stride;
    }
    cfg.validate()
        .with_context(|| format!("after overrides on {}", path.display()))?;
    Ok(cfg)
}

/// Named file contents, written together once a run has fully succeeded.
pub struct Artifacts {
    files: BTreeMap<&'static str, String>,
}

impl Artifacts {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.files.keys().copied()
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Builds every output file for a finished run, manifest included.
pub fn render(out: &RunOutput) -> Artifacts {
    let mut files = BTreeMap::new();
    files.insert(METRICS_FILE, metrics::metrics_csv(&out.history, &out.network));
    files.insert(SNAPSHOTS_FILE, snapshots_csv(&out.snapshots));
    files.insert(
        INITIAL_FILE,
        snapshots_csv(out.snapshots.iter().filter(|s| s.kind == SnapshotKind::Initial)),
    );
    files.insert(
        FINAL_FILE,
        snapshots_csv(out.snapshots.iter().filter(|s| s.kind == SnapshotKind::Final)),
    );
    files.insert(SHIFTS_FILE, metrics::shifts_csv(&out.shifts));
    files.insert(EDGES_FILE, out.network.to_edges_csv());
    files.insert(TRAITS_FILE, network::traits_to_csv(&out.traits));
    files.insert(SCENARIO_FILE, config::emit(&out.config));

    let checksums: serde_json::Map<String, serde_json::Value> = files
        .iter()
        .map(|(name, body)| (name.to_string(), sha256_hex(body.as_bytes()).into()))
        .collect();
    let manifest = serde_json::json!({
        "seed": out.config.seed,
        "steps": out.config.steps,
        "final_population": out.final_state.n_actors(),
        "scenario": config::emit(&out.config),
        "artifacts": checksums,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    files.insert(MANIFEST_FILE, text);
    Artifacts { files }
}

/// Reads `edges.csv` and `traits.csv` from a previous run's output.
pub fn load_topology(dir: &Path, cfg: &ScenarioConfig) -> Result<(Vec<opinion_core::AgentTraits>, MultilayerNetwork)> {
    let traits_text = fs::read_to_string(dir.join(TRAITS_FILE))
        .with_context(|| format!("reading {}", dir.join(TRAITS_FILE).display()))?;
    let edges_text = fs::read_to_string(dir.join(EDGES_FILE))
        .with_context(|| format!("reading {}", dir.join(EDGES_FILE).display()))?;
    let traits = network::traits_from_csv(&traits_text)?;
    let net = MultilayerNetwork::from_edges_csv(&edges_text, traits.len(), &cfg.layer_names)?;
    Ok((traits, net))
}

pub fn simulate(cfg: ScenarioConfig, topology: Option<&Path>) -> Result<RunOutput> {
    let run = match topology {
        Some(dir) => {
            let (traits, net) = load_topology(dir, &cfg)?;
            SimulationRun::with_population(cfg, traits, net)?
        }
        None => SimulationRun::new(cfg)?,
    };
    Ok(run.run_to_completion()?)
}

/// `run`: one scenario, one seed.
pub fn cmd_run(
    scenario: &Path,
    overrides: &Overrides,
    outdir: &Path,
    topology: Option<&Path>,
) -> Result<Artifacts> {
    let cfg = load_scenario(scenario, overrides)?;
    let out = simulate(cfg, topology)?;
    let artifacts = render(&out);
    artifacts.write_to(outdir)?;
    Ok(artifacts)
}

/// Seeds for a batch, e.g. `1-10`, `3,5,8` or `1-4,10`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: u64 = lo.trim().parse().with_context(|| format!("seed range `{}`", part))?;
                let hi: u64 = hi.trim().parse().with_context(|| format!("seed range `{}`", part))?;
                if lo > hi {
                    bail!("seed range `{}` is empty", part);
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(part.parse().with_context(|| format!("seed `{}`", part))?),
        }
    }
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        bail!("duplicate seed {}", w[0]);
    }
    Ok(seeds)
}

#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub scenario: PathBuf,
    pub seeds: Vec<u64>,
    pub outdir: PathBuf,
    pub jobs: usize,
    pub snapshot_stride: Option<u64>,
}

/// Cross-seed summary for one (step, layer).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub step: u64,
    pub layer_id: usize,
    pub runs: usize,
    pub mean_of_means: f64,
    pub stddev_of_means: f64,
    pub mean_of_stddevs: f64,
    pub stddev_of_stddevs: f64,
}

/// Aggregates per-seed histories. Input order does not matter: histories are
/// combined in ascending seed order.
pub fn aggregate(mut histories: Vec<(u64, Vec<MetricsFrame>)>) -> Result<Vec<AggregateRow>> {
    histories.sort_by_key(|(seed, _)| *seed);
    let (_, first) = histories.first().ok_or_else(|| anyhow!("no runs to aggregate"))?;
    let shape: Vec<(u64, usize)> = first.iter().map(|f| (f.step, f.layers.len())).collect();
    for (seed, h) in &histories {
        let other: Vec<(u64, usize)> = h.iter().map(|f| (f.step, f.layers.len())).collect();
        if other != shape {
            bail!("run for seed {} has a different step/layer layout", seed);
        }
    }
    let mut rows = Vec::new();
    for (i, &(step, n_layers)) in shape.iter().enumerate() {
        for layer in 0..n_layers {
            let means: Vec<f64> = histories
                .iter()
                .map(|(_, h)| h[i].layers[layer].mean_opinion)
                .collect();
            let spreads: Vec<f64> = histories
                .iter()
                .map(|(_, h)| h[i].layers[layer].stddev_opinion)
                .collect();
            let (mean_of_means, stddev_of_means) = metrics::mean_stddev(&means);
            let (mean_of_stddevs, stddev_of_stddevs) = metrics::mean_stddev(&spreads);
            rows.push(AggregateRow {
                step,
                layer_id: layer,
                runs: histories.len(),
                mean_of_means,
                stddev_of_means,
                mean_of_stddevs,
                stddev_of_stddevs,
            });
        }
    }
    Ok(rows)
}

pub fn aggregate_csv(rows: &[AggregateRow], layer_names: &[String]) -> String {
    let mut out = String::from(
        "step,layer_id,layer_name,runs,mean_of_means,stddev_of_means,mean_of_stddevs,stddev_of_stddevs\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.step,
            r.layer_id,
            network::csv_field(&layer_names[r.layer_id]),
            r.runs,
            r.mean_of_means,
            r.stddev_of_means,
            r.mean_of_stddevs,
            r.stddev_of_stddevs
        ));
    }
    out
}

pub fn seed_dir(outdir: &Path, seed: u64) -> PathBuf {
    outdir.join(format!("seed-{}", seed))
}

/// `batch`: independent runs across seeds, then a cross-seed aggregate.
pub fn cmd_batch(spec: &BatchSpec) -> Result<Vec<AggregateRow>> {
    let mut sorted = spec.seeds.clone();
    sorted.sort_unstable();
    if sorted.is_empty() {
        bail!("no seeds given");
    }
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        bail!("duplicate seed {}", w[0]);
    }
    let base = load_scenario(
        &spec.scenario,
        &Overrides {
            seed: None,
            snapshot_stride: spec.snapshot_stride,
        },
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<(u64, Result<Vec<MetricsFrame>>)> = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| {
                let mut cfg = base.clone();
                cfg.seed = seed;
                let res = cfg
                    .validate()
                    .map_err(anyhow::Error::from)
                    .and_then(|_| simulate(cfg, None))
                    .and_then(|out| {
                        render(&out).write_to(&seed_dir(&spec.outdir, seed))?;
                        Ok(out.history)
                    });
                (seed, res)
            })
            .collect()
    });

    let mut histories = Vec::new();
    let mut failures = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(h) => histories.push((seed, h)),
            Err(e) => failures.push(format!("seed {}: {:#}", seed, e)),
        }
    }
    if !failures.is_empty() {
        bail!(
            "{} of {} runs failed:\n  {}",
            failures.len(),
            spec.seeds.len(),
            failures.join("\n  ")
        );
    }

    let rows = aggregate(histories)?;
    fs::create_dir_all(&spec.outdir)?;
    let path = spec.outdir.join(AGGREGATE_FILE);
    fs::write(&path, aggregate_csv(&rows, &base.layer_names))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(rows)
}

/// `validate`: resolved config in canonical form.
pub fn cmd_validate(scenario: &Path) -> Result<String> {
    let cfg = load_scenario(scenario, &Overrides::default())?;
    Ok(config::emit(&cfg))
}
