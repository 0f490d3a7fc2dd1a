//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Desk scale is 200 agents on four interaction layers plus the personal
//! layer, seeds 1..=10. Every threshold below is fixed; none is tuned per
//! run.

mod reference;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use opinion_core::config::{self, Injection, ScenarioConfig};
use opinion_core::engine::{OpinionState, SimulationRun};
use opinion_core::model::{self, NeighborhoodStats};
use opinion_core::MetricsFrame;

use reference::Reference;

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const DESK_ACTORS: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn shipped(name: &str) -> ScenarioConfig {
    let path = scenarios_dir().join(name);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
    config::parse(&text).unwrap_or_else(|e| panic!("{}: {}", path.display(), e))
}

fn desk(name: &str, n_actors: usize, steps: u64, injections: Vec<Injection>, seed: u64) -> ScenarioConfig {
    let mut cfg = shipped(name);
    assert_eq!(cfg.n_interaction_layers(), 4);
    cfg.n_actors = n_actors;
    cfg.steps = steps;
    cfg.snapshot_stride = steps;
    cfg.injections = injections;
    cfg.seed = seed;
    cfg.validate().expect("desk config");
    cfg
}

fn desk_exp1(steps: u64, seed: u64) -> ScenarioConfig {
    desk("exp1.cfg", DESK_ACTORS, steps, Vec::new(), seed)
}

fn desk_exp2(steps: u64, seed: u64) -> ScenarioConfig {
    desk("exp2.cfg", DESK_ACTORS, steps, Vec::new(), seed)
}

/// A quarter of the final population, then +25% and +50% of it at the half
/// and three-quarter marks.
fn desk_inject(steps: u64, seed: u64) -> ScenarioConfig {
    let quarter = DESK_ACTORS / 4;
    desk(
        "exp2-inject.cfg",
        quarter,
        steps,
        vec![
            Injection { step: steps / 2, n_new: quarter },
            Injection { step: steps * 3 / 4, n_new: 2 * quarter },
        ],
        seed,
    )
}

fn history(cfg: ScenarioConfig) -> Vec<MetricsFrame> {
    SimulationRun::new(cfg).unwrap().run_to_completion().unwrap().history
}

fn personal_gap(state: &OpinionState) -> f64 {
    let layers = state.n_layers();
    (0..state.n_actors())
        .map(|a| {
            let mean = (1..layers).map(|l| state.opinion(a, l)).sum::<f64>() / (layers - 1) as f64;
            (state.personal(a) - mean).abs()
        })
        .fold(0.0, f64::max)
}

fn c1_bounds() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for seed in SEEDS {
        for cfg in [desk_exp1(300, seed), desk_exp2(300, seed), desk_inject(300, seed)] {
            let mut run = SimulationRun::new(cfg).unwrap();
            let mut ok = run.state().all_in_bounds();
            while !run.is_finished() {
                run.step().unwrap();
                ok &= run.state().all_in_bounds();
                checked += 1;
            }
            let out = run.finish();
            ok &= out.snapshots.iter().all(|s| s.state.all_in_bounds());
            ok &= out.history.iter().flat_map(|f| &f.layers).all(|l| {
                (-1.0..=1.0).contains(&l.mean_opinion) && (0.0..=1.0).contains(&l.stddev_opinion)
            });
            if !ok {
                return outcome(false, format!("opinion left [-1, 1] (seed {})", seed));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        secs < 60.0,
        format!("{} step states in bounds, {:.1}s (budget 60s)", checked, secs),
    )
}

fn c2_conformity_convergence() -> Outcome {
    let mut converged = 0;
    let mut always_shrinks = true;
    let mut worst = Vec::new();
    for seed in SEEDS {
        let h = history(desk_exp1(500, seed));
        let (first, last) = (&h[0], h.last().unwrap());
        let max_final = last.max_interaction_stddev();
        if max_final < 0.1 {
            converged += 1;
        }
        always_shrinks &= first
            .layers
            .iter()
            .zip(&last.layers)
            .all(|(a, b)| b.stddev_opinion < a.stddev_opinion);
        worst.push(format!("{:.3}", max_final));
    }
    outcome(
        converged >= 9 && always_shrinks,
        format!(
            "{}/10 seeds with every layer stddev < 0.1, shrinks in all layers: {} (max final stddev per seed: {})",
            converged,
            always_shrinks,
            worst.join(" ")
        ),
    )
}

fn c3_c4_full_model() -> (Outcome, Outcome) {
    let mut ceiling_ok = 0;
    let mut dispersed = 0;
    let mut peaks = Vec::new();
    let mut finals = Vec::new();
    for seed in SEEDS {
        let h = history(desk_exp2(500, seed));
        let peak = h
            .iter()
            .filter(|f| f.step > 50)
            .flat_map(|f| &f.layers)
            .map(|l| l.stddev_opinion)
            .fold(0.0, f64::max);
        if peak < 0.5 {
            ceiling_ok += 1;
        }
        let last = h.last().unwrap().max_interaction_stddev();
        if last > 0.1 {
            dispersed += 1;
        }
        peaks.push(format!("{:.3}", peak));
        finals.push(format!("{:.3}", last));
    }
    (
        outcome(
            ceiling_ok >= 9,
            format!(
                "{}/10 seeds below 0.5 after step 50 (peak per seed: {})",
                ceiling_ok,
                peaks.join(" ")
            ),
        ),
        outcome(
            dispersed >= 9,
            format!(
                "{}/10 seeds with a layer above 0.1 at the end (max final per seed: {})",
                dispersed,
                finals.join(" ")
            ),
        ),
    )
}

fn window_mean(h: &[MetricsFrame], lo: u64, hi: u64) -> f64 {
    let values: Vec<f64> = h
        .iter()
        .filter(|f| (lo..=hi).contains(&f.step))
        .flat_map(|f| f.layers[1..].iter().map(|l| l.stddev_opinion))
        .collect();
    values.iter().sum::<f64>() / values.len() as f64
}

fn c5_injection_dampening() -> Outcome {
    let mut damped = 0;
    let mut pairs = Vec::new();
    for seed in SEEDS {
        let cfg = desk_inject(500, seed);
        assert_eq!(cfg.injections, vec![Injection { step: 250, n_new: 50 }, Injection { step: 375, n_new: 100 }]);
        let h = history(cfg);
        let before = window_mean(&h, 200, 250);
        let after = window_mean(&h, 450, 500);
        if after < before {
            damped += 1;
        }
        pairs.push(format!("{:.3}->{:.3}", before, after));
    }
    outcome(
        damped >= 8,
        format!(
            "{}/10 seeds with lower mean stddev in [450,500] than [200,250] ({})",
            damped,
            pairs.join(" ")
        ),
    )
}

fn c6_fixed_point() -> Outcome {
    for (label, cfg) in [("conformity_only", desk_exp1(100, 1)), ("full", desk_exp2(100, 1))] {
        let mut run = SimulationRun::new(cfg).unwrap();
        run.state_mut().fill(0.37);
        let frozen = run.state().clone();
        while !run.is_finished() {
            run.step().unwrap();
            if run.state() != &frozen {
                return outcome(false, format!("{} moved at step {}", label, run.current_step()));
            }
        }
    }
    outcome(true, "all opinions stay exactly 0.37 for 100 steps in both variants")
}

fn c7_oracle() -> Outcome {
    let mut compared = 0;
    for variant in ["exp1.cfg", "exp2.cfg"] {
        for seed in 1..=20u64 {
            let mut cfg = shipped(variant);
            cfg.n_actors = 5;
            cfg.layer_names.truncate(3);
            cfg.steps = 10;
            cfg.snapshot_stride = 10;
            cfg.seed = seed;
            // denser than the shipped scenarios so five agents actually interact
            cfg.edge_model = match cfg.edge_model {
                opinion_core::EdgeModel::Uniform(_) => opinion_core::EdgeModel::Uniform(0.6),
                opinion_core::EdgeModel::Sociability(_) => opinion_core::EdgeModel::Sociability(1.0),
            };
            if let config::InteractionModel::Fixed(_) = cfg.interaction {
                cfg.interaction = config::InteractionModel::Fixed(0.5);
            }
            let mut run = SimulationRun::new(cfg.clone()).unwrap();
            let mut oracle = Reference::new(&cfg);
            for step in 0..=cfg.steps {
                if step > 0 {
                    run.step().unwrap();
                    oracle.step();
                }
                let s = run.state();
                assert_eq!(s.n_actors(), oracle.n_actors());
                for a in 0..s.n_actors() {
                    for l in 0..s.n_layers() {
                        if s.opinion(a, l).to_bits() != oracle.opinion(a, l).to_bits() {
                            return outcome(
                                false,
                                format!(
                                    "{} seed {} step {} actor {} layer {}: {} vs {}",
                                    variant,
                                    seed,
                                    step,
                                    a,
                                    l,
                                    s.opinion(a, l),
                                    oracle.opinion(a, l)
                                ),
                            );
                        }
                    }
                }
                compared += 1;
            }
        }
    }
    outcome(true, format!("{} states bit-identical (2 variants x 20 seeds x 11 states)", compared))
}

fn c8_personal_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for seed in 1..=3 {
        for cfg in [desk_exp1(300, seed), desk_exp2(300, seed), desk_inject(300, seed)] {
            let mut run = SimulationRun::new(cfg).unwrap();
            while !run.is_finished() {
                run.step().unwrap();
                worst = worst.max(personal_gap(run.state()));
                steps += 1;
            }
        }
    }
    outcome(
        worst < 1e-12,
        format!("max |personal - layer mean| = {:e} over {} steps", worst, steps),
    )
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("desk.cfg");
    fs::write(&scenario, config::emit(&desk_inject(300, 42))).unwrap();
    let mut dirs = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("run{}", i));
        let status = Command::new(env!("CARGO_BIN_EXE_opinion-sim"))
            .arg("run")
            .arg(&scenario)
            .args(["--seed", "42", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, String::from_utf8_lossy(&status.stderr).to_string());
        }
        dirs.push(out);
    }
    let files = [
        opinion_cli::METRICS_FILE,
        opinion_cli::SNAPSHOTS_FILE,
        opinion_cli::INITIAL_FILE,
        opinion_cli::FINAL_FILE,
        opinion_cli::SHIFTS_FILE,
        opinion_cli::MANIFEST_FILE,
    ];
    for f in files {
        let a = fs::read(dirs[0].join(f)).unwrap();
        let b = fs::read(dirs[1].join(f)).unwrap();
        if a != b || a.is_empty() {
            return outcome(false, format!("{} differs between runs", f));
        }
    }
    outcome(true, format!("{} artifacts byte-identical across two runs", files.len()))
}

fn c10_unit_vectors() -> Outcome {
    const TOL: f64 = 1e-12;
    let stats = |m_o, m_a, m_t| NeighborhoodStats {
        mean_opinion: m_o,
        mean_authority: m_a,
        mean_openness: m_t,
        neighbor_count: 4,
    };
    let cases: Vec<(&str, f64, f64)> = vec![
        ("blend(0.3,0.7,0)", model::blend(0.3, 0.7, 0.0), 0.3),
        ("blend(0.3,0.7,1)", model::blend(0.3, 0.7, 1.0), 0.7),
        ("blend(0.5,-0.5,0.5)", model::blend(0.5, -0.5, 0.5), 0.0),
        ("blend(0.2,0.8,0.25)", model::blend(0.2, 0.8, 0.25), 0.35),
        ("conformity(-1,1,1)", model::update_conformity_only(-1.0, 1.0, 1.0), 1.0),
        ("conformity(0.4,0.4,0.9)", model::update_conformity_only(0.4, 0.4, 0.9), 0.4),
        ("conformity(0,0.6,0.5)", model::update_conformity_only(0.0, 0.6, 0.5), 0.3),
        ("full case 2", model::update_full(0.0, 0.5, 0.9, 0.5, &stats(0.1, 0.4, 0.8)).unwrap(), 0.5),
        ("full case 3", model::update_full(0.2, 0.8, 0.1, 0.5, &stats(0.0, 0.5, 0.3)).unwrap(), -0.4),
        ("full case 4", model::update_full(0.2, 0.25, 0.1, 0.4, &stats(0.6, 0.5, 0.3)).unwrap(), 0.36),
        ("full case 1", model::update_full(0.0, 0.9, 0.9, 1.0, &stats(-0.2, 0.5, 0.4)).unwrap(), 0.9),
        ("personal [0.4 x4]", model::update_personal(&[0.4; 4]).unwrap(), 0.4),
        ("personal [1,-1]", model::update_personal(&[1.0, -1.0]).unwrap(), 0.0),
        ("personal [0.1,0.2,0.3,0.8]", model::update_personal(&[0.1, 0.2, 0.3, 0.8]).unwrap(), 0.35),
    ];
    let failed: Vec<String> = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() >= TOL)
        .map(|(name, got, want)| format!("{}: {} != {}", name, got, want))
        .collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} vectors within 1e-12", cases.len())
        } else {
            failed.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let (c3, c4) = c3_c4_full_model();
    let results = [
        ("C1 bounds invariant", c1_bounds()),
        ("C2 conformity-only convergence", c2_conformity_convergence()),
        ("C3 full-model dispersion ceiling", c3),
        ("C4 full-model non-convergence", c4),
        ("C5 injection dampening", c5_injection_dampening()),
        ("C6 fixed point", c6_fixed_point()),
        ("C7 oracle equivalence", c7_oracle()),
        ("C8 personal-opinion identity", c8_personal_identity()),
        ("C9 determinism", c9_determinism()),
        ("C10 update-rule vectors", c10_unit_vectors()),
    ];
    let mut failures = 0;
    for (name, o) in &results {
        println!("[{}] {}: {}", if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.pass {
            failures += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failures, results.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
