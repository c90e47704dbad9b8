//! Episode execution, seeded batch experiments, grid search and result
//! persistence.
//!
//! Reproducibility contract: episode `i` of a batch uses seed
//! `base_seed + i`. Within an episode, the environment draws from stream 0 of
//! a counter-based PRNG seeded with the episode seed, and the planner's
//! `t`-th decision (search plus root advance) draws from stream `1 + t`.
//! Batches are embarrassingly parallel; per-episode results are identical
//! whether episodes run serially or on a work pool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::hallway::{
    self, long_hallway_model, validate_layout, HallwayModel, ScriptedOptimalPolicy, StartVariant,
};
use crate::domains::tiger::{TigerModel, TigerParams, ACT_LISTEN, ACT_OPEN_LEFT, OBS_HEAR_LEFT, OBS_HEAR_RIGHT};
use crate::model::{discounted_return, exact_belief_update, expected_reward, DenseBelief, PomdpModel};
use crate::oracle::ExpectimaxOracle;
use crate::particles::{ParticleError, ParticleFilter};
use crate::planner::{AdvanceOutcome, Budget, EntropyCombine, Planner, PlannerConfig, PlannerKind};

const ENV_STREAM: u64 = 0;
const FIRST_PLAN_STREAM: u64 = 1;

/// CSV header for per-episode rows; fixed by the output contract.
pub const RESULTS_HEADER: &str = "seed,steps,discounted,cumulative,reached_goal";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Particle(#[from] ParticleError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
    #[error("bad configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.to_path_buf(), source }
}

/// Domain selector mirrored by the CLI and by JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum DomainSpec {
    Tiger {
        #[serde(default)]
        params: TigerParams,
    },
    Hallway {
        k1: usize,
        k2: usize,
        #[serde(default)]
        start: StartSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StartSpec {
    #[default]
    Standard,
    Modified,
}

impl From<StartSpec> for StartVariant {
    fn from(s: StartSpec) -> Self {
        match s {
            StartSpec::Standard => StartVariant::Standard,
            StartSpec::Modified => StartVariant::Modified,
        }
    }
}

fn default_sims() -> u64 {
    10_000
}
fn default_particles() -> u64 {
    256
}
fn default_k_threshold() -> u64 {
    10
}
fn default_epsilon() -> f64 {
    0.01
}

/// Planner selector; combined with the model's discount to build a
/// [`PlannerConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSpec {
    pub kind: PlannerKind,
    pub c: f64,
    #[serde(default)]
    pub e: f64,
    /// `u64::MAX` disables entropy back-propagation entirely.
    #[serde(default = "default_k_threshold")]
    pub k_threshold: u64,
    /// Simulations per decision; ignored when `time_ms` is set.
    #[serde(default = "default_sims")]
    pub sims: u64,
    /// Wall-clock budget per decision, for anytime use. Not reproducible.
    #[serde(default)]
    pub time_ms: Option<u64>,
    #[serde(default = "default_particles")]
    pub particles: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub entropy_combine: EntropyCombine,
}

impl PlannerSpec {
    pub fn pomcp(c: f64) -> Self {
        Self {
            kind: PlannerKind::Pomcp,
            c,
            e: 0.0,
            k_threshold: default_k_threshold(),
            sims: default_sims(),
            time_ms: None,
            particles: default_particles(),
            epsilon: default_epsilon(),
            entropy_combine: EntropyCombine::Sum,
        }
    }

    pub fn pomcpe(c: f64, e: f64) -> Self {
        Self { kind: PlannerKind::Pomcpe, e, ..Self::pomcp(c) }
    }

    pub fn with_sims(mut self, sims: u64) -> Self {
        self.sims = sims;
        self
    }

    pub fn to_planner_config(&self, gamma: f64) -> PlannerConfig {
        PlannerConfig {
            kind: self.kind,
            exploration_c: self.c,
            entropy_e: self.e,
            gamma,
            epsilon_cutoff: self.epsilon,
            k_threshold: self.k_threshold,
            budget: match self.time_ms {
                Some(ms) => Budget::TimeMs(ms),
                None => Budget::Simulations(self.sims),
            },
            initial_particles: self.particles,
            entropy_combine: self.entropy_combine,
        }
    }
}

fn default_max_steps() -> u64 {
    200
}

/// Full experiment description: domain, planner, episode count and seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub planner: PlannerSpec,
    pub episodes: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub steps: u64,
    pub discounted: f64,
    pub cumulative: f64,
    pub reached_goal: bool,
    pub trace: Option<Vec<TraceStep>>,
}

/// An episode that failed (e.g. belief reseeding hit an impossible
/// observation); excluded from aggregates but counted in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub episodes: u64,
    pub failures: u64,
    pub mean_discounted: Option<f64>,
    pub stddev_discounted: Option<f64>,
    pub mean_cumulative: Option<f64>,
    pub stddev_cumulative: Option<f64>,
    pub success_rate: Option<f64>,
}

impl BatchStats {
    /// Aggregates recomputable bit-exactly from the persisted rows: plain
    /// in-order folds, sample standard deviation.
    pub fn from_rows(rows: &[EpisodeResult], failures: u64) -> Self {
        let n = rows.len() as u64;
        if n == 0 {
            return Self {
                episodes: 0,
                failures,
                mean_discounted: None,
                stddev_discounted: None,
                mean_cumulative: None,
                stddev_cumulative: None,
                success_rate: None,
            };
        }
        let mean = |get: &dyn Fn(&EpisodeResult) -> f64| -> f64 {
            rows.iter().map(|r| get(r)).sum::<f64>() / n as f64
        };
        let stddev = |get: &dyn Fn(&EpisodeResult) -> f64, mu: f64| -> f64 {
            if n < 2 {
                0.0
            } else {
                let ss = rows.iter().map(|r| (get(r) - mu).powi(2)).sum::<f64>();
                (ss / (n - 1) as f64).sqrt()
            }
        };
        let mu_d = mean(&|r| r.discounted);
        let mu_c = mean(&|r| r.cumulative);
        let successes = rows.iter().filter(|r| r.reached_goal).count() as f64;
        Self {
            episodes: n,
            failures,
            mean_discounted: Some(mu_d),
            stddev_discounted: Some(stddev(&|r| r.discounted, mu_d)),
            mean_cumulative: Some(mu_c),
            stddev_cumulative: Some(stddev(&|r| r.cumulative, mu_c)),
            success_rate: Some(successes / n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub rows: Vec<EpisodeResult>,
    pub failures: Vec<EpisodeFailure>,
    pub stats: BatchStats,
}

/// Anything that can drive an episode: a planner, or a scripted policy used
/// to pin ground-truth episode values.
pub trait EpisodeAgent {
    fn plan(&mut self, rng: &mut dyn RngCore) -> usize;
    fn observe(
        &mut self,
        action: usize,
        observation: usize,
        rng: &mut dyn RngCore,
    ) -> Result<AgentStatus, HarnessError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentStatus {
    Planning,
    EpisodeOver,
}

impl<M: PomdpModel> EpisodeAgent for Planner<'_, M> {
    fn plan(&mut self, rng: &mut dyn RngCore) -> usize {
        self.search(rng).action
    }

    fn observe(
        &mut self,
        action: usize,
        observation: usize,
        rng: &mut dyn RngCore,
    ) -> Result<AgentStatus, HarnessError> {
        Ok(match self.advance_root(action, observation, rng)? {
            AdvanceOutcome::Planning => AgentStatus::Planning,
            AdvanceOutcome::EpisodeOver => AgentStatus::EpisodeOver,
        })
    }
}

impl EpisodeAgent for ScriptedOptimalPolicy {
    fn plan(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.next_action().unwrap_or(hallway::ACT_WAIT)
    }

    fn observe(
        &mut self,
        _action: usize,
        observation: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<AgentStatus, HarnessError> {
        self.record_observation(observation);
        Ok(AgentStatus::Planning)
    }
}

fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one episode: sample the hidden state, then plan / act / observe /
/// re-root until a terminal state or the step cap. Hitting the cap is a
/// non-goal outcome, not an error.
pub fn run_episode<M: PomdpModel, A: EpisodeAgent>(
    m: &M,
    agent: &mut A,
    seed: u64,
    max_steps: u64,
    record_trace: bool,
) -> Result<EpisodeResult, HarnessError> {
    let mut env_rng = episode_rng(seed, ENV_STREAM);
    let mut state = m.sample_initial(&mut env_rng);
    let mut rewards = Vec::new();
    let mut trace = record_trace.then(Vec::new);
    let mut reached_goal = false;

    for step_index in 0..max_steps {
        let mut plan_rng = episode_rng(seed, FIRST_PLAN_STREAM + step_index);
        let action = agent.plan(&mut plan_rng);
        let step = m.generative_step(state, action, &mut env_rng);
        rewards.push(step.reward);
        if let Some(t) = trace.as_mut() {
            t.push(TraceStep { action, observation: step.observation, reward: step.reward });
        }
        state = step.next_state;
        if m.is_terminal(state) {
            reached_goal = step.reward > 0.0;
            break;
        }
        if agent.observe(action, step.observation, &mut plan_rng)? == AgentStatus::EpisodeOver {
            break;
        }
    }

    Ok(EpisodeResult {
        seed,
        steps: rewards.len() as u64,
        discounted: discounted_return(&rewards, m.discount()),
        cumulative: rewards.iter().sum(),
        reached_goal,
        trace,
    })
}

fn run_batch_on<M: PomdpModel + Sync>(m: &M, cfg: &RunConfig, record_trace: bool) -> BatchOutput {
    let planner_cfg = cfg.planner.to_planner_config(m.discount());
    let outcomes: Vec<Result<EpisodeResult, EpisodeFailure>> = (0..cfg.episodes)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.base_seed.wrapping_add(i);
            let mut planner = Planner::new(m, planner_cfg);
            run_episode(m, &mut planner, seed, cfg.max_steps, record_trace)
                .map_err(|e| EpisodeFailure { seed, message: e.to_string() })
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(failure) => failures.push(failure),
        }
    }
    let stats = BatchStats::from_rows(&rows, failures.len() as u64);
    BatchOutput { rows, failures, stats }
}

/// Builds the configured model and runs the whole batch with derived seeds.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchOutput, HarnessError> {
    run_batch_traced(cfg, false)
}

/// As [`run_batch`], optionally keeping per-step traces in memory.
pub fn run_batch_traced(cfg: &RunConfig, record_trace: bool) -> Result<BatchOutput, HarnessError> {
    match &cfg.domain {
        DomainSpec::Tiger { params } => {
            let m = TigerModel::new(*params);
            Ok(run_batch_on(&m, cfg, record_trace))
        }
        DomainSpec::Hallway { k1, k2, start } => {
            let m = HallwayModel::new(*k1, *k2, (*start).into());
            Ok(run_batch_on(&m, cfg, record_trace))
        }
    }
}

/// One grid-search cell with its aggregate results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub c: f64,
    pub e: f64,
    pub stats: BatchStats,
}

/// Runs a batch per `(c, e)` cell and returns the table ranked by mean
/// discounted return, best first. Every cell reuses the same base seed so
/// cells are compared on identical episode draws. For plain UCB1 planners
/// the `e` grid is ignored.
pub fn grid_search(
    template: &RunConfig,
    c_grid: &[f64],
    e_grid: &[f64],
    episodes_per_cell: u64,
) -> Result<Vec<GridCell>, HarnessError> {
    if c_grid.is_empty() {
        return Err(HarnessError::Config("empty c grid".into()));
    }
    let e_values: Vec<f64> = match template.planner.kind {
        PlannerKind::Pomcp => vec![0.0],
        PlannerKind::Pomcpe => {
            if e_grid.is_empty() {
                return Err(HarnessError::Config("empty e grid".into()));
            }
            e_grid.to_vec()
        }
    };
    let mut cells = Vec::new();
    for &c in c_grid {
        for &e in &e_values {
            let mut cfg = template.clone();
            cfg.planner.c = c;
            cfg.planner.e = e;
            cfg.episodes = episodes_per_cell;
            let out = run_batch(&cfg)?;
            cells.push(GridCell { c, e, stats: out.stats });
        }
    }
    cells.sort_by(|a, b| {
        let key = |cell: &GridCell| cell.stats.mean_discounted.unwrap_or(f64::NEG_INFINITY);
        key(b).partial_cmp(&key(a)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(cells)
}

/// Writes per-episode rows as CSV plus a JSON sidecar echoing the stats and
/// the full configuration, enough to rerun the batch.
pub fn write_results(
    rows: &[EpisodeResult],
    failures: &[EpisodeFailure],
    stats: &BatchStats,
    cfg: &RunConfig,
    path: &Path,
) -> Result<(), HarnessError> {
    let mut csv = String::from(RESULTS_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed, r.steps, r.discounted, r.cumulative, r.reached_goal
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(csv.as_bytes()).map_err(|e| io_err(path, e))?;

    let sidecar = summary_path(path);
    let summary = serde_json::json!({
        "config": cfg,
        "stats": stats,
        "failures": failures,
    });
    let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&sidecar, body + "\n").map_err(|e| io_err(&sidecar, e))
}

/// `results.csv` -> `results.summary.json`.
pub fn summary_path(path: &Path) -> PathBuf {
    path.with_extension("summary.json")
}

/// Parses rows written by [`write_results`]; used to re-derive aggregates.
pub fn read_results(path: &Path) -> Result<Vec<EpisodeResult>, HarnessError> {
    let body = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULTS_HEADER => {}
        _ => {
            return Err(HarnessError::Parse {
                path: path.to_path_buf(),
                line: 1,
                detail: format!("expected header `{RESULTS_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let parse = |what: &str, value: Option<&&str>| -> Result<String, HarnessError> {
            value.map(|v| v.to_string()).ok_or_else(|| HarnessError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                detail: format!("missing column {what}"),
            })
        };
        let err = |what: &str| HarnessError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            detail: format!("bad {what}"),
        };
        rows.push(EpisodeResult {
            seed: parse("seed", parts.first())?.parse().map_err(|_| err("seed"))?,
            steps: parse("steps", parts.get(1))?.parse().map_err(|_| err("steps"))?,
            discounted: parse("discounted", parts.get(2))?.parse().map_err(|_| err("discounted"))?,
            cumulative: parse("cumulative", parts.get(3))?.parse().map_err(|_| err("cumulative"))?,
            reached_goal: parse("reached_goal", parts.get(4))?.parse().map_err(|_| err("reached_goal"))?,
            trace: None,
        });
    }
    Ok(rows)
}

/// Writes the ranked grid-search table as CSV.
pub fn write_grid(cells: &[GridCell], path: &Path) -> Result<(), HarnessError> {
    let mut out = String::from(
        "c,e,mean_discounted,stddev_discounted,mean_cumulative,stddev_cumulative,success_rate,episodes,failures\n",
    );
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            cell.c,
            cell.e,
            fmt(cell.stats.mean_discounted),
            fmt(cell.stats.stddev_discounted),
            fmt(cell.stats.mean_cumulative),
            fmt(cell.stats.stddev_cumulative),
            fmt(cell.stats.success_rate),
            cell.stats.episodes,
            cell.stats.failures,
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &'static str, result: Result<String, String>) {
        let outcome = match result {
            Ok(detail) => CheckOutcome { name, passed: true, detail },
            Err(detail) => CheckOutcome { name, passed: false, detail },
        };
        self.checks.push(outcome);
    }
}

/// Bundled oracle cross-checks: the incremental-entropy property suite, the
/// tiger reference values, and layout validation for small hallways.
pub fn validate_command() -> ValidationReport {
    let mut report = ValidationReport::default();
    report.record("entropy-incremental-vs-full", check_incremental_entropy());
    report.record("entropy-base-cases", check_entropy_base_cases());
    report.record("tiger-exact-values", check_tiger_values());
    report.record("tiger-oracle", check_tiger_oracle());
    for k in 0..3usize {
        let result = check_hallway_layout(k);
        report.record(
            match k {
                0 => "hallway-layout-k0",
                1 => "hallway-layout-k1",
                _ => "hallway-layout-k2",
            },
            result,
        );
    }
    report
}

fn check_incremental_entropy() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut filter = ParticleFilter::new();
    let mut worst = 0.0f64;
    for step in 0..100_000u64 {
        let s = rand::Rng::random_range(&mut rng, 0..100usize);
        filter.add_particle(s);
        let full = filter.full_entropy().map_err(|e| e.to_string())?;
        let drift = (filter.entropy() - full).abs();
        worst = worst.max(drift);
        if drift > 1e-6 {
            return Err(format!("cached entropy drifted {drift:.3e} at step {step}"));
        }
    }
    Ok(format!("max drift {worst:.3e} over 1e5 insertions"))
}

fn check_entropy_base_cases() -> Result<String, String> {
    let mut f = ParticleFilter::new();
    f.add_particle(0);
    if f.entropy().abs() > 1e-12 {
        return Err(format!("H_1 = {}, expected 0", f.entropy()));
    }
    let mut dup = f.clone();
    dup.add_particle(0);
    if dup.entropy().abs() > 1e-12 {
        return Err(format!("duplicate case H_2 = {}, expected 0", dup.entropy()));
    }
    f.add_particle(1);
    if (f.entropy() - std::f64::consts::LN_2).abs() > 1e-12 {
        return Err(format!("distinct case H_2 = {}, expected ln 2", f.entropy()));
    }
    Ok("H1 = 0, duplicate -> 0, distinct -> ln 2".into())
}

fn check_tiger_values() -> Result<String, String> {
    let m = TigerModel::new(TigerParams::default());
    let b = |l: f64, r: f64| DenseBelief::new(vec![l, r, 0.0]).unwrap();
    let cases = [
        (b(0.5, 0.5), ACT_OPEN_LEFT, -45.0),
        (b(0.8, 0.2), ACT_OPEN_LEFT, -78.0),
        (b(0.8, 0.2), 2, -12.0),
        (b(0.96, 0.04), ACT_OPEN_LEFT, -95.6),
        (b(0.96, 0.04), 2, 5.6),
    ];
    for (belief, action, expected) in cases {
        let got = expected_reward(&belief, action, &m);
        if got != expected {
            return Err(format!("expected_reward({action}) = {got}, expected {expected}"));
        }
    }
    let up = exact_belief_update(&b(0.5, 0.5), ACT_LISTEN, OBS_HEAR_LEFT, &m).map_err(|e| e.to_string())?;
    if (up.probs()[0] - 0.8).abs() > 1e-12 {
        return Err(format!("posterior {} after hear-left, expected 0.8", up.probs()[0]));
    }
    let back = exact_belief_update(&b(0.8, 0.2), ACT_LISTEN, OBS_HEAR_RIGHT, &m).map_err(|e| e.to_string())?;
    if (back.probs()[0] - 0.5).abs() > 1e-12 {
        return Err(format!("posterior {} after contradiction, expected 0.5", back.probs()[0]));
    }
    Ok("section-3 rewards and Bayes updates reproduced".into())
}

fn check_tiger_oracle() -> Result<String, String> {
    let m = TigerModel::new(TigerParams::default());
    let oracle = ExpectimaxOracle::default();
    let uniform = DenseBelief::new(vec![0.5, 0.5, 0.0]).unwrap();
    let greedy = oracle.greedy_action(&uniform, 3, &m).map_err(|e| e.to_string())?;
    if greedy != ACT_LISTEN {
        return Err(format!("greedy action at uniform was {greedy}, expected listen"));
    }
    let voi = oracle
        .value_of_information(&uniform, ACT_LISTEN, 3, &m)
        .map_err(|e| e.to_string())?;
    if voi <= 0.0 {
        return Err(format!("voi(listen) = {voi}, expected positive"));
    }
    let certain = DenseBelief::new(vec![1.0, 0.0, 0.0]).unwrap();
    let voi = oracle
        .value_of_information(&certain, ACT_LISTEN, 1, &m)
        .map_err(|e| e.to_string())?;
    if voi >= 0.0 {
        return Err(format!("voi(listen | certain) = {voi}, expected negative"));
    }
    Ok("listen optimal at uniform, dominated under certainty".into())
}

fn check_hallway_layout(k: usize) -> Result<String, String> {
    let m = long_hallway_model(k, k);
    let report = validate_layout(m.layout()).map_err(|e| e.to_string())?;
    let expected_states = (18 + 4 * k) * 4;
    if report.states != expected_states {
        return Err(format!("{} states, expected {expected_states}", report.states));
    }
    if m.num_observations() != 48 {
        return Err(format!("{} observations, expected 48", m.num_observations()));
    }
    Ok(format!(
        "{} states, f->star {} actions, optimal episode {} actions",
        report.states, report.f_to_star[0], report.optimal_actions
    ))
}

/// Scripted-policy episode on the hallway; pins the ground-truth optima.
pub fn run_scripted_hallway(
    k1: usize,
    k2: usize,
    start: StartSpec,
    seed: u64,
) -> Result<EpisodeResult, HarnessError> {
    let m = HallwayModel::new(k1, k2, start.into());
    let mut agent = match start {
        StartSpec::Standard => ScriptedOptimalPolicy::standard(k1, k2),
        StartSpec::Modified => ScriptedOptimalPolicy::modified(k1, k2),
    };
    run_episode(&m, &mut agent, seed, 200, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal scratch-dir helper; cleaned up on drop.
    struct TempDir(PathBuf);

    impl TempDir {
        fn path(&self) -> &Path {
            &self.0
        }
    }

    impl Drop for TempDir {
        fn drop(&mut self) {
            let _ = std::fs::remove_dir_all(&self.0);
        }
    }

    fn tempdir(tag: &str) -> TempDir {
        let dir = std::env::temp_dir().join(format!("pomcpe-test-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn tiger_cfg(sims: u64, episodes: u64) -> RunConfig {
        RunConfig {
            domain: DomainSpec::Tiger { params: TigerParams::default() },
            planner: PlannerSpec::pomcp(50.0).with_sims(sims),
            episodes,
            max_steps: 50,
            base_seed: 7,
            out: None,
        }
    }

    #[test]
    fn scripted_hallway_reproduces_reference_episode_values() {
        for seed in [0u64, 1, 99] {
            let r = run_scripted_hallway(1, 1, StartSpec::Standard, seed).unwrap();
            assert_eq!(r.steps, 13);
            assert_eq!(r.cumulative, 88.0);
            assert!((r.discounted - 44.84).abs() < 0.01);
            assert!(r.reached_goal);
        }
        let r = run_scripted_hallway(2, 2, StartSpec::Standard, 3).unwrap();
        assert_eq!(r.steps, 15);
        assert_eq!(r.cumulative, 86.0);
        assert!((r.discounted - 38.52).abs() < 0.01);
    }

    #[test]
    fn episodes_are_deterministic_in_the_seed() {
        let cfg = tiger_cfg(400, 1);
        let a = run_batch(&cfg).unwrap();
        let b = run_batch(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn batch_seeds_derive_from_the_base_seed() {
        let cfg = tiger_cfg(100, 4);
        let out = run_batch(&cfg).unwrap();
        let seeds: Vec<u64> = out.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9, 10]);
    }

    #[test]
    fn parallel_batches_match_a_serial_loop() {
        let cfg = tiger_cfg(200, 6);
        let batched = run_batch(&cfg).unwrap();
        let m = TigerModel::new(TigerParams::default());
        for (i, row) in batched.rows.iter().enumerate() {
            let seed = cfg.base_seed + i as u64;
            let mut planner = Planner::new(&m, cfg.planner.to_planner_config(m.discount()));
            let serial = run_episode(&m, &mut planner, seed, cfg.max_steps, false).unwrap();
            assert_eq!(&serial, row);
        }
    }

    #[test]
    fn empty_batches_produce_a_zero_count_marker() {
        let cfg = tiger_cfg(100, 0);
        let out = run_batch(&cfg).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.stats.episodes, 0);
        assert_eq!(out.stats.mean_discounted, None);
        assert_eq!(out.stats.success_rate, None);
    }

    #[test]
    fn csv_roundtrip_recomputes_stats_bit_exactly() {
        let dir = tempdir("csv");
        let path = dir.path().join("results.csv");
        let cfg = tiger_cfg(300, 5);
        let out = run_batch(&cfg).unwrap();
        write_results(&out.rows, &out.failures, &out.stats, &cfg, &path).unwrap();

        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), 6);
        assert_eq!(body.lines().next().unwrap(), RESULTS_HEADER);

        let parsed = read_results(&path).unwrap();
        let recomputed = BatchStats::from_rows(&parsed, out.failures.len() as u64);
        assert_eq!(recomputed, out.stats);

        let summary = fs::read_to_string(summary_path(&path)).unwrap();
        let echoed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(echoed["config"]["base_seed"], serde_json::json!(7));
        assert_eq!(echoed["config"]["planner"]["c"], serde_json::json!(50.0));
        assert_eq!(echoed["stats"]["episodes"], serde_json::json!(5));
    }

    #[test]
    fn run_config_json_roundtrip() {
        let cfg = RunConfig {
            domain: DomainSpec::Hallway { k1: 1, k2: 1, start: StartSpec::Modified },
            planner: PlannerSpec::pomcpe(100.0, 500.0),
            episodes: 100,
            max_steps: 200,
            base_seed: 42,
            out: Some("results.csv".into()),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let parsed: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, cfg);

        // Sparse configs rely on serde defaults.
        let sparse: RunConfig = serde_json::from_str(
            r#"{
                "domain": {"name": "hallway", "k1": 1, "k2": 1},
                "planner": {"kind": "pomcp", "c": 50.0},
                "episodes": 3
            }"#,
        )
        .unwrap();
        assert_eq!(sparse.max_steps, 200);
        assert_eq!(sparse.planner.sims, 10_000);
        assert_eq!(sparse.planner.k_threshold, 10);
    }

    #[test]
    fn grid_search_ranks_by_mean_discounted() {
        let mut cfg = tiger_cfg(150, 0);
        cfg.planner = PlannerSpec::pomcp(50.0).with_sims(150);
        let cells = grid_search(&cfg, &[5.0, 50.0], &[], 4).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells[0].stats.mean_discounted >= cells[1].stats.mean_discounted);
        assert!(cells.iter().all(|cell| cell.stats.episodes == 4));

        let dir = tempdir("grid");
        let path = dir.path().join("grid.csv");
        write_grid(&cells, &path).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), 3);

        assert!(matches!(grid_search(&cfg, &[], &[], 1), Err(HarnessError::Config(_))));
    }

    #[test]
    fn validate_command_passes_on_a_fresh_build() {
        let report = validate_command();
        for check in &report.checks {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
        assert!(report.passed());
    }

    #[test]
    fn reduction_regression_on_tiger() {
        // The entropy planner with e = 0 and back-propagation disabled must
        // replay the plain planner's trajectories bit for bit.
        let m = TigerModel::new(TigerParams::default());
        for episode in 0..10u64 {
            let seed = 1000 + episode;
            let pomcp_cfg = PlannerSpec::pomcp(50.0).with_sims(200).to_planner_config(m.discount());
            let mut planner = Planner::new(&m, pomcp_cfg);
            let plain = run_episode(&m, &mut planner, seed, 30, true).unwrap();

            let mut pomcpe_spec = PlannerSpec::pomcpe(50.0, 0.0).with_sims(200);
            pomcpe_spec.k_threshold = u64::MAX;
            let mut planner = Planner::new(&m, pomcpe_spec.to_planner_config(m.discount()));
            let augmented = run_episode(&m, &mut planner, seed, 30, true).unwrap();

            assert_eq!(plain, augmented);
        }
    }
}
