//! Monte-Carlo tree search over particle beliefs.
//!
//! Both planners share the same [`SearchTree`] machinery and differ only in
//! action selection: plain UCB1 for [`PlannerKind::Pomcp`], UCB1 plus an
//! entropy-reduction bonus for [`PlannerKind::Pomcpe`]. With `entropy_e = 0`
//! and `k_threshold = u64::MAX` the entropy variant reproduces the plain
//! planner's decisions bit for bit under a shared RNG stream.

use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::model::PomdpModel;
use crate::particles::{reinvigorate, ParticleError, ParticleFilter};
use crate::tree::{ActionId, BeliefId, SearchTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Pomcp,
    Pomcpe,
}

/// How the selection bonus combines the immediate entropy reduction with the
/// stored maximum under the action node. `Sum` follows the search pseudocode
/// of the entropy-augmented planner; `Max` follows the heuristic formula's
/// caption reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EntropyCombine {
    #[default]
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Fixed number of simulated trajectories per decision. Deterministic.
    Simulations(u64),
    /// Wall-clock budget per decision. Anytime, not reproducible.
    TimeMs(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    /// UCB1 exploration scale `c`.
    pub exploration_c: f64,
    /// Entropy-bonus scale `e`; zero disables the bonus.
    pub entropy_e: f64,
    pub gamma: f64,
    /// Trajectories stop once `gamma^depth < epsilon_cutoff`.
    pub epsilon_cutoff: f64,
    /// Minimum particle throughput before an action node's entropy reduction
    /// is trusted for back-propagation. `u64::MAX` disables back-propagation.
    pub k_threshold: u64,
    pub budget: Budget,
    /// Particle count for the root filter at episode start and after
    /// re-seeding a depleted root.
    pub initial_particles: u64,
    pub entropy_combine: EntropyCombine,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kind: PlannerKind::Pomcp,
            exploration_c: 50.0,
            entropy_e: 0.0,
            gamma: 0.95,
            epsilon_cutoff: 0.01,
            k_threshold: 10,
            budget: Budget::Simulations(10_000),
            initial_particles: 256,
            entropy_combine: EntropyCombine::Sum,
        }
    }
}

impl PlannerConfig {
    pub fn pomcp(c: f64) -> Self {
        Self { kind: PlannerKind::Pomcp, exploration_c: c, ..Self::default() }
    }

    pub fn pomcpe(c: f64, e: f64) -> Self {
        Self {
            kind: PlannerKind::Pomcpe,
            exploration_c: c,
            entropy_e: e,
            ..Self::default()
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_initial_particles(mut self, n: u64) -> Self {
        self.initial_particles = n;
        self
    }

    pub fn with_k_threshold(mut self, k: u64) -> Self {
        self.k_threshold = k;
        self
    }
}

/// Result of one planning call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub action: usize,
    pub simulations: u64,
    /// Set when the budget allowed no simulations; the action is then just
    /// the lowest-index one.
    pub zero_budget: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvanceOutcome {
    /// The new root is ready for the next planning call.
    Planning,
    /// Every particle consistent with the executed step is terminal; the
    /// episode is over.
    EpisodeOver,
}

/// UCB1 action choice: `argmax_a V(a) + c·sqrt(ln N(b) / N(b,a))`.
///
/// Unvisited actions have infinite priority; among several the lowest index
/// wins, as it does on exact score ties.
pub fn ucb1_select(tree: &SearchTree, node: BeliefId, c: f64) -> ActionId {
    let children = tree
        .belief(node)
        .children
        .as_ref()
        .expect("ucb1_select requires an expanded node");
    for &a in children.iter() {
        if tree.action(a).visits == 0 {
            return a;
        }
    }
    let ln_n = (tree.belief(node).visits.max(1) as f64).ln();
    let mut best = children[0];
    let mut best_score = f64::NEG_INFINITY;
    for &a in children.iter() {
        let stats = tree.action(a);
        let score = stats.q_value + c * (ln_n / stats.visits as f64).sqrt();
        if score > best_score {
            best_score = score;
            best = a;
        }
    }
    best
}

/// Entropy-bonus denominator: `sqrt(ln N(b,a))`, guarded near the `ln 1 = 0`
/// singularity by using `sqrt(ln(N+1))` for `N ∈ {1, 2}`.
fn entropy_denominator(visits: u64) -> f64 {
    let n = if visits <= 2 { visits + 1 } else { visits };
    (n as f64).ln().sqrt()
}

/// The selection bonus `e · ΔH / sqrt(ln N(b,a))` with the guarded
/// denominator.
pub fn entropy_bonus(e: f64, delta_h: f64, visits: u64) -> f64 {
    e * (delta_h / entropy_denominator(visits))
}

/// Raises `max_entropy_reduction` to `dh` on `a` and every ancestor action
/// node up to the root. Stored maxima start at zero, so non-positive `dh`
/// never changes anything; the walk stops early once a node already stores at
/// least `dh`, which its ancestors then do as well.
pub fn back_propagate_entropy(tree: &mut SearchTree, a: ActionId, dh: f64) {
    let mut current = Some(a);
    while let Some(id) = current {
        let node = tree.action_mut(id);
        if node.max_entropy_reduction >= dh {
            break;
        }
        node.max_entropy_reduction = dh;
        current = tree.belief(tree.action(id).parent).parent;
    }
}

/// Immediate-plus-stored entropy reduction term for action node `a`.
///
/// The immediate reduction is the parent belief's entropy minus the
/// throughput-weighted entropy of `a`'s belief children. When at least
/// `k_threshold` particles have landed in those children the reduction is
/// back-propagated; below the threshold only the immediate term is used.
/// With no child particles yet there is nothing to measure and the stored
/// maximum (zero until any back-propagation) is returned.
pub fn entropy_term(
    tree: &mut SearchTree,
    a: ActionId,
    k_threshold: u64,
    combine: EntropyCombine,
) -> f64 {
    let node = tree.action(a);
    let n = node.particle_throughput;
    if node.children.is_empty() || n == 0 {
        return tree.action(a).max_entropy_reduction;
    }
    let parent_entropy = tree.belief(node.parent).filter.entropy();
    let mut weighted = 0.0;
    for &(_, child) in &node.children {
        let f = &tree.belief(child).filter;
        if f.total() > 0 {
            weighted += (f.total() as f64 / n as f64) * f.entropy();
        }
    }
    let delta_h = parent_entropy - weighted;
    if n >= k_threshold {
        back_propagate_entropy(tree, a, delta_h);
    }
    let stored = tree.action(a).max_entropy_reduction;
    match combine {
        EntropyCombine::Sum => delta_h + stored,
        EntropyCombine::Max => delta_h.max(stored),
    }
}

/// Entropy-augmented action choice: UCB1 plus `e·ΔH_a / sqrt(ln N(b,a))`.
pub fn pomcpe_select(
    tree: &mut SearchTree,
    node: BeliefId,
    c: f64,
    e: f64,
    k_threshold: u64,
    combine: EntropyCombine,
) -> ActionId {
    let children = tree
        .belief(node)
        .children
        .as_ref()
        .expect("pomcpe_select requires an expanded node");
    for &a in children.iter() {
        if tree.action(a).visits == 0 {
            return a;
        }
    }
    let children: Vec<ActionId> = children.to_vec();
    let ln_n = (tree.belief(node).visits.max(1) as f64).ln();
    let mut best = children[0];
    let mut best_score = f64::NEG_INFINITY;
    for a in children {
        let term = entropy_term(tree, a, k_threshold, combine);
        let stats = tree.action(a);
        let score = stats.q_value
            + c * (ln_n / stats.visits as f64).sqrt()
            + entropy_bonus(e, term, stats.visits);
        if score > best_score {
            best_score = score;
            best = a;
        }
    }
    best
}

/// One planner instance owns one search tree for the duration of an episode.
pub struct Planner<'m, M: PomdpModel> {
    model: &'m M,
    cfg: PlannerConfig,
    tree: SearchTree,
    /// First depth at which `gamma^depth < epsilon` holds.
    cutoff_depth: u32,
    /// Every backed-up return, recorded only under test to check the
    /// running-mean identity.
    #[cfg(test)]
    backup_log: Vec<(ActionId, f64)>,
}

impl<'m, M: PomdpModel> Planner<'m, M> {
    pub fn new(model: &'m M, cfg: PlannerConfig) -> Self {
        let root_filter =
            ParticleFilter::from_distribution_even(model.initial_probs(), cfg.initial_particles);
        Self::with_root_filter(model, cfg, root_filter)
    }

    /// Starts from an explicit root belief, e.g. for planning from a
    /// non-initial belief in tests.
    pub fn with_root_filter(model: &'m M, cfg: PlannerConfig, root_filter: ParticleFilter) -> Self {
        assert!((0.0..1.0).contains(&cfg.gamma), "gamma must be in [0, 1)");
        assert!(cfg.epsilon_cutoff > 0.0, "epsilon cutoff must be positive");
        let mut cutoff_depth = 0u32;
        let mut power = 1.0;
        while power >= cfg.epsilon_cutoff && cutoff_depth < 100_000 {
            cutoff_depth += 1;
            power *= cfg.gamma;
        }
        Self {
            model,
            cfg,
            tree: SearchTree::new(root_filter),
            cutoff_depth,
            #[cfg(test)]
            backup_log: Vec::new(),
        }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    /// Runs simulations until the budget is exhausted and returns the best
    /// root action. The final choice maximizes the lower confidence bound
    /// `V(a) - c·sqrt(ln N(b)/N(b,a))` (the "secure child" rule): with
    /// balanced visit counts this is just the max-Q action, while actions
    /// starved of simulations by the exploration bonuses cannot win on the
    /// noise of a handful of returns. No entropy bonus is applied here.
    pub fn search(&mut self, rng: &mut dyn RngCore) -> SearchOutcome {
        let mut simulations = 0u64;
        match self.cfg.budget {
            Budget::Simulations(n) => {
                for _ in 0..n {
                    self.run_one_simulation(rng);
                    simulations += 1;
                }
            }
            Budget::TimeMs(ms) => {
                let start = Instant::now();
                while (start.elapsed().as_millis() as u64) < ms {
                    self.run_one_simulation(rng);
                    simulations += 1;
                }
            }
        }
        if simulations == 0 {
            return SearchOutcome { action: 0, simulations: 0, zero_budget: true };
        }
        SearchOutcome { action: self.best_root_action(), simulations, zero_budget: false }
    }

    /// Root action statistics `(action, N(b,a), V(a))`, for diagnostics.
    pub fn root_stats(&self) -> Vec<(usize, u64, f64)> {
        match &self.tree.belief(self.tree.root()).children {
            None => Vec::new(),
            Some(ids) => ids
                .iter()
                .map(|&a| {
                    let n = self.tree.action(a);
                    (n.action, n.visits, n.q_value)
                })
                .collect(),
        }
    }

    fn best_root_action(&self) -> usize {
        let stats = self.root_stats();
        if stats.is_empty() {
            return 0;
        }
        let total: u64 = stats.iter().map(|(_, n, _)| *n).sum();
        let ln_total = (total.max(1) as f64).ln();
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (action, visits, q) in stats {
            if visits == 0 {
                continue;
            }
            let score = q - self.cfg.exploration_c * (ln_total / visits as f64).sqrt();
            if score > best_score {
                best_score = score;
                best = action;
            }
        }
        best
    }

    fn run_one_simulation(&mut self, rng: &mut dyn RngCore) {
        let root = self.tree.root();
        let s = match self.tree.belief(root).filter.sample(rng) {
            Ok(s) => s,
            Err(_) => self.model.sample_initial(rng),
        };
        self.simulate(s, root, 0, rng);
    }

    fn simulate(&mut self, s: usize, b: BeliefId, depth: u32, rng: &mut dyn RngCore) -> f64 {
        if depth >= self.cutoff_depth {
            return 0.0;
        }
        if self.model.is_terminal(s) {
            return 0.0;
        }
        if self.tree.belief(b).is_leaf() {
            self.tree.expand(b, self.model.num_actions());
            return self.rollout(s, depth, rng);
        }

        let a_id = match self.cfg.kind {
            PlannerKind::Pomcp => ucb1_select(&self.tree, b, self.cfg.exploration_c),
            PlannerKind::Pomcpe => pomcpe_select(
                &mut self.tree,
                b,
                self.cfg.exploration_c,
                self.cfg.entropy_e,
                self.cfg.k_threshold,
                self.cfg.entropy_combine,
            ),
        };
        let action = self.tree.action(a_id).action;
        let step = self.model.generative_step(s, action, rng);
        let child = self.tree.child_for_obs(a_id, step.observation);
        let future = self.simulate(step.next_state, child, depth + 1, rng);
        let ret = step.reward + self.cfg.gamma * future;

        let node = self.tree.belief_mut(b);
        node.filter.add_particle(s);
        node.visits += 1;
        let parent_action = node.parent;
        if let Some(pa) = parent_action {
            self.tree.action_mut(pa).particle_throughput += 1;
        }
        let stats = self.tree.action_mut(a_id);
        stats.visits += 1;
        stats.q_value += (ret - stats.q_value) / stats.visits as f64;

        #[cfg(test)]
        self.backup_log.push((a_id, ret));

        ret
    }

    fn rollout(&self, start: usize, start_depth: u32, rng: &mut dyn RngCore) -> f64 {
        let mut total = 0.0;
        let mut weight = 1.0;
        let mut s = start;
        let mut depth = start_depth;
        while depth < self.cutoff_depth && !self.model.is_terminal(s) {
            let action = rand::Rng::random_range(&mut &mut *rng, 0..self.model.num_actions());
            let step = self.model.generative_step(s, action, rng);
            total += weight * step.reward;
            weight *= self.cfg.gamma;
            s = step.next_state;
            depth += 1;
        }
        total
    }

    /// Makes the belief reached by `(a, z)` the new root, per the online
    /// planning loop. An existing child with at least `initial_particles`
    /// particles is retained together with its whole subtree; otherwise a
    /// fresh root is built by reinvigorating from the old root's filter.
    pub fn advance_root(
        &mut self,
        a: usize,
        z: usize,
        rng: &mut dyn RngCore,
    ) -> Result<AdvanceOutcome, ParticleError> {
        let root = self.tree.root();
        let child = self
            .tree
            .belief(root)
            .children
            .as_ref()
            .map(|ids| ids[a])
            .and_then(|a_id| self.tree.action(a_id).child_for(z));

        match child {
            Some(c) if self.tree.belief(c).filter.total() >= self.cfg.initial_particles => {
                self.tree = self.tree.rebase(c);
            }
            _ => {
                let mut filter = ParticleFilter::new();
                reinvigorate(
                    &mut filter,
                    &self.tree.belief(root).filter,
                    self.model,
                    a,
                    z,
                    self.cfg.initial_particles,
                    rng,
                )?;
                self.tree = SearchTree::new(filter);
            }
        }

        let filter = &self.tree.belief(self.tree.root()).filter;
        if !filter.is_empty() && filter.counts().all(|(s, _)| self.model.is_terminal(s)) {
            return Ok(AdvanceOutcome::EpisodeOver);
        }
        Ok(AdvanceOutcome::Planning)
    }

    #[cfg(test)]
    pub(crate) fn take_backup_log(&mut self) -> Vec<(ActionId, f64)> {
        std::mem::take(&mut self.backup_log)
    }
}
