//! Finite-horizon expectimax over exact beliefs.
//!
//! This is a desk-scale oracle: it enumerates every observation branch, so it
//! is only tractable for small `|S|·|A|·|Z|` and horizons of a few steps. The
//! planners never call it; tests use it as the independent reference for what
//! a converged planner should prefer.

use thiserror::Error;

use crate::model::{exact_belief_update, expected_reward, observation_likelihood, DenseBelief, PomdpModel};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("expectimax enumerated more than {cap} belief nodes; the oracle is not meant for domains this large")]
    BudgetExceeded { cap: usize },
    #[error("expectimax needs at least one action")]
    NoActions,
}

/// Exact Bellman backup oracle with a node cap guarding against misuse on
/// large domains.
#[derive(Debug, Clone, Copy)]
pub struct ExpectimaxOracle {
    node_cap: usize,
}

impl Default for ExpectimaxOracle {
    fn default() -> Self {
        Self { node_cap: 1_000_000 }
    }
}

impl ExpectimaxOracle {
    pub fn with_node_cap(node_cap: usize) -> Self {
        Self { node_cap }
    }

    /// `Q(b, a)` over `horizon` remaining decisions. Horizons zero and one
    /// both reduce to the immediate expected reward; deeper horizons add the
    /// discounted expectation of the best continuation per observation.
    pub fn q_value<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        a: usize,
        horizon: usize,
        m: &M,
    ) -> Result<f64, OracleError> {
        let mut nodes = 0usize;
        self.q_inner(b, a, horizon, m, &mut nodes)
    }

    /// `V(b) = max_a Q(b, a)`.
    pub fn value<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        horizon: usize,
        m: &M,
    ) -> Result<f64, OracleError> {
        let mut nodes = 0usize;
        self.value_inner(b, horizon, m, &mut nodes)
    }

    /// Argmax of `Q(b, ·)`; ties break to the lowest action index.
    pub fn greedy_action<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        horizon: usize,
        m: &M,
    ) -> Result<usize, OracleError> {
        if m.num_actions() == 0 {
            return Err(OracleError::NoActions);
        }
        let mut nodes = 0usize;
        let mut best = (0usize, f64::NEG_INFINITY);
        for a in 0..m.num_actions() {
            let q = self.q_inner(b, a, horizon, m, &mut nodes)?;
            if q > best.1 {
                best = (a, q);
            }
        }
        Ok(best.0)
    }

    /// Value of information of `a` at `b`: `Q(b,a) - max_{a' ≠ a} Q(b,a')`.
    ///
    /// Positive means `a` (typically an information-gathering action) beats
    /// every alternative; negative means some task action dominates.
    pub fn value_of_information<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        a: usize,
        horizon: usize,
        m: &M,
    ) -> Result<f64, OracleError> {
        if m.num_actions() < 2 {
            return Err(OracleError::NoActions);
        }
        let mut nodes = 0usize;
        let q_a = self.q_inner(b, a, horizon, m, &mut nodes)?;
        let mut best_other = f64::NEG_INFINITY;
        for other in 0..m.num_actions() {
            if other == a {
                continue;
            }
            let q = self.q_inner(b, other, horizon, m, &mut nodes)?;
            if q > best_other {
                best_other = q;
            }
        }
        Ok(q_a - best_other)
    }

    fn bump(&self, nodes: &mut usize) -> Result<(), OracleError> {
        *nodes += 1;
        if *nodes > self.node_cap {
            Err(OracleError::BudgetExceeded { cap: self.node_cap })
        } else {
            Ok(())
        }
    }

    fn q_inner<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        a: usize,
        horizon: usize,
        m: &M,
        nodes: &mut usize,
    ) -> Result<f64, OracleError> {
        self.bump(nodes)?;
        let immediate = expected_reward(b, a, m);
        if horizon <= 1 {
            return Ok(immediate);
        }
        let mut future = 0.0;
        for z in 0..m.num_observations() {
            let pr_z = observation_likelihood(b, a, z, m);
            if pr_z <= 0.0 {
                continue;
            }
            let next = exact_belief_update(b, a, z, m)
                .expect("positive-likelihood observation must condition");
            future += pr_z * self.value_inner(&next, horizon - 1, m, nodes)?;
        }
        Ok(immediate + m.discount() * future)
    }

    fn value_inner<M: PomdpModel + ?Sized>(
        &self,
        b: &DenseBelief,
        horizon: usize,
        m: &M,
        nodes: &mut usize,
    ) -> Result<f64, OracleError> {
        if horizon == 0 {
            return Ok(0.0);
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..m.num_actions() {
            let q = self.q_inner(b, a, horizon, m, nodes)?;
            if q > best {
                best = q;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tiger::{TigerModel, TigerParams, ACT_LISTEN, ACT_OPEN_LEFT, ACT_OPEN_RIGHT};

    fn tiger() -> TigerModel {
        TigerModel::new(TigerParams::default())
    }

    fn belief(left: f64, right: f64) -> DenseBelief {
        DenseBelief::new(vec![left, right, 0.0]).unwrap()
    }

    #[test]
    fn door_value_is_immediate_at_every_horizon() {
        // Doors are terminal, so their Q never grows a future term.
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        let b = belief(0.5, 0.5);
        for h in [0, 1, 3, 5] {
            assert_eq!(oracle.q_value(&b, ACT_OPEN_LEFT, h, &m).unwrap(), -45.0);
        }
    }

    #[test]
    fn horizon_zero_and_one_reduce_to_expected_reward() {
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        let b = belief(0.5, 0.5);
        assert_eq!(oracle.q_value(&b, ACT_LISTEN, 0, &m).unwrap(), -1.0);
        assert_eq!(oracle.q_value(&b, ACT_LISTEN, 1, &m).unwrap(), -1.0);
    }

    #[test]
    fn listen_dominates_doors_at_horizon_three() {
        // Hand enumeration of the two-step observation branches gives
        // Q(listen, uniform, 3) = -1 + 0.95·(-1 + 0.95·(0.68·(60/17) - 0.32))
        //                       = -0.0728.
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        let b = belief(0.5, 0.5);
        let q_listen = oracle.q_value(&b, ACT_LISTEN, 3, &m).unwrap();
        assert!((q_listen - (-0.0728)).abs() < 1e-9);
        let q_left = oracle.q_value(&b, ACT_OPEN_LEFT, 3, &m).unwrap();
        let q_right = oracle.q_value(&b, ACT_OPEN_RIGHT, 3, &m).unwrap();
        assert!(q_listen > q_left && q_listen > q_right);
        assert_eq!(oracle.greedy_action(&b, 3, &m).unwrap(), ACT_LISTEN);
    }

    #[test]
    fn greedy_action_under_certainty_opens_the_safe_door() {
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        assert_eq!(oracle.greedy_action(&belief(1.0, 0.0), 1, &m).unwrap(), ACT_OPEN_RIGHT);
        assert_eq!(oracle.greedy_action(&belief(0.0, 1.0), 1, &m).unwrap(), ACT_OPEN_LEFT);
    }

    #[test]
    fn voi_signs_match_the_oracle() {
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        let uniform = belief(0.5, 0.5);
        let voi = oracle.value_of_information(&uniform, ACT_LISTEN, 3, &m).unwrap();
        assert!(voi > 0.0);
        assert!((voi - (45.0 - 0.0728)).abs() < 1e-9);
        let certain = belief(1.0, 0.0);
        let voi = oracle.value_of_information(&certain, ACT_LISTEN, 1, &m).unwrap();
        assert!(voi < 0.0);
        assert_eq!(voi, -11.0);
    }

    #[test]
    fn node_cap_trips_budget_exceeded() {
        let m = tiger();
        let oracle = ExpectimaxOracle::with_node_cap(5);
        let b = belief(0.5, 0.5);
        assert!(matches!(
            oracle.q_value(&b, ACT_LISTEN, 6, &m),
            Err(OracleError::BudgetExceeded { cap: 5 })
        ));
    }

    #[test]
    fn greedy_action_is_invariant_under_positive_affine_reward_rescaling() {
        use crate::model::PomdpModel;
        use rand::RngCore;

        struct Rescaled<'a> {
            inner: &'a TigerModel,
            scale: f64,
            shift: f64,
        }
        impl PomdpModel for Rescaled<'_> {
            fn num_states(&self) -> usize { self.inner.num_states() }
            fn num_actions(&self) -> usize { self.inner.num_actions() }
            fn num_observations(&self) -> usize { self.inner.num_observations() }
            fn discount(&self) -> f64 { 0.0 }
            fn transition_prob(&self, s: usize, a: usize, s2: usize) -> f64 {
                self.inner.transition_prob(s, a, s2)
            }
            fn observation_prob(&self, s2: usize, a: usize, z: usize) -> f64 {
                self.inner.observation_prob(s2, a, z)
            }
            fn reward(&self, s: usize, a: usize) -> f64 {
                self.scale * self.inner.reward(s, a) + self.shift
            }
            fn initial_probs(&self) -> &[f64] { self.inner.initial_probs() }
            fn is_terminal(&self, s: usize) -> bool { self.inner.is_terminal(s) }
            fn generative_step(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> crate::model::Step {
                self.inner.generative_step(s, a, rng)
            }
        }

        // With discount 0 the argmax depends on immediate rewards only, so a
        // positive affine map must not change it at horizon 1. Beliefs with
        // exact Q ties are avoided; rescaling is only argmax-stable up to
        // floating-point noise there.
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        for (l, r) in [(0.5, 0.5), (0.96, 0.04), (0.2, 0.8), (1.0, 0.0)] {
            let b = belief(l, r);
            let base = oracle.greedy_action(&b, 1, &m).unwrap();
            for (scale, shift) in [(2.0, 0.0), (0.25, 3.0), (17.0, -4.0)] {
                let scaled = Rescaled { inner: &m, scale, shift };
                assert_eq!(oracle.greedy_action(&b, 1, &scaled).unwrap(), base);
            }
        }
    }

    #[test]
    fn horizon_growth_is_bounded_by_discounted_reward_magnitude() {
        // |V_h - V_{h-1}| ≤ γ^{h-1} · max|R| for the tiger model.
        let m = tiger();
        let oracle = ExpectimaxOracle::default();
        let max_r = 100.0;
        for (l, r) in [(0.5, 0.5), (0.8, 0.2), (0.96, 0.04)] {
            let b = belief(l, r);
            for h in 1..6 {
                let v_h = oracle.value(&b, h, &m).unwrap();
                let v_prev = oracle.value(&b, h - 1, &m).unwrap();
                let bound = m.discount().powi(h as i32 - 1) * max_r;
                assert!((v_h - v_prev).abs() <= bound + 1e-9);
            }
        }
    }
}
