//! The POMDP model abstraction and exact belief arithmetic.
//!
//! A model is the usual 7-tuple (states, actions, observations, transition,
//! observation, reward, discount) plus an initial state distribution, a
//! terminal-state predicate and a generative sampler. Everything in this
//! module works on exact probability vectors ([`DenseBelief`]); the particle
//! approximations used by the planners live in [`crate::particles`].

use rand::{Rng, RngCore};
use thiserror::Error;

/// One sampled step of the generative model: `(s', z, r) ~ G(s, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next_state: usize,
    pub observation: usize,
    pub reward: f64,
}

/// A finite, discrete POMDP.
///
/// Implementations are immutable after construction and safe to share across
/// workers; every operation is a pure function of its inputs plus the RNG
/// handle passed by the caller.
pub trait PomdpModel {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn num_observations(&self) -> usize;

    /// Discount factor in `[0, 1)`.
    fn discount(&self) -> f64;

    /// `Pr(s_next | s, a)`.
    fn transition_prob(&self, s: usize, a: usize, s_next: usize) -> f64;

    /// `Pr(z | a, s_next)`.
    fn observation_prob(&self, s_next: usize, a: usize, z: usize) -> f64;

    /// Immediate reward for taking `a` in `s`.
    fn reward(&self, s: usize, a: usize) -> f64;

    /// Initial state distribution; one probability per state.
    fn initial_probs(&self) -> &[f64];

    fn is_terminal(&self, s: usize) -> bool;

    /// Sample `(s', z, r)` from the generative model.
    fn generative_step(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> Step;

    /// Sample a state from the initial distribution.
    fn sample_initial(&self, rng: &mut dyn RngCore) -> usize {
        sample_index(self.initial_probs(), rng)
    }
}

/// Draw an index from a probability vector.
pub fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut u: f64 = rng.random();
    for (i, &p) in probs.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return i;
        }
    }
    // Guard against rounding when the row sums to just under one.
    probs.len() - 1
}

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("belief entries must be nonnegative and sum to 1 (sum was {sum})")]
    NotADistribution { sum: f64 },
    #[error("observation {observation} has zero probability under action {action}; the belief cannot be conditioned on it")]
    ImpossibleObservation { action: usize, observation: usize },
}

/// An exact probability vector over states. Oracle-side belief representation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBelief {
    probs: Vec<f64>,
}

impl DenseBelief {
    const SUM_TOL: f64 = 1e-9;

    /// Validates that `probs` is a probability vector (entries nonnegative,
    /// sum within `1e-9` of one).
    pub fn new(probs: Vec<f64>) -> Result<Self, BeliefError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(BeliefError::NotADistribution { sum });
        }
        Ok(Self { probs })
    }

    /// The initial belief of a model.
    pub fn from_initial<M: PomdpModel + ?Sized>(m: &M) -> Self {
        Self {
            probs: m.initial_probs().to_vec(),
        }
    }

    /// Uniform belief over all states.
    pub fn uniform(num_states: usize) -> Self {
        Self {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy `-Σ b(s) ln b(s)` in nats, with `0 ln 0 = 0`.
    ///
    /// Natural logarithms are used for every entropy in this crate; a fixed
    /// base only rescales the exploration hyperparameters.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Bayes update of an exact belief after taking `a` and observing `z`:
///
/// `b'(s') ∝ O(z | s', a) · Σ_s T(s' | s, a) · b(s)`
///
/// Fails with [`BeliefError::ImpossibleObservation`] when `Pr(z | b, a) = 0`,
/// which signals that the caller must re-seed its belief (see
/// [`crate::particles::reinvigorate`] for the particle analogue).
pub fn exact_belief_update<M: PomdpModel + ?Sized>(
    b: &DenseBelief,
    a: usize,
    z: usize,
    m: &M,
) -> Result<DenseBelief, BeliefError> {
    let n = m.num_states();
    let mut next = vec![0.0; n];
    for (s, &bs) in b.probs().iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        for (s_next, slot) in next.iter_mut().enumerate() {
            let t = m.transition_prob(s, a, s_next);
            if t > 0.0 {
                *slot += t * bs;
            }
        }
    }
    let mut norm = 0.0;
    for (s_next, slot) in next.iter_mut().enumerate() {
        *slot *= m.observation_prob(s_next, a, z);
        norm += *slot;
    }
    if norm <= 0.0 {
        return Err(BeliefError::ImpossibleObservation {
            action: a,
            observation: z,
        });
    }
    for slot in &mut next {
        *slot /= norm;
    }
    Ok(DenseBelief { probs: next })
}

/// Probability of observing `z` after taking `a` from belief `b`.
pub fn observation_likelihood<M: PomdpModel + ?Sized>(
    b: &DenseBelief,
    a: usize,
    z: usize,
    m: &M,
) -> f64 {
    let n = m.num_states();
    let mut total = 0.0;
    for s_next in 0..n {
        let o = m.observation_prob(s_next, a, z);
        if o == 0.0 {
            continue;
        }
        let mut pred = 0.0;
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs > 0.0 {
                pred += m.transition_prob(s, a, s_next) * bs;
            }
        }
        total += o * pred;
    }
    total
}

/// Expected immediate reward `Σ_s b(s) R(s, a)`.
pub fn expected_reward<M: PomdpModel + ?Sized>(b: &DenseBelief, a: usize, m: &M) -> f64 {
    b.probs()
        .iter()
        .enumerate()
        .map(|(s, &bs)| bs * m.reward(s, a))
        .sum()
}

/// Discounted sum `Σ_t γ^t r_t`. Empty sequences sum to zero.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&gamma));
    let mut total = 0.0;
    let mut weight = 1.0;
    for &r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    total
}

/// Frequency check used by the generative-model tests: draws `n` samples of
/// `(s', z)` and returns the empirical frequency of `(s_next, z)`.
pub fn sample_frequency<M: PomdpModel, R: Rng>(
    m: &M,
    s: usize,
    a: usize,
    s_next: usize,
    z: usize,
    n: usize,
    rng: &mut R,
) -> f64 {
    let mut hits = 0usize;
    for _ in 0..n {
        let step = m.generative_step(s, a, rng);
        if step.next_state == s_next && step.observation == z {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tiger::{TigerModel, TigerParams, ACT_LISTEN, ACT_OPEN_LEFT, OBS_HEAR_LEFT, OBS_HEAR_RIGHT};

    fn tiger() -> TigerModel {
        TigerModel::new(TigerParams::default())
    }

    fn tiger_belief(left: f64, right: f64) -> DenseBelief {
        DenseBelief::new(vec![left, right, 0.0]).unwrap()
    }

    #[test]
    fn belief_validation() {
        assert!(DenseBelief::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            DenseBelief::new(vec![0.5, 0.6]),
            Err(BeliefError::NotADistribution { .. })
        ));
        assert!(matches!(
            DenseBelief::new(vec![1.5, -0.5]),
            Err(BeliefError::NotADistribution { .. })
        ));
    }

    #[test]
    fn tiger_listen_update_from_uniform() {
        let m = tiger();
        let b = tiger_belief(0.5, 0.5);
        let b2 = exact_belief_update(&b, ACT_LISTEN, OBS_HEAR_LEFT, &m).unwrap();
        assert!((b2.probs()[0] - 0.8).abs() < 1e-12);
        assert!((b2.probs()[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn tiger_contradicting_observation_returns_to_uniform() {
        let m = tiger();
        let b = tiger_belief(0.8, 0.2);
        let b2 = exact_belief_update(&b, ACT_LISTEN, OBS_HEAR_RIGHT, &m).unwrap();
        assert!((b2.probs()[0] - 0.5).abs() < 1e-12);
        assert!((b2.probs()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tiger_second_consistent_observation() {
        // Bayes by hand: 0.64 / (0.64 + 0.04).
        let m = tiger();
        let b = tiger_belief(0.8, 0.2);
        let b2 = exact_belief_update(&b, ACT_LISTEN, OBS_HEAR_LEFT, &m).unwrap();
        assert!((b2.probs()[0] - 0.64 / 0.68).abs() < 1e-12);
        assert!((b2.probs()[0] - 0.9412).abs() < 1e-4);
    }

    #[test]
    fn tiger_expected_rewards_match_reference_values() {
        let m = tiger();
        assert_eq!(expected_reward(&tiger_belief(0.5, 0.5), ACT_OPEN_LEFT, &m), -45.0);
        assert_eq!(expected_reward(&tiger_belief(0.8, 0.2), ACT_OPEN_LEFT, &m), -78.0);
        assert_eq!(expected_reward(&tiger_belief(0.8, 0.2), 2, &m), -12.0);
        assert_eq!(expected_reward(&tiger_belief(0.96, 0.04), ACT_OPEN_LEFT, &m), -95.6);
        assert_eq!(expected_reward(&tiger_belief(0.96, 0.04), 2, &m), 5.6);
    }

    #[test]
    fn discounted_return_reference_values() {
        assert_eq!(discounted_return(&[], 0.95), 0.0);
        let mut rewards = vec![-1.0; 12];
        rewards.push(100.0);
        assert!((discounted_return(&rewards, 0.95) - 44.84).abs() < 0.01);
        let mut rewards = vec![-1.0; 14];
        rewards.push(100.0);
        assert!((discounted_return(&rewards, 0.95) - 38.52).abs() < 0.01);
    }

    #[test]
    fn entropy_reference_values() {
        let two = DenseBelief::new(vec![0.5, 0.5]).unwrap();
        assert!((two.entropy() - std::f64::consts::LN_2).abs() < 1e-12);
        let point = DenseBelief::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(point.entropy(), 0.0);
        let skewed = DenseBelief::new(vec![0.8, 0.2]).unwrap();
        assert!((skewed.entropy() - 0.5004).abs() < 1e-4);
    }

    #[test]
    fn entropy_is_maximised_by_uniform() {
        for n in 2..6 {
            let uniform = DenseBelief::uniform(n);
            assert!((uniform.entropy() - (n as f64).ln()).abs() < 1e-12);
            let mut probs = vec![1.0 / (n as f64 + 1.0); n];
            probs[0] += 1.0 - probs.iter().sum::<f64>();
            let other = DenseBelief::new(probs).unwrap();
            assert!(other.entropy() <= uniform.entropy() + 1e-12);
        }
    }

    #[test]
    fn impossible_observation_is_reported() {
        // After opening a door the model emits observation 0 surely, so
        // conditioning on observation 1 must fail.
        let m = tiger();
        let b = tiger_belief(0.5, 0.5);
        let err = exact_belief_update(&b, ACT_OPEN_LEFT, OBS_HEAR_RIGHT, &m).unwrap_err();
        assert!(matches!(err, BeliefError::ImpossibleObservation { .. }));
    }
}
