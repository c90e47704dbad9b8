//! The classic two-door tiger domain.
//!
//! Two identical doors, a tiger behind one and gold behind the other.
//! Listening is cheap and reports the tiger's side with fixed accuracy;
//! opening a door ends the episode. Door-terminality is encoded with a third
//! absorbing state so that terminality stays a property of states, which is
//! what the planners and the oracle consult.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::model::{PomdpModel, Step};

pub const STATE_TIGER_LEFT: usize = 0;
pub const STATE_TIGER_RIGHT: usize = 1;
/// Absorbing state entered by opening either door.
pub const STATE_DONE: usize = 2;

pub const ACT_LISTEN: usize = 0;
pub const ACT_OPEN_LEFT: usize = 1;
pub const ACT_OPEN_RIGHT: usize = 2;

pub const OBS_HEAR_LEFT: usize = 0;
pub const OBS_HEAR_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TigerParams {
    /// Probability that listening reports the correct side. Must exceed 0.5.
    pub listen_accuracy: f64,
    pub tiger_penalty: f64,
    pub gold_reward: f64,
    pub listen_reward: f64,
    pub discount: f64,
}

impl Default for TigerParams {
    fn default() -> Self {
        Self {
            listen_accuracy: 0.8,
            tiger_penalty: -100.0,
            gold_reward: 10.0,
            listen_reward: -1.0,
            discount: 0.95,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TigerModel {
    params: TigerParams,
    initial: [f64; 3],
}

impl TigerModel {
    pub fn new(params: TigerParams) -> Self {
        assert!(
            params.listen_accuracy > 0.5 && params.listen_accuracy <= 1.0,
            "listening must be informative"
        );
        assert!((0.0..1.0).contains(&params.discount));
        Self { params, initial: [0.5, 0.5, 0.0] }
    }

    pub fn params(&self) -> &TigerParams {
        &self.params
    }
}

/// Convenience constructor mirroring the other domain builders.
pub fn tiger_model(params: TigerParams) -> TigerModel {
    TigerModel::new(params)
}

impl PomdpModel for TigerModel {
    fn num_states(&self) -> usize {
        3
    }

    fn num_actions(&self) -> usize {
        3
    }

    fn num_observations(&self) -> usize {
        2
    }

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn transition_prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        let target = match (s, a) {
            (STATE_DONE, _) => STATE_DONE,
            (_, ACT_LISTEN) => s,
            _ => STATE_DONE,
        };
        if s_next == target {
            1.0
        } else {
            0.0
        }
    }

    fn observation_prob(&self, s_next: usize, a: usize, z: usize) -> f64 {
        if a != ACT_LISTEN || s_next == STATE_DONE {
            // Door openings (and the absorbing state) emit observation 0
            // surely; the observation carries no information there.
            return if z == OBS_HEAR_LEFT { 1.0 } else { 0.0 };
        }
        let correct = match s_next {
            STATE_TIGER_LEFT => OBS_HEAR_LEFT,
            _ => OBS_HEAR_RIGHT,
        };
        if z == correct {
            self.params.listen_accuracy
        } else {
            1.0 - self.params.listen_accuracy
        }
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        match (s, a) {
            (STATE_DONE, _) => 0.0,
            (_, ACT_LISTEN) => self.params.listen_reward,
            (STATE_TIGER_LEFT, ACT_OPEN_LEFT) => self.params.tiger_penalty,
            (STATE_TIGER_LEFT, ACT_OPEN_RIGHT) => self.params.gold_reward,
            (STATE_TIGER_RIGHT, ACT_OPEN_LEFT) => self.params.gold_reward,
            (STATE_TIGER_RIGHT, ACT_OPEN_RIGHT) => self.params.tiger_penalty,
            _ => unreachable!("tiger has 3 actions"),
        }
    }

    fn initial_probs(&self) -> &[f64] {
        &self.initial
    }

    fn is_terminal(&self, s: usize) -> bool {
        s == STATE_DONE
    }

    fn generative_step(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> Step {
        debug_assert!(!self.is_terminal(s));
        let reward = self.reward(s, a);
        if a == ACT_LISTEN {
            let correct = match s {
                STATE_TIGER_LEFT => OBS_HEAR_LEFT,
                _ => OBS_HEAR_RIGHT,
            };
            let u: f64 = rand::Rng::random(&mut &mut *rng);
            let observation = if u < self.params.listen_accuracy {
                correct
            } else {
                1 - correct
            };
            Step { next_state: s, observation, reward }
        } else {
            Step { next_state: STATE_DONE, observation: OBS_HEAR_LEFT, reward }
        }
    }
}
