//! The alternating belief/action policy tree shared by both planners.
//!
//! Nodes live in flat arenas addressed by [`BeliefId`] / [`ActionId`]. A
//! belief node is either a leaf or carries one action child per action;
//! action nodes map observations to the belief node reached by them.

use crate::particles::ParticleFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BeliefId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionId(pub u32);

#[derive(Debug, Clone)]
pub struct BeliefNode {
    pub filter: ParticleFilter,
    /// N(b): number of simulated trajectories backed up through this node.
    pub visits: u64,
    /// Action children, present for all actions once the node is expanded.
    pub children: Option<Box<[ActionId]>>,
    pub parent: Option<ActionId>,
    pub depth: u32,
}

impl BeliefNode {
    fn new(filter: ParticleFilter, parent: Option<ActionId>, depth: u32) -> Self {
        Self { filter, visits: 0, children: None, parent, depth }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ActionNode {
    pub parent: BeliefId,
    pub action: usize,
    /// N(b, a).
    pub visits: u64,
    /// V(a): running mean of the returns backed up through this node.
    pub q_value: f64,
    /// Largest single-step entropy reduction observed in this subtree, only
    /// ever raised, and only by back-propagation from gated descendants.
    pub max_entropy_reduction: f64,
    /// Total particles landed in this node's belief children; gates whether
    /// an entropy reduction is trusted enough to back-propagate.
    pub particle_throughput: u64,
    /// Observation -> belief child. Small, so a linear map keeps iteration
    /// deterministic and fast.
    pub children: Vec<(usize, BeliefId)>,
}

impl ActionNode {
    fn new(parent: BeliefId, action: usize) -> Self {
        Self {
            parent,
            action,
            visits: 0,
            q_value: 0.0,
            max_entropy_reduction: 0.0,
            particle_throughput: 0,
            children: Vec::new(),
        }
    }

    pub fn child_for(&self, z: usize) -> Option<BeliefId> {
        self.children.iter().find(|(obs, _)| *obs == z).map(|&(_, id)| id)
    }
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    beliefs: Vec<BeliefNode>,
    actions: Vec<ActionNode>,
    root: BeliefId,
}

impl SearchTree {
    pub fn new(root_filter: ParticleFilter) -> Self {
        Self {
            beliefs: vec![BeliefNode::new(root_filter, None, 0)],
            actions: Vec::new(),
            root: BeliefId(0),
        }
    }

    pub fn root(&self) -> BeliefId {
        self.root
    }

    pub fn belief(&self, id: BeliefId) -> &BeliefNode {
        &self.beliefs[id.0 as usize]
    }

    pub fn belief_mut(&mut self, id: BeliefId) -> &mut BeliefNode {
        &mut self.beliefs[id.0 as usize]
    }

    pub fn action(&self, id: ActionId) -> &ActionNode {
        &self.actions[id.0 as usize]
    }

    pub fn action_mut(&mut self, id: ActionId) -> &mut ActionNode {
        &mut self.actions[id.0 as usize]
    }

    pub fn num_beliefs(&self) -> usize {
        self.beliefs.len()
    }

    pub fn num_expanded(&self) -> usize {
        self.beliefs.iter().filter(|b| !b.is_leaf()).count()
    }

    /// Adds one action child per action under `b`.
    pub fn expand(&mut self, b: BeliefId, num_actions: usize) {
        debug_assert!(self.belief(b).is_leaf());
        let ids: Vec<ActionId> = (0..num_actions)
            .map(|a| {
                let id = ActionId(self.actions.len() as u32);
                self.actions.push(ActionNode::new(b, a));
                id
            })
            .collect();
        self.belief_mut(b).children = Some(ids.into_boxed_slice());
    }

    /// Belief child of `a` for observation `z`, created empty on first visit.
    pub fn child_for_obs(&mut self, a: ActionId, z: usize) -> BeliefId {
        if let Some(existing) = self.action(a).child_for(z) {
            return existing;
        }
        let depth = self.belief(self.action(a).parent).depth + 1;
        let id = BeliefId(self.beliefs.len() as u32);
        self.beliefs.push(BeliefNode::new(ParticleFilter::new(), Some(a), depth));
        self.action_mut(a).children.push((z, id));
        id
    }

    /// Returns a fresh tree whose root is the subtree under `new_root`;
    /// statistics and filters are preserved, every other subtree is dropped.
    pub fn rebase(&self, new_root: BeliefId) -> SearchTree {
        let mut out = SearchTree {
            beliefs: Vec::new(),
            actions: Vec::new(),
            root: BeliefId(0),
        };
        let depth_offset = self.belief(new_root).depth;
        let mut node = self.belief(new_root).clone();
        node.parent = None;
        node.depth = 0;
        node.children = None;
        out.beliefs.push(node);

        // Walk (old belief id, new belief id) pairs, copying action layers.
        let mut queue = vec![(new_root, BeliefId(0))];
        while let Some((old_b, new_b)) = queue.pop() {
            let Some(old_actions) = self.belief(old_b).children.clone() else {
                continue;
            };
            let mut new_actions = Vec::with_capacity(old_actions.len());
            for &old_a in old_actions.iter() {
                let mut a_node = self.action(old_a).clone();
                a_node.parent = new_b;
                let children = std::mem::take(&mut a_node.children);
                let new_a = ActionId(out.actions.len() as u32);
                out.actions.push(a_node);
                new_actions.push(new_a);
                for (z, old_child) in children {
                    let mut child = self.belief(old_child).clone();
                    child.parent = Some(new_a);
                    child.depth -= depth_offset;
                    child.children = None;
                    let new_child = BeliefId(out.beliefs.len() as u32);
                    out.beliefs.push(child);
                    out.actions[new_a.0 as usize].children.push((z, new_child));
                    queue.push((old_child, new_child));
                }
            }
            out.beliefs[new_b.0 as usize].children = Some(new_actions.into_boxed_slice());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_creates_all_action_children() {
        let mut tree = SearchTree::new(ParticleFilter::new());
        let root = tree.root();
        assert!(tree.belief(root).is_leaf());
        tree.expand(root, 3);
        let children = tree.belief(root).children.clone().unwrap();
        assert_eq!(children.len(), 3);
        for (i, &a) in children.iter().enumerate() {
            assert_eq!(tree.action(a).action, i);
            assert_eq!(tree.action(a).parent, root);
        }
    }

    #[test]
    fn observation_children_are_created_once() {
        let mut tree = SearchTree::new(ParticleFilter::new());
        let root = tree.root();
        tree.expand(root, 2);
        let a = tree.belief(root).children.as_ref().unwrap()[0];
        let c1 = tree.child_for_obs(a, 5);
        let c2 = tree.child_for_obs(a, 5);
        assert_eq!(c1, c2);
        let c3 = tree.child_for_obs(a, 6);
        assert_ne!(c1, c3);
        assert_eq!(tree.belief(c1).depth, 1);
        assert_eq!(tree.belief(c1).parent, Some(a));
    }

    #[test]
    fn rebase_preserves_the_chosen_subtree_and_drops_the_rest() {
        let mut tree = SearchTree::new(ParticleFilter::new());
        let root = tree.root();
        tree.expand(root, 2);
        let a0 = tree.belief(root).children.as_ref().unwrap()[0];
        let a1 = tree.belief(root).children.as_ref().unwrap()[1];
        let keep = tree.child_for_obs(a0, 0);
        let drop = tree.child_for_obs(a1, 0);
        tree.belief_mut(keep).visits = 7;
        tree.belief_mut(keep).filter.add_particle(3);
        tree.belief_mut(drop).visits = 99;
        tree.expand(keep, 2);
        let deep_a = tree.belief(keep).children.as_ref().unwrap()[1];
        tree.action_mut(deep_a).q_value = 2.5;
        tree.action_mut(deep_a).visits = 4;
        let deep_b = tree.child_for_obs(deep_a, 9);
        tree.belief_mut(deep_b).visits = 2;

        let rebased = tree.rebase(keep);
        let new_root = rebased.belief(rebased.root());
        assert_eq!(new_root.visits, 7);
        assert_eq!(new_root.depth, 0);
        assert_eq!(new_root.parent, None);
        assert_eq!(new_root.filter.total(), 1);
        // The kept action layer survives with statistics.
        let kept_a = new_root.children.as_ref().unwrap()[1];
        assert_eq!(rebased.action(kept_a).q_value, 2.5);
        assert_eq!(rebased.action(kept_a).visits, 4);
        let kept_child = rebased.action(kept_a).child_for(9).unwrap();
        assert_eq!(rebased.belief(kept_child).visits, 2);
        assert_eq!(rebased.belief(kept_child).depth, 1);
        // Only the kept subtree's nodes were copied: `keep` and `deep_b`.
        assert_eq!(rebased.num_beliefs(), 2);
    }
}
