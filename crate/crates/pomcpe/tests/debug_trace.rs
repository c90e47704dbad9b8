//! Temporary diagnostic; root stats at k=2 for several gate thresholds.

use pomcpe::domains::hallway::long_hallway_model;
use pomcpe::harness::PlannerSpec;
use pomcpe::model::PomdpModel;
use pomcpe::planner::Planner;
use pomcpe::rand::SeedableRng;
use pomcpe::rand_chacha::ChaCha8Rng;
use pomcpe::tree::BeliefId;

fn probe(label: &str, spec: PlannerSpec, seed: u64) {
    let m = long_hallway_model(2, 2);
    let mut planner = Planner::new(&m, spec.to_planner_config(m.discount()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let out = planner.search(&mut rng);
    let labels = ["wait", "fwd ", "bwd ", "trnL", "trnR"];
    println!("== {label} seed {seed}: picked {}", labels[out.action]);
    for (a, n, q) in planner.root_stats() {
        let tree = planner.tree();
        let a_id = tree.belief(tree.root()).children.as_ref().unwrap()[a];
        let max_red = tree.action(a_id).max_entropy_reduction;
        println!("  {}  N={:6}  V={:8.3}  maxdH={:.4}", labels[a], n, q, max_red);
    }
    let tree = planner.tree();
    let mut max_depth = 0;
    for i in 0..tree.num_beliefs() {
        max_depth = max_depth.max(tree.belief(BeliefId(i as u32)).depth);
    }
    println!("  max_depth {max_depth}");
}

#[test]
#[ignore]
fn probe_k2_thresholds() {
    for seed in [42u64, 43, 44] {
        for k_thr in [10u64, 30, 60] {
            let mut spec = PlannerSpec::pomcpe(20.0, 500.0).with_sims(10_000);
            spec.k_threshold = k_thr;
            probe(&format!("k2 c=20 e=500 k_thr={k_thr}"), spec, seed);
        }
    }
}
