//! Reproducibility guarantees: identical tallies for identical seeds, and
//! identical tallies no matter how many Rayon workers share the batch.

use qkd_sync::engine::{run_trials_model, TrialModel};

fn medium_model() -> TrialModel {
    TrialModel::single(1_024, 64, 700, 0.02, 1e-4).unwrap()
}

#[test]
fn same_seed_same_tallies() {
    let model = medium_model();
    let first = run_trials_model(&model, 20_000, 42);
    let second = run_trials_model(&model, 20_000, 42);
    assert_eq!(first, second);
}

#[test]
fn different_seeds_give_different_tallies() {
    let model = medium_model();
    let first = run_trials_model(&model, 20_000, 42);
    let second = run_trials_model(&model, 20_000, 43);
    assert_ne!(first, second);
}

#[test]
fn tallies_are_identical_across_worker_counts() {
    let model = medium_model();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_trials_model(&model, 20_000, 42));
    let quad = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run_trials_model(&model, 20_000, 42));
    let seven = rayon::ThreadPoolBuilder::new()
        .num_threads(7)
        .build()
        .unwrap()
        .install(|| run_trials_model(&model, 20_000, 42));
    assert_eq!(single, quad);
    assert_eq!(single, seven);
}
