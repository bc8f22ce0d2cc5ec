//! Synthetic-data workflows: sampling datasets from a model, hiding parts of
//! them, and scoring fitted models on held-out trajectories.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::evidence::{occlude_with, ObservedTrajectory, OcclusionPolicy};
use crate::learning::log_likelihood;
use crate::markov::{sample_trajectory_with, IntensityKind, IntensityMatrix, StateDistribution};
use crate::network::{amalgamate, Cim, CtbnModel, Variable};
use crate::Result;

/// `count` complete trajectories of the model's observable states.
pub fn sample_dataset(
    model: &CtbnModel,
    count: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<ObservedTrajectory>> {
    let flat = amalgamate(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let t = sample_trajectory_with(&flat.initial, &flat.intensity, horizon, &mut rng);
            flat.joint.observe(&t)
        })
        .collect())
}

/// Applies the same occlusion policy to every record, drawing from one
/// generator in record order.
pub fn occlude_dataset(
    data: &[ObservedTrajectory],
    policy: &OcclusionPolicy,
    seed: u64,
) -> Vec<ObservedTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    data.iter().map(|d| occlude_with(d, policy, &mut rng)).collect()
}

/// Mean log-likelihood per record.
pub fn mean_log_likelihood(model: &CtbnModel, data: &[ObservedTrajectory]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    Ok(log_likelihood(model, data)? / data.len() as f64)
}

fn two_state(leave: f64, back: f64) -> IntensityMatrix {
    IntensityMatrix::from_rows(&[vec![-leave, leave], vec![back, -back]], IntensityKind::Proper)
        .expect("positive rates")
}

fn binary(name: &str) -> Variable {
    Variable::new(name, ["off", "on"]).expect("two distinct labels")
}

/// Three binary variables in a feedback loop `A -> B -> C -> A`; each
/// variable tends to follow its parent.
pub fn feedback_loop_network() -> CtbnModel {
    let follow = |base: f64| {
        vec![
            // Parent off: drift towards off.
            two_state(0.3 * base, 2.0 * base),
            // Parent on: drift towards on.
            two_state(2.0 * base, 0.3 * base),
        ]
    };
    CtbnModel::new(
        vec![binary("A"), binary("B"), binary("C")],
        vec![
            Cim::new(vec![2], follow(1.0)),
            Cim::new(vec![0], follow(1.5)),
            Cim::new(vec![1], follow(0.8)),
        ],
        vec![
            StateDistribution::new(vec![0.7, 0.3]).expect("valid"),
            StateDistribution::uniform(2),
            StateDistribution::new(vec![0.4, 0.6]).expect("valid"),
        ],
    )
    .expect("valid network")
}

/// Three binary variables where only `B` has a parent: its rates are scaled
/// by `ratio` when `A` is on.
pub fn single_dependency_network(ratio: f64) -> CtbnModel {
    CtbnModel::new(
        vec![binary("A"), binary("B"), binary("C")],
        vec![
            Cim::new(vec![], vec![two_state(0.8, 0.8)]),
            Cim::new(vec![0], vec![two_state(0.4, 0.6), two_state(0.4 * ratio, 0.6 * ratio)]),
            Cim::new(vec![], vec![two_state(1.0, 0.5)]),
        ],
        vec![StateDistribution::uniform(2); 3],
    )
    .expect("valid network")
}
