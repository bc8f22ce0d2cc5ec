//! Structural EM recovering a single strong dependency from occluded data.

use ctbn::evidence::OcclusionPolicy;
use ctbn::experiment::{occlude_dataset, sample_dataset, single_dependency_network};
use ctbn::learning::{sem_from_scratch, EmConfig, SemConfig};

fn main() -> ctbn::Result<()> {
    let truth = single_dependency_network(10.0);
    let data = sample_dataset(&truth, 500, 5.0, 11)?;
    let hidden = occlude_dataset(&data, &OcclusionPolicy::new(0.25, 0.25)?, 12);
    let config = SemConfig {
        em: EmConfig { seed: 13, ..EmConfig::default() },
        ..SemConfig::default()
    };
    let result = sem_from_scratch(&truth, &hidden, &config)?;
    for v in 0..truth.num_variables() {
        let names: Vec<&str> = result.model.parents(v).iter().map(|&p| truth.variable(p).name()).collect();
        println!("{} <- {:?}", truth.variable(v).name(), names);
    }
    println!("BIC before each structure step: {:.2?}", result.score_trace);
    Ok(())
}
