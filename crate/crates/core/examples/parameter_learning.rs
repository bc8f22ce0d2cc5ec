//! EM on partially observed trajectories of a three-variable feedback loop,
//! scored on held-out data as the training set grows.

use ctbn::evidence::OcclusionPolicy;
use ctbn::experiment::{feedback_loop_network, mean_log_likelihood, occlude_dataset, sample_dataset};
use ctbn::learning::{fit, EmConfig};

fn main() -> ctbn::Result<()> {
    let truth = feedback_loop_network();
    let train = sample_dataset(&truth, 300, 5.0, 1)?;
    let hidden = occlude_dataset(&train, &OcclusionPolicy::new(0.25, 0.25)?, 2);
    let test = sample_dataset(&truth, 500, 5.0, 3)?;
    println!("true model held-out log-likelihood per record: {:.4}", mean_log_likelihood(&truth, &test)?);

    let config = EmConfig { seed: 4, ..EmConfig::default() };
    for size in [10, 30, 100, 300] {
        let result = fit(&truth, &hidden[..size], &config)?;
        println!(
            "{size:>4} records: {} iterations, converged {}, held-out {:.4}",
            result.trace.len() - 1,
            result.converged,
            mean_log_likelihood(&result.model, &test)?
        );
    }
    Ok(())
}
