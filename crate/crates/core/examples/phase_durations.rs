//! Phase-type durations: Erlang densities, a chain-expanded variable, and
//! EM with an unrestricted three-phase model on state-only observations.

use ctbn::experiment::{mean_log_likelihood, sample_dataset};
use ctbn::learning::{fit, EmConfig};
use ctbn::markov::{IntensityKind, IntensityMatrix, StateDistribution};
use ctbn::network::{Cim, CtbnModel, Variable};
use ctbn::phase::{erlang, expand_phases, phase_density, phase_mean, PhaseSpec, Topology, VariablePhases};

fn main() -> ctbn::Result<()> {
    let d = erlang(3, 3.0)?;
    println!("Erlang(3, 3): mean {:.3}, density at 1 {:.6}", phase_mean(&d)?, phase_density(&d, 1.0));

    let base = CtbnModel::new(
        vec![Variable::new("W", ["w1", "w2"])?],
        vec![Cim::new(
            vec![],
            vec![IntensityMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]], IntensityKind::Proper)?],
        )],
        vec![StateDistribution::uniform(2)],
    )?;
    let truth = expand_phases(&base, &PhaseSpec::new().with("W", VariablePhases::uniform(2, 3, Topology::Chain)))?;
    println!("chain-expanded intensity matrix:\n{}", truth.cim(0).matrix(0).matrix());

    let train = sample_dataset(&truth, 100, 10.0, 1)?;
    let test = sample_dataset(&truth, 200, 10.0, 2)?;
    let config = EmConfig { restarts: 1, max_iterations: 50, ..EmConfig::default() };
    let plain = fit(&base, &train, &config)?;
    let phased = expand_phases(&base, &PhaseSpec::everywhere(&base, 3, Topology::Unrestricted))?;
    let phased = fit(&phased, &train, &config)?;
    println!("held-out per record, exponential durations: {:.4}", mean_log_likelihood(&plain.model, &test)?);
    println!("held-out per record, three phases:          {:.4}", mean_log_likelihood(&phased.model, &test)?);
    Ok(())
}
