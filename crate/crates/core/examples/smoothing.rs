//! Posterior state marginals and expected statistics under partial evidence.

use ctbn::evidence::{Evidence, EvidenceSegment, Subsystem};
use ctbn::inference::{forward_backward, infer, smoothed_marginal, DEFAULT_TOLERANCE};
use ctbn::markov::{IntensityKind, IntensityMatrix, StateDistribution};

fn main() -> ctbn::Result<()> {
    let q = IntensityMatrix::from_rows(
        &[
            vec![-1.0, 1.0, 0.0],
            vec![0.5, -1.5, 1.0],
            vec![0.0, 2.0, -2.0],
        ],
        IntensityKind::Proper,
    )?;
    let p0 = StateDistribution::uniform(3);
    // Unobserved on [0, 1), known to avoid state 2 on [1, 2), seen in state 2 at t = 3.
    let evidence = Evidence::new(vec![
        EvidenceSegment { subsystem: Subsystem::all(3), start: 0.0, end: 1.0 },
        EvidenceSegment { subsystem: Subsystem::new(3, vec![0, 1])?, start: 1.0, end: 2.0 },
        EvidenceSegment { subsystem: Subsystem::all(3), start: 2.0, end: 3.0 },
        EvidenceSegment { subsystem: Subsystem::singleton(3, 2), start: 3.0, end: 3.0 },
    ])?;

    let cache = forward_backward(&q, &p0, &evidence)?;
    println!("log p(evidence) = {:.6}", cache.log_likelihood());
    for t in [0.0, 0.5, 1.5, 2.5, 3.0] {
        let p = smoothed_marginal(&cache, &q, &evidence, t)?;
        println!("P(X_{t} | evidence) = {:.4?}", p.probs());
    }

    let stats = infer(&q, &p0, &evidence, DEFAULT_TOLERANCE)?;
    println!("expected dwell times: {:.4?}", stats.dwell.as_slice());
    println!("expected transitions:\n{:.4}", stats.transitions);
    Ok(())
}
