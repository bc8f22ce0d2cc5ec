//! Transient distributions and sampled paths of a three-state process.

use ctbn::markov::{
    matrix_exponential, sample_trajectory, transient_distribution, IntensityKind, IntensityMatrix,
    StateDistribution,
};

fn main() -> ctbn::Result<()> {
    let q = IntensityMatrix::from_rows(
        &[
            vec![-1.0, 0.7, 0.3],
            vec![0.2, -0.5, 0.3],
            vec![1.5, 0.5, -2.0],
        ],
        IntensityKind::Proper,
    )?;
    let p0 = StateDistribution::point_mass(3, 0);
    for t in [0.5, 1.0, 5.0, 50.0] {
        println!("t = {t:>4}: {:.4?}", transient_distribution(&p0, &q, t)?.probs());
    }
    println!("exp(Q) =\n{:.4}", matrix_exponential(q.matrix(), 1.0));

    let path = sample_trajectory(&p0, &q, 4.0, 7);
    println!("one sampled path: {path:?}");
    Ok(())
}
