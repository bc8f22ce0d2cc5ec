//! Folding a hidden parent into its child's phases leaves the joint process
//! unchanged up to relabelling.

use ctbn::markov::{matrix_exponential, IntensityKind, IntensityMatrix, StateDistribution};
use ctbn::network::{amalgamate, Cim, CtbnModel, Variable};
use ctbn::phase::hidden_parent_to_phase;

fn q(rows: &[Vec<f64>]) -> IntensityMatrix {
    IntensityMatrix::from_rows(rows, IntensityKind::Proper).expect("valid rates")
}

fn main() -> ctbn::Result<()> {
    let model = CtbnModel::new(
        vec![Variable::new("H", ["low", "high"])?, Variable::new("X", ["idle", "busy"])?],
        vec![
            Cim::new(vec![], vec![q(&[vec![-0.3, 0.3], vec![0.6, -0.6]])]),
            Cim::new(
                vec![0],
                vec![q(&[vec![-0.5, 0.5], vec![2.0, -2.0]]), q(&[vec![-3.0, 3.0], vec![1.0, -1.0]])],
            ),
        ],
        vec![StateDistribution::uniform(2), StateDistribution::uniform(2)],
    )?;
    let merge = hidden_parent_to_phase(&model, 1, 0)?;
    let merged = &merge.model;
    println!("merged variable {} with phases {:?}", merged.variable(merge.merged).name(), merged.variable(merge.merged).phases());
    println!("intensity matrix:\n{}", merged.cim(merge.merged).matrix(0).matrix());

    let a = amalgamate(&model)?;
    let b = amalgamate(merged)?;
    let (ea, eb) = (matrix_exponential(a.intensity.matrix(), 1.0), matrix_exponential(b.intensity.matrix(), 1.0));
    let n = a.joint.size();
    let worst = (0..n * n)
        .map(|k| (ea[(k / n, k % n)] - eb[(merge.bijection[k / n], merge.bijection[k % n])]).abs())
        .fold(0.0, f64::max);
    println!("largest transition-probability difference at t = 1: {worst:.2e}");
    Ok(())
}
