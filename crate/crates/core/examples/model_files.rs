//! Writing and reading model and trajectory files.

use ctbn::experiment::{feedback_loop_network, sample_dataset};
use ctbn::io::{parse_model, write_model, TrajectoryFile};

fn main() -> ctbn::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let model = feedback_loop_network();
    let model_path = format!("{dir}/feedback_loop.json");
    std::fs::write(&model_path, write_model(&model))?;

    let data = sample_dataset(&model, 3, 2.0, 5)?;
    let data_path = format!("{dir}/feedback_loop_data.json");
    std::fs::write(&data_path, TrajectoryFile::from_observed(&model, &data).to_text())?;

    let back = parse_model(&std::fs::read_to_string(&model_path)?)?;
    let records = TrajectoryFile::parse(&std::fs::read_to_string(&data_path)?)?.to_observed(&back)?;
    assert_eq!(back, model);
    assert_eq!(records, data);
    println!("wrote and re-read {model_path} and {data_path} ({} records)", records.len());
    Ok(())
}
