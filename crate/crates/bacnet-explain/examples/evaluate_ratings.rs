//! Aggregate human CA/CI ratings into the per-method score table.
//!
//! ```bash
//! cargo run --example evaluate_ratings               # bundled dataset
//! cargo run --example evaluate_ratings -- my.csv     # your ratings file
//! ```

use bacnet_explain::eval::{aggregate, load_ratings_from_str, render_table, scores_to_json};
use bacnet_explain::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => samples::table_one_ratings_csv(),
    };
    let records = load_ratings_from_str(&csv)?;
    println!("loaded {} rating records\n", records.len());

    let scores = aggregate(&records)?;
    print!("{}", render_table(&scores));
    println!("\nas JSON:\n{}", scores_to_json(&scores));
    Ok(())
}
