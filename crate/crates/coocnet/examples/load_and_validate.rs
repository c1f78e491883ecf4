//! Loading a table from CSV, screening it for data-quality problems,
//! and drawing reproducible subsamples.
//!
//! Run with: cargo run --example load_and_validate

use coocnet::otu::{self, Orientation};

fn main() -> coocnet::Result<()> {
    // A small table written to a temp file; first row = taxon names,
    // first column = sample ids.
    let csv = "\
sample_id,bacteroides,prevotella,faecalibacterium,constant_bug
day01,12,0,31,5
day02,8,2,24,5
day03,15,1,40,5
day04,2,9,11,5
day05,6,4,18,5
day06,20,0,52,5
";
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("table.csv");
    std::fs::write(&path, csv)?;

    let table = otu::load_otu_csv(&path, Orientation::RowsAreSamples)?;
    println!(
        "loaded {} samples x {} taxa: {:?}",
        table.n_samples(),
        table.n_taxa(),
        table.taxa()
    );

    // The validator reports problems without touching the table.
    let report = otu::validate_table(&table);
    if report.is_clean() {
        println!("no warnings");
    }
    for warning in &report.warnings {
        println!("warning: {warning}");
    }

    // Subsampling is uniform without replacement and seeded.
    let sub = otu::subsample(&table, 3, 42)?;
    println!("subsample of 3 (seed 42): {:?}", sub.samples());
    let again = otu::subsample(&table, 3, 42)?;
    assert_eq!(sub, again);
    println!("same seed, same rows");

    // Round trip: writing and loading changes nothing.
    let copy_path = dir.path().join("copy.csv");
    otu::write_otu_csv(&table, &copy_path)?;
    let back = otu::load_otu_csv(&copy_path, Orientation::RowsAreSamples)?;
    assert_eq!(back, table);
    println!("write -> load round trip is exact");
    Ok(())
}
