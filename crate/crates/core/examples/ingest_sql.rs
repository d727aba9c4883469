//! Parses the three-table example query, computes selectivities from CSV
//! tables and writes a digested workload.

use qcard::fixtures::{write_example_sql_dir, EXAMPLE_QUERY};
use qcard::workload::{ingest_sql_dir, parse_query, Database};

fn main() -> qcard::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    write_example_sql_dir(dir.path())?;

    let parsed = parse_query(EXAMPLE_QUERY)?;
    println!("tables: {:?}", parsed.tables);
    for f in &parsed.filters {
        println!("filter: {f}");
    }

    let db = Database::load_dir(dir.path())?;
    for slot in db.slots_for(EXAMPLE_QUERY)? {
        println!("slot: table {} selectivity {}", slot.table_id, slot.selectivity);
    }

    let outcome = ingest_sql_dir(dir.path())?;
    print!("{}", outcome.workload.to_digested());
    Ok(())
}
