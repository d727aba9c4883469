//! Synthetic workloads and the small SQL fixture used by the examples, the
//! `fixture` subcommand and the acceptance tests.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vqc::Slot;
use crate::workload::{QueryFeature, Workload};

/// How the synthetic classical estimate relates to the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalEstimate {
    None,
    /// `truth · e^b` for a fixed `b`.
    Bias(f64),
    /// `truth · e^b` with `b` drawn uniformly from `[lo, hi]` per query.
    BiasRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub queries: usize,
    pub tables: u32,
    pub max_tables_per_query: usize,
    pub classical: ClassicalEstimate,
    /// If set, every query gets this true cardinality.
    pub constant_card: Option<u64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            queries: 50,
            tables: 4,
            max_tables_per_query: 4,
            classical: ClassicalEstimate::None,
            constant_card: None,
            seed: 0,
        }
    }
}

/// Random queries over a star-like schema: table `t` has `1000·t` rows and a
/// query's cardinality is its largest table's size times the product of all
/// selectivities.
pub fn synthetic_workload(spec: &SyntheticSpec) -> Result<Workload> {
    if spec.tables == 0 || spec.max_tables_per_query == 0 {
        return Err(Error::Usage("synthetic workload needs tables and slots".into()));
    }
    let max_slots = spec.max_tables_per_query.min(spec.tables as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut queries = Vec::with_capacity(spec.queries);
    for i in 0..spec.queries {
        let k = rng.random_range(1..=max_slots);
        let ids = sample(&mut rng, spec.tables as usize, k);
        let slots: Vec<Slot> = ids
            .iter()
            .map(|t| {
                // two-decimal selectivities keep the digested file readable
                let s = (rng.random_range(0.05..=1.0f64) * 100.0).round() / 100.0;
                Slot::new(t as u32 + 1, s)
            })
            .collect();
        let largest = slots.iter().map(|s| 1000.0 * f64::from(s.table_id)).fold(0.0, f64::max);
        let product: f64 = slots.iter().map(|s| s.selectivity).product();
        let truth = spec
            .constant_card
            .unwrap_or_else(|| (largest * product).round().max(1.0) as u64);
        let classical = match spec.classical {
            ClassicalEstimate::None => None,
            ClassicalEstimate::Bias(b) => Some(biased(truth, b)),
            ClassicalEstimate::BiasRange(lo, hi) => Some(biased(truth, rng.random_range(lo..=hi))),
        };
        queries.push(QueryFeature::new(format!("s{:03}", i + 1), slots, truth, classical)?);
    }
    Workload::new(spec.tables, queries)
}

fn biased(truth: u64, b: f64) -> u64 {
    (truth as f64 * b.exp()).round().max(1.0) as u64
}

/// The three-table example query with ten-row tables:
///
/// * `table2.colA > 100` keeps 5 of 10 rows,
/// * `table3.colB = 10` keeps 4 of 10 rows,
/// * `table1` is unfiltered.
pub const EXAMPLE_QUERY: &str = "SELECT * FROM table1, table2, table3 WHERE table1.pKey=table2.key1 AND table1.pKey=table3.key1 AND table2.colA > 100 AND table3.colB = 10";

pub const EXAMPLE_TABLE1: &str = "pKey,name\n1,a\n2,b\n3,c\n4,d\n5,e\n6,f\n7,g\n8,h\n9,i\n10,j\n";
pub const EXAMPLE_TABLE2: &str =
    "id,key1,colA\n1,1,50\n2,2,80\n3,3,100\n4,4,120\n5,5,150\n6,6,90\n7,7,200\n8,8,101\n9,9,99\n10,10,300\n";
pub const EXAMPLE_TABLE3: &str =
    "id,key1,colB\n1,1,10\n2,2,20\n3,3,10\n4,4,30\n5,5,10\n6,6,40\n7,7,50\n8,8,10\n9,9,60\n10,10,70\n";

/// Writes the example as a sql+data directory: three tables, `queries.sql`
/// with the example plus two smaller queries, and `truths.csv`.
pub fn write_example_sql_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("table1.csv", EXAMPLE_TABLE1.to_string()),
        ("table2.csv", EXAMPLE_TABLE2.to_string()),
        ("table3.csv", EXAMPLE_TABLE3.to_string()),
        (
            "queries.sql",
            format!(
                "{EXAMPLE_QUERY}\nSELECT * FROM table1\nSELECT COUNT(*) FROM table2 t2 WHERE t2.colA <= 100\n"
            ),
        ),
        ("truths.csv", "line,true_card,classical_card\n1,2,5\n2,10,10\n3,5,3\n".to_string()),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
