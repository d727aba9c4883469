//! Workload ingestion.
//!
//! Two sources produce the same [`Workload`]:
//!
//! * a **digested** file, one JSON record per line: a header
//!   `{"schema_table_count": T}` followed by
//!   `{"id": "q1", "slots": [[table_id, selectivity], ...], "true_card": n, "classical_card": m}`
//!   (`classical_card` optional);
//! * a **sql+data** directory holding `<table>.csv` files with a header row,
//!   `queries.sql` with one statement per line, and `truths.csv` with columns
//!   `line,true_card[,classical_card]` keyed by 1-based line number.
//!
//! Table ids are assigned densely from 1 in file-name order.

pub mod sql;
pub mod table;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use sql::{parse_query, CompareOp, FilterPredicate, JoinCondition, Literal, ParsedQuery};
pub use table::{compute_selectivity, ColumnType, TableData, Value};

use crate::error::{Error, Result};
use crate::vqc::Slot;

/// One query reduced to its per-table `(id, selectivity)` slots plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFeature {
    pub query_id: String,
    /// Sorted by table id, no duplicates.
    pub slots: Vec<Slot>,
    pub true_cardinality: u64,
    pub classical_estimate: Option<u64>,
}

impl QueryFeature {
    /// Canonicalizes slot order and checks the record's invariants.
    pub fn new(
        query_id: impl Into<String>,
        mut slots: Vec<Slot>,
        true_cardinality: u64,
        classical_estimate: Option<u64>,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let fail = |msg: String| Err(Error::workload(query_id.clone(), msg));
        slots.sort_by_key(|s| s.table_id);
        for (i, s) in slots.iter().enumerate() {
            if s.table_id == 0 {
                return fail("table ids start at 1".into());
            }
            if !(0.0..=1.0).contains(&s.selectivity) {
                return fail(format!("selectivity {} outside [0, 1]", s.selectivity));
            }
            if i > 0 && slots[i - 1].table_id == s.table_id {
                return fail(format!("self-joins unsupported: table id {} appears twice", s.table_id));
            }
        }
        if true_cardinality == 0 {
            return fail("true cardinality must be at least 1".into());
        }
        if classical_estimate == Some(0) {
            return fail("classical estimate must be at least 1".into());
        }
        Ok(Self { query_id, slots, true_cardinality, classical_estimate })
    }

    pub fn true_log_card(&self) -> f64 {
        (self.true_cardinality as f64).ln()
    }

    pub fn classical_log_card(&self) -> Option<f64> {
        self.classical_estimate.map(|c| (c as f64).ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    /// Number of tables in the schema (`T`).
    pub schema_table_count: u32,
    pub queries: Vec<QueryFeature>,
}

impl Workload {
    pub fn new(schema_table_count: u32, queries: Vec<QueryFeature>) -> Result<Self> {
        if schema_table_count == 0 {
            return Err(Error::workload(None, "schema_table_count must be at least 1"));
        }
        for q in &queries {
            if let Some(s) = q.slots.iter().find(|s| s.table_id > schema_table_count) {
                return Err(Error::workload(
                    q.query_id.clone(),
                    format!("table id {} exceeds schema_table_count {schema_table_count}", s.table_id),
                ));
            }
        }
        Ok(Self { schema_table_count, queries })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn max_tables_per_query(&self) -> usize {
        self.queries.iter().map(|q| q.slots.len()).max().unwrap_or(0)
    }

    /// Rejects the first query with more tables than `n_qubits` encoding slots.
    pub fn check_fits(&self, n_qubits: usize) -> Result<()> {
        match self.queries.iter().find(|q| q.slots.len() > n_qubits) {
            Some(q) => Err(Error::workload(
                q.query_id.clone(),
                format!("{} tables exceed the {n_qubits} encoding slots", q.slots.len()),
            )),
            None => Ok(()),
        }
    }

    /// Rejects the first query without a classical estimate.
    pub fn require_classical(&self) -> Result<()> {
        match self.queries.iter().find(|q| q.classical_estimate.is_none()) {
            Some(q) => Err(Error::workload(
                q.query_id.clone(),
                "correction mode needs a classical estimate for every query",
            )),
            None => Ok(()),
        }
    }

    /// Log classical estimates, if every query has one.
    pub fn classical_log_cards(&self) -> Option<Vec<f64>> {
        self.queries.iter().map(QueryFeature::classical_log_card).collect()
    }

    pub fn to_digested(&self) -> String {
        let mut out = serde_json::to_string(&DigestedHeader { schema_table_count: self.schema_table_count })
            .expect("header serializes");
        out.push('\n');
        for q in &self.queries {
            let record = DigestedRecord {
                id: q.query_id.clone(),
                slots: q.slots.iter().map(|s| (s.table_id, s.selectivity)).collect(),
                true_card: q.true_cardinality,
                classical_card: q.classical_estimate,
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_digested(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::workload(None, "digested workload is empty"))?;
        let header: DigestedHeader = serde_json::from_str(header)
            .map_err(|e| Error::workload(None, format!("line 1: bad header record: {e}")))?;
        let mut queries = Vec::new();
        for (n, line) in lines {
            let rec: DigestedRecord = serde_json::from_str(line)
                .map_err(|e| Error::workload(None, format!("line {}: {e}", n + 1)))?;
            let slots = rec.slots.iter().map(|&(t, s)| Slot::new(t, s)).collect();
            queries.push(QueryFeature::new(rec.id, slots, rec.true_card, rec.classical_card)?);
        }
        Self::new(header.schema_table_count, queries)
    }

    pub fn write_digested(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_digested()).map_err(|e| Error::io(path, e))
    }

    pub fn read_digested(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_digested(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DigestedHeader {
    schema_table_count: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DigestedRecord {
    id: String,
    slots: Vec<(u32, f64)>,
    true_card: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classical_card: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub name: String,
    pub id: u32,
    pub columns: Vec<(String, ColumnType)>,
}

/// Table names mapped densely onto ids `1..=T`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SchemaCatalog {
    pub tables: Vec<TableInfo>,
}

impl SchemaCatalog {
    /// Assigns ids in the given order.
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a TableData>) -> Self {
        let tables = tables
            .into_iter()
            .zip(1..)
            .map(|(t, id)| TableInfo {
                name: t.name.clone(),
                id,
                columns: t.columns.iter().cloned().zip(t.types.iter().copied()).collect(),
            })
            .collect();
        Self { tables }
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.tables.iter().find(|t| t.name == name).map(|t| t.id)
    }

    pub fn table_count(&self) -> u32 {
        self.tables.len() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadFormat {
    Digested,
    SqlData,
}

impl FromStr for WorkloadFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "digested" => Ok(WorkloadFormat::Digested),
            "sql+data" | "sql" => Ok(WorkloadFormat::SqlData),
            other => Err(Error::Usage(format!("unknown workload format `{other}`"))),
        }
    }
}

/// Tables of a sql+data directory, ordered by name.
#[derive(Debug, Clone)]
pub struct Database {
    pub tables: Vec<TableData>,
    pub catalog: SchemaCatalog,
}

impl Database {
    pub fn new(mut tables: Vec<TableData>) -> Self {
        tables.sort_by(|a, b| a.name.cmp(&b.name));
        let catalog = SchemaCatalog::from_tables(&tables);
        Self { tables, catalog }
    }

    /// Loads every `*.csv` in `dir` except `truths.csv`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "csv") && path.file_stem().is_some_and(|s| s != "truths") {
                paths.push(path);
            }
        }
        let tables = paths
            .iter()
            .map(|p| {
                let name = p.file_stem().expect("csv file has a stem").to_string_lossy().into_owned();
                TableData::from_csv_path(name, p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(tables))
    }

    pub fn table(&self, name: &str) -> Option<&TableData> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Parses `sql` and computes one slot per referenced table.
    pub fn slots_for(&self, sql: &str) -> Result<Vec<Slot>> {
        let parsed = parse_query(sql)?;
        parsed
            .tables
            .iter()
            .map(|name| {
                let table = self
                    .table(name)
                    .ok_or_else(|| Error::Ingest(format!("unknown table `{name}`")))?;
                let preds: Vec<&FilterPredicate> = parsed.filters_for(name).collect();
                let selectivity = compute_selectivity(table, &preds)?;
                let table_id = self.catalog.id_of(name).expect("catalog mirrors tables");
                Ok(Slot::new(table_id, selectivity))
            })
            .collect()
    }
}

/// Per-query outcome of sql+data ingestion.
#[derive(Debug)]
pub struct IngestOutcome {
    pub workload: Workload,
    pub catalog: SchemaCatalog,
    /// `(query_id, reason)` for every statement that could not be ingested.
    pub rejects: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub true_card: u64,
    pub classical_card: Option<u64>,
}

/// Parses `truths.csv`: `line,true_card[,classical_card]`.
pub fn parse_truths(text: &str) -> Result<BTreeMap<usize, Truth>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingest(format!("truths.csv: {e}")))?;
        let field = |k: usize| record.get(k).filter(|s| !s.is_empty());
        let parse = |k: usize, what: &str| -> Result<Option<u64>> {
            field(k)
                .map(|s| {
                    s.parse::<u64>()
                        .map_err(|_| Error::Ingest(format!("truths.csv row {}: bad {what} `{s}`", i + 2)))
                })
                .transpose()
        };
        let line = parse(0, "line number")?
            .ok_or_else(|| Error::Ingest(format!("truths.csv row {}: missing line number", i + 2)))?;
        let true_card = parse(1, "true_card")?
            .ok_or_else(|| Error::Ingest(format!("truths.csv row {}: missing true_card", i + 2)))?;
        out.insert(line as usize, Truth { true_card, classical_card: parse(2, "classical_card")? });
    }
    Ok(out)
}

/// Statements of `queries.sql` as `(line_number, text)`, skipping blank and `--` lines.
pub fn query_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("--"))
        .collect()
}

/// Runs parsing and selectivity computation over a sql+data directory.
/// Queries that fail are collected in `rejects` rather than aborting the run.
pub fn ingest_sql_dir(dir: &Path) -> Result<IngestOutcome> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    };
    let queries_text = read("queries.sql")?;
    let lines = query_lines(&queries_text);
    if lines.is_empty() {
        return Err(Error::Ingest("no queries".into()));
    }
    let truths = parse_truths(&read("truths.csv")?)?;
    let db = Database::load_dir(dir)?;
    if db.tables.is_empty() {
        return Err(Error::Ingest(format!("no table CSV files in {}", dir.display())));
    }

    let mut queries = Vec::new();
    let mut rejects = Vec::new();
    for (line, sql) in lines {
        let id = format!("q{line}");
        let built = db.slots_for(sql).and_then(|slots| {
            let truth = truths
                .get(&line)
                .ok_or_else(|| Error::Ingest(format!("no truths.csv row for line {line}")))?;
            QueryFeature::new(id.clone(), slots, truth.true_card, truth.classical_card)
        });
        match built {
            Ok(q) => queries.push(q),
            Err(e) => rejects.push((id, e.to_string())),
        }
    }
    let workload = Workload::new(db.catalog.table_count(), queries)?;
    Ok(IngestOutcome { workload, catalog: db.catalog, rejects })
}

/// Loads a workload from either format. For sql+data any rejected query is an error.
pub fn load_workload(path: &Path, format: WorkloadFormat) -> Result<(Workload, Option<SchemaCatalog>)> {
    match format {
        WorkloadFormat::Digested => Ok((Workload::read_digested(path)?, None)),
        WorkloadFormat::SqlData => {
            let outcome = ingest_sql_dir(path)?;
            if let Some((id, reason)) = outcome.rejects.first() {
                return Err(Error::workload(id.clone(), reason.clone()));
            }
            Ok((outcome.workload, Some(outcome.catalog)))
        }
    }
}

/// One-line-per-query summary, as printed by the ingest command.
pub fn summarize(workload: &Workload) -> String {
    let mut out = String::new();
    for q in &workload.queries {
        let slots: Vec<String> = q
            .slots
            .iter()
            .map(|s| format!("t{}:{:.4}", s.table_id, s.selectivity))
            .collect();
        let _ = writeln!(out, "{}\t[{}]\ttrue={}", q.query_id, slots.join(" "), q.true_cardinality);
    }
    out
}
