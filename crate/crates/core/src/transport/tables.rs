//! MCS and TBS lookup tables.
//!
//! The built-in tables are compiled in from `data/tables/*.csv`; alternative
//! tables in the same format can be loaded at run time.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use serde::Deserialize;

use super::McsEntry;
use crate::{Error, Result};

pub const PDSCH_QAM64: &str = "pdsch-qam64";
pub const PUSCH_TP_QAM64: &str = "pusch-tp-qam64";
pub const PUSCH_TP_QAM64_LOWSE: &str = "pusch-tp-qam64-lowse";

const PDSCH_QAM64_CSV: &str = include_str!("../../data/tables/pdsch_qam64.csv");
const PUSCH_TP_QAM64_CSV: &str = include_str!("../../data/tables/pusch_tp_qam64.csv");
const PUSCH_TP_QAM64_LOWSE_CSV: &str = include_str!("../../data/tables/pusch_tp_qam64_lowse.csv");
const TBS_CSV: &str = include_str!("../../data/tables/tbs_table.csv");

static BUILTIN_MCS: LazyLock<McsTables> = LazyLock::new(|| {
    let mut tables = McsTables::default();
    for (name, text) in [
        (PDSCH_QAM64, PDSCH_QAM64_CSV),
        (PUSCH_TP_QAM64, PUSCH_TP_QAM64_CSV),
        (PUSCH_TP_QAM64_LOWSE, PUSCH_TP_QAM64_LOWSE_CSV),
    ] {
        let table = McsTable::from_csv(name, text).expect("built-in MCS table is valid");
        tables.insert(table);
    }
    tables
});

static BUILTIN_TBS: LazyLock<TbsTable> =
    LazyLock::new(|| TbsTable::from_csv(TBS_CSV).expect("built-in TBS table is valid"));

#[derive(Debug, Deserialize)]
struct McsRow {
    index: u8,
    qm: u8,
    r_x1024: f64,
}

#[derive(Debug, Deserialize)]
struct TbsRow {
    index: u32,
    tbs: u32,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// One MCS index table, ordered by index.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    name: String,
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(name: impl Into<String>, mut entries: Vec<McsEntry>) -> Result<Self> {
        let name = name.into();
        if entries.is_empty() {
            return Err(Error::Config(format!("MCS table {name} is empty")));
        }
        entries.sort_by_key(|e| e.index());
        if entries.windows(2).any(|w| w[0].index() == w[1].index()) {
            return Err(Error::Config(format!("MCS table {name} repeats an index")));
        }
        Ok(Self { name, entries })
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (line, row) in csv_reader(text).deserialize::<McsRow>().enumerate() {
            let row = row.map_err(|e| Error::Config(format!("MCS table {name}, row {}: {e}", line + 1)))?;
            entries.push(McsEntry::new(row.index, row.qm, row.r_x1024)?);
        }
        Self::new(name, entries)
    }

    pub fn load(name: &str, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_csv(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn get(&self, index: u8) -> Option<McsEntry> {
        self.entries.iter().copied().find(|e| e.index() == index)
    }
}

/// Named MCS tables available to allocations.
#[derive(Debug, Clone, Default)]
pub struct McsTables {
    tables: BTreeMap<String, McsTable>,
}

impl McsTables {
    /// The three standard tables shipped with the crate.
    pub fn builtin() -> &'static McsTables {
        &BUILTIN_MCS
    }

    /// Adds or replaces a table under its own name.
    pub fn insert(&mut self, table: McsTable) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn get(&self, name: &str) -> Option<&McsTable> {
        self.tables.get(name)
    }

    pub fn lookup(&self, table: &str, index: u8) -> Result<McsEntry> {
        let t = self
            .get(table)
            .ok_or_else(|| Error::Config(format!("unknown MCS table {table:?}")))?;
        t.get(index)
            .ok_or_else(|| Error::Config(format!("MCS table {table} has no index {index}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }
}

/// Quantization table used when the intermediate bit count is at most 3824.
#[derive(Debug, Clone, PartialEq)]
pub struct TbsTable {
    sizes: Vec<u32>,
}

impl TbsTable {
    pub fn builtin() -> &'static TbsTable {
        &BUILTIN_TBS
    }

    pub fn new(mut sizes: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Config("TBS table is empty".into()));
        }
        sizes.sort_unstable();
        sizes.dedup();
        Ok(Self { sizes })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line, row) in csv_reader(text).deserialize::<TbsRow>().enumerate() {
            let row = row.map_err(|e| Error::Config(format!("TBS table row {}: {e}", line + 1)))?;
            rows.push((row.index, row.tbs));
        }
        rows.sort_unstable();
        Self::new(rows.into_iter().map(|(_, tbs)| tbs).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_csv(&text)
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Smallest entry not below `bits`, saturating at the largest entry.
    pub fn ceiling(&self, bits: f64) -> u32 {
        let i = self.sizes.partition_point(|&s| f64::from(s) < bits);
        self.sizes[i.min(self.sizes.len() - 1)]
    }
}
