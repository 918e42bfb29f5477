use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BandConstants, Key2, Key3, StructureTables, Table};
use crate::atlas::BasisIndex;
use crate::numeric::{Scalar, ScalarMode};
use crate::Error;

const TABLES_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    doubled_indices: Vec<i64>,
    value: Scalar,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRecord {
    entries: Vec<EntryRecord>,
    unreliable: Vec<Vec<i64>>,
    cross_residual: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TablesFile {
    format_version: u32,
    genus: u32,
    scalar_mode: ScalarMode,
    window: BasisIndex,
    tolerance: f64,
    zeta_literal_gap: f64,
    bands: BandConstants,
    tables: BTreeMap<String, TableRecord>,
}

trait KeyCodec: Sized + Ord + Copy {
    fn encode(&self) -> Vec<i64>;
    fn decode(v: &[i64]) -> Option<Self>;
}

impl KeyCodec for Key2 {
    fn encode(&self) -> Vec<i64> {
        vec![self.0.doubled(), self.1.doubled()]
    }
    fn decode(v: &[i64]) -> Option<Self> {
        match v {
            [a, b] => Some((BasisIndex(*a), BasisIndex(*b))),
            _ => None,
        }
    }
}

impl KeyCodec for Key3 {
    fn encode(&self) -> Vec<i64> {
        vec![self.0.doubled(), self.1.doubled(), self.2.doubled()]
    }
    fn decode(v: &[i64]) -> Option<Self> {
        match v {
            [a, b, c] => Some((BasisIndex(*a), BasisIndex(*b), BasisIndex(*c))),
            _ => None,
        }
    }
}

fn encode<K: KeyCodec>(t: &Table<K>) -> TableRecord {
    TableRecord {
        entries: t.entries.iter().map(|(k, v)| EntryRecord { doubled_indices: k.encode(), value: v.clone() }).collect(),
        unreliable: t.unreliable.iter().map(|k| k.encode()).collect(),
        cross_residual: t.cross_residual,
    }
}

fn decode<K: KeyCodec>(name: &str, r: TableRecord, mode: ScalarMode) -> Result<Table<K>, Error> {
    let bad = || Error::Schema(format!("table '{name}' has a malformed key"));
    let mut t = Table::new(mode);
    for e in r.entries {
        if e.value.mode() != mode {
            return Err(Error::Schema(format!("table '{name}' mixes scalar kinds")));
        }
        t.entries.insert(K::decode(&e.doubled_indices).ok_or_else(bad)?, e.value);
    }
    for k in r.unreliable {
        t.unreliable.insert(K::decode(&k).ok_or_else(bad)?);
    }
    t.cross_residual = r.cross_residual;
    Ok(t)
}

pub fn tables_to_json(t: &StructureTables) -> Result<String, Error> {
    let mut tables = BTreeMap::new();
    tables.insert("gamma".to_string(), encode(&t.gamma));
    tables.insert("zeta".to_string(), encode(&t.zeta));
    for (l, b) in &t.beta {
        tables.insert(format!("beta[{l}]"), encode(b));
    }
    for (l, b) in &t.zeta_lambda {
        tables.insert(format!("zeta_lambda[{l}]"), encode(b));
    }
    for (l, b) in &t.ell {
        tables.insert(format!("ell[{l}]"), encode(b));
    }
    for (k, b) in &t.q {
        tables.insert(format!("q[{k}]"), encode(b));
    }
    let file = TablesFile {
        format_version: TABLES_VERSION,
        genus: t.genus,
        scalar_mode: t.mode,
        window: t.window,
        tolerance: t.tolerance,
        zeta_literal_gap: t.zeta_literal_gap,
        bands: t.bands.clone(),
        tables,
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

fn bracketed(name: &str, prefix: &str) -> Option<i64> {
    name.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')?.parse().ok()
}

pub fn tables_from_json(text: &str) -> Result<StructureTables, Error> {
    let file: TablesFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if file.format_version != TABLES_VERSION {
        return Err(Error::Schema(format!("tables format_version {} unsupported", file.format_version)));
    }
    let mode = file.scalar_mode;
    let mut gamma = None;
    let mut zeta = None;
    let (mut beta, mut zeta_lambda, mut ell, mut q) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for (name, rec) in file.tables {
        if name == "gamma" {
            gamma = Some(decode(&name, rec, mode)?);
        } else if name == "zeta" {
            zeta = Some(decode(&name, rec, mode)?);
        } else if let Some(l) = bracketed(&name, "beta") {
            beta.insert(l, decode(&name, rec, mode)?);
        } else if let Some(l) = bracketed(&name, "zeta_lambda") {
            zeta_lambda.insert(l, decode(&name, rec, mode)?);
        } else if let Some(l) = bracketed(&name, "ell") {
            ell.insert(l, decode(&name, rec, mode)?);
        } else if let Some(k) = bracketed(&name, "q") {
            let k = u32::try_from(k).map_err(|_| Error::Schema(format!("bad table name '{name}'")))?;
            q.insert(k, decode(&name, rec, mode)?);
        } else {
            return Err(Error::Schema(format!("unknown table '{name}'")));
        }
    }
    Ok(StructureTables {
        genus: file.genus,
        mode,
        window: file.window,
        tolerance: file.tolerance,
        gamma: gamma.ok_or_else(|| Error::Schema("missing table 'gamma'".into()))?,
        beta,
        zeta: zeta.ok_or_else(|| Error::Schema("missing table 'zeta'".into()))?,
        zeta_literal_gap: file.zeta_literal_gap,
        zeta_lambda,
        ell,
        q,
        bands: file.bands,
    })
}

pub fn save_tables(t: &StructureTables, path: &Path) -> Result<(), Error> {
    std::fs::write(path, tables_to_json(t)?)?;
    Ok(())
}

pub fn load_tables(path: &Path) -> Result<StructureTables, Error> {
    tables_from_json(&std::fs::read_to_string(path)?)
}
