//! On-disk formats. Rationals are serialized as exact `"p/q"` strings (plain
//! integers also accepted); decimal floats are rejected at parse time.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use envy_subsidy::{Allocation, Instance, Rat, SubsidyVector, Valuation};
use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

/// Exact rational with string-based JSON encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatStr(pub Rat);

impl From<Rat> for RatStr {
    fn from(value: Rat) -> Self {
        RatStr(value)
    }
}

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(k) => Ok(RatStr(Rat::from_integer(BigInt::from(k)))),
            Raw::Str(s) => parse_rational(&s).map(RatStr).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `"p"` or `"p/q"` with arbitrary-precision integers. Anything else
/// (decimals in particular) is an error: values must be exact.
pub fn parse_rational(text: &str) -> Result<Rat, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty rational".into());
    }
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let numer = BigInt::from_str(numer)
        .map_err(|_| format!("`{text}` is not an exact rational (expected `p` or `p/q`)"))?;
    let denom = match denom {
        Some(d) => BigInt::from_str(d)
            .map_err(|_| format!("`{text}` is not an exact rational (expected `p` or `p/q`)"))?,
        None => BigInt::from(1),
    };
    if denom == BigInt::from(0) {
        return Err(format!("`{text}` has a zero denominator"));
    }
    Ok(Rat::new(numer, denom))
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum ValuesRepr {
    Additive(Vec<Vec<RatStr>>),
    Table(Vec<BTreeMap<String, RatStr>>),
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct InstanceFile {
    pub schema_version: String,
    pub n: usize,
    pub m: usize,
    pub valuation_kind: String,
    pub values: ValuesRepr,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance<Rat>) -> CliResult<Self> {
        let n = inst.n();
        let m = inst.m();
        let (kind, values) = if inst.is_additive() {
            let mut rows = Vec::with_capacity(n);
            for agent in 0..n {
                match inst.valuation(agent).map_err(CliError::from)? {
                    Valuation::Additive(row) => {
                        rows.push(row.iter().cloned().map(RatStr).collect())
                    }
                    Valuation::Table(_) => unreachable!("kind checked"),
                }
            }
            ("additive", ValuesRepr::Additive(rows))
        } else {
            let mut maps = Vec::with_capacity(n);
            for agent in 0..n {
                match inst.valuation(agent).map_err(CliError::from)? {
                    Valuation::Table(table) => {
                        let mut map = BTreeMap::new();
                        for (mask, value) in table.iter().enumerate() {
                            map.insert(subset_key(mask, m), RatStr(value.clone()));
                        }
                        maps.push(map);
                    }
                    Valuation::Additive(_) => unreachable!("kind checked"),
                }
            }
            ("table", ValuesRepr::Table(maps))
        };
        Ok(InstanceFile {
            schema_version: SCHEMA_VERSION.into(),
            n,
            m,
            valuation_kind: kind.into(),
            values,
        })
    }

    pub fn to_instance(&self) -> CliResult<Instance<Rat>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
                self.schema_version
            )));
        }
        match (&self.values, self.valuation_kind.as_str()) {
            (ValuesRepr::Additive(rows), "additive") => {
                if rows.len() != self.n {
                    return Err(CliError::Input(format!(
                        "{} value rows for n = {}",
                        rows.len(),
                        self.n
                    )));
                }
                let mut values = Vec::with_capacity(self.n);
                for (agent, row) in rows.iter().enumerate() {
                    if row.len() != self.m {
                        return Err(CliError::Input(format!(
                            "agent {agent} has {} item values for m = {}",
                            row.len(),
                            self.m
                        )));
                    }
                    values.push(row.iter().map(|r| r.0.clone()).collect());
                }
                Instance::additive(values).map_err(CliError::from)
            }
            (ValuesRepr::Table(maps), "table") => {
                if maps.len() != self.n {
                    return Err(CliError::Input(format!(
                        "{} value tables for n = {}",
                        maps.len(),
                        self.n
                    )));
                }
                let size = 1usize
                    .checked_shl(self.m as u32)
                    .filter(|_| self.m <= envy_subsidy::MAX_TABLE_ITEMS)
                    .ok_or_else(|| {
                        CliError::Input(format!("m = {} too large for table valuations", self.m))
                    })?;
                let mut tables = Vec::with_capacity(self.n);
                for (agent, map) in maps.iter().enumerate() {
                    if map.len() != size {
                        return Err(CliError::Input(format!(
                            "agent {agent} table has {} subsets, expected {size}",
                            map.len()
                        )));
                    }
                    let mut table = vec![None; size];
                    for (key, value) in map {
                        let mask = parse_subset_key(key, self.m)?;
                        if table[mask].is_some() {
                            return Err(CliError::Input(format!(
                                "agent {agent} table lists subset `{key}` twice"
                            )));
                        }
                        table[mask] = Some(value.0.clone());
                    }
                    let table: Vec<Rat> = table
                        .into_iter()
                        .enumerate()
                        .map(|(mask, v)| {
                            v.ok_or_else(|| {
                                CliError::Input(format!(
                                    "agent {agent} table is missing subset `{}`",
                                    subset_key(mask, self.m)
                                ))
                            })
                        })
                        .collect::<CliResult<_>>()?;
                    tables.push(table);
                }
                Instance::table(tables).map_err(CliError::from)
            }
            _ => Err(CliError::Input(format!(
                "valuation_kind `{}` does not match the shape of `values`",
                self.valuation_kind
            ))),
        }
    }
}

/// Sorted, comma-joined item indices; the empty subset is the empty string.
pub fn subset_key(mask: usize, m: usize) -> String {
    let items: Vec<String> = (0..m)
        .filter(|&e| mask & (1 << e) != 0)
        .map(|e| e.to_string())
        .collect();
    items.join(",")
}

pub fn parse_subset_key(key: &str, m: usize) -> CliResult<usize> {
    if key.is_empty() {
        return Ok(0);
    }
    let mut mask = 0usize;
    let mut previous: Option<usize> = None;
    for part in key.split(',') {
        let item: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("bad subset key `{key}`")))?;
        if item >= m {
            return Err(CliError::Input(format!(
                "subset key `{key}` mentions item {item}, but m = {m}"
            )));
        }
        if previous.is_some_and(|p| p >= item) {
            return Err(CliError::Input(format!(
                "subset key `{key}` is not sorted and duplicate-free"
            )));
        }
        previous = Some(item);
        mask |= 1 << item;
    }
    Ok(mask)
}

/// An allocation, optionally with payments. `check` accepts solver reports
/// too (their `allocation` field aliases `bundles`).
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct AllocationFile {
    pub schema_version: String,
    #[serde(alias = "allocation")]
    pub bundles: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsidy: Option<Vec<RatStr>>,
}

impl AllocationFile {
    pub fn new(alloc: &Allocation, subsidy: Option<&SubsidyVector<Rat>>) -> Self {
        AllocationFile {
            schema_version: SCHEMA_VERSION.into(),
            bundles: alloc.bundles().to_vec(),
            subsidy: subsidy.map(|p| p.iter().cloned().map(RatStr).collect()),
        }
    }

    pub fn to_allocation(&self, inst: &Instance<Rat>) -> CliResult<Allocation> {
        Allocation::new(inst.n(), inst.m(), self.bundles.clone()).map_err(CliError::from)
    }

    pub fn to_subsidy(&self, n: usize) -> CliResult<SubsidyVector<Rat>> {
        match &self.subsidy {
            None => Ok(SubsidyVector::zeros(n)),
            Some(values) => {
                if values.len() != n {
                    return Err(CliError::Input(format!(
                        "{} subsidy entries for n = {n}",
                        values.len()
                    )));
                }
                SubsidyVector::new(values.iter().map(|r| r.0.clone()).collect())
                    .map_err(CliError::from)
            }
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))
}

pub fn to_json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("cannot serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Write-then-rename so concurrent readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Input(format!("cannot move report into {}: {e}", path.display())))
}
