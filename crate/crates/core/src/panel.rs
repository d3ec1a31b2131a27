//! Entity-by-time panel datasets.
//!
//! A [`PanelDataset`] holds one row per `(entity, time)` pair, sorted by entity
//! and then time, with any number of named real-valued columns. Missing cells
//! are `None`. Every operation returns a new dataset.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric;

/// Column names that an estimation run needs from an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub entity: String,
    pub time: String,
    pub outcome: String,
    pub treatment: String,
    pub controls: Vec<String>,
    /// Proxy columns are optional at load time: an input may carry the raw
    /// proxy, its lag, or neither (estimators that need it then fail).
    pub proxies: Vec<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            entity: "country".into(),
            time: "year".into(),
            outcome: "gdp_growth".into(),
            treatment: "trust".into(),
            controls: vec!["capital".into(), "labor".into(), "technology".into()],
            proxies: vec!["gov_effectiveness".into()],
        }
    }
}

impl ColumnSchema {
    pub fn validate(&self) -> Result<()> {
        if self.outcome == self.treatment {
            return Err(Error::Schema(format!(
                "outcome and treatment are both `{}`",
                self.outcome
            )));
        }
        let mut seen = HashSet::new();
        for name in self.all_names() {
            if name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(name) {
                return Err(Error::Schema(format!("duplicate column name `{name}`")));
            }
        }
        Ok(())
    }

    /// Names that must be present in the header of an input file.
    pub fn required_columns(&self) -> impl Iterator<Item = &str> {
        [
            self.entity.as_str(),
            self.time.as_str(),
            &self.outcome,
            &self.treatment,
        ]
        .into_iter()
        .chain(self.controls.iter().map(String::as_str))
    }

    fn all_names(&self) -> impl Iterator<Item = &str> {
        self.required_columns()
            .chain(self.proxies.iter().map(String::as_str))
    }
}

/// Entity/time indexed table of real-valued columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entity_name: String,
    time_name: String,
    entities: Vec<String>,
    times: Vec<i64>,
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl PanelDataset {
    /// Builds a dataset from unsorted rows, sorting by `(entity, time)` and
    /// validating uniqueness.
    pub fn new(
        entity_name: impl Into<String>,
        time_name: impl Into<String>,
        entities: Vec<String>,
        times: Vec<i64>,
        columns: Vec<(String, Vec<Option<f64>>)>,
    ) -> Result<Self> {
        let n = entities.len();
        if times.len() != n {
            return Err(Error::Shape(format!(
                "{} entity ids but {} time indices",
                n,
                times.len()
            )));
        }
        let mut seen = HashSet::new();
        for (name, values) in &columns {
            if values.len() != n {
                return Err(Error::Shape(format!(
                    "column `{name}` has {} values, expected {n}",
                    values.len()
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{name}`")));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| entities[a].cmp(&entities[b]).then(times[a].cmp(&times[b])));
        for w in order.windows(2) {
            if entities[w[0]] == entities[w[1]] && times[w[0]] == times[w[1]] {
                return Err(Error::Integrity(format!(
                    "duplicate (entity, time) pair ({}, {})",
                    entities[w[0]], times[w[0]]
                )));
            }
        }

        let (names, columns) = columns
            .into_iter()
            .map(|(name, values)| (name, order.iter().map(|&i| values[i]).collect()))
            .unzip();
        Ok(Self {
            entity_name: entity_name.into(),
            time_name: time_name.into(),
            entities: order.iter().map(|&i| entities[i].clone()).collect(),
            times: order.iter().map(|&i| times[i]).collect(),
            names,
            columns,
        })
    }

    /// Convenience constructor for complete columns.
    pub fn from_complete(
        entity_name: impl Into<String>,
        time_name: impl Into<String>,
        entities: Vec<String>,
        times: Vec<i64>,
        columns: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let columns = columns
            .into_iter()
            .map(|(name, v)| (name, v.into_iter().map(Some).collect()))
            .collect();
        Self::new(entity_name, time_name, entities, times, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity_column_name(&self) -> &str {
        &self.entity_name
    }

    pub fn time_column_name(&self) -> &str {
        &self.time_name
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Column values with every cell present.
    pub fn complete_column(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)?
            .iter()
            .map(|v| v.ok_or_else(|| Error::Incomplete(name.to_string())))
            .collect()
    }

    /// Row ranges of each entity, in sorted order.
    pub fn entity_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = Vec::new();
        let mut start = 0;
        for i in 1..=self.entities.len() {
            if i == self.entities.len() || self.entities[i] != self.entities[start] {
                ranges.push(start..i);
                start = i;
            }
        }
        ranges
    }

    pub fn n_entities(&self) -> usize {
        self.entity_ranges().len()
    }

    /// Rows taken in the given order. Indices may repeat (bootstrap
    /// resampling), so the result is not a validated panel and is returned as
    /// a plain column map.
    pub fn take_rows(&self, rows: &[usize]) -> RowSample {
        RowSample {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }

    fn with_column(&self, name: &str, values: Vec<Option<f64>>) -> Result<Self> {
        if self.has_column(name) || name == self.entity_name || name == self.time_name {
            return Err(Error::ColumnExists(name.to_string()));
        }
        let mut out = self.clone();
        out.names.push(name.to_string());
        out.columns.push(values);
        Ok(out)
    }

    fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        Self {
            entity_name: self.entity_name.clone(),
            time_name: self.time_name.clone(),
            entities: rows.iter().map(|&i| self.entities[i].clone()).collect(),
            times: rows.iter().map(|&i| self.times[i]).collect(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    /// Fills missing cells in `cols`: interior gaps are linearly interpolated
    /// against the time index within each entity, then leading/trailing gaps
    /// and all-missing entities take the column's overall observed mean.
    pub fn impute(&self, cols: &[&str]) -> Result<Self> {
        let mut out = self.clone();
        let ranges = self.entity_ranges();
        for &name in cols {
            let idx = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
            let original = &self.columns[idx];
            let observed: Vec<f64> = original.iter().flatten().copied().collect();
            if observed.is_empty() {
                return Err(Error::Imputation(name.to_string()));
            }
            let fill = numeric::mean(&observed);

            let column = &mut out.columns[idx];
            for range in &ranges {
                interpolate_interior(&self.times[range.clone()], &mut column[range.clone()]);
            }
            for cell in column.iter_mut().filter(|c| c.is_none()) {
                *cell = Some(fill);
            }
        }
        Ok(out)
    }

    /// Adds `new_name` holding `col` shifted `k` rows back within each entity.
    ///
    /// The shift is positional, like a grouped row shift: in an entity with a
    /// gap in its time index the lag refers to the previous observed row.
    pub fn add_lag(&self, col: &str, k: usize, new_name: &str) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("lag order must be at least 1".into()));
        }
        let source = self.column(col)?;
        let mut values = vec![None; self.n_rows()];
        for range in self.entity_ranges() {
            if range.len() > k {
                values[range.start + k..range.end]
                    .copy_from_slice(&source[range.start..range.end - k]);
            }
        }
        self.with_column(new_name, values)
    }

    /// Adds `new_name` holding the per-entity arithmetic mean of `col`.
    pub fn add_entity_mean(&self, col: &str, new_name: &str) -> Result<Self> {
        let source = self.complete_column(col)?;
        let mut values = vec![None; self.n_rows()];
        for range in self.entity_ranges() {
            let m = numeric::mean(&source[range.clone()]);
            values[range].fill(Some(m));
        }
        self.with_column(new_name, values)
    }

    /// Removes rows with a missing value in any of `cols`.
    pub fn drop_missing_rows(&self, cols: &[&str]) -> Result<Self> {
        let columns = cols
            .iter()
            .map(|c| self.column(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.filter_rows(|i| columns.iter().all(|c| c[i].is_some())))
    }

    /// Keeps only entities with at least `min_obs` observed values of `col`.
    pub fn filter_min_observations(&self, col: &str, min_obs: usize) -> Result<Self> {
        let source = self.column(col)?;
        let mut keep = vec![false; self.n_rows()];
        for range in self.entity_ranges() {
            let observed = source[range.clone()].iter().filter(|v| v.is_some()).count();
            if observed >= min_obs {
                keep[range].fill(true);
            }
        }
        Ok(self.filter_rows(|i| keep[i]))
    }

    /// Keeps rows whose time index satisfies `pred`.
    pub fn filter_time(&self, pred: impl Fn(i64) -> bool) -> Self {
        self.filter_rows(|i| pred(self.times[i]))
    }

    /// Reads a panel CSV. Every column other than entity and time is parsed
    /// as numeric; empty or unparseable cells become missing.
    pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Self> {
        let path = path.as_ref();
        schema.validate()?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let position: HashMap<&str, usize> = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.as_str(), i))
            .collect();
        if position.len() != header.len() {
            return Err(Error::Schema(format!(
                "{}: duplicate header names",
                path.display()
            )));
        }
        for name in schema.required_columns() {
            if !position.contains_key(name) {
                return Err(Error::MissingColumn(name.to_string()));
            }
        }
        let entity_idx = position[schema.entity.as_str()];
        let time_idx = position[schema.time.as_str()];
        let data_idx: Vec<usize> = (0..header.len())
            .filter(|&i| i != entity_idx && i != time_idx)
            .collect();

        let mut entities = Vec::new();
        let mut times = Vec::new();
        let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); data_idx.len()];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            entities.push(record.get(entity_idx).unwrap_or_default().to_string());
            let raw_time = record.get(time_idx).unwrap_or_default();
            times.push(parse_time(raw_time).ok_or_else(|| {
                Error::Data(format!(
                    "{}: record {}: time value `{raw_time}` is not an integer",
                    path.display(),
                    line + 1
                ))
            })?);
            for (slot, &i) in columns.iter_mut().zip(&data_idx) {
                slot.push(record.get(i).and_then(parse_cell));
            }
        }

        let named = data_idx
            .iter()
            .map(|&i| header[i].clone())
            .zip(columns)
            .collect();
        Self::new(&schema.entity, &schema.time, entities, times, named)
    }

    /// Writes the dataset as CSV with entity and time leading; missing cells
    /// are written empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header = [self.entity_name.as_str(), self.time_name.as_str()]
            .into_iter()
            .chain(self.names.iter().map(String::as_str));
        writer
            .write_record(header)
            .map_err(|e| Error::csv(path, e))?;
        for i in 0..self.n_rows() {
            let mut record = vec![self.entities[i].clone(), self.times[i].to_string()];
            record.extend(
                self.columns
                    .iter()
                    .map(|c| c[i].map(|v| v.to_string()).unwrap_or_default()),
            );
            writer
                .write_record(&record)
                .map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

/// Columns gathered from arbitrary (possibly repeated) row indices.
#[derive(Debug, Clone)]
pub struct RowSample {
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl RowSample {
    pub fn complete_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        self.columns[idx]
            .iter()
            .map(|v| v.ok_or_else(|| Error::Incomplete(name.to_string())))
            .collect()
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_time(raw: &str) -> Option<i64> {
    raw.parse::<i64>().ok().or_else(|| {
        let v = raw.parse::<f64>().ok()?;
        (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

fn interpolate_interior(times: &[i64], values: &mut [Option<f64>]) {
    let observed: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    for pair in observed.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 2 {
            continue;
        }
        let (ya, yb) = (values[a].unwrap(), values[b].unwrap());
        let span = (times[b] - times[a]) as f64;
        for i in a + 1..b {
            let w = (times[i] - times[a]) as f64 / span;
            values[i] = Some(ya + w * (yb - ya));
        }
    }
}
