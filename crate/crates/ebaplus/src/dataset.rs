use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell values that are treated as missing, compared after trimming.
const MISSING_TOKENS: [&str; 3] = ["", "NA", "?"];

/// How a project attribute participates in distance calculations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

/// Sidecar description of a dataset CSV.
///
/// ```json
/// {
///   "effort": "actual_effort",
///   "id": "project",
///   "numeric": ["kloc", "team_size"],
///   "categorical": ["language"]
/// }
/// ```
///
/// `id` may be `null`, in which case projects are labelled `P1..Pn` in file
/// order. Columns present in the CSV but absent from the schema are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub effort: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
}

impl Schema {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Rejects overlapping roles: an attribute listed twice, or the effort
    /// or id column doubling as an attribute.
    pub fn validate(&self) -> Result<()> {
        if self.numeric.is_empty() && self.categorical.is_empty() {
            return Err(Error::InvalidSchema(
                "at least one numeric or categorical attribute is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for name in self.numeric.iter().chain(&self.categorical) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{name}` is listed more than once"
                )));
            }
        }
        if seen.contains(self.effort.as_str()) {
            return Err(Error::InvalidSchema(format!(
                "effort column `{}` cannot also be an attribute",
                self.effort
            )));
        }
        if let Some(id) = &self.id {
            if seen.contains(id.as_str()) || *id == self.effort {
                return Err(Error::InvalidSchema(format!(
                    "id column `{id}` cannot also be an attribute or the effort column"
                )));
            }
        }
        Ok(())
    }

    pub fn kind_of(&self, name: &str) -> Option<AttributeKind> {
        if self.numeric.iter().any(|c| c == name) {
            Some(AttributeKind::Numeric)
        } else if self.categorical.iter().any(|c| c == name) {
            Some(AttributeKind::Categorical)
        } else {
            None
        }
    }
}

/// Storage for one attribute column. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
}

impl Column {
    /// Builds a complete numeric column, handy for tests and examples.
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values.into_iter().map(Some).collect()),
        }
    }

    /// Builds a complete categorical column.
    pub fn categorical(name: impl Into<String>, values: Vec<&str>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(
                values.into_iter().map(|v| Some(v.to_string())).collect(),
            ),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> AttributeKind {
        match self.data {
            ColumnData::Numeric(_) => AttributeKind::Numeric,
            ColumnData::Categorical(_) => AttributeKind::Categorical,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical(v) => v[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> Self {
        let data = match &self.data {
            ColumnData::Numeric(v) => {
                ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect())
            }
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        };
        Self {
            name: self.name.clone(),
            data,
        }
    }

    fn cell_to_string(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| format!("{x}")).unwrap_or_default(),
            ColumnData::Categorical(v) => v[row].clone().unwrap_or_default(),
        }
    }
}

/// A table of software projects: ids, attribute columns and actual effort.
///
/// Missing cells survive loading and are only removed by [`drop_missing`];
/// the statistical routines expect a complete dataset and panic on a missing
/// cell, so run [`drop_missing`] (or build complete columns) first.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    columns: Vec<Column>,
    effort: Vec<Option<f64>>,
    effort_name: String,
    id_name: Option<String>,
}

impl Dataset {
    /// Builds a complete dataset from parts. Lengths must agree and effort
    /// values must be strictly positive and finite.
    pub fn new(ids: Vec<String>, columns: Vec<Column>, effort: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyDataset(""));
        }
        if columns.is_empty() {
            return Err(Error::InvalidSchema("no attribute columns".into()));
        }
        for c in &columns {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
        }
        if effort.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: effort.len(),
            });
        }
        for (row, &e) in effort.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::NonPositiveEffort { row: row + 1, value: e });
            }
        }
        let mut seen = HashSet::new();
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    row: row + 1,
                    id: id.clone(),
                });
            }
        }
        Ok(Self {
            ids,
            columns,
            effort: effort.into_iter().map(Some).collect(),
            effort_name: "effort".into(),
            id_name: None,
        })
    }

    pub fn n_projects(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn effort_name(&self) -> &str {
        &self.effort_name
    }

    /// Raw effort cells, `None` where the CSV cell was missing.
    pub fn efforts(&self) -> &[Option<f64>] {
        &self.effort
    }

    /// Effort of one project. Panics on a missing cell; callers are expected
    /// to have run [`drop_missing`].
    pub fn effort_at(&self, row: usize) -> f64 {
        self.effort[row].expect("missing effort cell; run drop_missing first")
    }

    pub fn missing_cell_count(&self) -> usize {
        let cells = self
            .columns
            .iter()
            .map(|c| (0..c.len()).filter(|&r| c.is_missing(r)).count())
            .sum::<usize>();
        cells + self.effort.iter().filter(|e| e.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_cell_count() == 0
    }

    /// Projects a dataset onto the given row indices, in the given order.
    /// Indices may repeat, which is exactly what bootstrap resampling needs.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            effort: rows.iter().map(|&r| self.effort[r]).collect(),
            effort_name: self.effort_name.clone(),
            id_name: self.id_name.clone(),
        }
    }

    /// Minimum and maximum of a numeric attribute, ignoring missing cells.
    pub fn column_range(&self, name: &str) -> Result<(f64, f64)> {
        let column = self.column(name)?;
        let values = match column.data() {
            ColumnData::Numeric(v) => v,
            ColumnData::Categorical(_) => return Err(Error::NotNumeric(name.to_string())),
        };
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut any = false;
        for v in values.iter().flatten() {
            min = min.min(*v);
            max = max.max(*v);
            any = true;
        }
        if !any {
            return Err(Error::EmptyDataset(": column has no observed values"));
        }
        Ok((min, max))
    }

    /// Canonical CSV rendering: id column first when one was named, then the
    /// attribute columns in load order, effort last. Missing cells are empty.
    /// Numbers use the shortest representation that parses back exactly, so
    /// serialize and reload is lossless.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = Vec::new();
        if let Some(id) = &self.id_name {
            header.push(id);
        }
        header.extend(self.columns.iter().map(|c| c.name.as_str()));
        header.push(&self.effort_name);
        let _ = writeln!(out, "{}", header.join(","));
        for row in 0..self.n_projects() {
            let mut fields: Vec<String> = Vec::new();
            if self.id_name.is_some() {
                fields.push(self.ids[row].clone());
            }
            for c in &self.columns {
                fields.push(c.cell_to_string(row));
            }
            fields.push(self.effort[row].map(|e| format!("{e}")).unwrap_or_default());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn parse_cell(token: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let token = token.trim();
    if MISSING_TOKENS.contains(&token) {
        return Ok(None);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            token: token.to_string(),
        }),
    }
}

/// Parses CSV text against a schema. Cells equal to one of `""`, `"NA"` or
/// `"?"` (after trimming) are recorded as missing; effort values that are
/// present must be strictly positive.
pub fn parse_dataset_csv(text: &str, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let effort_pos = position(&schema.effort)?;
    let id_pos = schema.id.as_deref().map(position).transpose()?;

    // Attribute order follows the CSV header, not the schema listing, so
    // reports and tie-breaking match what the file shows.
    let mut attr_positions: Vec<(usize, String, AttributeKind)> = Vec::new();
    for (pos, header) in headers.iter().enumerate() {
        if let Some(kind) = schema.kind_of(header) {
            attr_positions.push((pos, header.to_string(), kind));
        }
    }
    for name in schema.numeric.iter().chain(&schema.categorical) {
        if !attr_positions.iter().any(|(_, n, _)| n == name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    let mut ids: Vec<String> = Vec::new();
    let mut effort: Vec<Option<f64>> = Vec::new();
    let mut data: Vec<ColumnData> = attr_positions
        .iter()
        .map(|(_, _, kind)| match kind {
            AttributeKind::Numeric => ColumnData::Numeric(Vec::new()),
            AttributeKind::Categorical => ColumnData::Categorical(Vec::new()),
        })
        .collect();

    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let row = index + 1;
        match id_pos {
            Some(pos) => ids.push(record.get(pos).unwrap_or("").trim().to_string()),
            None => ids.push(format!("P{row}")),
        }
        let effort_cell = parse_cell(record.get(effort_pos).unwrap_or(""), row, &schema.effort)?;
        if let Some(e) = effort_cell {
            if e <= 0.0 {
                return Err(Error::NonPositiveEffort { row, value: e });
            }
        }
        effort.push(effort_cell);
        for ((pos, name, _), column) in attr_positions.iter().zip(&mut data) {
            let raw = record.get(*pos).unwrap_or("");
            match column {
                ColumnData::Numeric(values) => values.push(parse_cell(raw, row, name)?),
                ColumnData::Categorical(values) => {
                    let token = raw.trim();
                    if MISSING_TOKENS.contains(&token) {
                        values.push(None);
                    } else {
                        values.push(Some(token.to_string()));
                    }
                }
            }
        }
    }

    if ids.is_empty() {
        return Err(Error::EmptyDataset(": the CSV has no data rows"));
    }
    let mut seen = HashSet::new();
    for (index, id) in ids.iter().enumerate() {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                row: index + 1,
                id: id.clone(),
            });
        }
    }

    let columns = attr_positions
        .into_iter()
        .zip(data)
        .map(|((_, name, _), data)| Column { name, data })
        .collect();
    Ok(Dataset {
        ids,
        columns,
        effort,
        effort_name: schema.effort.clone(),
        id_name: schema.id.clone(),
    })
}

/// Loads a dataset CSV from disk using the given schema.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset_csv(&text, schema)
}

/// Listwise deletion: removes every project with at least one missing cell
/// (attribute or effort) and reports the removed ids in file order.
pub fn drop_missing(dataset: &Dataset) -> Result<(Dataset, Vec<String>)> {
    let n = dataset.n_projects();
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    let mut removed: Vec<String> = Vec::new();
    for row in 0..n {
        let missing = dataset.effort[row].is_none()
            || dataset.columns.iter().any(|c| c.is_missing(row));
        if missing {
            removed.push(dataset.ids[row].clone());
        } else {
            keep.push(row);
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyDataset(
            ": every project has at least one missing cell",
        ));
    }
    Ok((dataset.select_rows(&keep), removed))
}
