//! Header-driven loading of UNSW-NB15 CSV files into a columnar table.

use std::io::Write;
use std::path::Path;

use crate::dataset::schema::{AttackCategory, FeatureKind, FeatureSchema, NUM_FEATURES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    fn extend(&mut self, other: &Column) -> Result<()> {
        match (self, other) {
            (Column::Numeric(a), Column::Numeric(b)) => a.extend_from_slice(b),
            (Column::Categorical(a), Column::Categorical(b)) => a.extend_from_slice(b),
            _ => {
                return Err(Error::Dataset(
                    "cannot concatenate columns of different kinds".into(),
                ))
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawLabels {
    pub category: Vec<AttackCategory>,
    pub label: Vec<u8>,
}

/// Flow records exactly as read from disk, one column per schema feature in
/// schema order.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub labels: Option<RawLabels>,
    rows: usize,
}

impl RawTable {
    pub fn new(columns: Vec<Column>, labels: Option<RawLabels>) -> Result<Self> {
        if columns.len() != NUM_FEATURES {
            return Err(Error::shape(
                "raw table",
                "columns",
                NUM_FEATURES,
                columns.len(),
            ));
        }
        let rows = columns[0].len();
        let schema = FeatureSchema::unsw_nb15();
        for (col, spec) in columns.iter().zip(&schema.features) {
            let kind_ok = matches!(
                (col, spec.kind),
                (Column::Numeric(_), FeatureKind::Numeric)
                    | (Column::Categorical(_), FeatureKind::Categorical)
            );
            if !kind_ok {
                return Err(Error::Dataset(format!(
                    "column `{}` has the wrong kind",
                    spec.name
                )));
            }
            if col.len() != rows {
                return Err(Error::Dataset(format!(
                    "column `{}` has {} rows, expected {rows}",
                    spec.name,
                    col.len()
                )));
            }
        }
        if let Some(l) = &labels {
            if l.category.len() != rows || l.label.len() != rows {
                return Err(Error::Dataset(
                    "label columns disagree with feature row count".into(),
                ));
            }
        }
        Ok(Self {
            columns,
            labels,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn labels(&self) -> Result<&RawLabels> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::Dataset("records carry no attack_cat/label columns".into()))
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            labels: self.labels.as_ref().map(|l| RawLabels {
                category: rows.iter().map(|&r| l.category[r]).collect(),
                label: rows.iter().map(|&r| l.label[r]).collect(),
            }),
            rows: rows.len(),
        }
    }

    pub fn concat(parts: &[&RawTable]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("table concatenation"))?;
        let mut out = (*first).clone();
        for p in &parts[1..] {
            for (a, b) in out.columns.iter_mut().zip(&p.columns) {
                a.extend(b)?;
            }
            out.labels = match (out.labels.take(), &p.labels) {
                (Some(mut a), Some(b)) => {
                    a.category.extend_from_slice(&b.category);
                    a.label.extend_from_slice(&b.label);
                    Some(a)
                }
                _ => None,
            };
            out.rows += p.rows;
        }
        Ok(out)
    }

    /// Writes the table in the published CSV layout (with a leading `id`).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let schema = FeatureSchema::unsw_nb15();
        let mut header = vec!["id".to_string()];
        header.extend(schema.features.iter().map(|f| f.name.clone()));
        if self.labels.is_some() {
            header.push(schema.category_field.clone());
            header.push(schema.label_field.clone());
        }
        w.write_record(&header)?;
        for r in 0..self.rows {
            let mut rec = vec![(r + 1).to_string()];
            for col in &self.columns {
                rec.push(match col {
                    Column::Numeric(v) => format_number(v[r]),
                    Column::Categorical(v) => v[r].clone(),
                });
            }
            if let Some(l) = &self.labels {
                rec.push(l.category[r].name().to_string());
                rec.push(l.label[r].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let mut inner = w
            .into_inner()
            .map_err(|e| Error::io(path, e.into_error()))?;
        inner.flush().map_err(|e| Error::io(path, e))
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Loads a labelled UNSW-NB15 CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    load(path.as_ref(), true)
}

/// Loads feature columns; label columns are read when present but not required.
pub fn load_csv_features(path: impl AsRef<Path>) -> Result<RawTable> {
    load(path.as_ref(), false)
}

fn load(path: &Path, require_labels: bool) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::with_capacity(1 << 20, file));
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(FeatureSchema::canonical_name)
        .collect();

    let schema = FeatureSchema::unsw_nb15();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut positions = Vec::with_capacity(NUM_FEATURES);
    for spec in &schema.features {
        positions.push(find(&spec.name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: spec.name.clone(),
        })?);
    }
    let cat_pos = find(&schema.category_field);
    let label_pos = find(&schema.label_field);
    let with_labels = match (cat_pos, label_pos) {
        (Some(_), Some(_)) => true,
        _ if require_labels => {
            let column = if cat_pos.is_none() {
                &schema.category_field
            } else {
                &schema.label_field
            };
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: column.clone(),
            });
        }
        _ => false,
    };

    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => Column::Numeric(Vec::new()),
            FeatureKind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();
    let mut category = Vec::new();
    let mut label = Vec::new();

    let mut record = csv::StringRecord::new();
    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| Error::MalformedRow {
                path: path.to_path_buf(),
                row: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
        if !more {
            break;
        }
        // 1-based line number in the file, header included
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row: line,
            message,
        };
        for (col, &pos) in columns.iter_mut().zip(&positions) {
            let cell = record
                .get(pos)
                .ok_or_else(|| bad(format!("missing field {pos}")))?;
            match col {
                Column::Numeric(v) => {
                    let x: f64 = cell.parse().map_err(|_| {
                        bad(format!(
                            "column `{}`: cannot parse {cell:?} as a number",
                            headers[pos]
                        ))
                    })?;
                    if !x.is_finite() {
                        return Err(bad(format!(
                            "column `{}`: non-finite value {cell:?}",
                            headers[pos]
                        )));
                    }
                    v.push(x);
                }
                Column::Categorical(v) => v.push(cell.to_string()),
            }
        }
        if with_labels {
            let cat = record.get(cat_pos.unwrap()).unwrap_or("");
            category.push(
                AttackCategory::parse(cat)
                    .ok_or_else(|| bad(format!("unknown attack category {cat:?}")))?,
            );
            let lab = record.get(label_pos.unwrap()).unwrap_or("");
            label.push(match lab {
                "0" => 0,
                "1" => 1,
                _ => return Err(bad(format!("label must be 0 or 1, got {lab:?}"))),
            });
        }
    }
    let labels = with_labels.then_some(RawLabels { category, label });
    let table = RawTable::new(columns, labels)?;
    if table.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }
    Ok(table)
}
