//! Feature schema and the categorical → numeric encoding.
//!
//! Each column has one [`FeatureKind`]. Binary columns become a single 0/1
//! feature, ordinal columns their rank, numeric columns their raw count, and
//! nominal columns a one-hot block named `<column>_<value>` with the
//! vocabulary in lexicographic order. Output columns follow file order with
//! nominal blocks expanded in place.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Column, RecordTable, StudentRecord, CLASS_LABELS};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Ordinal,
    Nominal,
    Numeric,
    Label,
}

/// How an ordinal column's values are ranked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrdinalOrder {
    /// Rank = position in this list.
    Explicit(Vec<String>),
    Rule(OrderRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    /// Observed values sorted by their trailing integer ("G-02" < "G-10"),
    /// then ranked 0..k-1.
    NumericSuffix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub kind: FeatureKind,
    /// Binary only: the raw value encoded as 1. Defaults to the
    /// lexicographically later of the two observed values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_value: Option<String>,
    /// Ordinal: value ranking. Label: class order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrdinalOrder>,
}

impl ColumnSpec {
    fn of(kind: FeatureKind) -> Self {
        Self {
            kind,
            positive_value: None,
            order: None,
        }
    }
}

/// Kind assignment for all 17 columns. Serializes as a JSON object keyed by
/// header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Column, ColumnSpec>", into = "BTreeMap<Column, ColumnSpec>")]
pub struct FeatureSchema {
    columns: BTreeMap<Column, ColumnSpec>,
}

impl TryFrom<BTreeMap<Column, ColumnSpec>> for FeatureSchema {
    type Error = Error;

    fn try_from(columns: BTreeMap<Column, ColumnSpec>) -> Result<Self> {
        FeatureSchema::new(columns)
    }
}

impl From<FeatureSchema> for BTreeMap<Column, ColumnSpec> {
    fn from(schema: FeatureSchema) -> Self {
        schema.columns
    }
}

fn to_strings(values: &[&str]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Default kind assignment for the student dataset.
pub fn default_schema() -> FeatureSchema {
    use Column::*;
    use FeatureKind::*;

    let mut columns = BTreeMap::new();
    for column in [
        Semester,
        Relation,
        ParentAnsweringSurvey,
        ParentSchoolSatisfaction,
        StudentAbsenceDays,
    ] {
        columns.insert(column, ColumnSpec::of(Binary));
    }
    columns.insert(
        Gender,
        ColumnSpec {
            positive_value: Some("M".into()),
            ..ColumnSpec::of(Binary)
        },
    );
    columns.insert(
        StageId,
        ColumnSpec {
            order: Some(OrdinalOrder::Explicit(to_strings(&[
                "lowerlevel",
                "MiddleSchool",
                "HighSchool",
            ]))),
            ..ColumnSpec::of(Ordinal)
        },
    );
    columns.insert(
        GradeId,
        ColumnSpec {
            order: Some(OrdinalOrder::Rule(OrderRule::NumericSuffix)),
            ..ColumnSpec::of(Ordinal)
        },
    );
    for column in Column::COUNTS {
        columns.insert(column, ColumnSpec::of(Numeric));
    }
    for column in [Nationality, PlaceOfBirth, SectionId, Topic] {
        columns.insert(column, ColumnSpec::of(Nominal));
    }
    columns.insert(
        Class,
        ColumnSpec {
            order: Some(OrdinalOrder::Explicit(to_strings(&CLASS_LABELS))),
            ..ColumnSpec::of(Label)
        },
    );
    FeatureSchema::new(columns).expect("default schema is well formed")
}

impl FeatureSchema {
    /// Checks that the assignment covers every column and is internally
    /// consistent.
    pub fn new(columns: BTreeMap<Column, ColumnSpec>) -> Result<Self> {
        let bad = |msg: String| Err(Error::Schema(msg));
        for column in Column::ALL {
            let Some(spec) = columns.get(&column) else {
                return bad(format!("no entry for column {column}"));
            };
            match (column, spec.kind) {
                (Column::Class, FeatureKind::Label) => {
                    let order = match &spec.order {
                        None => to_strings(&CLASS_LABELS),
                        Some(OrdinalOrder::Explicit(order)) => order.clone(),
                        Some(OrdinalOrder::Rule(_)) => return bad("Class order must be an explicit list".into()),
                    };
                    let as_set: BTreeSet<&str> = order.iter().map(String::as_str).collect();
                    if order.len() != CLASS_LABELS.len() || as_set != BTreeSet::from(CLASS_LABELS) {
                        return bad(format!("Class order must be a permutation of L, M, H, got {order:?}"));
                    }
                }
                (Column::Class, kind) => return bad(format!("Class must be the label column, not {kind:?}")),
                (_, FeatureKind::Label) => return bad(format!("{column} cannot be the label column")),
                (c, FeatureKind::Numeric) if !c.is_count() => {
                    return bad(format!("{column} is categorical and cannot be numeric"))
                }
                (c, kind) if c.is_count() && kind != FeatureKind::Numeric => {
                    return bad(format!("{column} holds counts and must be numeric"))
                }
                (_, FeatureKind::Ordinal) => match &spec.order {
                    None => return bad(format!("ordinal column {column} needs an order")),
                    Some(OrdinalOrder::Explicit(order)) => {
                        let unique: BTreeSet<&String> = order.iter().collect();
                        if order.is_empty() || unique.len() != order.len() {
                            return bad(format!("order for {column} must be non-empty and duplicate-free"));
                        }
                    }
                    Some(OrdinalOrder::Rule(_)) => {}
                },
                _ => {}
            }
            if spec.positive_value.is_some() && spec.kind != FeatureKind::Binary {
                return bad(format!("positive_value is only valid on binary columns ({column})"));
            }
            if spec.order.is_some() && !matches!(spec.kind, FeatureKind::Ordinal | FeatureKind::Label) {
                return bad(format!("order is only valid on ordinal or label columns ({column})"));
            }
        }
        Ok(Self { columns })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn spec(&self, column: Column) -> &ColumnSpec {
        &self.columns[&column]
    }

    pub fn kind(&self, column: Column) -> FeatureKind {
        self.spec(column).kind
    }

    pub fn columns_of(&self, kind: FeatureKind) -> Vec<Column> {
        Column::ALL.into_iter().filter(|&c| self.kind(c) == kind).collect()
    }
}

/// A column's encoding after its values have been observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    Binary { negative: String, positive: String },
    Ordinal { order: Vec<String> },
    Nominal { vocabulary: Vec<String> },
    Numeric,
    Label { order: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FittedColumn {
    pub column: Column,
    pub encoding: ColumnEncoding,
}

impl FittedColumn {
    /// Number of output features this column produces.
    pub fn width(&self) -> usize {
        match &self.encoding {
            ColumnEncoding::Nominal { vocabulary } => vocabulary.len(),
            ColumnEncoding::Label { .. } => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FittedSchema {
    pub schema: FeatureSchema,
    /// In file order, label included.
    pub columns: Vec<FittedColumn>,
    pub feature_names: Vec<String>,
}

impl FittedSchema {
    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn label_order(&self) -> &[String] {
        self.columns
            .iter()
            .find_map(|c| match &c.encoding {
                ColumnEncoding::Label { order } => Some(order.as_slice()),
                _ => None,
            })
            .expect("fitted schema has a label column")
    }

    pub fn nominal_vocabulary(&self, column: Column) -> Option<&[String]> {
        self.columns.iter().find_map(|c| match &c.encoding {
            ColumnEncoding::Nominal { vocabulary } if c.column == column => Some(vocabulary.as_slice()),
            _ => None,
        })
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.label_order()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn label_name(&self, index: usize) -> Result<&str> {
        self.label_order()
            .get(index)
            .map(String::as_str)
            .ok_or(Error::LabelOutOfRange(index))
    }

    /// Checks the internal consistency of a schema read from disk.
    pub fn check(&self) -> Result<()> {
        let columns: Vec<Column> = self.columns.iter().map(|c| c.column).collect();
        if columns != Column::ALL {
            return Err(Error::Schema(
                "fitted columns are not the 17 dataset columns in order".into(),
            ));
        }
        let names = feature_names(&self.columns);
        if names != self.feature_names {
            return Err(Error::Schema("feature names do not match the fitted columns".into()));
        }
        Ok(())
    }
}

fn feature_names(columns: &[FittedColumn]) -> Vec<String> {
    let mut names = Vec::new();
    for fitted in columns {
        match &fitted.encoding {
            ColumnEncoding::Nominal { vocabulary } => {
                names.extend(vocabulary.iter().map(|v| format!("{}_{v}", fitted.column)))
            }
            ColumnEncoding::Label { .. } => {}
            _ => names.push(fitted.column.header_name().to_string()),
        }
    }
    names
}

fn trailing_integer(value: &str) -> Option<u64> {
    let digits_start = value
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i)?;
    value[digits_start..].parse().ok()
}

/// Learns nominal vocabularies, binary value pairs and suffix-ranked ordinal
/// orders from the table.
pub fn fit_schema(table: &RecordTable, schema: &FeatureSchema) -> Result<FittedSchema> {
    let mut columns = Vec::with_capacity(Column::ALL.len());
    for column in Column::ALL {
        let spec = schema.spec(column);
        let fit_err = |message: String| Error::Fit {
            column: column.header_name().to_string(),
            message,
        };
        let distinct = || -> BTreeSet<&str> { table.records.iter().filter_map(|r| r.categorical(column)).collect() };
        let encoding = match spec.kind {
            FeatureKind::Numeric => ColumnEncoding::Numeric,
            FeatureKind::Nominal => ColumnEncoding::Nominal {
                vocabulary: distinct().into_iter().map(str::to_string).collect(),
            },
            FeatureKind::Binary => {
                let values: Vec<&str> = distinct().into_iter().collect();
                if values.len() != 2 {
                    return Err(fit_err(format!(
                        "binary column has {} distinct values {values:?}, expected 2",
                        values.len()
                    )));
                }
                let positive = match &spec.positive_value {
                    Some(p) if values.contains(&p.as_str()) => p.clone(),
                    Some(p) => return Err(fit_err(format!("positive value {p:?} not present in data"))),
                    None => values[1].to_string(),
                };
                let negative = values.iter().find(|&&v| v != positive).unwrap().to_string();
                ColumnEncoding::Binary { negative, positive }
            }
            FeatureKind::Ordinal => {
                let values = distinct();
                let order = match spec.order.as_ref().expect("validated schema") {
                    OrdinalOrder::Explicit(order) => {
                        if let Some(v) = values.iter().find(|v| !order.iter().any(|o| o == *v)) {
                            return Err(fit_err(format!("value {v:?} is not in the declared order {order:?}")));
                        }
                        order.clone()
                    }
                    OrdinalOrder::Rule(OrderRule::NumericSuffix) => {
                        let mut keyed = Vec::with_capacity(values.len());
                        for v in values {
                            let key = trailing_integer(v)
                                .ok_or_else(|| fit_err(format!("value {v:?} has no numeric suffix")))?;
                            keyed.push((key, v));
                        }
                        keyed.sort();
                        keyed.into_iter().map(|(_, v)| v.to_string()).collect()
                    }
                };
                ColumnEncoding::Ordinal { order }
            }
            FeatureKind::Label => {
                let order = match &spec.order {
                    Some(OrdinalOrder::Explicit(order)) => order.clone(),
                    _ => to_strings(&CLASS_LABELS),
                };
                if let Some(v) = distinct().into_iter().find(|v| !order.iter().any(|o| o == v)) {
                    return Err(Error::UnknownLabel(v.to_string()));
                }
                ColumnEncoding::Label { order }
            }
        };
        columns.push(FittedColumn { column, encoding });
    }
    let feature_names = feature_names(&columns);
    Ok(FittedSchema {
        schema: schema.clone(),
        columns,
        feature_names,
    })
}

/// Encoded features plus class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<usize>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// CSV export: feature columns followed by `Class` holding the index.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = self.column_names.clone();
        header.push(Column::Class.header_name().to_string());
        writer.write_record(&header)?;
        for (row, label) in self.features.iter_rows().zip(&self.labels) {
            let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            fields.push(label.to_string());
            writer.write_record(&fields)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn unseen(column: Column, value: &str) -> Error {
    Error::UnseenCategory {
        column: column.header_name().to_string(),
        value: value.to_string(),
    }
}

fn encode_record(record: &StudentRecord, fitted: &FittedSchema, out: &mut [f64]) -> Result<()> {
    let mut at = 0;
    for fc in &fitted.columns {
        let column = fc.column;
        let text = || record.categorical(column).unwrap_or("");
        match &fc.encoding {
            ColumnEncoding::Numeric => {
                out[at] = f64::from(record.count(column).unwrap_or(0));
                at += 1;
            }
            ColumnEncoding::Binary { negative, positive } => {
                let v = text();
                out[at] = if v == positive {
                    1.0
                } else if v == negative {
                    0.0
                } else {
                    return Err(unseen(column, v));
                };
                at += 1;
            }
            ColumnEncoding::Ordinal { order } => {
                let v = text();
                let rank = order.iter().position(|o| o == v).ok_or_else(|| unseen(column, v))?;
                out[at] = rank as f64;
                at += 1;
            }
            ColumnEncoding::Nominal { vocabulary } => {
                let v = text();
                let hot = vocabulary
                    .binary_search_by(|probe| probe.as_str().cmp(v))
                    .map_err(|_| unseen(column, v))?;
                out[at + hot] = 1.0;
                at += vocabulary.len();
            }
            ColumnEncoding::Label { .. } => {}
        }
    }
    debug_assert_eq!(at, out.len());
    Ok(())
}

/// Encodes feature columns only; `Class` is ignored when present.
pub fn encode_features(records: &[StudentRecord], fitted: &FittedSchema) -> Result<Matrix> {
    let width = fitted.width();
    let mut features = Matrix::zeros(records.len(), width);
    for (i, record) in records.iter().enumerate() {
        encode_record(record, fitted, features.row_mut(i))?;
    }
    Ok(features)
}

pub fn encode(table: &RecordTable, fitted: &FittedSchema) -> Result<DesignMatrix> {
    let features = encode_features(&table.records, fitted)?;
    let labels = table
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| match &r.class_label {
            Some(label) => fitted.label_index(label),
            None => Err(Error::Field {
                row: i + 1,
                column: Column::Class.header_name().to_string(),
                message: "missing class label".into(),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignMatrix {
        column_names: fitted.feature_names.clone(),
        features,
        labels,
    })
}

/// Default class bijection: L → 0, M → 1, H → 2.
pub fn encode_label(class_label: &str) -> Result<usize> {
    CLASS_LABELS
        .iter()
        .position(|&l| l == class_label)
        .ok_or_else(|| Error::UnknownLabel(class_label.to_string()))
}

pub fn decode_label(index: usize) -> Result<&'static str> {
    CLASS_LABELS.get(index).copied().ok_or(Error::LabelOutOfRange(index))
}
