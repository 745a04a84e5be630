//! Parsing, validation and summary statistics for the raw student table.

use std::collections::BTreeMap;
use std::fmt;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest value accepted in the four activity-count columns.
pub const COUNT_MAX: u32 = 100;

/// Accepted class labels, lowest grade band first.
pub const CLASS_LABELS: [&str; 3] = ["L", "M", "H"];

/// The 17 dataset columns in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    Gender,
    Nationality,
    PlaceOfBirth,
    StageId,
    GradeId,
    SectionId,
    Topic,
    Semester,
    Relation,
    RaisedHands,
    VisitedResources,
    AnnouncementsView,
    Discussion,
    ParentAnsweringSurvey,
    ParentSchoolSatisfaction,
    StudentAbsenceDays,
    Class,
}

impl Column {
    pub const ALL: [Column; 17] = [
        Column::Gender,
        Column::Nationality,
        Column::PlaceOfBirth,
        Column::StageId,
        Column::GradeId,
        Column::SectionId,
        Column::Topic,
        Column::Semester,
        Column::Relation,
        Column::RaisedHands,
        Column::VisitedResources,
        Column::AnnouncementsView,
        Column::Discussion,
        Column::ParentAnsweringSurvey,
        Column::ParentSchoolSatisfaction,
        Column::StudentAbsenceDays,
        Column::Class,
    ];

    pub const COUNTS: [Column; 4] = [
        Column::RaisedHands,
        Column::VisitedResources,
        Column::AnnouncementsView,
        Column::Discussion,
    ];

    /// Header name exactly as it appears in the dataset, odd casing included.
    pub fn header_name(self) -> &'static str {
        match self {
            Column::Gender => "gender",
            Column::Nationality => "NationalITy",
            Column::PlaceOfBirth => "PlaceofBirth",
            Column::StageId => "StageID",
            Column::GradeId => "GradeID",
            Column::SectionId => "SectionID",
            Column::Topic => "Topic",
            Column::Semester => "Semester",
            Column::Relation => "Relation",
            Column::RaisedHands => "raisedhands",
            Column::VisitedResources => "VisITedResources",
            Column::AnnouncementsView => "AnnouncementsView",
            Column::Discussion => "Discussion",
            Column::ParentAnsweringSurvey => "ParentAnsweringSurvey",
            Column::ParentSchoolSatisfaction => "ParentschoolSatisfaction",
            Column::StudentAbsenceDays => "StudentAbsenceDays",
            Column::Class => "Class",
        }
    }

    pub fn from_header(name: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.header_name() == name)
    }

    pub fn is_count(self) -> bool {
        Column::COUNTS.contains(&self)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Serialize for Column {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.header_name())
    }
}

impl<'de> Deserialize<'de> for Column {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Column::from_header(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown column {name:?}")))
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header_name())
    }
}

/// The canonical header line, without a trailing newline.
pub fn canonical_header() -> String {
    Column::ALL.map(Column::header_name).join(",")
}

/// One student row. `class_label` is `None` only for prediction inputs that
/// omit the `Class` column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub gender: String,
    pub nationality: String,
    pub place_of_birth: String,
    pub stage_id: String,
    pub grade_id: String,
    pub section_id: String,
    pub topic: String,
    pub semester: String,
    pub relation: String,
    pub raised_hands: u32,
    pub visited_resources: u32,
    pub announcements_view: u32,
    pub discussion: u32,
    pub parent_answering_survey: String,
    pub parent_school_satisfaction: String,
    pub student_absence_days: String,
    pub class_label: Option<String>,
}

impl StudentRecord {
    /// Value of a categorical column. `None` for count columns and for a
    /// missing class label.
    pub fn categorical(&self, column: Column) -> Option<&str> {
        let value = match column {
            Column::Gender => &self.gender,
            Column::Nationality => &self.nationality,
            Column::PlaceOfBirth => &self.place_of_birth,
            Column::StageId => &self.stage_id,
            Column::GradeId => &self.grade_id,
            Column::SectionId => &self.section_id,
            Column::Topic => &self.topic,
            Column::Semester => &self.semester,
            Column::Relation => &self.relation,
            Column::ParentAnsweringSurvey => &self.parent_answering_survey,
            Column::ParentSchoolSatisfaction => &self.parent_school_satisfaction,
            Column::StudentAbsenceDays => &self.student_absence_days,
            Column::Class => return self.class_label.as_deref(),
            _ => return None,
        };
        Some(value)
    }

    pub fn count(&self, column: Column) -> Option<u32> {
        match column {
            Column::RaisedHands => Some(self.raised_hands),
            Column::VisitedResources => Some(self.visited_resources),
            Column::AnnouncementsView => Some(self.announcements_view),
            Column::Discussion => Some(self.discussion),
            _ => None,
        }
    }

    /// Field text in column order, as written back to CSV.
    fn to_fields(&self, with_class: bool) -> Vec<String> {
        Column::ALL
            .iter()
            .filter(|&&c| c != Column::Class || with_class)
            .map(|&c| match self.count(c) {
                Some(n) => n.to_string(),
                None => self.categorical(c).unwrap_or_default().to_string(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTable {
    pub records: Vec<StudentRecord>,
    pub source_name: String,
}

impl RecordTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the table back out with the canonical header. Unlabeled
    /// tables are written without the `Class` column.
    pub fn to_csv(&self) -> Result<String> {
        let labeled = self.records.iter().all(|r| r.class_label.is_some());
        let mut writer = WriterBuilder::new().from_writer(Vec::new());
        let header: Vec<&str> = Column::ALL
            .iter()
            .filter(|&&c| labeled || c != Column::Class)
            .map(|c| c.header_name())
            .collect();
        writer.write_record(&header)?;
        for record in &self.records {
            writer.write_record(record.to_fields(labeled))?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Parses a labeled dataset: the header must be exactly the 17 canonical
/// names in order.
pub fn parse_dataset(csv_text: &str, source_name: &str) -> Result<RecordTable> {
    parse(csv_text, source_name, false)
}

/// Parses rows for prediction. The header is either the full canonical
/// header or the first 16 names (no `Class`).
pub fn parse_unlabeled(csv_text: &str, source_name: &str) -> Result<RecordTable> {
    parse(csv_text, source_name, true)
}

fn parse(csv_text: &str, source_name: &str, class_optional: bool) -> Result<RecordTable> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(Error::Header("file is empty".into())),
    };
    let has_class = check_header(&header, class_optional)?;
    let width = if has_class { 17 } else { 16 };

    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let row = row?;
        let row_number = i + 1;
        // blank trailing lines come through as a single empty field
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != width {
            return Err(Error::FieldCount {
                row: row_number,
                expected: width,
                found: row.len(),
            });
        }
        records.push(record_from_row(&row, row_number, has_class)?);
    }
    if records.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(RecordTable {
        records,
        source_name: source_name.to_string(),
    })
}

/// Returns whether the header includes `Class`.
fn check_header(header: &StringRecord, class_optional: bool) -> Result<bool> {
    let found: Vec<&str> = header.iter().collect();
    let expected: Vec<&str> = Column::ALL.iter().map(|c| c.header_name()).collect();
    if found == expected {
        return Ok(true);
    }
    if class_optional && found == expected[..16] {
        return Ok(false);
    }
    if found.len() != expected.len() && !(class_optional && found.len() == 16) {
        return Err(Error::Header(format!(
            "expected {} columns, found {}",
            expected.len(),
            found.len()
        )));
    }
    let (position, (got, want)) = found
        .iter()
        .zip(&expected)
        .enumerate()
        .find(|(_, (g, w))| g != w)
        .expect("headers differ somewhere");
    Err(Error::Header(format!(
        "column {} is {got:?}, expected {want:?}",
        position + 1
    )))
}

fn record_from_row(row: &StringRecord, row_number: usize, has_class: bool) -> Result<StudentRecord> {
    let text = |c: Column| row[c.index()].to_string();
    let count = |c: Column| parse_count(&row[c.index()], row_number, c);
    Ok(StudentRecord {
        gender: text(Column::Gender),
        nationality: text(Column::Nationality),
        place_of_birth: text(Column::PlaceOfBirth),
        stage_id: text(Column::StageId),
        grade_id: text(Column::GradeId),
        section_id: text(Column::SectionId),
        topic: text(Column::Topic),
        semester: text(Column::Semester),
        relation: text(Column::Relation),
        raised_hands: count(Column::RaisedHands)?,
        visited_resources: count(Column::VisitedResources)?,
        announcements_view: count(Column::AnnouncementsView)?,
        discussion: count(Column::Discussion)?,
        parent_answering_survey: text(Column::ParentAnsweringSurvey),
        parent_school_satisfaction: text(Column::ParentSchoolSatisfaction),
        student_absence_days: text(Column::StudentAbsenceDays),
        class_label: has_class.then(|| text(Column::Class)),
    })
}

fn parse_count(raw: &str, row: usize, column: Column) -> Result<u32> {
    let field_error = |message: String| Error::Field {
        row,
        column: column.header_name().to_string(),
        message,
    };
    // integers only: "12.0" and "+3" are rejected along with "abc"
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(field_error(format!("{raw:?} is not a non-negative integer")));
    }
    let value: u32 = raw
        .parse()
        .map_err(|_| field_error(format!("{raw:?} is out of range 0..={COUNT_MAX}")))?;
    if value > COUNT_MAX {
        return Err(field_error(format!("{value} is out of range 0..={COUNT_MAX}")));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyField,
    CountOutOfRange { value: u32 },
    UnknownClassLabel { value: String },
    MissingClassLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based data row.
    pub row: usize,
    pub column: Column,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}, column {}: ", self.row, self.column)?;
        match &self.kind {
            ViolationKind::EmptyField => write!(f, "empty field"),
            ViolationKind::CountOutOfRange { value } => {
                write!(f, "count {value} outside 0..={COUNT_MAX}")
            }
            ViolationKind::UnknownClassLabel { value } => write!(f, "unknown class label {value:?}"),
            ViolationKind::MissingClassLabel => write!(f, "missing class label"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violation in the table. An empty list means the table is valid.
pub fn validate(table: &RecordTable) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, record) in table.records.iter().enumerate() {
        let row = i + 1;
        for column in Column::ALL {
            let kind = if let Some(n) = record.count(column) {
                (n > COUNT_MAX).then_some(ViolationKind::CountOutOfRange { value: n })
            } else {
                match record.categorical(column) {
                    None => Some(ViolationKind::MissingClassLabel),
                    Some(v) if v.trim().is_empty() => Some(ViolationKind::EmptyField),
                    Some(v) if column == Column::Class && !CLASS_LABELS.contains(&v) => {
                        Some(ViolationKind::UnknownClassLabel { value: v.to_string() })
                    }
                    Some(_) => None,
                }
            };
            if let Some(kind) = kind {
                violations.push(Violation { row, column, kind });
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub min: u32,
    pub max: u32,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub row_count: usize,
    /// Column header → value → number of rows.
    pub categorical: BTreeMap<String, BTreeMap<String, usize>>,
    /// Column header → min/max/mean over the four count columns.
    pub numeric: BTreeMap<String, NumericStats>,
}

pub fn summarize(table: &RecordTable) -> DatasetSummary {
    let mut categorical = BTreeMap::new();
    let mut numeric = BTreeMap::new();
    for column in Column::ALL {
        if column.is_count() {
            let values: Vec<u32> = table.records.iter().filter_map(|r| r.count(column)).collect();
            let stats = NumericStats {
                min: values.iter().copied().min().unwrap_or(0),
                max: values.iter().copied().max().unwrap_or(0),
                mean: if values.is_empty() {
                    0.0
                } else {
                    values.iter().map(|&v| f64::from(v)).sum::<f64>() / values.len() as f64
                },
            };
            numeric.insert(column.header_name().to_string(), stats);
        } else {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for record in &table.records {
                let value = record.categorical(column).unwrap_or("");
                *counts.entry(value.to_string()).or_default() += 1;
            }
            categorical.insert(column.header_name().to_string(), counts);
        }
    }
    DatasetSummary {
        row_count: table.len(),
        categorical,
        numeric,
    }
}

impl DatasetSummary {
    /// Value counts for one column, largest first, ties broken by value.
    pub fn ranked_counts(&self, column: Column) -> Vec<(&str, usize)> {
        let mut ranked: Vec<(&str, usize)> = self
            .categorical
            .get(column.header_name())
            .map(|m| m.iter().map(|(k, &v)| (k.as_str(), v)).collect())
            .unwrap_or_default();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked
    }

    /// Plain-text rendering, one line per column in file order, e.g.
    /// `gender: M=305 F=175`.
    pub fn render_text(&self) -> String {
        let mut out = format!("rows: {}\n", self.row_count);
        for column in Column::ALL {
            let name = column.header_name();
            if let Some(stats) = self.numeric.get(name) {
                out.push_str(&format!(
                    "{name}: min={} max={} mean={:.4}\n",
                    stats.min, stats.max, stats.mean
                ));
            } else {
                let cells: Vec<String> = self
                    .ranked_counts(column)
                    .into_iter()
                    .map(|(v, n)| format!("{v}={n}"))
                    .collect();
                out.push_str(&format!("{name}: {}\n", cells.join(" ")));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW: &str = "M,KW,KuwaIT,lowerlevel,G-04,A,IT,F,Father,15,16,2,20,Yes,Good,Under-7,M";

    fn one_row(row: &str) -> String {
        format!("{}\n{row}\n", canonical_header())
    }

    #[test]
    fn single_row_parses() {
        let table = parse_dataset(&one_row(ROW), "t").unwrap();
        assert_eq!(table.len(), 1);
        let r = &table.records[0];
        assert_eq!(r.raised_hands, 15);
        assert_eq!(r.discussion, 20);
        assert_eq!(r.class_label.as_deref(), Some("M"));
        assert!(validate(&table).is_valid());
    }

    #[test]
    fn non_integer_count_names_row_and_column() {
        let bad = ROW.replacen(",15,", ",abc,", 1);
        let err = parse_dataset(&one_row(&bad), "t").unwrap_err();
        match err {
            Error::Field { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "raisedhands");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn floats_and_out_of_range_counts_rejected() {
        for replacement in [",15.0,", ",101,", ",-3,", ",,"] {
            let bad = ROW.replacen(",15,", replacement, 1);
            assert!(
                matches!(parse_dataset(&one_row(&bad), "t"), Err(Error::Field { .. })),
                "{replacement}"
            );
        }
    }

    #[test]
    fn header_must_match_exactly() {
        let lower = canonical_header().replace("NationalITy", "Nationality");
        let err = parse_dataset(&format!("{lower}\n{ROW}\n"), "t").unwrap_err();
        assert!(matches!(err, Error::Header(_)), "{err}");

        let short = canonical_header().replace(",Class", "");
        assert!(matches!(
            parse_dataset(&format!("{short}\n{ROW}\n"), "t"),
            Err(Error::Header(_))
        ));

        let swapped = canonical_header().replace("gender,NationalITy", "NationalITy,gender");
        assert!(matches!(
            parse_dataset(&format!("{swapped}\n{ROW}\n"), "t"),
            Err(Error::Header(_))
        ));
    }

    #[test]
    fn wrong_field_count_reports_row() {
        let text = format!("{}\n{ROW}\n{}\n", canonical_header(), "M,KW,KuwaIT");
        match parse_dataset(&text, "t").unwrap_err() {
            Error::FieldCount { row, found, .. } => assert_eq!((row, found), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty_table() {
        let text = format!("{}\n", canonical_header());
        assert!(matches!(parse_dataset(&text, "t"), Err(Error::EmptyTable)));
        assert!(matches!(parse_dataset("", "t"), Err(Error::Header(_))));
    }

    #[test]
    fn fields_are_trimmed() {
        let padded = ROW.replace(',', " , ");
        let table = parse_dataset(&one_row(&padded), "t").unwrap();
        assert_eq!(table.records[0].gender, "M");
        assert_eq!(table.records[0].class_label.as_deref(), Some("M"));
    }

    #[test]
    fn unlabeled_input_accepts_sixteen_columns() {
        let header = canonical_header().replace(",Class", "");
        let row = ROW.trim_end_matches(",M");
        let table = parse_unlabeled(&format!("{header}\n{row}\n"), "t").unwrap();
        assert_eq!(table.records[0].class_label, None);
        // the strict parser refuses the same text
        assert!(parse_dataset(&format!("{header}\n{row}\n"), "t").is_err());
        // and the lenient one still takes labeled input
        assert!(parse_unlabeled(&one_row(ROW), "t").unwrap().records[0]
            .class_label
            .is_some());
    }

    #[test]
    fn violations_are_listed() {
        let mut table = parse_dataset(&one_row(ROW), "t").unwrap();
        table.records[0].class_label = Some("X".into());
        let report = validate(&table);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].column, Column::Class);

        let mut table = parse_dataset(&one_row(ROW), "t").unwrap();
        table.records[0].raised_hands = 101;
        let report = validate(&table);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::CountOutOfRange { value: 101 });

        let mut table = parse_dataset(&one_row(ROW), "t").unwrap();
        table.records[0].topic.clear();
        table.records[0].class_label = None;
        assert_eq!(validate(&table).violations.len(), 2);
    }

    #[test]
    fn summary_counts_and_stats() {
        let second = "F,Jordan,Jordan,MiddleSchool,G-07,B,Math,S,Mum,35,40,10,0,No,Bad,Above-7,L";
        let text = format!("{}\n{ROW}\n{second}\n{ROW}\n", canonical_header());
        let summary = summarize(&parse_dataset(&text, "t").unwrap());
        assert_eq!(summary.row_count, 3);
        assert_eq!(summary.ranked_counts(Column::Gender), vec![("M", 2), ("F", 1)]);
        let hands = summary.numeric["raisedhands"];
        assert_eq!((hands.min, hands.max), (15, 35));
        assert!((hands.mean - 65.0 / 3.0).abs() < 1e-12);
        assert!(summary.render_text().contains("gender: M=2 F=1"));
    }
}
