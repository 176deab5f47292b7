//! CSV example source. Header row required; rows are delivered in file order
//! with no shuffling and no lookahead beyond the initial label-alphabet scan.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::{Example, StreamData};

/// Column layout of a CSV stream.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Name of the label column.
    pub label_col: String,
    /// Feature column names; `None` selects every non-label column in header
    /// order.
    pub feature_cols: Option<Vec<String>>,
    pub delimiter: u8,
    /// Explicit label alphabet in class-index order. When `None`, the label
    /// column is scanned up front: if every distinct value is a nonnegative
    /// integer and the values form exactly `{0..C-1}`, they map to
    /// themselves; otherwise classes are numbered in first-seen order.
    pub label_values: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_col: "class".into(),
            feature_cols: None,
            delimiter: b',',
            label_values: None,
        }
    }
}

/// Streaming CSV reader yielding [`Example`]s in file order.
pub struct CsvStream<S, R: Read> {
    reader: csv::Reader<R>,
    feature_idx: Vec<usize>,
    label_idx: usize,
    label_mapping: Vec<String>,
    row: usize,
    _marker: std::marker::PhantomData<S>,
}

/// Open `path` under `schema`. The label alphabet is resolved before
/// streaming starts (one extra pass when the schema does not pin it).
pub fn open_csv_stream<S: Scalar>(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
) -> Result<CsvStream<S, File>> {
    let path = path.as_ref();
    let mapping = match &schema.label_values {
        Some(values) => {
            if values.is_empty() {
                return Err(Error::Config("label value list is empty".into()));
            }
            values.clone()
        }
        None => scan_label_alphabet(path, schema)?,
    };
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    CsvStream::from_reader(file, schema, mapping)
}

fn scan_label_alphabet(path: &Path, schema: &CsvSchema) -> Result<Vec<String>> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .from_reader(file);
    let label_idx = resolve_label_idx(&mut reader, schema)?;
    let mut seen: Vec<String> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedRow {
            row,
            msg: e.to_string(),
        })?;
        let value = record.get(label_idx).ok_or(Error::MalformedRow {
            row,
            msg: "label column missing".into(),
        })?;
        if !seen.iter().any(|s| s == value) {
            seen.push(value.to_string());
        }
    }
    if seen.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    // Prefer the numeric identity mapping when labels are already 0..C-1.
    let numeric: Option<Vec<usize>> = seen.iter().map(|s| s.parse::<usize>().ok()).collect();
    if let Some(nums) = numeric {
        let mut sorted = nums.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().all(|(i, &v)| i == v) {
            let mut by_index = vec![String::new(); nums.len()];
            for (s, &n) in seen.iter().zip(&nums) {
                by_index[n] = s.clone();
            }
            return Ok(by_index);
        }
    }
    Ok(seen)
}

fn resolve_label_idx<R: Read>(reader: &mut csv::Reader<R>, schema: &CsvSchema) -> Result<usize> {
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header: {e}")))?;
    headers
        .iter()
        .position(|h| h == schema.label_col)
        .ok_or_else(|| Error::Config(format!("label column `{}` not in header", schema.label_col)))
}

impl<S: Scalar, R: Read> CsvStream<S, R> {
    /// Build a stream over any reader with a pre-resolved label mapping.
    pub fn from_reader(
        input: R,
        schema: &CsvSchema,
        label_mapping: Vec<String>,
    ) -> Result<CsvStream<S, R>> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter)
            .from_reader(input);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let label_idx = headers
            .iter()
            .position(|h| *h == schema.label_col)
            .ok_or_else(|| {
                Error::Config(format!("label column `{}` not in header", schema.label_col))
            })?;
        let feature_idx: Vec<usize> = match &schema.feature_cols {
            Some(cols) => cols
                .iter()
                .map(|c| {
                    headers
                        .iter()
                        .position(|h| h == c)
                        .ok_or_else(|| Error::Config(format!("feature column `{c}` not in header")))
                })
                .collect::<Result<_>>()?,
            None => (0..headers.len()).filter(|&i| i != label_idx).collect(),
        };
        if feature_idx.is_empty() {
            return Err(Error::Config("no feature columns".into()));
        }
        Ok(CsvStream {
            reader,
            feature_idx,
            label_idx,
            label_mapping,
            row: 0,
            _marker: std::marker::PhantomData,
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_idx.len()
    }

    pub fn classes(&self) -> usize {
        self.label_mapping.len()
    }

    /// Label strings in class-index order (recorded in run manifests).
    pub fn label_mapping(&self) -> &[String] {
        &self.label_mapping
    }

    /// Drain the stream into a validated [`StreamData`].
    pub fn collect_data(self) -> Result<StreamData<S>> {
        let dim = self.dim();
        let classes = self.classes();
        let examples: Vec<Example<S>> = self.collect::<Result<_>>()?;
        StreamData::new(dim, classes, examples)
    }

    fn parse_record(&self, record: &csv::StringRecord, row: usize) -> Result<Example<S>> {
        let mut features = Vec::with_capacity(self.feature_idx.len());
        for &idx in &self.feature_idx {
            let field = record.get(idx).ok_or(Error::MalformedRow {
                row,
                msg: format!("missing column {idx}"),
            })?;
            let value: f64 = field.trim().parse().map_err(|_| Error::MalformedRow {
                row,
                msg: format!("non-numeric feature `{field}` in column {idx}"),
            })?;
            features.push(S::from_f64(value));
        }
        let label_str = record.get(self.label_idx).ok_or(Error::MalformedRow {
            row,
            msg: "label column missing".into(),
        })?;
        let label = self
            .label_mapping
            .iter()
            .position(|v| v == label_str)
            .ok_or(Error::MalformedRow {
                row,
                msg: format!("unknown label value `{label_str}`"),
            })?;
        Ok(Example {
            features,
            label,
            step: row as u64,
        })
    }
}

impl<S: Scalar, R: Read> Iterator for CsvStream<S, R> {
    type Item = Result<Example<S>>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut record = csv::StringRecord::new();
        match self.reader.read_record(&mut record) {
            Ok(false) => None,
            Ok(true) => {
                let row = self.row;
                self.row += 1;
                Some(self.parse_record(&record, row))
            }
            Err(e) => {
                let row = self.row;
                self.row += 1;
                Some(Err(Error::MalformedRow {
                    row,
                    msg: e.to_string(),
                }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static COUNTER: AtomicUsize = AtomicUsize::new(0);
        let mut path = std::env::temp_dir();
        path.push(format!(
            "ramol-csv-test-{}-{}.csv",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn three_rows_yield_steps_in_order() {
        let path = write_temp("a,b,class\n1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,0\n");
        let stream = open_csv_stream::<f64>(&path, &CsvSchema::default()).unwrap();
        let data = stream.collect_data().unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.len(), 3);
        assert_eq!(data.dim, 2);
        assert_eq!(data.classes, 2);
        let steps: Vec<u64> = data.examples.iter().map(|e| e.step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
        assert_eq!(data.examples[1].label, 1);
    }

    #[test]
    fn numeric_labels_keep_identity_mapping() {
        // Label 1 appears first; the mapping must still send "1" -> class 1.
        let path = write_temp("a,class\n0.5,1\n0.5,0\n");
        let stream = open_csv_stream::<f64>(&path, &CsvSchema::default()).unwrap();
        assert_eq!(stream.label_mapping(), ["0", "1"]);
        let data = stream.collect_data().unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.examples[0].label, 1);
        assert_eq!(data.examples[1].label, 0);
    }

    #[test]
    fn text_labels_map_first_seen() {
        let path = write_temp("a,class\n0.5,UP\n0.5,DOWN\n0.5,UP\n");
        let stream = open_csv_stream::<f64>(&path, &CsvSchema::default()).unwrap();
        assert_eq!(stream.label_mapping(), ["UP", "DOWN"]);
        let data = stream.collect_data().unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.examples[0].label, 0);
        assert_eq!(data.examples[1].label, 1);
    }

    #[test]
    fn malformed_feature_names_the_row() {
        let path = write_temp("a,b,class\n1.0,2.0,0\n1.0,oops,1\n");
        let stream = open_csv_stream::<f64>(&path, &CsvSchema::default()).unwrap();
        let items: Vec<_> = stream.collect();
        std::fs::remove_file(&path).ok();
        assert!(items[0].is_ok());
        match &items[1] {
            Err(Error::MalformedRow { row, msg }) => {
                assert_eq!(*row, 1);
                assert!(msg.contains("oops"));
            }
            other => panic!("expected malformed row, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_value_is_reported() {
        let path = write_temp("a,class\n1.0,UP\n2.0,SIDEWAYS\n");
        let schema = CsvSchema {
            label_values: Some(vec!["UP".into(), "DOWN".into()]),
            ..CsvSchema::default()
        };
        let stream = open_csv_stream::<f64>(&path, &schema).unwrap();
        let items: Vec<_> = stream.collect();
        std::fs::remove_file(&path).ok();
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::MalformedRow { row: 1, .. })));
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let err = open_csv_stream::<f64>("/nonexistent/stream.csv", &CsvSchema::default());
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn explicit_feature_columns_and_delimiter() {
        let path = write_temp("x;ignore;class\n1.5;9;0\n2.5;9;1\n");
        let schema = CsvSchema {
            feature_cols: Some(vec!["x".into()]),
            delimiter: b';',
            ..CsvSchema::default()
        };
        let data = open_csv_stream::<f64>(&path, &schema)
            .unwrap()
            .collect_data()
            .unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(data.dim, 1);
        assert_eq!(data.examples[1].features[0], 2.5);
    }
}
