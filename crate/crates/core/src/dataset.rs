//! Tabular datasets with named feature columns and a categorical target.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Numeric => f.write_str("numeric"),
            ColumnKind::Categorical => f.write_str("categorical"),
        }
    }
}

/// A single cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Cat(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

/// Sorted, duplicate-free set of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleIndexSet(Vec<usize>);

impl SampleIndexSet {
    /// Builds a set from indices that are already strictly increasing.
    pub fn from_sorted(indices: Vec<usize>, bound: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= bound {
                return Err(Error::OutOfRange(format!("index {last} >= {bound}")));
            }
        }
        Ok(SampleIndexSet(indices))
    }

    pub fn full(d: usize) -> Self {
        SampleIndexSet((0..d).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.binary_search(&idx).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_subset(&self, other: &SampleIndexSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn intersection_len(&self, other: &SampleIndexSet) -> usize {
        let (mut a, mut b, mut n) = (0, 0, 0);
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        n
    }
}

/// Immutable tabular dataset.
///
/// Rows hold one value per feature; the target column is kept apart as
/// string labels plus a dense class index per row (indices follow
/// `class_labels`, which is in first-appearance order).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    column_kinds: Vec<ColumnKind>,
    rows: Vec<Vec<Value>>,
    targets: Vec<String>,
    class_labels: Vec<String>,
    class_of: Vec<usize>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        column_kinds: Vec<ColumnKind>,
        rows: Vec<Vec<Value>>,
        targets: Vec<String>,
    ) -> Result<Self> {
        let m = feature_names.len();
        if m == 0 {
            return Err(Error::Empty("dataset has no feature columns".into()));
        }
        if rows.is_empty() {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if column_kinds.len() != m {
            return Err(Error::Dimension(format!(
                "{} column kinds for {m} features",
                column_kinds.len()
            )));
        }
        if targets.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} targets for {} rows",
                targets.len(),
                rows.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Row {
                    row: r,
                    msg: format!("expected {m} values, found {}", row.len()),
                });
            }
            for (j, v) in row.iter().enumerate() {
                let ok = matches!(
                    (column_kinds[j], v),
                    (ColumnKind::Numeric, Value::Num(x)) if x.is_finite()
                ) || matches!((column_kinds[j], v), (ColumnKind::Categorical, Value::Cat(_)));
                if !ok {
                    return Err(Error::Row {
                        row: r,
                        msg: format!("value '{v}' incompatible with {} column '{}'", column_kinds[j], feature_names[j]),
                    });
                }
            }
        }
        let mut class_labels: Vec<String> = Vec::new();
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(targets.len());
        for t in &targets {
            let idx = match lookup.get(t.as_str()) {
                Some(&i) => i,
                None => {
                    class_labels.push(t.clone());
                    lookup.insert(t.as_str(), class_labels.len() - 1);
                    class_labels.len() - 1
                }
            };
            class_of.push(idx);
        }
        Ok(Dataset {
            feature_names,
            column_kinds,
            rows,
            targets,
            class_labels,
            class_of,
        })
    }

    /// All-numeric convenience constructor.
    pub fn from_numeric(feature_names: &[&str], rows: Vec<Vec<f64>>, targets: &[&str]) -> Result<Self> {
        let m = feature_names.len();
        Dataset::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            vec![ColumnKind::Numeric; m],
            rows.into_iter()
                .map(|r| r.into_iter().map(Value::Num).collect())
                .collect(),
            targets.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row(&self, s: usize) -> &[Value] {
        &self.rows[s]
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    /// Dense class index of every row.
    pub fn class_indices(&self) -> &[usize] {
        &self.class_of
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.class_labels
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownClass {
                label: label.to_string(),
                valid: self.class_labels.join(", "),
            })
    }

    /// Rows whose target equals `label`.
    pub fn class_subset(&self, label: &str) -> Result<SampleIndexSet> {
        let c = self.class_index(label)?;
        Ok(SampleIndexSet(
            (0..self.n_samples()).filter(|&s| self.class_of[s] == c).collect(),
        ))
    }

    /// Rows whose target differs from `label`.
    pub fn complement_subset(&self, label: &str) -> Result<SampleIndexSet> {
        let c = self.class_index(label)?;
        Ok(SampleIndexSet(
            (0..self.n_samples()).filter(|&s| self.class_of[s] != c).collect(),
        ))
    }

    /// Per-class row counts in `class_labels` order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.class_of {
            counts[c] += 1;
        }
        counts
    }

    /// Most frequent class; ties go to the earliest label.
    pub fn majority_class(&self) -> &str {
        let counts = self.class_counts();
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        &self.class_labels[best]
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.feature_names.clone(),
            self.column_kinds.clone(),
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
            indices.iter().map(|&i| self.targets[i].clone()).collect(),
        )
    }

    /// New dataset restricted to the given feature columns.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        Dataset::new(
            features.iter().map(|&j| self.feature_names[j].clone()).collect(),
            features.iter().map(|&j| self.column_kinds[j]).collect(),
            self.rows
                .iter()
                .map(|r| features.iter().map(|&j| r[j].clone()).collect())
                .collect(),
            self.targets.clone(),
        )
    }

    /// Writes the dataset as CSV with the target as the last column.
    pub fn write_csv<W: Write>(&self, writer: W, target_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(|s| s.as_str()).collect();
        header.push(target_name);
        w.write_record(&header)?;
        for (row, t) in self.rows.iter().zip(&self.targets) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(t.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for CSV loading.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Per-column kind overrides keyed by column name.
    pub kinds: HashMap<String, ColumnKind>,
    /// Fail on rows with empty cells instead of dropping them.
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub dropped_rows: usize,
}

fn parse_number(cell: &str) -> Option<f64> {
    // Rust's float grammar also admits "inf"/"nan"; only finite decimals count.
    cell.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Loads a CSV file with a mandatory header row.
pub fn load_csv(path: impl AsRef<Path>, target: &str, opts: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    let file = std::fs::File::open(path)?;
    read_csv(file, target, opts)
}

/// Reads CSV from any reader. Column kinds are inferred: a column is
/// categorical as soon as one cell fails to parse as a finite number.
pub fn read_csv<R: Read>(reader: R, target: &str, opts: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty("CSV has no header".into()));
    }
    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::TargetNotFound(target.to_string()))?;

    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut report = LoadReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        if row.iter().any(|c| c.is_empty()) {
            if opts.strict {
                return Err(Error::Row {
                    row: i,
                    msg: "missing value".into(),
                });
            }
            report.dropped_rows += 1;
            continue;
        }
        cells.push(row);
    }
    if report.dropped_rows > 0 {
        log::warn!("dropped {} row(s) with missing values", report.dropped_rows);
    }
    if cells.is_empty() {
        return Err(Error::Empty("CSV has no complete data rows".into()));
    }

    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != target_col).collect();
    let mut kinds = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let kind = match opts.kinds.get(&headers[c]) {
            Some(&k) => k,
            None if cells.iter().all(|r| parse_number(&r[c]).is_some()) => ColumnKind::Numeric,
            None => ColumnKind::Categorical,
        };
        kinds.push(kind);
    }
    for name in opts.kinds.keys() {
        if !headers.contains(name) {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }

    let mut rows = Vec::with_capacity(cells.len());
    let mut targets = Vec::with_capacity(cells.len());
    for (r, rec) in cells.into_iter().enumerate() {
        let mut row = Vec::with_capacity(feature_cols.len());
        for (k, &c) in feature_cols.iter().enumerate() {
            let v = match kinds[k] {
                ColumnKind::Numeric => Value::Num(parse_number(&rec[c]).ok_or_else(|| Error::Row {
                    row: r,
                    msg: format!("'{}' in numeric column '{}' is not a number", rec[c], headers[c]),
                })?),
                ColumnKind::Categorical => Value::Cat(rec[c].clone()),
            };
            row.push(v);
        }
        targets.push(rec[target_col].clone());
        rows.push(row);
    }
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    Ok((Dataset::new(names, kinds, rows, targets)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, target: &str) -> Result<(Dataset, LoadReport)> {
        read_csv(text.as_bytes(), target, &LoadOptions::default())
    }

    #[test]
    fn loads_dimensions() {
        let (ds, rep) = load("a,b,y\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n", "y").unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.n_samples(), 4);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(rep.dropped_rows, 0);
        assert_eq!(ds.column_kinds(), &[ColumnKind::Numeric, ColumnKind::Numeric]);
    }

    #[test]
    fn infers_categorical_column() {
        let (ds, _) = load("x,color,y\n1,3,a\n2,red,b\n", "y").unwrap();
        assert_eq!(ds.column_kinds()[0], ColumnKind::Numeric);
        assert_eq!(ds.column_kinds()[1], ColumnKind::Categorical);
        assert_eq!(ds.row(0)[1], Value::Cat("3".into()));
    }

    #[test]
    fn scientific_notation_is_numeric() {
        let (ds, _) = load("x,y\n1e-3,a\n-2.5E2,b\n", "y").unwrap();
        assert_eq!(ds.row(0)[0], Value::Num(0.001));
        assert_eq!(ds.row(1)[0], Value::Num(-250.0));
    }

    #[test]
    fn missing_target_column() {
        let err = load("a,b\n1,2\n", "y").unwrap_err();
        assert_eq!(err.to_string(), "target column not found: y");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(load("", "y").is_err());
        assert!(matches!(load("a,y\n", "y"), Err(Error::Empty(_))));
    }

    #[test]
    fn drops_incomplete_rows_unless_strict() {
        let text = "a,y\n1,0\n,1\n2, \n3,1\n";
        let (ds, rep) = load(text, "y").unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(rep.dropped_rows, 2);
        let strict = LoadOptions {
            strict: true,
            ..Default::default()
        };
        assert!(read_csv(text.as_bytes(), "y", &strict).is_err());
    }

    #[test]
    fn kind_override() {
        let mut opts = LoadOptions::default();
        opts.kinds.insert("code".into(), ColumnKind::Categorical);
        let (ds, _) = read_csv("code,y\n1,a\n2,b\n".as_bytes(), "y", &opts).unwrap();
        assert_eq!(ds.column_kinds()[0], ColumnKind::Categorical);
    }

    #[test]
    fn quoted_fields() {
        let (ds, _) = load("\"a, b\",y\n\"1\",\"x y\"\n", "y").unwrap();
        assert_eq!(ds.feature_names()[0], "a, b");
        assert_eq!(ds.targets()[0], "x y");
    }

    #[test]
    fn class_labels_first_appearance() {
        let ds = Dataset::from_numeric(&["f"], vec![vec![0.0]; 4], &["b", "a", "b", "c"]).unwrap();
        assert_eq!(ds.class_labels(), &["b", "a", "c"]);
        assert_eq!(ds.class_indices(), &[0, 1, 0, 2]);
    }

    #[test]
    fn class_subsets() {
        let ds = Dataset::from_numeric(&["f"], vec![vec![0.0]; 4], &["a", "b", "a", "b"]).unwrap();
        assert_eq!(ds.class_subset("a").unwrap().as_slice(), &[0, 2]);
        assert_eq!(ds.complement_subset("a").unwrap().as_slice(), &[1, 3]);
        assert!(matches!(ds.class_subset("z"), Err(Error::UnknownClass { .. })));

        let same = Dataset::from_numeric(&["f"], vec![vec![0.0]; 3], &["t", "t", "t"]).unwrap();
        assert_eq!(same.class_subset("t").unwrap(), SampleIndexSet::full(3));
        assert!(same.complement_subset("t").unwrap().is_empty());
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::from_numeric(&["a", "b"], vec![vec![1.0], vec![1.0, 2.0]], &["x", "y"]);
        assert!(err.is_err());
    }

    #[test]
    fn index_set_validation() {
        assert!(SampleIndexSet::from_sorted(vec![0, 2, 2], 5).is_err());
        assert!(SampleIndexSet::from_sorted(vec![0, 7], 5).is_err());
        let a = SampleIndexSet::from_sorted(vec![0, 2, 4], 5).unwrap();
        let b = SampleIndexSet::from_sorted(vec![1, 2, 4], 5).unwrap();
        assert_eq!(a.intersection_len(&b), 2);
    }

    #[test]
    fn csv_round_trip() {
        let (ds, _) = load("a,c,y\n0.1,red,0\n2.5e-7,blue,1\n", "y").unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, "y").unwrap();
        let (back, _) = read_csv(buf.as_slice(), "y", &LoadOptions::default()).unwrap();
        assert_eq!(ds, back);
    }
}
