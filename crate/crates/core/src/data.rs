//! Datasets, CSV ingestion, min-max normalization and synthetic data.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinal class column: `values[i]` indexes into `class_names`, whose order is the ordinal scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelColumn {
    pub values: Vec<usize>,
    pub class_names: Vec<String>,
}

/// A parsed table of numeric features with an optional ordinal label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<LabelColumn>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Convert into a labeled dataset. Fails if there is no label column or the
    /// features are not normalized.
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::InvalidDataset("table has no label column".into()))?;
        LabeledDataset::new(
            self.rows,
            labels.values,
            labels.class_names,
            self.feature_names,
        )
    }

    pub fn project_features<S: AsRef<str>>(&self, subset: &[S]) -> Result<Table> {
        let cols = resolve_features(&self.feature_names, subset)?;
        Ok(Table {
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            rows: project_rows(&self.rows, &cols),
            labels: self.labels.clone(),
        })
    }
}

fn check_instances(instances: &[Vec<f64>], feature_names: &[String]) -> Result<()> {
    if feature_names.is_empty() {
        return Err(Error::NoFeatures);
    }
    for (i, row) in instances.iter().enumerate() {
        if row.len() != feature_names.len() {
            return Err(Error::dimension(
                format!("instance {i}"),
                feature_names.len(),
                row.len(),
            ));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidDataset(format!(
                "instance {i} has value {v} outside [0, 1]; normalize first"
            )));
        }
    }
    Ok(())
}

/// Instances with ordinal class labels. Feature values lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    instances: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        instances: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        check_instances(&instances, &feature_names)?;
        if let Some((i, y)) = labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y >= class_names.len())
        {
            return Err(Error::InvalidDataset(format!(
                "label {y} of instance {i} is not below the class count {}",
                class_names.len()
            )));
        }
        Ok(Self {
            instances,
            labels,
            class_names,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }

    pub fn instance(&self, i: usize) -> &[f64] {
        &self.instances[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_name(&self, y: usize) -> &str {
        &self.class_names[y]
    }

    /// Ordinal of a class by name.
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn project_features<S: AsRef<str>>(&self, subset: &[S]) -> Result<LabeledDataset> {
        let cols = resolve_features(&self.feature_names, subset)?;
        Ok(LabeledDataset {
            instances: project_rows(&self.instances, &cols),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
        })
    }

    pub fn to_table(&self) -> Table {
        Table {
            feature_names: self.feature_names.clone(),
            rows: self.instances.clone(),
            labels: Some(LabelColumn {
                values: self.labels.clone(),
                class_names: self.class_names.clone(),
            }),
        }
    }
}

/// Instances plus pairwise preferences `(i, j)` meaning instance `i` is preferred to `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceDataset {
    instances: Vec<Vec<f64>>,
    preferences: Vec<(usize, usize)>,
    feature_names: Vec<String>,
}

impl PreferenceDataset {
    pub fn new(
        instances: Vec<Vec<f64>>,
        preferences: Vec<(usize, usize)>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        check_instances(&instances, &feature_names)?;
        let mut seen = HashSet::with_capacity(preferences.len());
        for &(i, j) in &preferences {
            if i >= instances.len() || j >= instances.len() {
                return Err(Error::InvalidDataset(format!(
                    "preference ({i}, {j}) references an instance out of range (n = {})",
                    instances.len()
                )));
            }
            if i == j {
                return Err(Error::InvalidDataset(format!(
                    "preference ({i}, {i}) is reflexive"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidDataset(format!(
                    "preference ({i}, {j}) is duplicated"
                )));
            }
        }
        Ok(Self {
            instances,
            preferences,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.preferences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preferences.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }

    pub fn instance(&self, i: usize) -> &[f64] {
        &self.instances[i]
    }

    pub fn preferences(&self) -> &[(usize, usize)] {
        &self.preferences
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn project_features<S: AsRef<str>>(&self, subset: &[S]) -> Result<PreferenceDataset> {
        let cols = resolve_features(&self.feature_names, subset)?;
        Ok(PreferenceDataset {
            instances: project_rows(&self.instances, &cols),
            preferences: self.preferences.clone(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
        })
    }
}

fn resolve_features<S: AsRef<str>>(names: &[String], subset: &[S]) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter("feature subset is empty".into()));
    }
    subset
        .iter()
        .map(|s| {
            let s = s.as_ref();
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::UnknownFeature(s.to_string()))
        })
        .collect()
}

fn project_rows(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| cols.iter().map(|&c| r[c]).collect())
        .collect()
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a comma-separated file with a mandatory header row.
///
/// With `label_column`, that column becomes the ordinal class column. Its scale is
/// `class_order` when given; otherwise labels must all be integers and are ordered
/// numerically. Rows are numbered from 0, excluding the header.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    class_order: Option<&[String]>,
) -> Result<Table> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();

    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Csv {
                    path: path.to_path_buf(),
                    message: format!("label column '{name}' not found in header"),
                })?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != label_idx)
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let mut values = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = &record[c];
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    path: path.to_path_buf(),
                    row,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })?;
            values.push(v);
        }
        rows.push(values);
        if let Some(li) = label_idx {
            raw_labels.push(record[li].to_string());
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let labels = match label_idx {
        Some(_) => Some(encode_labels(&raw_labels, class_order)?),
        None => None,
    };
    Ok(Table {
        feature_names,
        rows,
        labels,
    })
}

fn encode_labels(raw: &[String], class_order: Option<&[String]>) -> Result<LabelColumn> {
    let class_names: Vec<String> = match class_order {
        Some(order) => {
            let unique: HashSet<&String> = order.iter().collect();
            if unique.len() != order.len() || order.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "class order must list distinct names, got {order:?}"
                )));
            }
            order.to_vec()
        }
        None => {
            let mut numeric: Vec<(i64, &String)> = Vec::with_capacity(raw.len());
            for label in raw {
                let v = label.parse::<i64>().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "label '{label}' is not an integer; supply an explicit class order"
                    ))
                })?;
                numeric.push((v, label));
            }
            numeric.sort();
            numeric.dedup_by_key(|(v, _)| *v);
            numeric.into_iter().map(|(_, s)| s.clone()).collect()
        }
    };
    let values = raw
        .iter()
        .enumerate()
        .map(|(row, label)| {
            class_names
                .iter()
                .position(|c| c == label)
                .or_else(|| {
                    // numeric labels may be spelled differently ("01" vs "1")
                    let v = label.parse::<i64>().ok()?;
                    class_names
                        .iter()
                        .position(|c| c.parse::<i64>().ok() == Some(v))
                })
                .ok_or_else(|| Error::UnknownLabel {
                    label: label.clone(),
                    row,
                    known: class_names.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelColumn {
        values,
        class_names,
    })
}

/// Read preferences from a CSV with columns `better,worse` holding row indices.
pub fn load_preferences(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv {
                path: path.to_path_buf(),
                message: format!("missing column '{name}'"),
            })
    };
    let (better, worse) = (col("better")?, col("worse")?);
    let mut prefs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse = |c: usize| {
            record[c].parse::<usize>().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: headers[c].to_string(),
                value: record[c].to_string(),
            })
        };
        prefs.push((parse(better)?, parse(worse)?));
    }
    Ok(prefs)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write a table as CSV; the label column (if any) is appended under `label_header`.
pub fn write_table_csv(table: &Table, label_header: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_table(table, label_header, create(path)?, path)
}

/// Write `table` as CSV to any writer; `path` only labels errors.
pub fn write_table<W: std::io::Write>(
    table: &Table,
    label_header: &str,
    out: W,
    path: &Path,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = table.feature_names.clone();
    if table.labels.is_some() {
        header.push(label_header.to_string());
    }
    writer
        .write_record(&header)
        .map_err(|e| csv_error(path, e))?;
    for (i, row) in table.rows.iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &table.labels {
            record.push(labels.class_names[labels.values[i]].clone());
        }
        writer
            .write_record(&record)
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_preferences_csv(preferences: &[(usize, usize)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut text = String::from("better,worse\n");
    for (i, j) in preferences {
        text.push_str(&format!("{i},{j}\n"));
    }
    out.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Min and max of one retained feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Min-max scaling learned on a table, reusable on held-out data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub features: Vec<FeatureScale>,
    pub dropped_features: Vec<String>,
}

impl NormalizationParams {
    /// Scale another table with these parameters. Columns are matched by name;
    /// values outside the fitted range are clamped into `[0, 1]`.
    pub fn apply(&self, table: &Table) -> Result<Table> {
        let names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        let projected = table.project_features(&names)?;
        let rows = projected
            .rows
            .iter()
            .map(|r| {
                self.scale_row(r)
                    .into_iter()
                    .map(|v| v.clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        Ok(Table { rows, ..projected })
    }

    fn scale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.features)
            .map(|(v, f)| (v - f.min) / (f.max - f.min))
            .collect()
    }

    /// Map a normalized row back to the original units of the retained features.
    pub fn denormalize(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.features.len() {
            return Err(Error::dimension("row", self.features.len(), row.len()));
        }
        Ok(row
            .iter()
            .zip(&self.features)
            .map(|(v, f)| f.min + v * (f.max - f.min))
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("normalization params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("normalization params: {e}")))
    }
}

/// Min-max normalize every feature to `[0, 1]`. Constant features are dropped.
pub fn normalize(table: &Table) -> Result<(Table, NormalizationParams)> {
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut features = Vec::new();
    let mut dropped_features = Vec::new();
    let mut kept = Vec::new();
    for (c, name) in table.feature_names.iter().enumerate() {
        let (min, max) = table
            .rows
            .iter()
            .map(|r| r[c])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if min < max {
            features.push(FeatureScale {
                name: name.clone(),
                min,
                max,
            });
            kept.push(c);
        } else {
            log::warn!("dropping constant feature '{name}' (value {min})");
            dropped_features.push(name.clone());
        }
    }
    if features.is_empty() {
        return Err(Error::NoFeatures);
    }
    let params = NormalizationParams {
        features,
        dropped_features,
    };
    let rows = project_rows(&table.rows, &kept)
        .iter()
        .map(|r| params.scale_row(r))
        .collect();
    let normalized = Table {
        feature_names: params.features.iter().map(|f| f.name.clone()).collect(),
        rows,
        labels: table.labels.clone(),
    };
    Ok((normalized, params))
}

/// Split `0..n` into (train, test) index lists, both ascending. The test share
/// is `round(n * test_fraction)`.
pub fn holdout_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Parameters of the synthetic generator: instances uniform on `[0,1]^d`, a latent
/// linear score `w.x + noise * N(0,1)`, classes as score quantile bins, and
/// preferences between random pairs ordered by latent score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    /// Defaults to all ones.
    pub weights: Option<Vec<f64>>,
    pub noise: f64,
    /// Number of distinct pairs to compare; defaults to `min(3n, n(n-1)/2)`.
    pub num_preferences: Option<usize>,
}

impl SynthSpec {
    pub fn new(n: usize, d: usize, num_classes: usize) -> Self {
        Self {
            n,
            d,
            num_classes,
            weights: None,
            noise: 0.0,
            num_preferences: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if self.d < 1 {
            return bad("d must be at least 1".into());
        }
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.num_classes > self.n {
            return bad(format!(
                "{} classes exceed n = {}",
                self.num_classes, self.n
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!(
                "noise must be a finite non-negative number, got {}",
                self.noise
            ));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.d {
                return Err(Error::dimension("weights", self.d, w.len()));
            }
        }
        let max_pairs = self.n * (self.n - 1) / 2;
        if let Some(m) = self.num_preferences {
            if m > max_pairs {
                return bad(format!(
                    "{m} preferences requested but only {max_pairs} pairs exist"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub labeled: LabeledDataset,
    pub preferences: PreferenceDataset,
    /// Noisy latent score per instance; classes and preferences are derived from it.
    pub scores: Vec<f64>,
}

/// Deterministic in `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = spec.weights.clone().unwrap_or_else(|| vec![1.0; spec.d]);

    let instances: Vec<Vec<f64>> = (0..spec.n)
        .map(|_| (0..spec.d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let scores: Vec<f64> = instances
        .iter()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            x.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() + spec.noise * z
        })
        .collect();

    let mut by_score: Vec<usize> = (0..spec.n).collect();
    by_score.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    let mut labels = vec![0; spec.n];
    for (rank, &i) in by_score.iter().enumerate() {
        labels[i] = rank * spec.num_classes / spec.n;
    }

    let num_pairs = spec.n * (spec.n - 1) / 2;
    let m = spec.num_preferences.unwrap_or((3 * spec.n).min(num_pairs));
    let mut pair_ids = index::sample(&mut rng, num_pairs, m).into_vec();
    pair_ids.sort_unstable();
    let preferences = pair_ids
        .into_iter()
        .map(|k| {
            let (i, j) = unrank_pair(k, spec.n);
            if scores[j] > scores[i] {
                (j, i)
            } else {
                (i, j)
            }
        })
        .collect();

    let feature_names: Vec<String> = (1..=spec.d).map(|i| format!("x{i}")).collect();
    let class_names = (0..spec.num_classes).map(|c| c.to_string()).collect();
    Ok(SynthData {
        labeled: LabeledDataset::new(
            instances.clone(),
            labels,
            class_names,
            feature_names.clone(),
        )?,
        preferences: PreferenceDataset::new(instances, preferences, feature_names)?,
        scores,
    })
}

/// The `k`-th pair `(i, j)`, `i < j`, in row-major order over the upper triangle.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}
