//! Datasets, resampling and the train/validation/test split protocol.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::anneal::stream_rng;
use crate::error::{Error, Result};
use crate::svm::TrainingSet;

/// Where a row came from, in terms of row indices of the originally loaded
/// dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Original { index: usize },
    /// `x = x_base + weight·(x_neighbor − x_base)`.
    Synthetic {
        base: usize,
        neighbor: usize,
        weight: f64,
    },
}

impl Origin {
    /// Original rows this row was derived from.
    pub fn roots(&self) -> [usize; 2] {
        match *self {
            Origin::Original { index } => [index, index],
            Origin::Synthetic { base, neighbor, .. } => [base, neighbor],
        }
    }
}

/// Feature matrix with `±1` labels (`+1` = fraud).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<i8>,
    feature_names: Vec<String>,
    origin: Vec<Origin>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<i8>, feature_names: Vec<String>) -> Result<Self> {
        let origin = (0..y.len()).map(|index| Origin::Original { index }).collect();
        Self::with_origin(x, y, feature_names, origin)
    }

    fn with_origin(
        x: Vec<Vec<f64>>,
        y: Vec<i8>,
        feature_names: Vec<String>,
        origin: Vec<Origin>,
    ) -> Result<Self> {
        if x.len() != y.len() || origin.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let d = feature_names.len();
        for (index, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Ragged {
                    index,
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("row {index} has a missing value")));
            }
        }
        if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidLabel(bad as f64));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[i8] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn origin(&self) -> &[Origin] {
        &self.origin
    }

    pub fn count(&self, label: i8) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    pub fn indices_of(&self, label: i8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.y[i] == label).collect()
    }

    /// Original row indices contributing to any row of this dataset.
    pub fn root_indices(&self) -> BTreeSet<usize> {
        self.origin.iter().flat_map(|o| o.roots()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    fn push(&mut self, x: Vec<f64>, y: i8, origin: Origin) {
        self.x.push(x);
        self.y.push(y);
        self.origin.push(origin);
    }

    pub fn to_training_set(&self) -> Result<TrainingSet> {
        TrainingSet::new(self.x.clone(), self.y.clone())
    }

    /// Applies `f` to every feature row.
    pub fn map_features<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Self {
        Self {
            x: self.x.iter().map(|r| f(r)).collect(),
            ..self.clone()
        }
    }
}

/// Per-feature standardization `(x − mean)/std` fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let v = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 1e-24 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Loads a numeric CSV with a header row. `label_column` defaults to `Class`;
/// labels `0/1` map to `−1/+1`, and `±1` are accepted as is. Every other
/// column is a feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

pub fn read_csv<R: std::io::Read>(reader: R, label_column: Option<&str>) -> Result<Dataset> {
    let label_column = label_column.unwrap_or("Class");
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim_matches('"').to_string()).collect();
    let label_idx = headers.iter().position(|h| h == label_column).ok_or_else(|| Error::Csv {
        row: 0,
        column: label_column.to_string(),
        msg: "label column not found".into(),
    })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        if rec.len() != headers.len() {
            return Err(Error::Csv {
                row,
                column: String::new(),
                msg: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        let mut features = Vec::with_capacity(feature_names.len());
        for (c, field) in rec.iter().enumerate() {
            let field = field.trim_matches('"');
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                row,
                column: headers[c].clone(),
                msg: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    row,
                    column: headers[c].clone(),
                    msg: format!("missing or non-finite value '{field}'"),
                });
            }
            if c == label_idx {
                let label = match v {
                    1.0 => 1,
                    0.0 | -1.0 => -1,
                    _ => {
                        return Err(Error::Csv {
                            row,
                            column: headers[c].clone(),
                            msg: format!("label {v} is not 0/1 or ±1"),
                        })
                    }
                };
                y.push(label);
            } else {
                features.push(v);
            }
        }
        x.push(features);
    }
    if y.len() < 2 {
        return Err(Error::Empty("dataset needs at least 2 rows"));
    }
    Dataset::new(x, y, feature_names)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// SMOTE for the rows labelled `label`: new points `x_i + u·(x_nn − x_i)` with
/// `u ~ U[0,1]` and `x_nn` one of the `k` nearest same-class neighbours, until
/// that class has `target` rows. Other rows are untouched.
pub fn smote_class(ds: &Dataset, label: i8, target: usize, k_neighbors: usize, seed: u64) -> Result<Dataset> {
    let members = ds.indices_of(label);
    if members.len() >= target {
        return Ok(ds.clone());
    }
    if members.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "SMOTE needs at least 2 samples of class {label}, found {}",
            members.len()
        )));
    }
    if k_neighbors == 0 {
        return Err(Error::InvalidParameter("k_neighbors must be >= 1".into()));
    }
    let k = k_neighbors.min(members.len() - 1);
    let neighbors: Vec<Vec<usize>> = members
        .iter()
        .map(|&i| {
            let mut others: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(&ds.x[i], &ds.x[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let mut rng = stream_rng(seed, 0x5307e);
    let mut out = ds.clone();
    for _ in members.len()..target {
        let m = rng.random_range(0..members.len());
        let i = members[m];
        let j = neighbors[m][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let x: Vec<f64> = ds.x[i].iter().zip(&ds.x[j]).map(|(a, b)| a + u * (b - a)).collect();
        let origin = Origin::Synthetic {
            base: ds.origin[i].roots()[0],
            neighbor: ds.origin[j].roots()[0],
            weight: u,
        };
        out.push(x, label, origin);
    }
    Ok(out)
}

fn minority_label(ds: &Dataset) -> i8 {
    if ds.count(1) <= ds.count(-1) {
        1
    } else {
        -1
    }
}

/// SMOTE on the smaller class up to `target_minority` rows.
pub fn smote_oversample(ds: &Dataset, target_minority: usize, k_neighbors: usize, seed: u64) -> Result<Dataset> {
    smote_class(ds, minority_label(ds), target_minority, k_neighbors, seed)
}

/// Uniform subsample without replacement of the rows labelled `label`.
pub fn undersample_class(ds: &Dataset, label: i8, target: usize, seed: u64) -> Result<Dataset> {
    let members = ds.indices_of(label);
    if target > members.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot undersample class {label} from {} to {target}",
            members.len()
        )));
    }
    if target == members.len() {
        return Ok(ds.clone());
    }
    let mut rng = stream_rng(seed, 0x0d5);
    let mut keep: Vec<usize> = rand::seq::index::sample(&mut rng, members.len(), target)
        .into_iter()
        .map(|k| members[k])
        .collect();
    keep.extend((0..ds.len()).filter(|&i| ds.y[i] != label));
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}

/// Random undersampling of the larger class down to `target_majority` rows.
pub fn random_undersample(ds: &Dataset, target_majority: usize, seed: u64) -> Result<Dataset> {
    let majority = -minority_label(ds);
    undersample_class(ds, majority, target_majority, seed)
}

/// Brings both classes to exactly `per_class` rows: SMOTE where a class is
/// short, random undersampling where it is in excess.
pub fn balance(ds: &Dataset, per_class: usize, k_neighbors: usize, seed: u64) -> Result<Dataset> {
    let mut out = ds.clone();
    for (stream, label) in [(0u64, 1i8), (1, -1)] {
        let c = out.count(label);
        let s = seed.wrapping_add(stream);
        out = if c < per_class {
            smote_class(&out, label, per_class, k_neighbors, s)?
        } else {
            undersample_class(&out, label, per_class, s)?
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub n_train: usize,
    /// Fraction of the balanced set used for validation; `None` uses every
    /// balanced sample not drawn for training.
    #[serde(default)]
    pub validation_fraction: Option<f64>,
    pub repeats: usize,
    #[serde(default = "default_per_class")]
    pub balanced_per_class: usize,
    #[serde(default = "default_k")]
    pub smote_k: usize,
}

fn default_per_class() -> usize {
    250
}

fn default_k() -> usize {
    5
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            seed: 0,
            n_train: 6,
            validation_fraction: None,
            repeats: 10,
            balanced_per_class: default_per_class(),
            smote_k: default_k(),
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 2 {
            return Err(Error::InvalidParameter("n_train must be >= 2".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be >= 1".into()));
        }
        if self.n_train >= 2 * self.balanced_per_class {
            return Err(Error::InvalidParameter(
                "n_train must leave samples for validation".into(),
            ));
        }
        if let Some(f) = self.validation_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!("validation_fraction {f} not in (0, 1]")));
            }
        }
        Ok(())
    }

    /// Seed for repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        let mut rng = stream_rng(self.seed, 0x5eed_0000 + r as u64);
        rng.random()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRepeat {
    pub repeat: usize,
    pub seed: u64,
    pub train: Dataset,
    pub validation: Dataset,
    /// Untouched half with the original class ratio.
    pub test: Dataset,
}

impl SplitRepeat {
    /// Whether any original row feeding train or validation also appears in test.
    pub fn leaks(&self) -> bool {
        let test = self.test.root_indices();
        let fit: BTreeSet<usize> = self
            .train
            .root_indices()
            .union(&self.validation.root_indices())
            .copied()
            .collect();
        !test.is_disjoint(&fit)
    }
}

/// Per repeat: a stratified half is held out as the test set; the other half
/// is balanced to `2·balanced_per_class` rows and split into `n_train` training
/// rows (positives get the extra row when odd) and validation.
pub fn repeated_split(ds: &Dataset, plan: &SplitPlan) -> Result<Vec<SplitRepeat>> {
    plan.validate()?;
    (0..plan.repeats).map(|r| split_once(ds, plan, r)).collect()
}

fn split_once(ds: &Dataset, plan: &SplitPlan, repeat: usize) -> Result<SplitRepeat> {
    let seed = plan.repeat_seed(repeat);
    let mut rng = stream_rng(seed, 0);
    let mut test_idx = Vec::new();
    let mut pool_idx = Vec::new();
    for label in [1i8, -1] {
        let mut idx = ds.indices_of(label);
        idx.shuffle(&mut rng);
        let held = idx.len() - idx.len() / 2;
        test_idx.extend_from_slice(&idx[..held]);
        pool_idx.extend_from_slice(&idx[held..]);
    }
    test_idx.sort_unstable();
    pool_idx.sort_unstable();
    let test = ds.subset(&test_idx);
    let pool = ds.subset(&pool_idx);
    let balanced = balance(&pool, plan.balanced_per_class, plan.smote_k, seed ^ 0xba1a)?;

    let n_pos = plan.n_train.div_ceil(2);
    let n_neg = plan.n_train / 2;
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for (label, take) in [(1i8, n_pos), (-1, n_neg)] {
        let mut idx = balanced.indices_of(label);
        idx.shuffle(&mut rng);
        train_idx.extend_from_slice(&idx[..take]);
        val_idx.extend_from_slice(&idx[take..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    if let Some(f) = plan.validation_fraction {
        let keep = ((f * balanced.len() as f64).round() as usize).min(val_idx.len());
        val_idx.shuffle(&mut rng);
        val_idx.truncate(keep);
        val_idx.sort_unstable();
    }
    Ok(SplitRepeat {
        repeat,
        seed,
        train: balanced.subset(&train_idx),
        validation: balanced.subset(&val_idx),
        test,
    })
}

/// Two unit-variance Gaussian blobs in `d` dimensions whose means are
/// `separation` standard deviations apart, with `round(m·positive_rate)`
/// positives, rows in shuffled order.
pub fn synth_fraud(seed: u64, m: usize, d: usize, positive_rate: f64, separation: f64) -> Result<Dataset> {
    if m < 2 || d == 0 {
        return Err(Error::InvalidParameter("need m >= 2 and d >= 1".into()));
    }
    if !(0.0..=1.0).contains(&positive_rate) {
        return Err(Error::InvalidParameter(format!("positive_rate {positive_rate} not in [0, 1]")));
    }
    let positives = (m as f64 * positive_rate).round() as usize;
    let shift = separation / (d as f64).sqrt();
    let mut rng = stream_rng(seed, 0xf4a0d);
    let mut rows: Vec<(Vec<f64>, i8)> = (0..m)
        .map(|i| {
            let label = if i < positives { 1 } else { -1 };
            let offset = if label == 1 { shift } else { 0.0 };
            let x = (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z + offset
                })
                .collect();
            (x, label)
        })
        .collect();
    rows.shuffle(&mut rng);
    let (x, y): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let names = (1..=d).map(|j| format!("V{j}")).collect();
    Dataset::new(x, y, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_rows(body: &str) -> Result<Dataset> {
        read_csv(body.as_bytes(), None)
    }

    #[test]
    fn csv_label_mapping() {
        let ds = csv_rows("a,b,Class\n1,2,0\n3,4,1\n5,6,0\n").unwrap();
        assert_eq!(ds.y(), &[-1, 1, -1]);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.x()[1], vec![3.0, 4.0]);
    }

    #[test]
    fn csv_kaggle_shape() {
        let mut header: Vec<String> = vec!["Time".into()];
        header.extend((1..=28).map(|i| format!("V{i}")));
        header.extend(["Amount".to_string(), "Class".to_string()]);
        let row: Vec<String> = (0..30).map(|i| format!("{}", i as f64 * 0.5)).chain(["0".to_string()]).collect();
        let row1: Vec<String> = (0..30).map(|i| format!("{}", -(i as f64))).chain(["1".to_string()]).collect();
        let body = format!("{}\n{}\n{}\n", header.join(","), row.join(","), row1.join(","));
        let ds = csv_rows(&body).unwrap();
        assert_eq!(ds.dim(), 30);
        assert_eq!(ds.feature_names()[0], "Time");
    }

    #[test]
    fn csv_errors_name_location() {
        match csv_rows("a,Class\n1,0\nNaN,1\n") {
            Err(Error::Csv { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(csv_rows("a,b\n1,0\n2,1\n"), Err(Error::Csv { .. })));
        assert!(matches!(csv_rows("a,Class\nx,0\n1,1\n"), Err(Error::Csv { row: 1, .. })));
        let ds = read_csv("f,target\n1,-1\n2,1\n".as_bytes(), Some("target")).unwrap();
        assert_eq!(ds.y(), &[-1, 1]);
    }

    fn small(pos: usize, neg: usize) -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..pos {
            x.push(vec![10.0 + i as f64, (i * i) as f64 * 0.1]);
            y.push(1);
        }
        for i in 0..neg {
            x.push(vec![-(i as f64), 0.5 * i as f64]);
            y.push(-1);
        }
        Dataset::new(x, y, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn smote_examples() {
        let ds = small(5, 20);
        assert_eq!(smote_oversample(&ds, 5, 5, 1).unwrap(), ds);

        let two = small(2, 6);
        let out = smote_oversample(&two, 3, 5, 7).unwrap();
        assert_eq!(out.count(1), 3);
        let p = &out.x()[out.len() - 1];
        let (a, b) = (&two.x()[0], &two.x()[1]);
        let u = (p[0] - a[0]) / (b[0] - a[0]);
        assert!((0.0..=1.0).contains(&u));
        assert!((p[1] - (a[1] + u * (b[1] - a[1]))).abs() < 1e-12);

        let fifty = small(50, 300);
        let out = smote_oversample(&fifty, 250, 5, 3).unwrap();
        assert_eq!(out.count(1), 250);
        assert_eq!(out.count(-1), 300);
        assert_eq!(&out.x()[..350], fifty.x());

        assert!(smote_oversample(&small(1, 10), 5, 5, 0).is_err());
    }

    #[test]
    fn undersample_examples() {
        let ds = small(5, 20);
        assert_eq!(random_undersample(&ds, 20, 1).unwrap(), ds);
        let a = random_undersample(&ds, 8, 11).unwrap();
        let b = random_undersample(&ds, 8, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.count(1), a.count(-1)), (5, 8));
        assert!(random_undersample(&ds, 21, 0).is_err());
    }

    #[test]
    fn balance_to_250_each() {
        let ds = synth_fraud(4, 4000, 3, 0.01, 3.0).unwrap();
        let out = balance(&ds, 250, 5, 9).unwrap();
        assert_eq!((out.count(1), out.count(-1)), (250, 250));
    }

    #[test]
    fn synth_counts() {
        let ds = synth_fraud(1, 20000, 4, 0.0017, 4.0).unwrap();
        assert_eq!(ds.count(1), 34);
        assert_eq!(ds.len(), 20000);
    }

    #[test]
    fn split_protocol() {
        let ds = synth_fraud(2, 20000, 4, 0.0017, 4.0).unwrap();
        let plan = SplitPlan {
            seed: 5,
            n_train: 6,
            repeats: 3,
            ..Default::default()
        };
        let splits = repeated_split(&ds, &plan).unwrap();
        assert_eq!(splits.len(), 3);
        for s in &splits {
            assert_eq!(s.train.len(), 6);
            assert_eq!((s.train.count(1), s.train.count(-1)), (3, 3));
            assert_eq!(s.validation.len(), 494);
            assert_eq!(s.test.len(), 10000);
            assert_eq!(s.test.count(1), 17);
            assert!(!s.leaks());
        }
        assert_ne!(splits[0].seed, splits[1].seed);
        assert_ne!(splits[0].train, splits[1].train);

        let odd = repeated_split(&ds, &SplitPlan { n_train: 7, repeats: 1, ..plan.clone() }).unwrap();
        assert_eq!((odd[0].train.count(1), odd[0].train.count(-1)), (4, 3));
        assert_eq!(repeated_split(&ds, &plan).unwrap(), splits);
    }

    #[test]
    fn standardizer_centers() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows);
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
    }
}
