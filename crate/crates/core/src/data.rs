//! Tabular data: CSV ingestion with ordinal encoding and sentinel imputation,
//! stratified splitting, standardization, and a synthetic generator with
//! planted sensitive/proxy structure.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{child_seed, seeded};
use crate::{Error, Result};

pub const DEFAULT_SENTINEL: f64 = -999.0;
pub const DEFAULT_VALID_FRACTION: f64 = 0.25;
/// Column name used for labels when a dataset is written back to CSV.
pub const LABEL_COLUMN: &str = "target";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

/// Column-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
}

impl Dataset {
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<u8>,
        names: Vec<String>,
        kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        if names.len() != columns.len() || kinds.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} columns, {} names, {} kinds",
                columns.len(),
                names.len(),
                kinds.len()
            )));
        }
        if let Some(bad) = columns.iter().position(|c| c.len() != labels.len()) {
            return Err(Error::Shape(format!(
                "column `{}` has {} rows, labels have {}",
                names[bad],
                columns[bad].len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::TargetNotBinary {
                row: labels.iter().position(|&x| x == l).unwrap_or(0),
                value: l.to_string(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(Dataset {
            columns,
            labels,
            names,
            kinds,
        })
    }

    /// All-continuous dataset, mostly for tests and fixtures.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: Vec<u8>, names: Vec<String>) -> Result<Self> {
        let kinds = vec![FeatureKind::Continuous; columns.len()];
        Dataset::new(columns, labels, names, kinds)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Resolves feature names to column indices, failing on the first unknown name.
    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string()))
            })
            .collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            names: self.names.clone(),
            kinds: self.kinds.clone(),
        }
    }

    /// Writes features followed by a `target` label column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push(LABEL_COLUMN);
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_rows() {
            record.clear();
            record.extend(self.columns.iter().map(|c| c[i].to_string()));
            record.push(self.labels[i].to_string());
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a headered CSV. Columns whose non-empty cells are mostly non-numeric
/// are ordinally encoded in first-appearance order; empty or unparseable
/// cells become `sentinel`.
pub fn load_csv(path: &Path, target: &str, sentinel: f64) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if !path.exists() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_idx = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingTarget(target.to_string()))?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        for (j, cell) in record.iter().enumerate() {
            raw[j].push(cell.trim().to_string());
        }
    }
    let n = raw[target_idx].len();
    if n == 0 {
        return Err(Error::NoRows);
    }

    let labels = raw[target_idx]
        .iter()
        .enumerate()
        .map(|(row, v)| match parse_number(v) {
            Some(x) if x == 0.0 => Ok(0),
            Some(x) if x == 1.0 => Ok(1),
            _ => Err(Error::TargetNotBinary {
                row,
                value: v.clone(),
            }),
        })
        .collect::<Result<Vec<u8>>>()?;

    let mut columns = Vec::with_capacity(header.len() - 1);
    let mut names = Vec::with_capacity(header.len() - 1);
    let mut kinds = Vec::with_capacity(header.len() - 1);
    for (j, cells) in raw.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        let (column, kind) = encode_column(cells, sentinel);
        columns.push(column);
        kinds.push(kind);
        names.push(header[j].clone());
    }
    Dataset::new(columns, labels, names, kinds)
}

fn encode_column(cells: &[String], sentinel: f64) -> (Vec<f64>, FeatureKind) {
    let present = cells.iter().filter(|c| !c.is_empty()).count();
    let numeric = cells.iter().filter(|c| parse_number(c).is_some()).count();
    if 2 * numeric >= present {
        let col = cells
            .iter()
            .map(|c| parse_number(c).unwrap_or(sentinel))
            .collect();
        return (col, FeatureKind::Continuous);
    }
    let mut codes: HashMap<&str, f64> = HashMap::new();
    let col = cells
        .iter()
        .map(|c| {
            if c.is_empty() {
                return sentinel;
            }
            let next = codes.len() as f64;
            *codes.entry(c.as_str()).or_insert(next)
        })
        .collect();
    (col, FeatureKind::Categorical)
}

/// Stratified split into `(train, valid)`. The validation split receives
/// `max(1, floor(n * valid_fraction))` rows; every class with at least two
/// rows lands in both splits. Rows keep their original relative order.
pub fn split(d: &Dataset, valid_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "valid_fraction must lie in (0,1), got {valid_fraction}"
        )));
    }
    let n = d.n_rows();
    let n_valid = ((n as f64 * valid_fraction).floor() as usize).max(1);
    if n < 2 || n_valid >= n {
        return Err(Error::invalid(format!(
            "split of {n} rows at fraction {valid_fraction} leaves an empty side"
        )));
    }
    let [n0, n1] = d.class_counts();
    if n0 == 0 {
        return Err(Error::ClassAbsent(1));
    }
    if n1 == 0 {
        return Err(Error::ClassAbsent(0));
    }

    // Positives allotted to validation: proportional, then clamped so each
    // class with >= 2 rows keeps at least one row on each side.
    let keep0 = usize::from(n0 >= 2);
    let keep1 = usize::from(n1 >= 2);
    let lo = keep1.max(n_valid.saturating_sub(n0 - keep0));
    let hi = (n1 - keep1).min(n_valid.saturating_sub(keep0));
    let proportional = (n_valid as f64 * n1 as f64 / n as f64).round() as usize;
    let v1 = if lo <= hi {
        proportional.clamp(lo, hi)
    } else {
        proportional.min(n1).min(n_valid)
    };
    let v0 = n_valid - v1;

    let mut rng = seeded(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::with_capacity(n0), Vec::with_capacity(n1)];
    for (i, &l) in d.labels().iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let mut valid_rows = Vec::with_capacity(n_valid);
    let mut train_rows = Vec::with_capacity(n - n_valid);
    for (class, take) in [(0usize, v0), (1, v1)] {
        let rows = &mut by_class[class];
        rows.shuffle(&mut rng);
        valid_rows.extend_from_slice(&rows[..take]);
        train_rows.extend_from_slice(&rows[take..]);
    }
    valid_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok((d.select_rows(&train_rows), d.select_rows(&valid_rows)))
}

/// Per-column affine map fitted by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.n_features() != self.means.len() {
            return Err(Error::ColumnMismatch {
                expected: self.means.len(),
                got: d.n_features(),
            });
        }
        let columns = d
            .columns
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(c, (&m, &s))| c.iter().map(|&x| (x - m) / s).collect())
            .collect();
        Ok(Dataset {
            columns,
            labels: d.labels.clone(),
            names: d.names.clone(),
            kinds: d.kinds.clone(),
        })
    }
}

/// Population mean and standard deviation of a column.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Zero-mean, unit-population-std columns. Zero-variance columns come out as
/// all zeros with std recorded as 1.
pub fn standardize(d: &Dataset) -> (Dataset, Standardizer) {
    let mut means = Vec::with_capacity(d.n_features());
    let mut stds = Vec::with_capacity(d.n_features());
    let mut constant = Vec::with_capacity(d.n_features());
    for c in &d.columns {
        let (m, s) = if c.is_empty() { (0.0, 0.0) } else { mean_std(c) };
        let flat = s <= 1e-12 * m.abs().max(1.0);
        means.push(m);
        stds.push(if flat { 1.0 } else { s });
        constant.push(flat);
    }
    let scaler = Standardizer { means, stds };
    let mut out = scaler.apply(d).expect("fitted on the same dataset");
    for (c, _) in out.columns.iter_mut().zip(&constant).filter(|(_, &flat)| flat) {
        c.iter_mut().for_each(|v| *v = 0.0);
    }
    (out, scaler)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_sensitive: usize,
    pub n_proxies_per_sensitive: usize,
    pub proxy_correlation: f64,
    pub n_informative: usize,
    pub n_noise: usize,
    pub label_signal_strength: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 4000,
            n_sensitive: 2,
            n_proxies_per_sensitive: 2,
            proxy_correlation: 0.9,
            n_informative: 5,
            n_noise: 4,
            label_signal_strength: 3.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.proxy_correlation > 0.0 && self.proxy_correlation < 1.0) {
            return Err(Error::invalid(format!(
                "proxy_correlation must lie strictly in (0,1), got {}",
                self.proxy_correlation
            )));
        }
        if self.n_rows < 10 {
            return Err(Error::invalid(format!("n_rows must be >= 10, got {}", self.n_rows)));
        }
        if !(self.label_signal_strength > 0.0 && self.label_signal_strength.is_finite()) {
            return Err(Error::invalid(format!(
                "label_signal_strength must be > 0, got {}",
                self.label_signal_strength
            )));
        }
        if self.n_features() == 0 {
            return Err(Error::invalid("synthetic spec has no feature columns"));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.n_sensitive * (1 + self.n_proxies_per_sensitive) + self.n_informative + self.n_noise
    }

    /// Names of the `sens_*` columns, the natural sensitive set for this data.
    pub fn sensitive_names(&self) -> Vec<String> {
        (0..self.n_sensitive).map(|i| format!("sens_{i}")).collect()
    }
}

/// Generates a dataset with columns `sens_i`, `proxy_i_j`, `info_j`, `noise_j`
/// (in that order). Labels depend on the informative columns only, through
/// weights decreasing linearly with the column index and normalized to unit
/// L2 norm, so `label_signal_strength` is the standard deviation of the logit.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n_rows;
    let normals = |stream: u64| -> Vec<f64> {
        let mut rng = seeded(child_seed(spec.seed, stream));
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    };

    let mut columns = Vec::with_capacity(spec.n_features());
    let mut names = Vec::with_capacity(spec.n_features());
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        stream
    };

    let rho = spec.proxy_correlation;
    let resid = (1.0 - rho * rho).sqrt();
    let mut sensitive = Vec::with_capacity(spec.n_sensitive);
    for i in 0..spec.n_sensitive {
        sensitive.push(normals(next()));
        names.push(format!("sens_{i}"));
    }
    columns.extend(sensitive.iter().cloned());
    for (i, s) in sensitive.iter().enumerate() {
        for j in 0..spec.n_proxies_per_sensitive {
            let noise = normals(next());
            columns.push(s.iter().zip(&noise).map(|(a, e)| rho * a + resid * e).collect());
            names.push(format!("proxy_{i}_{j}"));
        }
    }
    let info_start = columns.len();
    for j in 0..spec.n_informative {
        columns.push(normals(next()));
        names.push(format!("info_{j}"));
    }
    for j in 0..spec.n_noise {
        columns.push(normals(next()));
        names.push(format!("noise_{j}"));
    }

    let k = spec.n_informative;
    let raw: Vec<f64> = (0..k).map(|j| (k - j) as f64).collect();
    let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
    let weights: Vec<f64> = raw.iter().map(|w| w / norm).collect();

    let mut label_rng = seeded(child_seed(spec.seed, next()));
    let labels = (0..n)
        .map(|i| {
            let score: f64 = weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * columns[info_start + j][i])
                .sum();
            let p = sigmoid(spec.label_signal_strength * score);
            u8::from(label_rng.gen::<f64>() < p)
        })
        .collect();
    Dataset::from_columns(columns, labels, names)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
        let (mx, sx) = mean_std(x);
        let (my, sy) = mean_std(y);
        let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
        cov / (sx * sy)
    }

    #[test]
    fn empty_numeric_cell_gets_sentinel() {
        let f = write_tmp("a,b,y\n1,2,0\n,3,1\n4,5,0\n");
        let d = load_csv(f.path(), "y", -999.0).unwrap();
        assert_eq!(d.column(0), &[1.0, -999.0, 4.0]);
        assert_eq!(d.names(), &["a", "b"]);
        assert_eq!(d.labels(), &[0, 1, 0]);
    }

    #[test]
    fn categorical_first_appearance_codes() {
        let f = write_tmp("cat,x,y\nA,1,0\nB,2,1\nA,3,1\n,4,0\n");
        let d = load_csv(f.path(), "y", -999.0).unwrap();
        assert_eq!(d.column(0), &[0.0, 1.0, 0.0, -999.0]);
        assert_eq!(d.kinds()[0], FeatureKind::Categorical);
        assert_eq!(d.kinds()[1], FeatureKind::Continuous);
    }

    #[test]
    fn quoted_fields_and_unparseable_numbers() {
        let f = write_tmp("\"a,b\",x,y\n\"1\",2,1\nNA,3,0\n7,n/a,1\n");
        let d = load_csv(f.path(), "y", -1.0).unwrap();
        assert_eq!(d.names()[0], "a,b");
        assert_eq!(d.column(0), &[1.0, -1.0, 7.0]);
        assert_eq!(d.column(1), &[2.0, 3.0, -1.0]);
    }

    #[test]
    fn load_errors() {
        let f = write_tmp("a,y\n1,0\n2,2\n");
        assert!(matches!(load_csv(f.path(), "y", 0.0), Err(Error::TargetNotBinary { row: 1, .. })));
        assert!(matches!(load_csv(f.path(), "z", 0.0), Err(Error::MissingTarget(_))));
        let empty = write_tmp("a,y\n");
        assert!(matches!(load_csv(empty.path(), "y", 0.0), Err(Error::NoRows)));
        assert!(matches!(
            load_csv(Path::new("/nonexistent/x.csv"), "y", 0.0),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn numeric_dataset_round_trips_through_csv() {
        let d = generate_synthetic(&SyntheticSpec {
            n_rows: 50,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), LABEL_COLUMN, -999.0).unwrap();
        assert_eq!(back, d);
    }

    fn toy(n: usize, positives: usize) -> Dataset {
        let labels = (0..n).map(|i| u8::from(i < positives)).collect();
        Dataset::from_columns(vec![(0..n).map(|i| i as f64).collect()], labels, vec!["x".into()]).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = toy(10, 5);
        let (t1, v1) = split(&d, 0.3, 7).unwrap();
        let (t2, v2) = split(&d, 0.3, 7).unwrap();
        assert_eq!((t1.n_rows(), v1.n_rows()), (7, 3));
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
        for part in [&t1, &v1] {
            let [a, b] = part.class_counts();
            assert!(a > 0 && b > 0);
        }
        let mut all: Vec<f64> = t1.column(0).iter().chain(v1.column(0)).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, d.column(0));
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split(&toy(10, 10), 0.3, 0), Err(Error::ClassAbsent(_))));
        assert!(split(&toy(10, 5), 0.0, 0).is_err());
        assert!(split(&toy(10, 5), 1.0, 0).is_err());
        assert!(split(&toy(1, 1), 0.5, 0).is_err());
    }

    #[test]
    fn split_keeps_rare_class_on_both_sides() {
        let d = toy(40, 2);
        let (t, v) = split(&d, 0.1, 3).unwrap();
        assert_eq!(v.n_rows(), 4);
        assert_eq!(t.class_counts()[1], 1);
        assert_eq!(v.class_counts()[1], 1);
    }

    #[test]
    fn standardize_closed_form() {
        let d = Dataset::from_columns(
            vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]],
            vec![0, 1, 0],
            vec!["a".into(), "c".into()],
        )
        .unwrap();
        let (s, scaler) = standardize(&d);
        let expect = 1.5f64.sqrt();
        assert_abs_diff_eq!(s.column(0)[0], -expect, epsilon = 1e-12);
        assert_abs_diff_eq!(s.column(0)[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.column(0)[2], expect, epsilon = 1e-12);
        assert_eq!(s.column(1), &[0.0, 0.0, 0.0]);
        assert_eq!(scaler.stds[1], 1.0);

        let (again, _) = standardize(&s);
        for j in 0..2 {
            for (a, b) in again.column(j).iter().zip(s.column(j)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn synthetic_proxy_correlation_and_label_independence() {
        let spec = SyntheticSpec {
            n_rows: 5000,
            proxy_correlation: 0.9,
            seed: 11,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let sens = d.column(d.index_of("sens_0").unwrap());
        let proxy = d.column(d.index_of("proxy_0_0").unwrap());
        assert!((sample_correlation(sens, proxy) - 0.9).abs() < 0.03);
        let labels: Vec<f64> = d.labels().iter().map(|&l| l as f64).collect();
        for name in spec.sensitive_names() {
            let r = sample_correlation(d.column(d.index_of(&name).unwrap()), &labels);
            assert!(r.abs() < 0.05, "{name}: r = {r}");
        }
        let info = d.column(d.index_of("info_0").unwrap());
        assert!(sample_correlation(info, &labels) > 0.2);
        for j in 0..d.n_features() {
            if d.names()[j].starts_with("proxy_") {
                let (_, s) = mean_std(d.column(j));
                assert!((s * s - 1.0).abs() < 0.05);
            }
        }
        assert_eq!(generate_synthetic(&spec).unwrap(), d);
    }

    #[test]
    fn synthetic_spec_validation() {
        let bad = SyntheticSpec {
            proxy_correlation: 1.5,
            ..SyntheticSpec::default()
        };
        assert!(matches!(generate_synthetic(&bad), Err(Error::InvalidParameter(_))));
        let tiny = SyntheticSpec {
            n_rows: 5,
            ..SyntheticSpec::default()
        };
        assert!(tiny.validate().is_err());
    }
}
