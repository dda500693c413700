//! Experiment orchestration: schema and experiment-config file formats, the
//! method dispatcher, the benchmark runner sweeping mechanisms, rates and
//! sizes, and report emission as JSON lines or a CSV summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{impute_knn, impute_mean, impute_mice, impute_svd, BaselineConfig};
use crate::dataframe::{
    encode, encode_with_map, fit_encoding, parse_csv, Cell, ColumnKind, ColumnSpec, EncodingMap,
    MaskMatrix, MixedDataset, Schema,
};
use crate::error::{Error, Result};
use crate::eval::{auroc, fit_logistic, predict_logistic, rmse, LogisticConfig};
use crate::imputer::{impute, IfganConfig};
use crate::missingness::{ampute_dataset, AmputationConfig, AmputationProvenance, Mechanism};
use crate::numerics::{Matrix, RngStream};

// ---------------------------------------------------------------------------
// Schema file format
// ---------------------------------------------------------------------------

/// Parses the flat key-value schema format:
///
/// ```text
/// col.0.name = age
/// col.0.kind = continuous
/// col.1.name = smoker
/// col.1.kind = categorical
/// col.1.categories = no,yes
/// col.1.label = true
/// ```
///
/// Blank lines and `#` comments are ignored. Category names are trimmed and
/// may not contain commas. [`schema_to_string`] emits the canonical form,
/// which round-trips byte-identically.
pub fn schema_from_str(text: &str) -> Result<Schema> {
    use std::collections::BTreeMap;
    let mut fields: BTreeMap<usize, BTreeMap<String, String>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let mut parts = key.splitn(3, '.');
        let (Some("col"), Some(idx), Some(field)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Schema(format!(
                "line {}: unknown key {key:?}, expected col.<index>.<field>",
                lineno + 1
            )));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::Schema(format!("line {}: bad column index {idx:?}", lineno + 1)))?;
        fields
            .entry(idx)
            .or_default()
            .insert(field.to_string(), value.to_string());
    }
    if fields.is_empty() {
        return Err(Error::Schema("schema file declares no columns".into()));
    }

    let mut columns = Vec::new();
    let mut label = None;
    for (expect, (idx, entry)) in fields.iter().enumerate() {
        if *idx != expect {
            return Err(Error::Schema(format!(
                "column indices must be contiguous from 0; missing col.{expect}"
            )));
        }
        let name = entry
            .get("name")
            .ok_or_else(|| Error::Schema(format!("col.{idx} lacks a name")))?
            .clone();
        let kind = match entry.get("kind").map(String::as_str) {
            Some("continuous") => ColumnKind::Continuous,
            Some("categorical") => {
                let cats = entry
                    .get("categories")
                    .ok_or_else(|| Error::Schema(format!("col.{idx} lacks categories")))?;
                let cats: Vec<String> = cats.split(',').map(|c| c.trim().to_string()).collect();
                if cats.iter().any(String::is_empty) {
                    return Err(Error::Schema(format!("col.{idx} has an empty category")));
                }
                ColumnKind::Categorical(cats)
            }
            other => {
                return Err(Error::Schema(format!(
                    "col.{idx} has unknown kind {other:?}"
                )))
            }
        };
        match entry.get("label").map(String::as_str) {
            None | Some("false") => {}
            Some("true") => {
                if label.is_some() {
                    return Err(Error::Schema("multiple label columns declared".into()));
                }
                label = Some(name.clone());
            }
            Some(other) => {
                return Err(Error::Schema(format!(
                    "col.{idx}.label must be true or false, got {other:?}"
                )))
            }
        }
        columns.push(ColumnSpec { name, kind });
    }
    Schema::new(columns, label)
}

/// Canonical serialization of a schema; `schema_from_str` of the output
/// reproduces the schema, and re-serializing reproduces the bytes.
pub fn schema_to_string(schema: &Schema) -> String {
    let mut out = String::new();
    for (i, col) in schema.columns().iter().enumerate() {
        out.push_str(&format!("col.{i}.name = {}\n", col.name));
        match &col.kind {
            ColumnKind::Continuous => out.push_str(&format!("col.{i}.kind = continuous\n")),
            ColumnKind::Categorical(cats) => {
                out.push_str(&format!("col.{i}.kind = categorical\n"));
                out.push_str(&format!("col.{i}.categories = {}\n", cats.join(",")));
            }
        }
        if schema.label_column() == Some(col.name.as_str()) {
            out.push_str(&format!("col.{i}.label = true\n"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Mask CSV (raw-column granularity)
// ---------------------------------------------------------------------------

/// Writes a 0/1 mask aligned to the schema's feature columns (1 = observed).
pub fn mask_to_csv(mask: &MaskMatrix, schema: &Schema) -> String {
    let features = schema.feature_indices();
    assert_eq!(
        mask.cols(),
        features.len(),
        "mask width must match features"
    );
    let mut out = String::new();
    let names: Vec<&str> = features
        .iter()
        .map(|&i| schema.columns()[i].name.as_str())
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for r in 0..mask.rows() {
        let row: Vec<&str> = (0..mask.cols())
            .map(|c| if mask.observed(r, c) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn mask_from_csv(text: &str, schema: &Schema) -> Result<MaskMatrix> {
    let features = schema.feature_indices();
    let expected: Vec<&str> = features
        .iter()
        .map(|&i| schema.columns()[i].name.as_str())
        .collect();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        row: 0,
        column: "<header>".into(),
        message: "empty mask file".into(),
    })?;
    let got: Vec<&str> = header.split(',').collect();
    if got != expected {
        return Err(Error::Parse {
            row: 0,
            column: "<header>".into(),
            message: format!("mask header {got:?} does not match feature columns {expected:?}"),
        });
    }
    let mut values: Vec<bool> = Vec::new();
    let mut rows = 0usize;
    for (r, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected.len() {
            return Err(Error::Parse {
                row: r,
                column: "<row>".into(),
                message: format!("ragged mask row: {} fields", cells.len()),
            });
        }
        for (c, cell) in cells.iter().enumerate() {
            match *cell {
                "0" => values.push(false),
                "1" => values.push(true),
                other => {
                    return Err(Error::Parse {
                        row: r,
                        column: expected[c].to_string(),
                        message: format!("mask cells must be 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        rows += 1;
    }
    Ok(MaskMatrix::from_fn(rows, expected.len(), |r, c| {
        values[r * expected.len() + c]
    }))
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mean,
    Knn,
    Svd,
    Mice,
    Ifgan,
    IfganNodisc,
}

impl Method {
    pub fn parse(text: &str) -> Result<Method> {
        match text {
            "mean" => Ok(Method::Mean),
            "knn" => Ok(Method::Knn),
            "svd" => Ok(Method::Svd),
            "mice" => Ok(Method::Mice),
            "ifgan" => Ok(Method::Ifgan),
            "ifgan-nodisc" => Ok(Method::IfganNodisc),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Knn => "knn",
            Method::Svd => "svd",
            Method::Mice => "mice",
            Method::Ifgan => "ifgan",
            Method::IfganNodisc => "ifgan-nodisc",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MethodConfig {
    pub baseline: BaselineConfig,
    pub ifgan: IfganConfig,
}

/// A matrix that came out of an imputer. The post-imputation classification
/// pipeline accepts only this wrapper, so ground-truth matrices cannot leak
/// into it.
#[derive(Debug, Clone)]
pub struct ImputedMatrix(Matrix);

impl ImputedMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

/// Runs the selected imputer; the delta trace is present for the
/// sweep-trained methods.
pub fn impute_with_method(
    method: Method,
    x_hat: &Matrix,
    mask: &MaskMatrix,
    map: &EncodingMap,
    cfg: &MethodConfig,
    rng: &RngStream,
) -> Result<(ImputedMatrix, Vec<f64>)> {
    match method {
        Method::Mean => Ok((ImputedMatrix(impute_mean(x_hat, mask)?), Vec::new())),
        Method::Knn => Ok((
            ImputedMatrix(impute_knn(x_hat, mask, &cfg.baseline)?),
            Vec::new(),
        )),
        Method::Svd => {
            let mut svd_rng = rng.child("svd");
            Ok((
                ImputedMatrix(impute_svd(x_hat, mask, &cfg.baseline, &mut svd_rng)?),
                Vec::new(),
            ))
        }
        Method::Mice => Ok((
            ImputedMatrix(impute_mice(x_hat, mask, map, &cfg.baseline)?),
            Vec::new(),
        )),
        Method::Ifgan | Method::IfganNodisc => {
            let mut ifgan_cfg = cfg.ifgan.clone();
            if method == Method::IfganNodisc {
                ifgan_cfg.use_discriminator = false;
            }
            let out = impute(x_hat, mask, map, &ifgan_cfg, &rng.child("ifgan"))?;
            Ok((ImputedMatrix(out.matrix), out.delta_trace))
        }
    }
}

// ---------------------------------------------------------------------------
// Post-imputation classification
// ---------------------------------------------------------------------------

/// Deals each class's shuffled rows round-robin into `folds` folds.
fn stratified_folds(labels: &[u8], folds: usize, rng: &mut RngStream) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config("stratified folds need folds >= 2".into()));
    }
    let mut assignment = vec![Vec::new(); folds];
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if rows.len() < folds {
            return Err(Error::DegenerateLabels(format!(
                "class {class} has {} rows, fewer than {folds} folds",
                rows.len()
            )));
        }
        rng.shuffle(&mut rows);
        for (i, r) in rows.into_iter().enumerate() {
            assignment[i % folds].push(r);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

/// Stratified 80/20 split: per class, the first 80% of a shuffle trains.
fn split_80_20(labels: &[u8], rng: &mut RngStream) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if rows.len() < 2 {
            return Err(Error::DegenerateLabels(format!(
                "class {class} has fewer than 2 rows"
            )));
        }
        rng.shuffle(&mut rows);
        let cut = ((rows.len() as f64) * 0.8).round() as usize;
        let cut = cut.clamp(1, rows.len() - 1);
        train.extend_from_slice(&rows[..cut]);
        test.extend_from_slice(&rows[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn gather_rows(src: &Matrix, rows: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), src.cols());
    for (i, &r) in rows.iter().enumerate() {
        for c in 0..src.cols() {
            out.set(i, c, src.get(r, c));
        }
    }
    out
}

/// Cross-validated post-imputation AUROC: fit the logistic classifier on the
/// imputed training rows, score the imputed test rows. `folds = 1` means a
/// single stratified 80/20 split. Returns per-fold AUROCs.
pub fn post_imputation_auroc(
    imputed: &ImputedMatrix,
    labels: &[u8],
    folds: usize,
    logistic: &LogisticConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let x = imputed.matrix();
    if x.rows() != labels.len() {
        return Err(Error::shape(
            "post_imputation_auroc",
            (x.rows(), x.cols()),
            (labels.len(), 1),
        ));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = if folds <= 1 {
        vec![split_80_20(labels, rng)?]
    } else {
        let assignment = stratified_folds(labels, folds, rng)?;
        (0..folds)
            .map(|k| {
                let test = assignment[k].clone();
                let train: Vec<usize> = (0..folds)
                    .filter(|&j| j != k)
                    .flat_map(|j| assignment[j].iter().copied())
                    .collect();
                let mut train = train;
                train.sort_unstable();
                (train, test)
            })
            .collect()
    };

    let mut scores_per_fold = Vec::with_capacity(splits.len());
    for (train, test) in splits {
        let train_x = gather_rows(x, &train);
        let train_y: Vec<u8> = train.iter().map(|&r| labels[r]).collect();
        let test_x = gather_rows(x, &test);
        let test_y: Vec<u8> = test.iter().map(|&r| labels[r]).collect();
        let w = fit_logistic(&train_x, &train_y, logistic)?;
        let scores = predict_logistic(&test_x, &w)?;
        scores_per_fold.push(auroc(&scores, &test_y)?);
    }
    Ok(scores_per_fold)
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    MissingRate,
    FeatureSize,
    SampleSize,
}

impl SweepAxis {
    fn parse(text: &str) -> Result<SweepAxis> {
        match text {
            "missing_rate" => Ok(SweepAxis::MissingRate),
            "feature_size" => Ok(SweepAxis::FeatureSize),
            "sample_size" => Ok(SweepAxis::SampleSize),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::MissingRate => "missing_rate",
            SweepAxis::FeatureSize => "feature_size",
            SweepAxis::SampleSize => "sample_size",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub schema_path: PathBuf,
    pub mechanism: Mechanism,
    /// Missing rate `t`; `None` takes the mechanism's conventional default.
    pub missing_rate: Option<f64>,
    pub method: Method,
    pub methods: MethodConfig,
    pub repeats: usize,
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    /// Cross-validation folds for the post-imputation classifier; 1 means a
    /// single stratified 80/20 split.
    pub folds: usize,
    /// Label column override; defaults to the schema's label marker.
    pub label: Option<String>,
    pub logistic: LogisticConfig,
    pub mar_dependent_count: usize,
    pub mnar_self_count: usize,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        data_path: PathBuf,
        schema_path: PathBuf,
        mechanism: Mechanism,
        method: Method,
    ) -> Self {
        ExperimentConfig {
            data_path,
            schema_path,
            mechanism,
            missing_rate: None,
            method,
            methods: MethodConfig::default(),
            repeats: 5,
            seed: 0,
            sweep: None,
            folds: 5,
            label: None,
            logistic: LogisticConfig::default(),
            mar_dependent_count: 10,
            mnar_self_count: 5,
            output_path: None,
        }
    }

    pub fn effective_rate(&self) -> f64 {
        self.missing_rate
            .unwrap_or_else(|| self.mechanism.default_rate())
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.folds == 0 {
            return Err(Error::Config("folds must be >= 1".into()));
        }
        if let Some(t) = self.missing_rate {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("missing_rate {t} outside (0, 1)")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
            for &v in &sweep.values {
                match sweep.axis {
                    SweepAxis::MissingRate => {
                        if !(v > 0.0 && v < 1.0) {
                            return Err(Error::Config(format!(
                                "sweep missing rate {v} outside (0, 1)"
                            )));
                        }
                    }
                    SweepAxis::FeatureSize | SweepAxis::SampleSize => {
                        if v.fract() != 0.0 || v < 1.0 {
                            return Err(Error::Config(format!(
                                "sweep size {v} must be a positive integer"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolves relative data/schema/output paths against a base directory
    /// (normally the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        for path in [&mut self.data_path, &mut self.schema_path] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(out) = &mut self.output_path {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
    }
}

/// Parses the flat `key = value` experiment-config format. Blank lines and
/// `#` comments are ignored; unknown keys are errors.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut data = None;
    let mut schema = None;
    let mut mechanism = None;
    let mut method = None;
    let mut cfg_rate = None;
    let mut repeats = None;
    let mut seed = None;
    let mut folds = None;
    let mut label = None;
    let mut output = None;
    let mut sweep_axis = None;
    let mut sweep_values: Option<Vec<f64>> = None;
    let mut methods = MethodConfig::default();
    let mut logistic = LogisticConfig::default();
    let mut mar_count = None;
    let mut mnar_count = None;

    fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
    }
    fn parse_bool(key: &str, v: &str) -> Result<bool> {
        match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
        }
    }

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "data" => data = Some(PathBuf::from(value)),
            "schema" => schema = Some(PathBuf::from(value)),
            "mechanism" => mechanism = Some(Mechanism::parse(value)?),
            "method" => method = Some(Method::parse(value)?),
            "missing_rate" => cfg_rate = Some(parse_num::<f64>(key, value)?),
            "repeats" => repeats = Some(parse_num::<usize>(key, value)?),
            "seed" => seed = Some(parse_num::<u64>(key, value)?),
            "folds" => folds = Some(parse_num::<usize>(key, value)?),
            "label" => label = Some(value.to_string()),
            "output" => output = Some(PathBuf::from(value)),
            "sweep.axis" => sweep_axis = Some(SweepAxis::parse(value)?),
            "sweep.values" => {
                let values: Result<Vec<f64>> = value
                    .split(',')
                    .map(|v| parse_num::<f64>(key, v.trim()))
                    .collect();
                sweep_values = Some(values?);
            }
            "knn.k" => methods.baseline.knn_k = parse_num(key, value)?,
            "svd.rank" => methods.baseline.svd_rank = Some(parse_num(key, value)?),
            "svd.tol" => methods.baseline.svd_tol = parse_num(key, value)?,
            "svd.max_iters" => methods.baseline.svd_max_iters = parse_num(key, value)?,
            "mice.sweeps" => methods.baseline.mice_sweeps = parse_num(key, value)?,
            "mice.ridge" => methods.baseline.mice_ridge = parse_num(key, value)?,
            "ifgan.learning_rate" => methods.ifgan.train.learning_rate = parse_num(key, value)?,
            "ifgan.batch_size" => methods.ifgan.train.batch_size = parse_num(key, value)?,
            "ifgan.l2_lambda" => methods.ifgan.train.l2_lambda = parse_num(key, value)?,
            "ifgan.alpha" => methods.ifgan.train.adversarial_alpha = parse_num(key, value)?,
            "ifgan.generator_steps" => methods.ifgan.train.generator_steps = parse_num(key, value)?,
            "ifgan.discriminator_steps" => {
                methods.ifgan.train.discriminator_steps = parse_num(key, value)?
            }
            "ifgan.max_inner_rounds" => {
                methods.ifgan.train.max_inner_rounds = Some(parse_num(key, value)?)
            }
            "ifgan.max_sweeps" => methods.ifgan.max_sweeps = parse_num(key, value)?,
            "ifgan.generator_hidden" => {
                let widths: Result<Vec<usize>> = value
                    .split(',')
                    .map(|v| parse_num::<usize>(key, v.trim()))
                    .collect();
                methods.ifgan.generator_hidden = Some(widths?);
            }
            "ifgan.discriminator_hidden" => {
                let widths: Result<Vec<usize>> = value
                    .split(',')
                    .map(|v| parse_num::<usize>(key, v.trim()))
                    .collect();
                methods.ifgan.discriminator_hidden = Some(widths?);
            }
            "ifgan.warm_start" => methods.ifgan.warm_start = parse_bool(key, value)?,
            "ifgan.generator_first" => methods.ifgan.discriminator_first = !parse_bool(key, value)?,
            "logistic.learning_rate" => logistic.learning_rate = parse_num(key, value)?,
            "logistic.epochs" => logistic.epochs = parse_num(key, value)?,
            "logistic.l2" => logistic.l2 = parse_num(key, value)?,
            "mar.dependent_count" => mar_count = Some(parse_num(key, value)?),
            "mnar.self_count" => mnar_count = Some(parse_num(key, value)?),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
    }

    let mut cfg = ExperimentConfig::new(
        data.ok_or_else(|| Error::Config("missing key `data`".into()))?,
        schema.ok_or_else(|| Error::Config("missing key `schema`".into()))?,
        mechanism.ok_or_else(|| Error::Config("missing key `mechanism`".into()))?,
        method.ok_or_else(|| Error::Config("missing key `method`".into()))?,
    );
    cfg.missing_rate = cfg_rate;
    cfg.methods = methods;
    cfg.logistic = logistic;
    if let Some(r) = repeats {
        cfg.repeats = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = folds {
        cfg.folds = f;
    }
    cfg.label = label;
    cfg.output_path = output;
    if let Some(c) = mar_count {
        cfg.mar_dependent_count = c;
    }
    if let Some(c) = mnar_count {
        cfg.mnar_self_count = c;
    }
    match (sweep_axis, sweep_values) {
        (Some(axis), Some(values)) => cfg.sweep = Some(SweepSpec { axis, values }),
        (None, None) => {}
        _ => {
            return Err(Error::Config(
                "sweep.axis and sweep.values must appear together".into(),
            ))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Benchmark runner
// ---------------------------------------------------------------------------

/// The configuration snapshot serialized into every record so a report line
/// fully determines its rerun.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub mechanism: Mechanism,
    pub missing_rate: f64,
    pub method: Method,
    pub repeats: usize,
    pub seed: u64,
    pub folds: usize,
    pub label: Option<String>,
    pub knn_k: usize,
    pub svd_rank: Option<usize>,
    pub svd_tol: f64,
    pub svd_max_iters: usize,
    pub mice_sweeps: usize,
    pub mice_ridge: f64,
    pub ifgan_learning_rate: f64,
    pub ifgan_batch_size: usize,
    pub ifgan_l2_lambda: f64,
    pub ifgan_alpha: f64,
    pub ifgan_generator_steps: usize,
    pub ifgan_discriminator_steps: usize,
    pub ifgan_max_sweeps: usize,
    pub ifgan_warm_start: bool,
    pub ifgan_generator_hidden: Option<Vec<usize>>,
    pub ifgan_discriminator_hidden: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub point: usize,
    pub sweep_axis: Option<&'static str>,
    pub sweep_value: Option<f64>,
    pub repeat: usize,
    pub rows: usize,
    pub feature_columns: usize,
    pub encoded_columns: usize,
    pub missing_cells: usize,
    /// Absent when the draw amputed zero cells (the metric is undefined).
    pub rmse: Option<f64>,
    pub auroc: Option<f64>,
    pub delta_trace: Vec<f64>,
    pub amputation: AmputationProvenance,
    pub config: ResolvedConfig,
    /// Wall-clock is informational only and never serialized: reports must
    /// be byte-identical across reruns of the same config and seed.
    #[serde(skip)]
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub sweep_axis: Option<&'static str>,
    pub sweep_value: Option<f64>,
    pub repeats: usize,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub auroc_mean: Option<f64>,
    pub auroc_std: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<PointSummary>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        // Sample (n - 1) convention.
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

fn restrict_columns(ds: &MixedDataset, keep_features: &[usize]) -> Result<MixedDataset> {
    let schema = ds.schema();
    let label = schema.label_index();
    let mut keep: Vec<usize> = keep_features.to_vec();
    if let Some(l) = label {
        keep.push(l);
    }
    keep.sort_unstable();
    let columns: Vec<ColumnSpec> = keep.iter().map(|&i| schema.columns()[i].clone()).collect();
    let new_schema = Schema::new(columns, schema.label_column().map(String::from))?;
    let mut cells = Vec::with_capacity(ds.n_rows() * keep.len());
    for r in 0..ds.n_rows() {
        for &c in &keep {
            cells.push(ds.cell(r, c));
        }
    }
    MixedDataset::new(new_schema, ds.n_rows(), cells)
}

fn restrict_rows(ds: &MixedDataset, rows: &[usize]) -> Result<MixedDataset> {
    let width = ds.schema().columns().len();
    let mut cells = Vec::with_capacity(rows.len() * width);
    for &r in rows {
        for c in 0..width {
            cells.push(ds.cell(r, c));
        }
    }
    MixedDataset::new(ds.schema().clone(), rows.len(), cells)
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the dataset and schema named by an experiment config.
pub fn load_inputs(cfg: &ExperimentConfig) -> Result<(Schema, MixedDataset)> {
    let schema_text = read_to_string(&cfg.schema_path)?;
    let mut schema = schema_from_str(&schema_text)?;
    if let Some(label) = &cfg.label {
        if schema.column_index(label).is_none() {
            return Err(Error::Config(format!(
                "label column {label:?} not present in schema"
            )));
        }
        schema = Schema::new(schema.columns().to_vec(), Some(label.clone()))?;
    }
    let data_text = read_to_string(&cfg.data_path)?;
    let ds = parse_csv(&data_text, &schema)?;
    Ok((schema, ds))
}

/// Executes the full grid (sweep points x repeats): ampute, impute with the
/// configured method, score RMSE in encoded space and, when a label column
/// is available, cross-validated post-imputation AUROC. Identical config and
/// seed reproduce the report byte for byte.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (_, full_ds) = load_inputs(cfg)?;
    if full_ds.has_missing() {
        return Err(Error::Config(
            "benchmark input must be complete; it is amputed per repeat".into(),
        ));
    }
    run_benchmark_on(cfg, &full_ds)
}

/// [`run_benchmark`] on an already-loaded dataset.
pub fn run_benchmark_on(
    cfg: &ExperimentConfig,
    full_ds: &MixedDataset,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let has_label = full_ds.schema().label_column().is_some();
    let root = RngStream::new(cfg.seed);

    let points: Vec<(Option<SweepAxis>, Option<f64>)> = match &cfg.sweep {
        None => vec![(None, None)],
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| (Some(sweep.axis), Some(v)))
            .collect(),
    };

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (pi, &(axis, value)) in points.iter().enumerate() {
        let mut rmses = Vec::new();
        let mut aurocs = Vec::new();
        for repeat in 0..cfg.repeats {
            let started = Instant::now();
            let cell_rng = root.child(&format!("point{pi}/rep{repeat}"));

            // Axis restrictions are drawn fresh per repeat.
            let mut ds = full_ds.clone();
            let mut t = cfg.effective_rate();
            match axis {
                Some(SweepAxis::MissingRate) => t = value.expect("sweep value"),
                Some(SweepAxis::FeatureSize) => {
                    let want = value.expect("sweep value") as usize;
                    let features = ds.schema().feature_indices();
                    if want == 0 || want > features.len() {
                        return Err(Error::Config(format!(
                            "feature_size {want} outside 1..={}",
                            features.len()
                        )));
                    }
                    let mut subset_rng = cell_rng.child("feature-subset");
                    let picks = subset_rng.sample_indices(features.len(), want);
                    let keep: Vec<usize> = picks.into_iter().map(|i| features[i]).collect();
                    ds = restrict_columns(&ds, &keep)?;
                }
                Some(SweepAxis::SampleSize) => {
                    let want = value.expect("sweep value") as usize;
                    if want < 2 || want > ds.n_rows() {
                        return Err(Error::Config(format!(
                            "sample_size {want} outside 2..={}",
                            ds.n_rows()
                        )));
                    }
                    let mut subset_rng = cell_rng.child("row-subset");
                    let mut rows = subset_rng.sample_indices(ds.n_rows(), want);
                    rows.sort_unstable();
                    ds = restrict_rows(&ds, &rows)?;
                }
                None => {}
            }

            let mut amp_cfg = AmputationConfig::new(cfg.mechanism, t);
            amp_cfg.mar_dependent_count = cfg.mar_dependent_count;
            amp_cfg.mnar_self_count = cfg.mnar_self_count;
            let mut amp_rng = cell_rng.child("ampute");
            let (amputed_ds, amp_result) = ampute_dataset(&ds, &amp_cfg, &mut amp_rng)?;

            let (x_hat, mask, map) = encode(&amputed_ds)?;
            let (x_com, _) = encode_with_map(&ds, &map)?;

            let method_rng = cell_rng.child("method");
            let (imputed, delta_trace) =
                impute_with_method(cfg.method, &x_hat, &mask, &map, &cfg.methods, &method_rng)?;

            let missing_cells = mask.missing_count();
            let run_rmse = if missing_cells == 0 {
                None
            } else {
                Some(rmse(&x_com, imputed.matrix(), &mask)?)
            };

            let run_auroc = if has_label {
                let labels = ds.binary_labels()?;
                let mut split_rng = cell_rng.child("split");
                let fold_scores = post_imputation_auroc(
                    &imputed,
                    &labels,
                    cfg.folds,
                    &cfg.logistic,
                    &mut split_rng,
                )?;
                Some(fold_scores.iter().sum::<f64>() / fold_scores.len() as f64)
            } else {
                None
            };

            if let Some(v) = run_rmse {
                rmses.push(v);
            }
            if let Some(v) = run_auroc {
                aurocs.push(v);
            }

            records.push(RunRecord {
                point: pi,
                sweep_axis: axis.map(SweepAxis::name),
                sweep_value: value,
                repeat,
                rows: ds.n_rows(),
                feature_columns: ds.schema().feature_indices().len(),
                encoded_columns: map.encoded_width(),
                missing_cells,
                rmse: run_rmse,
                auroc: run_auroc,
                delta_trace,
                amputation: amp_result.provenance.clone(),
                config: ResolvedConfig {
                    mechanism: cfg.mechanism,
                    missing_rate: t,
                    method: cfg.method,
                    repeats: cfg.repeats,
                    seed: cfg.seed,
                    folds: cfg.folds,
                    label: full_ds.schema().label_column().map(String::from),
                    knn_k: cfg.methods.baseline.knn_k,
                    svd_rank: cfg.methods.baseline.svd_rank,
                    svd_tol: cfg.methods.baseline.svd_tol,
                    svd_max_iters: cfg.methods.baseline.svd_max_iters,
                    mice_sweeps: cfg.methods.baseline.mice_sweeps,
                    mice_ridge: cfg.methods.baseline.mice_ridge,
                    ifgan_learning_rate: cfg.methods.ifgan.train.learning_rate,
                    ifgan_batch_size: cfg.methods.ifgan.train.batch_size,
                    ifgan_l2_lambda: cfg.methods.ifgan.train.l2_lambda,
                    ifgan_alpha: cfg.methods.ifgan.train.adversarial_alpha,
                    ifgan_generator_steps: cfg.methods.ifgan.train.generator_steps,
                    ifgan_discriminator_steps: cfg.methods.ifgan.train.discriminator_steps,
                    ifgan_max_sweeps: cfg.methods.ifgan.max_sweeps,
                    ifgan_warm_start: cfg.methods.ifgan.warm_start,
                    ifgan_generator_hidden: cfg.methods.ifgan.generator_hidden.clone(),
                    ifgan_discriminator_hidden: cfg.methods.ifgan.discriminator_hidden.clone(),
                },
                wall_ms: started.elapsed().as_millis(),
            });
        }
        let rmse_stats = mean_std(&rmses);
        let auroc_stats = mean_std(&aurocs);
        summaries.push(PointSummary {
            point: pi,
            sweep_axis: axis.map(SweepAxis::name),
            sweep_value: value,
            repeats: cfg.repeats,
            rmse_mean: rmse_stats.map(|s| s.0),
            rmse_std: rmse_stats.map(|s| s.1),
            auroc_mean: auroc_stats.map(|s| s.0),
            auroc_std: auroc_stats.map(|s| s.1),
        });
    }
    Ok(ExperimentReport { records, summaries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    JsonLines,
    CsvSummary,
}

/// Serializes a report: JSON lines carry one record per (sweep point x
/// repeat); the CSV summary carries one row per sweep point with mean and
/// sample standard deviation formatted to four decimals.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::JsonLines => {
            let mut out = String::new();
            for record in &report.records {
                out.push_str(&serde_json::to_string(record).expect("serializable record"));
                out.push('\n');
            }
            out
        }
        ReportFormat::CsvSummary => {
            let mut out = String::from(
                "sweep_axis,sweep_value,repeats,rmse_mean,rmse_std,auroc_mean,auroc_std\n",
            );
            let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
            for s in &report.summaries {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    s.sweep_axis.unwrap_or(""),
                    s.sweep_value.map_or(String::new(), |v| format!("{v}")),
                    s.repeats,
                    fmt(s.rmse_mean),
                    fmt(s.rmse_std),
                    fmt(s.auroc_mean),
                    fmt(s.auroc_std),
                ));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Standalone evaluation (truth vs imputed under a mask)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateOutcome {
    pub rmse: f64,
    pub missing_cells: usize,
    /// Mean and sample standard deviation of per-fold AUROCs.
    pub auroc_mean: Option<f64>,
    pub auroc_std: Option<f64>,
}

/// Scores an imputed dataset against the ground truth under a raw-column
/// mask. Both datasets are encoded with bounds fitted on the truth's
/// unamputed cells so the RMSE lives in the same scaled space the imputers
/// worked in.
pub fn evaluate(
    truth: &MixedDataset,
    imputed: &MixedDataset,
    raw_mask: &MaskMatrix,
    folds: usize,
    logistic: &LogisticConfig,
    rng: &mut RngStream,
) -> Result<EvaluateOutcome> {
    if truth.schema() != imputed.schema() {
        return Err(Error::Schema(
            "truth and imputed datasets use different schemas".into(),
        ));
    }
    if truth.n_rows() != imputed.n_rows() || raw_mask.rows() != truth.n_rows() {
        return Err(Error::shape(
            "evaluate",
            (truth.n_rows(), 0),
            (imputed.n_rows(), raw_mask.rows()),
        ));
    }
    let features = truth.schema().feature_indices();
    if raw_mask.cols() != features.len() {
        return Err(Error::shape(
            "evaluate mask",
            (raw_mask.rows(), raw_mask.cols()),
            (truth.n_rows(), features.len()),
        ));
    }

    // Reconstruct the amputed view of the truth to fit observed-only bounds.
    let mut amputed_view = truth.clone();
    for (j, &raw) in features.iter().enumerate() {
        for r in 0..truth.n_rows() {
            if !raw_mask.observed(r, j) {
                amputed_view.set_cell(r, raw, Cell::Missing);
            }
        }
    }
    let map = fit_encoding(&amputed_view)?;
    let (_, mask) = encode_with_map(&amputed_view, &map)?;
    let (x_com, _) = encode_with_map(truth, &map)?;
    let (x_imp, imp_mask) = encode_with_map(imputed, &map)?;
    if imp_mask.missing_count() > 0 {
        return Err(Error::Config(
            "imputed dataset still has missing feature cells".into(),
        ));
    }

    let score = rmse(&x_com, &x_imp, &mask)?;
    let (auroc_mean, auroc_std) = if truth.schema().label_column().is_some() {
        let labels = truth.binary_labels()?;
        let scores = post_imputation_auroc(&ImputedMatrix(x_imp), &labels, folds, logistic, rng)?;
        let stats = mean_std(&scores).expect("at least one fold");
        (Some(stats.0), Some(stats.1))
    } else {
        (None, None)
    };
    Ok(EvaluateOutcome {
        rmse: score,
        missing_cells: mask.missing_count(),
        auroc_mean,
        auroc_std,
    })
}
