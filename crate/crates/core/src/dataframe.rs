//! Mixed-type dataset representation and the encoding used by every
//! imputer: one-hot expansion for categorical columns, min-max scaling for
//! continuous ones, and the per-column observation mask.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_MISSING_LITERALS: &[&str] = &["", "NA"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Continuous,
    /// Ordered category list; must contain at least two entries.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Declared column layout of a dataset. The optional label column is kept in
/// the dataset but excluded from imputation features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    label_column: Option<String>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, label_column: Option<String>) -> Result<Schema> {
        let schema = Schema {
            columns,
            label_column,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        for (i, col) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|c| c.name == col.name) {
                return Err(Error::Schema(format!(
                    "duplicate column name {:?}",
                    col.name
                )));
            }
            if let ColumnKind::Categorical(cats) = &col.kind {
                if cats.len() < 2 {
                    return Err(Error::Schema(format!(
                        "categorical column {:?} lists {} categories, need at least 2",
                        col.name,
                        cats.len()
                    )));
                }
                for (j, cat) in cats.iter().enumerate() {
                    if cats[..j].contains(cat) {
                        return Err(Error::Schema(format!(
                            "duplicate category {:?} in column {:?}",
                            cat, col.name
                        )));
                    }
                }
            }
        }
        if let Some(label) = &self.label_column {
            if !self.columns.iter().any(|c| &c.name == label) {
                return Err(Error::Schema(format!(
                    "label column {:?} not found in schema",
                    label
                )));
            }
        }
        Ok(())
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    pub fn label_index(&self) -> Option<usize> {
        self.label_column
            .as_deref()
            .and_then(|l| self.columns.iter().position(|c| c.name == l))
    }

    /// Indices of non-label columns, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        let label = self.label_index();
        (0..self.columns.len())
            .filter(|i| Some(*i) != label)
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    /// Position into the column's declared category list.
    Category(usize),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// The user-facing form of a dataset: typed cells with explicit missing
/// markers, aligned to a [`Schema`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    schema: Schema,
    rows: usize,
    cells: Vec<Cell>,
}

impl MixedDataset {
    pub fn new(schema: Schema, rows: usize, cells: Vec<Cell>) -> Result<MixedDataset> {
        if cells.len() != rows * schema.columns().len() {
            return Err(Error::Schema(format!(
                "cell count {} does not match {} rows x {} columns",
                cells.len(),
                rows,
                schema.columns().len()
            )));
        }
        let ds = MixedDataset {
            schema,
            rows,
            cells,
        };
        for r in 0..rows {
            for (c, spec) in ds.schema.columns().iter().enumerate() {
                match (ds.cell(r, c), &spec.kind) {
                    (Cell::Missing, _) => {}
                    (Cell::Number(v), ColumnKind::Continuous) => {
                        if !v.is_finite() {
                            return Err(Error::Parse {
                                row: r,
                                column: spec.name.clone(),
                                message: "non-finite number".into(),
                            });
                        }
                    }
                    (Cell::Category(p), ColumnKind::Categorical(cats)) => {
                        if p >= cats.len() {
                            return Err(Error::Parse {
                                row: r,
                                column: spec.name.clone(),
                                message: format!("category position {p} out of range"),
                            });
                        }
                    }
                    _ => {
                        return Err(Error::Parse {
                            row: r,
                            column: spec.name.clone(),
                            message: "cell type does not match column kind".into(),
                        });
                    }
                }
            }
        }
        Ok(ds)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.schema.columns().len() + col]
    }

    pub fn set_cell(&mut self, row: usize, col: usize, cell: Cell) {
        let w = self.schema.columns().len();
        self.cells[row * w + col] = cell;
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.cell(row, col).is_missing()
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(Cell::is_missing)
    }

    /// Copies the label column's cells from another dataset (used after
    /// decoding, which only reconstructs feature columns).
    pub fn splice_label_from(&mut self, other: &MixedDataset) -> Result<()> {
        let Some(idx) = self.schema.label_index() else {
            return Ok(());
        };
        if other.n_rows() != self.rows || other.schema() != &self.schema {
            return Err(Error::Schema("label splice source does not match".into()));
        }
        for r in 0..self.rows {
            let v = other.cell(r, idx);
            self.set_cell(r, idx, v);
        }
        Ok(())
    }

    /// Label cells as 0/1 values. Errors if the label column is absent, has
    /// missing cells, or carries fewer than two distinct classes.
    pub fn binary_labels(&self) -> Result<Vec<u8>> {
        let idx = self
            .schema
            .label_index()
            .ok_or_else(|| Error::DegenerateLabels("schema declares no label column".into()))?;
        let spec = &self.schema.columns()[idx];
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let v = match (self.cell(r, idx), &spec.kind) {
                (Cell::Missing, _) => {
                    return Err(Error::DegenerateLabels(format!("label missing at row {r}")))
                }
                (Cell::Category(p), ColumnKind::Categorical(cats)) if cats.len() == 2 => p as u8,
                (Cell::Number(x), ColumnKind::Continuous) if x == 0.0 || x == 1.0 => x as u8,
                _ => {
                    return Err(Error::DegenerateLabels(format!(
                        "label column {:?} is not binary",
                        spec.name
                    )))
                }
            };
            out.push(v);
        }
        if !out.contains(&0) || !out.contains(&1) {
            return Err(Error::DegenerateLabels(
                "label column carries a single class".into(),
            ));
        }
        Ok(out)
    }
}

/// How one raw feature column maps into the encoded matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnEncoding {
    /// Min-max scaled from observed bounds. A constant column (min == max)
    /// encodes as zeros and is not imputable by a model.
    Continuous { min: f64, max: f64, constant: bool },
    /// Binary categorical: a single 0/1 column (position 1 encodes as 1).
    Binary,
    /// One-hot block of `width` columns (categorical with 3+ categories).
    OneHot { width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedColumn {
    /// Index into the schema's column list.
    pub raw_index: usize,
    /// First encoded column of this raw column's span.
    pub start: usize,
    pub width: usize,
    pub encoding: ColumnEncoding,
}

impl EncodedColumn {
    pub fn span(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }

    /// Whether a model-based imputer should fit this column at all.
    pub fn model_imputable(&self) -> bool {
        !matches!(
            self.encoding,
            ColumnEncoding::Continuous { constant: true, .. }
        )
    }
}

/// Per-column spans and scaling bounds connecting raw columns to the encoded
/// matrix. Feature columns only; the label column is never encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMap {
    columns: Vec<EncodedColumn>,
    encoded_width: usize,
}

impl EncodingMap {
    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn encoded_width(&self) -> usize {
        self.encoded_width
    }

    pub fn n_groups(&self) -> usize {
        self.columns.len()
    }

    pub fn group(&self, i: usize) -> &EncodedColumn {
        &self.columns[i]
    }
}

/// N x d' indicator matrix aligned to the encoded matrix: 1 = observed,
/// 0 = missing. All encoded columns of one raw column share mask values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl MaskMatrix {
    pub fn all_observed(rows: usize, cols: usize) -> MaskMatrix {
        MaskMatrix {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> MaskMatrix {
        let mut observed = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                observed.push(f(r, c));
            }
        }
        MaskMatrix {
            rows,
            cols,
            observed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn observed(&self, r: usize, c: usize) -> bool {
        self.observed[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, observed: bool) {
        self.observed[r * self.cols + c] = observed;
    }

    /// Count of missing cells (`#NA`).
    pub fn missing_count(&self) -> usize {
        self.observed.iter().filter(|o| !**o).count()
    }

    pub fn missing_in_column(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| !self.observed(r, c)).count()
    }

    /// 0/1 matrix form (1 = observed).
    pub fn to_matrix(&self) -> Matrix {
        let data = self
            .observed
            .iter()
            .map(|&o| if o { 1.0 } else { 0.0 })
            .collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("mask values are finite")
    }
}

/// Row partition of the data relative to one target column group: the rows
/// where the target is observed and the rows where it is missing, plus
/// accessors for the four sub-blocks the split induces.
#[derive(Debug, Clone)]
pub struct FourPartView {
    pub obs_rows: Vec<usize>,
    pub mis_rows: Vec<usize>,
    pub target_span: std::ops::Range<usize>,
    total_cols: usize,
}

impl FourPartView {
    fn gather(&self, x: &Matrix, rows: &[usize], in_span: bool) -> Matrix {
        let width = if in_span {
            self.target_span.len()
        } else {
            self.total_cols - self.target_span.len()
        };
        let mut out = Matrix::zeros(rows.len(), width);
        for (ri, &r) in rows.iter().enumerate() {
            let mut ci = 0;
            for c in 0..self.total_cols {
                let inside = self.target_span.contains(&c);
                if inside == in_span {
                    out.set(ri, ci, x.get(r, c));
                    ci += 1;
                }
            }
        }
        out
    }

    /// Observed values of the target column group.
    pub fn target_obs(&self, x: &Matrix) -> Matrix {
        self.gather(x, &self.obs_rows, true)
    }

    /// Non-target columns of rows where the target is observed.
    pub fn others_obs(&self, x: &Matrix) -> Matrix {
        self.gather(x, &self.obs_rows, false)
    }

    /// Non-target columns of rows where the target is missing.
    pub fn others_mis(&self, x: &Matrix) -> Matrix {
        self.gather(x, &self.mis_rows, false)
    }

    /// Current values sitting in the target's missing slots.
    pub fn target_mis(&self, x: &Matrix) -> Matrix {
        self.gather(x, &self.mis_rows, true)
    }
}

fn parse_missing(text: &str, literals: &[&str]) -> bool {
    literals.contains(&text)
}

/// Parses CSV text against a schema. The header row must match the schema's
/// column names in order; missing cells are the empty string or `NA` unless
/// other literals are given.
pub fn parse_csv(csv_text: &str, schema: &Schema) -> Result<MixedDataset> {
    parse_csv_with(csv_text, schema, DEFAULT_MISSING_LITERALS)
}

pub fn parse_csv_with(
    csv_text: &str,
    schema: &Schema,
    missing_literals: &[&str],
) -> Result<MixedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: "<header>".into(),
            message: e.to_string(),
        })?
        .clone();
    let expected: Vec<&str> = schema.columns().iter().map(|c| c.name.as_str()).collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            row: 0,
            column: "<header>".into(),
            message: format!(
                "header {:?} does not match schema columns {:?}",
                got, expected
            ),
        });
    }

    let mut cells = Vec::new();
    let mut rows = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: r,
            column: "<row>".into(),
            message: e.to_string(),
        })?;
        if record.len() != schema.columns().len() {
            return Err(Error::Parse {
                row: r,
                column: "<row>".into(),
                message: format!(
                    "ragged row: {} fields, expected {}",
                    record.len(),
                    schema.columns().len()
                ),
            });
        }
        for (c, spec) in schema.columns().iter().enumerate() {
            let text = &record[c];
            let cell = if parse_missing(text, missing_literals) {
                Cell::Missing
            } else {
                match &spec.kind {
                    ColumnKind::Continuous => {
                        let v: f64 = text.parse().map_err(|_| Error::Parse {
                            row: r,
                            column: spec.name.clone(),
                            message: format!("unparseable number {:?}", text),
                        })?;
                        if !v.is_finite() {
                            return Err(Error::Parse {
                                row: r,
                                column: spec.name.clone(),
                                message: format!("non-finite number {:?}", text),
                            });
                        }
                        Cell::Number(v)
                    }
                    ColumnKind::Categorical(cats) => {
                        let pos = cats.iter().position(|cat| cat == text).ok_or_else(|| {
                            Error::Parse {
                                row: r,
                                column: spec.name.clone(),
                                message: format!("unknown category {:?}", text),
                            }
                        })?;
                        Cell::Category(pos)
                    }
                }
            };
            cells.push(cell);
        }
        rows += 1;
    }
    MixedDataset::new(schema.clone(), rows, cells)
}

/// Serializes a dataset back to CSV. Missing cells are written as `NA`.
pub fn write_csv(ds: &MixedDataset) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let names: Vec<&str> = ds
        .schema()
        .columns()
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    wtr.write_record(&names).expect("in-memory write");
    for r in 0..ds.n_rows() {
        let mut record: Vec<String> = Vec::with_capacity(names.len());
        for (c, spec) in ds.schema().columns().iter().enumerate() {
            let text = match ds.cell(r, c) {
                Cell::Missing => "NA".to_string(),
                Cell::Number(v) => format!("{v}"),
                Cell::Category(p) => match &spec.kind {
                    ColumnKind::Categorical(cats) => cats[p].clone(),
                    ColumnKind::Continuous => unreachable!("validated at construction"),
                },
            };
            record.push(text);
        }
        wtr.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Encodes a dataset into the numeric matrix all imputers operate on.
///
/// Continuous columns are min-max scaled from observed cells only; binary
/// categorical columns become one 0/1 column; wider categorical columns
/// become one-hot blocks. Missing raw cells flag their whole encoded span in
/// the mask (the matrix stores 0.0 placeholders there).
pub fn encode(ds: &MixedDataset) -> Result<(Matrix, MaskMatrix, EncodingMap)> {
    let map = fit_encoding(ds)?;
    let (x, mask) = encode_with_map(ds, &map)?;
    Ok((x, mask, map))
}

/// Computes scaling bounds and spans without encoding.
pub fn fit_encoding(ds: &MixedDataset) -> Result<EncodingMap> {
    let mut columns = Vec::new();
    let mut start = 0usize;
    for &raw in &ds.schema().feature_indices() {
        let spec = &ds.schema().columns()[raw];
        let encoding = match &spec.kind {
            ColumnKind::Continuous => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut observed = 0usize;
                for r in 0..ds.n_rows() {
                    if let Cell::Number(v) = ds.cell(r, raw) {
                        min = min.min(v);
                        max = max.max(v);
                        observed += 1;
                    }
                }
                if observed == 0 {
                    return Err(Error::UnimputableColumn {
                        column: spec.name.clone(),
                        reason: "no observed cells".into(),
                    });
                }
                ColumnEncoding::Continuous {
                    min,
                    max,
                    constant: min == max,
                }
            }
            ColumnKind::Categorical(cats) => {
                if (0..ds.n_rows()).all(|r| ds.is_missing(r, raw)) {
                    return Err(Error::UnimputableColumn {
                        column: spec.name.clone(),
                        reason: "no observed cells".into(),
                    });
                }
                if cats.len() == 2 {
                    ColumnEncoding::Binary
                } else {
                    ColumnEncoding::OneHot { width: cats.len() }
                }
            }
        };
        let width = match &encoding {
            ColumnEncoding::Continuous { .. } | ColumnEncoding::Binary => 1,
            ColumnEncoding::OneHot { width } => *width,
        };
        columns.push(EncodedColumn {
            raw_index: raw,
            start,
            width,
            encoding,
        });
        start += width;
    }
    Ok(EncodingMap {
        columns,
        encoded_width: start,
    })
}

/// Encodes under a previously fitted map (used to place ground truth and
/// imputed data in the same scaled space).
pub fn encode_with_map(ds: &MixedDataset, map: &EncodingMap) -> Result<(Matrix, MaskMatrix)> {
    let n = ds.n_rows();
    let mut x = Matrix::zeros(n, map.encoded_width());
    let mut mask = MaskMatrix::all_observed(n, map.encoded_width());
    for group in map.columns() {
        let spec = &ds.schema().columns()[group.raw_index];
        for r in 0..n {
            match ds.cell(r, group.raw_index) {
                Cell::Missing => {
                    for c in group.span() {
                        mask.set(r, c, false);
                        x.set(r, c, 0.0);
                    }
                }
                Cell::Number(v) => match &group.encoding {
                    ColumnEncoding::Continuous { min, max, constant } => {
                        let scaled = if *constant {
                            0.0
                        } else {
                            (v - min) / (max - min)
                        };
                        if !scaled.is_finite() {
                            return Err(Error::Numerical(format!(
                                "scaling produced non-finite value in column {:?}",
                                spec.name
                            )));
                        }
                        x.set(r, group.start, scaled);
                    }
                    _ => unreachable!("cell type validated at construction"),
                },
                Cell::Category(p) => match &group.encoding {
                    ColumnEncoding::Binary => {
                        x.set(r, group.start, if p == 1 { 1.0 } else { 0.0 });
                    }
                    ColumnEncoding::OneHot { .. } => {
                        for (k, c) in group.span().enumerate() {
                            x.set(r, c, if k == p { 1.0 } else { 0.0 });
                        }
                    }
                    _ => unreachable!("cell type validated at construction"),
                },
            }
        }
    }
    Ok((x, mask))
}

/// Inverse of [`encode`]: continuous columns un-scale, categorical spans take
/// the argmax (ties resolved to the lowest category position). The label
/// column, if any, comes back entirely missing; use
/// [`MixedDataset::splice_label_from`] to restore it.
pub fn decode(x: &Matrix, map: &EncodingMap, schema: &Schema) -> Result<MixedDataset> {
    if x.cols() != map.encoded_width() {
        return Err(Error::shape(
            "decode",
            (x.rows(), x.cols()),
            (x.rows(), map.encoded_width()),
        ));
    }
    let n = x.rows();
    let width = schema.columns().len();
    let mut cells = vec![Cell::Missing; n * width];
    for group in map.columns() {
        for r in 0..n {
            let cell = match &group.encoding {
                ColumnEncoding::Continuous { min, max, .. } => {
                    Cell::Number(min + x.get(r, group.start) * (max - min))
                }
                ColumnEncoding::Binary => {
                    // Argmax over the implicit pair [1 - v, v]; the tie at
                    // v = 0.5 resolves to position 0.
                    Cell::Category(usize::from(x.get(r, group.start) > 0.5))
                }
                ColumnEncoding::OneHot { .. } => {
                    let mut best = 0usize;
                    let mut best_v = f64::NEG_INFINITY;
                    for (k, c) in group.span().enumerate() {
                        let v = x.get(r, c);
                        if v > best_v {
                            best_v = v;
                            best = k;
                        }
                    }
                    Cell::Category(best)
                }
            };
            cells[r * width + group.raw_index] = cell;
        }
    }
    MixedDataset::new(schema.clone(), n, cells)
}

/// Splits rows by the mask of column group `i`: observed rows vs missing
/// rows, with accessors for the induced sub-blocks.
pub fn split_four_parts(
    x: &Matrix,
    mask: &MaskMatrix,
    map: &EncodingMap,
    i: usize,
) -> Result<FourPartView> {
    if i >= map.n_groups() {
        return Err(Error::Index {
            what: "column group",
            index: i,
            len: map.n_groups(),
        });
    }
    let group = map.group(i);
    let mut obs_rows = Vec::new();
    let mut mis_rows = Vec::new();
    for r in 0..x.rows() {
        if mask.observed(r, group.start) {
            obs_rows.push(r);
        } else {
            mis_rows.push(r);
        }
    }
    Ok(FourPartView {
        obs_rows,
        mis_rows,
        target_span: group.span(),
        total_cols: x.cols(),
    })
}

/// Raw feature columns ordered by ascending missing count, ties broken by
/// position. Fully observed columns are excluded: they need no imputation.
pub fn sort_columns_by_missingness(mask: &MaskMatrix, map: &EncodingMap) -> Vec<usize> {
    let mut countable: Vec<(usize, usize)> = map
        .columns()
        .iter()
        .enumerate()
        .map(|(g, col)| (g, mask.missing_in_column(col.start)))
        .filter(|(_, missing)| *missing > 0)
        .collect();
    countable.sort_by_key(|&(g, missing)| (missing, g));
    countable.into_iter().map(|(g, _)| g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_ab() -> Schema {
        Schema::new(
            vec![
                ColumnSpec {
                    name: "a".into(),
                    kind: ColumnKind::Continuous,
                },
                ColumnSpec {
                    name: "b".into(),
                    kind: ColumnKind::Categorical(vec!["x".into(), "y".into()]),
                },
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn parse_csv_reads_missing_markers() {
        let ds = parse_csv("a,b\n1,x\nNA,y\n", &schema_ab()).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert!(!ds.is_missing(0, 0));
        assert!(ds.is_missing(1, 0));
        assert_eq!(ds.cell(0, 1), Cell::Category(0));
    }

    #[test]
    fn parse_csv_empty_cell_is_missing() {
        let ds = parse_csv("a,b\n,x\n", &schema_ab()).unwrap();
        assert!(ds.is_missing(0, 0));
    }

    #[test]
    fn parse_csv_unknown_category_names_coordinates() {
        let err = parse_csv("a,b\n1,z\n", &schema_ab()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 0);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_csv_ragged_row_is_an_error() {
        assert!(parse_csv("a,b\n1\n", &schema_ab()).is_err());
    }

    fn continuous_schema(names: &[&str]) -> Schema {
        Schema::new(
            names
                .iter()
                .map(|n| ColumnSpec {
                    name: (*n).into(),
                    kind: ColumnKind::Continuous,
                })
                .collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn encode_min_max_definition() {
        let schema = continuous_schema(&["a"]);
        let ds = parse_csv("a\n1\n3\n5\n", &schema).unwrap();
        let (x, mask, map) = encode(&ds).unwrap();
        assert_eq!(x.cols(), 1);
        assert_eq!(x.get(0, 0), 0.0);
        assert_eq!(x.get(1, 0), 0.5);
        assert_eq!(x.get(2, 0), 1.0);
        assert!(mask.observed(1, 0));
        assert_eq!(map.encoded_width(), 1);
    }

    #[test]
    fn encode_one_hot_definition() {
        let schema = Schema::new(
            vec![ColumnSpec {
                name: "c".into(),
                kind: ColumnKind::Categorical(vec!["A".into(), "B".into(), "C".into()]),
            }],
            None,
        )
        .unwrap();
        let ds = parse_csv("c\nB\n", &schema).unwrap();
        let (x, _, _) = encode(&ds).unwrap();
        assert_eq!(x.row(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn encode_observed_only_bounds() {
        let schema = continuous_schema(&["a"]);
        let ds = parse_csv("a\n1\nNA\n3\n", &schema).unwrap();
        let (x, mask, _) = encode(&ds).unwrap();
        assert_eq!(x.get(0, 0), 0.0);
        assert_eq!(x.get(2, 0), 1.0);
        assert!(mask.observed(0, 0));
        assert!(!mask.observed(1, 0));
        assert!(mask.observed(2, 0));
    }

    #[test]
    fn encode_rejects_fully_missing_column() {
        let schema = continuous_schema(&["a"]);
        let ds = parse_csv("a\nNA\nNA\n", &schema).unwrap();
        assert!(matches!(encode(&ds), Err(Error::UnimputableColumn { .. })));
    }

    #[test]
    fn constant_column_encodes_to_zero_and_is_not_model_imputable() {
        let schema = continuous_schema(&["a", "b"]);
        let ds = parse_csv("a,b\n2,1\n2,5\n2,NA\n", &schema).unwrap();
        let (x, _, map) = encode(&ds).unwrap();
        assert_eq!(x.get(0, 0), 0.0);
        assert_eq!(x.get(2, 0), 0.0);
        assert!(!map.group(0).model_imputable());
        assert!(map.group(1).model_imputable());
    }

    #[test]
    fn decode_argmax_and_ties() {
        let schema = Schema::new(
            vec![ColumnSpec {
                name: "c".into(),
                kind: ColumnKind::Categorical(vec!["A".into(), "B".into(), "C".into()]),
            }],
            None,
        )
        .unwrap();
        let ds = parse_csv("c\nA\n", &schema).unwrap();
        let (_, _, map) = encode(&ds).unwrap();

        let x = Matrix::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        let decoded = decode(&x, &map, &schema).unwrap();
        assert_eq!(decoded.cell(0, 0), Cell::Category(1));

        let x = Matrix::from_rows(&[vec![0.4, 0.4, 0.2]]).unwrap();
        let decoded = decode(&x, &map, &schema).unwrap();
        assert_eq!(decoded.cell(0, 0), Cell::Category(0));
    }

    #[test]
    fn decode_inverse_scaling() {
        let schema = continuous_schema(&["a"]);
        let ds = parse_csv("a\n1\n5\n", &schema).unwrap();
        let (_, _, map) = encode(&ds).unwrap();
        let x = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let decoded = decode(&x, &map, &schema).unwrap();
        assert_eq!(decoded.cell(0, 0), Cell::Number(3.0));
    }

    #[test]
    fn encode_decode_round_trip_on_complete_dataset() {
        let schema = Schema::new(
            vec![
                ColumnSpec {
                    name: "a".into(),
                    kind: ColumnKind::Continuous,
                },
                ColumnSpec {
                    name: "b".into(),
                    kind: ColumnKind::Categorical(vec!["x".into(), "y".into(), "z".into()]),
                },
                ColumnSpec {
                    name: "c".into(),
                    kind: ColumnKind::Categorical(vec!["n".into(), "p".into()]),
                },
            ],
            None,
        )
        .unwrap();
        let text = "a,b,c\n1.5,x,n\n2.25,z,p\n-3,y,n\n0.125,x,p\n";
        let ds = parse_csv(text, &schema).unwrap();
        let (x, _, map) = encode(&ds).unwrap();
        let back = decode(&x, &map, &schema).unwrap();
        for r in 0..ds.n_rows() {
            for c in 0..3 {
                match (ds.cell(r, c), back.cell(r, c)) {
                    (Cell::Number(a), Cell::Number(b)) => {
                        assert!((a - b).abs() < 1e-12, "({r},{c}): {a} vs {b}")
                    }
                    (a, b) => assert_eq!(a, b, "({r},{c})"),
                }
            }
        }
    }

    #[test]
    fn split_four_parts_row_partition() {
        let schema = continuous_schema(&["a", "b"]);
        let ds = parse_csv("a,b\nNA,1\n2,2\nNA,3\n", &schema).unwrap();
        let (x, mask, map) = encode(&ds).unwrap();
        let view = split_four_parts(&x, &mask, &map, 0).unwrap();
        assert_eq!(view.obs_rows, vec![1]);
        assert_eq!(view.mis_rows, vec![0, 2]);

        let full = split_four_parts(&x, &mask, &map, 1).unwrap();
        assert_eq!(full.obs_rows, vec![0, 1, 2]);
        assert!(full.mis_rows.is_empty());
    }

    #[test]
    fn sort_columns_ascending_with_ties_and_exclusions() {
        // missing counts per column: [3, 1, 2] -> order [1, 2, 0]
        let mask = MaskMatrix::from_fn(4, 3, |r, c| match c {
            0 => r == 3,
            1 => r != 0,
            _ => r > 1,
        });
        let map = EncodingMap {
            columns: (0..3)
                .map(|i| EncodedColumn {
                    raw_index: i,
                    start: i,
                    width: 1,
                    encoding: ColumnEncoding::Continuous {
                        min: 0.0,
                        max: 1.0,
                        constant: false,
                    },
                })
                .collect(),
            encoded_width: 3,
        };
        assert_eq!(sort_columns_by_missingness(&mask, &map), vec![1, 2, 0]);

        // counts [2, 2] -> tie broken by position
        let mask = MaskMatrix::from_fn(4, 2, |r, _| r < 2);
        let map2 = EncodingMap {
            columns: map.columns[..2].to_vec(),
            encoded_width: 2,
        };
        assert_eq!(sort_columns_by_missingness(&mask, &map2), vec![0, 1]);

        // counts [0, 5] -> fully observed column excluded
        let mask = MaskMatrix::from_fn(5, 2, |_, c| c == 0);
        assert_eq!(sort_columns_by_missingness(&mask, &map2), vec![1]);
    }

    #[test]
    fn one_hot_mask_spans_are_row_constant() {
        let schema = Schema::new(
            vec![ColumnSpec {
                name: "c".into(),
                kind: ColumnKind::Categorical(vec!["A".into(), "B".into(), "C".into()]),
            }],
            None,
        )
        .unwrap();
        let ds = parse_csv("c\nB\nNA\nC\n", &schema).unwrap();
        let (x, mask, _) = encode(&ds).unwrap();
        assert_eq!(x.cols(), 3);
        for c in 0..3 {
            assert!(mask.observed(0, c));
            assert!(!mask.observed(1, c));
        }
    }

    #[test]
    fn label_column_is_excluded_from_encoding() {
        let schema = Schema::new(
            vec![
                ColumnSpec {
                    name: "f".into(),
                    kind: ColumnKind::Continuous,
                },
                ColumnSpec {
                    name: "y".into(),
                    kind: ColumnKind::Categorical(vec!["no".into(), "yes".into()]),
                },
            ],
            Some("y".into()),
        )
        .unwrap();
        let ds = parse_csv("f,y\n1,no\n2,yes\n", &schema).unwrap();
        let (x, _, map) = encode(&ds).unwrap();
        assert_eq!(x.cols(), 1);
        assert_eq!(map.n_groups(), 1);
        assert_eq!(ds.binary_labels().unwrap(), vec![0, 1]);
    }
}
