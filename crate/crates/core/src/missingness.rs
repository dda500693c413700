//! Amputation: generating controlled missingness from a complete matrix
//! under the MCAR, MAR, and MNAR mechanisms.
//!
//! The core operations act on a plain matrix whose columns are raw features;
//! a uniform matrix `Z` of the same shape drives which cells go missing.
//! [`ampute_dataset`] lifts them to mixed-type datasets at raw-column
//! granularity.

use serde::Serialize;

use crate::dataframe::{Cell, MaskMatrix, MixedDataset};
use crate::error::{Error, Result};
use crate::numerics::{column_median, uniform_matrix, Matrix, RngStream};

pub const MAX_AMPUTATION_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Mcar,
    Mar,
    Mnar,
}

impl Mechanism {
    pub fn parse(text: &str) -> Result<Mechanism> {
        match text.to_ascii_lowercase().as_str() {
            "mcar" => Ok(Mechanism::Mcar),
            "mar" => Ok(Mechanism::Mar),
            "mnar" => Ok(Mechanism::Mnar),
            other => Err(Error::Config(format!("unknown mechanism {other:?}"))),
        }
    }

    /// Conventional missing rate when none is configured: 0.5 for the gated
    /// mechanisms, 0.2 otherwise.
    pub fn default_rate(self) -> f64 {
        match self {
            Mechanism::Mcar => 0.2,
            Mechanism::Mar | Mechanism::Mnar => 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmputationConfig {
    pub mechanism: Mechanism,
    /// Missing rate `t`, strictly between 0 and 1.
    pub missing_rate: f64,
    /// Number of gated (anchor-dependent) columns under MAR; clamped to d-1.
    pub mar_dependent_count: usize,
    /// Number of self-gated columns under MNAR; clamped to d.
    pub mnar_self_count: usize,
}

impl AmputationConfig {
    pub fn new(mechanism: Mechanism, missing_rate: f64) -> AmputationConfig {
        AmputationConfig {
            mechanism,
            missing_rate,
            mar_dependent_count: 10,
            mnar_self_count: 5,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.missing_rate > 0.0 && self.missing_rate < 1.0) {
            return Err(Error::Config(format!(
                "missing rate must lie in (0, 1), got {}",
                self.missing_rate
            )));
        }
        if self.mar_dependent_count == 0 || self.mnar_self_count == 0 {
            return Err(Error::Config("dependent column counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// What the mechanism actually did: which columns were gated and by which
/// medians, plus how many retries the degeneracy guard consumed.
#[derive(Debug, Clone, Serialize)]
pub struct AmputationProvenance {
    pub mechanism: Mechanism,
    pub missing_rate: f64,
    /// MAR only: the column whose median gates the dependent columns.
    pub anchor_column: Option<usize>,
    pub anchor_median: Option<f64>,
    /// MAR: dependent columns; MNAR: self-gated columns.
    pub gated_columns: Vec<usize>,
    /// MNAR only: per-gated-column medians, aligned to `gated_columns`.
    pub gated_medians: Vec<f64>,
    pub retries: usize,
}

/// Amputation output: the matrix with amputed entries zeroed, the
/// observation mask, and the provenance of the draw.
#[derive(Debug, Clone)]
pub struct AmputationResult {
    pub amputed: Matrix,
    pub mask: MaskMatrix,
    pub provenance: AmputationProvenance,
}

fn assert_complete_shape(x: &Matrix, min_cols: usize) -> Result<()> {
    if x.rows() == 0 || x.cols() < min_cols {
        return Err(Error::shape("ampute", (x.rows(), x.cols()), (1, min_cols)));
    }
    Ok(())
}

/// Retries fresh `Z` draws until no column is left fully missing.
fn draw_mask(
    x: &Matrix,
    rng: &mut RngStream,
    missing_rule: impl Fn(usize, usize, f64) -> bool,
) -> Result<(MaskMatrix, usize)> {
    for attempt in 0..MAX_AMPUTATION_RETRIES {
        let z = uniform_matrix(x.rows(), x.cols(), rng)?;
        let mask = MaskMatrix::from_fn(x.rows(), x.cols(), |r, c| !missing_rule(r, c, z.get(r, c)));
        let degenerate = (0..x.cols()).any(|c| mask.missing_in_column(c) == x.rows());
        if !degenerate {
            return Ok((mask, attempt));
        }
    }
    Err(Error::UnimputableColumn {
        column: "<any>".into(),
        reason: format!(
            "a column was left with zero observed cells after {MAX_AMPUTATION_RETRIES} draws"
        ),
    })
}

fn apply_mask(x: &Matrix, mask: &MaskMatrix) -> Matrix {
    let mut amputed = x.clone();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            if !mask.observed(r, c) {
                amputed.set(r, c, 0.0);
            }
        }
    }
    amputed
}

/// MCAR: cell (i, j) goes missing iff `Z_ij <= t`.
pub fn ampute_mcar(
    x_com: &Matrix,
    cfg: &AmputationConfig,
    rng: &mut RngStream,
) -> Result<AmputationResult> {
    cfg.validate()?;
    assert_complete_shape(x_com, 1)?;
    let t = cfg.missing_rate;
    let (mask, retries) = draw_mask(x_com, rng, |_, _, z| z <= t)?;
    Ok(AmputationResult {
        amputed: apply_mask(x_com, &mask),
        mask,
        provenance: AmputationProvenance {
            mechanism: Mechanism::Mcar,
            missing_rate: t,
            anchor_column: None,
            anchor_median: None,
            gated_columns: Vec::new(),
            gated_medians: Vec::new(),
            retries,
        },
    })
}

/// MAR: one anchor column is sampled and its median computed; the sampled
/// dependent columns go missing only where `Z_ij <= t` and the row's anchor
/// value lies at or below the anchor median. Every other column, the anchor
/// included, receives plain `Z_ij <= t` missingness.
pub fn ampute_mar(
    x_com: &Matrix,
    cfg: &AmputationConfig,
    rng: &mut RngStream,
) -> Result<AmputationResult> {
    cfg.validate()?;
    assert_complete_shape(x_com, 2)?;
    let d = x_com.cols();
    let t = cfg.missing_rate;

    let anchor = rng.uniform_below(d);
    let median = column_median(x_com, anchor)?;
    let k = cfg.mar_dependent_count.min(d - 1);
    let others: Vec<usize> = (0..d).filter(|&c| c != anchor).collect();
    let mut gated: Vec<usize> = rng
        .sample_indices(others.len(), k)
        .into_iter()
        .map(|i| others[i])
        .collect();
    gated.sort_unstable();

    let is_gated = |c: usize| gated.binary_search(&c).is_ok();
    let (mask, retries) = draw_mask(x_com, rng, |r, c, z| {
        if is_gated(c) {
            z <= t && x_com.get(r, anchor) <= median
        } else {
            z <= t
        }
    })?;
    Ok(AmputationResult {
        amputed: apply_mask(x_com, &mask),
        mask,
        provenance: AmputationProvenance {
            mechanism: Mechanism::Mar,
            missing_rate: t,
            anchor_column: Some(anchor),
            anchor_median: Some(median),
            gated_columns: gated,
            gated_medians: Vec::new(),
            retries,
        },
    })
}

/// MNAR: the sampled columns gate on their own values (missing only where
/// `Z_ij <= t` and the cell's value lies at or below its column median);
/// all other columns receive plain `Z_ij <= t` missingness.
pub fn ampute_mnar(
    x_com: &Matrix,
    cfg: &AmputationConfig,
    rng: &mut RngStream,
) -> Result<AmputationResult> {
    cfg.validate()?;
    assert_complete_shape(x_com, 1)?;
    let d = x_com.cols();
    let t = cfg.missing_rate;

    let k = cfg.mnar_self_count.min(d);
    let mut gated = rng.sample_indices(d, k);
    gated.sort_unstable();
    let medians: Vec<f64> = gated
        .iter()
        .map(|&c| column_median(x_com, c))
        .collect::<Result<_>>()?;

    let gate_median = |c: usize| gated.binary_search(&c).ok().map(|pos| medians[pos]);
    let (mask, retries) = draw_mask(x_com, rng, |r, c, z| match gate_median(c) {
        Some(m) => z <= t && x_com.get(r, c) <= m,
        None => z <= t,
    })?;
    Ok(AmputationResult {
        amputed: apply_mask(x_com, &mask),
        mask,
        provenance: AmputationProvenance {
            mechanism: Mechanism::Mnar,
            missing_rate: t,
            anchor_column: None,
            anchor_median: None,
            gated_columns: gated,
            gated_medians: medians,
            retries,
        },
    })
}

pub fn ampute(
    x_com: &Matrix,
    cfg: &AmputationConfig,
    rng: &mut RngStream,
) -> Result<AmputationResult> {
    match cfg.mechanism {
        Mechanism::Mcar => ampute_mcar(x_com, cfg, rng),
        Mechanism::Mar => ampute_mar(x_com, cfg, rng),
        Mechanism::Mnar => ampute_mnar(x_com, cfg, rng),
    }
}

/// Numeric view of a dataset's feature columns used for gating: continuous
/// cells keep their raw value, categorical cells use their category position.
/// The median gates of MAR/MNAR read categories ordinally through this view.
fn gate_values(ds: &MixedDataset) -> Result<Matrix> {
    let features = ds.schema().feature_indices();
    let mut out = Matrix::zeros(ds.n_rows(), features.len());
    for (j, &raw) in features.iter().enumerate() {
        for r in 0..ds.n_rows() {
            let v = match ds.cell(r, raw) {
                Cell::Number(v) => v,
                Cell::Category(p) => p as f64,
                Cell::Missing => {
                    return Err(Error::Parse {
                        row: r,
                        column: ds.schema().columns()[raw].name.clone(),
                        message: "amputation input must be complete".into(),
                    })
                }
            };
            out.set(r, j, v);
        }
    }
    Ok(out)
}

/// Amputes a complete mixed-type dataset at raw-column granularity. The
/// label column, if any, is never amputed. Returns the dataset with cells
/// blanked plus the raw-column-aligned amputation result.
pub fn ampute_dataset(
    ds: &MixedDataset,
    cfg: &AmputationConfig,
    rng: &mut RngStream,
) -> Result<(MixedDataset, AmputationResult)> {
    let values = gate_values(ds)?;
    let result = ampute(&values, cfg, rng)?;
    let features = ds.schema().feature_indices();
    let mut amputed = ds.clone();
    for (j, &raw) in features.iter().enumerate() {
        for r in 0..ds.n_rows() {
            if !result.mask.observed(r, j) {
                amputed.set_cell(r, raw, Cell::Missing);
            }
        }
    }
    Ok((amputed, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mechanism: Mechanism, t: f64) -> AmputationConfig {
        AmputationConfig::new(mechanism, t)
    }

    fn missing_fraction(mask: &MaskMatrix, cols: &[usize]) -> f64 {
        let total = mask.rows() * cols.len();
        let missing: usize = cols.iter().map(|&c| mask.missing_in_column(c)).sum();
        missing as f64 / total as f64
    }

    #[test]
    fn mcar_vanishing_rate_leaves_data_intact() {
        let x = uniform_matrix(100, 4, &mut RngStream::new(1)).unwrap();
        let out = ampute_mcar(&x, &cfg(Mechanism::Mcar, 1e-12), &mut RngStream::new(2)).unwrap();
        assert!(out.mask.missing_count() <= 1);
    }

    #[test]
    fn mcar_missing_fraction_concentrates() {
        let x = uniform_matrix(10_000, 10, &mut RngStream::new(3)).unwrap();
        let out = ampute_mcar(&x, &cfg(Mechanism::Mcar, 0.3), &mut RngStream::new(4)).unwrap();
        let frac = out.mask.missing_count() as f64 / (10_000.0 * 10.0);
        assert!((0.29..=0.31).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn mcar_same_seed_same_mask() {
        let x = uniform_matrix(50, 5, &mut RngStream::new(5)).unwrap();
        let a = ampute_mcar(&x, &cfg(Mechanism::Mcar, 0.4), &mut RngStream::new(6)).unwrap();
        let b = ampute_mcar(&x, &cfg(Mechanism::Mcar, 0.4), &mut RngStream::new(6)).unwrap();
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn mcar_mask_is_independent_of_data_values() {
        let x1 = uniform_matrix(40, 3, &mut RngStream::new(7)).unwrap();
        let x2 = uniform_matrix(40, 3, &mut RngStream::new(8)).unwrap();
        let a = ampute_mcar(&x1, &cfg(Mechanism::Mcar, 0.3), &mut RngStream::new(9)).unwrap();
        let b = ampute_mcar(&x2, &cfg(Mechanism::Mcar, 0.3), &mut RngStream::new(9)).unwrap();
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn mar_gate_never_fires_above_anchor_median() {
        let x = uniform_matrix(500, 6, &mut RngStream::new(10)).unwrap();
        let out = ampute_mar(&x, &cfg(Mechanism::Mar, 0.9), &mut RngStream::new(11)).unwrap();
        let anchor = out.provenance.anchor_column.unwrap();
        let median = out.provenance.anchor_median.unwrap();
        for &g in &out.provenance.gated_columns {
            for r in 0..x.rows() {
                if x.get(r, anchor) > median {
                    assert!(out.mask.observed(r, g), "gated cell amputed above median");
                }
            }
        }
    }

    #[test]
    fn mar_fractions_match_product_of_events() {
        let x = uniform_matrix(10_000, 10, &mut RngStream::new(12)).unwrap();
        let out = ampute_mar(&x, &cfg(Mechanism::Mar, 0.5), &mut RngStream::new(13)).unwrap();
        let gated = out.provenance.gated_columns.clone();
        let ungated: Vec<usize> = (0..10).filter(|c| !gated.contains(c)).collect();
        let gf = missing_fraction(&out.mask, &gated);
        let uf = missing_fraction(&out.mask, &ungated);
        assert!((gf - 0.25).abs() <= 0.02, "gated fraction {gf}");
        assert!((uf - 0.5).abs() <= 0.02, "ungated fraction {uf}");
    }

    #[test]
    fn mar_dependent_count_clamps_to_d_minus_one() {
        let x = uniform_matrix(200, 5, &mut RngStream::new(14)).unwrap();
        let out = ampute_mar(&x, &cfg(Mechanism::Mar, 0.5), &mut RngStream::new(15)).unwrap();
        assert_eq!(out.provenance.gated_columns.len(), 4);
        assert!(!out
            .provenance
            .gated_columns
            .contains(&out.provenance.anchor_column.unwrap()));
    }

    #[test]
    fn mnar_amputed_cells_lie_at_or_below_their_median() {
        let x = uniform_matrix(400, 6, &mut RngStream::new(16)).unwrap();
        let out = ampute_mnar(&x, &cfg(Mechanism::Mnar, 0.8), &mut RngStream::new(17)).unwrap();
        for (pos, &g) in out.provenance.gated_columns.iter().enumerate() {
            let m = out.provenance.gated_medians[pos];
            for r in 0..x.rows() {
                if !out.mask.observed(r, g) {
                    assert!(x.get(r, g) <= m);
                }
            }
        }
    }

    #[test]
    fn mnar_gated_fraction_concentrates() {
        let x = uniform_matrix(10_000, 10, &mut RngStream::new(18)).unwrap();
        let out = ampute_mnar(&x, &cfg(Mechanism::Mnar, 0.5), &mut RngStream::new(19)).unwrap();
        let gf = missing_fraction(&out.mask, &out.provenance.gated_columns);
        assert!((gf - 0.25).abs() <= 0.02, "gated fraction {gf}");
        let b = ampute_mnar(&x, &cfg(Mechanism::Mnar, 0.5), &mut RngStream::new(19)).unwrap();
        assert_eq!(out.mask, b.mask);
    }

    #[test]
    fn amputed_matrix_zeroes_exactly_the_mask_zero_set() {
        let x = uniform_matrix(60, 4, &mut RngStream::new(20)).unwrap();
        let out = ampute_mcar(&x, &cfg(Mechanism::Mcar, 0.4), &mut RngStream::new(21)).unwrap();
        for r in 0..60 {
            for c in 0..4 {
                if out.mask.observed(r, c) {
                    assert_eq!(out.amputed.get(r, c), x.get(r, c));
                } else {
                    assert_eq!(out.amputed.get(r, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn no_column_left_fully_missing() {
        // Tiny matrices at a high rate force the retry path.
        for seed in 0..30 {
            let x = uniform_matrix(4, 3, &mut RngStream::new(seed)).unwrap();
            if let Ok(out) = ampute_mcar(
                &x,
                &cfg(Mechanism::Mcar, 0.7),
                &mut RngStream::new(seed + 1000),
            ) {
                for c in 0..3 {
                    assert!(out.mask.missing_in_column(c) < 4);
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_rate() {
        let x = uniform_matrix(10, 2, &mut RngStream::new(22)).unwrap();
        assert!(ampute_mcar(&x, &cfg(Mechanism::Mcar, 0.0), &mut RngStream::new(23)).is_err());
        assert!(ampute_mcar(&x, &cfg(Mechanism::Mcar, 1.0), &mut RngStream::new(23)).is_err());
    }

    #[test]
    fn dataset_amputation_blanks_whole_cells_and_skips_label() {
        use crate::dataframe::{parse_csv, ColumnKind, ColumnSpec, Schema};
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
                    name: "y".into(),
                    kind: ColumnKind::Categorical(vec!["n".into(), "p".into()]),
                },
            ],
            Some("y".into()),
        )
        .unwrap();
        let mut text = String::from("a,b,y\n");
        let mut rng = RngStream::new(77);
        for i in 0..40 {
            let cat = ["x", "y", "z"][rng.uniform_below(3)];
            let lab = if i % 2 == 0 { "n" } else { "p" };
            text.push_str(&format!("{},{},{}\n", rng.uniform_f64(), cat, lab));
        }
        let ds = parse_csv(&text, &schema).unwrap();
        let (amputed, result) =
            ampute_dataset(&ds, &cfg(Mechanism::Mcar, 0.4), &mut RngStream::new(78)).unwrap();
        assert_eq!(result.mask.cols(), 2);
        for r in 0..40 {
            // label untouched
            assert!(!amputed.is_missing(r, 2));
            for (j, raw) in [0usize, 1usize].iter().enumerate() {
                assert_eq!(!result.mask.observed(r, j), amputed.is_missing(r, *raw));
            }
        }
    }
}
