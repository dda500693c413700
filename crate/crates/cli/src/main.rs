//! Command-line front end: `ampute` a complete CSV, `impute` missing cells,
//! `evaluate` an imputed dataset against ground truth, and `benchmark` a
//! full experiment grid described by a config file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ifgan_core::baselines::BaselineConfig;
use ifgan_core::dataframe::{
    decode, encode, parse_csv_with, write_csv, Cell, MixedDataset, Schema,
};
use ifgan_core::error::Error;
use ifgan_core::eval::LogisticConfig;
use ifgan_core::harness::{
    emit_report, evaluate, impute_with_method, mask_from_csv, mask_to_csv, parse_experiment_config,
    run_benchmark, schema_from_str, Method, MethodConfig, ReportFormat,
};
use ifgan_core::imputer::IfganConfig;
use ifgan_core::missingness::{ampute_dataset, AmputationConfig, Mechanism};
use ifgan_core::{MaskMatrix, RngStream};

#[derive(Parser)]
#[command(
    name = "ifgan",
    version,
    about = "Mixed-type missing value imputation and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Mcar,
    Mar,
    Mnar,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Mechanism {
        match m {
            MechanismArg::Mcar => Mechanism::Mcar,
            MechanismArg::Mar => Mechanism::Mar,
            MechanismArg::Mnar => Mechanism::Mnar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mean,
    Knn,
    Svd,
    Mice,
    Ifgan,
    IfganNodisc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Mean => Method::Mean,
            MethodArg::Knn => Method::Knn,
            MethodArg::Svd => Method::Svd,
            MethodArg::Mice => Method::Mice,
            MethodArg::Ifgan => Method::Ifgan,
            MethodArg::IfganNodisc => Method::IfganNodisc,
        }
    }
}

#[derive(Args)]
struct MethodFlags {
    /// Neighbor count for --method knn
    #[arg(long, default_value_t = 5)]
    knn_k: usize,
    /// Truncation rank for --method svd (default: min(10, d'-1))
    #[arg(long)]
    svd_rank: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    svd_tol: f64,
    #[arg(long, default_value_t = 100)]
    svd_max_iters: usize,
    /// Sweep count for --method mice
    #[arg(long, default_value_t = 10)]
    mice_sweeps: usize,
    #[arg(long, default_value_t = 1e-3)]
    mice_ridge: f64,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.5)]
    l2_lambda: f64,
    /// Adversarial term weight in the generator update
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    generator_steps: usize,
    #[arg(long, default_value_t = 100)]
    discriminator_steps: usize,
    #[arg(long, default_value_t = 20)]
    max_sweeps: usize,
    /// Generator hidden widths, e.g. 16,16 (default: two layers of max(8, d'))
    #[arg(long, value_delimiter = ',')]
    generator_hidden: Option<Vec<usize>>,
    /// Discriminator hidden widths, e.g. 32,32 (default: two layers of max(8, d'))
    #[arg(long, value_delimiter = ',')]
    discriminator_hidden: Option<Vec<usize>>,
    /// Keep per-column models across sweeps instead of refitting
    #[arg(long)]
    warm_start: bool,
    /// Train the generator before the discriminator inside each round
    #[arg(long)]
    generator_first: bool,
}

impl MethodFlags {
    fn build(&self) -> MethodConfig {
        let mut cfg = MethodConfig {
            baseline: BaselineConfig {
                knn_k: self.knn_k,
                svd_rank: self.svd_rank,
                svd_tol: self.svd_tol,
                svd_max_iters: self.svd_max_iters,
                mice_sweeps: self.mice_sweeps,
                mice_ridge: self.mice_ridge,
            },
            ifgan: IfganConfig::default(),
        };
        cfg.ifgan.train.learning_rate = self.learning_rate;
        cfg.ifgan.train.batch_size = self.batch_size;
        cfg.ifgan.train.l2_lambda = self.l2_lambda;
        cfg.ifgan.train.adversarial_alpha = self.alpha;
        cfg.ifgan.train.generator_steps = self.generator_steps;
        cfg.ifgan.train.discriminator_steps = self.discriminator_steps;
        cfg.ifgan.max_sweeps = self.max_sweeps;
        cfg.ifgan.generator_hidden = self.generator_hidden.clone();
        cfg.ifgan.discriminator_hidden = self.discriminator_hidden.clone();
        cfg.ifgan.warm_start = self.warm_start;
        cfg.ifgan.discriminator_first = !self.generator_first;
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Introduce missing values into a complete CSV
    Ampute {
        /// Complete input data CSV
        input: PathBuf,
        /// Schema file describing the columns
        schema: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismArg,
        /// Missing rate in (0, 1); defaults to 0.5 for mar/mnar, 0.2 for mcar
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the amputed data CSV
        #[arg(long)]
        out_data: PathBuf,
        /// Where to write the 0/1 observation mask CSV (raw columns)
        #[arg(long)]
        out_mask: PathBuf,
        /// Cell literals treated as missing on input
        #[arg(long, value_delimiter = ',', default_values_t = [String::new(), "NA".to_string()])]
        na: Vec<String>,
        /// MAR: number of anchor-gated columns
        #[arg(long, default_value_t = 10)]
        mar_dependent_count: usize,
        /// MNAR: number of self-gated columns
        #[arg(long, default_value_t = 5)]
        mnar_self_count: usize,
    },
    /// Fill missing values and write a complete CSV
    Impute {
        /// Input data CSV (may contain missing cells)
        input: PathBuf,
        /// Schema file describing the columns
        schema: PathBuf,
        /// Optional observation-mask CSV; cells masked 0 are treated as
        /// missing even if the input carries a value
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the imputed CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [String::new(), "NA".to_string()])]
        na: Vec<String>,
        #[command(flatten)]
        flags: MethodFlags,
    },
    /// Score an imputed dataset against the ground truth
    Evaluate {
        /// Complete ground-truth CSV
        #[arg(long)]
        truth: PathBuf,
        /// Imputed (complete) CSV
        #[arg(long)]
        imputed: PathBuf,
        /// Observation-mask CSV from the amputation step
        #[arg(long)]
        mask: PathBuf,
        /// Schema file describing the columns
        #[arg(long)]
        schema: PathBuf,
        /// Label column for post-imputation AUROC (default: the schema's
        /// label marker, when present)
        #[arg(long)]
        label: Option<String>,
        /// Cross-validation folds; 1 means a single stratified 80/20 split
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [String::new(), "NA".to_string()])]
        na: Vec<String>,
    },
    /// Run the experiment grid described by a config file
    Benchmark {
        /// Experiment config (flat key = value format)
        #[arg(long)]
        config: PathBuf,
        /// Output base path; writes <out>.jsonl and <out>.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// 0 success, 2 usage error, 3 data error, 4 numerical error.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Numerical(_) | Error::Domain(_) => 4,
        _ => 3,
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_schema(path: &Path) -> Result<Schema, Error> {
    schema_from_str(&read_file(path)?)
}

fn load_dataset(data: &Path, schema: &Schema, na: &[String]) -> Result<MixedDataset, Error> {
    let literals: Vec<&str> = na.iter().map(String::as_str).collect();
    parse_csv_with(&read_file(data)?, schema, &literals)
}

/// A cell is missing when the CSV says so or the mask marks it unobserved; a
/// masked-observed cell without a value is a contradiction.
fn apply_mask(ds: &mut MixedDataset, mask: &MaskMatrix) -> Result<(), Error> {
    let features = ds.schema().feature_indices();
    if mask.rows() != ds.n_rows() || mask.cols() != features.len() {
        return Err(Error::shape(
            "apply_mask",
            (mask.rows(), mask.cols()),
            (ds.n_rows(), features.len()),
        ));
    }
    for (j, &raw) in features.iter().enumerate() {
        for r in 0..ds.n_rows() {
            if !mask.observed(r, j) {
                ds.set_cell(r, raw, Cell::Missing);
            } else if ds.is_missing(r, raw) {
                return Err(Error::Parse {
                    row: r,
                    column: ds.schema().columns()[raw].name.clone(),
                    message: "mask marks the cell observed but the data is missing".into(),
                });
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ampute {
            input,
            schema,
            mechanism,
            t,
            seed,
            out_data,
            out_mask,
            na,
            mar_dependent_count,
            mnar_self_count,
        } => {
            let schema = load_schema(&schema)?;
            let ds = load_dataset(&input, &schema, &na)?;
            if ds.has_missing() {
                return Err(Error::Config(
                    "ampute expects a complete dataset; the input already has missing cells".into(),
                ));
            }
            let mechanism: Mechanism = mechanism.into();
            let mut cfg =
                AmputationConfig::new(mechanism, t.unwrap_or_else(|| mechanism.default_rate()));
            cfg.mar_dependent_count = mar_dependent_count;
            cfg.mnar_self_count = mnar_self_count;
            let mut rng = RngStream::new(seed).child("ampute");
            let (amputed, result) = ampute_dataset(&ds, &cfg, &mut rng)?;
            write_file(&out_data, &write_csv(&amputed))?;
            write_file(&out_mask, &mask_to_csv(&result.mask, &schema))?;
            let total = (result.mask.rows() * result.mask.cols()) as f64;
            println!(
                "amputed {} of {} cells ({:.4})",
                result.mask.missing_count(),
                total as usize,
                result.mask.missing_count() as f64 / total
            );
            if let Some(anchor) = result.provenance.anchor_column {
                println!(
                    "anchor column {} (median {:.6}); gated columns {:?}",
                    anchor,
                    result.provenance.anchor_median.unwrap_or(f64::NAN),
                    result.provenance.gated_columns
                );
            } else if !result.provenance.gated_columns.is_empty() {
                println!("self-gated columns {:?}", result.provenance.gated_columns);
            }
            Ok(())
        }
        Command::Impute {
            input,
            schema,
            mask,
            method,
            seed,
            out,
            na,
            flags,
        } => {
            let schema = load_schema(&schema)?;
            let mut ds = load_dataset(&input, &schema, &na)?;
            if let Some(mask_path) = mask {
                let mask = mask_from_csv(&read_file(&mask_path)?, &schema)?;
                apply_mask(&mut ds, &mask)?;
            }
            let (x_hat, enc_mask, map) = encode(&ds)?;
            let cfg = flags.build();
            let rng = RngStream::new(seed);
            let (imputed, delta_trace) =
                impute_with_method(method.into(), &x_hat, &enc_mask, &map, &cfg, &rng)?;
            let mut complete = decode(imputed.matrix(), &map, &schema)?;
            complete.splice_label_from(&ds)?;
            write_file(&out, &write_csv(&complete))?;
            println!("imputed {} cells", enc_mask.missing_count());
            if !delta_trace.is_empty() {
                let formatted: Vec<String> =
                    delta_trace.iter().map(|d| format!("{d:.6}")).collect();
                println!("delta trace: [{}]", formatted.join(", "));
            }
            Ok(())
        }
        Command::Evaluate {
            truth,
            imputed,
            mask,
            schema,
            label,
            folds,
            seed,
            na,
        } => {
            let mut schema = load_schema(&schema)?;
            if let Some(label) = &label {
                if schema.column_index(label).is_none() {
                    return Err(Error::Config(format!(
                        "label column {label:?} not present in schema"
                    )));
                }
                schema = Schema::new(schema.columns().to_vec(), Some(label.clone()))?;
            }
            let truth_ds = load_dataset(&truth, &schema, &na)?;
            let imputed_ds = load_dataset(&imputed, &schema, &na)?;
            let mask = mask_from_csv(&read_file(&mask)?, &schema)?;
            let mut rng = RngStream::new(seed).child("evaluate");
            let outcome = evaluate(
                &truth_ds,
                &imputed_ds,
                &mask,
                folds,
                &LogisticConfig::default(),
                &mut rng,
            )?;
            println!("rmse = {:.6}", outcome.rmse);
            println!("missing_cells = {}", outcome.missing_cells);
            if let (Some(mean), Some(std)) = (outcome.auroc_mean, outcome.auroc_std) {
                println!("auroc = {mean:.4} +/- {std:.4}");
            }
            Ok(())
        }
        Command::Benchmark { config, out } => {
            let text = read_file(&config)?;
            let mut cfg = parse_experiment_config(&text)?;
            if let Some(base) = config.parent() {
                cfg.resolve_paths(base);
            }
            let out_base = out.or_else(|| cfg.output_path.clone()).ok_or_else(|| {
                Error::Config("no output path: pass --out or set `output`".into())
            })?;
            let report = run_benchmark(&cfg)?;
            let jsonl_path = out_base.with_extension("jsonl");
            let csv_path = out_base.with_extension("csv");
            write_file(&jsonl_path, &emit_report(&report, ReportFormat::JsonLines))?;
            write_file(&csv_path, &emit_report(&report, ReportFormat::CsvSummary))?;
            println!(
                "wrote {} records to {} and {} summaries to {}",
                report.records.len(),
                jsonl_path.display(),
                report.summaries.len(),
                csv_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
