//! The feature-specific adversarial imputer.
//!
//! Columns are visited in ascending missing-count order. For each column a
//! generator learns to predict it from all other columns on the rows where
//! it is observed, while a discriminator reads full rows and learns to tell
//! which rows carry an imputed entry in that column. The generator's update
//! subtracts a scaled discriminator loss taken on rows whose entry it
//! imputes, so it is pushed toward values the discriminator cannot flag.
//! Sweeps repeat until the normalized change between successive matrices
//! increases for the first time.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::dataframe::{
    sort_columns_by_missingness, split_four_parts, ColumnEncoding, EncodingMap, MaskMatrix,
};
use crate::error::{Error, Result};
use crate::neuralnet::{
    discriminator_loss, discriminator_output_gradient, generator_loss, generator_output_gradient,
    mlp_init, LossKind, Mlp, MlpSpec, TrainConfig,
};
use crate::numerics::{Matrix, RngStream};

#[derive(Debug, Clone)]
pub struct IfganConfig {
    pub train: TrainConfig,
    /// Disabling this removes the discriminators entirely, leaving a
    /// feature-specific regression imputer.
    pub use_discriminator: bool,
    /// Safety bound on the number of sweeps when the stopping statistic
    /// never increases.
    pub max_sweeps: usize,
    /// Keep per-column models across sweeps instead of refitting.
    pub warm_start: bool,
    /// Train the discriminator before the generator inside each round.
    pub discriminator_first: bool,
    /// Record batch row indices and discriminator targets for auditing.
    pub record_batches: bool,
    /// Hidden layer widths for the generators; `None` uses two layers of
    /// width `max(8, d')`.
    pub generator_hidden: Option<Vec<usize>>,
    /// Hidden layer widths for the discriminators; `None` uses two layers
    /// of width `max(8, d')`.
    pub discriminator_hidden: Option<Vec<usize>>,
}

impl Default for IfganConfig {
    fn default() -> IfganConfig {
        IfganConfig {
            train: TrainConfig::default(),
            use_discriminator: true,
            max_sweeps: 20,
            warm_start: false,
            discriminator_first: true,
            record_batches: false,
            generator_hidden: None,
            discriminator_hidden: None,
        }
    }
}

impl IfganConfig {
    /// The ablation variant: no discriminators, no adversarial term.
    pub fn without_discriminator() -> IfganConfig {
        IfganConfig {
            use_discriminator: false,
            ..IfganConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be >= 1".into()));
        }
        if self.use_discriminator && self.train.discriminator_steps == 0 {
            return Err(Error::Config(
                "discriminator_steps must be >= 1 when the discriminator is enabled".into(),
            ));
        }
        Ok(())
    }
}

/// Per-column loss traces of one sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ColumnTrace {
    pub sweep: usize,
    pub column: usize,
    pub generator_loss_start: f64,
    pub generator_loss_end: f64,
    pub discriminator_loss_start: Option<f64>,
    pub discriminator_loss_end: Option<f64>,
}

/// Which rows each model actually trained on, for leakage audits.
#[derive(Debug, Clone)]
pub struct BatchAudit {
    pub sweep: usize,
    pub column: usize,
    /// Rows whose observed target value entered the generator's fidelity loss.
    pub fidelity_rows: BTreeSet<usize>,
    /// Rows fed to the discriminator inside the generator's adversarial term.
    pub adversarial_rows: BTreeSet<usize>,
    /// Rows the discriminator trained on, with the targets it was given.
    pub discriminator_targets: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone)]
pub struct ImputeOutcome {
    pub matrix: Matrix,
    pub delta_trace: Vec<f64>,
    pub columns: Vec<ColumnTrace>,
    pub audits: Option<Vec<BatchAudit>>,
}

/// Copies the input and fills missing slots with i.i.d. uniform `[0, 1)`
/// draws; observed entries pass through unchanged.
pub fn initial_guess(x_hat: &Matrix, mask: &MaskMatrix, rng: &mut RngStream) -> Result<Matrix> {
    if x_hat.rows() != mask.rows() || x_hat.cols() != mask.cols() {
        return Err(Error::shape(
            "initial_guess",
            (x_hat.rows(), x_hat.cols()),
            (mask.rows(), mask.cols()),
        ));
    }
    let mut x = x_hat.clone();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            if !mask.observed(r, c) {
                x.set(r, c, rng.uniform_f64());
            }
        }
    }
    Ok(x)
}

/// Normalized squared change between successive imputed matrices:
/// `sum((x_new - x_old)^2) / sum(x_new^2)`.
pub fn delta(x_new: &Matrix, x_old: &Matrix) -> Result<f64> {
    if x_new.rows() != x_old.rows() || x_new.cols() != x_old.cols() {
        return Err(Error::shape(
            "delta",
            (x_new.rows(), x_new.cols()),
            (x_old.rows(), x_old.cols()),
        ));
    }
    let denom: f64 = x_new.values().iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::Numerical(
            "stopping statistic undefined for an all-zero matrix".into(),
        ));
    }
    let num: f64 = x_new
        .values()
        .iter()
        .zip(x_old.values())
        .map(|(n, o)| (n - o) * (n - o))
        .sum();
    Ok(num / denom)
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

/// Cycles through a row pool in mini-batches, reshuffling at each epoch
/// boundary so every epoch samples without replacement.
struct BatchCycler {
    pool: Vec<usize>,
    pos: usize,
    batch: usize,
    rng: RngStream,
}

impl BatchCycler {
    fn new(pool: Vec<usize>, batch: usize, mut rng: RngStream) -> BatchCycler {
        assert!(!pool.is_empty());
        let batch = batch.min(pool.len());
        let mut pool = pool;
        rng.shuffle(&mut pool);
        BatchCycler {
            pool,
            pos: 0,
            batch,
            rng,
        }
    }

    fn next_batch(&mut self) -> Vec<usize> {
        if self.pos + self.batch > self.pool.len() {
            self.rng.shuffle(&mut self.pool);
            self.pos = 0;
        }
        let out = self.pool[self.pos..self.pos + self.batch].to_vec();
        self.pos += self.batch;
        out
    }
}

struct ColumnModels {
    generator: Mlp,
    discriminator: Option<Mlp>,
}

fn discriminator_step(
    disc: &mut Mlp,
    cycler: &mut BatchCycler,
    x: &Matrix,
    targets_by_row: &[f64],
    learning_rate: f64,
    l2_lambda: f64,
    audit: &mut Option<BatchAudit>,
) -> Result<()> {
    let batch = cycler.next_batch();
    let inputs = gather_rows(x, &batch);
    let mut targets = Matrix::zeros(batch.len(), 1);
    for (i, &r) in batch.iter().enumerate() {
        targets.set(i, 0, targets_by_row[r]);
        if let Some(a) = audit {
            a.discriminator_targets
                .entry(r)
                .or_insert(targets_by_row[r]);
        }
    }
    let trace = disc.forward_trace(&inputs)?;
    let out_grad = discriminator_output_gradient(trace.output(), &targets)?;
    let (grads, _) = disc.backprop(&trace, &out_grad)?;
    disc.apply_step(&grads, learning_rate, l2_lambda);
    Ok(())
}

/// Working state of one imputation run.
pub struct ImputerState {
    x_current: Matrix,
    x_old: Matrix,
    mask: MaskMatrix,
    map: EncodingMap,
    column_order: Vec<usize>,
    delta_trace: Vec<f64>,
    sweep: usize,
    cfg: IfganConfig,
    root: RngStream,
    models: HashMap<usize, ColumnModels>,
    column_traces: Vec<ColumnTrace>,
    audits: Option<Vec<BatchAudit>>,
}

impl ImputerState {
    pub fn new(
        x_hat: &Matrix,
        mask: &MaskMatrix,
        map: &EncodingMap,
        cfg: &IfganConfig,
        rng: &RngStream,
    ) -> Result<ImputerState> {
        cfg.validate()?;
        if x_hat.cols() != map.encoded_width() {
            return Err(Error::shape(
                "impute",
                (x_hat.rows(), x_hat.cols()),
                (x_hat.rows(), map.encoded_width()),
            ));
        }
        for group in map.columns() {
            if mask.missing_in_column(group.start) == mask.rows() {
                return Err(Error::UnimputableColumn {
                    column: format!("group {}", group.raw_index),
                    reason: "no observed cells".into(),
                });
            }
        }

        let mut init_rng = rng.child("init");
        let mut x = initial_guess(x_hat, mask, &mut init_rng)?;
        // Constant columns are not imputable by a model; their encoded
        // constant is 0.
        for group in map.columns() {
            if !group.model_imputable() {
                for r in 0..x.rows() {
                    if !mask.observed(r, group.start) {
                        x.set(r, group.start, 0.0);
                    }
                }
            }
        }

        let order: Vec<usize> = sort_columns_by_missingness(mask, map)
            .into_iter()
            .filter(|&g| map.group(g).model_imputable())
            .collect();

        Ok(ImputerState {
            x_old: x.clone(),
            x_current: x,
            mask: mask.clone(),
            map: map.clone(),
            column_order: order,
            delta_trace: Vec::new(),
            sweep: 0,
            cfg: cfg.clone(),
            root: rng.clone(),
            models: HashMap::new(),
            column_traces: Vec::new(),
            audits: if cfg.record_batches {
                Some(Vec::new())
            } else {
                None
            },
        })
    }

    pub fn x_current(&self) -> &Matrix {
        &self.x_current
    }

    pub fn column_order(&self) -> &[usize] {
        &self.column_order
    }

    pub fn delta_trace(&self) -> &[f64] {
        &self.delta_trace
    }

    fn column_rng(&self, role: &str, column: usize) -> RngStream {
        let sweep = if self.cfg.warm_start && role.ends_with("init") {
            // Warm-started models are created once; key their init draw to
            // the column alone.
            0
        } else {
            self.sweep
        };
        self.root.child(&format!("{role}/s{sweep}/c{column}"))
    }

    /// Trains the column's generator (and discriminator, when enabled) and
    /// fills the column's missing entries with the generator's predictions.
    pub fn train_column(&mut self, column: usize) -> Result<()> {
        let group = self.map.group(column).clone();
        let view = split_four_parts(&self.x_current, &self.mask, &self.map, column)?;
        if view.obs_rows.is_empty() {
            return Err(Error::UnimputableColumn {
                column: format!("group {}", group.raw_index),
                reason: "no observed rows".into(),
            });
        }
        if view.mis_rows.is_empty() {
            return Ok(());
        }

        let d_prime = self.x_current.cols();
        let span = group.span();
        let loss_kind = match group.encoding {
            ColumnEncoding::Continuous { .. } => LossKind::Continuous,
            ColumnEncoding::Binary | ColumnEncoding::OneHot { .. } => LossKind::Binary,
        };

        // Inputs that stay fixed while this column trains: only the target
        // span changes, and the generator never reads its own column.
        let fid_inputs = view.others_obs(&self.x_current);
        let fid_targets = view.target_obs(&self.x_current);
        let mis_inputs = view.others_mis(&self.x_current);

        let (mut generator, mut discriminator) =
            self.take_models(column, d_prime, span.len(), loss_kind)?;

        let cfg = self.cfg.clone();
        let alpha = cfg.train.adversarial_alpha;
        let adversarial = cfg.use_discriminator && alpha != 0.0;

        let mut fid_cycler = BatchCycler::new(
            (0..view.obs_rows.len()).collect(),
            cfg.train.batch_size,
            self.column_rng("g-batch", column),
        );
        let mut adv_cycler = if adversarial {
            Some(BatchCycler::new(
                (0..view.mis_rows.len()).collect(),
                cfg.train.batch_size,
                self.column_rng("adv-batch", column),
            ))
        } else {
            None
        };
        let mut d_cycler = if cfg.use_discriminator {
            Some(BatchCycler::new(
                (0..self.x_current.rows()).collect(),
                cfg.train.batch_size,
                self.column_rng("d-batch", column),
            ))
        } else {
            None
        };

        let mut audit = cfg.record_batches.then(|| BatchAudit {
            sweep: self.sweep,
            column,
            fidelity_rows: BTreeSet::new(),
            adversarial_rows: BTreeSet::new(),
            discriminator_targets: BTreeMap::new(),
        });

        let g_loss_start =
            self.full_generator_loss(&generator, &fid_inputs, &fid_targets, loss_kind)?;
        let d_loss_start = match &discriminator {
            Some(d) => Some(self.full_discriminator_loss(d, &group)?),
            None => None,
        };

        let d_targets_by_row: Vec<f64> = (0..self.x_current.rows())
            .map(|r| {
                if self.mask.observed(r, group.start) {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();

        // Round layout: one discriminator step plus a share of the
        // generator budget per round, so both step totals are honored and
        // the two keep alternating.
        let rounds = if cfg.use_discriminator {
            let derived = cfg.train.discriminator_steps;
            cfg.train
                .max_inner_rounds
                .map_or(derived, |k| derived.min(k).max(1))
        } else {
            1
        };
        let g_budget = cfg.train.generator_steps;

        for round in 0..rounds {
            let g_steps = g_budget / rounds + usize::from(round < g_budget % rounds);

            if cfg.discriminator_first {
                if let (Some(disc), Some(cycler)) = (discriminator.as_mut(), d_cycler.as_mut()) {
                    discriminator_step(
                        disc,
                        cycler,
                        &self.x_current,
                        &d_targets_by_row,
                        cfg.train.learning_rate,
                        cfg.train.l2_lambda,
                        &mut audit,
                    )?;
                }
            }

            for _ in 0..g_steps {
                let batch = fid_cycler.next_batch();
                let inputs = gather_rows(&fid_inputs, &batch);
                let targets = gather_rows(&fid_targets, &batch);
                if let Some(a) = audit.as_mut() {
                    a.fidelity_rows
                        .extend(batch.iter().map(|&p| view.obs_rows[p]));
                }

                let trace = generator.forward_trace(&inputs)?;
                let fid_grad = generator_output_gradient(trace.output(), &targets, loss_kind)?;
                let (mut grads, _) = generator.backprop(&trace, &fid_grad)?;

                if let (Some(disc), Some(adv)) = (discriminator.as_ref(), adv_cycler.as_mut()) {
                    let adv_batch = adv.next_batch();
                    if let Some(a) = audit.as_mut() {
                        a.adversarial_rows
                            .extend(adv_batch.iter().map(|&p| view.mis_rows[p]));
                    }
                    let adv_inputs = gather_rows(&mis_inputs, &adv_batch);
                    let adv_trace = generator.forward_trace(&adv_inputs)?;
                    let adv_preds = adv_trace.output();

                    // Substitute the generator's fresh predictions into the
                    // target slots of the rows it imputes and ask the
                    // discriminator about them (ground truth: missing).
                    let mut d_inputs = Matrix::zeros(adv_batch.len(), d_prime);
                    for (i, &p) in adv_batch.iter().enumerate() {
                        let r = view.mis_rows[p];
                        for c in 0..d_prime {
                            d_inputs.set(i, c, self.x_current.get(r, c));
                        }
                        for (k, c) in span.clone().enumerate() {
                            d_inputs.set(i, c, adv_preds.get(i, k));
                        }
                    }
                    let ones = Matrix::from_vec(adv_batch.len(), 1, vec![1.0; adv_batch.len()])?;
                    let d_trace = disc.forward_trace(&d_inputs)?;
                    let d_out_grad = discriminator_output_gradient(d_trace.output(), &ones)?;
                    let (_, d_input_grad) = disc.backprop(&d_trace, &d_out_grad)?;

                    // The generator ascends the discriminator loss, so the
                    // gradient arriving at its output is -alpha times the
                    // loss gradient at those input slots.
                    let mut adv_grad = Matrix::zeros(adv_batch.len(), span.len());
                    for i in 0..adv_batch.len() {
                        for (k, c) in span.clone().enumerate() {
                            adv_grad.set(i, k, -alpha * d_input_grad.get(i, c));
                        }
                    }
                    let (adv_grads, _) = generator.backprop(&adv_trace, &adv_grad)?;
                    grads.add(&adv_grads);
                }

                generator.apply_step(&grads, cfg.train.learning_rate, cfg.train.l2_lambda);
            }

            if !cfg.discriminator_first {
                if let (Some(disc), Some(cycler)) = (discriminator.as_mut(), d_cycler.as_mut()) {
                    discriminator_step(
                        disc,
                        cycler,
                        &self.x_current,
                        &d_targets_by_row,
                        cfg.train.learning_rate,
                        cfg.train.l2_lambda,
                        &mut audit,
                    )?;
                }
            }

            // Fill the column's missing entries with the generator's current
            // predictions so the discriminator trains against them next
            // round; the final round leaves exactly the trained fill.
            if cfg.use_discriminator || round + 1 == rounds {
                let preds = generator.forward(&mis_inputs)?;
                for (pos, &r) in view.mis_rows.iter().enumerate() {
                    for (k, c) in span.clone().enumerate() {
                        self.x_current.set(r, c, preds.get(pos, k));
                    }
                }
            }
        }

        let g_loss_end =
            self.full_generator_loss(&generator, &fid_inputs, &fid_targets, loss_kind)?;
        let d_loss_end = match &discriminator {
            Some(d) => Some(self.full_discriminator_loss(d, &group)?),
            None => None,
        };
        self.column_traces.push(ColumnTrace {
            sweep: self.sweep,
            column,
            generator_loss_start: g_loss_start,
            generator_loss_end: g_loss_end,
            discriminator_loss_start: d_loss_start,
            discriminator_loss_end: d_loss_end,
        });
        if let (Some(all), Some(a)) = (self.audits.as_mut(), audit) {
            all.push(a);
        }

        if self.cfg.warm_start {
            self.models.insert(
                column,
                ColumnModels {
                    generator,
                    discriminator,
                },
            );
        }
        Ok(())
    }

    fn take_models(
        &mut self,
        column: usize,
        d_prime: usize,
        span_width: usize,
        loss_kind: LossKind,
    ) -> Result<(Mlp, Option<Mlp>)> {
        if self.cfg.warm_start {
            if let Some(m) = self.models.remove(&column) {
                return Ok((m.generator, m.discriminator));
            }
        }
        let mut g_rng = self.column_rng("g-init", column);
        let mut g_spec = MlpSpec::default_shape(d_prime - span_width, span_width, d_prime);
        if let Some(hidden) = &self.cfg.generator_hidden {
            g_spec.hidden_layers = hidden.clone();
        }
        let generator = mlp_init(&g_spec, loss_kind, &mut g_rng)?;
        let discriminator = if self.cfg.use_discriminator {
            let mut d_rng = self.column_rng("d-init", column);
            let mut d_spec = MlpSpec::default_shape(d_prime, 1, d_prime);
            if let Some(hidden) = &self.cfg.discriminator_hidden {
                d_spec.hidden_layers = hidden.clone();
            }
            Some(mlp_init(&d_spec, LossKind::Continuous, &mut d_rng)?)
        } else {
            None
        };
        Ok((generator, discriminator))
    }

    fn full_generator_loss(
        &self,
        generator: &Mlp,
        inputs: &Matrix,
        targets: &Matrix,
        kind: LossKind,
    ) -> Result<f64> {
        let preds = generator.forward(inputs)?;
        generator_loss(&preds, targets, kind, generator, self.cfg.train.l2_lambda)
    }

    fn full_discriminator_loss(
        &self,
        disc: &Mlp,
        group: &crate::dataframe::EncodedColumn,
    ) -> Result<f64> {
        let preds = disc.forward(&self.x_current)?;
        let mut truth = Matrix::zeros(self.x_current.rows(), 1);
        for r in 0..self.x_current.rows() {
            truth.set(
                r,
                0,
                if self.mask.observed(r, group.start) {
                    0.0
                } else {
                    1.0
                },
            );
        }
        discriminator_loss(&preds, &truth, disc, self.cfg.train.l2_lambda)
    }

    /// One full pass over the column order; returns the stopping statistic.
    pub fn sweep_once(&mut self) -> Result<f64> {
        self.sweep += 1;
        self.x_old = self.x_current.clone();
        let order = self.column_order.clone();
        for col in order {
            self.train_column(col)?;
        }
        let d = delta(&self.x_current, &self.x_old)?;
        self.delta_trace.push(d);
        Ok(d)
    }

    fn into_outcome(self, matrix: Matrix) -> ImputeOutcome {
        ImputeOutcome {
            matrix,
            delta_trace: self.delta_trace,
            columns: self.column_traces,
            audits: self.audits,
        }
    }
}

/// Runs the full imputation: initial uniform guess, column-ordered sweeps of
/// per-column adversarial training, and the first-increase stopping rule on
/// the matrix-change statistic. Returns the matrix from the sweep before the
/// statistic first increased (or the latest one if the sweep bound was hit),
/// with observed cells always bit-identical to the input.
pub fn impute(
    x_hat: &Matrix,
    mask: &MaskMatrix,
    map: &EncodingMap,
    cfg: &IfganConfig,
    rng: &RngStream,
) -> Result<ImputeOutcome> {
    let mut state = ImputerState::new(x_hat, mask, map, cfg, rng)?;
    if state.column_order.is_empty() {
        let matrix = state.x_current.clone();
        return Ok(state.into_outcome(matrix));
    }
    for _ in 0..cfg.max_sweeps {
        state.sweep_once()?;
        let n = state.delta_trace.len();
        if n >= 2 && state.delta_trace[n - 1] > state.delta_trace[n - 2] {
            // First increase: the previous sweep's matrix is the answer.
            let matrix = state.x_old.clone();
            return Ok(state.into_outcome(matrix));
        }
    }
    let matrix = state.x_current.clone();
    Ok(state.into_outcome(matrix))
}

/// Convenience handle for the ablation: identical pipeline with the
/// discriminators disabled.
pub fn impute_without_discriminator(
    x_hat: &Matrix,
    mask: &MaskMatrix,
    map: &EncodingMap,
    cfg: &IfganConfig,
    rng: &RngStream,
) -> Result<ImputeOutcome> {
    let cfg = IfganConfig {
        use_discriminator: false,
        ..cfg.clone()
    };
    impute(x_hat, mask, map, &cfg, rng)
}
