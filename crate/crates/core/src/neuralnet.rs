//! Small multilayer perceptrons with analytic backpropagation, the generator
//! and discriminator losses, L2 regularization, and plain SGD updates.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

/// Sigmoid outputs are clamped to this band before any cross-entropy, whose
/// element-wise loss is undefined at exactly 0 or 1.
pub const SIGMOID_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
            }
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation value itself.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Element-wise loss family of a network's output units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Squared error `(x' - x)^2`.
    Continuous,
    /// Cross-entropy `-x log x' - (1 - x) log(1 - x')`.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    /// Two tanh hidden layers of width `max(8, reference_width)` and a
    /// sigmoid output, the default shape for generators and discriminators.
    pub fn default_shape(input_dim: usize, output_dim: usize, reference_width: usize) -> MlpSpec {
        let w = reference_width.max(8);
        MlpSpec {
            input_dim,
            hidden_layers: vec![w, w],
            output_dim,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Sigmoid,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers.contains(&0) {
            return Err(Error::Config("all layer dimensions must be >= 1".into()));
        }
        Ok(())
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut prev = self.input_dim;
        for &h in &self.hidden_layers {
            dims.push((h, prev));
            prev = h;
        }
        dims.push((self.output_dim, prev));
        dims
    }
}

#[derive(Debug, Clone)]
struct Layer {
    /// out_dim x in_dim.
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

/// One feature-specific generator or discriminator: layer weights plus the
/// element-wise loss its output units train against.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
    loss_kind: LossKind,
}

/// Weights drawn uniform on the symmetric fan bound
/// `sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn mlp_init(spec: &MlpSpec, loss_kind: LossKind, rng: &mut RngStream) -> Result<Mlp> {
    spec.validate()?;
    let mut layers = Vec::new();
    let dims = spec.layer_dims();
    let last = dims.len() - 1;
    for (li, (out_dim, in_dim)) in dims.into_iter().enumerate() {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<f64> = (0..out_dim * in_dim)
            .map(|_| (rng.uniform_f64() * 2.0 - 1.0) * bound)
            .collect();
        layers.push(Layer {
            weights: Matrix::from_vec(out_dim, in_dim, data)?,
            bias: vec![0.0; out_dim],
            activation: if li == last {
                spec.output_activation
            } else {
                spec.hidden_activation
            },
        });
    }
    Ok(Mlp {
        spec: spec.clone(),
        layers,
        loss_kind,
    })
}

/// Per-layer activations recorded during a forward pass; index 0 is the
/// input batch, the last entry is the network output.
pub struct ForwardTrace {
    activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("at least the input")
    }
}

/// Per-layer parameter gradients.
pub struct Gradients {
    w: Vec<Matrix>,
    b: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add(&mut self, other: &Gradients) {
        for (mine, theirs) in self.w.iter_mut().zip(&other.w) {
            for r in 0..mine.rows() {
                for c in 0..mine.cols() {
                    mine.set(r, c, mine.get(r, c) + theirs.get(r, c));
                }
            }
        }
        for (mine, theirs) in self.b.iter_mut().zip(&other.b) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
    }
}

impl Mlp {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// Maximum absolute weight, for fan-bound checks.
    pub fn max_abs_weight(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.values())
            .fold(0.0, |acc: f64, &w| acc.max(w.abs()))
    }

    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.weights.rows(), l.weights.cols()))
            .collect()
    }

    /// Sum of squared weights (biases excluded), the L2 regularizer body.
    pub fn weight_squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.values())
            .map(|w| w * w)
            .sum()
    }

    pub fn squared_weight_norm_per_layer(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.weights.values().iter().map(|w| w * w).sum())
            .collect()
    }

    pub fn forward_trace(&self, batch: &Matrix) -> Result<ForwardTrace> {
        if batch.cols() != self.spec.input_dim {
            return Err(Error::shape(
                "forward",
                (batch.rows(), batch.cols()),
                (batch.rows(), self.spec.input_dim),
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.clone());
        for layer in &self.layers {
            let prev = activations.last().expect("input pushed above");
            let mut out = Matrix::zeros(prev.rows(), layer.weights.rows());
            for r in 0..prev.rows() {
                let a_row = prev.row(r);
                for o in 0..layer.weights.rows() {
                    let w_row = layer.weights.row(o);
                    let mut z = layer.bias[o];
                    for (a, w) in a_row.iter().zip(w_row) {
                        z += a * w;
                    }
                    out.set(r, o, layer.activation.apply(z));
                }
            }
            activations.push(out);
        }
        Ok(ForwardTrace { activations })
    }

    /// Row-wise network outputs for a batch.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        let mut trace = self.forward_trace(batch)?;
        Ok(trace.activations.pop().expect("trace holds the input"))
    }

    /// Backpropagates a loss gradient taken at the network output
    /// (post-activation). Returns parameter gradients of the data term and
    /// the gradient with respect to the input batch.
    pub fn backprop(
        &self,
        trace: &ForwardTrace,
        output_gradient: &Matrix,
    ) -> Result<(Gradients, Matrix)> {
        let n_layers = self.layers.len();
        let out = trace.output();
        if output_gradient.rows() != out.rows() || output_gradient.cols() != out.cols() {
            return Err(Error::shape(
                "backprop",
                (output_gradient.rows(), output_gradient.cols()),
                (out.rows(), out.cols()),
            ));
        }

        let mut w_grads: Vec<Matrix> = self
            .layers
            .iter()
            .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
            .collect();
        let mut b_grads: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.bias.len()])
            .collect();

        // delta = dL/dz at the current layer.
        let mut delta = {
            let a = trace.output();
            let mut d = Matrix::zeros(a.rows(), a.cols());
            let act = self.layers[n_layers - 1].activation;
            for r in 0..a.rows() {
                for c in 0..a.cols() {
                    d.set(
                        r,
                        c,
                        output_gradient.get(r, c) * act.derivative_from_output(a.get(r, c)),
                    );
                }
            }
            d
        };

        for li in (0..n_layers).rev() {
            let input = &trace.activations[li];
            // dW = delta^T . input, db = column sums of delta
            for r in 0..delta.rows() {
                let d_row = delta.row(r);
                let in_row = input.row(r);
                for (o, &d) in d_row.iter().enumerate() {
                    b_grads[li][o] += d;
                    let grad = &mut w_grads[li];
                    for (k, &a) in in_row.iter().enumerate() {
                        grad.set(o, k, grad.get(o, k) + d * a);
                    }
                }
            }
            // propagate: delta_prev = (delta . W) * act'(a_prev)
            let mut prev_delta = Matrix::zeros(input.rows(), input.cols());
            for r in 0..delta.rows() {
                let d_row = delta.row(r);
                for (o, &d) in d_row.iter().enumerate() {
                    let w_row = self.layers[li].weights.row(o);
                    for (k, &w) in w_row.iter().enumerate() {
                        prev_delta.set(r, k, prev_delta.get(r, k) + d * w);
                    }
                }
            }
            if li > 0 {
                let act = self.layers[li - 1].activation;
                for r in 0..prev_delta.rows() {
                    for c in 0..prev_delta.cols() {
                        let a = input.get(r, c);
                        prev_delta.set(r, c, prev_delta.get(r, c) * act.derivative_from_output(a));
                    }
                }
            }
            delta = prev_delta;
        }

        Ok((
            Gradients {
                w: w_grads,
                b: b_grads,
            },
            delta,
        ))
    }

    /// One SGD step: `w <- w - lr * (grad + 2 * lambda * w)`; biases update
    /// without the regularization term.
    pub fn apply_step(&mut self, grads: &Gradients, learning_rate: f64, l2_lambda: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads.w.iter().zip(&grads.b)) {
            for r in 0..layer.weights.rows() {
                for c in 0..layer.weights.cols() {
                    let w = layer.weights.get(r, c);
                    layer.weights.set(
                        r,
                        c,
                        w - learning_rate * (gw.get(r, c) + 2.0 * l2_lambda * w),
                    );
                }
            }
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= learning_rate * g;
            }
        }
    }
}

fn check_same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::shape(op, (a.rows(), a.cols()), (b.rows(), b.cols())));
    }
    Ok(())
}

fn element_loss(pred: f64, target: f64, kind: LossKind) -> Result<f64> {
    match kind {
        LossKind::Continuous => Ok((pred - target) * (pred - target)),
        LossKind::Binary => {
            if !(0.0..=1.0).contains(&pred) {
                return Err(Error::Domain(format!(
                    "binary prediction {pred} outside [0, 1]"
                )));
            }
            let p = pred.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP);
            Ok(-target * p.ln() - (1.0 - target) * (1.0 - p).ln())
        }
    }
}

/// Generator loss: element-wise loss summed over the batch plus
/// `lambda * sum(w^2)` over the network's weight matrices.
pub fn generator_loss(
    pred: &Matrix,
    target: &Matrix,
    kind: LossKind,
    net: &Mlp,
    l2_lambda: f64,
) -> Result<f64> {
    check_same_shape("generator_loss", pred, target)?;
    let mut total = 0.0;
    for (p, t) in pred.values().iter().zip(target.values()) {
        total += element_loss(*p, *t, kind)?;
    }
    Ok(total + l2_lambda * net.weight_squared_norm())
}

/// Discriminator loss: `sum((m' - m)^2) + lambda * sum(w^2)`.
pub fn discriminator_loss(
    pred: &Matrix,
    mask_truth: &Matrix,
    net: &Mlp,
    l2_lambda: f64,
) -> Result<f64> {
    check_same_shape("discriminator_loss", pred, mask_truth)?;
    let mut total = 0.0;
    for (p, m) in pred.values().iter().zip(mask_truth.values()) {
        let d = p - m;
        total += d * d;
    }
    Ok(total + l2_lambda * net.weight_squared_norm())
}

/// Gradient of the summed element-wise generator loss at the output.
pub fn generator_output_gradient(pred: &Matrix, target: &Matrix, kind: LossKind) -> Result<Matrix> {
    check_same_shape("generator_output_gradient", pred, target)?;
    let mut out = Matrix::zeros(pred.rows(), pred.cols());
    for r in 0..pred.rows() {
        for c in 0..pred.cols() {
            let p = pred.get(r, c);
            let t = target.get(r, c);
            let g = match kind {
                LossKind::Continuous => 2.0 * (p - t),
                LossKind::Binary => {
                    let pc = p.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP);
                    (pc - t) / (pc * (1.0 - pc))
                }
            };
            out.set(r, c, g);
        }
    }
    Ok(out)
}

/// Gradient of the summed squared discriminator loss at the output.
pub fn discriminator_output_gradient(pred: &Matrix, mask_truth: &Matrix) -> Result<Matrix> {
    check_same_shape("discriminator_output_gradient", pred, mask_truth)?;
    let mut out = Matrix::zeros(pred.rows(), pred.cols());
    for r in 0..pred.rows() {
        for c in 0..pred.cols() {
            out.set(r, c, 2.0 * (pred.get(r, c) - mask_truth.get(r, c)));
        }
    }
    Ok(out)
}

/// Training hyperparameters shared by generator and discriminator updates.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_lambda: f64,
    /// Weight of the adversarial term in the generator update.
    pub adversarial_alpha: f64,
    /// Generator SGD steps per column per sweep.
    pub generator_steps: usize,
    /// Discriminator SGD steps per column per sweep.
    pub discriminator_steps: usize,
    /// Optional cap on the interleaved (1 discriminator, k generator)
    /// rounds; `None` derives the round count from the step budgets.
    pub max_inner_rounds: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 200,
            l2_lambda: 0.5,
            adversarial_alpha: 0.01,
            generator_steps: 500,
            discriminator_steps: 100,
            max_inner_rounds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adversarial_alpha", self.adversarial_alpha),
        ];
        for (name, v) in positive {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.l2_lambda < 0.0 || !self.l2_lambda.is_finite() {
            return Err(Error::Config("l2_lambda must be non-negative".into()));
        }
        if self.batch_size == 0 || self.generator_steps == 0 {
            return Err(Error::Config(
                "batch_size and generator_steps must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One SGD step from a loss gradient taken at the network output; includes
/// the `2 * lambda * w` regularization term on weights.
pub fn backward_and_step(
    net: &mut Mlp,
    batch: &Matrix,
    loss_gradient_at_output: &Matrix,
    cfg: &TrainConfig,
) -> Result<()> {
    let trace = net.forward_trace(batch)?;
    let (grads, _) = net.backprop(&trace, loss_gradient_at_output)?;
    net.apply_step(&grads, cfg.learning_rate, cfg.l2_lambda);
    Ok(())
}

fn loss_for_check(
    net: &Mlp,
    batch: &Matrix,
    targets: &Matrix,
    kind: LossKind,
    l2: f64,
) -> Result<f64> {
    let pred = net.forward(batch)?;
    generator_loss(&pred, targets, kind, net, l2)
}

fn analytic_gradients(
    net: &Mlp,
    batch: &Matrix,
    targets: &Matrix,
    kind: LossKind,
    l2: f64,
) -> Result<Gradients> {
    let trace = net.forward_trace(batch)?;
    let out_grad = generator_output_gradient(trace.output(), targets, kind)?;
    let (mut grads, _) = net.backprop(&trace, &out_grad)?;
    for (gw, layer) in grads.w.iter_mut().zip(&net.layers) {
        for r in 0..gw.rows() {
            for c in 0..gw.cols() {
                gw.set(r, c, gw.get(r, c) + 2.0 * l2 * layer.weights.get(r, c));
            }
        }
    }
    Ok(grads)
}

/// Compares analytic gradients against central finite differences
/// (h = 1e-5) over every parameter; returns the maximum relative error
/// `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`.
pub fn gradient_check(
    net: &Mlp,
    batch: &Matrix,
    targets: &Matrix,
    kind: LossKind,
    l2_lambda: f64,
) -> Result<f64> {
    const H: f64 = 1e-5;
    let analytic = analytic_gradients(net, batch, targets, kind, l2_lambda)?;
    let mut max_err: f64 = 0.0;

    let mut probe = |g_a: f64, perturb: &mut dyn FnMut(&mut Mlp, f64)| -> Result<()> {
        let mut plus = net.clone();
        perturb(&mut plus, H);
        let mut minus = net.clone();
        perturb(&mut minus, -H);
        let lp = loss_for_check(&plus, batch, targets, kind, l2_lambda)?;
        let lm = loss_for_check(&minus, batch, targets, kind, l2_lambda)?;
        let g_n = (lp - lm) / (2.0 * H);
        let err = (g_a - g_n).abs() / (g_a.abs() + g_n.abs()).max(1e-8);
        max_err = max_err.max(err);
        Ok(())
    };

    for li in 0..net.layers.len() {
        let (rows, cols) = (net.layers[li].weights.rows(), net.layers[li].weights.cols());
        for r in 0..rows {
            for c in 0..cols {
                probe(analytic.w[li].get(r, c), &mut |m: &mut Mlp, h: f64| {
                    let w = m.layers[li].weights.get(r, c);
                    m.layers[li].weights.set(r, c, w + h);
                })?;
            }
        }
        for bi in 0..net.layers[li].bias.len() {
            probe(analytic.b[li][bi], &mut |m: &mut Mlp, h: f64| {
                m.layers[li].bias[bi] += h;
            })?;
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::uniform_matrix;

    fn spec(input: usize, hidden: Vec<usize>, output: usize, out_act: Activation) -> MlpSpec {
        MlpSpec {
            input_dim: input,
            hidden_layers: hidden,
            output_dim: output,
            hidden_activation: Activation::Tanh,
            output_activation: out_act,
        }
    }

    #[test]
    fn init_shapes_chain() {
        let net = mlp_init(
            &spec(2, vec![3], 1, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(1),
        )
        .unwrap();
        assert_eq!(net.weight_shapes(), vec![(3, 2), (1, 3)]);
        assert_eq!(net.layers[0].bias.len(), 3);
        assert_eq!(net.layers[1].bias.len(), 1);
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn init_is_deterministic() {
        let s = spec(4, vec![5, 3], 2, Activation::Sigmoid);
        let a = mlp_init(&s, LossKind::Binary, &mut RngStream::new(9)).unwrap();
        let b = mlp_init(&s, LossKind::Binary, &mut RngStream::new(9)).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            assert_eq!(la.weights, lb.weights);
        }
    }

    #[test]
    fn init_respects_fan_bound() {
        let net = mlp_init(
            &spec(100, vec![100], 1, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(2),
        )
        .unwrap();
        let bound = (6.0 / 200.0_f64).sqrt();
        for &w in net.layers[0].weights.values() {
            assert!(w.abs() <= bound, "{w} exceeds {bound}");
        }
    }

    #[test]
    fn forward_zero_weights() {
        let mut net = mlp_init(
            &spec(3, vec![4], 2, Activation::Sigmoid),
            LossKind::Binary,
            &mut RngStream::new(3),
        )
        .unwrap();
        for layer in &mut net.layers {
            let z = Matrix::zeros(layer.weights.rows(), layer.weights.cols());
            layer.weights = z;
        }
        let batch = uniform_matrix(5, 3, &mut RngStream::new(4)).unwrap();
        let out = net.forward(&batch).unwrap();
        for &v in out.values() {
            assert_eq!(v, 0.5);
        }

        net.layers.last_mut().unwrap().activation = Activation::Identity;
        let out = net.forward(&batch).unwrap();
        for &v in out.values() {
            assert_eq!(v, 0.0);
        }
    }

    /// Second straight-line forward implementation used as an oracle.
    fn forward_oracle(net: &Mlp, batch: &Matrix) -> Matrix {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for r in 0..batch.rows() {
            let mut cur: Vec<f64> = batch.row(r).to_vec();
            for layer in &net.layers {
                let mut next = Vec::with_capacity(layer.bias.len());
                for o in 0..layer.bias.len() {
                    let mut z = layer.bias[o];
                    for (k, &v) in cur.iter().enumerate() {
                        z += layer.weights.get(o, k) * v;
                    }
                    next.push(layer.activation.apply(z));
                }
                cur = next;
            }
            rows.push(cur);
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn forward_matches_independent_oracle() {
        let net = mlp_init(
            &spec(6, vec![5, 4], 3, Activation::Sigmoid),
            LossKind::Binary,
            &mut RngStream::new(5),
        )
        .unwrap();
        let batch = uniform_matrix(7, 6, &mut RngStream::new(6)).unwrap();
        let fast = net.forward(&batch).unwrap();
        let slow = forward_oracle(&net, &batch);
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_pure() {
        let net = mlp_init(
            &spec(4, vec![4], 2, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(7),
        )
        .unwrap();
        let batch = uniform_matrix(3, 4, &mut RngStream::new(8)).unwrap();
        let a = net.forward(&batch).unwrap();
        let b = net.forward(&batch).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_loss_closed_forms() {
        let net = mlp_init(
            &spec(1, vec![2], 1, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(9),
        )
        .unwrap();

        let pred = Matrix::from_rows(&[vec![0.3]]).unwrap();
        assert_eq!(
            generator_loss(&pred, &pred, LossKind::Continuous, &net, 0.0).unwrap(),
            0.0
        );

        let pred = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let target = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let l = generator_loss(&pred, &target, LossKind::Binary, &net, 0.0).unwrap();
        assert!((l - 0.5_f64.ln().abs()).abs() < 1e-12, "{l}");

        let pred = Matrix::from_rows(&[vec![0.2, 0.5]]).unwrap();
        let target = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let l = generator_loss(&pred, &target, LossKind::Continuous, &net, 0.0).unwrap();
        assert!((l - 0.29).abs() < 1e-12);
    }

    #[test]
    fn binary_loss_rejects_out_of_domain_predictions() {
        let net = mlp_init(
            &spec(1, vec![2], 1, Activation::Sigmoid),
            LossKind::Binary,
            &mut RngStream::new(10),
        )
        .unwrap();
        let pred = Matrix::from_rows(&[vec![1.5]]).unwrap();
        let target = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(generator_loss(&pred, &target, LossKind::Binary, &net, 0.0).is_err());
    }

    #[test]
    fn discriminator_loss_cases() {
        let net = mlp_init(
            &spec(2, vec![2], 1, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(11),
        )
        .unwrap();
        let truth = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(discriminator_loss(&truth, &truth, &net, 0.0).unwrap(), 0.0);

        let pred = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let t = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!((discriminator_loss(&pred, &t, &net, 0.0).unwrap() - 0.25).abs() < 1e-15);

        // random pair vs direct summation oracle
        let mut rng = RngStream::new(12);
        let p = uniform_matrix(6, 3, &mut rng).unwrap();
        let q = uniform_matrix(6, 3, &mut rng).unwrap();
        let direct: f64 = p
            .values()
            .iter()
            .zip(q.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let got = discriminator_loss(&p, &q, &net, 0.0).unwrap();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_output_gradient_leaves_weights_unchanged() {
        let mut net = mlp_init(
            &spec(2, vec![3], 1, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(13),
        )
        .unwrap();
        let before = net.clone();
        let batch = uniform_matrix(4, 2, &mut RngStream::new(14)).unwrap();
        let zero_grad = Matrix::zeros(4, 1);
        let cfg = TrainConfig {
            l2_lambda: 0.0,
            ..TrainConfig::default()
        };
        backward_and_step(&mut net, &batch, &zero_grad, &cfg).unwrap();
        for (a, b) in net.layers.iter().zip(&before.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn single_linear_neuron_reproduces_hand_computed_step() {
        // w <- w - lr * 2 (w x - y) x for one sample
        let s = MlpSpec {
            input_dim: 1,
            hidden_layers: vec![],
            output_dim: 1,
            hidden_activation: Activation::Identity,
            output_activation: Activation::Identity,
        };
        let mut net = mlp_init(&s, LossKind::Continuous, &mut RngStream::new(15)).unwrap();
        let w0 = net.layers[0].weights.get(0, 0);
        let (x, y) = (0.7, 0.2);
        let lr = 0.05;

        let batch = Matrix::from_rows(&[vec![x]]).unwrap();
        let target = Matrix::from_rows(&[vec![y]]).unwrap();
        let pred = net.forward(&batch).unwrap();
        let grad = generator_output_gradient(&pred, &target, LossKind::Continuous).unwrap();
        let cfg = TrainConfig {
            learning_rate: lr,
            l2_lambda: 0.0,
            ..TrainConfig::default()
        };
        backward_and_step(&mut net, &batch, &grad, &cfg).unwrap();

        let expect = w0 - lr * 2.0 * (w0 * x - y) * x;
        let got = net.layers[0].weights.get(0, 0);
        assert!((got - expect).abs() < 1e-15, "{got} vs {expect}");
    }

    #[test]
    fn pure_weight_decay_shrinks_norm() {
        let mut net = mlp_init(
            &spec(3, vec![4], 2, Activation::Sigmoid),
            LossKind::Continuous,
            &mut RngStream::new(16),
        )
        .unwrap();
        let before = net.weight_squared_norm();
        let batch = uniform_matrix(2, 3, &mut RngStream::new(17)).unwrap();
        let zero = Matrix::zeros(2, 2);
        let cfg = TrainConfig {
            l2_lambda: 0.5,
            ..TrainConfig::default()
        };
        backward_and_step(&mut net, &batch, &zero, &cfg).unwrap();
        assert!(net.weight_squared_norm() < before);
    }

    #[test]
    fn gradient_check_continuous_binary_and_regularized() {
        let mut rng = RngStream::new(18);
        for (kind, l2, out_act) in [
            (LossKind::Continuous, 0.0, Activation::Sigmoid),
            (LossKind::Binary, 0.0, Activation::Sigmoid),
            (LossKind::Continuous, 0.5, Activation::Sigmoid),
            (LossKind::Binary, 0.5, Activation::Sigmoid),
            (LossKind::Continuous, 0.5, Activation::Identity),
        ] {
            let s = spec(4, vec![5], 2, out_act);
            let net = mlp_init(&s, kind, &mut rng).unwrap();
            let batch = uniform_matrix(6, 4, &mut rng).unwrap();
            let targets = match kind {
                LossKind::Continuous => uniform_matrix(6, 2, &mut rng).unwrap(),
                LossKind::Binary => uniform_matrix(6, 2, &mut rng)
                    .unwrap()
                    .map(|v| f64::from(v > 0.5)),
            };
            let err = gradient_check(&net, &batch, &targets, kind, l2).unwrap();
            assert!(err < 1e-5, "kind {kind:?} l2 {l2}: rel err {err}");
        }
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let mut rng = RngStream::new(19);
        let s = spec(3, vec![6], 1, Activation::Sigmoid);
        let mut net = mlp_init(&s, LossKind::Continuous, &mut rng).unwrap();
        let batch = uniform_matrix(8, 3, &mut rng).unwrap();
        let targets = uniform_matrix(8, 1, &mut rng).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            l2_lambda: 0.0,
            ..TrainConfig::default()
        };
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let pred = net.forward(&batch).unwrap();
            let loss = generator_loss(&pred, &targets, LossKind::Continuous, &net, 0.0).unwrap();
            assert!(loss <= prev + 1e-12, "loss increased: {prev} -> {loss}");
            prev = loss;
            let grad = generator_output_gradient(&pred, &targets, LossKind::Continuous).unwrap();
            backward_and_step(&mut net, &batch, &grad, &cfg).unwrap();
        }
    }
}
