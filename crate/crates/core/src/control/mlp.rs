//! Feedforward multilayer perceptron with batch backpropagation.
//!
//! Hidden layers use the saturating hyperbolic tangent, the output layer is
//! identity, and training is plain full-batch gradient descent on the mean
//! squared error. This is deliberately the textbook algorithm — the
//! controller networks are small (tens of weights) and trained offline, so
//! clarity and reproducibility beat sophistication.
//!
//! # Example
//!
//! ```
//! use mldrive::control::mlp::Mlp;
//!
//! let net = Mlp::new_seeded(&[3, 8, 1], 42);
//! let y = net.forward(&[0.1, -0.2, 0.3]).unwrap();
//! assert_eq!(y.len(), 1);
//! ```

use crate::error::{DriveError, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Activation applied element-wise after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Saturating hyperbolic tangent (hidden layers).
    Tanh,
    /// Identity (output layer).
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation value `a = f(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer: `rows` outputs, `cols` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Weight matrix, row-major: `w[out][in]`.
    pub w: Vec<Vec<f64>>,
    /// Bias per output.
    pub b: Vec<f64>,
    pub activation: Activation,
}

/// A feedforward network as a stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Builds a net with the given layer sizes (`dims[0]` inputs through
    /// `dims.last()` outputs), tanh hidden layers, identity output, and all
    /// weights and biases drawn uniformly from [−0.5, 0.5] by a seeded
    /// generator so runs are reproducible.
    pub fn new_seeded(dims: &[usize], seed: u64) -> Mlp {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 1..dims.len() {
            let activation = if l == dims.len() - 1 {
                Activation::Identity
            } else {
                Activation::Tanh
            };
            let w = (0..dims[l])
                .map(|_| (0..dims[l - 1]).map(|_| rng.gen_range(-0.5..0.5)).collect())
                .collect();
            let b = (0..dims[l]).map(|_| rng.gen_range(-0.5..0.5)).collect();
            layers.push(Layer { w, b, activation });
        }
        Mlp { layers }
    }

    /// Builds a zeroed net with the given layer sizes.
    pub fn zeroed(dims: &[usize]) -> Mlp {
        let mut net = Mlp::new_seeded(dims, 0);
        for layer in &mut net.layers {
            for row in &mut layer.w {
                row.iter_mut().for_each(|w| *w = 0.0);
            }
            layer.b.iter_mut().for_each(|b| *b = 0.0);
        }
        net
    }

    /// Input dimension of the first layer.
    pub fn input_dim(&self) -> usize {
        self.layers[0].w[0].len()
    }

    /// Output dimension of the last layer.
    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.b.len()).unwrap_or(0)
    }

    /// Evaluates the network on `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.pop().unwrap())
    }

    /// Evaluates the network keeping every layer's activation (index 0 is
    /// the input itself) — the data backpropagation needs.
    fn forward_trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim() {
            return Err(DriveError::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut activations = vec![x.to_vec()];
        for layer in &self.layers {
            let prev = activations.last().unwrap();
            let mut out = Vec::with_capacity(layer.b.len());
            for (row, &bias) in layer.w.iter().zip(&layer.b) {
                let z = row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + bias;
                out.push(layer.activation.apply(z));
            }
            activations.push(out);
        }
        Ok(activations)
    }
}

/// Evaluates `net` on `x`; thin functional wrapper over [`Mlp::forward`].
pub fn mlp_forward(net: &Mlp, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

/// Mean squared error of the network over a dataset (mean over samples and
/// output components).
pub fn mse(net: &Mlp, data: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, t) in data {
        let y = net.forward(x)?;
        if y.len() != t.len() {
            return Err(DriveError::ShapeMismatch(format!(
                "target has {} components, network emits {}",
                t.len(),
                y.len()
            )));
        }
        total += y.iter().zip(t).map(|(yi, ti)| (yi - ti).powi(2)).sum::<f64>();
        count += t.len();
    }
    Ok(total / count as f64)
}

/// Gradient of the dataset MSE with respect to every weight and bias,
/// shaped exactly like the network.
fn gradient(net: &Mlp, data: &[(Vec<f64>, Vec<f64>)]) -> Result<Mlp> {
    let mut grad = net.clone();
    for layer in &mut grad.layers {
        for row in &mut layer.w {
            row.iter_mut().for_each(|w| *w = 0.0);
        }
        layer.b.iter_mut().for_each(|b| *b = 0.0);
    }
    let norm = 2.0 / (data.len() * net.output_dim()) as f64;
    for (x, t) in data {
        let activations = net.forward_trace(x)?;
        let out = activations.last().unwrap();
        if out.len() != t.len() {
            return Err(DriveError::ShapeMismatch(format!(
                "target has {} components, network emits {}",
                t.len(),
                out.len()
            )));
        }
        // Output-layer delta for MSE with identity output: (y − t) times
        // the activation derivative (1 for identity, kept general).
        let mut delta: Vec<f64> = out
            .iter()
            .zip(t)
            .map(|(y, ti)| {
                (y - ti)
                    * net
                        .layers
                        .last()
                        .unwrap()
                        .activation
                        .derivative_from_output(*y)
            })
            .collect();
        for l in (0..net.layers.len()).rev() {
            let prev_act = &activations[l];
            for (j, &d) in delta.iter().enumerate() {
                for (k, &a) in prev_act.iter().enumerate() {
                    grad.layers[l].w[j][k] += norm * d * a;
                }
                grad.layers[l].b[j] += norm * d;
            }
            if l > 0 {
                let layer = &net.layers[l];
                let act = &net.layers[l - 1].activation;
                delta = (0..prev_act.len())
                    .map(|k| {
                        let back: f64 =
                            delta.iter().enumerate().map(|(j, d)| layer.w[j][k] * d).sum();
                        back * act.derivative_from_output(prev_act[k])
                    })
                    .collect();
            }
        }
    }
    Ok(grad)
}

/// Full-batch gradient descent on the dataset MSE. Returns the per-epoch
/// loss history (evaluated before each update, length = `epochs`). A loss
/// that leaves the finite range aborts with the last finite epoch index.
pub fn train_backprop(
    net: &mut Mlp,
    data: &[(Vec<f64>, Vec<f64>)],
    lr: f64,
    epochs: usize,
) -> Result<Vec<f64>> {
    if !(lr > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!("learning rate must be positive, got {lr}"),
        });
    }
    if data.is_empty() {
        return Err(DriveError::Config {
            line: 0,
            message: "training dataset is empty".into(),
        });
    }
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let loss = mse(net, data)?;
        if !loss.is_finite() {
            return Err(DriveError::TrainingDiverged {
                epoch: epoch.saturating_sub(1),
            });
        }
        history.push(loss);
        let grad = gradient(net, data)?;
        for (layer, g_layer) in net.layers.iter_mut().zip(&grad.layers) {
            for (row, g_row) in layer.w.iter_mut().zip(&g_layer.w) {
                for (w, g) in row.iter_mut().zip(g_row) {
                    *w -= lr * g;
                }
            }
            for (b, g) in layer.b.iter_mut().zip(&g_layer.b) {
                *b -= lr * g;
            }
        }
    }
    Ok(history)
}

// ──────────────────────────────────────────────────────────────────────────
// Plain-text persistence
// ──────────────────────────────────────────────────────────────────────────

/// Serializes a network: header `mlp v1 <dims>`, then per layer one line of
/// row-major weights and one of biases, shortest exact decimals.
pub fn save_mlp(net: &Mlp) -> String {
    let mut dims = vec![net.input_dim()];
    dims.extend(net.layers.iter().map(|l| l.b.len()));
    let mut out = format!(
        "mlp v1 {}\n",
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
    );
    for layer in &net.layers {
        let weights: Vec<String> = layer
            .w
            .iter()
            .flat_map(|row| row.iter().map(|v| format!("{v:?}")))
            .collect();
        out.push_str(&weights.join(" "));
        out.push('\n');
        let biases: Vec<String> = layer.b.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&biases.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the [`save_mlp`] format.
pub fn load_mlp(text: &str) -> Result<Mlp> {
    let bad = |line: usize, message: String| DriveError::Config { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty network file".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("mlp") || head.next() != Some("v1") {
        return Err(bad(1, format!("expected `mlp v1 <dims>`, got `{header}`")));
    }
    let dims: Vec<usize> = head
        .map(|s| s.parse().map_err(|_| bad(1, format!("invalid dim `{s}`"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(bad(1, "need at least input and output dims".into()));
    }

    let mut layers = Vec::with_capacity(dims.len() - 1);
    for l in 1..dims.len() {
        let (rows, cols) = (dims[l], dims[l - 1]);
        let (w_no, w_line) = lines
            .next()
            .ok_or_else(|| bad(0, format!("missing weights for layer {l}")))?;
        let flat: Vec<f64> = w_line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(w_no + 1, format!("invalid weight `{s}`"))))
            .collect::<Result<_>>()?;
        if flat.len() != rows * cols {
            return Err(bad(
                w_no + 1,
                format!("layer {l}: expected {} weights, got {}", rows * cols, flat.len()),
            ));
        }
        let w: Vec<Vec<f64>> = flat.chunks(cols).map(|c| c.to_vec()).collect();
        let (b_no, b_line) = lines
            .next()
            .ok_or_else(|| bad(0, format!("missing biases for layer {l}")))?;
        let b: Vec<f64> = b_line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(b_no + 1, format!("invalid bias `{s}`"))))
            .collect::<Result<_>>()?;
        if b.len() != rows {
            return Err(bad(
                b_no + 1,
                format!("layer {l}: expected {rows} biases, got {}", b.len()),
            ));
        }
        let activation = if l == dims.len() - 1 {
            Activation::Identity
        } else {
            Activation::Tanh
        };
        layers.push(Layer { w, b, activation });
    }
    Ok(Mlp { layers })
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
