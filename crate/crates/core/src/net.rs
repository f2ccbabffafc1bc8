//! Minimal fully-connected networks with exact analytic gradients.
//!
//! Hidden layers use ReLU; the output layer is identity or tanh. Everything
//! is `f64` and deterministic: a seed plus a sequence of operations fully
//! determines every parameter bit. Shape mismatches are programmer errors
//! and panic via `assert!`; runtime failures (bad dims, non-finite
//! gradients) return [`crate::Error`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Activation applied to the final layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// A feed-forward network: dense layers, ReLU hidden activations, and a
/// configurable output activation.
///
/// Weights are stored row-major per layer with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    output_activation: OutputActivation,
}

/// Per-layer parameter gradients, shape-congruent with an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Post-activation values recorded by [`Mlp::forward`], consumed by
/// [`Mlp::backward`]. `activations[0]` is the input, `activations[L]` the
/// network output.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Output of the forward pass that produced this cache.
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache from a forward pass")
    }
}

impl Mlp {
    /// Builds a network with the conventional init for this algorithm family:
    /// hidden layers uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, the final
    /// layer uniform in `[-3e-3, 3e-3]` so initial tanh outputs sit near zero.
    /// Reproducible from `seed`.
    pub fn init(layer_dims: &[usize], output_activation: OutputActivation, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::Config(format!(
                "network needs at least input and output dims, got {layer_dims:?}"
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::Config(format!("zero-size layer in {layer_dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = layer_dims.len() - 2;
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for (l, pair) in layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = if l == last {
                3e-3
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            let b: Vec<f64> = (0..fan_out).map(|_| rng.gen_range(-bound..=bound)).collect();
            weights.push(w);
            biases.push(b);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            output_activation,
        })
    }

    /// Rebuilds a network from raw per-layer parameters (checkpoint loading).
    pub fn from_parts(
        layer_dims: Vec<usize>,
        output_activation: OutputActivation,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::Format(format!("bad layer dims {layer_dims:?}")));
        }
        if weights.len() != layer_dims.len() - 1 || biases.len() != layer_dims.len() - 1 {
            return Err(Error::Format("layer count mismatch".into()));
        }
        for (l, pair) in layer_dims.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] || biases[l].len() != pair[1] {
                return Err(Error::Format(format!("parameter shape mismatch at layer {l}")));
            }
        }
        Ok(Self {
            layer_dims,
            output_activation,
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    /// Per-layer weight matrices, row-major `(out, in)`.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Total parameter count (weights plus biases).
    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Forward pass, recording per-layer post-activations for [`Self::backward`].
    pub fn forward(&self, x: &[f64]) -> ForwardCache {
        let mut cache = ForwardCache::default();
        self.forward_reuse(x, &mut cache);
        cache
    }

    /// Forward pass into an existing cache, reusing its buffers.
    pub fn forward_reuse(&self, x: &[f64], cache: &mut ForwardCache) {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let layers = self.weights.len();
        cache.activations.resize(layers + 1, Vec::new());
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(x);
        for l in 0..layers {
            let (done, rest) = cache.activations.split_at_mut(l + 1);
            let input = &done[l];
            let out = &mut rest[0];
            let out_dim = self.layer_dims[l + 1];
            out.clear();
            out.resize(out_dim, 0.0);
            matvec_bias(&self.weights[l], input, &self.biases[l], out);
            if l + 1 == layers {
                if self.output_activation == OutputActivation::Tanh {
                    for v in out.iter_mut() {
                        *v = v.tanh();
                    }
                }
            } else {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
    }

    /// Output of a forward pass without keeping the cache.
    pub fn infer(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).output().to_vec()
    }

    /// Exact gradients of `<dy, y>` with respect to parameters and input.
    pub fn backward(&self, cache: &ForwardCache, dy: &[f64]) -> (ParamGrads, Vec<f64>) {
        let mut grads = ParamGrads::zeros_like(self);
        let dx = self.backward_accumulate(cache, dy, &mut grads);
        (grads, dx)
    }

    /// Like [`Self::backward`] but adds into `grads` (hot path: one
    /// gradient buffer per mini-batch). Returns the input gradient.
    pub fn backward_accumulate(&self, cache: &ForwardCache, dy: &[f64], grads: &mut ParamGrads) -> Vec<f64> {
        let layers = self.weights.len();
        assert_eq!(
            cache.activations.len(),
            layers + 1,
            "cache does not match this network"
        );
        assert_eq!(dy.len(), self.output_dim(), "dy dimension mismatch");
        for (l, a) in cache.activations.iter().enumerate() {
            assert_eq!(a.len(), self.layer_dims[l], "stale cache for this network");
        }

        // Seed delta with the output-activation derivative. ReLU's derivative
        // at 0 is taken as 0, which the post-activation gate gives for free.
        let y = &cache.activations[layers];
        let mut delta: Vec<f64> = match self.output_activation {
            OutputActivation::Identity => dy.to_vec(),
            OutputActivation::Tanh => dy.iter().zip(y).map(|(d, v)| d * (1.0 - v * v)).collect(),
        };

        for l in (0..layers).rev() {
            let input = &cache.activations[l];
            let in_dim = self.layer_dims[l];
            let w = &self.weights[l];
            let gw = &mut grads.weights[l];
            for (i, &d) in delta.iter().enumerate() {
                let row = &mut gw[i * in_dim..(i + 1) * in_dim];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            for (g, &d) in grads.biases[l].iter_mut().zip(&delta) {
                *g += d;
            }
            // Propagate to the layer input: dprev = W^T delta.
            let mut dprev = vec![0.0; in_dim];
            for (i, &d) in delta.iter().enumerate() {
                let row = &w[i * in_dim..(i + 1) * in_dim];
                for (p, &wij) in dprev.iter_mut().zip(row) {
                    *p += d * wij;
                }
            }
            if l > 0 {
                for (p, &a) in dprev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = dprev;
        }
        delta
    }
}

/// `out = W x + b` with `W` row-major `(out, in)`.
fn matvec_bias(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let in_dim = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * in_dim..(i + 1) * in_dim];
        let mut acc = 0.0;
        for (&wij, &xj) in row.iter().zip(x) {
            acc += wij * xj;
        }
        *o = acc + b[i];
    }
}

impl ParamGrads {
    /// Zero gradients shaped like `net`.
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v *= k);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Largest absolute gradient entry (diagnostics).
    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, &g| m.max(g.abs()))
    }
}

/// Adam optimizer moments for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    /// Fresh state with the cited optimizer's standard constants
    /// (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            m_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam step along `-grads` (a minimization step).
///
/// Fails with [`Error::Divergence`] if any gradient component is non-finite;
/// the network is left untouched in that case.
pub fn adam_step(net: &mut Mlp, grads: &ParamGrads, state: &mut AdamState) -> Result<()> {
    assert_eq!(grads.weights.len(), net.weights.len(), "gradient shape mismatch");
    for (gw, w) in grads.weights.iter().zip(&net.weights) {
        assert_eq!(gw.len(), w.len(), "gradient shape mismatch");
    }
    let finite = grads
        .weights
        .iter()
        .chain(&grads.biases)
        .all(|v| v.iter().all(|g| g.is_finite()));
    if !finite {
        return Err(Error::Divergence(
            "non-finite gradient component in adam_step".into(),
        ));
    }

    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    let (lr, b1, b2, eps) = (state.lr, state.beta1, state.beta2, state.eps_hat);
    let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for l in 0..net.weights.len() {
        update(
            &mut net.weights[l],
            &grads.weights[l],
            &mut state.m_weights[l],
            &mut state.v_weights[l],
        );
        update(
            &mut net.biases[l],
            &grads.biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
        );
    }
    Ok(())
}

/// Polyak tracking: every target parameter becomes
/// `tau * source + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) {
    assert_eq!(
        target.layer_dims, source.layer_dims,
        "soft_update requires identical architectures"
    );
    assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1]");
    let mix = |t: &mut Vec<f64>, s: &Vec<f64>| {
        for (tv, &sv) in t.iter_mut().zip(s) {
            *tv = tau * sv + (1.0 - tau) * *tv;
        }
    };
    for (tw, sw) in target.weights.iter_mut().zip(&source.weights) {
        mix(tw, sw);
    }
    for (tb, sb) in target.biases.iter_mut().zip(&source.biases) {
        mix(tb, sb);
    }
}

/// Central-difference gradient of a scalar function: component `i` is
/// `(f(x + h e_i) - f(x - h e_i)) / (2 h)`. Test oracle; the caller owns the
/// step-size choice.
pub fn numerical_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step size must be positive");
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}
