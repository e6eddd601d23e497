use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::layer::{Layer, LayerSpec, MapShape};
use super::Tensor;
use crate::{Error, Result};

/// A feed-forward stack of layers operating on HWC feature maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input: MapShape,
    shapes: Vec<MapShape>,
    layers: Vec<Layer>,
}

/// Activations recorded by [`Network::forward_recorded`] for a later
/// [`Network::backward`] call.
#[derive(Default, Debug)]
pub struct Tape {
    /// Per sample, the input to every layer followed by the final output.
    samples: Option<Vec<Vec<Vec<f64>>>>,
}

impl Tape {
    pub fn is_recorded(&self) -> bool {
        self.samples.is_some()
    }

    pub fn clear(&mut self) {
        self.samples = None;
    }
}

/// Parameter gradients, one weight/bias pair per layer (empty for
/// parameter-free layers).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (Tensor::zeros(l.spec.weight_shape()), Tensor::zeros(l.spec.bias_shape())))
                .collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for (w, b) in &mut self.layers {
            w.scale(k);
            b.scale(k);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|(w, b)| w.all_finite() && b.all_finite())
    }

    /// Flat view over every gradient value, layer by layer, weights before biases.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|(w, b)| w.data().iter().chain(b.data()).copied())
    }
}

impl Network {
    /// Builds a network with zeroed parameters, checking that consecutive
    /// layer shapes are compatible.
    pub fn new(input: MapShape, specs: &[LayerSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        let mut shapes = vec![input];
        for spec in specs {
            let next = spec.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(Self { input, shapes, layers: specs.iter().copied().map(Layer::zeroed).collect() })
    }

    /// Uniform Glorot initialization of weights, zero biases.
    pub fn init_glorot(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut self.layers {
            let (fan_in, fan_out) = layer.spec.fans();
            if fan_in + fan_out == 0 {
                continue;
            }
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in layer.weight.data_mut() {
                *w = rng.random_range(-limit..limit);
            }
            layer.bias.data_mut().iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn input_shape(&self) -> MapShape {
        self.input
    }

    pub fn output_width(&self) -> usize {
        let [h, w, c] = *self.shapes.last().unwrap();
        h * w * c
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    /// Number of parameters actually stored.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn param_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weight.data().iter().chain(l.bias.data()).copied())
    }

    /// Mutable access to the `index`-th parameter in [`Self::param_values`] order.
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            let nw = layer.weight.len();
            if index < nw {
                return Some(&mut layer.weight.data_mut()[index]);
            }
            index -= nw;
            let nb = layer.bias.len();
            if index < nb {
                return Some(&mut layer.bias.data_mut()[index]);
            }
            index -= nb;
        }
        None
    }

    /// Rounds every parameter to the nearest `f32`, the on-disk precision.
    pub fn quantize_to_f32(&mut self) {
        for layer in &mut self.layers {
            for v in layer.weight.data_mut().iter_mut().chain(layer.bias.data_mut()) {
                *v = *v as f32 as f64;
            }
        }
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let shape = batch.shape();
        if shape.len() != 4 || shape[1..] != self.input {
            return Err(Error::Shape(format!(
                "expected batch of shape [B, {}, {}, {}], got {shape:?}",
                self.input[0], self.input[1], self.input[2]
            )));
        }
        Ok(shape[0])
    }

    fn sample_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer.forward(self.shapes[i], acts.last().unwrap());
            acts.push(next);
        }
        acts
    }

    fn sample_logits(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = layer.forward(self.shapes[i], &cur);
        }
        cur
    }

    /// Forward pass over a `[B, H, W, C]` batch, returning `[B, K]` logits.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let b = self.check_batch(batch)?;
        let per = batch.len() / b.max(1);
        let rows: Vec<Vec<f64>> =
            (0..b).into_par_iter().map(|i| self.sample_logits(&batch.data()[i * per..(i + 1) * per])).collect();
        Tensor::new(vec![b, self.output_width()], rows.concat())
    }

    /// Forward pass that records the activations needed by [`Self::backward`].
    pub fn forward_recorded(&self, batch: &Tensor, tape: &mut Tape) -> Result<Tensor> {
        let b = self.check_batch(batch)?;
        let per = batch.len() / b.max(1);
        let samples: Vec<Vec<Vec<f64>>> =
            (0..b).into_par_iter().map(|i| self.sample_activations(&batch.data()[i * per..(i + 1) * per])).collect();
        let logits: Vec<f64> = samples.iter().flat_map(|a| a.last().unwrap().iter().copied()).collect();
        tape.samples = Some(samples);
        Tensor::new(vec![b, self.output_width()], logits)
    }

    /// Backpropagates `grad_logits` (`[B, K]`) through the recorded pass.
    ///
    /// Per-sample gradients are computed in parallel and summed in sample
    /// order, so the result does not depend on the thread count.
    pub fn backward(&self, tape: &Tape, grad_logits: &Tensor) -> Result<Gradients> {
        let samples = tape.samples.as_ref().ok_or(Error::MissingForwardCache)?;
        let k = self.output_width();
        if grad_logits.shape() != [samples.len(), k] {
            return Err(Error::Shape(format!(
                "grad_logits shape {:?} does not match recorded batch [{}, {k}]",
                grad_logits.shape(),
                samples.len()
            )));
        }
        let per_sample: Vec<Gradients> = samples
            .par_iter()
            .enumerate()
            .map(|(i, acts)| {
                let mut grads = Gradients::zeros_like(self);
                let mut upstream = grad_logits.row(i).to_vec();
                for li in (0..self.layers.len()).rev() {
                    let (gw, gb) = &mut grads.layers[li];
                    upstream = self.layers[li].backward(
                        self.shapes[li],
                        &acts[li],
                        &upstream,
                        gw.data_mut(),
                        gb.data_mut(),
                        li > 0,
                    );
                }
                grads
            })
            .collect();
        let mut total = Gradients::zeros_like(self);
        for g in &per_sample {
            for ((tw, tb), (w, b)) in total.layers.iter_mut().zip(&g.layers) {
                tw.add_assign(w);
                tb.add_assign(b);
            }
        }
        Ok(total)
    }

    /// Signs of every ReLU input for one sample; used to spot finite-difference
    /// steps that straddle a kink.
    pub(crate) fn relu_pattern(&self, x: &[f64]) -> Vec<bool> {
        let acts = self.sample_activations(x);
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l.spec, LayerSpec::Activation { .. }))
            .flat_map(|(i, _)| acts[i].iter().map(|&v| v > 0.0).collect::<Vec<_>>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(seed: u64) -> Network {
        let mut net =
            Network::new([5, 4, 1], &[LayerSpec::conv(3, 1, 2, 1, 1), LayerSpec::relu(), LayerSpec::dense(40, 3)])
                .unwrap();
        net.init_glorot(seed);
        net
    }

    #[test]
    fn zero_parameters_give_zero_logits() {
        let net =
            Network::new([19, 15, 1], &[LayerSpec::conv(3, 1, 4, 2, 1), LayerSpec::relu(), LayerSpec::dense(320, 20)])
                .unwrap();
        let batch = Tensor::new(vec![1, 19, 15, 1], (0..285).map(|i| i as f64 / 285.0).collect()).unwrap();
        let out = net.forward(&batch).unwrap();
        assert_eq!(out.shape(), &[1, 20]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let mut net = Network::new([19, 15, 1], &[LayerSpec::conv(1, 1, 1, 1, 0)]).unwrap();
        net.layers_mut()[0].weight.data_mut()[0] = 1.0;
        let data: Vec<f64> = (0..285).map(|i| (i as f64 * 0.37).sin()).collect();
        let batch = Tensor::new(vec![1, 19, 15, 1], data.clone()).unwrap();
        assert_eq!(net.forward(&batch).unwrap().data(), &data[..]);
    }

    #[test]
    fn identical_rows_give_identical_logits() {
        let net = small_net(3);
        let x: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let batch = Tensor::new(vec![2, 5, 4, 1], [x.clone(), x].concat()).unwrap();
        let out = net.forward(&batch).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn rejects_wrong_geometry() {
        let net = small_net(1);
        let batch = Tensor::zeros(vec![1, 4, 5, 1]);
        assert!(matches!(net.forward(&batch), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_requires_tape() {
        let net = small_net(1);
        let tape = Tape::default();
        let g = Tensor::zeros(vec![1, 3]);
        assert!(matches!(net.backward(&tape, &g), Err(Error::MissingForwardCache)));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = small_net(2);
        let mut tape = Tape::default();
        let batch = Tensor::new(vec![2, 5, 4, 1], (0..40).map(|i| i as f64 / 40.0).collect()).unwrap();
        net.forward_recorded(&batch, &mut tape).unwrap();
        let g = net.backward(&tape, &Tensor::zeros(vec![2, 3])).unwrap();
        assert!(g.values().all(|v| v == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let net = small_net(4);
        let mut tape = Tape::default();
        let batch = Tensor::new(vec![2, 5, 4, 1], (0..40).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap();
        net.forward_recorded(&batch, &mut tape).unwrap();
        let up = Tensor::new(vec![2, 3], vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]).unwrap();
        let mut up2 = up.clone();
        up2.scale(2.0);
        let g1 = net.backward(&tape, &up).unwrap();
        let g2 = net.backward(&tape, &up2).unwrap();
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn stored_param_count_matches_specs() {
        let net = small_net(0);
        let analytic: usize = net.specs().iter().map(|s| s.param_count()).sum();
        assert_eq!(net.param_count(), analytic);
        assert_eq!(net.param_count(), 2 * 9 + 2 + 40 * 3 + 3);
    }
}
