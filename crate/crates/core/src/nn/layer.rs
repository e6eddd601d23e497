use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

/// Feature-map geometry: (height, width, channels).
pub type MapShape = [usize; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

/// Static description of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: usize,
    },
    /// Dense layer over the flattened input map.
    FullyConnected {
        inputs: usize,
        outputs: usize,
    },
    Activation {
        function: Activation,
    },
}

impl LayerSpec {
    pub fn conv(kernel: usize, in_channels: usize, out_channels: usize, stride: usize, padding: usize) -> Self {
        LayerSpec::Conv2d { kernel_h: kernel, kernel_w: kernel, in_channels, out_channels, stride, padding }
    }

    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::FullyConnected { inputs, outputs }
    }

    pub fn relu() -> Self {
        LayerSpec::Activation { function: Activation::Relu }
    }

    /// Output geometry for a given input, or an error if they are incompatible.
    pub fn output_shape(&self, input: MapShape) -> Result<MapShape> {
        let [h, w, c] = input;
        match *self {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, stride, padding } => {
                if kernel_h == 0 || kernel_w == 0 || stride == 0 || out_channels == 0 {
                    return Err(Error::Shape(format!("degenerate conv layer {self:?}")));
                }
                if in_channels != c {
                    return Err(Error::Shape(format!("conv expects {in_channels} input channels, got {c}")));
                }
                if h + 2 * padding < kernel_h || w + 2 * padding < kernel_w {
                    return Err(Error::Shape(format!("kernel {kernel_h}x{kernel_w} larger than padded input {h}x{w}")));
                }
                Ok([(h + 2 * padding - kernel_h) / stride + 1, (w + 2 * padding - kernel_w) / stride + 1, out_channels])
            }
            LayerSpec::FullyConnected { inputs, outputs } => {
                if inputs != h * w * c || outputs == 0 {
                    return Err(Error::Shape(format!("dense layer expects {inputs} inputs, got {}", h * w * c)));
                }
                Ok([1, 1, outputs])
            }
            LayerSpec::Activation { .. } => Ok(input),
        }
    }

    /// Weight tensor shape; empty for parameter-free layers.
    pub fn weight_shape(&self) -> Vec<usize> {
        match *self {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, .. } => {
                vec![out_channels, kernel_h, kernel_w, in_channels]
            }
            LayerSpec::FullyConnected { inputs, outputs } => vec![outputs, inputs],
            LayerSpec::Activation { .. } => vec![0],
        }
    }

    pub fn bias_shape(&self) -> Vec<usize> {
        match *self {
            LayerSpec::Conv2d { out_channels, .. } => vec![out_channels],
            LayerSpec::FullyConnected { outputs, .. } => vec![outputs],
            LayerSpec::Activation { .. } => vec![0],
        }
    }

    /// Weights plus biases.
    pub fn param_count(&self) -> usize {
        self.weight_shape().iter().product::<usize>() + self.bias_shape().iter().product::<usize>()
    }

    /// (fan_in, fan_out) used by the uniform Glorot initializer.
    pub fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, .. } => {
                let area = kernel_h * kernel_w;
                (area * in_channels, area * out_channels)
            }
            LayerSpec::FullyConnected { inputs, outputs } => (inputs, outputs),
            LayerSpec::Activation { .. } => (0, 0),
        }
    }
}

/// A layer with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Layer {
    pub fn zeroed(spec: LayerSpec) -> Self {
        Self { spec, weight: Tensor::zeros(spec.weight_shape()), bias: Tensor::zeros(spec.bias_shape()) }
    }

    /// Single-sample forward pass. `input` is an HWC map of shape `in_shape`.
    pub(crate) fn forward(&self, in_shape: MapShape, input: &[f64]) -> Vec<f64> {
        match self.spec {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, stride, padding } => {
                let [h, w, _] = in_shape;
                let oh = (h + 2 * padding - kernel_h) / stride + 1;
                let ow = (w + 2 * padding - kernel_w) / stride + 1;
                let wt = self.weight.data();
                let bias = self.bias.data();
                let mut out = vec![0.0; oh * ow * out_channels];
                for oy in 0..oh {
                    for ox in 0..ow {
                        let dst = &mut out[(oy * ow + ox) * out_channels..][..out_channels];
                        dst.copy_from_slice(bias);
                        for ky in 0..kernel_h {
                            let iy = (oy * stride + ky) as isize - padding as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..kernel_w {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let src = &input[(iy as usize * w + ix as usize) * in_channels..][..in_channels];
                                for (o, acc) in dst.iter_mut().enumerate() {
                                    let k = &wt[((o * kernel_h + ky) * kernel_w + kx) * in_channels..][..in_channels];
                                    *acc += k.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                        }
                    }
                }
                out
            }
            LayerSpec::FullyConnected { inputs, outputs } => {
                let wt = self.weight.data();
                (0..outputs)
                    .map(|j| {
                        self.bias.data()[j]
                            + wt[j * inputs..(j + 1) * inputs].iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
                    })
                    .collect()
            }
            LayerSpec::Activation { function: Activation::Relu } => input.iter().map(|&v| v.max(0.0)).collect(),
        }
    }

    /// Single-sample backward pass. Accumulates parameter gradients into
    /// `grad_w` / `grad_b` and returns the gradient w.r.t. the layer input.
    pub(crate) fn backward(
        &self,
        in_shape: MapShape,
        input: &[f64],
        grad_out: &[f64],
        grad_w: &mut [f64],
        grad_b: &mut [f64],
        need_input_grad: bool,
    ) -> Vec<f64> {
        match self.spec {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, stride, padding } => {
                let [h, w, _] = in_shape;
                let oh = (h + 2 * padding - kernel_h) / stride + 1;
                let ow = (w + 2 * padding - kernel_w) / stride + 1;
                let wt = self.weight.data();
                let mut grad_in = if need_input_grad { vec![0.0; input.len()] } else { Vec::new() };
                for oy in 0..oh {
                    for ox in 0..ow {
                        let g = &grad_out[(oy * ow + ox) * out_channels..][..out_channels];
                        for (b, gv) in grad_b.iter_mut().zip(g) {
                            *b += gv;
                        }
                        for ky in 0..kernel_h {
                            let iy = (oy * stride + ky) as isize - padding as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..kernel_w {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let base = (iy as usize * w + ix as usize) * in_channels;
                                let src = &input[base..base + in_channels];
                                for (o, &gv) in g.iter().enumerate() {
                                    if gv == 0.0 {
                                        continue;
                                    }
                                    let off = ((o * kernel_h + ky) * kernel_w + kx) * in_channels;
                                    for (gw, s) in grad_w[off..off + in_channels].iter_mut().zip(src) {
                                        *gw += gv * s;
                                    }
                                    if need_input_grad {
                                        for (gi, k) in grad_in[base..base + in_channels]
                                            .iter_mut()
                                            .zip(&wt[off..off + in_channels])
                                        {
                                            *gi += gv * k;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                grad_in
            }
            LayerSpec::FullyConnected { inputs, outputs } => {
                let wt = self.weight.data();
                let mut grad_in = if need_input_grad { vec![0.0; inputs] } else { Vec::new() };
                for j in 0..outputs {
                    let gv = grad_out[j];
                    grad_b[j] += gv;
                    if gv == 0.0 {
                        continue;
                    }
                    for (gw, x) in grad_w[j * inputs..(j + 1) * inputs].iter_mut().zip(input) {
                        *gw += gv * x;
                    }
                    if need_input_grad {
                        for (gi, k) in grad_in.iter_mut().zip(&wt[j * inputs..(j + 1) * inputs]) {
                            *gi += gv * k;
                        }
                    }
                }
                grad_in
            }
            LayerSpec::Activation { function: Activation::Relu } => {
                input.iter().zip(grad_out).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 }).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_counts() {
        assert_eq!(LayerSpec::conv(3, 1, 8, 1, 1).param_count(), 80);
        assert_eq!(LayerSpec::dense(240, 20).param_count(), 4820);
        assert_eq!(LayerSpec::relu().param_count(), 0);
    }

    #[test]
    fn conv_output_geometry() {
        assert_eq!(LayerSpec::conv(3, 1, 8, 1, 1).output_shape([19, 15, 1]).unwrap(), [19, 15, 8]);
        assert_eq!(LayerSpec::conv(3, 8, 8, 2, 1).output_shape([19, 15, 8]).unwrap(), [10, 8, 8]);
        assert_eq!(LayerSpec::conv(3, 8, 12, 2, 1).output_shape([10, 8, 8]).unwrap(), [5, 4, 12]);
        assert!(LayerSpec::conv(3, 2, 8, 1, 1).output_shape([19, 15, 1]).is_err());
        assert!(LayerSpec::conv(0, 1, 8, 1, 1).output_shape([19, 15, 1]).is_err());
        assert!(LayerSpec::conv(3, 1, 8, 0, 1).output_shape([19, 15, 1]).is_err());
        assert!(LayerSpec::dense(10, 2).output_shape([19, 15, 1]).is_err());
    }
}
