//! Dense feed-forward networks.
//!
//! A layer computes `activation(X · W + b)` with `X` of shape `batch × in`,
//! `W` of shape `in × out` and `b` broadcast across rows. Backpropagation is
//! written out by hand for the three supported activations.

use std::fmt;
use std::str::FromStr;

use super::matrix::Matrix;
use super::rng::SeededRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidInput(format!("unknown activation `{other}`"))),
        }
    }
}

/// One affine layer followed by an element-wise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `in_dim × out_dim`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut z = x.matmul(&self.weight).expect("shape checked by MlpNetwork");
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: Matrix::zeros(l.in_dim(), l.out_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Flat views in the same order as [`MlpNetwork::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            l.bias.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// A chain of [`Dense`] layers with matching dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<Dense>,
}

impl MlpNetwork {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput(
                "network needs at least one layer".into(),
            ));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape(
                    "MlpNetwork layer bias",
                    l.out_dim(),
                    l.bias.len(),
                ));
            }
            if let Some(next) = layers.get(k + 1) {
                if next.in_dim() != l.out_dim() {
                    return Err(Error::shape(
                        "MlpNetwork layer chain",
                        format!("layer {} input {}", k + 1, l.out_dim()),
                        next.in_dim(),
                    ));
                }
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    ///
    /// `dims` lists every width from input to output, so `dims.len() - 1`
    /// layers are built. Hidden layers use `hidden`, the last uses `output`.
    pub fn glorot(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Self::build(dims, hidden, output, |fan_in, fan_out, w| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = rng.uniform_range(-limit, limit);
            }
        })
    }

    /// All weights and biases zero.
    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        Self::build(dims, hidden, output, |_, _, _| {})
    }

    fn build(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        mut init: impl FnMut(usize, usize, &mut Matrix),
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "network dims must list at least two positive widths, got {dims:?}"
            )));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let mut weight = Matrix::zeros(dims[k], dims[k + 1]);
                init(dims[k], dims[k + 1], &mut weight);
                Dense {
                    weight,
                    bias: vec![0.0; dims[k + 1]],
                    activation: if k + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Weight and bias buffers per layer, in layer order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_lens(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice().len(), l.bias.len()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::shape(
                "mlp input",
                format!("batch x {}", self.input_dim()),
                format!("{}x{}", input.rows(), input.cols()),
            ));
        }
        if !input.is_finite() {
            return Err(Error::InvalidInput(
                "mlp input contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut x = self.layers[0].forward(input);
        for l in &self.layers[1..] {
            x = l.forward(&x);
        }
        Ok(x)
    }

    /// Forward pass keeping every layer's output; `trace[0]` is the input.
    pub fn forward_trace(&self, input: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(input)?;
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(input.clone());
        for l in &self.layers {
            let next = l.forward(trace.last().expect("non-empty"));
            trace.push(next);
        }
        Ok(trace)
    }

    /// Gradients of a scalar loss given `d loss / d output`.
    ///
    /// Returns parameter gradients and the gradient with respect to `input`.
    pub fn backward(&self, input: &Matrix, output_grad: &Matrix) -> Result<(Gradients, Matrix)> {
        let trace = self.forward_trace(input)?;
        self.backward_from_trace(&trace, output_grad)
    }

    pub fn backward_from_trace(
        &self,
        trace: &[Matrix],
        output_grad: &Matrix,
    ) -> Result<(Gradients, Matrix)> {
        if trace.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                "mlp trace length",
                self.layers.len() + 1,
                trace.len(),
            ));
        }
        let out = &trace[trace.len() - 1];
        if output_grad.shape() != out.shape() {
            return Err(Error::shape(
                "mlp output gradient",
                format!("{}x{}", out.rows(), out.cols()),
                format!("{}x{}", output_grad.rows(), output_grad.cols()),
            ));
        }

        let mut layer_grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let a_out = &trace[k + 1];
            for (d, &a) in delta.as_mut_slice().iter_mut().zip(a_out.as_slice()) {
                *d *= layer.activation.derivative_from_output(a);
            }
            let weight = trace[k].t_matmul(&delta)?;
            let mut bias = vec![0.0; layer.out_dim()];
            for r in 0..delta.rows() {
                for (b, d) in bias.iter_mut().zip(delta.row(r)) {
                    *b += d;
                }
            }
            layer_grads.push(LayerGrad { weight, bias });
            delta = delta.matmul_t(&layer.weight)?;
        }
        layer_grads.reverse();
        Ok((
            Gradients {
                layers: layer_grads,
            },
            delta,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpNetwork::zeros(&[5, 4, 3], Activation::Relu, Activation::Identity).unwrap();
        let x = Matrix::from_vec(2, 5, (0..10).map(|v| v as f64 - 3.0).collect()).unwrap();
        let y = net.forward(&x).unwrap();
        assert_eq!(y.shape(), (2, 3));
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_through() {
        let net = MlpNetwork::from_layers(vec![Dense {
            weight: Matrix::identity(3),
            bias: vec![0.0; 3],
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.5, 0.0, 7.0, -1e-3]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = MlpNetwork::zeros(&[4, 2], Activation::Relu, Activation::Identity).unwrap();
        let err = net.forward(&Matrix::zeros(1, 3)).unwrap_err();
        assert!(err.to_string().contains("expected batch x 4"), "{err}");
    }

    #[test]
    fn rejects_broken_chain() {
        let layers = vec![
            Dense {
                weight: Matrix::zeros(3, 4),
                bias: vec![0.0; 4],
                activation: Activation::Relu,
            },
            Dense {
                weight: Matrix::zeros(5, 1),
                bias: vec![0.0],
                activation: Activation::Identity,
            },
        ];
        assert!(MlpNetwork::from_layers(layers).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = SeededRng::new(1);
        let net = MlpNetwork::glorot(&[4, 6, 2], Activation::Relu, Activation::Identity, &mut rng)
            .unwrap();
        let x = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let (g, dx) = net.backward(&x, &Matrix::zeros(3, 2)).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_sum_loss_grads() {
        let mut rng = SeededRng::new(2);
        let net =
            MlpNetwork::glorot(&[3, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Matrix::from_vec(4, 3, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let ones = Matrix::from_vec(4, 2, vec![1.0; 8]).unwrap();
        let (g, _) = net.backward(&x, &ones).unwrap();
        assert_eq!(g.layers[0].weight, x.t_matmul(&ones).unwrap());
        assert_eq!(g.layers[0].bias, vec![4.0, 4.0]);
    }

    #[test]
    fn backward_rejects_bad_output_grad() {
        let net = MlpNetwork::zeros(&[3, 2], Activation::Relu, Activation::Identity).unwrap();
        assert!(net
            .backward(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3))
            .is_err());
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0) <= 1.0);
    }
}
