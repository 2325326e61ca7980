use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearnerError;

/// Fully connected network with rectifier hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    sizes: Vec<usize>,
    /// Per layer: row-major `out × in` weights followed by `out` biases.
    layers: Vec<Vec<f64>>,
}

impl QNetwork {
    /// Weights and biases drawn uniformly from ±1/√fan_in.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, LearnerError> {
        let mut net = QNetwork::zeros(sizes)?;
        for (l, params) in net.layers.iter_mut().enumerate() {
            let bound = 1.0 / (sizes[l] as f64).sqrt();
            for p in params.iter_mut() {
                *p = rng.gen_range(-bound..=bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, LearnerError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(LearnerError::Architecture(format!("unusable layer sizes {sizes:?}")));
        }
        let layers = sizes.windows(2).map(|w| vec![0.0; w[1] * w[0] + w[1]]).collect();
        Ok(QNetwork {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers.concat()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), LearnerError> {
        if params.len() != self.param_count() {
            return Err(LearnerError::Architecture(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (head, tail) = rest.split_at(layer.len());
            layer.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Weight from input `i` to output `o` of layer `l`.
    pub fn weight_mut(&mut self, l: usize, o: usize, i: usize) -> &mut f64 {
        let fan_in = self.sizes[l];
        &mut self.layers[l][o * fan_in + i]
    }

    pub fn bias_mut(&mut self, l: usize, o: usize) -> &mut f64 {
        let offset = self.sizes[l] * self.sizes[l + 1];
        &mut self.layers[l][offset + o]
    }

    fn check_input(&self, s: &[f64]) -> Result<(), LearnerError> {
        if s.len() != self.input_width() {
            return Err(LearnerError::Width {
                expected: self.input_width(),
                got: s.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, s: &[f64]) -> Result<Vec<f64>, LearnerError> {
        self.check_input(s)?;
        let mut x = s.to_vec();
        for l in 0..self.layers.len() {
            x = self.layer_forward(l, &x);
            if l + 1 < self.layers.len() {
                relu(&mut x);
            }
        }
        Ok(x)
    }

    fn layer_forward(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let p = &self.layers[l];
        let bias = &p[fan_in * fan_out..];
        (0..fan_out)
            .map(|o| {
                let row = &p[o * fan_in..(o + 1) * fan_in];
                bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Adds `scale · ∂Q_a/∂θ` for input `s` into `grad` (same layout as
    /// [`QNetwork::params`]) and returns `Q_a`.
    pub(crate) fn accumulate_action_gradient(
        &self,
        s: &[f64],
        action: usize,
        scale_of: impl FnOnce(f64) -> f64,
        grad: &mut [f64],
    ) -> Result<f64, LearnerError> {
        self.check_input(s)?;
        if action >= self.output_width() {
            return Err(LearnerError::Action(action));
        }
        // activations[l] is the input of layer l
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut x = s.to_vec();
        for l in 0..self.layers.len() {
            let mut z = self.layer_forward(l, &x);
            activations.push(x);
            if l + 1 < self.layers.len() {
                relu(&mut z);
            }
            x = z;
        }
        let q = x[action];
        let scale = scale_of(q);

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.len();
        }

        let mut delta = vec![0.0; self.output_width()];
        delta[action] = scale;
        for l in (0..self.layers.len()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &activations[l];
            let g = &mut grad[offsets[l]..offsets[l] + self.layers[l].len()];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (gi, xi) in g[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                    *gi += d * xi;
                }
                g[fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.layers[l];
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *p += d * wi;
                }
            }
            // input[i] is a rectified activation: zero exactly where the unit was off
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        Ok(q)
    }

    /// θ ← θ − lr · grad.
    pub fn descend(&mut self, grad: &[f64], lr: f64) {
        let mut rest = grad;
        for layer in &mut self.layers {
            let (head, tail) = rest.split_at(layer.len());
            for (p, g) in layer.iter_mut().zip(head) {
                *p -= lr * g;
            }
            rest = tail;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().flatten().all(|p| p.is_finite())
    }
}

fn relu(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
