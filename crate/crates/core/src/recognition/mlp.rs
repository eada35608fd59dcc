//! Feed-forward classifier: ReLU hidden layers with inverted dropout and a
//! softmax output, trained by backpropagation of the cross-entropy loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{OcrError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// out × in
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            w: DMatrix::zeros(self.w.nrows(), self.w.ncols()),
            b: DVector::zeros(self.b.len()),
        }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(self.b.iter())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(self.b.iter_mut())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Cached activations of one forward pass, for backprop.
struct Pass {
    /// Input followed by every hidden activation after dropout.
    inputs: Vec<DMatrix<f64>>,
    /// Dropout scale per hidden unit (0 or 1/(1−p)); empty when inactive.
    masks: Vec<DMatrix<f64>>,
    probs: DMatrix<f64>,
}

impl MlpModel {
    /// `sizes` lists the input width followed by every layer's width.
    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                w: DMatrix::zeros(w[1], w[0]),
                b: DVector::zeros(w[1]),
            })
            .collect();
        Self { layers }
    }

    /// He initialization: weights ~ N(0, 2/fan_in), zero biases.
    pub fn he_init<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let mut m = Self::zeros(sizes);
        for layer in &mut m.layers {
            let std = (2.0 / layer.w.ncols() as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            // Row-major draw order, independent of storage layout.
            for i in 0..layer.w.nrows() {
                for j in 0..layer.w.ncols() {
                    layer.w[(i, j)] = normal.sample(rng);
                }
            }
        }
        m
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.first().map(|l| l.w.ncols()).into_iter().collect();
        s.extend(self.layers.iter().map(|l| l.w.nrows()));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w.ncols())
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.nrows())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Checks that layer shapes chain and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(OcrError::invalid("network has no layers"));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return Err(OcrError::invalid(format!("layer {} input width does not match layer {i}", i + 1)));
            }
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.len() != l.w.nrows() {
                return Err(OcrError::invalid(format!("layer {i} bias length mismatch")));
            }
            if l.params().any(|v| !v.is_finite()) {
                return Err(OcrError::invalid(format!("layer {i} holds a non-finite parameter")));
            }
        }
        Ok(())
    }

    pub fn round_to_f32(&mut self) {
        for l in &mut self.layers {
            l.params_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }

    /// Inference-mode class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let row = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.forward_batch(&row).row(0).iter().copied().collect())
    }

    /// Training-mode forward pass: inverted dropout with rate `p` after every
    /// hidden layer.
    pub fn forward_train<R: Rng>(&self, x: &[f64], p: f64, rng: &mut R) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let row = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.run(&row, p, rng).probs.row(0).iter().copied().collect())
    }

    /// Inference-mode probabilities for every row of `x` (n × inputs).
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            a = affine(&a, l);
            if i < last {
                a.apply(|v| *v = v.max(0.0));
            }
        }
        softmax_rows(&mut a);
        a
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(OcrError::invalid(format!("input of length {} for a {}-input network", x.len(), self.n_inputs())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OcrError::invalid("non-finite network input"));
        }
        Ok(())
    }

    fn run<R: Rng>(&self, x: &DMatrix<f64>, p: f64, rng: &mut R) -> Pass {
        let mut inputs = vec![x.clone()];
        let mut masks = Vec::new();
        let last = self.layers.len() - 1;
        let mut z = DMatrix::zeros(0, 0);
        for (i, l) in self.layers.iter().enumerate() {
            z = affine(inputs.last().expect("input present"), l);
            if i == last {
                break;
            }
            z.apply(|v| *v = v.max(0.0));
            if p > 0.0 {
                let keep = 1.0 / (1.0 - p);
                // Row-major draws so the mask does not depend on storage order.
                let mut mask = DMatrix::zeros(z.nrows(), z.ncols());
                for r in 0..z.nrows() {
                    for c in 0..z.ncols() {
                        mask[(r, c)] = if rng.gen::<f64>() < p { 0.0 } else { keep };
                    }
                }
                z.component_mul_assign(&mask);
                masks.push(mask);
            }
            inputs.push(z.clone());
        }
        softmax_rows(&mut z);
        Pass {
            inputs,
            masks,
            probs: z,
        }
    }

    /// Mean cross-entropy over the batch and its gradient for every layer.
    pub fn loss_and_gradients<R: Rng>(
        &self,
        x: &DMatrix<f64>,
        labels: &[usize],
        dropout: f64,
        rng: &mut R,
    ) -> (f64, Vec<Layer>) {
        let n = x.nrows();
        let pass = self.run(x, dropout, rng);
        let mut loss = 0.0;
        let mut dz = pass.probs;
        for (r, &y) in labels.iter().enumerate() {
            loss -= dz[(r, y)].max(f64::MIN_POSITIVE).ln();
            dz[(r, y)] -= 1.0;
        }
        dz /= n as f64;
        let mut grads: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        for i in (0..self.layers.len()).rev() {
            let a_prev = &pass.inputs[i];
            grads[i].w = dz.tr_mul(a_prev);
            grads[i].b = DVector::from_iterator(dz.ncols(), dz.column_iter().map(|c| c.sum()));
            if i == 0 {
                break;
            }
            let mut da = &dz * &self.layers[i].w;
            // a_prev = relu(z) ∘ mask, so a_prev > 0 exactly where the unit
            // was both active and kept; the kept scale is the mask value.
            if let Some(mask) = pass.masks.get(i - 1) {
                da.zip_apply(mask, |g, m| *g *= m);
            }
            da.zip_apply(a_prev, |g, a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
            dz = da;
        }
        (loss / n as f64, grads)
    }
}

fn affine(a: &DMatrix<f64>, l: &Layer) -> DMatrix<f64> {
    let mut z = a * l.w.transpose();
    for mut row in z.row_iter_mut() {
        row += l.b.transpose();
    }
    z
}

fn softmax_rows(z: &mut DMatrix<f64>) {
    for mut row in z.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    pub fn new(model: &MlpModel, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Layer> = model.layers.iter().map(Layer::zeros_like).collect();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &[Layer]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((layer, g), m), v) in model.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((p, g), m), v) in layer.params_mut().zip(g.params()).zip(m.params_mut()).zip(v.params_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
    }
}
