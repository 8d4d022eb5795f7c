use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spectral::{top_singular, DEFAULT_ITERS, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};

/// Hidden widths, output width and LeakyReLU slope of an MLP feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub hidden: Vec<usize>,
    pub output: usize,
    pub slope: f64,
}

impl MlpArch {
    /// `d → w → w → 10` with slope 0.01.
    pub fn two_hidden(width: usize) -> Self {
        Self {
            hidden: vec![width, width],
            output: 10,
            slope: 0.01,
        }
    }

    pub fn widths(&self, input_dim: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(self.output);
        w
    }
}

impl Default for MlpArch {
    fn default() -> Self {
        Self::two_hidden(200)
    }
}

/// One affine layer, `z = W a + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Layer {
    pub fn new(w: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if w.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: w.nrows(),
                found: b.len(),
            });
        }
        Ok(Self {
            w: w.as_standard_layout().into_owned(),
            b,
        })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.b
    }
}

/// LeakyReLU MLP with an affine output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpMap {
    layers: Vec<Layer>,
    slope: f64,
}

/// Activations saved by a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn into_output(self) -> Array2<f64> {
        self.output
    }
}

impl MlpMap {
    pub fn from_layers(layers: Vec<Layer>, slope: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("an MLP needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].w.ncols() != pair[0].w.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].w.nrows(),
                    found: pair[1].w.ncols(),
                });
            }
        }
        Ok(Self { layers, slope })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(widths: &[usize], slope: f64, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(invalid(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .map(|io| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-a..=a));
                Layer::new(w, Array1::zeros(fan_out))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers, slope)
    }

    pub fn from_arch<R: Rng + ?Sized>(
        arch: &MlpArch,
        input_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::glorot(&arch.widths(input_dim), arch.slope, rng)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.nrows()
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.w.nrows()))
            .collect()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<MlpCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(last);
        for (j, layer) in self.layers.iter().enumerate() {
            let z = inputs[j].dot(&layer.w.t()) + &layer.b;
            if j == last {
                return Ok(MlpCache {
                    inputs,
                    pre,
                    output: z,
                });
            }
            let slope = self.slope;
            inputs.push(z.mapv(|v| if v > 0.0 { v } else { slope * v }));
            pre.push(z);
        }
        unreachable!("loop returns at the output layer")
    }

    /// Reverse-mode gradient of a scalar whose gradient with respect to the
    /// batch outputs is `upstream`.
    pub fn backward(&self, cache: &MlpCache, upstream: ArrayView2<'_, f64>) -> Result<MlpGradient> {
        if upstream.dim() != cache.output.dim() {
            return Err(Error::DimensionMismatch {
                expected: cache.output.len(),
                found: upstream.len(),
            });
        }
        let n_layers = self.layers.len();
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        let mut g = upstream.to_owned();
        for j in (0..n_layers).rev() {
            weights.push(g.t().dot(&cache.inputs[j]));
            biases.push(g.sum_axis(Axis(0)));
            if j > 0 {
                let mut back = g.dot(&self.layers[j].w);
                let slope = self.slope;
                ndarray::Zip::from(&mut back)
                    .and(&cache.pre[j - 1])
                    .for_each(|b, &z| {
                        if z <= 0.0 {
                            *b *= slope;
                        }
                    });
                g = back;
            }
        }
        weights.reverse();
        biases.reverse();
        Ok(MlpGradient { weights, biases })
    }

    pub fn spectral_norms(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| top_singular(l.w.view(), DEFAULT_ITERS, DEFAULT_TOL).value)
            .collect()
    }

    /// `Π = ∏_j ‖W_j‖₂`.
    pub fn spectral_product(&self) -> f64 {
        self.spectral_norms().into_iter().product()
    }

    /// `Π` and its gradient, `∂Π/∂W_j = (Π / s_j) u_j v_jᵀ`. Bias entries are zero.
    pub fn spectral_product_grad(&self) -> (f64, MlpGradient) {
        let triplets: Vec<_> = self
            .layers
            .iter()
            .map(|l| top_singular(l.w.view(), DEFAULT_ITERS, DEFAULT_TOL))
            .collect();
        let product: f64 = triplets.iter().map(|t| t.value).product();
        let mut grad = MlpGradient::zeros_like(self);
        for (j, t) in triplets.iter().enumerate() {
            let others: f64 = triplets
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, s)| s.value)
                .product();
            let u = t.u.view().insert_axis(Axis(1));
            let v = t.v.view().insert_axis(Axis(0));
            grad.weights[j] = u.dot(&v) * others;
        }
        (product, grad)
    }

    /// Adds `scale * delta` to every parameter.
    pub fn add_scaled(&mut self, delta: &MlpGradient, scale: f64) {
        for (layer, (dw, db)) in self
            .layers
            .iter_mut()
            .zip(delta.weights.iter().zip(&delta.biases))
        {
            layer.w.scaled_add(scale, dw);
            layer.b.scaled_add(scale, db);
        }
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }
}

/// Parameter-shaped gradient (or moment) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpGradient {
    pub fn zeros_like(map: &MlpMap) -> Self {
        Self {
            weights: map
                .layers
                .iter()
                .map(|l| Array2::zeros(l.w.raw_dim()))
                .collect(),
            biases: map
                .layers
                .iter()
                .map(|l| Array1::zeros(l.b.len()))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
    }

    pub(crate) fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn global_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.values_mut().for_each(|v| *v *= s);
    }

    pub fn add_scaled(&mut self, other: &MlpGradient, s: f64) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::spectral::spectral_norm;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(w: Array2<f64>) -> MlpMap {
        let b = Array1::zeros(w.nrows());
        MlpMap::from_layers(vec![Layer::new(w, b).unwrap()], 0.01).unwrap()
    }

    #[test]
    fn zero_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = MlpMap::glorot(&[3, 4, 2], 0.01, &mut rng).unwrap();
        for layer in &mut m.layers {
            layer.w.fill(0.0);
        }
        assert!(m
            .forward(array![[1.0, -2.0, 3.0]].view())
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer() {
        let m = single(Array2::eye(2));
        assert_eq!(
            m.forward(array![[1.0, 1.0]].view()).unwrap(),
            array![[1.0, 1.0]]
        );
    }

    #[test]
    fn output_layer_is_affine() {
        let m = single(array![[2.0]]);
        assert_eq!(m.forward(array![[-1.0]].view()).unwrap(), array![[-2.0]]);
        let two = MlpMap::from_layers(
            vec![
                Layer::new(array![[2.0]], array![0.0]).unwrap(),
                Layer::new(array![[1.0]], array![0.0]).unwrap(),
            ],
            0.01,
        )
        .unwrap();
        assert!((two.forward(array![[-1.0]].view()).unwrap()[[0, 0]] + 0.02).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = single(Array2::eye(2));
        assert!(m.forward(array![[1.0]].view()).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MlpMap::glorot(&[3, 5, 2], 0.01, &mut rng).unwrap();
        let x = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.0]];
        let cache = m.forward_cached(x.view()).unwrap();
        let g = m.backward(&cache, Array2::zeros((2, 2)).view()).unwrap();
        assert!(g.values().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_gradient() {
        let m = single(array![[1.0, 2.0], [0.5, -1.0]]);
        let x = array![[3.0, -4.0]];
        let cache = m.forward_cached(x.view()).unwrap();
        let g = m.backward(&cache, Array2::ones((1, 2)).view()).unwrap();
        assert_eq!(g.weights[0], array![[3.0, -4.0], [3.0, -4.0]]);
        assert_eq!(g.biases[0], array![1.0, 1.0]);
    }

    #[test]
    fn backward_shape_mismatch() {
        let m = single(Array2::eye(2));
        let cache = m.forward_cached(array![[1.0, 0.0]].view()).unwrap();
        assert!(m.backward(&cache, Array2::zeros((1, 3)).view()).is_err());
    }

    fn weighted_sum(m: &MlpMap, x: &Array2<f64>, up: &Array2<f64>) -> f64 {
        (m.forward(x.view()).unwrap() * up).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..10 {
            let widths = [3, 2 + trial % 5, 4, 2];
            let m = MlpMap::glorot(&widths, 0.1, &mut rng).unwrap();
            let mut m = m;
            for layer in &mut m.layers {
                layer.b.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
            }
            let x = Array2::from_shape_simple_fn((4, 3), || rng.gen_range(-2.0..2.0));
            let up = Array2::from_shape_simple_fn((4, 2), || rng.gen_range(-1.0..1.0));
            let g = m
                .backward(&m.forward_cached(x.view()).unwrap(), up.view())
                .unwrap();
            let h = 1e-5;
            let analytic: Vec<f64> = g.values().copied().collect();
            assert_eq!(analytic.len(), m.params_mut().count());
            for (k, &a) in analytic.iter().enumerate() {
                let mut plus = m.clone();
                *plus.params_mut().nth(k).unwrap() += h;
                let mut minus = m.clone();
                *minus.params_mut().nth(k).unwrap() -= h;
                let fd = (weighted_sum(&plus, &x, &up) - weighted_sum(&minus, &x, &up)) / (2.0 * h);
                let err = (fd - a).abs() / a.abs().max(1e-3);
                assert!(err < 1e-4, "param {k}: fd {fd} analytic {a}");
            }
        }
    }

    #[test]
    fn spectral_product_gradient_matches_finite_differences() {
        let m = MlpMap::from_layers(
            vec![
                Layer::new(array![[2.0, 0.3], [0.1, 1.0]], array![0.0, 0.0]).unwrap(),
                Layer::new(array![[1.5, -0.2]], array![0.0]).unwrap(),
            ],
            0.01,
        )
        .unwrap();
        let (pi, g) = m.spectral_product_grad();
        assert!((pi - m.spectral_product()).abs() < 1e-12);
        let h = 1e-6;
        let analytic: Vec<f64> = g.values().copied().collect();
        for (k, &a) in analytic.iter().enumerate() {
            let mut plus = m.clone();
            *plus.params_mut().nth(k).unwrap() += h;
            let mut minus = m.clone();
            *minus.params_mut().nth(k).unwrap() -= h;
            let fd = (plus.spectral_product() - minus.spectral_product()) / (2.0 * h);
            assert!((fd - a).abs() < 1e-5, "param {k}: fd {fd} analytic {a}");
        }
    }

    #[test]
    fn lipschitz_soundness() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut m = MlpMap::glorot(&[4, 8, 8, 3], 0.01, &mut rng).unwrap();
            for layer in &mut m.layers {
                layer.b.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
            }
            let pi: f64 = m
                .layers
                .iter()
                .map(|l| spectral_norm(l.w.view(), 5000, 1e-15))
                .product();
            for _ in 0..20 {
                let a = Array2::from_shape_simple_fn((1, 4), || rng.gen_range(-3.0..3.0));
                let b = Array2::from_shape_simple_fn((1, 4), || rng.gen_range(-3.0..3.0));
                let dh = &m.forward(a.view()).unwrap() - &m.forward(b.view()).unwrap();
                let dx = &a - &b;
                assert!(
                    dh.dot(&dh.t())[[0, 0]].sqrt()
                        <= pi * dx.dot(&dx.t())[[0, 0]].sqrt() * (1.0 + 1e-9)
                );
            }
        }
    }

    #[test]
    fn glorot_is_bounded_and_seeded() {
        let a =
            MlpMap::glorot(&[10, 200, 200, 10], 0.01, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b =
            MlpMap::glorot(&[10, 200, 200, 10], 0.01, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let bound = (6.0f64 / 400.0).sqrt();
        assert!(a.layers[1].w.iter().all(|v| v.abs() <= bound));
        assert!(a.layers.iter().all(|l| l.b.iter().all(|&v| v == 0.0)));
    }
}
