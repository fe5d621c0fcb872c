//! The two-part classifier: a hidden MLP, a radius-`r` normalizing feature
//! map, and a linear head, with exact reverse-mode gradients.
//!
//! Matrices are row-major batches: an `n × d` input produces an `n × p`
//! representation and an `n × k` score matrix (`k = 1` for the bias-free
//! binary head, `k = c` otherwise).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Norms below this are treated as degenerate.
pub const NORM_EPS: f64 = 1e-12;
/// Added to a degenerate norm in training mode.
pub const NORM_SMOOTHING: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Identity => z.clone(),
        }
    }

    fn backprop(self, z: &Array2<f64>, d: &mut Array2<f64>) {
        if self == Activation::Relu {
            Zip::from(d).and(z).for_each(|g, &zv| {
                if zv <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::DimMismatch { expected: weight.nrows(), got: bias.len() });
        }
        Ok(Self { weight, bias, activation })
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut rng::Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weight = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit));
        Self { weight, bias: Array1::zeros(fan_out), activation }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn pre_activation(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrad {
    fn zeros_like(layer: &DenseLayer) -> Self {
        Self { weight: Array2::zeros(layer.weight.raw_dim()), bias: Array1::zeros(layer.bias.len()) }
    }
}

/// Hidden module: a stack of dense layers mapping `d` inputs to `p` outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenNetwork {
    layers: Vec<DenseLayer>,
}

/// Intermediate values recorded by a traced forward pass.
#[derive(Clone, Debug)]
pub struct HiddenTrace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl HiddenTrace {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    /// Pre-activation matrices, one per layer.
    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }
}

impl HiddenNetwork {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("hidden network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::DimMismatch { expected: w[0].out_dim(), got: w[1].in_dim() });
            }
        }
        for l in &layers {
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite hidden parameter".into()));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimMismatch { expected: self.input_dim(), got: cols });
        }
        Ok(())
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut h = x.to_owned();
        for l in &self.layers {
            h = l.activation.apply(&l.pre_activation(h.view()));
        }
        Ok(h)
    }

    pub fn forward_traced(&self, x: ArrayView2<f64>) -> Result<HiddenTrace> {
        self.check_input(x.ncols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for l in &self.layers {
            let z = l.pre_activation(h.view());
            let a = l.activation.apply(&z);
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        Ok(HiddenTrace { inputs, pre, output: h })
    }

    /// Gradients of every layer given the adjoint at the network output.
    pub fn backward(&self, trace: &HiddenTrace, d_out: ArrayView2<f64>) -> Result<Vec<LayerGrad>> {
        if trace.pre.len() != self.layers.len() || d_out.dim() != trace.output.dim() {
            return Err(Error::DimMismatch { expected: trace.output.ncols(), got: d_out.ncols() });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = d_out.to_owned();
        for (k, l) in self.layers.iter().enumerate().rev() {
            l.activation.backprop(&trace.pre[k], &mut d);
            let gw = d.t().dot(&trace.inputs[k]);
            let gb = d.sum_axis(Axis(0));
            if k > 0 {
                d = d.dot(&l.weight);
            }
            grads.push(LayerGrad { weight: gw, bias: gb });
        }
        grads.reverse();
        Ok(grads)
    }

    pub fn apply_update(&mut self, grads: &[LayerGrad], step: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.weight.scaled_add(-step, &g.weight);
            l.bias.scaled_add(-step, &g.bias);
        }
    }

    pub fn zero_grads(&self) -> Vec<LayerGrad> {
        self.layers.iter().map(LayerGrad::zeros_like).collect()
    }
}

/// How to treat a representation whose norm is (numerically) zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// Fail with [`Error::DegenerateActivation`].
    Strict,
    /// Divide by `‖v‖ + NORM_SMOOTHING` instead.
    Training,
}

/// Rescales every representation onto the sphere of radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    radius: f64,
}

impl FeatureMap {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn denominator(norm: f64, mode: NormMode) -> Result<f64> {
        if norm < NORM_EPS {
            match mode {
                NormMode::Strict => Err(Error::DegenerateActivation(norm)),
                NormMode::Training => Ok(norm + NORM_SMOOTHING),
            }
        } else {
            Ok(norm)
        }
    }

    pub fn normalize(&self, v: &[f64], mode: NormMode) -> Result<Vec<f64>> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite representation".into()));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let den = Self::denominator(norm, mode)?;
        Ok(v.iter().map(|x| self.radius * x / den).collect())
    }

    /// Row-wise normalization; also returns each row's denominator.
    pub fn normalize_batch(&self, v: ArrayView2<f64>, mode: NormMode) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut phi = v.to_owned();
        let mut dens = Array1::zeros(v.nrows());
        for (mut row, den) in phi.rows_mut().into_iter().zip(dens.iter_mut()) {
            let d = Self::denominator(row.dot(&row).sqrt(), mode)?;
            row *= self.radius / d;
            *den = d;
        }
        Ok((phi, dens))
    }

    /// Adjoint of [`normalize_batch`]: `(r/‖v‖)(I − v vᵀ/‖v‖²)` applied to `dphi`.
    pub fn backward_batch(&self, phi: ArrayView2<f64>, dens: ArrayView1<f64>, dphi: ArrayView2<f64>) -> Array2<f64> {
        let r2 = self.radius * self.radius;
        let mut dv = dphi.to_owned();
        for ((mut g, p), &den) in dv.rows_mut().into_iter().zip(phi.rows()).zip(dens.iter()) {
            let scale = self.radius / den;
            if den >= NORM_EPS && den.is_finite() && den > NORM_SMOOTHING {
                let proj = p.dot(&g) / r2;
                g.scaled_add(-proj, &p);
            }
            g *= scale;
        }
        dv
    }
}

/// Normalizes one representation onto the radius-`r` sphere.
pub fn phi_normalize(phi: &FeatureMap, v: &[f64], mode: NormMode) -> Result<Vec<f64>> {
    phi.normalize(v, mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// One bias-free weight vector; predicts class 1 iff the score is positive.
    Binary,
    /// One weight vector and bias per class; predicts the argmax.
    Multiclass,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinearHead {
    Binary { w: Array1<f64> },
    Multiclass { w: Array2<f64>, b: Array1<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum HeadGrad {
    Binary { w: Array1<f64> },
    Multiclass { w: Array2<f64>, b: Array1<f64> },
}

impl LinearHead {
    pub fn zeros(kind: HeadKind, feature_dim: usize, class_count: usize) -> Self {
        match kind {
            HeadKind::Binary => LinearHead::Binary { w: Array1::zeros(feature_dim) },
            HeadKind::Multiclass => {
                LinearHead::Multiclass { w: Array2::zeros((class_count, feature_dim)), b: Array1::zeros(class_count) }
            }
        }
    }

    pub fn glorot(kind: HeadKind, feature_dim: usize, class_count: usize, rng: &mut rng::Rng) -> Self {
        match kind {
            HeadKind::Binary => {
                let layer = DenseLayer::glorot(feature_dim, 1, Activation::Identity, rng);
                LinearHead::Binary { w: layer.weight.row(0).to_owned() }
            }
            HeadKind::Multiclass => {
                let layer = DenseLayer::glorot(feature_dim, class_count, Activation::Identity, rng);
                LinearHead::Multiclass { w: layer.weight, b: layer.bias }
            }
        }
    }

    pub fn kind(&self) -> HeadKind {
        match self {
            LinearHead::Binary { .. } => HeadKind::Binary,
            LinearHead::Multiclass { .. } => HeadKind::Multiclass,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            LinearHead::Binary { w } => w.len(),
            LinearHead::Multiclass { w, .. } => w.ncols(),
        }
    }

    /// Score columns: 1 for binary, `c` for multiclass.
    pub fn outputs(&self) -> usize {
        match self {
            LinearHead::Binary { .. } => 1,
            LinearHead::Multiclass { w, .. } => w.nrows(),
        }
    }

    pub fn scores_batch(&self, phi: ArrayView2<f64>) -> Array2<f64> {
        match self {
            LinearHead::Binary { w } => phi.dot(w).insert_axis(Axis(1)),
            LinearHead::Multiclass { w, b } => phi.dot(&w.t()) + b,
        }
    }

    /// Parameter gradients and the adjoint with respect to the features.
    pub fn backward(&self, phi: ArrayView2<f64>, dscores: ArrayView2<f64>) -> (HeadGrad, Array2<f64>) {
        match self {
            LinearHead::Binary { w } => {
                let ds = dscores.column(0);
                let gw = phi.t().dot(&ds);
                let dphi = ds.insert_axis(Axis(1)).dot(&w.view().insert_axis(Axis(0)));
                (HeadGrad::Binary { w: gw }, dphi)
            }
            LinearHead::Multiclass { w, .. } => {
                let gw = dscores.t().dot(&phi);
                let gb = dscores.sum_axis(Axis(0));
                (HeadGrad::Multiclass { w: gw, b: gb }, dscores.dot(w))
            }
        }
    }

    pub fn apply_update(&mut self, g: &HeadGrad, step: f64) {
        match (self, g) {
            (LinearHead::Binary { w }, HeadGrad::Binary { w: gw }) => w.scaled_add(-step, gw),
            (LinearHead::Multiclass { w, b }, HeadGrad::Multiclass { w: gw, b: gb }) => {
                w.scaled_add(-step, gw);
                b.scaled_add(-step, gb);
            }
            _ => panic!("head gradient kind does not match head"),
        }
    }

    pub fn zero_grad(&self) -> HeadGrad {
        match self {
            LinearHead::Binary { w } => HeadGrad::Binary { w: Array1::zeros(w.len()) },
            LinearHead::Multiclass { w, b } => {
                HeadGrad::Multiclass { w: Array2::zeros(w.raw_dim()), b: Array1::zeros(b.len()) }
            }
        }
    }

    pub fn max_weight_norm(&self) -> f64 {
        match self {
            LinearHead::Binary { w } => w.dot(w).sqrt(),
            LinearHead::Multiclass { w, .. } => w.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max),
        }
    }
}

/// Rescales the head so every class weight vector has norm at most `1/r`.
///
/// A single shared factor `1 / (r · max‖wᵢ‖)` is applied to all weights and
/// biases, so class scores keep their ordering. For one weight vector this is
/// `w / (‖w‖ r)`.
pub fn project_head(head: &LinearHead, r: f64) -> LinearHead {
    let max_norm = head.max_weight_norm();
    if max_norm * r <= 1.0 {
        return head.clone();
    }
    let s = 1.0 / (max_norm * r);
    match head {
        LinearHead::Binary { w } => LinearHead::Binary { w: w * s },
        LinearHead::Multiclass { w, b } => LinearHead::Multiclass { w: w * s, b: b * s },
    }
}

/// Class from a score vector: sign for a single score, else the argmax with
/// ties going to the lowest index.
pub fn predict_from_scores(scores: ArrayView1<f64>) -> usize {
    if scores.len() == 1 {
        return usize::from(scores[0] > 0.0);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGrad>,
    pub head: HeadGrad,
}

impl Gradients {
    /// Flattened in the same order as [`TwoPartClassifier::params_flat`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = flatten_hidden(&self.hidden);
        match &self.head {
            HeadGrad::Binary { w } => out.extend(w.iter()),
            HeadGrad::Multiclass { w, b } => {
                out.extend(w.iter());
                out.extend(b.iter());
            }
        }
        out
    }
}

pub fn flatten_hidden(grads: &[LayerGrad]) -> Vec<f64> {
    grads.iter().flat_map(|g| g.weight.iter().chain(g.bias.iter()).copied()).collect()
}

/// Everything a backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct ModelTrace {
    pub hidden: HiddenTrace,
    pub phi: Array2<f64>,
    pub denominators: Array1<f64>,
    pub scores: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPartClassifier {
    pub hidden: HiddenNetwork,
    pub feature_map: FeatureMap,
    pub head: LinearHead,
    class_count: usize,
}

impl TwoPartClassifier {
    pub fn new(hidden: HiddenNetwork, feature_map: FeatureMap, head: LinearHead, class_count: usize) -> Result<Self> {
        if hidden.output_dim() != head.feature_dim() {
            return Err(Error::DimMismatch { expected: hidden.output_dim(), got: head.feature_dim() });
        }
        match &head {
            LinearHead::Binary { .. } if class_count != 2 => {
                return Err(Error::InvalidConfig(format!("binary head needs 2 classes, got {class_count}")))
            }
            LinearHead::Multiclass { w, b } if w.nrows() != class_count || b.len() != class_count => {
                return Err(Error::ClassCountMismatch { model: w.nrows(), data: class_count })
            }
            _ => {}
        }
        Ok(Self { hidden, feature_map, head, class_count })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.input_dim()
    }

    pub fn radius(&self) -> f64 {
        self.feature_map.radius()
    }

    fn row(x: &[f64]) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((1, x.len()), x).expect("row view")
    }

    /// `F1(x)`, before normalization.
    pub fn forward_hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.hidden.forward_batch(Self::row(x))?.into_raw_vec_and_offset().0)
    }

    pub fn forward_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.scores_batch(Self::row(x))?.into_raw_vec_and_offset().0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let s = self.forward_full(x)?;
        Ok(predict_from_scores(ArrayView1::from(&s[..])))
    }

    /// Normalized representations `φ(F1(x))` for a batch.
    pub fn features_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let v = self.hidden.forward_batch(x)?;
        Ok(self.feature_map.normalize_batch(v.view(), NormMode::Training)?.0)
    }

    pub fn scores_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.head.scores_batch(self.features_batch(x)?.view()))
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let s = self.scores_batch(x)?;
        Ok(s.rows().into_iter().map(predict_from_scores).collect())
    }

    pub fn forward_traced(&self, x: ArrayView2<f64>) -> Result<ModelTrace> {
        let hidden = self.hidden.forward_traced(x)?;
        let (phi, denominators) = self.feature_map.normalize_batch(hidden.output.view(), NormMode::Training)?;
        let scores = self.head.scores_batch(phi.view());
        Ok(ModelTrace { hidden, phi, denominators, scores })
    }

    /// Hidden-layer gradients given the adjoint at the normalized features.
    pub fn backward_features(&self, trace: &ModelTrace, dphi: ArrayView2<f64>) -> Result<Vec<LayerGrad>> {
        if dphi.dim() != trace.phi.dim() {
            return Err(Error::DimMismatch { expected: trace.phi.ncols(), got: dphi.ncols() });
        }
        let dv = self.feature_map.backward_batch(trace.phi.view(), trace.denominators.view(), dphi);
        self.hidden.backward(&trace.hidden, dv.view())
    }

    /// Gradients of every parameter given the adjoint at the scores.
    pub fn backward(&self, trace: &ModelTrace, dscores: ArrayView2<f64>) -> Result<Gradients> {
        if dscores.dim() != trace.scores.dim() {
            return Err(Error::DimMismatch { expected: trace.scores.ncols(), got: dscores.ncols() });
        }
        let (head, dphi) = self.head.backward(trace.phi.view(), dscores);
        let hidden = self.backward_features(trace, dphi.view())?;
        Ok(Gradients { hidden, head })
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.hidden.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied()).collect();
        match &self.head {
            LinearHead::Binary { w } => out.extend(w.iter()),
            LinearHead::Multiclass { w, b } => {
                out.extend(w.iter());
                out.extend(b.iter());
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.params_flat().len() {
            return Err(Error::DimMismatch { expected: self.params_flat().len(), got: p.len() });
        }
        let mut it = p.iter().copied();
        for l in &mut self.hidden.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = it.next().unwrap());
        }
        match &mut self.head {
            LinearHead::Binary { w } => w.iter_mut().for_each(|v| *v = it.next().unwrap()),
            LinearHead::Multiclass { w, b } => w.iter_mut().chain(b.iter_mut()).for_each(|v| *v = it.next().unwrap()),
        }
        Ok(())
    }

    pub fn hidden_params_flat(&self) -> Vec<f64> {
        self.hidden.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied()).collect()
    }

    /// Copy with the head norm-constrained for evaluation or saving.
    pub fn projected(&self) -> Self {
        let mut m = self.clone();
        m.head = project_head(&self.head, self.radius());
        m
    }
}

/// Architecture of a [`TwoPartClassifier`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub input_dim: usize,
    /// Widths of the ReLU hidden layers.
    #[serde(default)]
    pub hidden: Vec<usize>,
    /// Width `p` of the representation layer.
    pub feature_dim: usize,
    #[serde(default = "default_feature_activation")]
    pub feature_activation: Activation,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_feature_activation() -> Activation {
    Activation::Identity
}

fn default_radius() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn mlp(input_dim: usize, hidden: Vec<usize>, feature_dim: usize) -> Self {
        Self { input_dim, hidden, feature_dim, feature_activation: Activation::Identity, radius: 1.0 }
    }

    /// Fresh model with Glorot-uniform weights drawn from the `init` stream.
    pub fn build(&self, class_count: usize, head: HeadKind, seed: u64) -> Result<TwoPartClassifier> {
        if self.input_dim == 0 || self.feature_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        let mut rng = rng::stream(seed, rng::INIT, 0);
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.feature_dim);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let act = if k == last { self.feature_activation } else { Activation::Relu };
                DenseLayer::glorot(w[0], w[1], act, &mut rng)
            })
            .collect();
        let head = LinearHead::glorot(head, self.feature_dim, class_count, &mut rng);
        TwoPartClassifier::new(HiddenNetwork::new(layers)?, FeatureMap::new(self.radius)?, head, class_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn identity_net() -> HiddenNetwork {
        HiddenNetwork::new(vec![DenseLayer::new(Array2::eye(2), Array1::zeros(2), Activation::Identity).unwrap()])
            .unwrap()
    }

    fn model_with(hidden: HiddenNetwork, head: LinearHead, c: usize) -> TwoPartClassifier {
        TwoPartClassifier::new(hidden, FeatureMap::new(1.0).unwrap(), head, c).unwrap()
    }

    #[test]
    fn forward_hidden_cases() {
        let m = model_with(identity_net(), LinearHead::zeros(HeadKind::Binary, 2, 2), 2);
        assert_eq!(m.forward_hidden(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let relu = HiddenNetwork::new(vec![DenseLayer::new(
            array![[1.0, 0.0], [0.0, -1.0]],
            Array1::zeros(2),
            Activation::Relu,
        )
        .unwrap()])
        .unwrap();
        let m = model_with(relu, LinearHead::zeros(HeadKind::Binary, 2, 2), 2);
        assert_eq!(m.forward_hidden(&[1.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(m.forward_hidden(&[1.0]), Err(Error::DimMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn normalize_cases() {
        let f = FeatureMap::new(1.0).unwrap();
        let v = f.normalize(&[3.0, 4.0], NormMode::Strict).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        let f2 = FeatureMap::new(2.0).unwrap();
        assert_eq!(f2.normalize(&[0.0, 5.0], NormMode::Strict).unwrap(), vec![0.0, 2.0]);
        assert!(matches!(f.normalize(&[0.0, 0.0], NormMode::Strict), Err(Error::DegenerateActivation(_))));
        assert_eq!(f.normalize(&[0.0, 0.0], NormMode::Training).unwrap(), vec![0.0, 0.0]);
        assert!(FeatureMap::new(0.0).is_err());
    }

    #[test]
    fn forward_full_and_predict() {
        let head = LinearHead::Binary { w: array![1.0, 0.0] };
        let m = model_with(identity_net(), head, 2);
        let s = m.forward_full(&[3.0, 4.0]).unwrap();
        assert!((s[0] - 0.6).abs() < 1e-15);
        assert_eq!(m.predict(&[3.0, 4.0]).unwrap(), 1);

        let zero = model_with(identity_net(), LinearHead::zeros(HeadKind::Multiclass, 2, 3), 3);
        assert_eq!(zero.forward_full(&[1.0, -2.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(predict_from_scores(array![0.1, 0.9, 0.3].view()), 1);
        assert_eq!(predict_from_scores(array![0.5, 0.5].view()), 0);
        assert_eq!(predict_from_scores(array![0.0].view()), 0);
        let s = array![0.2, -1.0, 0.7, 0.7];
        assert_eq!(predict_from_scores((&s * 3.5).view()), predict_from_scores(s.view()));
        assert_eq!(predict_from_scores((&s + 10.0).view()), 2);
    }

    #[test]
    fn projection_cases() {
        let p = project_head(&LinearHead::Binary { w: array![2.0, 0.0] }, 1.0);
        assert_eq!(p, LinearHead::Binary { w: array![1.0, 0.0] });
        let inside = LinearHead::Binary { w: array![0.5, 0.0] };
        assert_eq!(project_head(&inside, 1.0), inside);
        let multi = LinearHead::Multiclass { w: array![[3.0, 4.0], [0.0, 1.0]], b: array![1.0, -1.0] };
        let once = project_head(&multi, 2.0);
        assert!(once.max_weight_norm() <= 0.5 + 1e-15);
        assert_eq!(project_head(&once, 2.0), once);
    }

    #[test]
    fn build_matches_spec() {
        let spec = ModelSpec::mlp(3, vec![5, 4], 2);
        let m = spec.build(4, HeadKind::Multiclass, 1).unwrap();
        let dims: Vec<_> = m.hidden.layers().iter().map(|l| (l.in_dim(), l.out_dim(), l.activation)).collect();
        assert_eq!(dims, vec![(3, 5, Activation::Relu), (5, 4, Activation::Relu), (4, 2, Activation::Identity)]);
        let limit = (6.0f64 / 8.0).sqrt();
        assert!(m.hidden.layers()[0].weight.iter().all(|w| w.abs() <= limit));
        assert!(m.hidden.layers()[0].bias.iter().all(|&b| b == 0.0));
        assert_eq!(spec.build(4, HeadKind::Multiclass, 1).unwrap(), m);
        assert!(spec.build(3, HeadKind::Binary, 1).is_err());
    }

    #[test]
    fn backward_shape_errors() {
        let m = ModelSpec::mlp(2, vec![3], 2).build(2, HeadKind::Binary, 0).unwrap();
        let x = array![[0.1, 0.2], [0.3, -0.4]];
        let tr = m.forward_traced(x.view()).unwrap();
        assert!(m.backward(&tr, Array2::zeros((2, 2)).view()).is_err());
        let g = m.backward(&tr, Array2::zeros((2, 1)).view()).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }
}
