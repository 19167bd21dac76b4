//! The attentive CNN: one full-height convolution per kernel width, max
//! pooling and softmax attention over the convolution output, a dropout'd
//! concatenation, and one (single-view) or three (multi-view) softmax heads.

mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::nn::{
    accumulate_conv_param_grads, activation_backward, activation_forward, attention_backward, attention_forward,
    conv_full_height_forward, dropout_forward, linear_backward_into, linear_forward, pooled_len,
    softmax_cross_entropy, Activation, AttentionCache, ConvCache, ParamTensor,
};

pub use io::{load_model, load_params, save_model, save_params};

pub const NUM_EMOTIONS: usize = 4;
pub const NUM_DIMENSION_BINS: usize = 3;

/// Model family as named on the command line: CNN or attentive CNN, single-
/// or multi-view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "cnn-sv")]
    CnnSv,
    #[serde(rename = "cnn-mv")]
    CnnMv,
    #[serde(rename = "acnn-sv")]
    AcnnSv,
    #[serde(rename = "acnn-mv")]
    AcnnMv,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::CnnSv, Variant::CnnMv, Variant::AcnnSv, Variant::AcnnMv];

    pub fn attention(self) -> bool {
        matches!(self, Variant::AcnnSv | Variant::AcnnMv)
    }

    pub fn multi_view(self) -> bool {
        matches!(self, Variant::CnnMv | Variant::AcnnMv)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::CnnSv => "cnn-sv",
            Variant::CnnMv => "cnn-mv",
            Variant::AcnnSv => "acnn-sv",
            Variant::AcnnMv => "acnn-mv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Feature rows `d`.
    pub input_dim: usize,
    /// Frames `s` of every (cut/padded) input.
    pub input_len: usize,
    pub kernel_widths: Vec<usize>,
    pub kernels_per_width: usize,
    pub pool_size: usize,
    pub pool_stride: usize,
    pub conv_activation: Activation,
    /// Probability of zeroing a hidden unit during training.
    pub drop_prob: f64,
    pub attention: bool,
    pub multi_view: bool,
    pub num_emotions: usize,
    pub num_activation_bins: usize,
    pub num_valence_bins: usize,
}

impl ModelConfig {
    pub fn new(input_dim: usize, input_len: usize, variant: Variant) -> Self {
        Self {
            input_dim,
            input_len,
            kernel_widths: vec![5, 10],
            kernels_per_width: 100,
            pool_size: 30,
            pool_stride: 3,
            conv_activation: Activation::Relu,
            drop_prob: 0.2,
            attention: variant.attention(),
            multi_view: variant.multi_view(),
            num_emotions: NUM_EMOTIONS,
            num_activation_bins: NUM_DIMENSION_BINS,
            num_valence_bins: NUM_DIMENSION_BINS,
        }
    }

    /// Reads a dropout rate under either convention.
    pub fn with_dropout_rate(mut self, rate: f64, rate_is_keep_prob: bool) -> Self {
        self.drop_prob = if rate_is_keep_prob { 1.0 - rate } else { rate };
        self
    }

    pub fn variant(&self) -> Variant {
        match (self.attention, self.multi_view) {
            (false, false) => Variant::CnnSv,
            (false, true) => Variant::CnnMv,
            (true, false) => Variant::AcnnSv,
            (true, true) => Variant::AcnnMv,
        }
    }

    /// Shortest input every width group can convolve and pool.
    pub fn min_input_len(&self) -> usize {
        self.kernel_widths.iter().map(|w| w + self.pool_size - 1).max().unwrap_or(0)
    }

    pub fn pooled_lens(&self) -> Vec<usize> {
        self.kernel_widths
            .iter()
            .map(|&w| pooled_len(self.input_len + 1 - w.min(self.input_len + 1), self.pool_size, self.pool_stride))
            .collect()
    }

    /// Length of the concatenated vector fed to the heads.
    pub fn hidden_len(&self) -> usize {
        let pooled: usize = self.pooled_lens().iter().map(|l| l * self.kernels_per_width).sum();
        let attended = if self.attention {
            self.kernels_per_width * self.kernel_widths.len()
        } else {
            0
        };
        pooled + attended
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.kernel_widths.is_empty() || self.kernel_widths.contains(&0) {
            return bad(format!("kernel widths {:?} must be non-empty and >= 1", self.kernel_widths));
        }
        let mut sorted = self.kernel_widths.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.kernel_widths.len() {
            return bad(format!("kernel widths {:?} must be distinct", self.kernel_widths));
        }
        if self.kernels_per_width == 0 || self.pool_size == 0 || self.pool_stride == 0 {
            return bad("kernel count, pool size and stride must be positive".into());
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return bad(format!("drop probability {} outside [0, 1)", self.drop_prob));
        }
        if self.num_emotions < 2 || self.num_activation_bins < 2 || self.num_valence_bins < 2 {
            return bad("every head needs at least two classes".into());
        }
        if self.input_len < self.min_input_len() {
            return Err(Error::InputTooShort {
                required: self.min_input_len(),
                found: self.input_len,
            });
        }
        Ok(())
    }

    /// SHA-256 of the JSON encoding (field order is fixed by the struct).
    pub fn fingerprint(&self) -> String {
        fingerprint_json(&serde_json::to_value(self).expect("config serializes"))
    }
}

/// Hex SHA-256 of a JSON value's compact encoding.
pub fn fingerprint_json(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("json value serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Convolution kernels, bias and (optionally) the attention score vector for
/// one kernel width.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthGroup {
    pub width: usize,
    /// `n × (d·width)`, see [`conv_full_height_forward`] for the layout.
    pub kernels: ParamTensor,
    /// `1 × n`
    pub bias: ParamTensor,
    /// `n × 1`
    pub score: Option<ParamTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    /// `classes × hidden`
    pub weight: ParamTensor,
    /// `1 × classes`
    pub bias: ParamTensor,
}

impl Head {
    fn zeros(classes: usize, hidden: usize) -> Self {
        Self {
            weight: ParamTensor::zeros(classes, hidden),
            bias: ParamTensor::zeros(1, classes),
        }
    }

    fn logits(&self, hidden: &[f64]) -> Result<Vec<f64>> {
        linear_forward(hidden, &self.weight.value, self.bias.value.row(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub groups: Vec<WidthGroup>,
    pub emotion: Head,
    pub activation: Option<Head>,
    pub valence: Option<Head>,
}

impl ModelParams {
    /// All-zero parameters with the shapes `config` implies.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let n = config.kernels_per_width;
        let hidden = config.hidden_len();
        let groups = config
            .kernel_widths
            .iter()
            .map(|&w| WidthGroup {
                width: w,
                kernels: ParamTensor::zeros(n, config.input_dim * w),
                bias: ParamTensor::zeros(1, n),
                score: config.attention.then(|| ParamTensor::zeros(n, 1)),
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            groups,
            emotion: Head::zeros(config.num_emotions, hidden),
            activation: config.multi_view.then(|| Head::zeros(config.num_activation_bins, hidden)),
            valence: config.multi_view.then(|| Head::zeros(config.num_valence_bins, hidden)),
        })
    }

    /// Named tensors in a fixed order (the order used for serialization and
    /// by the optimizer).
    pub fn named_tensors(&self) -> Vec<(String, &ParamTensor)> {
        let mut out = Vec::new();
        for g in &self.groups {
            out.push((format!("conv.w{}.kernels", g.width), &g.kernels));
            out.push((format!("conv.w{}.bias", g.width), &g.bias));
            if let Some(s) = &g.score {
                out.push((format!("attention.w{}.score", g.width), s));
            }
        }
        for (name, head) in self.heads() {
            out.push((format!("head.{name}.weight"), &head.weight));
            out.push((format!("head.{name}.bias"), &head.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::new();
        for g in &mut self.groups {
            out.push(&mut g.kernels);
            out.push(&mut g.bias);
            if let Some(s) = &mut g.score {
                out.push(s);
            }
        }
        for head in [Some(&mut self.emotion), self.activation.as_mut(), self.valence.as_mut()]
            .into_iter()
            .flatten()
        {
            out.push(&mut head.weight);
            out.push(&mut head.bias);
        }
        out
    }

    fn heads(&self) -> Vec<(&'static str, &Head)> {
        let mut v = vec![("emotion", &self.emotion)];
        if let Some(h) = &self.activation {
            v.push(("activation", h));
        }
        if let Some(h) = &self.valence {
            v.push(("valence", h));
        }
        v
    }

    pub fn zero_grad(&mut self) {
        self.tensors_mut().into_iter().for_each(ParamTensor::zero_grad);
    }

    pub fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.value.len()).sum()
    }
}

/// Glorot-uniform weights (`|v| ≤ sqrt(6/(rows+cols))` per tensor), zero
/// biases. Deterministic in `seed`.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut glorot = |t: &mut ParamTensor| {
        let (r, c) = t.shape();
        let bound = (6.0 / (r + c) as f64).sqrt();
        t.value
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-bound..=bound));
    };
    for g in &mut params.groups {
        glorot(&mut g.kernels);
        if let Some(s) = &mut g.score {
            glorot(s);
        }
    }
    glorot(&mut params.emotion.weight);
    if let Some(h) = &mut params.activation {
        glorot(&mut h.weight);
    }
    if let Some(h) = &mut params.valence {
        glorot(&mut h.weight);
    }
    Ok(params)
}

struct GroupCache {
    conv: ConvCache,
    /// Post-activation convolution output, `n × T`.
    activated: RealMatrix,
    argmax: Vec<Vec<usize>>,
    attention: Option<AttentionCache>,
}

/// Saved intermediates for [`backward`]; present only after a training-mode
/// forward.
pub struct ForwardCache {
    groups: Vec<GroupCache>,
    /// Hidden vector after dropout, as seen by the heads.
    hidden: Vec<f64>,
    mask: Option<Vec<f64>>,
}

pub struct ForwardOutput {
    pub emotion_logits: Vec<f64>,
    pub activation_logits: Option<Vec<f64>>,
    pub valence_logits: Option<Vec<f64>>,
    /// One attention distribution per kernel width (empty for the CNN variant).
    pub alphas: Vec<Vec<f64>>,
    pub cache: Option<ForwardCache>,
}

/// Runs the network on one `d × s` input. `rng` drives dropout and is only
/// consulted when `training`.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    input: &FeatureMatrix,
    training: bool,
    rng: &mut R,
) -> Result<ForwardOutput> {
    forward_matrix(params, &input.data, training, rng)
}

pub fn forward_matrix<R: Rng + ?Sized>(
    params: &ModelParams,
    input: &RealMatrix,
    training: bool,
    rng: &mut R,
) -> Result<ForwardOutput> {
    let cfg = &params.config;
    if input.rows() != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_dim,
            found: input.rows(),
        });
    }
    if input.cols() < cfg.min_input_len() {
        return Err(Error::InputTooShort {
            required: cfg.min_input_len(),
            found: input.cols(),
        });
    }
    if input.cols() != cfg.input_len {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} frames, input has {}",
            cfg.input_len,
            input.cols()
        )));
    }

    let n = cfg.kernels_per_width;
    let mut pooled = Vec::with_capacity(cfg.hidden_len());
    let mut attended = Vec::new();
    let mut alphas = Vec::new();
    let mut caches = Vec::with_capacity(params.groups.len());
    for g in &params.groups {
        let (mut z, conv_cache) = conv_full_height_forward(input, &g.kernels.value, g.bias.value.row(0), g.width)?;
        activation_forward(cfg.conv_activation, z.as_mut_slice());
        let mut argmax = Vec::with_capacity(n);
        for c in 0..n {
            let (vals, idx) = crate::nn::maxpool1d_forward(z.row(c), cfg.pool_size, cfg.pool_stride)?;
            pooled.extend_from_slice(&vals);
            argmax.push(idx);
        }
        let attention = match &g.score {
            Some(score) => {
                let (att, cache) = attention_forward(&z, score.value.as_slice())?;
                attended.extend_from_slice(&att);
                alphas.push(cache.alphas.clone());
                Some(cache)
            }
            None => None,
        };
        caches.push(GroupCache {
            conv: conv_cache,
            activated: z,
            argmax,
            attention,
        });
    }
    pooled.extend_from_slice(&attended);
    let (hidden, mask) = dropout_forward(&pooled, cfg.drop_prob, rng, training);

    let emotion_logits = params.emotion.logits(&hidden)?;
    let activation_logits = params.activation.as_ref().map(|h| h.logits(&hidden)).transpose()?;
    let valence_logits = params.valence.as_ref().map(|h| h.logits(&hidden)).transpose()?;
    Ok(ForwardOutput {
        emotion_logits,
        activation_logits,
        valence_logits,
        alphas,
        cache: training.then_some(ForwardCache {
            groups: caches,
            hidden,
            mask,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub emotion: usize,
    pub activation: usize,
    pub valence: usize,
}

/// Loss weights of the auxiliary activation and valence heads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewWeights {
    pub activation: f64,
    pub valence: f64,
}

impl Default for ViewWeights {
    fn default() -> Self {
        Self {
            activation: 1.0,
            valence: 1.0,
        }
    }
}

/// `∂loss/∂logits` per head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub emotion: Vec<f64>,
    pub activation: Option<Vec<f64>>,
    pub valence: Option<Vec<f64>>,
}

/// `CE_emotion + λ_a·CE_activation + λ_v·CE_valence`; single-view outputs
/// contribute the emotion term only.
pub fn multi_view_loss(out: &ForwardOutput, labels: Labels, weights: ViewWeights) -> Result<(f64, HeadGrads)> {
    let (mut loss, emotion) = softmax_cross_entropy(&out.emotion_logits, labels.emotion)?;
    let mut aux = |logits: &Option<Vec<f64>>, label: usize, weight: f64| -> Result<Option<Vec<f64>>> {
        match logits {
            Some(l) => {
                let (ce, mut g) = softmax_cross_entropy(l, label)?;
                loss += weight * ce;
                g.iter_mut().for_each(|v| *v *= weight);
                Ok(Some(g))
            }
            None => Ok(None),
        }
    };
    let activation = aux(&out.activation_logits, labels.activation, weights.activation)?;
    let valence = aux(&out.valence_logits, labels.valence, weights.valence)?;
    Ok((
        loss,
        HeadGrads {
            emotion,
            activation,
            valence,
        },
    ))
}

/// Accumulates parameter gradients for one utterance into `params`.
pub fn backward(params: &mut ModelParams, out: &ForwardOutput, grads: &HeadGrads) -> Result<()> {
    let cache = out.cache.as_ref().ok_or(Error::MissingCache)?;
    let hidden = &cache.hidden;
    let mut d_hidden = vec![0.0; hidden.len()];

    let head_pairs = [
        (Some(&mut params.emotion), Some(&grads.emotion)),
        (params.activation.as_mut(), grads.activation.as_ref()),
        (params.valence.as_mut(), grads.valence.as_ref()),
    ];
    for (head, g) in head_pairs {
        match (head, g) {
            (Some(head), Some(g)) => {
                let Head { weight, bias } = head;
                linear_backward_into(
                    hidden,
                    &weight.value,
                    g,
                    &mut weight.grad,
                    bias.grad.row_mut(0),
                    Some(&mut d_hidden),
                );
            }
            (None, None) => {}
            _ => return Err(Error::ShapeMismatch("head gradients do not match model heads".into())),
        }
    }
    if let Some(mask) = &cache.mask {
        d_hidden.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
    }

    let cfg = &params.config;
    let n = cfg.kernels_per_width;
    let pooled_total: usize = cfg.pooled_lens().iter().map(|l| l * n).sum();
    let mut pooled_offset = 0;
    let activation = cfg.conv_activation;
    for (gi, (group, gc)) in params.groups.iter_mut().zip(&cache.groups).enumerate() {
        let (_, t_len) = gc.activated.shape();
        let mut d_act = RealMatrix::zeros(n, t_len);
        for c in 0..n {
            let idx = &gc.argmax[c];
            let seg = &d_hidden[pooled_offset..pooled_offset + idx.len()];
            let row = d_act.row_mut(c);
            for (&i, &g) in idx.iter().zip(seg) {
                row[i] += g;
            }
            pooled_offset += idx.len();
        }
        if let (Some(score), Some(att_cache)) = (group.score.as_mut(), gc.attention.as_ref()) {
            let start = pooled_total + gi * n;
            let upstream = &d_hidden[start..start + n];
            let g = attention_backward(&gc.activated, score.value.as_slice(), att_cache, upstream);
            d_act.as_mut_slice().iter_mut().zip(g.x.as_slice()).for_each(|(a, b)| *a += b);
            score.grad.as_mut_slice().iter_mut().zip(&g.score).for_each(|(a, b)| *a += b);
        }
        activation_backward(activation, gc.activated.as_slice(), d_act.as_mut_slice());
        accumulate_conv_param_grads(&gc.conv, &d_act, &mut group.kernels.grad, group.bias.grad.row_mut(0))?;
    }
    Ok(())
}

/// Training-mode forward, loss and backward for one utterance. Returns the loss.
pub fn loss_and_backward<R: Rng + ?Sized>(
    params: &mut ModelParams,
    input: &RealMatrix,
    labels: Labels,
    weights: ViewWeights,
    rng: &mut R,
) -> Result<f64> {
    let out = forward_matrix(params, input, true, rng)?;
    let (loss, grads) = multi_view_loss(&out, labels, weights)?;
    backward(params, &out, &grads)?;
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub emotion: usize,
    pub activation: Option<usize>,
    pub valence: Option<usize>,
    pub alphas: Vec<Vec<f64>>,
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Inference-mode prediction (no dropout).
pub fn predict(params: &ModelParams, input: &RealMatrix) -> Result<Prediction> {
    // inference never draws from the generator
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let out = forward_matrix(params, input, false, &mut rng)?;
    Ok(Prediction {
        emotion: argmax(&out.emotion_logits),
        activation: out.activation_logits.as_deref().map(argmax),
        valence: out.valence_logits.as_deref().map(argmax),
        alphas: out.alphas,
    })
}
