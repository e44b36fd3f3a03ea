//! Forward and backward passes of the dual-stream block, the shared
//! per-channel extractor, and the full classifier.

use rand::Rng;

use super::params::{ConvLayer, DsscParams, ModelParams};
use super::ModelError;
use crate::nn::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, dense_backward,
    dense_forward, dropout_backward, dropout_forward, global_avg_pool_backward,
    global_avg_pool_forward, maxpool1d_backward, maxpool1d_forward, relu_backward, relu_forward,
    sepconv1d_backward, sepconv1d_forward, softmax, softmax_xent_backward, softmax_xent_forward,
    BatchNormCache, Conv1dCache, DropoutMask, Matrix, MaxPoolCache, Mode, NnError, Real,
    SepConvCache, Tensor3,
};

#[derive(Debug, Clone)]
enum ConvCache<T> {
    Separable(SepConvCache<T>),
    Standard(Conv1dCache<T>),
}

fn conv_forward<T: Real>(
    layer: &ConvLayer<T>,
    x: &Tensor3<T>,
) -> Result<(Tensor3<T>, ConvCache<T>), NnError> {
    match layer {
        ConvLayer::Separable(p) => {
            sepconv1d_forward(x, p).map(|(y, c)| (y, ConvCache::Separable(c)))
        }
        ConvLayer::Standard(p) => conv1d_forward(x, p).map(|(y, c)| (y, ConvCache::Standard(c))),
    }
}

fn conv_backward<T: Real>(
    layer: &ConvLayer<T>,
    cache: &ConvCache<T>,
    grad: &Tensor3<T>,
) -> Result<(Tensor3<T>, ConvLayer<T>), NnError> {
    match (layer, cache) {
        (ConvLayer::Separable(p), ConvCache::Separable(c)) => {
            sepconv1d_backward(p, c, grad).map(|(g, gp)| (g, ConvLayer::Separable(gp)))
        }
        (ConvLayer::Standard(p), ConvCache::Standard(c)) => {
            conv1d_backward(p, c, grad).map(|(g, gp)| (g, ConvLayer::Standard(gp)))
        }
        _ => Err(NnError::ShapeMismatch(
            "convolution cache does not match layer type".into(),
        )),
    }
}

fn relu_tensor<T: Real>(x: &Tensor3<T>) -> Tensor3<T> {
    let (b, c, l) = x.shape();
    Tensor3::from_vec(b, c, l, relu_forward(x.data())).expect("shape preserved")
}

fn relu_tensor_backward<T: Real>(input: &Tensor3<T>, grad: &Tensor3<T>) -> Tensor3<T> {
    let (b, c, l) = input.shape();
    Tensor3::from_vec(b, c, l, relu_backward(input.data(), grad.data())).expect("shape preserved")
}

#[derive(Debug, Clone)]
pub struct DsscCache<T> {
    conv1: ConvCache<T>,
    bn1: BatchNormCache<T>,
    pre_relu1: Tensor3<T>,
    pool1: MaxPoolCache,
    conv2: ConvCache<T>,
    bn2: BatchNormCache<T>,
    pre_relu2: Tensor3<T>,
    pool2: MaxPoolCache,
    shortcut1: ConvCache<T>,
    shortcut2: ConvCache<T>,
}

/// Output is `main + shortcut` with no activation after the sum.
pub fn dssc_forward<T: Real>(
    x: &Tensor3<T>,
    p: &DsscParams<T>,
    mode: Mode,
) -> Result<(Tensor3<T>, DsscCache<T>), ModelError> {
    let (h, conv1) = conv_forward(&p.main_conv1, x)?;
    let (pre_relu1, bn1) = batchnorm_forward(&h, &p.bn1, mode)?;
    let (h, pool1) = maxpool1d_forward(&relu_tensor(&pre_relu1), p.pool_size, p.pool_stride)?;
    let (h, conv2) = conv_forward(&p.main_conv2, &h)?;
    let (pre_relu2, bn2) = batchnorm_forward(&h, &p.bn2, mode)?;
    let (mut main, pool2) =
        maxpool1d_forward(&relu_tensor(&pre_relu2), p.pool_size, p.pool_stride)?;

    let (s, shortcut1) = conv_forward(&p.shortcut_conv1, x)?;
    let (s, shortcut2) = conv_forward(&p.shortcut_conv2, &s)?;
    if main.shape() != s.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "main stream {:?} and shortcut {:?} disagree",
            main.shape(),
            s.shape()
        ))
        .into());
    }
    main.add_assign(&s)?;
    Ok((
        main,
        DsscCache {
            conv1,
            bn1,
            pre_relu1,
            pool1,
            conv2,
            bn2,
            pre_relu2,
            pool2,
            shortcut1,
            shortcut2,
        },
    ))
}

pub fn dssc_backward<T: Real>(
    p: &DsscParams<T>,
    cache: &DsscCache<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, DsscParams<T>), ModelError> {
    let mut grads = p.zeros_like();

    let g = maxpool1d_backward(&cache.pool2, grad_out)?;
    let g = relu_tensor_backward(&cache.pre_relu2, &g);
    let (g, gbn2) = batchnorm_backward(&p.bn2, &cache.bn2, &g)?;
    let (g, gconv2) = conv_backward(&p.main_conv2, &cache.conv2, &g)?;
    let g = maxpool1d_backward(&cache.pool1, &g)?;
    let g = relu_tensor_backward(&cache.pre_relu1, &g);
    let (g, gbn1) = batchnorm_backward(&p.bn1, &cache.bn1, &g)?;
    let (mut grad_x, gconv1) = conv_backward(&p.main_conv1, &cache.conv1, &g)?;

    let (gs, gsc2) = conv_backward(&p.shortcut_conv2, &cache.shortcut2, grad_out)?;
    let (gs, gsc1) = conv_backward(&p.shortcut_conv1, &cache.shortcut1, &gs)?;
    grad_x.add_assign(&gs)?;

    grads.main_conv1 = gconv1;
    grads.bn1.gamma = gbn1.gamma;
    grads.bn1.beta = gbn1.beta;
    grads.main_conv2 = gconv2;
    grads.bn2.gamma = gbn2.gamma;
    grads.bn2.beta = gbn2.beta;
    grads.shortcut_conv1 = gsc1;
    grads.shortcut_conv2 = gsc2;
    Ok((grad_x, grads))
}

#[derive(Debug, Clone)]
pub struct ExtractorCache<T> {
    blocks: Vec<DsscCache<T>>,
    masks: Vec<Option<DropoutMask<T>>>,
    block_shapes: Vec<(usize, usize, usize)>,
}

/// Runs one channel (`B×1×T`) through the blocks and global average
/// pooling. Dropout sits between consecutive blocks only.
pub fn extractor_forward<T: Real, R: Rng + ?Sized>(
    x: &Tensor3<T>,
    blocks: &[DsscParams<T>],
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix<T>, ExtractorCache<T>), ModelError> {
    let mut h = x.clone();
    let mut cache = ExtractorCache {
        blocks: Vec::with_capacity(blocks.len()),
        masks: Vec::with_capacity(blocks.len()),
        block_shapes: Vec::with_capacity(blocks.len()),
    };
    for (i, block) in blocks.iter().enumerate() {
        let (out, c) = dssc_forward(&h, block, mode)?;
        cache.blocks.push(c);
        cache.block_shapes.push(out.shape());
        h = out;
        if i + 1 < blocks.len() {
            let (dropped, mask) = dropout_forward(h.data(), dropout, mode, rng);
            let (b, ch, l) = h.shape();
            h = Tensor3::from_vec(b, ch, l, dropped)?;
            cache.masks.push(mask);
        }
    }
    Ok((global_avg_pool_forward(&h), cache))
}

/// Returns gradients for the extractor blocks (running stats unused).
pub fn extractor_backward<T: Real>(
    blocks: &[DsscParams<T>],
    cache: &ExtractorCache<T>,
    grad_features: &Matrix<T>,
) -> Result<Vec<DsscParams<T>>, ModelError> {
    let last_len = cache.block_shapes.last().map(|s| s.2).unwrap_or(0);
    let mut g = global_avg_pool_backward(grad_features, last_len);
    let mut grads: Vec<DsscParams<T>> = Vec::with_capacity(blocks.len());
    for i in (0..blocks.len()).rev() {
        if i + 1 < blocks.len() {
            let (b, ch, l) = g.shape();
            g = Tensor3::from_vec(
                b,
                ch,
                l,
                dropout_backward(cache.masks[i].as_ref(), g.data()),
            )?;
        }
        let (gx, gp) = dssc_backward(&blocks[i], &cache.blocks[i], &g)?;
        grads.push(gp);
        g = gx;
    }
    grads.reverse();
    Ok(grads)
}

#[derive(Debug, Clone)]
pub struct ModelCache<T> {
    mode: Mode,
    channels: Vec<ExtractorCache<T>>,
    features: Matrix<T>,
    hidden_pre: Matrix<T>,
    head_mask: Option<DropoutMask<T>>,
    head_in: Matrix<T>,
    logits: Matrix<T>,
    probs: Matrix<T>,
}

impl<T: Real> ModelCache<T> {
    pub fn logits(&self) -> &Matrix<T> {
        &self.logits
    }

    pub fn probs(&self) -> &Matrix<T> {
        &self.probs
    }

    /// Concatenated per-channel pooled features, `B × (C·F_n)`.
    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// `B×C×T` input to `B×5` class probabilities.
pub fn model_forward<T: Real, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    x: &Tensor3<T>,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix<T>, ModelCache<T>), ModelError> {
    let cfg = &params.config;
    let (batch, channels, _) = x.shape();
    if channels != cfg.n_input_channels {
        return Err(NnError::ShapeMismatch(format!(
            "model expects {} input channels, got {channels}",
            cfg.n_input_channels
        ))
        .into());
    }
    let width = cfg.last_filters();
    let mut features = Matrix::zeros(batch, channels * width);
    let mut caches = Vec::with_capacity(channels);
    for c in 0..channels {
        let xc = x.select_channel(c);
        let (f, cache) = extractor_forward(&xc, &params.extractor, cfg.dropout_block, mode, rng)?;
        for b in 0..batch {
            features.row_mut(b)[c * width..(c + 1) * width].copy_from_slice(f.row(b));
        }
        caches.push(cache);
    }
    let hidden_pre = dense_forward(&features, &params.head_hidden)?;
    let hidden = relu_forward(hidden_pre.data());
    let (dropped, head_mask) = dropout_forward(&hidden, cfg.dropout_head, mode, rng);
    let head_in = Matrix::from_vec(batch, cfg.head_hidden, dropped)?;
    let logits = dense_forward(&head_in, &params.head_out)?;
    let probs = softmax(&logits);
    Ok((
        probs.clone(),
        ModelCache {
            mode,
            channels: caches,
            features,
            hidden_pre,
            head_mask,
            head_in,
            logits,
            probs,
        },
    ))
}

/// Backpropagates a gradient on the logits. Extractor gradients are summed
/// over channels in channel order.
pub fn model_backward_logits<T: Real>(
    params: &ModelParams<T>,
    cache: &ModelCache<T>,
    grad_logits: &Matrix<T>,
) -> Result<ModelParams<T>, ModelError> {
    let cfg = &params.config;
    let mut grads = params.zeros_like();
    let (g_head_in, g_out) = dense_backward(&params.head_out, &cache.head_in, grad_logits)?;
    grads.head_out = g_out;
    let g_hidden = dropout_backward(cache.head_mask.as_ref(), g_head_in.data());
    let g_pre = relu_backward(cache.hidden_pre.data(), &g_hidden);
    let g_pre = Matrix::from_vec(cache.hidden_pre.rows(), cache.hidden_pre.cols(), g_pre)?;
    let (g_features, g_hidden_params) =
        dense_backward(&params.head_hidden, &cache.features, &g_pre)?;
    grads.head_hidden = g_hidden_params;

    let width = cfg.last_filters();
    let batch = g_features.rows();
    for (c, ch_cache) in cache.channels.iter().enumerate() {
        let mut gf = Matrix::zeros(batch, width);
        for b in 0..batch {
            gf.row_mut(b)
                .copy_from_slice(&g_features.row(b)[c * width..(c + 1) * width]);
        }
        let block_grads = extractor_backward(&params.extractor, ch_cache, &gf)?;
        let mut partial = grads.zeros_like();
        partial.extractor = block_grads;
        grads.accumulate(&partial);
    }
    Ok(grads)
}

/// Mean cross-entropy of the cached forward pass and its full gradient.
pub fn model_backward<T: Real>(
    params: &ModelParams<T>,
    cache: &ModelCache<T>,
    labels: &[usize],
) -> Result<(T, ModelParams<T>), ModelError> {
    let (loss, probs) = softmax_xent_forward(&cache.logits, labels)?;
    let grad_logits = softmax_xent_backward(&probs, labels)?;
    let grads = model_backward_logits(params, cache, &grad_logits)?;
    Ok((loss, grads))
}

/// Applies the batch statistics of a training-mode pass to the running
/// estimates, one channel application after another.
pub fn update_running_stats<T: Real>(params: &mut ModelParams<T>, cache: &ModelCache<T>) {
    for ch in &cache.channels {
        for (block, bc) in params.extractor.iter_mut().zip(&ch.blocks) {
            block.bn1.update_running(&bc.bn1);
            block.bn2.update_running(&bc.bn2);
        }
    }
}

/// Inference-mode probabilities; does not consume randomness.
pub fn predict<T: Real>(params: &ModelParams<T>, x: &Tensor3<T>) -> Result<Matrix<T>, ModelError> {
    let mut unused = rand::rngs::mock::StepRng::new(0, 0);
    model_forward(params, x, Mode::Infer, &mut unused).map(|(p, _)| p)
}
