//! The lightweight 1D residual network with optional squeeze-and-excitation
//! blocks: configuration, parameter layout, forward inference and
//! reverse-mode gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqaError};
use crate::nn::layers::*;
use crate::nn::params::ParameterStore;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor3;
use crate::rng::SplitMix64;

pub const STEM_KERNEL: usize = 7;
pub const STEM_STRIDE: usize = 2;
pub const STEM_PADDING: usize = 3;
pub const POOL_KERNEL: usize = 3;
pub const POOL_STRIDE: usize = 2;
pub const POOL_PADDING: usize = 1;
pub const BLOCK_KERNEL: usize = 3;
pub const BLOCK_PADDING: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub use_se: bool,
    pub reduction: usize,
    pub stem_filters: usize,
    pub stage_filters: (usize, usize),
    pub blocks_per_stage: (usize, usize),
    pub dropout_p: f64,
    pub num_classes: usize,
    pub segment_len: usize,
}

impl ModelConfig {
    pub fn new(in_channels: usize, use_se: bool) -> Self {
        Self {
            in_channels,
            use_se,
            reduction: 8,
            stem_filters: 32,
            stage_filters: (32, 64),
            blocks_per_stage: (2, 2),
            dropout_p: 0.2,
            num_classes: 2,
            segment_len: 960,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.in_channels) {
            return Err(SqaError::ShapeMismatch(format!(
                "in_channels must be 1..=4, got {}",
                self.in_channels
            )));
        }
        if self.stage_filters.0 != self.stem_filters {
            return Err(SqaError::ShapeMismatch(
                "stage 1 filter count must equal the stem filter count".into(),
            ));
        }
        if self.use_se
            && (self.reduction == 0
                || !self.stage_filters.0.is_multiple_of(self.reduction)
                || !self.stage_filters.1.is_multiple_of(self.reduction))
        {
            return Err(SqaError::ShapeMismatch(format!(
                "reduction ratio {} must divide stage filter counts {:?}",
                self.reduction, self.stage_filters
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(SqaError::InvalidP(self.dropout_p));
        }
        if self.num_classes < 2 || self.blocks_per_stage.0 == 0 || self.blocks_per_stage.1 == 0 {
            return Err(SqaError::ShapeMismatch("degenerate model config".into()));
        }
        // the graph must leave at least one temporal sample everywhere
        let (_, _, _, l2) = stage_lengths(self);
        if l2 == 0 {
            return Err(SqaError::ShapeMismatch(format!(
                "segment length {} collapses inside the network",
                self.segment_len
            )));
        }
        Ok(())
    }
}

/// One residual block's static description.
#[derive(Debug, Clone)]
pub struct BlockDesc {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
    pub projection: bool,
}

/// Blocks in graph order. Stage 2 opens with a stride-2 block and a 1x1
/// projection shortcut; everything else is identity-shortcut stride 1.
pub fn block_descs(config: &ModelConfig) -> Vec<BlockDesc> {
    let mut blocks = Vec::new();
    let (c1, c2) = config.stage_filters;
    let (n1, n2) = config.blocks_per_stage;
    for i in 0..n1 {
        blocks.push(BlockDesc {
            name: format!("layer1.block{i}"),
            c_in: c1,
            c_out: c1,
            stride: 1,
            projection: false,
        });
    }
    for i in 0..n2 {
        let first = i == 0;
        blocks.push(BlockDesc {
            name: format!("layer2.block{i}"),
            c_in: if first { c1 } else { c2 },
            c_out: c2,
            stride: if first { 2 } else { 1 },
            projection: first,
        });
    }
    blocks
}

/// Temporal lengths after the stem conv, the stem pool, stage 1 and stage 2.
pub fn stage_lengths(config: &ModelConfig) -> (usize, usize, usize, usize) {
    let l_conv = conv_out_len(config.segment_len, STEM_KERNEL, STEM_STRIDE, STEM_PADDING)
        .unwrap_or(0);
    let l_pool = conv_out_len(l_conv, POOL_KERNEL, POOL_STRIDE, POOL_PADDING).unwrap_or(0);
    let l_stage1 = l_pool;
    let l_stage2 = conv_out_len(l_stage1, BLOCK_KERNEL, 2, BLOCK_PADDING).unwrap_or(0);
    (l_conv, l_pool, l_stage1, l_stage2)
}

/// The full ordered (name, shape) list of learnable parameters for a config.
pub fn expected_parameters(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    out.push((
        "stem.conv.weight".to_string(),
        vec![config.stem_filters, config.in_channels, STEM_KERNEL],
    ));
    out.push(("stem.bn.gamma".to_string(), vec![config.stem_filters]));
    out.push(("stem.bn.beta".to_string(), vec![config.stem_filters]));
    for desc in block_descs(config) {
        let n = &desc.name;
        out.push((
            format!("{n}.conv1.weight"),
            vec![desc.c_out, desc.c_in, BLOCK_KERNEL],
        ));
        out.push((format!("{n}.bn1.gamma"), vec![desc.c_out]));
        out.push((format!("{n}.bn1.beta"), vec![desc.c_out]));
        out.push((
            format!("{n}.conv2.weight"),
            vec![desc.c_out, desc.c_out, BLOCK_KERNEL],
        ));
        out.push((format!("{n}.bn2.gamma"), vec![desc.c_out]));
        out.push((format!("{n}.bn2.beta"), vec![desc.c_out]));
        if config.use_se {
            let hidden = desc.c_out / config.reduction;
            out.push((format!("{n}.se.fc1.weight"), vec![hidden, desc.c_out]));
            out.push((format!("{n}.se.fc2.weight"), vec![desc.c_out, hidden]));
        }
        if desc.projection {
            out.push((
                format!("{n}.downsample.conv.weight"),
                vec![desc.c_out, desc.c_in, 1],
            ));
            out.push((format!("{n}.downsample.bn.gamma"), vec![desc.c_out]));
            out.push((format!("{n}.downsample.bn.beta"), vec![desc.c_out]));
        }
    }
    out.push((
        "head.fc.weight".to_string(),
        vec![config.num_classes, config.stage_filters.1],
    ));
    out.push(("head.fc.bias".to_string(), vec![config.num_classes]));
    out
}

/// Ordered (name, channels) list of batch-norm running-statistic slots.
pub fn expected_stats(config: &ModelConfig) -> Vec<(String, usize)> {
    let mut out = vec![("stem.bn".to_string(), config.stem_filters)];
    for desc in block_descs(config) {
        out.push((format!("{}.bn1", desc.name), desc.c_out));
        out.push((format!("{}.bn2", desc.name), desc.c_out));
        if desc.projection {
            out.push((format!("{}.downsample.bn", desc.name), desc.c_out));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
pub struct Model<F> {
    pub config: ModelConfig,
    pub params: ParameterStore<F>,
    pub mode: Mode,
}

#[derive(Debug)]
pub struct BlockTrace<F> {
    x_in: Tensor3<F>,
    bn1: BnCache<F>,
    relu1_out: Tensor3<F>,
    drop1_out: Tensor3<F>,
    bn2: BnCache<F>,
    se_in: Option<Tensor3<F>>,
    se: Option<SeCache<F>>,
    down_bn: Option<BnCache<F>>,
    out: Tensor3<F>,
}

/// Everything a training-mode forward pass caches for the backward pass.
#[derive(Debug)]
pub struct ForwardTrace<F> {
    batch: usize,
    x: Tensor3<F>,
    stem_bn: BnCache<F>,
    stem_relu_out: Tensor3<F>,
    pool_argmax: Vec<usize>,
    blocks: Vec<BlockTrace<F>>,
    stage_out_shape: (usize, usize, usize),
    pooled: Vec<F>,
    masks: Vec<Vec<bool>>,
}

impl<F: Scalar> ForwardTrace<F> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Intermediate shapes in graph order: input, stem conv output, pool
    /// output, the last output of each stage, pooled features, logits.
    pub fn shape_trace(&self, num_classes: usize) -> Vec<(usize, usize, usize)> {
        let mut shapes = vec![self.x.shape(), self.stem_relu_out.shape()];
        shapes.push(self.blocks[0].x_in.shape());
        let mut stage_shapes: Vec<(usize, usize, usize)> =
            self.blocks.iter().map(|b| b.out.shape()).collect();
        stage_shapes.dedup();
        shapes.extend(stage_shapes);
        shapes.push((self.batch, self.stage_out_shape.1, 1));
        shapes.push((self.batch, num_classes, 1));
        shapes
    }
}

impl<F: Scalar> Model<F> {
    /// Build a freshly initialized model. Convolution and fully connected
    /// weights are He-uniform over the fan-in, batch-norm affine is (1, 0),
    /// biases start at zero. Draws consume `rng` in parameter order.
    pub fn init(config: ModelConfig, rng: &mut SplitMix64) -> Result<Self> {
        config.validate()?;
        let mut params = ParameterStore::new();
        for (name, shape) in expected_parameters(&config) {
            let count: usize = shape.iter().product();
            let values: Vec<F> = if name.ends_with(".gamma") {
                vec![F::one(); count]
            } else if name.ends_with(".beta") || name.ends_with(".bias") {
                vec![F::zero(); count]
            } else {
                let fan_in: usize = shape[1..].iter().product();
                let bound = (6.0 / fan_in as f64).sqrt();
                (0..count)
                    .map(|_| F::from_f64(rng.uniform_in(-bound, bound)))
                    .collect()
            };
            params.insert(&name, shape, values);
        }
        for (name, channels) in expected_stats(&config) {
            params.insert_stats(&name, channels);
        }
        Ok(Self {
            config,
            params,
            mode: Mode::Train,
        })
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn check_input(&self, x: &Tensor3<F>) -> Result<()> {
        if x.channels != self.config.in_channels || x.len != self.config.segment_len {
            return Err(SqaError::ShapeMismatch(format!(
                "input is [{}, {}, {}], model expects [*, {}, {}]",
                x.batch, x.channels, x.len, self.config.in_channels, self.config.segment_len
            )));
        }
        Ok(())
    }

    fn weights(&self, name: &str) -> &[F] {
        &self.params.get(name).values
    }

    fn bn_eval(&self, prefix: &str, x: &Tensor3<F>) -> Result<Tensor3<F>> {
        let gamma = self.weights(&format!("{prefix}.gamma"));
        let beta = self.weights(&format!("{prefix}.beta"));
        let stats = self.params.stats(prefix);
        let mut rm = stats.running_mean.clone();
        let mut rv = stats.running_var.clone();
        let (y, _) = batchnorm1d_forward(x, gamma, beta, &mut rm, &mut rv, false)?;
        Ok(y)
    }

    fn bn_train(&mut self, prefix: &str, x: &Tensor3<F>) -> Result<(Tensor3<F>, BnCache<F>)> {
        let gamma = self.params.get(&format!("{prefix}.gamma")).values.clone();
        let beta = self.params.get(&format!("{prefix}.beta")).values.clone();
        let stats = self.params.stats_mut(prefix);
        let (y, cache) = batchnorm1d_forward(
            x,
            &gamma,
            &beta,
            &mut stats.running_mean,
            &mut stats.running_var,
            true,
        )?;
        Ok((y, cache.expect("training-mode BN always caches")))
    }

    /// Deterministic inference: dropout disabled, batch norm on running
    /// statistics, no caching.
    pub fn forward_eval(&self, x: &Tensor3<F>) -> Result<Vec<F>> {
        self.check_input(x)?;
        let y = conv1d_forward(
            x,
            self.weights("stem.conv.weight"),
            self.config.stem_filters,
            STEM_KERNEL,
            STEM_STRIDE,
            STEM_PADDING,
        )?;
        let y = self.bn_eval("stem.bn", &y)?;
        let y = relu_forward(&y);
        let (mut y, _) = maxpool1d_forward(&y, POOL_KERNEL, POOL_STRIDE, POOL_PADDING)?;
        for desc in block_descs(&self.config) {
            y = self.block_eval(&desc, &y)?;
        }
        let pooled = adaptive_avg_pool1(&y);
        let logits = linear_forward(
            &pooled,
            x.batch,
            self.config.stage_filters.1,
            self.config.num_classes,
            self.weights("head.fc.weight"),
            Some(self.weights("head.fc.bias")),
        )?;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(SqaError::NonFinite("forward_eval"));
        }
        Ok(logits)
    }

    fn block_eval(&self, desc: &BlockDesc, x: &Tensor3<F>) -> Result<Tensor3<F>> {
        let n = &desc.name;
        let c1 = conv1d_forward(
            x,
            self.weights(&format!("{n}.conv1.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            desc.stride,
            BLOCK_PADDING,
        )?;
        let b1 = self.bn_eval(&format!("{n}.bn1"), &c1)?;
        let r1 = relu_forward(&b1);
        let c2 = conv1d_forward(
            &r1,
            self.weights(&format!("{n}.conv2.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            1,
            BLOCK_PADDING,
        )?;
        let b2 = self.bn_eval(&format!("{n}.bn2"), &c2)?;
        let main = if self.config.use_se {
            se_forward(
                &b2,
                self.weights(&format!("{n}.se.fc1.weight")),
                self.weights(&format!("{n}.se.fc2.weight")),
            )?
            .0
        } else {
            b2
        };
        let shortcut = if desc.projection {
            let sc = conv1d_forward(
                x,
                self.weights(&format!("{n}.downsample.conv.weight")),
                desc.c_out,
                1,
                desc.stride,
                0,
            )?;
            self.bn_eval(&format!("{n}.downsample.bn"), &sc)?
        } else {
            x.clone()
        };
        let mut sum = main;
        for (v, &s) in sum.data.iter_mut().zip(&shortcut.data) {
            *v += s;
        }
        Ok(relu_forward(&sum))
    }

    /// Draw the dropout keep masks a training forward pass will consume,
    /// two per residual block, in block order.
    pub fn make_dropout_masks(
        &self,
        batch: usize,
        rng: &mut SplitMix64,
    ) -> Result<Vec<Vec<bool>>> {
        let (_, l_pool, _, l_stage2) = stage_lengths(&self.config);
        let mut masks = Vec::new();
        for desc in block_descs(&self.config) {
            let l = if desc.c_out == self.config.stage_filters.1 {
                l_stage2
            } else {
                l_pool
            };
            let site = batch * desc.c_out * l;
            masks.push(dropout_mask(rng, site, self.config.dropout_p)?);
            masks.push(dropout_mask(rng, site, self.config.dropout_p)?);
        }
        Ok(masks)
    }

    /// Training-mode forward: batch statistics, dropout with the supplied
    /// masks, full activation caching. Updates BN running statistics.
    pub fn forward_train(
        &mut self,
        x: &Tensor3<F>,
        masks: &[Vec<bool>],
    ) -> Result<(Vec<F>, ForwardTrace<F>)> {
        if self.mode != Mode::Train {
            return Err(SqaError::InvalidMode(
                "forward_train called on a model in eval mode".into(),
            ));
        }
        self.check_input(x)?;
        let descs = block_descs(&self.config);
        if masks.len() != 2 * descs.len() {
            return Err(SqaError::ShapeMismatch(format!(
                "expected {} dropout masks, got {}",
                2 * descs.len(),
                masks.len()
            )));
        }
        let y = conv1d_forward(
            x,
            self.weights("stem.conv.weight"),
            self.config.stem_filters,
            STEM_KERNEL,
            STEM_STRIDE,
            STEM_PADDING,
        )?;
        let (y, stem_bn) = self.bn_train("stem.bn", &y)?;
        let stem_relu_out = relu_forward(&y);
        let (mut y, pool_argmax) =
            maxpool1d_forward(&stem_relu_out, POOL_KERNEL, POOL_STRIDE, POOL_PADDING)?;
        let mut blocks = Vec::with_capacity(descs.len());
        for (i, desc) in descs.iter().enumerate() {
            let (out, tr) = self.block_train(desc, &y, &masks[2 * i], &masks[2 * i + 1])?;
            y = out;
            blocks.push(tr);
        }
        let stage_out_shape = y.shape();
        let pooled = adaptive_avg_pool1(&y);
        let logits = linear_forward(
            &pooled,
            x.batch,
            self.config.stage_filters.1,
            self.config.num_classes,
            self.weights("head.fc.weight"),
            Some(self.weights("head.fc.bias")),
        )?;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(SqaError::NonFinite("forward_train"));
        }
        Ok((
            logits.clone(),
            ForwardTrace {
                batch: x.batch,
                x: x.clone(),
                stem_bn,
                stem_relu_out,
                pool_argmax,
                blocks,
                stage_out_shape,
                pooled,
                masks: masks.to_vec(),
            },
        ))
    }

    fn block_train(
        &mut self,
        desc: &BlockDesc,
        x: &Tensor3<F>,
        mask1: &[bool],
        mask2: &[bool],
    ) -> Result<(Tensor3<F>, BlockTrace<F>)> {
        let n = desc.name.clone();
        let p = self.config.dropout_p;
        let c1 = conv1d_forward(
            x,
            self.weights(&format!("{n}.conv1.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            desc.stride,
            BLOCK_PADDING,
        )?;
        let (b1, bn1) = self.bn_train(&format!("{n}.bn1"), &c1)?;
        let relu1_out = relu_forward(&b1);
        let drop1_out = dropout_apply(&relu1_out, mask1, p);
        let c2 = conv1d_forward(
            &drop1_out,
            self.weights(&format!("{n}.conv2.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            1,
            BLOCK_PADDING,
        )?;
        let (b2, bn2) = self.bn_train(&format!("{n}.bn2"), &c2)?;
        let d2 = dropout_apply(&b2, mask2, p);
        let (main, se_in, se) = if self.config.use_se {
            let (y, cache) = se_forward(
                &d2,
                self.weights(&format!("{n}.se.fc1.weight")),
                self.weights(&format!("{n}.se.fc2.weight")),
            )?;
            (y, Some(d2), Some(cache))
        } else {
            (d2, None, None)
        };
        let (shortcut, down_bn) = if desc.projection {
            let sc = conv1d_forward(
                x,
                self.weights(&format!("{n}.downsample.conv.weight")),
                desc.c_out,
                1,
                desc.stride,
                0,
            )?;
            let (sc, cache) = self.bn_train(&format!("{n}.downsample.bn"), &sc)?;
            (sc, Some(cache))
        } else {
            (x.clone(), None)
        };
        let mut sum = main;
        for (v, &s) in sum.data.iter_mut().zip(&shortcut.data) {
            *v += s;
        }
        let out = relu_forward(&sum);
        Ok((
            out.clone(),
            BlockTrace {
                x_in: x.clone(),
                bn1,
                relu1_out,
                drop1_out,
                bn2,
                se_in,
                se,
                down_bn,
                out,
            },
        ))
    }

    fn add_grad(&mut self, name: &str, delta: &[F]) {
        let g = &mut self.params.get_mut(name).grad;
        debug_assert_eq!(g.len(), delta.len(), "grad shape for {name}");
        for (gi, &d) in g.iter_mut().zip(delta) {
            *gi += d;
        }
    }

    /// Reverse-mode pass. Fills every parameter's gradient buffer from the
    /// loss gradient with respect to the logits.
    pub fn backward(&mut self, trace: &ForwardTrace<F>, dlogits: &[F]) -> Result<()> {
        if dlogits.len() != trace.batch * self.config.num_classes {
            return Err(SqaError::StaleCache(format!(
                "loss gradient has {} entries, trace batch is {}",
                dlogits.len(),
                trace.batch
            )));
        }
        self.params.zero_grads();
        let c_last = self.config.stage_filters.1;
        let (dpooled, dw_fc, db_fc) = linear_backward(
            &trace.pooled,
            trace.batch,
            c_last,
            self.config.num_classes,
            self.weights("head.fc.weight"),
            dlogits,
        );
        self.add_grad("head.fc.weight", &dw_fc);
        self.add_grad("head.fc.bias", &db_fc);
        let mut d = adaptive_avg_pool1_backward(trace.stage_out_shape, &dpooled);
        let descs = block_descs(&self.config);
        for (i, desc) in descs.iter().enumerate().rev() {
            d = self.block_backward(
                desc,
                &trace.blocks[i],
                &trace.masks[2 * i],
                &trace.masks[2 * i + 1],
                &d,
            )?;
        }
        // stem: pool <- relu <- bn <- conv
        let d = maxpool1d_backward(trace.stem_relu_out.shape(), &trace.pool_argmax, &d);
        let d = relu_backward(&trace.stem_relu_out, &d);
        let (d, dgamma, dbeta) = batchnorm1d_backward(
            &d,
            &trace.stem_bn,
            self.weights("stem.bn.gamma"),
        );
        self.add_grad("stem.bn.gamma", &dgamma);
        self.add_grad("stem.bn.beta", &dbeta);
        let (_, dw) = conv1d_backward(
            &trace.x,
            self.weights("stem.conv.weight"),
            self.config.stem_filters,
            STEM_KERNEL,
            STEM_STRIDE,
            STEM_PADDING,
            &d,
        )?;
        self.add_grad("stem.conv.weight", &dw);
        Ok(())
    }

    fn block_backward(
        &mut self,
        desc: &BlockDesc,
        tr: &BlockTrace<F>,
        mask1: &[bool],
        mask2: &[bool],
        dout: &Tensor3<F>,
    ) -> Result<Tensor3<F>> {
        let n = desc.name.clone();
        let p = self.config.dropout_p;
        let dsum = relu_backward(&tr.out, dout);
        // main branch
        let mut d = dsum.clone();
        if self.config.use_se {
            let se_in = tr.se_in.as_ref().expect("SE input cached");
            let cache = tr.se.as_ref().expect("SE cache");
            let (dx_se, dfc1, dfc2) = se_backward(
                se_in,
                &d,
                self.weights(&format!("{n}.se.fc1.weight")),
                self.weights(&format!("{n}.se.fc2.weight")),
                cache,
            );
            self.add_grad(&format!("{n}.se.fc1.weight"), &dfc1);
            self.add_grad(&format!("{n}.se.fc2.weight"), &dfc2);
            d = dx_se;
        }
        let d = dropout_backward(&d, mask2, p);
        let (d, dgamma2, dbeta2) =
            batchnorm1d_backward(&d, &tr.bn2, self.weights(&format!("{n}.bn2.gamma")));
        self.add_grad(&format!("{n}.bn2.gamma"), &dgamma2);
        self.add_grad(&format!("{n}.bn2.beta"), &dbeta2);
        let (d, dw2) = conv1d_backward(
            &tr.drop1_out,
            self.weights(&format!("{n}.conv2.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            1,
            BLOCK_PADDING,
            &d,
        )?;
        self.add_grad(&format!("{n}.conv2.weight"), &dw2);
        let d = dropout_backward(&d, mask1, p);
        let d = relu_backward(&tr.relu1_out, &d);
        let (d, dgamma1, dbeta1) =
            batchnorm1d_backward(&d, &tr.bn1, self.weights(&format!("{n}.bn1.gamma")));
        self.add_grad(&format!("{n}.bn1.gamma"), &dgamma1);
        self.add_grad(&format!("{n}.bn1.beta"), &dbeta1);
        let (mut dx, dw1) = conv1d_backward(
            &tr.x_in,
            self.weights(&format!("{n}.conv1.weight")),
            desc.c_out,
            BLOCK_KERNEL,
            desc.stride,
            BLOCK_PADDING,
            &d,
        )?;
        self.add_grad(&format!("{n}.conv1.weight"), &dw1);
        // shortcut branch
        if desc.projection {
            let cache = tr.down_bn.as_ref().expect("projection BN cache");
            let (d_sc, dgamma_d, dbeta_d) = batchnorm1d_backward(
                &dsum,
                cache,
                self.weights(&format!("{n}.downsample.bn.gamma")),
            );
            self.add_grad(&format!("{n}.downsample.bn.gamma"), &dgamma_d);
            self.add_grad(&format!("{n}.downsample.bn.beta"), &dbeta_d);
            let (dx_sc, dw_d) = conv1d_backward(
                &tr.x_in,
                self.weights(&format!("{n}.downsample.conv.weight")),
                desc.c_out,
                1,
                desc.stride,
                0,
                &d_sc,
            )?;
            self.add_grad(&format!("{n}.downsample.conv.weight"), &dw_d);
            for (v, &s) in dx.data.iter_mut().zip(&dx_sc.data) {
                *v += s;
            }
        } else {
            for (v, &s) in dx.data.iter_mut().zip(&dsum.data) {
                *v += s;
            }
        }
        Ok(dx)
    }
}
