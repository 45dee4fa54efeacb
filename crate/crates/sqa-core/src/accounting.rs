//! Exact static cost analysis: learnable-parameter counts and
//! multiply-accumulate counts per layer and in total, for any model
//! configuration.
//!
//! MAC convention (per single segment, batch excluded): a convolution costs
//! `L_out * C_out * C_in * K`, a dense layer `fan_in * fan_out`, and every
//! elementwise or reduction op (batch norm, ReLU, pooling, sigmoid, residual
//! add, channel scaling) one MAC per output element. Dropout is free at
//! inference and counts zero. The alternative convolution-only convention is
//! available behind [`MacConvention`].

use serde::{Deserialize, Serialize};

use crate::nn::model::{block_descs, stage_lengths, ModelConfig, BLOCK_KERNEL, STEM_KERNEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MacConvention {
    /// Convolutions, dense layers, and one MAC per elementwise output.
    #[default]
    Full,
    /// Convolutions and dense layers only.
    ConvOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCost {
    pub name: String,
    pub param_count: u64,
    pub mac_count: u64,
    /// (channels, length) of the layer output for one segment.
    pub output_shape: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<LayerCost>,
    pub total_params: u64,
    pub total_macs: u64,
}

impl CostReport {
    pub fn params_k(&self) -> f64 {
        self.total_params as f64 / 1e3
    }

    pub fn mmac(&self) -> f64 {
        self.total_macs as f64 / 1e6
    }

    /// Human-readable per-layer table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<36} {:>10} {:>12} {:>12}\n",
            "layer", "params", "MACs", "out shape"
        ));
        for r in &self.rows {
            s.push_str(&format!(
                "{:<36} {:>10} {:>12} {:>7}x{}\n",
                r.name, r.param_count, r.mac_count, r.output_shape.0, r.output_shape.1
            ));
        }
        s.push_str(&format!(
            "{:<36} {:>10} {:>12}   ({:.2}k params, {:.2} MMAC)\n",
            "total",
            self.total_params,
            self.total_macs,
            self.params_k(),
            self.mmac()
        ));
        s
    }
}

struct ReportBuilder {
    rows: Vec<LayerCost>,
    elementwise: bool,
}

impl ReportBuilder {
    fn push(&mut self, name: String, params: u64, macs: u64, shape: (usize, usize)) {
        self.rows.push(LayerCost {
            name,
            param_count: params,
            mac_count: macs,
            output_shape: shape,
        });
    }

    fn conv(&mut self, name: String, c_in: usize, c_out: usize, k: usize, l_out: usize) {
        let params = (c_out * c_in * k) as u64;
        let macs = (l_out * c_out * c_in * k) as u64;
        self.push(name, params, macs, (c_out, l_out));
    }

    fn elementwise(&mut self, name: String, params: u64, c: usize, l: usize) {
        let macs = if self.elementwise { (c * l) as u64 } else { 0 };
        self.push(name, params, macs, (c, l));
    }
}

/// Walk the architecture in graph order and price every layer.
pub fn emit_cost_report_with(
    config: &ModelConfig,
    input_len: usize,
    convention: MacConvention,
) -> CostReport {
    let mut b = ReportBuilder {
        rows: Vec::new(),
        elementwise: convention == MacConvention::Full,
    };
    let cfg = ModelConfig {
        segment_len: input_len,
        ..config.clone()
    };
    let (l_conv, l_pool, _, _) = stage_lengths(&cfg);
    let stem = cfg.stem_filters;
    b.conv("stem.conv".into(), cfg.in_channels, stem, STEM_KERNEL, l_conv);
    b.elementwise("stem.bn".into(), 2 * stem as u64, stem, l_conv);
    b.elementwise("stem.relu".into(), 0, stem, l_conv);
    b.elementwise("stem.maxpool".into(), 0, stem, l_pool);
    let mut l = l_pool;
    for desc in block_descs(&cfg) {
        let n = &desc.name;
        let l_out = if desc.stride == 2 { (l - 1) / 2 + 1 } else { l };
        b.conv(format!("{n}.conv1"), desc.c_in, desc.c_out, BLOCK_KERNEL, l_out);
        b.elementwise(format!("{n}.bn1"), 2 * desc.c_out as u64, desc.c_out, l_out);
        b.elementwise(format!("{n}.relu1"), 0, desc.c_out, l_out);
        b.push(format!("{n}.dropout1"), 0, 0, (desc.c_out, l_out));
        b.conv(format!("{n}.conv2"), desc.c_out, desc.c_out, BLOCK_KERNEL, l_out);
        b.elementwise(format!("{n}.bn2"), 2 * desc.c_out as u64, desc.c_out, l_out);
        b.push(format!("{n}.dropout2"), 0, 0, (desc.c_out, l_out));
        if cfg.use_se {
            let hidden = desc.c_out / cfg.reduction;
            b.elementwise(format!("{n}.se.avgpool"), 0, desc.c_out, 1);
            b.push(
                format!("{n}.se.fc1"),
                (hidden * desc.c_out) as u64,
                (hidden * desc.c_out) as u64,
                (hidden, 1),
            );
            b.elementwise(format!("{n}.se.relu"), 0, hidden, 1);
            b.push(
                format!("{n}.se.fc2"),
                (desc.c_out * hidden) as u64,
                (desc.c_out * hidden) as u64,
                (desc.c_out, 1),
            );
            b.elementwise(format!("{n}.se.sigmoid"), 0, desc.c_out, 1);
            b.elementwise(format!("{n}.se.scale"), 0, desc.c_out, l_out);
        }
        if desc.projection {
            b.conv(format!("{n}.downsample.conv"), desc.c_in, desc.c_out, 1, l_out);
            b.elementwise(
                format!("{n}.downsample.bn"),
                2 * desc.c_out as u64,
                desc.c_out,
                l_out,
            );
        }
        b.elementwise(format!("{n}.add"), 0, desc.c_out, l_out);
        b.elementwise(format!("{n}.relu2"), 0, desc.c_out, l_out);
        l = l_out;
    }
    let c_last = cfg.stage_filters.1;
    b.elementwise("aap".into(), 0, c_last, 1);
    b.push(
        "head.fc".into(),
        (cfg.num_classes * c_last + cfg.num_classes) as u64,
        (c_last * cfg.num_classes) as u64,
        (cfg.num_classes, 1),
    );

    let total_params = b.rows.iter().map(|r| r.param_count).sum();
    let total_macs = b.rows.iter().map(|r| r.mac_count).sum();
    CostReport {
        rows: b.rows,
        total_params,
        total_macs,
    }
}

pub fn emit_cost_report(config: &ModelConfig, input_len: usize) -> CostReport {
    emit_cost_report_with(config, input_len, MacConvention::Full)
}

/// Total learnable parameters (batch-norm running statistics excluded).
pub fn count_params(config: &ModelConfig) -> u64 {
    emit_cost_report(config, config.segment_len).total_params
}

/// Total multiply-accumulates for one segment inference.
pub fn count_macs(config: &ModelConfig, input_len: usize) -> u64 {
    emit_cost_report(config, input_len).total_macs
}
