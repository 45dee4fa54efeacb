//! Model weight files: a structured-text header followed by a raw
//! little-endian f32 body.
//!
//! Header lines, in order: the format tag, byte order, scalar width, the
//! creation seed, the input channel kinds, the model config as one JSON
//! line, one `param name dims` line per learnable array, one
//! `stats name channels` line per batch-norm running-statistic slot, then
//! `end`. The body is every parameter's values in header order, then each
//! statistic slot's running mean followed by its running variance. The load
//! path revalidates the layout against the config and fails closed.

use std::io::{Read, Write};
use std::path::Path;

use crate::dsp::ChannelKind;
use crate::error::{Result, SqaError};
use crate::nn::model::{expected_parameters, expected_stats};
use crate::nn::{ModelConfig, ParameterStore};

const FORMAT_TAG: &str = "SQAW v1";

#[derive(Debug)]
pub struct LoadedWeights {
    pub store: ParameterStore<f32>,
    pub config: ModelConfig,
    pub channels: Vec<ChannelKind>,
    pub seed: u64,
}

fn shape_str(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

pub fn save_weights(
    store: &ParameterStore<f32>,
    config: &ModelConfig,
    channels: &[ChannelKind],
    seed: u64,
    path: &Path,
) -> Result<()> {
    let expected = expected_parameters(config);
    let names: Vec<&String> = expected.iter().map(|(n, _)| n).collect();
    if store.names().iter().collect::<Vec<_>>() != names {
        return Err(SqaError::ShapeMismatch(
            "parameter store does not match the model config".into(),
        ));
    }
    let mut header = String::new();
    header.push_str(FORMAT_TAG);
    header.push('\n');
    header.push_str("byte_order little-endian\n");
    header.push_str("scalar f32\n");
    header.push_str(&format!("seed {seed}\n"));
    let ch: Vec<&str> = channels.iter().map(|c| c.name()).collect();
    header.push_str(&format!("channels {}\n", ch.join(",")));
    header.push_str(&format!(
        "config {}\n",
        serde_json::to_string(config).expect("config serializes")
    ));
    for (name, shape) in &expected {
        header.push_str(&format!("param {name} {}\n", shape_str(shape)));
    }
    for (name, c) in expected_stats(config) {
        header.push_str(&format!("stats {name} {c}\n"));
    }
    header.push_str("end\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    let mut body = Vec::new();
    for (_, p) in store.iter() {
        for v in &p.values {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    for name in store.stat_names().to_vec() {
        let s = store.stats(&name);
        for v in s.running_mean.iter().chain(&s.running_var) {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    file.write_all(&body)?;
    Ok(())
}

fn header_field<'a>(line: Option<&'a str>, key: &str, path: &Path) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix(key))
        .map(str::trim)
        .ok_or_else(|| SqaError::MalformedFile {
            path: path.display().to_string(),
            line: 0,
            msg: format!("missing header field {key:?}"),
        })
}

pub fn load_weights(path: &Path) -> Result<LoadedWeights> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    // the header is ASCII up to the line after "end"
    let end_tag = b"\nend\n";
    let header_end = raw
        .windows(end_tag.len())
        .position(|w| w == end_tag)
        .ok_or_else(|| SqaError::VersionMismatch("no header terminator".into()))?
        + end_tag.len();
    let header = std::str::from_utf8(&raw[..header_end])
        .map_err(|_| SqaError::VersionMismatch("header is not UTF-8".into()))?;
    let body = &raw[header_end..];

    let mut lines = header.lines();
    let tag = lines.next().unwrap_or("");
    if tag != FORMAT_TAG {
        return Err(SqaError::VersionMismatch(format!(
            "expected {FORMAT_TAG:?}, found {tag:?}"
        )));
    }
    let order = header_field(lines.next(), "byte_order", path)?;
    let scalar = header_field(lines.next(), "scalar", path)?;
    if order != "little-endian" || scalar != "f32" {
        return Err(SqaError::VersionMismatch(format!(
            "unsupported layout {order}/{scalar}"
        )));
    }
    let seed: u64 = header_field(lines.next(), "seed", path)?
        .parse()
        .map_err(|_| SqaError::VersionMismatch("bad seed field".into()))?;
    let channels: Vec<ChannelKind> = header_field(lines.next(), "channels", path)?
        .split(',')
        .map(|s| {
            ChannelKind::parse(s)
                .ok_or_else(|| SqaError::InvalidMode(format!("unknown channel {s:?}")))
        })
        .collect::<Result<_>>()?;
    let config: ModelConfig = serde_json::from_str(header_field(lines.next(), "config", path)?)
        .map_err(|e| SqaError::VersionMismatch(format!("bad config json: {e}")))?;
    config.validate()?;

    // every param and stats line must match the config's reconstruction
    let mut param_lines = Vec::new();
    let mut stats_lines = Vec::new();
    for line in lines {
        if line == "end" {
            break;
        }
        if let Some(rest) = line.strip_prefix("param ") {
            param_lines.push(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("stats ") {
            stats_lines.push(rest.to_string());
        } else {
            return Err(SqaError::VersionMismatch(format!(
                "unexpected header line {line:?}"
            )));
        }
    }
    let expected = expected_parameters(&config);
    let expected_lines: Vec<String> = expected
        .iter()
        .map(|(n, s)| format!("{n} {}", shape_str(s)))
        .collect();
    if param_lines != expected_lines {
        return Err(SqaError::ShapeMismatch(
            "parameter list does not match the header config".into(),
        ));
    }
    let stats_expected = expected_stats(&config);
    let stats_expected_lines: Vec<String> = stats_expected
        .iter()
        .map(|(n, c)| format!("{n} {c}"))
        .collect();
    if stats_lines != stats_expected_lines {
        return Err(SqaError::ShapeMismatch(
            "statistics list does not match the header config".into(),
        ));
    }

    let param_scalars: usize = expected
        .iter()
        .map(|(_, s)| s.iter().product::<usize>())
        .sum();
    let stat_scalars: usize = stats_expected.iter().map(|(_, c)| 2 * c).sum();
    let expected_bytes = 4 * (param_scalars + stat_scalars);
    if body.len() != expected_bytes {
        return Err(SqaError::TruncatedBody {
            expected: expected_bytes,
            got: body.len(),
        });
    }

    let mut cursor = 0usize;
    let mut take = |n: usize| -> Vec<f32> {
        let out = body[cursor..cursor + 4 * n]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        cursor += 4 * n;
        out
    };
    let mut store = ParameterStore::new();
    for (name, shape) in &expected {
        let n = shape.iter().product();
        store.insert(name, shape.clone(), take(n));
    }
    for (name, c) in &stats_expected {
        store.insert_stats(name, *c);
        let mean = take(*c);
        let var = take(*c);
        let s = store.stats_mut(name);
        s.running_mean = mean;
        s.running_var = var;
    }
    Ok(LoadedWeights {
        store,
        config,
        channels,
        seed,
    })
}
