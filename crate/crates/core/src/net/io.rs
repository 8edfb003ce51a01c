//! Weight persistence.
//!
//! Binary layout: magic `DINW`, version, bias mode, input dimensions, layer
//! count, then per-layer shapes `(out, in, k1, k2, bias_h, bias_w)` as
//! little-endian u32, then the data as 64-bit little-endian floats, filters
//! before bias within each layer, layers in order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BiasMode, LayerParams, NetConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::numerics::{BiasMap, FilterBank};
use crate::scalar::{real, to_f64, Real};

const MAGIC: &[u8; 4] = b"DINW";
const VERSION: u32 = 1;

/// Lossless round trip with [`load_params`]: values travel as `f64`.
pub fn save_params<T: Real>(params: &NetworkParams<T>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let mode = match params.config.bias_mode {
        BiasMode::FullMap => 0u32,
        BiasMode::Scalar => 1u32,
    };
    buf.extend_from_slice(&mode.to_le_bytes());
    buf.extend_from_slice(&(params.config.input_h as u32).to_le_bytes());
    buf.extend_from_slice(&(params.config.input_w as u32).to_le_bytes());
    buf.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for layer in &params.layers {
        for dim in [
            layer.filters.out_channels(),
            layer.filters.in_channels(),
            layer.filters.k1(),
            layer.filters.k2(),
            layer.bias.height(),
            layer.bias.width(),
        ] {
            buf.extend_from_slice(&(dim as u32).to_le_bytes());
        }
    }
    for layer in &params.layers {
        for &v in layer.filters.as_slice() {
            buf.extend_from_slice(&to_f64(v).to_le_bytes());
        }
        for &v in layer.bias.as_slice() {
            buf.extend_from_slice(&to_f64(v).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::format(
                self.name,
                self.pos as u64,
                format!("truncated: wanted {len} more bytes"),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64_block(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(count * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Loads and validates a weights file. Architecture violations (broken
/// channel chain, inconsistent bias dimensions) are reported naming the
/// offending layer; truncation is reported with the byte offset.
pub fn load_params<T: Real>(path: &Path) -> Result<NetworkParams<T>> {
    let name = path.display().to_string();
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        name: &name,
    };
    if r.take(4)? != MAGIC {
        return Err(Error::format(&name, 0, "bad magic, expected DINW"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(
            &name,
            4,
            format!("unsupported version {version}"),
        ));
    }
    let bias_mode = match r.u32()? {
        0 => BiasMode::FullMap,
        1 => BiasMode::Scalar,
        other => {
            return Err(Error::format(
                &name,
                8,
                format!("unknown bias mode {other}"),
            ));
        }
    };
    let input_h = r.u32()? as usize;
    let input_w = r.u32()? as usize;
    let layer_count = r.u32()? as usize;
    if layer_count != 3 {
        return Err(Error::format(
            &name,
            20,
            format!("expected 3 layers, file has {layer_count}"),
        ));
    }

    let mut shapes = Vec::with_capacity(3);
    for _ in 0..3 {
        let out_c = r.u32()? as usize;
        let in_c = r.u32()? as usize;
        let k1 = r.u32()? as usize;
        let k2 = r.u32()? as usize;
        let bh = r.u32()? as usize;
        let bw = r.u32()? as usize;
        shapes.push((out_c, in_c, k1, k2, bh, bw));
    }

    // Validate the architecture before touching the payload.
    let (k1, k2) = (shapes[0].2, shapes[0].3);
    for (i, s) in shapes.iter().enumerate() {
        let layer = i + 1;
        if s.2 != k1 || s.3 != k2 {
            return Err(Error::format(
                &name,
                24,
                format!(
                    "layer {layer}: kernel {}x{} differs from layer 1's {k1}x{k2}",
                    s.2, s.3
                ),
            ));
        }
        let expected_bias = match bias_mode {
            BiasMode::FullMap => (input_h + s.2 - 1, input_w + s.3 - 1),
            BiasMode::Scalar => (1, 1),
        };
        if (s.4, s.5) != expected_bias {
            return Err(Error::format(
                &name,
                24,
                format!(
                    "layer {layer}: bias map {}x{} does not match expected {}x{}",
                    s.4, s.5, expected_bias.0, expected_bias.1
                ),
            ));
        }
    }
    if shapes[0].1 != 1 {
        return Err(Error::format(
            &name,
            24,
            "layer 1: input channels must be 1",
        ));
    }
    if shapes[1].1 != shapes[0].0 {
        return Err(Error::format(
            &name,
            24,
            format!(
                "layer 2: input channels {} do not chain from layer 1's {} filters",
                shapes[1].1, shapes[0].0
            ),
        ));
    }
    if shapes[2].1 != shapes[1].0 {
        return Err(Error::format(
            &name,
            24,
            format!(
                "layer 3: input channels {} do not chain from layer 2's {} filters",
                shapes[2].1, shapes[1].0
            ),
        ));
    }
    if shapes[2].0 != 1 {
        return Err(Error::format(
            &name,
            24,
            "layer 3: output channels must be 1",
        ));
    }

    let config = NetConfig {
        filters1: shapes[0].0,
        filters2: shapes[1].0,
        kernel_h: k1,
        kernel_w: k2,
        input_h,
        input_w,
        bias_mode,
    };
    config
        .validate()
        .map_err(|e| Error::format(&name, 24, e.to_string()))?;

    let mut layers = Vec::with_capacity(3);
    for &(out_c, in_c, k1, k2, bh, bw) in &shapes {
        let weights = r.f64_block(out_c * in_c * k1 * k2)?;
        let bias = r.f64_block(out_c * bh * bw)?;
        layers.push(LayerParams {
            filters: FilterBank::from_vec(
                out_c,
                in_c,
                k1,
                k2,
                weights.into_iter().map(|v| real(v)).collect(),
            )?,
            bias: BiasMap::from_vec(out_c, bh, bw, bias.into_iter().map(|v| real(v)).collect())?,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::format(&name, r.pos as u64, "trailing bytes"));
    }
    Ok(NetworkParams {
        config,
        layers: layers
            .try_into()
            .map_err(|_| Error::domain("layer count"))?,
    })
}
