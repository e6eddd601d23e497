//! `FFNN` model container.
//!
//! ```text
//! "FFNN" | version u16 | extension blob (u32 len + bytes)
//! | input h,w,c (u16 each) | layer count u16 | layer table
//! | per layer: weights f32[], biases f32[] | CRC32 of everything before
//! ```
//!
//! All integers and floats are little-endian. The extension blob is opaque
//! here; the classifier stores its codec header and provenance in it.

use super::{Activation, LayerSpec, Network};
use crate::util::{check_frame, sha256_hex, ByteReader, ByteWriter};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"FFNN";
pub const MODEL_VERSION: u16 = 1;

const TAG_CONV: u8 = 0;
const TAG_DENSE: u8 = 1;
const TAG_ACTIVATION: u8 = 2;

fn to_u16(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u16")))
}

/// Geometry, layer table and f32 parameters; the hashed payload.
fn write_payload(net: &Network, w: &mut ByteWriter) -> Result<()> {
    for d in net.input_shape() {
        w.u16(to_u16(d, "input dimension")?);
    }
    w.u16(to_u16(net.layers().len(), "layer count")?);
    for layer in net.layers() {
        match layer.spec {
            LayerSpec::Conv2d { kernel_h, kernel_w, in_channels, out_channels, stride, padding } => {
                w.u8(TAG_CONV);
                for v in [kernel_h, kernel_w, in_channels, out_channels, stride, padding] {
                    w.u16(to_u16(v, "conv parameter")?);
                }
            }
            LayerSpec::FullyConnected { inputs, outputs } => {
                w.u8(TAG_DENSE);
                w.u32(inputs as u32);
                w.u32(outputs as u32);
            }
            LayerSpec::Activation { function: Activation::Relu } => {
                w.u8(TAG_ACTIVATION);
                w.u8(0);
            }
        }
    }
    for layer in net.layers() {
        for &v in layer.weight.data().iter().chain(layer.bias.data()) {
            w.f32(v as f32);
        }
    }
    Ok(())
}

/// SHA-256 of the network payload (geometry, layer table, f32 parameters).
pub fn network_hash(net: &Network) -> String {
    let mut w = ByteWriter::new();
    write_payload(net, &mut w).expect("network geometry fits the container");
    sha256_hex(w.as_slice())
}

/// Serializes a network; parameters are narrowed to `f32`.
pub fn encode_network(net: &Network, extension: &[u8]) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.bytes(MODEL_MAGIC);
    w.u16(MODEL_VERSION);
    w.blob(extension);
    write_payload(net, &mut w)?;
    Ok(w.finish_with_crc())
}

/// Parses an `FFNN` container, returning the network and extension blob.
pub fn decode_network(data: &[u8]) -> Result<(Network, Vec<u8>)> {
    let body = check_frame(data, MODEL_MAGIC)?;
    let mut r = ByteReader::new(&body[4..]);
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(Error::Version { found: version, expected: MODEL_VERSION });
    }
    let extension = r.blob()?.to_vec();
    let input = [r.u16()? as usize, r.u16()? as usize, r.u16()? as usize];
    let n_layers = r.u16()? as usize;
    let mut specs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let spec = match r.u8()? {
            TAG_CONV => {
                let mut v = [0usize; 6];
                for slot in &mut v {
                    *slot = r.u16()? as usize;
                }
                LayerSpec::Conv2d {
                    kernel_h: v[0],
                    kernel_w: v[1],
                    in_channels: v[2],
                    out_channels: v[3],
                    stride: v[4],
                    padding: v[5],
                }
            }
            TAG_DENSE => LayerSpec::FullyConnected { inputs: r.u32()? as usize, outputs: r.u32()? as usize },
            TAG_ACTIVATION => match r.u8()? {
                0 => LayerSpec::relu(),
                other => return Err(Error::Format(format!("unknown activation {other}"))),
            },
            other => return Err(Error::Format(format!("unknown layer tag {other}"))),
        };
        specs.push(spec);
    }
    let mut net = Network::new(input, &specs)?;
    for layer in net.layers_mut() {
        for v in layer.weight.data_mut().iter_mut() {
            *v = r.f32()? as f64;
        }
        for v in layer.bias.data_mut().iter_mut() {
            *v = r.f32()? as f64;
        }
    }
    if !r.is_at_end() {
        return Err(Error::Format("trailing bytes after parameters".into()));
    }
    Ok((net, extension))
}
