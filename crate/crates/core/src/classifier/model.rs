use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decode_output, images_to_tensor, ClassifierKind, EpochLog, Prediction};
use crate::nn::io::{decode_network, encode_network};
use crate::nn::{softmax, Network, TrainConfig};
use crate::synth::GlyphImage;
use crate::util::{sha256_hex, write_atomic, ByteReader, ByteWriter};
use crate::{Error, Result};

/// Where a model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingProvenance {
    pub tool_version: String,
    pub train_dataset_hash: String,
    pub val_dataset_hash: String,
    pub train_fonts: Vec<String>,
    pub config: TrainConfig,
    /// 0-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub log: Vec<EpochLog>,
}

/// A trained classifier. Parameters are exactly representable in `f32`,
/// so a save/load round trip reproduces predictions bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub network: Network,
    pub provenance: TrainingProvenance,
}

/// Predictions are computed in chunks of this many images.
const PREDICT_CHUNK: usize = 512;

impl TrainedModel {
    pub fn new(kind: ClassifierKind, network: Network, provenance: TrainingProvenance) -> Result<Self> {
        if network.output_width() != kind.output_width() {
            return Err(Error::KindMismatch(format!(
                "{} classifier needs {} outputs, network has {}",
                kind.name(),
                kind.output_width(),
                network.output_width()
            )));
        }
        Ok(Self { kind, network, provenance })
    }

    fn codec_header(&self) -> Result<ByteWriter> {
        let mut w = ByteWriter::new();
        w.u8(self.kind.tag());
        let m = self.kind.alphabet().unwrap_or(0);
        w.u16(u16::try_from(m).map_err(|_| Error::Format(format!("M = {m} too large")))?);
        Ok(w)
    }

    /// SHA-256 over the kind header and the network payload. Provenance is
    /// not included.
    pub fn content_hash(&self) -> String {
        let header = self.codec_header().expect("alphabet fits in u16");
        let bytes = encode_network(&self.network, header.as_slice()).expect("network fits the container");
        sha256_hex(&bytes)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut ext = self.codec_header()?;
        ext.blob(&serde_json::to_vec(&self.provenance)?);
        encode_network(&self.network, ext.as_slice())
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let (network, ext) = decode_network(data)?;
        let mut r = ByteReader::new(&ext);
        let tag = r.u8()?;
        let m = r.u16()? as usize;
        let kind = ClassifierKind::from_tag(tag, m)?;
        let provenance: TrainingProvenance = serde_json::from_slice(r.blob()?)?;
        if !r.is_at_end() {
            return Err(Error::Format("trailing bytes in model header".into()));
        }
        Self::new(kind, network, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn predict(&self, image: &GlyphImage) -> Result<Prediction> {
        let logits = self.network.forward(&images_to_tensor([image]))?;
        decode_output(&softmax(logits.row(0)), self.kind)
    }

    /// One prediction per image, in input order.
    pub fn predict_batch(&self, images: &[GlyphImage]) -> Result<Vec<Prediction>> {
        let chunks: Vec<Vec<Prediction>> = images
            .par_chunks(PREDICT_CHUNK)
            .map(|chunk| {
                let logits = self.network.forward(&images_to_tensor(chunk))?;
                (0..chunk.len()).map(|i| decode_output(&softmax(logits.row(i)), self.kind)).collect()
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    }
}
