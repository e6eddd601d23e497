//! Dataset persistence: a checksummed binary container and a PGM+CSV
//! directory layout for inspection and for importing real crops.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "FFDS" | version u16 | M u16 | count u32 | provenance (u32 len + JSON)
//! count × { char u8 | forged u8 | id_len u8 | id bytes | 285 pixel bytes }
//! CRC32 of everything above, u32
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetProvenance, GlyphImage, GlyphSample};
use crate::util::{check_frame, write_atomic, ByteReader, ByteWriter};
use crate::{Error, Result, IMAGE_HEIGHT, IMAGE_PIXELS, IMAGE_WIDTH};

pub const DATASET_MAGIC: &[u8; 4] = b"FFDS";
pub const DATASET_VERSION: u16 = 1;

/// Name of the sidecar written next to exported images.
pub const MANIFEST_NAME: &str = "manifest.csv";

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    ds.validate()?;
    let mut w = ByteWriter::new();
    w.bytes(DATASET_MAGIC);
    w.u16(DATASET_VERSION);
    w.u16(u16::try_from(ds.m).map_err(|_| Error::Format(format!("M = {} too large", ds.m)))?);
    w.u32(u32::try_from(ds.samples.len()).map_err(|_| Error::Format("too many samples".into()))?);
    w.blob(&serde_json::to_vec(&ds.provenance)?);
    for s in &ds.samples {
        let id = s.font_id.as_bytes();
        let id_len = u8::try_from(id.len())
            .map_err(|_| Error::Format(format!("font id '{}' longer than 255 bytes", s.font_id)))?;
        w.u8(s.char_index as u8);
        w.u8(s.forged as u8);
        w.u8(id_len);
        w.bytes(id);
        w.bytes(&s.image.to_u8());
    }
    Ok(w.finish_with_crc())
}

pub fn decode_dataset(data: &[u8]) -> Result<Dataset> {
    let body = check_frame(data, DATASET_MAGIC)?;
    let mut r = ByteReader::new(body);
    r.take(4)?;
    let version = r.u16()?;
    if version != DATASET_VERSION {
        return Err(Error::Version { found: version, expected: DATASET_VERSION });
    }
    let m = r.u16()? as usize;
    let count = r.u32()? as usize;
    let provenance: DatasetProvenance = serde_json::from_slice(r.blob()?)?;
    let mut samples = Vec::with_capacity(count.min(body.len() / IMAGE_PIXELS));
    for _ in 0..count {
        let char_index = r.u8()? as usize;
        let forged = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("forged flag must be 0 or 1, got {b}"))),
        };
        let id_len = r.u8()? as usize;
        let font_id =
            String::from_utf8(r.take(id_len)?.to_vec()).map_err(|_| Error::Format("font id is not UTF-8".into()))?;
        let image = GlyphImage::from_u8(r.take(IMAGE_PIXELS)?)?;
        samples.push(GlyphSample { image, char_index, font_id, forged });
    }
    if !r.is_at_end() {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    let ds = Dataset { m, samples, provenance };
    ds.validate()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode_dataset(ds)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&std::fs::read(path)?)
}

/// One row of `manifest.csv`. Only `path` is required when importing
/// unlabelled crops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: String,
    #[serde(default)]
    pub char: Option<usize>,
    #[serde(default)]
    pub font_id: Option<String>,
    #[serde(default)]
    pub forged: Option<u8>,
}

fn save_pgm(path: &Path, image: &GlyphImage) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    PnmEncoder::new(file).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary)).write_image(
        &image.to_u8(),
        IMAGE_WIDTH as u32,
        IMAGE_HEIGHT as u32,
        ExtendedColorType::L8,
    )?;
    Ok(())
}

/// Reads a grayscale image of exactly 15×19 pixels (PGM or any format the
/// decoder recognises).
pub fn load_crop(path: &Path) -> Result<GlyphImage> {
    let img = image::open(path)?.to_luma8();
    if img.width() as usize != IMAGE_WIDTH || img.height() as usize != IMAGE_HEIGHT {
        return Err(Error::InvalidGeometry(format!(
            "{}: crop is {}x{}, expected {IMAGE_WIDTH}x{IMAGE_HEIGHT}",
            path.display(),
            img.width(),
            img.height()
        )));
    }
    GlyphImage::from_u8(img.as_raw())
}

/// Writes one PGM per sample plus `manifest.csv` into `dir`.
pub fn export_pgm_dir(ds: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    for (i, s) in ds.samples.iter().enumerate() {
        let name = format!("{i:06}_{}_{}.pgm", s.char_index, if s.forged { "f" } else { "g" });
        save_pgm(&dir.join(&name), &s.image)?;
        csv.serialize(ManifestRow {
            path: name,
            char: Some(s.char_index),
            font_id: Some(s.font_id.clone()),
            forged: Some(s.forged as u8),
        })?;
    }
    let bytes = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&dir.join(MANIFEST_NAME), &bytes)
}

/// Reads `manifest.csv` rows; relative paths are resolved against the
/// manifest's directory.
pub fn read_manifest(manifest: &Path) -> Result<Vec<(PathBuf, ManifestRow)>> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(manifest)?;
    reader
        .deserialize::<ManifestRow>()
        .map(|row| {
            let row = row?;
            let p = PathBuf::from(&row.path);
            Ok((if p.is_relative() { base.join(p) } else { p }, row))
        })
        .collect()
}

/// Accepts either a directory containing `manifest.csv` or the manifest
/// path itself.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    }
}

/// Imports a labelled PGM directory. Every row must carry `char` and
/// `forged`; `font_id` defaults to `"unknown"`.
pub fn import_pgm_dir(path: &Path, m: usize) -> Result<Dataset> {
    let manifest = manifest_path(path);
    let mut samples = Vec::new();
    for (file, row) in read_manifest(&manifest)? {
        let char_index = row.char.ok_or_else(|| Error::Format(format!("{}: missing char label", row.path)))?;
        let forged = match row.forged {
            Some(0) => false,
            Some(1) => true,
            other => return Err(Error::Format(format!("{}: forged must be 0 or 1, got {other:?}", row.path))),
        };
        samples.push(GlyphSample {
            image: load_crop(&file)?,
            char_index,
            font_id: row.font_id.unwrap_or_else(|| "unknown".into()),
            forged,
        });
    }
    let ds = Dataset { m, samples, provenance: DatasetProvenance::imported(manifest.display().to_string()) };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_dataset, AugmentationConfig, FontRegistry, RenderConfig};

    fn small() -> Dataset {
        let mut reg = FontRegistry::bundled().unwrap();
        reg.forged.truncate(2);
        synthesize_dataset(&reg, 2, &RenderConfig::default(), &AugmentationConfig::default(), 5).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let ds = small();
        let back = decode_dataset(&encode_dataset(&ds).unwrap()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let mut bytes = encode_dataset(&small()).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(decode_dataset(&bytes), Err(Error::Checksum { .. })));
    }

    #[test]
    fn truncation_and_magic_detected() {
        let bytes = encode_dataset(&small()).unwrap();
        assert!(decode_dataset(&bytes[..bytes.len() - 10]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_dataset(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn version_mismatch_detected() {
        let ds = small();
        let mut bytes = encode_dataset(&ds).unwrap();
        bytes[4] = 9;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_dataset(&bytes), Err(Error::Version { found: 9, .. })));
    }

    #[test]
    fn pgm_directory_round_trip() {
        let ds = small();
        let dir = tempfile::tempdir().unwrap();
        export_pgm_dir(&ds, dir.path()).unwrap();
        let back = import_pgm_dir(dir.path(), ds.m).unwrap();
        assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn wrong_crop_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        std::fs::write(&p, b"P5\n4 4\n255\n0000000000000000").unwrap();
        assert!(matches!(load_crop(&p), Err(Error::InvalidGeometry(_))));
    }
}
