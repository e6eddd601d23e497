use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    augment, render_glyph, AugmentationConfig, FontAsset, FontRegistry, FontRole, GlyphImage, LoadedFont, RenderConfig,
};
use crate::util::{derive_seed, sha256_hex, ByteWriter};
use crate::{Error, Result, DIGITS, TOOL_VERSION};

/// One character image with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphSample {
    pub image: GlyphImage,
    pub char_index: usize,
    pub font_id: String,
    /// `true` when the source font is not the reference font.
    pub forged: bool,
}

/// What a dataset was built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Balanced genuine + forged-proxy samples.
    Training,
    /// Single-role test set drawn from one group of fonts.
    TestSet,
    /// Loaded from an image directory.
    Imported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceFont {
    pub id: String,
    pub role: FontRole,
    pub file_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub tool_version: String,
    pub kind: DatasetKind,
    pub label: String,
    pub fonts: Vec<ProvenanceFont>,
    pub seed: u64,
    pub per_cell_count: usize,
    pub render: Option<RenderConfig>,
    pub augmentation: Option<AugmentationConfig>,
    /// Free-form remarks, e.g. that the augmentation stack is a stand-in.
    pub notes: Vec<String>,
}

impl DatasetProvenance {
    pub fn imported(label: impl Into<String>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            kind: DatasetKind::Imported,
            label: label.into(),
            fonts: vec![],
            seed: 0,
            per_cell_count: 0,
            render: None,
            augmentation: None,
            notes: vec![],
        }
    }
}

const AUGMENTATION_NOTE: &str =
    "augmentation stack (corner jitter, downscale, blur, noise, photometric jitter) approximates phone capture; its distributions are not calibrated against real captures";

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Alphabet size.
    pub m: usize,
    pub samples: Vec<GlyphSample>,
    pub provenance: DatasetProvenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `counts[c][forged as usize]`.
    pub fn cell_counts(&self) -> Vec<[usize; 2]> {
        let mut counts = vec![[0usize; 2]; self.m];
        for s in &self.samples {
            if s.char_index < self.m {
                counts[s.char_index][s.forged as usize] += 1;
            }
        }
        counts
    }

    /// Checks labels are in range and, for training sets, that every
    /// (character, forged) cell is populated.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.samples.iter().find(|s| s.char_index >= self.m) {
            return Err(Error::Format(format!("char index {} >= M = {}", s.char_index, self.m)));
        }
        if self.provenance.kind == DatasetKind::Training {
            if let Some((c, cell)) =
                self.cell_counts().iter().enumerate().find(|(_, cell)| cell[0] == 0 || cell[1] == 0)
            {
                return Err(Error::Format(format!("training cell for char {c} is empty: {cell:?}")));
            }
        }
        Ok(())
    }

    /// SHA-256 over labels and quantized pixels, in sample order.
    /// Provenance is excluded.
    pub fn content_hash(&self) -> String {
        let mut w = ByteWriter::new();
        w.u16(self.m as u16);
        for s in &self.samples {
            w.u8(s.char_index as u8);
            w.u8(s.forged as u8);
            w.blob(s.font_id.as_bytes());
            w.bytes(&s.image.to_u8());
        }
        sha256_hex(w.as_slice())
    }

    /// Font ids that actually occur in the samples.
    pub fn font_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.samples.iter().map(|s| s.font_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Human-readable per-cell count table.
    pub fn cell_table(&self) -> String {
        let mut out = String::from("char  genuine  forged\n");
        for (c, cell) in self.cell_counts().iter().enumerate() {
            out.push_str(&format!("{c:>4}  {:>7}  {:>6}\n", cell[0], cell[1]));
        }
        out
    }
}

fn load_all(fonts: &[FontAsset]) -> Result<Vec<LoadedFont>> {
    fonts.iter().map(FontAsset::load).collect()
}

/// Clean glyphs indexed `[font][char]`.
fn prerender(fonts: &[LoadedFont], m: usize, cfg: &RenderConfig) -> Result<Vec<Vec<GlyphImage>>> {
    fonts.par_iter().map(|f| (0..m).map(|c| render_glyph(f, c, cfg)).collect::<Result<Vec<_>>>()).collect()
}

fn provenance_fonts(fonts: &[LoadedFont]) -> Vec<ProvenanceFont> {
    fonts
        .iter()
        .map(|f| ProvenanceFont { id: f.asset.id.clone(), role: f.asset.role, file_hash: f.file_hash.clone() })
        .collect()
}

struct Job {
    char_index: usize,
    forged: bool,
    seq: usize,
}

/// Renders and augments one sample per job. Output order is the job order,
/// independent of the worker count.
fn run_jobs(
    jobs: &[Job],
    genuine: (&[LoadedFont], &[Vec<GlyphImage>]),
    forged: (&[LoadedFont], &[Vec<GlyphImage>]),
    aug: &AugmentationConfig,
    seed: u64,
) -> Result<Vec<GlyphSample>> {
    jobs.par_iter()
        .map(|job| {
            let (fonts, clean) = if job.forged { forged } else { genuine };
            let fi = job.seq % fonts.len();
            let s = derive_seed(&[seed, job.char_index as u64, job.forged as u64, job.seq as u64]);
            let image = augment(&clean[fi][job.char_index], aug, s)?.quantized();
            Ok(GlyphSample {
                image,
                char_index: job.char_index,
                font_id: fonts[fi].asset.id.clone(),
                forged: job.forged,
            })
        })
        .collect()
}

/// Balanced training/validation set: `per_cell_count` samples for every
/// (digit, forged) cell. Genuine samples cycle through the genuine fonts and
/// forged samples through the forged-proxy fonts; held-out fonts are never
/// touched.
pub fn synthesize_dataset(
    registry: &FontRegistry,
    per_cell_count: usize,
    render_cfg: &RenderConfig,
    aug_cfg: &AugmentationConfig,
    seed: u64,
) -> Result<Dataset> {
    if registry.genuine.is_empty() {
        return Err(Error::EmptyFontSet("genuine"));
    }
    if registry.forged.is_empty() {
        return Err(Error::EmptyFontSet("forged"));
    }
    if per_cell_count == 0 {
        return Err(Error::InvalidConfig("per_cell_count must be at least 1".into()));
    }
    render_cfg.validate()?;
    aug_cfg.validate()?;
    let m = DIGITS;
    let genuine = load_all(&registry.genuine)?;
    let forged = load_all(&registry.forged)?;
    let genuine_clean = prerender(&genuine, m, render_cfg)?;
    let forged_clean = prerender(&forged, m, render_cfg)?;

    let jobs: Vec<Job> = (0..m)
        .flat_map(|c| {
            [false, true]
                .into_iter()
                .flat_map(move |f| (0..per_cell_count).map(move |seq| Job { char_index: c, forged: f, seq }))
        })
        .collect();
    let samples = run_jobs(&jobs, (&genuine, &genuine_clean), (&forged, &forged_clean), aug_cfg, seed)?;

    let mut fonts = provenance_fonts(&genuine);
    fonts.extend(provenance_fonts(&forged));
    Ok(Dataset {
        m,
        samples,
        provenance: DatasetProvenance {
            tool_version: TOOL_VERSION.to_string(),
            kind: DatasetKind::Training,
            label: "training".into(),
            fonts,
            seed,
            per_cell_count,
            render: Some(*render_cfg),
            augmentation: Some(*aug_cfg),
            notes: vec![AUGMENTATION_NOTE.into()],
        },
    })
}

/// Test set over one group of fonts, all labelled `forged` (or all
/// genuine): `per_char_count` samples per digit, cycling through `fonts`.
pub fn synthesize_test_set(
    label: &str,
    fonts: &[FontAsset],
    forged: bool,
    per_char_count: usize,
    render_cfg: &RenderConfig,
    aug_cfg: &AugmentationConfig,
    seed: u64,
) -> Result<Dataset> {
    if fonts.is_empty() {
        return Err(Error::EmptyFontSet(if forged { "forged test fonts" } else { "genuine test fonts" }));
    }
    if per_char_count == 0 {
        return Err(Error::InvalidConfig("per_char_count must be at least 1".into()));
    }
    render_cfg.validate()?;
    aug_cfg.validate()?;
    let m = DIGITS;
    let loaded = load_all(fonts)?;
    let clean = prerender(&loaded, m, render_cfg)?;
    let jobs: Vec<Job> =
        (0..m).flat_map(|c| (0..per_char_count).map(move |seq| Job { char_index: c, forged, seq })).collect();
    let group = (&loaded[..], &clean[..]);
    let samples = run_jobs(&jobs, group, group, aug_cfg, seed)?;
    Ok(Dataset {
        m,
        samples,
        provenance: DatasetProvenance {
            tool_version: TOOL_VERSION.to_string(),
            kind: DatasetKind::TestSet,
            label: label.to_string(),
            fonts: provenance_fonts(&loaded),
            seed,
            per_cell_count: per_char_count,
            render: Some(*render_cfg),
            augmentation: Some(*aug_cfg),
            notes: vec![AUGMENTATION_NOTE.into()],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_registry() -> FontRegistry {
        let reg = FontRegistry::bundled().unwrap();
        FontRegistry { genuine: reg.genuine.clone(), forged: reg.forged[..2].to_vec(), held_out: reg.held_out.clone() }
    }

    #[test]
    fn balanced_counts() {
        let ds =
            synthesize_dataset(&small_registry(), 100, &RenderConfig::default(), &AugmentationConfig::default(), 3)
                .unwrap();
        assert_eq!(ds.len(), 2000);
        assert!(ds.cell_counts().iter().all(|c| *c == [100, 100]));
        ds.validate().unwrap();
    }

    #[test]
    fn deterministic_under_seed() {
        let reg = small_registry();
        let a = synthesize_dataset(&reg, 5, &RenderConfig::default(), &AugmentationConfig::default(), 11).unwrap();
        let b = synthesize_dataset(&reg, 5, &RenderConfig::default(), &AugmentationConfig::default(), 11).unwrap();
        assert_eq!(a, b);
        let c = synthesize_dataset(&reg, 5, &RenderConfig::default(), &AugmentationConfig::default(), 12).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn forged_fonts_cycle_round_robin() {
        let reg = small_registry();
        let ds = synthesize_dataset(&reg, 4, &RenderConfig::default(), &AugmentationConfig::identity(), 0).unwrap();
        let forged_ids: Vec<&str> =
            ds.samples.iter().filter(|s| s.forged && s.char_index == 0).map(|s| s.font_id.as_str()).collect();
        let f0 = reg.forged[0].id.as_str();
        let f1 = reg.forged[1].id.as_str();
        assert_eq!(forged_ids, vec![f0, f1, f0, f1]);
        assert!(ds.samples.iter().filter(|s| !s.forged).all(|s| s.font_id == reg.genuine[0].id));
    }

    #[test]
    fn empty_forged_set_is_an_error() {
        let mut reg = small_registry();
        reg.forged.clear();
        let err = synthesize_dataset(&reg, 1, &RenderConfig::default(), &AugmentationConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::EmptyFontSet(_)));
    }

    #[test]
    fn held_out_fonts_never_enter_training() {
        let reg = FontRegistry::bundled().unwrap();
        let ds = synthesize_dataset(&reg, 2, &RenderConfig::default(), &AugmentationConfig::default(), 0).unwrap();
        for h in &reg.held_out {
            assert!(ds.provenance.fonts.iter().all(|f| f.id != h.id));
            assert!(ds.samples.iter().all(|s| s.font_id != h.id));
        }
    }

    #[test]
    fn test_set_labels_follow_role() {
        let reg = FontRegistry::bundled().unwrap();
        let ds = synthesize_test_set(
            "held",
            &reg.held_out,
            true,
            3,
            &RenderConfig::default(),
            &AugmentationConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(ds.len(), 30);
        assert!(ds.samples.iter().all(|s| s.forged));
        assert!(ds.samples.iter().all(|s| s.image.pixels().len() == crate::IMAGE_PIXELS));
    }
}
