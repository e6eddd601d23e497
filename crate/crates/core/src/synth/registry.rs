use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::font::Font;
use crate::util::sha256_hex;
use crate::{Error, Result};

/// What a font stands for in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FontRole {
    /// The reference font; its glyphs are genuine.
    Genuine,
    /// A look-alike used to synthesize forged training samples.
    ForgedProxy,
    /// A substitute kept out of training, used only to test generalization.
    HeldOut,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FontAsset {
    pub id: String,
    pub path: PathBuf,
    pub role: FontRole,
}

impl FontAsset {
    pub fn new(id: impl Into<String>, path: impl Into<PathBuf>, role: FontRole) -> Self {
        Self { id: id.into(), path: path.into(), role }
    }

    pub fn load(&self) -> Result<LoadedFont> {
        let bytes = std::fs::read(&self.path)
            .map_err(|e| Error::FontLoad { path: self.path.clone(), reason: e.to_string() })?;
        let file_hash = sha256_hex(&bytes);
        let font = Font::from_bytes(bytes).map_err(|reason| Error::FontLoad { path: self.path.clone(), reason })?;
        Ok(LoadedFont { asset: self.clone(), font, file_hash })
    }
}

/// A font asset together with its parsed outlines.
#[derive(Clone, Debug)]
pub struct LoadedFont {
    pub asset: FontAsset,
    pub font: Font,
    pub file_hash: String,
}

impl LoadedFont {
    pub fn id(&self) -> &str {
        &self.asset.id
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    fonts: Vec<FontAsset>,
}

/// Partition of the available fonts into genuine, forged-proxy and
/// held-out sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FontRegistry {
    pub genuine: Vec<FontAsset>,
    pub forged: Vec<FontAsset>,
    pub held_out: Vec<FontAsset>,
}

impl FontRegistry {
    pub fn from_assets(assets: impl IntoIterator<Item = FontAsset>) -> Result<Self> {
        let mut reg = FontRegistry { genuine: vec![], forged: vec![], held_out: vec![] };
        let mut seen = HashSet::new();
        for a in assets {
            if a.id.is_empty() || a.id.len() > 255 {
                return Err(Error::Registry(format!("font id '{}' must be 1..=255 bytes", a.id)));
            }
            if !seen.insert(a.id.clone()) {
                return Err(Error::Registry(format!("duplicate font id '{}'", a.id)));
            }
            match a.role {
                FontRole::Genuine => reg.genuine.push(a),
                FontRole::ForgedProxy => reg.forged.push(a),
                FontRole::HeldOut => reg.held_out.push(a),
            }
        }
        if reg.genuine.is_empty() {
            return Err(Error::EmptyFontSet("registry has no genuine font"));
        }
        Ok(reg)
    }

    /// Reads a JSON manifest `{"fonts": [{"id", "path", "role"}, ...]}`.
    /// Relative paths resolve against the manifest's directory.
    pub fn load_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_assets(manifest.fonts.into_iter().map(|mut a| {
            if a.path.is_relative() {
                a.path = base.join(&a.path);
            }
            a
        }))
    }

    pub fn to_manifest_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Manifest { fonts: self.all().cloned().collect() })?)
    }

    pub fn all(&self) -> impl Iterator<Item = &FontAsset> {
        self.genuine.iter().chain(&self.forged).chain(&self.held_out)
    }

    pub fn get(&self, id: &str) -> Option<&FontAsset> {
        self.all().find(|a| a.id == id)
    }

    /// Loads every font and checks it covers `chars`.
    pub fn verify(&self, chars: &[char]) -> Result<()> {
        for asset in self.all() {
            let f = asset.load()?;
            for &ch in chars {
                if f.font.glyph_index(ch).is_none() {
                    return Err(Error::MissingGlyph { font: asset.id.clone(), ch });
                }
            }
        }
        Ok(())
    }

    /// Registry over the digit fonts bundled under `assets/fonts`.
    pub fn bundled() -> Result<Self> {
        Self::load_manifest(&bundled_manifest_path())
    }
}

/// Path of the manifest describing the bundled digit fonts.
pub fn bundled_manifest_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/fonts/registry.json")
}
