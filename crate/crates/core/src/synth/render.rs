use serde::{Deserialize, Serialize};

use super::font::Outline;
use super::raster::rasterize;
use super::{GlyphImage, LoadedFont};
use crate::{Error, Result, IMAGE_HEIGHT, IMAGE_WIDTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Dark ink (0) on a light background (1).
    DarkOnLight,
    LightOnDark,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Allowed pixel-per-em range for the fitted scale.
    pub min_px: f32,
    pub max_px: f32,
    /// Minimum empty border, in pixels.
    pub margin: usize,
    pub polarity: Polarity,
    pub antialias: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: IMAGE_WIDTH,
            height: IMAGE_HEIGHT,
            min_px: 4.0,
            max_px: 96.0,
            margin: 1,
            polarity: Polarity::DarkOnLight,
            antialias: true,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width != IMAGE_WIDTH || self.height != IMAGE_HEIGHT {
            return Err(Error::InvalidGeometry(format!(
                "render size must be {IMAGE_WIDTH}x{IMAGE_HEIGHT}, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.min_px > 0.0 && self.max_px > self.min_px && self.max_px.is_finite()) {
            return Err(Error::InvalidConfig(format!("point-size range [{}, {}] is empty", self.min_px, self.max_px)));
        }
        if 2 * self.margin + 2 > self.width.min(self.height) {
            return Err(Error::InvalidConfig(format!("margin {} leaves no room for ink", self.margin)));
        }
        Ok(())
    }
}

/// Alphabet used by the shipped configurations: the ten decimal digits.
pub fn digit_char(char_index: usize) -> Option<char> {
    char::from_digit(char_index as u32, 10)
}

/// Slack kept between the ink box and the margin, in pixels.
const FIT_EPSILON: f32 = 1e-3;

/// Outline scaled to `px_per_em` and centered on the image.
fn place(outline: &Outline, units_per_em: f32, px_per_em: f32, w: f32, h: f32) -> Outline {
    let b = outline.bounds().expect("non-empty outline");
    let k = px_per_em / units_per_em;
    let dx = w / 2.0 - k * (b.min.x + b.max.x) / 2.0;
    let dy = h / 2.0 + k * (b.min.y + b.max.y) / 2.0;
    outline.transformed([k, 0.0, 0.0, -k, dx, dy])
}

/// Renders digit `char_index` (0..=9).
pub fn render_glyph(font: &LoadedFont, char_index: usize, cfg: &RenderConfig) -> Result<GlyphImage> {
    let ch = digit_char(char_index)
        .ok_or_else(|| Error::InvalidConfig(format!("char index {char_index} is not a digit")))?;
    render_char(font, ch, cfg)
}

/// Rasterizes `ch` at the largest size whose ink box fits inside the margin,
/// centered on the ink bounding box.
pub fn render_char(font: &LoadedFont, ch: char, cfg: &RenderConfig) -> Result<GlyphImage> {
    cfg.validate()?;
    let missing = || Error::MissingGlyph { font: font.id().to_string(), ch };
    let gid = font.font.glyph_index(ch).ok_or_else(missing)?;
    let outline = font.font.outline(gid).map_err(|reason| Error::FontLoad { path: font.asset.path.clone(), reason })?;
    if outline.is_empty() {
        return Err(missing());
    }
    let upem = font.font.units_per_em() as f32;
    let b = outline.bounds().expect("non-empty outline");
    let room_w = (cfg.width - 2 * cfg.margin) as f32 - FIT_EPSILON;
    let room_h = (cfg.height - 2 * cfg.margin) as f32 - FIT_EPSILON;
    // Control-point bounds contain the curve, so the ink never leaves the box.
    let fit = upem * (room_w / b.width().max(f32::EPSILON)).min(room_h / b.height().max(f32::EPSILON));
    if fit < cfg.min_px {
        return Err(Error::InvalidConfig(format!(
            "glyph {ch:?} of '{}' does not fit even at {} px",
            font.id(),
            cfg.min_px
        )));
    }
    let px = fit.min(cfg.max_px);
    let best = rasterize(&place(&outline, upem, px, cfg.width as f32, cfg.height as f32), cfg.width, cfg.height);

    let pixels = best
        .into_iter()
        .map(|c| {
            let ink = if cfg.antialias {
                c
            } else if c >= 0.5 {
                1.0
            } else {
                0.0
            };
            match cfg.polarity {
                Polarity::DarkOnLight => 1.0 - ink,
                Polarity::LightOnDark => ink,
            }
        })
        .collect();
    GlyphImage::new(pixels)
}
