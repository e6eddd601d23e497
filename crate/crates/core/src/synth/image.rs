use crate::{Error, Result, IMAGE_HEIGHT, IMAGE_PIXELS, IMAGE_WIDTH};

/// A 15×19 grayscale glyph, row-major, intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphImage {
    pixels: Vec<f32>,
}

impl GlyphImage {
    pub const WIDTH: usize = IMAGE_WIDTH;
    pub const HEIGHT: usize = IMAGE_HEIGHT;

    pub fn new(pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != IMAGE_PIXELS {
            return Err(Error::InvalidGeometry(format!(
                "glyph image needs {IMAGE_PIXELS} pixels ({IMAGE_WIDTH}x{IMAGE_HEIGHT}), got {}",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidGeometry(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    pub fn filled(value: f32) -> Self {
        Self { pixels: vec![value.clamp(0.0, 1.0); IMAGE_PIXELS] }
    }

    /// Builds an image from arbitrary values, clamping into `[0, 1]`
    /// (NaN becomes 0).
    pub(crate) fn from_clamped(mut pixels: Vec<f32>) -> Self {
        debug_assert_eq!(pixels.len(), IMAGE_PIXELS);
        for v in &mut pixels {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self { pixels }
    }

    pub fn from_u8(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != IMAGE_PIXELS {
            return Err(Error::InvalidGeometry(format!("expected {IMAGE_PIXELS} bytes, got {}", bytes.len())));
        }
        Ok(Self { pixels: bytes.iter().map(|&b| b as f32 / 255.0).collect() })
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }

    /// Snaps every intensity to the nearest multiple of 1/255, the on-disk
    /// precision, so that a save/load round trip is exact.
    pub fn quantized(&self) -> Self {
        Self::from_u8(&self.to_u8()).expect("same geometry")
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * IMAGE_WIDTH + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / IMAGE_PIXELS as f64
    }

    pub fn min(&self) -> f32 {
        self.pixels.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn max(&self) -> f32 {
        self.pixels.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Pixels as network input values.
    pub fn to_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.pixels.iter().map(|&v| v as f64)
    }

    /// Two-level text rendering for terminals and debugging.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((IMAGE_WIDTH + 1) * IMAGE_HEIGHT);
        for y in 0..IMAGE_HEIGHT {
            for x in 0..IMAGE_WIDTH {
                let v = self.get(x, y);
                s.push(match v {
                    v if v < 0.25 => '#',
                    v if v < 0.5 => '+',
                    v if v < 0.75 => '.',
                    _ => ' ',
                });
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_and_range_are_enforced() {
        assert!(GlyphImage::new(vec![0.5; IMAGE_PIXELS]).is_ok());
        assert!(GlyphImage::new(vec![0.5; IMAGE_PIXELS - 1]).is_err());
        let mut px = vec![0.5; IMAGE_PIXELS];
        px[3] = 1.5;
        assert!(GlyphImage::new(px).is_err());
    }

    #[test]
    fn quantization_is_idempotent() {
        let img = GlyphImage::from_clamped((0..IMAGE_PIXELS).map(|i| i as f32 / 300.0).collect());
        let q = img.quantized();
        assert_eq!(q, q.quantized());
        assert_eq!(GlyphImage::from_u8(&q.to_u8()).unwrap(), q);
    }
}
