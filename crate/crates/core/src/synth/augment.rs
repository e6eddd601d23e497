//! Capture-like degradations applied to clean rendered glyphs.
//!
//! Fixed stage order: projective corner jitter, downscale/upscale
//! round trip, Gaussian blur, additive Gaussian noise, brightness/contrast
//! jitter. Output is clamped to `[0, 1]`. A stage whose magnitude or
//! probability is zero is skipped entirely, so the all-zero configuration
//! is the identity.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GlyphImage;
use crate::{Error, Result, IMAGE_HEIGHT as H, IMAGE_WIDTH as W};

/// Closed interval `[min, max]` sampled uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f32,
    pub max: f32,
}

impl Span {
    pub const ZERO: Span = Span { min: 0.0, max: 0.0 };

    pub fn new(min: f32, max: f32) -> Self {
        Self { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> f32 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn is_zero(&self) -> bool {
        self.max <= 0.0
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min >= 0.0 && self.min <= self.max) {
            return Err(Error::InvalidConfig(format!(
                "{name} range [{}, {}] must be finite, non-negative and ordered",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Per-sample probability that each stage fires.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageProbabilities {
    pub projective: f32,
    pub downscale: f32,
    pub blur: f32,
    pub noise: f32,
    pub photometric: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Maximum displacement of each image corner, in pixels.
    pub corner_jitter_px: f32,
    /// Downscale strength `s`; the image is shrunk to `(1 - s)` of its size
    /// and scaled back up.
    pub downscale: Span,
    pub blur_sigma: Span,
    /// Standard deviation of additive noise, in intensity units.
    pub noise_sigma: Span,
    /// Maximum absolute brightness shift.
    pub brightness: f32,
    /// Maximum relative contrast change.
    pub contrast: f32,
    pub probabilities: StageProbabilities,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            corner_jitter_px: 1.0,
            downscale: Span::new(0.3, 0.5),
            blur_sigma: Span::new(0.0, 1.0),
            noise_sigma: Span::new(0.0, 0.08),
            brightness: 0.15,
            contrast: 0.15,
            probabilities: StageProbabilities {
                projective: 0.8,
                downscale: 0.5,
                blur: 0.6,
                noise: 0.8,
                photometric: 0.8,
            },
        }
    }
}

impl AugmentationConfig {
    /// Every magnitude zero: [`augment`] returns its input unchanged.
    pub fn identity() -> Self {
        Self {
            corner_jitter_px: 0.0,
            downscale: Span::ZERO,
            blur_sigma: Span::ZERO,
            noise_sigma: Span::ZERO,
            brightness: 0.0,
            contrast: 0.0,
            probabilities: StageProbabilities {
                projective: 0.0,
                downscale: 0.0,
                blur: 0.0,
                noise: 0.0,
                photometric: 0.0,
            },
        }
    }

    /// Only additive noise, always applied.
    pub fn noise_only(sigma: f32) -> Self {
        let mut cfg = Self::identity();
        cfg.noise_sigma = Span::new(sigma, sigma);
        cfg.probabilities.noise = 1.0;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("corner jitter", self.corner_jitter_px), ("brightness", self.brightness), ("contrast", self.contrast)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative")));
            }
        }
        self.downscale.validate("downscale")?;
        self.blur_sigma.validate("blur sigma")?;
        self.noise_sigma.validate("noise sigma")?;
        if self.downscale.max >= 0.9 {
            return Err(Error::InvalidConfig("downscale strength must stay below 0.9".into()));
        }
        if self.contrast >= 1.0 {
            return Err(Error::InvalidConfig("contrast jitter must stay below 1".into()));
        }
        let p = self.probabilities;
        for v in [p.projective, p.downscale, p.blur, p.noise, p.photometric] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("stage probability {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn fires(rng: &mut impl Rng, p: f32, active: bool) -> bool {
    active && p > 0.0 && rng.random::<f32>() < p
}

/// Applies the augmentation stack. Pure function of `(image, cfg, seed)`.
pub fn augment(image: &GlyphImage, cfg: &AugmentationConfig, seed: u64) -> Result<GlyphImage> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px: Vec<f32> = image.pixels().to_vec();
    let p = cfg.probabilities;

    if fires(&mut rng, p.projective, cfg.corner_jitter_px > 0.0) {
        px = projective_jitter(&px, cfg.corner_jitter_px, &mut rng);
    }
    if fires(&mut rng, p.downscale, !cfg.downscale.is_zero()) {
        let factor = 1.0 - cfg.downscale.sample(&mut rng);
        let dw = ((W as f32 * factor).round() as usize).max(1);
        let dh = ((H as f32 * factor).round() as usize).max(1);
        let small = area_resample(&px, W, H, dw, dh);
        px = bilinear_resample(&small, dw, dh, W, H);
    }
    if fires(&mut rng, p.blur, !cfg.blur_sigma.is_zero()) {
        let sigma = cfg.blur_sigma.sample(&mut rng);
        if sigma > 0.0 {
            px = gaussian_blur(&px, W, H, sigma);
        }
    }
    if fires(&mut rng, p.noise, !cfg.noise_sigma.is_zero()) {
        let sigma = cfg.noise_sigma.sample(&mut rng);
        if sigma > 0.0 {
            let normal = Normal::new(0.0f32, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            for v in &mut px {
                *v += normal.sample(&mut rng);
            }
        }
    }
    if fires(&mut rng, p.photometric, cfg.brightness > 0.0 || cfg.contrast > 0.0) {
        let b = if cfg.brightness > 0.0 { rng.random_range(-cfg.brightness..=cfg.brightness) } else { 0.0 };
        let c = if cfg.contrast > 0.0 { rng.random_range(-cfg.contrast..=cfg.contrast) } else { 0.0 };
        for v in &mut px {
            *v = (*v - 0.5) * (1.0 + c) + 0.5 + b;
        }
    }
    Ok(GlyphImage::from_clamped(px))
}

/// Bilinear sample at continuous coordinates (pixel centers at `i + 0.5`),
/// replicating edge pixels outside the image.
fn sample_bilinear(px: &[f32], w: usize, h: usize, x: f32, y: f32) -> f32 {
    let fx = (x - 0.5).clamp(0.0, (w - 1) as f32);
    let fy = (y - 0.5).clamp(0.0, (h - 1) as f32);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let tx = fx - x0 as f32;
    let ty = fy - y0 as f32;
    let top = px[y0 * w + x0] * (1.0 - tx) + px[y0 * w + x1] * tx;
    let bottom = px[y1 * w + x0] * (1.0 - tx) + px[y1 * w + x1] * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Homography mapping each `from[i]` onto `to[i]`.
fn homography(from: &[(f64, f64); 4], to: &[(f64, f64); 4]) -> Option<SMatrix<f64, 3, 3>> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for (i, (&(x, y), &(u, v))) in from.iter().zip(to).enumerate() {
        let r = 2 * i;
        a.set_row(r, &SMatrix::<f64, 1, 8>::from_row_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]));
        a.set_row(r + 1, &SMatrix::<f64, 1, 8>::from_row_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]));
        b[r] = u;
        b[r + 1] = v;
    }
    let h = a.lu().solve(&b)?;
    Some(SMatrix::<f64, 3, 3>::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0))
}

fn projective_jitter(px: &[f32], max_shift: f32, rng: &mut impl Rng) -> Vec<f32> {
    let (w, h) = (W as f64, H as f64);
    let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let mut moved = corners;
    for c in &mut moved {
        c.0 += rng.random_range(-max_shift..=max_shift) as f64;
        c.1 += rng.random_range(-max_shift..=max_shift) as f64;
    }
    // Inverse mapping: output pixel -> source location.
    let Some(hm) = homography(&moved, &corners) else {
        return px.to_vec();
    };
    let mut out = vec![0.0; W * H];
    for y in 0..H {
        for x in 0..W {
            let p = hm * nalgebra::Vector3::new(x as f64 + 0.5, y as f64 + 0.5, 1.0);
            let (sx, sy) = (p.x / p.z, p.y / p.z);
            out[y * W + x] = sample_bilinear(px, W, H, sx as f32, sy as f32);
        }
    }
    out
}

/// Box-filter (area-weighted) resampling, used for shrinking.
fn area_resample(px: &[f32], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f32> {
    let sx = sw as f32 / dw as f32;
    let sy = sh as f32 / dh as f32;
    let overlap = |a0: f32, a1: f32, i: usize| (a1.min(i as f32 + 1.0) - a0.max(i as f32)).max(0.0);
    let mut out = vec![0.0; dw * dh];
    for dy in 0..dh {
        let (y0, y1) = (dy as f32 * sy, (dy + 1) as f32 * sy);
        for dx in 0..dw {
            let (x0, x1) = (dx as f32 * sx, (dx + 1) as f32 * sx);
            let mut acc = 0.0;
            let mut area = 0.0;
            for y in (y0.floor() as usize)..(y1.ceil() as usize).min(sh) {
                let wy = overlap(y0, y1, y);
                for x in (x0.floor() as usize)..(x1.ceil() as usize).min(sw) {
                    let wgt = wy * overlap(x0, x1, x);
                    acc += px[y * sw + x] * wgt;
                    area += wgt;
                }
            }
            out[dy * dw + dx] = if area > 0.0 { acc / area } else { 0.0 };
        }
    }
    out
}

fn bilinear_resample(px: &[f32], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f32> {
    let sx = sw as f32 / dw as f32;
    let sy = sh as f32 / dh as f32;
    let mut out = vec![0.0; dw * dh];
    for y in 0..dh {
        for x in 0..dw {
            out[y * dw + x] = sample_bilinear(px, sw, sh, (x as f32 + 0.5) * sx, (y as f32 + 0.5) * sy);
        }
    }
    out
}

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i32;
    let k: Vec<f32> = (-radius..=radius).map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f32 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

fn gaussian_blur(px: &[f32], w: usize, h: usize, sigma: f32) -> Vec<f32> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] =
                k.iter().enumerate().map(|(i, kv)| kv * px[y * w + clamp(x as isize + i as isize - r, w)]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] =
                k.iter().enumerate().map(|(i, kv)| kv * tmp[clamp(y as isize + i as isize - r, h) * w + x]).sum();
        }
    }
    out
}
