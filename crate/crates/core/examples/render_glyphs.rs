//! Renders one digit in every bundled font, clean and augmented, as ASCII art.
//!
//!     cargo run --release --example render_glyphs -- 3

use fontcheck::synth::{augment, render_glyph, AugmentationConfig, FontRegistry, RenderConfig};

fn main() -> fontcheck::Result<()> {
    let digit: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let registry = FontRegistry::bundled()?;
    let render = RenderConfig::default();
    let aug = AugmentationConfig::default();
    for asset in registry.all() {
        let font = asset.load()?;
        let clean = render_glyph(&font, digit, &render)?;
        let noisy = augment(&clean, &aug, 7)?;
        println!("{} ({:?})", asset.id, asset.role);
        for (a, b) in clean.to_ascii().lines().zip(noisy.to_ascii().lines()) {
            println!("  {a}   {b}");
        }
    }
    Ok(())
}
