//! Builds a small balanced training set, saves it, reloads it and exports
//! the samples as PGM files with a CSV manifest.

use fontcheck::synth::io::export_pgm_dir;
use fontcheck::synth::{
    load_dataset, save_dataset, synthesize_dataset, AugmentationConfig, FontRegistry, RenderConfig,
};

fn main() -> fontcheck::Result<()> {
    let registry = FontRegistry::bundled()?;
    let ds = synthesize_dataset(&registry, 20, &RenderConfig::default(), &AugmentationConfig::default(), 42)?;
    println!("{} samples from fonts {:?}", ds.len(), ds.font_ids());
    print!("{}", ds.cell_table());

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("train.ffds");
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, ds);
    println!("saved {} bytes, reloaded identically (hash {})", std::fs::metadata(&path)?.len(), back.content_hash());

    let pgm = dir.path().join("pgm");
    export_pgm_dir(&ds, &pgm)?;
    println!("exported {} files to {}", std::fs::read_dir(&pgm)?.count(), pgm.display());
    Ok(())
}
