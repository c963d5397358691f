//! Samples one wired spanning forest and a spin field, writing both as CSV.

use std::fs::File;
use std::io::BufWriter;

use usf_lab::forest::{components_minus_root, wilson_wired_box};
use usf_lab::lattice::BoxGeometry;
use usf_lab::rng::RngStream;
use usf_lab::spin::{assign_spins, SpinLaw};

fn main() -> usf_lab::Result<()> {
    let geom = BoxGeometry::new(5, 3)?;
    let mut rng = RngStream::new(23, 0).rng();
    let forest = wilson_wired_box(&geom, None, &mut rng)?;
    forest.validate(&geom)?;
    let labels = components_minus_root(&forest);
    println!("{} sites, {} components after removing the root", forest.len(), labels.count());
    let field = assign_spins(&geom, &labels, &SpinLaw::Rademacher, &mut rng)?;
    let dir = std::env::temp_dir();
    forest.write_csv(BufWriter::new(File::create(dir.join("forest.csv"))?))?;
    field.write_csv(BufWriter::new(File::create(dir.join("spins.csv"))?))?;
    println!("wrote forest.csv and spins.csv to {}", dir.display());
    Ok(())
}
