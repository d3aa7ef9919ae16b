//! Regenerates the files in `data/`: the three bundled worlds with their
//! lexicons, and the template library trained on the seen corpus.
//!
//!     cargo run --example export_bundled [out_dir]

use std::path::PathBuf;

use groundsmith::bundled::{world_by_id, LIBRARY_SEED, WORLD_IDS};
use groundsmith::corpus::{generate_split, train_templates};
use groundsmith::grounding::PropRegistry;
use groundsmith::vocab::Split;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&out)?;
    for id in WORLD_IDS {
        let (world, lexicon) = world_by_id(id).expect("bundled id");
        std::fs::write(
            out.join(format!("{id}.json")),
            world.to_json_pretty() + "\n",
        )?;
        std::fs::write(
            out.join(format!("{id}.lexicon.json")),
            lexicon.to_json_pretty() + "\n",
        )?;
    }

    let (world, lexicon) = world_by_id("toy_seen").expect("bundled id");
    let reg = PropRegistry::build(&world)?;
    let corpus = generate_split(Split::Seen, LIBRARY_SEED)?;
    let library = train_templates(&corpus, &reg, &lexicon)?;
    std::fs::write(out.join("library.json"), library.to_json() + "\n")?;
    println!("wrote bundled data to {}", out.display());
    Ok(())
}
