//! The files under `data/` must match what the code regenerates.

use std::path::Path;

use groundsmith::bundled::{self, world_by_id, LIBRARY_SEED, WORLD_IDS};
use groundsmith::corpus::{generate_split, train_templates};
use groundsmith::grounding::PropRegistry;
use groundsmith::vocab::Split;

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

#[test]
fn world_files_match_builders() {
    for id in WORLD_IDS {
        let (world, lexicon) = world_by_id(id).unwrap();
        let (file_world, file_lexicon) = bundled::load_world(&data(&format!("{id}.json"))).unwrap();
        assert_eq!(file_world, world, "{id}");
        assert_eq!(file_lexicon, lexicon, "{id}");
    }
}

#[test]
fn library_matches_training() {
    let (world, lexicon) = world_by_id("toy_seen").unwrap();
    let reg = PropRegistry::build(&world).unwrap();
    let corpus = generate_split(Split::Seen, LIBRARY_SEED).unwrap();
    let trained = train_templates(&corpus, &reg, &lexicon).unwrap();
    assert_eq!(trained, bundled::library());
    assert_eq!(
        bundled::load_library(&data("library.json")).unwrap(),
        trained
    );
}
