//! Worlds, lexicons and the template library shipped in `data/`.

use std::path::{Path, PathBuf};

use crate::grounding::{GroundingError, GroundingLexicon, LexEntry, LexPos};
use crate::template::{TemplateError, TemplateLibrary};
use crate::vocab::{Split, Vocabulary};
use crate::world::{ContainerSpec, Referent, RoomSpec, ToySpec, WorldConfig, WorldError};

pub const WORLD_IDS: [&str; 3] = ["toy_4x1", "toy_seen", "toy_unseen"];

/// Seed of the seen corpus the bundled library was trained on.
pub const LIBRARY_SEED: u64 = 0;

const LIBRARY_JSON: &str = include_str!("../data/library.json");

fn toy(id: &str, shape: &str, color: &str, start: usize) -> ToySpec {
    ToySpec {
        id: id.into(),
        name: Some(shape.into()),
        shape: shape.into(),
        color: color.into(),
        start,
    }
}

/// Four cells in a row: kitchen on the left half, bedroom on the right.
/// The box starts with the agent in cell 0, the cylinder in cell 1 and the
/// sphere in cell 3.
pub fn toy_4x1() -> WorldConfig {
    WorldConfig {
        grid_width: 4,
        grid_height: 1,
        toys: vec![
            toy("toy_cylinder", "cylinder", "blue", 1),
            toy("toy_sphere", "sphere", "red", 3),
        ],
        containers: vec![ContainerSpec {
            id: "container_box".into(),
            name: Some("box".into()),
            kind: "box".into(),
            start: 0,
        }],
        rooms: vec![
            RoomSpec {
                id: "room_kitchen".into(),
                name: Some("kitchen".into()),
                cells: [0, 1].into(),
            },
            RoomSpec {
                id: "room_bedroom".into(),
                name: Some("bedroom".into()),
                cells: [2, 3].into(),
            },
        ],
        agent_start: 0,
        gamma: 0.95,
        colors: vec![],
        shapes: vec![],
    }
}

/// The 4x1 layout with the sphere as its only toy.
pub fn toy_4x1_single() -> WorldConfig {
    let mut w = toy_4x1();
    w.toys.retain(|t| t.id == "toy_sphere");
    w
}

pub fn toy_4x1_lexicon() -> GroundingLexicon {
    let obj = |id: &str| Referent::Object(id.into());
    let room = |id: &str| Referent::Room(id.into());
    let color = |c: &str| Referent::Color(c.into());
    GroundingLexicon::new(vec![
        LexEntry::new("cylinder", LexPos::Noun, obj("toy_cylinder")),
        LexEntry::new("sphere", LexPos::Noun, obj("toy_sphere")),
        LexEntry::new("ball", LexPos::Noun, obj("toy_sphere")),
        LexEntry::new("box", LexPos::Noun, obj("container_box")),
        LexEntry::new("kitchen", LexPos::Noun, room("room_kitchen")),
        LexEntry::new("bedroom", LexPos::Noun, room("room_bedroom")),
        LexEntry::new("red", LexPos::Adjective, color("red")),
        LexEntry::new("blue", LexPos::Adjective, color("blue")),
    ])
    .expect("entries are distinct")
}

/// World and lexicon by bundled id.
pub fn world_by_id(id: &str) -> Option<(WorldConfig, GroundingLexicon)> {
    match id {
        "toy_4x1" => Some((toy_4x1(), toy_4x1_lexicon())),
        "toy_seen" | "toy_unseen" => {
            let split = if id == "toy_seen" {
                Split::Seen
            } else {
                Split::Unseen
            };
            let v = Vocabulary::for_split(split);
            Some((v.world(), v.lexicon()))
        }
        _ => None,
    }
}

/// The template library trained on the seen corpus.
pub fn library() -> TemplateLibrary {
    TemplateLibrary::from_json(LIBRARY_JSON).expect("bundled library is valid")
}

/// `dir/name.json` becomes `dir/name.lexicon.json`.
pub fn lexicon_path_for(world_path: &Path) -> PathBuf {
    let stem = world_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    world_path.with_file_name(format!("{stem}.lexicon.json"))
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("world {path}: {source}")]
    World { path: PathBuf, source: WorldError },
    #[error("lexicon {path}: {source}")]
    Lexicon {
        path: PathBuf,
        source: GroundingError,
    },
    #[error("library {path}: {source}")]
    Library {
        path: PathBuf,
        source: TemplateError,
    },
}

/// Loads a world file and its sibling lexicon, checking they agree.
pub fn load_world(path: &Path) -> Result<(WorldConfig, GroundingLexicon), LoadError> {
    let world = WorldConfig::load(path).map_err(|source| LoadError::World {
        path: path.into(),
        source,
    })?;
    let lex_path = lexicon_path_for(path);
    let lexicon = GroundingLexicon::load(&lex_path)
        .and_then(|l| l.check_against(&world).map(|_| l))
        .map_err(|source| LoadError::Lexicon {
            path: lex_path,
            source,
        })?;
    Ok((world, lexicon))
}

pub fn load_library(path: &Path) -> Result<TemplateLibrary, LoadError> {
    crate::template::load_library(path).map_err(|source| LoadError::Library {
        path: path.into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{reachable_states, state_bound, DEFAULT_STATE_CAP};

    #[test]
    fn bundled_worlds_validate() {
        for id in WORLD_IDS {
            let (w, lex) = world_by_id(id).unwrap();
            w.validate().unwrap();
            lex.check_against(&w).unwrap();
        }
        assert!(world_by_id("nowhere").is_none());
    }

    #[test]
    fn single_toy_bound() {
        let w = toy_4x1_single();
        assert_eq!(state_bound(&w), 120);
        let n = reachable_states(&w, &w.initial_state(), DEFAULT_STATE_CAP)
            .unwrap()
            .len();
        assert!(n <= 120);
    }

    #[test]
    fn lexicon_sibling_path() {
        assert_eq!(
            lexicon_path_for(Path::new("data/toy_4x1.json")),
            PathBuf::from("data/toy_4x1.lexicon.json")
        );
    }

    #[test]
    fn library_has_every_class() {
        assert_eq!(library().len(), 7);
    }
}
