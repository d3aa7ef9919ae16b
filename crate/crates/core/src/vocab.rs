//! Corpus vocabularies and the worlds and lexicons built from them.
//!
//! Words are drawn from a fixed stream of five-letter pseudo-words, so the
//! seen and unseen splits never share a token. The seen split additionally
//! carries two homonyms, "orange" (a color and a fruit-shaped toy) and "bag"
//! (a container and a place).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{is_reserved_word, TaskClass};
use crate::grounding::{GroundingLexicon, LexEntry, LexPos};
use crate::world::{ContainerSpec, Referent, RoomSpec, ToySpec, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Seen,
    Unseen,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Seen => "seen",
            Split::Unseen => "unseen",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        match name {
            "seen" => Some(Split::Seen),
            "unseen" => Some(Split::Unseen),
            _ => None,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pool sizes and per-class record targets of one split.
///
/// Pool sizes include the homonyms, each of which sits in two pools, so the
/// number of distinct manipulation tokens is the pool total minus the number
/// of homonyms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub split: Split,
    /// Position of the split's first word in the pseudo-word stream.
    pub word_offset: usize,
    pub toys: usize,
    pub colors: usize,
    pub containers: usize,
    pub rooms: usize,
    pub locations: usize,
    pub homonyms: bool,
    pub targets: BTreeMap<TaskClass, usize>,
}

impl VocabConfig {
    /// Seen split: 360 manipulation words, 42 locations.
    /// Targets 150/450/2700/1350 and 51/612/7344.
    pub fn seen() -> Self {
        VocabConfig {
            split: Split::Seen,
            word_offset: 0,
            toys: 120,
            colors: 61,
            containers: 80,
            rooms: 101,
            locations: 42,
            homonyms: true,
            targets: BTreeMap::from([
                (TaskClass::MoveTo, 150),
                (TaskClass::Pickup, 450),
                (TaskClass::PickupColored, 2700),
                (TaskClass::Ship, 1350),
                (TaskClass::NavigateOne, 51),
                (TaskClass::NavigateTwo, 612),
                (TaskClass::NavigateThree, 7344),
            ]),
        }
    }

    /// Unseen split: 340 manipulation words, 23 locations.
    /// Targets 36/108/648/972 and 18/72/288.
    pub fn unseen() -> Self {
        VocabConfig {
            split: Split::Unseen,
            word_offset: 1000,
            toys: 110,
            colors: 60,
            containers: 70,
            rooms: 100,
            locations: 23,
            homonyms: false,
            targets: BTreeMap::from([
                (TaskClass::MoveTo, 36),
                (TaskClass::Pickup, 108),
                (TaskClass::PickupColored, 648),
                (TaskClass::Ship, 972),
                (TaskClass::NavigateOne, 18),
                (TaskClass::NavigateTwo, 72),
                (TaskClass::NavigateThree, 288),
            ]),
        }
    }

    pub fn for_split(split: Split) -> Self {
        match split {
            Split::Seen => Self::seen(),
            Split::Unseen => Self::unseen(),
        }
    }
}

pub const HOMONYM_ORANGE: &str = "orange";
pub const HOMONYM_BAG: &str = "bag";

const SHAPES: &[&str] = &[
    "sphere", "cube", "cylinder", "cone", "pyramid", "ring", "star", "block",
];

const ONSETS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const WORD_SPACE: usize = 14 * 5 * 14 * 5 * 14;

fn decode_word(mut i: usize) -> String {
    let mut out = [0u8; 5];
    for (pos, slot) in out.iter_mut().enumerate() {
        let alphabet = if pos % 2 == 0 { ONSETS } else { VOWELS };
        *slot = alphabet[i % alphabet.len()];
        i /= alphabet.len();
    }
    String::from_utf8(out.to_vec()).expect("ascii")
}

/// The `n`th word of the pseudo-word stream, skipping reserved words.
pub fn pseudo_words(offset: usize, count: usize) -> Vec<String> {
    (0..WORD_SPACE)
        .map(|i| decode_word((i * 7919 + 12345) % WORD_SPACE))
        .filter(|w| !is_reserved_word(w) && !SHAPES.contains(&w.as_str()))
        .skip(offset)
        .take(count)
        .collect()
}

/// Word pools of one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub split: Split,
    pub toys: Vec<String>,
    pub colors: Vec<String>,
    pub containers: Vec<String>,
    pub rooms: Vec<String>,
    pub locations: Vec<String>,
    /// Tokens that sit in two pools.
    pub homonyms: Vec<String>,
}

impl Vocabulary {
    pub fn generate(cfg: &VocabConfig) -> Self {
        let h = usize::from(cfg.homonyms);
        let sizes = [
            cfg.toys - h,
            cfg.colors - h,
            cfg.containers - h,
            cfg.rooms - h,
            cfg.locations,
        ];
        let mut words = pseudo_words(cfg.word_offset, sizes.iter().sum()).into_iter();
        let mut take = |n: usize| -> Vec<String> { words.by_ref().take(n).collect() };
        let mut toys = take(sizes[0]);
        let mut colors = take(sizes[1]);
        let mut containers = take(sizes[2]);
        let mut rooms = take(sizes[3]);
        let locations = take(sizes[4]);
        let mut homonyms = Vec::new();
        if cfg.homonyms {
            toys.push(HOMONYM_ORANGE.into());
            colors.push(HOMONYM_ORANGE.into());
            containers.push(HOMONYM_BAG.into());
            rooms.push(HOMONYM_BAG.into());
            homonyms = vec![HOMONYM_ORANGE.into(), HOMONYM_BAG.into()];
        }
        Vocabulary {
            split: cfg.split,
            toys,
            colors,
            containers,
            rooms,
            locations,
            homonyms,
        }
    }

    pub fn for_split(split: Split) -> Self {
        Self::generate(&VocabConfig::for_split(split))
    }

    /// Distinct manipulation tokens.
    pub fn manipulation_words(&self) -> BTreeSet<&str> {
        self.toys
            .iter()
            .chain(&self.colors)
            .chain(&self.containers)
            .chain(&self.rooms)
            .map(String::as_str)
            .collect()
    }

    pub fn navigation_words(&self) -> BTreeSet<&str> {
        self.locations.iter().map(String::as_str).collect()
    }

    pub fn is_homonym(&self, token: &str) -> bool {
        self.homonyms.iter().any(|h| h == token)
    }

    pub fn toy_id(name: &str) -> String {
        if name == HOMONYM_ORANGE {
            "toy_orange_fruit".into()
        } else {
            format!("toy_{name}")
        }
    }

    pub fn container_id(name: &str) -> String {
        format!("container_{name}")
    }

    pub fn room_id(name: &str) -> String {
        format!("room_{name}")
    }

    pub fn location_id(name: &str) -> String {
        format!("loc_{name}")
    }

    /// A 16 by 16 grid holding every toy, container, room and location.
    pub fn world(&self) -> WorldConfig {
        let width = 16;
        let cells = width * width;
        let toys = self
            .toys
            .iter()
            .enumerate()
            .map(|(i, name)| ToySpec {
                id: Self::toy_id(name),
                name: Some(name.clone()),
                shape: if name == HOMONYM_ORANGE {
                    "fruit".into()
                } else {
                    SHAPES[i % SHAPES.len()].into()
                },
                color: self.colors[i % self.colors.len()].clone(),
                start: (i * 5 + 1) % cells,
            })
            .collect();
        let containers = self
            .containers
            .iter()
            .enumerate()
            .map(|(i, name)| ContainerSpec {
                id: Self::container_id(name),
                name: Some(name.clone()),
                kind: if name == HOMONYM_BAG { "bag" } else { "box" }.into(),
                start: (i * 7 + 3) % cells,
            })
            .collect();
        let rooms = self
            .rooms
            .iter()
            .enumerate()
            .map(|(i, name)| (Self::room_id(name), name, i))
            .chain(
                self.locations
                    .iter()
                    .enumerate()
                    .map(|(i, name)| (Self::location_id(name), name, self.rooms.len() + i)),
            )
            .map(|(id, name, i)| RoomSpec {
                id,
                name: Some(name.clone()),
                cells: [i % cells].into(),
            })
            .collect();
        WorldConfig {
            grid_width: width,
            grid_height: width,
            toys,
            containers,
            rooms,
            agent_start: 0,
            gamma: 0.95,
            colors: self.colors.clone(),
            shapes: vec![],
        }
    }

    /// One entry per pool word. Locations alternate between noun and
    /// proper-noun entries; the place reading of "bag" is a proper noun.
    pub fn lexicon(&self) -> GroundingLexicon {
        let mut entries = Vec::new();
        for name in &self.toys {
            entries.push(LexEntry::new(
                name.clone(),
                LexPos::Noun,
                Referent::Object(Self::toy_id(name)),
            ));
        }
        for name in &self.colors {
            entries.push(LexEntry::new(
                name.clone(),
                LexPos::Adjective,
                Referent::Color(name.clone()),
            ));
        }
        for name in &self.containers {
            entries.push(LexEntry::new(
                name.clone(),
                LexPos::Noun,
                Referent::Object(Self::container_id(name)),
            ));
        }
        for name in &self.rooms {
            let pos = if name == HOMONYM_BAG {
                LexPos::ProperNoun
            } else {
                LexPos::Noun
            };
            entries.push(LexEntry::new(
                name.clone(),
                pos,
                Referent::Room(Self::room_id(name)),
            ));
        }
        for (i, name) in self.locations.iter().enumerate() {
            let pos = if i % 2 == 0 {
                LexPos::Noun
            } else {
                LexPos::ProperNoun
            };
            entries.push(LexEntry::new(
                name.clone(),
                pos,
                Referent::Room(Self::location_id(name)),
            ));
        }
        GroundingLexicon::new(entries).expect("pool words are distinct per part of speech")
    }
}
