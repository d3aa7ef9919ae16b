//! Mapping between words, world referents and atomic propositions.
//!
//! The lexicon grounds nouns and adjectives to referents. The registry
//! enumerates every well-sorted propositional function application of a
//! world, names each one with the canonical proposition scheme, and labels
//! states with the set of true propositions.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::is_valid_atom_name;
use crate::world::{eval_prop, PropFn, Referent, Sort, ToyState, WorldConfig, WorldError};

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("ambiguous token `{token}`: {}", candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "))]
    AmbiguousGrounding {
        token: String,
        candidates: Vec<Referent>,
    },
    #[error("duplicate lexicon entry `{token}` ({pos:?})")]
    DuplicateEntry { token: String, pos: LexPos },
    #[error("lexicon refers to {0}, which is not in the world")]
    UnknownReferent(Referent),
    #[error("proposition `{name}` produced by both {first} and {second}")]
    NameCollision {
        name: String,
        first: String,
        second: String,
    },
    #[error("`{0}` is not a valid proposition name")]
    InvalidName(String),
    #[error("{function} expects {expected} arguments, got {found}")]
    Arity {
        function: PropFn,
        expected: usize,
        found: usize,
    },
    #[error("unresolvable proposition `{0}`")]
    UnresolvableAP(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed lexicon json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Part-of-speech hint attached to a lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LexPos {
    Noun,
    Adjective,
    ProperNoun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub token: String,
    pub pos: LexPos,
    pub referent: Referent,
}

impl LexEntry {
    pub fn new(token: impl Into<String>, pos: LexPos, referent: Referent) -> Self {
        LexEntry {
            token: token.into(),
            pos,
            referent,
        }
    }
}

/// Word-to-referent lookup table; tokens match case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct GroundingLexicon {
    entries: Vec<LexEntry>,
    by_token: HashMap<String, Vec<usize>>,
}

impl PartialEq for GroundingLexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl GroundingLexicon {
    pub fn new(entries: Vec<LexEntry>) -> Result<Self, GroundingError> {
        let mut by_token: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            let key = e.token.to_lowercase();
            let slot = by_token.entry(key).or_default();
            if slot.iter().any(|&j| entries[j].pos == e.pos) {
                return Err(GroundingError::DuplicateEntry {
                    token: e.token.clone(),
                    pos: e.pos,
                });
            }
            slot.push(i);
        }
        Ok(GroundingLexicon { entries, by_token })
    }

    pub fn from_json(text: &str) -> Result<Self, GroundingError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GroundingError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("lexicon serializes")
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries whose token matches, case-insensitively.
    pub fn lookup(&self, token: &str) -> Vec<&LexEntry> {
        self.by_token
            .get(&token.to_lowercase())
            .map(|ix| ix.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Checks that every referent exists in `world`.
    pub fn check_against(&self, world: &WorldConfig) -> Result<(), GroundingError> {
        for e in &self.entries {
            if !world.contains(&e.referent) {
                return Err(GroundingError::UnknownReferent(e.referent.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "resolution", content = "referents")]
pub enum GroundingResult {
    Unambiguous(Referent),
    DisambiguatedByPos(Referent),
    Ambiguous(Vec<Referent>),
}

impl GroundingResult {
    pub fn referent(&self) -> Option<&Referent> {
        match self {
            GroundingResult::Unambiguous(r) | GroundingResult::DisambiguatedByPos(r) => Some(r),
            GroundingResult::Ambiguous(_) => None,
        }
    }

    /// The single referent, or an ambiguity error naming every candidate.
    pub fn into_referent(self, token: &str) -> Result<Referent, GroundingError> {
        match self {
            GroundingResult::Unambiguous(r) | GroundingResult::DisambiguatedByPos(r) => Ok(r),
            GroundingResult::Ambiguous(candidates) => Err(GroundingError::AmbiguousGrounding {
                token: token.to_string(),
                candidates,
            }),
        }
    }
}

/// Grounds one token. With several matching entries the POS hint picks
/// among them; without a usable hint the result lists every candidate.
pub fn ground_token(
    lex: &GroundingLexicon,
    token: &str,
    hint: Option<LexPos>,
) -> Result<GroundingResult, GroundingError> {
    let matches = lex.lookup(token);
    let mut candidates: Vec<Referent> = Vec::new();
    for e in &matches {
        if !candidates.contains(&e.referent) {
            candidates.push(e.referent.clone());
        }
    }
    match candidates.len() {
        0 => Err(GroundingError::UnknownToken(token.to_string())),
        1 => Ok(GroundingResult::Unambiguous(candidates.remove(0))),
        _ => {
            let by_hint = hint.and_then(|h| matches.iter().find(|e| e.pos == h));
            Ok(match by_hint {
                Some(e) => GroundingResult::DisambiguatedByPos(e.referent.clone()),
                None => GroundingResult::Ambiguous(candidates),
            })
        }
    }
}

/// Proposition identifier for a function applied to argument names.
pub fn canonical_ap_name(function: PropFn, args: &[&str]) -> Result<String, GroundingError> {
    if args.len() != function.arity() {
        return Err(GroundingError::Arity {
            function,
            expected: function.arity(),
            found: args.len(),
        });
    }
    Ok(match function {
        PropFn::AgentAt => args[0].to_string(),
        PropFn::AgentAtObject => format!("at_{}", args[0]),
        PropFn::Holding => format!("holding_{}", args[0]),
        PropFn::InContainer | PropFn::ContainerInRoom => format!("{}_in_{}", args[0], args[1]),
        PropFn::HasColor | PropFn::HasShape => format!("{}_is_{}", args[0], args[1]),
    })
}

/// One well-sorted propositional function application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Application {
    pub function: PropFn,
    pub args: Vec<Referent>,
    pub arg_names: Vec<String>,
    pub name: String,
}

impl Application {
    fn describe(&self) -> String {
        format!("{}({})", self.function, self.arg_names.join(","))
    }
}

/// Every proposition of one world, with its reverse index.
#[derive(Debug, Clone)]
pub struct PropRegistry {
    world: WorldConfig,
    apps: Vec<Application>,
    index: HashMap<String, usize>,
    by_application: HashMap<(PropFn, Vec<Referent>), usize>,
    fluents: Vec<usize>,
    static_true: BTreeSet<String>,
}

fn cartesian(domains: &[Vec<Referent>]) -> Vec<Vec<Referent>> {
    domains.iter().fold(vec![Vec::new()], |acc, dom| {
        acc.iter()
            .flat_map(|prefix| {
                dom.iter().map(move |r| {
                    let mut v = prefix.clone();
                    v.push(r.clone());
                    v
                })
            })
            .collect()
    })
}

impl PropRegistry {
    pub fn build(world: &WorldConfig) -> Result<Self, GroundingError> {
        world.validate()?;
        let s0 = world.initial_state();
        let mut reg = PropRegistry {
            world: world.clone(),
            apps: Vec::new(),
            index: HashMap::new(),
            by_application: HashMap::new(),
            fluents: Vec::new(),
            static_true: BTreeSet::new(),
        };
        for function in PropFn::ALL {
            let domains: Vec<Vec<Referent>> = function
                .signature()
                .iter()
                .map(|s| world.domain(*s))
                .collect();
            for args in cartesian(&domains) {
                let arg_names: Vec<String> = args
                    .iter()
                    .map(|a| world.name_of(a).expect("domain members have names"))
                    .collect();
                let refs: Vec<&str> = arg_names.iter().map(String::as_str).collect();
                let name = canonical_ap_name(function, &refs)?;
                if !is_valid_atom_name(&name) {
                    return Err(GroundingError::InvalidName(name));
                }
                let app = Application {
                    function,
                    args,
                    arg_names,
                    name,
                };
                if let Some(&prev) = reg.index.get(&app.name) {
                    return Err(GroundingError::NameCollision {
                        name: app.name.clone(),
                        first: reg.apps[prev].describe(),
                        second: app.describe(),
                    });
                }
                let i = reg.apps.len();
                if function.is_fluent() {
                    reg.fluents.push(i);
                } else if eval_prop(world, function, &app.args, &s0)? {
                    reg.static_true.insert(app.name.clone());
                }
                reg.index.insert(app.name.clone(), i);
                reg.by_application.insert((function, app.args.clone()), i);
                reg.apps.push(app);
            }
        }
        Ok(reg)
    }

    pub fn world(&self) -> &WorldConfig {
        &self.world
    }

    pub fn applications(&self) -> &[Application] {
        &self.apps
    }

    pub fn len(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Looks up the application with the given function and arguments.
    pub fn application(&self, function: PropFn, args: &[Referent]) -> Option<&Application> {
        self.by_application
            .get(&(function, args.to_vec()))
            .map(|&i| &self.apps[i])
    }

    /// Proposition name for a function applied to referents of this world.
    pub fn name_for(&self, function: PropFn, args: &[Referent]) -> Result<String, GroundingError> {
        if let Some(app) = self.application(function, args) {
            return Ok(app.name.clone());
        }
        if args.len() != function.arity() {
            return Err(GroundingError::Arity {
                function,
                expected: function.arity(),
                found: args.len(),
            });
        }
        for (position, (arg, sort)) in args.iter().zip(function.signature()).enumerate() {
            if !self.world.has_sort(arg, *sort) {
                return Err(WorldError::SortMismatch {
                    function,
                    position,
                    expected: *sort,
                    found: arg.to_string(),
                }
                .into());
            }
        }
        unreachable!("every well-sorted application is registered")
    }
}

/// Inverse of [`canonical_ap_name`] over the registry's world.
pub fn resolve_ap<'a>(
    reg: &'a PropRegistry,
    name: &str,
) -> Result<&'a Application, GroundingError> {
    reg.index
        .get(name)
        .map(|&i| &reg.apps[i])
        .ok_or_else(|| GroundingError::UnresolvableAP(name.to_string()))
}

/// Names of every proposition true in `s`.
pub fn label_state(reg: &PropRegistry, s: &ToyState) -> Result<BTreeSet<String>, GroundingError> {
    let mut labels = reg.static_true.clone();
    for &i in &reg.fluents {
        let app = &reg.apps[i];
        if eval_prop(&reg.world, app.function, &app.args, s)? {
            labels.insert(app.name.clone());
        }
    }
    Ok(labels)
}

/// Sorts a referent can fill in this world.
pub fn sorts_of(world: &WorldConfig, r: &Referent) -> Vec<Sort> {
    [
        Sort::Agent,
        Sort::Toy,
        Sort::Container,
        Sort::Room,
        Sort::Color,
        Sort::Shape,
    ]
    .into_iter()
    .filter(|s| world.has_sort(r, *s))
    .collect()
}
