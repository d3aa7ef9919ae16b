//! Rule-based front end: part-of-speech tagging against the grounding
//! lexicon, task classification, and extraction of the ordered contextual
//! query parameters.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundingLexicon, LexPos};
use crate::world::Referent;

/// The seven task classes, each with a fixed parameter count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskClass {
    MoveTo,
    Pickup,
    PickupColored,
    Ship,
    NavigateOne,
    NavigateTwo,
    NavigateThree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Manipulation,
    Navigation,
}

impl TaskClass {
    pub const ALL: [TaskClass; 7] = [
        TaskClass::MoveTo,
        TaskClass::Pickup,
        TaskClass::PickupColored,
        TaskClass::Ship,
        TaskClass::NavigateOne,
        TaskClass::NavigateTwo,
        TaskClass::NavigateThree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskClass::MoveTo => "move_to",
            TaskClass::Pickup => "pickup",
            TaskClass::PickupColored => "pickup_colored",
            TaskClass::Ship => "ship",
            TaskClass::NavigateOne => "navigate_one",
            TaskClass::NavigateTwo => "navigate_two",
            TaskClass::NavigateThree => "navigate_three",
        }
    }

    pub fn from_name(name: &str) -> Option<TaskClass> {
        TaskClass::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            TaskClass::MoveTo | TaskClass::Pickup | TaskClass::NavigateOne => 1,
            TaskClass::PickupColored | TaskClass::NavigateTwo => 2,
            TaskClass::Ship | TaskClass::NavigateThree => 3,
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            TaskClass::NavigateOne | TaskClass::NavigateTwo | TaskClass::NavigateThree => {
                Domain::Navigation
            }
            _ => Domain::Manipulation,
        }
    }

    pub fn of_domain(domain: Domain) -> impl Iterator<Item = TaskClass> {
        TaskClass::ALL
            .into_iter()
            .filter(move |c| c.domain() == domain)
    }
}

impl fmt::Display for TaskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Manipulation => "manipulation",
            Domain::Navigation => "navigation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("no task pattern matches `{0}`")]
    UnclassifiableUtterance(String),
    #[error("{descriptor} takes {expected} parameters, extracted {found:?}")]
    ArityMismatch {
        descriptor: TaskClass,
        expected: usize,
        found: Vec<String>,
    },
}

/// A task descriptor with its ordered parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextualQuery {
    pub descriptor: TaskClass,
    pub params: Vec<String>,
}

impl ContextualQuery {
    pub fn new(descriptor: TaskClass, params: Vec<String>) -> Result<Self, FrontendError> {
        if params.len() != descriptor.arity() {
            return Err(FrontendError::ArityMismatch {
                descriptor,
                expected: descriptor.arity(),
                found: params,
            });
        }
        Ok(ContextualQuery { descriptor, params })
    }

    pub fn arity_ok(&self) -> bool {
        self.params.len() == self.descriptor.arity()
    }
}

impl fmt::Display for ContextualQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.descriptor, self.params.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pos {
    Verb,
    Noun,
    Adjective,
    ProperNoun,
    FunctionWord,
    Unknown,
}

impl Pos {
    pub fn lexical(self) -> Option<LexPos> {
        match self {
            Pos::Noun => Some(LexPos::Noun),
            Pos::Adjective => Some(LexPos::Adjective),
            Pos::ProperNoun => Some(LexPos::ProperNoun),
            _ => None,
        }
    }

    pub fn is_content(self) -> bool {
        self.lexical().is_some()
    }
}

impl From<LexPos> for Pos {
    fn from(p: LexPos) -> Self {
        match p {
            LexPos::Noun => Pos::Noun,
            LexPos::Adjective => Pos::Adjective,
            LexPos::ProperNoun => Pos::ProperNoun,
        }
    }
}

/// Coarse kind of thing a lexicon word can denote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    Object,
    Room,
    Attribute,
}

fn ref_kind(r: &Referent) -> RefKind {
    match r {
        Referent::Object(_) | Referent::Agent => RefKind::Object,
        Referent::Room(_) => RefKind::Room,
        _ => RefKind::Attribute,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub pos: Pos,
    /// Kinds of referent the lexicon offers for this token.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kinds: Vec<RefKind>,
}

/// Switches for the tagger.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerOptions {
    /// Tag the verb "pickup" as a noun, reproducing a known tagger error.
    pub pickup_as_noun: bool,
}

const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "an", "to", "in", "into", "on", "onto", "and", "then", "up", "at", "of", "with",
    "from", "it", "please", "that", "is", "inside", "towards", "toward", "over", "by", "next",
    "near", "there", "you", "can", "now", "after", "first", "finally", "this",
];

const VERBS: &[&str] = &[
    "go", "move", "walk", "head", "navigate", "visit", "travel", "drive", "approach", "reach",
    "proceed", "pick", "pickup", "grab", "take", "lift", "fetch", "get", "put", "place", "drop",
    "insert", "bring", "carry", "deliver", "set",
];

const PICKUP_VERBS: &[&str] = &["pickup", "grab", "lift", "fetch", "get"];
const PUT_VERBS: &[&str] = &["put", "place", "drop", "insert", "set"];
const CARRY_VERBS: &[&str] = &["put", "place", "move", "bring", "carry", "take", "deliver"];
const MOVE_VERBS: &[&str] = &[
    "go", "move", "walk", "head", "navigate", "visit", "travel", "drive", "approach", "reach",
    "proceed",
];

pub fn is_reserved_word(word: &str) -> bool {
    FUNCTION_WORDS.contains(&word) || VERBS.contains(&word)
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-' || c == '\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn tag_tokens(text: &str, lex: &GroundingLexicon) -> Vec<TaggedToken> {
    tag_tokens_with(text, lex, TaggerOptions::default())
}

/// Lowercases and tokenizes `text`, then tags each token: lexicon entries
/// first, the closed function-word list second, the verb list third.
pub fn tag_tokens_with(
    text: &str,
    lex: &GroundingLexicon,
    opts: TaggerOptions,
) -> Vec<TaggedToken> {
    let tokens = tokenize(text);
    let lexical: Vec<Vec<LexPos>> = tokens
        .iter()
        .map(|t| lex.lookup(t).iter().map(|e| e.pos).collect())
        .collect();
    tokens
        .iter()
        .enumerate()
        .map(|(i, token)| {
            let hints = &lexical[i];
            let mut kinds: Vec<RefKind> = Vec::new();
            for e in lex.lookup(token) {
                let k = ref_kind(&e.referent);
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
            let pos = if opts.pickup_as_noun && token == "pickup" {
                Pos::Noun
            } else if !hints.is_empty() {
                choose_lexical_pos(hints, lexical.get(i + 1)).into()
            } else if FUNCTION_WORDS.contains(&token.as_str()) {
                Pos::FunctionWord
            } else if VERBS.contains(&token.as_str()) {
                Pos::Verb
            } else {
                Pos::Unknown
            };
            TaggedToken {
                token: token.clone(),
                pos,
                kinds,
            }
        })
        .collect()
}

// Adjective reading when a noun follows, noun reading otherwise.
fn choose_lexical_pos(hints: &[LexPos], next: Option<&Vec<LexPos>>) -> LexPos {
    if hints.len() == 1 {
        return hints[0];
    }
    let next_is_noun = next.is_some_and(|n| n.contains(&LexPos::Noun));
    if next_is_noun && hints.contains(&LexPos::Adjective) {
        LexPos::Adjective
    } else if hints.contains(&LexPos::Noun) {
        LexPos::Noun
    } else {
        hints[0]
    }
}

fn clauses(tags: &[TaggedToken]) -> Vec<&[TaggedToken]> {
    tags.split(|t| t.token == "then")
        .map(|c| {
            let mut c = c;
            while let Some((last, rest)) = c.split_last() {
                if last.token == "and" {
                    c = rest;
                } else {
                    break;
                }
            }
            c
        })
        .filter(|c| !c.is_empty())
        .collect()
}

fn has_word(clause: &[TaggedToken], words: &[&str]) -> bool {
    clause.iter().any(|t| words.contains(&t.token.as_str()))
}

fn is_pickup_clause(clause: &[TaggedToken]) -> bool {
    has_word(clause, PICKUP_VERBS)
        || clause
            .windows(2)
            .any(|w| w[0].token == "pick" && w[1].token == "up")
}

fn content(clause: &[TaggedToken]) -> impl Iterator<Item = &TaggedToken> {
    clause.iter().filter(|t| t.pos.is_content())
}

/// Pattern rules, tried in order: ship, pickup_colored, pickup, move_to,
/// navigate_k.
pub fn classify_task(tags: &[TaggedToken]) -> Result<TaskClass, FrontendError> {
    let unclassifiable = || {
        FrontendError::UnclassifiableUtterance(
            tags.iter()
                .map(|t| t.token.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        )
    };
    let parts = clauses(tags);
    if parts.len() == 2
        && has_word(parts[0], PUT_VERBS)
        && has_word(parts[0], &["in", "into", "inside"])
        && content(parts[0]).next().is_some()
        && has_word(parts[1], CARRY_VERBS)
        && content(parts[1]).next().is_some()
    {
        return Ok(TaskClass::Ship);
    }
    if parts.len() == 1 && is_pickup_clause(parts[0]) {
        let clause = parts[0];
        let colored = clause.iter().enumerate().any(|(i, t)| {
            t.pos == Pos::Adjective && clause[i + 1..].iter().any(|n| n.pos == Pos::Noun)
        });
        return Ok(if colored {
            TaskClass::PickupColored
        } else {
            TaskClass::Pickup
        });
    }
    if parts.len() == 1 && has_word(parts[0], MOVE_VERBS) {
        let target = content(parts[0]).next().ok_or_else(unclassifiable)?;
        if target.kinds.contains(&RefKind::Object) {
            return Ok(TaskClass::MoveTo);
        }
        if target.kinds.contains(&RefKind::Room) || target.pos == Pos::ProperNoun {
            return Ok(TaskClass::NavigateOne);
        }
        return Err(unclassifiable());
    }
    if (2..=3).contains(&parts.len()) && parts.iter().all(|c| has_word(c, MOVE_VERBS)) {
        return Ok(if parts.len() == 2 {
            TaskClass::NavigateTwo
        } else {
            TaskClass::NavigateThree
        });
    }
    Err(unclassifiable())
}

/// Output of the front end: the query plus the tag of each parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub cq: ContextualQuery,
    pub param_pos: Vec<LexPos>,
    pub tags: Vec<TaggedToken>,
}

pub fn extract_cq(text: &str, lex: &GroundingLexicon) -> Result<ContextualQuery, FrontendError> {
    extract(text, lex, TaggerOptions::default()).map(|e| e.cq)
}

/// Tags, classifies and collects parameters in the descriptor's slot order:
/// (color, shape) for pickup_colored, (toy, container, room) for ship and
/// utterance order otherwise.
pub fn extract(
    text: &str,
    lex: &GroundingLexicon,
    opts: TaggerOptions,
) -> Result<Extraction, FrontendError> {
    let tags = tag_tokens_with(text, lex, opts);
    let descriptor = classify_task(&tags)?;
    let mut params: Vec<(String, LexPos)> = tags
        .iter()
        .filter_map(|t| t.pos.lexical().map(|p| (t.token.clone(), p)))
        .collect();
    match descriptor {
        TaskClass::Ship => {
            let mut seen: Vec<String> = Vec::new();
            params.retain(|(tok, _)| {
                if seen.contains(tok) {
                    false
                } else {
                    seen.push(tok.clone());
                    true
                }
            });
        }
        TaskClass::PickupColored => {
            params.sort_by_key(|(_, p)| *p != LexPos::Adjective);
        }
        _ => {}
    }
    let (tokens, param_pos): (Vec<String>, Vec<LexPos>) = params.into_iter().unzip();
    let cq = ContextualQuery::new(descriptor, tokens)?;
    Ok(Extraction {
        cq,
        param_pos,
        tags,
    })
}
