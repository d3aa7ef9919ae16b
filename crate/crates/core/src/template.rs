//! One-shot learning of templated LTL from a single (contextual query,
//! grounded LTL) pair, and instantiation of templates on new parameters.
//!
//! Learning runs in two steps. [`lift`] replaces every atomic proposition by
//! the propositional function application it names, turning each argument
//! into a variable slot that remembers its example referent. Arguments with
//! the same referent share one slot. [`match_parameters`] then grounds the
//! query parameters and binds each slot to the unique parameter that grounds
//! to the slot's example referent. The parameters must ground to pairwise
//! distinct referents, otherwise the binding would not be well defined.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{ContextualQuery, TaskClass};
use crate::grounding::{
    ground_token, resolve_ap, GroundingError, GroundingLexicon, LexPos, PropRegistry,
};
use crate::ltl::{Ltl, LtlFormula};
use crate::world::{PropFn, Referent, Sort, WorldError};

pub const SCHEMA_VERSION: u32 = 1;

pub type SlotId = usize;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("parameters {first} and {second} both ground to {referent}")]
    NonDistinctGroundings {
        first: usize,
        second: usize,
        referent: Referent,
    },
    #[error("slot v{slot} ({referent}) matches no query parameter")]
    UnboundSlot { slot: SlotId, referent: Referent },
    #[error("parameter {index} (`{token}`) matches no slot")]
    UnusedParameter { index: usize, token: String },
    #[error("template is for {expected}, query is {found}")]
    DescriptorMismatch {
        expected: TaskClass,
        found: TaskClass,
    },
    #[error("{descriptor} takes {expected} parameters, got {found}")]
    ArityMismatch {
        descriptor: TaskClass,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("corrupt template library: {0}")]
    CorruptLibrary(String),
    #[error("cannot access template library: {0}")]
    Io(#[from] std::io::Error),
}

fn lift_grounding_error(e: GroundingError) -> TemplateError {
    match e {
        GroundingError::World(w @ WorldError::SortMismatch { .. }) => {
            TemplateError::SortMismatch(w.to_string())
        }
        other => TemplateError::Grounding(other),
    }
}

/// An argument position of a lifted proposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotArg {
    Var(SlotId),
    Const(Referent),
}

/// A propositional function applied to slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotAtom {
    pub function: PropFn,
    pub args: Vec<SlotArg>,
}

impl fmt::Display for SlotAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match a {
                SlotArg::Var(id) => format!("v{id}"),
                SlotArg::Const(r) => r.to_string(),
            })
            .collect();
        write!(f, "{}<{}>", self.function, args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotInfo {
    pub id: SlotId,
    pub sort: Sort,
    /// Referent the slot had in the training example.
    pub example: Referent,
}

/// LTL over propositional function applications with variable slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedLtl {
    pub formula: Ltl<SlotAtom>,
    pub slots: Vec<SlotInfo>,
}

impl LiftedLtl {
    pub fn slot(&self, id: SlotId) -> Option<&SlotInfo> {
        self.slots.iter().find(|s| s.id == id)
    }
}

impl fmt::Display for LiftedLtl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)
    }
}

/// Lifted LTL plus the slot-to-parameter binding of one task class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatedLtl {
    pub task_class: TaskClass,
    pub lifted: LiftedLtl,
    pub binding: BTreeMap<SlotId, usize>,
}

/// Replaces each atom of `grounded` by the application it names.
pub fn lift(grounded: &LtlFormula, reg: &PropRegistry) -> Result<LiftedLtl, TemplateError> {
    let mut slots: Vec<SlotInfo> = Vec::new();
    let formula = grounded.try_map_atoms(&mut |name: &String| {
        let app = resolve_ap(reg, name)?;
        let args = app
            .args
            .iter()
            .zip(app.function.signature())
            .map(|(referent, sort)| {
                let id = match slots.iter().find(|s| &s.example == referent) {
                    Some(s) => s.id,
                    None => {
                        let id = slots.len();
                        slots.push(SlotInfo {
                            id,
                            sort: *sort,
                            example: referent.clone(),
                        });
                        id
                    }
                };
                SlotArg::Var(id)
            })
            .collect();
        Ok::<_, TemplateError>(Ltl::Atom(SlotAtom {
            function: app.function,
            args,
        }))
    })?;
    Ok(LiftedLtl { formula, slots })
}

/// Grounds query parameters through the lexicon. `hints` carries the
/// part-of-speech tag of each parameter when available.
pub fn ground_params(
    cq: &ContextualQuery,
    lex: &GroundingLexicon,
    hints: Option<&[LexPos]>,
) -> Result<Vec<Referent>, TemplateError> {
    cq.params
        .iter()
        .enumerate()
        .map(|(i, token)| {
            let hint = hints.and_then(|h| h.get(i).copied());
            Ok(ground_token(lex, token, hint)?.into_referent(token)?)
        })
        .collect()
}

fn check_distinct(groundings: &[Referent]) -> Result<(), TemplateError> {
    for (i, a) in groundings.iter().enumerate() {
        if let Some(j) = groundings[i + 1..].iter().position(|b| b == a) {
            return Err(TemplateError::NonDistinctGroundings {
                first: i,
                second: i + 1 + j,
                referent: a.clone(),
            });
        }
    }
    Ok(())
}

/// Controls parameter matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOptions {
    /// Referents that may stay as constants when no parameter names them.
    pub background: BTreeSet<Referent>,
    /// Report unused parameters as warnings instead of failing.
    pub diagnostic: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            background: BTreeSet::from([Referent::Agent]),
            diagnostic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchWarning {
    UnusedParameter { index: usize, token: String },
}

/// Binds the lifted slots to query parameters.
pub fn match_parameters(
    cq: &ContextualQuery,
    lifted: &LiftedLtl,
    lex: &GroundingLexicon,
) -> Result<TemplatedLtl, TemplateError> {
    let groundings = ground_params(cq, lex, None)?;
    match_grounded(cq, lifted, &groundings, &MatchOptions::default()).map(|(t, _)| t)
}

/// Matching against already grounded parameters.
pub fn match_grounded(
    cq: &ContextualQuery,
    lifted: &LiftedLtl,
    groundings: &[Referent],
    opts: &MatchOptions,
) -> Result<(TemplatedLtl, Vec<MatchWarning>), TemplateError> {
    if !cq.arity_ok() || groundings.len() != cq.params.len() {
        return Err(TemplateError::ArityMismatch {
            descriptor: cq.descriptor,
            expected: cq.descriptor.arity(),
            found: cq.params.len(),
        });
    }
    check_distinct(groundings)?;

    let mut binding = BTreeMap::new();
    let mut folded: BTreeMap<SlotId, Referent> = BTreeMap::new();
    for slot in &lifted.slots {
        match groundings.iter().position(|g| *g == slot.example) {
            Some(index) => {
                binding.insert(slot.id, index);
            }
            None if opts.background.contains(&slot.example) => {
                folded.insert(slot.id, slot.example.clone());
            }
            None => {
                return Err(TemplateError::UnboundSlot {
                    slot: slot.id,
                    referent: slot.example.clone(),
                })
            }
        }
    }

    let mut warnings = Vec::new();
    let used: BTreeSet<usize> = binding.values().copied().collect();
    for (index, token) in cq.params.iter().enumerate() {
        if !used.contains(&index) {
            if opts.diagnostic {
                warnings.push(MatchWarning::UnusedParameter {
                    index,
                    token: token.clone(),
                });
            } else {
                return Err(TemplateError::UnusedParameter {
                    index,
                    token: token.clone(),
                });
            }
        }
    }

    let formula = lifted.formula.map_atoms(&mut |atom: &SlotAtom| {
        Ltl::Atom(SlotAtom {
            function: atom.function,
            args: atom
                .args
                .iter()
                .map(|a| match a {
                    SlotArg::Var(id) => match folded.get(id) {
                        Some(r) => SlotArg::Const(r.clone()),
                        None => SlotArg::Var(*id),
                    },
                    c => c.clone(),
                })
                .collect(),
        })
    });
    let slots = lifted
        .slots
        .iter()
        .filter(|s| !folded.contains_key(&s.id))
        .cloned()
        .collect();
    let template = TemplatedLtl {
        task_class: cq.descriptor,
        lifted: LiftedLtl { formula, slots },
        binding,
    };
    Ok((template, warnings))
}

/// Learns a template from one query and its grounded formula.
pub fn learn_template(
    cq: &ContextualQuery,
    grounded: &LtlFormula,
    reg: &PropRegistry,
    lex: &GroundingLexicon,
) -> Result<TemplatedLtl, TemplateError> {
    let lifted = lift(grounded, reg)?;
    match_parameters(cq, &lifted, lex)
}

/// Grounded formula for `cq`, grounding its parameters through `lex`.
pub fn instantiate(
    t: &TemplatedLtl,
    cq: &ContextualQuery,
    reg: &PropRegistry,
    lex: &GroundingLexicon,
) -> Result<LtlFormula, TemplateError> {
    instantiate_hinted(t, cq, None, reg, lex)
}

/// Like [`instantiate`], passing part-of-speech hints to the grounding.
pub fn instantiate_hinted(
    t: &TemplatedLtl,
    cq: &ContextualQuery,
    hints: Option<&[LexPos]>,
    reg: &PropRegistry,
    lex: &GroundingLexicon,
) -> Result<LtlFormula, TemplateError> {
    check_query(t, cq)?;
    let groundings = ground_params(cq, lex, hints)?;
    instantiate_grounded(t, &groundings, reg)
}

fn check_query(t: &TemplatedLtl, cq: &ContextualQuery) -> Result<(), TemplateError> {
    if cq.descriptor != t.task_class {
        return Err(TemplateError::DescriptorMismatch {
            expected: t.task_class,
            found: cq.descriptor,
        });
    }
    if !cq.arity_ok() {
        return Err(TemplateError::ArityMismatch {
            descriptor: cq.descriptor,
            expected: cq.descriptor.arity(),
            found: cq.params.len(),
        });
    }
    Ok(())
}

/// Substitutes grounded parameters into the template.
pub fn instantiate_grounded(
    t: &TemplatedLtl,
    groundings: &[Referent],
    reg: &PropRegistry,
) -> Result<LtlFormula, TemplateError> {
    if groundings.len() != t.task_class.arity() {
        return Err(TemplateError::ArityMismatch {
            descriptor: t.task_class,
            expected: t.task_class.arity(),
            found: groundings.len(),
        });
    }
    t.lifted.formula.try_map_atoms(&mut |atom: &SlotAtom| {
        let args = atom
            .args
            .iter()
            .map(|a| match a {
                SlotArg::Const(r) => Ok(r.clone()),
                SlotArg::Var(id) => t
                    .binding
                    .get(id)
                    .map(|&i| groundings[i].clone())
                    .ok_or_else(|| {
                        TemplateError::CorruptLibrary(format!("slot v{id} has no binding"))
                    }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let name = reg
            .name_for(atom.function, &args)
            .map_err(lift_grounding_error)?;
        Ok(Ltl::Atom(name))
    })
}

fn sort_fits(slot: Sort, position: Sort) -> bool {
    slot == position
        || (position == Sort::Entity && matches!(slot, Sort::Toy | Sort::Container))
        || (slot == Sort::Entity && matches!(position, Sort::Toy | Sort::Container))
}

fn referent_fits(r: &Referent, sort: Sort) -> bool {
    matches!(
        (sort, r),
        (Sort::Agent, Referent::Agent)
            | (
                Sort::Toy | Sort::Container | Sort::Entity,
                Referent::Object(_)
            )
            | (Sort::Room, Referent::Room(_))
            | (Sort::Color, Referent::Color(_))
            | (Sort::Shape, Referent::Shape(_))
    )
}

impl TemplatedLtl {
    /// Structural checks that do not need a world.
    pub fn validate(&self) -> Result<(), TemplateError> {
        let bad = |m: String| Err(TemplateError::CorruptLibrary(m));
        let arity = self.task_class.arity();
        let mut ids = BTreeSet::new();
        for s in &self.lifted.slots {
            if !ids.insert(s.id) {
                return bad(format!("duplicate slot v{}", s.id));
            }
            if !referent_fits(&s.example, s.sort) {
                return bad(format!(
                    "slot v{} example {} is not a {}",
                    s.id, s.example, s.sort
                ));
            }
            match self.binding.get(&s.id) {
                Some(&i) if i < arity => {}
                Some(&i) => return bad(format!("slot v{} bound to index {i} >= {arity}", s.id)),
                None => return bad(format!("slot v{} is unbound", s.id)),
            }
        }
        if let Some(extra) = self.binding.keys().find(|k| !ids.contains(k)) {
            return bad(format!("binding for unknown slot v{extra}"));
        }
        for atom in self.lifted.formula.leaves() {
            let sig = atom.function.signature();
            if atom.args.len() != sig.len() {
                return bad(format!(
                    "{} has {} arguments",
                    atom.function,
                    atom.args.len()
                ));
            }
            for (arg, pos_sort) in atom.args.iter().zip(sig) {
                match arg {
                    SlotArg::Var(id) => match self.lifted.slot(*id) {
                        Some(s) if sort_fits(s.sort, *pos_sort) => {}
                        Some(s) => {
                            return bad(format!(
                                "slot v{id} of sort {} used as {pos_sort} in {}",
                                s.sort, atom.function
                            ))
                        }
                        None => return bad(format!("{} uses unknown slot v{id}", atom.function)),
                    },
                    SlotArg::Const(r) if !referent_fits(r, *pos_sort) => {
                        return bad(format!("constant {r} used as {pos_sort}"))
                    }
                    SlotArg::Const(_) => {}
                }
            }
        }
        Ok(())
    }
}

/// At most one template per task class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateLibrary {
    templates: BTreeMap<TaskClass, TemplatedLtl>,
}

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    schema_version: u32,
    templates: BTreeMap<TaskClass, StoredTemplate>,
}

#[derive(Serialize, Deserialize)]
struct StoredTemplate {
    formula: Ltl<SlotAtom>,
    slots: Vec<SlotInfo>,
    binding: BTreeMap<SlotId, usize>,
}

impl TemplateLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `t`, returning the template it replaced.
    pub fn insert(&mut self, t: TemplatedLtl) -> Option<TemplatedLtl> {
        self.templates.insert(t.task_class, t)
    }

    pub fn get(&self, class: TaskClass) -> Option<&TemplatedLtl> {
        self.templates.get(&class)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = TaskClass> + '_ {
        self.templates.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TemplatedLtl> {
        self.templates.values()
    }

    pub fn to_json(&self) -> String {
        let file = LibraryFile {
            schema_version: SCHEMA_VERSION,
            templates: self
                .templates
                .iter()
                .map(|(c, t)| {
                    (
                        *c,
                        StoredTemplate {
                            formula: t.lifted.formula.clone(),
                            slots: t.lifted.slots.clone(),
                            binding: t.binding.clone(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("library serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let file: LibraryFile =
            serde_json::from_str(text).map_err(|e| TemplateError::CorruptLibrary(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(TemplateError::CorruptLibrary(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        let mut lib = TemplateLibrary::new();
        for (task_class, stored) in file.templates {
            let t = TemplatedLtl {
                task_class,
                lifted: LiftedLtl {
                    formula: stored.formula,
                    slots: stored.slots,
                },
                binding: stored.binding,
            };
            t.validate()?;
            lib.insert(t);
        }
        Ok(lib)
    }
}

pub fn save_library(lib: &TemplateLibrary, path: impl AsRef<Path>) -> Result<(), TemplateError> {
    std::fs::write(path, lib.to_json())?;
    Ok(())
}

pub fn load_library(path: impl AsRef<Path>) -> Result<TemplateLibrary, TemplateError> {
    TemplateLibrary::from_json(&std::fs::read_to_string(path)?)
}
