//! Natural language to grounded LTL, end to end, with every failure
//! reported as a named kind.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{extract, ContextualQuery, FrontendError, TaggerOptions, TaskClass};
use crate::grounding::{GroundingError, GroundingLexicon, LexPos, PropRegistry};
use crate::ltl::{LtlError, LtlFormula};
use crate::planner::PlanError;
use crate::template::{instantiate_hinted, TemplateError, TemplateLibrary};
use crate::world::WorldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Pass the tagger's part of speech to grounding.
    pub pos_disambiguation: bool,
    /// Tag "pickup" as a noun.
    pub tagger_fault: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            pos_disambiguation: true,
            tagger_fault: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("no template for task class {0}")]
    MissingTemplate(TaskClass),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

fn world_kind(e: &WorldError) -> &'static str {
    match e {
        WorldError::InvalidConfig(_) => "InvalidConfig",
        WorldError::InvalidState(_) => "InvalidState",
        WorldError::UnknownEntity(_) => "UnknownEntity",
        WorldError::ArityMismatch { .. } => "ArityMismatch",
        WorldError::SortMismatch { .. } => "SortMismatch",
        WorldError::StateExplosion { .. } => "StateExplosion",
        WorldError::Io(_) => "Io",
        WorldError::Json(_) => "Json",
    }
}

fn grounding_kind(e: &GroundingError) -> &'static str {
    match e {
        GroundingError::UnknownToken(_) => "UnknownToken",
        GroundingError::AmbiguousGrounding { .. } => "AmbiguousGrounding",
        GroundingError::DuplicateEntry { .. } => "DuplicateEntry",
        GroundingError::UnknownReferent(_) => "UnknownReferent",
        GroundingError::NameCollision { .. } => "NameCollision",
        GroundingError::InvalidName(_) => "InvalidName",
        GroundingError::Arity { .. } => "ArityMismatch",
        GroundingError::UnresolvableAP(_) => "UnresolvableAP",
        GroundingError::World(w) => world_kind(w),
        GroundingError::Io(_) => "Io",
        GroundingError::Json(_) => "Json",
    }
}

impl PipelineError {
    /// Stable name of the failure, used in metrics and over HTTP.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Frontend(FrontendError::UnclassifiableUtterance(_)) => {
                "UnclassifiableUtterance"
            }
            PipelineError::Frontend(FrontendError::ArityMismatch { .. }) => "ArityMismatch",
            PipelineError::Template(t) => match t {
                TemplateError::Grounding(g) => grounding_kind(g),
                TemplateError::NonDistinctGroundings { .. } => "NonDistinctGroundings",
                TemplateError::UnboundSlot { .. } => "UnboundSlot",
                TemplateError::UnusedParameter { .. } => "UnusedParameter",
                TemplateError::DescriptorMismatch { .. } => "DescriptorMismatch",
                TemplateError::ArityMismatch { .. } => "ArityMismatch",
                TemplateError::SortMismatch(_) => "SortMismatch",
                TemplateError::CorruptLibrary(_) => "CorruptLibrary",
                TemplateError::Io(_) => "Io",
            },
            PipelineError::MissingTemplate(_) => "MissingTemplate",
            PipelineError::Ltl(_) => "LtlSyntax",
            PipelineError::Plan(p) => match p {
                PlanError::World(w) => world_kind(w),
                PlanError::Grounding(g) => grounding_kind(g),
                PlanError::StateExplosion { .. } => "StateExplosion",
                PlanError::HorizonExceeded { .. } => "HorizonExceeded",
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            kind: self.kind().to_string(),
            detail: self.to_string(),
        }
    }
}

/// `{kind, detail}` as reported to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub detail: String,
}

/// How far a command got. `cq` is kept when grounding fails afterwards.
#[derive(Debug)]
pub struct CommandOutcome {
    pub cq: Option<ContextualQuery>,
    pub param_pos: Vec<LexPos>,
    pub ltl: Option<LtlFormula>,
    pub error: Option<PipelineError>,
}

/// Extracts the contextual query of `text` and instantiates its template.
pub fn ground_command(
    text: &str,
    library: &TemplateLibrary,
    lex: &GroundingLexicon,
    reg: &PropRegistry,
    opts: PipelineOptions,
) -> CommandOutcome {
    let tagger = TaggerOptions {
        pickup_as_noun: opts.tagger_fault,
    };
    let ex = match extract(text, lex, tagger) {
        Ok(ex) => ex,
        Err(e) => {
            return CommandOutcome {
                cq: None,
                param_pos: Vec::new(),
                ltl: None,
                error: Some(e.into()),
            }
        }
    };
    let result = match library.get(ex.cq.descriptor) {
        None => Err(PipelineError::MissingTemplate(ex.cq.descriptor)),
        Some(t) => {
            let hints = opts.pos_disambiguation.then_some(ex.param_pos.as_slice());
            instantiate_hinted(t, &ex.cq, hints, reg, lex).map_err(PipelineError::from)
        }
    };
    let (ltl, error) = match result {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    CommandOutcome {
        cq: Some(ex.cq),
        param_pos: ex.param_pos,
        ltl,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_stable() {
        let e = PipelineError::MissingTemplate(TaskClass::Ship);
        assert_eq!(e.kind(), "MissingTemplate");
        assert_eq!(e.body().detail, "no template for task class ship");
        let e: PipelineError = TemplateError::Grounding(GroundingError::AmbiguousGrounding {
            token: "orange".into(),
            candidates: vec![],
        })
        .into();
        assert_eq!(e.kind(), "AmbiguousGrounding");
        let e: PipelineError = FrontendError::ArityMismatch {
            descriptor: TaskClass::Pickup,
            expected: 1,
            found: vec![],
        }
        .into();
        assert_eq!(e.kind(), "ArityMismatch");
    }
}
