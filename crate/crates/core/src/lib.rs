//! Grounding natural-language robot commands to linear temporal logic
//! through contextual queries and templated LTL, with planning in a
//! discrete object-oriented MDP.

pub mod bundled;
pub mod cli;
pub mod corpus;
pub mod frontend;
pub mod grounding;
pub mod ltl;
pub mod pipeline;
pub mod planner;
pub mod service;
pub mod template;
pub mod vocab;
pub mod world;
