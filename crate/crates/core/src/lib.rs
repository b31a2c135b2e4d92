pub mod config;
pub mod corpus;
pub mod evaluator;
pub mod lang;
pub mod orchestrator;
pub mod policy;
pub mod pools;
pub mod rlmath;
pub mod sandbox;
pub mod testspec;
pub mod transpiler;

pub use lang::{LanguageId, LanguageSet};
