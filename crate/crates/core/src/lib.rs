//! Metropolis-Hastings inference over relational models with unknown
//! objects, using partial worlds and abstract object identifiers.

pub mod citebench;
pub mod engine;
pub mod proposers;
pub mod selftest;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod value;
pub mod world;
