pub mod adl;
pub mod flat;
pub mod revision;
pub mod schema;
pub mod corpus;
pub mod resolution;
pub mod codec;
pub mod registry;
pub mod bench;
