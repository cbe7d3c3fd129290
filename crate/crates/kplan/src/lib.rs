pub mod ast;
pub mod corpus;
pub mod datalog;
pub mod ground;
pub mod kparse;
pub mod par;
pub mod plan;
pub mod reductions;
pub mod secure;
pub mod transition;
