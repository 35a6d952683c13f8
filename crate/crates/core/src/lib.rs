pub mod cli;
pub mod corpus;
pub mod edit_tree;
pub mod error;
pub mod evalbench;
pub mod lookup;
pub mod pipeline;
pub mod rules;
pub mod selector;
