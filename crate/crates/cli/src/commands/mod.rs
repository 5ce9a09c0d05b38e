pub mod augment;
pub mod corpus;
pub mod extract;
pub mod forward;
pub mod fuse;
pub mod models;
pub mod pipeline;
