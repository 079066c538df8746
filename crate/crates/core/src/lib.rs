pub mod alloc;
pub mod cli;
pub mod edge;
pub mod popularity;
pub mod harness;
pub mod stream;
