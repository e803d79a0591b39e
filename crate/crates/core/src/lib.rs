pub mod dataset;
pub mod error;
pub mod rng;
pub mod sampling_tree;
pub mod seeding1d;
pub mod baseline;
pub mod projection;
pub mod coreset;
pub mod pipeline;
pub mod cli;
