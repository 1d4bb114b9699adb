//! Check bodies shared by the integration tests and the acceptance runner.
//! Each check panics with a description on failure.
#![allow(dead_code)]

pub mod bandit;
pub mod episodes;
pub mod gradients;
pub mod oracles;
pub mod pipeline;
