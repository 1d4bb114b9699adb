//! The skip-aware fast-forwarding agent: kinematics, state encodings and
//! the policy/value networks.

pub mod kinematics;
pub mod nets;
pub mod state;

pub use kinematics::{Action, Kinematics, NU_MAX, OMEGA_MAX};
pub use nets::{select_action, Agent, AgentConfig, SelectMode};
pub use state::{nrpe, skip_encoding, skip_index, AgentState, StateLayout};
