//! Policy learning for the fast-forwarding agent.

pub mod loss;
pub mod train;

pub use loss::{discounted_returns, policy_loss, value_loss, PolicyLoss, ValueLoss};
pub use train::{
    train_agent, update_from_episode, AgentEpochRecord, AgentTrainConfig, Optimizers, TrainedAgent, UpdateStats,
};
