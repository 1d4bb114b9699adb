//! One-step bandit: a fixed state where only Accelerate is rewarded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semff::agent::{select_action, Action, Agent, AgentConfig, SelectMode};
use semff::rl::{update_from_episode, AgentTrainConfig, Optimizers};

/// Runs up to `max_updates` single-step episodes and returns
/// `(updates until pi(Accelerate) > 0.9, final distribution)`; the first
/// entry is `None` if the threshold was never crossed.
pub fn run(beta: f64, max_updates: usize, seed: u64) -> (Option<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = Agent::new(AgentConfig::default(), &mut rng).unwrap();
    let state: Vec<f64> = (0..agent.state_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let config = AgentTrainConfig {
        beta,
        ..AgentTrainConfig::default()
    };
    let mut opt = Optimizers::new(&config);
    let mut hit = None;
    for step in 1..=max_updates {
        let dist = agent.policy_probs(&state).unwrap();
        let a = select_action(&dist, SelectMode::Sample, &mut rng).unwrap();
        let r = if a == Action::Accelerate { 1.0 } else { 0.0 };
        update_from_episode(&mut agent, &mut opt, &[state.clone()], &[a.index()], &[r], &config).unwrap();
        if hit.is_none() && agent.policy_probs(&state).unwrap()[Action::Accelerate.index()] > 0.9 {
            hit = Some(step);
        }
    }
    (hit, agent.policy_probs(&state).unwrap())
}
