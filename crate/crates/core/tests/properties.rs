//! Property tests: kinematics, state encodings, softmax, AUC and episodes.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semff::agent::{nrpe, select_action, skip_encoding, Action, Kinematics, SelectMode};
use semff::nn::softmax;
use semff::rl::discounted_returns;

mod support;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn kinematics_stay_in_bounds(target in 1usize..=25, actions in prop::collection::vec(0usize..3, 1..60)) {
        let mut k = Kinematics::initial(target, 25, 5).unwrap();
        for a in actions {
            k = k.apply(Action::from_index(a).unwrap());
            prop_assert!((1..=25).contains(&k.nu));
            prop_assert!((1..=5).contains(&k.omega));
        }
    }
}

proptest! {
    #[test]
    fn nrpe_is_bounded(num_frames in 1usize..5000, frac in 0.0f64..1.0, half_q in 1usize..80) {
        let f = 1 + ((num_frames - 1) as f64 * frac) as usize;
        let e = nrpe(f, num_frames, 2 * half_q).unwrap();
        prop_assert_eq!(e.len(), 2 * half_q);
        prop_assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn skip_encoding_is_one_hot(avg in 1.0f64..200.0, target in 1usize..=25) {
        let e = skip_encoding(avg, target, 25).unwrap();
        prop_assert_eq!(e.len(), 50);
        prop_assert_eq!(e.iter().filter(|&&v| v == 1.0).count(), 1);
        prop_assert_eq!(e.iter().filter(|&&v| v == 0.0).count(), 49);
        let raw = avg.floor() as i64 - target as i64 + 25;
        let idx = e.iter().position(|&v| v == 1.0).unwrap() as i64 + 1;
        prop_assert_eq!(idx, raw.clamp(1, 50));
    }

    #[test]
    fn softmax_is_shift_invariant(logits in prop::collection::vec(-30.0f64..30.0, 3), shift in -100.0f64..100.0, scale in 0.01f64..50.0) {
        let p = softmax(&logits);
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let q = softmax(&shifted);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scaled: Vec<f64> = logits.iter().map(|l| l * scale).collect();
        let a = select_action(&p, SelectMode::Greedy, &mut rng).unwrap();
        let b = select_action(&softmax(&scaled), SelectMode::Greedy, &mut rng).unwrap();
        // rescaling can only merge near-ties through rounding
        let sorted = { let mut s = logits.clone(); s.sort_by(|x, y| y.total_cmp(x)); s };
        if sorted[0] - sorted[1] > 1e-9 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn discounted_return_recurrence(rewards in prop::collection::vec(-5.0f64..5.0, 1..300), gamma in 0.01f64..=1.0) {
        let r = discounted_returns(&rewards, gamma).unwrap();
        let t = rewards.len() - 1;
        prop_assert_eq!(r[t], rewards[t]);
        for i in 0..t {
            prop_assert!((r[i] - (rewards[i] + gamma * r[i + 1])).abs() <= 1e-12);
        }
    }
}

#[test]
fn nrpe_is_injective_over_a_long_video() {
    support::episodes::nrpe_is_injective_over_a_long_video();
}

#[test]
fn auc_matches_pair_counting() {
    support::episodes::auc_matches_pair_counting();
}

#[test]
fn random_rollouts_keep_episode_invariants() {
    support::episodes::random_rollouts_keep_episode_invariants();
}
