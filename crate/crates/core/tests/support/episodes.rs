//! Seeded loop checks shared by the property tests and acceptance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semff::agent::{nrpe, Action, Agent, AgentConfig, Kinematics};
use semff::env::{rollout, ClipSource, RolloutConfig, VideoEmbeddings, VideoSpec};
use semff::eval::roc_auc;
use semff::nn::{Matrix, Parameters};
use semff::rl::discounted_returns;
use semff::vdan::{Document, EncoderConfig, Vdan, Vocabulary};

pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice, mut p, mut n) = (0u128, 0u128, 0u128);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            n += 1;
            continue;
        }
        p += 1;
        for (j, &sj) in scores.iter().enumerate() {
            if !labels[j] {
                twice += if si > sj { 2 } else if si == sj { 1 } else { 0 };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

/// Ten thousand random action sequences from random initial targets.
pub fn kinematics_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let mut k = Kinematics::initial(rng.random_range(1..=25), 25, 5).unwrap();
        for _ in 0..rng.random_range(1..200) {
            k = k.apply(Action::from_index(rng.random_range(0..3)).unwrap());
            assert!((1..=25).contains(&k.nu) && (1..=5).contains(&k.omega), "left bounds: {k:?}");
        }
    }
}

pub fn return_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(1..500);
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * 50.0).collect();
        let gamma = rng.random_range(0.5..=1.0);
        let r = discounted_returns(&rewards, gamma).unwrap();
        assert_eq!(r[n - 1], rewards[n - 1]);
        for t in 0..n - 1 {
            assert!((r[t] - (rewards[t] + gamma * r[t + 1])).abs() <= 1e-12);
        }
    }
}

pub fn nrpe_is_injective_over_a_long_video() {
    let n = 1000;
    let codes: Vec<Vec<f64>> = (1..=n).map(|f| nrpe(f, n, 128).unwrap()).collect();
    let mut min_d2 = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = codes[i].iter().zip(&codes[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            min_d2 = min_d2.min(d2);
        }
    }
    assert!(min_d2 > 1e-12, "two frames share an encoding (min squared distance {min_d2:e})");
}

pub fn auc_matches_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for inst in 0..100 {
        let n = rng.random_range(2..=1000);
        // coarse scores on some instances to exercise ties
        let levels = if inst % 3 == 0 { 7 } else { 1_000_000 };
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        assert_eq!(roc_auc(&scores, &labels).unwrap(), brute_force_auc(&scores, &labels), "instance {inst}");
    }
}

fn tiny_encoder(rng: &mut ChaCha8Rng) -> Vdan {
    let words = ["crack", "eggs", "whisk", "pour", "pan", "flip"];
    let vocab = Vocabulary::new(words.iter().map(|w| w.to_string()), 5, rng);
    let config = EncoderConfig {
        word_dim: 5,
        sentence_hidden: 3,
        feature_dim: 6,
        document_hidden: 6,
        word_attention: 3,
        sentence_attention: 3,
        projection_hidden: 5,
        embed_dim: 4,
        max_sentence_words: 20,
    };
    let mut enc = Vdan::new(config, vocab, rng).unwrap();
    // an untrained head can map a clip to exactly zero; a nonzero
    // normalization shift keeps every embedding well defined
    enc.visit_mut("", &mut |name, m, _| {
        if name.ends_with("beta") {
            for v in m.as_mut_slice() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
    });
    enc
}

fn random_video(id: usize, rng: &mut ChaCha8Rng) -> VideoSpec {
    let frames = rng.random_range(1..=400);
    let data: Vec<f64> = (0..frames * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
    VideoSpec::new(
        format!("v{id}"),
        ClipSource::Precomputed(Matrix::from_vec(frames, 6, data).unwrap()),
        Vec::new(),
        Document::from_sentences(&["crack the eggs", "whisk and pour"], 20).unwrap(),
    )
    .unwrap()
}

pub fn random_rollouts_keep_episode_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let encoder = tiny_encoder(&mut rng);
    let config = AgentConfig {
        embed_dim: 4,
        position_dim: 8,
        hidden: vec![16],
        ..AgentConfig::default()
    };
    for i in 0..100 {
        let mut agent = Agent::new(config.clone(), &mut rng).unwrap();
        let scale = rng.random_range(0.0..3.0);
        agent.visit_mut("", &mut |_, m, _| {
            for v in m.as_mut_slice() {
                *v += scale * rng.random_range(-1.0..1.0);
            }
        });
        let video = random_video(i, &mut rng);
        let cache = VideoEmbeddings::new(&video, &encoder).unwrap();
        let target = rng.random_range(1..=25);
        let rc = if i % 2 == 0 {
            RolloutConfig::sample(target)
        } else {
            RolloutConfig::greedy(target)
        };
        let tr = rollout(&cache, &agent, &rc, &mut rng).unwrap();
        let n = video.num_frames();
        assert_eq!(tr.selected_frames[0], 1);
        assert!(tr.selected_frames.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 25));
        assert!(*tr.selected_frames.last().unwrap() <= n);
        assert_eq!(tr.rewards.len(), tr.len());
        assert_eq!(tr.actions.len(), tr.len());
        let (last, body) = tr.rewards.split_last().unwrap();
        assert!(body.iter().all(|r| (-1.0..=1.0).contains(r)));
        assert!(*last > 0.0 && *last <= tr.lambda, "terminal reward {last} outside (0, {}]", tr.lambda);
        assert!(tr.selected_frames.last().unwrap() + tr.skips.last().unwrap() > n);
        assert_eq!(tr.terminal_speedup, n as f64 / tr.len() as f64);
        assert!(tr.log_probs.iter().all(|l| l.is_finite() && *l <= 0.0));
        let r = discounted_returns(&tr.rewards, 0.99).unwrap();
        for t in 0..tr.len() - 1 {
            assert!((r[t] - (tr.rewards[t] + 0.99 * r[t + 1])).abs() <= 1e-12);
        }
    }
}
