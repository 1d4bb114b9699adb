//! Finite-difference checks, ten random instances per component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semff::nn::{
    check_gradients, check_input_gradient, dot, l2_normalize, l2_normalize_backward, norm, Activation, AttentionPool,
    BatchNorm, BiGru, Dense, GradCheckConfig, GruCell, Matrix, Mlp, NormMode, Parameters,
};
use semff::rl::{policy_loss, value_loss};
use semff::vdan::{ClipFeatures, Document, EncoderConfig, FeatureSource, Label, TrainingPair, Vdan, Vocabulary};

const INSTANCES: u64 = 10;

fn vec_in<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn assert_close(what: &str, seed: u64, err: f64) {
    let tol = GradCheckConfig::default().tolerance;
    assert!(err < tol, "{what}, instance {seed}: max relative error {err:e} >= {tol:e}");
}

pub fn dense_layers() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let act = [Activation::Tanh, Activation::Linear, Activation::Softmax][seed as usize % 3];
        let layer = Dense::new("d", 5, 4, act, &mut rng);
        // non-zero bias so the check also covers it
        let mut layer = layer;
        layer.bias = Matrix::column(vec_in(4, &mut rng));
        let x = vec_in(5, &mut rng);
        let c = vec_in(4, &mut rng);
        let (_, cache) = layer.forward(&x).unwrap();
        let mut grads = layer.zeros_like();
        let dx = layer.backward(&cache, &c, &mut grads).unwrap();
        let report = check_gradients(&layer, &grads, |m| dot(&m.apply(&x).unwrap(), &c), &cfg);
        assert_close("dense parameters", seed, report.max_rel_error);
        let e = check_input_gradient(&x, &dx, |x| dot(&layer.apply(x).unwrap(), &c), &cfg);
        assert_close("dense input", seed, e);
    }
}

pub fn recurrent_cells() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let cell = GruCell::new(3, 4, &mut rng);
        let len = 2 + seed as usize % 4;
        let xs: Vec<Vec<f64>> = (0..len).map(|_| vec_in(3, &mut rng)).collect();
        let h0 = vec_in(4, &mut rng);
        let cs: Vec<Vec<f64>> = (0..len).map(|_| vec_in(4, &mut rng)).collect();
        let loss = |m: &GruCell, xs: &[Vec<f64>], h0: &[f64]| {
            let (hs, _) = m.forward_seq(xs, h0).unwrap();
            hs.iter().zip(&cs).map(|(h, c)| dot(h, c)).sum::<f64>()
        };
        let (_, cache) = cell.forward_seq(&xs, &h0).unwrap();
        let mut grads = cell.zeros_like();
        let (dxs, dh0) = cell.backward_seq(&cache, &cs, &mut grads).unwrap();
        let report = check_gradients(&cell, &grads, |m| loss(m, &xs, &h0), &cfg);
        assert_close("gru parameters", seed, report.max_rel_error);
        let e = check_input_gradient(&h0, &dh0, |h| loss(&cell, &xs, h), &cfg);
        assert_close("gru initial state", seed, e);
        let flat: Vec<f64> = xs.concat();
        let dflat: Vec<f64> = dxs.concat();
        let unflat = |v: &[f64]| v.chunks(3).map(|c| c.to_vec()).collect::<Vec<_>>();
        let e = check_input_gradient(&flat, &dflat, |v| loss(&cell, &unflat(v), &h0), &cfg);
        assert_close("gru inputs", seed, e);

        let bi = BiGru::new(3, 2, &mut rng);
        let hb = vec_in(2, &mut rng);
        let cb: Vec<Vec<f64>> = (0..len).map(|_| vec_in(4, &mut rng)).collect();
        let bloss = |m: &BiGru| {
            let (hs, _) = m.forward(&xs, &hb, &hb).unwrap();
            hs.iter().zip(&cb).map(|(h, c)| dot(h, c)).sum::<f64>()
        };
        let (_, cache) = bi.forward(&xs, &hb, &hb).unwrap();
        let mut grads = bi.zeros_like();
        bi.backward(&cache, &cb, &mut grads).unwrap();
        let report = check_gradients(&bi, &grads, bloss, &cfg);
        assert_close("bidirectional gru parameters", seed, report.max_rel_error);
    }
}

pub fn attention_pool() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let pool = AttentionPool::new(4, 3, &mut rng);
        let len = 1 + seed as usize % 5;
        let hs: Vec<Vec<f64>> = (0..len).map(|_| vec_in(4, &mut rng)).collect();
        let c = vec_in(4, &mut rng);
        let loss = |m: &AttentionPool, hs: &[Vec<f64>]| dot(&m.forward(hs).unwrap().0, &c);
        let (_, _, cache) = pool.forward(&hs).unwrap();
        let mut grads = pool.zeros_like();
        let dh = pool.backward(&cache, &c, &mut grads).unwrap();
        let report = check_gradients(&pool, &grads, |m| loss(m, &hs), &cfg);
        assert_close("attention parameters", seed, report.max_rel_error);
        let flat = hs.concat();
        let unflat = |v: &[f64]| v.chunks(4).map(|c| c.to_vec()).collect::<Vec<_>>();
        let e = check_input_gradient(&flat, &dh.concat(), |v| loss(&pool, &unflat(v)), &cfg);
        assert_close("attention inputs", seed, e);
    }
}

pub fn batch_and_l2_normalization() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let mut bn = BatchNorm::new(5);
        bn.gamma = Matrix::column((0..5).map(|_| rng.random_range(0.5..1.5)).collect());
        bn.beta = Matrix::column(vec_in(5, &mut rng));
        let batch: Vec<Vec<f64>> = (0..3 + seed as usize % 3).map(|_| vec_in(5, &mut rng)).collect();
        let cs: Vec<Vec<f64>> = batch.iter().map(|_| vec_in(5, &mut rng)).collect();
        let loss = |m: &BatchNorm, batch: &[Vec<f64>]| {
            let (ys, _) = m.forward_batch_frozen(batch, NormMode::Train).unwrap();
            ys.iter()
                .zip(&cs)
                .map(|(y, c)| dot(&l2_normalize(y).unwrap(), c))
                .sum::<f64>()
        };
        let (ys, cache) = bn.forward_batch_frozen(&batch, NormMode::Train).unwrap();
        let d_out: Vec<Vec<f64>> = ys
            .iter()
            .zip(&cs)
            .map(|(y, c)| l2_normalize_backward(&l2_normalize(y).unwrap(), norm(y), c))
            .collect();
        let mut grads = bn.zeros_like();
        let dx = bn.backward_batch(&cache, &d_out, &mut grads).unwrap();
        let report = check_gradients(&bn, &grads, |m| loss(m, &batch), &cfg);
        assert_close("batch norm parameters", seed, report.max_rel_error);
        let unflat = |v: &[f64]| v.chunks(5).map(|c| c.to_vec()).collect::<Vec<_>>();
        let e = check_input_gradient(&batch.concat(), &dx.concat(), |v| loss(&bn, &unflat(v)), &cfg);
        assert_close("batch norm inputs", seed, e);
    }
}

fn tiny_encoder(seed: u64) -> (Vdan, Vec<TrainingPair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = ["stir", "the", "soup", "add", "salt", "now", "chop", "onions"];
    let vocab = Vocabulary::new(words.iter().map(|w| w.to_string()), 6, &mut rng);
    let config = EncoderConfig {
        word_dim: 6,
        sentence_hidden: 3,
        feature_dim: 8,
        document_hidden: 8,
        word_attention: 4,
        sentence_attention: 4,
        projection_hidden: 6,
        embed_dim: 4,
        max_sentence_words: 20,
    };
    let model = Vdan::new(config, vocab, &mut rng).unwrap();
    let docs = [
        ["stir the soup", "add salt now"],
        ["chop onions", "stir the pot now"],
        ["add the onions", "salt"],
    ];
    let pairs = docs
        .iter()
        .enumerate()
        .map(|(i, d)| TrainingPair {
            document: Document::from_sentences(d, 20).unwrap(),
            clip: ClipFeatures::new(vec_in(8, &mut rng), FeatureSource::Synthetic).unwrap(),
            label: if (i as u64 + seed) % 2 == 0 { Label::Positive } else { Label::Negative },
            target: i,
            caption_sources: vec![i],
        })
        .collect();
    (model, pairs)
}

pub fn full_encoder_loss() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let (model, pairs) = tiny_encoder(400 + seed);
        let out = model.batch_objective(&pairs, 0.0, NormMode::Train).unwrap();
        let report = check_gradients(
            &model,
            &out.grads,
            |m| m.batch_objective(&pairs, 0.0, NormMode::Train).unwrap().loss,
            &cfg,
        );
        let worst = report.worst().map(|t| t.name.clone()).unwrap_or_default();
        assert_close(&format!("encoder loss (worst tensor {worst})"), seed, report.max_rel_error);
    }
}

fn random_states<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec_in(dim, rng)).collect()
}

pub fn policy_loss_with_entropy() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let net = Mlp::new("p", &[6, 8, 3], Activation::Relu, Activation::Linear, &mut rng);
        let states = random_states(5, 6, &mut rng);
        let actions: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
        let adv = vec_in(5, &mut rng).iter().map(|a| 3.0 * a).collect::<Vec<_>>();
        let beta = [0.0, 0.01, 0.5][seed as usize % 3];
        let out = policy_loss(&net, &states, &actions, &adv, beta).unwrap();
        let report = check_gradients(
            &net,
            &out.grads,
            |m| policy_loss(m, &states, &actions, &adv, beta).unwrap().loss,
            &cfg,
        );
        assert_close("policy loss", seed, report.max_rel_error);
    }
}

pub fn value_regression_loss() {
    let cfg = GradCheckConfig::default();
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let net = Mlp::new("v", &[6, 8, 1], Activation::Relu, Activation::Linear, &mut rng);
        let states = random_states(5, 6, &mut rng);
        let returns = vec_in(5, &mut rng).iter().map(|r| 10.0 * r).collect::<Vec<_>>();
        let out = value_loss(&net, &states, &returns).unwrap();
        let report = check_gradients(&net, &out.grads, |m| value_loss(m, &states, &returns).unwrap().loss, &cfg);
        assert_close("value loss", seed, report.max_rel_error);
    }
}
