use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::net::{Gradients, InferenceNet, NetConfig};
use super::Vocab;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng;

/// One training pair: utterance tokens, raw trajectory counts, and the
/// reward weights the network should predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetExample {
    pub tokens: Vec<String>,
    pub counts: FeatureVector,
    pub target: FeatureVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Tokens seen fewer times in the training split map to UNK.
    pub min_count: usize,
    /// Consecutive epochs of rising validation loss tolerated before stopping.
    pub patience: usize,
    pub net: NetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.005, weight_decay: 1e-4, max_epochs: 100, min_count: 1, patience: 1, net: NetConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub net: InferenceNet,
    /// Mean loss over the training split; index 0 is before any update.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

/// Plain SGD. Weight decay applies to weights and embeddings, not biases.
pub fn sgd_step(net: &mut InferenceNet, g: &Gradients, lr: f64, weight_decay: f64) {
    let shrink = |p: &mut Vec<f64>, grad: &[f64]| {
        for (x, gx) in p.iter_mut().zip(grad) {
            *x -= lr * (gx + weight_decay * *x);
        }
    };
    shrink(&mut net.w1, &g.w1);
    shrink(&mut net.w2, &g.w2);
    for (x, gx) in net.b1.iter_mut().zip(&g.b1) {
        *x -= lr * gx;
    }
    for (x, gx) in net.b2.iter_mut().zip(&g.b2) {
        *x -= lr * gx;
    }
    if weight_decay != 0.0 {
        let f = 1.0 - lr * weight_decay;
        net.embedding.iter_mut().for_each(|x| *x *= f);
    }
    let d = net.config.embed_dim;
    for (t, row) in &g.embedding {
        for (x, gx) in net.embedding[*t as usize * d..(*t as usize + 1) * d].iter_mut().zip(row) {
            *x -= lr * gx;
        }
    }
}

fn encode(net: &InferenceNet, data: &[NetExample]) -> Vec<Vec<u32>> {
    data.iter().map(|e| net.vocab.ids(&e.tokens)).collect()
}

fn mean_loss(net: &InferenceNet, data: &[NetExample], ids: &[Vec<u32>]) -> f64 {
    data.iter().zip(ids).map(|(e, i)| net.loss(i, &e.counts, &e.target)).sum::<f64>() / data.len() as f64
}

/// Trains one fold until validation loss has risen for `patience`
/// consecutive epochs, and returns the parameters with the lowest
/// validation loss.
pub fn train_fold(
    train: &[NetExample],
    val: &[NetExample],
    cfg: &TrainConfig,
    seed: u64,
    fold_id: u32,
) -> Result<TrainReport> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Training(format!(
            "fold {fold_id} has {} training and {} validation examples",
            train.len(),
            val.len()
        )));
    }
    let vocab = Vocab::build(train.iter().map(|e| e.tokens.as_slice()), cfg.min_count);
    let mut net = InferenceNet::init(vocab, cfg.net, &mut rng::stream(seed, &[u64::from(fold_id), 0]));
    net.fold_id = Some(fold_id);
    let train_ids = encode(&net, train);
    let val_ids = encode(&net, val);
    let mut train_loss = vec![mean_loss(&net, train, &train_ids)];
    let mut val_loss = vec![mean_loss(&net, val, &val_ids)];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = net.clone();
    let mut best_epoch = 0;
    let mut rising = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng::stream(seed, &[u64::from(fold_id), epoch as u64]));
        for &i in &order {
            let (_, g) = net.loss_and_gradients(&train_ids[i], &train[i].counts, &train[i].target);
            sgd_step(&mut net, &g, cfg.learning_rate, cfg.weight_decay);
        }
        let v = mean_loss(&net, val, &val_ids);
        if !v.is_finite() {
            return Err(Error::Training(format!("fold {fold_id} diverged at epoch {epoch}")));
        }
        train_loss.push(mean_loss(&net, train, &train_ids));
        val_loss.push(v);
        if v > val_loss[epoch - 1] {
            rising += 1;
            if rising >= cfg.patience.max(1) {
                tracing::debug!(fold_id, epoch, "validation loss rose, stopping");
                break;
            }
        } else {
            rising = 0;
        }
        if v <= val_loss[best_epoch] {
            best = net.clone();
            best_epoch = epoch;
        }
    }
    let net = best;
    Ok(TrainReport { net, train_loss, val_loss, best_epoch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::templates;
    use crate::neural::tokenize;
    use crate::world::{ObjectClass, RewardFunction};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GOOD: &[&str] = &["good", "great", "the best", "valuable"];
    const BAD: &[&str] = &["bad", "terrible", "the worst", "worthless"];

    // Descriptive sentences naming one class, paired with the true weights
    // of a random reward function. Returns the mentioned class too.
    fn synthetic(n: usize, seed: u64) -> Vec<(NetExample, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = crate::world::CellTable::default();
        (0..n)
            .map(|_| {
                let rf = RewardFunction::from_id(rng.random_range(0..36)).unwrap();
                let w = rf.true_weights(&table);
                let k = loop {
                    let k = rng.random_range(0..9);
                    if w[k] != 0.0 {
                        break k;
                    }
                };
                let c = ObjectClass::from_index(k);
                let adj = if w[k] > 0.0 { GOOD[rng.random_range(0..4)] } else { BAD[rng.random_range(0..4)] };
                let text = format!(
                    "{} {} are {}",
                    templates::color_word(&mut rng, c.color),
                    templates::shape_word(&mut rng, c.shape),
                    adj
                );
                let counts = FeatureVector(std::array::from_fn(|_| rng.random_range(0..3) as f64));
                (NetExample { tokens: tokenize(&text), counts, target: w }, k)
            })
            .collect()
    }

    fn split(data: &[(NetExample, usize)]) -> Vec<NetExample> {
        data.iter().map(|(e, _)| e.clone()).collect()
    }

    #[test]
    fn first_epoch_reduces_loss_and_is_deterministic() {
        let data = split(&synthetic(300, 1));
        let cfg = TrainConfig { max_epochs: 1, ..TrainConfig::default() };
        let a = train_fold(&data[..250], &data[250..], &cfg, 5, 0).unwrap();
        assert!(a.train_loss[1] < a.train_loss[0]);
        let b = train_fold(&data[..250], &data[250..], &cfg, 5, 0).unwrap();
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let data = split(&synthetic(40, 2));
        let zero = TrainConfig { learning_rate: 0.0, max_epochs: 2, ..TrainConfig::default() };
        let none = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let a = train_fold(&data[..30], &data[30..], &zero, 3, 1).unwrap();
        let b = train_fold(&data[..30], &data[30..], &none, 3, 1).unwrap();
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn empty_fold_is_an_error() {
        let data = split(&synthetic(10, 2));
        assert!(matches!(train_fold(&data, &[], &TrainConfig::default(), 0, 0), Err(Error::Training(_))));
    }

    #[test]
    fn early_stopping_returns_the_better_model() {
        let data = split(&synthetic(400, 4));
        let r = train_fold(&data[..300], &data[300..], &TrainConfig::default(), 9, 2).unwrap();
        let best = r.val_loss[r.best_epoch];
        if r.best_epoch + 1 < r.val_loss.len() {
            assert!(best <= r.val_loss[r.best_epoch + 1]);
        }
        let ids: Vec<Vec<u32>> = data[300..].iter().map(|e| r.net.vocab.ids(&e.tokens)).collect();
        assert_eq!(mean_loss(&r.net, &data[300..], &ids), best);
    }

    #[test]
    fn learns_signs_of_mentioned_classes() {
        let data = synthetic(2400, 6);
        let train = split(&data[..1800]);
        let val = split(&data[1800..2100]);
        let r = train_fold(&train, &val, &TrainConfig::default(), 11, 0).unwrap();
        let held = &data[2100..];
        let correct = held
            .iter()
            .filter(|(e, k)| {
                let out = r.net.forward(&e.tokens, &e.counts);
                out[*k].signum() == e.target[*k].signum()
            })
            .count();
        let acc = correct as f64 / held.len() as f64;
        assert!(acc >= 0.8, "sign accuracy {acc}");
    }
}
