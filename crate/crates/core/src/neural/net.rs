use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::Vocab;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub init_std: f64,
    pub embed_init_std: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { embed_dim: 30, hidden: 128, init_std: 0.1, embed_init_std: 1.0 }
    }
}

impl NetConfig {
    pub fn input_dim(&self) -> usize {
        self.embed_dim + NUM_FEATURES
    }
}

/// Row-major parameters. `w1` is hidden x input, `w2` is 9 x hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceNet {
    pub format_version: u32,
    pub config: NetConfig,
    pub fold_id: Option<u32>,
    pub vocab: Vocab,
    pub embedding: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Parameter gradients. Embedding rows are kept only for tokens that
/// occurred, as (id, row) pairs with distinct ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: Vec<(u32, Vec<f64>)>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

pub(super) struct Activations {
    pub x: Vec<f64>,
    pub pre: Vec<f64>,
    pub h: Vec<f64>,
    pub out: [f64; NUM_FEATURES],
}

impl InferenceNet {
    pub fn zeros(vocab: Vocab, config: NetConfig) -> Self {
        let (d, h, i) = (config.embed_dim, config.hidden, config.input_dim());
        Self {
            format_version: CHECKPOINT_VERSION,
            config,
            fold_id: None,
            embedding: vec![0.0; vocab.len() * d],
            vocab,
            w1: vec![0.0; h * i],
            b1: vec![0.0; h],
            w2: vec![0.0; NUM_FEATURES * h],
            b2: vec![0.0; NUM_FEATURES],
        }
    }

    /// Every parameter drawn from N(0, init_std).
    pub fn init<R: Rng>(vocab: Vocab, config: NetConfig, rng: &mut R) -> Self {
        let mut net = Self::zeros(vocab, config);
        let normal = Normal::new(0.0, config.init_std).expect("finite positive std");
        let embed = Normal::new(0.0, config.embed_init_std).expect("finite positive std");
        for (i, p) in net.params_mut().into_iter().enumerate() {
            let dist = if i == 0 { embed } else { normal };
            for x in p.iter_mut() {
                *x = rng.sample(dist);
            }
        }
        net
    }

    pub(super) fn params_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [&mut self.embedding, &mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn num_params(&self) -> usize {
        self.embedding.len() + self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub(super) fn activations(&self, ids: &[u32], counts: &FeatureVector) -> Activations {
        let d = self.config.embed_dim;
        let hid = self.config.hidden;
        let inp = self.config.input_dim();
        let mut x = vec![0.0; inp];
        if !ids.is_empty() {
            // Summed in id order so any permutation gives identical bits.
            let mut sorted = ids.to_vec();
            sorted.sort_unstable();
            for &t in &sorted {
                let row = &self.embedding[t as usize * d..(t as usize + 1) * d];
                for (xi, e) in x.iter_mut().zip(row) {
                    *xi += e;
                }
            }
            let n = ids.len() as f64;
            for xi in &mut x[..d] {
                *xi /= n;
            }
        }
        x[d..].copy_from_slice(&counts.0);
        let mut pre = self.b1.clone();
        for (j, p) in pre.iter_mut().enumerate() {
            let row = &self.w1[j * inp..(j + 1) * inp];
            *p += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
        }
        let h: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let mut out = [0.0; NUM_FEATURES];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.w2[k * hid..(k + 1) * hid];
            *o = self.b2[k] + row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>();
        }
        Activations { x, pre, h, out }
    }

    pub fn forward_ids(&self, ids: &[u32], counts: &FeatureVector) -> FeatureVector {
        FeatureVector(self.activations(ids, counts).out)
    }

    /// `counts` are raw trajectory feature counts.
    pub fn forward<S: AsRef<str>>(&self, tokens: &[S], counts: &FeatureVector) -> FeatureVector {
        self.forward_ids(&self.vocab.ids(tokens), counts)
    }

    /// Squared error against `target` averaged over the nine outputs,
    /// without the weight-decay term.
    pub fn loss(&self, ids: &[u32], counts: &FeatureVector, target: &FeatureVector) -> f64 {
        let out = self.forward_ids(ids, counts);
        (0..NUM_FEATURES).map(|k| (out[k] - target[k]).powi(2)).sum::<f64>() / NUM_FEATURES as f64
    }

    pub fn loss_and_gradients(&self, ids: &[u32], counts: &FeatureVector, target: &FeatureVector) -> (f64, Gradients) {
        let d = self.config.embed_dim;
        let hid = self.config.hidden;
        let inp = self.config.input_dim();
        let a = self.activations(ids, counts);
        let n_out = NUM_FEATURES as f64;
        let dout: Vec<f64> = (0..NUM_FEATURES).map(|k| 2.0 * (a.out[k] - target[k]) / n_out).collect();
        let loss = (0..NUM_FEATURES).map(|k| (a.out[k] - target[k]).powi(2)).sum::<f64>() / n_out;

        let mut w2 = vec![0.0; NUM_FEATURES * hid];
        let mut dh = vec![0.0; hid];
        for k in 0..NUM_FEATURES {
            for j in 0..hid {
                w2[k * hid + j] = dout[k] * a.h[j];
                dh[j] += self.w2[k * hid + j] * dout[k];
            }
        }
        let dpre: Vec<f64> = dh.iter().zip(&a.pre).map(|(g, p)| if *p > 0.0 { *g } else { 0.0 }).collect();
        let mut w1 = vec![0.0; hid * inp];
        let mut dx = vec![0.0; d];
        for j in 0..hid {
            if dpre[j] == 0.0 {
                continue;
            }
            for i in 0..inp {
                w1[j * inp + i] = dpre[j] * a.x[i];
            }
            for i in 0..d {
                dx[i] += self.w1[j * inp + i] * dpre[j];
            }
        }
        let mut embedding: Vec<(u32, Vec<f64>)> = Vec::new();
        if !ids.is_empty() {
            let n = ids.len() as f64;
            let mut distinct: Vec<u32> = ids.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            for t in distinct {
                let mult = ids.iter().filter(|x| **x == t).count() as f64 / n;
                embedding.push((t, dx.iter().map(|g| g * mult).collect()));
            }
        }
        (loss, Gradients { embedding, w1, b1: dpre, w2, b2: dout })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let net: Self = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", self.format_version)));
        }
        let c = self.config;
        let expect = [
            ("embedding", self.embedding.len(), self.vocab.len() * c.embed_dim),
            ("w1", self.w1.len(), c.hidden * c.input_dim()),
            ("b1", self.b1.len(), c.hidden),
            ("w2", self.w2.len(), NUM_FEATURES * c.hidden),
            ("b2", self.b2.len(), NUM_FEATURES),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Checkpoint(format!("{name} has {got} entries, expected {want}")));
            }
        }
        if self.vocab.is_empty() || self.vocab.token(0) != super::UNK {
            return Err(Error::Checkpoint("vocabulary must start with the unknown token".into()));
        }
        Ok(())
    }
}
