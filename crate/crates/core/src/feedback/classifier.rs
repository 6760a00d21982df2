//! Feedback-form classifier: TF-IDF over unigrams and bigrams feeding a
//! multinomial logistic regression fit by full-batch gradient descent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::segment::{word_tokens, Utterance};
use super::FeedbackForm;
use crate::error::{Error, Result};

type SparseRow = Vec<(usize, f64)>;

fn ngrams(text: &str) -> Vec<String> {
    let toks = word_tokens(text);
    let mut out: Vec<String> = toks.clone();
    out.extend(toks.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "TfidfRecord", into = "TfidfRecord")]
pub struct TfidfVectorizer {
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfidfRecord {
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<TfidfRecord> for TfidfVectorizer {
    fn from(r: TfidfRecord) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfVectorizer {
            terms: r.terms,
            idf: r.idf,
            index,
        }
    }
}

impl From<TfidfVectorizer> for TfidfRecord {
    fn from(v: TfidfVectorizer) -> Self {
        TfidfRecord {
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl TfidfVectorizer {
    /// Smoothed idf: `ln((1 + n) / (1 + df)) + 1`.
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            let uniq: BTreeSet<String> = ngrams(d.as_ref()).into_iter().collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let (terms, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .map(|(t, c)| (t, ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0))
            .unzip();
        TfidfRecord { terms, idf }.into()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// L2-normalized tf-idf row; unknown terms are ignored.
    pub fn transform(&self, text: &str) -> SparseRow {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(text) {
            if let Some(&i) = self.index.get(&g) {
                *tf.entry(i).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = tf.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iterations: usize,
    /// Stop once the loss improves by less than this.
    pub tolerance: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            learning_rate: 2.0,
            l2: 1e-4,
            max_iterations: 3000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FormClassifier {
    vectorizer: TfidfVectorizer,
    classes: Vec<FeedbackForm>,
    /// `weights[feature][class]`.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    trained: bool,
}

impl FormClassifier {
    /// An untrained classifier; `classify` reports not-ready.
    pub fn untrained() -> Self {
        Self::default()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn classes(&self) -> &[FeedbackForm] {
        &self.classes
    }

    pub fn train(labeled: &[(Utterance, FeedbackForm)], config: &ClassifierConfig) -> Result<Self> {
        let classes: Vec<FeedbackForm> = labeled
            .iter()
            .map(|(_, f)| *f)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if classes.len() < 2 {
            return Err(Error::DegenerateTraining(format!(
                "need at least two forms, found {}",
                classes.len()
            )));
        }
        let texts: Vec<&str> = labeled.iter().map(|(u, _)| u.text.as_str()).collect();
        let vectorizer = TfidfVectorizer::fit(&texts);
        let rows: Vec<SparseRow> = texts.iter().map(|t| vectorizer.transform(t)).collect();
        let targets: Vec<usize> = labeled
            .iter()
            .map(|(_, f)| classes.iter().position(|c| c == f).expect("class collected"))
            .collect();

        let k = classes.len();
        let d = vectorizer.len();
        let n = rows.len() as f64;
        let mut w = vec![vec![0.0; k]; d];
        let mut b = vec![0.0; k];
        let mut prev_loss = f64::INFINITY;
        for _ in 0..config.max_iterations {
            let mut gw = vec![vec![0.0; k]; d];
            let mut gb = vec![0.0; k];
            let mut loss = 0.0;
            for (row, &y) in rows.iter().zip(&targets) {
                let p = softmax(&logits(&w, &b, row));
                loss -= p[y].max(1e-300).ln();
                for c in 0..k {
                    let g = p[c] - if c == y { 1.0 } else { 0.0 };
                    gb[c] += g;
                    for &(j, x) in row {
                        gw[j][c] += g * x;
                    }
                }
            }
            loss /= n;
            loss += 0.5 * config.l2 * w.iter().flatten().map(|x| x * x).sum::<f64>();
            for j in 0..d {
                for c in 0..k {
                    w[j][c] -= config.learning_rate * (gw[j][c] / n + config.l2 * w[j][c]);
                }
            }
            for c in 0..k {
                b[c] -= config.learning_rate * gb[c] / n;
            }
            if (prev_loss - loss).abs() < config.tolerance {
                break;
            }
            prev_loss = loss;
        }
        Ok(FormClassifier {
            vectorizer,
            classes,
            weights: w,
            bias: b,
            trained: true,
        })
    }

    /// Class probabilities in `classes()` order, or `None` when the text has
    /// no known n-grams.
    pub fn probabilities(&self, text: &str) -> Result<Option<Vec<f64>>> {
        if !self.trained {
            return Err(Error::NotReady {
                what: "form classifier",
                why: "not trained".into(),
            });
        }
        let row = self.vectorizer.transform(text);
        if row.is_empty() {
            return Ok(None);
        }
        Ok(Some(softmax(&logits(&self.weights, &self.bias, &row))))
    }

    /// Most probable form; texts without known n-grams are `Other`.
    pub fn classify(&self, u: &Utterance) -> Result<FeedbackForm> {
        let Some(p) = self.probabilities(&u.text)? else {
            return Ok(FeedbackForm::Other);
        };
        let best = p
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        Ok(self.classes[best.0])
    }
}

fn logits(w: &[Vec<f64>], b: &[f64], row: &SparseRow) -> Vec<f64> {
    let mut z = b.to_vec();
    for &(j, x) in row {
        for (zc, wc) in z.iter_mut().zip(&w[j]) {
            *zc += wc * x;
        }
    }
    z
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Support-weighted mean of per-class F1 scores.
pub fn weighted_f1(truth: &[FeedbackForm], predicted: &[FeedbackForm]) -> f64 {
    assert_eq!(truth.len(), predicted.len());
    if truth.is_empty() {
        return 0.0;
    }
    let classes: BTreeSet<FeedbackForm> = truth.iter().copied().collect();
    let mut total = 0.0;
    for c in &classes {
        let tp = truth.iter().zip(predicted).filter(|(t, p)| *t == c && *p == c).count() as f64;
        let fp = truth.iter().zip(predicted).filter(|(t, p)| *t != c && *p == c).count() as f64;
        let fn_ = truth.iter().zip(predicted).filter(|(t, p)| *t == c && *p != c).count() as f64;
        let support = tp + fn_;
        let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
        total += f1 * support;
    }
    total / truth.len() as f64
}
