//! Scripted teachers that know the true reward function.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, NUM_FEATURES};
use crate::feedback::templates::{color_word, corner_word, criticism, praise, sample_utterance, shape_word};
use crate::feedback::FeedbackForm;
use crate::world::{
    best_trajectory, normalized_score, CellTable, Color, Level, ObjectClass, RewardFunction, Sign, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "p")]
pub enum TeacherPolicy {
    DescriptiveOracle,
    EvaluativeOnly,
    ImperativeOnly,
    /// Descriptive for episodes 1 to 3, evaluative afterwards.
    Scaffolding,
    /// Descriptive with probability `p`, otherwise evaluative.
    Mixed(f64),
}

/// Order in which the descriptive oracle walks through the classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionOrder {
    /// Highest true weight first.
    #[default]
    Descending,
    /// Largest |weight| first, positive before negative on ties.
    AbsWeight,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValenceStyle {
    /// Adjective strength tracks the weight ("great", "good", "ok", ...).
    #[default]
    Graded,
    /// Always "good" or "bad".
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherConfig {
    pub policy: TeacherPolicy,
    /// Probability that a message is replaced by off-task chatter.
    pub noise: f64,
    pub mention_order: MentionOrder,
    pub valence: ValenceStyle,
    /// Also describe the zero-valued color ("worthless") once the nonzero
    /// classes are done.
    pub mention_neutral: bool,
    pub exhausted: AfterExhaustion,
}

/// What the descriptive oracle says once everything has been named.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfterExhaustion {
    /// Start again from the first mention.
    #[default]
    Cycle,
    /// Praise or criticize the trajectory.
    Evaluative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mention {
    Class(usize),
    Color(Color),
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            policy: TeacherPolicy::DescriptiveOracle,
            noise: 0.0,
            mention_order: MentionOrder::default(),
            valence: ValenceStyle::default(),
            mention_neutral: false,
            exhausted: AfterExhaustion::default(),
        }
    }
}

const POSITIVE_IMPERATIVE: &[&str] = &[
    "{k}",
    "go {k}",
    "try the {k}",
    "{k} would have been better",
    "you should have gone {k}",
    "next time go {k}",
    "go to the {k} corner",
    "{k} next time",
];

/// Adjective for a class with true weight `w`.
fn adjective(w: f64, style: ValenceStyle) -> &'static str {
    match style {
        ValenceStyle::Flat => {
            if w > 0.0 {
                "good"
            } else {
                "bad"
            }
        }
        ValenceStyle::Graded => match w {
            w if w >= 7.0 => "great",
            w if w >= 4.0 => "good",
            w if w > 0.0 => "ok",
            w if w <= -7.0 => "terrible",
            w if w <= -4.0 => "bad",
            _ => "not good",
        },
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTeacher {
    pub rf: RewardFunction,
    pub weights: FeatureVector,
    pub config: TeacherConfig,
    order: Vec<Mention>,
    mentions: usize,
}

impl SyntheticTeacher {
    pub fn new(rf: RewardFunction, table: &CellTable, config: TeacherConfig) -> Self {
        let weights = rf.true_weights(table);
        let mut order: Vec<usize> = (0..NUM_FEATURES).filter(|&k| weights[k] != 0.0).collect();
        match config.mention_order {
            MentionOrder::Descending => order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b))),
            MentionOrder::AbsWeight => order.sort_by(|&a, &b| {
                weights[b]
                    .abs()
                    .total_cmp(&weights[a].abs())
                    .then(weights[b].total_cmp(&weights[a]))
                    .then(a.cmp(&b))
            }),
        }
        let mut order: Vec<Mention> = order.into_iter().map(Mention::Class).collect();
        if config.mention_neutral {
            if let Some(c) = Color::ALL.into_iter().find(|&c| rf.sign_of_color(c) == Sign::Neutral) {
                order.push(Mention::Color(c));
            }
        }
        Self { rf, weights, config, order, mentions: 0 }
    }

    /// The form the policy intends for `episode_index` (1-based).
    pub fn intended_form<R: Rng>(&self, episode_index: u32, rng: &mut R) -> FeedbackForm {
        match self.config.policy {
            TeacherPolicy::DescriptiveOracle => FeedbackForm::Descriptive,
            TeacherPolicy::EvaluativeOnly => FeedbackForm::Evaluative,
            TeacherPolicy::ImperativeOnly => FeedbackForm::Imperative,
            TeacherPolicy::Scaffolding if episode_index <= 3 => FeedbackForm::Descriptive,
            TeacherPolicy::Scaffolding => FeedbackForm::Evaluative,
            TeacherPolicy::Mixed(p) => {
                if rng.random_bool(p.clamp(0.0, 1.0)) {
                    FeedbackForm::Descriptive
                } else {
                    FeedbackForm::Evaluative
                }
            }
        }
    }

    /// Feedback on the learner's trajectory `tau` in `level`.
    pub fn synthesize_feedback<R: Rng>(&mut self, tau: &Trajectory, level: &Level, episode_index: u32, rng: &mut R) -> String {
        let mut form = self.intended_form(episode_index, rng);
        if form == FeedbackForm::Descriptive
            && self.config.exhausted == AfterExhaustion::Evaluative
            && self.mentions >= self.order.len()
        {
            form = FeedbackForm::Evaluative;
        }
        if self.config.noise > 0.0 && rng.random_bool(self.config.noise.min(1.0)) {
            return sample_utterance(rng, FeedbackForm::Other);
        }
        match form {
            FeedbackForm::Descriptive => self.describe_next(rng),
            FeedbackForm::Evaluative => {
                let good = normalized_score(tau, level).map(|s| s >= 50.0).unwrap_or(false);
                if good { praise(rng) } else { criticism(rng) }.to_string()
            }
            FeedbackForm::Imperative => {
                let best = best_trajectory(&self.weights, level, &self.rf);
                POSITIVE_IMPERATIVE
                    .choose(rng)
                    .expect("non-empty")
                    .replace("{k}", corner_word(rng, best.corner))
            }
            FeedbackForm::Other => sample_utterance(rng, FeedbackForm::Other),
        }
    }

    /// Names the next class in mention order, cycling once all are named.
    fn describe_next<R: Rng>(&mut self, rng: &mut R) -> String {
        let m = self.order[self.mentions % self.order.len()];
        self.mentions += 1;
        match m {
            Mention::Class(k) => {
                let class = ObjectClass::from_index(k);
                format!(
                    "{} {} are {}",
                    color_word(rng, class.color),
                    plural_shape_word(rng, class),
                    adjective(self.weights[k], self.config.valence)
                )
            }
            Mention::Color(c) => format!("{} ones are worthless", color_word(rng, c)),
        }
    }
}

fn plural_shape_word<R: Rng>(rng: &mut R, class: ObjectClass) -> &'static str {
    loop {
        let w = shape_word(rng, class.shape);
        if w.ends_with('s') {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::{segment, Decomposer};
    use crate::rng;
    use crate::world::{generate_level, LevelConfig, Shape};

    fn rf_with_best(class: ObjectClass) -> RewardFunction {
        let table = CellTable::default();
        RewardFunction::all()
            .find(|rf| {
                let w = rf.true_weights(&table);
                (0..NUM_FEATURES).all(|k| k == class.index() || w[k] < w[class.index()])
            })
            .unwrap()
    }

    #[test]
    fn oracle_names_peak_class_first() {
        let blue_square = ObjectClass::new(Color::Blue, Shape::Square);
        let rf = rf_with_best(blue_square);
        let cfg = TeacherConfig { valence: ValenceStyle::Flat, ..Default::default() };
        let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
        let level = generate_level(0, 3, &LevelConfig::default()).unwrap();
        let tau = best_trajectory(&t.weights, &level, &rf);
        // Canonical words come first only by chance, so check the grounding.
        let mut r = rng::stream(1, &[]);
        let msg = t.synthesize_feedback(&tau, &level, 1, &mut r);
        let d = Decomposer::shared();
        let parse = d.decompose(&segment(&msg, 0)[0], &tau, &level, &rf).unwrap();
        assert_eq!(parse.form, FeedbackForm::Descriptive, "{msg}");
        let obs = parse.observation().unwrap();
        assert_eq!(obs.f[blue_square.index()], 1.0, "{msg}");
        assert!(obs.zeta > 0.0);
        assert!(msg.ends_with("are good"));
    }

    #[test]
    fn spec_example_with_canonical_words() {
        let mut r = rng::stream(0, &[]);
        let class = ObjectClass::new(Color::Blue, Shape::Square);
        let rf = rf_with_best(class);
        let cfg = TeacherConfig { valence: ValenceStyle::Flat, ..Default::default() };
        for _ in 0..200 {
            let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
            let level = generate_level(0, 3, &LevelConfig::default()).unwrap();
            let tau = best_trajectory(&t.weights, &level, &rf);
            if t.synthesize_feedback(&tau, &level, 1, &mut r) == "blue squares are good" {
                return;
            }
        }
        panic!("never produced the canonical phrasing");
    }

    #[test]
    fn mention_orders_skip_zero_and_cycle() {
        let table = CellTable::default();
        for rf in RewardFunction::all() {
            let t = SyntheticTeacher::new(rf, &table, TeacherConfig::default());
            assert_eq!(t.order.len(), 6);
            let ws: Vec<f64> = t.order.iter().map(|m| match m { Mention::Class(k) => t.weights[*k], Mention::Color(_) => f64::NAN }).collect();
            assert_eq!(ws, vec![9.0, 5.5, 2.0, -2.0, -5.5, -9.0]);
            let cfg = TeacherConfig { mention_order: MentionOrder::AbsWeight, ..Default::default() };
            let t = SyntheticTeacher::new(rf, &table, cfg);
            let ws: Vec<f64> = t.order.iter().map(|m| match m { Mention::Class(k) => t.weights[*k], Mention::Color(_) => f64::NAN }).collect();
            assert_eq!(ws, vec![9.0, -9.0, 5.5, -5.5, 2.0, -2.0]);
        }
    }

    #[test]
    fn neutral_color_and_evaluative_tail() {
        let d = Decomposer::shared();
        let rf = RewardFunction::from_id(13).unwrap();
        let level = generate_level(0, 1, &LevelConfig::default()).unwrap();
        let tau = best_trajectory(&FeatureVector::zeros(), &level, &rf);
        let cfg = TeacherConfig { mention_neutral: true, exhausted: AfterExhaustion::Evaluative, ..Default::default() };
        let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
        let mut r = rng::stream(3, &[]);
        let msgs: Vec<String> = (1..=8).map(|e| t.synthesize_feedback(&tau, &level, e, &mut r)).collect();
        let seventh = d.decompose(&segment(&msgs[6], 0)[0], &tau, &level, &rf).unwrap();
        let f = seventh.observation().unwrap().f;
        for k in 0..NUM_FEATURES {
            assert_eq!(f[k] > 0.0, t.weights[k] == 0.0, "{}", msgs[6]);
        }
        assert!(seventh.zeta < 0.0);
        let eighth = d.classifier.classify(&segment(&msgs[7], 0)[0]).unwrap();
        assert_eq!(eighth, FeedbackForm::Evaluative, "{}", msgs[7]);
    }

    #[test]
    fn graded_valence_tracks_weight() {
        let d = Decomposer::shared();
        let rf = RewardFunction::from_id(7).unwrap();
        let level = generate_level(0, 1, &LevelConfig::default()).unwrap();
        let tau = best_trajectory(&FeatureVector::zeros(), &level, &rf);
        let mut t = SyntheticTeacher::new(rf, &CellTable::default(), TeacherConfig::default());
        let mut r = rng::stream(2, &[]);
        let mut zetas = Vec::new();
        for ep in 1..=6 {
            let msg = t.synthesize_feedback(&tau, &level, ep, &mut r);
            let obs = d.decompose(&segment(&msg, 0)[0], &tau, &level, &rf).unwrap().observation().unwrap();
            zetas.push(obs.zeta);
        }
        assert!(zetas.windows(2).all(|w| w[0] > w[1]), "{zetas:?}");
        assert!(zetas[2] > 0.0 && zetas[3] < 0.0);
    }

    #[test]
    fn evaluative_praises_good_play() {
        let rf = RewardFunction::from_id(3).unwrap();
        let cfg = TeacherConfig { policy: TeacherPolicy::EvaluativeOnly, ..Default::default() };
        let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
        let d = Decomposer::shared();
        let mut r = rng::stream(4, &[]);
        for seed in 0..30 {
            let level = generate_level(0, seed, &LevelConfig::default()).unwrap();
            let best = best_trajectory(&t.weights, &level, &rf);
            let msg = t.synthesize_feedback(&best, &level, 1, &mut r);
            assert!(d.sentiment.score(&msg) > 0.0, "{msg}");
        }
    }

    #[test]
    fn imperative_names_best_corner() {
        let rf = RewardFunction::from_id(11).unwrap();
        let cfg = TeacherConfig { policy: TeacherPolicy::ImperativeOnly, ..Default::default() };
        let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
        let d = Decomposer::shared();
        let mut r = rng::stream(5, &[]);
        for seed in 0..30 {
            let level = generate_level(0, seed, &LevelConfig::default()).unwrap();
            let best = best_trajectory(&t.weights, &level, &rf);
            let msg = t.synthesize_feedback(&best, &level, 1, &mut r);
            let corners = d.lexicon.corners_in(&crate::feedback::word_tokens(&msg));
            assert_eq!(corners.into_iter().collect::<Vec<_>>(), vec![best.corner], "{msg}");
        }
    }

    #[test]
    fn scaffolding_switches_after_three() {
        let rf = RewardFunction::from_id(0).unwrap();
        let cfg = TeacherConfig { policy: TeacherPolicy::Scaffolding, ..Default::default() };
        let t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
        let mut r = rng::stream(0, &[]);
        let forms: Vec<_> = (1..=10).map(|e| t.intended_form(e, &mut r)).collect();
        assert!(forms[..3].iter().all(|f| *f == FeedbackForm::Descriptive));
        assert!(forms[3..].iter().all(|f| *f == FeedbackForm::Evaluative));
    }

    #[test]
    fn deterministic_under_seed() {
        let rf = RewardFunction::from_id(20).unwrap();
        let cfg = TeacherConfig { policy: TeacherPolicy::Mixed(0.5), noise: 0.2, ..Default::default() };
        let level = generate_level(0, 1, &LevelConfig::default()).unwrap();
        let tau = best_trajectory(&FeatureVector::zeros(), &level, &rf);
        let run = || {
            let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
            let mut r = rng::stream(9, &[]);
            (1..=10).map(|e| t.synthesize_feedback(&tau, &level, e, &mut r)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn intended_form_consistency_at_zero_noise() {
        let d = Decomposer::shared();
        let policies = [TeacherPolicy::DescriptiveOracle, TeacherPolicy::EvaluativeOnly, TeacherPolicy::ImperativeOnly];
        for policy in policies {
            let mut r = rng::stream(77, &[]);
            let mut agree = 0;
            for i in 0..1000u32 {
                let rf = RewardFunction::from_id(i % 36).unwrap();
                let cfg = TeacherConfig { policy, ..Default::default() };
                let mut t = SyntheticTeacher::new(rf, &CellTable::default(), cfg);
                let level = generate_level(0, i as u64, &LevelConfig::default()).unwrap();
                let tau = best_trajectory(&FeatureVector::zeros(), &level, &rf);
                let form = t.intended_form(1, &mut r);
                let msg = t.synthesize_feedback(&tau, &level, (i % 10) + 1, &mut r);
                if d.classifier.classify(&segment(&msg, 0)[0]).unwrap() == form {
                    agree += 1;
                }
            }
            assert!(agree >= 950, "{policy:?}: {agree}/1000");
        }
    }
}

