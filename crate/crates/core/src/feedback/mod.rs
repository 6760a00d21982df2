//! Turning teacher messages into (sentiment, target feature) observations.

mod classifier;
mod grounding;
mod lexicon;
mod segment;
mod sentiment;
pub mod templates;

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use classifier::{weighted_f1, ClassifierConfig, FormClassifier, TfidfVectorizer};
pub use grounding::{ground_descriptive, ground_imperative, NoGround};
pub use lexicon::GroundingLexicon;
pub use segment::{segment, segment_all, word_tokens, Utterance, DELIMITERS};
pub use sentiment::{SentimentAnalyzer, SentimentConfig, INTENSIFIERS, NEGATORS};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::world::{trajectory_counts, Level, RewardFunction, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeedbackForm {
    Evaluative,
    Imperative,
    Descriptive,
    Other,
}

impl FeedbackForm {
    pub const ALL: [FeedbackForm; 4] = [
        FeedbackForm::Evaluative,
        FeedbackForm::Imperative,
        FeedbackForm::Descriptive,
        FeedbackForm::Other,
    ];
}

impl std::fmt::Display for FeedbackForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackObservation {
    pub zeta: f64,
    pub f: FeatureVector,
    pub form: FeedbackForm,
    pub utterance: Utterance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    OtherForm,
    NoGround { reason: NoGround },
    /// Evaluative feedback on a trajectory with no objects.
    EmptyTrajectory,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::OtherForm => f.write_str("classified as other"),
            SkipReason::NoGround { reason } => write!(f, "no ground: {reason}"),
            SkipReason::EmptyTrajectory => f.write_str("previous trajectory is empty"),
        }
    }
}

/// The outcome of decomposing one utterance, kept whole so callers can show
/// why something was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceParse {
    pub utterance: Utterance,
    pub form: FeedbackForm,
    pub zeta: f64,
    pub outcome: std::result::Result<FeatureVector, SkipReason>,
}

impl UtteranceParse {
    pub fn observation(&self) -> Option<FeedbackObservation> {
        self.outcome.as_ref().ok().map(|f| FeedbackObservation {
            zeta: self.zeta,
            f: *f,
            form: self.form,
            utterance: self.utterance.clone(),
        })
    }
}

/// Sentiment scorer, form classifier and grounding lexicon bundled together.
#[derive(Debug, Clone)]
pub struct Decomposer {
    pub sentiment: SentimentAnalyzer,
    pub classifier: FormClassifier,
    pub lexicon: GroundingLexicon,
}

/// Seed and size of the templated set the shipped classifier is trained on.
pub const DEFAULT_TEMPLATE_SEED: u64 = 20_240_601;
pub const DEFAULT_TEMPLATES_PER_FORM: usize = 400;

impl Decomposer {
    pub fn new(sentiment: SentimentAnalyzer, classifier: FormClassifier, lexicon: GroundingLexicon) -> Self {
        Self { sentiment, classifier, lexicon }
    }

    /// Built-in lexicons and a classifier trained on the templated set.
    /// Training runs once per process.
    pub fn shared() -> Arc<Decomposer> {
        static SHARED: OnceLock<Arc<Decomposer>> = OnceLock::new();
        SHARED
            .get_or_init(|| {
                let labeled = templates::synthetic_labeled(DEFAULT_TEMPLATE_SEED, DEFAULT_TEMPLATES_PER_FORM);
                let classifier = FormClassifier::train(&labeled, &ClassifierConfig::default())
                    .expect("templated set has four classes");
                Arc::new(Decomposer::new(
                    SentimentAnalyzer::default(),
                    classifier,
                    GroundingLexicon::default(),
                ))
            })
            .clone()
    }

    /// Grounds `u` once its form is known. Split out so tests and replay can
    /// force a form.
    pub fn decompose_as(
        &self,
        u: &Utterance,
        form: FeedbackForm,
        tau_prev: &Trajectory,
        level: &Level,
        rf: &RewardFunction,
    ) -> UtteranceParse {
        let zeta = self.sentiment.score(&u.text);
        let outcome = match form {
            FeedbackForm::Evaluative => trajectory_counts(tau_prev, level, rf)
                .l1_normalized()
                .ok_or(SkipReason::EmptyTrajectory),
            FeedbackForm::Imperative => {
                ground_imperative(u, level, rf, &self.lexicon).map_err(|reason| SkipReason::NoGround { reason })
            }
            FeedbackForm::Descriptive => {
                ground_descriptive(u, &self.lexicon).map_err(|reason| SkipReason::NoGround { reason })
            }
            FeedbackForm::Other => Err(SkipReason::OtherForm),
        };
        if let Err(reason) = &outcome {
            tracing::debug!(text = %u.text, %form, %reason, "skipping utterance");
        }
        UtteranceParse { utterance: u.clone(), form, zeta, outcome }
    }

    pub fn decompose(
        &self,
        u: &Utterance,
        tau_prev: &Trajectory,
        level: &Level,
        rf: &RewardFunction,
    ) -> Result<UtteranceParse> {
        let form = self.classifier.classify(u)?;
        Ok(self.decompose_as(u, form, tau_prev, level, rf))
    }

    /// Segments every message and decomposes each piece in order.
    pub fn parse_messages<S: AsRef<str>>(
        &self,
        messages: &[S],
        tau_prev: &Trajectory,
        level: &Level,
        rf: &RewardFunction,
    ) -> Result<Vec<UtteranceParse>> {
        segment_all(messages)
            .iter()
            .map(|u| self.decompose(u, tau_prev, level, rf))
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabeledRecord {
    text: String,
    form: FeedbackForm,
}

/// Reads `{text, form}` JSONL. Blank lines are ignored.
pub fn read_labeled(path: &Path) -> Result<Vec<(Utterance, FeedbackForm)>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(Error::parse(path, i + 1, "empty utterance text"));
        }
        out.push((Utterance::new(rec.text), rec.form));
    }
    Ok(out)
}

pub fn write_labeled(path: &Path, labeled: &[(Utterance, FeedbackForm)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (u, form) in labeled {
        let rec = LabeledRecord { text: u.text.clone(), form: *form };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Color, Corner, LatentCell, Magnitude, ObjectClass, Shape, Sign, WorldObject};
    use proptest::prelude::*;

    fn d() -> Arc<Decomposer> {
        Decomposer::shared()
    }

    // Identity reward function: sign ordinal = color ordinal, magnitude = shape.
    fn obj(id: u32, corner: Corner, class: ObjectClass) -> WorldObject {
        let sign = [Sign::Positive, Sign::Negative, Sign::Neutral][class.color.ordinal()];
        let magnitude = [Magnitude::Low, Magnitude::Mid, Magnitude::High][class.shape.ordinal()];
        let value = match sign {
            Sign::Positive => 2,
            Sign::Negative => -2,
            Sign::Neutral => 0,
        };
        WorldObject { object_id: id, corner, value, cell: LatentCell { sign, magnitude } }
    }

    fn class(c: Color, s: Shape) -> ObjectClass {
        ObjectClass { color: c, shape: s }
    }

    fn level() -> Level {
        let mut objects = Vec::new();
        let fill = [
            (Corner::TL, [class(Color::Blue, Shape::Square); 2].iter().chain(&[class(Color::Pink, Shape::Circle); 3]).copied().collect::<Vec<_>>()),
            (Corner::TR, vec![class(Color::Blue, Shape::Square), class(Color::Blue, Shape::Square), class(Color::Pink, Shape::Triangle), class(Color::Yellow, Shape::Circle), class(Color::Yellow, Shape::Square)]),
            (Corner::BL, vec![class(Color::Yellow, Shape::Triangle); 5]),
            (Corner::BR, vec![class(Color::Pink, Shape::Square); 5]),
        ];
        let mut id = 0;
        for (corner, classes) in fill {
            for c in classes {
                objects.push(obj(id, corner, c));
                id += 1;
            }
        }
        Level { level_id: 0, objects }
    }

    fn rf() -> RewardFunction {
        RewardFunction::from_id(0).unwrap()
    }

    #[test]
    fn identity_rf_is_id_zero() {
        let r = rf();
        let l = level();
        assert_eq!(l.objects[0].class(&r), class(Color::Blue, Shape::Square));
        assert_eq!(l.objects[2].class(&r), class(Color::Pink, Shape::Circle));
    }

    #[test]
    fn example_forms() {
        let cases = [
            ("Not a good move", FeedbackForm::Evaluative),
            ("Top left would have been better", FeedbackForm::Imperative),
            ("The light-blue squares are high valued", FeedbackForm::Descriptive),
            ("I think Yellow is bad", FeedbackForm::Descriptive),
            ("Keep it up excellent", FeedbackForm::Evaluative),
        ];
        for (text, form) in cases {
            assert_eq!(d().classifier.classify(&Utterance::new(text)).unwrap(), form, "{text}");
        }
    }

    #[test]
    fn evaluative_uses_previous_trajectory() {
        let l = level();
        // Two BlueSquare and one PinkTriangle from TR.
        let tau = Trajectory::new(Corner::TR, vec![5, 6, 7]);
        let p = d().decompose(&Utterance::new("Keep it up excellent"), &tau, &l, &rf()).unwrap();
        assert_eq!(p.form, FeedbackForm::Evaluative);
        assert!((p.zeta - 17.0).abs() < 10.0 && p.zeta > 0.0);
        let f = p.outcome.unwrap();
        assert!((f[class(Color::Blue, Shape::Square).index()] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f[class(Color::Pink, Shape::Triangle).index()] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn imperative_ignores_previous_trajectory() {
        let l = level();
        let u = Utterance::new("Top left would have been better");
        let a = d().decompose(&u, &Trajectory::new(Corner::BR, vec![15]), &l, &rf()).unwrap();
        let b = d().decompose(&u, &Trajectory::new(Corner::TR, vec![5, 9]), &l, &rf()).unwrap();
        assert_eq!(a.form, FeedbackForm::Imperative);
        assert_eq!(a.outcome, b.outcome);
        let f = a.outcome.unwrap();
        assert!((f[class(Color::Blue, Shape::Square).index()] - 0.4).abs() < 1e-12);
        assert!((f[class(Color::Pink, Shape::Circle).index()] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn gibberish_skips() {
        let l = level();
        let p = d().decompose(&Utterance::new("asdfgh"), &Trajectory::new(Corner::TL, vec![0]), &l, &rf()).unwrap();
        assert_eq!(p.form, FeedbackForm::Other);
        assert_eq!(p.outcome, Err(SkipReason::OtherForm));
        assert!(p.observation().is_none());
    }

    #[test]
    fn failed_imperative_is_skipped_not_evaluative() {
        let l = level();
        let p = d().decompose_as(
            &Utterance::new("go go go"),
            FeedbackForm::Imperative,
            &Trajectory::new(Corner::TL, vec![0]),
            &l,
            &rf(),
        );
        assert!(matches!(p.outcome, Err(SkipReason::NoGround { .. })));
    }

    #[test]
    fn parse_messages_splits() {
        let l = level();
        let tau = Trajectory::new(Corner::TL, vec![0]);
        let ps = d()
            .parse_messages(&["Not a good move. The light-blue squares are high valued"], &tau, &l, &rf())
            .unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[1].utterance.split_index, 1);
    }

    #[test]
    fn untrained_classifier_is_not_ready() {
        let dec = Decomposer::new(SentimentAnalyzer::default(), FormClassifier::untrained(), GroundingLexicon::default());
        let l = level();
        let r = dec.decompose(&Utterance::new("good"), &Trajectory::new(Corner::TL, vec![0]), &l, &rf());
        assert!(matches!(r, Err(Error::NotReady { .. })));
    }

    #[test]
    fn labeled_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let labeled = templates::synthetic_labeled(9, 5);
        write_labeled(&path, &labeled).unwrap();
        let back = read_labeled(&path).unwrap();
        assert_eq!(back.len(), labeled.len());
        for ((a, fa), (b, fb)) in labeled.iter().zip(&back) {
            assert_eq!(a.text, b.text);
            assert_eq!(fa, fb);
        }
    }

    #[test]
    fn templated_five_fold_f1() {
        let labeled = templates::synthetic_labeled(77, 150);
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for k in 0..5 {
            let train: Vec<_> = labeled.iter().enumerate().filter(|(i, _)| i % 5 != k).map(|(_, x)| x.clone()).collect();
            let model = FormClassifier::train(&train, &ClassifierConfig::default()).unwrap();
            for (u, form) in labeled.iter().skip(k).step_by(5) {
                truth.push(*form);
                pred.push(model.classify(u).unwrap());
            }
        }
        let f1 = weighted_f1(&truth, &pred);
        assert!(f1 >= 0.95, "{f1}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn observations_are_normalized(seed in 0u64..10_000, form_ix in 0usize..4, first in 0u32..20) {
            let mut r = crate::rng::stream(seed, &[]);
            let form = FeedbackForm::ALL[form_ix];
            let text = templates::sample_utterance(&mut r, form);
            let l = level();
            let o = l.object(first).unwrap();
            let tau = Trajectory::new(o.corner, vec![first]);
            let p = d().decompose(&Utterance::new(text), &tau, &l, &rf()).unwrap();
            if let Some(obs) = p.observation() {
                prop_assert!((obs.f.l1_norm() - 1.0).abs() < 1e-12);
                prop_assert!(obs.f.iter().all(|x| *x >= 0.0));
                prop_assert!(obs.form != FeedbackForm::Other);
            }
        }

        #[test]
        fn evaluative_ignores_feature_words(seed in 0u64..10_000) {
            let mut r = crate::rng::stream(seed, &[1]);
            let a = templates::sample_utterance(&mut r, FeedbackForm::Descriptive);
            let b = templates::sample_utterance(&mut r, FeedbackForm::Descriptive);
            let l = level();
            let tau = Trajectory::new(Corner::TR, vec![5, 7]);
            let pa = d().decompose_as(&Utterance::new(a), FeedbackForm::Evaluative, &tau, &l, &rf());
            let pb = d().decompose_as(&Utterance::new(b), FeedbackForm::Evaluative, &tau, &l, &rf());
            prop_assert_eq!(pa.outcome, pb.outcome);
        }

        #[test]
        fn descriptive_ignores_trajectory(seed in 0u64..10_000, x in 0u32..20, y in 0u32..20) {
            let mut r = crate::rng::stream(seed, &[2]);
            let u = Utterance::new(templates::sample_utterance(&mut r, FeedbackForm::Descriptive));
            let l = level();
            let ta = Trajectory::new(l.object(x).unwrap().corner, vec![x]);
            let tb = Trajectory::new(l.object(y).unwrap().corner, vec![y]);
            let pa = d().decompose_as(&u, FeedbackForm::Descriptive, &ta, &l, &rf());
            let pb = d().decompose_as(&u, FeedbackForm::Descriptive, &tb, &l, &rf());
            prop_assert_eq!(pa.outcome, pb.outcome);
        }
    }
}
