//! Templated utterances with known feedback forms. Used to train the shipped
//! form classifier and by the synthetic teachers.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::segment::Utterance;
use super::FeedbackForm;
use crate::rng;
use crate::world::{Color, Corner, Shape};

pub const COLOR_WORDS: [(Color, &[&str]); 3] = [
    (Color::Pink, &["pink", "magenta", "purple", "violet"]),
    (Color::Blue, &["blue", "light-blue", "cyan", "teal"]),
    (Color::Yellow, &["yellow", "gold", "golden", "orange"]),
];

pub const SHAPE_WORDS: [(Shape, &[&str]); 3] = [
    (Shape::Circle, &["circles", "circle", "dots", "balls"]),
    (Shape::Square, &["squares", "square", "boxes", "blocks"]),
    (Shape::Triangle, &["triangles", "triangle", "pyramids", "tris"]),
];

pub const CORNER_WORDS: [(Corner, &[&str]); 4] = [
    (Corner::TL, &["top left", "upper left", "top-left"]),
    (Corner::TR, &["top right", "upper right", "top-right"]),
    (Corner::BL, &["bottom left", "lower left", "bottom-left"]),
    (Corner::BR, &["bottom right", "lower right", "bottom-right"]),
];

const PRAISE: &[&str] = &[
    "good job", "great job", "nice", "excellent", "keep it up excellent", "well done",
    "perfect", "awesome work", "nice one", "much better", "great", "that was great",
    "amazing", "good work", "yes that was good", "fantastic", "you did well", "very good", "super",
    "great score", "love it", "brilliant move", "good choice", "nicely done",
];

const CRITICISM: &[&str] = &[
    "not a good move", "bad choice", "terrible", "that was a mistake", "wrong", "no that was bad",
    "worse", "that was not good", "you lost points", "oops", "bad", "that was awful",
    "poor choice", "that's wrong", "no", "ugh", "not great", "that hurt", "bad score", 
    "that was the worst", "nope not good", "you did poorly", "disappointing",
];

/// Evaluative in form but carrying no lexicon valence.
const NEUTRAL_EVALUATIVE: &[&str] = &["keep it up", "you got it", "that's the way", "not quite", "try again"];

const GOOD_ADJ: &[&str] = &["good", "great", "the best", "high valued", "valuable", "worth a lot", "awesome", "nice"];
const BAD_ADJ: &[&str] = &["bad", "terrible", "the worst", "worthless", "negative", "awful", "poison", "not good"];

const DESCRIPTIVE: &[&str] = &[
    "{c} {s} are {a}",
    "the {c} {s} are {a}",
    "{c} is {a}",
    "I think {c} is {a}",
    "{s} are {a}",
    "the {s} are {a}",
    "{c} {s}",
    "get the {c} {s}",
    "avoid the {c} {s}",
    "avoid {c}",
    "collect all the {c}",
    "go for the {c} {s}",
    "stay away from {c} {s}",
    "{c} ones are {a}",
    "the {c} ones are {a}",
    "{c} {s} give points",
    "{c} {s} lose points",
    "only get {c} {s}",
    "dont pick up {s}",
    "pick up the {c} {s}",
];

const IMPERATIVE: &[&str] = &[
    "{k}",
    "go {k}",
    "{k} would have been better",
    "try the {k}",
    "you should have gone {k}",
    "head to the {k} next time",
    "go to the {k} corner",
    "the {k} corner",
    "{k} was the best",
    "{k} is better",
    "stay away from the {k}",
    "dont go {k}",
    "next time go {k}",
    "{k} next time",
    "should have gone to the {k}",
    "move to the {k}",
];

const OTHER: &[&str] = &[
    "hello", "hi", "hey there", "how are you", "this game is weird", "lol", "are you a bot", "what",
    "hmm", "i dont know", "sorry i was away", "who are you", "can you hear me", "test", "lets start",
    "thanks for playing", "bye", "where are you from", "is this working", "how much time is left",
    "my internet is slow", "haha", "what is going on", "wait", "ready", "ok", "i am here", "hurry up",
    "one more round", "how many levels", "see you", "interesting",
];

const PREFIXES: &[&str] = &["", "", "", "ok ", "hey ", "so ", "well "];
const SUFFIXES: &[&str] = &["", "", "", " now", " please", " again", " this time"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty template bank")
}

pub fn color_word<R: Rng>(rng: &mut R, c: Color) -> &'static str {
    let (_, words) = COLOR_WORDS.iter().find(|(col, _)| *col == c).expect("all colors listed");
    words.choose(rng).copied().expect("non-empty")
}

pub fn shape_word<R: Rng>(rng: &mut R, s: Shape) -> &'static str {
    let (_, words) = SHAPE_WORDS.iter().find(|(sh, _)| *sh == s).expect("all shapes listed");
    words.choose(rng).copied().expect("non-empty")
}

pub fn corner_word<R: Rng>(rng: &mut R, k: Corner) -> &'static str {
    let (_, words) = CORNER_WORDS.iter().find(|(c, _)| *c == k).expect("all corners listed");
    words.choose(rng).copied().expect("non-empty")
}

pub fn praise<R: Rng>(rng: &mut R) -> &'static str {
    pick(rng, PRAISE)
}

pub fn criticism<R: Rng>(rng: &mut R) -> &'static str {
    pick(rng, CRITICISM)
}

fn gibberish<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(3..9);
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

/// One templated utterance of the requested form.
pub fn sample_utterance<R: Rng>(rng: &mut R, form: FeedbackForm) -> String {
    let body = match form {
        FeedbackForm::Evaluative => {
            if rng.random_bool(0.1) {
                pick(rng, NEUTRAL_EVALUATIVE).to_string()
            } else if rng.random_bool(0.5) {
                praise(rng).to_string()
            } else {
                criticism(rng).to_string()
            }
        }
        FeedbackForm::Imperative => {
            let k = Corner::ALL[rng.random_range(0..4)];
            pick(rng, IMPERATIVE).replace("{k}", corner_word(rng, k))
        }
        FeedbackForm::Descriptive => {
            let c = Color::ALL[rng.random_range(0..3)];
            let s = Shape::ALL[rng.random_range(0..3)];
            let a = if rng.random_bool(0.5) { pick(rng, GOOD_ADJ) } else { pick(rng, BAD_ADJ) };
            pick(rng, DESCRIPTIVE)
                .replace("{c}", color_word(rng, c))
                .replace("{s}", shape_word(rng, s))
                .replace("{a}", a)
        }
        FeedbackForm::Other => {
            if rng.random_bool(0.2) {
                return gibberish(rng);
            }
            pick(rng, OTHER).to_string()
        }
    };
    format!("{}{}{}", pick(rng, PREFIXES), body, pick(rng, SUFFIXES))
}

/// `per_form` templated utterances for each of the four forms, interleaved.
pub fn synthetic_labeled(seed: u64, per_form: usize) -> Vec<(Utterance, FeedbackForm)> {
    let mut rng = rng::stream(seed, &[0x7E3A]);
    let forms = [
        FeedbackForm::Evaluative,
        FeedbackForm::Imperative,
        FeedbackForm::Descriptive,
        FeedbackForm::Other,
    ];
    let mut out = Vec::with_capacity(per_form * forms.len());
    for _ in 0..per_form {
        for form in forms {
            out.push((Utterance::new(sample_utterance(&mut rng, form)), form));
        }
    }
    out
}
