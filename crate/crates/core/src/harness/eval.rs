use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::Config;
use super::learner::{LearnerHandle, LearnerKind};
use super::teacher::{SyntheticTeacher, TeacherConfig};
use crate::corpus::{augment, EpisodeRecord, LevelTable, Partition, SplitPlan, EPISODES_PER_GAME};
use crate::error::{Error, Result};
use crate::feedback::{segment_all, Decomposer, FeedbackForm, FormClassifier};
use crate::neural::{tokenize, train_fold, InferenceNet, NetExample, TrainReport};
use crate::rng;
use crate::world::{
    generate_level, normalized_score, trajectory_counts, true_value, Level, RewardFunction, NUM_REWARD_FUNCTIONS,
};

/// One line of a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub model: LearnerKind,
    pub condition: String,
    pub episode_index: u32,
    pub normalized_score: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub run_id: String,
    pub model: LearnerKind,
    pub condition: String,
    /// Mean normalized score per episode (or per draw count), 1-based
    /// episodes at index 0. For interaction sampling index 0 is the
    /// zero-draw baseline.
    pub per_episode: Vec<f64>,
    /// Mean over the learning episodes.
    pub mean: f64,
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    pub records: Vec<ResultRecord>,
}

impl EvalResult {
    fn from_records(run_id: String, model: LearnerKind, condition: &str, fingerprint: String, seeds: Vec<u64>, records: Vec<ResultRecord>, skip_baseline: bool) -> Self {
        let mut by_ep: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        for r in &records {
            let e = by_ep.entry(r.episode_index).or_default();
            e.0 += r.normalized_score;
            e.1 += 1;
        }
        let per_episode: Vec<f64> = by_ep.values().map(|(s, n)| s / *n as f64).collect();
        let learning: Vec<f64> = by_ep
            .iter()
            .filter(|(e, _)| !skip_baseline || **e > 0)
            .map(|(_, (s, n))| s / *n as f64)
            .collect();
        let mean = if learning.is_empty() { f64::NAN } else { learning.iter().sum::<f64>() / learning.len() as f64 };
        Self { run_id, model, condition: condition.to_string(), per_episode, mean, fingerprint, seeds, records }
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn run_id(kind: LearnerKind, condition: &str, fingerprint: &str, seed: u64) -> String {
    format!("{}-{}-{}-{seed}", kind.name(), condition, &fingerprint[..12])
}

/// Runs `f` over `items` on all cores; output order matches input order.
fn par_map<T: Sync, U: Send, F: Fn(&T) -> U + Sync>(items: &[T], f: F) -> Vec<U> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Everything needed to build learners.
#[derive(Clone)]
pub struct Harness {
    pub config: Config,
    pub decomposer: Arc<Decomposer>,
}

impl Harness {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let decomposer = config.decomposer()?;
        Ok(Self { config, decomposer })
    }

    pub fn learner(&self, kind: LearnerKind, net: Option<Arc<InferenceNet>>, seed: u64) -> Result<LearnerHandle> {
        LearnerHandle::new(kind, &self.config, self.decomposer.clone(), net, seed)
    }

    /// Learner and teacher play `episodes` fresh levels per seed. Seeds drive
    /// the reward function, levels, Thompson draws and teacher wording, and
    /// are shared across learner kinds so comparisons are paired.
    pub fn closed_loop(&self, kind: LearnerKind, teacher: TeacherConfig, seeds: &[u64], net: Option<Arc<InferenceNet>>) -> Result<EvalResult> {
        let fp = self.config.fingerprint();
        let condition = "closed_loop";
        let rid = run_id(kind, condition, &fp, seeds.first().copied().unwrap_or(0));
        let runs = par_map(seeds, |&seed| self.closed_loop_one(kind, teacher, seed, net.clone(), &rid));
        let mut records = Vec::new();
        for r in runs {
            records.extend(r?);
        }
        Ok(EvalResult::from_records(rid, kind, condition, fp, seeds.to_vec(), records, false))
    }

    fn closed_loop_one(&self, kind: LearnerKind, teacher: TeacherConfig, seed: u64, net: Option<Arc<InferenceNet>>, rid: &str) -> Result<Vec<ResultRecord>> {
        let rf = RewardFunction::from_id(rng::stream(seed, &[0xC1, 0]).random_range(0..NUM_REWARD_FUNCTIONS))?;
        let mut learner = self.learner(kind, net, rng::derive(seed, &[0xC1, 1]))?;
        let mut t = SyntheticTeacher::new(rf, &self.config.levels.table, teacher);
        let mut talk = rng::stream(seed, &[0xC1, 2]);
        let mut out = Vec::new();
        for ep in 1..=self.config.protocol.episodes {
            let level = generate_level(ep - 1, rng::derive(seed, &[0xC1, 3, ep as u64]), &self.config.levels)?;
            let tau = learner.act(&level, &rf, &[ep as u64])?;
            out.push(ResultRecord {
                run_id: rid.to_string(),
                model: kind,
                condition: "closed_loop".into(),
                episode_index: ep,
                normalized_score: normalized_score(&tau, &level)?,
                seed,
            });
            let msg = t.synthesize_feedback(&tau, &level, ep, &mut talk);
            learner.observe(&[msg], &tau, &level, &rf)?;
        }
        Ok(out)
    }

    /// Human-human games played by a scripted teacher and a pragmatic learner
    /// standing in for the human learner. Teacher `i` gets reward function
    /// `i mod 36`, so 36 or more teachers cover every reward function.
    pub fn synthetic_corpus(&self, n_teachers: usize, teacher: TeacherConfig, levels: &[Level], seed: u64) -> Result<Vec<EpisodeRecord>> {
        let mut out = Vec::new();
        for i in 0..n_teachers {
            let rf = RewardFunction::from_id(i as u32 % NUM_REWARD_FUNCTIONS)?;
            let mut learner = self.learner(LearnerKind::Pragmatic, None, rng::derive(seed, &[0x5C, i as u64, 0]))?;
            let mut t = SyntheticTeacher::new(rf, &self.config.levels.table, teacher);
            let mut talk = rng::stream(seed, &[0x5C, i as u64, 1]);
            for (e, level) in levels.iter().take(EPISODES_PER_GAME as usize).enumerate() {
                let ep = e as u32 + 1;
                let tau = learner.act(level, &rf, &[ep as u64])?;
                let msg = t.synthesize_feedback(&tau, level, ep, &mut talk);
                learner.observe(std::slice::from_ref(&msg), &tau, level, &rf)?;
                out.push(EpisodeRecord {
                    teacher_id: format!("synth-{i:03}"),
                    pair_id: format!("pair-{i:03}"),
                    episode_index: ep,
                    level_id: level.level_id,
                    reward_fn_id: rf.id,
                    score: true_value(&tau, level),
                    trajectory: tau,
                    messages: vec![msg],
                    bonus_visible: false,
                });
            }
        }
        Ok(out)
    }
}

/// Plays one teacher's recorded game: on episode `i` the learner acts on
/// level `i` for a score, then updates on the recorded messages and the
/// recorded trajectory.
pub fn replay_experiment(learner: &mut LearnerHandle, episodes: &[EpisodeRecord], levels: &LevelTable) -> Result<Vec<f64>> {
    let mut sorted: Vec<&EpisodeRecord> = episodes.iter().collect();
    sorted.sort_by_key(|r| r.episode_index);
    for (i, r) in sorted.iter().enumerate() {
        let want = i as u32 + 1;
        if r.episode_index != want {
            return Err(Error::Replay(format!(
                "teacher {} pair {}: expected episode {want}, found {}",
                r.teacher_id, r.pair_id, r.episode_index
            )));
        }
    }
    if sorted.len() != EPISODES_PER_GAME as usize {
        let who = sorted.first().map(|r| r.teacher_id.as_str()).unwrap_or("<none>");
        return Err(Error::Replay(format!("teacher {who}: {} of {EPISODES_PER_GAME} episodes", sorted.len())));
    }
    let mut scores = Vec::with_capacity(sorted.len());
    for r in sorted {
        let level = levels
            .get(&r.level_id)
            .ok_or_else(|| Error::Replay(format!("unknown level_id {}", r.level_id)))?;
        let rf = r.reward_function()?;
        let tau = learner.act(level, &rf, &[r.episode_index as u64])?;
        scores.push(normalized_score(&tau, level)?);
        learner.observe(&r.messages, &r.trajectory, level, &rf)?;
    }
    Ok(scores)
}

/// Records grouped into games in a stable order.
pub fn games(records: &[EpisodeRecord]) -> Vec<Vec<EpisodeRecord>> {
    let mut by: BTreeMap<(&str, &str), Vec<EpisodeRecord>> = BTreeMap::new();
    for r in records {
        by.entry((&r.teacher_id, &r.pair_id)).or_default().push(r.clone());
    }
    by.into_values().collect()
}

fn fold_of_teacher<'a>(plans: &'a [SplitPlan], teacher: &str) -> Result<&'a SplitPlan> {
    plans
        .iter()
        .find(|p| p.test_teachers.contains(teacher))
        .ok_or_else(|| Error::Split(format!("teacher {teacher} is not a test teacher of any fold")))
}

fn net_for(nets: &[Arc<InferenceNet>], kind: LearnerKind, fold: u32) -> Result<Option<Arc<InferenceNet>>> {
    if kind != LearnerKind::Neural {
        return Ok(None);
    }
    let net = nets
        .iter()
        .find(|n| n.fold_id == Some(fold))
        .ok_or_else(|| Error::NotReady { what: "neural learner", why: format!("no net for fold {fold}") })?;
    Ok(Some(net.clone()))
}

/// Rewrites a game onto one of its fold's test reward functions (kept as is
/// if it already uses one), so a fold's net only ever sees held-out teachers
/// and reward functions.
pub(super) fn onto_test_rf(game: &[EpisodeRecord], plan: &SplitPlan, pick: usize, decomposer: &Decomposer) -> Result<Vec<EpisodeRecord>> {
    let rf = game[0].reward_fn_id;
    if plan.test_rfs.contains(&rf) {
        return Ok(game.to_vec());
    }
    let rfs: Vec<u32> = plan.test_rfs.iter().copied().collect();
    let target = rfs[pick % rfs.len()];
    game.iter().map(|r| augment(r, target, &decomposer.lexicon)).collect()
}

impl Harness {
    /// Replays every complete game in `records`. Games with missing episodes
    /// are skipped with a warning. With fold plans each game is first moved
    /// onto a test reward function of the fold holding out its teacher;
    /// the neural learner needs plans.
    pub fn replay_corpus(&self, kind: LearnerKind, records: &[EpisodeRecord], levels: &LevelTable, plans: Option<&[SplitPlan]>, nets: &[Arc<InferenceNet>], seed: u64) -> Result<EvalResult> {
        let fp = self.config.fingerprint();
        let condition = "offline";
        let rid = run_id(kind, condition, &fp, seed);
        let games = games(records);
        if games.is_empty() {
            return Err(Error::Replay("no episodes to replay".into()));
        }
        let indexed: Vec<(usize, &Vec<EpisodeRecord>)> = games.iter().enumerate().collect();
        let runs = par_map(&indexed, |&(g, game)| -> Result<Option<Vec<ResultRecord>>> {
            let (game, net) = match plans {
                Some(plans) => {
                    let plan = fold_of_teacher(plans, &game[0].teacher_id)?;
                    (onto_test_rf(game, plan, g, &self.decomposer)?, net_for(nets, kind, plan.fold_id)?)
                }
                None if kind == LearnerKind::Neural => {
                    return Err(Error::NotReady { what: "neural replay", why: "needs fold plans".into() })
                }
                None => (game.clone(), None),
            };
            let game_seed = rng::derive(seed, &[0x0FF, g as u64]);
            let mut learner = self.learner(kind, net, game_seed)?;
            match replay_experiment(&mut learner, &game, levels) {
                Ok(scores) => Ok(Some(
                    scores
                        .into_iter()
                        .enumerate()
                        .map(|(i, s)| ResultRecord {
                            run_id: rid.clone(),
                            model: kind,
                            condition: condition.into(),
                            episode_index: i as u32 + 1,
                            normalized_score: s,
                            seed: game_seed,
                        })
                        .collect(),
                )),
                Err(Error::Replay(msg)) => {
                    tracing::warn!(%msg, "skipping incomplete game");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        });
        let mut out = Vec::new();
        let mut seeds = Vec::new();
        for r in runs {
            if let Some(recs) = r? {
                seeds.push(recs[0].seed);
                out.extend(recs);
            }
        }
        if out.is_empty() {
            return Err(Error::Replay("no complete game to replay".into()));
        }
        Ok(EvalResult::from_records(rid, kind, condition, fp, seeds, out, false))
    }

    /// Per fold and repeat: a fresh learner receives `draws` tuples drawn
    /// uniformly from the fold's test teachers (rewritten onto one of the
    /// fold's test reward functions) and after each draw is scored on every
    /// test level. Index 0 of the result is the zero-draw baseline.
    #[allow(clippy::too_many_arguments)]
    pub fn interaction_sampling(
        &self,
        kind: LearnerKind,
        condition: &str,
        records: &[EpisodeRecord],
        test_levels: &[Level],
        levels: &LevelTable,
        plans: &[SplitPlan],
        nets: &[Arc<InferenceNet>],
        seed: u64,
    ) -> Result<EvalResult> {
        if records.is_empty() {
            return Err(Error::Sampling("empty corpus".into()));
        }
        if test_levels.is_empty() {
            return Err(Error::Sampling("no test levels".into()));
        }
        let fp = self.config.fingerprint();
        let rid = run_id(kind, condition, &fp, seed);
        let proto = &self.config.protocol;
        let jobs: Vec<(usize, usize)> =
            (0..plans.len().min(proto.folds)).flat_map(|f| (0..proto.repeats).map(move |r| (f, r))).collect();
        let runs = par_map(&jobs, |&(f, r)| -> Result<Vec<ResultRecord>> {
            let plan = &plans[f];
            let rfs: Vec<u32> = plan.test_rfs.iter().copied().collect();
            let target = rfs[r % rfs.len()];
            let mut pool = Vec::new();
            for rec in records.iter().filter(|x| plan.test_teachers.contains(&x.teacher_id)) {
                pool.push(augment(rec, target, &self.decomposer.lexicon)?);
            }
            if pool.is_empty() {
                return Err(Error::Sampling(format!("fold {} has no test-teacher episodes", plan.fold_id)));
            }
            let rf = RewardFunction::from_id(target)?;
            let job_seed = rng::derive(seed, &[0x5A, f as u64, r as u64]);
            let mut learner = self.learner(kind, net_for(nets, kind, plan.fold_id)?, job_seed)?;
            let mut pick = rng::stream(job_seed, &[0xD4A3]);
            let mut out = Vec::with_capacity(proto.draws + 1);
            for d in 0..=proto.draws {
                if d > 0 {
                    let tuple = pool.choose(&mut pick).expect("non-empty pool");
                    let level = levels
                        .get(&tuple.level_id)
                        .ok_or_else(|| Error::Sampling(format!("unknown level_id {}", tuple.level_id)))?;
                    learner.observe(&tuple.messages, &tuple.trajectory, level, &rf)?;
                }
                let mut total = 0.0;
                for (i, level) in test_levels.iter().enumerate() {
                    let tau = learner.act(level, &rf, &[d as u64, i as u64])?;
                    total += normalized_score(&tau, level)?;
                }
                out.push(ResultRecord {
                    run_id: rid.clone(),
                    model: kind,
                    condition: condition.to_string(),
                    episode_index: d as u32,
                    normalized_score: total / test_levels.len() as f64,
                    seed: job_seed,
                });
            }
            Ok(out)
        });
        let mut out = Vec::new();
        let mut seeds = Vec::new();
        for r in runs {
            let recs = r?;
            seeds.push(recs[0].seed);
            out.extend(recs);
        }
        Ok(EvalResult::from_records(rid, kind, condition, fp, seeds, out, true))
    }
}

/// Keeps records with at least one utterance of `form`, restricted to those
/// utterances.
pub fn form_filter(records: &[EpisodeRecord], form: FeedbackForm, classifier: &FormClassifier) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for r in records {
        let mut kept = Vec::new();
        for u in segment_all(&r.messages) {
            if classifier.classify(&u)? == form {
                kept.push(u.text);
            }
        }
        if !kept.is_empty() {
            out.push(EpisodeRecord { messages: kept, ..r.clone() });
        }
    }
    Ok(out)
}

/// Network training pairs from `records`: all messages of an episode as one
/// text, the recorded trajectory's counts, and the true weights.
pub fn net_examples(records: &[&EpisodeRecord], levels: &LevelTable, config: &Config) -> Result<Vec<NetExample>> {
    records
        .iter()
        .map(|r| {
            let level = levels
                .get(&r.level_id)
                .ok_or_else(|| Error::Training(format!("unknown level_id {}", r.level_id)))?;
            let rf = r.reward_function()?;
            Ok(NetExample {
                tokens: tokenize(&r.messages.join(" ")),
                counts: trajectory_counts(&r.trajectory, level, &rf),
                target: rf.true_weights(&config.levels.table),
            })
        })
        .collect()
}

/// Trains the fold's net on augmented records from its train partition and
/// early-stops on its validate partition.
pub fn train_plan(augmented: &[EpisodeRecord], plan: &SplitPlan, levels: &LevelTable, config: &Config, seed: u64) -> Result<TrainReport> {
    let train = net_examples(&plan.select(augmented, Partition::Train), levels, config)?;
    let val = net_examples(&plan.select(augmented, Partition::Validate), levels, config)?;
    train_fold(&train, &val, &config.net, seed, plan.fold_id)
}

/// Summary rows in the layout `model,offline,all,eval,desc,imp`. Missing
/// cells are left blank.
pub fn summary_table(results: &[EvalResult]) -> String {
    let cols = ["offline", "all", "eval", "desc", "imp"];
    let mut rows: BTreeMap<LearnerKind, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in results {
        if let Some(c) = cols.iter().find(|c| **c == r.condition) {
            rows.entry(r.model).or_default().insert(c, r.mean);
        }
    }
    let mut s = String::from("model,offline,all,eval,desc,imp\n");
    for (model, cells) in rows {
        s.push_str(model.name());
        for c in cols {
            s.push(',');
            if let Some(v) = cells.get(c) {
                s.push_str(&format!("{v:.1}"));
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_results(path: &Path, results: &[EvalResult]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in results {
        r.write_jsonl(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn form_condition(form: FeedbackForm) -> &'static str {
    match form {
        FeedbackForm::Evaluative => "eval",
        FeedbackForm::Imperative => "imp",
        FeedbackForm::Descriptive => "desc",
        FeedbackForm::Other => "other",
    }
}
