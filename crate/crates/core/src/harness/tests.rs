use std::sync::Arc;

use super::*;
use crate::corpus::{augment_all, level_table, make_splits, LevelTable};
use crate::feedback::{Decomposer, FeedbackForm};
use crate::neural::{InferenceNet, NetConfig, Vocab};
use crate::world::{generate_levels, Level, LevelConfig};

fn harness() -> Harness {
    Harness::new(Config::default()).unwrap()
}

fn oracle() -> TeacherConfig {
    TeacherConfig::default()
}

fn levels() -> (Vec<Level>, LevelTable) {
    let v = generate_levels(0, 10, 11, &LevelConfig::default()).unwrap();
    (v.clone(), level_table(v))
}

#[test]
fn closed_loop_pragmatic_learns_fast() {
    let h = harness();
    let seeds: Vec<u64> = (0..100).collect();
    let lit = h.closed_loop(LearnerKind::Literal, oracle(), &seeds, None).unwrap();
    let prag = h.closed_loop(LearnerKind::Pragmatic, oracle(), &seeds, None).unwrap();
    assert_eq!(lit.per_episode.len(), 10);
    assert!(prag.per_episode[4] >= 90.0, "{:?}", prag.per_episode);
    for ep in 1..10 {
        assert!(prag.per_episode[ep] >= lit.per_episode[ep], "episode {}: {:?} vs {:?}", ep + 1, prag.per_episode, lit.per_episode);
    }
}

#[test]
fn closed_loop_is_reproducible() {
    let h = harness();
    let seeds = [3, 4, 5];
    let a = h.closed_loop(LearnerKind::Pragmatic, oracle(), &seeds, None).unwrap();
    let b = h.closed_loop(LearnerKind::Pragmatic, oracle(), &seeds, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fingerprint, Config::default().fingerprint());
    assert_eq!(a.seeds, seeds.to_vec());
}

#[test]
fn ungroundable_teacher_matches_baseline() {
    let h = harness();
    let (_, table) = levels();
    let mut corpus = h.synthetic_corpus(1, oracle(), &table_levels(&table), 1).unwrap();
    for r in &mut corpus {
        r.messages = vec!["hello there".into(), "zxqv".into()];
    }
    let mut taught = h.learner(LearnerKind::Pragmatic, None, 9).unwrap();
    let scores = replay_experiment(&mut taught, &corpus, &table).unwrap();
    let fresh = h.learner(LearnerKind::Pragmatic, None, 9).unwrap();
    for (r, s) in corpus.iter().zip(&scores) {
        let level = &table[&r.level_id];
        let tau = fresh.act(level, &r.reward_function().unwrap(), &[r.episode_index as u64]).unwrap();
        assert_eq!(*s, crate::world::normalized_score(&tau, level).unwrap());
    }
}

fn table_levels(t: &LevelTable) -> Vec<Level> {
    let mut v: Vec<Level> = t.values().cloned().collect();
    v.sort_by_key(|l| l.level_id);
    v
}

#[test]
fn replay_rejects_missing_episode() {
    let h = harness();
    let (v, table) = levels();
    let mut corpus = h.synthetic_corpus(1, oracle(), &v, 1).unwrap();
    corpus.remove(4);
    let mut l = h.learner(LearnerKind::Literal, None, 0).unwrap();
    assert!(matches!(replay_experiment(&mut l, &corpus, &table), Err(crate::Error::Replay(_))));
    assert!(matches!(replay_experiment(&mut l, &[], &table), Err(crate::Error::Replay(_))));
}

#[test]
fn replay_conditions_on_recorded_trajectory() {
    // Evaluative feedback on the recorded trajectory must move the belief
    // along that trajectory's counts, whatever the learner itself did.
    let h = harness();
    let (v, table) = levels();
    let cfg = TeacherConfig { policy: TeacherPolicy::EvaluativeOnly, ..oracle() };
    let mut corpus = h.synthetic_corpus(1, cfg, &v, 2).unwrap();
    corpus.truncate(1);
    corpus[0].messages = vec!["great job".into()];
    let r = &corpus[0];
    let level = &table[&r.level_id];
    let rf = r.reward_function().unwrap();
    let mut l = h.learner(LearnerKind::Literal, None, 0).unwrap();
    let trace = l.observe(&r.messages, &r.trajectory, level, &rf).unwrap();
    let counts = crate::world::trajectory_counts(&r.trajectory, level, &rf);
    assert_eq!(trace.applied[0].f, counts.l1_normalized().unwrap());
}

#[test]
fn synthetic_corpus_is_valid() {
    let h = harness();
    let (v, table) = levels();
    let corpus = h.synthetic_corpus(40, oracle(), &v, 3).unwrap();
    assert_eq!(corpus.len(), 400);
    for r in &corpus {
        r.validate(&table).unwrap();
    }
    assert_eq!(games(&corpus).len(), 40);
}

fn sampling_setup(protocol: ProtocolConfig) -> (Harness, Vec<crate::corpus::EpisodeRecord>, LevelTable, Vec<Level>, Vec<crate::corpus::SplitPlan>) {
    let cfg = Config { protocol, ..Config::default() };
    let h = Harness::new(cfg).unwrap();
    let (v, table) = levels();
    let corpus = h.synthetic_corpus(40, oracle(), &v, 5).unwrap();
    let plans = make_splits(&corpus, 5).unwrap();
    let test = generate_levels(10, 20, 6, &LevelConfig::default()).unwrap();
    (h, corpus, table, test, plans)
}

#[test]
fn zero_draws_is_the_fresh_baseline() {
    let protocol = ProtocolConfig { draws: 0, repeats: 2, folds: 3, ..ProtocolConfig::default() };
    let (h, corpus, table, test, plans) = sampling_setup(protocol);
    let r = h.interaction_sampling(LearnerKind::Literal, "all", &corpus, &test, &table, &plans, &[], 1).unwrap();
    assert_eq!(r.per_episode.len(), 1);
    assert!(r.mean.is_nan());
    // Same numbers when the learner never sees any feedback at all.
    let r2 = h.interaction_sampling(LearnerKind::Pragmatic, "all", &corpus, &test, &table, &plans, &[], 1).unwrap();
    assert_eq!(r.per_episode, r2.per_episode);
}

#[test]
fn sampling_improves_on_oracle_corpus() {
    let protocol = ProtocolConfig { draws: 5, repeats: 2, folds: 10, ..ProtocolConfig::default() };
    let (h, corpus, table, test, plans) = sampling_setup(protocol);
    for kind in [LearnerKind::Literal, LearnerKind::Pragmatic] {
        let r = h.interaction_sampling(kind, "all", &corpus, &test, &table, &plans, &[], 1).unwrap();
        assert_eq!(r.per_episode.len(), 6);
        assert!(r.per_episode[5] > r.per_episode[0] + 20.0, "{kind}: {:?}", r.per_episode);
    }
}

#[test]
fn sampling_errors_on_empty_corpus() {
    let (h, _, table, test, plans) = sampling_setup(ProtocolConfig::default());
    let r = h.interaction_sampling(LearnerKind::Literal, "all", &[], &test, &table, &plans, &[], 1);
    assert!(matches!(r, Err(crate::Error::Sampling(_))));
}

#[test]
fn neural_uses_each_folds_own_net() {
    let protocol = ProtocolConfig { draws: 1, repeats: 1, folds: 10, ..ProtocolConfig::default() };
    let (h, corpus, table, test, plans) = sampling_setup(protocol);
    let vocab = Vocab::build([&["x".to_string()][..]], 1);
    let nets: Vec<Arc<InferenceNet>> = (0..10)
        .map(|f| {
            let mut n = InferenceNet::zeros(vocab.clone(), NetConfig::default());
            n.fold_id = Some(f);
            Arc::new(n)
        })
        .collect();
    assert!(h.interaction_sampling(LearnerKind::Neural, "all", &corpus, &test, &table, &plans, &nets, 1).is_ok());
    let missing = &nets[..9];
    let r = h.interaction_sampling(LearnerKind::Neural, "all", &corpus, &test, &table, &plans, missing, 1);
    assert!(matches!(r, Err(crate::Error::NotReady { .. })));
    assert!(h.replay_corpus(LearnerKind::Neural, &corpus, &table, Some(&plans), &nets, 1).is_ok());
}

#[test]
fn replay_corpus_stays_on_test_reward_functions() {
    let (h, corpus, table, _, plans) = sampling_setup(ProtocolConfig::default());
    let d = Decomposer::shared();
    for (g, game) in games(&corpus).iter().enumerate() {
        let plan = plans.iter().find(|p| p.test_teachers.contains(&game[0].teacher_id)).unwrap();
        let moved = super::eval::onto_test_rf(game, plan, g, &d).unwrap();
        assert!(moved.iter().all(|r| plan.test_rfs.contains(&r.reward_fn_id)));
        assert!(moved.iter().zip(game).all(|(a, b)| a.score == b.score));
    }
    let on_test = h.replay_corpus(LearnerKind::Pragmatic, &corpus, &table, Some(&plans), &[], 1).unwrap();
    let own = h.replay_corpus(LearnerKind::Pragmatic, &corpus, &table, None, &[], 1).unwrap();
    assert_eq!(on_test.records.len(), 400);
    assert_eq!(own.records.len(), 400);
    assert!(h.replay_corpus(LearnerKind::Neural, &corpus, &table, None, &[], 1).is_err());
}

#[test]
fn form_filter_partitions() {
    let d = Decomposer::shared();
    let (_, table) = levels();
    let mut corpus = harness().synthetic_corpus(1, oracle(), &table_levels(&table), 4).unwrap();
    corpus.truncate(1);
    corpus[0].messages = vec![
        "Not a good move".into(),
        "Top left would have been better".into(),
        "The light-blue squares are high valued".into(),
        "I think Yellow is bad".into(),
        "Keep it up excellent".into(),
    ];
    let count = |form| -> usize { form_filter(&corpus, form, &d.classifier).unwrap().iter().map(|r| r.messages.len()).sum() };
    assert_eq!(count(FeedbackForm::Evaluative), 2);
    assert_eq!(count(FeedbackForm::Imperative), 1);
    assert_eq!(count(FeedbackForm::Descriptive), 2);

    let evaluative_only: Vec<_> = corpus.iter().map(|r| crate::corpus::EpisodeRecord { messages: vec!["good job".into()], ..r.clone() }).collect();
    assert!(form_filter(&evaluative_only, FeedbackForm::Descriptive, &d.classifier).unwrap().is_empty());
}

#[test]
fn result_files_and_summary() {
    let h = harness();
    let r = h.closed_loop(LearnerKind::Literal, oracle(), &[1, 2], None).unwrap();
    let mut buf = Vec::new();
    r.write_jsonl(&mut buf).unwrap();
    let lines: Vec<ResultRecord> = String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines, r.records);
    let mut offline = r.clone();
    offline.condition = "offline".into();
    let table = summary_table(&[offline]);
    assert!(table.starts_with("model,offline,all,eval,desc,imp\nliteral,"));
}

#[test]
fn augmentation_preserves_sampling_inputs() {
    let (_, corpus, table, _, _) = sampling_setup(ProtocolConfig::default());
    let d = Decomposer::shared();
    for r in augment_all(&corpus[..10], &d.lexicon).unwrap() {
        r.validate(&table).unwrap();
    }
}
