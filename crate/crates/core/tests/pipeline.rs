use std::sync::Arc;

use langreward::corpus::{augment_all, export, ingest, level_table, make_splits};
use langreward::harness::{train_plan, Config, Harness, LearnerKind, TeacherConfig, TeacherPolicy};
use langreward::neural::InferenceNet;
use langreward::world::{generate_levels, read_levels, write_levels, LevelConfig};

#[test]
fn files_roundtrip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let levels = generate_levels(0, 10, 3, &LevelConfig::default()).unwrap();
    let lp = dir.path().join("levels.jsonl");
    write_levels(&lp, &levels).unwrap();
    assert_eq!(read_levels(&lp).unwrap(), levels);

    let h = Harness::new(Config::default()).unwrap();
    let records = h.synthetic_corpus(5, TeacherConfig::default(), &levels, 3).unwrap();
    let ep = dir.path().join("episodes.jsonl");
    export(&ep, &records).unwrap();
    assert_eq!(ingest(&ep, &level_table(levels)).unwrap(), records);
}

#[test]
fn offline_replay_learns_from_oracle_corpus() {
    let h = Harness::new(Config::default()).unwrap();
    let levels = generate_levels(0, 10, 4, &LevelConfig::default()).unwrap();
    let table = level_table(levels.clone());
    let records = h.synthetic_corpus(20, TeacherConfig::default(), &levels, 4).unwrap();
    for kind in [LearnerKind::Literal, LearnerKind::Pragmatic] {
        let r = h.replay_corpus(kind, &records, &table, None, &[], 4).unwrap();
        assert_eq!(r.per_episode.len(), 10);
        assert!(r.per_episode[9] > r.per_episode[0] + 30.0, "{kind}: {:?}", r.per_episode);
    }
}

#[test]
fn trained_net_drives_a_neural_replay() {
    let mut config = Config::default();
    config.net.max_epochs = 5;
    let h = Harness::new(config.clone()).unwrap();
    let levels = generate_levels(0, 10, 5, &LevelConfig::default()).unwrap();
    let table = level_table(levels.clone());
    let teacher = TeacherConfig { policy: TeacherPolicy::Mixed(0.5), ..TeacherConfig::default() };
    let records = h.synthetic_corpus(20, teacher, &levels, 5).unwrap();
    let augmented = augment_all(&records, &h.decomposer.lexicon).unwrap();
    let plans = make_splits(&augmented, 5).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut nets = Vec::new();
    for plan in &plans {
        let report = train_plan(&augmented, plan, &table, &config, 5).unwrap();
        assert!(report.val_loss[report.best_epoch] <= report.val_loss[0]);
        let path = dir.path().join(format!("net-fold{}.json", plan.fold_id));
        report.net.save(&path).unwrap();
        let loaded = InferenceNet::load(&path).unwrap();
        assert_eq!(loaded, report.net);
        nets.push(Arc::new(loaded));
    }
    let r = h.replay_corpus(LearnerKind::Neural, &records, &table, Some(&plans), &nets, 5).unwrap();
    assert_eq!(r.records.len(), records.len());
    assert!(r.mean.is_finite());
}

#[test]
fn config_file_changes_the_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "[belief]\nprior_variance = 16.0\n").unwrap();
    let c = Config::load(&p).unwrap();
    assert_eq!(c.belief.prior_variance, 16.0);
    assert_ne!(c.fingerprint(), Config::default().fingerprint());
    std::fs::write(&p, "[belief]\nprior_variance = -1.0\n").unwrap();
    assert!(Config::load(&p).is_err());
}
