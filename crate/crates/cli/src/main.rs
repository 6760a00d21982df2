use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use langreward::corpus::{
    augment_all, convert_csv, downsample_balance, export, form_statistics, ingest, level_table, make_splits,
    EpisodeRecord, LevelTable, SplitPlan,
};
use langreward::features::{FeatureVector, NUM_FEATURES};
use langreward::feedback::{read_labeled, templates, weighted_f1, FeedbackForm, FormClassifier};
use langreward::harness::{
    form_condition, form_filter, summary_table, train_plan, write_results, Config, EvalResult, Harness, LearnerKind,
    MentionOrder, TeacherConfig, TeacherPolicy, ValenceStyle,
};
use langreward::neural::{tokenize, InferenceNet};
use langreward::world::{generate_levels, read_levels, write_levels, Level, ObjectClass};
use langreward_service::{AppState, ServiceConfig, SessionContext};

#[derive(Parser)]
#[command(name = "langreward", version, about = "Reward learning from natural-language feedback")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML file overriding any default constant.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Main output file (or directory for train-net).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Literal,
    Pragmatic,
    Neural,
}

impl From<Model> for LearnerKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Literal => LearnerKind::Literal,
            Model::Pragmatic => LearnerKind::Pragmatic,
            Model::Neural => LearnerKind::Neural,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    All,
    Eval,
    Desc,
    Imp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Oracle,
    Evaluative,
    Imperative,
    Scaffolding,
    Mixed,
}

#[derive(Subcommand)]
enum Command {
    /// Generate valid levels.
    GenLevels {
        #[arg(long, default_value_t = 110)]
        count: u32,
        #[arg(long, default_value_t = 0)]
        first_id: u32,
    },
    /// Play scripted teachers against a stand-in learner and write an episode file.
    Simulate {
        #[arg(long)]
        levels: PathBuf,
        #[arg(long, default_value_t = 40)]
        teachers: usize,
        #[arg(long, value_enum, default_value_t = Policy::Oracle)]
        policy: Policy,
        /// Descriptive share for the mixed policy.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Closed-loop play against a scripted teacher over many seeds.
    ClosedLoop {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = Policy::Oracle)]
        policy: Policy,
        /// Teacher names classes by |weight| instead of descending weight.
        #[arg(long)]
        abs_order: bool,
        /// Teacher always says "good"/"bad".
        #[arg(long)]
        flat: bool,
        #[arg(long)]
        net: Option<PathBuf>,
    },
    /// Replay recorded games offline.
    Replay {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        /// Only this teacher's games.
        #[arg(long)]
        teacher: Option<String>,
        /// Directory written by train-net.
        #[arg(long)]
        nets: Option<PathBuf>,
    },
    /// Interaction sampling over a corpus.
    Sample {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        #[arg(long, value_enum, default_value_t = FormArg::All)]
        form: FormArg,
        #[arg(long)]
        nets: Option<PathBuf>,
    },
    /// Train one inference net per cross-validation fold.
    TrainNet {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        /// Comma-separated fold ids; all folds when absent.
        #[arg(long, value_delimiter = ',')]
        folds: Vec<u32>,
    },
    /// Train the feedback-form classifier.
    TrainClassifier {
        /// `{text, form}` lines; the templated set when absent.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Show an inference net's output for one utterance.
    Probe {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        text: String,
        /// Nine comma-separated trajectory counts in class order.
        #[arg(long, value_delimiter = ',')]
        counts: Vec<f64>,
    },
    /// Feedback-form statistics of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        /// Classifier written by train-classifier.
        #[arg(long)]
        classifier: Option<PathBuf>,
    },
    /// Convert a CSV export into an episode file.
    Convert {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        levels: PathBuf,
    },
    /// Run the live teaching service.
    Serve {
        #[arg(long)]
        levels: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Checkpoint for neural sessions.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn out_or(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn load_levels(path: &Path) -> Result<(Vec<Level>, LevelTable)> {
    let levels = read_levels(path).with_context(|| format!("reading levels {}", path.display()))?;
    Ok((levels.clone(), level_table(levels)))
}

fn load_corpus(path: &Path, levels: &LevelTable) -> Result<Vec<EpisodeRecord>> {
    ingest(path, levels).with_context(|| format!("reading corpus {}", path.display()))
}

fn teacher_config(policy: Policy, p: f64, noise: f64) -> TeacherConfig {
    let policy = match policy {
        Policy::Oracle => TeacherPolicy::DescriptiveOracle,
        Policy::Evaluative => TeacherPolicy::EvaluativeOnly,
        Policy::Imperative => TeacherPolicy::ImperativeOnly,
        Policy::Scaffolding => TeacherPolicy::Scaffolding,
        Policy::Mixed => TeacherPolicy::Mixed(p),
    };
    TeacherConfig { policy, noise, ..TeacherConfig::default() }
}

/// Nets and fold plans from a train-net directory.
fn load_nets(dir: &Path) -> Result<(Vec<Arc<InferenceNet>>, Vec<SplitPlan>)> {
    let plans: Vec<SplitPlan> = serde_json::from_slice(&std::fs::read(dir.join("plans.json"))?)
        .with_context(|| format!("reading {}/plans.json", dir.display()))?;
    let mut nets = Vec::new();
    for p in &plans {
        let path = dir.join(format!("net-fold{}.json", p.fold_id));
        if path.exists() {
            nets.push(Arc::new(InferenceNet::load(&path)?));
        }
    }
    Ok((nets, plans))
}

fn plans_for(records: &[EpisodeRecord], harness: &Harness, seed: u64) -> Result<Vec<SplitPlan>> {
    let augmented = augment_all(records, &harness.decomposer.lexicon)?;
    Ok(make_splits(&augmented, seed)?)
}

/// Experiment and test levels as the protocol config splits them.
fn test_panel(levels: &[Level], config: &Config) -> Vec<Level> {
    let mut test: Vec<Level> =
        levels.iter().filter(|l| l.level_id >= config.protocol.experiment_levels).cloned().collect();
    test.sort_by_key(|l| l.level_id);
    test.truncate(config.protocol.test_levels as usize);
    test
}

fn write_eval(out: &Path, results: &[EvalResult]) -> Result<()> {
    write_results(out, results)?;
    let mut table = summary_table(results);
    if !results.iter().any(|r| ["offline", "all", "eval", "desc", "imp"].contains(&r.condition.as_str())) {
        table = String::from("model,condition,mean\n");
        for r in results {
            table.push_str(&format!("{},{},{:.1}\n", r.model, r.condition, r.mean));
        }
    }
    let mut curves = String::from("model,condition,episode,mean_normalized_score\n");
    for r in results {
        let first = if r.condition == "offline" || r.condition == "closed_loop" { 1 } else { 0 };
        for (i, v) in r.per_episode.iter().enumerate() {
            curves.push_str(&format!("{},{},{},{v:.3}\n", r.model, r.condition, i + first));
        }
    }
    std::fs::write(summary_path(out), format!("{table}\n{curves}"))?;
    print!("{table}");
    println!("results: {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common;
    let config = Config::load_or_default(common.config.as_deref())?;
    let seed = common.seed;
    match cli.command {
        Command::GenLevels { count, first_id } => {
            let out = out_or(&common, "levels.jsonl");
            let levels = generate_levels(first_id, count, seed, &config.levels)?;
            write_levels(&out, &levels)?;
            println!("wrote {} levels to {}", levels.len(), out.display());
        }
        Command::Simulate { levels, teachers, policy, p, noise } => {
            let out = out_or(&common, "episodes.jsonl");
            let (levels, _) = load_levels(&levels)?;
            let mut experiment: Vec<Level> =
                levels.into_iter().filter(|l| l.level_id < config.protocol.experiment_levels).collect();
            experiment.sort_by_key(|l| l.level_id);
            if experiment.len() < 10 {
                bail!("need 10 experiment levels (ids below {}), found {}", config.protocol.experiment_levels, experiment.len());
            }
            let harness = Harness::new(config)?;
            let records = harness.synthetic_corpus(teachers, teacher_config(policy, p, noise), &experiment, seed)?;
            export(&out, &records)?;
            println!("wrote {} episodes from {teachers} teachers to {}", records.len(), out.display());
        }
        Command::ClosedLoop { model, runs, policy, abs_order, flat, net } => {
            let out = out_or(&common, "closed_loop.jsonl");
            let net = net.map(|p| InferenceNet::load(&p).map(Arc::new)).transpose()?;
            let mut teacher = teacher_config(policy, 0.5, 0.0);
            if abs_order {
                teacher.mention_order = MentionOrder::AbsWeight;
            }
            if flat {
                teacher.valence = ValenceStyle::Flat;
            }
            let harness = Harness::new(config)?;
            let seeds: Vec<u64> = (0..runs).map(|i| seed.wrapping_add(i)).collect();
            let r = harness.closed_loop(model.into(), teacher, &seeds, net)?;
            write_eval(&out, &[r])?;
        }
        Command::Replay { model, corpus, levels, teacher, nets } => {
            let out = out_or(&common, "replay.jsonl");
            let (_, table) = load_levels(&levels)?;
            let all = load_corpus(&corpus, &table)?;
            let harness = Harness::new(config)?;
            let kind: LearnerKind = model.into();
            let (nets, plans) = match &nets {
                Some(dir) => {
                    let (n, p) = load_nets(dir)?;
                    (n, Some(p))
                }
                None if kind == LearnerKind::Neural => bail!("--nets is required for the neural model"),
                None => (Vec::new(), None),
            };
            let records: Vec<EpisodeRecord> = match &teacher {
                Some(t) => all.into_iter().filter(|r| &r.teacher_id == t).collect(),
                None => all,
            };
            if records.is_empty() {
                match teacher {
                    Some(t) => bail!("no episodes for teacher {t:?}"),
                    None => bail!("corpus {} is empty", corpus.display()),
                }
            }
            let r = harness.replay_corpus(kind, &records, &table, plans.as_deref(), &nets, seed)?;
            write_eval(&out, &[r])?;
        }
        Command::Sample { model, corpus, levels, form, nets } => {
            let out = out_or(&common, "sample.jsonl");
            let (all_levels, table) = load_levels(&levels)?;
            let records = load_corpus(&corpus, &table)?;
            if records.is_empty() {
                bail!("corpus {} is empty", corpus.display());
            }
            let harness = Harness::new(config.clone())?;
            let kind: LearnerKind = model.into();
            let (nets, plans) = match &nets {
                Some(dir) => load_nets(dir)?,
                None if kind == LearnerKind::Neural => bail!("--nets is required for the neural model"),
                None => (Vec::new(), plans_for(&records, &harness, seed)?),
            };
            let (condition, subset) = match form {
                FormArg::All => ("all", records),
                FormArg::Eval | FormArg::Desc | FormArg::Imp => {
                    let f = match form {
                        FormArg::Eval => FeedbackForm::Evaluative,
                        FormArg::Desc => FeedbackForm::Descriptive,
                        _ => FeedbackForm::Imperative,
                    };
                    (form_condition(f), form_filter(&records, f, &harness.decomposer.classifier)?)
                }
            };
            if subset.is_empty() {
                bail!("no tuples of the requested form");
            }
            let test = test_panel(&all_levels, &config);
            let r = harness.interaction_sampling(kind, condition, &subset, &test, &table, &plans, &nets, seed)?;
            write_eval(&out, &[r])?;
        }
        Command::TrainNet { corpus, levels, folds } => {
            let out = out_or(&common, "nets");
            std::fs::create_dir_all(&out)?;
            let (_, table) = load_levels(&levels)?;
            let records = load_corpus(&corpus, &table)?;
            let harness = Harness::new(config.clone())?;
            // Plans cover every teacher, so replay and sampling can find a
            // fold for games that balancing dropped from training.
            let plans = plans_for(&records, &harness, seed)?;
            let augmented = augment_all(&downsample_balance(&records, seed), &harness.decomposer.lexicon)?;
            std::fs::write(out.join("plans.json"), serde_json::to_vec_pretty(&plans)?)?;
            let mut log = std::io::BufWriter::new(std::fs::File::create(out.join("train_log.jsonl"))?);
            println!("fold,best_epoch,train_loss,val_loss,vocab");
            for plan in plans.iter().filter(|p| folds.is_empty() || folds.contains(&p.fold_id)) {
                let report = train_plan(&augmented, plan, &table, &config, seed)?;
                report.net.save(&out.join(format!("net-fold{}.json", plan.fold_id)))?;
                let line = serde_json::json!({
                    "fold": plan.fold_id,
                    "best_epoch": report.best_epoch,
                    "train_loss": report.train_loss,
                    "val_loss": report.val_loss,
                });
                serde_json::to_writer(&mut log, &line)?;
                log.write_all(b"\n")?;
                println!(
                    "{},{},{:.4},{:.4},{}",
                    plan.fold_id,
                    report.best_epoch,
                    report.train_loss[report.best_epoch],
                    report.val_loss[report.best_epoch],
                    report.net.vocab.len()
                );
            }
            log.flush()?;
        }
        Command::TrainClassifier { labels } => {
            let out = out_or(&common, "classifier.json");
            let labeled = match &labels {
                Some(p) => read_labeled(p)?,
                None => templates::synthetic_labeled(seed, langreward::feedback::DEFAULT_TEMPLATES_PER_FORM),
            };
            // 5-fold estimate, then a final fit on everything.
            let k = 5;
            let (mut truth, mut pred) = (Vec::new(), Vec::new());
            for fold in 0..k {
                let train: Vec<_> = labeled.iter().enumerate().filter(|(i, _)| i % k != fold).map(|(_, x)| x.clone()).collect();
                let clf = FormClassifier::train(&train, &config.classifier)?;
                for (u, f) in labeled.iter().enumerate().filter(|(i, _)| i % k == fold).map(|(_, x)| x) {
                    truth.push(*f);
                    pred.push(clf.classify(u)?);
                }
            }
            let clf = FormClassifier::train(&labeled, &config.classifier)?;
            std::fs::write(&out, serde_json::to_vec(&clf)?)?;
            println!("examples,{}\nweighted_f1_5fold,{:.4}\nclassifier: {}", labeled.len(), weighted_f1(&truth, &pred), out.display());
        }
        Command::Probe { net, text, counts } => {
            let net = InferenceNet::load(&net)?;
            let mut n = FeatureVector::zeros();
            if !counts.is_empty() {
                if counts.len() != NUM_FEATURES {
                    bail!("--counts needs {NUM_FEATURES} values, got {}", counts.len());
                }
                n.0.copy_from_slice(&counts);
            }
            let w = net.forward(&tokenize(&text), &n);
            let rows: BTreeMap<String, f64> = ObjectClass::all().map(|c| (c.label(), w[c.index()])).collect();
            let body = serde_json::json!({ "text": text, "counts": n, "w_hat": w, "by_class": rows });
            match &common.out {
                Some(p) => std::fs::write(p, serde_json::to_vec_pretty(&body)?)?,
                None => {}
            }
            println!("class,w_hat");
            for c in ObjectClass::all() {
                println!("{},{:.3}", c.label(), w[c.index()]);
            }
        }
        Command::Stats { corpus, levels, classifier } => {
            let out = out_or(&common, "stats.json");
            let (_, table) = load_levels(&levels)?;
            let records = load_corpus(&corpus, &table)?;
            let clf = match classifier {
                Some(p) => serde_json::from_slice::<FormClassifier>(&std::fs::read(&p)?)?,
                None => Harness::new(config)?.decomposer.classifier.clone(),
            };
            let stats = form_statistics(&records, &clf)?;
            std::fs::write(&out, serde_json::to_vec_pretty(&stats)?)?;
            println!("episode,n,evaluative,imperative,descriptive,other");
            let row = |label: String, f: &langreward::corpus::FormFractions| {
                println!("{label},{},{:.3},{:.3},{:.3},{:.3}", f.episodes, f.evaluative, f.imperative, f.descriptive, f.other)
            };
            row("all".into(), &stats.overall);
            for (e, f) in &stats.by_episode {
                row(e.to_string(), f);
            }
        }
        Command::Convert { csv, levels } => {
            let out = out_or(&common, "episodes.jsonl");
            let (_, table) = load_levels(&levels)?;
            let records = convert_csv(&csv, &table)?;
            export(&out, &records)?;
            println!("wrote {} episodes to {}", records.len(), out.display());
        }
        Command::Serve { levels, addr, net, data_dir } => {
            let (levels, _) = load_levels(&levels)?;
            let mut experiment: Vec<Level> =
                levels.into_iter().filter(|l| l.level_id < config.protocol.experiment_levels).collect();
            experiment.sort_by_key(|l| l.level_id);
            let net = net.map(|p| InferenceNet::load(&p).map(Arc::new)).transpose()?;
            if let Some(d) = &data_dir {
                std::fs::create_dir_all(d)?;
            }
            let ctx = SessionContext { harness: Harness::new(config)?, experiment_levels: experiment, net };
            let state = AppState::new(ctx, ServiceConfig { data_dir });
            tokio::runtime::Runtime::new()?.block_on(langreward_service::serve(addr, state))?;
        }
    }
    Ok(())
}
