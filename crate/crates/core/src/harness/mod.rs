//! Experiment runner: scripted teachers, learner handles, closed-loop play,
//! offline replay, interaction sampling and result files.

mod config;
mod eval;
mod learner;
mod teacher;

pub use config::{BeliefConfig, Config, LexiconPaths, ProtocolConfig};
pub use eval::{
    form_condition, form_filter, games, net_examples, replay_experiment, summary_table, train_plan, write_results,
    EvalResult, Harness, ResultRecord,
};
pub use learner::{LearnerBelief, LearnerHandle, LearnerKind, ObserveTrace};
pub use teacher::{AfterExhaustion, MentionOrder, SyntheticTeacher, TeacherConfig, TeacherPolicy, ValenceStyle};

#[cfg(test)]
mod tests;
