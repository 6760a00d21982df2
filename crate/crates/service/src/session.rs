//! The per-session state machine. Nothing here knows about HTTP.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use langreward::corpus::EpisodeRecord;
use langreward::features::FeatureVector;
use langreward::feedback::UtteranceParse;
use langreward::harness::{Harness, LearnerBelief, LearnerHandle, LearnerKind, ObserveTrace};
use langreward::neural::InferenceNet;
use langreward::rng;
use langreward::world::{
    normalized_score, true_value, Color, Corner, LearnerView, Level, RewardFunction, Shape, TeacherView, Trajectory,
    NUM_REWARD_FUNCTIONS,
};
use langreward::belief::AppliedUpdate;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const LEVELS_PER_SESSION: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{op} is not allowed in phase {phase:?}")]
    Phase { op: &'static str, phase: Phase },
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] langreward::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Acting,
    AwaitingFeedback,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted,
    LearnerActed,
    FeedbackReceived,
    BeliefUpdated,
    EpisodeAdvanced,
    SessionFinished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Milliseconds since the Unix epoch, never decreasing within a session.
    pub timestamp_ms: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    pub model: Option<LearnerKind>,
    pub rf_id: Option<u32>,
    pub seed: u64,
    pub teacher_id: Option<String>,
}

/// One collected object, in pickup order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pickup {
    pub object_id: u32,
    pub corner: Corner,
    pub color: Color,
    pub shape: Shape,
    pub value: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActResponse {
    pub episode_index: u32,
    pub trajectory: Trajectory,
    pub pickups: Vec<Pickup>,
    pub score: i64,
    pub normalized_score: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub episode_index: u32,
    pub parses: Vec<UtteranceParse>,
    pub applied: Vec<AppliedUpdate>,
    pub net_output: Option<FeatureVector>,
    pub mean_before: FeatureVector,
    pub mean_after: FeatureVector,
    pub phase: Phase,
    pub total_score: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefView {
    pub mean: FeatureVector,
    pub std: FeatureVector,
    pub state: LearnerBelief,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub model: LearnerKind,
    pub seed: u64,
    pub phase: Phase,
    /// 1-based; stays at 10 once finished.
    pub episode_index: u32,
    pub level_ids: Vec<u32>,
    pub teacher_view: TeacherView,
    pub learner_view: LearnerView,
    pub last_trajectory: Option<Trajectory>,
    pub belief: BeliefView,
    pub scores: Vec<i64>,
    pub normalized_scores: Vec<f64>,
    pub total_score: i64,
    pub mean_normalized_score: Option<f64>,
    pub transcript: Vec<SessionEvent>,
}

/// Shared, read-only inputs for sessions.
pub struct SessionContext {
    pub harness: Harness,
    /// Sessions play 10 of these. With exactly 10 they are played in order.
    pub experiment_levels: Vec<Level>,
    pub net: Option<Arc<InferenceNet>>,
}

pub struct Session {
    pub id: String,
    pub model: LearnerKind,
    pub seed: u64,
    pub teacher_id: String,
    rf: RewardFunction,
    levels: Vec<Level>,
    learner: LearnerHandle,
    phase: Phase,
    /// 0-based index into `levels`.
    episode: usize,
    last_trajectory: Option<Trajectory>,
    scores: Vec<i64>,
    normalized: Vec<f64>,
    events: Vec<SessionEvent>,
    records: Vec<EpisodeRecord>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Session {
    pub fn create(id: String, req: &CreateSession, ctx: &SessionContext) -> Result<Self, SessionError> {
        let model = req.model.unwrap_or(LearnerKind::Pragmatic);
        let rf_id = match req.rf_id {
            Some(id) => id,
            None => rng::stream(req.seed, &[0x5E55, 0]).random_range(0..NUM_REWARD_FUNCTIONS),
        };
        let rf = RewardFunction::from_id(rf_id)?;
        if ctx.experiment_levels.len() < LEVELS_PER_SESSION {
            return Err(SessionError::BadRequest(format!(
                "need {LEVELS_PER_SESSION} experiment levels, have {}",
                ctx.experiment_levels.len()
            )));
        }
        let levels = if ctx.experiment_levels.len() == LEVELS_PER_SESSION {
            ctx.experiment_levels.clone()
        } else {
            let mut r = rng::stream(req.seed, &[0x5E55, 1]);
            let mut idx = sample(&mut r, ctx.experiment_levels.len(), LEVELS_PER_SESSION).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| ctx.experiment_levels[i].clone()).collect()
        };
        let learner = ctx.harness.learner(model, ctx.net.clone(), rng::derive(req.seed, &[0x5E55, 2]))?;
        let mut s = Session {
            id,
            model,
            seed: req.seed,
            teacher_id: req.teacher_id.clone().unwrap_or_else(|| "live".into()),
            rf,
            levels,
            learner,
            phase: Phase::Acting,
            episode: 0,
            last_trajectory: None,
            scores: Vec::new(),
            normalized: Vec::new(),
            events: Vec::new(),
            records: Vec::new(),
        };
        let payload = serde_json::json!({
            "session_id": s.id,
            "model": model,
            "rf_id": rf.id,
            "seed": s.seed,
            "level_ids": s.levels.iter().map(|l| l.level_id).collect::<Vec<_>>(),
        });
        s.push(EventKind::SessionStarted, payload);
        Ok(s)
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn rf(&self) -> RewardFunction {
        self.rf
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn records(&self) -> &[EpisodeRecord] {
        &self.records
    }

    pub fn learner(&self) -> &LearnerHandle {
        &self.learner
    }

    fn push(&mut self, kind: EventKind, payload: serde_json::Value) -> &SessionEvent {
        let last = self.events.last().map(|e| e.timestamp_ms).unwrap_or(0);
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent { seq, timestamp_ms: now_ms().max(last), kind, payload });
        self.events.last().expect("just pushed")
    }

    fn level(&self) -> &Level {
        &self.levels[self.episode]
    }

    pub fn act(&mut self) -> Result<ActResponse, SessionError> {
        if self.phase != Phase::Acting {
            return Err(SessionError::Phase { op: "act", phase: self.phase });
        }
        let ep = self.episode as u32 + 1;
        let level = self.level().clone();
        let tau = self.learner.act(&level, &self.rf, &[ep as u64])?;
        let score = true_value(&tau, &level);
        let normalized = normalized_score(&tau, &level)?;
        let pickups = tau
            .objects(&level)
            .map(|o| {
                let c = o.class(&self.rf);
                Pickup { object_id: o.object_id, corner: o.corner, color: c.color, shape: c.shape, value: o.value }
            })
            .collect();
        self.scores.push(score);
        self.normalized.push(normalized);
        self.last_trajectory = Some(tau.clone());
        self.phase = Phase::AwaitingFeedback;
        let resp = ActResponse { episode_index: ep, trajectory: tau, pickups, score, normalized_score: normalized, phase: self.phase };
        self.push(EventKind::LearnerActed, serde_json::to_value(&resp).expect("serializable"));
        Ok(resp)
    }

    /// Feedback on the learner's own action this episode. An empty list
    /// advances without updating.
    pub fn feedback(&mut self, messages: &[String]) -> Result<FeedbackResponse, SessionError> {
        if self.phase != Phase::AwaitingFeedback {
            return Err(SessionError::Phase { op: "feedback", phase: self.phase });
        }
        let ep = self.episode as u32 + 1;
        let level = self.level().clone();
        let tau = self.last_trajectory.clone().expect("acted before feedback");
        self.push(EventKind::FeedbackReceived, serde_json::json!({ "episode_index": ep, "messages": messages }));
        let trace: ObserveTrace = self.learner.observe(messages, &tau, &level, &self.rf)?;
        self.records.push(EpisodeRecord {
            teacher_id: self.teacher_id.clone(),
            pair_id: self.id.clone(),
            episode_index: ep,
            level_id: level.level_id,
            reward_fn_id: self.rf.id,
            trajectory: tau.clone(),
            messages: messages.to_vec(),
            score: *self.scores.last().expect("acted"),
            bonus_visible: true,
        });
        let belief = self.belief_view();
        self.push(
            EventKind::BeliefUpdated,
            serde_json::json!({
                "episode_index": ep,
                "parses": trace.parses,
                "applied": trace.applied,
                "net_output": trace.net_output,
                "belief": belief,
            }),
        );
        if self.episode + 1 == self.levels.len() {
            self.phase = Phase::Finished;
            let mean = self.mean_normalized();
            let total = self.total_score();
            self.push(EventKind::SessionFinished, serde_json::json!({ "total_score": total, "mean_normalized_score": mean }));
        } else {
            self.episode += 1;
            self.phase = Phase::Acting;
            let next = serde_json::json!({ "episode_index": self.episode + 1, "level_id": self.level().level_id });
            self.push(EventKind::EpisodeAdvanced, next);
        }
        Ok(FeedbackResponse {
            episode_index: ep,
            parses: trace.parses,
            applied: trace.applied,
            net_output: trace.net_output,
            mean_before: trace.mean_before,
            mean_after: trace.mean_after,
            phase: self.phase,
            total_score: self.total_score(),
        })
    }

    fn total_score(&self) -> i64 {
        self.scores.iter().sum()
    }

    fn mean_normalized(&self) -> Option<f64> {
        (!self.normalized.is_empty()).then(|| self.normalized.iter().sum::<f64>() / self.normalized.len() as f64)
    }

    fn belief_view(&self) -> BeliefView {
        BeliefView { mean: self.learner.mean(), std: self.learner.std_devs(), state: self.learner.belief() }
    }

    pub fn view(&self) -> SessionView {
        let level = self.level();
        SessionView {
            session_id: self.id.clone(),
            model: self.model,
            seed: self.seed,
            phase: self.phase,
            episode_index: self.episode as u32 + 1,
            level_ids: self.levels.iter().map(|l| l.level_id).collect(),
            teacher_view: level.teacher_view(&self.rf),
            learner_view: level.learner_view(&self.rf),
            last_trajectory: self.last_trajectory.clone(),
            belief: self.belief_view(),
            scores: self.scores.clone(),
            normalized_scores: self.normalized.clone(),
            total_score: self.total_score(),
            mean_normalized_score: self.mean_normalized(),
            transcript: self.events.clone(),
        }
    }
}
