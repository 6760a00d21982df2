//! The collection game: objects with latent values spread over four corners,
//! reward functions that mask values behind colors and shapes, and the
//! 124-arm trajectory choice the learner makes each episode.

mod class;
mod level;
mod reward;
mod trajectory;

pub use class::{Color, Corner, LatentCell, Magnitude, ObjectClass, Shape, Sign};
pub use level::{
    generate_level, generate_levels, mask, read_levels, write_levels, LearnerView, Level, LevelConfig,
    MaskedObject, TeacherObject, TeacherView, WorldObject, OBJECTS_PER_CORNER, OBJECTS_PER_LEVEL,
};
pub use reward::{CellTable, Interval, RewardFunction, NUM_REWARD_FUNCTIONS, PERMUTATIONS};
pub use trajectory::{
    best_trajectory, enumerate_trajectories, feature_counts, normalized_score, trajectory_counts,
    trajectory_value, true_value, Trajectory, TRAJECTORIES_PER_CORNER, TRAJECTORIES_PER_LEVEL,
};
