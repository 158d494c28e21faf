//! Rotated-box recovery from horizontal-box supervision.
//!
//! A desk-scale laboratory for the two-view weakly/self-supervised scheme:
//! exact box geometry, feasibility analysis of the circumscribed-rectangle
//! equations, the loss family, view generation with label re-assignment, a
//! gradient-descent recovery simulator and detection-style evaluation.

pub mod autodiff;
pub mod constraint_lab;
pub mod eval_metrics;
pub mod geometry;
pub mod losses;
pub mod recovery;
pub mod selfcheck;
pub mod views_assign;

pub use constraint_lab::{
    analytic_two_solutions, enumerate_feasible, solve_wh_given_theta, Classification, ConstraintError,
    ConstraintProblem, ConstraintSet, EnumerateOptions, SolutionSet,
};
pub use eval_metrics::{evaluate, match_and_ap, Detection, EvalConfig, EvalResult};
pub use geometry::{
    angle_normalize, circumscribed_hbox, hbox_iou, rbox_corners, rbox_iou, rotate_point, rotate_rbox,
    symmetric_rbox, GeometryError, HBox, Point, Polygon, RBox, ViewRotation,
};
pub use losses::{LossBreakdown, LossWeights, Prediction, Target};
pub use recovery::{
    ablate, angle_error, is_flipped, run_recovery, AblationTable, Assigner, RecoveryConfig, RecoveryError,
    RecoveryReport,
};
pub use views_assign::{generate_scene, generate_view_pair, BorderMode, SceneGenConfig, SceneObject, SceneSpec, ViewPair};
