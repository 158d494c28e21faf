//! Gradient-descent recovery simulator.
//!
//! The detector is collapsed to free box parameters: one view-1 prediction
//! per object and one view-2 prediction per object and view slot. Each step
//! draws a fresh view rotation per slot, builds the per-object objective
//! (view-1 circumscribed IoU, optional view-2 circumscribed IoU, and the
//! consistency term against the transformed view-1 prediction) and takes a
//! plain gradient step. Sizes are optimized in log space.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Dual, Real};
use crate::eval_metrics::{evaluate, hbox_output, median, Detection, EvalConfig, EvalResult};
use crate::geometry::{
    angle_distance_mod_pi, angle_normalize, circumscribed_hbox, rbox_iou, rotate_point, rotate_rbox,
    symmetric_rbox, HBox, RBox, ViewRotation,
};
use crate::losses::{object_total_g, LossWeights, ObjectTerms};
use crate::views_assign::{
    assign_locations, dense_locations, kept_by_mode, o2m_sources, pad_valid, view2_gt_hbox, BorderMode,
    DeltaSampler, SceneError, SceneObject, SceneSpec,
};

const RMS_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("invalid recovery config: {0}")]
    InvalidConfig(String),
    #[error("scene has no objects to recover")]
    EmptyScene,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("flip undefined: ground truth lies within tau of an axis")]
pub struct FlipUndefined;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assigner {
    O2o,
    O2m,
}

impl fmt::Display for Assigner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::O2o => "o2o",
            Self::O2m => "o2m",
        })
    }
}

impl FromStr for Assigner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "o2o" => Ok(Self::O2o),
            "o2m" => Ok(Self::O2m),
            other => Err(format!("unknown assigner '{other}' (o2o|o2m)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Horizontal labels read as boxes at angle 0, plus noise.
    Horizontal,
    /// The mirror image of the ground truth (a stationary point of the
    /// weakly-supervised loss).
    Symmetric,
}

/// Update rule for the box parameters.
///
/// `Rms` divides each gradient component by its running RMS. On the
/// piecewise-smooth circumscribed-IoU objective this behaves much like sign
/// descent: every step has full length even at a kink, so it needs a larger
/// step to escape the symmetric solution and then also leaves the stationary
/// points of the WS-only loss. Plain descent is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Gd,
    Rms,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Gd => "gd",
            Optimizer::Rms => "rms",
        })
    }
}

impl FromStr for Optimizer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Optimizer::Gd),
            "rms" => Ok(Optimizer::Rms),
            other => Err(format!("unknown optimizer '{other}' (expected gd or rms)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoveryConfig {
    pub weights: LossWeights,
    pub steps: usize,
    /// Initial step; decays linearly to zero over `steps`.
    pub step_size: f64,
    pub optimizer: Optimizer,
    /// Decay of the running mean of squared gradients (RMS optimizer only).
    pub rms_decay: f64,
    pub num_views: usize,
    pub ss_enabled: bool,
    pub ws_on_view2: bool,
    pub assigner: Assigner,
    pub border_mode: BorderMode,
    pub s1_mask_circular: bool,
    pub s2_output_hbox_circular: bool,
    pub stop_grad_target: bool,
    pub seed: u64,
    pub init: InitMode,
    pub init_angle_noise_deg: f64,
    pub init_center_noise: f64,
    /// Spacing of the candidate-location grid used by one-to-many assignment.
    pub o2m_stride: f64,
    /// Half-width (degrees) of the excluded band around multiples of 90 degrees.
    pub delta_exclusion_deg: f64,
    pub flip_tau_deg: f64,
    /// Lower bound on w and h as a fraction of the scene side.
    pub size_floor_frac: f64,
    pub trace_every: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            steps: 1500,
            step_size: 0.3,
            optimizer: Optimizer::Gd,
            rms_decay: 0.99,
            num_views: 1,
            ss_enabled: true,
            ws_on_view2: true,
            assigner: Assigner::O2o,
            border_mode: BorderMode::Pad,
            s1_mask_circular: false,
            s2_output_hbox_circular: false,
            stop_grad_target: false,
            seed: 0,
            init: InitMode::Horizontal,
            init_angle_noise_deg: 5.0,
            init_center_noise: 0.0,
            o2m_stride: 2.0,
            delta_exclusion_deg: 2.0,
            flip_tau_deg: 5.0,
            size_floor_frac: 1e-3,
            trace_every: 50,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<(), RecoveryError> {
        let bad = |m: &str| Err(RecoveryError::InvalidConfig(m.to_string()));
        self.weights.validate().map_err(RecoveryError::InvalidConfig)?;
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return bad("rms_decay must lie in [0, 1)");
        }
        if self.num_views == 0 {
            return bad("num_views must be at least 1");
        }
        if !(self.o2m_stride.is_finite() && self.o2m_stride > 0.0) {
            return bad("o2m_stride must be positive");
        }
        if !(0.0..45.0).contains(&self.delta_exclusion_deg) {
            return bad("delta_exclusion_deg must lie in [0, 45)");
        }
        if !(self.size_floor_frac > 0.0 && self.size_floor_frac < 1.0) {
            return bad("size_floor_frac must lie in (0, 1)");
        }
        if self.init_angle_noise_deg < 0.0 || self.init_center_noise < 0.0 || self.flip_tau_deg < 0.0 {
            return bad("noise levels and tau must be non-negative");
        }
        if self.trace_every == 0 {
            return bad("trace_every must be positive");
        }
        Ok(())
    }
}

/// Angular error in degrees after matching edges, folded into `[0, 90]`.
///
/// Both boxes are put in `w >= h` form so the long edges are compared; for a
/// (near-)square prediction either edge may play that role.
pub fn angle_error(pred: &RBox, gt: &RBox) -> f64 {
    let p = pred.canonical();
    let g = gt.canonical();
    let mut d = angle_distance_mod_pi(p.theta, g.theta);
    if (p.w - p.h).abs() <= 1e-6 * p.w {
        d = d.min(angle_distance_mod_pi(p.theta + FRAC_PI_2, g.theta));
    }
    d.to_degrees()
}

/// Whether `pred` sits closer to the mirror image of `gt` than to `gt`.
pub fn is_flipped(pred: &RBox, gt: &RBox, tau_deg: f64) -> Result<bool, FlipUndefined> {
    let g = gt.canonical();
    let off_axis = g.theta.abs().min(FRAC_PI_2 - g.theta.abs()).to_degrees();
    if off_axis <= tau_deg {
        return Err(FlipUndefined);
    }
    Ok(angle_error(pred, &symmetric_rbox(gt)) < angle_error(pred, gt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub object_id: u32,
    pub class_id: u32,
    pub circular: bool,
    pub gt: RBox,
    /// Raw view-1 prediction.
    pub pred: RBox,
    /// Reported output (circumscribed box for circular objects under S2).
    pub output: RBox,
    pub angle_err_deg: f64,
    pub flipped: Option<bool>,
    pub iou: f64,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
}

impl ObjectOutcome {
    pub fn score(&self) -> f64 {
        1.0 / (1.0 + self.final_loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub objects: usize,
    pub dropped: usize,
    /// Non-circular objects entering the angle statistics.
    pub oriented: usize,
    pub median_angle_err_deg: f64,
    pub p95_angle_err_deg: f64,
    pub frac_under_3deg: f64,
    pub flip_fraction: f64,
    pub flip_defined: usize,
    pub mean_iou: f64,
    pub final_mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub config: RecoveryConfig,
    pub summary: RecoverySummary,
    pub objects: Vec<ObjectOutcome>,
    pub dropped_ids: Vec<u32>,
    /// `(step, mean per-object loss)`.
    pub loss_curve: Vec<(usize, f64)>,
    pub diverged_at: Option<usize>,
}

impl RecoveryReport {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Raw predictions as scored detections.
    pub fn detections(&self) -> Vec<Detection> {
        self.objects
            .iter()
            .map(|o| Detection { id: o.object_id, rbox: o.pred, score: o.score(), class_id: o.class_id })
            .collect()
    }

    pub fn evaluate(&self, gts: &[SceneObject]) -> EvalResult {
        let cfg = EvalConfig {
            s2_circular: self.config.s2_output_hbox_circular,
            flip_tau_deg: self.config.flip_tau_deg,
        };
        evaluate(&self.detections(), gts, &cfg)
    }
}

type Params = [f64; 5];

fn params_box(p: &Params) -> RBox {
    RBox::from_parts(p[0], p[1], p[2].exp(), p[3].exp(), p[4])
}

fn box_params(b: &RBox) -> Params {
    [b.cx, b.cy, b.w.ln(), b.h.ln(), b.theta]
}

fn hbox_params(b: &HBox, theta: f64) -> Params {
    [b.cx, b.cy, b.w.ln(), b.h.ln(), theta]
}

fn to_box_g<T: Real>(p: [T; 5], floor: f64) -> [T; 5] {
    let f = T::cst(floor);
    [p[0], p[1], p[2].exp().max(f), p[3].exp().max(f), p[4]]
}

/// Carries a view-2 prediction from one rotated frame to another.
fn transport(q: &Params, from: f64, to: f64, center: crate::geometry::Point) -> Params {
    let v = ViewRotation::new(to - from, center);
    let c = rotate_point(crate::geometry::Point::new(q[0], q[1]), &v);
    [c.x, c.y, q[2], q[3], q[4] + (to - from)]
}

struct Problem<'a> {
    cfg: &'a RecoveryConfig,
    objects: Vec<&'a SceneObject>,
    gt_view1: Vec<HBox>,
    /// Index of the object whose view-1 prediction is each object's target.
    source: Vec<usize>,
    side: f64,
    floor: f64,
}

struct Contribution {
    loss: f64,
    own: Params,
    q: Vec<Params>,
    src: Vec<(usize, Params)>,
}

impl Problem<'_> {
    fn terms(&self, i: usize, k: usize, rot: &ViewRotation) -> ObjectTerms {
        let obj = self.objects[i];
        let valid = match self.cfg.border_mode {
            BorderMode::Crop => true,
            BorderMode::Pad => pad_valid(obj, rot, self.side),
        };
        let masked = obj.circular && self.cfg.s1_mask_circular;
        ObjectTerms {
            gt_view1: (k == 0).then_some(self.gt_view1[i]),
            gt_view2: (self.cfg.ws_on_view2 && valid).then(|| view2_gt_hbox(obj, rot)),
            rotation: *rot,
            view2_scale: 1.0 / self.cfg.num_views as f64,
            ss_enabled: self.cfg.ss_enabled && valid && !masked,
        }
    }

    fn value(&self, i: usize, p1: &[Params], q: &[Vec<Params>], rots: &[ViewRotation]) -> f64 {
        let s = self.source[i];
        rots.iter()
            .enumerate()
            .map(|(k, rot)| {
                let t = self.terms(i, k, rot);
                let f = |p: &Params| to_box_g::<f64>(*p, self.floor);
                object_total_g(f(&p1[i]), f(&p1[s]), f(&q[i][k]), &t, &self.cfg.weights)
            })
            .sum()
    }

    fn gradient(&self, i: usize, p1: &[Params], q: &[Vec<Params>], rots: &[ViewRotation]) -> Contribution {
        let s = self.source[i];
        let mut out = Contribution { loss: 0.0, own: [0.0; 5], q: vec![[0.0; 5]; rots.len()], src: Vec::new() };
        let mut src_grad = [0.0; 5];
        for (k, rot) in rots.iter().enumerate() {
            let t = self.terms(i, k, rot);
            let own = Dual::<15>::vars(p1[i], 0);
            let qv = Dual::<15>::vars(q[i][k], 5);
            let target = if self.cfg.stop_grad_target {
                p1[s].map(Dual::constant)
            } else if s == i {
                own
            } else {
                Dual::<15>::vars(p1[s], 10)
            };
            let r = object_total_g(
                to_box_g(own, self.floor),
                to_box_g(target, self.floor),
                to_box_g(qv, self.floor),
                &t,
                &self.cfg.weights,
            );
            out.loss += r.v;
            for j in 0..5 {
                out.own[j] += r.d[j];
                out.q[k][j] += r.d[5 + j];
                src_grad[j] += r.d[10 + j];
            }
        }
        if s != i && !self.cfg.stop_grad_target {
            out.src.push((s, src_grad));
        }
        out
    }
}

fn object_rng(seed: u64, id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    rng
}

fn symmetric_noise(rng: &mut ChaCha8Rng, amp: f64) -> f64 {
    if amp > 0.0 {
        rng.random_range(-amp..amp)
    } else {
        0.0
    }
}

pub fn run_recovery(scene: &SceneSpec, cfg: &RecoveryConfig) -> Result<RecoveryReport, RecoveryError> {
    cfg.validate()?;
    scene.validate()?;
    let (kept, dropped): (Vec<&SceneObject>, Vec<&SceneObject>) = scene
        .objects
        .iter()
        .partition(|o| kept_by_mode(o, scene.side, cfg.border_mode));
    if kept.is_empty() {
        return Err(RecoveryError::EmptyScene);
    }
    let n = kept.len();
    let center = scene.center();
    let gt_view1: Vec<HBox> = kept.iter().map(|o| o.gt_hbox()).collect();

    let source = match cfg.assigner {
        Assigner::O2o => (0..n).collect(),
        Assigner::O2m => {
            let locs = dense_locations(scene.side, cfg.o2m_stride, cfg.seed);
            let owners = assign_locations(&locs, &gt_view1);
            o2m_sources(&locs, &owners, &gt_view1)
                .into_iter()
                .enumerate()
                .map(|(i, s)| s.unwrap_or(i))
                .collect()
        }
    };
    let problem = Problem {
        cfg,
        objects: kept.clone(),
        gt_view1,
        source,
        side: scene.side,
        floor: cfg.size_floor_frac * scene.side,
    };

    let sampler = DeltaSampler { exclusion: cfg.delta_exclusion_deg.to_radians() };
    let mut scene_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k_views = cfg.num_views;
    let mut deltas: Vec<f64> = (0..k_views).map(|_| sampler.sample(&mut scene_rng)).collect();

    let noise_a = cfg.init_angle_noise_deg.to_radians();
    let mut p1: Vec<Params> = Vec::with_capacity(n);
    let mut q: Vec<Vec<Params>> = Vec::with_capacity(n);
    for (i, obj) in kept.iter().enumerate() {
        let mut rng = object_rng(cfg.seed, obj.id);
        let jitter = |p: Params, rng: &mut ChaCha8Rng| -> Params {
            let cn = cfg.init_center_noise;
            [
                p[0] + symmetric_noise(rng, cn),
                p[1] + symmetric_noise(rng, cn),
                p[2],
                p[3],
                p[4] + symmetric_noise(rng, noise_a),
            ]
        };
        let own = match cfg.init {
            InitMode::Horizontal => jitter(hbox_params(&problem.gt_view1[i], 0.0), &mut rng),
            InitMode::Symmetric => box_params(&symmetric_rbox(&obj.gt_rbox)),
        };
        p1.push(own);
        let slots = deltas
            .iter()
            .map(|&d| {
                let rot = ViewRotation::new(d, center);
                match cfg.init {
                    InitMode::Horizontal => jitter(hbox_params(&view2_gt_hbox(obj, &rot), 0.0), &mut rng),
                    InitMode::Symmetric => box_params(&symmetric_rbox(&rotate_rbox(&obj.gt_rbox, &rot))),
                }
            })
            .collect();
        q.push(slots);
    }

    let log_floor = problem.floor.ln();
    let mut v1: Vec<Params> = vec![[0.0; 5]; n];
    let mut vq: Vec<Vec<Params>> = vec![vec![[0.0; 5]; k_views]; n];
    let mut traces: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut loss_curve = Vec::new();
    let mut diverged_at = None;
    let mut rots: Vec<ViewRotation> = deltas.iter().map(|&d| ViewRotation::new(d, center)).collect();

    for step in 0..cfg.steps {
        for k in 0..k_views {
            let new = sampler.sample(&mut scene_rng);
            for qi in q.iter_mut() {
                qi[k] = transport(&qi[k], deltas[k], new, center);
            }
            deltas[k] = new;
        }
        rots = deltas.iter().map(|&d| ViewRotation::new(d, center)).collect();

        let contributions: Vec<Contribution> =
            (0..n).into_par_iter().map(|i| problem.gradient(i, &p1, &q, &rots)).collect();

        let mut g1 = vec![[0.0; 5]; n];
        let mut total = 0.0;
        for (i, c) in contributions.iter().enumerate() {
            total += c.loss;
            for j in 0..5 {
                g1[i][j] += c.own[j];
            }
            for (s, g) in &c.src {
                for j in 0..5 {
                    g1[*s][j] += g[j];
                }
            }
        }
        if !total.is_finite() || g1.iter().flatten().any(|g| !g.is_finite()) {
            diverged_at = Some(step);
            break;
        }
        if step % cfg.trace_every == 0 {
            loss_curve.push((step, total / n as f64));
            for (t, c) in traces.iter_mut().zip(&contributions) {
                t.push(c.loss);
            }
        }

        let lr = cfg.step_size * (1.0 - step as f64 / cfg.steps as f64);
        let beta = cfg.rms_decay;
        let bias = 1.0 - beta.powi(step as i32 + 1);
        let update = |p: &mut Params, v: &mut Params, g: &Params| match cfg.optimizer {
            Optimizer::Gd => {
                for j in 0..5 {
                    p[j] -= lr * g[j];
                }
            }
            Optimizer::Rms => {
                for j in 0..5 {
                    v[j] = beta * v[j] + (1.0 - beta) * g[j] * g[j];
                    p[j] -= lr * g[j] / ((v[j] / bias).sqrt() + RMS_EPS);
                }
            }
        };
        for i in 0..n {
            update(&mut p1[i], &mut v1[i], &g1[i]);
            for (k, qk) in q[i].iter_mut().enumerate() {
                update(qk, &mut vq[i][k], &contributions[i].q[k]);
            }
            for p in std::iter::once(&mut p1[i]).chain(q[i].iter_mut()) {
                p[2] = p[2].max(log_floor);
                p[3] = p[3].max(log_floor);
            }
        }
        let representable = |p: &Params| p.iter().all(|v| v.is_finite()) && p[2].exp().is_finite() && p[3].exp().is_finite();
        if !p1.iter().chain(q.iter().flatten()).all(representable) {
            diverged_at = Some(step);
            break;
        }
    }

    let finals: Vec<f64> = (0..n).into_par_iter().map(|i| problem.value(i, &p1, &q, &rots)).collect();
    if diverged_at.is_none() && finals.iter().any(|v| !v.is_finite()) {
        diverged_at = Some(cfg.steps);
    }
    loss_curve.push((cfg.steps, finals.iter().sum::<f64>() / n as f64));

    let objects: Vec<ObjectOutcome> = kept
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let pred = params_box(&p1[i]);
            let output = if obj.circular && cfg.s2_output_hbox_circular { hbox_output(&pred) } else { pred };
            let mut trace = std::mem::take(&mut traces[i]);
            trace.push(finals[i]);
            ObjectOutcome {
                object_id: obj.id,
                class_id: obj.class_id,
                circular: obj.circular,
                gt: obj.gt_rbox,
                pred,
                output,
                angle_err_deg: angle_error(&pred, &obj.gt_rbox),
                flipped: if obj.circular { None } else { is_flipped(&pred, &obj.gt_rbox, cfg.flip_tau_deg).ok() },
                iou: if output.validate().is_ok() { rbox_iou(&output, &obj.gt_rbox) } else { 0.0 },
                final_loss: finals[i],
                loss_trace: trace,
            }
        })
        .collect();

    let summary = summarize(&objects, dropped.len());
    Ok(RecoveryReport {
        config: *cfg,
        summary,
        objects,
        dropped_ids: dropped.iter().map(|o| o.id).collect(),
        loss_curve,
        diverged_at,
    })
}

fn summarize(objects: &[ObjectOutcome], dropped: usize) -> RecoverySummary {
    let oriented: Vec<&ObjectOutcome> = objects.iter().filter(|o| !o.circular).collect();
    let mut errs: Vec<f64> = oriented.iter().map(|o| o.angle_err_deg).collect();
    errs.sort_by(f64::total_cmp);
    let p95 = if errs.is_empty() {
        f64::NAN
    } else {
        let pos = 0.95 * (errs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        errs[lo] + (errs[hi] - errs[lo]) * (pos - lo as f64)
    };
    let defined: Vec<bool> = oriented.iter().filter_map(|o| o.flipped).collect();
    let frac = |c: usize, n: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    RecoverySummary {
        objects: objects.len(),
        dropped,
        oriented: oriented.len(),
        median_angle_err_deg: median(&errs),
        p95_angle_err_deg: p95,
        frac_under_3deg: frac(errs.iter().filter(|e| **e < 3.0).count(), errs.len()),
        flip_fraction: frac(defined.iter().filter(|f| **f).count(), defined.len()),
        flip_defined: defined.len(),
        mean_iou: objects.iter().map(|o| o.iou).sum::<f64>() / objects.len().max(1) as f64,
        final_mean_loss: objects.iter().map(|o| o.final_loss).sum::<f64>() / objects.len().max(1) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub ss_enabled: bool,
    pub assigner: Assigner,
    pub border_mode: BorderMode,
    pub s1: bool,
    pub s2: bool,
    pub summary: RecoverySummary,
    pub eval: EvalResult,
    /// Mean AP over the classes that contain circular objects.
    pub circular_ap: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn find(&self, ss: bool, assigner: Assigner, mode: BorderMode, s1: bool, s2: bool) -> Option<&AblationRow> {
        self.rows.iter().find(|r| {
            r.ss_enabled == ss && r.assigner == assigner && r.border_mode == mode && r.s1 == s1 && r.s2 == s2
        })
    }
}

fn circular_ap(eval: &EvalResult, scene: &SceneSpec) -> Option<f64> {
    let classes: std::collections::BTreeSet<u32> =
        scene.objects.iter().filter(|o| o.circular).map(|o| o.class_id).collect();
    if classes.is_empty() {
        return None;
    }
    let aps: Vec<f64> = classes.iter().filter_map(|c| eval.class(*c)).map(|c| c.ap).collect();
    Some(aps.iter().sum::<f64>() / aps.len().max(1) as f64)
}

/// Runs the product of {SS on/off} x {O2O, O2M} x {crop, pad}, and for scenes
/// with circular objects additionally {S1 on/off} x {S2 on/off}, all with the
/// same seed. S2 only changes evaluation, so each training run is shared by
/// both S2 rows.
pub fn ablate(scene: &SceneSpec, base: &RecoveryConfig) -> Result<AblationTable, RecoveryError> {
    base.validate()?;
    let circ = scene.has_circular();
    let s1_values: &[bool] = if circ { &[false, true] } else { &[base.s1_mask_circular] };
    let s2_values: &[bool] = if circ { &[false, true] } else { &[base.s2_output_hbox_circular] };
    let mut rows = Vec::new();
    for ss in [true, false] {
        for assigner in [Assigner::O2o, Assigner::O2m] {
            for mode in [BorderMode::Crop, BorderMode::Pad] {
                for &s1 in s1_values {
                    let cfg = RecoveryConfig {
                        ss_enabled: ss,
                        assigner,
                        border_mode: mode,
                        s1_mask_circular: s1,
                        ..*base
                    };
                    let report = run_recovery(scene, &cfg)?;
                    for &s2 in s2_values {
                        let mut r = report.clone();
                        r.config.s2_output_hbox_circular = s2;
                        let eval = r.evaluate(&scene.objects);
                        rows.push(AblationRow {
                            ss_enabled: ss,
                            assigner,
                            border_mode: mode,
                            s1,
                            s2,
                            summary: r.summary,
                            circular_ap: circular_ap(&eval, scene),
                            eval,
                            diverged: r.diverged(),
                        });
                    }
                }
            }
        }
    }
    Ok(AblationTable { rows })
}

/// Angle in `[-pi/2, pi/2)` of the canonical (`w >= h`) form, in degrees.
pub fn canonical_theta_deg(b: &RBox) -> f64 {
    angle_normalize(b.canonical().theta).to_degrees()
}

/// Circumscribed box of a prediction, used as the horizontal output.
pub fn horizontal_output(b: &RBox) -> HBox {
    circumscribed_hbox(b)
}
