//! Detection-style evaluation: greedy rotated-IoU matching, all-point AP,
//! angle-error statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{circumscribed_hbox, rbox_iou, RBox};
use crate::recovery::{angle_error, is_flipped};
use crate::views_assign::SceneObject;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Stable identifier used to break score ties; for simulator output it
    /// is the id of the object that produced the detection.
    pub id: u32,
    pub rbox: RBox,
    pub score: f64,
    pub class_id: u32,
}

pub const AP_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class_id: u32,
    pub num_gt: usize,
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleSummary {
    pub count: usize,
    pub median_deg: f64,
    pub p95_deg: f64,
    pub mean_deg: f64,
    pub flip_fraction: f64,
    pub flip_defined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub per_class: Vec<ClassAp>,
    pub angle: AngleSummary,
}

impl EvalResult {
    pub fn class(&self, class_id: u32) -> Option<&ClassAp> {
        self.per_class.iter().find(|c| c.class_id == class_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Replace detections of circular classes by their circumscribed box.
    pub s2_circular: bool,
    pub flip_tau_deg: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { s2_circular: false, flip_tau_deg: 5.0 }
    }
}

/// All-point interpolated area under the precision/recall curve.
fn all_point_ap(tp: &[bool], num_gt: usize) -> f64 {
    if num_gt == 0 || tp.is_empty() {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(tp.len() + 2);
    let mut precision = Vec::with_capacity(tp.len() + 2);
    recall.push(0.0);
    precision.push(0.0);
    let mut hits = 0usize;
    for (k, &t) in tp.iter().enumerate() {
        if t {
            hits += 1;
        }
        recall.push(hits as f64 / num_gt as f64);
        precision.push(hits as f64 / (k + 1) as f64);
    }
    recall.push(1.0);
    precision.push(0.0);
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    (1..recall.len())
        .map(|i| (recall[i] - recall[i - 1]) * precision[i])
        .sum()
}

fn sorted_by_score(dets: &[&Detection]) -> Vec<Detection> {
    let mut v: Vec<Detection> = dets.iter().map(|d| **d).collect();
    v.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    v
}

fn class_ap(dets: &[&Detection], gts: &[&SceneObject], thresh: f64) -> f64 {
    let dets = sorted_by_score(dets);
    let mut matched = vec![false; gts.len()];
    let tp: Vec<bool> = dets
        .iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if matched[j] {
                    continue;
                }
                let iou = rbox_iou(&d.rbox, &g.gt_rbox);
                if iou >= thresh && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((j, iou));
                }
            }
            match best {
                Some((j, _)) => {
                    matched[j] = true;
                    true
                }
                None => false,
            }
        })
        .collect();
    all_point_ap(&tp, gts.len())
}

fn classes(gts: &[SceneObject]) -> BTreeSet<u32> {
    gts.iter().map(|g| g.class_id).collect()
}

/// AP at one IoU threshold, averaged over the classes present in `gts`.
pub fn match_and_ap(dets: &[Detection], gts: &[SceneObject], iou_thresh: f64) -> f64 {
    let cls = classes(gts);
    if cls.is_empty() {
        return 0.0;
    }
    let total: f64 = cls
        .iter()
        .map(|&c| {
            let d: Vec<&Detection> = dets.iter().filter(|d| d.class_id == c).collect();
            let g: Vec<&SceneObject> = gts.iter().filter(|g| g.class_id == c).collect();
            class_ap(&d, &g, iou_thresh)
        })
        .sum();
    total / cls.len() as f64
}

/// Output substitution for isotropic classes: the circumscribed box read as
/// an axis-aligned rotated box.
pub fn hbox_output(rbox: &RBox) -> RBox {
    RBox::from_hbox(&circumscribed_hbox(rbox))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

pub fn angle_summary(pairs: &[(RBox, RBox)], tau_deg: f64) -> AngleSummary {
    let mut errs: Vec<f64> = pairs.iter().map(|(p, g)| angle_error(p, g)).collect();
    errs.sort_by(f64::total_cmp);
    let flips: Vec<bool> = pairs.iter().filter_map(|(p, g)| is_flipped(p, g, tau_deg).ok()).collect();
    let flipped = flips.iter().filter(|f| **f).count();
    AngleSummary {
        count: errs.len(),
        median_deg: percentile(&errs, 0.5),
        p95_deg: percentile(&errs, 0.95),
        mean_deg: if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / errs.len() as f64 },
        flip_fraction: if flips.is_empty() { 0.0 } else { flipped as f64 / flips.len() as f64 },
        flip_defined: flips.len(),
    }
}

pub fn evaluate(dets: &[Detection], gts: &[SceneObject], cfg: &EvalConfig) -> EvalResult {
    let circular: BTreeSet<u32> = gts.iter().filter(|g| g.circular).map(|g| g.class_id).collect();
    let dets: Vec<Detection> = dets
        .iter()
        .map(|d| {
            if cfg.s2_circular && circular.contains(&d.class_id) {
                Detection { rbox: hbox_output(&d.rbox), ..*d }
            } else {
                *d
            }
        })
        .collect();

    let per_class: Vec<ClassAp> = classes(gts)
        .into_iter()
        .map(|c| {
            let d: Vec<&Detection> = dets.iter().filter(|d| d.class_id == c).collect();
            let g: Vec<&SceneObject> = gts.iter().filter(|g| g.class_id == c).collect();
            let aps: Vec<f64> = AP_THRESHOLDS.iter().map(|&t| class_ap(&d, &g, t)).collect();
            ClassAp {
                class_id: c,
                num_gt: g.len(),
                ap: aps.iter().sum::<f64>() / aps.len() as f64,
                ap50: aps[0],
                ap75: aps[5],
            }
        })
        .collect();
    let mean = |f: fn(&ClassAp) -> f64| {
        if per_class.is_empty() {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / per_class.len() as f64
        }
    };

    let by_id: BTreeMap<u32, &SceneObject> = gts.iter().map(|g| (g.id, g)).collect();
    let pairs: Vec<(RBox, RBox)> = dets
        .iter()
        .filter_map(|d| by_id.get(&d.id).filter(|g| !g.circular).map(|g| (d.rbox, g.gt_rbox)))
        .collect();

    EvalResult {
        ap: mean(|c| c.ap),
        ap50: mean(|c| c.ap50),
        ap75: mean(|c| c.ap75),
        angle: angle_summary(&pairs, cfg.flip_tau_deg),
        per_class,
    }
}
