//! Loss family for the weakly- and self-supervised branches.
//!
//! Box-valued terms are written once over [`Real`] (see `*_g` functions) and
//! wrapped for plain `f64` use. Boxes in generic form are arrays:
//! `[cx, cy, w, h]` for horizontal boxes and `[cx, cy, w, h, theta]` for
//! rotated ones.

use serde::{Deserialize, Serialize};

use crate::autodiff::Real;
use crate::geometry::{HBox, Point, RBox, ViewRotation};

pub const PROB_CLAMP: f64 = 1e-7;
pub const IOU_FLOOR: f64 = 1e-6;
pub const CN_SUM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IouLossKind {
    /// `-ln(IoU)`
    #[default]
    NegLog,
    /// `1 - IoU`
    OneMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda: f64,
    pub iou_loss: IouLossKind,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 1.0,
            mu3: 1.0,
            gamma1: 0.15,
            gamma2: 1.0,
            lambda: 0.4,
            iou_loss: IouLossKind::NegLog,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.mu1, self.mu2, self.mu3, self.gamma1, self.gamma2, self.lambda];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(format!("loss weights must be finite and non-negative: {all:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub location: Point,
    pub rbox: RBox,
    pub class_probs: Vec<f64>,
    pub centerness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub location: Point,
    /// 0 is background.
    pub class_id: u32,
    pub centerness: f64,
    pub gt_hbox: HBox,
    pub target_rbox: Option<RBox>,
    pub valid: bool,
}

impl Target {
    pub fn is_positive(&self) -> bool {
        self.valid && self.class_id > 0
    }
}

// ---- generic kernels -------------------------------------------------------

pub fn hbox_iou_g<T: Real>(a: [T; 4], b: [T; 4]) -> T {
    let half = T::cst(0.5);
    let zero = T::cst(0.0);
    let ix = ((a[0] + half * a[2]).min(b[0] + half * b[2])
        - (a[0] - half * a[2]).max(b[0] - half * b[2]))
    .max(zero);
    let iy = ((a[1] + half * a[3]).min(b[1] + half * b[3])
        - (a[1] - half * a[3]).max(b[1] - half * b[3]))
    .max(zero);
    let inter = ix * iy;
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

pub fn iou_to_loss_g<T: Real>(iou: T, kind: IouLossKind) -> T {
    match kind {
        IouLossKind::NegLog => -(iou.max(T::cst(IOU_FLOOR))).ln(),
        IouLossKind::OneMinus => T::cst(1.0) - iou,
    }
}

pub fn circumscribed_dims_g<T: Real>(w: T, h: T, theta: T) -> (T, T) {
    let (s, c) = theta.sin_cos();
    let (c, s) = (c.abs(), s.abs());
    (w * c + h * s, w * s + h * c)
}

/// Horizontal circumscribed rectangle of a rotated box.
pub fn r2h_g<T: Real>(b: [T; 5]) -> [T; 4] {
    let (w, h) = circumscribed_dims_g(b[2], b[3], b[4]);
    [b[0], b[1], w, h]
}

/// Target transformation: center rotated about the view center, sizes kept,
/// angle advanced by the view rotation (left unnormalized; every consumer is
/// periodic in the angle).
pub fn rotate_rbox_g<T: Real>(b: [T; 5], v: &ViewRotation) -> [T; 5] {
    let (s, c) = v.delta_theta.sin_cos();
    let (s, c) = (T::cst(s), T::cst(c));
    let (xc, yc) = (T::cst(v.center.x), T::cst(v.center.y));
    let dx = b[0] - xc;
    let dy = b[1] - yc;
    [
        dx * c - dy * s + xc,
        dx * s + dy * c + yc,
        b[2],
        b[3],
        b[4] + T::cst(v.delta_theta),
    ]
}

pub fn l_xy_g<T: Real>(a: [T; 5], b: [T; 5]) -> T {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

pub fn l_wh_theta_g<T: Real>(a: [T; 5], b: [T; 5], kind: IouLossKind) -> T {
    let z = T::cst(0.0);
    let target = [z, z, a[2], a[3]];
    let direct = [z, z, b[2], b[3]];
    let swapped = [z, z, b[3], b[2]];
    let d = a[4] - b[4];
    let l1 = iou_to_loss_g(hbox_iou_g(target, direct), kind) + d.sin().abs();
    let l2 = iou_to_loss_g(hbox_iou_g(target, swapped), kind) + d.cos().abs();
    l1.min(l2)
}

pub fn ss_reg_loss_g<T: Real>(a: [T; 5], b: [T; 5], w: &LossWeights) -> T {
    T::cst(w.gamma1) * l_xy_g(a, b) + T::cst(w.gamma2) * l_wh_theta_g(a, b, w.iou_loss)
}

/// Regression part of the total loss for one object.
///
/// `ws` is the view-1 prediction, `target_src` the view-1 prediction used as
/// the consistency target (the same box under one-to-one assignment), `ss`
/// the view-2 prediction.
pub struct ObjectTerms {
    /// View-1 horizontal label; `None` leaves the view-1 term out.
    pub gt_view1: Option<HBox>,
    /// View-2 horizontal evidence for `ss`; `None` disables that term.
    pub gt_view2: Option<HBox>,
    pub rotation: ViewRotation,
    /// Scale applied to the view-2 terms (e.g. `1/K` with `K` view slots).
    pub view2_scale: f64,
    pub ss_enabled: bool,
}

pub fn hbox_array<T: Real>(b: &HBox) -> [T; 4] {
    [T::cst(b.cx), T::cst(b.cy), T::cst(b.w), T::cst(b.h)]
}

pub fn rbox_array<T: Real>(b: &RBox) -> [T; 5] {
    [T::cst(b.cx), T::cst(b.cy), T::cst(b.w), T::cst(b.h), T::cst(b.theta)]
}

pub fn object_total_g<T: Real>(
    ws: [T; 5],
    target_src: [T; 5],
    ss: [T; 5],
    terms: &ObjectTerms,
    w: &LossWeights,
) -> T {
    let mu3 = T::cst(w.mu3);
    let mut total = T::cst(0.0);
    if let Some(g1) = &terms.gt_view1 {
        total = mu3 * iou_to_loss_g(hbox_iou_g(r2h_g(ws), hbox_array(g1)), w.iou_loss);
    }
    let k = T::cst(terms.view2_scale);
    if let Some(g2) = &terms.gt_view2 {
        total = total + k * mu3 * iou_to_loss_g(hbox_iou_g(r2h_g(ss), hbox_array(g2)), w.iou_loss);
    }
    if terms.ss_enabled {
        let target = rotate_rbox_g(target_src, &terms.rotation);
        total = total + k * T::cst(w.lambda) * ss_reg_loss_g(target, ss, w);
    }
    total
}

// ---- scalar API ------------------------------------------------------------

pub fn iou_reg_loss(pred: &HBox, gt: &HBox) -> f64 {
    iou_reg_loss_with(pred, gt, IouLossKind::NegLog)
}

pub fn iou_reg_loss_with(pred: &HBox, gt: &HBox, kind: IouLossKind) -> f64 {
    iou_to_loss_g(hbox_iou_g(hbox_array::<f64>(pred), hbox_array(gt)), kind).max(0.0)
}

pub fn focal_loss(p: f64, is_positive: bool, alpha: f64, gamma: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if is_positive {
        -alpha * (1.0 - p).powf(gamma) * p.ln()
    } else {
        -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).ln()
    }
}

pub fn centerness_loss(cn_pred: f64, cn_target: f64) -> f64 {
    let p = cn_pred.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let t = cn_target.clamp(0.0, 1.0);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

pub fn l_xy(a: &RBox, b: &RBox) -> f64 {
    l_xy_g::<f64>(rbox_array(a), rbox_array(b))
}

pub fn l_wh_theta(a: &RBox, b: &RBox) -> f64 {
    l_wh_theta_with(a, b, IouLossKind::NegLog)
}

pub fn l_wh_theta_with(a: &RBox, b: &RBox, kind: IouLossKind) -> f64 {
    l_wh_theta_g::<f64>(rbox_array(a), rbox_array(b), kind).max(0.0)
}

pub fn ss_reg_loss(a: &RBox, b: &RBox, w: &LossWeights) -> f64 {
    ss_reg_loss_g::<f64>(rbox_array(a), rbox_array(b), w).max(0.0)
}

pub fn total_loss(ws: f64, ss: f64, w: &LossWeights) -> f64 {
    ws + w.lambda * ss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsComponents {
    pub cls: f64,
    pub cn: f64,
    pub reg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsLoss {
    /// Weighted components; `value` is their sum.
    pub components: WsComponents,
    pub value: f64,
    pub num_positives: usize,
    pub empty_positives: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsLoss {
    pub value: f64,
    pub num_positives: usize,
    pub empty_positives: bool,
}

pub const FOCAL_ALPHA: f64 = 0.25;
pub const FOCAL_GAMMA: f64 = 2.0;

/// Weakly-supervised loss over aligned prediction/target locations.
pub fn ws_loss(preds: &[Prediction], targets: &[Target], w: &LossWeights) -> WsLoss {
    assert_eq!(preds.len(), targets.len(), "predictions and targets must be aligned");
    let mut cls = 0.0;
    let mut cn = 0.0;
    let mut reg = 0.0;
    let mut cn_sum = 0.0;
    let mut n_pos = 0usize;
    for (p, t) in preds.iter().zip(targets) {
        if !t.valid {
            continue;
        }
        for (k, &prob) in p.class_probs.iter().enumerate() {
            let positive = t.class_id as usize == k + 1;
            cls += focal_loss(prob, positive, FOCAL_ALPHA, FOCAL_GAMMA);
        }
        if t.class_id > 0 {
            n_pos += 1;
            cn += centerness_loss(p.centerness, t.centerness);
            let r2h = crate::geometry::circumscribed_hbox(&p.rbox);
            reg += t.centerness * iou_reg_loss_with(&r2h, &t.gt_hbox, w.iou_loss);
            cn_sum += t.centerness;
        }
    }
    let npos = (n_pos as f64).max(1.0);
    let components = WsComponents {
        cls: w.mu1 * cls / npos,
        cn: w.mu2 * cn / npos,
        reg: w.mu3 * reg / cn_sum.max(CN_SUM_FLOOR),
    };
    WsLoss {
        components,
        value: components.cls + components.cn + components.reg,
        num_positives: n_pos,
        empty_positives: n_pos == 0,
    }
}

/// Self-supervised loss: centerness-weighted mean of the consistency term.
pub fn ss_loss(pairs: &[(Target, Prediction)], w: &LossWeights) -> SsLoss {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut n = 0usize;
    for (t, p) in pairs {
        let Some(target) = t.target_rbox.as_ref().filter(|_| t.is_positive()) else {
            continue;
        };
        num += t.centerness * ss_reg_loss(target, &p.rbox, w);
        den += t.centerness;
        n += 1;
    }
    if n == 0 {
        return SsLoss { value: 0.0, num_positives: 0, empty_positives: true };
    }
    SsLoss {
        value: num / den.max(CN_SUM_FLOOR),
        num_positives: n,
        empty_positives: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ws: WsComponents,
    pub ss: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossBreakdown {
    pub fn new(ws: &WsLoss, ss: &SsLoss, w: &LossWeights) -> Self {
        Self {
            ws: ws.components,
            ss: ss.value,
            total: total_loss(ws.value, ss.value, w),
            weights: *w,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::circumscribed_hbox;
    use std::f64::consts::{E, FRAC_PI_2, LN_2};

    fn hb(cx: f64, cy: f64, w: f64, h: f64) -> HBox {
        HBox::new(cx, cy, w, h).unwrap()
    }
    fn rb(cx: f64, cy: f64, w: f64, h: f64, t: f64) -> RBox {
        RBox::new(cx, cy, w, h, t).unwrap()
    }

    #[test]
    fn iou_loss_examples() {
        let a = hb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou_reg_loss(&a, &a), 0.0);
        assert!((iou_reg_loss(&a, &hb(1.0, 0.0, 2.0, 2.0)) - 3f64.ln()).abs() < 1e-12);
        // a 1 x 1/e box inside a unit box has IoU 1/e
        let inner = hb(0.0, 0.0, 1.0, 1.0 / E);
        assert!((iou_reg_loss(&inner, &hb(0.0, 0.0, 1.0, 1.0)) - 1.0).abs() < 1e-12);
        // disjoint boxes hit the IoU floor
        let far = iou_reg_loss(&a, &hb(10.0, 0.0, 2.0, 2.0));
        assert!((far - (-(IOU_FLOOR.ln()))).abs() < 1e-12);
        let om = iou_reg_loss_with(&a, &hb(1.0, 0.0, 2.0, 2.0), IouLossKind::OneMinus);
        assert!((om - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn focal_examples() {
        assert!(focal_loss(1.0, true, 0.25, 2.0) < 1e-12);
        let p: f64 = 0.3;
        let bce = -p.ln();
        assert!((focal_loss(p, true, 0.5, 0.0) - 0.5 * bce).abs() < 1e-12);
        assert!((focal_loss(0.5, true, 0.25, 2.0) - 0.25 * 0.25 * LN_2).abs() < 1e-12);
        assert!((focal_loss(0.5, false, 0.25, 2.0) - 0.75 * 0.25 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn centerness_examples() {
        assert!(centerness_loss(1.0, 1.0) < 1e-6);
        assert!(centerness_loss(0.0, 0.0) < 1e-6);
        assert!((centerness_loss(0.5, 1.0) - LN_2).abs() < 1e-6);
        // a soft target keeps its entropy; the minimum sits at the target
        assert!(centerness_loss(0.4, 0.4) < centerness_loss(0.3, 0.4));
        assert!(centerness_loss(0.4, 0.4) < centerness_loss(0.5, 0.4));
    }

    #[test]
    fn l_xy_examples() {
        let a = rb(0.0, 0.0, 4.0, 2.0, 0.3);
        let b = rb(3.0, 4.0, 1.0, 2.0, -0.3);
        assert_eq!(l_xy(&a, &a), 0.0);
        assert!((l_xy(&a, &b) - 7.0).abs() < 1e-12);
        assert_eq!(l_xy(&a, &b), l_xy(&b, &a));
    }

    #[test]
    fn l_wh_theta_examples() {
        let a = rb(0.0, 0.0, 4.0, 2.0, 30f64.to_radians());
        assert!(l_wh_theta(&a, &a).abs() < 1e-12);
        assert!(l_wh_theta(&a, &a.swapped()).abs() < 1e-12);
        let b = rb(0.0, 0.0, 4.0, 2.0, 50f64.to_radians());
        assert!((l_wh_theta(&a, &b) - 20f64.to_radians().sin()).abs() < 1e-12);
    }

    #[test]
    fn l_wh_theta_wraps_continuously() {
        let a = rb(0.0, 0.0, 4.0, 2.0, 1.2);
        let eps = 1e-11;
        // two nearly identical boxes on either side of the angle wrap
        let below = rb(0.0, 0.0, 3.0, 2.5, FRAC_PI_2 - eps);
        let above = rb(0.0, 0.0, 3.0, 2.5, FRAC_PI_2 + eps);
        assert!(below.theta > 1.5 && above.theta < -1.5);
        assert!((l_wh_theta(&a, &below) - l_wh_theta(&a, &above)).abs() < 1e-9);
    }

    #[test]
    fn ss_reg_examples() {
        let w = LossWeights::default();
        let a = rb(0.0, 0.0, 4.0, 2.0, 0.5);
        assert!(ss_reg_loss(&a, &a, &w).abs() < 1e-12);
        let b = rb(1.0, 0.0, 4.0, 2.0, 0.5);
        assert!((ss_reg_loss(&a, &b, &w) - 0.15).abs() < 1e-12);
    }

    fn pred(rbox: RBox, p: f64, cn: f64) -> Prediction {
        Prediction { location: rbox.center(), rbox, class_probs: vec![p], centerness: cn }
    }
    fn target(gt: HBox, class_id: u32, cn: f64, trg: Option<RBox>) -> Target {
        Target { location: gt.center(), class_id, centerness: cn, gt_hbox: gt, target_rbox: trg, valid: true }
    }

    #[test]
    fn ws_loss_examples() {
        let w = LossWeights::default();
        let b = rb(5.0, 5.0, 4.0, 2.0, 0.4);
        let gt = circumscribed_hbox(&b);
        let l = ws_loss(&[pred(b, 1.0, 1.0)], &[target(gt, 1, 1.0, None)], &w);
        assert!(l.value < 1e-5, "{l:?}");

        // regression term alone, IoU 1/3
        let p = pred(RBox::from_hbox(&hb(1.0, 0.0, 2.0, 2.0)), 1.0, 1.0);
        let t = target(hb(0.0, 0.0, 2.0, 2.0), 1, 1.0, None);
        let l1 = ws_loss(std::slice::from_ref(&p), std::slice::from_ref(&t), &w);
        assert!((l1.components.reg - 3f64.ln()).abs() < 1e-12);
        let w2 = LossWeights { mu3: 2.0, ..w };
        let l2 = ws_loss(&[p], &[t], &w2);
        assert!((l2.components.reg - 2.0 * l1.components.reg).abs() < 1e-12);
        assert_eq!(l2.components.cls, l1.components.cls);
        assert_eq!(l2.components.cn, l1.components.cn);
    }

    #[test]
    fn ws_loss_without_positives() {
        let w = LossWeights::default();
        let b = rb(5.0, 5.0, 4.0, 2.0, 0.4);
        let l = ws_loss(&[pred(b, 0.3, 0.5)], &[target(circumscribed_hbox(&b), 0, 0.5, None)], &w);
        assert!(l.empty_positives);
        assert_eq!(l.components.reg, 0.0);
        assert_eq!(l.components.cn, 0.0);
        assert!((l.value - focal_loss(0.3, false, 0.25, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_targets_are_ignored() {
        let w = LossWeights::default();
        let b = rb(5.0, 5.0, 4.0, 2.0, 0.4);
        let mut t = target(hb(50.0, 50.0, 1.0, 1.0), 1, 1.0, Some(rb(0.0, 0.0, 9.0, 1.0, 0.0)));
        t.valid = false;
        let l = ws_loss(&[pred(b, 0.2, 0.1)], std::slice::from_ref(&t), &w);
        assert_eq!(l.value, 0.0);
        let s = ss_loss(&[(t, pred(b, 0.2, 0.1))], &w);
        assert!(s.empty_positives && s.value == 0.0);
    }

    #[test]
    fn ss_loss_examples() {
        let w = LossWeights::default();
        let a = rb(0.0, 0.0, 4.0, 2.0, 0.3);
        let b = rb(1.0, 2.0, 3.0, 2.0, 0.1);
        let t1 = target(circumscribed_hbox(&a), 1, 1.0, Some(a));
        let single = ss_loss(&[(t1.clone(), pred(b, 1.0, 1.0))], &w);
        assert!((single.value - ss_reg_loss(&a, &b, &w)).abs() < 1e-12);

        let t0 = target(circumscribed_hbox(&a), 1, 0.0, Some(a));
        let c = rb(9.0, 9.0, 1.0, 1.0, 0.0);
        let mixed = ss_loss(&[(t1.clone(), pred(b, 1.0, 1.0)), (t0, pred(c, 1.0, 1.0))], &w);
        assert!((mixed.value - single.value).abs() < 1e-12);

        let same = ss_loss(&[(t1, pred(a, 1.0, 1.0))], &w);
        assert!(same.value.abs() < 1e-12);
    }

    #[test]
    fn total_examples() {
        let w = LossWeights::default();
        assert_eq!(total_loss(1.3, 0.0, &w), 1.3);
        assert!((total_loss(1.0, 1.0, &w) - 1.4).abs() < 1e-15);
        let off = LossWeights { lambda: 0.0, ..w };
        assert_eq!(total_loss(0.7, 5.0, &off), 0.7);
    }

    #[test]
    fn breakdown_json_shape() {
        let w = LossWeights::default();
        let ws = WsLoss {
            components: WsComponents { cls: 0.1, cn: 0.2, reg: 0.3 },
            value: 0.6,
            num_positives: 1,
            empty_positives: false,
        };
        let ss = SsLoss { value: 1.0, num_positives: 1, empty_positives: false };
        let v = serde_json::to_value(LossBreakdown::new(&ws, &ss, &w)).unwrap();
        assert!(v["ws"]["cls"].is_number() && v["ws"]["cn"].is_number() && v["ws"]["reg"].is_number());
        assert!((v["total"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(v["weights"]["lambda"].as_f64(), Some(0.4));
    }
}
