//! Synthetic scenes, rotated second views and label re-assignment.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{circumscribed_hbox, rotate_point, rotate_rbox, HBox, Point, RBox, ViewRotation};
use crate::losses::{Prediction, Target};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scene file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: u32,
    pub gt_rbox: RBox,
    pub class_id: u32,
    #[serde(default)]
    pub circular: bool,
}

impl SceneObject {
    /// Horizontal label of the object in the unrotated view.
    pub fn gt_hbox(&self) -> HBox {
        circumscribed_hbox(&self.gt_rbox)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub side: f64,
    pub seed: u64,
    pub objects: Vec<SceneObject>,
}

impl SceneSpec {
    pub fn center(&self) -> Point {
        Point::new(self.side / 2.0, self.side / 2.0)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(SceneError::Invalid(format!("side must be positive, got {}", self.side)));
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            o.gt_rbox
                .validate()
                .map_err(|e| SceneError::Invalid(format!("object {}: {e}", o.id)))?;
            let c = o.gt_rbox.center();
            if c.x < 0.0 || c.y < 0.0 || c.x > self.side || c.y > self.side {
                return Err(SceneError::Invalid(format!("object {} center outside the scene", o.id)));
            }
            if o.circular && (o.gt_rbox.w - o.gt_rbox.h).abs() > 1e-9 * o.gt_rbox.w {
                return Err(SceneError::Invalid(format!("circular object {} must have w = h", o.id)));
            }
            if !ids.insert(o.id) {
                return Err(SceneError::Invalid(format!("duplicate object id {}", o.id)));
            }
        }
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, SceneError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: p.clone(), source })?;
        let scene: SceneSpec =
            serde_json::from_str(&text).map_err(|source| SceneError::Parse { path: p, source })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn has_circular(&self) -> bool {
        self.objects.iter().any(|o| o.circular)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderMode {
    Crop,
    Pad,
}

impl fmt::Display for BorderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Crop => "crop",
            Self::Pad => "pad",
        })
    }
}

impl FromStr for BorderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "crop" => Ok(Self::Crop),
            "pad" => Ok(Self::Pad),
            other => Err(format!("unknown border mode '{other}' (crop|pad)")),
        }
    }
}

/// Objects of both views, aligned by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewPair {
    pub rotation: ViewRotation,
    pub mode: BorderMode,
    pub view1: Vec<SceneObject>,
    pub view2: Vec<SceneObject>,
    /// Whether each object may contribute to view-2 losses.
    pub valid_mask: Vec<bool>,
}

impl ViewPair {
    pub fn len(&self) -> usize {
        self.view1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.view1.is_empty()
    }
}

/// Side of the centered square that stays inside the image under any rotation.
pub fn crop_side(side: f64) -> f64 {
    FRAC_1_SQRT_2 * side
}

pub fn inside_crop(p: &Point, side: f64) -> bool {
    let half = crop_side(side) / 2.0;
    let c = side / 2.0;
    (p.x - c).abs() <= half && (p.y - c).abs() <= half
}

fn inside_square(p: &Point, side: f64) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= side && p.y <= side
}

/// Horizontal label of an object seen in a rotated view.
///
/// An isotropic object keeps an unrotated square label; anything else gets
/// the circumscribed box of its rotated rectangle.
pub fn view2_gt_hbox(obj: &SceneObject, v: &ViewRotation) -> HBox {
    if obj.circular {
        let c = rotate_point(obj.gt_rbox.center(), v);
        HBox { cx: c.x, cy: c.y, w: obj.gt_rbox.w, h: obj.gt_rbox.h }
    } else {
        circumscribed_hbox(&rotate_rbox(&obj.gt_rbox, v))
    }
}

/// Whether an object survives the border policy in both views.
pub fn kept_by_mode(obj: &SceneObject, side: f64, mode: BorderMode) -> bool {
    match mode {
        BorderMode::Crop => inside_crop(&obj.gt_rbox.center(), side),
        BorderMode::Pad => true,
    }
}

/// View-2 validity under padding: the rotated center must stay on the canvas.
pub fn pad_valid(obj: &SceneObject, v: &ViewRotation, side: f64) -> bool {
    inside_square(&rotate_point(obj.gt_rbox.center(), v), side)
}

pub fn generate_view_pair(scene: &SceneSpec, delta_theta: f64, mode: BorderMode) -> ViewPair {
    let rotation = ViewRotation::new(delta_theta, scene.center());
    let view1: Vec<SceneObject> = scene
        .objects
        .iter()
        .filter(|o| kept_by_mode(o, scene.side, mode))
        .cloned()
        .collect();
    let view2 = view1
        .iter()
        .map(|o| SceneObject { gt_rbox: rotate_rbox(&o.gt_rbox, &rotation), ..o.clone() })
        .collect();
    let valid_mask = view1
        .iter()
        .map(|o| match mode {
            BorderMode::Crop => true,
            BorderMode::Pad => pad_valid(o, &rotation, scene.side),
        })
        .collect();
    ViewPair { rotation, mode, view1, view2, valid_mask }
}

/// Moves a view-1 prediction into the rotated view.
pub fn transform_target(rbox_ws: &RBox, v: &ViewRotation) -> RBox {
    rotate_rbox(rbox_ws, v)
}

/// Center-ness of a location with respect to a horizontal box (0 outside).
pub fn centerness(p: &Point, b: &HBox) -> f64 {
    let [x1, y1, x2, y2] = b.corners();
    let (l, r, t, bo) = (p.x - x1, x2 - p.x, p.y - y1, y2 - p.y);
    if l <= 0.0 || r <= 0.0 || t <= 0.0 || bo <= 0.0 {
        return 0.0;
    }
    ((l.min(r) / l.max(r)) * (t.min(bo) / t.max(bo))).sqrt()
}

fn target_for(pred: &Prediction, obj: &SceneObject, valid: bool, v: &ViewRotation) -> Target {
    let gt_hbox = obj.gt_hbox();
    Target {
        location: rotate_point(pred.location, v),
        class_id: obj.class_id,
        centerness: centerness(&pred.location, &gt_hbox),
        gt_hbox,
        target_rbox: Some(transform_target(&pred.rbox, v)),
        valid,
    }
}

/// One-to-one: each object's own view-1 prediction becomes its view-2 target.
pub fn reassign_o2o(ws_preds: &[Prediction], pair: &ViewPair) -> Vec<Target> {
    assert_eq!(ws_preds.len(), pair.len(), "one prediction per object");
    ws_preds
        .iter()
        .zip(&pair.view1)
        .zip(&pair.valid_mask)
        .map(|((p, o), &valid)| target_for(p, o, valid, &pair.rotation))
        .collect()
}

/// Index of the location nearest to `center`; ties go to the lowest index.
pub fn nearest_location(locations: impl IntoIterator<Item = Point>, center: &Point) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in locations.into_iter().enumerate() {
        let d = p.distance(center);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// One-to-many: among each object's candidate predictions, the one located
/// nearest to the object's horizontal-box center supplies the target.
/// Objects without candidates get no consistency target.
pub fn reassign_o2m(candidates: &[Vec<Prediction>], gt_hboxes: &[HBox], pair: &ViewPair) -> Vec<Target> {
    assert_eq!(candidates.len(), pair.len());
    assert_eq!(gt_hboxes.len(), pair.len());
    (0..pair.len())
        .map(|i| {
            let obj = &pair.view1[i];
            let chosen = nearest_location(candidates[i].iter().map(|p| p.location), &gt_hboxes[i].center());
            match chosen {
                Some(k) => target_for(&candidates[i][k], obj, pair.valid_mask[i], &pair.rotation),
                None => Target {
                    location: rotate_point(gt_hboxes[i].center(), &pair.rotation),
                    class_id: obj.class_id,
                    centerness: 0.0,
                    gt_hbox: gt_hboxes[i],
                    target_rbox: None,
                    valid: pair.valid_mask[i],
                },
            }
        })
        .collect()
}

/// Jittered grid of prediction locations over the scene.
pub fn dense_locations(side: f64, stride: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c6f_6361_7469_6f6e);
    let n = (side / stride).floor() as usize;
    let jitter = stride / 4.0;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let x = (ix as f64 + 0.5) * stride + rng.random_range(-jitter..jitter);
            let y = (iy as f64 + 0.5) * stride + rng.random_range(-jitter..jitter);
            out.push(Point::new(x, y));
        }
    }
    out
}

/// Owner of each location: the smallest-area box containing it (lowest index
/// on ties), as in center-based dense detectors.
pub fn assign_locations(locations: &[Point], boxes: &[HBox]) -> Vec<Option<usize>> {
    locations
        .iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (i, b) in boxes.iter().enumerate() {
                if b.contains(p) && best.is_none_or(|(_, a)| b.area() < a) {
                    best = Some((i, b.area()));
                }
            }
            best.map(|(i, _)| i)
        })
        .collect()
}

/// For every box, the owner of the location nearest to its center among the
/// locations it contains; `None` when it contains no owned location.
pub fn o2m_sources(locations: &[Point], owners: &[Option<usize>], boxes: &[HBox]) -> Vec<Option<usize>> {
    boxes
        .iter()
        .map(|b| {
            let inside: Vec<(Point, usize)> = locations
                .iter()
                .zip(owners)
                .filter_map(|(p, o)| o.filter(|_| b.contains(p)).map(|o| (*p, o)))
                .collect();
            nearest_location(inside.iter().map(|(p, _)| *p), &b.center()).map(|k| inside[k].1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Layout {
    /// Centers uniform inside the scene margin.
    Uniform,
    /// Jittered lattice whose spacing is below the object extents.
    Dense { spacing: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneGenConfig {
    pub side: f64,
    pub count: usize,
    pub aspect: (f64, f64),
    pub short_side: (f64, f64),
    /// Range of |theta| in degrees; the sign is drawn at random.
    pub theta_abs_deg: (f64, f64),
    pub margin: f64,
    pub circular_count: usize,
    pub circular_size: (f64, f64),
    pub circular_class: u32,
    pub layout: Layout,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            side: 100.0,
            count: 200,
            aspect: (1.5, 3.0),
            short_side: (4.0, 10.0),
            theta_abs_deg: (25.0, 65.0),
            margin: 10.0,
            circular_count: 0,
            circular_size: (6.0, 12.0),
            circular_class: 2,
            layout: Layout::Uniform,
        }
    }
}

impl SceneGenConfig {
    /// Many overlapping objects on a tight lattice.
    pub fn dense() -> Self {
        Self {
            count: 144,
            short_side: (3.0, 5.0),
            aspect: (1.5, 2.5),
            margin: 8.0,
            layout: Layout::Dense { spacing: 7.0 },
            ..Self::default()
        }
    }

    /// Standard objects mixed with isotropic ones.
    pub fn with_circular() -> Self {
        Self { count: 100, circular_count: 100, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let ok_range = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !(self.side > 0.0 && self.margin >= 0.0 && 2.0 * self.margin < self.side) {
            return Err(SceneError::Invalid("side/margin inconsistent".into()));
        }
        if !ok_range(self.aspect) || self.aspect.0 < 1.0 {
            return Err(SceneError::Invalid("aspect range must satisfy 1 <= lo <= hi".into()));
        }
        if !ok_range(self.short_side) || self.short_side.0 <= 0.0 {
            return Err(SceneError::Invalid("short_side range must be positive".into()));
        }
        if !ok_range(self.circular_size) || self.circular_size.0 <= 0.0 {
            return Err(SceneError::Invalid("circular_size range must be positive".into()));
        }
        if !ok_range(self.theta_abs_deg) || self.theta_abs_deg.0 < 0.0 || self.theta_abs_deg.1 > 90.0 {
            return Err(SceneError::Invalid("theta_abs_deg must lie within [0, 90]".into()));
        }
        if self.count + self.circular_count == 0 {
            return Err(SceneError::Invalid("scene needs at least one object".into()));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.1 > r.0 {
        rng.random_range(r.0..r.1)
    } else {
        r.0
    }
}

/// Deterministic scene from `(config, seed)`.
pub fn generate_scene(cfg: &SceneGenConfig, seed: u64) -> Result<SceneSpec, SceneError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = cfg.count + cfg.circular_count;
    let lo = cfg.margin;
    let hi = cfg.side - cfg.margin;
    let centers: Vec<Point> = match cfg.layout {
        Layout::Uniform => (0..total)
            .map(|_| Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi)))
            .collect(),
        Layout::Dense { spacing } => {
            if spacing <= 0.0 {
                return Err(SceneError::Invalid("dense spacing must be positive".into()));
            }
            let n = ((hi - lo) / spacing).floor() as usize + 1;
            if n * n < total {
                return Err(SceneError::Invalid(format!(
                    "dense lattice holds {} objects, {} requested",
                    n * n,
                    total
                )));
            }
            let j = spacing / 4.0;
            (0..total)
                .map(|k| {
                    let (ix, iy) = (k % n, k / n);
                    let x = lo + ix as f64 * spacing + rng.random_range(-j..j);
                    let y = lo + iy as f64 * spacing + rng.random_range(-j..j);
                    Point::new(x.clamp(0.0, cfg.side), y.clamp(0.0, cfg.side))
                })
                .collect()
        }
    };
    let mut objects = Vec::with_capacity(total);
    for (k, c) in centers.into_iter().enumerate() {
        let id = k as u32;
        let obj = if k < cfg.count {
            let h = draw(&mut rng, cfg.short_side);
            let w = h * draw(&mut rng, cfg.aspect);
            let mag = draw(&mut rng, cfg.theta_abs_deg).to_radians();
            let sign = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
            let theta = if mag >= PI / 2.0 { -PI / 2.0 } else { sign * mag };
            SceneObject { id, gt_rbox: RBox::from_parts(c.x, c.y, w, h, theta), class_id: 1, circular: false }
        } else {
            let s = draw(&mut rng, cfg.circular_size);
            SceneObject {
                id,
                gt_rbox: RBox::from_parts(c.x, c.y, s, s, 0.0),
                class_id: cfg.circular_class,
                circular: true,
            }
        };
        objects.push(obj);
    }
    let scene = SceneSpec { side: cfg.side, seed, objects };
    scene.validate()?;
    Ok(scene)
}

/// View rotations sampled uniformly on `[-pi, pi)` away from multiples of
/// `pi/2` (where the second view carries no angle information).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSampler {
    pub exclusion: f64,
}

impl Default for DeltaSampler {
    fn default() -> Self {
        Self { exclusion: 2f64.to_radians() }
    }
}

impl DeltaSampler {
    pub fn excluded(&self, d: f64) -> bool {
        let q = PI / 2.0;
        let m = d - q * (d / q).round();
        m.abs() < self.exclusion
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let d = rng.random_range(-PI..PI);
            if !self.excluded(d) {
                return d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: u32, cx: f64, cy: f64, w: f64, h: f64, t: f64) -> SceneObject {
        SceneObject { id, gt_rbox: RBox::new(cx, cy, w, h, t).unwrap(), class_id: 1, circular: false }
    }

    fn scene(objects: Vec<SceneObject>) -> SceneSpec {
        SceneSpec { side: 100.0, seed: 0, objects }
    }

    fn pred_for(o: &SceneObject, rbox: RBox) -> Prediction {
        Prediction { location: o.gt_rbox.center(), rbox, class_probs: vec![1.0], centerness: 1.0 }
    }

    #[test]
    fn identity_rotation_keeps_views_equal() {
        let s = scene(vec![obj(0, 10.0, 10.0, 4.0, 2.0, 0.3), obj(1, 50.0, 60.0, 6.0, 2.0, -0.7)]);
        for mode in [BorderMode::Pad, BorderMode::Crop] {
            let pair = generate_view_pair(&s, 0.0, mode);
            assert_eq!(pair.view1, pair.view2);
            assert!(pair.valid_mask.iter().all(|v| *v));
        }
    }

    #[test]
    fn crop_drops_corner_objects_from_both_views() {
        let s = scene(vec![obj(0, 3.0, 3.0, 4.0, 2.0, 0.3), obj(1, 50.0, 50.0, 4.0, 2.0, 0.3)]);
        let pair = generate_view_pair(&s, 45f64.to_radians(), BorderMode::Crop);
        let ids1: Vec<u32> = pair.view1.iter().map(|o| o.id).collect();
        let ids2: Vec<u32> = pair.view2.iter().map(|o| o.id).collect();
        assert_eq!(ids1, vec![1]);
        assert_eq!(ids1, ids2);
    }

    #[test]
    fn pad_invalidates_objects_rotated_off_canvas() {
        // a corner object swings outside the canvas under a 45 degree turn
        let s = scene(vec![obj(0, 3.0, 3.0, 4.0, 2.0, 0.3), obj(1, 50.0, 50.0, 4.0, 2.0, 0.3)]);
        let pair = generate_view_pair(&s, 45f64.to_radians(), BorderMode::Pad);
        assert_eq!(pair.len(), 2);
        assert_eq!(pair.valid_mask, vec![false, true]);
        let moved = rotate_point(Point::new(3.0, 3.0), &pair.rotation);
        assert!(moved.x < 0.0 || moved.y < 0.0 || moved.x > 100.0 || moved.y > 100.0);
    }

    #[test]
    fn o2o_examples() {
        let s = scene(vec![obj(0, 40.0, 50.0, 6.0, 2.0, 0.3), obj(1, 44.0, 50.0, 6.0, 2.0, -0.3)]);
        let pair = generate_view_pair(&s, 0.0, BorderMode::Pad);
        let preds: Vec<Prediction> = s.objects.iter().map(|o| pred_for(o, o.gt_rbox)).collect();
        let t = reassign_o2o(&preds, &pair);
        assert_eq!(t[0].location, preds[0].location);
        assert_eq!(t[0].target_rbox, Some(preds[0].rbox));
        assert_eq!(t[1].target_rbox, Some(preds[1].rbox));

        let pair = generate_view_pair(&s, 0.5, BorderMode::Pad);
        let t = reassign_o2o(&preds, &pair);
        assert_eq!(t[1].target_rbox, Some(rotate_rbox(&preds[1].rbox, &pair.rotation)));
        assert_eq!(t[1].class_id, 1);
        assert!((t[1].centerness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn o2m_examples() {
        let s = scene(vec![obj(0, 50.0, 50.0, 6.0, 2.0, 0.3)]);
        let pair = generate_view_pair(&s, 0.4, BorderMode::Pad);
        let o = &s.objects[0];
        let gt = [o.gt_hbox()];
        let own = pred_for(o, o.gt_rbox);

        let single = reassign_o2m(&[vec![own.clone()]], &gt, &pair);
        assert_eq!(single, reassign_o2o(std::slice::from_ref(&own), &pair));

        let mut off = own.clone();
        off.location = Point::new(51.0, 50.0);
        off.rbox = RBox::new(51.0, 50.0, 3.0, 3.0, 0.0).unwrap();
        let at_center = reassign_o2m(&[vec![off.clone(), own.clone()]], &gt, &pair);
        assert_eq!(at_center[0].target_rbox, Some(transform_target(&own.rbox, &pair.rotation)));

        let mut left = off.clone();
        left.location = Point::new(49.0, 50.0);
        left.rbox = RBox::new(49.0, 50.0, 5.0, 1.0, 0.0).unwrap();
        let tie = reassign_o2m(&[vec![left.clone(), off.clone()]], &gt, &pair);
        assert_eq!(tie[0].target_rbox, Some(transform_target(&left.rbox, &pair.rotation)));
    }

    #[test]
    fn targets_do_not_leak_gt_angles() {
        // the symmetric twin has the same horizontal label
        let a = obj(0, 50.0, 50.0, 4.0, 2.0, 30f64.to_radians());
        let b = obj(0, 50.0, 50.0, 4.0, 2.0, -30f64.to_radians());
        let guess = RBox::new(50.0, 50.0, 4.46, 3.73, 0.0).unwrap();
        let pa = generate_view_pair(&scene(vec![a.clone()]), 0.6, BorderMode::Pad);
        let pb = generate_view_pair(&scene(vec![b.clone()]), 0.6, BorderMode::Pad);
        let ta = reassign_o2o(&[pred_for(&a, guess)], &pa);
        let tb = reassign_o2o(&[pred_for(&b, guess)], &pb);
        assert_eq!(ta, tb);
    }

    #[test]
    fn transform_target_matches_rotate_rbox() {
        let b = RBox::new(2.0, 0.0, 4.0, 2.0, 10f64.to_radians()).unwrap();
        let v = ViewRotation::new(20f64.to_radians(), Point::new(0.0, 0.0));
        assert_eq!(transform_target(&b, &v), rotate_rbox(&b, &v));
    }

    #[test]
    fn circular_view2_label_is_unrotated() {
        let o = SceneObject {
            id: 0,
            gt_rbox: RBox::new(30.0, 40.0, 8.0, 8.0, 0.0).unwrap(),
            class_id: 2,
            circular: true,
        };
        let v = ViewRotation::new(0.7, Point::new(50.0, 50.0));
        let hb = view2_gt_hbox(&o, &v);
        assert_eq!((hb.w, hb.h), (8.0, 8.0));
        let sq = SceneObject { circular: false, ..o };
        assert!(view2_gt_hbox(&sq, &v).w > 8.0);
    }

    #[test]
    fn location_ownership_prefers_small_boxes() {
        let big = HBox::new(50.0, 50.0, 20.0, 20.0).unwrap();
        let small = HBox::new(52.0, 50.0, 4.0, 4.0).unwrap();
        let locs = [Point::new(52.0, 50.0), Point::new(45.0, 50.0), Point::new(90.0, 90.0)];
        let owners = assign_locations(&locs, &[big, small]);
        assert_eq!(owners, vec![Some(1), Some(0), None]);
        // the location nearest the big box's center belongs to the small box
        let src = o2m_sources(&locs, &owners, &[big, small]);
        assert_eq!(src, vec![Some(1), Some(1)]);
    }

    #[test]
    fn centerness_values() {
        let b = HBox::new(0.0, 0.0, 4.0, 2.0).unwrap();
        assert_eq!(centerness(&Point::new(0.0, 0.0), &b), 1.0);
        assert_eq!(centerness(&Point::new(5.0, 0.0), &b), 0.0);
        // l = 1, r = 3: sqrt(1/3)
        assert!((centerness(&Point::new(-1.0, 0.0), &b) - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let cfg = SceneGenConfig::default();
        let a = generate_scene(&cfg, 7).unwrap();
        assert_eq!(a, generate_scene(&cfg, 7).unwrap());
        assert_ne!(a, generate_scene(&cfg, 8).unwrap());
        assert_eq!(a.objects.len(), 200);
        for o in &a.objects {
            let deg = o.gt_rbox.theta.to_degrees().abs();
            assert!((25.0..=65.0).contains(&deg));
            assert!(o.gt_rbox.w / o.gt_rbox.h >= 1.5 - 1e-12);
        }
        let text = serde_json::to_string(&a).unwrap();
        let back: SceneSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn dense_scene_boxes_overlap() {
        let s = generate_scene(&SceneGenConfig::dense(), 3).unwrap();
        let hb: Vec<HBox> = s.objects.iter().map(|o| o.gt_hbox()).collect();
        let overlapping = (0..hb.len())
            .filter(|&i| (0..hb.len()).any(|j| j != i && crate::geometry::hbox_iou(&hb[i], &hb[j]) > 0.0))
            .count();
        assert!(overlapping * 2 > hb.len());
    }

    #[test]
    fn delta_sampler_avoids_quarter_turns() {
        let s = DeltaSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let d = s.sample(&mut rng);
            assert!((-PI..PI).contains(&d));
            let m = d.rem_euclid(PI / 2.0);
            assert!(m >= 2f64.to_radians() - 1e-12 && m <= (88f64).to_radians() + 1e-12);
        }
    }
}
