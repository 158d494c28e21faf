//! Rotated-box geometry.
//!
//! Angles are radians with `theta` in `[-pi/2, pi/2)`; `w` is the extent
//! along the `theta` direction and `h` the extent perpendicular to it.
//! All values are immutable and every function here is pure.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Intersections below this area are reported as empty.
pub const MIN_INTERSECTION_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Folds an angle into `[-pi/2, pi/2)`, congruent modulo `pi`.
pub fn angle_normalize(theta: f64) -> f64 {
    let mut t = theta - PI * ((theta + FRAC_PI_2) / PI).floor();
    // floor() can leave the result a rounding step outside the interval
    if t >= FRAC_PI_2 {
        t -= PI;
    }
    if t < -FRAC_PI_2 {
        t += PI;
    }
    t
}

/// Smallest absolute difference between two angles modulo `pi`, in `[0, pi/2]`.
pub fn angle_distance_mod_pi(a: f64, b: f64) -> f64 {
    angle_normalize(a - b).abs()
}

/// A rotated rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl RBox {
    /// Builds a validated box with a normalized angle.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self, GeometryError> {
        let b = Self {
            cx,
            cy,
            w,
            h,
            theta: angle_normalize(theta),
        };
        b.validate()?;
        Ok(b)
    }

    /// Unchecked constructor; `theta` is normalized.
    pub fn from_parts(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Self {
        Self {
            cx,
            cy,
            w,
            h,
            theta: angle_normalize(theta),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.cx, self.cy, self.w, self.h, self.theta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(GeometryError::InvalidBox(format!(
                "non-positive size w={} h={}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// The same rectangle written as `(h, w, theta + pi/2)`.
    pub fn swapped(&self) -> Self {
        Self::from_parts(self.cx, self.cy, self.h, self.w, self.theta + FRAC_PI_2)
    }

    /// Representation with `w >= h`.
    pub fn canonical(&self) -> Self {
        if self.w >= self.h {
            *self
        } else {
            self.swapped()
        }
    }

    /// Axis-aligned box read as a rotated box with `theta = 0`.
    pub fn from_hbox(b: &HBox) -> Self {
        Self::from_parts(b.cx, b.cy, b.w, b.h, 0.0)
    }
}

/// An axis-aligned rectangle stored as center and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl HBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let b = Self { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite || self.w <= 0.0 || self.h <= 0.0 {
            return Err(GeometryError::InvalidBox(format!("{self:?}")));
        }
        Ok(())
    }

    /// From `(x1, y1, x2, y2)` corner form.
    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        Self::new((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)
    }

    /// `(x1, y1, x2, y2)` corner form.
    pub fn corners(&self) -> [f64; 4] {
        [
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        ]
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn contains(&self, p: &Point) -> bool {
        let [x1, y1, x2, y2] = self.corners();
        p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2
    }
}

/// Rotation by `delta_theta` about `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewRotation {
    pub delta_theta: f64,
    pub center: Point,
}

impl ViewRotation {
    pub fn new(delta_theta: f64, center: Point) -> Self {
        Self {
            delta_theta,
            center,
        }
    }

    pub fn identity(center: Point) -> Self {
        Self::new(0.0, center)
    }

    /// Row-major `[[cos, -sin], [sin, cos]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.delta_theta.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.delta_theta, self.center)
    }

    pub fn apply(&self, p: Point) -> Point {
        rotate_point(p, self)
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Shoelace area; positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Vertex mean.
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    /// Clips `self` against every edge of the convex counter-clockwise `clip`.
    pub fn clip_convex(&self, clip: &Polygon) -> Polygon {
        let mut output = self.vertices.clone();
        let m = clip.vertices.len();
        for i in 0..m {
            if output.is_empty() {
                break;
            }
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % m];
            let input = std::mem::take(&mut output);
            let side = |p: &Point| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            for j in 0..input.len() {
                let cur = input[j];
                let prev = input[(j + input.len() - 1) % input.len()];
                let (sc, sp) = (side(&cur), side(&prev));
                if sc >= 0.0 {
                    if sp < 0.0 {
                        output.push(intersect(prev, cur, sp, sc));
                    }
                    output.push(cur);
                } else if sp >= 0.0 {
                    output.push(intersect(prev, cur, sp, sc));
                }
            }
        }
        Polygon::new(output)
    }
}

fn intersect(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let t = sp / (sp - sq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// `(p - c) R^T + c`.
pub fn rotate_point(p: Point, v: &ViewRotation) -> Point {
    let (s, c) = v.delta_theta.sin_cos();
    let dx = p.x - v.center.x;
    let dy = p.y - v.center.y;
    Point::new(
        dx * c - dy * s + v.center.x,
        dx * s + dy * c + v.center.y,
    )
}

/// Rotates the center, keeps the size, and advances the angle by `delta_theta`.
pub fn rotate_rbox(b: &RBox, v: &ViewRotation) -> RBox {
    let c = rotate_point(b.center(), v);
    RBox::from_parts(c.x, c.y, b.w, b.h, b.theta + v.delta_theta)
}

/// Width and height of the smallest axis-aligned rectangle around a `w x h`
/// rectangle at angle `theta`.
pub fn circumscribed_dims(w: f64, h: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let (c, s) = (c.abs(), s.abs());
    (w * c + h * s, w * s + h * c)
}

pub fn circumscribed_hbox(b: &RBox) -> HBox {
    let (w, h) = circumscribed_dims(b.w, b.h, b.theta);
    HBox {
        cx: b.cx,
        cy: b.cy,
        w,
        h,
    }
}

/// Mirror image about the box center: same size, angle `pi - theta`.
pub fn symmetric_rbox(b: &RBox) -> RBox {
    RBox::from_parts(b.cx, b.cy, b.w, b.h, PI - b.theta)
}

/// Corner polygon, counter-clockwise.
pub fn rbox_corners(b: &RBox) -> Polygon {
    let (s, c) = b.theta.sin_cos();
    let (hw, hh) = (b.w / 2.0, b.h / 2.0);
    let offsets = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)];
    Polygon::new(
        offsets
            .iter()
            .map(|&(dx, dy)| Point::new(b.cx + dx * c - dy * s, b.cy + dx * s + dy * c))
            .collect(),
    )
}

pub fn hbox_iou(a: &HBox, b: &HBox) -> f64 {
    let [ax1, ay1, ax2, ay2] = a.corners();
    let [bx1, by1, bx2, by2] = b.corners();
    let iw = (ax2.min(bx2) - ax1.max(bx1)).max(0.0);
    let ih = (ay2.min(by2) - ay1.max(by1)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).clamp(0.0, 1.0)
}

/// Area of the intersection of two rotated boxes.
pub fn rbox_intersection_area(a: &RBox, b: &RBox) -> f64 {
    let inter = rbox_corners(a).clip_convex(&rbox_corners(b)).area();
    if inter < MIN_INTERSECTION_AREA {
        0.0
    } else {
        inter
    }
}

/// IoU of two rotated boxes via convex clipping.
pub fn rbox_iou(a: &RBox, b: &RBox) -> f64 {
    // quick reject on circumscribed boxes
    if hbox_iou(&circumscribed_hbox(a), &circumscribed_hbox(b)) == 0.0 {
        return 0.0;
    }
    let inter = rbox_intersection_area(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).clamp(0.0, 1.0)
}
