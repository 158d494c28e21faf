//! Feasibility analysis of the circumscribed-rectangle equation system.
//!
//! Two views of one rectangle are observed only through their horizontal
//! circumscribed boxes. The brute-force sweep ([`enumerate_feasible`]) is the
//! reference; [`analytic_two_solutions`] is an independent closed form that
//! must agree with it.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::geometry::circumscribed_dims;
use crate::geometry::angle_normalize;

/// `|cos^2 - sin^2|` below this makes the view-1 linear system singular.
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("singular system at theta = {theta} rad (|theta| at pi/4)")]
    Singular { theta: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no solution: observations are inconsistent")]
    NoSolution,
    #[error("degenerate square: every angle is feasible")]
    DegenerateSquare,
    #[error("second view carries no information about the angle")]
    Uninformative,
    #[error("unknown constraint set '{0}' (expected hcrc, hcrc+sc or hcrc+sc+ac)")]
    UnknownConstraintSet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintProblem {
    pub view1_dims: (f64, f64),
    pub view2_dims: (f64, f64),
    pub delta_theta: f64,
}

impl ConstraintProblem {
    pub fn new(
        view1_dims: (f64, f64),
        view2_dims: (f64, f64),
        delta_theta: f64,
    ) -> Result<Self, ConstraintError> {
        let p = Self {
            view1_dims,
            view2_dims,
            delta_theta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Observations produced by a rectangle `(w, h, theta)` and a view rotation.
    pub fn from_gt(w: f64, h: f64, theta: f64, delta_theta: f64) -> Result<Self, ConstraintError> {
        Self::new(
            circumscribed_dims(w, h, theta),
            circumscribed_dims(w, h, theta + delta_theta),
            delta_theta,
        )
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        let dims = [
            self.view1_dims.0,
            self.view1_dims.1,
            self.view2_dims.0,
            self.view2_dims.1,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(ConstraintError::InvalidProblem(format!(
                "dimensions must be positive and finite, got {dims:?}"
            )));
        }
        if !self.delta_theta.is_finite() {
            return Err(ConstraintError::InvalidProblem("delta_theta is not finite".into()));
        }
        Ok(())
    }

    pub fn max_dim(&self) -> f64 {
        self.view1_dims
            .0
            .max(self.view1_dims.1)
            .max(self.view2_dims.0)
            .max(self.view2_dims.1)
    }

    /// Both observed boxes are square, which only a square object produces
    /// for a generic rotation.
    pub fn is_square(&self) -> bool {
        let rel = 1e-9 * self.max_dim();
        (self.view1_dims.0 - self.view1_dims.1).abs() <= rel
            && (self.view2_dims.0 - self.view2_dims.1).abs() <= rel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintSet {
    #[serde(rename = "hcrc")]
    Hcrc,
    #[serde(rename = "hcrc+sc")]
    HcrcSc,
    #[serde(rename = "hcrc+sc+ac")]
    HcrcScAc,
}

impl ConstraintSet {
    pub const ALL: [ConstraintSet; 3] = [Self::Hcrc, Self::HcrcSc, Self::HcrcScAc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Hcrc => "hcrc",
            Self::HcrcSc => "hcrc+sc",
            Self::HcrcScAc => "hcrc+sc+ac",
        }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintSet {
    type Err = ConstraintError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hcrc" => Ok(Self::Hcrc),
            "hcrc+sc" => Ok(Self::HcrcSc),
            "hcrc+sc+ac" => Ok(Self::HcrcScAc),
            other => Err(ConstraintError::UnknownConstraintSet(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    InfiniteFamily,
    TwoFold,
    Unique,
    Empty,
    /// More than two isolated solutions (not expected for generic problems).
    Multiple,
    DegenerateSquare,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::InfiniteFamily => "INFINITE_FAMILY",
            Self::TwoFold => "TWO_FOLD",
            Self::Unique => "UNIQUE",
            Self::Empty => "EMPTY",
            Self::Multiple => "MULTIPLE",
            Self::DegenerateSquare => "DEGENERATE_SQUARE",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub w: f64,
    pub h: f64,
    pub theta: f64,
    pub residual: f64,
}

impl Solution {
    fn canonical(self) -> Self {
        let (w, h, theta) = canonical_dims(self.w, self.h, self.theta);
        Self { w, h, theta, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub classification: Classification,
    pub solutions: Vec<Solution>,
    pub grid_step: f64,
    pub tol: f64,
    /// Half-width of the band around |theta| = pi/4 that the sweep skips.
    pub guard_band: f64,
    pub skipped_grid_points: usize,
    /// Grid points whose residual was already within `tol` before refinement.
    pub feasible_grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnumerateOptions {
    pub grid_step: f64,
    /// Absolute tolerance; `None` means `1e-6 x` the largest observed dimension.
    pub tol: Option<f64>,
    pub guard_band: f64,
    /// Cluster radius in units of `grid_step`.
    pub cluster_radius_steps: f64,
    /// This many exactly-feasible grid points mark a continuous family.
    pub infinite_min_points: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.25f64.to_radians(),
            tol: None,
            guard_band: 0.5f64.to_radians(),
            cluster_radius_steps: 2.0,
            infinite_min_points: 10,
        }
    }
}

/// Inverts the view-1 equations for a fixed angle.
///
/// Returns `Ok(None)` when the implied rectangle has a non-positive side.
pub fn solve_wh_given_theta(
    big_w: f64,
    big_h: f64,
    theta: f64,
) -> Result<Option<(f64, f64)>, ConstraintError> {
    let c = theta.cos().abs();
    let s = theta.sin().abs();
    let det = c * c - s * s;
    if det.abs() < SINGULAR_TOL {
        return Err(ConstraintError::Singular { theta });
    }
    let w = (big_w * c - big_h * s) / det;
    let h = (big_h * c - big_w * s) / det;
    if w > 0.0 && h > 0.0 {
        Ok(Some((w, h)))
    } else {
        Ok(None)
    }
}

/// `(w, h, theta)` with `w >= h`, theta folded into `[-pi/2, pi/2)`.
pub fn canonical_dims(w: f64, h: f64, theta: f64) -> (f64, f64, f64) {
    if w >= h {
        (w, h, angle_normalize(theta))
    } else {
        (h, w, angle_normalize(theta + FRAC_PI_2))
    }
}

fn dims_violation(w: f64, h: f64, phi: f64, target: (f64, f64)) -> f64 {
    let (a, b) = circumscribed_dims(w, h, phi);
    (a - target.0).abs().max((b - target.1).abs())
}

/// View-2 orientation implied by a view-1 candidate when the angle is free.
///
/// Solves the linear system for `(|cos phi|, |sin phi|)`; the residual is the
/// largest equation violation at the best admissible `phi`.
pub fn sc_residual(p: &ConstraintProblem, w: f64, h: f64) -> (f64, f64) {
    let (w2, h2) = p.view2_dims;
    let den = w * w - h * h;
    if den.abs() < 1e-12 * w * w {
        // a square explains view 2 only if view 2 is square and the size fits
        let phi = if (w2 - h2).abs() <= 1e-9 * w2 {
            let ratio = (w2 / w).clamp(1.0, 2f64.sqrt());
            // w(|c| + |s|) = w2  =>  sin(phi + pi/4) = ratio / sqrt2
            (ratio / 2f64.sqrt()).asin() - FRAC_PI_4
        } else {
            0.0
        };
        return (dims_violation(w, h, phi, p.view2_dims), phi);
    }
    let c = (w2 * w - h2 * h) / den;
    let s = (h2 * w - w2 * h) / den;
    let phi = s.max(0.0).atan2(c.max(0.0));
    (dims_violation(w, h, phi, p.view2_dims), phi)
}

/// View-2 violation when the angle is pinned to `theta + delta_theta`.
pub fn ac_residual(p: &ConstraintProblem, w: f64, h: f64, theta: f64) -> f64 {
    dims_violation(w, h, theta + p.delta_theta, p.view2_dims)
}

/// Residual of a candidate angle under `set`; `None` if no rectangle exists.
pub fn residual_at(p: &ConstraintProblem, set: ConstraintSet, theta: f64) -> Option<(f64, f64, f64)> {
    let (w, h) = solve_wh_given_theta(p.view1_dims.0, p.view1_dims.1, theta).ok()??;
    let r1 = dims_violation(w, h, theta, p.view1_dims);
    let r = match set {
        ConstraintSet::Hcrc => r1,
        ConstraintSet::HcrcSc => r1.max(sc_residual(p, w, h).0),
        ConstraintSet::HcrcScAc => r1
            .max(sc_residual(p, w, h).0)
            .max(ac_residual(p, w, h, theta)),
    };
    Some((w, h, r))
}

fn in_guard_band(theta: f64, guard: f64) -> bool {
    (theta.abs() - FRAC_PI_4).abs() < guard
}

fn grid(step: f64) -> Vec<f64> {
    let n = (PI / step).round().max(4.0) as usize;
    let step = PI / n as f64;
    (0..n).map(|i| -FRAC_PI_2 + i as f64 * step).collect()
}

/// Residual over the sweep grid; `None` for skipped or infeasible points.
pub fn residual_curve(
    p: &ConstraintProblem,
    set: ConstraintSet,
    opts: &EnumerateOptions,
) -> Vec<(f64, Option<f64>)> {
    grid(opts.grid_step)
        .into_par_iter()
        .map(|t| {
            if in_guard_band(t, opts.guard_band) {
                (t, None)
            } else {
                (t, residual_at(p, set, t).map(|(_, _, r)| r))
            }
        })
        .collect()
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    angle_normalize(a - b).abs()
}

/// Greedy clustering on the circle of period pi; keeps the lowest-residual member.
fn cluster(mut sols: Vec<Solution>, radius: f64) -> Vec<Solution> {
    sols.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(a.theta.total_cmp(&b.theta)));
    let mut kept: Vec<Solution> = Vec::new();
    for s in sols {
        if kept.iter().all(|k| circular_gap(k.theta, s.theta) > radius) {
            kept.push(s);
        }
    }
    kept.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    kept
}

/// Removes representation duplicates among dense grid solutions.
fn dedup_family(mut sols: Vec<Solution>, step: f64) -> Vec<Solution> {
    sols.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let mut out: Vec<Solution> = Vec::with_capacity(sols.len());
    for s in sols {
        match out.last() {
            Some(last) if circular_gap(last.theta, s.theta) < step / 2.0 => {}
            _ => out.push(s),
        }
    }
    if out.len() > 1 && circular_gap(out[0].theta, out[out.len() - 1].theta) < step / 2.0 {
        out.pop();
    }
    out
}

fn classify_count(n: usize) -> Classification {
    match n {
        0 => Classification::Empty,
        1 => Classification::Unique,
        2 => Classification::TwoFold,
        _ => Classification::Multiple,
    }
}

/// Brute-force sweep of the feasible set under `set`.
pub fn enumerate_feasible(
    p: &ConstraintProblem,
    set: ConstraintSet,
    opts: &EnumerateOptions,
) -> Result<SolutionSet, ConstraintError> {
    p.validate()?;
    if !(opts.grid_step > 0.0 && opts.grid_step < FRAC_PI_4) {
        return Err(ConstraintError::InvalidProblem(format!(
            "grid_step must lie in (0, pi/4), got {}",
            opts.grid_step
        )));
    }
    let tol = opts.tol.unwrap_or(1e-6 * p.max_dim());
    let curve = residual_curve(p, set, opts);
    let n = curve.len();
    let step = PI / n as f64;
    let skipped = curve
        .iter()
        .filter(|(t, _)| in_guard_band(*t, opts.guard_band))
        .count();

    let solve = |t: f64| -> Option<Solution> {
        let (w, h, r) = residual_at(p, set, t)?;
        Some(Solution { w, h, theta: t, residual: r })
    };
    let exact: Vec<Solution> = curve
        .iter()
        .filter(|(_, r)| r.is_some_and(|r| r <= tol))
        .filter_map(|(t, _)| solve(*t))
        .map(Solution::canonical)
        .collect();
    let feasible_grid_points = exact.len();

    let mk = |classification, solutions| SolutionSet {
        classification,
        solutions,
        grid_step: step,
        tol,
        guard_band: opts.guard_band,
        skipped_grid_points: skipped,
        feasible_grid_points,
    };

    if p.is_square() {
        return Ok(mk(Classification::DegenerateSquare, dedup_family(exact, step)));
    }
    if set == ConstraintSet::Hcrc || feasible_grid_points >= opts.infinite_min_points {
        let family = dedup_family(exact, step);
        let class = if family.len() >= opts.infinite_min_points {
            Classification::InfiniteFamily
        } else {
            classify_count(family.len())
        };
        return Ok(mk(class, family));
    }

    let value = |i: usize| curve[i].1.unwrap_or(f64::INFINITY);
    let roots: Vec<Solution> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let r = value(i);
            if !r.is_finite() {
                return None;
            }
            let (lo, hi) = (value((i + n - 1) % n), value((i + 1) % n));
            if r > lo || r > hi {
                return None;
            }
            let t = curve[i].0;
            let f = |x: f64| {
                if in_guard_band(x, opts.guard_band) {
                    return f64::INFINITY;
                }
                residual_at(p, set, x).map_or(f64::INFINITY, |(_, _, r)| r)
            };
            let (tb, rb) = golden_min(f, t - step, t + step);
            let (t, _) = if rb <= r { (tb, rb) } else { (t, r) };
            let s = solve(t)?;
            (s.residual <= tol).then(|| s.canonical())
        })
        .collect();
    let clusters = cluster(roots, opts.cluster_radius_steps * step);
    Ok(mk(classify_count(clusters.len()), clusters))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPair {
    pub coincident: BoxDims,
    pub symmetric: BoxDims,
}

/// Closed-form solution of the two-view system with the view-2 angle free.
///
/// Writing `P = (W + H)^2`, `Q = (W - H)^2` and `u = |sin 2 theta|`, each view
/// gives `P = (w + h)^2 (1 + u)` and `Q = (w - h)^2 (1 - u)`, which is linear
/// in `u1` once the two views are divided. The sign of `theta` stays free
/// (the symmetric twin); the angle constraint picks the coincident one.
pub fn analytic_two_solutions(p: &ConstraintProblem) -> Result<AnalyticPair, ConstraintError> {
    p.validate()?;
    if p.is_square() {
        return Err(ConstraintError::DegenerateSquare);
    }
    let (w1, h1) = p.view1_dims;
    let (w2, h2) = p.view2_dims;
    let p1 = (w1 + h1).powi(2);
    let q1 = (w1 - h1).powi(2);
    let p2 = (w2 + h2).powi(2);
    let q2 = (w2 - h2).powi(2);

    let den = p2 * q1 - q2 * p1;
    if den.abs() <= 1e-10 * (p2 * q1 + q2 * p1) {
        return Err(ConstraintError::Uninformative);
    }
    let u1 = (2.0 * p1 * q1 - p2 * q1 - q2 * p1) / den;
    if !(-1e-9..=1.0 + 1e-9).contains(&u1) {
        return Err(ConstraintError::NoSolution);
    }
    let u1 = u1.clamp(0.0, 1.0);
    let u2 = (p2 / p1 * (1.0 + u1) - 1.0).clamp(0.0, 1.0);

    let a = (p1 / (1.0 + u1)).sqrt();
    let b = if u1 <= u2 {
        (q1 / (1.0 - u1)).sqrt()
    } else {
        (q2 / (1.0 - u2)).sqrt()
    };
    let (w, h) = ((a + b) / 2.0, (a - b) / 2.0);
    if !(h > 0.0 && w.is_finite()) {
        return Err(ConstraintError::NoSolution);
    }
    let base = u1.asin() / 2.0;
    let mag = if w1 >= h1 { base } else { FRAC_PI_2 - base };
    let plus = BoxDims { w, h, theta: angle_normalize(mag) };
    let minus = BoxDims { w, h, theta: angle_normalize(-mag) };

    let tol = 1e-6 * p.max_dim();
    for c in [plus, minus] {
        let r1 = dims_violation(c.w, c.h, c.theta, p.view1_dims);
        let r2 = sc_residual(p, c.w, c.h).0;
        if r1.max(r2) > tol {
            return Err(ConstraintError::NoSolution);
        }
    }
    let ac = |c: &BoxDims| ac_residual(p, c.w, c.h, c.theta);
    let (coincident, symmetric) = if ac(&plus) <= ac(&minus) {
        (plus, minus)
    } else {
        (minus, plus)
    };
    Ok(AnalyticPair { coincident, symmetric })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn dims_examples() {
        assert_eq!(circumscribed_dims(4.0, 2.0, 0.0), (4.0, 2.0));
        let (a, b) = circumscribed_dims(3.0, 3.0, 0.37);
        assert!((a - b).abs() < 1e-12);
        let (a, b) = circumscribed_dims(4.0, 2.0, deg(30.0));
        assert!((a - 4.464_101_615_137_754).abs() < 1e-12);
        assert!((b - 3.732_050_807_568_877).abs() < 1e-12);
    }

    #[test]
    fn solve_examples() {
        let (w, h) = solve_wh_given_theta(4.464_101_615_137_754, 3.732_050_807_568_877, deg(30.0))
            .unwrap()
            .unwrap();
        assert!((w - 4.0).abs() < 1e-12 && (h - 2.0).abs() < 1e-12);
        assert_eq!(solve_wh_given_theta(4.0, 2.0, 0.0).unwrap(), Some((4.0, 2.0)));
        assert!(matches!(
            solve_wh_given_theta(4.0, 2.0, FRAC_PI_4),
            Err(ConstraintError::Singular { .. })
        ));
        // a very flat box cannot come from a steep angle
        assert_eq!(solve_wh_given_theta(10.0, 1.0, deg(30.0)).unwrap(), None);
    }

    #[test]
    fn reference_problem_structure() {
        let p = ConstraintProblem::from_gt(4.0, 2.0, deg(30.0), deg(25.0)).unwrap();
        let o = EnumerateOptions::default();

        let hc = enumerate_feasible(&p, ConstraintSet::Hcrc, &o).unwrap();
        assert_eq!(hc.classification, Classification::InfiniteFamily);
        assert!(hc.solutions.len() >= 50);

        let sc = enumerate_feasible(&p, ConstraintSet::HcrcSc, &o).unwrap();
        assert_eq!(sc.classification, Classification::TwoFold);
        let thetas: Vec<f64> = sc.solutions.iter().map(|s| s.theta.to_degrees()).collect();
        assert!((thetas[0] + 30.0).abs() < 1e-6, "{thetas:?}");
        assert!((thetas[1] - 30.0).abs() < 1e-6, "{thetas:?}");

        let ac = enumerate_feasible(&p, ConstraintSet::HcrcScAc, &o).unwrap();
        assert_eq!(ac.classification, Classification::Unique);
        let s = ac.solutions[0];
        assert!((s.theta - deg(30.0)).abs() < 1e-6);
        assert!((s.w - 4.0).abs() < 1e-6 && (s.h - 2.0).abs() < 1e-6);
        assert!(s.residual <= ac.tol);
        assert!(hc.skipped_grid_points > 0);
    }

    #[test]
    fn analytic_reference() {
        let p = ConstraintProblem::from_gt(4.0, 2.0, deg(30.0), deg(25.0)).unwrap();
        let a = analytic_two_solutions(&p).unwrap();
        assert!((a.coincident.theta - deg(30.0)).abs() < 1e-9);
        assert!((a.symmetric.theta + deg(30.0)).abs() < 1e-9);
        assert!((a.coincident.w - 4.0).abs() < 1e-9 && (a.coincident.h - 2.0).abs() < 1e-9);
    }

    #[test]
    fn analytic_axis_aligned_candidates_coincide() {
        let p = ConstraintProblem::from_gt(4.0, 2.0, 0.0, deg(25.0)).unwrap();
        let a = analytic_two_solutions(&p).unwrap();
        assert!(a.coincident.theta.abs() < 1e-9 && a.symmetric.theta.abs() < 1e-9);
    }

    #[test]
    fn steep_angle_branch() {
        let p = ConstraintProblem::from_gt(5.0, 2.0, deg(-70.0), deg(33.0)).unwrap();
        let a = analytic_two_solutions(&p).unwrap();
        assert!((a.coincident.theta - deg(-70.0)).abs() < 1e-9, "{a:?}");
        let ac = enumerate_feasible(&p, ConstraintSet::HcrcScAc, &EnumerateOptions::default()).unwrap();
        assert_eq!(ac.classification, Classification::Unique);
        assert!((ac.solutions[0].theta - deg(-70.0)).abs() < 1e-6);
    }

    #[test]
    fn square_is_degenerate_everywhere() {
        let p = ConstraintProblem::from_gt(3.0, 3.0, deg(20.0), deg(25.0)).unwrap();
        for set in ConstraintSet::ALL {
            let r = enumerate_feasible(&p, set, &EnumerateOptions::default()).unwrap();
            assert_eq!(r.classification, Classification::DegenerateSquare);
        }
        assert_eq!(analytic_two_solutions(&p), Err(ConstraintError::DegenerateSquare));
    }

    #[test]
    fn zero_rotation_is_uninformative() {
        let p = ConstraintProblem::from_gt(4.0, 2.0, deg(30.0), 0.0).unwrap();
        let o = EnumerateOptions::default();
        for set in ConstraintSet::ALL {
            let r = enumerate_feasible(&p, set, &o).unwrap();
            assert_eq!(r.classification, Classification::InfiniteFamily, "{set}");
        }
        assert_eq!(analytic_two_solutions(&p), Err(ConstraintError::Uninformative));
    }

    #[test]
    fn inconsistent_views_have_no_solution() {
        let p = ConstraintProblem::new((4.0, 2.0), (40.0, 1.0), deg(25.0)).unwrap();
        let r = enumerate_feasible(&p, ConstraintSet::HcrcSc, &EnumerateOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Empty);
        assert!(analytic_two_solutions(&p).is_err());
    }

    #[test]
    fn constraint_set_parsing() {
        assert_eq!("HCRC+SC".parse::<ConstraintSet>().unwrap(), ConstraintSet::HcrcSc);
        assert!("sc".parse::<ConstraintSet>().is_err());
        assert_eq!(serde_json::to_string(&ConstraintSet::HcrcScAc).unwrap(), "\"hcrc+sc+ac\"");
        assert_eq!(
            serde_json::to_string(&Classification::TwoFold).unwrap(),
            "\"TWO_FOLD\""
        );
    }

    #[test]
    fn invalid_problem_rejected() {
        assert!(ConstraintProblem::new((0.0, 1.0), (1.0, 1.0), 0.1).is_err());
        let p = ConstraintProblem::from_gt(4.0, 2.0, 0.3, 0.4).unwrap();
        let o = EnumerateOptions { grid_step: 0.0, ..Default::default() };
        assert!(enumerate_feasible(&p, ConstraintSet::Hcrc, &o).is_err());
    }
}
