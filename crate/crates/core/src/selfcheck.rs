//! Independent oracles for the numerical core.
//!
//! Each check draws its own random cases from a seed, compares the library
//! against something computed a different way (sampling, finite differences,
//! a brute-force sweep, algebraic identities) and reports the worst deviation.
//! All checks are deterministic for a given seed regardless of thread count.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Dual, Probe, Real};
use crate::constraint_lab::{
    analytic_two_solutions, enumerate_feasible, solve_wh_given_theta, Classification, ConstraintProblem,
    ConstraintSet, EnumerateOptions,
};
use crate::geometry::{
    angle_distance_mod_pi, circumscribed_dims, circumscribed_hbox, rbox_iou, HBox, Point, RBox, ViewRotation,
};
use crate::losses::{l_wh_theta_g, object_total_g, IouLossKind, LossWeights, ObjectTerms};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Cases actually compared.
    pub cases: usize,
    /// Cases drawn but excluded (e.g. too close to a non-smooth point).
    pub skipped: usize,
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Case counts for every check; `full()` is the acceptance-sized workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSizes {
    pub roundtrip_cases: usize,
    pub constraint_problems: usize,
    pub iou_pairs: usize,
    pub iou_samples: usize,
    pub loss_pairs: usize,
    pub gradient_configs: usize,
}

impl CheckSizes {
    pub fn full() -> Self {
        Self {
            roundtrip_cases: 10_000,
            constraint_problems: 100,
            iou_pairs: 50,
            iou_samples: 1_000_000,
            loss_pairs: 10_000,
            gradient_configs: 1_000,
        }
    }

    pub fn quick() -> Self {
        Self {
            roundtrip_cases: 500,
            constraint_problems: 10,
            iou_pairs: 8,
            iou_samples: 40_000,
            loss_pairs: 500,
            gradient_configs: 60,
        }
    }
}

impl Default for CheckSizes {
    fn default() -> Self {
        Self::full()
    }
}

fn case_rng(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(1 << 32) + index as u64);
    rng
}

fn worst_of(values: impl Iterator<Item = f64>) -> f64 {
    // a NaN anywhere must fail the comparison, so it counts as infinitely bad
    values.fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

/// Angles whose distance to `±pi/4` is below this are avoided by the sweeps.
pub const GUARD_BAND: f64 = 0.5 * PI / 180.0;

fn off_guard(theta: f64, band: f64) -> bool {
    let folded = theta.rem_euclid(FRAC_PI_2);
    (folded - FRAC_PI_4).abs() > band
}

/// `circumscribed_dims` followed by `solve_wh_given_theta` returns the input.
pub fn roundtrip_check(cases: usize, seed: u64) -> CheckOutcome {
    let errs: Vec<Option<f64>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 1, i);
            let w = rng.random_range(0.5..50.0);
            let h = rng.random_range(0.5..50.0);
            let theta = loop {
                let t = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
                if off_guard(t, GUARD_BAND) {
                    break t;
                }
            };
            let (bw, bh) = circumscribed_dims(w, h, theta);
            match solve_wh_given_theta(bw, bh, theta) {
                Ok(Some((rw, rh))) => Some(((rw - w).abs() / w).max((rh - h).abs() / h)),
                _ => None,
            }
        })
        .collect();
    let failures = errs.iter().filter(|e| e.is_none()).count();
    let worst = worst_of(errs.iter().flatten().copied());
    let threshold = 1e-9;
    CheckOutcome {
        name: "roundtrip".into(),
        passed: failures == 0 && worst <= threshold,
        cases,
        skipped: 0,
        worst,
        threshold,
        detail: format!("max relative error over (w, h); {failures} inversions failed"),
    }
}

/// Random problem for the structure check: `(w, h, theta, delta)`.
fn constraint_case(seed: u64, i: usize) -> (f64, f64, f64, f64) {
    let mut rng = case_rng(seed, 2, i);
    let h = rng.random_range(1.0..10.0);
    let w = h * rng.random_range(1.2..4.0);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let delta = sign * rng.random_range(10.0..80.0f64).to_radians();
    // the twin at -theta must stay apart from theta and both must avoid the
    // swept guard band, so keep |theta| away from 0, pi/4 and pi/2
    let theta = loop {
        let t = rng.random_range(-88.0..88.0f64).to_radians();
        if t.abs() > 2f64.to_radians() && off_guard(t, 2.0 * GUARD_BAND + 1f64.to_radians()) {
            break t;
        }
    };
    (w, h, theta, delta)
}

/// Brute-force structure: HCRC is a continuous family, HCRC+SC the pair
/// `{theta, -theta}` and HCRC+SC+AC only `theta`.
pub fn constraint_structure_check(problems: usize, seed: u64) -> CheckOutcome {
    let opts = EnumerateOptions::default();
    let tol_angle = 0.5f64.to_radians();
    let results: Vec<Result<f64, String>> = (0..problems)
        .into_par_iter()
        .map(|i| {
            let (w, h, theta, delta) = constraint_case(seed, i);
            let p = ConstraintProblem::from_gt(w, h, theta, delta).map_err(|e| e.to_string())?;
            let run = |set| enumerate_feasible(&p, set, &opts).map_err(|e| format!("problem {i}: {e}"));
            let hc = run(ConstraintSet::Hcrc)?;
            if hc.classification != Classification::InfiniteFamily {
                return Err(format!("problem {i}: HCRC gave {}", hc.classification));
            }
            let sc = run(ConstraintSet::HcrcSc)?;
            if sc.classification != Classification::TwoFold {
                return Err(format!("problem {i}: HCRC+SC gave {}", sc.classification));
            }
            let mut worst: f64 = 0.0;
            for target in [theta, -theta] {
                let d = sc
                    .solutions
                    .iter()
                    .map(|s| angle_distance_mod_pi(s.theta, target))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
            let ac = run(ConstraintSet::HcrcScAc)?;
            if ac.classification != Classification::Unique {
                return Err(format!("problem {i}: HCRC+SC+AC gave {}", ac.classification));
            }
            worst = worst.max(angle_distance_mod_pi(ac.solutions[0].theta, theta));
            Ok(worst)
        })
        .collect();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let worst = worst_of(results.iter().filter_map(|r| r.as_ref().ok()).copied());
    CheckOutcome {
        name: "constraint_structure".into(),
        passed: errors.is_empty() && worst <= tol_angle,
        cases: problems,
        skipped: 0,
        worst: worst.to_degrees(),
        threshold: tol_angle.to_degrees(),
        detail: match errors.first() {
            Some(e) => format!("{} misclassified; first: {e}", errors.len()),
            None => "max angular distance (deg) of recovered clusters to +-theta".into(),
        },
    }
}

/// Closed-form pair against the brute-force sweep on the same problems.
pub fn constraint_analytic_check(problems: usize, seed: u64) -> CheckOutcome {
    let opts = EnumerateOptions::default();
    let results: Vec<Option<f64>> = (0..problems)
        .into_par_iter()
        .map(|i| {
            let (w, h, theta, delta) = constraint_case(seed, i);
            let p = ConstraintProblem::from_gt(w, h, theta, delta).ok()?;
            let a = analytic_two_solutions(&p).ok()?;
            let ac = enumerate_feasible(&p, ConstraintSet::HcrcScAc, &opts).ok()?;
            let s = ac.solutions.first()?;
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
            Some(
                angle_distance_mod_pi(a.coincident.theta, s.theta)
                    .max(rel(a.coincident.w, s.w))
                    .max(rel(a.coincident.h, s.h)),
            )
        })
        .collect();
    let missing = results.iter().filter(|r| r.is_none()).count();
    let worst = worst_of(results.iter().flatten().copied());
    let threshold = 1e-6;
    CheckOutcome {
        name: "constraint_analytic".into(),
        passed: missing == 0 && worst <= threshold,
        cases: problems,
        skipped: 0,
        worst,
        threshold,
        detail: format!("closed form vs refined sweep (angle rad, relative size); {missing} without a pair"),
    }
}

fn inside(b: &RBox, p: Point) -> bool {
    let (s, c) = b.theta.sin_cos();
    let dx = p.x - b.cx;
    let dy = p.y - b.cy;
    (dx * c + dy * s).abs() <= 0.5 * b.w && (-dx * s + dy * c).abs() <= 0.5 * b.h
}

/// IoU estimated by stratified sampling of the union's bounding rectangle.
///
/// Needs nothing but point-in-rectangle tests, so it shares no code with the
/// polygon clipper.
pub fn monte_carlo_iou(a: &RBox, b: &RBox, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let ha = circumscribed_hbox(a).corners();
    let hb = circumscribed_hbox(b).corners();
    let (x0, y0) = (ha[0].min(hb[0]), ha[1].min(hb[1]));
    let (x1, y1) = (ha[2].max(hb[2]), ha[3].max(hb[3]));
    let n = (samples as f64).sqrt().ceil() as usize;
    let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let (mut both, mut either) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(
                x0 + (i as f64 + rng.random::<f64>()) * dx,
                y0 + (j as f64 + rng.random::<f64>()) * dy,
            );
            let (ia, ib) = (inside(a, p), inside(b, p));
            both += (ia && ib) as u64;
            either += (ia || ib) as u64;
        }
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

fn iou_pair(seed: u64, i: usize) -> (RBox, RBox) {
    let mut rng = case_rng(seed, 3, i);
    let rb = |rng: &mut ChaCha8Rng, spread: f64| {
        RBox::from_parts(
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
            rng.random_range(1.0..10.0),
            rng.random_range(1.0..10.0),
            rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        )
    };
    let a = rb(&mut rng, 1.0);
    let b = match i % 5 {
        // same centre, only the angle differs
        0 => RBox { theta: rng.random_range(-FRAC_PI_2..FRAC_PI_2), ..a },
        // possibly disjoint
        1 => rb(&mut rng, 8.0),
        _ => rb(&mut rng, 3.0),
    };
    (a, b)
}

/// `iou` against the sampling oracle on random pairs.
pub fn iou_oracle_check_with(
    pairs: usize,
    samples: usize,
    seed: u64,
    iou: impl Fn(&RBox, &RBox) -> f64 + Sync,
) -> CheckOutcome {
    let errs: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let (a, b) = iou_pair(seed, i);
            let mut rng = case_rng(seed, 4, i);
            (iou(&a, &b) - monte_carlo_iou(&a, &b, samples, &mut rng)).abs()
        })
        .collect();
    let worst = worst_of(errs.iter().copied());
    let threshold = 5e-3;
    CheckOutcome {
        name: "iou_oracle".into(),
        passed: worst <= threshold,
        cases: pairs,
        skipped: 0,
        worst,
        threshold,
        detail: format!("max |polygon IoU - sampled IoU| with {samples} samples per pair"),
    }
}

pub fn iou_oracle_check(pairs: usize, samples: usize, seed: u64) -> CheckOutcome {
    iou_oracle_check_with(pairs, samples, seed, rbox_iou)
}

/// Deliberately wrong IoU (mirrored angle of the second box), used to show
/// that the oracle check actually rejects a broken implementation.
#[doc(hidden)]
pub fn faulty_rbox_iou(a: &RBox, b: &RBox) -> f64 {
    rbox_iou(a, &RBox { theta: -b.theta, ..*b })
}

fn arr(b: &RBox) -> [f64; 5] {
    [b.cx, b.cy, b.w, b.h, b.theta]
}

/// Representation exchange and wrap-around continuity of `l_wh_theta`.
pub fn loss_boundary_check(pairs: usize, seed: u64) -> CheckOutcome {
    const EPS: f64 = 1e-12;
    let errs: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 5, i);
            let kind = if i % 2 == 0 { IouLossKind::NegLog } else { IouLossKind::OneMinus };
            let rb = |rng: &mut ChaCha8Rng| {
                RBox::from_parts(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(0.5..20.0),
                    rng.random_range(0.5..20.0),
                    rng.random_range(-FRAC_PI_2..FRAC_PI_2),
                )
            };
            let (a, b) = (rb(&mut rng), rb(&mut rng));
            let l = |x: &RBox, y: &RBox| l_wh_theta_g(arr(x), arr(y), kind);
            let base = l(&a, &b);
            let exchange = (l(&a.swapped(), &b) - base)
                .abs()
                .max((l(&a, &b.swapped()) - base).abs())
                .max((l(&a.swapped(), &b.swapped()) - base).abs());
            let period = (l(&RBox { theta: a.theta + PI, ..a }, &b) - base).abs();
            let lo = RBox { theta: -FRAC_PI_2, ..a };
            let hi = RBox { theta: FRAC_PI_2 - EPS, ..a };
            let wrap = (l(&lo, &b) - l(&hi, &b)).abs();
            exchange.max(period).max(wrap)
        })
        .collect();
    let worst = worst_of(errs.iter().copied());
    let threshold = 1e-9;
    CheckOutcome {
        name: "loss_boundary".into(),
        passed: worst <= threshold,
        cases: pairs,
        skipped: 0,
        worst,
        threshold,
        detail: "max deviation under w/h exchange, pi shift and the +-pi/2 wrap".into(),
    }
}

/// One random evaluation point of the per-object objective.
struct GradCase {
    x: [f64; 15],
    terms: ObjectTerms,
    weights: LossWeights,
}

fn grad_case(seed: u64, i: usize) -> GradCase {
    let mut rng = case_rng(seed, 6, i);
    let center = Point::new(50.0, 50.0);
    let rotation = ViewRotation::new(rng.random_range(-PI..PI), center);
    let params = |rng: &mut ChaCha8Rng| -> [f64; 5] {
        [
            rng.random_range(20.0..80.0),
            rng.random_range(20.0..80.0),
            rng.random_range(2.0..20.0f64).ln(),
            rng.random_range(2.0..20.0f64).ln(),
            rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        ]
    };
    let ws = params(&mut rng);
    let near = |rng: &mut ChaCha8Rng, p: &[f64; 5]| -> [f64; 5] {
        [
            p[0] + rng.random_range(-2.0..2.0),
            p[1] + rng.random_range(-2.0..2.0),
            p[2] + rng.random_range(-0.3..0.3),
            p[3] + rng.random_range(-0.3..0.3),
            p[4] + rng.random_range(-0.5..0.5),
        ]
    };
    let src = if i % 3 == 0 { ws } else { near(&mut rng, &ws) };
    let ws_box = to_box(ws);
    let rotated = crate::geometry::rotate_rbox(&ws_box, &rotation);
    let ss = near(&mut rng, &[rotated.cx, rotated.cy, rotated.w.ln(), rotated.h.ln(), rotated.theta]);
    let jitter_hbox = |rng: &mut ChaCha8Rng, b: &RBox| -> HBox {
        let hb = circumscribed_hbox(b);
        HBox::new(
            hb.cx + rng.random_range(-1.5..1.5),
            hb.cy + rng.random_range(-1.5..1.5),
            hb.w * rng.random_range(0.7..1.3),
            hb.h * rng.random_range(0.7..1.3),
        )
        .expect("positive dims")
    };
    let gt_view1 = Some(jitter_hbox(&mut rng, &ws_box));
    let gt_view2 = if i % 4 == 3 { None } else { Some(jitter_hbox(&mut rng, &rotated)) };
    let k = [1.0, 0.5, 1.0 / 3.0][i % 3];
    let weights = LossWeights {
        mu1: rng.random_range(0.5..2.0),
        mu2: rng.random_range(0.5..2.0),
        mu3: rng.random_range(0.5..2.0),
        gamma1: rng.random_range(0.05..0.5),
        gamma2: rng.random_range(0.5..2.0),
        lambda: rng.random_range(0.1..1.0),
        iou_loss: if i % 2 == 0 { IouLossKind::NegLog } else { IouLossKind::OneMinus },
    };
    let mut x = [0.0; 15];
    x[..5].copy_from_slice(&ws);
    x[5..10].copy_from_slice(&src);
    x[10..].copy_from_slice(&ss);
    GradCase {
        x,
        terms: ObjectTerms { gt_view1, gt_view2, rotation, view2_scale: k, ss_enabled: true },
        weights,
    }
}

fn to_box(p: [f64; 5]) -> RBox {
    RBox::from_parts(p[0], p[1], p[2].exp(), p[3].exp(), p[4])
}

/// Objective in the optimizer's parametrization (`ln w`, `ln h`).
fn grad_objective<T: Real>(x: [T; 15], c: &GradCase) -> T {
    let unpack = |o: usize| [x[o], x[o + 1], x[o + 2].exp(), x[o + 3].exp(), x[o + 4]];
    object_total_g(unpack(0), unpack(5), unpack(10), &c.terms, &c.weights)
}

/// Minimum distance to a branch point below which a configuration is skipped.
pub const KINK_MARGIN: f64 = 1e-4;

/// Forward-mode gradients against central finite differences.
///
/// Error is `|ad - fd| / max(|ad|, |fd|, 1e-3)` per component. Configurations
/// whose evaluation passes within [`KINK_MARGIN`] of an `abs`/`min`/`max`
/// switch are redrawn, until `configs` smooth configurations were compared.
pub fn gradient_check(configs: usize, seed: u64) -> CheckOutcome {
    const H: f64 = 1e-6;
    // draw in blocks so that the parallel search stays deterministic
    let mut accepted = Vec::with_capacity(configs);
    let mut skipped = 0usize;
    let mut next = 0usize;
    while accepted.len() < configs && next < configs * 20 {
        let block: Vec<Option<f64>> = (next..next + configs)
            .into_par_iter()
            .map(|i| {
                let c = grad_case(seed, i);
                let (_, gap) = Probe::measure(|| grad_objective(c.x.map(Probe), &c));
                if gap < KINK_MARGIN {
                    return None;
                }
                let ad = grad_objective(Dual::<15>::vars(c.x, 0), &c).d;
                let mut worst: f64 = 0.0;
                for j in 0..15 {
                    let h = H * c.x[j].abs().max(1.0);
                    let mut xp = c.x;
                    let mut xm = c.x;
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (grad_objective(xp, &c) - grad_objective(xm, &c)) / (2.0 * h);
                    let err = (ad[j] - fd).abs() / ad[j].abs().max(fd.abs()).max(1e-3);
                    worst = worst.max(err);
                }
                Some(worst)
            })
            .collect();
        next += configs;
        for r in block {
            match r {
                Some(e) if accepted.len() < configs => accepted.push(e),
                Some(_) => {}
                None => skipped += 1,
            }
        }
    }
    let worst = worst_of(accepted.iter().copied());
    let threshold = 1e-4;
    CheckOutcome {
        name: "gradient".into(),
        passed: accepted.len() == configs && worst <= threshold,
        cases: accepted.len(),
        skipped,
        worst,
        threshold,
        detail: format!("max relative error, 15 parameters per configuration, kink margin {KINK_MARGIN:e}"),
    }
}

/// Runs every check; `inject_iou_fault` swaps in [`faulty_rbox_iou`].
pub fn run_all(sizes: &CheckSizes, seed: u64, inject_iou_fault: bool) -> Vec<CheckOutcome> {
    let iou = if inject_iou_fault {
        iou_oracle_check_with(sizes.iou_pairs, sizes.iou_samples, seed, faulty_rbox_iou)
    } else {
        iou_oracle_check(sizes.iou_pairs, sizes.iou_samples, seed)
    };
    vec![
        roundtrip_check(sizes.roundtrip_cases, seed),
        constraint_structure_check(sizes.constraint_problems, seed),
        constraint_analytic_check(sizes.constraint_problems, seed),
        iou,
        loss_boundary_check(sizes.loss_pairs, seed),
        gradient_check(sizes.gradient_configs, seed),
    ]
}
