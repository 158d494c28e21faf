use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use h2rbox_core::geometry::circumscribed_dims;
use h2rbox_core::losses::{l_wh_theta, l_xy};
use h2rbox_core::*;
use proptest::prelude::*;

fn rbox() -> impl Strategy<Value = RBox> {
    (-20.0..20.0f64, -20.0..20.0f64, 0.5..15.0f64, 0.5..15.0f64, -FRAC_PI_2..FRAC_PI_2)
        .prop_map(|(cx, cy, w, h, t)| RBox::new(cx, cy, w, h, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iou_is_symmetric_and_bounded(a in rbox(), b in rbox()) {
        let ab = rbox_iou(&a, &b);
        let ba = rbox_iou(&b, &a);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn iou_with_self_is_one(a in rbox()) {
        prop_assert!((rbox_iou(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iou_ignores_representation(a in rbox(), b in rbox()) {
        let alt = RBox::from_parts(a.cx, a.cy, a.h, a.w, a.theta + FRAC_PI_2);
        prop_assert!((rbox_iou(&a, &b) - rbox_iou(&alt, &b)).abs() < 1e-9);
    }

    #[test]
    fn iou_invariant_under_common_rotation(a in rbox(), b in rbox(), d in -PI..PI) {
        let v = ViewRotation::new(d, Point { x: 3.0, y: -1.0 });
        let before = rbox_iou(&a, &b);
        let after = rbox_iou(&rotate_rbox(&a, &v), &rotate_rbox(&b, &v));
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn circumscribed_box_contains_corners(a in rbox()) {
        let hb = circumscribed_hbox(&a);
        let [x1, y1, x2, y2] = hb.corners();
        for p in &rbox_corners(&a).vertices {
            prop_assert!(p.x >= x1 - 1e-9 && p.x <= x2 + 1e-9 && p.y >= y1 - 1e-9 && p.y <= y2 + 1e-9);
        }
    }

    #[test]
    fn symmetric_twin_shares_circumscribed_box(a in rbox()) {
        let s = symmetric_rbox(&a);
        let (ha, hs) = (circumscribed_hbox(&a), circumscribed_hbox(&s));
        prop_assert!((ha.w - hs.w).abs() < 1e-9 && (ha.h - hs.h).abs() < 1e-9);
        prop_assert!((s.area() - a.area()).abs() < 1e-9);
    }

    #[test]
    fn solving_inverts_circumscription(w in 0.5..20.0f64, h in 0.5..20.0f64, t in -FRAC_PI_2..FRAC_PI_2) {
        prop_assume!((t.abs() - FRAC_PI_4).abs() > 0.05);
        let (bw, bh) = circumscribed_dims(w, h, t);
        let (sw, sh) = solve_wh_given_theta(bw, bh, t).unwrap().unwrap();
        prop_assert!((sw - w).abs() <= 1e-9 * w.max(1.0) && (sh - h).abs() <= 1e-9 * h.max(1.0));
    }

    #[test]
    fn angle_normalize_lands_in_range(t in -50.0..50.0f64) {
        let n = angle_normalize(t);
        prop_assert!((-FRAC_PI_2..FRAC_PI_2).contains(&n));
        let k = (t - n) / PI;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn shape_loss_respects_box_equivalence(a in rbox(), b in rbox()) {
        let l = l_wh_theta(&a, &b);
        prop_assert!(l >= -1e-12);
        let swapped = RBox::from_parts(b.cx, b.cy, b.h, b.w, b.theta - FRAC_PI_2);
        let shifted = RBox::from_parts(b.cx, b.cy, b.w, b.h, b.theta + PI);
        prop_assert!((l - l_wh_theta(&a, &swapped)).abs() < 1e-9);
        prop_assert!((l - l_wh_theta(&a, &shifted)).abs() < 1e-9);
        prop_assert!(l_wh_theta(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn centre_loss_is_a_metric_on_centres(a in rbox(), b in rbox()) {
        prop_assert!((l_xy(&a, &b) - l_xy(&b, &a)).abs() < 1e-12);
        prop_assert!(l_xy(&a, &a) == 0.0);
    }
}

#[test]
fn constraint_sets_narrow_the_feasible_set() {
    let p = ConstraintProblem::from_gt(5.0, 2.0, 0.6, 0.7).unwrap();
    let opts = EnumerateOptions::default();
    let counts: Vec<Classification> = ConstraintSet::ALL
        .iter()
        .map(|&s| enumerate_feasible(&p, s, &opts).unwrap().classification)
        .collect();
    assert_eq!(counts, [Classification::InfiniteFamily, Classification::TwoFold, Classification::Unique]);
}

#[test]
fn perfect_detections_score_full_ap() {
    let scene = generate_scene(&SceneGenConfig { count: 30, ..SceneGenConfig::default() }, 5).unwrap();
    let dets: Vec<Detection> = scene
        .objects
        .iter()
        .map(|o| Detection { id: o.id, rbox: o.gt_rbox, score: 1.0, class_id: o.class_id })
        .collect();
    let r = evaluate(&dets, &scene.objects, &EvalConfig::default());
    assert!((r.ap - 1.0).abs() < 1e-12 && (r.ap50 - 1.0).abs() < 1e-12);
}

#[test]
fn scenes_are_reproducible_per_seed() {
    let g = SceneGenConfig::default();
    assert_eq!(generate_scene(&g, 3).unwrap(), generate_scene(&g, 3).unwrap());
    assert_ne!(generate_scene(&g, 3).unwrap(), generate_scene(&g, 4).unwrap());
}
