use std::path::PathBuf;

use h2rbox_core::constraint_lab::{
    analytic_two_solutions, enumerate_feasible, residual_curve, AnalyticPair, Classification, ConstraintProblem,
    ConstraintSet, SolutionSet,
};
use h2rbox_core::eval_metrics::{evaluate, Detection, EvalResult};
use h2rbox_core::geometry::RBox;
use h2rbox_core::recovery::{
    ablate as run_ablation, canonical_theta_deg, run_recovery, AblationTable, Assigner, InitMode, Optimizer,
    RecoveryConfig, RecoveryError, RecoveryReport, RecoverySummary,
};
use h2rbox_core::selfcheck::{self, CheckOutcome, CheckSizes};
use h2rbox_core::views_assign::{generate_scene, BorderMode, SceneGenConfig, SceneSpec};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt9, table, OutDir};
use crate::svg::{Plot, Series};
use crate::{
    AblateArgs, AssignerArg, BorderArg, CheckArgs, ConstraintsArgs, EvalArgs, InitArg, OptimizerArg, Preset,
    RecoverArgs, RecoveryArgs, SceneArgs, Suite,
};

pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

// ---------------------------------------------------------------- constraints

#[derive(Serialize)]
struct GroundTruth {
    w: f64,
    h: f64,
    theta: f64,
}

#[derive(Serialize)]
struct SetReport {
    set: ConstraintSet,
    #[serde(flatten)]
    result: SolutionSet,
}

#[derive(Serialize)]
struct AnalyticReport {
    pair: Option<AnalyticPair>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ConstraintsReport {
    problem: ConstraintProblem,
    ground_truth: Option<GroundTruth>,
    results: Vec<SetReport>,
    analytic: AnalyticReport,
    notes: Vec<String>,
}

fn parse_sets(s: &str) -> Result<Vec<ConstraintSet>, CliError> {
    let sets: Vec<ConstraintSet> =
        s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_, _>>().map_err(CliError::config)?;
    if sets.is_empty() {
        return Err(CliError::Config("--sets needs at least one constraint set".into()));
    }
    Ok(sets)
}

pub fn constraints(ctx: &Context, a: &ConstraintsArgs) -> Result<(), CliError> {
    let (problem, gt) = match (&a.problem, a.w, a.h, a.theta, a.dtheta) {
        (Some(path), ..) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let p: ConstraintProblem =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            p.validate().map_err(CliError::config)?;
            (p, None)
        }
        (None, Some(w), Some(h), Some(t), Some(d)) => {
            let p = ConstraintProblem::from_gt(w, h, deg(t), deg(d)).map_err(CliError::config)?;
            (p, Some(GroundTruth { w, h, theta: deg(t) }))
        }
        _ => return Err(CliError::Config("give --w/--h/--theta/--dtheta or --problem".into())),
    };
    let sets = parse_sets(&a.sets)?;
    let mut opts = ctx.cfg.constraints;
    if let Some(g) = a.grid_step {
        opts.grid_step = deg(g);
    }

    let mut results = Vec::new();
    for &set in &sets {
        let result = enumerate_feasible(&problem, set, &opts).map_err(CliError::config)?;
        results.push(SetReport { set, result });
    }
    let analytic = match analytic_two_solutions(&problem) {
        Ok(pair) => AnalyticReport { pair: Some(pair), error: None },
        Err(e) => AnalyticReport { pair: None, error: Some(e.to_string()) },
    };
    let mut notes = Vec::new();
    if problem.is_square() {
        notes.push("DEGENERATE_SQUARE: both observations are square, so every angle is feasible".to_string());
    }
    if problem.delta_theta.rem_euclid(std::f64::consts::FRAC_PI_2).min(
        std::f64::consts::FRAC_PI_2 - problem.delta_theta.rem_euclid(std::f64::consts::FRAC_PI_2),
    ) < 1e-9
    {
        notes.push("view rotation is a multiple of 90 degrees: the second view adds no angle information".to_string());
    }
    let report = ConstraintsReport { problem, ground_truth: gt, results, analytic, notes };

    let mut out = OutDir::create(&ctx.out_dir)?;
    out.write_json("constraints.json", &report)?;
    if a.svg {
        let colors = ["#1f77b4", "#d62728", "#2ca02c"];
        let series = sets
            .iter()
            .enumerate()
            .map(|(k, &set)| Series {
                label: set.to_string(),
                color: colors[k % colors.len()],
                points: residual_curve(&problem, set, &opts)
                    .into_iter()
                    .map(|(t, r)| (t.to_degrees(), r.map(|r| r.max(1e-16).log10())))
                    .collect(),
            })
            .collect();
        let plot = Plot {
            title: "Residual of the circumscribed-rectangle equations".into(),
            x_label: "theta (deg)".into(),
            y_label: "log10 residual".into(),
            x_range: (-90.0, 90.0),
            y_range: (-16.0, 2.0),
            series,
            scatter: false,
            guides: Vec::new(),
        };
        out.write("constraints_residuals.svg", &plot.render())?;
    }

    let mut rows = Vec::new();
    for r in &report.results {
        let sols: Vec<String> = r
            .result
            .solutions
            .iter()
            .take(6)
            .map(|s| format!("({}, {}, {}deg)", fmt9(s.w), fmt9(s.h), fmt9(s.theta.to_degrees())))
            .collect();
        let more = r.result.solutions.len().saturating_sub(6);
        rows.push(vec![
            r.set.to_string(),
            r.result.classification.to_string(),
            r.result.solutions.len().to_string(),
            format!("{}{}", sols.join(" "), if more > 0 { format!(" +{more}") } else { String::new() }),
        ]);
    }
    print!("{}", table(&["set", "classification", "count", "solutions (w, h, theta)"], &rows));
    for n in &report.notes {
        println!("note: {n}");
    }
    let empty: Vec<String> = report
        .results
        .iter()
        .filter(|r| r.result.classification == Classification::Empty)
        .map(|r| r.set.to_string())
        .collect();
    if !empty.is_empty() {
        return Err(CliError::NoSolution(format!("no feasible rectangle under {}", empty.join(", "))));
    }
    Ok(())
}

// ---------------------------------------------------------------- scenes

fn scene_config(ctx: &Context, a: &SceneArgs) -> SceneGenConfig {
    let mut g = match a.preset {
        None => ctx.cfg.scene,
        Some(Preset::Standard) => SceneGenConfig::default(),
        Some(Preset::Dense) => SceneGenConfig::dense(),
        Some(Preset::Circular) => SceneGenConfig::with_circular(),
    };
    if let Some(n) = a.objects {
        g.count = n;
    }
    if let Some(n) = a.circular {
        g.circular_count = n;
    }
    if let Some(t) = a.theta_min {
        g.theta_abs_deg.0 = t;
    }
    if let Some(t) = a.theta_max {
        g.theta_abs_deg.1 = t;
    }
    g
}

fn load_scene(ctx: &Context, a: &SceneArgs) -> Result<SceneSpec, CliError> {
    let scene = match &a.scene {
        Some(path) => SceneSpec::read_json(path).map_err(CliError::config)?,
        None => generate_scene(&scene_config(ctx, a), ctx.seed).map_err(CliError::config)?,
    };
    if let Some(path) = &a.write_scene {
        // full precision: the scene is an input, not a report
        let mut text = serde_json::to_string_pretty(&scene).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(scene)
}

fn recovery_config(ctx: &Context, a: &RecoveryArgs) -> Result<RecoveryConfig, CliError> {
    let mut c = ctx.cfg.recovery;
    c.seed = ctx.seed;
    if let Some(v) = a.steps {
        c.steps = v;
    }
    if let Some(v) = a.step_size {
        c.step_size = v;
    }
    if let Some(v) = a.optimizer {
        c.optimizer = match v {
            OptimizerArg::Gd => Optimizer::Gd,
            OptimizerArg::Rms => Optimizer::Rms,
        };
    }
    if let Some(v) = a.views {
        c.num_views = v;
    }
    if let Some(v) = a.ss {
        c.ss_enabled = v;
    }
    if let Some(v) = a.ws_view2 {
        c.ws_on_view2 = v;
    }
    if let Some(v) = a.assigner {
        c.assigner = match v {
            AssignerArg::O2o => Assigner::O2o,
            AssignerArg::O2m => Assigner::O2m,
        };
    }
    if let Some(v) = a.border {
        c.border_mode = match v {
            BorderArg::Crop => BorderMode::Crop,
            BorderArg::Pad => BorderMode::Pad,
        };
    }
    if let Some(v) = a.s1 {
        c.s1_mask_circular = v;
    }
    if let Some(v) = a.s2 {
        c.s2_output_hbox_circular = v;
    }
    if let Some(v) = a.stop_grad {
        c.stop_grad_target = v;
    }
    if let Some(v) = a.init {
        c.init = match v {
            InitArg::Horizontal => InitMode::Horizontal,
            InitArg::Symmetric => InitMode::Symmetric,
        };
    }
    c.validate().map_err(CliError::config)?;
    Ok(c)
}

fn recovery_err(e: RecoveryError) -> CliError {
    CliError::Config(e.to_string())
}

// ---------------------------------------------------------------- recover

#[derive(Serialize)]
struct RecoverSummaryReport<'a> {
    seed: u64,
    config: &'a RecoveryConfig,
    summary: &'a RecoverySummary,
    eval: &'a EvalResult,
    dropped_ids: &'a [u32],
    diverged_at: Option<usize>,
}

pub fn recover(ctx: &Context, a: &RecoverArgs) -> Result<(), CliError> {
    let scene = load_scene(ctx, &a.scene)?;
    let cfg = recovery_config(ctx, &a.recovery)?;
    let report = run_recovery(&scene, &cfg).map_err(recovery_err)?;
    let eval = report.evaluate(&scene.objects);

    let mut out = OutDir::create(&ctx.out_dir)?;
    out.write_json("recover_report.json", &report)?;
    out.write_json(
        "recover_summary.json",
        &RecoverSummaryReport {
            seed: ctx.seed,
            config: &cfg,
            summary: &report.summary,
            eval: &eval,
            dropped_ids: &report.dropped_ids,
            diverged_at: report.diverged_at,
        },
    )?;
    let rows: Vec<Vec<String>> = report
        .objects
        .iter()
        .map(|o| {
            vec![
                o.object_id.to_string(),
                fmt9(canonical_theta_deg(&o.gt)),
                fmt9(canonical_theta_deg(&o.output)),
                fmt9(o.angle_err_deg),
                o.flipped.map(|f| f.to_string()).unwrap_or_default(),
                fmt9(o.iou),
                fmt9(o.final_loss),
            ]
        })
        .collect();
    out.write_csv(
        "recover_objects.csv",
        &["object_id", "gt_theta_deg", "pred_theta_deg", "angle_err_deg", "flipped", "iou", "final_loss"],
        &rows,
    )?;
    if a.svg {
        out.write("recover_angles.svg", &angle_scatter(&report))?;
    }

    let s = &report.summary;
    println!(
        "objects {} (dropped {}), median angle error {} deg, p95 {} deg, under 3 deg {}, flip fraction {}, mean IoU {}",
        s.objects,
        s.dropped,
        fmt9(s.median_angle_err_deg),
        fmt9(s.p95_angle_err_deg),
        fmt9(s.frac_under_3deg),
        fmt9(s.flip_fraction),
        fmt9(s.mean_iou)
    );
    println!("AP {}  AP50 {}  AP75 {}", fmt9(eval.ap), fmt9(eval.ap50), fmt9(eval.ap75));
    match report.diverged_at {
        Some(step) => Err(CliError::Diverged(step)),
        None => Ok(()),
    }
}

fn angle_scatter(report: &RecoveryReport) -> String {
    let pick = |circular: bool| -> Vec<(f64, Option<f64>)> {
        report
            .objects
            .iter()
            .filter(|o| o.circular == circular)
            .map(|o| (canonical_theta_deg(&o.gt), Some(canonical_theta_deg(&o.output))))
            .collect()
    };
    let mut series = vec![Series { label: "objects".into(), color: "#1f77b4", points: pick(false) }];
    let circ = pick(true);
    if !circ.is_empty() {
        series.push(Series { label: "circular".into(), color: "#ff7f0e", points: circ });
    }
    Plot {
        title: "Ground-truth vs recovered angle".into(),
        x_label: "ground truth theta (deg)".into(),
        y_label: "recovered theta (deg)".into(),
        x_range: (-90.0, 90.0),
        y_range: (-90.0, 90.0),
        series,
        scatter: true,
        // identity and mirror (flipped) diagonals
        guides: vec![(-90.0, -90.0, 90.0, 90.0), (-90.0, 90.0, 90.0, -90.0)],
    }
    .render()
}

// ---------------------------------------------------------------- ablate

#[derive(Serialize)]
struct AblateReport<'a> {
    seed: u64,
    base: &'a RecoveryConfig,
    table: &'a AblationTable,
}

fn yes_no(b: bool) -> String {
    if b { "on" } else { "off" }.to_string()
}

pub fn ablate(ctx: &Context, a: &AblateArgs) -> Result<(), CliError> {
    let scene = load_scene(ctx, &a.scene)?;
    let base = recovery_config(ctx, &a.recovery)?;
    let t = run_ablation(&scene, &base).map_err(recovery_err)?;

    let header = [
        "ss", "assigner", "border", "s1", "s2", "AP", "AP50", "AP75", "circular_AP", "median_err_deg", "under_3deg",
        "flip_fraction", "diverged",
    ];
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            vec![
                yes_no(r.ss_enabled),
                r.assigner.to_string(),
                r.border_mode.to_string(),
                yes_no(r.s1),
                yes_no(r.s2),
                fmt9(r.eval.ap),
                fmt9(r.eval.ap50),
                fmt9(r.eval.ap75),
                r.circular_ap.map(fmt9).unwrap_or_default(),
                fmt9(r.summary.median_angle_err_deg),
                fmt9(r.summary.frac_under_3deg),
                fmt9(r.summary.flip_fraction),
                r.diverged.to_string(),
            ]
        })
        .collect();
    let text = table(&header, &rows);
    let mut out = OutDir::create(&ctx.out_dir)?;
    out.write_json("ablation.json", &AblateReport { seed: ctx.seed, base: &base, table: &t })?;
    out.write_csv("ablation.csv", &header, &rows)?;
    out.write("ablation.txt", &text)?;
    print!("{text}");
    Ok(())
}

// ---------------------------------------------------------------- eval

/// Just the fields of a recovery report that evaluation needs.
#[derive(Deserialize)]
struct ReportObjects {
    objects: Vec<ReportObject>,
}

#[derive(Deserialize)]
struct ReportObject {
    object_id: u32,
    class_id: u32,
    output: RBox,
    final_loss: Option<f64>,
}

fn read_detections(path: &std::path::Path) -> Result<Vec<Detection>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if let Ok(d) = serde_json::from_str::<Vec<Detection>>(&text) {
        return Ok(d);
    }
    let r: ReportObjects = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("{}: neither a detection list nor a recovery report ({e})", path.display()))
    })?;
    Ok(r.objects
        .into_iter()
        .map(|o| Detection {
            id: o.object_id,
            rbox: o.output,
            score: o.final_loss.map(|l| 1.0 / (1.0 + l)).unwrap_or(0.0),
            class_id: o.class_id,
        })
        .collect())
}

pub fn eval(ctx: &Context, a: &EvalArgs) -> Result<(), CliError> {
    let scene = SceneSpec::read_json(&a.scene).map_err(CliError::config)?;
    let dets = read_detections(&a.detections)?;
    for d in &dets {
        d.rbox.validate().map_err(|e| CliError::Config(format!("detection {}: {e}", d.id)))?;
    }
    let mut cfg = ctx.cfg.eval;
    if let Some(v) = a.s2 {
        cfg.s2_circular = v;
    }
    if let Some(v) = a.tau {
        cfg.flip_tau_deg = v;
    }
    let r = evaluate(&dets, &scene.objects, &cfg);

    let header = ["class", "num_gt", "AP", "AP50", "AP75"];
    let mut rows: Vec<Vec<String>> = r
        .per_class
        .iter()
        .map(|c| vec![c.class_id.to_string(), c.num_gt.to_string(), fmt9(c.ap), fmt9(c.ap50), fmt9(c.ap75)])
        .collect();
    rows.push(vec!["mean".into(), scene.objects.len().to_string(), fmt9(r.ap), fmt9(r.ap50), fmt9(r.ap75)]);
    let text = table(&header, &rows);
    let mut out = OutDir::create(&ctx.out_dir)?;
    out.write_json("eval.json", &r)?;
    out.write_csv("eval.csv", &header, &rows)?;
    print!("{text}");
    println!(
        "angle error: median {} deg, p95 {} deg, flip fraction {} ({} defined)",
        fmt9(r.angle.median_deg),
        fmt9(r.angle.p95_deg),
        fmt9(r.angle.flip_fraction),
        r.angle.flip_defined
    );
    Ok(())
}

// ---------------------------------------------------------------- check

#[derive(Serialize)]
struct CheckReport<'a> {
    seed: u64,
    sizes: &'a CheckSizes,
    iou_fault_injected: bool,
    outcomes: &'a [CheckOutcome],
}

pub fn check(ctx: &Context, a: &CheckArgs) -> Result<(), CliError> {
    let mut sizes = if a.quick { CheckSizes::quick() } else { ctx.cfg.check };
    if let Some(p) = a.pairs {
        sizes.iou_pairs = p;
    }
    if let Some(s) = a.samples {
        sizes.iou_samples = s;
    }
    let wants = |s: Suite| a.suite.contains(&Suite::All) || a.suite.contains(&s);
    let seed = ctx.seed;
    let mut outcomes = Vec::new();
    if wants(Suite::Roundtrip) {
        outcomes.push(selfcheck::roundtrip_check(sizes.roundtrip_cases, seed));
    }
    if wants(Suite::Constraints) {
        outcomes.push(selfcheck::constraint_structure_check(sizes.constraint_problems, seed));
        outcomes.push(selfcheck::constraint_analytic_check(sizes.constraint_problems, seed));
    }
    if wants(Suite::Iou) {
        outcomes.push(if a.inject_iou_bug {
            selfcheck::iou_oracle_check_with(sizes.iou_pairs, sizes.iou_samples, seed, selfcheck::faulty_rbox_iou)
        } else {
            selfcheck::iou_oracle_check(sizes.iou_pairs, sizes.iou_samples, seed)
        });
    }
    if wants(Suite::Loss) {
        outcomes.push(selfcheck::loss_boundary_check(sizes.loss_pairs, seed));
    }
    if wants(Suite::Gradient) {
        outcomes.push(selfcheck::gradient_check(sizes.gradient_configs, seed));
    }

    let mut out = OutDir::create(&ctx.out_dir)?;
    out.write_json(
        "check.json",
        &CheckReport { seed, sizes: &sizes, iou_fault_injected: a.inject_iou_bug, outcomes: &outcomes },
    )?;
    for o in &outcomes {
        println!(
            "{} {:<22} cases {:>6}  skipped {:>3}  worst {:<16} threshold {}  ({})",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.cases,
            o.skipped,
            fmt9(o.worst),
            fmt9(o.threshold),
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}
