//! Browser demo: solve a synthetic scene, run a small noise sweep, and trace the
//! rotation solver. Each export returns a JSON string for the page to plot.

use poseamm::bench::{generate_scene, pose_errors, run_sweep, summarize, ProblemKind, SceneConfig, SweepConfig};
use poseamm::{
    build_gec_form, build_upnp_form, estimate_pose, rotation_step, AmmConfig, Correspondences,
    InitKind, Objective, Pose, SolverKind,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct PoseJson {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&Pose> for PoseJson {
    fn from(p: &Pose) -> Self {
        let r = p.rotation.matrix();
        PoseJson {
            rotation: std::array::from_fn(|k| r[(k / 3, k % 3)]),
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

#[derive(Serialize)]
pub struct SolveReport {
    pub problem: &'static str,
    pub solver: &'static str,
    pub truth: PoseJson,
    pub estimate: PoseJson,
    pub rot_err: f64,
    pub trans_err: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub noise: f64,
    pub solver: String,
    pub mean_rot_err: f64,
    pub mean_trans_err: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

#[derive(Serialize)]
pub struct RotationTrace {
    pub values: Vec<f64>,
    pub angles: Vec<f64>,
    pub collapsed: bool,
}

fn scene_config(points: usize, noise: f64, seed: u64) -> Result<SceneConfig, String> {
    let cfg = SceneConfig { num_correspondences: points, noise_sigma_px: noise, seed, ..SceneConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Native entry point behind [`solve_scene`].
pub fn solve_scene_report(
    problem: &str,
    solver: &str,
    points: usize,
    noise: f64,
    seed: u64,
    init: &str,
) -> Result<SolveReport, String> {
    let problem: ProblemKind = problem.parse()?;
    let solver: SolverKind = solver.parse()?;
    let init: InitKind = init.parse()?;
    let scene = generate_scene(problem, &scene_config(points, noise, seed)?);
    let res = estimate_pose(solver, &scene.data, init, None, &AmmConfig::default()).map_err(|e| e.to_string())?;
    let (rot_err, trans_err) = pose_errors(&scene.ground_truth, &res.pose);
    Ok(SolveReport {
        problem: problem.name(),
        solver: solver.name(),
        truth: (&scene.ground_truth).into(),
        estimate: (&res.pose).into(),
        rot_err,
        trans_err,
        iterations: res.outer_iterations,
        converged: res.converged,
        objective_trace: res.objective_trace,
    })
}

/// Native entry point behind [`noise_sweep`].
pub fn noise_sweep_points(
    problem: &str,
    trials: usize,
    max_noise: f64,
    levels: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, String> {
    if levels < 2 || max_noise.is_nan() || max_noise < 0.0 || trials == 0 {
        return Err("need at least two levels, a non-negative maximum and one trial".into());
    }
    let mut cfg = SweepConfig::new(problem.parse()?);
    cfg.noise_levels = (0..levels).map(|k| max_noise * k as f64 / (levels - 1) as f64).collect();
    cfg.trials = trials;
    cfg.scene.seed = seed;
    cfg.record_timing = false;
    Ok(summarize(&run_sweep(&cfg))
        .into_iter()
        .map(|s| SweepPoint {
            noise: s.noise_sigma,
            solver: s.solver_name,
            mean_rot_err: s.mean_rot_err,
            mean_trans_err: s.mean_trans_err,
            mean_iterations: s.mean_iterations,
            converged_fraction: s.converged_fraction,
        })
        .collect())
}

/// Native entry point behind [`rotation_trace`]: rotation steps from the identity with
/// the translation held at its true value.
pub fn rotation_trace_steps(
    problem: &str,
    points: usize,
    noise: f64,
    seed: u64,
    steps: usize,
) -> Result<RotationTrace, String> {
    let problem: ProblemKind = problem.parse()?;
    let scene = generate_scene(problem, &scene_config(points, noise, seed)?);
    let t = scene.ground_truth.translation;
    let err = |e: poseamm::PoseError| e.to_string();
    let form: Box<dyn Objective> = match &scene.data {
        Correspondences::Relative(c) => Box::new(build_gec_form(c).map_err(err)?),
        Correspondences::Absolute(c) => Box::new(build_upnp_form(c).map_err(err)?),
    };
    let truth = *scene.ground_truth.rotation.matrix();
    let mut x = poseamm::geometry::Mat3::identity();
    let mut mu = AmmConfig::default().initial_mu;
    let mut values = vec![form.value(&x, &t)];
    let mut angles = vec![angle_between(&x, &truth)];
    let mut collapsed = false;
    for _ in 0..steps {
        let s = rotation_step(form.as_ref(), &x, &t, mu).map_err(err)?;
        if s.collapsed || s.rate == 0.0 {
            collapsed = s.collapsed;
            break;
        }
        x = s.rotation;
        mu = s.mu;
        values.push(s.value);
        angles.push(angle_between(&x, &truth));
    }
    Ok(RotationTrace { values, angles, collapsed })
}

fn angle_between(a: &poseamm::geometry::Mat3, b: &poseamm::geometry::Mat3) -> f64 {
    let c = ((a.transpose() * b).trace() - 1.0) / 2.0;
    c.clamp(-1.0, 1.0).acos()
}

#[wasm_bindgen]
pub fn solve_scene(problem: &str, solver: &str, points: usize, noise: f64, seed: u64, init: &str) -> Result<String, JsValue> {
    to_json(&solve_scene_report(problem, solver, points, noise, seed, init).map_err(|e| JsValue::from_str(&e))?)
}

#[wasm_bindgen]
pub fn noise_sweep(problem: &str, trials: usize, max_noise: f64, levels: usize, seed: u64) -> Result<String, JsValue> {
    to_json(&noise_sweep_points(problem, trials, max_noise, levels, seed).map_err(|e| JsValue::from_str(&e))?)
}

#[wasm_bindgen]
pub fn rotation_trace(problem: &str, points: usize, noise: f64, seed: u64, steps: usize) -> Result<String, JsValue> {
    to_json(&rotation_trace_steps(problem, points, noise, seed, steps).map_err(|e| JsValue::from_str(&e))?)
}
