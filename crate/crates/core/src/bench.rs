//! Synthetic scenes, pixel noise, error metrics and the noise-sweep harness.
//!
//! Defaults: focal length 800 px, point depths in [4, 8], non-central ray origins in a
//! cube of half-width 0.5, translations in a cube of half-width 2, rotation angles up
//! to π/2. Absolute error magnitudes depend on these values.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::amm::{AmmConfig, AmmResult};
use crate::gec::RayCorrespondence;
use crate::geometry::{ObservedRay, PlueckerLine, Pose, Rotation, Vec3};
use crate::gpnp::PointRayCorrespondence;
use crate::solver::{estimate_pose, Correspondences, InitKind, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rig {
    Central,
    NonCentral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub num_correspondences: usize,
    pub noise_sigma_px: f64,
    pub focal_px: f64,
    pub rig: Rig,
    /// Half-width of the cube ray origins are drawn from (non-central rigs).
    pub rig_extent: f64,
    pub point_depth_range: (f64, f64),
    pub rotation_max_angle: f64,
    pub translation_extent: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            num_correspondences: 20,
            noise_sigma_px: 0.0,
            focal_px: 800.0,
            rig: Rig::NonCentral,
            rig_extent: 0.5,
            point_depth_range: (4.0, 8.0),
            rotation_max_angle: std::f64::consts::FRAC_PI_2,
            translation_extent: 2.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), String> {
        let (lo, hi) = self.point_depth_range;
        if self.num_correspondences == 0 {
            return Err("need at least one correspondence".into());
        }
        if !(self.noise_sigma_px >= 0.0) || !(self.focal_px > 0.0) {
            return Err("noise must be non-negative and focal length positive".into());
        }
        if !(lo > 0.0 && hi >= lo) {
            return Err("depth range must be positive and ordered".into());
        }
        if !(self.rig_extent >= 0.0 && self.translation_extent >= 0.0 && self.rotation_max_angle >= 0.0) {
            return Err("extents must be non-negative".into());
        }
        Ok(())
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn random_in_cube<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> Vec3 {
    if half_width == 0.0 {
        return Vec3::zeros();
    }
    Vec3::from_fn(|_, _| rng.random_range(-half_width..=half_width))
}

/// Pose with a uniformly oriented axis, angle in `[0, max_angle]` and translation in
/// the cube of half-width `translation_extent`.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, max_angle: f64, translation_extent: f64) -> Pose {
    let axis = random_unit(rng);
    let angle = if max_angle > 0.0 { rng.random_range(0.0..=max_angle) } else { 0.0 };
    Pose::new(Rotation::from_axis_angle(&axis, angle), random_in_cube(rng, translation_extent))
}

fn ray_origin<R: Rng + ?Sized>(rng: &mut R, cfg: &SceneConfig) -> Vec3 {
    match cfg.rig {
        Rig::Central => Vec3::zeros(),
        Rig::NonCentral => random_in_cube(rng, cfg.rig_extent),
    }
}

fn depth<R: Rng + ?Sized>(rng: &mut R, cfg: &SceneConfig) -> f64 {
    let (lo, hi) = cfg.point_depth_range;
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Perturbs a unit bearing by Gaussian pixel noise on the image plane at distance
/// `focal_px` along the bearing, then renormalizes.
pub fn apply_pixel_noise<R: Rng + ?Sized>(bearing: &Vec3, sigma_px: f64, focal_px: f64, rng: &mut R) -> Vec3 {
    if sigma_px == 0.0 {
        return *bearing;
    }
    let (u, w) = tangent_basis(bearing);
    let normal = Normal::new(0.0, sigma_px).expect("sigma is finite and non-negative");
    let du: f64 = normal.sample(rng);
    let dw: f64 = normal.sample(rng);
    (bearing * focal_px + u * du + w * dw).normalize()
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `b`.
pub fn tangent_basis(b: &Vec3) -> (Vec3, Vec3) {
    let helper = if b.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = b.cross(&helper).normalize();
    let w = b.cross(&u);
    (u, w)
}

pub fn generate_absolute_scene(cfg: &SceneConfig) -> (Pose, Vec<PointRayCorrespondence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_absolute_scene_with(cfg, &mut rng)
}

/// Camera-frame points at the configured depths along random rays, mapped back to the
/// world with the inverse of a random pose.
pub fn generate_absolute_scene_with<R: Rng + ?Sized>(
    cfg: &SceneConfig,
    rng: &mut R,
) -> (Pose, Vec<PointRayCorrespondence>) {
    let pose = random_pose(rng, cfg.rotation_max_angle, cfg.translation_extent);
    let r_t = pose.rotation.matrix().transpose();
    let corrs = (0..cfg.num_correspondences)
        .map(|_| {
            let origin = ray_origin(rng, cfg);
            let dir = random_unit(rng);
            let cam_point = origin + dir * depth(rng, cfg);
            let world = r_t * (cam_point - pose.translation);
            let noisy = apply_pixel_noise(&dir, cfg.noise_sigma_px, cfg.focal_px, rng);
            PointRayCorrespondence::new(world, ObservedRay::new(noisy, origin).expect("unit bearing"))
        })
        .collect();
    (pose, corrs)
}

pub fn generate_relative_scene(cfg: &SceneConfig) -> (Pose, Vec<RayCorrespondence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_relative_scene_with(cfg, &mut rng)
}

/// Pairs of rays meeting at a common point, expressed in two frames related by
/// `X₁ = R X₂ + t`. Each ray gets its own origin for non-central rigs.
pub fn generate_relative_scene_with<R: Rng + ?Sized>(
    cfg: &SceneConfig,
    rng: &mut R,
) -> (Pose, Vec<RayCorrespondence>) {
    let pose = random_pose(rng, cfg.rotation_max_angle, cfg.translation_extent);
    let r_t = pose.rotation.matrix().transpose();
    let corrs = (0..cfg.num_correspondences)
        .map(|_| {
            let c1 = ray_origin(rng, cfg);
            let d1 = random_unit(rng);
            let x1 = c1 + d1 * depth(rng, cfg);
            let x2 = r_t * (x1 - pose.translation);
            let c2 = ray_origin(rng, cfg);
            let d2 = (x2 - c2).normalize();
            let n1 = apply_pixel_noise(&d1, cfg.noise_sigma_px, cfg.focal_px, rng);
            let n2 = apply_pixel_noise(&d2, cfg.noise_sigma_px, cfg.focal_px, rng);
            RayCorrespondence::new(
                PlueckerLine::from_point_direction(&c1, &n1).expect("unit direction"),
                PlueckerLine::from_point_direction(&c2, &n2).expect("unit direction"),
            )
        })
        .collect();
    (pose, corrs)
}

/// `(|R_gt - R_est|_F, |t_gt - t_est|)`.
pub fn pose_errors(gt: &Pose, est: &Pose) -> (f64, f64) {
    (
        (gt.rotation.matrix() - est.rotation.matrix()).norm(),
        (gt.translation - est.translation).norm(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    RelativeNonCentral,
    AbsoluteCentral,
    AbsoluteNonCentral,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::RelativeNonCentral => "relative-noncentral",
            ProblemKind::AbsoluteCentral => "absolute-central",
            ProblemKind::AbsoluteNonCentral => "absolute-noncentral",
        }
    }

    pub fn rig(&self) -> Rig {
        match self {
            ProblemKind::AbsoluteCentral => Rig::Central,
            _ => Rig::NonCentral,
        }
    }

    pub fn is_relative(&self) -> bool {
        matches!(self, ProblemKind::RelativeNonCentral)
    }

    pub fn default_solvers(&self) -> Vec<SolverKind> {
        if self.is_relative() {
            vec![SolverKind::AmmGec]
        } else {
            vec![SolverKind::AmmGpnp, SolverKind::AmmUpnp]
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ProblemKind::RelativeNonCentral, ProblemKind::AbsoluteCentral, ProblemKind::AbsoluteNonCentral]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown problem '{s}'"))
    }
}

/// One synthetic scene with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub ground_truth: Pose,
    pub data: Correspondences,
}

pub fn generate_scene(problem: ProblemKind, cfg: &SceneConfig) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_scene_with(problem, cfg, &mut rng)
}

fn generate_scene_with<R: Rng + ?Sized>(problem: ProblemKind, cfg: &SceneConfig, rng: &mut R) -> Scene {
    let cfg = SceneConfig { rig: problem.rig(), ..cfg.clone() };
    if problem.is_relative() {
        let (ground_truth, corrs) = generate_relative_scene_with(&cfg, rng);
        Scene { ground_truth, data: Correspondences::Relative(corrs) }
    } else {
        let (ground_truth, corrs) = generate_absolute_scene_with(&cfg, rng);
        Scene { ground_truth, data: Correspondences::Absolute(corrs) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub problem: ProblemKind,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    /// Scene parameters; `noise_sigma_px`, `rig` and `seed` are set per trial.
    pub scene: SceneConfig,
    pub solvers: Vec<SolverKind>,
    pub init: InitKind,
    pub amm: AmmConfig,
    /// When false, `wall_time_ns` is written as 0 so output is reproducible bit for bit.
    pub record_timing: bool,
    /// Worker threads; 0 picks the default.
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(problem: ProblemKind) -> Self {
        SweepConfig {
            problem,
            noise_levels: (0..=10).map(f64::from).collect(),
            trials: 200,
            scene: SceneConfig::default(),
            solvers: problem.default_solvers(),
            init: InitKind::Linear,
            amm: AmmConfig::default(),
            record_timing: true,
            threads: 0,
        }
    }

    /// Checks the scene and solver settings, and that every solver suits the problem.
    pub fn validate(&self) -> Result<(), String> {
        self.scene.validate()?;
        self.amm.validate()?;
        if self.noise_levels.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err("noise levels must be finite and non-negative".into());
        }
        if self.solvers.is_empty() {
            return Err("no solvers selected".into());
        }
        if let Some(s) = self.solvers.iter().find(|s| s.is_relative() != self.problem.is_relative()) {
            return Err(format!("solver {s} does not apply to {}", self.problem.name()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub noise_sigma: f64,
    pub trial_index: usize,
    pub solver_name: String,
    pub rot_err_frobenius: f64,
    pub trans_err_norm: f64,
    pub wall_time_ns: u64,
    pub outer_iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
}

/// A trial record plus the full solver output, when the solve succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub result: Option<AmmResult>,
    pub error: Option<String>,
}

/// Parses an inclusive `min:step:max` grid (or a single value) of noise levels.
pub fn parse_noise_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("'{s}' is not a number in noise grid '{spec}'"));
    let (lo, step, hi) = match parts.as_slice() {
        [v] => (num(v)?, 1.0, num(v)?),
        [lo, step, hi] => (num(lo)?, num(step)?, num(hi)?),
        _ => return Err(format!("noise grid '{spec}' must look like min:step:max")),
    };
    if !(lo >= 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(format!("noise grid '{spec}' needs 0 <= min <= max"));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(format!("noise grid '{spec}' needs a positive step"));
    }
    // tolerate rounding in (max - min) / step so "0:0.1:1" includes 1
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 10_000 {
        return Err(format!("noise grid '{spec}' has too many levels"));
    }
    Ok((0..=count).map(|k| lo + step * k as f64).collect())
}

/// Per-trial seed from the sweep seed, noise-level index and trial index.
pub fn trial_seed(seed: u64, level: usize, trial: usize) -> u64 {
    let mut s = splitmix64(seed);
    s = splitmix64(s ^ level as u64);
    splitmix64(s ^ (trial as u64).rotate_left(32))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one (noise level, trial) cell for every configured solver on a shared scene.
pub fn run_trial(cfg: &SweepConfig, level: usize, trial: usize) -> Vec<TrialOutcome> {
    let sigma = cfg.noise_levels[level];
    let scene_cfg = SceneConfig {
        noise_sigma_px: sigma,
        seed: trial_seed(cfg.scene.seed, level, trial),
        ..cfg.scene.clone()
    };
    let scene = generate_scene(cfg.problem, &scene_cfg);
    cfg.solvers
        .iter()
        .map(|&solver| {
            // the clock is only read when asked for; wasm32 has none
            let start = cfg.record_timing.then(Instant::now);
            let out = estimate_pose(solver, &scene.data, cfg.init, None, &cfg.amm);
            let wall_time_ns = start.map_or(0, |s| s.elapsed().as_nanos() as u64);
            match out {
                Ok(res) => {
                    let (rot, trans) = pose_errors(&scene.ground_truth, &res.pose);
                    TrialOutcome {
                        record: TrialRecord {
                            noise_sigma: sigma,
                            trial_index: trial,
                            solver_name: solver.name().to_string(),
                            rot_err_frobenius: rot,
                            trans_err_norm: trans,
                            wall_time_ns,
                            outer_iterations: res.outer_iterations,
                            final_objective: res.final_objective,
                            converged: res.converged,
                        },
                        result: Some(res),
                        error: None,
                    }
                }
                Err(e) => {
                    // a failed solve is scored against the identity pose
                    let (rot, trans) = pose_errors(&scene.ground_truth, &Pose::default());
                    TrialOutcome {
                        record: TrialRecord {
                            noise_sigma: sigma,
                            trial_index: trial,
                            solver_name: solver.name().to_string(),
                            rot_err_frobenius: rot,
                            trans_err_norm: trans,
                            wall_time_ns,
                            outer_iterations: 0,
                            final_objective: f64::NAN,
                            converged: false,
                        },
                        result: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

/// Every noise level × trial × solver, in that nesting order.
pub fn run_sweep_detailed(cfg: &SweepConfig) -> Vec<TrialOutcome> {
    let cells: Vec<(usize, usize)> =
        (0..cfg.noise_levels.len()).flat_map(|l| (0..cfg.trials).map(move |t| (l, t))).collect();
    run_cells(cfg, &cells)
}

pub fn run_sweep(cfg: &SweepConfig) -> Vec<TrialRecord> {
    run_sweep_detailed(cfg).into_iter().map(|o| o.record).collect()
}

#[cfg(feature = "parallel")]
fn run_cells(cfg: &SweepConfig, cells: &[(usize, usize)]) -> Vec<TrialOutcome> {
    use rayon::prelude::*;
    let work = || -> Vec<TrialOutcome> {
        cells.par_iter().flat_map_iter(|&(l, t)| run_trial(cfg, l, t)).collect()
    };
    if cfg.threads == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cfg: &SweepConfig, cells: &[(usize, usize)]) -> Vec<TrialOutcome> {
    cells.iter().flat_map(|&(l, t)| run_trial(cfg, l, t)).collect()
}

/// Means over all trials of one solver at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub noise_sigma: f64,
    pub solver_name: String,
    pub mean_rot_err: f64,
    pub mean_trans_err: f64,
    pub mean_time_ns: f64,
    pub mean_iterations: f64,
    pub mean_final_objective: f64,
    pub converged_fraction: f64,
    pub trials: usize,
}

/// Groups by (noise level, solver) in first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in records {
        let key = (r.noise_sigma, r.solver_name.clone());
        if !keys.iter().any(|k| k.0.to_bits() == key.0.to_bits() && k.1 == key.1) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(sigma, solver)| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.noise_sigma.to_bits() == sigma.to_bits() && r.solver_name == solver)
                .collect();
            let n = rows.len() as f64;
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            SummaryRow {
                noise_sigma: sigma,
                solver_name: solver,
                mean_rot_err: mean(&|r| r.rot_err_frobenius),
                mean_trans_err: mean(&|r| r.trans_err_norm),
                mean_time_ns: mean(&|r| r.wall_time_ns as f64),
                mean_iterations: mean(&|r| r.outer_iterations as f64),
                mean_final_objective: mean(&|r| r.final_objective),
                converged_fraction: mean(&|r| if r.converged { 1.0 } else { 0.0 }),
                trials: rows.len(),
            }
        })
        .collect()
}
