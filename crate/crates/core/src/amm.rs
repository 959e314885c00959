//! Alternating minimization over rotation and translation.
//!
//! The outer loop alternates a steepest-descent solve on SO(3) (translation fixed)
//! with a Barzilai-Borwein gradient solve in R³ (rotation fixed) until the objective
//! stops changing.

use crate::error::PoseError;
use crate::geometry::{orthogonality_error, project_to_so3, rodrigues_step, unskew, Mat3, Pose, Rotation, Translation};
use crate::objective::Objective;

/// Largest manifold step angle the doubling loop may reach.
const MU_MAX: f64 = 1e6;
/// Step angle below which the halving loop gives up.
const MU_MIN: f64 = 1e-16;
/// Inner iterations between re-projections of the rotation iterate onto SO(3).
const REPROJECT_EVERY: usize = 50;
/// Step shortenings tried before the translation solve stops on an increase.
const MAX_BACKTRACKS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmmConfig {
    /// Outer stop threshold on `|F_k - F_{k-1}|`.
    pub tol_outer: f64,
    pub max_outer_iters: usize,
    /// Frobenius norm of the rotation step below which the rotation solve stops.
    pub tol_rotation: f64,
    /// Objective change below which the translation solve stops.
    pub tol_translation: f64,
    pub initial_mu: f64,
    pub initial_alpha: f64,
    pub use_closed_form_translation: bool,
    pub max_rotation_iters: usize,
    pub max_translation_iters: usize,
}

impl Default for AmmConfig {
    fn default() -> Self {
        AmmConfig {
            tol_outer: 1e-9,
            max_outer_iters: 100,
            tol_rotation: 1e-8,
            tol_translation: 1e-10,
            initial_mu: 1.0,
            initial_alpha: 1e-3,
            use_closed_form_translation: false,
            max_rotation_iters: 2000,
            max_translation_iters: 1000,
        }
    }
}

impl AmmConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tol_outer", self.tol_outer),
            ("tol_rotation", self.tol_rotation),
            ("tol_translation", self.tol_translation),
            ("initial_mu", self.initial_mu),
            ("initial_alpha", self.initial_alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite"));
            }
        }
        if self.max_outer_iters == 0 || self.max_rotation_iters == 0 || self.max_translation_iters == 0 {
            return Err("iteration caps must be at least 1".into());
        }
        Ok(())
    }
}

/// Diagnostics gathered over every rotation iterate of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub rotation_iterations: usize,
    pub translation_iterations: usize,
    /// Worst `|Rᵀ R - I|_F` seen over all rotation iterates.
    pub max_orthogonality_error: f64,
    /// Smallest determinant seen over all rotation iterates.
    pub min_determinant: f64,
    /// Rotation solves that ended because the step angle underflowed.
    pub step_collapses: usize,
}

impl Default for SolveStats {
    fn default() -> Self {
        SolveStats {
            rotation_iterations: 0,
            translation_iterations: 0,
            max_orthogonality_error: 0.0,
            min_determinant: f64::INFINITY,
            step_collapses: 0,
        }
    }
}

impl SolveStats {
    fn observe(&mut self, m: &Mat3) {
        self.max_orthogonality_error = self.max_orthogonality_error.max(orthogonality_error(m));
        self.min_determinant = self.min_determinant.min(m.determinant());
    }

    fn merge(&mut self, other: &SolveStats) {
        self.rotation_iterations += other.rotation_iterations;
        self.translation_iterations += other.translation_iterations;
        self.max_orthogonality_error = self.max_orthogonality_error.max(other.max_orthogonality_error);
        self.min_determinant = self.min_determinant.min(other.min_determinant);
        self.step_collapses += other.step_collapses;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmmResult {
    pub pose: Pose,
    pub final_objective: f64,
    pub outer_iterations: usize,
    /// False only when the outer iteration cap stopped the solve.
    pub converged: bool,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSolve {
    pub rotation: Rotation,
    pub value: f64,
    pub iterations: usize,
    /// The step angle fell below 1e-16 before a sufficient decrease was found; the
    /// returned rotation is the last accepted iterate.
    pub step_collapsed: bool,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationSolve {
    pub translation: Translation,
    pub value: f64,
    pub iterations: usize,
    /// Successive gradients coincided (`|Δ∇h| < 1e-16`); treated as converged.
    pub zero_gradient_delta: bool,
}

/// Alternating minimization starting from `R₀ = I` and the given translation.
pub fn solve_amm<O: Objective + ?Sized>(
    objective: &O,
    t0: &Translation,
    config: &AmmConfig,
) -> Result<AmmResult, PoseError> {
    solve_amm_from(objective, &Pose::new(Rotation::identity(), *t0), config)
}

/// Alternating minimization seeded with a full initial pose.
pub fn solve_amm_from<O: Objective + ?Sized>(
    objective: &O,
    initial: &Pose,
    config: &AmmConfig,
) -> Result<AmmResult, PoseError> {
    if !initial.translation.iter().all(|v| v.is_finite()) {
        return Err(PoseError::NonFiniteInput);
    }
    let mut rotation = initial.rotation;
    let mut translation = initial.translation;
    let mut previous = finite(objective.value(rotation.matrix(), &translation))?;
    let mut trace = Vec::new();
    let mut stats = SolveStats::default();
    stats.observe(rotation.matrix());
    let mut converged = false;

    for _ in 0..config.max_outer_iters {
        let rot = rotation_subsolve(objective, &rotation, &translation, config)?;
        stats.merge(&rot.stats);
        rotation = rot.rotation;

        let closed = if config.use_closed_form_translation {
            objective.closed_form_translation(&rotation)
        } else {
            None
        };
        translation = match closed {
            Some(Ok(t)) if objective.value(rotation.matrix(), &t) <= rot.value => t,
            _ => {
                let tr = translation_subsolve(objective, &translation, &rotation, config)?;
                stats.translation_iterations += tr.iterations;
                tr.translation
            }
        };

        let current = finite(objective.value(rotation.matrix(), &translation))?;
        trace.push(current);
        if (current - previous).abs() < config.tol_outer {
            converged = true;
            break;
        }
        previous = current;
    }

    Ok(AmmResult {
        pose: Pose::new(rotation, translation),
        final_objective: *trace.last().unwrap_or(&previous),
        outer_iterations: trace.len(),
        converged,
        objective_trace: trace,
        stats,
    })
}

fn finite(v: f64) -> Result<f64, PoseError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PoseError::NonFiniteObjective)
    }
}

/// One accepted (or collapsed) step of the rotation solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationStep {
    /// `P X`, or `X` itself when the step collapsed or the gradient vanished.
    pub rotation: Mat3,
    pub value: f64,
    /// Step angle that produced `rotation`; carried into the next step.
    pub mu: f64,
    /// `z = tr(Z Zᵀ) / 2`.
    pub rate: f64,
    pub collapsed: bool,
}

/// Doubling/halving step from `x` along the Riemannian gradient, starting at angle `mu`.
///
/// With `Z = ∇g Xᵀ - X ∇gᵀ` and `P(μ) = exp(μ Zᵀ)`, the angle is doubled while
/// `P(2μ)` still decreases `g` by at least `μ z`, then halved until `P(μ)` decreases
/// it by at least `μ z / 2`.
pub fn rotation_step<O: Objective + ?Sized>(
    objective: &O,
    x: &Mat3,
    translation: &Translation,
    mu: f64,
) -> Result<RotationStep, PoseError> {
    let g = |m: &Mat3| objective.value(m, translation);
    let gx = finite(g(x))?;
    let grad = objective.rotation_gradient(x, translation);
    let z = grad * x.transpose() - x * grad.transpose();
    let rate = 0.5 * (z * z.transpose()).trace();
    if !rate.is_finite() {
        return Err(PoseError::NonFiniteObjective);
    }
    let stay = RotationStep { rotation: *x, value: gx, mu, rate, collapsed: false };
    if rate == 0.0 {
        return Ok(stay);
    }
    // exp(μ Zᵀ) is the rotation about unskew(Zᵀ) by μ |unskew(Zᵀ)|
    let axis = unskew(&z.transpose());
    let step = |angle: f64| *rodrigues_step(&axis, angle).matrix();

    let mut mu = mu;
    let mut p = step(mu);
    let mut q = step(2.0 * mu);
    while mu < MU_MAX && gx - g(&(q * x)) >= mu * rate {
        p = q;
        mu *= 2.0;
        q = step(2.0 * mu);
    }
    let mut gp = g(&(p * x));
    while !(gx - gp >= 0.5 * mu * rate) {
        mu *= 0.5;
        if mu < MU_MIN {
            return Ok(RotationStep { mu, collapsed: true, ..stay });
        }
        p = step(mu);
        gp = g(&(p * x));
    }
    Ok(RotationStep { rotation: p * x, value: finite(gp)?, mu, rate, collapsed: false })
}

/// Steepest descent on SO(3) with translation held fixed, repeating [`rotation_step`]
/// until the iterate moves less than `tol_rotation`. The iterate is re-projected onto
/// SO(3) every 50 steps to shed accumulated rounding.
pub fn rotation_subsolve<O: Objective + ?Sized>(
    objective: &O,
    initial: &Rotation,
    translation: &Translation,
    config: &AmmConfig,
) -> Result<RotationSolve, PoseError> {
    let mut x = *initial.matrix();
    let mut gx = finite(objective.value(&x, translation))?;
    let mut mu = config.initial_mu;
    let mut stats = SolveStats::default();
    stats.observe(&x);
    let mut collapsed = false;
    let mut iterations = 0;

    while iterations < config.max_rotation_iters {
        let s = rotation_step(objective, &x, translation, mu)?;
        if s.collapsed {
            collapsed = true;
            break;
        }
        if s.rate == 0.0 {
            break;
        }
        mu = s.mu;
        let mut next = s.rotation;
        let mut value = s.value;
        iterations += 1;
        if iterations % REPROJECT_EVERY == 0 {
            next = *project_to_so3(&next)?.matrix();
            value = finite(objective.value(&next, translation))?;
        }
        let delta = (next - x).norm();
        x = next;
        gx = value;
        stats.observe(&x);
        if delta < config.tol_rotation {
            break;
        }
    }

    stats.rotation_iterations = iterations;
    if collapsed {
        stats.step_collapses = 1;
    }
    Ok(RotationSolve {
        rotation: Rotation::from_matrix_unchecked(x),
        value: gx,
        iterations,
        step_collapsed: collapsed,
        stats,
    })
}

/// Gradient descent in R³ with rotation held fixed, using the Barzilai-Borwein step
/// `α = Δxᵀ Δ∇h / |Δ∇h|²`. A step that would increase the objective is shortened;
/// if 30 shortenings do not help, the solve stops at the previous iterate. It also
/// stops once the objective change drops below the tolerance.
pub fn translation_subsolve<O: Objective + ?Sized>(
    objective: &O,
    initial: &Translation,
    rotation: &Rotation,
    config: &AmmConfig,
) -> Result<TranslationSolve, PoseError> {
    let r = rotation.matrix();
    let h = |t: &Translation| objective.value(r, t);
    let mut x = *initial;
    let mut hx = finite(h(&x))?;
    let mut grad = objective.translation_gradient(r, &x);
    let mut alpha = config.initial_alpha;
    let mut zero_delta = false;
    let mut iterations = 0;

    while iterations < config.max_translation_iters {
        if grad.norm_squared() == 0.0 {
            break;
        }
        let mut next = x - alpha * grad;
        let mut h_next = h(&next);
        // The seed step carries no curvature information and BB steps are not monotone,
        // so shorten a step that would increase h before giving up on it.
        let shrink = if iterations == 0 { 0.1 } else { 0.5 };
        let mut tries = 0;
        while !(h_next <= hx) && tries < MAX_BACKTRACKS {
            alpha *= shrink;
            next = x - alpha * grad;
            h_next = h(&next);
            tries += 1;
        }
        if !(h_next <= hx) {
            break;
        }
        let grad_next = objective.translation_gradient(r, &next);
        let dx = next - x;
        let dg = grad_next - grad;
        let delta = (h_next - hx).abs();
        x = next;
        hx = h_next;
        grad = grad_next;
        iterations += 1;

        let dg_norm2 = dg.norm_squared();
        if dg_norm2.sqrt() < 1e-16 {
            zero_delta = true;
            break;
        }
        alpha = dx.dot(&dg) / dg_norm2;
        if delta < config.tol_translation || !(alpha > 0.0 && alpha.is_finite()) {
            break;
        }
    }

    Ok(TranslationSolve { translation: x, value: hx, iterations, zero_gradient_delta: zero_delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use approx::assert_relative_eq;

    struct Constant;

    impl Objective for Constant {
        fn value(&self, _: &Mat3, _: &Translation) -> f64 {
            1.0
        }
        fn rotation_gradient(&self, _: &Mat3, _: &Translation) -> Mat3 {
            Mat3::zeros()
        }
        fn translation_gradient(&self, _: &Mat3, _: &Translation) -> Vec3 {
            Vec3::zeros()
        }
    }

    /// `|R - R*|² + |t - t*|²`
    struct Separable {
        r: Mat3,
        t: Vec3,
    }

    impl Objective for Separable {
        fn value(&self, r: &Mat3, t: &Translation) -> f64 {
            (r - self.r).norm_squared() + (t - self.t).norm_squared()
        }
        fn rotation_gradient(&self, r: &Mat3, _: &Translation) -> Mat3 {
            2.0 * (r - self.r)
        }
        fn translation_gradient(&self, _: &Mat3, t: &Translation) -> Vec3 {
            2.0 * (t - self.t)
        }
    }

    #[test]
    fn constant_objective_stops_after_one_iteration() {
        let res = solve_amm(&Constant, &Vec3::zeros(), &AmmConfig::default()).unwrap();
        assert_eq!(res.outer_iterations, 1);
        assert!(res.converged);
        assert_eq!(res.objective_trace, vec![1.0]);
    }

    #[test]
    fn zero_gradient_keeps_initial_rotation() {
        let r = Rotation::from_axis_angle(&Vec3::new(1.0, 2.0, 3.0), 0.4);
        let obj = Separable { r: *r.matrix(), t: Vec3::zeros() };
        let out = rotation_subsolve(&obj, &r, &Vec3::zeros(), &AmmConfig::default()).unwrap();
        assert_eq!(out.rotation, r);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn rotation_solve_finds_target() {
        let target = Rotation::from_axis_angle(&Vec3::new(-0.3, 0.8, 0.1), 2.2);
        let obj = Separable { r: *target.matrix(), t: Vec3::zeros() };
        let out = rotation_subsolve(&obj, &Rotation::identity(), &Vec3::zeros(), &AmmConfig::default()).unwrap();
        assert!((out.rotation.matrix() - target.matrix()).norm() < 1e-6);
        assert!(out.stats.max_orthogonality_error < 1e-9);
    }

    #[test]
    fn translation_solve_isotropic_quadratic() {
        let obj = Separable { r: Mat3::identity(), t: Vec3::new(1.0, -2.0, 0.5) };
        let out = translation_subsolve(&obj, &Vec3::zeros(), &Rotation::identity(), &AmmConfig::default()).unwrap();
        assert_relative_eq!(out.translation, obj.t, epsilon = 1e-8);
    }

    #[test]
    fn translation_solve_at_minimum_is_noop() {
        let obj = Separable { r: Mat3::identity(), t: Vec3::new(1.0, -2.0, 0.5) };
        let out = translation_subsolve(&obj, &obj.t, &Rotation::identity(), &AmmConfig::default()).unwrap();
        assert_eq!(out.translation, obj.t);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn config_validation() {
        assert!(AmmConfig::default().validate().is_ok());
        let bad = AmmConfig { tol_outer: 0.0, ..AmmConfig::default() };
        assert!(bad.validate().is_err());
        let bad = AmmConfig { max_outer_iters: 0, ..AmmConfig::default() };
        assert!(bad.validate().is_err());
    }
}
